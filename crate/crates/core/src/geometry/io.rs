use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Axis, MaterialGrid, Scene};
use crate::error::{Error, Result};

const GRID_MAGIC: &[u8; 8] = b"PFGRID01";

pub fn write_scene(scene: &Scene, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, scene)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_scene(path: &Path) -> Result<Scene> {
    let scene: Scene = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    scene.validate()?;
    if scene.port.is_none() {
        log::warn!("scene {} has no port", path.display());
    }
    Ok(scene)
}

/// Writes the little-endian grid file: magic, `nx ny nz` as u32,
/// `dx dy dz` as f64 meters, the permittivity and conductivity arrays, then
/// the x-, y- and z-edge PEC masks packed LSB-first.
///
/// Sheets, port and origin are not part of the format.
pub fn write_grid(grid: &MaterialGrid, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(GRID_MAGIC)?;
    for n in grid.dims() {
        let n = u32::try_from(n).map_err(|_| Error::Format("grid dimension exceeds u32".into()))?;
        w.write_all(&n.to_le_bytes())?;
    }
    for d in grid.spacing() {
        w.write_all(&d.to_le_bytes())?;
    }
    for v in grid.eps_r.iter().chain(&grid.sigma) {
        w.write_all(&v.to_le_bytes())?;
    }
    for mask in &grid.pec {
        w.write_all(&pack_bits(mask))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_grid(path: &Path) -> Result<MaterialGrid> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != GRID_MAGIC {
        return Err(Error::Format(format!("{} is not a grid file", path.display())));
    }
    let mut dims = [0usize; 3];
    for d in &mut dims {
        let mut b = [0u8; 4];
        r.read_exact(&mut b)?;
        *d = u32::from_le_bytes(b) as usize;
    }
    let mut spacing = [0f64; 3];
    for s in &mut spacing {
        *s = read_f64(&mut r)?;
    }
    let mut grid = MaterialGrid::vacuum(dims[0], dims[1], dims[2], spacing);
    for v in grid.eps_r.iter_mut() {
        *v = read_f64(&mut r)?;
    }
    for v in grid.sigma.iter_mut() {
        *v = read_f64(&mut r)?;
    }
    for a in Axis::ALL {
        let n = grid.pec[a.index()].len();
        let mut bytes = vec![0u8; n.div_ceil(8)];
        r.read_exact(&mut bytes)?;
        grid.pec[a.index()] = unpack_bits(&bytes, n);
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Format(format!("{} trailing bytes in grid file", rest.len())));
    }
    Ok(grid)
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn pack_bits(bits: &[bool]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, _) in bits.iter().enumerate().filter(|(_, &b)| b) {
        out[i / 8] |= 1 << (i % 8);
    }
    out
}

fn unpack_bits(bytes: &[u8], n: usize) -> Vec<bool> {
    (0..n).map(|i| bytes[i / 8] & (1 << (i % 8)) != 0).collect()
}

/// ASCII STL of the rasterized metal sheets, two facets per metal face cell,
/// in millimeters.
pub fn write_stl(grid: &MaterialGrid, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "solid patchfield")?;
    let (dx, dy) = (grid.dx * 1e3, grid.dy * 1e3);
    let [ox, oy, oz] = grid.origin_m.map(|v| v * 1e3);
    for sheet in &grid.sheets {
        let z = oz + sheet.k as f64 * grid.dz * 1e3;
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                if !sheet.mask[i + grid.nx * j] {
                    continue;
                }
                let (x0, y0) = (ox + i as f64 * dx, oy + j as f64 * dy);
                let (x1, y1) = (x0 + dx, y0 + dy);
                for tri in [[[x0, y0], [x1, y0], [x1, y1]], [[x0, y0], [x1, y1], [x0, y1]]] {
                    writeln!(w, "  facet normal 0 0 1\n    outer loop")?;
                    for [x, y] in tri {
                        writeln!(w, "      vertex {x:.6} {y:.6} {z:.6}")?;
                    }
                    writeln!(w, "    endloop\n  endfacet")?;
                }
            }
        }
    }
    writeln!(w, "endsolid patchfield")?;
    w.flush()?;
    Ok(())
}
