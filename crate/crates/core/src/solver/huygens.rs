//! Running DFTs of tangential fields on a closed box.
//!
//! Surface samples sit at the centers of the box's face cells. Each
//! tangential component is interpolated from the Yee samples around it
//! (two for E, four for H), and every E sample is transformed with its own
//! time `n dt` and every H sample with `(n + 1/2) dt`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::engine::{FieldComponent, Fields, Lattice};
use super::{HuygensSpec, SourceSpec};
use crate::error::{Error, Result};
use crate::geometry::{Axis, MaterialGrid};
use crate::par::{for_each_chunk, Parallelism};

const MAGIC: &[u8; 8] = b"PFHUY001";

/// One face of the box. Points run over the two tangential axes in
/// ascending axis order, first axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct HuygensFace {
    pub axis: usize,
    /// -1 for the low face, +1 for the high face.
    pub side: i8,
    pub dims: [usize; 2],
    /// `[freq][point][Et1, Et2, Ht1, Ht2]`, flattened.
    pub data: Vec<Complex64>,
}

impl HuygensFace {
    pub fn tangential_axes(&self) -> [usize; 2] {
        tangential(self.axis)
    }

    pub fn points(&self) -> usize {
        self.dims[0] * self.dims[1]
    }

    pub fn sample(&self, freq: usize, point: usize) -> [Complex64; 4] {
        let o = (freq * self.points() + point) * 4;
        [self.data[o], self.data[o + 1], self.data[o + 2], self.data[o + 3]]
    }
}

/// Frequency-domain tangential fields on the Huygens box.
#[derive(Debug, Clone, PartialEq)]
pub struct HuygensData {
    pub frequencies_hz: Vec<f64>,
    pub spacing_m: [f64; 3],
    /// Grid origin; point coordinates are absolute.
    pub origin_m: [f64; 3],
    /// Box corners as lattice node indices.
    pub lo: [usize; 3],
    pub hi: [usize; 3],
    pub faces: Vec<HuygensFace>,
}

fn tangential(axis: usize) -> [usize; 2] {
    match axis {
        0 => [1, 2],
        1 => [0, 2],
        _ => [0, 1],
    }
}

impl HuygensData {
    /// Absolute position of `point` on `face`.
    pub fn point_position(&self, face: &HuygensFace, point: usize) -> [f64; 3] {
        let [t1, t2] = face.tangential_axes();
        let (m1, m2) = (point % face.dims[0], point / face.dims[0]);
        let mut r = [0.0; 3];
        let plane = if face.side < 0 { self.lo[face.axis] } else { self.hi[face.axis] };
        r[face.axis] = self.origin_m[face.axis] + plane as f64 * self.spacing_m[face.axis];
        r[t1] = self.origin_m[t1] + (self.lo[t1] + m1) as f64 * self.spacing_m[t1] + 0.5 * self.spacing_m[t1];
        r[t2] = self.origin_m[t2] + (self.lo[t2] + m2) as f64 * self.spacing_m[t2] + 0.5 * self.spacing_m[t2];
        r
    }

    pub fn face_cell_area(&self, face: &HuygensFace) -> f64 {
        let [t1, t2] = face.tangential_axes();
        self.spacing_m[t1] * self.spacing_m[t2]
    }

    pub fn frequency_index(&self, f: f64) -> Result<usize> {
        self.frequencies_hz
            .iter()
            .position(|&g| (g - f).abs() <= 1e-9 * f.abs().max(1.0))
            .ok_or(Error::FrequencyLookup(f))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_all(&(self.frequencies_hz.len() as u32).to_le_bytes())?;
        for f in &self.frequencies_hz {
            w.write_all(&f.to_le_bytes())?;
        }
        for v in self.spacing_m.iter().chain(&self.origin_m) {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in self.lo.iter().chain(&self.hi) {
            w.write_all(&(*v as u32).to_le_bytes())?;
        }
        w.write_all(&(self.faces.len() as u32).to_le_bytes())?;
        for face in &self.faces {
            w.write_all(&[face.axis as u8, face.side as u8])?;
            w.write_all(&(face.dims[0] as u32).to_le_bytes())?;
            w.write_all(&(face.dims[1] as u32).to_le_bytes())?;
            for c in &face.data {
                w.write_all(&c.re.to_le_bytes())?;
                w.write_all(&c.im.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<HuygensData> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format(format!("{} is not a Huygens surface file", path.display())));
        }
        let nf = read_u32(&mut r)? as usize;
        let frequencies_hz = (0..nf).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
        let mut spacing_m = [0.0; 3];
        let mut origin_m = [0.0; 3];
        for v in spacing_m.iter_mut().chain(origin_m.iter_mut()) {
            *v = read_f64(&mut r)?;
        }
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for v in lo.iter_mut().chain(hi.iter_mut()) {
            *v = read_u32(&mut r)? as usize;
        }
        let nfaces = read_u32(&mut r)? as usize;
        let mut faces = Vec::with_capacity(nfaces);
        for _ in 0..nfaces {
            let mut head = [0u8; 2];
            r.read_exact(&mut head)?;
            let dims = [read_u32(&mut r)? as usize, read_u32(&mut r)? as usize];
            let n = nf * dims[0] * dims[1] * 4;
            let mut data = Vec::with_capacity(n);
            for _ in 0..n {
                let re = read_f64(&mut r)?;
                let im = read_f64(&mut r)?;
                data.push(Complex64::new(re, im));
            }
            if head[0] > 2 {
                return Err(Error::Format("bad face axis in Huygens file".into()));
            }
            faces.push(HuygensFace { axis: head[0] as usize, side: head[1] as i8, dims, data });
        }
        Ok(HuygensData { frequencies_hz, spacing_m, origin_m, lo, hi, faces })
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Up to four weighted lattice samples.
#[derive(Debug, Clone, Copy)]
struct Stencil {
    comp: FieldComponent,
    idx: [usize; 4],
    w: [f64; 4],
}

impl Stencil {
    /// Interpolates `comp` at a position given in half-cell units.
    fn at(lat: &Lattice, comp: FieldComponent, pos2: [usize; 3]) -> Stencil {
        let o = comp.offset2();
        let mut per_axis: [[(usize, f64); 2]; 3] = [[(0, 0.0); 2]; 3];
        for a in 0..3 {
            let rel = pos2[a] - o[a];
            per_axis[a] = if rel.is_multiple_of(2) {
                [(rel / 2, 1.0), (rel / 2, 0.0)]
            } else {
                [((rel - 1) / 2, 0.5), (rel.div_ceil(2), 0.5)]
            };
        }
        let mut st = Stencil { comp, idx: [0; 4], w: [0.0; 4] };
        let mut n = 0;
        for &(i, wi) in &per_axis[0] {
            for &(j, wj) in &per_axis[1] {
                for &(k, wk) in &per_axis[2] {
                    let w = wi * wj * wk;
                    if w != 0.0 {
                        st.idx[n] = lat.idx(i, j, k);
                        st.w[n] = w;
                        n += 1;
                    }
                }
            }
        }
        st
    }

    #[inline]
    fn eval(&self, f: &[f64]) -> f64 {
        self.w[0] * f[self.idx[0]] + self.w[1] * f[self.idx[1]] + self.w[2] * f[self.idx[2]] + self.w[3] * f[self.idx[3]]
    }
}

pub(crate) struct HuygensAccumulator {
    freqs: Vec<f64>,
    faces: Vec<(usize, i8, [usize; 2])>,
    lo: [usize; 3],
    hi: [usize; 3],
    spacing: [f64; 3],
    origin: [f64; 3],
    e_st: Vec<Stencil>,
    h_st: Vec<Stencil>,
    e_acc: Vec<Complex64>,
    h_acc: Vec<Complex64>,
    buf: Vec<f64>,
    dt: f64,
    stride: usize,
}

impl HuygensAccumulator {
    pub fn new(grid: &MaterialGrid, lat: &Lattice, np: usize, spec: &HuygensSpec, dt: f64, source: &SourceSpec) -> Result<Self> {
        if spec.frequencies_hz.is_empty() || spec.frequencies_hz.iter().any(|f| !(*f > 0.0)) {
            return Err(Error::Config("Huygens box needs positive frequencies".into()));
        }
        let n = grid.dims();
        let off = np + spec.gap_cells;
        let lo = [off; 3];
        let hi = n.map(|v| v.saturating_sub(off));
        if (0..3).any(|a| hi[a] <= lo[a] + 1 || lo[a] == 0) {
            return Err(Error::Config("grid too small for the Huygens box".into()));
        }
        check_enclosure(grid, lo, hi)?;
        let mut faces = Vec::new();
        let mut e_st = Vec::new();
        let mut h_st = Vec::new();
        for axis in 0..3 {
            let [t1, t2] = tangential(axis);
            for side in [-1i8, 1] {
                let plane = if side < 0 { lo[axis] } else { hi[axis] };
                let dims = [hi[t1] - lo[t1], hi[t2] - lo[t2]];
                for m2 in 0..dims[1] {
                    for m1 in 0..dims[0] {
                        let mut pos2 = [0usize; 3];
                        pos2[axis] = 2 * plane;
                        pos2[t1] = 2 * (lo[t1] + m1) + 1;
                        pos2[t2] = 2 * (lo[t2] + m2) + 1;
                        for t in [t1, t2] {
                            e_st.push(Stencil::at(lat, FieldComponent::electric(t), pos2));
                        }
                        for t in [t1, t2] {
                            h_st.push(Stencil::at(lat, FieldComponent::magnetic(t), pos2));
                        }
                    }
                }
                faces.push((axis, side, dims));
            }
        }
        let f_top = spec.frequencies_hz.iter().cloned().fold(source.band_edges(60.0).1, f64::max);
        // at least 20 samples per period of the highest significant frequency
        let stride = ((1.0 / (20.0 * f_top * dt)).floor() as usize).max(1);
        let nf = spec.frequencies_hz.len();
        Ok(HuygensAccumulator {
            freqs: spec.frequencies_hz.clone(),
            faces,
            lo,
            hi,
            spacing: grid.spacing(),
            origin: grid.origin_m,
            e_acc: vec![Complex64::new(0.0, 0.0); nf * e_st.len()],
            h_acc: vec![Complex64::new(0.0, 0.0); nf * h_st.len()],
            buf: vec![0.0; e_st.len()],
            e_st,
            h_st,
            dt,
            stride,
        })
    }

    fn accumulate(acc: &mut [Complex64], buf: &[f64], freqs: &[f64], t: f64, weight: f64, mode: Parallelism) {
        let n = buf.len();
        for_each_chunk(mode, acc, n, |fi, chunk| {
            let ph = Complex64::from_polar(weight, -2.0 * std::f64::consts::PI * freqs[fi] * t);
            for (a, &v) in chunk.iter_mut().zip(buf) {
                *a += ph * v;
            }
        });
    }

    /// E sample at time `step * dt`.
    pub fn sample_e(&mut self, f: &Fields, step: usize, mode: Parallelism) {
        if !step.is_multiple_of(self.stride) {
            return;
        }
        for (b, st) in self.buf.iter_mut().zip(&self.e_st) {
            *b = st.eval(f.get(st.comp));
        }
        let w = self.dt * self.stride as f64;
        Self::accumulate(&mut self.e_acc, &self.buf, &self.freqs, step as f64 * self.dt, w, mode);
    }

    /// H sample at time `(n + 1/2) dt`.
    pub fn sample_h(&mut self, f: &Fields, n: usize, mode: Parallelism) {
        if !n.is_multiple_of(self.stride) {
            return;
        }
        for (b, st) in self.buf.iter_mut().zip(&self.h_st) {
            *b = st.eval(f.get(st.comp));
        }
        let w = self.dt * self.stride as f64;
        Self::accumulate(&mut self.h_acc, &self.buf, &self.freqs, (n as f64 + 0.5) * self.dt, w, mode);
    }

    pub fn finish(self) -> HuygensData {
        let npts_total = self.e_st.len() / 2;
        let nf = self.freqs.len();
        let mut faces = Vec::new();
        let mut start = 0;
        for (axis, side, dims) in self.faces {
            let np = dims[0] * dims[1];
            let mut data = Vec::with_capacity(nf * np * 4);
            for fi in 0..nf {
                for q in start..start + np {
                    let base = fi * npts_total * 2 + 2 * q;
                    data.push(self.e_acc[base]);
                    data.push(self.e_acc[base + 1]);
                    data.push(self.h_acc[base]);
                    data.push(self.h_acc[base + 1]);
                }
            }
            faces.push(HuygensFace { axis, side, dims, data });
            start += np;
        }
        HuygensData {
            frequencies_hz: self.freqs,
            spacing_m: self.spacing,
            origin_m: self.origin,
            lo: self.lo,
            hi: self.hi,
            faces,
        }
    }
}

/// The box must enclose every non-vacuum cell and every PEC edge.
fn check_enclosure(grid: &MaterialGrid, lo: [usize; 3], hi: [usize; 3]) -> Result<()> {
    for k in 0..grid.nz {
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let c = grid.cell_index(i, j, k);
                let inside = i >= lo[0] && i < hi[0] && j >= lo[1] && j < hi[1] && k >= lo[2] && k < hi[2];
                if !inside && (grid.eps_r[c] != 1.0 || grid.sigma[c] != 0.0) {
                    return Err(Error::Config(format!("material cell ({i}, {j}, {k}) lies outside the Huygens box")));
                }
            }
        }
    }
    for axis in Axis::ALL {
        let [ex, ey, ez] = grid.edge_dims(axis);
        for k in 0..ez {
            for j in 0..ey {
                for i in 0..ex {
                    if !grid.is_pec(axis, i, j, k) {
                        continue;
                    }
                    let n = [i, j, k];
                    let a = axis.index();
                    let inside = (0..3).all(|q| {
                        if q == a {
                            n[q] >= lo[q] && n[q] < hi[q]
                        } else {
                            n[q] > lo[q] && n[q] < hi[q]
                        }
                    });
                    if !inside {
                        return Err(Error::Config(format!("PEC edge {n:?} lies on or outside the Huygens box")));
                    }
                }
            }
        }
    }
    Ok(())
}
