use serde::{Deserialize, Serialize};

use super::{Layer, Material, Operation, Scene, Shape};
use crate::error::{Error, Result};
use crate::EPS0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn from_index(i: usize) -> Axis {
        match i {
            0 => Axis::X,
            1 => Axis::Y,
            _ => Axis::Z,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoxelOptions {
    pub cell_mm: f64,
    /// Air added around the scene's bounding box on every side.
    pub air_margin_mm: f64,
    /// Extra cells beyond the air margin, typically the absorbing layer.
    pub boundary_cells: usize,
    /// Frequency at which the loss tangent is turned into a conductivity.
    pub reference_frequency_hz: f64,
    pub max_cells: usize,
}

impl Default for VoxelOptions {
    fn default() -> Self {
        VoxelOptions {
            cell_mm: 0.15,
            air_margin_mm: 0.0,
            boundary_cells: 0,
            reference_frequency_hz: 10e9,
            max_cells: 60_000_000,
        }
    }
}

/// Face-cell occupancy of one zero-thickness metal sheet at node plane `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetalSheet {
    pub layer: Layer,
    pub k: usize,
    /// `nx * ny` flags, x fastest.
    pub mask: Vec<bool>,
}

/// A port mapped onto grid edges: `cells` consecutive edges along `axis`
/// starting at grid node `node`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortSpan {
    pub node: [usize; 3],
    pub axis: Axis,
    pub cells: usize,
    pub resistance_ohms: f64,
}

/// Rasterized scene on a uniform Yee grid.
///
/// Cell arrays hold `nx * ny * nz` values. Edge flag arrays use the
/// staggered extents: x-edges `nx * (ny+1) * (nz+1)`, y-edges
/// `(nx+1) * ny * (nz+1)`, z-edges `(nx+1) * (ny+1) * nz`. Every array is
/// x-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialGrid {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    /// Cell sizes in meters.
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    /// Position of node (0, 0, 0) in meters.
    pub origin_m: [f64; 3],
    pub eps_r: Vec<f64>,
    /// Conductivity in S/m.
    pub sigma: Vec<f64>,
    pub pec: [Vec<bool>; 3],
    pub sheets: Vec<MetalSheet>,
    pub port: Option<PortSpan>,
    pub warnings: Vec<String>,
}

impl MaterialGrid {
    /// All-vacuum grid with no metal.
    pub fn vacuum(nx: usize, ny: usize, nz: usize, d: [f64; 3]) -> MaterialGrid {
        let n = nx * ny * nz;
        let mut g = MaterialGrid {
            nx,
            ny,
            nz,
            dx: d[0],
            dy: d[1],
            dz: d[2],
            origin_m: [0.0; 3],
            eps_r: vec![1.0; n],
            sigma: vec![0.0; n],
            pec: [Vec::new(), Vec::new(), Vec::new()],
            sheets: Vec::new(),
            port: None,
            warnings: Vec::new(),
        };
        for a in Axis::ALL {
            let [ex, ey, ez] = g.edge_dims(a);
            g.pec[a.index()] = vec![false; ex * ey * ez];
        }
        g
    }

    pub fn cells(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn spacing(&self) -> [f64; 3] {
        [self.dx, self.dy, self.dz]
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    #[inline]
    pub fn cell_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.nx * (j + self.ny * k)
    }

    /// Extents of the edge array for edges parallel to `axis`.
    pub fn edge_dims(&self, axis: Axis) -> [usize; 3] {
        let mut d = [self.nx + 1, self.ny + 1, self.nz + 1];
        d[axis.index()] -= 1;
        d
    }

    #[inline]
    pub fn edge_index(&self, axis: Axis, i: usize, j: usize, k: usize) -> usize {
        let d = self.edge_dims(axis);
        i + d[0] * (j + d[1] * k)
    }

    pub fn is_pec(&self, axis: Axis, i: usize, j: usize, k: usize) -> bool {
        self.pec[axis.index()][self.edge_index(axis, i, j, k)]
    }

    pub fn set_pec(&mut self, axis: Axis, i: usize, j: usize, k: usize) {
        let idx = self.edge_index(axis, i, j, k);
        self.pec[axis.index()][idx] = true;
    }

    /// Marks every tangential edge of an `[lo, hi]` node rectangle in the
    /// plane normal to z as PEC.
    pub fn set_pec_plate_z(&mut self, k: usize, lo: [usize; 2], hi: [usize; 2]) {
        for j in lo[1]..=hi[1] {
            for i in lo[0]..hi[0] {
                self.set_pec(Axis::X, i, j, k);
            }
        }
        for j in lo[1]..hi[1] {
            for i in lo[0]..=hi[0] {
                self.set_pec(Axis::Y, i, j, k);
            }
        }
    }

    pub fn set_block(&mut self, lo: [usize; 3], hi: [usize; 3], eps_r: f64, sigma: f64) {
        for k in lo[2]..hi[2] {
            for j in lo[1]..hi[1] {
                for i in lo[0]..hi[0] {
                    let c = self.cell_index(i, j, k);
                    self.eps_r[c] = eps_r;
                    self.sigma[c] = sigma;
                }
            }
        }
    }

    /// Metal area covered by the rasterized sheets of `layer`, in mm^2.
    pub fn sheet_area_mm2(&self, layer: Layer) -> f64 {
        let face = self.dx * self.dy * 1e6;
        self.sheets
            .iter()
            .filter(|s| s.layer == layer)
            .map(|s| s.mask.iter().filter(|&&m| m).count() as f64 * face)
            .sum()
    }

    pub fn pec_edge_count(&self) -> usize {
        self.pec.iter().map(|p| p.iter().filter(|&&b| b).count()).sum()
    }

    /// Node coordinate (meters) along `axis`.
    pub fn node_position(&self, axis: Axis, n: usize) -> f64 {
        self.origin_m[axis.index()] + n as f64 * self.spacing()[axis.index()]
    }
}

struct AxisLayout {
    origin_mm: f64,
    d_mm: f64,
    n: usize,
}

fn layout_axis(lo: f64, hi: f64, d_mm: f64, margin_mm: f64, boundary: usize) -> AxisLayout {
    let core = ((hi - lo) / d_mm - 1e-9).ceil().max(0.0) as usize;
    let margin = (margin_mm / d_mm - 1e-9).ceil().max(0.0) as usize;
    let pad = margin + boundary;
    AxisLayout {
        origin_mm: lo - pad as f64 * d_mm,
        d_mm,
        n: (core + 2 * pad).max(1),
    }
}

fn cell_range(lo: f64, hi: f64, ax: &AxisLayout) -> std::ops::Range<usize> {
    // candidate cells whose centers may fall in [lo, hi]
    let a = ((lo - ax.origin_mm) / ax.d_mm - 0.5).floor().max(0.0) as usize;
    let b = (((hi - ax.origin_mm) / ax.d_mm - 0.5).ceil() + 1.0).max(0.0) as usize;
    a.min(ax.n)..b.min(ax.n)
}

fn apply_to_mask<T: Copy>(mask: &mut [T], nx: usize, shape: &Shape, ax: &AxisLayout, ay: &AxisLayout, value: T) {
    let (lo, hi) = shape.bbox();
    for j in cell_range(lo[1], hi[1], ay) {
        let y = ay.origin_mm + (j as f64 + 0.5) * ay.d_mm;
        for i in cell_range(lo[0], hi[0], ax) {
            let x = ax.origin_mm + (i as f64 + 0.5) * ax.d_mm;
            if shape.contains([x, y]) {
                mask[i + nx * j] = value;
            }
        }
    }
}

/// Staircase rasterization of `scene`.
///
/// Sheets become PEC flags on the tangential edges of their node plane;
/// an edge is PEC when either face cell it borders is metal. Substrate
/// cells take the permittivity and the conductivity
/// `2 pi f_ref eps0 eps_r tan_delta`. Membership is decided at cell (or
/// face) centers, with primitives applied in scene order. Along z the
/// substrate is split into an integer number of cells, so `dz` may differ
/// slightly from `cell_mm`.
pub fn voxelize(scene: &Scene, opts: &VoxelOptions) -> Result<MaterialGrid> {
    if !(opts.cell_mm > 0.0) || !opts.cell_mm.is_finite() {
        return Err(Error::domain(format!("cell size {} mm must be positive", opts.cell_mm)));
    }
    scene.validate()?;
    let cell = opts.cell_mm;
    let b = &scene.bbox;
    let ax = layout_axis(b.min[0], b.max[0], cell, opts.air_margin_mm, opts.boundary_cells);
    let ay = layout_axis(b.min[1], b.max[1], cell, opts.air_margin_mm, opts.boundary_cells);
    let h = scene.substrate_height_mm();
    let (az, n_sub) = if h > 0.0 {
        let n_sub = (h / cell).round().max(1.0) as usize;
        let dz = h / n_sub as f64;
        (layout_axis(0.0, h, dz, opts.air_margin_mm, opts.boundary_cells), n_sub)
    } else {
        (layout_axis(b.min[2], b.max[2], cell, opts.air_margin_mm, opts.boundary_cells), 0)
    };
    let total = ax.n as u128 * ay.n as u128 * az.n as u128;
    if total > opts.max_cells as u128 {
        return Err(Error::Resource(format!(
            "grid {} x {} x {} = {} cells exceeds the budget of {}",
            ax.n, ay.n, az.n, total, opts.max_cells
        )));
    }
    let (nx, ny, nz) = (ax.n, ay.n, az.n);
    let mut grid = MaterialGrid::vacuum(nx, ny, nz, [ax.d_mm * 1e-3, ay.d_mm * 1e-3, az.d_mm * 1e-3]);
    grid.origin_m = [ax.origin_mm * 1e-3, ay.origin_mm * 1e-3, az.origin_mm * 1e-3];

    let node_k = |z_mm: f64| -> Result<usize> {
        let k = ((z_mm - az.origin_mm) / az.d_mm).round();
        if k < 0.0 || k > nz as f64 {
            return Err(Error::geometry(format!("plane z = {z_mm} mm is outside the grid")));
        }
        Ok(k as usize)
    };
    let k_ground = node_k(0.0)?;
    let k_top = if h > 0.0 { k_ground + n_sub } else { k_ground };

    // substrate footprint, then substrate-layer primitives in order
    if let Some(sub) = &scene.substrate {
        let mut col: Vec<Option<(f64, f64)>> = vec![None; nx * ny];
        let base = Some((sub.spec.relative_permittivity, sub.spec.loss_tangent));
        apply_to_mask(&mut col, nx, &Shape::Rect { min: sub.min, max: sub.max }, &ax, &ay, base);
        for p in scene.primitives.iter().filter(|p| p.layer == Layer::Substrate) {
            let v = match (p.operation, p.material) {
                (Operation::Subtractive, _) | (_, Material::Vacuum) => None,
                (Operation::Additive, Material::Dielectric { relative_permittivity, loss_tangent }) => {
                    Some((relative_permittivity, loss_tangent))
                }
                (Operation::Additive, Material::Pec) => {
                    return Err(Error::geometry("PEC volumes on the substrate layer are not supported"))
                }
            };
            apply_to_mask(&mut col, nx, &p.shape, &ax, &ay, v);
        }
        let w = 2.0 * std::f64::consts::PI * opts.reference_frequency_hz * EPS0;
        for k in k_ground..k_top {
            for j in 0..ny {
                for i in 0..nx {
                    if let Some((er, tand)) = col[i + nx * j] {
                        let c = grid.cell_index(i, j, k);
                        grid.eps_r[c] = er;
                        grid.sigma[c] = w * er * tand;
                    }
                }
            }
        }
    }

    for (layer, k) in [(Layer::GroundMetal, k_ground), (Layer::TopMetal, k_top)] {
        let prims: Vec<_> = scene.primitives.iter().filter(|p| p.layer == layer).collect();
        if prims.is_empty() {
            continue;
        }
        let mut mask = vec![false; nx * ny];
        for p in prims {
            let metal = p.operation == Operation::Additive && p.material == Material::Pec;
            apply_to_mask(&mut mask, nx, &p.shape, &ax, &ay, metal);
        }
        for j in 0..=ny {
            for i in 0..nx {
                let below = j > 0 && mask[i + nx * (j - 1)];
                let above = j < ny && mask[i + nx * j];
                if below || above {
                    grid.set_pec(Axis::X, i, j, k);
                }
            }
        }
        for j in 0..ny {
            for i in 0..=nx {
                let left = i > 0 && mask[i - 1 + nx * j];
                let right = i < nx && mask[i + nx * j];
                if left || right {
                    grid.set_pec(Axis::Y, i, j, k);
                }
            }
        }
        grid.sheets.push(MetalSheet { layer, k, mask });
    }

    let layouts = [&ax, &ay, &az];
    let node_of = |p: [f64; 3]| -> [i64; 3] {
        let mut n = [0i64; 3];
        for a in 0..3 {
            n[a] = ((p[a] - layouts[a].origin_mm) / layouts[a].d_mm).round() as i64;
        }
        n
    };
    for p in scene.primitives.iter().filter(|p| p.layer == Layer::Volume) {
        if let Shape::Wire { start, end } = &p.shape {
            if p.material != Material::Pec || p.operation != Operation::Additive {
                return Err(Error::geometry("wires must be additive PEC"));
            }
            let (s, e) = (node_of(*start), node_of(*end));
            let a = (0..3).find(|&a| start[a] != end[a]).unwrap_or(2);
            let (lo, hi) = (s[a].min(e[a]), s[a].max(e[a]));
            let mut n = s;
            for t in lo..hi {
                n[a] = t;
                if n.iter().any(|&v| v < 0) || n[0] > nx as i64 || n[1] > ny as i64 || n[2] > nz as i64 {
                    return Err(Error::geometry("wire leaves the grid"));
                }
                grid.set_pec(Axis::from_index(a), n[0] as usize, n[1] as usize, n[2] as usize);
            }
        }
    }

    if let Some(port) = &scene.port {
        let n = node_of(port.start_mm);
        let a = port.axis.index();
        let cells = ((port.length_mm / layouts[a].d_mm).round() as i64).max(1) as usize;
        let dims = [nx, ny, nz];
        if n.iter().any(|&v| v < 0) || (0..3).any(|q| n[q] as usize > dims[q]) || n[a] as usize + cells > dims[a] {
            return Err(Error::geometry("port lies outside the grid"));
        }
        if !(port.resistance_ohms > 0.0) {
            return Err(Error::Config("port resistance must be positive".into()));
        }
        grid.port = Some(PortSpan {
            node: [n[0] as usize, n[1] as usize, n[2] as usize],
            axis: port.axis,
            cells,
            resistance_ohms: port.resistance_ohms,
        });
    }

    let min_feature = scene
        .primitives
        .iter()
        .filter(|p| matches!(p.layer, Layer::TopMetal | Layer::GroundMetal))
        .map(|p| p.shape.min_feature())
        .fold(f64::INFINITY, f64::min);
    if min_feature.is_finite() && cell > min_feature / 2.0 {
        let msg = format!(
            "cell size {cell} mm does not resolve the smallest feature ({min_feature:.3} mm); use <= {:.3} mm",
            min_feature / 2.0
        );
        log::warn!("{msg}");
        grid.warnings.push(msg);
    }
    Ok(grid)
}
