use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::cpml::{AxisProfile, Cpml};
use super::huygens::HuygensAccumulator;
use super::output::{PortRecord, ProbeRecord, RunMetadata, RunOutput};
use super::{compute_timestep, GridSpec, Progress, SolverConfig, StepControl};
use crate::error::{Error, Result};
use crate::geometry::{Axis, MaterialGrid, PortSpan};
use crate::par::{map_planes3, Parallelism};
use crate::{EPS0, MU0};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldComponent {
    Ex,
    Ey,
    Ez,
    Hx,
    Hy,
    Hz,
}

impl FieldComponent {
    pub const ALL: [FieldComponent; 6] = [Self::Ex, Self::Ey, Self::Ez, Self::Hx, Self::Hy, Self::Hz];

    pub fn is_electric(self) -> bool {
        matches!(self, Self::Ex | Self::Ey | Self::Ez)
    }

    pub fn axis(self) -> usize {
        match self {
            Self::Ex | Self::Hx => 0,
            Self::Ey | Self::Hy => 1,
            Self::Ez | Self::Hz => 2,
        }
    }

    pub fn electric(axis: usize) -> Self {
        [Self::Ex, Self::Ey, Self::Ez][axis]
    }

    pub fn magnetic(axis: usize) -> Self {
        [Self::Hx, Self::Hy, Self::Hz][axis]
    }

    /// Position within the cell in half-cell units.
    pub(crate) fn offset2(self) -> [usize; 3] {
        let a = self.axis();
        let mut o = if self.is_electric() { [0; 3] } else { [1; 3] };
        o[a] = 1 - o[a];
        o
    }
}

/// The six field arrays on the padded lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Fields {
    pub ex: Vec<f64>,
    pub ey: Vec<f64>,
    pub ez: Vec<f64>,
    pub hx: Vec<f64>,
    pub hy: Vec<f64>,
    pub hz: Vec<f64>,
}

impl Fields {
    fn zeros(n: usize) -> Fields {
        Fields {
            ex: vec![0.0; n],
            ey: vec![0.0; n],
            ez: vec![0.0; n],
            hx: vec![0.0; n],
            hy: vec![0.0; n],
            hz: vec![0.0; n],
        }
    }

    pub fn get(&self, c: FieldComponent) -> &[f64] {
        match c {
            FieldComponent::Ex => &self.ex,
            FieldComponent::Ey => &self.ey,
            FieldComponent::Ez => &self.ez,
            FieldComponent::Hx => &self.hx,
            FieldComponent::Hy => &self.hy,
            FieldComponent::Hz => &self.hz,
        }
    }

    pub fn get_mut(&mut self, c: FieldComponent) -> &mut [f64] {
        match c {
            FieldComponent::Ex => &mut self.ex,
            FieldComponent::Ey => &mut self.ey,
            FieldComponent::Ez => &mut self.ez,
            FieldComponent::Hx => &mut self.hx,
            FieldComponent::Hy => &mut self.hy,
            FieldComponent::Hz => &mut self.hz,
        }
    }

    /// Mutable access to one E (or H) component alongside a shared view of
    /// one H (or E) component.
    pub(crate) fn pair_mut(&mut self, a: FieldComponent, b: FieldComponent) -> (&mut [f64], &[f64]) {
        assert_ne!(a.is_electric(), b.is_electric());
        let Fields { ex, ey, ez, hx, hy, hz } = self;
        let (es, hs) = ([ex, ey, ez], [hx, hy, hz]);
        let (targets, sources) = if a.is_electric() { (es, hs) } else { (hs, es) };
        let t = targets.into_iter().nth(a.axis()).unwrap();
        let s = sources.into_iter().nth(b.axis()).unwrap();
        (t, s)
    }

    pub fn max_abs(&self) -> f64 {
        FieldComponent::ALL
            .iter()
            .flat_map(|&c| self.get(c).iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Index arithmetic of the padded lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Lattice {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub sx: usize,
    pub sxy: usize,
    pub len: usize,
}

impl Lattice {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Lattice {
        let sx = nx + 1;
        let sxy = sx * (ny + 1);
        Lattice { nx, ny, nz, sx, sxy, len: sxy * (nz + 1) }
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.sx * j + self.sxy * k
    }

    pub fn stride(&self, axis: usize) -> usize {
        [1, self.sx, self.sxy][axis]
    }

    fn n(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    /// Full staggered extent of a component.
    pub fn extent(&self, c: FieldComponent) -> [Range<usize>; 3] {
        let o = c.offset2();
        let n = self.n();
        [0, 1, 2].map(|a| 0..n[a] + 1 - o[a])
    }

    /// Points the leapfrog updates. Tangential E on the outer walls is
    /// excluded, which makes the walls PEC.
    pub fn update_ranges(&self, c: FieldComponent) -> [Range<usize>; 3] {
        let n = self.n();
        let a = c.axis();
        if c.is_electric() {
            [0, 1, 2].map(|b| if b == a { 0..n[b] } else { 1..n[b] })
        } else {
            self.extent(c)
        }
    }
}

#[derive(Debug, Clone)]
struct PortState {
    span: PortSpan,
    edges: Vec<usize>,
    /// Per-edge factor multiplying the source voltage.
    source_coef: Vec<f64>,
    spacing: f64,
    loop_area: [f64; 2],
}

struct StopState {
    window: usize,
    buf: Vec<f64>,
    sum: f64,
    peak: f64,
}

/// A running FDTD simulation.
pub struct Simulation {
    lat: Lattice,
    spec: GridSpec,
    dt: f64,
    ch: f64,
    fields: Fields,
    prof: [AxisProfile; 3],
    cpml: Cpml,
    mat: [Vec<u16>; 3],
    ca: Vec<f64>,
    cb: Vec<f64>,
    eps: Vec<f64>,
    port: Option<PortState>,
    config: SolverConfig,
    step: usize,
    record: PortRecord,
    probes: Vec<ProbeRecord>,
    huygens: Option<HuygensAccumulator>,
    energy_trace: Vec<(usize, f64)>,
    last_energy: Option<f64>,
    warnings: Vec<String>,
    decayed: bool,
    stop: StopState,
    field_peak: f64,
    started: std::time::Instant,
}

impl Simulation {
    pub fn new(grid: &MaterialGrid, config: &SolverConfig) -> Result<Simulation> {
        let np = config.cpml.cells;
        let spec = GridSpec::from_grid(grid, np, config.courant_factor);
        spec.validate()?;
        config.source.validate()?;
        if config.check_every == 0 {
            return Err(Error::Config("check_every must be at least 1".into()));
        }
        if !(config.reference_impedance_ohms > 0.0) {
            return Err(Error::Config("reference impedance must be positive".into()));
        }
        for (a, n) in grid.dims().into_iter().enumerate() {
            if np > 0 && n < 2 * np + 2 {
                return Err(Error::Config(format!(
                    "axis {a} has {n} cells, too few for a {np}-cell absorbing layer on both sides"
                )));
            }
        }
        let lat = Lattice::new(grid.nx, grid.ny, grid.nz);
        let dt = compute_timestep(&spec);
        let d = grid.spacing();
        let prof = [0, 1, 2].map(|a| AxisProfile::new(grid.dims()[a], d[a], &config.cpml, dt));
        let cpml = Cpml::new(&lat, np);

        let mut sim = Simulation {
            lat,
            spec,
            dt,
            ch: dt / MU0,
            fields: Fields::zeros(lat.len),
            prof,
            cpml,
            mat: [vec![0u16; lat.len], vec![0u16; lat.len], vec![0u16; lat.len]],
            ca: Vec::new(),
            cb: Vec::new(),
            eps: Vec::new(),
            port: None,
            config: config.clone(),
            step: 0,
            record: PortRecord::default(),
            probes: Vec::new(),
            huygens: None,
            energy_trace: Vec::new(),
            last_energy: None,
            warnings: grid.warnings.clone(),
            decayed: false,
            stop: StopState { window: 1, buf: Vec::new(), sum: 0.0, peak: 0.0 },
            field_peak: 0.0,
            started: std::time::Instant::now(),
        };
        sim.build_materials(grid)?;
        for p in &config.probes {
            let ext = lat.extent(p.component);
            if (0..3).any(|a| !ext[a].contains(&p.index[a])) {
                return Err(Error::Config(format!("probe {:?} at {:?} is outside the grid", p.component, p.index)));
            }
            sim.probes.push(ProbeRecord { probe: *p, values: Vec::new() });
        }
        if let Some(h) = &config.huygens {
            sim.huygens = Some(HuygensAccumulator::new(grid, &lat, np, h, dt, &config.source)?);
        }
        let (f_lo, _) = config.source.band_edges(20.0);
        let period = if f_lo > 0.0 { 1.0 / f_lo } else { 1.0 / config.source.center_frequency_hz };
        sim.stop.window = ((period / dt).ceil() as usize).max(1);
        sim.stop.buf = vec![0.0; sim.stop.window];
        Ok(sim)
    }

    fn build_materials(&mut self, grid: &MaterialGrid) -> Result<()> {
        let lat = self.lat;
        let dt = self.dt;
        let mut table: HashMap<(u64, u64), u16> = HashMap::new();
        // entry 0: PEC
        self.ca.push(0.0);
        self.cb.push(0.0);
        self.eps.push(EPS0);
        for a in 0..3 {
            let comp = FieldComponent::electric(a);
            let ext = lat.extent(comp);
            let upd = lat.update_ranges(comp);
            let axis = Axis::from_index(a);
            let (b, c) = ((a + 1) % 3, (a + 2) % 3);
            for k in ext[2].clone() {
                for j in ext[1].clone() {
                    for i in ext[0].clone() {
                        let n = [i, j, k];
                        let p = lat.idx(i, j, k);
                        let interior = (0..3).all(|q| upd[q].contains(&n[q]));
                        if !interior || grid.is_pec(axis, i, j, k) {
                            self.mat[a][p] = 0;
                            continue;
                        }
                        // average over the up to four cells sharing this edge
                        let (mut er, mut sg, mut cnt) = (0.0, 0.0, 0.0);
                        for db in 0..2 {
                            for dc in 0..2 {
                                let mut cell = n;
                                if n[b] < db || n[c] < dc {
                                    continue;
                                }
                                cell[b] -= db;
                                cell[c] -= dc;
                                if cell[b] >= grid.dims()[b] || cell[c] >= grid.dims()[c] {
                                    continue;
                                }
                                let ci = grid.cell_index(cell[0], cell[1], cell[2]);
                                er += grid.eps_r[ci];
                                sg += grid.sigma[ci];
                                cnt += 1.0;
                            }
                        }
                        let (er, sg) = (er / cnt, sg / cnt);
                        let key = (er.to_bits(), sg.to_bits());
                        let id = match table.get(&key) {
                            Some(&id) => id,
                            None => {
                                let eps = EPS0 * er;
                                let den = eps / dt + sg / 2.0;
                                let id = self.add_coef((eps / dt - sg / 2.0) / den, 1.0 / den, eps)?;
                                table.insert(key, id);
                                id
                            }
                        };
                        self.mat[a][p] = id;
                    }
                }
            }
        }

        let mut lumped: Vec<(PortSpan, bool)> = self.config.lumped_loads.iter().map(|l| (*l, false)).collect();
        if let Some(port) = grid.port {
            lumped.push((port, true));
        }
        let d = grid.spacing();
        for (span, is_port) in lumped {
            let a = span.axis.index();
            let comp = FieldComponent::electric(a);
            if !(span.resistance_ohms > 0.0) || span.cells == 0 {
                return Err(Error::Config("lumped element needs positive resistance and length".into()));
            }
            let (b, c) = ((a + 1) % 3, (a + 2) % 3);
            let area = d[b] * d[c];
            let r_edge = span.resistance_ohms / span.cells as f64;
            let upd = lat.update_ranges(comp);
            let mut edges = Vec::new();
            let mut coefs = Vec::new();
            for s in 0..span.cells {
                let mut n = span.node;
                n[a] += s;
                if (0..3).any(|q| !upd[q].contains(&n[q])) {
                    return Err(Error::Config(format!("lumped edge at {n:?} lies on the outer wall")));
                }
                let p = lat.idx(n[0], n[1], n[2]);
                let m = self.mat[a][p] as usize;
                if m == 0 {
                    return Err(Error::Config(format!("lumped edge at {n:?} coincides with a PEC edge")));
                }
                let eps = self.eps[m];
                // conductivity recovered from the edge's own coefficients
                let sg = (1.0 / self.cb[m] - eps / dt) * 2.0;
                let g = sg + d[a] / (r_edge * area);
                let den = eps / dt + g / 2.0;
                let id = self.add_coef((eps / dt - g / 2.0) / den, 1.0 / den, eps)?;
                self.mat[a][p] = id;
                edges.push(p);
                coefs.push(-(1.0 / den) / (span.cells as f64 * r_edge * area));
            }
            if is_port {
                self.port = Some(PortState {
                    span,
                    edges,
                    source_coef: coefs,
                    spacing: d[a],
                    loop_area: [d[b], d[c]],
                });
            }
        }
        Ok(())
    }

    fn add_coef(&mut self, ca: f64, cb: f64, eps: f64) -> Result<u16> {
        let id = self.ca.len();
        if id > u16::MAX as usize {
            return Err(Error::Resource("more than 65535 distinct edge materials".into()));
        }
        self.ca.push(ca);
        self.cb.push(cb);
        self.eps.push(eps);
        Ok(id as u16)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid_spec(&self) -> GridSpec {
        self.spec
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn fields(&self) -> &Fields {
        &self.fields
    }

    pub fn port_record(&self) -> &PortRecord {
        &self.record
    }

    pub fn probe_records(&self) -> &[ProbeRecord] {
        &self.probes
    }

    pub fn set_parallelism(&mut self, mode: Parallelism) {
        self.config.parallelism = mode;
    }

    /// Overwrites the fields with `f(component, i, j, k)` at every updated
    /// point; PEC edges and the outer walls stay zero.
    pub fn set_fields(&mut self, mut f: impl FnMut(FieldComponent, usize, usize, usize) -> f64) {
        for c in FieldComponent::ALL {
            let r = self.lat.update_ranges(c);
            let lat = self.lat;
            for k in r[2].clone() {
                for j in r[1].clone() {
                    for i in r[0].clone() {
                        let p = lat.idx(i, j, k);
                        let pec = c.is_electric() && self.mat[c.axis()][p] == 0;
                        let v = if pec { 0.0 } else { f(c, i, j, k) };
                        self.fields.get_mut(c)[p] = v;
                    }
                }
            }
        }
    }

    /// Largest |E| over PEC-flagged edges (always zero).
    pub fn max_pec_field(&self) -> f64 {
        let mut m = 0.0f64;
        for a in 0..3 {
            let e = self.fields.get(FieldComponent::electric(a));
            for (p, &id) in self.mat[a].iter().enumerate() {
                if id == 0 {
                    m = m.max(e[p].abs());
                }
            }
        }
        m
    }

    fn port_voltage(&self) -> f64 {
        match &self.port {
            Some(ps) => {
                let e = self.fields.get(FieldComponent::electric(ps.span.axis.index()));
                -ps.edges.iter().map(|&p| e[p]).sum::<f64>() * ps.spacing
            }
            None => 0.0,
        }
    }

    /// Loop integral of H around the port edges, averaged over the edges.
    fn port_current(&self) -> f64 {
        let Some(ps) = &self.port else { return 0.0 };
        let a = ps.span.axis.index();
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        let hb = self.fields.get(FieldComponent::magnetic(b));
        let hc = self.fields.get(FieldComponent::magnetic(c));
        let (sb, sc) = (self.lat.stride(b), self.lat.stride(c));
        let [db, dc] = ps.loop_area;
        let sum: f64 = ps
            .edges
            .iter()
            .map(|&p| (hc[p] - hc[p - sb]) * dc - (hb[p] - hb[p - sc]) * db)
            .sum();
        sum / ps.edges.len() as f64
    }

    /// Advances one full step: H to `n + 1/2`, E to `n + 1`.
    pub fn step(&mut self) -> Result<()> {
        let n = self.step;
        let want_energy = (n + 1).is_multiple_of(self.config.check_every);
        if n == 0 {
            if let Some(h) = &mut self.huygens {
                h.sample_e(&self.fields, 0, self.config.parallelism);
            }
        }
        let energy = self.update_h(want_energy);
        if self.cpml.is_active() {
            self.cpml.correct_h(self.config.parallelism, &self.lat, &self.prof, &mut self.fields, self.ch);
        }
        if let Some(h) = &mut self.huygens {
            h.sample_h(&self.fields, n, self.config.parallelism);
        }
        let v_old = self.port_voltage();
        self.update_e();
        if self.cpml.is_active() {
            let (mat, cb) = (&self.mat, &self.cb);
            let lookup = move |c: FieldComponent, p: usize| cb[mat[c.axis()][p] as usize];
            self.cpml.correct_e(self.config.parallelism, &self.lat, &self.prof, &mut self.fields, &lookup);
        }
        let t_half = (n as f64 + 0.5) * self.dt;
        let vs = self.config.source.value(t_half);
        if let Some(ps) = &self.port {
            let e = self.fields.get_mut(FieldComponent::electric(ps.span.axis.index()));
            for (&p, &c) in ps.edges.iter().zip(&ps.source_coef) {
                e[p] += c * vs;
            }
        }
        if self.port.is_some() {
            let v = 0.5 * (v_old + self.port_voltage());
            let i = self.port_current();
            if !v.is_finite() || !i.is_finite() {
                return Err(Error::Divergence { step: n });
            }
            self.record.push(n, t_half, v, i);
        }
        self.step += 1;
        if let Some(h) = &mut self.huygens {
            h.sample_e(&self.fields, self.step, self.config.parallelism);
        }
        for pr in &mut self.probes {
            let c = pr.probe.component;
            let [i, j, k] = pr.probe.index;
            pr.values.push(self.fields.get(c)[self.lat.idx(i, j, k)]);
        }
        if let Some(w) = energy {
            if !w.is_finite() {
                return Err(Error::Divergence { step: n });
            }
            self.energy_trace.push((n, w));
            self.last_energy = Some(w);
        }
        Ok(())
    }

    /// Conserved discrete energy `1/2 sum eps E^n^2 + 1/2 mu sum H^(n-1/2) H^(n+1/2)`
    /// at the most recent check step.
    pub fn last_energy(&self) -> Option<f64> {
        self.last_energy
    }

    /// Runs `steps` steps and returns the energy at the final one,
    /// independently of the check cadence.
    pub fn advance_with_energy(&mut self, steps: usize) -> Result<f64> {
        for _ in 1..steps {
            self.step()?;
        }
        let saved = self.config.check_every;
        self.config.check_every = 1;
        let r = self.step();
        self.config.check_every = saved;
        r?;
        Ok(self.last_energy.unwrap_or(0.0))
    }

    fn update_h(&mut self, want_energy: bool) -> Option<f64> {
        let lat = self.lat;
        let (nx, ny, nz, sx, sxy) = (lat.nx, lat.ny, lat.nz, lat.sx, lat.sxy);
        let ch = self.ch;
        let Fields { ex, ey, ez, hx, hy, hz } = &mut self.fields;
        let (ex, ey, ez) = (&ex[..], &ey[..], &ez[..]);
        let (idx, idy, idz) = (&self.prof[0].inv_dh, &self.prof[1].inv_dh, &self.prof[2].inv_dh);
        let (mat, eps) = (&self.mat, &self.eps);
        let sums = map_planes3(self.config.parallelism, hx, hy, hz, sxy, |k, hx, hy, hz| {
            let base = k * sxy;
            let mut hh = 0.0;
            if k < nz {
                let iz = idz[k];
                for j in 0..ny {
                    let r = j * sx;
                    let g = base + r;
                    let iy = idy[j];
                    let row = &mut hx[r..r + sx];
                    let (ez0, ez1) = (&ez[g..g + sx], &ez[g + sx..g + 2 * sx]);
                    let (ey0, ey1) = (&ey[g..g + sx], &ey[g + sxy..g + sxy + sx]);
                    for i in 0..sx {
                        let new = row[i] - ch * ((ez1[i] - ez0[i]) * iy - (ey1[i] - ey0[i]) * iz);
                        if want_energy {
                            hh += row[i] * new;
                        }
                        row[i] = new;
                    }
                }
                for j in 0..=ny {
                    let r = j * sx;
                    let g = base + r;
                    let row = &mut hy[r..r + nx];
                    let (ex0, ex1) = (&ex[g..g + nx], &ex[g + sxy..g + sxy + nx]);
                    let (ez0, ez1) = (&ez[g..g + nx], &ez[g + 1..g + 1 + nx]);
                    let ix = &idx[..nx];
                    for i in 0..nx {
                        let new = row[i] - ch * ((ex1[i] - ex0[i]) * iz - (ez1[i] - ez0[i]) * ix[i]);
                        if want_energy {
                            hh += row[i] * new;
                        }
                        row[i] = new;
                    }
                }
            }
            for j in 0..ny {
                let r = j * sx;
                let g = base + r;
                let iy = idy[j];
                let row = &mut hz[r..r + nx];
                let (ey0, ey1) = (&ey[g..g + nx], &ey[g + 1..g + 1 + nx]);
                let (ex0, ex1) = (&ex[g..g + nx], &ex[g + sx..g + sx + nx]);
                let ix = &idx[..nx];
                for i in 0..nx {
                    let new = row[i] - ch * ((ey1[i] - ey0[i]) * ix[i] - (ex1[i] - ex0[i]) * iy);
                    if want_energy {
                        hh += row[i] * new;
                    }
                    row[i] = new;
                }
            }
            let mut ee = 0.0;
            if want_energy {
                for (a, e) in [ex, ey, ez].into_iter().enumerate() {
                    for p in base..base + sxy {
                        let v = e[p];
                        if v != 0.0 {
                            ee += eps[mat[a][p] as usize] * v * v;
                        }
                    }
                }
            }
            (ee, hh)
        });
        if !want_energy {
            return None;
        }
        let dv = self.spec.dx * self.spec.dy * self.spec.dz;
        let (ee, hh) = sums.iter().fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d));
        Some(0.5 * dv * (ee + MU0 * hh))
    }

    fn update_e(&mut self) {
        let lat = self.lat;
        let (nx, ny, nz, sx, sxy) = (lat.nx, lat.ny, lat.nz, lat.sx, lat.sxy);
        let Fields { ex, ey, ez, hx, hy, hz } = &mut self.fields;
        let (hx, hy, hz) = (&hx[..], &hy[..], &hz[..]);
        let (idx, idy, idz) = (&self.prof[0].inv_de, &self.prof[1].inv_de, &self.prof[2].inv_de);
        let (ca, cb) = (&self.ca[..], &self.cb[..]);
        let [mx, my, mz] = &self.mat;
        map_planes3(self.config.parallelism, ex, ey, ez, sxy, |k, ex, ey, ez| {
            let base = k * sxy;
            if k >= 1 && k < nz {
                let iz = idz[k];
                for j in 1..ny {
                    let r = j * sx;
                    let g = base + r;
                    let iy = idy[j];
                    let row = &mut ex[r..r + nx];
                    let m = &mx[g..g + nx];
                    let (hz0, hz1) = (&hz[g - sx..g - sx + nx], &hz[g..g + nx]);
                    let (hy0, hy1) = (&hy[g - sxy..g - sxy + nx], &hy[g..g + nx]);
                    for i in 0..nx {
                        let id = m[i] as usize;
                        row[i] = ca[id] * row[i] + cb[id] * ((hz1[i] - hz0[i]) * iy - (hy1[i] - hy0[i]) * iz);
                    }
                }
                for j in 0..ny {
                    let r = j * sx;
                    let g = base + r;
                    let row = &mut ey[r..r + nx];
                    let m = &my[g..g + nx];
                    let (hx0, hx1) = (&hx[g - sxy..g - sxy + nx], &hx[g..g + nx]);
                    let (hz0, hz1) = (&hz[g - 1..g - 1 + nx], &hz[g..g + nx]);
                    for i in 1..nx {
                        let id = m[i] as usize;
                        row[i] = ca[id] * row[i] + cb[id] * ((hx1[i] - hx0[i]) * iz - (hz1[i] - hz0[i]) * idx[i]);
                    }
                }
            }
            if k < nz {
                for j in 1..ny {
                    let r = j * sx;
                    let g = base + r;
                    let iy = idy[j];
                    let row = &mut ez[r..r + nx];
                    let m = &mz[g..g + nx];
                    let (hy0, hy1) = (&hy[g - 1..g - 1 + nx], &hy[g..g + nx]);
                    let (hx0, hx1) = (&hx[g - sx..g - sx + nx], &hx[g..g + nx]);
                    for i in 1..nx {
                        let id = m[i] as usize;
                        row[i] = ca[id] * row[i] + cb[id] * ((hy1[i] - hy0[i]) * idx[i] - (hx1[i] - hx0[i]) * iy);
                    }
                }
            }
        });
    }

    fn update_stop(&mut self) -> bool {
        let Some(last) = self.record.v.last().copied() else {
            return false;
        };
        let z0 = self.config.reference_impedance_ohms;
        let i = *self.record.i.last().unwrap();
        let e = last * last + (z0 * i) * (z0 * i);
        let w = self.stop.window;
        let slot = (self.step - 1) % w;
        self.stop.sum += e - self.stop.buf[slot];
        self.stop.buf[slot] = e;
        if slot == w - 1 {
            // refresh the running sum to keep rounding from accumulating
            self.stop.sum = self.stop.buf.iter().sum();
        }
        self.stop.peak = self.stop.peak.max(self.stop.sum);
        let t = self.step as f64 * self.dt;
        if t <= self.config.source.end_time() || self.step < w {
            return false;
        }
        let StepControl::Auto { decay_db, .. } = self.config.steps else {
            return false;
        };
        if self.stop.peak == 0.0 {
            return true;
        }
        self.stop.sum <= self.stop.peak * 10f64.powf(-decay_db / 10.0)
    }

    fn field_energy_decayed(&mut self) -> bool {
        let StepControl::Auto { decay_db, .. } = self.config.steps else {
            return false;
        };
        let Some(w) = self.last_energy else { return false };
        self.field_peak = self.field_peak.max(w);
        let t = self.step as f64 * self.dt;
        t > self.config.source.end_time() && (self.field_peak == 0.0 || w <= self.field_peak * 10f64.powf(-decay_db / 10.0))
    }

    /// Runs until the configured stop condition.
    pub fn run(&mut self, observer: &mut dyn FnMut(&Progress)) -> Result<()> {
        let max = match self.config.steps {
            StepControl::Fixed { steps } => steps,
            StepControl::Auto { max_steps, .. } => max_steps,
        };
        let auto = matches!(self.config.steps, StepControl::Auto { .. });
        self.decayed = !auto;
        while self.step < max {
            self.step()?;
            let mut done = false;
            if auto && self.port.is_some() {
                done = self.update_stop();
            }
            if self.step.is_multiple_of(self.config.check_every) {
                if let Some(w) = self.last_energy {
                    observer(&Progress { step: self.step, time_s: self.step as f64 * self.dt, energy_j: w });
                }
                if auto && self.port.is_none() {
                    done = self.field_energy_decayed();
                }
            }
            if done {
                self.decayed = true;
                break;
            }
        }
        if auto && !self.decayed {
            let msg = format!("energy did not decay within the {max}-step cap");
            log::warn!("{msg}");
            self.warnings.push(msg);
        }
        Ok(())
    }

    pub fn into_output(self) -> RunOutput {
        let metadata = RunMetadata {
            dt_s: self.dt,
            steps: self.step,
            decayed: self.decayed,
            warnings: self.warnings,
            grid: self.spec,
            port: self.port.as_ref().map(|p| p.span),
            elapsed_s: self.started.elapsed().as_secs_f64(),
        };
        RunOutput {
            config: self.config,
            metadata,
            port: self.record,
            probes: self.probes,
            huygens: self.huygens.map(|h| h.finish()),
            energy: self.energy_trace,
        }
    }
}
