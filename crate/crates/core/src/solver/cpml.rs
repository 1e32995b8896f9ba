//! Convolutional PML in the Roden-Gedney form.
//!
//! The main update uses `1/(kappa d)` spacings everywhere (kappa is one
//! outside the layer). Each curl term that crosses a layer gets a memory
//! variable `psi = b psi + c dF/du`, added to the field in a correction pass
//! after the main update. Memory variables are stored only over the
//! `2 * cells` layer indices of their axis.

use super::engine::{FieldComponent, Fields, Lattice};
use super::CpmlParams;
use crate::par::{for_each_plane2, Parallelism};
use crate::EPS0;

/// Per-axis coefficient tables, indexed by lattice node (E) or half node (H).
#[derive(Debug, Clone)]
pub(crate) struct AxisProfile {
    pub n: usize,
    pub np: usize,
    pub d: f64,
    pub inv_de: Vec<f64>,
    pub inv_dh: Vec<f64>,
    pub be: Vec<f64>,
    pub ce: Vec<f64>,
    pub bh: Vec<f64>,
    pub ch: Vec<f64>,
}

impl AxisProfile {
    pub fn new(n: usize, d: f64, p: &CpmlParams, dt: f64) -> AxisProfile {
        let np = p.cells;
        let thickness = np as f64 * d;
        let sigma_max = p.sigma_factor * (p.grading_order + 1.0) / (150.0 * std::f64::consts::PI * d);
        let coeffs = |depth: f64| -> (f64, f64, f64) {
            if np == 0 || depth <= 0.0 {
                return (1.0, 0.0, 0.0);
            }
            let r = depth / thickness;
            let grade = r.powf(p.grading_order);
            let sigma = sigma_max * grade;
            let kappa = 1.0 + (p.kappa_max - 1.0) * grade;
            let alpha = p.alpha_max * (1.0 - r);
            let b = (-(sigma / kappa + alpha) * dt / EPS0).exp();
            let c = if sigma == 0.0 { 0.0 } else { sigma / (sigma * kappa + kappa * kappa * alpha) * (b - 1.0) };
            (kappa, b, c)
        };
        let depth_e = |m: usize| {
            let x = m as f64;
            (np as f64 - x).max(x - (n - np) as f64).max(0.0) * d
        };
        let depth_h = |m: usize| {
            let x = m as f64 + 0.5;
            (np as f64 - x).max(x - (n - np) as f64).max(0.0) * d
        };
        let mut prof = AxisProfile {
            n,
            np,
            d,
            inv_de: Vec::with_capacity(n + 1),
            inv_dh: Vec::with_capacity(n),
            be: Vec::with_capacity(n + 1),
            ce: Vec::with_capacity(n + 1),
            bh: Vec::with_capacity(n),
            ch: Vec::with_capacity(n),
        };
        for m in 0..=n {
            let (k, b, c) = coeffs(depth_e(m));
            prof.inv_de.push(1.0 / (k * d));
            prof.be.push(b);
            prof.ce.push(c);
        }
        for m in 0..n {
            let (k, b, c) = coeffs(depth_h(m));
            prof.inv_dh.push(1.0 / (k * d));
            prof.bh.push(b);
            prof.ch.push(c);
        }
        prof
    }

    /// Slab index of E node `m`, if it lies inside the layer.
    #[inline]
    pub fn slab_e(&self, m: usize) -> Option<usize> {
        if m < self.np {
            Some(m)
        } else if m > self.n - self.np {
            Some(m - (self.n - self.np + 1) + self.np)
        } else {
            None
        }
    }

    #[inline]
    pub fn slab_h(&self, m: usize) -> Option<usize> {
        if m < self.np {
            Some(m)
        } else if m >= self.n - self.np {
            Some(m - (self.n - self.np) + self.np)
        } else {
            None
        }
    }

    /// Node index of slab index `p` for E (true) or H (false) positions.
    #[inline]
    fn node_of(&self, p: usize, electric: bool) -> usize {
        if p < self.np {
            p
        } else if electric {
            p - self.np + self.n - self.np + 1
        } else {
            p - self.np + self.n - self.np
        }
    }
}

/// One curl term: `field += sign * scale * psi`, with psi driven by the
/// derivative of `source` along `axis`.
#[derive(Debug, Clone)]
struct Term {
    field: FieldComponent,
    source: FieldComponent,
    axis: usize,
    sign: f64,
    psi: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct Cpml {
    np: usize,
    terms: Vec<Term>,
}

impl Cpml {
    pub fn new(lat: &Lattice, np: usize) -> Cpml {
        use FieldComponent::*;
        let layout = [
            (Ex, Hz, 1, 1.0),
            (Ex, Hy, 2, -1.0),
            (Ey, Hx, 2, 1.0),
            (Ey, Hz, 0, -1.0),
            (Ez, Hy, 0, 1.0),
            (Ez, Hx, 1, -1.0),
            (Hx, Ez, 1, 1.0),
            (Hx, Ey, 2, -1.0),
            (Hy, Ex, 2, 1.0),
            (Hy, Ez, 0, -1.0),
            (Hz, Ey, 0, 1.0),
            (Hz, Ex, 1, -1.0),
        ];
        let terms = if np == 0 {
            Vec::new()
        } else {
            layout
                .iter()
                .map(|&(field, source, axis, sign)| Term {
                    field,
                    source,
                    axis,
                    sign,
                    psi: vec![0.0; psi_plane_len(lat, axis, np) * psi_planes(lat, axis, np)],
                })
                .collect()
        };
        Cpml { np, terms }
    }

    pub fn is_active(&self) -> bool {
        !self.terms.is_empty()
    }

    /// Correction after the H update.
    pub fn correct_h(&mut self, mode: Parallelism, lat: &Lattice, prof: &[AxisProfile; 3], f: &mut Fields, ch: f64) {
        for t in self.terms.iter_mut().filter(|t| !t.field.is_electric()) {
            let (field, src) = f.pair_mut(t.field, t.source);
            apply_term(mode, lat, &prof[t.axis], self.np, t, field, src, &|_| ch, false);
        }
    }

    /// Correction after the E update; `cb` maps a lattice index of the
    /// term's field to its update coefficient.
    pub fn correct_e(
        &mut self,
        mode: Parallelism,
        lat: &Lattice,
        prof: &[AxisProfile; 3],
        f: &mut Fields,
        cb: &(dyn Fn(FieldComponent, usize) -> f64 + Sync),
    ) {
        for t in self.terms.iter_mut().filter(|t| t.field.is_electric()) {
            let comp = t.field;
            let (field, src) = f.pair_mut(t.field, t.source);
            apply_term(mode, lat, &prof[t.axis], self.np, t, field, src, &|p| cb(comp, p), true);
        }
    }
}

fn psi_plane_len(lat: &Lattice, axis: usize, np: usize) -> usize {
    match axis {
        0 => 2 * np * (lat.ny + 1),
        1 => (lat.nx + 1) * 2 * np,
        _ => lat.sxy,
    }
}

fn psi_planes(lat: &Lattice, axis: usize, np: usize) -> usize {
    match axis {
        0 | 1 => lat.nz + 1,
        _ => 2 * np,
    }
}

#[allow(clippy::too_many_arguments)]
fn apply_term(
    mode: Parallelism,
    lat: &Lattice,
    prof: &AxisProfile,
    np: usize,
    t: &mut Term,
    field: &mut [f64],
    src: &[f64],
    scale: &(dyn Fn(usize) -> f64 + Sync),
    electric: bool,
) {
    let ranges = lat.update_ranges(t.field);
    let (b, c) = if electric { (&prof.be, &prof.ce) } else { (&prof.bh, &prof.ch) };
    let stride = lat.stride(t.axis);
    let inv_d = 1.0 / prof.d;
    let sign = t.sign;
    let axis = t.axis;
    let (nx1, sxy) = (lat.nx + 1, lat.sxy);
    // contribution of one lattice point; `m` is its index along the axis
    let kernel = |p: usize, m: usize, psi: &mut f64, out: &mut f64| {
        let deriv = if electric { src[p] - src[p - stride] } else { src[p + stride] - src[p] } * inv_d;
        *psi = b[m] * *psi + c[m] * deriv;
        let s = sign * scale(p) * *psi;
        if electric {
            *out += s;
        } else {
            *out -= s;
        }
    };
    let slab_of = |m: usize| if electric { prof.slab_e(m) } else { prof.slab_h(m) };
    match axis {
        0 | 1 => {
            let plane_len = psi_plane_len(lat, axis, np);
            for_each_plane2(mode, field, sxy, &mut t.psi, plane_len, |k, fplane, pplane| {
                if !ranges[2].contains(&k) {
                    return;
                }
                for j in ranges[1].clone() {
                    for i in ranges[0].clone() {
                        let m = if axis == 0 { i } else { j };
                        let Some(s) = slab_of(m) else { continue };
                        let q = if axis == 0 { s + 2 * np * j } else { i + nx1 * s };
                        let local = i + nx1 * j;
                        kernel(local + k * sxy, m, &mut pplane[q], &mut fplane[local]);
                    }
                }
            });
        }
        _ => {
            let n = prof.n;
            let (lo_k0, hi_k0) = if electric { (0, n - np + 1) } else { (0, n - np) };
            let (psi_lo, psi_hi) = t.psi.split_at_mut(np * sxy);
            let (f_lo, f_rest) = field.split_at_mut(np * sxy);
            let f_hi = &mut f_rest[(hi_k0 - np) * sxy..hi_k0 * sxy];
            for (fpart, ppart, k0, p0) in [(f_lo, psi_lo, lo_k0, 0usize), (f_hi, psi_hi, hi_k0, np)] {
                for_each_plane2(mode, fpart, sxy, ppart, sxy, |s, fplane, pplane| {
                    let k = k0 + s;
                    debug_assert_eq!(prof.node_of(p0 + s, electric), k);
                    if !ranges[2].contains(&k) {
                        return;
                    }
                    for j in ranges[1].clone() {
                        for i in ranges[0].clone() {
                            let local = i + nx1 * j;
                            kernel(local + k * sxy, k, &mut pplane[local], &mut fplane[local]);
                        }
                    }
                });
            }
        }
    }
}
