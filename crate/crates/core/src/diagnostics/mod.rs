//! Discrepancy, varifold, monotonicity, nodal sets, parity and spectra.

mod balls;
mod nodal;
pub mod scaling;
mod spectrum;

pub use balls::{density_ratio, fit_lambda, monotonicity_profile, DensityRatio, MonotonicityProfile};
pub use nodal::{extract_nodal_set, hausdorff_sublevel, HausdorffReport, NodalMesh, Topology};
pub use scaling::{boundary_scaling_fit, discrepancy_blowup, BlowupReport, ScalingFit};
pub use spectrum::{hessian_apply, hessian_spectrum, MaskedHessian, SpectrumReport};

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::bundle::GaugeSection;
use crate::energy::{potential, sigma_constant};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryManifold, Component, GridLoop};
use crate::grid::{GridSpec, Point};
use crate::par;

/// `|∇u|²` at every node: half the sum of squared covariant differences over
/// the existing incident edges (each edge's energy is split between its ends).
pub fn grad_sq(s: &GaugeSection) -> Vec<f64> {
    let g = &s.grid;
    let mut out = alloc::vec![0.0; s.u.len()];
    let ih2 = 1.0 / (g.h * g.h);
    par::fill(&mut out, |start, chunk| {
        for ((x, c), o) in g.nodes_in(start..start + chunk.len()).zip(chunk.iter_mut()) {
            let mut acc = 0.0;
            for axis in 0..g.dim {
                let st = g.stride(axis);
                if c[axis] + 1 < g.dims[axis] {
                    let d = s.u[x] - s.gauge.sign(GridSpec::edge_index(x, axis)) * s.u[x + st];
                    acc += d * d;
                }
                if c[axis] > 0 {
                    let d = s.u[x] - s.gauge.sign(GridSpec::edge_index(x - st, axis)) * s.u[x - st];
                    acc += d * d;
                }
            }
            *o = 0.5 * acc * ih2;
        }
    });
    out
}

/// Central covariant gradient of `u` at `x` in the frame of `x` (one-sided
/// at the box boundary).
pub fn central_gradient(s: &GaugeSection, x: usize) -> Point {
    let g = &s.grid;
    let c = g.coords(x);
    let mut grad = [0.0; 3];
    for axis in 0..g.dim {
        let st = g.stride(axis);
        let fwd = (c[axis] + 1 < g.dims[axis])
            .then(|| s.gauge.sign(GridSpec::edge_index(x, axis)) * s.u[x + st]);
        let bwd = (c[axis] > 0).then(|| s.gauge.sign(GridSpec::edge_index(x - st, axis)) * s.u[x - st]);
        grad[axis] = match (fwd, bwd) {
            (Some(f), Some(b)) => (f - b) / (2.0 * g.h),
            (Some(f), None) => (f - s.u[x]) / g.h,
            (None, Some(b)) => (s.u[x] - b) / g.h,
            (None, None) => 0.0,
        };
    }
    grad
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscrepancyField {
    /// `ξ = ε|∇u|²/2 − W(u)/ε` per node.
    pub xi: Vec<f64>,
    /// Dirichlet energy density `ε|∇u|²/2` per node.
    pub dirichlet: Vec<f64>,
    /// Potential energy density `W(u)/ε` per node.
    pub potential: Vec<f64>,
    pub cell_volume: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyNorms {
    pub sup_pos: f64,
    pub sup_abs: f64,
    pub l1_pos: f64,
    pub l1_neg: f64,
    pub l1_abs: f64,
}

impl DiscrepancyField {
    /// Norms over the nodes where `mask` is true (all nodes for `None`).
    pub fn norms(&self, mask: Option<&[bool]>) -> DiscrepancyNorms {
        let mut n = DiscrepancyNorms {
            sup_pos: 0.0,
            sup_abs: 0.0,
            l1_pos: 0.0,
            l1_neg: 0.0,
            l1_abs: 0.0,
        };
        for (x, &v) in self.xi.iter().enumerate() {
            if mask.is_some_and(|m| !m[x]) {
                continue;
            }
            n.sup_pos = n.sup_pos.max(v);
            n.sup_abs = n.sup_abs.max(v.abs());
            if v > 0.0 {
                n.l1_pos += v;
            } else {
                n.l1_neg -= v;
            }
        }
        n.l1_pos *= self.cell_volume;
        n.l1_neg *= self.cell_volume;
        n.l1_abs = n.l1_pos + n.l1_neg;
        n
    }

    /// Energy density `ε|∇u|²/2 + W(u)/ε` per node; sums to the total energy.
    pub fn energy_density(&self) -> Vec<f64> {
        self.dirichlet.iter().zip(&self.potential).map(|(a, b)| a + b).collect()
    }
}

pub fn discrepancy(s: &GaugeSection) -> DiscrepancyField {
    let g2 = grad_sq(s);
    let dirichlet: Vec<f64> = g2.iter().map(|v| 0.5 * s.eps * v).collect();
    let pot: Vec<f64> = s.u.iter().map(|&u| potential(u) / s.eps).collect();
    DiscrepancyField {
        xi: dirichlet.iter().zip(&pot).map(|(a, b)| a - b).collect(),
        dirichlet,
        potential: pot,
        cell_volume: s.grid.cell_volume(),
    }
}

/// Nodes at distance more than `delta` from Γ and at least `box_margin` from
/// the box boundary.
pub fn far_mask(s: &GaugeSection, gamma: &BoundaryManifold, delta: f64, box_margin: f64) -> Vec<bool> {
    (0..s.grid.len())
        .map(|x| {
            let p = s.grid.position(x);
            gamma.distance(&p) > delta && s.grid.distance_to_box(&p) >= box_margin
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteriorReport {
    pub eps: f64,
    pub delta: f64,
    pub sup_abs_u: f64,
    pub sup_xi_pos: f64,
    pub l1_abs_xi: f64,
    /// `sup |u| ≤ 1` holds exactly.
    pub bounded: bool,
}

/// `sup |u|`, `sup ξ₊` and `‖ξ‖_{L¹}` over `{ρ > δ}` (minus a box layer).
pub fn interior_bound_checks(s: &GaugeSection, gamma: &BoundaryManifold, delta: f64, box_margin: f64) -> Result<InteriorReport> {
    if delta < 4.0 * s.eps {
        return Err(Error::InvalidConfig(alloc::format!("delta {delta} below 4 eps")));
    }
    let mask = far_mask(s, gamma, delta, box_margin);
    let d = discrepancy(s);
    let norms = d.norms(Some(&mask));
    let sup_abs_u = s
        .u
        .iter()
        .zip(&mask)
        .filter(|(_, m)| **m)
        .fold(0.0f64, |a, (u, _)| a.max(u.abs()));
    Ok(InteriorReport {
        eps: s.eps,
        delta,
        sup_abs_u,
        sup_xi_pos: norms.sup_pos,
        l1_abs_xi: norms.l1_abs,
        bounded: sup_abs_u <= 1.0,
    })
}

/// Diffuse varifold: node masses `(1/σ)√(W/2)|∇u| hⁿ` and unit normals
/// (`None` where `|∇u| < 1e−12`).
#[derive(Debug, Clone, PartialEq)]
pub struct DiffuseVarifold {
    pub mass: Vec<f64>,
    pub normals: Vec<Option<Point>>,
}

impl DiffuseVarifold {
    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn mass_in(&self, mask: &[bool]) -> f64 {
        self.mass.iter().zip(mask).filter(|(_, m)| **m).map(|(v, _)| v).sum()
    }
}

pub fn varifold(s: &GaugeSection) -> DiffuseVarifold {
    let g2 = grad_sq(s);
    let hn = s.grid.cell_volume();
    let inv_sigma = 1.0 / sigma_constant();
    let mass = s
        .u
        .iter()
        .zip(&g2)
        .map(|(&u, &gg)| inv_sigma * libm::sqrt(potential(u) / 2.0) * libm::sqrt(gg) * hn)
        .collect();
    let normals = (0..s.u.len())
        .map(|x| {
            let gr = central_gradient(s, x);
            let n = crate::grid::norm(&gr);
            (n >= 1e-12).then(|| crate::grid::scale(&gr, 1.0 / n))
        })
        .collect();
    DiffuseVarifold { mass, normals }
}

/// A vector field sampled on grid nodes.
pub type VectorField = Vec<Point>;

/// Central-difference Jacobian `J[i][j] = ∂_j g_i` at node `x`.
fn jacobian(grid: &GridSpec, g: &VectorField, x: usize) -> [[f64; 3]; 3] {
    let c = grid.coords(x);
    let mut jac = [[0.0; 3]; 3];
    for j in 0..grid.dim {
        let st = grid.stride(j);
        let (lo, hi, span) = match (c[j] > 0, c[j] + 1 < grid.dims[j]) {
            (true, true) => (x - st, x + st, 2.0 * grid.h),
            (false, true) => (x, x + st, grid.h),
            (true, false) => (x - st, x, grid.h),
            (false, false) => (x, x, 1.0),
        };
        for (i, row) in jac.iter_mut().enumerate() {
            row[j] = (g[hi][i] - g[lo][i]) / span;
        }
    }
    jac
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstVariation {
    pub value: f64,
    pub mass: f64,
    /// `sup |Dg|` (Frobenius).
    pub dg_sup: f64,
}

/// `δV(g) = Σ (div g − n·Dg n) · mass`, with the projection term dropped where
/// the normal is undefined. Fails with `GNotTangent` if, within the tube of
/// radius `tube` about Γ, the part of `g` normal to Γ exceeds `2 sup|Dg| ρ`.
pub fn first_variation(
    v: &DiffuseVarifold,
    s: &GaugeSection,
    gamma: &BoundaryManifold,
    tube: f64,
    g: &VectorField,
) -> Result<FirstVariation> {
    let grid = &s.grid;
    if g.len() != grid.len() {
        return Err(Error::DimensionMismatch("vector field length".into()));
    }
    let mut value = 0.0;
    let mut dg_sup: f64 = 0.0;
    let mut jacs = Vec::with_capacity(grid.len());
    for x in 0..grid.len() {
        let jac = jacobian(grid, g, x);
        let fro = libm::sqrt(jac.iter().flatten().map(|a| a * a).sum::<f64>());
        dg_sup = dg_sup.max(fro);
        jacs.push(jac);
    }
    for x in 0..grid.len() {
        let p = grid.position(x);
        if let Some(near) = gamma.nearest(&p) {
            if near.distance < tube {
                let perp = normal_part(gamma, near.component, &near.point, &g[x]);
                let bound = 2.0 * dg_sup * near.distance + 1e-12;
                if perp > bound {
                    return Err(Error::GNotTangent { normal: perp, bound });
                }
            }
        }
        let jac = &jacs[x];
        let div: f64 = (0..grid.dim).map(|i| jac[i][i]).sum();
        let proj = v.normals[x].map_or(0.0, |n| {
            let mut acc = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    acc += n[i] * jac[i][j] * n[j];
                }
            }
            acc
        });
        value += (div - proj) * v.mass[x];
    }
    Ok(FirstVariation {
        value,
        mass: v.total_mass(),
        dg_sup,
    })
}

/// Length of the part of `w` normal to Γ at its point `q` (all of `w` for a
/// point component).
fn normal_part(gamma: &BoundaryManifold, component: usize, q: &Point, w: &Point) -> f64 {
    match &gamma.components()[component] {
        Component::Point(_) => crate::grid::norm(w),
        Component::Loop(v) => {
            let n = v.len();
            let mut best = (f64::INFINITY, [0.0; 3]);
            for i in 0..n {
                let (a, b) = (&v[i], &v[(i + 1) % n]);
                let (c, _) = crate::geometry::closest_on_segment(q, a, b);
                let d = crate::grid::dist2(&c, q);
                if d < best.0 {
                    best = (d, crate::grid::sub(b, a));
                }
            }
            let t = crate::grid::scale(&best.1, 1.0 / crate::grid::norm(&best.1));
            let along = crate::grid::dot(w, &t);
            crate::grid::norm(&crate::grid::sub(w, &crate::grid::scale(&t, along)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParityReport {
    pub crossings: usize,
    pub parity: u8,
    pub link_mod2: u8,
}

impl ParityReport {
    pub fn consistent(&self) -> bool {
        self.parity == self.link_mod2
    }
}

/// Zeros of the section along a loop versus the loop's mod-2 linking with Γ.
pub fn zero_parity(s: &GaugeSection, gamma: &BoundaryManifold, path: &GridLoop) -> Result<ParityReport> {
    let crossings = path.steps(&s.grid).filter(|&(x, y, e)| s.edge_has_zero(x, y, e)).count();
    let (_, link_mod2) = crate::geometry::linking(path, gamma, &s.grid)?;
    Ok(ParityReport {
        crossings,
        parity: (crossings % 2) as u8,
        link_mod2,
    })
}
