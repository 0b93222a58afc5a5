//! Power-law fits of the section near a boundary component.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::bundle::GaugeSection;
use crate::error::{Error, Result};
use crate::geometry::BoundaryManifold;

use super::{discrepancy, grad_sq};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinSample {
    pub rho_lo: f64,
    pub rho_hi: f64,
    /// `ρ` at the node maximising `|u|` in the bin, and that maximum.
    pub rho_u: f64,
    pub u: f64,
    /// `ρ` at the node maximising `|∇u|`, and that maximum.
    pub rho_g: f64,
    pub grad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub eps: f64,
    pub h: f64,
    pub bins: Vec<BinSample>,
    pub u_exponent: f64,
    pub u_residual: f64,
    pub grad_exponent: f64,
    pub grad_residual: f64,
}

/// Least-squares slope of `log y` against `log x`, with the RMS residual.
pub fn loglog_slope(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| libm::log(p.0)).collect();
    let ly: Vec<f64> = points.iter().map(|p| libm::log(p.1)).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let rss: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| {
            let r = y - my - slope * (x - mx);
            r * r
        })
        .sum();
    (slope, libm::sqrt(rss / n))
}

/// Bin edges `2h·√2^k` up to `top`.
fn bin_edges(h: f64, top: f64) -> Vec<f64> {
    let mut edges = alloc::vec![2.0 * h];
    loop {
        let next = edges.last().unwrap() * core::f64::consts::SQRT_2;
        if next >= top * (1.0 - 1e-9) {
            edges.push(top);
            return edges;
        }
        edges.push(next);
    }
}

/// `(node, ρ)` for nodes whose nearest boundary component is `component`.
fn nodes_near(s: &GaugeSection, gamma: &BoundaryManifold, component: usize, rho_max: f64) -> Result<Vec<(usize, f64)>> {
    if gamma.is_empty() || component >= gamma.components().len() {
        return Err(Error::NoBoundary);
    }
    let g = &s.grid;
    Ok((0..g.len())
        .filter_map(|x| {
            let near = gamma.nearest(&g.position(x))?;
            (near.component == component && near.distance <= rho_max).then_some((x, near.distance))
        })
        .collect())
}

/// Exponents of `max |u|` and `max |∇u|` per √2-spaced `ρ`-bin over `[2h, ε]`
/// around boundary component `component`.
pub fn boundary_scaling_fit(s: &GaugeSection, gamma: &BoundaryManifold, component: usize) -> Result<ScalingFit> {
    let (eps, h) = (s.eps, s.grid.h);
    if gamma.is_empty() {
        return Err(Error::NoBoundary);
    }
    if eps < 8.0 * h {
        return Err(Error::WindowTooThin { eps, h });
    }
    let near = nodes_near(s, gamma, component, eps)?;
    let g2 = grad_sq(s);
    let edges = bin_edges(h, eps);
    let mut bins = Vec::new();
    for w in edges.windows(2) {
        let mut b = BinSample {
            rho_lo: w[0],
            rho_hi: w[1],
            rho_u: 0.0,
            u: -1.0,
            rho_g: 0.0,
            grad: -1.0,
        };
        for &(x, rho) in near.iter().filter(|(_, r)| *r >= w[0] && *r < w[1]) {
            if s.u[x].abs() > b.u {
                b.u = s.u[x].abs();
                b.rho_u = rho;
            }
            let gr = libm::sqrt(g2[x]);
            if gr > b.grad {
                b.grad = gr;
                b.rho_g = rho;
            }
        }
        if b.u > 0.0 && b.grad > 0.0 {
            bins.push(b);
        }
    }
    if bins.len() < 3 {
        return Err(Error::WindowTooThin { eps, h });
    }
    let (u_exponent, u_residual) = loglog_slope(&bins.iter().map(|b| (b.rho_u, b.u)).collect::<Vec<_>>());
    let (grad_exponent, grad_residual) = loglog_slope(&bins.iter().map(|b| (b.rho_g, b.grad)).collect::<Vec<_>>());
    Ok(ScalingFit {
        eps,
        h,
        bins,
        u_exponent,
        u_residual,
        grad_exponent,
        grad_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    /// `sup ξ·ρ` over `ρ ∈ [2h, ε/2]`.
    pub sup_xi_rho: f64,
    /// Log–log slope of the per-bin `max ξ·ρ` against `ρ` over `[2h, ε]`.
    pub exponent: Option<f64>,
    pub samples: Vec<(f64, f64)>,
}

/// Growth of the discrepancy towards boundary component `component`.
pub fn discrepancy_blowup(s: &GaugeSection, gamma: &BoundaryManifold, component: usize) -> Result<BlowupReport> {
    let (eps, h) = (s.eps, s.grid.h);
    let near = nodes_near(s, gamma, component, eps)?;
    let xi = discrepancy(s).xi;
    let sup_xi_rho = near
        .iter()
        .filter(|(_, r)| *r >= 2.0 * h && *r <= 0.5 * eps)
        .map(|&(x, r)| xi[x] * r)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut samples = Vec::new();
    if eps >= 4.0 * h {
        for w in bin_edges(h, eps).windows(2) {
            let best = near
                .iter()
                .filter(|(_, r)| *r >= w[0] && *r < w[1])
                .map(|&(x, r)| (r, xi[x] * r))
                .fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
            if best.1 > 0.0 {
                samples.push(best);
            }
        }
    }
    let exponent = (samples.len() >= 3).then(|| loglog_slope(&samples).0);
    Ok(BlowupReport {
        sup_xi_rho,
        exponent,
        samples,
    })
}
