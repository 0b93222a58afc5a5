//! Lowest eigenvalues of the second variation `H = −εΔ_σ + (3u² − 1)/ε`.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::bundle::GaugeSection;
use crate::energy::potential_second;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::linalg::lanczos_smallest;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub eps: f64,
    /// Ascending.
    pub values: Vec<f64>,
    pub residuals: Vec<f64>,
    pub tol_eig: f64,
    /// Number of eigenvalues below `−tol_eig`.
    pub index: usize,
    pub unknowns: usize,
    pub matvecs: usize,
}

/// The masked operator on compact vectors; nodes outside the mask are zero.
pub struct MaskedHessian<'a> {
    s: &'a GaugeSection,
    nodes: Vec<usize>,
    slot: Vec<u32>,
    diag: Vec<f64>,
}

impl<'a> MaskedHessian<'a> {
    pub fn new(s: &'a GaugeSection, mask: &[bool]) -> Self {
        let g = &s.grid;
        let nodes: Vec<usize> = (0..g.len()).filter(|&x| mask[x]).collect();
        let mut slot = alloc::vec![u32::MAX; g.len()];
        for (i, &x) in nodes.iter().enumerate() {
            slot[x] = i as u32;
        }
        let ih2 = 1.0 / (g.h * g.h);
        let diag = nodes
            .iter()
            .map(|&x| {
                let c = g.coords(x);
                let degree = (0..g.dim)
                    .map(|a| usize::from(c[a] > 0) + usize::from(c[a] + 1 < g.dims[a]))
                    .sum::<usize>() as f64;
                s.eps * degree * ih2 + potential_second(s.u[x]) / s.eps
            })
            .collect();
        Self { s, nodes, slot, diag }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        let g = &self.s.grid;
        let gauge = &self.s.gauge;
        let w = self.s.eps / (g.h * g.h);
        for (i, &x) in self.nodes.iter().enumerate() {
            let c = g.coords(x);
            let mut acc = 0.0;
            for axis in 0..g.dim {
                let st = g.stride(axis);
                if c[axis] + 1 < g.dims[axis] {
                    let j = self.slot[x + st];
                    if j != u32::MAX {
                        acc += gauge.sign(GridSpec::edge_index(x, axis)) * v[j as usize];
                    }
                }
                if c[axis] > 0 {
                    let j = self.slot[x - st];
                    if j != u32::MAX {
                        acc += gauge.sign(GridSpec::edge_index(x - st, axis)) * v[j as usize];
                    }
                }
            }
            out[i] = self.diag[i] * v[i] - w * acc;
        }
    }
}

/// `Hφ` on the full grid with `φ` restricted to the mask.
pub fn hessian_apply(s: &GaugeSection, mask: &[bool], phi: &[f64]) -> Vec<f64> {
    let h = MaskedHessian::new(s, mask);
    let compact: Vec<f64> = h.nodes.iter().map(|&x| phi[x]).collect();
    let mut out = alloc::vec![0.0; compact.len()];
    h.apply(&compact, &mut out);
    let mut full = alloc::vec![0.0; s.u.len()];
    for (i, &x) in h.nodes.iter().enumerate() {
        full[x] = out[i];
    }
    full
}

/// The `k ≤ 20` lowest eigenvalues of `H` with zero Dirichlet data outside
/// `mask`, to residual `1e−6`.
pub fn hessian_spectrum(s: &GaugeSection, mask: &[bool], k: usize, seed: u64) -> Result<SpectrumReport> {
    if k == 0 || k > 20 {
        return Err(Error::InvalidConfig(alloc::format!("spectrum size {k} not in 1..=20")));
    }
    if mask.len() != s.u.len() {
        return Err(Error::DimensionMismatch("spectrum mask length".into()));
    }
    let op = MaskedHessian::new(s, mask);
    let n = op.len();
    let out = lanczos_smallest(|v, o| op.apply(v, o), n, k, 1e-6, 200_000, seed)?;
    let tol_eig = 1e-8 / s.eps;
    Ok(SpectrumReport {
        eps: s.eps,
        index: out.values.iter().filter(|&&l| l < -tol_eig).count(),
        values: out.values,
        residuals: out.residuals,
        tol_eig,
        unknowns: n,
        matvecs: out.matvecs,
    })
}
