//! Energy in balls: monotonicity profiles and density ratios.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::bundle::GaugeSection;
use crate::energy::sigma_constant;
use crate::grid::{dist, Point};

use super::{discrepancy, varifold};

/// Nodes within `r_max` of `p`, sorted by distance, with a per-node weight.
fn sorted_ball(s: &GaugeSection, p: &Point, r_max: f64, weight: &[f64]) -> Vec<(f64, f64)> {
    let g = &s.grid;
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for a in 0..g.dim {
        let l = ((p[a] - r_max - g.origin[a]) / g.h).floor().max(0.0) as usize;
        let u = ((p[a] + r_max - g.origin[a]) / g.h).ceil().max(0.0) as usize;
        lo[a] = l.min(g.dims[a] - 1);
        hi[a] = u.min(g.dims[a] - 1);
    }
    let mut out = Vec::new();
    for k in lo[2]..=hi[2] {
        for j in lo[1]..=hi[1] {
            for i in lo[0]..=hi[0] {
                let x = g.index([i, j, k]);
                let d = dist(&g.position(x), p);
                if d <= r_max {
                    out.push((d, weight[x]));
                }
            }
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Sum of weights over nodes with distance `≤ r`, for increasing radii.
fn ball_sums(s: &GaugeSection, p: &Point, radii: &[f64], weight: &[f64]) -> Vec<f64> {
    let r_max = radii.iter().copied().fold(0.0, f64::max);
    let ball = sorted_ball(s, p, r_max, weight);
    radii
        .iter()
        .map(|&r| ball.iter().take_while(|(d, _)| *d <= r).map(|(_, w)| w).sum())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityProfile {
    pub center: Point,
    pub lambda: f64,
    pub radii: Vec<f64>,
    pub energies: Vec<f64>,
    /// `e^{Λ̂r} r^{1−n} E(B_r)`.
    pub values: Vec<f64>,
    /// Smallest `Λ ≥ 0` that makes the profile non-decreasing.
    pub fitted_lambda: f64,
    /// Every step satisfies `M(r_{i+1}) ≥ 0.98 M(r_i)`.
    pub monotone: bool,
}

/// Smallest `Λ ≥ 0` with `e^{Λr} m(r)` non-decreasing on the given samples.
pub fn fit_lambda(radii: &[f64], m: &[f64]) -> f64 {
    let mut lam: f64 = 0.0;
    for i in 1..radii.len() {
        if m[i] > 0.0 && m[i - 1] > 0.0 && radii[i] > radii[i - 1] {
            lam = lam.max(libm::log(m[i - 1] / m[i]) / (radii[i] - radii[i - 1]));
        }
    }
    lam
}

/// Normalised ball energies around `p`; ball membership is by node position.
pub fn monotonicity_profile(s: &GaugeSection, p: &Point, lambda: f64, radii: &[f64]) -> MonotonicityProfile {
    let n = s.grid.dim as i32;
    let density = discrepancy(s).energy_density();
    let hn = s.grid.cell_volume();
    let weight: Vec<f64> = density.iter().map(|e| e * hn).collect();
    let energies = ball_sums(s, p, radii, &weight);
    let scaled: Vec<f64> = radii.iter().zip(&energies).map(|(&r, &e)| libm::pow(r, (1 - n) as f64) * e).collect();
    let values: Vec<f64> = radii.iter().zip(&scaled).map(|(&r, &m)| libm::exp(lambda * r) * m).collect();
    let monotone = values.windows(2).all(|w| w[1] >= 0.98 * w[0]);
    MonotonicityProfile {
        center: *p,
        lambda,
        radii: radii.to_vec(),
        fitted_lambda: fit_lambda(radii, &scaled),
        energies,
        values,
        monotone,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityRatio {
    pub radius: f64,
    /// `E(B_r) / (2σ ω_{n−1} r^{n−1})`.
    pub energy: f64,
    /// `‖V‖(B_r) / (ω_{n−1} r^{n−1})`.
    pub varifold: f64,
}

/// Volume of the unit ball in dimension `n − 1`.
fn unit_ball(k: usize) -> f64 {
    match k {
        1 => 2.0,
        2 => core::f64::consts::PI,
        _ => 4.0 * core::f64::consts::PI / 3.0,
    }
}

pub fn density_ratio(s: &GaugeSection, p: &Point, r: f64) -> DensityRatio {
    let n = s.grid.dim;
    let hn = s.grid.cell_volume();
    let e: Vec<f64> = discrepancy(s).energy_density().iter().map(|v| v * hn).collect();
    let v = varifold(s);
    let norm = unit_ball(n - 1) * libm::pow(r, (n - 1) as f64);
    DensityRatio {
        radius: r,
        energy: ball_sums(s, p, &[r], &e)[0] / (2.0 * sigma_constant() * norm),
        varifold: ball_sums(s, p, &[r], &v.mass)[0] / norm,
    }
}
