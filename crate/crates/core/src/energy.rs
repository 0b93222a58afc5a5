//! Double-well potential, discrete Allen–Cahn energy, gradient and residual.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::bundle::{GaugeField, GaugeSection};
use crate::geometry::BoundaryManifold;
use crate::grid::GridSpec;
use crate::par;

#[inline]
pub fn potential(u: f64) -> f64 {
    let t = 1.0 - u * u;
    0.25 * t * t
}

#[inline]
pub fn potential_prime(u: f64) -> f64 {
    (u * u - 1.0) * u
}

#[inline]
pub fn potential_second(u: f64) -> f64 {
    3.0 * u * u - 1.0
}

/// One-dimensional transition profile `tanh(z / (ε√2))`.
pub fn heteroclinic(z: f64, eps: f64) -> f64 {
    libm::tanh(z / (eps * core::f64::consts::SQRT_2))
}

/// `Φ(t) = ∫₀ᵗ √(W(s)/2) ds`.
pub fn phi(t: f64) -> f64 {
    let k = 1.0 / (2.0 * core::f64::consts::SQRT_2);
    let a = t.abs();
    let v = if a <= 1.0 {
        k * (a - a * a * a / 3.0)
    } else {
        k * (2.0 / 3.0) + k * (a * a * a / 3.0 - a + 2.0 / 3.0)
    };
    if t < 0.0 {
        -v
    } else {
        v
    }
}

/// `σ = 2Φ(1) = √2/3`: the energy of the heteroclinic is `2σ`.
pub fn sigma_constant() -> f64 {
    core::f64::consts::SQRT_2 / 3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub eps: f64,
    pub total: f64,
    pub dirichlet: f64,
    pub potential: f64,
    /// `sup |ε²Δ_σu − W′(u)|` over free nodes.
    pub residual_sup: f64,
    /// Discrete L² norm of the residual over free nodes.
    pub residual_l2: f64,
    /// Residual sup over free nodes farther than `2ε` from Γ, when Γ is known.
    pub residual_sup_far: Option<f64>,
    /// `sup |∂E/∂u| / hⁿ` over free nodes.
    pub gradient_sup: f64,
}

/// Dirichlet and potential energy owned by nodes in `range` (each node owns
/// its potential and the edges leaving it in the positive direction).
fn owned_parts(s: &GaugeSection, range: core::ops::Range<usize>, mask: Option<&[bool]>) -> (f64, f64) {
    let g = &s.grid;
    let hn = g.cell_volume();
    let kd = 0.5 * s.eps * hn / (g.h * g.h);
    let kp = hn / s.eps;
    let (mut d, mut p) = (0.0, 0.0);
    for (x, c) in g.nodes_in(range) {
        if mask.is_some_and(|m| !m[x]) {
            continue;
        }
        let ux = s.u[x];
        for axis in 0..g.dim {
            if c[axis] + 1 < g.dims[axis] {
                let y = x + g.stride(axis);
                let diff = ux - s.gauge.sign(GridSpec::edge_index(x, axis)) * s.u[y];
                d += diff * diff;
            }
        }
        p += potential(ux);
    }
    (kd * d, kp * p)
}

fn report_parts(s: &GaugeSection, mask: Option<&[bool]>) -> (f64, f64) {
    par::map_chunks(s.u.len(), |r| owned_parts(s, r, mask))
        .into_iter()
        .fold((0.0, 0.0), |(d, p), (dc, pc)| (d + dc, p + pc))
}

/// Covariant graph Laplacian `Δ_σu(x) = Σ_{y∼x}(σ_xy u_y − u_x)/h²` at node `x`.
#[inline]
pub fn laplacian_at(s: &GaugeSection, x: usize) -> f64 {
    laplacian_of(&s.grid, &s.gauge, &s.u, x, s.grid.coords(x))
}

/// Δ_σ at node `x` with coordinates `c`.
#[inline]
pub fn laplacian_of(g: &GridSpec, gauge: &GaugeField, u: &[f64], x: usize, c: [usize; 3]) -> f64 {
    let ux = u[x];
    let mut acc = 0.0;
    for axis in 0..g.dim {
        let st = g.stride(axis);
        if c[axis] + 1 < g.dims[axis] {
            acc += gauge.sign(GridSpec::edge_index(x, axis)) * u[x + st] - ux;
        }
        if c[axis] > 0 {
            acc += gauge.sign(GridSpec::edge_index(x - st, axis)) * u[x - st] - ux;
        }
    }
    acc / (g.h * g.h)
}

/// `g = −εΔ_σu + W′(u)/ε`, the energy gradient divided by the cell volume.
pub fn gradient(s: &GaugeSection) -> Vec<f64> {
    let mut out = alloc::vec![0.0; s.u.len()];
    par::fill(&mut out, |start, chunk| {
        for ((x, c), v) in s.grid.nodes_in(start..start + chunk.len()).zip(chunk.iter_mut()) {
            *v = -s.eps * laplacian_of(&s.grid, &s.gauge, &s.u, x, c) + potential_prime(s.u[x]) / s.eps;
        }
    });
    out
}

/// `r = ε²Δ_σu − W′(u) = −ε g`.
pub fn el_residual(s: &GaugeSection) -> Vec<f64> {
    let mut out = alloc::vec![0.0; s.u.len()];
    par::fill(&mut out, |start, chunk| {
        for ((x, c), v) in s.grid.nodes_in(start..start + chunk.len()).zip(chunk.iter_mut()) {
            *v = s.eps * s.eps * laplacian_of(&s.grid, &s.gauge, &s.u, x, c) - potential_prime(s.u[x]);
        }
    });
    out
}

/// Total energy only (no residuals).
pub fn total_energy(s: &GaugeSection) -> f64 {
    let (d, p) = report_parts(s, None);
    d + p
}

/// Energy report over all nodes, or over the nodes of `region` (which own
/// their potential and their positive-direction edges).
pub fn energy(s: &GaugeSection, region: Option<&[bool]>) -> EnergyReport {
    let (dirichlet, pot) = report_parts(s, region);
    let free = s.grid.free_mask(s.bc);
    let r = el_residual(s);
    let hn = s.grid.cell_volume();
    let mut sup: f64 = 0.0;
    let mut l2 = 0.0;
    for x in 0..r.len() {
        if free[x] && region.is_none_or(|m| m[x]) {
            sup = sup.max(r[x].abs());
            l2 += r[x] * r[x] * hn;
        }
    }
    EnergyReport {
        eps: s.eps,
        total: dirichlet + pot,
        dirichlet,
        potential: pot,
        residual_sup: sup,
        residual_l2: libm::sqrt(l2),
        residual_sup_far: None,
        gradient_sup: sup / s.eps,
    }
}

/// Energy report with the residual sup also taken over nodes with `ρ > 2ε`.
pub fn energy_with_gamma(s: &GaugeSection, gamma: &BoundaryManifold) -> EnergyReport {
    let mut rep = energy(s, None);
    let free = s.grid.free_mask(s.bc);
    let r = el_residual(s);
    let far = (0..r.len())
        .filter(|&x| free[x] && gamma.distance(&s.grid.position(x)) > 2.0 * s.eps)
        .map(|x| r[x].abs())
        .fold(0.0, f64::max);
    rep.residual_sup_far = Some(far);
    rep
}

/// Energies of the regions labelled `0..count` (nodes with other labels are ignored).
pub fn region_energies(s: &GaugeSection, labels: &[usize], count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| {
            let mask: Vec<bool> = labels.iter().map(|&l| l == k).collect();
            let (d, p) = report_parts(s, Some(&mask));
            d + p
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::{build_seam, gauge_field_from_seam, gauge_transform};
    use crate::geometry::BoundaryManifold;
    use crate::grid::BoundaryCondition;
    use alloc::sync::Arc;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn section(grid: GridSpec, u: Vec<f64>, eps: f64) -> GaugeSection {
        GaugeSection::new(grid, Arc::new(GaugeField::trivial(&grid)), u, eps, BoundaryCondition::Natural).unwrap()
    }

    /// Adaptive Simpson quadrature.
    fn simpson<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, tol: f64) -> f64 {
        fn rec<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
            }
        }
        let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
        rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
    }

    #[test]
    fn potential_values() {
        assert_eq!(potential(1.0), 0.0);
        assert_eq!(potential(-1.0), 0.0);
        assert_eq!(potential(0.0), 0.25);
        for u in [0.0, 1.0, -1.0] {
            assert_eq!(potential_prime(u), 0.0);
        }
        assert_eq!(potential_second(0.0), -1.0);
    }

    #[test]
    fn sigma_matches_quadrature() {
        assert_eq!(phi(0.0), 0.0);
        let q = simpson(|s| libm::sqrt(potential(s) / 2.0), 0.0, 1.0, 1e-14);
        assert!((2.0 * q - sigma_constant()).abs() < 1e-12);
        assert!((sigma_constant() - 0.4714045207910317).abs() < 1e-15);
        assert!((2.0 * phi(1.0) - sigma_constant()).abs() < 1e-15);
        let q2 = simpson(|s| libm::sqrt(potential(s) / 2.0), 0.0, 1.7, 1e-14);
        assert!((phi(1.7) - q2).abs() < 1e-10);
    }

    #[test]
    fn heteroclinic_equipartition() {
        let eps = 0.1;
        assert_eq!(heteroclinic(0.0, eps), 0.0);
        assert!((heteroclinic(100.0, eps) - 1.0).abs() < 1e-15);
        for i in -20..=20 {
            let z = i as f64 * 0.03;
            let d = (heteroclinic(z + 1e-6, eps) - heteroclinic(z - 1e-6, eps)) / 2e-6;
            let kin = eps * d * d / 2.0;
            assert!((kin - potential(heteroclinic(z, eps)) / eps).abs() < 1e-6);
            assert_eq!(heteroclinic(-z, eps), -heteroclinic(z, eps));
        }
        // The heteroclinic carries energy 2σ.
        let e = simpson(
            |z| {
                let s = 1.0 / libm::cosh(z / (eps * core::f64::consts::SQRT_2));
                let d = s * s / (eps * core::f64::consts::SQRT_2);
                eps * d * d / 2.0 + potential(heteroclinic(z, eps)) / eps
            },
            -1.0,
            1.0,
            1e-13,
        );
        assert!((e - 2.0 * sigma_constant()).abs() < 1e-6);
    }

    #[test]
    fn constant_fields() {
        let grid = GridSpec::new(2, &[11, 11], 0.1, &[0.0, 0.0]).unwrap();
        let one = section(grid, alloc::vec![1.0; grid.len()], 0.1);
        let r = energy(&one, None);
        assert_eq!(r.total, 0.0);
        assert!(gradient(&one).iter().all(|g| *g == 0.0));
        assert!(el_residual(&one).iter().all(|g| *g == 0.0));
        let zero = section(grid, alloc::vec![0.0; grid.len()], 0.1);
        let r = energy(&zero, None);
        // 11² nodes of area 0.01 on the unit square: 1.21 = 1 + O(h) boundary count.
        assert!((r.total - 1.21 / (4.0 * 0.1)).abs() < 1e-12);
        assert!(gradient(&zero).iter().all(|g| *g == 0.0));
    }

    #[test]
    fn sampled_heteroclinic_energy_is_two_sigma() {
        let eps = 0.1;
        let h = eps / 8.0;
        let n = (2.0 / h) as usize + 1;
        let grid = GridSpec::new(1, &[n], h, &[-1.0]).unwrap();
        let u = (0..n).map(|i| heteroclinic(grid.position(i)[0], eps)).collect();
        let e = energy(&section(grid, u, eps), None).total;
        assert!((e / (2.0 * sigma_constant()) - 1.0).abs() < 0.01, "{e}");
    }

    #[test]
    fn residual_of_sampled_heteroclinic_is_second_order() {
        let eps = 0.1;
        let sup = |h: f64| {
            let n = libm::round(2.0 / h) as usize + 1;
            let grid = GridSpec::new(1, &[n], h, &[-1.0]).unwrap();
            let u = (0..n).map(|i| heteroclinic(grid.position(i)[0], eps)).collect();
            let s = section(grid, u, eps);
            el_residual(&s)[1..n - 1].iter().fold(0.0f64, |m, r| m.max(r.abs()))
        };
        let (a, b) = (sup(eps / 8.0), sup(eps / 16.0));
        let ratio = a / b;
        assert!((ratio - 4.0).abs() < 0.8, "{ratio}");
    }

    #[test]
    fn gradient_matches_central_differences() {
        let grid = GridSpec::new(2, &[16, 16], 0.1, &[0.0, 0.0]).unwrap();
        let gamma = BoundaryManifold::points(&[[0.73, 0.81, 0.0]]).unwrap();
        let gauge = Arc::new(gauge_field_from_seam(&build_seam(&gamma, &grid).unwrap(), &grid));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut orders = Vec::new();
        for _ in 0..100 {
            let u: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.2..1.2)).collect();
            let phi: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let s = GaugeSection::new(grid, gauge.clone(), u.clone(), 0.15, BoundaryCondition::Natural).unwrap();
            let g = gradient(&s);
            let exact: f64 = g.iter().zip(&phi).map(|(a, b)| a * b).sum::<f64>() * grid.cell_volume();
            let err = |t: f64| {
                let shift = |sgn: f64| {
                    let v = u.iter().zip(&phi).map(|(a, b)| a + sgn * t * b).collect();
                    total_energy(&GaugeSection::new(grid, gauge.clone(), v, 0.15, BoundaryCondition::Natural).unwrap())
                };
                ((shift(1.0) - shift(-1.0)) / (2.0 * t) - exact).abs()
            };
            let (e1, e2) = (err(1e-2), err(5e-3));
            orders.push(libm::log2(e1 / e2));
            let tiny = err(1e-5);
            assert!(tiny <= 1e-8 * exact.abs().max(1.0), "{tiny} vs {exact}");
        }
        orders.sort_by(f64::total_cmp);
        assert!(orders[orders.len() / 2] >= 1.9, "median order {}", orders[50]);
    }

    #[test]
    fn energy_is_gauge_invariant() {
        let grid = GridSpec::new(2, &[20, 20], 0.1, &[0.0, 0.0]).unwrap();
        let gamma = BoundaryManifold::points(&[[0.93, 1.01, 0.0]]).unwrap();
        let gauge = Arc::new(gauge_field_from_seam(&build_seam(&gamma, &grid).unwrap(), &grid));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let s = GaugeSection::new(grid, gauge, u, 0.2, BoundaryCondition::Natural).unwrap();
        let base = energy(&s, None);
        let neg = gauge_transform(&s, &alloc::vec![-1; grid.len()]).unwrap();
        assert_eq!(energy(&neg, None).total.to_bits(), base.total.to_bits());
        for _ in 0..20 {
            let tau: Vec<i8> = (0..grid.len()).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
            let t = energy(&gauge_transform(&s, &tau).unwrap(), None);
            assert!((t.total - base.total).abs() <= 1e-12 * base.total);
            assert!((t.residual_sup - base.residual_sup).abs() <= 1e-12 * base.residual_sup);
            assert!((t.residual_l2 - base.residual_l2).abs() <= 1e-12 * base.residual_l2);
        }
    }

    #[test]
    fn region_energies_add_up() {
        let grid = GridSpec::new(3, &[9, 8, 7], 0.2, &[0.0, 0.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let s = section(grid, u, 0.3);
        let labels: Vec<usize> = (0..grid.len()).map(|_| rng.gen_range(0..3)).collect();
        let parts = region_energies(&s, &labels, 3);
        let total = total_energy(&s);
        assert!((parts.iter().sum::<f64>() - total).abs() <= 1e-12 * total);
    }

    #[test]
    fn reports_are_thread_count_independent() {
        let grid = GridSpec::new(3, &[40, 40, 40], 0.05, &[0.0, 0.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let s = section(grid, u, 0.1);
        par::set_threads(1);
        let a = energy(&s, None);
        par::set_threads(3);
        let b = energy(&s, None);
        par::set_threads(1);
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn truncation_never_increases_energy(seed in any::<u64>()) {
            let grid = GridSpec::new(2, &[8, 8], 0.125, &[0.0, 0.0]).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let clamped = u.iter().map(|v| v.clamp(-1.0, 1.0)).collect();
            let e0 = total_energy(&section(grid, u, 0.1));
            let e1 = total_energy(&section(grid, clamped, 0.1));
            prop_assert!(e1 <= e0);
        }
    }
}
