//! Catenoid through two coaxial rings of radius `R` at separation `d`.
//!
//! The profile is `r(z) = c cosh(z/c)` with the rings at `z = ±d/2`. With
//! `s = d/(2c)` the ring condition becomes `cosh(s)/s = 2R/d`, which has two
//! roots when `2R/d` exceeds the minimum of `cosh(s)/s`, and none otherwise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Catenary {
    /// Neck radius of the smaller-area branch.
    pub c: f64,
    /// Lateral area of that branch (quadrature).
    pub area: f64,
    /// Neck radius and area of the other branch.
    pub other_c: f64,
    pub other_area: f64,
}

fn ring(s: f64) -> f64 {
    libm::cosh(s) / s
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo) > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == flo {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.abs() {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// `2π ∫ r √(1 + r'²) dz = 2π ∫ c cosh²(z/c) dz` over `[−d/2, d/2]` by
/// composite Simpson with `panels` (even) intervals.
pub fn catenary_area_quadrature(c: f64, d: f64, panels: usize) -> f64 {
    let n = panels + panels % 2;
    let step = d / n as f64;
    let f = |z: f64| {
        let ch = libm::cosh(z / c);
        c * ch * ch
    };
    let mut acc = f(-0.5 * d) + f(0.5 * d);
    for i in 1..n {
        let z = -0.5 * d + i as f64 * step;
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(z);
    }
    2.0 * core::f64::consts::PI * acc * step / 3.0
}

pub fn catenary_area_oracle(radius: f64, d: f64) -> Result<Catenary> {
    if !(radius > 0.0 && d > 0.0) {
        return Err(Error::InvalidConfig("catenoid needs positive radius and separation".into()));
    }
    // Minimum of cosh(s)/s sits at s tanh(s) = 1.
    let s_star = bisect(|s| s * libm::tanh(s) - 1.0, 0.5, 3.0);
    let target = 2.0 * radius / d;
    if target < ring(s_star) {
        return Err(Error::NoCatenary);
    }
    let g = |s: f64| ring(s) - target;
    let s1 = bisect(g, 1e-3 * d / (2.0 * radius), s_star);
    let mut hi = 2.0 * s_star;
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    let s2 = bisect(g, s_star, hi);
    let panels = 4096;
    let (c1, c2) = (d / (2.0 * s1), d / (2.0 * s2));
    let (a1, a2) = (catenary_area_quadrature(c1, d, panels), catenary_area_quadrature(c2, d, panels));
    let (c, area, other_c, other_area) = if a1 <= a2 { (c1, a1, c2, a2) } else { (c2, a2, c1, a1) };
    Ok(Catenary {
        c,
        area,
        other_c,
        other_area,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed_form(c: f64, d: f64) -> f64 {
        core::f64::consts::PI * c * (d + c * libm::sinh(d / c))
    }

    #[test]
    fn quadrature_matches_closed_form_and_refines() {
        for d in [0.1, 0.5, 1.0, 1.3] {
            let cat = catenary_area_oracle(1.0, d).unwrap();
            let exact = closed_form(cat.c, d);
            assert!((cat.area - exact).abs() <= 1e-10 * exact, "{d}");
            let fine = catenary_area_quadrature(cat.c, d, 8192);
            assert!((fine - cat.area).abs() <= 1e-8 * cat.area);
            // Both rings are met.
            let r = cat.c * libm::cosh(0.5 * d / cat.c);
            assert!((r - 1.0).abs() < 1e-10);
            assert!(cat.area <= cat.other_area);
        }
    }

    #[test]
    fn limits() {
        let tiny = catenary_area_oracle(1.0, 1e-3).unwrap();
        assert!(tiny.area < 1e-2);
        assert!(matches!(catenary_area_oracle(1.0, 2.0), Err(Error::NoCatenary)));
        // Critical ratio d/R ≈ 1.3255.
        assert!(catenary_area_oracle(1.0, 1.32).is_ok());
        assert!(catenary_area_oracle(1.0, 1.33).is_err());
        // Scaling: area ∝ R².
        let a = catenary_area_oracle(1.0, 0.5).unwrap().area;
        let b = catenary_area_oracle(2.0, 1.0).unwrap().area;
        assert!((b / a - 4.0).abs() < 1e-9);
    }
}
