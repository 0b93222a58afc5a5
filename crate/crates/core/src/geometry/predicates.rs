//! Orientation predicates with exact sign.
//!
//! A floating-point determinant is accepted when it clears a conservative
//! error bound; otherwise the sign is recomputed with expansion arithmetic
//! (error-free two-sum / two-product), which is exact for any f64 input.

use alloc::vec::Vec;

use crate::grid::Point;

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let x = a + b;
    let bv = x - a;
    let av = x - bv;
    (x, (a - av) + (b - bv))
}

#[inline]
fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    let x = a + b;
    (x, b - (x - a))
}

#[inline]
fn two_product(a: f64, b: f64) -> (f64, f64) {
    let x = a * b;
    (x, libm::fma(a, b, -x))
}

/// Exact difference as a (non-overlapping, increasing) expansion.
fn diff(a: f64, b: f64) -> Vec<f64> {
    let (x, y) = two_sum(a, -b);
    let mut e = Vec::with_capacity(2);
    if y != 0.0 {
        e.push(y);
    }
    if x != 0.0 {
        e.push(x);
    }
    e
}

fn grow(e: &[f64], b: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(e.len() + 1);
    let mut q = b;
    for &ei in e {
        let (s, err) = two_sum(q, ei);
        if err != 0.0 {
            out.push(err);
        }
        q = s;
    }
    if q != 0.0 {
        out.push(q);
    }
    out
}

fn add(e: &[f64], f: &[f64]) -> Vec<f64> {
    let mut out = e.to_vec();
    for &fi in f {
        out = grow(&out, fi);
    }
    out
}

fn neg(e: &[f64]) -> Vec<f64> {
    e.iter().map(|x| -x).collect()
}

fn scale(e: &[f64], b: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * e.len());
    if e.is_empty() || b == 0.0 {
        return out;
    }
    let (mut q, err) = two_product(e[0], b);
    if err != 0.0 {
        out.push(err);
    }
    for &ei in &e[1..] {
        let (p1, p0) = two_product(ei, b);
        let (s, err) = two_sum(q, p0);
        if err != 0.0 {
            out.push(err);
        }
        let (s2, err2) = fast_two_sum(p1, s);
        if err2 != 0.0 {
            out.push(err2);
        }
        q = s2;
    }
    if q != 0.0 {
        out.push(q);
    }
    out
}

fn mul(e: &[f64], f: &[f64]) -> Vec<f64> {
    let mut acc = Vec::new();
    for &fi in f {
        acc = add(&acc, &scale(e, fi));
    }
    acc
}

fn sign_of(e: &[f64]) -> i8 {
    match e.iter().rev().find(|x| **x != 0.0) {
        Some(x) if *x > 0.0 => 1,
        Some(_) => -1,
        None => 0,
    }
}

const FILTER: f64 = 1e-12;

/// Sign of `(b − a) × (c − a)` (positive when `c` is left of `a → b`).
pub fn orient2d(a: &Point, b: &Point, c: &Point) -> i8 {
    let l = (b[0] - a[0]) * (c[1] - a[1]);
    let r = (b[1] - a[1]) * (c[0] - a[0]);
    let det = l - r;
    if det.abs() > FILTER * (l.abs() + r.abs()) {
        return if det > 0.0 { 1 } else { -1 };
    }
    let bx = diff(b[0], a[0]);
    let by = diff(b[1], a[1]);
    let cx = diff(c[0], a[0]);
    let cy = diff(c[1], a[1]);
    sign_of(&add(&mul(&bx, &cy), &neg(&mul(&by, &cx))))
}

/// Sign of `det[b − a, c − a, d − a]` (positive when `d` is on the side of the
/// normal `(b − a) × (c − a)`).
pub fn orient3d(a: &Point, b: &Point, c: &Point, d: &Point) -> i8 {
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let w = [d[0] - a[0], d[1] - a[1], d[2] - a[2]];
    let m0 = v[1] * w[2] - v[2] * w[1];
    let m1 = v[2] * w[0] - v[0] * w[2];
    let m2 = v[0] * w[1] - v[1] * w[0];
    let det = u[0] * m0 + u[1] * m1 + u[2] * m2;
    let perm = u[0].abs() * ((v[1] * w[2]).abs() + (v[2] * w[1]).abs())
        + u[1].abs() * ((v[2] * w[0]).abs() + (v[0] * w[2]).abs())
        + u[2].abs() * ((v[0] * w[1]).abs() + (v[1] * w[0]).abs());
    if det.abs() > FILTER * perm {
        return if det > 0.0 { 1 } else { -1 };
    }
    let u: [Vec<f64>; 3] = core::array::from_fn(|k| diff(b[k], a[k]));
    let v: [Vec<f64>; 3] = core::array::from_fn(|k| diff(c[k], a[k]));
    let w: [Vec<f64>; 3] = core::array::from_fn(|k| diff(d[k], a[k]));
    let minor = |i: usize, j: usize| add(&mul(&v[i], &w[j]), &neg(&mul(&v[j], &w[i])));
    let t0 = mul(&u[0], &minor(1, 2));
    let t1 = mul(&u[1], &minor(2, 0));
    let t2 = mul(&u[2], &minor(0, 1));
    sign_of(&add(&add(&t0, &t1), &t2))
}

fn lex_less(p: &Point, q: &Point) -> bool {
    for k in 0..3 {
        if p[k] != q[k] {
            return p[k] < q[k];
        }
    }
    false
}

/// Outcome of a crossing test between a segment and a seam piece.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Crossing {
    /// +1 / −1 for an oriented crossing, 0 for none.
    pub sign: i8,
    /// An exact zero predicate was resolved by the tie-breaking rule.
    pub degenerate: bool,
}

/// Segment `a → b` against triangle `t`. A crossing from the negative to the
/// positive side of `(t1 − t0) × (t2 − t0)` counts +1.
///
/// Exact zeros are broken consistently: an endpoint on the triangle's plane
/// counts as positive, and a line through a triangle edge `p → q` is assigned
/// to the side given by the lexicographic order of `p, q`, so an edge shared by
/// two consistently oriented triangles is claimed by exactly one of them.
pub fn segment_triangle(a: &Point, b: &Point, t: &[Point; 3]) -> Crossing {
    let mut degenerate = false;
    let mut side = |s: i8| {
        if s == 0 {
            degenerate = true;
        }
        s >= 0
    };
    let pa = side(orient3d(&t[0], &t[1], &t[2], a));
    let pb = side(orient3d(&t[0], &t[1], &t[2], b));
    if pa == pb {
        return Crossing { sign: 0, degenerate };
    }
    let mut edge = |p: &Point, q: &Point| {
        let s = orient3d(a, b, p, q);
        if s != 0 {
            s
        } else {
            degenerate = true;
            if lex_less(p, q) {
                1
            } else {
                -1
            }
        }
    };
    let e0 = edge(&t[0], &t[1]);
    let e1 = edge(&t[1], &t[2]);
    let e2 = edge(&t[2], &t[0]);
    let sign = if e0 == e1 && e1 == e2 {
        if pb {
            1
        } else {
            -1
        }
    } else {
        0
    };
    Crossing { sign, degenerate }
}

/// Segment `a → b` against the planar segment `p → q` (z ignored). Crossing to
/// the left of `p → q` counts +1.
pub fn segment_segment_2d(a: &Point, b: &Point, p: &Point, q: &Point) -> Crossing {
    let mut degenerate = false;
    let mut side = |s: i8| {
        if s == 0 {
            degenerate = true;
        }
        s >= 0
    };
    let pa = side(orient2d(p, q, a));
    let pb = side(orient2d(p, q, b));
    if pa == pb {
        return Crossing { sign: 0, degenerate };
    }
    let sp = side(orient2d(a, b, p));
    let sq = side(orient2d(a, b, q));
    let sign = if sp != sq {
        if pb {
            1
        } else {
            -1
        }
    } else {
        0
    };
    Crossing { sign, degenerate }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orient2d_exact_on_near_collinear_points() {
        let a = [0.5, 0.5, 0.0];
        let b = [12.0, 12.0, 0.0];
        let c = [24.0, 24.0, 0.0];
        assert_eq!(orient2d(&a, &b, &c), 0);
        let c2 = [24.0, 24.0 + f64::EPSILON * 16.0, 0.0];
        assert_eq!(orient2d(&a, &b, &c2), 1);
        let c3 = [f64::from_bits(0.5f64.to_bits() + 1), 0.5, 0.0];
        assert_eq!(orient2d(&a, &b, &c3), -1);
    }

    #[test]
    fn orient3d_signs() {
        let o = [0.0; 3];
        let x = [1.0, 0.0, 0.0];
        let y = [0.0, 1.0, 0.0];
        assert_eq!(orient3d(&o, &x, &y, &[0.1, 0.1, 1.0]), 1);
        assert_eq!(orient3d(&o, &x, &y, &[0.1, 0.1, -1.0]), -1);
        assert_eq!(orient3d(&o, &x, &y, &[0.3, 0.7, 0.0]), 0);
        // 0.1 + 0.2 is not representable; the exact path must see the tiny offset.
        let p = [0.1, 0.2, 0.1 + 0.2 - 0.3];
        let s = orient3d(&o, &x, &y, &p);
        assert_eq!(s, if p[2] > 0.0 { 1 } else if p[2] < 0.0 { -1 } else { 0 });
    }

    #[test]
    fn shared_triangle_edge_is_claimed_once() {
        let c = [0.0, 0.0, 0.0];
        let v1 = [1.0, 0.0, 0.0];
        let v2 = [0.0, 1.0, 0.0];
        let v3 = [-1.0, 0.0, 0.0];
        // Vertical segment through the shared edge c → v2 at (0, 0.5).
        let a = [0.0, 0.5, -1.0];
        let b = [0.0, 0.5, 1.0];
        let s1 = segment_triangle(&a, &b, &[c, v1, v2]);
        let s2 = segment_triangle(&a, &b, &[c, v2, v3]);
        assert!(s1.degenerate && s2.degenerate);
        assert_eq!((s1.sign + s2.sign).abs(), 1);
    }

    #[test]
    fn segment_crossings_2d() {
        let p = [0.0, 0.0, 0.0];
        let q = [5.0, 0.0, 0.0];
        let up = segment_segment_2d(&[1.0, -1.0, 0.0], &[1.0, 1.0, 0.0], &p, &q);
        assert_eq!(up.sign, 1);
        let down = segment_segment_2d(&[1.0, 1.0, 0.0], &[1.0, -1.0, 0.0], &p, &q);
        assert_eq!(down.sign, -1);
        let miss = segment_segment_2d(&[-1.0, -1.0, 0.0], &[-1.0, 1.0, 0.0], &p, &q);
        assert_eq!(miss.sign, 0);
    }
}
