//! The spanning line bundle as a ℤ₂ gauge field on grid edges.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::bvh::Bvh;
use crate::geometry::{self, BoundaryManifold, Component, GridLoop, SeamPiece};
use crate::grid::{BoundaryCondition, GridSpec, Point};

/// A surface (segments in 2D, triangles in 3D) bounded mod 2 by Γ, together
/// with the set of grid edges it crosses an odd number of times.
#[derive(Debug, Clone)]
pub struct SeamSurface {
    pieces: Vec<SeamPiece>,
    apexes: Vec<Point>,
    crossed: Vec<usize>,
    bvh: Bvh,
}

impl SeamSurface {
    /// Seam with no pieces (trivial bundle).
    pub fn empty() -> Self {
        Self::from_pieces_unchecked(&GridSpec::new(1, &[3], 1.0, &[0.0]).expect("valid"), Vec::new(), Vec::new())
    }

    fn from_pieces_unchecked(grid: &GridSpec, pieces: Vec<SeamPiece>, apexes: Vec<Point>) -> Self {
        let mut parity = alloc::vec![false; 3 * grid.len()];
        for piece in &pieces {
            let (lo, hi) = piece.bounds();
            let mut start = [0usize; 3];
            let mut end = [0usize; 3];
            for a in 0..3 {
                if a < grid.dim {
                    let l = libm::floor((lo[a] - grid.origin[a]) / grid.h) - 1.0;
                    let u = libm::ceil((hi[a] - grid.origin[a]) / grid.h) + 1.0;
                    start[a] = l.max(0.0) as usize;
                    end[a] = (u.max(-1.0) + 1.0).min(grid.dims[a] as f64) as usize;
                } else {
                    end[a] = 1;
                }
            }
            for k in start[2]..end[2] {
                for j in start[1]..end[1] {
                    for i in start[0]..end[0] {
                        let x = grid.index([i, j, k]);
                        let px = grid.position(x);
                        for axis in 0..grid.dim {
                            if let Some(y) = grid.neighbor(x, axis, true) {
                                let c = piece.crossing(&px, &grid.position(y));
                                if c.sign != 0 {
                                    let e = GridSpec::edge_index(x, axis);
                                    parity[e] = !parity[e];
                                }
                            }
                        }
                    }
                }
            }
        }
        let crossed = parity
            .iter()
            .enumerate()
            .filter_map(|(e, &p)| p.then_some(e))
            .collect();
        let bvh = Bvh::build(&pieces.iter().map(SeamPiece::bounds).collect::<Vec<_>>());
        Self {
            pieces,
            apexes,
            crossed,
            bvh,
        }
    }

    /// Seam from explicit triangles (3D). The triangles' mod-2 edge boundary
    /// must be exactly the set of Γ segments.
    pub fn from_triangles(gamma: &BoundaryManifold, grid: &GridSpec, triangles: Vec<[Point; 3]>) -> Result<Self> {
        if gamma.dim() != 3 {
            return Err(Error::SeamBoundaryMismatch("triangle seams need a 3D boundary".into()));
        }
        gamma.check_in_grid(grid)?;
        let key = |p: &Point, q: &Point| {
            let a = p.map(f64::to_bits);
            let b = q.map(f64::to_bits);
            if a <= b {
                (a, b)
            } else {
                (b, a)
            }
        };
        let mut count: BTreeMap<([u64; 3], [u64; 3]), usize> = BTreeMap::new();
        for t in &triangles {
            for i in 0..3 {
                *count.entry(key(&t[i], &t[(i + 1) % 3])).or_default() += 1;
            }
        }
        let boundary: Vec<_> = count.into_iter().filter(|(_, c)| c % 2 == 1).map(|(k, _)| k).collect();
        let mut expected = Vec::new();
        for c in gamma.components() {
            let v = c.vertices();
            for i in 0..v.len() {
                expected.push(key(&v[i], &v[(i + 1) % v.len()]));
            }
        }
        expected.sort();
        if boundary != expected {
            return Err(Error::SeamBoundaryMismatch(format!(
                "seam boundary has {} edges, boundary has {}",
                boundary.len(),
                expected.len()
            )));
        }
        let pieces = triangles.into_iter().map(SeamPiece::Triangle).collect();
        Ok(Self::from_pieces_unchecked(grid, pieces, Vec::new()))
    }

    pub fn pieces(&self) -> &[SeamPiece] {
        &self.pieces
    }

    /// Cone apex (3D) or ray end point (2D) of each component.
    pub fn apexes(&self) -> &[Point] {
        &self.apexes
    }

    /// Edges crossed an odd number of times, ascending.
    pub fn crossed_edges(&self) -> &[usize] {
        &self.crossed
    }

    /// Distance from `x` to the seam (infinite for an empty seam).
    pub fn distance(&self, x: &Point) -> f64 {
        self.bvh
            .nearest(x, |i| self.pieces[i].dist2(x))
            .map_or(f64::INFINITY, |(_, d2)| libm::sqrt(d2))
    }

    /// Parity of crossings of the straight segment `a → b` with the seam.
    pub fn segment_parity(&self, a: &Point, b: &Point) -> bool {
        let mut odd = false;
        let lo: Point = core::array::from_fn(|k| a[k].min(b[k]));
        let hi: Point = core::array::from_fn(|k| a[k].max(b[k]));
        let mid: Point = core::array::from_fn(|k| 0.5 * (lo[k] + hi[k]));
        let r = crate::grid::dist(&lo, &hi) * 0.5;
        self.bvh.within(&mid, r, |i| {
            if self.pieces[i].crossing(a, b).sign != 0 {
                odd = !odd;
            }
        });
        odd
    }
}

/// Cone seam over every component of Γ (a ray to just outside the nearest box
/// face for planar points).
pub fn build_seam(gamma: &BoundaryManifold, grid: &GridSpec) -> Result<SeamSurface> {
    gamma.check_in_grid(grid)?;
    let mut pieces = Vec::new();
    let mut apexes = Vec::new();
    for c in 0..gamma.components().len() {
        let p = geometry::cone_seam(gamma, c, grid);
        apexes.push(match (&gamma.components()[c], &p[0]) {
            (Component::Point(_), SeamPiece::Segment([_, q])) => *q,
            (comp, _) => comp.centroid(),
        });
        pieces.extend(p);
    }
    Ok(SeamSurface::from_pieces_unchecked(grid, pieces, apexes))
}

/// Seam made of the band of triangles joining two loop components with the
/// same vertex count (vertex `i` of one to vertex `i` of the other).
pub fn band_seam(gamma: &BoundaryManifold, grid: &GridSpec, a: usize, b: usize) -> Result<SeamSurface> {
    gamma.check_in_grid(grid)?;
    let comps = gamma.components();
    let (Some(Component::Loop(v0)), Some(Component::Loop(v1))) = (comps.get(a), comps.get(b)) else {
        return Err(Error::InvalidGamma("band seam needs two loop components".into()));
    };
    if v0.len() != v1.len() || a == b {
        return Err(Error::InvalidGamma("band seam loops must differ and have equal vertex counts".into()));
    }
    let mut tris = Vec::with_capacity(2 * v0.len());
    for i in 0..v0.len() {
        let j = (i + 1) % v0.len();
        tris.push([v0[i], v0[j], v1[j]]);
        tris.push([v0[i], v1[j], v1[i]]);
    }
    SeamSurface::from_triangles(gamma, grid, tris)
}

/// One sign per grid edge, stored as "flipped" flags indexed by
/// [`GridSpec::edge_index`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaugeField {
    flipped: Vec<bool>,
}

impl GaugeField {
    pub fn trivial(grid: &GridSpec) -> Self {
        Self {
            flipped: alloc::vec![false; 3 * grid.len()],
        }
    }

    /// Gauge from flags indexed by edge index; flags on non-existent edges must be false.
    pub fn from_flags(grid: &GridSpec, flipped: Vec<bool>) -> Result<Self> {
        if flipped.len() != 3 * grid.len() {
            return Err(Error::DimensionMismatch("gauge flag count".into()));
        }
        for (e, &f) in flipped.iter().enumerate() {
            if f && !grid.has_edge(e / 3, e % 3) {
                return Err(Error::DimensionMismatch(format!("flag on missing edge {e}")));
            }
        }
        Ok(Self { flipped })
    }

    #[inline]
    pub fn is_flipped(&self, edge: usize) -> bool {
        self.flipped[edge]
    }

    #[inline]
    pub fn sign(&self, edge: usize) -> f64 {
        if self.flipped[edge] {
            -1.0
        } else {
            1.0
        }
    }

    pub fn flipped_count(&self) -> usize {
        self.flipped.iter().filter(|f| **f).count()
    }

    /// Product of signs around the plaquette at `node` spanned by axes `a < b`,
    /// or `None` if the plaquette leaves the grid.
    pub fn plaquette_holonomy(&self, grid: &GridSpec, node: usize, a: usize, b: usize) -> Option<i8> {
        let xa = grid.neighbor(node, a, true)?;
        let xb = grid.neighbor(node, b, true)?;
        let flips = [
            GridSpec::edge_index(node, a),
            GridSpec::edge_index(xa, b),
            GridSpec::edge_index(xb, a),
            GridSpec::edge_index(node, b),
        ]
        .iter()
        .filter(|&&e| self.flipped[e])
        .count();
        Some(if flips % 2 == 0 { 1 } else { -1 })
    }

    /// Product of signs along a closed loop.
    pub fn holonomy(&self, grid: &GridSpec, path: &GridLoop) -> i8 {
        let flips = path.steps(grid).filter(|&(_, _, e)| self.flipped[e]).count();
        if flips % 2 == 0 {
            1
        } else {
            -1
        }
    }
}

/// σ_e = −1 exactly on the edges the seam crosses an odd number of times.
pub fn gauge_field_from_seam(seam: &SeamSurface, grid: &GridSpec) -> GaugeField {
    let mut g = GaugeField::trivial(grid);
    for &e in seam.crossed_edges() {
        if e < g.flipped.len() {
            g.flipped[e] = true;
        }
    }
    g
}

/// Node-sign field τ with `σ₂ = τ_x σ₁ τ_y` on every edge, if one exists
/// (τ = +1 at the first node of each connected piece of the grid).
pub fn relating_transform(grid: &GridSpec, g1: &GaugeField, g2: &GaugeField) -> Option<Vec<i8>> {
    let mut tau = alloc::vec![0i8; grid.len()];
    let mut queue = VecDeque::new();
    tau[0] = 1;
    queue.push_back(0usize);
    while let Some(x) = queue.pop_front() {
        for axis in 0..grid.dim {
            for forward in [true, false] {
                let Some(y) = grid.neighbor(x, axis, forward) else { continue };
                let e = if forward {
                    GridSpec::edge_index(x, axis)
                } else {
                    GridSpec::edge_index(y, axis)
                };
                let rel = if g1.flipped[e] != g2.flipped[e] { -1 } else { 1 };
                let want = tau[x] * rel;
                if tau[y] == 0 {
                    tau[y] = want;
                    queue.push_back(y);
                } else if tau[y] != want {
                    return None;
                }
            }
        }
    }
    Some(tau)
}

/// Grid values of a section of the bundle described by `gauge`.
#[derive(Debug, Clone)]
pub struct GaugeSection {
    pub grid: GridSpec,
    pub gauge: Arc<GaugeField>,
    pub u: Vec<f64>,
    pub eps: f64,
    pub bc: BoundaryCondition,
}

impl GaugeSection {
    pub fn new(grid: GridSpec, gauge: Arc<GaugeField>, u: Vec<f64>, eps: f64, bc: BoundaryCondition) -> Result<Self> {
        if u.len() != grid.len() || gauge.flipped.len() != 3 * grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values / {} gauge flags for {} nodes",
                u.len(),
                gauge.flipped.len(),
                grid.len()
            )));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidConfig(format!("eps = {eps} must be positive")));
        }
        if let Some(i) = u.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(format!("non-finite value at node {i}")));
        }
        Ok(Self { grid, gauge, u, eps, bc })
    }

    /// Same section at a different ε.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.grid, self.gauge.clone(), self.u.clone(), eps, self.bc)
    }

    /// Does the edge `e = (x, y)` carry a zero of the section? Zero values
    /// count as positive.
    #[inline]
    pub fn edge_has_zero(&self, x: usize, y: usize, e: usize) -> bool {
        let sx = self.u[x] >= 0.0;
        let sy = self.u[y] >= 0.0;
        (sx != sy) != self.gauge.is_flipped(e)
    }

    /// Value at an arbitrary point of the box, by multilinear interpolation in
    /// the frame of the point. The frame is the one in which the section's
    /// gauge equals `seam`'s: values of cell corners are carried to the point
    /// along straight segments, flipping sign on each seam crossing.
    pub fn interpolate(&self, seam: &SeamSurface, x: &Point) -> f64 {
        let g = &self.grid;
        let c = g.cell_of(x);
        let base = g.index(c);
        let mut acc = 0.0;
        for corner in 0..(1usize << g.dim) {
            let mut idx = base;
            let mut w = 1.0;
            for a in 0..g.dim {
                let t = ((x[a] - g.origin[a]) / g.h - c[a] as f64).clamp(0.0, 1.0);
                if corner >> a & 1 == 1 {
                    idx += g.stride(a);
                    w *= t;
                } else {
                    w *= 1.0 - t;
                }
            }
            if w == 0.0 {
                continue;
            }
            let flip = seam.segment_parity(&g.position(idx), x);
            acc += w * if flip { -self.u[idx] } else { self.u[idx] };
        }
        acc
    }
}

/// Applies the node-sign field `tau`: `u' = τ u`, `σ'_{xy} = τ_x σ_{xy} τ_y`.
pub fn gauge_transform(s: &GaugeSection, tau: &[i8]) -> Result<GaugeSection> {
    if tau.len() != s.u.len() {
        return Err(Error::DimensionMismatch("tau length".into()));
    }
    if tau.iter().any(|t| *t != 1 && *t != -1) {
        return Err(Error::InvalidConfig("tau values must be ±1".into()));
    }
    let g = &s.grid;
    let mut flipped = s.gauge.flipped.clone();
    for x in 0..g.len() {
        for axis in 0..g.dim {
            if let Some(y) = g.neighbor(x, axis, true) {
                if tau[x] != tau[y] {
                    let e = GridSpec::edge_index(x, axis);
                    flipped[e] = !flipped[e];
                }
            }
        }
    }
    let u = s.u.iter().zip(tau).map(|(v, t)| if *t < 0 { -v } else { *v }).collect();
    GaugeSection::new(*g, Arc::new(GaugeField { flipped }), u, s.eps, s.bc)
}

/// Angle of the seam ray leaving the planar point `p`.
fn ray_angle(seam: &SeamSurface, p: &Point) -> Option<f64> {
    seam.pieces().iter().find_map(|piece| match piece {
        SeamPiece::Segment([a, b]) if a == p => Some(libm::atan2(b[1] - a[1], b[0] - a[0])),
        _ => None,
    })
}

/// Sign making `z ↦ s(z) u(z² + p)` continuous across the seam ray at angle `theta`:
/// +1 for `arg z ∈ (θ/2, θ/2 + π)`.
pub fn lift_sign(z: &Point, theta: f64) -> f64 {
    let half = 0.5 * theta;
    let (c, s) = (libm::cos(half), libm::sin(half));
    // Rotate z by −θ/2; the sign is that of the imaginary part (positive half-plane).
    let im = -s * z[0] + c * z[1];
    if im > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Pulls the planar section back along `z ↦ z² + p` for the point component
/// `component` of Γ and samples it on the nodes of `zgrid`. The result is odd
/// in `z` and continuous away from `z = 0`.
pub fn lift_to_double_cover_2d(
    s: &GaugeSection,
    gamma: &BoundaryManifold,
    seam: &SeamSurface,
    component: usize,
    zgrid: &GridSpec,
) -> Result<Vec<f64>> {
    if s.grid.dim != 2 || zgrid.dim != 2 || gamma.dim() != 2 {
        return Err(Error::DimensionMismatch("double cover lift is planar".into()));
    }
    let Some(Component::Point(p)) = gamma.components().get(component).cloned() else {
        return Err(Error::InvalidGamma(format!("component {component} is not a point")));
    };
    if *s.gauge != gauge_field_from_seam(seam, &s.grid) {
        return Err(Error::GaugeMismatch);
    }
    let theta = ray_angle(seam, &p).ok_or(Error::GaugeMismatch)?;
    let zmax = (0..zgrid.len())
        .map(|i| crate::grid::norm(&zgrid.position(i)))
        .fold(0.0, f64::max);
    let reach = zmax * zmax;
    for (ci, c) in gamma.components().iter().enumerate() {
        if ci != component && crate::grid::dist(&c.vertices()[0], &p) <= reach {
            return Err(Error::RegionTouchesOtherComponent);
        }
    }
    if s.grid.distance_to_box(&p) < reach {
        return Err(Error::RegionTouchesOtherComponent);
    }
    Ok((0..zgrid.len())
        .map(|i| {
            let z = zgrid.position(i);
            let x = [z[0] * z[0] - z[1] * z[1] + p[0], 2.0 * z[0] * z[1] + p[1], 0.0];
            lift_sign(&z, theta) * s.interpolate(seam, &x)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{circle_vertices, linking};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent piercing oracle: does segment `a b` pass through the axis-
    /// aligned square with lower corner `o`, side `h`, spanned by axes `i, j`?
    fn pierces_square(a: &Point, b: &Point, o: &Point, h: f64, i: usize, j: usize) -> bool {
        let k = 3 - i - j;
        let (da, db) = (a[k] - o[k], b[k] - o[k]);
        if (da > 0.0) == (db > 0.0) {
            return false;
        }
        let t = da / (da - db);
        let pi = a[i] + t * (b[i] - a[i]);
        let pj = a[j] + t * (b[j] - a[j]);
        pi > o[i] && pi < o[i] + h && pj > o[j] && pj < o[j] + h
    }

    fn check_plaquettes(gamma: &BoundaryManifold, grid: &GridSpec) {
        let seam = build_seam(gamma, grid).unwrap();
        let gauge = gauge_field_from_seam(&seam, grid);
        for x in 0..grid.len() {
            for a in 0..grid.dim {
                for b in a + 1..grid.dim {
                    let Some(hol) = gauge.plaquette_holonomy(grid, x, a, b) else { continue };
                    let o = grid.position(x);
                    let mut odd = false;
                    for c in gamma.components() {
                        match c {
                            Component::Point(p) => {
                                if p[0] > o[0] && p[0] < o[0] + grid.h && p[1] > o[1] && p[1] < o[1] + grid.h {
                                    odd = !odd;
                                }
                            }
                            Component::Loop(v) => {
                                for s in 0..v.len() {
                                    if pierces_square(&v[s], &v[(s + 1) % v.len()], &o, grid.h, a, b) {
                                        odd = !odd;
                                    }
                                }
                            }
                        }
                    }
                    assert_eq!(hol == -1, odd, "plaquette at {x} axes {a},{b}");
                }
            }
        }
    }

    #[test]
    fn holonomy_marks_pierced_plaquettes_2d() {
        let grid = GridSpec::centered(2, 24, 3.0).unwrap();
        let gamma = BoundaryManifold::points(&[[0.0; 3], [0.5, -0.3, 0.0], [-0.6, 0.7, 0.0]])
            .unwrap()
            .offset_for_grid(&grid)
            .unwrap();
        check_plaquettes(&gamma, &grid);
    }

    #[test]
    fn holonomy_marks_pierced_plaquettes_3d() {
        let grid = GridSpec::centered(3, 26, 4.0).unwrap();
        let circle = BoundaryManifold::new(3, alloc::vec![Component::circle([0.0; 3], 1.0, circle_vertices())])
            .unwrap()
            .offset_for_grid(&grid)
            .unwrap();
        check_plaquettes(&circle, &grid);
        // A non-planar (saddle) loop and a pair of coaxial circles.
        let saddle: Vec<Point> = (0..40)
            .map(|i| {
                let t = 2.0 * core::f64::consts::PI * i as f64 / 40.0;
                [0.9 * libm::cos(t), 0.8 * libm::sin(t), 0.3 * libm::cos(2.0 * t) + 0.01]
            })
            .collect();
        check_plaquettes(&BoundaryManifold::new(3, alloc::vec![Component::Loop(saddle)]).unwrap(), &grid);
        let two = BoundaryManifold::new(
            3,
            alloc::vec![
                Component::circle([0.0, 0.0, -0.25], 1.0, circle_vertices()),
                Component::circle([0.0, 0.0, 0.25], 1.0, circle_vertices()),
            ],
        )
        .unwrap()
        .offset_for_grid(&grid)
        .unwrap();
        check_plaquettes(&two, &grid);
    }

    /// Gauss linking number of two closed polygons (exact solid-angle form).
    fn gauss_linking(p: &[Point], q: &[Point]) -> f64 {
        use crate::grid::{cross, dot, norm, sub};
        let unit = |v: Point| {
            let n = norm(&v);
            if n == 0.0 {
                v
            } else {
                crate::grid::scale(&v, 1.0 / n)
            }
        };
        let mut total = 0.0;
        for i in 0..p.len() {
            let (a, b) = (p[i], p[(i + 1) % p.len()]);
            for j in 0..q.len() {
                let (c, d) = (q[j], q[(j + 1) % q.len()]);
                let r13 = sub(&c, &a);
                let r14 = sub(&d, &a);
                let r23 = sub(&c, &b);
                let r24 = sub(&d, &b);
                let n1 = unit(cross(&r13, &r14));
                let n2 = unit(cross(&r14, &r24));
                let n3 = unit(cross(&r24, &r23));
                let n4 = unit(cross(&r23, &r13));
                let asin = |x: f64| libm::asin(x.clamp(-1.0, 1.0));
                let omega = asin(dot(&n1, &n2)) + asin(dot(&n2, &n3)) + asin(dot(&n3, &n4)) + asin(dot(&n4, &n1));
                let s = dot(&cross(&sub(&d, &c), &sub(&b, &a)), &r13);
                total += if s > 0.0 { omega } else if s < 0.0 { -omega } else { 0.0 };
            }
        }
        total / (4.0 * core::f64::consts::PI)
    }

    #[test]
    fn loop_linking_matches_gauss_integral_and_holonomy() {
        let grid = GridSpec::centered(3, 17, 4.0).unwrap();
        let gamma = BoundaryManifold::new(
            3,
            alloc::vec![
                Component::circle([0.0, 0.0, -0.25], 1.0, 48),
                Component::circle([0.0, 0.0, 0.25], 1.0, 48),
            ],
        )
        .unwrap()
        .offset_for_grid(&grid)
        .unwrap();
        let seam = build_seam(&gamma, &grid).unwrap();
        let gauge = gauge_field_from_seam(&seam, &grid);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut linked = 0;
        for _ in 0..200 {
            let l = GridLoop::random(&grid, &mut rng, 30);
            let pts: Vec<Point> = l.nodes()[..l.len()].iter().map(|&n| grid.position(n)).collect();
            let (links, total) = linking(&l, &gamma, &grid).unwrap();
            for (ci, c) in gamma.components().iter().enumerate() {
                let g = gauss_linking(&pts, c.vertices());
                assert!((g - links[ci] as f64).abs() < 1e-6, "gauss {g} vs {}", links[ci]);
            }
            let hol = gauge.holonomy(&grid, &l);
            assert_eq!(hol == -1, total == 1);
            if links.iter().any(|&k| k != 0) {
                linked += 1;
            }
        }
        assert!(linked > 20, "too few linked loops: {linked}");
    }

    #[test]
    fn loop_around_both_circles_has_trivial_holonomy() {
        let grid = GridSpec::centered(3, 33, 4.0).unwrap();
        let gamma = BoundaryManifold::new(
            3,
            alloc::vec![
                Component::circle([0.0, 0.0, -0.25], 1.0, circle_vertices()),
                Component::circle([0.0, 0.0, 0.25], 1.0, circle_vertices()),
            ],
        )
        .unwrap()
        .offset_for_grid(&grid)
        .unwrap();
        let gauge = gauge_field_from_seam(&build_seam(&gamma, &grid).unwrap(), &grid);
        // Rectangle in the xz-plane through one side of both rings.
        let y = grid.cell_of(&[0.0; 3])[1];
        let l = GridLoop::rectangle(&grid, [16, y, 8], (0, 2), 12, 16).unwrap();
        let links = linking(&l, &gamma, &grid).unwrap().0;
        assert_eq!(links.iter().map(|k| k.abs()).collect::<Vec<_>>(), alloc::vec![1, 1]);
        assert_eq!(links[0], links[1]);
        assert_eq!(gauge.holonomy(&grid, &l), 1);
    }

    #[test]
    fn empty_and_doubled_seams_are_trivial() {
        let grid = GridSpec::centered(3, 9, 2.0).unwrap();
        let empty = build_seam(&BoundaryManifold::empty(3).unwrap(), &grid).unwrap();
        assert_eq!(gauge_field_from_seam(&empty, &grid).flipped_count(), 0);
        let tri = [[-0.6, -0.6, 0.05], [0.7, -0.5, 0.05], [0.1, 0.8, 0.05]];
        let seam = SeamSurface::from_pieces_unchecked(
            &grid,
            alloc::vec![SeamPiece::Triangle(tri), SeamPiece::Triangle(tri)],
            Vec::new(),
        );
        assert_eq!(gauge_field_from_seam(&seam, &grid).flipped_count(), 0);
    }

    #[test]
    fn planar_ray_seam_flips_crossing_edges() {
        let grid = GridSpec::centered(2, 16, 3.0).unwrap();
        let gamma = BoundaryManifold::points(&[[0.0; 3]]).unwrap().offset_for_grid(&grid).unwrap();
        let seam = build_seam(&gamma, &grid).unwrap();
        let gauge = gauge_field_from_seam(&seam, &grid);
        let p = gamma.components()[0].vertices()[0];
        for x in 0..grid.len() {
            if let Some(y) = grid.neighbor(x, 1, true) {
                let (a, b) = (grid.position(x), grid.position(y));
                let expect = a[0] > p[0] && a[1] < p[1] && b[1] > p[1];
                assert_eq!(gauge.is_flipped(GridSpec::edge_index(x, 1)), expect);
            }
            if grid.neighbor(x, 0, true).is_some() {
                assert!(!gauge.is_flipped(GridSpec::edge_index(x, 0)));
            }
        }
        let l = GridLoop::square_around(&grid, &p, (0, 1), 0.4).unwrap();
        assert_eq!(gauge.holonomy(&grid, &l), -1);
    }

    #[test]
    fn cylinder_and_disk_seams_are_gauge_equivalent() {
        let grid = GridSpec::centered(3, 21, 4.0).unwrap();
        let (c0, c1) = (
            Component::circle([0.0, 0.0, -0.25], 1.0, 64),
            Component::circle([0.0, 0.0, 0.25], 1.0, 64),
        );
        let gamma = BoundaryManifold::new(3, alloc::vec![c0, c1]).unwrap().offset_for_grid(&grid).unwrap();
        let (v0, v1) = (gamma.components()[0].vertices(), gamma.components()[1].vertices());
        let mut tris = Vec::new();
        for i in 0..v0.len() {
            let j = (i + 1) % v0.len();
            tris.push([v0[i], v0[j], v1[j]]);
            tris.push([v0[i], v1[j], v1[i]]);
        }
        let cyl = SeamSurface::from_triangles(&gamma, &grid, tris.clone()).unwrap();
        let disks = build_seam(&gamma, &grid).unwrap();
        let g1 = gauge_field_from_seam(&cyl, &grid);
        let g2 = gauge_field_from_seam(&disks, &grid);
        assert_ne!(g1, g2);
        let tau = relating_transform(&grid, &g1, &g2).expect("gauge equivalent");
        let s = GaugeSection::new(grid, Arc::new(g1), alloc::vec![0.5; grid.len()], 0.1, BoundaryCondition::Natural).unwrap();
        assert_eq!(*gauge_transform(&s, &tau).unwrap().gauge, g2);
        tris.pop();
        assert!(matches!(
            SeamSurface::from_triangles(&gamma, &grid, tris),
            Err(Error::SeamBoundaryMismatch(_))
        ));
    }

    #[test]
    fn gauge_transform_preserves_holonomy() {
        let grid = GridSpec::centered(2, 12, 3.0).unwrap();
        let gamma = BoundaryManifold::points(&[[0.2, 0.1, 0.0]]).unwrap();
        let seam = build_seam(&gamma, &grid).unwrap();
        let gauge = Arc::new(gauge_field_from_seam(&seam, &grid));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let s = GaugeSection::new(grid, gauge, u, 0.2, BoundaryCondition::Natural).unwrap();
        let tau: Vec<i8> = (0..grid.len()).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
        let t = gauge_transform(&s, &tau).unwrap();
        for x in 0..grid.len() {
            assert_eq!(
                s.gauge.plaquette_holonomy(&grid, x, 0, 1),
                t.gauge.plaquette_holonomy(&grid, x, 0, 1)
            );
            assert_eq!(s.u[x].abs(), t.u[x].abs());
        }
        let back = gauge_transform(&t, &tau).unwrap();
        assert_eq!(back.u, s.u);
        assert_eq!(back.gauge, s.gauge);
        let neg = gauge_transform(&s, &alloc::vec![-1; grid.len()]).unwrap();
        assert_eq!(neg.gauge, s.gauge);
    }

    #[test]
    fn lift_of_zero_is_zero_and_lift_is_odd() {
        let grid = GridSpec::centered(2, 41, 4.0).unwrap();
        let gamma = BoundaryManifold::points(&[[0.0; 3]]).unwrap().offset_for_grid(&grid).unwrap();
        let seam = build_seam(&gamma, &grid).unwrap();
        let gauge = Arc::new(gauge_field_from_seam(&seam, &grid));
        let zgrid = GridSpec::centered(2, 20, 1.6).unwrap();
        let zero = GaugeSection::new(grid, gauge.clone(), alloc::vec![0.0; grid.len()], 0.1, BoundaryCondition::Natural).unwrap();
        let v = lift_to_double_cover_2d(&zero, &gamma, &seam, 0, &zgrid).unwrap();
        assert!(v.iter().all(|x| *x == 0.0));
        // |x - p| in the built gauge is the unsigned distance; its lift is odd and
        // positive on the upper half plane (seam along +x).
        let p = gamma.components()[0].vertices()[0];
        let u = (0..grid.len()).map(|i| crate::grid::dist(&grid.position(i), &p).min(1.0)).collect();
        let s = GaugeSection::new(grid, gauge, u, 0.1, BoundaryCondition::Natural).unwrap();
        let v = lift_to_double_cover_2d(&s, &gamma, &seam, 0, &zgrid).unwrap();
        for i in 0..zgrid.len() {
            let c = zgrid.coords(i);
            let mirror = zgrid.index([19 - c[0], 19 - c[1], 0]);
            assert!((v[i] + v[mirror]).abs() < 1e-12);
            let z = zgrid.position(i);
            if z[1] > 0.0 && (z[0] * z[0] + z[1] * z[1]) > 0.01 {
                assert!(v[i] > 0.0, "v({z:?}) = {}", v[i]);
            }
        }
        let big = GridSpec::centered(2, 21, 4.0).unwrap();
        assert!(matches!(
            lift_to_double_cover_2d(&s, &gamma, &seam, 0, &big),
            Err(Error::RegionTouchesOtherComponent)
        ));
    }
}
