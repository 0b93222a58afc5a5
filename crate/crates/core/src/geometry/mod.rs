//! The boundary Γ, distances to it, grid loops and linking numbers.

pub mod bvh;
pub mod predicates;

use alloc::format;
use alloc::vec::Vec;
use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{self, dist2, dot, norm, scale, sub, GridSpec, Point};
use bvh::Bvh;
use predicates::{segment_segment_2d, segment_triangle};

/// One connected piece of Γ.
#[derive(Debug, Clone, PartialEq)]
pub enum Component {
    /// An isolated point (planar problems).
    Point(Point),
    /// A closed polyline; the last vertex connects back to the first.
    Loop(Vec<Point>),
}

impl Component {
    /// Regular polygon inscribed in the circle of radius `radius` about
    /// `center`, lying in the plane `z = center[2]`, counter-clockwise seen
    /// from `+z`.
    pub fn circle(center: Point, radius: f64, vertices: usize) -> Self {
        Component::Loop(
            (0..vertices)
                .map(|i| {
                    let t = 2.0 * core::f64::consts::PI * i as f64 / vertices as f64;
                    [
                        center[0] + radius * libm::cos(t),
                        center[1] + radius * libm::sin(t),
                        center[2],
                    ]
                })
                .collect(),
        )
    }

    pub fn vertices(&self) -> &[Point] {
        match self {
            Component::Point(p) => core::slice::from_ref(p),
            Component::Loop(v) => v,
        }
    }

    pub fn centroid(&self) -> Point {
        let v = self.vertices();
        let mut c = [0.0; 3];
        for p in v {
            c = grid::add(&c, p);
        }
        scale(&c, 1.0 / v.len() as f64)
    }
}

/// Number of polygon vertices used for a circle of the given radius: 64 per
/// unit of curvature radius along the curve, i.e. `ceil(128 π)` for any radius.
pub fn circle_vertices() -> usize {
    libm::ceil(128.0 * core::f64::consts::PI) as usize
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: Point,
    b: Point,
    component: usize,
}

/// Nearest point of Γ to a query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nearest {
    pub distance: f64,
    pub point: Point,
    pub component: usize,
}

/// Γ: isolated points in the plane or closed polylines in space.
#[derive(Debug, Clone)]
pub struct BoundaryManifold {
    dim: usize,
    components: Vec<Component>,
    segments: Vec<Segment>,
    bvh: Bvh,
}

pub(crate) fn closest_on_segment(p: &Point, a: &Point, b: &Point) -> (Point, f64) {
    let ab = sub(b, a);
    let l2 = dot(&ab, &ab);
    let t = if l2 > 0.0 {
        (dot(&sub(p, a), &ab) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = grid::add(a, &scale(&ab, t));
    (q, t)
}

/// Squared distance between segments `p1 q1` and `p2 q2`.
pub(crate) fn segment_segment_dist2(p1: &Point, q1: &Point, p2: &Point, q2: &Point) -> f64 {
    let d1 = sub(q1, p1);
    let d2 = sub(q2, p2);
    let r = sub(p1, p2);
    let a = dot(&d1, &d1);
    let e = dot(&d2, &d2);
    let f = dot(&d2, &r);
    let (s, t);
    if a <= 0.0 && e <= 0.0 {
        return dist2(p1, p2);
    }
    if a <= 0.0 {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = dot(&d1, &r);
        if e <= 0.0 {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = dot(&d1, &d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 0.0 {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    let c1 = grid::add(p1, &scale(&d1, s));
    let c2 = grid::add(p2, &scale(&d2, t));
    dist2(&c1, &c2)
}

impl BoundaryManifold {
    pub fn new(dim: usize, components: Vec<Component>) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidGamma(format!("dimension {dim} not in {{2, 3}}")));
        }
        let mut comps = Vec::with_capacity(components.len());
        for (ci, c) in components.into_iter().enumerate() {
            match c {
                Component::Point(p) => {
                    if dim != 2 {
                        return Err(Error::InvalidGamma(format!(
                            "component {ci}: isolated points only allowed in 2D"
                        )));
                    }
                    if !p.iter().all(|x| x.is_finite()) || p[2] != 0.0 {
                        return Err(Error::InvalidGamma(format!("component {ci}: bad point")));
                    }
                    comps.push(Component::Point(p));
                }
                Component::Loop(mut v) => {
                    if dim != 3 {
                        return Err(Error::InvalidGamma(format!(
                            "component {ci}: closed polylines only allowed in 3D"
                        )));
                    }
                    if v.len() > 1 && v.first() == v.last() {
                        v.pop();
                    }
                    if v.len() < 8 {
                        return Err(Error::InvalidGamma(format!(
                            "component {ci}: {} vertices, need at least 8",
                            v.len()
                        )));
                    }
                    if !v.iter().flatten().all(|x| x.is_finite()) {
                        return Err(Error::InvalidGamma(format!("component {ci}: non-finite vertex")));
                    }
                    comps.push(Component::Loop(v));
                }
            }
        }
        let mut segments = Vec::new();
        for (ci, c) in comps.iter().enumerate() {
            match c {
                Component::Point(p) => segments.push(Segment { a: *p, b: *p, component: ci }),
                Component::Loop(v) => {
                    for i in 0..v.len() {
                        segments.push(Segment {
                            a: v[i],
                            b: v[(i + 1) % v.len()],
                            component: ci,
                        });
                    }
                }
            }
        }
        let boxes: Vec<(Point, Point)> = segments
            .iter()
            .map(|s| {
                (
                    core::array::from_fn(|k| s.a[k].min(s.b[k])),
                    core::array::from_fn(|k| s.a[k].max(s.b[k])),
                )
            })
            .collect();
        let gamma = Self {
            dim,
            components: comps,
            bvh: Bvh::build(&boxes),
            segments,
        };
        gamma.check_degeneracy()?;
        Ok(gamma)
    }

    /// Γ with no components.
    pub fn empty(dim: usize) -> Result<Self> {
        Self::new(dim, Vec::new())
    }

    pub fn points(points: &[Point]) -> Result<Self> {
        Self::new(2, points.iter().map(|p| Component::Point(*p)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Copy of Γ moved by `delta`.
    pub fn translated(&self, delta: &Point) -> Result<Self> {
        let mut d = *delta;
        if self.dim == 2 {
            d[2] = 0.0;
        }
        let comps = self
            .components
            .iter()
            .map(|c| match c {
                Component::Point(p) => Component::Point(grid::add(p, &d)),
                Component::Loop(v) => Component::Loop(v.iter().map(|p| grid::add(p, &d)).collect()),
            })
            .collect();
        Self::new(self.dim, comps)
    }

    /// Γ shifted by `h/3` along the diagonal so that no vertex lies on a node,
    /// edge or face centre of `grid`.
    pub fn offset_for_grid(&self, grid: &GridSpec) -> Result<Self> {
        let s = grid.h / 3.0;
        self.translated(&[s, s, s])
    }

    /// Largest distance between two vertices of Γ.
    pub fn diameter(&self) -> f64 {
        let v: Vec<&Point> = self.components.iter().flat_map(|c| c.vertices()).collect();
        let mut d: f64 = 0.0;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                d = d.max(dist2(v[i], v[j]));
            }
        }
        libm::sqrt(d)
    }

    /// Smallest distance from Γ to the box boundary (negative if Γ leaves the box).
    pub fn box_margin(&self, grid: &GridSpec) -> f64 {
        self.components
            .iter()
            .flat_map(|c| c.vertices())
            .map(|p| grid.distance_to_box(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Checks that Γ lies in the box with margin at least a quarter of its own
    /// diameter (and strictly positive).
    pub fn check_in_grid(&self, grid: &GridSpec) -> Result<()> {
        if grid.dim != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "grid is {}D, boundary is {}D",
                grid.dim, self.dim
            )));
        }
        let m = self.box_margin(grid);
        let need = 0.25 * self.diameter();
        if self.is_empty() || (m > 0.0 && m >= need) {
            Ok(())
        } else {
            Err(Error::InvalidGamma(format!(
                "box margin {m} below required {need}"
            )))
        }
    }

    fn check_degeneracy(&self) -> Result<()> {
        let scale = self.diameter().max(1e-300);
        let tol2 = (1e-9 * scale) * (1e-9 * scale);
        for s in &self.segments {
            if matches!(self.components[s.component], Component::Loop(_)) && dist2(&s.a, &s.b) <= tol2 {
                return Err(Error::DegenerateGamma(format!(
                    "component {} has a near-zero edge",
                    s.component
                )));
            }
        }
        let n = self.segments.len();
        for i in 0..n {
            for j in i + 1..n {
                let (si, sj) = (&self.segments[i], &self.segments[j]);
                if si.component == sj.component && self.adjacent(i, j) {
                    continue;
                }
                if segment_segment_dist2(&si.a, &si.b, &sj.a, &sj.b) <= tol2 {
                    return Err(Error::InvalidGamma(if si.component == sj.component {
                        format!("component {} intersects itself", si.component)
                    } else {
                        format!("components {} and {} touch", si.component, sj.component)
                    }));
                }
            }
        }
        Ok(())
    }

    fn adjacent(&self, i: usize, j: usize) -> bool {
        let c = self.segments[i].component;
        let first = self.segments.iter().position(|s| s.component == c).unwrap_or(0);
        let len = self.components[c].vertices().len();
        let (a, b) = (i - first, j - first);
        a == b || (a + 1) % len == b || (b + 1) % len == a
    }

    /// Exact Euclidean distance to Γ (infinite if Γ is empty).
    pub fn distance(&self, x: &Point) -> f64 {
        self.nearest(x).map_or(f64::INFINITY, |n| n.distance)
    }

    pub fn nearest(&self, x: &Point) -> Option<Nearest> {
        let (i, d2) = self.bvh.nearest(x, |i| {
            let s = &self.segments[i];
            dist2(x, &closest_on_segment(x, &s.a, &s.b).0)
        })?;
        let s = &self.segments[i];
        Some(Nearest {
            distance: libm::sqrt(d2),
            point: closest_on_segment(x, &s.a, &s.b).0,
            component: s.component,
        })
    }

    /// Smallest distance between two different components.
    pub fn component_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, si) in self.segments.iter().enumerate() {
            for sj in &self.segments[i + 1..] {
                if si.component != sj.component {
                    best = best.min(segment_segment_dist2(&si.a, &si.b, &sj.a, &sj.b));
                }
            }
        }
        libm::sqrt(best)
    }

    /// Discrete curvature radius: at each vertex, the radius of the circle
    /// through a polygon with the local edge length and turning angle.
    fn curvature_radius(&self) -> f64 {
        let mut best = f64::INFINITY;
        for c in &self.components {
            let Component::Loop(v) = c else { continue };
            let n = v.len();
            for i in 0..n {
                let e0 = sub(&v[i], &v[(i + n - 1) % n]);
                let e1 = sub(&v[(i + 1) % n], &v[i]);
                let (l0, l1) = (norm(&e0), norm(&e1));
                let cos = (dot(&e0, &e1) / (l0 * l1)).clamp(-1.0, 1.0);
                let half = 0.5 * libm::acos(cos);
                let s = libm::sin(half);
                if s > 0.0 {
                    best = best.min(l0.min(l1) / (2.0 * s));
                }
            }
        }
        best
    }

    /// Smallest distance between two stretches of the same loop that are at
    /// least `gap` apart along the curve.
    fn self_separation(&self, gap: f64) -> f64 {
        let mut best = f64::INFINITY;
        for c in &self.components {
            let Component::Loop(v) = c else { continue };
            let n = v.len();
            let mut arc = Vec::with_capacity(n + 1);
            arc.push(0.0);
            for i in 0..n {
                arc.push(arc[i] + grid::dist(&v[i], &v[(i + 1) % n]));
            }
            let total = arc[n];
            for i in 0..n {
                for j in i + 1..n {
                    let forward = arc[j] - arc[i + 1];
                    let backward = total - arc[j + 1] + arc[i];
                    if forward.min(backward) < gap {
                        continue;
                    }
                    best = best.min(segment_segment_dist2(&v[i], &v[(i + 1) % n], &v[j], &v[(j + 1) % n]));
                }
            }
        }
        libm::sqrt(best)
    }

    fn max_edge(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| grid::dist(&s.a, &s.b))
            .fold(0.0, f64::max)
    }

    /// Radius of a tube about Γ inside which the nearest point of Γ is unique
    /// (up to the polyline's own resolution), inside the box and below half the
    /// separation between components. The bound is checked on samples around
    /// every vertex and reduced until all samples pass.
    pub fn tubular_radius(&self, grid: &GridSpec) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::InvalidGamma("empty boundary has no tube".into()));
        }
        let mut r = self.box_margin(grid);
        if r <= 0.0 {
            return Err(Error::InvalidGamma("boundary touches the box".into()));
        }
        if self.components.len() > 1 {
            r = r.min(0.5 * self.component_separation());
        }
        if self.dim == 3 {
            let kappa = self.curvature_radius();
            r = r.min(kappa);
            r = r.min(0.5 * self.self_separation(core::f64::consts::PI * kappa));
        }
        let tol = if self.dim == 3 { self.max_edge() } else { 0.0 };
        for _ in 0..64 {
            match self.first_ambiguous_sample(r, tol) {
                None => return Ok(r),
                Some(rho) => r = 0.9 * rho.min(r),
            }
        }
        Err(Error::DegenerateGamma("tubular radius did not stabilise".into()))
    }

    /// Samples at radii `0.3r, 0.6r, 0.95r` around each vertex; returns the
    /// distance of the first sample whose nearest points spread by more than `tol`.
    fn first_ambiguous_sample(&self, r: f64, tol: f64) -> Option<f64> {
        let fracs = [0.3, 0.6, 0.95];
        for c in &self.components {
            let v = c.vertices();
            let n = v.len();
            for i in 0..n {
                let dirs: Vec<Point> = if self.dim == 2 {
                    (0..8)
                        .map(|k| {
                            let t = core::f64::consts::PI * k as f64 / 4.0;
                            [libm::cos(t), libm::sin(t), 0.0]
                        })
                        .collect()
                } else {
                    let t = sub(&v[(i + 1) % n], &v[(i + n - 1) % n]);
                    let t = scale(&t, 1.0 / norm(&t));
                    let seed = if t[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
                    let n1 = grid::cross(&t, &seed);
                    let n1 = scale(&n1, 1.0 / norm(&n1));
                    let n2 = grid::cross(&t, &n1);
                    (0..8)
                        .map(|k| {
                            let a = core::f64::consts::PI * k as f64 / 4.0;
                            grid::add(&scale(&n1, libm::cos(a)), &scale(&n2, libm::sin(a)))
                        })
                        .collect()
                };
                for f in fracs {
                    for d in &dirs {
                        let x = grid::add(&v[i], &scale(d, f * r));
                        if let Some(rho) = self.spread_exceeds(&x, tol) {
                            return Some(rho);
                        }
                    }
                }
            }
        }
        None
    }

    fn spread_exceeds(&self, x: &Point, tol: f64) -> Option<f64> {
        let near = self.nearest(x)?;
        let slack = 1e-12 * near.distance.max(1.0);
        let mut bad = false;
        self.bvh.within(x, near.distance + slack, |i| {
            let s = &self.segments[i];
            let (q, _) = closest_on_segment(x, &s.a, &s.b);
            if libm::sqrt(dist2(x, &q)) <= near.distance + slack && grid::dist(&q, &near.point) > tol + slack {
                bad = true;
            }
        });
        bad.then_some(near.distance)
    }
}

/// A piece of the seam: a segment in the plane or a triangle in space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeamPiece {
    Segment([Point; 2]),
    Triangle([Point; 3]),
}

impl SeamPiece {
    /// Signed crossing of the grid segment `a → b` with this piece.
    pub fn crossing(&self, a: &Point, b: &Point) -> predicates::Crossing {
        match self {
            SeamPiece::Segment([p, q]) => segment_segment_2d(a, b, p, q),
            SeamPiece::Triangle(t) => segment_triangle(a, b, t),
        }
    }

    pub fn bounds(&self) -> (Point, Point) {
        let pts: &[Point] = match self {
            SeamPiece::Segment(s) => s,
            SeamPiece::Triangle(t) => t,
        };
        let mut lo = pts[0];
        let mut hi = pts[0];
        for p in pts {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    /// Squared distance from `x` to the piece.
    pub fn dist2(&self, x: &Point) -> f64 {
        match self {
            SeamPiece::Segment([p, q]) => dist2(x, &closest_on_segment(x, p, q).0),
            SeamPiece::Triangle(t) => dist2(x, &closest_on_triangle(x, t)),
        }
    }
}

/// Closest point of triangle `t` to `p`.
pub(crate) fn closest_on_triangle(p: &Point, t: &[Point; 3]) -> Point {
    let (a, b, c) = (&t[0], &t[1], &t[2]);
    let ab = sub(b, a);
    let ac = sub(c, a);
    let ap = sub(p, a);
    let d1 = dot(&ab, &ap);
    let d2 = dot(&ac, &ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = sub(p, b);
    let d3 = dot(&ab, &bp);
    let d4 = dot(&ac, &bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return grid::add(a, &scale(&ab, d1 / (d1 - d3)));
    }
    let cp = sub(p, c);
    let d5 = dot(&ab, &cp);
    let d6 = dot(&ac, &cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return grid::add(a, &scale(&ac, d2 / (d2 - d6)));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return grid::add(b, &scale(&sub(c, b), w));
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    grid::add(a, &grid::add(&scale(&ab, v), &scale(&ac, w)))
}

/// Default seam of one component: in the plane a segment from the point to an
/// apex just outside the nearest box face (ties prefer `+x`, then `+y`, …);
/// in space the cone over the loop from its vertex centroid.
pub fn cone_seam(gamma: &BoundaryManifold, component: usize, grid: &GridSpec) -> Vec<SeamPiece> {
    match &gamma.components[component] {
        Component::Point(p) => {
            let up = grid.upper();
            let mut best = (f64::INFINITY, 0usize, true);
            for a in 0..grid.dim {
                for forward in [true, false] {
                    let d = if forward { up[a] - p[a] } else { p[a] - grid.origin[a] };
                    if d < best.0 {
                        best = (d, a, forward);
                    }
                }
            }
            let (d, a, forward) = best;
            let mut apex = *p;
            let reach = d + 1.5 * grid.h;
            apex[a] += if forward { reach } else { -reach };
            alloc::vec![SeamPiece::Segment([*p, apex])]
        }
        Component::Loop(v) => {
            let c = gamma.components[component].centroid();
            (0..v.len())
                .map(|i| SeamPiece::Triangle([c, v[i], v[(i + 1) % v.len()]]))
                .collect()
        }
    }
}

/// Closed path of grid edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridLoop {
    nodes: Vec<usize>,
}

impl GridLoop {
    pub fn new(grid: &GridSpec, nodes: Vec<usize>) -> Result<Self> {
        if nodes.len() < 2 || nodes.first() != nodes.last() {
            return Err(Error::InvalidLoop("loop must start and end at the same node".into()));
        }
        for w in nodes.windows(2) {
            if w[0] >= grid.len() || w[1] >= grid.len() || edge_between(grid, w[0], w[1]).is_none() {
                return Err(Error::InvalidLoop(format!(
                    "nodes {} and {} are not grid neighbours",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { nodes })
    }

    /// Counter-clockwise rectangle in the `(a, b)` coordinate plane with
    /// lower corner `corner` and `la × lb` edges.
    pub fn rectangle(grid: &GridSpec, corner: [usize; 3], axes: (usize, usize), la: usize, lb: usize) -> Result<Self> {
        let (a, b) = axes;
        if a == b || a >= grid.dim || b >= grid.dim || la == 0 || lb == 0 {
            return Err(Error::InvalidLoop("degenerate rectangle".into()));
        }
        if corner[a] + la >= grid.dims[a] || corner[b] + lb >= grid.dims[b] {
            return Err(Error::InvalidLoop("rectangle leaves the grid".into()));
        }
        let mut c = corner;
        let mut nodes = alloc::vec![grid.index(c)];
        for (axis, len, step) in [(a, la, 1isize), (b, lb, 1), (a, la, -1), (b, lb, -1)] {
            for _ in 0..len {
                c[axis] = (c[axis] as isize + step) as usize;
                nodes.push(grid.index(c));
            }
        }
        Self::new(grid, nodes)
    }

    /// Axis-aligned square of half-width `half` (in nodes, rounded outward)
    /// centred near `center`, in the `(a, b)` plane through the node nearest
    /// `center`.
    pub fn square_around(grid: &GridSpec, center: &Point, axes: (usize, usize), half: f64) -> Result<Self> {
        let cell = grid.cell_of(center);
        let k = libm::ceil(half / grid.h).max(1.0) as usize;
        let mut corner = cell;
        let (a, b) = axes;
        if cell[a] + 1 < k || cell[b] + 1 < k {
            return Err(Error::InvalidLoop("square leaves the grid".into()));
        }
        corner[a] = cell[a] + 1 - k;
        corner[b] = cell[b] + 1 - k;
        for ax in 0..grid.dim {
            if ax != a && ax != b {
                let t = libm::round((center[ax] - grid.origin[ax]) / grid.h);
                corner[ax] = (t.max(0.0) as usize).min(grid.dims[ax] - 1);
            }
        }
        Self::rectangle(grid, corner, axes, 2 * k - 1, 2 * k - 1)
    }

    /// The loop traversed `times` times.
    pub fn repeated(&self, times: usize) -> Self {
        let mut nodes = alloc::vec![self.nodes[0]];
        for _ in 0..times {
            nodes.extend_from_slice(&self.nodes[1..]);
        }
        Self { nodes }
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// Number of edges.
    pub fn len(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(from, to, edge index)` for each step of the loop.
    pub fn steps<'a>(&'a self, grid: &'a GridSpec) -> impl Iterator<Item = (usize, usize, usize)> + 'a {
        self.nodes.windows(2).map(move |w| {
            let e = edge_between(grid, w[0], w[1]).unwrap_or(usize::MAX);
            (w[0], w[1], e)
        })
    }

    /// Random loop: a rectangle in a random coordinate plane, pushed across
    /// `pushes` random plaquettes and cleaned of immediate backtracks.
    pub fn random<R: Rng>(grid: &GridSpec, rng: &mut R, pushes: usize) -> Self {
        let axes = if grid.dim == 2 {
            (0, 1)
        } else {
            let a = rng.gen_range(0..3);
            let b = (a + rng.gen_range(1..3)) % 3;
            (a, b)
        };
        let (a, b) = axes;
        let mut corner = [0usize; 3];
        for ax in 0..grid.dim {
            corner[ax] = rng.gen_range(0..grid.dims[ax] - 1);
        }
        let la = rng.gen_range(1..grid.dims[a] - corner[a]);
        let lb = rng.gen_range(1..grid.dims[b] - corner[b]);
        let mut nodes = Self::rectangle(grid, corner, axes, la, lb)
            .map(|l| l.nodes)
            .unwrap_or_default();
        for _ in 0..pushes {
            let i = rng.gen_range(0..nodes.len() - 1);
            let (x, y) = (nodes[i], nodes[i + 1]);
            let Some(e) = edge_between(grid, x, y) else { continue };
            let axis = e % 3;
            let d = rng.gen_range(0..grid.dim);
            if d == axis {
                continue;
            }
            let forward = rng.gen_bool(0.5);
            let (Some(x2), Some(y2)) = (grid.neighbor(x, d, forward), grid.neighbor(y, d, forward)) else {
                continue;
            };
            nodes.splice(i + 1..i + 1, [x2, y2]);
        }
        Self { nodes: remove_backtracks(nodes) }
    }
}

fn remove_backtracks(nodes: Vec<usize>) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(nodes.len());
    for n in nodes {
        if out.len() >= 2 && out[out.len() - 2] == n {
            out.pop();
        } else {
            out.push(n);
        }
    }
    out
}

/// Edge index joining grid neighbours `x` and `y`.
pub fn edge_between(grid: &GridSpec, x: usize, y: usize) -> Option<usize> {
    for axis in 0..grid.dim {
        if grid.neighbor(x, axis, true) == Some(y) {
            return Some(GridSpec::edge_index(x, axis));
        }
        if grid.neighbor(x, axis, false) == Some(y) {
            return Some(GridSpec::edge_index(y, axis));
        }
    }
    None
}

/// Integer linking of `path` with every component of Γ, computed as signed
/// crossings of the path with each component's seam, and the mod-2 total.
pub fn linking_with_seams(path: &GridLoop, grid: &GridSpec, seams: &[Vec<SeamPiece>]) -> Result<(Vec<i64>, u8)> {
    let mut links = alloc::vec![0i64; seams.len()];
    for (x, y, e) in path.steps(grid) {
        let (a, b) = (grid.position(x), grid.position(y));
        for (ci, pieces) in seams.iter().enumerate() {
            for piece in pieces {
                let c = piece.crossing(&a, &b);
                if c.degenerate && c.sign != 0 {
                    return Err(Error::LoopTouchesSeamEdgeCase { edge: e });
                }
                links[ci] += c.sign as i64;
            }
        }
    }
    let total = links.iter().map(|l| l.rem_euclid(2) as u8).sum::<u8>() % 2;
    Ok((links, total))
}

/// Linking of `path` with Γ using the default cone seams.
pub fn linking(path: &GridLoop, gamma: &BoundaryManifold, grid: &GridSpec) -> Result<(Vec<i64>, u8)> {
    let seams: Vec<Vec<SeamPiece>> = (0..gamma.components().len())
        .map(|c| cone_seam(gamma, c, grid))
        .collect();
    linking_with_seams(path, grid, &seams)
}
