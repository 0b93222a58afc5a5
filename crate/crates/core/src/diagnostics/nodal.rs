//! Nodal set extraction and its topology.
//!
//! 2D uses marching squares, 3D marching tetrahedra (six Freudenthal tetrahedra
//! per cube). Each cell is read in a local spanning-tree gauge; a value of
//! exactly zero counts as positive. Plaquettes with holonomy −1 get a centre
//! vertex joined to every crossing; cubes with a pierced face are skipped, so
//! the surface mesh has a boundary loop running around Γ.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::bundle::GaugeSection;
use crate::error::{Error, Result};
use crate::geometry::bvh::Bvh;
use crate::geometry::{closest_on_segment, closest_on_triangle};
use crate::grid::{dist2, GridSpec, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub components: usize,
    /// Boundary loops (3D) or polyline endpoints (2D).
    pub boundary: usize,
    pub euler: i64,
    /// Total genus of the surface components (3D, orientable reading).
    pub genus: Option<i64>,
    /// Edges shared by more than two triangles (3D) or vertices of degree
    /// above two (2D).
    pub singular: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodalMesh {
    pub dim: usize,
    pub vertices: Vec<Point>,
    /// Line segments (2D).
    pub segments: Vec<[usize; 2]>,
    /// Triangles (3D).
    pub triangles: Vec<[usize; 3]>,
    pub topology: Topology,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Key {
    Edge(usize, usize),
    Centre(usize),
}

struct Builder<'a> {
    s: &'a GaugeSection,
    index: BTreeMap<Key, usize>,
    vertices: Vec<Point>,
}

impl Builder<'_> {
    /// Vertex on the segment from node `a` to node `b`, where `ua` and `ub`
    /// are values in one common frame and have opposite signs.
    fn crossing(&mut self, a: usize, ua: f64, b: usize, ub: f64) -> usize {
        let (a, ua, b, ub) = if a < b { (a, ua, b, ub) } else { (b, ub, a, ua) };
        let key = Key::Edge(a, b);
        if let Some(&v) = self.index.get(&key) {
            return v;
        }
        let t = ua / (ua - ub);
        let (pa, pb) = (self.s.grid.position(a), self.s.grid.position(b));
        let p = [
            pa[0] + t * (pb[0] - pa[0]),
            pa[1] + t * (pb[1] - pa[1]),
            pa[2] + t * (pb[2] - pa[2]),
        ];
        self.vertices.push(p);
        self.index.insert(key, self.vertices.len() - 1);
        self.vertices.len() - 1
    }

    fn centre(&mut self, cell: usize, p: Point) -> usize {
        *self.index.entry(Key::Centre(cell)).or_insert_with(|| {
            self.vertices.push(p);
            self.vertices.len() - 1
        })
    }
}

#[inline]
fn positive(v: f64) -> bool {
    v >= 0.0
}

fn sign(s: &GaugeSection, from: usize, axis: usize) -> f64 {
    s.gauge.sign(GridSpec::edge_index(from, axis))
}

pub fn extract_nodal_set(s: &GaugeSection) -> NodalMesh {
    let mut b = Builder {
        s,
        index: BTreeMap::new(),
        vertices: Vec::new(),
    };
    match s.grid.dim {
        2 => {
            let segments = squares(&mut b);
            let topology = topology_2d(b.vertices.len(), &segments);
            NodalMesh {
                dim: 2,
                vertices: b.vertices,
                segments,
                triangles: Vec::new(),
                topology,
            }
        }
        3 => {
            let triangles = tetrahedra(&mut b);
            let topology = topology_3d(b.vertices.len(), &triangles);
            NodalMesh {
                dim: 3,
                vertices: b.vertices,
                segments: Vec::new(),
                triangles,
                topology,
            }
        }
        _ => {
            // 1D: every sign change is an isolated point.
            let g = &s.grid;
            for x in 0..g.len() - 1 {
                let (ua, ub) = (s.u[x], sign(s, x, 0) * s.u[x + 1]);
                if positive(ua) != positive(ub) {
                    b.crossing(x, ua, x + 1, ub);
                }
            }
            let n = b.vertices.len();
            NodalMesh {
                dim: 1,
                vertices: b.vertices,
                segments: Vec::new(),
                triangles: Vec::new(),
                topology: Topology {
                    vertices: n,
                    edges: 0,
                    faces: 0,
                    components: n,
                    boundary: 0,
                    euler: n as i64,
                    genus: None,
                    singular: 0,
                },
            }
        }
    }
}

fn squares(b: &mut Builder) -> Vec<[usize; 2]> {
    let s = b.s;
    let g = &s.grid;
    let (sx, sy) = (g.stride(0), g.stride(1));
    let mut segments = Vec::new();
    for j in 0..g.dims[1] - 1 {
        for i in 0..g.dims[0] - 1 {
            let x0 = g.index([i, j, 0]);
            let c = [x0, x0 + sx, x0 + sx + sy, x0 + sy];
            // Local frame along the tree c0 → c1 → c2, c0 → c3.
            let s01 = sign(s, c[0], 0);
            let v = [
                s.u[c[0]],
                s01 * s.u[c[1]],
                s01 * sign(s, c[1], 1) * s.u[c[2]],
                sign(s, c[0], 1) * s.u[c[3]],
            ];
            let pierced = s.gauge.plaquette_holonomy(g, x0, 0, 1) == Some(-1);
            // Crossings on the sides c_k → c_{k+1}; the closing side c3 → c0
            // reads c2 across the cut when the plaquette is pierced.
            let mut cross: [Option<usize>; 4] = [None; 4];
            for k in 0..4 {
                let (a, bb) = (k, (k + 1) % 4);
                let (ua, mut ub) = (v[a], v[bb]);
                if pierced && k == 2 {
                    ub = -ub;
                }
                if positive(ua) != positive(ub) {
                    cross[k] = Some(b.crossing(c[a], ua, c[bb], ub));
                }
            }
            let hits: Vec<usize> = cross.iter().flatten().copied().collect();
            if pierced {
                let mut p = g.position(x0);
                p[0] += 0.5 * g.h;
                p[1] += 0.5 * g.h;
                let centre = b.centre(x0, p);
                segments.extend(hits.iter().map(|&h| [h, centre]));
            } else if hits.len() == 2 {
                segments.push([hits[0], hits[1]]);
            } else if hits.len() == 4 {
                let mean = 0.25 * v.iter().sum::<f64>();
                // Cut off the corners whose sign differs from the centre's.
                for k in 0..4 {
                    if positive(v[k]) != positive(mean) {
                        let before = cross[(k + 3) % 4].unwrap();
                        let after = cross[k].unwrap();
                        segments.push([before, after]);
                    }
                }
            }
        }
    }
    segments
}

const FREUDENTHAL: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

fn tetrahedra(b: &mut Builder) -> Vec<[usize; 3]> {
    let s = b.s;
    let g = &s.grid;
    let st = [g.stride(0), g.stride(1), g.stride(2)];
    let mut triangles = Vec::new();
    for k in 0..g.dims[2] - 1 {
        for j in 0..g.dims[1] - 1 {
            for i in 0..g.dims[0] - 1 {
                let x0 = g.index([i, j, k]);
                let faces = [
                    (x0, 0, 1),
                    (x0, 0, 2),
                    (x0, 1, 2),
                    (x0 + st[2], 0, 1),
                    (x0 + st[1], 0, 2),
                    (x0 + st[0], 1, 2),
                ];
                if faces.iter().any(|&(n, a, c)| s.gauge.plaquette_holonomy(g, n, a, c) == Some(-1)) {
                    continue;
                }
                // Corner bits (b0, b1, b2); frame carried along x, then y, then z.
                let mut node = [0usize; 8];
                let mut val = [0.0; 8];
                for (m, (nd, vl)) in node.iter_mut().zip(val.iter_mut()).enumerate() {
                    let mut x = x0;
                    let mut sg = 1.0;
                    for axis in 0..3 {
                        if m >> axis & 1 == 1 {
                            sg *= sign(s, x, axis);
                            x += st[axis];
                        }
                    }
                    *nd = x;
                    *vl = sg * s.u[x];
                }
                if val.iter().all(|&v| positive(v)) || val.iter().all(|&v| !positive(v)) {
                    continue;
                }
                for perm in FREUDENTHAL {
                    let c1 = 1 << perm[0];
                    let c2 = c1 | 1 << perm[1];
                    let tet = [0usize, c1, c2, 7];
                    march_tet(b, &tet.map(|m| (node[m], val[m])), &mut triangles);
                }
            }
        }
    }
    triangles
}

fn march_tet(b: &mut Builder, t: &[(usize, f64); 4], out: &mut Vec<[usize; 3]>) {
    let (pos, neg): (Vec<usize>, Vec<usize>) = (0..4).partition(|&m| positive(t[m].1));
    let mut cut = |p: usize, q: usize| b.crossing(t[p].0, t[p].1, t[q].0, t[q].1);
    match (pos.len(), neg.len()) {
        (1, 3) | (3, 1) => {
            let (lone, rest) = if pos.len() == 1 { (pos[0], &neg) } else { (neg[0], &pos) };
            out.push([cut(lone, rest[0]), cut(lone, rest[1]), cut(lone, rest[2])]);
        }
        (2, 2) => {
            let q = [cut(pos[0], neg[0]), cut(pos[0], neg[1]), cut(pos[1], neg[1]), cut(pos[1], neg[0])];
            out.push([q[0], q[1], q[2]]);
            out.push([q[0], q[2], q[3]]);
        }
        _ => {}
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn topology_2d(n: usize, segments: &[[usize; 2]]) -> Topology {
    let mut uf = UnionFind::new(n);
    let mut degree = alloc::vec![0usize; n];
    for &[a, b] in segments {
        uf.union(a, b);
        degree[a] += 1;
        degree[b] += 1;
    }
    let components = (0..n).filter(|&v| uf.find(v) == v).count();
    Topology {
        vertices: n,
        edges: segments.len(),
        faces: 0,
        components,
        boundary: degree.iter().filter(|&&d| d == 1).count(),
        euler: n as i64 - segments.len() as i64,
        genus: None,
        singular: degree.iter().filter(|&&d| d > 2).count(),
    }
}

fn topology_3d(n: usize, triangles: &[[usize; 3]]) -> Topology {
    let mut edge_use: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut uf = UnionFind::new(n);
    let mut used = alloc::vec![false; n];
    for t in triangles {
        for m in 0..3 {
            let (a, b) = (t[m], t[(m + 1) % 3]);
            *edge_use.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            uf.union(a, b);
            used[a] = true;
        }
    }
    let roots: Vec<usize> = (0..n).filter(|&v| used[v] && uf.find(v) == v).collect();
    let comp_of = |uf: &mut UnionFind, v: usize| roots.binary_search(&uf.find(v)).unwrap();
    let nc = roots.len();
    let mut chi = alloc::vec![0i64; nc];
    for v in 0..n {
        if used[v] {
            chi[comp_of(&mut uf, v)] += 1;
        }
    }
    for &(a, _) in edge_use.keys() {
        chi[comp_of(&mut uf, a)] -= 1;
    }
    for t in triangles {
        chi[comp_of(&mut uf, t[0])] += 1;
    }
    // Boundary loops: components of the graph of edges used once.
    let mut buf = UnionFind::new(n);
    let mut on_boundary = alloc::vec![false; n];
    for (&(a, b), &c) in &edge_use {
        if c == 1 {
            buf.union(a, b);
            on_boundary[a] = true;
            on_boundary[b] = true;
        }
    }
    let mut loops = alloc::vec![0i64; nc];
    for v in 0..n {
        if on_boundary[v] && buf.find(v) == v {
            loops[comp_of(&mut uf, v)] += 1;
        }
    }
    let mut genus = Some(0i64);
    for (c, l) in chi.iter().zip(&loops) {
        let twice = 2 - l - c;
        genus = match genus {
            Some(g) if twice >= 0 && twice % 2 == 0 => Some(g + twice / 2),
            _ => None,
        };
    }
    let euler = chi.iter().sum();
    Topology {
        vertices: used.iter().filter(|&&u| u).count(),
        edges: edge_use.len(),
        faces: triangles.len(),
        components: nc,
        boundary: loops.iter().sum::<i64>() as usize,
        euler,
        genus,
        singular: edge_use.values().filter(|&&c| c > 2).count(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HausdorffReport {
    pub level: f64,
    pub sublevel_nodes: usize,
    /// `max_{x ∈ A} d(x, mesh)`.
    pub nodes_to_mesh: f64,
    /// `max_{v ∈ mesh} d(v, A)` over mesh vertices.
    pub mesh_to_nodes: f64,
    pub distance: f64,
}

/// Two-sided Hausdorff distance between the nodes with `|u| ≤ level` and the
/// nodal mesh, both restricted to `region`.
pub fn hausdorff_sublevel(
    s: &GaugeSection,
    mesh: &NodalMesh,
    level: f64,
    region: &dyn Fn(&Point) -> bool,
) -> Result<HausdorffReport> {
    let g = &s.grid;
    let nodes: Vec<Point> = (0..g.len())
        .filter(|&x| s.u[x].abs() <= level)
        .map(|x| g.position(x))
        .filter(|p| region(p))
        .collect();
    if nodes.is_empty() {
        return Err(Error::EmptySublevel { level });
    }
    let verts: Vec<Point> = mesh.vertices.iter().copied().filter(|p| region(p)).collect();
    let node_bvh = Bvh::build(&nodes.iter().map(|p| (*p, *p)).collect::<Vec<_>>());
    let mesh_to_nodes = verts
        .iter()
        .map(|v| node_bvh.nearest(v, |i| dist2(&nodes[i], v)).map_or(f64::INFINITY, |(_, d)| d))
        .fold(0.0f64, f64::max);
    let elements: Vec<Vec<Point>> = if mesh.dim == 3 {
        mesh.triangles.iter().map(|t| t.iter().map(|&i| mesh.vertices[i]).collect()).collect()
    } else if mesh.dim == 2 {
        mesh.segments.iter().map(|t| t.iter().map(|&i| mesh.vertices[i]).collect()).collect()
    } else {
        mesh.vertices.iter().map(|v| alloc::vec![*v]).collect()
    };
    let boxes: Vec<(Point, Point)> = elements
        .iter()
        .map(|e| {
            let mut lo = e[0];
            let mut hi = e[0];
            for p in e {
                for a in 0..3 {
                    lo[a] = lo[a].min(p[a]);
                    hi[a] = hi[a].max(p[a]);
                }
            }
            (lo, hi)
        })
        .collect();
    let elem_bvh = Bvh::build(&boxes);
    let elem_d2 = |i: usize, p: &Point| -> f64 {
        let e = &elements[i];
        match e.len() {
            3 => dist2(&closest_on_triangle(p, &[e[0], e[1], e[2]]), p),
            2 => dist2(&closest_on_segment(p, &e[0], &e[1]).0, p),
            _ => dist2(&e[0], p),
        }
    };
    let nodes_to_mesh = nodes
        .iter()
        .map(|p| elem_bvh.nearest(p, |i| elem_d2(i, p)).map_or(f64::INFINITY, |(_, d)| d))
        .fold(0.0f64, f64::max);
    let (a, b) = (libm::sqrt(nodes_to_mesh), libm::sqrt(mesh_to_nodes));
    Ok(HausdorffReport {
        level,
        sublevel_nodes: nodes.len(),
        nodes_to_mesh: a,
        mesh_to_nodes: b,
        distance: a.max(b),
    })
}
