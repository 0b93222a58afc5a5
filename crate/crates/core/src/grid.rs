//! Uniform Cartesian node grids in one, two or three dimensions.
//!
//! Nodes are numbered axis-major (`x` fastest). The edge leaving node `i` in
//! the positive direction of `axis` has index `3 * i + axis`.

use alloc::format;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    /// Box-boundary nodes are frozen at their current values (normally +1).
    Dirichlet,
    /// All nodes are free; the discrete Laplacian only uses existing edges.
    Natural,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub dims: [usize; 3],
    pub h: f64,
    pub origin: Point,
}

impl GridSpec {
    pub fn new(dim: usize, dims: &[usize], h: f64, origin: &[f64]) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if dims.len() != dim || origin.len() != dim {
            return Err(Error::InvalidGrid("dims/origin length differs from dimension".into()));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidGrid(format!("spacing {h} must be positive")));
        }
        let mut d = [1usize; 3];
        let mut o = [0.0; 3];
        for a in 0..dim {
            if dims[a] < 3 {
                return Err(Error::InvalidGrid(format!("axis {a} has {} < 3 nodes", dims[a])));
            }
            d[a] = dims[a];
            o[a] = origin[a];
        }
        Ok(Self { dim, dims: d, h, origin: o })
    }

    /// Cube (square, interval) with `nodes` nodes per axis and side length `side`,
    /// centred at the origin.
    pub fn centered(dim: usize, nodes: usize, side: f64) -> Result<Self> {
        let h = side / (nodes as f64 - 1.0);
        let o = -side / 2.0;
        Self::new(dim, &alloc::vec![nodes; dim], h, &alloc::vec![o; dim])
    }

    /// Same box, grid refined or coarsened to `nodes` per axis.
    pub fn with_nodes(&self, nodes: usize) -> Result<Self> {
        let side = self.side(0);
        let h = side / (nodes as f64 - 1.0);
        Self::new(
            self.dim,
            &alloc::vec![nodes; self.dim],
            h,
            &self.origin[..self.dim],
        )
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Side length along `axis`.
    pub fn side(&self, axis: usize) -> f64 {
        (self.dims[axis] - 1) as f64 * self.h
    }

    pub fn upper(&self) -> Point {
        let mut p = self.origin;
        for (a, x) in p.iter_mut().enumerate().take(self.dim) {
            *x += self.side(a);
        }
        p
    }

    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => 1,
            1 => self.dims[0],
            _ => self.dims[0] * self.dims[1],
        }
    }

    #[inline]
    pub fn index(&self, c: [usize; 3]) -> usize {
        c[0] + self.dims[0] * (c[1] + self.dims[1] * c[2])
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let r = idx / self.dims[0];
        [i, r % self.dims[1], r / self.dims[1]]
    }

    #[inline]
    pub fn position(&self, idx: usize) -> Point {
        let c = self.coords(idx);
        let mut p = [0.0; 3];
        for a in 0..self.dim {
            p[a] = self.origin[a] + c[a] as f64 * self.h;
        }
        p
    }

    /// Cell volume `hⁿ`.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        libm::pow(self.h, self.dim as f64)
    }

    #[inline]
    pub fn is_boundary(&self, idx: usize) -> bool {
        let c = self.coords(idx);
        (0..self.dim).any(|a| c[a] == 0 || c[a] + 1 == self.dims[a])
    }

    /// Does the edge from `idx` along `+axis` exist?
    #[inline]
    pub fn has_edge(&self, idx: usize, axis: usize) -> bool {
        axis < self.dim && self.coords(idx)[axis] + 1 < self.dims[axis]
    }

    #[inline]
    pub fn edge_index(idx: usize, axis: usize) -> usize {
        3 * idx + axis
    }

    /// Neighbour of `idx` one step along `axis` in direction `forward`.
    #[inline]
    pub fn neighbor(&self, idx: usize, axis: usize, forward: bool) -> Option<usize> {
        if axis >= self.dim {
            return None;
        }
        let c = self.coords(idx)[axis];
        if forward {
            (c + 1 < self.dims[axis]).then(|| idx + self.stride(axis))
        } else {
            (c > 0).then(|| idx - self.stride(axis))
        }
    }

    /// Total number of existing edges.
    pub fn edge_count(&self) -> usize {
        (0..self.dim)
            .map(|a| (self.dims[a] - 1) * self.len() / self.dims[a])
            .sum()
    }

    /// Distance from a point to the box boundary (positive inside).
    pub fn distance_to_box(&self, p: &Point) -> f64 {
        let up = self.upper();
        (0..self.dim)
            .map(|a| (p[a] - self.origin[a]).min(up[a] - p[a]))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn diameter(&self) -> f64 {
        libm::sqrt((0..self.dim).map(|a| self.side(a) * self.side(a)).sum())
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.distance_to_box(p) >= 0.0
    }

    /// Mask of nodes that are not frozen by the boundary condition.
    pub fn free_mask(&self, bc: BoundaryCondition) -> Vec<bool> {
        match bc {
            BoundaryCondition::Natural => alloc::vec![true; self.len()],
            BoundaryCondition::Dirichlet => (0..self.len()).map(|i| !self.is_boundary(i)).collect(),
        }
    }

    /// Nodes whose distance to the box boundary is at least `margin`.
    pub fn interior_mask(&self, margin: f64) -> Vec<bool> {
        (0..self.len())
            .map(|i| self.distance_to_box(&self.position(i)) >= margin)
            .collect()
    }

    /// `(index, coords)` for the nodes in `range`, without per-node division.
    pub fn nodes_in(&self, range: core::ops::Range<usize>) -> NodeIter {
        NodeIter {
            dims: self.dims,
            next: range.start,
            end: range.end,
            c: if range.start < range.end { self.coords(range.start) } else { [0; 3] },
        }
    }

    /// Index of the cell (lower corner) containing `p`, clamped to the grid.
    pub fn cell_of(&self, p: &Point) -> [usize; 3] {
        let mut c = [0usize; 3];
        for a in 0..self.dim {
            let t = libm::floor((p[a] - self.origin[a]) / self.h);
            c[a] = (t.max(0.0) as usize).min(self.dims[a] - 2);
        }
        c
    }
}

pub struct NodeIter {
    dims: [usize; 3],
    next: usize,
    end: usize,
    c: [usize; 3],
}

impl Iterator for NodeIter {
    type Item = (usize, [usize; 3]);

    #[inline]
    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.end {
            return None;
        }
        let out = (self.next, self.c);
        self.next += 1;
        self.c[0] += 1;
        if self.c[0] == self.dims[0] {
            self.c[0] = 0;
            self.c[1] += 1;
            if self.c[1] == self.dims[1] {
                self.c[1] = 0;
                self.c[2] += 1;
            }
        }
        Some(out)
    }
}

pub(crate) fn dist(a: &Point, b: &Point) -> f64 {
    libm::sqrt(dist2(a, b))
}

pub(crate) fn dist2(a: &Point, b: &Point) -> f64 {
    (a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2])
}

pub(crate) fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn add(a: &Point, b: &Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub(crate) fn scale(a: &Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub(crate) fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: &Point, b: &Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm(a: &Point) -> f64 {
    libm::sqrt(dot(a, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip_and_neighbours() {
        let g = GridSpec::new(3, &[4, 5, 6], 0.5, &[0.0, 0.0, 0.0]).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.index(g.coords(i)), i);
        }
        let i = g.index([1, 2, 3]);
        assert_eq!(g.neighbor(i, 2, true), Some(g.index([1, 2, 4])));
        assert_eq!(g.neighbor(g.index([0, 0, 0]), 0, false), None);
        assert_eq!(g.edge_count(), 3 * 5 * 6 + 4 * 4 * 6 + 4 * 5 * 5);
    }

    #[test]
    fn centered_grid_is_symmetric() {
        let g = GridSpec::centered(2, 5, 2.0).unwrap();
        assert_eq!(g.h, 0.5);
        assert_eq!(g.position(0), [-1.0, -1.0, 0.0]);
        assert_eq!(g.position(g.len() - 1), [1.0, 1.0, 0.0]);
        assert!(g.is_boundary(0) && !g.is_boundary(g.index([2, 2, 0])));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(GridSpec::new(4, &[3; 4], 1.0, &[0.0; 4]).is_err());
        assert!(GridSpec::new(2, &[3, 3], 0.0, &[0.0, 0.0]).is_err());
        assert!(GridSpec::new(2, &[2, 3], 1.0, &[0.0, 0.0]).is_err());
    }
}
