//! Bounding-volume hierarchy for nearest-primitive queries.

use alloc::vec::Vec;

use crate::grid::Point;

#[derive(Debug, Clone)]
struct Node {
    lo: Point,
    hi: Point,
    /// Leaf: `start..start + count` into `order`; inner: children at `left`, `left + 1`… not
    /// contiguous, so both are stored.
    start: usize,
    count: usize,
    left: usize,
    right: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<usize>,
}

const LEAF: usize = 4;

fn box_dist2(p: &Point, lo: &Point, hi: &Point) -> f64 {
    let mut d = 0.0;
    for k in 0..3 {
        let t = if p[k] < lo[k] {
            lo[k] - p[k]
        } else if p[k] > hi[k] {
            p[k] - hi[k]
        } else {
            0.0
        };
        d += t * t;
    }
    d
}

impl Bvh {
    /// Build over primitives given by their bounding boxes.
    pub fn build(boxes: &[(Point, Point)]) -> Self {
        let mut bvh = Self {
            nodes: Vec::new(),
            order: (0..boxes.len()).collect(),
        };
        if !boxes.is_empty() {
            bvh.split(boxes, 0, boxes.len());
        }
        bvh
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn split(&mut self, boxes: &[(Point, Point)], start: usize, end: usize) -> usize {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in &self.order[start..end] {
            for k in 0..3 {
                lo[k] = lo[k].min(boxes[i].0[k]);
                hi[k] = hi[k].max(boxes[i].1[k]);
            }
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            lo,
            hi,
            start,
            count: end - start,
            left: 0,
            right: 0,
        });
        if end - start <= LEAF {
            return id;
        }
        let axis = (0..3)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap_or(0);
        let centre = |i: usize| boxes[i].0[axis] + boxes[i].1[axis];
        self.order[start..end].sort_by(|&a, &b| centre(a).total_cmp(&centre(b)).then(a.cmp(&b)));
        let mid = (start + end) / 2;
        let left = self.split(boxes, start, mid);
        let right = self.split(boxes, mid, end);
        let node = &mut self.nodes[id];
        node.count = 0;
        node.left = left;
        node.right = right;
        id
    }

    /// Primitive minimising `dist2(p, i)` (a squared distance that is never
    /// below the squared box distance). Ties go to the smaller index.
    pub fn nearest<F>(&self, p: &Point, mut dist2: F) -> Option<(usize, f64)>
    where
        F: FnMut(usize) -> f64,
    {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        let mut stack: Vec<(usize, f64)> = alloc::vec![(0, 0.0)];
        while let Some((id, bd)) = stack.pop() {
            if let Some((_, d)) = best {
                if bd > d {
                    continue;
                }
            }
            let node = &self.nodes[id];
            if node.count > 0 {
                for &i in &self.order[node.start..node.start + node.count] {
                    let d = dist2(i);
                    match best {
                        Some((bi, bdist)) if d > bdist || (d == bdist && i > bi) => {}
                        _ => best = Some((i, d)),
                    }
                }
            } else {
                let l = &self.nodes[node.left];
                let r = &self.nodes[node.right];
                let dl = box_dist2(p, &l.lo, &l.hi);
                let dr = box_dist2(p, &r.lo, &r.hi);
                if dl < dr {
                    stack.push((node.right, dr));
                    stack.push((node.left, dl));
                } else {
                    stack.push((node.left, dl));
                    stack.push((node.right, dr));
                }
            }
        }
        best
    }

    /// All primitives whose box lies within distance `r` of `p`.
    pub fn within<F>(&self, p: &Point, r: f64, mut visit: F)
    where
        F: FnMut(usize),
    {
        if self.nodes.is_empty() {
            return;
        }
        let r2 = r * r;
        let mut stack = alloc::vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if box_dist2(p, &node.lo, &node.hi) > r2 {
                continue;
            }
            if node.count > 0 {
                for &i in &self.order[node.start..node.start + node.count] {
                    visit(i);
                }
            } else {
                stack.push(node.left);
                stack.push(node.right);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_matches_brute_force() {
        let pts: Vec<Point> = (0..200)
            .map(|i| {
                let t = i as f64 * 0.37;
                [libm::sin(t) * 3.0, libm::cos(1.3 * t) * 2.0, libm::sin(0.7 * t)]
            })
            .collect();
        let boxes: Vec<_> = pts.iter().map(|p| (*p, *p)).collect();
        let bvh = Bvh::build(&boxes);
        for q in 0..50 {
            let p = [q as f64 * 0.1 - 2.5, 0.3, -0.2];
            let d2 = |i: usize| crate::grid::dist2(&p, &pts[i]);
            let (i, d) = bvh.nearest(&p, d2).unwrap();
            let brute = (0..pts.len()).map(d2).fold(f64::INFINITY, f64::min);
            assert_eq!(d, brute);
            assert_eq!(d2(i), brute);
        }
    }
}
