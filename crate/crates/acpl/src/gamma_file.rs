//! Plain-text Γ files.
//!
//! ```text
//! # comments and blank lines are ignored
//! component 1
//! 0.0 0.0
//! component 64
//! 1.0 0.0 0.0
//! ...
//! ```
//!
//! A one-vertex component is a point (2D); longer components are closed
//! polylines (3D). Each vertex line holds `dim` decimals.

use std::fmt::Write as _;
use std::path::Path;

use acpl_core::{BoundaryManifold, Component};

use crate::error::{IoError, IoResult};

pub fn parse_gamma(text: &str, dim: usize) -> IoResult<BoundaryManifold> {
    let bad = |line: usize, msg: String| IoError::Parse { line, msg };
    let mut comps = Vec::new();
    let mut pending: Option<(usize, usize, Vec<[f64; 3]>)> = None;
    let mut finish = |p: Option<(usize, usize, Vec<[f64; 3]>)>, at: usize| -> IoResult<()> {
        if let Some((header, n, verts)) = p {
            if verts.len() != n {
                return Err(bad(at, format!("component at line {header} declares {n} vertices, found {}", verts.len())));
            }
            comps.push(if n == 1 { Component::Point(verts[0]) } else { Component::Loop(verts) });
        }
        Ok(())
    };
    let mut last = 0;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        last = line_no;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut words = line.split_whitespace();
        if line.starts_with("component") {
            words.next();
            let n: usize = words
                .next()
                .ok_or_else(|| bad(line_no, "missing vertex count".into()))?
                .parse()
                .map_err(|e| bad(line_no, format!("vertex count: {e}")))?;
            if n == 0 || words.next().is_some() {
                return Err(bad(line_no, "expected `component <n_vertices>` with n ≥ 1".into()));
            }
            finish(pending.take(), line_no)?;
            pending = Some((line_no, n, Vec::with_capacity(n)));
            continue;
        }
        let Some((_, n, verts)) = pending.as_mut() else {
            return Err(bad(line_no, "vertex before any `component` header".into()));
        };
        let vals = words
            .map(|w| w.parse::<f64>().map_err(|e| bad(line_no, format!("`{w}`: {e}"))))
            .collect::<IoResult<Vec<f64>>>()?;
        if vals.len() != dim {
            return Err(bad(line_no, format!("expected {dim} coordinates, found {}", vals.len())));
        }
        if verts.len() == *n {
            return Err(bad(line_no, format!("more than {n} vertices")));
        }
        let mut p = [0.0; 3];
        p[..dim].copy_from_slice(&vals);
        verts.push(p);
    }
    finish(pending.take(), last)?;
    Ok(BoundaryManifold::new(dim, comps)?)
}

pub fn format_gamma(gamma: &BoundaryManifold) -> String {
    let mut out = String::new();
    for c in gamma.components() {
        let v = c.vertices();
        let _ = writeln!(out, "component {}", v.len());
        for p in v {
            let coords: Vec<String> = p[..gamma.dim()].iter().map(|x| format!("{x:?}")).collect();
            let _ = writeln!(out, "{}", coords.join(" "));
        }
    }
    out
}

pub fn read_gamma(path: &Path, dim: usize) -> IoResult<BoundaryManifold> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::file(path, e))?;
    parse_gamma(&text, dim)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_and_loops() {
        let g = parse_gamma("# two punctures\ncomponent 1\n0.1 0.2\n\ncomponent 1\n-0.5 0.25\n", 2).unwrap();
        assert_eq!(g.components().len(), 2);
        assert_eq!(g.components()[1].vertices()[0], [-0.5, 0.25, 0.0]);
        let circle = Component::circle([0.0; 3], 1.0, 16);
        let g3 = BoundaryManifold::new(3, vec![circle.clone()]).unwrap();
        let back = parse_gamma(&format_gamma(&g3), 3).unwrap();
        assert_eq!(back.components()[0], circle);
    }

    #[test]
    fn errors_carry_lines() {
        let e = parse_gamma("component 2\n0 0 0\n", 3).unwrap_err();
        assert!(matches!(e, IoError::Parse { line: 2, .. }), "{e}");
        let e = parse_gamma("component 1\n0 0 0\n", 2).unwrap_err();
        assert!(matches!(e, IoError::Parse { line: 2, .. }), "{e}");
        let e = parse_gamma("1 2\n", 2).unwrap_err();
        assert!(matches!(e, IoError::Parse { line: 1, .. }));
        assert!(parse_gamma("component 1\nx y\n", 2).is_err());
    }
}
