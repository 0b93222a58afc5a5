//! Binary checkpoints, little-endian throughout.
//!
//! | field | encoding |
//! |---|---|
//! | magic | `ACPL` |
//! | version | u32 |
//! | n | u32 |
//! | dims | n × u64 |
//! | h, ε | f64, f64 |
//! | values | one f64 per node, node order |
//! | edge signs | one bit per existing edge (1 = flipped), axis-major then node order, LSB first, zero-padded to a byte |
//! | trailer | `TRLR`, origin (n × f64), bc (u8: 0 Dirichlet, 1 natural), Γ |
//!
//! Γ is a u32 component count, then per component a u32 vertex count and
//! the vertices as n × f64 each.

use std::path::Path;
use std::sync::Arc;

use acpl_core::geometry::Component;
use acpl_core::{BoundaryCondition, BoundaryManifold, GaugeField, GaugeSection, GridSpec};

use crate::error::{IoError, IoResult};
use crate::fsutil::write_atomic;

pub const MAGIC: &[u8; 4] = b"ACPL";
pub const VERSION: u32 = 1;
const TRAILER: &[u8; 4] = b"TRLR";

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub section: GaugeSection,
    pub gamma: BoundaryManifold,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let s = &self.section;
        let g = &s.grid;
        let n = g.dim;
        let mut out = Vec::with_capacity(64 + 8 * g.len() + g.edge_count() / 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(n as u32).to_le_bytes());
        for a in 0..n {
            out.extend_from_slice(&(g.dims[a] as u64).to_le_bytes());
        }
        out.extend_from_slice(&g.h.to_le_bytes());
        out.extend_from_slice(&s.eps.to_le_bytes());
        for v in &s.u {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let mut bits = BitWriter::default();
        for axis in 0..n {
            for x in 0..g.len() {
                if g.has_edge(x, axis) {
                    bits.push(s.gauge.is_flipped(GridSpec::edge_index(x, axis)));
                }
            }
        }
        out.extend_from_slice(&bits.finish());
        out.extend_from_slice(TRAILER);
        for a in 0..n {
            out.extend_from_slice(&g.origin[a].to_le_bytes());
        }
        out.push(match s.bc {
            BoundaryCondition::Dirichlet => 0,
            BoundaryCondition::Natural => 1,
        });
        let comps = self.gamma.components();
        let gd = self.gamma.dim();
        out.extend_from_slice(&(comps.len() as u32).to_le_bytes());
        for c in comps {
            let v = c.vertices();
            out.extend_from_slice(&(v.len() as u32).to_le_bytes());
            for p in v {
                for x in &p[..gd] {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> IoResult<Self> {
        let mut r = Reader { bytes, at: 0 };
        if r.take(4)? != MAGIC {
            return Err(IoError::Checkpoint("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(IoError::Checkpoint(format!("unsupported version {version}")));
        }
        let n = r.u32()? as usize;
        if !(1..=3).contains(&n) {
            return Err(IoError::Checkpoint(format!("dimension {n}")));
        }
        let mut dims = Vec::with_capacity(n);
        for _ in 0..n {
            let d = usize::try_from(r.u64()?).map_err(|_| IoError::Checkpoint("axis size overflow".into()))?;
            dims.push(d);
        }
        let h = r.f64()?;
        let eps = r.f64()?;
        let len = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
        let len = len.filter(|&l| l.saturating_mul(8) <= bytes.len()).ok_or_else(|| IoError::Checkpoint("grid larger than file".into()))?;
        let mut u = Vec::with_capacity(len);
        for _ in 0..len {
            u.push(r.f64()?);
        }
        // The origin lives in the trailer; read the gauge bits against a
        // provisional grid and fix the origin afterwards.
        let provisional = GridSpec::new(n, &dims, h, &vec![0.0; n])?;
        let edges: usize = (0..n).map(|a| (0..len).filter(|&x| provisional.has_edge(x, a)).count()).sum();
        let packed = r.take(edges.div_ceil(8))?;
        let mut flipped = vec![false; 3 * len];
        let mut k = 0;
        for axis in 0..n {
            for x in 0..len {
                if provisional.has_edge(x, axis) {
                    flipped[GridSpec::edge_index(x, axis)] = packed[k / 8] >> (k % 8) & 1 == 1;
                    k += 1;
                }
            }
        }
        if r.take(4)? != TRAILER {
            return Err(IoError::Checkpoint("missing trailer".into()));
        }
        let mut origin = Vec::with_capacity(n);
        for _ in 0..n {
            origin.push(r.f64()?);
        }
        let bc = match r.take(1)?[0] {
            0 => BoundaryCondition::Dirichlet,
            1 => BoundaryCondition::Natural,
            b => return Err(IoError::Checkpoint(format!("boundary condition tag {b}"))),
        };
        let grid = GridSpec::new(n, &dims, h, &origin)?;
        let count = r.u32()? as usize;
        let mut comps = Vec::new();
        for _ in 0..count {
            let nv = r.u32()? as usize;
            if nv.saturating_mul(8 * n) > bytes.len() {
                return Err(IoError::Checkpoint("component larger than file".into()));
            }
            let mut verts = Vec::with_capacity(nv);
            for _ in 0..nv {
                let mut p = [0.0; 3];
                for x in p.iter_mut().take(n) {
                    *x = r.f64()?;
                }
                verts.push(p);
            }
            comps.push(if nv == 1 { Component::Point(verts[0]) } else { Component::Loop(verts) });
        }
        if r.at != bytes.len() {
            return Err(IoError::Checkpoint(format!("{} trailing bytes", bytes.len() - r.at)));
        }
        let gamma = if n == 1 {
            if count != 0 {
                return Err(IoError::Checkpoint("1D checkpoints carry no boundary manifold".into()));
            }
            BoundaryManifold::empty(2)?
        } else {
            BoundaryManifold::new(n, comps)?
        };
        let gauge = GaugeField::from_flags(&grid, flipped)?;
        let section = GaugeSection::new(grid, Arc::new(gauge), u, eps, bc)?;
        Ok(Self { section, gamma })
    }

    pub fn save(&self, path: &Path) -> IoResult<()> {
        write_atomic(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> IoResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| IoError::file(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[derive(Default)]
struct BitWriter {
    bytes: Vec<u8>,
    used: usize,
}

impl BitWriter {
    fn push(&mut self, bit: bool) {
        if self.used % 8 == 0 {
            self.bytes.push(0);
        }
        if bit {
            *self.bytes.last_mut().expect("pushed") |= 1 << (self.used % 8);
        }
        self.used += 1;
    }

    fn finish(self) -> Vec<u8> {
        self.bytes
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> IoResult<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| IoError::Checkpoint(format!("truncated at byte {}", self.at)))?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u32(&mut self) -> IoResult<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> IoResult<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> IoResult<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Field-by-field equality (sections do not implement `PartialEq`).
pub fn same_checkpoint(a: &Checkpoint, b: &Checkpoint) -> bool {
    let (s, t) = (&a.section, &b.section);
    s.grid == t.grid
        && s.eps.to_bits() == t.eps.to_bits()
        && s.bc == t.bc
        && s.u.iter().zip(&t.u).all(|(x, y)| x.to_bits() == y.to_bits())
        && s.u.len() == t.u.len()
        && *s.gauge == *t.gauge
        && a.gamma.dim() == b.gamma.dim()
        && a.gamma.components() == b.gamma.components()
}
