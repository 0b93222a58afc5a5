//! JSON reports, CSV profiles and OBJ meshes.

use std::path::Path;

use acpl_core::diagnostics::{MonotonicityProfile, NodalMesh};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{IoError, IoResult};
use crate::fsutil::write_atomic;

pub const SCHEMA_VERSION: u32 = 1;

/// Every JSON artifact is wrapped in a versioned envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema_version: u32,
    pub kind: String,
    pub data: T,
}

pub fn to_json<T: Serialize>(kind: &str, data: &T) -> IoResult<Vec<u8>> {
    let env = Envelope {
        schema_version: SCHEMA_VERSION,
        kind: kind.to_string(),
        data,
    };
    let mut bytes = serde_json::to_vec_pretty(&env)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn write_json<T: Serialize>(path: &Path, kind: &str, data: &T) -> IoResult<()> {
    write_atomic(path, &to_json(kind, data)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path, kind: &str) -> IoResult<T> {
    let bytes = std::fs::read(path).map_err(|e| IoError::file(path, e))?;
    let env: Envelope<T> = serde_json::from_slice(&bytes)?;
    if env.schema_version != SCHEMA_VERSION || env.kind != kind {
        return Err(IoError::Config(format!(
            "{}: expected {kind} v{SCHEMA_VERSION}, found {} v{}",
            path.display(),
            env.kind,
            env.schema_version
        )));
    }
    Ok(env.data)
}

/// One row of a monotonicity profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub r: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "M")]
    pub m: f64,
}

pub fn profile_rows(p: &MonotonicityProfile) -> Vec<ProfileRow> {
    p.radii
        .iter()
        .zip(&p.energies)
        .zip(&p.values)
        .map(|((&r, &e), &m)| ProfileRow { r, e, m })
        .collect()
}

pub fn profile_csv(rows: &[ProfileRow]) -> IoResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| IoError::Config(e.to_string()))
}

pub fn write_profile_csv(path: &Path, rows: &[ProfileRow]) -> IoResult<()> {
    write_atomic(path, &profile_csv(rows)?)
}

pub fn read_profile_csv(path: &Path) -> IoResult<Vec<ProfileRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<Vec<ProfileRow>, _>>()?)
}

/// Vertices plus polylines (`l`) or triangles (`f`), 1-based.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObjMesh {
    pub vertices: Vec<[f64; 3]>,
    pub lines: Vec<[usize; 2]>,
    pub faces: Vec<[usize; 3]>,
}

impl From<&NodalMesh> for ObjMesh {
    fn from(m: &NodalMesh) -> Self {
        Self {
            vertices: m.vertices.clone(),
            lines: m.segments.clone(),
            faces: m.triangles.clone(),
        }
    }
}

impl ObjMesh {
    pub fn to_obj(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        for v in &self.vertices {
            let _ = writeln!(out, "v {} {} {}", v[0], v[1], v[2]);
        }
        for l in &self.lines {
            let _ = writeln!(out, "l {} {}", l[0] + 1, l[1] + 1);
        }
        for f in &self.faces {
            let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
        }
        out
    }

    pub fn parse(text: &str) -> IoResult<Self> {
        let mut m = ObjMesh::default();
        for (i, line) in text.lines().enumerate() {
            let bad = |msg: String| IoError::Parse { line: i + 1, msg };
            let mut w = line.split_whitespace();
            let Some(tag) = w.next() else { continue };
            let nums: Vec<&str> = w.collect();
            let idx = |s: &str| -> IoResult<usize> {
                let k: usize = s.split('/').next().unwrap_or(s).parse().map_err(|e| bad(format!("index `{s}`: {e}")))?;
                k.checked_sub(1).ok_or_else(|| bad("index 0".into()))
            };
            match (tag, nums.len()) {
                ("v", 3) => {
                    let mut p = [0.0; 3];
                    for (k, s) in nums.iter().enumerate() {
                        p[k] = s.parse().map_err(|e| bad(format!("coordinate `{s}`: {e}")))?;
                    }
                    m.vertices.push(p);
                }
                ("l", 2) => m.lines.push([idx(nums[0])?, idx(nums[1])?]),
                ("f", 3) => m.faces.push([idx(nums[0])?, idx(nums[1])?, idx(nums[2])?]),
                ("#", _) => {}
                _ => return Err(bad(format!("unsupported record `{line}`"))),
            }
        }
        let n = m.vertices.len();
        if m.lines.iter().flatten().chain(m.faces.iter().flatten()).any(|&k| k >= n) {
            return Err(IoError::Parse {
                line: 0,
                msg: "index beyond vertex list".into(),
            });
        }
        Ok(m)
    }
}

pub fn write_obj(path: &Path, mesh: &ObjMesh) -> IoResult<()> {
    write_atomic(path, mesh.to_obj().as_bytes())
}

pub fn read_obj(path: &Path) -> IoResult<ObjMesh> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::file(path, e))?;
    ObjMesh::parse(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_header_and_round_trip() {
        let rows = vec![ProfileRow { r: 0.1, e: 0.25, m: 2.5 }, ProfileRow { r: 0.2, e: 1.0 / 3.0, m: 1e-300 }];
        let bytes = profile_csv(&rows).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("r,E,M\n"), "{text}");
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        write_profile_csv(&p, &rows).unwrap();
        assert_eq!(read_profile_csv(&p).unwrap(), rows);
    }

    #[test]
    fn obj_round_trip() {
        let m = ObjMesh {
            vertices: vec![[0.0, 0.1, -2.5e-7], [1.0, 0.0, 0.0], [0.0, 1.0 / 3.0, 0.0]],
            lines: vec![[0, 1]],
            faces: vec![[0, 1, 2]],
        };
        assert_eq!(ObjMesh::parse(&m.to_obj()).unwrap(), m);
        assert!(ObjMesh::parse("v 0 0 0\nf 1 2 3\n").is_err());
        assert!(ObjMesh::parse("v 0 0\n").is_err());
    }

    #[test]
    fn json_envelope() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.json");
        write_json(&p, "numbers", &vec![1.5, 2.0]).unwrap();
        let back: Vec<f64> = read_json(&p, "numbers").unwrap();
        assert_eq!(back, vec![1.5, 2.0]);
        assert!(read_json::<Vec<f64>>(&p, "other").is_err());
    }
}
