//! Candidate and density-sample output files.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Value};

use super::CandidateGrasp;
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::scalar::Real;

fn num(x: f64) -> Value {
    // JSON has no infinities; `null` stands for a vanished likelihood
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn arr<T: Real, const N: usize>(a: [T; N]) -> Value {
    Value::Array(a.iter().map(|x| num(x.to_f64_lossy())).collect())
}

/// Serializes ranked candidates as JSON (rank starts at 1).
pub fn candidates_json<T: Real>(cands: &[CandidateGrasp<T>]) -> String {
    let list: Vec<Value> = cands
        .iter()
        .enumerate()
        .map(|(rank, c)| {
            let drones: Vec<Value> = c
                .pairs
                .iter()
                .enumerate()
                .map(|(n, h)| {
                    json!({
                        "b": arr(h.drone.to_array()),
                        "l": arr(h.link.to_array()),
                        "nearest": c.nearest.get(n).copied().flatten(),
                        "snap": c.snap.as_ref().map(|s| arr(s[n].to_array())),
                    })
                })
                .collect();
            json!({
                "rank": rank + 1,
                "log_j": num(c.log_j),
                "feasible": c.feasible,
                "drones": drones,
            })
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&json!({ "candidates": list })).expect("plain JSON values");
    s.push('\n');
    s
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn write_candidates<T: Real>(path: &Path, cands: &[CandidateGrasp<T>]) -> Result<()> {
    write(path, &candidates_json(cands))
}

/// Whitespace table `link x y z log_q`, one row per sample.
pub fn write_density_samples<T: Real>(path: &Path, rows: &[(usize, Vec3<T>, f64)]) -> Result<()> {
    let mut s = String::from("# link x y z log_q\n");
    for (n, p, lq) in rows {
        let _ = writeln!(s, "{n} {:.12e} {:.12e} {:.12e} {:.12e}", p.x.to_f64_lossy(), p.y.to_f64_lossy(), p.z.to_f64_lossy(), lq);
    }
    write(path, &s)
}
