//! On-disk formats: the JSON-lines trace stream, checksummed snapshots and
//! the two-column TSV exports.
//!
//! Trace record keys, in order: `k`, `avalanche`, `peaks`, `interval_l`,
//! `max_fired`, then either `changes` (sparse: `[column, value]` pairs of
//! `π(k)` that differ from `π(k-1)`) or `fixed_point` (dense `π(k)`, trailing
//! zeros trimmed).

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use kspm::{Avalanche, Configuration, Parameters, Process, ShotVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const SNAPSHOT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FixedPointMode {
    #[default]
    Sparse,
    Dense,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: u64,
    pub avalanche: Vec<usize>,
    pub peaks: Vec<usize>,
    pub interval_l: Option<usize>,
    pub max_fired: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub changes: Option<Vec<(usize, i64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_point: Option<Vec<i64>>,
}

impl TraceRecord {
    pub fn new(
        av: &Avalanche,
        prev: &Configuration,
        next: &Configuration,
        mode: FixedPointMode,
    ) -> Self {
        let (changes, fixed_point) = match mode {
            FixedPointMode::Dense => (None, Some(next.trimmed().to_vec())),
            FixedPointMode::Sparse => {
                // Only the grain column and the neighbourhood of fired columns move.
                let hi = av.max_fired().map_or(0, |m| m + next.d() - 1);
                let changes = (0..=hi)
                    .filter(|&j| prev.get(j) != next.get(j))
                    .map(|j| (j, next.get(j)))
                    .collect();
                (Some(changes), None)
            }
        };
        TraceRecord {
            k: av.k,
            avalanche: av.strategy.as_slice().to_vec(),
            peaks: av.peaks.clone(),
            interval_l: av.interval_l,
            max_fired: av.max_fired(),
            changes,
            fixed_point,
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("trace records always serialize")
    }

    pub fn from_line(line: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(line)
    }

    /// Advances `sigma` from `π(k-1)` to `π(k)`.
    pub fn apply(&self, sigma: &mut Vec<i64>) {
        if let Some(dense) = &self.fixed_point {
            sigma.clear();
            sigma.extend_from_slice(dense);
        }
        for &(j, v) in self.changes.iter().flatten() {
            if sigma.len() <= j {
                sigma.resize(j + 1, 0);
            }
            sigma[j] = v;
        }
        while sigma.last() == Some(&0) {
            sigma.pop();
        }
    }
}

/// Reads a trace stream, rejecting malformed lines.
pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let rec = TraceRecord::from_line(&line)
            .map_err(|e| CliError::corrupt(path, format!("line {}: {e}", n + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

#[derive(Serialize)]
struct SnapshotBody<'a> {
    format_version: u32,
    d: usize,
    k: u64,
    sigma: &'a [i64],
    shot: &'a [i64],
    seed: Option<u64>,
}

/// Resumable state of the iterative process after `k` grains.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub format_version: u32,
    pub d: usize,
    pub k: u64,
    pub sigma: Vec<i64>,
    pub shot: Vec<i64>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Hex SHA-256 of the other fields serialized in this order.
    pub checksum: String,
}

impl Snapshot {
    pub fn capture(process: &Process, seed: Option<u64>) -> Self {
        let mut snap = Snapshot {
            format_version: SNAPSHOT_FORMAT_VERSION,
            d: process.params().d(),
            k: process.k(),
            sigma: process.fixed_point().trimmed().to_vec(),
            shot: process.shot().trimmed().to_vec(),
            seed,
            checksum: String::new(),
        };
        snap.checksum = snap.digest();
        snap
    }

    pub fn digest(&self) -> String {
        let body = SnapshotBody {
            format_version: self.format_version,
            d: self.d,
            k: self.k,
            sigma: &self.sigma,
            shot: &self.shot,
            seed: self.seed,
        };
        let bytes = serde_json::to_vec(&body).expect("snapshot body serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Checksum, version and the consistency of `σ` with the shot vector.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.format_version != SNAPSHOT_FORMAT_VERSION {
            return Err(format!(
                "unsupported format_version {}",
                self.format_version
            ));
        }
        if self.digest() != self.checksum {
            return Err("checksum mismatch".into());
        }
        self.process().map(|_| ())
    }

    /// Rebuilds the process this snapshot was taken from.
    pub fn process(&self) -> std::result::Result<Process, String> {
        let params = Parameters::new(self.d).map_err(|e| e.to_string())?;
        let fix =
            Configuration::from_sigma(params, self.sigma.clone()).map_err(|e| e.to_string())?;
        if !fix.is_stable() {
            return Err("fixed point is not stable".into());
        }
        if fix.weighted_mass() != self.k as i64 {
            return Err(format!(
                "weighted mass {} != k = {}",
                fix.weighted_mass(),
                self.k
            ));
        }
        if self.shot.iter().any(|&a| a < 0) {
            return Err("negative shot count".into());
        }
        let shot = ShotVector {
            counts: self.shot.clone(),
            n_grains: self.k,
        };
        let residual = kspm::analysis::shot_identity_residual(&fix, &shot, self.k, params)
            .map_err(|e| e.to_string())?;
        if !kspm::analysis::all_zero(&residual) {
            return Err("shot vector inconsistent with fixed point".into());
        }
        Ok(Process::resume(fix, shot))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("json.tmp");
        let mut text = serde_json::to_string_pretty(self).expect("snapshot serializes");
        text.push('\n');
        fs::write(&tmp, text).map_err(|e| CliError::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let snap: Snapshot =
            serde_json::from_str(&text).map_err(|e| CliError::corrupt(path, e.to_string()))?;
        snap.validate().map_err(|r| CliError::corrupt(path, r))?;
        Ok(snap)
    }
}

/// Writes `(column, value)` rows under a header.
pub fn write_columns(path: &Path, header: &str, values: &[i64]) -> Result<()> {
    let mut out = String::with_capacity(values.len() * 8 + 32);
    out.push_str("column\t");
    out.push_str(header);
    out.push('\n');
    for (i, v) in values.iter().enumerate() {
        out.push_str(&format!("{i}\t{v}\n"));
    }
    let mut f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(out.as_bytes())
        .map_err(|e| CliError::io(path, e))
}

pub fn read_columns(path: &Path) -> Result<Vec<i64>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut values = Vec::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        let bad = || CliError::corrupt(path, format!("line {}", n + 1));
        let (col, v) = line.split_once('\t').ok_or_else(bad)?;
        let col: usize = col.parse().map_err(|_| bad())?;
        if col != values.len() {
            return Err(bad());
        }
        values.push(v.parse().map_err(|_| bad())?);
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use kspm::strategies::run_process;

    #[test]
    fn sparse_records_rebuild_fixed_points() {
        let p = Parameters::new(3).unwrap();
        let t = run_process(300, p).unwrap();
        let mut sigma = Vec::new();
        for k in 1..=300 {
            let rec = TraceRecord::new(
                t.avalanche(k),
                &t.fixed_point(k - 1),
                &t.fixed_point(k),
                FixedPointMode::Sparse,
            );
            rec.apply(&mut sigma);
            assert_eq!(sigma, t.fixed_point(k).trimmed());
        }
    }

    #[test]
    fn ninth_record() {
        let p = Parameters::new(3).unwrap();
        let t = run_process(9, p).unwrap();
        let rec = TraceRecord::new(
            t.avalanche(9),
            &t.fixed_point(8),
            &t.fixed_point(9),
            FixedPointMode::Dense,
        );
        assert_eq!(
            rec.to_line(),
            r#"{"k":9,"avalanche":[0,2],"peaks":[0,2],"interval_l":null,"max_fired":2,"fixed_point":[0,2,0,0,1]}"#
        );
    }

    #[test]
    fn tampered_snapshot_is_rejected() {
        let mut process = Process::new(Parameters::new(3).unwrap());
        for _ in 0..20 {
            process.step();
        }
        let snap = Snapshot::capture(&process, Some(7));
        assert!(snap.validate().is_ok());

        let mut bad = snap.clone();
        bad.sigma[0] ^= 1;
        assert_eq!(bad.validate(), Err("checksum mismatch".into()));
        // A consistent checksum does not save an inconsistent state.
        bad.checksum = bad.digest();
        assert!(bad.validate().is_err());
    }
}
