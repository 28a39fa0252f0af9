use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use kspm::strategies::check_grain_cap;
use kspm::{Parameters, Process};

use crate::error::{CliError, Result};
use crate::format::{write_columns, FixedPointMode, Snapshot, TraceRecord};

pub const TRACE_FILE: &str = "trace.jsonl";
pub const FIXED_POINT_FILE: &str = "fixed_point.tsv";
pub const SHOT_FILE: &str = "shot.tsv";
pub const SNAPSHOT_DIR: &str = "snapshots";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulateArgs {
    pub grains: u64,
    pub d: usize,
    pub out: PathBuf,
    /// 0 disables snapshots.
    pub snapshot_every: u64,
    pub resume_from: Option<PathBuf>,
    pub mode: FixedPointMode,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulateSummary {
    pub start_k: u64,
    pub end_k: u64,
    pub snapshots: Vec<PathBuf>,
}

pub fn snapshot_path(out: &Path, k: u64) -> PathBuf {
    out.join(SNAPSHOT_DIR)
        .join(format!("snapshot-{k:012}.json"))
}

/// Keeps the lines of an existing trace with `k <= upto`.
fn truncate_trace(path: &Path, upto: u64) -> Result<()> {
    let file = match fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(()),
        Err(e) => return Err(CliError::io(path, e)),
    };
    let mut kept = String::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let rec = TraceRecord::from_line(&line)
            .map_err(|e| CliError::corrupt(path, format!("line {}: {e}", n + 1)))?;
        if rec.k <= upto {
            kept.push_str(&line);
            kept.push('\n');
        }
    }
    fs::write(path, kept).map_err(|e| CliError::io(path, e))
}

pub fn simulate(args: &SimulateArgs) -> Result<SimulateSummary> {
    check_grain_cap(args.grains)?;
    let params = Parameters::new(args.d)?;
    let (mut process, seed) = match &args.resume_from {
        Some(path) => {
            let snap = Snapshot::read(path)?;
            if snap.d != args.d {
                return Err(CliError::Usage(format!(
                    "snapshot has D = {}, requested D = {}",
                    snap.d, args.d
                )));
            }
            if snap.k > args.grains {
                return Err(CliError::Usage(format!(
                    "snapshot is at k = {}, beyond --grains {}",
                    snap.k, args.grains
                )));
            }
            let process = snap.process().map_err(|r| CliError::corrupt(path, r))?;
            (process, args.seed.or(snap.seed))
        }
        None => (Process::new(params), args.seed),
    };
    let start_k = process.k();

    fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    if args.snapshot_every > 0 {
        let dir = args.out.join(SNAPSHOT_DIR);
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    }
    let trace_path = args.out.join(TRACE_FILE);
    let file = if start_k > 0 {
        truncate_trace(&trace_path, start_k)?;
        fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&trace_path)
    } else {
        fs::File::create(&trace_path)
    }
    .map_err(|e| CliError::io(&trace_path, e))?;
    let mut writer = BufWriter::new(file);

    let mut snapshots = Vec::new();
    while process.k() < args.grains {
        let prev = process.fixed_point().clone();
        let av = process.step();
        let rec = TraceRecord::new(&av, &prev, process.fixed_point(), args.mode);
        writeln!(writer, "{}", rec.to_line()).map_err(|e| CliError::io(&trace_path, e))?;
        if args.snapshot_every > 0 && av.k % args.snapshot_every == 0 {
            writer.flush().map_err(|e| CliError::io(&trace_path, e))?;
            let path = snapshot_path(&args.out, av.k);
            Snapshot::capture(&process, seed).write(&path)?;
            snapshots.push(path);
        }
    }
    writer.flush().map_err(|e| CliError::io(&trace_path, e))?;

    write_columns(
        &args.out.join(FIXED_POINT_FILE),
        "sigma",
        process.fixed_point().trimmed(),
    )?;
    write_columns(&args.out.join(SHOT_FILE), "count", process.shot().trimmed())?;
    Ok(SimulateSummary {
        start_k,
        end_k: process.k(),
        snapshots,
    })
}
