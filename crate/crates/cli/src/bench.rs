//! Naive leftmost replay against interval detection plus suffix prediction.

use std::fmt::Write as _;
use std::time::Instant;

use clap::ValueEnum;
use kspm::pseudolocal::{PseudoLocalProcess, PseudoLocalStats};
use kspm::strategies::check_grain_cap;
use kspm::{Parameters, Process};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchMode {
    Naive,
    Pseudolocal,
    Both,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub mode: &'static str,
    pub grains: u64,
    pub d: usize,
    pub seconds: f64,
    pub simulated_firings: u64,
    pub predicted_firings: u64,
    pub predicted_avalanches: u64,
    pub fallbacks: u64,
    pub simulated_above_interval: u64,
}

pub const HEADER: &str = "mode\tgrains\td\tseconds\tsimulated_firings\tpredicted_firings\tpredicted_avalanches\tfallbacks\tsimulated_above_interval";

impl BenchRow {
    pub fn to_tsv(&self) -> String {
        format!(
            "{}\t{}\t{}\t{:.6}\t{}\t{}\t{}\t{}\t{}",
            self.mode,
            self.grains,
            self.d,
            self.seconds,
            self.simulated_firings,
            self.predicted_firings,
            self.predicted_avalanches,
            self.fallbacks,
            self.simulated_above_interval
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equivalence {
    pub avalanches: u64,
    pub mismatch: Option<String>,
    pub stats: PseudoLocalStats,
}

/// Runs both processes side by side and compares every avalanche and fixed
/// point.
pub fn check_equivalence(grains: u64, params: Parameters) -> Result<Equivalence> {
    check_grain_cap(grains)?;
    let mut naive = Process::new(params);
    let mut fast = PseudoLocalProcess::new(params);
    let mut mismatch = None;
    for k in 1..=grains {
        let a = naive.step();
        let (b, _) = fast.step();
        if a != b {
            mismatch = Some(format!(
                "k={k}: replay {:?}, predicted {:?}",
                a.strategy.as_slice(),
                b.strategy.as_slice()
            ));
        } else if naive.fixed_point() != fast.fixed_point() {
            mismatch = Some(format!("k={k}: fixed points differ"));
        }
        if mismatch.is_some() {
            break;
        }
    }
    Ok(Equivalence {
        avalanches: naive.k(),
        mismatch,
        stats: fast.stats(),
    })
}

pub fn time_naive(grains: u64, params: Parameters) -> BenchRow {
    let t0 = Instant::now();
    let mut p = Process::new(params);
    let mut firings = 0u64;
    for _ in 0..grains {
        firings += p.step().len() as u64;
    }
    BenchRow {
        mode: "naive",
        grains,
        d: params.d(),
        seconds: t0.elapsed().as_secs_f64(),
        simulated_firings: firings,
        predicted_firings: 0,
        predicted_avalanches: 0,
        fallbacks: 0,
        simulated_above_interval: 0,
    }
}

pub fn time_pseudolocal(grains: u64, params: Parameters) -> BenchRow {
    let t0 = Instant::now();
    let mut p = PseudoLocalProcess::new(params);
    for _ in 0..grains {
        p.step();
    }
    let seconds = t0.elapsed().as_secs_f64();
    let s = p.stats();
    BenchRow {
        mode: "pseudolocal",
        grains,
        d: params.d(),
        seconds,
        simulated_firings: s.simulated_firings,
        predicted_firings: s.predicted_firings,
        predicted_avalanches: s.predicted_avalanches,
        fallbacks: s.fallbacks,
        simulated_above_interval: s.simulated_above_interval,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOutcome {
    pub equivalence: Equivalence,
    pub rows: Vec<BenchRow>,
}

impl BenchOutcome {
    pub fn ok(&self) -> bool {
        self.equivalence.mismatch.is_none()
            && self.rows.iter().all(|r| r.simulated_above_interval == 0)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let e = &self.equivalence;
        match &e.mismatch {
            None => {
                let _ = writeln!(out, "# equivalence: {} avalanches identical", e.avalanches);
            }
            Some(m) => {
                let _ = writeln!(out, "# equivalence FAILED: {m}");
                return out;
            }
        }
        if e.stats.fallbacks > 0 {
            let _ = writeln!(
                out,
                "# fallback: {} of {} nonempty avalanches replayed without prediction",
                e.stats.fallbacks,
                e.stats.fallbacks + e.stats.predicted_avalanches
            );
        }
        if e.stats.predicted_avalanches > 0 {
            let _ = writeln!(
                out,
                "# mean predicted suffix: {:.2} firings",
                e.stats.predicted_firings as f64 / e.stats.predicted_avalanches as f64
            );
        }
        out.push_str(HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.to_tsv());
            out.push('\n');
        }
        out
    }
}

/// Asserts equivalence first; timings are only taken when it holds.
pub fn bench(grains: u64, params: Parameters, mode: BenchMode) -> Result<BenchOutcome> {
    let equivalence = check_equivalence(grains, params)?;
    let mut rows = Vec::new();
    if equivalence.mismatch.is_none() {
        if matches!(mode, BenchMode::Naive | BenchMode::Both) {
            rows.push(time_naive(grains, params));
        }
        if matches!(mode, BenchMode::Pseudolocal | BenchMode::Both) {
            rows.push(time_pseudolocal(grains, params));
        }
    }
    Ok(BenchOutcome { equivalence, rows })
}
