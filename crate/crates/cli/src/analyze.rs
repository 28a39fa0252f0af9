use std::fmt::Write as _;

use kspm::analysis::{run_growth, GrowthReport};
use kspm::Parameters;

use crate::error::Result;
use crate::suites::envelope_fit;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalyzeArgs {
    pub grains: u64,
    pub j_max: usize,
    pub cap: u64,
    pub fit_upto: u64,
}

pub fn analyze(args: &AnalyzeArgs) -> Result<GrowthReport> {
    Ok(run_growth(args.grains, args.j_max, args.cap)?)
}

/// Tab-separated rows, first field names the table.
pub fn render(report: &GrowthReport, fit_upto: u64) -> String {
    let params = Parameters::new(3).expect("D = 3 is valid");
    let mut out = String::new();
    for (i, n) in report.n_min.iter().enumerate() {
        let n = n.map_or("-".to_string(), |n| n.to_string());
        let _ = writeln!(out, "n_min\t{}\t{n}", i + 1);
    }
    for (j, q) in &report.ratios {
        let _ = writeln!(out, "ratio\t{j}\t{q}");
    }
    for (n, l) in &report.l_max_steps {
        let _ = writeln!(out, "l_max_step\t{n}\t{l}");
    }
    for (n, l, e) in &report.samples {
        let e = e.map_or("-".to_string(), |e| e.to_string());
        let bound = (2.0 * *n as f64 / (params.d() as f64 - 1.0)).sqrt() - 2.0;
        let _ = writeln!(out, "sample\t{n}\t{l}\t{e}\t{bound:.3}");
    }
    let (c1, c2) = envelope_fit(report, fit_upto);
    let _ = writeln!(out, "fit\t{c1:.6}\t{c2:.6}\t{fit_upto}");
    for v in &report.violations {
        let _ = writeln!(out, "violation\t{v}");
    }
    out
}
