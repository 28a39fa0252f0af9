//! Empirical growth laws for D = 3: first grain counts producing a
//! `(2, 0)^j` prefix, the running maximum of the interval column, and the
//! rightmost nonempty column of fixed points.

use super::rational::{frac, Rational};
use super::shot::prefix_20_length;
use crate::config::{Configuration, Parameters};
use crate::error::{Error, Result};
use crate::strategies::{check_grain_cap, Avalanche, Process, RunTrace};

/// `L(k)`: the interval column when the avalanche has one, otherwise its
/// largest fired column (no column to its right is fired), or 0 when the
/// avalanche is empty.
pub fn onset_column(av: &Avalanche) -> usize {
    av.interval_l.or(av.max_fired()).unwrap_or(0)
}

/// `e(N)`: the largest column holding at least one grain.
pub fn rightmost_column(fix: &Configuration) -> Option<usize> {
    fix.last_nonzero()
}

/// `(e + 2)² (D - 1) >= 2N`, the integer form of `e >= √(2N/(D-1)) - 2`.
/// Every column of a fixed point holds at most `D - 1`, so
/// `N <= (D - 1)(e + 1)(e + 2) / 2`.
pub fn rightmost_bound_holds(n: u64, e: Option<usize>, params: Parameters) -> bool {
    let e2 = e.map_or(1, |e| e as u128 + 2);
    e2 * e2 * (params.d() as u128 - 1) >= 2 * n as u128
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    /// `N_min(j)` for `j = 1..=j_max`, `None` when not reached within the cap.
    pub n_min: Vec<Option<u64>>,
    /// `N_min(j + 1) / N_min(j)` for consecutive found values, keyed by `j`.
    pub ratios: Vec<(usize, Rational)>,
    /// `(N, L_max(N))` at every `N` where the running maximum increases.
    pub l_max_steps: Vec<(u64, usize)>,
    /// `(N, L_max(N), e(N))` at powers of two and at the last grain.
    pub samples: Vec<(u64, usize, Option<usize>)>,
    /// Grains processed.
    pub n_grains: u64,
    pub violations: Vec<String>,
}

impl GrowthReport {
    pub fn l_max_at(&self, n: u64) -> usize {
        self.l_max_steps
            .iter()
            .take_while(|(k, _)| *k <= n)
            .last()
            .map_or(0, |&(_, l)| l)
    }
}

/// Single-pass accumulator for [`GrowthReport`].
#[derive(Debug, Clone)]
pub struct GrowthSweep {
    params: Parameters,
    n_min: Vec<Option<u64>>,
    l_max: usize,
    l_max_steps: Vec<(u64, usize)>,
    samples: Vec<(u64, usize, Option<usize>)>,
    next_sample: u64,
    last: u64,
    last_e: Option<usize>,
    violations: Vec<String>,
}

impl GrowthSweep {
    pub fn new(params: Parameters, j_max: usize) -> Result<Self> {
        if params.d() != 3 {
            return Err(Error::WrongParameter {
                required: 3,
                actual: params.d(),
            });
        }
        Ok(GrowthSweep {
            params,
            n_min: vec![None; j_max],
            l_max: 0,
            l_max_steps: Vec::new(),
            samples: Vec::new(),
            next_sample: 1,
            last: 0,
            last_e: None,
            violations: Vec::new(),
        })
    }

    /// Feeds avalanche `s^k` and the fixed point `π(k)` it produced.
    pub fn observe(&mut self, av: &Avalanche, fix: &Configuration) {
        let k = av.k;
        self.last = k;
        let prefix = prefix_20_length(fix).min(self.n_min.len());
        for slot in self.n_min[..prefix].iter_mut() {
            slot.get_or_insert(k);
        }
        let l = onset_column(av);
        if l > self.l_max {
            self.l_max = l;
            self.l_max_steps.push((k, l));
        }
        let e = rightmost_column(fix);
        if !rightmost_bound_holds(k, e, self.params) {
            self.violations
                .push(format!("e({k}) = {e:?} below √(2N/(D-1)) - 2"));
        }
        if k == self.next_sample {
            self.samples.push((k, self.l_max, e));
            self.next_sample *= 2;
        }
        self.last_e = e;
    }

    pub fn all_prefixes_found(&self) -> bool {
        self.n_min.iter().all(Option::is_some)
    }

    pub fn finish(mut self) -> GrowthReport {
        if self.samples.last().is_none_or(|s| s.0 != self.last) && self.last > 0 {
            self.samples.push((self.last, self.l_max, self.last_e));
        }
        let found: Vec<(usize, u64)> = self
            .n_min
            .iter()
            .enumerate()
            .filter_map(|(i, n)| n.map(|n| (i + 1, n)))
            .collect();
        let mut ratios = Vec::new();
        for w in found.windows(2) {
            let ((j, a), (j2, b)) = (w[0], w[1]);
            if j2 == j + 1 {
                ratios.push((j, frac(b as i64, a as i64)));
            }
            if b <= a {
                self.violations
                    .push(format!("N_min({j2}) = {b} not above N_min({j}) = {a}"));
            }
        }
        GrowthReport {
            n_min: self.n_min,
            ratios,
            l_max_steps: self.l_max_steps,
            samples: self.samples,
            n_grains: self.last,
            violations: self.violations,
        }
    }
}

/// Smallest `N <= cap` whose fixed point starts with `(2, 0)^j`, D = 3.
pub fn min_grains_for_prefix(j: usize, cap: u64) -> Option<u64> {
    if j == 0 {
        return Some(0);
    }
    prefix_sweep(j, cap)[j - 1]
}

/// `N_min(j)` for every `j = 1..=j_max` in one pass of the process.
pub fn prefix_sweep(j_max: usize, cap: u64) -> Vec<Option<u64>> {
    let params = Parameters::new(3).expect("D = 3 is valid");
    let mut found = vec![None; j_max];
    let mut process = Process::new(params);
    let mut pending = j_max;
    while pending > 0 && process.k() < cap {
        process.step();
        let prefix = prefix_20_length(process.fixed_point()).min(j_max);
        for slot in found[..prefix].iter_mut().filter(|s| s.is_none()) {
            *slot = Some(process.k());
            pending -= 1;
        }
    }
    found
}

/// Growth report over an existing D = 3 trace.
pub fn growth_report(trace: &RunTrace, j_max: usize) -> Result<GrowthReport> {
    let mut sweep = GrowthSweep::new(trace.params, j_max)?;
    for rec in &trace.records {
        sweep.observe(&rec.avalanche, &rec.fixed_point);
    }
    Ok(sweep.finish())
}

/// Streams the D = 3 process without keeping a trace. Runs at least
/// `n_grains` grains, and keeps going up to `cap` until every `N_min(j)`
/// is found.
pub fn run_growth(n_grains: u64, j_max: usize, cap: u64) -> Result<GrowthReport> {
    check_grain_cap(n_grains.max(cap))?;
    let params = Parameters::new(3)?;
    let mut sweep = GrowthSweep::new(params, j_max)?;
    let mut process = Process::new(params);
    while process.k() < n_grains || (!sweep.all_prefixes_found() && process.k() < cap) {
        let av = process.step();
        sweep.observe(&av, process.fixed_point());
    }
    Ok(sweep.finish())
}

/// Fits `L ≈ c1 log₄ N + c2` as an upper envelope: `c1` is the least-squares
/// slope over the given points, `c2` the largest residual above that line.
pub fn fit_log4_envelope(points: &[(u64, usize)]) -> (f64, f64) {
    let xs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(n, _)| *n >= 1)
        .map(|&(n, l)| ((n as f64).ln() / 4f64.ln(), l as f64))
        .collect();
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let m = xs.len() as f64;
    let mx = xs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = xs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let c1 = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let c2 = xs
        .iter()
        .map(|p| p.1 - c1 * p.0)
        .fold(f64::NEG_INFINITY, f64::max);
    (c1, c2)
}
