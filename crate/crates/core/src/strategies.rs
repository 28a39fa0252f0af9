//! Stabilization strategies, the iterative single-grain process and
//! avalanches.
//!
//! Leftmost stabilization keeps a min-heap of candidate columns. Firing
//! column `i` can only change the fireability of `i - 1`, `i` and
//! `i + D - 1`, so each firing pushes at most three entries; stale entries
//! are discarded when popped.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Configuration, Parameters, MASS_CAP};
use crate::error::{Error, Result};
use crate::pseudolocal;

/// An ordered sequence of fired columns `(s_1, ..., s_T)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Strategy(Vec<usize>);

impl Strategy {
    pub fn new(firings: Vec<usize>) -> Self {
        Strategy(firings)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &usize> {
        self.0.iter()
    }

    /// `|s|_i` for every fired column.
    pub fn counts(&self) -> BTreeMap<usize, usize> {
        strategy_counts(self)
    }

    /// Replays the strategy from `origin`, failing on the first firing that
    /// is not allowed.
    pub fn replay(&self, origin: &Configuration) -> Result<Configuration> {
        let mut cfg = origin.clone();
        for &i in &self.0 {
            cfg.fire_in_place(i)?;
        }
        Ok(cfg)
    }

    /// Running maxima: each firing strictly greater than every earlier one.
    pub fn peaks(&self) -> Vec<usize> {
        let mut peaks = Vec::new();
        for &c in &self.0 {
            if peaks.last().is_none_or(|&p| c > p) {
                peaks.push(c);
            }
        }
        peaks
    }
}

impl From<Vec<usize>> for Strategy {
    fn from(v: Vec<usize>) -> Self {
        Strategy(v)
    }
}

/// `|s|_i = #{t | s_t = i}`.
pub fn strategy_counts(s: &Strategy) -> BTreeMap<usize, usize> {
    let mut counts = BTreeMap::new();
    for &c in s.iter() {
        *counts.entry(c).or_insert(0) += 1;
    }
    counts
}

/// The `k`-th avalanche: the leftmost strategy from `π(k-1)↓0` to `π(k)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Avalanche {
    pub k: u64,
    pub strategy: Strategy,
    pub peaks: Vec<usize>,
    /// Smallest column starting `D - 1` consecutive fired columns.
    pub interval_l: Option<usize>,
}

impl Avalanche {
    pub fn new(k: u64, strategy: Strategy, params: Parameters) -> Self {
        let peaks = strategy.peaks();
        let interval_l = pseudolocal::interval_base(strategy.as_slice(), params.d());
        Avalanche {
            k,
            strategy,
            peaks,
            interval_l,
        }
    }

    pub fn fired_set(&self) -> BTreeSet<usize> {
        self.strategy.iter().copied().collect()
    }

    pub fn max_fired(&self) -> Option<usize> {
        self.peaks.last().copied()
    }

    pub fn len(&self) -> usize {
        self.strategy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strategy.is_empty()
    }
}

/// Per-column firing counts accumulated over the first `n_grains` avalanches.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ShotVector {
    pub counts: Vec<i64>,
    pub n_grains: u64,
}

impl ShotVector {
    /// `a_i`, zero past the stored prefix.
    pub fn get(&self, i: usize) -> i64 {
        self.counts.get(i).copied().unwrap_or(0)
    }

    pub fn record(&mut self, strategy: &Strategy) {
        for &c in strategy.iter() {
            if self.counts.len() <= c {
                self.counts.resize(c + 1, 0);
            }
            self.counts[c] += 1;
        }
    }

    pub fn trimmed(&self) -> &[i64] {
        let end = self
            .counts
            .iter()
            .rposition(|&v| v != 0)
            .map_or(0, |p| p + 1);
        &self.counts[..end]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRecord {
    /// `π(k)`.
    pub fixed_point: Configuration,
    pub avalanche: Avalanche,
}

/// The full history of the iterative process for `k = 1..=N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunTrace {
    pub params: Parameters,
    pub records: Vec<StepRecord>,
    pub shot: ShotVector,
}

impl RunTrace {
    pub fn n_grains(&self) -> u64 {
        self.records.len() as u64
    }

    /// `π(k)`, with `π(0) = 0^ω`.
    pub fn fixed_point(&self, k: u64) -> Configuration {
        match k {
            0 => Configuration::zero(self.params),
            _ => self.records[k as usize - 1].fixed_point.clone(),
        }
    }

    pub fn final_fixed_point(&self) -> Configuration {
        self.fixed_point(self.n_grains())
    }

    pub fn avalanche(&self, k: u64) -> &Avalanche {
        &self.records[k as usize - 1].avalanche
    }
}

/// Candidate worklist for leftmost stabilization.
#[derive(Debug, Default)]
struct Worklist(BinaryHeap<Reverse<usize>>);

impl Worklist {
    fn push_if_fireable(&mut self, cfg: &Configuration, i: usize) {
        if cfg.is_fireable(i) {
            self.0.push(Reverse(i));
        }
    }

    /// Fires the smallest fireable column until none is left.
    fn drain(&mut self, cfg: &mut Configuration, out: &mut Vec<usize>) {
        let d = cfg.d();
        while let Some(Reverse(i)) = self.0.pop() {
            if !cfg.is_fireable(i) {
                continue;
            }
            cfg.fire_unchecked(i);
            out.push(i);
            if i > 0 {
                self.push_if_fireable(cfg, i - 1);
            }
            self.push_if_fireable(cfg, i);
            self.push_if_fireable(cfg, i + d - 1);
        }
    }
}

/// Leftmost stabilization: `(π(cfg), s)` where `s` fires the smallest
/// fireable column at every step.
pub fn stabilize_leftmost(cfg: &Configuration) -> (Configuration, Strategy) {
    let mut out = cfg.clone();
    let mut firings = Vec::new();
    let mut work = Worklist::default();
    for i in cfg.fireable_columns() {
        work.0.push(Reverse(i));
    }
    work.drain(&mut out, &mut firings);
    (out, Strategy(firings))
}

/// Fireable columns with O(1) insert, remove and uniform sampling.
#[derive(Debug, Default)]
struct FireableSet {
    items: Vec<usize>,
    pos: Vec<usize>,
}

impl FireableSet {
    const ABSENT: usize = usize::MAX;

    fn sync(&mut self, cfg: &Configuration, i: usize) {
        if self.pos.len() <= i {
            self.pos.resize(i + 1, Self::ABSENT);
        }
        let present = self.pos[i] != Self::ABSENT;
        match (cfg.is_fireable(i), present) {
            (true, false) => {
                self.pos[i] = self.items.len();
                self.items.push(i);
            }
            (false, true) => {
                let at = self.pos[i];
                self.items.swap_remove(at);
                if let Some(&moved) = self.items.get(at) {
                    self.pos[moved] = at;
                }
                self.pos[i] = Self::ABSENT;
            }
            _ => {}
        }
    }
}

/// Stabilization firing a uniformly random fireable column at each step.
///
/// Randomness comes from `ChaCha8Rng::seed_from_u64(seed)`, so a given seed
/// always replays the same strategy.
pub fn stabilize_random(cfg: &Configuration, seed: u64) -> (Configuration, Strategy) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = cfg.clone();
    let mut firings = Vec::new();
    let mut set = FireableSet::default();
    for i in cfg.fireable_columns() {
        set.sync(&out, i);
    }
    let d = cfg.d();
    while !set.items.is_empty() {
        let i = set.items[rng.random_range(0..set.items.len())];
        out.fire_unchecked(i);
        firings.push(i);
        if i > 0 {
            set.sync(&out, i - 1);
        }
        set.sync(&out, i);
        set.sync(&out, i + d - 1);
    }
    (out, Strategy(firings))
}

/// Fires `i` then `j` and `j` then `i`, and compares the results.
pub fn check_diamond(cfg: &Configuration, i: usize, j: usize) -> Result<bool> {
    if i == j {
        return Err(Error::SameColumn(i));
    }
    let via_i = cfg.fire(i)?.fire(j)?;
    let via_j = cfg.fire(j)?.fire(i)?;
    Ok(via_i == via_j)
}

/// The iterative process: starting from `0^ω`, add one grain on column 0
/// and stabilize, repeatedly.
///
/// Only the current fixed point and the shot vector are kept; callers that
/// need the whole history use [`run_process`].
#[derive(Debug, Clone)]
pub struct Process {
    params: Parameters,
    current: Configuration,
    shot: ShotVector,
}

impl Process {
    pub fn new(params: Parameters) -> Self {
        Process {
            params,
            current: Configuration::zero(params),
            shot: ShotVector::default(),
        }
    }

    /// Resumes from a previously computed `π(k)` and its shot vector.
    pub fn resume(fixed_point: Configuration, shot: ShotVector) -> Self {
        Process {
            params: fixed_point.params(),
            current: fixed_point,
            shot,
        }
    }

    pub fn params(&self) -> Parameters {
        self.params
    }

    /// Grains added so far.
    pub fn k(&self) -> u64 {
        self.shot.n_grains
    }

    /// `π(k)` for the current `k`.
    pub fn fixed_point(&self) -> &Configuration {
        &self.current
    }

    pub fn shot(&self) -> &ShotVector {
        &self.shot
    }

    /// Adds one grain and returns the resulting avalanche `s^{k+1}`.
    pub fn step(&mut self) -> Avalanche {
        let mut firings = Vec::new();
        self.current.add_grain_in_place();
        let mut work = Worklist::default();
        work.push_if_fireable(&self.current, 0);
        work.drain(&mut self.current, &mut firings);
        let strategy = Strategy(firings);
        self.shot.record(&strategy);
        self.shot.n_grains += 1;
        Avalanche::new(self.shot.n_grains, strategy, self.params)
    }
}

pub fn check_grain_cap(n_grains: u64) -> Result<()> {
    if n_grains > MASS_CAP {
        return Err(Error::MassCapExceeded {
            requested: n_grains,
            cap: MASS_CAP,
        });
    }
    Ok(())
}

/// Runs the iterative process for `k = 1..=n_grains`, keeping every
/// fixed point and avalanche.
pub fn run_process(n_grains: u64, params: Parameters) -> Result<RunTrace> {
    check_grain_cap(n_grains)?;
    let mut process = Process::new(params);
    let mut records = Vec::with_capacity(n_grains as usize);
    for _ in 0..n_grains {
        let avalanche = process.step();
        records.push(StepRecord {
            fixed_point: process.fixed_point().clone(),
            avalanche,
        });
    }
    Ok(RunTrace {
        params,
        records,
        shot: process.shot,
    })
}
