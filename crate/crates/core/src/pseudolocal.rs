//! Structure of avalanches to the right of an interval of `D - 1`
//! consecutive fired columns.
//!
//! Once an avalanche `s^k` fires every column of some `[l, l + D - 2]`, its
//! behaviour on columns `>= l + D - 1` is fixed by `π(k-1)` alone: the peaks
//! there are the chain of columns holding `D - 1`, each at most `D - 1`
//! apart, and after every peak the avalanche fills the hole down to the
//! previous peak before progressing again.

use std::fmt::Write as _;

use crate::config::{Configuration, Parameters};
use crate::strategies::{Avalanche, ShotVector, Strategy};

/// Smallest `l` such that `l, l + 1, ..., l + D - 2` all appear in `firings`.
pub(crate) fn interval_base(firings: &[usize], d: usize) -> Option<usize> {
    let mut cols = firings.to_vec();
    cols.sort_unstable();
    cols.dedup();
    let need = d - 1;
    let mut run_start = 0;
    for idx in 0..cols.len() {
        if idx > 0 && cols[idx] != cols[idx - 1] + 1 {
            run_start = idx;
        }
        if idx + 1 - run_start >= need {
            return Some(cols[run_start]);
        }
    }
    None
}

/// The canonical interval column `L(k)` of an avalanche.
pub fn find_interval_l(av: &Avalanche, params: Parameters) -> Option<usize> {
    interval_base(av.strategy.as_slice(), params.d())
}

/// Peaks `p_1 < ... < p_q` of an avalanche at or above `base_l + D - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeakSequence {
    pub peaks: Vec<usize>,
    pub base_l: usize,
}

/// Follows the chain of `D - 1` columns of `value` starting at or above
/// `from`. The first link is searched in `from..=limit`.
fn peak_chain(value: impl Fn(usize) -> i64, from: usize, limit: usize, d: usize) -> Vec<usize> {
    let target = d as i64 - 1;
    let mut peaks = Vec::new();
    let Some(first) = (from..=limit).find(|&i| value(i) == target) else {
        return peaks;
    };
    peaks.push(first);
    let mut last = first;
    while let Some(next) = (last + 1..=last + d - 1).find(|&j| value(j) == target) {
        peaks.push(next);
        last = next;
    }
    peaks
}

/// Peaks of the next avalanche at or above `l + D - 1`, read off `prev_fix`.
///
/// The first peak is the lowest column of `[l + D - 1, l + 2D - 3]` holding
/// `D - 1`: every column below `l + D - 1` fired before it is at most
/// `l + D - 2`, and a new maximum never jumps more than `D - 1`. Each
/// following peak is the lowest column holding `D - 1` within `D - 1` of
/// the previous one.
pub fn predict_peaks(prev_fix: &Configuration, l: usize) -> PeakSequence {
    let d = prev_fix.d();
    let from = l + d - 1;
    let peaks = peak_chain(|i| prev_fix.get(i), from, from + d - 2, d);
    PeakSequence { peaks, base_l: l }
}

/// Expands a peak sequence into firings: each peak, then every column below
/// it down to the previous peak plus one. `floor` plays the previous peak
/// for the first one.
pub fn suffix_from_peaks(peaks: &[usize], floor: usize) -> Strategy {
    let mut out = Vec::with_capacity(peaks.last().map_or(0, |&q| q.saturating_sub(floor)));
    let mut below = floor;
    for &p in peaks {
        out.extend((below + 1..=p).rev());
        below = p;
    }
    Strategy::new(out)
}

/// Firings of the avalanche from its first peak `l' >= l + D - 1` onward.
///
/// `prior_max` is the largest column fired before `l'`; the fill after `l'`
/// stops just above it. Without it the fill runs down to `l' - D + 2`,
/// which is exact whenever no column of `(l' - D + 1, l')` fired earlier
/// (always the case for `D = 3`).
pub fn predict_suffix(prev_fix: &Configuration, l: usize, prior_max: Option<usize>) -> Strategy {
    let seq = predict_peaks(prev_fix, l);
    let Some(&first) = seq.peaks.first() else {
        return Strategy::default();
    };
    let floor = prior_max.unwrap_or(first + 1 - prev_fix.d());
    suffix_from_peaks(&seq.peaks, floor)
}

/// Outcome of checking one avalanche against the structural results.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureReport {
    /// Every column fired at most once.
    pub single_fire_ok: bool,
    /// Backward moves land on the largest unfired column below the running
    /// maximum `r_t` with `r_t - s_{t+1} < D - 1`; forward moves jump at
    /// most `D - 1`.
    pub local_density_ok: bool,
    pub peaks_match: bool,
    pub suffix_match: bool,
    /// `π(k)_j = π(k-1)_j` for `l + D - 1 <= j < max s^k`.
    pub equality_range_ok: bool,
    pub details: String,
}

impl StructureReport {
    pub fn all_ok(&self) -> bool {
        self.single_fire_ok
            && self.local_density_ok
            && self.peaks_match
            && self.suffix_match
            && self.equality_range_ok
    }
}

/// Checks single firing, local density, peak and suffix prediction and the
/// successive fixed point equality for one avalanche.
pub fn verify_avalanche_structure(
    av: &Avalanche,
    prev_fix: &Configuration,
    next_fix: &Configuration,
    params: Parameters,
) -> StructureReport {
    let d = params.d();
    let s = av.strategy.as_slice();
    let mut details = String::new();
    let width = s.iter().max().map_or(0, |&m| m + 1);
    let mut fired = vec![false; width];

    let mut single_fire_ok = true;
    let mut local_density_ok = true;
    let mut r = 0usize;
    for (t, &c) in s.iter().enumerate() {
        if fired[c] {
            if single_fire_ok {
                let _ = write!(details, "column {c} fired twice (t={t}); ");
            }
            single_fire_ok = false;
        }
        if t > 0 {
            if c < r {
                let largest_unfired = (0..r).rev().find(|&i| !fired[i]);
                if largest_unfired != Some(c) || r - c >= d - 1 {
                    if local_density_ok {
                        let _ = write!(
                            details,
                            "backward move {r}->{c} at t={t} (largest unfired {largest_unfired:?}); "
                        );
                    }
                    local_density_ok = false;
                }
            } else if c > r && c - r > d - 1 {
                if local_density_ok {
                    let _ = write!(details, "forward jump {r}->{c} at t={t}; ");
                }
                local_density_ok = false;
            }
        }
        fired[c] = true;
        r = r.max(c);
    }

    let mut peaks_match = true;
    let mut suffix_match = true;
    let mut equality_range_ok = true;
    if let Some(l) = find_interval_l(av, params) {
        let boundary = l + d - 1;
        let predicted = predict_peaks(prev_fix, l);
        let actual: Vec<usize> = av
            .peaks
            .iter()
            .copied()
            .filter(|&p| p >= boundary)
            .collect();
        if predicted.peaks != actual {
            peaks_match = false;
            let _ = write!(
                details,
                "peaks above {boundary}: predicted {:?}, actual {actual:?}; ",
                predicted.peaks
            );
        }

        let start = actual.first().and_then(|&p| s.iter().position(|&c| c == p));
        let (prior_max, actual_suffix) = match start {
            Some(t0) => (s[..t0].iter().max().copied(), &s[t0..]),
            None => (None, &s[s.len()..]),
        };
        let suffix = predict_suffix(prev_fix, l, prior_max);
        if suffix.as_slice() != actual_suffix {
            suffix_match = false;
            let _ = write!(
                details,
                "suffix: predicted {:?}, actual {actual_suffix:?}; ",
                suffix.as_slice()
            );
        }

        if let Some(top) = av.max_fired() {
            if let Some(j) = (boundary..top).find(|&j| next_fix.get(j) != prev_fix.get(j)) {
                equality_range_ok = false;
                let _ = write!(
                    details,
                    "π(k)_{j} = {} differs from π(k-1)_{j} = {}; ",
                    next_fix.get(j),
                    prev_fix.get(j)
                );
            }
        }
    }

    StructureReport {
        single_fire_ok,
        local_density_ok,
        peaks_match,
        suffix_match,
        equality_range_ok,
        details,
    }
}

/// Counters kept by [`PseudoLocalProcess`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PseudoLocalStats {
    /// Firings found by the leftmost worklist.
    pub simulated_firings: u64,
    /// Firings emitted from a predicted peak sequence.
    pub predicted_firings: u64,
    /// Simulated firings at or above `l + D - 1` in avalanches that switched
    /// to prediction. Zero by construction.
    pub simulated_above_interval: u64,
    /// Avalanches that switched to prediction.
    pub predicted_avalanches: u64,
    /// Non-empty avalanches replayed in full because no interval showed up.
    pub fallbacks: u64,
    /// Switch attempts whose predicted first peak disagreed with the
    /// column about to fire; these are replayed instead.
    pub rejected_switches: u64,
}

/// The iterative process, with every avalanche finished by prediction as
/// soon as its replayed prefix exposes an interval.
///
/// Each avalanche is replayed leftmost until it is about to fire a new
/// maximum `c` while the `D - 1` columns ending at the current maximum `r`
/// are all fired. From there `l = r - D + 2` is an interval base, `r` is the
/// previous peak, and the rest of the avalanche is read off `π(k-1)`. The
/// suffix fires every column of `[r + 1, p_q]` exactly once, so `π(k)` is
/// obtained by touching only the `O(D)` columns at the two ends of that
/// block.
#[derive(Debug, Clone)]
pub struct PseudoLocalProcess {
    params: Parameters,
    current: Configuration,
    shot: ShotVector,
    stats: PseudoLocalStats,
    fired: Vec<bool>,
}

impl PseudoLocalProcess {
    pub fn new(params: Parameters) -> Self {
        PseudoLocalProcess {
            params,
            current: Configuration::zero(params),
            shot: ShotVector::default(),
            stats: PseudoLocalStats::default(),
            fired: Vec::new(),
        }
    }

    pub fn fixed_point(&self) -> &Configuration {
        &self.current
    }

    pub fn shot(&self) -> &ShotVector {
        &self.shot
    }

    pub fn stats(&self) -> PseudoLocalStats {
        self.stats
    }

    pub fn k(&self) -> u64 {
        self.shot.n_grains
    }

    /// Adds one grain; returns the avalanche and, when prediction kicked in,
    /// the interval base used.
    pub fn step(&mut self) -> (Avalanche, Option<usize>) {
        let d = self.params.d();
        let target = d as i64 - 1;
        let mut firings: Vec<usize> = Vec::new();
        let mut switched_at = None;
        self.current.add_grain_in_place();

        let mut heap = std::collections::BinaryHeap::new();
        if self.current.is_fireable(0) {
            heap.push(std::cmp::Reverse(0usize));
        }
        let mut r: Option<usize> = None;
        while let Some(std::cmp::Reverse(i)) = heap.pop() {
            if !self.current.is_fireable(i) {
                continue;
            }
            if let Some(top) = r.filter(|&top| i > top && top + 2 >= d) {
                if (top + 2 - d..=top).all(|c| self.fired[c]) {
                    let fired = &self.fired;
                    let cur = &self.current;
                    // π(k-1) above `top`: undo the +1 received from `j - D + 1`.
                    let prev = |j: usize| {
                        let back = j + 1 - d;
                        cur.get(j) - i64::from(fired.get(back).copied().unwrap_or(false))
                    };
                    let peaks = peak_chain(prev, top + 1, top + d - 1, d);
                    debug_assert!(peaks.iter().all(|&p| prev(p) == target));
                    if peaks.first() == Some(&i) {
                        let q = *peaks.last().unwrap();
                        let boundary = top + 1;
                        self.stats.simulated_above_interval +=
                            firings.iter().filter(|&&c| c >= boundary).count() as u64;
                        self.stats.predicted_firings += (q - top) as u64;
                        self.stats.predicted_avalanches += 1;
                        firings.extend(suffix_from_peaks(&peaks, top).into_vec());
                        fire_block(&mut self.current, top + 1, q);
                        switched_at = Some(top + 2 - d);
                        break;
                    }
                    self.stats.rejected_switches += 1;
                }
            }
            self.current.fire_unchecked(i);
            firings.push(i);
            self.stats.simulated_firings += 1;
            if self.fired.len() <= i {
                self.fired.resize(i + d + 1, false);
            }
            self.fired[i] = true;
            r = Some(r.map_or(i, |top| top.max(i)));
            for c in [i.checked_sub(1), Some(i), Some(i + d - 1)]
                .into_iter()
                .flatten()
            {
                if self.current.is_fireable(c) {
                    heap.push(std::cmp::Reverse(c));
                }
            }
        }

        for &c in firings.iter() {
            if let Some(f) = self.fired.get_mut(c) {
                *f = false;
            }
        }
        if switched_at.is_none() && !firings.is_empty() {
            self.stats.fallbacks += 1;
        }
        let strategy = Strategy::new(firings);
        self.shot.record(&strategy);
        self.shot.n_grains += 1;
        (
            Avalanche::new(self.shot.n_grains, strategy, self.params),
            switched_at,
        )
    }
}

/// Applies one firing of every column in `[a, b]`, touching only columns
/// whose net change is nonzero.
fn fire_block(cfg: &mut Configuration, a: usize, b: usize) {
    let d = cfg.d();
    let delta = |j: usize| -> i64 {
        let inside = |c: usize| (a..=b).contains(&c);
        let mut v = 0;
        if inside(j + 1) {
            v += d as i64 - 1;
        }
        if inside(j) {
            v -= d as i64;
        }
        if j + 1 >= d && inside(j + 1 - d) {
            v += 1;
        }
        v
    };
    let low_end = (a + d - 2).min(b + d - 1);
    for j in a.saturating_sub(1)..=low_end {
        let v = delta(j);
        if v != 0 {
            cfg.add_at(j, v);
        }
    }
    for j in (low_end + 1).max(b)..=b + d - 1 {
        let v = delta(j);
        if v != 0 {
            cfg.add_at(j, v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategies::{run_process, stabilize_leftmost, Process};

    fn p(d: usize) -> Parameters {
        Parameters::new(d).unwrap()
    }

    fn av(d: usize, firings: &[usize]) -> Avalanche {
        Avalanche::new(1, Strategy::new(firings.to_vec()), p(d))
    }

    #[test]
    fn interval_examples() {
        let t = run_process(9, p(3)).unwrap();
        assert_eq!(find_interval_l(t.avalanche(9), p(3)), None);
        assert_eq!(find_interval_l(&av(3, &[0, 1, 2]), p(3)), Some(0));
        assert_eq!(find_interval_l(&av(4, &[0, 2, 3, 4, 7]), p(4)), Some(2));
        assert_eq!(find_interval_l(&av(4, &[]), p(4)), None);
        // D = 2 needs a single fired column.
        assert_eq!(find_interval_l(&av(2, &[5, 3]), p(2)), Some(3));
        // Order of firing is irrelevant, the smallest base wins.
        assert_eq!(find_interval_l(&av(3, &[9, 8, 2, 1]), p(3)), Some(1));
    }

    fn constructed() -> Configuration {
        let mut s = vec![0i64; 12];
        s[5] = 2;
        s[7] = 2;
        s[10] = 2;
        s[1] = 1;
        Configuration::from_sigma(p(3), s).unwrap()
    }

    #[test]
    fn predict_peaks_on_constructed_configuration() {
        let seq = predict_peaks(&constructed(), 3);
        assert_eq!(seq.peaks, vec![5, 7]);
        assert_eq!(seq.base_l, 3);

        let flat = Configuration::from_sigma(p(3), vec![2, 2, 1, 0, 0, 0, 0]).unwrap();
        assert!(predict_peaks(&flat, 1).peaks.is_empty());
    }

    #[test]
    fn suffix_fill_down() {
        assert_eq!(
            predict_suffix(&constructed(), 3, None).as_slice(),
            &[5, 4, 7, 6]
        );
        assert_eq!(suffix_from_peaks(&[5, 7], 3).as_slice(), &[5, 4, 7, 6]);
        assert!(suffix_from_peaks(&[], 3).is_empty());
        // An earlier firing at column 4 shortens the first fill.
        assert_eq!(
            predict_suffix(&constructed(), 3, Some(4)).as_slice(),
            &[5, 7, 6]
        );
    }

    #[test]
    fn predicted_suffix_matches_a_realizing_configuration() {
        // Firing 3 from here should follow peaks 5 and 7 exactly.
        let mut s = constructed().sigma().to_vec();
        s[3] = 3;
        s[4] = 1;
        s[6] = 1;
        let start = Configuration::from_sigma(p(3), s).unwrap();
        let (_, strat) = stabilize_leftmost(&start);
        assert_eq!(strat.as_slice()[0], 3);
        let t0 = strat.iter().position(|&c| c == 5).unwrap();
        assert_eq!(&strat.as_slice()[t0..], &[5, 4, 7, 6]);
    }

    #[test]
    fn structure_report_on_small_run() {
        let t = run_process(9, p(3)).unwrap();
        let r =
            verify_avalanche_structure(t.avalanche(9), &t.fixed_point(8), &t.fixed_point(9), p(3));
        assert!(r.all_ok(), "{}", r.details);
    }

    #[test]
    fn structure_report_flags_duplicate_column() {
        let z = Configuration::zero(p(3));
        let r = verify_avalanche_structure(&av(3, &[0, 0]), &z, &z, p(3));
        assert!(!r.single_fire_ok);
    }

    #[test]
    fn structure_report_flags_long_forward_jump() {
        let z = Configuration::zero(p(3));
        let r = verify_avalanche_structure(&av(3, &[0, 3]), &z, &z, p(3));
        assert!(r.single_fire_ok);
        assert!(!r.local_density_ok);
    }

    #[test]
    fn every_avalanche_conforms() {
        for d in [2, 3, 4, 5] {
            let t = run_process(3000, p(d)).unwrap();
            for k in 1..=t.n_grains() {
                let r = verify_avalanche_structure(
                    t.avalanche(k),
                    &t.fixed_point(k - 1),
                    &t.fixed_point(k),
                    p(d),
                );
                assert!(r.all_ok(), "d={d} k={k}: {}", r.details);
            }
        }
    }

    #[test]
    fn pseudo_local_process_matches_replay() {
        for d in [2, 3, 4, 5, 6] {
            let mut naive = Process::new(p(d));
            let mut fast = PseudoLocalProcess::new(p(d));
            for _ in 0..3000 {
                let a = naive.step();
                let (b, _) = fast.step();
                assert_eq!(a, b, "d={d}");
                assert_eq!(naive.fixed_point(), fast.fixed_point(), "d={d} k={}", a.k);
            }
            let stats = fast.stats();
            assert_eq!(stats.simulated_above_interval, 0);
            assert_eq!(stats.rejected_switches, 0);
            assert!(stats.predicted_avalanches > 0, "d={d}");
            assert_eq!(naive.shot(), fast.shot());
        }
    }

    #[test]
    fn fire_block_matches_sequential_firing() {
        let base = Configuration::from_sigma(p(4), vec![0, 0, 3, 3, 3, 3, 3, 0, 1]).unwrap();
        for (a, b) in [(2, 6), (3, 3), (2, 4), (0, 2)] {
            let mut fast = base.clone();
            fire_block(&mut fast, a, b);
            let mut slow = base.clone();
            for c in a..=b {
                slow.fire_unchecked(c);
            }
            assert_eq!(fast, slow, "block [{a},{b}]");
        }
    }
}
