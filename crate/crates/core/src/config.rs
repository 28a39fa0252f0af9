//! Configurations of KSPM(D) and the transition rule.

use std::fmt;

use crate::error::{Error, Result};

/// Largest grain count accepted by the iterative process. Keeps every
/// weighted mass and shot count well inside `i64`.
pub const MASS_CAP: u64 = 1 << 40;

/// The model parameter `D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Parameters {
    d: usize,
}

impl Parameters {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidParameter(d));
        }
        Ok(Parameters { d })
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    /// `D` as a height value.
    #[inline]
    pub(crate) fn threshold(&self) -> i64 {
        self.d as i64
    }
}

/// An ultimately null sequence of non-negative height differences.
///
/// Only a finite prefix is stored; every column past the stored length
/// reads as zero. Two configurations compare equal when they agree on every
/// column, regardless of how many trailing zeros each one stores.
#[derive(Clone)]
pub struct Configuration {
    sigma: Vec<i64>,
    params: Parameters,
}

impl Configuration {
    /// The empty pile `0^ω`.
    pub fn zero(params: Parameters) -> Self {
        Configuration {
            sigma: Vec::new(),
            params,
        }
    }

    pub fn from_sigma(params: Parameters, sigma: Vec<i64>) -> Result<Self> {
        if let Some((column, &value)) = sigma.iter().enumerate().find(|(_, v)| **v < 0) {
            return Err(Error::NegativeEntry { column, value });
        }
        Ok(Configuration { sigma, params })
    }

    /// A pile of `n` grains stacked on column 0, i.e. `(n, 0, 0, ...)`.
    pub fn pile(params: Parameters, n: u64) -> Self {
        Configuration {
            sigma: vec![n as i64],
            params,
        }
    }

    /// Rebuilds the difference sequence from a non-increasing height profile.
    pub fn from_heights(params: Parameters, heights: &[i64]) -> Result<Self> {
        let sigma = heights
            .iter()
            .enumerate()
            .map(|(i, &h)| h - heights.get(i + 1).copied().unwrap_or(0))
            .collect();
        Self::from_sigma(params, sigma)
    }

    #[inline]
    pub fn params(&self) -> Parameters {
        self.params
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.params.d
    }

    /// Value at column `i`; zero past the stored prefix.
    #[inline]
    pub fn get(&self, i: usize) -> i64 {
        self.sigma.get(i).copied().unwrap_or(0)
    }

    /// The stored prefix, possibly with trailing zeros.
    pub fn sigma(&self) -> &[i64] {
        &self.sigma
    }

    /// Stored prefix with trailing zeros removed.
    pub fn trimmed(&self) -> &[i64] {
        let end = self
            .sigma
            .iter()
            .rposition(|&v| v != 0)
            .map_or(0, |p| p + 1);
        &self.sigma[..end]
    }

    /// Index of the last nonzero column, `None` for the empty pile.
    pub fn last_nonzero(&self) -> Option<usize> {
        self.sigma.iter().rposition(|&v| v != 0)
    }

    #[inline]
    pub fn is_fireable(&self, i: usize) -> bool {
        self.get(i) >= self.params.threshold()
    }

    /// Returns the configuration reached by firing column `i`.
    pub fn fire(&self, i: usize) -> Result<Configuration> {
        let mut next = self.clone();
        next.fire_in_place(i)?;
        Ok(next)
    }

    /// Fires column `i` in place.
    pub fn fire_in_place(&mut self, i: usize) -> Result<()> {
        if !self.is_fireable(i) {
            return Err(Error::NotFireable {
                column: i,
                value: self.get(i),
                d: self.params.d,
            });
        }
        self.fire_unchecked(i);
        Ok(())
    }

    /// Applies the transition rule without checking `σ_i >= D`.
    #[inline]
    pub(crate) fn fire_unchecked(&mut self, i: usize) {
        let d = self.params.d;
        let top = i + d - 1;
        if self.sigma.len() <= top {
            self.sigma.resize(top + 1, 0);
        }
        if i > 0 {
            self.sigma[i - 1] += d as i64 - 1;
        }
        self.sigma[i] -= d as i64;
        self.sigma[top] += 1;
    }

    /// Adds `delta` to column `i`, growing the prefix as needed.
    pub(crate) fn add_at(&mut self, i: usize, delta: i64) {
        if self.sigma.len() <= i {
            self.sigma.resize(i + 1, 0);
        }
        self.sigma[i] += delta;
    }

    /// `σ↓0`: one more grain on column 0.
    pub fn add_grain(&self) -> Configuration {
        let mut next = self.clone();
        next.add_grain_in_place();
        next
    }

    pub fn add_grain_in_place(&mut self) {
        self.add_at(0, 1);
    }

    /// Heights `h_0 .. h_{n-1}` with `h_i = Σ_{j >= i} σ_j`.
    pub fn heights(&self, n: usize) -> Vec<i64> {
        let mut suffix: i64 = self.sigma.iter().skip(n).sum();
        let mut out = vec![0; n];
        for i in (0..n).rev() {
            suffix += self.get(i);
            out[i] = suffix;
        }
        out
    }

    /// `Σ (i + 1) σ_i`, the number of grains in the height pile.
    pub fn weighted_mass(&self) -> i64 {
        self.sigma
            .iter()
            .enumerate()
            .map(|(i, &v)| (i as i64 + 1) * v)
            .sum()
    }

    pub fn is_stable(&self) -> bool {
        let d = self.params.threshold();
        self.sigma.iter().all(|&v| v < d)
    }

    /// Columns currently fireable, in increasing order.
    pub fn fireable_columns(&self) -> Vec<usize> {
        let d = self.params.threshold();
        self.sigma
            .iter()
            .enumerate()
            .filter(|(_, &v)| v >= d)
            .map(|(i, _)| i)
            .collect()
    }
}

impl PartialEq for Configuration {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params && self.trimmed() == other.trimmed()
    }
}

impl Eq for Configuration {}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Configuration(D={}, {:?})",
            self.params.d,
            self.trimmed()
        )
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.trimmed().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(d: usize, sigma: &[i64]) -> Configuration {
        Configuration::from_sigma(Parameters::new(d).unwrap(), sigma.to_vec()).unwrap()
    }

    #[test]
    fn parameters_reject_d_below_two() {
        assert_eq!(Parameters::new(1), Err(Error::InvalidParameter(1)));
        assert!(Parameters::new(2).is_ok());
    }

    #[test]
    fn negative_entries_are_rejected() {
        let p = Parameters::new(3).unwrap();
        assert_eq!(
            Configuration::from_sigma(p, vec![1, -1]),
            Err(Error::NegativeEntry {
                column: 1,
                value: -1
            })
        );
    }

    #[test]
    fn fireability() {
        assert!(cfg(3, &[3, 0]).is_fireable(0));
        assert!(!cfg(3, &[2, 0]).is_fireable(0));
        assert!(cfg(3, &[1, 4, 0]).is_fireable(1));
        assert!(!cfg(3, &[1, 4, 0]).is_fireable(17));
    }

    #[test]
    fn fire_examples() {
        assert_eq!(cfg(3, &[3, 0, 0]).fire(0).unwrap(), cfg(3, &[0, 0, 1]));
        assert_eq!(
            cfg(3, &[1, 4, 0, 0]).fire(1).unwrap(),
            cfg(3, &[3, 1, 0, 1])
        );
        assert_eq!(
            cfg(4, &[5, 0, 0, 0, 0]).fire(0).unwrap(),
            cfg(4, &[1, 0, 0, 1])
        );
    }

    #[test]
    fn fire_grows_storage_and_keeps_input() {
        let c = cfg(3, &[3]);
        let f = c.fire(0).unwrap();
        assert_eq!(c.sigma(), &[3]);
        assert_eq!(f.sigma(), &[0, 0, 1]);
    }

    #[test]
    fn fire_on_stable_column_is_an_error() {
        let c = cfg(3, &[2, 5]);
        assert_eq!(
            c.fire(0),
            Err(Error::NotFireable {
                column: 0,
                value: 2,
                d: 3
            })
        );
        assert!(matches!(
            c.fire(9),
            Err(Error::NotFireable {
                column: 9,
                value: 0,
                ..
            })
        ));
    }

    #[test]
    fn add_grain_examples() {
        let p = Parameters::new(3).unwrap();
        assert_eq!(Configuration::zero(p).add_grain(), cfg(3, &[1]));
        assert_eq!(cfg(3, &[2, 0, 1]).add_grain(), cfg(3, &[3, 0, 1]));
    }

    #[test]
    fn heights_examples() {
        assert_eq!(cfg(3, &[2, 0, 1]).heights(3), vec![3, 1, 1]);
        assert_eq!(cfg(3, &[0]).heights(2), vec![0, 0]);
        assert_eq!(cfg(3, &[1, 0, 2]).heights(4), vec![3, 2, 2, 0]);
        // Truncated views still include the mass stored past n.
        assert_eq!(cfg(3, &[1, 0, 2]).heights(1), vec![3]);
    }

    #[test]
    fn weighted_mass_examples() {
        assert_eq!(cfg(3, &[2, 0, 1]).weighted_mass(), 5);
        assert_eq!(cfg(3, &[0]).weighted_mass(), 0);
        assert_eq!(cfg(3, &[3, 0, 0]).fire(0).unwrap().weighted_mass(), 3);
    }

    #[test]
    fn stability_examples() {
        assert!(cfg(3, &[2, 2, 2]).is_stable());
        assert!(!cfg(3, &[3, 0]).is_stable());
        assert!(cfg(3, &[0]).is_stable());
    }

    #[test]
    fn equality_ignores_trailing_zeros() {
        assert_eq!(cfg(3, &[1, 0, 1]), cfg(3, &[1, 0, 1, 0, 0]));
        assert_ne!(cfg(3, &[1, 0, 1]), cfg(4, &[1, 0, 1]));
        assert_eq!(format!("{}", cfg(3, &[0, 2, 0, 0, 1, 0])), "(0,2,0,0,1)");
    }

    fn arb_config() -> impl Strategy<Value = Configuration> {
        (2usize..7, prop::collection::vec(0i64..20, 0..30)).prop_map(|(d, s)| cfg(d, &s))
    }

    proptest! {
        #[test]
        fn firing_conserves_mass_and_is_local(c in arb_config()) {
            for i in c.fireable_columns() {
                let f = c.fire(i).unwrap();
                prop_assert_eq!(f.weighted_mass(), c.weighted_mass());
                prop_assert!(f.sigma().iter().all(|&v| v >= 0));
                let touched = [i.checked_sub(1), Some(i), Some(i + c.d() - 1)];
                for j in 0..f.sigma().len().max(c.sigma().len()) {
                    if !touched.contains(&Some(j)) {
                        prop_assert_eq!(f.get(j), c.get(j));
                    }
                }
            }
        }

        #[test]
        fn heights_round_trip(c in arb_config()) {
            let n = c.sigma().len();
            let h = c.heights(n);
            prop_assert!(h.iter().all(|&x| x >= 0));
            prop_assert!(h.windows(2).all(|w| w[0] >= w[1]));
            prop_assert_eq!(h.iter().sum::<i64>(), c.weighted_mass());
            let back = Configuration::from_heights(c.params(), &h).unwrap();
            prop_assert_eq!(back.sigma(), c.sigma());
        }

        #[test]
        fn add_grain_adds_one_unit_of_mass(c in arb_config()) {
            prop_assert_eq!(c.add_grain().weighted_mass(), c.weighted_mass() + 1);
        }
    }
}
