//! Shot vector identities and the D = 3 projection law.

use std::fmt;

use num_traits::{Signed, Zero};

use super::jordan::JordanData;
use super::rational::{frac, int, Rational, RationalVec3};
use crate::config::{Configuration, Parameters};
use crate::error::{Error, Result};
use crate::strategies::{Avalanche, RunTrace, ShotVector};

fn require_d3(params: Parameters) -> Result<()> {
    if params.d() != 3 {
        return Err(Error::WrongParameter {
            required: 3,
            actual: params.d(),
        });
    }
    Ok(())
}

/// Per-column `σ_i - (N[i=0] + a_{i-D+1} - D a_i + (D-1) a_{i+1})`.
///
/// Every entry is zero when `fix` is the fixed point reached by the shots.
pub fn shot_identity_residual(
    fix: &Configuration,
    shot: &ShotVector,
    n_grains: u64,
    params: Parameters,
) -> Result<Vec<i64>> {
    if shot.n_grains != n_grains {
        return Err(Error::GrainCountMismatch {
            shot: shot.n_grains,
            expected: n_grains,
        });
    }
    let d = params.d();
    let len = fix.sigma().len().max(shot.counts.len() + d);
    let a = |i: usize| shot.get(i);
    Ok((0..len)
        .map(|i| {
            let source = if i == 0 { n_grains as i64 } else { 0 };
            let from_left = if i + 1 >= d { a(i + 1 - d) } else { 0 };
            let expected = source + from_left - d as i64 * a(i) + (d as i64 - 1) * a(i + 1);
            fix.get(i) - expected
        })
        .collect())
}

/// `u_0 = (N, 0, a_0)`, `u_1 = (0, a_0, a_1)`, `u_i = (a_{i-2}, a_{i-1}, a_i)`,
/// for `i = 0..=upto`.
pub fn build_u_vectors(
    shot: &ShotVector,
    n_grains: u64,
    upto: usize,
    params: Parameters,
) -> Result<Vec<RationalVec3>> {
    require_d3(params)?;
    // a_{-2} = N, a_{-1} = 0
    let a = |i: isize| -> i64 {
        match i {
            -2 => n_grains as i64,
            -1 => 0,
            _ => shot.get(i as usize),
        }
    };
    Ok((0..=upto as isize)
        .map(|i| RationalVec3::from_ints(a(i - 2), a(i - 1), a(i)))
        .collect())
}

/// First place where `u_{i+1} = A u_i + v_i` or its two-step form fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecurrenceMismatch {
    pub index: usize,
    pub two_step: bool,
    pub expected: RationalVec3,
    pub actual: RationalVec3,
}

impl fmt::Display for RecurrenceMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let step = if self.two_step { 2 } else { 1 };
        write!(
            f,
            "u_{} expected {:?} from u_{}, got {:?}",
            self.index + step,
            self.expected,
            self.index,
            self.actual
        )
    }
}

impl std::error::Error for RecurrenceMismatch {}

/// Checks `u_{i+1} = A u_i + v_i` and `u_{i+2} = A² u_i + A v_i + v_{i+1}`
/// exactly, with `v_i = (0, 0, σ_i / 2)`.
pub fn verify_recurrence(
    us: &[RationalVec3],
    fix: &Configuration,
) -> std::result::Result<(), Box<RecurrenceMismatch>> {
    let a = super::jordan::recurrence_matrix();
    let a2 = &a * &a;
    let v = |i: usize| RationalVec3::new(int(0), int(0), frac(fix.get(i), 2));
    for i in 0..us.len().saturating_sub(1) {
        let expected = &(&a * &us[i]) + &v(i);
        if expected != us[i + 1] {
            return Err(Box::new(RecurrenceMismatch {
                index: i,
                two_step: false,
                expected,
                actual: us[i + 1].clone(),
            }));
        }
        if i + 2 < us.len() {
            let expected = &(&(&a2 * &us[i]) + &(&a * &v(i))) + &v(i + 1);
            if expected != us[i + 2] {
                return Err(Box::new(RecurrenceMismatch {
                    index: i,
                    two_step: true,
                    expected,
                    actual: us[i + 2].clone(),
                }));
            }
        }
    }
    Ok(())
}

/// `p(x)` as a multiple of `e'_3`.
pub fn project_e3(x: &RationalVec3, jd: &JordanData) -> Rational {
    jd.project_e3(x)
}

/// Largest `j` such that `fix` starts with `(2, 0)^j`.
pub fn prefix_20_length(fix: &Configuration) -> usize {
    let mut j = 0;
    while fix.get(2 * j) == 2 && fix.get(2 * j + 1) == 0 {
        j += 1;
    }
    j
}

/// Exact quantities of the projection law for a `(2, 0)^j` prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectionLaw {
    pub j: usize,
    pub n_grains: u64,
    pub a0: i64,
    /// `x_j` with `p(u_{2j} - v) = x_j e'_3`.
    pub x_j: Rational,
    /// Coordinate of `p(u_0 - v)`.
    pub origin: Rational,
}

impl ProjectionLaw {
    /// `(N + a_0) / 9 + 2 / 27`, the coordinate of `p(u_0 - v)` in closed form.
    pub fn closed_form(n_grains: u64, a0: i64) -> Rational {
        frac(n_grains as i64 + a0, 9) + frac(2, 27)
    }

    /// `4^j x_j`.
    pub fn scaled_x(&self) -> Rational {
        &self.x_j * Rational::from_integer(num_bigint::BigInt::from(4u8).pow(self.j as u32))
    }
}

/// Computes `x_j` for a D = 3 fixed point with a `(2, 0)^j` prefix, checking
/// the quarter contraction at every double step, `p(u_0 - v) = 4^j x_j`,
/// the closed form of `p(u_0 - v)` and `x_j > 0`.
pub fn projection_law(
    fix: &Configuration,
    shot: &ShotVector,
    n_grains: u64,
    j: usize,
) -> Result<ProjectionLaw> {
    require_d3(fix.params())?;
    let found = prefix_20_length(fix);
    if found < j {
        return Err(Error::PrefixTooShort { required: j, found });
    }
    let jd = JordanData::compute();
    let us = build_u_vectors(shot, n_grains, 2 * j, fix.params())?;
    let v = jd.shift_vector();
    let quarter = jd.contraction() * jd.contraction();
    let coord = |i: usize| jd.project_e3(&(&us[i] - &v));

    for i in 0..j {
        let next = coord(2 * i + 2);
        let scaled = &quarter * coord(2 * i);
        if next != scaled {
            return Err(Error::ProjectionLaw(format!(
                "p(u_{} - v) = {next} but p(u_{} - v) / 4 = {scaled}",
                2 * i + 2,
                2 * i
            )));
        }
    }

    let law = ProjectionLaw {
        j,
        n_grains,
        a0: shot.get(0),
        x_j: coord(2 * j),
        origin: coord(0),
    };
    if law.origin != law.scaled_x() {
        return Err(Error::ProjectionLaw(format!(
            "p(u_0 - v) = {} but 4^{j} x_j = {}",
            law.origin,
            law.scaled_x()
        )));
    }
    let closed = ProjectionLaw::closed_form(n_grains, law.a0);
    if law.origin != closed {
        return Err(Error::ProjectionLaw(format!(
            "p(u_0 - v) = {} but (N + a_0)/9 + 2/27 = {closed}",
            law.origin
        )));
    }
    if !law.x_j.is_positive() {
        return Err(Error::ProjectionLaw(format!(
            "x_{j} = {} is not positive",
            law.x_j
        )));
    }
    Ok(law)
}

/// [`projection_law`] on the final fixed point of a trace.
pub fn verify_projection_law(trace: &RunTrace, j: usize) -> Result<Rational> {
    projection_law(&trace.final_fixed_point(), &trace.shot, trace.n_grains(), j).map(|l| l.x_j)
}

/// Prefix forcing for D = 3: when an avalanche fires `2j` but not `2j - 1`,
/// the previous fixed point starts with a `(2, 0)` run tied to `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrefixForcing {
    /// Largest `j >= 1` with `2j` fired and `2j - 1` not fired.
    pub j: usize,
    /// Observed `(2, 0)` prefix length of `π(k-1)`.
    pub prefix: usize,
}

impl PrefixForcing {
    /// `(2, 0)^{j-2}` is a prefix.
    pub fn weak_holds(&self) -> bool {
        self.prefix + 2 >= self.j
    }

    /// `(2, 0)^j` is a prefix.
    pub fn strict_holds(&self) -> bool {
        self.prefix >= self.j
    }
}

pub fn prefix_forcing(av: &Avalanche, prev_fix: &Configuration) -> Option<PrefixForcing> {
    let fired = av.fired_set();
    let j = fired
        .iter()
        .filter(|&&c| c >= 2 && c % 2 == 0 && !fired.contains(&(c - 1)))
        .map(|&c| c / 2)
        .max()?;
    Some(PrefixForcing {
        j,
        prefix: prefix_20_length(prev_fix),
    })
}

/// `(D - 1) a_0 <= N`: each firing of column 0 moves `D - 1` grains off it
/// for good, and column 0 never receives grains from the right.
pub fn first_column_shot_bound(shot: &ShotVector, params: Parameters) -> bool {
    (params.d() as i64 - 1) * shot.get(0) <= shot.n_grains as i64
}

/// Zero check helper for residual vectors.
pub fn all_zero(residuals: &[i64]) -> bool {
    residuals.iter().all(Zero::is_zero)
}
