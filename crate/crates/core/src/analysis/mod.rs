//! Exact D = 3 analysis: shot identity, the `u`-vector recurrence, Jordan
//! data of the recurrence matrix, the projection law for `(2, 0)^j`
//! prefixes, and empirical growth laws.
//!
//! All algebra is done over arbitrary precision rationals; only the
//! envelope fit in [`growth::fit_log4_envelope`] uses floating point.

pub mod growth;
pub mod jordan;
pub mod rational;
pub mod shot;

pub use growth::{
    fit_log4_envelope, growth_report, min_grains_for_prefix, onset_column, prefix_sweep,
    run_growth, GrowthReport, GrowthSweep,
};
pub use jordan::{recurrence_matrix, JordanData};
pub use rational::{Matrix3, Poly, Rational, RationalVec3};
pub use shot::{
    all_zero, build_u_vectors, first_column_shot_bound, prefix_20_length, prefix_forcing,
    project_e3, projection_law, shot_identity_residual, verify_projection_law, verify_recurrence,
    PrefixForcing, ProjectionLaw, RecurrenceMismatch,
};
