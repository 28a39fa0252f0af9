//! Verification suites run by `kspm verify`. Each suite returns per-check
//! pass counts; a suite passes when every check passes on every case.

use std::fmt::Write as _;

use clap::ValueEnum;
use kspm::analysis::{
    self, build_u_vectors, first_column_shot_bound, fit_log4_envelope, prefix_20_length,
    prefix_forcing, projection_law, shot_identity_residual, verify_recurrence, GrowthReport,
};
use kspm::pseudolocal::verify_avalanche_structure;
use kspm::strategies::{check_diamond, run_process, stabilize_leftmost, stabilize_random};
use kspm::{par, Configuration, Parameters, Process, RunTrace, ShotVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    SingleFire,
    Diamond,
    Convergence,
    Peaks,
    ShotVector,
    Recurrence,
    Projection,
    Growth,
    All,
}

impl Suite {
    pub const EACH: [Suite; 8] = [
        Suite::SingleFire,
        Suite::Diamond,
        Suite::Convergence,
        Suite::Peaks,
        Suite::ShotVector,
        Suite::Recurrence,
        Suite::Projection,
        Suite::Growth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::SingleFire => "single-fire",
            Suite::Diamond => "diamond",
            Suite::Convergence => "convergence",
            Suite::Peaks => "peaks",
            Suite::ShotVector => "shot-vector",
            Suite::Recurrence => "recurrence",
            Suite::Projection => "projection",
            Suite::Growth => "growth",
            Suite::All => "all",
        }
    }

    fn needs_d3(self) -> bool {
        matches!(self, Suite::Recurrence | Suite::Projection | Suite::Growth)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub grains: u64,
    pub d: usize,
    /// Random stabilizations per configuration.
    pub seeds: usize,
    pub seed: u64,
    /// Random configurations for the diamond and convergence suites.
    pub configs: usize,
    pub max_len: usize,
    pub j_max: usize,
    pub cap: u64,
    /// Upper end of the range the growth envelope is fitted on.
    pub fit_upto: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            grains: 10_000,
            d: 3,
            seeds: 20,
            seed: 0,
            configs: 500,
            max_len: 50,
            j_max: 6,
            cap: 2_000_000,
            fit_upto: 1_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub passed: u64,
    pub total: u64,
    pub first_failure: Option<String>,
}

impl Check {
    pub fn tally<I>(name: &str, outcomes: I) -> Self
    where
        I: IntoIterator<Item = std::result::Result<(), String>>,
    {
        let mut check = Check {
            name: name.to_string(),
            passed: 0,
            total: 0,
            first_failure: None,
        };
        for o in outcomes {
            check.total += 1;
            match o {
                Ok(()) => check.passed += 1,
                Err(e) => {
                    check.first_failure.get_or_insert(e);
                }
            }
        }
        check
    }

    pub fn single(name: &str, outcome: std::result::Result<(), String>) -> Self {
        Check::tally(name, [outcome])
    }

    pub fn ok(&self) -> bool {
        self.passed == self.total
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub checks: Vec<Check>,
    /// Informational lines (exact values, observed counts).
    pub notes: Vec<String>,
}

impl SuiteReport {
    fn new(suite: Suite) -> Self {
        SuiteReport {
            suite: suite.name(),
            checks: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn ok(&self) -> bool {
        self.checks.iter().all(Check::ok)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let status = if c.ok() { "pass" } else { "FAIL" };
            let _ = write!(
                out,
                "{}\t{}\t{}/{}\t{status}",
                self.suite, c.name, c.passed, c.total
            );
            if let Some(f) = &c.first_failure {
                let _ = write!(out, "\tfirst failure: {f}");
            }
            out.push('\n');
        }
        for n in &self.notes {
            let _ = writeln!(out, "{}\tnote\t{n}", self.suite);
        }
        out
    }
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<Vec<SuiteReport>> {
    if suite == Suite::All {
        let mut out = Vec::new();
        for s in Suite::EACH {
            if s.needs_d3() && opts.d != 3 {
                continue;
            }
            out.extend(run_suite(s, opts)?);
        }
        return Ok(out);
    }
    let params = Parameters::new(opts.d)?;
    if suite.needs_d3() && opts.d != 3 {
        return Err(CliError::Usage(format!(
            "suite {} requires --d 3",
            suite.name()
        )));
    }
    let report = match suite {
        Suite::SingleFire => single_fire(&run_process(opts.grains, params)?),
        Suite::Diamond => diamond(opts, params),
        Suite::Convergence => convergence(opts, params),
        Suite::Peaks => structure(&run_process(opts.grains, params)?),
        Suite::ShotVector => shot_vector(opts.grains, params)?,
        Suite::Recurrence => recurrence(opts.grains, params)?,
        Suite::Projection => projection(opts.grains, params)?,
        Suite::Growth => growth(opts)?,
        Suite::All => unreachable!(),
    };
    Ok(vec![report])
}

fn prev_fix(trace: &RunTrace, k: u64) -> &Configuration {
    &trace.records[k as usize - 2].fixed_point
}

/// `π(k-1)` and `π(k)` for `k = 1..=N`.
fn with_neighbours<R, F>(trace: &RunTrace, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(u64, &Configuration, &Configuration) -> R + Sync + Send,
{
    let zero = Configuration::zero(trace.params);
    par::map_range(trace.records.len(), |i| {
        let k = i as u64 + 1;
        let prev = if k == 1 { &zero } else { prev_fix(trace, k) };
        f(k, prev, &trace.records[i].fixed_point)
    })
}

pub fn single_fire(trace: &RunTrace) -> SuiteReport {
    let outcomes = par::map(&trace.records, |rec| {
        let av = &rec.avalanche;
        if av.fired_set().len() == av.len() {
            Ok(())
        } else {
            Err(format!(
                "k={}: a column fired twice in {:?}",
                av.k,
                av.strategy.as_slice()
            ))
        }
    });
    let mut r = SuiteReport::new(Suite::SingleFire);
    r.checks
        .push(Check::tally("each column fires at most once", outcomes));
    r
}

/// Uniform length in `1..=max_len`, entries uniform in `0..=3D`.
pub fn random_configuration(
    rng: &mut impl Rng,
    params: Parameters,
    max_len: usize,
) -> Configuration {
    let len = rng.random_range(1..=max_len);
    let top = 3 * params.d() as i64;
    let sigma = (0..len).map(|_| rng.random_range(0..=top)).collect();
    Configuration::from_sigma(params, sigma).expect("entries are non-negative")
}

/// Configurations and per-configuration stabilizer seeds, all drawn from
/// one stream seeded by `opts.seed`.
pub fn random_cases(opts: &VerifyOptions, params: Parameters) -> Vec<(Configuration, Vec<u64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    (0..opts.configs)
        .map(|_| {
            let cfg = random_configuration(&mut rng, params, opts.max_len);
            let seeds = (0..opts.seeds).map(|_| rng.next_u64()).collect();
            (cfg, seeds)
        })
        .collect()
}

pub fn diamond(opts: &VerifyOptions, params: Parameters) -> SuiteReport {
    let cases = random_cases(opts, params);
    let per_config = par::map(&cases, |(cfg, _)| {
        let fireable = cfg.fireable_columns();
        let mut outcomes = Vec::new();
        for (n, &i) in fireable.iter().enumerate() {
            for &j in &fireable[n + 1..] {
                outcomes.push(match check_diamond(cfg, i, j) {
                    Ok(true) => Ok(()),
                    Ok(false) => Err(format!("{cfg}: pair ({i}, {j}) does not close")),
                    Err(e) => Err(format!("{cfg}: pair ({i}, {j}): {e}")),
                });
            }
        }
        outcomes
    });
    let mut r = SuiteReport::new(Suite::Diamond);
    r.checks.push(Check::tally(
        "fireable pairs close",
        per_config.into_iter().flatten(),
    ));
    r.notes.push(format!(
        "{} configurations, seed {}",
        opts.configs, opts.seed
    ));
    r
}

pub fn convergence(opts: &VerifyOptions, params: Parameters) -> SuiteReport {
    let cases = random_cases(opts, params);
    let per_config = par::map(&cases, |(cfg, seeds)| {
        let (fix, strategy) = stabilize_leftmost(cfg);
        let counts = strategy.counts();
        seeds
            .iter()
            .map(|&s| {
                let (rfix, rstrat) = stabilize_random(cfg, s);
                let fail = |what: &str| Err(format!("{cfg} seed {s}: {what} differs"));
                [
                    if rfix == fix {
                        Ok(())
                    } else {
                        fail("fixed point")
                    },
                    if rstrat.len() == strategy.len() {
                        Ok(())
                    } else {
                        fail("strategy length")
                    },
                    if rstrat.counts() == counts {
                        Ok(())
                    } else {
                        fail("count map")
                    },
                ]
            })
            .collect::<Vec<_>>()
    });
    let mut r = SuiteReport::new(Suite::Convergence);
    for (n, name) in ["same fixed point", "same strategy length", "same count map"]
        .into_iter()
        .enumerate()
    {
        let outcomes = per_config.iter().flatten().map(|o| o[n].clone());
        r.checks.push(Check::tally(name, outcomes));
    }
    r.notes.push(format!(
        "{} configurations x {} seeds, seed {}",
        opts.configs, opts.seeds, opts.seed
    ));
    r
}

/// Local density, interval prediction and successive equality on every
/// avalanche of a trace.
pub fn structure(trace: &RunTrace) -> SuiteReport {
    let params = trace.params;
    let reports = with_neighbours(trace, |k, prev, next| {
        let av = &trace.records[k as usize - 1].avalanche;
        (
            av.interval_l.is_some(),
            verify_avalanche_structure(av, prev, next, params),
        )
    });
    let on = |field: fn(&kspm::pseudolocal::StructureReport) -> bool, intervals_only: bool| {
        reports
            .iter()
            .enumerate()
            .filter(move |(_, (has, _))| *has || !intervals_only)
            .map(move |(i, (_, rep))| {
                if field(rep) {
                    Ok(())
                } else {
                    Err(format!("k={}: {}", i + 1, rep.details))
                }
            })
    };
    let mut r = SuiteReport::new(Suite::Peaks);
    r.checks
        .push(Check::tally("single fire", on(|s| s.single_fire_ok, false)));
    r.checks.push(Check::tally(
        "local density",
        on(|s| s.local_density_ok, false),
    ));
    r.checks
        .push(Check::tally("predicted peaks", on(|s| s.peaks_match, true)));
    r.checks.push(Check::tally(
        "predicted suffix",
        on(|s| s.suffix_match, true),
    ));
    r.checks.push(Check::tally(
        "successive equality",
        on(|s| s.equality_range_ok, true),
    ));
    let intervals = reports.iter().filter(|(has, _)| *has).count();
    r.notes.push(format!(
        "D={}: {intervals} of {} avalanches have an interval",
        params.d(),
        reports.len()
    ));
    r
}

/// Streams the process, keeping `(π(k), shot after k grains)` for every `k`.
fn shot_states(n_grains: u64, params: Parameters) -> Result<Vec<(Configuration, ShotVector)>> {
    kspm::strategies::check_grain_cap(n_grains)?;
    let mut process = Process::new(params);
    let mut states = Vec::with_capacity(n_grains as usize);
    for _ in 0..n_grains {
        process.step();
        states.push((process.fixed_point().clone(), process.shot().clone()));
    }
    Ok(states)
}

pub fn shot_vector(n_grains: u64, params: Parameters) -> Result<SuiteReport> {
    let states = shot_states(n_grains, params)?;
    let results = par::map(&states, |(fix, shot)| {
        let k = shot.n_grains;
        let residual = match shot_identity_residual(fix, shot, k, params) {
            Ok(res) if analysis::all_zero(&res) => Ok(()),
            Ok(res) => Err(format!("k={k}: residual {res:?}")),
            Err(e) => Err(format!("k={k}: {e}")),
        };
        let mass = if fix.weighted_mass() == k as i64 {
            Ok(())
        } else {
            Err(format!("k={k}: weighted mass {}", fix.weighted_mass()))
        };
        let a0 = if first_column_shot_bound(shot, params) {
            Ok(())
        } else {
            Err(format!("k={k}: a_0 = {}", shot.get(0)))
        };
        let naive_a0 = shot.get(0) * params.d() as i64 <= k as i64;
        (residual, mass, a0, naive_a0)
    });
    let mut r = SuiteReport::new(Suite::ShotVector);
    r.checks.push(Check::tally(
        "shot identity",
        results.iter().map(|x| x.0.clone()),
    ));
    r.checks.push(Check::tally(
        "weighted mass = k",
        results.iter().map(|x| x.1.clone()),
    ));
    r.checks.push(Check::tally(
        "(D-1) a_0 <= k",
        results.iter().map(|x| x.2.clone()),
    ));
    let naive = results.iter().filter(|x| x.3).count();
    r.notes.push(format!(
        "a_0 <= k/D held at {naive} of {} grains",
        results.len()
    ));
    if let Some((_, shot)) = states.last() {
        r.notes.push(format!(
            "a_0 = {} after {} grains",
            shot.get(0),
            shot.n_grains
        ));
    }
    Ok(r)
}

pub fn recurrence(n_grains: u64, params: Parameters) -> Result<SuiteReport> {
    let states = shot_states(n_grains, params)?;
    let recur = par::map(&states, |(fix, shot)| {
        let k = shot.n_grains;
        let upto = fix.sigma().len().max(shot.counts.len()) + 2;
        let us = build_u_vectors(shot, k, upto, params).map_err(|e| e.to_string())?;
        verify_recurrence(&us, fix).map_err(|m| format!("k={k}: {m}"))
    });
    let zero = Configuration::zero(params);
    let forcing = par::map_range(states.len(), |i| {
        let (prev, prev_shot) = match i {
            0 => (&zero, None),
            _ => (&states[i - 1].0, Some(&states[i - 1].1)),
        };
        let shot = &states[i].1;
        // Columns fire at most once, so the fired set is where the shot grew.
        let fired: Vec<usize> = (0..shot.counts.len())
            .filter(|&c| shot.get(c) > prev_shot.map_or(0, |s| s.get(c)))
            .collect();
        let av = kspm::Avalanche::new(shot.n_grains, fired.into(), params);
        prefix_forcing(&av, prev).map(|f| (shot.n_grains, f))
    });
    let forcing: Vec<_> = forcing.into_iter().flatten().collect();

    let mut r = SuiteReport::new(Suite::Recurrence);
    r.checks.push(Check::tally("u_{i+1} = A u_i + v_i", recur));
    r.checks.push(Check::tally(
        "prefix forcing (2,0)^(j-2)",
        forcing.iter().map(|(k, f)| {
            if f.weak_holds() {
                Ok(())
            } else {
                Err(format!("k={k}: j={} prefix {}", f.j, f.prefix))
            }
        }),
    ));
    let strict = forcing.iter().filter(|(_, f)| f.strict_holds()).count();
    r.notes.push(format!(
        "prefix forcing (2,0)^j held on {strict} of {} avalanches",
        forcing.len()
    ));
    Ok(r)
}

pub fn projection(n_grains: u64, params: Parameters) -> Result<SuiteReport> {
    let states = shot_states(n_grains, params)?;
    let results = par::map(&states, |(fix, shot)| {
        let k = shot.n_grains;
        (1..=prefix_20_length(fix))
            .map(|j| {
                projection_law(fix, shot, k, j)
                    .map(|_| ())
                    .map_err(|e| format!("k={k}, j={j}: {e}"))
            })
            .collect::<Vec<_>>()
    });
    let mut r = SuiteReport::new(Suite::Projection);
    r.checks.push(Check::tally(
        "projection law",
        results.into_iter().flatten(),
    ));
    match states.last() {
        Some((fix, shot)) if prefix_20_length(fix) > 0 => {
            let j = prefix_20_length(fix);
            if let Ok(law) = projection_law(fix, shot, n_grains, j) {
                r.notes.push(format!(
                    "N={n_grains} j={j} a_0={} x_{j}={} p(u_0 - v)={}",
                    law.a0, law.x_j, law.origin
                ));
            }
        }
        _ => r.notes.push(format!("π({n_grains}) has no (2,0) prefix")),
    }
    Ok(r)
}

/// Growth checks over a finished report.
pub fn growth_checks(report: &GrowthReport, opts: &VerifyOptions) -> SuiteReport {
    let mut r = SuiteReport::new(Suite::Growth);
    r.checks.push(Check::tally(
        "N_min(j) found within cap",
        report.n_min.iter().enumerate().map(|(i, n)| match n {
            Some(_) => Ok(()),
            None => Err(format!("N_min({}) above {}", i + 1, opts.cap)),
        }),
    ));
    let found: Vec<u64> = report.n_min.iter().flatten().copied().collect();
    r.checks.push(Check::tally(
        "N_min strictly increasing",
        found.windows(2).map(|w| {
            if w[1] > w[0] {
                Ok(())
            } else {
                Err(format!("{} then {}", w[0], w[1]))
            }
        }),
    ));
    r.checks.push(Check::tally(
        "N_min ratio in [3.5, 4.5]",
        report
            .ratios
            .iter()
            .filter(|(j, _)| *j >= 2 && *j < opts.j_max)
            .map(|(j, q)| {
                let v = ratio_f64(q);
                if (3.5..=4.5).contains(&v) {
                    Ok(())
                } else {
                    Err(format!("N_min({})/N_min({j}) = {v:.3}", j + 1))
                }
            }),
    ));

    let (c1, c2) = envelope_fit(report, opts.fit_upto);
    r.checks.push(Check::tally(
        "L_max under fitted log4 envelope",
        report.l_max_steps.iter().map(|&(n, l)| {
            let bound = c1 * (n as f64).ln() / 4f64.ln() + c2;
            if l as f64 <= bound + 1e-9 {
                Ok(())
            } else {
                Err(format!("L_max({n}) = {l} > {bound:.3}"))
            }
        }),
    ));
    r.checks.push(Check::single(
        "e(N) bound and N_min order",
        report.violations.first().map_or(Ok(()), |v| Err(v.clone())),
    ));

    let n_min: Vec<String> = report
        .n_min
        .iter()
        .map(|n| n.map_or("-".into(), |n| n.to_string()))
        .collect();
    r.notes
        .push(format!("N_min(1..={}) = {}", opts.j_max, n_min.join(", ")));
    for (j, q) in &report.ratios {
        r.notes.push(format!(
            "N_min({})/N_min({j}) = {q} = {:.4}",
            j + 1,
            ratio_f64(q)
        ));
    }
    r.notes.push(format!(
        "L_max(N) <= {c1:.4} log4(N) + {c2:.4}, fitted on N <= {}, checked to N = {}",
        opts.fit_upto, report.n_grains
    ));
    r
}

fn ratio_f64(q: &analysis::Rational) -> f64 {
    use num_traits::ToPrimitive;
    q.to_f64().unwrap_or(f64::NAN)
}

/// Envelope constants fitted on `N = 1..=upto`.
pub fn envelope_fit(report: &GrowthReport, upto: u64) -> (f64, f64) {
    let pts: Vec<(u64, usize)> = (1..=upto.min(report.n_grains))
        .map(|n| (n, report.l_max_at(n)))
        .collect();
    fit_log4_envelope(&pts)
}

pub fn growth(opts: &VerifyOptions) -> Result<SuiteReport> {
    let report = analysis::run_growth(opts.grains, opts.j_max, opts.cap)?;
    Ok(growth_checks(&report, opts))
}
