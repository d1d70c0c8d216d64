//! Escape-rate sweeps, the theorem check, and random-configuration
//! ensembles.
//!
//! Two bounds frame every run. For a weight-minimizing configuration the
//! survivor fraction `I_t / n` never drops below `alpha` once `t >= n`,
//! which is checked at every step. From above, escape rates of any
//! configuration approach at most `alpha`, but only as `n -> infinity`, so
//! finite-n rates above `alpha` are reported and never treated as errors.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiment::{compute_invariant, invariant_target, Experiment, StepEvent};
use crate::graph::Graph;
use crate::harmonic::{batch_rng, batches, solve_harmonic, HarmonicProfile, DEFAULT_WALK_STEP_CAP};
use crate::mechanism::RotorMechanism;
use crate::rotor::{build_rho_min, random_config, weight_table, RhoMin, RotorConfig, WeightTable};

/// Relative tolerance on `|M_t - n h(o)| / (n h(o))`.
pub const INVARIANT_REL_TOL: f64 = 1e-8;

/// Slack on the lower bound `I_t / n >= alpha`.
pub const LOWER_BOUND_SLACK: f64 = 1e-9;

pub const DEFAULT_MAX_STEPS: u64 = 2_000_000_000;

/// Graph, mechanism and the quantities derived from them, shared read-only
/// by every experiment on that pair.
#[derive(Clone, Debug)]
pub struct RotorSetup {
    pub graph: Graph,
    pub mechanism: RotorMechanism,
    pub profile: HarmonicProfile,
    pub weights: WeightTable,
}

impl RotorSetup {
    pub fn new(graph: Graph, mechanism: RotorMechanism, tol: f64) -> Result<Self> {
        if !mechanism.is_valid_for(&graph) {
            return Err(Error::InvalidParameter(
                "mechanism is not a permutation of the graph's adjacency".into(),
            ));
        }
        let profile = solve_harmonic(&graph, tol)?;
        let weights = weight_table(&graph, &mechanism, &profile)?;
        Ok(RotorSetup {
            graph,
            mechanism,
            profile,
            weights,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.profile.alpha()
    }

    pub fn rho_min(&self) -> RhoMin {
        build_rho_min(&self.graph, &self.weights)
    }

    pub fn experiment(&self, rho: RotorConfig, n: usize) -> Result<Experiment<'_>> {
        Experiment::new(&self.graph, &self.mechanism, rho, n)
    }

    pub fn summary(&self) -> GraphSummary {
        let g = &self.graph;
        GraphSummary {
            descriptor: g.descriptor().to_string(),
            vertices: g.num_vertices(),
            edges: g.num_edges(),
            sinks: g.sinks().count(),
            origin_degree: g.degree(g.origin()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GraphSummary {
    pub descriptor: String,
    pub vertices: usize,
    pub edges: usize,
    pub sinks: usize,
    pub origin_degree: usize,
}

/// How often the invariant is recomputed during a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InvariantCheck {
    Off,
    EveryStep,
    Every(u64),
    /// Every step while `n * |V| <= 10^6`, otherwise every `n` steps.
    Auto,
}

impl InvariantCheck {
    fn period(self, n: usize, vertices: usize) -> Option<u64> {
        match self {
            InvariantCheck::Off => None,
            InvariantCheck::EveryStep => Some(1),
            InvariantCheck::Every(k) => Some(k.max(1)),
            InvariantCheck::Auto if n.saturating_mul(vertices) <= 1_000_000 => Some(1),
            InvariantCheck::Auto => Some(n as u64),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub max_steps: u64,
    pub invariant_check: InvariantCheck,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            max_steps: DEFAULT_MAX_STEPS,
            invariant_check: InvariantCheck::Auto,
        }
    }
}

/// Result of one settled experiment.
#[derive(Clone, Debug, Serialize)]
pub struct RunOutcome {
    pub n: usize,
    pub survivors: usize,
    pub rate: f64,
    pub gap: f64,
    pub steps: u64,
    pub invariant_checks: u64,
    pub max_invariant_dev: f64,
    pub max_invariant_rel_dev: f64,
    /// First `t >= n` with `I_t / n < alpha - slack`.
    pub lower_bound_violation: Option<u64>,
    #[serde(skip)]
    pub runtime: Duration,
}

impl RunOutcome {
    pub fn invariant_ok(&self) -> bool {
        self.max_invariant_rel_dev <= INVARIANT_REL_TOL
    }
}

/// Runs one experiment to settlement, tracking the invariant and the lower
/// bound. `observe` sees every step after it happens, together with the
/// invariant value when it was computed for that step.
pub fn run_experiment_with<F>(
    setup: &RotorSetup,
    rho: RotorConfig,
    n: usize,
    opts: &RunOptions,
    mut observe: F,
) -> Result<RunOutcome>
where
    F: FnMut(&Experiment<'_>, &StepEvent, Option<f64>),
{
    let started = Instant::now();
    let g = &setup.graph;
    let alpha = setup.alpha();
    let target = invariant_target(g, &setup.profile, n);
    let period = opts.invariant_check.period(n, g.num_vertices());
    let mut exp = setup.experiment(rho, n)?;

    let mut max_dev = 0.0f64;
    let mut checks = 0u64;
    let mut violation = None;
    let mut failure = None;
    let mut measure = |exp: &Experiment<'_>| -> Option<f64> {
        match compute_invariant(g, exp.state(), &setup.profile, &setup.weights) {
            Ok(m) => {
                max_dev = max_dev.max((m - target).abs());
                checks += 1;
                Some(m)
            }
            Err(e) => {
                failure.get_or_insert(e);
                None
            }
        }
    };
    if period.is_some() {
        measure(&exp);
    }
    let bound = alpha - LOWER_BOUND_SLACK;
    let run = exp.run_until_settled_with(opts.max_steps, |exp, ev| {
        let t = exp.state().t();
        let m = match period {
            Some(p) if t % p == 0 || exp.state().is_settled() => measure(exp),
            _ => None,
        };
        if violation.is_none() && t >= n as u64 && (exp.survivors() as f64 / n as f64) < bound {
            violation = Some(t);
        }
        observe(exp, ev, m);
    });
    if let Some(e) = failure {
        return Err(e);
    }
    run?;
    let survivors = exp.survivors();
    let rate = survivors as f64 / n as f64;
    Ok(RunOutcome {
        n,
        survivors,
        rate,
        gap: rate - alpha,
        steps: exp.state().t(),
        invariant_checks: checks,
        max_invariant_dev: max_dev,
        max_invariant_rel_dev: if target > 0.0 {
            max_dev / target
        } else {
            max_dev
        },
        lower_bound_violation: violation,
        runtime: started.elapsed(),
    })
}

pub fn run_experiment(
    setup: &RotorSetup,
    rho: RotorConfig,
    n: usize,
    opts: &RunOptions,
) -> Result<RunOutcome> {
    run_experiment_with(setup, rho, n, opts, |_, _, _| {})
}

#[derive(Clone, Debug, Serialize)]
pub struct EscapeReport {
    pub graph: GraphSummary,
    pub config: String,
    pub alpha: f64,
    pub green_origin: f64,
    pub harmonic_residual: f64,
    pub n_values: Vec<usize>,
    pub rates: Vec<f64>,
    pub max_invariant_dev: f64,
    pub max_invariant_rel_dev: f64,
    pub invariant_ok: bool,
    pub runs: Vec<RunOutcome>,
}

impl EscapeReport {
    pub fn gaps(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.gap).collect()
    }

    pub fn runtimes(&self) -> Vec<Duration> {
        self.runs.iter().map(|r| r.runtime).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// CSV with columns `n, rate, alpha, gap, steps, max_invariant_dev`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            n: usize,
            rate: f64,
            alpha: f64,
            gap: f64,
            steps: u64,
            max_invariant_dev: f64,
        }
        let mut w = csv::Writer::from_writer(out);
        for r in &self.runs {
            w.serialize(Row {
                n: r.n,
                rate: r.rate,
                alpha: self.alpha,
                gap: r.gap,
                steps: r.steps,
                max_invariant_dev: r.max_invariant_dev,
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Rejects empty, non-positive or non-ascending particle counts.
pub fn check_n_list(n_list: &[usize]) -> Result<()> {
    if n_list.is_empty() {
        return Err(Error::InvalidParameter("n list is empty".into()));
    }
    if n_list.contains(&0) {
        return Err(Error::InvalidParameter("n values must be positive".into()));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "n list must be strictly ascending".into(),
        ));
    }
    Ok(())
}

/// Settles one experiment per `n` (in parallel) and collects the rates.
pub fn escape_sweep(
    setup: &RotorSetup,
    rho: &RotorConfig,
    config: &str,
    n_list: &[usize],
    opts: &RunOptions,
) -> Result<EscapeReport> {
    check_n_list(n_list)?;
    let runs = n_list
        .par_iter()
        .map(|&n| run_experiment(setup, rho.clone(), n, opts))
        .collect::<Result<Vec<_>>>()?;
    EscapeReport::from_runs(setup, config, n_list, runs)
}

impl EscapeReport {
    /// Assembles a report from runs given in `n_list` order.
    pub fn from_runs(
        setup: &RotorSetup,
        config: &str,
        n_list: &[usize],
        runs: Vec<RunOutcome>,
    ) -> Result<Self> {
        if runs.len() != n_list.len() {
            return Err(Error::DimensionMismatch {
                expected: n_list.len(),
                actual: runs.len(),
            });
        }
        let max_dev = runs.iter().map(|r| r.max_invariant_dev).fold(0.0, f64::max);
        let max_rel = runs
            .iter()
            .map(|r| r.max_invariant_rel_dev)
            .fold(0.0, f64::max);
        Ok(EscapeReport {
            graph: setup.summary(),
            config: config.to_string(),
            alpha: setup.alpha(),
            green_origin: setup.profile.green(setup.graph.origin()),
            harmonic_residual: setup.profile.residual(),
            n_values: n_list.to_vec(),
            rates: runs.iter().map(|r| r.rate).collect(),
            max_invariant_dev: max_dev,
            max_invariant_rel_dev: max_rel,
            invariant_ok: max_rel <= INVARIANT_REL_TOL,
            runs,
        })
    }
}

/// Monte Carlo escape probability with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EscapeEstimate {
    pub trials: u64,
    pub escapes: u64,
    pub p: f64,
    pub stderr: f64,
}

/// Fraction of simple random walks from the origin that reach a sink
/// before returning to the origin.
pub fn srw_escape_mc(g: &Graph, trials: u64, seed: u64) -> Result<EscapeEstimate> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let o = g.origin();
    let escapes = batches(trials)
        .into_par_iter()
        .map(|(batch, count)| {
            let mut rng = batch_rng(seed, batch);
            let mut escaped = 0u64;
            for _ in 0..count {
                let mut x = o;
                let mut steps = 0u64;
                loop {
                    let nbrs = g.neighbors(x);
                    x = nbrs[rng.random_range(0..nbrs.len())];
                    steps += 1;
                    if g.is_sink(x) {
                        escaped += 1;
                        break;
                    }
                    if x == o {
                        break;
                    }
                    if steps > DEFAULT_WALK_STEP_CAP {
                        return Err(Error::AbortedMaxSteps { steps });
                    }
                }
            }
            Ok(escaped)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum::<u64>();
    let p = escapes as f64 / trials as f64;
    Ok(EscapeEstimate {
        trials,
        escapes,
        p,
        stderr: (p * (1.0 - p) / trials as f64).sqrt(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EnsembleSummary {
    pub n: usize,
    pub alpha: f64,
    pub seeds: Vec<u64>,
    pub rates: Vec<f64>,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub stderr: f64,
    pub eps: f64,
    /// Fraction of configurations whose rate is within `eps` of alpha.
    pub within_eps: f64,
    pub max_invariant_rel_dev: f64,
}

impl EnsembleSummary {
    /// Seeds whose rate exceeds `alpha + slack`.
    pub fn above(&self, slack: f64) -> Vec<(u64, f64)> {
        self.seeds
            .iter()
            .zip(&self.rates)
            .filter(|(_, &r)| r > self.alpha + slack)
            .map(|(&s, &r)| (s, r))
            .collect()
    }
}

/// Escape rates of independent uniform random configurations, one per seed.
pub fn random_ensemble(
    setup: &RotorSetup,
    seeds: &[u64],
    n: usize,
    eps: f64,
    opts: &RunOptions,
) -> Result<EnsembleSummary> {
    if seeds.is_empty() {
        return Err(Error::InvalidParameter("no seeds given".into()));
    }
    let runs = seeds
        .par_iter()
        .map(|&s| run_experiment(setup, random_config(&setup.graph, s), n, opts))
        .collect::<Result<Vec<_>>>()?;
    let rates: Vec<f64> = runs.iter().map(|r| r.rate).collect();
    let k = rates.len() as f64;
    let mean = rates.iter().sum::<f64>() / k;
    let var = if rates.len() > 1 {
        rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    let alpha = setup.alpha();
    Ok(EnsembleSummary {
        n,
        alpha,
        seeds: seeds.to_vec(),
        min: rates.iter().copied().fold(f64::INFINITY, f64::min),
        max: rates.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean,
        stderr: (var / k).sqrt(),
        eps,
        within_eps: rates.iter().filter(|r| (*r - alpha).abs() <= eps).count() as f64 / k,
        max_invariant_rel_dev: runs
            .iter()
            .map(|r| r.max_invariant_rel_dev)
            .fold(0.0, f64::max),
        rates,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremCheck {
    pub passed: bool,
    pub lower_bound_ok: bool,
    /// `(n, t)` of the first step where `I_t / n < alpha` with `t >= n`.
    pub first_violation: Option<(usize, u64)>,
    pub gaps: Vec<f64>,
    pub gap_monotone: bool,
    pub invariant_ok: bool,
    pub report: EscapeReport,
}

/// Builds the weight-minimizing configuration and checks the lower bound at
/// every step, monotone shrinking of `|rate - alpha|` along `n_list`, and
/// constancy of the invariant.
pub fn theorem_check(
    setup: &RotorSetup,
    n_list: &[usize],
    opts: &RunOptions,
) -> Result<TheoremCheck> {
    let rho = setup.rho_min().config;
    theorem_check_with(setup, &rho, "rho-min", n_list, opts)
}

/// [`theorem_check`] for an arbitrary configuration (negative controls).
pub fn theorem_check_with(
    setup: &RotorSetup,
    rho: &RotorConfig,
    config: &str,
    n_list: &[usize],
    opts: &RunOptions,
) -> Result<TheoremCheck> {
    let report = escape_sweep(setup, rho, config, n_list, opts)?;
    let first_violation = report
        .runs
        .iter()
        .find_map(|r| r.lower_bound_violation.map(|t| (r.n, t)));
    let gaps = report.gaps();
    let gap_monotone = gaps.windows(2).all(|w| w[1].abs() <= w[0].abs());
    let lower_bound_ok = first_violation.is_none();
    let invariant_ok = report.invariant_ok;
    Ok(TheoremCheck {
        passed: lower_bound_ok && gap_monotone && invariant_ok,
        lower_bound_ok,
        first_violation,
        gaps,
        gap_monotone,
        invariant_ok,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_path, VertexId};
    use crate::harmonic::DEFAULT_TOL;

    fn p3() -> RotorSetup {
        let g = build_path(3).unwrap();
        let m = RotorMechanism::default_for(&g);
        RotorSetup::new(g, m, DEFAULT_TOL).unwrap()
    }

    #[test]
    fn p3_sweep() {
        let s = p3();
        let rho = s.rho_min().config;
        let rep = escape_sweep(&s, &rho, "rho-min", &[2, 4, 8], &RunOptions::default()).unwrap();
        assert_eq!(rep.rates, vec![0.5, 0.5, 0.5]);
        assert!(rep.invariant_ok);
    }

    #[test]
    fn p3_config_pointing_to_sink() {
        let s = p3();
        let rho = RotorConfig::new(&s.graph, vec![0, 1, 0]).unwrap();
        let rep = escape_sweep(&s, &rho, "file", &[1], &RunOptions::default()).unwrap();
        assert_eq!(rep.rates, vec![0.0]);
        let r = &rep.runs[0];
        assert_eq!(r.lower_bound_violation, Some(2));
        assert_eq!(s.graph.neighbors(VertexId(1))[1], VertexId(2));
    }

    #[test]
    fn p2_rate_one() {
        let g = build_path(2).unwrap();
        let m = RotorMechanism::default_for(&g);
        let s = RotorSetup::new(g, m, DEFAULT_TOL).unwrap();
        let rho = RotorConfig::zeros(&s.graph);
        let rep = escape_sweep(&s, &rho, "zeros", &[5], &RunOptions::default()).unwrap();
        assert_eq!(rep.rates, vec![1.0]);
        let est = srw_escape_mc(&s.graph, 1_000, 0).unwrap();
        assert_eq!(est.p, 1.0);
    }

    #[test]
    fn n_list_validation() {
        let s = p3();
        let rho = s.rho_min().config;
        let o = RunOptions::default();
        assert!(escape_sweep(&s, &rho, "", &[], &o).is_err());
        assert!(escape_sweep(&s, &rho, "", &[4, 2], &o).is_err());
        assert!(escape_sweep(&s, &rho, "", &[0, 2], &o).is_err());
    }

    #[test]
    fn theorem_on_p3() {
        let s = p3();
        let chk = theorem_check(&s, &[2, 4, 8], &RunOptions::default()).unwrap();
        assert!(chk.passed);
        assert_eq!(chk.gaps, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn ensemble_reproducible() {
        let s = p3();
        let seeds: Vec<u64> = (0..100).collect();
        let a = random_ensemble(&s, &seeds, 100, 0.01, &RunOptions::default()).unwrap();
        let b = random_ensemble(&s, &seeds, 100, 0.01, &RunOptions::default()).unwrap();
        assert_eq!(a.rates, b.rates);
        assert!(a.rates.iter().all(|r| (0.0..=1.0).contains(r)));
        assert!(random_ensemble(&s, &[], 10, 0.01, &RunOptions::default()).is_err());
    }
}
