//! Repeated joint estimation on synthetic Cauchy samples.
//!
//! Trial `k` draws its sample from `seeded_rng(seed, k)`, so every trial is
//! reproducible on its own and the study does not depend on scheduling. Both
//! joint solvers run on the same sample from the same start (median and
//! Hodges–Lehmann scale).

use rayon::prelude::*;

use crate::cauchy::{seeded_rng, CauchyParams};
use crate::error::{Error, Result};
use crate::estimators::{estimate_joint_fast, estimate_joint_gmf, SolverConfig};
use crate::sample::WeightedSample;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyConfig {
    pub truth: CauchyParams,
    /// Sample size per trial.
    pub n: usize,
    /// Number of trials.
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    pub trial_index: usize,
    /// Estimates of the generalized myriad filter.
    pub a_hat: f64,
    pub gamma_hat: f64,
    pub iterations_gmf: usize,
    pub iterations_fast: usize,
    pub converged: bool,
}

/// Sample mean and standard deviation (denominator `N − 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    pub fn of(values: impl Iterator<Item = f64> + Clone) -> Self {
        let n = values.clone().count() as f64;
        let mean = values.clone().sum::<f64>() / n;
        let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
        Self {
            mean,
            sd: (ss / (n - 1.0)).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudySummary {
    pub truth: CauchyParams,
    pub n: usize,
    pub trials: usize,
    pub iter_gmf: MeanSd,
    pub iter_fast: MeanSd,
    pub a_hat: MeanSd,
    pub gamma_hat: MeanSd,
    /// `1/N Σ (â_k − a)²`.
    pub mse_a: f64,
    pub mse_gamma: f64,
    /// Trials where either solver hit the iteration cap.
    pub nonconverged: usize,
}

impl StudySummary {
    pub fn iteration_ratio(&self) -> f64 {
        self.iter_gmf.mean / self.iter_fast.mean
    }
}

pub fn run_trial(cfg: &StudyConfig, index: usize, solver: &SolverConfig) -> Result<TrialRecord> {
    let mut rng = seeded_rng(cfg.seed, index as u64);
    let draws = cfg.truth.sample(&mut rng, cfg.n);
    let s = WeightedSample::from_values(&draws)?;
    let gmf = estimate_joint_gmf(&s, solver, None)?;
    let fast = estimate_joint_fast(&s, solver, None)?;
    Ok(TrialRecord {
        trial_index: index,
        a_hat: gmf.params.a,
        gamma_hat: gmf.params.gamma,
        iterations_gmf: gmf.iterations,
        iterations_fast: fast.iterations,
        converged: gmf.converged && fast.converged,
    })
}

pub fn run_trials(cfg: &StudyConfig, solver: &SolverConfig) -> Result<Vec<TrialRecord>> {
    if cfg.n < 3 {
        return Err(Error::InvalidConfig(format!(
            "sample size {} must be at least 3",
            cfg.n
        )));
    }
    if cfg.trials < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least 2 trials, got {}",
            cfg.trials
        )));
    }
    solver.validate()?;
    (0..cfg.trials)
        .into_par_iter()
        .map(|k| run_trial(cfg, k, solver))
        .collect()
}

/// Aggregates in trial order, so the result does not depend on how the
/// trials were scheduled.
pub fn summarize(cfg: &StudyConfig, records: &[TrialRecord]) -> StudySummary {
    let t = cfg.truth;
    let n = records.len() as f64;
    StudySummary {
        truth: t,
        n: cfg.n,
        trials: records.len(),
        iter_gmf: MeanSd::of(records.iter().map(|r| r.iterations_gmf as f64)),
        iter_fast: MeanSd::of(records.iter().map(|r| r.iterations_fast as f64)),
        a_hat: MeanSd::of(records.iter().map(|r| r.a_hat)),
        gamma_hat: MeanSd::of(records.iter().map(|r| r.gamma_hat)),
        mse_a: records.iter().map(|r| (r.a_hat - t.a).powi(2)).sum::<f64>() / n,
        mse_gamma: records.iter().map(|r| (r.gamma_hat - t.gamma).powi(2)).sum::<f64>() / n,
        nonconverged: records.iter().filter(|r| !r.converged).count(),
    }
}

pub fn run_study(cfg: &StudyConfig, solver: &SolverConfig) -> Result<(Vec<TrialRecord>, StudySummary)> {
    let records = run_trials(cfg, solver)?;
    let summary = summarize(cfg, &records);
    Ok((records, summary))
}
