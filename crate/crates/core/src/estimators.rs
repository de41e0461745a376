//! Fixed-point solvers for Cauchy maximum-likelihood estimation.
//!
//! | solver                     | estimates | update                                             |
//! |----------------------------|-----------|----------------------------------------------------|
//! | [`estimate_joint_gmf`]     | `a`, `γ`  | `a += γ S₁/S₀`, `γ² ← γ² (1 − S₀)/S₀`              |
//! | [`estimate_location_mf`]   | `a`       | `a += γ S₁/S₀` with `γ` fixed                      |
//! | [`estimate_scale`]         | `γ`       | `γ² ← γ² (1 − S₀)/S₀` with `a` fixed               |
//! | [`estimate_joint_fast`]    | `a`, `γ`  | `a += γ S₁/(S₀²+S₁²)`, `γ ← γ (S₀/(S₀²+S₁²) − 1)`  |
//!
//! All solvers stop once `‖p_{r+1} − p_r‖ / ‖p_r‖` drops below the relative
//! tolerance, where `p = (a, γ)` includes a frozen parameter when only one
//! is estimated.

use crate::cauchy::CauchyParams;
use crate::error::{Error, Result};
use crate::likelihood::{objective_l, objective_q, s0_s1};
use crate::sample::{weighted_median, WeightedSample};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub rel_tolerance: f64,
    pub max_iterations: usize,
    /// Keep every iterate (starting point included) in [`EstimateResult::trace`].
    pub record_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rel_tolerance: 1e-6,
            max_iterations: 1000,
            record_trace: false,
        }
    }
}

impl SolverConfig {
    pub fn with_tolerance(rel_tolerance: f64) -> Self {
        Self {
            rel_tolerance,
            ..Self::default()
        }
    }

    pub fn traced(mut self) -> Self {
        self.record_trace = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.rel_tolerance.is_nan() || self.rel_tolerance <= 0.0 || self.max_iterations == 0 {
            return Err(Error::InvalidConfig(format!(
                "tolerance {} and max_iterations {} must both be positive",
                self.rel_tolerance, self.max_iterations
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub params: CauchyParams,
    pub iterations: usize,
    pub converged: bool,
    /// `L(a, γ)` at the returned parameters.
    pub final_objective: f64,
    pub trace: Vec<CauchyParams>,
}

impl EstimateResult {
    /// Turns a run that hit the iteration cap into an error.
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::MaxIterationsExceeded {
                iterations: self.iterations,
            })
        }
    }
}

/// How [`init_location`] picks the starting location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocationInit {
    /// Weighted sample median.
    Median,
    /// The sample value minimizing `Q` for the given `γ`; ties go to the
    /// smallest value.
    ArgminQ { gamma: f64 },
}

pub fn init_location(s: &WeightedSample, mode: LocationInit) -> f64 {
    match mode {
        LocationInit::Median => weighted_median(s.values(), s.weights()),
        LocationInit::ArgminQ { gamma } => {
            let mut best = s.values()[0];
            let mut best_q = f64::INFINITY;
            for &x in s.values() {
                let q = objective_q(s, x, gamma);
                if q < best_q {
                    best_q = q;
                    best = x;
                }
            }
            best
        }
    }
}

/// Hodges–Lehmann-type scale: the (weighted) median of `|xᵢ − xⱼ| / 2` over
/// all pairs `i < j`. Consistent for `γ` because `X − X′ ~ C(0, 2γ)`.
pub fn init_scale(s: &WeightedSample) -> Result<f64> {
    if s.len() < 2 {
        return Err(Error::DegenerateSample);
    }
    let xs = s.values();
    let ws = s.weights();
    let n = xs.len();
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            pairs.push((0.5 * (xs[j] - xs[i]), ws[i] * ws[j]));
        }
    }
    pairs.sort_unstable_by(|l, r| l.0.total_cmp(&r.0));
    let (halves, weights): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok(weighted_median(&halves, &weights))
}

fn check_joint_preconditions(s: &WeightedSample) -> Result<()> {
    if s.len() == 1 {
        return Err(Error::DegenerateSample);
    }
    if s.len() < 3 {
        return Err(Error::PreconditionViolated(format!(
            "joint estimation needs at least 3 distinct values, got {}",
            s.len()
        )));
    }
    if s.max_weight() >= 0.5 {
        return Err(Error::PreconditionViolated(format!(
            "joint estimation needs every weight below 1/2, max is {}",
            s.max_weight()
        )));
    }
    Ok(())
}

fn joint_start(s: &WeightedSample, init: Option<CauchyParams>) -> Result<CauchyParams> {
    let start = match init {
        Some(p) => p,
        None => CauchyParams {
            a: init_location(s, LocationInit::Median),
            gamma: init_scale(s)?,
        },
    };
    if !(start.gamma > 0.0 && start.gamma.is_finite()) {
        return Err(Error::PreconditionViolated(format!(
            "initial scale must be positive, got {}",
            start.gamma
        )));
    }
    if !s.contains_strictly(start.a) {
        return Err(Error::PreconditionViolated(format!(
            "initial location {} outside ({}, {})",
            start.a,
            s.min(),
            s.max()
        )));
    }
    Ok(start)
}

/// Shared driver: applies `step` until the relative change is below the
/// tolerance. `step` returns `None` when the update is not representable.
fn iterate<F>(s: &WeightedSample, cfg: &SolverConfig, start: CauchyParams, mut step: F) -> EstimateResult
where
    F: FnMut(&CauchyParams) -> Option<CauchyParams>,
{
    let mut current = start;
    let mut trace = Vec::new();
    if cfg.record_trace {
        trace.push(current);
    }
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iterations {
        let Some(next) = step(&current) else { break };
        iterations += 1;
        let change = next.distance(&current) / current.norm();
        current = next;
        if cfg.record_trace {
            trace.push(current);
        }
        if change < cfg.rel_tolerance {
            converged = true;
            break;
        }
    }
    EstimateResult {
        params: current,
        iterations,
        converged,
        final_objective: objective_l(s, &current),
        trace,
    }
}

fn valid(p: CauchyParams) -> Option<CauchyParams> {
    (p.a.is_finite() && p.gamma.is_finite() && p.gamma > 0.0).then_some(p)
}

/// Joint ML estimate of `(a, γ)`: the generalized myriad filter.
///
/// Requires `n ≥ 3` distinct values and all weights below ½; then the
/// likelihood has exactly one critical point and the iteration converges to
/// it from any start. Defaults: median for `a`, [`init_scale`] for `γ`.
pub fn estimate_joint_gmf(
    s: &WeightedSample,
    cfg: &SolverConfig,
    init: Option<CauchyParams>,
) -> Result<EstimateResult> {
    cfg.validate()?;
    check_joint_preconditions(s)?;
    let start = joint_start(s, init)?;
    Ok(iterate(s, cfg, start, |p| {
        let (s0, s1) = s0_s1(s, p);
        valid(CauchyParams {
            a: p.a + p.gamma * s1 / s0,
            gamma: p.gamma * ((1.0 - s0) / s0).sqrt(),
        })
    }))
}

/// Joint ML estimate with the accelerated update. Same preconditions and
/// limit as [`estimate_joint_gmf`], typically about a third of the iterations.
pub fn estimate_joint_fast(
    s: &WeightedSample,
    cfg: &SolverConfig,
    init: Option<CauchyParams>,
) -> Result<EstimateResult> {
    cfg.validate()?;
    check_joint_preconditions(s)?;
    let start = joint_start(s, init)?;
    Ok(iterate(s, cfg, start, |p| {
        let (s0, s1) = s0_s1(s, p);
        let denom = s0 * s0 + s1 * s1;
        valid(CauchyParams {
            a: p.a + p.gamma * s1 / denom,
            gamma: p.gamma * (s0 / denom - 1.0),
        })
    }))
}

/// Location estimate for a known scale: the classical myriad filter.
///
/// Converges to a critical point of `Q`, which may be a local minimum only;
/// the default start is the sample value minimizing `Q`. A given `init`
/// must lie in `[x₁, x_n]`.
pub fn estimate_location_mf(
    s: &WeightedSample,
    gamma: f64,
    cfg: &SolverConfig,
    init: Option<f64>,
) -> Result<EstimateResult> {
    cfg.validate()?;
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::PreconditionViolated(format!(
            "scale must be positive, got {gamma}"
        )));
    }
    if s.len() == 1 {
        return Err(Error::DegenerateSample);
    }
    let a0 = match init {
        Some(a) if a >= s.min() && a <= s.max() => a,
        Some(a) => {
            return Err(Error::PreconditionViolated(format!(
                "initial location {a} outside [{}, {}]",
                s.min(),
                s.max()
            )))
        }
        None => init_location(s, LocationInit::ArgminQ { gamma }),
    };
    Ok(iterate(s, cfg, CauchyParams { a: a0, gamma }, |p| {
        let (s0, s1) = s0_s1(s, p);
        valid(CauchyParams {
            a: p.a + gamma * s1 / s0,
            gamma,
        })
    }))
}

/// Scale estimate for a known location `a ∈ (x₁, x_n)`. The iterates move
/// monotonically towards the unique root of `S₀(a, ·) = ½`.
pub fn estimate_scale(s: &WeightedSample, a: f64, cfg: &SolverConfig, init: Option<f64>) -> Result<EstimateResult> {
    cfg.validate()?;
    check_joint_preconditions(s)?;
    if !s.contains_strictly(a) {
        return Err(Error::PreconditionViolated(format!(
            "location {a} outside ({}, {})",
            s.min(),
            s.max()
        )));
    }
    let guard = s.scale_guard().expect("preconditions checked above");
    let gamma0 = match init {
        Some(g) if g > 0.0 && g < guard.upper => g,
        Some(g) => {
            return Err(Error::PreconditionViolated(format!(
                "initial scale {g} outside (0, {})",
                guard.upper
            )))
        }
        None => {
            let margin = 1e-3 * (guard.upper - guard.lower);
            init_scale(s)?.clamp(guard.lower + margin, guard.upper - margin)
        }
    };
    Ok(iterate(s, cfg, CauchyParams { a, gamma: gamma0 }, |p| {
        let (s0, _) = s0_s1(s, p);
        valid(CauchyParams {
            a,
            gamma: p.gamma * ((1.0 - s0) / s0).sqrt(),
        })
    }))
}
