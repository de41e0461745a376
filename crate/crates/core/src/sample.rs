use crate::error::{Error, Result};

/// Relative tolerance below which two values are treated as one sample.
pub const DEDUP_TOLERANCE: f64 = 1e-12;

/// Strictly increasing sample values with positive weights summing to one.
///
/// Raw data may be unsorted and contain repeats; repeats are merged and
/// their weights added, so the estimators can assume `x₁ < … < x_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample {
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedSample {
    /// Uniformly weighted sample.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        let weights = vec![1.0; values.len()];
        Self::from_weighted(values, &weights)
    }

    /// Weighted sample; weights are normalized to sum to one.
    pub fn from_weighted(values: &[f64], weights: &[f64]) -> Result<Self> {
        if values.len() != weights.len() {
            return Err(Error::LengthMismatch(values.len(), weights.len()));
        }
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSample);
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::PreconditionViolated(
                "weights must be positive and finite".into(),
            ));
        }

        let mut pairs: Vec<(f64, f64)> = values.iter().copied().zip(weights.iter().copied()).collect();
        pairs.sort_by(|l, r| l.0.total_cmp(&r.0));

        let mut xs: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut ws: Vec<f64> = Vec::with_capacity(pairs.len());
        for (x, w) in pairs {
            match xs.last() {
                Some(&prev) if x - prev <= DEDUP_TOLERANCE * prev.abs().max(1.0) => {
                    *ws.last_mut().unwrap() += w;
                }
                _ => {
                    xs.push(x);
                    ws.push(w);
                }
            }
        }

        let total: f64 = ws.iter().sum();
        ws.iter_mut().for_each(|w| *w /= total);
        Ok(Self {
            values: xs,
            weights: ws,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of distinct values.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// `x_n − x₁`.
    pub fn range(&self) -> f64 {
        self.max() - self.min()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest gap between consecutive values; `None` for a single value.
    pub fn min_spacing(&self) -> Option<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).min_by(f64::total_cmp)
    }

    /// Whether `x₁ < a < x_n`.
    pub fn contains_strictly(&self, a: f64) -> bool {
        a > self.min() && a < self.max()
    }

    /// `n ≥ 3` and every weight below one half: the conditions under which
    /// the joint likelihood has a unique critical point.
    pub fn supports_joint_estimation(&self) -> bool {
        self.len() >= 3 && self.max_weight() < 0.5
    }

    /// Bracket for the scale root at fixed location, when it exists.
    pub fn scale_guard(&self) -> Option<ScaleEstimationGuard> {
        if !self.supports_joint_estimation() {
            return None;
        }
        let w_max = self.max_weight();
        let epsilon = (0.5 - w_max).sqrt();
        let d = self.min_spacing()?;
        Some(ScaleEstimationGuard {
            w_max,
            epsilon,
            d,
            lower: d * epsilon,
            upper: self.range(),
        })
    }
}

/// The interval `(d·ε, x_n − x₁)` containing the unique minimizer of
/// `L(a, ·)` for any fixed `a ∈ (x₁, x_n)`, where `d` is the minimal
/// spacing and `ε = √(½ − w_max)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleEstimationGuard {
    pub w_max: f64,
    pub epsilon: f64,
    pub d: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Weighted median: the first value whose cumulative weight exceeds ½.
/// When the cumulative weight hits ½ exactly, the midpoint with the next
/// value is returned, which reproduces the ordinary median for equal weights.
pub fn weighted_median(sorted_values: &[f64], weights: &[f64]) -> f64 {
    debug_assert_eq!(sorted_values.len(), weights.len());
    let total: f64 = weights.iter().sum();
    let half = 0.5 * total;
    let tol = 1e-12 * total;
    let mut cumulative = 0.0;
    for (k, (&x, &w)) in sorted_values.iter().zip(weights).enumerate() {
        cumulative += w;
        if (cumulative - half).abs() <= tol && k + 1 < sorted_values.len() {
            return 0.5 * (x + sorted_values[k + 1]);
        }
        if cumulative > half {
            return x;
        }
    }
    sorted_values[sorted_values.len() - 1]
}
