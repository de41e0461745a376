//! Weighted negative log-likelihood of the Cauchy distribution and the two
//! statistics `S₀`, `S₁` that drive every fixed-point update.
//!
//! ```text
//! L(a, γ) = Σ wᵢ log((xᵢ − a)² + γ²) − log γ
//! Q(a)    = Σ wᵢ log((xᵢ − a)² + γ²)           (γ fixed)
//! S₀(a,γ) = Σ wᵢ γ² / ((xᵢ − a)² + γ²)          = ½ + (γ/2) ∂L/∂γ
//! S₁(a,γ) = Σ wᵢ γ(xᵢ − a) / ((xᵢ − a)² + γ²)   = −(γ/2) ∂L/∂a
//! ```

use crate::cauchy::CauchyParams;
use crate::sample::WeightedSample;

pub fn objective_l(s: &WeightedSample, p: &CauchyParams) -> f64 {
    objective_q(s, p.a, p.gamma) - p.gamma.ln()
}

pub fn objective_q(s: &WeightedSample, a: f64, gamma: f64) -> f64 {
    let g2 = gamma * gamma;
    s.iter()
        .map(|(x, w)| {
            let d = x - a;
            w * (d * d + g2).ln()
        })
        .sum()
}

/// `(S₀, S₁)` in a single pass over the sample.
pub fn s0_s1(s: &WeightedSample, p: &CauchyParams) -> (f64, f64) {
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    for (x, w) in s.iter() {
        // Normalized residual keeps both terms bounded.
        let t = (x - p.a) / p.gamma;
        let inv = 1.0 / (1.0 + t * t);
        s0 += w * inv;
        s1 += w * t * inv;
    }
    (s0, s1)
}

pub fn s0(s: &WeightedSample, p: &CauchyParams) -> f64 {
    s0_s1(s, p).0
}

pub fn s1(s: &WeightedSample, p: &CauchyParams) -> f64 {
    s0_s1(s, p).1
}

/// Analytic gradient `(∂L/∂a, ∂L/∂γ)`.
pub fn gradient(s: &WeightedSample, p: &CauchyParams) -> (f64, f64) {
    let g2 = p.gamma * p.gamma;
    let mut da = 0.0;
    let mut dg = 0.0;
    for (x, w) in s.iter() {
        let d = x - p.a;
        let denom = d * d + g2;
        da += w * (p.a - x) / denom;
        dg += w * p.gamma / denom;
    }
    (2.0 * da, 2.0 * dg - 1.0 / p.gamma)
}
