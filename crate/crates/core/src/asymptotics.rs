//! Population counterparts of `S₀`, `S₁` and the mean-field recursion they
//! induce.
//!
//! For `X ~ C(a, γ)` the transformed variables `Y = 1/(1+X²)` and
//! `Z = X/(1+X²)` have closed-form means. Both closed forms share the factor
//! `a² + (γ−1)²` in numerator and denominator; it is cancelled here, which
//! keeps the evaluation stable near `(a, γ) = (0, 1)` where the uncancelled
//! quotient is `0/0`.

use crate::cauchy::CauchyParams;

/// Below this `|a|` the `a = 0` branch is used.
const BRANCH_EPS: f64 = 1e-10;

/// `E[1/(1+X²)]` for `X ~ C(a, γ)`.
pub fn expected_y(p: &CauchyParams) -> f64 {
    let g1 = 1.0 + p.gamma;
    if p.a.abs() > BRANCH_EPS {
        g1 / (p.a * p.a + g1 * g1)
    } else {
        1.0 / g1
    }
}

/// `E[X/(1+X²)]` for `X ~ C(a, γ)`.
pub fn expected_z(p: &CauchyParams) -> f64 {
    if p.a.abs() > BRANCH_EPS {
        let g1 = 1.0 + p.gamma;
        p.a / (p.a * p.a + g1 * g1)
    } else {
        0.0
    }
}

/// Expectations `(m₀, m₁)` of `S₀(a_r, γ_r)` and `S₁(a_r, γ_r)` when the
/// data follow `true_p`.
pub fn m0_m1(true_p: &CauchyParams, iter_p: &CauchyParams) -> (f64, f64) {
    let d = true_p.a - iter_p.a;
    let g = true_p.gamma + iter_p.gamma;
    let denom = d * d + g * g;
    (iter_p.gamma * g / denom, iter_p.gamma * d / denom)
}

/// One point of the idealized iteration, where `S₀`, `S₁` are replaced by
/// their expectations under `true_params`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdealizedState {
    pub a_tilde: f64,
    pub gamma_tilde: f64,
    pub true_params: CauchyParams,
}

impl IdealizedState {
    pub fn new(a_tilde: f64, gamma_tilde: f64, true_params: CauchyParams) -> Self {
        debug_assert!(gamma_tilde > 0.0);
        Self {
            a_tilde,
            gamma_tilde,
            true_params,
        }
    }

    /// Linear rate `max{½, γ/(γ + γ̃)}` guaranteed from this state onwards.
    pub fn rate(&self) -> f64 {
        let g = self.true_params.gamma;
        (g / (g + self.gamma_tilde)).max(0.5)
    }
}

pub fn idealized_step(state: &IdealizedState) -> IdealizedState {
    let CauchyParams { a, gamma } = state.true_params;
    let (at, gt) = (state.a_tilde, state.gamma_tilde);
    let d = a - at;
    let gamma_sq = gt * (gamma + d * d / (gamma + gt));
    IdealizedState {
        a_tilde: at + gt * d / (gamma + gt),
        gamma_tilde: gamma_sq.sqrt(),
        true_params: state.true_params,
    }
}

/// The start followed by `steps` iterates.
pub fn idealized_trace(start: &IdealizedState, steps: usize) -> Vec<IdealizedState> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(*start);
    for _ in 0..steps {
        let next = idealized_step(out.last().unwrap());
        out.push(next);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cauchy::seeded_rng;
    use rand::Rng;
    use std::f64::consts::PI;

    fn p(a: f64, g: f64) -> CauchyParams {
        CauchyParams::new(a, g).unwrap()
    }

    /// `E[f(X)]` via `x = a + γ tan θ`, which maps the density to the
    /// uniform measure on `(−π/2, π/2)`; adaptive Simpson on the result.
    fn quadrature(p: &CauchyParams, f: impl Fn(f64) -> f64) -> f64 {
        let h = |t: f64| f(p.a + p.gamma * t.tan()) / PI;
        #[allow(clippy::too_many_arguments)]
        fn simpson(
            h: &dyn Fn(f64) -> f64,
            l: f64,
            r: f64,
            fl: f64,
            fm: f64,
            fr: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (l + r);
            let (lm, rm) = (0.5 * (l + m), 0.5 * (m + r));
            let (flm, frm) = (h(lm), h(rm));
            let left = (m - l) / 6.0 * (fl + 4.0 * flm + fm);
            let right = (r - m) / 6.0 * (fm + 4.0 * frm + fr);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            simpson(h, l, m, fl, flm, fm, left, tol / 2.0, depth - 1)
                + simpson(h, m, r, fm, frm, fr, right, tol / 2.0, depth - 1)
        }
        // The integrand vanishes at ±π/2 (f bounded, tan → ±∞ gives f → 0).
        let (l, r) = (-PI / 2.0, PI / 2.0);
        let (fl, fr) = (0.0, 0.0);
        let fm = h(0.0);
        let whole = (r - l) / 6.0 * (fl + 4.0 * fm + fr);
        simpson(&h, l, r, fl, fm, fr, whole, 1e-13, 50)
    }

    fn y_of(x: f64) -> f64 {
        1.0 / (1.0 + x * x)
    }

    fn z_of(x: f64) -> f64 {
        x / (1.0 + x * x)
    }

    #[test]
    fn expected_y_fixtures() {
        assert_eq!(expected_y(&p(0.0, 1.0)), 0.5);
        assert_eq!(expected_y(&p(0.0, 3.0)), 0.25);
        let q = quadrature(&p(2.0, 1.0), y_of);
        assert!((expected_y(&p(2.0, 1.0)) - q).abs() < 1e-8, "{q}");
    }

    #[test]
    fn expected_z_fixtures() {
        assert_eq!(expected_z(&p(0.0, 1.0)), 0.0);
        assert_eq!(expected_z(&p(0.0, 4.0)), 0.0);
        let q = quadrature(&p(1.0, 2.0), z_of);
        assert!((expected_z(&p(1.0, 2.0)) - q).abs() < 1e-8, "{q}");
    }

    #[test]
    fn closed_forms_match_unreduced_expressions() {
        // The textbook quotients, evaluated away from their 0/0 point.
        let mut rng = seeded_rng(21, 0);
        for _ in 0..200 {
            let a: f64 = rng.random_range(-5.0..5.0);
            let g: f64 = rng.random_range(0.05..5.0);
            if a.abs() < 0.1 {
                continue;
            }
            let den = (a * a + g * g + 1.0).powi(2) - 4.0 * g * g;
            let y = (g * (a * a + g * g - 1.0) + a * a - g * g + 1.0) / den;
            let z = a * (a * a + g * g + 1.0 - 2.0 * g) / den;
            assert!((expected_y(&p(a, g)) - y).abs() < 1e-12);
            assert!((expected_z(&p(a, g)) - z).abs() < 1e-12);
        }
    }

    #[test]
    fn continuous_across_branch() {
        for g in [0.3, 1.0, 1.0 + 1e-9, 2.5] {
            for a in [1e-8, -1e-8] {
                assert!((expected_y(&p(a, g)) - expected_y(&p(0.0, g))).abs() < 1e-6);
                assert!((expected_z(&p(a, g)) - expected_z(&p(0.0, g))).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn m_fixtures() {
        let t = p(0.0, 1.0);
        assert_eq!(m0_m1(&t, &t), (0.5, 0.0));
        let (m0, m1) = m0_m1(&t, &p(0.0, 3.0));
        assert!((m0 - 0.75).abs() < 1e-15);
        assert_eq!(m1, 0.0);
    }

    #[test]
    fn m_equals_lemma_under_rescaling() {
        let mut rng = seeded_rng(22, 0);
        for _ in 0..100 {
            let t = p(rng.random_range(-5.0..5.0), rng.random_range(0.1..5.0));
            let it = p(rng.random_range(-5.0..5.0), rng.random_range(0.1..5.0));
            let scaled = p((t.a - it.a) / it.gamma, t.gamma / it.gamma);
            let (m0, m1) = m0_m1(&t, &it);
            assert!((m0 - expected_y(&scaled)).abs() < 1e-12);
            assert!((m1 - expected_z(&scaled)).abs() < 1e-12);
            assert!(m0 > 0.0 && m0 <= 1.0 && m1.abs() <= 0.5);
        }
    }

    #[test]
    fn idealized_fixtures() {
        let s = IdealizedState::new(0.0, 4.0, p(0.0, 1.0));
        let next = idealized_step(&s);
        assert_eq!(next.a_tilde, 0.0);
        assert!((next.gamma_tilde - 2.0).abs() < 1e-15);

        let truth = p(3.0, 2.0);
        let below = idealized_step(&IdealizedState::new(1.0, 0.5, truth));
        assert!(below.a_tilde > 1.0);
        let above = idealized_step(&IdealizedState::new(5.0, 0.5, truth));
        assert!(above.a_tilde < 5.0);

        let fixed = idealized_step(&IdealizedState::new(3.0, 2.0, truth));
        assert_eq!((fixed.a_tilde, fixed.gamma_tilde), (3.0, 2.0));
    }

    #[test]
    fn idealized_rate_bounds() {
        let mut rng = seeded_rng(23, 0);
        for _ in 0..100 {
            let truth = p(rng.random_range(-10.0..10.0), rng.random_range(0.1..10.0));
            let start = IdealizedState::new(rng.random_range(-20.0..20.0), rng.random_range(0.01..20.0), truth);
            let q = start.rate();
            let da0 = (start.a_tilde - truth.a).abs();
            let dg0 = (start.gamma_tilde.powi(2) - truth.gamma.powi(2)).abs();
            let trace = idealized_trace(&start, 50);
            for (r, st) in trace.iter().enumerate() {
                let qr = q.powi(r as i32);
                assert!((st.a_tilde - truth.a).abs() <= qr * da0 * (1.0 + 1e-12) + 1e-14);
                if r > 0 {
                    let tail = q.powi(r as i32 - 1) * (1.0 - qr) / (1.0 - q) * da0 * da0;
                    let err = (st.gamma_tilde.powi(2) - truth.gamma.powi(2)).abs();
                    assert!(err <= (qr * dg0 + tail) * (1.0 + 1e-9) + 1e-12, "r={r}");
                }
                let prev = trace[r.saturating_sub(1)];
                assert!(st.gamma_tilde.powi(2) >= prev.gamma_tilde.powi(2).min(truth.gamma.powi(2)) * (1.0 - 1e-12));
            }
        }
    }
}
