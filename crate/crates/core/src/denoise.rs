//! Pixelwise Cauchy denoising.
//!
//! Each output pixel is an ML location estimate over a sample set: either the
//! `(2r+1)²` spatial neighbourhood (local) or the centre values of the `n`
//! most similar patches in a search window (nonlocal). The generalized
//! estimator fits location and scale jointly per pixel; the classical one
//! fixes the scale to the global noise level.

use std::ops::Range;

use rand::Rng;
use rayon::prelude::*;

use crate::cauchy::{open_uniform, CauchyParams};
use crate::error::{Error, Result};
use crate::estimators::{estimate_joint_fast, estimate_joint_gmf, estimate_location_mf, SolverConfig};
use crate::image::ImageGrid;
use crate::noise_level::{estimate_global_gamma, RegionTestConfig};
use crate::sample::{weighted_median, WeightedSample};
use crate::similarity::{find_similar, find_similar_rows, SearchParams};

/// `f = u + γη` with `η ~ C(0, 1)`, one draw per pixel in row-major order.
pub fn add_noise<R: Rng + ?Sized>(img: &ImageGrid, gamma: f64, rng: &mut R) -> ImageGrid {
    add_noise_with(img, gamma, || open_uniform(rng))
}

/// [`add_noise`] with the uniform source injected; each call of `uniform`
/// must return a value in (0, 1).
pub fn add_noise_with(img: &ImageGrid, gamma: f64, mut uniform: impl FnMut() -> f64) -> ImageGrid {
    let noise = CauchyParams { a: 0.0, gamma };
    let pixels = img.pixels().iter().map(|&v| v + noise.quantile(uniform())).collect();
    ImageGrid::new(img.width(), img.height(), pixels).expect("same dimensions as the input")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Local,
    Nonlocal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    /// Joint location and scale per pixel.
    Generalized,
    /// Location only, scale fixed to the global noise level.
    Classical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Gmf,
    Fast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseConfig {
    pub mode: Mode,
    pub estimator: Estimator,
    pub algorithm: Algorithm,
    pub local_radius: usize,
    /// `None` picks 3 for noise levels up to 7.5 and 5 above.
    pub patch_side: Option<usize>,
    pub window: usize,
    pub samples: usize,
    pub weighted: bool,
    pub kernel_h: Option<f64>,
    /// Noise level; estimated from the image when needed and absent.
    pub gamma: Option<f64>,
    pub region_test: RegionTestConfig,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Nonlocal,
            estimator: Estimator::Generalized,
            algorithm: Algorithm::Gmf,
            local_radius: 1,
            patch_side: None,
            window: 31,
            samples: 40,
            weighted: false,
            kernel_h: None,
            gamma: None,
            region_test: RegionTestConfig::default(),
        }
    }
}

impl DenoiseConfig {
    pub fn local() -> Self {
        Self {
            mode: Mode::Local,
            ..Self::default()
        }
    }

    pub fn nonlocal() -> Self {
        Self::default()
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn classical(mut self) -> Self {
        self.estimator = Estimator::Classical;
        self
    }

    pub fn weighted(mut self, h: f64) -> Self {
        self.weighted = true;
        self.kernel_h = Some(h);
        self
    }

    /// Whether a global noise level has to be known or estimated.
    pub fn needs_gamma(&self) -> bool {
        self.mode == Mode::Nonlocal || self.estimator == Estimator::Classical
    }

    pub fn effective_patch_side(&self, gamma: f64) -> usize {
        self.patch_side.unwrap_or(if gamma <= 7.5 { 3 } else { 5 })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.local_radius == 0 {
            return bad("local radius must be at least 1".into());
        }
        if let Some(s) = self.patch_side {
            if s % 2 == 0 {
                return bad(format!("patch side {s} must be odd"));
            }
        }
        if self.window.is_multiple_of(2) {
            return bad(format!("window {} must be odd", self.window));
        }
        if self.samples == 0 || self.samples > self.window * self.window {
            return bad(format!(
                "sample count {} must lie in 1..={}",
                self.samples,
                self.window * self.window
            ));
        }
        match (self.weighted, self.kernel_h) {
            (true, Some(h)) if h > 0.0 && h.is_finite() => {}
            (true, _) => return bad("weighted mode needs a positive kernel_h".into()),
            (false, Some(_)) => return bad("kernel_h given without weighted mode".into()),
            (false, None) => {}
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return bad(format!("gamma {g} must be positive"));
            }
        }
        self.region_test.validate()
    }

    fn search_params(&self, gamma: f64) -> SearchParams {
        SearchParams {
            side: self.effective_patch_side(gamma),
            window: self.window,
            k: self.samples,
            gamma,
        }
    }
}

/// Per-pixel scale estimates; `NaN` where no joint fit was possible.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl GammaMap {
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let v = self.values[row * self.width + col];
        (!v.is_nan()).then_some(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseOutput {
    pub image: ImageGrid,
    /// Present for the generalized estimator.
    pub gamma_map: Option<GammaMap>,
    /// Global noise level used for similarity or the classical estimator.
    pub gamma_used: Option<f64>,
    /// Pixels whose estimator stopped at the iteration cap.
    pub nonconverged: usize,
}

/// `(value, weight)` pairs forming the sample set of pixel `i`; weights sum
/// to one. Nonlocal mode uses `cfg.gamma` for the similarity.
pub fn select_samples(img: &ImageGrid, i: (usize, usize), cfg: &DenoiseConfig) -> Result<Vec<(f64, f64)>> {
    cfg.validate()?;
    match cfg.mode {
        Mode::Local => Ok(local_samples(img, i, cfg.local_radius)),
        Mode::Nonlocal => {
            let gamma = cfg
                .gamma
                .ok_or_else(|| Error::InvalidConfig("nonlocal sample selection needs gamma".into()))?;
            let nb = find_similar(img, i, &cfg.search_params(gamma))?;
            Ok(nonlocal_samples(img, &nb.indices, &nb.log_sims, cfg))
        }
    }
}

fn local_samples(img: &ImageGrid, i: (usize, usize), radius: usize) -> Vec<(f64, f64)> {
    let r = radius as isize;
    let w = 1.0 / ((2 * radius + 1) * (2 * radius + 1)) as f64;
    let mut out = Vec::with_capacity((2 * radius + 1).pow(2));
    for dr in -r..=r {
        for dc in -r..=r {
            out.push((img.get_mirrored(i.0 as isize + dr, i.1 as isize + dc), w));
        }
    }
    out
}

fn nonlocal_samples(
    img: &ImageGrid,
    indices: &[(usize, usize)],
    log_sims: &[f64],
    cfg: &DenoiseConfig,
) -> Vec<(f64, f64)> {
    let raw: Vec<f64> = match (cfg.weighted, cfg.kernel_h) {
        // φ_h(t) = exp(−t/h) with t = −log λ.
        (true, Some(h)) => log_sims.iter().map(|s| (s / h).exp()).collect(),
        _ => vec![1.0; indices.len()],
    };
    let total: f64 = raw.iter().sum();
    indices
        .iter()
        .zip(raw)
        // Kernel weights of very dissimilar patches can underflow to zero.
        .filter(|&(_, w)| w > 0.0)
        .map(|(&(r, c), w)| (img.get(r, c), w / total))
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct PixelEstimate {
    value: f64,
    gamma: f64,
    converged: bool,
}

fn estimate_pixel(
    samples: &[(f64, f64)],
    cfg: &DenoiseConfig,
    gamma: Option<f64>,
    solver: &SolverConfig,
) -> PixelEstimate {
    let (xs, ws): (Vec<f64>, Vec<f64>) = samples.iter().copied().unzip();
    let s = WeightedSample::from_weighted(&xs, &ws).expect("pixel samples are finite with positive weights");
    let fallback = |s: &WeightedSample| {
        let value = if s.len() == 1 {
            s.values()[0]
        } else if s.max_weight() > 0.5 {
            let k = s.weights().iter().position(|&w| w > 0.5).unwrap();
            s.values()[k]
        } else {
            weighted_median(s.values(), s.weights())
        };
        PixelEstimate {
            value,
            gamma: f64::NAN,
            converged: true,
        }
    };
    match cfg.estimator {
        Estimator::Generalized => {
            if !s.supports_joint_estimation() {
                return fallback(&s);
            }
            let fit = match cfg.algorithm {
                Algorithm::Gmf => estimate_joint_gmf(&s, solver, None),
                Algorithm::Fast => estimate_joint_fast(&s, solver, None),
            };
            match fit {
                Ok(r) => PixelEstimate {
                    value: r.params.a,
                    gamma: r.params.gamma,
                    converged: r.converged,
                },
                Err(_) => fallback(&s),
            }
        }
        Estimator::Classical => {
            if s.len() == 1 {
                return fallback(&s);
            }
            let g = gamma.expect("classical mode resolves gamma first");
            match estimate_location_mf(&s, g, solver, None) {
                Ok(r) => PixelEstimate {
                    value: r.params.a,
                    gamma: f64::NAN,
                    converged: r.converged,
                },
                Err(_) => fallback(&s),
            }
        }
    }
}

/// The noise level the configuration will use: `cfg.gamma`, or the
/// constant-region estimate when one is needed and absent.
pub fn resolve_gamma(img: &ImageGrid, cfg: &DenoiseConfig, solver: &SolverConfig) -> Result<Option<f64>> {
    match (cfg.gamma, cfg.needs_gamma()) {
        (Some(g), _) => Ok(Some(g)),
        (None, false) => Ok(None),
        (None, true) => Ok(Some(estimate_global_gamma(img, &cfg.region_test, solver)?.global_gamma)),
    }
}

const BAND_ROWS: usize = 16;

/// Estimates for the pixels of `rows` only, in row-major order, as
/// `(value, gamma)` with `gamma` NaN where no joint fit was made. `gamma` is
/// the resolved global noise level (see [`resolve_gamma`]).
pub fn denoise_rows(
    img: &ImageGrid,
    rows: Range<usize>,
    cfg: &DenoiseConfig,
    gamma: Option<f64>,
    solver: &SolverConfig,
) -> Result<Vec<(f64, f64, bool)>> {
    let sample_sets: Vec<Vec<(f64, f64)>> = match cfg.mode {
        Mode::Local => rows
            .clone()
            .flat_map(|r| (0..img.width()).map(move |c| (r, c)))
            .map(|i| local_samples(img, i, cfg.local_radius))
            .collect(),
        Mode::Nonlocal => {
            let g = gamma.ok_or_else(|| Error::InvalidConfig("nonlocal mode needs gamma".into()))?;
            find_similar_rows(img, rows, &cfg.search_params(g))?
                .iter()
                .map(|nb| nonlocal_samples(img, &nb.indices, &nb.log_sims, cfg))
                .collect()
        }
    };
    Ok(sample_sets
        .iter()
        .map(|set| {
            let e = estimate_pixel(set, cfg, gamma, solver);
            (e.value, e.gamma, e.converged)
        })
        .collect())
}

pub fn denoise(img: &ImageGrid, cfg: &DenoiseConfig, solver: &SolverConfig) -> Result<DenoiseOutput> {
    cfg.validate()?;
    solver.validate()?;
    let gamma = resolve_gamma(img, cfg, solver)?;
    if cfg.mode == Mode::Nonlocal {
        cfg.search_params(gamma.expect("resolved above")).validate()?;
    }
    let bands: Vec<Range<usize>> = (0..img.height())
        .step_by(BAND_ROWS)
        .map(|r| r..(r + BAND_ROWS).min(img.height()))
        .collect();
    let parts = bands
        .into_par_iter()
        .map(|rows| denoise_rows(img, rows, cfg, gamma, solver))
        .collect::<Result<Vec<_>>>()?;

    let mut values = Vec::with_capacity(img.len());
    let mut gammas = Vec::with_capacity(img.len());
    let mut nonconverged = 0;
    for (v, g, ok) in parts.into_iter().flatten() {
        values.push(v);
        gammas.push(g);
        nonconverged += usize::from(!ok);
    }
    let gamma_map = (cfg.estimator == Estimator::Generalized).then(|| GammaMap {
        width: img.width(),
        height: img.height(),
        values: gammas,
    });
    Ok(DenoiseOutput {
        image: ImageGrid::new(img.width(), img.height(), values)?,
        gamma_map,
        gamma_used: gamma,
        nonconverged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cauchy::seeded_rng;

    fn noisy(img: &ImageGrid, gamma: f64, seed: u64) -> ImageGrid {
        add_noise(img, gamma, &mut seeded_rng(seed, 0))
    }

    fn steps(width: usize, height: usize) -> ImageGrid {
        ImageGrid::from_fn(
            width,
            height,
            |r, c| if (r / 8 + c / 8) % 2 == 0 { 60.0 } else { 180.0 },
        )
    }

    #[test]
    fn noise_with_median_uniform_is_identity() {
        let img = steps(8, 8);
        assert_eq!(add_noise_with(&img, 5.0, || 0.5), img);
        let shifted = add_noise_with(&img, 5.0, || 0.75);
        assert!(shifted
            .pixels()
            .iter()
            .zip(img.pixels())
            .all(|(a, b)| (a - b - 5.0).abs() < 1e-12));
    }

    #[test]
    fn noise_is_reproducible_and_centred() {
        let img = ImageGrid::filled(256, 256, 100.0);
        let a = noisy(&img, 5.0, 1);
        assert_eq!(a, noisy(&img, 5.0, 1));
        let mut v = a.into_pixels();
        v.sort_by(f64::total_cmp);
        let med = 0.5 * (v[v.len() / 2 - 1] + v[v.len() / 2]);
        assert!((med - 100.0).abs() < 0.5, "{med}");
    }

    #[test]
    fn local_samples_interior() {
        let img = steps(10, 10);
        let s = select_samples(&img, (4, 4), &DenoiseConfig::local()).unwrap();
        assert_eq!(s.len(), 9);
        assert!(s.iter().all(|&(_, w)| w == 1.0 / 9.0));
    }

    #[test]
    fn weighted_samples() {
        let img = ImageGrid::filled(12, 12, 3.0);
        let cfg = DenoiseConfig::nonlocal().with_gamma(2.0).weighted(0.7);
        let cfg = DenoiseConfig {
            window: 7,
            samples: 10,
            ..cfg
        };
        let s = select_samples(&img, (5, 5), &cfg).unwrap();
        assert_eq!(s.len(), 10);
        assert!(s.iter().all(|&(_, w)| (w - 0.1).abs() < 1e-15));

        let h = 1.7;
        let cfg = DenoiseConfig {
            window: 7,
            samples: 2,
            ..DenoiseConfig::nonlocal().weighted(h)
        };
        let w = nonlocal_samples(&img, &[(0, 0), (0, 1)], &[0.0, -h], &cfg);
        assert!((w[0].1 / w[1].1 - std::f64::consts::E).abs() < 1e-12);
    }

    #[test]
    fn nonlocal_requires_gamma_for_selection() {
        let img = steps(10, 10);
        assert!(select_samples(&img, (1, 1), &DenoiseConfig::nonlocal()).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(DenoiseConfig {
            window: 30,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(DenoiseConfig {
            weighted: true,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(DenoiseConfig {
            samples: 10,
            window: 3,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert_eq!(DenoiseConfig::default().effective_patch_side(5.0), 3);
        assert_eq!(DenoiseConfig::default().effective_patch_side(10.0), 5);
    }

    #[test]
    fn noiseless_constant_image_is_returned_exactly() {
        let img = ImageGrid::filled(20, 20, 77.0);
        for cfg in [
            DenoiseConfig::local(),
            DenoiseConfig::nonlocal().with_gamma(5.0),
            DenoiseConfig::local().classical().with_gamma(5.0),
            DenoiseConfig::nonlocal().with_gamma(5.0).weighted(3.0),
        ] {
            let out = denoise(&img, &cfg, &SolverConfig::default()).unwrap();
            assert_eq!(out.image, img);
            if let Some(map) = out.gamma_map {
                assert!(map.values.iter().all(|g| g.is_nan()));
            }
        }
    }

    #[test]
    fn fallbacks() {
        let cfg = DenoiseConfig::local();
        let solver = SolverConfig::default();
        let heavy = [(1.0, 0.6), (2.0, 0.2), (9.0, 0.2)];
        assert_eq!(estimate_pixel(&heavy, &cfg, None, &solver).value, 1.0);
        let pair = [(1.0, 0.5), (3.0, 0.5)];
        let e = estimate_pixel(&pair, &cfg, None, &solver);
        assert_eq!(e.value, 2.0);
        assert!(e.gamma.is_nan());
    }

    #[test]
    fn denoising_reduces_error() {
        let clean = steps(48, 48);
        let img = noisy(&clean, 5.0, 2);
        let mse = |x: &ImageGrid| {
            x.pixels()
                .iter()
                .zip(clean.pixels())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                / x.len() as f64
        };
        let solver = SolverConfig::default();
        for cfg in [
            DenoiseConfig::local(),
            DenoiseConfig::nonlocal().with_gamma(5.0),
            DenoiseConfig {
                algorithm: Algorithm::Fast,
                ..DenoiseConfig::nonlocal()
            },
            DenoiseConfig::nonlocal().classical().with_gamma(5.0),
        ] {
            let out = denoise(&img, &cfg, &solver).unwrap();
            assert!(mse(&out.image) < 0.05 * mse(&img), "{cfg:?}");
            assert_eq!(out.gamma_map.is_some(), cfg.estimator == Estimator::Generalized);
        }
    }

    #[test]
    fn rows_stitch_to_full_output() {
        let img = noisy(&steps(24, 40), 5.0, 3);
        let cfg = DenoiseConfig {
            window: 11,
            ..DenoiseConfig::nonlocal().with_gamma(5.0)
        };
        let solver = SolverConfig::default();
        let full = denoise(&img, &cfg, &solver).unwrap();
        let mut stitched = denoise_rows(&img, 0..13, &cfg, Some(5.0), &solver).unwrap();
        stitched.extend(denoise_rows(&img, 13..40, &cfg, Some(5.0), &solver).unwrap());
        let values: Vec<f64> = stitched.iter().map(|t| t.0).collect();
        assert_eq!(values.as_slice(), full.image.pixels());
    }

    #[test]
    fn shift_equivariance() {
        // Dyadic values keep every difference exact after the shift.
        let base = noisy(&steps(24, 24), 5.0, 4).map(|v| (v * 16.0).round() / 16.0);
        let beta = 64.0;
        let shifted = base.map(|v| v + beta);
        let solver = SolverConfig::with_tolerance(1e-12);
        for cfg in [
            DenoiseConfig::local(),
            DenoiseConfig {
                window: 9,
                ..DenoiseConfig::nonlocal().with_gamma(5.0)
            },
        ] {
            let a = denoise(&base, &cfg, &solver).unwrap();
            let b = denoise(&shifted, &cfg, &solver).unwrap();
            for (x, y) in a.image.pixels().iter().zip(b.image.pixels()) {
                assert!((y - x - beta).abs() < 1e-6, "{x} {y}");
            }
        }
    }

    #[test]
    fn gamma_map_higher_on_edges() {
        let clean = ImageGrid::from_fn(32, 32, |_, c| if c < 16 { 50.0 } else { 200.0 });
        let img = noisy(&clean, 3.0, 5);
        let out = denoise(&img, &DenoiseConfig::local(), &SolverConfig::default()).unwrap();
        let map = out.gamma_map.unwrap();
        let map = &map;
        let mean = |cols: &[usize]| {
            let v: Vec<f64> = (0..32)
                .flat_map(|r| cols.iter().filter_map(move |&c| map.get(r, c)))
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!(mean(&[15, 16]) > mean(&[4, 5, 26, 27]));
    }

    #[test]
    fn auto_gamma_is_resolved() {
        let img = noisy(&ImageGrid::filled(64, 64, 120.0), 5.0, 6);
        let cfg = DenoiseConfig {
            window: 9,
            ..DenoiseConfig::nonlocal()
        };
        let out = denoise(&img, &cfg, &SolverConfig::default()).unwrap();
        let g = out.gamma_used.unwrap();
        assert!((g - 5.0).abs() < 1.0, "{g}");
        assert_eq!(
            resolve_gamma(&img, &DenoiseConfig::local(), &SolverConfig::default()).unwrap(),
            None
        );
    }
}
