//! PSNR with a fixed peak of 255 and mean SSIM.

use crate::error::{Error, Result};
use crate::image::ImageGrid;

pub const PEAK: f64 = 255.0;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport {
    /// `+∞` for identical images.
    pub psnr_db: f64,
    pub ssim: f64,
}

pub fn mse(test: &ImageGrid, reference: &ImageGrid) -> Result<f64> {
    test.same_dims(reference)?;
    let sum: f64 = test
        .pixels()
        .iter()
        .zip(reference.pixels())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / test.len() as f64)
}

/// `10 log₁₀(255² / MSE)`.
pub fn psnr(test: &ImageGrid, reference: &ImageGrid) -> Result<f64> {
    let m = mse(test, reference)?;
    Ok(if m == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (PEAK * PEAK / m).log10()
    })
}

/// Normalized 1-D Gaussian of length [`SSIM_WINDOW`].
fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let h = (SSIM_WINDOW / 2) as isize;
    let mut k = [0.0; SSIM_WINDOW];
    for (i, v) in k.iter_mut().enumerate() {
        let x = (i as isize - h) as f64;
        *v = (-x * x / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let total: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= total);
    k
}

/// Separable Gaussian filter evaluated only where the window fits.
fn filter_valid(data: &[f64], width: usize, height: usize, k: &[f64; SSIM_WINDOW]) -> (Vec<f64>, usize, usize) {
    let ow = width - SSIM_WINDOW + 1;
    let oh = height - SSIM_WINDOW + 1;
    let mut rows = vec![0.0; height * ow];
    for r in 0..height {
        let line = &data[r * width..(r + 1) * width];
        for c in 0..ow {
            rows[r * ow + c] = k.iter().zip(&line[c..c + SSIM_WINDOW]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for r in 0..oh {
        for c in 0..ow {
            out[r * ow + c] = k.iter().enumerate().map(|(i, w)| w * rows[(r + i) * ow + c]).sum();
        }
    }
    (out, ow, oh)
}

/// Mean SSIM over all positions where the 11×11 Gaussian window (σ = 1.5)
/// fits inside the image, with `K₁ = 0.01`, `K₂ = 0.03` and dynamic range 255.
pub fn ssim(test: &ImageGrid, reference: &ImageGrid) -> Result<f64> {
    test.same_dims(reference)?;
    let (w, h) = (test.width(), test.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::TooSmall {
            width: w,
            height: h,
            min: SSIM_WINDOW,
        });
    }
    let k = gaussian_kernel();
    let x = test.pixels();
    let y = reference.pixels();
    let product = |f: fn(f64, f64) -> f64| -> Vec<f64> { x.iter().zip(y).map(|(&a, &b)| f(a, b)).collect() };
    let (ux, _, _) = filter_valid(x, w, h, &k);
    let (uy, _, _) = filter_valid(y, w, h, &k);
    let (uxx, _, _) = filter_valid(&product(|a, _| a * a), w, h, &k);
    let (uyy, _, _) = filter_valid(&product(|_, b| b * b), w, h, &k);
    let (uxy, _, _) = filter_valid(&product(|a, b| a * b), w, h, &k);

    let c1 = (K1 * PEAK).powi(2);
    let c2 = (K2 * PEAK).powi(2);
    let mut total = 0.0;
    for i in 0..ux.len() {
        let (mx, my) = (ux[i], uy[i]);
        let vx = uxx[i] - mx * mx;
        let vy = uyy[i] - my * my;
        let vxy = uxy[i] - mx * my;
        total += ((2.0 * mx * my + c1) * (2.0 * vxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
    Ok(total / ux.len() as f64)
}

pub fn quality(test: &ImageGrid, reference: &ImageGrid) -> Result<QualityReport> {
    Ok(QualityReport {
        psnr_db: psnr(test, reference)?,
        ssim: ssim(test, reference)?,
    })
}
