//! Global noise level from blocks that look constant.
//!
//! A block is kept when none of four rank-correlation tests between each pixel
//! and its right, lower, lower-right and lower-left neighbour rejects
//! independence. On a constant image corrupted by i.i.d. noise neighbouring
//! values are independent; edges and gradients make them correlated. The
//! scale is fitted on every kept block and the fits are averaged.

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::estimators::{estimate_joint_fast, SolverConfig};
use crate::image::ImageGrid;
use crate::sample::WeightedSample;

/// Pair classification counts behind Kendall's τ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCounts {
    pub concordant: u64,
    pub discordant: u64,
    pub tied: u64,
}

impl PairCounts {
    pub fn total(&self) -> u64 {
        self.concordant + self.discordant + self.tied
    }
}

pub fn kendall_counts(x: &[f64], y: &[f64]) -> Result<PairCounts> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    let mut counts = PairCounts {
        concordant: 0,
        discordant: 0,
        tied: 0,
    };
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let s = (x[j] - x[i]).signum() * (y[j] - y[i]).signum();
            if x[j] == x[i] || y[j] == y[i] {
                counts.tied += 1;
            } else if s > 0.0 {
                counts.concordant += 1;
            } else {
                counts.discordant += 1;
            }
        }
    }
    Ok(counts)
}

/// Kendall's τ-a: tied pairs count as neither concordant nor discordant and
/// the denominator stays `n(n−1)/2`. Fewer than two pairs-worth of data, or
/// all pairs tied, gives 0.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    let c = kendall_counts(x, y)?;
    let total = c.total();
    if total == 0 {
        return Ok(0.0);
    }
    Ok((c.concordant as f64 - c.discordant as f64) / total as f64)
}

/// `τ` standardized by its null variance `2(2n+5)/(9n(n−1))`.
pub fn kendall_z(x: &[f64], y: &[f64]) -> Result<f64> {
    let tau = kendall_tau(x, y)?;
    Ok(z_from_tau(tau, x.len()))
}

pub fn z_from_tau(tau: f64, n: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let n = n as f64;
    3.0 * (n * (n - 1.0)).sqrt() / (2.0 * (2.0 * n + 5.0)).sqrt() * tau
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionTestConfig {
    pub initial_block: usize,
    pub min_block: usize,
    /// Level of each of the four two-sided tests.
    pub alpha: f64,
    /// Stop shrinking blocks once this many are accepted.
    pub min_regions: usize,
}

impl Default for RegionTestConfig {
    fn default() -> Self {
        Self {
            initial_block: 16,
            min_block: 4,
            alpha: 0.05,
            min_regions: 5,
        }
    }
}

impl RegionTestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_block < 2 || self.initial_block < self.min_block {
            return Err(Error::InvalidConfig(format!(
                "need initial_block >= min_block >= 2, got {} and {}",
                self.initial_block, self.min_block
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha {} not in (0, 1)", self.alpha)));
        }
        if self.min_regions == 0 {
            return Err(Error::InvalidConfig("min_regions must be positive".into()));
        }
        Ok(())
    }

    /// Two-sided standard-normal critical value for `alpha`.
    pub fn critical_value(&self) -> f64 {
        Normal::standard().inverse_cdf(1.0 - 0.5 * self.alpha)
    }
}

/// Neighbour offsets `(dr, dc)`: horizontal, vertical and both diagonals.
pub const NEIGHBOR_OFFSETS: [(isize, isize); 4] = [(0, 1), (1, 0), (1, 1), (1, -1)];

/// Paired sequences `(pixel, neighbour)` over all positions of a square
/// row-major block where both lie inside it.
pub fn neighbor_pairs(block: &[f64], side: usize, offset: (isize, isize)) -> (Vec<f64>, Vec<f64>) {
    let (dr, dc) = offset;
    let s = side as isize;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for r in 0..s {
        for c in 0..s {
            let (r2, c2) = (r + dr, c + dc);
            if (0..s).contains(&r2) && (0..s).contains(&c2) {
                x.push(block[(r * s + c) as usize]);
                y.push(block[(r2 * s + c2) as usize]);
            }
        }
    }
    (x, y)
}

/// `true` when no neighbour test rejects, i.e. the block looks constant.
pub fn test_block_constant(block: &[f64], side: usize, cfg: &RegionTestConfig) -> bool {
    debug_assert_eq!(block.len(), side * side);
    let crit = cfg.critical_value();
    NEIGHBOR_OFFSETS.iter().all(|&off| {
        let (x, y) = neighbor_pairs(block, side, off);
        let z = kendall_z(&x, &y).expect("paired sequences have equal length");
        z.abs() <= crit
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantRegionReport {
    /// `(row, col)` of each accepted block's top-left corner.
    pub accepted_blocks: Vec<(usize, usize)>,
    pub block_size: usize,
    pub per_block_gamma: Vec<f64>,
    pub global_gamma: f64,
}

impl ConstantRegionReport {
    pub fn num_regions(&self) -> usize {
        self.accepted_blocks.len()
    }
}

/// Tiles the image with non-overlapping blocks, halving the side from
/// `initial_block` down to `min_block` until `min_regions` blocks pass the
/// constancy test, then averages the scale fitted on each passing block.
/// Blocks whose pixels do not admit a joint fit (fewer than three distinct
/// values) are dropped.
pub fn estimate_global_gamma(
    img: &ImageGrid,
    cfg: &RegionTestConfig,
    solver: &SolverConfig,
) -> Result<ConstantRegionReport> {
    cfg.validate()?;
    solver.validate()?;
    if img.width() < cfg.min_block || img.height() < cfg.min_block {
        return Err(Error::TooSmall {
            width: img.width(),
            height: img.height(),
            min: cfg.min_block,
        });
    }

    let mut side = cfg.initial_block;
    let mut last: Vec<((usize, usize), f64)> = Vec::new();
    loop {
        if side <= img.width() && side <= img.height() {
            let origins: Vec<(usize, usize)> = (0..img.height() / side)
                .flat_map(|br| (0..img.width() / side).map(move |bc| (br * side, bc * side)))
                .collect();
            last = origins
                .par_iter()
                .filter_map(|&(r, c)| {
                    let block = img.block(r, c, side);
                    if !test_block_constant(&block, side, cfg) {
                        return None;
                    }
                    let s = WeightedSample::from_values(&block).ok()?;
                    let fit = estimate_joint_fast(&s, solver, None).ok()?;
                    Some(((r, c), fit.params.gamma))
                })
                .collect();
            if last.len() >= cfg.min_regions {
                break;
            }
        }
        let next = side / 2;
        if next < cfg.min_block {
            break;
        }
        side = next;
    }

    if last.is_empty() {
        return Err(Error::NoConstantRegions {
            min_block: cfg.min_block,
        });
    }
    let (accepted_blocks, per_block_gamma): (Vec<_>, Vec<_>) = last.into_iter().unzip();
    let global_gamma = per_block_gamma.iter().sum::<f64>() / per_block_gamma.len() as f64;
    Ok(ConstantRegionReport {
        accepted_blocks,
        block_size: side,
        per_block_gamma,
        global_gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cauchy::{seeded_rng, CauchyParams};
    use proptest::prelude::*;
    use rand::seq::SliceRandom;

    /// Direct pair enumeration with sign products only.
    fn tau_oracle(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len();
        let mut acc = 0i64;
        for i in 0..n {
            for j in 0..n {
                if i < j {
                    let sx = (x[i] - x[j]).partial_cmp(&0.0).unwrap() as i64;
                    let sy = (y[i] - y[j]).partial_cmp(&0.0).unwrap() as i64;
                    acc += sx * sy;
                }
            }
        }
        acc as f64 / (n * (n - 1) / 2) as f64
    }

    #[test]
    fn tau_fixtures() {
        assert_eq!(kendall_tau(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(kendall_tau(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [2.0, 1.0, 4.0, 3.0];
        let t = kendall_tau(&x, &y).unwrap();
        assert!((t - tau_oracle(&x, &y)).abs() < 1e-15);
        assert!((t - 1.0 / 3.0).abs() < 1e-15);
        assert!(kendall_tau(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn z_fixtures() {
        let z = kendall_z(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!((z - 9.0 * 2f64.sqrt() / 66f64.sqrt()).abs() < 1e-14);
        assert!((z - 1.5667).abs() < 1e-4);
        let z = kendall_z(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap();
        assert!((z + 1.5667).abs() < 1e-4);
        assert_eq!(z_from_tau(0.0, 50), 0.0);
    }

    #[test]
    fn all_ties_give_zero() {
        assert_eq!(kendall_tau(&[5.0; 10], &[5.0; 10]).unwrap(), 0.0);
        let c = kendall_counts(&[5.0; 10], &[1.0; 10]).unwrap();
        assert_eq!(c.tied, 45);
    }

    #[test]
    fn critical_value_at_five_percent() {
        let c = RegionTestConfig::default().critical_value();
        assert!((c - 1.959963984540054).abs() < 1e-9);
    }

    #[test]
    fn neighbor_pair_counts() {
        let block: Vec<f64> = (0..16).map(f64::from).collect();
        let (x, y) = neighbor_pairs(&block, 4, (0, 1));
        assert_eq!(x.len(), 12);
        assert_eq!((x[0], y[0]), (0.0, 1.0));
        let (x, y) = neighbor_pairs(&block, 4, (1, -1));
        assert_eq!(x.len(), 9);
        assert_eq!((x[0], y[0]), (1.0, 4.0));
    }

    #[test]
    fn block_decisions() {
        let cfg = RegionTestConfig::default();
        assert!(test_block_constant(&[42.0; 256], 16, &cfg));
        let ramp: Vec<f64> = (0..256).map(|i| (i % 16) as f64 * 100.0).collect();
        assert!(!test_block_constant(&ramp, 16, &cfg));
    }

    #[test]
    fn constant_blocks_mostly_accepted() {
        let cfg = RegionTestConfig::default();
        let noise = CauchyParams::new(100.0, 5.0).unwrap();
        let mut rng = seeded_rng(31, 0);
        let trials = 1000;
        let accepted = (0..trials)
            .filter(|_| test_block_constant(&noise.sample(&mut rng, 256), 16, &cfg))
            .count();
        let rate = accepted as f64 / trials as f64;
        assert!(rate >= 1.0 - 4.0 * cfg.alpha - 0.02, "rate {rate}");
    }

    #[test]
    fn ramp_image_has_no_constant_regions() {
        let img = ImageGrid::from_fn(64, 64, |r, c| 3.0 * (r + c) as f64);
        let err = estimate_global_gamma(&img, &RegionTestConfig::default(), &SolverConfig::default());
        assert!(matches!(err, Err(Error::NoConstantRegions { min_block: 4 })));
    }

    #[test]
    fn stops_at_initial_size_when_enough_blocks() {
        let noise = CauchyParams::new(50.0, 2.0).unwrap();
        let mut rng = seeded_rng(32, 0);
        let img = ImageGrid::new(64, 64, noise.sample(&mut rng, 64 * 64)).unwrap();
        let rep = estimate_global_gamma(&img, &RegionTestConfig::default(), &SolverConfig::default()).unwrap();
        assert_eq!(rep.block_size, 16);
        assert!(rep.num_regions() >= 5);
        let mean = rep.per_block_gamma.iter().sum::<f64>() / rep.per_block_gamma.len() as f64;
        assert_eq!(mean, rep.global_gamma);
        assert!(rep.per_block_gamma.iter().all(|&g| g > 0.0));
    }

    #[test]
    fn null_distribution_of_z() {
        let mut rng = seeded_rng(33, 0);
        let n = 128;
        let x: Vec<f64> = (0..n).map(f64::from).collect();
        let mut y = x.clone();
        let reps = 2000;
        let zs: Vec<f64> = (0..reps)
            .map(|_| {
                y.shuffle(&mut rng);
                kendall_z(&x, &y).unwrap()
            })
            .collect();
        let mean = zs.iter().sum::<f64>() / reps as f64;
        let var = zs.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        assert!(mean.abs() < 0.1, "mean {mean}");
        assert!((var - 1.0).abs() < 0.15, "var {var}");
    }

    proptest! {
        #[test]
        fn tau_properties(
            pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 2..40),
        ) {
            let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let n = x.len() as u64;
            let c = kendall_counts(&x, &y).unwrap();
            prop_assert_eq!(c.total(), n * (n - 1) / 2);
            let t = kendall_tau(&x, &y).unwrap();
            prop_assert!((-1.0..=1.0).contains(&t));
            prop_assert!((t - tau_oracle(&x, &y)).abs() < 1e-12);
            let neg_y: Vec<f64> = y.iter().map(|v| -v).collect();
            prop_assert!((kendall_tau(&x, &neg_y).unwrap() + t).abs() < 1e-12);
            let mono: Vec<f64> = x.iter().map(|v| v.powi(3) + 2.0 * v).collect();
            prop_assert_eq!(kendall_tau(&mono, &y).unwrap(), t);
        }
    }
}
