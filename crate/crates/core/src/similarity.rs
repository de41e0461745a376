//! Likelihood-ratio similarity under Cauchy noise and top-k patch search.
//!
//! For two observations `x, y` of `C(·, γ)` the likelihood ratio of "same
//! location" against "free locations" is `λ = (((x−y)/(2γ))² + 1)⁻²`.
//! Patches are compared through the sum of per-pixel `log λ`, so larger
//! (closer to zero) means more similar.
//!
//! Candidate centres are the pixels of the `w × w` window around the
//! reference that lie inside the image; patch pixels falling outside are read
//! with mirror extension. The reference itself is a candidate. Ties are broken
//! by row-major order of the candidate centre.

use std::cmp::Ordering;
use std::ops::Range;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::ImageGrid;

/// `log λ(x, y) = −2 log(((x−y)/(2γ))² + 1)`.
#[inline]
pub fn pixel_log_similarity(x: f64, y: f64, gamma: f64) -> f64 {
    let t = (x - y) / (2.0 * gamma);
    -2.0 * (t * t).ln_1p()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub center: (usize, usize),
    pub side: usize,
    /// `side²` values, row-major.
    pub values: Vec<f64>,
}

impl Patch {
    /// Reads the `side × side` patch centred at `center` with mirror boundary.
    pub fn extract(img: &ImageGrid, center: (usize, usize), side: usize) -> Self {
        assert!(side % 2 == 1, "patch side must be odd");
        let h = (side / 2) as isize;
        let (r0, c0) = (center.0 as isize, center.1 as isize);
        let mut values = Vec::with_capacity(side * side);
        for dr in -h..=h {
            for dc in -h..=h {
                values.push(img.get_mirrored(r0 + dr, c0 + dc));
            }
        }
        Self { center, side, values }
    }
}

pub fn patch_log_similarity(p: &Patch, q: &Patch, gamma: f64) -> Result<f64> {
    if p.side != q.side {
        return Err(Error::SideMismatch(p.side, q.side));
    }
    Ok(p.values
        .iter()
        .zip(&q.values)
        .fold(0.0, |acc, (&x, &y)| acc + pixel_log_similarity(x, y, gamma)))
}

/// The `k` most similar candidates for one reference patch.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhood {
    pub center: (usize, usize),
    /// Candidate centres, most similar first.
    pub indices: Vec<(usize, usize)>,
    pub log_sims: Vec<f64>,
}

impl Neighborhood {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchParams {
    /// Odd patch side `s`.
    pub side: usize,
    /// Odd search window side `w`.
    pub window: usize,
    /// Number of candidates kept.
    pub k: usize,
    pub gamma: f64,
}

impl SearchParams {
    pub fn validate(&self) -> Result<()> {
        if self.side.is_multiple_of(2) || self.window.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "patch side {} and window {} must be odd",
                self.side, self.window
            )));
        }
        if self.k == 0 || self.k > self.window * self.window {
            return Err(Error::InvalidConfig(format!(
                "sample count {} must lie in 1..={}",
                self.k,
                self.window * self.window
            )));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!("scale {} must be positive", self.gamma)));
        }
        Ok(())
    }
}

/// Descending similarity, then ascending scan position.
fn rank(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

fn top_k(mut scored: Vec<(f64, usize)>, k: usize) -> Vec<(f64, usize)> {
    let k = k.min(scored.len());
    if k < scored.len() {
        scored.select_nth_unstable_by(k, rank);
        scored.truncate(k);
    }
    scored.sort_unstable_by(rank);
    scored
}

/// Exhaustive search around a single centre.
pub fn find_similar(img: &ImageGrid, center: (usize, usize), params: &SearchParams) -> Result<Neighborhood> {
    params.validate()?;
    let reference = Patch::extract(img, center, params.side);
    let hw = (params.window / 2) as isize;
    let (h, w) = (img.height() as isize, img.width() as isize);
    let mut scored = Vec::new();
    let mut cands = Vec::new();
    for dr in -hw..=hw {
        for dc in -hw..=hw {
            let (r, c) = (center.0 as isize + dr, center.1 as isize + dc);
            if r < 0 || c < 0 || r >= h || c >= w {
                continue;
            }
            let cand = Patch::extract(img, (r as usize, c as usize), params.side);
            scored.push((patch_log_similarity(&reference, &cand, params.gamma)?, cands.len()));
            cands.push((r as usize, c as usize));
        }
    }
    let best = top_k(scored, params.k);
    Ok(Neighborhood {
        center,
        indices: best.iter().map(|&(_, i)| cands[i]).collect(),
        log_sims: best.iter().map(|&(s, _)| s).collect(),
    })
}

/// Rows processed together by [`find_similar_all`].
const BAND_ROWS: usize = 16;

/// Mirror-padded copy of an image for branch-free patch reads.
struct Padded {
    data: Vec<f64>,
    stride: usize,
    pad: usize,
}

impl Padded {
    fn new(img: &ImageGrid, pad: usize) -> Self {
        let stride = img.width() + 2 * pad;
        let rows = img.height() + 2 * pad;
        let mut data = Vec::with_capacity(stride * rows);
        for r in 0..rows {
            for c in 0..stride {
                data.push(img.get_mirrored(r as isize - pad as isize, c as isize - pad as isize));
            }
        }
        Self { data, stride, pad }
    }

    #[inline]
    fn at(&self, r: isize, c: isize) -> f64 {
        let rr = (r + self.pad as isize) as usize;
        let cc = (c + self.pad as isize) as usize;
        self.data[rr * self.stride + cc]
    }
}

/// Same result as calling [`find_similar`] for every pixel of `rows`, but
/// shares per-pixel terms between overlapping patches: for each window
/// offset the pixel terms are computed once over the band, then summed per
/// centre in patch row-major order, which reproduces the exhaustive sums bit
/// for bit.
pub fn find_similar_rows(img: &ImageGrid, rows: Range<usize>, params: &SearchParams) -> Result<Vec<Neighborhood>> {
    params.validate()?;
    let padded = Padded::new(img, params.side / 2 + params.window / 2);
    Ok(search_band(img, &padded, rows, params))
}

/// Neighbourhoods of every pixel in row-major order, computed in parallel
/// row bands.
pub fn find_similar_all(img: &ImageGrid, params: &SearchParams) -> Result<Vec<Neighborhood>> {
    params.validate()?;
    let padded = Padded::new(img, params.side / 2 + params.window / 2);
    let bands: Vec<Range<usize>> = (0..img.height())
        .step_by(BAND_ROWS)
        .map(|r| r..(r + BAND_ROWS).min(img.height()))
        .collect();
    let parts: Vec<Vec<Neighborhood>> = bands
        .into_par_iter()
        .map(|rows| search_band(img, &padded, rows, params))
        .collect();
    Ok(parts.into_iter().flatten().collect())
}

fn search_band(img: &ImageGrid, padded: &Padded, rows: Range<usize>, params: &SearchParams) -> Vec<Neighborhood> {
    let (height, width) = (img.height() as isize, img.width() as isize);
    let hs = (params.side / 2) as isize;
    let hw = (params.window / 2) as isize;
    let side = params.side;
    let n_off = params.window * params.window;
    let band_h = rows.len();
    let r_start = rows.start as isize;

    // Per-pixel terms over the band plus a patch margin.
    let term_h = band_h + side - 1;
    let term_w = img.width() + side - 1;
    let mut terms = vec![0.0; term_h * term_w];
    let mut costs = vec![f64::NAN; band_h * img.width() * n_off];

    let mut o = 0;
    for dr in -hw..=hw {
        for dc in -hw..=hw {
            for tr in 0..term_h {
                let r = r_start + tr as isize - hs;
                let row = &mut terms[tr * term_w..(tr + 1) * term_w];
                for (tc, t) in row.iter_mut().enumerate() {
                    let c = tc as isize - hs;
                    *t = pixel_log_similarity(padded.at(r, c), padded.at(r + dr, c + dc), params.gamma);
                }
            }
            for br in 0..band_h {
                let r = r_start + br as isize;
                if r + dr < 0 || r + dr >= height {
                    continue;
                }
                for c in 0..width {
                    if c + dc < 0 || c + dc >= width {
                        continue;
                    }
                    let mut acc = 0.0;
                    for u in 0..side {
                        let base = (br + u) * term_w + c as usize;
                        for &t in &terms[base..base + side] {
                            acc += t;
                        }
                    }
                    costs[(br * img.width() + c as usize) * n_off + o] = acc;
                }
            }
            o += 1;
        }
    }

    let mut out = Vec::with_capacity(band_h * img.width());
    let wsz = params.window as isize;
    for br in 0..band_h {
        for c in 0..img.width() {
            let pix = &costs[(br * img.width() + c) * n_off..][..n_off];
            let scored: Vec<(f64, usize)> = pix
                .iter()
                .enumerate()
                .filter(|(_, v)| !v.is_nan())
                .map(|(i, &v)| (v, i))
                .collect();
            let best = top_k(scored, params.k);
            let r = rows.start + br;
            out.push(Neighborhood {
                center: (r, c),
                indices: best
                    .iter()
                    .map(|&(_, i)| {
                        let (dr, dc) = (i as isize / wsz - hw, i as isize % wsz - hw);
                        ((r as isize + dr) as usize, (c as isize + dc) as usize)
                    })
                    .collect(),
                log_sims: best.iter().map(|&(s, _)| s).collect(),
            });
        }
    }
    out
}
