use crate::error::{Error, Result};

/// Row-major grid of real intensities. Values are not clamped to any range.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl ImageGrid {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::TooSmall { width, height, min: 1 });
        }
        if pixels.len() != width * height {
            return Err(Error::LengthMismatch(pixels.len(), width * height));
        }
        if pixels.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSample);
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0);
        Self {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    /// Builds the grid from `f(row, col)`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0);
        let mut pixels = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c));
            }
        }
        Self { width, height, pixels }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.pixels[row * self.width + col] = value;
    }

    /// Pixel at a possibly out-of-range position, extending the image by
    /// reflection about its border (the edge pixel is repeated:
    /// `-1 → 0`, `-2 → 1`, `h → h-1`).
    pub fn get_mirrored(&self, row: isize, col: isize) -> f64 {
        self.get(mirror(row, self.height), mirror(col, self.width))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Values of the `side × side` block whose top-left corner is `(row, col)`,
    /// row-major. The block must lie inside the image.
    pub fn block(&self, row: usize, col: usize, side: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(side * side);
        for r in row..row + side {
            let start = r * self.width + col;
            out.extend_from_slice(&self.pixels[start..start + side]);
        }
        out
    }

    pub fn same_dims(&self, other: &Self) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }
}

/// Reflects `i` into `0..n` with the edge sample repeated; periodic with
/// period `2n`, so any offset is valid.
pub fn mirror(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mirror_indices() {
        let got: Vec<usize> = (-4..8).map(|i| mirror(i, 4)).collect();
        assert_eq!(got, vec![3, 2, 1, 0, 0, 1, 2, 3, 3, 2, 1, 0]);
        assert_eq!(mirror(-1, 1), 0);
        assert_eq!(mirror(5, 1), 0);
    }

    #[test]
    fn construction_checks() {
        assert!(ImageGrid::new(2, 2, vec![0.0; 3]).is_err());
        assert!(ImageGrid::new(0, 2, vec![]).is_err());
        assert!(ImageGrid::new(1, 1, vec![f64::NAN]).is_err());
        let img = ImageGrid::from_fn(3, 2, |r, c| (10 * r + c) as f64);
        assert_eq!(img.pixels(), &[0.0, 1.0, 2.0, 10.0, 11.0, 12.0]);
        assert_eq!(img.get_mirrored(-1, 3), 2.0);
        assert_eq!(img.block(0, 1, 2), vec![1.0, 2.0, 11.0, 12.0]);
    }
}
