//! File formats: PFM float rasters, 8-bit grayscale PNG, and CSV.
//!
//! PFM follows the usual convention of the format: a `Pf` header, the width
//! and height, a negative scale for little-endian data, and scanlines stored
//! from the bottom row up.

use std::fs;
use std::io::Write;
use std::path::Path;

use myriad::montecarlo::{StudySummary, TrialRecord};
use myriad::{ImageGrid, WeightedSample};

use crate::error::{CliError, CliResult};

pub fn write_pfm(path: &Path, img: &ImageGrid) -> CliResult<()> {
    fs::write(path, encode_pfm(img.width(), img.height(), img.pixels())).map_err(|e| CliError::io(path, e))
}

/// Encodes a row-major raster (top row first) as little-endian grayscale PFM.
pub fn encode_pfm(width: usize, height: usize, values: &[f64]) -> Vec<u8> {
    let mut out = format!("Pf\n{width} {height}\n-1.0\n").into_bytes();
    out.reserve(4 * values.len());
    for row in values.chunks(width).rev() {
        for &v in row {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn read_pfm(path: &Path) -> CliResult<ImageGrid> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode_pfm(&bytes).map_err(|m| CliError::io(path, m))
}

pub fn decode_pfm(bytes: &[u8]) -> Result<ImageGrid, String> {
    // Header: four whitespace-separated tokens, then exactly one whitespace byte.
    let mut tokens = Vec::with_capacity(4);
    let mut pos = 0;
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated PFM header".into());
        }
        tokens.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| "non-ASCII PFM header")?);
    }
    pos += 1;
    match tokens[0] {
        "Pf" => {}
        "PF" => return Err("colour PFM is not supported".into()),
        other => return Err(format!("not a PFM file (magic {other:?})")),
    }
    let width: usize = tokens[1].parse().map_err(|_| format!("bad width {:?}", tokens[1]))?;
    let height: usize = tokens[2].parse().map_err(|_| format!("bad height {:?}", tokens[2]))?;
    let scale: f64 = tokens[3].parse().map_err(|_| format!("bad scale {:?}", tokens[3]))?;
    if width == 0 || height == 0 || scale == 0.0 || !scale.is_finite() {
        return Err(format!("invalid PFM header: {width}x{height}, scale {scale}"));
    }
    let little = scale < 0.0;
    let data = bytes.get(pos..).unwrap_or_default();
    let count = width
        .checked_mul(height)
        .ok_or_else(|| "PFM dimensions overflow".to_string())?;
    if data.len() != 4 * count {
        return Err(format!("expected {} data bytes, found {}", 4 * count, data.len()));
    }
    let samples: Vec<f64> = data
        .chunks_exact(4)
        .map(|c| {
            let b = [c[0], c[1], c[2], c[3]];
            f64::from(if little {
                f32::from_le_bytes(b)
            } else {
                f32::from_be_bytes(b)
            })
        })
        .collect();
    let pixels: Vec<f64> = samples.chunks(width).rev().flatten().copied().collect();
    ImageGrid::new(width, height, pixels).map_err(|e| e.to_string())
}

/// Reads an 8-bit grayscale PNG; values map exactly onto `0..=255`.
pub fn read_png(path: &Path) -> CliResult<ImageGrid> {
    let img = image::open(path).map_err(|e| CliError::io(path, e))?;
    let gray = match img {
        image::DynamicImage::ImageLuma8(g) => g,
        other => {
            return Err(CliError::io(
                path,
                format!("expected 8-bit grayscale PNG, found {:?}", other.color()),
            ))
        }
    };
    let (w, h) = gray.dimensions();
    let pixels = gray.into_raw().into_iter().map(f64::from).collect();
    ImageGrid::new(w as usize, h as usize, pixels).map_err(|e| CliError::io(path, e))
}

/// Rounds half away from zero, then clamps to `0..=255`.
pub fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

pub fn write_preview(path: &Path, img: &ImageGrid) -> CliResult<()> {
    let bytes: Vec<u8> = img.pixels().iter().map(|&v| to_u8(v)).collect();
    image::save_buffer(
        path,
        &bytes,
        img.width() as u32,
        img.height() as u32,
        image::ExtendedColorType::L8,
    )
    .map_err(|e| CliError::io(path, e))
}

/// Picks the reader from the file extension (`.png` or `.pfm`).
pub fn read_image(path: &Path) -> CliResult<ImageGrid> {
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("png") => read_png(path),
        Some("pfm") => read_pfm(path),
        _ => Err(CliError::Usage(format!(
            "{}: unsupported image type, expected .png or .pfm",
            path.display()
        ))),
    }
}

/// Reads a CSV with header `value` or `value,weight`.
pub fn read_samples(path: &Path) -> CliResult<WeightedSample> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
    let headers = rdr.headers().map_err(|e| CliError::io(path, e))?.clone();
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    let weighted = match names.as_slice() {
        ["value"] => false,
        ["value", "weight"] => true,
        _ => {
            return Err(CliError::io(
                path,
                format!("header must be `value` or `value,weight`, found `{}`", names.join(",")),
            ))
        }
    };
    let (mut values, mut weights) = (Vec::new(), Vec::new());
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::io(path, e))?;
        let field = |i: usize| -> CliResult<f64> {
            rec.get(i)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::io(path, format!("row {}: bad number in column {}", line + 2, i + 1)))
        };
        values.push(field(0)?);
        if weighted {
            let w = field(1)?;
            if w <= 0.0 {
                return Err(CliError::io(
                    path,
                    format!("row {}: weight {w} must be positive", line + 2),
                ));
            }
            weights.push(w);
        }
    }
    if values.is_empty() {
        return Err(CliError::Precondition(format!("{}: no samples", path.display())));
    }
    let sample = if weighted {
        WeightedSample::from_weighted(&values, &weights)
    } else {
        WeightedSample::from_values(&values)
    };
    Ok(sample?)
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<fs::File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| CliError::io(path, e))
}

fn finish(path: &Path, mut w: csv::Writer<fs::File>) -> CliResult<()> {
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_trials(path: &Path, records: &[TrialRecord]) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    let err = |e: csv::Error| CliError::io(path, e);
    w.write_record(["trial", "a_hat", "gamma_hat", "iter_gmf", "iter_fast"])
        .map_err(err)?;
    for r in records {
        w.write_record([
            r.trial_index.to_string(),
            r.a_hat.to_string(),
            r.gamma_hat.to_string(),
            r.iterations_gmf.to_string(),
            r.iterations_fast.to_string(),
        ])
        .map_err(err)?;
    }
    finish(path, w)
}

pub const SUMMARY_HEADER: [&str; 15] = [
    "a",
    "gamma",
    "n",
    "trials",
    "iter_gmf_mean",
    "iter_gmf_sd",
    "iter_fast_mean",
    "iter_fast_sd",
    "a_hat_mean",
    "a_hat_sd",
    "gamma_hat_mean",
    "gamma_hat_sd",
    "mse_a",
    "mse_gamma",
    "nonconverged",
];

pub fn write_summary(path: &Path, s: &StudySummary) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    let err = |e: csv::Error| CliError::io(path, e);
    w.write_record(SUMMARY_HEADER).map_err(err)?;
    w.write_record([
        s.truth.a.to_string(),
        s.truth.gamma.to_string(),
        s.n.to_string(),
        s.trials.to_string(),
        s.iter_gmf.mean.to_string(),
        s.iter_gmf.sd.to_string(),
        s.iter_fast.mean.to_string(),
        s.iter_fast.sd.to_string(),
        s.a_hat.mean.to_string(),
        s.a_hat.sd.to_string(),
        s.gamma_hat.mean.to_string(),
        s.gamma_hat.sd.to_string(),
        s.mse_a.to_string(),
        s.mse_gamma.to_string(),
        s.nonconverged.to_string(),
    ])
    .map_err(err)?;
    finish(path, w)
}

/// Writes `text` to stdout, ignoring a closed pipe.
pub fn emit(text: &str) {
    let _ = std::io::stdout().write_all(text.as_bytes());
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pfm_round_trip_is_bit_exact_for_f32_values() {
        let vals: Vec<f64> = [0.0f32, -1.5, 255.0, 1e30, f32::MIN_POSITIVE, 3.25]
            .iter()
            .map(|&v| f64::from(v))
            .collect();
        let img = ImageGrid::new(3, 2, vals.clone()).unwrap();
        let back = decode_pfm(&encode_pfm(3, 2, img.pixels())).unwrap();
        assert_eq!(back.pixels(), &vals[..]);
        assert_eq!((back.width(), back.height()), (3, 2));
    }

    #[test]
    fn pfm_rows_are_stored_bottom_up() {
        let bytes = encode_pfm(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let header = b"Pf\n2 2\n-1.0\n".len();
        assert_eq!(&bytes[header..header + 4], &3.0f32.to_le_bytes());
    }

    #[test]
    fn pfm_big_endian_is_read() {
        let mut bytes = b"Pf\n1 2\n1.0\n".to_vec();
        bytes.extend_from_slice(&7.0f32.to_be_bytes());
        bytes.extend_from_slice(&9.0f32.to_be_bytes());
        assert_eq!(decode_pfm(&bytes).unwrap().pixels(), &[9.0, 7.0]);
    }

    #[test]
    fn pfm_rejects_malformed_input() {
        assert!(decode_pfm(b"P5\n1 1\n255\n\0").is_err());
        assert!(decode_pfm(b"PF\n1 1\n-1.0\n000000000000").is_err());
        assert!(decode_pfm(b"Pf\n2 2\n-1.0\n0000").is_err());
        assert!(decode_pfm(b"Pf\n2").is_err());
    }

    #[test]
    fn preview_rounding() {
        assert_eq!(to_u8(2.5), 3);
        assert_eq!(to_u8(2.4999), 2);
        assert_eq!(to_u8(-0.5), 0);
        assert_eq!(to_u8(254.5), 255);
        assert_eq!(to_u8(1e9), 255);
        assert_eq!(to_u8(-1e9), 0);
    }
}
