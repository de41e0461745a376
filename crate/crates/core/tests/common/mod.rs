#![allow(dead_code)]

use std::path::PathBuf;

use myriad::ImageGrid;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(format!("{name}.png"))
}

/// 8-bit grayscale fixture as an unclamped real grid.
pub fn load_fixture(name: &str) -> ImageGrid {
    let img = image::open(fixture_path(name)).expect("fixture image").to_luma8();
    let (w, h) = img.dimensions();
    let pixels = img.into_raw().into_iter().map(f64::from).collect();
    ImageGrid::new(w as usize, h as usize, pixels).unwrap()
}
