//! Raster images with a fixed class palette and polyline overlays.

use crate::fatou::{OrbitTag, Raster};
use crate::grid::Grid;
use crate::C64;
use std::io::Write;
use std::path::Path;

/// RGB per class, indexed by [`OrbitTag::index`].
pub const PALETTE: [[u8; 3]; 4] = [
    [38, 84, 166],   // AttractingBasin
    [242, 196, 64],  // BakerEscape
    [122, 184, 110], // VerticalEscape
    [16, 16, 16],    // Undecided
];

pub const OVERLAY: [u8; 3] = [220, 40, 40];

pub fn color(tag: OrbitTag) -> [u8; 3] {
    PALETTE[tag.index()]
}

/// Row-major RGB bytes with the top row at the largest imaginary part.
pub fn raster_rgb(r: &Raster) -> Vec<u8> {
    let n = r.grid.n;
    let mut out = Vec::with_capacity(3 * n * n);
    for row in 0..n {
        let j = n - 1 - row;
        for i in 0..n {
            out.extend_from_slice(&color(r.cells[r.grid.index(i, j)].tag));
        }
    }
    out
}

/// Draws polylines onto an RGB buffer laid out as in [`raster_rgb`].
pub fn overlay_polylines(rgb: &mut [u8], grid: &Grid, lines: &[Vec<C64>], rgb_color: [u8; 3]) {
    let n = grid.n;
    let h = grid.dx().min(grid.dy());
    let mut put = |z: C64| {
        if let Some((i, j)) = grid.locate(z) {
            let k = 3 * ((n - 1 - j) * n + i);
            rgb[k..k + 3].copy_from_slice(&rgb_color);
        }
    };
    for line in lines {
        if line.len() == 1 {
            put(line[0]);
        }
        for w in line.windows(2) {
            let (a, b) = (w[0], w[1]);
            if !(a.re.is_finite() && a.im.is_finite() && b.re.is_finite() && b.im.is_finite()) {
                continue;
            }
            let steps = (((b - a).norm() / (0.5 * h)).ceil() as usize).clamp(1, 1 << 20);
            for s in 0..=steps {
                put(a + (b - a) * (s as f64 / steps as f64));
            }
        }
    }
}

/// Binary PPM (P6) bytes.
pub fn ppm_bytes(rgb: &[u8], n: usize) -> Vec<u8> {
    let mut out = format!("P6\n{n} {n}\n255\n").into_bytes();
    out.extend_from_slice(rgb);
    out
}

/// Writes PNG, or PPM when the extension is `.ppm`.
pub fn write_rgb(rgb: &[u8], n: usize, path: &Path) -> std::io::Result<()> {
    if path.extension().is_some_and(|e| e == "ppm") {
        let mut f = std::fs::File::create(path)?;
        return f.write_all(&ppm_bytes(rgb, n));
    }
    image::save_buffer(path, rgb, n as u32, n as u32, image::ExtendedColorType::Rgb8)
        .map_err(|e| std::io::Error::other(e.to_string()))
}

pub fn render_raster(r: &Raster, path: &Path) -> std::io::Result<()> {
    write_rgb(&raster_rgb(r), r.grid.n, path)
}

pub fn render_with_leaves(r: &Raster, lines: &[Vec<C64>], path: &Path) -> std::io::Result<()> {
    let mut rgb = raster_rgb(r);
    overlay_polylines(&mut rgb, &r.grid, lines, OVERLAY);
    write_rgb(&rgb, r.grid.n, path)
}
