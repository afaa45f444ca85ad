//! Rectangular regions and cell-centred grids.

use crate::C64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub re_lo: f64,
    pub im_lo: f64,
    pub re_hi: f64,
    pub im_hi: f64,
}

impl Region {
    pub fn new(re_lo: f64, im_lo: f64, re_hi: f64, im_hi: f64) -> Option<Region> {
        let ok = [re_lo, im_lo, re_hi, im_hi].iter().all(|v| v.is_finite())
            && re_lo < re_hi
            && im_lo < im_hi;
        ok.then_some(Region { re_lo, im_lo, re_hi, im_hi })
    }

    /// Square `[c − r, c + r]²` around `c`.
    pub fn square(center: C64, half: f64) -> Region {
        Region {
            re_lo: center.re - half,
            im_lo: center.im - half,
            re_hi: center.re + half,
            im_hi: center.im + half,
        }
    }

    pub fn width(&self) -> f64 {
        self.re_hi - self.re_lo
    }

    pub fn height(&self) -> f64 {
        self.im_hi - self.im_lo
    }

    pub fn center(&self) -> C64 {
        C64::new(0.5 * (self.re_lo + self.re_hi), 0.5 * (self.im_lo + self.im_hi))
    }

    pub fn contains(&self, z: C64) -> bool {
        z.re >= self.re_lo && z.re <= self.re_hi && z.im >= self.im_lo && z.im <= self.im_hi
    }

    /// Euclidean distance from `z` to the rectangle (0 inside).
    pub fn distance(&self, z: C64) -> f64 {
        let dx = (self.re_lo - z.re).max(0.0).max(z.re - self.re_hi);
        let dy = (self.im_lo - z.im).max(0.0).max(z.im - self.im_hi);
        dx.hypot(dy)
    }
}

/// `n × n` cells over a region, row-major with row index along Im.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub region: Region,
    pub n: usize,
}

impl Grid {
    pub fn new(region: Region, n: usize) -> Grid {
        assert!(n >= 1, "grid needs at least one cell");
        Grid { region, n }
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dx(&self) -> f64 {
        self.region.width() / self.n as f64
    }

    pub fn dy(&self) -> f64 {
        self.region.height() / self.n as f64
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.n, k / self.n)
    }

    pub fn center(&self, i: usize, j: usize) -> C64 {
        C64::new(
            self.region.re_lo + (i as f64 + 0.5) * self.dx(),
            self.region.im_lo + (j as f64 + 0.5) * self.dy(),
        )
    }

    pub fn center_of(&self, k: usize) -> C64 {
        let (i, j) = self.coords(k);
        self.center(i, j)
    }

    /// Cell containing `z`, if any.
    pub fn locate(&self, z: C64) -> Option<(usize, usize)> {
        let fx = (z.re - self.region.re_lo) / self.dx();
        let fy = (z.im - self.region.im_lo) / self.dy();
        if !(fx >= 0.0 && fy >= 0.0) {
            return None;
        }
        let (i, j) = (fx as usize, fy as usize);
        (i < self.n && j < self.n).then_some((i, j))
    }

    /// Nearest cell, clamping points outside the region.
    pub fn clamp_locate(&self, z: C64) -> (usize, usize) {
        let last = (self.n - 1) as f64;
        let fx = ((z.re - self.region.re_lo) / self.dx()).floor().clamp(0.0, last);
        let fy = ((z.im - self.region.im_lo) / self.dy()).floor().clamp(0.0, last);
        (fx as usize, fy as usize)
    }

    pub fn centers(&self) -> impl Iterator<Item = C64> + '_ {
        (0..self.len()).map(move |k| self.center_of(k))
    }
}
