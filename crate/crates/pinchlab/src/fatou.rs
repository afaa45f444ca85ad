//! Orbit classification, Julia-proxy density and connected components.

use crate::entire::{EntireMap, FixedPointClass, SATURATION_RE};
use crate::exec::Exec;
use crate::grid::Grid;
use crate::C64;
use serde::Serialize;
use std::collections::VecDeque;
use thiserror::Error;

pub const DEFAULT_ESCAPE: f64 = 50.0;
pub const DEFAULT_MAX_ITER: u32 = 1000;
const ATTRACT_RADIUS: f64 = 1e-6;
/// Steps the vertical witness must persist before it counts.
pub const VERTICAL_CONFIRM: u32 = 30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FatouError {
    #[error("disc around {center} of radius {radius} contains no cell centre")]
    EmptyDisc { center: C64, radius: f64 },
    #[error("no Undecided cells: postcritical distance undefined")]
    NoJuliaCells,
    #[error("invalid classifier parameters: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum OrbitTag {
    AttractingBasin,
    BakerEscape,
    VerticalEscape,
    Undecided,
}

impl OrbitTag {
    pub const ALL: [OrbitTag; 4] = [
        OrbitTag::AttractingBasin,
        OrbitTag::BakerEscape,
        OrbitTag::VerticalEscape,
        OrbitTag::Undecided,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OrbitTag::AttractingBasin => "AttractingBasin",
            OrbitTag::BakerEscape => "BakerEscape",
            OrbitTag::VerticalEscape => "VerticalEscape",
            OrbitTag::Undecided => "Undecided",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitClass {
    pub tag: OrbitTag,
    pub iterations: u32,
    pub last: C64,
}

/// Reusable classifier: the attracting fixed points are located once.
#[derive(Clone, Debug)]
pub struct Classifier {
    pub map: EntireMap,
    pub max_iter: u32,
    pub escape: f64,
    pub attractors: Vec<C64>,
}

impl Classifier {
    pub fn new(map: EntireMap, max_iter: u32, escape: f64) -> Result<Classifier, FatouError> {
        if max_iter < 1 || !(escape > 0.0) {
            return Err(FatouError::Invalid(format!("max_iter {max_iter}, escape {escape}")));
        }
        let mut attractors = Vec::new();
        if let Ok(fps) = map.fixed_points_real(-escape, escape) {
            for fp in fps {
                if matches!(fp.class, FixedPointClass::Superattracting | FixedPointClass::Attracting) {
                    attractors.push(C64::new(fp.z, 0.0));
                }
            }
        }
        // The critical orbit finds attracting fixed points off the real line.
        let mut z = map.critical_points(0, 0)[0];
        for _ in 0..2000 {
            let Ok(next) = map.eval_checked(z) else { break };
            if (next - z).norm() < 1e-13 * z.norm().max(1.0) {
                if map.deriv(next).norm() < 1.0 && attractors.iter().all(|a| (a - next).norm() > 1e-9) {
                    attractors.push(next);
                }
                break;
            }
            z = next;
        }
        Ok(Classifier { map, max_iter, escape, attractors })
    }

    pub fn classify(&self, z0: C64) -> OrbitClass {
        let e = self.escape;
        let mut z = z0;
        let mut re_hist = [0.0f64; 5];
        let mut vertical_since = None;
        for n in 0..=self.max_iter {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return OrbitClass { tag: OrbitTag::Undecided, iterations: n, last: z };
            }
            if self.attractors.iter().any(|a| (z - a).norm() < ATTRACT_RADIUS) {
                return OrbitClass { tag: OrbitTag::AttractingBasin, iterations: n, last: z };
            }
            re_hist[(n % 5) as usize] = z.re;
            if z.re < -e && n >= 4 {
                let ok = (0..4).all(|k| {
                    let a = re_hist[((n - 4 + k) % 5) as usize];
                    let b = re_hist[((n - 3 + k) % 5) as usize];
                    b < a
                });
                if ok {
                    return OrbitClass { tag: OrbitTag::BakerEscape, iterations: n, last: z };
                }
            }
            // Baker orbits leaving along a steep ray also pass through this
            // box; only orbits whose real part stays put are vertical.
            if z.im.abs() > e && z.re.abs() <= e {
                let n0 = *vertical_since.get_or_insert(n);
                if n - n0 >= VERTICAL_CONFIRM {
                    return OrbitClass { tag: OrbitTag::VerticalEscape, iterations: n, last: z };
                }
            } else {
                vertical_since = None;
            }
            if n == self.max_iter {
                break;
            }
            if z.re > SATURATION_RE {
                // The next iterate is ≈ −e^z: it lands far left when cos(Im z) > 0.
                let tag = if z.im.cos() > 0.0 { OrbitTag::BakerEscape } else { OrbitTag::Undecided };
                return OrbitClass { tag, iterations: n, last: z };
            }
            z = self.map.eval(z);
        }
        OrbitClass { tag: OrbitTag::Undecided, iterations: self.max_iter, last: z }
    }
}

impl Classifier {
    /// Koebe-type estimate of the distance from a Baker-escaping point to the
    /// Julia set: |Re fⁿ(z)| / |(fⁿ)'(z)| at the step where the orbit was
    /// classified. None for other tags.
    pub fn boundary_distance(&self, z0: C64, class: &OrbitClass) -> Option<f64> {
        if class.tag != OrbitTag::BakerEscape {
            return None;
        }
        if class.last.re > 0.0 {
            // Saturated orbits pass through the far right, next to J.
            return Some(0.0);
        }
        let mut z = z0;
        let mut d = 1.0f64;
        for _ in 0..class.iterations {
            d *= self.map.deriv(z).norm();
            z = self.map.eval(z);
        }
        Some(z.re.abs() / d)
    }
}

pub fn classify_orbit(f: &EntireMap, z: C64, max_iter: u32, escape: f64) -> Result<OrbitClass, FatouError> {
    Ok(Classifier::new(*f, max_iter, escape)?.classify(z))
}

#[derive(Clone, Debug)]
pub struct Raster {
    pub grid: Grid,
    pub cells: Vec<OrbitClass>,
}

impl Raster {
    pub fn tag(&self, k: usize) -> OrbitTag {
        self.cells[k].tag
    }

    pub fn tag_at(&self, z: C64) -> Option<OrbitTag> {
        self.grid.locate(z).map(|(i, j)| self.cells[self.grid.index(i, j)].tag)
    }

    pub fn counts(&self) -> [usize; 4] {
        let mut c = [0usize; 4];
        for cell in &self.cells {
            c[cell.tag.index()] += 1;
        }
        c
    }

    pub fn mask(&self, tag: OrbitTag) -> Vec<bool> {
        self.cells.iter().map(|c| c.tag == tag).collect()
    }
}

pub fn raster_classify(classifier: &Classifier, grid: Grid, exec: Exec) -> Raster {
    let cells = exec.map(grid.len(), |k| classifier.classify(grid.center_of(k)));
    Raster { grid, cells }
}

/// Fraction of Undecided cells among cells whose centre lies in the disc.
pub fn julia_density(r: &Raster, center: C64, radius: f64) -> Result<f64, FatouError> {
    let mut inside = 0usize;
    let mut julia = 0usize;
    for (k, cell) in r.cells.iter().enumerate() {
        if (r.grid.center_of(k) - center).norm() <= radius {
            inside += 1;
            if cell.tag == OrbitTag::Undecided {
                julia += 1;
            }
        }
    }
    if inside == 0 {
        return Err(FatouError::EmptyDisc { center, radius });
    }
    Ok(julia as f64 / inside as f64)
}

/// Distance from `z` to the nearest centre of a masked cell, by ring search.
pub fn nearest_masked(grid: &Grid, mask: &[bool], z: C64) -> Option<f64> {
    let (ci, cj) = grid.clamp_locate(z);
    let h = grid.dx().min(grid.dy());
    let n = grid.n as i64;
    let mut best = f64::INFINITY;
    for r in 0..n {
        if best.is_finite() && (r as f64 - 1.0) * h > best {
            break;
        }
        let (i0, j0) = (ci as i64, cj as i64);
        let mut visit = |i: i64, j: i64| {
            if i >= 0 && j >= 0 && i < n && j < n {
                let k = grid.index(i as usize, j as usize);
                if mask[k] {
                    best = best.min((grid.center_of(k) - z).norm());
                }
            }
        };
        if r == 0 {
            visit(i0, j0);
            continue;
        }
        for d in -r..=r {
            visit(i0 + d, j0 - r);
            visit(i0 + d, j0 + r);
        }
        for d in (-r + 1)..r {
            visit(i0 - r, j0 + d);
            visit(i0 + r, j0 + d);
        }
    }
    best.is_finite().then_some(best)
}

/// Minimum distance between the sampled postcritical orbit and the centres
/// of Undecided cells.
pub fn postcritical_distance_estimate(f: &EntireMap, r: &Raster, orbit_len: usize) -> Result<f64, FatouError> {
    let mask = r.mask(OrbitTag::Undecided);
    if !mask.iter().any(|&b| b) {
        return Err(FatouError::NoJuliaCells);
    }
    let region = r.grid.region;
    let step = 2.0 * std::f64::consts::PI * f.m();
    let base = f.singular_values(0, 0).critical[0].im;
    let k_lo = ((region.im_lo - base) / step).floor() as i64 - 1;
    let k_hi = ((region.im_hi - base) / step).ceil() as i64 + 1;
    let mut best = f64::INFINITY;
    for v in f.singular_values(k_lo, k_hi).critical {
        let mut z = v;
        for _ in 0..orbit_len.max(1) {
            if let Some(d) = nearest_masked(&r.grid, &mask, z) {
                best = best.min(d);
            }
            match f.eval_checked(z) {
                Ok(w) if w.re.is_finite() && w.im.is_finite() => z = w,
                _ => break,
            }
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Component {
    pub cells: Vec<usize>,
    /// Cell-index bounding box `(i_lo, j_lo, i_hi, j_hi)`.
    pub bbox: (usize, usize, usize, usize),
}

impl Component {
    pub fn count(&self) -> usize {
        self.cells.len()
    }
}

/// 4-connected components of the masked cells, in scan order of their first cell.
pub fn mask_components(grid: &Grid, mask: &[bool]) -> Vec<Component> {
    let n = grid.n;
    let mut label = vec![usize::MAX; grid.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..grid.len() {
        if !mask[start] || label[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        label[start] = id;
        queue.push_back(start);
        let mut cells = Vec::new();
        let (mut ilo, mut jlo, mut ihi, mut jhi) = (usize::MAX, usize::MAX, 0, 0);
        while let Some(k) = queue.pop_front() {
            cells.push(k);
            let (i, j) = grid.coords(k);
            ilo = ilo.min(i);
            jlo = jlo.min(j);
            ihi = ihi.max(i);
            jhi = jhi.max(j);
            let mut push = |kk: usize| {
                if mask[kk] && label[kk] == usize::MAX {
                    label[kk] = id;
                    queue.push_back(kk);
                }
            };
            if i > 0 {
                push(k - 1);
            }
            if i + 1 < n {
                push(k + 1);
            }
            if j > 0 {
                push(k - n);
            }
            if j + 1 < n {
                push(k + n);
            }
        }
        cells.sort_unstable();
        out.push(Component { cells, bbox: (ilo, jlo, ihi, jhi) });
    }
    out
}

pub fn component_extract(r: &Raster, tag: OrbitTag) -> Vec<Component> {
    mask_components(&r.grid, &r.mask(tag))
}

/// Cells of the Baker domain itself: the BakerEscape components that meet
/// the half-plane `Re z < re_max`.
pub fn baker_domain_mask(r: &Raster, re_max: f64) -> Vec<bool> {
    let mut mask = vec![false; r.grid.len()];
    for comp in component_extract(r, OrbitTag::BakerEscape) {
        if comp.cells.iter().any(|&k| r.grid.center_of(k).re < re_max) {
            for &k in &comp.cells {
                mask[k] = true;
            }
        }
    }
    mask
}
