//! Brute-force lamination oracle: leaves are sampled in ℍ and compared with
//! plain Euclidean circle geometry and minimized hyperbolic distances.

#![allow(dead_code)]

use pinchlab::lamination::Clause;
use pinchlab::C64;
use rand::rngs::StdRng;
use rand::Rng;

/// `(u, Some(v))` for a semicircle, `(0, None)` for the imaginary axis.
pub type RawLeaf = (f64, Option<f64>);

fn hyp(z: C64, w: C64) -> f64 {
    (1.0 + (z - w).norm_sqr() / (2.0 * z.im * w.im)).acosh()
}

/// Point at hyperbolic arclength `s` along the leaf.
fn point(l: RawLeaf, s: f64) -> C64 {
    match l.1 {
        None => C64::new(0.0, s.exp()),
        Some(v) => {
            let (c, r) = (0.5 * (l.0 + v), 0.5 * (v - l.0).abs());
            C64::new(c + r * s.tanh(), r / s.cosh())
        }
    }
}

/// Signed side of `z` relative to the leaf's Euclidean circle (or line).
fn side(l: RawLeaf, z: C64) -> f64 {
    match l.1 {
        None => z.re,
        Some(v) => {
            let (c, r) = (0.5 * (l.0 + v), 0.5 * (v - l.0).abs());
            ((z.re - c).powi(2) + z.im * z.im - r * r) / (r * r)
        }
    }
}

fn endpoints(l: RawLeaf) -> Vec<Option<f64>> {
    match l.1 {
        None => vec![Some(0.0), None],
        Some(v) => vec![Some(l.0), Some(v)],
    }
}

/// Samples of the closed leaf, including its finite endpoints.
fn samples(l: RawLeaf) -> Vec<C64> {
    let mut pts: Vec<C64> = (0..=400).map(|k| point(l, -40.0 + 80.0 * k as f64 / 400.0)).collect();
    if let Some(v) = l.1 {
        pts.push(C64::new(l.0, 0.0));
        pts.push(C64::new(v, 0.0));
    }
    pts
}

pub fn linked(l1: RawLeaf, l2: RawLeaf) -> bool {
    let s: Vec<f64> = samples(l1).iter().map(|&z| side(l2, z)).collect();
    s.iter().any(|&x| x > 1e-9) && s.iter().any(|&x| x < -1e-9)
}

pub fn shared(l1: RawLeaf, l2: RawLeaf) -> bool {
    let (e1, e2) = (endpoints(l1), endpoints(l2));
    e1.iter().any(|a| {
        e2.iter().any(|b| match (a, b) {
            (None, None) => true,
            (Some(x), Some(y)) => (x - y).abs() <= 1e-9 * x.abs().max(y.abs()),
            _ => false,
        })
    })
}

/// Minimizes a unimodal function on `[lo, hi]` after a coarse scan.
fn minimize(g: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let n = 160;
    let h = (hi - lo) / n as f64;
    let best = (0..=n).min_by(|&a, &b| g(lo + a as f64 * h).total_cmp(&g(lo + b as f64 * h))).unwrap();
    let (mut a, mut b) = (lo + (best as f64 - 1.0) * h, lo + (best as f64 + 1.0) * h);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let (x, y) = (b - phi * (b - a), a + phi * (b - a));
        if g(x) < g(y) {
            b = y;
        } else {
            a = x;
        }
    }
    g(0.5 * (a + b))
}

pub fn point_leaf_distance(z: C64, l: RawLeaf) -> f64 {
    minimize(|s| hyp(z, point(l, s)), -45.0, 45.0)
}

/// Closed form of [`point_leaf_distance`] from the circle's center and radius.
pub fn point_leaf_distance_closed(z: C64, l: RawLeaf) -> f64 {
    match l.1 {
        None => (z.re.abs() / z.im).asinh(),
        Some(v) => {
            let (c, r) = (0.5 * (l.0 + v), 0.5 * (v - l.0).abs());
            (((z.re - c).powi(2) + z.im * z.im - r * r).abs() / (2.0 * r * z.im)).asinh()
        }
    }
}

pub fn pair_distance(l1: RawLeaf, l2: RawLeaf) -> f64 {
    minimize(|s| point_leaf_distance_closed(point(l1, s), l2), -45.0, 45.0)
}

/// Hyperbolic radius of the sector of half-angle δ about the imaginary axis.
pub fn sector_radius(delta: f64) -> f64 {
    let z = C64::from_polar(1.0, std::f64::consts::FRAC_PI_2 + delta);
    point_leaf_distance(z, (0.0, None))
}

pub fn raw_leaves(a: f64, generators: &[(f64, f64)], axis: bool, orbit_range: i32) -> Vec<RawLeaf> {
    let mut out = Vec::new();
    if axis {
        out.push((0.0, None));
    }
    for &(u, v) in generators {
        let (u, v) = (u.min(v), u.max(v));
        for n in -orbit_range..=orbit_range {
            let s = a.powi(n);
            out.push((u * s, Some(v * s)));
        }
    }
    out
}

/// First violated clause in the order crossing, shared endpoint, collar overlap.
pub fn verdict(a: f64, generators: &[(f64, f64)], axis: bool, delta: f64, orbit_range: i32) -> Result<(), Clause> {
    let leaves = raw_leaves(a, generators, axis, orbit_range);
    let pairs = || (0..leaves.len()).flat_map(|i| (i + 1..leaves.len()).map(move |j| (i, j)));
    if pairs().any(|(i, j)| linked(leaves[i], leaves[j])) {
        return Err(Clause::II);
    }
    if pairs().any(|(i, j)| shared(leaves[i], leaves[j])) {
        return Err(Clause::III);
    }
    let d = pairs().map(|(i, j)| pair_distance(leaves[i], leaves[j])).fold(f64::INFINITY, f64::min);
    if d.is_finite() && !(d > 2.0 * sector_radius(delta)) {
        return Err(Clause::IV);
    }
    Ok(())
}

fn endpoint(rng: &mut StdRng) -> f64 {
    let x = (rng.gen_range(-2.0f64..2.0)).exp();
    if rng.gen_bool(0.5) {
        x
    } else {
        -x
    }
}

/// A random generator set: one to three generators, sometimes the axis,
/// sometimes an endpoint copied from the orbit of an earlier one.
pub fn random_set(rng: &mut StdRng, a: f64) -> (Vec<(f64, f64)>, bool, f64) {
    let k = rng.gen_range(1..=3);
    let mut gens: Vec<(f64, f64)> = Vec::with_capacity(k);
    while gens.len() < k {
        let u = endpoint(rng);
        let mut v = endpoint(rng);
        if rng.gen_bool(0.1) {
            let base = gens.last().map(|g| g.1).unwrap_or(u);
            v = base * a.powi(rng.gen_range(-1..=1));
        }
        if (u - v).abs() > 1e-3 * u.abs().max(v.abs()) {
            gens.push((u, v));
        }
    }
    let axis = rng.gen_bool(0.3);
    let delta = rng.gen_range(0.02..1.2);
    (gens, axis, delta)
}
