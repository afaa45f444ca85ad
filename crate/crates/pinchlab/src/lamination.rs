//! Baker laminations in model coordinates, their validation, combinatorics
//! and images in the plane.

use crate::entire::EntireMap;
use crate::exec::Exec;
use crate::geometry::{
    band_chart, geodesics_linked, leaf_pair_distance, moebius_alpha_to, sector_angle, sector_radius,
    shares_endpoint, BandChart, Endpoint, Geodesic,
};
use crate::uniformizer::Uniformizer;
use crate::C64;
use serde::Serialize;
use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};
use thiserror::Error;

/// Thickness used when the lamination has no pair of distinct leaves.
pub const DELTA_CAP: f64 = FRAC_PI_3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum LeafId {
    Axis,
    Orbit { generator: usize, n: i32 },
}

impl std::fmt::Display for LeafId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LeafId::Axis => write!(f, "axis"),
            LeafId::Orbit { generator, n } => write!(f, "a^{n}·γ{generator}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Clause {
    I,
    II,
    III,
    IV,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LaminationError {
    #[error("invalid lamination input: {0}")]
    Invalid(String),
    #[error("clause ({clause:?}) violated by {first} and {second}")]
    Violation { clause: Clause, first: LeafId, second: LeafId },
    #[error("a lamination containing the axis has no side classification")]
    AxisIncluded,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Leaf {
    pub id: LeafId,
    pub geodesic: Geodesic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Case {
    A,
    B,
}

#[derive(Clone, Debug)]
pub struct BakerLamination {
    pub a: f64,
    pub generators: Vec<(f64, f64)>,
    pub include_axis: bool,
    pub delta: f64,
    pub orbit_range: i32,
    pub min_leaf_distance: f64,
    leaves: Vec<Leaf>,
    charts: Vec<BandChart>,
    extents: Vec<(f64, f64)>,
    axis_chart: BandChart,
}

/// Model-coordinate hit of a band: the leaf, its chart value ψ and ψ'.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandHit {
    pub leaf: LeafId,
    pub psi: C64,
    pub dpsi: C64,
}

/// Leaves `a^n γ_i` for `|n| ≤ orbit_range`, plus the axis when included.
pub fn materialize(a: f64, generators: &[(f64, f64)], include_axis: bool, orbit_range: i32) -> Result<Vec<Leaf>, LaminationError> {
    let mut leaves = Vec::new();
    if include_axis {
        leaves.push(Leaf { id: LeafId::Axis, geodesic: Geodesic::axis() });
    }
    for (i, &(u, v)) in generators.iter().enumerate() {
        let g = Geodesic::semicircle(u, v).map_err(|e| LaminationError::Invalid(e.to_string()))?;
        for n in -orbit_range..=orbit_range {
            leaves.push(Leaf { id: LeafId::Orbit { generator: i, n }, geodesic: g.scaled(a.powi(n)) });
        }
    }
    Ok(leaves)
}

/// Checks clauses (i)–(iv) on materialized leaves. Returns the minimum
/// pairwise leaf distance (∞ without pairs).
pub fn validate(leaves: &[Leaf], a: f64, delta: Option<f64>) -> Result<f64, LaminationError> {
    // (i): G maps each leaf to the next one of its orbit.
    let lookup: HashMap<LeafId, Geodesic> = leaves.iter().map(|l| (l.id, l.geodesic)).collect();
    for l in leaves {
        let (next, image) = match l.id {
            LeafId::Axis => (LeafId::Axis, l.geodesic.scaled(a)),
            LeafId::Orbit { generator, n } => (LeafId::Orbit { generator, n: n + 1 }, l.geodesic.scaled(a)),
        };
        if let Some(g) = lookup.get(&next) {
            let close = |x: Endpoint, y: Endpoint| match (x, y) {
                (Endpoint::Infinity, Endpoint::Infinity) => true,
                (Endpoint::Finite(p), Endpoint::Finite(q)) => (p - q).abs() <= 1e-12 * p.abs().max(q.abs()).max(1e-300),
                _ => false,
            };
            let (p, q) = g.endpoints();
            let (r, s) = image.endpoints();
            if !(close(p, r) && close(q, s)) {
                return Err(LaminationError::Violation { clause: Clause::I, first: l.id, second: next });
            }
        }
    }
    for (k, l1) in leaves.iter().enumerate() {
        for l2 in &leaves[k + 1..] {
            if geodesics_linked(&l1.geodesic, &l2.geodesic) {
                return Err(LaminationError::Violation { clause: Clause::II, first: l1.id, second: l2.id });
            }
        }
    }
    for (k, l1) in leaves.iter().enumerate() {
        for l2 in &leaves[k + 1..] {
            if shares_endpoint(&l1.geodesic, &l2.geodesic) {
                return Err(LaminationError::Violation { clause: Clause::III, first: l1.id, second: l2.id });
            }
        }
    }
    let mut d_min = f64::INFINITY;
    let mut worst = None;
    for (k, l1) in leaves.iter().enumerate() {
        for l2 in &leaves[k + 1..] {
            let d = leaf_pair_distance(&l1.geodesic, &l2.geodesic);
            if d < d_min {
                d_min = d;
                worst = Some((l1.id, l2.id));
            }
        }
    }
    if let (Some(delta), Some((x, y))) = (delta, worst) {
        let r = sector_radius(delta).map_err(|e| LaminationError::Invalid(e.to_string()))?;
        if !(d_min > 2.0 * r) {
            return Err(LaminationError::Violation { clause: Clause::IV, first: x, second: y });
        }
    }
    Ok(d_min)
}

/// Default thickness: `δ = r⁻¹(0.4 · d_min)`, so that `2 r(δ) = 0.8 d_min`.
pub fn default_delta(d_min: f64) -> f64 {
    if d_min.is_finite() {
        sector_angle(0.4 * d_min).min(DELTA_CAP)
    } else {
        DELTA_CAP
    }
}

pub fn make_lamination(
    a: f64,
    generators: &[(f64, f64)],
    include_axis: bool,
    delta: Option<f64>,
    orbit_range: i32,
) -> Result<BakerLamination, LaminationError> {
    if !(a.is_finite() && a > 1.0) {
        return Err(LaminationError::Invalid(format!("dilation must exceed 1, got {a}")));
    }
    if !(0..=64).contains(&orbit_range) {
        return Err(LaminationError::Invalid(format!("orbit_range {orbit_range} outside 0..=64")));
    }
    if let Some(d) = delta {
        if !(d > 0.0 && d < FRAC_PI_2) {
            return Err(LaminationError::Invalid(format!("delta must lie in (0, π/2), got {d}")));
        }
    }
    let mut gens = Vec::with_capacity(generators.len());
    for &(u, v) in generators {
        if !(u.is_finite() && v.is_finite()) || u == 0.0 || v == 0.0 || u == v {
            return Err(LaminationError::Invalid(format!("generator ({u}, {v}) needs distinct finite nonzero endpoints")));
        }
        gens.push((u.min(v), u.max(v)));
    }
    if gens.is_empty() && !include_axis {
        return Err(LaminationError::Invalid("empty lamination".into()));
    }
    let leaves = materialize(a, &gens, include_axis, orbit_range)?;
    let d_min = validate(&leaves, a, None)?;
    let delta = delta.unwrap_or_else(|| default_delta(d_min));
    validate(&leaves, a, Some(delta))?;
    let mut charts = Vec::with_capacity(gens.len());
    let mut extents = Vec::with_capacity(gens.len());
    for &(u, v) in &gens {
        let g = Geodesic::semicircle(u, v).expect("validated");
        let chart = band_chart(&g, delta).map_err(|e| LaminationError::Invalid(e.to_string()))?;
        extents.push(band_extent(&g, delta));
        charts.push(chart);
    }
    let axis_chart = band_chart(&Geodesic::axis(), delta).map_err(|e| LaminationError::Invalid(e.to_string()))?;
    Ok(BakerLamination {
        a,
        generators: gens,
        include_axis,
        delta,
        orbit_range,
        min_leaf_distance: d_min,
        leaves,
        charts,
        extents,
        axis_chart,
    })
}

/// Bounds on `|ζ|` over the band of thickness δ around a semicircle.
fn band_extent(g: &Geodesic, delta: f64) -> (f64, f64) {
    let m = moebius_alpha_to(g);
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    let (u, v) = (g.u.abs(), g.v.finite().unwrap_or(f64::INFINITY).abs());
    lo = lo.min(u).min(v);
    hi = hi.max(u).max(v);
    for side in [-1.0, 1.0] {
        let th = FRAC_PI_2 + side * delta;
        for k in 0..=4000 {
            let s = 10f64.powf(-12.0 + 24.0 * k as f64 / 4000.0);
            let z = m.apply(C64::from_polar(s, th)).norm();
            lo = lo.min(z);
            hi = hi.max(z);
        }
    }
    (lo * 0.99, hi * 1.01)
}

impl BakerLamination {
    pub fn leaves(&self) -> &[Leaf] {
        &self.leaves
    }

    pub fn leaf(&self, id: LeafId) -> Option<Geodesic> {
        match id {
            LeafId::Axis => self.include_axis.then(Geodesic::axis),
            LeafId::Orbit { generator, n } => {
                let &(u, v) = self.generators.get(generator)?;
                Some(Geodesic::semicircle(u, v).ok()?.scaled(self.a.powi(n)))
            }
        }
    }

    /// The band (over the full G-orbit, not only materialized leaves)
    /// containing ζ, with chart value and derivative.
    pub fn band_at(&self, zeta: C64) -> Option<BandHit> {
        if !(zeta.im > 0.0) {
            return None;
        }
        if self.include_axis {
            let (psi, dpsi) = self.axis_chart.coord_deriv(zeta);
            if psi.im.abs() < self.delta {
                return Some(BandHit { leaf: LeafId::Axis, psi, dpsi });
            }
        }
        let r = zeta.norm();
        let la = self.a.ln();
        for (i, chart) in self.charts.iter().enumerate() {
            let (lo, hi) = self.extents[i];
            let n_lo = ((r / hi).ln() / la).ceil() as i32;
            let n_hi = ((r / lo).ln() / la).floor() as i32;
            for n in n_lo..=n_hi {
                let s = self.a.powi(n);
                let (psi, d) = chart.coord_deriv(zeta / s);
                if psi.im.abs() < self.delta {
                    return Some(BandHit { leaf: LeafId::Orbit { generator: i, n }, psi, dpsi: d / s });
                }
            }
        }
        None
    }

    pub fn side_classify(&self) -> Result<Case, LaminationError> {
        if self.include_axis {
            return Err(LaminationError::AxisIncluded);
        }
        Ok(if self.generators.iter().any(|&(u, v)| u < 0.0 && v > 0.0) { Case::B } else { Case::A })
    }

    pub fn complementary_components(&self) -> ComponentGraph {
        component_graph(&self.leaves, self.orbit_range)
    }
}

/// A complementary region of the materialized leaves in ℍ. `outer` is the
/// leaf bounding it from outside (`None` for the unbounded region).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelComponent {
    pub outer: Option<LeafId>,
    pub inner: Vec<LeafId>,
    pub meets_axis: bool,
    /// Bounded by a truncated end of an orbit, so not a component of the
    /// infinite lamination.
    pub truncated: bool,
    pub image: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComponentGraph {
    pub components: Vec<ModelComponent>,
    /// Some untruncated component meeting the axis is mapped to itself by G.
    pub axis_component_fixed: bool,
}

impl ComponentGraph {
    pub fn fixed(&self) -> Vec<usize> {
        self.components
            .iter()
            .enumerate()
            .filter(|(k, c)| !c.truncated && c.image == Some(*k))
            .map(|(k, _)| k)
            .collect()
    }
}

/// Interval on ℝ* cut off by a leaf: `(u, v)`, or `(0, ∞)` for the axis.
fn interval(g: &Geodesic) -> (f64, f64) {
    (g.u, g.v.finite().unwrap_or(f64::INFINITY))
}

fn component_graph(leaves: &[Leaf], orbit_range: i32) -> ComponentGraph {
    let ivs: Vec<(f64, f64)> = leaves.iter().map(|l| interval(&l.geodesic)).collect();
    let contains = |a: (f64, f64), b: (f64, f64)| a.0 <= b.0 && b.1 <= a.1 && a != b;
    // Laminar family: the parent is the smallest strictly containing interval.
    let mut parent = vec![None; leaves.len()];
    for k in 0..leaves.len() {
        let mut best: Option<usize> = None;
        for q in 0..leaves.len() {
            if q != k && contains(ivs[q], ivs[k]) {
                let better = match best {
                    None => true,
                    Some(b) => contains(ivs[b], ivs[q]),
                };
                if better {
                    best = Some(q);
                }
            }
        }
        parent[k] = best;
    }
    // Component 0 is the unbounded region; component k + 1 lies just inside leaf k.
    let mut comps: Vec<ModelComponent> = Vec::with_capacity(leaves.len() + 1);
    let crosses_axis = |iv: (f64, f64)| iv.0 < 0.0 && iv.1 > 0.0 && iv.1.is_finite();
    let is_axis = |k: usize| leaves[k].id == LeafId::Axis;
    let nested_chain = leaves.iter().enumerate().any(|(k, l)| {
        matches!(l.id, LeafId::Orbit { n, .. } if n.abs() == orbit_range) && crosses_axis(ivs[k])
    });
    comps.push(ModelComponent {
        outer: None,
        inner: (0..leaves.len()).filter(|&k| parent[k].is_none()).map(|k| leaves[k].id).collect(),
        meets_axis: true,
        truncated: nested_chain,
        image: Some(0),
    });
    for (k, l) in leaves.iter().enumerate() {
        let inner: Vec<LeafId> = (0..leaves.len()).filter(|&q| parent[q] == Some(k)).map(|q| leaves[q].id).collect();
        let meets_axis = is_axis(k) || crosses_axis(ivs[k]);
        let (truncated, image) = match l.id {
            LeafId::Axis => (false, Some(k + 1)),
            LeafId::Orbit { generator, n } => {
                let next = leaves.iter().position(|x| x.id == LeafId::Orbit { generator, n: n + 1 });
                (n.abs() == orbit_range, next.map(|q| q + 1))
            }
        };
        comps.push(ModelComponent { outer: Some(l.id), inner, meets_axis, truncated, image });
    }
    // The axis leaf bounds both sides; the outside component meets it too.
    let axis_component_fixed = comps
        .iter()
        .enumerate()
        .any(|(k, c)| c.meets_axis && !c.truncated && c.image == Some(k));
    ComponentGraph { components: comps, axis_component_fixed }
}

/// Sampled image Ψ(leaf) in U.
#[derive(Clone, Debug, PartialEq)]
pub struct LeafCurve {
    pub id: LeafId,
    /// Parameter `s` with model point `A(i e^s)`.
    pub params: Vec<f64>,
    pub points: Vec<C64>,
    /// Extrapolated boundary endpoints at `s → −∞` and `s → +∞`.
    pub endpoints: (Option<C64>, Option<C64>),
    pub truncated: bool,
}

impl LeafCurve {
    pub fn model_point(geodesic: &Geodesic, s: f64) -> C64 {
        moebius_alpha_to(geodesic).apply(C64::new(0.0, s.exp()))
    }
}

/// Aitken Δ² limit of three terms of a geometrically converging sequence.
fn aitken(x0: C64, x1: C64, x2: C64) -> C64 {
    let d1 = x1 - x0;
    let d2 = x2 - x1;
    let den = d2 - d1;
    if den.norm() < 1e-300 {
        x2
    } else {
        x2 - d2 * d2 / den
    }
}

/// Push leaves through Ψ with adaptive refinement in the leaf parameter.
pub fn push_forward(lam: &BakerLamination, psi: &Uniformizer, span: f64, exec: Exec) -> Vec<LeafCurve> {
    let ids: Vec<LeafId> = lam.leaves.iter().map(|l| l.id).collect();
    exec.map(ids.len(), |k| push_leaf(lam, psi, ids[k], span))
}

pub fn push_leaf(lam: &BakerLamination, psi: &Uniformizer, id: LeafId, span: f64) -> LeafCurve {
    let g = lam.leaf(id).expect("leaf of this lamination");
    let (s_lo, s_hi) = match id {
        // The axis runs from p (s → −∞) to the far left; stop at |ζ| = e^span.
        LeafId::Axis => (-span, span.min(4.5)),
        _ => (-span, span),
    };
    let eval = |s: f64| psi.psi_eval(LeafCurve::model_point(&g, s)).ok();
    let mut params: Vec<f64> = (0..=64).map(|k| s_lo + (s_hi - s_lo) * k as f64 / 64.0).collect();
    let mut points: Vec<Option<C64>> = params.iter().map(|&s| eval(s)).collect();
    let mut truncated = points.iter().any(|p| p.is_none());
    for _ in 0..8 {
        let valid: Vec<C64> = points.iter().flatten().copied().collect();
        if valid.len() < 2 {
            break;
        }
        let (mut lo, mut hi) = (valid[0], valid[0]);
        for z in &valid {
            lo = C64::new(lo.re.min(z.re), lo.im.min(z.im));
            hi = C64::new(hi.re.max(z.re), hi.im.max(z.im));
        }
        let tol = (hi - lo).norm() / 150.0;
        let mut np = vec![params[0]];
        let mut nz = vec![points[0]];
        let mut refined = false;
        for w in 1..params.len() {
            if let (Some(a), Some(b)) = (points[w - 1], points[w]) {
                if (a - b).norm() > tol && params[w] - params[w - 1] > 1e-6 {
                    let mid = 0.5 * (params[w - 1] + params[w]);
                    np.push(mid);
                    nz.push(eval(mid));
                    refined = true;
                }
            }
            np.push(params[w]);
            nz.push(points[w]);
        }
        params = np;
        points = nz;
        if !refined || params.len() > 4000 {
            break;
        }
    }
    truncated |= points.iter().any(|p| p.is_none());
    let mut ps = Vec::with_capacity(params.len());
    let mut zs = Vec::with_capacity(params.len());
    for (s, z) in params.into_iter().zip(points) {
        if let Some(z) = z {
            ps.push(s);
            zs.push(z);
        }
    }
    let ext = |s0: f64, dir: f64| -> Option<C64> {
        let x: Vec<C64> = (0..3).map(|k| eval(s0 + dir * k as f64)).collect::<Option<Vec<_>>>()?;
        Some(aitken(x[0], x[1], x[2]))
    };
    let endpoints = match id {
        LeafId::Axis => (ext(s_lo, -1.0), None),
        _ => (ext(s_lo, -1.0), ext(s_hi, 1.0)),
    };
    LeafCurve { id, params: ps, points: zs, endpoints, truncated }
}

/// A sampled leaf of the grand orbit `∪ f^{-k}(ΨΛ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BandCurve {
    pub leaf: LeafId,
    pub depth: usize,
    pub points: Vec<C64>,
    pub diameter: f64,
}

#[derive(Clone, Debug, Default)]
pub struct BandCollection {
    pub curves: Vec<BandCurve>,
    pub depth: usize,
    /// Curve pieces lost to branch failures.
    pub gaps: usize,
    /// Curves below the diameter floor, not expanded further.
    pub dropped_small: usize,
    /// Curves beyond the per-depth budget.
    pub dropped_budget: usize,
}

impl BandCollection {
    fn at_depth(&self, k: usize) -> impl Iterator<Item = &BandCurve> {
        self.curves.iter().filter(move |c| c.depth == k)
    }

    pub fn max_diameter_per_depth(&self) -> Vec<f64> {
        (0..=self.depth).map(|k| self.at_depth(k).map(|c| c.diameter).fold(0.0, f64::max)).collect()
    }

    pub fn median_diameter_per_depth(&self) -> Vec<Option<f64>> {
        (0..=self.depth)
            .map(|k| {
                let mut d: Vec<f64> = self.at_depth(k).map(|c| c.diameter).collect();
                if d.is_empty() {
                    return None;
                }
                d.sort_by(f64::total_cmp);
                Some(d[d.len() / 2])
            })
            .collect()
    }

    /// Smallest distance between sample points of two different curves,
    /// with the indices of the curves attaining it. Only points within
    /// `reach` of each other are compared.
    pub fn min_separation(&self, reach: f64) -> Option<(f64, usize, usize)> {
        let mut buckets: HashMap<(i64, i64), Vec<(usize, C64)>> = HashMap::new();
        for (c, curve) in self.curves.iter().enumerate() {
            for &z in &curve.points {
                let key = ((z.re / reach).floor() as i64, (z.im / reach).floor() as i64);
                buckets.entry(key).or_default().push((c, z));
            }
        }
        let mut best: Option<(f64, usize, usize)> = None;
        let mut keys: Vec<_> = buckets.keys().copied().collect();
        keys.sort_unstable();
        for key in keys {
            let here = &buckets[&key];
            for dx in -1..=1 {
                for dy in -1..=1 {
                    let Some(there) = buckets.get(&(key.0 + dx, key.1 + dy)) else { continue };
                    for &(c1, z1) in here {
                        for &(c2, z2) in there {
                            if c1 < c2 {
                                let d = (z1 - z2).norm();
                                if best.map_or(true, |b| d < b.0) {
                                    best = Some((d, c1, c2));
                                }
                            }
                        }
                    }
                }
            }
        }
        best
    }
}

fn bbox_diameter(points: &[C64]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let (mut lo, mut hi) = (points[0], points[0]);
    for z in points {
        lo = C64::new(lo.re.min(z.re), lo.im.min(z.im));
        hi = C64::new(hi.re.max(z.re), hi.im.max(z.im));
    }
    (hi - lo).norm()
}

/// All preimages of `w` with `|z| ≤ r_max`, one Newton solve per log branch.
pub fn preimages(f: &EntireMap, w: C64, r_max: f64) -> Vec<C64> {
    let m = f.m();
    let c = f.c();
    let j_max = (r_max / (2.0 * std::f64::consts::PI)).ceil() as i64 + 1;
    let mut seeds = vec![(w - c) / m];
    for j in -j_max..=j_max {
        let shift = C64::new(0.0, 2.0 * std::f64::consts::PI * j as f64);
        let mut z = C64::new((w.norm() + 2.0).ln(), shift.im);
        for _ in 0..8 {
            let arg = c + z * m - w;
            if arg.norm() == 0.0 {
                break;
            }
            z = arg.ln() + shift;
        }
        seeds.push(z);
    }
    let mut out: Vec<C64> = Vec::new();
    for s in seeds {
        if let Ok(z) = f.inverse_branch(w, s) {
            if z.norm() <= r_max && out.iter().all(|q| (q - z).norm() > 1e-8) {
                out.push(z);
            }
        }
    }
    out
}

/// Continues a preimage of a polyline from a preimage `z0` of its first point.
fn lift_curve(f: &EntireMap, pts: &[C64], z0: C64, r_max: f64) -> (Vec<Vec<C64>>, usize) {
    let mut pieces = Vec::new();
    let mut cur = vec![z0];
    let mut gaps = 0;
    let mut z = z0;
    for w in 1..pts.len() {
        let dw = pts[w] - pts[w - 1];
        let d = f.deriv(z);
        let seed = z + dw / d;
        match f.inverse_branch(pts[w], seed) {
            Ok(zn) if (zn - seed).norm() <= 0.5 * (dw / d).norm() + 1e-9 && zn.norm() <= r_max => {
                cur.push(zn);
                z = zn;
            }
            _ => {
                gaps += 1;
                if cur.len() > 1 {
                    pieces.push(std::mem::take(&mut cur));
                }
                cur.clear();
                // Restart on the nearest preimage of the next point, if any.
                let restart = preimages(f, pts[w], r_max)
                    .into_iter()
                    .min_by(|a, b| (a - z).norm().total_cmp(&(b - z).norm()));
                match restart {
                    Some(r) if (r - z).norm() < 4.0 * (dw / d).norm() + 1e-6 => {
                        cur.push(r);
                        z = r;
                    }
                    _ => break,
                }
            }
        }
    }
    if cur.len() > 1 {
        pieces.push(cur);
    }
    (pieces, gaps)
}

/// Depth-0 leaves in U and their preimage leaves to depth `k_max`, within
/// `|z| ≤ r_max`. Curves with diameter below `min_diameter` are counted but
/// neither kept nor expanded; each depth keeps at most `budget` curves.
pub fn grand_orbit_bands(
    f: &EntireMap,
    psi: &Uniformizer,
    depth0: &[LeafCurve],
    k_max: usize,
    r_max: f64,
    min_diameter: f64,
    budget: usize,
    exec: Exec,
) -> BandCollection {
    let mut out = BandCollection { depth: k_max, ..Default::default() };
    let mut frontier: Vec<BandCurve> = Vec::new();
    for lc in depth0 {
        let pts: Vec<C64> = lc.points.iter().copied().filter(|z| z.norm() <= r_max).collect();
        if pts.len() < 2 {
            continue;
        }
        let diameter = crate::geometry::euclidean_diameter(&pts);
        if diameter < min_diameter {
            out.dropped_small += 1;
            continue;
        }
        frontier.push(BandCurve { leaf: lc.id, depth: 0, points: pts, diameter });
    }
    out.curves.extend(frontier.iter().cloned());
    for k in 1..=k_max {
        let lifted = exec.map(frontier.len(), |q| {
            let curve = &frontier[q];
            let first = curve.points[0];
            let mut seeds = preimages(f, first, r_max + 1.0);
            if k == 1 {
                // The U-branch preimage of a depth-0 leaf is another depth-0 leaf.
                if let Ok(back) = psi.koenigs.backward(first) {
                    seeds.retain(|z| (z - back).norm() > 1e-6);
                }
            }
            let mut res = Vec::new();
            let mut gaps = 0;
            for s in seeds {
                let (pieces, g) = lift_curve(f, &curve.points, s, r_max);
                gaps += g;
                for p in pieces {
                    res.push(p);
                }
            }
            (curve.leaf, res, gaps)
        });
        let mut next = Vec::new();
        for (leaf, pieces, gaps) in lifted {
            out.gaps += gaps;
            for p in pieces {
                if bbox_diameter(&p) < min_diameter {
                    out.dropped_small += 1;
                    continue;
                }
                if next.len() >= budget {
                    out.dropped_budget += 1;
                    continue;
                }
                let diameter = crate::geometry::euclidean_diameter(&p);
                next.push(BandCurve { leaf, depth: k, points: p, diameter });
            }
        }
        out.curves.extend(next.iter().cloned());
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    out
}
