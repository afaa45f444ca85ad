//! The t-schedule: field assembly, solve, normalization and diagnostics,
//! plus the limit raster of `f_t = h_t ∘ f ∘ h_t⁻¹`.

use crate::beltrami::{pinch_profile, BeltramiError, PinchField, QcMap, SolveOptions, Solver, Truncation};
use crate::config::RunConfig;
use crate::entire::{EntireMap, MapError};
use crate::exec::Exec;
use crate::fatou::{baker_domain_mask, mask_components, raster_classify, Classifier, FatouError, OrbitClass, OrbitTag, Raster};
use crate::geometry::chordal_diameter;
use crate::grid::{Grid, Region};
use crate::lamination::{make_lamination, push_forward, BakerLamination, LaminationError, LeafCurve, LeafId};
use crate::uniformizer::{boundary_fixed_point, build_uniformizer, koenigs_chart, Uniformizer, UniformizerError};
use crate::C64;
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

/// Margin, in cells, between the field support and the grid edge.
pub const SUPPORT_MARGIN: usize = 8;
/// Points left of this line count as U once outside the mask grid.
pub const U_HALF_PLANE: f64 = -2.5;
/// Leaf parameter span used when pushing leaves into U.
pub const LEAF_SPAN: f64 = 8.0;
/// Pinch zones narrower than this many cells count as unresolved.
pub const MIN_ZONE_CELLS: f64 = 4.0;
/// Components smaller than this many cells abstain from the fixed test.
pub const MIN_COMPONENT: usize = 40;

#[derive(Debug, Error)]
pub enum PinchError {
    #[error("map: {0}")]
    Map(#[from] MapError),
    #[error("uniformizer: {0}")]
    Uniformizer(#[from] UniformizerError),
    #[error("lamination: {0}")]
    Lamination(#[from] LaminationError),
    #[error("classification: {0}")]
    Fatou(#[from] FatouError),
    #[error("stage {stage} at t = {t}: {source}")]
    Stage { stage: &'static str, t: f64, source: BeltramiError },
    #[error("annulus boundary meets the field support at t = {t}")]
    AnnulusMeetsSupport { t: f64 },
    #[error("{0}")]
    Setup(String),
}

/// Everything a schedule shares across t.
#[derive(Clone, Debug)]
pub struct Setup {
    pub config: RunConfig,
    pub map: EntireMap,
    pub psi: Uniformizer,
    pub lamination: BakerLamination,
    pub grid: Grid,
    pub raster: Raster,
    pub u_mask: Vec<bool>,
    pub curves: Vec<LeafCurve>,
    pub p: C64,
    pub norm_points: (C64, C64),
    pub marked: Vec<C64>,
    pub l_inner: f64,
    pub l_outer: f64,
}

/// The two complex repelling fixed points near `2.1 ± 7.7i`.
pub fn default_normalization(f: &EntireMap) -> Result<(C64, C64), MapError> {
    let p = f.fixed_point_near(C64::new(2.1, 7.7))?;
    let q = f.fixed_point_near(C64::new(2.1, -7.7))?;
    Ok((p, q))
}

pub fn prepare(config: &RunConfig, exec: Exec) -> Result<Setup, PinchError> {
    let map = config.map.build()?;
    let p = boundary_fixed_point(&map)?;
    let chart = koenigs_chart(&map, p)?;
    let psi = build_uniformizer(&map, chart, config.psi_resolution, exec)?;
    let lamination = make_lamination(psi.dilation, &config.leaves, config.axis, config.delta, config.orbit_range)?;
    let region = config.region;
    if (region.width() - region.height()).abs() > 1e-12 * region.width() {
        return Err(PinchError::Setup("the solver needs a square region".into()));
    }
    let grid = Grid::new(region, config.resolution);
    let classifier = Classifier::new(map, config.max_iter, config.escape_radius)?;
    let raster = raster_classify(&classifier, grid, exec);
    let u_mask = baker_domain_mask(&raster, U_HALF_PLANE);
    let curves = push_forward(&lamination, &psi, LEAF_SPAN, exec);
    let norm_points = match config.normalize {
        Some(pq) => pq,
        None => default_normalization(&map)?,
    };
    let marked = config.marked.clone().unwrap_or_else(|| vec![p]);
    let l_outer = config.l_outer.unwrap_or(lamination.delta);
    let l_inner = config.l_inner.unwrap_or(l_outer / 3.0);
    if l_outer > lamination.delta || l_inner >= l_outer {
        return Err(PinchError::Setup(format!(
            "pinch zone ({l_inner}, {l_outer}) must sit inside the band of thickness {}",
            lamination.delta
        )));
    }
    Ok(Setup {
        config: config.clone(),
        map,
        psi,
        lamination,
        grid,
        raster,
        u_mask,
        curves,
        p,
        norm_points,
        marked,
        l_inner,
        l_outer,
    })
}

impl Setup {
    pub fn field_at(&self, t: f64) -> Result<PinchField<'_>, BeltramiError> {
        Ok(PinchField {
            map: self.map,
            escape: self.psi.escape,
            lamination: &self.lamination,
            profile: pinch_profile(t, self.l_inner, self.l_outer)?,
            u_grid: self.grid,
            u_mask: &self.u_mask,
            u_half_plane: U_HALF_PLANE,
        })
    }

    pub fn truncation(&self) -> Truncation {
        Truncation { depth: self.config.depth, r_max: self.config.r_max, margin: SUPPORT_MARGIN, min_cells: MIN_ZONE_CELLS }
    }

    /// The leaf whose diameter is tracked: the first generator at `n = 0`,
    /// or the axis for axis-only laminations.
    pub fn primary_leaf(&self) -> LeafId {
        if self.lamination.generators.is_empty() {
            LeafId::Axis
        } else {
            LeafId::Orbit { generator: 0, n: 0 }
        }
    }

    pub fn curve(&self, id: LeafId) -> Option<&LeafCurve> {
        self.curves.iter().find(|c| c.id == id)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TRecord {
    pub t: f64,
    pub support: usize,
    pub sup_norm: f64,
    pub gaps: usize,
    pub unresolved: usize,
    pub iterations: usize,
    pub residual: f64,
    /// Jacobian minimum from the solver's derivative fields.
    pub jacobian_min: f64,
    /// Interior cells where the finite-difference Jacobian is not positive.
    pub folds: usize,
    /// Chordal diameter of `h_t` of the primary leaf closure.
    pub leaf_diam: f64,
    /// `|h_t(z)|` for each marked point.
    pub probe: Vec<f64>,
    pub modulus_lb: f64,
    pub conjugacy: f64,
    pub conjugacy_tol: f64,
}

impl TRecord {
    pub fn probe_abs(&self) -> f64 {
        self.probe.first().copied().unwrap_or(f64::NAN)
    }
}

#[derive(Clone, Debug)]
pub struct PinchRun {
    pub records: Vec<TRecord>,
    /// Normalized map at the last completed t.
    pub final_map: Option<QcMap>,
    pub error: Option<String>,
}

impl PinchRun {
    pub fn completed(&self, schedule: &[f64]) -> bool {
        self.error.is_none() && self.records.len() == schedule.len()
    }

    pub fn leaf_diameter_series(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.leaf_diam).collect()
    }

    pub fn divergence_probe(&self, k: usize) -> Vec<f64> {
        self.records.iter().map(|r| r.probe.get(k).copied().unwrap_or(f64::NAN)).collect()
    }

    pub fn modulus_series(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.modulus_lb).collect()
    }
}

/// `f_t(z) = h(f(h⁻¹(z)))`.
pub fn conjugate_eval(f: &EntireMap, h: &QcMap, z: C64) -> Result<C64, BeltramiError> {
    let w = h.inverse(z)?;
    let fw = f.eval_checked(w).map_err(|_| BeltramiError::Inversion(z))?;
    Ok(h.eval(fw))
}

/// Leaf closure `h(curve ∪ endpoints)` and its chordal diameter.
pub fn leaf_diameter(h: &QcMap, curve: &LeafCurve) -> f64 {
    let mut pts: Vec<C64> = curve.points.iter().map(|&z| h.eval(z)).collect();
    for e in [curve.endpoints.0, curve.endpoints.1].into_iter().flatten() {
        pts.push(h.eval(e));
    }
    chordal_diameter(&pts)
}

/// Lower bound on `mod h(A)` for the round annulus `r < |z − c| < R`: the
/// image contains the round annulus between the farthest inner and the
/// nearest outer boundary point around `h(c)`.
pub fn annulus_modulus_lb(h: &QcMap, c: C64, r: f64, big: f64) -> f64 {
    let hc = h.eval(c);
    let samples = 512;
    let mut inner = 0.0f64;
    let mut outer = f64::INFINITY;
    for k in 0..samples {
        let th = 2.0 * PI * k as f64 / samples as f64;
        let e = C64::from_polar(1.0, th);
        inner = inner.max((h.eval(c + e * r) - hc).norm());
        outer = outer.min((h.eval(c + e * big) - hc).norm());
    }
    if outer > inner {
        (outer / inner).ln() / (2.0 * PI)
    } else {
        0.0
    }
}

fn annulus_meets_support(grid: &Grid, mu: &[C64], c: C64, r: f64, big: f64) -> bool {
    let samples = 2048;
    [r, big].iter().any(|&rad| {
        (0..samples).any(|k| {
            let z = c + C64::from_polar(rad, 2.0 * PI * k as f64 / samples as f64);
            grid.locate(z).is_some_and(|(i, j)| mu[grid.index(i, j)].norm() > 0.0)
        })
    })
}

/// Probe points for the conjugacy certificate: a 10 × 10 lattice inside
/// the region, away from the margin.
pub fn probe_points(region: &Region) -> Vec<C64> {
    let mut out = Vec::with_capacity(100);
    for j in 0..10 {
        for i in 0..10 {
            let x = region.re_lo + region.width() * (0.1 + 0.8 * (i as f64 + 0.37) / 10.0);
            let y = region.im_lo + region.height() * (0.1 + 0.8 * (j as f64 + 0.61) / 10.0);
            out.push(C64::new(x, y));
        }
    }
    out
}

/// `(sup |f_t(h z) − h(f z)|, 5 × interpolation error estimate)` over probes.
pub fn conjugacy_certificate(f: &EntireMap, h: &QcMap, probes: &[C64]) -> (f64, f64) {
    let mut err = 0.0f64;
    let mut interp = 0.0f64;
    for &z in probes {
        let hz = h.eval(z);
        let lhs = conjugate_eval(f, h, hz);
        let rhs = f.eval_checked(z).map(|w| h.eval(w));
        match (lhs, rhs) {
            (Ok(a), Ok(b)) => err = err.max((a - b).norm()),
            _ => err = f64::INFINITY,
        }
        // Bilinear against a half-cell shifted sample of the same surface.
        let d = 0.5 * h.grid.dx();
        let mid = 0.25 * (h.eval(z + d) + h.eval(z - d) + h.eval(z + C64::new(0.0, d)) + h.eval(z - C64::new(0.0, d)));
        interp = interp.max((mid - hz).norm());
    }
    (err, 5.0 * interp.max(1e-12))
}

pub fn run_schedule(setup: &Setup, exec: Exec) -> PinchRun {
    run_schedule_with(setup, exec, |_, _| {})
}

/// Runs every t of the schedule; `frame` sees each accepted record and map.
/// A failure stops the schedule and keeps the earlier records.
pub fn run_schedule_with(setup: &Setup, exec: Exec, mut frame: impl FnMut(&TRecord, &QcMap)) -> PinchRun {
    let cfg = &setup.config;
    let opts = SolveOptions {
        max_iter: cfg.solver_max_iter,
        tol: cfg.solver_tol,
        residual_tol: cfg.residual_tol,
        ..SolveOptions::default()
    };
    let mut run = PinchRun { records: Vec::new(), final_map: None, error: None };
    let solver = match Solver::new(setup.grid, exec) {
        Ok(s) => s,
        Err(e) => {
            run.error = Some(e.to_string());
            return run;
        }
    };
    let probes = probe_points(&setup.grid.region);
    let primary = setup.curve(setup.primary_leaf()).cloned();
    let (ac, a_in, a_out) = cfg.annulus;
    for &t in &cfg.t_schedule {
        let result = (|| -> Result<(TRecord, QcMap), PinchError> {
            let stage = |stage, source| PinchError::Stage { stage, t, source };
            let pf = setup.field_at(t).map_err(|e| stage("profile", e))?;
            let field = pf.assemble(setup.grid, setup.truncation(), exec);
            if annulus_meets_support(&setup.grid, &field.mu, ac, a_in, a_out) {
                return Err(PinchError::AnnulusMeetsSupport { t });
            }
            let h = solver.solve(&field, &opts).map_err(|e| stage("solve", e))?;
            let (p, q) = setup.norm_points;
            let h = h.normalize(p, q).map_err(|e| stage("normalize", e))?;
            let jacobian_min = h.jacobian_min();
            let folds = h.fd_jacobian().into_iter().filter(|&j| j <= 0.0).count();
            let leaf_diam = primary.as_ref().map_or(f64::NAN, |c| leaf_diameter(&h, c));
            let probe = setup.marked.iter().map(|&z| h.eval(z).norm()).collect();
            let modulus_lb = annulus_modulus_lb(&h, ac, a_in, a_out);
            let (conjugacy, conjugacy_tol) = conjugacy_certificate(&setup.map, &h, &probes);
            let rec = TRecord {
                t,
                support: field.support_len(),
                sup_norm: field.sup_norm,
                gaps: field.gaps,
                unresolved: field.unresolved,
                iterations: h.history.len().saturating_sub(1),
                residual: h.residual,
                jacobian_min,
                folds,
                leaf_diam,
                probe,
                modulus_lb,
                conjugacy,
                conjugacy_tol,
            };
            Ok((rec, h))
        })();
        match result {
            Ok((rec, h)) => {
                frame(&rec, &h);
                run.records.push(rec);
                run.final_map = Some(h);
            }
            Err(e) => {
                run.error = Some(e.to_string());
                break;
            }
        }
    }
    run
}

#[derive(Clone, Debug, Serialize)]
pub struct ComponentSummary {
    pub cells: usize,
    pub sampled: usize,
    pub landed: usize,
    pub same: usize,
    pub fixed: Option<bool>,
    pub meets_axis: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComponentReport {
    pub components: Vec<ComponentSummary>,
    /// A G-fixed escaping component contains part of `h_t(λ_∞)`.
    pub persistent_axis_component: bool,
    pub escaping_components: usize,
}

#[derive(Clone, Debug)]
pub struct LimitRaster {
    pub raster: Raster,
    /// Escaping cells within about one pulled-back cell of the Julia set.
    /// Cell centres almost never land on the boundary curves between
    /// escaping components, so these cells stand in for them.
    pub boundary: Vec<bool>,
    pub inversion_failures: usize,
}

/// Orbit classes of `f_t`: the class of `w` is the f-class of `h⁻¹(w)`.
pub fn limit_classify(setup: &Setup, h: &QcMap, grid: Grid, exec: Exec) -> Result<LimitRaster, PinchError> {
    let cfg = &setup.config;
    let classifier = Classifier::new(setup.map, cfg.max_iter, cfg.escape_radius)?;
    let pulled: Vec<Option<C64>> = exec.map(grid.len(), |k| h.inverse(grid.center_of(k)).ok());
    let cells: Vec<(OrbitClass, bool)> = exec.map(grid.len(), |k| {
        let Some(z) = pulled[k] else {
            return (OrbitClass { tag: OrbitTag::Undecided, iterations: 0, last: grid.center_of(k) }, false);
        };
        let class = classifier.classify(z);
        let (i, j) = grid.coords(k);
        let mut size = 0.0f64;
        for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
            let (a, b) = (i as i64 + di, j as i64 + dj);
            if a < 0 || b < 0 || a >= grid.n as i64 || b >= grid.n as i64 {
                continue;
            }
            if let Some(y) = pulled[grid.index(a as usize, b as usize)] {
                size = size.max((y - z).norm());
            }
        }
        let near = classifier.boundary_distance(z, &class).is_some_and(|d| d < size);
        (class, near)
    });
    let failures = pulled.iter().filter(|z| z.is_none()).count();
    let (cells, boundary) = cells.into_iter().unzip();
    Ok(LimitRaster { raster: Raster { grid, cells }, boundary, inversion_failures: failures })
}

/// Marks the cells crossed by the polyline (supercover), so that the mark
/// blocks 4-connectivity across it.
pub fn rasterize_polyline(grid: &Grid, pts: &[C64], mark: &mut [bool]) {
    let h = grid.dx().min(grid.dy());
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(a.re.is_finite() && b.re.is_finite()) {
            continue;
        }
        let steps = (((b - a).norm() / (0.25 * h)).ceil() as usize).clamp(1, 1 << 20);
        for s in 0..=steps {
            let z = a + (b - a) * (s as f64 / steps as f64);
            if let Some((i, j)) = grid.locate(z) {
                mark[grid.index(i, j)] = true;
            }
        }
    }
    // Close diagonal steps so the mark is 4-connected.
    let n = grid.n;
    let orig = mark.to_vec();
    for j in 0..n - 1 {
        for i in 0..n - 1 {
            let k = grid.index(i, j);
            if orig[k] && orig[k + n + 1] && !orig[k + 1] && !orig[k + n] {
                mark[k + 1] = true;
            }
            if orig[k + 1] && orig[k + n] && !orig[k] && !orig[k + n + 1] {
                mark[k] = true;
            }
        }
    }
}

/// Escaping components of the limit raster minus its boundary cells, cut
/// along the deformed depth-0 leaves. Each is tested for invariance under
/// `f_t` by sampling.
pub fn component_report(setup: &Setup, h: &QcMap, lim: &LimitRaster, exec: Exec) -> ComponentReport {
    let grid = lim.raster.grid;
    let mut cut = vec![false; grid.len()];
    for c in &setup.curves {
        if c.id == LeafId::Axis {
            continue;
        }
        let mut pts: Vec<C64> = Vec::with_capacity(c.points.len() + 2);
        if let Some(e) = c.endpoints.0 {
            pts.push(h.eval(e));
        }
        pts.extend(c.points.iter().map(|&z| h.eval(z)));
        if let Some(e) = c.endpoints.1 {
            pts.push(h.eval(e));
        }
        rasterize_polyline(&grid, &pts, &mut cut);
    }
    let mask: Vec<bool> = (0..grid.len())
        .map(|k| lim.raster.cells[k].tag == OrbitTag::BakerEscape && !lim.boundary[k] && !cut[k])
        .collect();
    let comps = mask_components(&grid, &mask);
    let mut label = vec![usize::MAX; grid.len()];
    for (c, comp) in comps.iter().enumerate() {
        for &k in &comp.cells {
            label[k] = c;
        }
    }
    // Samples of h_t(λ_∞) = h_t(Ψ(i y)).
    let axis_pts: Vec<C64> = (0..400)
        .filter_map(|k| {
            let s = -LEAF_SPAN + (LEAF_SPAN + 4.5) * k as f64 / 399.0;
            setup.psi.psi_eval(C64::new(0.0, s.exp())).ok().map(|z| h.eval(z))
        })
        .collect();
    let summaries = exec.map(comps.len(), |c| {
        let comp = &comps[c];
        let meets_axis = axis_pts.iter().any(|&w| grid.locate(w).is_some_and(|(i, j)| label[grid.index(i, j)] == c));
        if comp.count() < MIN_COMPONENT {
            return ComponentSummary { cells: comp.count(), sampled: 0, landed: 0, same: 0, fixed: None, meets_axis };
        }
        let stride = (comp.count() / 64).max(1);
        let (mut sampled, mut landed, mut same) = (0, 0, 0);
        for &k in comp.cells.iter().step_by(stride) {
            sampled += 1;
            let Ok(w) = conjugate_eval(&setup.map, h, grid.center_of(k)) else { continue };
            if let Some((i, j)) = grid.locate(w) {
                landed += 1;
                if label[grid.index(i, j)] == c {
                    same += 1;
                }
            }
        }
        let fixed = if landed == 0 { None } else { Some(2 * same > landed) };
        ComponentSummary { cells: comp.count(), sampled, landed, same, fixed, meets_axis }
    });
    let persistent_axis_component = summaries.iter().any(|s| s.meets_axis && s.fixed == Some(true));
    ComponentReport { escaping_components: summaries.len(), components: summaries, persistent_axis_component }
}
