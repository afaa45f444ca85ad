//! One PASS/FAIL line per acceptance criterion.
//!
//! `PINCHLAB_ACCEPTANCE=1,2,9` restricts the run to the listed criteria.
//! The process exits 0 even when criteria fail, unless
//! `PINCHLAB_ACCEPTANCE_STRICT` is set.

#[path = "support/oracle.rs"]
mod oracle;

use pinchlab::beltrami::{BeltramiField, SolveOptions, Solver};
use pinchlab::config::{parse_config, RunConfig};
use pinchlab::entire::{EntireMap, FixedPointClass};
use pinchlab::exec::Exec;
use pinchlab::fatou::{julia_density, raster_classify, Classifier, OrbitTag};
use pinchlab::grid::{Grid, Region};
use pinchlab::lamination::{make_lamination, Case, LaminationError};
use pinchlab::pinch::{component_report, limit_classify, prepare, run_schedule, PinchRun, Setup};
use pinchlab::report::{non_increasing, strictly_increasing, BOUNDED_FACTOR, COLLAPSE_RATIO, DIVERGENCE_THRESHOLD, MONOTONE_SLACK};
use pinchlab::uniformizer::{boundary_fixed_point, build_uniformizer, koenigs_chart};
use pinchlab::C64;
use rand::rngs::StdRng;
use rand::SeedableRng;
use std::f64::consts::{LN_2, PI};
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome, String> {
    Ok(Outcome { pass, detail })
}

fn config(name: &str) -> RunConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    parse_config(&std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display())))
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

struct Scheduled {
    setup: Setup,
    run: PinchRun,
    elapsed: Duration,
}

fn scheduled(cfg: RunConfig) -> Result<Scheduled, String> {
    let t0 = Instant::now();
    let setup = prepare(&cfg, Exec::default()).map_err(|e| e.to_string())?;
    let run = run_schedule(&setup, Exec::default());
    Ok(Scheduled { setup, run, elapsed: t0.elapsed() })
}

fn reference() -> &'static Result<Scheduled, String> {
    static R: OnceLock<Result<Scheduled, String>> = OnceLock::new();
    R.get_or_init(|| scheduled(config("reference.cfg")))
}

fn axis() -> &'static Result<Scheduled, String> {
    static R: OnceLock<Result<Scheduled, String>> = OnceLock::new();
    R.get_or_init(|| scheduled(config("axis.cfg")))
}

fn case_b() -> &'static Result<Scheduled, String> {
    static R: OnceLock<Result<Scheduled, String>> = OnceLock::new();
    R.get_or_init(|| scheduled(config("case_b.cfg")))
}

fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (g(mid) < 0.0) == (g(lo) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn fixed_points() -> Result<Outcome, String> {
    let f = EntireMap::bergweiler();
    let p_oracle = bisect(|x| x.exp() - x - (2.0 - LN_2), -2.0, 0.0);
    let a_oracle = 2.0 - p_oracle.exp();
    let fps = f.fixed_points_real(-5.0, 5.0).map_err(|e| e.to_string())?;
    let sa = fps.iter().find(|fp| fp.class == FixedPointClass::Superattracting).ok_or("no superattracting fixed point")?;
    let rep = fps.iter().find(|fp| fp.class == FixedPointClass::Repelling).ok_or("no repelling fixed point")?;
    let pass = (sa.z - LN_2).abs() < 1e-12
        && sa.multiplier.abs() < 1e-12
        && sa.residual < 1e-12
        && rep.residual < 1e-12
        && rep.z > -0.91
        && rep.z < -0.89
        && rep.multiplier > 1.58
        && rep.multiplier < 1.61
        && (rep.z - p_oracle).abs() < 1e-12
        && (rep.multiplier - a_oracle).abs() < 1e-10;
    outcome(pass, format!("log 2 multiplier {:.1e}; p = {:.15} (oracle {:.15}), a = {:.12}", sa.multiplier, rep.z, p_oracle, rep.multiplier))
}

fn half_plane() -> Result<Outcome, String> {
    let grid = Grid::new(Region::square(C64::new(0.0, 0.0), 8.0), 512);
    let c = Classifier::new(EntireMap::bergweiler(), 1000, 50.0).map_err(|e| e.to_string())?;
    let r = raster_classify(&c, grid, Exec::default());
    let (mut left, mut baker) = (0usize, 0usize);
    for (k, cell) in r.cells.iter().enumerate() {
        if grid.center_of(k).re < -2.0 {
            left += 1;
            baker += (cell.tag == OrbitTag::BakerEscape) as usize;
        }
    }
    let frac = baker as f64 / left as f64;
    outcome(frac >= 0.99, format!("{baker}/{left} cells with Re < -2 are BakerEscape ({:.4})", frac))
}

fn wandering_family() -> Result<Outcome, String> {
    let f = EntireMap::bergweiler();
    let mut z = C64::new(LN_2, 4.0 * PI);
    let mut worst = 0.0f64;
    for n in 1..=20 {
        z = f.eval(z);
        let expect = 4.0 * PI * 2f64.powi(n);
        worst = worst.max((z.im - expect).abs() / expect);
    }
    outcome(worst < 1e-9, format!("max relative error {:.2e} over n <= 20", worst))
}

fn uniformizer() -> Result<Outcome, String> {
    let f = EntireMap::bergweiler();
    let p = boundary_fixed_point(&f).map_err(|e| e.to_string())?;
    let chart = koenigs_chart(&f, p).map_err(|e| e.to_string())?;
    let psi = build_uniformizer(&f, chart, 1024, Exec::default()).map_err(|e| e.to_string())?;
    let functional = psi.functional_residual(1000, Exec::default()).map_err(|e| e.to_string())?;
    let mut kappa = 0.0f64;
    for k in 0..100 {
        let z = p + C64::from_polar(0.3 * ((k % 10) as f64 + 1.0) / 10.0, 2.0 * PI * (k / 10) as f64 / 10.0 + 0.1);
        kappa = kappa.max(chart.conjugacy_residual(z).map_err(|e| e.to_string())?);
    }
    outcome(functional < 1e-3 && kappa < 1e-6, format!("functional residual {:.2e}, Koenigs residual {:.2e}", functional, kappa))
}

fn closed_form() -> Result<Outcome, String> {
    let grid = Grid::new(Region::square(C64::new(0.0, 0.0), 4.0), 512);
    let mu: Vec<C64> = grid.centers().map(|z| C64::new(if z.norm() < 1.0 { 0.5 } else { 0.0 }, 0.0)).collect();
    let field = BeltramiField::from_values(grid, 0.5, mu);
    let h = Solver::new(grid, Exec::default())
        .and_then(|s| s.solve(&field, &SolveOptions::default()))
        .map_err(|e| e.to_string())?;
    let mut err = 0.0f64;
    for (k, z) in grid.centers().enumerate() {
        let exact = if z.norm() < 1.0 { z + 0.5 * z.conj() } else { z + 0.5 / z };
        err = err.max((h.values[k] - exact).norm());
    }
    let res = h.beltrami_residual(&field.mu);
    outcome(err < 1e-2 && res < 1e-3, format!("sup grid error {:.2e}, residual {:.2e}", err, res))
}

fn diameters() -> Result<Outcome, String> {
    let s = reference().as_ref().map_err(|e| e.clone())?;
    let cfg = &s.setup.config;
    if !s.run.completed(&cfg.t_schedule) {
        return outcome(false, format!("schedule stopped after {} of {} t: {:?}", s.run.records.len(), cfg.t_schedule.len(), s.run.error));
    }
    let d = s.run.leaf_diameter_series();
    let worst = s.run.records.iter().map(|r| r.residual).fold(0.0, f64::max);
    let ratio = d[d.len() - 1] / d[0];
    let mono = non_increasing(&d, MONOTONE_SLACK);
    let fast = s.elapsed < Duration::from_secs(20 * 60);
    outcome(
        mono && ratio < COLLAPSE_RATIO && worst < cfg.residual_tol && fast,
        format!("final/initial {:.4}, non-increasing {mono}, max residual {:.2e}, {:.0} s", ratio, worst, s.elapsed.as_secs_f64()),
    )
}

fn regimes() -> Result<Outcome, String> {
    let r = reference().as_ref().map_err(|e| e.clone())?;
    let a = axis().as_ref().map_err(|e| e.clone())?;
    let same = r.setup.config.t_schedule == a.setup.config.t_schedule;
    let done = r.run.completed(&r.setup.config.t_schedule) && a.run.completed(&a.setup.config.t_schedule);
    let pa = a.run.divergence_probe(0);
    let pr = r.run.divergence_probe(0);
    let diverges = strictly_increasing(&pa) && pa.last().is_some_and(|&v| v > DIVERGENCE_THRESHOLD);
    let peak = pr.iter().copied().fold(0.0, f64::max);
    let bounded = !pr.is_empty() && peak < BOUNDED_FACTOR * pr[0];
    let total = r.elapsed + a.elapsed;
    let fast = total < Duration::from_secs(40 * 60);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
    outcome(
        same && done && diverges && bounded && fast,
        format!(
            "axis |h(p)|: {} ({}); (1, 1.3) peak/initial {:.3}; {:.0} s{}",
            fmt(&pa),
            a.run.error.as_deref().unwrap_or("completed"),
            peak / pr.first().copied().unwrap_or(f64::NAN),
            total.as_secs_f64(),
            if same { "" } else { "; schedules differ" }
        ),
    )
}

/// Combinatorial verdict and component-report verdict for one run.
fn verdicts(s: &Scheduled) -> Result<(Case, bool, bool, usize), String> {
    let case = s.setup.lamination.side_classify().map_err(|e| e.to_string())?;
    let comb = s.setup.lamination.complementary_components().axis_component_fixed;
    let h = s.run.final_map.as_ref().ok_or_else(|| format!("no map: {:?}", s.run.error))?;
    let grid = Grid::new(s.setup.grid.region, 512);
    let lim = limit_classify(&s.setup, h, grid, Exec::default()).map_err(|e| e.to_string())?;
    let rep = component_report(&s.setup, h, &lim, Exec::default());
    Ok((case, comb, rep.persistent_axis_component, rep.escaping_components))
}

fn case_verdicts() -> Result<Outcome, String> {
    let t0 = Instant::now();
    let a = reference().as_ref().map_err(|e| e.clone())?;
    let (case_a, comb_a, rep_a, n_a) = verdicts(a)?;
    let b = case_b().as_ref().map_err(|e| e.clone())?;
    let (case_b, comb_b, rep_b, n_b) = verdicts(b)?;
    let ok_a = case_a == Case::A && comb_a && rep_a;
    let ok_b = case_b == Case::B && !comb_b && !rep_b;
    // The reference run is charged to criterion 6.
    let elapsed = t0.elapsed();
    outcome(
        ok_a && ok_b && b.run.completed(&b.setup.config.t_schedule) && elapsed < Duration::from_secs(20 * 60),
        format!(
            "(1, 1.3): {:?}, oracle persistent {comb_a}, report persistent {rep_a} ({n_a} components); \
             (-2, 1): {:?}, oracle persistent {comb_b}, report persistent {rep_b} ({n_b} components); {:.0} s",
            case_a,
            case_b,
            elapsed.as_secs_f64()
        ),
    )
}

fn validator() -> Result<Outcome, String> {
    let mut rng = StdRng::seed_from_u64(20_240_901);
    let mut disagree = 0;
    let mut tally = [0usize; 4];
    for _ in 0..10_000 {
        let (gens, axis, delta) = oracle::random_set(&mut rng, 2.0);
        let got = match make_lamination(2.0, &gens, axis, Some(delta), 2) {
            Ok(_) => Ok(()),
            Err(LaminationError::Violation { clause, .. }) => Err(clause),
            Err(e) => return Err(e.to_string()),
        };
        let want = oracle::verdict(2.0, &gens, axis, delta, 2);
        if got != want {
            disagree += 1;
        }
        let slot = match want {
            Ok(()) => 0,
            Err(pinchlab::lamination::Clause::II) => 1,
            Err(pinchlab::lamination::Clause::III) => 2,
            Err(_) => 3,
        };
        tally[slot] += 1;
    }
    outcome(
        disagree == 0,
        format!("{disagree} disagreements; oracle verdicts valid {}, crossing {}, shared endpoint {}, collar {}", tally[0], tally[1], tally[2], tally[3]),
    )
}

fn thin_at_infinity() -> Result<Outcome, String> {
    let c = Classifier::new(EntireMap::bergweiler(), 1000, 50.0).map_err(|e| e.to_string())?;
    let region = Region::square(C64::new(0.0, 0.0), 40.0);
    let radii = [10.0, 20.0, 40.0];
    let resolutions = [512, 1024, 2048];
    let mut curve = Vec::new();
    for &n in &resolutions {
        let r = raster_classify(&c, Grid::new(region, n), Exec::default());
        let d: Vec<f64> = radii.iter().map(|&rad| julia_density(&r, C64::new(0.0, 0.0), rad)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
        curve.push(d);
    }
    let below = curve[2].iter().all(|&d| d < 0.5);
    let mono = (0..radii.len()).all(|i| {
        let s: Vec<f64> = curve.iter().map(|d| d[i]).collect();
        non_increasing(&s, 0.0)
    });
    let text = radii
        .iter()
        .enumerate()
        .map(|(i, r)| format!("r={r}: {}", curve.iter().map(|d| format!("{:.4}", d[i])).collect::<Vec<_>>().join(" -> ")))
        .collect::<Vec<_>>()
        .join("; ");
    outcome(below && mono, format!("{text} (resolutions 512 -> 1024 -> 2048)"))
}

type Criterion = (u32, &'static str, f64, fn() -> Result<Outcome, String>);

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "fixed-point suite", 1.0, fixed_points),
        (2, "Baker half-plane", 30.0, half_plane),
        (3, "wandering-family recursion", 1.0, wandering_family),
        (4, "uniformizer certificate", 300.0, uniformizer),
        (5, "Beltrami closed form", 120.0, closed_form),
        (6, "leaf diameter collapse", f64::INFINITY, diameters),
        (7, "regime separation", f64::INFINITY, regimes),
        (8, "case verdicts", f64::INFINITY, case_verdicts),
        (9, "lamination validator", 60.0, validator),
        (10, "thin at infinity", 600.0, thin_at_infinity),
    ];
    let only: Option<Vec<u32>> = std::env::var("PINCHLAB_ACCEPTANCE")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut failed = 0;
    for (n, name, budget, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&n)) {
            continue;
        }
        let t0 = Instant::now();
        let res = run();
        let secs = t0.elapsed().as_secs_f64();
        let (pass, detail) = match res {
            Ok(o) if secs > budget => (false, format!("{} [over budget: {:.1} s > {} s]", o.detail, secs, budget)),
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += !pass as usize;
        println!("{} criterion {n:>2} ({name}): {detail} [{:.1} s]", if pass { "PASS" } else { "FAIL" }, secs);
    }
    println!("acceptance: {failed} failing");
    if failed > 0 && std::env::var_os("PINCHLAB_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
