use clap::{Parser, Subcommand};
use pinchlab::config::{parse_config, RunConfig};
use pinchlab::exec::{init_threads_from_env, Exec};
use pinchlab::fatou::{raster_classify, Classifier, Raster};
use pinchlab::grid::Grid;
use pinchlab::lamination::{make_lamination, push_forward};
use pinchlab::pinch::{component_report, limit_classify, prepare, run_schedule_with, LEAF_SPAN};
use pinchlab::report::{self, Row};
use pinchlab::uniformizer::{boundary_fixed_point, build_uniformizer, koenigs_chart};
use pinchlab::{render, C64};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "pinchlab", about = "Pinching deformations of univalent Baker domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Orbit-class raster of the base map.
    Classify(Args),
    /// Uniformizer table and its certificates.
    Uniformize(Args),
    /// Validate a lamination and push its leaves into the Baker domain.
    Laminate(Args),
    /// Run the pinching schedule.
    Pinch(Args),
    /// Raster image with the lamination overlaid.
    Render(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

type Res<T> = Result<T, Box<dyn std::error::Error>>;

fn load(args: &Args) -> Res<(RunConfig, PathBuf)> {
    let text = std::fs::read_to_string(&args.config)?;
    let cfg = parse_config(&text)?;
    let out = args.out.clone().unwrap_or_else(|| cfg.out.clone());
    std::fs::create_dir_all(&out)?;
    Ok((cfg, out))
}

fn json<T: Serialize>(path: &Path, value: &T) -> Res<()> {
    report::save(path, |w| Ok(report::write_json(value, w)?))?;
    Ok(())
}

fn base_raster(cfg: &RunConfig, exec: Exec) -> Res<Raster> {
    let map = cfg.map.build()?;
    let classifier = Classifier::new(map, cfg.max_iter, cfg.escape_radius)?;
    Ok(raster_classify(&classifier, Grid::new(cfg.region, cfg.resolution), exec))
}

#[derive(Serialize)]
struct ClassifySummary {
    resolution: usize,
    counts: Vec<(String, usize)>,
}

fn classify(args: &Args, exec: Exec) -> Res<bool> {
    let (cfg, out) = load(args)?;
    let r = base_raster(&cfg, exec)?;
    render::render_raster(&r, &out.join("classes.png"))?;
    report::save(&out.join("counts.csv"), |w| Ok(report::write_counts(&r, w)?))?;
    let counts = pinchlab::fatou::OrbitTag::ALL.iter().map(|t| (t.name().to_string(), r.counts()[t.index()])).collect();
    json(&out.join("classify.json"), &ClassifySummary { resolution: cfg.resolution, counts })?;
    Ok(true)
}

#[derive(Serialize)]
struct UniformizeSummary {
    p: (f64, f64),
    multiplier: (f64, f64),
    dilation: f64,
    dilation_ratio: f64,
    quotient_modulus: f64,
    residual_bound: f64,
    boundary_level: f64,
    functional_residual: f64,
    koenigs_residual: f64,
    pass: bool,
}

fn uniformize(args: &Args, exec: Exec) -> Res<bool> {
    let (cfg, out) = load(args)?;
    let map = cfg.map.build()?;
    let p = boundary_fixed_point(&map)?;
    let chart = koenigs_chart(&map, p)?;
    let psi = build_uniformizer(&map, chart, cfg.psi_resolution, exec)?;
    psi.save(&out.join("psi.table"))?;
    let functional_residual = psi.functional_residual(1000, exec)?;
    let mut koenigs_residual = 0.0f64;
    for k in 0..64 {
        let z = p + C64::from_polar(0.05, 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / 64.0);
        koenigs_residual = koenigs_residual.max(chart.conjugacy_residual(z)?);
    }
    let pass = functional_residual < 1e-3 && koenigs_residual < 1e-6;
    json(
        &out.join("uniformize.json"),
        &UniformizeSummary {
            p: (p.re, p.im),
            multiplier: (psi.multiplier.re, psi.multiplier.im),
            dilation: psi.dilation,
            dilation_ratio: psi.dilation_ratio(),
            quotient_modulus: psi.quotient_modulus(),
            residual_bound: psi.residual_bound,
            boundary_level: psi.boundary_level,
            functional_residual,
            koenigs_residual,
            pass,
        },
    )?;
    Ok(pass)
}

fn laminate(args: &Args, exec: Exec) -> Res<bool> {
    let (cfg, out) = load(args)?;
    let map = cfg.map.build()?;
    let p = boundary_fixed_point(&map)?;
    let psi = build_uniformizer(&map, koenigs_chart(&map, p)?, cfg.psi_resolution, exec)?;
    let lam = make_lamination(psi.dilation, &cfg.leaves, cfg.axis, cfg.delta, cfg.orbit_range)?;
    let curves = push_forward(&lam, &psi, LEAF_SPAN, exec);
    report::save(&out.join("leaves.csv"), |w| {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["leaf", "s", "re", "im"])?;
        for c in &curves {
            for (s, z) in c.params.iter().zip(&c.points) {
                wr.write_record([c.id.to_string(), format!("{s:?}"), format!("{:?}", z.re), format!("{:?}", z.im)])?;
            }
        }
        wr.flush()?;
        Ok(())
    })?;
    #[derive(Serialize)]
    struct LaminateSummary {
        delta: f64,
        min_leaf_distance: f64,
        case: Option<pinchlab::lamination::Case>,
        components: pinchlab::lamination::ComponentGraph,
    }
    json(
        &out.join("laminate.json"),
        &LaminateSummary {
            delta: lam.delta,
            min_leaf_distance: lam.min_leaf_distance,
            case: lam.side_classify().ok(),
            components: lam.complementary_components(),
        },
    )?;
    let r = base_raster(&cfg, exec)?;
    let lines: Vec<Vec<C64>> = curves.iter().map(|c| c.points.clone()).collect();
    render::render_with_leaves(&r, &lines, &out.join("laminate.png"))?;
    Ok(curves.iter().all(|c| !c.truncated))
}

fn render_cmd(args: &Args, exec: Exec) -> Res<bool> {
    let (cfg, out) = load(args)?;
    let r = base_raster(&cfg, exec)?;
    let mut lines = Vec::new();
    if !cfg.leaves.is_empty() || cfg.axis {
        let map = cfg.map.build()?;
        let p = boundary_fixed_point(&map)?;
        let psi = build_uniformizer(&map, koenigs_chart(&map, p)?, cfg.psi_resolution, exec)?;
        let lam = make_lamination(psi.dilation, &cfg.leaves, cfg.axis, cfg.delta, cfg.orbit_range)?;
        lines = push_forward(&lam, &psi, LEAF_SPAN, exec).into_iter().map(|c| c.points).collect();
    }
    render::render_with_leaves(&r, &lines, &out.join("render.png"))?;
    Ok(true)
}

#[derive(Serialize)]
struct PinchSummary {
    completed: bool,
    error: Option<String>,
    contracts: bool,
    diagnostics: report::Summary,
    records: Vec<pinchlab::pinch::TRecord>,
    combinatorial_case_a: bool,
    limit: Option<pinchlab::pinch::ComponentReport>,
}

fn pinch(args: &Args, exec: Exec) -> Res<bool> {
    let (cfg, out) = load(args)?;
    let setup = prepare(&cfg, exec)?;
    let frame_n = cfg.resolution.min(256);
    let frame_grid = Grid::new(cfg.region, frame_n);
    let mut frame_err = None;
    let mut idx = 0;
    let run = run_schedule_with(&setup, exec, |rec, h| {
        eprintln!("t = {:.6}: {} iterations, residual {:.2e}, leaf diam {:.4}", rec.t, rec.iterations, rec.residual, rec.leaf_diam);
        let res = (|| -> Res<()> {
            let lim = limit_classify(&setup, h, frame_grid, exec)?;
            let lines: Vec<Vec<C64>> = setup.curves.iter().map(|c| c.points.iter().map(|&z| h.eval(z)).collect()).collect();
            render::render_with_leaves(&lim.raster, &lines, &out.join(format!("frame_{idx:02}.png")))?;
            Ok(())
        })();
        if let Err(e) = res {
            frame_err.get_or_insert(e.to_string());
        }
        idx += 1;
    });
    if let Some(e) = frame_err {
        return Err(e.into());
    }
    let rows: Vec<Row> = run.records.iter().map(Row::from).collect();
    report::save(&out.join("diagnostics.csv"), |w| Ok(report::write_csv(&rows, w)?))?;
    let diagnostics = report::summarize(&rows, cfg.residual_tol, cfg.leaves.is_empty() && cfg.axis);
    let completed = run.completed(&cfg.t_schedule);
    let contracts = completed
        && run
            .records
            .iter()
            .all(|r| r.residual < cfg.residual_tol && r.jacobian_min > 0.0 && r.conjugacy < r.conjugacy_tol);
    let limit = match &run.final_map {
        Some(h) => {
            let lim = limit_classify(&setup, h, setup.grid, exec)?;
            render::render_raster(&lim.raster, &out.join("limit.png"))?;
            Some(component_report(&setup, h, &lim, exec))
        }
        None => None,
    };
    let summary = PinchSummary {
        completed,
        error: run.error.clone(),
        contracts,
        diagnostics,
        records: run.records.clone(),
        combinatorial_case_a: setup.lamination.complementary_components().axis_component_fixed,
        limit,
    };
    json(&out.join("summary.json"), &summary)?;
    Ok(contracts)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads_from_env() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let exec = Exec::default();
    let result = match &cli.command {
        Command::Classify(a) => classify(a, exec),
        Command::Uniformize(a) => uniformize(a, exec),
        Command::Laminate(a) => laminate(a, exec),
        Command::Pinch(a) => pinch(a, exec),
        Command::Render(a) => render_cmd(a, exec),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("a hard contract failed; see the summary in the output directory");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
