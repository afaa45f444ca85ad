use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pinchlab::beltrami::{BeltramiField, SolveOptions, Solver};
use pinchlab::entire::EntireMap;
use pinchlab::exec::Exec;
use pinchlab::fatou::{raster_classify, Classifier};
use pinchlab::grid::{Grid, Region};
use pinchlab::C64;
use std::hint::black_box;

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn classify(c: &mut Criterion) {
    let classifier = Classifier::new(EntireMap::bergweiler(), 1000, 50.0).unwrap();
    let grid = Grid::new(Region::new(-3.5, -2.5, 1.5, 2.5).unwrap(), 256);
    let mut g = c.benchmark_group("raster_classify_256");
    for (name, exec) in POLICIES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| raster_classify(&classifier, black_box(grid), exec)));
    }
    g.finish();
}

fn beurling(c: &mut Criterion) {
    let grid = Grid::new(Region::square(C64::new(0.0, 0.0), 4.0), 256);
    let w: Vec<C64> = grid.centers().map(|z| if z.norm() < 1.0 { C64::new(0.5, 0.0) } else { C64::new(0.0, 0.0) }).collect();
    let mut g = c.benchmark_group("beurling_256");
    for (name, exec) in POLICIES {
        let solver = Solver::new(grid, exec).unwrap();
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| solver.beurling(black_box(&w))));
    }
    g.finish();
}

fn solve(c: &mut Criterion) {
    let grid = Grid::new(Region::square(C64::new(0.0, 0.0), 4.0), 128);
    let mu = grid.centers().map(|z| if z.norm() < 1.0 { C64::new(0.5, 0.0) } else { C64::new(0.0, 0.0) }).collect();
    let field = BeltramiField::from_values(grid, 0.5, mu);
    let mut g = c.benchmark_group("solve_disc_128");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        let solver = Solver::new(grid, exec).unwrap();
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| solver.solve(black_box(&field), &SolveOptions::default()).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, classify, beurling, solve);
criterion_main!(benches);
