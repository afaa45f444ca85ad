use approx::assert_abs_diff_eq;
use pinchlab::geometry::*;
use pinchlab::C64;
use proptest::prelude::*;

/// Minimum of `f` on `[lo, hi]` by dense sampling and golden-section polish.
fn sampled_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let n = 4000;
    let mut best = (f64::INFINITY, lo);
    for k in 0..=n {
        let x = lo + (hi - lo) * k as f64 / n as f64;
        let v = f(x);
        if v < best.0 {
            best = (v, x);
        }
    }
    let step = (hi - lo) / n as f64;
    let (mut a, mut b) = (best.1 - step, best.1 + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    f(0.5 * (a + b)).min(best.0)
}

/// Points of a geodesic parametrized by `s ∈ ℝ`.
fn on_geodesic(g: &Geodesic, s: f64) -> C64 {
    moebius_alpha_to(g).apply(C64::new(0.0, s.exp()))
}

#[test]
fn distance_examples() {
    let i = C64::new(0.0, 1.0);
    assert_eq!(hyp_distance(i, i).unwrap(), 0.0);
    assert_abs_diff_eq!(hyp_distance(i, C64::new(0.0, 2.0)).unwrap(), 2f64.ln(), epsilon = 1e-14);
    assert_abs_diff_eq!(hyp_distance(i, C64::new(1.0, 1.0)).unwrap(), 1.5f64.acosh(), epsilon = 1e-14);
    assert!(hyp_distance(i, C64::new(0.0, -1.0)).is_err());
}

#[test]
fn distance_by_metric_integration() {
    // Integrate |dz|/Im z along the geodesic from i to 1 + i.
    let (z, w) = (C64::new(0.0, 1.0), C64::new(1.0, 1.0));
    let g = geodesic_between(z, w).unwrap();
    let m = moebius_alpha_to(&g).inverse();
    let (sz, sw) = (m.apply(z).im.ln(), m.apply(w).im.ln());
    let n = 20000;
    let mut len = 0.0;
    for k in 0..n {
        let a = on_geodesic(&g, sz + (sw - sz) * k as f64 / n as f64);
        let b = on_geodesic(&g, sz + (sw - sz) * (k + 1) as f64 / n as f64);
        len += (b - a).norm() / (0.5 * (a + b)).im;
    }
    assert_abs_diff_eq!(len.abs(), 0.962424, epsilon = 1e-6);
}

#[test]
fn geodesic_examples() {
    let g = Geodesic::semicircle(1.0, 3.0).unwrap();
    assert_eq!((g.u, g.v), (1.0, Endpoint::Finite(3.0)));
    let g = Geodesic::semicircle(2.0, -1.0).unwrap();
    assert_eq!((g.u, g.v), (-1.0, Endpoint::Finite(2.0)));
    assert!(Geodesic::axis().is_axis());
    assert_eq!(Geodesic::semicircle(1.0, 1.0), Err(GeometryError::DegenerateGeodesic));
    let g = geodesic_between(C64::new(2.0, 1.0), C64::new(2.0 - 0.5f64.sqrt(), 0.5f64.sqrt())).unwrap();
    assert_abs_diff_eq!(g.u, 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(g.v.finite().unwrap(), 3.0, epsilon = 1e-12);
}

#[test]
fn alpha_map_examples() {
    assert_eq!(moebius_alpha_to(&Geodesic::axis()), Moebius::identity());
    let g = Geodesic::semicircle(1.0, 3.0).unwrap();
    let a = moebius_alpha_to(&g);
    assert!(a.det() > 0.0);
    let z = a.apply(C64::new(0.0, 1.0));
    assert_abs_diff_eq!(z.re, 2.0, epsilon = 1e-15);
    assert_abs_diff_eq!(z.im, 1.0, epsilon = 1e-15);
    for k in 0..10 {
        let w = a.apply(C64::new(0.0, (k as f64 - 4.5).exp()));
        assert!(((w - 2.0).norm() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn sector_radius_examples() {
    assert!(sector_radius(1e-6).unwrap() < 1e-5);
    assert_abs_diff_eq!(sector_radius(std::f64::consts::FRAC_PI_3).unwrap(), 2f64.acosh(), epsilon = 1e-12);
    let oracle = |d: f64| point_to_geodesic_distance(C64::from_polar(1.0, std::f64::consts::FRAC_PI_2 + d), &Geodesic::axis()).unwrap();
    assert_abs_diff_eq!(sector_radius(0.1).unwrap(), oracle(0.1), epsilon = 1e-12);
    assert_abs_diff_eq!(sector_radius(0.1).unwrap(), 0.10017, epsilon = 1e-5);
    assert!(sector_radius(0.0).is_err());
    assert!(sector_radius(std::f64::consts::FRAC_PI_2).is_err());
}

#[test]
fn point_to_geodesic_examples() {
    let axis = Geodesic::axis();
    assert_eq!(point_to_geodesic_distance(C64::new(0.0, 1.0), &axis).unwrap(), 0.0);
    let z = C64::new(1.0, 1.0);
    let oracle = sampled_min(|s| hyp_distance(z, C64::new(0.0, s.exp())).unwrap(), -5.0, 5.0);
    assert_abs_diff_eq!(point_to_geodesic_distance(z, &axis).unwrap(), oracle, epsilon = 1e-8);
    assert_abs_diff_eq!(oracle, 2f64.sqrt().acosh(), epsilon = 1e-8);
    let g = Geodesic::semicircle(1.0, 3.0).unwrap();
    let z = C64::new(0.0, 2.0);
    let oracle = sampled_min(|s| hyp_distance(z, on_geodesic(&g, s)).unwrap(), -8.0, 8.0);
    let d = point_to_geodesic_distance(z, &g).unwrap();
    assert!(d > 0.0);
    assert_abs_diff_eq!(d, oracle, epsilon = 1e-8);
}

#[test]
fn leaf_pair_examples() {
    let axis = Geodesic::axis();
    assert_eq!(leaf_pair_distance(&axis, &axis), 0.0);
    let a = 1.5936;
    let g1 = Geodesic::semicircle(1.0, 1.3).unwrap();
    let g2 = g1.scaled(a);
    let nested = |g1: &Geodesic, g2: &Geodesic| {
        sampled_min(|s| sampled_min(|r| hyp_distance(on_geodesic(g1, s), on_geodesic(g2, r)).unwrap(), -6.0, 6.0), -6.0, 6.0)
    };
    let d = leaf_pair_distance(&g1, &g2);
    assert!(d > 0.0);
    assert_abs_diff_eq!(d, nested(&g1, &g2), epsilon = 1e-6);
    let (h1, h2) = (Geodesic::semicircle(-2.0, -1.0).unwrap(), Geodesic::semicircle(1.0, 2.0).unwrap());
    let top = C64::new(1.5, 0.5);
    let half = point_to_geodesic_distance(top, &axis).unwrap();
    assert_abs_diff_eq!(leaf_pair_distance(&h1, &h2), 2.0 * sampled_min(|s| point_to_geodesic_distance(on_geodesic(&h2, s), &axis).unwrap(), -6.0, 6.0), epsilon = 1e-6);
    assert!(leaf_pair_distance(&h1, &h2) <= 2.0 * half + 1e-12);
}

#[test]
fn disjointness_examples() {
    let g = |u, v| Geodesic::semicircle(u, v).unwrap();
    assert!(geodesics_disjoint(&g(1.0, 2.0), &g(3.0, 4.0)));
    assert!(geodesics_disjoint(&g(1.0, 4.0), &g(2.0, 3.0)));
    assert!(!geodesics_disjoint(&g(1.0, 3.0), &g(2.0, 4.0)));
    assert!(!geodesics_disjoint(&g(1.0, 3.0), &g(3.0, 4.0)));
    let a = 1.5936;
    assert!(geodesics_disjoint(&g(1.0, 1.3), &g(1.0, 1.3).scaled(a)));
    assert!(!geodesics_disjoint(&g(1.0, 1.7), &g(1.0, 1.7).scaled(a)));
    assert!(!geodesics_disjoint(&Geodesic::axis(), &g(-2.0, 1.0)));
    assert!(geodesics_disjoint(&Geodesic::axis(), &g(1.0, 2.0)));
}

#[test]
fn band_chart_examples() {
    let c = band_chart(&Geodesic::axis(), 0.3).unwrap();
    assert_abs_diff_eq!(c.coord(C64::new(0.0, 1.0)).norm(), 0.0, epsilon = 1e-15);
    let e = c.coord(C64::new(0.0, std::f64::consts::E));
    assert_abs_diff_eq!(e.re, 1.0, epsilon = 1e-15);
    assert_abs_diff_eq!(e.im, 0.0, epsilon = 1e-15);
    let w = c.coord(C64::new(0.0, 1.0) * C64::from_polar(2.5, 0.2));
    assert_abs_diff_eq!(w.im, 0.2, epsilon = 1e-15);
    let c = band_chart(&Geodesic::semicircle(1.0, 3.0).unwrap(), 0.3).unwrap();
    assert_abs_diff_eq!(c.coord(C64::new(2.0, 1.0)).norm(), 0.0, epsilon = 1e-14);
    assert!(band_chart(&Geodesic::axis(), 2.0).is_err());
}

#[test]
fn chordal_metric() {
    let (z, w) = (C64::new(0.3, -1.0), C64::new(2.0, 0.5));
    assert_abs_diff_eq!(chordal(z, w), chordal(w, z), epsilon = 1e-16);
    assert!(chordal(C64::new(1e8, 0.0), C64::new(-1e8, 0.0)) < 1e-7);
    assert_abs_diff_eq!(chordal(C64::new(0.0, 0.0), C64::new(1.0, 0.0)), 2f64.sqrt(), epsilon = 1e-15);
    assert_eq!(chordal_diameter(&[z]), 0.0);
}

fn upper() -> impl Strategy<Value = C64> {
    (-5.0..5.0f64, 0.05..5.0f64).prop_map(|(x, y)| C64::new(x, y))
}

fn moebius() -> impl Strategy<Value = Moebius> {
    (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64)
        .prop_filter("positive determinant", |(a, b, c, d)| a * d - b * c > 0.1)
        .prop_map(|(a, b, c, d)| Moebius { a, b, c, d })
}

/// Brute-force Euclidean test: two semicircles over `[a, b]` and `[c, d]`
/// cross in ℍ exactly when exactly one of `c, d` lies strictly inside `(a, b)`.
fn semicircles_cross(g1: (f64, f64), g2: (f64, f64)) -> bool {
    let (c1, r1) = (0.5 * (g1.0 + g1.1), 0.5 * (g1.1 - g1.0));
    let (c2, r2) = (0.5 * (g2.0 + g2.1), 0.5 * (g2.1 - g2.0));
    let d = (c1 - c2).abs();
    if d >= r1 + r2 || d <= (r1 - r2).abs() || d == 0.0 {
        return false;
    }
    // Intersection x-coordinate of the full circles, then its height.
    let x = (r1 * r1 - r2 * r2 + c2 * c2 - c1 * c1) / (2.0 * (c2 - c1));
    r1 * r1 - (x - c1) * (x - c1) > 0.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn triangle_inequality(z in upper(), w in upper(), v in upper()) {
        let (a, b, c) = (hyp_distance(z, w).unwrap(), hyp_distance(w, v).unwrap(), hyp_distance(z, v).unwrap());
        prop_assert!(c <= a + b + 1e-12);
        prop_assert!((a - hyp_distance(w, z).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn isometry_invariance(m in moebius(), z in upper(), w in upper()) {
        let d = hyp_distance(z, w).unwrap();
        let dm = hyp_distance(m.apply(z), m.apply(w)).unwrap();
        prop_assert!((d - dm).abs() < 1e-10 * d.max(1.0));
    }

    #[test]
    fn moebius_group_laws(m in moebius(), n in moebius(), z in upper()) {
        let w = m.compose(&n).apply(z);
        prop_assert!((w - m.apply(n.apply(z))).norm() < 1e-9 * w.norm().max(1.0));
        prop_assert!((m.inverse().apply(m.apply(z)) - z).norm() < 1e-9 * z.norm().max(1.0));
    }

    #[test]
    fn band_chart_round_trip(u in -4.0..4.0f64, len in 0.1..4.0f64, delta in 0.05..1.5f64, x in -6.0..6.0f64, y in -1.0..1.0f64) {
        let g = Geodesic::semicircle(u, u + len).unwrap();
        let c = band_chart(&g, delta).unwrap();
        let psi = C64::new(x, y * delta * 0.999);
        let z = c.inverse(psi);
        prop_assert!(c.contains(z));
        prop_assert!((c.coord(z) - psi).norm() < 1e-10 * psi.norm().max(1.0));
    }

    #[test]
    fn sector_radius_matches_boundary_distance(delta in 0.001..1.55f64, r in 0.01..100.0f64) {
        let z = C64::from_polar(r, std::f64::consts::FRAC_PI_2 - delta);
        let d = point_to_geodesic_distance(z, &Geodesic::axis()).unwrap();
        prop_assert!((sector_radius(delta).unwrap() - d).abs() < 1e-8);
        prop_assert!((sector_angle(d) - delta).abs() < 1e-10);
    }

    #[test]
    fn disjoint_matches_semicircle_oracle(a in -10.0..10.0f64, b in -10.0..10.0f64, c in -10.0..10.0f64, d in -10.0..10.0f64) {
        let ends = [a, b, c, d];
        let distinct = (0..4).all(|i| (i + 1..4).all(|j| (ends[i] - ends[j]).abs() > 1e-9));
        prop_assume!(distinct);
        let g1 = Geodesic::semicircle(a, b).unwrap();
        let g2 = Geodesic::semicircle(c, d).unwrap();
        let oracle = !semicircles_cross((a.min(b), a.max(b)), (c.min(d), c.max(d)));
        prop_assert_eq!(geodesics_disjoint(&g1, &g2), oracle);
    }

    #[test]
    fn pair_distance_is_isometry_invariant(u in 0.1..3.0f64, len in 0.1..2.0f64, gap in 0.1..3.0f64, m in moebius()) {
        let g1 = Geodesic::semicircle(u, u + len).unwrap();
        let g2 = Geodesic::semicircle(u + len + gap, u + 2.0 * len + gap).unwrap();
        let d = leaf_pair_distance(&g1, &g2);
        let img = |g: &Geodesic| {
            let (p, q) = g.endpoints();
            Geodesic::new(m.apply_endpoint(p), m.apply_endpoint(q)).unwrap()
        };
        prop_assert!(d > 0.0);
        prop_assert!((leaf_pair_distance(&img(&g1), &img(&g2)) - d).abs() < 1e-8 * d.max(1.0));
    }
}
