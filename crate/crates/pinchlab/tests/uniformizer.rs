use approx::assert_abs_diff_eq;
use pinchlab::entire::EntireMap;
use pinchlab::exec::Exec;
use pinchlab::uniformizer::*;
use pinchlab::C64;
use proptest::prelude::*;
use std::f64::consts::{LN_2, PI};
use std::sync::OnceLock;

fn psi() -> &'static Uniformizer {
    static PSI: OnceLock<Uniformizer> = OnceLock::new();
    PSI.get_or_init(|| {
        let f = EntireMap::bergweiler();
        let p = boundary_fixed_point(&f).unwrap();
        let chart = koenigs_chart(&f, p).unwrap();
        build_uniformizer(&f, chart, 256, Exec::default()).unwrap()
    })
}

#[test]
fn boundary_point_and_chart() {
    let f = EntireMap::bergweiler();
    let p = boundary_fixed_point(&f).unwrap();
    assert_abs_diff_eq!(p.re, -0.900_477_079_480_094_8, epsilon = 1e-12);
    let k = koenigs_chart(&f, p).unwrap();
    assert_abs_diff_eq!(k.multiplier.re, 1.593_624_260_040_040_1, epsilon = 1e-10);
    assert!(koenigs_chart(&f, C64::new(LN_2, 0.0)).is_err());
    assert!(koenigs_chart(&f, C64::new(0.0, 0.0)).is_err());
    for z in [p + 0.1, p - 0.2, p + C64::new(0.05, 0.1), C64::new(-1.5, 0.3)] {
        assert!(k.conjugacy_residual(z).unwrap() < 1e-6, "{z}");
    }
    let (k0, _) = k.eval(p).unwrap();
    assert_eq!(k0, C64::new(0.0, 0.0));
    // κ'(p) = 1.
    let h = 1e-6;
    let d = (k.eval(p + h).unwrap().0 - k.eval(p - h).unwrap().0) / (2.0 * h);
    assert!((d - 1.0).norm() < 1e-5);
}

#[test]
fn escape_coordinate_is_equivariant() {
    let e = EscapeCoordinate::new(EntireMap::bergweiler());
    let f = e.map();
    for z in [C64::new(-3.0, 0.5), C64::new(-1.5, -2.0), C64::new(-10.0, 7.0)] {
        let (a, _) = e.eval(z).unwrap();
        let (b, _) = e.eval(f.eval(z)).unwrap();
        assert!((b - a * 2.0).norm() < 1e-9 * b.norm().max(1.0), "{z}");
        let w = e.invert(a).unwrap();
        assert!((e.eval(w).unwrap().0 - a).norm() < 1e-9 * a.norm().max(1.0));
    }
    assert!(e.eval(C64::new(LN_2, 0.0)).is_none());
    assert!(e.invert(C64::new(1.0, 0.0)).is_none());
}

#[test]
fn uniformizer_certificate() {
    let u = psi();
    assert_eq!(u.dilation, 2.0);
    assert!(u.residual_bound < 1e-6, "{}", u.residual_bound);
    assert!(u.functional_residual(100, Exec::default()).unwrap() < 1e-3);
    assert!(u.boundary_level <= 0.0 && u.boundary_level > -0.5, "{}", u.boundary_level);
    assert_abs_diff_eq!(u.quotient_modulus(), PI / LN_2, epsilon = 1e-15);
    assert_abs_diff_eq!(quotient_modulus(3.0), PI / 3f64.ln(), epsilon = 1e-15);
    assert!(u.dilation_ratio() > 1.0);
}

#[test]
fn psi_examples() {
    let u = psi();
    // The imaginary axis goes to the real axis left of p.
    let z = u.psi_eval(C64::new(0.0, 1.0)).unwrap();
    assert!(z.im.abs() < 1e-9 && z.re < u.p.re);
    assert!(u.psi_eval(C64::new(1.0, 0.0)).is_err());
    assert!(u.psi_eval(C64::new(1.0, -1.0)).is_err());
    assert!(matches!(u.psi_eval(C64::new(0.0, 1e30)), Err(UniformizerError::OutOfRange(_))));
    // Small ζ approach p through the Koenigs branch.
    let z = u.psi_eval(C64::new(0.0, 2f64.powi(-30))).unwrap();
    assert!((z - u.p).norm() < 1e-6);
}

#[test]
fn table_round_trip() {
    let u = psi();
    let mut buf = Vec::new();
    u.write_table(&mut buf).unwrap();
    assert_eq!(&buf[..4], b"PSIT");
    let v = Uniformizer::read_table(&buf[..]).unwrap();
    assert_eq!(v.samples, u.samples);
    assert_eq!((v.n_rings, v.n_angles), (u.n_rings, u.n_angles));
    assert_eq!(v.residual_bound, u.residual_bound);
    let zeta = C64::new(0.3, 1.4);
    assert_eq!(v.psi_eval(zeta).unwrap(), u.psi_eval(zeta).unwrap());
    assert!(Uniformizer::read_table(&buf[..buf.len() - 3]).is_err());
    let mut bad = buf.clone();
    bad[0] = b'X';
    assert!(Uniformizer::read_table(&bad[..]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn psi_semiconjugates(r in 0.05..40.0f64, th in 0.05..(PI - 0.05)) {
        let u = psi();
        let zeta = C64::from_polar(r, th);
        let z = u.psi_eval(zeta).unwrap();
        let w = u.psi_eval(zeta * 2.0).unwrap();
        let fz = u.escape.map().eval(z);
        prop_assert!((w - fz).norm() < 1e-6 * fz.norm().max(1.0), "{} vs {}", w, fz);
    }

    #[test]
    fn model_coord_inverts_psi(r in 1.0..2.0f64, th in 0.1..(PI - 0.1)) {
        let u = psi();
        let zeta = C64::from_polar(r, th);
        let z = u.psi_eval(zeta).unwrap();
        let (back, d) = u.model_coord(z).unwrap();
        prop_assert!((back - zeta).norm() < 1e-8);
        prop_assert!(d.norm() > 0.0);
    }

    #[test]
    fn koenigs_conjugacy(x in -0.3..0.3f64, y in -0.3..0.3f64) {
        let u = psi();
        let z = u.p + C64::new(x, y);
        prop_assume!(C64::new(x, y).norm() > 1e-3);
        prop_assert!(u.koenigs.conjugacy_residual(z).unwrap() < 1e-6);
    }
}
