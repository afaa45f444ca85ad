//! Hyperbolic geometry of the upper half-plane ℍ.
//!
//! Geodesics are semicircles orthogonal to ℝ or vertical lines. Every
//! geodesic is stored with its finite endpoint(s) in increasing order; a
//! vertical line keeps its foot in `u` and `v = Infinity`.

use crate::C64;
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point {0} is not in the upper half-plane")]
    NotInUpperHalfPlane(C64),
    #[error("geodesic endpoints must be distinct points of ℝ ∪ {{∞}}")]
    DegenerateGeodesic,
    #[error("band thickness must lie in (0, π/2), got {0}")]
    BadThickness(f64),
    #[error("geodesic through two equal points is undefined")]
    CoincidentPoints,
}

/// A point of ∂ℍ = ℝ ∪ {∞}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Endpoint {
    Finite(f64),
    Infinity,
}

impl Endpoint {
    /// Position on the circle ℝ ∪ {∞} as an angle in (−π, π]; ∞ sits at π.
    pub fn angle(self) -> f64 {
        match self {
            Endpoint::Finite(x) => 2.0 * x.atan(),
            Endpoint::Infinity => PI,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Endpoint::Finite(x) => Some(x),
            Endpoint::Infinity => None,
        }
    }

    fn same(self, other: Endpoint) -> bool {
        match (self, other) {
            (Endpoint::Infinity, Endpoint::Infinity) => true,
            (Endpoint::Finite(a), Endpoint::Finite(b)) => {
                (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300)
            }
            _ => false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Geodesic {
    pub u: f64,
    pub v: Endpoint,
}

impl Geodesic {
    pub fn new(a: Endpoint, b: Endpoint) -> Result<Geodesic, GeometryError> {
        match (a, b) {
            (Endpoint::Finite(x), Endpoint::Finite(y)) => {
                if !(x.is_finite() && y.is_finite()) || x == y {
                    return Err(GeometryError::DegenerateGeodesic);
                }
                Ok(Geodesic { u: x.min(y), v: Endpoint::Finite(x.max(y)) })
            }
            (Endpoint::Finite(x), Endpoint::Infinity) | (Endpoint::Infinity, Endpoint::Finite(x)) => {
                if !x.is_finite() {
                    return Err(GeometryError::DegenerateGeodesic);
                }
                Ok(Geodesic { u: x, v: Endpoint::Infinity })
            }
            _ => Err(GeometryError::DegenerateGeodesic),
        }
    }

    /// The semicircle over `[u, v]` (endpoints in either order).
    pub fn semicircle(u: f64, v: f64) -> Result<Geodesic, GeometryError> {
        Geodesic::new(Endpoint::Finite(u), Endpoint::Finite(v))
    }

    /// The imaginary axis α from 0 to ∞.
    pub fn axis() -> Geodesic {
        Geodesic { u: 0.0, v: Endpoint::Infinity }
    }

    pub fn is_axis(&self) -> bool {
        self.u == 0.0 && self.v == Endpoint::Infinity
    }

    pub fn endpoints(&self) -> (Endpoint, Endpoint) {
        (Endpoint::Finite(self.u), self.v)
    }

    /// Image under `z ↦ s·z` for `s > 0`.
    pub fn scaled(&self, s: f64) -> Geodesic {
        Geodesic {
            u: self.u * s,
            v: match self.v {
                Endpoint::Finite(v) => Endpoint::Finite(v * s),
                Endpoint::Infinity => Endpoint::Infinity,
            },
        }
    }
}

/// Real Möbius map `z ↦ (a z + b)/(c z + d)` with `ad − bc > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moebius {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Moebius {
    pub fn identity() -> Moebius {
        Moebius { a: 1.0, b: 0.0, c: 0.0, d: 1.0 }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn apply(&self, z: C64) -> C64 {
        (z * self.a + self.b) / (z * self.c + self.d)
    }

    pub fn deriv(&self, z: C64) -> C64 {
        let den = z * self.c + self.d;
        C64::new(self.det(), 0.0) / (den * den)
    }

    pub fn apply_endpoint(&self, x: Endpoint) -> Endpoint {
        match x {
            Endpoint::Infinity => {
                if self.c == 0.0 {
                    Endpoint::Infinity
                } else {
                    Endpoint::Finite(self.a / self.c)
                }
            }
            Endpoint::Finite(x) => {
                let den = self.c * x + self.d;
                if den == 0.0 {
                    Endpoint::Infinity
                } else {
                    Endpoint::Finite((self.a * x + self.b) / den)
                }
            }
        }
    }

    pub fn inverse(&self) -> Moebius {
        Moebius { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Moebius) -> Moebius {
        Moebius {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }
}

fn check_h(z: C64) -> Result<(), GeometryError> {
    if z.im > 0.0 && z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(GeometryError::NotInUpperHalfPlane(z))
    }
}

/// Hyperbolic distance in ℍ (curvature −1).
pub fn hyp_distance(z: C64, w: C64) -> Result<f64, GeometryError> {
    check_h(z)?;
    check_h(w)?;
    Ok(2.0 * ((z - w).norm() / (2.0 * (z.im * w.im).sqrt())).asinh())
}

/// The geodesic through two distinct points of ℍ.
pub fn geodesic_between(z: C64, w: C64) -> Result<Geodesic, GeometryError> {
    check_h(z)?;
    check_h(w)?;
    if z == w {
        return Err(GeometryError::CoincidentPoints);
    }
    let scale = z.norm().max(w.norm()).max(1.0);
    if (z.re - w.re).abs() <= 1e-14 * scale {
        return Ok(Geodesic { u: 0.5 * (z.re + w.re), v: Endpoint::Infinity });
    }
    let c = (z.norm_sqr() - w.norm_sqr()) / (2.0 * (z.re - w.re));
    let r = (z - c).norm();
    Geodesic::semicircle(c - r, c + r)
}

/// Orientation-preserving isometry taking α (0 → ∞) onto `g` (u → v).
pub fn moebius_alpha_to(g: &Geodesic) -> Moebius {
    match g.v {
        Endpoint::Finite(v) => Moebius { a: v, b: g.u, c: 1.0, d: 1.0 },
        Endpoint::Infinity => Moebius { a: 1.0, b: g.u, c: 0.0, d: 1.0 },
    }
}

/// Hyperbolic radius of the sector `|arg z − π/2| < δ` around α, i.e.
/// `arccosh(1/cos δ)`.
pub fn sector_radius(delta: f64) -> Result<f64, GeometryError> {
    if !(delta > 0.0 && delta < FRAC_PI_2) {
        return Err(GeometryError::BadThickness(delta));
    }
    Ok(delta.tan().asinh())
}

/// Inverse of [`sector_radius`].
pub fn sector_angle(radius: f64) -> f64 {
    radius.sinh().atan()
}

pub fn point_to_geodesic_distance(z: C64, g: &Geodesic) -> Result<f64, GeometryError> {
    check_h(z)?;
    let w = moebius_alpha_to(g).inverse().apply(z);
    Ok((w.re.abs() / w.im).asinh())
}

/// True when the two geodesics cross inside ℍ.
pub fn geodesics_linked(g1: &Geodesic, g2: &Geodesic) -> bool {
    let (a, b) = ordered_angles(g1);
    let (p, q) = g2.endpoints();
    let inside = |x: Endpoint| {
        let t = x.angle();
        t > a && t < b
    };
    let shares = shares_endpoint(g1, g2);
    !shares && (inside(p) != inside(q))
}

pub fn shares_endpoint(g1: &Geodesic, g2: &Geodesic) -> bool {
    let (a1, b1) = g1.endpoints();
    let (a2, b2) = g2.endpoints();
    a1.same(a2) || a1.same(b2) || b1.same(a2) || b1.same(b2)
}

/// Closures in ℍ ∪ ∂ℍ are disjoint: no crossing and no common endpoint.
pub fn geodesics_disjoint(g1: &Geodesic, g2: &Geodesic) -> bool {
    !shares_endpoint(g1, g2) && !geodesics_linked(g1, g2)
}

fn ordered_angles(g: &Geodesic) -> (f64, f64) {
    let (p, q) = g.endpoints();
    let (s, t) = (p.angle(), q.angle());
    (s.min(t), s.max(t))
}

/// Hyperbolic distance between two leaves; 0 when their closures meet.
pub fn leaf_pair_distance(g1: &Geodesic, g2: &Geodesic) -> f64 {
    if !geodesics_disjoint(g1, g2) {
        return 0.0;
    }
    let m = moebius_alpha_to(g1).inverse();
    let (p, q) = g2.endpoints();
    // Neither endpoint of g2 maps to 0 or ∞, since endpoints are distinct.
    let (x, y) = match (m.apply_endpoint(p), m.apply_endpoint(q)) {
        (Endpoint::Finite(x), Endpoint::Finite(y)) => (x, y),
        _ => return 0.0,
    };
    ((x + y).abs() / (x - y).abs()).acosh()
}

/// Band chart of thickness δ around a geodesic: `ψ = log(A⁻¹ z) − iπ/2`,
/// mapping the collar onto the strip `ℝ × (−δ, δ)` with the leaf on ℝ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandChart {
    pub geodesic: Geodesic,
    pub delta: f64,
    to_axis: Moebius,
}

impl BandChart {
    pub fn coord(&self, z: C64) -> C64 {
        let w = self.to_axis.apply(z);
        w.ln() - C64::new(0.0, FRAC_PI_2)
    }

    /// Chart value and complex derivative.
    pub fn coord_deriv(&self, z: C64) -> (C64, C64) {
        let w = self.to_axis.apply(z);
        (w.ln() - C64::new(0.0, FRAC_PI_2), self.to_axis.deriv(z) / w)
    }

    pub fn inverse(&self, psi: C64) -> C64 {
        self.to_axis.inverse().apply((psi + C64::new(0.0, FRAC_PI_2)).exp())
    }

    pub fn contains(&self, z: C64) -> bool {
        z.im > 0.0 && self.coord(z).im.abs() < self.delta
    }
}

pub fn band_chart(g: &Geodesic, delta: f64) -> Result<BandChart, GeometryError> {
    sector_radius(delta)?;
    Ok(BandChart { geodesic: *g, delta, to_axis: moebius_alpha_to(g).inverse() })
}

/// Chordal distance on the Riemann sphere.
pub fn chordal(z: C64, w: C64) -> f64 {
    2.0 * (z - w).norm() / ((1.0 + z.norm_sqr()) * (1.0 + w.norm_sqr())).sqrt()
}

/// Largest pairwise chordal distance of a point set.
pub fn chordal_diameter(points: &[C64]) -> f64 {
    let mut best = 0.0f64;
    for (i, &z) in points.iter().enumerate() {
        for &w in &points[i + 1..] {
            best = best.max(chordal(z, w));
        }
    }
    best
}

pub fn euclidean_diameter(points: &[C64]) -> f64 {
    let mut best = 0.0f64;
    for (i, &z) in points.iter().enumerate() {
        for &w in &points[i + 1..] {
            best = best.max((z - w).norm());
        }
    }
    best
}
