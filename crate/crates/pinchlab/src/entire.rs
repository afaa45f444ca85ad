//! The family `f(z) = c + m z − e^z` with `m > 1`.

use crate::C64;
use serde::Serialize;
use std::f64::consts::{LN_2, PI};
use thiserror::Error;

/// `e^z` is not evaluated beyond this real part.
pub const SATURATION_RE: f64 = 700.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("invalid map parameters: {0}")]
    Invalid(String),
    #[error("e^z saturates at z = {0}")]
    Saturated(C64),
    #[error("inverse branch failed for w = {w} from seed {seed}: {reason}")]
    BranchFailure { w: C64, seed: C64, reason: &'static str },
    #[error("real fixed points need a real constant term")]
    ComplexConstant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FixedPointClass {
    Superattracting,
    Attracting,
    Indifferent,
    Repelling,
}

impl FixedPointClass {
    pub fn of(multiplier: f64) -> FixedPointClass {
        let a = multiplier.abs();
        if a <= 1e-9 {
            FixedPointClass::Superattracting
        } else if a < 1.0 - 1e-9 {
            FixedPointClass::Attracting
        } else if a > 1.0 + 1e-9 {
            FixedPointClass::Repelling
        } else {
            FixedPointClass::Indifferent
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FixedPoint {
    pub z: f64,
    pub multiplier: f64,
    pub class: FixedPointClass,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct SingularValues {
    pub critical: Vec<C64>,
    /// Always empty for this family: `|f| → ∞` along every path to ∞.
    pub asymptotic: Vec<C64>,
}

/// Named presets accepted by the configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MapPreset {
    Bergweiler,
    Family { m: f64 },
    Custom { m: f64, c: C64 },
}

impl MapPreset {
    pub fn build(self) -> Result<EntireMap, MapError> {
        match self {
            MapPreset::Bergweiler => Ok(EntireMap::bergweiler()),
            MapPreset::Family { m } => EntireMap::family(m),
            MapPreset::Custom { m, c } => EntireMap::new(m, c),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntireMap {
    m: f64,
    c: C64,
}

impl EntireMap {
    pub fn new(m: f64, c: C64) -> Result<EntireMap, MapError> {
        if !(m.is_finite() && m > 1.0) {
            return Err(MapError::Invalid(format!("m must be finite and > 1, got {m}")));
        }
        if !(c.re.is_finite() && c.im.is_finite()) {
            return Err(MapError::Invalid("c must be finite".into()));
        }
        Ok(EntireMap { m, c })
    }

    /// `2 − log 2 + 2z − e^z`.
    pub fn bergweiler() -> EntireMap {
        EntireMap { m: 2.0, c: C64::new(2.0 - LN_2, 0.0) }
    }

    /// `(m−1) log(2/(2m−1)) + (2m−1)/2 + m z − e^z`.
    pub fn family(m: f64) -> Result<EntireMap, MapError> {
        if !(m.is_finite() && m > 1.0) {
            return Err(MapError::Invalid(format!("m must be finite and > 1, got {m}")));
        }
        let c = (m - 1.0) * (2.0 / (2.0 * m - 1.0)).ln() + (2.0 * m - 1.0) / 2.0;
        EntireMap::new(m, C64::new(c, 0.0))
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn c(&self) -> C64 {
        self.c
    }

    /// Fixed point of the affine part `c + m z`, the far-left asymptote.
    pub fn affine_fixed_point(&self) -> C64 {
        -self.c / (self.m - 1.0)
    }

    #[inline]
    pub fn eval(&self, z: C64) -> C64 {
        self.c + z * self.m - z.exp()
    }

    pub fn eval_checked(&self, z: C64) -> Result<C64, MapError> {
        if z.re > SATURATION_RE {
            Err(MapError::Saturated(z))
        } else {
            Ok(self.eval(z))
        }
    }

    #[inline]
    pub fn deriv(&self, z: C64) -> C64 {
        C64::new(self.m, 0.0) - z.exp()
    }

    /// Real solutions of `f(x) = x` in `[lo, hi]`, by sign-change bracketing,
    /// bisection and a Newton polish.
    pub fn fixed_points_real(&self, lo: f64, hi: f64) -> Result<Vec<FixedPoint>, MapError> {
        if self.c.im != 0.0 {
            return Err(MapError::ComplexConstant);
        }
        if !(lo < hi) {
            return Err(MapError::Invalid(format!("empty interval [{lo}, {hi}]")));
        }
        let c = self.c.re;
        let m = self.m;
        let g = |x: f64| c + (m - 1.0) * x - x.exp();
        let steps = 4096;
        let h = (hi - lo) / steps as f64;
        let mut roots: Vec<f64> = Vec::new();
        let mut x0 = lo;
        let mut g0 = g(x0);
        for k in 1..=steps {
            let x1 = if k == steps { hi } else { lo + k as f64 * h };
            let g1 = g(x1);
            if g0 == 0.0 {
                roots.push(x0);
            } else if g0 * g1 < 0.0 {
                let (mut a, mut b, mut ga) = (x0, x1, g0);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if mid <= a || mid >= b {
                        break;
                    }
                    let gm = g(mid);
                    if gm == 0.0 {
                        a = mid;
                        b = mid;
                        break;
                    }
                    if (gm < 0.0) == (ga < 0.0) {
                        a = mid;
                        ga = gm;
                    } else {
                        b = mid;
                    }
                }
                let mut x = 0.5 * (a + b);
                for _ in 0..3 {
                    let d = (m - 1.0) - x.exp();
                    if d == 0.0 {
                        break;
                    }
                    let nx = x - g(x) / d;
                    if g(nx).abs() < g(x).abs() {
                        x = nx;
                    } else {
                        break;
                    }
                }
                roots.push(x);
            }
            if k == steps && g1 == 0.0 {
                roots.push(x1);
            }
            x0 = x1;
            g0 = g1;
        }
        roots.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        Ok(roots
            .into_iter()
            .map(|x| {
                let multiplier = m - x.exp();
                FixedPoint {
                    z: x,
                    multiplier,
                    class: FixedPointClass::of(multiplier),
                    residual: g(x).abs(),
                }
            })
            .collect())
    }

    /// `z_k = log m + 2πik` for `k_lo ≤ k ≤ k_hi`.
    pub fn critical_points(&self, k_lo: i64, k_hi: i64) -> Vec<C64> {
        (k_lo..=k_hi)
            .map(|k| C64::new(self.m.ln(), 2.0 * PI * k as f64))
            .collect()
    }

    pub fn singular_values(&self, k_lo: i64, k_hi: i64) -> SingularValues {
        SingularValues {
            critical: self.critical_points(k_lo, k_hi).into_iter().map(|z| self.eval(z)).collect(),
            asymptotic: Vec::new(),
        }
    }

    /// Damped Newton solve of `f(z) = w` from `seed`. Never switches branch
    /// silently: non-convergence or a vanishing derivative is an error.
    pub fn inverse_branch(&self, w: C64, seed: C64) -> Result<C64, MapError> {
        let fail = |reason| MapError::BranchFailure { w, seed, reason };
        let tol = 1e-10f64.max(1e-14 * w.norm());
        let mut z = seed;
        let mut r = self.eval_checked(z).map_err(|_| fail("seed saturates"))? - w;
        for _ in 0..100 {
            if r.norm() < tol {
                // One extra step tightens the last digits when it helps.
                let d = self.deriv(z);
                if d.norm() >= 1e-8 {
                    let nz = z - r / d;
                    let nr = self.eval(nz) - w;
                    if nr.norm() < r.norm() {
                        return Ok(nz);
                    }
                }
                return Ok(z);
            }
            let d = self.deriv(z);
            if d.norm() < 1e-8 {
                return Err(fail("derivative below 1e-8"));
            }
            let step = r / d;
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let nz = z - step * lambda;
                if let Ok(fz) = self.eval_checked(nz) {
                    let nr = fz - w;
                    if nr.norm() < r.norm() {
                        z = nz;
                        r = nr;
                        accepted = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !accepted {
                return Err(fail("damping exhausted"));
            }
        }
        Err(fail("no convergence in 100 iterations"))
    }

    /// Complex fixed point near `seed`, by Newton on `f(z) − z`.
    pub fn fixed_point_near(&self, seed: C64) -> Result<C64, MapError> {
        let mut z = seed;
        for _ in 0..100 {
            let r = self.eval_checked(z)? - z;
            if r.norm() < 1e-14 * z.norm().max(1.0) {
                return Ok(z);
            }
            let d = self.deriv(z) - 1.0;
            if d.norm() < 1e-12 {
                break;
            }
            z -= r / d;
        }
        let r = self.eval(z) - z;
        if r.norm() < 1e-10 {
            Ok(z)
        } else {
            Err(MapError::BranchFailure { w: z, seed, reason: "fixed-point Newton failed" })
        }
    }
}
