//! The uniformizer Ψ: ℍ → U of the Baker domain.
//!
//! Far to the left `f` is affine, `f(z) ≈ c + m z`, so the escape coordinate
//! `φ(z) = lim m^{-n} (f^n(z) − z*)` exists on the grand orbit of U and
//! satisfies `φ ∘ f = m φ`. It maps U onto the left half-plane, hence
//! `Ψ(ζ) = φ⁻¹(iζ)` semiconjugates `G(ζ) = m ζ` to `f`. The Koenigs chart at
//! the repelling boundary fixed point `p` supplies the backward branch used
//! for negative powers of G.

use crate::entire::{EntireMap, MapError, SATURATION_RE};
use crate::exec::Exec;
use crate::C64;
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum UniformizerError {
    #[error("Koenigs chart: {0}")]
    Chart(String),
    #[error("conformal identification failed at ζ = {0}")]
    Identification(C64),
    #[error("ζ = {0} is not in the upper half-plane")]
    NotInUpperHalfPlane(C64),
    #[error("extension overflow: |ζ| = {0} needs more than the configured power range")]
    OutOfRange(f64),
    #[error("f^n saturates while extending to ζ = {0}")]
    Saturated(C64),
    #[error("uniformizer table: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Map(#[from] MapError),
}

/// Real part below which `e^z` is invisible next to `c + m z`.
const AFFINE_RE: f64 = 60.0;

#[derive(Clone, Copy, Debug)]
pub struct EscapeCoordinate {
    map: EntireMap,
    z_star: C64,
    left: f64,
    pub max_iter: u32,
}

impl EscapeCoordinate {
    pub fn new(map: EntireMap) -> EscapeCoordinate {
        let z_star = map.affine_fixed_point();
        EscapeCoordinate { map, z_star, left: AFFINE_RE + z_star.re.abs(), max_iter: 2000 }
    }

    pub fn map(&self) -> &EntireMap {
        &self.map
    }

    /// `(φ(z), φ'(z))`, or `None` if the orbit does not escape to the left.
    pub fn eval(&self, z: C64) -> Option<(C64, C64)> {
        let m = self.map.m();
        let mut w = z;
        let mut d = C64::new(1.0, 0.0);
        let mut s = 1.0f64;
        for _ in 0..=self.max_iter {
            if w.re < -self.left {
                return Some(((w - self.z_star) * s, d));
            }
            if !(w.re <= SATURATION_RE && w.im.is_finite()) {
                return None;
            }
            d *= self.map.deriv(w) / m;
            w = self.map.eval(w);
            s /= m;
        }
        None
    }

    /// Number of iterates until the orbit of `z` reaches the affine regime.
    pub fn escape_time(&self, z: C64) -> Option<u32> {
        let mut w = z;
        for k in 0..=self.max_iter {
            if w.re < -self.left {
                return Some(k);
            }
            if !(w.re <= SATURATION_RE && w.im.is_finite()) {
                return None;
            }
            w = self.map.eval(w);
        }
        None
    }

    /// Solves `φ(z) = target` in U (`Re target < 0`) by continuation along a
    /// horizontal path from the affine region, with Newton corrections.
    pub fn invert(&self, target: C64) -> Option<C64> {
        if !(target.re < 0.0) || !target.im.is_finite() {
            return None;
        }
        let s0 = C64::new(-(self.left + 10.0 + self.z_star.re.abs()), target.im);
        if target.re <= s0.re {
            return Some(target + self.z_star);
        }
        let mut s = s0;
        let mut z = s0 + self.z_star;
        let (_, mut dphi) = self.eval(z)?;
        let mut guard = 0;
        while s.re < target.re {
            guard += 1;
            if guard > 10_000 {
                return None;
            }
            let remaining = target.re - s.re;
            let mut step = remaining.min(0.25 * s.re.abs());
            let mut done = false;
            for _ in 0..40 {
                let s_new = if step >= remaining { target } else { C64::new(s.re + step, target.im) };
                let pred = z + (s_new - s) / dphi;
                if let Some((zn, dn)) = self.newton(pred, s_new) {
                    if (zn - pred).norm() <= 0.5 * (pred - z).norm() + 1e-12 {
                        z = zn;
                        dphi = dn;
                        s = s_new;
                        done = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !done {
                return None;
            }
        }
        Some(z)
    }

    fn newton(&self, seed: C64, target: C64) -> Option<(C64, C64)> {
        let tol = 1e-13 * (1.0 + target.norm());
        let mut z = seed;
        for _ in 0..40 {
            let (phi, dphi) = self.eval(z)?;
            let r = phi - target;
            if dphi.norm() == 0.0 {
                return None;
            }
            let dz = r / dphi;
            z -= dz;
            if r.norm() < tol || dz.norm() < 1e-15 * (1.0 + z.norm()) {
                let (_, d) = self.eval(z)?;
                return Some((z, d));
            }
        }
        None
    }
}

/// `e^z − 1` without cancellation for small `z`.
fn expm1(z: C64) -> C64 {
    let half = (0.5 * z.im).sin();
    C64::new(z.re.exp_m1() * z.im.cos() - 2.0 * half * half, z.re.exp() * z.im.sin())
}

/// Koenigs linearization of the backward branch at the repelling fixed
/// point: `κ(z) = lim a^n (g^n(z) − p)`.
#[derive(Clone, Copy, Debug)]
pub struct KoenigsChart {
    map: EntireMap,
    pub p: C64,
    pub multiplier: C64,
    exp_p: C64,
    b2: C64,
    pub max_depth: usize,
    pub tol: f64,
}

impl KoenigsChart {
    pub fn new(map: EntireMap, p: C64) -> Result<KoenigsChart, UniformizerError> {
        let r = map.eval(p) - p;
        if r.norm() > 1e-10 {
            return Err(UniformizerError::Chart(format!("{p} is not a fixed point (residual {r})")));
        }
        let multiplier = map.deriv(p);
        if multiplier.norm() <= 1.0 {
            return Err(UniformizerError::Chart(format!("{p} is not repelling (multiplier {multiplier})")));
        }
        let exp_p = p.exp();
        let a = multiplier;
        let b2 = exp_p / (a * (a - 1.0) * 2.0);
        Ok(KoenigsChart { map, p, multiplier, exp_p, b2, max_depth: 400, tol: 1e-12 })
    }

    /// `f(p + δ) − p`, using `f(p) = p` exactly.
    fn local(&self, d: C64) -> C64 {
        d * self.map.m() - self.exp_p * expm1(d)
    }

    /// One step of the backward branch in the local coordinate `δ = z − p`.
    pub fn backward_local(&self, d: C64) -> Result<C64, UniformizerError> {
        let m = self.map.m();
        let cands = [d / self.multiplier, (d - self.exp_p) / m];
        let mut x = cands[0];
        if (self.local(cands[1]) - d).norm() < (self.local(cands[0]) - d).norm() {
            x = cands[1];
        }
        let tol = 1e-15 * d.norm().max(1e-300);
        for _ in 0..100 {
            let r = self.local(x) - d;
            let der = C64::new(m, 0.0) - self.exp_p * (x.exp());
            if der.norm() < 1e-8 {
                return Err(UniformizerError::Chart("derivative vanishes on the backward branch".into()));
            }
            let step = r / der;
            let mut lam = 1.0;
            let mut moved = false;
            for _ in 0..40 {
                let nx = x - step * lam;
                if nx.re < SATURATION_RE && (self.local(nx) - d).norm() < r.norm() {
                    x = nx;
                    moved = true;
                    break;
                }
                lam *= 0.5;
            }
            let res = (self.local(x) - d).norm();
            if res <= tol || !moved {
                if res > 1e-10 * d.norm().max(1e-300) {
                    return Err(UniformizerError::Chart(format!("backward Newton stalled at δ = {d}")));
                }
                break;
            }
        }
        if x.norm() > d.norm() * 1.0001 {
            return Err(UniformizerError::Chart(format!("backward step from δ = {d} left the branch")));
        }
        Ok(x)
    }

    pub fn backward(&self, z: C64) -> Result<C64, UniformizerError> {
        Ok(self.p + self.backward_local(z - self.p)?)
    }

    /// `κ(z)` and the truncation depth used.
    pub fn eval(&self, z: C64) -> Result<(C64, usize), UniformizerError> {
        let mut d = z - self.p;
        if d.norm() == 0.0 {
            return Ok((C64::new(0.0, 0.0), 0));
        }
        let mut scale = C64::new(1.0, 0.0);
        let mut prev = d + self.b2 * d * d;
        for n in 1..=self.max_depth {
            d = self.backward_local(d)?;
            scale *= self.multiplier;
            let est = scale * (d + self.b2 * d * d);
            if (est - prev).norm() <= self.tol * est.norm().max(1.0) {
                return Ok((est, n));
            }
            prev = est;
        }
        Err(UniformizerError::Chart(format!("no convergence within {} backward steps at {z}", self.max_depth)))
    }

    /// `|κ(f(z)) − a κ(z)|`.
    pub fn conjugacy_residual(&self, z: C64) -> Result<f64, UniformizerError> {
        let (k0, _) = self.eval(z)?;
        let (k1, _) = self.eval(self.map.eval(z))?;
        Ok((k1 - self.multiplier * k0).norm())
    }
}

pub fn koenigs_chart(f: &EntireMap, p: C64) -> Result<KoenigsChart, UniformizerError> {
    KoenigsChart::new(*f, p)
}

/// The repelling real fixed point on the boundary of the Baker domain: the
/// leftmost repelling real fixed point.
pub fn boundary_fixed_point(f: &EntireMap) -> Result<C64, UniformizerError> {
    let fps = f.fixed_points_real(-60.0, 60.0)?;
    fps.iter()
        .filter(|fp| fp.multiplier.abs() > 1.0)
        .map(|fp| C64::new(fp.z, 0.0))
        .next()
        .ok_or_else(|| UniformizerError::Chart("no repelling real fixed point".into()))
}

#[derive(Clone, Debug)]
pub struct Uniformizer {
    pub escape: EscapeCoordinate,
    pub koenigs: KoenigsChart,
    pub p: C64,
    /// Multiplier of `f` at `p`.
    pub multiplier: C64,
    /// Dilation `a` of the model map `G(ζ) = a ζ`.
    pub dilation: f64,
    pub n_rings: usize,
    pub n_angles: usize,
    /// Ψ on rings `|ζ| = a^{i/n_rings}`, angles `π (j + ½)/n_angles`, ring-major.
    pub samples: Vec<C64>,
    pub residual_bound: f64,
    /// Largest `Re φ` reached on horizontal approaches to ∂U (≈ 0⁻ when
    /// `φ(U)` is the full left half-plane).
    pub boundary_level: f64,
    pub max_power: i32,
}

pub fn build_uniformizer(
    f: &EntireMap,
    chart: KoenigsChart,
    boundary_resolution: usize,
    exec: Exec,
) -> Result<Uniformizer, UniformizerError> {
    let n_angles = boundary_resolution.max(8);
    let n_rings = (n_angles / 128).clamp(4, 16);
    let escape = EscapeCoordinate::new(*f);
    let a = f.m();
    let total = (n_rings + 1) * n_angles;
    let raw = exec.map(total, |k| {
        let (i, j) = (k / n_angles, k % n_angles);
        let zeta = ring_point(a, n_rings, n_angles, i, j);
        escape.invert(C64::new(0.0, 1.0) * zeta).ok_or(zeta)
    });
    let mut samples = Vec::with_capacity(total);
    for r in raw {
        samples.push(r.map_err(UniformizerError::Identification)?);
    }
    let mut residual_bound = 0.0f64;
    for j in 0..n_angles {
        let inner = samples[j];
        let outer = samples[n_rings * n_angles + j];
        residual_bound = residual_bound.max((outer - f.eval(inner)).norm());
    }
    let boundary_level = measure_boundary_level(&escape, exec);
    Ok(Uniformizer {
        escape,
        koenigs: chart,
        p: chart.p,
        multiplier: chart.multiplier,
        dilation: a,
        n_rings,
        n_angles,
        samples,
        residual_bound,
        boundary_level,
        max_power: 60,
    })
}

fn ring_point(a: f64, n_rings: usize, n_angles: usize, i: usize, j: usize) -> C64 {
    let r = a.powf(i as f64 / n_rings as f64);
    let th = PI * (j as f64 + 0.5) / n_angles as f64;
    C64::from_polar(r, th)
}

/// Marches right along horizontal lines from deep inside U until φ stops
/// varying continuously, and records the largest `Re φ` seen.
fn measure_boundary_level(escape: &EscapeCoordinate, exec: Exec) -> f64 {
    let heights: Vec<f64> = (-10..=10).map(|k| 1.5 * k as f64 + 0.25).collect();
    let levels = exec.map(heights.len(), |k| {
        let y = heights[k];
        let h = 2e-3;
        let mut z = C64::new(-6.0, y);
        let Some((mut phi, mut dphi)) = escape.eval(z) else { return f64::NEG_INFINITY };
        let mut best = phi.re;
        for _ in 0..20_000 {
            let zn = z + h;
            let Some((pn, dn)) = escape.eval(zn) else { break };
            let expect = phi + dphi * h;
            if (pn - expect).norm() > 0.25 * (dphi.norm() * h) + 1e-12 {
                break;
            }
            z = zn;
            phi = pn;
            dphi = dn;
            best = best.max(phi.re);
        }
        best
    });
    levels.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

impl Uniformizer {
    pub fn sample(&self, ring: usize, angle: usize) -> C64 {
        self.samples[ring * self.n_angles + angle]
    }

    pub fn ring_point(&self, ring: usize, angle: usize) -> C64 {
        ring_point(self.dilation, self.n_rings, self.n_angles, ring, angle)
    }

    /// Ψ by direct continuation, without the equivariant extension.
    pub fn psi_direct(&self, zeta: C64) -> Result<C64, UniformizerError> {
        if !(zeta.im > 0.0) {
            return Err(UniformizerError::NotInUpperHalfPlane(zeta));
        }
        self.escape
            .invert(C64::new(0.0, 1.0) * zeta)
            .ok_or(UniformizerError::Identification(zeta))
    }

    /// `Ψ⁻¹(z) = −i φ(z)` and its derivative, for z in the grand orbit of U.
    pub fn model_coord(&self, z: C64) -> Option<(C64, C64)> {
        let (phi, dphi) = self.escape.eval(z)?;
        let mi = C64::new(0.0, -1.0);
        Some((mi * phi, mi * dphi))
    }

    /// Ψ on the fundamental annulus `1 ≤ |ζ| ≤ a`: table interpolation
    /// polished by Newton on φ, falling back to continuation.
    fn annulus_eval(&self, zeta: C64) -> Result<C64, UniformizerError> {
        let x = zeta.norm().ln() / self.dilation.ln() * self.n_rings as f64;
        let y = zeta.arg() / PI * self.n_angles as f64 - 0.5;
        let (n_r, n_a) = (self.n_rings as f64, self.n_angles as f64);
        if x >= 0.0 && x <= n_r && y >= 0.0 && y <= n_a - 1.0 {
            let i = (x.floor() as usize).min(self.n_rings - 1);
            let j = (y.floor() as usize).min(self.n_angles - 2);
            let (fx, fy) = (x - i as f64, y - j as f64);
            let c = [self.sample(i, j), self.sample(i + 1, j), self.sample(i, j + 1), self.sample(i + 1, j + 1)];
            let seed = c[0] * ((1.0 - fx) * (1.0 - fy)) + c[1] * (fx * (1.0 - fy)) + c[2] * ((1.0 - fx) * fy) + c[3] * (fx * fy);
            let spread = c.iter().map(|v| (v - seed).norm()).fold(0.0, f64::max);
            if let Some((z, _)) = self.escape.newton(seed, C64::new(0.0, 1.0) * zeta) {
                if (z - seed).norm() <= spread + 1e-12 {
                    return Ok(z);
                }
            }
        }
        self.psi_direct(zeta)
    }

    /// Ψ(ζ) through the equivariant extension `Ψ(a^n ζ₀) = f^n(Ψ(ζ₀))`.
    pub fn psi_eval(&self, zeta: C64) -> Result<C64, UniformizerError> {
        if !(zeta.im > 0.0) {
            return Err(UniformizerError::NotInUpperHalfPlane(zeta));
        }
        let a = self.dilation;
        let r = zeta.norm();
        let mut n = (r.ln() / a.ln()).floor() as i32;
        let mut z0 = zeta / a.powi(n);
        // Guard the rounding at ring boundaries.
        if z0.norm() < 1.0 {
            n -= 1;
            z0 *= a;
        } else if z0.norm() >= a {
            n += 1;
            z0 /= a;
        }
        if n.abs() > self.max_power {
            return Err(UniformizerError::OutOfRange(r));
        }
        let mut z = self.annulus_eval(z0)?;
        if n > 0 {
            for _ in 0..n {
                z = self.escape.map().eval_checked(z).map_err(|_| UniformizerError::Saturated(zeta))?;
            }
        } else {
            for _ in 0..(-n) {
                z = self.koenigs.backward(z)?;
            }
        }
        Ok(z)
    }

    /// Sup of `|Ψ(a ζ) − f(Ψ(ζ))|` over `count` fundamental-annulus samples,
    /// both sides by direct continuation.
    pub fn functional_residual(&self, count: usize, exec: Exec) -> Result<f64, UniformizerError> {
        let side = (count as f64).sqrt().ceil() as usize;
        let a = self.dilation;
        let pts: Vec<C64> = (0..count)
            .map(|k| {
                let (i, j) = (k / side, k % side);
                let r = a.powf((i as f64 + 0.5) / side as f64);
                let th = PI * (j as f64 + 0.5) / side as f64;
                C64::from_polar(r, th)
            })
            .collect();
        let f = *self.escape.map();
        let res = exec.map(pts.len(), |k| -> Result<f64, UniformizerError> {
            let z = self.psi_direct(pts[k])?;
            let w = self.psi_direct(pts[k] * a)?;
            Ok((w - f.eval(z)).norm())
        });
        let mut sup = 0.0f64;
        for r in res {
            sup = sup.max(r?);
        }
        Ok(sup)
    }

    pub fn quotient_modulus(&self) -> f64 {
        quotient_modulus(self.dilation)
    }

    /// Ratio `log a_G / log |f'(p)|` between the model dilation and the
    /// multiplier at p.
    pub fn dilation_ratio(&self) -> f64 {
        self.dilation.ln() / self.multiplier.norm().ln()
    }

    /// Binary table: magic `PSIT`, u32 version 1, then little-endian f64
    /// `m, c.re, c.im, p.re, p.im, a_p.re, a_p.im, a, residual_bound,
    /// boundary_level`, u32 `n_rings`, u32 `n_angles`, and
    /// `(n_rings + 1) · n_angles` samples as `(re, im)` pairs.
    pub fn write_table<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(b"PSIT")?;
        w.write_all(&1u32.to_le_bytes())?;
        let f = self.escape.map();
        for v in [
            f.m(),
            f.c().re,
            f.c().im,
            self.p.re,
            self.p.im,
            self.multiplier.re,
            self.multiplier.im,
            self.dilation,
            self.residual_bound,
            self.boundary_level,
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&(self.n_rings as u32).to_le_bytes())?;
        w.write_all(&(self.n_angles as u32).to_le_bytes())?;
        for s in &self.samples {
            w.write_all(&s.re.to_le_bytes())?;
            w.write_all(&s.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_table<R: Read>(mut r: R) -> Result<Uniformizer, UniformizerError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"PSIT" {
            return Err(UniformizerError::Format("bad magic".into()));
        }
        let version = read_u32(&mut r)?;
        if version != 1 {
            return Err(UniformizerError::Format(format!("unsupported version {version}")));
        }
        let mut v = [0.0f64; 10];
        for x in v.iter_mut() {
            *x = read_f64(&mut r)?;
        }
        let n_rings = read_u32(&mut r)? as usize;
        let n_angles = read_u32(&mut r)? as usize;
        if n_rings == 0 || n_angles < 2 || n_rings * n_angles > 1 << 26 {
            return Err(UniformizerError::Format("bad table dimensions".into()));
        }
        let mut samples = Vec::with_capacity((n_rings + 1) * n_angles);
        for _ in 0..(n_rings + 1) * n_angles {
            let re = read_f64(&mut r)?;
            let im = read_f64(&mut r)?;
            samples.push(C64::new(re, im));
        }
        let map = EntireMap::new(v[0], C64::new(v[1], v[2]))?;
        let p = C64::new(v[3], v[4]);
        let koenigs = KoenigsChart::new(map, p)?;
        Ok(Uniformizer {
            escape: EscapeCoordinate::new(map),
            koenigs,
            p,
            multiplier: C64::new(v[5], v[6]),
            dilation: v[7],
            n_rings,
            n_angles,
            samples,
            residual_bound: v[8],
            boundary_level: v[9],
            max_power: 60,
        })
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_table(&mut w)?;
        w.flush()
    }

    pub fn load(path: &Path) -> Result<Uniformizer, UniformizerError> {
        let file = std::fs::File::open(path)?;
        Uniformizer::read_table(std::io::BufReader::new(file))
    }
}

fn read_u32<R: Read>(r: &mut R) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> std::io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Modulus `π / log a` of the quotient annulus ℍ/⟨ζ ↦ aζ⟩.
pub fn quotient_modulus(a: f64) -> f64 {
    PI / a.ln()
}
