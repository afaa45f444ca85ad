//! Pinching Beltrami coefficients and their integration to normalized
//! quasiconformal maps on a square grid.

use crate::entire::EntireMap;
use crate::exec::Exec;
use crate::grid::{Grid, Region};
use crate::lamination::BakerLamination;
use crate::uniformizer::EscapeCoordinate;
use crate::C64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::{Arc, OnceLock};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BeltramiError {
    #[error("invalid profile: {0}")]
    Profile(String),
    #[error("solver needs square cells, got {dx} × {dy}")]
    NonSquare { dx: f64, dy: f64 },
    #[error("sup |μ| = {0} is not below 1")]
    NotContracting(f64),
    #[error("field grid does not match the solver grid")]
    GridMismatch,
    #[error("no convergence in {iterations} iterations, last relative residual {last}")]
    NotConverged { iterations: usize, last: f64, history: Vec<f64> },
    #[error("residual certificate {residual} exceeds {tol}")]
    Certificate { residual: f64, tol: f64 },
    #[error("degenerate normalization: h(p) = h(q)")]
    Degenerate,
    #[error("inversion failed at {0}")]
    Inversion(C64),
    #[error("bad file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// `s(x) = x³(10 − 15x + 6x²)`, clamped to `[0, 1]`.
fn smootherstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * x * (10.0 + x * (-15.0 + 6.0 * x))
}

/// Bump on `[0, 1]`: rises on the first quarter, equals 1 on the middle
/// half, falls on the last quarter.
pub fn bump(u: f64) -> f64 {
    if !(u > 0.0 && u < 1.0) {
        0.0
    } else if u < 0.5 {
        smootherstep(4.0 * u)
    } else {
        smootherstep(4.0 * (1.0 - u))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PinchProfile {
    pub t: f64,
    pub l_inner: f64,
    pub l_outer: f64,
}

pub fn pinch_profile(t: f64, l_inner: f64, l_outer: f64) -> Result<PinchProfile, BeltramiError> {
    if !(0.0..1.0).contains(&t) {
        return Err(BeltramiError::Profile(format!("t must lie in [0, 1), got {t}")));
    }
    if !(l_inner > 0.0 && l_inner < l_outer && l_outer.is_finite()) {
        return Err(BeltramiError::Profile(format!("need 0 < L_inner < L_outer, got {l_inner}, {l_outer}")));
    }
    Ok(PinchProfile { t, l_inner, l_outer })
}

impl PinchProfile {
    /// Coefficient magnitude `k_t(y)` at band height `y`.
    pub fn k(&self, y: f64) -> f64 {
        self.t * bump((y.abs() - self.l_inner) / (self.l_outer - self.l_inner))
    }
}

/// Coefficient `−k_t(Im ψ) · conj(ψ')/ψ'` of the band chart ψ.
pub fn band_coefficient(profile: &PinchProfile, psi: C64, dpsi: C64) -> C64 {
    let k = profile.k(psi.im);
    if k == 0.0 {
        return C64::new(0.0, 0.0);
    }
    -k * dpsi.conj() / dpsi
}

#[derive(Clone, Debug)]
pub struct BeltramiField {
    pub grid: Grid,
    pub t: f64,
    pub mu: Vec<C64>,
    pub sup_norm: f64,
    /// Cells left at zero because a chart or derivative failed.
    pub gaps: usize,
    /// Support cells where the pinch zone spans fewer cells than the
    /// truncation's `min_cells`.
    pub unresolved: usize,
}

impl BeltramiField {
    pub fn zero(grid: Grid, t: f64) -> BeltramiField {
        BeltramiField { grid, t, mu: vec![C64::new(0.0, 0.0); grid.len()], sup_norm: 0.0, gaps: 0, unresolved: 0 }
    }

    pub fn from_values(grid: Grid, t: f64, mu: Vec<C64>) -> BeltramiField {
        let sup_norm = mu.iter().map(|m| m.norm()).fold(0.0, f64::max);
        BeltramiField { grid, t, mu, sup_norm, gaps: 0, unresolved: 0 }
    }

    pub fn support_len(&self) -> usize {
        self.mu.iter().filter(|m| m.norm() > 0.0).count()
    }

    /// Binary layout: magic `BFLD`, u32 version 1, f64 region
    /// `re_lo, im_lo, re_hi, im_hi`, u32 `n`, f64 `t`, f64 `sup_norm`,
    /// u64 `gaps`, u64 `unresolved`, then `n²` coefficients `(re, im)` in
    /// row-major order.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(b"BFLD")?;
        w.write_all(&1u32.to_le_bytes())?;
        write_region(&mut w, &self.grid.region)?;
        w.write_all(&(self.grid.n as u32).to_le_bytes())?;
        w.write_all(&self.t.to_le_bytes())?;
        w.write_all(&self.sup_norm.to_le_bytes())?;
        w.write_all(&(self.gaps as u64).to_le_bytes())?;
        w.write_all(&(self.unresolved as u64).to_le_bytes())?;
        write_c64s(&mut w, &self.mu)
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<BeltramiField, BeltramiError> {
        expect_header(&mut r, b"BFLD")?;
        let region = read_region(&mut r)?;
        let n = read_u32(&mut r)? as usize;
        check_n(n)?;
        let t = read_f64(&mut r)?;
        let sup_norm = read_f64(&mut r)?;
        let gaps = read_u64(&mut r)? as usize;
        let unresolved = read_u64(&mut r)? as usize;
        let mu = read_c64s(&mut r, n * n)?;
        Ok(BeltramiField { grid: Grid::new(region, n), t, mu, sup_norm, gaps, unresolved })
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()
    }

    pub fn load(path: &Path) -> Result<BeltramiField, BeltramiError> {
        BeltramiField::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// Restricts a field evaluation to `|z| ≤ r_max`, at most `depth` pullbacks
/// from U, and cells at least `margin` cells inside the grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Truncation {
    pub depth: usize,
    pub r_max: f64,
    pub margin: usize,
    /// Pinch zones narrower than this many cells count as unresolved.
    pub min_cells: f64,
}

/// The f-invariant pinching field of a lamination, evaluated pointwise.
#[derive(Clone, Debug)]
pub struct PinchField<'a> {
    pub map: EntireMap,
    pub escape: EscapeCoordinate,
    pub lamination: &'a BakerLamination,
    pub profile: PinchProfile,
    /// Grid and mask of the Baker domain U itself.
    pub u_grid: Grid,
    pub u_mask: &'a [bool],
    /// Points left of this line count as U once they leave the mask grid.
    pub u_half_plane: f64,
}

impl<'a> PinchField<'a> {
    fn in_u(&self, z: C64) -> bool {
        match self.u_grid.locate(z) {
            Some((i, j)) => self.u_mask[self.u_grid.index(i, j)],
            None => z.re < self.u_half_plane,
        }
    }

    /// First `k ≤ depth` with `f^k(z) ∈ U`, and `(f^k)'(z)`.
    pub fn depth_of(&self, z: C64, depth: usize) -> Option<(usize, C64, C64)> {
        let mut w = z;
        let mut d = C64::new(1.0, 0.0);
        for k in 0..=depth {
            if self.in_u(w) {
                return Some((k, w, d));
            }
            if k == depth {
                break;
            }
            let nw = self.map.eval_checked(w).ok()?;
            d *= self.map.deriv(w);
            w = nw;
            if !(w.re.is_finite() && w.im.is_finite() && d.norm().is_finite()) {
                return None;
            }
        }
        None
    }

    /// Depth-0 coefficient on U, the band coefficient pulled back by
    /// Φ = −iφ, with `|(ψ ∘ Φ)'|`.
    pub fn depth0_scaled(&self, z: C64) -> Option<(C64, f64)> {
        let (phi, dphi) = self.escape.eval(z)?;
        let zeta = C64::new(0.0, -1.0) * phi;
        let Some(hit) = self.lamination.band_at(zeta) else {
            return Some((C64::new(0.0, 0.0), 0.0));
        };
        let mu = band_coefficient(&self.profile, hit.psi, hit.dpsi);
        if mu.norm() == 0.0 {
            return Some((mu, 0.0));
        }
        if !(dphi.norm() > 1e-300 && dphi.norm().is_finite()) {
            return None;
        }
        // conj(Φ')/Φ' with Φ' = −iφ'.
        Some((mu * (-dphi.conj() / dphi), hit.dpsi.norm() * dphi.norm()))
    }

    pub fn depth0(&self, z: C64) -> Option<C64> {
        self.depth0_scaled(z).map(|v| v.0)
    }

    /// Coefficient by the pullback rule `μ(f^k z) · conj((f^k)'(z))/(f^k)'(z)`,
    /// with the chart scale `|(ψ ∘ Φ ∘ f^k)'(z)|`. `None` marks a gap.
    pub fn value_scaled(&self, z: C64, depth: usize) -> Option<(C64, f64)> {
        let Some((k, w, d)) = self.depth_of(z, depth) else {
            return Some((C64::new(0.0, 0.0), 0.0));
        };
        let (mu, scale) = self.depth0_scaled(w)?;
        if k == 0 || mu.norm() == 0.0 {
            return Some((mu, scale));
        }
        if !(d.norm() > 1e-300 && d.norm().is_finite()) {
            return None;
        }
        Some((mu * d.conj() / d, scale * d.norm()))
    }

    pub fn value(&self, z: C64, depth: usize) -> Option<C64> {
        self.value_scaled(z, depth).map(|v| v.0)
    }

    pub fn assemble(&self, grid: Grid, trunc: Truncation, exec: Exec) -> BeltramiField {
        let n = grid.n;
        let m = trunc.margin;
        let zero = C64::new(0.0, 0.0);
        let width = self.profile.l_outer - self.profile.l_inner;
        let vals = exec.map(grid.len(), |k| {
            let (i, j) = grid.coords(k);
            if i < m || j < m || i + m >= n || j + m >= n {
                return Some((zero, 0.0));
            }
            let z = grid.center_of(k);
            if z.norm() > trunc.r_max {
                return Some((zero, 0.0));
            }
            self.value_scaled(z, trunc.depth)
        });
        let (mut gaps, mut unresolved) = (0, 0);
        let h = grid.dx();
        let mu: Vec<C64> = vals
            .into_iter()
            .map(|v| match v {
                None => {
                    gaps += 1;
                    zero
                }
                Some((mu, scale)) => {
                    if mu.norm() > 0.0 && width < trunc.min_cells * scale * h {
                        unresolved += 1;
                    }
                    mu
                }
            })
            .collect();
        let mut field = BeltramiField::from_values(grid, self.profile.t, mu);
        field.gaps = gaps;
        field.unresolved = unresolved;
        field
    }
}

/// Spreads a depth-0 coefficient to depth-k cells by the holomorphic
/// pullback rule. `depth0` is consulted only at points of U.
pub fn spread_field<F>(f: &EntireMap, field: &BeltramiField, in_u: impl Fn(C64) -> bool + Sync, depth0: F, depth: usize, exec: Exec) -> BeltramiField
where
    F: Fn(C64) -> Option<C64> + Sync,
{
    let grid = field.grid;
    let vals = exec.map(grid.len(), |k| {
        let z = grid.center_of(k);
        if in_u(z) || depth == 0 {
            return Some(field.mu[k]);
        }
        let mut w = z;
        let mut d = C64::new(1.0, 0.0);
        for _ in 0..depth {
            d *= f.deriv(w);
            w = f.eval_checked(w).ok()?;
            if in_u(w) {
                let mu = depth0(w)?;
                if mu.norm() == 0.0 {
                    return Some(mu);
                }
                if !(d.norm() > 1e-300 && d.norm().is_finite()) {
                    return None;
                }
                return Some(mu * d.conj() / d);
            }
        }
        Some(field.mu[k])
    });
    let mut gaps = 0;
    let mu = vals
        .into_iter()
        .map(|v| {
            v.unwrap_or_else(|| {
                gaps += 1;
                C64::new(0.0, 0.0)
            })
        })
        .collect();
    let mut out = BeltramiField::from_values(grid, field.t, mu);
    out.gaps = field.gaps + gaps;
    out
}

/// Exact integrals of `1/ζ` and `1/ζ²` over the cell of side `h` centred at
/// `c ≠ 0`, via holomorphic antiderivatives with `∂²F/∂x∂y` equal to the
/// integrand.
pub fn cell_integrals(c: C64, h: f64) -> (C64, C64) {
    let i = C64::new(0.0, 1.0);
    let f1 = |z: C64| -i * (z * (z / c).ln() - z);
    let f2 = |z: C64| i * (z / c).ln();
    let hh = 0.5 * h;
    let z11 = c + C64::new(hh, hh);
    let z01 = c + C64::new(-hh, hh);
    let z10 = c + C64::new(hh, -hh);
    let z00 = c + C64::new(-hh, -hh);
    (
        f1(z11) - f1(z01) - f1(z10) + f1(z00),
        f2(z11) - f2(z01) - f2(z10) + f2(z00),
    )
}

/// 2-D FFT on an `m × m` row-major buffer: row pass, transpose, row pass.
/// The spectrum comes out transposed; the inverse undoes that.
struct Fft2 {
    m: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(m: usize) -> Fft2 {
        let mut planner = FftPlanner::new();
        Fft2 { m, fwd: planner.plan_fft_forward(m), inv: planner.plan_fft_inverse(m) }
    }

    fn run(&self, buf: &mut [C64], inverse: bool, exec: Exec) {
        let plan = if inverse { &self.inv } else { &self.fwd };
        let m = self.m;
        let pass = |buf: &mut [C64]| {
            exec.for_chunks(buf, m * 16, |_, rows| {
                let mut scratch = vec![C64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
                for row in rows.chunks_mut(m) {
                    plan.process_with_scratch(row, &mut scratch);
                }
            })
        };
        pass(buf);
        transpose(buf, m);
        pass(buf);
    }
}

fn transpose(buf: &mut [C64], m: usize) {
    const B: usize = 32;
    for bi in (0..m).step_by(B) {
        for bj in (bi..m).step_by(B) {
            for i in bi..(bi + B).min(m) {
                let j0 = if bi == bj { i + 1 } else { bj };
                for j in j0..(bj + B).min(m) {
                    buf.swap(i * m + j, j * m + i);
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Gmres,
    Neumann,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub max_iter: usize,
    /// Relative ℓ² tolerance of the iteration.
    pub tol: f64,
    /// Contract on the sup-norm certificate `sup |ω − μ(1 + Sω)|`.
    pub residual_tol: f64,
    pub method: Method,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { max_iter: 200, tol: 1e-6, residual_tol: 1e-3, method: Method::Gmres }
    }
}

/// Cauchy and Beurling transforms on a fixed grid, by zero-padded FFT
/// convolution with exact cell kernels.
pub struct Solver {
    pub grid: Grid,
    pub exec: Exec,
    fft: Fft2,
    cauchy_hat: Vec<C64>,
    beurling_hat: Vec<C64>,
    wide: OnceLock<(Fft2, Vec<C64>)>,
}

fn kernel_hats(fft: &Fft2, n: usize, h: f64, exec: Exec, beurling: bool) -> (Vec<C64>, Vec<C64>) {
    let m = 2 * n;
    // Correlation kernel K(d) stored reversed so that a convolution applies it.
    let kernels = exec.map(m * m, |k| {
        let (r, c) = (k / m, k % m);
        let dx = -wrap(c, m);
        let dy = -wrap(r, m);
        if dx == 0 && dy == 0 || dx.unsigned_abs() as usize >= n || dy.unsigned_abs() as usize >= n {
            return (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        }
        let (k1, k2) = cell_integrals(C64::new(dx as f64 * h, dy as f64 * h), h);
        (-k1 / PI, -k2 / PI)
    });
    let mut cauchy_hat: Vec<C64> = kernels.iter().map(|k| k.0).collect();
    let mut beurling_hat: Vec<C64> = if beurling { kernels.iter().map(|k| k.1).collect() } else { Vec::new() };
    drop(kernels);
    let scale = 1.0 / (m * m) as f64;
    for hat in [&mut cauchy_hat, &mut beurling_hat] {
        if !hat.is_empty() {
            fft.run(hat, false, exec);
            hat.iter_mut().for_each(|v| *v *= scale);
        }
    }
    (cauchy_hat, beurling_hat)
}

impl Solver {
    pub fn new(grid: Grid, exec: Exec) -> Result<Solver, BeltramiError> {
        let (dx, dy) = (grid.dx(), grid.dy());
        if (dx - dy).abs() > 1e-12 * dx.max(dy) {
            return Err(BeltramiError::NonSquare { dx, dy });
        }
        let fft = Fft2::new(2 * grid.n);
        let (cauchy_hat, beurling_hat) = kernel_hats(&fft, grid.n, dx, exec, true);
        Ok(Solver { grid, exec, fft, cauchy_hat, beurling_hat, wide: OnceLock::new() })
    }

    fn apply(&self, hat: &[C64], w: &[C64]) -> Vec<C64> {
        convolve(&self.fft, hat, self.grid.n, 0, w, self.exec)
    }

    /// Cauchy transform on the grid widened by [`halo_width`] cells on each
    /// side, row-major.
    pub fn cauchy_wide(&self, w: &[C64]) -> Vec<C64> {
        let hw = halo_width(self.grid.n) as usize;
        let nw = self.grid.n + 2 * hw;
        let (fft, hat) = self.wide.get_or_init(|| {
            let fft = Fft2::new(2 * nw);
            let hat = kernel_hats(&fft, nw, self.grid.dx(), self.exec, false).0;
            (fft, hat)
        });
        convolve(fft, hat, nw, hw, w, self.exec)
    }


    /// Beurling transform `Sω(z) = −(1/π) p.v. ∫ ω(ζ)/(ζ − z)² dA(ζ)` at cell centres.
    pub fn beurling(&self, w: &[C64]) -> Vec<C64> {
        self.apply(&self.beurling_hat, w)
    }

    /// Cauchy transform `Cω(z) = −(1/π) ∫ ω(ζ)/(ζ − z) dA(ζ)` at cell centres.
    pub fn cauchy(&self, w: &[C64]) -> Vec<C64> {
        self.apply(&self.cauchy_hat, w)
    }

    /// Solves `h_z̄ = μ h_z` with `h(z) = z + Cω`, `ω = μ(1 + Sω)`.
    pub fn solve(&self, field: &BeltramiField, opts: &SolveOptions) -> Result<QcMap, BeltramiError> {
        if field.grid != self.grid {
            return Err(BeltramiError::GridMismatch);
        }
        if !(field.sup_norm < 1.0) {
            return Err(BeltramiError::NotContracting(field.sup_norm));
        }
        let n2 = self.grid.len();
        if field.sup_norm == 0.0 {
            return Ok(QcMap::identity(self.grid));
        }
        let supp: Vec<usize> = (0..n2).filter(|&k| field.mu[k].norm() > 0.0).collect();
        let mu_s: Vec<C64> = supp.iter().map(|&k| field.mu[k]).collect();
        let scatter = |x: &[C64]| {
            let mut w = vec![C64::new(0.0, 0.0); n2];
            for (&k, &v) in supp.iter().zip(x) {
                w[k] = v;
            }
            w
        };
        let mu_s_of = |x: &[C64]| -> Vec<C64> {
            let s = self.beurling(&scatter(x));
            supp.iter().zip(&mu_s).map(|(&k, &m)| m * s[k]).collect()
        };
        let b = mu_s.clone();
        let (x, history) = match opts.method {
            Method::Gmres => {
                let op = |x: &[C64]| -> Vec<C64> {
                    let ms = mu_s_of(x);
                    x.iter().zip(ms).map(|(a, c)| a - c).collect()
                };
                gmres(op, &b, opts.tol, opts.max_iter)
            }
            Method::Neumann => {
                let bn = norm2(&b);
                let mut x = b.clone();
                let mut hist = Vec::new();
                for _ in 0..opts.max_iter {
                    let ms = mu_s_of(&x);
                    let nx: Vec<C64> = b.iter().zip(ms).map(|(a, c)| a + c).collect();
                    let diff: f64 = nx.iter().zip(&x).map(|(a, c)| (a - c).norm_sqr()).sum::<f64>().sqrt();
                    x = nx;
                    hist.push(diff / bn);
                    if diff / bn < opts.tol {
                        break;
                    }
                }
                (x, hist)
            }
        };
        let last = history.last().copied().unwrap_or(0.0);
        if !(last < opts.tol) {
            return Err(BeltramiError::NotConverged { iterations: history.len(), last, history });
        }
        let omega = scatter(&x);
        let s = self.beurling(&omega);
        let wide = self.cauchy_wide(&omega);
        let mut residual = 0.0f64;
        for k in 0..n2 {
            residual = residual.max((omega[k] - field.mu[k] * (C64::new(1.0, 0.0) + s[k])).norm());
        }
        if !(residual < opts.residual_tol) {
            return Err(BeltramiError::Certificate { residual, tol: opts.residual_tol });
        }
        let (n, hw) = (self.grid.n, halo_width(self.grid.n));
        let nw = n + 2 * hw as usize;
        let lattice = |i: i64, j: i64| {
            let g = &self.grid;
            g.center(0, 0) + C64::new(i as f64 * g.dx(), j as f64 * g.dy()) + wide[(j + hw) as usize * nw + (i + hw) as usize]
        };
        let values: Vec<C64> = (0..n2).map(|k| lattice((k % n) as i64, (k / n) as i64)).collect();
        let hz: Vec<C64> = s.iter().map(|v| C64::new(1.0, 0.0) + v).collect();
        let out = QcMap::from_parts(self.grid, values, omega, hz, residual, history);
        let ring = (0..ring_len(n))
            .map(|r| {
                let (i, j) = ring_coords(n, r);
                OnceLock::from(lattice(i, j))
            })
            .collect();
        let _ = out.halo.set(ring);
        Ok(out)
    }
}

/// Convolves an `n0 × n0` field, placed at offset `(off, off)` in an
/// `n × n` frame, with a kernel spectrum on the doubled frame.
fn convolve(fft: &Fft2, hat: &[C64], n: usize, off: usize, w: &[C64], exec: Exec) -> Vec<C64> {
    let m = 2 * n;
    let n0 = n - 2 * off;
    let mut buf = vec![C64::new(0.0, 0.0); m * m];
    for j in 0..n0 {
        let r = (j + off) * m + off;
        buf[r..r + n0].copy_from_slice(&w[j * n0..(j + 1) * n0]);
    }
    fft.run(&mut buf, false, exec);
    exec.for_chunks(&mut buf, m, |r, row| {
        for (x, k) in row.iter_mut().zip(&hat[r * m..(r + 1) * m]) {
            *x *= k;
        }
    });
    fft.run(&mut buf, true, exec);
    let mut out = vec![C64::new(0.0, 0.0); n * n];
    for j in 0..n {
        out[j * n..(j + 1) * n].copy_from_slice(&buf[j * m..j * m + n]);
    }
    out
}

fn wrap(i: usize, m: usize) -> i64 {
    if i < m / 2 {
        i as i64
    } else {
        i as i64 - m as i64
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm2(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Unrestarted GMRES from `x₀ = b`, with Givens rotations and modified
/// Gram–Schmidt. Returns the iterate and the relative residual history.
pub fn gmres<A>(op: A, b: &[C64], tol: f64, max_iter: usize) -> (Vec<C64>, Vec<f64>)
where
    A: Fn(&[C64]) -> Vec<C64>,
{
    let bn = norm2(b);
    let mut x = b.to_vec();
    if bn == 0.0 {
        return (x, vec![0.0]);
    }
    let ax = op(&x);
    let r: Vec<C64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
    let beta = norm2(&r);
    let mut history = vec![beta / bn];
    if beta / bn < tol || max_iter == 0 {
        return (x, history);
    }
    let mut v: Vec<Vec<C64>> = vec![r.iter().map(|z| z / beta).collect()];
    let mut hcols: Vec<Vec<C64>> = Vec::new();
    let mut cs: Vec<f64> = Vec::new();
    let mut sn: Vec<C64> = Vec::new();
    let mut g = vec![C64::new(beta, 0.0)];
    for k in 0..max_iter {
        let mut w = op(&v[k]);
        let mut col = vec![C64::new(0.0, 0.0); k + 2];
        for (j, vj) in v.iter().enumerate() {
            let hjk = dot(vj, &w);
            col[j] = hjk;
            for (wi, vi) in w.iter_mut().zip(vj) {
                *wi -= hjk * vi;
            }
        }
        let hn = norm2(&w);
        col[k + 1] = C64::new(hn, 0.0);
        for j in 0..k {
            let t = cs[j] * col[j] + sn[j] * col[j + 1];
            col[j + 1] = -sn[j].conj() * col[j] + cs[j] * col[j + 1];
            col[j] = t;
        }
        let (a, bb) = (col[k], col[k + 1]);
        let den = (a.norm_sqr() + bb.norm_sqr()).sqrt();
        let (c, s) = if a.norm() == 0.0 {
            (0.0, C64::new(1.0, 0.0))
        } else {
            let c = a.norm() / den;
            (c, (a / a.norm()) * bb.conj() / den)
        };
        col[k] = C64::new(c, 0.0) * a + s * bb;
        col[k + 1] = C64::new(0.0, 0.0);
        cs.push(c);
        sn.push(s);
        let gk = g[k];
        g.push(-s.conj() * gk);
        g[k] = c * gk;
        hcols.push(col);
        let rel = g[k + 1].norm() / bn;
        history.push(rel);
        let done = rel < tol || hn == 0.0 || k + 1 == max_iter;
        if !done {
            v.push(w.iter().map(|z| z / hn).collect());
        }
        if done {
            let kk = k + 1;
            let mut y = vec![C64::new(0.0, 0.0); kk];
            for i in (0..kk).rev() {
                let mut s = g[i];
                for j in i + 1..kk {
                    s -= hcols[j][i] * y[j];
                }
                y[i] = s / hcols[i][i];
            }
            for (j, yj) in y.iter().enumerate() {
                for (xi, vi) in x.iter_mut().zip(&v[j]) {
                    *xi += yj * vi;
                }
            }
            break;
        }
    }
    (x, history)
}

/// Far-field expansion of the Cauchy transform about the support centre.
#[derive(Clone, Debug)]
struct Multipole {
    center: C64,
    radius: f64,
    moments: Vec<C64>,
}

/// A quasiconformal map sampled at cell centres, post-composed with the
/// affine normalization `z ↦ αz + β`.
#[derive(Clone, Debug)]
pub struct QcMap {
    pub grid: Grid,
    /// Unnormalized `h = z + Cω` at cell centres.
    pub values: Vec<C64>,
    pub omega: Vec<C64>,
    pub hz: Vec<C64>,
    pub alpha: C64,
    pub beta: C64,
    pub identity: bool,
    pub residual: f64,
    pub history: Vec<f64>,
    support: Vec<usize>,
    far: OnceLock<Multipole>,
    index: OnceLock<SeedIndex>,
    halo: OnceLock<Vec<OnceLock<C64>>>,
}

impl QcMap {
    pub fn identity(grid: Grid) -> QcMap {
        let values = grid.centers().collect();
        let zero = vec![C64::new(0.0, 0.0); grid.len()];
        let one = vec![C64::new(1.0, 0.0); grid.len()];
        QcMap {
            grid,
            values,
            omega: zero,
            hz: one,
            alpha: C64::new(1.0, 0.0),
            beta: C64::new(0.0, 0.0),
            identity: true,
            residual: 0.0,
            history: Vec::new(),
            support: Vec::new(),
            far: OnceLock::new(),
            index: OnceLock::new(),
            halo: OnceLock::new(),
        }
    }

    pub fn from_parts(grid: Grid, values: Vec<C64>, omega: Vec<C64>, hz: Vec<C64>, residual: f64, history: Vec<f64>) -> QcMap {
        let support: Vec<usize> = (0..grid.len()).filter(|&k| omega[k].norm() > 0.0).collect();
        let identity = support.is_empty();
        QcMap {
            grid,
            values,
            omega,
            hz,
            alpha: C64::new(1.0, 0.0),
            beta: C64::new(0.0, 0.0),
            identity,
            residual,
            history,
            support,
            far: OnceLock::new(),
            index: OnceLock::new(),
            halo: OnceLock::new(),
        }
    }

    /// Lattice value at centre `(i, j)`, extended by a ring of [`halo_width`]
    /// nodes outside the grid that are evaluated exactly on first use.
    fn node(&self, i: i64, j: i64) -> C64 {
        let n = self.grid.n as i64;
        if (0..n).contains(&i) && (0..n).contains(&j) {
            return self.values[self.grid.index(i as usize, j as usize)];
        }
        let k = ring_index(n, i, j);
        let ring = self.halo.get_or_init(|| (0..ring_len(self.grid.n)).map(|_| OnceLock::new()).collect());
        *ring[k].get_or_init(|| {
            let g = &self.grid;
            let z = g.center(0, 0) + C64::new(i as f64 * g.dx(), j as f64 * g.dy());
            self.eval_direct(z)
        })
    }

    fn in_lattice(&self, i: i64, j: i64) -> bool {
        let n = self.grid.n as i64;
        let h = halo_width(self.grid.n);
        i >= -h && j >= -h && i < n - 1 + h && j < n - 1 + h
    }

    fn bilinear(&self, z: C64) -> Option<C64> {
        let g = &self.grid;
        let x = (z.re - g.region.re_lo) / g.dx() - 0.5;
        let y = (z.im - g.region.im_lo) / g.dy() - 0.5;
        if !(x.is_finite() && y.is_finite()) {
            return None;
        }
        let (i, j) = (x.floor() as i64, y.floor() as i64);
        if !self.in_lattice(i, j) {
            return None;
        }
        let (fx, fy) = (x - i as f64, y - j as f64);
        Some(
            self.node(i, j) * ((1.0 - fx) * (1.0 - fy))
                + self.node(i + 1, j) * (fx * (1.0 - fy))
                + self.node(i, j + 1) * ((1.0 - fx) * fy)
                + self.node(i + 1, j + 1) * (fx * fy),
        )
    }

    fn multipole(&self) -> &Multipole {
        self.far.get_or_init(|| {
            let g = &self.grid;
            let center = g.region.center();
            let h = g.dx();
            let mut radius = 0.0f64;
            for &k in &self.support {
                radius = radius.max((g.center_of(k) - center).norm() + h);
            }
            let mut moments = vec![C64::new(0.0, 0.0); 48];
            for &k in &self.support {
                let a = self.omega[k] * (h * h);
                let d = g.center_of(k) - center;
                let mut p = C64::new(1.0, 0.0);
                for mk in moments.iter_mut() {
                    *mk += a * p;
                    p *= d;
                }
            }
            Multipole { center, radius, moments }
        })
    }

    /// Unnormalized `h(z) = z + Cω(z)` anywhere in the plane.
    pub fn eval_raw(&self, z: C64) -> C64 {
        if self.identity {
            return z;
        }
        if let Some(v) = self.bilinear(z) {
            return v;
        }
        let mp = self.multipole();
        let d = z - mp.center;
        if d.norm() > 2.0 * mp.radius {
            // −(1/π) Σ a_j/(ζ_j − z) = (1/π) Σ_k M_k / d^{k+1}.
            let inv = C64::new(1.0, 0.0) / d;
            let mut p = inv;
            let mut s = C64::new(0.0, 0.0);
            for mk in &mp.moments {
                s += mk * p;
                p *= inv;
            }
            return z + s / PI;
        }
        self.eval_direct(z)
    }

    /// Cell-integral Cauchy sum over the support, exact at any point.
    pub fn eval_direct(&self, z: C64) -> C64 {
        if self.identity {
            return z;
        }
        let h = self.grid.dx();
        let mut s = C64::new(0.0, 0.0);
        for &k in &self.support {
            let c = self.grid.center_of(k) - z;
            let k1 = if c.norm() < 4.0 * h { cell_integrals(c, h).0 } else { C64::new(h * h, 0.0) / c };
            s += self.omega[k] * k1;
        }
        z - s / PI
    }

    /// Normalized map `α h(z) + β`. Bit-exact identity for the zero field.
    pub fn eval(&self, z: C64) -> C64 {
        if self.identity && self.alpha == C64::new(1.0, 0.0) && self.beta == C64::new(0.0, 0.0) {
            return z;
        }
        self.alpha * self.eval_raw(z) + self.beta
    }

    /// Post-composes the affine map fixing ∞ with `p ↦ p`, `q ↦ q`.
    pub fn normalize(&self, p: C64, q: C64) -> Result<QcMap, BeltramiError> {
        let (hp, hq) = (self.eval(p), self.eval(q));
        if (hp - hq).norm() <= 1e-14 * (hp.norm() + hq.norm()).max(1e-300) {
            return Err(BeltramiError::Degenerate);
        }
        let a = (p - q) / (hp - hq);
        let b = p - a * hp;
        let mut out = self.clone();
        out.alpha = a * self.alpha;
        out.beta = a * self.beta + b;
        Ok(out)
    }

    pub fn normalized(&self, p: C64, q: C64) -> bool {
        (self.eval(p) - p).norm() < 1e-9 * p.norm().max(1.0) && (self.eval(q) - q).norm() < 1e-9 * q.norm().max(1.0)
    }

    fn seed_index(&self) -> &SeedIndex {
        self.index.get_or_init(|| SeedIndex::build(&self.values, self.grid.n))
    }

    /// `h⁻¹(w)` by damped Newton on the interpolated map, seeded from the
    /// nearest forward grid value.
    pub fn inverse(&self, w: C64) -> Result<C64, BeltramiError> {
        if self.identity && self.alpha == C64::new(1.0, 0.0) && self.beta == C64::new(0.0, 0.0) {
            return Ok(w);
        }
        let target = (w - self.beta) / self.alpha;
        if self.identity {
            return Ok(target);
        }
        let seed = self.seed_index().nearest(&self.values, target);
        if let Some(k) = seed {
            // The nearest forward value usually has the target in an adjacent quad.
            let near = self.quad_search(self.grid.coords(k), 1, target);
            if let Some((z, true)) = near {
                return Ok(z);
            }
            match self.quad_search(self.grid.coords(k), QUAD_WINDOW, target).or(near) {
                Some((z, _)) => return Ok(z),
                None => {}
            }
        }
        let mut z = match seed {
            Some(k) if self.grid.region.contains(target) || (self.values[k] - target).norm() < 4.0 * self.grid.dx() => {
                self.grid.center_of(k)
            }
            _ => target,
        };
        let eps = 0.25 * self.grid.dx();
        let scale = self.grid.dx().max(target.norm() * 1e-15);
        let mut r = self.eval_raw(z) - target;
        for _ in 0..60 {
            if r.norm() < 1e-10 * scale {
                return Ok(z);
            }
            let hx = (self.eval_raw(z + eps) - self.eval_raw(z - eps)) / (2.0 * eps);
            let hy = (self.eval_raw(z + C64::new(0.0, eps)) - self.eval_raw(z - C64::new(0.0, eps))) / (2.0 * eps);
            // Solve hx·dx + hy·dy = r for real dx, dy.
            let det = hx.re * hy.im - hx.im * hy.re;
            if det.abs() < 1e-300 {
                break;
            }
            let dx = (r.re * hy.im - r.im * hy.re) / det;
            let dy = (hx.re * r.im - hx.im * r.re) / det;
            let step = C64::new(dx, dy);
            let mut lambda = 1.0;
            let mut moved = false;
            for _ in 0..30 {
                let nz = z - step * lambda;
                let nr = self.eval_raw(nz) - target;
                if nr.norm() < r.norm() {
                    z = nz;
                    r = nr;
                    moved = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !moved {
                break;
            }
        }
        if r.norm() < 1e-7 * scale.max(1.0) {
            return Ok(z);
        }
        // Newton stalls on folds of the interpolant: search nearby quads.
        if let Some(ij) = self.grid.locate(z) {
            if let Some((zq, _)) = self.quad_search(ij, QUAD_WINDOW, target) {
                return Ok(zq);
            }
        }
        Err(BeltramiError::Inversion(w))
    }

    /// Quad preimage of `target` closest to cell `(i0, j0)` within `window` quads.
    /// Prefers orientation-preserving quads: a preimage on a reversed quad
    /// lies on a fold of the interpolant, not on the map itself.
    fn quad_search(&self, (i0, j0): (usize, usize), window: i64, target: C64) -> Option<(C64, bool)> {
        let c = self.grid.center_of(self.grid.index(i0, j0));
        let mut best: Option<((bool, f64), (C64, bool))> = None;
        for dj in -window..=window {
            for di in -window..=window {
                let (i, j) = (i0 as i64 + di, j0 as i64 + dj);
                if !self.in_lattice(i, j) {
                    continue;
                }
                if let Some((zq, pos)) = self.quad_inverse(i, j, target) {
                    let key = (!pos, (zq - c).norm());
                    if best.map_or(true, |b| key < b.0) {
                        best = Some((key, (zq, pos)));
                    }
                }
            }
        }
        best.map(|b| b.1)
    }

    /// Preimage of `target` inside the bilinear quad on centres
    /// `(i, j)…(i + 1, j + 1)`, if any, and whether the quad is positively
    /// oriented there.
    fn quad_inverse(&self, i: i64, j: i64, target: C64) -> Option<(C64, bool)> {
        let (a, b, c, d) = (self.node(i, j), self.node(i + 1, j), self.node(i, j + 1), self.node(i + 1, j + 1));
        let (mut u, mut v) = (0.5, 0.5);
        for _ in 0..30 {
            let p = a * ((1.0 - u) * (1.0 - v)) + b * (u * (1.0 - v)) + c * ((1.0 - u) * v) + d * (u * v);
            let r = p - target;
            let pu = (b - a) * (1.0 - v) + (d - c) * v;
            let pv = (c - a) * (1.0 - u) + (d - b) * u;
            let det = pu.re * pv.im - pu.im * pv.re;
            if det.abs() < 1e-300 {
                return None;
            }
            let du = (r.re * pv.im - r.im * pv.re) / det;
            let dv = (pu.re * r.im - pu.im * r.re) / det;
            u -= du;
            v -= dv;
            if !(u.is_finite() && v.is_finite()) || u.abs() > 10.0 || v.abs() > 10.0 {
                return None;
            }
            if du.abs() + dv.abs() < 1e-13 {
                break;
            }
        }
        let tol = 1e-9;
        if u < -tol || v < -tol || u > 1.0 + tol || v > 1.0 + tol {
            return None;
        }
        let p = a * ((1.0 - u) * (1.0 - v)) + b * (u * (1.0 - v)) + c * ((1.0 - u) * v) + d * (u * v);
        if (p - target).norm() > 1e-9 * self.grid.dx().max(target.norm() * 1e-6) {
            return None;
        }
        let pu = (b - a) * (1.0 - v) + (d - c) * v;
        let pv = (c - a) * (1.0 - u) + (d - b) * u;
        let g = &self.grid;
        Some((g.center(0, 0) + C64::new((i as f64 + u) * g.dx(), (j as f64 + v) * g.dy()), pu.re * pv.im - pu.im * pv.re > 0.0))
    }

    /// Jacobian `|h_z|² − |h_z̄|²` from the solver's derivative fields.
    pub fn jacobian_min(&self) -> f64 {
        let a2 = self.alpha.norm_sqr();
        self.hz
            .iter()
            .zip(&self.omega)
            .map(|(hz, w)| a2 * (hz.norm_sqr() - w.norm_sqr()))
            .fold(f64::INFINITY, f64::min)
    }

    /// Jacobian by central differences of the grid values, on interior
    /// cells (row-major, `(n−2)²` entries). Nonpositive entries mark folds
    /// of the interpolant.
    pub fn fd_jacobian(&self) -> Vec<f64> {
        let n = self.grid.n;
        let h = self.grid.dx();
        let a2 = self.alpha.norm_sqr();
        let mut out = Vec::with_capacity((n - 2) * (n - 2));
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                let k = self.grid.index(i, j);
                let hx = (self.values[k + 1] - self.values[k - 1]) / (2.0 * h);
                let hy = (self.values[k + n] - self.values[k - n]) / (2.0 * h);
                let hz = 0.5 * (hx - C64::new(0.0, 1.0) * hy);
                let hzb = 0.5 * (hx + C64::new(0.0, 1.0) * hy);
                out.push(a2 * (hz.norm_sqr() - hzb.norm_sqr()));
            }
        }
        out
    }

    /// Dilatation `h_z̄ / h_z` from the solver's derivative fields.
    pub fn dilatation(&self, k: usize) -> C64 {
        self.omega[k] / self.hz[k]
    }

    /// Sup of `|h_z̄ − μ h_z|` with the solver's derivative fields, scaled by
    /// the normalization. Affine post-composition multiplies both terms by α.
    pub fn beltrami_residual(&self, mu: &[C64]) -> f64 {
        let a = self.alpha.norm();
        self.omega
            .iter()
            .zip(&self.hz)
            .zip(mu)
            .map(|((w, hz), m)| a * (w - m * hz).norm())
            .fold(0.0, f64::max)
    }

    /// Binary layout: magic `QCMP`, u32 version 1, f64 region, u32 `n`,
    /// f64 `α.re, α.im, β.re, β.im, residual`, u8 identity flag, then `n²`
    /// values, `n²` values of ω and `n²` values of `h_z`, each `(re, im)`.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(b"QCMP")?;
        w.write_all(&1u32.to_le_bytes())?;
        write_region(&mut w, &self.grid.region)?;
        w.write_all(&(self.grid.n as u32).to_le_bytes())?;
        for v in [self.alpha.re, self.alpha.im, self.beta.re, self.beta.im, self.residual] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&[self.identity as u8])?;
        write_c64s(&mut w, &self.values)?;
        write_c64s(&mut w, &self.omega)?;
        write_c64s(&mut w, &self.hz)
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<QcMap, BeltramiError> {
        expect_header(&mut r, b"QCMP")?;
        let region = read_region(&mut r)?;
        let n = read_u32(&mut r)? as usize;
        check_n(n)?;
        let mut v = [0.0f64; 5];
        for x in v.iter_mut() {
            *x = read_f64(&mut r)?;
        }
        let mut flag = [0u8; 1];
        r.read_exact(&mut flag)?;
        let grid = Grid::new(region, n);
        let values = read_c64s(&mut r, n * n)?;
        let omega = read_c64s(&mut r, n * n)?;
        let hz = read_c64s(&mut r, n * n)?;
        let mut map = QcMap::from_parts(grid, values, omega, hz, v[4], Vec::new());
        map.identity = flag[0] != 0;
        map.alpha = C64::new(v[0], v[1]);
        map.beta = C64::new(v[2], v[3]);
        Ok(map)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()
    }

    pub fn load(path: &Path) -> Result<QcMap, BeltramiError> {
        QcMap::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// Ring width, in cells, chosen so the widened FFT frame keeps small prime factors.
fn halo_width(n: usize) -> i64 {
    (n as i64 / 16).max(8)
}

fn ring_len(n: usize) -> usize {
    let (n, h) = (n as i64, halo_width(n));
    (2 * h * (2 * n + 2 * h)) as usize
}

/// Position in the ring of an outside node `(i, j)`.
fn ring_index(n: i64, i: i64, j: i64) -> usize {
    let h = halo_width(n as usize);
    let w = n + 2 * h;
    let k = if j < 0 {
        (j + h) * w + i + h
    } else if j >= n {
        h * w + (j - n) * w + i + h
    } else if i < 0 {
        2 * h * w + j * h + i + h
    } else {
        2 * h * w + n * h + j * h + i - n
    };
    k as usize
}

fn ring_coords(n: usize, r: usize) -> (i64, i64) {
    let h = halo_width(n);
    let (n, w, r) = (n as i64, n as i64 + 2 * h, r as i64);
    if r < 2 * h * w {
        let (row, col) = (r / w, r % w);
        let j = if row < h { row - h } else { n + row - h };
        (col - h, j)
    } else {
        let r = r - 2 * h * w;
        let (j, col) = ((r % (n * h)) / h, r % h);
        if r < n * h {
            (col - h, j)
        } else {
            (n + col, j)
        }
    }
}

/// Half-width, in cells, of the quad search behind a stalled Newton solve.
const QUAD_WINDOW: i64 = 6;

/// Uniform bucket index over forward values, for inversion seeds.
#[derive(Clone, Debug)]
struct SeedIndex {
    lo: C64,
    cell: f64,
    side: usize,
    buckets: Vec<Vec<u32>>,
}

impl SeedIndex {
    fn build(values: &[C64], n: usize) -> SeedIndex {
        let (mut lo, mut hi) = (values[0], values[0]);
        for v in values {
            lo = C64::new(lo.re.min(v.re), lo.im.min(v.im));
            hi = C64::new(hi.re.max(v.re), hi.im.max(v.im));
        }
        let side = (n / 2).max(1);
        let cell = ((hi.re - lo.re).max(hi.im - lo.im) / side as f64).max(1e-300);
        let mut buckets = vec![Vec::new(); side * side];
        for (k, v) in values.iter().enumerate() {
            let i = (((v.re - lo.re) / cell) as usize).min(side - 1);
            let j = (((v.im - lo.im) / cell) as usize).min(side - 1);
            buckets[j * side + i].push(k as u32);
        }
        SeedIndex { lo, cell, side, buckets }
    }

    fn nearest(&self, values: &[C64], w: C64) -> Option<usize> {
        let s = self.side as i64;
        let ci = (((w.re - self.lo.re) / self.cell).floor() as i64).clamp(0, s - 1);
        let cj = (((w.im - self.lo.im) / self.cell).floor() as i64).clamp(0, s - 1);
        let mut best: Option<(f64, usize)> = None;
        for r in 0..s {
            if let Some((d, _)) = best {
                if (r as f64 - 1.0) * self.cell > d {
                    break;
                }
            }
            for dj in -r..=r {
                for di in -r..=r {
                    if di.abs() != r && dj.abs() != r {
                        continue;
                    }
                    let (i, j) = (ci + di, cj + dj);
                    if i < 0 || j < 0 || i >= s || j >= s {
                        continue;
                    }
                    for &k in &self.buckets[(j * s + i) as usize] {
                        let d = (values[k as usize] - w).norm();
                        if best.map_or(true, |b| d < b.0) {
                            best = Some((d, k as usize));
                        }
                    }
                }
            }
        }
        best.map(|b| b.1)
    }
}

fn write_region<W: Write>(w: &mut W, r: &Region) -> std::io::Result<()> {
    for v in [r.re_lo, r.im_lo, r.re_hi, r.im_hi] {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn write_c64s<W: Write>(w: &mut W, data: &[C64]) -> std::io::Result<()> {
    for z in data {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

fn expect_header<R: Read>(r: &mut R, magic: &[u8; 4]) -> Result<(), BeltramiError> {
    let mut m = [0u8; 4];
    r.read_exact(&mut m)?;
    if &m != magic {
        return Err(BeltramiError::Format("bad magic".into()));
    }
    let v = read_u32(r)?;
    if v != 1 {
        return Err(BeltramiError::Format(format!("unsupported version {v}")));
    }
    Ok(())
}

fn check_n(n: usize) -> Result<(), BeltramiError> {
    if !(2..=1 << 14).contains(&n) {
        return Err(BeltramiError::Format(format!("bad resolution {n}")));
    }
    Ok(())
}

fn read_region<R: Read>(r: &mut R) -> Result<Region, BeltramiError> {
    let v = [read_f64(r)?, read_f64(r)?, read_f64(r)?, read_f64(r)?];
    Region::new(v[0], v[1], v[2], v[3]).ok_or_else(|| BeltramiError::Format("bad region".into()))
}

fn read_u32<R: Read>(r: &mut R) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> std::io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_c64s<R: Read>(r: &mut R, count: usize) -> std::io::Result<Vec<C64>> {
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let re = read_f64(r)?;
        let im = read_f64(r)?;
        out.push(C64::new(re, im));
    }
    Ok(out)
}
