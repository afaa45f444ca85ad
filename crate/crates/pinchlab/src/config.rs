//! `key = value` run configuration.
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `map` | `bergweiler` | `bergweiler`, `family:<m>` or `custom:<m>,<c.re>,<c.im>` |
//! | `region` | `-3.5,-2.5,1.5,2.5` | `re_lo,im_lo,re_hi,im_hi` |
//! | `resolution` | `1024` | cells per side |
//! | `max_iter` | `1000` | orbit classification cap |
//! | `escape_radius` | `50` | escape threshold E |
//! | `leaf` | none | generator `u,v`; repeatable |
//! | `axis` | `false` | include the axis leaf |
//! | `delta` | `auto` | band thickness |
//! | `orbit_range` | `8` | materialized leaves `\|n\| ≤ N` |
//! | `depth` | `8` | preimage depth K of the field |
//! | `t_schedule` | `dyadic:8` | `dyadic:<J>` for `1 − 2^{-j}`, or a list |
//! | `l_inner`, `l_outer` | `auto` | pinch zone, default `δ/3` and `δ` |
//! | `r_max` | `50` | field support radius |
//! | `solver_max_iter` | `200` | iteration cap |
//! | `solver_tol` | `1e-6` | relative ℓ² tolerance |
//! | `residual_tol` | `1e-3` | sup-norm residual contract |
//! | `normalize` | `auto` | `p.re,p.im;q.re,q.im` |
//! | `marked` | `p` | divergence probes `re,im;re,im;…` |
//! | `annulus` | `0.6931471805599453,0,0.05,0.2` | `c.re,c.im,r,R` |
//! | `psi_resolution` | `1024` | boundary samples of the uniformizer table |
//! | `out` | `out` | output directory |

use crate::entire::MapPreset;
use crate::grid::Region;
use crate::C64;
use std::fmt::Write as _;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub map: MapPreset,
    pub region: Region,
    pub resolution: usize,
    pub max_iter: u32,
    pub escape_radius: f64,
    pub leaves: Vec<(f64, f64)>,
    pub axis: bool,
    pub delta: Option<f64>,
    pub orbit_range: i32,
    pub depth: usize,
    pub t_schedule: Vec<f64>,
    pub l_inner: Option<f64>,
    pub l_outer: Option<f64>,
    pub r_max: f64,
    pub solver_max_iter: usize,
    pub solver_tol: f64,
    pub residual_tol: f64,
    pub normalize: Option<(C64, C64)>,
    /// `None` probes the repelling fixed point p.
    pub marked: Option<Vec<C64>>,
    pub annulus: (C64, f64, f64),
    pub psi_resolution: usize,
    pub out: PathBuf,
}

pub fn dyadic_schedule(j_max: u32) -> Vec<f64> {
    (0..=j_max).map(|j| 1.0 - 0.5f64.powi(j as i32)).collect()
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            map: MapPreset::Bergweiler,
            region: Region { re_lo: -3.5, im_lo: -2.5, re_hi: 1.5, im_hi: 2.5 },
            resolution: 1024,
            max_iter: 1000,
            escape_radius: 50.0,
            leaves: Vec::new(),
            axis: false,
            delta: None,
            orbit_range: 8,
            depth: 8,
            t_schedule: dyadic_schedule(8),
            l_inner: None,
            l_outer: None,
            r_max: 50.0,
            solver_max_iter: 200,
            solver_tol: 1e-6,
            residual_tol: 1e-3,
            normalize: None,
            marked: None,
            annulus: (C64::new(std::f64::consts::LN_2, 0.0), 0.05, 0.2),
            psi_resolution: 1024,
            out: PathBuf::from("out"),
        }
    }
}

fn floats(v: &str, n: usize) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != n {
        return Err(format!("expected {n} comma-separated numbers, got {:?}", v));
    }
    parts
        .iter()
        .map(|p| {
            let x: f64 = p.parse().map_err(|_| format!("not a number: {p:?}"))?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(format!("not finite: {p:?}"))
            }
        })
        .collect()
}

fn float(v: &str) -> Result<f64, String> {
    Ok(floats(v, 1)?[0])
}

fn points(v: &str) -> Result<Vec<C64>, String> {
    v.split(';')
        .map(|p| floats(p, 2).map(|x| C64::new(x[0], x[1])))
        .collect()
}

fn positive(x: f64, what: &str) -> Result<f64, String> {
    if x > 0.0 {
        Ok(x)
    } else {
        Err(format!("{what} must be positive, got {x}"))
    }
}

fn int<T: std::str::FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("not an integer: {v:?}"))
}

fn auto_or<T>(v: &str, f: impl Fn(&str) -> Result<T, String>) -> Result<Option<T>, String> {
    if v == "auto" {
        Ok(None)
    } else {
        f(v).map(Some)
    }
}

impl RunConfig {
    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key {
            "map" => {
                self.map = if v == "bergweiler" {
                    MapPreset::Bergweiler
                } else if let Some(m) = v.strip_prefix("family:") {
                    MapPreset::Family { m: float(m)? }
                } else if let Some(rest) = v.strip_prefix("custom:") {
                    let x = floats(rest, 3)?;
                    MapPreset::Custom { m: x[0], c: C64::new(x[1], x[2]) }
                } else {
                    return Err(format!("unknown map {v:?}"));
                };
                self.map.build().map_err(|e| e.to_string())?;
            }
            "region" => {
                let x = floats(v, 4)?;
                self.region = Region::new(x[0], x[1], x[2], x[3]).ok_or("region needs lo < hi on both axes")?;
            }
            "resolution" => {
                let n: usize = int(v)?;
                if !(8..=8192).contains(&n) {
                    return Err(format!("resolution must lie in 8..=8192, got {n}"));
                }
                self.resolution = n;
            }
            "max_iter" => {
                let n: u32 = int(v)?;
                if n == 0 {
                    return Err("max_iter must be at least 1".into());
                }
                self.max_iter = n;
            }
            "escape_radius" => self.escape_radius = positive(float(v)?, "escape_radius")?,
            "leaf" => {
                let x = floats(v, 2)?;
                if x[0] == 0.0 || x[1] == 0.0 || x[0] == x[1] {
                    return Err(format!("leaf needs distinct nonzero endpoints, got {v:?}"));
                }
                self.leaves.push((x[0], x[1]));
            }
            "axis" => {
                self.axis = match v {
                    "true" => true,
                    "false" => false,
                    _ => return Err(format!("expected true or false, got {v:?}")),
                }
            }
            "delta" => {
                self.delta = auto_or(v, |s| {
                    let d = float(s)?;
                    if d > 0.0 && d < std::f64::consts::FRAC_PI_2 {
                        Ok(d)
                    } else {
                        Err(format!("delta must lie in (0, π/2), got {d}"))
                    }
                })?
            }
            "orbit_range" => {
                let n: i32 = int(v)?;
                if !(0..=64).contains(&n) {
                    return Err(format!("orbit_range must lie in 0..=64, got {n}"));
                }
                self.orbit_range = n;
            }
            "depth" => {
                let n: usize = int(v)?;
                if n > 64 {
                    return Err(format!("depth must be at most 64, got {n}"));
                }
                self.depth = n;
            }
            "t_schedule" => {
                let ts = if let Some(j) = v.strip_prefix("dyadic:") {
                    let j: u32 = int(j)?;
                    if j > 40 {
                        return Err("dyadic schedules stop at 40".into());
                    }
                    dyadic_schedule(j)
                } else {
                    v.split(',').map(|s| float(s.trim())).collect::<Result<Vec<_>, _>>()?
                };
                if ts.is_empty() {
                    return Err("empty schedule".into());
                }
                for &t in &ts {
                    if !(0.0..1.0).contains(&t) {
                        return Err(format!("t must lie in [0, 1), got {t}"));
                    }
                }
                if ts.windows(2).any(|w| w[1] <= w[0]) {
                    return Err("t_schedule must be strictly increasing".into());
                }
                self.t_schedule = ts;
            }
            "l_inner" => self.l_inner = auto_or(v, |s| positive(float(s)?, "l_inner"))?,
            "l_outer" => self.l_outer = auto_or(v, |s| positive(float(s)?, "l_outer"))?,
            "r_max" => self.r_max = positive(float(v)?, "r_max")?,
            "solver_max_iter" => {
                let n: usize = int(v)?;
                if n == 0 {
                    return Err("solver_max_iter must be at least 1".into());
                }
                self.solver_max_iter = n;
            }
            "solver_tol" => self.solver_tol = positive(float(v)?, "solver_tol")?,
            "residual_tol" => self.residual_tol = positive(float(v)?, "residual_tol")?,
            "normalize" => {
                self.normalize = auto_or(v, |s| {
                    let p = points(s)?;
                    if p.len() != 2 || p[0] == p[1] {
                        return Err("normalize needs two distinct points".into());
                    }
                    Ok((p[0], p[1]))
                })?
            }
            "marked" => self.marked = if v == "p" { None } else { Some(points(v)?) },
            "annulus" => {
                let x = floats(v, 4)?;
                if !(x[2] > 0.0 && x[2] < x[3]) {
                    return Err("annulus needs 0 < r < R".into());
                }
                self.annulus = (C64::new(x[0], x[1]), x[2], x[3]);
            }
            "psi_resolution" => {
                let n: usize = int(v)?;
                if !(16..=1 << 16).contains(&n) {
                    return Err(format!("psi_resolution must lie in 16..=65536, got {n}"));
                }
                self.psi_resolution = n;
            }
            "out" => {
                if v.is_empty() {
                    return Err("empty output path".into());
                }
                self.out = PathBuf::from(v);
            }
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    fn check(&self) -> Result<(), String> {
        if let (Some(a), Some(b)) = (self.l_inner, self.l_outer) {
            if a >= b {
                return Err("l_inner must be below l_outer".into());
            }
        }
        if let (Some(b), Some(d)) = (self.l_outer, self.delta) {
            if b > d {
                return Err("l_outer cannot exceed delta".into());
            }
        }
        Ok(())
    }

    /// Canonical text form; `parse_config(c.serialize()) == c`.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let map = match self.map {
            MapPreset::Bergweiler => "bergweiler".to_string(),
            MapPreset::Family { m } => format!("family:{m:?}"),
            MapPreset::Custom { m, c } => format!("custom:{m:?},{:?},{:?}", c.re, c.im),
        };
        let pt = |z: C64| format!("{:?},{:?}", z.re, z.im);
        let opt = |x: Option<f64>| x.map_or("auto".to_string(), |v| format!("{v:?}"));
        let r = &self.region;
        let _ = writeln!(s, "map = {map}");
        let _ = writeln!(s, "region = {:?},{:?},{:?},{:?}", r.re_lo, r.im_lo, r.re_hi, r.im_hi);
        let _ = writeln!(s, "resolution = {}", self.resolution);
        let _ = writeln!(s, "max_iter = {}", self.max_iter);
        let _ = writeln!(s, "escape_radius = {:?}", self.escape_radius);
        for (u, v) in &self.leaves {
            let _ = writeln!(s, "leaf = {u:?},{v:?}");
        }
        let _ = writeln!(s, "axis = {}", self.axis);
        let _ = writeln!(s, "delta = {}", opt(self.delta));
        let _ = writeln!(s, "orbit_range = {}", self.orbit_range);
        let _ = writeln!(s, "depth = {}", self.depth);
        let ts: Vec<String> = self.t_schedule.iter().map(|t| format!("{t:?}")).collect();
        let _ = writeln!(s, "t_schedule = {}", ts.join(","));
        let _ = writeln!(s, "l_inner = {}", opt(self.l_inner));
        let _ = writeln!(s, "l_outer = {}", opt(self.l_outer));
        let _ = writeln!(s, "r_max = {:?}", self.r_max);
        let _ = writeln!(s, "solver_max_iter = {}", self.solver_max_iter);
        let _ = writeln!(s, "solver_tol = {:?}", self.solver_tol);
        let _ = writeln!(s, "residual_tol = {:?}", self.residual_tol);
        let norm = self.normalize.map_or("auto".to_string(), |(p, q)| format!("{};{}", pt(p), pt(q)));
        let _ = writeln!(s, "normalize = {norm}");
        let marked = self
            .marked
            .as_ref()
            .map_or("p".to_string(), |m| m.iter().map(|&z| pt(z)).collect::<Vec<_>>().join(";"));
        let _ = writeln!(s, "marked = {marked}");
        let (c, r0, r1) = self.annulus;
        let _ = writeln!(s, "annulus = {:?},{:?},{r0:?},{r1:?}", c.re, c.im);
        let _ = writeln!(s, "psi_resolution = {}", self.psi_resolution);
        let _ = writeln!(s, "out = {}", self.out.display());
        s
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut last = 0;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        last = line;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((key, value)) = body.split_once('=') else {
            return Err(ConfigError { line, message: format!("expected key = value, got {body:?}") });
        };
        cfg.set(key.trim(), value.trim()).map_err(|message| ConfigError { line, message })?;
    }
    cfg.check().map_err(|message| ConfigError { line: last, message })?;
    Ok(cfg)
}
