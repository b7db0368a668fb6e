//! Norms, measured-constant records and the remainder diagnostics.

use crate::composite::{CompositeFlow, ExpansionConfig, ForcingDecomposition};
use crate::error::{Error, Result};
use crate::numerics::{diff, integrate, Axis, Field2D, PhysicalGrid, Region};
use crate::profile::ShearProfile;
use serde::Serialize;
use std::fmt::Write as _;

/// Drift factor allowed for measured constants across grids or epsilon values.
pub const STABILITY_FACTOR: f64 = 2.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct NormSet {
    /// ||sqrt(eps) grad u||_2 + ||sqrt(eps) grad v||_2
    pub e: f64,
    /// ||sqrt(u_s) grad v||_2
    pub p: f64,
    /// ||sqrt(eps) {u, v}||_inf
    pub sup: f64,
    /// e + eps^(gamma/2) sup
    pub x: f64,
    pub u_over_ytilde: f64,
    pub v_over_ytilde: f64,
    /// Set when u_s < 0 somewhere; `p` then uses |u_s|.
    pub degenerate: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimateRecord {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub nx: usize,
    pub ny: usize,
    pub eps: f64,
    pub pass: bool,
}

impl EstimateRecord {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, grid: &PhysicalGrid, eps: f64) -> Self {
        let ratio = if rhs == 0.0 {
            if lhs == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            lhs / rhs
        };
        Self { name: name.into(), lhs, rhs, ratio, nx: grid.nx, ny: grid.ny, eps, pass: ratio.is_finite() }
    }
}

fn l2(f: &Field2D) -> Result<f64> {
    Ok(integrate(&f.map(|v| v * v), Region::Full)?.sqrt())
}

fn ytilde(y: f64) -> f64 {
    y * (2.0 - y)
}

/// ||f / ytilde||_2 with the wall rows replaced by the limit f_y / ytilde'.
pub fn over_ytilde(f: &Field2D) -> Result<Field2D> {
    let g = f.grid.physical().ok_or_else(|| Error::Dimension("expected a physical-grid field".into()))?;
    let fy = diff(f, Axis::Y, 1)?;
    Ok(Field2D::from_fn(*g, |x, y| {
        let i = (x / g.hx()).round() as usize;
        let j = (y / g.hy()).round() as usize;
        if j == 0 {
            fy.at(i, j) / 2.0
        } else if j == g.ny {
            -fy.at(i, j) / 2.0
        } else {
            f.at(i, j) / ytilde(y)
        }
    }))
}

fn grad_l2(f: &Field2D) -> Result<f64> {
    let (fx, fy) = (diff(f, Axis::X, 1)?, diff(f, Axis::Y, 1)?);
    Ok(integrate(&fx.zip_map(&fy, |a, b| a * a + b * b), Region::Full)?.sqrt())
}

pub fn compute_norms(u: &Field2D, v: &Field2D, u_s: &Field2D, cfg: &ExpansionConfig) -> Result<NormSet> {
    if u.grid != v.grid || u.grid != u_s.grid {
        return Err(Error::GridMismatch("norm inputs live on different grids".into()));
    }
    let se = cfg.eps.sqrt();
    let e = se * (grad_l2(u)? + grad_l2(v)?);
    let degenerate = u_s.values.iter().any(|&w| w < 0.0);
    let (vx, vy) = (diff(v, Axis::X, 1)?, diff(v, Axis::Y, 1)?);
    let w = Field2D::from_values(u.grid, (0..u.values.len()).map(|k| u_s.values[k].abs() * (vx.values[k].powi(2) + vy.values[k].powi(2))).collect())?;
    let p = integrate(&w, Region::Full)?.sqrt();
    let sup = se * u.max_abs().max(v.max_abs());
    Ok(NormSet {
        e,
        p,
        sup,
        x: e + cfg.eps.powf(cfg.gamma / 2.0) * sup,
        u_over_ytilde: l2(&over_ytilde(u)?)?,
        v_over_ytilde: l2(&over_ytilde(v)?)?,
        degenerate,
    })
}

/// Measured constants of the composite-profile bounds.
pub fn check_profile_estimates(c: &CompositeFlow, profile: &ShearProfile, cfg: &ExpansionConfig) -> Result<Vec<EstimateRecord>> {
    let g = c.u.grid.physical().ok_or_else(|| Error::Dimension("composite must live on the physical grid".into()))?;
    let eps = cfg.eps;
    let se = eps.sqrt();
    let ux = diff(&c.u, Axis::X, 1)?;
    let uy = diff(&c.u, Axis::Y, 1)?;
    let vy = diff(&c.v, Axis::Y, 1)?;
    let vx = diff(&c.v, Axis::X, 1)?;
    let vxx = diff(&c.v, Axis::X, 2)?;
    let mut c1 = (0.0_f64, 0.0_f64);
    let mut c2 = 0.0_f64;
    let mut c3 = [(0.0_f64, 0.0_f64); 3];
    for j in 1..g.ny {
        let y = g.y(j);
        let yt = ytilde(y);
        let (mu, dmu) = (profile.mu(y), profile.deriv(y, 1));
        let shape = (se * yt).min(eps);
        for i in 0..=g.nx {
            let lhs = ux.at(i, j).abs() + vy.at(i, j).abs() + (c.u.at(i, j) - mu).abs();
            if lhs / shape > c1.0 {
                c1 = (lhs / shape, lhs);
            }
            c2 = c2.max((uy.at(i, j) - dmu).abs());
            for (l, f) in [&c.v, &vx, &vxx].into_iter().enumerate() {
                let r = f.at(i, j).abs() / (eps * yt);
                if r > c3[l].0 {
                    c3[l] = (r, f.at(i, j).abs());
                }
            }
        }
    }
    for i in 0..=g.nx {
        for j in [0, g.ny] {
            c2 = c2.max((uy.at(i, j) - profile.deriv(g.y(j), 1)).abs());
        }
    }
    let mut out = vec![
        record_constant("profile: |u_s,x|+|v_s,y|+|u_s-mu| <= C min(sqrt(eps) yt, eps)", c1.0, c1.1, g, eps),
        EstimateRecord::new("profile: |u_s,y - mu'| <= C sqrt(eps)", c2, se, g, eps),
    ];
    for (l, (r, lhs)) in c3.into_iter().enumerate() {
        out.push(record_constant(&format!("profile: |d_x^{l} v_s| <= C eps yt"), r, lhs, g, eps));
    }
    Ok(out)
}

fn record_constant(name: &str, ratio: f64, lhs: f64, g: &PhysicalGrid, eps: f64) -> EstimateRecord {
    let rhs = if ratio > 0.0 { lhs / ratio } else { 0.0 };
    EstimateRecord { name: name.into(), lhs, rhs, ratio, nx: g.nx, ny: g.ny, eps, pass: ratio.is_finite() }
}

/// The four T-norm constants and the wall check of T2.
pub fn check_t_estimates(f: &ForcingDecomposition, c0: f64, cfg: &ExpansionConfig) -> Result<Vec<EstimateRecord>> {
    let g = f.t1.grid.physical().ok_or_else(|| Error::Dimension("forcing must live on the physical grid".into()))?;
    let eps = cfg.eps;
    let q = eps.powf(0.25);
    let lhs = [
        ("T: ||T1||_2 / c0", l2(&f.t1)?),
        ("T: ||T2/yt||_2 / c0", l2(&over_ytilde(&f.t2)?)?),
        ("T: eps^(1/4) ||d_y T1||_2 / c0", q * l2(&diff(&f.t1, Axis::Y, 1)?)?),
        ("T: eps^(1/4) ||d_y T2||_2 / c0", q * l2(&diff(&f.t2, Axis::Y, 1)?)?),
    ];
    let h2 = g.hx().max(g.hy()).powi(2);
    if c0 == 0.0 {
        if let Some((n, v)) = lhs.iter().find(|(_, v)| *v > 10.0 * h2) {
            return Err(Error::Config(format!("bookkeeping failure: c0 = 0 but {n} = {v:e}")));
        }
    }
    let mut out: Vec<EstimateRecord> = lhs.iter().map(|(n, v)| EstimateRecord::new(*n, *v, c0, g, eps)).collect();
    let wall = f.t2.row(0).iter().chain(f.t2.row(g.ny)).fold(0.0_f64, |m, v| m.max(v.abs()));
    let tol = 1e-6 * f.t2.max_abs() + 10.0 * h2;
    let mut r = EstimateRecord::new("T: max |T2| on the walls", wall, tol, g, eps);
    r.pass = wall <= tol;
    out.push(r);
    Ok(out)
}

/// max/min of a list of measured constants; all-zero lists count as stable.
pub fn drift(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(0.0_f64, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        1.0
    } else if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn is_stable(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite()) && drift(values) <= STABILITY_FACTOR
}

/// Remainder fields, their norms, the right-hand sides and the master-inequality constant.
#[derive(Clone, Debug, Serialize)]
pub struct RemainderReport {
    pub eps: f64,
    pub gamma: f64,
    pub norms: NormSet,
    pub r1: f64,
    pub r2: f64,
    pub fg_l2: f64,
    pub inequality: EstimateRecord,
    #[serde(skip)]
    pub u: Field2D,
    #[serde(skip)]
    pub v: Field2D,
}

/// (u_ns - u_s) / eps^(3/2 + gamma)
pub fn extract_remainder(u_ns: &Field2D, u_s: &Field2D, eps: f64, gamma: f64) -> Field2D {
    (u_ns - u_s).scale(eps.powf(-(1.5 + gamma)))
}

pub fn remainder_diagnostics(
    u_ns: &Field2D,
    v_ns: &Field2D,
    c: &CompositeFlow,
    f: &ForcingDecomposition,
    cfg: &ExpansionConfig,
) -> Result<RemainderReport> {
    let g = c.u.grid.physical().ok_or_else(|| Error::Dimension("composite must live on the physical grid".into()))?;
    let k = 1.5 + cfg.gamma;
    let u = extract_remainder(u_ns, &c.u, cfg.eps, cfg.gamma);
    let v = extract_remainder(v_ns, &c.v, cfg.eps, cfg.gamma);
    let norms = compute_norms(&u, &v, &c.u, cfg)?;
    let (ux, uy, vx, vy) = (diff(&u, Axis::X, 1)?, diff(&u, Axis::Y, 1)?, diff(&v, Axis::X, 1)?, diff(&v, Axis::Y, 1)?);
    let ek = cfg.eps.powf(k);
    let n1 = (&(&u * &ux) + &(&v * &uy)).scale(-ek);
    let n2 = (&(&u * &vx) + &(&v * &vy)).scale(-ek);
    let fu = &n1 - &f.f_u.scale(1.0 / ek);
    let gv = &n2 - &f.f_v.scale(1.0 / ek);
    let r1 = integrate(&(&(&fu * &u) + &(&gv * &v).scale(cfg.eps)), Region::Full)?;
    let r2 = integrate(&(&(&gv * &vx) - &(&fu * &vy)), Region::Full)?;
    let fg_l2 = (l2(&fu)?.powi(2) + l2(&gv)?.powi(2)).sqrt();
    let rhs = r1.abs() + r2.abs() + cfg.eps.powf(cfg.gamma / 2.0) * fg_l2 * fg_l2;
    let inequality = EstimateRecord::new("remainder: ||u,v||_X^2 <= C (R1 + R2 + eps^(gamma/2) ||f,g||^2)", norms.x * norms.x, rhs, g, cfg.eps);
    for (n, val) in [("R1", r1), ("R2", r2), ("||f,g||", fg_l2)] {
        if !val.is_finite() {
            return Err(Error::Config(format!("{n} is not finite")));
        }
    }
    Ok(RemainderReport { eps: cfg.eps, gamma: cfg.gamma, norms, r1, r2, fg_l2, inequality, u, v })
}

/// CSV with one row per record.
pub fn records_csv(records: &[EstimateRecord]) -> String {
    let mut s = String::from("name,lhs,rhs,ratio,nx,ny,epsilon,pass\n");
    for r in records {
        let _ = writeln!(s, "\"{}\",{:e},{:e},{:e},{},{},{:e},{}", r.name, r.lhs, r.rhs, r.ratio, r.nx, r.ny, r.eps, r.pass);
    }
    s
}
