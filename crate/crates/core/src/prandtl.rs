//! Boundary-layer correctors: x-marching of the heat-type layer equations,
//! vertical velocity recovery, cut-off composition and the auxiliary pressure.

use crate::error::{Error, Result};
use crate::euler::EulerLayer;
use crate::numerics::ops::{cumtrapz, cumtrapz_rev, interp_uniform};
use crate::numerics::{cumulative, diff, Anchor, Axis, BoundaryLayerGrid, Field2D, Orientation, PhysicalGrid};
use crate::profile::jet::Jet;
use crate::profile::ShearProfile;
use serde::{Deserialize, Serialize};

/// How the shear enters the layer equation as a function of Y.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoefficientMode {
    /// mu evaluated at the physical height of Y.
    Literal,
    /// First-order Taylor expansion of mu at the wall.
    Linearized,
    /// Frozen constant, for testing.
    Constant(f64),
}

/// Smooth cut-off chi(d / scale), d the distance to the wall.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffSpec {
    pub scale: f64,
}

impl Default for CutoffSpec {
    fn default() -> Self {
        Self { scale: 0.5 }
    }
}

impl CutoffSpec {
    /// chi and its first three derivatives at t. Smooth (C-infinity) step on [1,2]
    /// built from exp(-1/s).
    pub fn chi(t: f64) -> [f64; 4] {
        if t <= 1.0 {
            return [1.0, 0.0, 0.0, 0.0];
        }
        if t >= 2.0 {
            return [0.0; 4];
        }
        let x = Jet::variable(t, 3);
        let bump = |s: Jet| {
            if s.derivative(0) < 1e-3 {
                Jet::constant(0.0, 3)
            } else {
                Jet::constant(-1.0, 3).div(&s).exp()
            }
        };
        let a = bump(Jet::constant(2.0, 3).sub(&x));
        let b = bump(x.sub(&Jet::constant(1.0, 3)));
        let c = a.div(&a.add(&b));
        std::array::from_fn(|k| c.derivative(k))
    }

    /// psi(y) = chi(d(y)/scale) and its first three y-derivatives.
    pub fn psi(&self, o: Orientation, y: f64) -> [f64; 4] {
        let s = self.scale;
        let c = Self::chi(o.distance(y) / s);
        let sg = o.sign();
        [c[0], sg * c[1] / s, c[2] / (s * s), sg * c[3] / (s * s * s)]
    }
}

/// One boundary layer (tier, wall). Raw fields live on the layer grid; `v0` is
/// stored with the physical sign convention, so that sqrt(eps) d_y v0 = -d_x u0.
#[derive(Clone, Debug)]
pub struct PrandtlLayer {
    pub tier: u8,
    pub orientation: Orientation,
    pub eps: f64,
    pub grid: BoundaryLayerGrid,
    pub u0: Field2D,
    pub v0: Field2D,
    /// Running x-integral of v0.
    pub w0: Field2D,
    pub cut: Option<CutLayer>,
}

/// A layer composed with the cut-off on the physical grid.
#[derive(Clone, Debug)]
pub struct CutLayer {
    pub u: Field2D,
    pub v: Field2D,
    pub u0: Field2D,
    pub v0: Field2D,
    pub w0: Field2D,
    /// psi, psi_y, psi_yy, psi_yyy
    pub psi: [Field2D; 4],
}

impl PrandtlLayer {
    pub fn header(&self) -> Vec<String> {
        vec![format!(
            "layer: prandtl, tier: {}, orientation: {}, epsilon: {:e}",
            self.tier,
            self.orientation.name(),
            self.eps
        )]
    }

    /// |u0(x, Ymax)| relative to max |u0|.
    pub fn decay_ratio(&self) -> f64 {
        let m = self.u0.max_abs();
        if m == 0.0 {
            return 0.0;
        }
        self.u0.row(self.grid.n_y).iter().fold(0.0_f64, |a, v| a.max(v.abs())) / m
    }

    pub fn cut(&self) -> Result<&CutLayer> {
        self.cut.as_ref().ok_or_else(|| Error::MissingInput("cut-off has not been applied".into()))
    }
}

/// Marching coefficient at each Y node. Zero beyond the channel is allowed.
pub fn coefficients(profile: &ShearProfile, grid: &BoundaryLayerGrid, eps: f64, mode: CoefficientMode) -> Result<Vec<f64>> {
    let o = grid.orientation;
    let se = eps.sqrt();
    let wall = o.wall();
    let (mu_w, dmu_w) = (profile.mu(wall), profile.deriv(wall, 1));
    let mut a = Vec::with_capacity(grid.n_y + 1);
    for k in 0..=grid.n_y {
        let d = se * grid.big_y(k);
        let inside = d < 2.0;
        let dd = d.min(2.0);
        let y = wall + o.sign() * dd;
        let c = match mode {
            CoefficientMode::Literal => profile.mu(y),
            CoefficientMode::Linearized => mu_w + dmu_w * (y - wall),
            CoefficientMode::Constant(c) => c,
        };
        if k > 0 && (c < 0.0 || (c == 0.0 && inside)) {
            return Err(Error::Degeneracy(format!(
                "coefficient {c:e} at Y = {} on the {} wall",
                grid.big_y(k),
                o.name()
            )));
        }
        a.push(c.max(0.0));
    }
    Ok(a)
}

fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut b = diag[0];
    c[0] = upper[0] / b;
    rhs[0] /= b;
    for k in 1..n {
        b = diag[k] - lower[k] * c[k - 1];
        c[k] = upper[k] / b;
        rhs[k] = (rhs[k] - lower[k] * rhs[k - 1]) / b;
    }
    for k in (0..n - 1).rev() {
        rhs[k] -= c[k] * rhs[k + 1];
    }
}

/// March a u_x - u_YY = s from zero data at x = 0. BDF2 after one backward Euler step.
fn march(a: &[f64], grid: &BoundaryLayerGrid, wall: &[f64], source: Option<&Field2D>) -> Field2D {
    let (nx, ny) = (grid.nx, grid.n_y);
    let dx = grid.hx();
    let c = 1.0 / (grid.h_y() * grid.h_y());
    let m = ny - 1;
    let mut u = Field2D::zeros(*grid);
    let mut prev = vec![0.0; ny + 1];
    let mut prev2 = vec![0.0; ny + 1];
    let mut lower = vec![-c; m];
    let mut upper = vec![-c; m];
    lower[0] = 0.0;
    upper[m - 1] = 0.0;
    let mut diag = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for n in 1..=nx {
        let bdf2 = n >= 2;
        for k in 1..ny {
            let ak = a[k] / dx;
            let s = source.map_or(0.0, |f| f.at(n, k));
            if bdf2 {
                diag[k - 1] = 1.5 * ak + 2.0 * c;
                rhs[k - 1] = s + ak * (2.0 * prev[k] - 0.5 * prev2[k]);
            } else {
                diag[k - 1] = ak + 2.0 * c;
                rhs[k - 1] = s + ak * prev[k];
            }
        }
        rhs[0] += c * wall[n];
        thomas(&lower, &diag, &upper, &mut rhs);
        prev2.copy_from_slice(&prev);
        prev[0] = wall[n];
        prev[ny] = 0.0;
        prev[1..ny].copy_from_slice(&rhs);
        for (k, v) in prev.iter().enumerate() {
            u.set(n, k, *v);
        }
    }
    u
}

fn check_wall(wall: &[f64], grid: &BoundaryLayerGrid) -> Result<()> {
    if wall.len() != grid.nx + 1 {
        return Err(Error::Dimension(format!("wall data needs {} values", grid.nx + 1)));
    }
    let scale = 1.0 + wall.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if wall[0].abs() > 1e-10 * scale {
        return Err(Error::Compatibility(format!("wall data {:e} at x = 0 must vanish", wall[0])));
    }
    Ok(())
}

fn finish(tier: u8, grid: &BoundaryLayerGrid, eps: f64, u0: Field2D, dxu: Field2D) -> Result<PrandtlLayer> {
    let h = grid.h_y();
    let sg = grid.orientation.sign();
    let mut v0 = Field2D::zeros(*grid);
    for i in 0..=grid.nx {
        let col = dxu.column(i);
        let vals = if tier == 1 { cumtrapz_rev(&col, h) } else { cumtrapz(&col, h) };
        let s = if tier == 1 { sg } else { -sg };
        for (k, v) in vals.into_iter().enumerate() {
            v0.set(i, k, s * v);
        }
    }
    let w0 = cumulative(&v0, Axis::X, Anchor::Start)?;
    for (f, n) in [(&u0, "u0"), (&v0, "v0"), (&w0, "w0")] {
        f.ensure_finite(n)?;
    }
    Ok(PrandtlLayer { tier, orientation: grid.orientation, eps, grid: *grid, u0, v0, w0, cut: None })
}

pub fn solve_first_prandtl(
    profile: &ShearProfile,
    grid: &BoundaryLayerGrid,
    wall: &[f64],
    eps: f64,
    mode: CoefficientMode,
) -> Result<PrandtlLayer> {
    check_wall(wall, grid)?;
    let a = coefficients(profile, grid, eps, mode)?;
    let u0 = march(&a, grid, wall, None);
    let dxu = diff(&u0, Axis::X, 1)?;
    finish(1, grid, eps, u0, dxu)
}

/// Second tier: mu u_x - u_YY = -f2 on the layer grid.
pub fn solve_second_prandtl(
    profile: &ShearProfile,
    grid: &BoundaryLayerGrid,
    wall: &[f64],
    f2: &Field2D,
    eps: f64,
    mode: CoefficientMode,
) -> Result<PrandtlLayer> {
    check_wall(wall, grid)?;
    if f2.grid != (*grid).into() {
        return Err(Error::GridMismatch("layer forcing lives on another grid".into()));
    }
    let a = coefficients(profile, grid, eps, mode)?;
    let u0 = march(&a, grid, wall, Some(&f2.scale(-1.0)));
    let dxu = diff(&u0, Axis::X, 1)?;
    finish(2, grid, eps, u0, dxu)
}

/// Restrict a physical forcing to one layer: chi(d / (2 scale)) f, sampled at Y nodes.
pub fn layer_forcing(f: &Field2D, grid: &BoundaryLayerGrid, eps: f64, cutoff: &CutoffSpec) -> Result<Field2D> {
    let pg = f.grid.physical().ok_or_else(|| Error::Dimension("forcing must live on the physical grid".into()))?;
    if pg.nx != grid.nx {
        return Err(Error::GridMismatch("x resolution differs".into()));
    }
    let o = grid.orientation;
    let mut out = Field2D::zeros(*grid);
    let hy = pg.hy();
    for k in 0..=grid.n_y {
        let d = eps.sqrt() * grid.big_y(k);
        if d > 2.0 + 1e-12 {
            continue;
        }
        let w = CutoffSpec::chi(d / (2.0 * cutoff.scale))[0];
        if w == 0.0 {
            continue;
        }
        let y = grid.physical_y(grid.big_y(k), eps).clamp(0.0, 2.0);
        for i in 0..=grid.nx {
            let col_val = {
                let r = y / hy;
                let j = r.floor() as usize;
                let a = r - j as f64;
                if j >= pg.ny || a < 1e-9 {
                    f.at(i, j.min(pg.ny))
                } else if a > 1.0 - 1e-9 {
                    f.at(i, j + 1)
                } else {
                    (1.0 - a) * f.at(i, j) + a * f.at(i, j + 1)
                }
            };
            out.set(i, k, w * col_val);
        }
    }
    let _ = o;
    Ok(out)
}

/// Evaluate the layer on the physical grid and compose with the cut-off.
pub fn apply_cutoff(layer: &PrandtlLayer, spec: &CutoffSpec, grid: &PhysicalGrid) -> Result<PrandtlLayer> {
    if grid.nx != layer.grid.nx || (grid.length - layer.grid.length).abs() > 1e-14 {
        return Err(Error::GridMismatch("layer and physical grids differ in x".into()));
    }
    let eps = layer.eps;
    let se = eps.sqrt();
    if layer.grid.y_max * se < 2.0 * spec.scale.min(1.0) {
        log::warn!(
            "layer grid reaches y = {:.3} only; the cut-off region is truncated",
            layer.grid.y_max * se
        );
    }
    let o = layer.orientation;
    let h = layer.grid.h_y();
    let ny = layer.grid.n_y;
    let mut u0 = Field2D::zeros(*grid);
    let mut v0 = Field2D::zeros(*grid);
    let mut w0 = Field2D::zeros(*grid);
    let mut psi: [Field2D; 4] = std::array::from_fn(|_| Field2D::zeros(*grid));
    let cols: Vec<[Vec<f64>; 3]> = (0..=grid.nx)
        .map(|i| [layer.u0.column(i), layer.v0.column(i), layer.w0.column(i)])
        .collect();
    for j in 0..=grid.ny {
        let y = grid.y(j);
        let big_y = o.distance(y) / se;
        let p = spec.psi(o, y);
        let beyond = big_y > layer.grid.y_max;
        for i in 0..=grid.nx {
            let [cu, cv, cw] = &cols[i];
            let (a, b, c) = if beyond {
                if layer.tier == 1 {
                    (0.0, 0.0, 0.0)
                } else {
                    (0.0, cv[ny], cw[ny])
                }
            } else {
                (interp_uniform(cu, h, big_y), interp_uniform(cv, h, big_y), interp_uniform(cw, h, big_y))
            };
            u0.set(i, j, a);
            v0.set(i, j, b);
            w0.set(i, j, c);
            for (m, f) in psi.iter_mut().enumerate() {
                f.set(i, j, p[m]);
            }
        }
    }
    let u = &(&psi[0] * &u0) - &(&psi[1] * &w0).scale(se);
    let v = &psi[0] * &v0;
    let mut out = layer.clone();
    out.cut = Some(CutLayer { u, v, u0, v0, w0, psi });
    Ok(out)
}

/// Both walls of one tier.
#[derive(Clone, Debug)]
pub struct PrandtlPair {
    pub bottom: PrandtlLayer,
    pub top: PrandtlLayer,
}

impl PrandtlPair {
    pub fn u(&self) -> Result<Field2D> {
        Ok(&self.bottom.cut()?.u + &self.top.cut()?.u)
    }

    pub fn v(&self) -> Result<Field2D> {
        Ok(&self.bottom.cut()?.v + &self.top.cut()?.v)
    }

    pub fn layers(&self) -> [&PrandtlLayer; 2] {
        [&self.bottom, &self.top]
    }
}

/// Auxiliary pressure P = -eps^-2 int_1^y G dy' and the integrand G, where G
/// collects the y-momentum terms of the composite that carry the first-tier layer.
pub fn aux_pressure(
    profile: &ShearProfile,
    tier1: &PrandtlPair,
    euler1: &EulerLayer,
    euler2: &EulerLayer,
    eps: f64,
) -> Result<(Field2D, Field2D)> {
    let g = euler1.grid;
    let up = tier1.u()?;
    let vp = tier1.v()?;
    let dx = |f: &Field2D| diff(f, Axis::X, 1);
    let dy = |f: &Field2D| diff(f, Axis::Y, 1);
    let mu = Field2D::from_fn(g, |_, y| profile.mu(y));
    let (vp_x, vp_y) = (dx(&vp)?, dy(&vp)?);
    let vp_xx = diff(&vp, Axis::X, 2)?;
    let vp_yy = diff(&vp, Axis::Y, 2)?;
    let (u1, v1, u2, v2) = (&euler1.u, &euler1.v, &euler2.u, &euler2.v);
    let (v1_x, v1_y, v2_x, v2_y) = (dx(v1)?, dy(v1)?, dx(v2)?, dy(v2)?);
    let e = |p: f64| eps.powf(p);
    let terms: [(f64, Field2D); 13] = [
        (e(1.5), &mu * &vp_x),
        (e(2.5), u1 * &vp_x),
        (e(2.0), &up * &v1_x),
        (e(2.5), &up * &vp_x),
        (e(2.5), &up * &v2_x),
        (e(3.0), u2 * &vp_x),
        (e(2.5), v1 * &vp_y),
        (e(2.5), &vp * &v1_y),
        (e(3.0), &vp * &vp_y),
        (e(3.0), &vp * &v2_y),
        (e(3.0), v2 * &vp_y),
        (-e(2.5), vp_xx),
        (-e(2.5), vp_yy),
    ];
    let mut integrand = Field2D::zeros(g);
    for (c, f) in &terms {
        integrand = &integrand + &f.scale(*c);
    }
    let mid = g.ny / 2;
    if g.ny % 2 != 0 {
        return Err(Error::OffGrid("the midline y = 1 must be a grid line (even ny)".into()));
    }
    let p = cumulative(&integrand, Axis::Y, Anchor::Node(mid))?.scale(-1.0 / (eps * eps));
    p.ensure_finite("auxiliary pressure")?;
    Ok((p, integrand))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn blgrid(nx: usize, ny: usize, ymax: f64, o: Orientation) -> BoundaryLayerGrid {
        BoundaryLayerGrid::new(0.5, nx, ymax, ny, o).unwrap()
    }

    #[test]
    fn zero_data_gives_zero_layer() {
        let g = blgrid(16, 40, 20.0, Orientation::Bottom);
        let l = solve_first_prandtl(&ShearProfile::couette(), &g, &vec![0.0; 17], 0.01, CoefficientMode::Literal).unwrap();
        assert_eq!(l.u0.max_abs(), 0.0);
        assert_eq!(l.v0.max_abs(), 0.0);
        let f = Field2D::zeros(g);
        let l2 = solve_second_prandtl(&ShearProfile::couette(), &g, &vec![0.0; 17], &f, 0.01, CoefficientMode::Literal).unwrap();
        assert_eq!(l2.u0.max_abs(), 0.0);
        let pg = PhysicalGrid::new(0.5, 16, 16).unwrap();
        let c = apply_cutoff(&l, &CutoffSpec::default(), &pg).unwrap();
        assert_eq!(c.cut().unwrap().u.max_abs(), 0.0);
    }

    #[test]
    fn incompatible_wall_data_rejected() {
        let g = blgrid(16, 40, 20.0, Orientation::Bottom);
        let w = vec![1.0; 17];
        let r = solve_first_prandtl(&ShearProfile::couette(), &g, &w, 0.01, CoefficientMode::Literal);
        assert!(matches!(r, Err(Error::Compatibility(_))));
    }

    #[test]
    fn negative_coefficient_is_degenerate() {
        let g = blgrid(16, 40, 20.0, Orientation::Bottom);
        let mut w = vec![0.3; 17];
        w[0] = 0.0;
        let r = solve_first_prandtl(&ShearProfile::couette(), &g, &w, 0.01, CoefficientMode::Constant(-1.0));
        assert!(matches!(r, Err(Error::Degeneracy(_))));
        // mu = y(2-y) +... with u_b = 0 decreasing past zero on top: mu = -y is negative inside
        let p = ShearProfile::new(crate::profile::Expr::Y.scale(-1.0), -2.0, 2, "neg");
        let r = solve_first_prandtl(&p, &g, &w, 0.01, CoefficientMode::Literal);
        assert!(matches!(r, Err(Error::Degeneracy(_))));
    }

    #[test]
    fn vertical_velocity_conventions() {
        let g = blgrid(32, 200, 20.0, Orientation::Top);
        let w: Vec<f64> = (0..=32).map(|i| (g.x(i) * 3.0).sin()).collect();
        let p = ShearProfile::couette_plus_bump(0.1, 5);
        let l1 = solve_first_prandtl(&p, &g, &w, 0.01, CoefficientMode::Literal).unwrap();
        assert!(l1.v0.row(g.n_y).iter().all(|v| *v == 0.0));
        let f = Field2D::from_fn(g, |x, yy| x * (-yy).exp());
        let l2 = solve_second_prandtl(&p, &g, &w, &f, 0.01, CoefficientMode::Literal).unwrap();
        assert!(l2.v0.row(0).iter().all(|v| *v == 0.0));
        assert!(l1.decay_ratio() < 1e-6, "{}", l1.decay_ratio());
    }

    fn erfc_error(nx: usize, ny: usize) -> f64 {
        let (c, g0, ymax) = (2.0, 0.7, 20.0);
        let g = BoundaryLayerGrid::new(1.0, nx, ymax, ny, Orientation::Bottom).unwrap();
        let mut w = vec![g0; nx + 1];
        w[0] = 0.0;
        let l = solve_first_prandtl(&ShearProfile::couette(), &g, &w, 0.01, CoefficientMode::Constant(c)).unwrap();
        let mut e = 0.0_f64;
        for k in 0..=ny {
            let yy = g.big_y(k);
            let exact = g0 * statrs::function::erf::erfc(yy * (c / 4.0).sqrt());
            e = e.max((l.u0.at(nx, k) - exact).abs());
        }
        e
    }

    #[test]
    fn constant_coefficient_matches_erfc() {
        let (a, b) = (erfc_error(50, 400), erfc_error(100, 800));
        assert!(a < 2e-2, "{a}");
        assert!((a / b).log2() >= 0.9, "{a} {b}");
    }

    #[test]
    fn heat_kernel_envelope() {
        let c = 1.0;
        let g = blgrid(64, 400, 40.0, Orientation::Bottom);
        let w: Vec<f64> = (0..=64).map(|i| (g.x(i) / 0.5).powi(2)).collect();
        let l = solve_first_prandtl(&ShearProfile::couette(), &g, &w, 0.01, CoefficientMode::Constant(c)).unwrap();
        for k in 0..=g.n_y {
            let yy = g.big_y(k);
            if yy < 10.0 {
                continue;
            }
            let env = (-yy * yy * c / (8.0 * 0.5)).exp();
            for i in 0..=64 {
                assert!(l.u0.at(i, k).abs() <= 10.0 * env + 1e-14);
            }
        }
    }

    #[test]
    fn manufactured_second_tier() {
        // u* = x^2 exp(-Y) Y-independent coefficient c: f2 = -(c u*_x - u*_YY)
        let c = 1.5;
        let err = |nx: usize, ny: usize| {
            let g = BoundaryLayerGrid::new(0.5, nx, 20.0, ny, Orientation::Bottom).unwrap();
            let us = |x: f64, yy: f64| x * x * (-yy).exp();
            let f2 = Field2D::from_fn(g, |x, yy| -(c * 2.0 * x * (-yy).exp() - us(x, yy)));
            let w: Vec<f64> = (0..=nx).map(|i| us(g.x(i), 0.0)).collect();
            let l = solve_second_prandtl(&ShearProfile::couette(), &g, &w, &f2, 0.01, CoefficientMode::Constant(c)).unwrap();
            (&l.u0 - &Field2D::from_fn(g, us)).max_abs()
        };
        let (a, b) = (err(32, 200), err(64, 400));
        assert!(a < 1e-3 && a / b > 1.8, "{a} {b}");
    }

    #[test]
    fn maximum_principle() {
        let g = blgrid(64, 200, 20.0, Orientation::Bottom);
        let w: Vec<f64> = (0..=64).map(|i| (6.0 * g.x(i)).sin() * g.x(i)).collect();
        let m = w.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let l = solve_first_prandtl(&ShearProfile::couette_plus_bump(0.1, 5), &g, &w, 0.01, CoefficientMode::Literal).unwrap();
        assert!(l.u0.max_abs() <= 1.05 * m);
    }

    #[test]
    fn moments_are_grid_stable() {
        let mom = |nx: usize, ny: usize| {
            let g = blgrid(nx, ny, 20.0, Orientation::Bottom);
            let w: Vec<f64> = (0..=nx).map(|i| g.x(i).powi(2)).collect();
            let l = solve_first_prandtl(&ShearProfile::couette_plus_bump(0.1, 5), &g, &w, 0.01, CoefficientMode::Literal).unwrap();
            let mut out = Vec::new();
            let base = [l.u0.clone(), diff(&l.u0, Axis::X, 1).unwrap()];
            for f in &base {
                for d in [f.clone(), diff(f, Axis::StretchedY, 1).unwrap(), diff(f, Axis::StretchedY, 2).unwrap()] {
                    for m in 0..=2 {
                        let wf = Field2D::from_fn(g, |_, yy| yy.powi(m)).zip_map(&d, |a, b| a * b.abs());
                        out.push(crate::numerics::integrate(&wf, crate::numerics::Region::Full).unwrap());
                    }
                }
            }
            out
        };
        let (a, b) = (mom(32, 200), mom(64, 400));
        for (x, y) in a.iter().zip(&b) {
            assert!(x.is_finite() && y.is_finite());
            let r = x.max(*y) / x.min(*y).max(1e-300);
            assert!(r <= 2.0, "{x} {y}");
        }
    }

    fn cut_divergence(n: usize) -> f64 {
        let eps = 0.01;
        let pg = PhysicalGrid::new(0.5, n, n).unwrap();
        let p = ShearProfile::couette_plus_bump(0.1, 5);
        let mut worst = 0.0_f64;
        for o in [Orientation::Bottom, Orientation::Top] {
            let g = BoundaryLayerGrid::aligned(&pg, eps, 20.0, 1, o).unwrap();
            let w: Vec<f64> = (0..=n).map(|i| (g.x(i) / 0.5).powi(4)).collect();
            let l = solve_first_prandtl(&p, &g, &w, eps, CoefficientMode::Literal).unwrap();
            let c = apply_cutoff(&l, &CutoffSpec::default(), &pg).unwrap();
            let cl = c.cut().unwrap();
            let d = &diff(&cl.u, Axis::X, 1).unwrap() + &diff(&cl.v, Axis::Y, 1).unwrap().scale(eps.sqrt());
            worst = worst.max(d.interior_max_abs());
        }
        worst
    }

    #[test]
    fn cut_layers_are_divergence_free_to_second_order() {
        let (a, b) = (cut_divergence(128), cut_divergence(256));
        assert!(a / b > 3.0, "{a} {b}");
    }

    #[test]
    fn wide_cutoff_reproduces_raw_layer() {
        let eps = 1e-4;
        let n = 64;
        let pg = PhysicalGrid::new(0.5, n, n).unwrap();
        let g = BoundaryLayerGrid::aligned(&pg, eps, 20.0, 1, Orientation::Bottom).unwrap();
        let w: Vec<f64> = (0..=n).map(|i| g.x(i)).collect();
        let l = solve_first_prandtl(&ShearProfile::couette(), &g, &w, eps, CoefficientMode::Literal).unwrap();
        let c = apply_cutoff(&l, &CutoffSpec { scale: 100.0 }, &pg).unwrap();
        let cl = c.cut().unwrap();
        assert_eq!(cl.psi[1].max_abs(), 0.0);
        assert!((&cl.u - &cl.u0).max_abs() == 0.0);
        for j in 0..=n {
            assert_eq!(cl.u0.at(n, j), l.u0.at(n, j));
        }
    }

    #[test]
    fn chi_derivatives_match_finite_differences() {
        let h = 1e-5;
        for s in 0..=40 {
            let t = 0.9 + s as f64 * 0.03;
            let c = CutoffSpec::chi(t);
            for m in 0..3 {
                let fd = (CutoffSpec::chi(t + h)[m] - CutoffSpec::chi(t - h)[m]) / (2.0 * h);
                assert!((fd - c[m + 1]).abs() < 1e-4, "t={t} m={m}");
            }
        }
    }

    proptest! {
        #[test]
        fn chi_is_a_plateau_cutoff(t in -1.0f64..4.0) {
            let c = CutoffSpec::chi(t);
            prop_assert!((0.0..=1.0).contains(&c[0]));
            if t <= 1.0 { prop_assert_eq!(c[0], 1.0); }
            if t >= 2.0 { prop_assert_eq!(c[0], 0.0); }
            if !(1.0..=2.0).contains(&t) { prop_assert_eq!(c[1], 0.0); }
        }
    }
}
