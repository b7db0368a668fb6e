//! First and second Euler correctors, solved in divided vorticity form.

use crate::error::{Error, Result};
use crate::numerics::ops::{d2_stencil, diff_1d};
use crate::numerics::ops::cumtrapz;
use crate::numerics::{cumulative, diff, solve_linear, Anchor, Axis, Field2D, LinearSystem, PhysicalGrid};
use crate::profile::ShearProfile;
use serde::Serialize;

#[derive(Clone, Debug)]
pub struct EulerLayer {
    pub tier: u8,
    pub grid: PhysicalGrid,
    pub v: Field2D,
    pub u: Field2D,
    pub p: Field2D,
    /// Right-hand side of the divided vorticity equation.
    pub rhs: Field2D,
}

impl EulerLayer {
    pub fn header(&self) -> Vec<String> {
        vec![format!("layer: euler, tier: {}", self.tier)]
    }

    /// Residual of the x-momentum equation mu u_x + mu' v + P_x - forcing.
    pub fn momentum_residual(&self, profile: &ShearProfile) -> Result<Field2D> {
        let ux = diff(&self.u, Axis::X, 1)?;
        let px = diff(&self.p, Axis::X, 1)?;
        let g = self.grid;
        let mut r = Field2D::zeros(g);
        for j in 0..=g.ny {
            let d = profile.derivs3(g.y(j));
            let f = if self.tier == 1 { d[2] } else { 0.0 };
            for i in 0..=g.nx {
                r.set(i, j, d[0] * ux.at(i, j) + d[1] * self.v.at(i, j) + px.at(i, j) - f);
            }
        }
        Ok(r)
    }

    /// Lap v read off the layer equation, q2 v - rhs. Agrees with the
    /// five-point Laplacian to solver tolerance inside and is exact on the edges.
    pub fn laplacian_v(&self, profile: &ShearProfile) -> Result<Field2D> {
        let q2 = q2_column(profile, &self.grid)?;
        let mut out = Field2D::zeros(self.grid);
        for j in 0..=self.grid.ny {
            for i in 0..=self.grid.nx {
                out.set(i, j, q2[j] * self.v.at(i, j) - self.rhs.at(i, j));
            }
        }
        Ok(out)
    }

    /// Max over interior nodes of |u_x + v_y|.
    pub fn divergence(&self) -> Result<f64> {
        let d = &diff(&self.u, Axis::X, 1)? + &diff(&self.v, Axis::Y, 1)?;
        Ok(d.interior_max_abs())
    }

    /// Largest one-sided |v_yy| on the two walls.
    pub fn wall_curvature(&self) -> Result<f64> {
        let vyy = diff(&self.v, Axis::Y, 2)?;
        Ok(vyy.row(0).iter().chain(vyy.row(self.grid.ny)).fold(0.0_f64, |m, v| m.max(v.abs())))
    }
}

fn q2_column(profile: &ShearProfile, g: &PhysicalGrid) -> Result<Vec<f64>> {
    (0..=g.ny).map(|j| profile.q2(g.y(j))).collect()
}

/// Solve -Lap v + q2 v = rhs in the interior with v = boundary on the edges.
fn solve_divided(profile: &ShearProfile, g: &PhysicalGrid, rhs: &Field2D, boundary: &Field2D) -> Result<Field2D> {
    let q2 = q2_column(profile, g)?;
    let (nx, ny) = (g.nx, g.ny);
    let (cx, cy) = (1.0 / (g.hx() * g.hx()), 1.0 / (g.hy() * g.hy()));
    let m = nx - 1;
    let id = |i: usize, j: usize| (j - 1) * m + (i - 1);
    let mut sys = LinearSystem::new(m * (ny - 1), 1e-11);
    sys.triplets.reserve(5 * sys.n);
    for j in 1..ny {
        for i in 1..nx {
            let r = id(i, j);
            sys.push(r, r, 2.0 * cx + 2.0 * cy + q2[j]);
            let mut b = rhs.at(i, j);
            for (ii, jj, c) in [(i - 1, j, cx), (i + 1, j, cx), (i, j - 1, cy), (i, j + 1, cy)] {
                if ii == 0 || ii == nx || jj == 0 || jj == ny {
                    b += c * boundary.at(ii, jj);
                } else {
                    sys.push(r, id(ii, jj), -c);
                }
            }
            sys.rhs[r] = b;
        }
    }
    let x = solve_linear(&sys)?;
    let mut v = boundary.clone();
    for j in 1..ny {
        for i in 1..nx {
            v.set(i, j, x[id(i, j)]);
        }
    }
    Ok(v)
}

/// u = -int_0^x v_y dx and P = -int_0^y mu v_x dy - int_0^x m dx, where m is the
/// y-independent x-momentum defect read off at the bottom wall.
fn recover(profile: &ShearProfile, g: &PhysicalGrid, v: &Field2D, tier: u8) -> Result<(Field2D, Field2D)> {
    let vy = diff(v, Axis::Y, 1)?;
    let u = cumulative(&vy, Axis::X, Anchor::Start)?.scale(-1.0);
    let vx = diff(v, Axis::X, 1)?;
    let mut integrand = Field2D::zeros(*g);
    for j in 0..=g.ny {
        let mu = profile.mu(g.y(j));
        for i in 0..=g.nx {
            integrand.set(i, j, -mu * vx.at(i, j));
        }
    }
    let mut p = cumulative(&integrand, Axis::Y, Anchor::Start)?;
    let d = profile.derivs3(0.0);
    let f0 = if tier == 1 { d[2] } else { 0.0 };
    let m: Vec<f64> = (0..=g.nx).map(|i| -d[0] * vy.at(i, 0) + d[1] * v.at(i, 0) - f0).collect();
    let shift = cumtrapz(&m, g.hx());
    for j in 0..=g.ny {
        for (i, s) in shift.iter().enumerate() {
            p.set(i, j, p.at(i, j) - s);
        }
    }
    Ok((u, p))
}

fn build(profile: &ShearProfile, g: &PhysicalGrid, tier: u8, v: Field2D, rhs: Field2D) -> Result<EulerLayer> {
    let (u, p) = recover(profile, g, &v, tier)?;
    for (f, n) in [(&v, "v"), (&u, "u"), (&p, "P")] {
        f.ensure_finite(n)?;
    }
    Ok(EulerLayer { tier, grid: *g, v, u, p, rhs })
}

pub fn solve_first_euler(profile: &ShearProfile, grid: &PhysicalGrid) -> Result<EulerLayer> {
    let q3: Vec<f64> = (0..=grid.ny).map(|j| profile.q3(grid.y(j))).collect::<Result<_>>()?;
    let rhs = Field2D::from_fn(*grid, |_, y| q3[(y / grid.hy()).round() as usize]);
    solve_first_euler_with_rhs(profile, grid, &rhs)
}

/// First-tier solve with a caller-supplied right-hand side in place of mu'''/mu.
pub fn solve_first_euler_with_rhs(profile: &ShearProfile, grid: &PhysicalGrid, rhs: &Field2D) -> Result<EulerLayer> {
    if rhs.grid != (*grid).into() {
        return Err(Error::GridMismatch("right-hand side lives on another grid".into()));
    }
    let v = solve_divided(profile, grid, rhs, &Field2D::zeros(*grid))?;
    build(profile, grid, 1, v, rhs.clone())
}

/// Second-tier solve. `bottom` and `top` are nodal wall values of v (length nx+1).
pub fn solve_second_euler(profile: &ShearProfile, grid: &PhysicalGrid, bottom: &[f64], top: &[f64]) -> Result<EulerLayer> {
    let n = grid.nx;
    if bottom.len() != n + 1 || top.len() != n + 1 {
        return Err(Error::Dimension(format!("wall traces need {} values", n + 1)));
    }
    let scale = 1.0 + bottom.iter().chain(top).fold(0.0_f64, |m, v| m.max(v.abs()));
    for (name, t) in [("bottom", bottom), ("top", top)] {
        if t[0].abs() > 1e-10 * scale {
            return Err(Error::Compatibility(format!(
                "{name} trace is {:e} at x = 0 where the inflow data vanish",
                t[0]
            )));
        }
    }
    let mut b = Field2D::zeros(*grid);
    for i in 0..=n {
        b.set(i, 0, bottom[i]);
        b.set(i, grid.ny, top[i]);
    }
    for j in 1..grid.ny {
        let s = grid.y(j) / 2.0;
        b.set(n, j, (1.0 - s) * bottom[n] + s * top[n]);
    }
    let v = solve_divided(profile, grid, &Field2D::zeros(*grid), &b)?;
    build(profile, grid, 2, v, Field2D::zeros(*grid))
}

#[derive(Clone, Debug, Serialize)]
pub struct CornerCheck {
    pub corner: String,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompatibilityRecord {
    pub tier: u8,
    pub checks: Vec<CornerCheck>,
    pub max_residual: f64,
}

impl CompatibilityRecord {
    pub fn flagged(&self) -> bool {
        self.checks.iter().any(|c| c.flagged)
    }
}

/// Corner relations of -Lap v + q2 v = f: v_yy taken along the x-boundary line
/// against q2 v - v_xx - f with v_xx taken along the wall, plus trace agreement.
pub fn check_compatibility(layer: &EulerLayer, profile: &ShearProfile) -> Result<CompatibilityRecord> {
    check_compatibility_with(layer, profile, 1e-6)
}

pub fn check_compatibility_with(layer: &EulerLayer, profile: &ShearProfile, threshold: f64) -> Result<CompatibilityRecord> {
    let g = layer.grid;
    let v = &layer.v;
    let mut checks = Vec::new();
    for (i0, xn) in [(0, "x=0"), (g.nx, "x=L")] {
        for (j0, yn) in [(0, "y=0"), (g.ny, "y=2")] {
            let y = g.y(j0);
            let col = v.column(i0);
            let row = v.row(j0);
            let vyy = d2_stencil(g.ny, j0, g.hy()).apply(|m| col[m]);
            let vxx = diff_1d(row, g.hx(), 2)[i0];
            let f = if layer.tier == 1 { profile.q3(y)? } else { 0.0 };
            let rhs = profile.q2(y)? * v.at(i0, j0) - vxx - f;
            let residual = (vyy - rhs).abs();
            checks.push(CornerCheck {
                corner: format!("{xn},{yn} second order"),
                lhs: vyy,
                rhs,
                residual,
                flagged: residual > threshold,
            });
        }
    }
    let max_residual = checks.iter().fold(0.0_f64, |m, c| m.max(c.residual));
    Ok(CompatibilityRecord { tier: layer.tier, checks, max_residual })
}
