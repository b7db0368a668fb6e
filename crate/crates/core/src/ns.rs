//! Steady Navier-Stokes in the channel: collocated primitive variables,
//! pressure-stabilized continuity, Newton iteration with an exact Jacobian.

use crate::composite::{assemble_composite, solve_expansion, CompositeFlow, ExpansionConfig, ExpansionOptions};
use crate::error::{Error, Result};
use crate::numerics::ops::{d1_stencil, d2_stencil, Stencil};
use crate::numerics::{diff, solve_linear, Axis, Field2D, LinearSystem, PhysicalGrid};
use crate::profile::{c0, ShearProfile};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct NsOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// beta in tau = beta hx hy / eps.
    pub stabilization: f64,
    pub eps_min: f64,
}

impl Default for NsOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 50, stabilization: 0.05, eps_min: 1e-4 }
    }
}

/// Data of one steady problem. Dirichlet values are read from `u_bc`, `v_bc`
/// on the walls and the inflow column; the remaining fields are right-hand
/// sides (zero for the physical problem).
#[derive(Clone, Debug)]
pub struct NsProblem {
    pub grid: PhysicalGrid,
    pub eps: f64,
    pub u_bc: Field2D,
    pub v_bc: Field2D,
    pub fu: Field2D,
    pub fv: Field2D,
    pub fc: Field2D,
    /// Outflow rhs of d_y u + d_x v, per row j.
    pub shear: Vec<f64>,
    /// Outflow rhs of P - 2 eps d_x u, per row j.
    pub normal: Vec<f64>,
}

impl NsProblem {
    /// Channel problem: no slip at y = 0, wall speed u_b at y = 2, inflow from `inflow`.
    /// The stress-free pair holds for the difference from `inflow`, so the
    /// outflow data are the discrete stresses of the composite.
    pub fn channel(grid: PhysicalGrid, eps: f64, u_b: f64, inflow: &CompositeFlow) -> Result<Self> {
        if inflow.u.grid != grid.into() {
            return Err(Error::GridMismatch("inflow lives on another grid".into()));
        }
        let mut u_bc = Field2D::zeros(grid);
        let mut v_bc = Field2D::zeros(grid);
        for j in 1..grid.ny {
            u_bc.set(0, j, inflow.u.at(0, j));
            v_bc.set(0, j, inflow.v.at(0, j));
        }
        for i in 0..=grid.nx {
            u_bc.set(i, grid.ny, u_b);
        }
        let uy = diff(&inflow.u, Axis::Y, 1)?;
        let ux = diff(&inflow.u, Axis::X, 1)?;
        let vx = diff(&inflow.v, Axis::X, 1)?;
        let nx = grid.nx;
        let shear = (0..=grid.ny).map(|j| uy.at(nx, j) + vx.at(nx, j)).collect();
        let normal = (0..=grid.ny).map(|j| inflow.p.at(nx, j) - 2.0 * eps * ux.at(nx, j)).collect();
        let z = Field2D::zeros(grid);
        Ok(Self {
            grid,
            eps,
            u_bc,
            v_bc,
            fu: z.clone(),
            fv: z.clone(),
            fc: z,
            shear,
            normal,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NsSolution {
    #[serde(skip)]
    pub u: Field2D,
    #[serde(skip)]
    pub v: Field2D,
    #[serde(skip)]
    pub p: Field2D,
    pub eps: f64,
    /// Max-norm nonlinear residual before each Newton step and after the last.
    pub trace: Vec<f64>,
    pub converged: bool,
    /// max r_{k+1} / r_k^2 over the steps with r_k <= 1e-3.
    pub quadratic_constant: Option<f64>,
}

struct Row {
    value: f64,
    entries: Vec<(usize, f64)>,
}

struct Assembler<'a> {
    g: PhysicalGrid,
    n: usize,
    z: &'a [f64],
}

const U: usize = 0;
const V: usize = 1;
const P: usize = 2;

impl<'a> Assembler<'a> {
    fn idx(&self, f: usize, i: usize, j: usize) -> usize {
        f * self.n + j * (self.g.nx + 1) + i
    }

    fn val(&self, f: usize, i: usize, j: usize) -> f64 {
        self.z[self.idx(f, i, j)]
    }

    fn sx(&self, order: u8, i: usize) -> Stencil {
        if order == 1 {
            d1_stencil(self.g.nx, i, self.g.hx())
        } else {
            d2_stencil(self.g.nx, i, self.g.hx())
        }
    }

    fn sy(&self, order: u8, j: usize) -> Stencil {
        if order == 1 {
            d1_stencil(self.g.ny, j, self.g.hy())
        } else {
            d2_stencil(self.g.ny, j, self.g.hy())
        }
    }

    fn point(&self, r: &mut Row, f: usize, i: usize, j: usize, c: f64) {
        r.value += c * self.val(f, i, j);
        r.entries.push((self.idx(f, i, j), c));
    }

    /// c * D f at (i, j); `x` selects the axis.
    fn lin(&self, r: &mut Row, f: usize, x: bool, order: u8, i: usize, j: usize, c: f64) {
        let s = if x { self.sx(order, i) } else { self.sy(order, j) };
        for (k, w) in s.iter() {
            let (ii, jj) = if x { (k, j) } else { (i, k) };
            self.point(r, f, ii, jj, c * w);
        }
    }

    /// c * a(i,j) * (D_axis b)(i,j)
    fn prod(&self, r: &mut Row, a: usize, b: usize, x: bool, i: usize, j: usize, c: f64) {
        let s = if x { self.sx(1, i) } else { self.sy(1, j) };
        let av = self.val(a, i, j);
        let mut db = 0.0;
        for (k, w) in s.iter() {
            let (ii, jj) = if x { (k, j) } else { (i, k) };
            db += w * self.val(b, ii, jj);
            r.entries.push((self.idx(b, ii, jj), c * av * w));
        }
        r.value += c * av * db;
        r.entries.push((self.idx(a, i, j), c * db));
    }

    fn momentum(&self, r: &mut Row, comp: usize, i: usize, j: usize, eps: f64) {
        self.prod(r, U, comp, true, i, j, 1.0);
        self.prod(r, V, comp, false, i, j, 1.0);
        self.lin(r, P, comp == U, 1, i, j, 1.0);
        self.lin(r, comp, true, 2, i, j, -eps);
        self.lin(r, comp, false, 2, i, j, -eps);
    }
}

fn new_row() -> Row {
    Row { value: 0.0, entries: Vec::with_capacity(24) }
}

/// Residual vector and (optionally) Jacobian of the discrete system at `z`.
fn assemble(pb: &NsProblem, z: &[f64], tau: f64, jac: bool) -> (Vec<f64>, Option<LinearSystem>) {
    let g = pb.grid;
    let n = (g.nx + 1) * (g.ny + 1);
    let a = Assembler { g, n, z };
    let mut res = vec![0.0; 3 * n];
    let mut sys = jac.then(|| {
        let mut s = LinearSystem::new(3 * n, 1e-10);
        s.triplets.reserve(3 * n * 20);
        s
    });
    let eps = pb.eps;
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            let wall = j == 0 || j == g.ny;
            let rows: [(usize, Row); 3] = if wall || i == 0 {
                let mut ru = new_row();
                a.point(&mut ru, U, i, j, 1.0);
                ru.value -= pb.u_bc.at(i, j);
                let mut rv = new_row();
                a.point(&mut rv, V, i, j, 1.0);
                rv.value -= pb.v_bc.at(i, j);
                let mut rp = new_row();
                if wall {
                    a.momentum(&mut rp, V, i, j, eps);
                    rp.value -= pb.fv.at(i, j);
                } else {
                    a.momentum(&mut rp, U, i, j, eps);
                    rp.value -= pb.fu.at(i, j);
                }
                [(U, ru), (V, rv), (P, rp)]
            } else if i == g.nx {
                let mut rc = new_row();
                a.lin(&mut rc, U, true, 1, i, j, 1.0);
                a.lin(&mut rc, V, false, 1, i, j, 1.0);
                rc.value -= pb.fc.at(i, j);
                let mut rs = new_row();
                a.lin(&mut rs, U, false, 1, i, j, 1.0);
                a.lin(&mut rs, V, true, 1, i, j, 1.0);
                rs.value -= pb.shear[j];
                let mut rn = new_row();
                a.point(&mut rn, P, i, j, 1.0);
                a.lin(&mut rn, U, true, 1, i, j, -2.0 * eps);
                rn.value -= pb.normal[j];
                [(U, rc), (V, rs), (P, rn)]
            } else {
                let mut ru = new_row();
                a.momentum(&mut ru, U, i, j, eps);
                ru.value -= pb.fu.at(i, j);
                let mut rv = new_row();
                a.momentum(&mut rv, V, i, j, eps);
                rv.value -= pb.fv.at(i, j);
                let mut rc = new_row();
                a.lin(&mut rc, U, true, 1, i, j, 1.0);
                a.lin(&mut rc, V, false, 1, i, j, 1.0);
                a.lin(&mut rc, P, true, 2, i, j, -tau);
                a.lin(&mut rc, P, false, 2, i, j, -tau);
                rc.value -= pb.fc.at(i, j);
                [(U, ru), (V, rv), (P, rc)]
            };
            for (slot, row) in rows {
                let r = a.idx(slot, i, j);
                res[r] = row.value;
                if let Some(s) = sys.as_mut() {
                    for (c, w) in row.entries {
                        s.push(r, c, w);
                    }
                }
            }
        }
    }
    (res, sys)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Newton iteration from the given initial fields.
pub fn solve_problem(pb: &NsProblem, init: (&Field2D, &Field2D, &Field2D), opts: &NsOptions) -> Result<NsSolution> {
    if pb.eps < opts.eps_min {
        return Err(Error::BelowRobustnessFloor { eps: pb.eps, floor: opts.eps_min });
    }
    let g = pb.grid;
    let tau = opts.stabilization * g.hx() * g.hy() / pb.eps;
    let mut z: Vec<f64> = init.0.values.iter().chain(&init.1.values).chain(&init.2.values).copied().collect();
    let mut trace = Vec::new();
    let mut converged = false;
    for it in 0..=opts.max_iter {
        let (res, _) = assemble(pb, &z, tau, false);
        let r = max_abs(&res);
        if !r.is_finite() {
            break;
        }
        trace.push(r);
        log::debug!("newton step {it}: residual {r:e}");
        if r <= opts.tol {
            converged = true;
            break;
        }
        if it == opts.max_iter {
            break;
        }
        let (mut res, sys) = assemble(pb, &z, tau, true);
        let mut sys = sys.expect("jacobian requested");
        res.iter_mut().for_each(|x| *x = -*x);
        sys.rhs = res;
        let dz = solve_linear(&sys)?;
        for (a, d) in z.iter_mut().zip(dz) {
            *a += d;
        }
    }
    if !converged {
        return Err(Error::NonConvergence { iterations: trace.len(), trace });
    }
    let n = (g.nx + 1) * (g.ny + 1);
    let field = |k: usize| Field2D::from_values(g, z[k * n..(k + 1) * n].to_vec());
    let quadratic_constant = trace
        .windows(2)
        .filter(|w| w[0] <= 1e-3 && w[0] > 0.0)
        .map(|w| w[1] / (w[0] * w[0]))
        .fold(None, |m: Option<f64>, c| Some(m.map_or(c, |m| m.max(c))));
    Ok(NsSolution { u: field(0)?, v: field(1)?, p: field(2)?, eps: pb.eps, trace, converged, quadratic_constant })
}

/// Channel solve with composite inflow and the composite as initial guess.
pub fn solve_ns(cfg: &ExpansionConfig, profile: &ShearProfile, inflow: &CompositeFlow, opts: &NsOptions) -> Result<NsSolution> {
    if cfg.eps < opts.eps_min {
        return Err(Error::BelowRobustnessFloor { eps: cfg.eps, floor: opts.eps_min });
    }
    let g = *inflow.u.grid.physical().ok_or_else(|| Error::Dimension("inflow must live on the physical grid".into()))?;
    if (g.length - cfg.length).abs() > 1e-12 {
        return Err(Error::GridMismatch("grid length differs from the configured length".into()));
    }
    if g.hy() > cfg.eps.sqrt() / 4.0 {
        log::warn!("hy = {:.3e} does not resolve the sqrt(eps) = {:.3e} layer (hy <= sqrt(eps)/4)", g.hy(), cfg.eps.sqrt());
    }
    let pb = NsProblem::channel(g, cfg.eps, profile.u_b, inflow)?;
    solve_problem(&pb, (&inflow.u, &inflow.v, &inflow.p), opts)
}

#[derive(Clone, Debug, Serialize)]
pub struct RateEntry {
    pub eps: f64,
    pub sup_err_u: f64,
    pub sup_err_v: f64,
    /// (sup_err_u + sup_err_v) / (c0 eps)
    pub constant: f64,
    pub newton_steps: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RateStudy {
    pub label: String,
    pub entries: Vec<RateEntry>,
    /// Least-squares slope of log(sup_err_u + sup_err_v) against log(eps).
    pub slope: f64,
    #[serde(skip)]
    pub runs: Vec<RateRun>,
}

/// Everything computed at one epsilon, kept for the remainder diagnostics.
#[derive(Clone, Debug)]
pub struct RateRun {
    pub cfg: ExpansionConfig,
    pub composite: CompositeFlow,
    pub layers: crate::composite::LayerSet,
    pub solution: NsSolution,
}

pub fn fit_slope(eps: &[f64], err: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = eps.iter().zip(err).filter(|(_, e)| **e > 0.0).map(|(a, e)| (a.ln(), e.ln())).collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn sup_errors(profile: &ShearProfile, s: &NsSolution) -> (f64, f64) {
    let g = *s.u.grid.physical().expect("physical grid");
    let mut eu = 0.0_f64;
    for j in 0..=g.ny {
        let mu = profile.mu(g.y(j));
        for i in 0..=g.nx {
            eu = eu.max((s.u.at(i, j) - mu).abs());
        }
    }
    (eu, s.v.max_abs())
}

/// Expansion plus Navier-Stokes solve at each epsilon (run in parallel), then the fit.
pub fn rate_study(
    profile: &ShearProfile,
    grid: &PhysicalGrid,
    template: &ExpansionConfig,
    eps_list: &[f64],
    exp_opts: &ExpansionOptions,
    opts: &NsOptions,
) -> Result<RateStudy> {
    if eps_list.is_empty() || eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("epsilon list must be nonempty and strictly decreasing".into()));
    }
    if let Some(e) = eps_list.iter().find(|e| **e < opts.eps_min) {
        return Err(Error::BelowRobustnessFloor { eps: *e, floor: opts.eps_min });
    }
    let c = c0(profile, 3)?;
    let runs: Vec<RateRun> = eps_list
        .par_iter()
        .map(|&eps| {
            let cfg = ExpansionConfig::new(eps, template.gamma, template.length)?;
            let layers = solve_expansion(profile, grid, &cfg, exp_opts)?;
            let composite = assemble_composite(&layers)?;
            let solution = solve_ns(&cfg, profile, &composite, opts)?;
            Ok(RateRun { cfg, composite, layers, solution })
        })
        .collect::<Result<_>>()?;
    let entries: Vec<RateEntry> = runs
        .iter()
        .map(|r| {
            let (eu, ev) = sup_errors(profile, &r.solution);
            let total = eu + ev;
            let constant = if total == 0.0 { 0.0 } else { total / (c * r.cfg.eps) };
            RateEntry { eps: r.cfg.eps, sup_err_u: eu, sup_err_v: ev, constant, newton_steps: r.solution.trace.len() - 1 }
        })
        .collect();
    let e: Vec<f64> = entries.iter().map(|r| r.eps).collect();
    let err: Vec<f64> = entries.iter().map(|r| r.sup_err_u + r.sup_err_v).collect();
    Ok(RateStudy { label: profile.label.clone(), slope: fit_slope(&e, &err), entries, runs })
}

impl RateStudy {
    pub fn csv(&self) -> String {
        let mut s = String::from("epsilon,sup_err_u,sup_err_v,constant\n");
        for r in &self.entries {
            s.push_str(&format!("{:e},{:e},{:e},{:e}\n", r.eps, r.sup_err_u, r.sup_err_v, r.constant));
        }
        s
    }
}
