//! Composite profiles and the term-by-term ledger of the forcing they leave
//! in the steady Navier-Stokes equations.

use crate::error::{Error, Result};
use crate::euler::{solve_first_euler, solve_second_euler, EulerLayer};
use crate::numerics::{diff, Axis, BoundaryLayerGrid, Field2D, Orientation, PhysicalGrid};
use crate::prandtl::{
    apply_cutoff, aux_pressure, layer_forcing, solve_first_prandtl, solve_second_prandtl, CoefficientMode, CutoffSpec,
    PrandtlLayer, PrandtlPair,
};
use crate::profile::ShearProfile;
use serde::Serialize;
use std::collections::HashMap;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpansionConfig {
    pub eps: f64,
    pub gamma: f64,
    pub length: f64,
}

impl ExpansionConfig {
    pub fn new(eps: f64, gamma: f64, length: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 0.1) {
            return Err(Error::Config(format!("epsilon must lie in (0, 0.1], got {eps}")));
        }
        if !(gamma > 0.0 && gamma <= 0.1) {
            return Err(Error::Config(format!("gamma must lie in (0, 0.1], got {gamma}")));
        }
        if !(length > 0.0 && length <= 1.0) {
            return Err(Error::Config(format!("length must lie in (0, 1], got {length}")));
        }
        Ok(Self { eps, gamma, length })
    }
}

/// Numerical knobs of the layer construction.
#[derive(Clone, Copy, Debug)]
pub struct ExpansionOptions {
    pub mode: CoefficientMode,
    pub cutoff: CutoffSpec,
    /// Minimal truncation height of the layer grids.
    pub y_max: f64,
    /// Layer-grid refinement relative to the physical y spacing.
    pub refine: usize,
}

impl Default for ExpansionOptions {
    fn default() -> Self {
        Self { mode: CoefficientMode::Literal, cutoff: CutoffSpec::default(), y_max: 20.0, refine: 1 }
    }
}

/// Every layer of the two-tier expansion at one epsilon.
#[derive(Clone, Debug)]
pub struct LayerSet {
    pub eps: f64,
    pub grid: PhysicalGrid,
    pub profile: ShearProfile,
    pub euler1: EulerLayer,
    pub euler2: EulerLayer,
    pub prandtl1: PrandtlPair,
    pub prandtl2: PrandtlPair,
    pub aux_pressure: Field2D,
    /// eps^(-3/2) C2u, the second-tier layer source.
    pub f2: Field2D,
    pub c2u: Ledger,
}

fn wall_row(f: &Field2D, o: Orientation) -> Vec<f64> {
    let j = match o {
        Orientation::Bottom => 0,
        Orientation::Top => f.n2(),
    };
    f.row(j).iter().map(|v| -v).collect()
}

/// The layer trace vanishes at x = 0 in the continuum; the discrete value is a
/// one-sided stencil artefact of the unresolved leading edge.
fn pin_inflow(mut t: Vec<f64>) -> Vec<f64> {
    let scale = t.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    log::debug!("inflow trace {:e} against scale {:e}", t[0], scale);
    t[0] = 0.0;
    t
}

/// Run the whole layer cascade.
pub fn solve_expansion(
    profile: &ShearProfile,
    grid: &PhysicalGrid,
    cfg: &ExpansionConfig,
    opts: &ExpansionOptions,
) -> Result<LayerSet> {
    let eps = cfg.eps;
    let bl = |o| BoundaryLayerGrid::aligned(grid, eps, opts.y_max, opts.refine, o);
    let euler1 = solve_first_euler(profile, grid)?;
    let mut p1 = Vec::new();
    for o in [Orientation::Bottom, Orientation::Top] {
        let g = bl(o)?;
        let raw = solve_first_prandtl(profile, &g, &wall_row(&euler1.u, o), eps, opts.mode)?;
        p1.push(apply_cutoff(&raw, &opts.cutoff, grid)?);
    }
    let top = p1.pop().expect("two layers");
    let prandtl1 = PrandtlPair { bottom: p1.pop().expect("two layers"), top };
    let v1p = prandtl1.v()?;
    let euler2 = solve_second_euler(
        profile,
        grid,
        &pin_inflow(wall_row(&v1p, Orientation::Bottom)),
        &pin_inflow(wall_row(&v1p, Orientation::Top)),
    )?;
    let (aux, _) = aux_pressure(profile, &prandtl1, &euler1, &euler2, eps)?;
    let zero = Field2D::zeros(*grid);
    let partial = Primitives {
        u1e: euler1.u.clone(),
        v1e: euler1.v.clone(),
        u2e: euler2.u.clone(),
        v2e: euler2.v.clone(),
        u1p: prandtl1.u()?,
        v1p,
        u2p: zero.clone(),
        v2p: zero.clone(),
        paux: aux.clone(),
        f2: zero.clone(),
        psi_sum: zero.clone(),
        cut1: cut_factors(profile, &prandtl1)?,
        cut2: std::array::from_fn(|_| zero.clone()),
        lap_v1e: Some(euler1.laplacian_v(profile)?),
        lap_v2e: Some(euler2.laplacian_v(profile)?),
    };
    let bank = Bank::new(profile, grid, &partial)?;
    let c2u = assemble_c2u(eps, &bank);
    let f2 = c2u.sum(Component::U, grid).scale(eps.powf(-1.5));
    let mut p2 = Vec::new();
    for o in [Orientation::Bottom, Orientation::Top] {
        let g = bl(o)?;
        let src = layer_forcing(&f2, &g, eps, &opts.cutoff)?;
        let raw = solve_second_prandtl(profile, &g, &wall_row(&euler2.u, o), &src, eps, opts.mode)?;
        p2.push(apply_cutoff(&raw, &opts.cutoff, grid)?);
    }
    let top = p2.pop().expect("two layers");
    let prandtl2 = PrandtlPair { bottom: p2.pop().expect("two layers"), top };
    Ok(LayerSet {
        eps,
        grid: *grid,
        profile: profile.clone(),
        euler1,
        euler2,
        prandtl1,
        prandtl2,
        aux_pressure: aux,
        f2,
        c2u,
    })
}

#[derive(Clone, Debug)]
pub struct CompositeFlow {
    pub u: Field2D,
    pub v: Field2D,
    pub p: Field2D,
}

pub fn assemble_composite(set: &LayerSet) -> Result<CompositeFlow> {
    let e = set.eps;
    let g = set.grid;
    for f in [&set.euler1.v, &set.euler2.v, &set.aux_pressure] {
        if f.grid != g.into() {
            return Err(Error::GridMismatch("layer on a different grid".into()));
        }
    }
    let mu = Field2D::from_fn(g, |_, y| set.profile.mu(y));
    let (u1p, v1p) = (set.prandtl1.u()?, set.prandtl1.v()?);
    let (u2p, v2p) = (set.prandtl2.u()?, set.prandtl2.v()?);
    let mut u = mu;
    for (c, f) in [(e, &set.euler1.u), (e, &u1p), (e.powf(1.5), &set.euler2.u), (e.powf(1.5), &u2p)] {
        u = &u + &f.scale(c);
    }
    let mut v = Field2D::zeros(g);
    for (c, f) in [(e, &set.euler1.v), (e.powf(1.5), &v1p), (e.powf(1.5), &set.euler2.v), (e * e, &v2p)] {
        v = &v + &f.scale(c);
    }
    let mut p = Field2D::zeros(g);
    for (c, f) in [(e, &set.euler1.p), (e.powf(1.5), &set.euler2.p), (e * e, &set.aux_pressure)] {
        p = &p + &f.scale(c);
    }
    Ok(CompositeFlow { u, v, p })
}

/// Steady operator (u.grad u + grad P - eps Lap u) evaluated with the shared stencils.
pub fn momentum_residual(u: &Field2D, v: &Field2D, p: &Field2D, eps: f64) -> Result<(Field2D, Field2D)> {
    let d = |f: &Field2D, a, o| diff(f, a, o);
    let (ux, uy, vx, vy) = (d(u, Axis::X, 1)?, d(u, Axis::Y, 1)?, d(v, Axis::X, 1)?, d(v, Axis::Y, 1)?);
    let lap_u = &d(u, Axis::X, 2)? + &d(u, Axis::Y, 2)?;
    let lap_v = &d(v, Axis::X, 2)? + &d(v, Axis::Y, 2)?;
    let (px, py) = (d(p, Axis::X, 1)?, d(p, Axis::Y, 1)?);
    let ru = &(&(&(u * &ux) + &(v * &uy)) + &px) - &lap_u.scale(eps);
    let rv = &(&(&(u * &vx) + &(v * &vy)) + &py) - &lap_v.scale(eps);
    Ok((ru, rv))
}

/// Undifferentiated inputs of the ledger on the physical grid.
#[derive(Clone, Debug)]
pub struct Primitives {
    pub u1e: Field2D,
    pub v1e: Field2D,
    pub u2e: Field2D,
    pub v2e: Field2D,
    pub u1p: Field2D,
    pub v1p: Field2D,
    pub u2p: Field2D,
    pub v2p: Field2D,
    pub paux: Field2D,
    pub f2: Field2D,
    /// Sum of the two cut-offs of the second tier.
    pub psi_sum: Field2D,
    /// Cut-off error factors summed over walls:
    /// mu psi_y v0, psi_y d_y u0, psi_yy u0, psi_yyy w0.
    pub cut1: [Field2D; 4],
    pub cut2: [Field2D; 4],
    /// Euler Laplacians of v from the layer equations; stencils are used when absent.
    pub lap_v1e: Option<Field2D>,
    pub lap_v2e: Option<Field2D>,
}

impl Primitives {
    pub fn zeros(grid: &PhysicalGrid) -> Self {
        let z = Field2D::zeros(*grid);
        Self {
            u1e: z.clone(),
            v1e: z.clone(),
            u2e: z.clone(),
            v2e: z.clone(),
            u1p: z.clone(),
            v1p: z.clone(),
            u2p: z.clone(),
            v2p: z.clone(),
            paux: z.clone(),
            f2: z.clone(),
            psi_sum: z.clone(),
            cut1: std::array::from_fn(|_| z.clone()),
            cut2: std::array::from_fn(|_| z.clone()),
            lap_v1e: None,
            lap_v2e: None,
        }
    }

    pub fn from_layers(set: &LayerSet) -> Result<Self> {
        let c2 = [set.prandtl2.bottom.cut()?, set.prandtl2.top.cut()?];
        Ok(Self {
            u1e: set.euler1.u.clone(),
            v1e: set.euler1.v.clone(),
            u2e: set.euler2.u.clone(),
            v2e: set.euler2.v.clone(),
            u1p: set.prandtl1.u()?,
            v1p: set.prandtl1.v()?,
            u2p: set.prandtl2.u()?,
            v2p: set.prandtl2.v()?,
            paux: set.aux_pressure.clone(),
            f2: set.f2.clone(),
            psi_sum: &c2[0].psi[0] + &c2[1].psi[0],
            cut1: cut_factors(&set.profile, &set.prandtl1)?,
            cut2: cut_factors(&set.profile, &set.prandtl2)?,
            lap_v1e: Some(set.euler1.laplacian_v(&set.profile)?),
            lap_v2e: Some(set.euler2.laplacian_v(&set.profile)?),
        })
    }
}

fn cut_factors(profile: &ShearProfile, pair: &PrandtlPair) -> Result<[Field2D; 4]> {
    let [a, b] = pair.layers();
    let (fa, fb) = (single_cut_factors(profile, a)?, single_cut_factors(profile, b)?);
    Ok(std::array::from_fn(|k| &fa[k] + &fb[k]))
}

fn single_cut_factors(profile: &ShearProfile, l: &PrandtlLayer) -> Result<[Field2D; 4]> {
    let c = l.cut()?;
    let g = c.u.grid;
    let mu = Field2D::from_fn(g, |_, y| profile.mu(y));
    let u0y = diff(&c.u0, Axis::Y, 1)?;
    Ok([
        &(&mu * &c.psi[1]) * &c.v0,
        &c.psi[1] * &u0y,
        &c.psi[2] * &c.u0,
        &c.psi[3] * &c.w0,
    ])
}

/// Named fields and derivatives the ledger terms are built from.
pub struct Bank {
    fields: HashMap<&'static str, Field2D>,
}

impl Bank {
    pub fn new(profile: &ShearProfile, grid: &PhysicalGrid, p: &Primitives) -> Result<Self> {
        let mut m: HashMap<&'static str, Field2D> = HashMap::new();
        m.insert("mu", Field2D::from_fn(*grid, |_, y| profile.mu(y)));
        m.insert("dmu", Field2D::from_fn(*grid, |_, y| profile.deriv(y, 1)));
        let dx = |f: &Field2D| diff(f, Axis::X, 1);
        let dy = |f: &Field2D| diff(f, Axis::Y, 1);
        let dxx = |f: &Field2D| diff(f, Axis::X, 2);
        let dyy = |f: &Field2D| diff(f, Axis::Y, 2);
        macro_rules! with_derivs {
            ($f:expr, $n:literal, $nx:literal, $ny:literal, $nxx:literal, $nyy:literal, $lap:literal) => {{
                let f = &$f;
                let (a, b) = (dxx(f)?, dyy(f)?);
                m.insert($nx, dx(f)?);
                m.insert($ny, dy(f)?);
                m.insert($lap, &a + &b);
                m.insert($nxx, a);
                m.insert($nyy, b);
                m.insert($n, f.clone());
            }};
        }
        with_derivs!(p.u1e, "u1e", "u1e_x", "u1e_y", "u1e_xx", "u1e_yy", "lap_u1e");
        with_derivs!(p.v1e, "v1e", "v1e_x", "v1e_y", "v1e_xx", "v1e_yy", "lap_v1e");
        with_derivs!(p.u2e, "u2e", "u2e_x", "u2e_y", "u2e_xx", "u2e_yy", "lap_u2e");
        with_derivs!(p.v2e, "v2e", "v2e_x", "v2e_y", "v2e_xx", "v2e_yy", "lap_v2e");
        with_derivs!(p.u1p, "u1p", "u1p_x", "u1p_y", "u1p_xx", "u1p_yy", "lap_u1p");
        with_derivs!(p.v1p, "v1p", "v1p_x", "v1p_y", "v1p_xx", "v1p_yy", "lap_v1p");
        with_derivs!(p.u2p, "u2p", "u2p_x", "u2p_y", "u2p_xx", "u2p_yy", "lap_u2p");
        with_derivs!(p.v2p, "v2p", "v2p_x", "v2p_y", "v2p_xx", "v2p_yy", "lap_v2p");
        for (name, lap) in [("lap_v1e", &p.lap_v1e), ("lap_v2e", &p.lap_v2e)] {
            if let Some(l) = lap {
                m.insert(name, l.clone());
            }
        }
        m.insert("paux_x", dx(&p.paux)?);
        m.insert("f2", p.f2.clone());
        m.insert("one_minus_psi", p.psi_sum.map(|s| 1.0 - s));
        let names1 = ["mu_psiy_v0_1", "psiy_u0y_1", "psiyy_u0_1", "psiyyy_w0_1"];
        let names2 = ["mu_psiy_v0_2", "psiy_u0y_2", "psiyy_u0_2", "psiyyy_w0_2"];
        for k in 0..4 {
            m.insert(names1[k], p.cut1[k].clone());
            m.insert(names2[k], p.cut2[k].clone());
        }
        Ok(Self { fields: m })
    }

    pub fn get(&self, name: &str) -> &Field2D {
        self.fields.get(name).unwrap_or_else(|| panic!("ledger factor `{name}` is not defined"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Component {
    U,
    V,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Group {
    C1u,
    C1v,
    C2u,
    C1cut,
    C3u,
    Ccut,
    C3v,
}

impl Group {
    pub fn name(self) -> &'static str {
        match self {
            Group::C1u => "C1u",
            Group::C1v => "C1v",
            Group::C2u => "C2u",
            Group::C1cut => "C1cut",
            Group::C3u => "C3u",
            Group::Ccut => "Ccut",
            Group::C3v => "C3v",
        }
    }
}

/// Static description of one ledger term: coef * eps^power * product of factors.
#[derive(Clone, Copy, Debug)]
pub struct TermSpec {
    pub name: &'static str,
    pub group: Group,
    pub component: Component,
    pub power: f64,
    /// False when a factor itself depends on epsilon (auxiliary pressure, f2).
    pub pure: bool,
    pub coef: f64,
    pub factors: &'static [&'static str],
    /// Part of the leading-order remainder T1 or T2.
    pub in_t: bool,
}

const fn t(
    name: &'static str,
    group: Group,
    component: Component,
    power: f64,
    coef: f64,
    factors: &'static [&'static str],
    in_t: bool,
) -> TermSpec {
    TermSpec { name, group, component, power, pure: true, coef, factors, in_t }
}

const fn mixed(mut s: TermSpec) -> TermSpec {
    s.pure = false;
    s
}

use Component::{U, V};
use Group::*;

pub const C2U_TERMS: &[TermSpec] = &[
    mixed(t("dx(paux)", C2u, U, 2.0, 1.0, &["paux_x"], false)),
    t("u1e*dx(u1p)", C2u, U, 2.0, 1.0, &["u1e", "u1p_x"], false),
    t("u1p*dx(u1e)", C2u, U, 2.0, 1.0, &["u1p", "u1e_x"], false),
    t("u1p*dx(u1p)", C2u, U, 2.0, 1.0, &["u1p", "u1p_x"], false),
    t("v1e*dy(u1p)", C2u, U, 2.0, 1.0, &["v1e", "u1p_y"], false),
    t("dmu*v1p", C2u, U, 1.5, 1.0, &["dmu", "v1p"], false),
    t("v1p*dy(u1e)", C2u, U, 2.5, 1.0, &["v1p", "u1e_y"], false),
    t("v1p*dy(u1p)", C2u, U, 2.5, 1.0, &["v1p", "u1p_y"], false),
    t("-dxx(u1p)", C2u, U, 2.0, -1.0, &["u1p_xx"], false),
    t("u2e*dx(u1p)", C2u, U, 2.5, 1.0, &["u2e", "u1p_x"], false),
    t("u1p*dx(u2e)", C2u, U, 2.5, 1.0, &["u1p", "u2e_x"], false),
    t("v2e*dy(u1p)", C2u, U, 2.5, 1.0, &["v2e", "u1p_y"], false),
    t("v1p*dy(u2e)", C2u, U, 3.0, 1.0, &["v1p", "u2e_y"], false),
    t("cut1:-mu*psi_y*v0", C1cut, U, 1.5, -1.0, &["mu_psiy_v0_1"], false),
    t("cut1:-3*psi_y*dy(u0)", C1cut, U, 2.0, -3.0, &["psiy_u0y_1"], false),
    t("cut1:-3*psi_yy*u0", C1cut, U, 2.0, -3.0, &["psiyy_u0_1"], false),
    t("cut1:psi_yyy*w0", C1cut, U, 2.5, 1.0, &["psiyyy_w0_1"], false),
];

pub const C1_TERMS: &[TermSpec] = &[
    t("u1e*dx(u1e)", C1u, U, 2.0, 1.0, &["u1e", "u1e_x"], true),
    t("u2e*dx(u1e)", C1u, U, 2.5, 1.0, &["u2e", "u1e_x"], false),
    t("u1e*dx(u2e)", C1u, U, 2.5, 1.0, &["u1e", "u2e_x"], false),
    t("u2e*dx(u2e)", C1u, U, 3.0, 1.0, &["u2e", "u2e_x"], false),
    t("v1e*dy(u1e)", C1u, U, 2.0, 1.0, &["v1e", "u1e_y"], true),
    t("v2e*dy(u1e)", C1u, U, 2.5, 1.0, &["v2e", "u1e_y"], false),
    t("v1e*dy(u2e)", C1u, U, 2.5, 1.0, &["v1e", "u2e_y"], false),
    t("v2e*dy(u2e)", C1u, U, 3.0, 1.0, &["v2e", "u2e_y"], false),
    t("-lap(u1e)", C1u, U, 2.0, -1.0, &["lap_u1e"], true),
    t("-lap(u2e)", C1u, U, 2.5, -1.0, &["lap_u2e"], false),
    t("u1e*dx(v1e)", C1v, V, 2.0, 1.0, &["u1e", "v1e_x"], true),
    t("u1e*dx(v2e)", C1v, V, 2.5, 1.0, &["u1e", "v2e_x"], false),
    t("u2e*dx(v1e)", C1v, V, 2.5, 1.0, &["u2e", "v1e_x"], false),
    t("u2e*dx(v2e)", C1v, V, 3.0, 1.0, &["u2e", "v2e_x"], false),
    t("v1e*dy(v1e)", C1v, V, 2.0, 1.0, &["v1e", "v1e_y"], true),
    t("v2e*dy(v1e)", C1v, V, 2.5, 1.0, &["v2e", "v1e_y"], false),
    t("v1e*dy(v2e)", C1v, V, 2.5, 1.0, &["v1e", "v2e_y"], false),
    t("v2e*dy(v2e)", C1v, V, 3.0, 1.0, &["v2e", "v2e_y"], false),
    t("-lap(v1e)", C1v, V, 2.0, -1.0, &["lap_v1e"], true),
    t("-lap(v2e)", C1v, V, 2.5, -1.0, &["lap_v2e"], false),
];

pub const C3_TERMS: &[TermSpec] = &[
    t("u1e*dx(u2p)", C3u, U, 2.5, 1.0, &["u1e", "u2p_x"], false),
    t("u1p*dx(u2p)", C3u, U, 2.5, 1.0, &["u1p", "u2p_x"], false),
    t("u2p*dx(u2p)", C3u, U, 3.0, 1.0, &["u2p", "u2p_x"], false),
    t("u2e*dx(u2p)", C3u, U, 3.0, 1.0, &["u2e", "u2p_x"], false),
    t("u2p*dx(u1e)", C3u, U, 2.5, 1.0, &["u2p", "u1e_x"], false),
    t("u2p*dx(u1p)", C3u, U, 2.5, 1.0, &["u2p", "u1p_x"], false),
    t("u2p*dx(u2e)", C3u, U, 3.0, 1.0, &["u2p", "u2e_x"], false),
    t("v1e*dy(u2p)", C3u, U, 2.5, 1.0, &["v1e", "u2p_y"], true),
    t("v1p*dy(u2p)", C3u, U, 3.0, 1.0, &["v1p", "u2p_y"], false),
    t("v2e*dy(u2p)", C3u, U, 3.0, 1.0, &["v2e", "u2p_y"], false),
    t("v2p*dy(u2p)", C3u, U, 3.5, 1.0, &["v2p", "u2p_y"], false),
    t("dmu*v2p", C3u, U, 2.0, 1.0, &["dmu", "v2p"], true),
    t("v2p*dy(u1e)", C3u, U, 3.0, 1.0, &["v2p", "u1e_y"], false),
    t("v2p*dy(u1p)", C3u, U, 3.0, 1.0, &["v2p", "u1p_y"], false),
    t("v2p*dy(u2e)", C3u, U, 3.5, 1.0, &["v2p", "u2e_y"], false),
    t("-dxx(u2p)", C3u, U, 2.5, -1.0, &["u2p_xx"], false),
    mixed(t("cut:(1-psi)*f2", Ccut, U, 1.5, 1.0, &["one_minus_psi", "f2"], false)),
    t("cut2:-mu*psi_y*v0", Ccut, U, 2.0, -1.0, &["mu_psiy_v0_2"], true),
    t("cut2:-3*psi_y*dy(u0)", Ccut, U, 2.5, -3.0, &["psiy_u0y_2"], true),
    t("cut2:-3*psi_yy*u0", Ccut, U, 2.5, -3.0, &["psiyy_u0_2"], false),
    t("cut2:psi_yyy*w0", Ccut, U, 3.0, 1.0, &["psiyyy_w0_2"], false),
    t("mu*dx(v2p)", C3v, V, 2.0, 1.0, &["mu", "v2p_x"], true),
    t("u1e*dx(v2p)", C3v, V, 3.0, 1.0, &["u1e", "v2p_x"], false),
    t("u1p*dx(v2p)", C3v, V, 3.0, 1.0, &["u1p", "v2p_x"], false),
    t("u2e*dx(v2p)", C3v, V, 3.5, 1.0, &["u2e", "v2p_x"], false),
    t("u2p*dx(v1e)", C3v, V, 2.5, 1.0, &["u2p", "v1e_x"], false),
    t("u2p*dx(v1p)", C3v, V, 3.0, 1.0, &["u2p", "v1p_x"], false),
    t("u2p*dx(v2e)", C3v, V, 3.0, 1.0, &["u2p", "v2e_x"], false),
    t("u2p*dx(v2p)", C3v, V, 3.5, 1.0, &["u2p", "v2p_x"], false),
    t("v2p*dy(v1e)", C3v, V, 3.0, 1.0, &["v2p", "v1e_y"], false),
    t("v2p*dy(v1p)", C3v, V, 3.5, 1.0, &["v2p", "v1p_y"], false),
    t("v2p*dy(v2e)", C3v, V, 3.5, 1.0, &["v2p", "v2e_y"], false),
    t("v1e*dy(v2p)", C3v, V, 3.0, 1.0, &["v1e", "v2p_y"], false),
    t("v1p*dy(v2p)", C3v, V, 3.5, 1.0, &["v1p", "v2p_y"], false),
    t("v2e*dy(v2p)", C3v, V, 3.5, 1.0, &["v2e", "v2p_y"], false),
    t("v2p*dy(v2p)", C3v, V, 4.0, 1.0, &["v2p", "v2p_y"], false),
    t("-dxx(v2p)", C3v, V, 3.0, -1.0, &["v2p_xx"], false),
    t("-dyy(v2p)", C3v, V, 3.0, -1.0, &["v2p_yy"], false),
];

#[derive(Clone, Debug)]
pub struct LedgerTerm {
    pub spec: TermSpec,
    pub field: Field2D,
}

#[derive(Clone, Debug, Default)]
pub struct Ledger {
    pub terms: Vec<LedgerTerm>,
}

impl Ledger {
    fn evaluate(specs: &[TermSpec], eps: f64, bank: &Bank) -> Self {
        let terms = specs
            .iter()
            .map(|s| {
                let mut f = bank.get(s.factors[0]).scale(s.coef * eps.powf(s.power));
                for name in &s.factors[1..] {
                    f = &f * bank.get(name);
                }
                LedgerTerm { spec: *s, field: f }
            })
            .collect();
        Self { terms }
    }

    pub fn get(&self, name: &str) -> Option<&LedgerTerm> {
        self.terms.iter().find(|t| t.spec.name == name)
    }

    /// Sum of all terms of one component.
    pub fn sum(&self, c: Component, grid: &PhysicalGrid) -> Field2D {
        self.sum_where(grid, |s| s.component == c)
    }

    pub fn sum_where(&self, grid: &PhysicalGrid, keep: impl Fn(&TermSpec) -> bool) -> Field2D {
        let mut acc = Field2D::zeros(*grid);
        for t in self.terms.iter().filter(|t| keep(&t.spec)) {
            acc = &acc + &t.field;
        }
        acc
    }

    fn require(&self, specs: &[TermSpec]) -> Result<()> {
        for s in specs {
            if self.get(s.name).is_none() {
                return Err(Error::LedgerIncomplete(s.name.to_string()));
            }
        }
        Ok(())
    }
}

/// C2u together with the first-tier cut-off error.
pub fn assemble_c2u(eps: f64, bank: &Bank) -> Ledger {
    Ledger::evaluate(C2U_TERMS, eps, bank)
}

#[derive(Clone, Debug)]
pub struct ForcingDecomposition {
    pub f_u: Field2D,
    pub f_v: Field2D,
    pub t1: Field2D,
    pub t2: Field2D,
    pub residue_u: Field2D,
    pub residue_v: Field2D,
    /// C2u, first-tier cut, C1, C3 and second-tier cut terms.
    pub ledger: Ledger,
}

/// F = C1 + C3 (with the second-tier cut error) and its split into eps^2 T plus residue.
pub fn assemble_forcing(eps: f64, grid: &PhysicalGrid, bank: &Bank, c2u: &Ledger) -> Result<ForcingDecomposition> {
    c2u.require(C2U_TERMS)?;
    let mut ledger = c2u.clone();
    ledger.terms.extend(Ledger::evaluate(C1_TERMS, eps, bank).terms);
    ledger.terms.extend(Ledger::evaluate(C3_TERMS, eps, bank).terms);
    ledger.require(C1_TERMS)?;
    ledger.require(C3_TERMS)?;
    let in_f = |s: &TermSpec| !matches!(s.group, Group::C2u | Group::C1cut);
    let f_u = ledger.sum_where(grid, |s| in_f(s) && s.component == U);
    let f_v = ledger.sum_where(grid, |s| in_f(s) && s.component == V);
    let e2 = eps * eps;
    let t1 = ledger.sum_where(grid, |s| in_f(s) && s.component == U && s.in_t).scale(1.0 / e2);
    let t2 = ledger.sum_where(grid, |s| in_f(s) && s.component == V && s.in_t).scale(1.0 / e2);
    let residue_u = ledger.sum_where(grid, |s| in_f(s) && s.component == U && !s.in_t);
    let residue_v = ledger.sum_where(grid, |s| in_f(s) && s.component == V && !s.in_t);
    for (f, n) in [(&f_u, "F_u"), (&f_v, "F_v"), (&t1, "T1"), (&t2, "T2")] {
        f.ensure_finite(n)?;
    }
    Ok(ForcingDecomposition { f_u, f_v, t1, t2, residue_u, residue_v, ledger })
}

/// Convenience: bank and forcing straight from a layer set.
pub fn forcing_for(set: &LayerSet) -> Result<ForcingDecomposition> {
    let prims = Primitives::from_layers(set)?;
    let bank = Bank::new(&set.profile, &set.grid, &prims)?;
    assemble_forcing(set.eps, &set.grid, &bank, &set.c2u)
}
