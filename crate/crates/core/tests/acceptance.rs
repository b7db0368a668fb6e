//! One test per acceptance criterion; each prints a single PASS/FAIL line.

use shearlayer::composite::{
    assemble_composite, forcing_for, momentum_residual, solve_expansion, ExpansionConfig, ExpansionOptions, LayerSet,
};
use shearlayer::euler::solve_first_euler_with_rhs;
use shearlayer::ns::{rate_study, RateStudy};
use shearlayer::numerics::{BoundaryLayerGrid, Field2D, Orientation, PhysicalGrid};
use shearlayer::prandtl::{solve_first_prandtl, CoefficientMode};
use shearlayer::profile::{c0, ShearProfile};
use shearlayer::verify::{
    check_profile_estimates, check_t_estimates, drift, extract_remainder, remainder_diagnostics, EstimateRecord,
    RemainderReport, STABILITY_FACTOR,
};
use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::Instant;

const L: f64 = 0.5;
const GAMMA: f64 = 0.05;
const EPS_LIST: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

fn report(n: u32, name: &str, pass: bool, detail: String) {
    println!("ACCEPTANCE criterion {n} ({name}): {} | {detail}", if pass { "PASS" } else { "FAIL" });
}

fn grid(n: usize) -> PhysicalGrid {
    PhysicalGrid::new(L, n, n).unwrap()
}

fn bump() -> ShearProfile {
    ShearProfile::couette_plus_bump(0.1, 5)
}

fn cfg(eps: f64) -> ExpansionConfig {
    ExpansionConfig::new(eps, GAMMA, L).unwrap()
}

fn expansion(p: &ShearProfile, n: usize, eps: f64) -> LayerSet {
    solve_expansion(p, &grid(n), &cfg(eps), &ExpansionOptions::default()).unwrap()
}

#[test]
fn criterion_1_couette_exactness() {
    let t = Instant::now();
    let p = ShearProfile::couette();
    let n = 128;
    let mut layers = 0.0_f64;
    let mut forcing = 0.0_f64;
    for &eps in &EPS_LIST {
        let set = expansion(&p, n, eps);
        let c = assemble_composite(&set).unwrap();
        for f in [&set.euler1.u, &set.euler1.v, &set.euler2.u, &set.euler2.v, &set.aux_pressure, &set.f2] {
            layers = layers.max(f.max_abs());
        }
        for f in [set.prandtl1.u().unwrap(), set.prandtl1.v().unwrap(), set.prandtl2.u().unwrap(), set.prandtl2.v().unwrap()] {
            layers = layers.max(f.max_abs());
        }
        layers = layers.max((&c.u - &Field2D::from_fn(grid(n), |_, y| y)).max_abs()).max(c.v.max_abs());
        let fd = forcing_for(&set).unwrap();
        for f in [&fd.f_u, &fd.f_v, &fd.t1, &fd.t2] {
            forcing = forcing.max(f.max_abs());
        }
    }
    let study = rate_study(&p, &grid(n), &cfg(EPS_LIST[0]), &EPS_LIST, &ExpansionOptions::default(), &Default::default()).unwrap();
    let ns = study.entries.iter().map(|e| e.sup_err_u.max(e.sup_err_v)).fold(0.0, f64::max);
    let steps = study.entries.iter().map(|e| e.newton_steps).max().unwrap();
    let mut rem = 0.0_f64;
    for r in &study.runs {
        let rep = remainder_diagnostics(&r.solution.u, &r.solution.v, &r.composite, &forcing_for(&r.layers).unwrap(), &r.cfg).unwrap();
        rem = rem.max(rep.u.max_abs()).max(rep.v.max_abs()).max(rep.r1.abs()).max(rep.r2.abs());
    }
    let secs = t.elapsed().as_secs_f64();
    let pass = layers <= 1e-10 && forcing <= 1e-10 && rem <= 1e-10 && ns <= 1e-10 && steps <= 2 && secs < 30.0;
    report(
        1,
        "Couette exactness",
        pass,
        format!("layers {layers:.1e}, forcing {forcing:.1e}, remainder {rem:.1e}, NS {ns:.1e} in <= {steps} Newton steps, {secs:.1} s (all <= 1e-10, < 30 s)"),
    );
    assert!(pass);
}

/// v* = s sin(pi x/L) sin(pi y/2) yt^2 with the matching right-hand side.
fn elliptic_error(n: usize) -> f64 {
    let p = bump();
    let g = grid(n);
    let vs = |x: f64, y: f64| {
        let t = y * (2.0 - y);
        (PI * x / L).sin() * (PI * y / 2.0).sin() * t * t
    };
    let rhs = Field2D::from_fn(g, |x, y| {
        let t = y * (2.0 - y);
        let dt = 2.0 - 2.0 * y;
        let k = PI / 2.0;
        let (s, c) = ((k * y).sin(), (k * y).cos());
        let h = s * t * t;
        let hyy = -k * k * s * t * t + 4.0 * k * c * t * dt + s * (2.0 * dt * dt - 4.0 * t);
        let sx = (PI * x / L).sin();
        let lap = -(PI / L).powi(2) * sx * h + sx * hyy;
        -lap + p.q2(y).unwrap() * vs(x, y)
    });
    let e = solve_first_euler_with_rhs(&p, &g, &rhs).unwrap();
    (&e.v - &Field2D::from_fn(g, vs)).max_abs()
}

#[test]
fn criterion_2_elliptic_order() {
    let t = Instant::now();
    let e: Vec<f64> = [64, 128, 256].iter().map(|&n| elliptic_error(n)).collect();
    let orders = [(e[0] / e[1]).log2(), (e[1] / e[2]).log2()];
    let secs = t.elapsed().as_secs_f64();
    let pass = orders.iter().all(|o| (o - 2.0).abs() <= 0.2) && secs < 60.0;
    report(
        2,
        "elliptic solver order",
        pass,
        format!("errors {:.3e} {:.3e} {:.3e}, orders {:.3} {:.3} (2.0 +- 0.2), {secs:.1} s (< 60 s)", e[0], e[1], e[2], orders[0], orders[1]),
    );
    assert!(pass);
}

/// Max error at x = L against g0 erfc(Y sqrt(c/(4x))) for frozen coefficient c.
fn erfc_error(nx: usize, ny: usize) -> f64 {
    let (c, g0, ymax, len) = (2.0, 0.7, 20.0, 1.0);
    let g = BoundaryLayerGrid::new(len, nx, ymax, ny, Orientation::Bottom).unwrap();
    let mut w = vec![g0; nx + 1];
    w[0] = 0.0;
    let l = solve_first_prandtl(&ShearProfile::couette(), &g, &w, 0.01, CoefficientMode::Constant(c)).unwrap();
    (0..=ny)
        .map(|k| (l.u0.at(nx, k) - g0 * statrs::function::erf::erfc(g.big_y(k) * (c / (4.0 * len)).sqrt())).abs())
        .fold(0.0, f64::max)
}

#[test]
fn criterion_3_prandtl_erfc() {
    let t = Instant::now();
    let (a, b) = (erfc_error(50, 1600), erfc_error(100, 1600));
    let order = (a / b).log2();
    let secs = t.elapsed().as_secs_f64();
    let pass = order >= 0.9 && secs < 30.0;
    report(3, "Prandtl vs erfc", pass, format!("errors {a:.3e} -> {b:.3e} halving dx, order {order:.3} (>= 0.9), {secs:.1} s (< 30 s)"));
    assert!(pass);
}

#[test]
fn criterion_4_residual_identity() {
    let p = bump();
    let eps = 1e-2;
    let mut du = Vec::new();
    let mut dv = Vec::new();
    for n in [128, 256] {
        let set = expansion(&p, n, eps);
        let c = assemble_composite(&set).unwrap();
        let f = forcing_for(&set).unwrap();
        let (ru, rv) = momentum_residual(&c.u, &c.v, &c.p, eps).unwrap();
        du.push((&ru - &f.f_u).interior_max_abs());
        dv.push((&rv - &f.f_v).interior_max_abs());
    }
    let (su, sv) = (du[0] / du[1], dv[0] / dv[1]);
    let pass = su >= 3.0 && sv >= 3.0;
    report(
        4,
        "residual identity",
        pass,
        format!("u discrepancy {:.3e} -> {:.3e} (x{su:.2}), v {:.3e} -> {:.3e} (x{sv:.2}), need shrink >= 3", du[0], du[1], dv[0], dv[1]),
    );
    assert!(pass);
}

#[test]
fn criterion_5_profile_and_t_estimates() {
    let p = bump();
    let c0v = c0(&p, 3).unwrap();
    let mut recs: Vec<EstimateRecord> = Vec::new();
    for n in [128, 256] {
        for &eps in &EPS_LIST {
            let set = expansion(&p, n, eps);
            let c = assemble_composite(&set).unwrap();
            recs.extend(check_profile_estimates(&c, &p, &cfg(eps)).unwrap());
            recs.extend(check_t_estimates(&forcing_for(&set).unwrap(), c0v, &cfg(eps)).unwrap());
        }
    }
    let ratios = |name: &str, f: &dyn Fn(&EstimateRecord) -> bool| -> Vec<f64> {
        recs.iter().filter(|r| r.name == name && f(r)).map(|r| r.ratio).collect()
    };
    let mut names: Vec<String> = recs.iter().filter(|r| r.name.starts_with("profile")).map(|r| r.name.clone()).collect();
    names.sort();
    names.dedup();
    let mut worst_grid = 1.0_f64;
    let mut worst_eps = 1.0_f64;
    for name in &names {
        for &eps in &EPS_LIST {
            worst_grid = worst_grid.max(drift(&ratios(name, &|r| r.eps == eps)));
        }
        worst_eps = worst_eps.max(drift(&ratios(name, &|r| r.nx == 256)));
    }
    let t2 = "T: ||T2/yt||_2 / c0";
    let t2_grid = EPS_LIST.iter().map(|&e| drift(&ratios(t2, &|r| r.eps == e))).fold(1.0, f64::max);
    let walls: Vec<&EstimateRecord> = recs.iter().filter(|r| r.name.contains("on the walls")).collect();
    let walls_ok = walls.iter().all(|r| r.pass);
    let wall_worst = walls.iter().map(|r| r.lhs / r.rhs).fold(0.0, f64::max);
    let pass = worst_grid <= STABILITY_FACTOR && worst_eps <= STABILITY_FACTOR && t2_grid <= STABILITY_FACTOR && walls_ok;
    report(
        5,
        "profile and T estimates",
        pass,
        format!(
            "profile constants: grid drift {worst_grid:.2}, eps drift {worst_eps:.2}; T2/yt grid drift {t2_grid:.2}; T2 wall/tol {wall_worst:.2e} (drifts <= 2, wall/tol <= 1)"
        ),
    );
    assert!(pass);
}

struct Studies {
    fine: RateStudy,
    coarse: RateStudy,
    fine_secs: f64,
}

fn studies() -> &'static Studies {
    static S: OnceLock<Studies> = OnceLock::new();
    S.get_or_init(|| {
        let run = |n: usize| rate_study(&bump(), &grid(n), &cfg(EPS_LIST[0]), &EPS_LIST, &ExpansionOptions::default(), &Default::default()).unwrap();
        let t = Instant::now();
        let fine = run(192);
        let fine_secs = t.elapsed().as_secs_f64();
        Studies { fine, coarse: run(96), fine_secs }
    })
}

#[test]
fn criterion_6_epsilon_rate() {
    let s = studies();
    let pass = s.fine.slope >= 0.9 && s.fine_secs < 600.0;
    let errs: Vec<String> = s.fine.entries.iter().map(|e| format!("{:.3e}", e.sup_err_u + e.sup_err_v)).collect();
    report(6, "rate in epsilon", pass, format!("errors [{}], slope {:.4} (>= 0.9), {:.1} s at 192x192 (< 600 s)", errs.join(", "), s.fine.slope, s.fine_secs));
    assert!(pass);
}

#[test]
fn criterion_7_alpha_linearity() {
    let eps = 5e-3;
    let full = studies().fine.entries.iter().find(|e| e.eps == eps).unwrap();
    let half = rate_study(
        &ShearProfile::couette_plus_bump(0.05, 5),
        &grid(192),
        &cfg(eps),
        &[eps],
        &ExpansionOptions::default(),
        &Default::default(),
    )
    .unwrap();
    let h = &half.entries[0];
    let ratio = (h.sup_err_u + h.sup_err_v) / (full.sup_err_u + full.sup_err_v);
    let pass = (0.4..=0.6).contains(&ratio);
    report(7, "linearity in alpha", pass, format!("sup-error ratio alpha 0.05 / 0.1 = {ratio:.4} (in [0.4, 0.6])"));
    assert!(pass);
}

fn reports(s: &RateStudy) -> Vec<RemainderReport> {
    s.runs
        .iter()
        .map(|r| remainder_diagnostics(&r.solution.u, &r.solution.v, &r.composite, &forcing_for(&r.layers).unwrap(), &r.cfg).unwrap())
        .collect()
}

#[test]
fn criterion_8_remainder_diagnostics() {
    let s = studies();
    let (fine, coarse) = (reports(&s.fine), reports(&s.coarse));
    let finite = fine.iter().chain(&coarse).all(|r| [r.r1, r.r2, r.fg_l2, r.norms.x, r.inequality.ratio].iter().all(|v| v.is_finite()));
    let mut drifts = [1.0_f64; 3];
    for (a, b) in fine.iter().zip(&coarse) {
        for (k, (x, y)) in [(a.r1, b.r1), (a.r2, b.r2), (a.inequality.ratio, b.inequality.ratio)].into_iter().enumerate() {
            drifts[k] = drifts[k].max(drift(&[x.abs(), y.abs()]));
        }
    }
    let mut rescale = 0.0_f64;
    for r in &s.fine.runs {
        let (e, g) = (r.cfg.eps, r.cfg.gamma);
        for (ns, us) in [(&r.solution.u, &r.composite.u), (&r.solution.v, &r.composite.v)] {
            let a = extract_remainder(ns, us, e, g).scale(e.powf(g));
            let b = extract_remainder(ns, us, e, 2.0 * g).scale(e.powf(2.0 * g));
            rescale = rescale.max((&a - &b).max_abs() / a.max_abs());
        }
    }
    let pass = finite && drifts.iter().all(|d| *d <= STABILITY_FACTOR) && rescale <= 1e-10;
    report(
        8,
        "remainder diagnostics",
        pass,
        format!(
            "finite {finite}; 96 vs 192 drift R1 {:.2}, R2 {:.2}, X-inequality constant {:.2} (<= 2); gamma rescaling {rescale:.1e} (<= 1e-10)",
            drifts[0], drifts[1], drifts[2]
        ),
    );
    assert!(pass);
}
