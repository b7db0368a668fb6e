use super::config::RunConfig;
use crate::composite::{assemble_composite, forcing_for, solve_expansion, CompositeFlow, ForcingDecomposition, LayerSet};
use crate::error::{Error, Result};
use crate::ns::{rate_study, RateStudy};
use crate::numerics::{integrate, Orientation, PhysicalGrid, Region};
use crate::profile::{c0, validate};
use crate::verify::{
    check_profile_estimates, check_t_estimates, drift, extract_remainder, records_csv, remainder_diagnostics,
    EstimateRecord, RemainderReport, STABILITY_FACTOR,
};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Ok,
    Failed,
    Skipped,
}

#[derive(Clone, Debug, Serialize)]
pub struct StageRecord {
    pub name: String,
    pub status: StageStatus,
    pub seconds: f64,
    pub message: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Gate {
    pub name: String,
    pub value: f64,
    pub limit: String,
    pub pass: bool,
    /// Report-only gates never change the exit code.
    pub enforced: bool,
}

#[derive(Clone, Debug, Serialize, serde::Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub config: RunConfig,
    pub stages: Vec<StageRecord>,
    pub gates: Vec<Gate>,
    pub files: Vec<FileEntry>,
    pub exit_code: i32,
}

struct Ctx {
    out: PathBuf,
    stages: Vec<StageRecord>,
    gates: Vec<Gate>,
    halted: bool,
    errored: bool,
}

impl Ctx {
    fn write(&self, name: &str, content: &str) -> Result<()> {
        std::fs::write(self.out.join(name), content)?;
        Ok(())
    }

    fn gate(&mut self, name: &str, value: f64, limit: &str, pass: bool, enforced: bool) {
        if !pass {
            log::warn!("gate {name} failed: {value:e} vs {limit}");
        }
        self.gates.push(Gate { name: name.into(), value, limit: limit.into(), pass, enforced });
    }

    fn skip(&mut self, name: &str, why: &str) {
        self.stages.push(StageRecord { name: name.into(), status: StageStatus::Skipped, seconds: 0.0, message: Some(why.into()) });
    }

    /// Runs `f` unless an earlier stage halted the run.
    fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Ctx) -> Result<T>) -> Option<T> {
        if self.halted {
            self.skip(name, "an earlier stage failed");
            return None;
        }
        log::info!("stage {name}");
        let t = Instant::now();
        let r = f(self);
        let seconds = t.elapsed().as_secs_f64();
        match r {
            Ok(v) => {
                self.stages.push(StageRecord { name: name.into(), status: StageStatus::Ok, seconds, message: None });
                Some(v)
            }
            Err(e) => {
                log::error!("stage {name} failed: {e}");
                self.stages.push(StageRecord { name: name.into(), status: StageStatus::Failed, seconds, message: Some(e.to_string()) });
                self.halted = true;
                self.errored = true;
                None
            }
        }
    }
}

pub fn eps_tag(eps: f64) -> String {
    format!("{eps:e}")
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Every regular file of `dir` except the manifest, sorted by name.
pub fn inventory(dir: &Path) -> Result<Vec<FileEntry>> {
    let mut names: Vec<String> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().map(|t| t.is_file()).unwrap_or(false))
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n != MANIFEST)
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|n| {
            let bytes = std::fs::read(dir.join(&n))?;
            Ok(FileEntry { sha256: sha256_hex(&bytes), bytes: bytes.len() as u64, path: n })
        })
        .collect()
}

fn layer_profiles_csv(set: &LayerSet) -> Result<String> {
    let b1 = &set.prandtl1.bottom;
    let b2 = &set.prandtl2.bottom;
    if b1.grid.n_y != b2.grid.n_y || b1.orientation != Orientation::Bottom {
        return Err(Error::GridMismatch("tier-1 and tier-2 layer grids differ".into()));
    }
    let i = b1.grid.nx / 2;
    let mut s = format!("# x0: {:e}\nY,u1p,v1p,u2p,v2p\n", b1.grid.x(i));
    for k in 0..=b1.grid.n_y {
        let _ = writeln!(
            s,
            "{:e},{:e},{:e},{:e},{:e}",
            b1.grid.big_y(k),
            b1.u0.at(i, k),
            b1.v0.at(i, k),
            b2.u0.at(i, k),
            b2.v0.at(i, k)
        );
    }
    Ok(s)
}

fn ledger_csv(f: &ForcingDecomposition) -> Result<String> {
    let mut s = String::from("name,group,component,power,max_abs,l2\n");
    for t in &f.ledger.terms {
        let l2 = integrate(&t.field.map(|v| v * v), Region::Full)?.sqrt();
        let _ = writeln!(
            s,
            "{},{},{:?},{},{:e},{:e}",
            t.spec.name.replace(',', ";"),
            t.spec.group.name(),
            t.spec.component,
            t.spec.power,
            t.field.max_abs(),
            l2
        );
    }
    Ok(s)
}

fn remainder_csv(reports: &[(PhysicalGrid, RemainderReport)]) -> String {
    let mut s = String::from("epsilon,nx,ny,r1,r2,fg_l2,e_norm,p_norm,sup_norm,x_norm,inequality_constant\n");
    for (g, r) in reports {
        let n = &r.norms;
        let _ = writeln!(
            s,
            "{:e},{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.eps, g.nx, g.ny, r.r1, r.r2, r.fg_l2, n.e, n.p, n.sup, n.x, r.inequality.ratio
        );
    }
    s
}

struct Expansions {
    sets: Vec<LayerSet>,
    composites: Vec<CompositeFlow>,
}

fn expand(cfg: &RunConfig, grid: &PhysicalGrid) -> Result<Expansions> {
    let profile = cfg.profile()?;
    let opts = cfg.expansion_options();
    let sets: Vec<LayerSet> = cfg
        .expansion
        .eps
        .par_iter()
        .map(|&e| solve_expansion(&profile, grid, &cfg.expansion(e)?, &opts))
        .collect::<Result<_>>()?;
    let composites = sets.iter().map(assemble_composite).collect::<Result<_>>()?;
    Ok(Expansions { sets, composites })
}

fn estimates_for(cfg: &RunConfig, ex: &Expansions, forcing: &[ForcingDecomposition], c0v: f64) -> Result<Vec<EstimateRecord>> {
    let profile = cfg.profile()?;
    let mut out = Vec::new();
    for ((set, c), f) in ex.sets.iter().zip(&ex.composites).zip(forcing) {
        let e = cfg.expansion(set.eps)?;
        out.extend(check_profile_estimates(c, &profile, &e)?);
        out.extend(check_t_estimates(f, c0v, &e)?);
    }
    Ok(out)
}

fn is_wall_record(r: &EstimateRecord) -> bool {
    r.name.contains("on the walls")
}

/// Largest drift of the measured constants of equal name, grouping by `key`.
fn max_drift(records: &[&EstimateRecord], key: impl Fn(&EstimateRecord) -> String) -> f64 {
    let mut groups: std::collections::BTreeMap<String, Vec<f64>> = Default::default();
    for r in records.iter().filter(|r| !is_wall_record(r)) {
        groups.entry(key(r)).or_default().push(r.ratio);
    }
    groups.values().map(|v| if v.iter().all(|x| x.is_finite()) { drift(v) } else { f64::INFINITY }).fold(1.0, f64::max)
}

fn remainder_reports(study: &RateStudy) -> Result<Vec<(PhysicalGrid, RemainderReport)>> {
    study
        .runs
        .iter()
        .map(|r| {
            let f = forcing_for(&r.layers)?;
            let rep = remainder_diagnostics(&r.solution.u, &r.solution.v, &r.composite, &f, &r.cfg)?;
            Ok((r.layers.grid, rep))
        })
        .collect()
}

/// Max relative mismatch of eps^gamma * remainder between gamma and gamma/2.
fn gamma_rescaling_error(study: &RateStudy) -> f64 {
    let mut worst = 0.0_f64;
    for r in &study.runs {
        let (e, g) = (r.cfg.eps, r.cfg.gamma);
        for (ns, s) in [(&r.solution.u, &r.composite.u), (&r.solution.v, &r.composite.v)] {
            let a = extract_remainder(ns, s, e, g).scale(e.powf(g));
            let b = extract_remainder(ns, s, e, g / 2.0).scale(e.powf(g / 2.0));
            let scale = a.max_abs().max(f64::MIN_POSITIVE);
            worst = worst.max((&a - &b).max_abs() / scale);
        }
    }
    worst
}

pub struct RunOutcome {
    pub manifest: RunManifest,
    pub exit_code: i32,
}

/// Execute every enabled stage, writing reports into `out`. Errors are only
/// returned when the output directory itself is unusable.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<RunOutcome> {
    std::fs::create_dir_all(out)?;
    let mut ctx = Ctx { out: out.to_path_buf(), stages: Vec::new(), gates: Vec::new(), halted: false, errored: false };
    let v = cfg.verification.clone();

    let c0v = ctx.stage("validate", |ctx| {
        let profile = cfg.profile()?;
        let rec = validate(&profile);
        let mut s = String::from("check,residual,tolerance,pass\n");
        for c in &rec.checks {
            let _ = writeln!(s, "\"{}\",{:e},{:e},{}", c.name, c.residual, c.tolerance, c.pass);
        }
        ctx.gate("profile.hypotheses", rec.checks.iter().filter(|c| !c.pass).count() as f64, "0 failed checks", rec.pass, true);
        if !rec.pass {
            ctx.write("profile.csv", &s)?;
            ctx.halted = true;
            return Ok(None);
        }
        let c = c0(&profile, 3)?;
        let _ = writeln!(s, "\"c0\",{c:e},0e0,true");
        ctx.write("profile.csv", &s)?;
        Ok(Some(c))
    });
    let c0v = c0v.flatten();

    let fine = ctx.stage("layers", |ctx| {
        let ex = expand(cfg, &cfg.grid()?)?;
        for (set, c) in ex.sets.iter().zip(&ex.composites) {
            let tag = eps_tag(set.eps);
            let hdr = |f: &str| vec![format!("field: {f}, epsilon: {tag}")];
            ctx.write(&format!("layers_{tag}.csv"), &layer_profiles_csv(set)?)?;
            ctx.write(&format!("composite_u_{tag}.csv"), &c.u.to_csv_string(&hdr("u_s")))?;
            ctx.write(&format!("composite_v_{tag}.csv"), &c.v.to_csv_string(&hdr("v_s")))?;
        }
        Ok(ex)
    });

    let need_forcing = v.forcing || v.estimates;
    let forcing = if need_forcing {
        ctx.stage("forcing", |ctx| {
            let ex = fine.as_ref().expect("layers ran");
            let f: Vec<ForcingDecomposition> = ex.sets.par_iter().map(forcing_for).collect::<Result<_>>()?;
            for (set, fd) in ex.sets.iter().zip(&f) {
                let tag = eps_tag(set.eps);
                ctx.write(&format!("t1_{tag}.csv"), &fd.t1.to_csv_string(&[format!("field: T1, epsilon: {tag}")]))?;
                ctx.write(&format!("t2_{tag}.csv"), &fd.t2.to_csv_string(&[format!("field: T2, epsilon: {tag}")]))?;
                ctx.write(&format!("ledger_{tag}.csv"), &ledger_csv(fd)?)?;
            }
            Ok(f)
        })
    } else {
        ctx.skip("forcing", "disabled");
        None
    };

    if v.estimates {
        ctx.stage("estimates", |ctx| {
            let c0v = c0v.expect("validate ran");
            let ex = fine.as_ref().expect("layers ran");
            let mut records = estimates_for(cfg, ex, forcing.as_ref().expect("forcing ran"), c0v)?;
            let fine_nx = cfg.grid.nx;
            if v.grid_check {
                let coarse = expand(cfg, &cfg.coarse_grid()?)?;
                let f: Vec<ForcingDecomposition> = coarse.sets.par_iter().map(forcing_for).collect::<Result<_>>()?;
                records.extend(estimates_for(cfg, &coarse, &f, c0v)?);
                let all: Vec<&EstimateRecord> = records.iter().collect();
                let d = max_drift(&all, |r| format!("{}|{:e}", r.name, r.eps));
                ctx.gate("estimates.grid_stable", d, &format!("drift <= {STABILITY_FACTOR}"), d <= STABILITY_FACTOR, v.stability_gate);
            }
            let on_fine: Vec<&EstimateRecord> = records.iter().filter(|r| r.nx == fine_nx).collect();
            let d = max_drift(&on_fine, |r| r.name.clone());
            ctx.gate("estimates.eps_stable", d, &format!("drift <= {STABILITY_FACTOR}"), d <= STABILITY_FACTOR, v.stability_gate);
            let walls: Vec<&&EstimateRecord> = on_fine.iter().filter(|r| is_wall_record(r)).collect();
            let worst = walls.iter().map(|r| r.lhs / r.rhs.max(f64::MIN_POSITIVE)).fold(0.0, f64::max);
            ctx.gate("t2.wall", worst, "max|T2| on walls <= 1e-6 ||T2||_inf + 10 h^2", walls.iter().all(|r| r.pass), true);
            ctx.write("estimates.csv", &records_csv(&records))?;
            Ok(())
        });
    } else {
        ctx.skip("estimates", "disabled");
    }

    let studies = if v.ns {
        ctx.stage("ns", |ctx| {
            let profile = cfg.profile()?;
            let template = cfg.expansion(cfg.expansion.eps[0])?;
            let eps = cfg.ns_eps();
            let study = rate_study(&profile, &cfg.grid()?, &template, &eps, &cfg.expansion_options(), &cfg.ns_options())?;
            ctx.write("rate_study.csv", &study.csv())?;
            let worst = study.entries.iter().map(|e| e.sup_err_u + e.sup_err_v).fold(0.0, f64::max);
            if worst <= 1e-10 {
                ctx.gate("rate.exact", worst, "sup error <= 1e-10", true, true);
            } else if study.entries.len() >= 2 {
                let pass = study.slope >= v.slope_min;
                ctx.gate("rate.slope", study.slope, &format!(">= {}", v.slope_min), pass, true);
            }
            let coarse = if v.remainder && v.grid_check {
                Some(rate_study(&profile, &cfg.coarse_grid()?, &template, &eps, &cfg.expansion_options(), &cfg.ns_options())?)
            } else {
                None
            };
            Ok((study, coarse))
        })
    } else {
        ctx.skip("ns", "disabled");
        None
    };

    if v.remainder && v.ns {
        ctx.stage("remainder", |ctx| {
            let (study, coarse) = studies.as_ref().expect("ns ran");
            let mut reports = remainder_reports(study)?;
            let finite = reports.iter().all(|(_, r)| [r.r1, r.r2, r.fg_l2, r.norms.x, r.inequality.ratio].iter().all(|x| x.is_finite()));
            ctx.gate("remainder.finite", f64::from(u8::from(finite)), "all finite", finite, true);
            let g = gamma_rescaling_error(study);
            ctx.gate("remainder.gamma_rescaling", g, "<= 1e-10", g <= 1e-10, true);
            if let Some(c) = coarse {
                let cr = remainder_reports(c)?;
                let mut worst = 1.0_f64;
                for ((_, a), (_, b)) in reports.iter().zip(&cr) {
                    for (x, y) in [(a.r1, b.r1), (a.r2, b.r2), (a.inequality.ratio, b.inequality.ratio)] {
                        worst = worst.max(drift(&[x.abs(), y.abs()]));
                    }
                }
                ctx.gate("remainder.grid_stable", worst, &format!("drift <= {STABILITY_FACTOR}"), worst <= STABILITY_FACTOR, v.stability_gate);
                reports.extend(cr);
            }
            ctx.write("remainder.csv", &remainder_csv(&reports))?;
            Ok(())
        });
    } else {
        ctx.skip("remainder", "disabled");
    }

    let gates_pass = ctx.gates.iter().all(|g| g.pass || !g.enforced);
    let exit_code = if ctx.errored {
        2
    } else if gates_pass {
        0
    } else {
        1
    };
    let report = serde_json::json!({ "c0": c0v, "gates": ctx.gates, "exit_code": exit_code });
    ctx.write("report.json", &serde_json::to_string_pretty(&report).map_err(|e| Error::Parse(e.to_string()))?)?;
    let manifest = RunManifest { config: cfg.clone(), stages: ctx.stages, gates: ctx.gates, files: inventory(out)?, exit_code };
    write_manifest(out, &manifest)?;
    Ok(RunOutcome { manifest, exit_code })
}

pub fn write_manifest(out: &Path, m: &RunManifest) -> Result<()> {
    let text = serde_json::to_string_pretty(m).map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(out.join(MANIFEST), text)?;
    Ok(())
}

/// Rewrite the file inventory of an existing manifest after new files were added.
pub fn refresh_inventory(out: &Path) -> Result<()> {
    let path = out.join(MANIFEST);
    let text = std::fs::read_to_string(&path)?;
    let mut m: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    m["files"] = serde_json::to_value(inventory(out)?).map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(path, serde_json::to_string_pretty(&m).map_err(|e| Error::Parse(e.to_string()))?)?;
    Ok(())
}
