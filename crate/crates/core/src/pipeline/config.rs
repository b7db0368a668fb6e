use crate::composite::{ExpansionConfig, ExpansionOptions};
use crate::error::{Error, Result};
use crate::ns::NsOptions;
use crate::numerics::PhysicalGrid;
use crate::prandtl::{CoefficientMode, CutoffSpec};
use crate::profile::ShearProfile;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub profile: ProfileBlock,
    pub grid: GridBlock,
    pub expansion: ExpansionBlock,
    #[serde(default)]
    pub verification: VerificationBlock,
    #[serde(default)]
    pub ns: NsBlock,
    pub output: OutputBlock,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileBlock {
    pub name: String,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default = "default_n0")]
    pub n0: usize,
    pub ub: Option<f64>,
}

fn default_n0() -> usize {
    5
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub nx: usize,
    pub ny: usize,
    /// Layer-grid nodes per physical y spacing; fixes nY together with `y_max`.
    #[serde(default = "one")]
    pub layer_refine: usize,
    #[serde(default = "default_y_max")]
    pub y_max: f64,
}

fn one() -> usize {
    1
}

fn default_y_max() -> f64 {
    20.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeFlag {
    Literal,
    Linearized,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpansionBlock {
    pub eps: Vec<f64>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_length")]
    pub length: f64,
    #[serde(default = "default_mode")]
    pub mode: ModeFlag,
    #[serde(default = "default_cutoff")]
    pub cutoff_scale: f64,
}

fn default_gamma() -> f64 {
    0.05
}

fn default_length() -> f64 {
    0.5
}

fn default_mode() -> ModeFlag {
    ModeFlag::Literal
}

fn default_cutoff() -> f64 {
    CutoffSpec::default().scale
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerificationBlock {
    pub forcing: bool,
    pub estimates: bool,
    pub ns: bool,
    pub remainder: bool,
    /// Repeat estimates and remainder diagnostics on the half-resolution grid.
    pub grid_check: bool,
    /// Gate on the drift of measured constants (otherwise they are only reported).
    pub stability_gate: bool,
    pub slope_min: f64,
}

impl Default for VerificationBlock {
    fn default() -> Self {
        Self {
            forcing: true,
            estimates: true,
            ns: true,
            remainder: true,
            grid_check: true,
            stability_gate: true,
            slope_min: 0.9,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NsBlock {
    pub tol: f64,
    pub max_iter: usize,
    /// Defaults to the expansion list.
    pub eps_list: Option<Vec<f64>>,
    pub stabilization: f64,
}

impl Default for NsBlock {
    fn default() -> Self {
        let d = NsOptions::default();
        Self { tol: d.tol, max_iter: d.max_iter, eps_list: None, stabilization: d.stabilization }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: String,
    /// Run the sparse factorizations single-threaded.
    #[serde(default = "yes")]
    pub deterministic: bool,
}

fn yes() -> bool {
    true
}

fn descending(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn check(&self) -> Result<()> {
        let e = &self.expansion.eps;
        if e.is_empty() || !descending(e) {
            return Err(Error::Config("expansion.eps must be nonempty and strictly decreasing".into()));
        }
        for &eps in e {
            ExpansionConfig::new(eps, self.expansion.gamma, self.expansion.length)?;
        }
        if let Some(l) = &self.ns.eps_list {
            if l.is_empty() || !descending(l) {
                return Err(Error::Config("ns.eps_list must be nonempty and strictly decreasing".into()));
            }
        }
        self.grid()?;
        if self.grid.y_max < 20.0 {
            return Err(Error::Config(format!("grid.y_max must be >= 20, got {}", self.grid.y_max)));
        }
        if !(self.expansion.cutoff_scale > 0.0 && self.expansion.cutoff_scale <= 0.5) {
            return Err(Error::Config("expansion.cutoff_scale must lie in (0, 0.5]".into()));
        }
        if !(self.ns.tol > 0.0 && self.ns.stabilization >= 0.0) {
            return Err(Error::Config("ns.tol must be positive and ns.stabilization nonnegative".into()));
        }
        self.profile()?;
        Ok(())
    }

    pub fn profile(&self) -> Result<ShearProfile> {
        let p = &self.profile;
        ShearProfile::from_name(&p.name, p.alpha, p.n0, p.ub)
    }

    pub fn grid(&self) -> Result<PhysicalGrid> {
        PhysicalGrid::new(self.expansion.length, self.grid.nx, self.grid.ny)
    }

    /// Half-resolution grid for the stability checks.
    pub fn coarse_grid(&self) -> Result<PhysicalGrid> {
        PhysicalGrid::new(self.expansion.length, self.grid.nx / 2, self.grid.ny / 2)
    }

    pub fn expansion(&self, eps: f64) -> Result<ExpansionConfig> {
        ExpansionConfig::new(eps, self.expansion.gamma, self.expansion.length)
    }

    pub fn expansion_options(&self) -> ExpansionOptions {
        ExpansionOptions {
            mode: match self.expansion.mode {
                ModeFlag::Literal => CoefficientMode::Literal,
                ModeFlag::Linearized => CoefficientMode::Linearized,
            },
            cutoff: CutoffSpec { scale: self.expansion.cutoff_scale },
            y_max: self.grid.y_max,
            refine: self.grid.layer_refine,
        }
    }

    pub fn ns_options(&self) -> NsOptions {
        NsOptions { tol: self.ns.tol, max_iter: self.ns.max_iter, stabilization: self.ns.stabilization, ..NsOptions::default() }
    }

    pub fn ns_eps(&self) -> Vec<f64> {
        self.ns.eps_list.clone().unwrap_or_else(|| self.expansion.eps.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[profile]
name = "couette"

[grid]
nx = 16
ny = 16

[expansion]
eps = [1e-2, 5e-3]

[output]
dir = "out"
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.expansion.gamma, 0.05);
        assert_eq!(c.ns_eps(), vec![1e-2, 5e-3]);
        assert!(c.verification.ns);
        assert_eq!(c.expansion_options().cutoff.scale, 0.5);
    }

    #[test]
    fn unsorted_eps_is_rejected() {
        let t = MINIMAL.replace("[1e-2, 5e-3]", "[5e-3, 1e-2]");
        assert!(matches!(RunConfig::parse(&t), Err(Error::Config(_))));
    }

    #[test]
    fn parse_errors_carry_the_line() {
        let t = MINIMAL.replace("nx = 16", "nx = sixteen");
        match RunConfig::parse(&t) {
            Err(Error::Parse(m)) => assert!(m.contains("line"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_and_profiles_are_rejected() {
        assert!(RunConfig::parse(&MINIMAL.replace("nx = 16", "nx = 16\nnz = 3")).is_err());
        assert!(RunConfig::parse(&MINIMAL.replace("\"couette\"", "\"cubic\"")).is_err());
    }
}
