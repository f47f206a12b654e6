//! Scenario configuration: a versioned TOML file describing one design
//! problem or a parameter grid, plus the built-in `paper-table1` preset.

use anyhow::{bail, Context};
use growthdesign::{CovKind, CurveFamily};
use serde::{Deserialize, Serialize};

pub const CONFIG_VERSION: u32 = 1;

/// Default certification tolerance on the criterion-scale gap.
pub const DEFAULT_CHECK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Solve,
    Certify,
    Efficiency,
    Sweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    /// Number of testing occasions J.
    pub occasions: usize,
    /// Per-subject item budget I.
    pub items: f64,
    pub family: CurveFamily,
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceConfig {
    pub kind: CovKind,
    pub sigma_gamma_sq: f64,
    pub rho: f64,
    #[serde(default = "default_sigma_eps_sq")]
    pub sigma_eps_sq: f64,
}

fn default_sigma_eps_sq() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub gap_tol: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { max_iters: 2000, gap_tol: 1e-9, restarts: 8, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    pub weights: Vec<f64>,
}

/// Sweep axes; omitted axes keep the base value from `[problem]` /
/// `[covariance]`. A beta axis only applies to families that have that
/// parameter.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub families: Option<Vec<CurveFamily>>,
    pub kinds: Option<Vec<CovKind>>,
    pub beta0: Option<Vec<f64>>,
    pub beta1: Option<Vec<f64>>,
    pub beta2: Option<Vec<f64>>,
    pub beta3: Option<Vec<f64>>,
    pub sigma_gamma_sq: Option<Vec<f64>>,
    pub rho: Option<Vec<f64>>,
}

impl SweepConfig {
    pub fn has_axes(&self) -> bool {
        self.families.as_ref().is_some_and(|v| !v.is_empty())
            || self.kinds.as_ref().is_some_and(|v| !v.is_empty())
            || self.beta0.as_ref().is_some_and(|v| !v.is_empty())
            || self.beta1.as_ref().is_some_and(|v| !v.is_empty())
            || self.beta2.as_ref().is_some_and(|v| !v.is_empty())
            || self.beta3.as_ref().is_some_and(|v| !v.is_empty())
            || self.sigma_gamma_sq.as_ref().is_some_and(|v| !v.is_empty())
            || self.rho.as_ref().is_some_and(|v| !v.is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub version: u32,
    pub mode: Mode,
    pub problem: ProblemConfig,
    pub covariance: CovarianceConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Certification tolerance for `certify` and recorded certificates.
    #[serde(default = "default_check_tol")]
    pub tol: f64,
    #[serde(default)]
    pub design: Option<DesignConfig>,
    #[serde(default)]
    pub reference: Option<DesignConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

fn default_check_tol() -> f64 {
    DEFAULT_CHECK_TOL
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let config: ScenarioConfig =
            toml::from_str(text).context("configuration does not match the schema")?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.version != CONFIG_VERSION {
            bail!(
                "config version {} is not supported (expected {CONFIG_VERSION})",
                self.version
            );
        }
        if self.problem.occasions == 0 {
            bail!("problem.occasions must be positive");
        }
        if !(self.problem.items > 0.0) {
            bail!("problem.items must be positive");
        }
        if !(self.tol > 0.0) {
            bail!("tol must be positive");
        }
        match self.mode {
            Mode::Certify => {
                if self.design.is_none() {
                    bail!("certify mode needs a [design] table with weights");
                }
            }
            Mode::Efficiency => {
                if self.design.is_none() || self.reference.is_none() {
                    bail!("efficiency mode needs [design] and [reference] tables");
                }
            }
            Mode::Sweep => match &self.sweep {
                None => bail!("sweep mode needs a [sweep] table"),
                Some(s) if !s.has_axes() => bail!("sweep mode needs at least one nonempty axis"),
                _ => {}
            },
            Mode::Solve => {}
        }
        Ok(())
    }
}

/// One expanded grid point of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub index: usize,
    pub family: CurveFamily,
    pub beta: Vec<f64>,
    pub kind: CovKind,
    pub sigma_gamma_sq: f64,
    pub rho: f64,
    pub sigma_eps_sq: f64,
}

fn family_param_count(family: CurveFamily, occasions: usize) -> usize {
    family.fixed_len().unwrap_or(occasions)
}

/// Base parameter vector for a family, taking what applies from the
/// configured beta and padding defaults for the rest.
fn base_beta(family: CurveFamily, configured: &[f64], occasions: usize) -> Vec<f64> {
    let p = family_param_count(family, occasions);
    let mut beta: Vec<f64> = configured.iter().copied().take(p).collect();
    while beta.len() < p {
        beta.push(match (family, beta.len()) {
            // keep saturating families admissible: level 1 above baseline,
            // unit slope, centred location
            (CurveFamily::Exponential | CurveFamily::Logistic, 1) => beta[0] + 1.0,
            (CurveFamily::Exponential | CurveFamily::Logistic, 2) => 1.0,
            _ => 0.0,
        });
    }
    beta
}

/// Expands a scenario into the full list of cells, in deterministic order:
/// family, kind, beta0..beta3, sigma_gamma_sq, rho (slowest to fastest).
pub fn expand_cells(config: &ScenarioConfig) -> anyhow::Result<Vec<Cell>> {
    let empty = SweepConfig::default();
    let sweep = config.sweep.as_ref().unwrap_or(&empty);
    let families = sweep
        .families
        .clone()
        .unwrap_or_else(|| vec![config.problem.family]);
    let kinds = sweep.kinds.clone().unwrap_or_else(|| vec![config.covariance.kind]);
    let sigma_axis = sweep
        .sigma_gamma_sq
        .clone()
        .unwrap_or_else(|| vec![config.covariance.sigma_gamma_sq]);
    let rho_axis = sweep.rho.clone().unwrap_or_else(|| vec![config.covariance.rho]);
    let beta_axes = [&sweep.beta0, &sweep.beta1, &sweep.beta2, &sweep.beta3];

    let mut cells = Vec::new();
    for &family in &families {
        let p = family_param_count(family, config.problem.occasions);
        let base = base_beta(family, &config.problem.beta, config.problem.occasions);
        // per-family beta grid: axes beyond the parameter count do not apply
        let axis_values: Vec<Vec<f64>> = (0..p)
            .map(|k| match beta_axes.get(k) {
                Some(Some(values)) if !values.is_empty() => values.clone(),
                _ => vec![base[k]],
            })
            .collect();
        let mut beta_grid: Vec<Vec<f64>> = vec![base.clone()];
        for (k, values) in axis_values.iter().enumerate() {
            let mut next = Vec::with_capacity(beta_grid.len() * values.len());
            for prefix in &beta_grid {
                for &v in values {
                    let mut b = prefix.clone();
                    b[k] = v;
                    next.push(b);
                }
            }
            beta_grid = next;
        }
        for &kind in &kinds {
            for beta in &beta_grid {
                growthdesign::GrowthCurve64::new(family, beta.clone()).map_err(|e| {
                    anyhow::anyhow!("sweep produced an inadmissible model for {family:?}: {e}")
                })?;
                for &sigma_gamma_sq in &sigma_axis {
                    for &rho in &rho_axis {
                        cells.push(Cell {
                            index: cells.len(),
                            family,
                            beta: beta.clone(),
                            kind,
                            sigma_gamma_sq,
                            rho,
                            sigma_eps_sq: config.covariance.sigma_eps_sq,
                        });
                    }
                }
            }
        }
    }
    if cells.is_empty() {
        bail!("sweep expansion produced no cells");
    }
    Ok(cells)
}

/// The built-in full-grid benchmark sweep: seven occasions, one hundred
/// items, exponential and logistic families under both covariance kinds,
/// with dense correlation and variance-ratio axes.
pub fn paper_table1_preset() -> ScenarioConfig {
    let sigma_gamma_sq: Vec<f64> = (0..=20)
        .map(|k| k as f64 * 0.1)
        .chain([2.5, 5.0, 10.0])
        .collect();
    let rho: Vec<f64> = (0..20).map(|k| k as f64 * 0.05).collect();
    ScenarioConfig {
        version: CONFIG_VERSION,
        mode: Mode::Sweep,
        problem: ProblemConfig {
            occasions: 7,
            items: 100.0,
            family: CurveFamily::Exponential,
            beta: vec![0.0, 1.0, 1.0],
        },
        covariance: CovarianceConfig {
            kind: CovKind::Cs,
            sigma_gamma_sq: 1.0,
            rho: 0.5,
            sigma_eps_sq: 1.0,
        },
        solver: SolverConfig { max_iters: 2000, gap_tol: 1e-8, restarts: 2, seed: 0 },
        tol: 1e-6,
        design: None,
        reference: None,
        sweep: Some(SweepConfig {
            families: Some(vec![CurveFamily::Exponential, CurveFamily::Logistic]),
            kinds: Some(vec![CovKind::Cs, CovKind::Ar1]),
            beta0: Some(vec![0.0]),
            beta1: Some(vec![1.0, 3.0, 5.0, 10.0]),
            beta2: Some(vec![0.5, 1.0, 2.0]),
            beta3: Some(vec![-2.0, -1.0, 0.0, 1.0, 2.0]),
            sigma_gamma_sq: Some(sigma_gamma_sq),
            rho: Some(rho),
        }),
    }
}

pub fn preset_by_name(name: &str) -> anyhow::Result<ScenarioConfig> {
    match name {
        "paper-table1" => Ok(paper_table1_preset()),
        other => bail!("unknown preset '{other}' (available: paper-table1)"),
    }
}
