//! Declarative run configuration: one TOML file, unknown keys rejected,
//! every knob carrying the documented default. Command-line flags override
//! file values.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Deserialize;

fn default_delta_min() -> f64 {
    1e-8
}
fn default_delta0() -> f64 {
    0.1
}
fn default_tol() -> f64 {
    1e-10
}
fn default_grid_n() -> usize {
    4096
}
fn default_delta_cut() -> f64 {
    1e-4
}
fn default_dt() -> f64 {
    1e-3
}
fn default_t_final() -> f64 {
    10.0
}
fn default_jrange() -> i64 {
    16
}
fn default_interval() -> [f64; 2] {
    [0.0, 1.0]
}
fn default_c() -> f64 {
    1.0
}
fn default_margin() -> f64 {
    0.05
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub problem: ProblemConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub field: FieldConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub certify: CertifyConfig,
    #[serde(default)]
    pub evolve: EvolveConfig,
}

/// 1D problem coefficients: `v_j = lambda_j / delta` power families plus the
/// elliptic line family parameter.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default)]
    pub lambda0: f64,
    #[serde(default)]
    pub lambda1: f64,
    #[serde(default)]
    pub lambda3: f64,
    /// Elliptic family exponent for `classify --chernoff`.
    #[serde(default)]
    pub alpha: f64,
    #[serde(default = "default_interval")]
    pub interval: [f64; 2],
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig { lambda0: 0.0, lambda1: 0.0, lambda3: 0.0, alpha: 0.0, interval: default_interval() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    #[serde(default = "default_delta_min")]
    pub delta_min: f64,
    #[serde(default = "default_delta0")]
    pub delta0: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub force_numeric: bool,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        NumericsConfig {
            delta_min: default_delta_min(),
            delta0: default_delta0(),
            tol: default_tol(),
            force_numeric: false,
            margin: default_margin(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    /// "pcm" or "constant".
    #[serde(default)]
    pub kind: Option<String>,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub b0: f64,
    #[serde(default = "default_jrange")]
    pub jrange: i64,
    /// Cylinder mass term.
    #[serde(default)]
    pub xi: f64,
    #[serde(default)]
    pub lambda_s: f64,
    #[serde(default)]
    pub lambda_e: f64,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            kind: None,
            alpha: 0.0,
            b0: 0.0,
            jrange: default_jrange(),
            xi: 0.0,
            lambda_s: 0.0,
            lambda_e: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub axes: Vec<AxisConfig>,
    /// "closed" (default) or "numeric".
    #[serde(default)]
    pub mode: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub param: String,
    pub from: f64,
    pub to: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    /// "ts" | "tsh" | "perturbation" | "td1s".
    #[serde(default)]
    pub theorem: Option<String>,
    /// "interval" | "disk" | "ball".
    #[serde(default)]
    pub domain: Option<String>,
    #[serde(default)]
    pub lambda: f64,
    /// Power-law exponent of the scalar coupling.
    #[serde(default)]
    pub alpha: f64,
    /// Use the convex-domain Hardy function 1/(4 delta^2).
    #[serde(default)]
    pub hardy: bool,
    /// Electric perturbation coupling for the perturbation certificate.
    #[serde(default)]
    pub lambda_e: f64,
    #[serde(default = "default_c")]
    pub c: f64,
    /// Oscillation parameter and convexity for the threshold verdict.
    #[serde(default)]
    pub mu: f64,
    #[serde(default)]
    pub convex: bool,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            theorem: None,
            domain: None,
            lambda: 0.0,
            alpha: 1.0,
            hardy: false,
            lambda_e: 0.0,
            c: default_c(),
            mu: 0.0,
            convex: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    #[serde(default = "default_grid_n")]
    pub n: usize,
    #[serde(default = "default_delta_cut")]
    pub delta_cut: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    /// "truncated" (default) or "mass-wall".
    #[serde(default)]
    pub boundary: Option<String>,
    /// Run the two-boundary extension probe as well.
    #[serde(default)]
    pub probe: bool,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            n: default_grid_n(),
            delta_cut: default_delta_cut(),
            dt: default_dt(),
            t_final: default_t_final(),
            boundary: None,
            probe: false,
        }
    }
}

pub fn load(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let cfg: RunConfig = toml::from_str(&text)
        .with_context(|| format!("config parse error in {}", path.display()))?;
    Ok(cfg)
}
