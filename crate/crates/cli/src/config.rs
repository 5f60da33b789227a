//! Experiment configuration: a TOML file validated into [`ExperimentConfig`].
//!
//! Every validation failure names the offending key path (`r`,
//! `profit.gamma`, `mc.n_paths`, ...).

use std::path::{Path, PathBuf};

use levy_invest::{ExtremaMethod, LevyModel, PathOptions, ProfitFunction, StoppingRule};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    r: Option<f64>,
    model: Option<RawModel>,
    profit: Option<RawProfit>,
    #[serde(default)]
    mc: RawMc,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default)]
    outputs: RawOutputs,
    #[serde(default)]
    policy: RawPolicy,
    #[serde(default)]
    verify: RawVerify,
    #[serde(default)]
    wh: RawWh,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    family: Option<String>,
    mu: Option<f64>,
    sigma: Option<f64>,
    intensity: Option<f64>,
    jump_mean: Option<f64>,
    jump_sd: Option<f64>,
    p_up: Option<f64>,
    eta_up: Option<f64>,
    eta_down: Option<f64>,
    index: Option<f64>,
    scale: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfit {
    kind: Option<String>,
    alpha: Option<f64>,
    beta: Option<f64>,
    gamma: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMc {
    n_paths: Option<i64>,
    step: Option<f64>,
    t_max: Option<f64>,
    extrema: Option<String>,
    factors: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    u_min: Option<f64>,
    u_max: Option<f64>,
    n: Option<i64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutputs {
    dir: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolicy {
    x: Option<f64>,
    y: Option<f64>,
    scales: Option<Vec<f64>>,
    fixed_times: Option<Vec<f64>>,
    hitting_levels: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVerify {
    y_levels: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWh {
    lambdas: Option<Vec<f64>>,
}

/// Profit specification as written in the config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfitSpec {
    CobbDouglas { alpha: f64, beta: f64 },
    Ces { alpha: f64, gamma: f64 },
    Log { alpha: f64, beta: f64 },
}

impl ProfitSpec {
    pub fn build(&self) -> ProfitFunction<f64> {
        match *self {
            ProfitSpec::CobbDouglas { alpha, beta } => ProfitFunction::cobb_douglas(alpha, beta),
            ProfitSpec::Ces { alpha, gamma } => ProfitFunction::ces(alpha, gamma),
            ProfitSpec::Log { alpha, beta } => ProfitFunction::log(alpha, beta),
        }
        .expect("parameters validated on load")
    }
}

/// Which representation of the extrema laws the boundary solver uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorChoice {
    /// Exact laws when the model has them, sampled triplets otherwise.
    Auto,
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub n_paths: usize,
    pub step: f64,
    pub t_max: f64,
    pub extrema: ExtremaMethod,
    pub factors: FactorChoice,
}

impl McConfig {
    pub fn path_options(&self) -> PathOptions<f64> {
        PathOptions {
            step: self.step,
            extrema: self.extrema,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub u_min: f64,
    pub u_max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyConfig {
    pub x: f64,
    /// Initial capacity; `None` starts on the boundary, `y = b(x)`.
    pub y: Option<f64>,
    pub scales: Vec<f64>,
    pub rules: Vec<StoppingRule<f64>>,
}

/// A fully validated experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model: LevyModel<f64>,
    pub profit: ProfitSpec,
    pub r: f64,
    pub seed: u64,
    pub mc: McConfig,
    pub grid: GridConfig,
    pub output_dir: PathBuf,
    pub policy: PolicyConfig,
    pub y_levels: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// Hex SHA-256 of the config file bytes.
    pub config_hash: String,
}

fn invalid(key: &str, message: impl Into<String>) -> CliError {
    CliError::Validation {
        key: key.to_string(),
        message: message.into(),
    }
}

fn require(v: Option<f64>, key: &str) -> Result<f64, CliError> {
    let v = v.ok_or_else(|| invalid(key, "missing required key"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(key, format!("must be finite, got {v}")))
    }
}

fn positive(v: Option<f64>, key: &str) -> Result<f64, CliError> {
    let v = require(v, key)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(key, format!("must be > 0, got {v}")))
    }
}

fn open_unit(v: Option<f64>, key: &str) -> Result<f64, CliError> {
    let v = require(v, key)?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(invalid(key, format!("must lie in (0, 1), got {v}")))
    }
}

fn reject_extra(present: &[(&str, bool)], family: &str) -> Result<(), CliError> {
    match present.iter().find(|(_, set)| *set) {
        Some((key, _)) => Err(invalid(key, format!("not a parameter of family {family}"))),
        None => Ok(()),
    }
}

fn model_from(raw: RawModel) -> Result<LevyModel<f64>, CliError> {
    let family = raw
        .family
        .as_deref()
        .ok_or_else(|| invalid("model.family", "missing required key"))?;
    let mu = match raw.mu {
        Some(_) => require(raw.mu, "model.mu")?,
        None => 0.0,
    };
    let sigma = match raw.sigma {
        Some(s) if !(s.is_finite() && s >= 0.0) => {
            return Err(invalid("model.sigma", format!("must be finite and >= 0, got {s}")))
        }
        Some(s) => s,
        None => 0.0,
    };
    let merton = [
        ("model.jump_mean", raw.jump_mean.is_some()),
        ("model.jump_sd", raw.jump_sd.is_some()),
    ];
    let kou = [
        ("model.p_up", raw.p_up.is_some()),
        ("model.eta_up", raw.eta_up.is_some()),
        ("model.eta_down", raw.eta_down.is_some()),
    ];
    let stable = [
        ("model.index", raw.index.is_some()),
        ("model.scale", raw.scale.is_some()),
    ];
    let jumps = [("model.intensity", raw.intensity.is_some())];
    let built = match family {
        "brownian_drift" => {
            reject_extra(&[&jumps[..], &merton, &kou, &stable].concat(), family)?;
            if !(sigma > 0.0) {
                return Err(invalid("model.sigma", "brownian_drift needs sigma > 0"));
            }
            LevyModel::brownian(mu, sigma)
        }
        "merton" => {
            reject_extra(&[&kou[..], &stable].concat(), family)?;
            let intensity = positive(raw.intensity, "model.intensity")?;
            let mean = require(raw.jump_mean, "model.jump_mean")?;
            let sd = require(raw.jump_sd, "model.jump_sd")?;
            if sd < 0.0 {
                return Err(invalid("model.jump_sd", format!("must be >= 0, got {sd}")));
            }
            if !(sigma > 0.0) {
                return Err(invalid("model.sigma", "merton needs sigma > 0"));
            }
            LevyModel::merton(mu, sigma, intensity, mean, sd)
        }
        "kou" => {
            reject_extra(&[&merton[..], &stable].concat(), family)?;
            let intensity = positive(raw.intensity, "model.intensity")?;
            let p = require(raw.p_up, "model.p_up")?;
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid("model.p_up", format!("must lie in [0, 1], got {p}")));
            }
            let up = positive(raw.eta_up, "model.eta_up")?;
            let down = positive(raw.eta_down, "model.eta_down")?;
            LevyModel::kou(mu, sigma, intensity, p, up, down)
        }
        "symmetric_stable" => {
            reject_extra(&[&jumps[..], &merton, &kou].concat(), family)?;
            let index = require(raw.index, "model.index")?;
            if !(index > 1.0 && index < 2.0) {
                return Err(invalid("model.index", format!("must lie in (1, 2), got {index}")));
            }
            let scale = positive(raw.scale, "model.scale")?;
            LevyModel::symmetric_stable(mu, sigma, index, scale)
        }
        other => {
            return Err(invalid(
                "model.family",
                format!("unknown family {other:?}; expected brownian_drift, merton, kou or symmetric_stable"),
            ))
        }
    };
    built.map_err(|e| invalid("model", e.to_string()))
}

fn profit_from(raw: RawProfit) -> Result<ProfitSpec, CliError> {
    let kind = raw
        .kind
        .as_deref()
        .ok_or_else(|| invalid("profit.kind", "missing required key"))?;
    let spec = match kind {
        "cobb_douglas" | "log" => {
            if raw.gamma.is_some() {
                return Err(invalid(
                    "profit.gamma",
                    format!("not a parameter of profit kind {kind}"),
                ));
            }
            let alpha = open_unit(raw.alpha, "profit.alpha")?;
            let beta = open_unit(raw.beta, "profit.beta")?;
            if kind == "log" {
                ProfitSpec::Log { alpha, beta }
            } else {
                ProfitSpec::CobbDouglas { alpha, beta }
            }
        }
        "ces" => {
            if raw.beta.is_some() {
                return Err(invalid("profit.beta", "not a parameter of profit kind ces"));
            }
            ProfitSpec::Ces {
                alpha: open_unit(raw.alpha, "profit.alpha")?,
                gamma: open_unit(raw.gamma, "profit.gamma")?,
            }
        }
        other => {
            return Err(invalid(
                "profit.kind",
                format!("unknown kind {other:?}; expected cobb_douglas, ces or log"),
            ))
        }
    };
    match spec {
        ProfitSpec::CobbDouglas { alpha, beta } => ProfitFunction::cobb_douglas(alpha, beta).map(|_| ()),
        ProfitSpec::Ces { alpha, gamma } => ProfitFunction::ces(alpha, gamma).map(|_| ()),
        ProfitSpec::Log { alpha, beta } => ProfitFunction::log(alpha, beta).map(|_| ()),
    }
    .map_err(|e| invalid("profit", e.to_string()))?;
    Ok(spec)
}

fn count(v: Option<i64>, key: &str, default: usize, min: usize) -> Result<usize, CliError> {
    match v {
        None => Ok(default),
        Some(n) if n >= min as i64 => Ok(n as usize),
        Some(n) => Err(invalid(key, format!("must be >= {min}, got {n}"))),
    }
}

fn finite_list(v: Option<Vec<f64>>, key: &str, default: &[f64]) -> Result<Vec<f64>, CliError> {
    let v = v.unwrap_or_else(|| default.to_vec());
    if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
        return Err(invalid(key, format!("entries must be finite, got {bad}")));
    }
    Ok(v)
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    let r = positive(raw.r, "r")?;
    let model = model_from(raw.model.ok_or_else(|| invalid("model", "missing required table"))?)?;
    let profit = profit_from(raw.profit.ok_or_else(|| invalid("profit", "missing required table"))?)?;

    let step = match raw.mc.step {
        Some(_) => positive(raw.mc.step, "mc.step")?,
        None => 1e-3 / r,
    };
    let t_max = match raw.mc.t_max {
        Some(_) => positive(raw.mc.t_max, "mc.t_max")?,
        None => 20.0 / r,
    };
    let extrema = match raw.mc.extrema.as_deref() {
        None | Some("brownian_bridge") => ExtremaMethod::BrownianBridge,
        Some("grid") => ExtremaMethod::Grid,
        Some(other) => {
            return Err(invalid(
                "mc.extrema",
                format!("unknown method {other:?}; expected brownian_bridge or grid"),
            ))
        }
    };
    let factors = match raw.mc.factors.as_deref() {
        None | Some("auto") => FactorChoice::Auto,
        Some("exact") => FactorChoice::Exact,
        Some("monte_carlo") => FactorChoice::MonteCarlo,
        Some(other) => {
            return Err(invalid(
                "mc.factors",
                format!("unknown choice {other:?}; expected auto, exact or monte_carlo"),
            ))
        }
    };
    let mc = McConfig {
        n_paths: count(raw.mc.n_paths, "mc.n_paths", 10_000, 1)?,
        step,
        t_max,
        extrema,
        factors,
    };

    let u_min = match raw.grid.u_min {
        Some(_) => require(raw.grid.u_min, "grid.u_min")?,
        None => -2.0,
    };
    let u_max = match raw.grid.u_max {
        Some(_) => require(raw.grid.u_max, "grid.u_max")?,
        None => 2.0,
    };
    if !(u_min < u_max) {
        return Err(invalid(
            "grid.u_max",
            format!("must exceed grid.u_min ({u_min}), got {u_max}"),
        ));
    }
    let grid = GridConfig {
        u_min,
        u_max,
        n: count(raw.grid.n, "grid.n", 21, 2)?,
    };

    let x = match raw.policy.x {
        Some(_) => require(raw.policy.x, "policy.x")?,
        None => 0.0,
    };
    let y = match raw.policy.y {
        Some(_) => Some(positive(raw.policy.y, "policy.y")?),
        None => None,
    };
    let scales = finite_list(raw.policy.scales, "policy.scales", &[0.5, 0.8, 1.0, 1.25, 2.0])?;
    if scales.iter().any(|&c| c <= 0.0) {
        return Err(invalid("policy.scales", "scales must be positive"));
    }
    if !scales.contains(&1.0) {
        return Err(invalid("policy.scales", "scales must include 1.0"));
    }
    let fixed = finite_list(raw.policy.fixed_times, "policy.fixed_times", &[0.0, 0.25, 1.0])?;
    if fixed.iter().any(|&t| t < 0.0) {
        return Err(invalid("policy.fixed_times", "times must be >= 0"));
    }
    let hitting = finite_list(raw.policy.hitting_levels, "policy.hitting_levels", &[0.5, -0.5])?;
    let rules = fixed
        .into_iter()
        .map(StoppingRule::Fixed)
        .chain(hitting.into_iter().map(StoppingRule::Hitting))
        .collect();

    let y_levels = finite_list(raw.verify.y_levels, "verify.y_levels", &[0.5, 1.0, 2.0])?;
    let lambdas = finite_list(raw.wh.lambdas, "wh.lambdas", &[0.25, 0.5, 1.0])?;
    if lambdas.iter().any(|&l| l < 0.0) {
        return Err(invalid("wh.lambdas", "moment orders must be >= 0"));
    }

    Ok(ExperimentConfig {
        model,
        profit,
        r,
        seed: raw.seed.unwrap_or(0),
        mc,
        grid,
        output_dir: raw.outputs.dir.unwrap_or_else(|| PathBuf::from("out")),
        policy: PolicyConfig { x, y, scales, rules },
        y_levels,
        lambdas,
        config_hash: sha256_hex(text.as_bytes()),
    })
}

/// Reads, parses and validates the config at `path`.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
