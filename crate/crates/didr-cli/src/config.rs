//! Scenario configuration: a JSON document with top-level keys `model`,
//! `initial`, `run`, and optional `sweep` and `oracle` sections.
//!
//! ```json
//! {
//!   "model":   {"lambda": 0.5, "gamma": 0.001, "omega": 0.02,
//!               "mu": 3.678794411714423, "tau1": 1.0, "tau2": 0.1},
//!   "initial": {"s": 498, "i": 2, "r": 0},
//!   "run":     {"t_end": 1000, "n_sub": 50},
//!   "sweep":   {"param": "tau1", "values": [0.5, 1.0, 1.5, 2.0, 2.5]},
//!   "oracle":  {"dt": 0.005, "replicates": 200, "seed": 1}
//! }
//! ```

use didr_core::dde::EpidemicState;
use didr_core::sir::ModelParams;
use serde::Deserialize;
use thiserror::Error;

pub const DEFAULT_T_END: f64 = 1000.0;
pub const DEFAULT_N_SUB: usize = 50;
/// Step size used when both delays are zero and the per-delay rule is
/// vacuous.
pub const ZERO_DELAY_STEP: f64 = 0.01;
/// Trajectories are decimated to at most roughly this many recorded rows.
pub const TARGET_RECORDED_POINTS: usize = 20_000;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("configuration schema error: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("invalid {field}: {message}")]
    Invalid {
        field: &'static str,
        message: String,
    },
    #[error("sweep over {param} = {value} produces invalid parameters: {message}")]
    SweepValue {
        param: &'static str,
        value: f64,
        message: String,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDoc {
    model: ModelSection,
    initial: InitialSection,
    #[serde(default)]
    run: RunSection,
    #[serde(default)]
    sweep: Option<SweepSection>,
    #[serde(default)]
    oracle: Option<OracleSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSection {
    lambda: f64,
    gamma: f64,
    omega: f64,
    mu: f64,
    tau1: f64,
    tau2: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialSection {
    s: f64,
    i: f64,
    r: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    #[serde(default = "default_t_end")]
    t_end: f64,
    #[serde(default = "default_n_sub")]
    n_sub: usize,
}

fn default_t_end() -> f64 {
    DEFAULT_T_END
}

fn default_n_sub() -> usize {
    DEFAULT_N_SUB
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            t_end: DEFAULT_T_END,
            n_sub: DEFAULT_N_SUB,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    param: SweepParam,
    values: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OracleSection {
    dt: f64,
    replicates: usize,
    #[serde(default)]
    seed: u64,
}

/// The sweepable model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Tau1,
    Tau2,
    Mu,
    Omega,
    Gamma,
    Lambda,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::Tau1 => "tau1",
            SweepParam::Tau2 => "tau2",
            SweepParam::Mu => "mu",
            SweepParam::Omega => "omega",
            SweepParam::Gamma => "gamma",
            SweepParam::Lambda => "lambda",
        }
    }

    pub fn apply(&self, base: &ModelParams, value: f64) -> Result<ModelParams, ConfigError> {
        base.with_value(self.name(), value)
            .map_err(|e| ConfigError::SweepValue {
                param: self.name(),
                value,
                message: e.to_string(),
            })
    }
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct OracleSettings {
    pub dt: f64,
    pub replicates: usize,
    pub seed: u64,
}

/// A parsed and validated scenario.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub params: ModelParams,
    pub initial: EpidemicState,
    pub t_end: f64,
    pub n_sub: usize,
    pub sweep: Option<Sweep>,
    pub oracle: Option<OracleSettings>,
}

/// Parse and validate a configuration document. Every error names the
/// offending field.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let doc: ConfigDoc = serde_json::from_str(text)?;

    let m = &doc.model;
    for (field, value) in [
        ("model.lambda", m.lambda),
        ("model.gamma", m.gamma),
        ("model.omega", m.omega),
    ] {
        if !value.is_finite() || value <= 0.0 {
            return Err(ConfigError::Invalid {
                field,
                message: format!("must be strictly positive, got {value}"),
            });
        }
    }
    for (field, value) in [("model.tau1", m.tau1), ("model.tau2", m.tau2)] {
        if !value.is_finite() || value < 0.0 {
            return Err(ConfigError::Invalid {
                field,
                message: format!("delay must be nonnegative, got {value}"),
            });
        }
    }
    let params =
        ModelParams::new(m.lambda, m.gamma, m.omega, m.mu, m.tau1, m.tau2).map_err(|e| {
            ConfigError::Invalid {
                field: "model",
                message: e.to_string(),
            }
        })?;

    let init = &doc.initial;
    for (field, value) in [
        ("initial.s", init.s),
        ("initial.i", init.i),
        ("initial.r", init.r),
    ] {
        if !value.is_finite() || value < 0.0 {
            return Err(ConfigError::Invalid {
                field,
                message: format!("must be nonnegative, got {value}"),
            });
        }
    }
    let initial = EpidemicState::new(init.s, init.i, init.r);

    if !doc.run.t_end.is_finite() || doc.run.t_end <= 0.0 {
        return Err(ConfigError::Invalid {
            field: "run.t_end",
            message: format!("must be positive, got {}", doc.run.t_end),
        });
    }
    if doc.run.n_sub < 10 {
        return Err(ConfigError::Invalid {
            field: "run.n_sub",
            message: format!("must be at least 10, got {}", doc.run.n_sub),
        });
    }

    let sweep = match doc.sweep {
        None => None,
        Some(s) => {
            if s.values.is_empty() {
                return Err(ConfigError::Invalid {
                    field: "sweep.values",
                    message: "must not be empty".into(),
                });
            }
            // every swept parameter set must itself be valid
            for &v in &s.values {
                s.param.apply(&params, v)?;
            }
            Some(Sweep {
                param: s.param,
                values: s.values,
            })
        }
    };

    let oracle = match doc.oracle {
        None => None,
        Some(o) => {
            if !o.dt.is_finite() || o.dt <= 0.0 {
                return Err(ConfigError::Invalid {
                    field: "oracle.dt",
                    message: format!("must be positive, got {}", o.dt),
                });
            }
            if o.replicates < 2 {
                return Err(ConfigError::Invalid {
                    field: "oracle.replicates",
                    message: format!("need at least 2 replicates, got {}", o.replicates),
                });
            }
            Some(OracleSettings {
                dt: o.dt,
                replicates: o.replicates,
                seed: o.seed,
            })
        }
    };

    Ok(ScenarioConfig {
        params,
        initial,
        t_end: doc.run.t_end,
        n_sub: doc.run.n_sub,
        sweep,
        oracle,
    })
}

/// Integrator step: the smallest nonzero delay divided by n_sub, or a
/// fixed default when the model has no delays.
pub fn step_size(params: &ModelParams, n_sub: usize) -> f64 {
    let mut min_delay = f64::INFINITY;
    for tau in [params.tau1(), params.tau2()] {
        if tau > 0.0 {
            min_delay = min_delay.min(tau);
        }
    }
    if min_delay.is_finite() {
        min_delay / n_sub as f64
    } else {
        ZERO_DELAY_STEP
    }
}

/// Output decimation keeping roughly [`TARGET_RECORDED_POINTS`] rows.
pub fn record_stride(t_end: f64, h: f64) -> usize {
    let n_steps = (t_end / h).ceil() as usize;
    (n_steps / TARGET_RECORDED_POINTS).max(1)
}
