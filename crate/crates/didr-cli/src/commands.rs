//! Command implementations. Each command reads a validated scenario,
//! produces deterministic CSV files in the output directory, and returns
//! the list of files written.

use crate::config::{record_stride, step_size, OracleSettings, ScenarioConfig};
use crate::csv;
use anyhow::{bail, Context, Result};
use didr_core::ctrw::{ensemble_mean, OracleConfig};
use didr_core::dde::{integrate, Compartment, StepConfig, Trajectory};
use didr_core::dexp::{self, DexpParams};
use didr_core::metrics::{detect_peaks, PeakDetection, TrajectoryMetrics};
use didr_core::sir::{steady_disease_free, steady_endemic, DelayedSirModel, ModelParams};
use rayon::prelude::*;
use std::fs;
use std::path::{Path, PathBuf};

/// Integrate one scenario with the configured step and decimation.
pub fn run_scenario(params: &ModelParams, cfg: &ScenarioConfig) -> Result<Trajectory> {
    run_scenario_with_stride(
        params,
        cfg,
        record_stride(cfg.t_end, step_size(params, cfg.n_sub)),
    )
}

/// Node-count cap for metrics-resolution trajectories; above this the
/// recording falls back to a coarser stride so pathological horizons do not
/// exhaust memory.
const MAX_METRICS_NODES: usize = 2_000_000;

/// Integrate at full solver resolution (every node recorded, up to
/// [`MAX_METRICS_NODES`]). Peak and sustain metrics are computed from this
/// grid; decimating to the file resolution first would blur peak values
/// below the separations the sweeps resolve.
pub fn run_scenario_full(params: &ModelParams, cfg: &ScenarioConfig) -> Result<Trajectory> {
    let h = step_size(params, cfg.n_sub);
    let n_steps = (cfg.t_end / h).ceil() as usize;
    run_scenario_with_stride(params, cfg, (n_steps / MAX_METRICS_NODES).max(1))
}

fn run_scenario_with_stride(
    params: &ModelParams,
    cfg: &ScenarioConfig,
    stride: usize,
) -> Result<Trajectory> {
    let h = step_size(params, cfg.n_sub);
    let step = StepConfig::new(h, cfg.t_end)?.with_record_every(stride);
    let model = DelayedSirModel::new(params);
    integrate(&model, cfg.initial, params.delays(), &step).context("integration failed")
}

pub fn cmd_simulate(cfg: &ScenarioConfig, out: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out)?;
    let traj = run_scenario(&cfg.params, cfg)?;
    let path = out.join("trajectory.csv");
    csv::write_trajectory(&path, &traj)?;
    Ok(vec![path])
}

/// One trajectory CSV per sweep value plus a metrics summary over the
/// infected compartment. Sweep values run in parallel; outputs depend only
/// on the configuration.
pub fn cmd_sweep(cfg: &ScenarioConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let Some(sweep) = &cfg.sweep else {
        bail!("configuration has no sweep section");
    };
    fs::create_dir_all(out)?;
    let detection = PeakDetection::default();
    let results: Vec<(f64, PathBuf, TrajectoryMetrics)> = sweep
        .values
        .par_iter()
        .map(|&value| -> Result<(f64, PathBuf, TrajectoryMetrics)> {
            let params = sweep.param.apply(&cfg.params, value)?;
            let traj = run_scenario_full(&params, cfg)?;
            let metrics = detect_peaks(&traj, Compartment::Infected, &detection);
            let path = out.join(format!("trajectory_{}_{}.csv", sweep.param.name(), value));
            let stride = record_stride(cfg.t_end, step_size(&params, cfg.n_sub));
            csv::write_trajectory_decimated(&path, &traj, stride)?;
            Ok((value, path, metrics))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut written: Vec<PathBuf> = results.iter().map(|(_, p, _)| p.clone()).collect();
    let rows: Vec<(f64, TrajectoryMetrics)> = results.iter().map(|(v, _, m)| (*v, *m)).collect();
    let metrics_path = out.join("metrics.csv");
    csv::write_metrics(&metrics_path, &rows)?;
    written.push(metrics_path);
    Ok(written)
}

pub fn cmd_steady(cfg: &ScenarioConfig, out: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out)?;
    let free = steady_disease_free(&cfg.params)?;
    let endemic = steady_endemic(&cfg.params)?;
    let mut rows = vec![free];
    let exists = endemic.is_some();
    if let Some(e) = endemic {
        rows.push(e);
    }
    let path = out.join("steady.csv");
    csv::write_steady(&path, &rows, exists)?;
    Ok(vec![path])
}

/// Run the agent-based ensemble next to the mean-field solution.
pub fn cmd_oracle(cfg: &ScenarioConfig, out: &Path, seed: Option<u64>) -> Result<Vec<PathBuf>> {
    let Some(settings) = cfg.oracle else {
        bail!("configuration has no oracle section");
    };
    let settings = OracleSettings {
        seed: seed.unwrap_or(settings.seed),
        ..settings
    };
    fs::create_dir_all(out)?;

    let to_count = |name: &str, value: f64| -> Result<u64> {
        if value.fract() != 0.0 {
            bail!(
                "initial.{name} must be a whole number of individuals for the oracle, got {value}"
            );
        }
        Ok(value as u64)
    };
    let oracle_cfg = OracleConfig {
        params: cfg.params,
        dt: settings.dt,
        s0: to_count("s", cfg.initial.s)?,
        i0: to_count("i", cfg.initial.i)?,
        r0: to_count("r", cfg.initial.r)?,
        t_end: cfg.t_end,
        replicates: settings.replicates,
        seed: settings.seed,
    };
    oracle_cfg.validate()?;

    let stats = ensemble_mean(&oracle_cfg)?;
    let ensemble_path = out.join("ensemble.csv");
    csv::write_ensemble(&ensemble_path, &stats)?;

    let traj = run_scenario(&cfg.params, cfg)?;
    let dde: Vec<_> = stats
        .times
        .iter()
        .map(|&t| traj.sample(t.min(traj.end_time())))
        .collect::<std::result::Result<_, _>>()?;
    let comparison_path = out.join("comparison.csv");
    csv::write_comparison(&comparison_path, &stats.times, &dde, &stats)?;
    Ok(vec![ensemble_path, comparison_path])
}

/// Tabulate phi, psi, and rho on a uniform grid.
pub fn cmd_dexp(
    mu: f64,
    tau: f64,
    tau1: f64,
    t_end: f64,
    points: usize,
    out: &Path,
) -> Result<Vec<PathBuf>> {
    if points < 2 {
        bail!("need at least 2 grid points, got {points}");
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        bail!("t-end must be positive, got {t_end}");
    }
    let p = DexpParams::new(mu, tau)?;
    dexp::validate_survival(&p)?;
    fs::create_dir_all(out)?;
    let mut rows = Vec::with_capacity(points);
    for k in 0..points {
        let t = t_end * k as f64 / (points - 1) as f64;
        let phi = dexp::survival_phi(t, &p)?;
        let psi = dexp::density_psi(t, &p)?;
        let rho = dexp::infectivity_rho(t, mu, tau1, tau)?;
        rows.push((t, phi, psi, rho));
    }
    let path = out.join("dexp.csv");
    csv::write_dexp_table(&path, &rows)?;
    Ok(vec![path])
}
