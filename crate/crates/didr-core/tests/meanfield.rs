//! Mean-field validation of the agent-based oracle in regimes where the
//! large-population limit applies (enough initial infecteds that the
//! outbreak survives demographic stochasticity in essentially every
//! replicate).

use didr_core::ctrw::{ensemble_mean, OracleConfig};
use didr_core::dde::{integrate, EpidemicState, StepConfig};
use didr_core::dexp;
use didr_core::sir::{DelayedSirModel, ModelParams};

/// Independently coded classical SIR RK4 (no delays, no dense output);
/// returns I at each multiple of dt.
fn standard_sir_rk4(
    lambda: f64,
    gamma: f64,
    omega: f64,
    mu: f64,
    init: (f64, f64, f64),
    dt: f64,
    n_steps: usize,
) -> Vec<f64> {
    let f = |s: f64, i: f64, r: f64| -> (f64, f64, f64) {
        (
            lambda - omega * s * i - gamma * s,
            omega * s * i - mu * i - gamma * i,
            mu * i - gamma * r,
        )
    };
    let (mut s, mut i, mut r) = init;
    let mut out = Vec::with_capacity(n_steps + 1);
    out.push(i);
    for _ in 0..n_steps {
        let (k1s, k1i, k1r) = f(s, i, r);
        let (k2s, k2i, k2r) = f(s + 0.5 * dt * k1s, i + 0.5 * dt * k1i, r + 0.5 * dt * k1r);
        let (k3s, k3i, k3r) = f(s + 0.5 * dt * k2s, i + 0.5 * dt * k2i, r + 0.5 * dt * k2r);
        let (k4s, k4i, k4r) = f(s + dt * k3s, i + dt * k3i, r + dt * k3r);
        s += dt / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s);
        i += dt / 6.0 * (k1i + 2.0 * k2i + 2.0 * k3i + k4i);
        r += dt / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r);
        out.push(i);
    }
    out
}

/// Sup-norm of the difference up to (and including) the reference peak,
/// normalized by the reference peak value.
fn peak_window_deviation(mean: &[f64], reference: &[f64]) -> (f64, f64, usize) {
    let mut peak = reference[0];
    let mut peak_idx = 0;
    for (k, &v) in reference.iter().enumerate() {
        if v > peak {
            peak = v;
            peak_idx = k;
        }
    }
    let mut sup = 0.0f64;
    for k in 0..=peak_idx {
        sup = sup.max((mean[k] - reference[k]).abs());
    }
    (sup / peak, peak, peak_idx)
}

#[test]
fn markovian_reduction_matches_standard_sir_ode() {
    // tau1 = tau2 = 0: the oracle reduces to a Markovian SIR chain with
    // constant infectivity; its ensemble mean follows the classical ODE.
    let mu = dexp::survival_bound() / 0.1;
    let params = ModelParams::new(0.5, 0.001, 0.02, mu, 0.0, 0.0).unwrap();
    let cfg = OracleConfig {
        params,
        dt: 0.004,
        s0: 470,
        i0: 30,
        r0: 0,
        t_end: 20.0,
        replicates: 100,
        seed: 2024,
    };
    let stats = ensemble_mean(&cfg).unwrap();
    let mean_i: Vec<f64> = stats.mean.iter().map(|m| m.i).collect();
    let ode_i = standard_sir_rk4(
        0.5,
        0.001,
        0.02,
        mu,
        (470.0, 30.0, 0.0),
        cfg.dt,
        cfg.n_steps(),
    );
    let (dev, peak, peak_idx) = peak_window_deviation(&mean_i, &ode_i);
    println!(
        "markovian regime: normalized sup deviation {dev:.4} (ODE peak {peak:.1} at step {peak_idx})"
    );
    assert!(
        dev <= 0.10,
        "ensemble mean off the ODE by {dev:.4} of the peak"
    );
}

#[test]
fn delayed_regime_matches_dde() {
    // tau1 = 0.2 with twenty age-0 seeds: enough of them reach infectious
    // age (phi(0.2) ~ 0.63) that every replicate produces an outbreak, so
    // the ensemble mean tracks the mean-field DDE.
    let tau2 = 0.1;
    let mu = dexp::survival_bound() / tau2;
    let params = ModelParams::new(0.5, 0.001, 0.02, mu, 0.2, tau2).unwrap();
    let cfg = OracleConfig {
        params,
        dt: 0.002,
        s0: 480,
        i0: 20,
        r0: 0,
        t_end: 6.0,
        replicates: 100,
        seed: 77,
    };
    let stats = ensemble_mean(&cfg).unwrap();
    let mean_i: Vec<f64> = stats.mean.iter().map(|m| m.i).collect();

    let model = DelayedSirModel::new(&params);
    let step = StepConfig::new(tau2 / 50.0, cfg.t_end).unwrap();
    let traj = integrate(
        &model,
        EpidemicState::new(480.0, 20.0, 0.0),
        params.delays(),
        &step,
    )
    .unwrap();
    let dde_i: Vec<f64> = stats
        .times
        .iter()
        .map(|&t| traj.sample(t).unwrap().i)
        .collect();

    let (dev, peak, peak_idx) = peak_window_deviation(&mean_i, &dde_i);
    let peak_time = stats.times[peak_idx];
    println!(
        "delayed regime: normalized sup deviation {dev:.4} (DDE peak {peak:.1} at t = {peak_time:.2})"
    );
    assert!(
        dev <= 0.10,
        "ensemble mean off the DDE by {dev:.4} of the peak"
    );

    // the ensemble's own peak magnitude agrees with the DDE peak
    let mean_peak = mean_i.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(
        (mean_peak - peak).abs() <= 0.10 * peak,
        "peak magnitude {mean_peak:.1} vs DDE {peak:.1}"
    );
}
