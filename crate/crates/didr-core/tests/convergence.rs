//! Step-size convergence of the delayed RK4 scheme on the delay
//! exponential test problem.

use didr_core::dde::{integrate, DelayedRhs, EpidemicState, StateDeriv, StepConfig};

struct DexpDecay {
    mu: f64,
}

impl DelayedRhs for DexpDecay {
    fn rhs(&self, _state: &EpidemicState, _i1: f64, i2: f64) -> StateDeriv {
        EpidemicState::new(0.0, -self.mu * i2, 0.0)
    }
}

fn infected_at_end(h: f64, tau: f64, t_end: f64) -> f64 {
    let cfg = StepConfig::new(h, t_end).unwrap();
    let traj = integrate(
        &DexpDecay { mu: 1.0 },
        EpidemicState::new(0.0, 1.0, 0.0),
        (0.0, tau),
        &cfg,
    )
    .unwrap();
    traj.sample(t_end).unwrap().i
}

#[test]
fn halving_the_step_gains_at_least_order_3_5() {
    let tau = (-1.0f64).exp();
    let t_end = 5.0;
    let h0 = tau / 10.0;
    let reference = infected_at_end(h0 / 16.0, tau, t_end);
    let e0 = (infected_at_end(h0, tau, t_end) - reference).abs();
    let e1 = (infected_at_end(h0 / 2.0, tau, t_end) - reference).abs();
    let ratio = e0 / e1;
    println!("errors: {e0:.3e} -> {e1:.3e}, ratio {ratio:.2}");
    assert!(
        ratio >= 2f64.powf(3.5),
        "observed convergence ratio {ratio} (errors {e0:.3e}, {e1:.3e})"
    );
}
