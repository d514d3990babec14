//! Fixed-step RK4 integrator for systems with up to two constant delayed
//! reads of the infected component (method of steps).
//!
//! History is interpolated with cubic Hermite polynomials from stored
//! (state, derivative) node pairs, matching the O(h^4) accuracy of the
//! stepper without extra stages. The pre-history convention is I(t) = 0 for
//! t < 0 with the initial value taken at exactly t = 0.
//!
//! The step size must not exceed a tenth of the smallest nonzero delay, so
//! every delayed stage read lands in already-completed intervals. When a
//! delay is zero its "delayed" read degenerates to the current stage value
//! and the scheme reduces to a plain ODE RK4 run.

use thiserror::Error;

/// Numerical nonnegativity tolerance: any compartment below this aborts the
/// integration (signals invalid parameters rather than silently clamping).
pub const NEGATIVITY_TOLERANCE: f64 = -1e-9;

/// Snap tolerance (in units of one step) for treating a delayed read as an
/// exact node hit.
const NODE_SNAP: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DdeError {
    #[error("delay must be finite and nonnegative, got {value}")]
    InvalidDelay { value: f64 },
    #[error("initial {component} must be finite and nonnegative, got {value}")]
    InvalidInit { component: &'static str, value: f64 },
    #[error("step size must be positive and finite, got {h}")]
    InvalidStep { h: f64 },
    #[error("horizon must be positive and finite, got {t_end}")]
    InvalidHorizon { t_end: f64 },
    #[error("step size {h} exceeds a tenth of the smallest nonzero delay ({limit})")]
    StepTooLarge { h: f64, limit: f64 },
    #[error("state became non-finite at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("{component} fell to {value} at t = {t} (below the nonnegativity tolerance)")]
    NegativeState {
        t: f64,
        component: &'static str,
        value: f64,
    },
    #[error("t = {t} is outside the trajectory range [0, {end}]")]
    OutOfRange { t: f64, end: f64 },
}

/// Compartment selector shared by trajectories, metrics, and the agent
/// oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Compartment {
    Susceptible,
    Infected,
    Recovered,
}

impl Compartment {
    pub fn name(&self) -> &'static str {
        match self {
            Compartment::Susceptible => "S",
            Compartment::Infected => "I",
            Compartment::Recovered => "R",
        }
    }
}

/// One (S, I, R) triple. Also used for state time-derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EpidemicState {
    pub s: f64,
    pub i: f64,
    pub r: f64,
}

/// A state time-derivative (dS/dt, dI/dt, dR/dt).
pub type StateDeriv = EpidemicState;

impl EpidemicState {
    pub fn new(s: f64, i: f64, r: f64) -> Self {
        Self { s, i, r }
    }

    pub fn total(&self) -> f64 {
        self.s + self.i + self.r
    }

    pub fn component(&self, c: Compartment) -> f64 {
        match c {
            Compartment::Susceptible => self.s,
            Compartment::Infected => self.i,
            Compartment::Recovered => self.r,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.s.is_finite() && self.i.is_finite() && self.r.is_finite()
    }

    fn min_component(&self) -> (&'static str, f64) {
        let mut out = ("S", self.s);
        if self.i < out.1 {
            out = ("I", self.i);
        }
        if self.r < out.1 {
            out = ("R", self.r);
        }
        out
    }
}

impl std::ops::Add for EpidemicState {
    type Output = EpidemicState;
    fn add(self, o: EpidemicState) -> EpidemicState {
        EpidemicState::new(self.s + o.s, self.i + o.i, self.r + o.r)
    }
}

impl std::ops::Sub for EpidemicState {
    type Output = EpidemicState;
    fn sub(self, o: EpidemicState) -> EpidemicState {
        EpidemicState::new(self.s - o.s, self.i - o.i, self.r - o.r)
    }
}

impl std::ops::Mul<f64> for EpidemicState {
    type Output = EpidemicState;
    fn mul(self, c: f64) -> EpidemicState {
        EpidemicState::new(self.s * c, self.i * c, self.r * c)
    }
}

/// Right-hand side of a system whose delayed reads are the infected
/// component at t - tau1 and t - tau2.
pub trait DelayedRhs {
    fn rhs(&self, state: &EpidemicState, i_tau1: f64, i_tau2: f64) -> StateDeriv;
}

/// Step size, horizon, and output decimation for one integration.
#[derive(Debug, Clone, Copy)]
pub struct StepConfig {
    h: f64,
    t_end: f64,
    record_every: usize,
}

impl StepConfig {
    pub fn new(h: f64, t_end: f64) -> Result<Self, DdeError> {
        if !h.is_finite() || h <= 0.0 {
            return Err(DdeError::InvalidStep { h });
        }
        if !t_end.is_finite() || t_end <= 0.0 {
            return Err(DdeError::InvalidHorizon { t_end });
        }
        Ok(Self {
            h,
            t_end,
            record_every: 1,
        })
    }

    /// Record only every n-th node. Delayed reads always use the
    /// full-resolution window; this only decimates the returned trajectory.
    pub fn with_record_every(mut self, n: usize) -> Self {
        self.record_every = n.max(1);
        self
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }
}

/// Dense solution on a uniform grid: states and right-hand-side derivatives
/// at every recorded node, supporting cubic Hermite interpolation anywhere
/// in between.
#[derive(Debug, Clone)]
pub struct Trajectory {
    spacing: f64,
    times: Vec<f64>,
    states: Vec<EpidemicState>,
    derivs: Vec<StateDeriv>,
    init_i: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Spacing of the recorded grid (step size times the record stride).
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[EpidemicState] {
        &self.states
    }

    pub fn derivs(&self) -> &[StateDeriv] {
        &self.derivs
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().expect("trajectory is never empty")
    }

    pub fn final_state(&self) -> &EpidemicState {
        self.states.last().expect("trajectory is never empty")
    }

    /// Interpolate the full state at time t; exact at grid nodes.
    /// Negative t is an error: only the infected component has a pre-history
    /// convention (see [`Trajectory::infected_at`]).
    pub fn sample(&self, t: f64) -> Result<EpidemicState, DdeError> {
        let end = self.end_time();
        if !t.is_finite() || t < 0.0 || t > end * (1.0 + 1e-12) {
            return Err(DdeError::OutOfRange { t, end });
        }
        let x = t / self.spacing;
        let r = x.round();
        if (x - r).abs() < NODE_SNAP && (r as usize) < self.len() {
            return Ok(self.states[r as usize]);
        }
        let j = (x.floor() as usize).min(self.len() - 2);
        let s = (x - j as f64).clamp(0.0, 1.0);
        Ok(hermite(
            &self.states[j],
            &self.derivs[j],
            &self.states[j + 1],
            &self.derivs[j + 1],
            s,
            self.spacing,
        ))
    }

    /// Infected component at time t, honoring the history convention:
    /// 0 for t < 0 and the initial value at exactly t = 0.
    pub fn infected_at(&self, t: f64) -> Result<f64, DdeError> {
        if t.is_nan() {
            return Err(DdeError::OutOfRange {
                t,
                end: self.end_time(),
            });
        }
        if t < 0.0 {
            return Ok(0.0);
        }
        if t == 0.0 {
            return Ok(self.init_i);
        }
        Ok(self.sample(t)?.i)
    }
}

fn hermite(
    y0: &EpidemicState,
    d0: &StateDeriv,
    y1: &EpidemicState,
    d1: &StateDeriv,
    s: f64,
    h: f64,
) -> EpidemicState {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    *y0 * h00 + *d0 * (h10 * h) + *y1 * h01 + *d1 * (h11 * h)
}

/// A delayed read position, resolved once per delay.
enum Lag {
    /// Zero delay: the read is the current stage's own value.
    Zero,
    /// The delay is an integer number of steps; stage-start reads hit
    /// stored nodes exactly.
    Whole(u64),
    /// General fractional lag in units of one step.
    General(f64),
}

impl Lag {
    fn resolve(tau: f64, h: f64) -> Lag {
        if tau == 0.0 {
            return Lag::Zero;
        }
        let steps = tau / h;
        let r = steps.round();
        if (steps - r).abs() < NODE_SNAP {
            Lag::Whole(r as u64)
        } else {
            Lag::General(steps)
        }
    }

    fn max_steps(&self) -> u64 {
        match self {
            Lag::Zero => 0,
            Lag::Whole(m) => *m,
            Lag::General(l) => l.ceil() as u64,
        }
    }
}

/// Sliding full-resolution window of recent nodes, large enough to cover
/// the largest delay.
///
/// Each node carries two one-sided derivatives. They differ only at nodes
/// whose delayed argument lands exactly on the initial jump t = 0: there
/// the solution has a corner, and the interval ending at the node must be
/// interpolated with the left-side value while the interval starting there
/// uses the right-side value. Everywhere else both are the same RHS value.
struct History {
    window: usize,
    states: Vec<EpidemicState>,
    derivs_right: Vec<StateDeriv>,
    derivs_left: Vec<StateDeriv>,
    len: u64,
}

impl History {
    fn new(window: usize) -> Self {
        Self {
            window,
            states: vec![EpidemicState::default(); window],
            derivs_right: vec![StateDeriv::default(); window],
            derivs_left: vec![StateDeriv::default(); window],
            len: 0,
        }
    }

    fn push(&mut self, state: EpidemicState, deriv_right: StateDeriv, deriv_left: StateDeriv) {
        let slot = (self.len % self.window as u64) as usize;
        self.states[slot] = state;
        self.derivs_right[slot] = deriv_right;
        self.derivs_left[slot] = deriv_left;
        self.len += 1;
    }

    #[inline]
    fn slot(&self, k: u64) -> usize {
        debug_assert!(k < self.len && self.len - k <= self.window as u64);
        (k % self.window as u64) as usize
    }

    /// Infected component at a (possibly negative, possibly fractional)
    /// node position x, in units of one step, for stage-interior and
    /// stage-end evaluations. At the initial jump (x = 0) this takes the
    /// pre-history left limit 0, so a step ending exactly on the
    /// discontinuity integrates the smooth piece it belongs to; the jump
    /// value enters through the next step's stage-start read.
    fn infected(&self, x: f64, h: f64) -> f64 {
        if x <= NODE_SNAP {
            return 0.0;
        }
        let r = x.round();
        if (x - r).abs() < NODE_SNAP {
            return self.states[self.slot(r as u64)].i;
        }
        let j = x.floor() as u64;
        let s = x - j as f64;
        let (a, b) = (self.slot(j), self.slot(j + 1));
        hermite(
            &self.states[a],
            &self.derivs_right[a],
            &self.states[b],
            &self.derivs_left[b],
            s,
            h,
        )
        .i
    }

    /// Infected component at an exact node index for stage-start reads:
    /// zero history for negative indices, the stored initial value at
    /// exactly 0.
    fn infected_node(&self, k: i64) -> f64 {
        if k < 0 {
            0.0
        } else {
            self.states[self.slot(k as u64)].i
        }
    }

    /// Stage-end variant of [`History::infected_node`]: at the initial jump
    /// (index 0) the pre-history left limit applies, as in
    /// [`History::infected`].
    fn infected_node_left(&self, k: i64) -> f64 {
        if k <= 0 {
            0.0
        } else {
            self.states[self.slot(k as u64)].i
        }
    }
}

/// Integrate the delayed system from t = 0 to at least cfg.t_end.
///
/// Classical 4-stage Runge-Kutta; each stage's delayed values I(t - tau_j)
/// come from the stored dense output (zero history for arguments < 0, the
/// initial value at exactly 0). With both delays zero this is a plain ODE
/// RK4 run. The returned trajectory records every `record_every`-th node,
/// always including t = 0 and the final node.
pub fn integrate<M: DelayedRhs>(
    model: &M,
    init: EpidemicState,
    delays: (f64, f64),
    cfg: &StepConfig,
) -> Result<Trajectory, DdeError> {
    let (tau1, tau2) = delays;
    for tau in [tau1, tau2] {
        if !tau.is_finite() || tau < 0.0 {
            return Err(DdeError::InvalidDelay { value: tau });
        }
    }
    for (name, value) in [("S", init.s), ("I", init.i), ("R", init.r)] {
        if !value.is_finite() || value < 0.0 {
            return Err(DdeError::InvalidInit {
                component: name,
                value,
            });
        }
    }
    let h = cfg.h;
    for tau in [tau1, tau2] {
        if tau > 0.0 && h > tau / 10.0 * (1.0 + 1e-12) {
            return Err(DdeError::StepTooLarge {
                h,
                limit: tau / 10.0,
            });
        }
    }

    let lag1 = Lag::resolve(tau1, h);
    let lag2 = Lag::resolve(tau2, h);
    let stride = cfg.record_every as u64;
    let n_steps = {
        let n = (cfg.t_end / h).ceil().max(1.0) as u64;
        n.div_ceil(stride) * stride
    };

    let window = (lag1.max_steps().max(lag2.max_steps()) + 4) as usize;
    let mut history = History::new(window);

    let n_rec = (n_steps / stride + 1) as usize;
    let mut times = Vec::with_capacity(n_rec);
    let mut states = Vec::with_capacity(n_rec);
    let mut derivs = Vec::with_capacity(n_rec);

    let mut y = init;
    for k in 0..=n_steps {
        // delayed reads for the stage at the node itself
        let read_start = |lag: &Lag, own: f64| -> f64 {
            match lag {
                Lag::Zero => own,
                Lag::Whole(m) => history.infected_node(k as i64 - *m as i64),
                Lag::General(l) => history.infected(k as f64 - l, h),
            }
        };
        let d1 = model.rhs(&y, read_start(&lag1, y.i), read_start(&lag2, y.i));
        // On the node whose delayed argument is exactly the initial jump,
        // the left-side derivative (pre-jump read) differs from d1 and is
        // what the interval ending here must interpolate with.
        let hits_jump = |lag: &Lag| matches!(lag, Lag::Whole(m) if k == *m);
        let d1_left = if hits_jump(&lag1) || hits_jump(&lag2) {
            let left = |lag: &Lag, own: f64| -> f64 {
                match lag {
                    Lag::Zero => own,
                    Lag::Whole(m) => history.infected_node_left(k as i64 - *m as i64),
                    Lag::General(l) => history.infected(k as f64 - l, h),
                }
            };
            model.rhs(&y, left(&lag1, y.i), left(&lag2, y.i))
        } else {
            d1
        };
        history.push(y, d1, d1_left);
        if k % stride == 0 {
            times.push(k as f64 * h);
            states.push(y);
            derivs.push(d1);
        }
        if k == n_steps {
            break;
        }

        let read_mid = |lag: &Lag, own: f64| -> f64 {
            match lag {
                Lag::Zero => own,
                Lag::Whole(m) => history.infected((k as i64 - *m as i64) as f64 + 0.5, h),
                Lag::General(l) => history.infected(k as f64 + 0.5 - l, h),
            }
        };
        let read_end = |lag: &Lag, own: f64| -> f64 {
            match lag {
                Lag::Zero => own,
                Lag::Whole(m) => history.infected_node_left(k as i64 + 1 - *m as i64),
                Lag::General(l) => history.infected(k as f64 + 1.0 - l, h),
            }
        };

        let y2 = y + d1 * (0.5 * h);
        let d2 = model.rhs(&y2, read_mid(&lag1, y2.i), read_mid(&lag2, y2.i));
        let y3 = y + d2 * (0.5 * h);
        let d3 = model.rhs(&y3, read_mid(&lag1, y3.i), read_mid(&lag2, y3.i));
        let y4 = y + d3 * h;
        let d4 = model.rhs(&y4, read_end(&lag1, y4.i), read_end(&lag2, y4.i));

        let next = y + (d1 + d2 * 2.0 + d3 * 2.0 + d4) * (h / 6.0);
        let t_next = (k + 1) as f64 * h;
        if !next.is_finite() {
            return Err(DdeError::NonFiniteState { t: t_next });
        }
        let (component, value) = next.min_component();
        if value < NEGATIVITY_TOLERANCE {
            return Err(DdeError::NegativeState {
                t: t_next,
                component,
                value,
            });
        }
        y = next;
    }

    Ok(Trajectory {
        spacing: h * stride as f64,
        times,
        states,
        derivs,
        init_i: init.i,
    })
}
