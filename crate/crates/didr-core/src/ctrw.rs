//! Agent-based discrete-time Monte Carlo simulation of the underlying
//! compartment process: exponential death, Poisson births, recovery ages
//! pre-sampled from the delay exponential distribution, and an
//! age-of-infection dependent infectivity weight rho.
//!
//! Each step applies, in fixed order: births, deaths, recoveries,
//! infections, and age advance. Pre-sampling the recovery age at infection
//! (competing with death) is exact in distribution for the recovery channel;
//! the Bernoulli stepping of deaths and infections carries O(dt) bias, which
//! the [`OracleConfig`] step-size bound keeps below the tolerances used in
//! the mean-field comparisons.
//!
//! Replicates are embarrassingly parallel; each owns a counter-based RNG
//! stream derived from (seed, replicate index), and ensemble aggregation
//! uses exact integer sums so results are bit-identical regardless of
//! thread scheduling.

use crate::dde::{Compartment, EpidemicState};
use crate::dexp::{self, DexpError};
use crate::sir::ModelParams;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{name} must be positive and finite, got {value}")]
    InvalidConfig { name: &'static str, value: f64 },
    #[error("dt = {dt} exceeds the stability bound {limit} (smallest timescale / 20)")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("ensemble statistics need at least 2 replicates, got {replicates}")]
    TooFewReplicates { replicates: usize },
    #[error("infectivity evaluation failed: {0}")]
    Infectivity(#[from] DexpError),
}

/// One individual. Infection age is stored as a whole number of steps so
/// ages are exact and the per-age infectivity table can be indexed
/// directly; `scheduled_recovery_age` is pre-sampled at infection and is
/// infinite when mu = 0.
#[derive(Debug, Clone, Copy)]
pub struct Agent {
    pub compartment: Compartment,
    pub age_steps: u32,
    pub scheduled_recovery_age: f64,
}

impl Agent {
    pub fn susceptible() -> Self {
        Agent {
            compartment: Compartment::Susceptible,
            age_steps: 0,
            scheduled_recovery_age: f64::INFINITY,
        }
    }

    pub fn infection_age(&self, dt: f64) -> f64 {
        self.age_steps as f64 * dt
    }
}

/// Integer compartment totals at one recording time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counts {
    pub s: u64,
    pub i: u64,
    pub r: u64,
}

impl Counts {
    pub fn of(pop: &[Agent]) -> Counts {
        let mut c = Counts::default();
        for a in pop {
            match a.compartment {
                Compartment::Susceptible => c.s += 1,
                Compartment::Infected => c.i += 1,
                Compartment::Recovered => c.r += 1,
            }
        }
        c
    }

    pub fn as_state(&self) -> EpidemicState {
        EpidemicState::new(self.s as f64, self.i as f64, self.r as f64)
    }
}

/// Scenario for one oracle ensemble.
#[derive(Debug, Clone)]
pub struct OracleConfig {
    pub params: ModelParams,
    pub dt: f64,
    pub s0: u64,
    pub i0: u64,
    pub r0: u64,
    pub t_end: f64,
    pub replicates: usize,
    pub seed: u64,
}

impl OracleConfig {
    /// dt must stay a factor 20 below every timescale in play: both delays,
    /// the mean recovery age 1/mu, and the fastest plausible infection rate
    /// 1/(omega N0).
    pub fn validate(&self) -> Result<(), OracleError> {
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(OracleError::InvalidConfig {
                name: "dt",
                value: self.dt,
            });
        }
        if !self.t_end.is_finite() || self.t_end <= 0.0 {
            return Err(OracleError::InvalidConfig {
                name: "t_end",
                value: self.t_end,
            });
        }
        let p = &self.params;
        let n0 = (self.s0 + self.i0 + self.r0) as f64;
        let mut limit = f64::INFINITY;
        for scale in [
            (p.tau1() > 0.0).then_some(p.tau1()),
            (p.tau2() > 0.0).then_some(p.tau2()),
            (p.mu() > 0.0).then(|| 1.0 / p.mu()),
            (p.omega() > 0.0 && n0 > 0.0).then(|| 1.0 / (p.omega() * n0)),
        ]
        .into_iter()
        .flatten()
        {
            limit = limit.min(scale / 20.0);
        }
        if self.dt > limit * (1.0 + 1e-12) {
            return Err(OracleError::StepTooLarge { dt: self.dt, limit });
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).ceil().max(1.0) as usize
    }
}

/// Pointwise ensemble mean and standard error of the mean.
#[derive(Debug, Clone)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub mean: Vec<EpidemicState>,
    pub stderr: Vec<EpidemicState>,
}

/// Instantaneous recovery rate at infection age a: mu phi(a - tau2) / phi(a),
/// zero before the delay tau2 (the delay-exponential support starts there).
pub fn recovery_hazard(age: f64, p: &ModelParams) -> Result<f64, DexpError> {
    let d = p.recovery_distribution();
    if age.is_nan() {
        return Err(DexpError::InvalidTime { t: age });
    }
    if age < p.tau2() {
        return Ok(0.0);
    }
    let num = dexp::survival_phi(age - p.tau2(), &d)?;
    let den = dexp::survival_phi(age, &d)?;
    if den == 0.0 {
        return Err(DexpError::SurvivalUnderflow { t: age });
    }
    Ok(p.mu() * num / den)
}

/// Per-step transition kernel with the per-age infectivity table memoized
/// (agent ages are exact multiples of dt).
pub struct PopulationStepper {
    params: ModelParams,
    dt: f64,
    p_death: f64,
    births: Option<Poisson<f64>>,
    rho_table: Vec<f64>,
}

impl PopulationStepper {
    pub fn new(params: &ModelParams, dt: f64) -> Result<Self, OracleError> {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(OracleError::InvalidConfig {
                name: "dt",
                value: dt,
            });
        }
        let births = if params.lambda() > 0.0 {
            Some(Poisson::new(params.lambda() * dt).expect("positive finite rate"))
        } else {
            None
        };
        Ok(Self {
            params: *params,
            dt,
            p_death: -(-params.gamma() * dt).exp_m1(),
            births,
            rho_table: Vec::new(),
        })
    }

    fn rho_at(&mut self, age_steps: u32) -> Result<f64, OracleError> {
        let idx = age_steps as usize;
        while self.rho_table.len() <= idx {
            let age = self.rho_table.len() as f64 * self.dt;
            let rho = dexp::infectivity_rho(
                age,
                self.params.mu(),
                self.params.tau1(),
                self.params.tau2(),
            )?;
            self.rho_table.push(rho);
        }
        Ok(self.rho_table[idx])
    }

    fn sample_recovery<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64, OracleError> {
        if self.params.mu() == 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(dexp::sample_recovery_age(
            rng,
            &self.params.recovery_distribution(),
        )?)
    }

    /// Advance the population by one step of dt, in fixed order:
    /// births, deaths, recoveries, infections, age advance.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        pop: &mut Vec<Agent>,
        rng: &mut R,
    ) -> Result<(), OracleError> {
        // (1) births enter as susceptibles
        if let Some(births) = &self.births {
            let n = births.sample(rng) as u64;
            for _ in 0..n {
                pop.push(Agent::susceptible());
            }
        }

        // (2) every agent faces the same death probability; a death cancels
        // any scheduled recovery (competing risks)
        if self.p_death > 0.0 {
            let p_death = self.p_death;
            pop.retain(|_| rng.random::<f64>() >= p_death);
        }

        // (3) infected agents whose age has reached their pre-sampled
        // recovery age move to R
        for agent in pop.iter_mut() {
            if agent.compartment == Compartment::Infected
                && agent.infection_age(self.dt) >= agent.scheduled_recovery_age
            {
                agent.compartment = Compartment::Recovered;
            }
        }

        // (4) total force of infection from the age-dependent weights
        if self.params.omega() > 0.0 {
            let mut weight = 0.0;
            for agent in pop.iter() {
                if agent.compartment == Compartment::Infected {
                    weight += self.rho_at(agent.age_steps)?;
                }
            }
            let force = self.params.omega() * weight;
            if force > 0.0 {
                let p_infect = -(-force * self.dt).exp_m1();
                for agent in pop.iter_mut() {
                    if agent.compartment == Compartment::Susceptible
                        && rng.random::<f64>() < p_infect
                    {
                        agent.compartment = Compartment::Infected;
                        agent.age_steps = 0;
                        agent.scheduled_recovery_age = self.sample_recovery(rng)?;
                    }
                }
            }
        }

        // (5) ages advance
        for agent in pop.iter_mut() {
            if agent.compartment == Compartment::Infected {
                agent.age_steps += 1;
            }
        }
        Ok(())
    }
}

/// One-shot convenience wrapper around [`PopulationStepper::step`].
pub fn step_population<R: Rng + ?Sized>(
    pop: &mut Vec<Agent>,
    params: &ModelParams,
    dt: f64,
    rng: &mut R,
) -> Result<(), OracleError> {
    PopulationStepper::new(params, dt)?.step(pop, rng)
}

fn initial_population<R: Rng + ?Sized>(
    cfg: &OracleConfig,
    stepper: &PopulationStepper,
    rng: &mut R,
) -> Result<Vec<Agent>, OracleError> {
    let mut pop = Vec::with_capacity((cfg.s0 + cfg.i0 + cfg.r0) as usize);
    for _ in 0..cfg.s0 {
        pop.push(Agent::susceptible());
    }
    for _ in 0..cfg.i0 {
        let recovery = stepper.sample_recovery(rng)?;
        pop.push(Agent {
            compartment: Compartment::Infected,
            age_steps: 0,
            scheduled_recovery_age: recovery,
        });
    }
    for _ in 0..cfg.r0 {
        pop.push(Agent {
            compartment: Compartment::Recovered,
            age_steps: 0,
            scheduled_recovery_age: f64::INFINITY,
        });
    }
    Ok(pop)
}

/// Run one replicate, deterministic in (cfg.seed, replicate). Counts are
/// recorded at every step, including t = 0.
pub fn run_replicate(cfg: &OracleConfig, replicate: usize) -> Result<Vec<Counts>, OracleError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(replicate as u64);
    let mut stepper = PopulationStepper::new(&cfg.params, cfg.dt)?;
    let mut pop = initial_population(cfg, &stepper, &mut rng)?;
    let n_steps = cfg.n_steps();
    let mut counts = Vec::with_capacity(n_steps + 1);
    counts.push(Counts::of(&pop));
    for _ in 0..n_steps {
        stepper.step(&mut pop, &mut rng)?;
        counts.push(Counts::of(&pop));
    }
    Ok(counts)
}

#[derive(Clone)]
struct Accumulator {
    sum: Vec<[u64; 3]>,
    sumsq: Vec<[u64; 3]>,
}

impl Accumulator {
    fn new(len: usize) -> Self {
        Self {
            sum: vec![[0; 3]; len],
            sumsq: vec![[0; 3]; len],
        }
    }

    fn add_replicate(mut self, counts: &[Counts]) -> Self {
        debug_assert_eq!(counts.len(), self.sum.len());
        for (k, c) in counts.iter().enumerate() {
            for (j, v) in [c.s, c.i, c.r].into_iter().enumerate() {
                self.sum[k][j] += v;
                self.sumsq[k][j] += v * v;
            }
        }
        self
    }

    fn merge(mut self, other: Accumulator) -> Self {
        for k in 0..self.sum.len() {
            for j in 0..3 {
                self.sum[k][j] += other.sum[k][j];
                self.sumsq[k][j] += other.sumsq[k][j];
            }
        }
        self
    }
}

/// Pointwise mean and standard error over `cfg.replicates` independent
/// replicates, executed in parallel. Aggregation is an exact integer
/// reduction, so the result does not depend on scheduling.
pub fn ensemble_mean(cfg: &OracleConfig) -> Result<EnsembleStats, OracleError> {
    cfg.validate()?;
    if cfg.replicates < 2 {
        return Err(OracleError::TooFewReplicates {
            replicates: cfg.replicates,
        });
    }
    let len = cfg.n_steps() + 1;
    let acc = (0..cfg.replicates)
        .into_par_iter()
        .try_fold(
            || Accumulator::new(len),
            |acc, rep| run_replicate(cfg, rep).map(|counts| acc.add_replicate(&counts)),
        )
        .try_reduce(|| Accumulator::new(len), |a, b| Ok(a.merge(b)))?;

    let n = cfg.replicates as f64;
    let mut times = Vec::with_capacity(len);
    let mut mean = Vec::with_capacity(len);
    let mut stderr = Vec::with_capacity(len);
    for k in 0..len {
        times.push(k as f64 * cfg.dt);
        let mut m = [0.0; 3];
        let mut se = [0.0; 3];
        for j in 0..3 {
            let s = acc.sum[k][j] as f64;
            let sq = acc.sumsq[k][j] as f64;
            m[j] = s / n;
            let var = ((sq - s * s / n) / (n - 1.0)).max(0.0);
            se[j] = (var / n).sqrt();
        }
        mean.push(EpidemicState::new(m[0], m[1], m[2]));
        stderr.push(EpidemicState::new(se[0], se[1], se[2]));
    }
    Ok(EnsembleStats {
        times,
        mean,
        stderr,
    })
}
