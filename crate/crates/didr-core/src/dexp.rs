//! The delay exponential distribution.
//!
//! `dexp(-mu t; -mu tau)` is the power-series solution of the delay equation
//! y'(t) = -mu y(t - tau) with y = 0 for t < 0 and y(0) = 1:
//!
//! ```text
//! dexp(t) = sum_{n=0}^{floor(t/tau)} (-mu)^n (t - n tau)^n / n!
//! ```
//!
//! For 0 <= mu*tau <= 1/e it is a valid survival function; this module
//! evaluates it together with the derived waiting-time density, the delayed
//! infectivity ratio rho, and inverse-CDF sampling of recovery ages.
//!
//! The series terms alternate in sign and can exceed the final sum by many
//! orders of magnitude at large t, so terms and sum are evaluated in
//! double-double arithmetic. When even that cannot certify relative accuracy,
//! the result is either certified negligible (returned as exactly 0) or a
//! [`DexpError::PrecisionLoss`] is raised.

use crate::dd::{Dd, DD_EPS};
use rand::Rng;
use thiserror::Error;

/// Relative-precision guard: evaluation fails once the largest series term
/// exceeds the result by this factor (double-double carries ~32 digits;
/// 1e27 leaves at least four trustworthy digits).
const GUARD_RATIO: f64 = 1e27;

/// Survival mass below this is numerically zero: when relative precision is
/// gone but the certified absolute error bound and the value are both under
/// this threshold, the evaluation returns exactly 0.0.
const NEGLIGIBLE: f64 = 1e-12;

/// Absolute tolerance for inverse-CDF bisection.
const BISECT_TOL: f64 = 1e-10;
const BISECT_MAX_ITERS: usize = 200;

/// Upper bound mu*tau <= 1/e for the delay exponential to be a survival
/// function. Single source of truth so every validation agrees to the ulp.
#[inline]
pub fn survival_bound() -> f64 {
    (-1.0f64).exp()
}

#[derive(Debug, Error)]
pub enum DexpError {
    #[error("parameter {name} must be finite and nonnegative, got {value}")]
    InvalidParam { name: &'static str, value: f64 },
    #[error("not a valid survival function: mu*tau = {product} exceeds 1/e = {bound}")]
    SurvivalBound { product: f64, bound: f64 },
    #[error("time argument must be finite and nonnegative, got {t}")]
    InvalidTime { t: f64 },
    #[error(
        "catastrophic cancellation at t = {t}: max |term| = {max_term:.3e} \
         against result {value:.3e}"
    )]
    PrecisionLoss { t: f64, max_term: f64, value: f64 },
    #[error("survival function underflowed to zero at t = {t}; ratio undefined")]
    SurvivalUnderflow { t: f64 },
    #[error("sampling requires mu > 0")]
    NonPositiveMu,
    #[error("quantile must lie strictly inside (0, 1), got {u}")]
    InvalidQuantile { u: f64 },
    #[error("inverse-CDF bisection did not converge within {iterations} steps")]
    NonConvergent { iterations: usize },
}

/// Rate mu and delay tau of one delay exponential distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DexpParams {
    mu: f64,
    tau: f64,
}

impl DexpParams {
    /// Requires mu >= 0 and tau >= 0, both finite. The survival bound
    /// mu*tau <= 1/e is checked separately by [`validate_survival`].
    pub fn new(mu: f64, tau: f64) -> Result<Self, DexpError> {
        if !mu.is_finite() || mu < 0.0 {
            return Err(DexpError::InvalidParam {
                name: "mu",
                value: mu,
            });
        }
        if !tau.is_finite() || tau < 0.0 {
            return Err(DexpError::InvalidParam {
                name: "tau",
                value: tau,
            });
        }
        Ok(Self { mu, tau })
    }

    #[inline]
    pub fn mu(&self) -> f64 {
        self.mu
    }

    #[inline]
    pub fn tau(&self) -> f64 {
        self.tau
    }
}

/// Accepts iff 0 <= mu*tau <= 1/e (up to one part in 1e12, so that
/// mu = e^-1/tau round-trips through f64 arithmetic).
pub fn validate_survival(p: &DexpParams) -> Result<(), DexpError> {
    let product = p.mu * p.tau;
    let bound = survival_bound();
    if product <= bound * (1.0 + 1e-12) {
        Ok(())
    } else {
        Err(DexpError::SurvivalBound { product, bound })
    }
}

/// Evaluate the delay exponential series at t.
///
/// Returns 0 for t < 0 (every Heaviside factor vanishes) and exp(-mu t)
/// for tau = 0 (the analytic limit). Errors with
/// [`DexpError::PrecisionLoss`] when cancellation destroys both relative
/// and absolute accuracy.
pub fn dexp_eval(t: f64, p: &DexpParams) -> Result<f64, DexpError> {
    if t.is_nan() {
        return Err(DexpError::InvalidTime { t });
    }
    if t < 0.0 {
        return Ok(0.0);
    }
    if p.tau == 0.0 {
        return Ok((-p.mu * t).exp());
    }
    if p.mu == 0.0 || t < p.tau {
        // only the n = 0 term survives
        return Ok(1.0);
    }

    let n_max = (t / p.tau).floor() as u64;
    let mut sum = Dd::ZERO;
    let mut factor = Dd::ONE; // (-mu)^n / n!
    let mut max_term = 0.0f64;
    let mut n_terms = 0u64;
    for n in 0..=n_max {
        let base = Dd::from_f64(t).sub(Dd::prod_f64(n as f64, p.tau));
        let term = factor.mul(base.powi(n as u32));
        sum = sum.add(term);
        let mag = term.abs_hi();
        if mag > max_term {
            max_term = mag;
        }
        n_terms = n + 1;
        // Once past the envelope maximum the terms shrink at least
        // geometrically; a tail 60 digits below the largest term can never
        // surface again.
        if n >= 1 && (n + 1) as f64 >= 2.0 * p.mu * t && mag < 1e-60 * max_term {
            break;
        }
        factor = factor.mul_f64(-p.mu).div_f64((n + 1) as f64);
    }

    let value = sum.to_f64();
    if max_term <= GUARD_RATIO * value.abs() {
        return Ok(value);
    }
    let noise = max_term * (n_terms as f64) * DD_EPS * 4.0;
    if value.abs().max(noise) <= NEGLIGIBLE {
        return Ok(0.0);
    }
    Err(DexpError::PrecisionLoss { t, max_term, value })
}

/// Survival function phi(t) of the delay exponential: the probability of
/// not yet having recovered at infection age t. Requires valid survival
/// parameters and t >= 0; the value is clamped into [0, 1].
pub fn survival_phi(t: f64, p: &DexpParams) -> Result<f64, DexpError> {
    validate_survival(p)?;
    if !t.is_finite() || t < 0.0 {
        return Err(DexpError::InvalidTime { t });
    }
    Ok(dexp_eval(t, p)?.clamp(0.0, 1.0))
}

/// Waiting-time density psi(t) = -dphi/dt. Termwise differentiation of the
/// series gives the closed form mu * dexp(t - tau) for t >= tau and 0 on
/// [0, tau); the jump at t = tau is taken right-continuously.
pub fn density_psi(t: f64, p: &DexpParams) -> Result<f64, DexpError> {
    validate_survival(p)?;
    if !t.is_finite() || t < 0.0 {
        return Err(DexpError::InvalidTime { t });
    }
    if t < p.tau {
        return Ok(0.0);
    }
    Ok(p.mu * dexp_eval(t - p.tau, p)?.clamp(0.0, 1.0))
}

/// Age-dependent infectivity ratio rho(t) = Theta(t - tau1) *
/// phi(t - tau1) / phi(t), with phi the survival of (mu, tau2).
///
/// Zero before the switch-on age tau1, and at least 1 afterwards (phi is
/// nonincreasing). Errors when phi(t) has underflowed to zero.
pub fn infectivity_rho(t: f64, mu: f64, tau1: f64, tau2: f64) -> Result<f64, DexpError> {
    if !tau1.is_finite() || tau1 < 0.0 {
        return Err(DexpError::InvalidParam {
            name: "tau1",
            value: tau1,
        });
    }
    if t.is_nan() {
        return Err(DexpError::InvalidTime { t });
    }
    let p = DexpParams::new(mu, tau2)?;
    validate_survival(&p)?;
    if t < tau1 {
        return Ok(0.0);
    }
    let num = survival_phi(t - tau1, &p)?;
    let den = survival_phi(t, &p)?;
    if den == 0.0 {
        return Err(DexpError::SurvivalUnderflow { t });
    }
    Ok(num / den)
}

/// Recovery age at survival quantile u, i.e. the t with phi(t) = u,
/// located by bracket doubling and bisection to 1e-10.
///
/// phi is identically 1 on [0, tau], so every age is >= tau.
pub fn recovery_age_for_quantile(u: f64, p: &DexpParams) -> Result<f64, DexpError> {
    validate_survival(p)?;
    if p.mu <= 0.0 {
        return Err(DexpError::NonPositiveMu);
    }
    if !(u > 0.0 && u < 1.0) {
        return Err(DexpError::InvalidQuantile { u });
    }
    let mut lo = p.tau;
    let mut hi = p.tau + 1.0 / p.mu;
    let mut doublings = 0;
    while survival_phi(hi, p)? > u {
        lo = hi;
        hi = p.tau + 2.0 * (hi - p.tau);
        doublings += 1;
        if doublings > 200 {
            return Err(DexpError::NonConvergent {
                iterations: doublings,
            });
        }
    }
    let mut iters = 0;
    while hi - lo > BISECT_TOL {
        if iters >= BISECT_MAX_ITERS {
            return Err(DexpError::NonConvergent { iterations: iters });
        }
        let mid = 0.5 * (lo + hi);
        if survival_phi(mid, p)? > u {
            lo = mid;
        } else {
            hi = mid;
        }
        iters += 1;
    }
    Ok(0.5 * (lo + hi))
}

/// Draw one recovery age from the delay exponential distribution by
/// inverse-CDF sampling on a caller-owned random stream.
pub fn sample_recovery_age<R: Rng + ?Sized>(rng: &mut R, p: &DexpParams) -> Result<f64, DexpError> {
    let mut u: f64 = rng.random();
    while u <= 0.0 {
        u = rng.random();
    }
    recovery_age_for_quantile(u, p)
}
