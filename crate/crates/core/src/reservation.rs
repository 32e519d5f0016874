//! Negotiation-period contention of the reservation scheme: the transmit /
//! collision fixed point of stations that alternate between idling and
//! contending, the per-slot handshake success probability, and the number
//! of reservations and payload packets it yields per frame.

use crate::config::{MacTimings, SystemConfig};
use crate::csma::{bisect, damped_fixed_point, doubling_sum, SolveMethod};

pub const DEFAULT_TOL: f64 = 1e-12;
const MONOTONICITY_SAMPLES: usize = 64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReservationError {
    #[error("fewer than one effective contender (n_gas * q = {0})")]
    SubunitPopulation(f64),
    #[error("activity probability must lie in (0, 1], got {0}")]
    InvalidActivity(f64),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("no convergence (residual {0:e})")]
    NoConvergence(f64),
}

/// Backoff parameters of the negotiation contention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Negotiation {
    /// Probability that a user is in the negotiation period.
    pub activity: f64,
    pub w_min: u32,
    pub backoff_stages: u32,
}

impl Negotiation {
    /// Uses the scenario's activity and the shared contention window.
    pub fn from_scenario(cfg: &SystemConfig, timings: &MacTimings) -> Self {
        Self::new(cfg.negotiation_activity(), timings)
    }

    pub fn new(activity: f64, timings: &MacTimings) -> Self {
        Self { activity, w_min: timings.w_min, backoff_stages: timings.backoff_stages }
    }

    /// Per-slot transmit probability of a station whose handshakes collide
    /// with probability `collision`.
    pub fn transmit_probability(&self, collision: f64) -> f64 {
        let q = self.activity;
        let w = f64::from(self.w_min);
        let backoff = (w + 1.0) + collision * w * doubling_sum(2.0 * collision, self.backoff_stages);
        2.0 * q / (q * backoff + 2.0 * (1.0 - q) * (1.0 - collision))
    }
}

/// Per-slot success probability of `contenders` stations each transmitting
/// with probability `eps`.
pub fn handshake_success(contenders: f64, eps: f64) -> f64 {
    contenders * eps * (1.0 - eps).powf(contenders - 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReservationPoint {
    /// Users on the relayed scheme (may be fractional).
    pub n_gas: f64,
    pub q: f64,
    pub epsilon: f64,
    pub varrho: f64,
    /// Per-slot probability of a successful reservation handshake.
    pub zeta_s: f64,
    /// Expected successful reservations per frame.
    pub n_reserved: f64,
    /// Payload packets per reserved user per frame; `None` when nobody
    /// reserves.
    pub step: Option<f64>,
    /// Frame share of one reserved user, `payload * step / frame`.
    pub beta: Option<f64>,
    pub residual: f64,
    pub method: SolveMethod,
    /// More expected reservations than there are HAPs.
    pub exceeds_haps: bool,
}

impl ReservationPoint {
    /// Whether the frame share lies strictly between 0 and 1. It does not
    /// when fewer than `reserved / frame` users reserve on average.
    pub fn beta_feasible(&self) -> bool {
        self.beta.is_some_and(|b| b > 0.0 && b < 1.0)
    }

    /// Reservations an executor can actually grant: `floor(n_reserved)`.
    pub fn whole_reservations(&self) -> usize {
        self.n_reserved.floor() as usize
    }
}

/// Outcome of dividing the reserved period among successful users.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Capacity {
    /// Nobody reserves; the step is undefined.
    Empty,
    Reserved { n_reserved: f64, step: f64 },
}

/// Reservations per frame and the packets each may send, such that
/// `n_reserved * step * payload` fills the reserved period.
pub fn reservation_capacity(point: &ReservationPoint, timings: &MacTimings) -> Capacity {
    let n_reserved = timings.negotiation.as_secs_f64() * point.zeta_s / timings.handshake_time().as_secs_f64();
    if !(n_reserved > 0.0) {
        return Capacity::Empty;
    }
    let step = timings.reserved_time().as_secs_f64() / (n_reserved * timings.payload.as_secs_f64());
    Capacity::Reserved { n_reserved, step }
}

/// Solves the negotiation fixed point for `n_gas` users with the
/// scenario's activity probability.
pub fn solve_reservation(
    n_gas: f64,
    cfg: &SystemConfig,
    timings: &MacTimings,
    tol: f64,
) -> Result<ReservationPoint, ReservationError> {
    let mut rp = solve_negotiation(n_gas, &Negotiation::from_scenario(cfg, timings), timings, tol)?;
    rp.exceeds_haps = rp.n_reserved > cfg.n_haps as f64;
    Ok(rp)
}

/// Solves the negotiation fixed point for explicit backoff parameters.
pub fn solve_negotiation(
    n_gas: f64,
    model: &Negotiation,
    timings: &MacTimings,
    tol: f64,
) -> Result<ReservationPoint, ReservationError> {
    let q = model.activity;
    if !(q > 0.0 && q <= 1.0) {
        return Err(ReservationError::InvalidActivity(q));
    }
    if !(tol > 0.0) {
        return Err(ReservationError::InvalidTolerance(tol));
    }
    let contenders = n_gas * q;
    if !(contenders >= 1.0) || !contenders.is_finite() {
        return Err(ReservationError::SubunitPopulation(contenders));
    }
    let collision = |eps: f64| 1.0 - (1.0 - eps).powf(contenders - 1.0);
    let map = |eps: f64| model.transmit_probability(collision(eps));
    let gap = |eps: f64| eps - map(eps);

    let monotone = (0..=MONOTONICITY_SAMPLES)
        .map(|i| gap(i as f64 / MONOTONICITY_SAMPLES as f64))
        .collect::<Vec<_>>()
        .windows(2)
        .all(|w| w[1] >= w[0]);
    let solved = if monotone {
        bisect(gap, 0.0, 1.0, tol).ok().map(|e| (e, SolveMethod::Bisection))
    } else {
        log::warn!("negotiation map not monotone at n_gas = {n_gas}; using damped iteration");
        damped_fixed_point(&map, map(0.0), tol)
            .map(|e| (e, SolveMethod::DampedIteration))
            .or_else(|| bisect(gap, 0.0, 1.0, tol).ok().map(|e| (e, SolveMethod::Bisection)))
    };
    let (epsilon, method) = solved.ok_or(ReservationError::NoConvergence(f64::NAN))?;
    let residual = gap(epsilon).abs();
    if residual > tol {
        return Err(ReservationError::NoConvergence(residual));
    }

    let varrho = collision(epsilon);
    let zeta_s = handshake_success(contenders, epsilon);
    let t_h = timings.negotiation.as_secs_f64();
    let t_hs = timings.handshake_time().as_secs_f64();
    let t_r = timings.reserved_time().as_secs_f64();
    let t_p = timings.payload.as_secs_f64();
    let n_reserved = t_h * zeta_s / t_hs;
    let step = (zeta_s > 0.0).then(|| t_r * t_hs / (t_p * t_h * zeta_s));
    let beta = step.map(|r| t_p * r / timings.frame.as_secs_f64());
    Ok(ReservationPoint {
        n_gas,
        q,
        epsilon,
        varrho,
        zeta_s,
        n_reserved,
        step,
        beta,
        residual,
        method,
        exceeds_haps: false,
    })
}
