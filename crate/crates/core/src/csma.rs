//! Saturated CSMA/CA contention on one sub-channel: the joint fixed point of
//! per-slot transmit probability and conditional collision probability,
//! slot-outcome probabilities and channel utilization.

use crate::config::MacTimings;

pub const DEFAULT_TOL: f64 = 1e-12;
const DAMPING: f64 = 0.5;
const MAX_DAMPED_ITERS: usize = 2_000;
const MAX_BISECTION_ITERS: usize = 200;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CsmaError {
    #[error("invalid contender count {0}")]
    InvalidCount(f64),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("degenerate utilization denominator")]
    DegenerateDenominator,
}

/// How a fixed point was located.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    DampedIteration,
    Bisection,
}

/// Backoff transmit probability for a station whose transmissions collide
/// with probability `p`, minimum window `w_min` and `stages` doublings.
///
/// Uses `(1 - (2p)^l) / (1 - 2p) = sum_{i<l} (2p)^i`, which is regular at
/// `2p = 1`.
pub fn transmit_probability(p: f64, w_min: u32, stages: u32) -> f64 {
    let w = f64::from(w_min);
    2.0 / ((w + 1.0) + p * w * doubling_sum(2.0 * p, stages))
}

/// `sum_{i=0}^{stages-1} x^i`
pub(crate) fn doubling_sum(x: f64, stages: u32) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for _ in 0..stages {
        sum += term;
        term *= x;
    }
    sum
}

/// Probability that at least one of the other `n - 1` stations transmits.
pub fn collision_probability(tau: f64, n: f64) -> f64 {
    1.0 - (1.0 - tau).powf(n - 1.0)
}

/// Solved contention state of `n_contenders` saturated stations.
#[derive(Debug, Clone, PartialEq)]
pub struct ContentionPoint {
    /// Contender count the formulas were evaluated at (at least 1).
    pub n_contenders: f64,
    /// Count the caller asked for, before clamping.
    pub requested: f64,
    /// Set when `requested < 1` was raised to one contender.
    pub clamped: bool,
    pub tau: f64,
    pub p_coll: f64,
    pub p_success: f64,
    pub p_idle: f64,
    pub p_fail: f64,
    pub utilization: f64,
    /// `|tau - F(p(tau))|` at the returned point.
    pub residual: f64,
    pub method: SolveMethod,
}

impl ContentionPoint {
    /// Slot outcome probabilities of `n` stations each transmitting with
    /// probability `tau`.
    fn outcomes(tau: f64, n: f64) -> (f64, f64, f64) {
        let p_success = n * tau * (1.0 - tau).powf(n - 1.0);
        let p_idle = (1.0 - tau).powf(n);
        let p_fail = (1.0 - p_success - p_idle).max(0.0);
        (p_success, p_idle, p_fail)
    }
}

/// Channel utilization: fraction of channel time spent in successful
/// exchanges.
pub fn utilization(point: &ContentionPoint, timings: &MacTimings) -> Result<f64, CsmaError> {
    utilization_of(point.p_success, point.p_idle, point.p_fail, timings)
}

pub(crate) fn utilization_of(p_success: f64, p_idle: f64, p_fail: f64, timings: &MacTimings) -> Result<f64, CsmaError> {
    let ts = timings.success_time().as_secs_f64();
    let tc = timings.collision_time().as_secs_f64();
    let slot = timings.slot.as_secs_f64();
    let busy = p_success * ts;
    let denom = p_idle * slot + busy + p_fail * tc;
    if !(denom > 0.0) {
        return Err(CsmaError::DegenerateDenominator);
    }
    Ok(busy / denom)
}

/// Solves the transmit/collision fixed point for `n_contenders` stations.
///
/// Counts in `(0, 1)` are evaluated at one contender and flagged; the count
/// may be fractional since the optimizer feeds expected populations.
pub fn solve_contention(n_contenders: f64, timings: &MacTimings, tol: f64) -> Result<ContentionPoint, CsmaError> {
    if !(n_contenders > 0.0) || !n_contenders.is_finite() {
        return Err(CsmaError::InvalidCount(n_contenders));
    }
    if !(tol > 0.0) {
        return Err(CsmaError::InvalidTolerance(tol));
    }
    let clamped = n_contenders < 1.0;
    let n = n_contenders.max(1.0);
    let (w, l) = (timings.w_min, timings.backoff_stages);
    let map = |tau: f64| transmit_probability(collision_probability(tau, n), w, l);

    let (tau, method) = match damped_fixed_point(&map, transmit_probability(0.0, w, l), tol) {
        Some(tau) => (tau, SolveMethod::DampedIteration),
        None => (bisect(|t| t - map(t), 0.0, 1.0, tol)?, SolveMethod::Bisection),
    };
    let residual = (tau - map(tau)).abs();
    if residual > tol {
        return Err(CsmaError::NoConvergence { iterations: MAX_BISECTION_ITERS, residual });
    }
    let p_coll = collision_probability(tau, n);
    let (p_success, p_idle, p_fail) = ContentionPoint::outcomes(tau, n);
    let utilization = utilization_of(p_success, p_idle, p_fail, timings)?;
    Ok(ContentionPoint {
        n_contenders: n,
        requested: n_contenders,
        clamped,
        tau,
        p_coll,
        p_success,
        p_idle,
        p_fail,
        utilization,
        residual,
        method,
    })
}

/// Damped iteration `x <- x + d (f(x) - x)`. Gives up (returns `None`) when
/// the residual stops shrinking, which signals oscillation.
pub(crate) fn damped_fixed_point(f: &impl Fn(f64) -> f64, start: f64, tol: f64) -> Option<f64> {
    let mut x = start;
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    for _ in 0..MAX_DAMPED_ITERS {
        let fx = f(x);
        let r = (fx - x).abs();
        if r <= tol {
            return Some(x);
        }
        if r < best * 0.999 {
            best = r;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled > 25 {
                return None;
            }
        }
        x += DAMPING * (fx - x);
        if !x.is_finite() {
            return None;
        }
    }
    None
}

/// Bisection for a root of `g` on `[lo, hi]` with `g(lo) <= 0 <= g(hi)`.
/// Returns the endpoint of the final bracket with the smaller `|g|`.
pub(crate) fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64, CsmaError> {
    let (mut g_lo, mut g_hi) = (g(lo), g(hi));
    if g_lo > 0.0 || g_hi < 0.0 {
        return Err(CsmaError::NoConvergence { iterations: 0, residual: g_lo.abs().min(g_hi.abs()) });
    }
    for _ in 0..MAX_BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g_mid = g(mid);
        if g_mid.abs() <= tol * 1e-3 {
            return Ok(mid);
        }
        if g_mid < 0.0 {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
            g_hi = g_mid;
        }
    }
    Ok(if g_lo.abs() <= g_hi.abs() { lo } else { hi })
}
