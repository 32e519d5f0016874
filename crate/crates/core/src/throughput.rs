//! System throughput of the direct (contention) and relayed (reservation)
//! schemes, and the three operating regimes: mixed, direct-only and
//! relay-only.

use crate::config::{MacTimings, SystemConfig};
use crate::csma::{self, ContentionPoint, CsmaError};
use crate::decision::{check_rows, Assignment, DecisionError};
use crate::output::sig9;
use crate::phy::{af_gain, PhyError, RateTable};
use crate::reservation::{self, reservation_capacity, Capacity, ReservationError, ReservationPoint};

/// Largest allowed gap between a solved point's population and the one
/// implied by the probabilities it is used with.
const STALE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ThroughputError {
    #[error("contention point solved for {solved} contenders, decision implies {expected}")]
    StaleContentionPoint { solved: f64, expected: f64 },
    #[error("reservation point solved for {solved} users, decision implies {expected}")]
    StaleReservationPoint { solved: f64, expected: f64 },
    #[error("a solved {0} point is required for a nonzero population")]
    MissingPoint(&'static str),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Constraint(#[from] DecisionError),
    #[error(transparent)]
    Contention(#[from] CsmaError),
    #[error(transparent)]
    Reservation(#[from] ReservationError),
    #[error(transparent)]
    Phy(#[from] PhyError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputReport {
    pub n_users: usize,
    /// Mean relay probability.
    pub rho: f64,
    pub s_g2s: f64,
    pub s_gas: f64,
    pub s_sum: f64,
    /// `s_sum / bandwidth`, bits/s/Hz.
    pub normalized: f64,
    /// Channel utilization of the contention scheme (0 when unused).
    pub alpha: f64,
    /// Frame share of a reserved user (0 when unused or nobody reserves).
    pub beta: f64,
    pub n1: f64,
    pub n2: f64,
}

impl ThroughputReport {
    pub const CSV_HEADER: [&'static str; 10] =
        ["N", "rho", "s_g2s", "s_gas", "s_sum", "normalized", "alpha", "beta", "n1", "n2"];

    #[allow(clippy::too_many_arguments)]
    fn new(n_users: usize, rho: f64, s_g2s: f64, s_gas: f64, bandwidth: f64, alpha: f64, beta: f64, n1: f64, n2: f64) -> Self {
        let s_sum = s_g2s + s_gas;
        Self { n_users, rho, s_g2s, s_gas, s_sum, normalized: s_sum / bandwidth, alpha, beta, n1, n2 }
    }

    pub fn csv_record(&self) -> Vec<String> {
        vec![
            self.n_users.to_string(),
            sig9(self.rho),
            sig9(self.s_g2s),
            sig9(self.s_gas),
            sig9(self.s_sum),
            sig9(self.normalized),
            sig9(self.alpha),
            sig9(self.beta),
            sig9(self.n1),
            sig9(self.n2),
        ]
    }
}

fn direct_population(rho: &[f64]) -> f64 {
    rho.iter().map(|r| 1.0 - r).sum()
}

fn relay_population(rho: &[f64]) -> f64 {
    rho.iter().sum()
}

/// Throughput of the contention scheme: `M * phi * sum_n (1 - rho_n) R_n`.
///
/// `point` may be `None` only when every user relays.
pub fn throughput_g2s(
    rho: &[f64],
    rates: &RateTable,
    point: Option<&ContentionPoint>,
    timings: &MacTimings,
    n_subchannels: usize,
) -> Result<f64, ThroughputError> {
    if rho.len() != rates.n_users() {
        return Err(ThroughputError::ShapeMismatch(format!("{} probabilities for {} users", rho.len(), rates.n_users())));
    }
    let n1 = direct_population(rho);
    if n1 == 0.0 {
        return Ok(0.0);
    }
    let cp = point.ok_or(ThroughputError::MissingPoint("contention"))?;
    if (cp.requested - n1).abs() > STALE_TOL {
        return Err(ThroughputError::StaleContentionPoint { solved: cp.requested, expected: n1 });
    }
    let phi = csma::utilization(cp, timings)?;
    let weighted: f64 = rho.iter().zip(&rates.r_g2s).map(|(r, rate)| (1.0 - r) * rate).sum();
    Ok(n_subchannels as f64 * phi * weighted)
}

/// Frame share of one reserved user; zero when nobody reserves.
pub fn frame_share(point: &ReservationPoint, timings: &MacTimings) -> f64 {
    match reservation_capacity(point, timings) {
        Capacity::Empty => 0.0,
        Capacity::Reserved { step, .. } => timings.payload.as_secs_f64() * step / timings.frame.as_secs_f64(),
    }
}

/// Throughput of the reservation scheme:
/// `sum_n sum_k beta rho_n u_nk R_nk`.
///
/// `point` may be `None` only when no user relays.
pub fn throughput_gas(
    rho: &[f64],
    assignment: &Assignment,
    rates: &RateTable,
    point: Option<&ReservationPoint>,
    timings: &MacTimings,
) -> Result<f64, ThroughputError> {
    if rho.len() != rates.n_users() || assignment.n_users() != rates.n_users() || assignment.n_haps() != rates.n_haps() {
        return Err(ThroughputError::ShapeMismatch(format!(
            "rho {} / assignment {}x{} / rates {}x{}",
            rho.len(),
            assignment.n_users(),
            assignment.n_haps(),
            rates.n_users(),
            rates.n_haps()
        )));
    }
    check_rows(assignment)?;
    let n2 = relay_population(rho);
    if n2 == 0.0 {
        return Ok(0.0);
    }
    let rp = point.ok_or(ThroughputError::MissingPoint("reservation"))?;
    if (rp.n_gas - n2).abs() > STALE_TOL {
        return Err(ThroughputError::StaleReservationPoint { solved: rp.n_gas, expected: n2 });
    }
    let beta = frame_share(rp, timings);
    Ok(assignment.pairs().map(|(n, k)| beta * rho[n] * rates.r_gas[n][k]).sum())
}

/// Mixed regime with per-user relay probabilities. Both fixed points are
/// solved at the expected populations `N - sum rho` and `sum rho`.
pub fn case1_sum(
    rho: &[f64],
    assignment: &Assignment,
    rates: &RateTable,
    timings: &MacTimings,
    cfg: &SystemConfig,
) -> Result<ThroughputReport, ThroughputError> {
    let n1 = direct_population(rho);
    let n2 = relay_population(rho);
    let cp = if n1 > 0.0 { Some(csma::solve_contention(n1, timings, csma::DEFAULT_TOL)?) } else { None };
    let rp = if n2 > 0.0 { Some(reservation::solve_reservation(n2, cfg, timings, reservation::DEFAULT_TOL)?) } else { None };
    let s_g2s = throughput_g2s(rho, rates, cp.as_ref(), timings, cfg.n_subchannels)?;
    let s_gas = throughput_gas(rho, assignment, rates, rp.as_ref(), timings)?;
    let alpha = cp.as_ref().map_or(0.0, |c| c.utilization);
    let beta = rp.as_ref().map_or(0.0, |r| frame_share(r, timings));
    let mean_rho = if rho.is_empty() { 0.0 } else { n2 / rho.len() as f64 };
    Ok(ThroughputReport::new(rho.len(), mean_rho, s_g2s, s_gas, cfg.bandwidth_hz, alpha, beta, n1, n2))
}

/// Direct-only regime, evaluated from hop SNRs in closed form:
/// `w1 B phi(N) sum_n log2(1 + snr_n)`.
pub fn case2_g2s_only(rates: &RateTable, timings: &MacTimings, cfg: &SystemConfig) -> Result<ThroughputReport, ThroughputError> {
    let n = rates.n_users();
    let cp = csma::solve_contention(n as f64, timings, csma::DEFAULT_TOL)?;
    let spectral: f64 = rates.snr_g2s.iter().map(|s| (1.0 + s).log2()).sum();
    let s_g2s = cfg.w1 * cfg.bandwidth_hz * cp.utilization * spectral;
    Ok(ThroughputReport::new(n, 0.0, s_g2s, 0.0, cfg.bandwidth_hz, cp.utilization, 0.0, n as f64, 0.0))
}

/// Relay-only regime in closed form:
/// `w2 B t_r t_s' / (T t_h zeta_s) sum u_nk log2(1 + f(r_nk, r_ks))`.
/// No successful reservations give zero throughput.
pub fn case3_gas_only(
    assignment: &Assignment,
    rates: &RateTable,
    timings: &MacTimings,
    cfg: &SystemConfig,
) -> Result<ThroughputReport, ThroughputError> {
    let n = rates.n_users();
    if assignment.n_users() != n || assignment.n_haps() != rates.n_haps() {
        return Err(ThroughputError::ShapeMismatch(format!(
            "assignment {}x{} for {}x{} rates",
            assignment.n_users(),
            assignment.n_haps(),
            n,
            rates.n_haps()
        )));
    }
    check_rows(assignment)?;
    let rp = reservation::solve_reservation(n as f64, cfg, timings, reservation::DEFAULT_TOL)?;
    let (s_gas, beta) = if rp.zeta_s > 0.0 {
        let t_r = timings.reserved_time().as_secs_f64();
        let t_hs = timings.handshake_time().as_secs_f64();
        let t_h = timings.negotiation.as_secs_f64();
        let frame = timings.frame.as_secs_f64();
        let coeff = cfg.w2 * cfg.bandwidth_hz * t_r * t_hs / (frame * t_h * rp.zeta_s);
        let mut spectral = 0.0;
        for (u, k) in assignment.pairs() {
            spectral += (1.0 + af_gain(rates.snr_gu_hap[u][k], rates.snr_hap_sat[k])?).log2();
        }
        (coeff * spectral, t_r * t_hs / (frame * t_h * rp.zeta_s))
    } else {
        (0.0, 0.0)
    };
    Ok(ThroughputReport::new(n, 1.0, 0.0, s_gas, cfg.bandwidth_hz, 0.0, beta, 0.0, n as f64))
}
