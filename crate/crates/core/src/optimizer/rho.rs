//! The relay-probability sub-problem: maximize the sum throughput over a
//! uniform `rho` with the HAP choice held fixed.

use rayon::prelude::*;

use crate::config::{MacTimings, SystemConfig};
use crate::decision::Assignment;
use crate::phy::RateTable;
use crate::reservation;
use crate::throughput::{case1_sum, ThroughputReport};

use super::assignment::truncate;
use super::OptimizerError;

pub const MIN_GRID: usize = 16;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Sum throughput at uniform `rho` for a fixed HAP choice.
///
/// Only the best `floor(N_s(rho))` pairs of `assignment` are kept: fewer
/// users reserve at this `rho` than the choice may hold.
#[derive(Debug, Clone, Copy)]
pub struct Objective<'a> {
    pub assignment: &'a Assignment,
    pub rates: &'a RateTable,
    pub cfg: &'a SystemConfig,
    pub timings: &'a MacTimings,
}

impl Objective<'_> {
    /// Pairs that can reserve at `rho`.
    pub fn effective_assignment(&self, rho: f64) -> Result<Assignment, OptimizerError> {
        let count = reservations_at(rho, self.rates.n_users(), self.cfg, self.timings)?;
        Ok(truncate(self.assignment, &self.rates.r_gas, count))
    }

    pub fn report(&self, rho: f64) -> Result<ThroughputReport, OptimizerError> {
        let effective = self.effective_assignment(rho)?;
        let rhos = vec![rho; self.rates.n_users()];
        Ok(case1_sum(&rhos, &effective, self.rates, self.timings, self.cfg)?)
    }

    pub fn value(&self, rho: f64) -> Result<f64, OptimizerError> {
        self.report(rho).map(|r| r.s_sum)
    }
}

/// Whole reservations per frame when every one of `n_users` relays with
/// probability `rho`; zero when nobody relays.
pub fn reservations_at(rho: f64, n_users: usize, cfg: &SystemConfig, timings: &MacTimings) -> Result<usize, OptimizerError> {
    let n2 = rho * n_users as f64;
    if n2 == 0.0 {
        return Ok(0);
    }
    let rp = reservation::solve_reservation(n2, cfg, timings, reservation::DEFAULT_TOL)?;
    Ok(rp.whole_reservations())
}

/// Maximizer of `objective` on `[0, 1]`: a `grid`-point scan, then golden
/// section on the cells around the best point down to width `tol`.
/// Points where a fixed point cannot be solved are skipped. Ties go to the
/// smallest `rho`.
pub fn solve_rho(objective: &Objective<'_>, grid: usize, tol: f64) -> Result<(f64, f64), OptimizerError> {
    if grid < MIN_GRID {
        return Err(OptimizerError::GridTooCoarse(grid));
    }
    if !(tol > 0.0) {
        return Err(OptimizerError::InvalidTolerance(tol));
    }
    let points: Vec<f64> = (0..grid).map(|i| i as f64 / (grid - 1) as f64).collect();
    let values: Vec<Option<f64>> = points
        .par_iter()
        .map(|&rho| match objective.value(rho) {
            Ok(v) => Some(v),
            Err(e) => {
                log::debug!("skipping rho = {rho}: {e}");
                None
            }
        })
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.iter().enumerate() {
        if let Some(v) = *v {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
    }
    let (i, grid_value) = best.ok_or(OptimizerError::NoEvaluablePoint)?;
    let lo = points[i.saturating_sub(1)];
    let hi = points[(i + 1).min(grid - 1)];
    let (rho, value) = golden_section(|r| objective.value(r).ok(), lo, hi, tol);
    Ok(if value > grid_value { (rho, value) } else { (points[i], grid_value) })
}

/// Golden-section maximization; failed evaluations count as `-inf`.
fn golden_section(f: impl Fn(f64) -> Option<f64>, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let eval = |x: f64| f(x).unwrap_or(f64::NEG_INFINITY);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (eval(c), eval(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
