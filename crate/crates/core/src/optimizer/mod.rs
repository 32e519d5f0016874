//! Transmission-control optimizer: alternates between the uniform relay
//! probability and the HAP choice, then turns the decision into a frame
//! schedule.

pub mod assignment;
pub mod rho;
pub mod schedule;

use std::io::Write;

use crate::config::{MacTimings, SystemConfig};
use crate::csma::CsmaError;
use crate::decision::Assignment;
use crate::output::sig9;
use crate::phy::RateTable;
use crate::reservation::ReservationError;
use crate::throughput::ThroughputError;

pub use assignment::{solve_assignment, AssignmentMode, AssignmentOutcome};
pub use rho::{reservations_at, solve_rho, Objective};
pub use schedule::{execute_schedule, FrameSchedule, Reservation, UserMode};

pub const DEFAULT_GRID: usize = 201;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITERS: usize = 50;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OptimizerError {
    #[error("grid needs at least {min} points, got {0}", min = rho::MIN_GRID)]
    GridTooCoarse(usize),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("max_iters must be at least 1")]
    NoIterations,
    #[error("objective could not be evaluated at any grid point")]
    NoEvaluablePoint,
    #[error("{n_users}x{n_haps} is too large to enumerate")]
    TooLargeForEnumeration { n_users: usize, n_haps: usize },
    #[error(transparent)]
    Throughput(#[from] ThroughputError),
    #[error(transparent)]
    Contention(#[from] CsmaError),
    #[error(transparent)]
    Reservation(#[from] ReservationError),
    #[error("{0}")]
    Schedule(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub rho: f64,
    pub objective: f64,
    /// Reservations the assignment step was asked for.
    pub requested: usize,
    /// Pairs in the effective assignment.
    pub assigned: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerResult {
    pub rho_star: f64,
    /// Effective assignment at `rho_star` (at most `floor(N_s)` pairs).
    pub assignment_star: Assignment,
    pub objective: f64,
    pub iterations: usize,
    pub trace: Vec<TraceEntry>,
    pub converged: bool,
    /// Some iteration could not place as many pairs as reservations.
    pub capped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerSettings {
    pub mode: AssignmentMode,
    pub grid: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub initial_rho: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self { mode: AssignmentMode::PerUserBest, grid: DEFAULT_GRID, tol: DEFAULT_TOL, max_iters: DEFAULT_MAX_ITERS, initial_rho: 0.5 }
    }
}

/// Alternating maximization from `rho = 0.5` with default settings.
pub fn alternate(
    cfg: &SystemConfig,
    timings: &MacTimings,
    rates: &RateTable,
    max_iters: usize,
    tol: f64,
) -> Result<OptimizerResult, OptimizerError> {
    alternate_with(cfg, timings, rates, &OptimizerSettings { max_iters, tol, ..OptimizerSettings::default() })
}

/// Alternating maximization. Each iteration picks the HAP choice for the
/// reservations available at the current `rho`, then re-optimizes `rho`
/// for that choice, keeping the current `rho` unless the search improves
/// on it. Converged once the choice at the new `rho` is unchanged, so a
/// further `rho` step would be zero.
pub fn alternate_with(
    cfg: &SystemConfig,
    timings: &MacTimings,
    rates: &RateTable,
    settings: &OptimizerSettings,
) -> Result<OptimizerResult, OptimizerError> {
    if settings.max_iters == 0 {
        return Err(OptimizerError::NoIterations);
    }
    let n = rates.n_users();
    let count_at = |rho: f64| reservations_at(rho, n, cfg, timings).unwrap_or(0);

    let mut rho = settings.initial_rho;
    let mut outcome = solve_assignment(rates, count_at(rho), settings.mode)?;
    let mut trace = Vec::new();
    let mut capped = false;
    let mut converged = false;
    let mut best = None;

    for iteration in 1..=settings.max_iters {
        capped |= outcome.capped;
        let objective = Objective { assignment: &outcome.assignment, rates, cfg, timings };
        let (candidate, value) = solve_rho(&objective, settings.grid, settings.tol)?;
        let (new_rho, value) = match objective.value(rho) {
            Ok(incumbent) if incumbent >= value => (rho, incumbent),
            _ => (candidate, value),
        };
        let effective = objective.effective_assignment(new_rho)?;
        if let Some(last) = trace.last() {
            let last: &TraceEntry = last;
            assert!(value >= last.objective, "objective decreased from {} to {value}", last.objective);
        }
        trace.push(TraceEntry {
            iteration,
            rho: new_rho,
            objective: value,
            requested: outcome.requested,
            assigned: effective.total(),
        });
        best = Some((new_rho, effective, value));

        let next = solve_assignment(rates, count_at(new_rho), settings.mode)?;
        let unchanged = next.assignment == outcome.assignment;
        rho = new_rho;
        outcome = next;
        if unchanged {
            converged = true;
            break;
        }
    }
    let (rho_star, assignment_star, objective) = best.expect("at least one iteration");
    Ok(OptimizerResult { rho_star, assignment_star, objective, iterations: trace.len(), trace, converged, capped })
}

impl OptimizerResult {
    pub const TRACE_HEADER: [&'static str; 5] = ["iteration", "rho", "objective", "requested", "assigned"];
    pub const DECISION_HEADER: [&'static str; 4] = ["user", "mode", "hap", "rho"];

    pub fn write_trace<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(Self::TRACE_HEADER)?;
        for t in &self.trace {
            out.write_record([
                t.iteration.to_string(),
                sig9(t.rho),
                sig9(t.objective),
                t.requested.to_string(),
                t.assigned.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// One row per user: `gas` with its HAP index when assigned, else `g2s`
    /// with an empty HAP field.
    pub fn write_decision<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(Self::DECISION_HEADER)?;
        for n in 0..self.assignment_star.n_users() {
            let hap = self.assignment_star.hap_of(n);
            out.write_record([
                n.to_string(),
                if hap.is_some() { "gas".into() } else { "g2s".to_string() },
                hap.map(|k| k.to_string()).unwrap_or_default(),
                sig9(self.rho_star),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}
