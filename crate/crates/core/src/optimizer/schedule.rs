//! One frame of the reservation protocol: who relays, who wins a
//! reservation, and where its handshake and payload land in the frame.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::MacTimings;
use crate::decision::{check_rho_and_rows, Decision};
use crate::reservation::{reservation_capacity, Capacity, ReservationPoint};

use super::OptimizerError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UserMode {
    G2s,
    /// Chose the relay and holds a reservation on `hap`.
    GasReserved { hap: usize },
    /// Chose the relay but got no reservation this frame.
    GasDeferred,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reservation {
    pub user: usize,
    pub hap: usize,
    /// Start of the RTS/CTS exchange, seconds from frame start.
    pub handshake_start: f64,
    /// Payload window `[payload_start, payload_end)`, seconds.
    pub payload_start: f64,
    pub payload_end: f64,
    /// Whole packet slots in the window.
    pub packets: usize,
}

impl Reservation {
    /// Start time of each packet slot.
    pub fn packet_starts(&self, payload: f64) -> impl Iterator<Item = f64> + '_ {
        (0..self.packets).map(move |i| self.payload_start + i as f64 * payload)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameSchedule {
    pub modes: Vec<UserMode>,
    /// In payload order.
    pub reservations: Vec<Reservation>,
    /// `floor(N_s)`: reservations the negotiation period yields.
    pub capacity: usize,
    /// Packets per reservation, `r`.
    pub step: Option<f64>,
    /// More relaying users with a HAP than reservations; extras were dropped
    /// uniformly at random.
    pub oversubscribed: bool,
    /// More reservations than HAPs.
    pub exceeds_haps: bool,
    /// Payload time handed out, seconds.
    pub reserved_payload: f64,
    /// Reserved period left unused, seconds.
    pub remainder: f64,
}

/// Draws one frame for decision `d`.
pub fn execute_schedule(d: &Decision, rp: &ReservationPoint, timings: &MacTimings, seed: u64) -> Result<FrameSchedule, OptimizerError> {
    check_rho_and_rows(d).map_err(|e| OptimizerError::Schedule(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_haps = d.assignment.n_haps();

    let mut modes: Vec<UserMode> = d
        .rho
        .iter()
        .map(|&p| if rng.gen::<f64>() < p { UserMode::GasDeferred } else { UserMode::G2s })
        .collect();
    let candidates: Vec<(usize, usize)> = modes
        .iter()
        .enumerate()
        .filter(|(_, m)| **m == UserMode::GasDeferred)
        .filter_map(|(n, _)| d.assignment.hap_of(n).map(|k| (n, k)))
        .collect();

    let t_h = timings.negotiation.as_secs_f64();
    let t_r = timings.reserved_time().as_secs_f64();
    let t_p = timings.payload.as_secs_f64();
    let t_hs = timings.handshake_time().as_secs_f64();
    let (capacity, step) = match reservation_capacity(rp, timings) {
        Capacity::Empty => (0, None),
        Capacity::Reserved { n_reserved, step } => (n_reserved.floor() as usize, Some(step)),
    };

    let oversubscribed = candidates.len() > capacity;
    let winners: Vec<(usize, usize)> = if oversubscribed {
        let mut picked: Vec<usize> = sample(&mut rng, candidates.len(), capacity).into_vec();
        picked.sort_unstable();
        picked.into_iter().map(|i| candidates[i]).collect()
    } else {
        candidates
    };

    let window = step.map_or(0.0, |r| r * t_p);
    let reservations: Vec<Reservation> = winners
        .iter()
        .enumerate()
        .map(|(i, &(user, hap))| {
            let payload_start = t_h + i as f64 * window;
            Reservation {
                user,
                hap,
                handshake_start: i as f64 * t_hs,
                payload_start,
                payload_end: payload_start + window,
                packets: step.map_or(0, |r| r.floor() as usize),
            }
        })
        .collect();
    for r in &reservations {
        modes[r.user] = UserMode::GasReserved { hap: r.hap };
    }
    let reserved_payload = reservations.len() as f64 * window;
    Ok(FrameSchedule {
        modes,
        reservations,
        capacity,
        step,
        oversubscribed,
        exceeds_haps: capacity > n_haps,
        reserved_payload,
        remainder: (t_r - reserved_payload).max(0.0),
    })
}
