//! Slot-level Monte Carlo of saturated CSMA/CA contention and of the
//! negotiation period, for checking the analytical fixed points.
//!
//! Randomness comes from ChaCha8 seeded with a `u64`, so runs replay
//! bit-for-bit on any platform.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::MacTimings;
use crate::output::sig9;

pub const MIN_SLOTS: u64 = 10_000;
pub const MIN_FRAMES: u64 = 100;
/// Frames run and discarded before negotiation statistics are collected.
pub const WARMUP_FRAMES: u64 = 20;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("need at least one station")]
    NoStations,
    #[error("need at least {min} {what}, got {got}")]
    TooShort { what: &'static str, min: u64, got: u64 },
    #[error("activity probability must lie in [0, 1], got {0}")]
    InvalidActivity(f64),
    #[error("handshake longer than the negotiation period")]
    NoNegotiationSlots,
}

/// A frequency with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    /// `hits / trials` with a binomial standard error. The variance uses
    /// `(hits + 1/2) / (trials + 1)` so it stays positive at 0 and 1.
    pub fn binomial(hits: u64, trials: u64) -> Self {
        let value = hits as f64 / trials as f64;
        let p = (hits as f64 + 0.5) / (trials as f64 + 1.0);
        Self { value, se: (p * (1.0 - p) / trials as f64).sqrt() }
    }

    /// Whether `x` lies within `k` standard errors.
    pub fn agrees(&self, x: f64, k: f64) -> bool {
        (self.value - x).abs() <= k * self.se
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimStats {
    pub stations: usize,
    pub seed: u64,
    pub slots_simulated: u64,
    pub tx_attempts: u64,
    pub successes: u64,
    pub collisions: u64,
    pub idles: u64,
    /// Per-station, per-slot transmit probability.
    pub est_tau: Estimate,
    pub est_ps: Estimate,
    pub est_pe: Estimate,
    pub est_pc: Estimate,
    /// Share of channel time in successful exchanges (delta-method error).
    pub est_util: Estimate,
}

impl SimStats {
    pub const CSV_HEADER: [&'static str; 17] = [
        "stations", "seed", "slots", "tx_attempts", "successes", "collisions", "idles", "tau", "tau_se", "ps", "ps_se", "pe",
        "pe_se", "pc", "pc_se", "util", "util_se",
    ];

    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(Self::CSV_HEADER)?;
        let mut row = vec![
            self.stations.to_string(),
            self.seed.to_string(),
            self.slots_simulated.to_string(),
            self.tx_attempts.to_string(),
            self.successes.to_string(),
            self.collisions.to_string(),
            self.idles.to_string(),
        ];
        for e in [self.est_tau, self.est_ps, self.est_pe, self.est_pc, self.est_util] {
            row.push(sig9(e.value));
            row.push(sig9(e.se));
        }
        out.write_record(row)?;
        out.flush()?;
        Ok(())
    }
}

/// Backoff state of one station.
#[derive(Debug, Clone, Copy)]
struct Station {
    stage: u32,
    counter: u64,
}

impl Station {
    fn fresh(rng: &mut ChaCha8Rng, w_min: u32) -> Self {
        Self { stage: 0, counter: rng.gen_range(0..u64::from(w_min)) }
    }

    fn redraw(&mut self, rng: &mut ChaCha8Rng, w_min: u32) {
        self.counter = rng.gen_range(0..(u64::from(w_min) << self.stage));
    }

    fn on_success(&mut self, rng: &mut ChaCha8Rng, w_min: u32) {
        self.stage = 0;
        self.redraw(rng, w_min);
    }

    fn on_collision(&mut self, rng: &mut ChaCha8Rng, w_min: u32, max_stage: u32) {
        self.stage = (self.stage + 1).min(max_stage);
        self.redraw(rng, w_min);
    }
}

/// Simulates `n` saturated stations for `slots` generic slots. A station
/// transmits when its counter reaches zero; a collision doubles its window
/// up to `backoff_stages` doublings, a success resets it.
pub fn simulate_csma(n: usize, timings: &MacTimings, slots: u64, seed: u64) -> Result<SimStats, SimError> {
    if n == 0 {
        return Err(SimError::NoStations);
    }
    if slots < MIN_SLOTS {
        return Err(SimError::TooShort { what: "slots", min: MIN_SLOTS, got: slots });
    }
    let (w, l) = (timings.w_min, timings.backoff_stages);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stations: Vec<Station> = (0..n).map(|_| Station::fresh(&mut rng, w)).collect();
    let (mut attempts, mut successes, mut collisions, mut idles) = (0u64, 0u64, 0u64, 0u64);
    let mut transmitting = Vec::with_capacity(n);

    for _ in 0..slots {
        transmitting.clear();
        for (i, s) in stations.iter().enumerate() {
            if s.counter == 0 {
                transmitting.push(i);
            }
        }
        attempts += transmitting.len() as u64;
        match transmitting.len() {
            0 => idles += 1,
            1 => successes += 1,
            _ => collisions += 1,
        }
        let collided = transmitting.len() > 1;
        for s in stations.iter_mut() {
            if s.counter > 0 {
                s.counter -= 1;
            }
        }
        for &i in &transmitting {
            if collided {
                stations[i].on_collision(&mut rng, w, l);
            } else {
                stations[i].on_success(&mut rng, w);
            }
        }
    }

    let est_util = utilization_estimate(successes, idles, collisions, timings);
    Ok(SimStats {
        stations: n,
        seed,
        slots_simulated: slots,
        tx_attempts: attempts,
        successes,
        collisions,
        idles,
        est_tau: Estimate::binomial(attempts, slots * n as u64),
        est_ps: Estimate::binomial(successes, slots),
        est_pe: Estimate::binomial(idles, slots),
        est_pc: Estimate::binomial(collisions, slots),
        est_util,
    })
}

/// Utilization from slot counts, with a delta-method standard error under
/// multinomial slot outcomes.
fn utilization_estimate(successes: u64, idles: u64, collisions: u64, timings: &MacTimings) -> Estimate {
    let total = (successes + idles + collisions) as f64;
    let (ps, pe, pc) = (successes as f64 / total, idles as f64 / total, collisions as f64 / total);
    let ts = timings.success_time().as_secs_f64();
    let tc = timings.collision_time().as_secs_f64();
    let slot = timings.slot.as_secs_f64();
    let denom = pe * slot + ps * ts + pc * tc;
    let value = ps * ts / denom;
    let d2 = denom * denom;
    let grad = [ts * (pe * slot + pc * tc) / d2, -ps * ts * slot / d2, -ps * ts * tc / d2];
    // smoothed like `Estimate::binomial` so the error stays positive
    let smooth = |k: u64| (k as f64 + 0.5) / (total + 1.5);
    let probs = [smooth(successes), smooth(idles), smooth(collisions)];
    let mean: f64 = probs.iter().zip(&grad).map(|(p, g)| p * g).sum();
    let second: f64 = probs.iter().zip(&grad).map(|(p, g)| p * g * g).sum();
    Estimate { value, se: ((second - mean * mean).max(0.0) / total).sqrt() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NegotiationStats {
    pub seed: u64,
    pub frames: u64,
    /// Generic slots per negotiation period, `floor(t_h / t_s')`.
    pub slots_per_frame: u64,
    pub slots_simulated: u64,
    pub successes: u64,
    /// Per-slot probability of a successful handshake.
    pub zeta_s: Estimate,
    /// Mean successful reservations per frame.
    pub mean_reserved: Estimate,
}

impl NegotiationStats {
    pub const CSV_HEADER: [&'static str; 9] =
        ["seed", "frames", "slots_per_frame", "slots", "successes", "zeta_s", "zeta_s_se", "mean_reserved", "mean_reserved_se"];

    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(Self::CSV_HEADER)?;
        out.write_record([
            self.seed.to_string(),
            self.frames.to_string(),
            self.slots_per_frame.to_string(),
            self.slots_simulated.to_string(),
            self.successes.to_string(),
            sig9(self.zeta_s.value),
            sig9(self.zeta_s.se),
            sig9(self.mean_reserved.value),
            sig9(self.mean_reserved.se),
        ])?;
        out.flush()?;
        Ok(())
    }
}

/// Negotiation station. After a reservation it stays in contention with
/// probability `q`, otherwise idles and rejoins with probability `q` per
/// slot.
#[derive(Debug, Clone, Copy)]
struct Negotiator {
    backoff: Station,
    idle: bool,
}

/// Simulates the negotiation periods of `frames` frames.
///
/// `n2 * q` stations contend (randomized rounding per frame when
/// fractional). Each runs the binary exponential backoff of the contention
/// scheme and idles after a successful handshake for a mean of
/// `(1 - q) / q` slots. Each period holds `floor(t_h / t_s')` generic slots.
/// Station state carries over between frames.
pub fn simulate_negotiation(n2: usize, q: f64, timings: &MacTimings, frames: u64, seed: u64) -> Result<NegotiationStats, SimError> {
    if n2 == 0 {
        return Err(SimError::NoStations);
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(SimError::InvalidActivity(q));
    }
    if frames < MIN_FRAMES {
        return Err(SimError::TooShort { what: "frames", min: MIN_FRAMES, got: frames });
    }
    let per_frame = (timings.negotiation.as_nanos() / timings.handshake_time().as_nanos().max(1)) as u64;
    if per_frame == 0 {
        return Err(SimError::NoNegotiationSlots);
    }
    let (w, l) = (timings.w_min, timings.backoff_stages);
    let contenders = n2 as f64 * q;
    let whole = contenders.floor() as usize;
    let frac = contenders - whole as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let capacity = whole + usize::from(frac > 0.0);
    let mut stations: Vec<Negotiator> =
        (0..capacity).map(|_| Negotiator { backoff: Station::fresh(&mut rng, w), idle: false }).collect();
    let mut successes = 0u64;
    let mut per_frame_counts = Vec::with_capacity(frames as usize);
    let mut transmitting = Vec::with_capacity(capacity);

    for frame in 0..(WARMUP_FRAMES + frames) {
        let active = whole + usize::from(frac > 0.0 && rng.gen::<f64>() < frac);
        let mut won = 0u64;
        for _ in 0..per_frame {
            transmitting.clear();
            for (i, s) in stations[..active].iter().enumerate() {
                if !s.idle && s.backoff.counter == 0 {
                    transmitting.push(i);
                }
            }
            let collided = transmitting.len() > 1;
            if transmitting.len() == 1 {
                won += 1;
            }
            for s in stations[..active].iter_mut() {
                if s.idle {
                    if rng.gen::<f64>() < q {
                        s.idle = false;
                    }
                } else if s.backoff.counter > 0 {
                    s.backoff.counter -= 1;
                }
            }
            for &i in &transmitting {
                let s = &mut stations[i];
                if collided {
                    s.backoff.on_collision(&mut rng, w, l);
                } else {
                    s.backoff.on_success(&mut rng, w);
                    s.idle = rng.gen::<f64>() >= q;
                }
            }
        }
        if frame >= WARMUP_FRAMES {
            successes += won;
            per_frame_counts.push(won as f64);
        }
    }

    let slots = frames * per_frame;
    let mean = per_frame_counts.iter().sum::<f64>() / frames as f64;
    let var = per_frame_counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (frames as f64 - 1.0);
    Ok(NegotiationStats {
        seed,
        frames,
        slots_per_frame: per_frame,
        slots_simulated: slots,
        successes,
        zeta_s: Estimate::binomial(successes, slots),
        mean_reserved: Estimate { value: mean, se: (var / frames as f64).sqrt() },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_partition_slots() {
        let s = simulate_csma(7, &MacTimings::default(), 20_000, 3).unwrap();
        assert_eq!(s.successes + s.collisions + s.idles, s.slots_simulated);
        assert!(s.tx_attempts >= s.successes + 2 * s.collisions);
    }

    #[test]
    fn lone_station_never_collides() {
        let s = simulate_csma(1, &MacTimings::default(), 50_000, 11).unwrap();
        assert_eq!(s.collisions, 0);
        assert_eq!(s.est_pc.value, 0.0);
        assert!(s.est_pc.se > 0.0);
    }

    #[test]
    fn preconditions() {
        let t = MacTimings::default();
        assert_eq!(simulate_csma(0, &t, 20_000, 1), Err(SimError::NoStations));
        assert!(matches!(simulate_csma(2, &t, 10, 1), Err(SimError::TooShort { .. })));
        assert!(matches!(simulate_negotiation(5, 0.5, &t, 10, 1), Err(SimError::TooShort { .. })));
        assert_eq!(simulate_negotiation(5, 1.5, &t, 100, 1), Err(SimError::InvalidActivity(1.5)));
    }

    #[test]
    fn zero_activity_never_reserves() {
        let s = simulate_negotiation(20, 0.0, &MacTimings::default(), 100, 5).unwrap();
        assert_eq!(s.successes, 0);
        assert_eq!(s.zeta_s.value, 0.0);
    }

    #[test]
    fn binomial_estimate() {
        let e = Estimate::binomial(25, 100);
        assert_eq!(e.value, 0.25);
        let p = 25.5 / 101.0;
        assert!((e.se - (p * (1.0 - p) / 100.0f64).sqrt()).abs() < 1e-15);
        assert!(e.agrees(0.26, 1.0));
    }
}
