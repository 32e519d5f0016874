//! Frame schedules: feasibility, brute-force occupancy counts and
//! reproducibility.

mod common;

use common::{random_budget, with_budget};
use hapres_core::config::MacTimings;
use hapres_core::decision::{Assignment, Decision};
use hapres_core::optimizer::{execute_schedule, FrameSchedule, UserMode};
use hapres_core::reservation::{solve_negotiation, Negotiation, ReservationPoint};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn point(n_gas: f64, q: f64) -> ReservationPoint {
    let t = MacTimings::default();
    solve_negotiation(n_gas, &Negotiation::new(q, &t), &t, 1e-12).unwrap()
}

fn random_decision(n: usize, k: usize, rng: &mut impl Rng) -> Decision {
    let choices: Vec<Option<usize>> =
        (0..n).map(|_| if rng.gen_bool(0.8) { Some(rng.gen_range(0..k)) } else { None }).collect();
    Decision { rho: (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect(), assignment: Assignment::from_choices(k, &choices) }
}

/// Occupancy of the reserved period on a 1 us grid; returns the busiest
/// tick count and the total busy time.
fn occupancy(s: &FrameSchedule, t: &MacTimings) -> (usize, f64) {
    let dt = 1e-6;
    let start = t.negotiation.as_secs_f64();
    let ticks = (t.reserved_time().as_secs_f64() / dt).round() as usize;
    let mut busy = vec![0usize; ticks];
    for r in &s.reservations {
        for (i, b) in busy.iter_mut().enumerate() {
            let mid = start + (i as f64 + 0.5) * dt;
            if mid >= r.payload_start && mid < r.payload_end {
                *b += 1;
            }
        }
    }
    let peak = busy.iter().copied().max().unwrap_or(0);
    (peak, busy.iter().filter(|&&b| b > 0).count() as f64 * dt)
}

#[test]
fn ten_users_slot_counts_by_brute_force() {
    let t = MacTimings::default();
    let rng = &mut ChaCha8Rng::seed_from_u64(10);
    let d = random_decision(10, 3, rng);
    let rp = point(d.rho.iter().sum::<f64>().max(2.0), 0.9);
    let s = execute_schedule(&d, &rp, &t, 77).unwrap();
    assert_eq!(s, execute_schedule(&d, &rp, &t, 77).unwrap());

    let (peak, busy) = occupancy(&s, &t);
    assert!(peak <= 1);
    assert!((busy - s.reserved_payload).abs() <= 2e-6 * (s.reservations.len() as f64 + 1.0));
    let reserved = s.modes.iter().filter(|m| matches!(m, UserMode::GasReserved { .. })).count();
    assert_eq!(reserved, s.reservations.len());
    for r in &s.reservations {
        assert_eq!(s.modes[r.user], UserMode::GasReserved { hap: r.hap });
        assert_eq!(d.assignment.hap_of(r.user), Some(r.hap));
        assert_eq!(r.packet_starts(t.payload.as_secs_f64()).count(), r.packets);
    }
    assert!((s.reserved_payload + s.remainder - t.reserved_time().as_secs_f64()).abs() < 1e-12);
}

#[test]
fn seeds_replay_and_differ() {
    let t = MacTimings::default();
    let rng = &mut ChaCha8Rng::seed_from_u64(3);
    let d = random_decision(30, 4, rng);
    let rp = point(d.rho.iter().sum(), 0.9);
    let frames: Vec<FrameSchedule> = (0..20).map(|seed| execute_schedule(&d, &rp, &t, seed).unwrap()).collect();
    for (seed, f) in frames.iter().enumerate() {
        assert_eq!(*f, execute_schedule(&d, &rp, &t, seed as u64).unwrap());
    }
    assert!(frames.windows(2).any(|w| w[0].modes != w[1].modes));
}

#[test]
fn oversubscription_keeps_capacity_winners_in_user_order() {
    let t = MacTimings::default();
    let n = 60;
    let d = Decision::uniform(1.0, Assignment::from_choices(4, &(0..n).map(|u| Some(u % 4)).collect::<Vec<_>>()));
    let rp = point(n as f64, 0.2);
    let s = execute_schedule(&d, &rp, &t, 5).unwrap();
    assert_eq!(s.capacity, rp.n_reserved.floor() as usize);
    assert!(s.oversubscribed);
    assert_eq!(s.reservations.len(), s.capacity);
    assert!(s.reservations.windows(2).all(|w| w[0].user < w[1].user));
    assert_eq!(s.exceeds_haps, s.capacity > 4);
    let deferred = s.modes.iter().filter(|m| **m == UserMode::GasDeferred).count();
    assert_eq!(deferred, n - s.capacity);
}

#[test]
fn users_without_a_hap_never_reserve() {
    let t = MacTimings::default();
    let d = Decision::uniform(1.0, Assignment::zeros(8, 2));
    let s = execute_schedule(&d, &point(8.0, 0.5), &t, 1).unwrap();
    assert!(s.reservations.is_empty());
    assert!(s.modes.iter().all(|m| *m == UserMode::GasDeferred));
    assert_eq!(s.reserved_payload, 0.0);
}

#[test]
fn invalid_decisions_are_rejected() {
    let t = MacTimings::default();
    let rp = point(4.0, 0.5);
    let bad_rho = Decision { rho: vec![0.2, 1.5], assignment: Assignment::zeros(2, 1) };
    assert!(execute_schedule(&bad_rho, &rp, &t, 0).is_err());
    let two_haps = Decision::uniform(0.5, Assignment::from_pairs(2, 2, &[(0, 0), (0, 1)]));
    assert!(execute_schedule(&two_haps, &rp, &t, 0).is_err());
}

#[test]
fn full_relay_fills_reserved_period_to_whole_reservations() {
    let t = MacTimings::default();
    let (_, rates) = with_budget(random_budget(40, 3, (160.0, 200.0), (120.0, 160.0), &mut ChaCha8Rng::seed_from_u64(2)), 0.3);
    let choices: Vec<Option<usize>> = rates.r_gas.iter().map(|_| Some(0)).collect();
    let d = Decision::uniform(1.0, Assignment::from_choices(3, &choices));
    let rp = point(40.0, 0.3);
    let s = execute_schedule(&d, &rp, &t, 8).unwrap();
    let expect = rp.n_reserved.floor() * rp.step.unwrap() * t.payload.as_secs_f64();
    assert!((s.reserved_payload - expect).abs() <= t.slot.as_secs_f64());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn schedules_are_feasible(seed in any::<u64>(), n in 1usize..50, k in 1usize..6, q in 0.05f64..=1.0) {
        let t = MacTimings::default();
        let rng = &mut ChaCha8Rng::seed_from_u64(seed);
        let d = random_decision(n, k, rng);
        let n2 = d.rho.iter().sum::<f64>();
        prop_assume!(n2 * q >= 1.0);
        let rp = point(n2, q);
        let s = execute_schedule(&d, &rp, &t, seed).unwrap();
        let t_h = t.negotiation.as_secs_f64();
        let frame = t.frame.as_secs_f64();
        let t_hs = t.handshake_time().as_secs_f64();
        let eps = 1e-12;
        prop_assert!(s.reservations.len() <= s.capacity);
        for r in &s.reservations {
            prop_assert!(r.payload_start >= t_h - eps && r.payload_end <= frame + eps);
            prop_assert!(r.handshake_start >= 0.0 && r.handshake_start + t_hs <= t_h + eps);
            prop_assert!(r.packets as f64 * t.payload.as_secs_f64() <= r.payload_end - r.payload_start + eps);
        }
        for w in s.reservations.windows(2) {
            prop_assert!(w[0].payload_end <= w[1].payload_start + eps);
            prop_assert!(w[0].handshake_start + t_hs <= w[1].handshake_start + eps);
        }
        prop_assert!(s.reserved_payload <= t.reserved_time().as_secs_f64() + eps);
    }
}
