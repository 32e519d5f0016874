//! Slot-level simulations against the analytical fixed points.

use hapres_core::config::MacTimings;
use hapres_core::csma::{solve_contention, DEFAULT_TOL};
use hapres_core::reservation::{solve_negotiation, Negotiation};
use hapres_core::sim::{simulate_csma, simulate_negotiation, SimError, MIN_FRAMES, MIN_SLOTS};

#[test]
fn lone_station_transmits_at_two_over_w_plus_one() {
    let t = MacTimings::default();
    let s = simulate_csma(1, &t, 200_000, 3).unwrap();
    let tau = 2.0 / (f64::from(t.w_min) + 1.0);
    assert!(s.est_tau.agrees(tau, 3.0), "{:?} vs {tau}", s.est_tau);
    assert_eq!(s.collisions, 0);
    assert_eq!(s.successes, s.tx_attempts);
}

#[test]
fn ten_stations_agree_with_fixed_point() {
    let t = MacTimings::default();
    let cp = solve_contention(10.0, &t, DEFAULT_TOL).unwrap();
    let s = simulate_csma(10, &t, 400_000, 11).unwrap();
    assert!(s.est_ps.agrees(cp.p_success, 3.0), "p_s {:?} vs {}", s.est_ps, cp.p_success);
    assert!(s.est_pe.agrees(cp.p_idle, 3.0), "p_e {:?} vs {}", s.est_pe, cp.p_idle);
    assert!(s.est_pc.agrees(cp.p_fail, 3.0), "p_c {:?} vs {}", s.est_pc, cp.p_fail);
    assert!(s.est_util.agrees(cp.utilization, 3.0), "phi {:?} vs {}", s.est_util, cp.utilization);
}

#[test]
fn slot_outcomes_are_conserved() {
    let t = MacTimings::default();
    let s = simulate_csma(7, &t, 50_000, 2).unwrap();
    assert_eq!(s.successes + s.collisions + s.idles, s.slots_simulated);
    assert_eq!(s.slots_simulated, 50_000);
    // a collision takes at least two transmitters
    assert!(s.tx_attempts >= s.successes + 2 * s.collisions);
    let total = s.est_ps.value + s.est_pe.value + s.est_pc.value;
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn same_seed_same_run() {
    let t = MacTimings::default();
    assert_eq!(simulate_csma(5, &t, 20_000, 9).unwrap(), simulate_csma(5, &t, 20_000, 9).unwrap());
    assert_ne!(simulate_csma(5, &t, 20_000, 9).unwrap(), simulate_csma(5, &t, 20_000, 10).unwrap());
    let a = simulate_negotiation(30, 0.2, &t, 200, 4).unwrap();
    assert_eq!(a, simulate_negotiation(30, 0.2, &t, 200, 4).unwrap());
}

#[test]
fn standard_error_shrinks_with_run_length() {
    let t = MacTimings::default();
    let short = simulate_csma(10, &t, 10_000, 1).unwrap();
    let long = simulate_csma(10, &t, 1_000_000, 1).unwrap();
    let ratio = short.est_ps.se / long.est_ps.se;
    assert!((8.0..12.5).contains(&ratio), "{ratio}");
}

#[test]
fn single_negotiator_always_succeeds_when_it_sends() {
    let t = MacTimings::default();
    let rp = solve_negotiation(1.0, &Negotiation::new(1.0, &t), &t, 1e-12).unwrap();
    let s = simulate_negotiation(1, 1.0, &t, 5_000, 8).unwrap();
    assert!(s.zeta_s.agrees(rp.zeta_s, 3.0), "{:?} vs {}", s.zeta_s, rp.zeta_s);
}

#[test]
fn fifty_negotiators_agree_with_fixed_point() {
    let t = MacTimings::default();
    let rp = solve_negotiation(50.0, &Negotiation::new(0.1, &t), &t, 1e-12).unwrap();
    let s = simulate_negotiation(50, 0.1, &t, 5_000, 21).unwrap();
    assert!(s.zeta_s.agrees(rp.zeta_s, 3.0), "{:?} vs {}", s.zeta_s, rp.zeta_s);
    assert!(s.mean_reserved.agrees(rp.n_reserved, 3.0), "{:?} vs {}", s.mean_reserved, rp.n_reserved);
    assert_eq!(s.slots_per_frame, 21);
    assert_eq!(s.slots_simulated, 5_000 * 21);
}

#[test]
fn rejects_degenerate_runs() {
    let t = MacTimings::default();
    assert_eq!(simulate_csma(0, &t, MIN_SLOTS, 1), Err(SimError::NoStations));
    assert!(matches!(simulate_csma(3, &t, MIN_SLOTS - 1, 1), Err(SimError::TooShort { .. })));
    assert!(matches!(simulate_negotiation(3, 0.5, &t, MIN_FRAMES - 1, 1), Err(SimError::TooShort { .. })));
    assert!(matches!(simulate_negotiation(3, 1.5, &t, MIN_FRAMES, 1), Err(SimError::InvalidActivity(_))));
    let short = MacTimings { negotiation: std::time::Duration::from_micros(100), ..t.clone() };
    assert!(matches!(simulate_negotiation(3, 0.5, &short, MIN_FRAMES, 1), Err(SimError::NoNegotiationSlots)));
}

#[test]
fn csv_has_header_and_one_row() {
    let t = MacTimings::default();
    let mut buf = Vec::new();
    simulate_csma(4, &t, 20_000, 6).unwrap().write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
    assert!(lines[0].starts_with("stations,seed"));
}
