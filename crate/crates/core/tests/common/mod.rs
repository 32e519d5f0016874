//! Instance generators and brute-force references shared by the
//! integration tests.
#![allow(dead_code, clippy::too_many_arguments)]

use hapres_core::config::{Links, MacTimings, SystemConfig};
use hapres_core::defaults::default_config;
use hapres_core::phy::{build_rate_table, LinkBudget, RateTable};
use hapres_core::reservation::solve_reservation;
use hapres_core::throughput::case1_sum;
use hapres_core::decision::Assignment;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random losses: direct links in `direct_db`, both relay hops in `relay_db`.
pub fn random_budget(
    n_users: usize,
    n_haps: usize,
    direct_db: (f64, f64),
    relay_db: (f64, f64),
    rng: &mut impl Rng,
) -> LinkBudget {
    LinkBudget {
        loss_g2s_db: (0..n_users).map(|_| rng.gen_range(direct_db.0..direct_db.1)).collect(),
        loss_gu_hap_db: (0..n_users)
            .map(|_| (0..n_haps).map(|_| rng.gen_range(relay_db.0..relay_db.1)).collect())
            .collect(),
        loss_hap_sat_db: (0..n_haps).map(|_| rng.gen_range(relay_db.0..relay_db.1)).collect(),
    }
}

/// Default powers and bandwidth over explicit losses, activity `q`.
pub fn with_budget(budget: LinkBudget, q: f64) -> (SystemConfig, RateTable) {
    let n_users = budget.n_users();
    let n_haps = budget.n_haps();
    let cfg = SystemConfig {
        links: Links::PathLoss(budget.clone()),
        arrival_rate: 1.0 - q,
        service_rate: q,
        ..default_config(n_users, n_haps, 1)
    };
    let rates = build_rate_table(&cfg, &budget).unwrap();
    (cfg, rates)
}

/// A small instance whose relay links are good enough to compete with the
/// direct ones, and activity high enough that a few users can negotiate.
pub fn toy_instance(seed: u64, max_users: usize, max_haps: usize) -> (SystemConfig, RateTable) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_users);
    let k = rng.gen_range(1..=max_haps);
    let q = rng.gen_range(0.5..=1.0);
    let budget = random_budget(n, k, (160.0, 200.0), (120.0, 160.0), &mut rng);
    with_budget(budget, q)
}

/// Every HAP choice vector (`None` = no HAP), optionally with at most one
/// user per HAP.
pub fn all_choices(n_users: usize, n_haps: usize, exclusive: bool) -> Vec<Vec<Option<usize>>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n_users {
        let mut next = Vec::new();
        for prefix in &out {
            for c in std::iter::once(None).chain((0..n_haps).map(Some)) {
                if exclusive && c.is_some() && prefix.contains(&c) {
                    continue;
                }
                let mut v: Vec<Option<usize>> = prefix.clone();
                v.push(c);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Largest `sum R_nk` over choice vectors with exactly `count` pairs, and
/// the maximizer; `None` if no vector has that many pairs.
pub fn exhaustive_best(rates: &RateTable, count: usize, exclusive: bool) -> Option<(f64, Assignment)> {
    let mut best: Option<(f64, Assignment)> = None;
    for choice in all_choices(rates.n_users(), rates.n_haps(), exclusive) {
        if choice.iter().flatten().count() != count {
            continue;
        }
        let w: f64 = choice.iter().enumerate().filter_map(|(n, c)| c.map(|k| rates.r_gas[n][k])).sum();
        if best.as_ref().is_none_or(|(b, _)| w > *b) {
            best = Some((w, Assignment::from_choices(rates.n_haps(), &choice)));
        }
    }
    best
}

/// Joint optimum over a `1/steps` grid of uniform `rho` and every choice
/// vector holding at most `floor(N_s(rho))` pairs. Throughput is linear in
/// the chosen rates, so each `rho` needs only the best rate sum per pair
/// count. Returns `(rho, value)`.
pub fn joint_enumeration(cfg: &SystemConfig, t: &MacTimings, rates: &RateTable, exclusive: bool, steps: usize) -> (f64, f64) {
    let n = rates.n_users();
    let mut best_by_count = vec![0.0f64; n + 1];
    for choice in all_choices(n, rates.n_haps(), exclusive) {
        let c = choice.iter().flatten().count();
        let w: f64 = choice.iter().enumerate().filter_map(|(u, h)| h.map(|k| rates.r_gas[u][k])).sum();
        best_by_count[c] = best_by_count[c].max(w);
    }
    for c in 1..=n {
        best_by_count[c] = best_by_count[c].max(best_by_count[c - 1]);
    }
    let empty = Assignment::zeros(n, rates.n_haps());
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for i in 0..=steps {
        let rho = i as f64 / steps as f64;
        let Ok(r) = case1_sum(&vec![rho; n], &empty, rates, t, cfg) else { continue };
        let cap = if r.n2 > 0.0 {
            solve_reservation(r.n2, cfg, t, 1e-12).unwrap().n_reserved.floor() as usize
        } else {
            0
        };
        let v = r.s_g2s + r.beta * rho * best_by_count[cap.min(n)];
        if v > best.1 {
            best = (rho, v);
        }
    }
    best
}

/// Whether `(rho, u)` is a block-coordinate optimum: `u` is the best
/// admissible choice at `rho`, and no `rho` on a `1/steps` grid beats the
/// objective for `u` by more than `rel`.
pub fn is_coordinate_optimum(
    cfg: &SystemConfig,
    t: &MacTimings,
    rates: &RateTable,
    rho: f64,
    u: &Assignment,
    objective: f64,
    exclusive: bool,
    steps: usize,
    rel: f64,
) -> bool {
    let n = rates.n_users();
    let cap_at = |rho: f64| -> usize {
        if rho == 0.0 {
            return 0;
        }
        solve_reservation(rho * n as f64, cfg, t, 1e-12).map_or(0, |rp| rp.n_reserved.floor() as usize)
    };
    let feasible = if exclusive { n.min(rates.n_haps()) } else { n };
    let count = cap_at(rho).min(feasible);
    let best_u = exhaustive_best(rates, count, exclusive).map_or(0.0, |(w, _)| w);
    if u.weighted_sum(&rates.r_gas) < best_u * (1.0 - 1e-12) {
        return false;
    }
    // u truncated to the best pairs that fit at each rho
    let mut pairs: Vec<(usize, usize)> = u.pairs().collect();
    pairs.sort_by(|a, b| rates.r_gas[b.0][b.1].total_cmp(&rates.r_gas[a.0][a.1]));
    for i in 0..=steps {
        let r = i as f64 / steps as f64;
        let kept: Vec<(usize, usize)> = pairs.iter().copied().take(cap_at(r)).collect();
        let a = Assignment::from_pairs(n, rates.n_haps(), &kept);
        if let Ok(rep) = case1_sum(&vec![r; n], &a, rates, t, cfg) {
            if rep.s_sum > objective * (1.0 + rel) {
                return false;
            }
        }
    }
    true
}
