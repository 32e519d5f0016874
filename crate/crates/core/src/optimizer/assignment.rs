//! HAP selection for a fixed relay probability: pick at most `count`
//! user-HAP pairs of largest total relay rate.

use crate::decision::Assignment;
use crate::phy::RateTable;

use super::OptimizerError;

/// Largest instance (`N * K`) the enumeration oracle accepts.
pub const EXHAUSTIVE_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignmentMode {
    /// HAPs are time-shared: each user independently takes its best HAP.
    PerUserBest,
    /// Each HAP serves at most one user per frame.
    OnePerHap,
    /// Full enumeration, with or without the one-user-per-HAP rule.
    Exhaustive { exclusive: bool },
}

impl AssignmentMode {
    pub fn exclusive(self) -> bool {
        matches!(self, AssignmentMode::OnePerHap | AssignmentMode::Exhaustive { exclusive: true })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentOutcome {
    pub assignment: Assignment,
    /// Pairs requested (whole reservations per frame).
    pub requested: usize,
    /// Set when fewer pairs than requested can be formed.
    pub capped: bool,
}

/// Most pairs an assignment can hold under `mode`.
pub fn feasible_pairs(n_users: usize, n_haps: usize, mode: AssignmentMode) -> usize {
    if n_haps == 0 {
        0
    } else if mode.exclusive() {
        n_users.min(n_haps)
    } else {
        n_users
    }
}

/// Best assignment with `min(count, feasible)` pairs.
pub fn solve_assignment(rates: &RateTable, count: usize, mode: AssignmentMode) -> Result<AssignmentOutcome, OptimizerError> {
    let (n, k) = (rates.n_users(), rates.n_haps());
    let target = count.min(feasible_pairs(n, k, mode));
    let assignment = match mode {
        AssignmentMode::PerUserBest => per_user_best(&rates.r_gas, k, target),
        AssignmentMode::OnePerHap => one_per_hap(&rates.r_gas, k, target),
        AssignmentMode::Exhaustive { exclusive } => {
            if n * k > EXHAUSTIVE_LIMIT {
                return Err(OptimizerError::TooLargeForEnumeration { n_users: n, n_haps: k });
            }
            exhaustive(&rates.r_gas, k, target, exclusive)
        }
    };
    if target < count {
        log::debug!("{count} reservations requested, only {target} pairs feasible");
    }
    Ok(AssignmentOutcome { assignment, requested: count, capped: target < count })
}

fn best_hap(row: &[f64]) -> Option<(usize, f64)> {
    row.iter().copied().enumerate().fold(None, |best, (k, r)| match best {
        Some((_, b)) if b >= r => best,
        _ => Some((k, r)),
    })
}

fn per_user_best(weights: &[Vec<f64>], n_haps: usize, count: usize) -> Assignment {
    let mut best: Vec<(usize, usize, f64)> =
        weights.iter().enumerate().filter_map(|(n, row)| best_hap(row).map(|(k, r)| (n, k, r))).collect();
    // stable: equal rates keep the lower user index first
    best.sort_by(|a, b| b.2.total_cmp(&a.2));
    let pairs: Vec<(usize, usize)> = best.iter().take(count).map(|&(n, k, _)| (n, k)).collect();
    Assignment::from_pairs(weights.len(), n_haps, &pairs)
}

/// Maximum-weight matching of exactly `count` edges by successive shortest
/// augmenting paths (Bellman-Ford on the residual graph, costs = -weight).
fn one_per_hap(weights: &[Vec<f64>], n_haps: usize, count: usize) -> Assignment {
    let n_users = weights.len();
    let mut hap_of_user: Vec<Option<usize>> = vec![None; n_users];
    let mut user_of_hap: Vec<Option<usize>> = vec![None; n_haps];
    for _ in 0..count {
        // dist over users then haps; source edges to free users cost 0
        let mut dist_user: Vec<f64> = hap_of_user.iter().map(|h| if h.is_none() { 0.0 } else { f64::INFINITY }).collect();
        let mut dist_hap = vec![f64::INFINITY; n_haps];
        let mut prev_hap: Vec<Option<usize>> = vec![None; n_haps];
        for _ in 0..=(n_users + n_haps) {
            let mut changed = false;
            for u in 0..n_users {
                if !dist_user[u].is_finite() {
                    continue;
                }
                for h in 0..n_haps {
                    if hap_of_user[u] == Some(h) {
                        continue;
                    }
                    let d = dist_user[u] - weights[u][h];
                    if d < dist_hap[h] - 1e-15 {
                        dist_hap[h] = d;
                        prev_hap[h] = Some(u);
                        changed = true;
                    }
                }
            }
            for h in 0..n_haps {
                if let (Some(u), true) = (user_of_hap[h], dist_hap[h].is_finite()) {
                    let d = dist_hap[h] + weights[u][h];
                    if d < dist_user[u] - 1e-15 {
                        dist_user[u] = d;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let end = (0..n_haps)
            .filter(|h| user_of_hap[*h].is_none() && dist_hap[*h].is_finite())
            .min_by(|a, b| dist_hap[*a].total_cmp(&dist_hap[*b]));
        let Some(mut h) = end else { break };
        // flip the path back to a free user
        loop {
            let u = prev_hap[h].expect("reached hap has a predecessor");
            let old = hap_of_user[u];
            hap_of_user[u] = Some(h);
            user_of_hap[h] = Some(u);
            match old {
                Some(prev) => h = prev,
                None => break,
            }
        }
    }
    Assignment::from_choices(n_haps, &hap_of_user)
}

/// Enumerates every assignment with exactly `count` pairs (one HAP per user,
/// optionally one user per HAP). Ties keep the first in enumeration order.
fn exhaustive(weights: &[Vec<f64>], n_haps: usize, count: usize, exclusive: bool) -> Assignment {
    let n_users = weights.len();
    let mut choice: Vec<Option<usize>> = vec![None; n_users];
    let mut best: Option<(f64, Vec<Option<usize>>)> = None;
    let mut used = vec![false; n_haps];

    #[allow(clippy::too_many_arguments)]
    fn walk(
        n: usize,
        taken: usize,
        value: f64,
        count: usize,
        exclusive: bool,
        weights: &[Vec<f64>],
        choice: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        best: &mut Option<(f64, Vec<Option<usize>>)>,
    ) {
        let remaining = weights.len() - n;
        if taken + remaining < count {
            return;
        }
        if n == weights.len() {
            if best.as_ref().is_none_or(|(b, _)| value > *b) {
                *best = Some((value, choice.clone()));
            }
            return;
        }
        choice[n] = None;
        walk(n + 1, taken, value, count, exclusive, weights, choice, used, best);
        if taken == count {
            return;
        }
        for h in 0..used.len() {
            if exclusive && used[h] {
                continue;
            }
            choice[n] = Some(h);
            used[h] = true;
            walk(n + 1, taken + 1, value + weights[n][h], count, exclusive, weights, choice, used, best);
            used[h] = false;
        }
        choice[n] = None;
    }

    walk(0, 0, 0.0, count, exclusive, weights, &mut choice, &mut used, &mut best);
    match best {
        Some((_, c)) => Assignment::from_choices(n_haps, &c),
        None => Assignment::zeros(n_users, n_haps),
    }
}

/// Keeps the `count` highest-rate pairs of `assignment` (equal rates keep
/// the lower user index).
pub fn truncate(assignment: &Assignment, weights: &[Vec<f64>], count: usize) -> Assignment {
    if assignment.total() <= count {
        return assignment.clone();
    }
    let mut pairs: Vec<(usize, usize)> = assignment.pairs().collect();
    pairs.sort_by(|a, b| weights[b.0][b.1].total_cmp(&weights[a.0][a.1]));
    pairs.truncate(count);
    Assignment::from_pairs(assignment.n_users(), assignment.n_haps(), &pairs)
}
