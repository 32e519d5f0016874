//! Transmission-control decisions: per-user relay probability and HAP choice.

use std::fmt;

/// Binary user-to-HAP matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    n_users: usize,
    n_haps: usize,
    cells: Vec<bool>,
}

impl Assignment {
    pub fn zeros(n_users: usize, n_haps: usize) -> Self {
        Self { n_users, n_haps, cells: vec![false; n_users * n_haps] }
    }

    /// Builds an assignment from `(user, hap)` pairs. Panics on an index
    /// outside the shape.
    pub fn from_pairs(n_users: usize, n_haps: usize, pairs: &[(usize, usize)]) -> Self {
        let mut a = Self::zeros(n_users, n_haps);
        for &(n, k) in pairs {
            a.set(n, k, true);
        }
        a
    }

    /// Builds from a row-per-user choice vector.
    pub fn from_choices(n_haps: usize, choices: &[Option<usize>]) -> Self {
        let mut a = Self::zeros(choices.len(), n_haps);
        for (n, c) in choices.iter().enumerate() {
            if let Some(k) = c {
                a.set(n, *k, true);
            }
        }
        a
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_haps(&self) -> usize {
        self.n_haps
    }

    pub fn get(&self, n: usize, k: usize) -> bool {
        assert!(n < self.n_users && k < self.n_haps, "({n}, {k}) outside {}x{}", self.n_users, self.n_haps);
        self.cells[n * self.n_haps + k]
    }

    pub fn set(&mut self, n: usize, k: usize, value: bool) {
        assert!(n < self.n_users && k < self.n_haps, "({n}, {k}) outside {}x{}", self.n_users, self.n_haps);
        self.cells[n * self.n_haps + k] = value;
    }

    pub fn row(&self, n: usize) -> &[bool] {
        &self.cells[n * self.n_haps..(n + 1) * self.n_haps]
    }

    pub fn row_sum(&self, n: usize) -> usize {
        self.row(n).iter().filter(|b| **b).count()
    }

    pub fn column_sum(&self, k: usize) -> usize {
        (0..self.n_users).filter(|n| self.get(*n, k)).count()
    }

    pub fn total(&self) -> usize {
        self.cells.iter().filter(|b| **b).count()
    }

    /// The HAP of user `n`, if exactly one is selected.
    pub fn hap_of(&self, n: usize) -> Option<usize> {
        let row = self.row(n);
        match row.iter().filter(|b| **b).count() {
            1 => row.iter().position(|b| *b),
            _ => None,
        }
    }

    /// Selected `(user, hap)` pairs in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(move |(i, _)| (i / self.n_haps, i % self.n_haps))
    }

    /// `sum u[n][k] * weight[n][k]`.
    pub fn weighted_sum(&self, weight: &[Vec<f64>]) -> f64 {
        self.pairs().map(|(n, k)| weight[n][k]).sum()
    }
}

/// Strategy of every user: probability of using the relayed link and the
/// HAP it reserves.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub rho: Vec<f64>,
    pub assignment: Assignment,
}

impl Decision {
    pub fn uniform(rho: f64, assignment: Assignment) -> Self {
        Self { rho: vec![rho; assignment.n_users()], assignment }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DecisionError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("range violation: rho[{user}] = {value} outside [0, 1]")]
    RangeViolation { user: usize, value: f64 },
    #[error("row-sum violation: user {user} assigned to {count} HAPs")]
    RowSumViolation { user: usize, count: usize },
    #[error("count violation: {assigned} assignments, expected {expected}")]
    CountViolation { assigned: usize, expected: usize },
}

/// Checks probability range, binary single-HAP rows and the total
/// reservation count `n_reserved`.
pub fn validate_decision(d: &Decision, n_reserved: usize) -> Result<(), DecisionError> {
    check_rho_and_rows(d)?;
    let assigned = d.assignment.total();
    if assigned != n_reserved {
        return Err(DecisionError::CountViolation { assigned, expected: n_reserved });
    }
    Ok(())
}

/// Range and row-sum checks without the count constraint.
pub fn check_rho_and_rows(d: &Decision) -> Result<(), DecisionError> {
    if d.rho.len() != d.assignment.n_users() {
        return Err(DecisionError::ShapeMismatch(format!(
            "{} probabilities for {} assignment rows",
            d.rho.len(),
            d.assignment.n_users()
        )));
    }
    if let Some((user, value)) = d.rho.iter().enumerate().find(|(_, r)| !(0.0..=1.0).contains(*r)) {
        return Err(DecisionError::RangeViolation { user, value: *value });
    }
    check_rows(&d.assignment)
}

pub fn check_rows(a: &Assignment) -> Result<(), DecisionError> {
    for n in 0..a.n_users() {
        let count = a.row_sum(n);
        if count > 1 {
            return Err(DecisionError::RowSumViolation { user: n, count });
        }
    }
    Ok(())
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for n in 0..self.n_users {
            let row: String = self.row(n).iter().map(|b| if *b { '1' } else { '0' }).collect();
            writeln!(f, "{row}")?;
        }
        Ok(())
    }
}
