//! Node positions and the seeded default layout used to derive path losses.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Point = [f64; 3];

pub fn distance(a: &Point, b: &Point) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub user_positions: Vec<Point>,
    pub hap_positions: Vec<Point>,
    pub satellite_position: Point,
    pub carrier_freq_hz: f64,
}

impl Geometry {
    /// Lists every problem with this geometry for a population of `n_users`
    /// users and `n_haps` platforms. Shape problems start with "expected".
    pub fn check(&self, n_users: usize, n_haps: usize) -> Vec<String> {
        let mut out = Vec::new();
        if self.user_positions.len() != n_users {
            out.push(format!("expected {n_users} user positions, got {}", self.user_positions.len()));
        }
        if self.hap_positions.len() != n_haps {
            out.push(format!("expected {n_haps} HAP positions, got {}", self.hap_positions.len()));
        }
        if !(self.carrier_freq_hz > 0.0 && self.carrier_freq_hz.is_finite()) {
            out.push(format!("carrier frequency must be positive, got {}", self.carrier_freq_hz));
        }
        let all = self
            .user_positions
            .iter()
            .chain(&self.hap_positions)
            .chain(std::iter::once(&self.satellite_position));
        if all.flatten().any(|c| !c.is_finite()) {
            out.push("positions must be finite".into());
        }
        let sat = &self.satellite_position;
        for (n, u) in self.user_positions.iter().enumerate() {
            if !(distance(u, sat) > 0.0) {
                out.push(format!("user {n} coincides with the satellite"));
            }
            for (k, h) in self.hap_positions.iter().enumerate() {
                if !(distance(u, h) > 0.0) {
                    out.push(format!("user {n} coincides with HAP {k}"));
                }
            }
        }
        for (k, h) in self.hap_positions.iter().enumerate() {
            if !(distance(h, sat) > 0.0) {
                out.push(format!("HAP {k} coincides with the satellite"));
            }
        }
        out
    }
}

/// Parameters of the generated layout: users uniform in a ground disc,
/// HAPs evenly spaced on a ring at stratospheric altitude, satellite at
/// zenith above the disc centre.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub disc_radius_m: f64,
    pub hap_altitude_m: f64,
    pub hap_ring_radius_m: f64,
    pub satellite_altitude_m: f64,
    pub carrier_freq_hz: f64,
    pub seed: u64,
}

impl Default for Layout {
    fn default() -> Self {
        Self {
            disc_radius_m: 10_000.0,
            hap_altitude_m: 20_000.0,
            hap_ring_radius_m: 5_000.0,
            satellite_altitude_m: 780_000.0,
            carrier_freq_hz: 2.0e9,
            seed: 1,
        }
    }
}

impl Layout {
    /// Places `n_users` users and `n_haps` platforms.
    ///
    /// User `n` depends only on the seed and `n`, so the layout for a
    /// larger population extends the layout for a smaller one.
    pub fn generate(&self, n_users: usize, n_haps: usize) -> Geometry {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let user_positions = (0..n_users)
            .map(|_| {
                let r = self.disc_radius_m * rng.gen::<f64>().sqrt();
                let theta = std::f64::consts::TAU * rng.gen::<f64>();
                [r * theta.cos(), r * theta.sin(), 0.0]
            })
            .collect();
        let hap_positions = (0..n_haps)
            .map(|k| {
                if n_haps == 1 {
                    return [0.0, 0.0, self.hap_altitude_m];
                }
                let theta = std::f64::consts::TAU * k as f64 / n_haps as f64;
                [
                    self.hap_ring_radius_m * theta.cos(),
                    self.hap_ring_radius_m * theta.sin(),
                    self.hap_altitude_m,
                ]
            })
            .collect();
        Geometry {
            user_positions,
            hap_positions,
            satellite_position: [0.0, 0.0, self.satellite_altitude_m],
            carrier_freq_hz: self.carrier_freq_hz,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn users_stay_in_disc_and_prefix_is_stable() {
        let layout = Layout::default();
        let small = layout.generate(10, 3);
        let large = layout.generate(50, 3);
        assert_eq!(small.user_positions[..], large.user_positions[..10]);
        for u in &large.user_positions {
            assert!(u[0].hypot(u[1]) <= layout.disc_radius_m);
            assert_eq!(u[2], 0.0);
        }
        assert!(large.check(50, 3).is_empty());
    }

    #[test]
    fn coincident_nodes_are_reported() {
        let mut g = Layout::default().generate(2, 1);
        g.user_positions[1] = g.hap_positions[0];
        let problems = g.check(2, 1);
        assert_eq!(problems.len(), 1);
        assert!(problems[0].contains("user 1"));
        assert!(g.check(3, 1)[0].starts_with("expected"));
    }
}
