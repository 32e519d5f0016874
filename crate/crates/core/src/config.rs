//! Scenario parameters shared by every analysis module, and their validation.

use std::fmt;
use std::time::Duration;

use crate::geometry::Geometry;
use crate::phy::LinkBudget;

/// Payload size of an RTS frame, in bytes.
pub const RTS_BYTES: u32 = 24;
/// Payload size of a CTS frame, in bytes.
pub const CTS_BYTES: u32 = 16;
/// Default rate at which control frames are sent, bits/s.
pub const DEFAULT_CONTROL_RATE_BPS: f64 = 1.0e6;

/// Converts seconds to a [`Duration`] rounded to the nearest nanosecond.
///
/// Returns `None` for negative or non-finite input.
pub fn duration_from_secs(secs: f64) -> Option<Duration> {
    if !secs.is_finite() || secs < 0.0 {
        return None;
    }
    let nanos = (secs * 1e9).round();
    if nanos > u64::MAX as f64 {
        return None;
    }
    Some(Duration::from_nanos(nanos as u64))
}

/// Every time constant of the two MAC schemes.
///
/// Durations are held at nanosecond resolution so the derived frame-level
/// quantities are exact sums of their parts.
#[derive(Debug, Clone, PartialEq)]
pub struct MacTimings {
    pub slot: Duration,
    pub sifs: Duration,
    pub difs: Duration,
    pub rts: Duration,
    pub cts: Duration,
    /// On-air time of one data payload.
    pub payload: Duration,
    /// Full TDMA frame, negotiation plus reserved period.
    pub frame: Duration,
    /// Negotiation period at the start of every frame.
    pub negotiation: Duration,
    /// Minimum contention window.
    pub w_min: u32,
    /// Number of window doublings.
    pub backoff_stages: u32,
}

impl MacTimings {
    /// On-air time of a control frame of `bytes` at `rate_bps`.
    pub fn control_frame(bytes: u32, rate_bps: f64) -> Option<Duration> {
        if !(rate_bps > 0.0) {
            return None;
        }
        duration_from_secs(f64::from(bytes) * 8.0 / rate_bps)
    }

    /// Default timings with RTS/CTS durations derived from `rate_bps`.
    pub fn with_control_rate(rate_bps: f64) -> Option<Self> {
        Some(Self {
            rts: Self::control_frame(RTS_BYTES, rate_bps)?,
            cts: Self::control_frame(CTS_BYTES, rate_bps)?,
            ..Self::default()
        })
    }

    /// Channel time consumed by a successful RTS/CTS/data exchange.
    pub fn success_time(&self) -> Duration {
        self.rts + self.cts + self.payload + 2 * self.sifs + self.difs + 2 * self.slot
    }

    /// Channel time consumed by a collision of RTS frames.
    pub fn collision_time(&self) -> Duration {
        self.rts + self.difs + self.slot
    }

    /// Time of one successful reservation handshake during negotiation.
    pub fn handshake_time(&self) -> Duration {
        self.rts + self.cts + self.sifs + self.difs
    }

    /// Reserved (collision-free) part of the frame.
    ///
    /// Saturates at zero for timings that have not been validated.
    pub fn reserved_time(&self) -> Duration {
        self.frame.saturating_sub(self.negotiation)
    }

    /// Largest contention window, `w_min * 2^backoff_stages`.
    pub fn w_max(&self) -> u64 {
        u64::from(self.w_min) << self.backoff_stages.min(32)
    }
}

impl Default for MacTimings {
    fn default() -> Self {
        Self {
            slot: Duration::from_micros(50),
            sifs: Duration::from_micros(28),
            difs: Duration::from_micros(128),
            rts: Duration::from_micros(192),
            cts: Duration::from_micros(128),
            payload: Duration::from_micros(500),
            frame: Duration::from_millis(200),
            negotiation: Duration::from_millis(10),
            w_min: 32,
            backoff_stages: 5,
        }
    }
}

/// Where the path losses of a scenario come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Links {
    /// Free-space losses computed from node positions.
    Geometry(Geometry),
    /// Explicit loss matrices, in dB.
    PathLoss(LinkBudget),
}

/// Population sizes, bandwidth split, link budget and traffic rates of one
/// scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub n_users: usize,
    pub n_haps: usize,
    pub n_subchannels: usize,
    pub bandwidth_hz: f64,
    /// Bandwidth share of the direct ground-to-space links.
    pub w1: f64,
    /// Bandwidth share of the relayed ground-air-space links.
    pub w2: f64,
    pub tx_power_g2s_w: f64,
    pub tx_power_gas_user_w: f64,
    pub tx_power_hap_w: f64,
    pub noise_g2s_w: f64,
    pub noise_gu_hap_w: f64,
    pub noise_hap_sat_w: f64,
    pub links: Links,
    /// Packet arrival rate at a ground user, 1/s.
    pub arrival_rate: f64,
    /// Service rate at a ground user, 1/s.
    pub service_rate: f64,
}

impl SystemConfig {
    /// Probability that a ground user sits in the negotiation period,
    /// `service / (arrival + service)`.
    pub fn negotiation_activity(&self) -> f64 {
        self.service_rate / (self.arrival_rate + self.service_rate)
    }
}

/// Category of a failed scenario or decision check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    InvalidWeight,
    EmptyPopulation,
    NonpositiveDuration,
    NonpositiveValue,
    ShapeMismatch,
    InvalidGeometry,
    InvalidWindow,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationKind::InvalidWeight => "invalid-weight",
            ViolationKind::EmptyPopulation => "empty-population",
            ViolationKind::NonpositiveDuration => "nonpositive-duration",
            ViolationKind::NonpositiveValue => "nonpositive-value",
            ViolationKind::ShapeMismatch => "shape-mismatch",
            ViolationKind::InvalidGeometry => "invalid-geometry",
            ViolationKind::InvalidWindow => "invalid-window",
        };
        f.write_str(s)
    }
}

/// One violated scenario invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub field: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({}): {}", self.kind, self.field, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid scenario: {}", join_violations(.0))]
pub struct ConfigError(pub Vec<Violation>);

impl ConfigError {
    pub fn violations(&self) -> &[Violation] {
        &self.0
    }

    pub fn has(&self, kind: ViolationKind, field: &str) -> bool {
        self.0.iter().any(|v| v.kind == kind && v.field == field)
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// A scenario whose configuration and timings passed [`validate_config`].
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    config: SystemConfig,
    timings: MacTimings,
}

impl Scenario {
    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn timings(&self) -> &MacTimings {
        &self.timings
    }

    pub fn into_parts(self) -> (SystemConfig, MacTimings) {
        (self.config, self.timings)
    }
}

struct Checker(Vec<Violation>);

impl Checker {
    fn push(&mut self, kind: ViolationKind, field: &'static str, detail: String) {
        self.0.push(Violation { kind, field, detail });
    }

    fn positive(&mut self, field: &'static str, value: f64) {
        if !(value > 0.0 && value.is_finite()) {
            self.push(ViolationKind::NonpositiveValue, field, format!("must be positive and finite, got {value}"));
        }
    }

    fn duration(&mut self, field: &'static str, value: Duration) {
        if value.is_zero() {
            self.push(ViolationKind::NonpositiveDuration, field, "must be positive".into());
        }
    }
}

/// Checks every scenario invariant and reports all violations at once.
pub fn validate_config(config: SystemConfig, timings: MacTimings) -> Result<Scenario, ConfigError> {
    let mut c = Checker(Vec::new());

    if config.n_users == 0 {
        c.push(ViolationKind::EmptyPopulation, "n_users", "at least one ground user is required".into());
    }
    if config.n_subchannels == 0 {
        c.push(ViolationKind::EmptyPopulation, "n_subchannels", "at least one sub-channel is required".into());
    }

    c.positive("bandwidth_hz", config.bandwidth_hz);
    c.positive("w1", config.w1);
    c.positive("w2", config.w2);
    if config.w1 + config.w2 > 1.0 {
        c.push(
            ViolationKind::InvalidWeight,
            "w1",
            format!("w1 + w2 = {} exceeds 1", config.w1 + config.w2),
        );
    }
    c.positive("tx_power_g2s_w", config.tx_power_g2s_w);
    c.positive("tx_power_gas_user_w", config.tx_power_gas_user_w);
    c.positive("tx_power_hap_w", config.tx_power_hap_w);
    c.positive("noise_g2s_w", config.noise_g2s_w);
    c.positive("noise_gu_hap_w", config.noise_gu_hap_w);
    c.positive("noise_hap_sat_w", config.noise_hap_sat_w);
    c.positive("arrival_rate", config.arrival_rate);
    c.positive("service_rate", config.service_rate);

    match &config.links {
        Links::Geometry(g) => {
            for problem in g.check(config.n_users, config.n_haps) {
                let kind = if problem.starts_with("expected") {
                    ViolationKind::ShapeMismatch
                } else {
                    ViolationKind::InvalidGeometry
                };
                c.push(kind, "geometry", problem);
            }
        }
        Links::PathLoss(b) => {
            if let Err(e) = b.check_shape(config.n_users, config.n_haps) {
                c.push(ViolationKind::ShapeMismatch, "path_loss", e.to_string());
            }
            if let Some(bad) = b.first_invalid_entry() {
                c.push(ViolationKind::NonpositiveValue, "path_loss", bad);
            }
        }
    }

    c.duration("slot_s", timings.slot);
    c.duration("sifs_s", timings.sifs);
    c.duration("difs_s", timings.difs);
    c.duration("rts_s", timings.rts);
    c.duration("cts_s", timings.cts);
    c.duration("payload_s", timings.payload);
    c.duration("frame_s", timings.frame);
    c.duration("negotiation_s", timings.negotiation);
    if timings.negotiation >= timings.frame {
        c.push(
            ViolationKind::NonpositiveDuration,
            "negotiation_s",
            "negotiation period must be shorter than the frame".into(),
        );
    }
    if timings.w_min == 0 {
        c.push(ViolationKind::InvalidWindow, "w_min", "contention window must be at least 1".into());
    }
    if timings.backoff_stages > 30 {
        c.push(ViolationKind::InvalidWindow, "backoff_stages", "at most 30 window doublings supported".into());
    }

    if c.0.is_empty() {
        Ok(Scenario { config, timings })
    } else {
        Err(ConfigError(c.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defaults::default_config;

    fn timings_ms(frame: u64, neg: u64, payload_us: u64) -> MacTimings {
        MacTimings {
            frame: Duration::from_millis(frame),
            negotiation: Duration::from_millis(neg),
            payload: Duration::from_micros(payload_us),
            ..MacTimings::default()
        }
    }

    #[test]
    fn weights_summing_to_one_are_accepted() {
        let mut cfg = default_config(10, 2, 1);
        cfg.w1 = 0.5;
        cfg.w2 = 0.5;
        assert!(validate_config(cfg, MacTimings::default()).is_ok());
    }

    #[test]
    fn excess_weight_is_rejected_by_name() {
        let mut cfg = default_config(10, 2, 1);
        cfg.w1 = 0.6;
        cfg.w2 = 0.5;
        let err = validate_config(cfg, MacTimings::default()).unwrap_err();
        assert!(err.has(ViolationKind::InvalidWeight, "w1"));
    }

    #[test]
    fn evaluation_parameters_are_accepted() {
        let mut cfg = default_config(100, 4, 1);
        cfg.n_subchannels = 5;
        assert!(validate_config(cfg, timings_ms(200, 10, 500)).is_ok());
    }

    #[test]
    fn every_violation_is_reported() {
        let mut cfg = default_config(3, 1, 1);
        cfg.n_users = 0;
        cfg.links = Links::PathLoss(LinkBudget::empty(0, 1));
        cfg.noise_g2s_w = 0.0;
        let mut t = MacTimings::default();
        t.sifs = Duration::ZERO;
        t.negotiation = t.frame;
        let err = validate_config(cfg, t).unwrap_err();
        assert!(err.has(ViolationKind::EmptyPopulation, "n_users"));
        assert!(err.has(ViolationKind::NonpositiveValue, "noise_g2s_w"));
        assert!(err.has(ViolationKind::NonpositiveDuration, "sifs_s"));
        assert!(err.has(ViolationKind::NonpositiveDuration, "negotiation_s"));
        assert!(err.to_string().contains("sifs_s"));
    }

    #[test]
    fn derived_timings_are_exact_sums() {
        let t = MacTimings::default();
        assert_eq!(t.success_time(), Duration::from_micros(192 + 128 + 500 + 56 + 128 + 100));
        assert_eq!(t.collision_time(), Duration::from_micros(192 + 128 + 50));
        assert_eq!(t.handshake_time(), Duration::from_micros(192 + 128 + 28 + 128));
        assert_eq!(t.reserved_time(), Duration::from_millis(190));
    }

    #[test]
    fn control_frames_at_one_megabit() {
        let t = MacTimings::with_control_rate(1e6).unwrap();
        assert_eq!(t.rts, Duration::from_micros(192));
        assert_eq!(t.cts, Duration::from_micros(128));
        let fast = MacTimings::with_control_rate(2e6).unwrap();
        assert_eq!(fast.rts, Duration::from_micros(96));
        assert!(MacTimings::with_control_rate(0.0).is_none());
    }

    #[test]
    fn shape_mismatch_in_loss_matrices() {
        let mut cfg = default_config(3, 2, 1);
        cfg.links = Links::PathLoss(LinkBudget::empty(2, 2));
        let err = validate_config(cfg, MacTimings::default()).unwrap_err();
        assert!(err.has(ViolationKind::ShapeMismatch, "path_loss"));
    }
}
