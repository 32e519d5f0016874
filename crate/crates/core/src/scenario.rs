//! Scenario files: a flat JSON object whose keys name scenario parameters.
//! Every key is optional and falls back to the reference scenario; unknown
//! keys are rejected.
//!
//! Path losses come from, in order of precedence: the three `loss_*_db`
//! matrices, explicit `user_positions`/`hap_positions`/`satellite_position`,
//! or a layout generated from the `disc_radius_m` ... `layout_seed` keys.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{duration_from_secs, validate_config, ConfigError, Links, MacTimings, SystemConfig};
use crate::defaults::default_config;
use crate::geometry::{Geometry, Layout, Point};
use crate::optimizer::{AssignmentMode, OptimizerSettings};
use crate::phy::{build_rate_table, LinkBudget, PhyError, RateTable};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("{field}: {detail}")]
    Field { field: &'static str, detail: String },
    #[error(transparent)]
    Invalid(ConfigError),
    #[error(transparent)]
    Phy(#[from] PhyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeName {
    PerUserBest,
    OnePerHap,
}

impl From<ModeName> for AssignmentMode {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::PerUserBest => AssignmentMode::PerUserBest,
            ModeName::OnePerHap => AssignmentMode::OnePerHap,
        }
    }
}

/// The on-disk form. Times are in seconds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub n_users: Option<usize>,
    pub n_haps: Option<usize>,
    pub n_subchannels: Option<usize>,
    pub bandwidth_hz: Option<f64>,
    pub w1: Option<f64>,
    pub w2: Option<f64>,
    pub tx_power_g2s_w: Option<f64>,
    pub tx_power_gas_user_w: Option<f64>,
    pub tx_power_hap_w: Option<f64>,
    pub noise_g2s_w: Option<f64>,
    pub noise_gu_hap_w: Option<f64>,
    pub noise_hap_sat_w: Option<f64>,
    pub arrival_rate: Option<f64>,
    pub service_rate: Option<f64>,

    pub slot_s: Option<f64>,
    pub sifs_s: Option<f64>,
    pub difs_s: Option<f64>,
    pub rts_s: Option<f64>,
    pub cts_s: Option<f64>,
    pub payload_s: Option<f64>,
    pub frame_s: Option<f64>,
    pub negotiation_s: Option<f64>,
    pub w_min: Option<u32>,
    pub backoff_stages: Option<u32>,

    pub disc_radius_m: Option<f64>,
    pub hap_altitude_m: Option<f64>,
    pub hap_ring_radius_m: Option<f64>,
    pub satellite_altitude_m: Option<f64>,
    pub carrier_freq_hz: Option<f64>,
    pub layout_seed: Option<u64>,

    pub user_positions: Option<Vec<Point>>,
    pub hap_positions: Option<Vec<Point>>,
    pub satellite_position: Option<Point>,

    pub loss_g2s_db: Option<Vec<f64>>,
    pub loss_gu_hap_db: Option<Vec<Vec<f64>>>,
    pub loss_hap_sat_db: Option<Vec<f64>>,

    pub assignment_mode: Option<ModeName>,
    pub optimizer_grid: Option<usize>,
    pub optimizer_tol: Option<f64>,
    pub max_iters: Option<usize>,
}

/// A validated scenario ready for analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub config: SystemConfig,
    pub timings: MacTimings,
    pub settings: OptimizerSettings,
}

impl Loaded {
    pub fn rate_table(&self) -> Result<RateTable, PhyError> {
        build_rate_table(&self.config, &LinkBudget::for_config(&self.config)?)
    }
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        serde_json::from_str(text).map_err(parse_error)
    }

    pub fn from_value(value: serde_json::Value) -> Result<Self, ScenarioError> {
        serde_json::from_value(value).map_err(parse_error)
    }

    pub fn read(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("scenario serializes")
    }

    /// Whether the links come from a generated layout (and so follow
    /// changes to `n_users`/`n_haps`).
    pub fn generated_layout(&self) -> bool {
        self.loss_g2s_db.is_none()
            && self.loss_gu_hap_db.is_none()
            && self.loss_hap_sat_db.is_none()
            && self.user_positions.is_none()
            && self.hap_positions.is_none()
            && self.satellite_position.is_none()
    }

    /// Fills defaults and validates.
    pub fn build(&self) -> Result<Loaded, ScenarioError> {
        let n_users = self.n_users.unwrap_or(crate::defaults::DEFAULT_N_USERS);
        let n_haps = self.n_haps.unwrap_or(crate::defaults::DEFAULT_N_HAPS);
        let base = default_config(n_users, n_haps, 1);
        let links = self.links(n_users, n_haps)?;
        let config = SystemConfig {
            n_users,
            n_haps,
            n_subchannels: self.n_subchannels.unwrap_or(base.n_subchannels),
            bandwidth_hz: self.bandwidth_hz.unwrap_or(base.bandwidth_hz),
            w1: self.w1.unwrap_or(base.w1),
            w2: self.w2.unwrap_or(base.w2),
            tx_power_g2s_w: self.tx_power_g2s_w.unwrap_or(base.tx_power_g2s_w),
            tx_power_gas_user_w: self.tx_power_gas_user_w.unwrap_or(base.tx_power_gas_user_w),
            tx_power_hap_w: self.tx_power_hap_w.unwrap_or(base.tx_power_hap_w),
            noise_g2s_w: self.noise_g2s_w.unwrap_or(base.noise_g2s_w),
            noise_gu_hap_w: self.noise_gu_hap_w.unwrap_or(base.noise_gu_hap_w),
            noise_hap_sat_w: self.noise_hap_sat_w.unwrap_or(base.noise_hap_sat_w),
            links,
            arrival_rate: self.arrival_rate.unwrap_or(base.arrival_rate),
            service_rate: self.service_rate.unwrap_or(base.service_rate),
        };
        let timings = self.timings()?;
        let scenario = validate_config(config, timings).map_err(ScenarioError::Invalid)?;
        let (config, timings) = scenario.into_parts();
        let defaults = OptimizerSettings::default();
        let settings = OptimizerSettings {
            mode: self.assignment_mode.map_or(defaults.mode, Into::into),
            grid: self.optimizer_grid.unwrap_or(defaults.grid),
            tol: self.optimizer_tol.unwrap_or(defaults.tol),
            max_iters: self.max_iters.unwrap_or(defaults.max_iters),
            ..defaults
        };
        Ok(Loaded { config, timings, settings })
    }

    fn timings(&self) -> Result<MacTimings, ScenarioError> {
        let d = MacTimings::default();
        let secs = |field: &'static str, v: Option<f64>, default| match v {
            None => Ok(default),
            Some(s) => duration_from_secs(s).ok_or(ScenarioError::Field { field, detail: format!("{s} is not a duration") }),
        };
        Ok(MacTimings {
            slot: secs("slot_s", self.slot_s, d.slot)?,
            sifs: secs("sifs_s", self.sifs_s, d.sifs)?,
            difs: secs("difs_s", self.difs_s, d.difs)?,
            rts: secs("rts_s", self.rts_s, d.rts)?,
            cts: secs("cts_s", self.cts_s, d.cts)?,
            payload: secs("payload_s", self.payload_s, d.payload)?,
            frame: secs("frame_s", self.frame_s, d.frame)?,
            negotiation: secs("negotiation_s", self.negotiation_s, d.negotiation)?,
            w_min: self.w_min.unwrap_or(d.w_min),
            backoff_stages: self.backoff_stages.unwrap_or(d.backoff_stages),
        })
    }

    fn links(&self, n_users: usize, n_haps: usize) -> Result<Links, ScenarioError> {
        match (&self.loss_g2s_db, &self.loss_gu_hap_db, &self.loss_hap_sat_db) {
            (Some(g2s), Some(gu_hap), Some(hap_sat)) => {
                return Ok(Links::PathLoss(LinkBudget {
                    loss_g2s_db: g2s.clone(),
                    loss_gu_hap_db: gu_hap.clone(),
                    loss_hap_sat_db: hap_sat.clone(),
                }))
            }
            (None, None, None) => {}
            _ => {
                return Err(ScenarioError::Field {
                    field: "loss_g2s_db",
                    detail: "loss_g2s_db, loss_gu_hap_db and loss_hap_sat_db must be given together".into(),
                })
            }
        }
        let layout = Layout {
            disc_radius_m: self.disc_radius_m.unwrap_or(Layout::default().disc_radius_m),
            hap_altitude_m: self.hap_altitude_m.unwrap_or(Layout::default().hap_altitude_m),
            hap_ring_radius_m: self.hap_ring_radius_m.unwrap_or(Layout::default().hap_ring_radius_m),
            satellite_altitude_m: self.satellite_altitude_m.unwrap_or(Layout::default().satellite_altitude_m),
            carrier_freq_hz: self.carrier_freq_hz.unwrap_or(Layout::default().carrier_freq_hz),
            seed: self.layout_seed.unwrap_or(Layout::default().seed),
        };
        match (&self.user_positions, &self.hap_positions, &self.satellite_position) {
            (None, None, None) => Ok(Links::Geometry(layout.generate(n_users, n_haps))),
            (Some(users), Some(haps), Some(sat)) => Ok(Links::Geometry(Geometry {
                user_positions: users.clone(),
                hap_positions: haps.clone(),
                satellite_position: *sat,
                carrier_freq_hz: layout.carrier_freq_hz,
            })),
            _ => Err(ScenarioError::Field {
                field: "user_positions",
                detail: "user_positions, hap_positions and satellite_position must be given together".into(),
            }),
        }
    }
}

fn parse_error(e: serde_json::Error) -> ScenarioError {
    ScenarioError::Parse { line: e.line(), column: e.column(), message: e.to_string() }
}

/// Reads and validates a scenario file.
pub fn load(path: &Path) -> Result<Loaded, ScenarioError> {
    ScenarioFile::read(path)?.build()
}
