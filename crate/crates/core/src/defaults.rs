//! Reference scenario used by the CLI and the acceptance sweeps.

use crate::config::{Links, MacTimings, SystemConfig};
use crate::geometry::Layout;

pub const DEFAULT_N_USERS: usize = 100;
pub const DEFAULT_N_HAPS: usize = 4;
pub const DEFAULT_SUBCHANNELS: usize = 5;
pub const DEFAULT_BANDWIDTH_HZ: f64 = 20.0e6;
/// -100 dBm.
pub const DEFAULT_NOISE_W: f64 = 1.0e-13;

/// Reference configuration with `n_users` users and `n_haps` platforms
/// placed by the default layout with `layout_seed`.
pub fn default_config(n_users: usize, n_haps: usize, layout_seed: u64) -> SystemConfig {
    let layout = Layout { seed: layout_seed, ..Layout::default() };
    SystemConfig {
        n_users,
        n_haps,
        n_subchannels: DEFAULT_SUBCHANNELS,
        bandwidth_hz: DEFAULT_BANDWIDTH_HZ,
        w1: 0.5,
        w2: 0.5,
        tx_power_g2s_w: 2.0,
        tx_power_gas_user_w: 0.2,
        tx_power_hap_w: 10.0,
        noise_g2s_w: DEFAULT_NOISE_W,
        noise_gu_hap_w: DEFAULT_NOISE_W,
        noise_hap_sat_w: DEFAULT_NOISE_W,
        links: Links::Geometry(layout.generate(n_users, n_haps)),
        arrival_rate: 9.0,
        service_rate: 1.0,
    }
}

/// Default configuration and timings at the reference population.
pub fn default_scenario() -> (SystemConfig, MacTimings) {
    (default_config(DEFAULT_N_USERS, DEFAULT_N_HAPS, Layout::default().seed), MacTimings::default())
}
