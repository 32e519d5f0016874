//! Path losses, SNRs and link rates of the direct and relayed uplinks.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::config::{Links, SystemConfig};
use crate::geometry::{distance, Geometry};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PhyError {
    #[error("nonpositive input: {0}")]
    NonpositiveInput(&'static str),
    #[error("negative input: {0}")]
    NegativeInput(&'static str),
    #[error("index out of range: {what} {index} (size {size})")]
    IndexOutOfRange { what: &'static str, index: usize, size: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("budget csv: {0}")]
    Csv(String),
}

/// Free-space path loss in dB.
pub fn path_loss_fspl(distance_m: f64, freq_hz: f64) -> Result<f64, PhyError> {
    if !(distance_m > 0.0) {
        return Err(PhyError::NonpositiveInput("distance_m"));
    }
    if !(freq_hz > 0.0) {
        return Err(PhyError::NonpositiveInput("freq_hz"));
    }
    Ok(20.0 * (4.0 * std::f64::consts::PI * distance_m * freq_hz / SPEED_OF_LIGHT).log10())
}

/// End-to-end SNR of an amplify-and-forward relay from its two hop SNRs.
pub fn af_gain(snr_first_hop: f64, snr_second_hop: f64) -> Result<f64, PhyError> {
    if snr_first_hop < 0.0 || snr_first_hop.is_nan() {
        return Err(PhyError::NegativeInput("snr_first_hop"));
    }
    if snr_second_hop < 0.0 || snr_second_hop.is_nan() {
        return Err(PhyError::NegativeInput("snr_second_hop"));
    }
    Ok(snr_first_hop * snr_second_hop / (snr_first_hop + snr_second_hop + 1.0))
}

/// Received SNR for transmit power `power_w` over `loss_db` against `noise_w`.
pub fn snr(power_w: f64, loss_db: f64, noise_w: f64) -> f64 {
    power_w * 10f64.powf(-loss_db / 10.0) / noise_w
}

/// Path losses of every link in the system, dB.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkBudget {
    /// User to satellite, one per user.
    pub loss_g2s_db: Vec<f64>,
    /// User to HAP, `[user][hap]`.
    pub loss_gu_hap_db: Vec<Vec<f64>>,
    /// HAP to satellite, one per HAP.
    pub loss_hap_sat_db: Vec<f64>,
}

impl LinkBudget {
    /// An all-zero budget of the given shape.
    pub fn empty(n_users: usize, n_haps: usize) -> Self {
        Self {
            loss_g2s_db: vec![0.0; n_users],
            loss_gu_hap_db: vec![vec![0.0; n_haps]; n_users],
            loss_hap_sat_db: vec![0.0; n_haps],
        }
    }

    /// Free-space losses for every link in `geometry`.
    pub fn from_geometry(geometry: &Geometry) -> Result<Self, PhyError> {
        let f = geometry.carrier_freq_hz;
        let sat = &geometry.satellite_position;
        let loss_g2s_db = geometry
            .user_positions
            .iter()
            .map(|u| path_loss_fspl(distance(u, sat), f))
            .collect::<Result<_, _>>()?;
        let loss_gu_hap_db = geometry
            .user_positions
            .iter()
            .map(|u| {
                geometry
                    .hap_positions
                    .iter()
                    .map(|h| path_loss_fspl(distance(u, h), f))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<_, _>>()?;
        let loss_hap_sat_db = geometry
            .hap_positions
            .iter()
            .map(|h| path_loss_fspl(distance(h, sat), f))
            .collect::<Result<_, _>>()?;
        Ok(Self { loss_g2s_db, loss_gu_hap_db, loss_hap_sat_db })
    }

    /// The budget implied by a configuration's link source.
    pub fn for_config(cfg: &SystemConfig) -> Result<Self, PhyError> {
        match &cfg.links {
            Links::Geometry(g) => Self::from_geometry(g),
            Links::PathLoss(b) => Ok(b.clone()),
        }
    }

    pub fn n_users(&self) -> usize {
        self.loss_g2s_db.len()
    }

    pub fn n_haps(&self) -> usize {
        self.loss_hap_sat_db.len()
    }

    pub fn check_shape(&self, n_users: usize, n_haps: usize) -> Result<(), PhyError> {
        if self.loss_g2s_db.len() != n_users {
            return Err(PhyError::ShapeMismatch(format!(
                "loss_g2s_db has {} entries, expected {n_users}",
                self.loss_g2s_db.len()
            )));
        }
        if self.loss_hap_sat_db.len() != n_haps {
            return Err(PhyError::ShapeMismatch(format!(
                "loss_hap_sat_db has {} entries, expected {n_haps}",
                self.loss_hap_sat_db.len()
            )));
        }
        if self.loss_gu_hap_db.len() != n_users || self.loss_gu_hap_db.iter().any(|r| r.len() != n_haps) {
            return Err(PhyError::ShapeMismatch(format!("loss_gu_hap_db must be {n_users}x{n_haps}")));
        }
        Ok(())
    }

    /// Describes the first entry that is negative or not finite.
    pub fn first_invalid_entry(&self) -> Option<String> {
        let bad = |x: &f64| !(x.is_finite() && *x >= 0.0);
        if let Some(i) = self.loss_g2s_db.iter().position(bad) {
            return Some(format!("loss_g2s_db[{i}] = {}", self.loss_g2s_db[i]));
        }
        for (n, row) in self.loss_gu_hap_db.iter().enumerate() {
            if let Some(k) = row.iter().position(bad) {
                return Some(format!("loss_gu_hap_db[{n}][{k}] = {}", row[k]));
            }
        }
        if let Some(k) = self.loss_hap_sat_db.iter().position(bad) {
            return Some(format!("loss_hap_sat_db[{k}] = {}", self.loss_hap_sat_db[k]));
        }
        None
    }

    /// Writes the three loss matrices as `g2s.csv`, `gu_hap.csv` and
    /// `hap_sat.csv` under `dir`. Each row of a matrix is one CSV record;
    /// per-user and per-HAP vectors are written as a single column.
    pub fn write_csv(&self, dir: &Path) -> Result<(), PhyError> {
        let column: Vec<Vec<f64>> = self.loss_g2s_db.iter().map(|x| vec![*x]).collect();
        write_matrix_csv(File::create(dir.join("g2s.csv")).map_err(csv_err)?, &column)?;
        write_matrix_csv(File::create(dir.join("gu_hap.csv")).map_err(csv_err)?, &self.loss_gu_hap_db)?;
        let column: Vec<Vec<f64>> = self.loss_hap_sat_db.iter().map(|x| vec![*x]).collect();
        write_matrix_csv(File::create(dir.join("hap_sat.csv")).map_err(csv_err)?, &column)
    }

    pub fn read_csv(dir: &Path) -> Result<Self, PhyError> {
        let single = |rows: Vec<Vec<f64>>, name: &str| -> Result<Vec<f64>, PhyError> {
            rows.into_iter()
                .map(|r| match r.as_slice() {
                    [x] => Ok(*x),
                    _ => Err(PhyError::Csv(format!("{name}: expected one value per row"))),
                })
                .collect()
        };
        let g2s = read_matrix_csv(File::open(dir.join("g2s.csv")).map_err(csv_err)?)?;
        let gu_hap = read_matrix_csv(File::open(dir.join("gu_hap.csv")).map_err(csv_err)?)?;
        let hap_sat = read_matrix_csv(File::open(dir.join("hap_sat.csv")).map_err(csv_err)?)?;
        let loss_g2s_db = single(g2s, "g2s.csv")?;
        let loss_hap_sat_db = single(hap_sat, "hap_sat.csv")?;
        // a user with no HAPs writes an empty record, which the reader skips
        let loss_gu_hap_db = if gu_hap.is_empty() { vec![Vec::new(); loss_g2s_db.len()] } else { gu_hap };
        let budget = Self { loss_g2s_db, loss_gu_hap_db, loss_hap_sat_db };
        budget.check_shape(budget.n_users(), budget.n_haps())?;
        Ok(budget)
    }
}

fn csv_err(e: impl std::fmt::Display) -> PhyError {
    PhyError::Csv(e.to_string())
}

/// Writes a row-major matrix, six decimal places.
pub fn write_matrix_csv<W: Write>(w: W, rows: &[Vec<f64>]) -> Result<(), PhyError> {
    let mut out = csv::WriterBuilder::new().flexible(true).from_writer(w);
    for row in rows {
        out.write_record(row.iter().map(|x| format!("{x:.6}"))).map_err(csv_err)?;
    }
    out.flush().map_err(csv_err)
}

pub fn read_matrix_csv<R: Read>(r: R) -> Result<Vec<Vec<f64>>, PhyError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(r);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let row = rec
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(csv_err))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Direct uplink rate of user `n`, bits/s, on one sub-channel.
pub fn g2s_rate(n: usize, cfg: &SystemConfig, budget: &LinkBudget) -> Result<f64, PhyError> {
    let loss = *budget
        .loss_g2s_db
        .get(n)
        .ok_or(PhyError::IndexOutOfRange { what: "user", index: n, size: budget.n_users() })?;
    let s = snr(cfg.tx_power_g2s_w, loss, cfg.noise_g2s_w);
    Ok(cfg.w1 * cfg.bandwidth_hz / cfg.n_subchannels as f64 * (1.0 + s).log2())
}

/// First- and second-hop SNRs of user `n` relayed by HAP `k`.
pub fn relay_snrs(n: usize, k: usize, cfg: &SystemConfig, budget: &LinkBudget) -> Result<(f64, f64), PhyError> {
    let row = budget
        .loss_gu_hap_db
        .get(n)
        .ok_or(PhyError::IndexOutOfRange { what: "user", index: n, size: budget.n_users() })?;
    let first = *row.get(k).ok_or(PhyError::IndexOutOfRange { what: "hap", index: k, size: row.len() })?;
    let second = *budget
        .loss_hap_sat_db
        .get(k)
        .ok_or(PhyError::IndexOutOfRange { what: "hap", index: k, size: budget.n_haps() })?;
    Ok((
        snr(cfg.tx_power_gas_user_w, first, cfg.noise_gu_hap_w),
        snr(cfg.tx_power_hap_w, second, cfg.noise_hap_sat_w),
    ))
}

/// Relayed rate of user `n` through HAP `k`, bits/s.
pub fn gas_rate(n: usize, k: usize, cfg: &SystemConfig, budget: &LinkBudget) -> Result<f64, PhyError> {
    let (r1, r2) = relay_snrs(n, k, cfg, budget)?;
    Ok(cfg.w2 * cfg.bandwidth_hz * (1.0 + af_gain(r1, r2)?).log2())
}

/// Every link rate and hop SNR of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub r_g2s: Vec<f64>,
    pub snr_g2s: Vec<f64>,
    /// `[user][hap]`
    pub r_gas: Vec<Vec<f64>>,
    pub snr_gu_hap: Vec<Vec<f64>>,
    pub snr_hap_sat: Vec<f64>,
}

impl RateTable {
    pub fn n_users(&self) -> usize {
        self.r_g2s.len()
    }

    pub fn n_haps(&self) -> usize {
        self.snr_hap_sat.len()
    }

    /// Multiplies every rate by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            r_g2s: self.r_g2s.iter().map(|r| r * factor).collect(),
            r_gas: self.r_gas.iter().map(|row| row.iter().map(|r| r * factor).collect()).collect(),
            ..self.clone()
        }
    }
}

pub fn build_rate_table(cfg: &SystemConfig, budget: &LinkBudget) -> Result<RateTable, PhyError> {
    budget.check_shape(cfg.n_users, cfg.n_haps)?;
    let n_users = cfg.n_users;
    let n_haps = cfg.n_haps;
    let r_g2s = (0..n_users).map(|n| g2s_rate(n, cfg, budget)).collect::<Result<_, _>>()?;
    let snr_g2s = budget.loss_g2s_db.iter().map(|l| snr(cfg.tx_power_g2s_w, *l, cfg.noise_g2s_w)).collect();
    let snr_hap_sat: Vec<f64> = budget
        .loss_hap_sat_db
        .iter()
        .map(|l| snr(cfg.tx_power_hap_w, *l, cfg.noise_hap_sat_w))
        .collect();
    let mut r_gas = Vec::with_capacity(n_users);
    let mut snr_gu_hap = Vec::with_capacity(n_users);
    for n in 0..n_users {
        let snrs: Vec<f64> = budget.loss_gu_hap_db[n]
            .iter()
            .map(|l| snr(cfg.tx_power_gas_user_w, *l, cfg.noise_gu_hap_w))
            .collect();
        let rates = snrs
            .iter()
            .zip(&snr_hap_sat)
            .map(|(r1, r2)| Ok(cfg.w2 * cfg.bandwidth_hz * (1.0 + af_gain(*r1, *r2)?).log2()))
            .collect::<Result<Vec<_>, PhyError>>()?;
        debug_assert_eq!(rates.len(), n_haps);
        r_gas.push(rates);
        snr_gu_hap.push(snrs);
    }
    Ok(RateTable { r_g2s, snr_g2s, r_gas, snr_gu_hap, snr_hap_sat })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defaults::default_config;

    fn unit_cfg() -> SystemConfig {
        let mut cfg = default_config(3, 2, 1);
        cfg.w1 = 0.5;
        cfg.w2 = 0.5;
        cfg.bandwidth_hz = 20e6;
        cfg.n_subchannels = 5;
        cfg
    }

    #[test]
    fn fspl_unit_argument_is_zero_db() {
        let f = 2.0e9;
        let d = SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * f);
        assert!(path_loss_fspl(d, f).unwrap().abs() < 1e-12);
    }

    #[test]
    fn fspl_one_km_two_ghz() {
        // 20 log10(4 pi 1e3 2e9 / c) with c = 299792458
        let got = path_loss_fspl(1000.0, 2.0e9).unwrap();
        assert!((got - 98.468383135163).abs() < 1e-9, "{got}");
    }

    #[test]
    fn fspl_rejects_nonpositive() {
        assert_eq!(path_loss_fspl(0.0, 1e9), Err(PhyError::NonpositiveInput("distance_m")));
        assert_eq!(path_loss_fspl(1.0, -1.0), Err(PhyError::NonpositiveInput("freq_hz")));
    }

    #[test]
    fn af_gain_cases() {
        assert!((af_gain(1.0, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(af_gain(0.0, 7.5).unwrap(), 0.0);
        assert!(af_gain(-1.0, 1.0).is_err());
    }

    #[test]
    fn g2s_rate_unit_snr() {
        let mut cfg = unit_cfg();
        cfg.tx_power_g2s_w = 1e-13;
        cfg.noise_g2s_w = 1e-13;
        let b = LinkBudget::empty(3, 2);
        let r = g2s_rate(0, &cfg, &b).unwrap();
        assert!((r - 0.5 * 20e6 / 5.0).abs() < 1e-6);
    }

    #[test]
    fn g2s_rate_snr_fifteen_is_eight_megabit() {
        let mut cfg = unit_cfg();
        cfg.tx_power_g2s_w = 15.0;
        cfg.noise_g2s_w = 1.0;
        let r = g2s_rate(1, &cfg, &LinkBudget::empty(3, 2)).unwrap();
        assert!((r - 8.0e6).abs() < 1e-6, "{r}");
        assert!(g2s_rate(3, &cfg, &LinkBudget::empty(3, 2)).is_err());
    }

    #[test]
    fn gas_rate_unit_snrs() {
        let mut cfg = unit_cfg();
        cfg.tx_power_gas_user_w = 2.0;
        cfg.noise_gu_hap_w = 2.0;
        cfg.tx_power_hap_w = 3.0;
        cfg.noise_hap_sat_w = 3.0;
        let r = gas_rate(0, 1, &cfg, &LinkBudget::empty(3, 2)).unwrap();
        assert!((r - 0.5 * 20e6 * (4.0f64 / 3.0).log2()).abs() < 1e-6);
        assert!(matches!(gas_rate(0, 2, &cfg, &LinkBudget::empty(3, 2)), Err(PhyError::IndexOutOfRange { .. })));
    }

    #[test]
    fn symmetric_losses_give_identical_rows() {
        let mut cfg = unit_cfg();
        cfg.n_users = 2;
        cfg.n_haps = 1;
        let b = LinkBudget {
            loss_g2s_db: vec![150.0, 150.0],
            loss_gu_hap_db: vec![vec![120.0], vec![120.0]],
            loss_hap_sat_db: vec![150.0],
        };
        let t = build_rate_table(&cfg, &b).unwrap();
        assert_eq!(t.r_gas[0], t.r_gas[1]);
        assert_eq!(t.r_g2s[0], t.r_g2s[1]);
    }

    #[test]
    fn asymmetric_losses_order_rows() {
        let mut cfg = unit_cfg();
        cfg.n_users = 3;
        cfg.n_haps = 1;
        let b = LinkBudget {
            loss_g2s_db: vec![150.0, 152.0, 151.0],
            loss_gu_hap_db: vec![vec![118.0], vec![125.0], vec![121.0]],
            loss_hap_sat_db: vec![150.0],
        };
        let t = build_rate_table(&cfg, &b).unwrap();
        assert!(t.r_gas[0][0] > t.r_gas[2][0] && t.r_gas[2][0] > t.r_gas[1][0]);
        assert!(t.r_g2s[0] > t.r_g2s[2] && t.r_g2s[2] > t.r_g2s[1]);
    }

    #[test]
    fn no_haps_still_fills_direct_rates() {
        let mut cfg = unit_cfg();
        cfg.n_haps = 0;
        let b = LinkBudget::empty(3, 0);
        let t = build_rate_table(&cfg, &b).unwrap();
        assert_eq!(t.r_gas, vec![Vec::<f64>::new(); 3]);
        assert_eq!(t.r_g2s.len(), 3);
        assert!(t.r_g2s.iter().all(|r| *r > 0.0));
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let cfg = unit_cfg();
        assert!(matches!(build_rate_table(&cfg, &LinkBudget::empty(2, 2)), Err(PhyError::ShapeMismatch(_))));
    }

    #[test]
    fn budget_csv_survives_a_write_read_cycle() {
        let dir = std::env::temp_dir().join(format!("hapres-budget-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let b = LinkBudget {
            loss_g2s_db: vec![156.123456, 156.5],
            loss_gu_hap_db: vec![vec![124.1, 125.2, 126.3], vec![127.0, 128.0, 129.0]],
            loss_hap_sat_db: vec![156.0, 156.1, 156.2],
        };
        b.write_csv(&dir).unwrap();
        assert_eq!(LinkBudget::read_csv(&dir).unwrap(), b);
        std::fs::remove_dir_all(&dir).ok();
    }
}
