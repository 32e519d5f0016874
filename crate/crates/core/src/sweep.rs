//! Parameter sweeps: evaluate a scenario across values of one variable,
//! for several relay-probability curves, in parallel.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{MacTimings, SystemConfig};
use crate::optimizer::{alternate_with, reservations_at, solve_assignment, AssignmentMode, OptimizerError};
use crate::phy::RateTable;
use crate::scenario::{ScenarioError, ScenarioFile};
use crate::throughput::{case1_sum, case2_g2s_only, case3_gas_only, ThroughputReport};

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("sweep has no values")]
    Empty,
    #[error("sweep values must be strictly increasing ({0} after {1})")]
    NotIncreasing(f64, f64),
    #[error("unknown sweep variable '{0}' (expected n_users, rho or t_h)")]
    UnknownVariable(String),
    #[error("override key '{0}' is the sweep variable")]
    OverridesVariable(String),
    #[error("n_users sweeps need a generated layout, not explicit positions or loss matrices")]
    FixedShape,
    #[error("{0} is not a valid value for {1}")]
    BadValue(f64, &'static str),
    #[error("cannot start worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    NUsers,
    Rho,
    /// Negotiation period, seconds (`negotiation_s` in scenario files).
    #[serde(alias = "negotiation_s")]
    TH,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::NUsers => "n_users",
            SweepVariable::Rho => "rho",
            SweepVariable::TH => "t_h",
        }
    }

    fn config_key(self) -> &'static str {
        match self {
            SweepVariable::NUsers => "n_users",
            SweepVariable::Rho => "rho",
            SweepVariable::TH => "negotiation_s",
        }
    }
}

impl std::str::FromStr for SweepVariable {
    type Err = SweepError;
    fn from_str(s: &str) -> Result<Self, SweepError> {
        match s {
            "n_users" => Ok(SweepVariable::NUsers),
            "rho" => Ok(SweepVariable::Rho),
            "t_h" | "negotiation_s" => Ok(SweepVariable::TH),
            other => Err(SweepError::UnknownVariable(other.to_string())),
        }
    }
}

/// One line in a sweep plot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Curve {
    /// Uniform relay probability.
    Rho(f64),
    /// `"optimal"`: the alternating optimizer's decision.
    Named(CurveName),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveName {
    Optimal,
}

impl Curve {
    pub fn label(&self) -> String {
        match self {
            Curve::Rho(r) => format!("rho={r}"),
            Curve::Named(CurveName::Optimal) => "optimal".into(),
        }
    }
}

fn default_curves() -> Vec<Curve> {
    vec![Curve::Rho(0.0), Curve::Rho(0.1), Curve::Rho(0.5), Curve::Rho(0.9), Curve::Rho(1.0)]
}

/// Sweep description, read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    /// Ignored for `rho` sweeps, where the swept value is the curve.
    #[serde(default = "default_curves")]
    pub curves: Vec<Curve>,
    /// Scenario keys set for every point.
    #[serde(default)]
    pub fixed_overrides: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
}

impl SweepSpec {
    pub fn parse(text: &str) -> Result<Self, SweepError> {
        serde_json::from_str(text).map_err(|e| {
            SweepError::Scenario(ScenarioError::Parse { line: e.line(), column: e.column(), message: e.to_string() })
        })
    }

    pub fn read(path: &Path) -> Result<Self, SweepError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if self.values.is_empty() {
            return Err(SweepError::Empty);
        }
        if let Some(w) = self.values.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(SweepError::NotIncreasing(w[1], w[0]));
        }
        let key = self.variable.config_key();
        if self.fixed_overrides.contains_key(key) || self.fixed_overrides.contains_key(self.variable.name()) {
            return Err(SweepError::OverridesVariable(key.to_string()));
        }
        Ok(())
    }

    fn curves(&self) -> Vec<Curve> {
        match self.variable {
            SweepVariable::Rho => vec![Curve::Rho(f64::NAN)],
            _ => self.curves.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub variable: SweepVariable,
    pub value: f64,
    pub curve: String,
    /// `Err` holds the reason the point could not be evaluated.
    pub report: Result<ThroughputReport, String>,
}

impl SweepRow {
    pub fn header() -> Vec<&'static str> {
        let mut h = vec!["sweep_variable", "sweep_value", "curve", "status"];
        h.extend(ThroughputReport::CSV_HEADER);
        h
    }

    pub fn record(&self) -> Vec<String> {
        let mut r = vec![self.variable.name().to_string(), crate::output::sig9(self.value), self.curve.clone()];
        match &self.report {
            Ok(rep) => {
                r.push("ok".into());
                r.extend(rep.csv_record());
            }
            Err(e) => {
                r.push(format!("error: {e}"));
                r.extend(std::iter::repeat_n(String::new(), ThroughputReport::CSV_HEADER.len()));
            }
        }
        r
    }
}

/// Throughput at uniform `rho` with the HAP choice for the reservations
/// available at that `rho`. `rho = 0` and `rho = 1` use the direct-only and
/// relay-only forms.
pub fn evaluate_rho(
    rho: f64,
    cfg: &SystemConfig,
    timings: &MacTimings,
    rates: &RateTable,
    mode: AssignmentMode,
) -> Result<ThroughputReport, OptimizerError> {
    let n = rates.n_users();
    if rho == 0.0 {
        return Ok(case2_g2s_only(rates, timings, cfg)?);
    }
    let count = reservations_at(rho, n, cfg, timings)?;
    let assignment = solve_assignment(rates, count, mode)?.assignment;
    if rho == 1.0 {
        return Ok(case3_gas_only(&assignment, rates, timings, cfg)?);
    }
    Ok(case1_sum(&vec![rho; n], &assignment, rates, timings, cfg)?)
}

fn evaluate_point(base: &serde_json::Value, variable: SweepVariable, value: f64, curve: Curve) -> Result<ThroughputReport, String> {
    let mut doc = base.clone();
    let rho = match variable {
        SweepVariable::Rho => Curve::Rho(value),
        SweepVariable::NUsers => {
            if value < 1.0 || value.fract() != 0.0 {
                return Err(SweepError::BadValue(value, "n_users").to_string());
            }
            doc["n_users"] = serde_json::json!(value as u64);
            curve
        }
        SweepVariable::TH => {
            doc["negotiation_s"] = serde_json::json!(value);
            curve
        }
    };
    let loaded = ScenarioFile::from_value(doc).and_then(|f| f.build()).map_err(|e| e.to_string())?;
    let rates = loaded.rate_table().map_err(|e| e.to_string())?;
    let (cfg, timings) = (&loaded.config, &loaded.timings);
    match rho {
        Curve::Rho(r) => {
            if !(0.0..=1.0).contains(&r) {
                return Err(SweepError::BadValue(r, "rho").to_string());
            }
            evaluate_rho(r, cfg, timings, &rates, loaded.settings.mode).map_err(|e| e.to_string())
        }
        Curve::Named(CurveName::Optimal) => {
            let res = alternate_with(cfg, timings, &rates, &loaded.settings).map_err(|e| e.to_string())?;
            let rhos = vec![res.rho_star; rates.n_users()];
            case1_sum(&rhos, &res.assignment_star, &rates, timings, cfg).map_err(|e| e.to_string())
        }
    }
}

/// Runs every (value, curve) point on up to `jobs` threads (0 = all
/// cores). Rows come back in sweep order, curves inner.
pub fn run(scenario: &ScenarioFile, spec: &SweepSpec, jobs: usize) -> Result<Vec<SweepRow>, SweepError> {
    spec.validate()?;
    if spec.variable == SweepVariable::NUsers && !scenario.generated_layout() {
        return Err(SweepError::FixedShape);
    }
    let mut base = scenario.to_value();
    if let serde_json::Value::Object(map) = &mut base {
        map.retain(|_, v| !v.is_null());
        for (k, v) in &spec.fixed_overrides {
            map.insert(k.clone(), v.clone());
        }
    }
    // surface bad override keys once, before fanning out
    ScenarioFile::from_value(base.clone())?;

    let curves = spec.curves();
    let points: Vec<(f64, Curve)> = spec.values.iter().flat_map(|&v| curves.iter().map(move |&c| (v, c))).collect();
    let work = || -> Vec<SweepRow> {
        points
            .par_iter()
            .map(|&(value, curve)| SweepRow {
                variable: spec.variable,
                value,
                curve: match spec.variable {
                    SweepVariable::Rho => "rho".into(),
                    _ => curve.label(),
                },
                report: evaluate_point(&base, spec.variable, value, curve),
            })
            .collect()
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(|e| SweepError::Pool(e.to_string()))?;
    Ok(pool.install(work))
}

pub fn write_rows<W: Write>(w: W, rows: &[SweepRow]) -> Result<(), SweepError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SweepRow::header())?;
    for r in rows {
        out.write_record(r.record())?;
    }
    out.flush()?;
    Ok(())
}
