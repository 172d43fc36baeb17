//! Named experiments, parameter sweeps, outcome classification and artifact
//! persistence.
//!
//! A run directory holds `series.csv`, `snapshots.csv` and `record.json`; a
//! sweep directory additionally holds `index.csv` with one row per run in axis
//! order.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value as Json};
use thiserror::Error;

use crate::config::{self, ConfigError};
use crate::diagnostics::{
    self, envelope, envelope_trend, growth_shape, hot_spots, trailing_envelope, EnvelopeTrend,
    GrowthShape, HeatBalanceMonitor, HeatBalanceSummary, HotSpots, TestFunctions,
    TrajectoryRecorder, WFReport, WTReport,
};
use crate::materials::{law_bounds, TemperatureLaw};
use crate::solver1d::{
    run, InitialCondition, RunResult, RunStatus, SimConfig, SimError, SimState, StepReport,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Artifact { path: String, message: String },
    #[error(transparent)]
    Diagnostics(#[from] diagnostics::DiagnosticsError),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn artifact_err(path: &Path, message: impl ToString) -> HarnessError {
    HarnessError::Artifact {
        path: path.display().to_string(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LawFamily {
    PowerLaw,
    Exponential,
}

impl LawFamily {
    /// `(k, p)` for power laws, `(α, b)` for exponential laws.
    pub fn law(&self, x1: f64, x2: f64) -> TemperatureLaw {
        match self {
            LawFamily::PowerLaw => TemperatureLaw::PowerLaw { k: x1, p: x2 },
            LawFamily::Exponential => TemperatureLaw::Exponential { alpha: x1, b: x2 },
        }
    }

    fn axis_names(&self) -> (&'static str, &'static str) {
        match self {
            LawFamily::PowerLaw => ("k", "p"),
            LawFamily::Exponential => ("a", "b"),
        }
    }
}

/// Grid of temperature laws over a common base configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: SimConfig,
    pub law_family: LawFamily,
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    pub reduced_steps: Option<usize>,
    pub parallelism: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.axis1.is_empty() || self.axis2.is_empty() {
            return Err("sweep axes must be non-empty".into());
        }
        for &a in &self.axis1 {
            for &b in &self.axis2 {
                self.law_family
                    .law(a, b)
                    .validate()
                    .map_err(|e| e.to_string())?;
            }
        }
        Ok(())
    }

    /// `(id, config)` for every grid point, axis1-major.
    pub fn configs(&self) -> Vec<(String, SimConfig)> {
        let (n1, n2) = self.law_family.axis_names();
        let family = match self.law_family {
            LawFamily::PowerLaw => "power",
            LawFamily::Exponential => "exponential",
        };
        let mut out = Vec::with_capacity(self.axis1.len() * self.axis2.len());
        for &a in &self.axis1 {
            for &b in &self.axis2 {
                let mut c = self.base.clone();
                c.law = self.law_family.law(a, b);
                if let Some(s) = self.reduced_steps {
                    c.steps = s;
                }
                out.push((format!("{family}-{n1}{}-{n2}{}", short(a), short(b)), c));
            }
        }
        out
    }
}

/// Compact number for identifiers: `2`, `0.5`, `1e7`.
fn short(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e4 {
        format!("{x}")
    } else if x.abs() >= 1e4 || (x != 0.0 && x.abs() < 1e-3) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    NoHotSpots,
    HotSpots {
        count: usize,
    },
    Overflow,
    /// The run could not be set up; only produced by sweeps.
    Failed,
}

impl Classification {
    pub fn label(&self) -> &'static str {
        match self {
            Self::NoHotSpots => "NoHotSpots",
            Self::HotSpots { .. } => "HotSpots",
            Self::Overflow => "Overflow",
            Self::Failed => "Failed",
        }
    }

    pub fn parse(label: &str, count: usize) -> Option<Self> {
        match label {
            "NoHotSpots" => Some(Self::NoHotSpots),
            "HotSpots" => Some(Self::HotSpots { count }),
            "Overflow" => Some(Self::Overflow),
            "Failed" => Some(Self::Failed),
            _ => None,
        }
    }
}

/// Thresholds for [`classify_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    /// Relative prominence passed to [`hot_spots`].
    pub min_prominence: f64,
    /// Smallest spot count classified as a hot-spot pattern. The normal heating
    /// pattern already has one maximum next to each boundary, so the default
    /// asks for a third.
    pub min_count: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            min_prominence: 0.2,
            min_count: 3,
        }
    }
}

pub fn classify(result: &RunResult, min_prominence: f64) -> Classification {
    classify_with(
        result,
        &ClassifyOptions {
            min_prominence,
            ..Default::default()
        },
    )
}

pub fn classify_with(result: &RunResult, opts: &ClassifyOptions) -> Classification {
    if matches!(result.status, RunStatus::Overflow { .. }) {
        return Classification::Overflow;
    }
    classify_field(&result.final_state.theta, opts)
}

/// Classification of a temperature field alone.
pub fn classify_field(theta: &[f64], opts: &ClassifyOptions) -> Classification {
    let count = hot_spots(theta, opts.min_prominence).map_or(0, |h| h.count);
    if count >= opts.min_count {
        Classification::HotSpots { count }
    } else {
        Classification::NoHotSpots
    }
}

/// Scalar outcome of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub id: String,
    /// Flat `section.key` echo of the configuration.
    pub config: BTreeMap<String, toml::Value>,
    pub status: String,
    /// Step of the overflow or the first stability violation.
    pub status_step: Option<usize>,
    pub classification: Classification,
    pub hot_spot_nodes: Vec<usize>,
    pub steps_completed: usize,
    pub final_mean_theta: f64,
    pub max_theta: f64,
    pub envelope_trend: EnvelopeTrend,
    pub growth: Option<GrowthShape>,
    pub clamped_total: f64,
    pub run_dir: Option<PathBuf>,
    /// Set when the run could not be executed.
    pub error: Option<String>,
}

impl RunRecord {
    pub fn sim_config(&self) -> Result<SimConfig> {
        let mut doc = toml::Table::new();
        for (k, v) in &self.config {
            config::apply_override(&mut doc, &format!("{k}={v}"))?;
        }
        Ok(config::from_table(&doc)?.sim)
    }

    fn failed(id: &str, cfg: &SimConfig, err: &str) -> Self {
        Self {
            id: id.into(),
            config: config::echo(cfg),
            status: "Failed".into(),
            status_step: None,
            classification: Classification::Failed,
            hot_spot_nodes: vec![],
            steps_completed: 0,
            final_mean_theta: f64::NAN,
            max_theta: f64::NAN,
            envelope_trend: EnvelopeTrend::Other,
            growth: None,
            clamped_total: 0.0,
            run_dir: None,
            error: Some(err.into()),
        }
    }

    /// `record.json` content: flat keys, config under its `section.key` names.
    pub fn to_json(&self) -> Json {
        let mut m = Map::new();
        m.insert("id".into(), json!(self.id));
        m.insert("status".into(), json!(self.status));
        m.insert("status_step".into(), json!(self.status_step));
        m.insert("classification".into(), json!(self.classification.label()));
        m.insert("hot_spot_count".into(), json!(self.hot_spot_nodes.len()));
        m.insert("hot_spot_nodes".into(), json!(self.hot_spot_nodes));
        m.insert("steps_completed".into(), json!(self.steps_completed));
        m.insert("final_mean_theta_K".into(), json!(self.final_mean_theta));
        m.insert("max_theta_K".into(), json!(self.max_theta));
        m.insert("envelope_trend".into(), json!(self.envelope_trend.as_str()));
        m.insert(
            "growth_early_superlinear".into(),
            json!(self.growth.map(|g| g.early_superlinear)),
        );
        m.insert(
            "growth_late_sublinear".into(),
            json!(self.growth.map(|g| g.late_sublinear)),
        );
        m.insert("clamped_total_Km".into(), json!(self.clamped_total));
        m.insert("error".into(), json!(self.error));
        if let Some(d) = &self.run_dir {
            m.insert("series_csv".into(), json!(d.join("series.csv")));
            m.insert("snapshots_csv".into(), json!(d.join("snapshots.csv")));
        }
        for (k, v) in &self.config {
            m.insert(
                k.clone(),
                serde_json::to_value(v).expect("toml values are json"),
            );
        }
        Json::Object(m)
    }

    pub fn from_json(v: &Json, run_dir: Option<PathBuf>) -> std::result::Result<Self, String> {
        let m = v.as_object().ok_or("record is not an object")?;
        let s = |k: &str| {
            m.get(k)
                .and_then(Json::as_str)
                .ok_or(format!("missing {k}"))
        };
        let f = |k: &str| m.get(k).and_then(Json::as_f64).unwrap_or(f64::NAN);
        let b = |k: &str| m.get(k).and_then(Json::as_bool);
        let nodes: Vec<usize> = m
            .get("hot_spot_nodes")
            .and_then(Json::as_array)
            .map(|a| {
                a.iter()
                    .filter_map(|x| x.as_u64().map(|x| x as usize))
                    .collect()
            })
            .unwrap_or_default();
        let classification =
            Classification::parse(s("classification")?, nodes.len()).ok_or("bad classification")?;
        let mut config = BTreeMap::new();
        for (k, v) in m {
            if k.contains('.') && !k.ends_with("_csv") {
                let tv: toml::Value =
                    serde_json::from_value(v.clone()).map_err(|e| format!("{k}: {e}"))?;
                config.insert(k.clone(), tv);
            }
        }
        Ok(Self {
            id: s("id")?.into(),
            config,
            status: s("status")?.into(),
            status_step: m
                .get("status_step")
                .and_then(Json::as_u64)
                .map(|x| x as usize),
            classification,
            hot_spot_nodes: nodes,
            steps_completed: m.get("steps_completed").and_then(Json::as_u64).unwrap_or(0) as usize,
            final_mean_theta: f("final_mean_theta_K"),
            max_theta: f("max_theta_K"),
            envelope_trend: EnvelopeTrend::parse(s("envelope_trend")?)
                .ok_or("bad envelope_trend")?,
            growth: match (b("growth_early_superlinear"), b("growth_late_sublinear")) {
                (Some(early_superlinear), Some(late_sublinear)) => Some(GrowthShape {
                    early_superlinear,
                    late_sublinear,
                }),
                _ => None,
            },
            clamped_total: f("clamped_total_Km"),
            run_dir,
            error: m.get("error").and_then(Json::as_str).map(String::from),
        })
    }
}

/// Series samples per excitation period at the configured stride.
pub fn period_samples(cfg: &SimConfig, dt: f64) -> usize {
    let steps = 1.0 / (cfg.excitation.frequency * dt);
    (steps / cfg.output.series_stride as f64).round() as usize
}

/// Per-period envelope of the first probe.
pub fn probe_envelope(result: &RunResult, cfg: &SimConfig) -> Vec<f64> {
    let ps = period_samples(cfg, result.grid.dt);
    let v: Vec<f64> = result
        .series
        .iter()
        .map(|p| p.probe_v.first().copied().unwrap_or(0.0))
        .collect();
    envelope(&v, ps).unwrap_or_default()
}

fn status_parts(status: &RunStatus) -> (&'static str, Option<usize>) {
    match *status {
        RunStatus::Completed => ("Completed", None),
        RunStatus::Overflow { step } => ("Overflow", Some(step)),
        RunStatus::StabilityViolation { step } => ("StabilityViolation", Some(step)),
    }
}

/// Summarizes a finished run.
pub fn record_for(
    id: &str,
    cfg: &SimConfig,
    result: &RunResult,
    opts: &ClassifyOptions,
) -> RunRecord {
    let (status, status_step) = status_parts(&result.status);
    let classification = classify_with(result, opts);
    let spots = hot_spots(&result.final_state.theta, opts.min_prominence).unwrap_or(HotSpots {
        count: 0,
        nodes: vec![],
    });
    let mean: Vec<f64> = result.series.iter().map(|p| p.mean_theta).collect();
    let ps = period_samples(cfg, result.grid.dt);
    RunRecord {
        id: id.into(),
        config: config::echo(cfg),
        status: status.into(),
        status_step,
        classification,
        hot_spot_nodes: spots.nodes,
        steps_completed: result.final_state.step,
        final_mean_theta: diagnostics::mean_temperature(&result.final_state),
        max_theta: result
            .series
            .iter()
            .map(|p| p.max_theta)
            .fold(0.0, f64::max),
        envelope_trend: envelope_trend(&probe_envelope(result, cfg)),
        growth: growth_shape(&mean, ps),
        clamped_total: result.clamped_total,
        run_dir: None,
        error: None,
    }
}

/// Writes `series.csv`, `snapshots.csv` and `record.json` into `dir`.
pub fn persist(
    dir: &Path,
    cfg: &SimConfig,
    result: &RunResult,
    record: &mut RunRecord,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    record.run_dir = Some(dir.to_path_buf());

    let path = dir.join("series.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| artifact_err(&path, e))?;
    let mut header = vec![
        "step".to_string(),
        "t_s".into(),
        "mean_theta_K".into(),
        "max_theta_K".into(),
    ];
    header.extend(result.probes.iter().map(|p| format!("probe_v_mps_{p}")));
    header.push("envelope_mps".into());
    w.write_record(&header)
        .map_err(|e| artifact_err(&path, e))?;
    let first: Vec<f64> = result
        .series
        .iter()
        .map(|p| p.probe_v.first().copied().unwrap_or(0.0))
        .collect();
    let env = trailing_envelope(&first, period_samples(cfg, result.grid.dt).max(1));
    for (p, e) in result.series.iter().zip(env) {
        let mut row = vec![
            p.step.to_string(),
            p.t.to_string(),
            p.mean_theta.to_string(),
            p.max_theta.to_string(),
        ];
        row.extend(p.probe_v.iter().map(f64::to_string));
        row.push(e.map(|x| x.to_string()).unwrap_or_default());
        w.write_record(&row).map_err(|e| artifact_err(&path, e))?;
    }
    w.flush().map_err(io_err(&path))?;

    let path = dir.join("snapshots.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| artifact_err(&path, e))?;
    w.write_record(["t_s", "x_m", "u_m", "v_mps", "theta_K"])
        .map_err(|e| artifact_err(&path, e))?;
    for s in &result.snapshots {
        for i in 0..s.u.len() {
            w.write_record([
                s.t.to_string(),
                result.grid.x(i).to_string(),
                s.u[i].to_string(),
                s.v[i].to_string(),
                s.theta[i].to_string(),
            ])
            .map_err(|e| artifact_err(&path, e))?;
        }
    }
    w.flush().map_err(io_err(&path))?;

    write_record(dir, record)
}

pub fn write_record(dir: &Path, record: &RunRecord) -> Result<()> {
    let path = dir.join("record.json");
    let text = serde_json::to_string_pretty(&record.to_json()).expect("record serializes");
    fs::write(&path, text + "\n").map_err(io_err(&path))
}

pub fn read_record(dir: &Path) -> Result<RunRecord> {
    let path = dir.join("record.json");
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let v: Json = serde_json::from_str(&text).map_err(|e| artifact_err(&path, e))?;
    RunRecord::from_json(&v, Some(dir.to_path_buf())).map_err(|m| artifact_err(&path, m))
}

/// Runs `cfg` and, if `out` is given, persists the artifacts under `out/id`.
pub fn run_config(id: &str, cfg: &SimConfig, out: Option<&Path>) -> Result<(RunResult, RunRecord)> {
    let result = run(cfg, &mut ())?;
    let mut record = record_for(id, cfg, &result, &ClassifyOptions::default());
    if let Some(out) = out {
        persist(&out.join(id), cfg, &result, &mut record)?;
    }
    Ok((result, record))
}

/// Names and one-line descriptions of the built-in experiments.
pub const PRESETS: &[(&str, &str)] = &[
    ("smoke", "constant stiffness, 1e4 steps"),
    (
        "fig2-power-k1e7-p1",
        "power law k=1e7 p=1, 5e5 steps: mean temperature and envelope",
    ),
    (
        "fig3a",
        "power law k=1e6 p=1, 5e5 steps: boundary-adjacent maxima, detuned",
    ),
    (
        "fig3b",
        "power law k=1e7 p=0.5, 5e5 steps: central spots, destabilises",
    ),
    ("fig3c", "power law k=1e6 p=2, 5e5 steps: stays resonant"),
    (
        "fig3d",
        "exponential law alpha=0.5 b=1e7, 5e5 steps: softening, detuned",
    ),
    (
        "fig3e",
        "exponential law alpha=3 b=1e9, 5e5 steps: scattered spots, destabilises",
    ),
    (
        "fig3f",
        "exponential law alpha=2 b=1e6, 5e5 steps: stiffening, detuned",
    ),
];

/// Sweep presets: `(name, description)`.
pub const SWEEP_PRESETS: &[(&str, &str)] = &[
    (
        "sweep-power",
        "power law k in {1e6, 1e7} x p in {1, 2}, 5e4 steps",
    ),
    (
        "sweep-exponential",
        "exponential law alpha in {2, 5} x b in {1e2, 1e8}, 5e4 steps",
    ),
];

pub fn preset(name: &str) -> Option<SimConfig> {
    let mut c = SimConfig::reference();
    c.steps = 500_000;
    c.output.snapshot_stride = 5_000;
    let power = |k, p| TemperatureLaw::PowerLaw { k, p };
    let expo = |alpha, b| TemperatureLaw::Exponential { alpha, b };
    c.law = match name {
        "smoke" => {
            c.steps = 10_000;
            c.output.snapshot_stride = 1_000;
            TemperatureLaw::Constant
        }
        "fig2-power-k1e7-p1" => power(1e7, 1.0),
        "fig3a" => power(1e6, 1.0),
        "fig3b" => power(1e7, 0.5),
        "fig3c" => power(1e6, 2.0),
        "fig3d" => expo(0.5, 1e7),
        "fig3e" => expo(3.0, 1e9),
        "fig3f" => expo(2.0, 1e6),
        _ => return None,
    };
    Some(c)
}

pub fn sweep_preset(name: &str) -> Option<SweepSpec> {
    let (family, axis1, axis2) = match name {
        "sweep-power" => (LawFamily::PowerLaw, vec![1e6, 1e7], vec![1.0, 2.0]),
        "sweep-exponential" => (LawFamily::Exponential, vec![2.0, 5.0], vec![1e2, 1e8]),
        _ => return None,
    };
    Some(SweepSpec {
        base: SimConfig::reference(),
        law_family: family,
        axis1,
        axis2,
        reduced_steps: Some(config::DEFAULT_SWEEP_STEPS),
        parallelism: std::thread::available_parallelism().map_or(1, |n| n.get()),
    })
}

pub fn run_reference(name: &str, out: Option<&Path>) -> Result<RunRecord> {
    let cfg = preset(name).ok_or_else(|| ConfigError::UnknownPreset(name.into()))?;
    Ok(run_config(name, &cfg, out)?.1)
}

/// Runs every grid point, at most `parallelism` at a time. Records come back in
/// axis order; a failing point yields a `Failed` record instead of aborting.
pub fn sweep(spec: &SweepSpec, out: Option<&Path>) -> Result<Vec<RunRecord>> {
    let jobs = spec.configs();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.parallelism.max(1))
        .build()
        .expect("thread pool");
    let records: Vec<RunRecord> = pool.install(|| {
        jobs.par_iter()
            .map(|(id, cfg)| match run_config(id, cfg, out) {
                Ok((_, r)) => r,
                Err(e) => RunRecord::failed(id, cfg, &e.to_string()),
            })
            .collect()
    });
    if let Some(out) = out {
        write_index(&out.join("index.csv"), &records)?;
    }
    Ok(records)
}

/// One row of `index.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexRow {
    pub id: String,
    pub law: String,
    pub axis1: Option<f64>,
    pub axis2: Option<f64>,
    pub status: String,
    pub status_step: Option<usize>,
    pub classification: String,
    pub hot_spot_count: usize,
    #[serde(rename = "final_mean_theta_K")]
    pub final_mean_theta: f64,
    #[serde(rename = "max_theta_K")]
    pub max_theta: f64,
    pub envelope_trend: String,
    pub steps_completed: usize,
}

impl From<&RunRecord> for IndexRow {
    fn from(r: &RunRecord) -> Self {
        let num = |k: &str| r.config.get(k).and_then(|v| v.as_float());
        let law = r
            .config
            .get("law.kind")
            .and_then(|v| v.as_str())
            .unwrap_or("constant")
            .to_string();
        let (axis1, axis2) = match law.as_str() {
            "power" => (num("law.k"), num("law.p")),
            "exponential" => (num("law.alpha"), num("law.b")),
            _ => (None, None),
        };
        Self {
            id: r.id.clone(),
            law,
            axis1,
            axis2,
            status: r.status.clone(),
            status_step: r.status_step,
            classification: r.classification.label().into(),
            hot_spot_count: r.hot_spot_nodes.len(),
            final_mean_theta: r.final_mean_theta,
            max_theta: r.max_theta,
            envelope_trend: r.envelope_trend.as_str().into(),
            steps_completed: r.steps_completed,
        }
    }
}

pub fn write_index(path: &Path, records: &[RunRecord]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| artifact_err(path, e))?;
    for r in records {
        w.serialize(IndexRow::from(r))
            .map_err(|e| artifact_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_index(path: &Path) -> Result<Vec<IndexRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| artifact_err(path, e))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<IndexRow>, _>>()
        .map_err(|e| artifact_err(path, e))
}

/// Everything `diagnose` reports for one run.
#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsReport {
    pub run_id: String,
    pub window_start: usize,
    pub window_end: usize,
    pub heat_balance: HeatBalanceSummary,
    pub wf_relative_slack: f64,
    pub wf_relative_slack_dynamic: f64,
    pub wt_relative_residual: f64,
    pub constraints_hold: [bool; 3],
    pub wf: WFReport,
    pub wt: WTReport,
}

/// Steps in the trailing window used for the weak-form checks.
pub const DIAGNOSE_WINDOW: usize = 5_000;

/// Re-runs `cfg` (deterministically), streaming the heat balance over all
/// steps and recording the last `window` steps before the end (or before an
/// overflow at `stop`) for the weak-form residuals.
pub fn diagnose_config(
    id: &str,
    cfg: &SimConfig,
    stop: Option<usize>,
    window: usize,
) -> Result<DiagnosticsReport> {
    let grid = crate::solver1d::build_grid(cfg)?;
    let end = stop
        .map_or(cfg.steps, |s| s.saturating_sub(1))
        .min(cfg.steps);
    let start = end.saturating_sub(window);
    if end <= start {
        return Err(diagnostics::DiagnosticsError::TooFewFrames {
            need: 2,
            have: end - start + 1,
        }
        .into());
    }
    let mut cfg = cfg.clone();
    cfg.steps = end;
    let mut rec = TrajectoryRecorder::new(grid, start, end);
    let mut balance = HeatBalanceMonitor::new(grid, cfg.material, cfg.law);
    let mut both = |s: &SimState, r: &StepReport| {
        use crate::solver1d::StepObserver;
        rec.observe(s, r);
        balance.observe(s, r);
    };
    run(&cfg, &mut both)?;
    let traj = rec.trajectory;
    let theta_max = traj
        .frames
        .iter()
        .flat_map(|f| f.theta.iter())
        .fold(0.0_f64, |m, &x| m.max(x));
    let constants = diagnostics::weak::wf_constants_for(
        &cfg.material,
        &law_bounds(&cfg.law, &cfg.material, theta_max),
    );
    let tests = TestFunctions::default_for(&traj)?;
    let wf = diagnostics::wf_residual(&traj, &constants, &tests, &cfg.material, &cfg.law)?;
    let wt = diagnostics::wt_residual(&traj, &tests, &cfg.material, &cfg.law)?;
    Ok(DiagnosticsReport {
        run_id: id.into(),
        window_start: start,
        window_end: end,
        heat_balance: balance.summary,
        wf_relative_slack: wf.relative_slack(),
        wf_relative_slack_dynamic: wf.relative_slack_dynamic(),
        wt_relative_residual: wt.relative(),
        constraints_hold: constants.constraints(),
        wf,
        wt,
    })
}

/// Diagnoses a persisted run and writes `diagnostics.json` next to its record.
pub fn diagnose_run_dir(dir: &Path) -> Result<DiagnosticsReport> {
    let record = read_record(dir)?;
    let cfg = record.sim_config()?;
    let stop = (record.status == "Overflow")
        .then_some(record.status_step)
        .flatten();
    let report = diagnose_config(&record.id, &cfg, stop, DIAGNOSE_WINDOW)?;
    let path = dir.join("diagnostics.json");
    let mut f = fs::File::create(&path).map_err(io_err(&path))?;
    serde_json::to_writer_pretty(&mut f, &report).map_err(|e| artifact_err(&path, e))?;
    writeln!(f).map_err(io_err(&path))?;
    Ok(report)
}

/// Helper for ring-down experiments: free vibration from a sine displacement.
pub fn ring_down(mut cfg: SimConfig, amplitude: f64, mode: u32) -> SimConfig {
    cfg.excitation.amplitude = 0.0;
    cfg.initial = InitialCondition::SineDisplacement { amplitude, mode };
    cfg
}
