//! Run configuration files.
//!
//! Configs are TOML documents with one table per section. Physical quantities
//! are either plain numbers in SI base units or strings carrying a unit with an
//! optional SI prefix (`"1mm"`, `"2 MHz"`, `"124.8GPa"`, `"60 um/s"`). Every
//! key has a default taken from the reference configuration, so an empty file
//! is valid.
//!
//! ```toml
//! [material]
//! c0 = "124.8 GPa"
//! rho = 7800          # kg/m³
//! tau = "1 ns"
//! c_heat = 350        # J/(kg·K)
//! lambda = 1.1        # W/(m·K)
//!
//! [law]
//! kind = "power"      # constant | power | exponential
//! k = 1e7
//! p = 1
//!
//! [geometry]
//! length = "1 mm"
//! nodes = 101
//!
//! [time]
//! stability_factor = 2.5
//! steps = 50000
//!
//! [excitation]
//! frequency = "2 MHz"
//! amplitude = "60 um/s"
//! mode = "force"      # force | dirichlet
//!
//! [output]
//! series_stride = 25
//! snapshot_stride = 5000
//! probes = [25]
//! overflow_limit = 1e12
//!
//! [initial]
//! kind = "rest"       # rest | sine (with amplitude and mode)
//!
//! [sweep]
//! family = "power"    # power | exponential
//! axis1 = [1e6, 1e7]  # k or alpha
//! axis2 = [1, 2]      # p or b
//! reduced_steps = 50000
//! parallelism = 4
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;
use toml::{Table, Value};

use crate::harness::{LawFamily, SweepSpec};
use crate::materials::TemperatureLaw;
use crate::solver1d::{DriveMode, InitialCondition, SimConfig, SimError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("{key}: {message}")]
    Field { key: String, message: String },
    #[error("invalid configuration: {0}")]
    Sim(#[from] SimError),
    #[error("{0}")]
    Usage(String),
    #[error("unknown preset {0:?} (see `thermovisc presets`)")]
    UnknownPreset(String),
}

pub type Result<T> = std::result::Result<T, ConfigError>;

const KNOWN: &[(&str, &[&str])] = &[
    ("material", &["c0", "rho", "tau", "c_heat", "lambda"]),
    ("law", &["kind", "k", "p", "alpha", "b"]),
    ("geometry", &["length", "nodes"]),
    ("time", &["stability_factor", "steps"]),
    ("excitation", &["frequency", "amplitude", "node", "mode"]),
    (
        "output",
        &[
            "series_stride",
            "snapshot_stride",
            "probes",
            "overflow_limit",
        ],
    ),
    ("initial", &["kind", "amplitude", "mode"]),
    (
        "sweep",
        &["family", "axis1", "axis2", "reduced_steps", "parallelism"],
    ),
];

/// Default step count for sweeps that do not set `reduced_steps`.
pub const DEFAULT_SWEEP_STEPS: usize = 50_000;

/// A parsed configuration: one run, plus a sweep if the file has a `[sweep]` table.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub sim: SimConfig,
    pub sweep: Option<SweepSpec>,
}

/// Parses `text` as a number with an optional `[prefix]unit` suffix.
///
/// Without the unit the text must be a plain number, so `"3m"` is rejected for
/// frequencies rather than silently read as 3 mHz.
pub fn parse_quantity(text: &str, unit: &str) -> std::result::Result<f64, String> {
    let s = text.trim();
    let plain = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| format!("cannot read {text:?} as a number with unit {unit:?}"))
    };
    let Some(head) = (!unit.is_empty()).then(|| s.strip_suffix(unit)).flatten() else {
        return plain(s);
    };
    let head = head.trim_end();
    let prefixes = [
        ("G", 1e9),
        ("M", 1e6),
        ("k", 1e3),
        ("m", 1e-3),
        ("u", 1e-6),
        ("µ", 1e-6),
        ("μ", 1e-6),
        ("n", 1e-9),
        ("p", 1e-12),
    ];
    for (p, scale) in prefixes {
        if let Some(num) = head.strip_suffix(p) {
            if let Ok(x) = num.trim().parse::<f64>() {
                return Ok(x * scale);
            }
        }
    }
    plain(head)
}

fn field(key: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        key: key.into(),
        message: message.into(),
    }
}

/// Applies `section.key=value`; the value is read as a TOML literal and falls
/// back to a bare string (`law.kind=power`).
pub fn apply_override(doc: &mut Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| field(assignment, "override must look like section.key=value"))?;
    let key = key.trim();
    let (section, name) = key
        .split_once('.')
        .ok_or_else(|| field(key, "override key must be section.key"))?;
    let value = toml::from_str::<Table>(&format!("v = {}", raw.trim()))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.trim().to_string()));
    let sec = doc
        .entry(section.to_string())
        .or_insert_with(|| Value::Table(Table::new()));
    let Value::Table(sec) = sec else {
        return Err(field(section, "is not a table"));
    };
    sec.insert(name.to_string(), value);
    Ok(())
}

/// Overlays `top` onto `base`, section by section.
pub fn merge(base: &mut Table, top: Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(t)) => {
                for (kk, vv) in t {
                    b.insert(kk, vv);
                }
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

pub fn parse_document(text: &str) -> Result<Table> {
    toml::from_str::<Table>(text).map_err(|e| ConfigError::Syntax(e.to_string()))
}

pub fn read_document(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_document(&text)
}

/// Builds a config from `doc` layered over `base`, then applies `overrides`.
pub fn build(base: &SimConfig, doc: Table, overrides: &[String]) -> Result<Config> {
    let mut full = echo_table(base);
    merge(&mut full, doc);
    for o in overrides {
        apply_override(&mut full, o)?;
    }
    from_table(&full)
}

/// Parses a config file's text over the reference configuration.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<Config> {
    build(&SimConfig::reference(), parse_document(text)?, overrides)
}

struct Reader<'a> {
    doc: &'a Table,
}

impl<'a> Reader<'a> {
    fn get(&self, section: &str, key: &str) -> Option<&'a Value> {
        self.doc.get(section)?.as_table()?.get(key)
    }

    fn quantity(&self, section: &str, key: &str, unit: &str) -> Result<Option<f64>> {
        let k = format!("{section}.{key}");
        match self.get(section, key) {
            None => Ok(None),
            Some(Value::Float(x)) => Ok(Some(*x)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(Value::String(s)) => parse_quantity(s, unit).map(Some).map_err(|m| field(k, m)),
            Some(v) => Err(field(k, format!("expected a number, got {v}"))),
        }
    }

    fn req_quantity(&self, section: &str, key: &str, unit: &str) -> Result<f64> {
        self.quantity(section, key, unit)?
            .ok_or_else(|| field(format!("{section}.{key}"), "missing"))
    }

    fn count(&self, section: &str, key: &str) -> Result<Option<usize>> {
        let k = format!("{section}.{key}");
        match self.get(section, key) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as usize)),
            Some(Value::Float(x)) if *x >= 0.0 && x.fract() == 0.0 && *x < 9e15 => {
                Ok(Some(*x as usize))
            }
            Some(v) => Err(field(k, format!("expected a nonnegative integer, got {v}"))),
        }
    }

    fn req_count(&self, section: &str, key: &str) -> Result<usize> {
        self.count(section, key)?
            .ok_or_else(|| field(format!("{section}.{key}"), "missing"))
    }

    fn text(&self, section: &str, key: &str) -> Result<Option<&'a str>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.as_str())),
            Some(v) => Err(field(
                format!("{section}.{key}"),
                format!("expected a string, got {v}"),
            )),
        }
    }

    fn list(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>> {
        let k = format!("{section}.{key}");
        match self.get(section, key) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    Value::Float(x) => Ok(*x),
                    Value::Integer(i) => Ok(*i as f64),
                    Value::String(s) => parse_quantity(s, "").map_err(|m| field(&k, m)),
                    v => Err(field(&k, format!("expected numbers, got {v}"))),
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(v) => Err(field(k, format!("expected a list, got {v}"))),
        }
    }
}

fn check_known(doc: &Table) -> Result<()> {
    for (section, value) in doc {
        let Some((_, keys)) = KNOWN.iter().find(|(s, _)| s == section) else {
            return Err(field(section, "unknown section"));
        };
        let Value::Table(t) = value else {
            return Err(field(section, "expected a table"));
        };
        for key in t.keys() {
            if !keys.contains(&key.as_str()) {
                return Err(field(format!("{section}.{key}"), "unknown key"));
            }
        }
    }
    Ok(())
}

/// Reads a complete document. Every key except the sweep table must be present.
pub fn from_table(doc: &Table) -> Result<Config> {
    check_known(doc)?;
    let r = Reader { doc };
    let mut sim = SimConfig::reference();

    sim.material.c0 = r.req_quantity("material", "c0", "Pa")?;
    sim.material.rho = r.req_quantity("material", "rho", "kg/m^3")?;
    sim.material.tau = r.req_quantity("material", "tau", "s")?;
    sim.material.c_heat = r.req_quantity("material", "c_heat", "J/(kg K)")?;
    sim.material.lambda_th = r.req_quantity("material", "lambda", "W/(m K)")?;

    let num = |key: &str| r.req_quantity("law", key, "");
    sim.law = match r.text("law", "kind")?.unwrap_or("constant") {
        "constant" => TemperatureLaw::Constant,
        "power" => TemperatureLaw::PowerLaw {
            k: num("k")?,
            p: num("p")?,
        },
        "exponential" => TemperatureLaw::Exponential {
            alpha: num("alpha")?,
            b: num("b")?,
        },
        other => {
            return Err(field(
                "law.kind",
                format!("expected constant, power or exponential, got {other:?}"),
            ))
        }
    };
    sim.law
        .validate()
        .map_err(|e| field("law", e.to_string()))?;

    sim.length = r.req_quantity("geometry", "length", "m")?;
    sim.nodes = r.req_count("geometry", "nodes")?;
    sim.stability_factor = r.req_quantity("time", "stability_factor", "")?;
    sim.steps = r.req_count("time", "steps")?;

    sim.excitation.frequency = r.req_quantity("excitation", "frequency", "Hz")?;
    sim.excitation.amplitude = r.req_quantity("excitation", "amplitude", "m/s")?;
    sim.excitation.node = r.count("excitation", "node")?;
    sim.excitation.mode = match r.text("excitation", "mode")?.unwrap_or("force") {
        "force" => DriveMode::Force,
        "dirichlet" => DriveMode::Dirichlet,
        other => {
            return Err(field(
                "excitation.mode",
                format!("expected force or dirichlet, got {other:?}"),
            ))
        }
    };

    sim.output.series_stride = r.req_count("output", "series_stride")?;
    sim.output.snapshot_stride = r.req_count("output", "snapshot_stride")?;
    sim.output.probes = r
        .list("output", "probes")?
        .map(|v| {
            v.into_iter()
                .map(|x| {
                    if x >= 0.0 && x.fract() == 0.0 {
                        Ok(x as usize)
                    } else {
                        Err(field("output.probes", format!("{x} is not a node index")))
                    }
                })
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    sim.overflow_limit = r.req_quantity("output", "overflow_limit", "K")?;

    sim.initial = match r.text("initial", "kind")?.unwrap_or("rest") {
        "rest" => InitialCondition::Rest,
        "sine" => InitialCondition::SineDisplacement {
            amplitude: r.req_quantity("initial", "amplitude", "m")?,
            mode: r.count("initial", "mode")?.unwrap_or(1) as u32,
        },
        other => {
            return Err(field(
                "initial.kind",
                format!("expected rest or sine, got {other:?}"),
            ))
        }
    };

    sim.validate()?;

    let sweep = if doc.contains_key("sweep") {
        let family = match r.text("sweep", "family")? {
            Some("power") => LawFamily::PowerLaw,
            Some("exponential") => LawFamily::Exponential,
            Some(other) => {
                return Err(field(
                    "sweep.family",
                    format!("expected power or exponential, got {other:?}"),
                ))
            }
            None => return Err(field("sweep.family", "missing")),
        };
        let axis = |k: &str| {
            r.list("sweep", k)?
                .filter(|v| !v.is_empty())
                .ok_or_else(|| field(format!("sweep.{k}"), "needs a non-empty list"))
        };
        let spec = SweepSpec {
            base: sim.clone(),
            law_family: family,
            axis1: axis("axis1")?,
            axis2: axis("axis2")?,
            reduced_steps: Some(
                r.count("sweep", "reduced_steps")?
                    .unwrap_or(DEFAULT_SWEEP_STEPS),
            )
            .filter(|&s| s > 0),
            parallelism: r.count("sweep", "parallelism")?.unwrap_or(1).max(1),
        };
        spec.validate().map_err(|m| field("sweep", m))?;
        Some(spec)
    } else {
        None
    };
    Ok(Config { sim, sweep })
}

/// Canonical nested table for `sim`; [`from_table`] inverts it exactly.
pub fn echo_table(sim: &SimConfig) -> Table {
    let mut doc = Table::new();
    for (k, v) in echo(sim) {
        let (s, key) = k.split_once('.').expect("echo keys are dotted");
        doc.entry(s.to_string())
            .or_insert_with(|| Value::Table(Table::new()))
            .as_table_mut()
            .unwrap()
            .insert(key.to_string(), v);
    }
    doc
}

/// Flat `section.key → value` view of `sim` in SI base units.
pub fn echo(sim: &SimConfig) -> BTreeMap<String, Value> {
    let mut m = BTreeMap::new();
    let mut put = |k: &str, v: Value| {
        m.insert(k.to_string(), v);
    };
    let f = Value::Float;
    let i = |x: usize| Value::Integer(x as i64);
    let s = |x: &str| Value::String(x.to_string());
    put("material.c0", f(sim.material.c0));
    put("material.rho", f(sim.material.rho));
    put("material.tau", f(sim.material.tau));
    put("material.c_heat", f(sim.material.c_heat));
    put("material.lambda", f(sim.material.lambda_th));
    match sim.law {
        TemperatureLaw::Constant => put("law.kind", s("constant")),
        TemperatureLaw::PowerLaw { k, p } => {
            put("law.kind", s("power"));
            put("law.k", f(k));
            put("law.p", f(p));
        }
        TemperatureLaw::Exponential { alpha, b } => {
            put("law.kind", s("exponential"));
            put("law.alpha", f(alpha));
            put("law.b", f(b));
        }
    }
    put("geometry.length", f(sim.length));
    put("geometry.nodes", i(sim.nodes));
    put("time.stability_factor", f(sim.stability_factor));
    put("time.steps", i(sim.steps));
    put("excitation.frequency", f(sim.excitation.frequency));
    put("excitation.amplitude", f(sim.excitation.amplitude));
    if let Some(n) = sim.excitation.node {
        put("excitation.node", i(n));
    }
    put(
        "excitation.mode",
        s(match sim.excitation.mode {
            DriveMode::Force => "force",
            DriveMode::Dirichlet => "dirichlet",
        }),
    );
    put("output.series_stride", i(sim.output.series_stride));
    put("output.snapshot_stride", i(sim.output.snapshot_stride));
    if let Some(p) = &sim.output.probes {
        put(
            "output.probes",
            Value::Array(p.iter().map(|&x| i(x)).collect()),
        );
    }
    put("output.overflow_limit", f(sim.overflow_limit));
    match sim.initial {
        InitialCondition::Rest => put("initial.kind", s("rest")),
        InitialCondition::SineDisplacement { amplitude, mode } => {
            put("initial.kind", s("sine"));
            put("initial.amplitude", f(amplitude));
            put("initial.mode", i(mode as usize));
        }
    }
    m
}
