//! Experiment configuration: a TOML document of flat dotted keys.
//!
//! ```toml
//! scenario.k_devices = 16
//! scenario.p_dbm = 30
//! mc.trials = 100000
//! sweep.from = 1
//! sweep.to = 1024
//! sweep.log_scale = true
//! ```
//!
//! Section headers (`[scenario]`) are equivalent. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{db_to_linear, dbm_to_watts, Geometry, LinkSettings};
use crate::distfit::ShapeChoice;
use crate::error::{Error, Result};
use crate::montecarlo::McConfig;
use crate::specfun::QuadratureSpec;

/// What an experiment sweeps and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    RateVsK,
    RateVsPower,
    OutageVsPower,
    OutageVsK,
    PdfCompare,
    AsymptoticCheck,
    Validate,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::RateVsK,
        ExperimentKind::RateVsPower,
        ExperimentKind::OutageVsPower,
        ExperimentKind::OutageVsK,
        ExperimentKind::PdfCompare,
        ExperimentKind::AsymptoticCheck,
        ExperimentKind::Validate,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::RateVsK => "rate_vs_k",
            ExperimentKind::RateVsPower => "rate_vs_power",
            ExperimentKind::OutageVsPower => "outage_vs_power",
            ExperimentKind::OutageVsK => "outage_vs_k",
            ExperimentKind::PdfCompare => "pdf_compare",
            ExperimentKind::AsymptoticCheck => "asymptotic_check",
            ExperimentKind::Validate => "validate",
        }
    }

    /// Grid used when the document has no `sweep.*` keys.
    pub fn default_sweep(&self) -> Sweep {
        let dyadic = |from: f64, to: f64| Sweep {
            from,
            to,
            points: (to / from).log2().round() as usize + 1,
            log_scale: true,
        };
        match self {
            ExperimentKind::RateVsK => dyadic(1.0, 512.0),
            ExperimentKind::OutageVsK => dyadic(1.0, 64.0),
            ExperimentKind::AsymptoticCheck => dyadic(2.0, 1024.0),
            ExperimentKind::RateVsPower | ExperimentKind::OutageVsPower => Sweep {
                from: 0.0,
                to: 50.0,
                points: 11,
                log_scale: false,
            },
            ExperimentKind::PdfCompare => Sweep {
                from: 5.0,
                to: 500.0,
                points: 3,
                log_scale: true,
            },
            // unused by validate; any valid grid will do
            ExperimentKind::Validate => Sweep {
                from: 1.0,
                to: 2.0,
                points: 2,
                log_scale: false,
            },
        }
    }

    /// Whether the sweep runs over the device count (else over power in dBm).
    pub fn sweeps_devices(&self) -> bool {
        !matches!(self, ExperimentKind::RateVsPower | ExperimentKind::OutageVsPower)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::param("kind", s, "unknown experiment kind"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub from: f64,
    pub to: f64,
    pub points: usize,
    pub log_scale: bool,
}

impl Sweep {
    pub fn validate(&self) -> Result<()> {
        if self.points < 2 {
            return Err(Error::config("sweep.points", "need at least 2 points"));
        }
        if !(self.from.is_finite() && self.to.is_finite() && self.from < self.to) {
            return Err(Error::config("sweep.from", format!("need from < to, got {} .. {}", self.from, self.to)));
        }
        if self.log_scale && self.from <= 0.0 {
            return Err(Error::config("sweep.from", "log-scale sweeps need from > 0"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                if i == n - 1 {
                    self.to
                } else if self.log_scale {
                    self.from * (self.to / self.from).powf(t)
                } else {
                    self.from + (self.to - self.from) * t
                }
            })
            .collect()
    }

    /// Grid rounded to distinct positive integers.
    pub fn integer_grid(&self) -> Vec<u32> {
        let mut out: Vec<u32> = self.grid().iter().map(|v| v.round().max(1.0) as u32).collect();
        out.dedup();
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::config("output.format", format!("`{other}` is not csv or json"))),
        }
    }
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub sweep: Sweep,
    pub geometry: Geometry,
    pub link: LinkSettings,
    pub quad: QuadratureSpec,
    pub mc: McConfig,
    pub genk_shape: ShapeChoice,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
}

impl ExperimentSpec {
    pub fn defaults(kind: ExperimentKind) -> Self {
        ExperimentSpec {
            kind,
            sweep: kind.default_sweep(),
            geometry: Geometry::default(),
            link: LinkSettings::default(),
            quad: QuadratureSpec::default(),
            mc: McConfig::default(),
            genk_shape: ShapeChoice::default(),
            output: None,
            format: OutputFormat::Csv,
        }
    }
}

/// Every accepted key.
pub const KNOWN_KEYS: &[&str] = &[
    "scenario.k_devices",
    "scenario.n_spread",
    "scenario.p_dbm",
    "scenario.p_watts",
    "scenario.sigma2_dbm",
    "scenario.sigma2_watts",
    "scenario.alpha",
    "scenario.fading",
    "scenario.target_rate_s",
    "scenario.target_rate_c",
    "geometry.d0_m",
    "geometry.dg_m",
    "geometry.dh_m",
    "geometry.nu0",
    "geometry.nuh",
    "geometry.nug",
    "geometry.wavelength_m",
    "geometry.gains_db",
    "geometry.eta_vars",
    "quad.m1",
    "quad.m2",
    "quad.n_nodes",
    "mc.trials",
    "mc.seed",
    "mc.inner_c_samples",
    "mc.workers",
    "distfit.genk_epsilon",
    "sweep.from",
    "sweep.to",
    "sweep.points",
    "sweep.log_scale",
    "output.path",
    "output.format",
];

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, toml::Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

struct Doc(BTreeMap<String, toml::Value>);

impl Doc {
    fn take(&mut self, key: &str) -> Option<toml::Value> {
        self.0.remove(key)
    }

    fn float(&mut self, key: &str) -> Result<Option<f64>> {
        match self.take(key) {
            None => Ok(None),
            Some(toml::Value::Float(f)) => Ok(Some(f)),
            Some(toml::Value::Integer(i)) => Ok(Some(i as f64)),
            Some(other) => Err(Error::config(key, format!("expected a number, got {}", other.type_str()))),
        }
    }

    fn int(&mut self, key: &str) -> Result<Option<i64>> {
        match self.take(key) {
            None => Ok(None),
            Some(toml::Value::Integer(i)) => Ok(Some(i)),
            Some(other) => Err(Error::config(key, format!("expected an integer, got {}", other.type_str()))),
        }
    }

    fn uint<T: TryFrom<i64>>(&mut self, key: &str, min: i64) -> Result<Option<T>> {
        match self.int(key)? {
            None => Ok(None),
            Some(i) if i < min => Err(Error::config(key, format!("{i} is below the minimum {min}"))),
            Some(i) => T::try_from(i)
                .map(Some)
                .map_err(|_| Error::config(key, format!("{i} is out of range"))),
        }
    }

    fn boolean(&mut self, key: &str) -> Result<Option<bool>> {
        match self.take(key) {
            None => Ok(None),
            Some(toml::Value::Boolean(b)) => Ok(Some(b)),
            Some(other) => Err(Error::config(key, format!("expected a boolean, got {}", other.type_str()))),
        }
    }

    fn string(&mut self, key: &str) -> Result<Option<String>> {
        match self.take(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s)),
            Some(other) => Err(Error::config(key, format!("expected a string, got {}", other.type_str()))),
        }
    }

    fn triple(&mut self, key: &str) -> Result<Option<[f64; 3]>> {
        match self.take(key) {
            None => Ok(None),
            Some(toml::Value::Array(items)) if items.len() == 3 => {
                let mut out = [0.0; 3];
                for (o, v) in out.iter_mut().zip(items) {
                    *o = match v {
                        toml::Value::Float(f) => f,
                        toml::Value::Integer(i) => i as f64,
                        _ => return Err(Error::config(key, "entries must be numbers")),
                    };
                }
                Ok(Some(out))
            }
            Some(_) => Err(Error::config(key, "expected an array of three numbers")),
        }
    }

    /// Power given either in dBm or in watts, never both.
    fn power(&mut self, stem: &str) -> Result<Option<f64>> {
        let dbm_key = format!("{stem}_dbm");
        let watts_key = format!("{stem}_watts");
        let dbm = self.float(&dbm_key)?;
        let watts = self.float(&watts_key)?;
        match (dbm, watts) {
            (Some(_), Some(_)) => Err(Error::config(watts_key, format!("conflicts with `{dbm_key}`; give only one"))),
            (Some(d), None) => Ok(Some(dbm_to_watts(d))),
            (None, Some(w)) if w > 0.0 => Ok(Some(w)),
            (None, Some(w)) => Err(Error::config(watts_key, format!("{w} must be positive"))),
            (None, None) => Ok(None),
        }
    }
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::config(key, format!("{v} must be positive")))
    }
}

/// Parses a configuration document for `kind`, filling omitted keys with the
/// documented defaults.
pub fn parse_config(kind: ExperimentKind, text: &str) -> Result<ExperimentSpec> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::config("<document>", e.message().to_string()))?;
    let mut flat = BTreeMap::new();
    flatten("", &table, &mut flat);
    if let Some(unknown) = flat.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
        return Err(Error::config(unknown.clone(), "unknown key"));
    }
    let mut doc = Doc(flat);
    let mut spec = ExperimentSpec::defaults(kind);

    let link = &mut spec.link;
    if let Some(k) = doc.uint("scenario.k_devices", 1)? {
        link.k_devices = k;
    }
    if let Some(n) = doc.uint("scenario.n_spread", 1)? {
        link.n_spread = n;
    }
    if let Some(p) = doc.power("scenario.p")? {
        link.p_watts = p;
    }
    if let Some(s) = doc.power("scenario.sigma2")? {
        link.sigma2_watts = s;
    }
    if let Some(a) = doc.float("scenario.alpha")? {
        if !(a > 0.0 && a <= 1.0) {
            return Err(Error::config("scenario.alpha", format!("{a} is outside (0, 1]")));
        }
        link.alpha = a;
    }
    if let Some(f) = doc.string("scenario.fading")? {
        link.fading_mode = f.parse().map_err(|e: String| Error::config("scenario.fading", e))?;
    }
    for (key, slot) in [
        ("scenario.target_rate_s", &mut link.target_rate_s),
        ("scenario.target_rate_c", &mut link.target_rate_c),
    ] {
        if let Some(r) = doc.float(key)? {
            if !(r.is_finite() && r >= 0.0) {
                return Err(Error::config(key, format!("{r} must be nonnegative")));
            }
            *slot = r;
        }
    }

    let geo = &mut spec.geometry;
    for (key, slot) in [
        ("geometry.d0_m", &mut geo.d0_m),
        ("geometry.dg_m", &mut geo.dg_m),
        ("geometry.dh_m", &mut geo.dh_m),
        ("geometry.wavelength_m", &mut geo.carrier_wavelength_m),
    ] {
        if let Some(v) = doc.float(key)? {
            *slot = positive(key, v)?;
        }
    }
    for (key, slot) in [
        ("geometry.nu0", &mut geo.nu0),
        ("geometry.nuh", &mut geo.nuh),
        ("geometry.nug", &mut geo.nug),
    ] {
        if let Some(v) = doc.float(key)? {
            if !(v.is_finite() && v >= 2.0) {
                return Err(Error::config(key, format!("path-loss exponent {v} must be at least 2")));
            }
            *slot = v;
        }
    }
    if let Some(g) = doc.triple("geometry.gains_db")? {
        geo.gains_linear = g.map(db_to_linear);
    }
    if let Some(v) = doc.triple("geometry.eta_vars")? {
        for x in v {
            positive("geometry.eta_vars", x)?;
        }
        geo.eta_vars = v;
    }

    let mut m1 = spec.quad.m1_bound;
    let mut m2 = spec.quad.m2_bound;
    let mut nodes = spec.quad.n_nodes;
    if let Some(v) = doc.float("quad.m1")? {
        m1 = positive("quad.m1", v)?;
    }
    if let Some(v) = doc.float("quad.m2")? {
        m2 = positive("quad.m2", v)?;
    }
    if let Some(n) = doc.uint("quad.n_nodes", 1)? {
        nodes = n;
    }
    spec.quad = QuadratureSpec::new(m1, m2, nodes)?;

    if let Some(t) = doc.uint("mc.trials", 1)? {
        spec.mc.trials = t;
    }
    if let Some(s) = doc.uint("mc.seed", 0)? {
        spec.mc.seed = s;
    }
    if let Some(c) = doc.uint("mc.inner_c_samples", 0)? {
        spec.mc.inner_c_samples = c;
    }
    if let Some(w) = doc.uint("mc.workers", 0)? {
        spec.mc.workers = w;
    }

    if let Some(eps) = doc.float("distfit.genk_epsilon")? {
        spec.genk_shape = ShapeChoice::Adjusted(eps);
    }

    let from = doc.float("sweep.from")?;
    let to = doc.float("sweep.to")?;
    let points = doc.uint::<usize>("sweep.points", 0)?;
    let log_scale = doc.boolean("sweep.log_scale")?;
    if from.is_some() || to.is_some() || points.is_some() || log_scale.is_some() {
        let base = spec.sweep;
        let from = from.unwrap_or(base.from);
        let to = to.unwrap_or(base.to);
        let log_scale = log_scale.unwrap_or(base.log_scale);
        let points = match points {
            Some(p) => p,
            // a log sweep without a point count is dyadic
            None if log_scale && from > 0.0 && to > from => (to / from).log2().round() as usize + 1,
            None => base.points,
        };
        spec.sweep = Sweep {
            from,
            to,
            points,
            log_scale,
        };
    }
    spec.sweep.validate()?;

    if let Some(path) = doc.string("output.path")? {
        spec.output = Some(PathBuf::from(path));
    }
    if let Some(f) = doc.string("output.format")? {
        spec.format = f.parse()?;
    }
    debug_assert!(doc.0.is_empty(), "unconsumed keys: {:?}", doc.0.keys());

    spec.geometry.validate()?;
    Ok(spec)
}
