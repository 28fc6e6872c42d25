//! Experiment configuration: a line-based `key = value` format.
//!
//! ```text
//! # Variance concentration run
//! experiment = thm1
//! sequence.kind = geometric
//! sequence.a1 = 2
//! sequence.ratio = 2
//! alpha.lo = 1
//! alpha.hi = 2
//! alpha.samples = 200
//! n.list = 256, 1024, 4096
//! l.kind = power
//! l.param = 0.4
//! delta = 0.25
//! seed = 0
//! ```
//!
//! Blank lines and text after `#` are ignored. Every key may appear at most
//! once. Keys that are absent take the defaults listed on
//! [`ExperimentConfig`]; [`ExperimentConfig::echo`] lists every resolved value.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::sequence::{SequenceKind, SequenceSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Thm1,
    Thm2,
    Clt,
    Oracle,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Thm1 => "thm1",
            ExperimentKind::Thm2 => "thm2",
            ExperimentKind::Clt => "clt",
            ExperimentKind::Oracle => "oracle",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "thm1" => Ok(ExperimentKind::Thm1),
            "thm2" => Ok(ExperimentKind::Thm2),
            "clt" => Ok(ExperimentKind::Clt),
            "oracle" => Ok(ExperimentKind::Oracle),
            other => Err(format!(
                "unknown experiment `{other}` (expected thm1, thm2, clt or oracle)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

/// How the intensity `L` depends on `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "param", rename_all = "lowercase")]
pub enum LSchedule {
    /// `L = c`
    Const(f64),
    /// `L = N^s`, `0 < s < 1`
    Power(f64),
    /// `L = (ln N)^t`, `t > 0`
    LogPow(f64),
}

impl LSchedule {
    pub fn from_parts(kind: &str, param: f64) -> Result<Self, HarnessError> {
        let schedule = match kind {
            "const" => LSchedule::Const(param),
            "power" => LSchedule::Power(param),
            "logpow" => LSchedule::LogPow(param),
            other => {
                return Err(HarnessError::Validation(format!(
                    "l.kind `{other}` is not one of const, power, logpow"
                )))
            }
        };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LSchedule::Const(_) => "const",
            LSchedule::Power(_) => "power",
            LSchedule::LogPow(_) => "logpow",
        }
    }

    pub fn param(&self) -> f64 {
        match *self {
            LSchedule::Const(p) | LSchedule::Power(p) | LSchedule::LogPow(p) => p,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let p = self.param();
        let ok = p.is_finite()
            && match self {
                LSchedule::Const(c) => *c > 0.0,
                LSchedule::Power(s) => *s > 0.0 && *s < 1.0,
                LSchedule::LogPow(t) => *t > 0.0,
            };
        if ok {
            return Ok(());
        }
        let rule = match self {
            LSchedule::Const(_) => "const schedule needs c > 0",
            LSchedule::Power(_) => "power schedule needs 0 < s < 1",
            LSchedule::LogPow(_) => "logpow schedule needs t > 0",
        };
        Err(HarnessError::Validation(format!("{rule}, got {p}")))
    }

    pub fn l_of(&self, n: usize) -> f64 {
        let n = n as f64;
        match *self {
            LSchedule::Const(c) => c,
            LSchedule::Power(s) => n.powf(s),
            LSchedule::LogPow(t) => n.ln().powf(t),
        }
    }
}

impl fmt::Display for LSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind(), self.param())
    }
}

/// Parses `kind:param`, e.g. `power:0.4`.
impl FromStr for LSchedule {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, param) = s.split_once(':').ok_or_else(|| {
            HarnessError::Validation(format!("schedule `{s}` is not of the form kind:param"))
        })?;
        let param: f64 = param.trim().parse().map_err(|_| {
            HarnessError::Validation(format!("schedule parameter `{param}` is not a number"))
        })?;
        LSchedule::from_parts(kind.trim(), param)
    }
}

/// A fully resolved experiment description.
///
/// Defaults: `sequence` is `a_n = 2^n` (geometric, a1 = 2, ratio = 2),
/// `alpha_interval = (1, 2)`, `alpha_samples = 100`, `delta = 0.25`,
/// `seed = 0`, `grid = 2^20`, `tol = 0.01`, `format = csv`, no output path.
/// `n_list` and `l_schedule` default per experiment, see
/// [`ExperimentConfig::defaults`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub sequence: SequenceSpec,
    pub alpha_interval: (f64, f64),
    /// Number of alpha draws (replicates); for `oracle`, i.i.d. trials.
    pub alpha_samples: usize,
    pub n_list: Vec<usize>,
    pub l_schedule: LSchedule,
    pub delta: f64,
    pub seed: u64,
    pub grid: usize,
    pub tol: f64,
    pub output_path: Option<String>,
    pub format: OutputFormat,
}

/// Keys accepted by [`parse_config_str`].
pub const CONFIG_KEYS: &[&str] = &[
    "experiment",
    "sequence.kind",
    "sequence.a1",
    "sequence.ratio",
    "sequence.poly_degree",
    "sequence.ratios",
    "sequence.ratios_file",
    "alpha.lo",
    "alpha.hi",
    "alpha.samples",
    "n.list",
    "l.kind",
    "l.param",
    "delta",
    "seed",
    "grid",
    "tol",
    "output.path",
    "output.format",
];

impl ExperimentConfig {
    /// The configuration used when only `experiment` is given.
    ///
    /// | experiment | n.list            | L schedule  | alpha.samples |
    /// |------------|-------------------|-------------|---------------|
    /// | thm1       | 256, 1024, 4096   | power:0.4   | 100           |
    /// | thm2       | 256, 512, ..., 8192 | power:0.3 | 100           |
    /// | clt        | 1024, 4096, 16384 | logpow:2    | 10            |
    /// | oracle     | 1024              | const:8     | 1000          |
    pub fn defaults(experiment: ExperimentKind) -> Self {
        let (n_list, l_schedule, alpha_samples) = match experiment {
            ExperimentKind::Thm1 => (vec![256, 1024, 4096], LSchedule::Power(0.4), 100),
            ExperimentKind::Thm2 => (
                vec![256, 512, 1024, 2048, 4096, 8192],
                LSchedule::Power(0.3),
                100,
            ),
            ExperimentKind::Clt => (vec![1024, 4096, 16384], LSchedule::LogPow(2.0), 10),
            ExperimentKind::Oracle => (vec![1024], LSchedule::Const(8.0), 1000),
        };
        ExperimentConfig {
            experiment,
            sequence: SequenceSpec::powers_of_two(),
            alpha_interval: (1.0, 2.0),
            alpha_samples,
            n_list,
            l_schedule,
            delta: 0.25,
            seed: 0,
            grid: 1 << 20,
            tol: 0.01,
            output_path: None,
            format: OutputFormat::Csv,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.sequence
            .validate()
            .map_err(|e| HarnessError::Validation(e.to_string()))?;
        let (lo, hi) = self.alpha_interval;
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(HarnessError::Validation(format!(
                "alpha interval must be bounded with positive length, got [{lo}, {hi}]"
            )));
        }
        if self.alpha_samples == 0 {
            return Err(HarnessError::Validation(
                "alpha.samples (number of trials) must be at least 1".into(),
            ));
        }
        if self.n_list.is_empty() {
            return Err(HarnessError::Validation("n.list must not be empty".into()));
        }
        if self.n_list[0] == 0 {
            return Err(HarnessError::Validation("n.list entries must be positive".into()));
        }
        if self.n_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(HarnessError::Validation(
                "n.list must be strictly increasing".into(),
            ));
        }
        self.l_schedule.validate()?;
        for &n in &self.n_list {
            let l = self.l_schedule.l_of(n);
            if !(l > 0.0 && l <= n as f64) {
                return Err(HarnessError::Validation(format!(
                    "L({n}) = {l} must lie in (0, N]"
                )));
            }
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(HarnessError::Validation(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        if self.grid == 0 {
            return Err(HarnessError::Validation("grid must be positive".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(HarnessError::Validation(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }

    /// Regime warnings that do not stop a run.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let LSchedule::Power(s) = self.l_schedule {
            if s >= 0.5 {
                out.push(format!(
                    "power schedule s = {s} >= 1/2 leaves the almost-everywhere regime L = O(N^(1/2 - eps))"
                ));
            }
        }
        out
    }

    /// Every resolved key with its value, in sorted key order. Re-parsing
    /// the echo reproduces the configuration.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let s = &self.sequence;
        m.insert("experiment".into(), self.experiment.as_str().into());
        m.insert("sequence.kind".into(), s.kind.as_str().into());
        m.insert("sequence.a1".into(), s.a1.to_string());
        match s.kind {
            SequenceKind::CustomRatios => {
                let r: Vec<String> = s.ratios.iter().map(|r| r.to_string()).collect();
                m.insert("sequence.ratios".into(), r.join(", "));
            }
            _ => {
                m.insert("sequence.ratio".into(), s.ratio.to_string());
                m.insert("sequence.poly_degree".into(), s.poly_degree.to_string());
            }
        }
        m.insert("alpha.lo".into(), self.alpha_interval.0.to_string());
        m.insert("alpha.hi".into(), self.alpha_interval.1.to_string());
        m.insert("alpha.samples".into(), self.alpha_samples.to_string());
        let ns: Vec<String> = self.n_list.iter().map(|n| n.to_string()).collect();
        m.insert("n.list".into(), ns.join(", "));
        m.insert("l.kind".into(), self.l_schedule.kind().into());
        m.insert("l.param".into(), self.l_schedule.param().to_string());
        m.insert("delta".into(), self.delta.to_string());
        m.insert("seed".into(), self.seed.to_string());
        m.insert("grid".into(), self.grid.to_string());
        m.insert("tol".into(), self.tol.to_string());
        if let Some(p) = &self.output_path {
            m.insert("output.path".into(), p.clone());
        }
        m.insert("output.format".into(), self.format.as_str().into());
        m
    }

    /// The echo rendered in the config file format.
    pub fn to_config_string(&self) -> String {
        self.echo()
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

/// Reads and parses a configuration file. Relative `sequence.ratios_file`
/// paths resolve against the config file's directory.
pub fn parse_config(path: impl AsRef<Path>) -> Result<ExperimentConfig, HarnessError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config_in(&text, path.parent())
}

/// Parses configuration text. `sequence.ratios_file` resolves against the
/// working directory.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, HarnessError> {
    parse_config_in(text, None)
}

struct Entry {
    line: usize,
    value: String,
}

fn parse_err(line: usize, message: impl Into<String>) -> HarnessError {
    HarnessError::Parse {
        line,
        message: message.into(),
    }
}

fn field<T: FromStr>(entries: &BTreeMap<String, Entry>, key: &str) -> Result<Option<T>, HarnessError> {
    match entries.get(key) {
        None => Ok(None),
        Some(e) => e.value.parse::<T>().map(Some).map_err(|_| {
            parse_err(e.line, format!("cannot parse value `{}` for key `{key}`", e.value))
        }),
    }
}

fn float_list(line: usize, key: &str, s: &str) -> Result<Vec<f64>, HarnessError> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| parse_err(line, format!("`{t}` in `{key}` is not a number")))
        })
        .collect()
}

fn parse_config_in(text: &str, base: Option<&Path>) -> Result<ExperimentConfig, HarnessError> {
    let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| parse_err(line, format!("expected `key = value`, got `{content}`")))?;
        let key = key.trim();
        let value = value.trim();
        if !CONFIG_KEYS.contains(&key) {
            return Err(parse_err(line, format!("unknown key `{key}`")));
        }
        if value.is_empty() {
            return Err(parse_err(line, format!("key `{key}` has an empty value")));
        }
        if entries.contains_key(key) {
            return Err(parse_err(line, format!("duplicate key `{key}`")));
        }
        entries.insert(
            key.to_string(),
            Entry {
                line,
                value: value.to_string(),
            },
        );
    }

    let experiment = match entries.get("experiment") {
        None => return Err(parse_err(0, "missing required key `experiment`")),
        Some(e) => e
            .value
            .parse::<ExperimentKind>()
            .map_err(|msg| parse_err(e.line, msg))?,
    };
    let mut cfg = ExperimentConfig::defaults(experiment);

    if let Some(e) = entries.get("sequence.kind") {
        cfg.sequence.kind = e
            .value
            .parse::<SequenceKind>()
            .map_err(|err| parse_err(e.line, err.to_string()))?;
    }
    if let Some(v) = field::<f64>(&entries, "sequence.a1")? {
        cfg.sequence.a1 = v;
    }
    if let Some(v) = field::<f64>(&entries, "sequence.ratio")? {
        cfg.sequence.ratio = v;
    }
    if let Some(v) = field::<u32>(&entries, "sequence.poly_degree")? {
        cfg.sequence.poly_degree = v;
    }
    if let Some(e) = entries.get("sequence.ratios") {
        cfg.sequence.ratios = float_list(e.line, "sequence.ratios", &e.value)?;
    }
    if let Some(e) = entries.get("sequence.ratios_file") {
        if entries.contains_key("sequence.ratios") {
            return Err(parse_err(
                e.line,
                "`sequence.ratios` and `sequence.ratios_file` are mutually exclusive",
            ));
        }
        let p = Path::new(&e.value);
        let p = match base {
            Some(b) if p.is_relative() => b.join(p),
            _ => p.to_path_buf(),
        };
        let text = std::fs::read_to_string(&p).map_err(|source| HarnessError::Io {
            path: p.display().to_string(),
            source,
        })?;
        cfg.sequence.ratios = float_list(e.line, "sequence.ratios_file", &text)?;
    }
    if cfg.sequence.kind == SequenceKind::CustomRatios {
        cfg.sequence.ratio = 0.0;
        cfg.sequence.poly_degree = 0;
    } else if !cfg.sequence.ratios.is_empty() {
        let line = entries
            .get("sequence.ratios")
            .or_else(|| entries.get("sequence.ratios_file"))
            .map_or(0, |e| e.line);
        return Err(parse_err(
            line,
            "ratios are only used with sequence.kind = custom-ratios",
        ));
    }

    if let Some(v) = field::<f64>(&entries, "alpha.lo")? {
        cfg.alpha_interval.0 = v;
    }
    if let Some(v) = field::<f64>(&entries, "alpha.hi")? {
        cfg.alpha_interval.1 = v;
    }
    if let Some(v) = field::<usize>(&entries, "alpha.samples")? {
        cfg.alpha_samples = v;
    }
    if let Some(e) = entries.get("n.list") {
        cfg.n_list = e
            .value
            .split(',')
            .map(|t| {
                let t = t.trim();
                t.parse::<usize>()
                    .map_err(|_| parse_err(e.line, format!("`{t}` in `n.list` is not a count")))
            })
            .collect::<Result<_, _>>()?;
    }

    match (entries.get("l.kind"), entries.get("l.param")) {
        (Some(k), p) if k.value.contains(':') => {
            if let Some(p) = p {
                return Err(parse_err(
                    p.line,
                    "`l.param` conflicts with the `kind:param` form of `l.kind`",
                ));
            }
            cfg.l_schedule = k.value.parse()?;
        }
        (Some(k), Some(p)) => {
            let param: f64 = p
                .value
                .parse()
                .map_err(|_| parse_err(p.line, format!("`{}` is not a number", p.value)))?;
            cfg.l_schedule = LSchedule::from_parts(&k.value, param)?;
        }
        (Some(k), None) => {
            return Err(parse_err(k.line, "`l.kind` given without `l.param`"));
        }
        (None, Some(p)) => {
            let param: f64 = p
                .value
                .parse()
                .map_err(|_| parse_err(p.line, format!("`{}` is not a number", p.value)))?;
            cfg.l_schedule = LSchedule::from_parts(cfg.l_schedule.kind(), param)?;
        }
        (None, None) => {}
    }

    if let Some(v) = field::<f64>(&entries, "delta")? {
        cfg.delta = v;
    }
    if let Some(v) = field::<u64>(&entries, "seed")? {
        cfg.seed = v;
    }
    if let Some(v) = field::<usize>(&entries, "grid")? {
        cfg.grid = v;
    }
    if let Some(v) = field::<f64>(&entries, "tol")? {
        cfg.tol = v;
    }
    if let Some(e) = entries.get("output.path") {
        cfg.output_path = Some(e.value.clone());
    }
    if let Some(e) = entries.get("output.format") {
        cfg.format = e
            .value
            .parse::<OutputFormat>()
            .map_err(|msg| parse_err(e.line, msg))?;
    }

    cfg.validate()?;
    Ok(cfg)
}
