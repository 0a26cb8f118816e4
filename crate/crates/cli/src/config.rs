//! `key=value` run configuration. Parsing is fail-closed: unknown or repeated
//! keys, missing required keys and out-of-range values are all errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use mns_core::diagnostics::DEFAULT_SOBOLEV_INDEX;
use mns_core::initial::InitialCondition;
use mns_core::integrator::{StepControls, StepSize, DEFAULT_BLOWUP_THRESHOLD};
use mns_core::{Grid, ModelKind, RieszSign};

pub const DEFAULT_DT_MAX: f64 = 0.1;
pub const DEFAULT_OUTPUT: &str = "output";

const KEYS: [&str; 15] = [
    "model",
    "n",
    "T",
    "dt",
    "cfl",
    "dt_max",
    "ic",
    "riesz_sign",
    "m",
    "C",
    "output",
    "diag_every",
    "snapshot_every",
    "restart",
    "blowup_threshold",
];

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected key=value, got '{text}'")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key '{key}' given twice")]
    Duplicate { line: usize, key: String },
    #[error("missing required key '{0}'")]
    Missing(&'static str),
    #[error("key '{key}': cannot parse '{value}' as {expected}")]
    Type { key: &'static str, value: String, expected: &'static str },
    #[error("key '{key}': {message}")]
    Range { key: &'static str, message: String },
    #[error("give exactly one of 'dt' and 'cfl'")]
    StepChoice,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelKind,
    pub n: usize,
    pub t_final: f64,
    pub step: StepSize,
    pub ic: InitialCondition,
    pub riesz_sign: RieszSign,
    /// Sobolev index of the `hm` column and the H^m budget.
    pub m: f64,
    /// Constant `C` in the reported a-priori bounds.
    pub bound_constant: f64,
    pub output: PathBuf,
    pub diag_every: u64,
    /// Snapshot period in steps; 0 disables periodic snapshots.
    pub snapshot_every: u64,
    pub restart: Option<PathBuf>,
    pub blowup_threshold: f64,
}

impl RunConfig {
    pub fn controls(&self) -> StepControls {
        let mut controls = match self.step {
            StepSize::Fixed(dt) => StepControls::fixed(dt, self.t_final),
            StepSize::Cfl { cfl, dt_max } => StepControls::cfl(cfl, dt_max, self.t_final),
        };
        controls.blowup_threshold = self.blowup_threshold;
        controls.canonicalize_every = (self.snapshot_every > 0).then_some(self.snapshot_every);
        controls
    }

    /// Config text that parses back to `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "model={}", self.model);
        let _ = writeln!(s, "n={}", self.n);
        let _ = writeln!(s, "T={:?}", self.t_final);
        match self.step {
            StepSize::Fixed(dt) => {
                let _ = writeln!(s, "dt={dt:?}");
            }
            StepSize::Cfl { cfl, dt_max } => {
                let _ = writeln!(s, "cfl={cfl:?}\ndt_max={dt_max:?}");
            }
        }
        let _ = writeln!(s, "ic={}", self.ic);
        let _ = writeln!(s, "riesz_sign={}", self.riesz_sign);
        let _ = writeln!(s, "m={:?}\nC={:?}", self.m, self.bound_constant);
        let _ = writeln!(s, "output={}", self.output.display());
        let _ = writeln!(s, "diag_every={}\nsnapshot_every={}", self.diag_every, self.snapshot_every);
        if let Some(r) = &self.restart {
            let _ = writeln!(s, "restart={}", r.display());
        }
        let _ = writeln!(s, "blowup_threshold={:?}", self.blowup_threshold);
        s
    }
}

fn parse<T: std::str::FromStr>(key: &'static str, value: &str, expected: &'static str) -> Result<T, ConfigError> {
    value.parse::<T>().map_err(|_| ConfigError::Type { key, value: value.to_string(), expected })
}

fn range(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Range { key, message: message.into() }
}

fn positive(key: &'static str, x: f64) -> Result<f64, ConfigError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(range(key, format!("must be a finite number > 0, got {x}")))
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut map: BTreeMap<&'static str, String> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::Syntax { line: i + 1, text: raw.trim().to_string() });
        };
        let k = k.trim();
        let Some(key) = KEYS.iter().copied().find(|known| *known == k) else {
            return Err(ConfigError::UnknownKey { line: i + 1, key: k.to_string() });
        };
        if map.insert(key, v.trim().to_string()).is_some() {
            return Err(ConfigError::Duplicate { line: i + 1, key: k.to_string() });
        }
    }
    let get = |key: &'static str| map.get(key).map(String::as_str);
    let need = |key: &'static str| get(key).ok_or(ConfigError::Missing(key));

    let model: ModelKind = parse("model", need("model")?, "mns, ns_rotational, ns_convective or hall")?;
    let n: usize = parse("n", need("n")?, "an integer")?;
    let grid = Grid::new(n).map_err(|_| range("n", format!("n must be even ≥ 8, got {n}")))?;
    let t_final = positive("T", parse("T", need("T")?, "a number")?)?;

    let step = match (get("dt"), get("cfl")) {
        (Some(dt), None) => {
            if get("dt_max").is_some() {
                return Err(range("dt_max", "only applies with 'cfl'"));
            }
            StepSize::Fixed(positive("dt", parse("dt", dt, "a number")?)?)
        }
        (None, Some(cfl)) => {
            let cfl: f64 = parse("cfl", cfl, "a number")?;
            if !(cfl > 0.0 && cfl <= 1.0) {
                return Err(range("cfl", format!("must lie in (0, 1], got {cfl}")));
            }
            let dt_max = match get("dt_max") {
                Some(v) => positive("dt_max", parse("dt_max", v, "a number")?)?,
                None => DEFAULT_DT_MAX,
            };
            StepSize::Cfl { cfl, dt_max }
        }
        _ => return Err(ConfigError::StepChoice),
    };

    let ic: InitialCondition = need("ic")?.parse().map_err(|e: mns_core::Error| range("ic", e.to_string()))?;
    ic.validate(&grid).map_err(|e| range("ic", e.to_string()))?;

    let riesz_sign = match get("riesz_sign") {
        Some(v) => parse("riesz_sign", v, "+1 or -1")?,
        None => RieszSign::default(),
    };
    let m = match get("m") {
        Some(v) => parse("m", v, "a number")?,
        None => DEFAULT_SOBOLEV_INDEX,
    };
    if !(m.is_finite() && m >= 0.0) {
        return Err(range("m", format!("must be >= 0, got {m}")));
    }
    let bound_constant = match get("C") {
        Some(v) => positive("C", parse("C", v, "a number")?)?,
        None => 1.0,
    };
    let output = get("output").map_or_else(|| PathBuf::from(DEFAULT_OUTPUT), PathBuf::from);
    if output.as_os_str().is_empty() {
        return Err(range("output", "must not be empty"));
    }
    let diag_every = match get("diag_every") {
        Some(v) => parse("diag_every", v, "an integer")?,
        None => 1,
    };
    if diag_every == 0 {
        return Err(range("diag_every", "must be >= 1"));
    }
    let snapshot_every = match get("snapshot_every") {
        Some(v) => parse("snapshot_every", v, "an integer")?,
        None => 0,
    };
    let restart = get("restart").filter(|r| !r.is_empty()).map(PathBuf::from);
    let blowup_threshold = match get("blowup_threshold") {
        Some(v) => positive("blowup_threshold", parse("blowup_threshold", v, "a number")?)?,
        None => DEFAULT_BLOWUP_THRESHOLD,
    };

    Ok(RunConfig {
        model,
        n,
        t_final,
        step,
        ic,
        riesz_sign,
        m,
        bound_constant,
        output,
        diag_every,
        snapshot_every,
        restart,
        blowup_threshold,
    })
}
