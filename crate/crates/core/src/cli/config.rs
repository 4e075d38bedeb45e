//! Run configuration: `key = value` lines grouped under `[section]` headers,
//! `#` starts a comment.
//!
//! ```text
//! seed = 7
//! output_dir = out
//!
//! [domain]
//! kind = circle        # circle | line
//! n_points = 256
//! length = 1           # circle only (period)
//! half_width = 40      # line only
//!
//! [nonlinearity]
//! name = bbm           # or: coefficients = 0, 1, 0.5  (c0 + c1 u + c2 u² ...)
//!
//! [integrator]
//! dt = 1e-3
//! t_final = 10
//! blowup_threshold = 1e6
//! callback_stride = 100
//! drift_tolerance = 1e-8
//!
//! [kernel]
//! method = spectral    # spectral | direct | exp-filter
//!
//! [initial]
//! kind = sine          # zero | sine | bump | solitary | random
//! amplitude = 0.1
//! mode = 1
//!
//! [experiment]
//! a = 0.4
//! b = 0.6
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::evolution::SimConfig;
use crate::experiments::{BumpShape, BumpSpec, InitialData, VanishingWindow};
use crate::fields::{Domain, DomainKind, Field};
use crate::kernel::{KernelMethod, KernelSpec};
use crate::nonlinearity::NonlinearitySpec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based line of the offending entry, when there is one.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

const KNOWN_KEYS: &[(&str, &[&str])] = &[
    ("", &["seed", "output_dir"]),
    ("domain", &["kind", "n_points", "length", "half_width"]),
    ("nonlinearity", &["name", "coefficients"]),
    ("integrator", &["dt", "t_final", "blowup_threshold", "callback_stride", "drift_tolerance"]),
    ("kernel", &["method"]),
    (
        "initial",
        &["kind", "amplitude", "mode", "center", "radius", "shape", "speed", "x0", "modes"],
    ),
    ("experiment", &["a", "b", "t0", "ramp", "epsilon", "dt_list", "n_list"]),
];

/// Raw `section.key -> (value, line)` table.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, usize)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |message: String| ConfigError {
                line: Some(line_no),
                message,
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(format!("unterminated section header `{line}`")))?
                    .trim();
                if !KNOWN_KEYS.iter().any(|(s, _)| !s.is_empty() && *s == name) {
                    return Err(err(format!("unknown section `[{name}]`")));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let allowed = KNOWN_KEYS
                .iter()
                .find(|(s, _)| *s == section)
                .map(|(_, keys)| *keys)
                .unwrap_or(&[]);
            let full = if section.is_empty() {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            if !allowed.contains(&key) {
                return Err(err(format!("unknown key `{full}`")));
            }
            if value.is_empty() {
                return Err(err(format!("`{full}` has no value")));
            }
            if let Some((_, first)) = entries.get(&full) {
                return Err(err(format!("`{full}` already set on line {first}")));
            }
            entries.insert(full, (value.to_string(), line_no));
        }
        Ok(Self { entries })
    }

    fn raw(&self, key: &str) -> Option<(&str, usize)> {
        self.entries.get(key).map(|(v, l)| (v.as_str(), *l))
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.raw(key).map(|(_, l)| l)
    }

    fn error(&self, key: &str, message: impl fmt::Display) -> ConfigError {
        ConfigError {
            line: self.line(key),
            message: format!("{key}: {message}"),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => v.parse().map(Some).map_err(|_| ConfigError {
                line: Some(line),
                message: format!("{key}: cannot parse `{v}`"),
            }),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, ConfigError> {
        self.get(key)?.ok_or_else(|| ConfigError {
            line: None,
            message: format!("{key}: missing"),
        })
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError> {
        let Some((v, line)) = self.raw(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|s| {
                s.trim().parse().map_err(|_| ConfigError {
                    line: Some(line),
                    message: format!("{key}: cannot parse `{}`", s.trim()),
                })
            })
            .collect::<Result<Vec<T>, _>>()
            .map(Some)
    }
}

/// Per-experiment settings from the `[experiment]` section.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentParams {
    pub window: Option<VanishingWindow>,
    pub ramp: Option<f64>,
    pub epsilon: f64,
    pub dt_list: Option<Vec<f64>>,
    pub n_list: Option<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub domain: Domain,
    pub nonlinearity: NonlinearitySpec,
    pub sim: SimConfig,
    pub drift_tolerance: f64,
    pub initial: InitialData,
    pub experiment: ExperimentParams,
    /// SHA-256 of the config text, hex encoded.
    pub hash: String,
    raw: RawConfig,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw = RawConfig::parse(text)?;
        let seed = raw.get("seed")?.unwrap_or(0);
        let output_dir = raw.get::<String>("output_dir")?.unwrap_or_else(|| "bbm-lab-out".into()).into();

        let kind: String = raw.require("domain.kind")?;
        let n: usize = raw.require("domain.n_points")?;
        let domain = match kind.as_str() {
            "circle" => {
                if raw.line("domain.half_width").is_some() {
                    return Err(raw.error("domain.half_width", "only valid for kind = line"));
                }
                let length = raw.get("domain.length")?.unwrap_or(1.0);
                Domain::new(DomainKind::Circle, length, n)
            }
            "line" => {
                if raw.line("domain.length").is_some() {
                    return Err(raw.error("domain.length", "use half_width for kind = line"));
                }
                Domain::line(raw.require("domain.half_width")?, n)
            }
            other => return Err(raw.error("domain.kind", format!("expected circle or line, got `{other}`"))),
        }
        .map_err(|e| raw.error("domain.n_points", e))?;

        let nonlinearity = match (raw.get::<String>("nonlinearity.name")?, raw.list::<f64>("nonlinearity.coefficients")?) {
            (Some(name), None) => NonlinearitySpec::builtin(&name).map_err(|e| raw.error("nonlinearity.name", e))?,
            (None, Some(c)) => NonlinearitySpec::polynomial(c).map_err(|e| raw.error("nonlinearity.coefficients", e))?,
            (Some(_), Some(_)) => return Err(raw.error("nonlinearity.coefficients", "give either name or coefficients")),
            (None, None) => {
                return Err(ConfigError {
                    line: None,
                    message: "nonlinearity: set name or coefficients".into(),
                })
            }
        };

        let method = match raw.get::<String>("kernel.method")?.as_deref() {
            None | Some("spectral") => KernelMethod::SpectralMultiplier,
            Some("direct") => KernelMethod::DirectConvolution,
            Some("exp-filter") => KernelMethod::ExpFilter,
            Some(other) => {
                return Err(raw.error("kernel.method", format!("expected spectral, direct or exp-filter, got `{other}`")))
            }
        };
        let spec = KernelSpec::new(domain, method).map_err(|e| raw.error("kernel.method", e))?;

        let dt: f64 = raw.require("integrator.dt")?;
        let t_final: f64 = raw.require("integrator.t_final")?;
        let mut sim = SimConfig::new(spec, nonlinearity.clone(), dt, t_final);
        if let Some(b) = raw.get("integrator.blowup_threshold")? {
            sim = sim.with_blowup_threshold(b);
        }
        if let Some(s) = raw.get("integrator.callback_stride")? {
            sim = sim.with_stride(s);
        }
        let drift_tolerance = raw.get("integrator.drift_tolerance")?.unwrap_or(1e-8);

        let initial = Self::initial(&raw, seed)?;
        let experiment = ExperimentParams {
            window: match (raw.get("experiment.a")?, raw.get("experiment.b")?) {
                (Some(a), Some(b)) => Some(VanishingWindow {
                    t0: raw.get("experiment.t0")?.unwrap_or(0.0),
                    a,
                    b,
                }),
                (None, None) => None,
                _ => return Err(raw.error("experiment.a", "set both a and b")),
            },
            ramp: raw.get("experiment.ramp")?,
            epsilon: raw.get("experiment.epsilon")?.unwrap_or(1e-12),
            dt_list: raw.list("experiment.dt_list")?,
            n_list: raw.list("experiment.n_list")?,
        };

        let cfg = Self {
            seed,
            output_dir,
            domain,
            nonlinearity,
            sim,
            drift_tolerance,
            initial,
            experiment,
            hash: sha256_hex(text.as_bytes()),
            raw,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn initial(raw: &RawConfig, seed: u64) -> Result<InitialData, ConfigError> {
        let kind = raw.get::<String>("initial.kind")?.unwrap_or_else(|| "zero".into());
        let amplitude = || raw.require::<f64>("initial.amplitude");
        Ok(match kind.as_str() {
            "zero" => InitialData::Zero,
            "sine" => InitialData::Sine {
                amplitude: amplitude()?,
                mode: raw.get("initial.mode")?.unwrap_or(1),
            },
            "bump" => InitialData::Bump(BumpSpec {
                center: raw.get("initial.center")?.unwrap_or(0.0),
                radius: raw.require("initial.radius")?,
                amplitude: amplitude()?,
                shape: match raw.get::<String>("initial.shape")?.as_deref() {
                    None | Some("cutoff-exp") => BumpShape::CutoffExp,
                    Some("raised-cosine") => BumpShape::RaisedCosine,
                    Some(other) => return Err(raw.error("initial.shape", format!("unknown shape `{other}`"))),
                },
            }),
            "solitary" => InitialData::Solitary {
                speed: raw.require("initial.speed")?,
                x0: raw.get("initial.x0")?.unwrap_or(0.0),
            },
            "random" => InitialData::Random {
                seed,
                modes: raw.get("initial.modes")?.unwrap_or(8),
                amplitude: amplitude()?,
            },
            other => return Err(raw.error("initial.kind", format!("unknown kind `{other}`"))),
        })
    }

    /// Cross-field checks of the underlying modules, reported against the
    /// config lines.
    fn validate(&self) -> Result<(), ConfigError> {
        use crate::evolution::EvolutionError;
        let u0 = self.initial_field()?;
        match self.sim.validate(&u0) {
            Ok(()) => Ok(()),
            Err(EvolutionError::InvalidConfig { field, reason }) => {
                let key = match field {
                    "u0" => "initial.kind".to_string(),
                    f => format!("integrator.{f}"),
                };
                Err(self.raw.error(&key, reason))
            }
            Err(e) => Err(ConfigError {
                line: None,
                message: e.to_string(),
            }),
        }
    }

    pub fn initial_field(&self) -> Result<Field, ConfigError> {
        self.initial.field(self.domain).map_err(|e| self.raw.error("initial.kind", e))
    }

    /// `# config_hash=<hex> seed=<n>` without the leading `#`.
    pub fn header(&self) -> String {
        format!("config_hash={} seed={}", self.hash, self.seed)
    }

    pub(crate) fn error(&self, key: &str, message: impl fmt::Display) -> ConfigError {
        self.raw.error(key, message)
    }
}
