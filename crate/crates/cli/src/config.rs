//! Experiment configuration files.
//!
//! A config is a TOML document with top-level keys and a few sections:
//!
//! ```toml
//! group = "d3"                     # z<n> or d<n>
//! lattice = "two-link-plaquette"   # or: links = [[0, 1], [1, 0]]
//! steps = 2000
//! trajectories = 200
//! seed = 1                         # required
//! mode = "haar"                    # none | haar | word | zeno | fixed
//!
//! [drift]
//! kind = "random"                  # random | z2-rotation
//! amplitude = 0.01
//! seed = 0
//! scope = "step"                   # experiment | trajectory | step
//! ```
//!
//! Overrides use dotted keys (`drift.amplitude=0.005`); the value is parsed as
//! a TOML value and falls back to a bare string.

use std::path::Path;
use std::sync::Arc;

use gauge_drift::engine::{PhysicalEvolution, StepPhase, DEFAULT_ORDER};
use gauge_drift::lattice::{z2_two_link_hamiltonian, DEFAULT_DIM_CAP};
use gauge_drift::{
    DriftScope, DriftSpec, ExperimentConfig, FiniteGroup, GaugeTransform, GroupElement,
    LatticeError, LatticeModel, Mode, WordSampler,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::{Table, Value};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("bad override `{0}`: expected key=value")]
    OverrideSyntax(String),
    #[error("override `{key}`: `{segment}` is not a table")]
    OverridePath { key: String, segment: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("{0}")]
    DimensionCap(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeName {
    None,
    Haar,
    Word,
    Zeno,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftKind {
    Random,
    Z2Rotation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScopeName {
    Experiment,
    Trajectory,
    Step,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseName {
    Hamiltonian,
    Drift,
    Gauge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftSection {
    pub kind: DriftKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_scope")]
    pub scope: ScopeName,
}

fn default_scope() -> ScopeName {
    ScopeName::Experiment
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WordSection {
    /// Element indices.
    pub generators: Vec<usize>,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSection {
    /// Only `z2-two-link` (X⊗I + I⊗X + Z⊗Z) is built in.
    pub kind: String,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub group: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub links: Option<Vec<[usize; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sites: Option<usize>,
    #[serde(default = "default_dim_cap")]
    pub dim_cap: usize,
    pub steps: usize,
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    pub seed: u64,
    pub mode: ModeName,
    #[serde(default)]
    pub initial_state: usize,
    #[serde(default = "default_order")]
    pub order: Vec<PhaseName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forced_transform: Option<Vec<usize>>,
    pub drift: DriftSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word: Option<WordSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<HamiltonianSection>,
}

fn default_dim_cap() -> usize {
    DEFAULT_DIM_CAP
}

fn default_trajectories() -> usize {
    1
}

fn default_order() -> Vec<PhaseName> {
    vec![PhaseName::Hamiltonian, PhaseName::Drift, PhaseName::Gauge]
}

/// Reads a config file, or the `[config]` table of a run manifest.
pub fn load_table(path: &Path) -> Result<Table, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.display().to_string(),
        source,
    })?;
    let mut table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
    if table.contains_key("tool") {
        if let Some(Value::Table(config)) = table.remove("config") {
            return Ok(config);
        }
    }
    Ok(table)
}

/// Applies `key=value` to the table, creating intermediate tables.
pub fn apply_override(table: &mut Table, spec: &str) -> Result<(), ConfigError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| ConfigError::OverrideSyntax(spec.to_string()))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(ConfigError::OverrideSyntax(spec.to_string()));
    }
    let value = parse_value(raw.trim());
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().expect("split yields one part");
    let mut cur = table;
    for seg in parts {
        let entry = cur
            .entry(seg.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        cur = match entry {
            Value::Table(t) => t,
            _ => {
                return Err(ConfigError::OverridePath {
                    key: key.to_string(),
                    segment: seg.to_string(),
                })
            }
        };
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

impl RunConfig {
    pub fn from_table(table: Table, origin: &str) -> Result<Self, ConfigError> {
        Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse {
                path: origin.to_string(),
                message: e.to_string().trim_end().to_string(),
            })
    }

    fn model(&self) -> Result<LatticeModel, ConfigError> {
        let group: FiniteGroup = self
            .group
            .parse()
            .map_err(|e| ConfigError::Invalid(format!("group: {e}")))?;
        let group = Arc::new(group);
        let edges: Vec<(usize, usize)> = match (&self.lattice, &self.links) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::Invalid(
                    "give either `lattice` or `links`, not both".into(),
                ))
            }
            (None, None) => vec![(0, 1), (1, 0)],
            (Some(name), None) if name == "two-link-plaquette" => vec![(0, 1), (1, 0)],
            (Some(name), None) => {
                return Err(ConfigError::Invalid(format!(
                    "unknown lattice `{name}` (known: two-link-plaquette)"
                )))
            }
            (None, Some(links)) => links.iter().map(|l| (l[0], l[1])).collect(),
        };
        let sites = self
            .sites
            .unwrap_or_else(|| edges.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0));
        LatticeModel::with_dim_cap(group, sites, edges, self.dim_cap).map_err(|e| match e {
            LatticeError::DimensionCap { .. } => ConfigError::DimensionCap(e.to_string()),
            e => ConfigError::Invalid(format!("lattice: {e}")),
        })
    }

    /// Builds the engine configuration. Exceeding the dimension cap is
    /// reported as its own variant.
    pub fn experiment(&self) -> Result<ExperimentConfig, ConfigError> {
        let model = Arc::new(self.model()?);
        let group = model.group();
        let drift = match self.drift.kind {
            DriftKind::Random => DriftSpec::RandomHermitian {
                amplitude: self.drift.amplitude.ok_or_else(|| {
                    ConfigError::Invalid("drift.amplitude is required for kind = \"random\"".into())
                })?,
                seed: self.drift.seed,
            },
            DriftKind::Z2Rotation => DriftSpec::Z2Rotation {
                epsilon: self.drift.epsilon.ok_or_else(|| {
                    ConfigError::Invalid(
                        "drift.epsilon is required for kind = \"z2-rotation\"".into(),
                    )
                })?,
            },
        };
        drift
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("drift: {e}")))?;
        let element = |i: usize| {
            group
                .element(i)
                .map_err(|e| ConfigError::Invalid(e.to_string()))
        };
        let mode = match self.mode {
            ModeName::None => Mode::None,
            ModeName::Haar => Mode::Haar,
            ModeName::Zeno => Mode::Zeno,
            ModeName::Word => {
                let word = self.word.as_ref().ok_or_else(|| {
                    ConfigError::Invalid("mode = \"word\" needs a [word] section".into())
                })?;
                let gens = word
                    .generators
                    .iter()
                    .map(|&g| element(g))
                    .collect::<Result<Vec<GroupElement>, _>>()?;
                let sampler = WordSampler::new(group, gens, word.length)
                    .map_err(|e| ConfigError::Invalid(format!("word: {e}")))?;
                Mode::Word(sampler)
            }
            ModeName::Fixed => {
                let elems = self.forced_transform.as_ref().ok_or_else(|| {
                    ConfigError::Invalid("mode = \"fixed\" needs forced_transform".into())
                })?;
                let elems = elems
                    .iter()
                    .map(|&g| element(g))
                    .collect::<Result<Vec<GroupElement>, _>>()?;
                let t = GaugeTransform::new(&model, elems)
                    .map_err(|e| ConfigError::Invalid(format!("forced_transform: {e}")))?;
                Mode::Fixed(t)
            }
        };
        let evolution = match &self.hamiltonian {
            None => None,
            Some(h) if h.kind == "z2-two-link" => Some(PhysicalEvolution {
                hamiltonian: z2_two_link_hamiltonian(),
                dt: h.dt,
            }),
            Some(h) => {
                return Err(ConfigError::Invalid(format!(
                    "unknown hamiltonian `{}` (known: z2-two-link)",
                    h.kind
                )))
            }
        };
        if self.order.len() != 3 {
            return Err(ConfigError::Invalid(
                "order must list hamiltonian, drift and gauge".into(),
            ));
        }
        let mut order = DEFAULT_ORDER;
        for (slot, p) in order.iter_mut().zip(&self.order) {
            *slot = match p {
                PhaseName::Hamiltonian => StepPhase::Hamiltonian,
                PhaseName::Drift => StepPhase::Drift,
                PhaseName::Gauge => StepPhase::Gauge,
            };
        }
        Ok(ExperimentConfig {
            model,
            drift,
            drift_scope: match self.drift.scope {
                ScopeName::Experiment => DriftScope::Experiment,
                ScopeName::Trajectory => DriftScope::Trajectory,
                ScopeName::Step => DriftScope::Step,
            },
            steps: self.steps,
            trajectories: self.trajectories,
            mode,
            seed: self.seed,
            evolution,
            order,
            initial_state: self.initial_state,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
group = "d3"
steps = 10
seed = 1
mode = "haar"

[drift]
kind = "random"
amplitude = 0.01
"#;

    fn base() -> Table {
        BASE.parse().unwrap()
    }

    #[test]
    fn parses_with_defaults() {
        let cfg = RunConfig::from_table(base(), "base").unwrap();
        assert_eq!(cfg.trajectories, 1);
        assert_eq!(cfg.drift.scope, ScopeName::Experiment);
        assert_eq!(cfg.order, default_order());
        let exp = cfg.experiment().unwrap();
        assert_eq!(exp.model.dim(), 36);
    }

    #[test]
    fn overrides_take_precedence() {
        let mut t = base();
        apply_override(&mut t, "mode=none").unwrap();
        apply_override(&mut t, "drift.amplitude=0.005").unwrap();
        apply_override(&mut t, "drift.scope = trajectory").unwrap();
        let cfg = RunConfig::from_table(t, "x").unwrap();
        assert_eq!(cfg.mode, ModeName::None);
        assert_eq!(cfg.drift.amplitude, Some(0.005));
        assert_eq!(cfg.drift.scope, ScopeName::Trajectory);
    }

    #[test]
    fn override_errors() {
        let mut t = base();
        assert!(matches!(
            apply_override(&mut t, "mode"),
            Err(ConfigError::OverrideSyntax(_))
        ));
        assert!(matches!(
            apply_override(&mut t, "mode.x=1"),
            Err(ConfigError::OverridePath { .. })
        ));
    }

    #[test]
    fn missing_seed_is_an_error() {
        let mut t = base();
        t.remove("seed");
        let err = RunConfig::from_table(t, "cfg").unwrap_err().to_string();
        assert!(err.contains("seed"), "{err}");
    }

    #[test]
    fn unknown_key_is_an_error() {
        let mut t = base();
        apply_override(&mut t, "stpes=3").unwrap();
        let err = RunConfig::from_table(t, "cfg").unwrap_err().to_string();
        assert!(err.contains("stpes"), "{err}");
    }

    #[test]
    fn roundtrips_through_toml() {
        let mut t = base();
        apply_override(&mut t, "word.generators=[1,3]").unwrap();
        apply_override(&mut t, "word.length=20").unwrap();
        let cfg = RunConfig::from_table(t, "x").unwrap();
        let back =
            RunConfig::from_table(toml::to_string(&cfg).unwrap().parse().unwrap(), "y").unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn semantic_errors() {
        for (key, want) in [
            ("mode=\"word\"", "[word]"),
            ("mode=\"fixed\"", "forced_transform"),
            ("group=\"q8\"", "group"),
            ("lattice=\"torus\"", "torus"),
            ("drift.kind=\"z2-rotation\"", "epsilon"),
        ] {
            let mut t = base();
            apply_override(&mut t, key).unwrap();
            let err = RunConfig::from_table(t, "x")
                .unwrap()
                .experiment()
                .unwrap_err()
                .to_string();
            assert!(err.contains(want), "{key}: {err}");
        }
    }
}
