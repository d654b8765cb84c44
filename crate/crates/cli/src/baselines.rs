//! Recorded values for cases whose expected result is empirical rather than
//! fixed by theory. A tracked case fails when it drifts from its baseline by
//! more than the recorded relative tolerance.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{Budgets, RegionConfig, RunConfig, SolverConfig};

/// The baselines file shipped with the crate.
pub const DEFAULT_BASELINES: &str = include_str!("../baselines.toml");

/// Relative tolerance given to newly blessed entries.
pub const DEFAULT_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Baseline {
    pub value: f64,
    pub rel_tol: f64,
}

impl Baseline {
    pub fn accepts(&self, v: f64) -> bool {
        (v - self.value).abs() <= self.rel_tol * self.value.abs().max(f64::MIN_POSITIVE)
    }
}

/// The settings tracked values depend on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Profile {
    pub seed: u64,
    pub budgets: Budgets,
    pub solver: SolverConfig,
    pub region: RegionConfig,
}

impl Profile {
    pub fn of(c: &RunConfig) -> Self {
        Profile {
            seed: c.seed,
            budgets: c.budgets.clone(),
            solver: c.solver.clone(),
            region: c.region.clone(),
        }
    }
}

/// Baselines are compared only for runs whose profile matches the one
/// they were blessed under.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Baselines {
    pub profile: Option<Profile>,
    #[serde(default)]
    pub cases: BTreeMap<String, Baseline>,
}

#[derive(Debug, thiserror::Error)]
pub enum BaselineError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Baselines {
    pub fn parse(text: &str, path: &Path) -> Result<Self, BaselineError> {
        toml::from_str(text).map_err(|e| BaselineError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn builtin() -> Self {
        Self::parse(DEFAULT_BASELINES, Path::new("baselines.toml")).expect("shipped baselines parse")
    }

    pub fn load(path: &Path) -> Result<Self, BaselineError> {
        let text = std::fs::read_to_string(path).map_err(|source| BaselineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn get(&self, name: &str) -> Option<&Baseline> {
        self.cases.get(name)
    }

    pub fn applies_to(&self, c: &RunConfig) -> bool {
        self.profile.as_ref().is_some_and(|p| *p == Profile::of(c))
    }

    /// Starting point for blessing a run of `c`: entries from another
    /// profile are dropped.
    pub fn rebless_for(&self, c: &RunConfig) -> Self {
        let cases = if self.applies_to(c) {
            self.cases.clone()
        } else {
            BTreeMap::new()
        };
        Baselines {
            profile: Some(Profile::of(c)),
            cases,
        }
    }

    /// Records `value`, keeping an existing tolerance.
    pub fn bless(&mut self, name: &str, value: f64) {
        let rel_tol = self.cases.get(name).map_or(DEFAULT_REL_TOL, |b| b.rel_tol);
        self.cases.insert(name.into(), Baseline { value, rel_tol });
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("baselines serialise")
    }

    pub fn save(&self, path: &Path) -> Result<(), BaselineError> {
        std::fs::write(path, self.to_toml()).map_err(|source| BaselineError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Where `--bless` writes when no path is given: the crate's own file.
pub fn default_bless_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("baselines.toml")
}
