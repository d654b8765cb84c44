//! Run configuration: built-in defaults, then an optional TOML file, then
//! command-line overrides (last wins).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::suites::Suite;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "SIGMA2LAB_OUT";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// `toml` reports the line, column and offending key.
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Budgets {
    /// Random samples for the two exact identities.
    pub identities: usize,
    /// Samples per claim infimum search.
    pub pointwise: usize,
    /// Samples per cone-constant search.
    pub constants: usize,
    /// Random points per manufactured solution.
    pub catalog_points: usize,
    pub surrogates: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            identities: 100_000,
            pointwise: 1_000_000,
            constants: 1_000_000,
            catalog_points: 1_000,
            surrogates: 100_000,
        }
    }
}

impl Budgets {
    pub fn set_all(&mut self, n: usize) {
        *self = Budgets {
            identities: n,
            pointwise: n,
            constants: n,
            catalog_points: n,
            surrogates: n,
        };
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Nodes per axis for single solves and the grid-based suites.
    pub n: usize,
    pub tol: f64,
    pub tau: f64,
    pub homotopy_steps: usize,
    pub mms_grids: Vec<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            n: 33,
            tol: 1e-10,
            tau: 1e-8,
            homotopy_steps: 0,
            mms_grids: vec![17, 33, 65],
        }
    }
}

/// The cube `[lo, hi]³` shared by the grid-based suites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegionConfig {
    pub lo: f64,
    pub hi: f64,
}

impl Default for RegionConfig {
    fn default() -> Self {
        RegionConfig { lo: -1.0, hi: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub suites: Vec<Suite>,
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    pub out: PathBuf,
    pub formats: Vec<Format>,
    /// Record wall-clock runtimes; off gives byte-identical reports.
    pub timings: bool,
    pub budgets: Budgets,
    pub solver: SolverConfig,
    pub region: RegionConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            suites: Suite::ALL.to_vec(),
            seed: 1,
            workers: 0,
            out: std::env::var_os(OUT_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("sigma2lab-out")),
            formats: vec![Format::Json, Format::Csv],
            timings: true,
            budgets: Budgets::default(),
            solver: SolverConfig::default(),
            region: RegionConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text, path)
    }

    /// Checks every invariant except writability of `out`.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let b = &self.budgets;
        for (name, v) in [
            ("budgets.identities", b.identities),
            ("budgets.pointwise", b.pointwise),
            ("budgets.constants", b.constants),
            ("budgets.catalog_points", b.catalog_points),
            ("budgets.surrogates", b.surrogates),
        ] {
            if v == 0 {
                return Err(invalid(name, "budgets must be at least 1"));
            }
        }
        let grid_ok = |n: usize| n >= 9 && n % 2 == 1;
        if !grid_ok(self.solver.n) {
            return Err(invalid(
                "solver.n",
                format!("need an odd node count >= 9, got {}", self.solver.n),
            ));
        }
        if self.solver.mms_grids.len() < 3 {
            return Err(invalid("solver.mms_grids", "need at least three grids"));
        }
        if let Some(n) = self.solver.mms_grids.iter().find(|n| !grid_ok(**n)) {
            return Err(invalid(
                "solver.mms_grids",
                format!("need odd node counts >= 9, got {n}"),
            ));
        }
        if !(self.solver.tol > 0.0) {
            return Err(invalid("solver.tol", "must be positive"));
        }
        if !(self.solver.tau > 0.0) {
            return Err(invalid("solver.tau", "must be positive"));
        }
        let r = &self.region;
        if !(r.lo.is_finite() && r.hi.is_finite() && r.hi > r.lo) {
            return Err(invalid("region", format!("empty box [{}, {}]", r.lo, r.hi)));
        }
        Ok(())
    }

    /// Creates `out` and probes that a file can be written there.
    pub fn prepare_out(&self) -> Result<(), ConfigError> {
        let fail = |e: std::io::Error| invalid("out", format!("{}: {e}", self.out.display()));
        std::fs::create_dir_all(&self.out).map_err(fail)?;
        let probe = self.out.join(".sigma2lab-probe");
        std::fs::write(&probe, b"").map_err(fail)?;
        std::fs::remove_file(&probe).map_err(fail)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn file_overrides_defaults() {
        let c = RunConfig::from_toml("seed = 9\nsuites = [\"mms\"]\n[solver]\nn = 17\n", Path::new("x.toml")).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.suites, vec![Suite::Mms]);
        assert_eq!(c.solver.n, 17);
        assert_eq!(c.solver.tol, 1e-10);
        assert_eq!(c.budgets, Budgets::default());
    }

    #[test]
    fn parse_errors_name_line_and_field() {
        let e = RunConfig::from_toml("seed = 1\n[solver]\nnn = 3\n", Path::new("bad.toml")).unwrap_err();
        let msg = e.to_string();
        assert!(
            msg.contains("bad.toml") && msg.contains("line 3") && msg.contains("nn"),
            "{msg}"
        );
        let e = RunConfig::from_toml("seed = \"x\"\n", Path::new("bad.toml")).unwrap_err();
        assert!(e.to_string().contains("line 1"), "{e}");
    }

    #[test]
    fn validation() {
        let mut c = RunConfig::default();
        c.solver.n = 32;
        assert!(c.validate().unwrap_err().to_string().contains("solver.n"));
        let mut c = RunConfig::default();
        c.budgets.pointwise = 0;
        assert!(c.validate().unwrap_err().to_string().contains("budgets.pointwise"));
        let mut c = RunConfig::default();
        c.solver.mms_grids = vec![17, 33];
        assert!(c.validate().is_err());
    }

    #[test]
    fn unwritable_out_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("f");
        std::fs::write(&file, b"x").unwrap();
        let c = RunConfig {
            out: file.join("sub"),
            ..RunConfig::default()
        };
        assert!(c.prepare_out().is_err());
    }
}
