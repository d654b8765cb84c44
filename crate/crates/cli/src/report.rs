//! Report records and their JSON/CSV encodings.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{Format, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skip => "skip",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    /// `suite/case`.
    pub name: String,
    pub status: Status,
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    pub baseline: Option<f64>,
    /// Seconds; null when timings are off.
    pub runtime: Option<f64>,
    pub witness: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvStamp {
    pub version: String,
    pub os: String,
    pub arch: String,
    pub workers: usize,
    pub unix_time: Option<u64>,
}

impl EnvStamp {
    pub fn current(workers: usize, timings: bool) -> Self {
        EnvStamp {
            version: env!("CARGO_PKG_VERSION").into(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            workers,
            unix_time: timings
                .then(|| {
                    std::time::SystemTime::now()
                        .duration_since(std::time::UNIX_EPOCH)
                        .ok()
                        .map(|d| d.as_secs())
                })
                .flatten(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite: String,
    pub cases: Vec<CaseRecord>,
    pub config: RunConfig,
    pub env: EnvStamp,
    /// Paths of side files relative to the output directory.
    pub artifacts: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub pass: usize,
    pub fail: usize,
    pub skip: usize,
}

impl Report {
    pub fn tally(&self) -> Tally {
        let mut t = Tally::default();
        for c in &self.cases {
            match c.status {
                Status::Pass => t.pass += 1,
                Status::Fail => t.fail += 1,
                Status::Skip => t.skip += 1,
            }
        }
        t
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["name", "status", "value", "tolerance", "baseline", "runtime"])
            .expect("in-memory write");
        let num = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        for c in &self.cases {
            w.write_record([
                c.name.clone(),
                c.status.label().into(),
                num(c.value),
                num(c.tolerance),
                num(c.baseline),
                num(c.runtime),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("ascii csv")
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{path}: {source}")]
pub struct EmitError {
    pub path: PathBuf,
    #[source]
    pub source: std::io::Error,
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), EmitError> {
    let wrap = |source| EmitError {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(wrap)?;
    }
    std::fs::write(path, bytes).map_err(wrap)
}

/// Writes `report.json` and/or `report.csv` into `dir`.
pub fn emit(report: &Report, formats: &[Format], dir: &Path) -> Result<Vec<PathBuf>, EmitError> {
    let mut written = Vec::new();
    for f in formats {
        let (name, body) = match f {
            Format::Json => ("report.json", report.to_json()),
            Format::Csv => ("report.csv", report.to_csv()),
        };
        let p = dir.join(name);
        write_file(&p, body.as_bytes())?;
        written.push(p);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        Report {
            suite: "x".into(),
            cases: vec![
                CaseRecord {
                    name: "a/one".into(),
                    status: Status::Pass,
                    value: Some(1.5),
                    tolerance: Some(1e-10),
                    baseline: None,
                    runtime: None,
                    witness: None,
                },
                CaseRecord {
                    name: "a/two, quoted".into(),
                    status: Status::Fail,
                    value: None,
                    tolerance: None,
                    baseline: Some(2.0),
                    runtime: Some(0.25),
                    witness: Some(serde_json::json!({"error": "boom"})),
                },
            ],
            config: RunConfig::default(),
            env: EnvStamp::current(1, false),
            artifacts: vec![],
        }
    }

    #[test]
    fn csv_has_one_row_per_case() {
        let r = sample();
        let csv = r.to_csv();
        let mut rd = csv::Reader::from_reader(csv.as_bytes());
        assert_eq!(rd.records().count(), r.cases.len());
        assert!(csv.contains("\"a/two, quoted\""));
    }

    #[test]
    fn json_round_trips() {
        let r = sample();
        let back: Report = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert_eq!(
            r.tally(),
            Tally {
                pass: 1,
                fail: 1,
                skip: 0
            }
        );
    }

    #[test]
    fn emit_reports_paths() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, b"").unwrap();
        let e = emit(&sample(), &[Format::Json], &blocker.join("sub")).unwrap_err();
        assert!(e.to_string().contains("file"));
        let ok = emit(&sample(), &[Format::Json, Format::Csv], dir.path()).unwrap();
        assert_eq!(ok.len(), 2);
    }
}
