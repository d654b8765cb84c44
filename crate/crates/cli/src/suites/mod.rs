//! Case definitions. Each suite lists independent tasks; a task returns an
//! [`Outcome`] or an error, which is recorded as a failure.

mod audit;
mod estimates;
mod graph;
mod identities;
mod mms;
mod pointwise;
mod solver;

use std::any::Any;
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use sigma2_core::calculus::{make_manufactured, ManufacturedSolution, ManufacturedSpec};
use sigma2_core::grid::GridField;
use sigma2_core::solver::{solve_dirichlet, SolveParams, SolveStats};

use crate::config::RunConfig;
use crate::report::write_file;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Pointwise,
    Identities,
    Mms,
    Solver,
    Graph,
    Estimates,
    Audit,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Pointwise,
        Suite::Identities,
        Suite::Mms,
        Suite::Solver,
        Suite::Graph,
        Suite::Estimates,
        Suite::Audit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Pointwise => "pointwise",
            Suite::Identities => "identities",
            Suite::Mms => "mms",
            Suite::Solver => "solver",
            Suite::Graph => "graph",
            Suite::Estimates => "estimates",
            Suite::Audit => "audit",
        }
    }

    pub fn tasks(self) -> Vec<Task> {
        match self {
            Suite::Pointwise => pointwise::tasks(),
            Suite::Identities => identities::tasks(),
            Suite::Mms => mms::tasks(),
            Suite::Solver => solver::tasks(),
            Suite::Graph => graph::tasks(),
            Suite::Estimates => estimates::tasks(),
            Suite::Audit => audit::tasks(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    pub verdict: Verdict,
    pub witness: Option<Value>,
    /// Also compare `value` against the baselines file.
    pub tracked: bool,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl Outcome {
    pub fn check(ok: bool, value: f64, tolerance: Option<f64>) -> Self {
        Outcome {
            value: finite(value),
            tolerance,
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
            witness: None,
            tracked: false,
        }
    }

    pub fn at_most(value: f64, tol: f64) -> Self {
        Self::check(value <= tol, value, Some(tol))
    }

    pub fn at_least(value: f64, bound: f64) -> Self {
        Self::check(value >= bound, value, Some(bound))
    }

    /// `|value − target| ≤ tol`; the reported value is the deviation.
    pub fn near(value: f64, target: f64, tol: f64) -> Self {
        let d = (value - target).abs();
        Self::check(d <= tol, d, Some(tol)).with(serde_json::json!({ "value": value, "target": target }))
    }

    pub fn flag(ok: bool) -> Self {
        Self::check(ok, if ok { 1.0 } else { 0.0 }, None)
    }

    pub fn skip(reason: impl Into<String>) -> Self {
        Outcome {
            value: None,
            tolerance: None,
            verdict: Verdict::Skip,
            witness: Some(serde_json::json!({ "reason": reason.into() })),
            tracked: false,
        }
    }

    pub fn with(mut self, w: Value) -> Self {
        self.witness = Some(match (self.witness.take(), w) {
            (Some(Value::Object(mut a)), Value::Object(b)) => {
                a.extend(b);
                Value::Object(a)
            }
            (_, w) => w,
        });
        self
    }

    pub fn tracked(mut self) -> Self {
        self.tracked = true;
        self
    }
}

pub type CaseResult = Result<Outcome, Box<dyn std::error::Error + Send + Sync>>;

type TaskFn = Box<dyn Fn(&Ctx) -> CaseResult + Send + Sync>;

pub struct Task {
    pub name: String,
    pub run: TaskFn,
}

pub fn task(name: impl Into<String>, f: impl Fn(&Ctx) -> CaseResult + Send + Sync + 'static) -> Task {
    Task {
        name: name.into(),
        run: Box::new(f),
    }
}

/// One manufactured Dirichlet solve shared between suites.
pub struct Solved {
    pub m: ManufacturedSolution,
    pub field: GridField,
    pub exact: GridField,
    pub stats: SolveStats,
    pub runtime: f64,
}

type Memo = Arc<OnceLock<Result<Arc<dyn Any + Send + Sync>, String>>>;

/// Shared state for one run.
pub struct Ctx {
    pub config: RunConfig,
    artifacts: Mutex<Vec<String>>,
    memos: Mutex<HashMap<String, Memo>>,
}

impl Ctx {
    pub fn new(config: RunConfig) -> Self {
        Ctx {
            config,
            artifacts: Mutex::new(Vec::new()),
            memos: Mutex::new(HashMap::new()),
        }
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    pub fn params(&self) -> SolveParams {
        SolveParams {
            tol: self.config.solver.tol,
            tau: self.config.solver.tau,
            homotopy_steps: self.config.solver.homotopy_steps,
            ..SolveParams::default()
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.config.region.lo, self.config.region.hi)
    }

    /// Writes `bytes` to `out/artifacts/<rel>` and records the path.
    pub fn artifact(&self, rel: &str, bytes: &[u8]) -> Result<PathBuf, crate::report::EmitError> {
        let rel = Path::new("artifacts").join(rel);
        let path = self.config.out.join(&rel);
        write_file(&path, bytes)?;
        self.artifacts
            .lock()
            .unwrap()
            .push(rel.to_string_lossy().replace('\\', "/"));
        Ok(path)
    }

    pub fn take_artifacts(&self) -> Vec<String> {
        let mut a = std::mem::take(&mut *self.artifacts.lock().unwrap());
        a.sort();
        a
    }

    /// Computes `f` once per run under `key`; concurrent callers wait.
    pub fn memo<T, E>(&self, key: &str, f: impl FnOnce() -> Result<T, E>) -> Result<Arc<T>, String>
    where
        T: Send + Sync + 'static,
        E: std::fmt::Display,
    {
        let cell = self.memos.lock().unwrap().entry(key.to_string()).or_default().clone();
        let v = cell
            .get_or_init(|| {
                f().map(|v| Arc::new(v) as Arc<dyn Any + Send + Sync>)
                    .map_err(|e| e.to_string())
            })
            .clone()?;
        v.downcast::<T>().map_err(|_| format!("memo {key} holds another type"))
    }

    /// Solves the manufactured problem for `spec` on the configured box with
    /// `n` nodes per axis, once per run.
    pub fn solve(&self, spec: ManufacturedSpec, n: usize) -> Result<Arc<Solved>, String> {
        self.memo(
            &format!("solve:{}@{n}", spec.id()),
            || -> Result<Solved, sigma2_core::Error> {
                let (lo, hi) = self.bounds();
                let t = Instant::now();
                let m = make_manufactured(spec, lo, hi)?;
                let g = |x: &sigma2_core::Vec3| m.u(x);
                let (field, stats) = solve_dirichlet(&m, &g, lo, hi, n, &self.params())?;
                let exact = GridField::from_fn(lo, hi, n, g)?;
                Ok(Solved {
                    m,
                    field,
                    exact,
                    stats,
                    runtime: t.elapsed().as_secs_f64(),
                })
            },
        )
    }
}

pub fn cubic_pert() -> ManufacturedSpec {
    ManufacturedSpec::CubicPert { a: 1.0, eps: 0.1 }
}

pub fn trig_pert() -> ManufacturedSpec {
    ManufacturedSpec::TrigPert {
        a: 1.0,
        eps: 0.05,
        k: 1.0,
    }
}

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, b| a.max(b.abs()))
}

/// `½a|x|²` sampled on a grid.
pub(crate) fn quad_field(a: f64, lo: f64, hi: f64, n: usize) -> sigma2_core::Result<GridField> {
    GridField::from_fn(lo, hi, n, |x| 0.5 * a * sigma2_core::linalg::dot(x, x))
}

/// File-name-safe form of a solution id.
pub(crate) fn stem(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}
