//! Runner for the `sigma2lab` suites: configuration, case execution,
//! baselines and report formats.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod config;
pub mod report;
pub mod suites;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde_json::json;

use baselines::Baselines;
use config::RunConfig;
use report::{CaseRecord, EnvStamp, Report, Status};
use suites::{Ctx, Outcome, Suite, Task, Verdict};

pub use sigma2_core as core;

pub struct RunOutput {
    pub report: Report,
    /// Baselines after blessing; equal to the input when not blessing.
    pub baselines: Baselines,
}

pub fn worker_count(config: &RunConfig) -> usize {
    if config.workers > 0 {
        config.workers
    } else {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    }
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".into())
}

fn record(
    name: String,
    outcome: Result<Outcome, String>,
    runtime: Option<f64>,
    baselines: Option<&Baselines>,
    blessed: &Mutex<Option<Baselines>>,
) -> CaseRecord {
    let o = match outcome {
        Ok(o) => o,
        Err(e) => {
            return CaseRecord {
                name,
                status: Status::Fail,
                value: None,
                tolerance: None,
                baseline: None,
                runtime,
                witness: Some(json!({ "error": e })),
            }
        }
    };
    let mut status = match o.verdict {
        Verdict::Pass => Status::Pass,
        Verdict::Fail => Status::Fail,
        Verdict::Skip => Status::Skip,
    };
    let mut witness = o.witness;
    let mut baseline = None;
    if o.tracked && status != Status::Skip {
        let mut bless = blessed.lock().unwrap();
        if let (Some(b), Some(v)) = (bless.as_mut(), o.value) {
            b.bless(&name, v);
            baseline = Some(v);
        } else if let Some(b) = baselines.and_then(|b| b.get(&name)) {
            baseline = Some(b.value);
            let ok = o.value.is_some_and(|v| b.accepts(v));
            if !ok {
                status = Status::Fail;
                let note = json!({ "baseline": b.value, "baseline_rel_tol": b.rel_tol });
                witness = Some(match witness {
                    Some(serde_json::Value::Object(mut m)) => {
                        m.insert("baseline_drift".into(), note);
                        serde_json::Value::Object(m)
                    }
                    other => json!({ "baseline_drift": note, "detail": other }),
                });
            }
        }
    }
    CaseRecord {
        name,
        status,
        value: o.value,
        tolerance: o.tolerance,
        baseline,
        runtime,
        witness,
    }
}

/// Runs the configured suites. Cases execute on `workers` threads, each with
/// its own numeric pool over a share of the cores; results keep declaration
/// order.
/// Tracked cases are compared with `baselines` only when the run matches
/// their profile. `on_case` sees each record as it completes.
pub fn run(
    config: &RunConfig,
    label: &str,
    baselines: &Baselines,
    bless: bool,
    on_case: &(dyn Fn(&CaseRecord) + Sync),
) -> RunOutput {
    let workers = worker_count(config);
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let inner = (cores / workers).max(1);
    let mut seen = Vec::new();
    let mut tasks: Vec<(String, Task)> = Vec::new();
    for s in &config.suites {
        if seen.contains(s) {
            continue;
        }
        seen.push(*s);
        tasks.extend(s.tasks().into_iter().map(|t| (format!("{}/{}", s.name(), t.name), t)));
    }
    let ctx = Ctx::new(config.clone());
    let blessed = Mutex::new(bless.then(|| baselines.rebless_for(config)));
    let compare = baselines.applies_to(config).then_some(baselines);
    let slots: Vec<Mutex<Option<CaseRecord>>> = tasks.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..workers.min(tasks.len()) {
            scope.spawn(|| {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(inner)
                    .build()
                    .expect("thread pool");
                loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some((name, t)) = tasks.get(i) else { break };
                    let t0 = Instant::now();
                    let out = pool.install(|| catch_unwind(AssertUnwindSafe(|| (t.run)(&ctx))));
                    let out = match out {
                        Ok(Ok(o)) => Ok(o),
                        Ok(Err(e)) => Err(e.to_string()),
                        Err(p) => Err(format!("panicked: {}", panic_message(p))),
                    };
                    let rt = config.timings.then(|| t0.elapsed().as_secs_f64());
                    let rec = record(name.clone(), out, rt, compare, &blessed);
                    on_case(&rec);
                    *slots[i].lock().unwrap() = Some(rec);
                }
            });
        }
    });
    let cases = slots
        .into_iter()
        .map(|s| s.into_inner().unwrap().expect("every case ran"))
        .collect();
    let report = Report {
        suite: label.into(),
        cases,
        config: config.clone(),
        env: EnvStamp::current(workers, config.timings),
        artifacts: ctx.take_artifacts(),
    };
    RunOutput {
        report,
        baselines: blessed.into_inner().unwrap().unwrap_or_else(|| baselines.clone()),
    }
}

/// Suites selected by a command name; `all` defers to the configuration.
pub fn suites_for(command: &str, config: &RunConfig) -> Option<Vec<Suite>> {
    let one = match command {
        "verify-pointwise" => Suite::Pointwise,
        "identities" => Suite::Identities,
        "mms" => Suite::Mms,
        "solve" => Suite::Solver,
        "graph" => Suite::Graph,
        "estimates" => Suite::Estimates,
        "audit" => Suite::Audit,
        "all" => return Some(config.suites.clone()),
        _ => return None,
    };
    Some(vec![one])
}
