use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sigma2_cli::baselines::{default_bless_path, Baselines};
use sigma2_cli::config::{Format, RunConfig};
use sigma2_cli::report::{emit, Status};
use sigma2_cli::{run, suites_for};

#[derive(Parser, Debug)]
#[command(
    name = "sigma2lab",
    version,
    about = "Checks for the interior estimate of sigma_2(D^2 u) = f in three dimensions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Pointwise claims and cone constants
    VerifyPointwise,
    /// Algebraic identities and jet calculus on the manufactured catalog
    Identities,
    /// Manufactured-solution convergence study
    Mms,
    /// Dirichlet solver checks
    Solve,
    /// Graph mean-value and monotonicity quantities
    Graph,
    /// Doubling, test quantities and the V bound
    Estimates,
    /// Integral chain audit
    Audit,
    /// Every suite selected by the configuration
    All,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::VerifyPointwise => "verify-pointwise",
            Command::Identities => "identities",
            Command::Mms => "mms",
            Command::Solve => "solve",
            Command::Graph => "graph",
            Command::Estimates => "estimates",
            Command::Audit => "audit",
            Command::All => "all",
        }
    }
}

#[derive(clap::Args, Debug)]
struct Flags {
    /// TOML configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Sets every sampling budget
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// Nodes per axis for the grid-based suites
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Write report.json (with --csv, both; neither means both)
    #[arg(long, global = true)]
    json: bool,
    #[arg(long, global = true)]
    csv: bool,
    /// Leave runtimes out for byte-identical reports
    #[arg(long, global = true)]
    no_timings: bool,
    /// Baselines file (defaults to the shipped one)
    #[arg(long, global = true)]
    baselines: Option<PathBuf>,
    /// Record tracked values as the new baselines
    #[arg(long, global = true)]
    bless: bool,
    /// Only print the summary
    #[arg(long, short, global = true)]
    quiet: bool,
}

fn configure(f: &Flags) -> Result<RunConfig, String> {
    let mut c = match &f.config {
        Some(p) => RunConfig::load(p).map_err(|e| e.to_string())?,
        None => RunConfig::default(),
    };
    if let Some(s) = f.seed {
        c.seed = s;
    }
    if let Some(b) = f.budget {
        c.budgets.set_all(b);
    }
    if let Some(n) = f.grid {
        c.solver.n = n;
    }
    if let Some(o) = &f.out {
        c.out = o.clone();
    }
    if let Some(w) = f.workers {
        c.workers = w;
    }
    match (f.json, f.csv) {
        (true, false) => c.formats = vec![Format::Json],
        (false, true) => c.formats = vec![Format::Csv],
        (true, true) => c.formats = vec![Format::Json, Format::Csv],
        (false, false) => {}
    }
    if f.no_timings {
        c.timings = false;
    }
    c.validate().map_err(|e| e.to_string())?;
    c.prepare_out().map_err(|e| e.to_string())?;
    Ok(c)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let f = &cli.flags;
    let mut config = match configure(f) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("sigma2lab: {e}");
            return ExitCode::from(2);
        }
    };
    let label = cli.command.name();
    config.suites = suites_for(label, &config).expect("known command");
    let baselines = match &f.baselines {
        Some(p) => Baselines::load(p),
        None => Ok(Baselines::builtin()),
    };
    let baselines = match baselines {
        Ok(b) => b,
        Err(e) => {
            eprintln!("sigma2lab: {e}");
            return ExitCode::from(2);
        }
    };

    let quiet = f.quiet;
    let out = run(&config, label, &baselines, f.bless, &|c| {
        if !quiet {
            let v = c.value.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "-".into());
            eprintln!("{:<4} {} {v}", c.status.label().to_uppercase(), c.name);
        }
    });
    let r = &out.report;
    for c in r.cases.iter().filter(|c| c.status == Status::Fail) {
        eprintln!(
            "FAILED {}: {}",
            c.name,
            c.witness.as_ref().map(|w| w.to_string()).unwrap_or_default()
        );
    }
    match emit(r, &config.formats, &config.out) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("sigma2lab: {e}");
            return ExitCode::from(2);
        }
    }
    if f.bless {
        let path = f.baselines.clone().unwrap_or_else(default_bless_path);
        if let Err(e) = out.baselines.save(&path) {
            eprintln!("sigma2lab: {e}");
            return ExitCode::from(2);
        }
        println!(
            "blessed {} baselines into {}",
            out.baselines.cases.len(),
            path.display()
        );
    }
    let t = r.tally();
    println!("{label}: {} passed, {} failed, {} skipped", t.pass, t.fail, t.skip);
    if t.fail == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
