use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mrgnn_core::experiment::{self, ExperimentConfig, GraphSource};
use mrgnn_core::{louvain, oracle, qubo, report, AnnealConfig, Error, Graph, Problem, QuboMatrix, Variant};

/// Multi-resolution GNN solvers with annealer guidance.
#[derive(Debug, Parser)]
#[command(name = "mrgnn", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a random d-regular graph and save it as an edge list.
    Gen {
        n: usize,
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run Louvain on a graph and write one partition file and one coarse
    /// graph per level.
    Compress {
        graph: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve a serialized QUBO with the momentum annealer.
    Anneal {
        qubo: PathBuf,
        /// TOML file with annealer settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        am: AmFlags,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the best assignment here as a 0/1 string.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the variants of an experiment file and write reports.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Repeat to run several variants.
        #[arg(long)]
        variant: Vec<Variant>,
        #[arg(long)]
        problem: Option<Problem>,
        #[command(flatten)]
        am: AmFlags,
        #[arg(long)]
        max_epochs: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Tabulate Δ_rel and ΔT over the reports in a directory.
    Compare {
        reports: PathBuf,
        /// Defaults to `<reports>/comparison.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact optimum of a small instance by enumeration.
    Oracle {
        graph: PathBuf,
        #[arg(long)]
        problem: Problem,
        #[arg(long)]
        penalty: Option<f64>,
    },
}

#[derive(Debug, Args)]
struct AmFlags {
    /// Annealer capacity (also `MRGNN_VAR_LIMIT`).
    #[arg(long)]
    am_limit: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    sweeps: Option<usize>,
}

impl AmFlags {
    fn apply(&self, cfg: &mut AnnealConfig) {
        if let Some(v) = self.am_limit {
            cfg.var_limit = v;
        }
        if let Some(v) = self.restarts {
            cfg.restarts = v;
        }
        if let Some(v) = self.sweeps {
            cfg.sweeps = v;
        }
    }
}

/// Failure categories, each with its own exit code.
#[derive(Debug)]
enum Failure {
    Config(Vec<String>),
    Core(Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 3,
            Failure::Core(e) => match e {
                Error::InvalidInput(_) | Error::Parse { .. } | Error::DimensionMismatch { .. } => 3,
                Error::Capacity { .. } | Error::NoAdmissibleLevel { .. } => 4,
                Error::NonFinite { .. } => 5,
                Error::Io { .. } | Error::Serde(_) => 6,
            },
        }
    }

    fn category(&self) -> &'static str {
        match self.code() {
            3 => "input error",
            4 => "capacity error",
            5 => "numeric error",
            _ => "i/o error",
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Core(Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn bit_string(x: &[u8]) -> String {
    x.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect()
}

fn anneal_config(path: Option<&Path>) -> Result<AnnealConfig, Failure> {
    let Some(path) = path else {
        return Ok(AnnealConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    toml::from_str(&text).map_err(|e| {
        Failure::Core(Error::Parse {
            path: path.to_path_buf(),
            line: e.span().map_or(0, |s| text[..s.start].lines().count().max(1)),
            msg: e.message().to_string(),
        })
    })
}

fn env_var_limit() -> Result<Option<usize>, Failure> {
    match std::env::var(experiment::VAR_LIMIT_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| {
            Failure::Config(vec![format!("{}={v:?} is not a non-negative integer", experiment::VAR_LIMIT_ENV)])
        }),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Command::Gen { n, d, seed, out } => {
            let g = Graph::random_regular(n, d, seed)?;
            g.save_edge_list(&out)?;
            println!("wrote {} ({} nodes, {} edges)", out.display(), g.n(), g.edge_count());
        }
        Command::Compress { graph, seed, out } => {
            let g = Graph::load_edge_list(&graph, false)?;
            let h = louvain::detect(&g, seed)?;
            h.write_partitions(&out)?;
            let mut sizes = String::new();
            for (i, level) in h.levels().iter().enumerate() {
                level.graph.save_edge_list(out.join(format!("graph_{i}.txt")))?;
                writeln!(sizes, "{i} {}", level.size()).unwrap();
            }
            let path = out.join("sizes.txt");
            fs::write(&path, &sizes).map_err(|e| io_err(&path, e))?;
            print!("{sizes}");
        }
        Command::Anneal {
            qubo,
            config,
            am,
            seed,
            out,
        } => {
            let mut cfg = anneal_config(config.as_deref())?;
            if let Some(v) = env_var_limit()? {
                cfg.var_limit = v;
            }
            am.apply(&mut cfg);
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let errs = cfg.validate();
            if !errs.is_empty() {
                return Err(Failure::Config(errs));
            }
            let q = QuboMatrix::load(&qubo)?;
            let res = mrgnn_core::solve_am(&q, &cfg)?;
            println!("energy {}", res.energy_best);
            println!("time {:.6}", res.elapsed.as_secs_f64());
            let bits = bit_string(&res.x_best);
            match out {
                Some(path) => fs::write(&path, bits + "\n").map_err(|e| io_err(&path, e))?,
                None => println!("x {bits}"),
            }
        }
        Command::Solve {
            config,
            seed,
            out,
            variant,
            problem,
            am,
            max_epochs,
            samples,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            cfg.apply_env()?;
            am.apply(&mut cfg.anneal);
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = out {
                cfg.out_dir = o;
            }
            if !variant.is_empty() {
                cfg.variants = variant;
            }
            if let Some(p) = problem {
                cfg.problem = p;
            }
            if let Some(e) = max_epochs {
                cfg.main.max_epochs = e;
            }
            if let Some(s) = samples {
                cfg.samples = s;
            }
            // relative graph paths are resolved against the config file
            if let GraphSource::Load { path } = &mut cfg.graph {
                if path.is_relative() {
                    if let Some(dir) = config.parent() {
                        *path = dir.join(&*path);
                    }
                }
            }
            let errs = cfg.validate();
            if !errs.is_empty() {
                return Err(Failure::Config(errs));
            }
            let outcome = experiment::run_and_emit(&cfg)?;
            for r in &outcome.reports {
                println!(
                    "{:<9} objective {:>12} violations {:>5} time {:>9.3}s late {:.3}",
                    r.variant.to_string(),
                    r.objective,
                    r.metrics.violations,
                    r.time_total,
                    r.shift.proportions[2],
                );
            }
            println!("reports in {}", cfg.out_dir.display());
        }
        Command::Compare { reports, out } => {
            let all = report::load_reports(&reports)?;
            let rows = report::compare(&all);
            let path = out.unwrap_or_else(|| reports.join("comparison.csv"));
            report::write_comparison(&rows, &path)?;
            for c in &rows {
                let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:+.2}%"));
                println!(
                    "{} n={} seed={} delta_rel {} delta_t {}",
                    c.problem,
                    c.n,
                    c.master_seed,
                    fmt(c.delta_rel),
                    fmt(c.delta_t)
                );
            }
            println!("wrote {}", path.display());
        }
        Command::Oracle { graph, problem, penalty } => {
            let g = Graph::load_edge_list(&graph, false)?;
            let penalty = penalty.unwrap_or(problem.default_penalty());
            let q = QuboMatrix::build(problem, &g, penalty, Default::default())?;
            let res = oracle::brute_force(&q)?;
            let m = qubo::evaluate(&q, &g, &res.x_opt)?;
            println!("objective {}", res.h_opt);
            println!("optima {}", res.optima_count);
            println!("violations {}", m.violations);
            if let Some(c) = m.cut_size {
                println!("cut_size {c}");
            }
            if let Some(s) = m.set_size {
                println!("set_size {s}");
            }
            if let Some(b) = m.balance {
                println!("balance {b}");
            }
            println!("x {}", bit_string(&res.x_opt));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(errs) => {
                    eprintln!("{}: invalid configuration ({} problems)", f.category(), errs.len());
                    for e in errs {
                        eprintln!("  - {e}");
                    }
                }
                Failure::Core(e) => eprintln!("{}: {e}", f.category()),
            }
            ExitCode::from(f.code())
        }
    }
}
