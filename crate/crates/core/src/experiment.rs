//! Declarative experiment files and the driver that runs them.
//!
//! ```toml
//! problem = "mis"
//! variants = ["rgnn", "mrgnn", "mrgnn_am"]
//! out_dir = "runs/mis-2000"
//! seed = 3
//! samples = 5
//!
//! [graph]
//! kind = "generate"
//! n = 2000
//! d = 3
//!
//! [anneal]
//! var_limit = 500
//!
//! [main]
//! max_epochs = 3000
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::annealer::AnnealConfig;
use crate::error::{Error, Result};
use crate::gnn::TrainConfig;
use crate::graph::Graph;
use crate::louvain;
use crate::pipeline::{self, GraphDescriptor, LevelPolicy, PipelineConfig, RunReport, Variant};
use crate::qubo::{GpSignMode, Problem};
use crate::report::{self, EmitOptions, EmittedFiles};
use crate::seed::SeedPlan;

pub use crate::annealer::VAR_LIMIT_ENV;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSource {
    /// Random d-regular graph; `seed` defaults to the one derived from the
    /// master seed.
    Generate { n: usize, d: usize, seed: Option<u64> },
    /// Edge-list file.
    Load { path: PathBuf },
}

impl Default for GraphSource {
    fn default() -> Self {
        GraphSource::Generate {
            n: 100,
            d: 3,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: Problem,
    pub graph: GraphSource,
    pub variants: Vec<Variant>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub samples: usize,
    pub penalty: Option<f64>,
    pub gp_sign_mode: GpSignMode,
    pub levels: LevelPolicy,
    pub init_jitter: f64,
    pub scatter_nodes: usize,
    pub anneal: AnnealConfig,
    pub local: TrainConfig,
    pub main: TrainConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let p = PipelineConfig::default();
        Self {
            problem: Problem::MaxCut,
            graph: GraphSource::default(),
            variants: Variant::ALL.to_vec(),
            out_dir: PathBuf::from("out"),
            seed: p.seed,
            samples: p.samples,
            penalty: p.penalty,
            gp_sign_mode: p.gp_sign_mode,
            levels: p.levels,
            init_jitter: p.init_jitter,
            scatter_nodes: EmitOptions::default().scatter_nodes,
            anneal: p.anneal,
            local: p.local,
            main: p.main,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: e.span().map_or(0, |s| text[..s.start].lines().count().max(1)),
            msg: e.message().to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    /// Apply `MRGNN_VAR_LIMIT` if it is set. Returns an error for values that
    /// are not positive integers.
    pub fn apply_env(&mut self) -> Result<()> {
        match std::env::var(VAR_LIMIT_ENV) {
            Ok(v) => {
                self.anneal.var_limit = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::invalid(format!("{VAR_LIMIT_ENV}={v:?} is not a non-negative integer")))?;
                Ok(())
            }
            Err(_) => Ok(()),
        }
    }

    /// Every problem with the config, not just the first.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = self.pipeline().validate();
        if self.variants.is_empty() {
            errs.push("variants: at least one variant is required".to_string());
        }
        for (i, v) in self.variants.iter().enumerate() {
            if self.variants[..i].contains(v) {
                errs.push(format!("variants: {v} listed twice"));
            }
        }
        match &self.graph {
            GraphSource::Generate { n, d, .. } => {
                if *n == 0 {
                    errs.push("graph.n must be positive".to_string());
                }
                if d >= n && *n > 0 {
                    errs.push(format!("graph.d must be below graph.n, got d={d} n={n}"));
                }
                if (n * d) % 2 == 1 {
                    errs.push(format!("graph: n*d must be even for a regular graph, got n={n} d={d}"));
                }
            }
            GraphSource::Load { path } => {
                if path.as_os_str().is_empty() {
                    errs.push("graph.path is empty".to_string());
                }
            }
        }
        if self.out_dir.as_os_str().is_empty() {
            errs.push("out_dir is empty".to_string());
        }
        errs
    }

    pub fn check(&self) -> Result<()> {
        let errs = self.validate();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::invalid(errs.join("; ")))
        }
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            seed: self.seed,
            penalty: self.penalty,
            gp_sign_mode: self.gp_sign_mode,
            anneal: self.anneal.clone(),
            local: self.local.clone(),
            main: self.main.clone(),
            samples: self.samples,
            levels: self.levels.clone(),
            init_jitter: self.init_jitter,
        }
    }

    /// Build or read the instance graph.
    pub fn graph(&self) -> Result<(Graph, GraphDescriptor)> {
        match &self.graph {
            GraphSource::Generate { n, d, seed } => {
                let seed = seed.unwrap_or(SeedPlan::new(self.seed).graph());
                let g = Graph::random_regular(*n, *d, seed)?;
                let desc = GraphDescriptor {
                    n: *n,
                    d: Some(*d),
                    seed: Some(seed),
                    source: None,
                };
                Ok((g, desc))
            }
            GraphSource::Load { path } => {
                let g = Graph::load_edge_list(path, false)?;
                let desc = GraphDescriptor {
                    source: Some(path.display().to_string()),
                    ..GraphDescriptor::of(&g)
                };
                Ok((g, desc))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub reports: Vec<RunReport>,
    pub files: EmittedFiles,
    /// `comparison.csv`, written when both mrGNN variants ran.
    pub comparison: Option<PathBuf>,
}

/// Run every configured variant on one instance. The Louvain hierarchy is
/// computed once and shared; each report carries its wall time.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<RunReport>> {
    cfg.check()?;
    let (g, desc) = cfg.graph()?;
    let pcfg = cfg.pipeline();
    let needs_hierarchy = cfg.variants.iter().any(|v| *v != Variant::Rgnn);
    let (h, time_louvain) = if needs_hierarchy {
        let started = Instant::now();
        let h = louvain::detect(&g, SeedPlan::new(cfg.seed).louvain())?;
        (Some(h), started.elapsed().as_secs_f64())
    } else {
        (None, 0.0)
    };
    cfg.variants
        .iter()
        .map(|&v| {
            log::info!("{}: running {v} on n={}", cfg.problem, g.n());
            let mut r = pipeline::run_variant(v, cfg.problem, &g, h.as_ref(), &pcfg)?;
            r.graph = desc.clone();
            if v != Variant::Rgnn {
                r.time_louvain = time_louvain;
            }
            Ok(r)
        })
        .collect()
}

/// [`run`] followed by writing all report files to `cfg.out_dir`.
pub fn run_and_emit(cfg: &ExperimentConfig) -> Result<Outcome> {
    let reports = run(cfg)?;
    let files = report::emit_report(
        &reports,
        &cfg.out_dir,
        &EmitOptions {
            scatter_nodes: cfg.scatter_nodes,
        },
    )?;
    let rows = report::compare(&reports);
    let comparison = if rows.is_empty() {
        None
    } else {
        let path = cfg.out_dir.join("comparison.csv");
        report::write_comparison(&rows, &path)?;
        Some(path)
    };
    Ok(Outcome {
        reports,
        files,
        comparison,
    })
}
