//! End-to-end solver variants.
//!
//! * rGNN: one GNN on the original graph from random features.
//! * mrGNN: Louvain hierarchy, an unsupervised GNN per admissible level, the
//!   level embeddings mapped back and averaged into the main GNN's input.
//! * mrGNN+AM: as mrGNN, but every local GNN is also pulled towards the
//!   annealer's solution of its level.
//!
//! Every stochastic step draws its seed from one [`SeedPlan`], so the three
//! variants share seeds wherever they share work.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annealer::{self, AnnealConfig};
use crate::error::{Error, Result};
use crate::gnn::{self, FeatureMatrix, TrainConfig, TrainTrace, Trained};
use crate::graph::Graph;
use crate::louvain::{self, Hierarchy};
use crate::mapping;
use crate::qubo::{self, Bits, GpSignMode, Problem, QuboMatrix, SolutionMetrics};
use crate::report::{self, ShiftAnalysis};
use crate::seed::SeedPlan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Rgnn,
    Mrgnn,
    MrgnnAm,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Rgnn, Variant::Mrgnn, Variant::MrgnnAm];

    /// Identifier used in configs, file names and CSV cells.
    pub fn key(self) -> &'static str {
        match self {
            Variant::Rgnn => "rgnn",
            Variant::Mrgnn => "mrgnn",
            Variant::MrgnnAm => "mrgnn_am",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Rgnn => "rGNN",
            Variant::Mrgnn => "mrGNN",
            Variant::MrgnnAm => "mrGNN+AM",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rgnn" => Ok(Variant::Rgnn),
            "mrgnn" => Ok(Variant::Mrgnn),
            "mrgnn_am" | "mrgnn+am" | "mrgnn-am" => Ok(Variant::MrgnnAm),
            _ => Err(Error::invalid(format!(
                "unknown variant {s:?} (expected rgnn, mrgnn or mrgnn_am)"
            ))),
        }
    }
}

/// Which hierarchy levels feed the local solvers.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelPolicy {
    /// Every level that fits under the annealer limit and is strictly smaller
    /// than the original graph.
    #[default]
    Admissible,
    /// Exactly these level indices.
    Only(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Master seed; the `seed` fields of the nested configs are ignored.
    pub seed: u64,
    /// QUBO penalty; `None` uses the problem default.
    pub penalty: Option<f64>,
    pub gp_sign_mode: GpSignMode,
    pub anneal: AnnealConfig,
    /// Per-level solver. Its `mse_weight` is the guidance weight of mrGNN+AM.
    pub local: TrainConfig,
    pub main: TrainConfig,
    /// Main-solver runs per variant; the best one is reported.
    pub samples: usize,
    pub levels: LevelPolicy,
    /// Uniform noise added to the guided input, relative to its RMS. Members
    /// of one community receive identical rows otherwise, and the main GNN
    /// cannot tell them apart.
    pub init_jitter: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            penalty: None,
            gp_sign_mode: GpSignMode::Corrected,
            anneal: AnnealConfig::default(),
            local: TrainConfig::local(),
            main: TrainConfig::main(),
            samples: 5,
            levels: LevelPolicy::Admissible,
            init_jitter: 1.0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = self.anneal.validate();
        errs.extend(self.local.validate("local"));
        errs.extend(self.main.validate("main"));
        if self.samples == 0 {
            errs.push("samples must be at least 1".to_string());
        }
        if let Some(b) = self.penalty {
            if !(b.is_finite() && b >= 0.0) {
                errs.push(format!("penalty must be non-negative, got {b}"));
            }
        }
        if !(self.init_jitter.is_finite() && self.init_jitter >= 0.0) {
            errs.push(format!("init_jitter must be non-negative, got {}", self.init_jitter));
        }
        if self.levels == LevelPolicy::Only(Vec::new()) {
            errs.push("levels: explicit level list is empty".to_string());
        }
        errs
    }

    pub fn penalty_for(&self, problem: Problem) -> f64 {
        self.penalty.unwrap_or(problem.default_penalty())
    }

    fn check(&self) -> Result<()> {
        let errs = self.validate();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::invalid(errs.join("; ")))
        }
    }
}

/// Where a graph came from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GraphDescriptor {
    pub n: usize,
    /// Degree of a generated regular graph.
    pub d: Option<usize>,
    pub seed: Option<u64>,
    /// Path of a loaded graph.
    pub source: Option<String>,
}

impl GraphDescriptor {
    pub fn of(g: &Graph) -> Self {
        Self {
            n: g.n(),
            ..Self::default()
        }
    }
}

/// Outcome of one variant on one instance. Times are in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub variant: Variant,
    pub problem: Problem,
    pub graph: GraphDescriptor,
    pub master_seed: u64,
    pub objective: f64,
    pub metrics: SolutionMetrics,
    pub x: Bits,
    /// Last and smallest training loss of the selected main run.
    pub loss_final: f64,
    pub loss_min: f64,
    pub time_local_am: f64,
    pub time_local_gnn: f64,
    pub time_main: f64,
    pub time_total: f64,
    /// Not part of `time_total`; the hierarchy is treated as precomputed.
    pub time_louvain: f64,
    pub shift: ShiftAnalysis,
    pub levels_used: Vec<usize>,
    pub level_sizes: Vec<usize>,
    pub sample_selected: usize,
    pub samples: usize,
    pub epochs_run: usize,
    /// Loss and snapshot history of the selected main run.
    pub trace: TrainTrace,
    /// Soft assignment of the selected main run at its first epoch.
    pub p_initial: Vec<f64>,
}

impl RunReport {
    pub fn shift_proportions(&self) -> [f64; 3] {
        self.shift.proportions
    }
}

/// Indices of the hierarchy levels that `policy` selects.
pub fn select_levels(h: &Hierarchy, policy: &LevelPolicy, var_limit: usize) -> Result<Vec<usize>> {
    match policy {
        LevelPolicy::Admissible => Ok(h
            .admissible_levels(var_limit)
            .into_iter()
            .filter(|&i| h.level(i).size() < h.original_n())
            .collect()),
        LevelPolicy::Only(list) => {
            if list.is_empty() {
                return Err(Error::invalid("explicit level list is empty"));
            }
            let mut out = list.clone();
            out.sort_unstable();
            out.dedup();
            if let Some(&bad) = out.iter().find(|&&i| i >= h.len()) {
                return Err(Error::invalid(format!(
                    "level {bad} does not exist (hierarchy has {} levels)",
                    h.len()
                )));
            }
            Ok(out)
        }
    }
}

fn seconds(start: Instant) -> f64 {
    start.elapsed().as_secs_f64()
}

struct Guidance {
    r: FeatureMatrix,
    levels: Vec<usize>,
    time_am: f64,
    time_gnn: f64,
}

/// Local solves on `levels` and the aggregated main-solver input.
fn guidance(
    problem: Problem,
    g: &Graph,
    h: &Hierarchy,
    levels: &[usize],
    with_am: bool,
    cfg: &PipelineConfig,
) -> Result<Guidance> {
    let plan = SeedPlan::new(cfg.seed);
    let penalty = cfg.penalty_for(problem);
    struct Local {
        emb: FeatureMatrix,
        am: f64,
        gnn: f64,
    }
    let locals: Vec<Local> = levels
        .par_iter()
        .map(|&i| -> Result<Local> {
            let gi = &h.level(i).graph;
            let qi = QuboMatrix::build(problem, gi, penalty, cfg.gp_sign_mode)?;
            let local_cfg = TrainConfig {
                seed: plan.local_gnn(i),
                ..cfg.local.clone()
            };
            if with_am {
                let started = Instant::now();
                let am_cfg = AnnealConfig {
                    seed: plan.anneal(i),
                    ..cfg.anneal.clone()
                };
                let am = annealer::solve_am(&qi, &am_cfg)?;
                let am_time = seconds(started);
                let started = Instant::now();
                let t = gnn::train_local(gi, &qi, &am.x_best, &local_cfg)?;
                Ok(Local {
                    emb: t.embeddings,
                    am: am_time,
                    gnn: seconds(started),
                })
            } else {
                let started = Instant::now();
                let unguided = TrainConfig {
                    mse_weight: 0.0,
                    ..local_cfg
                };
                let t = gnn::train_local(gi, &qi, &vec![0; gi.n()], &unguided)?;
                Ok(Local {
                    emb: t.embeddings,
                    am: 0.0,
                    gnn: seconds(started),
                })
            }
        })
        .collect::<Result<_>>()?;

    let started = Instant::now();
    let deg = g.degrees();
    let parts = levels
        .iter()
        .zip(&locals)
        .map(|(&i, l)| mapping::distribute(h, i, &l.emb, &deg))
        .collect::<Result<Vec<_>>>()?;
    let r = rescaled(&mapping::aggregate(&parts)?);
    let map_time = seconds(started);
    Ok(Guidance {
        r,
        levels: levels.to_vec(),
        time_am: locals.iter().map(|l| l.am).sum(),
        time_gnn: locals.iter().map(|l| l.gnn).sum::<f64>() + map_time,
    })
}

/// `r` scaled so that its mean squared row norm is 1/3, the expectation for
/// random features uniform in `±1/√d₀`. An all-zero `r` is returned as is.
pub fn rescaled(r: &FeatureMatrix) -> FeatureMatrix {
    let mut out = r.clone();
    if r.rows() == 0 {
        return out;
    }
    let mean_sq = r.data().iter().map(|v| v * v).sum::<f64>() / r.rows() as f64;
    if mean_sq > 0.0 {
        let k = (1.0 / (3.0 * mean_sq)).sqrt();
        out.data_mut().iter_mut().for_each(|v| *v *= k);
    }
    out
}

/// `r + U(−s, s)` with `s = jitter · rms(r)`.
pub fn jittered(r: &FeatureMatrix, jitter: f64, seed: u64) -> FeatureMatrix {
    let mut out = r.clone();
    if jitter == 0.0 || r.data().is_empty() {
        return out;
    }
    let rms = (r.data().iter().map(|v| v * v).sum::<f64>() / r.data().len() as f64).sqrt();
    let scale = jitter * if rms > 0.0 { rms } else { 1.0 / (r.cols() as f64).sqrt() };
    let mut rng = crate::seed::rng(seed);
    for v in out.data_mut() {
        *v += scale * rng.gen_range(-1.0..=1.0);
    }
    out
}

/// Index of the best run: least objective among violation-free runs, else
/// fewest violations (then least objective). Earliest index wins ties.
pub fn select_best(metrics: &[SolutionMetrics]) -> Option<usize> {
    let key = |m: &SolutionMetrics| (m.violations, m.objective);
    (0..metrics.len()).min_by(|&a, &b| {
        let (va, oa) = key(&metrics[a]);
        let (vb, ob) = key(&metrics[b]);
        (va > 0)
            .cmp(&(vb > 0))
            .then(va.cmp(&vb))
            .then(oa.total_cmp(&ob))
            .then(a.cmp(&b))
    })
}

/// Run `variant` on `g`, reusing `h` if given (otherwise Louvain runs with
/// the plan's seed).
pub fn run_variant(
    variant: Variant,
    problem: Problem,
    g: &Graph,
    h: Option<&Hierarchy>,
    cfg: &PipelineConfig,
) -> Result<RunReport> {
    cfg.check()?;
    let plan = SeedPlan::new(cfg.seed);
    let q = QuboMatrix::build(problem, g, cfg.penalty_for(problem), cfg.gp_sign_mode)?;

    let mut time_louvain = 0.0;
    let owned;
    let mut level_sizes = Vec::new();
    let guide = if variant == Variant::Rgnn {
        None
    } else {
        let h = match h {
            Some(h) => h,
            None => {
                let started = Instant::now();
                owned = louvain::detect(g, plan.louvain())?;
                time_louvain = seconds(started);
                &owned
            }
        };
        if h.original_n() != g.n() {
            return Err(Error::DimensionMismatch {
                expected: g.n(),
                actual: h.original_n(),
            });
        }
        level_sizes = h.sizes();
        let levels = select_levels(h, &cfg.levels, cfg.anneal.var_limit)?;
        if levels.is_empty() {
            log::warn!("{variant}: no usable hierarchy level, running the main solver from random features");
            None
        } else {
            Some(guidance(problem, g, h, &levels, variant == Variant::MrgnnAm, cfg)?)
        }
    };

    let runs: Vec<(Trained, f64)> = (0..cfg.samples)
        .into_par_iter()
        .map(|s| {
            let started = Instant::now();
            let main_cfg = TrainConfig {
                seed: plan.main_gnn(s),
                ..cfg.main.clone()
            };
            let input = guide
                .as_ref()
                .map(|gd| jittered(&gd.r, cfg.init_jitter, crate::seed::derive(main_cfg.seed, "jitter", 0)));
            let t = gnn::train_main(g, &q, input.as_ref(), &main_cfg)?;
            Ok((t, seconds(started)))
        })
        .collect::<Result<_>>()?;
    let metrics = runs
        .iter()
        .map(|(t, _)| qubo::evaluate(&q, g, &t.x))
        .collect::<Result<Vec<_>>>()?;
    let best = select_best(&metrics).expect("at least one sample");
    let (trained, _) = &runs[best];
    let time_main: f64 = runs.iter().map(|(_, t)| t).sum();
    let (time_local_am, time_local_gnn, levels_used) = match &guide {
        Some(gd) => (gd.time_am, gd.time_gnn, gd.levels.clone()),
        None => (0.0, 0.0, Vec::new()),
    };
    let shift = if trained.trace.snapshots.len() >= 2 {
        report::shift_analysis(&trained.trace, cfg.main.threshold)?
    } else {
        ShiftAnalysis::default()
    };
    let losses = &trained.trace.losses;
    Ok(RunReport {
        variant,
        problem,
        graph: GraphDescriptor::of(g),
        master_seed: cfg.seed,
        objective: metrics[best].objective,
        metrics: metrics[best].clone(),
        x: trained.x.clone(),
        loss_final: *losses.last().expect("at least one epoch"),
        loss_min: losses.iter().copied().fold(f64::INFINITY, f64::min),
        time_local_am,
        time_local_gnn,
        time_main,
        time_total: time_local_am + time_local_gnn + time_main,
        time_louvain,
        shift,
        levels_used,
        level_sizes,
        sample_selected: best,
        samples: cfg.samples,
        epochs_run: trained.trace.epochs_run,
        p_initial: trained.trace.snapshots[0].p.clone(),
        trace: trained.trace.clone(),
    })
}

pub fn solve_rgnn(problem: Problem, g: &Graph, cfg: &PipelineConfig) -> Result<RunReport> {
    run_variant(Variant::Rgnn, problem, g, None, cfg)
}

pub fn solve_mrgnn(problem: Problem, g: &Graph, cfg: &PipelineConfig) -> Result<RunReport> {
    run_variant(Variant::Mrgnn, problem, g, None, cfg)
}

pub fn solve_mrgnn_am(problem: Problem, g: &Graph, cfg: &PipelineConfig) -> Result<RunReport> {
    run_variant(Variant::MrgnnAm, problem, g, None, cfg)
}

/// mrGNN+AM guided by hierarchy level `k` alone.
pub fn level_ablation(problem: Problem, g: &Graph, h: Option<&Hierarchy>, cfg: &PipelineConfig, k: usize) -> Result<RunReport> {
    let owned;
    let h = match h {
        Some(h) => h,
        None => {
            owned = louvain::detect(g, SeedPlan::new(cfg.seed).louvain())?;
            &owned
        }
    };
    if k >= h.len() {
        return Err(Error::invalid(format!("level {k} does not exist (hierarchy has {} levels)", h.len())));
    }
    if h.level(k).size() > cfg.anneal.var_limit {
        return Err(Error::Capacity {
            n: h.level(k).size(),
            limit: cfg.anneal.var_limit,
        });
    }
    let single = PipelineConfig {
        levels: LevelPolicy::Only(vec![k]),
        ..cfg.clone()
    };
    run_variant(Variant::MrgnnAm, problem, g, Some(h), &single)
}
