//! Multi-resolution GNN solvers for QUBO-encoded graph problems, guided by an
//! emulated annealing machine on Louvain-compressed graphs.

pub mod annealer;
pub mod error;
pub mod experiment;
pub mod gnn;
pub mod graph;
pub mod louvain;
pub mod mapping;
pub mod oracle;
pub mod pipeline;
pub mod qubo;
pub mod report;
pub mod seed;

pub use annealer::{solve_am, AnnealConfig, AnnealResult};
pub use error::{Error, Result};
pub use experiment::{ExperimentConfig, GraphSource};
pub use gnn::{FeatureMatrix, TrainConfig, TrainTrace};
pub use graph::{Edge, Graph};
pub use louvain::{Hierarchy, Level, Partition};
pub use oracle::{brute_force, OracleResult};
pub use pipeline::{LevelPolicy, PipelineConfig, RunReport, Variant};
pub use qubo::{Bits, GpSignMode, Problem, QuboMatrix, SolutionMetrics};
pub use report::ShiftAnalysis;
pub use seed::SeedPlan;
