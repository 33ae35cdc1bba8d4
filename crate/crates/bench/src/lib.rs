//! Fixtures shared by the benchmarks.

use mrgnn_core::{Graph, Problem, QuboMatrix};

pub fn regular(n: usize, d: usize) -> Graph {
    Graph::random_regular(n, d, 7).expect("valid regular graph")
}

pub fn qubo(problem: Problem, g: &Graph) -> QuboMatrix {
    QuboMatrix::build(problem, g, problem.default_penalty(), Default::default()).expect("valid qubo")
}
