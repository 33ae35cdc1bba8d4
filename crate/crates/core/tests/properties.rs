use proptest::prelude::*;

use mrgnn_core::gnn::{self, FeatureMatrix};
use mrgnn_core::mapping;
use mrgnn_core::pipeline::{self, rescaled};
use mrgnn_core::{louvain, solve_am, AnnealConfig, Graph, LevelPolicy, PipelineConfig, Problem, QuboMatrix, TrainConfig, Variant};

fn problem_of(i: u8) -> Problem {
    match i % 3 {
        0 => Problem::MaxCut,
        1 => Problem::Mis,
        _ => Problem::Gp,
    }
}

fn features(rows: usize, cols: usize, seed: u64) -> FeatureMatrix {
    gnn::init_features(rows, cols, seed).unwrap()
}

fn small_config(seed: u64) -> PipelineConfig {
    let mut cfg = PipelineConfig {
        seed,
        samples: 2,
        ..PipelineConfig::default()
    };
    cfg.anneal.sweeps = 30;
    cfg.anneal.restarts = 3;
    cfg.local.max_epochs = 30;
    cfg.main.max_epochs = 40;
    cfg.main.snapshot_every = Some(5);
    cfg
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn distribute_conserves_each_community(half_n in 10usize..80, d in 2usize..5, seed in any::<u64>()) {
        let g = Graph::random_regular(2 * half_n, d, seed).unwrap();
        let h = louvain::detect(&g, seed).unwrap();
        let deg = g.degrees();
        for level in 0..h.len() {
            let lvl = h.level(level);
            let f = features(lvl.size(), 3, seed ^ level as u64);
            let rf = mapping::distribute(&h, level, &f, &deg).unwrap();
            prop_assert_eq!(rf.matrix.rows(), g.n());
            prop_assert_eq!(rf.matrix.cols(), 3);
            let membership = lvl.membership(g.n());
            let mut sums = vec![0.0; lvl.size()];
            let mut col_sums = vec![[0.0; 3]; lvl.size()];
            for (v, &c) in membership.iter().enumerate() {
                sums[c] += rf.coefficients[v];
                for j in 0..3 {
                    col_sums[c][j] += rf.matrix.get(v, j);
                }
            }
            for c in 0..lvl.size() {
                prop_assert!((sums[c] - 1.0).abs() < 1e-12);
                for j in 0..3 {
                    prop_assert!((col_sums[c][j] - f.get(c, j)).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn distribute_is_linear(half_n in 10usize..60, seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let g = Graph::random_regular(2 * half_n, 3, seed).unwrap();
        let h = louvain::detect(&g, seed).unwrap();
        let deg = g.degrees();
        let k = h.level(0).size();
        let f1 = features(k, 2, seed);
        let f2 = features(k, 2, seed.wrapping_add(1));
        let mix: Vec<f64> = f1.data().iter().zip(f2.data()).map(|(x, y)| a * x + b * y).collect();
        let fm = FeatureMatrix::from_vec(k, 2, mix).unwrap();
        let r1 = mapping::distribute(&h, 0, &f1, &deg).unwrap().matrix;
        let r2 = mapping::distribute(&h, 0, &f2, &deg).unwrap().matrix;
        let rm = mapping::distribute(&h, 0, &fm, &deg).unwrap().matrix;
        for i in 0..rm.data().len() {
            prop_assert!((rm.data()[i] - (a * r1.data()[i] + b * r2.data()[i])).abs() < 1e-9);
        }
    }

    #[test]
    fn rescaled_has_fixed_mean_row_norm(rows in 1usize..40, cols in 1usize..8, seed in any::<u64>(), scale in 1e-4f64..1e4) {
        let mut f = features(rows, cols, seed);
        f.data_mut().iter_mut().for_each(|v| *v *= scale);
        let r = rescaled(&f);
        let mean_sq = r.data().iter().map(|v| v * v).sum::<f64>() / rows as f64;
        prop_assert!((mean_sq - 1.0 / 3.0).abs() < 1e-9);
        let again = rescaled(&r);
        for (x, y) in again.data().iter().zip(r.data()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn anneal_result_is_consistent(half_n in 4usize..30, p in 0u8..3, seed in any::<u64>()) {
        let g = Graph::random_regular(2 * half_n, 3, seed).unwrap();
        let problem = problem_of(p);
        let q = QuboMatrix::build(problem, &g, problem.default_penalty(), Default::default()).unwrap();
        let cfg = AnnealConfig { sweeps: 20, restarts: 4, seed, ..AnnealConfig::default() };
        let res = solve_am(&q, &cfg).unwrap();
        prop_assert_eq!(res.energy_best, q.hamiltonian(&res.x_best).unwrap());
        let trace_min = res.energy_trace.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(res.energy_best, trace_min);
        prop_assert_eq!(res.energy_trace.len(), 4);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn run_reports_are_self_consistent(half_n in 15usize..40, p in 0u8..3, v in 0usize..3, seed in any::<u64>()) {
        let g = Graph::random_regular(2 * half_n, 3, seed).unwrap();
        let problem = problem_of(p);
        let variant = Variant::ALL[v];
        let cfg = small_config(seed);
        let r = pipeline::run_variant(variant, problem, &g, None, &cfg).unwrap();
        let q = QuboMatrix::build(problem, &g, cfg.penalty_for(problem), cfg.gp_sign_mode).unwrap();
        prop_assert_eq!(r.objective, q.hamiltonian(&r.x).unwrap());
        prop_assert_eq!(r.time_total, r.time_local_am + r.time_local_gnn + r.time_main);
        prop_assert!(r.epochs_run <= cfg.main.max_epochs);
        prop_assert!(r.sample_selected < cfg.samples);
        let s: f64 = r.shift.proportions.iter().sum();
        prop_assert!(r.shift.proportions.iter().all(|&x| (0.0..=1.0).contains(&x)));
        prop_assert!(s == 0.0 || (s - 1.0).abs() < 1e-12);
        if variant == Variant::Rgnn {
            prop_assert_eq!(r.time_local_am, 0.0);
            prop_assert!(r.levels_used.is_empty());
        }
        if variant == Variant::Mrgnn {
            prop_assert_eq!(r.time_local_am, 0.0);
        }
        for &l in &r.levels_used {
            prop_assert!(r.level_sizes[l] <= cfg.anneal.var_limit);
            prop_assert!(r.level_sizes[l] < g.n());
        }
    }

    #[test]
    fn training_respects_epoch_cap(half_n in 5usize..30, epochs in 1usize..60, seed in any::<u64>()) {
        let g = Graph::random_regular(2 * half_n, 3, seed).unwrap();
        let q = QuboMatrix::build(Problem::MaxCut, &g, 0.0, Default::default()).unwrap();
        let cfg = TrainConfig { max_epochs: epochs, seed, ..TrainConfig::main() };
        let t = gnn::train_main(&g, &q, None, &cfg).unwrap();
        prop_assert!(t.trace.epochs_run <= epochs);
        prop_assert_eq!(t.trace.losses.len(), t.trace.epochs_run);
        prop_assert!(t.p.iter().all(|p| p.is_finite() && (0.0..=1.0).contains(p)));
        prop_assert_eq!(t.x, gnn::binarize(&t.p, cfg.threshold));
    }
}

#[test]
fn explicit_level_list_is_honored() {
    let g = Graph::random_regular(60, 3, 5).unwrap();
    let h = louvain::detect(&g, 5).unwrap();
    let levels = pipeline::select_levels(&h, &LevelPolicy::Only(vec![0]), 100_000).unwrap();
    assert_eq!(levels, vec![0]);
}
