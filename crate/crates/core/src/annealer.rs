//! Software annealing machine.
//!
//! Two solvers over a [`QuboMatrix`]:
//!
//! * [`simulated_anneal`]: single-flip Metropolis with incremental energy
//!   deltas and a geometric temperature schedule.
//! * [`momentum_anneal`]: two coupled replicas. Each half-sweep refreshes one
//!   whole replica against the frozen other one: the sparse couplings act
//!   between the replicas, so every variable sees a fixed field and all of
//!   them are decided at once. The dense balance term `u·(Σx)²` stays inside
//!   each replica and is tracked incrementally. A replica-agreement
//!   ("momentum") coupling is ramped up over the run so both replicas end in
//!   the same state. This is a stand-in for a hardware
//!   momentum annealer whose exact schedules are not public; all schedule
//!   knobs live in [`AnnealConfig`].
//!
//! A hard variable limit mimics the capacity of the hardware device.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::{Bits, QuboMatrix};
use crate::seed;

/// Environment variable that overrides [`AnnealConfig::var_limit`] in front ends.
pub const VAR_LIMIT_ENV: &str = "MRGNN_VAR_LIMIT";

pub const DEFAULT_VAR_LIMIT: usize = 100_000;

/// Automatic `t_start` is this multiple of the largest coupling.
const AUTO_T_FACTOR: f64 = 3.0;

/// The replica coupling ramps linearly from 0 to this fraction of the largest
/// absolute sparse row sum.
const REPLICA_COUPLING_SCALE: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnealConfig {
    /// Variable-update passes per run.
    pub sweeps: usize,
    /// Independent runs in [`solve_am`]; the best one is returned.
    pub restarts: usize,
    /// Initial temperature; `None` uses three times the largest absolute coupling.
    pub t_start: Option<f64>,
    /// Final temperature; `None` uses `t_start / 1000`.
    pub t_end: Option<f64>,
    pub seed: u64,
    pub var_limit: usize,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        Self {
            sweeps: 1000,
            restarts: 1000,
            t_start: None,
            t_end: None,
            seed: 0,
            var_limit: DEFAULT_VAR_LIMIT,
        }
    }
}

impl AnnealConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.sweeps == 0 {
            errs.push("anneal.sweeps must be at least 1".to_string());
        }
        if self.restarts == 0 {
            errs.push("anneal.restarts must be at least 1".to_string());
        }
        if self.var_limit == 0 {
            errs.push("anneal.var_limit must be positive".to_string());
        }
        if let Some(t) = self.t_start {
            if !(t.is_finite() && t > 0.0) {
                errs.push(format!("anneal.t_start must be positive, got {t}"));
            }
        }
        if let Some(t) = self.t_end {
            if !(t.is_finite() && t > 0.0) {
                errs.push(format!("anneal.t_end must be positive, got {t}"));
            }
        }
        if let (Some(a), Some(b)) = (self.t_start, self.t_end) {
            if a < b {
                errs.push(format!("anneal.t_start ({a}) must be >= t_end ({b})"));
            }
        }
        errs
    }

    fn check(&self, q: &QuboMatrix) -> Result<()> {
        let errs = self.validate();
        if !errs.is_empty() {
            return Err(Error::invalid(errs.join("; ")));
        }
        if q.n() > self.var_limit {
            return Err(Error::Capacity {
                n: q.n(),
                limit: self.var_limit,
            });
        }
        Ok(())
    }

    fn schedule(&self, q: &QuboMatrix) -> Schedule {
        let auto = [q.max_abs_coupling(), q.max_abs_diag(), 1.0]
            .into_iter()
            .find(|&t| t > 0.0)
            .unwrap();
        let t_start = self.t_start.unwrap_or(AUTO_T_FACTOR * auto);
        let t_end = self.t_end.unwrap_or(t_start * 1e-3).min(t_start);
        Schedule {
            t_start,
            ratio: t_end / t_start,
            sweeps: self.sweeps,
        }
    }
}

struct Schedule {
    t_start: f64,
    ratio: f64,
    sweeps: usize,
}

impl Schedule {
    fn temperature(&self, sweep: usize) -> f64 {
        if self.sweeps <= 1 {
            return self.t_start;
        }
        self.t_start * self.ratio.powf(sweep as f64 / (self.sweeps - 1) as f64)
    }

    /// Fraction of the run completed, in `[0, 1]`.
    fn progress(&self, sweep: usize) -> f64 {
        if self.sweeps <= 1 {
            1.0
        } else {
            sweep as f64 / (self.sweeps - 1) as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealResult {
    pub x_best: Bits,
    pub energy_best: f64,
    /// Best energy of every restart, in restart order.
    pub energy_trace: Vec<f64>,
    #[serde(with = "crate::report::duration_secs")]
    pub elapsed: Duration,
}

fn metropolis(delta: f64, temperature: f64, rng: &mut seed::Rng) -> bool {
    delta <= 0.0 || rng.gen::<f64>() < (-delta / temperature).exp()
}

fn random_bits(n: usize, rng: &mut seed::Rng) -> Bits {
    (0..n).map(|_| u8::from(rng.gen::<bool>())).collect()
}

/// Energy change of flipping `x_k` given the sparse local field
/// `field_k = Σ_j s_kj x_j` and `sum = Σ x`.
pub(crate) fn flip_delta(q: &QuboMatrix, k: usize, x_k: u8, field_k: f64, sum: f64) -> f64 {
    let step = if x_k == 0 { 1.0 } else { -1.0 };
    let sparse_diag = q.diag(k) - q.uniform();
    sparse_diag * step + 2.0 * step * field_k + q.uniform() * ((sum + step).powi(2) - sum * sum)
}

fn finish(q: &QuboMatrix, x_best: Bits, started: Instant) -> AnnealResult {
    let energy_best = q.hamiltonian(&x_best).expect("state has the QUBO dimension");
    AnnealResult {
        x_best,
        energy_best,
        energy_trace: vec![energy_best],
        elapsed: started.elapsed(),
    }
}

/// Single-flip simulated annealing run.
pub fn simulated_anneal(q: &QuboMatrix, cfg: &AnnealConfig) -> Result<AnnealResult> {
    cfg.check(q)?;
    let started = Instant::now();
    let n = q.n();
    let schedule = cfg.schedule(q);
    let mut rng = seed::rng(cfg.seed);
    let mut x = random_bits(n, &mut rng);
    let xf: Vec<f64> = x.iter().map(|&b| f64::from(b)).collect();
    let mut field = vec![0.0; n];
    q.sparse_mul(&xf, &mut field);
    let mut sum: f64 = xf.iter().sum();
    let mut energy = q.hamiltonian(&x)?;
    let mut best_energy = energy;
    let mut best = x.clone();
    let mut order: Vec<usize> = (0..n).collect();

    for sweep in 0..cfg.sweeps {
        let t = schedule.temperature(sweep);
        order.shuffle(&mut rng);
        for &k in &order {
            let delta = flip_delta(q, k, x[k], field[k], sum);
            if metropolis(delta, t, &mut rng) {
                let step = if x[k] == 0 { 1.0 } else { -1.0 };
                x[k] ^= 1;
                sum += step;
                energy += delta;
                for (j, s) in q.sparse_row(k) {
                    field[j] += s * step;
                }
            }
        }
        if energy < best_energy - 1e-12 {
            best_energy = energy;
            best.copy_from_slice(&x);
        }
    }
    Ok(finish(q, best, started))
}

/// Two-replica momentum annealing run. One sweep refreshes both replicas once.
pub fn momentum_anneal(q: &QuboMatrix, cfg: &AnnealConfig) -> Result<AnnealResult> {
    cfg.check(q)?;
    let started = Instant::now();
    let n = q.n();
    let schedule = cfg.schedule(q);
    // only the sparse couplings act across replicas
    let coupling_max = REPLICA_COUPLING_SCALE
        * (0..n)
            .map(|i| q.sparse_row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
    let mut rng = seed::rng(cfg.seed);
    let mut replicas = [random_bits(n, &mut rng), random_bits(n, &mut rng)];
    let mut best_energy = f64::INFINITY;
    let mut best = replicas[0].clone();
    let mut other = vec![0.0; n];
    let mut field = vec![0.0; n];

    for sweep in 0..cfg.sweeps {
        let t = schedule.temperature(sweep);
        let momentum = coupling_max * schedule.progress(sweep);
        for side in 0..2 {
            let (frozen, target) = if side == 0 {
                let [a, b] = &mut replicas;
                (&*b, a)
            } else {
                let [a, b] = &mut replicas;
                (&*a, b)
            };
            for (o, &b) in other.iter_mut().zip(frozen) {
                *o = f64::from(b);
            }
            q.sparse_mul(&other, &mut field);
            let u = q.uniform();
            let mut own_sum: f64 = target.iter().map(|&b| f64::from(b)).sum();
            for i in 0..n {
                // H̃(x, y) = xᵀSy + ½Σ d_i (x_i + y_i) + ½u((Σx)² + (Σy)²) + w Σ (x_i − y_i)²
                let step = if target[i] == 0 { 1.0 } else { -1.0 };
                let f = field[i] + 0.5 * (q.diag(i) - u) + momentum * (1.0 - 2.0 * other[i]);
                let delta = step * f + 0.5 * u * ((own_sum + step).powi(2) - own_sum * own_sum);
                if metropolis(delta, t, &mut rng) {
                    target[i] ^= 1;
                    own_sum += step;
                }
            }
        }
        for r in &replicas {
            let e = q.hamiltonian(r)?;
            if e < best_energy - 1e-12 {
                best_energy = e;
                best.copy_from_slice(r);
            }
        }
    }
    Ok(finish(q, best, started))
}

/// Seed of restart `index`; restart 0 keeps the base seed.
pub fn restart_seed(base: u64, index: usize) -> u64 {
    if index == 0 {
        base
    } else {
        seed::derive(base, "restart", index as u64)
    }
}

/// Best of `cfg.restarts` momentum-annealing runs. Restarts run in parallel;
/// the result does not depend on scheduling.
pub fn solve_am(q: &QuboMatrix, cfg: &AnnealConfig) -> Result<AnnealResult> {
    cfg.check(q)?;
    let started = Instant::now();
    let runs: Vec<AnnealResult> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let run_cfg = AnnealConfig {
                seed: restart_seed(cfg.seed, r),
                ..cfg.clone()
            };
            momentum_anneal(q, &run_cfg)
        })
        .collect::<Result<_>>()?;
    let trace: Vec<f64> = runs.iter().map(|r| r.energy_best).collect();
    let best = runs
        .into_iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.energy_best.total_cmp(&b.energy_best).then(i.cmp(j)))
        .map(|(_, r)| r)
        .expect("at least one restart");
    Ok(AnnealResult {
        x_best: best.x_best,
        energy_best: best.energy_best,
        energy_trace: trace,
        elapsed: started.elapsed(),
    })
}
