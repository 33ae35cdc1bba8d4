//! Two-layer GraphConv solver with a sigmoid head.
//!
//! ```text
//! H1 = ReLU(F·W1s + A·F·W1n + b1)
//! F̄  = ReLU(H1·W2s + A·H1·W2n + b2)
//! p  = σ(F̄·w + b)
//! ```
//!
//! `A` is the weighted adjacency without self-loops. The loss is the relaxed
//! QUBO Hamiltonian of `p`, optionally plus `λ‖p − target‖²`. Gradients are
//! derived by hand (reverse mode through the fixed computation graph above)
//! and applied with Adam.

use std::time::{Duration, Instant};

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::qubo::{Bits, QuboMatrix};
use crate::seed;

/// Rows per parallel work unit in dense products. Fixed so that reductions
/// always happen in the same order.
const ROW_BLOCK: usize = 256;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Node feature matrix; row `v` belongs to node `v`.
pub type FeatureMatrix = Matrix;

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Rows permuted so that row `perm[v]` of the result is row `v` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> Self {
        let mut out = Self::zeros(self.rows, self.cols);
        for (v, &to) in perm.iter().enumerate() {
            out.row_mut(to).copy_from_slice(self.row(v));
        }
        out
    }

    /// `op(a) · op(b)` through gemm; `ta`/`tb` select the transpose.
    fn gemm(a: &Matrix, ta: bool, b: &Matrix, tb: bool) -> Matrix {
        let (m, k) = if ta { (a.cols, a.rows) } else { (a.rows, a.cols) };
        let (kb, n) = if tb { (b.cols, b.rows) } else { (b.rows, b.cols) };
        debug_assert_eq!(k, kb);
        let mut out = Matrix::zeros(m, n);
        if m == 0 || n == 0 || k == 0 {
            return out;
        }
        let (rsa, csa) = if ta { (1, a.cols) } else { (a.cols, 1) };
        let (rsb, csb) = if tb { (1, b.cols) } else { (b.cols, 1) };
        // SAFETY: the strides describe the row-major buffers of `a`, `b` and
        // `out` exactly, with the dimensions checked above.
        unsafe {
            matrixmultiply::dgemm(
                m,
                k,
                n,
                1.0,
                a.data.as_ptr(),
                rsa as isize,
                csa as isize,
                b.data.as_ptr(),
                rsb as isize,
                csb as isize,
                0.0,
                out.data.as_mut_ptr(),
                n as isize,
                1,
            );
        }
        out
    }

    /// `self · b`
    fn matmul(&self, b: &Matrix) -> Matrix {
        Self::gemm(self, false, b, false)
    }

    /// `selfᵀ · b`
    fn t_matmul(&self, b: &Matrix) -> Matrix {
        Self::gemm(self, true, b, false)
    }

    /// `self · bᵀ`
    fn matmul_t(&self, b: &Matrix) -> Matrix {
        Self::gemm(self, false, b, true)
    }

    fn column_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            for (o, v) in out.iter_mut().zip(self.row(r)) {
                *o += v;
            }
        }
        out
    }

    fn add_row_vector(&mut self, b: &[f64]) {
        for r in 0..self.rows {
            for (o, v) in self.row_mut(r).iter_mut().zip(b) {
                *o += v;
            }
        }
    }

    fn add_assign(&mut self, other: &Matrix) {
        for (o, v) in self.data.iter_mut().zip(&other.data) {
            *o += v;
        }
    }

    /// Serialize as `rows cols` then one whitespace-separated row per line.
    pub fn to_text(&self) -> String {
        use std::fmt::Write as _;
        let mut out = format!("{} {}\n", self.rows, self.cols);
        for r in 0..self.rows {
            let line: Vec<String> = self.row(r).iter().map(|v| format!("{v:?}")).collect();
            writeln!(out, "{}", line.join(" ")).unwrap();
        }
        out
    }

    pub fn parse_text(text: &str, origin: &std::path::Path) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            msg,
        };
        let mut lines = text.lines().enumerate();
        let (_, head) = lines.next().ok_or_else(|| err(1, "missing header".into()))?;
        let dims: Vec<usize> = head
            .split_whitespace()
            .map(|t| t.parse().map_err(|e| err(1, format!("bad header: {e}"))))
            .collect::<Result<_>>()?;
        let [rows, cols] = dims[..] else {
            return Err(err(1, "expected `rows cols`".into()));
        };
        let mut data = Vec::with_capacity(rows * cols);
        for (idx, line) in lines.filter(|(_, l)| !l.trim().is_empty()) {
            let before = data.len();
            for t in line.split_whitespace() {
                data.push(t.parse::<f64>().map_err(|e| err(idx + 1, format!("bad value: {e}")))?);
            }
            if data.len() - before != cols {
                return Err(err(idx + 1, format!("expected {cols} values")));
            }
        }
        Self::from_vec(rows, cols, data)
    }
}

/// Neighbour sum `A·h` (self-loops excluded).
fn aggregate(g: &Graph, h: &Matrix) -> Matrix {
    let c = h.cols;
    let mut out = Matrix::zeros(h.rows, c);
    out.data
        .par_chunks_mut(ROW_BLOCK * c.max(1))
        .enumerate()
        .for_each(|(blk, chunk)| {
            for (r, orow) in chunk.chunks_mut(c.max(1)).enumerate() {
                let v = blk * ROW_BLOCK + r;
                for (u, w) in g.neighbors(v) {
                    if u == v {
                        continue;
                    }
                    for (o, &x) in orow.iter_mut().zip(h.row(u)) {
                        *o += w * x;
                    }
                }
            }
        });
    out
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `clamp(⌊√n⌋, 2, 64)`
pub fn auto_feature_dim(n: usize) -> usize {
    ((n as f64).sqrt().floor() as usize).clamp(2, 64)
}

/// Random input features, uniform in `±1/√d₀`.
pub fn init_features(n: usize, d0: usize, seed: u64) -> Result<FeatureMatrix> {
    if n == 0 || d0 == 0 {
        return Err(Error::invalid("feature matrix needs n >= 1 and d0 >= 1"));
    }
    let bound = 1.0 / (d0 as f64).sqrt();
    let mut rng = seed::rng(seed);
    let data = (0..n * d0).map(|_| rng.gen_range(-bound..=bound)).collect();
    Matrix::from_vec(n, d0, data)
}

pub fn binarize(p: &[f64], threshold: f64) -> Bits {
    p.iter().map(|&v| u8::from(v >= threshold)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnnParams {
    pub w1_self: Matrix,
    pub w1_neigh: Matrix,
    pub b1: Vec<f64>,
    pub w2_self: Matrix,
    pub w2_neigh: Matrix,
    pub b2: Vec<f64>,
    pub w_out: Vec<f64>,
    pub b_out: f64,
}

impl GnnParams {
    pub fn zeros(d0: usize, hidden: usize, out: usize) -> Self {
        Self {
            w1_self: Matrix::zeros(d0, hidden),
            w1_neigh: Matrix::zeros(d0, hidden),
            b1: vec![0.0; hidden],
            w2_self: Matrix::zeros(hidden, out),
            w2_neigh: Matrix::zeros(hidden, out),
            b2: vec![0.0; out],
            w_out: vec![0.0; out],
            b_out: 0.0,
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(d0: usize, hidden: usize, out: usize, seed: u64) -> Self {
        let mut p = Self::zeros(d0, hidden, out);
        let mut rng = seed::rng(seed);
        let mut fill = |m: &mut [f64], fan_in: usize, fan_out: usize| {
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in m {
                *v = rng.gen_range(-a..=a);
            }
        };
        fill(p.w1_self.data_mut(), d0, hidden);
        fill(p.w1_neigh.data_mut(), d0, hidden);
        fill(p.w2_self.data_mut(), hidden, out);
        fill(p.w2_neigh.data_mut(), hidden, out);
        fill(&mut p.w_out, out, 1);
        p
    }

    pub fn input_dim(&self) -> usize {
        self.w1_self.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.w2_self.cols()
    }

    pub fn slices(&self) -> [&[f64]; 8] {
        [
            self.w1_self.data(),
            self.w1_neigh.data(),
            &self.b1,
            self.w2_self.data(),
            self.w2_neigh.data(),
            &self.b2,
            &self.w_out,
            std::slice::from_ref(&self.b_out),
        ]
    }

    pub fn slices_mut(&mut self) -> [&mut [f64]; 8] {
        [
            self.w1_self.data_mut(),
            self.w1_neigh.data_mut(),
            &mut self.b1,
            self.w2_self.data_mut(),
            self.w2_neigh.data_mut(),
            &mut self.b2,
            &mut self.w_out,
            std::slice::from_mut(&mut self.b_out),
        ]
    }

    pub fn len(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat parameter `i` in `slices()` order.
    pub fn get_flat(&self, mut i: usize) -> f64 {
        for s in self.slices() {
            if i < s.len() {
                return s[i];
            }
            i -= s.len();
        }
        panic!("parameter index out of range")
    }

    pub fn set_flat(&mut self, mut i: usize, v: f64) {
        for s in self.slices_mut() {
            if i < s.len() {
                s[i] = v;
                return;
            }
            i -= s.len();
        }
        panic!("parameter index out of range")
    }
}

/// Intermediate activations kept for the backward pass.
struct Forward {
    agg_x: Matrix,
    z1: Matrix,
    h1: Matrix,
    agg_h1: Matrix,
    z2: Matrix,
    h2: Matrix,
    p: Vec<f64>,
}

fn check_shapes(g: &Graph, f: &FeatureMatrix, params: &GnnParams) -> Result<()> {
    if f.rows() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            actual: f.rows(),
        });
    }
    if f.cols() != params.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: params.input_dim(),
            actual: f.cols(),
        });
    }
    Ok(())
}

fn run_forward(g: &Graph, f: &FeatureMatrix, agg_x: Option<&Matrix>, params: &GnnParams) -> Forward {
    let agg_x = agg_x.cloned().unwrap_or_else(|| aggregate(g, f));
    let mut z1 = f.matmul(&params.w1_self);
    z1.add_assign(&agg_x.matmul(&params.w1_neigh));
    z1.add_row_vector(&params.b1);
    let mut h1 = z1.clone();
    h1.data.iter_mut().for_each(|v| *v = v.max(0.0));

    let agg_h1 = aggregate(g, &h1);
    let mut z2 = h1.matmul(&params.w2_self);
    z2.add_assign(&agg_h1.matmul(&params.w2_neigh));
    z2.add_row_vector(&params.b2);
    let mut h2 = z2.clone();
    h2.data.iter_mut().for_each(|v| *v = v.max(0.0));

    let p = (0..h2.rows())
        .map(|v| {
            let logit: f64 = h2.row(v).iter().zip(&params.w_out).map(|(a, b)| a * b).sum();
            sigmoid(logit + params.b_out)
        })
        .collect();
    Forward {
        agg_x,
        z1,
        h1,
        agg_h1,
        z2,
        h2,
        p,
    }
}

/// Embeddings `F̄` (n × d_K) and soft assignment `p`.
pub fn forward(g: &Graph, f: &FeatureMatrix, params: &GnnParams) -> Result<(FeatureMatrix, Vec<f64>)> {
    check_shapes(g, f, params)?;
    let fw = run_forward(g, f, None, params);
    Ok((fw.h2, fw.p))
}

fn loss_of(q: &QuboMatrix, p: &[f64], target: Option<&[u8]>, mse_weight: f64) -> Result<(f64, Vec<f64>)> {
    let (mut loss, mut dp) = q.relaxed_with_grad(p)?;
    if let Some(t) = target {
        if mse_weight != 0.0 {
            for i in 0..p.len() {
                let r = p[i] - f64::from(t[i]);
                loss += mse_weight * r * r;
                dp[i] += 2.0 * mse_weight * r;
            }
        }
    }
    Ok((loss, dp))
}

fn backward(g: &Graph, f: &FeatureMatrix, params: &GnnParams, fw: &Forward, dp: &[f64]) -> GnnParams {
    let n = f.rows();
    let dk = params.output_dim();
    let mut grads = GnnParams::zeros(params.input_dim(), params.b1.len(), dk);

    let dlogit: Vec<f64> = dp.iter().zip(&fw.p).map(|(d, p)| d * p * (1.0 - p)).collect();
    grads.b_out = dlogit.iter().sum();
    let mut dz2 = Matrix::zeros(n, dk);
    for v in 0..n {
        let h = fw.h2.row(v);
        for k in 0..dk {
            grads.w_out[k] += h[k] * dlogit[v];
        }
        let z = fw.z2.row(v);
        let row = dz2.row_mut(v);
        for k in 0..dk {
            row[k] = if z[k] > 0.0 { dlogit[v] * params.w_out[k] } else { 0.0 };
        }
    }
    grads.w2_self = fw.h1.t_matmul(&dz2);
    grads.w2_neigh = fw.agg_h1.t_matmul(&dz2);
    grads.b2 = dz2.column_sums();

    let mut dh1 = dz2.matmul_t(&params.w2_self);
    dh1.add_assign(&aggregate(g, &dz2.matmul_t(&params.w2_neigh)));
    let mut dz1 = dh1;
    for (d, &z) in dz1.data.iter_mut().zip(&fw.z1.data) {
        if z <= 0.0 {
            *d = 0.0;
        }
    }
    grads.w1_self = f.t_matmul(&dz1);
    grads.w1_neigh = fw.agg_x.t_matmul(&dz1);
    grads.b1 = dz1.column_sums();
    grads
}

/// Loss (`relaxed(q, p) + λ‖p − target‖²`) and its parameter gradients.
pub fn loss_and_grad(
    g: &Graph,
    f: &FeatureMatrix,
    params: &GnnParams,
    q: &QuboMatrix,
    target: Option<&[u8]>,
    mse_weight: f64,
) -> Result<(f64, GnnParams)> {
    check_shapes(g, f, params)?;
    if q.n() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            actual: q.n(),
        });
    }
    if let Some(t) = target {
        if t.len() != g.n() {
            return Err(Error::DimensionMismatch {
                expected: g.n(),
                actual: t.len(),
            });
        }
    }
    let fw = run_forward(g, f, None, params);
    let (loss, dp) = loss_of(q, &fw.p, target, mse_weight)?;
    Ok((loss, backward(g, f, params, &fw, &dp)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub max_epochs: usize,
    /// Minimum loss improvement that resets the patience counter.
    pub tol: f64,
    pub patience: usize,
    /// λ in front of the squared error to the annealer target.
    pub mse_weight: f64,
    /// Snapshot cadence; `None` means `max(1, max_epochs / 300)`.
    pub snapshot_every: Option<usize>,
    pub seed: u64,
    /// Hidden width; `None` uses `max(auto_feature_dim(n), out_dim)` whatever
    /// the input width.
    pub hidden_dim: Option<usize>,
    /// Embedding width d_K.
    pub out_dim: usize,
    /// Binarization threshold.
    pub threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::main()
    }
}

impl TrainConfig {
    /// Defaults of the solver on the original graph.
    pub fn main() -> Self {
        Self {
            lr: 1e-3,
            max_epochs: 10_000,
            tol: 1e-5,
            patience: 200,
            mse_weight: 1.0,
            snapshot_every: None,
            seed: 0,
            hidden_dim: None,
            out_dim: 16,
            threshold: 0.5,
        }
    }

    /// Defaults of the per-level solvers.
    pub fn local() -> Self {
        Self {
            max_epochs: 1_000,
            patience: 50,
            ..Self::main()
        }
    }

    pub fn snapshot_cadence(&self) -> usize {
        self.snapshot_every.unwrap_or((self.max_epochs / 300).max(1)).max(1)
    }

    pub fn validate(&self, prefix: &str) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.lr.is_finite() && self.lr > 0.0) {
            errs.push(format!("{prefix}.lr must be positive, got {}", self.lr));
        }
        if self.max_epochs == 0 {
            errs.push(format!("{prefix}.max_epochs must be at least 1"));
        }
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            errs.push(format!("{prefix}.tol must be non-negative, got {}", self.tol));
        }
        if !(self.mse_weight.is_finite() && self.mse_weight >= 0.0) {
            errs.push(format!("{prefix}.mse_weight must be non-negative, got {}", self.mse_weight));
        }
        if self.snapshot_every == Some(0) {
            errs.push(format!("{prefix}.snapshot_every must be at least 1"));
        }
        if self.out_dim == 0 || self.hidden_dim == Some(0) {
            errs.push(format!("{prefix}: layer widths must be positive"));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            errs.push(format!("{prefix}.threshold must lie in [0, 1]"));
        }
        errs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub epoch: usize,
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub losses: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub epochs_run: usize,
    #[serde(with = "crate::report::duration_secs")]
    pub elapsed: Duration,
}

/// Everything a training run leaves behind.
#[derive(Debug, Clone)]
pub struct Trained {
    pub params: GnnParams,
    pub embeddings: FeatureMatrix,
    pub p: Vec<f64>,
    pub x: Bits,
    pub trace: TrainTrace,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    lr: f64,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(len: usize, lr: f64) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
            lr,
        }
    }

    fn step(&mut self, params: &mut GnnParams, grads: &GnnParams) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        let mut i = 0;
        for (ps, gs) in params.slices_mut().into_iter().zip(grads.slices()) {
            for (p, &g) in ps.iter_mut().zip(gs) {
                self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * g;
                self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * g * g;
                *p -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
                i += 1;
            }
        }
    }
}

/// Adam minimisation of the (optionally supervised) relaxed Hamiltonian.
///
/// Stops after `max_epochs` or once the best loss has not improved by more
/// than `tol` for `patience` consecutive epochs. The returned state is the one
/// whose loss was recorded last.
pub fn train(
    g: &Graph,
    q: &QuboMatrix,
    features: &FeatureMatrix,
    target: Option<&[u8]>,
    cfg: &TrainConfig,
) -> Result<Trained> {
    let errs = cfg.validate("train");
    if !errs.is_empty() {
        return Err(Error::invalid(errs.join("; ")));
    }
    let started = Instant::now();
    let d0 = features.cols();
    let hidden = cfg.hidden_dim.unwrap_or(auto_feature_dim(g.n()).max(cfg.out_dim));
    let mut params = GnnParams::init(d0, hidden, cfg.out_dim, seed::derive(cfg.seed, "params", 0));
    check_shapes(g, features, &params)?;
    if q.n() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            actual: q.n(),
        });
    }
    if let Some(t) = target {
        if t.len() != g.n() {
            return Err(Error::DimensionMismatch {
                expected: g.n(),
                actual: t.len(),
            });
        }
    }
    let agg_x = aggregate(g, features);
    let every = cfg.snapshot_cadence();
    let mut adam = Adam::new(params.len(), cfg.lr);
    let mut losses = Vec::new();
    let mut snapshots = Vec::new();
    let mut best = f64::INFINITY;
    let mut stall = 0usize;
    let mut last = None;

    for epoch in 0..cfg.max_epochs {
        let fw = run_forward(g, features, Some(&agg_x), &params);
        let (loss, dp) = loss_of(q, &fw.p, target, cfg.mse_weight)?;
        if !loss.is_finite() {
            return Err(Error::NonFinite { epoch, loss });
        }
        losses.push(loss);
        if epoch % every == 0 {
            snapshots.push(Snapshot {
                epoch,
                p: fw.p.clone(),
            });
        }
        if loss < best - cfg.tol {
            best = loss;
            stall = 0;
        } else {
            stall += 1;
        }
        let done = stall >= cfg.patience || epoch + 1 == cfg.max_epochs;
        if done {
            if snapshots.last().map(|s| s.epoch) != Some(epoch) {
                snapshots.push(Snapshot {
                    epoch,
                    p: fw.p.clone(),
                });
            }
            last = Some(fw);
            break;
        }
        let grads = backward(g, features, &params, &fw, &dp);
        adam.step(&mut params, &grads);
    }
    let fw = last.expect("at least one epoch runs");
    let x = binarize(&fw.p, cfg.threshold);
    let epochs_run = losses.len();
    Ok(Trained {
        params,
        embeddings: fw.h2,
        p: fw.p,
        x,
        trace: TrainTrace {
            losses,
            snapshots,
            epochs_run,
            elapsed: started.elapsed(),
        },
    })
}

/// Guided solver on one compressed level: random features of width
/// `auto_feature_dim(n)`, loss `H(p) + λ‖p − x_am‖²`.
pub fn train_local(g: &Graph, q: &QuboMatrix, x_am: &[u8], cfg: &TrainConfig) -> Result<Trained> {
    if x_am.len() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            actual: x_am.len(),
        });
    }
    let f = init_features(g.n(), auto_feature_dim(g.n()), seed::derive(cfg.seed, "features", 0))?;
    train(g, q, &f, Some(x_am), cfg)
}

/// Unsupervised solver on the original graph, from `r_init` or fresh random
/// features.
pub fn train_main(g: &Graph, q: &QuboMatrix, r_init: Option<&FeatureMatrix>, cfg: &TrainConfig) -> Result<Trained> {
    let fresh;
    let f = match r_init {
        Some(r) => r,
        None => {
            fresh = init_features(g.n(), auto_feature_dim(g.n()), seed::derive(cfg.seed, "features", 0))?;
            &fresh
        }
    };
    train(g, q, f, None, cfg)
}
