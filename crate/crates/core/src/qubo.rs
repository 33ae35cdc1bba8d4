//! QUBO matrices for MaxCut, MIS and balanced graph partition.
//!
//! A [`QuboMatrix`] evaluates
//!
//! ```text
//! H(x) = Σ_i d_i x_i² + Σ_{i≠j} s_ij x_i x_j + u·(Σ_i x_i)² + c
//! ```
//!
//! where `d` is the sparse diagonal, `s` the sparse symmetric off-diagonal
//! couplings, `u` a coefficient applied uniformly to every entry of `Q` (the
//! all-pairs coupling of the partition balance term) and `c` a constant. This
//! is exactly `xᵀQx + c` for the symmetric matrix `Q = diag(d) + S + u·11ᵀ`,
//! without materialising the dense part.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Binary assignment vector, one `0`/`1` byte per variable.
pub type Bits = Vec<u8>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    MaxCut,
    Mis,
    Gp,
}

impl Problem {
    pub const ALL: [Problem; 3] = [Problem::MaxCut, Problem::Mis, Problem::Gp];

    /// Penalty used when none is configured (MaxCut has no penalty term).
    pub fn default_penalty(self) -> f64 {
        match self {
            Problem::MaxCut => 0.0,
            Problem::Mis => 2.0,
            Problem::Gp => 10.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Problem::MaxCut => "maxcut",
            Problem::Mis => "mis",
            Problem::Gp => "gp",
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "maxcut" | "max-cut" => Ok(Problem::MaxCut),
            "mis" => Ok(Problem::Mis),
            "gp" | "partition" => Ok(Problem::Gp),
            other => Err(Error::invalid(format!("unknown problem {other:?} (expected maxcut, mis or gp)"))),
        }
    }
}

/// Sign convention for the partition balance term.
///
/// `Corrected` penalises imbalance with `+β(Σx − n/2)²`. `Literal` keeps the
/// alternative form `−β Σ_i ((1 − n) x_i + Σ_{j>i} 2 x_i x_j)`, whose minimiser
/// favours lopsided sets; it exists for side-by-side experiments only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GpSignMode {
    #[default]
    Corrected,
    Literal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuboMatrix {
    n: usize,
    diag: Vec<f64>,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    uniform: f64,
    offset: f64,
    problem: Option<Problem>,
    penalty: f64,
}

fn check_bits(x: &[u8], n: usize) -> Result<()> {
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: x.len(),
        });
    }
    if let Some(i) = x.iter().position(|&b| b > 1) {
        return Err(Error::invalid(format!("entry {i} is {} (expected 0 or 1)", x[i])));
    }
    Ok(())
}

impl QuboMatrix {
    /// Assemble from upper- or lower-triangle triplets; repeated `(i, j)`
    /// pairs are summed and `(j, i)` is folded onto `(i, j)`.
    pub fn from_triplets(n: usize, triplets: impl IntoIterator<Item = (usize, usize, f64)>, offset: f64) -> Result<Self> {
        let mut diag = vec![0.0; n];
        let mut upper = Vec::new();
        for (i, j, q) in triplets {
            if i >= n || j >= n {
                return Err(Error::invalid(format!("entry ({i}, {j}) out of range for n = {n}")));
            }
            if !q.is_finite() {
                return Err(Error::invalid(format!("entry ({i}, {j}) is not finite")));
            }
            if i == j {
                diag[i] += q;
            } else {
                upper.push((i.min(j), i.max(j), q));
            }
        }
        upper.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(upper.len());
        for (i, j, q) in upper {
            match merged.last_mut() {
                Some(last) if (last.0, last.1) == (i, j) => last.2 += q,
                _ => merged.push((i, j, q)),
            }
        }
        merged.retain(|t| t.2 != 0.0);

        let mut counts = vec![0usize; n + 1];
        for &(i, j, _) in &merged {
            counts[i] += 1;
            counts[j] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + counts[i];
        }
        let mut cols = vec![0usize; offsets[n]];
        let mut vals = vec![0.0; offsets[n]];
        let mut cursor = offsets.clone();
        for &(i, j, q) in &merged {
            cols[cursor[i]] = j;
            vals[cursor[i]] = q;
            cursor[i] += 1;
            cols[cursor[j]] = i;
            vals[cursor[j]] = q;
            cursor[j] += 1;
        }
        Ok(Self {
            n,
            diag,
            offsets,
            cols,
            vals,
            uniform: 0.0,
            offset,
            problem: None,
            penalty: 0.0,
        })
    }

    /// Build the QUBO of `problem` on `g`. Self-loops (present on coarsened
    /// graphs) are ignored; edge weights scale every coupling.
    pub fn build(problem: Problem, g: &Graph, penalty: f64, gp_sign_mode: GpSignMode) -> Result<Self> {
        if problem != Problem::MaxCut && !(penalty.is_finite() && penalty > 0.0) {
            return Err(Error::invalid(format!("{problem} needs a positive penalty, got {penalty}")));
        }
        let n = g.n();
        let edges = g.edges().iter().filter(|e| !e.is_self_loop());
        let mut triplets = Vec::new();
        let mut offset = 0.0;
        let mut uniform = 0.0;
        match problem {
            Problem::MaxCut => {
                // w (2 x_i x_j − x_i − x_j)
                for e in edges {
                    triplets.push((e.u, e.v, e.w));
                    triplets.push((e.u, e.u, -e.w));
                    triplets.push((e.v, e.v, -e.w));
                }
            }
            Problem::Mis => {
                // −Σ x_i + β Σ w x_i x_j
                triplets.extend((0..n).map(|i| (i, i, -1.0)));
                for e in edges {
                    triplets.push((e.u, e.v, 0.5 * penalty * e.w));
                }
            }
            Problem::Gp => {
                // −H_MaxCut = Σ w (x_i + x_j − 2 x_i x_j)
                for e in edges {
                    triplets.push((e.u, e.v, -e.w));
                    triplets.push((e.u, e.u, e.w));
                    triplets.push((e.v, e.v, e.w));
                }
                let nf = n as f64;
                match gp_sign_mode {
                    GpSignMode::Corrected => {
                        // β(Σx)² − βnΣx + βn²/4
                        uniform = penalty;
                        triplets.extend((0..n).map(|i| (i, i, -penalty * nf)));
                        offset = penalty * nf * nf / 4.0;
                    }
                    GpSignMode::Literal => {
                        // −β(1 − n)Σx − 2β Σ_{i<j} x_i x_j; the uniform term also
                        // adds −β on the diagonal, compensated here.
                        uniform = -penalty;
                        triplets.extend((0..n).map(|i| (i, i, penalty * nf)));
                    }
                }
            }
        }
        let mut q = Self::from_triplets(n, triplets, offset)?;
        q.uniform = uniform;
        q.problem = Some(problem);
        q.penalty = penalty;
        Ok(q)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn problem(&self) -> Option<Problem> {
        self.problem
    }

    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn uniform(&self) -> f64 {
        self.uniform
    }

    /// Full diagonal entry `Q_ii`.
    pub fn diag(&self, i: usize) -> f64 {
        self.diag[i] + self.uniform
    }

    /// Sparse off-diagonal couplings `s_ij` of row `i` (excludes the uniform part).
    pub fn sparse_row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[i]..self.offsets[i + 1];
        self.cols[range.clone()].iter().copied().zip(self.vals[range].iter().copied())
    }

    /// Entry `Q_ij` of the symmetric matrix.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diag(i);
        }
        let s = self.sparse_row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v);
        s + self.uniform
    }

    /// Upper-triangle triplets of the full matrix (dense when `uniform != 0`).
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            let d = self.diag(i);
            if d != 0.0 {
                out.push((i, i, d));
            }
            if self.uniform == 0.0 {
                let mut row: Vec<_> = self.sparse_row(i).filter(|&(j, _)| j > i).collect();
                row.sort_by_key(|&(j, _)| j);
                out.extend(row.into_iter().map(|(j, q)| (i, j, q)));
            } else {
                for j in i + 1..self.n {
                    let q = self.entry(i, j);
                    if q != 0.0 {
                        out.push((i, j, q));
                    }
                }
            }
        }
        out
    }

    /// Largest `|Q_ij|` over couplings `i != j`.
    pub fn max_abs_coupling(&self) -> f64 {
        let sparse = (0..self.n)
            .flat_map(|i| self.sparse_row(i).map(|(_, v)| (v + self.uniform).abs()))
            .fold(0.0, f64::max);
        if self.uniform != 0.0 && self.n > 1 {
            sparse.max(self.uniform.abs())
        } else {
            sparse
        }
    }

    pub fn max_abs_diag(&self) -> f64 {
        (0..self.n).map(|i| self.diag(i).abs()).fold(0.0, f64::max)
    }

    /// Largest off-diagonal absolute row sum `max_i Σ_{j≠i} |Q_ij|`.
    pub fn max_row_sum(&self) -> f64 {
        let mut best: f64 = 0.0;
        for i in 0..self.n {
            let mut touched = 0usize;
            let mut sum = 0.0;
            for (_, v) in self.sparse_row(i) {
                sum += (v + self.uniform).abs();
                touched += 1;
            }
            sum += self.n.saturating_sub(1 + touched) as f64 * self.uniform.abs();
            best = best.max(sum);
        }
        best
    }

    /// `(S·v)_i = Σ_{j≠i} s_ij v_j` for the sparse couplings.
    pub(crate) fn sparse_mul(&self, v: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.sparse_row(i).map(|(j, q)| q * v[j]).sum();
        }
    }

    fn quadratic_form(&self, p: &[f64]) -> f64 {
        let mut total = 0.0;
        let mut sum = 0.0;
        for i in 0..self.n {
            let pi = p[i];
            if pi == 0.0 {
                continue;
            }
            sum += pi;
            let row: f64 = self.sparse_row(i).map(|(j, q)| q * p[j]).sum();
            total += pi * (self.diag[i] * pi + row);
        }
        total + self.uniform * sum * sum + self.offset
    }

    /// Hamiltonian `xᵀQx + c` of a binary assignment.
    pub fn hamiltonian(&self, x: &[u8]) -> Result<f64> {
        check_bits(x, self.n)?;
        let p: Vec<f64> = x.iter().map(|&b| f64::from(b)).collect();
        Ok(self.quadratic_form(&p))
    }

    /// Multilinear extension of the Hamiltonian to `p ∈ [0, 1]ⁿ`:
    /// `Σ Q_ii p_i + Σ_{i≠j} Q_ij p_i p_j + c`. The diagonal enters linearly
    /// (`x² = x` on binary inputs), so binary `p` gives the Hamiltonian and
    /// each coordinate is linear, which keeps `p = 0` from being stationary.
    pub fn relaxed(&self, p: &[f64]) -> Result<f64> {
        if p.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: p.len(),
            });
        }
        if let Some(i) = p.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid(format!("soft assignment entry {i} = {} outside [0, 1]", p[i])));
        }
        let linear_diag: f64 = (0..self.n).map(|i| self.diag(i) * (p[i] - p[i] * p[i])).sum();
        Ok(self.quadratic_form(p) + linear_diag)
    }

    /// Value and gradient `2Qp + Q_ii(1 − 2p_i)` of [`relaxed`](Self::relaxed).
    pub fn relaxed_with_grad(&self, p: &[f64]) -> Result<(f64, Vec<f64>)> {
        let value = self.relaxed(p)?;
        let mut grad = vec![0.0; self.n];
        self.sparse_mul(p, &mut grad);
        let sum: f64 = p.iter().sum();
        for i in 0..self.n {
            grad[i] = 2.0 * (grad[i] + self.diag[i] * p[i] + self.uniform * sum) + self.diag(i) * (1.0 - 2.0 * p[i]);
        }
        Ok((value, grad))
    }

    /// Serialize as `n [offset]` then one `i j q` line per upper-triangle entry.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if self.offset == 0.0 {
            writeln!(out, "{}", self.n).unwrap();
        } else {
            writeln!(out, "{} {:?}", self.n, self.offset).unwrap();
        }
        for (i, j, q) in self.triplets() {
            writeln!(out, "{i} {j} {q:?}").unwrap();
        }
        out
    }

    pub fn parse_text(text: &str, origin: &Path) -> Result<Self> {
        let parse_err = |line: usize, msg: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            msg,
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| parse_err(1, "missing dimension".into()))?;
        let head: Vec<&str> = header.split_whitespace().collect();
        let n: usize = head[0].parse().map_err(|e| parse_err(1, format!("bad dimension: {e}")))?;
        let offset: f64 = match head.get(1) {
            Some(s) => s.parse().map_err(|e| parse_err(1, format!("bad offset: {e}")))?,
            None => 0.0,
        };
        let mut triplets = Vec::new();
        for (idx, line) in lines {
            let lineno = idx + 1;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(parse_err(lineno, format!("expected `i j q`, got {line:?}")));
            }
            let i: usize = f[0].parse().map_err(|e| parse_err(lineno, format!("bad index: {e}")))?;
            let j: usize = f[1].parse().map_err(|e| parse_err(lineno, format!("bad index: {e}")))?;
            let q: f64 = f[2].parse().map_err(|e| parse_err(lineno, format!("bad value: {e}")))?;
            if i >= n || j >= n {
                return Err(parse_err(lineno, format!("index out of range for n = {n}")));
            }
            triplets.push((i, j, q));
        }
        Self::from_triplets(n, triplets, offset)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_text(&text, path)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// Problem-level quality figures of a binary solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionMetrics {
    pub objective: f64,
    /// MIS: edges with both endpoints selected. Always 0 for the other problems.
    pub violations: usize,
    /// GP: `min(Σx, n − Σx) / n`.
    pub balance: Option<f64>,
    /// MaxCut and GP: number of edges across the two sides.
    pub cut_size: Option<usize>,
    /// MIS: number of selected nodes.
    pub set_size: Option<usize>,
}

pub fn cut_size(g: &Graph, x: &[u8]) -> usize {
    g.edges().iter().filter(|e| !e.is_self_loop() && x[e.u] != x[e.v]).count()
}

pub fn mis_violations(g: &Graph, x: &[u8]) -> usize {
    g.edges().iter().filter(|e| !e.is_self_loop() && x[e.u] == 1 && x[e.v] == 1).count()
}

/// Metrics of `x` under a prebuilt QUBO (the problem tag selects which
/// counters are reported).
pub fn evaluate(q: &QuboMatrix, g: &Graph, x: &[u8]) -> Result<SolutionMetrics> {
    if q.n() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            actual: q.n(),
        });
    }
    let objective = q.hamiltonian(x)?;
    let ones = x.iter().filter(|&&b| b == 1).count();
    let mut m = SolutionMetrics {
        objective,
        violations: 0,
        balance: None,
        cut_size: None,
        set_size: None,
    };
    match q.problem() {
        Some(Problem::MaxCut) => m.cut_size = Some(cut_size(g, x)),
        Some(Problem::Mis) => {
            m.violations = mis_violations(g, x);
            m.set_size = Some(ones);
        }
        Some(Problem::Gp) => {
            m.cut_size = Some(cut_size(g, x));
            m.balance = Some(if g.n() == 0 {
                0.0
            } else {
                ones.min(g.n() - ones) as f64 / g.n() as f64
            });
        }
        None => {}
    }
    Ok(m)
}

/// Build the corrected-mode QUBO and evaluate `x` in one step.
pub fn evaluate_problem(problem: Problem, g: &Graph, x: &[u8], penalty: f64) -> Result<SolutionMetrics> {
    let q = QuboMatrix::build(problem, g, penalty, GpSignMode::Corrected)?;
    evaluate(&q, g, x)
}
