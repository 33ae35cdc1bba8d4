//! Pull coarse-level embeddings back onto the original nodes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnn::FeatureMatrix;
use crate::louvain::Hierarchy;

/// One level's embeddings spread over the original nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionFeatures {
    pub level: usize,
    pub matrix: FeatureMatrix,
    /// Share of its community's embedding that each original node received.
    pub coefficients: Vec<f64>,
}

/// Degree share of every original node within its community at `level`.
/// A community whose members all have degree zero is split uniformly.
pub fn coefficients(h: &Hierarchy, level: usize, deg_p: &[f64]) -> Result<Vec<f64>> {
    if level >= h.len() {
        return Err(Error::invalid(format!("level {level} out of range (hierarchy has {})", h.len())));
    }
    if deg_p.len() != h.original_n() {
        return Err(Error::DimensionMismatch {
            expected: h.original_n(),
            actual: deg_p.len(),
        });
    }
    let membership = h.level(level).membership(h.original_n());
    let k = h.level(level).size();
    let mut total = vec![0.0; k];
    let mut count = vec![0usize; k];
    for (v, &c) in membership.iter().enumerate() {
        total[c] += deg_p[v];
        count[c] += 1;
    }
    Ok(membership
        .iter()
        .enumerate()
        .map(|(v, &c)| {
            if total[c] > 0.0 {
                deg_p[v] / total[c]
            } else {
                1.0 / count[c] as f64
            }
        })
        .collect())
}

/// `r̄_v = deg(v) / Σ_{u ∈ C(v)} deg(u) · f̄_{C(v)}` for every original node `v`.
pub fn distribute(h: &Hierarchy, level: usize, f_bar: &FeatureMatrix, deg_p: &[f64]) -> Result<ResolutionFeatures> {
    let coef = coefficients(h, level, deg_p)?;
    let lvl = h.level(level);
    if f_bar.rows() != lvl.size() {
        return Err(Error::DimensionMismatch {
            expected: lvl.size(),
            actual: f_bar.rows(),
        });
    }
    let membership = lvl.membership(h.original_n());
    let mut matrix = FeatureMatrix::zeros(h.original_n(), f_bar.cols());
    for (v, &c) in membership.iter().enumerate() {
        for (o, x) in matrix.row_mut(v).iter_mut().zip(f_bar.row(c)) {
            *o = coef[v] * x;
        }
    }
    Ok(ResolutionFeatures {
        level,
        matrix,
        coefficients: coef,
    })
}

/// Elementwise mean of the per-level matrices.
pub fn aggregate(parts: &[ResolutionFeatures]) -> Result<FeatureMatrix> {
    let first = parts.first().ok_or_else(|| Error::invalid("nothing to aggregate"))?;
    let (rows, cols) = (first.matrix.rows(), first.matrix.cols());
    let mut out = FeatureMatrix::zeros(rows, cols);
    for part in parts {
        if (part.matrix.rows(), part.matrix.cols()) != (rows, cols) {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: part.matrix.rows() * part.matrix.cols(),
            });
        }
        for (o, x) in out.data_mut().iter_mut().zip(part.matrix.data()) {
            *o += x;
        }
    }
    let s = parts.len() as f64;
    out.data_mut().iter_mut().for_each(|v| *v /= s);
    Ok(out)
}
