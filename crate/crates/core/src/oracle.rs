//! Ground-truth engines for small instances and the greedy MIS baseline.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::qubo::{Bits, QuboMatrix};

/// Largest instance [`brute_force`] accepts (2²⁴ ≈ 16.7M assignments).
pub const BRUTE_FORCE_MAX_N: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub x_opt: Bits,
    pub h_opt: f64,
    pub optima_count: u64,
}

const TIE: f64 = 1e-9;

fn bits_of(mask: u32, n: usize) -> Bits {
    (0..n).map(|i| ((mask >> i) & 1) as u8).collect()
}

/// Exact minimum over all `2ⁿ` assignments, enumerated in Gray-code order so
/// each step flips one variable and costs `O(deg)`.
pub fn brute_force(q: &QuboMatrix) -> Result<OracleResult> {
    let n = q.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::invalid(format!(
            "brute force limited to {BRUTE_FORCE_MAX_N} variables, got {n}"
        )));
    }
    let diag: Vec<f64> = (0..n).map(|i| q.diag(i) - q.uniform()).collect();
    let rows: Vec<Vec<(usize, f64)>> = (0..n).map(|i| q.sparse_row(i).collect()).collect();
    let u = q.uniform();

    // field[i] = Σ_j s_ij x_j over the sparse couplings
    let mut field = vec![0.0; n];
    let mut ones = 0.0;
    let mut mask: u32 = 0;
    let mut energy = q.offset();
    let mut best = energy;
    let mut best_mask = 0u32;
    let mut count = 1u64;

    let total: u64 = 1 << n;
    for step in 1..total {
        let k = step.trailing_zeros() as usize;
        let up = (mask >> k) & 1 == 0;
        let s = if up { 1.0 } else { -1.0 };
        energy += s * diag[k] + 2.0 * s * field[k] + u * (2.0 * s * ones + 1.0);
        ones += s;
        mask ^= 1 << k;
        for &(j, w) in &rows[k] {
            field[j] += s * w;
        }
        if energy < best + TIE {
            // resolve near-ties on the exact value, not the running sum
            let exact = q.hamiltonian(&bits_of(mask, n))?;
            energy = exact;
            if exact < best - TIE {
                best = exact;
                best_mask = mask;
                count = 1;
            } else if (exact - best).abs() <= TIE {
                count += 1;
            }
        }
    }
    Ok(OracleResult {
        x_opt: bits_of(best_mask, n),
        h_opt: best,
        optima_count: count,
    })
}

/// Minimum-degree greedy independent set: repeatedly take the remaining node
/// of smallest remaining degree (lowest id on ties) and delete it together with
/// its neighbours. Self-loops are ignored.
pub fn greedy_mis(g: &Graph) -> Bits {
    let n = g.n();
    let mut degree: Vec<usize> = (0..n).map(|v| g.neighbors(v).filter(|&(u, _)| u != v).count()).collect();
    let mut alive = vec![true; n];
    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|v| (degree[v], v)).collect();
    let mut x = vec![0u8; n];
    while let Some((_, v)) = queue.pop_first() {
        x[v] = 1;
        alive[v] = false;
        let removed: Vec<usize> = g.neighbors(v).map(|(u, _)| u).filter(|&u| u != v && alive[u]).collect();
        for &u in &removed {
            alive[u] = false;
            queue.remove(&(degree[u], u));
        }
        for &u in &removed {
            for (w, _) in g.neighbors(u) {
                if w != u && alive[w] {
                    queue.remove(&(degree[w], w));
                    degree[w] -= 1;
                    queue.insert((degree[w], w));
                }
            }
        }
    }
    x
}
