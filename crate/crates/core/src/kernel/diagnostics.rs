use serde::Serialize;

use super::{build_kernel, SparseKernel, StateSpace};
use crate::error::{Error, Result};
use crate::model::{lumped_stationary, BlockModel, DEFAULT_STATE_CAP};
use crate::spectral::{critical_decomposition, perron_left};

/// Largest detailed-balance defect `|pi(x) P(x,y) - pi(y) P(y,x)|` over all edges.
pub fn check_reversibility(kernel: &SparseKernel, pi: &[f64]) -> Result<f64> {
    let len = kernel.space().len();
    if pi.len() != len {
        return Err(Error::DimensionMismatch { expected: len, found: pi.len() });
    }
    let mut worst: f64 = 0.0;
    for x in 0..len {
        for (y, pxy) in kernel.row(x) {
            if y <= x {
                continue;
            }
            let pyx = kernel.entry(y, x);
            worst = worst.max((pi[x] * pxy - pi[y] * pyx).abs());
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConductanceResult {
    pub n: usize,
    pub beta: f64,
    /// `Q(A, A^c) / min(pi(A), pi(A^c))`.
    pub phi: f64,
    pub pi_a: f64,
    pub flow: f64,
}

/// The cut `a^T S < 0` along the left Perron vector; `a^T S = 0` falls in the complement.
pub fn perron_cut(model: &BlockModel) -> Result<impl Fn(&[f64]) -> bool> {
    let (a, _) = perron_left(model.proportions(), model.interactions())?;
    Ok(move |s: &[f64]| a.iter().zip(s).map(|(x, y)| x * y).sum::<f64>() < -1e-12)
}

/// Exact conductance of the cut `A = { S : in_a(S) }`, with `S = M / n`.
pub fn conductance<F: Fn(&[f64]) -> bool>(model: &BlockModel, beta: f64, in_a: F) -> Result<ConductanceResult> {
    let kernel = build_kernel(model, beta)?;
    let pi = lumped_stationary(model, beta)?;
    let space = kernel.space();
    let n = model.n() as f64;
    let side: Vec<bool> = (0..space.len())
        .map(|i| {
            let s: Vec<f64> = space.mags_of(i).iter().map(|&m| m as f64 / n).collect();
            in_a(&s)
        })
        .collect();
    let pi_a: f64 = pi.iter().zip(&side).filter(|(_, &a)| a).map(|(p, _)| p).sum();
    let pi_c: f64 = pi.iter().zip(&side).filter(|(_, &a)| !a).map(|(p, _)| p).sum();
    if pi_a <= 0.0 || pi_c <= 0.0 {
        return Err(Error::EmptySide);
    }
    let mut flow = 0.0;
    for x in 0..space.len() {
        if !side[x] {
            continue;
        }
        for (y, pxy) in kernel.row(x) {
            if !side[y] {
                flow += pi[x] * pxy;
            }
        }
    }
    Ok(ConductanceResult { n: model.n(), beta, phi: flow / pi_a.min(pi_c), pi_a, flow })
}

/// Exact law of the rescaled top coordinate `U_n^(m)` at the critical temperature,
/// as sorted `(u, mass)` atoms; atoms closer than `1e-12` are merged.
pub fn exact_u_marginal(model: &BlockModel) -> Result<Vec<(f64, f64)>> {
    let crit = critical_decomposition(model)?;
    let pi = lumped_stationary(model, crit.beta_cr)?;
    let space = StateSpace::new(model, DEFAULT_STATE_CAP)?;
    let m = model.num_blocks();
    let mut atoms: Vec<(f64, f64)> = (0..space.len())
        .map(|i| (crit.rescaled_coordinates(model.n(), &space.mags_of(i))[m - 1], pi[i]))
        .collect();
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    for (u, w) in atoms {
        match merged.last_mut() {
            Some(last) if (u - last.0).abs() <= 1e-12 * u.abs().max(1.0) => last.1 += w,
            _ => merged.push((u, w)),
        }
    }
    Ok(merged)
}
