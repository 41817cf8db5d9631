//! Exact lumped magnetization chain: state space, sparse kernel, distribution
//! propagation and total-variation distances.

mod diagnostics;
mod mixing;

pub use diagnostics::{check_reversibility, conductance, exact_u_marginal, perron_cut, ConductanceResult};
pub use mixing::{mixing_time_exact, tv_curve, MixingResult, StartSet, TvCurve};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{rate_minus, rate_plus, BlockModel, MagState, DEFAULT_STATE_CAP};

/// Work per step below which propagation stays on the calling thread.
const PARALLEL_THRESHOLD: usize = 1 << 14;

/// Mixed-radix enumeration of magnetization vectors.
///
/// Coordinate `c_i in 0..=size_i` stands for `M_i = 2 c_i - size_i`; the last block
/// varies fastest.
#[derive(Clone, Debug, Serialize)]
pub struct StateSpace {
    sizes: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

impl StateSpace {
    pub fn new(model: &BlockModel, cap: u128) -> Result<Self> {
        let size = model.lumped_size();
        if size > cap {
            return Err(Error::StateSpaceTooLarge { size, cap });
        }
        let sizes = model.block_sizes().to_vec();
        let mut strides = vec![1; sizes.len()];
        for i in (0..sizes.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * (sizes[i + 1] + 1);
        }
        Ok(Self { sizes, strides, len: size as usize })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn num_blocks(&self) -> usize {
        self.sizes.len()
    }

    fn coord(&self, idx: usize, block: usize) -> usize {
        (idx / self.strides[block]) % (self.sizes[block] + 1)
    }

    pub fn mags_of(&self, idx: usize) -> Vec<i64> {
        (0..self.sizes.len())
            .map(|b| 2 * self.coord(idx, b) as i64 - self.sizes[b] as i64)
            .collect()
    }

    pub fn state_of(&self, idx: usize) -> MagState {
        MagState(self.mags_of(idx))
    }

    pub fn index_of(&self, state: &MagState) -> Result<usize> {
        if state.0.len() != self.sizes.len() {
            return Err(Error::DimensionMismatch { expected: self.sizes.len(), found: state.0.len() });
        }
        let mut idx = 0;
        for (b, &m) in state.0.iter().enumerate() {
            let size = self.sizes[b] as i64;
            if m.abs() > size || (m + size) % 2 != 0 {
                return Err(Error::StateOutOfRange);
            }
            idx += ((m + size) / 2) as usize * self.strides[b];
        }
        Ok(idx)
    }
}

/// Transition kernel of the lumped chain.
///
/// Each row holds at most `2m + 1` nonzero entries: one up-move and one down-move
/// per block plus the holding probability.
#[derive(Clone, Debug)]
pub struct SparseKernel {
    space: StateSpace,
    beta: f64,
    up: Vec<f64>,
    down: Vec<f64>,
    stay: Vec<f64>,
}

/// Builds the lumped kernel with the default state cap.
pub fn build_kernel(model: &BlockModel, beta: f64) -> Result<SparseKernel> {
    build_kernel_capped(model, beta, DEFAULT_STATE_CAP)
}

pub fn build_kernel_capped(model: &BlockModel, beta: f64, cap: u128) -> Result<SparseKernel> {
    let space = StateSpace::new(model, cap)?;
    let m = model.num_blocks();
    let n = model.n() as f64;
    let k = model.interactions();
    let sizes = model.block_sizes();

    let rows: Vec<(Vec<f64>, Vec<f64>, f64)> = (0..space.len())
        .into_par_iter()
        .with_min_len(1024)
        .map(|idx| {
            let mags = space.mags_of(idx);
            let fields = model.block_fields(&mags);
            let mut up = vec![0.0; m];
            let mut down = vec![0.0; m];
            // Kahan-compensated sum of the moving mass.
            let mut sum = 0.0;
            let mut comp = 0.0;
            let mut add = |x: f64| {
                let y = x - comp;
                let t = sum + y;
                comp = (t - sum) - y;
                sum = t;
            };
            for i in 0..m {
                let size = sizes[i] as f64;
                let mi = mags[i] as f64;
                let self_term = k[(i, i)] / n;
                up[i] = (size - mi) / (2.0 * n) * rate_plus(beta, fields[i] + self_term);
                down[i] = (size + mi) / (2.0 * n) * rate_minus(beta, fields[i] - self_term);
                add(up[i]);
                add(down[i]);
            }
            (up, down, 1.0 - sum)
        })
        .collect();

    let mut up = Vec::with_capacity(space.len() * m);
    let mut down = Vec::with_capacity(space.len() * m);
    let mut stay = Vec::with_capacity(space.len());
    for (u, d, s) in rows {
        up.extend(u);
        down.extend(d);
        stay.push(s);
    }
    Ok(SparseKernel { space, beta, up, down, stay })
}

impl SparseKernel {
    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn stay(&self, idx: usize) -> f64 {
        self.stay[idx]
    }

    /// Nonzero entries `(target, probability)` of one row, holding probability first.
    pub fn row(&self, idx: usize) -> Vec<(usize, f64)> {
        let m = self.space.num_blocks();
        let mut out = Vec::with_capacity(2 * m + 1);
        out.push((idx, self.stay[idx]));
        for b in 0..m {
            let c = self.space.coord(idx, b);
            let stride = self.space.strides[b];
            let u = self.up[idx * m + b];
            let d = self.down[idx * m + b];
            if c < self.space.sizes[b] && u > 0.0 {
                out.push((idx + stride, u));
            }
            if c > 0 && d > 0.0 {
                out.push((idx - stride, d));
            }
        }
        out
    }

    /// Probability of moving from `from` to `to` in one step.
    pub fn entry(&self, from: usize, to: usize) -> f64 {
        self.row(from).into_iter().filter(|&(j, _)| j == to).map(|(_, p)| p).sum()
    }

    /// Mass arriving at `idx`, accumulated in a fixed order.
    fn pull(&self, dist: &[f64], idx: usize) -> f64 {
        let m = self.space.num_blocks();
        let mut acc = dist[idx] * self.stay[idx];
        for b in 0..m {
            let c = self.space.coord(idx, b);
            let stride = self.space.strides[b];
            if c > 0 {
                let src = idx - stride;
                acc += dist[src] * self.up[src * m + b];
            }
            if c < self.space.sizes[b] {
                let src = idx + stride;
                acc += dist[src] * self.down[src * m + b];
            }
        }
        acc
    }

    /// One application `dist <- dist P`. Each entry is summed in the same order
    /// regardless of how work is split across threads, so results are bitwise
    /// reproducible.
    pub fn step_into(&self, dist: &[f64], out: &mut [f64]) {
        if self.space.len() * self.space.num_blocks() >= PARALLEL_THRESHOLD {
            out.par_iter_mut()
                .with_min_len(4096)
                .enumerate()
                .for_each(|(idx, o)| *o = self.pull(dist, idx));
        } else {
            for (idx, o) in out.iter_mut().enumerate() {
                *o = self.pull(dist, idx);
            }
        }
    }

    #[cfg(test)]
    pub(crate) fn perturb_up(&mut self, idx: usize, block: usize, delta: f64) {
        let m = self.space.num_blocks();
        self.up[idx * m + block] += delta;
    }
}

/// Probability vector over the lumped state space. Never renormalized; drift of
/// the total mass is reported instead.
#[derive(Clone, Debug, PartialEq)]
pub struct DistVector {
    pub probs: Vec<f64>,
}

impl DistVector {
    pub fn point_mass(space: &StateSpace, state: &MagState) -> Result<Self> {
        let idx = space.index_of(state)?;
        let mut probs = vec![0.0; space.len()];
        probs[idx] = 1.0;
        Ok(Self { probs })
    }

    pub fn mass_drift(&self) -> f64 {
        (self.probs.iter().sum::<f64>() - 1.0).abs()
    }
}

/// `dist P^t`.
pub fn evolve(kernel: &SparseKernel, dist: &DistVector, steps: u64) -> Result<DistVector> {
    if dist.probs.len() != kernel.space.len() {
        return Err(Error::DimensionMismatch { expected: kernel.space.len(), found: dist.probs.len() });
    }
    let mut cur = dist.probs.clone();
    let mut next = vec![0.0; cur.len()];
    for _ in 0..steps {
        kernel.step_into(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(DistVector { probs: cur })
}

/// Half the l1 distance.
pub fn tv_distance(mu: &[f64], nu: &[f64]) -> Result<f64> {
    if mu.len() != nu.len() {
        return Err(Error::DimensionMismatch { expected: mu.len(), found: nu.len() });
    }
    Ok(0.5 * mu.iter().zip(nu).map(|(a, b)| (a - b).abs()).sum::<f64>())
}
