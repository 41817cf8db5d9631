use serde::Serialize;

use super::{build_kernel, tv_distance, DistVector, SparseKernel};
use crate::error::{Error, Result};
use crate::model::{lumped_stationary, BlockModel, MagState};

/// Starting states over which the worst-case distance is taken.
#[derive(Clone, Debug)]
pub enum StartSet {
    /// The `2^m` fully aligned corners. Exact for one block by monotonicity;
    /// a heuristic for several blocks.
    Corners,
    /// Every lumped state. Only sensible for small n.
    Exhaustive,
    Explicit(Vec<MagState>),
}

impl StartSet {
    pub fn states(&self, model: &BlockModel) -> Result<Vec<MagState>> {
        match self {
            StartSet::Corners => Ok(MagState::corners(model)),
            StartSet::Exhaustive => {
                let space = super::StateSpace::new(model, crate::model::DEFAULT_STATE_CAP)?;
                Ok((0..space.len()).map(|i| space.state_of(i)).collect())
            }
            StartSet::Explicit(v) => {
                for s in v {
                    s.check(model)?;
                }
                Ok(v.clone())
            }
        }
    }
}

/// `d(t) = ||delta_start P^t - pi||_TV` sampled every `stride` steps.
#[derive(Clone, Debug, Serialize)]
pub struct TvCurve {
    pub model_hash: String,
    pub beta: f64,
    pub start: MagState,
    pub stride: u64,
    pub times: Vec<u64>,
    pub distances: Vec<f64>,
    /// Largest deviation of total mass from 1 seen along the run.
    pub mass_drift: f64,
    /// Sample indices where the distance increased by more than `1e-12`.
    pub monotonicity_violations: Vec<usize>,
}

pub fn tv_curve(model: &BlockModel, beta: f64, start: &MagState, t_max: u64, stride: u64) -> Result<TvCurve> {
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be positive".into()));
    }
    let kernel = build_kernel(model, beta)?;
    let pi = lumped_stationary(model, beta)?;
    tv_curve_with(&kernel, &pi, model, start, t_max, stride)
}

pub(crate) fn tv_curve_with(
    kernel: &SparseKernel,
    pi: &[f64],
    model: &BlockModel,
    start: &MagState,
    t_max: u64,
    stride: u64,
) -> Result<TvCurve> {
    let mut dist = DistVector::point_mass(kernel.space(), start)?;
    let mut next = vec![0.0; dist.probs.len()];
    let mut times = vec![0];
    let mut distances = vec![tv_distance(&dist.probs, pi)?];
    let mut mass_drift: f64 = 0.0;
    let mut t = 0;
    while t < t_max {
        let chunk = stride.min(t_max - t);
        for _ in 0..chunk {
            kernel.step_into(&dist.probs, &mut next);
            std::mem::swap(&mut dist.probs, &mut next);
        }
        t += chunk;
        mass_drift = mass_drift.max(dist.mass_drift());
        times.push(t);
        distances.push(tv_distance(&dist.probs, pi)?);
    }
    let monotonicity_violations = distances
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] > w[0] + 1e-12)
        .map(|(i, _)| i + 1)
        .collect();
    Ok(TvCurve {
        model_hash: model.hash(),
        beta: kernel.beta(),
        start: start.clone(),
        stride,
        times,
        distances,
        mass_drift,
        monotonicity_violations,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MixingResult {
    pub epsilon: f64,
    pub t_mix: u64,
    /// Start attaining the maximum.
    pub worst_start: MagState,
    pub per_start: Vec<(MagState, u64)>,
}

/// `t_mix(eps) = min { t : max over starts of d(t) <= eps }` by doubling then bisection.
pub fn mixing_time_exact(
    model: &BlockModel,
    beta: f64,
    eps: f64,
    starts: &StartSet,
    ceiling: u64,
) -> Result<MixingResult> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1], got {eps}")));
    }
    let kernel = build_kernel(model, beta)?;
    let pi = lumped_stationary(model, beta)?;
    let mut per_start = Vec::new();
    for s in starts.states(model)? {
        let t = first_hit(&kernel, &pi, &s, eps, ceiling)?;
        per_start.push((s, t));
    }
    let (worst_start, t_mix) = per_start
        .iter()
        .max_by_key(|(_, t)| *t)
        .cloned()
        .ok_or_else(|| Error::InvalidArgument("empty start set".into()))?;
    Ok(MixingResult { epsilon: eps, t_mix, worst_start, per_start })
}

fn advance(kernel: &SparseKernel, dist: &mut Vec<f64>, scratch: &mut Vec<f64>, steps: u64) {
    for _ in 0..steps {
        kernel.step_into(dist, scratch);
        std::mem::swap(dist, scratch);
    }
}

/// First `t` with `d(t) <= eps` for one start, assuming `d` is nonincreasing.
fn first_hit(kernel: &SparseKernel, pi: &[f64], start: &MagState, eps: f64, ceiling: u64) -> Result<u64> {
    let mut lo_dist = DistVector::point_mass(kernel.space(), start)?.probs;
    if tv_distance(&lo_dist, pi)? <= eps {
        return Ok(0);
    }
    let mut scratch = vec![0.0; lo_dist.len()];
    // Doubling: lo holds the last time known to be above eps.
    let mut lo = 0u64;
    let mut hi = 1u64;
    loop {
        let mut probe = lo_dist.clone();
        advance(kernel, &mut probe, &mut scratch, hi - lo);
        if tv_distance(&probe, pi)? <= eps {
            break;
        }
        if hi >= ceiling {
            return Err(Error::NotConverged { ceiling });
        }
        lo = hi;
        lo_dist = probe;
        hi = (hi * 2).min(ceiling);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let mut probe = lo_dist.clone();
        advance(kernel, &mut probe, &mut scratch, mid - lo);
        if tv_distance(&probe, pi)? <= eps {
            hi = mid;
        } else {
            lo = mid;
            lo_dist = probe;
        }
    }
    Ok(hi)
}
