use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{metastable_exit_time, ExitSample};
use crate::error::{Error, Result};
use crate::kernel::{build_kernel, conductance, exact_u_marginal, mixing_time_exact, perron_cut, tv_distance, ConductanceResult, DistVector, StartSet};
use crate::linalg::linear_fit;
use crate::model::{lumped_stationary, BlockModel, MagState};
use crate::spectral::{critical_decomposition, regime, SpectralData, REGIME_TOL};

/// Least-squares line through `(x, y)`.
#[derive(Clone, Debug, Serialize)]
pub struct FitResult {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

impl FitResult {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() < 2 || x.len() != y.len() {
            return Err(Error::InvalidArgument("a fit needs at least two points".into()));
        }
        let (slope, intercept, r2) = linear_fit(&x, &y);
        Ok(Self { x, y, slope, intercept, r2 })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CutoffRow {
    pub n: usize,
    pub gamma: f64,
    pub t: u64,
    pub d: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CutoffSummary {
    pub n: usize,
    /// `alpha n ln n`.
    pub t_n: f64,
    pub t_mix_quarter: u64,
    /// `t_mix(1/4) / (n ln n)`.
    pub ratio: f64,
    /// First time the distance is at most 3/4.
    pub t_three_quarter: u64,
    /// `t_mix(1/4) - t_mix(3/4)`.
    pub window: u64,
    pub window_over_n: f64,
    pub window_over_n_log_n: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CutoffTable {
    pub beta_frac: f64,
    pub rows: Vec<CutoffRow>,
    pub summaries: Vec<CutoffSummary>,
}

/// Worst-corner distance profile `d_n(t)` until both `t >= t_end` and `d <= 1/4`.
fn corner_profile(model: &BlockModel, beta: f64, t_end: u64) -> Result<Vec<f64>> {
    let kernel = build_kernel(model, beta)?;
    let pi = lumped_stationary(model, beta)?;
    let mut dists: Vec<Vec<f64>> = MagState::corners(model)
        .iter()
        .map(|c| DistVector::point_mass(kernel.space(), c).map(|d| d.probs))
        .collect::<Result<_>>()?;
    let mut scratch = vec![0.0; pi.len()];
    let worst = |ds: &[Vec<f64>]| -> Result<f64> {
        ds.iter().map(|d| tv_distance(d, &pi)).try_fold(0.0f64, |a, d| Ok(a.max(d?)))
    };
    let mut profile = vec![worst(&dists)?];
    let mut t = 0;
    while t < t_end || *profile.last().expect("nonempty") > 0.25 {
        for d in dists.iter_mut() {
            kernel.step_into(d, &mut scratch);
            std::mem::swap(d, &mut scratch);
        }
        t += 1;
        profile.push(worst(&dists)?);
    }
    Ok(profile)
}

/// `d_n(t_n + gamma n)` over `gamma_list` for each `n`, from corner starts, at `beta = beta_frac * beta_cr`.
pub fn cutoff_experiment(family: &BlockModel, beta_frac: f64, n_list: &[usize], gamma_list: &[f64]) -> Result<CutoffTable> {
    if !(0.0..1.0).contains(&beta_frac) {
        return Err(Error::InvalidArgument(format!("cutoff needs 0 <= beta_frac < 1, got {beta_frac}")));
    }
    let gamma_max = gamma_list.iter().copied().fold(0.0f64, f64::max);
    let per_n: Vec<(Vec<CutoffRow>, CutoffSummary)> = n_list
        .par_iter()
        .map(|&n| {
            let model = family.with_n(n)?;
            let spectral_data = SpectralData::compute(&model, 0.0)?;
            let beta = beta_frac * spectral_data.beta_cr;
            let spectral_data = SpectralData::compute(&model, beta)?;
            let t_n = spectral_data.cutoff_location(n)?;
            let t_end = (t_n + gamma_max * n as f64).ceil().max(0.0) as u64;
            let profile = corner_profile(&model, beta, t_end)?;
            let rows = gamma_list
                .iter()
                .map(|&gamma| {
                    let t = (t_n + gamma * n as f64).round().max(0.0) as u64;
                    CutoffRow { n, gamma, t, d: profile[t as usize] }
                })
                .collect();
            let first = |eps: f64| profile.iter().position(|&d| d <= eps).expect("profile reaches 1/4") as u64;
            let t_mix_quarter = first(0.25);
            let t_three_quarter = first(0.75);
            let window = t_mix_quarter - t_three_quarter;
            let nf = n as f64;
            Ok((
                rows,
                CutoffSummary {
                    n,
                    t_n,
                    t_mix_quarter,
                    ratio: t_mix_quarter as f64 / (nf * nf.ln()),
                    t_three_quarter,
                    window,
                    window_over_n: window as f64 / nf,
                    window_over_n_log_n: window as f64 / (nf * nf.ln()),
                },
            ))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for (r, s) in per_n {
        rows.extend(r);
        summaries.push(s);
    }
    Ok(CutoffTable { beta_frac, rows, summaries })
}

/// Log-log fit of exact `t_mix(eps)` against `n` at `beta = beta_frac * beta_cr`.
pub fn scaling_exponent_fit(family: &BlockModel, beta_frac: f64, n_list: &[usize], eps: f64, ceiling: u64) -> Result<(FitResult, Vec<u64>)> {
    let times: Vec<u64> = n_list
        .par_iter()
        .map(|&n| {
            let model = family.with_n(n)?;
            let beta = beta_frac * SpectralData::compute(&model, 0.0)?.beta_cr;
            Ok(mixing_time_exact(&model, beta, eps, &StartSet::Corners, ceiling)?.t_mix)
        })
        .collect::<Result<_>>()?;
    let x = n_list.iter().map(|&n| (n as f64).ln()).collect();
    let y = times.iter().map(|&t| (t as f64).ln()).collect();
    Ok((FitResult::new(x, y)?, times))
}

/// Log-log fit of exact `t_mix(1/4)` against `n` at the critical temperature.
pub fn critical_exponent_fit(family: &BlockModel, n_list: &[usize]) -> Result<(FitResult, Vec<u64>)> {
    let report = regime(family, 0.0, REGIME_TOL)?;
    if !report.k_positive_definite {
        let min = crate::linalg::jacobi_eigen(family.interactions())?.values[0];
        return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
    }
    scaling_exponent_fit(family, 1.0, n_list, 0.25, u64::MAX / 4)
}

/// Replica settings for Monte Carlo parts of an experiment.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MonteCarlo {
    pub reps: u64,
    pub horizon: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExitSummary {
    pub n: usize,
    pub median: u64,
    pub censored_fraction: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MetastabilityReport {
    pub beta: f64,
    pub conductance: Vec<ConductanceResult>,
    /// `ln phi` against `n`.
    pub conductance_fit: FitResult,
    pub exits: Vec<ExitSummary>,
    /// `ln median exit time` against `n`.
    pub exit_fit: Option<FitResult>,
}

/// Lower median of the exit times; censored samples enter at the horizon.
pub fn median_exit(samples: &[ExitSample]) -> u64 {
    let mut t: Vec<u64> = samples.iter().map(|s| s.tau).collect();
    t.sort_unstable();
    t[(t.len() - 1) / 2]
}

/// Exact conductance decay across the Perron cut, and optionally Monte Carlo exit times.
pub fn metastability_fit(family: &BlockModel, beta: f64, n_list: &[usize], mc: Option<MonteCarlo>) -> Result<MetastabilityReport> {
    let conductance: Vec<ConductanceResult> = n_list
        .par_iter()
        .map(|&n| {
            let model = family.with_n(n)?;
            conductance(&model, beta, perron_cut(&model)?)
        })
        .collect::<Result<_>>()?;
    let x: Vec<f64> = n_list.iter().map(|&n| n as f64).collect();
    let conductance_fit = FitResult::new(x.clone(), conductance.iter().map(|c| c.phi.ln()).collect())?;
    let (exits, exit_fit) = match mc {
        None => (Vec::new(), None),
        Some(mc) => {
            let exits: Vec<ExitSummary> = n_list
                .iter()
                .map(|&n| {
                    let model = family.with_n(n)?;
                    let s = metastable_exit_time(&model, beta, mc.reps, mc.horizon, mc.seed)?;
                    let censored = s.iter().filter(|e| e.censored).count();
                    Ok(ExitSummary { n, median: median_exit(&s), censored_fraction: censored as f64 / s.len() as f64 })
                })
                .collect::<Result<_>>()?;
            let y = exits.iter().map(|e| (e.median as f64).ln()).collect();
            (exits, Some(FitResult::new(x, y)?))
        }
    };
    Ok(MetastabilityReport { beta, conductance, conductance_fit, exits, exit_fit })
}

#[derive(Clone, Debug, Serialize)]
pub struct NonCltReport {
    pub n: usize,
    pub quartic_coefficient: f64,
    pub normalizer: f64,
    pub ks: f64,
    pub binned_tv: f64,
    /// `(lower edge, exact mass, limit mass)` for each bin; the first and last bins are the open tails.
    pub bins: Vec<(f64, f64, f64)>,
}

pub const BIN_WIDTH: f64 = 0.1;
pub const BIN_RANGE: f64 = 5.0;

/// Distance between the exact law of the rescaled top coordinate at the critical
/// temperature and its quartic limit law.
pub fn nonclt_compare(model: &BlockModel) -> Result<NonCltReport> {
    let crit = critical_decomposition(model)?;
    let atoms = exact_u_marginal(model)?;
    let c4 = crit.quartic_coefficient;
    let density = |x: f64| (-c4 * x.powi(4)).exp() / crit.normalizer;

    // Limit CDF at each atom, accumulated left to right so it is monotone.
    let mut limit_cdf = Vec::with_capacity(atoms.len());
    let mut prev_u = atoms[0].0;
    let mut acc = crit.limit_cdf(prev_u)?;
    for &(u, _) in &atoms {
        acc += crate::quadrature::adaptive_simpson(&density, prev_u, u, 1e-15)?;
        limit_cdf.push(acc);
        prev_u = u;
    }
    let mut ks: f64 = 0.0;
    let mut below = 0.0;
    for (k, &(_, w)) in atoms.iter().enumerate() {
        let at = below + w;
        ks = ks.max((below - limit_cdf[k]).abs()).max((at - limit_cdf[k]).abs());
        below = at;
    }

    let bins_inside = (2.0 * BIN_RANGE / BIN_WIDTH).round() as usize;
    let edges: Vec<f64> = (0..=bins_inside).map(|j| -BIN_RANGE + j as f64 * BIN_WIDTH).collect();
    let mut exact = vec![0.0; bins_inside + 2];
    for &(u, w) in &atoms {
        let slot = if u < -BIN_RANGE {
            0
        } else if u >= BIN_RANGE {
            bins_inside + 1
        } else {
            (edges.partition_point(|&e| e <= u)).clamp(1, bins_inside)
        };
        exact[slot] += w;
    }
    let mut cdf_at_edges = Vec::with_capacity(edges.len());
    for &e in &edges {
        cdf_at_edges.push(crit.limit_cdf(e)?);
    }
    let mut limit = vec![0.0; bins_inside + 2];
    limit[0] = cdf_at_edges[0];
    for j in 0..bins_inside {
        limit[j + 1] = cdf_at_edges[j + 1] - cdf_at_edges[j];
    }
    limit[bins_inside + 1] = 1.0 - cdf_at_edges[bins_inside];
    let binned_tv = 0.5 * exact.iter().zip(&limit).map(|(a, b)| (a - b).abs()).sum::<f64>();
    let bins = (0..bins_inside + 2)
        .map(|j| {
            let lower = if j == 0 { f64::NEG_INFINITY } else { edges[j - 1] };
            (lower, exact[j], limit[j])
        })
        .collect();
    Ok(NonCltReport { n: model.n(), quartic_coefficient: c4, normalizer: crit.normalizer, ks, binned_tv, bins })
}

/// `eta = sum_i p_i (E|X_i|)^2` from per-block mean absolute fields.
pub fn eta_from_moments(model: &BlockModel, mean_abs_field: &[f64]) -> f64 {
    model.proportions().iter().zip(mean_abs_field).map(|(p, x)| p * x * x).sum()
}

#[derive(Clone, Debug, Serialize)]
pub struct DriftReport {
    pub n: usize,
    pub times: Vec<u64>,
    pub eta: Vec<f64>,
    /// Fit of `1/eta` against `t/n` over the samples above the band; its slope estimates the decay rate.
    pub inverse_fit: Option<FitResult>,
    /// `c1 / sqrt(n)`.
    pub band: f64,
    /// `horizon_factor * n^{3/2}`.
    pub horizon: u64,
    pub reach_time: Option<u64>,
}

impl DriftReport {
    pub fn reached(&self) -> bool {
        self.reach_time.is_some_and(|t| t <= self.horizon)
    }
}

/// Evolves the exact lumped law from all-plus at the critical temperature and
/// tracks `eta_t` until it enters the band `c1 n^{-1/2}` or the horizon passes.
pub fn critical_drift_audit(model: &BlockModel, horizon_factor: f64, band_const: f64, stride: u64) -> Result<DriftReport> {
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be positive".into()));
    }
    let beta = SpectralData::compute(model, 0.0)?.beta_cr;
    let kernel = build_kernel(model, beta)?;
    let space = kernel.space().clone();
    let n = model.n();
    let nf = n as f64;
    let m = model.num_blocks();
    let abs_fields: Vec<Vec<f64>> = (0..space.len())
        .map(|i| {
            let s: Vec<i64> = space.mags_of(i);
            model.block_fields(&s).into_iter().map(f64::abs).collect()
        })
        .collect();
    let eta_of = |d: &[f64]| -> f64 {
        let mut means = vec![0.0; m];
        for (w, xs) in d.iter().zip(&abs_fields) {
            for b in 0..m {
                means[b] += w * xs[b];
            }
        }
        eta_from_moments(model, &means)
    };
    let band = band_const / nf.sqrt();
    let horizon = (horizon_factor * nf.powf(1.5)).ceil() as u64;
    let mut dist = DistVector::point_mass(&space, &MagState::corners(model)[0])?.probs;
    let mut scratch = vec![0.0; dist.len()];
    let mut times = vec![0];
    let mut eta = vec![eta_of(&dist)];
    let mut reach_time = (eta[0] <= band).then_some(0);
    let mut t = 0;
    while reach_time.is_none() && t < horizon {
        for _ in 0..stride {
            kernel.step_into(&dist, &mut scratch);
            std::mem::swap(&mut dist, &mut scratch);
        }
        t += stride;
        let e = eta_of(&dist);
        times.push(t);
        eta.push(e);
        if e <= band {
            reach_time = Some(t);
        }
    }
    let fit_points: Vec<(f64, f64)> = times
        .iter()
        .zip(&eta)
        .filter(|(_, &e)| e > band)
        .map(|(&t, &e)| (t as f64 / nf, 1.0 / e))
        .collect();
    let inverse_fit = (fit_points.len() >= 2)
        .then(|| FitResult::new(fit_points.iter().map(|p| p.0).collect(), fit_points.iter().map(|p| p.1).collect()))
        .transpose()?;
    Ok(DriftReport { n, times, eta, inverse_fit, band, horizon, reach_time })
}
