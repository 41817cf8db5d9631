use std::path::PathBuf;

use block_ising::analysis::{
    count_minima, critical_exponent_fit, cutoff_experiment, median_exit, metastability_fit, nonclt_compare, MonteCarlo,
};
use block_ising::dynamics::{coupling_time, default_horizon, metastable_exit_time, CoupledPair, CouplingStrategy};
use block_ising::kernel::{mixing_time_exact, tv_curve, StartSet};
use block_ising::report::{cell, write_conductance_csv, write_json, write_table, Sidecar};
use block_ising::spectral::{critical_decomposition, regime, SpectralData, REGIME_TOL};
use block_ising::{BlockModel, Error, MagState, SpinConfig};
use serde::Serialize;
use serde_json::json;

use crate::args::*;
use crate::instance::InstanceFile;
use crate::CliError;

/// What a finished command reports back to `main`.
pub struct Outcome {
    pub line: String,
    pub exit_code: i32,
}

impl Outcome {
    fn ok(line: String) -> Self {
        Self { line, exit_code: 0 }
    }
}

/// Instance, model and temperature resolved before any output is written.
struct Setup {
    model: BlockModel,
    beta: Option<f64>,
    beta_cr: f64,
    out: PathBuf,
    seed: u64,
}

fn setup(common: &Common, need_beta: bool) -> Result<Setup, CliError> {
    if let Some(t) = common.threads {
        if t == 0 {
            return Err(CliError::validation("threads: must be positive".into()));
        }
        // A second initialization in the same process is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let file = InstanceFile::load(&common.instance)?;
    let model = file.model(common.n)?;
    let beta_cr = SpectralData::compute(&model, 0.0).map_err(CliError::from)?.beta_cr;
    let beta = match (common.beta, common.beta_frac) {
        (Some(b), None) => Some(b),
        (None, Some(f)) => Some(f * beta_cr),
        (None, None) if need_beta => {
            return Err(CliError::validation("beta: one of --beta or --beta-frac is required".into()))
        }
        _ => None,
    };
    if let Some(b) = beta {
        if !(b.is_finite() && b >= 0.0) {
            return Err(CliError::validation(format!("beta: must be finite and nonnegative, got {b}")));
        }
    }
    Ok(Setup { model, beta, beta_cr, out: common.out.clone(), seed: common.seed })
}

fn argv() -> Vec<String> {
    std::env::args().collect()
}

fn emit<C: Serialize, S: Serialize>(s: &Setup, name: &str, config: &C, summary: S) -> Result<(), CliError> {
    let sidecar = Sidecar::new(argv(), s.seed, s.model.hash(), json!({"resolved_beta": s.beta, "beta_cr": s.beta_cr, "n": s.model.n(), "args": config}), summary);
    write_json(&s.out.join(format!("{name}.json")), &sidecar).map_err(CliError::from)
}

fn csv_path(s: &Setup, name: &str) -> PathBuf {
    s.out.join(format!("{name}.csv"))
}

fn io(e: Error) -> CliError {
    CliError::from(e)
}

pub fn spectral(a: &Plain) -> Result<Outcome, CliError> {
    let s = setup(&a.common, true)?;
    let beta = s.beta.expect("required");
    let data = SpectralData::compute(&s.model, beta).map_err(io)?;
    let reg = regime(&s.model, beta, REGIME_TOL).map_err(io)?;
    let crit = critical_decomposition(&s.model).ok();
    let m = s.model.num_blocks();
    write_table(
        &csv_path(&s, "spectral"),
        &["block", "p", "perron", "eigenvalue"],
        (0..m).map(|i| {
            vec![
                i.to_string(),
                s.model.proportions()[i].to_string(),
                data.perron_left[i].to_string(),
                data.eigenvalues[i].to_string(),
            ]
        }),
    )
    .map_err(io)?;
    emit(&s, "spectral", a, json!({"spectral": data, "regime": reg, "critical": crit}))?;
    let alpha = data.alpha.map(|x| x.to_string()).unwrap_or_else(|| "none".into());
    Ok(Outcome::ok(format!(
        "beta_cr={} alpha={} rho_n={} regime={:?}",
        data.beta_cr, alpha, data.rho_n, reg.regime
    )))
}

fn parse_mags(model: &BlockModel, text: &str) -> Result<MagState, CliError> {
    let mags = text
        .split(',')
        .map(|x| x.trim().parse::<i64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::validation(format!("start: {e}")))?;
    MagState::new(model, mags).map_err(|e| CliError::validation(format!("start: {e}")))
}

pub fn tv(a: &TvCurveArgs) -> Result<Outcome, CliError> {
    let s = setup(&a.common, true)?;
    if a.stride == 0 {
        return Err(CliError::validation("stride: must be positive".into()));
    }
    let start = match &a.start {
        Some(t) => parse_mags(&s.model, t)?,
        None => MagState::corners(&s.model)[0].clone(),
    };
    let curve = tv_curve(&s.model, s.beta.expect("required"), &start, a.t_max, a.stride).map_err(io)?;
    curve.write_csv(&csv_path(&s, "tv_curve")).map_err(io)?;
    let last = *curve.distances.last().expect("nonempty");
    emit(
        &s,
        "tv_curve",
        a,
        json!({"start": curve.start, "stride": curve.stride, "final_distance": last, "mass_drift": curve.mass_drift, "monotonicity_violations": curve.monotonicity_violations}),
    )?;
    Ok(Outcome::ok(format!("t={} d={last}", a.t_max)))
}

pub fn mixing(a: &MixingArgs) -> Result<Outcome, CliError> {
    let s = setup(&a.common, true)?;
    let starts = match a.starts {
        Starts::Corners => StartSet::Corners,
        Starts::Exhaustive => StartSet::Exhaustive,
    };
    let r = mixing_time_exact(&s.model, s.beta.expect("required"), a.eps, &starts, a.ceiling).map_err(io)?;
    write_table(
        &csv_path(&s, "mixing"),
        &["start", "t_mix"],
        r.per_start.iter().map(|(st, t)| vec![join_mags(st), t.to_string()]),
    )
    .map_err(io)?;
    emit(&s, "mixing", a, json!({"epsilon": r.epsilon, "t_mix": r.t_mix, "worst_start": r.worst_start}))?;
    Ok(Outcome::ok(format!("t_mix={}", r.t_mix)))
}

fn join_mags(m: &MagState) -> String {
    m.mags().iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

pub fn cutoff(a: &CutoffArgs) -> Result<Outcome, CliError> {
    let s = setup(&a.common, true)?;
    let frac = s.beta.expect("required") / s.beta_cr;
    if frac >= 1.0 {
        return Err(CliError::validation(format!("beta: cutoff needs beta below beta_cr = {}", s.beta_cr)));
    }
    validate_n_list(&s.model, &a.n_list)?;
    let table = cutoff_experiment(&s.model, frac, &a.n_list, &a.gamma_list).map_err(io)?;
    write_table(
        &csv_path(&s, "cutoff"),
        &["n", "gamma", "t", "d"],
        table.rows.iter().map(|r| vec![r.n.to_string(), r.gamma.to_string(), r.t.to_string(), r.d.to_string()]),
    )
    .map_err(io)?;
    emit(&s, "cutoff", a, json!({"beta_frac": frac, "summaries": table.summaries}))?;
    let ratios: Vec<String> = table.summaries.iter().map(|x| format!("{}:{:.3}", x.n, x.ratio)).collect();
    Ok(Outcome::ok(format!("t_mix/(n ln n) {}", ratios.join(" "))))
}

fn validate_n_list(model: &BlockModel, n_list: &[usize]) -> Result<(), CliError> {
    if n_list.len() < 2 {
        return Err(CliError::validation("n-list: needs at least two sizes".into()));
    }
    for &n in n_list {
        model.with_n(n).map_err(|e| CliError::validation(format!("n-list: n = {n}: {e}")))?;
    }
    Ok(())
}

pub fn critical(a: &CriticalArgs) -> Result<Outcome, CliError> {
    let s = setup(&a.common, false)?;
    validate_n_list(&s.model, &a.n_list)?;
    let (fit, times) = critical_exponent_fit(&s.model, &a.n_list).map_err(io)?;
    write_table(
        &csv_path(&s, "critical"),
        &["n", "t_mix"],
        a.n_list.iter().zip(&times).map(|(n, t)| vec![n.to_string(), t.to_string()]),
    )
    .map_err(io)?;
    emit(&s, "critical", a, json!({"fit": fit}))?;
    Ok(Outcome::ok(format!("slope={:.4} r2={:.6}", fit.slope, fit.r2)))
}

pub fn metastable(a: &MetastableArgs) -> Result<Outcome, CliError> {
    let s = setup(&a.common, true)?;
    validate_n_list(&s.model, &a.n_list)?;
    let mc = (a.replicas > 0).then_some(MonteCarlo { reps: a.replicas, horizon: a.horizon, seed: s.seed });
    let r = metastability_fit(&s.model, s.beta.expect("required"), &a.n_list, mc).map_err(io)?;
    write_conductance_csv(&csv_path(&s, "conductance"), &r.conductance).map_err(io)?;
    write_table(
        &csv_path(&s, "exit_medians"),
        &["n", "median_tau", "censored_fraction"],
        r.exits.iter().map(|e| vec![e.n.to_string(), e.median.to_string(), e.censored_fraction.to_string()]),
    )
    .map_err(io)?;
    let dominated = r.exits.iter().any(|e| e.censored_fraction > 0.5);
    emit(&s, "metastable", a, &r)?;
    let exit_slope = r.exit_fit.as_ref().map(|f| format!("{:.4}", f.slope)).unwrap_or_else(|| "none".into());
    Ok(Outcome {
        line: format!("conductance_slope={:.5} exit_slope={exit_slope}", r.conductance_fit.slope),
        exit_code: if dominated { 3 } else { 0 },
    })
}

pub fn nonclt(a: &Plain) -> Result<Outcome, CliError> {
    let s = setup(&a.common, false)?;
    let r = nonclt_compare(&s.model).map_err(io)?;
    write_table(
        &csv_path(&s, "nonclt"),
        &["bin_lower", "exact_mass", "limit_mass"],
        r.bins.iter().map(|(l, e, q)| vec![l.to_string(), e.to_string(), q.to_string()]),
    )
    .map_err(io)?;
    emit(
        &s,
        "nonclt",
        a,
        json!({"n": r.n, "ks": r.ks, "binned_tv": r.binned_tv, "normalizer": r.normalizer, "quartic_coefficient": r.quartic_coefficient}),
    )?;
    Ok(Outcome::ok(format!("ks={:.6} binned_tv={:.6} Z={:.9}", r.ks, r.binned_tv, r.normalizer)))
}

pub fn landscape(a: &Plain) -> Result<Outcome, CliError> {
    let s = setup(&a.common, true)?;
    let l = count_minima(&s.model, s.beta.expect("required")).map_err(io)?;
    let rows = l.points.iter().enumerate().flat_map(|(i, p)| {
        let kind = serde_json::to_value(p.kind).expect("serializes").as_str().unwrap_or_default().to_string();
        p.chi
            .iter()
            .enumerate()
            .map(move |(b, c)| vec![i.to_string(), b.to_string(), c.to_string(), kind.clone()])
            .collect::<Vec<_>>()
    });
    write_table(&csv_path(&s, "landscape"), &["point", "block", "chi", "kind"], rows).map_err(io)?;
    emit(&s, "landscape", a, &l)?;
    Ok(Outcome::ok(format!("stable_states={} degenerate={}", l.stable_count, l.degenerate)))
}

fn median(v: &mut [u64]) -> Option<u64> {
    v.sort_unstable();
    (!v.is_empty()).then(|| v[(v.len() - 1) / 2])
}

pub fn couple(a: &CoupleArgs) -> Result<Outcome, CliError> {
    let s = setup(&a.common, true)?;
    let beta = s.beta.expect("required");
    let reg = regime(&s.model, beta, REGIME_TOL).map_err(io)?;
    let horizon = match a.horizon.or_else(|| default_horizon(reg.regime, s.model.n())) {
        Some(h) => h,
        None => return Err(CliError::validation("horizon: required below the critical temperature".into())),
    };
    let start = CoupledPair { x: SpinConfig::all_plus(&s.model), y: SpinConfig::all_minus(&s.model) };
    let strategy = match a.mode {
        Strategy::Monotone => CouplingStrategy::Monotone,
        Strategy::TwoPhase => CouplingStrategy::TwoPhase,
    };
    let samples = coupling_time(&s.model, beta, &start, strategy, a.replicas, horizon, s.seed).map_err(io)?;
    write_table(
        &csv_path(&s, "couple"),
        &["replica", "tau_mag", "tau_full", "censored"],
        samples.iter().map(|x| vec![x.replica.to_string(), cell(x.tau_mag), cell(x.tau_full), x.censored().to_string()]),
    )
    .map_err(io)?;
    let censored = samples.iter().filter(|x| x.censored()).count() as f64 / samples.len().max(1) as f64;
    let med_mag = median(&mut samples.iter().map(|x| x.tau_mag.unwrap_or(horizon)).collect::<Vec<_>>());
    let med_full = median(&mut samples.iter().map(|x| x.tau_full.unwrap_or(horizon)).collect::<Vec<_>>());
    emit(
        &s,
        "couple",
        a,
        json!({"horizon": horizon, "median_tau_mag": med_mag, "median_tau_full": med_full, "censored_fraction": censored}),
    )?;
    Ok(Outcome {
        line: format!("median_tau_mag={} median_tau_full={} censored={censored:.3}", cell(med_mag), cell(med_full)),
        exit_code: if censored > 0.5 { 3 } else { 0 },
    })
}

pub fn exit_time(a: &ExitArgs) -> Result<Outcome, CliError> {
    let s = setup(&a.common, true)?;
    let beta = s.beta.expect("required");
    if a.replicas == 0 {
        return Err(CliError::validation("replicas: must be positive".into()));
    }
    let samples = metastable_exit_time(&s.model, beta, a.replicas, a.horizon, s.seed).map_err(io)?;
    write_table(
        &csv_path(&s, "exit_time"),
        &["replica", "tau", "censored"],
        samples.iter().map(|x| vec![x.replica.to_string(), x.tau.to_string(), x.censored.to_string()]),
    )
    .map_err(io)?;
    let censored = samples.iter().filter(|x| x.censored).count() as f64 / samples.len() as f64;
    let med = median_exit(&samples);
    emit(&s, "exit_time", a, json!({"horizon": a.horizon, "median_tau": med, "censored_fraction": censored}))?;
    Ok(Outcome { line: format!("median_tau={med} censored={censored:.3}"), exit_code: if censored > 0.5 { 3 } else { 0 } })
}

