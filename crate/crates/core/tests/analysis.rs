mod common;

use block_ising::analysis::{
    count_minima, critical_drift_audit, cutoff_experiment, free_energy, free_energy_grad, free_energy_hessian,
    mean_field_jacobian, mean_field_map, mean_field_solve, metastability_fit, nonclt_compare, MinimaCount, PointKind,
};
use block_ising::dynamics::RngStream;
use block_ising::kernel::{exact_u_marginal, StateSpace};
use block_ising::model::{lumped_stationary, DEFAULT_STATE_CAP};
use block_ising::spectral::beta_critical;
use block_ising::BlockModel;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn cw(n: usize) -> BlockModel {
    BlockModel::new(n, &[1.0], vec![vec![1.0]]).unwrap()
}

fn random_model(rng: &mut RngStream) -> BlockModel {
    let m = 1 + rng.index(4);
    let sizes: Vec<usize> = (0..m).map(|_| 1 + rng.index(5)).collect();
    let mut k = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in i..m {
            let v = 0.1 + 2.0 * rng.uniform();
            k[i][j] = v;
            k[j][i] = v;
        }
    }
    BlockModel::from_block_sizes(&sizes, k).unwrap()
}

/// Root of `x = tanh(beta x)` in `(0, 1)` by bisection.
fn bisect_curie_weiss(beta: f64) -> f64 {
    let g = |x: f64| x - (beta * x).tanh();
    let (mut lo, mut hi) = (1e-3, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = RngStream::new(41, 0);
    let h = 1e-6;
    for _ in 0..100 {
        let model = random_model(&mut rng);
        let beta = 2.0 * rng.uniform();
        let chi: Vec<f64> = (0..model.num_blocks()).map(|_| 1.8 * rng.uniform() - 0.9).collect();
        let grad = free_energy_grad(&model, beta, &chi).unwrap();
        for i in 0..chi.len() {
            let mut up = chi.clone();
            up[i] += h;
            let mut down = chi.clone();
            down[i] -= h;
            let fd = (free_energy(&model, beta, &up).unwrap() - free_energy(&model, beta, &down).unwrap()) / (2.0 * h);
            assert!((fd - grad[i]).abs() <= 1e-7, "{fd} vs {}", grad[i]);
        }
    }
}

#[test]
fn hessian_matches_differences_of_gradient() {
    let mut rng = RngStream::new(42, 0);
    let h = 1e-6;
    for _ in 0..30 {
        let model = random_model(&mut rng);
        let chi: Vec<f64> = (0..model.num_blocks()).map(|_| 1.6 * rng.uniform() - 0.8).collect();
        let hess = free_energy_hessian(&model, 1.1, &chi).unwrap();
        for j in 0..chi.len() {
            let mut up = chi.clone();
            up[j] += h;
            let mut down = chi.clone();
            down[j] -= h;
            let gu = free_energy_grad(&model, 1.1, &up).unwrap();
            let gd = free_energy_grad(&model, 1.1, &down).unwrap();
            for i in 0..chi.len() {
                assert!(((gu[i] - gd[i]) / (2.0 * h) - hess[(i, j)]).abs() <= 1e-6);
            }
        }
    }
}

#[test]
fn origin_is_entropy_of_fair_coins() {
    let model = BlockModel::new(12, &[0.25, 0.75], vec![vec![1.0, 0.5], vec![0.5, 2.0]]).unwrap();
    let f = free_energy(&model, 0.9, &[0.0, 0.0]).unwrap();
    assert!((f - 2f64.ln()).abs() <= 1e-15);
    assert!(free_energy_grad(&model, 0.9, &[0.0, 0.0]).unwrap().iter().all(|g| *g == 0.0));
    assert!(matches!(free_energy(&model, 0.9, &[1.0, 0.0]), Err(block_ising::Error::BoundaryValue { .. })));
}

#[test]
fn curie_weiss_fixed_point_matches_bisection() {
    let model = cw(128);
    let oracle = bisect_curie_weiss(1.2);
    assert!((oracle - 0.6586).abs() < 1e-4);
    let plus = mean_field_solve(&model, 1.2, &[1.0]).unwrap();
    let minus = mean_field_solve(&model, 1.2, &[-1.0]).unwrap();
    assert!((plus[0] - oracle).abs() <= 1e-9);
    assert!((minus[0] + oracle).abs() <= 1e-9);
}

#[test]
fn minima_count_splits_at_critical_point() {
    let mut rng = RngStream::new(43, 0);
    for _ in 0..20 {
        let model = random_model(&mut rng);
        let bc = beta_critical(&model).unwrap();
        assert_eq!(count_minima(&model, 0.8 * bc).unwrap().minima(), MinimaCount::One);
        let low = count_minima(&model, 1.3 * bc).unwrap();
        assert_eq!(low.stable_count, 2);
        let stable: Vec<&Vec<f64>> = low.points.iter().filter(|p| p.kind == PointKind::Stable).map(|p| &p.chi).collect();
        for (a, b) in stable[0].iter().zip(stable[1]) {
            assert!((a + b).abs() <= 1e-9);
        }
        for p in &low.points {
            let t = mean_field_map(&model, 1.3 * bc, &p.chi);
            assert!(p.chi.iter().zip(&t).all(|(a, b)| (a - b).abs() <= 1e-10));
            assert!(free_energy_grad(&model, 1.3 * bc, &p.chi).unwrap().iter().all(|g| g.abs() <= 1e-9));
        }
    }
    let at = count_minima(&cw(10), 1.0).unwrap();
    assert_eq!(at.minima(), MinimaCount::One);
    assert!(at.degenerate);
}

#[test]
fn high_temperature_solutions_are_zero() {
    let mut rng = RngStream::new(44, 0);
    for _ in 0..20 {
        let model = random_model(&mut rng);
        let beta = 0.9 * beta_critical(&model).unwrap();
        let init: Vec<f64> = (0..model.num_blocks()).map(|_| 2.0 * rng.uniform() - 1.0).collect();
        assert!(mean_field_solve(&model, beta, &init).unwrap().iter().all(|x| x.abs() <= 1e-9));
    }
}

#[test]
fn iteration_rate_at_origin_is_beta_over_critical() {
    let mut rng = RngStream::new(45, 0);
    for _ in 0..20 {
        let model = random_model(&mut rng);
        let bc = beta_critical(&model).unwrap();
        let beta = 0.3 + rng.uniform();
        let j = mean_field_jacobian(&model, beta, &vec![0.0; model.num_blocks()]);
        let m = DMatrix::from_fn(j.dim(), j.dim(), |a, b| j[(a, b)]);
        let rho = m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!((rho - beta / bc).abs() <= 1e-10);
    }
}

#[test]
fn stationary_modes_sit_at_mean_field_magnetization() {
    let n = 128;
    let model = cw(n);
    let pi = lumped_stationary(&model, 1.2).unwrap();
    let space = StateSpace::new(&model, DEFAULT_STATE_CAP).unwrap();
    let chi0 = bisect_curie_weiss(1.2);
    let best = pi.iter().copied().fold(0.0, f64::max);
    let modes: Vec<f64> = (0..pi.len())
        .filter(|&i| pi[i] >= best * (1.0 - 1e-12))
        .map(|i| space.mags_of(i)[0] as f64 / n as f64)
        .collect();
    assert_eq!(modes.len(), 2);
    for s in modes {
        assert!((s.abs() - chi0).abs() <= 4.0 / n as f64, "{s} vs {chi0}");
    }
    let hot = lumped_stationary(&model, 0.6).unwrap();
    let top = (0..hot.len()).max_by(|&a, &b| hot[a].total_cmp(&hot[b])).unwrap();
    assert!(space.mags_of(top)[0].abs() <= 2);
}

#[test]
fn cutoff_profile_at_largest_size() {
    let table = cutoff_experiment(&cw(64), 0.5, &[512], &[-6.0, 0.0, 25.0]).unwrap();
    let d: Vec<f64> = table.rows.iter().map(|r| r.d).collect();
    assert!(d[0] >= 0.6, "{d:?}");
    assert!(d[2] <= 0.15, "{d:?}");
    assert!(d.windows(2).all(|w| w[1] <= w[0]));
    let s = &table.summaries[0];
    assert!((s.t_n - 512.0 * 512f64.ln()).abs() <= 1e-9);
    assert_eq!(s.t_mix_quarter, 3257);
}

#[test]
fn cutoff_rejects_low_temperature() {
    assert!(cutoff_experiment(&cw(64), 1.2, &[64], &[0.0]).is_err());
}

#[test]
fn conductance_and_exit_times_have_opposite_trends() {
    let r = metastability_fit(
        &cw(16),
        1.3,
        &[16, 24, 32, 40],
        Some(block_ising::analysis::MonteCarlo { reps: 101, horizon: 10_000_000, seed: 46 }),
    )
    .unwrap();
    assert!(r.conductance_fit.slope < 0.0);
    assert!(r.exit_fit.unwrap().slope > 0.0);
    assert!(r.conductance.windows(2).all(|w| w[1].phi < w[0].phi));
}

#[test]
fn exact_critical_marginal_is_symmetric() {
    let atoms = exact_u_marginal(&cw(200)).unwrap();
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    assert!((total - 1.0).abs() <= 1e-12);
    let k = atoms.len();
    for i in 0..k {
        assert!((atoms[i].0 + atoms[k - 1 - i].0).abs() <= 1e-12);
        assert!((atoms[i].1 - atoms[k - 1 - i].1).abs() <= 1e-12);
    }
}

#[test]
fn nonclt_distance_shrinks() {
    let small = nonclt_compare(&cw(200)).unwrap();
    let large = nonclt_compare(&cw(800)).unwrap();
    assert!(large.ks < small.ks);
    let mass: f64 = large.bins.iter().map(|b| b.1).sum();
    let limit: f64 = large.bins.iter().map(|b| b.2).sum();
    assert!((mass - 1.0).abs() <= 1e-12 && (limit - 1.0).abs() <= 1e-9);
}

#[test]
fn critical_drift_reaches_band() {
    let model = cw(256);
    let r = critical_drift_audit(&model, 20.0, 5.0, 1).unwrap();
    assert!((r.eta[0] - 1.0).abs() <= 1e-12);
    assert!(r.eta.iter().all(|&e| e >= 0.0));
    assert!(r.reached());
    assert!(r.inverse_fit.unwrap().slope > 0.0);

    let two = BlockModel::new(16, &[0.25, 0.75], vec![vec![1.0, 0.5], vec![0.5, 2.0]]).unwrap();
    let r = critical_drift_audit(&two, 1.0, 5.0, 4).unwrap();
    let expected = 0.25 * (0.25f64 + 0.5 * 0.75).powi(2) + 0.75 * (0.5f64 * 0.25 + 2.0 * 0.75).powi(2);
    assert!((r.eta[0] - expected).abs() <= 1e-12);
}

proptest! {
    #[test]
    fn free_energy_is_even(c1 in -0.99f64..0.99, c2 in -0.99f64..0.99, beta in 0.0f64..3.0) {
        let model = BlockModel::new(12, &[1.0 / 3.0, 2.0 / 3.0], vec![vec![1.0, 0.7], vec![0.7, 0.4]]).unwrap();
        let a = free_energy(&model, beta, &[c1, c2]).unwrap();
        let b = free_energy(&model, beta, &[-c1, -c2]).unwrap();
        prop_assert!((a - b).abs() <= 1e-14);
    }
}
