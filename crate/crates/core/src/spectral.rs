//! Interaction spectrum: Perron data, critical temperature, regime and the
//! critical eigen-decomposition with its quartic limit law.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{jacobi_eigen, Matrix};
use crate::model::BlockModel;
use crate::quadrature::adaptive_simpson;

const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITERS: u64 = 1_000_000;
/// Default width of the band around the critical point classified as critical.
pub const REGIME_TOL: f64 = 1e-9;

/// `B = diag(p) K`.
pub fn interaction_product(model: &BlockModel) -> Matrix {
    Matrix::diag(model.proportions()).matmul(model.interactions())
}

/// `Q = (1 - 1/n) I + (beta/n) B`.
pub fn contraction_matrix(model: &BlockModel, beta: f64) -> Matrix {
    let n = model.n() as f64;
    let m = model.num_blocks();
    Matrix::identity(m).scale(1.0 - 1.0 / n).add(&interaction_product(model).scale(beta / n))
}

/// Symmetric conjugate `diag(sqrt p) K diag(sqrt p)` of `B`.
pub fn symmetric_conjugate(p: &[f64], k: &Matrix) -> Matrix {
    let d = Matrix::diag(&p.iter().map(|x| x.sqrt()).collect::<Vec<_>>());
    d.matmul(k).matmul(&d)
}

/// Left Perron vector of `B = diag(p) K`, normalized to unit l1 norm, and its eigenvalue.
///
/// Power iteration runs on the shifted symmetric conjugate `X + I`, which keeps the
/// Perron root strictly dominant even for bipartite interaction patterns.
pub fn perron_left(p: &[f64], k: &Matrix) -> Result<(Vec<f64>, f64)> {
    let m = p.len();
    if k.dim() != m {
        return Err(Error::DimensionMismatch { expected: m, found: k.dim() });
    }
    if k.is_symmetric(1e-14).is_some() || p.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidArgument("perron_left needs positive p and symmetric K".into()));
    }
    if !irreducible(k) {
        return Err(Error::ReducibleMatrix);
    }
    let x = symmetric_conjugate(p, k);
    let mut v = vec![1.0 / (m as f64).sqrt(); m];
    let mut lambda = 0.0;
    let mut converged = false;
    let mut iters = 0;
    while iters < POWER_MAX_ITERS {
        iters += 1;
        let xv = x.matvec(&v);
        lambda = v.iter().zip(&xv).map(|(a, b)| a * b).sum::<f64>();
        let resid = xv.iter().zip(&v).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
        if resid <= POWER_TOL * lambda.abs() {
            converged = true;
            break;
        }
        let mut w: Vec<f64> = xv.iter().zip(&v).map(|(a, b)| a + b).collect();
        let norm = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        w.iter_mut().for_each(|a| *a /= norm);
        v = w;
    }
    if !converged {
        return Err(Error::NoConvergence { what: "Perron power iteration", iterations: iters });
    }
    let mut a: Vec<f64> = v.iter().zip(p).map(|(x, q)| x / q.sqrt()).collect();
    let l1: f64 = a.iter().map(|x| x.abs()).sum();
    a.iter_mut().for_each(|x| *x = x.abs() / l1);
    Ok((a, lambda))
}

fn irreducible(k: &Matrix) -> bool {
    let m = k.dim();
    if m == 1 {
        return k[(0, 0)] > 0.0;
    }
    let mut seen = vec![false; m];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..m {
            if !seen[j] && k[(i, j)] > 0.0 {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// `beta_cr = 1 / sum_ij a_i p_i k_ij`, cross-checked against `1 / lambda_max(B)`.
pub fn beta_critical(model: &BlockModel) -> Result<f64> {
    let (a, lambda) = perron_left(model.proportions(), model.interactions())?;
    let b = interaction_product(model);
    let m = model.num_blocks();
    let mut s = 0.0;
    for i in 0..m {
        for j in 0..m {
            s += a[i] * b[(i, j)];
        }
    }
    if (s - lambda).abs() > 1e-10 * lambda {
        return Err(Error::NoConvergence { what: "critical temperature cross-check", iterations: 0 });
    }
    Ok(1.0 / s)
}

/// Temperature regime relative to the critical point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    High,
    Critical,
    Low,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegimeReport {
    pub regime: Regime,
    pub beta: f64,
    pub beta_cr: f64,
    /// Whether `K` itself is positive definite, which the critical analysis requires.
    pub k_positive_definite: bool,
}

pub fn regime(model: &BlockModel, beta: f64, tol: f64) -> Result<RegimeReport> {
    let beta_cr = beta_critical(model)?;
    let regime = if (beta - beta_cr).abs() <= tol {
        Regime::Critical
    } else if beta < beta_cr {
        Regime::High
    } else {
        Regime::Low
    };
    let eig = jacobi_eigen(model.interactions())?;
    Ok(RegimeReport { regime, beta, beta_cr, k_positive_definite: eig.values[0] > 0.0 })
}

/// Everything the spectral layer knows about one `(model, beta)` pair.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralData {
    pub beta: f64,
    pub b: Matrix,
    pub q: Matrix,
    /// Largest eigenvalue of `Q`, `1 - (1 - beta/beta_cr)/n`.
    pub rho_n: f64,
    pub perron_left: Vec<f64>,
    pub beta_cr: f64,
    /// `1 / (2 (1 - beta/beta_cr))`, present only at high temperature.
    pub alpha: Option<f64>,
    /// Eigenvalues of `beta * D K D`, ascending.
    pub eigenvalues: Vec<f64>,
    /// Matching orthonormal eigenvectors as columns.
    pub eigenvectors: Matrix,
}

impl SpectralData {
    pub fn compute(model: &BlockModel, beta: f64) -> Result<Self> {
        let (a, lambda) = perron_left(model.proportions(), model.interactions())?;
        let beta_cr = beta_critical(model)?;
        let n = model.n() as f64;
        let rho_n = 1.0 - 1.0 / n + beta * lambda / n;
        let alpha = (beta < beta_cr).then(|| 1.0 / (2.0 * (1.0 - beta / beta_cr)));
        let x = symmetric_conjugate(model.proportions(), model.interactions()).scale(beta);
        let eig = jacobi_eigen(&x)?;
        Ok(Self {
            beta,
            b: interaction_product(model),
            q: contraction_matrix(model, beta),
            rho_n,
            perron_left: a,
            beta_cr,
            alpha,
            eigenvalues: eig.values,
            eigenvectors: eig.vectors,
        })
    }

    /// `t_n = alpha n ln n`; requires high temperature.
    pub fn cutoff_location(&self, n: usize) -> Result<f64> {
        let alpha = self.alpha.ok_or(Error::NotHighTemperature { beta: self.beta, beta_cr: self.beta_cr })?;
        Ok(alpha * n as f64 * (n as f64).ln())
    }
}

/// Eigen-decomposition of `beta_cr D K D` and the quartic law of its top coordinate.
#[derive(Clone, Debug, Serialize)]
pub struct CriticalDecomposition {
    pub beta_cr: f64,
    /// Ascending; the last one equals 1.
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
    /// `c4 = (1/12) sum_i V_im^4 / p_i`.
    pub quartic_coefficient: f64,
    /// `Z = integral of exp(-c4 x^4)`.
    pub normalizer: f64,
    cutoff: f64,
    p: Vec<f64>,
}

pub fn critical_decomposition(model: &BlockModel) -> Result<CriticalDecomposition> {
    let keig = jacobi_eigen(model.interactions())?;
    if keig.values[0] <= 0.0 {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: keig.values[0] });
    }
    let beta_cr = beta_critical(model)?;
    let p = model.proportions().to_vec();
    let x = symmetric_conjugate(&p, model.interactions()).scale(beta_cr);
    let eig = jacobi_eigen(&x)?;
    let m = eig.values.len();
    let top = eig.values[m - 1];
    let gap_ok = m == 1 || top - eig.values[m - 2] > 1e-9;
    if (top - 1.0).abs() > 1e-6 || !gap_ok {
        return Err(Error::TopEigenvalueNotOne { value: top });
    }
    let c4 = (0..m).map(|i| eig.vectors[(i, m - 1)].powi(4) / p[i]).sum::<f64>() / 12.0;
    let cutoff = f64::max(10.0, (40.0 / c4).powf(0.25));
    let half = adaptive_simpson(&|x: f64| (-c4 * x.powi(4)).exp(), 0.0, cutoff, 1e-14)?;
    Ok(CriticalDecomposition {
        beta_cr,
        eigenvalues: eig.values,
        eigenvectors: eig.vectors,
        quartic_coefficient: c4,
        normalizer: 2.0 * half,
        cutoff,
        p,
    })
}

impl CriticalDecomposition {
    /// `U_n = Gamma_n V^T D^{-1} M` with `Gamma_n = diag(n^-1/2, ..., n^-1/2, n^-3/4)`.
    pub fn rescaled_coordinates(&self, n: usize, mags: &[i64]) -> Vec<f64> {
        let m = self.p.len();
        let nf = n as f64;
        let y: Vec<f64> = mags.iter().zip(&self.p).map(|(&mi, q)| mi as f64 / q.sqrt()).collect();
        let proj = self.eigenvectors.transpose().matvec(&y);
        proj.iter()
            .enumerate()
            .map(|(i, v)| if i + 1 == m { v * nf.powf(-0.75) } else { v * nf.powf(-0.5) })
            .collect()
    }

    /// Limit density `exp(-c4 x^4) / Z` of the top coordinate.
    pub fn limit_density(&self, x: f64) -> f64 {
        (-self.quartic_coefficient * x.powi(4)).exp() / self.normalizer
    }

    /// Limit CDF. The tail mass beyond `|x|` is integrated directly so small
    /// probabilities keep their relative accuracy.
    pub fn limit_cdf(&self, x: f64) -> Result<f64> {
        let c4 = self.quartic_coefficient;
        let x_abs = x.abs();
        let tail = if x_abs >= self.cutoff {
            0.0
        } else {
            adaptive_simpson(&|t: f64| (-c4 * t.powi(4)).exp(), x_abs, self.cutoff, 1e-14)? / self.normalizer
        };
        Ok(if x >= 0.0 { 1.0 - tail } else { tail })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m1() -> BlockModel {
        BlockModel::new(100, &[1.0], vec![vec![1.0]]).unwrap()
    }

    #[test]
    fn perron_examples() {
        let half = [0.5, 0.5];
        let (a, _) = perron_left(&half, &Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap()).unwrap();
        assert!((a[0] - 0.5).abs() < 1e-12 && (a[1] - 0.5).abs() < 1e-12);
        let (a, l) = perron_left(&half, &Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()).unwrap();
        assert!((a[0] - 0.5).abs() < 1e-12 && (l - 0.5).abs() < 1e-12);
        let (a, l) = perron_left(&[1.0], &Matrix::from_rows(&[vec![2.5]]).unwrap()).unwrap();
        assert!((a[0] - 1.0).abs() < 1e-15 && (l - 2.5).abs() < 1e-12);
    }

    #[test]
    fn reducible_is_rejected() {
        let k = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(perron_left(&[0.5, 0.5], &k), Err(Error::ReducibleMatrix)));
    }

    #[test]
    fn curie_weiss_values() {
        let m = m1();
        assert!((beta_critical(&m).unwrap() - 1.0).abs() < 1e-12);
        let s = SpectralData::compute(&m, 0.5).unwrap();
        assert!((s.alpha.unwrap() - 1.0).abs() < 1e-12);
        assert!((s.rho_n - (1.0 - 0.5 / 100.0)).abs() < 1e-15);
    }

    #[test]
    fn regimes() {
        let m = m1();
        assert_eq!(regime(&m, 0.5, REGIME_TOL).unwrap().regime, Regime::High);
        assert_eq!(regime(&m, 1.0, REGIME_TOL).unwrap().regime, Regime::Critical);
        assert_eq!(regime(&m, 1.5, REGIME_TOL).unwrap().regime, Regime::Low);
    }

    #[test]
    fn critical_two_block() {
        let m = BlockModel::new(10, &[0.5, 0.5], vec![vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let c = critical_decomposition(&m).unwrap();
        assert!((c.beta_cr - 2.0 / 3.0).abs() < 1e-12);
        assert!((c.eigenvalues[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((c.eigenvalues[1] - 1.0).abs() < 1e-12);
        assert!((c.quartic_coefficient - 1.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn not_positive_definite() {
        let m = BlockModel::new(10, &[0.5, 0.5], vec![vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(critical_decomposition(&m), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn cdf_is_symmetric() {
        let c = critical_decomposition(&m1()).unwrap();
        assert_eq!(c.limit_cdf(0.0).unwrap(), 0.5);
        let a = c.limit_cdf(1.3).unwrap();
        let b = c.limit_cdf(-1.3).unwrap();
        assert!((a + b - 1.0).abs() < 1e-14);
        assert!((c.limit_cdf(50.0).unwrap() - 1.0).abs() < 1e-12);
    }
}
