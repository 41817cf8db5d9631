use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{jacobi_eigen, solve, Matrix};
use crate::model::BlockModel;

const BOUNDARY_TOL: f64 = 1e-12;
const DAMPING: f64 = 0.5;
const MAX_ITERS: u64 = 100_000;
/// Step size at which damped iteration hands over to Newton.
const HANDOVER: f64 = 1e-6;

fn check_interior(chi: &[f64]) -> Result<()> {
    for (index, &value) in chi.iter().enumerate() {
        if !(value.abs() < 1.0 - BOUNDARY_TOL) {
            return Err(Error::BoundaryValue { index, value });
        }
    }
    Ok(())
}

fn check_dim(model: &BlockModel, chi: &[f64]) -> Result<()> {
    if chi.len() != model.num_blocks() {
        return Err(Error::DimensionMismatch { expected: model.num_blocks(), found: chi.len() });
    }
    Ok(())
}

/// `f(chi) = (beta/2) sum_ij k_ij p_i p_j chi_i chi_j + sum_i p_i H((1 + chi_i)/2)`
/// with `H` the binary entropy in nats.
pub fn free_energy(model: &BlockModel, beta: f64, chi: &[f64]) -> Result<f64> {
    check_dim(model, chi)?;
    check_interior(chi)?;
    let p = model.proportions();
    let k = model.interactions();
    let m = chi.len();
    let mut quad = 0.0;
    for i in 0..m {
        for j in 0..m {
            quad += k[(i, j)] * p[i] * p[j] * chi[i] * chi[j];
        }
    }
    let entropy: f64 = (0..m)
        .map(|i| {
            let a = 0.5 * (1.0 + chi[i]);
            let b = 0.5 * (1.0 - chi[i]);
            -p[i] * (a * a.ln() + b * b.ln())
        })
        .sum();
    Ok(0.5 * beta * quad + entropy)
}

/// `df/dchi_i = beta sum_j k_ij p_i p_j chi_j - (p_i/2) ln((1 + chi_i)/(1 - chi_i))`.
pub fn free_energy_grad(model: &BlockModel, beta: f64, chi: &[f64]) -> Result<Vec<f64>> {
    check_dim(model, chi)?;
    check_interior(chi)?;
    let p = model.proportions();
    let k = model.interactions();
    let m = chi.len();
    Ok((0..m)
        .map(|i| {
            let coupling: f64 = (0..m).map(|j| k[(i, j)] * p[j] * chi[j]).sum();
            beta * p[i] * coupling - p[i] * chi[i].atanh()
        })
        .collect())
}

/// Hessian of `f`: `beta P K P - diag(p_i / (1 - chi_i^2))`.
pub fn free_energy_hessian(model: &BlockModel, beta: f64, chi: &[f64]) -> Result<Matrix> {
    check_dim(model, chi)?;
    check_interior(chi)?;
    let p = model.proportions();
    let k = model.interactions();
    let m = chi.len();
    let mut h = Matrix::zeros(m);
    for i in 0..m {
        for j in 0..m {
            h[(i, j)] = beta * p[i] * k[(i, j)] * p[j];
        }
        h[(i, i)] -= p[i] / (1.0 - chi[i] * chi[i]);
    }
    Ok(h)
}

/// `tanh(beta K (p o chi))`.
pub fn mean_field_map(model: &BlockModel, beta: f64, chi: &[f64]) -> Vec<f64> {
    let p = model.proportions();
    let k = model.interactions();
    let m = chi.len();
    (0..m)
        .map(|i| (beta * (0..m).map(|j| k[(i, j)] * p[j] * chi[j]).sum::<f64>()).tanh())
        .collect()
}

/// Jacobian of [`mean_field_map`], `diag(1 - T^2) beta K P`.
pub fn mean_field_jacobian(model: &BlockModel, beta: f64, chi: &[f64]) -> Matrix {
    let t = mean_field_map(model, beta, chi);
    let p = model.proportions();
    let k = model.interactions();
    let m = chi.len();
    let mut j = Matrix::zeros(m);
    for a in 0..m {
        for b in 0..m {
            j[(a, b)] = (1.0 - t[a] * t[a]) * beta * k[(a, b)] * p[b];
        }
    }
    j
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Solves `chi = tanh(beta K (p o chi))` from `init` by damped iteration with a Newton finish.
pub fn mean_field_solve(model: &BlockModel, beta: f64, init: &[f64]) -> Result<Vec<f64>> {
    check_dim(model, init)?;
    if init.iter().any(|x| !(x.abs() <= 1.0)) {
        return Err(Error::InvalidArgument("initial point must lie in [-1, 1]^m".into()));
    }
    let m = init.len();
    let mut chi = init.to_vec();
    let mut iters = 0;
    loop {
        if iters >= MAX_ITERS {
            return Err(Error::NoConvergence { what: "mean-field iteration", iterations: iters });
        }
        iters += 1;
        let t = mean_field_map(model, beta, &chi);
        let next: Vec<f64> = chi.iter().zip(&t).map(|(c, t)| (1.0 - DAMPING) * c + DAMPING * t).collect();
        let step = sup_norm(&chi.iter().zip(&next).map(|(a, b)| a - b).collect::<Vec<_>>());
        chi = next;
        if step <= HANDOVER {
            break;
        }
    }
    // Newton on G(chi) = chi - T(chi); near a degenerate root convergence is only linear.
    for _ in 0..500 {
        let t = mean_field_map(model, beta, &chi);
        let g: Vec<f64> = chi.iter().zip(&t).map(|(c, t)| c - t).collect();
        let jac = Matrix::identity(m).add(&mean_field_jacobian(model, beta, &chi).scale(-1.0));
        let Some(delta) = solve(&jac, &g) else { break };
        let candidate: Vec<f64> = chi.iter().zip(&delta).map(|(c, d)| (c - d).clamp(-1.0 + 1e-15, 1.0 - 1e-15)).collect();
        let new_res = sup_norm(
            &candidate
                .iter()
                .zip(mean_field_map(model, beta, &candidate))
                .map(|(c, t)| c - t)
                .collect::<Vec<_>>(),
        );
        if new_res > sup_norm(&g) {
            break;
        }
        let size = sup_norm(&delta);
        chi = candidate;
        if size <= 1e-14 {
            break;
        }
    }
    let res = sup_norm(
        &chi.iter()
            .zip(mean_field_map(model, beta, &chi))
            .map(|(c, t)| c - t)
            .collect::<Vec<_>>(),
    );
    if res > 1e-10 {
        return Err(Error::NoConvergence { what: "mean-field Newton polish", iterations: iters });
    }
    Ok(chi)
}

/// Local shape of `f` at a fixed point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    /// Local maximum of `f`, a mode of the Gibbs weight `exp(n f)`: a stable state.
    Stable,
    /// Singular Hessian.
    Degenerate,
    /// Saddle or minimum of `f`.
    Unstable,
}

#[derive(Clone, Debug, Serialize)]
pub struct FixedPoint {
    pub chi: Vec<f64>,
    pub kind: PointKind,
    pub free_energy: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Landscape {
    pub beta: f64,
    pub points: Vec<FixedPoint>,
    /// Number of stable states, counting a lone degenerate point as one.
    pub stable_count: usize,
    pub degenerate: bool,
}

/// Whether the landscape has a unique stable state or several.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MinimaCount {
    One,
    TwoOrMore,
}

impl Landscape {
    pub fn minima(&self) -> MinimaCount {
        if self.stable_count >= 2 {
            MinimaCount::TwoOrMore
        } else {
            MinimaCount::One
        }
    }
}

/// Fixed points reached from the `2^m` corners and the origin, classified by the Hessian of `f`.
pub fn count_minima(model: &BlockModel, beta: f64) -> Result<Landscape> {
    let m = model.num_blocks();
    let mut inits = vec![vec![0.0; m]];
    for mask in 0..(1u64 << m) {
        inits.push((0..m).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect());
    }
    let mut points: Vec<FixedPoint> = Vec::new();
    for init in inits {
        let chi = mean_field_solve(model, beta, &init)?;
        if points.iter().any(|q| sup_norm(&q.chi.iter().zip(&chi).map(|(a, b)| a - b).collect::<Vec<_>>()) <= 1e-6) {
            continue;
        }
        let h = free_energy_hessian(model, beta, &chi)?;
        let scale = model.proportions().iter().fold(0.0f64, |a, &b| a.max(b));
        let top = *jacobi_eigen(&h)?.values.last().expect("nonempty");
        let kind = if top < -1e-9 * scale {
            PointKind::Stable
        } else if top <= 1e-9 * scale {
            PointKind::Degenerate
        } else {
            PointKind::Unstable
        };
        let free_energy = free_energy(model, beta, &chi)?;
        points.push(FixedPoint { chi, kind, free_energy });
    }
    points.sort_by(|a, b| a.chi.iter().zip(&b.chi).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    let stable = points.iter().filter(|p| p.kind == PointKind::Stable).count();
    let degenerate = points.iter().any(|p| p.kind == PointKind::Degenerate);
    let stable_count = if stable == 0 && degenerate { 1 } else { stable };
    Ok(Landscape { beta, points, stable_count, degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cw() -> BlockModel {
        BlockModel::new(10, &[1.0], vec![vec![1.0]]).unwrap()
    }

    #[test]
    fn origin_values() {
        let m = BlockModel::new(10, &[0.3, 0.7], vec![vec![1.0, 0.5], vec![0.5, 2.0]]).unwrap();
        let f = free_energy(&m, 0.7, &[0.0, 0.0]).unwrap();
        assert!((f - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(free_energy_grad(&m, 0.7, &[0.0, 0.0]).unwrap().iter().all(|g| *g == 0.0));
    }

    #[test]
    fn boundary_rejected() {
        assert!(matches!(free_energy(&cw(), 1.0, &[1.0]), Err(Error::BoundaryValue { .. })));
        assert!(matches!(free_energy_grad(&cw(), 1.0, &[-1.0]), Err(Error::BoundaryValue { .. })));
    }

    #[test]
    fn counts_by_regime() {
        assert_eq!(count_minima(&cw(), 0.8).unwrap().minima(), MinimaCount::One);
        assert_eq!(count_minima(&cw(), 1.2).unwrap().minima(), MinimaCount::TwoOrMore);
        let crit = count_minima(&cw(), 1.0).unwrap();
        assert_eq!(crit.minima(), MinimaCount::One);
        assert!(crit.degenerate);
    }
}
