use serde::Serialize;

use super::{coordinate_coupled_step, CoupledPair, RngStream};
use crate::error::{Error, Result};
use crate::model::{rate_minus, rate_plus, BlockModel, SpinConfig};

/// Agreement counts of a configuration with a fixed balanced reference.
///
/// For block `i`, `agree_plus[i]` counts sites where both show `+1` and
/// `agree_minus[i]` sites where both show `-1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoordinateChain {
    pub agree_plus: Vec<i64>,
    pub agree_minus: Vec<i64>,
}

impl CoordinateChain {
    pub fn of(model: &BlockModel, reference: &SpinConfig, config: &SpinConfig) -> Self {
        let m = model.num_blocks();
        let mut agree_plus = vec![0; m];
        let mut agree_minus = vec![0; m];
        for b in 0..m {
            for v in model.block_sites(b) {
                match (reference.get(v), config.get(v)) {
                    (1, 1) => agree_plus[b] += 1,
                    (-1, -1) => agree_minus[b] += 1,
                    _ => {}
                }
            }
        }
        Self { agree_plus, agree_minus }
    }

    /// Block magnetizations recovered from the counts, `M_i = 2(U_i - V_i) - (u_i - v_i)`
    /// with `u_i, v_i` the reference's plus and minus counts.
    pub fn magnetizations(&self, reference_plus: &[i64], reference_minus: &[i64]) -> Vec<i64> {
        (0..self.agree_plus.len())
            .map(|i| 2 * (self.agree_plus[i] - self.agree_minus[i]) - (reference_plus[i] - reference_minus[i]))
            .collect()
    }
}

fn check_reference(model: &BlockModel, reference: &SpinConfig) -> Result<()> {
    for (i, &m) in reference.block_mags().iter().enumerate() {
        // |S_i| <= p_i / 2  <=>  2 |M_i| <= size_i
        if 2 * m.unsigned_abs() as usize > model.block_sizes()[i] {
            return Err(Error::BadReference);
        }
    }
    Ok(())
}

/// Coordinate-chain value of each configuration in `trajectory`.
pub fn coordinate_chain_track(
    model: &BlockModel,
    reference: &SpinConfig,
    trajectory: &[SpinConfig],
) -> Result<Vec<CoordinateChain>> {
    check_reference(model, reference)?;
    Ok(trajectory.iter().map(|c| CoordinateChain::of(model, reference, c)).collect())
}

/// Per-block outcome of a one-step drift audit.
#[derive(Clone, Debug, Serialize)]
pub struct DriftAudit {
    pub block: usize,
    /// `R = U_i(y) - U_i(x)` at the audited state.
    pub r: i64,
    pub empirical_mean: f64,
    pub standard_error: f64,
    /// Exact conditional drift `-(R/n) (r_+(X_i + k_ii/n) + r_-(X_i - k_ii/n))`.
    pub exact: f64,
    /// Leading term `-R/n`.
    pub leading: f64,
    /// `4 SE + |R| beta k_ii / n^2`, the tolerated gap between the empirical mean and the leading term.
    pub allowance: f64,
}

impl DriftAudit {
    pub fn passes(&self) -> bool {
        (self.empirical_mean - self.leading).abs() <= self.allowance
    }
}

/// Estimates `E[R_{t+1} - R_t | state]` for the coordinate coupling by repeating
/// one step from the fixed pair `samples` times.
pub fn coordinate_drift_audit(
    model: &BlockModel,
    beta: f64,
    reference: &SpinConfig,
    pair: &CoupledPair,
    samples: u64,
    rng: &mut RngStream,
) -> Result<Vec<DriftAudit>> {
    check_reference(model, reference)?;
    if pair.x.block_mags() != pair.y.block_mags() {
        return Err(Error::MagnetizationMismatch);
    }
    let m = model.num_blocks();
    let n = model.n() as f64;
    let r_of = |p: &CoupledPair| -> Vec<i64> {
        let cx = CoordinateChain::of(model, reference, &p.x);
        let cy = CoordinateChain::of(model, reference, &p.y);
        (0..m).map(|i| cy.agree_plus[i] - cx.agree_plus[i]).collect()
    };
    let r0 = r_of(pair);
    let mut sum = vec![0.0; m];
    let mut sum_sq = vec![0.0; m];
    for _ in 0..samples {
        let mut next = pair.clone();
        coordinate_coupled_step(model, beta, &mut next, rng)?;
        let r1 = r_of(&next);
        for i in 0..m {
            let d = (r1[i] - r0[i]) as f64;
            sum[i] += d;
            sum_sq[i] += d * d;
        }
    }
    let fields = model.block_fields(pair.x.block_mags());
    let k = model.interactions();
    let s = samples as f64;
    Ok((0..m)
        .map(|i| {
            let mean = sum[i] / s;
            let var = (sum_sq[i] / s - mean * mean).max(0.0) * s / (s - 1.0);
            let se = (var / s).sqrt();
            let kii = k[(i, i)] / n;
            let r = r0[i] as f64;
            DriftAudit {
                block: i,
                r: r0[i],
                empirical_mean: mean,
                standard_error: se,
                exact: -r / n * (rate_plus(beta, fields[i] + kii) + rate_minus(beta, fields[i] - kii)),
                leading: -r / n,
                allowance: 4.0 * se + r.abs() * beta * k[(i, i)] / (n * n),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_maps_to_its_own_counts() {
        let m = BlockModel::new(8, &[0.5, 0.5], vec![vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let r = SpinConfig::new(&m, vec![1, 1, -1, -1, 1, -1, 1, -1]).unwrap();
        let c = coordinate_chain_track(&m, &r, std::slice::from_ref(&r)).unwrap();
        assert_eq!(c[0].agree_plus, vec![2, 2]);
        assert_eq!(c[0].agree_minus, vec![2, 2]);
    }

    #[test]
    fn unbalanced_reference_is_rejected() {
        let m = BlockModel::new(8, &[0.5, 0.5], vec![vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let r = SpinConfig::all_plus(&m);
        assert!(matches!(coordinate_chain_track(&m, &r, &[]), Err(Error::BadReference)));
    }
}
