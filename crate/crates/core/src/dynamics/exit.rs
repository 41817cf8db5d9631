use rayon::prelude::*;
use serde::Serialize;

use super::{glauber_step, RngStream};
use crate::error::Result;
use crate::model::{BlockModel, SpinConfig};
use crate::spectral::perron_left;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExitSample {
    pub replica: u64,
    /// Exit time, or the horizon when censored.
    pub tau: u64,
    pub censored: bool,
}

/// First time the chain started from all-plus reaches `a^T S <= 0`, with `a`
/// the left Perron vector.
pub fn metastable_exit_time(
    model: &BlockModel,
    beta: f64,
    reps: u64,
    horizon: u64,
    seed: u64,
) -> Result<Vec<ExitSample>> {
    let (a, _) = perron_left(model.proportions(), model.interactions())?;
    let score = |c: &SpinConfig| -> f64 { a.iter().zip(c.block_mags()).map(|(w, &m)| w * m as f64).sum() };
    let tol = 1e-9;
    Ok((0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(seed, r);
            let mut c = SpinConfig::all_plus(model);
            let mut t = 0;
            while t < horizon {
                glauber_step(model, beta, &mut c, &mut rng);
                t += 1;
                if score(&c) <= tol {
                    return ExitSample { replica: r, tau: t, censored: false };
                }
            }
            ExitSample { replica: r, tau: horizon, censored: true }
        })
        .collect())
}
