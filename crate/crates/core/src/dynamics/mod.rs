//! Single-site heat-bath dynamics on full spin configurations, couplings of two
//! copies, and Monte Carlo estimators built on them.

mod coordinate;
mod coupling;
mod exit;

pub use coordinate::{coordinate_chain_track, coordinate_drift_audit, CoordinateChain, DriftAudit};
pub use coupling::{
    coordinate_coupled_step, coupled_step, coupling_time, independent_step, matched_partner, modified_matching,
    monotone_coupled_step, same_mag_coupled_step, CoupledPair, CouplingMode, CouplingSample, CouplingStrategy, Touched,
};
pub use exit::{metastable_exit_time, ExitSample};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{rate_plus, BlockModel, SpinConfig};
use crate::spectral::Regime;

/// Seed used when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 0x5EED_C0DE_2024;

/// Reproducible random stream for one replica.
///
/// ChaCha8 keyed by the experiment seed, with the replica index as the stream
/// id, so replica `r` draws the same numbers however replicas are scheduled.
#[derive(Clone, Debug)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, replica: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(replica);
        Self { rng }
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform on `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}

/// Field felt by `site` in `block`, excluding its own spin:
/// `(sum_l k_jl M_l - k_jj sigma(site)) / n`.
pub fn site_field(model: &BlockModel, config: &SpinConfig, site: usize, block: usize) -> f64 {
    let k = model.interactions();
    let mags = config.block_mags();
    let mut s = 0.0;
    for (l, &ml) in mags.iter().enumerate() {
        s += k[(block, l)] * ml as f64;
    }
    (s - k[(block, block)] * config.get(site) as f64) / model.n() as f64
}

/// Heat-bath outcome for uniform `u`: `+1` iff `u < r_+(field)`.
pub fn heat_bath_spin(beta: f64, field: f64, u: f64) -> i8 {
    if u < rate_plus(beta, field) {
        1
    } else {
        -1
    }
}

/// One Glauber update in place; returns the site that was refreshed.
pub fn glauber_step(model: &BlockModel, beta: f64, config: &mut SpinConfig, rng: &mut RngStream) -> usize {
    let site = rng.index(model.n());
    let u = rng.uniform();
    let block = model.block_of(site);
    let spin = heat_bath_spin(beta, site_field(model, config, site, block), u);
    config.set(site, block, spin);
    site
}

/// Censoring horizon used when none is given: `100 n ln n` at high temperature,
/// `100 n^{3/2}` at the critical point, none below it.
pub fn default_horizon(regime: Regime, n: usize) -> Option<u64> {
    let nf = n as f64;
    match regime {
        Regime::High => Some((100.0 * nf * nf.ln().max(1.0)).ceil() as u64),
        Regime::Critical => Some((100.0 * nf.powf(1.5)).ceil() as u64),
        Regime::Low => None,
    }
}
