use rayon::prelude::*;
use serde::Serialize;

use super::{heat_bath_spin, site_field, RngStream};
use crate::error::{Error, Result};
use crate::model::{BlockModel, SpinConfig};
use crate::spectral::SpectralData;

/// Two copies of the dynamics driven by shared randomness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoupledPair {
    pub x: SpinConfig,
    pub y: SpinConfig,
}

/// One-step coupling rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingMode {
    /// Same site, same uniform.
    Monotone,
    /// Site in `y` is the partner of the site in `x` under [`modified_matching`], same uniform.
    ModifiedMatching,
    /// Keeps equal magnetizations equal and never increases the Hamming distance.
    SameMagnetization,
    /// Keeps equal magnetizations equal; drives the coordinate chain of [`super::CoordinateChain`].
    Coordinate,
    Independent,
}

/// Sites refreshed in `x` and `y` by one coupled step, with their previous spins.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Touched {
    pub x_site: usize,
    pub y_site: usize,
    pub x_old: i8,
    pub y_old: i8,
}

fn update(model: &BlockModel, beta: f64, config: &mut SpinConfig, site: usize, block: usize, u: f64) -> i8 {
    let old = config.get(site);
    let spin = heat_bath_spin(beta, site_field(model, config, site, block), u);
    config.set(site, block, spin);
    old
}

pub fn monotone_coupled_step(model: &BlockModel, beta: f64, pair: &mut CoupledPair, rng: &mut RngStream) -> Touched {
    let site = rng.index(model.n());
    let u = rng.uniform();
    let block = model.block_of(site);
    let x_old = update(model, beta, &mut pair.x, site, block, u);
    let y_old = update(model, beta, &mut pair.y, site, block, u);
    Touched { x_site: site, y_site: site, x_old, y_old }
}

pub fn independent_step(model: &BlockModel, beta: f64, pair: &mut CoupledPair, rng: &mut RngStream) -> Touched {
    let sx = rng.index(model.n());
    let ux = rng.uniform();
    let sy = rng.index(model.n());
    let uy = rng.uniform();
    let x_old = update(model, beta, &mut pair.x, sx, model.block_of(sx), ux);
    let y_old = update(model, beta, &mut pair.y, sy, model.block_of(sy), uy);
    Touched { x_site: sx, y_site: sy, x_old, y_old }
}

fn modified_step(model: &BlockModel, beta: f64, pair: &mut CoupledPair, rng: &mut RngStream, shared: bool) -> Touched {
    let site = rng.index(model.n());
    let block = model.block_of(site);
    let partner = matched_partner(model, &pair.x, &pair.y, site);
    let u = rng.uniform();
    let v = if shared { u } else { rng.uniform() };
    let x_old = update(model, beta, &mut pair.x, site, block, u);
    let y_old = update(model, beta, &mut pair.y, partner, block, v);
    Touched { x_site: site, y_site: partner, x_old, y_old }
}

/// Both chains draw the new spin from the field of `x`; requires equal magnetizations.
pub fn same_mag_coupled_step(
    model: &BlockModel,
    beta: f64,
    pair: &mut CoupledPair,
    rng: &mut RngStream,
) -> Result<Touched> {
    if pair.x.block_mags() != pair.y.block_mags() {
        return Err(Error::MagnetizationMismatch);
    }
    let site = rng.index(model.n());
    let u = rng.uniform();
    let block = model.block_of(site);
    let sx = pair.x.get(site);
    let spin = heat_bath_spin(beta, site_field(model, &pair.x, site, block), u);
    let partner = if pair.y.get(site) == sx {
        site
    } else {
        // Disagreeing sites where y already shows x's old spin.
        let candidates: Vec<usize> = model
            .block_sites(block)
            .filter(|&v| pair.y.get(v) == sx && pair.x.get(v) != sx)
            .collect();
        candidates[rng.index(candidates.len())]
    };
    let y_old = pair.y.get(partner);
    pair.x.set(site, block, spin);
    pair.y.set(partner, block, spin);
    Ok(Touched { x_site: site, y_site: partner, x_old: sx, y_old })
}

/// `I'` uniform among sites of the same block where `y` shows `x(I)`; both take `x`'s new spin.
pub fn coordinate_coupled_step(
    model: &BlockModel,
    beta: f64,
    pair: &mut CoupledPair,
    rng: &mut RngStream,
) -> Result<Touched> {
    if pair.x.block_mags() != pair.y.block_mags() {
        return Err(Error::MagnetizationMismatch);
    }
    let site = rng.index(model.n());
    let u = rng.uniform();
    let block = model.block_of(site);
    let sx = pair.x.get(site);
    let spin = heat_bath_spin(beta, site_field(model, &pair.x, site, block), u);
    let count = model.block_sites(block).filter(|&v| pair.y.get(v) == sx).count();
    let pick = rng.index(count);
    let partner = model
        .block_sites(block)
        .filter(|&v| pair.y.get(v) == sx)
        .nth(pick)
        .expect("equal magnetizations leave a candidate");
    let y_old = pair.y.get(partner);
    pair.x.set(site, block, spin);
    pair.y.set(partner, block, spin);
    Ok(Touched { x_site: site, y_site: partner, x_old: sx, y_old })
}

pub fn coupled_step(
    model: &BlockModel,
    beta: f64,
    pair: &mut CoupledPair,
    mode: CouplingMode,
    rng: &mut RngStream,
) -> Result<Touched> {
    Ok(match mode {
        CouplingMode::Monotone => monotone_coupled_step(model, beta, pair, rng),
        CouplingMode::ModifiedMatching => modified_step(model, beta, pair, rng, true),
        CouplingMode::SameMagnetization => same_mag_coupled_step(model, beta, pair, rng)?,
        CouplingMode::Coordinate => coordinate_coupled_step(model, beta, pair, rng)?,
        CouplingMode::Independent => independent_step(model, beta, pair, rng),
    })
}

/// Block-wise bijection from sites of `x` to sites of `y`.
///
/// Plus sites of `x` pair with plus sites of `y` in ascending order, likewise
/// minus with minus; the surplus sites of `x` then pair with the surplus sites
/// of `y`, again in ascending order. The number of unlike pairs in block `i` is
/// `|M_i(x) - M_i(y)| / 2`, the fewest any bijection can achieve.
pub fn modified_matching(model: &BlockModel, x: &SpinConfig, y: &SpinConfig) -> Vec<usize> {
    let mut f = vec![0; model.n()];
    for b in 0..model.num_blocks() {
        let sites = model.block_sites(b);
        let class = |c: &SpinConfig, s: i8| -> Vec<usize> { sites.clone().filter(|&v| c.get(v) == s).collect() };
        let (px, nx, py, ny) = (class(x, 1), class(x, -1), class(y, 1), class(y, -1));
        let kp = px.len().min(py.len());
        let kn = nx.len().min(ny.len());
        for i in 0..kp {
            f[px[i]] = py[i];
        }
        for i in 0..kn {
            f[nx[i]] = ny[i];
        }
        let mut rest_x: Vec<usize> = px[kp..].iter().chain(&nx[kn..]).copied().collect();
        let mut rest_y: Vec<usize> = py[kp..].iter().chain(&ny[kn..]).copied().collect();
        rest_x.sort_unstable();
        rest_y.sort_unstable();
        for (a, b) in rest_x.into_iter().zip(rest_y) {
            f[a] = b;
        }
    }
    f
}

/// Partner of one site under [`modified_matching`], in time linear in its block size.
pub fn matched_partner(model: &BlockModel, x: &SpinConfig, y: &SpinConfig, site: usize) -> usize {
    let block = model.block_of(site);
    let sites = model.block_sites(block);
    let s = x.get(site);
    let rank = sites.clone().filter(|&v| v < site && x.get(v) == s).count();
    let count_y_same = sites.clone().filter(|&v| y.get(v) == s).count();
    let (target, skip) = if rank < count_y_same {
        (s, rank)
    } else {
        // Only one sign has surplus, so the surplus of x is exactly the sign-s tail
        // and the surplus of y is the opposite-sign tail.
        let count_x_other = sites.clone().filter(|&v| x.get(v) == -s).count();
        (-s, count_x_other + rank - count_y_same)
    };
    sites.filter(|&v| y.get(v) == target).nth(skip).expect("matching is a bijection")
}

/// Strategy for [`coupling_time`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingStrategy {
    /// Monotone coupling throughout.
    Monotone,
    /// Monotone until the cutoff location, then matched sites with independent
    /// uniforms in blocks whose magnetizations differ by more than one spin,
    /// then the shared-uniform matching until magnetizations agree, then the
    /// same-magnetization coupling until the configurations agree.
    TwoPhase,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CouplingSample {
    pub replica: u64,
    pub tau_mag: Option<u64>,
    pub tau_full: Option<u64>,
}

impl CouplingSample {
    pub fn censored(&self) -> bool {
        self.tau_full.is_none()
    }
}

/// Runs `reps` independent replicas of the coupled pair, each for at most `horizon` steps.
pub fn coupling_time(
    model: &BlockModel,
    beta: f64,
    start: &CoupledPair,
    strategy: CouplingStrategy,
    reps: u64,
    horizon: u64,
    seed: u64,
) -> Result<Vec<CouplingSample>> {
    let phase_one = match strategy {
        CouplingStrategy::Monotone => horizon,
        CouplingStrategy::TwoPhase => {
            let spectral_data = SpectralData::compute(model, beta)?;
            // Below the critical temperature there is no cutoff location; skip straight to matching.
            spectral_data.cutoff_location(model.n()).map(|t| t.round() as u64).unwrap_or(0)
        }
    };
    Ok((0..reps)
        .into_par_iter()
        .map(|r| run_replica(model, beta, start, strategy, phase_one, horizon, RngStream::new(seed, r), r))
        .collect())
}

#[allow(clippy::too_many_arguments)]
fn run_replica(
    model: &BlockModel,
    beta: f64,
    start: &CoupledPair,
    strategy: CouplingStrategy,
    phase_one: u64,
    horizon: u64,
    mut rng: RngStream,
    replica: u64,
) -> CouplingSample {
    let mut pair = start.clone();
    let mut hamming = pair.x.hamming(&pair.y);
    let mags_equal = |p: &CoupledPair| p.x.block_mags() == p.y.block_mags();
    let mut tau_mag = mags_equal(&pair).then_some(0);
    let mut tau_full = (hamming == 0).then_some(0);
    let mut reached_small_gap = false;
    let mut t = 0;
    while tau_full.is_none() && t < horizon {
        let touched = if strategy == CouplingStrategy::Monotone || t < phase_one {
            monotone_coupled_step(model, beta, &mut pair, &mut rng)
        } else if tau_mag.is_some() {
            same_mag_coupled_step(model, beta, &mut pair, &mut rng).expect("magnetizations agree")
        } else if reached_small_gap {
            modified_step(model, beta, &mut pair, &mut rng, true)
        } else {
            let site = rng.index(model.n());
            let block = model.block_of(site);
            let gap = (pair.x.block_mags()[block] - pair.y.block_mags()[block]).abs() / 2;
            let partner = matched_partner(model, &pair.x, &pair.y, site);
            let u = rng.uniform();
            let v = if gap <= 1 { u } else { rng.uniform() };
            let x_old = update(model, beta, &mut pair.x, site, block, u);
            let y_old = update(model, beta, &mut pair.y, partner, block, v);
            Touched { x_site: site, y_site: partner, x_old, y_old }
        };
        t += 1;
        hamming = adjust_hamming(hamming, &pair, touched);
        if tau_mag.is_none() && mags_equal(&pair) {
            tau_mag = Some(t);
        }
        if hamming == 0 {
            tau_full = Some(t);
        }
        if !reached_small_gap && t >= phase_one {
            reached_small_gap = pair
                .x
                .block_mags()
                .iter()
                .zip(pair.y.block_mags())
                .all(|(a, b)| (a - b).abs() <= 2);
        }
    }
    CouplingSample { replica, tau_mag, tau_full }
}

/// Updates a Hamming distance after a step that changed at most `x[x_site]` and `y[y_site]`.
pub(crate) fn adjust_hamming(h: usize, after: &CoupledPair, t: Touched) -> usize {
    let (a, b) = (t.x_site, t.y_site);
    let now = |v: usize| (after.x.get(v) != after.y.get(v)) as isize;
    let y_before_a = if a == b { t.y_old } else { after.y.get(a) };
    let mut delta = now(a) - (t.x_old != y_before_a) as isize;
    if b != a {
        delta += now(b) - (after.x.get(b) != t.y_old) as isize;
    }
    (h as isize + delta) as usize
}
