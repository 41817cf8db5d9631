//! Block structure, spin configurations, magnetization states and Gibbs weights.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Default ceiling on the number of lumped states a routine will enumerate.
pub const DEFAULT_STATE_CAP: u128 = 50_000_000;

const SUM_TOL: f64 = 1e-12;

/// A block proportion, either exact or floating point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Proportion {
    Float(f64),
    Ratio(u64, u64),
}

impl Proportion {
    pub fn value(&self) -> f64 {
        match *self {
            Proportion::Float(x) => x,
            Proportion::Ratio(a, b) => a as f64 / b as f64,
        }
    }

    /// Parses `"0.25"` or `"1/4"`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if let Some((a, b)) = text.split_once('/') {
            let a: u64 = a.trim().parse().map_err(|_| bad_prop(text))?;
            let b: u64 = b.trim().parse().map_err(|_| bad_prop(text))?;
            if b == 0 {
                return Err(bad_prop(text));
            }
            Ok(Proportion::Ratio(a, b))
        } else {
            text.parse::<f64>().map(Proportion::Float).map_err(|_| bad_prop(text))
        }
    }
}

fn bad_prop(text: &str) -> Error {
    Error::InvalidArgument(format!("cannot parse block proportion {text:?}"))
}

/// A validated m-block Curie-Weiss instance on n sites.
///
/// Blocks are contiguous: block `i` owns sites `offset(i) .. offset(i) + size(i)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(into = "ModelRecord")]
pub struct BlockModel {
    n: usize,
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    p: Vec<f64>,
    k: Matrix,
}

#[derive(Serialize)]
struct ModelRecord {
    n: usize,
    block_sizes: Vec<usize>,
    p: Vec<f64>,
    k: Vec<Vec<f64>>,
}

impl From<BlockModel> for ModelRecord {
    fn from(m: BlockModel) -> Self {
        ModelRecord { n: m.n, block_sizes: m.sizes, p: m.p, k: m.k.to_rows() }
    }
}

impl BlockModel {
    /// Validates floating-point proportions. Each `n * p_i` must be an integer
    /// to within `1e-9`.
    pub fn new(n: usize, p: &[f64], k: Vec<Vec<f64>>) -> Result<Self> {
        let props: Vec<Proportion> = p.iter().map(|&x| Proportion::Float(x)).collect();
        Self::with_proportions(n, &props, k)
    }

    pub fn with_proportions(n: usize, p: &[Proportion], k: Vec<Vec<f64>>) -> Result<Self> {
        let m = p.len();
        if m == 0 {
            return Err(Error::InvalidModel("at least one block is required".into()));
        }
        if n < m {
            return Err(Error::InvalidModel(format!("n = {n} is smaller than the number of blocks {m}")));
        }
        let sum: f64 = p.iter().map(Proportion::value).sum();
        let exact_ok = exact_sum_is_one(p);
        if p.iter().any(|q| !(q.value() > 0.0)) || !exact_ok.unwrap_or((sum - 1.0).abs() <= SUM_TOL) {
            return Err(Error::BadProportions { sum });
        }
        let mut sizes = Vec::with_capacity(m);
        for (i, q) in p.iter().enumerate() {
            let size = match *q {
                Proportion::Ratio(a, b) => {
                    let num = n as u128 * a as u128;
                    if !num.is_multiple_of(b as u128) {
                        return Err(Error::NonIntegerBlockSize { block: i, value: n as f64 * q.value() });
                    }
                    (num / b as u128) as usize
                }
                Proportion::Float(x) => {
                    let v = n as f64 * x;
                    let r = v.round();
                    if (v - r).abs() > 1e-9 * (n as f64).max(1.0) {
                        return Err(Error::NonIntegerBlockSize { block: i, value: v });
                    }
                    r as usize
                }
            };
            if size == 0 {
                return Err(Error::NonIntegerBlockSize { block: i, value: n as f64 * q.value() });
            }
            sizes.push(size);
        }
        if sizes.iter().sum::<usize>() != n {
            return Err(Error::BadProportions { sum });
        }
        Self::assemble(n, sizes, k)
    }

    /// Builds directly from integer block sizes; `p_i = size_i / n`.
    pub fn from_block_sizes(sizes: &[usize], k: Vec<Vec<f64>>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidModel("at least one block is required".into()));
        }
        if let Some(i) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::NonIntegerBlockSize { block: i, value: 0.0 });
        }
        let n = sizes.iter().sum();
        Self::assemble(n, sizes.to_vec(), k)
    }

    fn assemble(n: usize, sizes: Vec<usize>, k: Vec<Vec<f64>>) -> Result<Self> {
        let m = sizes.len();
        if k.len() != m {
            return Err(Error::DimensionMismatch { expected: m, found: k.len() });
        }
        let k = Matrix::from_rows(&k)?;
        for i in 0..m {
            for j in 0..m {
                let v = k[(i, j)];
                if !v.is_finite() {
                    return Err(Error::NonPositiveInteraction { i, j, value: v });
                }
            }
        }
        if let Some((i, j)) = k.is_symmetric(0.0) {
            return Err(Error::AsymmetricInteraction { i, j });
        }
        for i in 0..m {
            for j in 0..m {
                let v = k[(i, j)];
                let bad = if i == j { v < 0.0 || (m == 1 && v == 0.0) } else { v <= 0.0 };
                if bad {
                    return Err(Error::NonPositiveInteraction { i, j, value: v });
                }
            }
        }
        let mut offsets = Vec::with_capacity(m);
        let mut acc = 0;
        for &s in &sizes {
            offsets.push(acc);
            acc += s;
        }
        let p = sizes.iter().map(|&s| s as f64 / n as f64).collect();
        Ok(Self { n, sizes, offsets, p, k })
    }

    /// Same proportions and interactions on a different number of sites.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        let props: Vec<Proportion> = self
            .sizes
            .iter()
            .map(|&s| {
                let g = gcd(s as u64, self.n as u64);
                Proportion::Ratio(s as u64 / g, self.n as u64 / g)
            })
            .collect();
        Self::with_proportions(n, &props, self.k.to_rows())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_blocks(&self) -> usize {
        self.sizes.len()
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn proportions(&self) -> &[f64] {
        &self.p
    }

    pub fn interactions(&self) -> &Matrix {
        &self.k
    }

    pub fn offset(&self, block: usize) -> usize {
        self.offsets[block]
    }

    pub fn block_of(&self, site: usize) -> usize {
        self.offsets.partition_point(|&o| o <= site) - 1
    }

    /// Site range of one block.
    pub fn block_sites(&self, block: usize) -> std::ops::Range<usize> {
        self.offsets[block]..self.offsets[block] + self.sizes[block]
    }

    /// Number of lumped states, prod (size_i + 1).
    pub fn lumped_size(&self) -> u128 {
        self.sizes.iter().map(|&s| s as u128 + 1).product()
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("model serializes");
        hex::encode(Sha256::digest(&json))
    }

    /// Local field `X_i = sum_j k_ij M_j / n` of each block.
    pub fn block_fields(&self, mags: &[i64]) -> Vec<f64> {
        let m = self.num_blocks();
        let n = self.n as f64;
        (0..m)
            .map(|i| (0..m).map(|j| self.k[(i, j)] * mags[j] as f64).sum::<f64>() / n)
            .collect()
    }
}

fn gcd<T: Copy + PartialEq + Default + std::ops::Rem<Output = T>>(mut a: T, mut b: T) -> T {
    while b != T::default() {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// `Some(true/false)` when every proportion is a ratio and the sum can be decided exactly.
fn exact_sum_is_one(p: &[Proportion]) -> Option<bool> {
    let mut num: u128 = 0;
    let mut den: u128 = 1;
    for q in p {
        let Proportion::Ratio(a, b) = *q else { return None };
        num = num * b as u128 + a as u128 * den;
        den *= b as u128;
        let g = gcd(num, den);
        if g > 1 {
            num /= g;
            den /= g;
        }
    }
    Some(num == den)
}

/// Heat-bath probability of choosing `+1` given local field `s`.
pub fn rate_plus(beta: f64, s: f64) -> f64 {
    0.5 * (1.0 + (beta * s).tanh())
}

/// Heat-bath probability of choosing `-1` given local field `s`.
pub fn rate_minus(beta: f64, s: f64) -> f64 {
    0.5 * (1.0 - (beta * s).tanh())
}

/// Spin configuration with cached block magnetizations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpinConfig {
    spins: Vec<i8>,
    mags: Vec<i64>,
}

impl SpinConfig {
    pub fn new(model: &BlockModel, spins: Vec<i8>) -> Result<Self> {
        if spins.len() != model.n() {
            return Err(Error::DimensionMismatch { expected: model.n(), found: spins.len() });
        }
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidArgument("spins must be +1 or -1".into()));
        }
        let mags = (0..model.num_blocks())
            .map(|b| model.block_sites(b).map(|v| spins[v] as i64).sum())
            .collect();
        Ok(Self { spins, mags })
    }

    pub fn all_plus(model: &BlockModel) -> Self {
        Self::new(model, vec![1; model.n()]).expect("valid")
    }

    pub fn all_minus(model: &BlockModel) -> Self {
        Self::new(model, vec![-1; model.n()]).expect("valid")
    }

    /// Configuration where the first `(size_i + M_i) / 2` sites of block `i` are `+1`.
    pub fn sorted_from_mags(model: &BlockModel, mags: &MagState) -> Self {
        let mut spins = vec![-1i8; model.n()];
        for (b, &m) in mags.mags().iter().enumerate() {
            let ups = ((model.block_sizes()[b] as i64 + m) / 2) as usize;
            let start = model.offset(b);
            for s in &mut spins[start..start + ups] {
                *s = 1;
            }
        }
        Self::new(model, spins).expect("valid")
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn get(&self, site: usize) -> i8 {
        self.spins[site]
    }

    pub fn block_mags(&self) -> &[i64] {
        &self.mags
    }

    pub fn magnetization(&self) -> MagState {
        MagState(self.mags.clone())
    }

    /// Sets one spin, keeping the cached magnetization of `block` in sync.
    pub fn set(&mut self, site: usize, block: usize, spin: i8) {
        let old = self.spins[site];
        if old != spin {
            self.spins[site] = spin;
            self.mags[block] += 2 * spin as i64;
        }
    }

    pub fn hamming(&self, other: &SpinConfig) -> usize {
        self.spins.iter().zip(&other.spins).filter(|(a, b)| a != b).count()
    }

    /// Sitewise `self <= other`.
    pub fn dominated_by(&self, other: &SpinConfig) -> bool {
        self.spins.iter().zip(&other.spins).all(|(a, b)| a <= b)
    }
}

/// Vector of block magnetizations `M_i = sum of spins in block i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MagState(pub Vec<i64>);

impl MagState {
    /// Checks `|M_i| <= size_i` and parity.
    pub fn new(model: &BlockModel, mags: Vec<i64>) -> Result<Self> {
        let s = MagState(mags);
        s.check(model)?;
        Ok(s)
    }

    pub fn check(&self, model: &BlockModel) -> Result<()> {
        if self.0.len() != model.num_blocks() {
            return Err(Error::DimensionMismatch { expected: model.num_blocks(), found: self.0.len() });
        }
        for (&m, &size) in self.0.iter().zip(model.block_sizes()) {
            let size = size as i64;
            if m.abs() > size || (m + size) % 2 != 0 {
                return Err(Error::StateOutOfRange);
            }
        }
        Ok(())
    }

    pub fn mags(&self) -> &[i64] {
        &self.0
    }

    /// Normalized magnetizations `S_i = M_i / n`.
    pub fn normalized(&self, n: usize) -> Vec<f64> {
        self.0.iter().map(|&m| m as f64 / n as f64).collect()
    }

    /// Corner with every block fully aligned to the given signs.
    pub fn corner(model: &BlockModel, signs: &[i8]) -> Self {
        MagState(model.block_sizes().iter().zip(signs).map(|(&s, &g)| g as i64 * s as i64).collect())
    }

    /// All `2^m` corners of the state space, starting with all-plus.
    pub fn corners(model: &BlockModel) -> Vec<Self> {
        let m = model.num_blocks();
        (0..(1u64 << m))
            .map(|mask| {
                let signs: Vec<i8> = (0..m).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect();
                Self::corner(model, &signs)
            })
            .collect()
    }
}

/// Ising energy `-sum over unordered pairs v != w of (k_ij / n) s_v s_w`.
pub fn hamiltonian(model: &BlockModel, config: &SpinConfig) -> f64 {
    let mags = config.block_mags();
    let k = model.interactions();
    let m = model.num_blocks();
    let mut quad = 0.0;
    for i in 0..m {
        for j in 0..m {
            quad += k[(i, j)] * (mags[i] * mags[j]) as f64;
        }
    }
    let diag: f64 = (0..m).map(|i| k[(i, i)] * model.proportions()[i]).sum();
    -0.5 * (quad / model.n() as f64 - diag)
}

/// Log of the unnormalized lumped Gibbs weight
/// `prod_i C(size_i, (size_i + M_i)/2) * exp(beta/(2n) M^T K M)`.
pub fn lumped_log_weight(model: &BlockModel, beta: f64, state: &MagState) -> Result<f64> {
    state.check(model)?;
    Ok(log_weight_unchecked(model, beta, state.mags()))
}

pub(crate) fn log_weight_unchecked(model: &BlockModel, beta: f64, mags: &[i64]) -> f64 {
    let k = model.interactions();
    let m = mags.len();
    let mut lw = 0.0;
    for (i, &mi) in mags.iter().enumerate() {
        let size = model.block_sizes()[i] as i64;
        lw += ln_binomial(size as u64, ((size + mi) / 2) as u64);
    }
    let mut quad = 0.0;
    for i in 0..m {
        for j in 0..m {
            quad += k[(i, j)] * (mags[i] * mags[j]) as f64;
        }
    }
    lw + beta / (2.0 * model.n() as f64) * quad
}

pub(crate) fn ln_binomial(n: u64, k: u64) -> f64 {
    if k == 0 || k == n {
        return 0.0;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Lumped stationary law over the full state space in mixed-radix order,
/// normalized with log-sum-exp.
pub fn lumped_stationary(model: &BlockModel, beta: f64) -> Result<Vec<f64>> {
    lumped_stationary_capped(model, beta, DEFAULT_STATE_CAP)
}

pub fn lumped_stationary_capped(model: &BlockModel, beta: f64, cap: u128) -> Result<Vec<f64>> {
    let space = crate::kernel::StateSpace::new(model, cap)?;
    let mut logs: Vec<f64> = (0..space.len())
        .map(|idx| log_weight_unchecked(model, beta, &space.mags_of(idx)))
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for l in &mut logs {
        *l = (*l - max).exp();
        total += *l;
    }
    for l in &mut logs {
        *l /= total;
    }
    Ok(logs)
}
