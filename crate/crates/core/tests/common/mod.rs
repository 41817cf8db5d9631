#![allow(dead_code)]

use block_ising::kernel::StateSpace;
use block_ising::model::DEFAULT_STATE_CAP;
use block_ising::{BlockModel, MagState};

/// Block of every site, straight from the sizes.
pub fn labels(model: &BlockModel) -> Vec<usize> {
    model.block_sizes().iter().enumerate().flat_map(|(b, &s)| std::iter::repeat_n(b, s)).collect()
}

pub fn spins_of(mask: u32, n: usize) -> Vec<i8> {
    (0..n).map(|v| if mask >> v & 1 == 1 { 1 } else { -1 }).collect()
}

/// Pair energy `-sum_{v<w} k(b_v, b_w) s_v s_w / n`.
pub fn energy(model: &BlockModel, blocks: &[usize], s: &[i8]) -> f64 {
    let k = model.interactions();
    let n = model.n() as f64;
    let mut e = 0.0;
    for v in 0..s.len() {
        for w in v + 1..s.len() {
            e -= k[(blocks[v], blocks[w])] * f64::from(s[v]) * f64::from(s[w]) / n;
        }
    }
    e
}

pub fn lumped_index(model: &BlockModel, space: &StateSpace, blocks: &[usize], s: &[i8]) -> usize {
    let mut mags = vec![0i64; model.num_blocks()];
    for (v, &x) in s.iter().enumerate() {
        mags[blocks[v]] += i64::from(x);
    }
    space.index_of(&MagState(mags)).unwrap()
}

pub fn space(model: &BlockModel) -> StateSpace {
    StateSpace::new(model, DEFAULT_STATE_CAP).unwrap()
}

/// Gibbs measure over all `2^n` configurations pushed onto block magnetizations.
pub fn gibbs_pushforward(model: &BlockModel, beta: f64) -> Vec<f64> {
    let n = model.n();
    let blocks = labels(model);
    let sp = space(model);
    let mut out = vec![0.0; sp.len()];
    let mut z = 0.0;
    for mask in 0..1u32 << n {
        let s = spins_of(mask, n);
        let w = (-beta * energy(model, &blocks, &s)).exp();
        z += w;
        out[lumped_index(model, &sp, &blocks, &s)] += w;
    }
    out.iter().map(|w| w / z).collect()
}

/// One heat-bath step of the full chain from `s`, pushed onto block magnetizations.
/// Conditional probabilities come from energy differences only.
pub fn full_step_pushforward(model: &BlockModel, beta: f64, s: &[i8]) -> Vec<f64> {
    let n = model.n();
    let blocks = labels(model);
    let sp = space(model);
    let mut out = vec![0.0; sp.len()];
    for v in 0..n {
        let mut plus = s.to_vec();
        plus[v] = 1;
        let mut minus = s.to_vec();
        minus[v] = -1;
        let ep = energy(model, &blocks, &plus);
        let em = energy(model, &blocks, &minus);
        let p_plus = 1.0 / (1.0 + (-beta * (em - ep)).exp());
        out[lumped_index(model, &sp, &blocks, &plus)] += p_plus / n as f64;
        out[lumped_index(model, &sp, &blocks, &minus)] += (1.0 - p_plus) / n as f64;
    }
    out
}

/// Small instances with `n <= 12` and one or two blocks.
pub fn small_instances() -> Vec<BlockModel> {
    let mut out = Vec::new();
    for n in [1, 2, 5, 8, 12] {
        out.push(BlockModel::new(n, &[1.0], vec![vec![1.0]]).unwrap());
        out.push(BlockModel::new(n, &[1.0], vec![vec![2.5]]).unwrap());
    }
    for sizes in [[1, 1], [2, 3], [4, 4], [3, 7], [6, 6], [5, 7]] {
        out.push(BlockModel::from_block_sizes(&sizes, vec![vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap());
        out.push(BlockModel::from_block_sizes(&sizes, vec![vec![0.0, 1.3], vec![1.3, 2.0]]).unwrap());
        out.push(BlockModel::from_block_sizes(&sizes, vec![vec![3.0, 0.2], vec![0.2, 0.7]]).unwrap());
    }
    out
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Log-log or linear least squares, computed independently of the library.
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, sxy * sxy / (sxx * syy))
}
