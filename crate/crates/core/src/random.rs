//! Seeded generators for Erdős–Rényi graphs, stochastic blockmodels and
//! GOE matrices.
//!
//! All generators are pure functions of `(params, seed)`. Independent
//! streams (bootstrap replicates, Monte Carlo runs, recursion branches) get
//! their own seeds through [`derive_seed`], so they can be drawn in any order
//! or in parallel without changing results.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of sub-stream `stream` of `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ splitmix64(stream.wrapping_add(0x6a09_e667_f3bc_c909)))
}

/// Seed of the stream reached by following `path` from `seed`.
pub fn derive_seed_path(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(seed, |s, &k| derive_seed(s, k))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErParams {
    pub n: usize,
    pub p: f64,
}

impl ErParams {
    pub fn new(n: usize, p: f64) -> Result<ErParams> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("edge probability {p} outside [0, 1]")));
        }
        Ok(ErParams { n, p })
    }
}

/// Block sizes `n_1..n_k` and the symmetric `k x k` block probability matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmParams {
    block_sizes: Vec<usize>,
    probs: Vec<Vec<f64>>,
}

impl SbmParams {
    pub fn new(block_sizes: Vec<usize>, probs: Vec<Vec<f64>>) -> Result<SbmParams> {
        let k = block_sizes.len();
        if k == 0 {
            return Err(Error::InvalidParameter("no blocks".into()));
        }
        if block_sizes.contains(&0) {
            return Err(Error::InvalidParameter("block sizes must be positive".into()));
        }
        if probs.len() != k || probs.iter().any(|row| row.len() != k) {
            return Err(Error::InvalidParameter(format!(
                "probability matrix must be {k} x {k}"
            )));
        }
        for a in 0..k {
            for b in 0..k {
                let p = probs[a][b];
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidParameter(format!("B[{a}][{b}] = {p} outside [0, 1]")));
                }
                if p != probs[b][a] {
                    return Err(Error::InvalidParameter(format!("B is not symmetric at ({a}, {b})")));
                }
            }
        }
        Ok(SbmParams { block_sizes, probs })
    }

    /// Builds from a row-major flattening of B.
    pub fn from_row_major(block_sizes: Vec<usize>, flat: &[f64]) -> Result<SbmParams> {
        let k = block_sizes.len();
        if flat.len() != k * k {
            return Err(Error::InvalidParameter(format!(
                "expected {} probabilities for {k} blocks, got {}",
                k * k,
                flat.len()
            )));
        }
        SbmParams::new(block_sizes, flat.chunks(k).map(<[f64]>::to_vec).collect())
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn probs(&self) -> &[Vec<f64>] {
        &self.probs
    }

    pub fn node_count(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    pub fn block_count(&self) -> usize {
        self.block_sizes.len()
    }

    /// Block index of every node under the contiguous assignment.
    pub fn labels(&self) -> Vec<usize> {
        self.block_sizes
            .iter()
            .enumerate()
            .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
            .collect()
    }

    /// `B_ii >= sum_{j != i} B_ij` for every block.
    pub fn is_diagonally_dominant(&self) -> bool {
        (0..self.block_count()).all(|i| {
            let off: f64 = (0..self.block_count()).filter(|&j| j != i).map(|j| self.probs[i][j]).sum();
            self.probs[i][i] >= off
        })
    }
}

/// A random-graph model as written in a small TOML file: either `n` and
/// `p`, or `block_sizes` and a row-major `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum ModelConfig {
    Er { n: usize, p: f64 },
    Sbm { block_sizes: Vec<usize>, b: Vec<f64> },
}

impl ModelConfig {
    pub fn from_toml(text: &str) -> Result<ModelConfig> {
        let cfg: ModelConfig = toml::from_str(text).map_err(|e| {
            Error::InvalidParameter(format!("model file needs n and p, or block_sizes and b: {}", e.message()))
        })?;
        cfg.to_sbm()?;
        Ok(cfg)
    }

    /// The model as a blockmodel; Erdős–Rényi is the one-block case.
    pub fn to_sbm(&self) -> Result<SbmParams> {
        match self {
            ModelConfig::Er { n, p } => {
                ErParams::new(*n, *p)?;
                SbmParams::new(vec![*n], vec![vec![*p]])
            }
            ModelConfig::Sbm { block_sizes, b } => SbmParams::from_row_major(block_sizes.clone(), b),
        }
    }

    /// A graph and its block labels.
    pub fn sample(&self, seed: u64) -> Result<(Graph, Vec<usize>)> {
        Ok(match self {
            ModelConfig::Er { n, p } => (sample_er(&ErParams::new(*n, *p)?, seed), vec![0; *n]),
            ModelConfig::Sbm { .. } => sample_sbm(&self.to_sbm()?, seed),
        })
    }
}

/// Geometric skip sampling: visits the successes of `total` Bernoulli(p)
/// trials laid out along a line, in increasing position.
fn for_each_success<F: FnMut(u64)>(total: u64, p: f64, rng: &mut SeededRng, mut visit: F) {
    if total == 0 || p <= 0.0 {
        return;
    }
    if p >= 1.0 {
        (0..total).for_each(visit);
        return;
    }
    let log_q = (-p).ln_1p();
    let mut pos: u64 = 0;
    loop {
        let u: f64 = rng.random();
        // number of failures before the next success
        let skip = ((-u).ln_1p() / log_q).floor();
        if skip >= (total - pos) as f64 {
            return;
        }
        pos += skip as u64;
        visit(pos);
        pos += 1;
        if pos >= total {
            return;
        }
    }
}

fn push_within_block(offset: usize, size: usize, p: f64, rng: &mut SeededRng, out: &mut Vec<(u32, u32)>) {
    let total = (size as u64) * (size as u64).saturating_sub(1) / 2;
    // Walk pair index k -> (row, col) with col < row, rows in increasing order.
    let mut row: u64 = 1;
    let mut row_start: u64 = 0;
    for_each_success(total, p, rng, |k| {
        while k >= row_start + row {
            row_start += row;
            row += 1;
        }
        let col = k - row_start;
        out.push(((offset as u64 + row) as u32, (offset as u64 + col) as u32));
    });
}

fn push_between_blocks(
    (off_a, size_a): (usize, usize),
    (off_b, size_b): (usize, usize),
    p: f64,
    rng: &mut SeededRng,
    out: &mut Vec<(u32, u32)>,
) {
    let total = size_a as u64 * size_b as u64;
    let width = size_b as u64;
    for_each_success(total, p, rng, |k| {
        out.push(((off_a as u64 + k / width) as u32, (off_b as u64 + k % width) as u32));
    });
}

fn sample_blocks(params: &SbmParams, seed: u64) -> Vec<(u32, u32)> {
    let mut rng = rng_from_seed(seed);
    let mut starts = Vec::with_capacity(params.block_count());
    let mut acc = 0;
    for &s in &params.block_sizes {
        starts.push(acc);
        acc += s;
    }
    let mut pairs = Vec::new();
    for a in 0..params.block_count() {
        for b in a..params.block_count() {
            let p = params.probs[a][b];
            if a == b {
                push_within_block(starts[a], params.block_sizes[a], p, &mut rng, &mut pairs);
            } else {
                push_between_blocks(
                    (starts[a], params.block_sizes[a]),
                    (starts[b], params.block_sizes[b]),
                    p,
                    &mut rng,
                    &mut pairs,
                );
            }
        }
    }
    pairs
}

/// Draws `G(n, p)`: every pair is an independent Bernoulli(p) edge.
pub fn sample_er(params: &ErParams, seed: u64) -> Graph {
    let sbm = SbmParams {
        block_sizes: vec![params.n],
        probs: vec![vec![params.p]],
    };
    if params.n == 0 {
        return Graph::empty(0);
    }
    Graph::from_unique_pairs(params.n, &sample_blocks(&sbm, seed))
}

/// Draws a blockmodel graph with contiguous block assignment: nodes
/// `0..n_1` form block 0, the next `n_2` block 1, and so on.
pub fn sample_sbm(params: &SbmParams, seed: u64) -> (Graph, Vec<usize>) {
    let pairs = sample_blocks(params, seed);
    (Graph::from_unique_pairs(params.node_count(), &pairs), params.labels())
}

/// Like [`sample_sbm`] but with node indices randomly permuted, so block
/// membership cannot be read off the index order.
pub fn sample_sbm_shuffled(params: &SbmParams, seed: u64) -> (Graph, Vec<usize>) {
    let n = params.node_count();
    let mut perm: Vec<u32> = (0..n as u32).collect();
    perm.shuffle(&mut rng_from_seed(derive_seed(seed, 1)));
    let pairs: Vec<(u32, u32)> = sample_blocks(params, seed)
        .into_iter()
        .map(|(i, j)| (perm[i as usize], perm[j as usize]))
        .collect();
    let blocks = params.labels();
    let mut labels = vec![0; n];
    for (old, &new) in perm.iter().enumerate() {
        labels[new as usize] = blocks[old];
    }
    (Graph::from_unique_pairs(n, &pairs), labels)
}

/// A real symmetric GOE matrix: off-diagonal N(0, 1), diagonal N(0, 2).
#[derive(Debug, Clone, PartialEq)]
pub struct GoeSample {
    pub matrix: DMatrix<f64>,
}

pub fn sample_goe(n: usize, seed: u64) -> Result<GoeSample> {
    if n == 0 {
        return Err(Error::InvalidParameter("GOE size must be at least 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let d: f64 = rng.sample(StandardNormal);
        m[(i, i)] = std::f64::consts::SQRT_2 * d;
        for j in i + 1..n {
            let x: f64 = rng.sample(StandardNormal);
            m[(i, j)] = x;
            m[(j, i)] = x;
        }
    }
    Ok(GoeSample { matrix: m })
}
