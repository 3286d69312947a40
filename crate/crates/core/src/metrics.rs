//! Clustering agreement measures: adjusted Rand index for flat partitions,
//! and the per-cluster and hierarchical F-measures for overlapping, possibly
//! incomplete ground truth.

use std::collections::{BTreeSet, HashMap};
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::partition::ClusterTree;

fn pairs(k: u64) -> u128 {
    let k = k as u128;
    k * k.saturating_sub(1) / 2
}

/// Adjusted Rand index of two flat labellings of the same nodes. Cluster
/// ids are arbitrary; only co-membership matters.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::UniverseMismatch(format!("{} labels vs {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut joint: HashMap<(usize, usize), u64> = HashMap::new();
    let mut row: HashMap<usize, u64> = HashMap::new();
    let mut col: HashMap<usize, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1;
        *row.entry(x).or_default() += 1;
        *col.entry(y).or_default() += 1;
    }
    let index: u128 = joint.values().map(|&c| pairs(c)).sum();
    let sum_a: u128 = row.values().map(|&c| pairs(c)).sum();
    let sum_b: u128 = col.values().map(|&c| pairs(c)).sum();
    let total = pairs(a.len() as u64);
    if total == 0 {
        return Ok(1.0);
    }
    // (index - E) / (max - E) with E = sum_a sum_b / total and
    // max = (sum_a + sum_b) / 2, multiplied through by 2 total so the
    // arithmetic stays in integers until the final division.
    let (index, sum_a, sum_b, total) = (index as i128, sum_a as i128, sum_b as i128, total as i128);
    let numerator = 2 * (index * total - sum_a * sum_b);
    let denominator = (sum_a + sum_b) * total - 2 * sum_a * sum_b;
    if denominator == 0 {
        return Ok(1.0);
    }
    Ok(numerator as f64 / denominator as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FScore {
    pub recall: f64,
    pub precision: f64,
    pub f: f64,
}

/// Recall `|C ∩ Ĉ| / |C|`, precision `|C ∩ Ĉ| / |Ĉ|` and their harmonic
/// mean, for a true cluster `c` and a found cluster `c_hat`.
pub fn cluster_f_measure(c: &[usize], c_hat: &[usize]) -> Result<FScore> {
    let c: BTreeSet<usize> = c.iter().copied().collect();
    let c_hat: BTreeSet<usize> = c_hat.iter().copied().collect();
    if c.is_empty() || c_hat.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok(f_from_counts(c.intersection(&c_hat).count(), c.len(), c_hat.len()))
}

fn f_from_counts(common: usize, size: usize, size_hat: usize) -> FScore {
    let recall = common as f64 / size as f64;
    let precision = common as f64 / size_hat as f64;
    let f = if common == 0 {
        0.0
    } else {
        2.0 * recall * precision / (recall + precision)
    };
    FScore { recall, precision, f }
}

/// Size-weighted average over truth clusters of the best F-measure against
/// any subtree of `tree` (internal nodes included).
pub fn hierarchical_f_measure(truth: &[Vec<usize>], tree: &ClusterTree) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::EmptySet);
    }
    let truth: Vec<BTreeSet<usize>> = truth.iter().map(|c| c.iter().copied().collect()).collect();
    if truth.iter().any(|c| c.is_empty()) {
        return Err(Error::EmptySet);
    }
    let mut containing: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, c) in truth.iter().enumerate() {
        for &v in c {
            containing.entry(v).or_default().push(i);
        }
    }
    let mut best = vec![0.0f64; truth.len()];
    let mut common = vec![0usize; truth.len()];
    for node in tree.nodes() {
        if node.members.is_empty() {
            continue;
        }
        common.iter_mut().for_each(|c| *c = 0);
        for v in &node.members {
            for &i in containing.get(v).map(Vec::as_slice).unwrap_or(&[]) {
                common[i] += 1;
            }
        }
        for (i, c) in truth.iter().enumerate() {
            let f = f_from_counts(common[i], c.len(), node.members.len()).f;
            best[i] = best[i].max(f);
        }
    }
    let weight: usize = truth.iter().map(BTreeSet::len).sum();
    let total: f64 = best.iter().zip(&truth).map(|(x, c)| x * c.len() as f64).sum();
    Ok(total / weight as f64)
}

fn content_lines<R: BufRead>(reader: R) -> impl Iterator<Item = (usize, std::io::Result<String>)> {
    reader
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty() && !s.trim_start().starts_with('#')))
}

/// Ground-truth clusters, one per line as whitespace-separated node ids.
/// Clusters may overlap and need not cover every node.
pub fn read_truth_sets<R: BufRead>(reader: R) -> Result<Vec<Vec<String>>> {
    let mut sets = Vec::new();
    for (_, line) in content_lines(reader) {
        sets.push(line?.split_whitespace().map(str::to_string).collect());
    }
    Ok(sets)
}

/// Flat labelling as `node cluster` pairs, one per line.
pub fn read_flat_labels<R: BufRead>(reader: R) -> Result<Vec<(String, String)>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (number, line) in content_lines(reader) {
        let line = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: number,
                message: format!("expected `node cluster`, found {} fields", fields.len()),
            });
        }
        if !seen.insert(fields[0].to_string()) {
            return Err(Error::Parse {
                line: number,
                message: format!("node {} labelled twice", fields[0]),
            });
        }
        out.push((fields[0].to_string(), fields[1].to_string()));
    }
    Ok(out)
}

/// Converts `node cluster` pairs into a dense labelling of the universe
/// given by `index` (label to position). Every node must be labelled.
pub fn flat_labels_on(pairs: &[(String, String)], index: &HashMap<String, usize>) -> Result<Vec<usize>> {
    let mut clusters: HashMap<&str, usize> = HashMap::new();
    let mut labels = vec![usize::MAX; index.len()];
    for (node, cluster) in pairs {
        let &v = index
            .get(node)
            .ok_or_else(|| Error::UniverseMismatch(format!("node {node:?} is not in the clustering")))?;
        let next = clusters.len();
        labels[v] = *clusters.entry(cluster.as_str()).or_insert(next);
    }
    if let Some(v) = labels.iter().position(|&l| l == usize::MAX) {
        let name = index.iter().find(|(_, &i)| i == v).map(|(k, _)| k.clone()).unwrap_or_default();
        return Err(Error::UniverseMismatch(format!("node {name:?} has no truth label")));
    }
    Ok(labels)
}

/// Turns a flat labelling into disjoint clusters, ordered by first
/// appearance.
pub fn clusters_of(labels: &[usize]) -> Vec<Vec<usize>> {
    let mut slot: HashMap<usize, usize> = HashMap::new();
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (v, &l) in labels.iter().enumerate() {
        let k = *slot.entry(l).or_insert_with(|| {
            out.push(Vec::new());
            out.len() - 1
        });
        out[k].push(v);
    }
    out
}
