//! Recursive bipartitioning driven by the Tracy-Widom test.
//!
//! Starting from the whole graph, each subgraph is tested against the
//! Erdős–Rényi null. If the test rejects, the subgraph is cut in two by
//! regularized spectral clustering and both halves are processed the same
//! way; otherwise it becomes a leaf. The result is a binary [`ClusterTree`]
//! whose leaves are the detected communities.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::eigen::{largest_eigenpair, EigenOptions, SymmetricOperator};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeSubset};
use crate::hypothesis::{run_test, TestConfig};
use crate::random::derive_seed;
use crate::spectral::statistic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The test did not reject at level alpha.
    NotSignificant,
    /// Fewer nodes than the configured minimum size.
    MinSize,
    /// A single node.
    TooSmall,
    /// Edge density 0 or 1.
    DegenerateDensity,
    /// The bootstrap could not estimate a null spread.
    DegenerateBootstrap,
    /// A node with no edges inside its parent subgraph.
    IsolatedNode,
    /// The eigensolver failed, either in the test or in the cut.
    SolverFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    /// Two-means on the spectral coordinate.
    Spectral,
    /// The spectral coordinate was constant; split by index at the median.
    MedianFallback,
    /// Isolated nodes were separated from the rest before testing.
    IsolatedNodes,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularizer {
    /// Tau equal to the average degree of the subgraph being cut.
    AverageDegree,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionConfig {
    pub alpha: f64,
    /// Subgraphs with fewer nodes become leaves untested. `None` disables.
    pub min_size: Option<usize>,
    pub test: TestConfig,
    pub regularizer: Regularizer,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        PartitionConfig {
            alpha: 0.01,
            min_size: Some(10),
            test: TestConfig::default(),
            regularizer: Regularizer::AverageDegree,
        }
    }
}

impl PartitionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha {} not in (0, 1)", self.alpha)));
        }
        if let Some(m) = self.min_size {
            if m < 2 {
                return Err(Error::InvalidParameter(format!("min size {m} below 2")));
            }
        }
        if let Regularizer::Fixed(t) = self.regularizer {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::InvalidParameter(format!("regularizer {t} must be finite and >= 0")));
            }
        }
        if self.test.bootstrap_samples < 2 {
            return Err(Error::InvalidParameter("need at least 2 bootstrap samples".into()));
        }
        Ok(())
    }
}

/// A node of the hierarchy. Members are indices into the clustered graph,
/// sorted ascending. Internal nodes have exactly two children whose member
/// sets partition the parent's.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterTree {
    /// Preorder position, root = 0.
    pub id: usize,
    pub depth: usize,
    pub members: Vec<usize>,
    pub p_hat: Option<f64>,
    pub theta: Option<f64>,
    pub p_value: Option<f64>,
    pub stop_reason: Option<StopReason>,
    pub split: Option<SplitKind>,
    pub children: Vec<ClusterTree>,
}

impl ClusterTree {
    fn leaf(members: Vec<usize>, depth: usize, p_hat: Option<f64>, reason: StopReason) -> ClusterTree {
        ClusterTree {
            id: 0,
            depth,
            members,
            p_hat,
            theta: None,
            p_value: None,
            stop_reason: Some(reason),
            split: None,
            children: Vec::new(),
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// All nodes in preorder.
    pub fn nodes(&self) -> Vec<&ClusterTree> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            out.push(t);
            stack.extend(t.children.iter().rev());
        }
        out
    }

    /// Leaves from left to right.
    pub fn leaves(&self) -> Vec<&ClusterTree> {
        self.nodes().into_iter().filter(|t| t.is_leaf()).collect()
    }

    pub fn height(&self) -> usize {
        self.nodes().iter().map(|t| t.depth - self.depth).max().unwrap_or(0)
    }

    fn renumber(&mut self, next: &mut usize, depth: usize) {
        self.id = *next;
        self.depth = depth;
        *next += 1;
        for c in &mut self.children {
            c.renumber(next, depth + 1);
        }
    }

    pub fn to_json(&self, g: &Graph) -> TreeJson {
        TreeJson {
            id: self.id,
            size: self.size(),
            depth: self.depth,
            p_hat: self.p_hat,
            theta: self.theta,
            p_value: self.p_value,
            stop_reason: self.stop_reason,
            split: self.split,
            members: self.is_leaf().then(|| self.members.iter().map(|&v| g.label(v)).collect()),
            children: self.children.iter().map(|c| c.to_json(g)).collect(),
        }
    }
}

/// Serialized form of a [`ClusterTree`]. Only leaves list their members, by
/// node label; internal members are the union of their leaves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeJson {
    pub id: usize,
    pub size: usize,
    #[serde(default)]
    pub depth: usize,
    pub p_hat: Option<f64>,
    #[serde(default)]
    pub theta: Option<f64>,
    pub p_value: Option<f64>,
    pub stop_reason: Option<StopReason>,
    #[serde(default)]
    pub split: Option<SplitKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub members: Option<Vec<String>>,
    pub children: Vec<TreeJson>,
}

impl TreeJson {
    /// Rebuilds the tree over a universe made of the labels found in its
    /// leaves, numbered in left-to-right leaf order. Returns the tree and
    /// the labels by index.
    pub fn to_tree(&self) -> Result<(ClusterTree, Vec<String>)> {
        let mut labels = Vec::new();
        let mut index = HashMap::new();
        let tree = self.convert(&mut labels, &mut index)?;
        validate(&tree)?;
        Ok((tree, labels))
    }

    fn convert(&self, labels: &mut Vec<String>, index: &mut HashMap<String, usize>) -> Result<ClusterTree> {
        let members = if self.children.is_empty() {
            let names = self
                .members
                .as_ref()
                .ok_or_else(|| Error::InvalidTree(format!("leaf {} lists no members", self.id)))?;
            let mut members = Vec::with_capacity(names.len());
            for name in names {
                if index.contains_key(name) {
                    return Err(Error::InvalidTree(format!("node {name:?} appears in two leaves")));
                }
                index.insert(name.clone(), labels.len());
                members.push(labels.len());
                labels.push(name.clone());
            }
            members
        } else {
            Vec::new()
        };
        let children = self
            .children
            .iter()
            .map(|c| c.convert(labels, index))
            .collect::<Result<Vec<_>>>()?;
        let mut members = if children.is_empty() {
            members
        } else {
            children.iter().flat_map(|c| c.members.iter().copied()).collect()
        };
        members.sort_unstable();
        if members.len() != self.size {
            return Err(Error::InvalidTree(format!(
                "node {} declares size {} but holds {} members",
                self.id,
                self.size,
                members.len()
            )));
        }
        Ok(ClusterTree {
            id: self.id,
            depth: self.depth,
            members,
            p_hat: self.p_hat,
            theta: self.theta,
            p_value: self.p_value,
            stop_reason: self.stop_reason,
            split: self.split,
            children,
        })
    }
}

/// `D_tau^-1/2 (A + (tau/n) J) D_tau^-1/2` with `D_tau = D + tau I`.
struct RegularizedAdjacency<'a> {
    graph: &'a Graph,
    inv_sqrt_degree: Vec<f64>,
    tau_over_n: f64,
}

impl SymmetricOperator for RegularizedAdjacency<'_> {
    fn dim(&self) -> usize {
        self.graph.node_count()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let z: Vec<f64> = x.iter().zip(&self.inv_sqrt_degree).map(|(a, b)| a * b).collect();
        self.graph.adjacency_matvec(&z, y);
        let shift = self.tau_over_n * z.iter().sum::<f64>();
        for (yi, s) in y.iter_mut().zip(&self.inv_sqrt_degree) {
            *yi = (*yi + shift) * s;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bipartition {
    /// Contains node 0.
    pub left: NodeSubset,
    pub right: NodeSubset,
    pub kind: SplitKind,
}

/// Splits `g` in two by regularized spectral clustering with `tau` equal to
/// the average degree.
pub fn spectral_bipartition(g: &Graph) -> Result<Bipartition> {
    spectral_bipartition_with(g, Regularizer::AverageDegree, &EigenOptions::default())
}

/// Splits `g` in two by regularized spectral clustering.
///
/// The top eigenvector of the regularized operator is known in closed form
/// (proportional to `sqrt(d_i + tau)`), so it is deflated and the next one
/// computed directly. Each node gets the coordinate `v_i / sqrt(d_i + tau)`,
/// which orders nodes the same way as the angle of their row in the
/// normalized two-column embedding, and the coordinates are cut by exact
/// one-dimensional two-means.
pub fn spectral_bipartition_with(g: &Graph, regularizer: Regularizer, opts: &EigenOptions) -> Result<Bipartition> {
    let n = g.node_count();
    if n < 2 {
        return Err(Error::TooFewNodes { n, needed: 2 });
    }
    let tau = match regularizer {
        Regularizer::AverageDegree => 2.0 * g.edge_count() as f64 / n as f64,
        Regularizer::Fixed(t) => t,
    };
    let degrees = g.degrees();
    let coords = if degrees.iter().all(|&d| d as f64 + tau > 0.0) {
        let inv_sqrt_degree: Vec<f64> = degrees.iter().map(|&d| 1.0 / (d as f64 + tau).sqrt()).collect();
        let op = RegularizedAdjacency {
            graph: g,
            inv_sqrt_degree,
            tau_over_n: tau / n as f64,
        };
        let total: f64 = degrees.iter().map(|&d| d as f64 + tau).sum();
        let top: Vec<f64> = degrees.iter().map(|&d| ((d as f64 + tau) / total).sqrt()).collect();
        let pair = largest_eigenpair(&op, &[&top], opts)?;
        pair.vector
            .iter()
            .zip(&op.inv_sqrt_degree)
            .map(|(v, s)| v * s)
            .collect()
    } else {
        vec![0.0; n]
    };
    let (side, kind) = match two_means_1d(&coords) {
        Some(side) => (side, SplitKind::Spectral),
        None => ((0..n).map(|i| i >= n / 2).collect(), SplitKind::MedianFallback),
    };
    let flip = side[0];
    let (mut left, mut right) = (Vec::new(), Vec::new());
    for (i, &s) in side.iter().enumerate() {
        if s == flip {
            left.push(i);
        } else {
            right.push(i);
        }
    }
    Ok(Bipartition {
        left: NodeSubset::new(n, left)?,
        right: NodeSubset::new(n, right)?,
        kind,
    })
}

/// Optimal two-cluster k-means of scalars, by a sweep over the sorted
/// values. Returns the side of each point, or `None` when all values are
/// equal up to rounding.
pub fn two_means_1d(x: &[f64]) -> Option<Vec<bool>> {
    let n = x.len();
    if n < 2 {
        return None;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    let (lo, hi) = (x[order[0]], x[order[n - 1]]);
    let scale = lo.abs().max(hi.abs());
    if !(hi - lo > 1e-12 * scale) {
        return None;
    }
    // shift for numerical stability of the running sums
    let mid = 0.5 * (lo + hi);
    let v: Vec<f64> = order.iter().map(|&i| x[i] - mid).collect();
    let total: f64 = v.iter().sum();
    let total_sq: f64 = v.iter().map(|a| a * a).sum();
    let (mut s, mut sq) = (0.0, 0.0);
    let mut best = (f64::INFINITY, 0);
    for k in 1..n {
        s += v[k - 1];
        sq += v[k - 1] * v[k - 1];
        if v[k] == v[k - 1] {
            continue;
        }
        let (nl, nr) = (k as f64, (n - k) as f64);
        let cost = (sq - s * s / nl) + (total_sq - sq - (total - s) * (total - s) / nr);
        if cost < best.0 {
            best = (cost, k);
        }
    }
    if best.1 == 0 {
        return None;
    }
    let mut side = vec![false; n];
    for &i in &order[best.1..] {
        side[i] = true;
    }
    Some(side)
}

/// Runs the recursion on `g`. Degenerate situations become leaves with a
/// recorded reason rather than errors; only an invalid configuration fails.
pub fn recursive_bipartition(g: &Graph, cfg: &PartitionConfig) -> Result<ClusterTree> {
    cfg.validate()?;
    let global: Vec<usize> = (0..g.node_count()).collect();
    let mut tree = if g.node_count() == 0 {
        ClusterTree::leaf(Vec::new(), 0, None, StopReason::DegenerateDensity)
    } else {
        grow(g, global, 0, cfg.test.seed, cfg)
    };
    tree.renumber(&mut 0, 0);
    Ok(tree)
}

fn grow(g: &Graph, global: Vec<usize>, depth: usize, seed: u64, cfg: &PartitionConfig) -> ClusterTree {
    let n = g.node_count();
    if n < 2 {
        return ClusterTree::leaf(global, depth, None, StopReason::TooSmall);
    }
    let p_hat = g.edge_density().expect("n >= 2");
    if cfg.min_size.is_some_and(|m| n < m) {
        return ClusterTree::leaf(global, depth, Some(p_hat), StopReason::MinSize);
    }
    if p_hat <= 0.0 || p_hat >= 1.0 {
        return ClusterTree::leaf(global, depth, Some(p_hat), StopReason::DegenerateDensity);
    }

    let (core, mapping) = g.remove_isolated_nodes();
    if core.node_count() < n {
        let mut core_global = Vec::with_capacity(core.node_count());
        let mut isolated = Vec::new();
        for (old, new) in mapping.iter().enumerate() {
            match new {
                Some(_) => core_global.push(global[old]),
                None => isolated.push(global[old]),
            }
        }
        let (left, right) = rayon::join(
            || grow(&core, core_global, depth + 1, derive_seed(seed, 0), cfg),
            || isolated_group(isolated, depth + 1),
        );
        return ClusterTree {
            id: 0,
            depth,
            members: global,
            p_hat: Some(p_hat),
            theta: None,
            p_value: None,
            stop_reason: None,
            split: Some(SplitKind::IsolatedNodes),
            children: vec![left, right],
        };
    }

    let test_cfg = cfg.test.with_seed(derive_seed(seed, 2));
    let outcome = statistic(g, cfg.test.variant, &cfg.test.eigen)
        .and_then(|stat| run_test(stat.theta, stat.n, stat.p_hat, &test_cfg).map(|r| (stat.theta, r.p_value)));
    let (theta, p_value) = match outcome {
        Ok(v) => v,
        Err(e) => {
            let reason = match e {
                Error::DegenerateBootstrap | Error::DegenerateReplicate => StopReason::DegenerateBootstrap,
                Error::DegenerateDensity(_) => StopReason::DegenerateDensity,
                Error::TooFewNodes { .. } => StopReason::TooSmall,
                _ => StopReason::SolverFailure,
            };
            log::debug!("leaf of {n} nodes at depth {depth}: {e}");
            return ClusterTree::leaf(global, depth, Some(p_hat), reason);
        }
    };
    let tested_leaf = |reason| ClusterTree {
        theta: Some(theta),
        p_value: Some(p_value),
        ..ClusterTree::leaf(global.clone(), depth, Some(p_hat), reason)
    };
    if p_value >= cfg.alpha {
        return tested_leaf(StopReason::NotSignificant);
    }
    let cut = match spectral_bipartition_with(g, cfg.regularizer, &cfg.test.eigen) {
        Ok(cut) => cut,
        Err(e) => {
            log::debug!("bipartition of {n} nodes failed: {e}");
            return tested_leaf(StopReason::SolverFailure);
        }
    };
    let side_graph = |s: &NodeSubset| g.induced_subgraph(s).expect("subset of g");
    let side_global = |s: &NodeSubset| s.members().iter().map(|&i| global[i]).collect::<Vec<_>>();
    let (lg, rg) = (side_graph(&cut.left), side_graph(&cut.right));
    let (lglob, rglob) = (side_global(&cut.left), side_global(&cut.right));
    let (left, right) = rayon::join(
        || grow(&lg, lglob, depth + 1, derive_seed(seed, 0), cfg),
        || grow(&rg, rglob, depth + 1, derive_seed(seed, 1), cfg),
    );
    ClusterTree {
        id: 0,
        depth,
        members: global,
        p_hat: Some(p_hat),
        theta: Some(theta),
        p_value: Some(p_value),
        stop_reason: None,
        split: Some(cut.kind),
        children: vec![left, right],
    }
}

/// Balanced binary tree of singleton leaves.
fn isolated_group(members: Vec<usize>, depth: usize) -> ClusterTree {
    if members.len() == 1 {
        return ClusterTree::leaf(members, depth, None, StopReason::IsolatedNode);
    }
    let half = members.len() / 2;
    let left = isolated_group(members[..half].to_vec(), depth + 1);
    let right = isolated_group(members[half..].to_vec(), depth + 1);
    ClusterTree {
        id: 0,
        depth,
        members,
        p_hat: Some(0.0),
        theta: None,
        p_value: None,
        stop_reason: None,
        split: Some(SplitKind::IsolatedNodes),
        children: vec![left, right],
    }
}

/// Member sets of the leaves, left to right.
pub fn flatten_leaves(tree: &ClusterTree) -> Vec<Vec<usize>> {
    tree.leaves().into_iter().map(|t| t.members.clone()).collect()
}

/// Flat labelling of `0..n` by leaf position. Errors if the leaves do not
/// cover `0..n` exactly.
pub fn leaf_labels(tree: &ClusterTree, n: usize) -> Result<Vec<usize>> {
    let mut labels = vec![usize::MAX; n];
    for (k, leaf) in flatten_leaves(tree).into_iter().enumerate() {
        for v in leaf {
            if v >= n || labels[v] != usize::MAX {
                return Err(Error::InvalidTree(format!("node {v} is out of range or repeated")));
            }
            labels[v] = k;
        }
    }
    if labels.contains(&usize::MAX) {
        return Err(Error::InvalidTree(format!("leaves do not cover all {n} nodes")));
    }
    Ok(labels)
}

/// One diagonal block of the ordered adjacency matrix: positions
/// `start..end` hold the members of tree node `id`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Block {
    pub id: usize,
    pub start: usize,
    pub end: usize,
    pub depth: usize,
    pub p_hat: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityOrdering {
    /// `permutation[k]` is the node placed at row `k`.
    pub permutation: Vec<usize>,
    /// One block per tree node, in preorder.
    pub blocks: Vec<Block>,
}

/// Orders nodes so that every subtree occupies a contiguous range.
pub fn density_ordering(tree: &ClusterTree) -> DensityOrdering {
    let mut permutation = Vec::with_capacity(tree.size());
    let mut blocks = Vec::new();
    fn walk(t: &ClusterTree, perm: &mut Vec<usize>, blocks: &mut Vec<Block>) {
        let slot = blocks.len();
        let start = perm.len();
        blocks.push(Block {
            id: t.id,
            start,
            end: start,
            depth: t.depth,
            p_hat: t.p_hat,
        });
        if t.is_leaf() {
            perm.extend_from_slice(&t.members);
        } else {
            for c in &t.children {
                walk(c, perm, blocks);
            }
        }
        blocks[slot].end = perm.len();
    }
    walk(tree, &mut permutation, &mut blocks);
    DensityOrdering { permutation, blocks }
}

impl DensityOrdering {
    /// One node label per line, in row order.
    pub fn write_permutation<W: Write>(&self, g: &Graph, mut out: W) -> std::io::Result<()> {
        for &v in &self.permutation {
            writeln!(out, "{}", g.label(v))?;
        }
        Ok(())
    }

    pub fn write_blocks_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "start,end,depth,p_hat")?;
        for b in &self.blocks {
            let p = b.p_hat.map(|p| format!("{p:.10}")).unwrap_or_default();
            writeln!(out, "{},{},{},{}", b.start, b.end, b.depth, p)?;
        }
        Ok(())
    }
}

/// Structural checks: children partition their parent, ids are preorder,
/// depths increase by one, leaves carry a stop reason and internal nodes a
/// split kind.
pub fn validate(tree: &ClusterTree) -> Result<()> {
    let mut next_id = tree.id;
    check_node(tree, tree.depth, &mut next_id)
}

fn check_node(t: &ClusterTree, depth: usize, next_id: &mut usize) -> Result<()> {
    let fail = |msg: String| Err(Error::InvalidTree(format!("node {}: {msg}", t.id)));
    if t.id != *next_id {
        return fail(format!("expected preorder id {next_id}"));
    }
    *next_id += 1;
    if t.depth != depth {
        return fail(format!("depth {} should be {depth}", t.depth));
    }
    if t.members.windows(2).any(|w| w[0] >= w[1]) {
        return fail("members not strictly increasing".into());
    }
    if let Some(p) = t.p_value {
        if !(0.0..=1.0).contains(&p) {
            return fail(format!("p-value {p} outside [0, 1]"));
        }
    }
    match t.children.len() {
        0 => {
            if t.stop_reason.is_none() {
                return fail("leaf without stop reason".into());
            }
            if t.stop_reason == Some(StopReason::NotSignificant) && t.p_value.is_none() {
                return fail("not-significant leaf without p-value".into());
            }
            if t.split.is_some() {
                return fail("leaf with split kind".into());
            }
        }
        2 => {
            if t.split.is_none() || t.stop_reason.is_some() {
                return fail("internal node must have a split kind and no stop reason".into());
            }
            let (a, b) = (&t.children[0], &t.children[1]);
            if a.members.is_empty() || b.members.is_empty() {
                return fail("empty child".into());
            }
            let mut union: Vec<usize> = a.members.iter().chain(&b.members).copied().collect();
            union.sort_unstable();
            if union != t.members {
                return fail("children do not partition the node".into());
            }
            for c in &t.children {
                check_node(c, depth + 1, next_id)?;
            }
        }
        k => return fail(format!("{k} children")),
    }
    Ok(())
}

/// [`validate`] plus the significance rule: internal nodes split by the
/// test have p < alpha and not-significant leaves have p >= alpha.
pub fn validate_with_alpha(tree: &ClusterTree, alpha: f64) -> Result<()> {
    validate(tree)?;
    for t in tree.nodes() {
        let tested_split = matches!(t.split, Some(SplitKind::Spectral | SplitKind::MedianFallback));
        match (tested_split, t.stop_reason, t.p_value) {
            (true, _, Some(p)) if p >= alpha => {
                return Err(Error::InvalidTree(format!("node {} split with p = {p} >= {alpha}", t.id)))
            }
            (true, _, None) => return Err(Error::InvalidTree(format!("node {} split without a p-value", t.id))),
            (_, Some(StopReason::NotSignificant), Some(p)) if p < alpha => {
                return Err(Error::InvalidTree(format!("leaf {} has p = {p} < {alpha}", t.id)))
            }
            _ => {}
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::adjusted_rand_index;
    use crate::random::{sample_er, sample_sbm, ErParams, SbmParams};
    use proptest::prelude::*;

    fn quick(alpha: f64, seed: u64) -> PartitionConfig {
        PartitionConfig {
            alpha,
            test: TestConfig {
                bootstrap_samples: 30,
                seed,
                ..TestConfig::default()
            },
            ..PartitionConfig::default()
        }
    }

    fn two_cliques_with_bridge() -> Graph {
        let mut edges = Vec::new();
        for base in [0, 5] {
            for i in 0..5 {
                for j in i + 1..5 {
                    edges.push((base + i, base + j));
                }
            }
        }
        edges.push((4, 5));
        crate::graph::build_graph(10, edges).unwrap()
    }

    /// Normalized cut over every bipartition with both sides nonempty.
    fn brute_force_best_cut(g: &Graph) -> Vec<usize> {
        let n = g.node_count();
        let deg = g.degrees();
        let mut best = (f64::INFINITY, 0u32);
        for mask in 1..(1u32 << n) - 1 {
            let inside = |v: usize| mask >> v & 1 == 1;
            let cut = g.edges().filter(|&(i, j)| inside(i) != inside(j)).count() as f64;
            let vol: f64 = (0..n).filter(|&v| inside(v)).map(|v| deg[v] as f64).sum();
            let total: f64 = deg.iter().sum::<usize>() as f64;
            let ncut = cut / vol + cut / (total - vol);
            if ncut < best.0 - 1e-12 {
                best = (ncut, mask);
            }
        }
        (0..n).filter(|&v| best.1 >> v & 1 == 1).collect()
    }

    #[test]
    fn recovers_two_cliques_like_brute_force() {
        let g = two_cliques_with_bridge();
        let cut = spectral_bipartition(&g).unwrap();
        assert_eq!(cut.kind, SplitKind::Spectral);
        assert_eq!(cut.left.members(), &[0, 1, 2, 3, 4]);
        let oracle = brute_force_best_cut(&g);
        let oracle_side: Vec<usize> = if oracle.contains(&0) {
            oracle
        } else {
            (0..10).filter(|v| !oracle.contains(v)).collect()
        };
        assert_eq!(cut.left.members(), oracle_side.as_slice());
    }

    #[test]
    fn k2_splits_into_singletons() {
        let g = Graph::complete(2);
        let cut = spectral_bipartition(&g).unwrap();
        assert_eq!(cut.left.members(), &[0]);
        assert_eq!(cut.right.members(), &[1]);
    }

    #[test]
    fn constant_coordinates_fall_back_to_median() {
        let cut = spectral_bipartition(&Graph::empty(5)).unwrap();
        assert_eq!(cut.kind, SplitKind::MedianFallback);
        assert_eq!(cut.left.members(), &[0, 1]);
        assert_eq!(cut.right.members(), &[2, 3, 4]);
        assert!(spectral_bipartition(&Graph::empty(1)).is_err());
    }

    #[test]
    fn two_means_matches_exhaustive_search() {
        let x = [0.3, -1.2, 2.5, 2.4, -0.9, 0.1, 3.3, -2.0];
        let side = two_means_1d(&x).unwrap();
        let cost = |s: &[bool]| {
            let mut c = 0.0;
            for flag in [false, true] {
                let v: Vec<f64> = x.iter().zip(s).filter(|(_, &f)| f == flag).map(|(a, _)| *a).collect();
                let m = v.iter().sum::<f64>() / v.len() as f64;
                c += v.iter().map(|a| (a - m).powi(2)).sum::<f64>();
            }
            c
        };
        let mut best = f64::INFINITY;
        for mask in 1..(1u32 << x.len()) - 1 {
            let s: Vec<bool> = (0..x.len()).map(|i| mask >> i & 1 == 1).collect();
            best = best.min(cost(&s));
        }
        assert!((cost(&side) - best).abs() < 1e-12);
        assert!(two_means_1d(&[1.0, 1.0, 1.0]).is_none());
    }

    #[test]
    fn separates_planted_blocks() {
        let params = SbmParams::from_row_major(vec![150, 150], &[0.3, 0.05, 0.05, 0.3]).unwrap();
        let mut good = 0;
        for seed in 0..20 {
            let (g, truth) = sample_sbm(&params, seed);
            let cut = spectral_bipartition(&g).unwrap();
            let mut found = vec![0; 300];
            for &v in cut.right.members() {
                found[v] = 1;
            }
            if adjusted_rand_index(&found, &truth).unwrap() >= 0.95 {
                good += 1;
            }
        }
        assert!(good >= 19, "{good}/20");
    }

    #[test]
    fn null_graph_stays_whole() {
        let g = sample_er(&ErParams::new(300, 0.2).unwrap(), 77);
        let tree = recursive_bipartition(&g, &quick(0.001, 1)).unwrap();
        assert!(tree.is_leaf());
        assert_eq!(tree.stop_reason, Some(StopReason::NotSignificant));
        assert!(tree.p_value.unwrap() >= 0.001);
    }

    #[test]
    fn finds_three_blocks() {
        let params =
            SbmParams::from_row_major(vec![100, 100, 100], &[0.4, 0.05, 0.05, 0.05, 0.4, 0.05, 0.05, 0.05, 0.4]).unwrap();
        let (g, truth) = sample_sbm(&params, 3);
        let tree = recursive_bipartition(&g, &quick(0.01, 5)).unwrap();
        validate_with_alpha(&tree, 0.01).unwrap();
        let labels = leaf_labels(&tree, 300).unwrap();
        assert_eq!(tree.leaves().len(), 3);
        assert!((adjusted_rand_index(&labels, &truth).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tree_is_deterministic_and_schedule_independent() {
        let params = SbmParams::from_row_major(vec![60, 90], &[0.5, 0.1, 0.1, 0.3]).unwrap();
        let (g, _) = sample_sbm(&params, 9);
        let cfg = quick(0.05, 21);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| recursive_bipartition(&g, &cfg).unwrap())
        };
        let a = run(1);
        assert_eq!(a, run(3));
        assert_eq!(a, recursive_bipartition(&g, &cfg).unwrap());
    }

    #[test]
    fn degenerate_inputs_become_leaves() {
        let empty = recursive_bipartition(&Graph::empty(0), &quick(0.01, 0)).unwrap();
        assert_eq!(empty.stop_reason, Some(StopReason::DegenerateDensity));
        let edgeless = recursive_bipartition(&Graph::empty(20), &quick(0.01, 0)).unwrap();
        assert!(edgeless.is_leaf());
        assert_eq!(edgeless.stop_reason, Some(StopReason::DegenerateDensity));
        let complete = recursive_bipartition(&Graph::complete(15), &quick(0.01, 0)).unwrap();
        assert_eq!(complete.stop_reason, Some(StopReason::DegenerateDensity));
        let single = recursive_bipartition(&Graph::empty(1), &quick(0.01, 0)).unwrap();
        assert_eq!(single.stop_reason, Some(StopReason::TooSmall));
        let small = recursive_bipartition(&Graph::complete(5), &quick(0.01, 0)).unwrap();
        assert_eq!(small.stop_reason, Some(StopReason::MinSize));
    }

    #[test]
    fn isolated_nodes_become_singleton_leaves() {
        let g = sample_er(&ErParams::new(80, 0.3).unwrap(), 4);
        let mut edges: Vec<(usize, usize)> = g.edges().collect();
        edges.iter_mut().for_each(|e| *e = (e.0 + 3, e.1 + 3));
        let g = crate::graph::build_graph(83, edges).unwrap();
        let tree = recursive_bipartition(&g, &quick(0.001, 4)).unwrap();
        validate(&tree).unwrap();
        assert_eq!(tree.split, Some(SplitKind::IsolatedNodes));
        let singles: Vec<_> = tree
            .leaves()
            .into_iter()
            .filter(|l| l.stop_reason == Some(StopReason::IsolatedNode))
            .map(|l| l.members.clone())
            .collect();
        assert_eq!(singles, vec![vec![0], vec![1], vec![2]]);
        assert_eq!(tree.children[0].size(), 80);
    }

    #[test]
    fn rejects_bad_config() {
        let g = Graph::complete(4);
        for cfg in [
            PartitionConfig { alpha: 0.0, ..quick(0.01, 0) },
            PartitionConfig { alpha: 1.0, ..quick(0.01, 0) },
            PartitionConfig { min_size: Some(1), ..quick(0.01, 0) },
            PartitionConfig { regularizer: Regularizer::Fixed(-1.0), ..quick(0.01, 0) },
        ] {
            assert!(recursive_bipartition(&g, &cfg).is_err());
        }
    }

    fn hand_tree() -> ClusterTree {
        let leaf = |members: Vec<usize>| ClusterTree::leaf(members, 0, Some(0.5), StopReason::NotSignificant);
        let internal = |children: Vec<ClusterTree>| {
            let mut members: Vec<usize> = children.iter().flat_map(|c| c.members.clone()).collect();
            members.sort_unstable();
            ClusterTree {
                id: 0,
                depth: 0,
                members,
                p_hat: Some(0.3),
                theta: Some(5.0),
                p_value: Some(1e-6),
                stop_reason: None,
                split: Some(SplitKind::Spectral),
                children,
            }
        };
        let mut t = internal(vec![internal(vec![leaf(vec![0, 4]), leaf(vec![2])]), leaf(vec![1, 3])]);
        fn set_p(t: &mut ClusterTree) {
            if t.is_leaf() {
                t.p_value = Some(0.4);
            }
            t.children.iter_mut().for_each(set_p);
        }
        set_p(&mut t);
        t.renumber(&mut 0, 0);
        t
    }

    #[test]
    fn flatten_and_labels() {
        let t = hand_tree();
        assert_eq!(flatten_leaves(&t), vec![vec![0, 4], vec![2], vec![1, 3]]);
        assert_eq!(leaf_labels(&t, 5).unwrap(), vec![0, 2, 1, 2, 0]);
        assert!(leaf_labels(&t, 6).is_err());
        let single = ClusterTree::leaf(vec![0, 1, 2], 0, None, StopReason::MinSize);
        assert_eq!(flatten_leaves(&single), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn ordering_blocks_nest() {
        let t = hand_tree();
        validate_with_alpha(&t, 0.01).unwrap();
        let ord = density_ordering(&t);
        assert_eq!(ord.permutation, vec![0, 4, 2, 1, 3]);
        let spans: Vec<(usize, usize, usize)> = ord.blocks.iter().map(|b| (b.start, b.end, b.depth)).collect();
        assert_eq!(spans, vec![(0, 5, 0), (0, 3, 1), (0, 2, 2), (2, 3, 2), (3, 5, 1)]);
        let mut csv = Vec::new();
        ord.write_blocks_csv(&mut csv).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        assert!(csv.starts_with("start,end,depth,p_hat\n0,5,0,0.3000000000\n"));

        let two = ClusterTree {
            children: vec![
                ClusterTree::leaf(vec![0, 1, 2], 1, None, StopReason::MinSize),
                ClusterTree::leaf(vec![3, 4], 1, None, StopReason::MinSize),
            ],
            ..t.clone()
        };
        let ord = density_ordering(&two);
        assert_eq!((ord.blocks[1].start, ord.blocks[1].end), (0, 3));
        assert_eq!((ord.blocks[2].start, ord.blocks[2].end), (3, 5));
    }

    #[test]
    fn validator_catches_broken_trees() {
        let t = hand_tree();
        let mut overlapping = t.clone();
        overlapping.children[1].members = vec![1, 2, 3];
        assert!(validate(&overlapping).is_err());
        let mut bad_id = t.clone();
        bad_id.children[1].id = 9;
        assert!(validate(&bad_id).is_err());
        let mut no_reason = t.clone();
        no_reason.children[1].stop_reason = None;
        assert!(validate(&no_reason).is_err());
        assert!(validate_with_alpha(&t, 1e-7).is_err());
        assert!(validate_with_alpha(&t, 0.5).is_err());
    }

    #[test]
    fn json_round_trip() {
        let t = hand_tree();
        let labels: Vec<String> = ["a", "b", "c", "d", "e"].iter().map(|s| s.to_string()).collect();
        let g = Graph::empty(5).with_labels(labels.clone()).unwrap();
        let json = serde_json::to_string(&t.to_json(&g)).unwrap();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert!(value.get("members").is_none());
        assert_eq!(value["children"][1]["members"], serde_json::json!(["b", "d"]));
        assert_eq!(value["children"][1]["stop_reason"], "not_significant");
        let parsed: TreeJson = serde_json::from_str(&json).unwrap();
        let (back, names) = parsed.to_tree().unwrap();
        let relabel = |tree: &ClusterTree| -> Vec<Vec<String>> {
            flatten_leaves(tree)
                .into_iter()
                .map(|l| l.into_iter().map(|v| names[v].clone()).collect())
                .collect()
        };
        let original: Vec<Vec<String>> = flatten_leaves(&t)
            .into_iter()
            .map(|l| l.into_iter().map(|v| labels[v].clone()).collect())
            .collect();
        assert_eq!(relabel(&back), original);
        assert_eq!(back.nodes().len(), t.nodes().len());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn output_trees_are_valid(seed in any::<u64>(), n1 in 15usize..60, n2 in 15usize..60, inner in 0.2f64..0.6) {
            let params = SbmParams::from_row_major(vec![n1, n2], &[inner, 0.05, 0.05, inner]).unwrap();
            let (g, _) = sample_sbm(&params, seed);
            let mut cfg = quick(0.05, seed);
            cfg.test.bootstrap_samples = 10;
            cfg.min_size = if seed % 2 == 0 { None } else { Some(10) };
            let tree = recursive_bipartition(&g, &cfg).unwrap();
            prop_assert!(validate_with_alpha(&tree, 0.05).is_ok());
            prop_assert_eq!(tree.size(), n1 + n2);
            let ord = density_ordering(&tree);
            let mut seen = ord.permutation.clone();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..n1 + n2).collect::<Vec<_>>());
            for t in tree.nodes() {
                let b = &ord.blocks[t.id];
                for c in &t.children {
                    let cb = &ord.blocks[c.id];
                    prop_assert!(cb.start >= b.start && cb.end <= b.end && cb.end - cb.start < b.end - b.start);
                }
            }
        }
    }
}
