//! Undirected simple graphs stored in compressed sparse row form.
//!
//! A [`Graph`] is immutable once built. Nodes are dense indices `0..n`; an
//! optional label table maps each index back to the id it had in the input
//! file. Every routine downstream (eigensolvers, bootstrap replicates,
//! recursion) works on indices only.

use std::collections::HashMap;
use std::io::BufRead;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    labels: Option<Vec<String>>,
}

/// Counters collected while building a graph from raw input.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub input_pairs: usize,
    pub duplicates: usize,
}

/// Builds a graph on `n` nodes from an edge list.
///
/// Pairs may come in either orientation and may repeat; repeats are dropped
/// and counted in the returned [`BuildStats`]. Self loops are rejected.
pub fn build_graph<I>(n: usize, edges: I) -> Result<Graph>
where
    I: IntoIterator<Item = (usize, usize)>,
{
    Graph::from_edges(n, edges).map(|(g, _)| g)
}

impl Graph {
    pub fn from_edges<I>(n: usize, edges: I) -> Result<(Graph, BuildStats)>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n > u32::MAX as usize {
            return Err(Error::InvalidParameter(format!("{n} nodes exceeds u32 indexing")));
        }
        let mut pairs = Vec::new();
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::NodeOutOfRange(i, j, n));
            }
            if i == j {
                return Err(Error::SelfLoop(i));
            }
            pairs.push(if i < j { (i as u32, j as u32) } else { (j as u32, i as u32) });
        }
        let input_pairs = pairs.len();
        pairs.sort_unstable();
        pairs.dedup();
        let stats = BuildStats {
            input_pairs,
            duplicates: input_pairs - pairs.len(),
        };
        if stats.duplicates > 0 {
            log::debug!("dropped {} duplicate edges", stats.duplicates);
        }
        Ok((Graph::from_unique_pairs(n, &pairs), stats))
    }

    /// Builds from pairs that are already known to be distinct, in range and
    /// loop free (orientation does not matter).
    pub(crate) fn from_unique_pairs(n: usize, pairs: &[(u32, u32)]) -> Graph {
        let mut degree = vec![0usize; n];
        for &(i, j) in pairs {
            degree[i as usize] += 1;
            degree[j as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..n].to_vec();
        let mut neighbors = vec![0u32; offsets[n]];
        for &(i, j) in pairs {
            neighbors[cursor[i as usize]] = j;
            cursor[i as usize] += 1;
            neighbors[cursor[j as usize]] = i;
            cursor[j as usize] += 1;
        }
        for v in 0..n {
            neighbors[offsets[v]..offsets[v + 1]].sort_unstable();
        }
        Graph {
            offsets,
            neighbors,
            labels: None,
        }
    }

    pub fn empty(n: usize) -> Graph {
        Graph::from_unique_pairs(n, &[])
    }

    pub fn complete(n: usize) -> Graph {
        let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n as u32 {
            for j in i + 1..n as u32 {
                pairs.push((i, j));
            }
        }
        Graph::from_unique_pairs(n, &pairs)
    }

    /// Attaches external ids. `labels.len()` must equal the node count.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Graph> {
        if labels.len() != self.node_count() {
            return Err(Error::InvalidParameter(format!(
                "{} labels for {} nodes",
                labels.len(),
                self.node_count()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.node_count()).map(|v| self.degree(v)).collect()
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.neighbors[self.offsets[v]..self.offsets[v + 1]]
            .iter()
            .map(|&u| u as usize)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors[self.offsets[i]..self.offsets[i + 1]]
            .binary_search(&(j as u32))
            .is_ok()
    }

    /// Each undirected edge once, as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.node_count()).flat_map(move |i| {
            self.neighbors(i).filter(move |&j| j > i).map(move |j| (i, j))
        })
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// External id of node `v`, or its index when the graph carries no labels.
    pub fn label(&self, v: usize) -> String {
        match &self.labels {
            Some(l) => l[v].clone(),
            None => v.to_string(),
        }
    }

    /// Proportion of node pairs joined by an edge, `2|E| / (n(n-1))`.
    pub fn edge_density(&self) -> Result<f64> {
        let n = self.node_count();
        if n < 2 {
            return Err(Error::TooFewNodes { n, needed: 2 });
        }
        Ok(2.0 * self.edge_count() as f64 / (n as f64 * (n as f64 - 1.0)))
    }

    /// `y = A x`.
    pub fn adjacency_matvec(&self, x: &[f64], y: &mut [f64]) {
        for (v, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for &u in &self.neighbors[self.offsets[v]..self.offsets[v + 1]] {
                acc += x[u as usize];
            }
            *out = acc;
        }
    }

    /// Subgraph induced by `subset`, relabelled `0..|subset|` in member order.
    pub fn induced_subgraph(&self, subset: &NodeSubset) -> Result<Graph> {
        subset.check_against(self)?;
        let members = subset.members();
        let mut local = vec![u32::MAX; self.node_count()];
        for (k, &v) in members.iter().enumerate() {
            local[v] = k as u32;
        }
        let mut offsets = Vec::with_capacity(members.len() + 1);
        offsets.push(0);
        let mut neighbors = Vec::new();
        for &v in members {
            // `local` is monotone in the original index, so rows stay sorted.
            neighbors.extend(
                self.neighbors[self.offsets[v]..self.offsets[v + 1]]
                    .iter()
                    .map(|&u| local[u as usize])
                    .filter(|&u| u != u32::MAX),
            );
            offsets.push(neighbors.len());
        }
        let labels = self
            .labels
            .as_ref()
            .map(|l| members.iter().map(|&v| l[v].clone()).collect());
        Ok(Graph {
            offsets,
            neighbors,
            labels,
        })
    }

    /// Drops zero-degree nodes. The mapping gives, for every old index, its
    /// new index or `None` when it was removed.
    pub fn remove_isolated_nodes(&self) -> (Graph, Vec<Option<usize>>) {
        let kept: Vec<usize> = (0..self.node_count()).filter(|&v| self.degree(v) > 0).collect();
        let mut mapping = vec![None; self.node_count()];
        for (k, &v) in kept.iter().enumerate() {
            mapping[v] = Some(k);
        }
        let subset = NodeSubset { members: kept };
        let g = self
            .induced_subgraph(&subset)
            .expect("non-isolated nodes form a valid subset");
        (g, mapping)
    }

    /// Reads a whitespace separated edge list.
    ///
    /// Blank lines and lines starting with `#` are skipped. Node ids are
    /// arbitrary tokens and get dense indices in order of first appearance.
    pub fn read_edge_list<R: BufRead>(reader: R) -> Result<(Graph, BuildStats)> {
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut labels = Vec::new();
        let mut edges = Vec::new();
        let mut intern = |tok: &str| -> usize {
            if let Some(&i) = index.get(tok) {
                return i;
            }
            let i = labels.len();
            labels.push(tok.to_string());
            index.insert(tok.to_string(), i);
            i
        };
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut toks = trimmed.split_whitespace();
            let (a, b) = match (toks.next(), toks.next()) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        message: "expected two node ids".into(),
                    })
                }
            };
            if a == b {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("self loop at node {a}"),
                });
            }
            let (i, j) = (intern(a), intern(b));
            edges.push((i, j));
        }
        let n = labels.len();
        let (g, stats) = Graph::from_edges(n, edges)?;
        if stats.duplicates > 0 {
            log::warn!("edge list contained {} duplicate edges", stats.duplicates);
        }
        Ok((g.with_labels(labels)?, stats))
    }

    /// Writes one `u v` line per edge using node labels. Isolated nodes
    /// cannot be represented and are dropped.
    pub fn write_edge_list<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        for (i, j) in self.edges() {
            writeln!(out, "{} {}", self.label(i), self.label(j))?;
        }
        Ok(())
    }

    /// Index of every label, for matching external ids against this graph.
    pub fn label_index(&self) -> HashMap<String, usize> {
        (0..self.node_count()).map(|v| (self.label(v), v)).collect()
    }
}

/// A sorted set of distinct node indices of some parent graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NodeSubset {
    members: Vec<usize>,
}

impl NodeSubset {
    /// Sorts `members`; rejects duplicates and indices `>= n`.
    pub fn new(n: usize, mut members: Vec<usize>) -> Result<NodeSubset> {
        members.sort_unstable();
        if let Some(w) = members.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidSubset(format!("node {} listed twice", w[0])));
        }
        if let Some(&last) = members.last() {
            if last >= n {
                return Err(Error::InvalidSubset(format!("node {last} outside 0..{n}")));
            }
        }
        Ok(NodeSubset { members })
    }

    pub fn all(n: usize) -> NodeSubset {
        NodeSubset {
            members: (0..n).collect(),
        }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn into_members(self) -> Vec<usize> {
        self.members
    }

    fn check_against(&self, g: &Graph) -> Result<()> {
        match self.members.last() {
            Some(&last) if last >= g.node_count() => Err(Error::InvalidSubset(format!(
                "node {last} outside 0..{}",
                g.node_count()
            ))),
            _ => Ok(()),
        }
    }
}
