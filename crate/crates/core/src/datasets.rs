//! Small real networks shipped with the library.

use crate::graph::{build_graph, Graph};

const KARATE_EDGES: &str = include_str!("../data/karate.edges");
const KARATE_FACTIONS: &str = include_str!("../data/karate.factions");
const KARATE_CLUBS: &str = include_str!("../data/karate.clubs");

fn data_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
}

fn parse_ids(line: &str) -> Vec<usize> {
    line.split_whitespace().map(|t| t.parse().expect("numeric node id")).collect()
}

fn flat_labels(text: &str, n: usize) -> Vec<usize> {
    let mut labels = vec![usize::MAX; n];
    for (k, line) in data_lines(text).enumerate() {
        for v in parse_ids(line) {
            labels[v] = k;
        }
    }
    assert!(!labels.contains(&usize::MAX), "every member is labelled");
    labels
}

pub const KARATE_NODES: usize = 34;

/// Zachary's karate club friendship network. Node `i` carries label `"i"`.
pub fn karate_club() -> Graph {
    let edges = data_lines(KARATE_EDGES).map(|l| {
        let ids = parse_ids(l);
        (ids[0], ids[1])
    });
    build_graph(KARATE_NODES, edges)
        .expect("valid embedded edge list")
        .with_labels((0..KARATE_NODES).map(|i| i.to_string()).collect())
        .expect("one label per node")
}

/// The two factions that formed before the club split (0 = the
/// instructor's, 1 = the officers').
pub fn karate_factions() -> Vec<usize> {
    flat_labels(KARATE_FACTIONS, KARATE_NODES)
}

/// Which of the two successor clubs each member joined. Differs from the
/// factions only for member 8.
pub fn karate_clubs() -> Vec<usize> {
    flat_labels(KARATE_CLUBS, KARATE_NODES)
}
