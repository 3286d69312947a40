//! Centered and scaled adjacency spectra, and the edge-eigenvalue test
//! statistics built from them.
//!
//! For a graph with estimated density `p` the working matrix is
//!
//! ```text
//!   M = (A - p (J - I)) / sqrt((n - 1) p (1 - p))
//! ```
//!
//! i.e. the adjacency matrix minus its fitted Erdős–Rényi mean, scaled so
//! that its bulk spectrum fills `[-2, 2]`. `M` is sparse plus rank one plus
//! a multiple of the identity, and is only ever applied as an operator.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::eigen::{largest_eigenpair, DenseSymmetric, EigenOptions, EigenPair, SymmetricOperator};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::random::GoeSample;

/// Largest graph accepted by [`bulk_spectrum`] unless a caller raises it.
pub const DENSE_CEILING: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum StatisticVariant {
    #[default]
    Adjacency,
    /// Second eigenvalue of the normalized adjacency `D^-1/2 A D^-1/2`.
    /// Experimental: its null limit is conjectured, not proven.
    Laplacian,
}

impl std::str::FromStr for StatisticVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adjacency" => Ok(StatisticVariant::Adjacency),
            "laplacian" => Ok(StatisticVariant::Laplacian),
            other => Err(Error::InvalidParameter(format!(
                "unknown statistic {other:?} (expected adjacency or laplacian)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestStatistic {
    pub variant: StatisticVariant,
    /// `n^(2/3) (lambda1 - 2)`.
    pub theta: f64,
    /// Edge eigenvalue on the semicircle scale. For the Laplacian variant
    /// this is `sqrt(n p / (1 - p)) (lambda2(L) + 1/n)`.
    pub lambda1: f64,
    pub n: usize,
    pub p_hat: f64,
}

fn check_density(p_hat: f64) -> Result<()> {
    if !(p_hat > 0.0 && p_hat < 1.0) {
        return Err(Error::DegenerateDensity(p_hat));
    }
    Ok(())
}

/// The centered, scaled adjacency operator of `g`.
pub struct CenteredAdjacency<'a> {
    graph: &'a Graph,
    p_hat: f64,
    inv_scale: f64,
}

impl<'a> CenteredAdjacency<'a> {
    pub fn new(graph: &'a Graph, p_hat: f64) -> Result<Self> {
        check_density(p_hat)?;
        let n = graph.node_count();
        if n < 2 {
            return Err(Error::TooFewNodes { n, needed: 2 });
        }
        let scale = ((n as f64 - 1.0) * p_hat * (1.0 - p_hat)).sqrt();
        Ok(CenteredAdjacency {
            graph,
            p_hat,
            inv_scale: 1.0 / scale,
        })
    }

    /// Dense copy, built entry by entry from the definition.
    pub fn dense(&self) -> DMatrix<f64> {
        let n = self.graph.node_count();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                0.0
            } else {
                let a = if self.graph.has_edge(i, j) { 1.0 } else { 0.0 };
                (a - self.p_hat) * self.inv_scale
            }
        })
    }
}

impl SymmetricOperator for CenteredAdjacency<'_> {
    fn dim(&self) -> usize {
        self.graph.node_count()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.graph.adjacency_matvec(x, y);
        let shift = self.p_hat * x.iter().sum::<f64>();
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = (*yi - shift + self.p_hat * xi) * self.inv_scale;
        }
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.dense()
    }
}

/// `M x` for the centered, scaled adjacency matrix of `g`.
pub fn centered_matvec(g: &Graph, p_hat: f64, x: &[f64]) -> Result<Vec<f64>> {
    let op = CenteredAdjacency::new(g, p_hat)?;
    if x.len() != g.node_count() {
        return Err(Error::InvalidParameter(format!(
            "vector of length {} for {} nodes",
            x.len(),
            g.node_count()
        )));
    }
    let mut y = vec![0.0; x.len()];
    op.apply(x, &mut y);
    Ok(y)
}

/// Largest signed eigenvalue of the centered, scaled adjacency matrix.
pub fn largest_eigenvalue_centered(g: &Graph, p_hat: f64, opts: &EigenOptions) -> Result<EigenPair> {
    let op = CenteredAdjacency::new(g, p_hat)?;
    largest_eigenpair(&op, &[], opts)
}

fn theta_of(lambda1: f64, n: usize) -> f64 {
    (n as f64).powf(2.0 / 3.0) * (lambda1 - 2.0)
}

pub fn adjacency_statistic(g: &Graph, opts: &EigenOptions) -> Result<TestStatistic> {
    let p_hat = g.edge_density()?;
    check_density(p_hat)?;
    let pair = largest_eigenvalue_centered(g, p_hat, opts)?;
    let n = g.node_count();
    Ok(TestStatistic {
        variant: StatisticVariant::Adjacency,
        theta: theta_of(pair.value, n),
        lambda1: pair.value,
        n,
        p_hat,
    })
}

/// `D^-1/2 A D^-1/2` for a graph without isolated nodes.
pub struct NormalizedAdjacency<'a> {
    graph: &'a Graph,
    inv_sqrt_degree: Vec<f64>,
}

impl<'a> NormalizedAdjacency<'a> {
    pub fn new(graph: &'a Graph) -> Result<Self> {
        let mut inv_sqrt_degree = Vec::with_capacity(graph.node_count());
        for v in 0..graph.node_count() {
            let d = graph.degree(v);
            if d == 0 {
                return Err(Error::ZeroDegree(v));
            }
            inv_sqrt_degree.push(1.0 / (d as f64).sqrt());
        }
        Ok(NormalizedAdjacency {
            graph,
            inv_sqrt_degree,
        })
    }

    /// Unit eigenvector for eigenvalue 1: `x(i) = sqrt(d_i / sum d)`.
    pub fn top_eigenvector(&self) -> Vec<f64> {
        let total: f64 = self.graph.degrees().iter().map(|&d| d as f64).sum();
        (0..self.graph.node_count())
            .map(|v| (self.graph.degree(v) as f64 / total).sqrt())
            .collect()
    }
}

impl SymmetricOperator for NormalizedAdjacency<'_> {
    fn dim(&self) -> usize {
        self.graph.node_count()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let z: Vec<f64> = x.iter().zip(&self.inv_sqrt_degree).map(|(a, b)| a * b).collect();
        self.graph.adjacency_matvec(&z, y);
        for (yi, s) in y.iter_mut().zip(&self.inv_sqrt_degree) {
            *yi *= s;
        }
    }
}

/// Second largest eigenvalue of `D^-1/2 A D^-1/2`, found by restricting to
/// the complement of the known top eigenvector.
pub fn laplacian_second_eigenvalue(g: &Graph, opts: &EigenOptions) -> Result<f64> {
    let n = g.node_count();
    if n < 2 {
        return Err(Error::TooFewNodes { n, needed: 2 });
    }
    let op = NormalizedAdjacency::new(g)?;
    let top = op.top_eigenvector();
    Ok(largest_eigenpair(&op, &[&top], opts)?.value)
}

pub fn laplacian_statistic(g: &Graph, opts: &EigenOptions) -> Result<TestStatistic> {
    let p_hat = g.edge_density()?;
    check_density(p_hat)?;
    let n = g.node_count();
    let lambda2 = laplacian_second_eigenvalue(g, opts)?;
    let nf = n as f64;
    let edge = (nf * p_hat / (1.0 - p_hat)).sqrt() * (lambda2 + 1.0 / nf);
    Ok(TestStatistic {
        variant: StatisticVariant::Laplacian,
        theta: theta_of(edge, n),
        lambda1: edge,
        n,
        p_hat,
    })
}

pub fn statistic(g: &Graph, variant: StatisticVariant, opts: &EigenOptions) -> Result<TestStatistic> {
    match variant {
        StatisticVariant::Adjacency => adjacency_statistic(g, opts),
        StatisticVariant::Laplacian => laplacian_statistic(g, opts),
    }
}

/// `n^(2/3) (lambda1(M / sqrt(n)) - 2)` for a GOE matrix `M`.
pub fn goe_statistic(sample: &GoeSample, opts: &EigenOptions) -> Result<f64> {
    let n = sample.matrix.nrows();
    let pair = largest_eigenpair(&DenseSymmetric(&sample.matrix), &[], opts)?;
    Ok(theta_of(pair.value / (n as f64).sqrt(), n))
}

/// Semicircle density `sqrt((4 - x^2)+) / (2 pi)`.
pub fn semicircle_density(x: f64) -> f64 {
    let r = 4.0 - x * x;
    if r <= 0.0 {
        0.0
    } else {
        r.sqrt() / (2.0 * std::f64::consts::PI)
    }
}

/// Semicircle CDF, closed form.
pub fn semicircle_cdf(x: f64) -> f64 {
    if x <= -2.0 {
        return 0.0;
    }
    if x >= 2.0 {
        return 1.0;
    }
    let pi = std::f64::consts::PI;
    0.5 + (x * (4.0 - x * x).sqrt() / 4.0 + (x / 2.0).asin()) / pi
}

/// All eigenvalues of the centered, scaled adjacency matrix, ascending.
pub fn bulk_spectrum(g: &Graph, p_hat: f64, ceiling: usize) -> Result<Vec<f64>> {
    let n = g.node_count();
    if n > ceiling {
        return Err(Error::TooLargeForDense { n, ceiling });
    }
    let op = CenteredAdjacency::new(g, p_hat)?;
    let mut values: Vec<f64> = SymmetricEigen::new(op.dense()).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// One eigenvalue per line.
pub fn write_spectrum_csv<W: Write>(values: &[f64], mut out: W) -> std::io::Result<()> {
    writeln!(out, "eigenvalue")?;
    for v in values {
        writeln!(out, "{v:.17e}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::random::{sample_er, ErParams};
    use nalgebra::DVector;
    use proptest::prelude::*;

    fn path3() -> Graph {
        build_graph(3, vec![(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn matvec_hand_example() {
        let y = centered_matvec(&path3(), 2.0 / 3.0, &[1.0, 0.0, 0.0]).unwrap();
        let expected = [0.0, 0.5, -1.0];
        for (a, b) in y.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14, "{y:?}");
        }
    }

    #[test]
    fn degenerate_density_rejected() {
        let k4 = Graph::complete(4);
        assert!(matches!(
            centered_matvec(&k4, 1.0, &[0.5; 4]),
            Err(Error::DegenerateDensity(_))
        ));
        assert!(matches!(
            adjacency_statistic(&Graph::complete(2), &EigenOptions::default()),
            Err(Error::DegenerateDensity(p)) if p == 1.0
        ));
        assert!(matches!(
            adjacency_statistic(&Graph::empty(5), &EigenOptions::default()),
            Err(Error::DegenerateDensity(p)) if p == 0.0
        ));
    }

    #[test]
    fn matvec_is_linear() {
        let g = sample_er(&ErParams::new(40, 0.3).unwrap(), 1);
        let p = g.edge_density().unwrap();
        let x: Vec<f64> = (0..40).map(|i| (i as f64).sin()).collect();
        let y: Vec<f64> = (0..40).map(|i| (i as f64 * 0.3).cos()).collect();
        let combo: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 2.5 * a - 1.5 * b).collect();
        let lhs = centered_matvec(&g, p, &combo).unwrap();
        let mx = centered_matvec(&g, p, &x).unwrap();
        let my = centered_matvec(&g, p, &y).unwrap();
        for i in 0..40 {
            assert!((lhs[i] - (2.5 * mx[i] - 1.5 * my[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn path_eigenvalues_match_dense() {
        let g = path3();
        let p = 2.0 / 3.0;
        let spectrum = bulk_spectrum(&g, p, DENSE_CEILING).unwrap();
        // M = [[0, .5, -1], [.5, 0, .5], [-1, .5, 0]]: characteristic
        // polynomial -x^3 + 1.5 x - 0.5 = -(x - 1)(x^2 + x - 0.5).
        let r = 3f64.sqrt() / 2.0;
        let expected = [-0.5 - r, -0.5 + r, 1.0];
        for (a, b) in spectrum.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{spectrum:?}");
        }
        let top = largest_eigenvalue_centered(&g, p, &EigenOptions::default()).unwrap();
        assert!((top.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectrum_sums_to_zero() {
        let g = sample_er(&ErParams::new(150, 0.2).unwrap(), 4);
        let p = g.edge_density().unwrap();
        let s: f64 = bulk_spectrum(&g, p, DENSE_CEILING).unwrap().iter().sum();
        assert!(s.abs() < 1e-8 * 150.0);
    }

    #[test]
    fn dense_ceiling_enforced() {
        let g = sample_er(&ErParams::new(30, 0.5).unwrap(), 4);
        assert!(matches!(
            bulk_spectrum(&g, 0.5, 20),
            Err(Error::TooLargeForDense { n: 30, ceiling: 20 })
        ));
    }

    #[test]
    fn laplacian_of_complete_graph() {
        for n in [5usize, 70, 90] {
            let l2 = laplacian_second_eigenvalue(&Graph::complete(n), &EigenOptions::default()).unwrap();
            assert!((l2 + 1.0 / (n as f64 - 1.0)).abs() < 1e-9, "n={n}: {l2}");
        }
    }

    #[test]
    fn laplacian_needs_positive_degrees() {
        let g = build_graph(4, vec![(0, 1), (1, 2)]).unwrap();
        assert!(matches!(
            laplacian_statistic(&g, &EigenOptions::default()),
            Err(Error::ZeroDegree(3))
        ));
    }

    #[test]
    fn laplacian_matches_dense_on_random_graph() {
        let g = sample_er(&ErParams::new(120, 0.1).unwrap(), 12);
        let (g, _) = g.remove_isolated_nodes();
        let d: Vec<f64> = g.degrees().iter().map(|&d| 1.0 / (d as f64).sqrt()).collect();
        let n = g.node_count();
        let l = DMatrix::from_fn(n, n, |i, j| if g.has_edge(i, j) { d[i] * d[j] } else { 0.0 });
        let mut eig: Vec<f64> = SymmetricEigen::new(l).eigenvalues.iter().copied().collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        let l2 = laplacian_second_eigenvalue(&g, &EigenOptions::default()).unwrap();
        assert!((l2 - eig[1]).abs() < 1e-8);
        let stat = laplacian_statistic(&g, &EigenOptions::default()).unwrap();
        let p = g.edge_density().unwrap();
        let edge = (n as f64 * p / (1.0 - p)).sqrt() * (eig[1] + 1.0 / n as f64);
        assert!((stat.lambda1 - edge).abs() < 1e-7);
        assert!((stat.theta - (n as f64).powf(2.0 / 3.0) * (stat.lambda1 - 2.0)).abs() < 1e-12);
        assert!((stat.theta - (n as f64).powf(2.0 / 3.0) * (edge - 2.0)).abs() < 1e-5);
    }

    #[test]
    fn goe_statistic_matches_dense() {
        use crate::random::sample_goe;
        for (n, seed) in [(30, 1), (150, 2)] {
            let s = sample_goe(n, seed).unwrap();
            let top = SymmetricEigen::new(s.matrix.clone()).eigenvalues.max();
            let want = (n as f64).powf(2.0 / 3.0) * (top / (n as f64).sqrt() - 2.0);
            let got = goe_statistic(&s, &EigenOptions::default()).unwrap();
            assert!((got - want).abs() < 1e-6, "n={n}: {got} vs {want}");
        }
    }

    #[test]
    fn semicircle_examples() {
        assert!((semicircle_density(0.0) - 1.0 / std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(semicircle_density(2.0), 0.0);
        assert_eq!(semicircle_density(-2.0), 0.0);
        assert_eq!(semicircle_density(3.0), 0.0);
        assert!((semicircle_cdf(0.0) - 0.5).abs() < 1e-15);
        assert_eq!(semicircle_cdf(2.0), 1.0);
    }

    #[test]
    fn spectrum_csv_has_one_value_per_line() {
        let mut buf = Vec::new();
        write_spectrum_csv(&[-1.0, 0.5], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn semicircle_is_even_and_nonnegative(x in -5.0f64..5.0) {
            prop_assert!(semicircle_density(x) >= 0.0);
            prop_assert_eq!(semicircle_density(x), semicircle_density(-x));
        }

        // Weyl: lambda2(A) <= lambda1(A - P) <= lambda1(A), P = p (J - I).
        #[test]
        fn centered_top_eigenvalue_interlaces(seed in any::<u64>(), n in 10usize..60, p in 0.1f64..0.6) {
            let g = sample_er(&ErParams::new(n, p).unwrap(), seed);
            let p_hat = g.edge_density().unwrap();
            prop_assume!(p_hat > 0.0 && p_hat < 1.0);
            let a = DMatrix::from_fn(n, n, |i, j| if g.has_edge(i, j) { 1.0 } else { 0.0 });
            let mut ev: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
            ev.sort_by(|x, y| y.total_cmp(x));
            let scale = ((n as f64 - 1.0) * p_hat * (1.0 - p_hat)).sqrt();
            let top = largest_eigenvalue_centered(&g, p_hat, &EigenOptions::default()).unwrap().value * scale;
            prop_assert!(top >= ev[1] - 1e-9 && top <= ev[0] + 1e-9);
        }

        #[test]
        fn operator_matches_dense_definition(seed in any::<u64>(), n in 2usize..100, p in 0.05f64..0.9) {
            let g = sample_er(&ErParams::new(n, p).unwrap(), seed);
            let p_hat = g.edge_density().unwrap();
            prop_assume!(p_hat > 0.0 && p_hat < 1.0);
            let op = CenteredAdjacency::new(&g, p_hat).unwrap();
            let x: Vec<f64> = (0..n).map(|i| ((i * 7 + 3) % 11) as f64 - 5.0).collect();
            let fast = centered_matvec(&g, p_hat, &x).unwrap();
            let dense = op.dense() * DVector::from_column_slice(&x);
            let scale = dense.norm().max(1e-300);
            let err = fast.iter().zip(dense.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            prop_assert!(err / scale <= 1e-12);
        }
    }
}
