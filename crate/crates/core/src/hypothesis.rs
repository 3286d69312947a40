//! Bootstrap moment-corrected Tracy-Widom test of the Erdős–Rényi null.
//!
//! The edge statistic converges slowly to TW1 for small or sparse graphs.
//! Rather than bootstrapping the whole null distribution, the test draws a
//! handful of `G(n, p_hat)` replicates, estimates the mean and standard
//! deviation of the statistic under the null, and shifts and scales the
//! observed value so that those two moments match TW1 before reading off
//! the upper tail probability.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::EigenOptions;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::random::{derive_seed, sample_er, sample_sbm, ErParams, SbmParams};
use crate::spectral::{statistic, StatisticVariant, TestStatistic};
use crate::tracy_widom::{tw1_survival, TW1_MEAN, TW1_STD};

/// Redraws allowed when a replicate comes out empty or complete.
const REPLICATE_REDRAWS: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestConfig {
    pub bootstrap_samples: usize,
    pub variant: StatisticVariant,
    pub seed: u64,
    /// Shared by the observed statistic and every replicate.
    pub eigen: EigenOptions,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            bootstrap_samples: 50,
            variant: StatisticVariant::Adjacency,
            seed: 0,
            eigen: EigenOptions::default(),
        }
    }
}

impl TestConfig {
    pub fn with_seed(self, seed: u64) -> TestConfig {
        TestConfig { seed, ..self }
    }

    fn validate(&self) -> Result<()> {
        if self.bootstrap_samples < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 bootstrap samples, got {}",
                self.bootstrap_samples
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic: StatisticVariant,
    pub theta: f64,
    pub theta_prime: f64,
    pub p_value: f64,
    pub boot_mean: f64,
    pub boot_std: f64,
    pub n: usize,
    pub p_hat: f64,
}

/// Null moments of the statistic estimated from `G(n, p_hat)` replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct NullMoments {
    pub n: usize,
    pub p_hat: f64,
    pub replicates: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl NullMoments {
    /// Maps `theta` onto the TW1 scale.
    pub fn correct(&self, theta: f64) -> f64 {
        TW1_MEAN + (theta - self.mean) / self.std * TW1_STD
    }

    pub fn report(&self, variant: StatisticVariant, theta: f64) -> TestReport {
        let theta_prime = self.correct(theta);
        TestReport {
            statistic: variant,
            theta,
            theta_prime,
            p_value: tw1_survival(theta_prime).clamp(0.0, 1.0),
            boot_mean: self.mean,
            boot_std: self.std,
            n: self.n,
            p_hat: self.p_hat,
        }
    }
}

pub fn mean_and_sd(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, var.sqrt())
}

fn replicate_statistic(n: usize, p_hat: f64, cfg: &TestConfig, index: u64) -> Result<f64> {
    let base = derive_seed(cfg.seed, index);
    let params = ErParams::new(n, p_hat)?;
    for attempt in 0..=REPLICATE_REDRAWS {
        let seed = if attempt == 0 { base } else { derive_seed(base, attempt) };
        let g = sample_er(&params, seed);
        let density = g.edge_density()?;
        if density <= 0.0 || density >= 1.0 {
            continue;
        }
        let stat = match cfg.variant {
            StatisticVariant::Adjacency => statistic(&g, cfg.variant, &cfg.eigen)?,
            StatisticVariant::Laplacian => {
                let (core, _) = g.remove_isolated_nodes();
                match statistic(&core, cfg.variant, &cfg.eigen) {
                    Ok(s) => s,
                    Err(Error::DegenerateDensity(_) | Error::TooFewNodes { .. }) => continue,
                    Err(e) => return Err(e),
                }
            }
        };
        return Ok(stat.theta);
    }
    Err(Error::DegenerateReplicate)
}

/// Draws `cfg.bootstrap_samples` null replicates and summarises them.
///
/// Replicate `i` uses seed `derive_seed(cfg.seed, i)`; replicates run in
/// parallel and are reduced in index order, so the result does not depend
/// on scheduling.
pub fn null_moments(n: usize, p_hat: f64, cfg: &TestConfig) -> Result<NullMoments> {
    cfg.validate()?;
    if n < 2 {
        return Err(Error::TooFewNodes { n, needed: 2 });
    }
    if !(p_hat > 0.0 && p_hat < 1.0) {
        return Err(Error::DegenerateDensity(p_hat));
    }
    let replicates = (0..cfg.bootstrap_samples as u64)
        .into_par_iter()
        .map(|i| replicate_statistic(n, p_hat, cfg, i))
        .collect::<Result<Vec<f64>>>()?;
    let (mean, std) = mean_and_sd(&replicates);
    if !(std > 0.0) || !std.is_finite() {
        return Err(Error::DegenerateBootstrap);
    }
    Ok(NullMoments {
        n,
        p_hat,
        replicates,
        mean,
        std,
    })
}

/// Tests an observed statistic `theta` from a graph with `n` nodes and
/// density `p_hat` against the moment-corrected TW1 null.
pub fn run_test(theta: f64, n: usize, p_hat: f64, cfg: &TestConfig) -> Result<TestReport> {
    Ok(null_moments(n, p_hat, cfg)?.report(cfg.variant, theta))
}

/// Computes the statistic of `g` and tests it.
pub fn test_graph(g: &Graph, cfg: &TestConfig) -> Result<(TestStatistic, TestReport)> {
    let stat = statistic(g, cfg.variant, &cfg.eigen)?;
    let report = run_test(stat.theta, stat.n, stat.p_hat, cfg)?;
    Ok((stat, report))
}

/// Planted-cluster blockmodel family swept along one axis.
///
/// Block 0 has `n1` nodes and internal density `b11`; the remaining
/// `n - n1` nodes form block 1 with density `b22` (defaulting to `b12`),
/// and cross pairs have density `b12`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub n: usize,
    pub n1: usize,
    pub b11: f64,
    pub b12: f64,
    #[serde(default)]
    pub b22: Option<f64>,
    pub axis: SweepAxis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "vary", content = "values", rename_all = "snake_case")]
pub enum SweepAxis {
    /// Varies `n1`.
    PlantedSize(Vec<usize>),
    /// Varies `b12` (and `b22` with it unless pinned).
    CrossDensity(Vec<f64>),
}

impl SweepSpec {
    pub fn points(&self) -> Vec<(f64, SbmParams)> {
        let build = |n1: usize, b12: f64| -> SbmParams {
            let b22 = self.b22.unwrap_or(b12);
            SbmParams::from_row_major(vec![n1, self.n - n1], &[self.b11, b12, b12, b22])
                .expect("sweep parameters validated")
        };
        match &self.axis {
            SweepAxis::PlantedSize(sizes) => sizes.iter().map(|&n1| (n1 as f64, build(n1, self.b12))).collect(),
            SweepAxis::CrossDensity(values) => values.iter().map(|&b| (b, build(self.n1, b))).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sizes: Vec<usize> = match &self.axis {
            SweepAxis::PlantedSize(s) => s.clone(),
            SweepAxis::CrossDensity(_) => vec![self.n1],
        };
        let b12s: Vec<f64> = match &self.axis {
            SweepAxis::PlantedSize(_) => vec![self.b12],
            SweepAxis::CrossDensity(v) => v.clone(),
        };
        for &n1 in &sizes {
            for &b12 in &b12s {
                if n1 == 0 || n1 >= self.n {
                    return Err(Error::InvalidParameter(format!("planted size {n1} not in 1..{}", self.n)));
                }
                let b22 = self.b22.unwrap_or(b12);
                SbmParams::from_row_major(vec![n1, self.n - n1], &[self.b11, b12, b12, b22])?;
            }
        }
        Ok(())
    }
}

/// P-values of every run at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub param: f64,
    pub p_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub param: f64,
    pub mean_pvalue: f64,
    pub sd_pvalue: f64,
    pub runs: usize,
}

impl SweepPoint {
    pub fn summary(&self) -> SweepRow {
        let runs = self.p_values.len();
        let (mean, sd) = if runs > 1 {
            mean_and_sd(&self.p_values)
        } else {
            (self.p_values.first().copied().unwrap_or(f64::NAN), 0.0)
        };
        SweepRow {
            param: self.param,
            mean_pvalue: mean,
            sd_pvalue: sd,
            runs,
        }
    }
}

/// Runs `runs` independent blockmodel draws per sweep point and tests each.
///
/// Run `r` of point `k` samples its graph with seed
/// `derive_seed(derive_seed(cfg.seed, k), r)` and bootstraps with a seed
/// derived from that.
pub fn pvalue_sweep_points(spec: &SweepSpec, runs: usize, cfg: &TestConfig) -> Result<Vec<SweepPoint>> {
    spec.validate()?;
    spec.points()
        .iter()
        .enumerate()
        .map(|(k, (param, params))| {
            let point_seed = derive_seed(cfg.seed, k as u64);
            let p_values = (0..runs as u64)
                .into_par_iter()
                .map(|r| {
                    let run_seed = derive_seed(point_seed, r);
                    let (g, _) = sample_sbm(params, run_seed);
                    let run_cfg = cfg.with_seed(derive_seed(run_seed, u64::MAX));
                    test_graph(&g, &run_cfg).map(|(_, rep)| rep.p_value)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(SweepPoint { param: *param, p_values })
        })
        .collect()
}

pub fn pvalue_sweep(spec: &SweepSpec, runs: usize, cfg: &TestConfig) -> Result<Vec<SweepRow>> {
    Ok(pvalue_sweep_points(spec, runs, cfg)?.iter().map(SweepPoint::summary).collect())
}

pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "param,mean_pvalue,sd_pvalue,runs")?;
    for r in rows {
        writeln!(out, "{},{:.10e},{:.10e},{}", r.param, r.mean_pvalue, r.sd_pvalue, r.runs)?;
    }
    Ok(())
}
