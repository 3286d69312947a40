//! Simulation studies behind the `simulate` subcommand.
//!
//! Each study is described by a [`Recipe`], a small TOML document holding
//! every parameter of the run. The built-in recipes are compiled into the
//! library; [`Recipe::from_toml`] accepts user-written ones too. Runs are
//! seeded from the recipe seed through fixed derivation paths, so output
//! never depends on the number of worker threads.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::EigenOptions;
use crate::error::{Error, Result};
use crate::hypothesis::{mean_and_sd, null_moments, pvalue_sweep_points, test_graph, SweepPoint, SweepSpec, TestConfig};
use crate::metrics::{adjusted_rand_index, hierarchical_f_measure};
use crate::partition::{leaf_labels, recursive_bipartition, PartitionConfig, Regularizer};
use crate::random::{derive_seed, derive_seed_path, sample_er, sample_goe, sample_sbm, ErParams, SbmParams};
use crate::spectral::{goe_statistic, statistic, StatisticVariant};
use crate::stats::{fraction_below, ks_distance, ks_uniform, Histogram};
use crate::tracy_widom::{tw1_cdf, tw1_quantile, Tw1Distribution};

const BUILTIN: &[(&str, &str)] = &[
    ("tw-convergence", include_str!("../recipes/tw-convergence.toml")),
    ("laplacian-fit", include_str!("../recipes/laplacian-fit.toml")),
    ("planted-cluster", include_str!("../recipes/planted-cluster.toml")),
    ("nested-sbm", include_str!("../recipes/nested-sbm.toml")),
    ("null-calibration", include_str!("../recipes/null-calibration.toml")),
    ("block-divergence", include_str!("../recipes/block-divergence.toml")),
];

pub fn builtin_names() -> Vec<&'static str> {
    BUILTIN.iter().map(|(name, _)| *name).collect()
}

/// Source text of a built-in recipe.
pub fn builtin_source(name: &str) -> Result<&'static str> {
    BUILTIN
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
        .ok_or_else(|| Error::UnknownRecipe(name.to_string()))
}

fn default_bootstrap() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recipe {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub runs: usize,
    pub seed: u64,
    #[serde(default = "default_bootstrap")]
    pub bootstrap_samples: usize,
    pub study: Study,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Study {
    EdgeDistribution(EdgeDistribution),
    PlantedCluster(PlantedCluster),
    NestedSbm(NestedSbm),
    NullCalibration(NullCalibration),
    BlockDivergence(BlockDivergence),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "ensemble", rename_all = "lowercase")]
pub enum Ensemble {
    Goe { n: usize },
    Er { n: usize, p: f64 },
}

impl Ensemble {
    pub fn label(&self) -> String {
        match self {
            Ensemble::Goe { n } => format!("goe_n{n}"),
            Ensemble::Er { n, p } => format!("er_n{n}_p{p}"),
        }
    }
}

/// Raw and bootstrap-corrected statistics for a list of random ensembles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDistribution {
    #[serde(default)]
    pub statistic: StatisticVariant,
    pub ensembles: Vec<Ensemble>,
    /// Replicate counts for the moment correction; each count gets its own
    /// independent replicate set.
    #[serde(default)]
    pub correction_samples: Vec<usize>,
    pub histogram: HistogramSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedSweep {
    pub name: String,
    #[serde(flatten)]
    pub spec: SweepSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedCluster {
    pub sweeps: Vec<NamedSweep>,
}

/// Blocks 1 and 2 sit inside a denser union: `B11 = B22 = rho a`,
/// `B12 = rho b`, `B13 = B23 = rho c`, `B33 = rho d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedSbm {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub sizes: [usize; 3],
    pub rho: Vec<f64>,
    pub alpha: f64,
    /// 0 disables the minimum size.
    pub min_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullCalibration {
    pub n: usize,
    pub p: f64,
    pub alpha: f64,
}

/// Two equal blocks with within-density `b_in` and cross-density `b_out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDivergence {
    pub b_in: f64,
    pub b_out: f64,
    pub n: Vec<usize>,
    pub quantile: f64,
}

impl NestedSbm {
    pub fn params(&self, rho: f64) -> Result<SbmParams> {
        let (a, b, c, d) = (rho * self.a, rho * self.b, rho * self.c, rho * self.d);
        SbmParams::new(self.sizes.to_vec(), vec![vec![a, b, c], vec![b, a, c], vec![c, c, d]])
    }

    /// The nested ground truth: both inner blocks, their union, and the
    /// outer block, as sets of node indices in sampling order.
    pub fn truth_sets(&self) -> Vec<Vec<usize>> {
        let [n1, n2, n3] = self.sizes;
        vec![
            (0..n1 + n2).collect(),
            (0..n1).collect(),
            (n1..n1 + n2).collect(),
            (n1 + n2..n1 + n2 + n3).collect(),
        ]
    }
}

impl BlockDivergence {
    pub fn params(&self, n: usize) -> Result<SbmParams> {
        SbmParams::from_row_major(vec![n / 2, n - n / 2], &[self.b_in, self.b_out, self.b_out, self.b_in])
    }
}

impl Recipe {
    pub fn builtin(name: &str) -> Result<Recipe> {
        Recipe::from_toml(builtin_source(name)?)
    }

    pub fn from_toml(text: &str) -> Result<Recipe> {
        let recipe: Recipe = toml::from_str(text).map_err(|e| Error::InvalidParameter(format!("recipe: {e}")))?;
        recipe.validate()?;
        Ok(recipe)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.runs == 0 {
            return bad("recipe needs at least one run".into());
        }
        if self.bootstrap_samples < 2 {
            return bad("bootstrap_samples must be at least 2".into());
        }
        match &self.study {
            Study::EdgeDistribution(s) => {
                if s.histogram.bins == 0 || !(s.histogram.hi > s.histogram.lo) {
                    return bad("histogram needs bins > 0 and hi > lo".into());
                }
                if s.correction_samples.iter().any(|&k| k < 2) {
                    return bad("correction sample counts must be at least 2".into());
                }
                for e in &s.ensembles {
                    match *e {
                        Ensemble::Goe { n: 0 } => return bad("GOE size must be positive".into()),
                        Ensemble::Goe { .. } if s.statistic == StatisticVariant::Laplacian => {
                            return bad("the laplacian statistic needs a graph ensemble".into())
                        }
                        Ensemble::Er { n, p } => {
                            ErParams::new(n, p)?;
                        }
                        _ => {}
                    }
                }
            }
            Study::PlantedCluster(s) => {
                for sweep in &s.sweeps {
                    sweep.spec.validate()?;
                }
            }
            Study::NestedSbm(s) => {
                for &rho in &s.rho {
                    s.params(rho)?;
                }
                if !(s.alpha > 0.0 && s.alpha < 1.0) {
                    return bad(format!("alpha must lie in (0, 1), got {}", s.alpha));
                }
            }
            Study::NullCalibration(s) => {
                ErParams::new(s.n, s.p)?;
                if !(s.alpha > 0.0 && s.alpha < 1.0) {
                    return bad(format!("alpha must lie in (0, 1), got {}", s.alpha));
                }
            }
            Study::BlockDivergence(s) => {
                for &n in &s.n {
                    s.params(n)?;
                }
                if !(s.quantile > 0.0 && s.quantile < 1.0) {
                    return bad(format!("quantile must lie in (0, 1), got {}", s.quantile));
                }
            }
        }
        Ok(())
    }

    fn test_config(&self, seed: u64) -> TestConfig {
        TestConfig {
            bootstrap_samples: self.bootstrap_samples,
            seed,
            ..TestConfig::default()
        }
    }

    pub fn run(&self) -> Result<StudyOutput> {
        self.validate()?;
        Ok(match &self.study {
            Study::EdgeDistribution(s) => StudyOutput::EdgeDistribution(edge_distribution(s, self.runs, self.seed)?),
            Study::PlantedCluster(s) => {
                let cfg = self.test_config(self.seed);
                let sweeps = s
                    .sweeps
                    .iter()
                    .enumerate()
                    .map(|(k, sw)| {
                        let cfg = cfg.with_seed(derive_seed(self.seed, k as u64));
                        Ok((sw.name.clone(), pvalue_sweep_points(&sw.spec, self.runs, &cfg)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                StudyOutput::PlantedCluster(sweeps)
            }
            Study::NestedSbm(s) => StudyOutput::NestedSbm(nested_sbm(s, self.runs, self.seed, self.bootstrap_samples)?),
            Study::NullCalibration(s) => StudyOutput::NullCalibration(null_calibration(
                s,
                self.runs,
                &self.test_config(self.seed),
            )?),
            Study::BlockDivergence(s) => StudyOutput::BlockDivergence(block_divergence(s, self.runs, self.seed)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrectedSet {
    pub samples: usize,
    pub boot_mean: f64,
    pub boot_std: f64,
    pub values: Vec<f64>,
    pub ks: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleResult {
    pub ensemble: Ensemble,
    pub raw: Vec<f64>,
    pub ks_raw: f64,
    pub corrected: Vec<CorrectedSet>,
}

fn ensemble_statistic(e: &Ensemble, variant: StatisticVariant, seed: u64, opts: &EigenOptions) -> Result<f64> {
    match *e {
        Ensemble::Goe { n } => goe_statistic(&sample_goe(n, seed)?, opts),
        Ensemble::Er { n, p } => {
            let g = sample_er(&ErParams::new(n, p)?, seed);
            let g = match variant {
                StatisticVariant::Adjacency => g,
                StatisticVariant::Laplacian => g.remove_isolated_nodes().0,
            };
            Ok(statistic(&g, variant, opts)?.theta)
        }
    }
}

/// Ensemble `e`, run `r` draws with seed path `[seed, e, 0, r]`; the
/// correction with the `j`-th replicate count bootstraps from `[seed, e, 1, j]`.
pub fn edge_distribution(study: &EdgeDistribution, runs: usize, seed: u64) -> Result<Vec<EnsembleResult>> {
    let opts = EigenOptions::default();
    study
        .ensembles
        .iter()
        .enumerate()
        .map(|(ei, e)| {
            let ei = ei as u64;
            let raw = (0..runs as u64)
                .into_par_iter()
                .map(|r| ensemble_statistic(e, study.statistic, derive_seed_path(seed, &[ei, 0, r]), &opts))
                .collect::<Result<Vec<f64>>>()?;
            let ks_raw = ks_distance(&raw, tw1_cdf);
            let mut corrected = Vec::new();
            if let Ensemble::Er { n, p } = *e {
                for (j, &samples) in study.correction_samples.iter().enumerate() {
                    let cfg = TestConfig {
                        bootstrap_samples: samples,
                        variant: study.statistic,
                        seed: derive_seed_path(seed, &[ei, 1, j as u64]),
                        eigen: opts,
                    };
                    let m = null_moments(n, p, &cfg)?;
                    let values: Vec<f64> = raw.iter().map(|&t| m.correct(t)).collect();
                    let ks = ks_distance(&values, tw1_cdf);
                    corrected.push(CorrectedSet {
                        samples,
                        boot_mean: m.mean,
                        boot_std: m.std,
                        values,
                        ks,
                    });
                }
            }
            Ok(EnsembleResult {
                ensemble: *e,
                raw,
                ks_raw,
                corrected,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NestedRun {
    pub rho: f64,
    pub run: usize,
    pub ari: f64,
    pub leaves: usize,
    pub hf: f64,
    pub root_p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NestedRow {
    pub rho: f64,
    pub mean_ari: f64,
    pub sd_ari: f64,
    pub mean_leaves: f64,
    pub mean_hf: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NestedResult {
    pub runs: Vec<NestedRun>,
    pub summary: Vec<NestedRow>,
}

/// Run `r` at the `k`-th density scale samples with seed path
/// `[seed, k, r]` and partitions with a seed derived from it.
pub fn nested_sbm(study: &NestedSbm, runs: usize, seed: u64, bootstrap_samples: usize) -> Result<NestedResult> {
    let truth_sets = study.truth_sets();
    let mut all = Vec::new();
    let mut summary = Vec::new();
    for (k, &rho) in study.rho.iter().enumerate() {
        let params = study.params(rho)?;
        let n = params.node_count();
        let rows = (0..runs)
            .into_par_iter()
            .map(|r| {
                let run_seed = derive_seed_path(seed, &[k as u64, r as u64]);
                let (g, truth) = sample_sbm(&params, run_seed);
                let cfg = PartitionConfig {
                    alpha: study.alpha,
                    min_size: (study.min_size > 0).then_some(study.min_size),
                    test: TestConfig {
                        bootstrap_samples,
                        seed: derive_seed(run_seed, u64::MAX),
                        ..TestConfig::default()
                    },
                    regularizer: Regularizer::AverageDegree,
                };
                let tree = recursive_bipartition(&g, &cfg)?;
                let labels = leaf_labels(&tree, n)?;
                Ok(NestedRun {
                    rho,
                    run: r,
                    ari: adjusted_rand_index(&truth, &labels)?,
                    leaves: tree.leaves().len(),
                    hf: hierarchical_f_measure(&truth_sets, &tree)?,
                    root_p_value: tree.p_value,
                })
            })
            .collect::<Result<Vec<NestedRun>>>()?;
        let aris: Vec<f64> = rows.iter().map(|r| r.ari).collect();
        let (mean_ari, sd_ari) = if runs > 1 { mean_and_sd(&aris) } else { (aris[0], 0.0) };
        summary.push(NestedRow {
            rho,
            mean_ari,
            sd_ari,
            mean_leaves: rows.iter().map(|r| r.leaves as f64).sum::<f64>() / runs as f64,
            mean_hf: rows.iter().map(|r| r.hf).sum::<f64>() / runs as f64,
            runs,
        });
        all.extend(rows);
    }
    Ok(NestedResult { runs: all, summary })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullRun {
    pub theta: f64,
    pub theta_prime: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullResult {
    pub alpha: f64,
    pub runs: Vec<NullRun>,
    pub ks_uniform: f64,
    pub rejection_rate: f64,
}

/// Run `r` samples with seed `derive_seed(cfg.seed, r)`.
pub fn null_calibration(study: &NullCalibration, runs: usize, cfg: &TestConfig) -> Result<NullResult> {
    let params = ErParams::new(study.n, study.p)?;
    let rows = (0..runs as u64)
        .into_par_iter()
        .map(|r| {
            let run_seed = derive_seed(cfg.seed, r);
            let g = sample_er(&params, run_seed);
            let (_, rep) = test_graph(&g, &cfg.with_seed(derive_seed(run_seed, u64::MAX)))?;
            Ok(NullRun {
                theta: rep.theta,
                theta_prime: rep.theta_prime,
                p_value: rep.p_value,
            })
        })
        .collect::<Result<Vec<NullRun>>>()?;
    let p: Vec<f64> = rows.iter().map(|r| r.p_value).collect();
    Ok(NullResult {
        alpha: study.alpha,
        ks_uniform: ks_uniform(&p),
        rejection_rate: fraction_below(&p, study.alpha),
        runs: rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceRow {
    pub n: usize,
    pub theta: Vec<f64>,
    pub mean_theta: f64,
    pub threshold: f64,
    pub exceed: usize,
}

/// Run `r` at the `k`-th size samples with seed path `[seed, k, r]`.
pub fn block_divergence(study: &BlockDivergence, runs: usize, seed: u64) -> Result<Vec<DivergenceRow>> {
    let opts = EigenOptions::default();
    let threshold = tw1_quantile(study.quantile);
    study
        .n
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let params = study.params(n)?;
            let theta = (0..runs as u64)
                .into_par_iter()
                .map(|r| {
                    let (g, _) = sample_sbm(&params, derive_seed_path(seed, &[k as u64, r]));
                    Ok(statistic(&g, StatisticVariant::Adjacency, &opts)?.theta)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(DivergenceRow {
                n,
                mean_theta: theta.iter().sum::<f64>() / runs as f64,
                exceed: theta.iter().filter(|&&t| t > threshold).count(),
                threshold,
                theta,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum StudyOutput {
    EdgeDistribution(Vec<EnsembleResult>),
    PlantedCluster(Vec<(String, Vec<SweepPoint>)>),
    NestedSbm(NestedResult),
    NullCalibration(NullResult),
    BlockDivergence(Vec<DivergenceRow>),
}

fn create(dir: &Path, name: &str, written: &mut Vec<PathBuf>) -> std::io::Result<BufWriter<File>> {
    let path = dir.join(name);
    let file = File::create(&path)?;
    written.push(path);
    Ok(BufWriter::new(file))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn opt_sci(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

impl StudyOutput {
    /// Writes the per-run and summary CSV files into `dir` and returns
    /// their paths in the order written.
    pub fn write_csvs(&self, dir: &Path, histogram: Option<HistogramSpec>) -> std::io::Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        match self {
            StudyOutput::EdgeDistribution(results) => {
                let hist = histogram.unwrap_or(HistogramSpec {
                    lo: -8.0,
                    hi: 6.0,
                    bins: 56,
                });
                let tw = Tw1Distribution::get();
                let mut summary = create(dir, "summary.csv", &mut written)?;
                writeln!(summary, "ensemble,n,p,correction_samples,boot_mean,boot_std,ks_tw1")?;
                for res in results {
                    let label = res.ensemble.label();
                    let (n, p) = match res.ensemble {
                        Ensemble::Goe { n } => (n, None),
                        Ensemble::Er { n, p } => (n, Some(p)),
                    };
                    writeln!(summary, "{label},{n},{},,,,{}", opt(p), res.ks_raw)?;
                    for c in &res.corrected {
                        writeln!(
                            summary,
                            "{label},{n},{},{},{},{},{}",
                            opt(p),
                            c.samples,
                            c.boot_mean,
                            c.boot_std,
                            c.ks
                        )?;
                    }

                    let mut runs = create(dir, &format!("{label}_runs.csv"), &mut written)?;
                    let mut header = String::from("run,theta");
                    for c in &res.corrected {
                        header.push_str(&format!(",corrected_{}", c.samples));
                    }
                    writeln!(runs, "{header}")?;
                    for (r, t) in res.raw.iter().enumerate() {
                        let mut line = format!("{r},{t}");
                        for c in &res.corrected {
                            line.push_str(&format!(",{}", c.values[r]));
                        }
                        writeln!(runs, "{line}")?;
                    }
                    runs.flush()?;

                    let h = Histogram::new(&res.raw, hist.lo, hist.hi, hist.bins);
                    h.write_csv(|x| tw.density(x), create(dir, &format!("{label}_hist_raw.csv"), &mut written)?)?;
                    for c in &res.corrected {
                        let h = Histogram::new(&c.values, hist.lo, hist.hi, hist.bins);
                        let name = format!("{label}_hist_corrected_{}.csv", c.samples);
                        h.write_csv(|x| tw.density(x), create(dir, &name, &mut written)?)?;
                    }
                }
                summary.flush()?;
            }
            StudyOutput::PlantedCluster(sweeps) => {
                for (name, points) in sweeps {
                    let mut runs = create(dir, &format!("{name}_runs.csv"), &mut written)?;
                    writeln!(runs, "param,run,p_value")?;
                    for pt in points {
                        for (r, p) in pt.p_values.iter().enumerate() {
                            writeln!(runs, "{},{r},{p:e}", pt.param)?;
                        }
                    }
                    runs.flush()?;
                    let rows: Vec<_> = points.iter().map(SweepPoint::summary).collect();
                    crate::hypothesis::write_sweep_csv(&rows, create(dir, &format!("{name}_summary.csv"), &mut written)?)?;
                }
            }
            StudyOutput::NestedSbm(res) => {
                let mut runs = create(dir, "runs.csv", &mut written)?;
                writeln!(runs, "rho,run,ari,leaves,hf,root_p_value")?;
                for r in &res.runs {
                    writeln!(runs, "{},{},{},{},{},{}", r.rho, r.run, r.ari, r.leaves, r.hf, opt_sci(r.root_p_value))?;
                }
                runs.flush()?;
                let mut summary = create(dir, "summary.csv", &mut written)?;
                writeln!(summary, "rho,mean_ari,sd_ari,mean_leaves,mean_hf,runs")?;
                for s in &res.summary {
                    writeln!(
                        summary,
                        "{},{},{},{},{},{}",
                        s.rho, s.mean_ari, s.sd_ari, s.mean_leaves, s.mean_hf, s.runs
                    )?;
                }
                summary.flush()?;
            }
            StudyOutput::NullCalibration(res) => {
                let mut runs = create(dir, "runs.csv", &mut written)?;
                writeln!(runs, "run,theta,theta_prime,p_value")?;
                for (r, row) in res.runs.iter().enumerate() {
                    writeln!(runs, "{r},{},{},{:e}", row.theta, row.theta_prime, row.p_value)?;
                }
                runs.flush()?;
                let mut summary = create(dir, "summary.csv", &mut written)?;
                writeln!(summary, "runs,alpha,rejection_rate,ks_uniform")?;
                writeln!(
                    summary,
                    "{},{},{},{}",
                    res.runs.len(),
                    res.alpha,
                    res.rejection_rate,
                    res.ks_uniform
                )?;
                summary.flush()?;
            }
            StudyOutput::BlockDivergence(rows) => {
                let mut runs = create(dir, "runs.csv", &mut written)?;
                writeln!(runs, "n,run,theta")?;
                for row in rows {
                    for (r, t) in row.theta.iter().enumerate() {
                        writeln!(runs, "{},{r},{t}", row.n)?;
                    }
                }
                runs.flush()?;
                let mut summary = create(dir, "summary.csv", &mut written)?;
                writeln!(summary, "n,mean_theta,threshold,exceed,runs")?;
                for row in rows {
                    writeln!(
                        summary,
                        "{},{},{},{},{}",
                        row.n,
                        row.mean_theta,
                        row.threshold,
                        row.exceed,
                        row.theta.len()
                    )?;
                }
                summary.flush()?;
            }
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_recipes_parse_and_validate() {
        for name in builtin_names() {
            let r = Recipe::builtin(name).unwrap();
            assert_eq!(r.name, name);
        }
        assert!(matches!(Recipe::builtin("nope"), Err(Error::UnknownRecipe(_))));
    }

    #[test]
    fn nested_params_follow_scale() {
        let Study::NestedSbm(s) = Recipe::builtin("nested-sbm").unwrap().study else {
            panic!("wrong study kind");
        };
        let p = s.params(0.25).unwrap();
        assert_eq!(p.block_sizes(), &[200, 200, 600]);
        assert!((p.probs()[0][0] - 0.05).abs() < 1e-15);
        assert!((p.probs()[0][1] - 0.025).abs() < 1e-15);
        assert!((p.probs()[1][2] - 0.0025).abs() < 1e-15);
        let sets = s.truth_sets();
        assert_eq!(sets[0].len(), 400);
        assert_eq!(sets[3].len(), 600);
    }

    #[test]
    fn bad_recipes_rejected() {
        let base = builtin_source("null-calibration").unwrap();
        assert!(Recipe::from_toml(&base.replace("runs = 500", "runs = 0")).is_err());
        assert!(Recipe::from_toml(&base.replace("alpha = 0.05", "alpha = 1.5")).is_err());
        assert!(Recipe::from_toml(&base.replace("kind = \"null-calibration\"", "kind = \"other\"")).is_err());
        let lap = builtin_source("laplacian-fit")
            .unwrap()
            .replacen("ensemble = \"er\"\nn = 500\np = 0.5", "ensemble = \"goe\"\nn = 500", 1);
        assert!(Recipe::from_toml(&lap).is_err());
    }

    fn small(name: &str, runs: usize) -> Recipe {
        let mut r = Recipe::builtin(name).unwrap();
        r.runs = runs;
        r
    }

    #[test]
    fn edge_distribution_small_run() {
        let mut r = small("tw-convergence", 20);
        if let Study::EdgeDistribution(s) = &mut r.study {
            s.ensembles = vec![Ensemble::Goe { n: 40 }, Ensemble::Er { n: 40, p: 0.5 }];
            s.correction_samples = vec![10];
        }
        let StudyOutput::EdgeDistribution(res) = r.run().unwrap() else {
            panic!("wrong output kind");
        };
        assert_eq!(res.len(), 2);
        assert!(res[0].corrected.is_empty());
        assert_eq!(res[1].corrected.len(), 1);
        let c = &res[1].corrected[0];
        assert_eq!(c.values.len(), 20);
        // the correction is affine and increasing
        for i in 1..20 {
            let (a, b) = (res[1].raw[i - 1], res[1].raw[i]);
            let (ca, cb) = (c.values[i - 1], c.values[i]);
            assert_eq!(a < b, ca < cb);
        }
        assert_eq!(r.run().unwrap(), StudyOutput::EdgeDistribution(res));
    }

    #[test]
    fn outputs_written_for_every_study() {
        let dir = std::env::temp_dir().join(format!("twsplit-exp-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();

        let mut r = small("null-calibration", 3);
        if let Study::NullCalibration(s) = &mut r.study {
            s.n = 60;
        }
        r.bootstrap_samples = 5;
        let files = r.run().unwrap().write_csvs(&dir, None).unwrap();
        let summary = std::fs::read_to_string(&files[1]).unwrap();
        assert!(summary.starts_with("runs,alpha,rejection_rate,ks_uniform\n3,0.05,"));

        let mut r = small("block-divergence", 2);
        if let Study::BlockDivergence(s) = &mut r.study {
            s.n = vec![40, 80];
        }
        let out = r.run().unwrap();
        let files = out.write_csvs(&dir, None).unwrap();
        let runs = std::fs::read_to_string(&files[0]).unwrap();
        assert_eq!(runs.lines().count(), 1 + 4);

        let mut r = small("nested-sbm", 2);
        r.bootstrap_samples = 5;
        if let Study::NestedSbm(s) = &mut r.study {
            s.sizes = [20, 20, 40];
            s.rho = vec![1.0];
            s.d = 0.3;
        }
        let files = r.run().unwrap().write_csvs(&dir, None).unwrap();
        assert_eq!(files.len(), 2);
        let summary = std::fs::read_to_string(&files[1]).unwrap();
        assert_eq!(summary.lines().count(), 2);

        std::fs::remove_dir_all(&dir).unwrap();
    }
}
