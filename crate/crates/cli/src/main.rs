use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use twsplit::eigen::EigenOptions;
use twsplit::experiments::{builtin_names, Recipe, Study};
use twsplit::metrics::{flat_labels_on, read_flat_labels, read_truth_sets};
use twsplit::partition::{density_ordering, leaf_labels, validate_with_alpha, Regularizer, TreeJson};
use twsplit::random::ModelConfig;
use twsplit::spectral::{bulk_spectrum, write_spectrum_csv, DENSE_CEILING};
use twsplit::{
    adjusted_rand_index, hierarchical_f_measure, recursive_bipartition, test_graph, ErrorClass, Graph,
    PartitionConfig, StatisticVariant, TestConfig,
};

#[derive(Parser, Debug)]
#[command(name = "twsplit", version, about = "Community detection by recursive bipartitioning with a Tracy-Widom stopping test")]
struct Cli {
    /// Worker threads for bootstrap replicates, Monte Carlo runs and recursion.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Test a graph against the Erdős–Rényi null and print the report as JSON.
    Test {
        graph: PathBuf,
        #[command(flatten)]
        test: TestFlags,
        /// Also write report.json and manifest.json into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recursively bipartition a graph into communities.
    Cluster {
        graph: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        alpha: f64,
        /// Subgraphs smaller than this become leaves without testing; 0 disables.
        #[arg(long, default_value_t = 10)]
        min_size: usize,
        #[command(flatten)]
        test: TestFlags,
        /// Directory for tree.json, ordering.txt, blocks.csv and manifest.json.
        /// Without it the tree is printed to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a simulation recipe and write its CSV outputs.
    Simulate {
        /// Name of a built-in recipe (see --list).
        recipe: Option<String>,
        /// Read the recipe from a TOML file instead.
        #[arg(long, conflicts_with = "recipe")]
        recipe_file: Option<PathBuf>,
        #[arg(long)]
        list: bool,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        bootstrap_samples: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample a graph from a model file (`n`, `p` or `block_sizes`, `b`).
    Generate {
        model: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Edge-list output file.
        #[arg(long)]
        out: PathBuf,
        /// Optional `node block` label file.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Score a cluster tree against ground truth.
    Eval {
        tree: PathBuf,
        truth: PathBuf,
        #[arg(long, value_enum)]
        metric: Metric,
    },
    /// Check that a tree JSON file is structurally valid.
    Validate {
        tree: PathBuf,
        /// Also check that internal nodes rejected and tested leaves did not.
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Write all eigenvalues of the centered, scaled adjacency matrix as CSV.
    Spectrum {
        graph: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DENSE_CEILING)]
        ceiling: usize,
    },
}

#[derive(Args, Debug, Clone, Serialize)]
struct TestFlags {
    #[arg(long, default_value_t = 50)]
    bootstrap_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Statistic::Adjacency)]
    statistic: Statistic,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "lowercase")]
enum Statistic {
    Adjacency,
    Laplacian,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "lowercase")]
enum Metric {
    Ari,
    Hf,
}

impl TestFlags {
    fn config(&self) -> TestConfig {
        TestConfig {
            bootstrap_samples: self.bootstrap_samples,
            variant: match self.statistic {
                Statistic::Adjacency => StatisticVariant::Adjacency,
                Statistic::Laplacian => StatisticVariant::Laplacian,
            },
            seed: self.seed,
            eigen: EigenOptions::default(),
        }
    }
}

#[derive(Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct RunManifest {
    subcommand: &'static str,
    config: serde_json::Value,
    seed: u64,
    version: &'static str,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
    started_unix: u64,
    wall_clock_seconds: f64,
}

struct Run {
    subcommand: &'static str,
    started: SystemTime,
    clock: Instant,
}

impl Run {
    fn start(subcommand: &'static str) -> Run {
        Run {
            subcommand,
            started: SystemTime::now(),
            clock: Instant::now(),
        }
    }

    /// Writes `manifest.json` next to the outputs, which are listed by
    /// file name relative to `dir`.
    fn finish(
        &self,
        dir: &Path,
        config: impl Serialize,
        seed: u64,
        inputs: &[&Path],
        outputs: &[PathBuf],
    ) -> anyhow::Result<()> {
        let digest = |p: &Path, name: String| -> anyhow::Result<FileDigest> {
            let bytes = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(FileDigest {
                path: name,
                sha256: hex::encode(Sha256::digest(&bytes)),
            })
        };
        let manifest = RunManifest {
            subcommand: self.subcommand,
            config: serde_json::to_value(config)?,
            seed,
            version: env!("CARGO_PKG_VERSION"),
            inputs: inputs
                .iter()
                .map(|p| digest(p, p.display().to_string()))
                .collect::<anyhow::Result<_>>()?,
            outputs: outputs
                .iter()
                .map(|p| {
                    let name = p.strip_prefix(dir).unwrap_or(p).display().to_string();
                    digest(p, name)
                })
                .collect::<anyhow::Result<_>>()?,
            started_unix: self.started.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            wall_clock_seconds: self.clock.elapsed().as_secs_f64(),
        };
        let file = File::create(dir.join("manifest.json"))?;
        serde_json::to_writer_pretty(BufWriter::new(file), &manifest)?;
        Ok(())
    }
}

fn read_graph(path: &Path) -> anyhow::Result<Graph> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let (g, stats) = Graph::read_edge_list(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?;
    log::info!(
        "{}: {} nodes, {} edges ({} duplicates dropped)",
        path.display(),
        g.node_count(),
        g.edge_count(),
        stats.duplicates
    );
    Ok(g)
}

fn read_tree(path: &Path) -> anyhow::Result<TreeJson> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let tree: TreeJson =
        serde_json::from_reader(BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))?;
    Ok(tree)
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn cmd_test(graph: &Path, flags: &TestFlags, out: Option<&Path>) -> anyhow::Result<()> {
    let run = Run::start("test");
    let g = read_graph(graph)?;
    let (core, _) = g.remove_isolated_nodes();
    if core.node_count() < g.node_count() {
        log::info!("removed {} isolated nodes", g.node_count() - core.node_count());
    }
    let (_, report) = test_graph(&core, &flags.config())?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    if let Some(dir) = out {
        create_dir(dir)?;
        let path = dir.join("report.json");
        write_json(&path, &report)?;
        run.finish(dir, flags, flags.seed, &[graph], &[path])?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ClusterEcho<'a> {
    alpha: f64,
    min_size: usize,
    #[serde(flatten)]
    test: &'a TestFlags,
}

fn cmd_cluster(graph: &Path, alpha: f64, min_size: usize, flags: &TestFlags, out: Option<&Path>) -> anyhow::Result<()> {
    let run = Run::start("cluster");
    let g = read_graph(graph)?;
    let cfg = PartitionConfig {
        alpha,
        min_size: (min_size > 0).then_some(min_size),
        test: flags.config(),
        regularizer: Regularizer::AverageDegree,
    };
    let tree = recursive_bipartition(&g, &cfg)?;
    let json = tree.to_json(&g);
    let Some(dir) = out else {
        println!("{}", serde_json::to_string_pretty(&json)?);
        return Ok(());
    };
    create_dir(dir)?;
    let tree_path = dir.join("tree.json");
    write_json(&tree_path, &json)?;
    let ordering = density_ordering(&tree);
    let perm_path = dir.join("ordering.txt");
    let mut w = BufWriter::new(File::create(&perm_path)?);
    ordering.write_permutation(&g, &mut w)?;
    w.flush()?;
    let blocks_path = dir.join("blocks.csv");
    let mut w = BufWriter::new(File::create(&blocks_path)?);
    ordering.write_blocks_csv(&mut w)?;
    w.flush()?;
    let echo = ClusterEcho {
        alpha,
        min_size,
        test: flags,
    };
    run.finish(dir, echo, flags.seed, &[graph], &[tree_path, perm_path, blocks_path])?;
    println!(
        "{} nodes, {} leaves, height {}; written to {}",
        g.node_count(),
        tree.leaves().len(),
        tree.height(),
        dir.display()
    );
    Ok(())
}

fn cmd_simulate(
    name: Option<&str>,
    recipe_file: Option<&Path>,
    runs: Option<usize>,
    seed: Option<u64>,
    bootstrap: Option<usize>,
    out: Option<&Path>,
) -> anyhow::Result<()> {
    let run = Run::start("simulate");
    let mut inputs = Vec::new();
    let mut recipe = match (name, recipe_file) {
        (_, Some(path)) => {
            let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            inputs.push(path);
            Recipe::from_toml(&text)?
        }
        (Some(name), None) => Recipe::builtin(name)
            .map_err(|e| anyhow!("{e}; available recipes: {}", builtin_names().join(", ")))?,
        (None, None) => bail!(
            "name a recipe or pass --recipe-file; available recipes: {}",
            builtin_names().join(", ")
        ),
    };
    if let Some(r) = runs {
        recipe.runs = r;
    }
    if let Some(s) = seed {
        recipe.seed = s;
    }
    if let Some(b) = bootstrap {
        recipe.bootstrap_samples = b;
    }
    let out = out.ok_or_else(|| anyhow!("simulate needs --out"))?;
    create_dir(out)?;
    log::info!("running {} with {} runs, seed {}", recipe.name, recipe.runs, recipe.seed);
    let result = recipe.run()?;
    let histogram = match &recipe.study {
        Study::EdgeDistribution(s) => Some(s.histogram),
        _ => None,
    };
    let mut written = result.write_csvs(out, histogram)?;
    let echo_path = out.join("recipe.toml");
    fs::write(&echo_path, toml::to_string(&recipe)?)?;
    written.push(echo_path);
    run.finish(out, &recipe, recipe.seed, &inputs, &written)?;
    println!("{}: wrote {} files to {}", recipe.name, written.len(), out.display());
    Ok(())
}

fn cmd_generate(model: &Path, seed: u64, out: &Path, labels: Option<&Path>) -> anyhow::Result<()> {
    let text = fs::read_to_string(model).with_context(|| format!("cannot read {}", model.display()))?;
    let cfg = ModelConfig::from_toml(&text)?;
    let (g, blocks) = cfg.sample(seed)?;
    let mut w = BufWriter::new(File::create(out)?);
    writeln!(w, "# sampled from {} with seed {seed}", model.display())?;
    g.write_edge_list(&mut w)?;
    w.flush()?;
    if let Some(path) = labels {
        let mut w = BufWriter::new(File::create(path)?);
        for (v, b) in blocks.iter().enumerate() {
            writeln!(w, "{} {b}", g.label(v))?;
        }
        w.flush()?;
    }
    let isolated = (0..g.node_count()).filter(|&v| g.degree(v) == 0).count();
    if isolated > 0 {
        log::warn!("{isolated} isolated nodes are not representable in an edge list and were dropped");
    }
    Ok(())
}

fn cmd_eval(tree: &Path, truth: &Path, metric: Metric) -> anyhow::Result<()> {
    let (tree, labels) = read_tree(tree)?.to_tree()?;
    let index = labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
    let file = BufReader::new(File::open(truth).with_context(|| format!("cannot open {}", truth.display()))?);
    let value = match metric {
        Metric::Ari => {
            let pairs = read_flat_labels(file)?;
            let truth = flat_labels_on(&pairs, &index)?;
            let found = leaf_labels(&tree, labels.len())?;
            adjusted_rand_index(&truth, &found)?
        }
        Metric::Hf => {
            let sets = read_truth_sets(file)?;
            let mut truth = Vec::with_capacity(sets.len());
            for set in sets {
                let ids = set
                    .iter()
                    .map(|name| {
                        index.get(name).copied().ok_or_else(|| {
                            twsplit::Error::UniverseMismatch(format!("truth node {name:?} is not in the tree"))
                        })
                    })
                    .collect::<Result<Vec<usize>, _>>()?;
                truth.push(ids);
            }
            hierarchical_f_measure(&truth, &tree)?
        }
    };
    println!("{value}");
    Ok(())
}

fn cmd_validate(path: &Path, alpha: Option<f64>) -> anyhow::Result<()> {
    let (tree, _) = read_tree(path)?.to_tree()?;
    if let Some(a) = alpha {
        validate_with_alpha(&tree, a)?;
    }
    println!(
        "valid: {} nodes, {} leaves, height {}",
        tree.nodes().len(),
        tree.leaves().len(),
        tree.height()
    );
    Ok(())
}

fn cmd_spectrum(graph: &Path, out: &Path, ceiling: usize) -> anyhow::Result<()> {
    let g = read_graph(graph)?;
    let p = g.edge_density()?;
    let values = bulk_spectrum(&g, p, ceiling)?;
    let mut w = BufWriter::new(File::create(out)?);
    write_spectrum_csv(&values, &mut w)?;
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global()?;
    }
    match &cli.command {
        Command::Test { graph, test, out } => cmd_test(graph, test, out.as_deref()),
        Command::Cluster {
            graph,
            alpha,
            min_size,
            test,
            out,
        } => cmd_cluster(graph, *alpha, *min_size, test, out.as_deref()),
        Command::Simulate {
            recipe,
            recipe_file,
            list,
            runs,
            seed,
            bootstrap_samples,
            out,
        } => {
            if *list {
                for name in builtin_names() {
                    let r = Recipe::builtin(name)?;
                    println!("{name}\t{}", r.description);
                }
                return Ok(());
            }
            cmd_simulate(
                recipe.as_deref(),
                recipe_file.as_deref(),
                *runs,
                *seed,
                *bootstrap_samples,
                out.as_deref(),
            )
        }
        Command::Generate {
            model,
            seed,
            out,
            labels,
        } => cmd_generate(model, *seed, out, labels.as_deref()),
        Command::Eval { tree, truth, metric } => cmd_eval(tree, truth, *metric),
        Command::Validate { tree, alpha } => cmd_validate(tree, *alpha),
        Command::Spectrum { graph, out, ceiling } => cmd_spectrum(graph, out, *ceiling),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let class = err
        .chain()
        .find_map(|e| e.downcast_ref::<twsplit::Error>())
        .map(twsplit::Error::class);
    match class {
        Some(ErrorClass::Degenerate) => 3,
        Some(ErrorClass::Solver) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
