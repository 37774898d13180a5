//! Command-line surface: dataset generation, discovery runs, evaluation,
//! external data ingestion checks, and the multi-seed benchmark harness.

use crate::edges::{discover, DiscoveryParams, DiscoveryReport};
use crate::error::{DasError, Result};
use crate::graph::{self, sample_er, sample_sf, Dag};
use crate::io;
use crate::stein::{BandwidthRule, SteinConfig};
use crate::synth::{draw, sample_scm, Dataset, ScmMode, ScmSpec};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Er,
    Sf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MechanismKind {
    Nonlinear,
    Linear,
}

impl From<MechanismKind> for ScmMode {
    fn from(m: MechanismKind) -> ScmMode {
        match m {
            MechanismKind::Nonlinear => ScmMode::Nonlinear,
            MechanismKind::Linear => ScmMode::Linear,
        }
    }
}

/// Full resolved configuration of a run; serializable so that reports are
/// self-describing and runs reproducible from a config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub graph: GraphKind,
    pub d: usize,
    /// Edge density factor: expected edges = density * d for ER, parents per
    /// node for SF. The benchmark regimes use 1 and 4.
    pub density: usize,
    pub n: usize,
    pub mode: MechanismKind,
    /// Noise variances are drawn uniformly from [sigma_lo, sigma_hi].
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    pub seed: u64,
    pub seeds: Vec<u64>,
    pub k: usize,
    pub alpha: f64,
    pub prune_cutoff: f64,
    pub ridge: f64,
    pub standardize: bool,
    pub skip_pruning: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            graph: GraphKind::Er,
            d: 10,
            density: 1,
            n: 1000,
            mode: MechanismKind::Nonlinear,
            sigma_lo: 0.4,
            sigma_hi: 0.8,
            seed: 0,
            seeds: (0..10).collect(),
            k: 20,
            alpha: 0.01,
            prune_cutoff: 0.001,
            ridge: 0.001,
            standardize: false,
            skip_pruning: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(DasError::InvalidParameter("d must be >= 1".into()));
        }
        if self.density == 0 {
            return Err(DasError::InvalidParameter("density must be >= 1".into()));
        }
        if self.n < 2 {
            return Err(DasError::InvalidParameter("n must be >= 2".into()));
        }
        self.discovery_params().validate()
    }

    pub fn discovery_params(&self) -> DiscoveryParams {
        DiscoveryParams {
            k: self.k,
            alpha: self.alpha,
            prune_cutoff: self.prune_cutoff,
            stein: SteinConfig {
                bandwidth: BandwidthRule::MedianHeuristic,
                ridge: self.ridge,
                chunk: 256,
            },
            standardize: self.standardize,
            skip_pruning: self.skip_pruning,
            degeneracy_threshold: 3.0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| DasError::Parse {
            line: e.line(),
            msg: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Deterministic bundle: truth graph, SCM and observations for one seed.
pub fn generate_bundle(cfg: &RunConfig, seed: u64) -> Result<(Dag, ScmSpec, Dataset)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dag = match cfg.graph {
        GraphKind::Er => sample_er(cfg.d, cfg.density * cfg.d, &mut rng)?,
        GraphKind::Sf => sample_sf(cfg.d, cfg.density, &mut rng)?,
    };
    let scm = sample_scm(&dag, cfg.mode.into(), (cfg.sigma_lo, cfg.sigma_hi), &mut rng)?;
    let mut data = draw(&scm, cfg.n, &mut rng)?;
    data.meta.seed = Some(seed);
    Ok((dag, scm, data))
}

#[derive(Parser, Debug)]
#[command(name = "das", version, about = "Score-based causal discovery")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample a random DAG, an SCM over it, and an observation matrix.
    Generate(GenerateArgs),
    /// Run the discovery pipeline on an observations CSV.
    Discover(DiscoverArgs),
    /// Compare an estimated graph against a ground-truth graph.
    Eval(EvalArgs),
    /// Multi-seed benchmark sweep over graph sizes.
    Bench(BenchArgs),
    /// Validate an external observations + truth bundle.
    IngestCheck(IngestArgs),
}

#[derive(Args, Debug)]
pub struct CommonParams {
    #[arg(long, default_value_t = 20)]
    pub k: usize,
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.001)]
    pub prune_cutoff: f64,
    #[arg(long, default_value_t = 0.001)]
    pub ridge: f64,
    /// Standardize each column to zero mean, unit variance before discovery.
    #[arg(long, default_value_t = false)]
    pub standardize: bool,
    #[arg(long, default_value_t = false)]
    pub skip_pruning: bool,
}

impl CommonParams {
    fn apply(&self, cfg: &mut RunConfig) {
        cfg.k = self.k;
        cfg.alpha = self.alpha;
        cfg.prune_cutoff = self.prune_cutoff;
        cfg.ridge = self.ridge;
        cfg.standardize = self.standardize;
        cfg.skip_pruning = self.skip_pruning;
    }
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// JSON config file; overrides the individual flags below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = GraphKind::Er)]
    pub graph: GraphKind,
    #[arg(long, default_value_t = 10)]
    pub d: usize,
    #[arg(long, default_value_t = 1)]
    pub density: usize,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = MechanismKind::Nonlinear)]
    pub mode: MechanismKind,
    #[arg(long, default_value_t = 0.4)]
    pub sigma_lo: f64,
    #[arg(long, default_value_t = 0.8)]
    pub sigma_hi: f64,
    /// Output directory for data.csv, truth files, scm.json, manifest.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct DiscoverArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Observations CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Optional ground-truth graph (edge list or adjacency CSV).
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value = "csv-header")]
    pub format: String,
    /// Report output path (JSON). Defaults to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub params: CommonParams,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub est: PathBuf,
    /// Skip the (slow) interventional-distance metric.
    #[arg(long, default_value_t = false)]
    pub no_sid: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = GraphKind::Er)]
    pub graph: GraphKind,
    #[arg(long, default_value_t = 1)]
    pub density: usize,
    /// Comma-separated node counts, e.g. 10,20,50.
    #[arg(long, value_delimiter = ',', required = true)]
    pub d_list: Vec<usize>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4,5,6,7,8,9")]
    pub seeds: Vec<u64>,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = MechanismKind::Nonlinear)]
    pub mode: MechanismKind,
    /// Output base path; writes <base>.csv and <base>.json.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub params: CommonParams,
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long, default_value = "csv-header")]
    pub format: String,
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| DasError::io(path.display().to_string(), e))
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| DasError::io(parent.display().to_string(), e))?;
        }
    }
    fs::write(path, content).map_err(|e| DasError::io(path.display().to_string(), e))
}

/// Report JSON with the hardware-dependent timings split into their own
/// top-level section, so the `report` section is stable across machines.
pub fn report_to_json(cfg: &RunConfig, report: &DiscoveryReport) -> serde_json::Value {
    let mut value = serde_json::to_value(report).expect("report serializes");
    let timings = value
        .as_object_mut()
        .and_then(|m| m.remove("timings"))
        .unwrap_or(serde_json::Value::Null);
    serde_json::json!({
        "config": cfg,
        "report": value,
        "timings": timings,
    })
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_json(&read_file(path)?)?,
        None => RunConfig {
            graph: args.graph,
            d: args.d,
            density: args.density,
            n: args.n,
            mode: args.mode,
            sigma_lo: args.sigma_lo,
            sigma_hi: args.sigma_hi,
            seed: args.seed,
            ..RunConfig::default()
        },
    };
    if args.config.is_none() {
        cfg.seed = args.seed;
    }
    cfg.validate()?;
    let (dag, scm, data) = generate_bundle(&cfg, cfg.seed)?;
    let dir = &args.out;
    fs::create_dir_all(dir).map_err(|e| DasError::io(dir.display().to_string(), e))?;
    write_file(&dir.join("data.csv"), &io::write_dataset_csv(&data))?;
    write_file(&dir.join("truth_edges.txt"), &io::write_edge_list(&dag))?;
    write_file(
        &dir.join("truth_adjacency.csv"),
        &io::write_adjacency_csv(&dag),
    )?;
    write_file(
        &dir.join("scm.json"),
        &serde_json::to_string_pretty(&scm).expect("scm serializes"),
    )?;
    let manifest = serde_json::json!({
        "seed": cfg.seed,
        "config": cfg,
        "edge_count": dag.edge_count(),
        "files": ["data.csv", "truth_edges.txt", "truth_adjacency.csv", "scm.json"],
    });
    write_file(
        &dir.join("manifest.json"),
        &serde_json::to_string_pretty(&manifest).unwrap(),
    )?;
    eprintln!(
        "generated d = {}, {} edges, n = {} -> {}",
        cfg.d,
        dag.edge_count(),
        cfg.n,
        dir.display()
    );
    Ok(())
}

pub fn cmd_discover(args: &DiscoverArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_json(&read_file(path)?)?,
        None => RunConfig::default(),
    };
    if args.config.is_none() {
        args.params.apply(&mut cfg);
    }
    let format: io::IngestFormat = args.format.parse()?;
    let data_text = read_file(&args.data)?;
    let data = match format {
        io::IngestFormat::CsvHeader => io::parse_dataset_csv(&data_text)?,
        io::IngestFormat::SyntrenExport => io::parse_dataset_tsv(&data_text)?,
    };
    let truth = match &args.truth {
        Some(path) => Some(io::parse_truth(&read_file(path)?, Some(data.d()))?),
        None => None,
    };
    cfg.d = data.d();
    cfg.n = data.n();
    let report = discover(&data, &cfg.discovery_params(), truth.as_ref())?;
    let json = serde_json::to_string_pretty(&report_to_json(&cfg, &report)).unwrap();
    match &args.out {
        Some(path) => write_file(path, &json)?,
        None => println!("{json}"),
    }
    if let Some(m) = &report.metrics {
        eprintln!(
            "shd = {}, sid = {:?}, precision = {:.3}, recall = {:.3}",
            m.shd, m.sid, m.precision, m.recall
        );
    }
    Ok(())
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let truth = io::parse_truth(&read_file(&args.truth)?, None)?;
    let est = io::parse_truth(&read_file(&args.est)?, Some(truth.d()))?;
    let with_sid = !args.no_sid && truth.d() <= 200;
    let m = graph::metrics(&truth, &est, with_sid)?;
    let json = serde_json::to_string_pretty(&m).unwrap();
    match &args.out {
        Some(path) => write_file(path, &json)?,
        None => println!("{json}"),
    }
    Ok(())
}

pub fn cmd_ingest_check(args: &IngestArgs) -> Result<()> {
    let format: io::IngestFormat = args.format.parse()?;
    let (data, truth) = io::ingest_external(
        &read_file(&args.data)?,
        &read_file(&args.truth)?,
        format,
    )?;
    let summary = serde_json::json!({
        "n": data.n(),
        "d": data.d(),
        "columns": data.names,
        "truth_edges": truth.edge_count(),
    });
    println!("{}", serde_json::to_string_pretty(&summary).unwrap());
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchCellError {
    pub d: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRow {
    pub d: usize,
    pub density: usize,
    pub graph: GraphKind,
    pub n: usize,
    pub seeds_completed: usize,
    pub shd_mean: f64,
    pub shd_std: f64,
    pub sid_mean: Option<f64>,
    pub sid_std: Option<f64>,
    pub precision_mean: f64,
    pub precision_std: f64,
    pub recall_mean: f64,
    pub recall_std: f64,
    pub ordering_s_mean: f64,
    pub selection_s_mean: f64,
    pub pruning_s_mean: f64,
    pub candidate_count_mean: f64,
    pub candidate_cap: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkTable {
    pub rows: Vec<BenchRow>,
    /// Log-log slope of mean selection time versus d (needs >= 2 sizes).
    pub selection_scaling_exponent: Option<f64>,
    pub failures: Vec<BenchCellError>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let m = crate::stats::mean(xs);
    let s = if xs.len() > 1 {
        crate::stats::variance(xs).sqrt()
    } else {
        0.0
    };
    (m, s)
}

/// Per-seed reports for one benchmark cell, exposed for tests that
/// recompute aggregates.
pub fn bench_cell(cfg: &RunConfig, d: usize) -> Vec<std::result::Result<DiscoveryReport, String>> {
    let mut cell_cfg = cfg.clone();
    cell_cfg.d = d;
    cfg.seeds
        .iter()
        .map(|&seed| {
            generate_bundle(&cell_cfg, seed)
                .and_then(|(dag, _, data)| {
                    discover(&data, &cell_cfg.discovery_params(), Some(&dag))
                })
                .map_err(|e| e.to_string())
        })
        .collect()
}

pub fn run_bench(cfg: &RunConfig, d_list: &[usize]) -> Result<BenchmarkTable> {
    if cfg.seeds.is_empty() {
        return Err(DasError::InvalidParameter("seed list is empty".into()));
    }
    if d_list.is_empty() {
        return Err(DasError::InvalidParameter("d list is empty".into()));
    }
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &d in d_list {
        let reports = bench_cell(cfg, d);
        let mut shd = Vec::new();
        let mut sid = Vec::new();
        let mut prec = Vec::new();
        let mut rec = Vec::new();
        let mut t_ord = Vec::new();
        let mut t_sel = Vec::new();
        let mut t_prune = Vec::new();
        let mut cands = Vec::new();
        for (i, res) in reports.into_iter().enumerate() {
            match res {
                Ok(r) => {
                    let m = r.metrics.as_ref().expect("bench always has truth");
                    shd.push(m.shd as f64);
                    if let Some(s) = m.sid {
                        sid.push(s as f64);
                    }
                    prec.push(m.precision);
                    rec.push(m.recall);
                    t_ord.push(r.timings.ordering_s);
                    t_sel.push(r.timings.selection_s);
                    t_prune.push(r.timings.pruning_s);
                    cands.push(r.counters.candidate_count as f64);
                }
                Err(e) => failures.push(BenchCellError {
                    d,
                    seed: cfg.seeds[i],
                    error: e,
                }),
            }
        }
        if shd.is_empty() {
            continue;
        }
        let (shd_mean, shd_std) = mean_std(&shd);
        let (precision_mean, precision_std) = mean_std(&prec);
        let (recall_mean, recall_std) = mean_std(&rec);
        let (sid_mean, sid_std) = if sid.is_empty() {
            (None, None)
        } else {
            let (m, s) = mean_std(&sid);
            (Some(m), Some(s))
        };
        rows.push(BenchRow {
            d,
            density: cfg.density,
            graph: cfg.graph,
            n: cfg.n,
            seeds_completed: shd.len(),
            shd_mean,
            shd_std,
            sid_mean,
            sid_std,
            precision_mean,
            precision_std,
            recall_mean,
            recall_std,
            ordering_s_mean: crate::stats::mean(&t_ord),
            selection_s_mean: crate::stats::mean(&t_sel),
            pruning_s_mean: crate::stats::mean(&t_prune),
            candidate_count_mean: crate::stats::mean(&cands),
            candidate_cap: cfg.k * d,
        });
    }
    let selection_scaling_exponent = if rows.len() >= 2 {
        let xs: Vec<f64> = rows.iter().map(|r| (r.d as f64).ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.selection_s_mean.max(1e-9).ln()).collect();
        Some(loglog_slope(&xs, &ys))
    } else {
        None
    };
    Ok(BenchmarkTable {
        rows,
        selection_scaling_exponent,
        failures,
    })
}

pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let mx = crate::stats::mean(xs);
    let my = crate::stats::mean(ys);
    let num: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

pub fn bench_table_csv(table: &BenchmarkTable) -> String {
    let mut out = String::from(
        "d,density,graph,n,seeds,shd_mean,shd_std,sid_mean,sid_std,precision_mean,precision_std,recall_mean,recall_std,ordering_s,selection_s,pruning_s,candidates,candidate_cap\n",
    );
    for r in &table.rows {
        let sid_m = r.sid_mean.map(|v| v.to_string()).unwrap_or_default();
        let sid_s = r.sid_std.map(|v| v.to_string()).unwrap_or_default();
        let graph = match r.graph {
            GraphKind::Er => "er",
            GraphKind::Sf => "sf",
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.d,
            r.density,
            graph,
            r.n,
            r.seeds_completed,
            r.shd_mean,
            r.shd_std,
            sid_m,
            sid_s,
            r.precision_mean,
            r.precision_std,
            r.recall_mean,
            r.recall_std,
            r.ordering_s_mean,
            r.selection_s_mean,
            r.pruning_s_mean,
            r.candidate_count_mean,
            r.candidate_cap
        ));
    }
    out
}

pub fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_json(&read_file(path)?)?,
        None => {
            let mut cfg = RunConfig {
                graph: args.graph,
                density: args.density,
                n: args.n,
                mode: args.mode,
                seeds: args.seeds.clone(),
                ..RunConfig::default()
            };
            args.params.apply(&mut cfg);
            cfg
        }
    };
    cfg.d = *args.d_list.iter().max().unwrap_or(&1);
    cfg.validate()?;
    let table = run_bench(&cfg, &args.d_list)?;
    let base = args.out.display().to_string();
    write_file(Path::new(&format!("{base}.csv")), &bench_table_csv(&table))?;
    write_file(
        Path::new(&format!("{base}.json")),
        &serde_json::to_string_pretty(&table).unwrap(),
    )?;
    if let Some(slope) = table.selection_scaling_exponent {
        eprintln!("selection-stage log-log scaling exponent: {slope:.3}");
    }
    for row in &table.rows {
        eprintln!(
            "d = {}: shd {:.1} +/- {:.1}, precision {:.2}, recall {:.2}",
            row.d, row.shd_mean, row.shd_std, row.precision_mean, row.recall_mean
        );
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Discover(a) => cmd_discover(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
        Command::IngestCheck(a) => cmd_ingest_check(a),
    }
}
