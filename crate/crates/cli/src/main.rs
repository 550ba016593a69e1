mod config;
mod output;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use vqasc::ansatz::{build_ansatz, catalog, lookup, param_count, AnsatzSpec};
use vqasc::datasets::{GeneratorSpec, Kind};
use vqasc::evalmetrics::{accuracy, adjusted_rand_index, classical_fiedler, normalized_mutual_info, relabel};
use vqasc::graph::Dataset;
use vqasc::simcore::SignBackend;
use vqasc::vqasc::{build_graph, cluster, qubits_for, ClusterResult, GraphConfig, OptimizationTrace};
use vqasc::xpress::{bootstrap_kl_std, report_from_fidelities, sample_fidelities, Mode, DEFAULT_BINS, DEFAULT_SAMPLES};

use crate::config::{DatasetSource, RunConfig};
use crate::output::{csv_bytes, histogram_csv, statevector_csv, write_atomic, write_json};

#[derive(Parser)]
#[command(
    name = "vqasc",
    version,
    about = "Variational quantum approximate spectral clustering"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic two-class dataset as CSV.
    Generate(GenerateArgs),
    /// Run the variational clustering pipeline.
    Cluster(ClusterArgs),
    /// Estimate expressibility of catalog circuits.
    Express(ExpressArgs),
    /// Classical Fiedler-vector bipartition of a dataset's graph.
    Oracle(OracleArgs),
    /// List the circuit catalog.
    Catalog(CatalogArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_parser = parse_kind)]
    kind: Kind,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    /// Inner-ring radius for circles.
    #[arg(long, default_value_t = 0.5)]
    factor: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Default)]
struct DatasetArgs {
    /// CSV with columns f0..f{d-1}[,label].
    #[arg(long, conflicts_with = "builtin")]
    dataset: Option<PathBuf>,
    /// Bundled dataset: iris or iris128.
    #[arg(long)]
    builtin: Option<String>,
}

impl DatasetArgs {
    fn apply(&self, src: &mut DatasetSource) {
        if self.dataset.is_some() || self.builtin.is_some() {
            *src = DatasetSource {
                path: self.dataset.clone(),
                builtin: self.builtin.clone(),
                ..DatasetSource::default()
            };
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Direct,
    Ancilla,
}

#[derive(Args)]
struct ClusterArgs {
    /// TOML run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    data: DatasetArgs,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    ansatz: Option<String>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long, conflicts_with = "alpha")]
    tau: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    max_itr: Option<usize>,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    #[arg(long)]
    seed: u64,
    /// Result document (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Also write `index,re,im,abs` of the optimised state to this CSV.
    #[arg(long)]
    dump_statevector: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Raw,
    Phase,
    Both,
}

#[derive(Args)]
struct ExpressArgs {
    /// Circuit ids, e.g. `23,25,35` or `1-19`.
    #[arg(long)]
    ids: String,
    #[arg(long, default_value_t = 4)]
    n_qubits: usize,
    #[arg(long, default_value_t = 1)]
    layers: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Both)]
    mode: ModeArg,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
    #[arg(long)]
    seed: u64,
    /// Bootstrap resamples for a KL spread estimate (0 disables).
    #[arg(long, default_value_t = 0)]
    bootstrap: usize,
    /// Report CSV.
    #[arg(long)]
    out: PathBuf,
    /// Directory for per-circuit histogram CSVs.
    #[arg(long)]
    histograms: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CatalogArgs {
    #[arg(long, default_value_t = 4)]
    n_qubits: usize,
    #[arg(long, default_value_t = 1)]
    layers: usize,
}

fn parse_kind(s: &str) -> Result<Kind, String> {
    s.parse().map_err(|e: vqasc::Error| e.to_string())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Cluster(a) => run_cluster(a),
        Command::Express(a) => express(a),
        Command::Oracle(a) => oracle(a),
        Command::Catalog(a) => list_catalog(a),
    }
}

fn generate(a: GenerateArgs) -> Result<()> {
    let spec = GeneratorSpec {
        factor: a.factor,
        ..GeneratorSpec::new(a.kind, a.n, a.noise, a.seed)
    };
    let ds = spec.generate()?;
    let mut bytes = Vec::new();
    ds.write_csv(&mut bytes)?;
    write_atomic(&a.out, &bytes)
}

#[derive(Serialize)]
struct Metrics {
    acc: f64,
    ari: f64,
    nmi: f64,
}

impl Metrics {
    fn compare(pred: &[usize], truth: &[usize]) -> Result<Self> {
        Ok(Self {
            acc: accuracy(pred, truth)?,
            ari: adjusted_rand_index(pred, truth)?,
            nmi: normalized_mutual_info(pred, truth)?,
        })
    }
}

fn truth_labels(ds: &Dataset) -> Result<Option<Vec<usize>>> {
    let Some(l) = &ds.labels else { return Ok(None) };
    let t = relabel(l);
    if t.iter().any(|&v| v > 1) {
        log::warn!("dataset has more than two classes; skipping label metrics");
        return Ok(None);
    }
    Ok(Some(t))
}

#[derive(Serialize)]
struct OracleComparison {
    fiedler_value: f64,
    /// `(J* - λ₂) / λ₂`.
    relative_gap: f64,
    agreement: Metrics,
}

#[derive(Serialize)]
struct ClusterReport<'a> {
    dataset: &'a str,
    n_points: usize,
    n_qubits: usize,
    n_params: usize,
    config: &'a RunConfig,
    tau: f64,
    labels: &'a [usize],
    signs: &'a [i8],
    chosen_lambda: f64,
    cut_value: f64,
    settling_fraction: f64,
    settling_warning: bool,
    result: &'a ClusterResult,
    trace: &'a OptimizationTrace,
    metrics: Option<Metrics>,
    oracle: OracleComparison,
    wall_time_s: f64,
}

fn run_cluster(a: ClusterArgs) -> Result<()> {
    let start = Instant::now();
    let (mut cfg, base) = match &a.config {
        Some(p) => (
            RunConfig::from_toml_file(p)?,
            p.parent().map(Path::to_path_buf).unwrap_or_default(),
        ),
        None => (RunConfig::default(), PathBuf::from(".")),
    };
    a.data.apply(&mut cfg.dataset);
    if let Some(g) = a.gamma {
        cfg.graph.gamma = g;
    }
    if a.k.is_some() {
        cfg.graph.k = a.k;
    }
    if let Some(id) = a.ansatz {
        cfg.ansatz.id = id;
    }
    if let Some(l) = a.layers {
        cfg.ansatz.layers = l;
    }
    if a.tau.is_some() {
        cfg.objective.tau = a.tau;
        cfg.objective.alpha = None;
    }
    if a.alpha.is_some() {
        cfg.objective.alpha = a.alpha;
        cfg.objective.tau = None;
    }
    if let Some(r) = a.restarts {
        cfg.objective.restarts = r;
    }
    if let Some(m) = a.max_itr {
        cfg.objective.max_itr = m;
    }
    if let Some(b) = a.backend {
        cfg.readout.backend = match b {
            BackendArg::Direct => SignBackend::Direct,
            BackendArg::Ancilla => SignBackend::Ancilla,
        };
    }
    cfg.objective.seed = a.seed;
    cfg.readout.dump_statevector |= a.dump_statevector.is_some();

    let ds = cfg.dataset.load(&base)?;
    let n_qubits = qubits_for(ds.len())?;
    let spec = cfg.ansatz.spec(n_qubits);
    let n_params = param_count(&spec)?;
    let run = cluster(&ds, &cfg.graph, &spec, &cfg.objective, &cfg.readout)?;

    let oracle = classical_fiedler(&run.laplacian)?;
    let j_star = run.trace.final_value().j;
    let oracle = OracleComparison {
        fiedler_value: oracle.fiedler_value,
        relative_gap: (j_star - oracle.fiedler_value) / oracle.fiedler_value,
        agreement: Metrics::compare(&run.result.labels, &oracle.labels)?,
    };
    let metrics = match truth_labels(&ds)? {
        Some(t) => Some(Metrics::compare(&run.result.labels, &t)?),
        None => None,
    };
    if let Some(path) = &a.dump_statevector {
        let amps = run
            .result
            .statevector_dump
            .as_deref()
            .context("statevector dump missing")?;
        write_atomic(path, &statevector_csv(amps)?)?;
    }
    let report = ClusterReport {
        dataset: &ds.name,
        n_points: ds.len(),
        n_qubits,
        n_params,
        config: &cfg,
        tau: run.trace.tau,
        labels: &run.result.labels,
        signs: &run.result.signs,
        chosen_lambda: run.result.chosen_lambda,
        cut_value: run.result.cut_value,
        settling_fraction: run.result.settling_fraction,
        settling_warning: run.result.settling_warning(),
        result: &run.result,
        trace: &run.trace,
        metrics,
        oracle,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    write_json(&a.out, &report)
}

/// `"1-3,7"` → `["1", "2", "3", "7"]`; non-numeric ids pass through.
fn parse_ids(s: &str) -> Result<Vec<String>> {
    let mut ids = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((lo, hi)) => {
                let (lo, hi): (usize, usize) = (
                    lo.parse().with_context(|| format!("bad range start in '{part}'"))?,
                    hi.parse().with_context(|| format!("bad range end in '{part}'"))?,
                );
                if lo > hi {
                    bail!("empty range '{part}'");
                }
                ids.extend((lo..=hi).map(|i| i.to_string()));
            }
            None => ids.push(part.to_string()),
        }
    }
    if ids.is_empty() {
        bail!("no circuit ids given");
    }
    for id in &ids {
        if lookup(id).is_none() {
            bail!("unknown circuit id '{id}' (see `vqasc catalog`)");
        }
    }
    Ok(ids)
}

fn express(a: ExpressArgs) -> Result<()> {
    let ids = parse_ids(&a.ids)?;
    let modes: &[Mode] = match a.mode {
        ModeArg::Raw => &[Mode::Raw],
        ModeArg::Phase => &[Mode::Phase],
        ModeArg::Both => &[Mode::Raw, Mode::Phase],
    };
    if let Some(dir) = &a.histograms {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut rows = Vec::new();
    for id in &ids {
        let spec = AnsatzSpec::new(id.as_str(), a.n_qubits, a.layers);
        build_ansatz(&spec).with_context(|| format!("circuit {id}"))?;
        for &mode in modes {
            let fids = sample_fidelities(&spec, a.samples, mode, a.seed)?;
            let report = report_from_fidelities(&spec, mode, &fids, a.bins, a.seed)?;
            let spread = if a.bootstrap > 0 {
                bootstrap_kl_std(&fids, a.n_qubits, a.bins, a.bootstrap, a.seed)?
                    .map_or_else(|| "OVERFLOW".to_string(), |s| s.to_string())
            } else {
                String::new()
            };
            if let Some(dir) = &a.histograms {
                write_atomic(&dir.join(format!("{id}_{mode}.csv")), &histogram_csv(&report)?)?;
            }
            rows.push(vec![
                id.clone(),
                a.n_qubits.to_string(),
                a.layers.to_string(),
                mode.to_string(),
                report.kl_value.to_string(),
                a.samples.to_string(),
                a.seed.to_string(),
                spread,
            ]);
        }
    }
    let header = [
        "circuit",
        "n_qubits",
        "layers",
        "mode",
        "kl_value",
        "n_samples",
        "seed",
        "bootstrap_std",
    ];
    write_atomic(&a.out, &csv_bytes(&header, rows)?)
}

#[derive(Serialize)]
struct OracleReport<'a> {
    dataset: &'a str,
    n_points: usize,
    graph: GraphConfig,
    connected: bool,
    eigenvalues: Vec<f64>,
    fiedler_value: f64,
    fiedler_vector: Vec<f64>,
    labels: Vec<usize>,
    metrics: Option<Metrics>,
}

fn oracle(a: OracleArgs) -> Result<()> {
    let mut src = DatasetSource::default();
    a.data.apply(&mut src);
    let ds = src.load(Path::new("."))?;
    let graph = GraphConfig { gamma: a.gamma, k: a.k };
    let lap = build_graph(&ds.points, &graph)?;
    let o = classical_fiedler(&lap)?;
    if !lap.connected() {
        log::warn!(
            "graph is disconnected; λ₂ = {:e} and the partition is not unique",
            o.fiedler_value
        );
    }
    let metrics = match truth_labels(&ds)? {
        Some(t) => Some(Metrics::compare(&o.labels, &t)?),
        None => None,
    };
    let report = OracleReport {
        dataset: &ds.name,
        n_points: ds.len(),
        graph,
        connected: lap.connected(),
        fiedler_value: o.fiedler_value,
        eigenvalues: o.eigenvalues,
        fiedler_vector: o.fiedler_vector,
        labels: o.labels,
        metrics,
    };
    write_json(&a.out, &report)
}

fn list_catalog(a: CatalogArgs) -> Result<()> {
    let mut out = std::io::stdout().lock();
    let mut print = || -> std::io::Result<()> {
        writeln!(out, "id\tparams\tformula\tdescription")?;
        for entry in catalog() {
            let params = param_count(&entry.spec(a.n_qubits, a.layers)).map_or_else(|_| "-".into(), |p| p.to_string());
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                entry.id, params, entry.formula, entry.description
            )?;
        }
        out.flush()
    };
    match print() {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}
