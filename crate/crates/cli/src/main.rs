//! `aae`: train loaders, run the Schmidt stage, produce entropy series.

mod plot;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aae_core::encoding::TargetEncoding;
use aae_core::finance::{build_data_vector, correlation_spectrum, load_prices, market_windows, reduced_stock_density, RegisterSplit};
use aae_core::loader_post::{overlap, post_select};
use aae_core::mmd_train::{
    select_best_trial, train_trials, CostTriple, GradientMode, KernelConfig, LrStage, Objective, TrainConfig,
};
use aae_core::pipeline::{run_entropy_pipeline, PipelineConfig};
use aae_core::qsvd::{extract_schmidt_spectrum, train_qsvd_trials, QsvdConfig, SvdCostMode};
use aae_core::simulator::{rng_for, run_ansatz, AnsatzSpec, StateVector};
use aae_core::{Error, ParamVector64, StockSeries64, TargetEncoding64, TrainRecord64};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

const TABLE2: &str = include_str!("../../core/data/table2.csv");

#[derive(Parser, Debug)]
#[command(name = "aae", version, about = "Approximate amplitude encoding and SVD-entropy pipeline")]
struct Cli {
    /// Directory for artifacts.
    #[arg(long, global = true, env = "AAE_OUT_DIR", default_value = "aae-out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a loader for a vector or a market window.
    Encode(EncodeArgs),
    /// Schmidt stage on a saved loader.
    Qsvd(QsvdArgs),
    /// Full entropy series over sliding windows.
    Entropy(EntropyArgs),
    /// Run the built-in oracle suites.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum GradientArg {
    Sampled,
    Exact,
}

impl From<GradientArg> for GradientMode {
    fn from(g: GradientArg) -> Self {
        match g {
            GradientArg::Sampled => GradientMode::Sampled,
            GradientArg::Exact => GradientMode::Exact,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct TrainArgs {
    /// Ansatz layers.
    #[arg(long, default_value_t = 8)]
    layers: usize,
    /// Adam iterations.
    #[arg(long, default_value_t = 200)]
    iters: usize,
    /// Independent trials.
    #[arg(long, default_value_t = 10)]
    trials: usize,
    /// Samples per expectation in sampled mode.
    #[arg(long, default_value_t = 400)]
    shots: usize,
    /// Learning rate up to `--lr-switch`.
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    /// Learning rate afterwards.
    #[arg(long, default_value_t = 0.01)]
    lr_late: f64,
    #[arg(long, default_value_t = 100)]
    lr_switch: usize,
    #[arg(long, value_enum, default_value_t = GradientArg::Sampled)]
    gradient: GradientArg,
    /// Kernel variance.
    #[arg(long, default_value_t = 0.125)]
    sigma_sq: f64,
    /// Iterations whose parameters are kept for best-trial selection.
    #[arg(long, value_delimiter = ',')]
    checkpoints: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl TrainArgs {
    fn train_config(&self, objective: Objective) -> TrainConfig {
        TrainConfig {
            n_shot: self.shots,
            iterations: self.iters,
            lr_schedule: vec![LrStage { until: Some(self.lr_switch), lr: self.lr }, LrStage { until: None, lr: self.lr_late }],
            n_trials: self.trials,
            checkpoints: self.checkpoints.clone(),
            seed: self.seed,
            gradient: self.gradient.into(),
            objective,
            ..TrainConfig::default()
        }
    }

    fn kernel(&self) -> KernelConfig<f64> {
        KernelConfig { sigma_sq: self.sigma_sq, ..KernelConfig::default() }
    }
}

#[derive(Args, Debug, Clone)]
struct SchmidtArgs {
    #[arg(long, default_value_t = 8)]
    qsvd_layers: usize,
    #[arg(long, default_value_t = 500)]
    qsvd_iters: usize,
    #[arg(long, default_value_t = 0.01)]
    qsvd_lr: f64,
    /// Maximum random restarts of the Schmidt training.
    #[arg(long, default_value_t = 6)]
    qsvd_trials: usize,
    /// Stop restarting once the SVD cost falls below this.
    #[arg(long, default_value_t = 1e-3)]
    qsvd_good_enough: f64,
    /// Estimate the SVD cost from this many shots instead of exactly.
    #[arg(long)]
    qsvd_shots: Option<usize>,
    /// Schmidt weights below this are dropped.
    #[arg(long, default_value_t = aae_core::qsvd::DEFAULT_SPECTRUM_THRESHOLD)]
    threshold: f64,
}

impl SchmidtArgs {
    fn config(&self) -> QsvdConfig {
        QsvdConfig {
            n_layers: self.qsvd_layers,
            iterations: self.qsvd_iters,
            lr: self.qsvd_lr,
            mode: self.qsvd_shots.map_or(SvdCostMode::Exact, |n_shot| SvdCostMode::Sampled { n_shot }),
            n_trials: self.qsvd_trials,
            good_enough: Some(self.qsvd_good_enough),
            spectrum_threshold: self.threshold,
            ..QsvdConfig::default()
        }
    }
}

#[derive(Args, Debug)]
struct EncodeArgs {
    /// Comma-separated data vector.
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["data", "term"])]
    vector: Option<String>,
    /// Price file; defaults to the bundled four-stock table.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Window label (last month) when encoding market data.
    #[arg(long)]
    term: Option<String>,
    #[arg(long, default_value_t = 5)]
    window: usize,
    /// Train on magnitudes only (no sign ancilla, no Hadamard basis).
    #[arg(long)]
    magnitude_only: bool,
    #[command(flatten)]
    train: TrainArgs,
    #[arg(long, default_value = "loader.json")]
    output: String,
}

#[derive(Args, Debug)]
struct QsvdArgs {
    /// Loader artifact written by `encode`.
    #[arg(long)]
    loader: PathBuf,
    /// Stock-register qubits when the artifact carries no split.
    #[arg(long)]
    stock_qubits: Option<usize>,
    #[command(flatten)]
    schmidt: SchmidtArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "qsvd.json")]
    output: String,
}

#[derive(Args, Debug)]
struct EntropyArgs {
    /// Price file; defaults to the bundled four-stock table.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Prices per window.
    #[arg(long, default_value_t = 5)]
    window: usize,
    #[command(flatten)]
    train: TrainArgs,
    #[command(flatten)]
    schmidt: SchmidtArgs,
    /// Skip the sign-blind baseline.
    #[arg(long)]
    no_baseline: bool,
    /// Also write SVG charts.
    #[arg(long)]
    svg: bool,
    /// File stem for the report files.
    #[arg(long, default_value = "entropy")]
    name: String,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the table as JSON.
    #[arg(long)]
    json: bool,
}

/// What `encode` trained on.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
enum EncodeSource {
    Vector { values: Vec<f64> },
    Window { data: String, term: String, window: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct BestSummary {
    trial: usize,
    iteration: usize,
    params: ParamVector64,
    cost: CostTriple<f64>,
    /// Overlap of the post-selected data register with `d` (sign ancilla only).
    overlap: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct LoaderArtifact {
    source: EncodeSource,
    layers: usize,
    objective: Objective,
    config: TrainConfig,
    kernel: KernelConfig<f64>,
    split: Option<RegisterSplit>,
    encoding: TargetEncoding64,
    best: BestSummary,
    records: Vec<TrainRecord64>,
}

#[derive(Debug, Serialize)]
struct QsvdReport {
    loader: String,
    stock_qubits: usize,
    time_qubits: usize,
    seed: u64,
    config: QsvdConfig,
    final_cost: f64,
    costs: Vec<f64>,
    spectrum: Vec<f64>,
    residual: f64,
    entropy: f64,
    /// Entropy of the loaded data register computed classically.
    reference_entropy: f64,
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    kind: String,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: 1, kind: e.kind().to_string(), message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, kind: "usage".into(), message: message.into() }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure { code: 1, kind: "io".into(), message: format!("{}: {e}", path.display()) }
}

fn read_series(path: Option<&Path>) -> Result<(StockSeries64, String), Failure> {
    match path {
        None => Ok((load_prices(TABLE2.as_bytes())?, "bundled:table2.csv".into())),
        Some(p) => {
            let file = fs::File::open(p).map_err(|e| io_failure(p, e))?;
            Ok((load_prices(file)?, p.display().to_string()))
        }
    }
}

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| io_failure(&path, e))?;
    Ok(path)
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value).map_err(|e| Failure { code: 1, kind: "serialize".into(), message: e.to_string() })
}

fn parse_vector(text: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| usage(format!("cannot parse vector entry {s:?}"))))
        .collect()
}

fn encode(args: &EncodeArgs, out: &Path) -> Result<(), Failure> {
    let (encoding, split, source) = match &args.vector {
        Some(text) => {
            let values = parse_vector(text)?;
            (TargetEncoding::new(&values)?, None, EncodeSource::Vector { values })
        }
        None => {
            let (series, label) = read_series(args.data.as_deref())?;
            let windows = market_windows(&series, args.window)?;
            let term = args.term.clone().unwrap_or_else(|| windows[0].0.clone());
            let (_, window) = windows
                .into_iter()
                .find(|(t, _)| *t == term)
                .ok_or_else(|| usage(format!("no window ends at {term:?}")))?;
            let dv = build_data_vector(&window?.coefficients.a)?;
            (dv.encoding, Some(dv.split), EncodeSource::Window { data: label, term, window: args.window })
        }
    };
    let objective = if args.magnitude_only { Objective::MagnitudeOnly } else { Objective::Amplitude };
    let cfg = args.train.train_config(objective);
    let kernel = args.train.kernel();
    let n_qubits = if args.magnitude_only { encoding.data_qubits() } else { encoding.n_qubits() };
    let spec = AnsatzSpec::all_y(n_qubits, args.train.layers)?;
    let records: Vec<TrainRecord64> = train_trials(&encoding, &spec, &cfg, &kernel)?.into_iter().map(|r| r.without_timing()).collect();
    let best = select_best_trial(&records)?;
    let overlap = match (&encoding.d_bar, objective) {
        (Some(_), Objective::Amplitude) => Some(overlap(&run_ansatz(&spec, best.params)?, &encoding.d)?),
        _ => None,
    };
    let summary = BestSummary { trial: best.record.trial, iteration: best.iteration, params: best.params.clone(), cost: best.cost, overlap };
    let artifact = LoaderArtifact {
        source,
        layers: args.train.layers,
        objective,
        config: cfg,
        kernel,
        split,
        encoding,
        best: summary,
        records,
    };
    let path = write_out(out, &args.output, &to_json(&artifact)?)?;
    let c = artifact.best.cost;
    println!(
        "best trial {} at iteration {}: L={:.6} L1={:.6} L2={:.6}{}",
        artifact.best.trial,
        artifact.best.iteration,
        c.l,
        c.l1,
        c.l2,
        artifact.best.overlap.map_or(String::new(), |o| format!(" O={o:.4}"))
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn qsvd(args: &QsvdArgs, out: &Path) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.loader).map_err(|e| io_failure(&args.loader, e))?;
    let artifact: LoaderArtifact = serde_json::from_str(&text)
        .map_err(|e| Failure { code: 1, kind: "artifact".into(), message: format!("{}: {e}", args.loader.display()) })?;
    let spec = AnsatzSpec::all_y(
        match artifact.objective {
            Objective::Amplitude => artifact.encoding.n_qubits(),
            Objective::MagnitudeOnly => artifact.encoding.data_qubits(),
        },
        artifact.layers,
    )?;
    let loaded = run_ansatz(&spec, &artifact.best.params)?;
    let data: StateVector<f64> = match (artifact.objective, artifact.encoding.d_bar.is_some()) {
        (Objective::Amplitude, true) => post_select(&loaded)?.data_state,
        _ => loaded,
    };
    let n = data.n_qubits();
    let n_s = match (args.stock_qubits, artifact.split) {
        (Some(s), _) => s,
        (None, Some(split)) => split.stock_qubits,
        (None, None) => n / 2,
    };
    if n_s == 0 || n_s >= n {
        return Err(usage(format!("stock register of {n_s} qubits does not fit a {n}-qubit data register")));
    }
    let split = RegisterSplit { stock_qubits: n_s, time_qubits: n - n_s };
    let cfg = args.schmidt.config();
    let mut rng = rng_for(args.seed, 0);
    let run = train_qsvd_trials(&data, split.stock_qubits, split.time_qubits, &cfg, &mut rng)?;
    let spectrum = extract_schmidt_spectrum(&run.pair.apply(&data)?, split.stock_qubits, split.time_qubits, cfg.spectrum_threshold)?;
    let rho = reduced_stock_density(&data.real_parts(), split)?;
    let reference_entropy = correlation_spectrum(&rho)?.iter().map(|&l| -l * l.ln()).sum();
    let report = QsvdReport {
        loader: args.loader.display().to_string(),
        stock_qubits: split.stock_qubits,
        time_qubits: split.time_qubits,
        seed: args.seed,
        config: cfg,
        final_cost: run.final_cost(),
        costs: run.costs.clone(),
        spectrum: spectrum.probabilities(),
        residual: spectrum.residual,
        entropy: spectrum.entropy()?,
        reference_entropy,
    };
    let path = write_out(out, &args.output, &to_json(&report)?)?;
    println!(
        "cost {:.6}  entropy {:.6}  (loaded state {:.6})",
        report.final_cost, report.entropy, report.reference_entropy
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn entropy(args: &EntropyArgs, out: &Path) -> Result<(), Failure> {
    let (series, _) = read_series(args.data.as_deref())?;
    let cfg = PipelineConfig {
        window: args.window,
        layers: args.train.layers,
        train: args.train.train_config(Objective::Amplitude),
        kernel: args.train.kernel(),
        qsvd: args.schmidt.config(),
        baseline: !args.no_baseline,
        seed: args.train.seed,
    };
    let report = run_entropy_pipeline(&series, &cfg)?;
    let json = write_out(out, &format!("{}.json", args.name), &report.to_json()?)?;
    let csv = write_out(out, &format!("{}.csv", args.name), &report.to_csv()?)?;
    if args.svg {
        write_out(out, &format!("{}.svg", args.name), &plot::entropy_chart(&report))?;
        write_out(out, &format!("{}_costs.svg", args.name), &plot::cost_chart(&report))?;
    }
    println!("{:<8} {:>8} {:>8} {:>8} {:>7}", "term", "exact", "aae", "naive", "O");
    let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
    for t in &report.terms {
        println!(
            "{:<8} {:>8} {:>8} {:>8} {:>7}",
            t.term,
            fmt(t.exact),
            fmt(t.aae.as_ref().map(|c| c.entropy)),
            fmt(t.naive.as_ref().map(|c| c.entropy)),
            fmt(t.overlap)
        );
        for e in &t.errors {
            eprintln!("  {}: {e}", t.term);
        }
    }
    println!("wrote {} and {}", json.display(), csv.display());
    Ok(())
}

fn verify(args: &VerifyArgs, out: &Path) -> Result<bool, Failure> {
    let suites = aae_core::verify::run_all(args.seed)?;
    println!("{:<40} {:>6} {:>12} {:>10}  result", "suite", "cases", "worst", "tolerance");
    for s in &suites {
        println!(
            "{:<40} {:>6} {:>12.3e} {:>10.0e}  {}",
            s.name,
            s.cases,
            s.worst,
            s.tolerance,
            if s.passed { "PASS" } else { "FAIL" }
        );
    }
    if args.json {
        write_out(out, "verify.json", &to_json(&suites)?)?;
    }
    Ok(suites.iter().all(|s| s.passed))
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    match &cli.command {
        Command::Encode(a) => encode(a, &cli.out_dir).map(|_| 0),
        Command::Qsvd(a) => qsvd(a, &cli.out_dir).map(|_| 0),
        Command::Entropy(a) => entropy(a, &cli.out_dir).map(|_| 0),
        Command::Verify(a) => verify(a, &cli.out_dir).map(|ok| if ok { 0 } else { 1 }),
    }
}

fn report_failure(f: &Failure) {
    let record = serde_json::json!({ "error": f.kind, "message": f.message, "exit_code": f.code });
    eprintln!("{record}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            report_failure(&usage(e.kind().to_string()));
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            report_failure(&f);
            ExitCode::from(f.code)
        }
    }
}
