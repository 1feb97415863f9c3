use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nextdoor::analysis::{nested_model_curve, run_next_door_detailed, AnalysisConfig, Ordering};
use nextdoor::report::{read_report, render, ReportFormat};
use nextdoor::simulation::{
    power_curve, rows_to_csv, type_one_error_experiment, Design, DesignSpec, ExperimentConfig, Method,
};
use nextdoor::{load_csv, Criterion, Dataset, Family, NextDoorError};

#[derive(Parser)]
#[command(name = "nextdoor", version, about = "Next-Door analysis for the lasso")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the base and proximal models and test every selected predictor.
    Analyze(AnalyzeArgs),
    /// Type I error or power of the tests on synthetic designs.
    Simulate(SimulateArgs),
    /// Held-out error of nested unpenalized models ordered by importance.
    Nested(NestedArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CriterionArg {
    Min,
    #[value(name = "1se")]
    OneSe,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    Pvalue,
    Score,
}

#[derive(Args)]
struct Tuning {
    /// Number of penalty values.
    #[arg(long, default_value_t = 100)]
    nlambda: usize,
    /// Smallest penalty as a fraction of the largest.
    #[arg(long, default_value_t = 0.01)]
    lambda_ratio: f64,
    #[arg(long, value_enum, default_value = "min")]
    criterion: CriterionArg,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    gamma1: f64,
    #[arg(long, default_value_t = 0.05)]
    gamma2: f64,
    /// Randomization rounds.
    #[arg(long = "H", default_value_t = 1000)]
    h: usize,
    /// Bootstrap replicates.
    #[arg(long = "B", default_value_t = 10_000)]
    b: usize,
    /// Paired-bootstrap resamples for selection frequencies.
    #[arg(long, default_value_t = 50)]
    boot_freq: usize,
    #[arg(long, default_value_t = 0.05)]
    freq_cutoff: f64,
    /// Post-selection randomization variance (default gamma1 * sigma0^2).
    #[arg(long)]
    tau2: Option<f64>,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Tuning {
    fn config(&self) -> AnalysisConfig<f64> {
        let mut cfg = AnalysisConfig::<f64> {
            folds: self.folds,
            nlambda: self.nlambda,
            lambda_ratio: self.lambda_ratio,
            criterion: match self.criterion {
                CriterionArg::Min => Criterion::RandomizedMin,
                CriterionArg::OneSe => Criterion::RandomizedOneSe,
            },
            n_boot_freq: self.boot_freq,
            frequency_cutoff: self.freq_cutoff,
            tau_sq: self.tau2,
            seed: self.seed,
            ..Default::default()
        };
        cfg.randomization.alpha = self.alpha;
        cfg.randomization.gamma1 = self.gamma1;
        cfg.randomization.h = self.h;
        cfg.bootstrap.gamma2 = self.gamma2;
        cfg.bootstrap.b = self.b;
        cfg
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Training data (CSV with header).
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    response: String,
    #[arg(long, default_value = "gaussian")]
    family: Family,
    /// Held-out data for descriptive test errors.
    #[arg(long)]
    test_data: Option<PathBuf>,
    /// Column holding user-defined fold labels.
    #[arg(long)]
    fold_col: Option<String>,
    /// Extra exclusion sets, e.g. "a,b;c".
    #[arg(long)]
    exclude: Option<String>,
    #[command(flatten)]
    tuning: Tuning,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Defaults to the output file's extension, else text.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value = "orthogonal")]
    design: Design,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    p: usize,
    #[arg(long, default_value_t = 5)]
    s: usize,
    #[arg(long, default_value_t = 200)]
    reps: usize,
    #[arg(long, default_value_t = 0.1)]
    level: f64,
    /// Comma-separated subset of model_pvalue,model_score,post_selection,naive.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    /// Comma-separated coefficients for predictor 1; switches to a power curve.
    #[arg(long, value_delimiter = ',')]
    signal_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 30)]
    nlambda: usize,
    #[arg(long = "H", default_value_t = 200)]
    h: usize,
    #[arg(long = "B", default_value_t = 500)]
    b: usize,
    #[arg(long, default_value_t = 50)]
    boot_freq: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct NestedArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    test_data: PathBuf,
    #[arg(long)]
    response: String,
    #[arg(long, default_value = "gaussian")]
    family: Family,
    /// JSON report produced by `analyze`.
    #[arg(long)]
    report: PathBuf,
    #[arg(long, value_enum, default_value = "pvalue")]
    order: OrderArg,
    #[arg(long, default_value_t = 1)]
    start: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_exclusions(spec: &str, d: &Dataset<f64>) -> Result<Vec<Vec<usize>>, NextDoorError> {
    spec.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|set| {
            set.split(',')
                .map(|name| {
                    let name = name.trim();
                    d.index_of(name)
                        .ok_or_else(|| NextDoorError::invalid(format!("unknown predictor `{name}` in --exclude")))
                })
                .collect()
        })
        .collect()
}

fn emit(out: Option<&Path>, body: &str) -> Result<(), NextDoorError> {
    match out {
        Some(path) => {
            std::fs::write(path, body).map_err(|source| NextDoorError::Io { path: path.display().to_string(), source })
        }
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn analyze(args: AnalyzeArgs) -> Result<(), NextDoorError> {
    let d: Dataset<f64> = load_csv(&args.data, &args.response, args.family, args.fold_col.as_deref())?;
    let test = match &args.test_data {
        Some(p) => Some(load_csv::<f64>(p, &args.response, args.family, None)?),
        None => None,
    };
    let mut cfg = args.tuning.config();
    if let Some(spec) = &args.exclude {
        cfg.exclusion_sets = parse_exclusions(spec, &d)?;
    }
    let out = run_next_door_detailed(&d, &cfg, test.as_ref())?;
    let format = match args.format {
        Some(FormatArg::Text) => ReportFormat::Text,
        Some(FormatArg::Csv) => ReportFormat::Csv,
        Some(FormatArg::Json) => ReportFormat::Json,
        None => args
            .out
            .as_ref()
            .and_then(|p| p.extension())
            .and_then(|e| e.to_str())
            .and_then(|e| e.parse().ok())
            .unwrap_or(ReportFormat::Text),
    };
    emit(args.out.as_deref(), &render(&out.report, format)?)
}

fn simulate(args: SimulateArgs) -> Result<(), NextDoorError> {
    let spec = DesignSpec { design: args.design, n: args.n, p: args.p, s: args.s, seed: args.seed };
    let mut cfg = ExperimentConfig { level: args.level, reps: args.reps, seed: args.seed, ..Default::default() };
    if let Some(methods) = args.methods {
        cfg.methods = methods;
    }
    cfg.analysis.nlambda = args.nlambda;
    cfg.analysis.randomization.h = args.h;
    cfg.analysis.bootstrap.b = args.b;
    cfg.analysis.n_boot_freq = args.boot_freq;
    let rows = match &args.signal_grid {
        Some(grid) => power_curve(&spec, grid, &cfg)?,
        None => type_one_error_experiment(&spec, &cfg)?,
    };
    emit(args.out.as_deref(), &rows_to_csv(&rows)?)
}

fn nested(args: NestedArgs) -> Result<(), NextDoorError> {
    let train: Dataset<f64> = load_csv(&args.data, &args.response, args.family, None)?;
    let test: Dataset<f64> = load_csv(&args.test_data, &args.response, args.family, None)?;
    let report = read_report::<f64>(&args.report)?;
    let ordering = match args.order {
        OrderArg::Pvalue => Ordering::ModelPvalue,
        OrderArg::Score => Ordering::ModelScore,
    };
    let curve = nested_model_curve(&train, &test, &report, ordering, args.start)?;
    let mut body = String::from("k,test_error\n");
    for (k, e) in curve {
        body.push_str(&format!("{k},{e}\n"));
    }
    emit(args.out.as_deref(), &body)
}

fn exit_code(e: &NextDoorError) -> u8 {
    match e {
        NextDoorError::InvalidArgument(_) => 1,
        NextDoorError::Fold { source, .. } | NextDoorError::Predictor { source, .. } => exit_code(source),
        e if e.is_numerical() => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Simulate(a) => simulate(a),
        Command::Nested(a) => nested(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
