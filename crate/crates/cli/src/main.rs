mod number;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use qecss::{
    chain_fidelity, channel_fidelity, decoder_objective, depolarizing, five_bit_code,
    optimize_channel, optimize_code_from, syndrome_diagnostic, trivial_code, Channel, CodePair,
    CodeSearchResult, CpMap, DiagnosticConfig, IterationConfig, KrausCount, OptimizationTrace,
    SeesawConfig, TransferMatrix,
};

use crate::number::format_number;

#[derive(Parser)]
#[command(name = "qecss", version, about = "Optimize quantum error-correcting codes for a given noise channel")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print F_C(D∘T∘E) for a code and a noise channel.
    Fidelity {
        #[command(flatten)]
        code: CodeArg,
        #[command(flatten)]
        noise: NoiseArgs,
    },
    /// Tabulate fidelities over a grid of depolarizing parameters as CSV.
    Sweep(SweepArgs),
    /// Search for the best code for a noise channel.
    Optimize(OptimizeArgs),
    /// Check whether a code corrects any error exactly, and whether its encoder is isometric.
    Diagnose(DiagnoseArgs),
}

#[derive(Args)]
struct CodeArg {
    /// Code file (CodePair JSON or `optimize` output), or `fivebit`, or `trivial:N`.
    #[arg(long)]
    code: String,
}

#[derive(Args)]
struct NoiseArgs {
    /// Channel JSON file.
    #[arg(long, conflicts_with = "depolarizing")]
    channel: Option<PathBuf>,
    /// Use n copies of the depolarizing channel with this parameter.
    #[arg(long)]
    depolarizing: Option<f64>,
    #[arg(long, default_value_t = 5)]
    n_copies: usize,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, default_value_t = 2)]
    d0: usize,
    #[arg(long, default_value_t = 5)]
    restarts: usize,
    #[arg(long, default_value_t = 100)]
    max_rounds: usize,
    /// Inner iteration stops once a step gains less than this.
    #[arg(long, default_value_t = 1e-10)]
    gain_threshold: f64,
    #[arg(long, default_value_t = 1e-10)]
    round_gain_threshold: f64,
    /// Kraus operators in random initial encoders: `full` or a count.
    #[arg(long, default_value = "full")]
    encoder_kraus: KrausCount,
    #[arg(long, default_value = "full")]
    decoder_kraus: KrausCount,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write optimizer traces as JSON.
    #[arg(long)]
    trace: Option<PathBuf>,
}

impl SearchArgs {
    fn config(&self) -> SeesawConfig {
        SeesawConfig {
            inner: IterationConfig {
                gain_threshold: self.gain_threshold,
                ..IterationConfig::default()
            },
            max_rounds: self.max_rounds,
            round_gain_threshold: self.round_gain_threshold,
            restarts: self.restarts,
            encoder_kraus_count: self.encoder_kraus,
            decoder_kraus_count: self.decoder_kraus,
            seed: self.seed,
            seed_trivial: true,
            keep_traces: self.trace.is_some(),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
enum Column {
    Uncorrected,
    Fivebit,
    Optimized,
    FivebitEncoderOptDecoder,
}

impl Column {
    fn header(self) -> &'static str {
        match self {
            Column::Uncorrected => "uncorrected",
            Column::Fivebit => "fivebit",
            Column::Optimized => "optimized",
            Column::FivebitEncoderOptDecoder => "fivebit_encoder_opt_decoder",
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 0.0)]
    p_start: f64,
    #[arg(long, default_value_t = 4.0 / 3.0)]
    p_end: f64,
    #[arg(long, default_value_t = 21)]
    p_steps: usize,
    #[arg(long, default_value_t = 5)]
    n_copies: usize,
    /// Comma-separated; defaults to every column available for n_copies.
    #[arg(long, value_delimiter = ',')]
    columns: Vec<Column>,
    /// CSV destination; stdout if omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    noise: NoiseArgs,
    #[command(flatten)]
    search: SearchArgs,
    /// Extra restart seeded from this code (repeatable).
    #[arg(long)]
    seed_code: Vec<String>,
    /// Write the full search result as JSON; a summary is printed either way.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    code: CodeArg,
    #[arg(long, default_value_t = 3)]
    restarts: usize,
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    #[arg(long, default_value_t = 1e-10)]
    gain_threshold: f64,
    #[arg(long, default_value_t = 10000)]
    max_steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Dimension(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Dimension(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "invalid input: {m}"),
            CliError::Dimension(m) => write!(f, "dimension error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<qecss::Error> for CliError {
    fn from(e: qecss::Error) -> Self {
        match e {
            qecss::Error::DimMismatch { .. }
            | qecss::Error::ShapeMismatch { .. }
            | qecss::Error::NonSquare { .. } => CliError::Dimension(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

fn load_code(spec: &str) -> CliResult<CodePair> {
    if spec == "fivebit" {
        return Ok(five_bit_code());
    }
    if let Some(n) = spec.strip_prefix("trivial:") {
        let n: usize = n
            .parse()
            .map_err(|_| CliError::Input(format!("bad qubit count in {spec:?}")))?;
        return Ok(trivial_code(n)?);
    }
    let path = Path::new(spec);
    let value: serde_json::Value = read_json(path)?;
    // accept the output of `optimize` as well as a bare code
    let code = match value.get("best") {
        Some(best) => serde_json::from_value(best.clone()),
        None => serde_json::from_value(value),
    };
    code.map_err(|e| CliError::Input(format!("{spec}: {e}")))
}

fn depolarizing_power(p: f64, n: usize) -> CliResult<TransferMatrix> {
    if n == 0 || n > 6 {
        return Err(CliError::Input(format!("n_copies must be in [1, 6], got {n}")));
    }
    Ok(TransferMatrix::tensor_power(&depolarizing(p)?, n)?)
}

/// Many-Kraus channels are applied faster through their transfer matrix.
fn noise_map(c: Channel) -> CliResult<Box<dyn CpMap>> {
    let (din, dout) = (c.dim_in(), c.dim_out());
    if din * dout <= 4096 && c.kraus_count() * (din + dout) > din * dout {
        Ok(Box::new(TransferMatrix::from_channel(&c)))
    } else {
        Ok(Box::new(c))
    }
}

fn load_noise(args: &NoiseArgs) -> CliResult<Box<dyn CpMap>> {
    match (&args.channel, args.depolarizing) {
        (Some(path), _) => noise_map(read_json(path)?),
        (None, Some(p)) => Ok(Box::new(depolarizing_power(p, args.n_copies)?)),
        (None, None) => Err(CliError::Input("one of --channel or --depolarizing is required".into())),
    }
}

fn code_fidelity(code: &CodePair, t: &dyn CpMap) -> CliResult<f64> {
    code.check_noise_dims(t.dim_in(), t.dim_out())?;
    Ok(chain_fidelity(&[&code.encoder, t, &code.decoder])?)
}

fn cmd_fidelity(code: &CodeArg, noise: &NoiseArgs) -> CliResult<()> {
    let code = load_code(&code.code)?;
    let t = load_noise(noise)?;
    println!("{}", format_number(code_fidelity(&code, t.as_ref())?));
    Ok(())
}

fn p_grid(args: &SweepArgs) -> CliResult<Vec<f64>> {
    let max = qecss::standard::DEPOLARIZING_MAX;
    let (a, b) = (args.p_start, args.p_end);
    if !(0.0 <= a && a <= b && b <= max) {
        return Err(CliError::Input(format!(
            "need 0 <= p_start <= p_end <= 4/3, got {a}, {b}"
        )));
    }
    if args.p_steps < 2 {
        return Err(CliError::Input("p_steps must be at least 2".into()));
    }
    let last = (args.p_steps - 1) as f64;
    Ok((0..args.p_steps)
        .map(|i| if i + 1 == args.p_steps { b } else { a + (b - a) * i as f64 / last })
        .collect())
}

#[derive(Serialize)]
struct SweepTrace {
    p: f64,
    optimized: Option<Vec<OptimizationTrace>>,
    fivebit_encoder_opt_decoder: Option<OptimizationTrace>,
}

fn sweep_row(
    p: f64,
    columns: &[Column],
    args: &SweepArgs,
) -> CliResult<(Vec<f64>, SweepTrace)> {
    let t = depolarizing_power(p, args.n_copies)?;
    let cfg = args.search.config();
    let mut trace = SweepTrace {
        p,
        optimized: None,
        fivebit_encoder_opt_decoder: None,
    };
    let mut values = Vec::with_capacity(columns.len());
    for column in columns {
        let v = match column {
            Column::Uncorrected => channel_fidelity(&depolarizing(p)?)?,
            Column::Fivebit => code_fidelity(&five_bit_code(), &t)?,
            Column::Optimized => {
                let mut seeds = Vec::new();
                if args.n_copies == 5 && args.search.d0 == 2 {
                    seeds.push(five_bit_code());
                }
                let result = optimize_code_from(&t, args.search.d0, &cfg, &seeds)?;
                trace.optimized = result.traces;
                result.fidelity
            }
            Column::FivebitEncoderOptDecoder => {
                let code = five_bit_code();
                let f = decoder_objective(&code.encoder, &t)?;
                let inner = IterationConfig {
                    seed: cfg.seed,
                    ..cfg.inner
                };
                let run = optimize_channel(&f, &code.decoder, &inner)?;
                let value = run.final_objective;
                if cfg.keep_traces {
                    trace.fivebit_encoder_opt_decoder = Some(run);
                }
                value
            }
        };
        values.push(v);
    }
    Ok((values, trace))
}

fn cmd_sweep(args: &SweepArgs) -> CliResult<()> {
    let grid = p_grid(args)?;
    let mut columns = args.columns.clone();
    if columns.is_empty() {
        columns = vec![Column::Uncorrected, Column::Optimized];
        if args.n_copies == 5 {
            columns.insert(1, Column::Fivebit);
        }
    }
    columns.sort();
    columns.dedup();
    let needs_five = columns
        .iter()
        .any(|c| matches!(c, Column::Fivebit | Column::FivebitEncoderOptDecoder));
    if needs_five && args.n_copies != 5 {
        return Err(CliError::Input("five-bit columns need --n-copies 5".into()));
    }
    if args.search.d0 < 2 {
        return Err(CliError::Input("d0 must be at least 2".into()));
    }

    let rows: Vec<(Vec<f64>, SweepTrace)> = grid
        .par_iter()
        .map(|&p| sweep_row(p, &columns, args))
        .collect::<CliResult<_>>()?;

    let sink: Box<dyn Write> = match &args.output {
        Some(path) => Box::new(File::create(path).map_err(|e| io_err(path, e))?),
        None => Box::new(io::stdout().lock()),
    };
    let out_name = args
        .output
        .as_deref()
        .unwrap_or(Path::new("<stdout>"))
        .to_path_buf();
    let mut w = csv::Writer::from_writer(sink);
    let header: Vec<&str> = std::iter::once("p")
        .chain(columns.iter().map(|c| c.header()))
        .collect();
    w.write_record(&header).map_err(|e| io_err(&out_name, e))?;
    for (&p, (values, _)) in grid.iter().zip(&rows) {
        let record: Vec<String> = std::iter::once(p)
            .chain(values.iter().copied())
            .map(format_number)
            .collect();
        w.write_record(&record).map_err(|e| io_err(&out_name, e))?;
    }
    w.flush().map_err(|e| io_err(&out_name, e))?;

    if let Some(path) = &args.search.trace {
        let traces: Vec<&SweepTrace> = rows.iter().map(|(_, t)| t).collect();
        write_json(path, &traces)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct OptimizeSummary<'a> {
    fidelity: f64,
    per_restart_fidelities: &'a [f64],
    rounds_used: usize,
    encoder_isometry_defect: f64,
    encoder_kraus_count: usize,
    decoder_kraus_count: usize,
}

fn cmd_optimize(args: &OptimizeArgs) -> CliResult<()> {
    let t = load_noise(&args.noise)?;
    let seeds = args
        .seed_code
        .iter()
        .map(|s| load_code(s))
        .collect::<CliResult<Vec<_>>>()?;
    let cfg = args.search.config();
    let mut result: CodeSearchResult = optimize_code_from(t.as_ref(), args.search.d0, &cfg, &seeds)?;
    if let Some(path) = &args.search.trace {
        write_json(path, &result.traces)?;
    }
    if let Some(path) = &args.output {
        // traces go to their own file
        result.traces = None;
        write_json(path, &result)?;
    }
    let summary = OptimizeSummary {
        fidelity: result.fidelity,
        per_restart_fidelities: &result.per_restart_fidelities,
        rounds_used: result.rounds_used,
        encoder_isometry_defect: result.encoder_isometry_defect,
        encoder_kraus_count: result.best.encoder.kraus_count(),
        decoder_kraus_count: result.best.decoder.kraus_count(),
    };
    let text = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Input(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn cmd_diagnose(args: &DiagnoseArgs) -> CliResult<()> {
    let code = load_code(&args.code.code)?;
    let cfg = DiagnosticConfig {
        inner: IterationConfig {
            gain_threshold: args.gain_threshold,
            max_steps: args.max_steps,
            ..IterationConfig::default()
        },
        restarts: args.restarts,
        tolerance: args.tolerance,
        seed: args.seed,
        ..DiagnosticConfig::default()
    };
    let report = syndrome_diagnostic(&code.encoder, &code.decoder, &cfg)?;
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Input(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn init_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("QECSS_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::Input(format!("QECSS_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Input(e.to_string()))
}

fn run(cli: Cli) -> CliResult<()> {
    init_threads()?;
    match &cli.command {
        Command::Fidelity { code, noise } => cmd_fidelity(code, noise),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Optimize(args) => cmd_optimize(args),
        Command::Diagnose(args) => cmd_diagnose(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qecss: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
