use std::{
    fs,
    io::{self, Write},
    path::{Path, PathBuf},
    process::ExitCode,
};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hopfield_core::{
    builtin,
    criterion::{decide, DecideOptions},
    envelope::{build_envelopes, default_x_max, hat_start, iterate_bound, DEFAULT_Q_CAP},
    matrix::{analyze, classify, fmt_sig, positive_null_vector, SquareMatrix},
    model::{build_criterion_matrices, load_model_file, summarize_coefficients, CriterionMatrix, ModelSpec},
    simulator::{
        run, InitialCondition, RunOptions, DEFAULT_CONV_TOL, DEFAULT_CONV_WINDOW, DEFAULT_STEPS,
    },
    Tolerances, DEFAULT_HORIZON,
};

/// Global attractivity checks for discrete-time Hopfield networks with
/// leakage, time-varying and distributed delays.
#[derive(Debug, Parser)]
#[command(name = "hopfield-attract", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full report on a matrix file: classification, minors, null vector
    Analyze(MatrixArgs),
    /// Check hypotheses and decide attractivity for a model
    Check(CheckArgs),
    /// Run the bound iteration and emit its trace
    Bound(BoundArgs),
    /// Simulate a model and emit the trajectory
    Simulate(SimulateArgs),
    /// Check and simulate a bundled example, comparing with its reference matrix
    Example(ExampleArgs),
    /// Classify a matrix file
    Matrix(MatrixArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Report,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Report,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RegimeArg {
    /// Limsup matrix, start from the activation range bounds
    Hat,
    /// Sup matrix, start from --start-vector or the null vector
    Plus,
}

#[derive(Debug, Args)]
struct MatrixArgs {
    /// Text file: the order n, then n rows (fractions like 2/3 allowed)
    file: PathBuf,
    /// Output format
    #[arg(long, value_enum, default_value = "report")]
    format: ReportFormat,
    /// Write output here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Model config file, or a bundled example name (example-4.1, example-4.2)
    model: String,
    /// Sampling horizon for hypothesis checks and coefficient sups
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    horizon: u64,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Equilibrium x* of an autonomous model, comma separated; the model is shifted to it
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    equilibrium: Option<Vec<f64>>,
    /// Start of the sup-regime bound iteration, comma separated
    #[arg(long, value_delimiter = ',')]
    start_vector: Option<Vec<f64>>,
    /// Output format
    #[arg(long, value_enum, default_value = "report")]
    format: ReportFormat,
    /// Write output here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BoundArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Which iteration to run
    #[arg(long, value_enum, default_value = "hat")]
    regime: RegimeArg,
    /// Start vector for the sup regime, comma separated [default: null vector of M_plus]
    #[arg(long, value_delimiter = ',')]
    start_vector: Option<Vec<f64>>,
    /// Maximum number of iterations
    #[arg(long, default_value_t = DEFAULT_Q_CAP)]
    q_cap: u64,
    /// Stop when successive iterates differ by less than this
    #[arg(long, default_value = "1e-9")]
    tol_fix: f64,
    /// Output format
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Write output here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimArgs {
    /// Number of steps
    #[arg(long, default_value_t = DEFAULT_STEPS)]
    steps: u64,
    /// Bound on the dropped tail of each distributed-delay sum
    #[arg(long, default_value = "1e-12")]
    eps_trunc: f64,
    /// Convergence threshold on the sup norm
    #[arg(long, default_value_t = DEFAULT_CONV_TOL)]
    conv_tol: f64,
    /// Steps the sup norm must stay below --conv-tol
    #[arg(long, default_value_t = DEFAULT_CONV_WINDOW)]
    conv_window: u64,
    /// Constant initial history, comma separated [default: the bundled history for examples, ones otherwise]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    initial: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    sim: SimArgs,
    /// Output format
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Write output here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExampleArgs {
    /// Bundled example name (example-4.1 or example-4.2)
    name: String,
    /// Sampling horizon for hypothesis checks and coefficient sups
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    horizon: u64,
    #[command(flatten)]
    sim: SimArgs,
    /// Write the trajectory CSV here
    #[arg(long)]
    output: Option<PathBuf>,
}

fn sink(output: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match output {
        Some(p) => Box::new(io::BufWriter::new(
            fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

fn load(name: &str) -> Result<(ModelSpec, bool)> {
    let path = Path::new(name);
    if path.exists() {
        let spec = load_model_file(path).with_context(|| format!("loading {name}"))?;
        return Ok((spec, false));
    }
    match builtin::load(name) {
        Ok(spec) => Ok((spec, true)),
        Err(hopfield_core::Error::UnknownBuiltin(_)) => bail!(
            "{name} is neither a readable file nor a bundled example ({})",
            builtin::names().join(", ")
        ),
        Err(e) => Err(e.into()),
    }
}

fn read_matrix(path: &Path) -> Result<SquareMatrix> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    SquareMatrix::parse_text(&text).with_context(|| format!("parsing {}", path.display()))
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        bail!("--{name} must be positive, got {v}");
    }
    Ok(())
}

fn initial_for(spec: &ModelSpec, builtin: bool, initial: &Option<Vec<f64>>) -> Result<InitialCondition> {
    Ok(match initial {
        Some(v) => {
            if v.len() != spec.n {
                bail!("--initial needs {} values, got {}", spec.n, v.len());
            }
            InitialCondition::constant(v.clone(), 0)
        }
        None if builtin && spec.n == 3 => builtin::initial_history(),
        None => InitialCondition::constant(vec![1.0; spec.n], 0),
    })
}

fn run_options(sim: &SimArgs, spec: &ModelSpec, horizon: u64) -> Result<RunOptions> {
    positive("eps-trunc", sim.eps_trunc)?;
    positive("conv-tol", sim.conv_tol)?;
    if sim.steps == 0 {
        bail!("--steps must be at least 1");
    }
    let summary = summarize_coefficients(spec, horizon, &Tolerances::default()).ok();
    Ok(RunOptions {
        steps: sim.steps,
        eps_trunc: sim.eps_trunc,
        conv_tol: sim.conv_tol,
        conv_window: sim.conv_window,
        stop_at_convergence: false,
        summary,
    })
}

fn cmd_matrix(args: &MatrixArgs, full: bool) -> Result<u8> {
    let m = read_matrix(&args.file)?;
    let tol = Tolerances::default();
    let mut out = sink(&args.output)?;
    if full {
        let report = analyze(&m, tol.minor, tol.minor);
        match args.format {
            ReportFormat::Json => writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?,
            ReportFormat::Report => write!(out, "{report}")?,
        }
    } else {
        let c = classify(&m, tol.minor);
        match args.format {
            ReportFormat::Json => writeln!(out, "{}", serde_json::to_string_pretty(&c)?)?,
            ReportFormat::Report => writeln!(out, "{}", c.describe())?,
        }
    }
    out.flush()?;
    Ok(0)
}

fn cmd_check(args: &CheckArgs) -> Result<u8> {
    let (spec, _) = load(&args.model.model)?;
    let opts = DecideOptions {
        horizon: args.model.horizon,
        equilibrium: args.equilibrium.clone(),
        start_vector: args.start_vector.clone(),
        ..DecideOptions::default()
    };
    let report = decide(&spec, &opts)?;
    let mut out = sink(&args.output)?;
    match args.format {
        ReportFormat::Json => writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?,
        ReportFormat::Report => write!(out, "{report}")?,
    }
    out.flush()?;
    Ok(report.exit_code() as u8)
}

fn cmd_bound(args: &BoundArgs) -> Result<u8> {
    positive("tol-fix", args.tol_fix)?;
    let (spec, _) = load(&args.model.model)?;
    let tol = Tolerances::default();
    let summary = summarize_coefficients(&spec, args.model.horizon, &tol)?;
    let (regime, start) = match args.regime {
        RegimeArg::Hat => {
            if args.start_vector.is_some() {
                bail!("--start-vector applies to --regime plus only");
            }
            (CriterionMatrix::Hat, hat_start(&spec, &summary)?)
        }
        RegimeArg::Plus => {
            let start = match &args.start_vector {
                Some(s) => s.clone(),
                None => {
                    let (mp, _) = build_criterion_matrices(&summary, &spec.bounds());
                    positive_null_vector(&mp, tol.minor)
                        .context("M_plus has no positive null vector; pass --start-vector")?
                        .d
                }
            };
            (CriterionMatrix::Plus, start)
        }
    };
    let env = build_envelopes(&spec, default_x_max(&start))?;
    let it = iterate_bound(&spec, &summary, &env, regime, &start, args.q_cap, args.tol_fix)?;
    let mut out = sink(&args.output)?;
    match args.format {
        Format::Csv => it.write_csv(&mut out)?,
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&it)?)?,
        Format::Report => {
            writeln!(out, "iterations: {}", it.q_max)?;
            writeln!(out, "converged:  {}", it.converged)?;
            writeln!(out, "S:          {}", fmt_vec(&it.converged_to))?;
            writeln!(out, "residual:   {:e}", it.residual)?;
        }
    }
    out.flush()?;
    Ok(0)
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| fmt_sig(*x, 6)).collect();
    format!("({})", parts.join(", "))
}

fn write_sim_summary(out: &mut dyn Write, r: &hopfield_core::simulator::SimulationReport) -> Result<()> {
    writeln!(out, "steps:        {}", r.trajectory.len() - 1)?;
    writeln!(out, "final norm:   {}", fmt_sig(r.final_norm(), 6))?;
    match r.converged_at {
        Some(m) => writeln!(out, "converged at: m = {m} (window {}, tol {:e})", r.conv_window, r.conv_tol)?,
        None => writeln!(out, "converged at: not within the run (tol {:e})", r.conv_tol)?,
    }
    let max_tail = r.truncation_budget.iter().cloned().fold(0.0, f64::max);
    writeln!(out, "max tail err: {max_tail:e}")?;
    let b = &r.bounded_check;
    match b.bound {
        Some(bound) => writeln!(
            out,
            "boundedness:  max norm {} vs bound {}{}",
            fmt_sig(b.max_norm, 6),
            fmt_sig(bound, 6),
            if b.within == Some(false) { " (EXCEEDED)" } else { "" }
        )?,
        None => writeln!(out, "boundedness:  max norm {} (no a priori bound)", fmt_sig(b.max_norm, 6))?,
    }
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<u8> {
    let (spec, builtin) = load(&args.model.model)?;
    let opts = run_options(&args.sim, &spec, args.model.horizon)?;
    let init = initial_for(&spec, builtin, &args.sim.initial)?;
    let report = run(&spec, init, &opts)?;
    let mut out = sink(&args.output)?;
    match args.format {
        Format::Csv => report.write_csv(&mut out)?,
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?,
        Format::Report => write_sim_summary(&mut out, &report)?,
    }
    out.flush()?;
    Ok(0)
}

fn cmd_example(args: &ExampleArgs) -> Result<u8> {
    let spec = builtin::load(&args.name)?;
    let opts = DecideOptions {
        horizon: args.horizon,
        ..DecideOptions::default()
    };
    let report = decide(&spec, &opts)?;
    let mut out = io::BufWriter::new(io::stdout().lock());
    write!(out, "{report}")?;
    if let Some(r) = &spec.reference {
        let (name, computed) = match r.matrix {
            CriterionMatrix::Plus => ("M_plus", &report.m_plus.matrix),
            CriterionMatrix::Hat => ("M_hat", &report.m_hat.matrix),
        };
        writeln!(out)?;
        writeln!(out, "{name}: reference | computed")?;
        for i in 0..computed.order() {
            let row = |m: &SquareMatrix| {
                (0..m.order())
                    .map(|j| format!("{:>10}", fmt_sig(m[(i, j)], 6)))
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            writeln!(out, "[{}] | [{}]", row(&r.rows), row(computed))?;
        }
        writeln!(out, "max entry difference: {:e}", computed.max_abs_diff(&r.rows))?;
        if let Some(v) = &r.verdict {
            writeln!(out, "reference verdict: {v}")?;
        }
    }
    let run_opts = run_options(&args.sim, &spec, args.horizon)?;
    let init = initial_for(&spec, true, &args.sim.initial)?;
    let sim = run(&spec, init, &run_opts)?;
    writeln!(out)?;
    writeln!(out, "simulation:")?;
    write_sim_summary(&mut out, &sim)?;
    out.flush()?;
    if let Some(p) = &args.output {
        let mut f = sink(&Some(p.clone()))?;
        sim.write_csv(&mut f)?;
        f.flush()?;
    }
    Ok(report.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze(a) => cmd_matrix(a, true),
        Command::Matrix(a) => cmd_matrix(a, false),
        Command::Check(a) => cmd_check(a),
        Command::Bound(a) => cmd_bound(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Example(a) => cmd_example(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
