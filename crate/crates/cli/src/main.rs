use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qrecover::campaign::{self, BosonicConfig, CampaignConfig, Format, Report, Suite};
use qrecover::Error;

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

/// Seeded verification campaigns for entropy-gain, recoverability and
/// information-gain inequalities.
#[derive(Parser, Debug)]
#[command(name = "qrecover", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one suite, or `all`, and write a report.
    Verify(VerifyArgs),
    #[command(subcommand)]
    Sweep(SweepCommand),
    #[command(subcommand)]
    Report(ReportCommand),
}

#[derive(Subcommand, Debug)]
enum SweepCommand {
    /// Bosonic loss/amplifier grid as CSV.
    Bosonic(SweepArgs),
}

#[derive(Subcommand, Debug)]
enum ReportCommand {
    /// Combine JSON reports into one.
    Merge(MergeArgs),
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// entropy-gain, recovery, info-gain, info-gain-qsi, disturbance, cpdp, bosonic or all
    suite: String,
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Local dimension pool, e.g. `2,3`.
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// Replace every check's tolerance.
    #[arg(long, allow_hyphen_values = true)]
    tol: Option<f64>,
    #[arg(long)]
    quad_nodes: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    quad_halfwidth: Option<f64>,
    /// Rerun a single trial.
    #[arg(long)]
    trial: Option<u64>,
    #[command(flatten)]
    bosonic: BosonicArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args, Debug)]
struct BosonicArgs {
    #[arg(long)]
    n_max: Option<usize>,
    /// Fixed guard band; by default the smallest passing guard is chosen.
    #[arg(long)]
    guard: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    trunc_tol: Option<f64>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    bosonic: BosonicArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MergeArgs {
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<String>,
}

fn load_config(path: Option<&Path>) -> Result<CampaignConfig, Error> {
    match path {
        Some(p) => CampaignConfig::from_json(&fs::read_to_string(p)?),
        None => Ok(CampaignConfig::default()),
    }
}

fn apply_bosonic(b: &mut BosonicConfig, args: &BosonicArgs) {
    if let Some(n) = args.n_max {
        b.n_max = n;
    }
    if let Some(g) = args.guard {
        b.guard = Some(g);
    }
    if let Some(t) = args.trunc_tol {
        b.trunc_tol = t;
    }
}

fn build_config(args: &VerifyArgs) -> Result<CampaignConfig, Error> {
    let mut cfg = load_config(args.config.as_deref())?;
    cfg.suites = match args.suite.as_str() {
        "all" => Suite::ALL.to_vec(),
        s => vec![s.parse()?],
    };
    if let Some(s) = args.seed {
        cfg.master_seed = s;
    }
    if args.trials.is_some() {
        cfg.trials = args.trials;
    }
    if args.dims.is_some() {
        cfg.dims = args.dims.clone();
    }
    if args.tol.is_some() {
        cfg.tol = args.tol;
    }
    if let Some(n) = args.quad_nodes {
        cfg.quadrature.nodes = n;
    }
    if let Some(h) = args.quad_halfwidth {
        cfg.quadrature.half_width = h;
    }
    if args.trial.is_some() {
        cfg.only_trial = args.trial;
    }
    apply_bosonic(&mut cfg.bosonic, &args.bosonic);
    if args.out.is_some() {
        cfg.out = args.out.clone();
    }
    if let Some(f) = &args.format {
        cfg.format = f.parse()?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn render(report: &Report, format: Format) -> Result<String, Error> {
    match format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    }
}

fn print_summary(report: &Report) {
    for s in &report.summary {
        eprintln!(
            "{:<14} {:>5}/{:<5} passed  worst slack {} ({}, trial {})",
            s.suite.name(),
            s.passed,
            s.checks,
            campaign::float17(s.worst_slack_bits),
            s.worst_check,
            s.worst_trial.map_or("fixed".into(), |t| t.to_string()),
        );
    }
}

fn verify(args: &VerifyArgs) -> Result<u8, Error> {
    let cfg = build_config(args)?;
    let (report, runs) = campaign::run(&cfg)?;
    emit(&render(&report, cfg.format)?, cfg.out.as_deref())?;
    print_summary(&report);
    for run in &runs {
        eprintln!("{:<14} wall time {:.2}s", run.suite.name(), run.wall_time.as_secs_f64());
    }
    let failures: Vec<_> = report.failures().collect();
    if failures.is_empty() {
        return Ok(0);
    }
    eprintln!("{} check(s) failed; reproducers:", failures.len());
    for row in failures.iter().take(10) {
        eprintln!("  {}", row.reproducer(&cfg));
    }
    Ok(EXIT_FAIL)
}

fn sweep(args: &SweepArgs) -> Result<u8, Error> {
    let mut cfg = load_config(args.config.as_deref())?;
    apply_bosonic(&mut cfg.bosonic, &args.bosonic);
    cfg.suites = vec![Suite::Bosonic];
    cfg.validate()?;
    let rows = campaign::bosonic_sweep(&cfg.bosonic)?;
    emit(&campaign::sweep_csv(&rows)?, args.out.as_deref())?;
    let failed: Vec<_> = rows.iter().filter(|r| !r.holds).collect();
    for r in &failed {
        eprintln!("failed: {} {} guard {} slack {}", r.kind, r.parameter, r.guard, campaign::float17(r.slack));
    }
    Ok(if failed.is_empty() { 0 } else { EXIT_FAIL })
}

fn merge(args: &MergeArgs) -> Result<u8, Error> {
    let format: Format = args.format.as_deref().unwrap_or("json").parse()?;
    let mut reports = Vec::with_capacity(args.inputs.len());
    for p in &args.inputs {
        let text = fs::read_to_string(p)?;
        reports.push(Report::from_json(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", p.display())))?);
    }
    let merged = campaign::merge(reports)?;
    emit(&render(&merged, format)?, args.out.as_deref())?;
    print_summary(&merged);
    Ok(if merged.all_pass { 0 } else { EXIT_FAIL })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Verify(a) => verify(a),
        Command::Sweep(SweepCommand::Bosonic(a)) => sweep(a),
        Command::Report(ReportCommand::Merge(a)) => merge(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
