use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use tractorlab::suite::{run_suite, Format, MetricSource, SuiteConfig};

#[derive(Parser)]
#[command(name = "tractorlab", version, about = "Conformal tractor calculus verification suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run verification suites on one metric.
    Run(RunArgs),
    /// List suites and check ids.
    List,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Text,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Catalog metric name or metric file path.
    #[arg(long)]
    metric: String,
    /// Catalog parameter, `key=value`.
    #[arg(long = "param", value_parser = parse_pair::<String>)]
    params: Vec<(String, String)>,
    /// Suite name or `all`; repeatable or comma separated.
    #[arg(long = "suite", value_delimiter = ',')]
    suites: Vec<String>,
    #[arg(long, default_value_t = 20)]
    points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `check-id=tol` or `suite=tol`.
    #[arg(long = "tol-override", value_parser = parse_pair::<f64>)]
    tol_overrides: Vec<(String, f64)>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
}

fn parse_pair<T: std::str::FromStr>(s: &str) -> Result<(String, T), String>
where
    T::Err: std::fmt::Display,
{
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let v = v.trim().parse::<T>().map_err(|e| format!("bad value in `{s}`: {e}"))?;
    Ok((k.trim().to_string(), v))
}

fn run(args: RunArgs) -> Result<bool, tractorlab::Error> {
    let params: BTreeMap<String, String> = args.params.into_iter().collect();
    let mut config = SuiteConfig::new(MetricSource::parse(&args.metric, params)?);
    config.suites = args.suites;
    config.points = args.points;
    config.seed = args.seed;
    config.tol_overrides = args.tol_overrides.into_iter().collect();
    let format = match args.format {
        FormatArg::Json => Format::Json,
        FormatArg::Text => Format::Text,
    };
    let report = run_suite(&config)?;
    match &args.report {
        Some(path) => {
            report.write(path, format)?;
            if format == Format::Json {
                eprint!("{}", report.to_text());
            }
        }
        None => print!("{}", report.render(format)),
    }
    Ok(report.all_passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for id in tractorlab::suite::check_ids() {
                println!("{id}");
            }
            ExitCode::SUCCESS
        }
        Command::Run(args) => match run(args) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(1),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
    }
}
