use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use racsim::harness::{self, BoundRequest, Format, MetricSeries, Scenario};
use racsim::{Error, Result};

#[derive(Parser)]
#[command(name = "racsim", version, about = "Massive random-access simulator with learned access class barring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its metric series.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        format: OutFormat,
    },
    /// Evaluate fixed barring factors and report the best one.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Levels "a,b,c" or "start:end:count", expanded over all classes.
        #[arg(long)]
        grid: String,
        #[arg(long, default_value_t = 1)]
        replicates: usize,
    },
    /// Evaluate the analytical bounds for a parameter file.
    Bound {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare run directories (each a group of series.json files).
    Compare {
        #[arg(required = true, num_args = 2..)]
        dirs: Vec<PathBuf>,
        /// Print the comparison as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn load_group(dir: &Path) -> Result<(String, Vec<MetricSeries>)> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json") && p.file_name().is_some_and(|n| n != "summary.json"))
        .collect();
    paths.sort();
    let series = paths.iter().map(|p| harness::load_series(p)).collect::<Result<Vec<_>>>()?;
    if series.is_empty() {
        return Err(Error::InvalidConfig(format!("{}: no series JSON files", dir.display())));
    }
    let name = dir.file_name().map_or_else(|| dir.display().to_string(), |n| n.to_string_lossy().into_owned());
    Ok((name, series))
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run { config, out, format } => {
            let scenario = Scenario::from_json_file(&config)?;
            let series = harness::run(&scenario)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            if matches!(format, OutFormat::Csv | OutFormat::Both) {
                harness::emit(&series, Format::Csv, &out.join("series.csv"))?;
            }
            if matches!(format, OutFormat::Json | OutFormat::Both) {
                harness::emit(&series, Format::Json, &out.join("series.json"))?;
            }
            let summary = json!({
                "scenario": scenario.name,
                "fingerprint": series.fingerprint,
                "slots": series.records.len(),
                "steady_state": harness::steady_state(&series).ok(),
            });
            let path = out.join("summary.json");
            std::fs::write(&path, serde_json::to_string_pretty(&summary)?).map_err(|e| Error::io(&path, e))?;
            print_json(&summary)
        }
        Command::Sweep { config, grid, replicates } => {
            let scenario = Scenario::from_json_file(&config)?;
            let grid = harness::parse_grid(&grid, scenario.network.n_classes())?;
            print_json(&harness::sweep_fixed_baseline(&scenario, &grid, replicates)?)
        }
        Command::Bound { config } => {
            let req: BoundRequest = read_json(&config)?;
            print_json(&harness::bound_report(&req)?)
        }
        Command::Compare { dirs, json } => {
            let groups = dirs.iter().map(|d| load_group(d)).collect::<Result<Vec<_>>>()?;
            let cmp = harness::compare(&groups)?;
            if json {
                print_json(&cmp)
            } else {
                print!("{}", harness::format_comparison(&cmp));
                Ok(())
            }
        }
    }
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    eprintln!("{}", json!({ "error": kind, "message": message }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim_end().to_string(), 2),
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), e.to_string(), 1),
    }
}
