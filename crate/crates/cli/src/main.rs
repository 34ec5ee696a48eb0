//! `lagfib`: runs verification suites over the model catalog and writes a
//! JSON report, a table, and raster/monodromy artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use lagfib::suite::{parse_suites, run, RunConfig, RunOutput};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Debug, Parser)]
#[command(
    name = "lagfib",
    version,
    about = "Numerical checks for local Lagrangian fibration models"
)]
struct Cli {
    /// Catalog model name, or `all`.
    #[arg(long)]
    model: Option<String>,
    /// Comma separated: lagrangian, involution, census, monodromy, amoeba, grading, all.
    #[arg(long)]
    suite: Option<String>,
    /// Sample count for every selected suite.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// `STRUCTURAL[,NUMERIC]` thresholds.
    #[arg(long)]
    tol: Option<String>,
    /// Phase-space box as `lo:hi` per coordinate, comma separated.
    #[arg(long)]
    region: Option<String>,
    /// Output directory for the report and artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads.
    #[arg(long, env = "LAGFIB_JOBS")]
    jobs: Option<usize>,
    /// Side of the amoeba raster.
    #[arg(long)]
    grid: Option<usize>,
    /// Thin-leg cut-off radius².
    #[arg(long)]
    eps: Option<f64>,
    /// Thin-leg pinch threshold.
    #[arg(long)]
    m: Option<f64>,
    /// `key=value` file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

struct Settings {
    config: RunConfig,
    out: Option<PathBuf>,
    format: Format,
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let settings = match settings(cli) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("lagfib: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(jobs) = settings.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("lagfib: worker pool: {e}");
            return ExitCode::from(2);
        }
    }
    let output = match run(&settings.config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("lagfib: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = emit(&settings, &output) {
        eprintln!("lagfib: {e}");
        return ExitCode::from(2);
    }
    if output.report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn settings(cli: Cli) -> Result<Settings, String> {
    let mut kv = match &cli.config {
        Some(path) => read_config(path)?,
        None => BTreeMap::new(),
    };
    let mut flag = |key: &str, v: Option<String>| {
        if let Some(v) = v {
            kv.insert(key.to_string(), v);
        }
    };
    flag("model", cli.model);
    flag("suite", cli.suite);
    flag("samples", cli.samples.map(|v| v.to_string()));
    flag("seed", cli.seed.map(|v| v.to_string()));
    flag("tol", cli.tol);
    flag("region", cli.region);
    flag("out", cli.out.map(|p| p.display().to_string()));
    flag(
        "format",
        cli.format.map(|f| format!("{f:?}").to_lowercase()),
    );
    flag("jobs", cli.jobs.map(|v| v.to_string()));
    flag("grid", cli.grid.map(|v| v.to_string()));
    flag("eps", cli.eps.map(|v| v.to_string()));
    flag("m", cli.m.map(|v| v.to_string()));

    let mut config = RunConfig::default();
    let mut out = None;
    let mut format = Format::Table;
    let mut jobs = None;
    for (key, value) in &kv {
        match key.as_str() {
            "model" => config.model = value.clone(),
            "suite" => config.suites = parse_suites(value).map_err(|e| e.to_string())?,
            "samples" => config.samples = Some(number(key, value)?),
            "seed" => config.seed = number(key, value)?,
            "tol" => {
                let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                match parts.as_slice() {
                    [s] => config.tol_structural = number(key, s)?,
                    [s, n] => {
                        config.tol_structural = number(key, s)?;
                        config.tol_numeric = number(key, n)?;
                    }
                    _ => return Err(format!("tol: expected STRUCTURAL[,NUMERIC], got {value:?}")),
                }
            }
            "region" => config.region = Some(region(value)?),
            "out" => out = Some(PathBuf::from(value)),
            "format" => {
                format = Format::from_str(value, true)
                    .map_err(|_| format!("format: unknown {value:?}"))?;
            }
            "jobs" => jobs = Some(number(key, value)?),
            "grid" => config.grid = number(key, value)?,
            "eps" => config.params.thin.eps = number(key, value)?,
            "m" => config.params.thin.m = number(key, value)?,
            other => return Err(format!("unknown configuration key {other:?}")),
        }
    }
    if jobs == Some(0) {
        return Err("jobs must be at least 1".into());
    }
    config.validate().map_err(|e| e.to_string())?;
    Ok(Settings {
        config,
        out,
        format,
        jobs,
    })
}

fn read_config(path: &Path) -> Result<BTreeMap<String, String>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut kv = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("{}:{}: expected key=value", path.display(), i + 1))?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(kv)
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .trim()
        .parse()
        .map_err(|_| format!("{key}: cannot parse {value:?}"))
}

fn region(value: &str) -> Result<Vec<(f64, f64)>, String> {
    value
        .split(',')
        .map(|part| {
            let (lo, hi) = part
                .split_once(':')
                .ok_or_else(|| format!("region: expected lo:hi, got {part:?}"))?;
            let (lo, hi): (f64, f64) = (number("region", lo)?, number("region", hi)?);
            if lo < hi {
                Ok((lo, hi))
            } else {
                Err(format!("region: empty interval {part:?}"))
            }
        })
        .collect()
}

fn emit(settings: &Settings, output: &RunOutput) -> Result<(), String> {
    let report = &output.report;
    let Some(dir) = &settings.out else {
        match settings.format {
            Format::Json => println!("{}", report.to_json()),
            Format::Table => print!("{}", report.to_table()),
        }
        return Ok(());
    };
    fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let write = |name: &str, body: &str| {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| format!("{}: {e}", path.display()))
    };
    match settings.format {
        Format::Json => write("report.json", &report.to_json())?,
        Format::Table => write("report.txt", &report.to_table())?,
    }
    if let Some(raster) = &output.amoeba {
        write("amoeba.pgm", &raster.to_pgm())?;
        write("amoeba_contour.csv", &raster.contour_csv())?;
    }
    if let Some(m) = &output.monodromy {
        let body = serde_json::to_string_pretty(m).map_err(|e| e.to_string())?;
        write("monodromy.json", &body)?;
    }
    print!("{}", report.to_table());
    Ok(())
}
