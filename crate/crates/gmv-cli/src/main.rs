mod io;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gmv_core::asymptotics::{
    alpha_plus_limit, alpha_star_limit, rel_loss_gse_limit, rel_loss_traditional,
    rel_loss_traditional_super, variance_ratio_traditional, LimitInputs,
};
use gmv_core::backtest::{run_backtest, BacktestConfig};
use gmv_core::estimators::{bona_fide_shrinkage, TargetPortfolio, WeightVector};
use gmv_core::simulation::{run_monte_carlo, SimulationConfig};
use gmv_core::{Error, Result};
use nalgebra::DVector;

use crate::io::{read_returns_csv, write_csv, write_json, ArtifactMeta};

/// Shrinkage estimation of global minimum variance portfolios: estimation on
/// observed returns, Monte Carlo studies, rolling backtests and asymptotic
/// theory curves.
#[derive(Parser)]
#[command(name = "gmv", version)]
struct Cli {
    /// Master seed; overrides the seed in a config file. Required for
    /// simulate and backtest (there is no wall-clock default).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory receiving all output artifacts.
    #[arg(long, global = true, default_value = ".")]
    output_dir: PathBuf,

    /// Worker threads for the simulation and backtest engines (0 = auto).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// TOML configuration file (simulate and backtest).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate shrinkage GMV weights from a returns CSV.
    Estimate {
        /// Returns CSV: header row of asset ids, one row per date.
        returns: PathBuf,
        /// Explicit target weights (comma-separated, summing to 1);
        /// defaults to the naive equally weighted portfolio.
        #[arg(long)]
        target: Option<String>,
    },
    /// Run a Monte Carlo study from a TOML config.
    Simulate,
    /// Rolling-window backtest of random sub-portfolios on a returns CSV.
    Backtest { returns: PathBuf },
    /// Tabulate the asymptotic theory curves over a c-grid.
    Curves {
        /// Comma-separated concentration ratios; c = 1 is excluded.
        #[arg(long)]
        grid: String,
        /// Limiting relative loss of the target portfolio.
        #[arg(long, default_value_t = 1.0)]
        r_b: f64,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Domain(_) | Error::Regime(_) => 2,
        Error::Data(_) | Error::Dimension(_) | Error::NonFinite(_) | Error::NotSymmetric => 3,
        Error::Degenerate(_) => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let code = exit_code_for(&err);
            let payload = serde_json::json!({
                "error": err.to_string(),
                "exit_code": code,
            });
            eprintln!("{payload}");
            ExitCode::from(code)
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    if cli.threads > 0 {
        // ignore the error if a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    fs::create_dir_all(&cli.output_dir)
        .map_err(|e| Error::Data(format!("cannot create output dir: {e}")))?;
    match &cli.command {
        Command::Estimate { returns, target } => cmd_estimate(cli, returns, target.as_deref()),
        Command::Simulate => cmd_simulate(cli),
        Command::Backtest { returns } => cmd_backtest(cli, returns),
        Command::Curves { grid, r_b } => cmd_curves(cli, grid, *r_b),
    }
}

fn load_config_text(cli: &Cli, command: &str) -> Result<String> {
    let path = cli.config.as_ref().ok_or_else(|| {
        Error::Config(format!("{command} requires --config <file.toml>"))
    })?;
    fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

/// Parse a TOML config, letting --seed supply or override the `seed` field
/// before deserialization so that configs without a seed still work when the
/// flag is given.
fn parse_config<T: serde::de::DeserializeOwned>(
    text: &str,
    seed_override: Option<u64>,
    what: &str,
) -> Result<T> {
    let mut table: toml::Table = toml::from_str(text)
        .map_err(|e| Error::Config(format!("invalid {what} config: {e}")))?;
    if let Some(seed) = seed_override {
        table.insert("seed".into(), toml::Value::Integer(seed as i64));
    }
    toml::Value::Table(table)
        .try_into()
        .map_err(|e| Error::Config(format!("invalid {what} config: {e}")))
}

fn cmd_estimate(cli: &Cli, returns_path: &Path, target_flag: Option<&str>) -> Result<()> {
    let ingested = read_returns_csv(returns_path)?;
    let p = ingested.returns.p();
    let n = ingested.returns.n();
    let target = match target_flag {
        None => TargetPortfolio::naive(p),
        Some(spec) => {
            let weights: Vec<f64> = spec
                .split(',')
                .map(|t| {
                    t.trim().parse::<f64>().map_err(|_| {
                        Error::Config(format!("cannot parse target weight '{}'", t.trim()))
                    })
                })
                .collect::<Result<_>>()?;
            if weights.len() != p {
                return Err(Error::Config(format!(
                    "target has {} weights for {p} assets",
                    weights.len()
                )));
            }
            TargetPortfolio::new(
                WeightVector::new(DVector::from_column_slice(&weights))?,
                "custom",
            )
        }
    };
    let estimate = bona_fide_shrinkage(&ingested.returns, &target)?;
    let seed = cli.seed.unwrap_or(0);
    let mut material = fs::read(returns_path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", returns_path.display())))?;
    material.extend_from_slice(format!("|target={target_flag:?}").as_bytes());
    let meta = ArtifactMeta::new(seed, &material);

    write_csv(
        &cli.output_dir.join("weights.csv"),
        &meta,
        "asset,weight",
        ingested
            .assets
            .iter()
            .zip(estimate.weights.as_vector().iter())
            .map(|(a, w)| format!("{a},{w}")),
    )?;
    write_json(
        &cli.output_dir.join("estimate.json"),
        &serde_json::json!({
            "version": env!("CARGO_PKG_VERSION"),
            "seed": seed,
            "config_hash": meta.config_hash,
            "p": p,
            "n": n,
            "date_range": ingested.dates.as_ref().map(|d| {
                serde_json::json!({ "first": d.first(), "last": d.last() })
            }),
            "c_ratio": estimate.c_ratio,
            "regime": format!("{:?}", estimate.regime),
            "target": target.label(),
            "alpha_hat": estimate.alpha_hat,
            "alpha_raw": estimate.alpha_raw,
            "r_hat_b": estimate.r_hat_b,
            "weights": estimate.weights.as_vector().iter().cloned().collect::<Vec<f64>>(),
        }),
    )
}

fn cmd_simulate(cli: &Cli) -> Result<()> {
    let text = load_config_text(cli, "simulate")?;
    let config: SimulationConfig = parse_config(&text, cli.seed, "simulate")?;
    let canonical = toml::to_string(&config)
        .map_err(|e| Error::Config(format!("cannot canonicalize config: {e}")))?;
    let meta = ArtifactMeta::new(config.seed, canonical.as_bytes());
    let report = run_monte_carlo(&config)?;

    write_csv(
        &cli.output_dir.join("summary.csv"),
        &meta,
        "estimator,p,n,mean_loss",
        report.cells.iter().flat_map(|cell| {
            cell.results
                .iter()
                .map(move |r| format!("{},{},{},{}", r.estimator.label(), cell.p, cell.n, r.mean_loss))
        }),
    )?;
    for cell in &report.cells {
        write_csv(
            &cli.output_dir.join(format!("losses_p{}_n{}.csv", cell.p, cell.n)),
            &meta,
            "estimator,repetition,relative_loss",
            cell.results.iter().flat_map(|r| {
                r.loss_samples
                    .iter()
                    .enumerate()
                    .map(move |(rep, loss)| format!("{},{rep},{loss}", r.estimator.label()))
            }),
        )?;
        write_csv(
            &cli.output_dir.join(format!("ecdf_p{}_n{}.csv", cell.p, cell.n)),
            &meta,
            "estimator,loss_value,cdf",
            cell.results.iter().flat_map(|r| {
                r.ecdf
                    .points()
                    .into_iter()
                    .map(move |(v, f)| format!("{},{v},{f}", r.estimator.label()))
            }),
        )?;
    }
    Ok(())
}

fn cmd_backtest(cli: &Cli, returns_path: &Path) -> Result<()> {
    let text = load_config_text(cli, "backtest")?;
    let config: BacktestConfig = parse_config(&text, cli.seed, "backtest")?;
    let ingested = read_returns_csv(returns_path)?;
    let canonical = toml::to_string(&config)
        .map_err(|e| Error::Config(format!("cannot canonicalize config: {e}")))?;
    let meta = ArtifactMeta::new(config.seed, canonical.as_bytes());
    let report = run_backtest(&ingested.returns, &config)?;

    write_csv(
        &cli.output_dir.join("variance.csv"),
        &meta,
        "estimator,draw_index,value",
        report.per_estimator.iter().flat_map(|r| {
            r.draws
                .iter()
                .map(move |d| format!("{},{},{}", r.estimator.label(), d.draw_index, d.variance))
        }),
    )?;
    write_csv(
        &cli.output_dir.join("sharpe.csv"),
        &meta,
        "estimator,draw_index,value",
        report.per_estimator.iter().flat_map(|r| {
            r.draws
                .iter()
                .map(move |d| format!("{},{},{}", r.estimator.label(), d.draw_index, d.sharpe))
        }),
    )?;
    write_csv(
        &cli.output_dir.join("ecdf_variance.csv"),
        &meta,
        "estimator,value,cdf",
        report.per_estimator.iter().flat_map(|r| {
            r.variance_ecdf
                .points()
                .into_iter()
                .map(move |(v, f)| format!("{},{v},{f}", r.estimator.label()))
        }),
    )?;
    write_csv(
        &cli.output_dir.join("ecdf_sharpe.csv"),
        &meta,
        "estimator,value,cdf",
        report.per_estimator.iter().flat_map(|r| {
            r.sharpe_ecdf
                .iter()
                .flat_map(|e| e.points())
                .map(move |(v, f)| format!("{},{v},{f}", r.estimator.label()))
                .collect::<Vec<_>>()
        }),
    )?;
    Ok(())
}

fn cmd_curves(cli: &Cli, grid: &str, r_b: f64) -> Result<()> {
    let cs: Vec<f64> = grid
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("cannot parse grid value '{}'", t.trim())))
        })
        .collect::<Result<_>>()?;
    if cs.is_empty() {
        return Err(Error::Config("grid must contain at least one value".into()));
    }
    for &c in &cs {
        if (c - 1.0).abs() < 1e-9 {
            return Err(Error::Config(
                "the curves are singular at c = 1; remove it from the grid".into(),
            ));
        }
    }
    let seed = cli.seed.unwrap_or(0);
    let meta = ArtifactMeta::new(seed, format!("curves|grid={grid}|r_b={r_b}").as_bytes());
    let mut rows = Vec::with_capacity(cs.len());
    for &c in &cs {
        let inputs = LimitInputs::new(c, r_b)?;
        let (alpha, trad) = if c < 1.0 {
            (alpha_star_limit(inputs)?, rel_loss_traditional(c)?)
        } else {
            (alpha_plus_limit(inputs)?, rel_loss_traditional_super(c)?)
        };
        let gse = rel_loss_gse_limit(inputs)?;
        let ratio = variance_ratio_traditional(c)?;
        rows.push(format!("{c},{alpha},{trad},{gse},{ratio}"));
    }
    write_csv(
        &cli.output_dir.join("curves.csv"),
        &meta,
        "c,alpha,rel_loss_traditional,rel_loss_gse,variance_ratio",
        rows,
    )
}
