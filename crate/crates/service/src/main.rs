use std::fs;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ras_core::experiment::{ExperimentFile, RunRequest, DEFAULT_SEED};
use ras_core::export::{export_csv, ExportTarget};
use ras_core::generation::ZoneTable;
use ras_core::model::CloudConfig;
use ras_core::quantification::{apportion, quantify, QuantBasis, QuantMode};
use ras_core::sample;
use ras_core::store::FileStore;
use ras_core::strategies::StrategyId;
use ras_service::{api, AppState};

#[derive(Debug, Parser)]
#[command(name = "ras", version, about = "Request assignment simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Serve the HTTP API.
    Serve {
        #[arg(long, env = "RAS_DATA_DIR", default_value = "ras-data")]
        data_dir: PathBuf,
        #[arg(long, env = "RAS_LISTEN", default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        /// JSON zone table replacing the bundled one.
        #[arg(long, env = "RAS_ZONE_TABLE")]
        zone_table: Option<PathBuf>,
    },
    /// Print the quantification table for a list of capacities.
    Quantify {
        /// Comma separated, e.g. 9,7,6,8
        capacities: String,
        #[arg(long, default_value = "exact")]
        mode: QuantMode,
        /// Also split this many requests over the percentages.
        #[arg(long)]
        n: Option<u64>,
    },
    /// Generate, plan, simulate and write the CSV exports for one config.
    Simulate {
        /// CloudConfig JSON; the bundled sample when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Comma separated strategy names; the defaults when omitted.
        #[arg(long, value_delimiter = ',')]
        strategies: Vec<StrategyId>,
        #[arg(long, default_value = "exact")]
        mode: QuantMode,
        #[arg(long, default_value = "load")]
        basis: QuantBasis,
        #[arg(long, env = "RAS_ZONE_TABLE")]
        zone_table: Option<PathBuf>,
        /// Output directory for the CSV files.
        #[arg(long, default_value = "ras-out")]
        out: PathBuf,
    },
    /// Print the bundled sample configuration as JSON.
    SampleConfig,
}

fn zones(path: Option<PathBuf>) -> Result<ZoneTable, String> {
    match path {
        Some(p) => ZoneTable::load(&p).map_err(|e| format!("{}: {e}", p.display())),
        None => Ok(ZoneTable::default()),
    }
}

fn serve(data_dir: PathBuf, listen: SocketAddr, zone_table: Option<PathBuf>) -> Result<(), String> {
    let store = FileStore::open(&data_dir).map_err(|e| format!("{}: {e}", data_dir.display()))?;
    let state = AppState::new(store, zones(zone_table)?);
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(listen).await.map_err(|e| format!("bind {listen}: {e}"))?;
        eprintln!("ras: serving {} on http://{listen}", data_dir.display());
        axum::serve(listener, api::router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| e.to_string())
    })
}

fn print_quantify(capacities: &str, mode: QuantMode, n: Option<u64>) -> Result<(), String> {
    let caps: Vec<f64> = capacities
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| format!("capacity {s:?} is not a number")))
        .collect::<Result<_, _>>()?;
    let q = quantify(&caps, mode).map_err(|e| e.to_string())?;
    let counts = n.map(|n| apportion(&q.percentages, n)).transpose().map_err(|e| e.to_string())?;
    println!("mode {}  mean {:.6}  stddev {:.14}", q.mode, q.mean, q.stddev);
    println!("{:>4} {:>10} {:>18} {:>12}{}", "vm", "capacity", "z", "percent", if counts.is_some() { "    count" } else { "" });
    for i in 0..caps.len() {
        let count = counts.as_ref().map(|c| format!(" {:>8}", c[i])).unwrap_or_default();
        println!("{:>4} {:>10} {:>18.15} {:>12.3}{count}", i + 1, caps[i], q.z_values[i], q.percentages[i]);
    }
    println!("total {:.3}", q.total_percentage);
    Ok(())
}

fn simulate(config: Option<PathBuf>, run: RunRequest, seed: u64, zone_table: Option<PathBuf>, out: PathBuf) -> Result<(), String> {
    let config: CloudConfig = match config {
        Some(p) => {
            let text = fs::read_to_string(&p).map_err(|e| format!("{}: {e}", p.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))?
        }
        None => sample::reference_config(),
    };
    let table = zones(zone_table)?;
    let report = |e: ras_core::RasError| match &e {
        ras_core::RasError::InvalidConfig(v) => {
            let lines: Vec<String> = v.iter().map(|v| format!("  {}: {}", v.code, v.message)).collect();
            format!("{}: {e}\n{}", e.code(), lines.join("\n"))
        }
        _ => format!("{}: {e}", e.code()),
    };
    let mut file = ExperimentFile::new("cli", config).map_err(report)?;
    file.generate(1, Some(seed), &table).map_err(report)?;
    let exp = file.run(1, &run).map_err(report)?;
    for (rank, s) in exp.ranking.iter().enumerate() {
        let m = &exp.run_for(*s).expect("ranked strategies were run").metrics;
        println!(
            "{}. {:<22} assigned {:>4}  rejected {:>4}  avg_wait {:>9.3}  avg_response {:>9.3}  mean_ruf {:.4}  value {}",
            rank + 1,
            s.as_str(),
            m.assigned_count,
            m.rejection_count,
            m.avg_wait,
            m.avg_response,
            m.mean_ruf,
            m.total_value
        );
    }
    fs::create_dir_all(&out).map_err(|e| format!("{}: {e}", out.display()))?;
    for doc in export_csv(&file, ExportTarget::Experiment(1)).map_err(report)? {
        let path = out.join(&doc.name);
        fs::write(&path, doc.contents).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    eprintln!("wrote CSVs to {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Serve { data_dir, listen, zone_table } => serve(data_dir, listen, zone_table),
        Command::Quantify { capacities, mode, n } => print_quantify(&capacities, mode, n),
        Command::Simulate { config, seed, strategies, mode, basis, zone_table, out } => {
            simulate(config, RunRequest { strategies, mode, basis, options: None }, seed, zone_table, out)
        }
        Command::SampleConfig => serde_json::to_string_pretty(&sample::reference_config())
            .map(|s| println!("{s}"))
            .map_err(|e| e.to_string()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ras: {e}");
            ExitCode::FAILURE
        }
    }
}
