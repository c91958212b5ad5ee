use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use skilldrive::config::SessionConfig;
use skilldrive::experiments::{
    build_dataset, default_train_config, run_collect, run_exp1_with, run_exp2_with, summarize, summary_csv, table_csv,
    parse_table, train_dataset, CollectSpec, Exp1Spec, Exp2Spec, ExperimentRow, DEFAULT_WINDOW_STRIDE,
};
use skilldrive::serve::{serve, ServeState};
use skilldrive::session::run_session;
use skilldrive::store::{read_corpus, read_model, write_corpus, write_log, write_net};
use skilldrive::HarnessError;
use skilldrive_core::skillnet::{Channel, SkillNetError, TrainConfig};
use skilldrive_core::track::generate_random_path;

#[derive(Parser)]
#[command(name = "skilldrive", version, about = "Haptic driving assistance with a learned expert skill model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a random path in the track text format.
    GenerateTrack {
        #[arg(long)]
        seed: u64,
        /// Path length, m.
        #[arg(long, default_value_t = 4000.0)]
        length: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one session from a TOML config and write its log.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Model directory with steer.json and accel.json.
        #[arg(long)]
        nets: Option<PathBuf>,
        /// Output directory; defaults to the config's log_dir or `.`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Drive the expert roster over the training paths.
    Collect {
        /// TOML collection spec; defaults apply to missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Six trials per path and driver instead of two.
        #[arg(long)]
        full_scale: bool,
        #[arg(long, default_value = "corpus")]
        out: PathBuf,
    },
    /// Train one network on a collected corpus.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        /// `s` (steering) or `a` (accelerator).
        #[arg(long)]
        channel: Channel,
        #[arg(long)]
        out: PathBuf,
        /// Use every n-th window of each log.
        #[arg(long, default_value_t = DEFAULT_WINDOW_STRIDE)]
        stride: usize,
        /// TOML training config overriding the defaults.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Expert and novice groups on the 4-km comparison path.
    Exp1 {
        #[arg(long)]
        nets: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write every run's log.
        #[arg(long)]
        save_logs: bool,
    },
    /// Novice roster under guidance N, G and C.
    Exp2 {
        #[arg(long)]
        nets: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        save_logs: bool,
    },
    /// Live-drive WebSocket service at ws://<bind>/ws.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8750")]
        bind: String,
        #[arg(long)]
        nets: Option<PathBuf>,
    },
    /// Per-cell means of experiment run tables.
    Report {
        #[arg(long, num_args = 1.., required = true)]
        runs: Vec<PathBuf>,
    },
}

fn read_toml<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, HarnessError> {
    match path {
        Some(p) => toml::from_str(&fs::read_to_string(p)?).map_err(|e| HarnessError::ConfigInvalid(format!("{}: {e}", p.display()))),
        None => Ok(T::default()),
    }
}

fn write_experiment(out: &Path, spec_json: String, rows: &[ExperimentRow]) -> Result<(), HarnessError> {
    fs::create_dir_all(out)?;
    fs::write(out.join("spec.json"), spec_json)?;
    fs::write(out.join("runs.csv"), table_csv(rows))?;
    let cells = summarize(rows);
    fs::write(out.join("summary.csv"), summary_csv(&cells))?;
    print!("{}", summary_csv(&cells));
    Ok(())
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::GenerateTrack { seed, length, out } => {
            let text = generate_random_path(seed, length)?.to_text();
            match out {
                Some(p) => fs::write(p, text)?,
                None => print!("{text}"),
            }
        }
        Command::Run { config, nets, out } => {
            let cfg = SessionConfig::from_toml(&fs::read_to_string(&config)?)?;
            let model = nets.as_deref().map(read_model).transpose()?.map(Arc::new);
            let output = run_session(cfg.clone(), model)?;
            let dir = out.or_else(|| cfg.log_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
            let name = config.file_stem().and_then(|s| s.to_str()).unwrap_or("run").to_string();
            write_log(&dir, &name, &cfg, &output.log, output.ending)?;
            println!("{}", skilldrive_core::metrics::MetricsReport::csv_header());
            println!("{}", output.report.csv_row());
        }
        Command::Collect { config, full_scale, out } => {
            let mut spec: CollectSpec = read_toml(config.as_deref())?;
            if full_scale {
                spec.trials = CollectSpec::full_scale().trials;
            }
            let runs = run_collect(&spec)?;
            let manifest = write_corpus(&out, &spec, &runs)?;
            let completed = runs.iter().filter(|r| r.output.completed()).count();
            println!("{} logs ({completed} completed), {} windows -> {}", manifest.entries.len(), manifest.total_windows, out.display());
        }
        Command::Train { corpus, channel, out, stride, config } => {
            let (_, logs) = read_corpus(&corpus)?;
            let cfg: TrainConfig = match config {
                Some(p) => read_toml(Some(&p))?,
                None => default_train_config(channel),
            };
            let data = build_dataset(&logs, channel, stride);
            let net = match train_dataset(&data, &cfg) {
                Ok(net) => net,
                Err(HarnessError::SkillNet(SkillNetError::DidNotConverge { epochs, final_cost, net })) => {
                    write_net(&out, &net)?;
                    eprintln!("warning: validation cost {:.3} % after {epochs} epochs; best weights written", final_cost * 100.0);
                    return Err(HarnessError::SkillNet(SkillNetError::DidNotConverge { epochs, final_cost, net }));
                }
                Err(e) => return Err(e),
            };
            write_net(&out, &net)?;
            let h = &net.history;
            println!(
                "{} windows, {} epochs, validation {:.3} %, test {:.3} % -> {}",
                data.windows.len(),
                h.epochs(),
                h.best_val_cost * 100.0,
                h.test_cost * 100.0,
                out.display()
            );
        }
        Command::Exp1 { nets, out, config, save_logs } => {
            let spec: Exp1Spec = read_toml(config.as_deref())?;
            let model = Arc::new(read_model(&nets)?);
            let logs = out.join("logs");
            let rows = run_exp1_with(&spec, &model, &mut |row, cfg, output| {
                if save_logs {
                    write_log(&logs, &format!("{}_a{}_r{}", row.group, row.agent, row.trial), cfg, &output.log, output.ending)?;
                }
                Ok(())
            })?;
            write_experiment(&out, serde_json::to_string_pretty(&spec)?, &rows)?;
        }
        Command::Exp2 { nets, out, config, save_logs } => {
            let spec: Exp2Spec = read_toml(config.as_deref())?;
            let model = Arc::new(read_model(&nets)?);
            let logs = out.join("logs");
            let rows = run_exp2_with(&spec, &model, &mut |row, cfg, output| {
                if save_logs {
                    write_log(&logs, &format!("{}_a{}_{}", row.group, row.agent, row.method), cfg, &output.log, output.ending)?;
                }
                Ok(())
            })?;
            write_experiment(&out, serde_json::to_string_pretty(&spec)?, &rows)?;
        }
        Command::Serve { bind, nets } => {
            let model = nets.as_deref().map(read_model).transpose()?.map(Arc::new);
            let runtime = tokio::runtime::Builder::new_current_thread().enable_all().build()?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind(&bind).await?;
                eprintln!("serving ws://{}/ws", listener.local_addr()?);
                serve(listener, ServeState { model }).await
            })?;
        }
        Command::Report { runs } => {
            for p in &runs {
                let rows = parse_table(&fs::read_to_string(p)?)?;
                println!("# {}", p.display());
                print!("{}", summary_csv(&summarize(&rows)));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
