use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};

use soc_lander::agent::{replay, run_episode, AgentConfig, EpisodeTrace, LayerOrder};
use soc_lander::ccl::IntentionLibrary;
use soc_lander::config::Config;
use soc_lander::environment::{builtin_level, load_level_arg};
use soc_lander::harness::{
    build_report, compute_metrics, condition_label, load_runs, run_grid, run_name, GridSpec, Report,
};
use soc_lander::scl::KMode;
use soc_lander::session::server::{serve, ServerConfig, Transport};

const EXIT_USAGE: u8 = 1;
const EXIT_RUN: u8 = 2;
const EXIT_CHECKS: u8 = 3;

/// Moonlander task simulator with a two-layer sense-of-control agent.
///
/// Scalar parameters can be overridden with a `key = value` file named by
/// the SOC_LANDER_CONFIG environment variable.
#[derive(Parser, Debug)]
#[command(name = "soc-lander", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one episode and write its trace.
    Simulate {
        /// Builtin level id (a..f) or a level file.
        #[arg(long)]
        level: String,
        /// `dynamic` or a fixed gain in [0, 1].
        #[arg(long, default_value = "0.5")]
        k: String,
        #[arg(long, default_value_t = 0.5)]
        ccl_threshold: f64,
        /// Sensorimotor layer only.
        #[arg(long)]
        no_ccl: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "ccl_first")]
        layer_order: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the evaluation grid and report the qualitative checks.
    Grid {
        /// Seeds per condition and level.
        #[arg(long, default_value_t = 1)]
        repeats: u64,
        /// First seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run a recorded trace's inputs and compare positions.
    Replay {
        #[arg(long)]
        trace: PathBuf,
        /// Level id or file; defaults to the level named in the trace.
        #[arg(long)]
        level: Option<String>,
    },
    /// Rebuild the summary from trace files.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Host live sessions over the wire protocol.
    Serve {
        #[arg(long, default_value = "127.0.0.1:7878")]
        listen: String,
        #[arg(long, value_enum, default_value_t = TransportArg::Ws)]
        transport: TransportArg,
        /// Directory for finished session traces.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TransportArg {
    Tcp,
    Ws,
}

struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

fn run_failure(message: impl ToString) -> Failure {
    Failure { code: EXIT_RUN, message: message.to_string() }
}

fn load_config() -> Result<Config, Failure> {
    let mut config = Config::default();
    if let Ok(path) = std::env::var("SOC_LANDER_CONFIG") {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| usage(format!("SOC_LANDER_CONFIG `{path}`: {e}")))?;
        config
            .apply_overrides(&text)
            .map_err(|e| usage(format!("SOC_LANDER_CONFIG `{path}`: {e}")))?;
    }
    Ok(config)
}

fn write_report(report: &Report, out: Option<&Path>) -> Result<(), Failure> {
    print!("{}", report.text);
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(run_failure)?;
        for (name, body) in [
            ("summary.txt", &report.text),
            ("summary.csv", &report.csv),
            ("runs.csv", &report.runs_csv),
        ] {
            std::fs::write(dir.join(name), body).map_err(run_failure)?;
        }
    }
    if report.all_checks_pass() {
        Ok(())
    } else {
        Err(Failure { code: EXIT_CHECKS, message: "qualitative checks failed".into() })
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config = load_config()?;
    match cli.command {
        Command::Simulate { level, k, ccl_threshold, no_ccl, seed, layer_order, out } => {
            let level = load_level_arg(&level).map_err(|e| usage(e.to_string()))?;
            let cfg = AgentConfig {
                k_mode: k.parse::<KMode>().map_err(usage)?,
                ccl_threshold,
                ccl_enabled: !no_ccl,
                seed,
                config,
                layer_order: layer_order.parse::<LayerOrder>().map_err(usage)?,
                library: Arc::new(IntentionLibrary::default()),
            };
            cfg.validate().map_err(|e| usage(e.to_string()))?;
            let trace = run_episode(level.clone(), &cfg).map_err(run_failure)?;
            let m = compute_metrics(&trace);
            let label = condition_label(&trace.meta);
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).map_err(run_failure)?;
                let path = dir.join(format!("{}.csv", run_name(&label, &level.id, seed)));
                trace.write(&path).map_err(run_failure)?;
                println!("trace: {}", path.display());
            }
            let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.4}"));
            println!(
                "{label} level={} seed={seed} outcome={} steps={} strategy_changes={} triggers={} mean_ll_soc={} mean_hl_soc={}",
                level.id,
                trace.meta.outcome,
                m.steps,
                m.strategy_changes.map_or("n/a".to_string(), |n| n.to_string()),
                m.triggers,
                fmt(m.mean_ll),
                fmt(m.mean_hl),
            );
            Ok(())
        }
        Command::Grid { repeats, seed, out } => {
            if repeats == 0 {
                return Err(usage("--repeats must be at least 1"));
            }
            let spec = GridSpec { config, ..GridSpec::default() }.with_repeats(seed, repeats);
            let result = run_grid(&spec, out.as_deref()).map_err(run_failure)?;
            for f in &result.failures {
                eprintln!("run {} failed: {}", f.run, f.message);
            }
            let report = build_report(&result.runs, &result.failures).map_err(run_failure)?;
            write_report(&report, out.as_deref())?;
            if result.failures.is_empty() {
                Ok(())
            } else {
                Err(run_failure(format!("{} runs failed", result.failures.len())))
            }
        }
        Command::Replay { trace, level } => {
            let recorded = EpisodeTrace::read(&trace).map_err(run_failure)?;
            let level = match level {
                Some(arg) => load_level_arg(&arg).map_err(|e| usage(e.to_string()))?,
                None => builtin_level(&recorded.meta.level).ok_or_else(|| {
                    usage(format!("trace level `{}` is not builtin; pass --level", recorded.meta.level))
                })?,
            };
            let report = replay(&recorded, level).map_err(run_failure)?;
            match report.first() {
                None => {
                    println!("replay: {} steps, no divergence", report.steps_checked);
                    Ok(())
                }
                Some(d) => {
                    println!(
                        "replay: {} divergences, first at step {} ({}: recorded {} replayed {})",
                        report.divergences.len(),
                        d.step,
                        d.field,
                        d.recorded,
                        d.replayed
                    );
                    Err(run_failure("trace does not replay"))
                }
            }
        }
        Command::Report { input } => {
            let runs = load_runs(&input).map_err(run_failure)?;
            let report = build_report(&runs, &[]).map_err(run_failure)?;
            write_report(&report, None)
        }
        Command::Serve { listen, transport, out } => {
            let listener = TcpListener::bind(&listen).map_err(run_failure)?;
            let addr = listener.local_addr().map_err(run_failure)?;
            let transport = match transport {
                TransportArg::Tcp => Transport::Tcp,
                TransportArg::Ws => Transport::WebSocket,
            };
            eprintln!("listening on {addr} ({transport:?})");
            serve(
                listener,
                ServerConfig {
                    transport,
                    config,
                    library: Arc::new(IntentionLibrary::default()),
                    out_dir: out,
                },
            )
            .map_err(run_failure)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
