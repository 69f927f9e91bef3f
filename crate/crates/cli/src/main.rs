use std::io::{self, BufReader};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use wxdrive_core::agent::{serve_lines, Decision};
use wxdrive_core::harness::rescore::{rescore_log, RescoreContext};
use wxdrive_core::harness::report::REPORT_FILE;
use wxdrive_core::harness::{
    compare, run_batch, run_config, write_outputs, BatchSpec, Report, RunConfig, Termination,
};
use wxdrive_core::scoring::DrivingStyle;

#[derive(Parser)]
#[command(name = "wxdrive", version, about = "Closed-loop driving agent evaluation under weather")]
struct Cli {
    /// tracing filter, e.g. `info` or `wxdrive_core=debug`. Defaults to the
    /// config's output.log_level, or `warn`.
    #[arg(long, global = true)]
    log_level: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its log and report.
    ///
    /// Exit status: 0 goal reached, 2 timeout, 3 collision, 4 agent failure.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the agent target (builtin:NAME, proc:CMD, tcp:HOST:PORT).
        #[arg(long)]
        agent: Option<String>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a weather × rig × seed grid.
    Batch {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Batch directory; defaults to the base config's output.dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute scores from a trajectory log.
    ///
    /// Road geometry, tick length and default parameters come from --report,
    /// else --config, else a report.json next to the log, else the defaults.
    Rescore {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, conflicts_with = "config")]
        report: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        tau_th: Option<f64>,
        #[arg(long)]
        style: Option<DrivingStyle>,
        /// Comfort, efficiency and safety weights, comma separated.
        #[arg(long, value_delimiter = ',', num_args = 3)]
        alpha: Option<Vec<f64>>,
        #[arg(long)]
        v_limit: Option<f64>,
        /// Write the result here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate and cross-compare run reports.
    Compare {
        #[arg(required = true, num_args = 2..)]
        reports: Vec<PathBuf>,
        /// Also write the comparison as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Print the default run config (or batch spec) as TOML.
    PrintConfig {
        #[arg(long)]
        batch: bool,
    },
    /// Protocol test agent answering every request with one decision.
    #[command(hide = true)]
    EchoAgent {
        #[arg(long, default_value = "idle")]
        decision: Decision,
        /// Serve one TCP connection on this address instead of stdio.
        #[arg(long)]
        listen: Option<String>,
    },
}

fn init_tracing(level: &str) {
    let filter = EnvFilter::try_new(level).unwrap_or_else(|_| EnvFilter::new("warn"));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(io::stderr)
        .try_init();
}

fn termination_code(t: Termination) -> u8 {
    match t {
        Termination::GoalReached => 0,
        Termination::Timeout => 2,
        Termination::Collision => 3,
        Termination::AgentFailure => 4,
    }
}

fn cmd_run(cli_level: Option<String>, config: &Path, agent: Option<String>, out: Option<PathBuf>) -> Result<ExitCode> {
    let mut cfg = RunConfig::load(config)?;
    init_tracing(cli_level.as_deref().unwrap_or(&cfg.output.log_level));
    if let Some(a) = agent {
        cfg.agent.target = a;
    }
    if let Some(o) = out {
        cfg.output.dir = o;
    }
    cfg.validate()?;
    let outcome = run_config(&cfg)?;
    let report = write_outputs(&outcome, &cfg.output.dir)?;
    let summary = match &outcome.scores {
        Ok(s) => format!("aggregate {:.4}", s.aggregate),
        Err(e) => format!("unscored: {e}"),
    };
    println!(
        "{:?} after {} ticks, {summary}, fallback rate {:.3}; report {}",
        outcome.termination,
        outcome.records.len(),
        outcome.fallback.rate,
        report.display()
    );
    Ok(ExitCode::from(termination_code(outcome.termination)))
}

fn cmd_batch(cli_level: Option<String>, spec: &Path, workers: usize, out: Option<PathBuf>) -> Result<ExitCode> {
    let spec = BatchSpec::load(spec)?;
    init_tracing(cli_level.as_deref().unwrap_or(&spec.base.output.log_level));
    let out = out.unwrap_or_else(|| spec.base.output.dir.clone());
    let index = run_batch(&spec, &out, Some(workers))?;
    let failed = index.cells.iter().filter(|c| c.error.is_some()).count();
    println!(
        "{} cells, {failed} failed; index {}",
        index.cells.len(),
        out.join("index.json").display()
    );
    if let Some(table) = &index.comparison_table {
        print!("{}", std::fs::read_to_string(out.join(table))?);
    }
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

#[allow(clippy::too_many_arguments)]
fn cmd_rescore(
    log: &Path,
    report: Option<PathBuf>,
    config: Option<PathBuf>,
    tau_th: Option<f64>,
    style: Option<DrivingStyle>,
    alpha: Option<Vec<f64>>,
    v_limit: Option<f64>,
    out: Option<PathBuf>,
) -> Result<ExitCode> {
    let beside = log.parent().unwrap_or(Path::new(".")).join(REPORT_FILE);
    let base = if let Some(r) = report {
        Report::load(&r)?.config
    } else if let Some(c) = config {
        RunConfig::load(&c)?
    } else if beside.exists() {
        Report::load(&beside)?.config
    } else {
        RunConfig::default()
    };
    let mut ctx = RescoreContext::from_config(&base);
    if let Some(t) = tau_th {
        ctx.params.tau_th = t;
    }
    if let Some(s) = style {
        ctx.params.style = s;
    }
    if let Some(a) = alpha {
        ctx.params.alpha = [a[0], a[1], a[2]];
    }
    if let Some(v) = v_limit {
        ctx.params.v_limit = v;
    }
    let result = rescore_log(log, &ctx)?;
    let json = serde_json::to_string_pretty(&result)?;
    match out {
        Some(path) => std::fs::write(&path, json + "\n").with_context(|| format!("writing {}", path.display()))?,
        None => println!("{json}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_compare(reports: &[PathBuf], json: Option<PathBuf>) -> Result<ExitCode> {
    let mut runs = Vec::new();
    for path in reports {
        let report = Report::load(path)?;
        let Some(scores) = report.scores else {
            bail!("{} has no scores to compare", path.display());
        };
        runs.push((path.display().to_string(), scores));
    }
    let refs: Vec<_> = runs.iter().map(|(label, s)| (label.clone(), s)).collect();
    let table = compare(&refs)?;
    print!("{}", table.render());
    if let Some(path) = json {
        std::fs::write(&path, serde_json::to_string_pretty(&table)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_echo(decision: Decision, listen: Option<String>) -> Result<ExitCode> {
    let text = decision.render();
    match listen {
        None => {
            serve_lines(io::stdin().lock(), io::stdout().lock(), |_| text.clone())?;
        }
        Some(addr) => {
            let listener = TcpListener::bind(&addr).with_context(|| format!("binding {addr}"))?;
            eprintln!("listening on {}", listener.local_addr()?);
            let (stream, _) = listener.accept()?;
            serve_lines(BufReader::new(stream.try_clone()?), stream, |_| text.clone())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = cli.log_level.clone();
    let result = match cli.command {
        Command::Run { config, agent, out } => cmd_run(level, &config, agent, out),
        Command::Batch { spec, workers, out } => cmd_batch(level, &spec, workers, out),
        Command::Rescore {
            log,
            report,
            config,
            tau_th,
            style,
            alpha,
            v_limit,
            out,
        } => {
            init_tracing(level.as_deref().unwrap_or("warn"));
            cmd_rescore(&log, report, config, tau_th, style, alpha, v_limit, out)
        }
        Command::Compare { reports, json } => {
            init_tracing(level.as_deref().unwrap_or("warn"));
            cmd_compare(&reports, json)
        }
        Command::PrintConfig { batch } => {
            if batch {
                print!("{}", toml::to_string_pretty(&BatchSpec::default()).expect("defaults serialize"));
            } else {
                print!("{}", RunConfig::default().to_toml());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::EchoAgent { decision, listen } => cmd_echo(decision, listen),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
