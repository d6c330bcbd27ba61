use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use gpmw::games::{Game, RoutingGame};
use gpmw::harness::{
    base_seed, build_environment, export, fit_hyperparameters, fit_routing_kernels, run_experiment_with,
    write_outputs, EnvironmentConfig, ExperimentConfig, RunOptions,
};
use gpmw::kernel_gp::KernelSpec;
use gpmw::{Error, Result};

/// Overrides the output directory when `--out` is not given.
const OUT_DIR_VAR: &str = "GPMW_OUT_DIR";

const MATRIX_FIT_LENGTHSCALES: [f64; 6] = [1.0, 2.0, 4.0, 6.0, 8.0, 12.0];
const MATRIX_FIT_SAMPLES: usize = 200;

#[derive(Parser)]
#[command(name = "gpmw", version, about = "No-regret learning in repeated games with GP-MW and baselines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Only print errors.
    #[arg(long, short, global = true, conflicts_with = "verbose")]
    quiet: bool,
    /// Print per-repeat progress and route details.
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Base seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct OutArgs {
    /// Output directory [env: GPMW_OUT_DIR; default: config `output`, else results/<name>].
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write logs, summary and plot series.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Repeats run concurrently.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
    },
    /// Check a config, parse its input files and enumerate routes without running.
    Validate {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Select kernel hyperparameters by marginal likelihood and write fit.json.
    Fit {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Regenerate plot-series files from the logs in a directory.
    Export {
        /// Directory holding log_r*.csv files.
        dir: PathBuf,
    },
    /// Write the enumerated route sets of a routing config to routes.json.
    Routes {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        out: OutArgs,
    },
}

struct Ui {
    quiet: bool,
    verbose: bool,
}

impl Ui {
    fn info(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            let _ = writeln!(std::io::stdout(), "{}", msg.as_ref());
        }
    }

    fn detail(&self, msg: impl AsRef<str>) {
        if self.verbose {
            let _ = writeln!(std::io::stdout(), "{}", msg.as_ref());
        }
    }
}

fn load(args: &ConfigArgs) -> Result<ExperimentConfig> {
    if !args.config.is_file() {
        return Err(Error::input(format!("config file `{}` not found", args.config.display())));
    }
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn ensure_seed(cfg: &mut ExperimentConfig, ui: &Ui) {
    if cfg.seed.is_none() {
        let nanos = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_nanos());
        let seed = (nanos as u64) ^ ((nanos >> 64) as u64) ^ u64::from(std::process::id());
        cfg.seed = Some(seed);
        ui.info(format!("no seed configured; using generated seed {seed}"));
    }
}

fn out_dir(out: &OutArgs, cfg: &ExperimentConfig) -> PathBuf {
    out.out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_VAR).map(PathBuf::from))
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| Path::new("results").join(&cfg.name))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let bytes = serde_json::to_vec_pretty(value)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn cmd_run(config: &ConfigArgs, out: &OutArgs, parallel: usize, ui: &Ui) -> Result<()> {
    let mut cfg = load(config)?;
    ensure_seed(&mut cfg, ui);
    let dir = out_dir(out, &cfg);
    let start = Instant::now();
    let logs = run_experiment_with(&cfg, RunOptions { parallel: parallel.max(1) })?;
    ui.detail(format!("{} repeats finished in {:.1}s", logs.len(), start.elapsed().as_secs_f64()));
    let summary = write_outputs(&dir, &cfg.name, base_seed(&cfg)?, &logs)?;
    for (series, stats) in &summary.finals {
        ui.info(format!("{series}: final {:.6} ± {:.6}", stats.mean, stats.sd));
    }
    ui.info(format!("wrote {} logs to {}", logs.len(), dir.display()));
    Ok(())
}

fn cmd_validate(config: &ConfigArgs, ui: &Ui) -> Result<()> {
    let mut cfg = load(config)?;
    if cfg.seed.is_none() {
        cfg.seed = Some(0);
    }
    match &cfg.environment {
        EnvironmentConfig::Matrix(m) => {
            cfg.assignment(2)?;
            ui.info(format!("matrix game: K = {}, T = {}, repeats = {}", m.actions, cfg.horizon, cfg.repeats));
        }
        EnvironmentConfig::Routing(r) => {
            let game = RoutingGame::build(r, base_seed(&cfg)?)?;
            cfg.assignment(game.num_players())?;
            let counts: Vec<usize> = game.all_routes().iter().map(|a| a.num_routes()).collect();
            ui.info(format!(
                "routing: {} agents, {} learning, T = {}",
                counts.len(),
                game.num_players(),
                cfg.horizon
            ));
            let mut hist = [0usize; 16];
            for &c in &counts {
                hist[c.min(15)] += 1;
            }
            for (c, n) in hist.iter().enumerate().filter(|(_, n)| **n > 0) {
                ui.info(format!("  {n} agents with {c} routes"));
            }
            for (i, c) in counts.iter().enumerate() {
                ui.detail(format!("  agent {i}: {c} routes"));
            }
        }
        EnvironmentConfig::RobustBo(_) => {
            let game = build_environment(&cfg, 0)?;
            cfg.assignment(game.num_players())?;
            ui.info(format!(
                "robust-bo: {} actions, {} adversary profiles, T = {}",
                game.num_actions(0),
                game.num_actions(1),
                cfg.horizon
            ));
        }
    }
    ui.info("config ok");
    Ok(())
}

fn cmd_fit(config: &ConfigArgs, out: &OutArgs, ui: &Ui) -> Result<()> {
    let mut cfg = load(config)?;
    ensure_seed(&mut cfg, ui);
    let seed = base_seed(&cfg)?;
    let dir = out_dir(out, &cfg);
    let results = match &cfg.environment {
        EnvironmentConfig::Routing(r) => {
            let mut game = RoutingGame::build(r, seed)?;
            let grid = r.fit.clone().unwrap_or_default();
            fit_routing_kernels(&mut game, &grid, r.kernel.offset, seed)?
        }
        EnvironmentConfig::Matrix(_) => {
            let game = build_environment(&cfg, 0)?;
            let template = game
                .prior(0)
                .ok_or_else(|| Error::config("environment", "matrix game has no GP prior"))?
                .kernel;
            let candidates: Vec<KernelSpec> = MATRIX_FIT_LENGTHSCALES
                .iter()
                .map(|&l| template.with_lengthscale(l))
                .collect::<Option<_>>()
                .ok_or_else(|| Error::config("environment.kernel", "kernel has no single lengthscale to fit"))?;
            vec![fit_hyperparameters(game.as_ref(), 0, &candidates, MATRIX_FIT_SAMPLES, seed)?]
        }
        EnvironmentConfig::RobustBo(_) => {
            return Err(Error::config("environment.kind", "fit supports matrix and routing environments"))
        }
    };
    for (p, r) in results.iter().enumerate() {
        ui.detail(format!("player {p}: candidate {} (log ML {:.4})", r.index, r.log_marginal_likelihood));
    }
    let path = dir.join("fit.json");
    write_json(&path, &results)?;
    ui.info(format!("wrote {} fits to {}", results.len(), path.display()));
    Ok(())
}

fn cmd_export(dir: &Path, ui: &Ui) -> Result<()> {
    if !dir.is_dir() {
        return Err(Error::input(format!("log directory `{}` not found", dir.display())));
    }
    let written = export(dir)?;
    for p in &written {
        ui.detail(p.display().to_string());
    }
    ui.info(format!("wrote {} series files to {}", written.len(), dir.display()));
    Ok(())
}

fn cmd_routes(config: &ConfigArgs, out: &OutArgs, ui: &Ui) -> Result<()> {
    let mut cfg = load(config)?;
    let EnvironmentConfig::Routing(r) = &cfg.environment else {
        return Err(Error::config("environment.kind", "routes requires a routing environment"));
    };
    let r = r.clone();
    ensure_seed(&mut cfg, ui);
    let game = RoutingGame::build(&r, base_seed(&cfg)?)?;
    let network = game.network();
    let agents: Vec<serde_json::Value> = game
        .all_routes()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let routes: Vec<serde_json::Value> = (0..a.num_routes())
                .map(|k| {
                    let edges: Vec<usize> = a.route_edges(k).collect();
                    let nodes: Vec<usize> = std::iter::once(a.origin)
                        .chain(edges.iter().map(|&e| network.edges[e].to))
                        .map(|n| n + 1)
                        .collect();
                    serde_json::json!({ "nodes": nodes, "free_flow_time": a.free_flow[k] })
                })
                .collect();
            serde_json::json!({
                "agent": i,
                "origin": a.origin + 1,
                "destination": a.destination + 1,
                "units": a.units,
                "learning": game.learners().contains(&i),
                "routes": routes,
            })
        })
        .collect();
    let dir = out_dir(out, &cfg);
    let path = dir.join("routes.json");
    write_json(&path, &serde_json::json!({ "prune_ratio": r.prune_ratio, "agents": agents }))?;
    ui.info(format!("wrote routes of {} agents to {}", agents.len(), path.display()));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ui = Ui {
        quiet: cli.quiet,
        verbose: cli.verbose,
    };
    let result = match &cli.command {
        Command::Run { config, out, parallel } => cmd_run(config, out, *parallel, &ui),
        Command::Validate { config } => cmd_validate(config, &ui),
        Command::Fit { config, out } => cmd_fit(config, out, &ui),
        Command::Export { dir } => cmd_export(dir, &ui),
        Command::Routes { config, out } => cmd_routes(config, out, &ui),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
