use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use helm_control::runner::{solve_scenario, write_outputs};
use helm_control::scenario::{self, Scenario, ScenarioConfig};
use helm_control::{Error, Result};

/// Active near-field control with directional far-field constraints.
#[derive(Parser)]
#[command(name = "helm-control", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario and write its artifacts.
    Run {
        /// Scenario TOML file or the name of a bundled scenario.
        config: String,
        /// Output directory; defaults to `outputs.directory` or `out/<name>`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Relative noise level for the discrepancy principle.
        #[arg(long)]
        epsilon_rel: Option<f64>,
        /// Worker threads; 0 uses every core.
        #[arg(long, env = "HELM_CONTROL_THREADS")]
        threads: Option<usize>,
    },
    /// Check a scenario and report every problem found.
    Validate { config: String },
    /// List the bundled scenarios.
    List,
}

/// Loads a config from disk, falling back to the bundled set by name.
fn load(config: &str) -> Result<(String, ScenarioConfig, Option<PathBuf>)> {
    let path = Path::new(config);
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg = ScenarioConfig::from_toml(&text)?;
        return Ok((text, cfg, path.parent().map(Path::to_path_buf)));
    }
    let text = scenario::bundled_text(config)
        .map_err(|_| Error::Config(format!("{config}: no such file or bundled scenario")))?;
    Ok((text.to_string(), ScenarioConfig::from_toml(text)?, None))
}

fn run(config: &str, out: Option<PathBuf>, epsilon_rel: Option<f64>, threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    }
    let (text, cfg, base) = load(config)?;
    let dir = out
        .or_else(|| cfg.outputs.directory.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
    let sc = Scenario::build(cfg, base.as_deref())?;
    let result = solve_scenario(sc, epsilon_rel)?;
    let manifest = write_outputs(&result, &dir, &text)?;

    let d = &result.diagnostics;
    println!("scenario {}", manifest.scenario);
    println!(
        "  alpha {:.3e}  residual {:.3e}  delta {:.3e}  cond {:.3e}",
        d.alpha, d.residual_norm, d.delta, d.condition.condition_number
    );
    for f in &d.flags {
        println!("  flag {f:?}");
    }
    for r in &result.errors.on_grid.regions {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3e}"));
        println!(
            "  {}: max|u| on null {}  max rel err {}",
            r.name,
            fmt(r.max_abs_on_null),
            fmt(r.max_rel_error)
        );
    }
    for (t, v) in result.scenario.targets.iter().zip(&result.far_values) {
        println!("  {}: u_inf {:.4e}{:+.4e}i  |u_inf| {:.4e}", t.name, v.re, v.im, v.norm());
    }
    println!(
        "  power {:.2} dB ({:?}; sphere flux {:.2} dB at r = {} m)",
        result.power.level_db, result.power.method, result.power.sphere.level_db, result.power.sphere.radius
    );
    println!("  wrote {} files to {}", manifest.files.len() + 1, dir.display());
    Ok(())
}

fn validate(config: &str) -> Result<i32> {
    let (_, cfg, base) = load(config)?;
    let issues = scenario::validate(&cfg, base.as_deref());
    if issues.is_empty() {
        println!("{}: ok", cfg.name);
        return Ok(0);
    }
    for i in &issues {
        eprintln!("error: {}", i.message);
    }
    Ok(issues.iter().map(|i| i.exit_code).min().unwrap_or(0))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            config,
            out,
            epsilon_rel,
            threads,
        } => run(&config, out, epsilon_rel, threads).map(|_| 0),
        Command::Validate { config } => validate(&config),
        Command::List => {
            for name in scenario::list_scenarios() {
                println!("{name}");
            }
            Ok(0)
        }
    };
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
