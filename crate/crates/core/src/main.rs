use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use shearlayer::numerics::set_solver_threads;
use shearlayer::pipeline::{plot, run, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "shearlayer", version, about = "Boundary-layer expansions around degenerate shear flows")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every enabled stage of a config.
    Run {
        config: PathBuf,
        /// Overrides output.dir of the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render SVG figures from the reports in a run directory.
    Plot { dir: PathBuf },
    /// Parse and validate a config without running it.
    CheckConfig { config: PathBuf },
}

fn threads() -> Result<Option<usize>> {
    match std::env::var("SHEARLAYER_THREADS") {
        Ok(s) => {
            let n: usize = s.trim().parse().with_context(|| format!("SHEARLAYER_THREADS={s} is not a thread count"))?;
            anyhow::ensure!(n > 0, "SHEARLAYER_THREADS must be positive");
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}

fn execute(cli: Cli) -> Result<i32> {
    let threads = threads()?;
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("building the thread pool")?;
    }
    match cli.cmd {
        Cmd::Run { config, out } => {
            let cfg = RunConfig::load(&config)?;
            set_solver_threads(if cfg.output.deterministic { None } else { threads.or(Some(0)) });
            let dir = out.unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
            let o = run(&cfg, &dir)?;
            for s in &o.manifest.stages {
                println!("stage {:<10} {:?} {:.2}s{}", s.name, s.status, s.seconds, s.message.as_ref().map(|m| format!(" ({m})")).unwrap_or_default());
            }
            for g in &o.manifest.gates {
                let tag = if g.pass { "PASS" } else if g.enforced { "FAIL" } else { "WARN" };
                println!("{tag} {:<28} {:e} ({})", g.name, g.value, g.limit);
            }
            println!("reports in {}", dir.display());
            Ok(o.exit_code)
        }
        Cmd::Plot { dir } => {
            let r = plot(&dir)?;
            for f in &r.written {
                println!("wrote {f}");
            }
            for m in &r.missing {
                eprintln!("warning: no {m}, skipped");
            }
            Ok(0)
        }
        Cmd::CheckConfig { config } => {
            let cfg = RunConfig::load(&config)?;
            let p = cfg.profile()?;
            println!("ok: profile {}, grid {}x{}, {} epsilon value(s)", p.label, cfg.grid.nx, cfg.grid.ny, cfg.expansion.eps.len());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
