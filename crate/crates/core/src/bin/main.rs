use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use renorm_lab::cli_report::{
    cmd_bounds, cmd_complex_bounds, cmd_report, cmd_tower, num, CliError, CliResult, RunConfig, DEEP_LEVEL, EXIT_CHECKS_FAILED,
    EXIT_CONFIG,
};

#[derive(Parser)]
#[command(name = "renorm-lab", version, about = "Renormalization towers and a priori bounds for multimodal maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Map and run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the tower depth.
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Repeat the extension with twice the boundary points and report the refined modulus.
    #[arg(long, global = true)]
    refine: bool,
    /// Neither read nor write the tower cache.
    #[arg(long, global = true)]
    no_cache: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Build (or load) the renormalization tower.
    Tower,
    /// Real bounds per level and critical point.
    Bounds,
    /// Polynomial-like extensions at deep levels.
    ComplexBounds,
    /// All of the above plus pullback fits and a pass/fail matrix.
    Report,
}

fn config(cli: &Cli) -> CliResult<RunConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError { code: EXIT_CONFIG, message: "--config is required".into() })?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(d) = cli.depth {
        cfg.depth = d;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if cli.no_cache {
        cfg.cache = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> CliResult<bool> {
    let cfg = config(cli)?;
    match cli.command {
        Command::Tower => {
            let t = cmd_tower(&cfg)?;
            print!("{}", t.table);
            if let Some(why) = &t.record.stopped {
                println!("# stopped after level {}: {why}", t.record.levels.len());
            }
            Ok(true)
        }
        Command::Bounds => {
            let b = cmd_bounds(&cfg)?;
            if b.skipped_deep {
                println!("# tower shallower than level {DEEP_LEVEL}: deep-level suites skipped");
            }
            for c in &b.checks {
                println!("{} k={} {} {}", if c.pass { "pass" } else { "FAIL" }, c.k, c.check, num(c.value));
            }
            Ok(b.checks.iter().all(|c| c.pass))
        }
        Command::ComplexBounds => {
            let c = cmd_complex_bounds(&cfg, cli.refine)?;
            println!("k,modulus,diam_ratio,beta,unbranched");
            for r in &c.records {
                println!("{},{},{},{},{}", r.k, num(r.modulus), num(r.diam_ratio), num(r.beta), r.unbranched);
            }
            println!("# modulus floor {}", num(c.modulus_floor));
            Ok(c.modulus_floor > 0.0)
        }
        Command::Report => {
            let r = cmd_report(&cfg, cli.refine)?;
            for c in &r.checks {
                println!("{} k={} {} {}", if c.pass { "pass" } else { "FAIL" }, c.k, c.check, num(c.value));
            }
            println!("# K_fit {} C {:?}", num(r.fits.poincare_k_fit), r.fits.growth.iter().map(|g| g.c).collect::<Vec<_>>());
            Ok(r.all_pass())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_CHECKS_FAILED as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
