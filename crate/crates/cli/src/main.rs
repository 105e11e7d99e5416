use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use cascade_epr_cli::{parse_config, run, Command};

/// Steady-state entanglement, conditional filtering and force-sensing runs
/// for the cascaded spin-mechanics system.
#[derive(Parser, Debug)]
#[command(name = "cascade-epr", version)]
struct Args {
    /// Run configuration (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// CSV destination; stdout when omitted and the config has no `output`.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads, 0 for one per core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Overrides the configured command.
    #[arg(long)]
    command: Option<Command>,
}

fn companion(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}_{suffix}.{ext}"))
}

fn main() -> ExitCode {
    let args = Args::parse();
    let outcome = (|| -> Result<(), String> {
        let text = std::fs::read_to_string(&args.config)
            .map_err(|e| format!("{}: {e}", args.config.display()))?;
        let mut cfg = parse_config(&text).map_err(|e| format!("{}: {e}", args.config.display()))?;
        if let Some(c) = args.command {
            cfg.command = Some(c);
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(args.threads)
            .build()
            .map_err(|e| e.to_string())?;
        let report = pool.install(|| run(&cfg)).map_err(|e| e.to_string())?;
        match args.output.or(cfg.output) {
            Some(path) => {
                std::fs::write(&path, report.main.render())
                    .map_err(|e| format!("{}: {e}", path.display()))?;
                for (suffix, table) in &report.extra {
                    let p = companion(&path, suffix);
                    std::fs::write(&p, table.render()).map_err(|e| format!("{}: {e}", p.display()))?;
                }
            }
            None => {
                print!("{}", report.main.render());
                for (suffix, table) in &report.extra {
                    println!();
                    println!("# table = {suffix}");
                    print!("{}", table.render());
                }
            }
        }
        Ok(())
    })();
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
