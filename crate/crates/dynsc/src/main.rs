use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dynsc::{Config, Mode};

#[derive(Parser)]
#[command(name = "dynsc", version, about = "Community detection in multi-layer networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Worker threads; overrides the config.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Write the scree table of the truncated sum matrix.
    Scree {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let (config, out_dir, workers, force_scree) = match cli.command {
        Command::Run {
            config,
            out_dir,
            workers,
        } => (config, out_dir, workers, false),
        Command::Scree { config, out_dir } => (config, out_dir, None, true),
    };
    let result = Config::load(&config).and_then(|mut cfg| {
        if force_scree {
            cfg.mode = Mode::Scree;
            cfg.validate()?;
        }
        let workers = workers
            .or(cfg.workers)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        if workers == 0 {
            return Err(dynsc::Error::Config("workers must be at least 1".into()));
        }
        dynsc::run(&cfg, &out_dir, workers)
    });
    match result {
        Ok(summary) => {
            for path in &summary.outputs {
                if path.extension().is_some_and(|e| e != "json") {
                    println!("wrote {}", path.display());
                }
            }
            if summary.failed > 0 {
                eprintln!("{} of {} runs failed", summary.failed, summary.runs);
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
