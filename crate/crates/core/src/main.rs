use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use drra::bench::{
    gen_command, load_config, oracle_command, parse_c_list, parse_instance, parse_stop,
    run_experiment, BenchError, FamilyChoice, InitChoice,
};
use drra::model::{validate_instance, BarrierKind, BarrierSpec};

#[derive(Parser)]
#[command(
    name = "drra",
    version,
    about = "Distributed resource reallocation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance file.
    Gen {
        /// `dispatch` or `multi_resource`
        family: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Barrier weight stored in the file.
        #[arg(long, default_value_t = 1e-6, allow_hyphen_values = true)]
        c: f64,
        /// `log` or `inverse`
        #[arg(long, default_value = "log")]
        barrier: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the reallocation engine and write one CSV trace per barrier weight.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated barrier weights.
        #[arg(long, allow_hyphen_values = true)]
        c: Option<String>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// `even` or `from-point`
        #[arg(long)]
        init: Option<String>,
        /// `none`, `residual:TOL` or `plateau:WINDOW:TOL`
        #[arg(long)]
        stop: Option<String>,
        #[arg(long)]
        residual_every: Option<usize>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the centralized problems.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        c: Option<String>,
    },
    /// Check an instance file.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn barrier_kind(s: &str) -> Result<BarrierKind, BenchError> {
    match s {
        "log" => Ok(BarrierKind::Log),
        "inverse" => Ok(BarrierKind::Inverse),
        _ => Err(BenchError::Schema(format!("barrier: unknown kind `{s}`"))),
    }
}

fn execute(cli: Cli) -> Result<(), BenchError> {
    match cli.command {
        Command::Gen {
            family,
            n,
            seed,
            c,
            barrier,
            out,
        } => {
            let family: FamilyChoice = family.parse()?;
            let barrier = BarrierSpec::new(barrier_kind(&barrier)?, c)
                .map_err(|e| BenchError::Schema(e.to_string()))?;
            let out = out.unwrap_or_else(|| {
                let name = match family {
                    FamilyChoice::Dispatch => "dispatch",
                    FamilyChoice::MultiResource => "multi_resource",
                };
                PathBuf::from(format!("{name}_n{n}_s{seed}.json"))
            });
            let inst = gen_command(family, n, seed, barrier, &out)?;
            println!(
                "wrote {} ({} nodes, {} edges)",
                out.display(),
                inst.n(),
                inst.graph.edge_count()
            );
        }
        Command::Run {
            config,
            c,
            iters,
            seed,
            init,
            stop,
            residual_every,
            out,
        } => {
            let (mut cfg, inst) = load_config(&config)?;
            if let Some(c) = c {
                cfg.c_values = parse_c_list(&c)?;
            }
            if let Some(v) = iters {
                cfg.max_iters = v;
            }
            if let Some(v) = seed {
                cfg.seed = v;
            }
            if let Some(v) = init {
                cfg.init = v.parse::<InitChoice>()?;
            }
            if let Some(v) = stop {
                cfg.stop = parse_stop(&v)?;
            }
            if let Some(v) = residual_every {
                cfg.residual_every = v;
            }
            if let Some(v) = out {
                cfg.out = v;
            }
            for s in run_experiment(&inst, &cfg)? {
                println!("{s}");
            }
        }
        Command::Oracle { config, c } => {
            let (mut cfg, inst) = load_config(&config)?;
            if let Some(c) = c {
                cfg.c_values = parse_c_list(&c)?;
                cfg.validate()?;
            }
            println!("{}", oracle_command(&inst, &cfg.c_values)?);
        }
        Command::Validate { config } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| BenchError::Parse(format!("{}: {e}", config.display())))?;
            let (_, inst) = parse_instance(&text)?;
            print!("{}", validate_instance(&inst));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
