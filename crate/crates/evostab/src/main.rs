use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use evostab::commands::{self, Overrides};
use evostab::ensemble::{resolve_workers, Workers};
use evostab::{CliResult, ExperimentConfig};
use evostab_core::macrostate::MacroLabel;

#[derive(Parser)]
#[command(name = "evostab", version, about = "Stability experiments on evolving agent populations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (JSON). Defaults apply to every missing field.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    runs: Option<usize>,
    #[arg(long, global = true)]
    generations: Option<usize>,
    /// Worker threads [default: EVOSTAB_WORKERS, else available parallelism].
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// One run; writes the per-generation trajectory CSV.
    Evolve,
    /// Ensemble macro-state occupation CSV.
    Macrostates,
    /// Degree of instability over the mutation x crossover grid.
    Sweep,
    /// Exact micro chain against ensemble frequencies.
    MicroOracle,
    /// Habitat network simulation; per-epoch JSON lines.
    Ecosystem,
    /// SVG and text rendering of the configured run's final population.
    Viz,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("evostab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    let base = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let o = Overrides { seed: cli.seed, runs: cli.runs, generations: cli.generations, out: cli.out.clone() };
    let cfg = commands::apply(base, &o);
    let workers = || -> CliResult<Workers> { Workers::new(resolve_workers(cli.workers)?) };
    match cli.command {
        Command::Evolve => {
            let t = commands::cmd_evolve(&cfg)?;
            let last = t.records.last().expect("at least one record");
            println!("generation {} max_fitness {} pop_size {}", last.generation, last.max_fitness, last.pop_size);
        }
        Command::Macrostates => {
            let report = commands::cmd_macrostates(&cfg, &workers()?)?;
            println!(
                "runs {} d_ins {} final p(M_max) {} final p(M_half) {}",
                cfg.runs,
                report.d_ins,
                report.final_probability(&cfg, MacroLabel::MAX)?,
                report.final_probability(&cfg, MacroLabel::HALF)?
            );
        }
        Command::Sweep => {
            let rows = commands::cmd_sweep(&cfg, &o, &workers()?)?;
            println!("{} cells", rows.len());
        }
        Command::MicroOracle => {
            let report = commands::micro_oracle(&cfg, &workers()?)?;
            for c in &report.checks {
                println!("generation {} l1 {}", c.generation, c.l1);
            }
            commands::write_micro_report(&cfg, &report)?;
        }
        Command::Ecosystem => {
            let records = commands::cmd_ecosystem(&cfg, &o, &workers()?)?;
            if let Some(last) = records.last() {
                println!(
                    "epochs {} intra {:?} inter {:?}",
                    records.len(),
                    last.mean_intra_weight,
                    last.mean_inter_weight
                );
            }
        }
        Command::Viz => {
            let (_, text) = commands::cmd_viz(&cfg)?;
            print!("{text}");
        }
    }
    Ok(())
}
