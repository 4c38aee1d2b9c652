use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use subgoal_attention::controller::save_params;
use subgoal_attention::env::RoomLayout;
use subgoal_attention::harness::gradcheck::GRADCHECK_TOLERANCE;
use subgoal_attention::harness::{
    episodes_to_threshold, parse_config, run_experiment, run_suite, summarize, ExperimentId, GradCase, Overrides,
};
use subgoal_attention::Result;

#[derive(Parser)]
#[command(version, about = "Subgoal-selecting meta-controllers with a learned attention window")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one experiment and write its per-episode CSV.
    Run {
        /// no-attn-fixed, no-attn-dynamic, partial or constrained.
        #[arg(long)]
        experiment: Option<ExperimentId>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        batch: Option<usize>,
        #[arg(long)]
        timeout: Option<usize>,
        /// Room index (0 = top) the target colour is placed in.
        #[arg(long)]
        target_room: Option<usize>,
        /// `key=value` file; flags given here take precedence.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the trained parameters here.
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Bucketed mean and variance of episode length from a run's CSV.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 100)]
        bucket: usize,
    },
    /// Finite-difference check of every layer and both controllers.
    Gradcheck {
        #[arg(long, default_value_t = 20)]
        seeds: u64,
    },
    /// Print every room layout, one per line.
    EnumerateLayouts,
}

fn run(command: Command) -> Result<bool> {
    match command {
        Command::Run { experiment, episodes, seed, lr, batch, timeout, target_room, config, out, save } => {
            let text = config
                .map(|path| {
                    std::fs::read_to_string(&path)
                        .map_err(|e| std::io::Error::new(e.kind(), format!("cannot read {}: {e}", path.display())))
                })
                .transpose()?;
            let flags =
                Overrides { experiment, episodes, seed, lr, batch, timeout, target_room, out, ..Default::default() };
            let spec = parse_config(text.as_deref(), flags)?;
            eprintln!("{spec}");
            let result = run_experiment(&spec)?;
            if let Some(w) = result.final_window {
                println!(
                    "final {} episodes: mean length {:.3}, variance {:.3}, success rate {:.3}",
                    w.episodes, w.mean_length, w.variance_length, w.success_rate
                );
            }
            match episodes_to_threshold(&result.outcome.records, 100, 1.0) {
                Some(n) => println!("within +1 of optimal (100-episode mean) after {n} episodes"),
                None => println!("never within +1 of optimal (100-episode mean)"),
            }
            if let Some(path) = save {
                save_params(result.outcome.net.params(), &path)?;
            }
            Ok(true)
        }
        Command::Summarize { input, bucket } => {
            let buckets = summarize(&input, bucket)?;
            println!("first_episode,count,mean_length,variance_length");
            for b in buckets {
                println!("{},{},{},{}", b.first_episode, b.count, b.mean_length, b.variance_length);
            }
            Ok(true)
        }
        Command::Gradcheck { seeds } => {
            let outcomes = run_suite(seeds)?;
            let mut ok = true;
            for case in GradCase::ALL {
                let mine: Vec<_> = outcomes.iter().filter(|o| o.case == case).collect();
                let worst = mine.iter().max_by(|a, b| a.report.max_rel_error.total_cmp(&b.report.max_rel_error));
                let failed = mine.iter().filter(|o| !o.passed()).count();
                ok &= failed == 0;
                if let Some(w) = worst {
                    println!(
                        "{:<24} {} seeds, worst {:.3e} ({}[{}], seed {}){}",
                        case.name(),
                        mine.len(),
                        w.report.max_rel_error,
                        w.report.worst_param,
                        w.report.worst_offset,
                        w.seed,
                        if failed == 0 { String::new() } else { format!(", {failed} over {GRADCHECK_TOLERANCE:e}") }
                    );
                }
            }
            println!("{}", if ok { "gradcheck passed" } else { "gradcheck FAILED" });
            Ok(ok)
        }
        Command::EnumerateLayouts => {
            for layout in RoomLayout::all() {
                let heights: Vec<String> = layout.heights().iter().map(|h| h.to_string()).collect();
                let colors: Vec<String> = layout.colors().iter().map(|c| c.to_string()).collect();
                println!("{} {}", heights.join(","), colors.join(","));
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
