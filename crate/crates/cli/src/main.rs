use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cgtc_core::events::to_jsonl;
use cgtc_core::output::{curve_csv, landmarks_csv, run_csv, write_atomic};
use cgtc_core::{
    aggregate_runs, generate_topology, run_ensemble, series_label, Algorithm, SimConfig, Summary,
};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(
    name = "cgtc-sim",
    version,
    about = "Round-based WSN clustering simulator (CGTC, LEACH, CGC)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured algorithm over `runs` seeds and write CSV results.
    Run(RunArgs),
    /// Parse and check a configuration file without simulating.
    Validate(ConfigArgs),
    /// Print the effective configuration in file syntax.
    ShowConfig(ConfigArgs),
    /// Write the node placement for one seed.
    Topology {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// Configuration file (`key = value` lines).
    #[arg(long, conflicts_with = "scenario")]
    config: Option<PathBuf>,
    /// Built-in scenario: 1 or 2.
    #[arg(long, default_value = "1")]
    scenario: String,
}

impl ConfigArgs {
    fn load(&self) -> Result<SimConfig> {
        let config = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                SimConfig::parse(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => SimConfig::scenario(&self.scenario)?,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Algorithms to run, comma separated.
    #[arg(long, value_delimiter = ',')]
    alg: Option<Vec<Algorithm>>,
    /// Head election probabilities for the baselines, comma separated.
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    #[arg(long)]
    runs: Option<u32>,
    /// Base seed; run i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_rounds: Option<u32>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Also write one CSV per run.
    #[arg(long)]
    per_run: bool,
    /// Write per-run JSONL event logs.
    #[arg(long)]
    log_events: bool,
    /// Worker thread cap.
    #[arg(long, env = "CGTC_SIM_THREADS")]
    threads: Option<usize>,
    #[arg(long, short)]
    quiet: bool,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Validate(args) => {
            let cfg = args.load()?;
            println!(
                "ok: {} nodes, {} m field, {} rounds x {} runs",
                cfg.n, cfg.m, cfg.max_rounds, cfg.runs
            );
            Ok(())
        }
        Command::ShowConfig(args) => {
            print!("{}", args.load()?.to_text());
            Ok(())
        }
        Command::Topology { config, seed, out } => {
            let cfg = config.load()?;
            let topo = generate_topology(&cfg, &mut ChaCha8Rng::seed_from_u64(seed))?;
            match out {
                Some(path) => write_atomic(&path, &topo.dump())
                    .with_context(|| format!("writing {}", path.display())),
                None => {
                    print!("{}", topo.dump());
                    Ok(())
                }
            }
        }
    }
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = args.config.load()?;
    if let Some(alg) = args.alg {
        cfg.algorithms = alg;
    }
    if let Some(p) = args.p {
        cfg.p = p;
    }
    if let Some(runs) = args.runs {
        cfg.runs = runs;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(r) = args.max_rounds {
        cfg.max_rounds = r;
    }
    cfg.log_events |= args.log_events;
    cfg.validate()?;
    if cfg.runs < 2 {
        bail!("at least 2 runs are needed for confidence intervals");
    }

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut summaries = Vec::new();
    for &alg in &cfg.algorithms {
        let ps: Vec<Option<f64>> = if alg.uses_probability() {
            cfg.p.iter().map(|&p| Some(p)).collect()
        } else {
            vec![None]
        };
        for p in ps {
            let label = series_label(alg, p);
            if !args.quiet {
                eprintln!("running {label} ({} runs)", cfg.runs);
            }
            let outputs = run_ensemble(&cfg, alg, p, args.threads)
                .with_context(|| format!("simulating {label}"))?;
            for o in &outputs {
                let stem = format!("{label}_seed{}", o.metrics.seed);
                if args.per_run {
                    write(
                        &args.out.join("runs").join(format!("{stem}.csv")),
                        &run_csv(&o.metrics),
                    )?;
                }
                if cfg.log_events {
                    write(
                        &args.out.join("events").join(format!("{stem}.jsonl")),
                        &to_jsonl(&o.events),
                    )?;
                }
            }
            let metrics: Vec<_> = outputs.into_iter().map(|o| o.metrics).collect();
            summaries.push(aggregate_runs(&metrics)?);
        }
    }
    write(&args.out.join("curve.csv"), &curve_csv(&summaries))?;
    write(&args.out.join("landmarks.csv"), &landmarks_csv(&summaries))?;
    write(&args.out.join("config.txt"), &cfg.to_text())?;
    if !args.quiet {
        print_table(&summaries);
    }
    Ok(())
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    write_atomic(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn print_table(summaries: &[Summary]) {
    println!("{:<18} {:>14} {:>14} {:>14}", "series", "FND", "HND", "LND");
    for s in summaries {
        let cell = |l: cgtc_core::Landmark| {
            let mark = if l.censored > 0 { ">" } else { "" };
            format!("{mark}{:.0} ± {:.0}", l.mean, l.ci_half)
        };
        println!(
            "{:<18} {:>14} {:>14} {:>14}",
            s.label,
            cell(s.fnd),
            cell(s.hnd),
            cell(s.lnd)
        );
    }
}
