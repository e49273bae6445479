use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use statecrawl::config::{Overrides, RunConfig};
use statecrawl::generate::RandomSpec;
use statecrawl::pipeline::{self, DirectEstimate, Preset};
use statecrawl::{report, Error, Result};

#[derive(Parser)]
#[command(name = "statecrawl", version, about = "Crawl, analyze and audit client-side descendant states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetName {
    Random,
    #[value(alias = "paper")]
    Reference,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic fixtures (one JSON file per seed)
    GenFixture {
        /// Output directory
        #[arg(long, default_value = "fixtures")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "random")]
        preset: PresetName,
        /// Number of seeds (random preset)
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 3)]
        breadth: u32,
        #[arg(long, default_value_t = 2)]
        depth: u32,
        #[arg(long, default_value_t = 0.3)]
        overlap: f64,
        /// Maximum requests per state
        #[arg(long, default_value_t = 4)]
        resources: u32,
        /// Probability that an event leads nowhere
        #[arg(long, default_value_t = 0.05)]
        inert: f64,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
    },
    /// Build descendant trees and metadata records
    Crawl(Overrides),
    /// Contributing paths, per-level new resources and corpus statistics
    Analyze(Overrides),
    /// Archival coverage of each level's new resources
    Coverage(Overrides),
    /// Crawl-time ratios, policy choice and storage
    Estimate {
        #[command(flatten)]
        overrides: Overrides,
        /// Frontier size of the baseline crawl
        #[arg(long)]
        baseline_size: Option<u64>,
        /// Measured baseline crawl time in seconds
        #[arg(long)]
        baseline_time: Option<f64>,
        /// Frontier size per level, comma-separated
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<u64>>,
        /// Measured time per level in seconds, comma-separated
        #[arg(long, value_delimiter = ',')]
        times: Option<Vec<f64>>,
    },
    /// Tables and figure series
    Report(Overrides),
}

fn config(flags: &Overrides) -> Result<RunConfig> {
    RunConfig::resolve(flags, |k| std::env::var(k).ok())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenFixture {
            out,
            preset,
            count,
            breadth,
            depth,
            overlap,
            resources,
            inert,
            rng_seed,
        } => {
            let preset = match preset {
                PresetName::Reference => Preset::Reference { rng_seed },
                PresetName::Random => Preset::Random(RandomSpec {
                    seeds: count,
                    breadth,
                    depth,
                    overlap,
                    resources,
                    inert,
                    rng_seed,
                }),
            };
            let summary = pipeline::gen_fixture(&out, &preset)?;
            println!("wrote {} fixtures to {}", summary.fixtures, out.display());
            if let Some(h) = summary.holdings {
                println!("wrote holdings to {}", h.display());
            }
        }
        Command::Crawl(flags) => {
            let s = pipeline::crawl(&config(&flags)?)?;
            println!(
                "crawled {} seeds ({} deferred), {} descendants",
                s.seeds, s.deferred, s.descendants
            );
        }
        Command::Analyze(flags) => {
            let a = pipeline::analyze(&config(&flags)?)?;
            if let Some(stats) = &a.stats {
                println!(
                    "analyzed {} seeds: {} contributing paths, frontier {:?}",
                    stats.seeds, stats.all.contributing_paths, stats.level_contributions
                );
            }
        }
        Command::Coverage(flags) => {
            let r = pipeline::coverage_stage(&config(&flags)?)?;
            for l in &r.levels {
                println!(
                    "s{}: {} resources, {:.2} unarchived",
                    l.level, l.resources, l.fraction_unarchived
                );
            }
        }
        Command::Estimate {
            overrides,
            baseline_size,
            baseline_time,
            sizes,
            times,
        } => {
            let config = config(&overrides)?;
            let direct = match (baseline_size, baseline_time, sizes, times) {
                (None, None, None, None) => None,
                (Some(baseline_size), Some(baseline_time), Some(sizes), Some(times)) => Some(DirectEstimate {
                    baseline_size,
                    baseline_time,
                    sizes,
                    times,
                }),
                _ => {
                    return Err(Error::Config(
                        "--baseline-size, --baseline-time, --sizes and --times must be given together".into(),
                    ))
                }
            };
            let output = pipeline::estimate(&config, direct.as_ref())?;
            print!("{}", pipeline::estimate_table(&output));
        }
        Command::Report(flags) => {
            let config = config(&flags)?;
            let summary = report::report(&config)?;
            println!(
                "wrote {} tables to {}",
                summary.tables.len(),
                config.out.join(pipeline::REPORT_DIR).display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
