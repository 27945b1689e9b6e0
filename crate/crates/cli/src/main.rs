use std::path::{Path, PathBuf};
use std::process::ExitCode;

use amsc_cli::error::EXIT_CODE_HELP;
use amsc_cli::{cmd_compare, cmd_fixture, cmd_ppa, cmd_run, CliError, Overrides, RunConfig};
use amsc_core::eval::ReportFormat;
use amsc_core::fixture::FixtureSpec;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "amsc", version, about = "Multi-specialist diagnosis experiments", after_help = EXIT_CODE_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args)]
struct Global {
    /// Override the config's global seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the report path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the report format (csv or json).
    #[arg(long, global = true)]
    format: Option<ReportFormat>,
    /// Persist backend scores in this directory.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Log progress to stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one configured system and write its report.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Measure option-order robustness of the backend.
    Ppa {
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluate several configs on one split and run paired t-tests.
    Compare {
        /// Repeat for each system.
        #[arg(long = "config", required = true, num_args = 1)]
        configs: Vec<PathBuf>,
        /// Config indices to test, as "a,b". Defaults to each config against the first.
        #[arg(long = "pair", value_parser = parse_pair)]
        pairs: Vec<(usize, usize)>,
    },
    /// Write a synthetic dataset, its knowledge and an unrelated pool.
    Fixture {
        #[arg(long, default_value_t = 4)]
        n_diseases: usize,
        #[arg(long, default_value_t = 50)]
        records_per_disease: usize,
        #[arg(long, default_value_t = 0.5)]
        redundancy: f64,
        /// Draw implicit findings from symptoms no profile mentions.
        #[arg(long)]
        uninformative_implicit: bool,
    },
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected 'a,b', got '{s}'"))?;
    let p = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("'{x}': {e}"));
    Ok((p(a)?, p(b)?))
}

fn load(path: &Path, o: &Overrides) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(path)?;
    cfg.apply(o);
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = &cli.global;
    let level = if g.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn };
    env_logger::Builder::new().filter_level(level).init();
    let overrides = Overrides {
        seed: g.seed,
        out: g.out.clone(),
        format: g.format,
    };
    let cache = g.cache_dir.as_deref();

    let outcome = match &cli.command {
        Command::Run { config } => load(config, &overrides).and_then(|cfg| {
            let out = cmd_run(&cfg, cache)?;
            println!("{}", serde_json::to_string_pretty(&out.result).expect("serializable"));
            log::info!("report written to {}", cfg.output.path.display());
            Ok(())
        }),
        Command::Ppa { config } => load(config, &overrides).and_then(|cfg| {
            let r = cmd_ppa(&cfg, cache)?;
            println!("mean PPA {:.4} over {} prompts", r.mean_ppa, r.prompt_count);
            Ok(())
        }),
        Command::Compare { configs, pairs } => configs
            .iter()
            .map(|p| load(p, &overrides))
            .collect::<Result<Vec<_>, _>>()
            .and_then(|cfgs| {
                let out = cmd_compare(&cfgs, pairs, cache)?;
                for r in &out.results {
                    println!("{:<32} accuracy {:.4}", r.system, r.accuracy);
                }
                for c in &out.comparisons {
                    println!(
                        "{} vs {}: t = {:.4}, p = {:.4}",
                        c.system_a, c.system_b, c.test.t, c.test.p
                    );
                }
                Ok(())
            }),
        Command::Fixture {
            n_diseases,
            records_per_disease,
            redundancy,
            uninformative_implicit,
        } => {
            let spec = FixtureSpec {
                uninformative_implicit: *uninformative_implicit,
                ..FixtureSpec::new(*n_diseases, *records_per_disease, *redundancy, g.seed.unwrap_or(0))
            };
            let dir = g.out.clone().unwrap_or_else(|| PathBuf::from("."));
            cmd_fixture(&spec, &dir).map(|files| {
                println!("{}", files.dataset.display());
                println!("{}", files.knowledge.display());
                println!("{}", files.pool.display());
            })
        }
    };

    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
