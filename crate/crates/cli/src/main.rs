//! `mccop`: dataset generation, predictor training, counterfactual
//! campaigns, ablations and reports from one TOML config.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mccop_core::campaign::{self, CampaignConfig};
use mccop_core::evaluation::Method;
use mccop_core::Error;

#[derive(Parser)]
#[command(name = "mccop", version, about = "Counterfactual campaigns over a synthetic latent world")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the labeled dataset.
    GenData,
    /// Train unsmoothed and smoothed predictors per seed.
    Train,
    /// Run the counterfactual campaign and write reports.
    Run,
    /// Run the smoothing x projection x k ablation grid.
    Ablate,
    /// Rebuild report files from the last campaign.
    Report,
}

#[derive(Args)]
struct Overrides {
    /// Config file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Comma-separated seeds.
    #[arg(long, global = true, value_delimiter = ',')]
    seed: Option<Vec<u64>>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated subset of mccop, gd, hill_climb, ga.
    #[arg(long, global = true, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_TRAINING: u8 = 4;
const EXIT_CAMPAIGN: u8 = 5;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        Error::Data(_) | Error::Io(_) | Error::Csv(_) | Error::Json(_) => EXIT_DATA,
        Error::Training(_) | Error::Divergence { .. } => EXIT_TRAINING,
        Error::Optimization(_) | Error::Checkpoint { .. } => EXIT_CAMPAIGN,
    }
}

fn load_config(o: Overrides) -> Result<CampaignConfig, Error> {
    let mut cfg = match &o.config {
        Some(p) => CampaignConfig::load(p)?,
        None => CampaignConfig::default(),
    };
    if let Some(s) = o.seed {
        cfg.seeds = s;
    }
    if let Some(out) = o.out {
        cfg.out_dir = out;
    }
    if let Some(m) = o.methods {
        cfg.methods = m;
    }
    if let Some(j) = o.jobs {
        cfg.jobs = j;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), Error> {
    let cfg = load_config(cli.overrides)?;
    match cli.command {
        Command::GenData => {
            let ds = campaign::gen_data(&cfg)?;
            println!("wrote {} items to {}", ds.items.len(), cfg.data_dir().display());
        }
        Command::Train => {
            for r in campaign::train(&cfg)? {
                println!(
                    "seed {:>4}  auroc {:.4} -> {:.4}  grad norm {:.4} -> {:.4}",
                    r.seed, r.auroc_unsmoothed, r.auroc_smoothed, r.grad_norm_unsmoothed, r.grad_norm_smoothed
                );
            }
        }
        Command::Run => {
            let records = campaign::run(&cfg)?;
            println!("{} runs; reports in {}", records.len(), cfg.out_dir.display());
            print_summary(&records)?;
        }
        Command::Ablate => {
            let rows = campaign::ablate(&cfg)?;
            println!("{} cells written to {}", rows.len(), cfg.out_dir.join("ablation.csv").display());
        }
        Command::Report => {
            campaign::report(&cfg)?;
            println!("reports rebuilt in {}", cfg.out_dir.display());
        }
    }
    Ok(())
}

fn print_summary(records: &[mccop_core::evaluation::SampleRecord]) -> Result<(), Error> {
    for s in mccop_core::evaluation::merge_seeds(records)? {
        let edit = s.edit.map(|(m, sd)| format!("{m:.2} +/- {sd:.2}")).unwrap_or_else(|| "-".into());
        println!(
            "{:<10}  success {:.3}  adversarial {:.3}  edit {}",
            s.method.name(),
            s.success_rate.0,
            s.adversarial_rate.0,
            edit
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
