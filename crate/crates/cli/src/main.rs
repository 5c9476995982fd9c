use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use lineval::pipeline::{run_pipeline, run_stage, RunConfig, Stage};
use lineval::synthgen::{generate_league, write_league, Preset, SynthConfig, TRUTH_FILE};

/// Offensive-line salary valuation pipeline.
#[derive(Debug, Parser)]
#[command(name = "lineval", version)]
struct Cli {
    /// Run configuration (TOML). Relative paths inside it resolve against its directory.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory, overriding the config.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed, overriding the config.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Fixed number of clusters instead of the Krzanowski-Lai choice.
    #[arg(long, global = true, value_name = "N")]
    k: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Aggregate game records and merge the external tables.
    Ingest,
    /// Stepwise salary regression and lineup weighting.
    Price,
    /// k-means archetypes over the priced predictors.
    Cluster,
    /// t-test profiles and tail directions per cluster.
    Profile,
    /// Salary distribution fits per cluster.
    FitDist,
    /// Tail tests and the silhouette gate.
    Identify,
    /// Rank comparison against the current-season grades.
    Validate,
    /// Run every stage in order.
    Pipeline {
        /// Start at this stage, reusing the earlier stages' outputs.
        #[arg(long, value_name = "NAME")]
        stage_from: Option<Stage>,
    },
    /// Write a synthetic league, its ground truth and a matching run.toml.
    Synth {
        /// separable, paperlike or hard.
        #[arg(long, default_value = "separable")]
        preset: Preset,
        /// Archetype count for the separable preset.
        #[arg(long)]
        archetypes: Option<usize>,
        /// Directory to write into.
        #[arg(long, value_name = "DIR")]
        dir: PathBuf,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(k) = cli.k {
        cfg.clustering.k_override = Some(k);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn synth(cli: &Cli, preset: Preset, archetypes: Option<usize>, dir: &Path) -> Result<()> {
    let seed = cli.seed.unwrap_or(1);
    let synth = match (preset, archetypes) {
        (Preset::Separable, Some(n)) => SynthConfig::separable(seed, n)?,
        (_, Some(_)) => anyhow::bail!(lineval::Error::Config("--archetypes applies to the separable preset only".into())),
        (p, None) => SynthConfig::preset(p, seed)?,
    };
    let league = generate_league(&synth)?;
    write_league(&league, dir)?;
    let mut cfg = RunConfig::for_synthetic(Path::new(""), &synth);
    if let Some(k) = cli.k {
        cfg.clustering.k_override = Some(k);
    }
    let path = dir.join("run.toml");
    fs::write(&path, cfg.to_toml()?).with_context(|| format!("writing {}", path.display()))?;
    println!(
        "synth: {} players, {} anomalies, truth in {}",
        league.truth.members.len(),
        league.truth.anomalies().count(),
        dir.join(TRUTH_FILE).display()
    );
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let stage = match &cli.command {
        Command::Synth { preset, archetypes, dir } => return synth(cli, *preset, *archetypes, dir),
        Command::Pipeline { stage_from } => {
            let cfg = load_config(cli)?;
            run_pipeline(&cfg, *stage_from)?;
            println!("pipeline: wrote {}", cfg.out_dir.display());
            return Ok(());
        }
        Command::Ingest => Stage::Ingest,
        Command::Price => Stage::Price,
        Command::Cluster => Stage::Cluster,
        Command::Profile => Stage::Profile,
        Command::FitDist => Stage::FitDist,
        Command::Identify => Stage::Identify,
        Command::Validate => Stage::Validate,
    };
    let cfg = load_config(cli)?;
    run_stage(&cfg, stage)?;
    println!("{stage}: wrote {}", cfg.out_dir.join(stage.name()).display());
    Ok(())
}

fn exit_code(category: &str) -> u8 {
    match category {
        "config" => 2,
        "input" => 3,
        "dependency" => 4,
        "io" => 5,
        _ => 6,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let category = e.downcast_ref::<lineval::Error>().map_or("io", |e| e.category());
            eprintln!("error [{category}]: {e:#}");
            ExitCode::from(exit_code(category))
        }
    }
}
