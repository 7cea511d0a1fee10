use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use cca_shap::pipeline::{self, PipelineConfig};
use cca_shap::synth::PlantedSpec;
use cca_shap::{Error, Result};

#[derive(Parser)]
#[command(version, about = "Cluster correspondence analysis with exact SHAP explanations")]
struct Cli {
    /// Pipeline config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config's `output`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run filter, screening, clustering and SHAP; write all artifacts.
    Analyze,
    /// Write a planted dataset, its labels, its spec and a starter config.
    Synth {
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 8)]
        q: usize,
        #[arg(long, default_value_t = 5)]
        categories: usize,
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, default_value_t = 0.6)]
        separation: f64,
        /// Omit the Severity column.
        #[arg(long)]
        no_severity: bool,
    },
    /// Draw SVG plots from an artifact directory.
    Render,
    /// Recompute one cluster's SHAP values from its saved model.
    Explain {
        /// 1-based cluster.
        #[arg(long)]
        cluster: usize,
        /// Destination CSV; defaults to `explain_cluster_<k>.csv` in the
        /// artifact directory.
        #[arg(long)]
        dest: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut cfg = PipelineConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = Some(seed);
    }
    if let Some(out) = &cli.out {
        cfg.output = Some(out.clone());
    }
    Ok(cfg)
}

fn artifact_dir(cli: &Cli) -> Result<PathBuf> {
    match (&cli.out, &cli.config) {
        (Some(out), _) => Ok(out.clone()),
        (None, Some(_)) => Ok(load_config(cli)?.output_dir().to_path_buf()),
        (None, None) => Err(Error::Config("pass --out or --config to locate the artifacts".into())),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("--threads: {e}")))?;
    }
    match &cli.command {
        Command::Analyze => {
            let cfg = load_config(cli)?;
            let outcome = pipeline::analyze(&cfg)?;
            info!("K = {}; artifacts in {}", outcome.solution.k, outcome.dir.display());
            println!("{}", outcome.dir.display());
        }
        Command::Synth {
            n,
            q,
            categories,
            k,
            separation,
            no_severity,
        } => {
            let out = cli
                .out
                .as_ref()
                .ok_or_else(|| Error::Config("synth needs --out".into()))?;
            let seed = cli.seed.ok_or_else(|| Error::Config("synth needs --seed".into()))?;
            let mut spec = PlantedSpec::new(*n, *q, *categories, *k, *separation, seed);
            if !no_severity {
                spec = spec.with_severity(pipeline::graded_severity_link(*k));
            }
            for path in pipeline::write_synth(&spec, out)?.1 {
                println!("{}", path.display());
            }
        }
        Command::Render => {
            for path in pipeline::render(&artifact_dir(cli)?)? {
                println!("{}", path.display());
            }
        }
        Command::Explain { cluster, dest } => {
            let cfg = load_config(cli)?;
            let dir = cli.out.clone().unwrap_or_else(|| cfg.output_dir().to_path_buf());
            let expl = pipeline::explain(&cfg, &dir, *cluster)?;
            let dest = dest
                .clone()
                .unwrap_or_else(|| dir.join(format!("explain_cluster_{cluster}.csv")));
            write_file(&dest, &pipeline::artifacts::shap_csv(&expl)?)?;
            println!("{}", dest.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
