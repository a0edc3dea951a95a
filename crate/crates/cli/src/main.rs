use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use coagfuse::config::RunConfig;
use coagfuse::experiments::{
    run_mc_config, run_sectional_config, run_smolu1d_config, study_cross_validation, study_fast_fusion,
    study_slow_fusion, StudyReport,
};
use coagfuse::io::{write_cells_csv, write_marginal_csv, write_moments_csv, write_snapshot_csv, Summary};
use coagfuse::mc::{summarize, EventLog};

#[derive(Parser)]
#[command(name = "coagfuse", version, about = "Area-volume coagulation with fusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config; the baseline when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo ensemble: per-replica moment CSVs and a JSON summary.
    RunMc {
        #[command(flatten)]
        common: Common,
        /// Overrides `sim.replicas`.
        #[arg(long)]
        replicas: Option<usize>,
        /// Overrides `sim.seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write particle snapshots at `study.checkpoints`.
        #[arg(long)]
        snapshots: bool,
    },
    /// Deterministic (v, e) grid solver.
    RunSectional {
        #[command(flatten)]
        common: Common,
    },
    /// One-dimensional on-line limit.
    RunSmolu1d {
        #[command(flatten)]
        common: Common,
    },
    /// Automated studies; exits with status 2 when a check fails.
    Study {
        #[command(subcommand)]
        which: Study,
    },
    /// Prints every config key with its default.
    Defaults,
}

#[derive(Subcommand)]
enum Study {
    FastFusion {
        #[command(flatten)]
        common: Common,
    },
    SlowFusion {
        #[command(flatten)]
        common: Common,
    },
    CrossValidate {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> Result<RunConfig> {
    let cfg = match &common.config {
        Some(p) => RunConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => RunConfig::baseline(),
    };
    std::fs::create_dir_all(&common.out).with_context(|| format!("creating {}", common.out.display()))?;
    Ok(cfg)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
}

const RENDER_STUB: &str = r#"# Plot stub: python3 render.py <csv> [column ...]
import sys
import pandas as pd
import matplotlib.pyplot as plt

df = pd.read_csv(sys.argv[1])
cols = sys.argv[2:] or [c for c in df.columns if c != "time"]
df.plot(x=df.columns[0], y=cols, logy=True)
plt.savefig(sys.argv[1].rsplit(".", 1)[0] + ".png", dpi=150)
"#;

fn write_stub(dir: &Path) -> Result<()> {
    std::fs::write(dir.join("render.py"), RENDER_STUB)?;
    Ok(())
}

fn run_mc(common: &Common, replicas: Option<usize>, seed: Option<u64>, snapshots: bool) -> Result<bool> {
    let mut cfg = load(common)?;
    if let Some(r) = replicas {
        cfg.set("sim.replicas", &r.to_string())?;
    }
    if let Some(s) = seed {
        cfg.set("sim.seed", &s.to_string())?;
    }
    let results = run_mc_config(&cfg, snapshots)?;
    let mut runs = Vec::new();
    let mut aborted = Vec::new();
    let mut log = EventLog::default();
    for (r, res) in results.into_iter().enumerate() {
        match res {
            Ok(run) => {
                write_moments_csv(create(&common.out, &format!("replica_{r:03}_moments.csv"))?, &run.records)?;
                if snapshots {
                    write_snapshot_csv(create(&common.out, &format!("replica_{r:03}_snapshots.csv"))?, &run.snapshots)?;
                }
                log.merge(&run.log);
                runs.push(run);
            }
            Err(e) => {
                log::warn!("replica {r} aborted: {e}");
                aborted.push(format!("replica {r}: {e}"));
            }
        }
    }
    let stats = summarize(&runs.iter().collect::<Vec<_>>());
    let summary = Summary {
        config_hash: cfg.hash(),
        seed: cfg.seed(),
        config: cfg.canonical(),
        records: serde_json::json!({ "moments": stats, "events": log, "aborted": aborted }),
        checks: Vec::new(),
    };
    summary.write(create(&common.out, "summary.json")?)?;
    write_stub(&common.out)?;
    println!("{} replicas, {} aborted, {} accepted events; wrote {}", runs.len(), aborted.len(), log.accepted, common.out.display());
    Ok(aborted.is_empty())
}

fn run_sectional(common: &Common) -> Result<bool> {
    let cfg = load(common)?;
    let (grid, run) = run_sectional_config(&cfg)?;
    write_cells_csv(create(&common.out, "cells.csv")?, &grid, &run.history)?;
    write_moments_csv(create(&common.out, "moments.csv")?, &run.records)?;
    let summary = Summary {
        config_hash: cfg.hash(),
        seed: cfg.seed(),
        config: cfg.canonical(),
        records: serde_json::json!({
            "exit": run.exit,
            "coag_area_defect": run.coag_area_defect,
            "steps": run.steps,
        }),
        checks: Vec::new(),
    };
    summary.write(create(&common.out, "summary.json")?)?;
    write_stub(&common.out)?;
    println!("{} steps, exit volume {}; wrote {}", run.steps, run.exit.volume, common.out.display());
    Ok(true)
}

fn run_smolu1d(common: &Common) -> Result<bool> {
    let cfg = load(common)?;
    let run = run_smolu1d_config(&cfg)?;
    write_marginal_csv(create(&common.out, "marginal.csv")?, &run.history)?;
    let summary = Summary {
        config_hash: cfg.hash(),
        seed: cfg.seed(),
        config: cfg.canonical(),
        records: serde_json::json!({ "exit_number": run.exit_number, "exit_volume": run.exit_volume }),
        checks: Vec::new(),
    };
    summary.write(create(&common.out, "summary.json")?)?;
    write_stub(&common.out)?;
    println!("wrote {}", common.out.display());
    Ok(true)
}

fn study(common: &Common, f: fn(&RunConfig) -> coagfuse::Result<StudyReport>) -> Result<bool> {
    let cfg = load(common)?;
    let report = f(&cfg)?;
    report.write_to(&common.out)?;
    write_stub(&common.out)?;
    for c in &report.checks {
        println!("{} {}: value {} threshold {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.threshold);
    }
    for a in &report.aborted {
        println!("ABORTED {a}");
    }
    Ok(report.all_pass())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let ok = match Cli::parse().command {
        Command::RunMc { common, replicas, seed, snapshots } => run_mc(&common, replicas, seed, snapshots)?,
        Command::RunSectional { common } => run_sectional(&common)?,
        Command::RunSmolu1d { common } => run_smolu1d(&common)?,
        Command::Study { which } => match which {
            Study::FastFusion { common } => study(&common, study_fast_fusion)?,
            Study::SlowFusion { common } => study(&common, study_slow_fusion)?,
            Study::CrossValidate { common } => study(&common, study_cross_validation)?,
        },
        Command::Defaults => {
            print!("{}", RunConfig::documented_defaults());
            true
        }
    };
    if !ok {
        std::process::exit(2);
    }
    Ok(())
}
