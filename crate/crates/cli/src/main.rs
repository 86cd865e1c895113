//! `place`: run the placement pipeline described by a TOML config.
//!
//! Exit status: 0 success, 2 usage or config error, 3 file IO error,
//! 4 netlist parse error, 5 failure inside a pipeline stage.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use flowplace::pipeline::{run_pipeline, PipelineConfig, PipelineError, Stage};
use flowplace::placer::LossVariant;

#[derive(Debug, Parser)]
#[command(name = "place", version, about = "Dataflow-aware macro placement")]
struct Args {
    /// Pipeline config (TOML).
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Stop after this stage: parse, cluster, extract, gp, sa, flip, report.
    #[arg(long)]
    stage: Option<Stage>,
    /// Enable the push-boundary term with this weight.
    #[arg(long, value_name = "W")]
    push_boundary: Option<f64>,
    /// Skip macro flipping.
    #[arg(long)]
    no_finetune: bool,
    /// Two-hop loss variant: eq5, eq6 or eq8.
    #[arg(long)]
    loss: Option<LossVariant>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<PipelineError>() {
        Some(PipelineError::Config(_)) => 2,
        Some(PipelineError::Io { .. }) => 3,
        Some(PipelineError::Parse { .. }) => 4,
        Some(_) => 5,
        None => 3,
    }
}

fn run(args: Args) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&args.config).map_err(|source| PipelineError::Io {
        path: args.config.clone(),
        source,
    })?;
    let mut config = PipelineConfig::from_toml(&text)
        .with_context(|| format!("reading {}", args.config.display()))?;
    if let Some(dir) = args.config.parent() {
        config.rebase(dir);
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(stage) = args.stage {
        config.stop_after = stage;
    }
    if let Some(w) = args.push_boundary {
        if w.is_nan() || w < 0.0 {
            return Err(PipelineError::Config(format!("--push-boundary {w} must be non-negative")).into());
        }
        config.loss.boundary_weight = w;
    }
    if args.no_finetune {
        config.flip.enabled = false;
    }
    if let Some(v) = args.loss {
        config.loss.variant = v;
    }
    if let Some(out) = args.out {
        config.output.dir = out;
    }

    let run = run_pipeline(&config)?;
    let written = run.write_artifacts(&config.output.dir)?;
    println!("stopped after {}", config.stop_after);
    if let Some(r) = &run.report {
        println!(
            "hpwl {:.3}  mm {:.3}  mc {:.3}  mcc {:.3}  overflow {:.3}",
            r.hpwl_total, r.wl_mm, r.wl_mc, r.wl_mcc, r.congestion_overflow
        );
        let applied = r.flips.iter().filter(|f| f.applied).count();
        println!("flips applied {applied}/{}", r.flips.len());
    }
    for (stage, secs) in &run.timing.stages {
        println!("time {stage:<8} {secs:.3}s");
    }
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
