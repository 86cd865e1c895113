//! `synth`: write a seeded synthetic netlist, and optionally a config for it.

use std::path::PathBuf;

use anyhow::Context;
use clap::Parser;
use flowplace::netlist::to_document_string;
use flowplace::synth::{generate, SynthConfig};

#[derive(Debug, Parser)]
#[command(name = "synth", version, about = "Generate a synthetic netlist")]
struct Args {
    /// Output netlist (JSON).
    #[arg(short, long)]
    out: PathBuf,
    /// Approximate instance count; overrides the block sizing flags.
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long, default_value_t = 6)]
    macros: usize,
    #[arg(long, default_value_t = 4)]
    blocks: usize,
    #[arg(long, default_value_t = 120)]
    cells_per_block: usize,
    /// Bits per macro-to-block bus.
    #[arg(long, default_value_t = 16)]
    bus_bits: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Also write a pipeline config pointing at the netlist.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> anyhow::Result<()> {
    let args = Args::parse();
    let synth = match args.instances {
        Some(n) => SynthConfig::with_instances(n, args.seed),
        None => SynthConfig {
            macros: args.macros,
            blocks: args.blocks,
            cells_per_block: args.cells_per_block,
            bus_bits: args.bus_bits,
            seed: args.seed,
            ..SynthConfig::default()
        },
    };
    let netlist = generate(&synth);
    std::fs::write(&args.out, to_document_string(&netlist))
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!("wrote {} ({} instances, {} nets)", args.out.display(), netlist.instances.len(), netlist.nets.len());

    if let Some(path) = args.config {
        let stem = args.out.file_stem().and_then(|s| s.to_str()).unwrap_or("design");
        let name = args.out.file_name().and_then(|s| s.to_str()).unwrap_or("design.json");
        let text = format!("run = \"{stem}\"\nseed = {}\n\n[input]\nnetlist = \"{name}\"\n", args.seed);
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
