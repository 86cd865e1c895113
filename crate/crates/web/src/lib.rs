//! WebAssembly bindings for the demo page in `www/`.
//!
//! Each export is a thin wrapper over a plain Rust function so the logic can
//! be tested natively.

use std::fmt::Write;

use flowplace::geom::{Orientation, Outline, Point};
use flowplace::clustering::ClusterId;
use flowplace::dataflow::DataflowGraph;
use flowplace::pipeline::{run_on_netlist, PipelineConfig};
use flowplace::placer::{evaluate_sequence_pair, Floorplan, LossConfig, LossVariant, PlacedMacro, Schedule, SequencePair};
use flowplace::render::{render_svg, SvgOptions};
use flowplace::synth::{generate, SynthConfig};
use wasm_bindgen::prelude::*;

#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct DemoRun {
    svg: String,
    report: String,
    hpwl: f64,
    overflow: f64,
}

#[wasm_bindgen]
impl DemoRun {
    #[wasm_bindgen(getter)]
    pub fn svg(&self) -> String {
        self.svg.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn report(&self) -> String {
        self.report.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn hpwl(&self) -> f64 {
        self.hpwl
    }

    #[wasm_bindgen(getter)]
    pub fn overflow(&self) -> f64 {
        self.overflow
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DemoParams {
    pub macros: usize,
    pub blocks: usize,
    pub cells_per_block: usize,
    pub bus_bits: u32,
    pub seed: u32,
    pub finetune: bool,
    pub heat: bool,
    pub edges: bool,
}

/// `eq5`, `eq6`, `eq8` or `agnostic` (macro-macro edges only).
pub fn loss_config(name: &str) -> Result<LossConfig, String> {
    match name {
        "agnostic" => Ok(LossConfig::dataflow_agnostic()),
        other => Ok(LossConfig {
            variant: other.parse::<LossVariant>()?,
            ..LossConfig::default()
        }),
    }
}

pub fn place(p: DemoParams, loss: &str) -> Result<DemoRun, String> {
    let netlist = generate(&SynthConfig {
        macros: p.macros.clamp(1, 24),
        blocks: p.blocks.clamp(1, 12),
        cells_per_block: p.cells_per_block.clamp(1, 1000),
        bus_bits: p.bus_bits.min(256),
        seed: u64::from(p.seed),
        ..SynthConfig::default()
    });
    let mut config = PipelineConfig {
        seed: u64::from(p.seed),
        loss: loss_config(loss)?,
        sa: Schedule {
            moves_per_temp: 100,
            ..Schedule::default()
        },
        ..PipelineConfig::default()
    };
    config.flip.enabled = p.finetune;
    config.output.svg_heat = p.heat;
    config.output.svg_edges = p.edges;
    let run = run_on_netlist(netlist, &config, 0.0).map_err(|e| e.to_string())?;
    let report = run.report.clone().ok_or("pipeline produced no report")?;
    let svg = run
        .artifacts()
        .into_iter()
        .find(|(name, _)| name.ends_with(".svg"))
        .map(|(_, text)| text)
        .ok_or("pipeline produced no layout")?;
    Ok(DemoRun {
        svg,
        hpwl: report.hpwl_total,
        overflow: report.congestion_overflow,
        report: report.to_text(),
    })
}

fn numbers<T: std::str::FromStr>(text: &str) -> Result<Vec<T>, String> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|_| format!("`{t}` is not a number")))
        .collect()
}

/// Packs macros from a sequence pair given as index lists and `w h` pairs
/// separated by `;`, and renders the packing.
pub fn sequence_pair_svg(pos: &str, neg: &str, sizes: &str) -> Result<String, String> {
    let sp = SequencePair {
        pos: numbers(pos)?,
        neg: numbers(neg)?,
    };
    let sizes: Vec<(f64, f64)> = sizes
        .split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|s| match numbers::<f64>(s)?.as_slice() {
            [w, h] if *w > 0.0 && *h > 0.0 => Ok((*w, *h)),
            _ => Err(format!("size `{}` should be two positive numbers", s.trim())),
        })
        .collect::<Result<_, _>>()?;
    let placed = evaluate_sequence_pair(&sp, &sizes).map_err(|e| e.to_string())?;
    let (mut w, mut h) = (0.0f64, 0.0f64);
    for (p, (mw, mh)) in placed.iter().zip(&sizes) {
        w = w.max(p.x + mw);
        h = h.max(p.y + mh);
    }
    let fp = Floorplan {
        outline: Outline::new(w.max(1.0), h.max(1.0)),
        macros: placed
            .iter()
            .zip(&sizes)
            .enumerate()
            .map(|(i, (p, &(mw, mh)))| PlacedMacro {
                cluster: ClusterId(i),
                name: format!("m{i}"),
                x: p.x,
                y: p.y,
                width: mw,
                height: mh,
                pin_offset: Point::new(0.5 * mw, 0.5 * mh),
                orientation: Orientation::N,
            })
            .collect(),
        cluster_positions: Default::default(),
        io_anchors: Default::default(),
    };
    let mut svg = render_svg(&fp, &DataflowGraph::default(), None, &SvgOptions::default());
    let mut labels = String::new();
    for m in &fp.macros {
        let _ = writeln!(
            labels,
            r#"<text x="{:.3}" y="{:.3}" font-size="{:.3}" text-anchor="middle">{}</text>"#,
            m.x + 0.5 * m.width,
            fp.outline.height - m.y - 0.5 * m.height,
            0.4 * m.width.min(m.height),
            m.name
        );
    }
    svg.insert_str(svg.len() - "</svg>\n".len(), &labels);
    Ok(svg)
}

/// Runs the same design under two losses and returns both results.
pub fn compare(p: DemoParams, a: &str, b: &str) -> Result<(DemoRun, DemoRun), String> {
    Ok((place(p, a)?, place(p, b)?))
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen(js_name = placeSynthetic)]
pub fn place_synthetic(
    macros: usize,
    blocks: usize,
    cells_per_block: usize,
    bus_bits: u32,
    seed: u32,
    loss: &str,
    finetune: bool,
    heat: bool,
    edges: bool,
) -> Result<DemoRun, JsError> {
    let p = DemoParams { macros, blocks, cells_per_block, bus_bits, seed, finetune, heat, edges };
    place(p, loss).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = sequencePairSvg)]
pub fn sequence_pair_svg_js(pos: &str, neg: &str, sizes: &str) -> Result<String, JsError> {
    sequence_pair_svg(pos, neg, sizes).map_err(|e| JsError::new(&e))
}

/// Dataflow-aware (eq8) against dataflow-agnostic placement of one design.
#[wasm_bindgen(js_name = compareLosses)]
pub fn compare_losses(macros: usize, blocks: usize, cells_per_block: usize, bus_bits: u32, seed: u32) -> Result<Vec<DemoRun>, JsError> {
    let p = DemoParams { macros, blocks, cells_per_block, bus_bits, seed, finetune: true, heat: false, edges: false };
    let (a, b) = compare(p, "eq8", "agnostic").map_err(|e| JsError::new(&e))?;
    Ok(vec![a, b])
}
