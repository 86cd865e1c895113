use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{wirelength, CongestionGrid, MetricsError};
use crate::dataflow::{DataflowGraph, EdgeKind};
use crate::finetune::FlipDecision;
use crate::placer::{Floorplan, LossBreakdown};

/// Wall-clock seconds per pipeline stage, in execution order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StageTiming {
    pub stages: Vec<(String, f64)>,
}

impl StageTiming {
    pub fn record(&mut self, stage: &str, seconds: f64) {
        self.stages.push((stage.to_string(), seconds));
    }

    pub fn total(&self) -> f64 {
        self.stages.iter().map(|(_, s)| s).sum()
    }

    pub fn seconds(&self, stage: &str) -> Option<f64> {
        self.stages.iter().find(|(n, _)| n == stage).map(|(_, s)| *s)
    }

    /// Fraction of the total per stage. Sums to 1; an all-zero timing splits evenly.
    pub fn shares(&self) -> Vec<(String, f64)> {
        let total = self.total();
        let n = self.stages.len() as f64;
        self.stages
            .iter()
            .map(|(name, s)| (name.clone(), if total > 0.0 { s / total } else { 1.0 / n }))
            .collect()
    }

    pub fn share(&self, stage: &str) -> Option<f64> {
        self.shares().into_iter().find(|(n, _)| n == stage).map(|(_, s)| s)
    }

    pub fn to_json(&self) -> String {
        let stages: Vec<_> = self
            .stages
            .iter()
            .zip(self.shares())
            .map(|((name, s), (_, share))| {
                serde_json::json!({ "stage": name, "seconds": s, "share": share })
            })
            .collect();
        let doc = serde_json::json!({
            "stages": stages,
            "total_seconds": self.total(),
            "extract_share": self.share("extract"),
        });
        serde_json::to_string_pretty(&doc).expect("timing serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub run: String,
    pub seed: u64,
    pub macros: usize,
    pub cell_clusters: usize,
    pub edge_counts: BTreeMap<String, usize>,
    pub hpwl_total: f64,
    pub wl_mm: f64,
    pub wl_mc: f64,
    pub wl_mcc: f64,
    pub wl_cc: f64,
    pub congestion_overflow: f64,
    pub congestion_capacity: f64,
    pub overflowing_bins: usize,
    pub loss: LossBreakdown,
    pub flips: Vec<FlipDecision>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<StageTiming>,
}

/// Collects the metrics of a finished floorplan.
pub fn emit_report(
    fp: &Floorplan,
    graph: &DataflowGraph,
    grid: &CongestionGrid,
    loss: LossBreakdown,
    flips: Vec<FlipDecision>,
    timings: Option<StageTiming>,
) -> Result<RunReport, MetricsError> {
    let wl = wirelength(fp, graph)?;
    Ok(RunReport {
        run: String::new(),
        seed: 0,
        macros: fp.macros.len(),
        cell_clusters: fp.cluster_positions.len(),
        edge_counts: EdgeKind::ALL
            .iter()
            .map(|k| (k.to_string(), graph.count(*k)))
            .collect(),
        hpwl_total: wl.hpwl_total,
        wl_mm: wl.wl_mm,
        wl_mc: wl.wl_mc,
        wl_mcc: wl.wl_mcc,
        wl_cc: wl.wl_cc,
        congestion_overflow: grid.overflow(),
        congestion_capacity: grid.capacity.first().copied().unwrap_or(0.0),
        overflowing_bins: grid.overflowing_bins(),
        loss,
        flips,
        timings,
    })
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "run {}", self.run);
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "macros {}", self.macros);
        let _ = writeln!(out, "cell_clusters {}", self.cell_clusters);
        for (k, n) in &self.edge_counts {
            let _ = writeln!(out, "edges.{k} {n}");
        }
        for (k, v) in [
            ("hpwl_total", self.hpwl_total),
            ("wl_mm", self.wl_mm),
            ("wl_mc", self.wl_mc),
            ("wl_mcc", self.wl_mcc),
            ("wl_cc", self.wl_cc),
            ("congestion_overflow", self.congestion_overflow),
            ("congestion_capacity", self.congestion_capacity),
        ] {
            let _ = writeln!(out, "{k} {v:.6}");
        }
        let _ = writeln!(out, "overflowing_bins {}", self.overflowing_bins);
        let l = &self.loss;
        for (k, v) in [
            ("loss.mm", l.loss_mm),
            ("loss.mc", l.loss_mc),
            ("loss.mcc", l.loss_mcc),
            ("loss.outline", l.loss_outline),
            ("loss.boundary", l.loss_boundary),
            ("loss.total", l.total),
        ] {
            let _ = writeln!(out, "{k} {v:.6}");
        }
        if let Some(t) = &self.timings {
            for ((name, s), (_, share)) in t.stages.iter().zip(t.shares()) {
                let _ = writeln!(out, "time.{name} {s:.6} {share:.4}");
            }
        }
        let _ = writeln!(out, "flips {}", self.flips.len());
        out.push_str(&flip_log(&self.flips));
        out
    }
}

/// `name mode xVt yVt dHPWL applied`, one line per decision.
pub fn flip_log(flips: &[FlipDecision]) -> String {
    let mut out = String::new();
    for f in flips {
        let _ = writeln!(
            out,
            "{} {} {:.6} {:.6} {:.6} {}",
            f.name,
            f.mode,
            f.v_t.x,
            f.v_t.y,
            f.post_hpwl - f.pre_hpwl,
            f.applied
        );
    }
    out
}
