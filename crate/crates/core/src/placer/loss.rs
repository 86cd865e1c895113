use serde::{Deserialize, Serialize};

use super::{Floorplan, PlacedMacro, PlacerError};
use crate::dataflow::{DataflowGraph, EdgeKind};
use crate::geom::{Outline, Point};

/// How the two-hop macro-cell-cell term is weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossVariant {
    /// `w2 * WL`: cell-cell hop strength only.
    Eq5,
    /// `w1 * w2 * WL`: hop strengths coupled.
    Eq6,
    /// `sqrt(w1 * w2) / A' * WL`: coupled and damped by normalized macro area.
    #[default]
    Eq8,
}

impl std::str::FromStr for LossVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "eq5" => Ok(LossVariant::Eq5),
            "eq6" => Ok(LossVariant::Eq6),
            "eq8" => Ok(LossVariant::Eq8),
            other => Err(format!("unknown loss variant `{other}` (eq5|eq6|eq8)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossConfig {
    pub variant: LossVariant,
    /// Include virtual macro-macro edges in the macro-macro term.
    pub include_indirect: bool,
    /// Multiplier on macro-cell weights; 0 drops the term.
    pub mc_scale: f64,
    /// Multiplier on two-hop weights; 0 drops the term.
    pub mcc_scale: f64,
    /// Outline penalty strength relative to the summed dataflow weight.
    pub outline_weight: f64,
    /// Push-boundary weight per unit of macro-to-edge distance; 0 disables it.
    pub boundary_weight: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            variant: LossVariant::Eq8,
            include_indirect: true,
            mc_scale: 1.0,
            mcc_scale: 1.0,
            outline_weight: 100.0,
            boundary_weight: 0.0,
        }
    }
}

impl LossConfig {
    /// Classic macro-only objective: direct macro-macro edges alone.
    pub fn dataflow_agnostic() -> Self {
        Self {
            include_indirect: false,
            mc_scale: 0.0,
            mcc_scale: 0.0,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub wl_mm: f64,
    pub wl_mc: f64,
    pub wl_mcc: f64,
    pub loss_mm: f64,
    pub loss_mc: f64,
    pub loss_mcc: f64,
    pub loss_outline: f64,
    pub loss_boundary: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn dataflow(&self) -> f64 {
        self.loss_mm + self.loss_mc + self.loss_mcc
    }
}

/// Rescales macro areas into `[1, 2]`; all-equal areas map to 1.
pub fn normalize_macro_area(areas: &[f64]) -> Vec<f64> {
    let min = areas.iter().copied().fold(f64::INFINITY, f64::min);
    let max = areas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > min) {
        return vec![1.0; areas.len()];
    }
    areas
        .iter()
        .map(|a| (1.0 + (a - min) / (max - min)).clamp(1.0, 2.0))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Class {
    Mm,
    Mc,
    Mcc,
}

#[derive(Debug, Clone, Copy)]
struct Term {
    a: usize,
    b: usize,
    coef: f64,
    class: Class,
}

/// Loss terms resolved against one floorplan's macro set, so repeated
/// evaluation only needs fresh reference points.
#[derive(Debug, Clone)]
pub struct LossModel {
    terms: Vec<Term>,
    outline: Outline,
    outline_lambda: f64,
    boundary_weight: f64,
}

impl LossModel {
    /// `area_factors` holds the normalized area of each macro in `fp.macros`
    /// order. Two-hop paths starting at IO bundles use 1.
    pub fn new(
        graph: &DataflowGraph,
        fp: &Floorplan,
        area_factors: &[f64],
        config: &LossConfig,
    ) -> Self {
        let mut terms = Vec::with_capacity(graph.edges().len());
        for e in graph.edges() {
            let (class, coef) = match e.kind {
                EdgeKind::MmDirect => (Class::Mm, e.weight),
                EdgeKind::MmIndirect => (
                    Class::Mm,
                    if config.include_indirect { e.weight } else { 0.0 },
                ),
                EdgeKind::Mc => (Class::Mc, config.mc_scale * e.weight),
                EdgeKind::Mcc => {
                    let (w1, w2) = (e.w1, e.weight);
                    let coef = match config.variant {
                        LossVariant::Eq5 => w2,
                        LossVariant::Eq6 => w1 * w2,
                        LossVariant::Eq8 => {
                            let a = fp
                                .macro_index(e.src)
                                .and_then(|i| area_factors.get(i).copied())
                                .unwrap_or(1.0);
                            (w1 * w2).sqrt() / a
                        }
                    };
                    (Class::Mcc, config.mcc_scale * coef)
                }
                EdgeKind::Cc => continue,
            };
            let (a, b) = e.endpoints();
            terms.push(Term {
                a: a.0,
                b: b.0,
                coef,
                class,
            });
        }
        let weight_sum: f64 = terms.iter().map(|t| t.coef.abs()).sum();
        let outline = fp.outline;
        Self {
            terms,
            outline,
            outline_lambda: config.outline_weight * (weight_sum + 1.0)
                / (outline.width + outline.height),
            boundary_weight: config.boundary_weight,
        }
    }

    pub fn evaluate(&self, fp: &Floorplan) -> Result<LossBreakdown, PlacerError> {
        self.evaluate_points(&fp.reference_points(), &fp.macros)
    }

    pub(crate) fn evaluate_points(
        &self,
        points: &[Option<Point>],
        macros: &[PlacedMacro],
    ) -> Result<LossBreakdown, PlacerError> {
        let mut lb = LossBreakdown::default();
        let at = |id: usize| {
            points
                .get(id)
                .copied()
                .flatten()
                .ok_or(PlacerError::UnplacedCluster(crate::clustering::ClusterId(id)))
        };
        for t in &self.terms {
            let wl = at(t.a)?.manhattan(at(t.b)?);
            let (wl_slot, loss_slot) = match t.class {
                Class::Mm => (&mut lb.wl_mm, &mut lb.loss_mm),
                Class::Mc => (&mut lb.wl_mc, &mut lb.loss_mc),
                Class::Mcc => (&mut lb.wl_mcc, &mut lb.loss_mcc),
            };
            *wl_slot += wl;
            *loss_slot += t.coef * wl;
        }

        let (w, h) = (self.outline.width, self.outline.height);
        let mut overhang = 0.0;
        let mut boundary = 0.0;
        for m in macros {
            let ox = (-m.x).max(0.0) + (m.x + m.width - w).max(0.0);
            let oy = (-m.y).max(0.0) + (m.y + m.height - h).max(0.0);
            overhang += ox * ox + oy * oy;
            if self.boundary_weight != 0.0 {
                let d = m.x.min(m.y).min(w - m.x - m.width).min(h - m.y - m.height);
                boundary += d.max(0.0);
            }
        }
        lb.loss_outline = self.outline_lambda * overhang;
        lb.loss_boundary = self.boundary_weight * boundary;
        lb.total = lb.loss_mm + lb.loss_mc + lb.loss_mcc + lb.loss_outline + lb.loss_boundary;
        Ok(lb)
    }
}

/// Dataflow-weighted loss of a floorplan.
pub fn compute_loss(
    fp: &Floorplan,
    graph: &DataflowGraph,
    area_factors: &[f64],
    config: &LossConfig,
) -> Result<LossBreakdown, PlacerError> {
    LossModel::new(graph, fp, area_factors, config).evaluate(fp)
}
