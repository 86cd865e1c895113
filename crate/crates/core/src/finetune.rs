//! Orientation fine-tuning: mirror each macro so its pins face the dominant
//! direction of its dataflow.
//!
//! Mode names follow the axis being mirrored across: `FN` mirrors across the
//! horizontal centerline (pins move up and down), `FS` across the vertical
//! centerline (pins move left and right), `S` both. This is not the DEF
//! convention.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::ClusterId;
use crate::dataflow::{DataflowGraph, EdgeKind};
use crate::geom::{Orientation, Point};
use crate::metrics::{wirelength, MetricsError};
use crate::placer::Floorplan;

#[derive(Debug, Error, PartialEq)]
pub enum FinetuneError {
    #[error("geometric center of a cluster with no members")]
    EmptyCluster,
    #[error("cluster {0:?} has no position")]
    UnplacedCluster(ClusterId),
    #[error("macro index {0} out of range")]
    UnknownMacro(usize),
}

impl From<MetricsError> for FinetuneError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::UnplacedCluster(c) => FinetuneError::UnplacedCluster(c),
            _ => FinetuneError::EmptyCluster,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlipConfig {
    pub enabled: bool,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Revert flips that increase total HPWL.
    pub guard: bool,
}

impl Default for FlipConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            alpha: 0.55,
            beta: 0.30,
            gamma: 0.15,
            guard: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FlipVector {
    pub v_mm: Point,
    pub v_mc: Point,
    pub v_mcc: Point,
    pub v_t: Point,
}

impl FlipVector {
    pub fn combine(v_mm: Point, v_mc: Point, v_mcc: Point, alpha: f64, beta: f64, gamma: f64) -> Self {
        Self {
            v_mm,
            v_mc,
            v_mcc,
            v_t: v_mm * alpha + v_mc * beta + v_mcc * gamma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipDecision {
    pub macro_id: ClusterId,
    pub name: String,
    pub mode: Orientation,
    pub v_t: Point,
    pub pre_hpwl: f64,
    pub post_hpwl: f64,
    pub applied: bool,
}

/// Mean of member positions.
pub fn geometric_center(members: &[Point]) -> Result<Point, FinetuneError> {
    if members.is_empty() {
        return Err(FinetuneError::EmptyCluster);
    }
    let sum = members.iter().fold(Point::default(), |acc, p| acc + *p);
    Ok(sum * (1.0 / members.len() as f64))
}

/// Dataflow vectors of one macro (by index into `fp.macros`), measured from
/// its current pin-center.
pub fn decompose_dataflow_vectors(
    index: usize,
    graph: &DataflowGraph,
    fp: &Floorplan,
    config: &FlipConfig,
) -> Result<FlipVector, FinetuneError> {
    let m = fp.macros.get(index).ok_or(FinetuneError::UnknownMacro(index))?;
    let id = m.cluster;
    let pin = m.pin_center();
    let at = |c: ClusterId| fp.reference_point(c).ok_or(FinetuneError::UnplacedCluster(c));
    let (mut v_mm, mut v_mc, mut v_mcc) = (Point::default(), Point::default(), Point::default());
    for e in graph.edges() {
        if !e.touches(id) {
            continue;
        }
        let peer = if e.src == id { e.dst } else { e.src };
        match e.kind {
            EdgeKind::MmDirect | EdgeKind::MmIndirect => {
                v_mm = v_mm + (at(peer)? - pin) * e.bit_width as f64;
            }
            EdgeKind::Mc => {
                let center = geometric_center(&[at(peer)?])?;
                v_mc = v_mc + (center - pin) * e.weight;
            }
            EdgeKind::Mcc if e.src == id => {
                let via = e.via.expect("two-hop edge has an intermediate cluster");
                let mid = at(via)?.midpoint(at(e.dst)?);
                v_mcc = v_mcc + (mid - pin) * e.weight;
            }
            _ => {}
        }
    }
    Ok(FlipVector::combine(v_mm, v_mc, v_mcc, config.alpha, config.beta, config.gamma))
}

/// Breadth-first order from the macros that touch IO clusters. Each level is
/// sorted by descending incident weight, then id; unreachable macros follow
/// in id order.
pub fn order_macros_for_flipping(graph: &DataflowGraph, fp: &Floorplan) -> Vec<ClusterId> {
    let is_io = |c: ClusterId| fp.io_anchors.contains_key(&c);
    let macros: BTreeSet<ClusterId> = fp.macros.iter().map(|m| m.cluster).collect();
    let mut adj: BTreeMap<ClusterId, BTreeSet<ClusterId>> = BTreeMap::new();
    let mut incident: BTreeMap<ClusterId, f64> = BTreeMap::new();
    let mut frontier: BTreeSet<ClusterId> = BTreeSet::new();
    for e in graph.edges() {
        let mut hops = vec![(e.src, e.dst)];
        if let Some(v) = e.via {
            hops = vec![(e.src, v), (v, e.dst)];
        }
        *incident.entry(e.src).or_default() += e.weight;
        *incident.entry(e.dst).or_default() += e.weight;
        for (a, b) in hops {
            match (is_io(a), is_io(b)) {
                (false, false) => {
                    adj.entry(a).or_default().insert(b);
                    adj.entry(b).or_default().insert(a);
                }
                (true, false) if macros.contains(&b) => {
                    frontier.insert(b);
                }
                (false, true) if macros.contains(&a) => {
                    frontier.insert(a);
                }
                _ => {}
            }
        }
    }

    let sort_level = |level: &mut Vec<ClusterId>| {
        level.sort_by(|a, b| {
            let (wa, wb) = (incident.get(a).unwrap_or(&0.0), incident.get(b).unwrap_or(&0.0));
            wb.total_cmp(wa).then(a.cmp(b))
        })
    };
    let mut seen: BTreeSet<ClusterId> = frontier.clone();
    let mut level: Vec<ClusterId> = frontier.into_iter().collect();
    let mut order = Vec::new();
    while !level.is_empty() {
        sort_level(&mut level);
        let mut next = Vec::new();
        for &c in &level {
            if macros.contains(&c) {
                order.push(c);
            }
            for &n in adj.get(&c).into_iter().flatten() {
                if seen.insert(n) {
                    next.push(n);
                }
            }
        }
        level = next;
    }
    order.extend(macros.iter().filter(|c| !seen.contains(c)));
    order
}

/// Mirror that aligns the pin offset with the dataflow, per axis.
pub fn flip_mode(v_t: Point, pin: Point, center: Point) -> Orientation {
    let (dx, dy) = (pin.x - center.x, pin.y - center.y);
    let misaligned = |v: f64, d: f64| v != 0.0 && d != 0.0 && (v > 0.0) != (d > 0.0);
    // dominant axis first; both are independent so the order only fixes the log
    let (h, v) = if v_t.x.abs() >= v_t.y.abs() {
        let h = misaligned(v_t.x, dx);
        (h, misaligned(v_t.y, dy))
    } else {
        let v = misaligned(v_t.y, dy);
        (misaligned(v_t.x, dx), v)
    };
    match (h, v) {
        (true, true) => Orientation::S,
        (true, false) => Orientation::FS,
        (false, true) => Orientation::FN,
        (false, false) => Orientation::N,
    }
}

/// Decides the mirror for one macro and applies it. With `guard`, a flip that
/// raises total HPWL is undone and reported with `applied = false`.
pub fn decide_and_apply_flip(
    index: usize,
    fv: &FlipVector,
    fp: &mut Floorplan,
    graph: &DataflowGraph,
    guard: bool,
) -> Result<FlipDecision, FinetuneError> {
    let m = fp.macros.get(index).ok_or(FinetuneError::UnknownMacro(index))?;
    let mode = flip_mode(fv.v_t, m.pin_center(), m.center());
    let pre = wirelength(fp, graph)?.hpwl_total;
    let mut decision = FlipDecision {
        macro_id: m.cluster,
        name: m.name.clone(),
        mode,
        v_t: fv.v_t,
        pre_hpwl: pre,
        post_hpwl: pre,
        applied: false,
    };
    if mode == Orientation::N {
        return Ok(decision);
    }
    let before = fp.macros[index].orientation;
    fp.macros[index].orientation = before.then(mode);
    decision.post_hpwl = wirelength(fp, graph)?.hpwl_total;
    if guard && decision.post_hpwl > pre {
        fp.macros[index].orientation = before;
    } else {
        decision.applied = true;
    }
    Ok(decision)
}

/// One ordered pass over all macros. Vectors see the flips already made.
pub fn flip_pass(
    fp: &mut Floorplan,
    graph: &DataflowGraph,
    config: &FlipConfig,
) -> Result<Vec<FlipDecision>, FinetuneError> {
    let order = order_macros_for_flipping(graph, fp);
    let mut out = Vec::with_capacity(order.len());
    for id in order {
        let index = fp.macro_index(id).expect("ordered ids come from the floorplan");
        let fv = decompose_dataflow_vectors(index, graph, fp, config)?;
        out.push(decide_and_apply_flip(index, &fv, fp, graph, config.guard)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataflow::DataflowEdge;
    use crate::geom::Outline;
    use crate::placer::PlacedMacro;

    fn placed(id: usize, x: f64, y: f64, pin: Point) -> PlacedMacro {
        PlacedMacro {
            cluster: ClusterId(id),
            name: format!("m{id}"),
            x,
            y,
            width: 4.0,
            height: 2.0,
            pin_offset: pin,
            orientation: Orientation::N,
        }
    }

    fn edge(kind: EdgeKind, src: usize, via: Option<usize>, dst: usize, bw: u64, weight: f64) -> DataflowEdge {
        DataflowEdge {
            kind,
            src: ClusterId(src),
            via: via.map(ClusterId),
            dst: ClusterId(dst),
            bit_width: bw,
            weight,
            w1: 1.0,
        }
    }

    fn fp(macros: Vec<PlacedMacro>) -> Floorplan {
        Floorplan {
            outline: Outline::new(100.0, 100.0),
            macros,
            cluster_positions: BTreeMap::new(),
            io_anchors: BTreeMap::new(),
        }
    }

    #[test]
    fn center_examples() {
        assert_eq!(
            geometric_center(&[Point::new(0.0, 0.0), Point::new(4.0, 2.0)]),
            Ok(Point::new(2.0, 1.0))
        );
        assert_eq!(geometric_center(&[Point::new(5.0, 5.0)]), Ok(Point::new(5.0, 5.0)));
        assert_eq!(geometric_center(&[]), Err(FinetuneError::EmptyCluster));
    }

    #[test]
    fn mm_vector_superposition() {
        // macro 0 pin-center at (10, 10); peers at (13, 14) and (7, 10)
        let mut f = fp(vec![
            placed(0, 9.0, 9.0, Point::new(1.0, 1.0)),
            placed(1, 12.0, 13.0, Point::new(1.0, 1.0)),
        ]);
        f.io_anchors.insert(ClusterId(2), Point::new(7.0, 10.0));
        let one = DataflowGraph::from_edges(vec![edge(EdgeKind::MmDirect, 0, None, 1, 2, 2.0)]);
        let fv = decompose_dataflow_vectors(0, &one, &f, &FlipConfig::default()).unwrap();
        assert_eq!(fv.v_mm, Point::new(6.0, 8.0));
        let two = DataflowGraph::from_edges(vec![
            edge(EdgeKind::MmDirect, 0, None, 1, 2, 2.0),
            edge(EdgeKind::MmDirect, 0, None, 2, 2, 2.0),
        ]);
        let fv = decompose_dataflow_vectors(0, &two, &f, &FlipConfig::default()).unwrap();
        assert_eq!(fv.v_mm, Point::new(0.0, 8.0));
    }

    #[test]
    fn weighted_sum() {
        let c = FlipConfig::default();
        let fv = FlipVector::combine(
            Point::new(10.0, 0.0),
            Point::new(0.0, 10.0),
            Point::new(10.0, 10.0),
            c.alpha,
            c.beta,
            c.gamma,
        );
        assert!((fv.v_t.x - 7.0).abs() < 1e-12 && (fv.v_t.y - 4.5).abs() < 1e-12);
    }

    #[test]
    fn mc_and_mcc_vectors() {
        let mut f = fp(vec![placed(0, 0.0, 0.0, Point::new(2.0, 1.0))]);
        f.cluster_positions.insert(ClusterId(1), Point::new(5.0, 1.0));
        f.cluster_positions.insert(ClusterId(2), Point::new(2.0, 9.0));
        let g = DataflowGraph::from_edges(vec![
            edge(EdgeKind::Mc, 0, None, 1, 1, 2.0),
            edge(EdgeKind::Mcc, 0, Some(1), 2, 1, 0.5),
        ]);
        let fv = decompose_dataflow_vectors(0, &g, &f, &FlipConfig::default()).unwrap();
        assert_eq!(fv.v_mc, Point::new(6.0, 0.0));
        // midpoint (3.5, 5) minus pin (2, 1)
        assert_eq!(fv.v_mcc, Point::new(0.75, 2.0));
    }

    #[test]
    fn order_from_io() {
        let mut f = fp(vec![
            placed(0, 0.0, 0.0, Point::default()),
            placed(1, 10.0, 0.0, Point::default()),
            placed(2, 20.0, 0.0, Point::default()),
            placed(3, 30.0, 0.0, Point::default()),
        ]);
        f.io_anchors.insert(ClusterId(9), Point::new(0.0, 50.0));
        let g = DataflowGraph::from_edges(vec![
            edge(EdgeKind::MmDirect, 1, None, 9, 8, 8.0),
            edge(EdgeKind::MmDirect, 2, None, 9, 12, 12.0),
            edge(EdgeKind::MmDirect, 0, None, 1, 1, 1.0),
        ]);
        let order = order_macros_for_flipping(&g, &f);
        assert_eq!(order, vec![ClusterId(2), ClusterId(1), ClusterId(0), ClusterId(3)]);
    }

    #[test]
    fn flips_toward_dataflow() {
        // pins on the left, dataflow to the right
        let mut f = fp(vec![placed(0, 10.0, 10.0, Point::new(1.0, 1.0))]);
        f.cluster_positions.insert(ClusterId(1), Point::new(40.0, 11.0));
        let g = DataflowGraph::from_edges(vec![edge(EdgeKind::Mc, 0, None, 1, 4, 4.0)]);
        let fv = decompose_dataflow_vectors(0, &g, &f, &FlipConfig::default()).unwrap();
        let d = decide_and_apply_flip(0, &fv, &mut f, &g, true).unwrap();
        assert_eq!(d.mode, Orientation::FS);
        assert!(d.applied && d.post_hpwl < d.pre_hpwl);
        assert_eq!(f.macros[0].pin_center(), Point::new(13.0, 11.0));
    }

    #[test]
    fn centered_pins_never_flip() {
        let m = placed(0, 0.0, 0.0, Point::new(2.0, 1.0));
        for v in [Point::new(5.0, -3.0), Point::new(-1.0, 0.0), Point::new(0.0, 0.0)] {
            assert_eq!(flip_mode(v, m.pin_center(), m.center()), Orientation::N);
        }
    }

    #[test]
    fn guard_reverts_worsening_flip() {
        let mut f = fp(vec![placed(0, 10.0, 10.0, Point::new(1.0, 1.0))]);
        f.cluster_positions.insert(ClusterId(1), Point::new(0.0, 11.0));
        let g = DataflowGraph::from_edges(vec![edge(EdgeKind::Mc, 0, None, 1, 1, 1.0)]);
        let fv = FlipVector { v_t: Point::new(1.0, 0.0), ..Default::default() };
        let before = f.clone();
        let d = decide_and_apply_flip(0, &fv, &mut f, &g, true).unwrap();
        assert_eq!(d.mode, Orientation::FS);
        assert!(!d.applied && d.post_hpwl > d.pre_hpwl);
        assert_eq!(f, before);
        let d = decide_and_apply_flip(0, &fv, &mut f, &g, false).unwrap();
        assert!(d.applied);
    }

    #[test]
    fn double_flip_restores_pins() {
        let mut m = placed(0, 3.3, 7.1, Point::new(0.1, 0.7));
        let orig = m.pin_center();
        for mode in [Orientation::FS, Orientation::FN, Orientation::S] {
            m.orientation = m.orientation.then(mode).then(mode);
            assert_eq!(m.pin_center(), orig);
        }
    }
}
