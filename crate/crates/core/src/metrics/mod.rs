//! Wirelength, congestion and run reports.

mod congestion;
mod report;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::ClusterId;
use crate::dataflow::{DataflowEdge, DataflowGraph, EdgeKind};
use crate::geom::Point;
use crate::placer::Floorplan;

pub use congestion::{auto_capacity, congestion, edge_deposit, CongestionGrid};
pub use report::{emit_report, flip_log, RunReport, StageTiming};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("HPWL of an empty point set")]
    EmptyPointSet,
    #[error("cluster {0:?} has no position")]
    UnplacedCluster(ClusterId),
    #[error("invalid congestion grid: {0}")]
    BadGrid(String),
}

/// Half-perimeter of the bounding box of `points`.
pub fn hpwl(points: &[Point]) -> Result<f64, MetricsError> {
    let first = points.first().ok_or(MetricsError::EmptyPointSet)?;
    let (mut x0, mut x1, mut y0, mut y1) = (first.x, first.x, first.y, first.y);
    for p in &points[1..] {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    Ok((x1 - x0) + (y1 - y0))
}

/// Bit-width weighted HPWL, in total and per edge class.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Wirelength {
    pub hpwl_total: f64,
    pub wl_mm: f64,
    pub wl_mc: f64,
    pub wl_mcc: f64,
    pub wl_cc: f64,
}

pub(crate) fn endpoints(
    points: &[Option<Point>],
    e: &DataflowEdge,
) -> Result<(Point, Point), MetricsError> {
    let at = |id: ClusterId| {
        points
            .get(id.0)
            .copied()
            .flatten()
            .ok_or(MetricsError::UnplacedCluster(id))
    };
    let (a, b) = e.endpoints();
    Ok((at(a)?, at(b)?))
}

/// Sums `bit_width * HPWL` over every edge of the graph. Two-hop edges are
/// measured between the macro and the second-hop cluster.
pub fn wirelength(fp: &Floorplan, graph: &DataflowGraph) -> Result<Wirelength, MetricsError> {
    let points = fp.reference_points();
    let mut wl = Wirelength::default();
    for e in graph.edges() {
        let (a, b) = endpoints(&points, e)?;
        let v = e.bit_width as f64 * a.manhattan(b);
        match e.kind {
            EdgeKind::MmDirect | EdgeKind::MmIndirect => wl.wl_mm += v,
            EdgeKind::Mc => wl.wl_mc += v,
            EdgeKind::Mcc => wl.wl_mcc += v,
            EdgeKind::Cc => wl.wl_cc += v,
        }
        wl.hpwl_total += v;
    }
    Ok(wl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hpwl_examples() {
        assert_eq!(hpwl(&[Point::new(0.0, 0.0), Point::new(2.0, 3.0)]), Ok(5.0));
        assert_eq!(hpwl(&[Point::new(7.0, -1.0)]), Ok(0.0));
        assert_eq!(
            hpwl(&[Point::new(0.0, 0.0), Point::new(1.0, 1.0), Point::new(3.0, 0.0)]),
            Ok(4.0)
        );
        assert_eq!(hpwl(&[]), Err(MetricsError::EmptyPointSet));
    }

    fn points() -> impl Strategy<Value = Vec<Point>> {
        prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..30)
            .prop_map(|v| v.into_iter().map(|(x, y)| Point::new(x, y)).collect())
    }

    proptest! {
        #[test]
        fn translation_invariant(ps in points(), dx in -100i32..100, dy in -100i32..100) {
            let moved: Vec<Point> = ps.iter().map(|p| Point::new(p.x + dx as f64, p.y + dy as f64)).collect();
            let (a, b) = (hpwl(&ps).unwrap(), hpwl(&moved).unwrap());
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
        }

        #[test]
        fn scales_linearly(ps in points(), k in 0.0f64..50.0) {
            let scaled: Vec<Point> = ps.iter().map(|p| *p * k).collect();
            let (a, b) = (hpwl(&ps).unwrap(), hpwl(&scaled).unwrap());
            prop_assert!((k * a - b).abs() <= 1e-9 * (k * a).max(1.0));
        }
    }
}
