use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Floorplan, PlacerError};
use crate::clustering::{ClusterId, ClusteredNetlist};
use crate::dataflow::{DataflowGraph, EdgeKind};
use crate::geom::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GpConfig {
    pub iterations: usize,
    /// Blend factor toward the density-spread target, in `[0, 1]`.
    pub spread: f64,
    /// Initial jitter as a fraction of the outline size.
    pub jitter: f64,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            iterations: 60,
            spread: 0.3,
            jitter: 0.01,
        }
    }
}

struct Pull {
    weight: f64,
    target: Target,
}

enum Target {
    Movable(usize),
    Fixed(Point),
}

/// Places every cell cluster by weighted-barycenter iterations with a
/// row/column density spreading step after each one.
///
/// IO anchors are always fixed. Macro pin-centers act as fixed anchors only
/// when `fix_macros` is set. Existing positions in `fp.cluster_positions`
/// seed the iteration; missing ones start near the outline center.
pub fn global_place_clusters<R: Rng + ?Sized>(
    fp: &mut Floorplan,
    cn: &ClusteredNetlist,
    graph: &DataflowGraph,
    fix_macros: bool,
    config: &GpConfig,
    rng: &mut R,
) -> Result<(), PlacerError> {
    let cells: Vec<ClusterId> = cn.cell_clusters().map(|c| c.id).collect();
    if cells.is_empty() {
        return Err(PlacerError::EmptyGraph);
    }
    let slot = |id: ClusterId| cells.binary_search(&id).ok();
    let fixed = |id: ClusterId| -> Option<Point> {
        if let Some(p) = fp.io_anchors.get(&id) {
            return Some(*p);
        }
        if fix_macros {
            return fp
                .macros
                .iter()
                .find(|m| m.cluster == id)
                .map(|m| m.pin_center());
        }
        None
    };

    let mut pulls: Vec<Vec<Pull>> = (0..cells.len()).map(|_| Vec::new()).collect();
    for e in graph.edges() {
        match e.kind {
            EdgeKind::Cc => {
                if let (Some(a), Some(b)) = (slot(e.src), slot(e.dst)) {
                    pulls[a].push(Pull { weight: e.weight, target: Target::Movable(b) });
                    pulls[b].push(Pull { weight: e.weight, target: Target::Movable(a) });
                }
            }
            EdgeKind::Mc => {
                let (cell, other) = match (slot(e.src), slot(e.dst)) {
                    (Some(a), None) => (a, e.dst),
                    (None, Some(b)) => (b, e.src),
                    _ => continue,
                };
                if let Some(p) = fixed(other) {
                    pulls[cell].push(Pull { weight: e.weight, target: Target::Fixed(p) });
                }
            }
            _ => {}
        }
    }

    let outline = fp.outline;
    let center = outline.center();
    let connected: Vec<bool> = pulls
        .iter()
        .map(|p| p.iter().any(|p| p.weight > 0.0))
        .collect();
    let mut pos: Vec<Point> = cells
        .iter()
        .zip(&connected)
        .map(|(id, &conn)| match fp.cluster_positions.get(id) {
            Some(p) if conn => *p,
            _ if conn => {
                let jx = (rng.gen::<f64>() - 0.5) * config.jitter * outline.width;
                let jy = (rng.gen::<f64>() - 0.5) * config.jitter * outline.height;
                outline.clamp(Point::new(center.x + jx, center.y + jy))
            }
            _ => center,
        })
        .collect();
    let areas: Vec<f64> = cells
        .iter()
        .map(|&id| cn.cluster(id).area.max(f64::MIN_POSITIVE))
        .collect();
    let movable: Vec<usize> = (0..cells.len()).filter(|&i| connected[i]).collect();

    for _ in 0..config.iterations {
        let prev = pos.clone();
        for &i in &movable {
            let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
            for p in &pulls[i] {
                let q = match p.target {
                    Target::Movable(j) => prev[j],
                    Target::Fixed(q) => q,
                };
                sx += p.weight * q.x;
                sy += p.weight * q.y;
                sw += p.weight;
            }
            if sw > 0.0 {
                pos[i] = Point::new(sx / sw, sy / sw);
            }
        }
        spread(&mut pos, &movable, &areas, fp, config.spread);
    }

    for (id, p) in cells.iter().zip(pos) {
        fp.cluster_positions.insert(*id, outline.clamp(p));
    }
    Ok(())
}

/// Moves clusters toward area-proportional slots within their row (for x)
/// and column (for y) of a `ceil(sqrt(n))` grid.
fn spread(pos: &mut [Point], movable: &[usize], areas: &[f64], fp: &Floorplan, s: f64) {
    if movable.is_empty() || s <= 0.0 {
        return;
    }
    let (w, h) = (fp.outline.width, fp.outline.height);
    let g = (movable.len() as f64).sqrt().ceil() as usize;
    let bin = |v: f64, extent: f64| ((v / extent * g as f64).floor().max(0.0) as usize).min(g - 1);

    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); g];
    let mut cols: Vec<Vec<usize>> = vec![Vec::new(); g];
    for &i in movable {
        rows[bin(pos[i].y, h)].push(i);
        cols[bin(pos[i].x, w)].push(i);
    }
    let mut tx = vec![0.0; pos.len()];
    let mut ty = vec![0.0; pos.len()];
    for row in &mut rows {
        row.sort_by(|&a, &b| pos[a].x.total_cmp(&pos[b].x).then(a.cmp(&b)));
        let total: f64 = row.iter().map(|&i| areas[i]).sum();
        let mut cum = 0.0;
        for &i in row.iter() {
            tx[i] = w * (cum + 0.5 * areas[i]) / total;
            cum += areas[i];
        }
    }
    for col in &mut cols {
        col.sort_by(|&a, &b| pos[a].y.total_cmp(&pos[b].y).then(a.cmp(&b)));
        let total: f64 = col.iter().map(|&i| areas[i]).sum();
        let mut cum = 0.0;
        for &i in col.iter() {
            ty[i] = h * (cum + 0.5 * areas[i]) / total;
            cum += areas[i];
        }
    }
    for &i in movable {
        let p = Point::new(
            (1.0 - s) * pos[i].x + s * tx[i],
            (1.0 - s) * pos[i].y + s * ty[i],
        );
        pos[i] = fp.outline.clamp(p);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::{Cluster, ClusterKind};
    use crate::dataflow::DataflowEdge;
    use crate::geom::{Outline, Side};
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cluster(id: usize, kind: ClusterKind, io: Option<Side>) -> Cluster {
        Cluster {
            id: ClusterId(id),
            name: format!("c{id}"),
            kind,
            members: vec![],
            hierarchy_root: vec![],
            area: 10.0,
            instance_count: 1,
            io_side: io,
        }
    }

    fn netlist(cells: usize, ios: &[Side]) -> ClusteredNetlist {
        let mut clusters: Vec<Cluster> =
            (0..cells).map(|i| cluster(i, ClusterKind::CellCluster, None)).collect();
        for (k, s) in ios.iter().enumerate() {
            clusters.push(cluster(cells + k, ClusterKind::MacroCluster, Some(*s)));
        }
        ClusteredNetlist {
            clusters,
            instance_to_cluster: Vec::new(),
            edges: vec![],
        }
    }

    fn mc(src: usize, dst: usize, w: f64) -> DataflowEdge {
        DataflowEdge {
            kind: EdgeKind::Mc,
            src: ClusterId(src),
            via: None,
            dst: ClusterId(dst),
            bit_width: w as u64,
            weight: w,
            w1: 0.0,
        }
    }

    fn floorplan(cn: &ClusteredNetlist) -> Floorplan {
        Floorplan::new(Outline::new(100.0, 60.0), cn, &[])
    }

    #[test]
    fn isolated_cluster_sits_at_center() {
        let cn = netlist(1, &[]);
        let mut fp = floorplan(&cn);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        global_place_clusters(&mut fp, &cn, &DataflowGraph::default(), true, &GpConfig::default(), &mut rng).unwrap();
        assert_eq!(fp.cluster_positions[&ClusterId(0)], Point::new(50.0, 30.0));
    }

    #[test]
    fn symmetric_anchors_pull_to_center() {
        let cn = netlist(1, &[Side::W, Side::E]);
        let mut fp = floorplan(&cn);
        let g = DataflowGraph::from_edges(vec![mc(1, 0, 4.0), mc(0, 2, 4.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        global_place_clusters(&mut fp, &cn, &g, true, &GpConfig::default(), &mut rng).unwrap();
        let p = fp.cluster_positions[&ClusterId(0)];
        assert!((p.x - 50.0).abs() < 1e-9 && (p.y - 30.0).abs() < 1e-9, "{p:?}");
    }

    #[test]
    fn single_anchor_attracts() {
        let cn = netlist(1, &[Side::W]);
        let mut fp = floorplan(&cn);
        let g = DataflowGraph::from_edges(vec![mc(1, 0, 1.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        global_place_clusters(&mut fp, &cn, &g, true, &GpConfig::default(), &mut rng).unwrap();
        assert!(fp.cluster_positions[&ClusterId(0)].x < 25.0);
    }

    #[test]
    fn no_cell_clusters() {
        let cn = netlist(0, &[Side::W]);
        let mut fp = floorplan(&cn);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            global_place_clusters(&mut fp, &cn, &DataflowGraph::default(), true, &GpConfig::default(), &mut rng),
            Err(PlacerError::EmptyGraph)
        );
    }

    #[test]
    fn deterministic_and_inside_outline() {
        let cn = netlist(9, &[Side::W, Side::N]);
        let mut edges = vec![mc(9, 0, 3.0), mc(10, 4, 2.0)];
        for i in 0..8 {
            edges.push(DataflowEdge { kind: EdgeKind::Cc, ..mc(i, i + 1, 1.0 + i as f64) });
        }
        let g = DataflowGraph::from_edges(edges);
        let run = || {
            let mut fp = floorplan(&cn);
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            global_place_clusters(&mut fp, &cn, &g, true, &GpConfig::default(), &mut rng).unwrap();
            fp.cluster_positions
        };
        let a = run();
        assert_eq!(a, run());
        for p in a.values() {
            assert!((0.0..=100.0).contains(&p.x) && (0.0..=60.0).contains(&p.y));
        }
    }
}
