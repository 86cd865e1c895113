use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::clustering::{ClusterId, ClusteredNetlist};
use crate::geom::{Orientation, Outline, Point};
use crate::netlist::Netlist;

/// Footprint of one hard macro cluster, as the annealer sees it.
///
/// Multi-macro clusters are tiled row-major on a near-square grid of
/// their largest member footprint.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroBlock {
    pub cluster: ClusterId,
    pub name: String,
    pub width: f64,
    pub height: f64,
    /// Mean pin position relative to the lower-left corner, unflipped.
    pub pin_offset: Point,
    /// Summed member macro area.
    pub area: f64,
}

/// Builds one block per hard macro cluster, in cluster id order.
pub fn macro_blocks(cn: &ClusteredNetlist, netlist: &Netlist) -> Vec<MacroBlock> {
    cn.hard_macros()
        .map(|c| {
            let masters: Vec<_> = c.members.iter().map(|m| netlist.master_of(*m)).collect();
            let cell_w = masters.iter().map(|m| m.width).fold(0.0, f64::max);
            let cell_h = masters.iter().map(|m| m.height).fold(0.0, f64::max);
            let n = masters.len();
            let cols = (n as f64).sqrt().ceil() as usize;
            let rows = n.div_ceil(cols);

            let mut sum = Point::default();
            let mut pins = 0usize;
            for (i, m) in masters.iter().enumerate() {
                let origin = Point::new((i % cols) as f64 * cell_w, (i / cols) as f64 * cell_h);
                if m.pin_offsets.is_empty() {
                    sum = sum + origin + Point::new(0.5 * m.width, 0.5 * m.height);
                    pins += 1;
                }
                for p in &m.pin_offsets {
                    sum = sum + origin + Point::new(p.dx, p.dy);
                    pins += 1;
                }
            }
            MacroBlock {
                cluster: c.id,
                name: c.name.clone(),
                width: cols as f64 * cell_w,
                height: rows as f64 * cell_h,
                pin_offset: sum * (1.0 / pins as f64),
                area: c.area,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedMacro {
    pub cluster: ClusterId,
    pub name: String,
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
    /// Unflipped pin-center offset; orientation is applied on read.
    pub pin_offset: Point,
    pub orientation: Orientation,
}

impl PlacedMacro {
    pub fn from_block(block: &MacroBlock) -> Self {
        Self {
            cluster: block.cluster,
            name: block.name.clone(),
            x: 0.0,
            y: 0.0,
            width: block.width,
            height: block.height,
            pin_offset: block.pin_offset,
            orientation: Orientation::N,
        }
    }

    pub fn pin_center(&self) -> Point {
        Point::new(self.x, self.y) + self.orientation.apply(self.pin_offset, self.width, self.height)
    }

    pub fn center(&self) -> Point {
        Point::new(self.x + 0.5 * self.width, self.y + 0.5 * self.height)
    }

    pub fn overlaps(&self, other: &PlacedMacro) -> bool {
        self.x < other.x + other.width
            && other.x < self.x + self.width
            && self.y < other.y + other.height
            && other.y < self.y + self.height
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Floorplan {
    pub outline: Outline,
    pub macros: Vec<PlacedMacro>,
    pub cluster_positions: BTreeMap<ClusterId, Point>,
    pub io_anchors: BTreeMap<ClusterId, Point>,
}

impl Floorplan {
    /// Unplaced floorplan: macros at the origin, IO bundles on their sides.
    pub fn new(outline: Outline, cn: &ClusteredNetlist, blocks: &[MacroBlock]) -> Self {
        Self {
            outline,
            macros: blocks.iter().map(PlacedMacro::from_block).collect(),
            cluster_positions: BTreeMap::new(),
            io_anchors: cn
                .io_clusters()
                .map(|c| (c.id, outline.side_anchor(c.io_side.unwrap())))
                .collect(),
        }
    }

    /// Macro pin-center, cell-cluster center or IO anchor.
    pub fn reference_point(&self, id: ClusterId) -> Option<Point> {
        if let Some(p) = self.cluster_positions.get(&id) {
            return Some(*p);
        }
        if let Some(p) = self.io_anchors.get(&id) {
            return Some(*p);
        }
        self.macros
            .iter()
            .find(|m| m.cluster == id)
            .map(PlacedMacro::pin_center)
    }

    /// Dense lookup table indexed by cluster id.
    pub fn reference_points(&self) -> Vec<Option<Point>> {
        let max_id = self
            .macros
            .iter()
            .map(|m| m.cluster)
            .chain(self.cluster_positions.keys().copied())
            .chain(self.io_anchors.keys().copied())
            .map(|c| c.0 + 1)
            .max()
            .unwrap_or(0);
        let mut out = vec![None; max_id];
        for (id, p) in self.cluster_positions.iter().chain(&self.io_anchors) {
            out[id.0] = Some(*p);
        }
        for m in &self.macros {
            out[m.cluster.0] = Some(m.pin_center());
        }
        out
    }

    pub fn macro_index(&self, id: ClusterId) -> Option<usize> {
        self.macros.iter().position(|m| m.cluster == id)
    }

    /// Places macros at packed lower-left coordinates, then translates the
    /// packing so its bounding box is centered in the outline.
    pub fn set_packed_positions(&mut self, packed: &[crate::geom::Point]) {
        let (mut w, mut h) = (0.0f64, 0.0f64);
        for (m, p) in self.macros.iter().zip(packed) {
            w = w.max(p.x + m.width);
            h = h.max(p.y + m.height);
        }
        let dx = 0.5 * (self.outline.width - w);
        let dy = 0.5 * (self.outline.height - h);
        for (m, p) in self.macros.iter_mut().zip(packed) {
            m.x = p.x + dx;
            m.y = p.y + dy;
        }
    }

    /// `name x y w h orientation` per macro, then `name cx cy` per cell cluster.
    pub fn placement_text(&self, cn: &ClusteredNetlist) -> String {
        let mut out = String::new();
        for m in &self.macros {
            let _ = writeln!(
                out,
                "{} {} {} {} {} {}",
                m.name, m.x, m.y, m.width, m.height, m.orientation
            );
        }
        for (id, p) in &self.cluster_positions {
            let _ = writeln!(out, "{} {} {}", cn.cluster(*id).name, p.x, p.y);
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("floorplan serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn placed(x: f64, y: f64, w: f64, h: f64) -> PlacedMacro {
        PlacedMacro {
            cluster: ClusterId(0),
            name: "m".into(),
            x,
            y,
            width: w,
            height: h,
            pin_offset: Point::new(1.0, 1.0),
            orientation: Orientation::N,
        }
    }

    #[test]
    fn touching_rectangles_do_not_overlap() {
        assert!(!placed(0.0, 0.0, 2.0, 2.0).overlaps(&placed(2.0, 0.0, 2.0, 2.0)));
        assert!(placed(0.0, 0.0, 2.0, 2.0).overlaps(&placed(1.9, 1.9, 2.0, 2.0)));
    }

    #[test]
    fn pin_center_follows_orientation() {
        let mut m = placed(10.0, 20.0, 4.0, 2.0);
        assert_eq!(m.pin_center(), Point::new(11.0, 21.0));
        m.orientation = Orientation::FS;
        assert_eq!(m.pin_center(), Point::new(13.0, 21.0));
        m.orientation = Orientation::S;
        assert_eq!(m.pin_center(), Point::new(13.0, 21.0));
        assert_eq!((m.x, m.y, m.width, m.height), (10.0, 20.0, 4.0, 2.0));
    }

    #[test]
    fn packing_is_centered() {
        let mut fp = Floorplan {
            outline: Outline::new(10.0, 10.0),
            macros: vec![placed(0.0, 0.0, 2.0, 4.0)],
            cluster_positions: BTreeMap::new(),
            io_anchors: BTreeMap::new(),
        };
        fp.set_packed_positions(&[Point::new(0.0, 0.0)]);
        assert_eq!((fp.macros[0].x, fp.macros[0].y), (4.0, 3.0));
    }
}
