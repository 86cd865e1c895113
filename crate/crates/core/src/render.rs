//! SVG rendering of a floorplan.

use std::fmt::Write;

use crate::clustering::ClusteredNetlist;
use crate::dataflow::DataflowGraph;
use crate::geom::{Orientation, Point};
use crate::metrics::CongestionGrid;
use crate::placer::{Floorplan, PlacedMacro};

#[derive(Debug, Clone, Copy, Default)]
pub struct SvgOptions<'a> {
    pub edges: bool,
    pub heat: Option<&'a CongestionGrid>,
    /// Output width in pixels; height follows the aspect ratio.
    pub width_px: Option<f64>,
}

/// Corner of the footprint that carries the orientation marker.
pub fn marker_corner(m: &PlacedMacro) -> Point {
    let (x0, y0, x1, y1) = (m.x, m.y, m.x + m.width, m.y + m.height);
    match m.orientation {
        Orientation::N => Point::new(x0, y0),
        Orientation::FS => Point::new(x1, y0),
        Orientation::FN => Point::new(x0, y1),
        Orientation::S => Point::new(x1, y1),
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Draws the outline, macros with orientation markers, cluster centers, and
/// optionally dataflow edges and a congestion heat layer. Layout y grows up.
pub fn render_svg(
    fp: &Floorplan,
    graph: &DataflowGraph,
    cn: Option<&ClusteredNetlist>,
    options: &SvgOptions,
) -> String {
    let (w, h) = (fp.outline.width, fp.outline.height);
    let px = options.width_px.unwrap_or(800.0);
    let pad = 0.04 * w.max(h);
    let fy = |y: f64| h - y;
    let unit = w.max(h) / 400.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="{:.3} {:.3} {:.3} {:.3}">"#,
        px,
        px * (h + 2.0 * pad) / (w + 2.0 * pad),
        -pad,
        -pad,
        w + 2.0 * pad,
        h + 2.0 * pad
    );
    let _ = writeln!(
        out,
        r##"<rect class="outline" x="0" y="0" width="{w:.3}" height="{h:.3}" fill="#fafafa" stroke="#333" stroke-width="{:.3}"/>"##,
        2.0 * unit
    );

    if let Some(grid) = options.heat {
        let max = grid.max_demand();
        if max > 0.0 {
            let _ = writeln!(out, r#"<g class="heat-layer">"#);
            for row in 0..grid.rows {
                for col in 0..grid.cols {
                    let d = grid.demand[grid.index(col, row)];
                    if d <= 0.0 {
                        continue;
                    }
                    let (x0, y0, x1, y1) = grid.bin_rect(col, row);
                    let over = d > grid.capacity[grid.index(col, row)];
                    let _ = writeln!(
                        out,
                        r#"<rect class="heat" x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{}" fill-opacity="{:.3}"/>"#,
                        x0,
                        fy(y1),
                        x1 - x0,
                        y1 - y0,
                        if over { "#d7301f" } else { "#fc8d59" },
                        0.1 + 0.6 * d / max
                    );
                }
            }
            let _ = writeln!(out, "</g>");
        }
    }

    if options.edges {
        let points = fp.reference_points();
        let max_w = graph.edges().iter().map(|e| e.weight).fold(0.0, f64::max);
        let _ = writeln!(out, r##"<g class="edges" stroke="#3182bd" stroke-opacity="0.45">"##);
        for e in graph.edges() {
            let (a, b) = e.endpoints();
            let (Some(Some(pa)), Some(Some(pb))) = (points.get(a.0), points.get(b.0)) else {
                continue;
            };
            let sw = unit * (0.5 + 3.5 * e.weight / max_w.max(f64::MIN_POSITIVE));
            let _ = writeln!(
                out,
                r#"<line class="edge {}" x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke-width="{:.3}"/>"#,
                e.kind,
                pa.x,
                fy(pa.y),
                pb.x,
                fy(pb.y),
                sw
            );
        }
        let _ = writeln!(out, "</g>");
    }

    for m in &fp.macros {
        let c = marker_corner(m);
        let s = 0.25 * m.width.min(m.height);
        let dx = if c.x > m.x { -s } else { s };
        let dy = if c.y > m.y { -s } else { s };
        let pin = m.pin_center();
        let _ = writeln!(out, r#"<g class="macro" data-name="{}" data-orientation="{}">"#, escape(&m.name), m.orientation);
        let _ = writeln!(
            out,
            r##"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="#9ecae1" stroke="#08519c" stroke-width="{:.3}"/>"##,
            m.x,
            fy(m.y + m.height),
            m.width,
            m.height,
            unit
        );
        let _ = writeln!(
            out,
            r##"<polygon class="marker" points="{:.3},{:.3} {:.3},{:.3} {:.3},{:.3}" fill="#e31a1c"/>"##,
            c.x,
            fy(c.y),
            c.x + dx,
            fy(c.y),
            c.x,
            fy(c.y + dy)
        );
        let _ = writeln!(
            out,
            r##"<circle class="pin" cx="{:.3}" cy="{:.3}" r="{:.3}" fill="#08306b"/>"##,
            pin.x,
            fy(pin.y),
            1.5 * unit
        );
        let _ = writeln!(out, "<title>{}</title>", escape(&m.name));
        let _ = writeln!(out, "</g>");
    }

    for (id, p) in &fp.cluster_positions {
        let name = cn.map(|cn| cn.cluster(*id).name.clone()).unwrap_or_else(|| format!("c{}", id.0));
        let _ = writeln!(
            out,
            r##"<g class="cluster"><circle cx="{:.3}" cy="{:.3}" r="{:.3}" fill="#31a354" fill-opacity="0.8"/><title>{}</title></g>"##,
            p.x,
            fy(p.y),
            4.0 * unit,
            escape(&name)
        );
    }
    for p in fp.io_anchors.values() {
        let _ = writeln!(
            out,
            r##"<rect class="io" x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="#636363"/>"##,
            p.x - 3.0 * unit,
            fy(p.y) - 3.0 * unit,
            6.0 * unit,
            6.0 * unit
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::ClusterId;
    use crate::geom::Outline;
    use std::collections::BTreeMap;

    fn fp() -> Floorplan {
        let m = |id: usize, x: f64| PlacedMacro {
            cluster: ClusterId(id),
            name: format!("m<{id}>"),
            x,
            y: 2.0,
            width: 4.0,
            height: 2.0,
            pin_offset: Point::new(1.0, 1.0),
            orientation: Orientation::N,
        };
        Floorplan {
            outline: Outline::new(20.0, 10.0),
            macros: vec![m(0, 1.0), m(1, 8.0)],
            cluster_positions: BTreeMap::from([(ClusterId(2), Point::new(15.0, 5.0))]),
            io_anchors: BTreeMap::new(),
        }
    }

    #[test]
    fn shape_groups() {
        let svg = render_svg(&fp(), &DataflowGraph::default(), None, &SvgOptions::default());
        assert_eq!(svg.matches(r#"<g class="macro""#).count(), 2);
        assert_eq!(svg.matches(r#"<g class="cluster""#).count(), 1);
        assert_eq!(svg.matches(r#"class="outline""#).count(), 1);
        assert!(svg.contains("m&lt;0&gt;"));
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn marker_mirrors_with_orientation() {
        let mut m = fp().macros[0].clone();
        assert_eq!(marker_corner(&m), Point::new(1.0, 2.0));
        m.orientation = Orientation::FS;
        assert_eq!(marker_corner(&m), Point::new(5.0, 2.0));
        m.orientation = Orientation::FN;
        assert_eq!(marker_corner(&m), Point::new(1.0, 4.0));
        m.orientation = Orientation::S;
        assert_eq!(marker_corner(&m), Point::new(5.0, 4.0));
    }

    #[test]
    fn heat_layer_is_optional() {
        let f = fp();
        let mut grid = CongestionGrid::new(f.outline, 5.0, 5.0, 1.0).unwrap();
        grid.demand[3] = 2.0;
        let off = render_svg(&f, &DataflowGraph::default(), None, &SvgOptions::default());
        assert!(!off.contains(r#"class="heat""#));
        let on = render_svg(&f, &DataflowGraph::default(), None, &SvgOptions { heat: Some(&grid), ..Default::default() });
        assert_eq!(on.matches(r#"class="heat""#).count(), 1);
    }
}
