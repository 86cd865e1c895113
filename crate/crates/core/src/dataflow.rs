//! Dataflow graph extraction over a clustered netlist.
//!
//! Five edge classes are produced: direct macro-macro (`MM_direct`, undirected),
//! virtual macro-macro through a shared cell cluster or driving cell
//! (`MM_indirect`, undirected), macro-cell (`MC`), cell-cell (`CC`) and the
//! two-hop macro-cell-cell path (`MCC`, directed, carrying both hop weights).

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use glob::{MatchOptions, Pattern};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::{Cluster, ClusterId, ClusteredNetlist};
use crate::netlist::{MasterKind, Netlist};

#[derive(Debug, Error)]
pub enum DataflowError {
    #[error("cluster {0:?} has zero area or no instances")]
    DegenerateCluster(ClusterId),
    #[error("invalid net name filter `{pattern}`: {message}")]
    BadFilter { pattern: String, message: String },
    #[error("graph export line {line}: {message}")]
    BadExport { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    #[serde(rename = "MM_direct")]
    MmDirect,
    #[serde(rename = "MM_indirect")]
    MmIndirect,
    #[serde(rename = "MC")]
    Mc,
    #[serde(rename = "CC")]
    Cc,
    #[serde(rename = "MCC")]
    Mcc,
}

impl EdgeKind {
    pub const ALL: [EdgeKind; 5] = [
        EdgeKind::MmDirect,
        EdgeKind::MmIndirect,
        EdgeKind::Mc,
        EdgeKind::Cc,
        EdgeKind::Mcc,
    ];

    pub fn is_mm(self) -> bool {
        matches!(self, EdgeKind::MmDirect | EdgeKind::MmIndirect)
    }

    pub fn directed(self) -> bool {
        !self.is_mm()
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeKind::MmDirect => "MM_direct",
            EdgeKind::MmIndirect => "MM_indirect",
            EdgeKind::Mc => "MC",
            EdgeKind::Cc => "CC",
            EdgeKind::Mcc => "MCC",
        })
    }
}

impl FromStr for EdgeKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        EdgeKind::ALL
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| format!("unknown edge kind `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataflowEdge {
    pub kind: EdgeKind,
    /// For MM edges `src < dst`; for MCC the source macro.
    pub src: ClusterId,
    /// Intermediate cell cluster of an MCC path.
    pub via: Option<ClusterId>,
    pub dst: ClusterId,
    pub bit_width: u64,
    /// Connection strength: summed bit width for one-hop classes, the
    /// cell-cell hop weight `w2` for MCC.
    pub weight: f64,
    /// MCC only: weight of the macro to first-hop cluster edge.
    pub w1: f64,
}

impl DataflowEdge {
    fn key(&self) -> (EdgeKind, ClusterId, Option<ClusterId>, ClusterId) {
        (self.kind, self.src, self.via, self.dst)
    }

    /// The endpoint pair wirelength is measured between. For MCC this is the
    /// macro and the second-hop cluster.
    pub fn endpoints(&self) -> (ClusterId, ClusterId) {
        (self.src, self.dst)
    }

    pub fn touches(&self, c: ClusterId) -> bool {
        self.src == c || self.dst == c
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DataflowGraph {
    edges: Vec<DataflowEdge>,
}

impl DataflowGraph {
    pub fn from_edges(mut edges: Vec<DataflowEdge>) -> Self {
        edges.sort_by_key(|e| e.key());
        Self { edges }
    }

    pub fn edges(&self) -> &[DataflowEdge] {
        &self.edges
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn of_kind(&self, kind: EdgeKind) -> impl Iterator<Item = &DataflowEdge> {
        self.edges.iter().filter(move |e| e.kind == kind)
    }

    pub fn count(&self, kind: EdgeKind) -> usize {
        self.of_kind(kind).count()
    }

    pub fn counts(&self) -> BTreeMap<EdgeKind, usize> {
        EdgeKind::ALL.into_iter().map(|k| (k, self.count(k))).collect()
    }

    fn replace_kind(&mut self, kind: EdgeKind, new_edges: Vec<DataflowEdge>) {
        self.edges.retain(|e| e.kind != kind);
        self.edges.extend(new_edges);
        self.edges.sort_by_key(|e| e.key());
    }

    /// Returns a copy with every weight (and MCC `w1`) multiplied by `c`.
    pub fn scaled(&self, c: f64) -> DataflowGraph {
        let mut g = self.clone();
        for e in &mut g.edges {
            e.weight *= c;
            e.w1 *= c;
        }
        g
    }

    /// One edge per line: `kind srcId [viaId] dstId bitWidth weight`.
    pub fn export(&self) -> String {
        let mut out = String::new();
        for e in &self.edges {
            let _ = match e.via {
                Some(via) => writeln!(
                    out,
                    "{} {} {} {} {} {}",
                    e.kind, e.src.0, via.0, e.dst.0, e.bit_width, e.weight
                ),
                None => writeln!(
                    out,
                    "{} {} {} {} {}",
                    e.kind, e.src.0, e.dst.0, e.bit_width, e.weight
                ),
            };
        }
        out
    }

    /// Reads an [`export`](Self::export)ed graph. MCC `w1` is recovered from
    /// the matching `MC` line.
    pub fn parse_export(text: &str) -> Result<DataflowGraph, DataflowError> {
        let mut edges = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let bad = |message: String| DataflowError::BadExport {
                line: i + 1,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let kind: EdgeKind = fields[0].parse().map_err(bad)?;
            let want = if kind == EdgeKind::Mcc { 6 } else { 5 };
            if fields.len() != want {
                return Err(bad(format!("expected {want} fields, got {}", fields.len())));
            }
            let id = |s: &str| s.parse::<usize>().map(ClusterId).map_err(|e| bad(e.to_string()));
            let (via, rest) = if kind == EdgeKind::Mcc {
                (Some(id(fields[2])?), &fields[3..])
            } else {
                (None, &fields[2..])
            };
            edges.push(DataflowEdge {
                kind,
                src: id(fields[1])?,
                via,
                dst: id(rest[0])?,
                bit_width: rest[1].parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                weight: rest[2].parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
                w1: 0.0,
            });
        }
        let mc: BTreeMap<(ClusterId, ClusterId), f64> = edges
            .iter()
            .filter(|e| e.kind == EdgeKind::Mc)
            .map(|e| ((e.src, e.dst), e.weight))
            .collect();
        for e in edges.iter_mut().filter(|e| e.kind == EdgeKind::Mcc) {
            e.w1 = mc.get(&(e.src, e.via.unwrap())).copied().unwrap_or(0.0);
        }
        Ok(DataflowGraph::from_edges(edges))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractionConfig {
    /// Constant `k` of the cell-cell hop weight.
    pub k: f64,
    /// Nets with more sinks are ignored by instance-level indirect extraction.
    pub fanout_limit: usize,
    /// Glob patterns (case-insensitive) for common signals such as clocks and resets.
    pub name_filters: Vec<String>,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            k: 1.0,
            fanout_limit: 32,
            name_filters: vec!["clk*".into(), "rst*".into(), "reset*".into()],
        }
    }
}

/// Compiled net-name exclusion list.
#[derive(Debug, Clone)]
pub struct NameFilters(Vec<Pattern>);

impl NameFilters {
    pub fn new<S: AsRef<str>>(patterns: &[S]) -> Result<Self, DataflowError> {
        patterns
            .iter()
            .map(|p| {
                Pattern::new(p.as_ref()).map_err(|e| DataflowError::BadFilter {
                    pattern: p.as_ref().to_string(),
                    message: e.to_string(),
                })
            })
            .collect::<Result<_, _>>()
            .map(NameFilters)
    }

    /// Matches the last hierarchy component of a net base name.
    pub fn matches(&self, base_name: &str) -> bool {
        let leaf = base_name.rsplit('/').next().unwrap_or(base_name);
        let opts = MatchOptions {
            case_sensitive: false,
            ..Default::default()
        };
        self.0.iter().any(|p| p.matches_with(leaf, opts))
    }
}

/// Sorts cluster edges into MM_direct, MC and CC classes.
pub fn classify_direct_edges(cn: &ClusteredNetlist) -> DataflowGraph {
    let mut mm: BTreeMap<(ClusterId, ClusterId), u64> = BTreeMap::new();
    let mut edges = Vec::new();
    for e in &cn.edges {
        let (s, d) = (cn.cluster(e.src), cn.cluster(e.dst));
        let kind = match (s.is_macro(), d.is_macro()) {
            (true, true) => {
                *mm.entry((e.src.min(e.dst), e.src.max(e.dst))).or_default() += e.bit_width;
                continue;
            }
            (false, false) => EdgeKind::Cc,
            _ => EdgeKind::Mc,
        };
        edges.push(DataflowEdge {
            kind,
            src: e.src,
            via: None,
            dst: e.dst,
            bit_width: e.bit_width,
            weight: e.bit_width as f64,
            w1: 0.0,
        });
    }
    edges.extend(mm.into_iter().map(|((a, b), bw)| DataflowEdge {
        kind: EdgeKind::MmDirect,
        src: a,
        via: None,
        dst: b,
        bit_width: bw,
        weight: bw as f64,
        w1: 0.0,
    }));
    DataflowGraph::from_edges(edges)
}

/// Adds virtual macro-macro edges.
///
/// Cluster level: every pair of macro clusters touching the same cell cluster
/// gets weight `bw(M1, C) + bw(M2, C)`, counting both directions of each
/// macro-cell connection. Instance level: every pair of macro clusters reached
/// by one cell-driven net gets that net's bit width, unless the net exceeds
/// `fanout_limit` or matches `filters`. Contributions to the same pair are
/// summed into one edge.
pub fn extract_indirect_mm(
    graph: &mut DataflowGraph,
    cn: &ClusteredNetlist,
    netlist: &Netlist,
    fanout_limit: usize,
    filters: &NameFilters,
) {
    let mut incident: BTreeMap<ClusterId, BTreeMap<ClusterId, u64>> = BTreeMap::new();
    for e in &cn.edges {
        let (s, d) = (cn.cluster(e.src), cn.cluster(e.dst));
        let (macro_id, cell_id) = match (s.is_macro(), d.is_macro()) {
            (true, false) => (e.src, e.dst),
            (false, true) => (e.dst, e.src),
            _ => continue,
        };
        *incident.entry(cell_id).or_default().entry(macro_id).or_default() += e.bit_width;
    }

    let mut pairs: BTreeMap<(ClusterId, ClusterId), u64> = BTreeMap::new();
    for macros in incident.values() {
        let list: Vec<(ClusterId, u64)> = macros.iter().map(|(&m, &bw)| (m, bw)).collect();
        for (i, &(a, bw_a)) in list.iter().enumerate() {
            for &(b, bw_b) in &list[i + 1..] {
                *pairs.entry((a, b)).or_default() += bw_a + bw_b;
            }
        }
    }

    let mut reached = Vec::new();
    for net in &netlist.nets {
        if netlist.kind_of(net.driver.instance) != MasterKind::Cell
            || net.fanout() > fanout_limit
            || filters.matches(&net.base_name)
        {
            continue;
        }
        reached.clear();
        reached.extend(
            net.sinks
                .iter()
                .map(|s| cn.cluster_of(s.instance))
                .filter(|c| cn.cluster(*c).is_macro()),
        );
        reached.sort_unstable();
        reached.dedup();
        for (i, &a) in reached.iter().enumerate() {
            for &b in &reached[i + 1..] {
                *pairs.entry((a, b)).or_default() += u64::from(net.bit_width);
            }
        }
    }

    let edges = pairs
        .into_iter()
        .map(|((a, b), bw)| DataflowEdge {
            kind: EdgeKind::MmIndirect,
            src: a,
            via: None,
            dst: b,
            bit_width: bw,
            weight: bw as f64,
            w1: 0.0,
        })
        .collect();
    graph.replace_kind(EdgeKind::MmIndirect, edges);
}

/// Mean area over all cell clusters, the unit cell-cluster areas are normalized by.
pub fn mean_cell_cluster_area(cn: &ClusteredNetlist) -> f64 {
    let (sum, n) = cn
        .cell_clusters()
        .fold((0.0, 0usize), |(s, n), c| (s + c.area, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Cell-cell hop weight: `k * bit_width * normalized_area(dst) * instance_count(dst)`.
pub fn compute_wj(
    cc_edge: &DataflowEdge,
    dst_cluster: &Cluster,
    k: f64,
    mean_cell_area: f64,
) -> Result<f64, DataflowError> {
    if !(dst_cluster.area > 0.0) || dst_cluster.instance_count == 0 || !(mean_cell_area > 0.0) {
        return Err(DataflowError::DegenerateCluster(dst_cluster.id));
    }
    let normalized_area = dst_cluster.area / mean_cell_area;
    Ok(k * cc_edge.bit_width as f64 * normalized_area * dst_cluster.instance_count as f64)
}

/// Adds one MCC edge per (macro -> C1, C1 -> C2) pair of MC and CC edges.
///
/// Only macro-to-cell MC edges start a path. Zero-weight hops (for example
/// with `k = 0`) produce no edge.
pub fn extract_two_hop(
    graph: &mut DataflowGraph,
    cn: &ClusteredNetlist,
    k: f64,
) -> Result<(), DataflowError> {
    let mean_area = mean_cell_cluster_area(cn);
    let mut into_cell: BTreeMap<ClusterId, Vec<(ClusterId, f64)>> = BTreeMap::new();
    for e in graph.of_kind(EdgeKind::Mc) {
        if cn.cluster(e.src).is_macro() {
            into_cell.entry(e.dst).or_default().push((e.src, e.weight));
        }
    }

    let mut paths: BTreeMap<(ClusterId, ClusterId, ClusterId), (u64, f64, f64)> = BTreeMap::new();
    for cc in graph.of_kind(EdgeKind::Cc) {
        let Some(sources) = into_cell.get(&cc.src) else {
            continue;
        };
        if cc.src == cc.dst {
            continue;
        }
        let w2 = compute_wj(cc, cn.cluster(cc.dst), k, mean_area)?;
        for &(m, w1) in sources {
            let slot = paths.entry((m, cc.src, cc.dst)).or_default();
            slot.0 += cc.bit_width;
            slot.1 += w1;
            slot.2 += w2;
        }
    }

    let edges = paths
        .into_iter()
        .filter(|(_, (_, w1, w2))| *w1 > 0.0 && *w2 > 0.0)
        .map(|((m, c1, c2), (bw, w1, w2))| DataflowEdge {
            kind: EdgeKind::Mcc,
            src: m,
            via: Some(c1),
            dst: c2,
            bit_width: bw,
            weight: w2,
            w1,
        })
        .collect();
    graph.replace_kind(EdgeKind::Mcc, edges);
    Ok(())
}

/// Runs all extraction steps.
pub fn extract_dataflow(
    cn: &ClusteredNetlist,
    netlist: &Netlist,
    config: &ExtractionConfig,
) -> Result<DataflowGraph, DataflowError> {
    let filters = NameFilters::new(&config.name_filters)?;
    let mut graph = classify_direct_edges(cn);
    extract_indirect_mm(&mut graph, cn, netlist, config.fanout_limit, &filters);
    extract_two_hop(&mut graph, cn, config.k)?;
    Ok(graph)
}
