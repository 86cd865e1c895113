//! Threshold-limited hierarchical clustering.
//!
//! Seeds are hierarchy leaves split by kind; oversized seeds are cut into
//! balanced chunks in canonical member order, undersized siblings are packed
//! together first-fit-decreasing, and IO pads form one bundle per outline side.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Side;
use crate::netlist::{InstanceId, MasterKind, Netlist};

#[derive(Debug, Error, PartialEq)]
pub enum ClusteringError {
    #[error("{kind} thresholds conflict: min {min} must be positive and below max {max}")]
    ThresholdConflict {
        kind: &'static str,
        min: usize,
        max: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClusterId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterKind {
    MacroCluster,
    CellCluster,
}

impl std::fmt::Display for ClusterKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ClusterKind::MacroCluster => "macro_cluster",
            ClusterKind::CellCluster => "cell_cluster",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub id: ClusterId,
    pub name: String,
    pub kind: ClusterKind,
    /// Canonical order: hierarchy path, then instance name.
    pub members: Vec<InstanceId>,
    pub hierarchy_root: Vec<String>,
    pub area: f64,
    pub instance_count: usize,
    /// Set for bundled IO clusters, which are macro clusters pinned to one side.
    pub io_side: Option<Side>,
}

impl Cluster {
    pub fn is_macro(&self) -> bool {
        self.kind == ClusterKind::MacroCluster
    }

    pub fn is_cell(&self) -> bool {
        self.kind == ClusterKind::CellCluster
    }

    pub fn is_io(&self) -> bool {
        self.io_side.is_some()
    }

    /// Macro cluster holding real macros, i.e. one the annealer places.
    pub fn is_hard_macro(&self) -> bool {
        self.is_macro() && !self.is_io()
    }
}

/// Directed cross-cluster connection with summed bus width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClusterEdge {
    pub src: ClusterId,
    pub dst: ClusterId,
    pub bit_width: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteredNetlist {
    pub clusters: Vec<Cluster>,
    pub instance_to_cluster: Vec<ClusterId>,
    /// Sorted by (src, dst); no self edges, no parallel edges.
    pub edges: Vec<ClusterEdge>,
}

impl ClusteredNetlist {
    pub fn cluster(&self, id: ClusterId) -> &Cluster {
        &self.clusters[id.0]
    }

    pub fn cluster_of(&self, inst: InstanceId) -> ClusterId {
        self.instance_to_cluster[inst.0]
    }

    pub fn hard_macros(&self) -> impl Iterator<Item = &Cluster> {
        self.clusters.iter().filter(|c| c.is_hard_macro())
    }

    pub fn cell_clusters(&self) -> impl Iterator<Item = &Cluster> {
        self.clusters.iter().filter(|c| c.is_cell())
    }

    pub fn io_clusters(&self) -> impl Iterator<Item = &Cluster> {
        self.clusters.iter().filter(|c| c.is_io())
    }

    /// One line per cluster: `id kind size area hierarchy_root`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for c in &self.clusters {
            let root = match c.io_side {
                Some(side) => format!("<io:{side}>"),
                None => c.hierarchy_root.join("/"),
            };
            let _ = writeln!(
                out,
                "{} {} {} {} {}",
                c.id.0, c.kind, c.instance_count, c.area, root
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusterThresholds {
    pub min_cells: usize,
    pub max_cells: usize,
    pub min_macros: usize,
    pub max_macros: usize,
}

impl Default for ClusterThresholds {
    fn default() -> Self {
        Self {
            min_cells: 50,
            max_cells: 500,
            min_macros: 1,
            max_macros: 16,
        }
    }
}

impl ClusterThresholds {
    fn check(&self) -> Result<(), ClusteringError> {
        for (kind, min, max) in [
            ("cell", self.min_cells, self.max_cells),
            ("macro", self.min_macros, self.max_macros),
        ] {
            if min == 0 || min >= max {
                return Err(ClusteringError::ThresholdConflict { kind, min, max });
            }
        }
        Ok(())
    }
}

/// Cluster under construction.
struct Group {
    kind: ClusterKind,
    path: Vec<String>,
    members: Vec<InstanceId>,
}

fn common_prefix(netlist: &Netlist, members: &[InstanceId]) -> Vec<String> {
    let mut prefix = netlist.instance(members[0]).hierarchy_path.clone();
    for m in &members[1..] {
        let path = &netlist.instance(*m).hierarchy_path;
        let keep = prefix.iter().zip(path).take_while(|(a, b)| a == b).count();
        prefix.truncate(keep);
    }
    prefix
}

/// Splits `members` into `ceil(n / max)` consecutive chunks whose sizes differ by at most one.
fn balanced_chunks(members: Vec<InstanceId>, max: usize) -> Vec<Vec<InstanceId>> {
    let n = members.len();
    if n <= max {
        return vec![members];
    }
    let parts = n.div_ceil(max);
    let (base, extra) = (n / parts, n % parts);
    let mut out = Vec::with_capacity(parts);
    let mut it = members.into_iter();
    for p in 0..parts {
        let size = base + usize::from(p < extra);
        out.push(it.by_ref().take(size).collect());
    }
    out
}

/// Builds the clustered netlist and populates its cross-cluster edges.
pub fn build_clusters(
    netlist: &Netlist,
    thresholds: &ClusterThresholds,
) -> Result<ClusteredNetlist, ClusteringError> {
    thresholds.check()?;

    let mut order: Vec<InstanceId> = netlist.instances.iter().map(|i| i.id).collect();
    order.sort_by(|a, b| {
        let (ia, ib) = (netlist.instance(*a), netlist.instance(*b));
        (&ia.hierarchy_path, &ia.name).cmp(&(&ib.hierarchy_path, &ib.name))
    });

    let mut seeds: BTreeMap<(Vec<String>, bool), Vec<InstanceId>> = BTreeMap::new();
    let mut io: BTreeMap<Side, Vec<InstanceId>> = BTreeMap::new();
    for &id in &order {
        match netlist.kind_of(id) {
            MasterKind::IoPad => io.entry(netlist.io_side[&id]).or_default().push(id),
            kind => seeds
                .entry((
                    netlist.instance(id).hierarchy_path.clone(),
                    kind == MasterKind::Macro,
                ))
                .or_default()
                .push(id),
        }
    }

    let mut groups: Vec<Group> = Vec::new();
    for ((path, is_macro), members) in seeds {
        let (kind, max) = if is_macro {
            (ClusterKind::MacroCluster, thresholds.max_macros)
        } else {
            (ClusterKind::CellCluster, thresholds.max_cells)
        };
        for chunk in balanced_chunks(members, max) {
            groups.push(Group {
                kind,
                path: path.clone(),
                members: chunk,
            });
        }
    }

    // First-fit decreasing over undersized siblings. A later bin is only
    // opened when its first item fits no earlier bin, so no two resulting
    // bins can still be merged without exceeding the max threshold.
    let (mut kept, small): (Vec<Group>, Vec<Group>) = groups.into_iter().partition(|g| {
        let min = match g.kind {
            ClusterKind::MacroCluster => thresholds.min_macros,
            ClusterKind::CellCluster => thresholds.min_cells,
        };
        g.members.len() >= min
    });
    let mut families: BTreeMap<(Vec<String>, bool), Vec<Group>> = BTreeMap::new();
    for g in small {
        let parent = g.path[..g.path.len().saturating_sub(1)].to_vec();
        families
            .entry((parent, g.kind == ClusterKind::MacroCluster))
            .or_default()
            .push(g);
    }
    for ((_, is_macro), mut family) in families {
        let max = if is_macro {
            thresholds.max_macros
        } else {
            thresholds.max_cells
        };
        // Stable sort keeps canonical order among equal sizes.
        family.sort_by_key(|g| std::cmp::Reverse(g.members.len()));
        let mut bins: Vec<Group> = Vec::new();
        for g in family {
            match bins
                .iter_mut()
                .find(|b| b.members.len() + g.members.len() <= max)
            {
                Some(bin) => bin.members.extend(g.members),
                None => bins.push(g),
            }
        }
        kept.extend(bins);
    }

    let canon = |id: &InstanceId| {
        let inst = netlist.instance(*id);
        (inst.hierarchy_path.clone(), inst.name.clone())
    };
    for g in &mut kept {
        g.members.sort_by_key(canon);
        g.path = common_prefix(netlist, &g.members);
    }
    kept.sort_by(|a, b| {
        let rank = |g: &Group| u8::from(g.kind == ClusterKind::CellCluster);
        (rank(a), &a.path, canon(&a.members[0])).cmp(&(rank(b), &b.path, canon(&b.members[0])))
    });

    let mut clusters: Vec<Cluster> = Vec::with_capacity(kept.len() + io.len());
    let mut cell_no = 0;
    for g in kept {
        let id = ClusterId(clusters.len());
        let name = match (g.kind, g.members.as_slice()) {
            (ClusterKind::MacroCluster, [only]) => netlist.instance(*only).name.clone(),
            (ClusterKind::MacroCluster, _) => format!("{}/macros{}", g.path.join("/"), id.0),
            (ClusterKind::CellCluster, _) => {
                cell_no += 1;
                format!("{}/cells{}", g.path.join("/"), cell_no - 1)
            }
        };
        clusters.push(make_cluster(netlist, id, name, g.kind, g.members, g.path, None));
    }
    for (side, members) in io {
        let id = ClusterId(clusters.len());
        let root = common_prefix(netlist, &members);
        clusters.push(make_cluster(
            netlist,
            id,
            format!("io_{side}"),
            ClusterKind::MacroCluster,
            members,
            root,
            Some(side),
        ));
    }

    Ok(compute_cluster_edges(netlist, clusters))
}

fn make_cluster(
    netlist: &Netlist,
    id: ClusterId,
    name: String,
    kind: ClusterKind,
    members: Vec<InstanceId>,
    hierarchy_root: Vec<String>,
    io_side: Option<Side>,
) -> Cluster {
    let area = members.iter().map(|m| netlist.master_of(*m).area()).sum();
    Cluster {
        id,
        name,
        kind,
        instance_count: members.len(),
        members,
        hierarchy_root,
        area,
        io_side,
    }
}

/// Accumulates one directed edge per (driver cluster, distinct sink cluster)
/// pair of every net, weighted by the net's bit width.
pub fn compute_cluster_edges(netlist: &Netlist, clusters: Vec<Cluster>) -> ClusteredNetlist {
    let mut instance_to_cluster = vec![ClusterId(usize::MAX); netlist.instances.len()];
    for c in &clusters {
        for m in &c.members {
            instance_to_cluster[m.0] = c.id;
        }
    }
    debug_assert!(instance_to_cluster.iter().all(|c| c.0 != usize::MAX));

    let mut weights: BTreeMap<(ClusterId, ClusterId), u64> = BTreeMap::new();
    let mut sink_clusters = BTreeSet::new();
    for net in &netlist.nets {
        let src = instance_to_cluster[net.driver.instance.0];
        sink_clusters.clear();
        sink_clusters.extend(
            net.sinks
                .iter()
                .map(|s| instance_to_cluster[s.instance.0])
                .filter(|&c| c != src),
        );
        for &dst in &sink_clusters {
            *weights.entry((src, dst)).or_default() += u64::from(net.bit_width);
        }
    }
    let edges = weights
        .into_iter()
        .map(|((src, dst), bit_width)| ClusterEdge { src, dst, bit_width })
        .collect();
    ClusteredNetlist {
        clusters,
        instance_to_cluster,
        edges,
    }
}
