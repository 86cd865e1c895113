//! Instance/net data model shared by every later stage.
//!
//! Two front ends produce a [`Netlist`]: the JSON document format
//! ([`parse_netlist`]) and a structural Verilog subset with a geometry sidecar
//! ([`parse_verilog_subset`]). [`bundle_buses`] then folds indexed scalar nets
//! into bit-width-weighted buses.

mod bundle;
mod json;
mod verilog;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Outline, Point, Side};

pub use bundle::bundle_buses;
pub use json::{parse_netlist, to_document_string};
pub use verilog::{parse_verilog_subset, GeometrySidecar};

#[derive(Debug, Error)]
pub enum NetlistError {
    #[error("malformed netlist document: {0}")]
    Document(#[from] serde_json::Error),
    #[error("netlist has no instances")]
    MissingInstances,
    #[error("net `{net}` references unknown pin `{instance}.{pin}`")]
    DanglingPin {
        net: String,
        instance: String,
        pin: String,
    },
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("outline must be positive, got {width} x {height}")]
    BadOutline { width: f64, height: f64 },
    #[error("instance `{instance}` uses unknown master `{master}`")]
    UnknownMaster { instance: String, master: String },
    #[error("master `{name}` is invalid: {reason}")]
    BadMaster { name: String, reason: String },
    #[error("instance `{0}` has an empty hierarchy path")]
    EmptyHierarchy(String),
    #[error("io pad `{0}` has no outline side")]
    MissingIoSide(String),
    #[error("net `{0}` has bit width 0")]
    ZeroBitWidth(String),
    #[error("line {line}: unsupported construct `{construct}`")]
    UnsupportedConstruct { line: usize, construct: String },
    #[error("line {line}: {message}")]
    VerilogSyntax { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InstanceId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MasterId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NetId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MasterKind {
    Macro,
    Cell,
    IoPad,
}

/// Signal direction of a master pin. Only the Verilog front end needs it,
/// JSON nets name their driver explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PinDir {
    #[default]
    Input,
    Output,
    Inout,
}

impl PinDir {
    fn is_input(&self) -> bool {
        *self == PinDir::Input
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PinOffset {
    pub name: String,
    pub dx: f64,
    pub dy: f64,
    #[serde(default, skip_serializing_if = "PinDir::is_input")]
    pub dir: PinDir,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Master {
    pub name: String,
    pub width: f64,
    pub height: f64,
    #[serde(default)]
    pub pin_offsets: Vec<PinOffset>,
    pub kind: MasterKind,
}

impl Master {
    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn pin(&self, name: &str) -> Option<&PinOffset> {
        self.pin_offsets.iter().find(|p| p.name == name)
    }

    /// Mean of all pin offsets, or the footprint center for pinless masters.
    pub fn pin_center(&self) -> Point {
        if self.pin_offsets.is_empty() {
            return Point::new(0.5 * self.width, 0.5 * self.height);
        }
        let n = self.pin_offsets.len() as f64;
        let (sx, sy) = self
            .pin_offsets
            .iter()
            .fold((0.0, 0.0), |(sx, sy), p| (sx + p.dx, sy + p.dy));
        Point::new(sx / n, sy / n)
    }

    fn validate(&self) -> Result<(), NetlistError> {
        let bad = |reason: String| NetlistError::BadMaster {
            name: self.name.clone(),
            reason,
        };
        match self.kind {
            MasterKind::IoPad => {
                if self.width != 0.0 || self.height != 0.0 {
                    return Err(bad("io pads must have zero area".into()));
                }
            }
            MasterKind::Macro | MasterKind::Cell => {
                if !(self.width > 0.0 && self.height > 0.0) {
                    return Err(bad(format!(
                        "non-positive footprint {} x {}",
                        self.width, self.height
                    )));
                }
            }
        }
        for p in &self.pin_offsets {
            if !(0.0..=self.width).contains(&p.dx) || !(0.0..=self.height).contains(&p.dy) {
                return Err(bad(format!(
                    "pin `{}` at ({}, {}) lies outside the footprint",
                    p.name, p.dx, p.dy
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub id: InstanceId,
    pub name: String,
    pub master: MasterId,
    pub hierarchy_path: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PinRef {
    pub instance: InstanceId,
    pub pin: String,
}

impl PinRef {
    pub fn new(instance: InstanceId, pin: impl Into<String>) -> Self {
        Self {
            instance,
            pin: pin.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Net {
    pub id: NetId,
    pub base_name: String,
    /// Trailing `[i]` of a scalar bus member; `None` for plain or bundled nets.
    pub bit_index: Option<u32>,
    pub driver: PinRef,
    pub sinks: Vec<PinRef>,
    pub bit_width: u32,
}

impl Net {
    /// Full scalar name, `base[i]` for bus members.
    pub fn full_name(&self) -> String {
        match self.bit_index {
            Some(i) => format!("{}[{}]", self.base_name, i),
            None => self.base_name.clone(),
        }
    }

    pub fn fanout(&self) -> usize {
        self.sinks.len()
    }
}

/// Splits `data[3]` into `("data", Some(3))`; anything else is returned whole.
pub fn split_bus_index(name: &str) -> (&str, Option<u32>) {
    if let Some(stripped) = name.strip_suffix(']') {
        if let Some(open) = stripped.rfind('[') {
            if let Ok(i) = stripped[open + 1..].parse::<u32>() {
                if open > 0 {
                    return (&stripped[..open], Some(i));
                }
            }
        }
    }
    (name, None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Netlist {
    pub outline: Outline,
    pub masters: Vec<Master>,
    pub instances: Vec<Instance>,
    pub nets: Vec<Net>,
    pub io_side: BTreeMap<InstanceId, Side>,
}

impl Netlist {
    pub fn master_of(&self, inst: InstanceId) -> &Master {
        &self.masters[self.instances[inst.0].master.0]
    }

    pub fn kind_of(&self, inst: InstanceId) -> MasterKind {
        self.master_of(inst).kind
    }

    pub fn instance(&self, id: InstanceId) -> &Instance {
        &self.instances[id.0]
    }

    pub fn count_kind(&self, kind: MasterKind) -> usize {
        self.instances
            .iter()
            .filter(|i| self.masters[i.master.0].kind == kind)
            .count()
    }

    /// Checks every structural invariant; both front ends finish with this.
    pub fn validate(&self) -> Result<(), NetlistError> {
        let o = self.outline;
        if !(o.width > 0.0 && o.height > 0.0) {
            return Err(NetlistError::BadOutline {
                width: o.width,
                height: o.height,
            });
        }
        if self.instances.is_empty() {
            return Err(NetlistError::MissingInstances);
        }
        let mut master_names = HashMap::new();
        for m in &self.masters {
            if master_names.insert(m.name.as_str(), ()).is_some() {
                return Err(NetlistError::DuplicateName(m.name.clone()));
            }
            m.validate()?;
        }
        let mut inst_names = HashMap::new();
        for (i, inst) in self.instances.iter().enumerate() {
            debug_assert_eq!(inst.id.0, i);
            if inst_names.insert(inst.name.as_str(), ()).is_some() {
                return Err(NetlistError::DuplicateName(inst.name.clone()));
            }
            if inst.hierarchy_path.is_empty() {
                return Err(NetlistError::EmptyHierarchy(inst.name.clone()));
            }
            if self.masters[inst.master.0].kind == MasterKind::IoPad
                && !self.io_side.contains_key(&inst.id)
            {
                return Err(NetlistError::MissingIoSide(inst.name.clone()));
            }
        }
        for net in &self.nets {
            if net.bit_width == 0 {
                return Err(NetlistError::ZeroBitWidth(net.full_name()));
            }
            for p in std::iter::once(&net.driver).chain(&net.sinks) {
                let dangling = || NetlistError::DanglingPin {
                    net: net.full_name(),
                    instance: self
                        .instances
                        .get(p.instance.0)
                        .map(|i| i.name.clone())
                        .unwrap_or_else(|| format!("#{}", p.instance.0)),
                    pin: p.pin.clone(),
                };
                let inst = self.instances.get(p.instance.0).ok_or_else(dangling)?;
                if self.masters[inst.master.0].pin(&p.pin).is_none() {
                    return Err(dangling());
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_bus_index_cases() {
        assert_eq!(split_bus_index("data[7]"), ("data", Some(7)));
        assert_eq!(split_bus_index("u1/q[0]"), ("u1/q", Some(0)));
        assert_eq!(split_bus_index("rst"), ("rst", None));
        assert_eq!(split_bus_index("x[a]"), ("x[a]", None));
        assert_eq!(split_bus_index("[3]"), ("[3]", None));
    }

    #[test]
    fn pin_center_of_pinless_master_is_footprint_center() {
        let m = Master {
            name: "m".into(),
            width: 4.0,
            height: 2.0,
            pin_offsets: vec![],
            kind: MasterKind::Macro,
        };
        assert_eq!(m.pin_center(), Point::new(2.0, 1.0));
    }
}
