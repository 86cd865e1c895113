use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{
    split_bus_index, Instance, InstanceId, Master, MasterId, Net, NetId, Netlist, NetlistError,
    PinRef,
};
use crate::geom::{Outline, Side};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetlistDoc {
    outline: Outline,
    masters: Vec<Master>,
    instances: Vec<InstanceDoc>,
    #[serde(default)]
    nets: Vec<NetDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    name: String,
    master: String,
    hierarchy_path: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    io_side: Option<Side>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PinRefDoc {
    instance: String,
    pin: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetDoc {
    /// Scalar bus members carry their index inline, e.g. `data[3]`.
    base_name: String,
    driver: PinRefDoc,
    sinks: Vec<PinRefDoc>,
    #[serde(default = "one")]
    bit_width: u32,
}

fn one() -> u32 {
    1
}

/// Parses and validates a netlist document. Instance ids follow document order.
pub fn parse_netlist(text: &str) -> Result<Netlist, NetlistError> {
    let doc: NetlistDoc = serde_json::from_str(text)?;
    if !(doc.outline.width > 0.0 && doc.outline.height > 0.0) {
        return Err(NetlistError::BadOutline {
            width: doc.outline.width,
            height: doc.outline.height,
        });
    }
    if doc.instances.is_empty() {
        return Err(NetlistError::MissingInstances);
    }

    let master_ids: HashMap<&str, MasterId> = doc
        .masters
        .iter()
        .enumerate()
        .map(|(i, m)| (m.name.as_str(), MasterId(i)))
        .collect();

    let mut instances = Vec::with_capacity(doc.instances.len());
    let mut io_side = BTreeMap::new();
    let mut by_name: HashMap<&str, InstanceId> = HashMap::with_capacity(doc.instances.len());
    for (i, inst) in doc.instances.iter().enumerate() {
        let id = InstanceId(i);
        if by_name.insert(inst.name.as_str(), id).is_some() {
            return Err(NetlistError::DuplicateName(inst.name.clone()));
        }
        let master = *master_ids
            .get(inst.master.as_str())
            .ok_or_else(|| NetlistError::UnknownMaster {
                instance: inst.name.clone(),
                master: inst.master.clone(),
            })?;
        if let Some(side) = inst.io_side {
            io_side.insert(id, side);
        }
        instances.push(Instance {
            id,
            name: inst.name.clone(),
            master,
            hierarchy_path: inst.hierarchy_path.clone(),
        });
    }

    let mut nets = Vec::with_capacity(doc.nets.len());
    for (i, net) in doc.nets.iter().enumerate() {
        let resolve = |p: &PinRefDoc| {
            by_name
                .get(p.instance.as_str())
                .map(|&id| PinRef::new(id, p.pin.clone()))
                .ok_or_else(|| NetlistError::DanglingPin {
                    net: net.base_name.clone(),
                    instance: p.instance.clone(),
                    pin: p.pin.clone(),
                })
        };
        let (base, bit_index) = split_bus_index(&net.base_name);
        nets.push(Net {
            id: NetId(i),
            base_name: base.to_string(),
            bit_index,
            driver: resolve(&net.driver)?,
            sinks: net.sinks.iter().map(resolve).collect::<Result<_, _>>()?,
            bit_width: net.bit_width,
        });
    }

    let netlist = Netlist {
        outline: doc.outline,
        masters: doc.masters,
        instances,
        nets,
        io_side,
    };
    netlist.validate()?;
    Ok(netlist)
}

/// Serializes a netlist back into the document format accepted by [`parse_netlist`].
pub fn to_document_string(netlist: &Netlist) -> String {
    let name = |id: InstanceId| netlist.instances[id.0].name.clone();
    let pin = |p: &PinRef| PinRefDoc {
        instance: name(p.instance),
        pin: p.pin.clone(),
    };
    let doc = NetlistDoc {
        outline: netlist.outline,
        masters: netlist.masters.clone(),
        instances: netlist
            .instances
            .iter()
            .map(|i| InstanceDoc {
                name: i.name.clone(),
                master: netlist.masters[i.master.0].name.clone(),
                hierarchy_path: i.hierarchy_path.clone(),
                io_side: netlist.io_side.get(&i.id).copied(),
            })
            .collect(),
        nets: netlist
            .nets
            .iter()
            .map(|n| NetDoc {
                base_name: n.full_name(),
                driver: pin(&n.driver),
                sinks: n.sinks.iter().map(pin).collect(),
                bit_width: n.bit_width,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("netlist document serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::MasterKind;

    const MINIMAL: &str = r#"{
      "outline": {"width": 100, "height": 80},
      "masters": [
        {"name": "SRAM", "width": 20, "height": 10, "kind": "macro",
         "pin_offsets": [{"name": "Q", "dx": 20, "dy": 5}]},
        {"name": "BUF", "width": 1, "height": 1, "kind": "cell",
         "pin_offsets": [{"name": "A", "dx": 0, "dy": 0.5}]}
      ],
      "instances": [
        {"name": "mem0", "master": "SRAM", "hierarchy_path": ["top", "mem"]},
        {"name": "u1", "master": "BUF", "hierarchy_path": ["top", "logic"]}
      ],
      "nets": [
        {"base_name": "q", "driver": {"instance": "mem0", "pin": "Q"},
         "sinks": [{"instance": "u1", "pin": "A"}]}
      ]
    }"#;

    #[test]
    fn minimal_document_parses() {
        let n = parse_netlist(MINIMAL).unwrap();
        assert_eq!(n.instances.len(), 2);
        assert_eq!(n.nets.len(), 1);
        assert_eq!(n.nets[0].bit_width, 1);
        assert_eq!(n.kind_of(InstanceId(0)), MasterKind::Macro);
        assert_eq!(n.instances[1].id, InstanceId(1));
    }

    #[test]
    fn zero_instances_is_missing_instances() {
        let doc = r#"{"outline": {"width": 1, "height": 1}, "masters": [], "instances": [], "nets": []}"#;
        assert!(matches!(parse_netlist(doc), Err(NetlistError::MissingInstances)));
    }

    #[test]
    fn unknown_sink_instance_is_dangling() {
        let doc = MINIMAL.replace(r#"{"instance": "u1", "pin": "A"}"#, r#"{"instance": "u99", "pin": "A"}"#);
        match parse_netlist(&doc) {
            Err(NetlistError::DanglingPin { instance, .. }) => assert_eq!(instance, "u99"),
            other => panic!("expected DanglingPin, got {other:?}"),
        }
    }

    #[test]
    fn unknown_pin_is_dangling() {
        let doc = MINIMAL.replace(r#""pin": "A"}]"#, r#""pin": "Z"}]"#);
        assert!(matches!(parse_netlist(&doc), Err(NetlistError::DanglingPin { .. })));
    }

    #[test]
    fn duplicate_instance_name() {
        let doc = MINIMAL.replace(r#""name": "u1""#, r#""name": "mem0""#);
        assert!(matches!(parse_netlist(&doc), Err(NetlistError::DuplicateName(n)) if n == "mem0"));
    }

    #[test]
    fn non_positive_outline() {
        let doc = MINIMAL.replace(r#""width": 100"#, r#""width": 0"#);
        assert!(matches!(parse_netlist(&doc), Err(NetlistError::BadOutline { .. })));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let doc = MINIMAL.replace(r#""outline""#, r#""bogus": 1, "outline""#);
        assert!(matches!(parse_netlist(&doc), Err(NetlistError::Document(_))));
    }

    #[test]
    fn pin_outside_footprint_is_rejected() {
        let doc = MINIMAL.replace(r#""dx": 20, "dy": 5"#, r#""dx": 21, "dy": 5"#);
        assert!(matches!(parse_netlist(&doc), Err(NetlistError::BadMaster { .. })));
    }

    #[test]
    fn io_pad_requires_side() {
        let doc = r#"{
          "outline": {"width": 10, "height": 10},
          "masters": [{"name": "PAD", "width": 0, "height": 0, "kind": "io_pad",
                       "pin_offsets": [{"name": "P", "dx": 0, "dy": 0}]}],
          "instances": [{"name": "in0", "master": "PAD", "hierarchy_path": ["top"]}]
        }"#;
        assert!(matches!(parse_netlist(doc), Err(NetlistError::MissingIoSide(_))));
        let ok = doc.replace(r#""hierarchy_path": ["top"]"#, r#""hierarchy_path": ["top"], "io_side": "W""#);
        let n = parse_netlist(&ok).unwrap();
        assert_eq!(n.io_side[&InstanceId(0)], Side::W);
    }

    #[test]
    fn bus_member_names_split_and_rejoin() {
        let doc = MINIMAL.replace(r#""base_name": "q""#, r#""base_name": "q[4]""#);
        let n = parse_netlist(&doc).unwrap();
        assert_eq!(n.nets[0].base_name, "q");
        assert_eq!(n.nets[0].bit_index, Some(4));
        let again = parse_netlist(&to_document_string(&n)).unwrap();
        assert_eq!(again, n);
    }
}
