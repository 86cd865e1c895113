use std::collections::HashMap;

use super::{InstanceId, Net, NetId, Netlist};

type BusKey = (String, InstanceId, Vec<InstanceId>);

struct Group {
    first: Net,
    members: u32,
    bit_width: u32,
}

/// Merges indexed scalar nets that share a base name and the same endpoint
/// instances into a single net whose bit width is the member count.
///
/// Grouping ignores index contiguity, so `d[0]` and `d[2]` still form one
/// 2-bit bus. The merged net keeps the pins of its first member and takes the
/// position of that member in the output order. Single-member groups are left
/// untouched, which keeps the transformation idempotent.
pub fn bundle_buses(netlist: &Netlist) -> Netlist {
    let mut slot_of: HashMap<BusKey, usize> = HashMap::new();
    let mut groups: Vec<Group> = Vec::with_capacity(netlist.nets.len());

    for net in &netlist.nets {
        let start_group = |groups: &mut Vec<Group>| {
            groups.push(Group {
                first: net.clone(),
                members: 1,
                bit_width: net.bit_width,
            });
            groups.len() - 1
        };
        if net.bit_index.is_none() {
            start_group(&mut groups);
            continue;
        }
        let mut sinks: Vec<InstanceId> = net.sinks.iter().map(|p| p.instance).collect();
        sinks.sort_unstable();
        let key = (net.base_name.clone(), net.driver.instance, sinks);
        match slot_of.get(&key) {
            Some(&slot) => {
                groups[slot].members += 1;
                groups[slot].bit_width += net.bit_width;
            }
            None => {
                let slot = start_group(&mut groups);
                slot_of.insert(key, slot);
            }
        }
    }

    let nets = groups
        .into_iter()
        .enumerate()
        .map(|(i, g)| {
            let mut net = g.first;
            net.id = NetId(i);
            if g.members > 1 {
                net.bit_index = None;
                net.bit_width = g.bit_width;
            }
            net
        })
        .collect();
    Netlist {
        nets,
        ..netlist.clone()
    }
}
