//! Seeded synthetic designs: hierarchical blocks of cells, memories wired to
//! them by buses, and IO pads on every side.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geom::{Outline, Side};
use crate::netlist::{
    Instance, InstanceId, Master, MasterId, MasterKind, Net, NetId, Netlist, PinDir, PinOffset, PinRef,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub macros: usize,
    pub blocks: usize,
    pub cells_per_block: usize,
    pub io_per_side: usize,
    /// Bits per macro-to-block bus, each direction.
    pub bus_bits: u32,
    pub mm_buses: usize,
    pub mm_bits: u32,
    /// Fraction of cell nets whose sinks stay in the driver's block.
    pub locality: f64,
    /// Placed area over outline area.
    pub utilization: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            macros: 6,
            blocks: 4,
            cells_per_block: 120,
            io_per_side: 2,
            bus_bits: 16,
            mm_buses: 3,
            mm_bits: 4,
            locality: 0.9,
            utilization: 0.5,
            seed: 1,
        }
    }
}

impl SynthConfig {
    /// About `instances` instances in blocks of at most 400 cells.
    pub fn with_instances(instances: usize, seed: u64) -> Self {
        let blocks = instances.div_ceil(400).max(2);
        let macros = (blocks * 2).min(24);
        let io = 2;
        let cells = instances.saturating_sub(macros + 4 * io);
        Self {
            macros,
            blocks,
            cells_per_block: (cells / blocks).max(1),
            io_per_side: io,
            seed,
            ..Self::default()
        }
    }

    pub fn instance_count(&self) -> usize {
        self.macros + self.blocks * self.cells_per_block + 4 * self.io_per_side
    }
}

struct Builder {
    masters: Vec<Master>,
    instances: Vec<Instance>,
    nets: Vec<Net>,
    io_side: BTreeMap<InstanceId, Side>,
}

impl Builder {
    fn master(&mut self, m: Master) -> MasterId {
        self.masters.push(m);
        MasterId(self.masters.len() - 1)
    }

    fn instance(&mut self, name: String, master: MasterId, path: &[String]) -> InstanceId {
        let id = InstanceId(self.instances.len());
        self.instances.push(Instance {
            id,
            name,
            master,
            hierarchy_path: path.to_vec(),
        });
        id
    }

    fn net(&mut self, name: String, bit: Option<u32>, driver: PinRef, sinks: Vec<PinRef>) {
        let id = NetId(self.nets.len());
        self.nets.push(Net {
            id,
            base_name: name,
            bit_index: bit,
            driver,
            sinks,
            bit_width: 1,
        });
    }
}

fn pin(name: &str, dx: f64, dy: f64, dir: PinDir) -> PinOffset {
    PinOffset {
        name: name.into(),
        dx,
        dy,
        dir,
    }
}

/// Pins clustered around a random point on one macro edge, away from the center.
fn macro_pins<R: Rng>(w: f64, h: f64, rng: &mut R) -> Vec<PinOffset> {
    let t = if rng.gen_bool(0.5) { rng.gen_range(0.1..0.3) } else { rng.gen_range(0.7..0.9) };
    let (d, q) = match rng.gen_range(0..4) {
        0 => ((0.0, t * h), (0.0, (t * h + 0.5).min(h))),
        1 => ((w, t * h), (w, (t * h + 0.5).min(h))),
        2 => ((t * w, 0.0), ((t * w + 0.5).min(w), 0.0)),
        _ => ((t * w, h), ((t * w + 0.5).min(w), h)),
    };
    vec![pin("D", d.0, d.1, PinDir::Input), pin("Q", q.0, q.1, PinDir::Output)]
}

/// Builds a valid netlist from `config`. The same config always yields the
/// same netlist.
pub fn generate(config: &SynthConfig) -> Netlist {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let blocks = config.blocks.max(1);
    let mut b = Builder {
        masters: Vec::new(),
        instances: Vec::new(),
        nets: Vec::new(),
        io_side: BTreeMap::new(),
    };

    let cell = b.master(Master {
        name: "CELL".into(),
        width: 1.0,
        height: 1.0,
        pin_offsets: vec![
            pin("A", 0.0, 0.5, PinDir::Input),
            pin("B", 0.5, 0.0, PinDir::Input),
            pin("Y", 1.0, 0.5, PinDir::Output),
        ],
        kind: MasterKind::Cell,
    });
    let pad = b.master(Master {
        name: "PAD".into(),
        width: 0.0,
        height: 0.0,
        pin_offsets: vec![pin("P", 0.0, 0.0, PinDir::Inout)],
        kind: MasterKind::IoPad,
    });

    let top = "top".to_string();
    let mut macro_area = 0.0;
    let mut macros = Vec::with_capacity(config.macros);
    for i in 0..config.macros {
        let w = rng.gen_range(6..=16) as f64;
        let h = rng.gen_range(6..=16) as f64;
        macro_area += w * h;
        let pins = macro_pins(w, h, &mut rng);
        let m = b.master(Master {
            name: format!("MEM{i}"),
            width: w,
            height: h,
            pin_offsets: pins,
            kind: MasterKind::Macro,
        });
        let blk = format!("blk{}", i % blocks);
        let leaf = format!("mem{i}");
        let name = format!("{blk}/{leaf}/ram");
        macros.push(b.instance(name, m, &[top.clone(), blk, leaf]));
    }

    let mut cells: Vec<Vec<InstanceId>> = Vec::with_capacity(blocks);
    for blk in 0..blocks {
        let path = [top.clone(), format!("blk{blk}")];
        cells.push(
            (0..config.cells_per_block)
                .map(|k| b.instance(format!("blk{blk}/u{k}"), cell, &path))
                .collect(),
        );
    }

    let mut pads = Vec::new();
    for side in Side::ALL {
        for j in 0..config.io_per_side {
            let id = b.instance(format!("io_{side}{j}").to_lowercase(), pad, std::slice::from_ref(&top));
            b.io_side.insert(id, side);
            pads.push(id);
        }
    }

    let pick = |rng: &mut ChaCha8Rng, blk: usize| *cells[blk].choose(rng).expect("non-empty block");
    let has_cells = config.cells_per_block > 0;

    // cell-to-cell nets
    if has_cells {
        for (blk, members) in cells.iter().enumerate() {
            for (k, &drv) in members.iter().enumerate() {
                let fanout = rng.gen_range(1..=3);
                let mut sinks = Vec::new();
                for s in 0..fanout {
                    let target = if rng.gen::<f64>() < config.locality { blk } else { rng.gen_range(0..blocks) };
                    let sink = pick(&mut rng, target);
                    if sink != drv {
                        sinks.push(PinRef::new(sink, if s % 2 == 0 { "A" } else { "B" }));
                    }
                }
                sinks.sort();
                sinks.dedup();
                if !sinks.is_empty() {
                    b.net(format!("blk{blk}/n{k}"), None, PinRef::new(drv, "Y"), sinks);
                }
            }
        }
    }

    // macro buses to the home block and one other block
    if has_cells {
        for (i, &m) in macros.iter().enumerate() {
            let home = i % blocks;
            let other = (home + 1 + rng.gen_range(0..blocks.max(2) - 1)) % blocks;
            for (tag, blk, bits) in [("h", home, config.bus_bits), ("o", other, config.bus_bits / 2)] {
                for bit in 0..bits {
                    let sink = pick(&mut rng, blk);
                    b.net(format!("mem{i}_rd{tag}"), Some(bit), PinRef::new(m, "Q"), vec![PinRef::new(sink, "A")]);
                    let drv = pick(&mut rng, blk);
                    b.net(format!("mem{i}_wr{tag}"), Some(bit), PinRef::new(drv, "Y"), vec![PinRef::new(m, "D")]);
                }
            }
        }
    }

    // macro-to-macro buses
    if macros.len() >= 2 {
        for j in 0..config.mm_buses {
            let a = rng.gen_range(0..macros.len());
            let mut c = rng.gen_range(0..macros.len() - 1);
            if c >= a {
                c += 1;
            }
            for bit in 0..config.mm_bits {
                b.net(
                    format!("mm{j}"),
                    Some(bit),
                    PinRef::new(macros[a], "Q"),
                    vec![PinRef::new(macros[c], "D")],
                );
            }
        }
    }

    // pads, each fanning into or out of a few cells of one block
    if has_cells {
        for (j, &p) in pads.iter().enumerate() {
            let blk = rng.gen_range(0..blocks);
            let mut sinks: Vec<PinRef> = (0..4).map(|_| PinRef::new(pick(&mut rng, blk), "B")).collect();
            sinks.sort();
            sinks.dedup();
            if j % 2 == 0 {
                b.net(format!("pad{j}"), None, PinRef::new(p, "P"), sinks);
            } else {
                let drv = pick(&mut rng, blk);
                b.net(format!("pad{j}"), None, PinRef::new(drv, "Y"), vec![PinRef::new(p, "P")]);
            }
        }
    }

    let placed = macro_area + (blocks * config.cells_per_block) as f64;
    let side = (placed / config.utilization.clamp(0.05, 1.0)).sqrt().ceil();
    let max_macro = b
        .masters
        .iter()
        .filter(|m| m.kind == MasterKind::Macro)
        .map(|m| m.width.max(m.height))
        .fold(0.0, f64::max);
    let side = side.max(max_macro * 2.0).max(10.0);

    let netlist = Netlist {
        outline: Outline::new(side, side),
        masters: b.masters,
        instances: b.instances,
        nets: b.nets,
        io_side: b.io_side,
    };
    debug_assert!(netlist.validate().is_ok());
    netlist
}
