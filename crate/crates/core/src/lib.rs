#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod geom;
pub mod clustering;
pub mod dataflow;
pub mod netlist;
pub mod pipeline;
pub mod placer;
pub mod finetune;
pub mod metrics;
pub mod render;
pub mod synth;
