//! Cell-cluster global placement and sequence-pair macro annealing.

mod floorplan;
mod gp;
mod loss;
mod sa;
mod seqpair;

use thiserror::Error;

use crate::clustering::ClusterId;

pub use floorplan::{macro_blocks, Floorplan, MacroBlock, PlacedMacro};
pub use gp::{global_place_clusters, GpConfig};
pub use loss::{compute_loss, normalize_macro_area, LossBreakdown, LossConfig, LossModel, LossVariant};
pub use sa::{run_sa, MacroPlacementProblem, SaOutcome, Schedule};
pub use seqpair::{evaluate_sequence_pair, SequencePair};

#[derive(Debug, Error, PartialEq)]
pub enum PlacerError {
    #[error("invalid sequence pair: {0}")]
    BadPermutation(String),
    #[error("cluster {0:?} is referenced by an edge but has no position")]
    UnplacedCluster(ClusterId),
    #[error("no cell clusters to place")]
    EmptyGraph,
    #[error("invalid annealing schedule: {0}")]
    BadSchedule(String),
}
