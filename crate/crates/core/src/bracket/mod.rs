//! Knockout propagation driven by a schedule descriptor.

pub mod dist;
pub mod most_likely;
pub mod propagate;
pub mod schedule;

pub use dist::{
    collapse, merge, merge_singles, Block, BlockDistribution, PairDistribution, SingleDistribution,
    SlotOrder,
};
pub use most_likely::{most_likely_bracket, recompute_probability, BracketAssignment, PlayedMatch};
pub use propagate::{
    compute_tournament, CombinationCounts, ComputeOptions, RoundCount, RoundReachTable,
    TournamentResult,
};
pub use schedule::{
    round_label, OpKind, Pairing, Round, RoundOp, ScheduleDescriptor, BUILTIN_SCHEDULES,
};
