//! Stop-and-wait ARQ over the block-fading channel: transmission layout,
//! decision rules, the per-frame protocol and metric accounting.

pub mod engine;
pub mod link;
pub mod metrics;
pub mod rule;

pub use engine::{decode_round, run_frame, FrameOutcome};
pub use link::{Interleaver, Link};
pub use metrics::{compute_metrics, MetricsReport, Tally};
pub use rule::{
    bounded_distance_decide, chernoff_undetected_bound, delta_schedule, minllr_decide, ped_decide, theta_schedule, Decision, DecisionRule,
    DecoderKind,
};
