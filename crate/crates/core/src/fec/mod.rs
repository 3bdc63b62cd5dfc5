//! Outer convolutional codes, their decoders, soft MIMO detection and small
//! random codebooks.
//!
//! LLRs are natural-log ratios `ln P(bit = 0) / P(bit = 1)` throughout.

pub mod bcjr;
pub mod conv;
pub mod detector;
pub mod iterative;
pub mod random_code;
pub mod viterbi;

pub use bcjr::{bcjr_decode, BcjrOutput};
pub use conv::{conv_encode, ConvCode};
pub use detector::{app_extrinsics, group_log_likelihoods, maxlog_app_detect, DetectorKind};
pub use iterative::{iterative_detect_decode, DetectionGroup};
pub use random_code::{blockwise_min_distance, expurgated_codebook, ml_decode_bruteforce, random_codebook, RandomCodebook};
pub use viterbi::{list_viterbi_decode, path_metric, viterbi_decode, ListCandidate};
