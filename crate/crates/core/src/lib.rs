//! Channel-adapted quantum error correction.
//!
//! Finds encoder/decoder pairs `(E, D)` maximizing the channel fidelity
//! `F_C(D ∘ T ∘ E)` for an arbitrary noise channel `T`. Each half of the
//! search is a linear problem over channels, solved by a normalized power
//! iteration on the Kraus operators ([`iterate`]); the halves alternate in
//! [`seesaw`].

pub mod channel;
pub mod codes;
pub mod error;
pub mod iterate;
pub mod linalg;
pub mod objective;
pub mod random;
pub mod seesaw;
pub mod standard;

pub use channel::{
    chain_fidelity, channel_fidelity, choi_of, compose, compress, kraus_of, tensor_power,
    validate_channel, Channel, ChoiOperator, CpMap, TransferMatrix, ValidationReport,
};
pub use codes::{five_bit_code, trivial_code, CodePair};
pub use error::{Error, Result};
pub use iterate::{
    iteration_step, optimize_channel, perturb, IterationConfig, IterationStepReport,
    OptimizationTrace, StopReason,
};
pub use objective::{
    decoder_objective, encoder_objective, evaluate_objective, middle_objective, ObjectiveOperator,
};
pub use standard::{bit_flip, complete_to_tp, depolarizing, mix_with_identity, random_channel, RandomChannelSpec};
pub use seesaw::{
    isometry_defect, optimize_code, optimize_code_from, syndrome_diagnostic, CodeSearchResult,
    DiagnosticConfig, DiagnosticsReport, KrausCount, SeesawConfig,
};
