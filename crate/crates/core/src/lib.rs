//! Lower-rank strategically equivalent bimatrix games.
//!
//! The crate detects whether a bimatrix game `(A, B)` admits a positive
//! affine transformation lowering the rank of `A + B`, and constructs the
//! transformed game together with a replayable certificate. The machinery
//! is a staged canonical form of the matrix pencil `A + lambda B` plus a
//! rank-one (Wedderburn) update driven by ones-vector solves.

pub mod error;
pub mod genericlab;
pub mod matrix;
pub mod oracle;
pub mod pencil;
pub mod reduction;
pub mod wedderburn;

pub use error::Error;
pub use genericlab::{
    check_square_limit, run_experiment, sample_planted_pat, sample_square_game,
    sample_structured_rect_game, ExperimentKind, ExperimentReport, PlantedPat,
};
pub use matrix::{EchelonResult, Matrix, Tolerance};
pub use oracle::{enumerate_equilibria, equivalent, EquilibriumSet, MixedProfile};
pub use pencil::{
    positive_real_spectrum, rank_at, tw_stage1, tw_stage2, twcf_spectrum, PencilSpectrum,
    PencilStage, SpectrumEntry,
};
pub use reduction::{
    apply_pat, find_gamma_star, reduce, reduce_one_step_column, reduce_one_step_row,
    reduce_two_step, BimatrixGame, PatParams, ReductionCertificate, ReductionPath,
};
pub use wedderburn::{
    default_probes, rank_reducing_process, span_preserved, wedderburn_step, DecompositionTrail,
    RankOneUpdate,
};
