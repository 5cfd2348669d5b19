//! Parallel distinguishability of quantum operations.
//!
//! Two channels E and F can be told apart perfectly with N parallel uses
//! exactly when some density operator is Hilbert-Schmidt orthogonal to
//! S^{⊗N}, where S = span{E_j† F_k}. This crate builds S from channel pairs
//! (and channel pairs from any S), decides the orthogonal-density question by
//! semidefinite feasibility with a Farkas dual certificate, computes the
//! exact copy count for one-dimensional S through the field angle of the
//! numerical range, and reproduces the symmetry-reduced linear programs for
//! the diagonal family S_α.

pub mod error;
pub mod feasibility;
pub mod linalg;
pub mod numrange;
pub mod salpha;
pub mod simplex;
pub mod subspace;
pub mod synthesis;

pub use error::{Error, Result};
pub use feasibility::{
    density_in_complement, hermitian_space_decision, parallel_check, pd_in_span, Certificate,
    FeasibilityOptions, FeasibilityOutcome, OutcomeKind,
};
pub use linalg::{eigh, hs_inner, kron, pd_power, psd_project, svd, CMat, EigDecomposition, C64};
pub use numrange::{field_angle, min_support, onedim_witness, Classification, CopyCount, FieldAngleReport};
pub use subspace::{tensor_power_generators, KrausChannel, OperatorSubspace};
pub use synthesis::{
    apply_parallel, channels_from_subspace, discrimination_input, verify_orthogonal_outputs,
    ChannelPair,
};
