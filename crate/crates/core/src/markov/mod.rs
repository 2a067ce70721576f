//! Interaction data, local Hamiltonians and the segment states they define.

mod boundary;
mod hamiltonian;
mod modular;
mod spec;
mod state;

pub use boundary::{perron, stationary_boundaries, transfer_matrix, BoundaryKind, Boundaries};
pub use hamiltonian::{
    assemble_operators, assemble_with_boundaries, bond_term, left_site_term, right_site_term,
    verify_commutation, CommutationReport, LocalOperator, Segment, SegmentHamiltonian,
};
pub use modular::{modular_flow, modular_stabilization};
pub use spec::{
    ensure_valid, validate_spec, BondData, Chain, InteractionSpec, LabelBlock, LogBase,
    SiteBlocks, SiteData, Violation,
};
pub use state::{
    evaluate_state, kms_residual, segment_density, EvalMode, PathBlock, SegmentState,
    StateOptions,
};
