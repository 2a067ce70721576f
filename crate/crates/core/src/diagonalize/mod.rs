//! The diagonal subalgebra of a segment, the expectation onto it and the
//! classical Markov measure it carries.

mod checks;
mod data;
mod expectation;
mod measure;

pub use checks::{
    commuting_square_check, diagonalize_segment, label_path_pinching,
    potential_restriction_check, verify_diagonalization, Diagonalization,
    DiagonalizationReport,
};
pub use data::{boundary_terms, build_diagonal_algebra, BondEigen, BoundaryTerms, DiagonalAlgebraData};
pub use expectation::{
    diagonal_umegaki_expectation, Atom, DiagonalExpectation, FiltrationAlgebra, FiltrationBlock,
};
pub use measure::{
    certify_atom_weights, extract_markov_measure, markov_property_check, ClassicalMarkovChain,
    MarkovPropertyReport, RefinedState, EXHAUSTIVE_LIMIT,
};
