use serde::{Deserialize, Serialize};

/// Numerical thresholds used by validation and certification checks.
///
/// Every check in the crate reads its threshold from here, so a single
/// value can be overridden without touching the algorithms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative Frobenius deviation from self-adjointness.
    pub hermitian: f64,
    /// Smallest eigenvalue accepted as non-negative.
    pub positivity: f64,
    /// Smallest eigenvalue accepted before taking a logarithm.
    pub log_floor: f64,
    /// Deviation from idempotence, orthogonality and completeness of projections.
    pub projection: f64,
    /// Gram deviation of a basis claimed to be orthonormal.
    pub orthonormal: f64,
    /// Relative commutator norm accepted when inputs must commute.
    pub commutation_input: f64,
    /// Relative commutator norm accepted for assembled Hamiltonian terms.
    pub commutation: f64,
    /// Relative gap below which eigenvalues are treated as degenerate.
    pub degeneracy: f64,
    /// Unitarity of embeddings and rotations.
    pub unitary: f64,
    /// Agreement between two independent evaluations of a state.
    pub agreement: f64,
    /// KMS condition residual relative to the operator norms.
    pub kms: f64,
    /// Change of the modular flow between consecutive windows.
    pub modular: f64,
    /// Deviation in projectivity, consistency and factorization checks.
    pub structural: f64,
    /// Deviation between a state and its diagonal reconstruction.
    pub diagonalization: f64,
    /// Conditional independence residual of a classical measure.
    pub markov_property: f64,
    /// Deviation of row sums from one.
    pub stochastic: f64,
    /// Spectral values closer than this are merged.
    pub dedup: f64,
    /// Acceptance threshold for rational reconstruction of ratios.
    pub rational: f64,
    /// Largest denominator tried during rational reconstruction.
    pub max_denominator: u64,
    /// Relative spread under which a spectrum counts as a single value.
    pub tracial: f64,
    /// Largest dense matrix dimension that may be materialized.
    pub dense_dim_limit: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-12,
            positivity: 1e-10,
            log_floor: 1e-14,
            projection: 1e-12,
            orthonormal: 1e-12,
            commutation_input: 1e-10,
            commutation: 1e-12,
            degeneracy: 1e-9,
            unitary: 1e-10,
            agreement: 1e-10,
            kms: 1e-9,
            modular: 1e-10,
            structural: 1e-10,
            diagonalization: 1e-10,
            markov_property: 1e-10,
            stochastic: 1e-12,
            dedup: 1e-11,
            rational: 1e-9,
            max_denominator: 64,
            tracial: 1e-12,
            dense_dim_limit: 4096,
        }
    }
}
