//! Quantum Markov states on finite segments of a one-dimensional chain.
//!
//! The crate builds the Gibbs-type densities attached to a block-structured
//! nearest-neighbour interaction, diagonalizes them on a canonical abelian
//! subalgebra, recovers the classical Markov measure living there, and
//! classifies the factor generated in the infinite-volume limit.
//!
//! * [`algebra`]: direct sums of matrix algebras, inclusions and expectations.
//! * [`markov`]: interaction data, local Hamiltonians, segment densities.
//! * [`diagonalize`]: diagonal subalgebras, measures and their checks.
//! * [`classify`]: leading spectra, rationality of ratios, factor type.
//! * [`models`]: Ising chains, lifted Markov chains and random instances.

pub mod algebra;
pub mod classify;
pub mod diagonalize;
pub mod error;
pub mod linalg;
pub mod markov;
pub mod models;
pub mod tolerance;

pub use error::{Error, Result};
pub use tolerance::Tolerances;

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/algebras.md")]
    mod algebras {}
    #[doc = include_str!("../../../book/src/interactions.md")]
    mod interactions {}
    #[doc = include_str!("../../../book/src/states.md")]
    mod states {}
    #[doc = include_str!("../../../book/src/diagonal.md")]
    mod diagonal {}
    #[doc = include_str!("../../../book/src/classification.md")]
    mod classification {}
    #[doc = include_str!("../../../book/src/tolerances.md")]
    mod tolerances {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
