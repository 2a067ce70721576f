//! Finite-dimensional C*-algebras as direct sums of full matrix algebras,
//! their inclusions and the expectations between them.

mod expectation;
mod inclusion;
mod spectral;

pub use expectation::{
    diagonal_expectation, pinching_expectation, restrict_density, trace_preserving_expectation,
    ExpectationMap,
};
pub use inclusion::InclusionDescriptor;
pub use spectral::{matrix_exp, matrix_log, simultaneous_diagonalization, SimultaneousEigen};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};

/// One summand `M_n(ℂ)` of a direct sum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSpec {
    pub label: String,
    pub dim: usize,
}

/// A direct sum `⊕_i M_{n_i}(ℂ)` with labelled blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectSumAlgebra {
    blocks: Vec<BlockSpec>,
}

impl DirectSumAlgebra {
    pub fn new<S: Into<String>>(blocks: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let blocks: Vec<BlockSpec> = blocks
            .into_iter()
            .map(|(label, dim)| BlockSpec {
                label: label.into(),
                dim,
            })
            .collect();
        if blocks.is_empty() {
            return Err(Error::Shape("an algebra needs at least one block".into()));
        }
        for (i, b) in blocks.iter().enumerate() {
            if b.dim == 0 {
                return Err(Error::Shape(format!("block {} has dimension zero", b.label)));
            }
            if blocks[..i].iter().any(|o| o.label == b.label) {
                return Err(Error::Shape(format!("duplicate block label {}", b.label)));
            }
        }
        Ok(Self { blocks })
    }

    /// The full matrix algebra `M_n(ℂ)`.
    pub fn full(dim: usize) -> Self {
        Self::new([("M", dim)]).expect("full matrix algebra of positive dimension")
    }

    /// The abelian algebra `ℂ^n`.
    pub fn abelian(n: usize) -> Self {
        Self::new((0..n).map(|i| (i.to_string(), 1))).expect("abelian algebra of positive dimension")
    }

    pub fn blocks(&self) -> &[BlockSpec] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_dim(&self, i: usize) -> usize {
        self.blocks[i].dim
    }

    /// Dimension of the Hilbert space the algebra acts on block-diagonally.
    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim).sum()
    }

    /// Linear dimension of the algebra.
    pub fn linear_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim * b.dim).sum()
    }

    pub fn identity(&self) -> AlgebraElement {
        AlgebraElement {
            algebra: self.clone(),
            blocks: self.blocks.iter().map(|b| linalg::identity(b.dim)).collect(),
        }
    }

    pub fn zero(&self) -> AlgebraElement {
        AlgebraElement {
            algebra: self.clone(),
            blocks: self.blocks.iter().map(|b| CMat::zeros(b.dim, b.dim)).collect(),
        }
    }

    /// The matrix unit `e_{ab}` of block `block`.
    pub fn matrix_unit(&self, block: usize, a: usize, b: usize) -> AlgebraElement {
        let mut x = self.zero();
        x.blocks[block][(a, b)] = C64::new(1.0, 0.0);
        x
    }

    /// All matrix units, block by block in row-major order.
    pub fn matrix_units(&self) -> Vec<AlgebraElement> {
        let mut out = Vec::with_capacity(self.linear_dim());
        for (i, b) in self.blocks.iter().enumerate() {
            for r in 0..b.dim {
                for c in 0..b.dim {
                    out.push(self.matrix_unit(i, r, c));
                }
            }
        }
        out
    }
}

/// An element of a [`DirectSumAlgebra`], stored block by block.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    algebra: DirectSumAlgebra,
    blocks: Vec<CMat>,
}

impl AlgebraElement {
    pub fn new(algebra: &DirectSumAlgebra, blocks: Vec<CMat>) -> Result<Self> {
        if blocks.len() != algebra.num_blocks() {
            return Err(Error::Shape(format!(
                "expected {} blocks, got {}",
                algebra.num_blocks(),
                blocks.len()
            )));
        }
        for (i, (m, spec)) in blocks.iter().zip(algebra.blocks()).enumerate() {
            if m.nrows() != spec.dim || m.ncols() != spec.dim {
                return Err(Error::Shape(format!(
                    "block {i} is {}x{}, expected {}x{}",
                    m.nrows(),
                    m.ncols(),
                    spec.dim,
                    spec.dim
                )));
            }
        }
        Ok(Self {
            algebra: algebra.clone(),
            blocks,
        })
    }

    /// An element of the full matrix algebra of matching size.
    pub fn from_matrix(m: CMat) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::Shape("expected a non-empty square matrix".into()));
        }
        let algebra = DirectSumAlgebra::full(m.nrows());
        Ok(Self {
            algebra,
            blocks: vec![m],
        })
    }

    pub fn algebra(&self) -> &DirectSumAlgebra {
        &self.algebra
    }

    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &CMat {
        &self.blocks[i]
    }

    pub fn into_blocks(self) -> Vec<CMat> {
        self.blocks
    }

    fn same_algebra(&self, other: &Self) -> Result<()> {
        if self.algebra == other.algebra {
            Ok(())
        } else {
            Err(Error::Shape("elements belong to different algebras".into()))
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&CMat, &CMat) -> CMat) -> Result<Self> {
        self.same_algebra(other)?;
        Ok(Self {
            algebra: self.algebra.clone(),
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|m| m * s)
    }

    pub fn adjoint(&self) -> Self {
        self.map(|m| m.adjoint())
    }

    pub fn map(&self, f: impl Fn(&CMat) -> CMat) -> Self {
        Self {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().map(f).collect(),
        }
    }

    /// Frobenius norm of the block-diagonal matrix.
    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(|b| b.norm_squared()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus over all blocks.
    pub fn max_abs(&self) -> f64 {
        self.blocks.iter().map(linalg::max_abs).fold(0.0, f64::max)
    }

    pub fn hermitian_deviation(&self) -> f64 {
        let dev = self
            .blocks
            .iter()
            .map(|b| (b - b.adjoint()).norm_squared())
            .sum::<f64>()
            .sqrt();
        let scale = self.norm();
        if scale > 0.0 {
            dev / scale
        } else {
            dev
        }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// Smallest eigenvalue over all blocks of a Hermitian element.
    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .map(linalg::min_eigenvalue)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_positive(&self, tol: f64) -> bool {
        self.is_hermitian(1e-12) && self.min_eigenvalue() >= -tol
    }

    /// The block-diagonal matrix representing the element.
    pub fn to_dense(&self) -> CMat {
        let n = self.algebra.total_dim();
        let mut out = CMat::zeros(n, n);
        let mut offset = 0;
        for b in &self.blocks {
            out.view_mut((offset, offset), (b.nrows(), b.ncols())).copy_from(b);
            offset += b.nrows();
        }
        out
    }

    /// Sum of the traces of the blocks.
    pub fn trace(&self) -> C64 {
        self.blocks.iter().map(|b| b.trace()).sum()
    }
}

/// The trace normalized to one on every minimal projection.
pub fn canonical_trace(algebra: &DirectSumAlgebra, x: &AlgebraElement) -> Result<C64> {
    if x.algebra() != algebra {
        return Err(Error::Shape("element does not belong to the algebra".into()));
    }
    Ok(x.trace())
}
