use super::{AlgebraElement, DirectSumAlgebra};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// A unital embedding `N ↪ M` of direct sums.
///
/// `multiplicity[i][j]` is the number of copies of block `j` of `N` inside
/// block `i` of `M`. In block `i` of `M`, copy `c` of the `a`-th basis vector
/// of `N_j` is column `offset(i, j) + a * m_ij + c` of the unitary
/// `embeddings[i]`, where `offset(i, j)` is the sum of `m_ij' * dim N_j'`
/// over `j' < j`. With identity unitaries this is the standard embedding
/// `y ↦ ⊕_j (y_j ⊗ I_{m_ij})`.
#[derive(Debug, Clone, PartialEq)]
pub struct InclusionDescriptor {
    sub: DirectSumAlgebra,
    sup: DirectSumAlgebra,
    multiplicity: Vec<Vec<usize>>,
    embeddings: Vec<CMat>,
}

impl InclusionDescriptor {
    pub fn new(
        sub: DirectSumAlgebra,
        sup: DirectSumAlgebra,
        multiplicity: Vec<Vec<usize>>,
        embeddings: Vec<CMat>,
    ) -> Result<Self> {
        if multiplicity.len() != sup.num_blocks()
            || multiplicity.iter().any(|row| row.len() != sub.num_blocks())
        {
            return Err(Error::Inclusion(format!(
                "multiplicity matrix must be {}x{}",
                sup.num_blocks(),
                sub.num_blocks()
            )));
        }
        for (i, row) in multiplicity.iter().enumerate() {
            let filled: usize = row.iter().zip(sub.blocks()).map(|(m, b)| m * b.dim).sum();
            if filled != sup.block_dim(i) {
                return Err(Error::Inclusion(format!(
                    "block {} of the larger algebra has dimension {} but receives {}",
                    sup.blocks()[i].label,
                    sup.block_dim(i),
                    filled
                )));
            }
        }
        for j in 0..sub.num_blocks() {
            if multiplicity.iter().all(|row| row[j] == 0) {
                return Err(Error::Inclusion(format!(
                    "block {} of the smaller algebra is not embedded",
                    sub.blocks()[j].label
                )));
            }
        }
        if embeddings.len() != sup.num_blocks() {
            return Err(Error::Inclusion("one embedding unitary per block is required".into()));
        }
        for (i, u) in embeddings.iter().enumerate() {
            let d = sup.block_dim(i);
            if u.nrows() != d || u.ncols() != d {
                return Err(Error::Inclusion(format!("embedding {i} must be {d}x{d}")));
            }
            let dev = linalg::gram_deviation(u);
            if dev > 1e-10 * (d as f64).sqrt().max(1.0) {
                return Err(Error::Inclusion(format!(
                    "embedding {i} is not unitary (Gram deviation {dev:e})"
                )));
            }
        }
        Ok(Self {
            sub,
            sup,
            multiplicity,
            embeddings,
        })
    }

    /// The standard embedding with identity unitaries.
    pub fn standard(
        sub: DirectSumAlgebra,
        sup: DirectSumAlgebra,
        multiplicity: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let embeddings = sup.blocks().iter().map(|b| linalg::identity(b.dim)).collect();
        Self::new(sub, sup, multiplicity, embeddings)
    }

    pub fn sub(&self) -> &DirectSumAlgebra {
        &self.sub
    }

    pub fn sup(&self) -> &DirectSumAlgebra {
        &self.sup
    }

    pub fn multiplicity(&self) -> &[Vec<usize>] {
        &self.multiplicity
    }

    pub fn embeddings(&self) -> &[CMat] {
        &self.embeddings
    }

    /// Total number of copies of block `j` across all blocks of `M`.
    pub fn total_multiplicity(&self, j: usize) -> usize {
        self.multiplicity.iter().map(|row| row[j]).sum()
    }

    fn offset(&self, i: usize, j: usize) -> usize {
        self.multiplicity[i][..j]
            .iter()
            .zip(self.sub.blocks())
            .map(|(m, b)| m * b.dim)
            .sum()
    }

    /// The isometry `N_j → M_i` carrying copy `c`.
    pub fn copy_isometry(&self, i: usize, j: usize, c: usize) -> CMat {
        let m = self.multiplicity[i][j];
        assert!(c < m, "copy index out of range");
        let dj = self.sub.block_dim(j);
        let off = self.offset(i, j);
        let u = &self.embeddings[i];
        CMat::from_fn(u.nrows(), dj, |r, a| u[(r, off + a * m + c)])
    }

    /// Image of an element of `N` in `M`.
    pub fn embed(&self, y: &AlgebraElement) -> Result<AlgebraElement> {
        if y.algebra() != &self.sub {
            return Err(Error::Shape("element does not belong to the smaller algebra".into()));
        }
        let blocks = (0..self.sup.num_blocks())
            .map(|i| {
                let d = self.sup.block_dim(i);
                let mut local = CMat::zeros(d, d);
                let mut off = 0;
                for (j, &m) in self.multiplicity[i].iter().enumerate() {
                    if m == 0 {
                        continue;
                    }
                    let dj = self.sub.block_dim(j);
                    let piece = linalg::kron(y.block(j), &linalg::identity(m));
                    local.view_mut((off, off), (dj * m, dj * m)).copy_from(&piece);
                    off += dj * m;
                }
                let u = &self.embeddings[i];
                u * local * u.adjoint()
            })
            .collect();
        AlgebraElement::new(&self.sup, blocks)
    }

    /// Largest violation of the *-homomorphism relations on matrix units,
    /// together with `ι(1) = 1`.
    pub fn homomorphism_deviation(&self) -> Result<f64> {
        let one = self.embed(&self.sub.identity())?;
        let mut worst = one.sub(&self.sup.identity())?.max_abs();
        for (j, b) in self.sub.blocks().iter().enumerate() {
            let units: Vec<Vec<AlgebraElement>> = (0..b.dim)
                .map(|r| {
                    (0..b.dim)
                        .map(|c| self.embed(&self.sub.matrix_unit(j, r, c)))
                        .collect::<Result<_>>()
                })
                .collect::<Result<_>>()?;
            for r in 0..b.dim {
                for c in 0..b.dim {
                    let adj = units[r][c].adjoint().sub(&units[c][r])?.max_abs();
                    worst = worst.max(adj);
                    for d in 0..b.dim {
                        let prod = units[r][c].mul(&units[c][d])?;
                        worst = worst.max(prod.sub(&units[r][d])?.max_abs());
                    }
                }
            }
        }
        Ok(worst)
    }

    /// Compresses an element of `M` to `N` through the first copy of each block.
    ///
    /// For elements in the image of the inclusion this inverts [`Self::embed`].
    pub fn compress(&self, x: &AlgebraElement) -> Result<AlgebraElement> {
        if x.algebra() != &self.sup {
            return Err(Error::Shape("element does not belong to the larger algebra".into()));
        }
        let blocks = (0..self.sub.num_blocks())
            .map(|j| {
                let i = (0..self.sup.num_blocks())
                    .find(|&i| self.multiplicity[i][j] > 0)
                    .expect("every block is embedded");
                let v = self.copy_isometry(i, j, 0);
                v.adjoint() * x.block(i) * v
            })
            .collect();
        AlgebraElement::new(&self.sub, blocks)
    }
}
