use super::data::DiagonalAlgebraData;
use crate::algebra::{diagonal_expectation, AlgebraElement, DirectSumAlgebra, InclusionDescriptor};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, C64};
use crate::markov::{InteractionSpec, Segment, SiteData};

/// One block of the subalgebra `N` of a segment algebra, indexed by the
/// labels at the two ends.
///
/// For a segment of two or more sites the block is
/// `M_{nbar(first)} ⊗ M_mid ⊗ M_{n(last)}`, with `M_mid` the full algebra of
/// the interior sites, and it appears `n(first) * nbar(last)` times. For a
/// single site the blocks are the one-dimensional central projections.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiltrationBlock {
    pub first_label: usize,
    pub last_label: usize,
    pub dim: usize,
    pub copies: usize,
}

/// The subalgebra `N ⊂ M` of a segment that the diagonal subalgebra lives in.
#[derive(Debug, Clone)]
pub struct FiltrationAlgebra {
    pub segment: Segment,
    pub dims: Vec<usize>,
    pub blocks: Vec<FiltrationBlock>,
    pub algebra: DirectSumAlgebra,
    first: SiteData,
    last: SiteData,
}

impl FiltrationAlgebra {
    pub fn new(spec: &InteractionSpec, segment: Segment) -> Result<Self> {
        let dims = spec.segment_dims(segment.k, segment.l)?;
        let first = spec.site(segment.k)?.clone();
        let last = spec.site(segment.l)?.clone();
        let mut blocks = Vec::new();
        if segment.k == segment.l {
            for (w, lb) in first.blocks.labels.iter().enumerate() {
                blocks.push(FiltrationBlock {
                    first_label: w,
                    last_label: w,
                    dim: 1,
                    copies: lb.dim(),
                });
            }
        } else {
            let mid: usize = linalg::volume(&dims[1..dims.len() - 1]);
            for (a, fa) in first.blocks.labels.iter().enumerate() {
                for (b, lb) in last.blocks.labels.iter().enumerate() {
                    blocks.push(FiltrationBlock {
                        first_label: a,
                        last_label: b,
                        dim: fa.nbar * mid * lb.n,
                        copies: fa.n * lb.nbar,
                    });
                }
            }
        }
        let algebra = DirectSumAlgebra::new(blocks.iter().map(|b| {
            let f = &first.blocks.labels[b.first_label].label;
            let l = &last.blocks.labels[b.last_label].label;
            (format!("{f}|{l}"), b.dim)
        }))?;
        Ok(Self {
            segment,
            dims,
            blocks,
            algebra,
            first,
            last,
        })
    }

    pub fn dim(&self) -> usize {
        linalg::volume(&self.dims)
    }

    /// Dimension of the interior sites; one for segments of one or two sites.
    pub fn mid_dim(&self) -> usize {
        if self.dims.len() < 2 {
            1
        } else {
            linalg::volume(&self.dims[1..self.dims.len() - 1])
        }
    }

    fn first_factor(&self, block: &FiltrationBlock, a: usize) -> CMat {
        let lb = self.first.label(block.first_label);
        let v = self.first.isometry(block.first_label);
        // Columns a * nbar + b for b in 0..nbar.
        v.columns(a * lb.nbar, lb.nbar).into_owned()
    }

    fn last_factor(&self, block: &FiltrationBlock, b: usize) -> CMat {
        let lb = self.last.label(block.last_label);
        let v = self.last.isometry(block.last_label);
        CMat::from_fn(v.nrows(), lb.n, |r, a| v[(r, a * lb.nbar + b)])
    }

    /// Isometry from block `j` into the segment space carrying copy `c`.
    pub fn copy_isometry(&self, j: usize, c: usize) -> CMat {
        let block = &self.blocks[j];
        if self.segment.k == self.segment.l {
            let v = self.first.isometry(block.first_label);
            return v.columns(c, 1).into_owned();
        }
        let nbar_last = self.last.label(block.last_label).nbar;
        let (a, b) = (c / nbar_last, c % nbar_last);
        linalg::kron_all([
            &self.first_factor(block, a),
            &linalg::identity(self.mid_dim()),
            &self.last_factor(block, b),
        ])
    }

    /// `copy_isometry(j, c) * psi`, computed without forming the isometry.
    pub fn lift_vector(&self, j: usize, c: usize, psi: &[C64]) -> CVec {
        let block = &self.blocks[j];
        if self.segment.k == self.segment.l {
            let v = self.first.isometry(block.first_label);
            return v.column(c) * psi[0];
        }
        let nbar_last = self.last.label(block.last_label).nbar;
        let (a, b) = (c / nbar_last, c % nbar_last);
        let sk = self.first_factor(block, a);
        let sl = self.last_factor(block, b);
        let (dk, nb) = (sk.nrows(), sk.ncols());
        let (dl, n) = (sl.nrows(), sl.ncols());
        let mid = self.mid_dim();
        let zero = C64::new(0.0, 0.0);
        let mut tmp = vec![zero; dk * mid * n];
        for p in 0..dk {
            for u in 0..nb {
                let s = sk[(p, u)];
                if s == zero {
                    continue;
                }
                for m in 0..mid {
                    for v in 0..n {
                        tmp[(p * mid + m) * n + v] += s * psi[(u * mid + m) * n + v];
                    }
                }
            }
        }
        let mut out = CVec::zeros(dk * mid * dl);
        for p in 0..dk {
            for m in 0..mid {
                for q in 0..dl {
                    let mut acc = zero;
                    for v in 0..n {
                        acc += tmp[(p * mid + m) * n + v] * sl[(q, v)];
                    }
                    out[(p * mid + m) * dl + q] = acc;
                }
            }
        }
        out
    }

    /// The inclusion `N ↪ M` as a descriptor with one embedding unitary.
    pub fn inclusion(&self) -> Result<InclusionDescriptor> {
        let d = self.dim();
        let mut u = CMat::zeros(d, d);
        let mut offset = 0;
        for (j, block) in self.blocks.iter().enumerate() {
            for c in 0..block.copies {
                let v = self.copy_isometry(j, c);
                for x in 0..block.dim {
                    u.set_column(offset + x * block.copies + c, &v.column(x));
                }
            }
            offset += block.dim * block.copies;
        }
        let multiplicity = vec![self.blocks.iter().map(|b| b.copies).collect()];
        InclusionDescriptor::new(
            self.algebra.clone(),
            DirectSumAlgebra::full(d),
            multiplicity,
            vec![u],
        )
    }
}

/// A minimal projection of the diagonal subalgebra: the end labels, the
/// interior labels, and the eigenvector index chosen on every bond.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub block: usize,
    /// Labels `ω_k, …, ω_l`.
    pub labels: Vec<usize>,
    /// Eigenvector index of each bond block `(ω_j, ω_{j+1})`.
    pub indices: Vec<usize>,
}

/// The diagonal subalgebra of `N` for a segment and the conditional
/// expectation onto it.
#[derive(Debug, Clone)]
pub struct DiagonalExpectation {
    pub filtration: FiltrationAlgebra,
    /// Per block of `N`, the unitary whose columns are the atom vectors.
    pub bases: Vec<CMat>,
    /// Per block of `N`, the atom of every column of the basis.
    pub atoms: Vec<Vec<Atom>>,
}

/// Assembles the atom bases of the diagonal subalgebra: products of bond
/// eigenvectors carried into the site spaces by the label isometries.
pub fn diagonal_umegaki_expectation(
    spec: &InteractionSpec,
    data: &DiagonalAlgebraData,
) -> Result<DiagonalExpectation> {
    let segment = data.segment;
    let filtration = FiltrationAlgebra::new(spec, segment)?;
    let counts = data.label_counts();
    let len = segment.len();
    let mut bases = Vec::with_capacity(filtration.blocks.len());
    let mut atoms = Vec::with_capacity(filtration.blocks.len());
    for (j, block) in filtration.blocks.iter().enumerate() {
        if len == 1 {
            bases.push(linalg::identity(1));
            atoms.push(vec![Atom {
                block: j,
                labels: vec![block.first_label],
                indices: Vec::new(),
            }]);
            continue;
        }
        let mut basis = CMat::zeros(block.dim, block.dim);
        let mut block_atoms = Vec::with_capacity(block.dim);
        let interior = &counts[1..len - 1];
        let paths: usize = interior.iter().product();
        let mut col = 0;
        for mut idx in 0..paths {
            let mut labels = vec![0; len];
            labels[0] = block.first_label;
            labels[len - 1] = block.last_label;
            for t in (1..len - 1).rev() {
                labels[t] = idx % counts[t];
                idx /= counts[t];
            }
            let first = spec.site(segment.k)?.label(labels[0]).clone();
            let last = spec.site(segment.l)?.label(labels[len - 1]).clone();
            let mut isos = vec![linalg::identity(first.nbar)];
            for (t, j) in (segment.k + 1..segment.l).enumerate() {
                isos.push(spec.site(j)?.isometry(labels[t + 1]));
            }
            isos.push(linalg::identity(last.n));
            let iso = linalg::kron_all(isos.iter());
            let bond_eigs: Vec<&CMat> = (0..len - 1)
                .map(|t| &data.bonds[t][labels[t]][labels[t + 1]].unitary)
                .collect();
            let sizes: Vec<usize> = bond_eigs.iter().map(|u| u.ncols()).collect();
            let columns = iso * linalg::kron_all(bond_eigs.iter().copied());
            basis.columns_mut(col, columns.ncols()).copy_from(&columns);
            for c in 0..columns.ncols() {
                let mut rest = c;
                let mut indices = vec![0; sizes.len()];
                for (slot, size) in indices.iter_mut().zip(&sizes).rev() {
                    *slot = rest % size;
                    rest /= size;
                }
                block_atoms.push(Atom {
                    block: j,
                    labels: labels.clone(),
                    indices,
                });
            }
            col += columns.ncols();
        }
        if col != block.dim {
            return Err(Error::Shape(format!(
                "atoms of block {j} span {col} dimensions instead of {}",
                block.dim
            )));
        }
        bases.push(basis);
        atoms.push(block_atoms);
    }
    Ok(DiagonalExpectation {
        filtration,
        bases,
        atoms,
    })
}

impl DiagonalExpectation {
    pub fn segment(&self) -> Segment {
        self.filtration.segment
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.iter().map(Vec::len).sum()
    }

    /// `(block, column, atom)` for every atom, block by block.
    pub fn iter_atoms(&self) -> impl Iterator<Item = (usize, usize, &Atom)> {
        self.atoms
            .iter()
            .enumerate()
            .flat_map(|(j, list)| list.iter().enumerate().map(move |(c, a)| (j, c, a)))
    }

    /// Projects an element of `N` onto the diagonal subalgebra.
    pub fn apply(&self, x: &AlgebraElement, orthonormal_tol: f64) -> Result<AlgebraElement> {
        if x.algebra() != &self.filtration.algebra {
            return Err(Error::Shape("element does not belong to the subalgebra".into()));
        }
        diagonal_expectation(x, &self.bases, orthonormal_tol)
    }

    /// Diagonal coefficients `⟨ψ|x|ψ⟩` of an element of `N`, per block.
    pub fn coefficients(&self, x: &AlgebraElement) -> Result<Vec<Vec<C64>>> {
        if x.algebra() != &self.filtration.algebra {
            return Err(Error::Shape("element does not belong to the subalgebra".into()));
        }
        Ok(self
            .bases
            .iter()
            .zip(x.blocks())
            .map(|(u, b)| (u.adjoint() * b * u).diagonal().iter().copied().collect())
            .collect())
    }

    /// Largest Gram deviation among the atom bases.
    pub fn orthonormality_deviation(&self) -> f64 {
        self.bases.iter().map(linalg::gram_deviation).fold(0.0, f64::max)
    }

    /// `φ(χ)` for the central support of an atom in the segment algebra:
    /// the sum over copies of `⟨Vψ|ρ|Vψ⟩`.
    pub fn atom_weight(&self, rho: &CMat, block: usize, column: usize) -> f64 {
        let psi: Vec<C64> = self.bases[block].column(column).iter().copied().collect();
        (0..self.filtration.blocks[block].copies)
            .map(|c| {
                let v = self.filtration.lift_vector(block, c, &psi);
                (v.adjoint() * rho * &v)[(0, 0)].re
            })
            .sum()
    }

    /// `Tr_{ends} |ψ⟩⟨ψ|` on the interior sites, for segments of two or
    /// more sites.
    pub fn reduced_atom(&self, block: usize, column: usize) -> CMat {
        let (nb, n) = self.end_dims(block);
        let psi: Vec<C64> = self.bases[block].column(column).iter().copied().collect();
        linalg::reduce_vector(&psi, &[nb, self.filtration.mid_dim(), n], 1..2)
    }

    /// `(nbar, n)` of the first and last label of a block.
    pub fn end_dims(&self, block: usize) -> (usize, usize) {
        let b = &self.filtration.blocks[block];
        let nb = self.filtration.first.label(b.first_label).nbar;
        let n = self.filtration.last.label(b.last_label).n;
        (nb, n)
    }
}
