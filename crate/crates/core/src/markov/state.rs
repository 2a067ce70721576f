use super::boundary::{BoundaryKind, Boundaries};
use super::hamiltonian::{assemble_with_boundaries, LocalOperator, Segment, SegmentHamiltonian};
use super::spec::InteractionSpec;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};
use crate::tolerance::Tolerances;

/// How a state is evaluated on an observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// `Tr(ρ A)` with `ρ` the product of the local exponentials.
    Dense,
    /// Sum over label paths of the tensor-product blocks of `ρ`.
    BlockPath,
}

/// Options for [`segment_density`].
#[derive(Debug, Clone)]
pub struct StateOptions {
    /// Materialize the dense density from the local exponentials.
    pub dense: bool,
    pub tolerances: Tolerances,
}

impl Default for StateOptions {
    fn default() -> Self {
        Self {
            dense: true,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone)]
struct SiteLayout {
    offsets: Vec<usize>,
    block_dims: Vec<usize>,
    embedding: Option<CMat>,
}

/// The normalized density of a segment together with the ingredients of
/// its block decomposition.
///
/// For a label path `(ω_k, …, ω_l)` the density restricted to the
/// corresponding block is the tensor product
/// `e^{-h_k} ⊗ e^{-h_{k,k+1}} ⊗ … ⊗ e^{-ĥ_l} / Z`, read on the factors
/// `ℂ^{n_k}, ℂ^{nbar_k} ⊗ ℂ^{n_{k+1}}, …, ℂ^{nbar_l}`.
#[derive(Debug, Clone)]
pub struct SegmentState {
    pub segment: Segment,
    pub dims: Vec<usize>,
    /// Local terms, with `ln Z` absorbed into the right boundary.
    pub hamiltonian: SegmentHamiltonian,
    pub log_z: f64,
    pub boundary_kind: BoundaryKind,
    layouts: Vec<SiteLayout>,
    left_exp: Vec<CMat>,
    bond_exp: Vec<Vec<Vec<CMat>>>,
    right_exp: Vec<CMat>,
    dense: Option<CMat>,
}

/// One label path with its tensor-product block and total weight.
#[derive(Debug, Clone)]
pub struct PathBlock {
    pub labels: Vec<usize>,
    pub block: CMat,
    /// Trace of the block: the probability of the label path.
    pub weight: f64,
}

/// Builds the normalized density of `segment`.
pub fn segment_density(
    spec: &InteractionSpec,
    segment: Segment,
    boundaries: &Boundaries,
    options: &StateOptions,
) -> Result<SegmentState> {
    let dims = spec.segment_dims(segment.k, segment.l)?;
    let total = linalg::volume(&dims);
    let limit = options.tolerances.dense_dim_limit;
    if options.dense && total > limit {
        return Err(Error::DenseLimit { dim: total, limit });
    }
    let mut hamiltonian = assemble_with_boundaries(spec, segment, boundaries)?;

    let layouts = segment
        .sites()
        .map(|j| {
            let site = spec.site(j)?;
            Ok(SiteLayout {
                offsets: site.blocks.offsets(),
                block_dims: site.blocks.labels.iter().map(|b| b.dim()).collect(),
                embedding: site.embedding.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let left_exp: Vec<CMat> = boundaries
        .left_blocks(spec, segment.k)?
        .iter()
        .map(linalg::exp_neg)
        .collect();
    let mut right_exp: Vec<CMat> = boundaries
        .right_blocks(spec, segment.l)?
        .iter()
        .map(linalg::exp_neg)
        .collect();
    let shift = linalg::re(boundaries.bond_shift);
    let bond_exp: Vec<Vec<Vec<CMat>>> = (segment.k..segment.l)
        .map(|j| {
            Ok(spec
                .bond(j)?
                .blocks
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|h| {
                            let shifted = h + linalg::identity(h.nrows()) * shift;
                            linalg::exp_neg(&shifted)
                        })
                        .collect()
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    // Partition function by transfer along the segment.
    let mut mass: Vec<f64> = left_exp.iter().map(|m| m.trace().re).collect();
    for bond in &bond_exp {
        let width = bond.first().map_or(0, Vec::len);
        mass = (0..width)
            .map(|wp| {
                mass.iter()
                    .enumerate()
                    .map(|(w, m)| m * bond[w][wp].trace().re)
                    .sum()
            })
            .collect();
    }
    let z: f64 = mass
        .iter()
        .zip(&right_exp)
        .map(|(m, r)| m * r.trace().re)
        .sum();
    if !(z.is_finite() && z > 0.0) {
        return Err(Error::NotNormalized(z));
    }
    let log_z = z.ln();
    for r in &mut right_exp {
        *r = r.unscale(z);
    }
    let last = hamiltonian.right.matrix.nrows();
    hamiltonian.right.matrix += linalg::identity(last) * linalg::re(log_z);
    hamiltonian.normalization_shift = log_z;

    let dense = if options.dense {
        let mut rho = linalg::identity(total);
        let n = dims.len();
        linalg::apply_left(&linalg::exp_neg(&hamiltonian.left.matrix), &dims, 0, &mut rho);
        for (i, b) in hamiltonian.bonds.iter().enumerate() {
            linalg::apply_left(&linalg::exp_neg(&b.matrix), &dims, i, &mut rho);
        }
        linalg::apply_left(&linalg::exp_neg(&hamiltonian.right.matrix), &dims, n - 1, &mut rho);
        Some(linalg::hermitian_part(&rho))
    } else {
        None
    };

    Ok(SegmentState {
        segment,
        dims,
        hamiltonian,
        log_z,
        boundary_kind: boundaries.kind,
        layouts,
        left_exp,
        bond_exp,
        right_exp,
        dense,
    })
}

impl SegmentState {
    pub fn dim(&self) -> usize {
        linalg::volume(&self.dims)
    }

    /// Number of labels at each site of the segment.
    pub fn label_counts(&self) -> Vec<usize> {
        self.layouts.iter().map(|l| l.offsets.len()).collect()
    }

    /// All label paths in lexicographic order, first site most significant.
    pub fn label_paths(&self) -> Vec<Vec<usize>> {
        let counts = self.label_counts();
        let total: usize = counts.iter().product();
        (0..total)
            .map(|mut idx| {
                let mut path = vec![0; counts.len()];
                for (slot, &c) in path.iter_mut().zip(&counts).rev() {
                    *slot = idx % c;
                    idx /= c;
                }
                path
            })
            .collect()
    }

    /// Tensor-product block of the density for one label path, in the
    /// standard block coordinates.
    pub fn path_block(&self, labels: &[usize]) -> CMat {
        let last = labels.len() - 1;
        let mut factors: Vec<&CMat> = Vec::with_capacity(labels.len() + 1);
        factors.push(&self.left_exp[labels[0]]);
        for (i, bond) in self.bond_exp.iter().enumerate() {
            factors.push(&bond[labels[i]][labels[i + 1]]);
        }
        factors.push(&self.right_exp[labels[last]]);
        linalg::kron_all(factors)
    }

    pub fn paths(&self) -> impl Iterator<Item = PathBlock> + '_ {
        self.label_paths().into_iter().map(move |labels| {
            let block = self.path_block(&labels);
            let weight = block.trace().re;
            PathBlock {
                labels,
                block,
                weight,
            }
        })
    }

    /// Standard coordinates of the rows of a path block.
    fn path_indices(&self, labels: &[usize]) -> Vec<usize> {
        let mut indices = vec![0usize];
        for (j, &w) in labels.iter().enumerate() {
            let lay = &self.layouts[j];
            let d = self.dims[j];
            let (off, len) = (lay.offsets[w], lay.block_dims[w]);
            indices = indices
                .iter()
                .flat_map(|&base| (0..len).map(move |x| base * d + off + x))
                .collect();
        }
        indices
    }

    fn rotate(&self, m: &mut CMat, inverse: bool) {
        for (j, lay) in self.layouts.iter().enumerate() {
            if let Some(u) = &lay.embedding {
                let u = if inverse { u.adjoint() } else { u.clone() };
                linalg::conjugate_local(&u, &self.dims, j, m);
            }
        }
    }

    /// The density assembled path by path, independently of the dense route.
    pub fn block_path_density(&self) -> CMat {
        let d = self.dim();
        let mut rho = CMat::zeros(d, d);
        for labels in self.label_paths() {
            let block = self.path_block(&labels);
            let idx = self.path_indices(&labels);
            for (x, &gx) in idx.iter().enumerate() {
                for (y, &gy) in idx.iter().enumerate() {
                    rho[(gx, gy)] = block[(x, y)];
                }
            }
        }
        self.rotate(&mut rho, false);
        rho
    }

    /// The dense density, when it was materialized.
    pub fn dense_density(&self) -> Option<&CMat> {
        self.dense.as_ref()
    }

    /// The dense density if available, otherwise the block-path density.
    pub fn density(&self) -> CMat {
        match &self.dense {
            Some(rho) => rho.clone(),
            None => self.block_path_density(),
        }
    }

    /// Probability of every label path.
    pub fn path_weights(&self) -> Vec<(Vec<usize>, f64)> {
        self.paths().map(|p| (p.labels, p.weight)).collect()
    }

    /// `φ(A)` for an operator supported inside the segment.
    pub fn evaluate(&self, observable: &LocalOperator, mode: EvalMode) -> Result<C64> {
        let a = observable.embed_into(self.segment, &self.dims)?;
        self.evaluate_matrix(&a, mode)
    }

    /// `φ(A)` for a matrix on the whole segment.
    pub fn evaluate_matrix(&self, a: &CMat, mode: EvalMode) -> Result<C64> {
        let d = self.dim();
        if a.nrows() != d || a.ncols() != d {
            return Err(Error::Shape(format!("observable must be {d}x{d}")));
        }
        match mode {
            EvalMode::Dense => {
                let rho = self
                    .dense
                    .as_ref()
                    .ok_or_else(|| Error::Shape("dense density was not materialized".into()))?;
                Ok(rho.component_mul(&a.transpose()).sum())
            }
            EvalMode::BlockPath => {
                let mut rotated = a.clone();
                self.rotate(&mut rotated, true);
                let mut acc = C64::new(0.0, 0.0);
                for labels in self.label_paths() {
                    let block = self.path_block(&labels);
                    let idx = self.path_indices(&labels);
                    for (x, &gx) in idx.iter().enumerate() {
                        for (y, &gy) in idx.iter().enumerate() {
                            acc += block[(x, y)] * rotated[(gy, gx)];
                        }
                    }
                }
                Ok(acc)
            }
        }
    }

    /// Reduced density on a sub-segment.
    pub fn reduced_density(&self, keep: Segment) -> Result<CMat> {
        if !self.segment.contains(&keep) {
            return Err(Error::SegmentOutOfRange {
                k: keep.k,
                l: keep.l,
            });
        }
        let start = (keep.k - self.segment.k) as usize;
        Ok(linalg::partial_trace(
            &self.density(),
            &self.dims,
            start..start + keep.len(),
        ))
    }
}

/// `φ(A)` in the requested mode.
pub fn evaluate_state(state: &SegmentState, observable: &LocalOperator, mode: EvalMode) -> Result<C64> {
    state.evaluate(observable, mode)
}

/// `|φ(A σ_{-i}(B)) - φ(BA)| / (‖A‖_F ‖B‖_F)` for the modular group of the
/// segment density, `σ_{-i}(B) = ρ B ρ^{-1}`.
pub fn kms_residual(state: &SegmentState, a: &CMat, b: &CMat, tol: &Tolerances) -> Result<f64> {
    let rho = state.density();
    let min = linalg::min_eigenvalue(&rho);
    if min <= tol.log_floor {
        return Err(Error::NotPositive(min));
    }
    let inv = linalg::hermitian_fn(&rho, |x| linalg::re(1.0 / x));
    let lhs = (&rho * a * &rho * b * &inv).trace();
    let rhs = (&rho * b * a).trace();
    let scale = (a.norm() * b.norm()).max(f64::MIN_POSITIVE);
    Ok((lhs - rhs).norm() / scale)
}
