use super::AlgebraElement;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::tolerance::Tolerances;

/// A joint eigenbasis of a commuting family of Hermitian elements.
#[derive(Debug, Clone)]
pub struct SimultaneousEigen {
    /// Per block, a unitary whose columns are the joint eigenvectors.
    pub bases: Vec<CMat>,
    /// `eigenvalues[op][block][column]`.
    pub eigenvalues: Vec<Vec<Vec<f64>>>,
}

impl SimultaneousEigen {
    /// The tuple of eigenvalues of all operators on one joint eigenvector.
    pub fn joint_values(&self, block: usize, column: usize) -> Vec<f64> {
        self.eigenvalues.iter().map(|op| op[block][column]).collect()
    }
}

/// Joint eigenbasis of commuting Hermitian matrices.
///
/// Eigenspaces are refined operator by operator. Inside every refined
/// subspace the eigenvalues of the current operator are sorted ascending,
/// so the columns are ordered lexicographically by their eigenvalue tuples.
/// Degenerate clusters receive the canonical basis of
/// [`linalg::canonical_basis`], which makes the output independent of the
/// eigensolver's arbitrary choices.
pub fn simultaneous_eigh(mats: &[&CMat], rel_gap: f64) -> (CMat, Vec<Vec<f64>>) {
    let n = mats.first().map_or(0, |m| m.nrows());
    let mut subspaces = vec![linalg::identity(n)];
    for a in mats {
        let mut refined = Vec::with_capacity(subspaces.len());
        for q in &subspaces {
            let compressed = linalg::hermitian_part(&(q.adjoint() * *a * q));
            let (values, vectors) = linalg::eigh(&compressed);
            for range in cluster_by_scale(&values, a, rel_gap) {
                let sub = q * vectors.columns(range.start, range.len());
                refined.push(linalg::canonical_basis(&sub));
            }
        }
        subspaces = refined;
    }
    let mut basis = CMat::zeros(n, n);
    let mut col = 0;
    for q in &subspaces {
        basis.columns_mut(col, q.ncols()).copy_from(q);
        col += q.ncols();
    }
    let values = mats
        .iter()
        .map(|a| {
            (0..n)
                .map(|c| {
                    let v = basis.column(c);
                    (v.adjoint() * *a * v)[(0, 0)].re
                })
                .collect()
        })
        .collect();
    (basis, values)
}

fn cluster_by_scale(values: &[f64], a: &CMat, rel_gap: f64) -> Vec<std::ops::Range<usize>> {
    let scale = a.norm().max(1.0);
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] >= rel_gap * scale {
            if i > start {
                out.push(start..i);
            }
            start = i;
        }
    }
    out
}

/// Joint eigenbasis of a commuting family of Hermitian algebra elements.
pub fn simultaneous_diagonalization(
    ops: &[AlgebraElement],
    tol: &Tolerances,
) -> Result<SimultaneousEigen> {
    let Some(first) = ops.first() else {
        return Err(Error::Shape("at least one operator is required".into()));
    };
    let alg = first.algebra();
    for op in ops {
        if op.algebra() != alg {
            return Err(Error::Shape("operators belong to different algebras".into()));
        }
        let dev = op.hermitian_deviation();
        if dev > tol.hermitian {
            return Err(Error::NotHermitian(dev));
        }
    }
    for (a, x) in ops.iter().enumerate() {
        for y in &ops[a + 1..] {
            let scale = x.norm() * y.norm();
            if scale == 0.0 {
                continue;
            }
            let comm = x.mul(y)?.sub(&y.mul(x)?)?.norm() / scale;
            if comm > tol.commutation_input {
                return Err(Error::NonCommuting(comm));
            }
        }
    }
    let mut bases = Vec::with_capacity(alg.num_blocks());
    let mut eigenvalues = vec![Vec::with_capacity(alg.num_blocks()); ops.len()];
    for i in 0..alg.num_blocks() {
        let mats: Vec<&CMat> = ops.iter().map(|o| o.block(i)).collect();
        let (basis, values) = simultaneous_eigh(&mats, tol.degeneracy);
        bases.push(basis);
        for (slot, v) in eigenvalues.iter_mut().zip(values) {
            slot.push(v);
        }
    }
    Ok(SimultaneousEigen { bases, eigenvalues })
}

/// `exp(x)` for a Hermitian element.
pub fn matrix_exp(x: &AlgebraElement, tol: &Tolerances) -> Result<AlgebraElement> {
    let dev = x.hermitian_deviation();
    if dev > tol.hermitian {
        return Err(Error::NotHermitian(dev));
    }
    Ok(x.map(|b| linalg::hermitian_fn(b, |v| linalg::re(v.exp()))))
}

/// Logarithm of a positive definite element.
pub fn matrix_log(x: &AlgebraElement, tol: &Tolerances) -> Result<AlgebraElement> {
    let dev = x.hermitian_deviation();
    if dev > tol.hermitian {
        return Err(Error::NotHermitian(dev));
    }
    let blocks = x
        .blocks()
        .iter()
        .map(|b| linalg::log_positive(b, tol.log_floor))
        .collect::<Result<Vec<_>>>()?;
    AlgebraElement::new(x.algebra(), blocks)
}
