use super::{AlgebraElement, DirectSumAlgebra, InclusionDescriptor};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};

/// The trace-preserving conditional expectation `M → N` attached to an
/// inclusion: `E(x)_j = Σ_i Σ_c V_{ijc}* x_i V_{ijc}` over the copy
/// isometries of the inclusion.
///
/// It is completely positive and satisfies `Tr_N(E(x) y) = Tr_M(x ι(y))`
/// for the canonical traces. It is unital only when every block of `N` has
/// total multiplicity one; [`ExpectationMap::apply_unital`] divides by the
/// multiplicities and gives the trace-orthogonal projection onto `ι(N)`.
#[derive(Debug, Clone)]
pub struct ExpectationMap {
    inclusion: InclusionDescriptor,
}

pub fn trace_preserving_expectation(inclusion: &InclusionDescriptor) -> ExpectationMap {
    ExpectationMap {
        inclusion: inclusion.clone(),
    }
}

impl ExpectationMap {
    pub fn inclusion(&self) -> &InclusionDescriptor {
        &self.inclusion
    }

    pub fn apply(&self, x: &AlgebraElement) -> Result<AlgebraElement> {
        let inc = &self.inclusion;
        if x.algebra() != inc.sup() {
            return Err(Error::Shape("element does not belong to the larger algebra".into()));
        }
        let sub = inc.sub();
        let blocks = (0..sub.num_blocks())
            .map(|j| {
                let dj = sub.block_dim(j);
                let mut acc = CMat::zeros(dj, dj);
                for i in 0..inc.sup().num_blocks() {
                    for c in 0..inc.multiplicity()[i][j] {
                        let v = inc.copy_isometry(i, j, c);
                        acc += v.adjoint() * x.block(i) * &v;
                    }
                }
                acc
            })
            .collect();
        AlgebraElement::new(sub, blocks)
    }

    /// [`Self::apply`] divided blockwise by the total multiplicities.
    pub fn apply_unital(&self, x: &AlgebraElement) -> Result<AlgebraElement> {
        let y = self.apply(x)?;
        let blocks = y
            .blocks()
            .iter()
            .enumerate()
            .map(|(j, b)| b.unscale(self.inclusion.total_multiplicity(j) as f64))
            .collect();
        AlgebraElement::new(self.inclusion.sub(), blocks)
    }

    /// Smallest eigenvalue over the Choi matrices of the block maps
    /// `M_i → N_j`. Non-negative exactly when the map is completely positive.
    pub fn choi_min_eigenvalue(&self) -> f64 {
        let inc = &self.inclusion;
        let mut worst = f64::INFINITY;
        for i in 0..inc.sup().num_blocks() {
            for j in 0..inc.sub().num_blocks() {
                let m = inc.multiplicity()[i][j];
                if m == 0 {
                    continue;
                }
                let di = inc.sup().block_dim(i);
                let dj = inc.sub().block_dim(j);
                let copies: Vec<CMat> = (0..m).map(|c| inc.copy_isometry(i, j, c)).collect();
                // Choi[(a,p),(b,q)] = Φ(e_ab)[p,q] = Σ_c conj(V_c[a,p]) V_c[b,q].
                let choi = CMat::from_fn(di * dj, di * dj, |r, s| {
                    let (a, p) = (r / dj, r % dj);
                    let (b, q) = (s / dj, s % dj);
                    copies
                        .iter()
                        .map(|v| v[(a, p)].conj() * v[(b, q)])
                        .sum::<C64>()
                });
                worst = worst.min(linalg::min_eigenvalue(&choi));
            }
        }
        worst
    }
}

/// Restriction of a density of `M` (with respect to the canonical trace)
/// to a density of `N`.
pub fn restrict_density(
    density: &AlgebraElement,
    inclusion: &InclusionDescriptor,
    positivity_tol: f64,
) -> Result<AlgebraElement> {
    let dev = density.hermitian_deviation();
    if dev > 1e-12 {
        return Err(Error::NotHermitian(dev));
    }
    let min = density.min_eigenvalue();
    if min < -positivity_tol {
        return Err(Error::NotPositive(min));
    }
    trace_preserving_expectation(inclusion).apply(density)
}

/// `x ↦ Σ_a P_a x P_a` for a complete family of orthogonal projections.
pub fn pinching_expectation(
    x: &AlgebraElement,
    projections: &[AlgebraElement],
    tol: f64,
) -> Result<AlgebraElement> {
    let alg = x.algebra();
    if projections.is_empty() {
        return Err(Error::Projections("empty family".into()));
    }
    if projections.iter().any(|p| p.algebra() != alg) {
        return Err(Error::Shape("projections belong to a different algebra".into()));
    }
    let mut total = alg.zero();
    for (a, p) in projections.iter().enumerate() {
        let idem = p.mul(p)?.sub(p)?.norm();
        let herm = p.sub(&p.adjoint())?.norm();
        if idem.max(herm) > tol {
            return Err(Error::Projections(format!("element {a} is not a projection")));
        }
        for (b, q) in projections.iter().enumerate().skip(a + 1) {
            let overlap = p.mul(q)?.norm();
            if overlap > tol {
                return Err(Error::Projections(format!(
                    "elements {a} and {b} overlap with norm {overlap:e}"
                )));
            }
        }
        total = total.add(p)?;
    }
    let gap = total.sub(&alg.identity())?.norm();
    if gap > tol {
        return Err(Error::Projections(format!("sum differs from identity by {gap:e}")));
    }
    let mut out = alg.zero();
    for p in projections {
        out = out.add(&p.mul(x)?.mul(p)?)?;
    }
    Ok(out)
}

/// Conditional expectation onto the maximal abelian subalgebra diagonal in
/// the given per-block orthonormal bases (columns of `basis[i]`).
pub fn diagonal_expectation(
    x: &AlgebraElement,
    basis: &[CMat],
    tol: f64,
) -> Result<AlgebraElement> {
    let alg: &DirectSumAlgebra = x.algebra();
    if basis.len() != alg.num_blocks() {
        return Err(Error::Shape("one basis per block is required".into()));
    }
    let mut blocks = Vec::with_capacity(basis.len());
    for (i, u) in basis.iter().enumerate() {
        let d = alg.block_dim(i);
        if u.nrows() != d || u.ncols() != d {
            return Err(Error::Shape(format!("basis {i} must be {d}x{d}")));
        }
        let dev = linalg::gram_deviation(u);
        if dev > tol {
            return Err(Error::NotOrthonormal(dev));
        }
        let rotated = u.adjoint() * x.block(i) * u;
        let d_part = CMat::from_diagonal(&rotated.diagonal());
        blocks.push(u * d_part * u.adjoint());
    }
    AlgebraElement::new(alg, blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::re;

    fn inclusion() -> InclusionDescriptor {
        let n = DirectSumAlgebra::new([("x", 1), ("y", 2)]).unwrap();
        let m = DirectSumAlgebra::new([("p", 5), ("q", 2)]).unwrap();
        InclusionDescriptor::standard(n, m, vec![vec![1, 2], vec![0, 1]]).unwrap()
    }

    #[test]
    fn expectation_of_identity_counts_copies() {
        let inc = inclusion();
        let e = trace_preserving_expectation(&inc);
        let one = e.apply(&inc.sup().identity()).unwrap();
        assert!((one.block(0)[(0, 0)] - re(1.0)).norm() < 1e-15);
        assert!((one.block(1)[(0, 0)] - re(3.0)).norm() < 1e-15);
        let unital = e.apply_unital(&inc.sup().identity()).unwrap();
        assert!(unital.sub(&inc.sub().identity()).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn choi_matrix_is_positive() {
        let e = trace_preserving_expectation(&inclusion());
        assert!(e.choi_min_eigenvalue() > -1e-12);
    }

    #[test]
    fn pinching_rejects_incomplete_family() {
        let alg = DirectSumAlgebra::full(2);
        let p = alg.matrix_unit(0, 0, 0);
        assert!(pinching_expectation(&alg.identity(), &[p], 1e-12).is_err());
    }

    #[test]
    fn diagonal_expectation_rejects_non_orthonormal() {
        let alg = DirectSumAlgebra::full(2);
        let mut u = linalg::identity(2);
        u[(0, 1)] = re(0.5);
        assert!(diagonal_expectation(&alg.identity(), &[u], 1e-12).is_err());
    }
}
