//! Dense complex linear algebra shared by all modules.
//!
//! Matrices are `nalgebra` dynamic matrices over `Complex<f64>`. Tensor
//! products follow the usual Kronecker convention: in `a ⊗ b` the index of
//! `b` varies fastest.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Complex number with zero imaginary part.
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Real diagonal matrix with the given entries.
pub fn diag(values: &[f64]) -> CMat {
    CMat::from_diagonal(&CVec::from_iterator(values.len(), values.iter().map(|&v| re(v))))
}

pub fn frobenius(m: &CMat) -> f64 {
    m.norm()
}

/// Largest entry modulus.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `‖m - m*‖_F / ‖m‖_F`, or the absolute deviation when `m` vanishes.
pub fn hermitian_deviation(m: &CMat) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let dev = (m - m.adjoint()).norm();
    let scale = m.norm();
    if scale > 0.0 {
        dev / scale
    } else {
        dev
    }
}

pub fn ensure_hermitian(m: &CMat, tol: f64) -> Result<()> {
    let dev = hermitian_deviation(m);
    if dev <= tol {
        Ok(())
    } else {
        Err(Error::NotHermitian(dev))
    }
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// `‖U*U - I‖_F`.
pub fn gram_deviation(u: &CMat) -> f64 {
    (u.adjoint() * u - identity(u.ncols())).norm()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Kronecker product of a sequence, left to right. The empty product is `[1]`.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a CMat>) -> CMat {
    factors
        .into_iter()
        .fold(identity(1), |acc, f| acc.kronecker(f))
}

/// `‖ab - ba‖_F / (‖a‖_F ‖b‖_F)`, zero when either factor vanishes.
pub fn relative_commutator(a: &CMat, b: &CMat) -> f64 {
    let scale = a.norm() * b.norm();
    if scale == 0.0 {
        return 0.0;
    }
    (a * b - b * a).norm() / scale
}

/// Eigen-decomposition of a Hermitian matrix with ascending eigenvalues.
///
/// The basis is not canonicalized; use [`eigh_canonical`] when the
/// eigenvectors themselves are part of the output.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn eigenvalues(m: &CMat) -> Vec<f64> {
    eigh(m).0
}

/// Groups ascending values into clusters separated by gaps of at least
/// `rel_gap * max(1, max |v|)`.
pub fn clusters(values: &[f64], rel_gap: f64) -> Vec<std::ops::Range<usize>> {
    let scale = values.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
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

/// Deterministic orthonormal basis of the column span of `q`.
///
/// `q` must have orthonormal columns. The result is obtained by projecting
/// the standard basis vectors onto the span in index order and
/// orthonormalizing those whose residual is not too small, so it depends
/// only on the subspace and not on the basis `q` it was handed.
pub fn canonical_basis(q: &CMat) -> CMat {
    let n = q.nrows();
    let r = q.ncols();
    if r == 0 {
        return q.clone();
    }
    // Work in coordinates relative to q: the projection of e_i is q * w_i
    // with w_i = conj(row i of q).
    let threshold = 0.5 / n as f64;
    let mut accepted: Vec<CVec> = Vec::with_capacity(r);
    for floor in [threshold, 1e-24] {
        for i in 0..n {
            if accepted.len() == r {
                break;
            }
            let mut w: CVec = q.row(i).adjoint();
            for _ in 0..2 {
                for u in &accepted {
                    let c = u.dotc(&w);
                    w -= u * c;
                }
            }
            let norm2 = w.norm_squared();
            if norm2 >= floor {
                accepted.push(w.unscale(norm2.sqrt()));
            }
        }
        if accepted.len() == r {
            break;
        }
    }
    let coeffs = CMat::from_columns(&accepted);
    q * coeffs
}

/// Eigen-decomposition with ascending eigenvalues and a canonical basis
/// inside every degenerate cluster.
pub fn eigh_canonical(m: &CMat, rel_gap: f64) -> (Vec<f64>, CMat) {
    let (values, vectors) = eigh(m);
    let mut out = vectors.clone();
    for range in clusters(&values, rel_gap) {
        let block = vectors.columns(range.start, range.len()).into_owned();
        out.columns_mut(range.start, range.len())
            .copy_from(&canonical_basis(&block));
    }
    (values, out)
}

/// `f(m)` for Hermitian `m` by spectral calculus.
pub fn hermitian_fn(m: &CMat, f: impl Fn(f64) -> C64) -> CMat {
    let (values, v) = eigh(m);
    let mut scaled = v.clone();
    for (j, &lam) in values.iter().enumerate() {
        let fj = f(lam);
        for z in scaled.column_mut(j).iter_mut() {
            *z *= fj;
        }
    }
    scaled * v.adjoint()
}

/// `exp(-m)` for Hermitian `m`.
pub fn exp_neg(m: &CMat) -> CMat {
    hermitian_fn(m, |x| re((-x).exp()))
}

/// `exp(i t m)` for Hermitian `m`.
pub fn exp_it(m: &CMat, t: f64) -> CMat {
    hermitian_fn(m, |x| C64::from_polar(1.0, t * x))
}

/// `Tr exp(-m)` for Hermitian `m`.
pub fn trace_exp_neg(m: &CMat) -> f64 {
    eigenvalues(m).iter().map(|x| (-x).exp()).sum()
}

/// Logarithm of a positive definite matrix.
pub fn log_positive(m: &CMat, floor: f64) -> Result<CMat> {
    let values = eigenvalues(m);
    let min = values.first().copied().unwrap_or(1.0);
    if min <= floor {
        return Err(Error::NotPositive(min));
    }
    Ok(hermitian_fn(m, |x| re(x.ln())))
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    eigenvalues(m).first().copied().unwrap_or(0.0)
}

pub fn trace(m: &CMat) -> C64 {
    m.trace()
}

/// Product of dimensions.
pub fn volume(dims: &[usize]) -> usize {
    dims.iter().product()
}

/// Volumes before, inside and after the factors `sites`.
fn split(dims: &[usize], sites: std::ops::Range<usize>) -> (usize, usize, usize) {
    let before = volume(&dims[..sites.start]);
    let mid = volume(&dims[sites.clone()]);
    let after = volume(&dims[sites.end..]);
    (before, mid, after)
}

/// `I ⊗ op ⊗ I` where `op` acts on the factors starting at `first`.
pub fn embed(op: &CMat, dims: &[usize], first: usize) -> CMat {
    let len = factor_count(op.nrows(), &dims[first..]);
    let (a, _, b) = split(dims, first..first + len);
    kron(&kron(&identity(a), op), &identity(b))
}

fn factor_count(dim: usize, dims: &[usize]) -> usize {
    let mut acc = 1;
    for (i, d) in dims.iter().enumerate() {
        if acc == dim {
            return i;
        }
        acc *= d;
    }
    assert_eq!(acc, dim, "operator dimension does not match the tensor factors");
    dims.len()
}

/// Replaces `target` with `(I ⊗ op ⊗ I) target`, where `op` acts on the
/// factors `first..first + k` for the `k` matching its dimension.
pub fn apply_left(op: &CMat, dims: &[usize], first: usize, target: &mut CMat) {
    let len = factor_count(op.nrows(), &dims[first..]);
    let (a, dx, b) = split(dims, first..first + len);
    let total = a * dx * b;
    assert_eq!(target.nrows(), total);
    let mut gather = vec![C64::new(0.0, 0.0); dx];
    let ncols = target.ncols();
    let data = target.as_mut_slice();
    for col in 0..ncols {
        let column = &mut data[col * total..(col + 1) * total];
        for ia in 0..a {
            for ib in 0..b {
                let base = ia * dx * b + ib;
                for (y, g) in gather.iter_mut().enumerate() {
                    *g = column[base + y * b];
                }
                for x in 0..dx {
                    let mut acc = C64::new(0.0, 0.0);
                    for (y, g) in gather.iter().enumerate() {
                        acc += op[(x, y)] * g;
                    }
                    column[base + x * b] = acc;
                }
            }
        }
    }
}

/// Replaces `target` with `target (I ⊗ op ⊗ I)`.
pub fn apply_right(op: &CMat, dims: &[usize], first: usize, target: &mut CMat) {
    let len = factor_count(op.nrows(), &dims[first..]);
    let (a, dx, b) = split(dims, first..first + len);
    let total = a * dx * b;
    assert_eq!(target.ncols(), total);
    let rows = target.nrows();
    let mut out = CMat::zeros(rows, total);
    for ia in 0..a {
        for ib in 0..b {
            let base = ia * dx * b + ib;
            for x in 0..dx {
                let mut col = out.column_mut(base + x * b);
                for y in 0..dx {
                    let w = op[(y, x)];
                    if w != C64::new(0.0, 0.0) {
                        col.axpy(w, &target.column(base + y * b), C64::new(1.0, 0.0));
                    }
                }
            }
        }
    }
    *target = out;
}

/// `U m U*` with `U = I ⊗ u ⊗ I`.
pub fn conjugate_local(u: &CMat, dims: &[usize], first: usize, target: &mut CMat) {
    apply_left(u, dims, first, target);
    apply_right(&u.adjoint(), dims, first, target);
}

/// Partial trace keeping the factors `keep`.
pub fn partial_trace(m: &CMat, dims: &[usize], keep: std::ops::Range<usize>) -> CMat {
    let (a, dx, b) = split(dims, keep);
    let mut out = CMat::zeros(dx, dx);
    for x in 0..dx {
        for y in 0..dx {
            let mut acc = C64::new(0.0, 0.0);
            for ia in 0..a {
                for ib in 0..b {
                    acc += m[(ia * dx * b + x * b + ib, ia * dx * b + y * b + ib)];
                }
            }
            out[(x, y)] = acc;
        }
    }
    out
}

/// Reduced density `Tr_rest |ψ⟩⟨ψ|` of a vector, keeping the factors `keep`.
pub fn reduce_vector(psi: &[C64], dims: &[usize], keep: std::ops::Range<usize>) -> CMat {
    let (a, dx, b) = split(dims, keep);
    assert_eq!(psi.len(), a * dx * b);
    let mut out = CMat::zeros(dx, dx);
    for ia in 0..a {
        for ib in 0..b {
            for x in 0..dx {
                let px = psi[ia * dx * b + x * b + ib];
                if px == C64::new(0.0, 0.0) {
                    continue;
                }
                for y in 0..dx {
                    out[(x, y)] += px * psi[ia * dx * b + y * b + ib].conj();
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, seed: u64) -> CMat {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        CMat::from_fn(n, n, |_, _| C64::new(next(), next()))
    }

    #[test]
    fn apply_left_matches_embedding() {
        let dims = [2, 3, 2];
        let op = sample(3, 1);
        let t = sample(12, 2);
        let mut fast = t.clone();
        apply_left(&op, &dims, 1, &mut fast);
        let slow = embed(&op, &dims, 1) * &t;
        assert!((fast - slow).norm() < 1e-12);
    }

    #[test]
    fn apply_right_matches_embedding() {
        let dims = [2, 3, 2];
        let op = sample(6, 3);
        let t = sample(12, 4);
        let mut fast = t.clone();
        apply_right(&op, &dims, 0, &mut fast);
        let slow = &t * embed(&op, &dims, 0);
        assert!((fast - slow).norm() < 1e-12);
    }

    #[test]
    fn partial_trace_of_product() {
        let a = sample(2, 5);
        let b = sample(3, 6);
        let m = kron(&a, &b);
        let ra = partial_trace(&m, &[2, 3], 0..1);
        assert!((ra - a.scale(1.0) * b.trace()).norm() < 1e-12);
    }

    #[test]
    fn reduce_vector_matches_partial_trace() {
        let psi: Vec<C64> = sample(12, 7).column(0).iter().copied().collect();
        let v = CVec::from_vec(psi.clone());
        let full = &v * v.adjoint();
        let dims = [2, 3, 2];
        let a = reduce_vector(&psi, &dims, 1..2);
        let b = partial_trace(&full, &dims, 1..2);
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn canonical_basis_is_basis_independent() {
        let m = hermitian_part(&sample(4, 8));
        let (_, v) = eigh(&m);
        let q = v.columns(0, 2).into_owned();
        let u = {
            let (_, w) = eigh(&hermitian_part(&sample(2, 9)));
            w
        };
        let rotated = &q * u;
        let a = canonical_basis(&q);
        let b = canonical_basis(&rotated);
        assert!((a.clone() - b).norm() < 1e-10);
        assert!(gram_deviation(&a) < 1e-12);
    }

    #[test]
    fn eigh_sorts_and_reconstructs() {
        let m = hermitian_part(&sample(5, 10));
        let (values, v) = eigh_canonical(&m, 1e-9);
        assert!(values.windows(2).all(|w| w[0] <= w[1]));
        let rebuilt = &v * diag(&values) * v.adjoint();
        assert!((rebuilt - m).norm() < 1e-12);
    }

    #[test]
    fn clusters_split_on_gaps() {
        let c = clusters(&[0.0, 1e-12, 1.0, 2.0, 2.0], 1e-9);
        assert_eq!(c, vec![0..2, 2..3, 3..5]);
    }
}
