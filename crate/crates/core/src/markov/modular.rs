use super::hamiltonian::{bond_term, LocalOperator, Segment};
use super::spec::InteractionSpec;
use crate::error::{Error, Result};
use crate::linalg;

/// `σ_t(A)` approximated on the window `[-n, n]` by conjugating with the
/// exponentials of the bond terms inside the window.
pub fn modular_flow(spec: &InteractionSpec, a: &LocalOperator, t: f64, n: usize) -> Result<LocalOperator> {
    if n == 0 {
        return Err(Error::Window("window radius must be at least 1".into()));
    }
    let window = Segment::new(-(n as i64), n as i64)?;
    if !window.contains(&a.support()) {
        return Err(Error::Window(format!(
            "support {} is not inside the window {window}",
            a.support()
        )));
    }
    let dims = spec.segment_dims(window.k, window.l)?;
    let mut m = a.embed_into(window, &dims)?;
    for (i, j) in (window.k..window.l).enumerate() {
        let h = bond_term(spec.site(j)?, spec.site(j + 1)?, &spec.bond(j)?.blocks, 0.0);
        linalg::conjugate_local(&linalg::exp_it(&h, t), &dims, i, &mut m);
    }
    LocalOperator::new(window.k, dims, m)
}

/// Largest entry of `σ_t^{(n+1)}(A) - σ_t^{(n)}(A)` relative to the largest
/// entry of `A`, both read on the window `[-n-1, n+1]`.
pub fn modular_stabilization(spec: &InteractionSpec, a: &LocalOperator, t: f64, n: usize) -> Result<f64> {
    let small = modular_flow(spec, a, t, n)?;
    let large = modular_flow(spec, a, t, n + 1)?;
    let window = large.support();
    let extended = small.embed_into(window, &large.dims)?;
    let scale = linalg::max_abs(&a.matrix).max(f64::MIN_POSITIVE);
    Ok(linalg::max_abs(&(extended - &large.matrix)) / scale)
}
