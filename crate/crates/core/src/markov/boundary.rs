use nalgebra::{DMatrix, DVector};

use super::spec::InteractionSpec;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::tolerance::Tolerances;

/// Where the boundary blocks of a segment come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// The `h` and `ĥ` blocks stored in the interaction.
    SpecSupplied,
    /// Blocks making the segment states consistent and shift invariant.
    Stationary,
}

/// Boundary blocks for every site together with a constant added to every
/// bond block.
#[derive(Debug, Clone)]
pub struct Boundaries {
    pub kind: BoundaryKind,
    /// Added to every bond block; removes the growth of the partition function.
    pub bond_shift: f64,
    left: Vec<Vec<CMat>>,
    right: Vec<Vec<CMat>>,
    /// Perron eigenvalue of the transfer matrix over one period.
    pub perron_value: Option<f64>,
    /// Left Perron vectors `l_j`, one per site of the period.
    pub left_vectors: Vec<Vec<f64>>,
    /// Right Perron vectors `r_j`, one per site of the period.
    pub right_vectors: Vec<Vec<f64>>,
}

impl Boundaries {
    pub fn from_spec(spec: &InteractionSpec) -> Self {
        Self {
            kind: BoundaryKind::SpecSupplied,
            bond_shift: 0.0,
            left: spec.sites.iter().map(|s| s.h.clone()).collect(),
            right: spec.sites.iter().map(|s| s.h_hat.clone()).collect(),
            perron_value: None,
            left_vectors: Vec::new(),
            right_vectors: Vec::new(),
        }
    }

    /// Left boundary blocks `h_ω` of site `j`, acting on `ℂ^n`.
    pub fn left_blocks(&self, spec: &InteractionSpec, j: i64) -> Result<&[CMat]> {
        Ok(&self.left[spec.site_index(j)?])
    }

    /// Right boundary blocks `ĥ_ω` of site `j`, acting on `ℂ^nbar`.
    pub fn right_blocks(&self, spec: &InteractionSpec, j: i64) -> Result<&[CMat]> {
        Ok(&self.right[spec.site_index(j)?])
    }
}

/// `V[ω][ω'] = Tr exp(-(h_{ωω'} + shift))` for the bond between `j` and `j + 1`.
pub fn transfer_matrix(spec: &InteractionSpec, j: i64, shift: f64) -> Result<DMatrix<f64>> {
    let bond = spec.bond(j)?;
    let rows = bond.blocks.len();
    let cols = bond.blocks.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(rows, cols, |a, b| {
        linalg::trace_exp_neg(&bond.blocks[a][b]) * (-shift).exp()
    }))
}

/// Perron eigenvalue with right and left eigenvectors of a strictly
/// positive matrix. The right vector has mean one; the left vector is
/// scaled so that `left · right = 1`.
pub fn perron(m: &DMatrix<f64>) -> Result<(f64, DVector<f64>, DVector<f64>)> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::TransferMatrix("matrix must be square and non-empty".into()));
    }
    if let Some(bad) = m.iter().find(|v| !v.is_finite() || **v <= 0.0) {
        return Err(Error::TransferMatrix(format!("entry {bad} is not positive and finite")));
    }
    let n = m.nrows();
    // Repeated squaring converges to the rank-one Perron projection.
    let mut p = m / m.max();
    for _ in 0..64 {
        let next = &p * &p;
        let scale = next.max();
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::TransferMatrix("power iteration degenerated".into()));
        }
        let next = next / scale;
        let change = (&next - &p).amax();
        p = next;
        if change < 1e-16 {
            break;
        }
    }
    let ones = DVector::from_element(n, 1.0);
    let mut right = &p * &ones;
    let mut left = p.transpose() * &ones;
    for _ in 0..4 {
        right = m * &right;
        right /= right.mean();
        left = m.transpose() * &left;
        left /= left.mean();
    }
    let value = (left.dot(&(m * &right))) / left.dot(&right);
    let left = &left / left.dot(&right);
    Ok((value, right, left))
}

/// Boundary blocks under which the segment states of a periodic spec form
/// a consistent, period-shift invariant family with unit partition function.
pub fn stationary_boundaries(spec: &InteractionSpec, tol: &Tolerances) -> Result<Boundaries> {
    let p = spec.period().ok_or(Error::NotPeriodic)?;
    let raw: Vec<DMatrix<f64>> = (0..p as i64)
        .map(|j| transfer_matrix(spec, j, 0.0))
        .collect::<Result<_>>()?;
    let product = raw.iter().skip(1).fold(raw[0].clone(), |acc, v| acc * v);
    let (value, right0, left0) = perron(&product)?;
    let shift = value.ln() / p as f64;
    let factor = (-shift).exp();
    let scaled: Vec<DMatrix<f64>> = raw.iter().map(|v| v * factor).collect();

    // r_j = V_j r_{j+1}, l_{j+1} = l_j V_j, indices modulo the period.
    let mut right = vec![right0.clone(); p];
    for j in (1..p).rev() {
        let v = &scaled[j] * &right[(j + 1) % p];
        right[j] = v;
    }
    let mut left = vec![left0.clone(); p];
    for j in 1..p {
        left[j] = (left[j - 1].transpose() * &scaled[j - 1]).transpose();
    }

    let mut left_blocks = Vec::with_capacity(p);
    let mut right_blocks = Vec::with_capacity(p);
    for j in 0..p {
        let site = &spec.sites[j];
        let prev = (j + p - 1) % p;
        let prev_site = &spec.sites[prev];
        let prev_bond = &spec.bonds[prev];
        let mut hs = Vec::with_capacity(site.blocks.num_labels());
        for (wp, lb) in site.blocks.labels.iter().enumerate() {
            let mut acc = CMat::zeros(lb.n, lb.n);
            for (w, pl) in prev_site.blocks.labels.iter().enumerate() {
                let e = linalg::exp_neg(&prev_bond.blocks[w][wp]) * linalg::re(factor);
                let reduced = linalg::partial_trace(&e, &[pl.nbar, lb.n], 1..2);
                acc += reduced * linalg::re(left[prev][w]);
            }
            hs.push(-linalg::log_positive(&linalg::hermitian_part(&acc), tol.log_floor)?);
        }
        left_blocks.push(hs);

        let next = (j + 1) % p;
        let next_site = &spec.sites[next];
        let bond = &spec.bonds[j];
        let mut hats = Vec::with_capacity(site.blocks.num_labels());
        for (w, lb) in site.blocks.labels.iter().enumerate() {
            let mut acc = CMat::zeros(lb.nbar, lb.nbar);
            for (wp, nl) in next_site.blocks.labels.iter().enumerate() {
                let e = linalg::exp_neg(&bond.blocks[w][wp]) * linalg::re(factor);
                let reduced = linalg::partial_trace(&e, &[lb.nbar, nl.n], 0..1);
                acc += reduced * linalg::re(right[next][wp]);
            }
            hats.push(-linalg::log_positive(&linalg::hermitian_part(&acc), tol.log_floor)?);
        }
        right_blocks.push(hats);
    }

    Ok(Boundaries {
        kind: BoundaryKind::Stationary,
        bond_shift: shift,
        left: left_blocks,
        right: right_blocks,
        perron_value: Some(value),
        left_vectors: left.iter().map(|v| v.iter().copied().collect()).collect(),
        right_vectors: right.iter().map(|v| v.iter().copied().collect()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perron_of_stochastic_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[0.9, 0.1, 0.4, 0.6]);
        let (value, right, left) = perron(&m).unwrap();
        assert!((value - 1.0).abs() < 1e-14);
        assert!(right.iter().all(|v| (v - 1.0).abs() < 1e-13));
        assert!((left[0] - 0.8).abs() < 1e-13 && (left[1] - 0.2).abs() < 1e-13);
    }

    #[test]
    fn perron_rejects_zero_entries() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 0.5]);
        assert!(perron(&m).is_err());
    }
}
