use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::markov::{Boundaries, InteractionSpec, Segment};
use crate::tolerance::Tolerances;

/// Eigenbasis of one bond block `h_{ωω'}`, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct BondEigen {
    pub unitary: CMat,
    pub eigenvalues: Vec<f64>,
}

/// Eigen-data of every bond block inside a segment, from which the
/// diagonal subalgebra of the segment is assembled.
#[derive(Debug, Clone)]
pub struct DiagonalAlgebraData {
    pub segment: Segment,
    /// Label names per site of the segment.
    pub labels: Vec<Vec<String>>,
    /// `bonds[j - k][ω][ω']` for the bond between `j` and `j + 1`.
    pub bonds: Vec<Vec<Vec<BondEigen>>>,
    /// Constant included in every bond eigenvalue.
    pub bond_shift: f64,
}

impl DiagonalAlgebraData {
    pub fn label_counts(&self) -> Vec<usize> {
        self.labels.iter().map(Vec::len).collect()
    }
}

/// Diagonalizes every bond block of the segment, including the boundary
/// bond shift. Degenerate eigenspaces receive the canonical basis.
pub fn build_diagonal_algebra(
    spec: &InteractionSpec,
    segment: Segment,
    boundaries: &Boundaries,
    tol: &Tolerances,
) -> Result<DiagonalAlgebraData> {
    spec.check_segment(segment.k, segment.l)?;
    let labels = segment
        .sites()
        .map(|j| {
            Ok(spec
                .site(j)?
                .blocks
                .labels
                .iter()
                .map(|b| b.label.clone())
                .collect())
        })
        .collect::<Result<_>>()?;
    let shift = boundaries.bond_shift;
    let bonds = (segment.k..segment.l)
        .map(|j| {
            Ok(spec
                .bond(j)?
                .blocks
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|h| {
                            let (values, unitary) = linalg::eigh_canonical(h, tol.degeneracy);
                            BondEigen {
                                unitary,
                                eigenvalues: values.into_iter().map(|v| v + shift).collect(),
                            }
                        })
                        .collect()
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(DiagonalAlgebraData {
        segment,
        labels,
        bonds,
        bond_shift: shift,
    })
}

/// Scalar boundary potentials of a segment.
///
/// `left[i][ω] = -ln Tr e^{-h_ω}` and `right[i][ω] = -ln Tr e^{-ĥ_ω}` at
/// site `k + i`; `log_z` normalizes the segment and is carried by the last
/// site.
#[derive(Debug, Clone)]
pub struct BoundaryTerms {
    pub segment: Segment,
    pub left: Vec<Vec<f64>>,
    pub right: Vec<Vec<f64>>,
    pub log_z: f64,
}

impl BoundaryTerms {
    /// `K_k(ω)` at the first site.
    pub fn first(&self) -> &[f64] {
        &self.left[0]
    }

    /// `K̂_l(ω) + ln Z` at the last site.
    pub fn last_normalized(&self) -> Vec<f64> {
        self.right[self.right.len() - 1]
            .iter()
            .map(|v| v + self.log_z)
            .collect()
    }
}

/// Boundary potentials and the log partition function of the segment.
pub fn boundary_terms(
    spec: &InteractionSpec,
    segment: Segment,
    boundaries: &Boundaries,
    data: &DiagonalAlgebraData,
) -> Result<BoundaryTerms> {
    if data.segment != segment {
        return Err(Error::Shape("diagonal data belongs to another segment".into()));
    }
    let potentials = |blocks: &[CMat]| -> Vec<f64> {
        blocks.iter().map(|h| -linalg::trace_exp_neg(h).ln()).collect()
    };
    let left: Vec<Vec<f64>> = segment
        .sites()
        .map(|j| Ok(potentials(boundaries.left_blocks(spec, j)?)))
        .collect::<Result<_>>()?;
    let right: Vec<Vec<f64>> = segment
        .sites()
        .map(|j| Ok(potentials(boundaries.right_blocks(spec, j)?)))
        .collect::<Result<_>>()?;

    let mut mass: Vec<f64> = left[0].iter().map(|k| (-k).exp()).collect();
    for bond in &data.bonds {
        let width = bond.first().map_or(0, Vec::len);
        mass = (0..width)
            .map(|wp| {
                mass.iter()
                    .enumerate()
                    .map(|(w, m)| m * bond[w][wp].eigenvalues.iter().map(|l| (-l).exp()).sum::<f64>())
                    .sum()
            })
            .collect();
    }
    let z: f64 = mass
        .iter()
        .zip(&right[right.len() - 1])
        .map(|(m, k)| m * (-k).exp())
        .sum();
    if !(z.is_finite() && z > 0.0) {
        return Err(Error::NotNormalized(z));
    }
    Ok(BoundaryTerms {
        segment,
        left,
        right,
        log_z: z.ln(),
    })
}
