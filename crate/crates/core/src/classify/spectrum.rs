use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::markov::{bond_term, InteractionSpec, Segment};

/// Distinct eigenvalues of a leading-term Hamiltonian with multiplicities,
/// ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub segment: Segment,
    pub values: Vec<f64>,
    pub multiplicities: Vec<u128>,
    /// The same values as rationals in units of the log base, when every
    /// bond carries exact eigenvalues.
    pub exact: Option<Vec<BigRational>>,
    /// Real value of one exact unit, `ln(base)`; one for float spectra.
    pub unit: f64,
}

impl Spectrum {
    /// Total dimension, the sum of the multiplicities.
    pub fn dim(&self) -> u128 {
        self.multiplicities.iter().sum()
    }

    /// Every eigenvalue repeated by its multiplicity.
    pub fn expanded(&self) -> Vec<f64> {
        self.values
            .iter()
            .zip(&self.multiplicities)
            .flat_map(|(v, &m)| std::iter::repeat_n(*v, m as usize))
            .collect()
    }

    /// Width of the spectrum, `max - min`.
    pub fn spread(&self) -> f64 {
        match (self.values.first(), self.values.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }
}

fn merge_close(mut items: Vec<(f64, u128)>, tol: f64) -> Vec<(f64, u128)> {
    items.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, u128)> = Vec::with_capacity(items.len());
    for (v, m) in items {
        match out.last_mut() {
            Some((u, n)) if (v - *u).abs() <= tol * u.abs().max(1.0) => *n = n.saturating_add(m),
            _ => out.push((v, m)),
        }
    }
    out
}

fn merge_exact(mut items: Vec<(BigRational, u128)>) -> Vec<(BigRational, u128)> {
    items.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out: Vec<(BigRational, u128)> = Vec::with_capacity(items.len());
    for (v, m) in items {
        match out.last_mut() {
            Some((u, n)) if *u == v => *n = n.saturating_add(m),
            _ => out.push((v, m)),
        }
    }
    out
}

/// Sums of bond eigenvalues along every label path of the segment, with
/// the multiplicity `n(first) · nbar(last)` of the untouched end factors.
fn path_sums<T: Clone>(
    spec: &InteractionSpec,
    segment: Segment,
    zero: T,
    bond_values: impl Fn(i64, usize, usize) -> Result<Vec<T>>,
    add: impl Fn(&T, &T) -> T,
    merge: impl Fn(Vec<(T, u128)>) -> Vec<(T, u128)>,
) -> Result<Vec<(T, u128)>> {
    spec.check_segment(segment.k, segment.l)?;
    let first = spec.site(segment.k)?;
    let mut layer: Vec<Vec<(T, u128)>> = first
        .blocks
        .labels
        .iter()
        .map(|b| vec![(zero.clone(), b.n as u128)])
        .collect();
    for j in segment.k..segment.l {
        let next = spec.site(j + 1)?;
        let mut out: Vec<Vec<(T, u128)>> = vec![Vec::new(); next.blocks.num_labels()];
        for (w, sums) in layer.iter().enumerate() {
            for (wp, slot) in out.iter_mut().enumerate() {
                let values = bond_values(j, w, wp)?;
                for (s, m) in sums {
                    for v in &values {
                        slot.push((add(s, v), *m));
                    }
                }
            }
        }
        layer = out.into_iter().map(&merge).collect();
    }
    let last = spec.site(segment.l)?;
    let all = layer
        .into_iter()
        .zip(&last.blocks.labels)
        .flat_map(|(sums, b)| {
            sums.into_iter()
                .map(move |(s, m)| (s, m.saturating_mul(b.nbar as u128)))
        })
        .collect();
    Ok(merge(all))
}

fn has_exact_data(spec: &InteractionSpec) -> bool {
    spec.log_base.is_some() && spec.bonds.iter().all(|b| b.exact.is_some())
}

/// Spectrum of `h_{k,l} = Σ_j H_{j,j+1}`, the bond terms of the segment
/// without boundary terms, assembled from bond eigenvalues along label
/// paths.
///
/// Eigenvalues closer than `dedup` (relative to `max(1, |v|)`) are merged.
/// When `exact` is set and every bond carries exact eigenvalues the sums
/// are formed in rational arithmetic.
pub fn leading_spectrum(
    spec: &InteractionSpec,
    segment: Segment,
    dedup: f64,
    exact: bool,
) -> Result<Spectrum> {
    if exact && has_exact_data(spec) {
        let base = spec.log_base.clone().ok_or(Error::InvalidSpec("missing log base".into()))?;
        let sums = path_sums(
            spec,
            segment,
            BigRational::zero(),
            |j, w, wp| {
                spec.exact_eigenvalues(j, w, wp)?
                    .map(<[BigRational]>::to_vec)
                    .ok_or_else(|| Error::InvalidSpec(format!("bond {j} has no exact eigenvalues")))
            },
            |a, b| a + b,
            merge_exact,
        )?;
        return Ok(Spectrum {
            segment,
            values: sums.iter().map(|(r, _)| base.value(r)).collect(),
            multiplicities: sums.iter().map(|(_, m)| *m).collect(),
            exact: Some(sums.into_iter().map(|(r, _)| r).collect()),
            unit: base.unit(),
        });
    }
    let sums = path_sums(
        spec,
        segment,
        0.0,
        |j, w, wp| Ok(linalg::eigenvalues(&spec.bond(j)?.blocks[w][wp])),
        |a, b| a + b,
        |v| merge_close(v, dedup),
    )?;
    Ok(Spectrum {
        segment,
        values: sums.iter().map(|(v, _)| *v).collect(),
        multiplicities: sums.iter().map(|(_, m)| *m).collect(),
        exact: None,
        unit: 1.0,
    })
}

/// Eigenvalues of the dense leading-term Hamiltonian of the segment,
/// ascending and with repetitions.
pub fn dense_leading_spectrum(spec: &InteractionSpec, segment: Segment, dim_limit: usize) -> Result<Vec<f64>> {
    let dims = spec.segment_dims(segment.k, segment.l)?;
    let dim = linalg::volume(&dims);
    if dim > dim_limit {
        return Err(Error::DenseLimit { dim, limit: dim_limit });
    }
    let mut h = CMat::zeros(dim, dim);
    for (i, j) in (segment.k..segment.l).enumerate() {
        let term = bond_term(spec.site(j)?, spec.site(j + 1)?, &spec.bond(j)?.blocks, 0.0);
        h += linalg::embed(&term, &dims, i);
    }
    Ok(linalg::eigenvalues(&h))
}

/// Pairwise differences of a spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDifferenceSet {
    pub spectrum: Spectrum,
    /// Distinct differences, ascending; symmetric about zero.
    pub differences: Vec<f64>,
    /// The differences in units of the log base, when the spectrum is exact.
    pub exact: Option<Vec<BigRational>>,
    pub dedup: f64,
}

impl SpectralDifferenceSet {
    /// Differences strictly above the dedup threshold, ascending.
    pub fn positive(&self) -> Vec<f64> {
        self.differences.iter().copied().filter(|d| *d > self.dedup).collect()
    }

    pub fn positive_exact(&self) -> Option<Vec<BigRational>> {
        self.exact
            .as_ref()
            .map(|e| e.iter().filter(|d| **d > BigRational::zero()).cloned().collect())
    }
}

/// All differences `h - k` of eigenvalues of the spectrum, merged at `dedup`.
pub fn difference_set(spectrum: &Spectrum, dedup: f64) -> SpectralDifferenceSet {
    let exact = spectrum.exact.as_ref().map(|vals| {
        let diffs = vals
            .iter()
            .flat_map(|a| vals.iter().map(move |b| (a - b, 1u128)))
            .collect();
        merge_exact(diffs).into_iter().map(|(d, _)| d).collect::<Vec<_>>()
    });
    let differences = match &exact {
        Some(e) => e
            .iter()
            .map(|d| d.to_f64().unwrap_or(f64::NAN) * spectrum.unit)
            .collect(),
        None => {
            let v = &spectrum.values;
            let diffs = v.iter().flat_map(|a| v.iter().map(move |b| (a - b, 1u128))).collect();
            let mut out: Vec<f64> = merge_close(diffs, dedup).into_iter().map(|(d, _)| d).collect();
            // Pin the centre and keep the set symmetric after merging.
            let half: Vec<f64> = out.iter().copied().filter(|d| *d > dedup).collect();
            out = half.iter().rev().map(|d| -d).chain([0.0]).chain(half.iter().copied()).collect();
            out
        }
    };
    SpectralDifferenceSet {
        spectrum: spectrum.clone(),
        differences,
        exact,
        dedup,
    }
}
