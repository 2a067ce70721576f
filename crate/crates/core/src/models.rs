//! Ready-made interaction specs: Ising chains, lifted classical Markov
//! chains and seeded random instances.

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};
use crate::markov::{BondData, Chain, InteractionSpec, LabelBlock, LogBase, SiteBlocks, SiteData};

const SPINS: [(&str, f64); 2] = [("+", 1.0), ("-", -1.0)];

fn scalar(x: f64) -> CMat {
    linalg::diag(&[x])
}

fn ising_site(site: i64) -> SiteData {
    SiteData {
        blocks: SiteBlocks {
            site,
            dim: 2,
            labels: SPINS
                .iter()
                .map(|(l, _)| LabelBlock {
                    label: (*l).to_string(),
                    n: 1,
                    nbar: 1,
                })
                .collect(),
        },
        h: vec![scalar(0.0); 2],
        h_hat: vec![scalar(0.0); 2],
        embedding: None,
    }
}

fn ising_bond(j: f64) -> BondData {
    BondData {
        blocks: SPINS
            .iter()
            .map(|(_, s)| SPINS.iter().map(|(_, t)| scalar(j * s * t)).collect())
            .collect(),
        exact: None,
    }
}

/// Period-two Ising chain with couplings `j1` on even bonds and `j2` on odd
/// bonds: the bond between spins `s, t ∈ {+1, -1}` has energy `J s t`.
pub fn gen_ising(j1: f64, j2: f64) -> InteractionSpec {
    InteractionSpec {
        chain: Chain::Periodic { period: 2 },
        sites: vec![ising_site(0), ising_site(1)],
        bonds: vec![ising_bond(j1), ising_bond(j2)],
        log_base: None,
        seed: None,
    }
}

/// [`gen_ising`] with rational couplings carried as exact eigenvalues.
pub fn gen_ising_exact(j1: &BigRational, j2: &BigRational) -> InteractionSpec {
    let to_f = |r: &BigRational| r.to_f64().unwrap_or(f64::NAN);
    let mut spec = gen_ising(to_f(j1), to_f(j2));
    for (bond, j) in spec.bonds.iter_mut().zip([j1, j2]) {
        bond.exact = Some(
            SPINS
                .iter()
                .map(|(_, s)| {
                    SPINS
                        .iter()
                        .map(|(_, t)| {
                            let sign = if s * t > 0.0 { j.clone() } else { -j.clone() };
                            vec![sign]
                        })
                        .collect()
                })
                .collect(),
        );
    }
    spec.log_base = Some(LogBase::Natural);
    spec
}

/// The classical chain with strictly positive transition matrix `p` as a
/// period-one spec with one-dimensional blocks and bond energies `-ln p`.
pub fn gen_markov_lifting(p: &DMatrix<f64>) -> Result<InteractionSpec> {
    let n = p.nrows();
    if n == 0 || !p.is_square() {
        return Err(Error::Params("transition matrix must be square and non-empty".into()));
    }
    if p.iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(Error::Params("transition probabilities must be strictly positive".into()));
    }
    for (i, row) in p.row_iter().enumerate() {
        let s: f64 = row.sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::Params(format!("row {i} sums to {s}")));
        }
    }
    let first = p[(0, 0)];
    if p.iter().all(|v| *v == first) {
        return Err(Error::Params("transition matrix has all entries equal".into()));
    }
    let labels: Vec<LabelBlock> = (0..n)
        .map(|i| LabelBlock {
            label: i.to_string(),
            n: 1,
            nbar: 1,
        })
        .collect();
    let site = SiteData {
        blocks: SiteBlocks {
            site: 0,
            dim: n,
            labels,
        },
        h: vec![scalar(0.0); n],
        h_hat: vec![scalar(0.0); n],
        embedding: None,
    };
    let bond = BondData {
        blocks: (0..n)
            .map(|a| (0..n).map(|b| scalar(-p[(a, b)].ln())).collect())
            .collect(),
        exact: None,
    };
    Ok(InteractionSpec {
        chain: Chain::Periodic { period: 1 },
        sites: vec![site],
        bonds: vec![bond],
        log_base: None,
        seed: None,
    })
}

/// Where random eigenvalues are drawn from.
#[derive(Debug, Clone, PartialEq)]
pub enum EigenvaluePool {
    /// Multiples `r ln 2` or `r ln 3` with `r ∈ {-1, -1/2, 0, 1/2, 1, 3/2, 2}`.
    Mixed,
    /// Multiples `r ln(base)` with `r` from the given list; recorded exactly.
    RationalLog {
        base: BigRational,
        values: Vec<BigRational>,
    },
}

/// Parameters of [`gen_random`].
#[derive(Debug, Clone, PartialEq)]
pub struct RandomParams {
    pub seed: u64,
    /// Site dimensions over one period.
    pub site_dims: Vec<usize>,
    /// Optional `(n, nbar)` blocks per site; drawn at random when absent.
    pub partitions: Option<Vec<Vec<(usize, usize)>>>,
    pub pool: EigenvaluePool,
    /// Rotate every block and site by random unitaries.
    pub lifting: bool,
}

impl RandomParams {
    pub fn new(seed: u64, site_dims: Vec<usize>) -> Self {
        Self {
            seed,
            site_dims,
            partitions: None,
            pool: EigenvaluePool::Mixed,
            lifting: false,
        }
    }
}

/// Largest site dimension accepted by [`gen_random`].
pub const MAX_RANDOM_SITE_DIM: usize = 8;

const MIXED_MULTIPLES: [(i64, i64); 7] = [(-1, 1), (-1, 2), (0, 1), (1, 2), (1, 1), (3, 2), (2, 1)];

/// A seeded random periodic spec.
///
/// Partitions and eigenvalues come from one random stream and the lifting
/// unitaries from another, so the lifted and unlifted instances of a seed
/// share their spectra.
pub fn gen_random(params: &RandomParams) -> Result<InteractionSpec> {
    let p = params.site_dims.len();
    if p == 0 {
        return Err(Error::Params("at least one site dimension is required".into()));
    }
    if let Some(&d) = params
        .site_dims
        .iter()
        .find(|&&d| d == 0 || d > MAX_RANDOM_SITE_DIM)
    {
        return Err(Error::Params(format!(
            "site dimension {d} is outside 1..={MAX_RANDOM_SITE_DIM}"
        )));
    }
    if let EigenvaluePool::RationalLog { base, values } = &params.pool {
        if values.is_empty() {
            return Err(Error::Params("eigenvalue pool is empty".into()));
        }
        if *base <= BigRational::zero() || base.is_one() {
            return Err(Error::Params("log base must be positive and different from one".into()));
        }
    }
    let mut values_rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut unitary_rng = ChaCha8Rng::seed_from_u64(params.seed);
    unitary_rng.set_stream(1);

    let partitions: Vec<Vec<(usize, usize)>> = match &params.partitions {
        Some(parts) => {
            if parts.len() != p {
                return Err(Error::Params("one partition per site is required".into()));
            }
            for (j, (part, &d)) in parts.iter().zip(&params.site_dims).enumerate() {
                let total: usize = part.iter().map(|(n, nb)| n * nb).sum();
                if part.is_empty() || part.iter().any(|(n, nb)| *n == 0 || *nb == 0) || total != d {
                    return Err(Error::Params(format!(
                        "partition of site {j} is infeasible for dimension {d}"
                    )));
                }
            }
            parts.clone()
        }
        None => params
            .site_dims
            .iter()
            .map(|&d| random_partition(d, &mut values_rng))
            .collect(),
    };

    let mut draw = |size: usize| -> (Vec<f64>, Vec<BigRational>) {
        (0..size)
            .map(|_| match &params.pool {
                EigenvaluePool::Mixed => {
                    let (a, b) = MIXED_MULTIPLES[values_rng.random_range(0..MIXED_MULTIPLES.len())];
                    let base: f64 = if values_rng.random_bool(0.5) { 2.0 } else { 3.0 };
                    let r = BigRational::new(a.into(), b.into());
                    (a as f64 / b as f64 * base.ln(), r)
                }
                EigenvaluePool::RationalLog { base, values } => {
                    let r = values[values_rng.random_range(0..values.len())].clone();
                    (LogBase::Rational(base.clone()).value(&r), r)
                }
            })
            .unzip()
    };

    let mut h_values = Vec::with_capacity(p);
    for part in &partitions {
        let h: Vec<Vec<f64>> = part.iter().map(|(n, _)| draw(*n).0).collect();
        let h_hat: Vec<Vec<f64>> = part.iter().map(|(_, nb)| draw(*nb).0).collect();
        h_values.push((h, h_hat));
    }
    let mut bond_values = Vec::with_capacity(p);
    for j in 0..p {
        let next = &partitions[(j + 1) % p];
        let rows: Vec<Vec<(Vec<f64>, Vec<BigRational>)>> = partitions[j]
            .iter()
            .map(|(_, nb)| next.iter().map(|(n, _)| draw(nb * n)).collect())
            .collect();
        bond_values.push(rows);
    }

    let mut block = |values: &[f64]| -> CMat {
        let d = linalg::diag(values);
        if params.lifting {
            let u = random_unitary(values.len(), &mut unitary_rng);
            &u * d * u.adjoint()
        } else {
            d
        }
    };

    let mut sites = Vec::with_capacity(p);
    for (j, (part, (h, h_hat))) in partitions.iter().zip(&h_values).enumerate() {
        let labels = part
            .iter()
            .enumerate()
            .map(|(w, &(n, nbar))| LabelBlock {
                label: format!("w{w}"),
                n,
                nbar,
            })
            .collect();
        sites.push(SiteData {
            blocks: SiteBlocks {
                site: j as i64,
                dim: params.site_dims[j],
                labels,
            },
            h: h.iter().map(|v| block(v)).collect(),
            h_hat: h_hat.iter().map(|v| block(v)).collect(),
            embedding: None,
        });
    }
    let mut bonds = Vec::with_capacity(p);
    for rows in &bond_values {
        let blocks = rows
            .iter()
            .map(|row| row.iter().map(|(v, _)| block(v)).collect())
            .collect();
        let exact = matches!(params.pool, EigenvaluePool::RationalLog { .. }).then(|| {
            rows.iter()
                .map(|row| row.iter().map(|(_, r)| r.clone()).collect())
                .collect()
        });
        bonds.push(BondData { blocks, exact });
    }
    if params.lifting {
        for site in &mut sites {
            site.embedding = Some(random_unitary(site.dim(), &mut unitary_rng));
        }
    }
    let log_base = match &params.pool {
        EigenvaluePool::RationalLog { base, .. } => Some(LogBase::Rational(base.clone())),
        EigenvaluePool::Mixed => None,
    };
    Ok(InteractionSpec {
        chain: Chain::Periodic { period: p },
        sites,
        bonds,
        log_base,
        seed: Some(params.seed),
    })
}

fn random_partition(d: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut parts = Vec::new();
    let mut current = 1;
    for _ in 1..d {
        if rng.random_bool(0.5) {
            parts.push(current);
            current = 1;
        } else {
            current += 1;
        }
    }
    parts.push(current);
    parts
        .into_iter()
        .map(|s| {
            let divisors: Vec<usize> = (1..=s).filter(|q| s % q == 0).collect();
            let n = divisors[rng.random_range(0..divisors.len())];
            (n, s / n)
        })
        .collect()
}

/// Haar-distributed unitary from the QR decomposition of a complex
/// Gaussian matrix, with the phases of `R` moved into `Q`.
pub fn random_unitary(n: usize, rng: &mut impl Rng) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for z in q.column_mut(j).iter_mut() {
            *z *= phase;
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::validate_spec;
    use crate::Tolerances;

    #[test]
    fn generated_specs_validate() {
        let tol = Tolerances::default();
        assert!(validate_spec(&gen_ising(1.0, 2.0), &tol).is_empty());
        let r = |a: i64| BigRational::from_integer(a.into());
        assert!(validate_spec(&gen_ising_exact(&r(1), &r(2)), &tol).is_empty());
        let p = DMatrix::from_row_slice(2, 2, &[0.9, 0.1, 0.3, 0.7]);
        assert!(validate_spec(&gen_markov_lifting(&p).unwrap(), &tol).is_empty());
        let mut params = RandomParams::new(7, vec![2, 3, 4]);
        params.lifting = true;
        assert!(validate_spec(&gen_random(&params).unwrap(), &tol).is_empty());
    }

    #[test]
    fn lifting_rejects_bad_matrices() {
        let uniform = DMatrix::from_element(2, 2, 0.5);
        assert!(gen_markov_lifting(&uniform).is_err());
        let zero = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 0.5]);
        assert!(gen_markov_lifting(&zero).is_err());
        let off = DMatrix::from_row_slice(2, 2, &[0.6, 0.5, 0.5, 0.5]);
        assert!(gen_markov_lifting(&off).is_err());
    }

    #[test]
    fn infeasible_partition_is_rejected() {
        let mut params = RandomParams::new(1, vec![3]);
        params.partitions = Some(vec![vec![(2, 2)]]);
        assert!(gen_random(&params).is_err());
    }

    #[test]
    fn random_generation_is_deterministic() {
        let params = RandomParams::new(11, vec![3, 2]);
        assert_eq!(gen_random(&params).unwrap(), gen_random(&params).unwrap());
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(linalg::gram_deviation(&random_unitary(5, &mut rng)) < 1e-13);
    }
}
