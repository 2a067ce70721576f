use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::tolerance::Tolerances;

/// Base of the logarithm in which exact bond eigenvalues are expressed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LogBase {
    /// Eigenvalues are rational numbers themselves.
    Natural,
    /// Eigenvalues are rational multiples of `ln(base)`.
    Rational(BigRational),
}

impl LogBase {
    /// The real factor multiplying the stored rationals.
    pub fn unit(&self) -> f64 {
        match self {
            LogBase::Natural => 1.0,
            LogBase::Rational(b) => b.to_f64().unwrap_or(f64::NAN).ln(),
        }
    }

    pub fn value(&self, r: &BigRational) -> f64 {
        r.to_f64().unwrap_or(f64::NAN) * self.unit()
    }
}

/// One label `ω` of a site: the block `M_n ⊗ M_nbar` it carries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelBlock {
    pub label: String,
    pub n: usize,
    pub nbar: usize,
}

impl LabelBlock {
    pub fn dim(&self) -> usize {
        self.n * self.nbar
    }
}

/// Block decomposition `ℂ^d = ⊕_ω ℂ^n ⊗ ℂ^nbar` of one site.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteBlocks {
    /// Site index; for periodic chains the position inside the period.
    pub site: i64,
    pub dim: usize,
    pub labels: Vec<LabelBlock>,
}

impl SiteBlocks {
    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|b| b.label == label)
    }

    /// Offset of each label block in the standard coordinates of the site.
    pub fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.labels
            .iter()
            .map(|b| {
                let o = acc;
                acc += b.dim();
                o
            })
            .collect()
    }
}

/// Everything attached to one site.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteData {
    pub blocks: SiteBlocks,
    /// Left boundary block `h_ω` acting on `ℂ^n`, one per label.
    pub h: Vec<CMat>,
    /// Right boundary block `ĥ_ω` acting on `ℂ^nbar`, one per label.
    pub h_hat: Vec<CMat>,
    /// Unitary carrying the standard block coordinates to the site basis.
    pub embedding: Option<CMat>,
}

impl SiteData {
    pub fn dim(&self) -> usize {
        self.blocks.dim
    }

    pub fn label(&self, w: usize) -> &LabelBlock {
        &self.blocks.labels[w]
    }

    /// Isometry `ℂ^n ⊗ ℂ^nbar → ℂ^d` onto the block of label `w`.
    pub fn isometry(&self, w: usize) -> CMat {
        let off = self.blocks.offsets()[w];
        let len = self.blocks.labels[w].dim();
        match &self.embedding {
            Some(u) => u.columns(off, len).into_owned(),
            None => CMat::from_fn(self.dim(), len, |r, c| {
                linalg::re(if r == off + c { 1.0 } else { 0.0 })
            }),
        }
    }

    pub fn embedding_or_identity(&self) -> CMat {
        self.embedding
            .clone()
            .unwrap_or_else(|| linalg::identity(self.dim()))
    }
}

/// Interaction blocks of the bond between site `j` and `j + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BondData {
    /// `blocks[ω][ω']` acts on `ℂ^{nbar_ω} ⊗ ℂ^{n_ω'}`.
    pub blocks: Vec<Vec<CMat>>,
    /// Exact eigenvalues of every block, in units of the log base.
    pub exact: Option<Vec<Vec<Vec<BigRational>>>>,
}

/// Shape of the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chain {
    /// Sites `first_site .. first_site + sites.len()`.
    Finite { first_site: i64 },
    /// Site `j` carries the data of site `j mod period`.
    Periodic { period: usize },
}

/// A block-structured nearest-neighbour interaction.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionSpec {
    pub chain: Chain,
    pub sites: Vec<SiteData>,
    /// `bonds[i]` couples stored site `i` to the next one.
    pub bonds: Vec<BondData>,
    /// Present when bonds carry exact eigenvalues.
    pub log_base: Option<LogBase>,
    pub seed: Option<u64>,
}

impl InteractionSpec {
    pub fn is_periodic(&self) -> bool {
        matches!(self.chain, Chain::Periodic { .. })
    }

    pub fn period(&self) -> Option<usize> {
        match self.chain {
            Chain::Periodic { period } => Some(period),
            Chain::Finite { .. } => None,
        }
    }

    /// Storage index of site `j`.
    pub fn site_index(&self, j: i64) -> Result<usize> {
        match self.chain {
            Chain::Periodic { period } => Ok(j.rem_euclid(period as i64) as usize),
            Chain::Finite { first_site } => {
                let i = j - first_site;
                if i < 0 || i as usize >= self.sites.len() {
                    Err(Error::SegmentOutOfRange { k: j, l: j })
                } else {
                    Ok(i as usize)
                }
            }
        }
    }

    /// Storage index of the bond between `j` and `j + 1`.
    pub fn bond_index(&self, j: i64) -> Result<usize> {
        let i = self.site_index(j)?;
        if i >= self.bonds.len() {
            return Err(Error::SegmentOutOfRange { k: j, l: j + 1 });
        }
        Ok(i)
    }

    pub fn site(&self, j: i64) -> Result<&SiteData> {
        Ok(&self.sites[self.site_index(j)?])
    }

    pub fn bond(&self, j: i64) -> Result<&BondData> {
        Ok(&self.bonds[self.bond_index(j)?])
    }

    /// Fails unless `k <= l` and every site of `[k, l]` exists.
    pub fn check_segment(&self, k: i64, l: i64) -> Result<()> {
        if k > l {
            return Err(Error::SegmentOutOfRange { k, l });
        }
        if let Chain::Finite { first_site } = self.chain {
            let last = first_site + self.sites.len() as i64 - 1;
            if k < first_site || l > last {
                return Err(Error::SegmentOutOfRange { k, l });
            }
        }
        Ok(())
    }

    pub fn segment_dims(&self, k: i64, l: i64) -> Result<Vec<usize>> {
        self.check_segment(k, l)?;
        (k..=l).map(|j| Ok(self.site(j)?.dim())).collect()
    }

    /// Exact eigenvalues of bond block `(w, w')`, when available.
    pub fn exact_eigenvalues(&self, j: i64, w: usize, wp: usize) -> Result<Option<&[BigRational]>> {
        let bond = self.bond(j)?;
        Ok(bond.exact.as_ref().map(|e| e[w][wp].as_slice()))
    }
}

/// One structural problem found by [`validate_spec`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Location of the offending field, e.g. `sites[1].h[0]`.
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Checks dimensions, hermiticity, label consistency, periodicity,
/// embedding unitarity and exact data. An empty result means the input is
/// usable by every other operation.
pub fn validate_spec(spec: &InteractionSpec, tol: &Tolerances) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |path: String, message: String| out.push(Violation { path, message });

    match spec.chain {
        Chain::Periodic { period } => {
            if period == 0 {
                push("chain.period".into(), "period must be at least 1".into());
            }
            if spec.sites.len() != period {
                push(
                    "sites".into(),
                    format!("periodic chain of period {period} needs {period} sites, found {}", spec.sites.len()),
                );
            }
            if spec.bonds.len() != period {
                push(
                    "bonds".into(),
                    format!("periodic chain of period {period} needs {period} bonds, found {}", spec.bonds.len()),
                );
            }
        }
        Chain::Finite { .. } => {
            if spec.sites.is_empty() {
                push("sites".into(), "a chain needs at least one site".into());
            }
            if spec.bonds.len() + 1 != spec.sites.len() {
                push(
                    "bonds".into(),
                    format!("{} sites need {} bonds, found {}", spec.sites.len(), spec.sites.len().saturating_sub(1), spec.bonds.len()),
                );
            }
        }
    }

    for (i, site) in spec.sites.iter().enumerate() {
        let p = format!("sites[{i}]");
        let expected_index = match spec.chain {
            Chain::Finite { first_site } => first_site + i as i64,
            Chain::Periodic { .. } => i as i64,
        };
        if site.blocks.site != expected_index {
            push(format!("{p}.site"), format!("expected site index {expected_index}, found {}", site.blocks.site));
        }
        if site.blocks.labels.is_empty() {
            push(format!("{p}.blocks"), "a site needs at least one label".into());
        }
        let total: usize = site.blocks.labels.iter().map(LabelBlock::dim).sum();
        if total != site.blocks.dim {
            push(format!("{p}.dim"), format!("label blocks fill dimension {total}, site dimension is {}", site.blocks.dim));
        }
        for (w, lb) in site.blocks.labels.iter().enumerate() {
            if lb.n == 0 || lb.nbar == 0 {
                push(format!("{p}.blocks[{w}]"), "block factors must be positive".into());
            }
            if site.blocks.labels[..w].iter().any(|o| o.label == lb.label) {
                push(format!("{p}.blocks[{w}].label"), format!("duplicate label {}", lb.label));
            }
        }
        check_family(&mut push, &format!("{p}.h"), &site.h, site.blocks.labels.iter().map(|b| b.n), tol);
        check_family(&mut push, &format!("{p}.h_hat"), &site.h_hat, site.blocks.labels.iter().map(|b| b.nbar), tol);
        if let Some(u) = &site.embedding {
            if u.nrows() != site.dim() || u.ncols() != site.dim() {
                push(format!("{p}.embedding"), format!("embedding must be {0}x{0}", site.dim()));
            } else {
                let dev = linalg::gram_deviation(u);
                if dev > tol.unitary {
                    push(format!("{p}.embedding"), format!("not unitary, Gram deviation {dev:e}"));
                }
            }
        }
    }

    for (i, bond) in spec.bonds.iter().enumerate() {
        let p = format!("bonds[{i}]");
        let Some(left) = spec.sites.get(i) else { continue };
        let right_index = if spec.is_periodic() { (i + 1) % spec.sites.len().max(1) } else { i + 1 };
        let Some(right) = spec.sites.get(right_index) else { continue };
        if bond.blocks.len() != left.blocks.num_labels() {
            push(format!("{p}.blocks"), format!("expected {} rows of blocks, found {}", left.blocks.num_labels(), bond.blocks.len()));
            continue;
        }
        for (w, row) in bond.blocks.iter().enumerate() {
            if row.len() != right.blocks.num_labels() {
                push(format!("{p}.blocks[{w}]"), format!("expected {} blocks, found {}", right.blocks.num_labels(), row.len()));
                continue;
            }
            for (wp, m) in row.iter().enumerate() {
                let d = left.label(w).nbar * right.label(wp).n;
                check_block(&mut push, &format!("{p}.blocks[{w}][{wp}]"), m, d, tol);
            }
        }
        if let Some(exact) = &bond.exact {
            let Some(base) = &spec.log_base else {
                push(format!("{p}.exact"), "exact eigenvalues require a log base".into());
                continue;
            };
            if let LogBase::Rational(b) = base {
                if !b.is_positive() || *b == BigRational::from_integer(1.into()) {
                    push("log_base".into(), "base must be positive and different from one".into());
                }
            }
            if exact.len() != bond.blocks.len() {
                push(format!("{p}.exact"), "exact data does not match the block layout".into());
                continue;
            }
            for (w, row) in exact.iter().enumerate() {
                if row.len() != bond.blocks[w].len() {
                    push(format!("{p}.exact[{w}]"), "exact data does not match the block layout".into());
                    continue;
                }
                for (wp, values) in row.iter().enumerate() {
                    let m = &bond.blocks[w][wp];
                    let path = format!("{p}.exact[{w}][{wp}]");
                    if values.len() != m.nrows() {
                        push(path, format!("expected {} eigenvalues, found {}", m.nrows(), values.len()));
                        continue;
                    }
                    if !m.is_square() {
                        continue;
                    }
                    let mut expected: Vec<f64> = values.iter().map(|r| base.value(r)).collect();
                    expected.sort_by(f64::total_cmp);
                    let actual = linalg::eigenvalues(m);
                    let worst = expected
                        .iter()
                        .zip(&actual)
                        .map(|(a, b)| (a - b).abs() / a.abs().max(1.0))
                        .fold(0.0, f64::max);
                    if worst > tol.agreement {
                        push(path, format!("exact eigenvalues disagree with the block by {worst:e}"));
                    }
                }
            }
        }
    }
    out
}

fn check_family(
    push: &mut impl FnMut(String, String),
    path: &str,
    family: &[CMat],
    dims: impl ExactSizeIterator<Item = usize>,
    tol: &Tolerances,
) {
    if family.len() != dims.len() {
        push(path.into(), format!("expected {} blocks, found {}", dims.len(), family.len()));
        return;
    }
    for (w, (m, d)) in family.iter().zip(dims).enumerate() {
        check_block(push, &format!("{path}[{w}]"), m, d, tol);
    }
}

fn check_block(push: &mut impl FnMut(String, String), path: &str, m: &CMat, d: usize, tol: &Tolerances) {
    if m.nrows() != d || m.ncols() != d {
        push(path.into(), format!("expected {d}x{d}, found {}x{}", m.nrows(), m.ncols()));
        return;
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        push(path.into(), "entries must be finite".into());
        return;
    }
    let dev = linalg::hermitian_deviation(m);
    if dev > tol.hermitian {
        push(path.into(), format!("not hermitian, relative deviation {dev:e}"));
    }
}

/// Fails with a summary of all violations when the input is not clean.
pub fn ensure_valid(spec: &InteractionSpec, tol: &Tolerances) -> Result<()> {
    let violations = validate_spec(spec, tol);
    if violations.is_empty() {
        Ok(())
    } else {
        let summary: Vec<String> = violations.iter().map(ToString::to_string).collect();
        Err(Error::InvalidSpec(summary.join("; ")))
    }
}
