use super::boundary::Boundaries;
use super::spec::{InteractionSpec, SiteData};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// The closed interval of sites `[k, l]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Segment {
    pub k: i64,
    pub l: i64,
}

impl Segment {
    pub fn new(k: i64, l: i64) -> Result<Self> {
        if k > l {
            return Err(Error::SegmentOutOfRange { k, l });
        }
        Ok(Self { k, l })
    }

    pub fn len(&self) -> usize {
        (self.l - self.k + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sites(&self) -> std::ops::RangeInclusive<i64> {
        self.k..=self.l
    }

    /// The segment grown by `by` sites on both sides.
    pub fn widened(&self, by: i64) -> Self {
        Self {
            k: self.k - by,
            l: self.l + by,
        }
    }

    pub fn contains(&self, other: &Segment) -> bool {
        self.k <= other.k && other.l <= self.l
    }
}

impl std::fmt::Display for Segment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}]", self.k, self.l)
    }
}

/// An operator acting on consecutive sites starting at `first_site`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalOperator {
    pub first_site: i64,
    pub dims: Vec<usize>,
    pub matrix: CMat,
}

impl LocalOperator {
    pub fn new(first_site: i64, dims: Vec<usize>, matrix: CMat) -> Result<Self> {
        let d = linalg::volume(&dims);
        if dims.is_empty() || matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::Shape(format!(
                "operator on sites of dimensions {dims:?} must be {d}x{d}"
            )));
        }
        Ok(Self {
            first_site,
            dims,
            matrix,
        })
    }

    pub fn last_site(&self) -> i64 {
        self.first_site + self.dims.len() as i64 - 1
    }

    pub fn support(&self) -> Segment {
        Segment {
            k: self.first_site,
            l: self.last_site(),
        }
    }

    /// The operator tensored with identities on the sites of `target`.
    pub fn embed_into(&self, target: Segment, dims: &[usize]) -> Result<CMat> {
        if !target.contains(&self.support()) || dims.len() != target.len() {
            return Err(Error::Shape(format!(
                "support {} is not inside {target}",
                self.support()
            )));
        }
        let offset = (self.first_site - target.k) as usize;
        if dims[offset..offset + self.dims.len()] != self.dims[..] {
            return Err(Error::Shape("site dimensions disagree".into()));
        }
        Ok(linalg::embed(&self.matrix, dims, offset))
    }

    pub fn extend_to(&self, target: Segment, dims: &[usize]) -> Result<Self> {
        Ok(Self {
            first_site: target.k,
            dims: dims.to_vec(),
            matrix: self.embed_into(target, dims)?,
        })
    }
}

/// The commuting local terms whose sum generates a segment density.
#[derive(Debug, Clone)]
pub struct SegmentHamiltonian {
    pub segment: Segment,
    pub dims: Vec<usize>,
    /// `H_k`, the left boundary term on the first site.
    pub left: LocalOperator,
    /// `H_{j,j+1}` for `j = k .. l-1`.
    pub bonds: Vec<LocalOperator>,
    /// `Ĥ_l`, the right boundary term on the last site, including the
    /// normalization shift.
    pub right: LocalOperator,
    /// `ln Z`, already added to `right`.
    pub normalization_shift: f64,
}

impl SegmentHamiltonian {
    /// Builds a Hamiltonian from explicit terms, without any structure check.
    pub fn from_terms(
        segment: Segment,
        dims: Vec<usize>,
        left: LocalOperator,
        bonds: Vec<LocalOperator>,
        right: LocalOperator,
    ) -> Self {
        Self {
            segment,
            dims,
            left,
            bonds,
            right,
            normalization_shift: 0.0,
        }
    }

    /// All terms: left boundary, bonds from left to right, right boundary.
    pub fn terms(&self) -> Vec<&LocalOperator> {
        std::iter::once(&self.left)
            .chain(self.bonds.iter())
            .chain(std::iter::once(&self.right))
            .collect()
    }

    pub fn dim(&self) -> usize {
        linalg::volume(&self.dims)
    }

    /// The full Hamiltonian as a dense matrix.
    pub fn dense(&self) -> Result<CMat> {
        let d = self.dim();
        let mut total = CMat::zeros(d, d);
        for t in self.terms() {
            total += t.embed_into(self.segment, &self.dims)?;
        }
        Ok(total)
    }
}

/// `Σ_ω V_ω (h_ω ⊗ I) V_ω*` on one site.
pub fn left_site_term(site: &SiteData, blocks: &[CMat]) -> CMat {
    site_term(site, |w| {
        let lb = site.label(w);
        linalg::kron(&blocks[w], &linalg::identity(lb.nbar))
    })
}

/// `Σ_ω V_ω (I ⊗ ĥ_ω) V_ω*` on one site.
pub fn right_site_term(site: &SiteData, blocks: &[CMat]) -> CMat {
    site_term(site, |w| {
        let lb = site.label(w);
        linalg::kron(&linalg::identity(lb.n), &blocks[w])
    })
}

fn site_term(site: &SiteData, block: impl Fn(usize) -> CMat) -> CMat {
    let d = site.dim();
    let mut out = CMat::zeros(d, d);
    for (w, off) in site.blocks.offsets().into_iter().enumerate() {
        let b = block(w);
        out.view_mut((off, off), (b.nrows(), b.ncols())).copy_from(&b);
    }
    match &site.embedding {
        Some(u) => u * out * u.adjoint(),
        None => out,
    }
}

/// `Σ_{ω,ω'} (V_ω ⊗ V_ω')(I ⊗ (h_{ωω'} + shift) ⊗ I)(V_ω ⊗ V_ω')*` on two sites.
pub fn bond_term(left: &SiteData, right: &SiteData, blocks: &[Vec<CMat>], shift: f64) -> CMat {
    let (dl, dr) = (left.dim(), right.dim());
    let mut out = CMat::zeros(dl * dr, dl * dr);
    let loffs = left.blocks.offsets();
    let roffs = right.blocks.offsets();
    for (w, lb) in left.blocks.labels.iter().enumerate() {
        for (wp, rb) in right.blocks.labels.iter().enumerate() {
            let h = &blocks[w][wp];
            for a in 0..lb.n {
                for bp in 0..rb.nbar {
                    for (r, c) in (0..lb.nbar * rb.n).flat_map(|r| (0..lb.nbar * rb.n).map(move |c| (r, c))) {
                        let mut v = h[(r, c)];
                        if r == c {
                            v += linalg::re(shift);
                        }
                        if v == linalg::re(0.0) {
                            continue;
                        }
                        let (b, ap) = (r / rb.n, r % rb.n);
                        let (bc, apc) = (c / rb.n, c % rb.n);
                        let row = (loffs[w] + a * lb.nbar + b) * dr + roffs[wp] + ap * rb.nbar + bp;
                        let col = (loffs[w] + a * lb.nbar + bc) * dr + roffs[wp] + apc * rb.nbar + bp;
                        out[(row, col)] = v;
                    }
                }
            }
        }
    }
    if left.embedding.is_some() || right.embedding.is_some() {
        let u = linalg::kron(&left.embedding_or_identity(), &right.embedding_or_identity());
        u.clone() * out * u.adjoint()
    } else {
        out
    }
}

/// Local terms of the segment with the stored boundary blocks.
pub fn assemble_operators(spec: &InteractionSpec, segment: Segment) -> Result<SegmentHamiltonian> {
    assemble_with_boundaries(spec, segment, &Boundaries::from_spec(spec))
}

/// Local terms of the segment with the given boundary blocks and bond shift.
pub fn assemble_with_boundaries(
    spec: &InteractionSpec,
    segment: Segment,
    boundaries: &Boundaries,
) -> Result<SegmentHamiltonian> {
    let dims = spec.segment_dims(segment.k, segment.l)?;
    let first = spec.site(segment.k)?;
    let last = spec.site(segment.l)?;
    let left = LocalOperator::new(
        segment.k,
        vec![first.dim()],
        left_site_term(first, boundaries.left_blocks(spec, segment.k)?),
    )?;
    let right = LocalOperator::new(
        segment.l,
        vec![last.dim()],
        right_site_term(last, boundaries.right_blocks(spec, segment.l)?),
    )?;
    let bonds = (segment.k..segment.l)
        .map(|j| {
            let a = spec.site(j)?;
            let b = spec.site(j + 1)?;
            let m = bond_term(a, b, &spec.bond(j)?.blocks, boundaries.bond_shift);
            LocalOperator::new(j, vec![a.dim(), b.dim()], m)
        })
        .collect::<Result<_>>()?;
    Ok(SegmentHamiltonian {
        segment,
        dims,
        left,
        bonds,
        right,
        normalization_shift: 0.0,
    })
}

/// Largest commutator among overlapping terms of a segment Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct CommutationReport {
    /// `‖[A, B]‖_F / (‖A‖_F ‖B‖_F)` on the joint support, maximized.
    pub max_relative: f64,
    /// `‖[A, B]‖_F` on the joint support, maximized.
    pub max_absolute: f64,
    /// Indices into [`SegmentHamiltonian::terms`] of the worst pair.
    pub worst_pair: Option<(usize, usize)>,
    pub pairs_checked: usize,
}

impl CommutationReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_relative <= tol
    }
}

/// Commutators of every pair of terms with overlapping supports, computed
/// on the smallest interval containing both.
pub fn verify_commutation(h: &SegmentHamiltonian) -> Result<CommutationReport> {
    let terms = h.terms();
    let mut report = CommutationReport {
        max_relative: 0.0,
        max_absolute: 0.0,
        worst_pair: None,
        pairs_checked: 0,
    };
    for a in 0..terms.len() {
        for b in a + 1..terms.len() {
            let (sa, sb) = (terms[a].support(), terms[b].support());
            if sa.l < sb.k || sb.l < sa.k {
                continue;
            }
            let union = Segment {
                k: sa.k.min(sb.k),
                l: sa.l.max(sb.l),
            };
            let offset = (union.k - h.segment.k) as usize;
            let dims = &h.dims[offset..offset + union.len()];
            let x = terms[a].embed_into(union, dims)?;
            let y = terms[b].embed_into(union, dims)?;
            let comm = (&x * &y - &y * &x).norm();
            let rel = linalg::relative_commutator(&x, &y);
            report.pairs_checked += 1;
            report.max_absolute = report.max_absolute.max(comm);
            if rel > report.max_relative || report.worst_pair.is_none() {
                report.max_relative = report.max_relative.max(rel);
                report.worst_pair = Some((a, b));
            }
        }
    }
    Ok(report)
}
