use super::data::{boundary_terms, build_diagonal_algebra, BoundaryTerms, DiagonalAlgebraData};
use super::expectation::{diagonal_umegaki_expectation, DiagonalExpectation};
use super::measure::{extract_markov_measure, ClassicalMarkovChain};
use crate::algebra::{trace_preserving_expectation, AlgebraElement};
use crate::error::Result;
use crate::linalg::{self, CMat, C64};
use crate::markov::{segment_density, Boundaries, InteractionSpec, Segment, StateOptions};
use crate::tolerance::Tolerances;

/// Everything the diagonalization of one segment produces.
#[derive(Debug, Clone)]
pub struct Diagonalization {
    pub data: DiagonalAlgebraData,
    pub terms: BoundaryTerms,
    pub expectation: DiagonalExpectation,
    pub chain: ClassicalMarkovChain,
}

/// Bond eigen-data, boundary potentials, atom bases and the Markov measure
/// of a segment.
pub fn diagonalize_segment(
    spec: &InteractionSpec,
    segment: Segment,
    boundaries: &Boundaries,
    tol: &Tolerances,
) -> Result<Diagonalization> {
    let data = build_diagonal_algebra(spec, segment, boundaries, tol)?;
    let terms = boundary_terms(spec, segment, boundaries, &data)?;
    let expectation = diagonal_umegaki_expectation(spec, &data)?;
    let chain = extract_markov_measure(&data, &terms, &expectation)?;
    Ok(Diagonalization {
        data,
        terms,
        expectation,
        chain,
    })
}

/// `Σ P A P` over the projections onto label paths of a segment.
pub fn label_path_pinching(spec: &InteractionSpec, segment: Segment, m: &CMat) -> Result<CMat> {
    let dims = spec.segment_dims(segment.k, segment.l)?;
    let mut out = m.clone();
    let sites: Vec<_> = segment.sites().map(|j| spec.site(j)).collect::<Result<_>>()?;
    for (i, site) in sites.iter().enumerate() {
        if let Some(u) = &site.embedding {
            linalg::conjugate_local(&u.adjoint(), &dims, i, &mut out);
        }
    }
    let label_of: Vec<Vec<usize>> = sites
        .iter()
        .map(|s| {
            s.blocks
                .labels
                .iter()
                .enumerate()
                .flat_map(|(w, lb)| std::iter::repeat_n(w, lb.dim()))
                .collect()
        })
        .collect();
    let path = |mut idx: usize| -> Vec<usize> {
        let mut p = vec![0; dims.len()];
        for i in (0..dims.len()).rev() {
            p[i] = label_of[i][idx % dims[i]];
            idx /= dims[i];
        }
        p
    };
    let paths: Vec<Vec<usize>> = (0..out.nrows()).map(path).collect();
    for r in 0..out.nrows() {
        for c in 0..out.ncols() {
            if paths[r] != paths[c] {
                out[(r, c)] = C64::new(0.0, 0.0);
            }
        }
    }
    for (i, site) in sites.iter().enumerate() {
        if let Some(u) = &site.embedding {
            linalg::conjugate_local(u, &dims, i, &mut out);
        }
    }
    Ok(out)
}

/// Outcome of [`verify_diagonalization`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalizationReport {
    pub segment: Segment,
    /// The segment whose diagonal algebra is used, one site wider each side.
    pub extended: Segment,
    /// Largest entry of `ρ - F_μ`, relative to the largest entry of `ρ`,
    /// where `ρ` is the reduced density and `F_μ` its diagonal reconstruction.
    pub state_deviation: f64,
    /// Largest entry of `F_μ` removed by the label-path pinching.
    pub projectivity_deviation: f64,
    /// `|Σ μ - 1|`.
    pub mass_deviation: f64,
    pub atoms: usize,
}

impl DiagonalizationReport {
    pub fn passes(&self, tol: &Tolerances) -> bool {
        self.state_deviation <= tol.diagonalization
            && self.projectivity_deviation <= tol.structural
            && self.mass_deviation <= tol.structural
    }
}

/// Reconstructs the state on `segment` from the Markov measure of the
/// diagonal algebra of the segment widened by one site on each side.
///
/// Every atom of the wider segment restricts to a positive functional on
/// the segment; weighting them by the measure and pinching to label paths
/// must return the reduced density of the state.
pub fn verify_diagonalization(
    spec: &InteractionSpec,
    segment: Segment,
    boundaries: &Boundaries,
    tol: &Tolerances,
) -> Result<DiagonalizationReport> {
    let extended = segment.widened(1);
    let options = StateOptions {
        dense: true,
        tolerances: tol.clone(),
    };
    let state = segment_density(spec, extended, boundaries, &options)?;
    let reduced = state.reduced_density(segment)?;
    let diag = diagonalize_segment(spec, extended, boundaries, tol)?;
    let d = reduced.nrows();
    let mut f = CMat::zeros(d, d);
    for ((block, col, _), (_, mu)) in diag.expectation.iter_atoms().zip(&diag.chain.measure) {
        f += diag.expectation.reduced_atom(block, col) * linalg::re(*mu);
    }
    let pinched = label_path_pinching(spec, segment, &f)?;
    let scale = linalg::max_abs(&reduced).max(f64::MIN_POSITIVE);
    Ok(DiagonalizationReport {
        segment,
        extended,
        state_deviation: linalg::max_abs(&(&reduced - &pinched)) / scale,
        projectivity_deviation: linalg::max_abs(&(&pinched - &f)),
        mass_deviation: (diag.chain.total_mass() - 1.0).abs(),
        atoms: diag.expectation.atom_count(),
    })
}

/// Largest entry of `E(ρ) - Q diag(μ) Q*` over the blocks of `N`, where `E`
/// is the trace-preserving expectation onto `N` and `Q` the atom bases.
pub fn potential_restriction_check(
    spec: &InteractionSpec,
    segment: Segment,
    boundaries: &Boundaries,
    tol: &Tolerances,
) -> Result<f64> {
    let options = StateOptions {
        dense: true,
        tolerances: tol.clone(),
    };
    let state = segment_density(spec, segment, boundaries, &options)?;
    let diag = diagonalize_segment(spec, segment, boundaries, tol)?;
    let inclusion = diag.expectation.filtration.inclusion()?;
    let rho = AlgebraElement::from_matrix(state.density())?;
    let restricted = trace_preserving_expectation(&inclusion).apply(&rho)?;
    let mut measure = diag.chain.measure.iter().map(|(_, mu)| *mu);
    let mut worst: f64 = 0.0;
    for (j, q) in diag.expectation.bases.iter().enumerate() {
        let mus: Vec<f64> = measure.by_ref().take(q.ncols()).collect();
        let expected = q * linalg::diag(&mus) * q.adjoint();
        worst = worst.max(linalg::max_abs(&(restricted.block(j) - expected)));
    }
    Ok(worst)
}

/// Deviation from the commuting-square relation between the diagonal
/// expectations of `segment` and of the segment widened by one site.
///
/// For every atom `α` of the wider segment, the functional it induces on
/// `N` of `segment` must be the sum of the atom functionals of `segment`
/// it refines, each with weight zero or one, and each `α` must refine
/// exactly one atom. This is the statement that the wider expectation,
/// restricted to `N`, equals the narrower one, checked on all matrix units.
pub fn commuting_square_check(
    spec: &InteractionSpec,
    segment: Segment,
    boundaries: &Boundaries,
    tol: &Tolerances,
) -> Result<f64> {
    let small = diagonalize_segment(spec, segment, boundaries, tol)?;
    let large = diagonalize_segment(spec, segment.widened(1), boundaries, tol)?;
    let filtration = &small.expectation.filtration;
    // Atom vectors of the small segment, lifted into each copy, as rows.
    let lifted: Vec<Vec<CMat>> = small
        .expectation
        .bases
        .iter()
        .enumerate()
        .map(|(j, q)| {
            (0..filtration.blocks[j].copies)
                .map(|c| (filtration.copy_isometry(j, c) * q).adjoint())
                .collect()
        })
        .collect();
    let mid = filtration.dim();
    let mut worst: f64 = 0.0;
    for (block, col, _) in large.expectation.iter_atoms() {
        let (nb, n) = large.expectation.end_dims(block);
        let psi = large.expectation.bases[block].column(col);
        // Column (a, b) holds the interior slice of ψ for end indices a, b.
        let slices = CMat::from_fn(mid, nb * n, |m, e| psi[((e / n) * mid + m) * n + e % n]);
        let mut total = 0.0;
        for copies in &lifted {
            let mut g = CMat::zeros(copies[0].nrows(), copies[0].nrows());
            for l in copies {
                let x = l * &slices;
                g += &x * x.adjoint();
            }
            for r in 0..g.nrows() {
                for c in 0..g.ncols() {
                    let v = g[(r, c)];
                    let dev = if r == c {
                        total += v.re;
                        v.im.abs().max(v.re.abs().min((v.re - 1.0).abs()))
                    } else {
                        v.norm()
                    };
                    worst = worst.max(dev);
                }
            }
        }
        worst = worst.max((total - 1.0).abs());
    }
    Ok(worst)
}
