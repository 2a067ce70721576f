//! Factor-type classification from the spectrum of the leading term:
//! difference sets, rationality of their ratios, `α` and the stabilized
//! generator `g` of the difference lattice with `λ = e^{-g}`.

mod rational;
mod spectrum;

pub use rational::{
    alpha_from_rationals, best_rational, rational_gcd, rational_ratio, rationality_check,
    AlphaReport, ArithmeticMode, RationalityReport, Reference, Witness,
};
pub use spectrum::{
    dense_leading_spectrum, difference_set, leading_spectrum, SpectralDifferenceSet, Spectrum,
};

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::markov::{InteractionSpec, Segment};
use crate::tolerance::Tolerances;

/// Attached to every non-tracial verdict.
pub const CONVERSE_CAVEAT: &str = "Finite windows only approximate the modular spectrum from inside. \
A stable generator makes λ a candidate, not a certified invariant, and irrational ratios are \
necessary for type III_1 but are not known to be sufficient.";

/// Attached to tracial verdicts.
pub const TRACIAL_NOTE: &str = "The leading term of the fundamental block is a multiple of the \
identity, so the state is tracial and the type III analysis does not apply.";

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyOptions {
    /// Largest window `n`; window `n` covers the sites `-pn..=pn`.
    pub n_max: usize,
    pub max_denominator: u64,
    pub tolerance: f64,
    pub dedup: f64,
    pub tracial: f64,
    /// Use exact eigenvalues when the input carries them.
    pub prefer_exact: bool,
}

impl ClassifyOptions {
    pub fn from_tolerances(tol: &Tolerances) -> Self {
        ClassifyOptions {
            n_max: 3,
            max_denominator: tol.max_denominator,
            tolerance: tol.rational,
            dedup: tol.dedup,
            tracial: tol.tracial,
            prefer_exact: true,
        }
    }
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self::from_tolerances(&Tolerances::default())
    }
}

/// The generator of the difference lattice of one window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowGenerator {
    pub n: usize,
    pub segment: Segment,
    pub distinct_eigenvalues: usize,
    /// `None` when some difference is not a rational multiple of the rest.
    pub generator: Option<f64>,
    pub exact: Option<BigRational>,
    /// The first rejected ratio against the smallest difference.
    pub witness: Option<Witness>,
}

/// Outcome of [`generator_stabilization`].
#[derive(Debug, Clone, PartialEq)]
pub struct Stabilization {
    pub windows: Vec<WindowGenerator>,
    /// Generator of the last window.
    pub generator: Option<f64>,
    pub exact: Option<BigRational>,
    /// Whether the last two windows agree.
    pub stabilized: bool,
}

impl Stabilization {
    pub fn lambda(&self) -> Option<f64> {
        self.generator.map(|g| (-g).exp())
    }
}

/// The window `-pn..=pn` of a periodic spec with period `p`.
pub fn window(spec: &InteractionSpec, n: usize) -> Result<Segment> {
    let p = spec.period().ok_or(Error::NotPeriodic)? as i64;
    if n == 0 {
        return Err(Error::Window("window index must be at least 1".into()));
    }
    Segment::new(-p * n as i64, p * n as i64)
}

/// The fundamental block `0..=p`, one period of bonds.
pub fn fundamental_segment(spec: &InteractionSpec) -> Result<Segment> {
    let p = spec.period().ok_or(Error::NotPeriodic)? as i64;
    Segment::new(0, p)
}

type WindowLattice = (Option<f64>, Option<BigRational>, Option<Witness>);

fn window_generator(spectrum: &Spectrum, options: &ClassifyOptions) -> WindowLattice {
    // Differences to the lowest eigenvalue span the same lattice as all
    // pairwise differences.
    if let Some(exact) = &spectrum.exact {
        let anchored: Vec<BigRational> = exact.iter().skip(1).map(|v| v - &exact[0]).collect();
        if anchored.is_empty() {
            return (None, None, None);
        }
        let g = rational_gcd(&anchored);
        return (Some(g.to_f64().unwrap_or(f64::NAN) * spectrum.unit), Some(g), None);
    }
    let v = &spectrum.values;
    let anchored: Vec<f64> = v.iter().skip(1).map(|x| x - v[0]).collect();
    let Some(&d_min) = anchored.first() else {
        return (None, None, None);
    };
    let mut ratios = Vec::with_capacity(anchored.len());
    for d in &anchored {
        match rational_ratio(d / d_min, options.max_denominator, options.tolerance) {
            Some(r) => ratios.push(r),
            None => {
                let witness = Witness {
                    difference: *d,
                    ratio: d / d_min,
                };
                return (None, None, Some(witness));
            }
        }
    }
    let g = rational_gcd(&ratios);
    (Some(d_min * g.to_f64().unwrap_or(f64::NAN)), None, None)
}

/// Generators `g_n` of the difference lattices of the windows
/// `n = 1..=n_max`.
pub fn generator_stabilization(spec: &InteractionSpec, options: &ClassifyOptions) -> Result<Stabilization> {
    if options.n_max == 0 {
        return Err(Error::Window("window index must be at least 1".into()));
    }
    let mut windows = Vec::with_capacity(options.n_max);
    for n in 1..=options.n_max {
        let segment = window(spec, n)?;
        let spectrum = leading_spectrum(spec, segment, options.dedup, options.prefer_exact)?;
        let (generator, exact, witness) = window_generator(&spectrum, options);
        windows.push(WindowGenerator {
            n,
            segment,
            distinct_eigenvalues: spectrum.values.len(),
            generator,
            exact,
            witness,
        });
    }
    let last = windows.last().cloned().ok_or_else(|| Error::Window("no windows".into()))?;
    let stabilized = windows.len() >= 2 && {
        let prev = &windows[windows.len() - 2];
        match (&prev.exact, &last.exact, prev.generator, last.generator) {
            (Some(a), Some(b), _, _) => a == b,
            (_, _, Some(a), Some(b)) => (a - b).abs() <= 1e-10 * a.abs().max(1.0),
            _ => false,
        }
    };
    Ok(Stabilization {
        generator: last.generator,
        exact: last.exact,
        windows,
        stabilized,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// The fundamental leading term is scalar.
    Tracial,
    /// All difference ratios are rational; `λ = e^{-g}`.
    IIILambdaCandidate {
        generator: f64,
        exact_generator: Option<BigRational>,
        lambda: f64,
        windows: usize,
        stabilized: bool,
    },
    /// Some ratio `x_i / x_1` has no small-denominator fraction.
    IndeterminateIrrational { witness: Witness, reference: f64 },
}

/// Everything [`classify`] computed on the way to its verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorClassification {
    pub verdict: Verdict,
    pub mode: ArithmeticMode,
    pub fundamental: SpectralDifferenceSet,
    pub rationality: Option<RationalityReport>,
    pub alpha: Option<AlphaReport>,
    pub stabilization: Option<Stabilization>,
    /// `g / |ln α|` for the best `α`, when both exist.
    pub multiplier: Option<f64>,
    pub notes: Vec<String>,
}

/// Classifies a periodic spec from the spectrum of its fundamental block
/// and the windows around it.
pub fn classify(spec: &InteractionSpec, options: &ClassifyOptions) -> Result<FactorClassification> {
    let fundamental = fundamental_segment(spec)?;
    let spectrum = leading_spectrum(spec, fundamental, options.dedup, options.prefer_exact)?;
    let mode = if spectrum.exact.is_some() {
        ArithmeticMode::ExactRational
    } else {
        ArithmeticMode::Float
    };
    let set = difference_set(&spectrum, options.dedup);
    let tracial = match &spectrum.exact {
        Some(e) => e.iter().all(|v| *v == e[0]),
        None => {
            let scale = spectrum.values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
            spectrum.spread() <= options.tracial * scale
        }
    };
    if tracial {
        return Ok(FactorClassification {
            verdict: Verdict::Tracial,
            mode,
            fundamental: set,
            rationality: None,
            alpha: None,
            stabilization: None,
            multiplier: None,
            notes: vec![TRACIAL_NOTE.to_string()],
        });
    }

    let report = rationality_check(&set, options.max_denominator, options.tolerance)?;
    if let Some(witness) = report.witness.clone() {
        return Ok(FactorClassification {
            verdict: Verdict::IndeterminateIrrational {
                witness,
                reference: report.reference,
            },
            mode,
            fundamental: set,
            rationality: Some(report),
            alpha: None,
            stabilization: None,
            multiplier: None,
            notes: vec![CONVERSE_CAVEAT.to_string()],
        });
    }

    let reference = match &report.reference_exact {
        Some(value) => Reference::Exact {
            value: value.clone(),
            unit: spectrum.unit,
        },
        None => Reference::Float(report.reference),
    };
    let alpha = alpha_from_rationals(&reference, &report.ratios)?;
    let stab = generator_stabilization(spec, options)?;
    let mut notes = vec![CONVERSE_CAVEAT.to_string()];
    let verdict = match stab.generator {
        Some(g) if g > 0.0 => {
            if !stab.stabilized {
                notes.push(format!(
                    "The window generators did not settle within n = {}.",
                    options.n_max
                ));
            }
            Verdict::IIILambdaCandidate {
                generator: g,
                exact_generator: stab.exact.clone(),
                lambda: (-g).exp(),
                windows: stab.windows.len(),
                stabilized: stab.stabilized,
            }
        }
        _ => {
            let (segment, witness) = stab
                .windows
                .iter()
                .find_map(|w| w.witness.clone().map(|x| (w.segment, x)))
                .ok_or_else(|| Error::Window("no window has a nonzero difference".into()))?;
            notes.push(format!("The fundamental block is rational but window {segment} is not."));
            Verdict::IndeterminateIrrational {
                witness,
                reference: report.reference,
            }
        }
    };
    let multiplier = stab
        .generator
        .filter(|g| *g > 0.0 && !alpha.log_best_alpha.is_zero())
        .map(|g| g / alpha.log_best_alpha.abs());
    Ok(FactorClassification {
        verdict,
        mode,
        fundamental: set,
        rationality: Some(report),
        alpha: Some(alpha),
        stabilization: Some(stab),
        multiplier,
        notes,
    })
}
