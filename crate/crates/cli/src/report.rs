//! Machine-readable run reports and the library calls that fill them.

use std::collections::BTreeMap;
use std::time::Instant;

use num_rational::BigRational;
use serde::Serialize;

use qmarkov::classify::{classify, ArithmeticMode, ClassifyOptions, FactorClassification, Verdict};
use qmarkov::diagonalize::{
    certify_atom_weights, commuting_square_check, diagonalize_segment, markov_property_check,
    potential_restriction_check, verify_diagonalization,
};
use qmarkov::linalg;
use qmarkov::markov::{
    assemble_with_boundaries, segment_density, validate_spec, verify_commutation, Boundaries,
    InteractionSpec, Segment, StateOptions,
};
use qmarkov::Tolerances;

use crate::document::format_rational;

#[derive(Debug, Default, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_digest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segment: Option<[i64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundaries: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationStage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub commutation: Option<CommutationStage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<StateStage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub projectivity: Option<ProjectivityStage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagonalization: Option<DiagonalizationStage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub markov_property: Option<MarkovStage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<ClassificationStage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<BTreeMap<String, f64>>,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        RunReport {
            tool: "qmarkov",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            ..Default::default()
        }
    }

    /// Whether every numerical check that ran stayed within tolerance.
    pub fn checks_passed(&self) -> bool {
        self.commutation.as_ref().is_none_or(|s| s.passed)
            && self.projectivity.as_ref().is_none_or(|s| s.passed)
            && self.diagonalization.as_ref().is_none_or(|s| s.passed)
            && self.markov_property.as_ref().is_none_or(|s| s.passed)
    }
}

#[derive(Debug, Serialize)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Serialize)]
pub struct ValidationStage {
    pub passed: bool,
    pub violations: Vec<Issue>,
}

#[derive(Debug, Serialize)]
pub struct CommutationStage {
    pub passed: bool,
    pub tolerance: f64,
    pub max_relative: f64,
    pub max_absolute: f64,
    pub pairs_checked: usize,
}

#[derive(Debug, Serialize)]
pub struct PathWeight {
    pub labels: Vec<String>,
    pub weight: f64,
}

#[derive(Debug, Serialize)]
pub struct StateStage {
    pub dim: usize,
    pub log_z: f64,
    pub paths: Vec<PathWeight>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density: Option<Vec<Vec<[f64; 2]>>>,
}

#[derive(Debug, Serialize)]
pub struct ProjectivityStage {
    pub passed: bool,
    pub tolerance: f64,
    /// Largest entry of the difference between the reduced density of the
    /// widened segment and the density of the segment.
    pub max_deviation: f64,
    pub widened: [i64; 2],
}

#[derive(Debug, Serialize)]
pub struct DiagonalizationStage {
    pub passed: bool,
    pub tolerance: f64,
    pub atoms: usize,
    /// Largest `|φ(χ) - μ(χ)|` over atoms `χ` of the segment.
    pub certification: f64,
    /// Reconstruction of the state from the widened segment's measure.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state_deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub projectivity_deviation: Option<f64>,
    pub potential_restriction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub commuting_square: Option<f64>,
    pub total_mass: f64,
    pub stochasticity: f64,
    pub first_label: Vec<f64>,
    /// Label transition matrices between consecutive sites, row-major.
    pub label_transitions: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Serialize)]
pub struct SiteMarkov {
    pub site: i64,
    pub max_residual: f64,
    pub events_checked: usize,
    pub exhaustive: bool,
}

#[derive(Debug, Serialize)]
pub struct MarkovStage {
    pub passed: bool,
    pub tolerance: f64,
    pub max_residual: f64,
    pub sites: Vec<SiteMarkov>,
}

#[derive(Debug, Serialize)]
pub struct WindowEntry {
    pub n: usize,
    pub segment: [i64; 2],
    pub distinct_eigenvalues: usize,
    pub generator: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator_exact: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct WitnessEntry {
    pub difference: f64,
    pub ratio: f64,
}

#[derive(Debug, Serialize)]
pub struct ClassificationStage {
    pub verdict: &'static str,
    pub summary: String,
    pub mode: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator_exact: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stabilized: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_best_alpha_exact: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multiplier: Option<f64>,
    pub fundamental_spectrum: Vec<f64>,
    pub differences: Vec<f64>,
    pub windows: Vec<WindowEntry>,
    pub max_denominator: u64,
    pub tolerance: f64,
    pub notes: Vec<String>,
}

/// Stopwatch that records stage durations only when asked to.
pub struct Timer {
    enabled: bool,
    entries: BTreeMap<String, f64>,
}

impl Timer {
    pub fn new(enabled: bool) -> Self {
        Timer {
            enabled,
            entries: BTreeMap::new(),
        }
    }

    pub fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        if self.enabled {
            self.entries
                .insert(name.to_string(), start.elapsed().as_secs_f64() * 1e3);
        }
        out
    }

    pub fn finish(self) -> Option<BTreeMap<String, f64>> {
        self.enabled.then_some(self.entries)
    }
}

fn span(s: Segment) -> [i64; 2] {
    [s.k, s.l]
}

/// Maps library field paths onto document field paths.
pub fn document_path(path: &str) -> String {
    let mut out = String::with_capacity(path.len());
    for part in path.split('.') {
        if !out.is_empty() {
            out.push('.');
        }
        let mapped = ["h_hat", "h"].iter().find_map(|name| {
            part.strip_prefix(name)
                .and_then(|rest| rest.strip_prefix('['))
                .and_then(|rest| rest.strip_suffix(']'))
                .map(|w| format!("blocks[{w}].{name}"))
        });
        match mapped {
            Some(m) => out.push_str(&m),
            None if part.starts_with("exact") => out.push_str(&part.replacen("exact", "exact_eigenvalues", 1)),
            None => out.push_str(part),
        }
    }
    out
}

pub fn validation_stage(spec: &InteractionSpec, tol: &Tolerances) -> ValidationStage {
    let violations: Vec<Issue> = validate_spec(spec, tol)
        .into_iter()
        .map(|v| Issue {
            path: document_path(&v.path),
            message: v.message,
        })
        .collect();
    ValidationStage {
        passed: violations.is_empty(),
        violations,
    }
}

pub fn commutation_stage(
    spec: &InteractionSpec,
    segment: Segment,
    boundaries: &Boundaries,
    tol: &Tolerances,
) -> qmarkov::Result<CommutationStage> {
    let h = assemble_with_boundaries(spec, segment, boundaries)?;
    let r = verify_commutation(&h)?;
    Ok(CommutationStage {
        passed: r.passes(tol.commutation),
        tolerance: tol.commutation,
        max_relative: r.max_relative,
        max_absolute: r.max_absolute,
        pairs_checked: r.pairs_checked,
    })
}

pub fn state_stage(
    spec: &InteractionSpec,
    segment: Segment,
    boundaries: &Boundaries,
    tol: &Tolerances,
    dense: bool,
    with_density: bool,
) -> qmarkov::Result<StateStage> {
    let options = StateOptions {
        dense,
        tolerances: tol.clone(),
    };
    let state = segment_density(spec, segment, boundaries, &options)?;
    let names: Vec<Vec<String>> = segment
        .sites()
        .map(|j| Ok(spec.site(j)?.blocks.labels.iter().map(|b| b.label.clone()).collect()))
        .collect::<qmarkov::Result<_>>()?;
    let paths = state
        .path_weights()
        .into_iter()
        .map(|(labels, weight)| PathWeight {
            labels: labels.iter().enumerate().map(|(i, &w)| names[i][w].clone()).collect(),
            weight,
        })
        .collect();
    let density = with_density.then(|| {
        state
            .density()
            .row_iter()
            .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
            .collect()
    });
    Ok(StateStage {
        dim: state.dim(),
        log_z: state.log_z,
        paths,
        density,
    })
}

fn fits(spec: &InteractionSpec, segment: Segment) -> bool {
    spec.check_segment(segment.k, segment.l).is_ok()
}

pub fn projectivity_stage(
    spec: &InteractionSpec,
    segment: Segment,
    boundaries: &Boundaries,
    tol: &Tolerances,
) -> qmarkov::Result<Option<ProjectivityStage>> {
    let widened = segment.widened(1);
    if !fits(spec, widened) {
        return Ok(None);
    }
    let options = StateOptions {
        dense: true,
        tolerances: tol.clone(),
    };
    let big = segment_density(spec, widened, boundaries, &options)?;
    let small = segment_density(spec, segment, boundaries, &options)?;
    let dev = linalg::max_abs(&(big.reduced_density(segment)? - small.density()));
    Ok(Some(ProjectivityStage {
        passed: dev <= tol.structural,
        tolerance: tol.structural,
        max_deviation: dev,
        widened: span(widened),
    }))
}

pub fn diagonalization_stages(
    spec: &InteractionSpec,
    segment: Segment,
    boundaries: &Boundaries,
    tol: &Tolerances,
    events: usize,
    seed: u64,
) -> qmarkov::Result<(DiagonalizationStage, MarkovStage)> {
    let options = StateOptions {
        dense: true,
        tolerances: tol.clone(),
    };
    let state = segment_density(spec, segment, boundaries, &options)?;
    let d = diagonalize_segment(spec, segment, boundaries, tol)?;
    let certification = certify_atom_weights(&state.density(), &d.expectation, &d.chain);
    let widened_ok = fits(spec, segment.widened(1));
    let report = widened_ok
        .then(|| verify_diagonalization(spec, segment, boundaries, tol))
        .transpose()?;
    let square = widened_ok
        .then(|| commuting_square_check(spec, segment, boundaries, tol))
        .transpose()?;
    let restriction = potential_restriction_check(spec, segment, boundaries, tol)?;
    let structural = [Some(certification), Some(restriction), square, report.as_ref().map(|r| r.projectivity_deviation)]
        .into_iter()
        .flatten()
        .all(|x| x <= tol.structural);
    let passed = structural && report.as_ref().is_none_or(|r| r.state_deviation <= tol.diagonalization);
    let diag = DiagonalizationStage {
        passed,
        tolerance: tol.diagonalization,
        atoms: d.expectation.atom_count(),
        certification,
        state_deviation: report.as_ref().map(|r| r.state_deviation),
        projectivity_deviation: report.as_ref().map(|r| r.projectivity_deviation),
        potential_restriction: restriction,
        commuting_square: square,
        total_mass: d.chain.total_mass(),
        stochasticity: d.chain.stochasticity_deviation(),
        first_label: d.chain.first_label.clone(),
        label_transitions: d
            .chain
            .label_transitions
            .iter()
            .map(|m| m.row_iter().map(|r| r.iter().copied().collect()).collect())
            .collect(),
    };
    let mut sites = Vec::new();
    for n in segment.k + 1..segment.l {
        let r = markov_property_check(&d.chain, n, events, seed)?;
        sites.push(SiteMarkov {
            site: n,
            max_residual: r.max_residual,
            events_checked: r.events_checked,
            exhaustive: r.exhaustive,
        });
    }
    let worst = sites.iter().map(|s| s.max_residual).fold(0.0, f64::max);
    let markov = MarkovStage {
        passed: worst <= tol.markov_property,
        tolerance: tol.markov_property,
        max_residual: worst,
        sites,
    };
    Ok((diag, markov))
}

fn exact_string(r: &Option<BigRational>) -> Option<String> {
    r.as_ref().map(format_rational)
}

fn summary(c: &FactorClassification) -> String {
    match &c.verdict {
        Verdict::Tracial => "tracial, outside the scope of the type III analysis".to_string(),
        Verdict::IIILambdaCandidate {
            generator,
            exact_generator,
            lambda,
            stabilized,
            windows,
        } => {
            let g = match exact_generator {
                Some(e) => match &c.fundamental.spectrum.unit {
                    u if *u == 1.0 => format_rational(e),
                    _ => format!("{} ln(base)", format_rational(e)),
                },
                None => format!("{generator}"),
            };
            let status = if *stabilized { "stabilized" } else { "not stabilized" };
            format!("III_λ candidate, λ = e^{{-{g}}} = {lambda} ({status} over {windows} windows)")
        }
        Verdict::IndeterminateIrrational { witness, .. } => {
            format!("indeterminate, irrational difference ratio {}", witness.ratio)
        }
    }
}

pub fn classification_stage(spec: &InteractionSpec, options: &ClassifyOptions) -> qmarkov::Result<ClassificationStage> {
    let c = classify(spec, options)?;
    let (verdict, lambda, generator, generator_exact, stabilized, witness) = match &c.verdict {
        Verdict::Tracial => ("tracial", None, None, None, None, None),
        Verdict::IIILambdaCandidate {
            generator,
            exact_generator,
            lambda,
            stabilized,
            ..
        } => (
            "iii_lambda_candidate",
            Some(*lambda),
            Some(*generator),
            exact_string(exact_generator),
            Some(*stabilized),
            None,
        ),
        Verdict::IndeterminateIrrational { witness, .. } => (
            "indeterminate_irrational",
            None,
            None,
            None,
            None,
            Some(WitnessEntry {
                difference: witness.difference,
                ratio: witness.ratio,
            }),
        ),
    };
    let windows = c
        .stabilization
        .as_ref()
        .map(|s| {
            s.windows
                .iter()
                .map(|w| WindowEntry {
                    n: w.n,
                    segment: span(w.segment),
                    distinct_eigenvalues: w.distinct_eigenvalues,
                    generator: w.generator,
                    generator_exact: exact_string(&w.exact),
                })
                .collect()
        })
        .unwrap_or_default();
    Ok(ClassificationStage {
        verdict,
        summary: summary(&c),
        mode: match c.mode {
            ArithmeticMode::Float => "float",
            ArithmeticMode::ExactRational => "exact_rational",
        },
        lambda,
        generator,
        generator_exact,
        stabilized,
        witness,
        reference: c.rationality.as_ref().map(|r| r.reference),
        alpha: c.alpha.as_ref().map(|a| a.alpha),
        best_alpha: c.alpha.as_ref().map(|a| a.best_alpha),
        log_best_alpha_exact: c.alpha.as_ref().and_then(|a| exact_string(&a.log_best_alpha_exact)),
        multiplier: c.multiplier,
        fundamental_spectrum: c.fundamental.spectrum.values.clone(),
        differences: c.fundamental.differences.clone(),
        windows,
        max_denominator: options.max_denominator,
        tolerance: options.tolerance,
        notes: c.notes.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::document_path;

    #[test]
    fn library_paths_map_to_document_paths() {
        assert_eq!(document_path("sites[0].h[1]"), "sites[0].blocks[1].h");
        assert_eq!(document_path("sites[2].h_hat[0]"), "sites[2].blocks[0].h_hat");
        assert_eq!(document_path("bonds[1].blocks[0][1]"), "bonds[1].blocks[0][1]");
        assert_eq!(document_path("sites[1].embedding"), "sites[1].embedding");
    }
}
