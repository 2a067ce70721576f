use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::data::{BoundaryTerms, DiagonalAlgebraData};
use super::expectation::{Atom, DiagonalExpectation};
use crate::error::{Error, Result};
use crate::markov::Segment;

/// A state of the refined chain: the bond from label `from` to label `to`
/// together with the eigenvector index chosen on that bond.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RefinedState {
    pub from: usize,
    pub to: usize,
    pub index: usize,
}

/// The classical Markov measure carried by the diagonal subalgebra of a
/// segment.
#[derive(Debug, Clone)]
pub struct ClassicalMarkovChain {
    pub segment: Segment,
    pub labels: Vec<Vec<String>>,
    /// Law of the label at the first site.
    pub first_label: Vec<f64>,
    /// Refined states of every bond, in lexicographic order.
    pub states: Vec<Vec<RefinedState>>,
    /// Law of the refined state on the first bond.
    pub initial: Vec<f64>,
    /// `transitions[t]` maps refined states of bond `t` to those of bond `t + 1`.
    pub transitions: Vec<DMatrix<f64>>,
    /// Marginal transition matrices between consecutive labels.
    pub label_transitions: Vec<DMatrix<f64>>,
    /// Every atom of the diagonal subalgebra with its probability.
    pub measure: Vec<(Atom, f64)>,
}

impl ClassicalMarkovChain {
    pub fn total_mass(&self) -> f64 {
        self.measure.iter().map(|(_, p)| p).sum()
    }

    /// Transition matrix between the labels at sites `k + step` and
    /// `k + step + 1`.
    pub fn label_transition(&self, step: usize) -> Option<&DMatrix<f64>> {
        self.label_transitions.get(step)
    }

    /// Largest deviation of a row sum from one over all transition matrices.
    pub fn stochasticity_deviation(&self) -> f64 {
        self.transitions
            .iter()
            .chain(&self.label_transitions)
            .flat_map(|m| m.row_iter().map(|r| (r.sum() - 1.0).abs()).collect::<Vec<_>>())
            .fold(0.0, f64::max)
    }
}

/// Reads the Markov measure off the diagonal data.
///
/// The probability of an atom is `exp(-K_k - Σ λ - K̂_l - ln Z)`: the left
/// potential of its first label, the bond eigenvalues along it, and the
/// normalized right potential of its last label. The refined transition
/// probabilities follow by conditioning on the mass of the future.
pub fn extract_markov_measure(
    data: &DiagonalAlgebraData,
    terms: &BoundaryTerms,
    expectation: &DiagonalExpectation,
) -> Result<ClassicalMarkovChain> {
    let segment = data.segment;
    if terms.segment != segment || expectation.segment() != segment {
        return Err(Error::Shape("inputs belong to different segments".into()));
    }
    let len = segment.len();
    let start: Vec<f64> = terms.first().iter().map(|k| (-k).exp()).collect();
    let end: Vec<f64> = terms.last_normalized().iter().map(|k| (-k).exp()).collect();
    let weight = |t: usize, s: &RefinedState| (-data.bonds[t][s.from][s.to].eigenvalues[s.index]).exp();

    let states: Vec<Vec<RefinedState>> = data
        .bonds
        .iter()
        .map(|bond| {
            let mut out = Vec::new();
            for (from, row) in bond.iter().enumerate() {
                for (to, eig) in row.iter().enumerate() {
                    for index in 0..eig.eigenvalues.len() {
                        out.push(RefinedState { from, to, index });
                    }
                }
            }
            out
        })
        .collect();

    // beta[t][ω]: mass of all continuations from label ω at site k + t.
    let mut beta = vec![Vec::new(); len];
    beta[len - 1] = end.clone();
    for t in (0..len - 1).rev() {
        let mut b = vec![0.0; data.labels[t].len()];
        for s in &states[t] {
            b[s.from] += weight(t, s) * beta[t + 1][s.to];
        }
        beta[t] = b;
    }
    let total: f64 = start.iter().zip(&beta[0]).map(|(a, b)| a * b).sum();
    if !(total.is_finite() && (total - 1.0).abs() < 1e-8) {
        return Err(Error::NotNormalized(total));
    }
    let first_label: Vec<f64> = start.iter().zip(&beta[0]).map(|(a, b)| a * b).collect();

    let initial: Vec<f64> = match states.first() {
        Some(first) => first
            .iter()
            .map(|s| start[s.from] * weight(0, s) * beta[1][s.to])
            .collect(),
        None => Vec::new(),
    };

    let mut transitions = Vec::new();
    for t in 0..states.len().saturating_sub(1) {
        let (cur, next) = (&states[t], &states[t + 1]);
        let m = DMatrix::from_fn(cur.len(), next.len(), |x, y| {
            let (a, b) = (&cur[x], &next[y]);
            if a.to != b.from {
                0.0
            } else {
                weight(t + 1, b) * beta[t + 2][b.to] / beta[t + 1][a.to]
            }
        });
        transitions.push(m);
    }

    let label_transitions = (0..len - 1)
        .map(|t| {
            let mut m = DMatrix::zeros(data.labels[t].len(), data.labels[t + 1].len());
            for s in &states[t] {
                m[(s.from, s.to)] += weight(t, s) * beta[t + 1][s.to] / beta[t][s.from];
            }
            m
        })
        .collect();

    let measure = expectation
        .iter_atoms()
        .map(|(_, _, atom)| {
            let mut log = -terms.first()[atom.labels[0]] - terms.last_normalized()[atom.labels[len - 1]];
            for (t, &i) in atom.indices.iter().enumerate() {
                log -= data.bonds[t][atom.labels[t]][atom.labels[t + 1]].eigenvalues[i];
            }
            (atom.clone(), log.exp())
        })
        .collect();

    Ok(ClassicalMarkovChain {
        segment,
        labels: data.labels.clone(),
        first_label,
        states,
        initial,
        transitions,
        label_transitions,
        measure,
    })
}

/// Largest `|μ(χ) - φ(χ)|` over all atoms, with `φ` given by a dense density
/// of the segment.
pub fn certify_atom_weights(
    rho: &crate::linalg::CMat,
    expectation: &DiagonalExpectation,
    chain: &ClassicalMarkovChain,
) -> f64 {
    expectation
        .iter_atoms()
        .zip(&chain.measure)
        .map(|((block, col, _), (_, mu))| (expectation.atom_weight(rho, block, col) - mu).abs())
        .fold(0.0, f64::max)
}

/// Outcome of [`markov_property_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovPropertyReport {
    pub site: i64,
    /// Largest `|P(A ∩ B | ω) - P(A | ω) P(B | ω)|`.
    pub max_residual: f64,
    pub events_checked: usize,
    /// Whether every pair of single points was tested.
    pub exhaustive: bool,
}

/// Spectra up to this size are checked on every pair of points.
pub const EXHAUSTIVE_LIMIT: usize = 1 << 12;

/// Conditional independence of the past `[k, n]` and the future `[n, l]`
/// given the label at site `n`.
///
/// Small spectra are tested on every pair of single points, which is
/// equivalent to the full statement; `random_events` further pairs of
/// random subsets drawn from `seed` are always added.
pub fn markov_property_check(
    chain: &ClassicalMarkovChain,
    n: i64,
    random_events: usize,
    seed: u64,
) -> Result<MarkovPropertyReport> {
    let seg = chain.segment;
    if n < seg.k || n > seg.l {
        return Err(Error::SegmentOutOfRange { k: n, l: n });
    }
    let cut = (n - seg.k) as usize;
    type Key = (Vec<usize>, Vec<usize>);
    let mut past_index: HashMap<Key, usize> = HashMap::new();
    let mut future_index: HashMap<Key, usize> = HashMap::new();
    let mut past_label = Vec::new();
    let mut future_label = Vec::new();
    let mut entries = Vec::with_capacity(chain.measure.len());
    for (atom, mu) in &chain.measure {
        let past: Key = (atom.labels[..=cut].to_vec(), atom.indices[..cut].to_vec());
        let future: Key = (atom.labels[cut..].to_vec(), atom.indices[cut..].to_vec());
        let label = atom.labels[cut];
        let next = past_index.len();
        let a = *past_index.entry(past).or_insert_with(|| {
            past_label.push(label);
            next
        });
        let next = future_index.len();
        let b = *future_index.entry(future).or_insert_with(|| {
            future_label.push(label);
            next
        });
        entries.push((a, b, *mu));
    }
    let labels = chain.labels[cut].len();
    let mut mass = vec![0.0; labels];
    for &(a, _, mu) in &entries {
        mass[past_label[a]] += mu;
    }
    for (w, m) in mass.iter().enumerate() {
        if *m <= 0.0 {
            return Err(Error::ZeroProbability {
                site: n,
                label: chain.labels[cut][w].clone(),
            });
        }
    }
    let (np, nf) = (past_index.len(), future_index.len());
    let residual = |in_a: &dyn Fn(usize) -> bool, in_b: &dyn Fn(usize) -> bool| -> f64 {
        let mut joint = vec![0.0; labels];
        let mut pa = vec![0.0; labels];
        let mut pb = vec![0.0; labels];
        for &(a, b, mu) in &entries {
            let w = past_label[a];
            let (ia, ib) = (in_a(a), in_b(b));
            if ia {
                pa[w] += mu;
            }
            if ib {
                pb[w] += mu;
            }
            if ia && ib {
                joint[w] += mu;
            }
        }
        (0..labels)
            .map(|w| (joint[w] / mass[w] - pa[w] / mass[w] * pb[w] / mass[w]).abs())
            .fold(0.0, f64::max)
    };

    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let exhaustive = chain.measure.len() <= EXHAUSTIVE_LIMIT;
    if exhaustive {
        // Singletons: the joint law given ω must factor entry by entry.
        let mut joint: HashMap<(usize, usize), f64> = HashMap::new();
        for &(a, b, mu) in &entries {
            *joint.entry((a, b)).or_default() += mu;
        }
        let mut pa = vec![0.0; np];
        let mut pb = vec![0.0; nf];
        for &(a, b, mu) in &entries {
            pa[a] += mu;
            pb[b] += mu;
        }
        for a in 0..np {
            for b in 0..nf {
                let w = past_label[a];
                if future_label[b] != w {
                    continue;
                }
                let j = joint.get(&(a, b)).copied().unwrap_or(0.0);
                let r = (j / mass[w] - pa[a] / mass[w] * pb[b] / mass[w]).abs();
                worst = worst.max(r);
                checked += 1;
            }
        }
    }
    let extra = if exhaustive { random_events } else { random_events.max(100) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..extra {
        let sa: Vec<bool> = (0..np).map(|_| rng.random_bool(0.5)).collect();
        let sb: Vec<bool> = (0..nf).map(|_| rng.random_bool(0.5)).collect();
        worst = worst.max(residual(&|a| sa[a], &|b| sb[b]));
        checked += 1;
    }
    Ok(MarkovPropertyReport {
        site: n,
        max_residual: worst,
        events_checked: checked,
        exhaustive,
    })
}
