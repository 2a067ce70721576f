//! End-to-end acceptance run. Prints one line per criterion and exits with
//! a failure status if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use qmarkov::classify::{
    alpha_from_rationals, classify, leading_spectrum, ArithmeticMode, ClassifyOptions, Reference,
    Verdict, CONVERSE_CAVEAT,
};
use qmarkov::diagonalize::{
    certify_atom_weights, commuting_square_check, diagonalize_segment, markov_property_check,
    verify_diagonalization,
};
use qmarkov::linalg::{self, CMat, C64};
use qmarkov::markov::{
    assemble_operators, kms_residual, modular_stabilization, segment_density,
    stationary_boundaries, verify_commutation, InteractionSpec, LocalOperator, Segment,
    SegmentHamiltonian, StateOptions,
};
use qmarkov::models::{gen_ising, gen_ising_exact, gen_markov_lifting, gen_random, RandomParams};
use qmarkov::Tolerances;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SPEC_COUNT: usize = 50;
const COMMUTATION_TOL: f64 = 1e-12;
const EVALUATION_TOL: f64 = 1e-10;
const DIAGONALIZATION_TOL: f64 = 1e-10;
const COMMUTING_SQUARE_TOL: f64 = 1e-10;
const MARKOV_TOL: f64 = 1e-10;
const ROUND_TRIP_TOL: f64 = 1e-12;
const KMS_TOL: f64 = 1e-9;
const MODULAR_TOL: f64 = 1e-10;
const PROJECTIVITY_TOL: f64 = 1e-10;
const DENSE_LIMIT: usize = 4096;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// A seeded random periodic spec with site dimensions at most 4 and a
/// segment of two to five sites.
fn random_case(i: usize, lifting: bool) -> (InteractionSpec, Segment) {
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + i as u64);
    let period = rng.random_range(1..=3);
    let dims: Vec<usize> = (0..period).map(|_| rng.random_range(1..=4)).collect();
    let len = rng.random_range(2..=5i64);
    let mut params = RandomParams::new(i as u64, dims);
    params.lifting = lifting;
    let spec = gen_random(&params).expect("random spec");
    (spec, Segment::new(0, len - 1).unwrap())
}

fn dense_fits(spec: &InteractionSpec, seg: Segment) -> bool {
    linalg::volume(&spec.segment_dims(seg.k, seg.l).unwrap()) <= DENSE_LIMIT
}

fn structure_suite() -> Outcome {
    let mut worst_comm: f64 = 0.0;
    let mut worst_eval: f64 = 0.0;
    for i in 0..SPEC_COUNT {
        let (spec, seg) = random_case(i, i % 2 == 1);
        let report = verify_commutation(&assemble_operators(&spec, seg).unwrap()).unwrap();
        worst_comm = worst_comm.max(report.max_relative);
        let b = stationary_boundaries(&spec, &Tolerances::default()).unwrap();
        let state = segment_density(&spec, seg, &b, &StateOptions::default()).unwrap();
        let dense = state.dense_density().unwrap();
        // φ(e_rc) = ρ_cr, so comparing densities covers every matrix unit.
        let dev = linalg::max_abs(&(dense - state.block_path_density())) / linalg::max_abs(dense);
        worst_eval = worst_eval.max(dev);
    }
    outcome(
        worst_comm <= COMMUTATION_TOL && worst_eval <= EVALUATION_TOL,
        format!("commutation {worst_comm:.2e} <= {COMMUTATION_TOL:e}, evaluation {worst_eval:.2e} <= {EVALUATION_TOL:e}"),
    )
}

fn diagonalization_suite() -> Outcome {
    let tol = Tolerances::default();
    let mut worst_state: f64 = 0.0;
    let mut worst_square: f64 = 0.0;
    let mut squares = 0;
    for i in 0..SPEC_COUNT {
        let (spec, mut seg) = random_case(i, true);
        while seg.len() > 1 && !dense_fits(&spec, seg.widened(1)) {
            seg = Segment::new(seg.k, seg.l - 1).unwrap();
        }
        let b = stationary_boundaries(&spec, &tol).unwrap();
        let report = verify_diagonalization(&spec, seg, &b, &tol).unwrap();
        worst_state = worst_state
            .max(report.state_deviation)
            .max(report.projectivity_deviation)
            .max(report.mass_deviation);
        let state = segment_density(&spec, seg, &b, &StateOptions::default()).unwrap();
        let d = diagonalize_segment(&spec, seg, &b, &tol).unwrap();
        worst_state = worst_state.max(certify_atom_weights(state.dense_density().unwrap(), &d.expectation, &d.chain));
        for k in seg.k..=seg.l {
            for l in k..=seg.l {
                worst_square = worst_square.max(commuting_square_check(&spec, Segment::new(k, l).unwrap(), &b, &tol).unwrap());
                squares += 1;
            }
        }
    }
    outcome(
        worst_state <= DIAGONALIZATION_TOL && worst_square <= COMMUTING_SQUARE_TOL,
        format!(
            "state {worst_state:.2e} <= {DIAGONALIZATION_TOL:e}, commuting square {worst_square:.2e} <= {COMMUTING_SQUARE_TOL:e} over {squares} pairs"
        ),
    )
}

fn markov_property_suite() -> Outcome {
    let tol = Tolerances::default();
    let mut worst: f64 = 0.0;
    let mut sites = 0;
    let mut all_exhaustive = true;
    for i in 0..SPEC_COUNT {
        let (spec, seg) = random_case(i, true);
        let seg = Segment::new(seg.k, seg.l.max(seg.k + 2)).unwrap();
        let b = stationary_boundaries(&spec, &tol).unwrap();
        let d = diagonalize_segment(&spec, seg, &b, &tol).unwrap();
        for n in seg.k + 1..seg.l {
            let r = markov_property_check(&d.chain, n, 50, i as u64).unwrap();
            worst = worst.max(r.max_residual);
            all_exhaustive &= r.exhaustive || d.chain.measure.len() > qmarkov::diagonalize::EXHAUSTIVE_LIMIT;
            sites += 1;
        }
    }
    outcome(
        worst <= MARKOV_TOL && all_exhaustive,
        format!("conditional independence {worst:.2e} <= {MARKOV_TOL:e} at {sites} interior sites"),
    )
}

fn round_trip() -> Outcome {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let d = rng.random_range(2..=4);
        let mut p = DMatrix::from_fn(d, d, |_, _| rng.random_range(0.05..1.0));
        for mut row in p.row_iter_mut() {
            let s = row.sum();
            row /= s;
        }
        let spec = gen_markov_lifting(&p).unwrap();
        let b = stationary_boundaries(&spec, &tol).unwrap();
        let chain = diagonalize_segment(&spec, Segment::new(0, 3).unwrap(), &b, &tol).unwrap().chain;
        for q in &chain.label_transitions {
            worst = worst.max((q - &p).amax());
        }
    }
    outcome(worst <= ROUND_TRIP_TOL, format!("max |Q - P| {worst:.2e} <= {ROUND_TRIP_TOL:e}"))
}

fn ising_check() -> Outcome {
    let one = BigRational::from_integer(1.into());
    let two = BigRational::from_integer(2.into());
    let c = classify(&gen_ising_exact(&one, &two), &ClassifyOptions::default()).unwrap();
    let candidate = match &c.verdict {
        Verdict::IIILambdaCandidate { exact_generator, lambda, stabilized, windows, .. } => {
            exact_generator.as_ref() == Some(&two)
                && *lambda == (-2.0f64).exp()
                && *stabilized
                && *windows == 3
                && c.mode == ArithmeticMode::ExactRational
        }
        _ => false,
    };
    let j = 1.25;
    let s = leading_spectrum(&gen_ising(j, j), Segment::new(0, 1).unwrap(), 1e-11, true).unwrap();
    let spectrum = s.values == vec![-j, j];
    outcome(
        candidate && spectrum,
        format!("Ising(1,2) exact generator 2, lambda e^-2, stabilized at n = 3: {candidate}; one-bond spectrum {{-J, J}}: {spectrum}"),
    )
}

fn alpha_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut ok = 0;
    for _ in 0..100 {
        let len = rng.random_range(1..=6);
        let xs: Vec<BigRational> = (0..len)
            .map(|_| loop {
                let r = BigRational::new(rng.random_range(-60i64..=60).into(), rng.random_range(1i64..=12).into());
                if !r.is_zero() {
                    break r;
                }
            })
            .collect();
        let ratios: Vec<BigRational> = xs.iter().map(|x| x / &xs[0]).collect();
        let a = alpha_from_rationals(&Reference::Exact { value: xs[0].clone(), unit: 1.0 }, &ratios).unwrap();
        // ln α = -|x_1| / Π p_i with p_i the reduced denominators of x_i / x_1.
        let prod: BigInt = ratios.iter().map(|r| r.denom().clone()).product();
        let literal = -xs[0].abs() / BigRational::from_integer(prod);
        let best = a.log_best_alpha_exact.clone().unwrap();
        let members = xs.iter().all(|x| (x / &best).is_integer());
        if a.log_alpha_exact.as_ref() == Some(&literal) && members {
            ok += 1;
        }
    }
    outcome(ok == 100, format!("{ok}/100 tuples exact in Z ln(best alpha) with literal alpha"))
}

fn kms_modular_suite() -> Outcome {
    let tol = Tolerances::default();
    let mut specs = vec![gen_ising(0.4, -0.9)];
    for seed in [11u64, 12] {
        let mut params = RandomParams::new(seed, vec![2, 3]);
        params.lifting = true;
        specs.push(gen_random(&params).unwrap());
    }
    let mut worst_kms: f64 = 0.0;
    let mut worst_mod: f64 = 0.0;
    for spec in &specs {
        let b = stationary_boundaries(spec, &tol).unwrap();
        let state = segment_density(spec, Segment::new(0, 2).unwrap(), &b, &StateOptions::default()).unwrap();
        let d = state.dim();
        let a = CMat::from_fn(d, d, |r, c| C64::new(((r * 5 + c * 3) % 7) as f64 - 3.0, ((r + c) % 3) as f64));
        let bm = CMat::from_fn(d, d, |r, c| C64::new(((r * 2 + c) % 5) as f64, -(((r * c) % 4) as f64)));
        worst_kms = worst_kms.max(kms_residual(&state, &a, &bm, &tol).unwrap());
        let d0 = spec.site(0).unwrap().dim();
        let obs = CMat::from_fn(d0, d0, |r, c| C64::new((r + 2 * c) as f64, r as f64 - c as f64));
        let obs = LocalOperator::new(0, vec![d0], linalg::hermitian_part(&obs)).unwrap();
        worst_mod = worst_mod.max(modular_stabilization(spec, &obs, 0.6, 1).unwrap());
    }
    outcome(
        worst_kms <= KMS_TOL && worst_mod <= MODULAR_TOL,
        format!("KMS {worst_kms:.2e} <= {KMS_TOL:e}, modular window {worst_mod:.2e} <= {MODULAR_TOL:e}"),
    )
}

fn projectivity() -> Outcome {
    let tol = Tolerances::default();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for i in 0..SPEC_COUNT {
        let (spec, _) = random_case(i, i % 2 == 0);
        let b = stationary_boundaries(&spec, &tol).unwrap();
        let seg = |k, l| Segment::new(k, l).unwrap();
        if !dense_fits(&spec, seg(0, 4)) {
            continue;
        }
        let density = |s: Segment| segment_density(&spec, s, &b, &StateOptions::default()).unwrap();
        let five = density(seg(0, 4));
        for small in [seg(0, 3), seg(1, 4)] {
            let dev = linalg::max_abs(&(five.reduced_density(small).unwrap() - density(small).density()));
            worst = worst.max(dev);
        }
        let four = density(seg(0, 3));
        for small in [seg(0, 2), seg(1, 3)] {
            let dev = linalg::max_abs(&(four.reduced_density(small).unwrap() - density(small).density()));
            worst = worst.max(dev);
        }
        checked += 1;
    }
    outcome(
        worst <= PROJECTIVITY_TOL && checked > 0,
        format!("3 -> 4 -> 5 partial traces {worst:.2e} <= {PROJECTIVITY_TOL:e} on {checked} specs"),
    )
}

fn negative_controls() -> Outcome {
    let mut sx = CMat::zeros(2, 2);
    sx[(0, 1)] = linalg::re(1.0);
    sx[(1, 0)] = linalg::re(1.0);
    let sz = linalg::diag(&[1.0, -1.0]);
    let zero = CMat::zeros(2, 2);
    let h = SegmentHamiltonian::from_terms(
        Segment::new(0, 2).unwrap(),
        vec![2, 2, 2],
        LocalOperator::new(0, vec![2], zero.clone()).unwrap(),
        vec![
            LocalOperator::new(0, vec![2, 2], linalg::kron(&sx, &sx)).unwrap(),
            LocalOperator::new(1, vec![2, 2], linalg::kron(&sz, &sz)).unwrap(),
        ],
        LocalOperator::new(2, vec![2], zero).unwrap(),
    );
    let rejected = !verify_commutation(&h).unwrap().passes(COMMUTATION_TOL);
    let c = classify(&gen_ising(1.0, 2f64.sqrt()), &ClassifyOptions::default()).unwrap();
    let irrational = matches!(c.verdict, Verdict::IndeterminateIrrational { .. })
        && c.notes.iter().any(|n| n == CONVERSE_CAVEAT);
    let uniform = gen_markov_lifting(&DMatrix::from_element(3, 3, 1.0 / 3.0)).is_err();
    outcome(
        rejected && irrational && uniform,
        format!("non-commuting rejected: {rejected}; Ising(1, sqrt 2) indeterminate with caveat: {irrational}; uniform P rejected: {uniform}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("structure", structure_suite),
        ("diagonalization", diagonalization_suite),
        ("conditional independence", markov_property_suite),
        ("lifting round trip", round_trip),
        ("Ising classification", ising_check),
        ("alpha lattice", alpha_check),
        ("KMS and modular flow", kms_modular_suite),
        ("projectivity", projectivity),
        ("negative controls", negative_controls),
    ];
    let start = Instant::now();
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failures += 1;
        }
        println!("criterion {}: {} [{}] {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, name, o.detail);
    }
    println!("acceptance: {}/9 passed in {:.1}s", 9 - failures, start.elapsed().as_secs_f64());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
