use nalgebra::DMatrix;
use qmarkov::linalg::{self, CMat, C64};
use qmarkov::markov::{
    assemble_operators, kms_residual, modular_stabilization, segment_density,
    stationary_boundaries, validate_spec, verify_commutation, Boundaries, EvalMode,
    LocalOperator, Segment, SegmentHamiltonian, StateOptions,
};
use qmarkov::models::{gen_ising, gen_markov_lifting, gen_random, RandomParams};
use qmarkov::Tolerances;

fn options() -> StateOptions {
    StateOptions::default()
}

#[test]
fn ising_density_matches_brute_force_weights() {
    let (j1, j2) = (0.7, -0.4);
    let spec = gen_ising(j1, j2);
    let seg = Segment::new(0, 3).unwrap();
    let state = segment_density(&spec, seg, &Boundaries::from_spec(&spec), &options()).unwrap();
    let rho = state.dense_density().unwrap();
    let spin = |bit: usize| if bit == 0 { 1.0 } else { -1.0 };
    let mut weights = Vec::new();
    for idx in 0..16usize {
        let s: Vec<f64> = (0..4).map(|i| spin((idx >> (3 - i)) & 1)).collect();
        let energy = j1 * s[0] * s[1] + j2 * s[1] * s[2] + j1 * s[2] * s[3];
        weights.push((-energy).exp());
    }
    let z: f64 = weights.iter().sum();
    for (idx, w) in weights.iter().enumerate() {
        assert!((rho[(idx, idx)].re - w / z).abs() < 1e-14);
    }
    assert!((state.log_z - z.ln()).abs() < 1e-13);
}

#[test]
fn dense_and_block_path_routes_agree_on_random_specs() {
    for seed in 0..6 {
        let mut params = RandomParams::new(seed, vec![2, 3, 4][..(seed as usize % 3 + 1)].to_vec());
        params.lifting = seed % 2 == 0;
        let spec = gen_random(&params).unwrap();
        assert!(validate_spec(&spec, &Tolerances::default()).is_empty());
        let seg = Segment::new(-1, 1).unwrap();
        let state = segment_density(&spec, seg, &Boundaries::from_spec(&spec), &options()).unwrap();
        let dense = state.dense_density().unwrap();
        let paths = state.block_path_density();
        let dev = linalg::max_abs(&(dense - &paths)) / linalg::max_abs(dense);
        assert!(dev < 1e-10, "seed {seed}: deviation {dev:e}");
        assert!((dense.trace().re - 1.0).abs() < 1e-12);
    }
}

#[test]
fn block_path_evaluation_matches_dense_evaluation() {
    let mut params = RandomParams::new(5, vec![3, 2]);
    params.lifting = true;
    let spec = gen_random(&params).unwrap();
    let seg = Segment::new(0, 2).unwrap();
    let state = segment_density(&spec, seg, &Boundaries::from_spec(&spec), &options()).unwrap();
    let d = state.dim();
    let a = CMat::from_fn(d, d, |r, c| C64::new((r * 7 + c) as f64 % 5.0, (r + 2 * c) as f64 % 3.0));
    let x = state.evaluate_matrix(&a, EvalMode::Dense).unwrap();
    let y = state.evaluate_matrix(&a, EvalMode::BlockPath).unwrap();
    assert!((x - y).norm() < 1e-10 * x.norm().max(1.0));
}

#[test]
fn assembled_terms_commute() {
    let mut params = RandomParams::new(9, vec![4, 3]);
    params.lifting = true;
    let spec = gen_random(&params).unwrap();
    let h = assemble_operators(&spec, Segment::new(0, 3).unwrap()).unwrap();
    let report = verify_commutation(&h).unwrap();
    assert!(report.passes(1e-12), "{report:?}");
    assert_eq!(report.pairs_checked, 4);
}

#[test]
fn overlapping_pauli_bonds_do_not_commute() {
    let mut sx = CMat::zeros(2, 2);
    sx[(0, 1)] = linalg::re(1.0);
    sx[(1, 0)] = linalg::re(1.0);
    let sz = linalg::diag(&[1.0, -1.0]);
    let zero = CMat::zeros(2, 2);
    let seg = Segment::new(0, 2).unwrap();
    let h = SegmentHamiltonian::from_terms(
        seg,
        vec![2, 2, 2],
        LocalOperator::new(0, vec![2], zero.clone()).unwrap(),
        vec![
            LocalOperator::new(0, vec![2, 2], linalg::kron(&sx, &sx)).unwrap(),
            LocalOperator::new(1, vec![2, 2], linalg::kron(&sz, &sz)).unwrap(),
        ],
        LocalOperator::new(2, vec![2], zero).unwrap(),
    );
    let report = verify_commutation(&h).unwrap();
    assert!(!report.passes(1e-12));
    assert!(report.max_absolute > 1.0);
}

#[test]
fn stationary_states_are_consistent_and_shift_invariant() {
    let mut params = RandomParams::new(21, vec![2, 3]);
    params.lifting = true;
    let spec = gen_random(&params).unwrap();
    let tol = Tolerances::default();
    let b = stationary_boundaries(&spec, &tol).unwrap();
    let big = segment_density(&spec, Segment::new(0, 3).unwrap(), &b, &options()).unwrap();
    assert!(big.log_z.abs() < 1e-12);
    let small = segment_density(&spec, Segment::new(1, 2).unwrap(), &b, &options()).unwrap();
    let reduced = big.reduced_density(Segment::new(1, 2).unwrap()).unwrap();
    let dev = linalg::max_abs(&(reduced - small.dense_density().unwrap()));
    assert!(dev < 1e-12, "consistency deviation {dev:e}");
    let shifted = segment_density(&spec, Segment::new(3, 4).unwrap(), &b, &options()).unwrap();
    let dev = linalg::max_abs(&(shifted.dense_density().unwrap() - small.dense_density().unwrap()));
    assert!(dev < 1e-12, "shift deviation {dev:e}");
}

#[test]
fn lifted_chain_has_classical_path_weights() {
    let p = DMatrix::from_row_slice(3, 3, &[0.5, 0.3, 0.2, 0.1, 0.6, 0.3, 0.25, 0.25, 0.5]);
    let spec = gen_markov_lifting(&p).unwrap();
    let b = stationary_boundaries(&spec, &Tolerances::default()).unwrap();
    let state = segment_density(&spec, Segment::new(0, 2).unwrap(), &b, &options()).unwrap();
    // Stationary law of p, computed by solving pi (P - I) = 0 with sum one.
    let mut a = (p.transpose() - DMatrix::identity(3, 3)).insert_row(3, 1.0);
    a.row_mut(3).fill(1.0);
    let rhs = nalgebra::DVector::from_vec(vec![0.0, 0.0, 0.0, 1.0]);
    let pi = a.clone().svd(true, true).solve(&rhs, 1e-14).unwrap();
    for (labels, w) in state.path_weights() {
        let expected = pi[labels[0]] * p[(labels[0], labels[1])] * p[(labels[1], labels[2])];
        assert!((w - expected).abs() < 1e-12);
    }
}

#[test]
fn kms_and_modular_checks_hold() {
    let spec = gen_ising(0.3, 0.8);
    let state = segment_density(&spec, Segment::new(0, 2).unwrap(), &Boundaries::from_spec(&spec), &options()).unwrap();
    let d = state.dim();
    let a = CMat::from_fn(d, d, |r, c| C64::new((r + c) as f64, (r * c) as f64 % 3.0));
    let b = CMat::from_fn(d, d, |r, c| C64::new((r * 3 + c) as f64 % 4.0, 0.5));
    assert!(kms_residual(&state, &a, &b, &Tolerances::default()).unwrap() < 1e-9);

    let mut sx = CMat::zeros(2, 2);
    sx[(0, 1)] = linalg::re(1.0);
    sx[(1, 0)] = linalg::re(1.0);
    let obs = LocalOperator::new(0, vec![2], sx).unwrap();
    assert!(modular_stabilization(&spec, &obs, 0.7, 1).unwrap() < 1e-10);
}

#[test]
fn invalid_specs_report_paths() {
    let mut spec = gen_ising(1.0, 1.0);
    spec.bonds[1].blocks[0][1] = CMat::zeros(2, 2);
    spec.sites[0].h[1][(0, 0)] = C64::new(0.0, 1.0);
    let violations = validate_spec(&spec, &Tolerances::default());
    let paths: Vec<&str> = violations.iter().map(|v| v.path.as_str()).collect();
    assert!(paths.contains(&"bonds[1].blocks[0][1]"));
    assert!(paths.contains(&"sites[0].h[1]"));
}

#[test]
fn finite_chains_reject_segments_outside() {
    let mut spec = gen_ising(1.0, 1.0);
    spec.chain = qmarkov::markov::Chain::Finite { first_site: 0 };
    spec.bonds.truncate(1);
    assert!(validate_spec(&spec, &Tolerances::default()).is_empty());
    let b = Boundaries::from_spec(&spec);
    assert!(segment_density(&spec, Segment::new(0, 2).unwrap(), &b, &options()).is_err());
    assert!(segment_density(&spec, Segment::new(0, 1).unwrap(), &b, &options()).is_ok());
}
