use nalgebra::DMatrix;
use qmarkov::diagonalize::{
    boundary_terms, build_diagonal_algebra, certify_atom_weights, commuting_square_check,
    diagonalize_segment, markov_property_check, potential_restriction_check,
    verify_diagonalization,
};
use qmarkov::markov::{segment_density, stationary_boundaries, Boundaries, Segment, StateOptions};
use qmarkov::models::{gen_ising, gen_markov_lifting, gen_random, RandomParams};
use qmarkov::Tolerances;

fn seg(k: i64, l: i64) -> Segment {
    Segment::new(k, l).unwrap()
}

#[test]
fn ising_atoms_carry_boltzmann_weights() {
    let (j1, j2) = (0.9, -0.35);
    let spec = gen_ising(j1, j2);
    let tol = Tolerances::default();
    let b = Boundaries::from_spec(&spec);
    let d = diagonalize_segment(&spec, seg(0, 3), &b, &tol).unwrap();
    assert_eq!(d.expectation.atom_count(), 16);
    let spin = |w: usize| if w == 0 { 1.0 } else { -1.0 };
    let energy = |s: &[usize]| {
        j1 * spin(s[0]) * spin(s[1]) + j2 * spin(s[1]) * spin(s[2]) + j1 * spin(s[2]) * spin(s[3])
    };
    let z: f64 = (0..16usize)
        .map(|i| {
            let s: Vec<usize> = (0..4).map(|t| (i >> (3 - t)) & 1).collect();
            (-energy(&s)).exp()
        })
        .sum();
    for (atom, mu) in &d.chain.measure {
        let expected = (-energy(&atom.labels)).exp() / z;
        assert!((mu - expected).abs() < 1e-14, "{atom:?}: {mu} vs {expected}");
    }
    assert!((d.chain.total_mass() - 1.0).abs() < 1e-13);
}

#[test]
fn lifting_round_trip_recovers_transition_matrix() {
    let p = DMatrix::from_row_slice(3, 3, &[0.2, 0.5, 0.3, 0.6, 0.1, 0.3, 0.3, 0.3, 0.4]);
    let spec = gen_markov_lifting(&p).unwrap();
    let tol = Tolerances::default();
    let b = stationary_boundaries(&spec, &tol).unwrap();
    let d = diagonalize_segment(&spec, seg(0, 4), &b, &tol).unwrap();
    for step in 0..4 {
        let q = d.chain.label_transition(step).unwrap();
        assert!((q - &p).amax() < 1e-12, "step {step}");
    }
    // Stationary law by power iteration on the transpose.
    let mut pi = nalgebra::DVector::from_element(3, 1.0 / 3.0);
    for _ in 0..500 {
        pi = p.transpose() * pi;
    }
    for (w, x) in d.chain.first_label.iter().enumerate() {
        assert!((x - pi[w]).abs() < 1e-12);
    }
    assert!(d.chain.stochasticity_deviation() < 1e-12);
}

#[test]
fn random_lifted_specs_diagonalize() {
    let tol = Tolerances::default();
    for seed in 0..4u64 {
        let mut params = RandomParams::new(seed, vec![2, 3]);
        params.lifting = true;
        let spec = gen_random(&params).unwrap();
        let b = stationary_boundaries(&spec, &tol).unwrap();
        let s = seg(0, 2);

        let state = segment_density(&spec, s, &b, &StateOptions::default()).unwrap();
        let d = diagonalize_segment(&spec, s, &b, &tol).unwrap();
        assert!(d.expectation.orthonormality_deviation() < 1e-12);
        let cert = certify_atom_weights(state.dense_density().unwrap(), &d.expectation, &d.chain);
        assert!(cert < 1e-12, "seed {seed}: certification {cert:e}");

        let report = verify_diagonalization(&spec, s, &b, &tol).unwrap();
        assert!(report.passes(&tol), "seed {seed}: {report:?}");

        let r = potential_restriction_check(&spec, s, &b, &tol).unwrap();
        assert!(r < 1e-12, "seed {seed}: restriction {r:e}");

        let c = commuting_square_check(&spec, seg(0, 1), &b, &tol).unwrap();
        assert!(c < 1e-10, "seed {seed}: commuting square {c:e}");

        let m = markov_property_check(&d.chain, 1, 20, seed).unwrap();
        assert!(m.exhaustive && m.max_residual < 1e-12, "seed {seed}: {m:?}");
    }
}

#[test]
fn spec_supplied_boundaries_diagonalize() {
    let tol = Tolerances::default();
    let params = RandomParams::new(17, vec![3, 2, 2]);
    let spec = gen_random(&params).unwrap();
    let b = Boundaries::from_spec(&spec);
    let report = verify_diagonalization(&spec, seg(-1, 1), &b, &tol).unwrap();
    assert!(report.passes(&tol), "{report:?}");
}

#[test]
fn bond_eigenvalues_include_the_shift() {
    let spec = gen_ising(1.0, 0.5);
    let tol = Tolerances::default();
    let b = stationary_boundaries(&spec, &tol).unwrap();
    let data = build_diagonal_algebra(&spec, seg(0, 1), &b, &tol).unwrap();
    let raw = spec.bond(0).unwrap().blocks[0][0][(0, 0)].re;
    assert!((data.bonds[0][0][0].eigenvalues[0] - raw - b.bond_shift).abs() < 1e-15);
    let terms = boundary_terms(&spec, seg(0, 1), &b, &data).unwrap();
    assert!(terms.log_z.abs() < 1e-12);
}

#[test]
fn markov_check_rejects_sites_outside_segment() {
    let spec = gen_ising(1.0, 2.0);
    let tol = Tolerances::default();
    let d = diagonalize_segment(&spec, seg(0, 2), &Boundaries::from_spec(&spec), &tol).unwrap();
    assert!(markov_property_check(&d.chain, 3, 0, 0).is_err());
}
