use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use proptest::prelude::*;
use qmarkov::classify::{
    alpha_from_rationals, best_rational, classify, dense_leading_spectrum, difference_set,
    leading_spectrum, ClassifyOptions, Reference, Verdict,
};
use qmarkov::diagonalize::{certify_atom_weights, diagonalize_segment, markov_property_check};
use qmarkov::markov::{
    assemble_operators, segment_density, stationary_boundaries, verify_commutation, Segment,
    StateOptions,
};
use qmarkov::models::{gen_ising, gen_ising_exact, gen_markov_lifting, gen_random, EigenvaluePool, RandomParams};
use qmarkov::Tolerances;

fn rational() -> impl Strategy<Value = BigRational> {
    (-40i64..=40, 1i64..=12).prop_map(|(n, d)| BigRational::new(n.into(), d.into()))
}

fn nonzero_rational() -> impl Strategy<Value = BigRational> {
    rational().prop_filter("nonzero", |r| !r.is_zero())
}

fn stochastic(d: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(0.05f64..1.0, d * d).prop_map(move |v| {
        let mut m = DMatrix::from_vec(d, d, v);
        for mut row in m.row_iter_mut() {
            let s = row.sum();
            row /= s;
        }
        m
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn best_rational_is_closest(num in -10_000i64..10_000, den in 1i64..10_000, q in 1u64..80) {
        let x = BigRational::new(num.into(), den.into());
        let f = best_rational(&x, q);
        prop_assert!(f.denom() <= &BigInt::from(q));
        let err = (&f - &x).abs();
        for d in 1..=q as i64 {
            let n = (&x * BigRational::from_integer(d.into())).round().to_integer();
            let cand = BigRational::new(n, d.into());
            prop_assert!(err <= (&cand - &x).abs());
        }
    }

    #[test]
    fn alpha_lattices_contain_every_input(x1 in nonzero_rational(), rs in prop::collection::vec(nonzero_rational(), 0..6)) {
        let mut ratios = vec![BigRational::from_integer(1.into())];
        ratios.extend(rs);
        let reference = Reference::Exact { value: x1.clone(), unit: 1.0 };
        let a = alpha_from_rationals(&reference, &ratios).unwrap();
        let log_alpha = a.log_alpha_exact.clone().unwrap();
        let log_best = a.log_best_alpha_exact.clone().unwrap();
        prop_assert!(log_alpha < BigRational::zero() && log_best < BigRational::zero());
        for (i, r) in ratios.iter().enumerate() {
            let x = &x1 * r;
            prop_assert_eq!(&x, &(BigRational::from_integer(a.coefficients[i].clone()) * &log_alpha));
            prop_assert_eq!(&x, &(BigRational::from_integer(a.best_coefficients[i].clone()) * &log_best));
        }
        // The best lattice is at least as coarse as the literal one.
        prop_assert!((&log_best / &log_alpha).is_integer());
    }

    #[test]
    fn difference_sets_are_symmetric(j1 in -3.0f64..3.0, j2 in -3.0f64..3.0) {
        let s = leading_spectrum(&gen_ising(j1, j2), Segment::new(0, 2).unwrap(), 1e-11, true).unwrap();
        let d = difference_set(&s, 1e-11);
        prop_assert!(d.differences.contains(&0.0));
        let n = d.differences.len();
        for i in 0..n {
            prop_assert!((d.differences[i] + d.differences[n - 1 - i]).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_ising_generator_is_twice_the_coupling_gcd(j1 in nonzero_rational(), j2 in nonzero_rational()) {
        let c = classify(&gen_ising_exact(&j1, &j2), &ClassifyOptions::default()).unwrap();
        // Bond signs are free, so the lattice is spanned by 2 J1 and 2 J2.
        let den = j1.denom().lcm(j2.denom());
        let a = (&j1 * BigRational::from_integer(den.clone())).to_integer();
        let b = (&j2 * BigRational::from_integer(den.clone())).to_integer();
        let expected = BigRational::new(BigInt::from(2) * a.gcd(&b), den);
        match c.verdict {
            Verdict::IIILambdaCandidate { exact_generator, stabilized, .. } => {
                prop_assert_eq!(exact_generator, Some(expected));
                prop_assert!(stabilized);
            }
            v => prop_assert!(false, "unexpected verdict {:?}", v),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn tracial_iff_dense_leading_term_is_scalar(seed in 0u64..1000, single in any::<bool>()) {
        let mut params = RandomParams::new(seed, vec![2, 2]);
        let values = if single {
            vec![BigRational::new(3.into(), 2.into())]
        } else {
            vec![BigRational::new(1.into(), 2.into()), BigRational::new(3.into(), 2.into())]
        };
        params.pool = EigenvaluePool::RationalLog { base: BigRational::from_integer(3.into()), values };
        let spec = gen_random(&params).unwrap();
        let dense = dense_leading_spectrum(&spec, Segment::new(0, 2).unwrap(), 4096).unwrap();
        let scalar = dense[dense.len() - 1] - dense[0] < 1e-10;
        let c = classify(&spec, &ClassifyOptions::default()).unwrap();
        prop_assert_eq!(scalar, c.verdict == Verdict::Tracial);
    }

    #[test]
    fn random_lifted_specs_commute_and_diagonalize(seed in 0u64..10_000, dims in prop::collection::vec(1usize..=4, 1..=3)) {
        let tol = Tolerances::default();
        let mut params = RandomParams::new(seed, dims);
        params.lifting = true;
        let spec = gen_random(&params).unwrap();
        let seg = Segment::new(0, 2).unwrap();
        let report = verify_commutation(&assemble_operators(&spec, seg).unwrap()).unwrap();
        prop_assert!(report.passes(1e-12), "{:?}", report);

        let b = stationary_boundaries(&spec, &tol).unwrap();
        let state = segment_density(&spec, seg, &b, &StateOptions::default()).unwrap();
        let d = diagonalize_segment(&spec, seg, &b, &tol).unwrap();
        let cert = certify_atom_weights(state.dense_density().unwrap(), &d.expectation, &d.chain);
        prop_assert!(cert < 1e-10, "certification {:e}", cert);
        let m = markov_property_check(&d.chain, 1, 10, seed).unwrap();
        prop_assert!(m.max_residual < 1e-10);
    }

    #[test]
    fn lifting_round_trip(p in (2usize..=4).prop_flat_map(stochastic)) {
        prop_assume!(p.iter().any(|x| (x - p[0]).abs() > 1e-9));
        let tol = Tolerances::default();
        let spec = gen_markov_lifting(&p).unwrap();
        let b = stationary_boundaries(&spec, &tol).unwrap();
        let d = diagonalize_segment(&spec, Segment::new(0, 2).unwrap(), &b, &tol).unwrap();
        for step in 0..2 {
            let q = d.chain.label_transition(step).unwrap();
            prop_assert!((q - &p).amax() < 1e-12);
        }
        prop_assert!((d.chain.total_mass() - 1.0).abs() < 1e-12);
        prop_assert!(d.chain.first_label.iter().all(|x| *x > 0.0));
    }
}
