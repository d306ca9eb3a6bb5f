mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{axiom_residual, random_antisymmetric, random_fiber, random_symplectic};
use gcconvex::fiber::{
    b_shift, from_complex_structure, from_symplectic, gualtieri_decompose, pairing, shear, type_of,
    EigenspaceBasis, SplitElement, DEFAULT_RANK_TOL,
};

fn dims() -> impl Strategy<Value = usize> {
    prop_oneof![Just(2usize), Just(4), Just(6)]
}

fn antisymmetric(d: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-2.0f64..2.0, d * d).prop_map(move |v| {
        let a = DMatrix::from_vec(d, d, v);
        &a - a.transpose()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn constructed_structures_satisfy_the_axioms(seed in any::<u64>(), d in dims()) {
        let f = random_fiber(&mut ChaCha8Rng::seed_from_u64(seed), d);
        for j in [&f.symplectic, &f.complex, &f.shifted, &f.compatible] {
            prop_assert!(axiom_residual(j.matrix()) < 1e-10);
        }
    }

    #[test]
    fn compatible_structure_commutes_and_is_positive(seed in any::<u64>(), d in dims()) {
        let f = random_fiber(&mut ChaCha8Rng::seed_from_u64(seed), d);
        let (j, jp) = (f.shifted.matrix(), f.compatible.matrix());
        prop_assert!((j * jp - jp * j).amax() < 1e-10);
        let n = 2 * d;
        let q = DMatrix::from_fn(n, n, |a, b| if (a < d && b == a + d) || (a >= d && b + d == a) { 0.5 } else { 0.0 });
        let g = -(j * jp);
        let form = g.transpose() * q;
        let sym = (&form + form.transpose()) * 0.5;
        prop_assert!(sym.symmetric_eigen().eigenvalues.min() > 0.0);
    }

    #[test]
    fn decomposition_round_trips(seed in any::<u64>(), d in dims()) {
        let f = random_fiber(&mut ChaCha8Rng::seed_from_u64(seed), d);
        let data = gualtieri_decompose(&f.shifted, &f.compatible, 1e-8).unwrap();
        let (j1, j2) = data.reconstruct().unwrap();
        prop_assert!((j1.matrix() - f.shifted.matrix()).amax() < 1e-9);
        prop_assert!((j2.matrix() - f.compatible.matrix()).amax() < 1e-9);
    }

    #[test]
    fn eigenspaces_are_maximal_isotropic_and_transverse(seed in any::<u64>(), d in dims()) {
        let f = random_fiber(&mut ChaCha8Rng::seed_from_u64(seed), d);
        for j in [&f.symplectic, &f.complex, &f.shifted, &f.compatible] {
            let l = EigenspaceBasis::of(j).unwrap();
            prop_assert_eq!(l.dim(), d);
            prop_assert!(l.eigen_residual(j) < 1e-10);
            prop_assert!(l.isotropy_residual() < 1e-10);
            prop_assert_eq!(l.transversality_rank(DEFAULT_RANK_TOL), 2 * d);
        }
    }

    #[test]
    fn b_shifts_compose_additively(d in dims(), seed in any::<u64>(), b1 in antisymmetric(6), b2 in antisymmetric(6)) {
        let (b1, b2) = (b1.view((0, 0), (d, d)).into_owned(), b2.view((0, 0), (d, d)).into_owned());
        let j = from_symplectic(&random_symplectic(&mut ChaCha8Rng::seed_from_u64(seed), d)).unwrap();
        let twice = b_shift(&b_shift(&j, &b1).unwrap(), &b2).unwrap();
        let once = b_shift(&j, &(&b1 + &b2)).unwrap();
        let scale = twice.matrix().amax().max(1.0);
        prop_assert!((twice.matrix() - once.matrix()).amax() < 1e-12 * scale);
        prop_assert!((shear(&b1) * shear(&b2) - shear(&(&b1 + &b2))).amax() == 0.0);
    }

    #[test]
    fn pairing_is_half_the_dual_evaluation(x in prop::collection::vec(-5.0f64..5.0, 8)) {
        let a = SplitElement::new(x[0..2].to_vec().into(), x[2..4].to_vec().into()).unwrap();
        let b = SplitElement::new(x[4..6].to_vec().into(), x[6..8].to_vec().into()).unwrap();
        let expected = 0.5 * (x[6] * x[0] + x[7] * x[1] + x[2] * x[4] + x[3] * x[5]);
        prop_assert!((pairing(&a, &b).unwrap() - expected).abs() < 1e-12);
    }
}

#[test]
fn type_is_invariant_under_b_shifts() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for d in [2usize, 4, 6] {
        let f = random_fiber(&mut rng, d);
        let sym = type_of(&f.symplectic, DEFAULT_RANK_TOL).unwrap();
        let cx = type_of(&f.complex, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(sym, 0);
        assert_eq!(cx, d / 2);
        for _ in 0..100 {
            let b = random_antisymmetric(&mut rng, d);
            assert_eq!(
                type_of(&b_shift(&f.symplectic, &b).unwrap(), DEFAULT_RANK_TOL).unwrap(),
                sym
            );
            assert_eq!(
                type_of(&b_shift(&f.complex, &b).unwrap(), DEFAULT_RANK_TOL).unwrap(),
                cx
            );
        }
    }
}

#[test]
fn symplectic_block_form_matches_hand_substitution() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let w = random_symplectic(&mut rng, 4);
    let j = from_symplectic(&w).unwrap();
    let winv = w.clone().try_inverse().unwrap();
    let mut expected = DMatrix::zeros(8, 8);
    expected.view_mut((0, 4), (4, 4)).copy_from(&(-winv));
    expected.view_mut((4, 0), (4, 4)).copy_from(&w);
    assert!((j.matrix() - expected).amax() < 1e-12);
}

#[test]
fn complex_block_form_matches_hand_substitution() {
    let js = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
    let j = from_complex_structure(&js).unwrap();
    let expected = DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0, -1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0,
        ],
    );
    assert_eq!(j.matrix(), &expected);
}
