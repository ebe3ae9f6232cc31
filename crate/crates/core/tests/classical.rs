use gnt_core::classical::{check_r_identities, classical_direct, even_weight, reduce_from_gnt};
use gnt_core::invariants::random_integer_system;
use gnt_core::{EndoSystem, Matrix, MultiIndex, NewtonFamily, Rational, Scalar};
use num_traits::Zero;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn signed_permutation(perm: &[usize], signs: &[i64]) -> Matrix<Rational> {
    let n = perm.len();
    Matrix::from_fn(n, n, |i, j| {
        if perm[j] == i {
            Rational::from_i64(signs[j])
        } else {
            Rational::zero()
        }
    })
}

#[test]
fn weights_for_r_two_are_one() {
    assert_eq!(even_weight(2, &MultiIndex::new(vec![2, 0])).unwrap(), Rational::from_i64(1));
    assert_eq!(
        even_weight(4, &MultiIndex::new(vec![2, 2])).unwrap(),
        Rational::from_ratio(1, 3)
    );
    assert!(even_weight(3, &MultiIndex::new(vec![3, 0])).is_err());
}

#[test]
fn two_identities() {
    let sys = EndoSystem::<Rational>::identities(2, 2);
    let ev = classical_direct(&sys, 2).unwrap();
    assert_eq!(*ev.s(0).unwrap(), Rational::from_i64(1));
    assert_eq!(*ev.s(2).unwrap(), Rational::from_i64(2));
    assert_eq!(ev.t(0).unwrap(), &Matrix::identity(2));
}

#[test]
fn direct_equals_reduction_random() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (p, q) in [(2, 1), (3, 2), (4, 2), (4, 3), (3, 3)] {
        let sys = random_integer_system(&mut rng, p, q, 3);
        let direct = classical_direct(&sys, 4).unwrap();
        let reduced = reduce_from_gnt(&NewtonFamily::recurrence(&sys, 4), 4).unwrap();
        assert_eq!(direct, reduced, "p={p} q={q}");
        let dirs = vec![random_integer_system(&mut rng, p, q, 3)];
        let report = check_r_identities(&direct, &dirs).unwrap();
        assert!(report.all_zero(), "{report:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn s_r_is_basis_independent(seed in any::<u64>(), perm_seed in 0usize..24, sign_bits in 0u8..16) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = random_integer_system(&mut rng, 4, 2, 3);
        let mut perm: Vec<usize> = (0..4).collect();
        let mut k = perm_seed;
        for i in (1..4).rev() {
            perm.swap(i, k % (i + 1));
            k /= i + 1;
        }
        let signs: Vec<i64> = (0..4).map(|i| if sign_bits >> i & 1 == 1 { -1 } else { 1 }).collect();
        let u = signed_permutation(&perm, &signs);
        let a = reduce_from_gnt(&NewtonFamily::recurrence(&sys, 4), 4).unwrap();
        let b = reduce_from_gnt(&NewtonFamily::recurrence(&sys.conjugate(&u), 4), 4).unwrap();
        for r in [0, 2, 4] {
            prop_assert_eq!(a.s(r).unwrap(), b.s(r).unwrap());
        }
    }
}
