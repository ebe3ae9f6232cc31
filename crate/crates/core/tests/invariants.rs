use gnt_core::invariants::{
    contraction_factor, kronecker_delta, newton_polynomial, random_integer_system, sigma_kronecker,
    trailing_contraction,
};
use gnt_core::multiindex::enumerate_up_to;
use gnt_core::{EndoSystem, Matrix, MultiIndex, NewtonFamily, Rational, Scalar};
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn int(x: i64) -> Rational {
    Rational::from_i64(x)
}

fn u(v: &[u32]) -> MultiIndex {
    MultiIndex::new(v.to_vec())
}

fn diag12() -> EndoSystem<Rational> {
    EndoSystem::new(2, vec![Matrix::from_i64_rows(&[&[1, 0], &[0, 2]])]).unwrap()
}

#[test]
fn newton_polynomial_examples() {
    let s = newton_polynomial(&diag12());
    assert_eq!(s.get(&u(&[0])), int(1));
    assert_eq!(s.get(&u(&[1])), int(3));
    assert_eq!(s.get(&u(&[2])), int(2));

    let s = newton_polynomial(&EndoSystem::<Rational>::identities(2, 2));
    assert_eq!(s.get(&u(&[1, 0])), int(2));
    assert_eq!(s.get(&u(&[1, 1])), int(2));
    assert_eq!(s.get(&u(&[2, 0])), int(1));

    let s = newton_polynomial(&EndoSystem::<Rational>::zero(3, 2));
    for (v, x) in s.iter() {
        assert_eq!(*x, if v.is_zero() { int(1) } else { int(0) }, "{v:?}");
    }
}

#[test]
fn kronecker_examples() {
    // 1-based (1,2) vs (2,1) in the 0-based API
    assert_eq!(kronecker_delta(&[0, 1], &[1, 0]), -1);
    assert_eq!(kronecker_delta(&[0, 0], &[0, 1]), 0);
    let mut total = 0i64;
    for i in 0..3 {
        for j in 0..3 {
            total += kronecker_delta(&[i, j], &[i, j]) as i64;
        }
    }
    assert_eq!(total, 6);

    assert_eq!(sigma_kronecker(&diag12(), &[0, 0]).unwrap(), int(2));
    assert_eq!(sigma_kronecker(&diag12(), &[0]).unwrap(), diag12().matrix(0).trace());
}

#[test]
fn kronecker_matches_determinant_on_random_system() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sys = random_integer_system(&mut rng, 3, 2, 4);
    let det = newton_polynomial(&sys);
    assert_eq!(sigma_kronecker(&sys, &[0, 1]).unwrap(), det.get(&u(&[1, 1])));
}

/// Full contraction Σ_I δ^I_I over every length-r tuple.
fn full_trace(p: usize, r: usize) -> i64 {
    (0..p.pow(r as u32))
        .map(|mut code| {
            let t: Vec<usize> = (0..r)
                .map(|_| {
                    let d = code % p;
                    code /= p;
                    d
                })
                .collect();
            kronecker_delta(&t, &t) as i64
        })
        .sum()
}

#[test]
fn kronecker_contractions_exhaustive() {
    for p in 1..=4usize {
        for r in 0..=4usize {
            let want = if r <= p { contraction_factor(p, 0, r) } else { 0 };
            assert_eq!(full_trace(p, r), want, "p={p} r={r}");
            for s in r..=4 {
                let factor = contraction_factor(p, r, s);
                for top in 0..p.pow(r as u32) {
                    for bottom in 0..p.pow(r as u32) {
                        let digits = |mut c: usize| -> Vec<usize> {
                            (0..r)
                                .map(|_| {
                                    let d = c % p;
                                    c /= p;
                                    d
                                })
                                .collect()
                        };
                        let (t, b) = (digits(top), digits(bottom));
                        assert_eq!(
                            trailing_contraction(p, &t, &b, s),
                            factor * kronecker_delta(&t, &b) as i64,
                            "p={p} r={r} s={s} {t:?} {b:?}"
                        );
                    }
                }
            }
        }
    }
}

fn system_strategy() -> impl Strategy<Value = (u64, usize, usize)> {
    (any::<u64>(), 1usize..=4, 1usize..=3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn three_way_sigma((seed, p, q) in system_strategy()) {
        let sys = random_integer_system(&mut ChaCha8Rng::seed_from_u64(seed), p, q, 3);
        let det = newton_polynomial(&sys);
        let gn1 = NewtonFamily::gn1(&sys, p);
        for v in enumerate_up_to(q, p) {
            let k: Rational = sigma_kronecker(&sys, &v.to_axes()).unwrap();
            prop_assert_eq!(&k, &det.get(&v));
            prop_assert_eq!(gn1.sigma(&v).unwrap(), det.get(&v));
        }
    }

    #[test]
    fn kronecker_ignores_axis_order((seed, p, q) in system_strategy(), rot in 0usize..4) {
        let sys = random_integer_system(&mut ChaCha8Rng::seed_from_u64(seed), p, q, 3);
        for v in enumerate_up_to(q, p.min(3)) {
            let mut axes = v.to_axes();
            if axes.is_empty() {
                continue;
            }
            let base: Rational = sigma_kronecker(&sys, &axes).unwrap();
            let n = axes.len();
            axes.rotate_left(rot % n);
            axes.reverse();
            prop_assert_eq!(sigma_kronecker(&sys, &axes).unwrap(), base);
        }
    }

    #[test]
    fn homogeneous_scaling((seed, p, q) in system_strategy(), c in -4i64..=4) {
        let sys = random_integer_system(&mut ChaCha8Rng::seed_from_u64(seed), p, q, 3);
        let c = int(c);
        let scaled = newton_polynomial(&sys.scale(&c));
        let det = newton_polynomial(&sys);
        for v in enumerate_up_to(q, p) {
            let mut factor = Rational::one();
            for _ in 0..v.length() {
                factor = factor * c.clone();
            }
            prop_assert_eq!(scaled.get(&v), det.get(&v) * factor);
        }
    }

    #[test]
    fn beyond_p_vanishes((seed, p, q) in system_strategy()) {
        let sys = random_integer_system(&mut ChaCha8Rng::seed_from_u64(seed), p, q, 3);
        let fam = NewtonFamily::gn1(&sys, p + 2);
        for v in enumerate_up_to(q, p + 2).into_iter().filter(|v| v.length() > p) {
            prop_assert!(fam.sigma(&v).unwrap().is_zero());
        }
    }
}
