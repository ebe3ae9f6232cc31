use gnt_core::fiber::{average_scalar, haar_rule, random_orthogonal, vanishing_by_symmetry};
use gnt_core::multiindex::enumerate_up_to;
use gnt_core::{EndoSystem, FiberSpec, Group, Matrix, MultiIndex, NewtonFamily};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_float_system(seed: u64, p: usize, q: usize) -> EndoSystem<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mats = (0..q)
        .map(|_| Matrix::from_fn(p, p, |_, _| rng.random_range(-1.0..1.0)))
        .collect();
    EndoSystem::new(p, mats).unwrap()
}

/// Shape operators of the rotated normal frame N_β = Σ_α g_{αβ} e_α.
fn rotated(sys: &EndoSystem<f64>, g: &Matrix<f64>) -> EndoSystem<f64> {
    let (p, q) = (sys.p(), sys.q());
    let mats = (0..q)
        .map(|b| {
            let mut m = Matrix::zeros(p, p);
            for a in 0..q {
                m.add_scaled(&g[(a, b)], sys.matrix(a));
            }
            m
        })
        .collect();
    EndoSystem::new(p, mats).unwrap()
}

fn sigma_of(sys: &EndoSystem<f64>, g: &Matrix<f64>, u: &MultiIndex) -> f64 {
    NewtonFamily::gn1(&rotated(sys, g), u.length()).sigma(u).unwrap()
}

fn sigma2(m: &Matrix<f64>) -> f64 {
    let t = m.trace();
    0.5 * (t * t - m.trace_of_product(m))
}

#[test]
fn constants_average_exactly() {
    for (group, q, n, seed) in [(Group::O, 1, 1, None), (Group::SO, 2, 7, None), (Group::O, 3, 100, Some(1))] {
        let rule = haar_rule(group, q, n, seed).unwrap();
        let v = average_scalar(&rule, &Matrix::identity(q), |_| 2.5);
        assert!((v - 2.5).abs() <= 1e-14, "{group} q={q}: {v}");
    }
}

#[test]
fn codimension_one_first_curvature_cancels() {
    let sys = random_float_system(1, 3, 1);
    let rule = haar_rule(Group::O, 1, 1, None).unwrap();
    let u = MultiIndex::new(vec![1]);
    let avg = average_scalar(&rule, &Matrix::identity(1), |g| sigma_of(&sys, g, &u));
    let by_hand = 0.5 * (sys.matrix(0).trace() + (-sys.matrix(0).trace()));
    assert_eq!(avg, by_hand);
    assert!(avg.abs() <= 1e-15);
}

#[test]
fn rotation_average_matches_angle_integral() {
    let sys = random_float_system(2, 3, 2);
    let rule = haar_rule(Group::SO, 2, 16, None).unwrap();
    let e0 = Matrix::identity(2);
    // σ_(2,0)(cA₁+sA₂) = c²σ₂(A₁) + cs·(…) + s²σ₂(A₂); the angle mean keeps half of each square
    let want = 0.5 * (sigma2(sys.matrix(0)) + sigma2(sys.matrix(1)));
    let got = average_scalar(&rule, &e0, |g| sigma_of(&sys, g, &MultiIndex::new(vec![2, 0])));
    assert!((got - want).abs() <= 1e-13, "{got} vs {want}");
    // the (1,1) coefficient is a combination of cs and c²−s², both mean zero
    let mixed = average_scalar(&rule, &e0, |g| sigma_of(&sys, g, &MultiIndex::new(vec![1, 1])));
    assert!(mixed.abs() <= 1e-13);
}

#[test]
fn monte_carlo_identity_entry_within_clt_bound() {
    let n = 10_000;
    let rule = haar_rule(Group::SO, 3, n, Some(42)).unwrap();
    let v = average_scalar(&rule, &Matrix::identity(3), |g| g[(0, 0)]);
    assert!(v.abs() <= 3.0 / (n as f64).sqrt());
}

#[test]
fn mc_requires_seed_and_exact_requires_q_one() {
    let mc: FiberSpec = serde_json::from_str(r#"{"kind":"mc","n":10}"#).unwrap();
    assert!(mc.build(Group::SO, 3).is_err());
    let exact: FiberSpec = serde_json::from_str(r#"{"kind":"exact"}"#).unwrap();
    assert!(exact.build(Group::O, 2).is_err());
    assert!(exact.build(Group::O, 1).is_ok());
}

fn exact_rule(group: Group, q: usize) -> gnt_core::FiberRule {
    haar_rule(group, q, 16, None).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn haar_invariance(seed in any::<u64>(), p in 1usize..=3, q in 1usize..=2, so in any::<bool>()) {
        let group = if so { Group::SO } else { Group::O };
        let sys = random_float_system(seed, p, q);
        let rule = exact_rule(group, q);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut g = random_orthogonal(&mut rng, q);
        if group == Group::SO && g.determinant() < 0.0 {
            for i in 0..q {
                g[(i, 0)] = -g[(i, 0)];
            }
        }
        let e0 = Matrix::identity(q);
        for u in enumerate_up_to(q, p) {
            let a = average_scalar(&rule, &e0, |h| sigma_of(&sys, h, &u));
            let b = average_scalar(&rule, &g, |h| sigma_of(&sys, h, &u));
            prop_assert!((a - b).abs() <= 1e-12, "{:?}: {} vs {}", u, a, b);
        }
    }

    #[test]
    fn flagged_indices_average_to_zero(seed in any::<u64>(), p in 1usize..=4, q in 1usize..=2, so in any::<bool>()) {
        let group = if so { Group::SO } else { Group::O };
        let sys = random_float_system(seed, p, q);
        let rule = exact_rule(group, q);
        let e0 = Matrix::identity(q);
        for u in enumerate_up_to(q, p).into_iter().filter(|u| vanishing_by_symmetry(u, group)) {
            let a = average_scalar(&rule, &e0, |h| sigma_of(&sys, h, &u));
            prop_assert!(a.abs() <= 1e-12, "{:?}: {}", u, a);
        }
    }

    #[test]
    fn mc_rules_reproduce(seed in any::<u64>(), q in 3usize..=4, sym in any::<bool>()) {
        let a = gnt_core::fiber::monte_carlo_rule(Group::SO, q, 20, seed, sym).unwrap();
        let b = gnt_core::fiber::monte_carlo_rule(Group::SO, q, 20, seed, sym).unwrap();
        prop_assert_eq!(a.nodes(), b.nodes());
        for g in a.nodes() {
            prop_assert!(g.orthogonality_defect() <= 1e-12);
            prop_assert!(g.determinant() > 0.0);
        }
    }
}
