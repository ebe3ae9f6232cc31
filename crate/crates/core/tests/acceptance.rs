//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
//!
//! Runs without the libtest harness so the lines always reach the output.

use std::time::Instant;

use gnt_core::fiber::{haar_rule, sphere_rule, vanishing_by_symmetry};
use gnt_core::invariants::{
    contraction_factor, kronecker_delta, newton_polynomial, random_integer_system, trailing_contraction,
};
use gnt_core::multiindex::{enumerate_up_to, factorial};
use gnt_core::suite::{verify_system, IdentityCheck};
use gnt_core::torus_lab::checks::{codazzi, extrinsic_curvature, main_theorem, one_operator_reduction, stokes, walczak};
use gnt_core::torus_lab::config::observed_order;
use gnt_core::torus_lab::frame::FrameSpec;
use gnt_core::torus_lab::geometry::{DerivativeMode, TorusGeometry};
use gnt_core::torus_lab::kappa::{branch, kappa_recurrence, kappa_table, Branch};
use gnt_core::{EndoSystem, FiberRule, Group, Matrix, MultiIndex, Rational, Result};
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

// Pinned tolerances.
const SWEEP_TRIALS: usize = 50;
const SWEEP_SEED: u64 = 2024;
const SWEEP_SECONDS: f64 = 60.0;
const VANISHING_TOL: f64 = 1e-6;
const MC_SIGMAS: f64 = 3.0;
const THEOREM_TOL: f64 = 1e-3;
const REFINEMENT_RATIO: f64 = 4.0;
/// Residuals below this are rounding noise; a ratio between two of them means nothing.
const ROUNDING_FLOOR: f64 = 1e-12;
const THEOREM_SECONDS: f64 = 300.0;
const WALCZAK_TOL: f64 = 1e-3;
const POINTWISE_TOL: f64 = 1e-10;
const REDUCTION_TOL: f64 = 1e-3;
const MIN_ORDER: f64 = 1.8;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { pass, detail: detail.into() })
}

fn u(v: &[u32]) -> MultiIndex {
    MultiIndex::new(v.to_vec())
}

fn geometry(spec: FrameSpec, m: usize) -> Result<TorusGeometry> {
    TorusGeometry::new(spec.build()?, m, DerivativeMode::Central)
}

fn random_frame(p: usize, q: usize, seed: u64) -> FrameSpec {
    FrameSpec::Random { p, q, seed, modes: 1, amplitude: 0.25, terms: 2 }
}

fn two_angle() -> FrameSpec {
    FrameSpec::T3TwoAngle { a: 0.3, b: 0.2 }
}

fn fmt_orders(xs: &[f64]) -> String {
    let orders: Vec<String> = xs
        .windows(2)
        .map(|w| observed_order(w[0], w[1], 2.0).map_or("n/a".into(), |o| format!("{o:.2}")))
        .collect();
    orders.join(", ")
}

fn orders_ok(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| observed_order(w[0], w[1], 2.0).is_some_and(|o| o >= MIN_ORDER))
}

// ---- 1-4: the exact identity sweep ----

struct Sweep {
    trials: Vec<Vec<IdentityCheck>>,
    seconds: f64,
}

fn sweep() -> Result<Sweep> {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SWEEP_SEED);
    let mut trials = Vec::with_capacity(SWEEP_TRIALS);
    for i in 0..SWEEP_TRIALS {
        // cycle through every (p, q) with p ≤ 4, q ≤ 3
        let (p, q) = (1 + i % 4, 1 + (i / 4) % 3);
        let sys: EndoSystem<Rational> = random_integer_system(&mut rng, p, q, 3);
        trials.push(verify_system(&sys, true)?);
    }
    Ok(Sweep { trials, seconds: t.elapsed().as_secs_f64() })
}

fn all_named(s: &Sweep, names: &[&str]) -> (bool, usize) {
    let mut count = 0;
    let mut pass = true;
    for trial in &s.trials {
        for c in trial.iter().filter(|c| names.contains(&c.name)) {
            count += c.count;
            pass &= c.pass && c.max_abs == 0.0;
        }
    }
    (pass, count)
}

fn c1(s: &Sweep) -> Result<Outcome> {
    let (ok, n) = all_named(s, &["sigma_three_way"]);
    outcome(
        ok && s.seconds <= SWEEP_SECONDS,
        format!("{n} exact comparisons over {} systems, sweep {:.1} s", s.trials.len(), s.seconds),
    )
}

fn c2(s: &Sweep) -> Result<Outcome> {
    let (ok, n) = all_named(s, &["t_explicit"]);
    outcome(ok, format!("{n} exact matrix comparisons, |u| ≤ 4"))
}

fn c3(s: &Sweep) -> Result<Outcome> {
    let (ok, n) = all_named(s, &["cayley_hamilton"]);
    outcome(ok, format!("{n} indices with |u| ∈ {{p, p+1}}, all T_u = 0"))
}

fn c4(s: &Sweep) -> Result<Outcome> {
    let (ok, n) = all_named(s, &["gn1", "gn2", "gn3", "r_identities", "classical_direct_vs_gnt"]);
    outcome(ok, format!("{n} residuals, all exactly 0 (classical r ≤ 4)"))
}

// ---- 5-6: closed forms ----

fn c5() -> Result<Outcome> {
    let mut n = 0;
    for p in 1..=6usize {
        for q in 1..=3usize {
            let sigma = newton_polynomial(&EndoSystem::<Rational>::identities(p, q));
            for v in enumerate_up_to(q, p) {
                let r = v.length();
                let want = Rational::from_integer((factorial(p) / (factorial(p - r) * v.factorial())).into());
                if sigma.get(&v) != want {
                    return outcome(false, format!("p={p} q={q} u={v:?}: {} vs {want}", sigma.get(&v)));
                }
                n += 1;
            }
        }
    }
    outcome(true, format!("{n} indices, p ≤ 6, q ≤ 3"))
}

fn tuples(p: usize, r: usize) -> Vec<Vec<usize>> {
    (0..p.pow(r as u32))
        .map(|mut c| {
            (0..r)
                .map(|_| {
                    let d = c % p;
                    c /= p;
                    d
                })
                .collect()
        })
        .collect()
}

fn c6() -> Result<Outcome> {
    let mut n = 0;
    for p in 1..=4usize {
        for r in 0..=4usize {
            let trace: i64 = tuples(p, r).iter().map(|t| kronecker_delta(t, t) as i64).sum();
            if trace != contraction_factor(p, 0, r) {
                return outcome(false, format!("full trace p={p} r={r}: {trace}"));
            }
            for s in r..=4 {
                let k = contraction_factor(p, r, s);
                for top in tuples(p, r) {
                    for bottom in tuples(p, r) {
                        n += 1;
                        if trailing_contraction(p, &top, &bottom, s) != k * kronecker_delta(&top, &bottom) as i64 {
                            return outcome(false, format!("p={p} r={r} s={s} {top:?}/{bottom:?}"));
                        }
                    }
                }
            }
        }
    }
    outcome(true, format!("{n} contractions, factor (p−r)!/(p−s)!"))
}

// ---- 7: symmetric vanishing on random tori ----

fn c7() -> Result<Outcome> {
    let mut n = 0;
    let mut worst_exact = 0.0f64;
    let mut worst_sigmas = 0.0f64;
    let cases: [(usize, usize, Group, usize); 8] = [
        (1, 1, Group::O, 32),
        (2, 1, Group::O, 16),
        (1, 2, Group::O, 16),
        (1, 2, Group::SO, 16),
        (2, 2, Group::O, 16),
        (2, 2, Group::SO, 16),
        (1, 3, Group::O, 16),
        (1, 3, Group::SO, 16),
    ];
    for (k, &(p, q, group, m)) in cases.iter().enumerate() {
        let geom = geometry(random_frame(p, q, 100 + k as u64), m)?;
        let rule: FiberRule = if q <= 2 { haar_rule(group, q, 16, None)? } else { haar_rule(group, q, 256, Some(7 + k as u64))? };
        for v in enumerate_up_to(q, p).into_iter().filter(|v| vanishing_by_symmetry(v, group)) {
            let c = extrinsic_curvature(&geom, &rule, &v)?;
            n += 1;
            if rule.is_monte_carlo() {
                let z = c.sigma_m.abs() / c.stderr;
                worst_sigmas = worst_sigmas.max(z);
                if z > MC_SIGMAS {
                    return outcome(false, format!("p={p} q={q} {group} {v:?}: {z:.2}σ"));
                }
            } else {
                worst_exact = worst_exact.max(c.sigma_m.abs());
                if c.sigma_m.abs() > VANISHING_TOL {
                    return outcome(false, format!("p={p} q={q} {group} {v:?}: {:.3e}", c.sigma_m));
                }
            }
        }
    }
    outcome(
        true,
        format!("{n} flagged indices; exact rules max {worst_exact:.1e}, Monte-Carlo max {worst_sigmas:.2}σ"),
    )
}

// ---- 8-9: the integral formula and Walczak on the T³ example ----

fn c8_9() -> Result<(Outcome, Outcome)> {
    let t = Instant::now();
    let rule = haar_rule(Group::SO, 2, 64, None)?;
    let us = [u(&[1, 1]), u(&[2, 0]), u(&[0, 2])];
    let coarse = geometry(two_angle(), 32)?;
    let fine = geometry(two_angle(), 64)?;
    let mut pass = true;
    let mut parts = Vec::new();
    for v in &us {
        let a = main_theorem(&coarse, &rule, v, 0.0)?.relative();
        let b = main_theorem(&fine, &rule, v, 0.0)?.relative();
        let converging = b * REFINEMENT_RATIO <= a || a.max(b) <= ROUNDING_FLOOR;
        pass &= b <= THEOREM_TOL && converging;
        parts.push(format!("{v:?}: {a:.1e}→{b:.1e}"));
    }
    let w = walczak(&fine, &Matrix::identity(2))?;
    let t3_seconds = t.elapsed().as_secs_f64();

    // With p = 1 both sides vanish identically, so the refinement ratio above
    // is only meaningful through the floor.  Demand second order on a field where
    // the formula is not degenerate.
    let rule1 = haar_rule(Group::O, 1, 1, None)?;
    let mut abs = Vec::new();
    let mut rel_fine = 0.0;
    for m in [16, 32, 64] {
        let th = main_theorem(&geometry(random_frame(2, 1, 3), m)?, &rule1, &u(&[2]), 0.0)?;
        abs.push(th.residual());
        rel_fine = th.relative();
    }
    let support = orders_ok(&abs) && rel_fine <= THEOREM_TOL;
    pass &= support && t3_seconds <= THEOREM_SECONDS;
    let c8 = Outcome {
        pass,
        detail: format!(
            "m=32→64, N=64, relative {}; both sides at rounding floor (p = 1); \
             random p=2,q=1 u=(2) m=16/32/64 residual {:.1e}/{:.1e}/{:.1e}, orders {}; T³ part {:.0} s",
            parts.join(", "),
            abs[0],
            abs[1],
            abs[2],
            fmt_orders(&abs),
            t3_seconds
        ),
    };
    let pointwise = w.pointwise.iter().cloned().fold(0.0, f64::max);
    let c9 = Outcome {
        pass: w.relative() <= WALCZAK_TOL && pointwise <= POINTWISE_TOL,
        detail: format!("m=64 relative {:.1e}, pointwise identities max {:.1e}", w.relative(), pointwise),
    };
    Ok((c8, c9))
}

// ---- 10: space forms ----

fn c10() -> Result<Outcome> {
    let mut rows = 0;
    let mut vanishing = 0;
    for p in 1..=8 {
        for q in 1..=4 {
            let rep = kappa_table(p, q)?;
            if !rep.all_ok() {
                return outcome(false, format!("p={p} q={q}"));
            }
            if branch(p, q) == Branch::Vanishing {
                if !rep.rows.iter().all(|r| r.recurrence.coef.is_zero() && r.closed_form.coef.is_zero()) {
                    return outcome(false, format!("p={p} q={q} should vanish"));
                }
                vanishing += 1;
            }
            rows += rep.rows.len();
        }
    }
    let (_, row) = kappa_recurrence(2, 1, 2)?;
    let blr = row.recurrence.coef == Rational::from_integer(1.into()) && row.recurrence.power == 1;
    outcome(
        blr,
        format!("{rows} rows exact, {vanishing} vanishing (p odd) tables; p=2,q=1,r=2 gives {}", row.recurrence),
    )
}

// ---- 11: one-operator reduction ----

fn c11() -> Result<Outcome> {
    let rule = haar_rule(Group::SO, 2, 64, None)?;
    let sphere = sphere_rule(Group::SO, 2, 64, None)?;
    let mut worst = 0.0f64;
    for (name, geom) in [("T³ two-angle", geometry(two_angle(), 32)?), ("random p=2,q=2", geometry(random_frame(2, 2, 7), 16)?)] {
        for k in 0..=3u32 {
            let a = one_operator_reduction(&geom, &sphere, k as usize)?;
            let b = extrinsic_curvature(&geom, &rule, &u(&[k, 0]))?.sigma_m;
            let err = (a - b).abs() / b.abs().max(1.0);
            worst = worst.max(err);
            if err > REDUCTION_TOL {
                return outcome(false, format!("{name} k={k}: {a:.6e} vs {b:.6e}"));
            }
        }
    }
    outcome(true, format!("k ≤ 3 on two q=2 geometries, max difference {worst:.1e}"))
}

// ---- 12: Stokes and Codazzi refinement ----

fn c12() -> Result<Outcome> {
    let ms = [32, 64, 128];
    let rule = haar_rule(Group::SO, 2, 4, None)?;
    let mut st = Vec::new();
    for m in ms {
        st.push(stokes(&geometry(two_angle(), m)?, &rule, &u(&[2, 0]))?.0.abs());
    }
    let mut cz = Vec::new();
    for m in ms {
        cz.push(codazzi(&geometry(random_frame(2, 1, 3), m)?)?.residual);
    }
    outcome(
        orders_ok(&st) && orders_ok(&cz),
        format!(
            "m=32/64/128: Stokes |∫div Ŷ| {:.1e}/{:.1e}/{:.1e} orders {}; Codazzi {:.1e}/{:.1e}/{:.1e} orders {}",
            st[0],
            st[1],
            st[2],
            fmt_orders(&st),
            cz[0],
            cz[1],
            cz[2],
            fmt_orders(&cz)
        ),
    )
}

fn report(n: usize, title: &str, t: Instant, r: Result<Outcome>) -> bool {
    let secs = t.elapsed().as_secs_f64();
    let (pass, detail) = match r {
        Ok(o) => (o.pass, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    println!("{} {n:>2} {title}: {detail} [{secs:.1} s]", if pass { "PASS" } else { "FAIL" });
    pass
}

fn main() {
    let mut results = Vec::new();

    let t = Instant::now();
    match sweep() {
        Ok(s) => {
            results.push(report(1, "three-way σ_u agreement", t, c1(&s)));
            results.push(report(2, "T_u recurrence ≡ explicit sum", t, c2(&s)));
            results.push(report(3, "generalized Cayley–Hamilton", t, c3(&s)));
            results.push(report(4, "GN1–GN3, R-identities, classical ≡ reduced", t, c4(&s)));
        }
        Err(e) => {
            for (n, title) in [(1, "three-way σ_u agreement"), (2, "T_u recurrence"), (3, "Cayley–Hamilton"), (4, "GN2/GN3")] {
                results.push(report(n, title, t, Err(e.clone())));
            }
        }
    }
    results.push(report(5, "σ_u(1,…,1) closed form", Instant::now(), c5()));
    results.push(report(6, "Kronecker contractions", Instant::now(), c6()));
    results.push(report(7, "symmetric vanishing of σ^M_u", Instant::now(), c7()));
    let t = Instant::now();
    match c8_9() {
        Ok((a, b)) => {
            results.push(report(8, "integral formula on T³, p=1, q=2", t, Ok(a)));
            results.push(report(9, "Walczak formula", t, Ok(b)));
        }
        Err(e) => {
            results.push(report(8, "integral formula on T³, p=1, q=2", t, Err(e.clone())));
            results.push(report(9, "Walczak formula", t, Err(e)));
        }
    }
    results.push(report(10, "κ recurrence and closed form", Instant::now(), c10()));
    results.push(report(11, "sphere vs group quadrature", Instant::now(), c11()));
    results.push(report(12, "Stokes and Codazzi O(m⁻²)", Instant::now(), c12()));

    let failed = results.iter().filter(|&&p| !p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
