//! Exact identity suite for one endomorphism system over the rationals.

use num_traits::Zero;
use serde::Serialize;

use crate::classical::{check_r_identities, classical_direct, reduce_from_gnt, CLASSICAL_DIRECT_CAP};
use crate::error::{GntError, Result};
use crate::gnt::{check_cayley_hamilton, check_gn1, check_gn2, check_gn3, newton_family_explicit_with, NewtonFamily};
use crate::invariants::kronecker::sigma_kronecker;
use crate::invariants::{newton_polynomial, EndoSystem};
use crate::multiindex::{enumerate_level, enumerate_up_to, MultiIndex};
use crate::scalar::{Rational, Scalar};

/// Longest u for which T_u is compared with the explicit word sum.
pub const EXPLICIT_MAX_LEN: usize = 4;

/// Largest p accepted: the Kronecker oracle grows like (p!)².
pub const SUITE_P_CAP: usize = 6;

/// Largest even r for the classical comparison.
pub const CLASSICAL_MAX_R: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub pass: bool,
    /// Largest |residual| seen; 0 when exact.
    pub max_abs: f64,
    /// Number of individual comparisons made.
    pub count: usize,
    /// First failing index, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<u32>>,
}

struct Acc {
    check: IdentityCheck,
}

impl Acc {
    fn new(name: &'static str) -> Self {
        Acc {
            check: IdentityCheck {
                name,
                pass: true,
                max_abs: 0.0,
                count: 0,
                witness: None,
            },
        }
    }

    fn record(&mut self, zero: bool, abs: f64, u: &MultiIndex) {
        let c = &mut self.check;
        c.count += 1;
        c.max_abs = c.max_abs.max(abs);
        if !zero && c.pass {
            c.pass = false;
            c.witness = Some(u.entries().to_vec());
        }
    }
}

/// Runs the exact identities on `sys`:
/// σ by determinant ≡ Kronecker oracle ≡ GN1 recurrence (|u| ≤ p),
/// T_u recurrence ≡ explicit sum (|u| ≤ min(4, p + 1)),
/// GN1–GN3 (|u| ≤ p + 1), Cayley–Hamilton (|u| ∈ {p, p + 1}),
/// and optionally the classical operators for r ≤ 4.
pub fn verify_system(sys: &EndoSystem<Rational>, classical: bool) -> Result<Vec<IdentityCheck>> {
    let (p, q) = (sys.p(), sys.q());
    if p > SUITE_P_CAP {
        return Err(GntError::CapExceeded {
            what: "identity suite dimension p",
            requested: p,
            cap: SUITE_P_CAP,
        });
    }
    let det = newton_polynomial(sys);
    let fam = NewtonFamily::with_sigma(sys, &det, p + 1);
    let fast = NewtonFamily::gn1(sys, p + 1);

    let mut sigma = Acc::new("sigma_three_way");
    for u in enumerate_up_to(q, p) {
        let a = det.get(&u);
        let b: Rational = sigma_kronecker(sys, &u.to_axes())?;
        let c = fast.sigma(&u).expect("in range");
        let worst = (a.clone() - b.clone()).abs_f64().max((a.clone() - c.clone()).abs_f64());
        sigma.record(a == b && a == c, worst, &u);
    }

    let mut explicit = Acc::new("t_explicit");
    for u in enumerate_up_to(q, EXPLICIT_MAX_LEN.min(p + 1)) {
        let e = newton_family_explicit_with(sys, &det, &u, crate::multiindex::DEFAULT_ENUMERATION_CAP)?;
        let t = fam.t(&u).expect("in range");
        let d = t - &e;
        explicit.record(d.is_zero(), d.max_abs(), &u);
        let g = fast.t(&u).expect("in range");
        let d = g - t;
        explicit.record(d.is_zero(), d.max_abs(), &u);
    }

    let mut gn = [Acc::new("gn1"), Acc::new("gn2"), Acc::new("gn3")];
    for u in enumerate_up_to(q, p + 1) {
        if u.is_zero() {
            continue;
        }
        for (acc, res) in gn.iter_mut().zip([check_gn1(&fam, &u)?, check_gn2(&fam, &u)?, check_gn3(&fam, &u)?]) {
            acc.record(res.is_zero(), res.abs_f64(), &u);
        }
    }

    let mut ch = Acc::new("cayley_hamilton");
    for len in [p, p + 1] {
        for u in enumerate_level(q, len) {
            let t = check_cayley_hamilton(sys, &u)?;
            ch.record(t.is_zero(), t.max_abs(), &u);
        }
    }

    let mut out: Vec<IdentityCheck> = vec![sigma.check, explicit.check];
    out.extend(gn.into_iter().map(|a| a.check));
    out.push(ch.check);

    if classical {
        let r_max = CLASSICAL_MAX_R.min(CLASSICAL_DIRECT_CAP);
        let direct = classical_direct(sys, r_max)?;
        let reduced = reduce_from_gnt(&NewtonFamily::with_sigma(sys, &det, r_max), r_max)?;
        let mut cmp = Acc::new("classical_direct_vs_gnt");
        for r in (0..=r_max).step_by(2) {
            let tag = MultiIndex::new(vec![r as u32]);
            let ds = direct.s(r)?.clone() - reduced.s(r)?.clone();
            cmp.record(ds.is_zero(), ds.abs_f64(), &tag);
            let dt = direct.t(r)? - reduced.t(r)?;
            cmp.record(dt.is_zero(), dt.max_abs(), &tag);
        }
        let mut rid = Acc::new("r_identities");
        for ev in [&direct, &reduced] {
            let rep = check_r_identities(ev, &[])?;
            for (r, m) in &rep.r1 {
                rid.record(m.is_zero(), m.max_abs(), &MultiIndex::new(vec![*r as u32]));
            }
            for (r, x) in &rep.r2 {
                rid.record(x.is_zero(), x.abs_f64(), &MultiIndex::new(vec![*r as u32]));
            }
        }
        out.push(cmp.check);
        out.push(rid.check);
    }
    Ok(out)
}
