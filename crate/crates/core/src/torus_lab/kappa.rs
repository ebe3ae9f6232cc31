//! Total extrinsic curvatures for a distribution with totally geodesic,
//! integrable normal bundle in a space form of curvature κ, as exact
//! rational multiples of κ^{|u|/2}·vol(M).
//!
//! Recurrence: |u|σ^M_u = κ(p − |u| + 2) Σ_α σ^M_{α♭²u}, seeded by
//! σ^M_0 = vol and σ^M_{α♯0} = 0.  The Haar measure on the fiber is
//! normalized, so vol(P) = vol(M).
//!
//! For |u| > p the invariant σ_u vanishes identically, so the recurrence
//! at |u| = p + 1 becomes a constraint on the seed.  For p odd it forces
//! vol·κ = 0: no such distribution exists with κ ≠ 0, and every total
//! curvature is zero.  That is how the parity branch of the closed form
//! arises.

use num_traits::{One, Zero};
use serde::Serialize;
use std::collections::HashMap;

use crate::classical::{even_indices, even_weight};
use crate::error::{GntError, Result};
use crate::multiindex::{binomial, enumerate_level, MultiIndex};
use crate::scalar::Rational;

/// coef · κ^power · vol(M).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KappaTerm {
    #[serde(serialize_with = "ser_rational")]
    pub coef: Rational,
    pub power: u32,
}

fn ser_rational<S: serde::Serializer>(r: &Rational, ser: S) -> std::result::Result<S::Ok, S::Error> {
    ser.serialize_str(&r.to_string())
}

impl std::fmt::Display for KappaTerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.power {
            0 => write!(f, "{}·vol", self.coef),
            1 => write!(f, "{}·κ·vol", self.coef),
            k => write!(f, "{}·κ^{k}·vol", self.coef),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Branch {
    /// p even, q odd.
    EvenOdd,
    /// p and q even.
    EvenEven,
    /// p odd.
    Vanishing,
}

#[derive(Clone, Debug, Serialize)]
pub struct KappaRow {
    pub r: usize,
    /// ∫S_r from the σ^M table, seed constraint applied.
    pub recurrence: KappaTerm,
    /// The closed form for this branch.
    pub closed_form: KappaTerm,
    /// The both-even branch exactly as usually printed,
    /// 2^r ((r/2)!)^{-1} C(q/2 + r/2 − 1, r/2) C(p/2, r/2); None on other branches.
    pub printed_even_even: Option<KappaTerm>,
    /// S_r/S_{r−2} from the unconstrained table (r ≥ 2).
    #[serde(serialize_with = "ser_opt_rational")]
    pub ratio: Option<Rational>,
    /// (p − r + 2)(q + r − 2)/((r − 1) r).
    #[serde(serialize_with = "ser_opt_rational")]
    pub expected_ratio: Option<Rational>,
}

fn ser_opt_rational<S: serde::Serializer>(r: &Option<Rational>, ser: S) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(r) => ser.serialize_some(&r.to_string()),
        None => ser.serialize_none(),
    }
}

impl KappaRow {
    pub fn ratio_ok(&self) -> bool {
        self.ratio == self.expected_ratio
    }

    pub fn closed_ok(&self) -> bool {
        self.recurrence == self.closed_form
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct KappaReport {
    pub p: usize,
    pub q: usize,
    pub branch: Branch,
    /// The |u| = p + 1 constraint forced σ^M_0 = 0.
    pub seed_forced_zero: bool,
    pub rows: Vec<KappaRow>,
}

impl KappaReport {
    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(|r| r.ratio_ok() && r.closed_ok())
    }

    pub fn row(&self, r: usize) -> Option<&KappaRow> {
        self.rows.iter().find(|x| x.r == r)
    }
}

pub fn branch(p: usize, q: usize) -> Branch {
    match (p % 2, q % 2) {
        (0, 1) => Branch::EvenOdd,
        (0, 0) => Branch::EvenEven,
        _ => Branch::Vanishing,
    }
}

fn int(n: impl Into<num_bigint::BigInt>) -> Rational {
    Rational::from_integer(n.into())
}

/// Coefficients c_u with σ^M_u = c_u κ^{|u|/2} vol for seed 1, |u| ≤ p,
/// and whether the |u| ∈ {p+1, p+2} constraints hold for that seed.
pub fn sigma_table(p: usize, q: usize) -> Result<(HashMap<MultiIndex, Rational>, bool)> {
    if p == 0 || q == 0 {
        return Err(GntError::Dimension(format!("need p, q ≥ 1, got p = {p}, q = {q}")));
    }
    let mut c: HashMap<MultiIndex, Rational> = HashMap::new();
    let mut consistent = true;
    for len in 0..=p + 2 {
        for u in enumerate_level(q, len) {
            let rhs = if len == 0 {
                Rational::one()
            } else if len < 2 {
                Rational::zero()
            } else {
                let sum: Rational = (0..q)
                    .filter_map(|a| u.try_flat(a).and_then(|v| v.try_flat(a)))
                    .map(|v| c.get(&v).cloned().unwrap_or_else(Rational::zero))
                    .sum();
                int(p as i64 + 2 - len as i64) * sum
            };
            if len <= p {
                let v = if len == 0 { rhs } else { rhs / int(len as i64) };
                c.insert(u, v);
            } else if !rhs.is_zero() {
                // σ_u ≡ 0 here, so the right side must vanish too
                consistent = false;
            }
        }
    }
    Ok((c, consistent))
}

/// ∫S_r / (κ^{r/2} vol) from the closed form, both-even branch in the form
/// the recurrence produces: 2^r C(p/2, r/2) C(q/2 + r/2 − 1, r/2) / C(r, r/2).
pub fn closed_form(p: usize, q: usize, r: usize) -> Result<KappaTerm> {
    check_r(p, r)?;
    let (h, hp) = (r / 2, p / 2);
    let coef = match branch(p, q) {
        Branch::EvenOdd => {
            int(binomial(hp, h)) * int(binomial(q + r - 1, r)) / int(binomial((q + r - 1) / 2, h))
        }
        Branch::EvenEven => {
            int(num_bigint::BigInt::from(1u32) << r) * int(binomial(hp, h)) * int(binomial(q / 2 + h - 1, h))
                / int(binomial(r, h))
        }
        Branch::Vanishing => Rational::zero(),
    };
    Ok(KappaTerm { coef, power: h as u32 })
}

/// The both-even entry as usually printed: 2^r ((r/2)!)^{-1} C(q/2 + r/2 − 1, r/2) C(p/2, r/2).
pub fn printed_even_even(p: usize, q: usize, r: usize) -> Result<KappaTerm> {
    check_r(p, r)?;
    let h = r / 2;
    let coef = int(num_bigint::BigInt::from(1u32) << r) * int(binomial(q / 2 + h - 1, h)) * int(binomial(p / 2, h))
        / int(crate::multiindex::factorial(h));
    Ok(KappaTerm { coef, power: h as u32 })
}

fn check_r(p: usize, r: usize) -> Result<()> {
    if r % 2 == 1 || r > p {
        return Err(GntError::Domain(format!("r = {r} must be even and ≤ p = {p}")));
    }
    Ok(())
}

fn s_from(c: &HashMap<MultiIndex, Rational>, q: usize, r: usize) -> Result<Rational> {
    let mut s = Rational::zero();
    for u in even_indices(q, r) {
        s += even_weight(r, &u)? * c.get(&u).cloned().unwrap_or_else(Rational::zero);
    }
    Ok(s)
}

/// Full table for all even r ≤ p.
pub fn kappa_table(p: usize, q: usize) -> Result<KappaReport> {
    let (c, consistent) = sigma_table(p, q)?;
    let seed = if consistent { Rational::one() } else { Rational::zero() };
    let br = branch(p, q);
    let mut rows = Vec::new();
    let mut prev: Option<Rational> = None;
    for r in (0..=p).step_by(2) {
        let s = s_from(&c, q, r)?;
        let (ratio, expected_ratio) = match &prev {
            Some(prev) if r >= 2 => (
                Some(&s / prev),
                Some(int((p + 2 - r) as i64) * int((q + r - 2) as i64) / int(((r - 1) * r) as i64)),
            ),
            _ => (None, None),
        };
        rows.push(KappaRow {
            r,
            recurrence: KappaTerm {
                coef: &s * &seed,
                power: (r / 2) as u32,
            },
            closed_form: closed_form(p, q, r)?,
            printed_even_even: (br == Branch::EvenEven).then(|| printed_even_even(p, q, r)).transpose()?,
            ratio,
            expected_ratio,
        });
        prev = Some(s);
    }
    Ok(KappaReport {
        p,
        q,
        branch: br,
        seed_forced_zero: !consistent,
        rows,
    })
}

/// The identity report restricted to one even r ≤ p.
pub fn kappa_recurrence(p: usize, q: usize, r: usize) -> Result<(KappaReport, KappaRow)> {
    check_r(p, r)?;
    let rep = kappa_table(p, q)?;
    let row = rep.row(r).cloned().expect("row present for even r ≤ p");
    Ok((rep, row))
}
