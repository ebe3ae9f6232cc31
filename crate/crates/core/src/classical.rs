//! Classical even-order Newton operators T_r, T^α_m and the mean curvatures S_r (r even).
//!
//! Component convention: the contraction formulas index entries as
//! (A)_{ij} = g(A f_i, f_j), which is `M[(j, i)]` for the matrix `M` acting
//! on column vectors.  Outputs are stored so that T_1^α = σ_1·1 - A_α.

use num_traits::{One, Zero};

use crate::error::{GntError, Result};
use crate::gnt::{tau_coefficient_from, NewtonFamily};
use crate::invariants::kronecker::{injective_tuples, permutations};
use crate::invariants::{kronecker_delta, newton_polynomial, EndoSystem};
use crate::matrix::Matrix;
use crate::multiindex::{enumerate_level, multinomial, MultiIndex};
use crate::scalar::{Rational, Scalar};

/// Largest r accepted by [`classical_direct`].
pub const CLASSICAL_DIRECT_CAP: usize = 6;

/// C(r/2; u/2) / C(r; u) for u ∈ 2ℕ(q), |u| = r, in exact integers.
pub fn even_weight(r: usize, u: &MultiIndex) -> Result<Rational> {
    if r % 2 == 1 {
        return Err(GntError::Domain(format!("r = {r} is odd")));
    }
    let top = multinomial(r / 2, &u.half()?)?;
    let bottom = multinomial(r, u)?;
    Ok(Rational::new(top.into(), bottom.into()))
}

/// Members of 2ℕ(q) of length r.
pub fn even_indices(q: usize, r: usize) -> Vec<MultiIndex> {
    enumerate_level(q, r).into_iter().filter(MultiIndex::is_even).collect()
}

/// S_r and T_r for even r ≤ r_max, T^α_m for odd m ≤ r_max - 1.
#[derive(Clone, Debug, PartialEq)]
pub struct EvenFamily<S> {
    source: EndoSystem<S>,
    r_max: usize,
    s: Vec<S>,
    t: Vec<Matrix<S>>,
    t_alpha: Vec<Vec<Matrix<S>>>,
}

impl<S: Scalar> EvenFamily<S> {
    pub fn source(&self) -> &EndoSystem<S> {
        &self.source
    }

    pub fn r_max(&self) -> usize {
        self.r_max
    }

    fn even_slot(&self, r: usize) -> Result<usize> {
        if r % 2 == 1 {
            return Err(GntError::Domain(format!("S_r and T_r need even r, got {r}")));
        }
        if r > self.r_max {
            return Err(GntError::Domain(format!("r = {r} beyond r_max = {}", self.r_max)));
        }
        Ok(r / 2)
    }

    pub fn s(&self, r: usize) -> Result<&S> {
        Ok(&self.s[self.even_slot(r)?])
    }

    pub fn t(&self, r: usize) -> Result<&Matrix<S>> {
        Ok(&self.t[self.even_slot(r)?])
    }

    /// T^α_m for odd m.
    pub fn t_alpha(&self, m: usize, axis: usize) -> Result<&Matrix<S>> {
        if m.is_multiple_of(2) || m + 1 > self.r_max {
            return Err(GntError::Domain(format!(
                "T^α_m needs odd m ≤ {}, got {m}",
                self.r_max.saturating_sub(1)
            )));
        }
        Ok(&self.t_alpha[m / 2][axis])
    }
}

fn check_r_max(r_max: usize) -> Result<()> {
    if r_max % 2 == 1 {
        return Err(GntError::Domain(format!("r_max = {r_max} must be even")));
    }
    Ok(())
}

/// Σ_{I,J} δ^{I}_{J} Π_k (A_{f_k})_{i_k j_k}, optionally with a free trailing
/// index pair (i, j) filled into an output matrix.
fn contract<S: Scalar>(sys: &EndoSystem<S>, factors: &[usize], out: Option<(usize, usize)>) -> S {
    let p = sys.p();
    let r = factors.len();
    let mut total = S::zero();
    let len = r + usize::from(out.is_some());
    for top in injective_tuples(p, len) {
        if let Some((i, _)) = out {
            if top[r] != i {
                continue;
            }
        }
        for bottom in permutations(&top) {
            if let Some((_, j)) = out {
                if bottom[r] != j {
                    continue;
                }
            }
            let d = kronecker_delta(&top, &bottom);
            if d == 0 {
                continue;
            }
            let mut prod = S::from_i64(d as i64);
            for (k, &a) in factors.iter().enumerate() {
                prod = prod * sys.matrix(a)[(bottom[k], top[k])].clone();
            }
            total = total + prod;
        }
    }
    total
}

/// All (α_1, …, α_k) ∈ {0..q}^k.
fn axis_tuples(q: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..q).map(move |a| {
                    let mut t = t.clone();
                    t.push(a);
                    t
                })
            })
            .collect();
    }
    out
}

fn paired(alphas: &[usize]) -> Vec<usize> {
    alphas.iter().flat_map(|&a| [a, a]).collect()
}

fn inv_factorial<S: Scalar>(n: usize) -> S {
    let f: i64 = (1..=n as i64).product();
    S::one() / S::from_i64(f)
}

/// The operators straight from their Kronecker-symbol definitions.
pub fn classical_direct<S: Scalar>(sys: &EndoSystem<S>, r_max: usize) -> Result<EvenFamily<S>> {
    check_r_max(r_max)?;
    if r_max > CLASSICAL_DIRECT_CAP {
        return Err(GntError::CapExceeded {
            what: "classical r_max",
            requested: r_max,
            cap: CLASSICAL_DIRECT_CAP,
        });
    }
    let p = sys.p();
    let q = sys.q();
    let mut s = Vec::new();
    let mut t = Vec::new();
    for r in (0..=r_max).step_by(2) {
        let norm = inv_factorial::<S>(r);
        let tuples = axis_tuples(q, r / 2);
        let mut sr = S::zero();
        for al in &tuples {
            sr = sr + contract(sys, &paired(al), None);
        }
        s.push(sr * norm.clone());
        let tr = Matrix::from_fn(p, p, |i, j| {
            let mut acc = S::zero();
            for al in &tuples {
                acc = acc + contract(sys, &paired(al), Some((i, j)));
            }
            acc * norm.clone()
        });
        t.push(tr);
    }
    let mut t_alpha = Vec::new();
    for m in (1..r_max).step_by(2) {
        let norm = inv_factorial::<S>(m);
        let tuples = axis_tuples(q, m / 2);
        let per_axis = (0..q)
            .map(|alpha| {
                Matrix::from_fn(p, p, |i, j| {
                    let mut acc = S::zero();
                    for al in &tuples {
                        let mut f = paired(al);
                        f.push(alpha);
                        acc = acc + contract(sys, &f, Some((i, j)));
                    }
                    acc * norm.clone()
                })
            })
            .collect();
        t_alpha.push(per_axis);
    }
    Ok(EvenFamily {
        source: sys.clone(),
        r_max,
        s,
        t,
        t_alpha,
    })
}

/// The operators as weighted sums of σ_u, T_u and T_{α♭u} over u ∈ 2ℕ(q), |u| = r.
///
/// T^α_{r-1} = Σ_{|u|=r} c_u T_{α♭u}: the degree of T_{α♭u} is r - 1.
pub fn reduce_from_gnt<S: Scalar>(fam: &NewtonFamily<S>, r_max: usize) -> Result<EvenFamily<S>> {
    check_r_max(r_max)?;
    if fam.max_len() < r_max {
        return Err(GntError::Domain(format!(
            "family holds |u| ≤ {}, need {r_max}",
            fam.max_len()
        )));
    }
    let p = fam.p();
    let q = fam.q();
    let mut s = Vec::new();
    let mut t = Vec::new();
    let mut t_alpha = Vec::new();
    for r in (0..=r_max).step_by(2) {
        let mut sr = S::zero();
        let mut tr = Matrix::zeros(p, p);
        let mut ta = vec![Matrix::zeros(p, p); q];
        for u in even_indices(q, r) {
            let c = S::from_rational(&even_weight(r, &u)?);
            sr = sr + c.clone() * fam.sigma(&u).unwrap_or_else(S::zero);
            tr.add_scaled(&c, fam.t(&u).expect("table covers r_max"));
            for (a, m) in ta.iter_mut().enumerate() {
                if let Some(v) = u.try_flat(a) {
                    m.add_scaled(&c, fam.t(&v).expect("table covers r_max"));
                }
            }
        }
        s.push(sr);
        t.push(tr);
        if r >= 2 {
            t_alpha.push(ta);
        }
    }
    Ok(EvenFamily {
        source: fam.source().clone(),
        r_max,
        s,
        t,
        t_alpha,
    })
}

/// Residuals of (R1) and (R2) per even r, and of (R3) per (r, direction).
#[derive(Clone, Debug)]
pub struct RIdentityReport<S> {
    pub r1: Vec<(usize, Matrix<S>)>,
    pub r2: Vec<(usize, S)>,
    pub r3: Vec<(usize, usize, S)>,
}

impl<S: Scalar> RIdentityReport<S> {
    pub fn all_zero(&self) -> bool {
        self.r1.iter().all(|(_, m)| m.is_zero())
            && self.r2.iter().all(|(_, x)| x.is_zero())
            && self.r3.iter().all(|(_, _, x)| x.is_zero())
    }

    pub fn max_abs(&self) -> f64 {
        let a = self.r1.iter().map(|(_, m)| m.max_abs());
        let b = self.r2.iter().map(|(_, x)| x.abs_f64());
        let c = self.r3.iter().map(|(_, _, x)| x.abs_f64());
        a.chain(b).chain(c).fold(0.0, f64::max)
    }
}

/// (R1) T_r = S_r·1 - Σ_α T^α_{r-1} A_α, (R2) tr T_r = (p - r)S_r, and (R3)
/// d/dτ S_r(𝐀 + τ𝐁) = Σ_α tr(B_α T^α_{r-1}) along each given direction.
pub fn check_r_identities<S: Scalar>(
    ev: &EvenFamily<S>,
    directions: &[EndoSystem<S>],
) -> Result<RIdentityReport<S>> {
    let sys = ev.source();
    let p = sys.p();
    let q = sys.q();
    let mut r1 = Vec::new();
    let mut r2 = Vec::new();
    let mut r3 = Vec::new();
    for r in (0..=ev.r_max).step_by(2) {
        let mut rhs = Matrix::scalar(p, ev.s(r)?.clone());
        if r == 0 {
            r1.push((r, ev.t(0)? - &Matrix::identity(p)));
        } else {
            for a in 0..q {
                rhs = &rhs - &(ev.t_alpha(r - 1, a)? * sys.matrix(a));
            }
            r1.push((r, ev.t(r)? - &rhs));
        }
        let coeff = S::from_i64(p as i64 - r as i64);
        r2.push((r, ev.t(r)?.trace() - coeff * ev.s(r)?.clone()));
    }
    for (d, dir) in directions.iter().enumerate() {
        let aug = newton_polynomial(&sys.augmented(dir)?);
        for r in (2..=ev.r_max).step_by(2) {
            let mut lhs = S::zero();
            for u in even_indices(q, r) {
                let c = S::from_rational(&even_weight(r, &u)?);
                lhs = lhs + c * tau_coefficient_from(&aug, &u);
            }
            let mut rhs = S::zero();
            for a in 0..q {
                rhs = rhs + dir.matrix(a).trace_of_product(ev.t_alpha(r - 1, a)?);
            }
            r3.push((r, d, lhs - rhs));
        }
    }
    Ok(RIdentityReport { r1, r2, r3 })
}

/// True when the even weights are all one for r = 2 (u = 2e_α).
pub fn weight_is_one(r: usize, u: &MultiIndex) -> bool {
    even_weight(r, u).map(|w| w.is_one()).unwrap_or(false)
}

/// Zero-check helper for exact report values.
pub fn is_exact_zero(x: &Rational) -> bool {
    x.is_zero()
}
