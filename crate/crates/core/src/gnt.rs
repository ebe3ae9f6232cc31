//! The generalized Newton transformation T_u of a system 𝐀.

use std::sync::Arc;

use serde_json::{json, Value};

use crate::error::{GntError, Result};
use crate::invariants::{newton_polynomial, EndoSystem, SigmaTable};
use crate::matrix::Matrix;
use crate::multiindex::{enumerate_i_capped, IndexSpace, MultiIndex, DEFAULT_ENUMERATION_CAP};
use crate::scalar::Scalar;

/// Frobenius inner product ⟪A, B⟫ = tr(AᵀB).
pub fn frobenius_inner<S: Scalar>(a: &Matrix<S>, b: &Matrix<S>) -> S {
    a.frobenius(b)
}

enum SigmaSource<S> {
    Given(Vec<S>),
    Gn1,
}

/// The table u ↦ (σ_u, T_u) for |u| ≤ max_len.
///
/// `max_len` may exceed p; there σ_u = 0 and the recurrence still applies.
#[derive(Clone, Debug)]
pub struct NewtonFamily<S> {
    sys: EndoSystem<S>,
    space: Arc<IndexSpace>,
    sigma: Vec<S>,
    t: Vec<Matrix<S>>,
}

impl<S: Scalar> NewtonFamily<S> {
    /// Recurrence T_u = σ_u·1 - Σ_α A_α T_{α♭u} with σ from the Newton polynomial.
    pub fn recurrence(sys: &EndoSystem<S>, max_len: usize) -> Self {
        let table = newton_polynomial(sys);
        Self::with_sigma(sys, &table, max_len)
    }

    /// Same recurrence on a precomputed σ table.
    pub fn with_sigma(sys: &EndoSystem<S>, sigma: &SigmaTable<S>, max_len: usize) -> Self {
        let space = Arc::new(IndexSpace::new(sys.q(), max_len));
        let given = space.indices().iter().map(|u| sigma.get(u)).collect();
        Self::fill(sys, space, SigmaSource::Given(given))
    }

    /// σ_u from GN1, |u|σ_u = Σ_α tr(A_α T_{α♭u}), interleaved with the
    /// recurrence.  Needs no determinant and is the float fast path.
    pub fn gn1(sys: &EndoSystem<S>, max_len: usize) -> Self {
        let space = Arc::new(IndexSpace::new(sys.q(), max_len));
        Self::fill(sys, space, SigmaSource::Gn1)
    }

    /// Like [`NewtonFamily::gn1`] but reusing an index space.
    pub fn gn1_in(sys: &EndoSystem<S>, space: &Arc<IndexSpace>) -> Self {
        assert_eq!(space.q(), sys.q());
        Self::fill(sys, space.clone(), SigmaSource::Gn1)
    }

    fn fill(sys: &EndoSystem<S>, space: Arc<IndexSpace>, source: SigmaSource<S>) -> Self {
        let p = sys.p();
        let n = space.len();
        let mut sigma: Vec<S> = Vec::with_capacity(n);
        let mut t: Vec<Matrix<S>> = Vec::with_capacity(n);
        for i in 0..n {
            let len = space.index(i).length();
            let s = if i == 0 {
                S::one()
            } else if len > p {
                S::zero()
            } else {
                match &source {
                    SigmaSource::Given(v) => v[i].clone(),
                    SigmaSource::Gn1 => {
                        let mut acc = S::zero();
                        for a in 0..sys.q() {
                            if let Some(j) = space.flat_of(i, a) {
                                acc = acc + sys.matrix(a).trace_of_product(&t[j]);
                            }
                        }
                        acc / S::from_i64(len as i64)
                    }
                }
            };
            let mut m = Matrix::scalar(p, s.clone());
            for a in 0..sys.q() {
                if let Some(j) = space.flat_of(i, a) {
                    m = &m - &(sys.matrix(a) * &t[j]);
                }
            }
            sigma.push(s);
            t.push(m);
        }
        NewtonFamily {
            sys: sys.clone(),
            space,
            sigma,
            t,
        }
    }

    pub fn source(&self) -> &EndoSystem<S> {
        &self.sys
    }

    pub fn space(&self) -> &Arc<IndexSpace> {
        &self.space
    }

    pub fn max_len(&self) -> usize {
        self.space.max_len()
    }

    pub fn p(&self) -> usize {
        self.sys.p()
    }

    pub fn q(&self) -> usize {
        self.sys.q()
    }

    /// σ_u; zero beyond p, `None` when |u| ≤ p lies outside the table.
    pub fn sigma(&self, u: &MultiIndex) -> Option<S> {
        if u.length() > self.p() {
            return Some(S::zero());
        }
        self.space.position(u).map(|i| self.sigma[i].clone())
    }

    pub fn sigma_at(&self, i: usize) -> &S {
        &self.sigma[i]
    }

    pub fn t(&self, u: &MultiIndex) -> Option<&Matrix<S>> {
        self.space.position(u).map(|i| &self.t[i])
    }

    pub fn t_at(&self, i: usize) -> &Matrix<S> {
        &self.t[i]
    }

    pub fn sigma_table(&self) -> SigmaTable<S> {
        let space = Arc::new(IndexSpace::new(self.q(), self.p()));
        let values = space
            .indices()
            .iter()
            .map(|u| self.sigma(u).unwrap_or_else(S::zero))
            .collect();
        SigmaTable::from_parts(self.p(), space, values)
    }

    fn t_or_err(&self, u: &MultiIndex) -> Result<&Matrix<S>> {
        self.t(u).ok_or_else(|| {
            GntError::Domain(format!(
                "T_{u:?} is outside the table (max_len = {})",
                self.max_len()
            ))
        })
    }

    fn sigma_or_err(&self, u: &MultiIndex) -> Result<S> {
        self.sigma(u).ok_or_else(|| {
            GntError::Domain(format!(
                "σ_{u:?} is outside the table (max_len = {})",
                self.max_len()
            ))
        })
    }

    pub fn to_json(&self) -> Value {
        let entries: Vec<Value> = self
            .space
            .indices()
            .iter()
            .enumerate()
            .map(|(i, u)| {
                let rows: Vec<Value> = (0..self.p())
                    .map(|r| Value::Array(self.t[i].row(r).iter().map(Scalar::to_json).collect()))
                    .collect();
                json!({"u": u, "sigma": self.sigma[i].to_json(), "T": rows})
            })
            .collect();
        json!({
            "system": self.sys.to_json(),
            "max_len": self.max_len(),
            "family": entries,
        })
    }
}

/// T_u - (σ_u·1 - Σ_α T_{α♭u} A_α): the right-multiplied recurrence.
pub fn right_recurrence_residual<S: Scalar>(
    fam: &NewtonFamily<S>,
    u: &MultiIndex,
) -> Result<Matrix<S>> {
    let mut m = Matrix::scalar(fam.p(), fam.sigma_or_err(u)?);
    for a in 0..fam.q() {
        if let Some(v) = u.try_flat(a) {
            m = &m - &(fam.t_or_err(&v)? * fam.sys.matrix(a));
        }
    }
    Ok(fam.t_or_err(u)? - &m)
}

/// T_u from the explicit sum over 𝕀(q,s), s ≤ |u|, with the default cap.
pub fn newton_family_explicit<S: Scalar>(sys: &EndoSystem<S>, u: &MultiIndex) -> Result<Matrix<S>> {
    let sigma = newton_polynomial(sys);
    newton_family_explicit_with(sys, &sigma, u, DEFAULT_ENUMERATION_CAP)
}

/// T_u = Σ_s Σ_{𝐢∈𝕀(q,s)} (-1)^{‖𝐢‖} σ_{u-|𝐢|} 𝐀^𝐢, σ with a negative entry being 0.
pub fn newton_family_explicit_with<S: Scalar>(
    sys: &EndoSystem<S>,
    sigma: &SigmaTable<S>,
    u: &MultiIndex,
    cap: usize,
) -> Result<Matrix<S>> {
    if u.q() != sys.q() {
        return Err(GntError::Dimension(format!("{u:?} for a system with q = {}", sys.q())));
    }
    let mut total = Matrix::zeros(sys.p(), sys.p());
    for s in 0..=u.length() {
        let sign = if s % 2 == 0 { S::one() } else { -S::one() };
        for i in enumerate_i_capped(sys.q(), s, cap)? {
            let Some(rest) = u.checked_sub(&i.weight()) else {
                continue;
            };
            let c = sigma.get(&rest);
            if c.is_zero() {
                continue;
            }
            total.add_scaled(&(sign.clone() * c), &sys.word(&i));
        }
    }
    Ok(total)
}

/// |u|σ_u - Σ_α tr(A_α T_{α♭u}).
pub fn check_gn1<S: Scalar>(fam: &NewtonFamily<S>, u: &MultiIndex) -> Result<S> {
    let mut rhs = S::zero();
    for a in 0..fam.q() {
        if let Some(v) = u.try_flat(a) {
            rhs = rhs + fam.sys.matrix(a).trace_of_product(fam.t_or_err(&v)?);
        }
    }
    Ok(S::from_i64(u.length() as i64) * fam.sigma_or_err(u)? - rhs)
}

/// tr T_u - (p - |u|)σ_u.
pub fn check_gn2<S: Scalar>(fam: &NewtonFamily<S>, u: &MultiIndex) -> Result<S> {
    let coeff = S::from_i64(fam.p() as i64 - u.length() as i64);
    Ok(fam.t_or_err(u)?.trace() - coeff * fam.sigma_or_err(u)?)
}

/// Σ_{α,β} tr(A_α A_β T_{β♭α♭u}) - (-|u|σ_u + Σ_α tr(A_α) σ_{α♭u}).
pub fn check_gn3<S: Scalar>(fam: &NewtonFamily<S>, u: &MultiIndex) -> Result<S> {
    let q = fam.q();
    let mut lhs = S::zero();
    for a in 0..q {
        let Some(v) = u.try_flat(a) else { continue };
        for b in 0..q {
            let Some(w) = v.try_flat(b) else { continue };
            let ab = fam.sys.matrix(a) * fam.sys.matrix(b);
            lhs = lhs + ab.trace_of_product(fam.t_or_err(&w)?);
        }
    }
    let mut rhs = -(S::from_i64(u.length() as i64) * fam.sigma_or_err(u)?);
    for a in 0..q {
        if let Some(v) = u.try_flat(a) {
            rhs = rhs + fam.sys.matrix(a).trace() * fam.sigma_or_err(&v)?;
        }
    }
    Ok(lhs - rhs)
}

/// T_u for |u| ≥ p, which the generalized Cayley–Hamilton theorem says is zero.
pub fn check_cayley_hamilton<S: Scalar>(sys: &EndoSystem<S>, u: &MultiIndex) -> Result<Matrix<S>> {
    if u.length() < sys.p() {
        return Err(GntError::Domain(format!(
            "|{u:?}| = {} is below p = {}",
            u.length(),
            sys.p()
        )));
    }
    let fam = NewtonFamily::recurrence(sys, u.length());
    Ok(fam.t_or_err(u)?.clone())
}

/// Outcome of [`check_self_adjoint`].
#[derive(Clone, Debug, PartialEq)]
pub struct SelfAdjointReport {
    pub all_symmetric: bool,
    /// First u (graded-lex) with non-symmetric T_u.
    pub witness: Option<MultiIndex>,
}

pub fn check_self_adjoint<S: Scalar>(fam: &NewtonFamily<S>) -> SelfAdjointReport {
    let witness = (0..fam.space.len())
        .find(|&i| !fam.t[i].is_symmetric())
        .map(|i| fam.space.index(i).clone());
    SelfAdjointReport {
        all_symmetric: witness.is_none(),
        witness,
    }
}

/// d/dτ σ_u(𝐀 + τ𝐁) at τ = 0, read off exactly as the τ-linear coefficient.
///
/// det(1 + Σ t_α(A_α + τB_α)) is the Newton polynomial of the 2q-system
/// (𝐀, 𝐁) at (t, τt), so the coefficient is Σ_β σ_{(β♭u, e_β)}.
pub fn tau_coefficient<S: Scalar>(
    sys: &EndoSystem<S>,
    dir: &EndoSystem<S>,
    u: &MultiIndex,
) -> Result<S> {
    let aug = newton_polynomial(&sys.augmented(dir)?);
    Ok(tau_coefficient_from(&aug, u))
}

/// Same as [`tau_coefficient`] given the augmented σ table.
pub fn tau_coefficient_from<S: Scalar>(aug: &SigmaTable<S>, u: &MultiIndex) -> S {
    let q = u.q();
    let mut acc = S::zero();
    for b in 0..q {
        if let Some(v) = u.try_flat(b) {
            acc = acc + aug.get(&v.concat(&MultiIndex::unit(q, b)));
        }
    }
    acc
}

/// Σ_α tr(B_α T_{α♭u}).
pub fn variational_prediction<S: Scalar>(
    fam: &NewtonFamily<S>,
    dir: &EndoSystem<S>,
    u: &MultiIndex,
) -> Result<S> {
    let mut acc = S::zero();
    for a in 0..fam.q() {
        if let Some(v) = u.try_flat(a) {
            acc = acc + dir.matrix(a).trace_of_product(fam.t_or_err(&v)?);
        }
    }
    Ok(acc)
}

/// Exact variational residual: τ-coefficient minus Σ_α tr(B_α T_{α♭u}).
pub fn check_variational<S: Scalar>(
    sys: &EndoSystem<S>,
    dir: &EndoSystem<S>,
    u: &MultiIndex,
) -> Result<S> {
    let fam = NewtonFamily::recurrence(sys, u.length().saturating_sub(1));
    Ok(tau_coefficient(sys, dir, u)? - variational_prediction(&fam, dir, u)?)
}

/// Float variational check by central differences with one Richardson step.
#[derive(Clone, Copy, Debug)]
pub struct VariationalFloat {
    pub derivative: f64,
    pub predicted: f64,
    pub residual: f64,
}

/// Default finite-difference step for [`check_variational_float`].
pub const VARIATIONAL_STEP: f64 = 1e-5;

pub fn check_variational_float(
    sys: &EndoSystem<f64>,
    dir: &EndoSystem<f64>,
    u: &MultiIndex,
    h: f64,
) -> Result<VariationalFloat> {
    let sigma_at = |tau: f64| -> Result<f64> {
        let moved = sys.add_scaled(&tau, dir)?;
        Ok(NewtonFamily::gn1(&moved, u.length())
            .sigma(u)
            .unwrap_or(0.0))
    };
    let central = |h: f64| -> Result<f64> { Ok((sigma_at(h)? - sigma_at(-h)?) / (2.0 * h)) };
    let d1 = central(h)?;
    let d2 = central(h / 2.0)?;
    let derivative = (4.0 * d2 - d1) / 3.0;
    let fam = NewtonFamily::gn1(sys, u.length().saturating_sub(1));
    let predicted = variational_prediction(&fam, dir, u)?;
    Ok(VariationalFloat {
        derivative,
        predicted,
        residual: (derivative - predicted).abs(),
    })
}

/// A direction exposing a table that violates the variational property.
#[derive(Clone, Debug, PartialEq)]
pub struct UniquenessWitness<S> {
    /// The index u' = α♯v whose derivative is tested.
    pub u: MultiIndex,
    pub axis: usize,
    /// Elementary direction E_{ij} placed in slot `axis`.
    pub entry: (usize, usize),
    pub residual: S,
}

/// Tests a candidate table (aligned with `space`) against the variational
/// property along every elementary direction E_{ij} in every slot.
///
/// Returns the first nonzero residual, or `None` when the candidate passes
/// everywhere, in which case it must equal the recurrence table.
pub fn uniqueness_witness<S: Scalar>(
    sys: &EndoSystem<S>,
    space: &IndexSpace,
    candidate: &[Matrix<S>],
) -> Result<Option<UniquenessWitness<S>>> {
    assert_eq!(space.len(), candidate.len());
    let p = sys.p();
    let q = sys.q();
    for axis in 0..q {
        for i in 0..p {
            for j in 0..p {
                let mut dir = EndoSystem::zero(p, q);
                let mut e = Matrix::zeros(p, p);
                e[(i, j)] = S::one();
                let mut mats = dir.matrices().to_vec();
                mats[axis] = e;
                dir = EndoSystem::new(p, mats)?;
                let aug = newton_polynomial(&sys.augmented(&dir)?);
                for (k, v) in space.indices().iter().enumerate() {
                    let up = v.sharp(axis);
                    let lhs = tau_coefficient_from(&aug, &up);
                    // only slot `axis` of the direction is nonzero
                    let rhs = candidate[k][(j, i)].clone();
                    let r = lhs - rhs;
                    if !r.is_zero() {
                        return Ok(Some(UniquenessWitness {
                            u: up,
                            axis,
                            entry: (i, j),
                            residual: r,
                        }));
                    }
                }
            }
        }
    }
    Ok(None)
}
