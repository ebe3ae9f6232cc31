//! Endomorphism systems and their generalized elementary symmetric functions σ_u.

pub(crate) mod kronecker;
mod truncated;

use std::sync::Arc;

use rand::Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};

use crate::error::{GntError, Result};
use crate::matrix::Matrix;
use crate::multiindex::{IndexMatrix, IndexSpace, MultiIndex};
use crate::scalar::{Rational, Scalar};

pub use kronecker::{
    contraction_factor, kronecker_delta, sigma_kronecker, sigma_kronecker_capped, trailing_contraction, KRONECKER_CAP,
};
pub use truncated::TruncatedPoly;

/// An ordered q-tuple 𝐀 = (A_1, …, A_q) of p×p matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct EndoSystem<S> {
    p: usize,
    matrices: Vec<Matrix<S>>,
}

impl<S: Scalar> EndoSystem<S> {
    pub fn new(p: usize, matrices: Vec<Matrix<S>>) -> Result<Self> {
        for (a, m) in matrices.iter().enumerate() {
            if m.rows() != p || m.cols() != p {
                return Err(GntError::Dimension(format!(
                    "A_{} is {}x{}, expected {p}x{p}",
                    a + 1,
                    m.rows(),
                    m.cols()
                )));
            }
        }
        Ok(EndoSystem { p, matrices })
    }

    pub fn zero(p: usize, q: usize) -> Self {
        EndoSystem {
            p,
            matrices: vec![Matrix::zeros(p, p); q],
        }
    }

    /// All q entries equal to the identity.
    pub fn identities(p: usize, q: usize) -> Self {
        EndoSystem {
            p,
            matrices: vec![Matrix::identity(p); q],
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrix(&self, axis: usize) -> &Matrix<S> {
        &self.matrices[axis]
    }

    pub fn matrices(&self) -> &[Matrix<S>] {
        &self.matrices
    }

    /// The word 𝐀^𝐢, factors taken column by column and top to bottom
    /// inside a column: A_1^{i^1_1}⋯A_q^{i^q_1} A_1^{i^1_2}⋯.
    pub fn word(&self, i: &IndexMatrix) -> Matrix<S> {
        assert_eq!(i.q(), self.q());
        let mut acc = Matrix::identity(self.p);
        for l in 0..i.columns() {
            for a in 0..self.q() {
                for _ in 0..i.entry(a, l) {
                    acc = &acc * &self.matrices[a];
                }
            }
        }
        acc
    }

    /// c·𝐀.
    pub fn scale(&self, c: &S) -> Self {
        EndoSystem {
            p: self.p,
            matrices: self.matrices.iter().map(|m| m.scale(c)).collect(),
        }
    }

    /// 𝐀 + τ𝐁.
    pub fn add_scaled(&self, tau: &S, dir: &Self) -> Result<Self> {
        self.check_same_shape(dir)?;
        let mut out = self.clone();
        for (m, d) in out.matrices.iter_mut().zip(&dir.matrices) {
            m.add_scaled(tau, d);
        }
        Ok(out)
    }

    /// U A_α Uᵀ for every α.
    pub fn conjugate(&self, u: &Matrix<S>) -> Self {
        let ut = u.transpose();
        EndoSystem {
            p: self.p,
            matrices: self.matrices.iter().map(|m| &(u * m) * &ut).collect(),
        }
    }

    pub fn transposed(&self) -> Self {
        EndoSystem {
            p: self.p,
            matrices: self.matrices.iter().map(Matrix::transpose).collect(),
        }
    }

    /// The 2q-system (A_1, …, A_q, B_1, …, B_q).
    pub fn augmented(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut matrices = self.matrices.clone();
        matrices.extend(other.matrices.iter().cloned());
        Ok(EndoSystem { p: self.p, matrices })
    }

    pub fn is_symmetric(&self) -> bool {
        self.matrices.iter().all(Matrix::is_symmetric)
    }

    pub fn to_f64(&self) -> EndoSystem<f64> {
        EndoSystem {
            p: self.p,
            matrices: self.matrices.iter().map(Matrix::to_f64).collect(),
        }
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.p != other.p || self.q() != other.q() {
            return Err(GntError::Dimension(format!(
                "systems of shape (p={}, q={}) and (p={}, q={})",
                self.p,
                self.q(),
                other.p,
                other.q()
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let mats: Vec<Value> = self
            .matrices
            .iter()
            .map(|m| {
                Value::Array(
                    (0..m.rows())
                        .map(|i| Value::Array(m.row(i).iter().map(Scalar::to_json).collect()))
                        .collect(),
                )
            })
            .collect();
        json!({"p": self.p, "q": self.q(), "matrices": mats})
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let field = |k: &str| {
            v.get(k)
                .ok_or_else(|| GntError::Parse(format!("system is missing {k:?}")))
        };
        let p = field("p")?
            .as_u64()
            .ok_or_else(|| GntError::Parse("p must be a nonnegative integer".into()))?
            as usize;
        let q = field("q")?
            .as_u64()
            .ok_or_else(|| GntError::Parse("q must be a nonnegative integer".into()))?
            as usize;
        let mats = field("matrices")?
            .as_array()
            .ok_or_else(|| GntError::Parse("matrices must be an array".into()))?;
        if mats.len() != q {
            return Err(GntError::Parse(format!("q = {q} but {} matrices given", mats.len())));
        }
        let mut matrices = Vec::with_capacity(q);
        for m in mats {
            let rows = m
                .as_array()
                .ok_or_else(|| GntError::Parse("matrix must be an array of rows".into()))?;
            let mut parsed = Vec::with_capacity(rows.len());
            for r in rows {
                let r = r
                    .as_array()
                    .ok_or_else(|| GntError::Parse("row must be an array".into()))?;
                parsed.push(r.iter().map(S::from_json).collect::<Result<Vec<_>>>()?);
            }
            matrices.push(Matrix::from_rows(parsed)?);
        }
        EndoSystem::new(p, matrices)
    }
}

impl<S: Scalar> Serialize for EndoSystem<S> {
    fn serialize<Z: Serializer>(&self, s: Z) -> std::result::Result<Z::Ok, Z::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de, S: Scalar> Deserialize<'de> for EndoSystem<S> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        EndoSystem::from_json(&v).map_err(D::Error::custom)
    }
}

/// Random integer system with entries drawn uniformly from `-bound..=bound`.
pub fn random_integer_system<R: Rng + ?Sized>(
    rng: &mut R,
    p: usize,
    q: usize,
    bound: i64,
) -> EndoSystem<Rational> {
    let matrices = (0..q)
        .map(|_| Matrix::from_fn(p, p, |_, _| Rational::from_i64(rng.random_range(-bound..=bound))))
        .collect();
    EndoSystem { p, matrices }
}

/// Random symmetric integer system.
pub fn random_symmetric_system<R: Rng + ?Sized>(
    rng: &mut R,
    p: usize,
    q: usize,
    bound: i64,
) -> EndoSystem<Rational> {
    let raw = random_integer_system(rng, p, q, bound);
    let matrices = raw
        .matrices
        .iter()
        .map(|m| &m.transpose() + m)
        .collect();
    EndoSystem { p, matrices }
}

/// σ_u for all |u| ≤ p, aligned with a shared [`IndexSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaTable<S> {
    p: usize,
    space: Arc<IndexSpace>,
    values: Vec<S>,
}

impl<S: Scalar> SigmaTable<S> {
    pub(crate) fn from_parts(p: usize, space: Arc<IndexSpace>, values: Vec<S>) -> Self {
        assert_eq!(space.len(), values.len());
        SigmaTable { p, space, values }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.space.q()
    }

    pub fn space(&self) -> &Arc<IndexSpace> {
        &self.space
    }

    /// σ_u, zero whenever |u| > p.
    pub fn get(&self, u: &MultiIndex) -> S {
        assert_eq!(u.q(), self.q(), "multi-index of the wrong q");
        match self.space.position(u) {
            Some(i) => self.values[i].clone(),
            None => S::zero(),
        }
    }

    /// Value by dense position in [`SigmaTable::space`].
    pub fn at(&self, i: usize) -> &S {
        &self.values[i]
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &S)> {
        self.space.indices().iter().zip(&self.values)
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.iter()
                .map(|(u, s)| json!({"u": u, "sigma": s.to_json()}))
                .collect(),
        )
    }
}

impl<S: Scalar> Serialize for SigmaTable<S> {
    fn serialize<Z: Serializer>(&self, s: Z) -> std::result::Result<Z::Ok, Z::Error> {
        self.to_json().serialize(s)
    }
}

/// Coefficients of det(1 + t_1A_1 + ⋯ + t_qA_q), truncated at total degree p.
pub fn newton_polynomial<S: Scalar>(sys: &EndoSystem<S>) -> SigmaTable<S> {
    let space = Arc::new(IndexSpace::new(sys.q(), sys.p()));
    let poly = TruncatedPoly::determinant_of_pencil(sys, space.clone());
    SigmaTable::from_parts(sys.p(), space, poly.into_coefficients())
}
