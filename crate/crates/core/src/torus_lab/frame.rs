//! Periodic orthonormal frame fields on the flat torus [0,1)^n.
//!
//! A field is a product of Givens rotations whose angles are trigonometric
//! polynomials, applied to a constant base frame.  Columns 0..p span D and
//! columns p..n span D⊥.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GntError, Result};
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wave {
    Sin,
    Cos,
}

/// c · sin(2π k·x) or c · cos(2π k·x).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub coeff: f64,
    pub k: Vec<i32>,
    pub wave: Wave,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrigPoly {
    pub terms: Vec<TrigTerm>,
}

impl TrigPoly {
    pub fn single(coeff: f64, k: Vec<i32>, wave: Wave) -> Self {
        TrigPoly {
            terms: vec![TrigTerm { coeff, k, wave }],
        }
    }

    fn phase(k: &[i32], x: &[f64]) -> f64 {
        TAU * k.iter().zip(x).map(|(&k, &x)| k as f64 * x).sum::<f64>()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let ph = Self::phase(&t.k, x);
                t.coeff
                    * match t.wave {
                        Wave::Sin => ph.sin(),
                        Wave::Cos => ph.cos(),
                    }
            })
            .sum()
    }

    /// ∂_μ of the polynomial.
    pub fn derivative(&self, x: &[f64], mu: usize) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let ph = Self::phase(&t.k, x);
                let dk = TAU * t.k[mu] as f64 * t.coeff;
                match t.wave {
                    Wave::Sin => dk * ph.cos(),
                    Wave::Cos => -dk * ph.sin(),
                }
            })
            .sum()
    }

    /// Largest |k_μ| over all terms.
    pub fn degree(&self) -> i32 {
        self.terms
            .iter()
            .flat_map(|t| t.k.iter().map(|k| k.abs()))
            .max()
            .unwrap_or(0)
    }
}

/// Rotation by `angle` in the (a, b) coordinate plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Givens {
    pub a: usize,
    pub b: usize,
    pub angle: TrigPoly,
}

fn givens_matrix(n: usize, a: usize, b: usize, theta: f64) -> Matrix<f64> {
    let (s, c) = theta.sin_cos();
    let mut g = Matrix::identity(n);
    g[(a, a)] = c;
    g[(a, b)] = -s;
    g[(b, a)] = s;
    g[(b, b)] = c;
    g
}

fn givens_derivative(n: usize, a: usize, b: usize, theta: f64) -> Matrix<f64> {
    let (s, c) = theta.sin_cos();
    let mut g = Matrix::zeros(n, n);
    g[(a, a)] = -s;
    g[(a, b)] = -c;
    g[(b, a)] = c;
    g[(b, b)] = -s;
    g
}

/// F(x) = G_1(θ_1(x)) ⋯ G_k(θ_k(x)) · base.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameField {
    p: usize,
    q: usize,
    rotations: Vec<Givens>,
    base: Matrix<f64>,
}

impl FrameField {
    pub fn new(p: usize, q: usize, rotations: Vec<Givens>, base: Matrix<f64>) -> Result<Self> {
        let n = p + q;
        if p == 0 || q == 0 {
            return Err(GntError::Domain(format!("need p, q ≥ 1, got p = {p}, q = {q}")));
        }
        if base.rows() != n || base.cols() != n || base.orthogonality_defect() > 1e-12 {
            return Err(GntError::Dimension(format!("base frame must be orthogonal {n}×{n}")));
        }
        for r in &rotations {
            if r.a >= n || r.b >= n || r.a == r.b {
                return Err(GntError::Dimension(format!("bad rotation plane ({}, {})", r.a, r.b)));
            }
            if r.angle.terms.iter().any(|t| t.k.len() != n) {
                return Err(GntError::Dimension(format!("wave vectors must have {n} entries")));
            }
        }
        Ok(FrameField {
            p,
            q,
            rotations,
            base,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n(&self) -> usize {
        self.p + self.q
    }

    pub fn rotations(&self) -> &[Givens] {
        &self.rotations
    }

    /// Largest wave number appearing in any angle.
    pub fn degree(&self) -> i32 {
        self.rotations.iter().map(|r| r.angle.degree()).max().unwrap_or(0)
    }

    pub fn frame(&self, x: &[f64]) -> Matrix<f64> {
        let n = self.n();
        let mut f = self.base.clone();
        for r in self.rotations.iter().rev() {
            f = &givens_matrix(n, r.a, r.b, r.angle.value(x)) * &f;
        }
        f
    }

    /// Exact ∂_μ F(x) for μ = 0..n.
    pub fn derivatives(&self, x: &[f64]) -> Vec<Matrix<f64>> {
        let n = self.n();
        let k = self.rotations.len();
        let thetas: Vec<f64> = self.rotations.iter().map(|r| r.angle.value(x)).collect();
        let gs: Vec<Matrix<f64>> = self
            .rotations
            .iter()
            .zip(&thetas)
            .map(|(r, &t)| givens_matrix(n, r.a, r.b, t))
            .collect();
        // prefix[j] = G_1⋯G_j, suffix[j] = G_{j+1}⋯G_k · base
        let mut prefix = vec![Matrix::identity(n)];
        for g in &gs {
            let next = prefix.last().unwrap() * g;
            prefix.push(next);
        }
        let mut suffix = vec![self.base.clone(); k + 1];
        for j in (0..k).rev() {
            suffix[j] = &gs[j] * &suffix[j + 1];
        }
        let pieces: Vec<Matrix<f64>> = (0..k)
            .map(|j| {
                let r = &self.rotations[j];
                &(&prefix[j] * &givens_derivative(n, r.a, r.b, thetas[j])) * &suffix[j + 1]
            })
            .collect();
        (0..n)
            .map(|mu| {
                let mut d = Matrix::zeros(n, n);
                for (j, piece) in pieces.iter().enumerate() {
                    let w = self.rotations[j].angle.derivative(x, mu);
                    if w != 0.0 {
                        d.add_scaled(&w, piece);
                    }
                }
                d
            })
            .collect()
    }
}

fn default_a() -> f64 {
    0.3
}

fn default_b() -> f64 {
    0.25
}

fn default_modes() -> i32 {
    1
}

fn default_terms() -> usize {
    2
}

/// Named frame fields as they appear in geometry config files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum FrameSpec {
    /// Coordinate frame: D and D⊥ are parallel planes.
    Constant { p: usize, q: usize },
    /// T², p = q = 1, e_1 = (cos θ, sin θ) with θ = a sin 2πx_1.
    T2Rotating {
        #[serde(default = "default_a")]
        a: f64,
    },
    /// T³, p = 1, q = 2; rotations by
    /// φ = a(sin 2πx_2 + ½ cos 2πx_1) in the (0,1) plane and
    /// ψ = b(sin 2πx_3 + ½ sin 2π(x_1 + x_2)) in the (0,2) plane.
    T3TwoAngle {
        #[serde(default = "default_a")]
        a: f64,
        #[serde(default = "default_b")]
        b: f64,
    },
    /// One rotation per coordinate plane with seeded random angles built from
    /// `terms` waves whose wave numbers lie in -modes..=modes.
    Random {
        p: usize,
        q: usize,
        seed: u64,
        #[serde(default = "default_modes")]
        modes: i32,
        #[serde(default = "default_a")]
        amplitude: f64,
        #[serde(default = "default_terms")]
        terms: usize,
    },
    /// Fully explicit field.
    Custom {
        p: usize,
        q: usize,
        rotations: Vec<Givens>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        base: Option<Vec<Vec<f64>>>,
    },
}

impl FrameSpec {
    pub fn build(&self) -> Result<FrameField> {
        match self {
            FrameSpec::Constant { p, q } => FrameField::new(*p, *q, vec![], Matrix::identity(p + q)),
            FrameSpec::T2Rotating { a } => FrameField::new(
                1,
                1,
                vec![Givens {
                    a: 0,
                    b: 1,
                    angle: TrigPoly::single(*a, vec![1, 0], Wave::Sin),
                }],
                Matrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]])?,
            ),
            FrameSpec::T3TwoAngle { a, b } => {
                let phi = TrigPoly {
                    terms: vec![
                        TrigTerm { coeff: *a, k: vec![0, 1, 0], wave: Wave::Sin },
                        TrigTerm { coeff: 0.5 * a, k: vec![1, 0, 0], wave: Wave::Cos },
                    ],
                };
                let psi = TrigPoly {
                    terms: vec![
                        TrigTerm { coeff: *b, k: vec![0, 0, 1], wave: Wave::Sin },
                        TrigTerm { coeff: 0.5 * b, k: vec![1, 1, 0], wave: Wave::Sin },
                    ],
                };
                FrameField::new(
                    1,
                    2,
                    vec![
                        Givens { a: 0, b: 1, angle: phi },
                        Givens { a: 0, b: 2, angle: psi },
                    ],
                    Matrix::identity(3),
                )
            }
            FrameSpec::Random {
                p,
                q,
                seed,
                modes,
                amplitude,
                terms,
            } => {
                let n = p + q;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut rotations = Vec::new();
                for a in 0..n {
                    for b in a + 1..n {
                        let mut poly = TrigPoly::default();
                        for _ in 0..*terms {
                            let k: Vec<i32> = loop {
                                let k: Vec<i32> =
                                    (0..n).map(|_| rng.random_range(-*modes..=*modes)).collect();
                                if k.iter().any(|&x| x != 0) || *modes == 0 {
                                    break k;
                                }
                            };
                            let coeff = rng.random_range(-*amplitude..=*amplitude);
                            let wave = if rng.random_bool(0.5) { Wave::Sin } else { Wave::Cos };
                            poly.terms.push(TrigTerm { coeff, k, wave });
                        }
                        rotations.push(Givens { a, b, angle: poly });
                    }
                }
                FrameField::new(*p, *q, rotations, Matrix::identity(n))
            }
            FrameSpec::Custom {
                p,
                q,
                rotations,
                base,
            } => {
                let base = match base {
                    Some(rows) => Matrix::from_rows(rows.clone())?,
                    None => Matrix::identity(p + q),
                };
                FrameField::new(*p, *q, rotations.clone(), base)
            }
        }
    }
}
