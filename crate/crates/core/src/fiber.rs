//! Haar quadrature on O(q) and SO(q) and fiber averaging.
//!
//! Measures are normalized to total mass one.  [`group_volume`] gives the
//! factor to the Riemannian volume under the bi-invariant metric −tr(AB).

use std::f64::consts::PI;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GntError, Result};
use crate::matrix::Matrix;
use crate::multiindex::MultiIndex;
use crate::numerics::{pairwise_sum, weighted_sum};

/// Nodes drifting further than this from orthogonality are re-projected.
pub const ORTHOGONALITY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Group {
    O,
    SO,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Group::O => write!(f, "O"),
            Group::SO => write!(f, "SO"),
        }
    }
}

impl std::str::FromStr for Group {
    type Err = GntError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "O" | "o" => Ok(Group::O),
            "SO" | "so" => Ok(Group::SO),
            _ => Err(GntError::Parse(format!("unknown group {s:?}, expected O or SO"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleKind {
    Exact,
    Quadrature,
    Mc,
}

/// Serialized form of a rule request, e.g.
/// `{"group":"SO","q":2,"kind":"quadrature","n":64}` or
/// `{"kind":"mc","n":10000,"seed":42}`.
///
/// Missing `group` and `q` are filled in from the geometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<Group>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    pub kind: RuleKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Monte-Carlo only: average every draw over the diagonal sign flips
    /// that lie in the group.
    #[serde(default)]
    pub symmetrize: bool,
}

impl FiberSpec {
    /// The default rule for a fiber of dimension q: exact for q = 1,
    /// uniform angles for q = 2, Monte-Carlo beyond.
    pub fn default_for(group: Group, q: usize, n: usize, seed: u64) -> Self {
        let (kind, seed) = match q {
            1 => (RuleKind::Exact, None),
            2 => (RuleKind::Quadrature, None),
            _ => (RuleKind::Mc, Some(seed)),
        };
        FiberSpec {
            group: Some(group),
            q: Some(q),
            kind,
            n: Some(n),
            seed,
            symmetrize: false,
        }
    }

    pub fn build(&self, default_group: Group, default_q: usize) -> Result<FiberRule> {
        let group = self.group.unwrap_or(default_group);
        let q = self.q.unwrap_or(default_q);
        if q != default_q {
            return Err(GntError::Dimension(format!(
                "fiber rule for q = {q} on a geometry with q = {default_q}"
            )));
        }
        match self.kind {
            RuleKind::Exact => {
                if q != 1 {
                    return Err(GntError::Domain(format!(
                        "an exact rule exists only for q = 1, got q = {q}"
                    )));
                }
                haar_rule(group, 1, 1, None)
            }
            RuleKind::Quadrature => {
                if q > 2 {
                    return Err(GntError::Domain(format!(
                        "product quadrature is implemented for q ≤ 2, got q = {q}; use kind \"mc\""
                    )));
                }
                haar_rule(group, q, self.n.unwrap_or(64), None)
            }
            RuleKind::Mc => {
                let seed = self
                    .seed
                    .ok_or_else(|| GntError::Parse("Monte-Carlo rules need a seed".into()))?;
                let n = self.n.unwrap_or(10_000);
                monte_carlo_rule(group, q, n, seed, self.symmetrize)
            }
        }
    }
}

/// Nodes g_k ∈ G with weights summing to one.
#[derive(Clone, Debug)]
pub struct FiberRule {
    group: Group,
    q: usize,
    kind: RuleKind,
    seed: Option<u64>,
    nodes: Vec<Matrix<f64>>,
    weights: Vec<f64>,
    /// Consecutive nodes forming one independent draw (Monte-Carlo only).
    block: usize,
}

impl FiberRule {
    pub fn group(&self) -> Group {
        self.group
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn nodes(&self) -> &[Matrix<f64>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_monte_carlo(&self) -> bool {
        self.kind == RuleKind::Mc
    }

    /// Number of nodes per independent Monte-Carlo draw.
    pub fn block(&self) -> usize {
        self.block
    }

    /// Σ_k w_k x_k for values already evaluated at the nodes.
    pub fn combine(&self, values: &[f64]) -> f64 {
        weighted_sum(&self.weights, values)
    }

    /// Standard error of [`Self::combine`] for Monte-Carlo rules (zero for
    /// deterministic rules, whose error is not statistical).
    pub fn standard_error(&self, values: &[f64]) -> f64 {
        if !self.is_monte_carlo() {
            return 0.0;
        }
        let draws: Vec<f64> = values
            .chunks(self.block)
            .map(|c| pairwise_sum(c) / c.len() as f64)
            .collect();
        let n = draws.len() as f64;
        if draws.len() < 2 {
            return f64::INFINITY;
        }
        let mean = pairwise_sum(&draws) / n;
        let dev: Vec<f64> = draws.iter().map(|x| (x - mean) * (x - mean)).collect();
        (pairwise_sum(&dev) / (n - 1.0) / n).sqrt()
    }

    pub fn to_spec(&self) -> FiberSpec {
        FiberSpec {
            group: Some(self.group),
            q: Some(self.q),
            kind: self.kind,
            n: Some(match self.kind {
                RuleKind::Exact => 1,
                RuleKind::Quadrature if self.group == Group::O => self.nodes.len() / 2,
                RuleKind::Quadrature => self.nodes.len(),
                RuleKind::Mc => self.nodes.len() / self.block,
            }),
            seed: self.seed,
            symmetrize: self.block > 1,
        }
    }
}

fn rotation2(theta: f64) -> Matrix<f64> {
    let (s, c) = theta.sin_cos();
    Matrix::from_rows(vec![vec![c, -s], vec![s, c]]).expect("2x2")
}

fn reflect_first_column(g: &Matrix<f64>) -> Matrix<f64> {
    let mut h = g.clone();
    for i in 0..h.rows() {
        h[(i, 0)] = -h[(i, 0)];
    }
    h
}

/// Haar rule on G ⊂ O(q).
///
/// q = 1: the exact rule on {±1} or {1}.  q = 2: `n` equally spaced angles,
/// exact for trigonometric polynomials of degree below `n`, doubled by the
/// reflection coset for O(2).  q ≥ 3: seeded Monte-Carlo with `n` draws; a
/// seed is required there.
pub fn haar_rule(group: Group, q: usize, n: usize, seed: Option<u64>) -> Result<FiberRule> {
    match q {
        0 => Err(GntError::Domain("the fiber needs q ≥ 1".into())),
        1 => {
            let (nodes, weights) = match group {
                Group::O => (
                    vec![Matrix::identity(1), Matrix::scalar(1, -1.0)],
                    vec![0.5, 0.5],
                ),
                Group::SO => (vec![Matrix::identity(1)], vec![1.0]),
            };
            Ok(FiberRule {
                group,
                q,
                kind: RuleKind::Exact,
                seed: None,
                nodes,
                weights,
                block: 1,
            })
        }
        2 => {
            if n == 0 {
                return Err(GntError::Domain("need n ≥ 1 angles".into()));
            }
            let mut nodes = Vec::new();
            for k in 0..n {
                let g = rotation2(2.0 * PI * k as f64 / n as f64);
                if group == Group::O {
                    nodes.push(reflect_first_column(&g));
                }
                nodes.push(g);
            }
            let w = 1.0 / nodes.len() as f64;
            let weights = vec![w; nodes.len()];
            Ok(FiberRule {
                group,
                q,
                kind: RuleKind::Quadrature,
                seed: None,
                nodes,
                weights,
                block: 1,
            })
        }
        _ => {
            let seed = seed.ok_or_else(|| {
                GntError::Domain(format!("q = {q} needs a Monte-Carlo seed"))
            })?;
            monte_carlo_rule(group, q, n, seed, false)
        }
    }
}

/// One Haar-distributed element of O(q): Gram–Schmidt on a Gaussian matrix.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, q: usize) -> Matrix<f64> {
    loop {
        let mut m = Matrix::from_fn(q, q, |_, _| StandardNormal.sample(rng));
        let mut ok = true;
        for j in 0..q {
            for k in 0..j {
                let dot: f64 = (0..q).map(|i| m[(i, j)] * m[(i, k)]).sum();
                for i in 0..q {
                    let v = m[(i, k)];
                    m[(i, j)] -= dot * v;
                }
            }
            let norm = (0..q).map(|i| m[(i, j)] * m[(i, j)]).sum::<f64>().sqrt();
            if norm < 1e-8 {
                ok = false;
                break;
            }
            for i in 0..q {
                m[(i, j)] /= norm;
            }
        }
        if ok {
            if m.orthogonality_defect() > ORTHOGONALITY_TOL {
                m = m.polar_orthonormalize();
            }
            return m;
        }
    }
}

fn sign_flips(group: Group, q: usize) -> Vec<Vec<f64>> {
    (0u32..1 << q)
        .filter(|mask| group == Group::O || mask.count_ones() % 2 == 0)
        .map(|mask| {
            (0..q)
                .map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 })
                .collect()
        })
        .collect()
}

/// Seeded Monte-Carlo Haar rule with `n` independent draws.
///
/// With `symmetrize` each draw g is replaced by the block {g·D} over the
/// sign-flip diagonals D in the group, which integrates every monomial with
/// an odd entry in a flip-detectable pattern exactly.
pub fn monte_carlo_rule(
    group: Group,
    q: usize,
    n: usize,
    seed: u64,
    symmetrize: bool,
) -> Result<FiberRule> {
    if q == 0 || n == 0 {
        return Err(GntError::Domain("Monte-Carlo rule needs q ≥ 1 and n ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let flips = if symmetrize {
        sign_flips(group, q)
    } else {
        vec![vec![1.0; q]]
    };
    let mut nodes = Vec::with_capacity(n * flips.len());
    for _ in 0..n {
        let mut g = random_orthogonal(&mut rng, q);
        if group == Group::SO && g.determinant() < 0.0 {
            g = reflect_first_column(&g);
        }
        for d in &flips {
            nodes.push(Matrix::from_fn(q, q, |i, j| g[(i, j)] * d[j]));
        }
    }
    let w = 1.0 / nodes.len() as f64;
    let weights = vec![w; nodes.len()];
    Ok(FiberRule {
        group,
        q,
        kind: RuleKind::Mc,
        seed: Some(seed),
        nodes,
        weights,
        block: flips.len(),
    })
}

/// f̂ = Σ_k w_k f(e0·g_k).
pub fn average_scalar<F>(rule: &FiberRule, e0: &Matrix<f64>, f: F) -> f64
where
    F: Fn(&Matrix<f64>) -> f64 + Sync,
{
    let values: Vec<f64> = rule.nodes.par_iter().map(|g| f(&(e0 * g))).collect();
    rule.combine(&values)
}

/// Componentwise fiber average of a vector-valued function.
pub fn average_vector<F>(rule: &FiberRule, e0: &Matrix<f64>, f: F) -> Vec<f64>
where
    F: Fn(&Matrix<f64>) -> Vec<f64> + Sync,
{
    let values: Vec<Vec<f64>> = rule.nodes.par_iter().map(|g| f(&(e0 * g))).collect();
    let dim = values.first().map_or(0, Vec::len);
    (0..dim)
        .map(|c| {
            let col: Vec<f64> = values.iter().map(|v| v[c]).collect();
            rule.combine(&col)
        })
        .collect()
}

/// Fiber-averaged values over a set of base points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameAverage {
    /// Base points in [0,1)^n.
    pub points: Vec<Vec<f64>>,
    /// f̂ at each point.
    pub values: Vec<f64>,
    /// Standard error of the base integral for Monte-Carlo rules, else 0.
    pub error: f64,
}

impl FrameAverage {
    /// Equal-weight base quadrature of the averaged values.
    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.values) / self.values.len() as f64
    }
}

/// Remark on symmetric vanishing: for O(q), any odd entry; for SO(q), an
/// even-size set of axes whose entries sum to an odd number.
pub fn vanishing_by_symmetry(u: &MultiIndex, group: Group) -> bool {
    let odd = u.entries().iter().filter(|&&x| x % 2 == 1).count();
    match group {
        Group::O => odd > 0,
        // pair an odd entry with an even one; if every entry is odd, even-size
        // subsets always have even sums
        Group::SO => odd > 0 && odd < u.q(),
    }
}

fn sphere_volume(k: usize) -> f64 {
    // vol(S^k) = 2π/(k-1) · vol(S^{k-2})
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (k as f64 - 1.0) * sphere_volume(k - 2),
    }
}

/// Riemannian volume of G under ⟪A,B⟫ = −tr(AB) on its Lie algebra.
///
/// Multiply a normalized-Haar integral by this to get the metric one.
pub fn group_volume(group: Group, q: usize) -> f64 {
    if q == 0 {
        return 1.0;
    }
    // unit-norm generators E_ij − E_ji give Π_{k=1}^{q-1} vol(S^k); the
    // metric −tr(AB) stretches each of the q(q−1)/2 directions by √2
    let dim = q * (q - 1) / 2;
    let base: f64 = (1..q).map(sphere_volume).product::<f64>() * 2f64.powf(dim as f64 / 2.0);
    match group {
        Group::SO => base,
        Group::O => 2.0 * base,
    }
}

/// Points N on the unit sphere of D⊥ ≅ ℝ^q with weights summing to one.
///
/// q = 1 is the orbit of e_1 under G: {±e_1} for O(1), {e_1} for SO(1).
/// q = 2 uses `n` equally spaced angles.  q ≥ 3 draws `n` seeded Gaussian
/// directions together with their antipodes.
#[derive(Clone, Debug)]
pub struct SphereRule {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

pub fn sphere_rule(group: Group, q: usize, n: usize, seed: Option<u64>) -> Result<SphereRule> {
    let points: Vec<Vec<f64>> = match q {
        0 => return Err(GntError::Domain("the sphere needs q ≥ 1".into())),
        1 => match group {
            Group::O => vec![vec![1.0], vec![-1.0]],
            Group::SO => vec![vec![1.0]],
        },
        2 => (0..n)
            .map(|k| {
                let (s, c) = (2.0 * PI * k as f64 / n as f64).sin_cos();
                vec![c, s]
            })
            .collect(),
        _ => {
            let seed = seed.ok_or_else(|| {
                GntError::Domain(format!("q = {q} sphere rule needs a seed"))
            })?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut pts = Vec::with_capacity(2 * n);
            while pts.len() < 2 * n {
                let v: Vec<f64> = (0..q).map(|_| StandardNormal.sample(&mut rng)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm < 1e-8 {
                    continue;
                }
                let v: Vec<f64> = v.iter().map(|x| x / norm).collect();
                pts.push(v.iter().map(|x| -x).collect());
                pts.push(v);
            }
            pts
        }
    };
    if points.is_empty() {
        return Err(GntError::Domain("sphere rule needs n ≥ 1".into()));
    }
    let w = 1.0 / points.len() as f64;
    let weights = vec![w; points.len()];
    Ok(SphereRule { points, weights })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn o1_rule() {
        let r = haar_rule(Group::O, 1, 1, None).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r.weights(), &[0.5, 0.5]);
        assert_eq!(r.nodes()[1][(0, 0)], -1.0);
    }

    #[test]
    fn so2_integrates_cos_squared() {
        let r = haar_rule(Group::SO, 2, 8, None).unwrap();
        let e0 = Matrix::identity(2);
        let v = average_scalar(&r, &e0, |g| g[(0, 0)] * g[(0, 0)]);
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn o2_covers_both_components() {
        let r = haar_rule(Group::O, 2, 6, None).unwrap();
        let neg: f64 = r
            .nodes()
            .iter()
            .zip(r.weights())
            .filter(|(g, _)| g.determinant() < 0.0)
            .map(|(_, w)| w)
            .sum();
        assert!((neg - 0.5).abs() < 1e-15);
    }

    #[test]
    fn so3_monte_carlo_mean() {
        let n = 10_000;
        let r = haar_rule(Group::SO, 3, n, Some(42)).unwrap();
        for g in r.nodes() {
            assert!(g.orthogonality_defect() <= 1e-12);
            assert!(g.determinant() > 0.0);
        }
        let v = average_scalar(&r, &Matrix::identity(3), |g| g[(0, 0)]);
        assert!(v.abs() <= 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn mc_is_reproducible() {
        let a = monte_carlo_rule(Group::O, 3, 50, 7, true).unwrap();
        let b = monte_carlo_rule(Group::O, 3, 50, 7, true).unwrap();
        assert_eq!(a.len(), 400);
        for (x, y) in a.nodes().iter().zip(b.nodes()) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn vanishing_examples() {
        assert!(vanishing_by_symmetry(&MultiIndex::new(vec![1, 0]), Group::O));
        assert!(!vanishing_by_symmetry(&MultiIndex::new(vec![1, 1]), Group::SO));
        assert!(vanishing_by_symmetry(&MultiIndex::new(vec![1, 1, 0]), Group::SO));
        assert!(!vanishing_by_symmetry(&MultiIndex::new(vec![2, 4]), Group::O));
        assert!(!vanishing_by_symmetry(&MultiIndex::new(vec![2, 4]), Group::SO));
    }

    #[test]
    fn volumes() {
        assert_eq!(group_volume(Group::O, 1), 2.0);
        // SO(2) with −tr(AB): the generator has length √2, circle of length 2π√2
        assert!((group_volume(Group::SO, 2) - 2.0 * PI * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn spec_round_trip() {
        let s: FiberSpec = serde_json::from_str(r#"{"kind":"mc","n":100,"seed":42}"#).unwrap();
        let r = s.build(Group::SO, 3).unwrap();
        assert_eq!(r.len(), 100);
        let s: FiberSpec =
            serde_json::from_str(r#"{"group":"SO","q":2,"kind":"quadrature","n":64}"#).unwrap();
        assert_eq!(s.build(Group::O, 2).unwrap().to_spec(), s);
    }
}
