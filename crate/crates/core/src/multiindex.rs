//! Multi-indices u ∈ ℕ(q), the ♯/♭ maps and the index-matrix sets 𝕀(q,s).
//!
//! Axes are 0-based throughout the API: axis `a` is the 1-based α = a+1.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{GntError, Result};

/// Default cap on the number of columns in [`enumerate_i`]; q^s grows fast.
pub const DEFAULT_ENUMERATION_CAP: usize = 12;

/// An element u = (u_1, …, u_q) of ℕ(q).
///
/// Ordered graded-lexicographically: first by |u|, then entrywise.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn zero(q: usize) -> Self {
        MultiIndex(vec![0; q])
    }

    /// The unit index with a single 1 on `axis`.
    pub fn unit(q: usize, axis: usize) -> Self {
        Self::zero(q).sharp(axis)
    }

    pub fn q(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, axis: usize) -> u32 {
        self.0[axis]
    }

    /// |u| = Σ u_α.
    pub fn length(&self) -> usize {
        self.0.iter().map(|&x| x as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    /// α♯: raise one entry.
    pub fn sharp(&self, axis: usize) -> Self {
        let mut v = self.0.clone();
        v[axis] += 1;
        MultiIndex(v)
    }

    /// α♭: lower one entry, a domain error below zero.
    pub fn flat(&self, axis: usize) -> Result<Self> {
        self.try_flat(axis).ok_or_else(|| {
            GntError::Domain(format!("flat on axis {axis} of {self:?}, entry is 0"))
        })
    }

    pub fn try_flat(&self, axis: usize) -> Option<Self> {
        if self.0[axis] == 0 {
            return None;
        }
        let mut v = self.0.clone();
        v[axis] -= 1;
        Some(MultiIndex(v))
    }

    /// Entrywise difference, `None` when some entry would be negative.
    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        assert_eq!(self.q(), other.q());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| a.checked_sub(b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.q(), other.q());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Concatenation, used for augmented systems.
    pub fn concat(&self, other: &Self) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        MultiIndex(v)
    }

    /// u! = u_1!⋯u_q!.
    pub fn factorial(&self) -> BigUint {
        self.0
            .iter()
            .fold(BigUint::one(), |acc, &x| acc * factorial(x as usize))
    }

    /// Member of 2ℕ(q): every entry even.
    pub fn is_even(&self) -> bool {
        self.0.iter().all(|&x| x % 2 == 0)
    }

    /// u/2, defined on 2ℕ(q).
    pub fn half(&self) -> Result<Self> {
        if !self.is_even() {
            return Err(GntError::Domain(format!("{self:?} has an odd entry")));
        }
        Ok(MultiIndex(self.0.iter().map(|x| x / 2).collect()))
    }

    /// The index u = α_1♯⋯α_r♯(0) built from a list of axes.
    pub fn from_axes(q: usize, axes: &[usize]) -> Self {
        axes.iter().fold(Self::zero(q), |u, &a| u.sharp(a))
    }

    /// Lists each axis with multiplicity, inverse of [`MultiIndex::from_axes`].
    pub fn to_axes(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(a, &k)| std::iter::repeat_n(a, k as usize))
            .collect()
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.q()
            .cmp(&other.q())
            .then(self.length().cmp(&other.length()))
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All u ∈ ℕ(q) with |u| = len, in lexicographic order.
pub fn enumerate_level(q: usize, len: usize) -> Vec<MultiIndex> {
    fn go(q: usize, left: usize, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if prefix.len() + 1 == q {
            prefix.push(left as u32);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k as u32);
            go(q, left - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if q == 0 {
        if len == 0 {
            out.push(MultiIndex(Vec::new()));
        }
        return out;
    }
    go(q, len, &mut Vec::with_capacity(q), &mut out);
    out
}

/// All u ∈ ℕ(q) with |u| ≤ max_len, graded-lex.
pub fn enumerate_up_to(q: usize, max_len: usize) -> Vec<MultiIndex> {
    (0..=max_len).flat_map(|l| enumerate_level(q, l)).collect()
}

pub fn factorial(n: usize) -> BigUint {
    (2..=n).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::ZERO;
    }
    let k = k.min(n - k);
    (0..k).fold(BigUint::one(), |acc, i| acc * BigUint::from(n - i) / BigUint::from(i + 1))
}

/// r!/(u_1!⋯u_q!) for |u| = r.
pub fn multinomial(r: usize, u: &MultiIndex) -> Result<BigUint> {
    if u.length() != r {
        return Err(GntError::Domain(format!("|{u:?}| = {} but r = {r}", u.length())));
    }
    Ok(factorial(r) / u.factorial())
}

/// A q×s matrix of nonnegative integers 𝐢 = (i^α_l).
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct IndexMatrix {
    q: usize,
    s: usize,
    /// Row-major, `entries[α * s + l]`.
    entries: Vec<u32>,
}

impl IndexMatrix {
    pub fn from_rows(rows: &[Vec<u32>]) -> Result<Self> {
        let q = rows.len();
        let s = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != s) {
            return Err(GntError::Dimension("index matrix rows differ in length".into()));
        }
        Ok(IndexMatrix {
            q,
            s,
            entries: rows.iter().flatten().copied().collect(),
        })
    }

    /// The member of 𝕀(q,s) whose column l has its 1 in row `choices[l]`.
    pub fn from_choices(q: usize, choices: &[usize]) -> Self {
        let s = choices.len();
        let mut entries = vec![0; q * s];
        for (l, &a) in choices.iter().enumerate() {
            entries[a * s + l] = 1;
        }
        IndexMatrix { q, s, entries }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Number of columns s.
    pub fn columns(&self) -> usize {
        self.s
    }

    pub fn entry(&self, axis: usize, col: usize) -> u32 {
        self.entries[axis * self.s + col]
    }

    /// |𝐢| ∈ ℕ(q): row sums.
    pub fn weight(&self) -> MultiIndex {
        MultiIndex(
            (0..self.q)
                .map(|a| (0..self.s).map(|l| self.entry(a, l)).sum())
                .collect(),
        )
    }

    /// ‖𝐢‖ = sum of all entries.
    pub fn norm(&self) -> usize {
        self.entries.iter().map(|&x| x as usize).sum()
    }

    pub fn entries_binary(&self) -> bool {
        self.entries.iter().all(|&x| x <= 1)
    }

    pub fn one_per_column(&self) -> bool {
        (0..self.s).all(|l| (0..self.q).filter(|&a| self.entry(a, l) == 1).count() == 1)
    }

    /// Membership in 𝕀(q,s) from the three defining predicates.
    pub fn in_i(&self) -> bool {
        self.entries_binary() && self.norm() == self.s && self.one_per_column()
    }

    /// For members of 𝕀(q,s): the row of the single 1 in each column.
    pub fn choices(&self) -> Option<Vec<usize>> {
        if !self.in_i() {
            return None;
        }
        Some(
            (0..self.s)
                .map(|l| (0..self.q).find(|&a| self.entry(a, l) == 1).unwrap())
                .collect(),
        )
    }

    /// β∘𝐢: prepend a column whose only 1 sits in row β.
    pub fn prepend(&self, beta: usize) -> Self {
        let s = self.s + 1;
        let mut entries = vec![0; self.q * s];
        for a in 0..self.q {
            entries[a * s] = u32::from(a == beta);
            for l in 0..self.s {
                entries[a * s + l + 1] = self.entry(a, l);
            }
        }
        IndexMatrix { q: self.q, s, entries }
    }
}

/// 𝕀(q,s) with the default cap.
pub fn enumerate_i(q: usize, s: usize) -> Result<Vec<IndexMatrix>> {
    enumerate_i_capped(q, s, DEFAULT_ENUMERATION_CAP)
}

/// 𝕀(q,s), refusing s > cap.  Ordered by the column choices read as a base-q number.
pub fn enumerate_i_capped(q: usize, s: usize, cap: usize) -> Result<Vec<IndexMatrix>> {
    if s > cap {
        return Err(GntError::CapExceeded {
            what: "columns of I(q,s)",
            requested: s,
            cap,
        });
    }
    if q == 0 {
        return Ok(if s == 0 {
            vec![IndexMatrix::from_choices(0, &[])]
        } else {
            Vec::new()
        });
    }
    let total = q.pow(s as u32);
    let mut out = Vec::with_capacity(total);
    let mut choices = vec![0usize; s];
    for mut code in 0..total {
        for l in (0..s).rev() {
            choices[l] = code % q;
            code /= q;
        }
        out.push(IndexMatrix::from_choices(q, &choices));
    }
    Ok(out)
}

/// Dense numbering of {u ∈ ℕ(q) : |u| ≤ max_len} in graded-lex order,
/// with the ♭ neighbours precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSpace {
    q: usize,
    max_len: usize,
    indices: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
    flats: Vec<Vec<Option<usize>>>,
    level_start: Vec<usize>,
}

impl IndexSpace {
    pub fn new(q: usize, max_len: usize) -> Self {
        let mut indices = Vec::new();
        let mut level_start = Vec::with_capacity(max_len + 2);
        for l in 0..=max_len {
            level_start.push(indices.len());
            indices.extend(enumerate_level(q, l));
        }
        level_start.push(indices.len());
        let lookup: HashMap<_, _> = indices
            .iter()
            .enumerate()
            .map(|(i, u)| (u.clone(), i))
            .collect();
        let flats = indices
            .iter()
            .map(|u| {
                (0..q)
                    .map(|a| u.try_flat(a).map(|v| lookup[&v]))
                    .collect()
            })
            .collect();
        IndexSpace {
            q,
            max_len,
            indices,
            lookup,
            flats,
            level_start,
        }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn index(&self, i: usize) -> &MultiIndex {
        &self.indices[i]
    }

    pub fn position(&self, u: &MultiIndex) -> Option<usize> {
        self.lookup.get(u).copied()
    }

    /// Position of α♭(u) for the index at position `i`.
    #[inline]
    pub fn flat_of(&self, i: usize, axis: usize) -> Option<usize> {
        self.flats[i][axis]
    }

    /// Positions of all indices of length `len`.
    pub fn level(&self, len: usize) -> std::ops::Range<usize> {
        if len > self.max_len {
            return self.indices.len()..self.indices.len();
        }
        self.level_start[len]..self.level_start[len + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sharp_flat_examples() {
        assert_eq!(MultiIndex::new(vec![0, 0]).sharp(0), MultiIndex::new(vec![1, 0]));
        assert_eq!(
            MultiIndex::new(vec![2, 1]).flat(1).unwrap(),
            MultiIndex::new(vec![2, 0])
        );
        let u = MultiIndex::new(vec![3, 5]);
        assert_eq!(u.sharp(0).flat(0).unwrap(), u);
        assert!(MultiIndex::new(vec![0, 1]).flat(0).is_err());
    }

    #[test]
    fn graded_lex_order() {
        let all = enumerate_up_to(2, 2);
        let shown: Vec<String> = all.iter().map(|u| u.to_string()).collect();
        assert_eq!(shown, ["(0,0)", "(0,1)", "(1,0)", "(0,2)", "(1,1)", "(2,0)"]);
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(sorted, all);
    }

    #[test]
    fn multinomial_examples() {
        assert_eq!(multinomial(2, &MultiIndex::new(vec![1, 1])).unwrap(), 2u32.into());
        assert_eq!(multinomial(4, &MultiIndex::new(vec![2, 2])).unwrap(), 6u32.into());
        assert_eq!(multinomial(6, &MultiIndex::new(vec![2, 2, 2])).unwrap(), 90u32.into());
        assert!(multinomial(3, &MultiIndex::new(vec![1, 1])).is_err());
    }

    #[test]
    fn enumerate_small() {
        let one = enumerate_i(2, 1).unwrap();
        assert_eq!(one.len(), 2);
        assert_eq!(one[0], IndexMatrix::from_rows(&[vec![1], vec![0]]).unwrap());
        assert_eq!(enumerate_i(3, 2).unwrap().len(), 9);
        let zero = enumerate_i(5, 0).unwrap();
        assert_eq!(zero.len(), 1);
        assert_eq!(zero[0].weight(), MultiIndex::zero(5));
        assert!(matches!(enumerate_i(2, 13), Err(GntError::CapExceeded { .. })));
    }

    #[test]
    fn index_space_flats() {
        let sp = IndexSpace::new(3, 3);
        for (i, u) in sp.indices().iter().enumerate() {
            assert_eq!(sp.position(u), Some(i));
            for a in 0..3 {
                assert_eq!(sp.flat_of(i, a).map(|j| sp.index(j).clone()), u.try_flat(a));
            }
        }
        assert_eq!(sp.level(2).len(), 6);
    }
}
