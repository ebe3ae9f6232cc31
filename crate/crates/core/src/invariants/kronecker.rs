//! The generalized Kronecker symbol and the explicit σ_u contraction.
//!
//! This path is an oracle: it costs r!·p!/(p-r)! products per call.

use crate::error::{GntError, Result};
use crate::multiindex::MultiIndex;
use crate::scalar::Scalar;

use super::EndoSystem;

/// Refuse contractions with more factors than this by default.
pub const KRONECKER_CAP: usize = 6;

/// δ^{top}_{bottom}: the sign of the permutation taking `top` to `bottom`
/// when both consist of the same distinct indices, zero otherwise.
pub fn kronecker_delta(top: &[usize], bottom: &[usize]) -> i8 {
    if top.len() != bottom.len() {
        return 0;
    }
    let r = top.len();
    for i in 0..r {
        for j in 0..i {
            if top[i] == top[j] || bottom[i] == bottom[j] {
                return 0;
            }
        }
    }
    // perm[k] = position in top of bottom[k]
    let mut perm = Vec::with_capacity(r);
    for b in bottom {
        match top.iter().position(|t| t == b) {
            Some(k) => perm.push(k),
            None => return 0,
        }
    }
    let mut seen = vec![false; r];
    let mut sign = 1i8;
    for start in 0..r {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut k = start;
        while !seen[k] {
            seen[k] = true;
            k = perm[k];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

/// All tuples of `r` distinct values from `0..p`.
pub(crate) fn injective_tuples(p: usize, r: usize) -> Vec<Vec<usize>> {
    fn go(p: usize, r: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for v in 0..p {
            if !used[v] {
                used[v] = true;
                cur.push(v);
                go(p, r, cur, used, out);
                cur.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    if r <= p {
        go(p, r, &mut Vec::with_capacity(r), &mut vec![false; p], &mut out);
    }
    out
}

/// All orderings of `items`.
pub(crate) fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    let idx = injective_tuples(items.len(), items.len());
    idx.into_iter()
        .map(|perm| perm.into_iter().map(|k| items[k]).collect())
        .collect()
}

/// σ_u with u = α_1♯⋯α_r♯(0) via (1/u!) Σ δ^{I}_{J} Π (A_{α_k})_{i_k j_k}.
///
/// Tuples with a repeated upper index carry δ = 0, so only injective upper
/// tuples and their rearrangements are visited; δ is still evaluated
/// for every visited pair.
pub fn sigma_kronecker<S: Scalar>(sys: &EndoSystem<S>, axes: &[usize]) -> Result<S> {
    sigma_kronecker_capped(sys, axes, KRONECKER_CAP)
}

pub fn sigma_kronecker_capped<S: Scalar>(
    sys: &EndoSystem<S>,
    axes: &[usize],
    cap: usize,
) -> Result<S> {
    let r = axes.len();
    if r > cap {
        return Err(GntError::CapExceeded {
            what: "Kronecker contraction length",
            requested: r,
            cap,
        });
    }
    if let Some(&a) = axes.iter().find(|&&a| a >= sys.q()) {
        return Err(GntError::Domain(format!("axis {a} out of range for q = {}", sys.q())));
    }
    let p = sys.p();
    if r > p {
        return Ok(S::zero());
    }
    let mut total = S::zero();
    for top in injective_tuples(p, r) {
        for bottom in permutations(&top) {
            let d = kronecker_delta(&top, &bottom);
            if d == 0 {
                continue;
            }
            let mut prod = S::from_i64(d as i64);
            for k in 0..r {
                prod = prod * sys.matrix(axes[k])[(top[k], bottom[k])].clone();
            }
            total = total + prod;
        }
    }
    let u = MultiIndex::from_axes(sys.q(), axes);
    let fact: i64 = u
        .factorial()
        .try_into()
        .map_err(|_| GntError::Domain("u! overflows".into()))?;
    Ok(total / S::from_i64(fact))
}

/// Σ over trailing indices i ∈ (0..p)^{s-r} of δ^{top i}_{bottom i}, by brute force.
pub fn trailing_contraction(p: usize, top: &[usize], bottom: &[usize], s: usize) -> i64 {
    let r = top.len();
    assert!(bottom.len() == r && s >= r);
    let k = s - r;
    if k > 0 && p == 0 {
        return 0;
    }
    let mut tail = vec![0usize; k];
    let (mut t, mut b) = (top.to_vec(), bottom.to_vec());
    let mut total = 0i64;
    loop {
        t.truncate(r);
        t.extend(&tail);
        b.truncate(r);
        b.extend(&tail);
        total += kronecker_delta(&t, &b) as i64;
        let mut pos = 0;
        loop {
            if pos == k {
                return total;
            }
            tail[pos] += 1;
            if tail[pos] < p {
                break;
            }
            tail[pos] = 0;
            pos += 1;
        }
    }
}

/// (p-r)!/(p-s)!: what contracting s - r trailing slots multiplies δ by (0 once s > p).
pub fn contraction_factor(p: usize, r: usize, s: usize) -> i64 {
    assert!(r <= s);
    if s > p {
        return 0;
    }
    ((p - s + 1)..=(p - r)).map(|x| x as i64).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::scalar::Rational;

    #[test]
    fn delta_examples() {
        assert_eq!(kronecker_delta(&[0, 1], &[1, 0]), -1);
        assert_eq!(kronecker_delta(&[0, 0], &[0, 1]), 0);
        assert_eq!(kronecker_delta(&[0, 1, 2], &[1, 2, 0]), 1);
        assert_eq!(kronecker_delta(&[0, 1], &[0, 2]), 0);
        let p = 3;
        let mut s = 0i64;
        for i in 0..p {
            for j in 0..p {
                s += kronecker_delta(&[i, j], &[i, j]) as i64;
            }
        }
        assert_eq!(s, 6);
        assert_eq!(trailing_contraction(3, &[], &[], 2), 6);
        assert_eq!(contraction_factor(3, 0, 2), 6);
        assert_eq!(trailing_contraction(3, &[0], &[1], 2), 0);
        assert_eq!(trailing_contraction(3, &[1], &[1], 2), 2);
    }

    #[test]
    fn diag_example() {
        let a = Matrix::<Rational>::from_i64_rows(&[&[1, 0], &[0, 2]]);
        let sys = EndoSystem::new(2, vec![a]).unwrap();
        assert_eq!(sigma_kronecker(&sys, &[0, 0]).unwrap(), Rational::from_i64(2));
        assert_eq!(sigma_kronecker(&sys, &[0]).unwrap(), Rational::from_i64(3));
        assert_eq!(sigma_kronecker(&sys, &[0, 0, 0]).unwrap(), Rational::from_i64(0));
        assert!(sigma_kronecker(&sys, &[0; 7]).is_err());
    }
}
