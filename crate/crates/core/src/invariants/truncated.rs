//! Polynomials in commuting t_1…t_q with everything of degree > p dropped.

use std::sync::Arc;

use crate::multiindex::IndexSpace;
use crate::scalar::Scalar;

use super::EndoSystem;

#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedPoly<S> {
    space: Arc<IndexSpace>,
    coeffs: Vec<S>,
}

impl<S: Scalar> TruncatedPoly<S> {
    pub fn zero(space: Arc<IndexSpace>) -> Self {
        let coeffs = vec![S::zero(); space.len()];
        TruncatedPoly { space, coeffs }
    }

    pub fn constant(space: Arc<IndexSpace>, c: S) -> Self {
        let mut p = Self::zero(space);
        p.coeffs[0] = c;
        p
    }

    pub fn coefficients(&self) -> &[S] {
        &self.coeffs
    }

    pub fn into_coefficients(self) -> Vec<S> {
        self.coeffs
    }

    /// `self += (c0 + Σ_α lin[α] t_α) · other`, truncated.
    pub fn add_linear_times(&mut self, c0: &S, lin: &[S], other: &Self) {
        for i in 0..self.coeffs.len() {
            let mut acc = self.coeffs[i].clone();
            if !c0.is_zero() {
                acc = acc + c0.clone() * other.coeffs[i].clone();
            }
            for (a, l) in lin.iter().enumerate() {
                if l.is_zero() {
                    continue;
                }
                if let Some(j) = self.space.flat_of(i, a) {
                    acc = acc + l.clone() * other.coeffs[j].clone();
                }
            }
            self.coeffs[i] = acc;
        }
    }

    pub fn neg_in_place(&mut self) {
        for c in &mut self.coeffs {
            *c = -c.clone();
        }
    }

    /// det(1 + Σ t_α A_α) by Laplace expansion along rows, memoized over the
    /// set of columns still available.  Cost is O(2^p · p · |space| · q).
    pub fn determinant_of_pencil(sys: &EndoSystem<S>, space: Arc<IndexSpace>) -> Self {
        let p = sys.p();
        let q = sys.q();
        assert_eq!(space.q(), q);
        if p == 0 {
            return Self::constant(space, S::one());
        }
        let full = (1usize << p) - 1;
        let mut memo: Vec<Option<TruncatedPoly<S>>> = vec![None; 1 << p];
        memo[0] = Some(Self::constant(space.clone(), S::one()));
        // subsets by increasing size; a subset of size k is expanded along row p-k
        let mut order: Vec<usize> = (1..=full).collect();
        order.sort_by_key(|s| s.count_ones());
        for set in order {
            let row = p - set.count_ones() as usize;
            let mut acc = Self::zero(space.clone());
            let mut before = 0usize;
            for col in 0..p {
                if set & (1 << col) == 0 {
                    continue;
                }
                let rest = memo[set & !(1 << col)].as_ref().unwrap();
                let c0 = if row == col { S::one() } else { S::zero() };
                let lin: Vec<S> = (0..q).map(|a| sys.matrix(a)[(row, col)].clone()).collect();
                if before.is_multiple_of(2) {
                    acc.add_linear_times(&c0, &lin, rest);
                } else {
                    let mut term = Self::zero(space.clone());
                    term.add_linear_times(&c0, &lin, rest);
                    term.neg_in_place();
                    for (x, y) in acc.coeffs.iter_mut().zip(term.coeffs) {
                        *x = x.clone() + y;
                    }
                }
                before += 1;
            }
            memo[set] = Some(acc);
        }
        memo[full].take().unwrap()
    }
}
