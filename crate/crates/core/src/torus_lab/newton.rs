//! Allocation-free float evaluation of σ_u, T_u and div T*_u at one sample.
//!
//! The σ values come from GN1, |u|σ_u = Σ_α tr(A_α T_{α♭u}); the operators
//! from the left recurrence.  Operator matrices follow the column convention:
//! M_α[j][i] = (A_α)_{ij}.

use std::sync::Arc;

use super::geometry::Rotated;
use crate::multiindex::{IndexSpace, MultiIndex};

#[derive(Clone, Debug)]
pub struct FloatNewton {
    p: usize,
    q: usize,
    space: Arc<IndexSpace>,
    sigma: Vec<f64>,
    t: Vec<f64>,
    div: Vec<f64>,
    tmp: Vec<f64>,
}

impl FloatNewton {
    pub fn new(p: usize, q: usize, max_len: usize) -> Self {
        Self::with_space(p, Arc::new(IndexSpace::new(q, max_len)))
    }

    pub fn with_space(p: usize, space: Arc<IndexSpace>) -> Self {
        let len = space.len();
        FloatNewton {
            p,
            q: space.q(),
            space,
            sigma: vec![0.0; len],
            t: vec![0.0; len * p * p],
            div: vec![0.0; len * p],
            tmp: vec![0.0; p],
        }
    }

    pub fn space(&self) -> &Arc<IndexSpace> {
        &self.space
    }

    pub fn position(&self, u: &MultiIndex) -> Option<usize> {
        self.space.position(u)
    }

    #[inline]
    pub fn sigma(&self, idx: usize) -> f64 {
        self.sigma[idx]
    }

    /// T_u row-major, operator convention.
    #[inline]
    pub fn t(&self, idx: usize) -> &[f64] {
        let pp = self.p * self.p;
        &self.t[idx * pp..(idx + 1) * pp]
    }

    /// div T*_u in the f basis (valid after `fill` with `with_div`).
    #[inline]
    pub fn div_t_star(&self, idx: usize) -> &[f64] {
        &self.div[idx * self.p..(idx + 1) * self.p]
    }

    /// Fills σ and T for every index of the space, and optionally the flat
    /// (R = 0) divergence recurrence
    /// div T*_u = −Σ_α A*_α div T*_{α♭u} + Σ_{α,β} (A_β − A*_β) T_{α♭u} (∇_{e_β}e_α)^⊤.
    ///
    /// The sign of the last sum follows Codazzi in the form
    /// (∇_X A_N)Y − (∇_Y A_N)X = −(R(X,Y)N)^⊤ − (∇_{[X,Y]^⊥}N)^⊤.
    pub fn fill(&mut self, r: &Rotated, with_div: bool) {
        let p = self.p;
        let q = self.q;
        let pp = p * p;
        debug_assert_eq!((r.p, r.q), (p, q));
        self.sigma[0] = 1.0;
        self.t[..pp].fill(0.0);
        for i in 0..p {
            self.t[i * p + i] = 1.0;
        }
        self.div[..p].fill(0.0);
        for idx in 1..self.space.len() {
            let len = self.space.index(idx).length();
            let (done, rest) = self.t.split_at_mut(idx * pp);
            let tu = &mut rest[..pp];
            tu.fill(0.0);
            let mut trace = 0.0;
            for al in 0..q {
                let Some(v) = self.space.flat_of(idx, al) else {
                    continue;
                };
                let tv = &done[v * pp..(v + 1) * pp];
                // (M_α T_v)[row][col] = Σ_k (A_α)_{k,row} T_v[k][col]
                for row in 0..p {
                    for k in 0..p {
                        let m = r.a(al, k, row);
                        if m == 0.0 {
                            continue;
                        }
                        for col in 0..p {
                            tu[row * p + col] -= m * tv[k * p + col];
                        }
                    }
                }
            }
            for i in 0..p {
                trace -= tu[i * p + i];
            }
            let sigma = if len <= p { trace / len as f64 } else { 0.0 };
            self.sigma[idx] = sigma;
            for i in 0..p {
                tu[i * p + i] += sigma;
            }
        }
        if !with_div {
            return;
        }
        for idx in 1..self.space.len() {
            let (done, rest) = self.div.split_at_mut(idx * p);
            let du = &mut rest[..p];
            du.fill(0.0);
            for al in 0..q {
                let Some(v) = self.space.flat_of(idx, al) else {
                    continue;
                };
                let dv = &done[v * p..(v + 1) * p];
                // −A*_α div T*_v, with (M_αᵀ)[row][k] = (A_α)_{row,k}
                for row in 0..p {
                    let mut acc = 0.0;
                    for k in 0..p {
                        acc += r.a(al, row, k) * dv[k];
                    }
                    du[row] -= acc;
                }
                let tv = &self.t[v * pp..(v + 1) * pp];
                for be in 0..q {
                    let c = r.c(be, al);
                    for k in 0..p {
                        self.tmp[k] = (0..p).map(|l| tv[k * p + l] * c[l]).sum();
                    }
                    // (M_β − M_βᵀ)[row][k] = (A_β)_{k,row} − (A_β)_{row,k}
                    for row in 0..p {
                        let mut acc = 0.0;
                        for k in 0..p {
                            acc += (r.a(be, k, row) - r.a(be, row, k)) * self.tmp[k];
                        }
                        du[row] += acc;
                    }
                }
            }
        }
    }
}
