//! Per-sample terms of the divergence lemma and the section Y_u.
//!
//! For a fixed u, [`Evaluator`] turns a rotated sample into
//! σ_u, the four bracketed terms of the divergence formula, and the
//! coefficients of Y_u = Σ_{α,β} T_{β♭α♭u}(∇_{e_α}e_β)^⊤ + Σ_α σ_{α♭u} e_α.
//! [`NodeStencil`] adds the horizontally transported neighbours needed to
//! difference Y_u along the base.

use std::sync::Arc;

use serde::Serialize;

use super::geometry::{NodeData, Rotated, TorusGeometry};
use super::newton::FloatNewton;
use crate::error::{GntError, Result};
use crate::matrix::Matrix;
use crate::multiindex::{IndexSpace, MultiIndex};

/// Index bookkeeping for one multi-index u.
#[derive(Clone, Debug)]
pub struct UPlan {
    u: MultiIndex,
    space: Arc<IndexSpace>,
    pos: usize,
    /// (α, β, position of β♭α♭u) for every defined pair.
    pairs: Vec<(usize, usize, usize)>,
    /// (α, position of α♭u).
    flats: Vec<(usize, usize)>,
}

impl UPlan {
    pub fn new(u: &MultiIndex) -> Result<Self> {
        let q = u.q();
        if q == 0 {
            return Err(GntError::Domain("u needs at least one axis".into()));
        }
        let space = Arc::new(IndexSpace::new(q, u.length()));
        let pos = space.position(u).expect("u lies in its own space");
        let mut pairs = Vec::new();
        let mut flats = Vec::new();
        for al in 0..q {
            let Some(v) = u.try_flat(al) else { continue };
            flats.push((al, space.position(&v).expect("lower index")));
            for be in 0..q {
                if let Some(w) = v.try_flat(be) {
                    pairs.push((al, be, space.position(&w).expect("lower index")));
                }
            }
        }
        Ok(UPlan {
            u: u.clone(),
            space,
            pos,
            pairs,
            flats,
        })
    }

    pub fn u(&self) -> &MultiIndex {
        &self.u
    }

    pub fn q(&self) -> usize {
        self.u.q()
    }

    /// Ordered pairs (α, β) with β♭α♭u defined.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().map(|&(a, b, _)| (a, b))
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }
}

/// The pieces of the divergence formula at one point of P.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Terms {
    pub sigma: f64,
    /// |u|σ_u.
    pub lhs: f64,
    /// Σ κ δ_{αβ} tr T_w.
    pub curvature: f64,
    /// Σ g(div T*_w, (∇_{e_α}e_β)^⊤).
    pub div: f64,
    /// −Σ g(H_{D⊥}, T_w(∇_{e_α}e_β)^⊤).
    pub mean: f64,
    /// Σ_γ g((∇_{e_α}e_γ)^⊤, T_w(∇_{e_γ}e_β)^⊤).
    pub gamma: f64,
    /// Bracket per ordered pair, in [`UPlan::pairs`] order.
    pub per_pair: Vec<f64>,
}

impl Terms {
    pub fn rhs(&self) -> f64 {
        self.curvature + self.div + self.mean + self.gamma
    }

    /// Magnitude used to make residuals relative.
    pub fn scale(&self) -> f64 {
        self.lhs.abs() + self.curvature.abs() + self.div.abs() + self.mean.abs() + self.gamma.abs()
    }
}

/// Scratch space for evaluating a fixed u at many samples.
#[derive(Clone, Debug)]
pub struct Evaluator {
    plan: UPlan,
    p: usize,
    newton: FloatNewton,
    tv: Vec<f64>,
    /// D-coefficients of Y_u in the f basis.
    pub y: Vec<f64>,
    /// Coefficients σ_{α♭u} of the rotated normals e'_α.
    pub s: Vec<f64>,
}

impl Evaluator {
    pub fn new(plan: &UPlan, p: usize) -> Self {
        Evaluator {
            plan: plan.clone(),
            p,
            newton: FloatNewton::with_space(p, plan.space.clone()),
            tv: vec![0.0; p],
            y: vec![0.0; p],
            s: vec![0.0; plan.q()],
        }
    }

    pub fn plan(&self) -> &UPlan {
        &self.plan
    }

    pub fn newton(&self) -> &FloatNewton {
        &self.newton
    }

    /// σ_u at a rotated sample.
    pub fn sigma(&mut self, r: &Rotated) -> f64 {
        self.newton.fill(r, false);
        self.newton.sigma(self.plan.pos)
    }

    /// Fills `y` and `s` for the section Y_u; `newton` must be filled for `r`.
    fn section_coefficients(&mut self, r: &Rotated) {
        let p = self.p;
        self.y.fill(0.0);
        for &(al, be, w) in &self.plan.pairs {
            let t = self.newton.t(w);
            let c = r.c(al, be);
            for (i, yi) in self.y.iter_mut().enumerate() {
                *yi += (0..p).map(|k| t[i * p + k] * c[k]).sum::<f64>();
            }
        }
        self.s.fill(0.0);
        for &(al, v) in &self.plan.flats {
            self.s[al] = self.newton.sigma(v);
        }
    }

    /// Y_u coefficients at a rotated sample.
    pub fn section(&mut self, r: &Rotated) -> (&[f64], &[f64]) {
        self.newton.fill(r, false);
        self.section_coefficients(r);
        (&self.y, &self.s)
    }

    /// The divergence-formula terms at a rotated sample with curvature
    /// R_{α,β} = κ δ_{αβ} 1.
    pub fn terms(&mut self, nd: &NodeData, r: &Rotated, kappa: f64) -> Terms {
        let p = self.p;
        let q = self.plan.q();
        self.newton.fill(r, true);
        let sigma = self.newton.sigma(self.plan.pos);
        let mut out = Terms {
            sigma,
            lhs: self.plan.u.length() as f64 * sigma,
            per_pair: Vec::with_capacity(self.plan.pairs.len()),
            ..Terms::default()
        };
        for &(al, be, w) in &self.plan.pairs {
            let t = self.newton.t(w);
            let c_ab = r.c(al, be);
            for i in 0..p {
                self.tv[i] = (0..p).map(|k| t[i * p + k] * c_ab[k]).sum();
            }
            let curvature = if al == be {
                kappa * (0..p).map(|i| t[i * p + i]).sum::<f64>()
            } else {
                0.0
            };
            let div: f64 = self.newton.div_t_star(w).iter().zip(c_ab).map(|(d, c)| d * c).sum();
            let mean: f64 = -nd.h_perp.iter().zip(&self.tv).map(|(h, v)| h * v).sum::<f64>();
            let mut gamma = 0.0;
            for ga in 0..q {
                let c_ag = r.c(al, ga);
                let c_gb = r.c(ga, be);
                for i in 0..p {
                    let tc: f64 = (0..p).map(|k| t[i * p + k] * c_gb[k]).sum();
                    gamma += c_ag[i] * tc;
                }
            }
            out.curvature += curvature;
            out.div += div;
            out.mean += mean;
            out.gamma += gamma;
            out.per_pair.push(curvature + div + mean + gamma);
        }
        out
    }
}

/// Geometry at a node together with its 2n neighbours and the parallel
/// transports that carry a normal frame there.
///
/// Neighbour x ± h·∂_μ receives e·expm(±h Γ^⊥_μ(x))·g, which keeps the rotated
/// normals ∇^⊥-parallel to second order along the step.
#[derive(Clone, Debug)]
pub struct NodeStencil {
    pub nd: NodeData,
    /// ∂_μ F at the node.
    pub derivs: Vec<Matrix<f64>>,
    /// (neighbour data, transport), ordered μ = 0 (+, −), μ = 1 (+, −), …
    pub neighbours: Vec<(NodeData, Matrix<f64>)>,
    pub inv_2h: f64,
}

impl NodeStencil {
    pub fn new(geom: &TorusGeometry, node: usize) -> Self {
        let grid = geom.grid();
        let h = grid.spacing();
        let nd = geom.node_data(node);
        let derivs = geom.derivatives(node);
        let mut neighbours = Vec::with_capacity(2 * grid.n());
        for mu in 0..grid.n() {
            let gamma = nd.normal_connection(mu);
            for sign in [1i64, -1] {
                let nb = geom.node_data(grid.shift(node, mu, sign));
                let transport = gamma.scale(&(sign as f64 * h)).expm();
                neighbours.push((nb, transport));
            }
        }
        NodeStencil {
            nd,
            derivs,
            neighbours,
            inv_2h: 0.5 / h,
        }
    }
}

/// div_E Y_u at (x, g) by the product rule
/// Σ_i [f_i(y_i) + y_i div f_i] + Σ_α [e'_α(s_α) + s_α div^h e'_α],
/// with the coefficient derivatives taken as central differences along
/// horizontal curves.  Also returns the ambient Y_u at (x, g).
pub fn horizontal_divergence(
    ev: &mut Evaluator,
    st: &NodeStencil,
    g: &Matrix<f64>,
) -> (f64, Vec<f64>) {
    let nd = &st.nd;
    let (p, q) = (nd.p, nd.q);
    let n = p + q;
    let frame = &nd.frame;
    let r0 = nd.rotate(g);
    let (y0, s0) = {
        let (y, s) = ev.section(&r0);
        (y.to_vec(), s.to_vec())
    };
    let mut ambient = vec![0.0; n];
    for mu in 0..n {
        ambient[mu] = (0..p).map(|i| frame[(mu, i)] * y0[i]).sum::<f64>()
            + (0..q).map(|al| r0.e[(mu, al)] * s0[al]).sum::<f64>();
    }
    let mut div = 0.0;
    for mu in 0..n {
        let (nb_p, tr_p) = &st.neighbours[2 * mu];
        let (nb_m, tr_m) = &st.neighbours[2 * mu + 1];
        let rp = nb_p.rotate(&(tr_p * g));
        let (yp, sp) = {
            let (y, s) = ev.section(&rp);
            (y.to_vec(), s.to_vec())
        };
        let rm = nb_m.rotate(&(tr_m * g));
        let (ym, sm) = ev.section(&rm);
        // ∂^h_μ of each coefficient, paired with the μ-th ambient component
        for i in 0..p {
            div += frame[(mu, i)] * (yp[i] - ym[i]) * st.inv_2h;
        }
        for al in 0..q {
            div += r0.e[(mu, al)] * (sp[al] - sm[al]) * st.inv_2h;
        }
        // coefficient times the divergence of its vector field
        let d = &st.derivs[mu];
        for i in 0..p {
            div += y0[i] * d[(mu, i)];
        }
        let gamma = nd.normal_connection(mu);
        for al in 0..q {
            // μ-th component of (∂_μE_⊥ + E_⊥Γ_μ)g applied to column α
            let mut de = 0.0;
            for be in 0..q {
                let mut col = d[(mu, p + be)];
                for ga in 0..q {
                    col += frame[(mu, p + ga)] * gamma[(ga, be)];
                }
                de += col * g[(be, al)];
            }
            div += s0[al] * de;
        }
    }
    (div, ambient)
}
