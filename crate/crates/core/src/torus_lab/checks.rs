//! Integral and pointwise checks on a sampled torus geometry.

use serde::Serialize;

use super::geometry::{NodeData, TorusGeometry};
use super::integrate::{collect, integrate, sup};
use super::section::{horizontal_divergence, Evaluator, NodeStencil, UPlan};
use crate::error::{GntError, Result};
use crate::fiber::{group_volume, FiberRule, SphereRule};
use crate::gnt::{check_gn1, check_gn2, check_gn3, NewtonFamily};
use crate::invariants::EndoSystem;
use crate::matrix::Matrix;
use crate::multiindex::{enumerate_up_to, MultiIndex};
use crate::numerics::weighted_sum;

fn check_rule(geom: &TorusGeometry, rule: &FiberRule) -> Result<()> {
    if rule.q() != geom.q() {
        return Err(GntError::Dimension(format!(
            "fiber rule acts on q = {} but the geometry has q = {}",
            rule.q(),
            geom.q()
        )));
    }
    Ok(())
}

fn check_u(geom: &TorusGeometry, u: &MultiIndex) -> Result<()> {
    if u.q() != geom.q() {
        return Err(GntError::Dimension(format!(
            "u has {} entries but q = {}",
            u.q(),
            geom.q()
        )));
    }
    Ok(())
}

/// Weighted fiber combination of `k`-component values stored fiber-major.
fn fiber_combine(rule: &FiberRule, vals: &[f64], k: usize, out: &mut [f64]) {
    let mut col = vec![0.0; rule.len()];
    for (c, o) in out.iter_mut().enumerate().take(k) {
        for (s, slot) in col.iter_mut().enumerate() {
            *slot = vals[s * k + c];
        }
        *o = weighted_sum(rule.weights(), &col);
    }
}

/// Total extrinsic curvature σ^M_u and the per-fiber-node base integrals it
/// is combined from.
#[derive(Clone, Debug, Serialize)]
pub struct Curvature {
    pub u: Vec<u32>,
    /// ∫_M σ̂_u under normalized Haar measure.
    pub sigma_m: f64,
    /// Monte-Carlo standard error (zero for deterministic rules).
    pub stderr: f64,
    /// F(g_k) = ∫_M σ_u(x, e_0·g_k) dx.
    pub fiber_integrals: Vec<f64>,
    /// Factor to the metric (−tr AB) volume of the fiber.
    pub group_volume: f64,
}

pub fn extrinsic_curvature(geom: &TorusGeometry, rule: &FiberRule, u: &MultiIndex) -> Result<Curvature> {
    check_rule(geom, rule)?;
    check_u(geom, u)?;
    let plan = UPlan::new(u)?;
    let p = geom.p();
    let k = rule.len();
    let fiber_integrals = integrate(
        geom.grid().len(),
        k,
        || Evaluator::new(&plan, p),
        |ev, node, out| {
            let nd = geom.node_data(node);
            for (o, g) in out.iter_mut().zip(rule.nodes()) {
                *o = ev.sigma(&nd.rotate(g));
            }
        },
    );
    Ok(Curvature {
        u: u.entries().to_vec(),
        sigma_m: rule.combine(&fiber_integrals),
        stderr: rule.standard_error(&fiber_integrals),
        fiber_integrals,
        group_volume: group_volume(rule.group(), rule.q()),
    })
}

/// σ̂_u at every node.
pub fn curvature_field(geom: &TorusGeometry, rule: &FiberRule, u: &MultiIndex) -> Result<Vec<f64>> {
    check_rule(geom, rule)?;
    check_u(geom, u)?;
    let plan = UPlan::new(u)?;
    let p = geom.p();
    Ok(collect(
        geom.grid().len(),
        1,
        || (Evaluator::new(&plan, p), vec![0.0; rule.len()]),
        |(ev, vals), node, out| {
            let nd = geom.node_data(node);
            for (v, g) in vals.iter_mut().zip(rule.nodes()) {
                *v = ev.sigma(&nd.rotate(g));
            }
            out[0] = rule.combine(vals);
        },
    ))
}

/// Base quadrature of σ̂_u against fiber combination of base integrals.
#[derive(Clone, Debug, Serialize)]
pub struct Fubini {
    pub iterated: f64,
    pub joint: f64,
    pub relative: f64,
}

pub fn fubini(geom: &TorusGeometry, rule: &FiberRule, u: &MultiIndex) -> Result<Fubini> {
    let joint = extrinsic_curvature(geom, rule, u)?.sigma_m;
    let plan = UPlan::new(u)?;
    let p = geom.p();
    let iterated = integrate(
        geom.grid().len(),
        1,
        || (Evaluator::new(&plan, p), vec![0.0; rule.len()]),
        |(ev, vals), node, out| {
            let nd = geom.node_data(node);
            for (v, g) in vals.iter_mut().zip(rule.nodes()) {
                *v = ev.sigma(&nd.rotate(g));
            }
            out[0] = rule.combine(vals);
        },
    )[0];
    let relative = (iterated - joint).abs() / iterated.abs().max(joint.abs()).max(1.0);
    Ok(Fubini {
        iterated,
        joint,
        relative,
    })
}

/// Fiber-averaged section Ŷ_u: D-coefficients in the node's f basis and the
/// D⊥ part as an ambient vector.
#[derive(Clone, Debug, Serialize)]
pub struct YField {
    pub p: usize,
    pub n: usize,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl YField {
    /// D-component of Ŷ_u at a node, ambient coordinates.
    pub fn d_component(&self, geom: &TorusGeometry, node: usize) -> Vec<f64> {
        let f = geom.frame(node);
        let y = &self.y[node * self.p..(node + 1) * self.p];
        (0..self.n)
            .map(|mu| (0..self.p).map(|i| f[(mu, i)] * y[i]).sum())
            .collect()
    }

    /// D⊥-component of Ŷ_u at a node, ambient coordinates.
    pub fn perp_component(&self, node: usize) -> &[f64] {
        &self.z[node * self.n..(node + 1) * self.n]
    }
}

pub fn y_section(geom: &TorusGeometry, rule: &FiberRule, u: &MultiIndex) -> Result<YField> {
    check_rule(geom, rule)?;
    check_u(geom, u)?;
    if u.length() == 0 {
        return Err(GntError::Domain("Y_u needs |u| ≥ 1".into()));
    }
    let plan = UPlan::new(u)?;
    let (p, q, n) = (geom.p(), geom.q(), geom.n());
    let k = p + n;
    let vals = collect(
        geom.grid().len(),
        k,
        || (Evaluator::new(&plan, p), vec![0.0; rule.len() * k]),
        |(ev, buf), node, out| {
            let nd = geom.node_data(node);
            for (s, g) in rule.nodes().iter().enumerate() {
                let r = nd.rotate(g);
                let (y, sig) = ev.section(&r);
                let slot = &mut buf[s * k..(s + 1) * k];
                slot[..p].copy_from_slice(y);
                for mu in 0..n {
                    slot[p + mu] = (0..q).map(|al| r.e[(mu, al)] * sig[al]).sum();
                }
            }
            fiber_combine(rule, buf, k, out);
        },
    );
    let len = geom.grid().len();
    let mut y = Vec::with_capacity(len * p);
    let mut z = Vec::with_capacity(len * n);
    for chunk in vals.chunks(k) {
        y.extend_from_slice(&chunk[..p]);
        z.extend_from_slice(&chunk[p..]);
    }
    Ok(YField { p, n, y, z })
}

/// Both sides of the integral formula for σ^M_u.
#[derive(Clone, Debug, Serialize)]
pub struct Theorem {
    pub u: Vec<u32>,
    /// |u|σ^M_u.
    pub lhs: f64,
    pub rhs: f64,
    pub curvature: f64,
    pub div: f64,
    pub mean: f64,
    pub gamma: f64,
    /// ∫ of the sum of absolute term values, the relative-residual scale.
    pub scale: f64,
    /// Integrated bracket per ordered pair (α, β).
    pub per_pair: Vec<((usize, usize), f64)>,
}

impl Theorem {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }

    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.residual()
        } else {
            self.residual() / self.scale
        }
    }

    /// The two-index specialization: for u = α♯β♯0 the literal right side
    /// integrates only the (α, β) bracket.
    pub fn sigma2_literal(&self) -> Option<f64> {
        if self.u.iter().sum::<u32>() != 2 {
            return None;
        }
        let axes: Vec<usize> = self
            .u
            .iter()
            .enumerate()
            .flat_map(|(a, &k)| std::iter::repeat_n(a, k as usize))
            .collect();
        self.per_pair
            .iter()
            .find(|((a, b), _)| *a == axes[0] && *b == axes[1])
            .map(|(_, v)| *v)
    }
}

pub fn main_theorem(geom: &TorusGeometry, rule: &FiberRule, u: &MultiIndex, kappa: f64) -> Result<Theorem> {
    check_rule(geom, rule)?;
    check_u(geom, u)?;
    let plan = UPlan::new(u)?;
    let p = geom.p();
    let pairs: Vec<(usize, usize)> = plan.pairs().collect();
    let k = 6 + pairs.len();
    let v = integrate(
        geom.grid().len(),
        k,
        || (Evaluator::new(&plan, p), vec![0.0; rule.len() * k]),
        |(ev, buf), node, out| {
            let nd = geom.node_data(node);
            for (s, g) in rule.nodes().iter().enumerate() {
                let t = ev.terms(&nd, &nd.rotate(g), kappa);
                let slot = &mut buf[s * k..(s + 1) * k];
                slot[0] = t.lhs;
                slot[1] = t.curvature;
                slot[2] = t.div;
                slot[3] = t.mean;
                slot[4] = t.gamma;
                slot[5] = t.scale();
                slot[6..].copy_from_slice(&t.per_pair);
            }
            fiber_combine(rule, buf, k, out);
        },
    );
    Ok(Theorem {
        u: u.entries().to_vec(),
        lhs: v[0],
        rhs: v[1] + v[2] + v[3] + v[4],
        curvature: v[1],
        div: v[2],
        mean: v[3],
        gamma: v[4],
        scale: v[5],
        per_pair: pairs.into_iter().zip(v[6..].iter().copied()).collect(),
    })
}

/// Pointwise divergence lemma: sup over the given nodes and all fiber nodes
/// of |div_E Y_u − RHS|, and the sup of |div_E Y_u| + |RHS terms|.
pub fn div_lemma(geom: &TorusGeometry, rule: &FiberRule, u: &MultiIndex, nodes: &[usize]) -> Result<(f64, f64)> {
    check_rule(geom, rule)?;
    check_u(geom, u)?;
    if u.length() == 0 {
        return Err(GntError::Domain("the divergence lemma needs |u| ≥ 1".into()));
    }
    let plan = UPlan::new(u)?;
    let p = geom.p();
    let out = sup(nodes.len(), 2, || Evaluator::new(&plan, p), |ev, k, out| {
        let st = NodeStencil::new(geom, nodes[k]);
        out[0] = 0.0;
        out[1] = 0.0;
        for g in rule.nodes() {
            let (div, _) = horizontal_divergence(ev, &st, g);
            let t = ev.terms(&st.nd, &st.nd.rotate(g), 0.0);
            let rhs = -t.lhs + t.rhs();
            out[0] = out[0].max((div - rhs).abs());
            out[1] = out[1].max(div.abs() + t.scale());
        }
    });
    Ok((out[0], out[1]))
}

/// Stokes on M for the averaged section: ∫_M avg_g div_E Y_u, with the
/// integral of avg_g |div_E Y_u| as scale.
pub fn stokes(geom: &TorusGeometry, rule: &FiberRule, u: &MultiIndex) -> Result<(f64, f64)> {
    check_rule(geom, rule)?;
    check_u(geom, u)?;
    if u.length() == 0 {
        return Err(GntError::Domain("Y_u needs |u| ≥ 1".into()));
    }
    let plan = UPlan::new(u)?;
    let p = geom.p();
    let v = integrate(
        geom.grid().len(),
        2,
        || (Evaluator::new(&plan, p), vec![0.0; rule.len()], vec![0.0; rule.len()]),
        |(ev, divs, abs), node, out| {
            let st = NodeStencil::new(geom, node);
            for (s, g) in rule.nodes().iter().enumerate() {
                divs[s] = horizontal_divergence(ev, &st, g).0;
                abs[s] = divs[s].abs();
            }
            out[0] = rule.combine(divs);
            out[1] = rule.combine(abs);
        },
    );
    Ok((v[0], v[1]))
}

/// Averaging commutes with the horizontal divergence: sup_x of
/// |avg_g div_E Y_u − div Ŷ_u| with Ŷ_u differenced as a field on M.
pub fn average_divergence_consistency(
    geom: &TorusGeometry,
    rule: &FiberRule,
    u: &MultiIndex,
) -> Result<(f64, f64)> {
    let field = y_section(geom, rule, u)?;
    let plan = UPlan::new(u)?;
    let (p, n) = (geom.p(), geom.n());
    let grid = geom.grid();
    let inv_2h = 0.5 / grid.spacing();
    let out = sup(
        grid.len(),
        2,
        || (Evaluator::new(&plan, p), vec![0.0; rule.len()]),
        |(ev, divs), node, out| {
            let st = NodeStencil::new(geom, node);
            for (s, g) in rule.nodes().iter().enumerate() {
                divs[s] = horizontal_divergence(ev, &st, g).0;
            }
            let avg = rule.combine(divs);
            let frame = &st.nd.frame;
            let y0 = &field.y[node * p..(node + 1) * p];
            let mut div = 0.0;
            for mu in 0..n {
                let up = grid.shift(node, mu, 1);
                let dn = grid.shift(node, mu, -1);
                for i in 0..p {
                    let dy = field.y[up * p + i] - field.y[dn * p + i];
                    div += frame[(mu, i)] * dy * inv_2h + y0[i] * st.derivs[mu][(mu, i)];
                }
                div += (field.z[up * n + mu] - field.z[dn * n + mu]) * inv_2h;
            }
            out[0] = avg - div;
            out[1] = avg.abs() + div.abs();
        },
    );
    Ok((out[0], out[1]))
}

/// div T*_u by the recurrence and by the unrolled sum at one sample.
pub fn div_t_star_pair(ev: &mut Evaluator, nd: &NodeData, g: &Matrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let r = nd.rotate(g);
    let p = nd.p;
    let q = nd.q;
    ev.terms(nd, &r, 0.0);
    let newton = ev.newton();
    let u = ev.plan().u().clone();
    let space = newton.space().clone();
    let pos = space.position(&u).expect("u in space");
    let recurrence = newton.div_t_star(pos).to_vec();

    // Σ_s Σ (−1)^{s−1} A*_{α1}…A*_{α(s−1)} (A_β − A*_β) T_{αs♭…α1♭u} (∇_{e_β}e_{αs})^⊤
    let adj = |al: usize, v: &[f64]| -> Vec<f64> {
        (0..p).map(|row| (0..p).map(|k| r.a(al, row, k) * v[k]).sum()).collect()
    };
    let mut unrolled = vec![0.0; p];
    // stack of (current index, prefix sign and the chain of α's)
    let mut stack: Vec<(MultiIndex, Vec<usize>)> = vec![(u.clone(), vec![])];
    while let Some((v, chain)) = stack.pop() {
        for al in 0..q {
            let Some(w) = v.try_flat(al) else { continue };
            let t = newton.t(space.position(&w).expect("lower index"));
            let mut inner = vec![0.0; p];
            for be in 0..q {
                let c = r.c(be, al);
                let tc: Vec<f64> = (0..p).map(|i| (0..p).map(|k| t[i * p + k] * c[k]).sum()).collect();
                for row in 0..p {
                    inner[row] += (0..p)
                        .map(|k| (r.a(be, k, row) - r.a(be, row, k)) * tc[k])
                        .sum::<f64>();
                }
            }
            for &a in chain.iter().rev() {
                inner = adj(a, &inner);
            }
            let s = chain.len() + 1;
            let sign = if s % 2 == 1 { 1.0 } else { -1.0 };
            for (o, x) in unrolled.iter_mut().zip(&inner) {
                *o += sign * x;
            }
            let mut next = chain.clone();
            next.push(al);
            stack.push((w, next));
        }
    }
    (recurrence, unrolled)
}

/// sup over nodes and fiber nodes of |recurrence − unrolled| for div T*_u.
pub fn div_t_star_check(geom: &TorusGeometry, rule: &FiberRule, u: &MultiIndex) -> Result<(f64, f64)> {
    check_rule(geom, rule)?;
    check_u(geom, u)?;
    let plan = UPlan::new(u)?;
    let p = geom.p();
    let out = sup(
        geom.grid().len(),
        2,
        || Evaluator::new(&plan, p),
        |ev, node, out| {
            let nd = geom.node_data(node);
            out[0] = 0.0;
            out[1] = 0.0;
            for g in rule.nodes() {
                let (a, b) = div_t_star_pair(ev, &nd, g);
                for (x, y) in a.iter().zip(&b) {
                    out[0] = out[0].max((x - y).abs());
                    out[1] = out[1].max(x.abs());
                }
            }
        },
    );
    Ok((out[0], out[1]))
}

/// Walczak integrand terms and the three pointwise identities.
#[derive(Clone, Debug, Serialize)]
pub struct Walczak {
    pub h_d: f64,
    pub h_perp: f64,
    pub b_d: f64,
    pub b_perp: f64,
    pub t_d: f64,
    pub t_perp: f64,
    /// ∫(−|H_D|² − |H_{D⊥}|² + |B_D|² + |B_{D⊥}|² − |T_D|² − |T_{D⊥}|²).
    pub integral: f64,
    /// ∫ of the sum of the six absolute terms.
    pub scale: f64,
    /// sup |Σ(tr A_α)² − |H_D|²|, sup |Σ tr A_α² − (|B_D|² − |T_D|²)|, and the
    /// normal-pairing identity.
    pub pointwise: [f64; 3],
}

impl Walczak {
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.integral.abs()
        } else {
            self.integral.abs() / self.scale
        }
    }
}

/// Squared norms from the connection table directly, with unrotated frames:
/// [|H_D|², |H_⊥|², |B_D|², |B_⊥|², |T_D|², |T_⊥|²].
fn walczak_norms(nd: &NodeData, lambda: impl Fn(usize, usize, usize) -> f64) -> [f64; 6] {
    let (p, q) = (nd.p, nd.q);
    let n = p + q;
    let frame = &nd.frame;
    let ambient = |coef: &dyn Fn(usize) -> f64, cols: std::ops::Range<usize>| -> f64 {
        (0..n)
            .map(|mu| {
                let v: f64 = cols.clone().map(|c| frame[(mu, c)] * coef(c)).sum();
                v * v
            })
            .sum()
    };
    let h_d = ambient(&|c| (0..p).map(|i| lambda(i, i, c)).sum(), p..n);
    let h_perp = ambient(&|c| (p..n).map(|a| lambda(a, a, c)).sum(), 0..p);
    let (mut b_d, mut t_d, mut b_perp, mut t_perp) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..p {
        for j in 0..p {
            b_d += ambient(&|c| 0.5 * (lambda(i, j, c) + lambda(j, i, c)), p..n);
            t_d += ambient(&|c| 0.5 * (lambda(i, j, c) - lambda(j, i, c)), p..n);
        }
    }
    for a in p..n {
        for b in p..n {
            b_perp += ambient(&|c| 0.5 * (lambda(a, b, c) + lambda(b, a, c)), 0..p);
            t_perp += ambient(&|c| 0.5 * (lambda(a, b, c) - lambda(b, a, c)), 0..p);
        }
    }
    [h_d, h_perp, b_d, b_perp, t_d, t_perp]
}

/// Walczak formula; `probe` is the fiber element used for the pointwise
/// identities (any orthogonal q×q matrix).
pub fn walczak(geom: &TorusGeometry, probe: &Matrix<f64>) -> Result<Walczak> {
    let (p, q) = (geom.p(), geom.q());
    if probe.rows() != q || probe.orthogonality_defect() > 1e-10 {
        return Err(GntError::Dimension(format!("probe must be orthogonal {q}×{q}")));
    }
    let len = geom.grid().len();
    let v = integrate(len, 8, || (), |_, node, out| {
        let conn = geom.connection(node);
        let nd = NodeData::from_connection(&conn);
        let w = walczak_norms(&nd, |c, a, b| conn.lambda(c, a, b));
        let signs = [-1.0, -1.0, 1.0, 1.0, -1.0, -1.0];
        out[..6].copy_from_slice(&w);
        out[6] = w.iter().zip(signs).map(|(x, s)| s * x).sum();
        out[7] = w.iter().sum();
    });
    let pointwise = sup(len, 3, || (), |_, node, out| {
        let conn = geom.connection(node);
        let nd = NodeData::from_connection(&conn);
        let w = walczak_norms(&nd, |c, a, b| conn.lambda(c, a, b));
        let r = nd.rotate(probe);
        let trace_sq: f64 = (0..q)
            .map(|al| {
                let t: f64 = (0..p).map(|i| r.a(al, i, i)).sum();
                t * t
            })
            .sum();
        let tr_a2: f64 = (0..q)
            .map(|al| {
                (0..p)
                    .flat_map(|i| (0..p).map(move |j| (i, j)))
                    .map(|(i, j)| r.a(al, i, j) * r.a(al, j, i))
                    .sum::<f64>()
            })
            .sum();
        let pairing: f64 = (0..q)
            .flat_map(|al| (0..q).map(move |ga| (al, ga)))
            .map(|(al, ga)| r.c(al, ga).iter().zip(r.c(ga, al)).map(|(x, y)| x * y).sum::<f64>())
            .sum();
        out[0] = trace_sq - w[0];
        out[1] = tr_a2 - (w[2] - w[4]);
        out[2] = pairing - (w[3] - w[5]);
    });
    Ok(Walczak {
        h_d: v[0],
        h_perp: v[1],
        b_d: v[2],
        b_perp: v[3],
        t_d: v[4],
        t_perp: v[5],
        integral: v[6],
        scale: v[7],
        pointwise: [pointwise[0], pointwise[1], pointwise[2]],
    })
}

/// Nodes of the coarse 8^n lattice, shared by every resolution divisible by 8.
pub fn probe_nodes(geom: &TorusGeometry) -> Result<Vec<usize>> {
    let m = geom.m();
    if !m.is_multiple_of(8) {
        return Err(GntError::Domain(format!("probe lattice needs m divisible by 8, got {m}")));
    }
    let n = geom.n();
    let step = m / 8;
    let count = 8usize.pow(n as u32);
    Ok((0..count)
        .map(|mut k| {
            let multi: Vec<usize> = (0..n)
                .map(|_| {
                    let c = k % 8;
                    k /= 8;
                    c * step
                })
                .collect();
            geom.grid().index(&multi)
        })
        .collect())
}

/// Ambient shape operator Â = F_D M F_Dᵀ of the single normal (q = 1).
fn ambient_shape(nd: &NodeData) -> Matrix<f64> {
    let (p, n) = (nd.p, nd.p + nd.q);
    let f = &nd.frame;
    // Â f_i = Σ_j (A)_{ij} f_j
    Matrix::from_fn(n, n, |r, c| {
        let mut acc = 0.0;
        for i in 0..p {
            for j in 0..p {
                acc += f[(r, j)] * nd.a[i * p + j] * f[(c, i)];
            }
        }
        acc
    })
}

/// Codazzi on the flat torus for q = 1, at the probe nodes.
#[derive(Clone, Debug, Serialize)]
pub struct Codazzi {
    /// sup of |(∇^⊤_{f_i}A)f_j − (∇^⊤_{f_j}A)f_i + (∇_{[f_i,f_j]^⊥}N)^⊤|.
    pub residual: f64,
    /// The same with the opposite sign on the bracket term.
    pub opposite_sign: f64,
    /// sup of |left side| + |bracket term|.
    pub scale: f64,
}

pub fn codazzi(geom: &TorusGeometry) -> Result<Codazzi> {
    if geom.q() != 1 {
        return Err(GntError::Domain("the Codazzi check needs q = 1".into()));
    }
    let nodes = probe_nodes(geom)?;
    let (p, n) = (geom.p(), geom.n());
    let grid = geom.grid();
    let inv_2h = 0.5 / grid.spacing();
    let out = sup(nodes.len(), 3, || (), |_, k, out| {
        let node = nodes[k];
        let conn = geom.connection(node);
        let nd = NodeData::from_connection(&conn);
        let f = &nd.frame;
        let dshape: Vec<Matrix<f64>> = (0..n)
            .map(|mu| {
                let up = ambient_shape(&geom.node_data(grid.shift(node, mu, 1)));
                let dn = ambient_shape(&geom.node_data(grid.shift(node, mu, -1)));
                (&up - &dn).scale(&inv_2h)
            })
            .collect();
        // D_{f_i}Â
        let along: Vec<Matrix<f64>> = (0..p)
            .map(|i| {
                let mut acc = Matrix::zeros(n, n);
                for (mu, d) in dshape.iter().enumerate() {
                    acc.add_scaled(&f[(mu, i)], d);
                }
                acc
            })
            .collect();
        let c11: Vec<f64> = (0..n)
            .map(|mu| (0..p).map(|k| f[(mu, k)] * nd.c[k]).sum())
            .collect();
        out.fill(0.0);
        for i in 0..p {
            for j in 0..p {
                let fi = f.column(i);
                let fj = f.column(j);
                let raw: Vec<f64> = (0..n)
                    .map(|r| {
                        (0..n).map(|c| along[i][(r, c)] * fj[c] - along[j][(r, c)] * fi[c]).sum()
                    })
                    .collect();
                let bracket = conn.lambda(i, j, p) - conn.lambda(j, i, p);
                for l in 0..p {
                    let lhs: f64 = (0..n).map(|mu| f[(mu, l)] * raw[mu]).sum();
                    let term: f64 = bracket * (0..n).map(|mu| f[(mu, l)] * c11[mu]).sum::<f64>();
                    out[0] = out[0].max((lhs + term).abs());
                    out[1] = out[1].max((lhs - term).abs());
                    out[2] = out[2].max(lhs.abs() + term.abs());
                }
            }
        }
    });
    Ok(Codazzi {
        residual: out[0],
        opposite_sign: out[1],
        scale: out[2],
    })
}

/// σ_k of one matrix by Newton's identities on power traces.
pub fn elementary_symmetric(m: &Matrix<f64>, k: usize) -> f64 {
    let p = m.rows();
    if k > p {
        return 0.0;
    }
    let mut power = Matrix::identity(p);
    let mut traces = vec![0.0; k + 1];
    for t in traces.iter_mut().skip(1) {
        power = &power * m;
        *t = power.trace();
    }
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    for j in 1..=k {
        let mut acc = 0.0;
        for i in 1..=j {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc += sign * e[j - i] * traces[i];
        }
        e[j] = acc / j as f64;
    }
    e[k]
}

/// σ^M_{(k,0,…,0)} through the unit sphere of D⊥: ∫_M avg_N σ_k(A_N).
pub fn one_operator_reduction(geom: &TorusGeometry, sphere: &SphereRule, k: usize) -> Result<f64> {
    let (p, q) = (geom.p(), geom.q());
    if sphere.points.first().map(Vec::len) != Some(q) {
        return Err(GntError::Dimension("sphere points must have q coordinates".into()));
    }
    let v = integrate(geom.grid().len(), 1, || vec![0.0; sphere.points.len()], |vals, node, out| {
        let nd = geom.node_data(node);
        for (v, pt) in vals.iter_mut().zip(&sphere.points) {
            // operator matrix of A_N = Σ N_γ A_γ
            let m = Matrix::from_fn(p, p, |j, i| {
                (0..q).map(|ga| pt[ga] * nd.a[(ga * p + i) * p + j]).sum()
            });
            *v = elementary_symmetric(&m, k);
        }
        out[0] = weighted_sum(&sphere.weights, vals);
    });
    Ok(v[0])
}

/// GN1–GN3 on float samples: max residual over nodes, fiber nodes and
/// |u| ≤ p, with σ from the determinant and compared to the GN1 fast path.
pub fn sample_algebra(geom: &TorusGeometry, rule: &FiberRule, nodes: &[usize]) -> Result<f64> {
    check_rule(geom, rule)?;
    let (p, q) = (geom.p(), geom.q());
    let us = enumerate_up_to(q, p);
    let out = sup(nodes.len(), 1, || (), |_, k, out| {
        let nd = geom.node_data(nodes[k]);
        let mut worst: f64 = 0.0;
        for g in rule.nodes() {
            let r = nd.rotate(g);
            let sys = EndoSystem::new(p, r.operator_matrices()).expect("square");
            let fam = NewtonFamily::recurrence(&sys, p);
            let fast = NewtonFamily::gn1(&sys, p);
            for u in &us {
                for res in [check_gn1(&fam, u), check_gn2(&fam, u), check_gn3(&fam, u)] {
                    worst = worst.max(res.map(f64::abs).unwrap_or(0.0));
                }
                let a = fam.sigma(u).unwrap_or(0.0);
                let b = fast.sigma(u).unwrap_or(0.0);
                worst = worst.max((a - b).abs());
            }
        }
        out[0] = worst;
    });
    Ok(out[0])
}

/// div T*_u at (x, g) by differencing the ambient operator F_D T_uᵀ F_Dᵀ along
/// horizontal curves: Σ_i P_D (D_{f_i} T̂*) f_i in the f basis.
pub fn div_t_star_difference(ev: &mut Evaluator, st: &NodeStencil, g: &Matrix<f64>) -> Vec<f64> {
    let nd = &st.nd;
    let (p, n) = (nd.p, nd.p + nd.q);
    let u = ev.plan().u().clone();
    let ambient_adjoint = |ev: &mut Evaluator, nd: &NodeData, g: &Matrix<f64>| -> Matrix<f64> {
        let r = nd.rotate(g);
        ev.sigma(&r);
        let newton = ev.newton();
        let t = newton.t(newton.position(&u).expect("u in space"));
        let f = &nd.frame;
        // T* f_i = Σ_j (T*)_{ji} f_j with (T*)_{ji} = T_{ij}: the operator matrix of T* is tᵀ
        Matrix::from_fn(n, n, |a, b| {
            let mut acc = 0.0;
            for i in 0..p {
                for j in 0..p {
                    acc += f[(a, j)] * t[i * p + j] * f[(b, i)];
                }
            }
            acc
        })
    };
    let mut d = Vec::with_capacity(n);
    for mu in 0..n {
        let (nb_p, tr_p) = &st.neighbours[2 * mu];
        let (nb_m, tr_m) = &st.neighbours[2 * mu + 1];
        let up = ambient_adjoint(ev, nb_p, &(tr_p * g));
        let dn = ambient_adjoint(ev, nb_m, &(tr_m * g));
        d.push((&up - &dn).scale(&st.inv_2h));
    }
    let f = &nd.frame;
    let mut out = vec![0.0; p];
    for i in 0..p {
        // (Σ_μ f_i^μ D_μ T̂*) f_i
        let v: Vec<f64> = (0..n)
            .map(|a| {
                (0..n)
                    .map(|mu| f[(mu, i)] * (0..n).map(|b| d[mu][(a, b)] * f[(b, i)]).sum::<f64>())
                    .sum()
            })
            .collect();
        for (k, o) in out.iter_mut().enumerate() {
            *o += (0..n).map(|a| f[(a, k)] * v[a]).sum::<f64>();
        }
    }
    out
}

/// The second-derivative identity for e_α((A_β)_{ij}) at nodes where the
/// frame is gauged so that ∇^⊥e_α and ∇^⊤f_i vanish.
#[derive(Clone, Debug, Serialize)]
pub struct LemLoc {
    /// sup over nodes, α, β, i, j of |LHS − RHS|.
    pub residual: f64,
    /// sup of |LHS| + |RHS|.
    pub scale: f64,
    /// sup of the gauged connection blocks at the nodes (should be O(h²)).
    pub gauge_defect: f64,
}

/// Frame at `y` rotated by the first-order gauge around `x0`:
/// F(y)·blockdiag(expm(Σ d_μ Γ^⊤_μ(x0)), expm(Σ d_μ Γ^⊥_μ(x0))) with d the
/// wrapped displacement y − x0.
fn gauged_frame(geom: &TorusGeometry, nd0: &NodeData, x0: usize, y: usize) -> Matrix<f64> {
    let grid = geom.grid();
    let (p, q, n) = (geom.p(), geom.q(), geom.n());
    let m = grid.m() as i64;
    let a = grid.multi(x0);
    let b = grid.multi(y);
    let d: Vec<f64> = (0..n)
        .map(|mu| {
            let mut k = (b[mu] as i64 - a[mu] as i64).rem_euclid(m);
            if k > m / 2 {
                k -= m;
            }
            k as f64 * grid.spacing()
        })
        .collect();
    let mut top = Matrix::zeros(p, p);
    let mut perp = Matrix::zeros(q, q);
    for (mu, dm) in d.iter().enumerate() {
        top.add_scaled(dm, &nd0.tangential_connection(mu));
        perp.add_scaled(dm, &nd0.normal_connection(mu));
    }
    let (top, perp) = (top.expm(), perp.expm());
    let gauge = Matrix::from_fn(n, n, |r, c| match (r < p, c < p) {
        (true, true) => top[(r, c)],
        (false, false) => perp[(r - p, c - p)],
        _ => 0.0,
    });
    &geom.frame(y) * &gauge
}

/// Gauged node data at `y` from central differences of gauged frames.
fn gauged_node(geom: &TorusGeometry, nd0: &NodeData, x0: usize, y: usize) -> NodeData {
    let grid = geom.grid();
    let inv_2h = 0.5 / grid.spacing();
    let frame = gauged_frame(geom, nd0, x0, y);
    let derivs: Vec<Matrix<f64>> = (0..geom.n())
        .map(|mu| {
            let up = gauged_frame(geom, nd0, x0, grid.shift(y, mu, 1));
            let dn = gauged_frame(geom, nd0, x0, grid.shift(y, mu, -1));
            (&up - &dn).scale(&inv_2h)
        })
        .collect();
    NodeData::from_connection(&super::geometry::Connection::from_frame(geom.p(), geom.q(), frame, &derivs))
}

pub fn lem_loc(geom: &TorusGeometry, nodes: &[usize]) -> Result<LemLoc> {
    let (p, q, n) = (geom.p(), geom.q(), geom.n());
    let grid = geom.grid();
    let inv_2h = 0.5 / grid.spacing();
    let out = sup(nodes.len(), 3, || (), |_, k, out| {
        let x0 = nodes[k];
        let nd0 = geom.node_data(x0);
        let here = gauged_node(geom, &nd0, x0, x0);
        let f = &here.frame;
        let nbrs: Vec<(NodeData, NodeData)> = (0..n)
            .map(|mu| {
                (
                    gauged_node(geom, &nd0, x0, grid.shift(x0, mu, 1)),
                    gauged_node(geom, &nd0, x0, grid.shift(x0, mu, -1)),
                )
            })
            .collect();
        // (∇_{e_α}e_β)^⊤ as an ambient vector
        let c_amb = |nd: &NodeData, al: usize, be: usize| -> Vec<f64> {
            (0..n)
                .map(|r| (0..p).map(|i| nd.frame[(r, i)] * nd.c[(al * q + be) * p + i]).sum())
                .collect()
        };
        let a = |nd: &NodeData, al: usize, i: usize, j: usize| nd.a[(al * p + i) * p + j];
        out.fill(0.0);
        for mu in 0..n {
            for (b_, c_) in [(0, p), (p, n)] {
                for r in b_..c_ {
                    for s in b_..c_ {
                        out[2] = out[2].max(here.omega[mu][(r, s)].abs());
                    }
                }
            }
        }
        for al in 0..q {
            for be in 0..q {
                // ∂_μ of the ambient (∇_{e_α}e_β)^⊤
                let dc: Vec<Vec<f64>> = nbrs
                    .iter()
                    .map(|(up, dn)| {
                        let cu = c_amb(up, al, be);
                        let cd = c_amb(dn, al, be);
                        cu.iter().zip(&cd).map(|(x, y)| (x - y) * inv_2h).collect()
                    })
                    .collect();
                for i in 0..p {
                    for j in 0..p {
                        let lhs: f64 = (0..n)
                            .map(|mu| {
                                f[(mu, p + al)] * (a(&nbrs[mu].0, be, i, j) - a(&nbrs[mu].1, be, i, j)) * inv_2h
                            })
                            .sum();
                        let aa: f64 = (0..p).map(|k| a(&here, al, i, k) * a(&here, be, k, j)).sum();
                        let nabla: f64 = (0..n)
                            .map(|r| {
                                let d: f64 = (0..n).map(|mu| f[(mu, i)] * dc[mu][r]).sum();
                                d * f[(r, j)]
                            })
                            .sum();
                        let pair: f64 = (0..q)
                            .map(|ga| here.c[(al * q + ga) * p + i] * here.c[(ga * q + be) * p + j])
                            .sum();
                        let rhs = aa - nabla + pair;
                        out[0] = out[0].max((lhs - rhs).abs());
                        out[1] = out[1].max(lhs.abs() + rhs.abs());
                    }
                }
            }
        }
    });
    Ok(LemLoc {
        residual: out[0],
        scale: out[1],
        gauge_defect: out[2],
    })
}
