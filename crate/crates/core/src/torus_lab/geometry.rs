//! Discrete extrinsic geometry of a frame field on the flat torus.
//!
//! Everything comes from the skew part of Fᵀ∂_μF: that keeps the discrete
//! connection metric, so B, T and the shape operators satisfy the algebraic
//! identities of the continuum to rounding error at any resolution.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::frame::FrameField;
use super::grid::Grid;
use crate::error::{GntError, Result};
use crate::matrix::Matrix;

/// Largest number of stored floats the spectral mode may allocate.
pub const SPECTRAL_CAP: usize = 1 << 24;

/// Default bound on the fraction of Fourier energy above a quarter of the
/// grid's frequency range.
pub const DEFAULT_SMOOTHNESS_TOL: f64 = 1e-6;

/// Lines per axis sampled by the smoothness check.
const SMOOTHNESS_LINES: usize = 8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DerivativeMode {
    /// Second-order central differences of frames at neighbouring nodes.
    #[default]
    Central,
    /// Exact derivatives of the frame field.
    Analytic,
    /// FFT differentiation along grid lines (stored; capped).
    Spectral,
}

/// A frame field sampled on a uniform grid.
#[derive(Clone, Debug)]
pub struct TorusGeometry {
    field: FrameField,
    grid: Grid,
    mode: DerivativeMode,
    high_frequency: f64,
    /// Spectral mode only: per node, n derivative matrices, row-major.
    spectral: Option<Vec<f64>>,
}

impl TorusGeometry {
    pub fn new(field: FrameField, m: usize, mode: DerivativeMode) -> Result<Self> {
        Self::with_tolerance(field, m, mode, DEFAULT_SMOOTHNESS_TOL)
    }

    /// Builds the geometry, refusing grids too coarse for the field.
    pub fn with_tolerance(
        field: FrameField,
        m: usize,
        mode: DerivativeMode,
        smoothness_tol: f64,
    ) -> Result<Self> {
        if m < 4 {
            return Err(GntError::Refused(format!("resolution m = {m} below 4")));
        }
        let grid = Grid::new(field.n(), m);
        let mut geom = TorusGeometry {
            field,
            grid,
            mode,
            high_frequency: 0.0,
            spectral: None,
        };
        geom.high_frequency = geom.measure_high_frequency();
        if geom.high_frequency > smoothness_tol {
            return Err(GntError::Refused(format!(
                "frame field too rough for m = {m}: Fourier energy fraction {:.3e} above m/4 exceeds {:.1e}",
                geom.high_frequency, smoothness_tol
            )));
        }
        if mode == DerivativeMode::Spectral {
            geom.spectral = Some(geom.spectral_derivatives()?);
        }
        Ok(geom)
    }

    pub fn field(&self) -> &FrameField {
        &self.field
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mode(&self) -> DerivativeMode {
        self.mode
    }

    pub fn p(&self) -> usize {
        self.field.p()
    }

    pub fn q(&self) -> usize {
        self.field.q()
    }

    pub fn n(&self) -> usize {
        self.field.n()
    }

    pub fn m(&self) -> usize {
        self.grid.m()
    }

    /// Measured fraction of Fourier energy above m/4 on sampled grid lines.
    pub fn high_frequency_fraction(&self) -> f64 {
        self.high_frequency
    }

    fn orthonormal(f: Matrix<f64>) -> Matrix<f64> {
        if f.orthogonality_defect() > crate::fiber::ORTHOGONALITY_TOL {
            f.polar_orthonormalize()
        } else {
            f
        }
    }

    pub fn frame(&self, node: usize) -> Matrix<f64> {
        Self::orthonormal(self.field.frame(&self.grid.coords(node)))
    }

    /// ∂_μ F at a node according to the derivative mode.
    pub fn derivatives(&self, node: usize) -> Vec<Matrix<f64>> {
        let n = self.n();
        match self.mode {
            DerivativeMode::Analytic => self.field.derivatives(&self.grid.coords(node)),
            DerivativeMode::Central => {
                let inv = 0.5 * self.m() as f64;
                (0..n)
                    .map(|mu| {
                        let fp = self.frame(self.grid.shift(node, mu, 1));
                        let fm = self.frame(self.grid.shift(node, mu, -1));
                        (&fp - &fm).scale(&inv)
                    })
                    .collect()
            }
            DerivativeMode::Spectral => {
                let data = self.spectral.as_ref().expect("spectral cache");
                let stride = n * n;
                (0..n)
                    .map(|mu| {
                        let off = (node * n + mu) * stride;
                        Matrix::from_fn(n, n, |r, c| data[off + r * n + c])
                    })
                    .collect()
            }
        }
    }

    pub fn connection(&self, node: usize) -> Connection {
        Connection::from_frame(self.p(), self.q(), self.frame(node), &self.derivatives(node))
    }

    pub fn node_data(&self, node: usize) -> NodeData {
        NodeData::from_connection(&self.connection(node))
    }

    /// Start nodes of the grid lines along axis μ used by the smoothness probe.
    fn probe_lines(&self, mu: usize) -> Vec<usize> {
        let lines = self.grid.len() / self.m();
        let count = SMOOTHNESS_LINES.min(lines);
        (0..count)
            .map(|s| {
                // spread the probes over the other coordinates
                let mut rest = (s * lines / count + s * 7919) % lines;
                let mut multi = vec![0; self.n()];
                for (nu, slot) in multi.iter_mut().enumerate() {
                    if nu != mu {
                        *slot = rest % self.m();
                        rest /= self.m();
                    }
                }
                self.grid.index(&multi)
            })
            .collect()
    }

    fn measure_high_frequency(&self) -> f64 {
        let n = self.n();
        let m = self.m();
        let mut planner = FftPlanner::<f64>::new();
        let fft = planner.plan_fft_forward(m);
        let mut worst: f64 = 0.0;
        for mu in 0..n {
            for start in self.probe_lines(mu) {
                let frames: Vec<Matrix<f64>> = (0..m)
                    .map(|k| self.field.frame(&self.grid.coords(self.grid.shift(start, mu, k as i64))))
                    .collect();
                let mut high = 0.0;
                let mut total = 0.0;
                for e in 0..n * n {
                    let mut buf: Vec<Complex<f64>> = frames
                        .iter()
                        .map(|f| Complex::new(f.as_slice()[e], 0.0))
                        .collect();
                    fft.process(&mut buf);
                    for (k, c) in buf.iter().enumerate() {
                        let freq = k.min(m - k);
                        let pw = c.norm_sqr();
                        total += pw;
                        if 4 * freq > m {
                            high += pw;
                        }
                    }
                }
                if total > 0.0 {
                    worst = worst.max(high / total);
                }
            }
        }
        worst
    }

    fn spectral_derivatives(&self) -> Result<Vec<f64>> {
        let n = self.n();
        let m = self.m();
        let nodes = self.grid.len();
        let total = nodes * n * n * n;
        if total > SPECTRAL_CAP {
            return Err(GntError::CapExceeded {
                what: "spectral derivative storage",
                requested: total,
                cap: SPECTRAL_CAP,
            });
        }
        let stride = n * n;
        let frames: Vec<f64> = (0..nodes)
            .flat_map(|node| self.frame(node).as_slice().to_vec())
            .collect();
        let mut out = vec![0.0; total];
        let mut planner = FftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(m);
        let inv = planner.plan_fft_inverse(m);
        let wave: Vec<f64> = (0..m)
            .map(|k| {
                let s = if k < m / 2 || (m % 2 == 1 && k == m / 2) {
                    k as f64
                } else if 2 * k == m {
                    0.0
                } else {
                    k as f64 - m as f64
                };
                std::f64::consts::TAU * s
            })
            .collect();
        for mu in 0..n {
            for start in 0..nodes {
                if self.grid.multi(start)[mu] != 0 {
                    continue;
                }
                let line: Vec<usize> = (0..m).map(|k| self.grid.shift(start, mu, k as i64)).collect();
                for e in 0..stride {
                    let mut buf: Vec<Complex<f64>> = line
                        .iter()
                        .map(|&node| Complex::new(frames[node * stride + e], 0.0))
                        .collect();
                    fwd.process(&mut buf);
                    for (k, c) in buf.iter_mut().enumerate() {
                        *c = Complex::new(-c.im, c.re) * wave[k];
                    }
                    inv.process(&mut buf);
                    for (k, &node) in line.iter().enumerate() {
                        out[(node * n + mu) * stride + e] = buf[k].re / m as f64;
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Ω_μ[a][b] = g(∂_μE_a, E_b) (skew-projected) and
/// Λ[c][a][b] = g(∇_{E_c}E_a, E_b) for the frame E = (f_1..f_p, e_1..e_q).
#[derive(Clone, Debug)]
pub struct Connection {
    p: usize,
    q: usize,
    frame: Matrix<f64>,
    omega: Vec<Matrix<f64>>,
    lambda: Vec<f64>,
}

impl Connection {
    pub fn from_frame(p: usize, q: usize, frame: Matrix<f64>, derivs: &[Matrix<f64>]) -> Self {
        let n = p + q;
        let omega: Vec<Matrix<f64>> = derivs
            .iter()
            .map(|d| {
                let x = &d.transpose() * &frame;
                Matrix::from_fn(n, n, |a, b| 0.5 * (x[(a, b)] - x[(b, a)]))
            })
            .collect();
        let mut lambda = vec![0.0; n * n * n];
        for c in 0..n {
            for (mu, om) in omega.iter().enumerate() {
                let w = frame[(mu, c)];
                if w == 0.0 {
                    continue;
                }
                for a in 0..n {
                    for b in 0..n {
                        lambda[(c * n + a) * n + b] += w * om[(a, b)];
                    }
                }
            }
        }
        Connection {
            p,
            q,
            frame,
            omega,
            lambda,
        }
    }

    pub fn frame(&self) -> &Matrix<f64> {
        &self.frame
    }

    pub fn omega(&self, mu: usize) -> &Matrix<f64> {
        &self.omega[mu]
    }

    #[inline]
    pub fn lambda(&self, c: usize, a: usize, b: usize) -> f64 {
        let n = self.p + self.q;
        self.lambda[(c * n + a) * n + b]
    }
}

/// Geometry at a node for the reference normal frame e_0 = (columns p..n).
///
/// Flat arrays: `a[(α·p + i)·p + j] = (A_α)_{ij} = g(A_α f_i, f_j)`,
/// `c[(α·q + β)·p + i] = g(∇_{e_α}e_β, f_i)`,
/// `cn[(α·q + β)·q + γ] = g(∇_{e_α}e_β, e_γ)`.
#[derive(Clone, Debug)]
pub struct NodeData {
    pub p: usize,
    pub q: usize,
    pub frame: Matrix<f64>,
    pub omega: Vec<Matrix<f64>>,
    pub a: Vec<f64>,
    pub c: Vec<f64>,
    pub cn: Vec<f64>,
    /// H_{D⊥} = Σ_γ (∇_{e_γ}e_γ)^⊤ in the f basis.
    pub h_perp: Vec<f64>,
}

impl NodeData {
    pub fn from_connection(conn: &Connection) -> Self {
        let p = conn.p;
        let q = conn.q;
        let mut a = vec![0.0; q * p * p];
        for al in 0..q {
            for i in 0..p {
                for j in 0..p {
                    a[(al * p + i) * p + j] = conn.lambda(i, j, p + al);
                }
            }
        }
        let mut c = vec![0.0; q * q * p];
        let mut cn = vec![0.0; q * q * q];
        for al in 0..q {
            for be in 0..q {
                for i in 0..p {
                    c[(al * q + be) * p + i] = conn.lambda(p + al, p + be, i);
                }
                for ga in 0..q {
                    cn[(al * q + be) * q + ga] = conn.lambda(p + al, p + be, p + ga);
                }
            }
        }
        let h_perp = (0..p)
            .map(|i| (0..q).map(|g| c[(g * q + g) * p + i]).sum())
            .collect();
        NodeData {
            p,
            q,
            frame: conn.frame.clone(),
            omega: conn.omega.clone(),
            a,
            c,
            cn,
            h_perp,
        }
    }

    /// Normal connection block Γ^⊥_μ[α][β] = g(∂_μe_α, e_β).
    pub fn normal_connection(&self, mu: usize) -> Matrix<f64> {
        let p = self.p;
        Matrix::from_fn(self.q, self.q, |a, b| self.omega[mu][(p + a, p + b)])
    }

    /// Tangential block Γ^⊤_μ[i][j] = g(∂_μf_i, f_j).
    pub fn tangential_connection(&self, mu: usize) -> Matrix<f64> {
        Matrix::from_fn(self.p, self.p, |i, j| self.omega[mu][(i, j)])
    }

    /// Geometry seen by the rotated normal frame e_0·g.
    pub fn rotate(&self, g: &Matrix<f64>) -> Rotated {
        let (p, q) = (self.p, self.q);
        let mut a = vec![0.0; q * p * p];
        for be in 0..q {
            for al in 0..q {
                let w = g[(al, be)];
                if w == 0.0 {
                    continue;
                }
                let src = &self.a[al * p * p..(al + 1) * p * p];
                for (dst, s) in a[be * p * p..(be + 1) * p * p].iter_mut().zip(src) {
                    *dst += w * s;
                }
            }
        }
        // c'_{αβ} = Σ_{γδ} g_{γα} g_{δβ} c_{γδ}, done one slot at a time
        let mut half = vec![0.0; q * q * p];
        for ga in 0..q {
            for be in 0..q {
                for de in 0..q {
                    let w = g[(de, be)];
                    for i in 0..p {
                        half[(ga * q + be) * p + i] += w * self.c[(ga * q + de) * p + i];
                    }
                }
            }
        }
        let mut c = vec![0.0; q * q * p];
        for al in 0..q {
            for ga in 0..q {
                let w = g[(ga, al)];
                for be in 0..q {
                    for i in 0..p {
                        c[(al * q + be) * p + i] += w * half[(ga * q + be) * p + i];
                    }
                }
            }
        }
        let e = Matrix::from_fn(p + q, q, |r, b| {
            (0..q).map(|al| self.frame[(r, p + al)] * g[(al, b)]).sum()
        });
        Rotated { p, q, a, c, e }
    }

    /// Normal part (∇_{e'_α}e'_β)^⊥ in the rotated basis.
    pub fn rotate_normal(&self, g: &Matrix<f64>) -> Vec<f64> {
        let q = self.q;
        let mut out = vec![0.0; q * q * q];
        for al in 0..q {
            for be in 0..q {
                for ep in 0..q {
                    let mut acc = 0.0;
                    for ga in 0..q {
                        for de in 0..q {
                            for ze in 0..q {
                                acc += g[(ga, al)]
                                    * g[(de, be)]
                                    * g[(ze, ep)]
                                    * self.cn[(ga * q + de) * q + ze];
                            }
                        }
                    }
                    out[(al * q + be) * q + ep] = acc;
                }
            }
        }
        out
    }
}

/// Shape operators and (∇_{e_α}e_β)^⊤ for a rotated normal frame, plus the
/// rotated normal vectors in ambient coordinates (columns of `e`).
#[derive(Clone, Debug)]
pub struct Rotated {
    pub p: usize,
    pub q: usize,
    pub a: Vec<f64>,
    pub c: Vec<f64>,
    pub e: Matrix<f64>,
}

impl Rotated {
    #[inline]
    pub fn a(&self, al: usize, i: usize, j: usize) -> f64 {
        self.a[(al * self.p + i) * self.p + j]
    }

    #[inline]
    pub fn c(&self, al: usize, be: usize) -> &[f64] {
        let off = (al * self.q + be) * self.p;
        &self.c[off..off + self.p]
    }

    /// Operator matrices M_α with M_α[j][i] = (A_α)_{ij}.
    pub fn operator_matrices(&self) -> Vec<Matrix<f64>> {
        (0..self.q)
            .map(|al| Matrix::from_fn(self.p, self.p, |j, i| self.a(al, i, j)))
            .collect()
    }
}

/// All extrinsic quantities at one point of P = M × G.
///
/// Vectors in D are given in the f basis and vectors in D⊥ in the rotated
/// e basis.  B and T carry the factor ½, so B + T = (∇_X Y)^⊥.
#[derive(Clone, Debug, Serialize)]
pub struct GeometrySample {
    pub point: Vec<f64>,
    /// Operator matrices of A_α(x, e): column i holds the f-coordinates of A_α f_i.
    pub shape: Vec<Matrix<f64>>,
    /// (∇_{e_α}e_β)^⊤ as [α][β][i].
    pub nabla_top: Vec<Vec<Vec<f64>>>,
    /// (∇_{e_α}e_β)^⊥ as [α][β][γ].
    pub nabla_perp: Vec<Vec<Vec<f64>>>,
    pub h_d: Vec<f64>,
    pub h_perp: Vec<f64>,
    /// B_D(f_i, f_j) and T_D(f_i, f_j) as [i][j][α].
    pub b_d: Vec<Vec<Vec<f64>>>,
    pub t_d: Vec<Vec<Vec<f64>>>,
    /// B_{D⊥}(e_α, e_β) and T_{D⊥}(e_α, e_β) as [α][β][i].
    pub b_perp: Vec<Vec<Vec<f64>>>,
    pub t_perp: Vec<Vec<Vec<f64>>>,
    /// Constant κ with R_{α,β} = κ δ_{αβ} 1; zero on the flat torus.
    pub kappa: f64,
}

/// Samples the geometry at grid node `node` and normal frame e_0·g.
pub fn sample_geometry(geom: &TorusGeometry, node: usize, g: &Matrix<f64>) -> Result<GeometrySample> {
    let (p, q) = (geom.p(), geom.q());
    if g.rows() != q || g.cols() != q || g.orthogonality_defect() > 1e-10 {
        return Err(GntError::Dimension(format!("fiber element must be orthogonal {q}×{q}")));
    }
    if node >= geom.grid().len() {
        return Err(GntError::Domain(format!("node {node} outside the grid")));
    }
    let nd = geom.node_data(node);
    let r = nd.rotate(g);
    let cn = nd.rotate_normal(g);
    let shape = r.operator_matrices();
    let nabla_top = (0..q)
        .map(|al| (0..q).map(|be| r.c(al, be).to_vec()).collect())
        .collect();
    let nabla_perp = (0..q)
        .map(|al| {
            (0..q)
                .map(|be| (0..q).map(|ga| cn[(al * q + be) * q + ga]).collect())
                .collect()
        })
        .collect();
    let h_d = (0..q).map(|al| (0..p).map(|i| r.a(al, i, i)).sum()).collect();
    let b_d = (0..p)
        .map(|i| {
            (0..p)
                .map(|j| (0..q).map(|al| 0.5 * (r.a(al, i, j) + r.a(al, j, i))).collect())
                .collect()
        })
        .collect();
    let t_d = (0..p)
        .map(|i| {
            (0..p)
                .map(|j| (0..q).map(|al| 0.5 * (r.a(al, i, j) - r.a(al, j, i))).collect())
                .collect()
        })
        .collect();
    let b_perp = (0..q)
        .map(|al| {
            (0..q)
                .map(|be| (0..p).map(|i| 0.5 * (r.c(al, be)[i] + r.c(be, al)[i])).collect())
                .collect()
        })
        .collect();
    let t_perp = (0..q)
        .map(|al| {
            (0..q)
                .map(|be| (0..p).map(|i| 0.5 * (r.c(al, be)[i] - r.c(be, al)[i])).collect())
                .collect()
        })
        .collect();
    Ok(GeometrySample {
        point: geom.grid().coords(node),
        shape,
        nabla_top,
        nabla_perp,
        h_d,
        h_perp: nd.h_perp.clone(),
        b_d,
        t_d,
        b_perp,
        t_perp,
        kappa: 0.0,
    })
}

impl GeometrySample {
    pub fn system(&self) -> crate::invariants::EndoSystem<f64> {
        let p = self.shape[0].rows();
        crate::invariants::EndoSystem::new(p, self.shape.clone()).expect("square shape operators")
    }

    /// Largest asymmetry of the shape operators: zero iff T_D vanishes.
    pub fn integrability_defect(&self) -> f64 {
        self.t_d
            .iter()
            .flatten()
            .flatten()
            .fold(0.0, |m: f64, x| m.max(x.abs()))
    }
}
