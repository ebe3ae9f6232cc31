//! Geometry config files and per-check reports.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::checks;
use super::frame::FrameSpec;
use super::geometry::{DerivativeMode, TorusGeometry, DEFAULT_SMOOTHNESS_TOL};
use crate::error::{GntError, Result};
use crate::fiber::{sphere_rule, vanishing_by_symmetry, FiberRule, FiberSpec, Group, RuleKind};
use crate::matrix::Matrix;
use crate::multiindex::MultiIndex;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// σ^M_u, with the symmetric-vanishing test where it applies.
    Curvature,
    /// Iterated versus joint quadrature of σ̂_u.
    Fubini,
    /// Both sides of the integral formula for |u|σ^M_u.
    Main,
    /// Pointwise divergence of Y_u against its closed form.
    DivLemma,
    /// ∫_M div Ŷ_u = 0.
    Stokes,
    /// Fiber-averaging commutes with the divergence (two discretizations,
    /// equal up to O(h²)).
    Average,
    /// div T*_u by recurrence versus the unrolled sum.
    DivTStar,
    Walczak,
    /// Codazzi equation (q = 1).
    Codazzi,
    /// Second-derivative identity in the adapted gauge.
    LemLoc,
    /// GN1–GN3 on float samples.
    Algebra,
    /// Sphere quadrature versus group quadrature for u = (k, 0, …).
    Reduction,
}

impl CheckKind {
    pub const ALL: [CheckKind; 12] = [
        CheckKind::Curvature,
        CheckKind::Fubini,
        CheckKind::Main,
        CheckKind::DivLemma,
        CheckKind::Stokes,
        CheckKind::Average,
        CheckKind::DivTStar,
        CheckKind::Walczak,
        CheckKind::Codazzi,
        CheckKind::LemLoc,
        CheckKind::Algebra,
        CheckKind::Reduction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Curvature => "curvature",
            CheckKind::Fubini => "fubini",
            CheckKind::Main => "main",
            CheckKind::DivLemma => "div_lemma",
            CheckKind::Stokes => "stokes",
            CheckKind::Average => "average",
            CheckKind::DivTStar => "div_t_star",
            CheckKind::Walczak => "walczak",
            CheckKind::Codazzi => "codazzi",
            CheckKind::LemLoc => "lem_loc",
            CheckKind::Algebra => "algebra",
            CheckKind::Reduction => "reduction",
        }
    }

    fn per_u(self) -> bool {
        !matches!(
            self,
            CheckKind::Walczak | CheckKind::Codazzi | CheckKind::LemLoc | CheckKind::Algebra
        )
    }
}

impl std::str::FromStr for CheckKind {
    type Err = GntError;

    fn from_str(s: &str) -> Result<Self> {
        CheckKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| GntError::Parse(format!("unknown check {s:?}")))
    }
}

/// Pass thresholds.  Stencil checks compare err / max(scale, 1) with
/// `stencil · h²`, h = 1/m.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub algebraic: f64,
    pub integral: f64,
    pub vanishing: f64,
    pub mc_sigmas: f64,
    pub stencil: f64,
    pub unrolled: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            algebraic: 1e-10,
            integral: 1e-3,
            vanishing: 1e-6,
            mc_sigmas: 3.0,
            stencil: 100.0,
            unrolled: 1e-12,
        }
    }
}

fn default_group() -> Group {
    Group::SO
}

fn default_smoothness() -> f64 {
    DEFAULT_SMOOTHNESS_TOL
}

/// A geometry config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    /// Torus dimension; checked against the frame field when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Grid points per axis.
    pub m: usize,
    pub frame: FrameSpec,
    #[serde(default)]
    pub mode: DerivativeMode,
    #[serde(default = "default_group")]
    pub group: Group,
    /// Defaults to [`FiberSpec::default_for`] with N = 64.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber: Option<FiberSpec>,
    #[serde(default)]
    pub u: Vec<Vec<u32>>,
    #[serde(default)]
    pub checks: Vec<CheckKind>,
    #[serde(default = "default_smoothness")]
    pub smoothness_tol: f64,
}

impl GeometryConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| GntError::Parse(e.to_string()))
    }

    pub fn geometry(&self) -> Result<TorusGeometry> {
        let field = self.frame.build()?;
        if let Some(n) = self.n {
            if n != field.n() {
                return Err(GntError::Dimension(format!(
                    "config says n = {n} but the frame field lives on T^{}",
                    field.n()
                )));
            }
        }
        TorusGeometry::with_tolerance(field, self.m, self.mode, self.smoothness_tol)
    }

    pub fn fiber_spec(&self, q: usize) -> FiberSpec {
        self.fiber
            .clone()
            .unwrap_or_else(|| FiberSpec::default_for(self.group, q, 64, 0))
    }

    pub fn rule(&self, q: usize) -> Result<FiberRule> {
        self.fiber_spec(q).build(self.group, q)
    }

    pub fn indices(&self, q: usize) -> Result<Vec<MultiIndex>> {
        self.u
            .iter()
            .map(|u| {
                if u.len() != q {
                    Err(GntError::Dimension(format!("u = {u:?} needs {q} entries")))
                } else {
                    Ok(MultiIndex::new(u.clone()))
                }
            })
            .collect()
    }
}

/// One executed check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<u32>>,
    pub m: usize,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    /// The quantity compared with `tolerance`.
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Absolute error used by refinement studies.
    pub error: f64,
    #[serde(default)]
    pub extra: serde_json::Value,
}

impl CheckReport {
    #[allow(clippy::too_many_arguments)]
    fn new(
        kind: CheckKind,
        u: Option<&MultiIndex>,
        m: usize,
        lhs: Option<f64>,
        rhs: Option<f64>,
        residual: f64,
        tolerance: f64,
        error: f64,
        extra: serde_json::Value,
    ) -> Self {
        CheckReport {
            check: kind.name().into(),
            u: u.map(|u| u.entries().to_vec()),
            m,
            lhs,
            rhs,
            residual,
            tolerance,
            // NaN never passes
            pass: residual <= tolerance,
            error,
            extra,
        }
    }
}

/// Mixed absolute/relative error: the geometric quantities here are O(1),
/// and some exact values vanish, so small scales fall back to absolute.
fn relative(err: f64, scale: f64) -> f64 {
    err / scale.max(1.0)
}

/// Nodes for pointwise stencil checks: the probe lattice when the grid
/// allows it, else every node.
pub fn stencil_nodes(geom: &TorusGeometry) -> Vec<usize> {
    checks::probe_nodes(geom).unwrap_or_else(|_| (0..geom.grid().len()).collect())
}

/// Runs every configured check on one geometry.
pub fn run_checks(cfg: &GeometryConfig, tol: &Tolerances) -> Result<Vec<CheckReport>> {
    let geom = cfg.geometry()?;
    let rule = cfg.rule(geom.q())?;
    let us = cfg.indices(geom.q())?;
    if cfg.checks.contains(&CheckKind::Reduction) {
        if let Some(u) = us.iter().find(|u| u.entries()[1..].iter().any(|&x| x != 0)) {
            return Err(GntError::Domain(format!(
                "reduction needs every u of the form (k, 0, …), got {:?}",
                u.entries()
            )));
        }
    }
    let mut out = Vec::new();
    for &kind in &cfg.checks {
        if kind.per_u() {
            if us.is_empty() {
                return Err(GntError::Domain(format!("check {} needs at least one u", kind.name())));
            }
            for u in &us {
                out.push(run_one(kind, &geom, &rule, Some(u), cfg, tol)?);
            }
        } else {
            out.push(run_one(kind, &geom, &rule, None, cfg, tol)?);
        }
    }
    Ok(out)
}

pub fn run_one(
    kind: CheckKind,
    geom: &TorusGeometry,
    rule: &FiberRule,
    u: Option<&MultiIndex>,
    cfg: &GeometryConfig,
    tol: &Tolerances,
) -> Result<CheckReport> {
    let m = geom.m();
    let h2 = (1.0 / m as f64).powi(2);
    let stencil_tol = tol.stencil * h2;
    let need_u = || u.ok_or_else(|| GntError::Domain(format!("check {} needs u", kind.name())));
    Ok(match kind {
        CheckKind::Curvature => {
            let u = need_u()?;
            let c = checks::extrinsic_curvature(geom, rule, u)?;
            let vanish = vanishing_by_symmetry(u, rule.group());
            let (residual, tolerance) = if vanish {
                let t = if rule.is_monte_carlo() {
                    tol.mc_sigmas * c.stderr
                } else {
                    tol.vanishing
                };
                (c.sigma_m.abs(), t)
            } else {
                (0.0, 0.0)
            };
            CheckReport::new(
                kind,
                Some(u),
                m,
                Some(c.sigma_m),
                vanish.then_some(0.0),
                residual,
                tolerance,
                residual,
                json!({"vanishing_by_symmetry": vanish, "stderr": c.stderr, "group_volume": c.group_volume}),
            )
        }
        CheckKind::Fubini => {
            let u = need_u()?;
            let f = checks::fubini(geom, rule, u)?;
            CheckReport::new(
                kind,
                Some(u),
                m,
                Some(f.iterated),
                Some(f.joint),
                f.relative,
                tol.algebraic,
                (f.iterated - f.joint).abs(),
                json!({}),
            )
        }
        CheckKind::Main => {
            let u = need_u()?;
            let t = checks::main_theorem(geom, rule, u, 0.0)?;
            let extra = json!({
                "curvature": t.curvature, "div": t.div, "mean": t.mean, "gamma": t.gamma,
                "scale": t.scale, "sigma2_literal": t.sigma2_literal(),
                "per_pair": t.per_pair,
            });
            CheckReport::new(kind, Some(u), m, Some(t.lhs), Some(t.rhs), t.relative(), tol.integral, t.residual(), extra)
        }
        CheckKind::DivLemma => {
            let u = need_u()?;
            let (r, s) = checks::div_lemma(geom, rule, u, &stencil_nodes(geom))?;
            CheckReport::new(kind, Some(u), m, None, None, relative(r, s), stencil_tol, r, json!({"scale": s}))
        }
        CheckKind::Stokes => {
            let u = need_u()?;
            let (v, s) = checks::stokes(geom, rule, u)?;
            CheckReport::new(
                kind,
                Some(u),
                m,
                Some(v),
                Some(0.0),
                relative(v.abs(), s),
                stencil_tol,
                v.abs(),
                json!({"scale": s}),
            )
        }
        CheckKind::Average => {
            let u = need_u()?;
            let (r, s) = checks::average_divergence_consistency(geom, rule, u)?;
            CheckReport::new(kind, Some(u), m, None, None, relative(r, s), stencil_tol, r, json!({"scale": s}))
        }
        CheckKind::DivTStar => {
            let u = need_u()?;
            let (r, s) = checks::div_t_star_check(geom, rule, u)?;
            CheckReport::new(
                kind,
                Some(u),
                m,
                None,
                None,
                r,
                tol.unrolled * s.max(1.0),
                r,
                json!({"scale": s}),
            )
        }
        CheckKind::Walczak => {
            let probe = rule.nodes().first().cloned().unwrap_or_else(|| Matrix::identity(geom.q()));
            let w = checks::walczak(geom, &probe)?;
            let pointwise = w.pointwise.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            let mut r = CheckReport::new(
                kind,
                None,
                m,
                Some(w.integral),
                Some(0.0),
                w.relative(),
                tol.integral,
                w.integral.abs(),
                json!({"terms": w, "pointwise_tolerance": tol.algebraic}),
            );
            // NaN-safe: any pointwise failure fails the check
            if !(pointwise <= tol.algebraic) {
                r.pass = false;
            }
            r
        }
        CheckKind::Codazzi => {
            let c = checks::codazzi(geom)?;
            CheckReport::new(
                kind,
                None,
                m,
                None,
                None,
                relative(c.residual, c.scale),
                stencil_tol,
                c.residual,
                json!({"scale": c.scale, "opposite_sign": c.opposite_sign}),
            )
        }
        CheckKind::LemLoc => {
            let l = checks::lem_loc(geom, &stencil_nodes(geom))?;
            CheckReport::new(
                kind,
                None,
                m,
                None,
                None,
                relative(l.residual, l.scale),
                stencil_tol,
                l.residual,
                json!({"scale": l.scale, "gauge_defect": l.gauge_defect}),
            )
        }
        CheckKind::Algebra => {
            let r = checks::sample_algebra(geom, rule, &stencil_nodes(geom))?;
            CheckReport::new(kind, None, m, None, None, r, tol.algebraic, r, json!({}))
        }
        CheckKind::Reduction => {
            let u = need_u()?;
            let k = u.get(0) as usize;
            if u.entries()[1..].iter().any(|&x| x != 0) {
                return Err(GntError::Domain(format!("reduction needs u = (k, 0, …), got {:?}", u.entries())));
            }
            let spec = cfg.fiber_spec(geom.q());
            let n = spec.n.unwrap_or(64);
            let seed = match spec.kind {
                RuleKind::Mc => spec.seed,
                _ => spec.seed.or(Some(0)),
            };
            let sphere = sphere_rule(rule.group(), geom.q(), n, seed)?;
            let a = checks::one_operator_reduction(geom, &sphere, k)?;
            let b = checks::extrinsic_curvature(geom, rule, u)?.sigma_m;
            let err = (a - b).abs();
            CheckReport::new(
                kind,
                Some(u),
                m,
                Some(a),
                Some(b),
                err / b.abs().max(1.0),
                tol.integral,
                err,
                json!({}),
            )
        }
    })
}

/// One resolution of a refinement study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementRow {
    pub check: String,
    pub u: String,
    pub m: usize,
    pub error: f64,
    pub residual: f64,
    /// log2(e(m/2)/e(m)) against the previous row of the same check and u.
    pub order: Option<f64>,
}

/// log(coarse/fine)/log(ratio); None unless both errors are positive.
pub fn observed_order(coarse: f64, fine: f64, ratio: f64) -> Option<f64> {
    (coarse > 0.0 && fine > 0.0).then(|| (coarse / fine).ln() / ratio.ln())
}

/// Reruns the configured checks at each resolution.
pub fn refine(cfg: &GeometryConfig, tol: &Tolerances, ms: &[usize]) -> Result<(Vec<CheckReport>, Vec<RefinementRow>)> {
    let mut reports = Vec::new();
    let mut rows: Vec<RefinementRow> = Vec::new();
    for &m in ms {
        let mut c = cfg.clone();
        c.m = m;
        for r in run_checks(&c, tol)? {
            let u = r.u.as_ref().map(|u| format!("{u:?}")).unwrap_or_default();
            let prev = rows.iter().rev().find(|x| x.check == r.check && x.u == u);
            let order = prev.and_then(|p| observed_order(p.error, r.error, m as f64 / p.m as f64));
            rows.push(RefinementRow {
                check: r.check.clone(),
                u,
                m,
                error: r.error,
                residual: r.residual,
                order,
            });
            reports.push(r);
        }
    }
    Ok((reports, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> GeometryConfig {
        GeometryConfig::from_json(text).unwrap()
    }

    #[test]
    fn parses_minimal_config() {
        let c = cfg(r#"{"m": 16, "frame": {"name": "t2_rotating"}, "u": [[1]], "checks": ["main"]}"#);
        assert_eq!(c.mode, DerivativeMode::Central);
        assert_eq!(c.group, Group::SO);
        assert_eq!(c.checks, vec![CheckKind::Main]);
        let back: GeometryConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_unknown_fields_and_bad_dims() {
        assert!(GeometryConfig::from_json(r#"{"m": 16, "frame": {"name": "t2_rotating"}, "bogus": 1}"#).is_err());
        let c = cfg(r#"{"n": 3, "m": 16, "frame": {"name": "t2_rotating"}}"#);
        assert!(matches!(c.geometry(), Err(GntError::Dimension(_))));
        let c = cfg(r#"{"m": 16, "frame": {"name": "t2_rotating"}, "u": [[1, 0]], "checks": ["main"]}"#);
        assert!(run_checks(&c, &Tolerances::default()).is_err());
    }

    #[test]
    fn constant_frames_pass_everything() {
        let c = cfg(
            r#"{"m": 8, "frame": {"name": "constant", "p": 2, "q": 1}, "u": [[1], [2]],
                "checks": ["curvature", "main", "div_lemma", "stokes", "average", "div_t_star",
                           "walczak", "codazzi", "lem_loc", "algebra"]}"#,
        );
        for r in run_checks(&c, &Tolerances::default()).unwrap() {
            assert!(r.pass, "{r:?}");
            assert!(r.error.abs() < 1e-14, "{r:?}");
        }
    }

    #[test]
    fn refinement_orders() {
        let c = cfg(r#"{"m": 16, "frame": {"name": "t2_rotating"}, "u": [[2]], "checks": ["div_lemma"]}"#);
        let (_, rows) = refine(&c, &Tolerances::default(), &[16, 32]).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].order.is_none());
        let _ = rows[1].order.unwrap();
    }
}
