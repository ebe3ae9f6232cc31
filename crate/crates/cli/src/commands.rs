//! Command implementations.  Each returns the result payload and whether
//! every executed check passed.

use std::path::Path;

use anyhow::{bail, Context};
use gnt_core::classical::{check_r_identities, classical_direct, reduce_from_gnt};
use gnt_core::invariants::{newton_polynomial, random_integer_system, random_symmetric_system};
use gnt_core::matrix::Matrix;
use gnt_core::scalar::{Rational, Scalar};
use gnt_core::suite::{verify_system, IdentityCheck};
use gnt_core::torus_lab::config::{refine, run_checks, CheckKind, GeometryConfig, RefinementRow, Tolerances};
use gnt_core::torus_lab::kappa::{kappa_recurrence, kappa_table};
use gnt_core::{EndoSystem, GntError, NewtonFamily};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{ClassicalArgs, Command, GntArgs, IntegrateArgs, KappaArgs, RunConfig, SystemKind, VerifyArgs};
use crate::report::write_atomic;

pub struct Outcome {
    pub result: Value,
    pub pass: bool,
}

pub fn run(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    match &cfg.command {
        Command::Gnt(a) => gnt(a),
        Command::Verify(a) => verify(a),
        Command::Classical(a) => classical(a),
        Command::Integrate(a) => integrate(a, &cfg.tolerances),
        Command::KappaTable(a) => kappa(a),
    }
}

fn read_json(path: &Path) -> anyhow::Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| GntError::Parse(format!("{}: {e}", path.display())).into())
}

fn load_system(path: &Path) -> anyhow::Result<EndoSystem<Rational>> {
    Ok(EndoSystem::from_json(&read_json(path)?)?)
}

fn mat_json(m: &Matrix<Rational>) -> Value {
    Value::Array((0..m.rows()).map(|r| Value::Array(m.row(r).iter().map(Scalar::to_json).collect())).collect())
}

fn checks_pass(c: &[IdentityCheck]) -> bool {
    c.iter().all(|c| c.pass)
}

fn gnt(a: &GntArgs) -> anyhow::Result<Outcome> {
    let sys = load_system(&a.system)?;
    let max_len = a.max_len.unwrap_or(sys.p() + 1);
    let fam = NewtonFamily::with_sigma(&sys, &newton_polynomial(&sys), max_len);
    let checks = verify_system(&sys, false)?;
    Ok(Outcome {
        pass: checks_pass(&checks),
        result: json!({"family": fam.to_json(), "checks": checks}),
    })
}

/// One randomized trial as logged: the seed regenerates the system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub seed: u64,
    pub p: usize,
    pub q: usize,
    pub system: Value,
    pub checks: Vec<Value>,
    pub pass: bool,
}

fn trial(a: &VerifyArgs, index: usize, seed: u64) -> anyhow::Result<Trial> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (p, q) = if a.vary {
        (rng.random_range(1..=a.p), rng.random_range(1..=a.q))
    } else {
        (a.p, a.q)
    };
    let sys = match a.system {
        SystemKind::Random => random_integer_system(&mut rng, p, q, a.bound),
        SystemKind::Symmetric => random_symmetric_system(&mut rng, p, q, a.bound),
    };
    let checks = verify_system(&sys, a.classical)?;
    Ok(Trial {
        index,
        seed,
        p,
        q,
        system: sys.to_json(),
        pass: checks_pass(&checks),
        checks: checks.iter().map(|c| serde_json::to_value(c).expect("serializes")).collect(),
    })
}

fn run_trials(a: &VerifyArgs) -> anyhow::Result<Vec<Trial>> {
    if a.p == 0 || a.q == 0 {
        bail!(GntError::Dimension("verify needs p, q ≥ 1".into()));
    }
    if a.bound < 0 {
        bail!(GntError::Domain("bound must be nonnegative".into()));
    }
    let mut master = ChaCha8Rng::seed_from_u64(a.seed);
    (0..a.trials).map(|i| trial(a, i, master.next_u64())).collect()
}

fn verify(a: &VerifyArgs) -> anyhow::Result<Outcome> {
    if let Some(path) = &a.replay {
        let old = read_json(path)?;
        let cfg: RunConfig = serde_json::from_value(old["config"].clone())
            .map_err(|e| GntError::Parse(format!("{}: no usable config: {e}", path.display())))?;
        let Command::Verify(orig) = cfg.command else {
            bail!(GntError::Parse(format!("{} is not a verify report", path.display())));
        };
        let old_trials: Vec<Trial> = serde_json::from_value(old["result"]["trials"].clone())
            .map_err(|e| GntError::Parse(format!("{}: no trial log: {e}", path.display())))?;
        let trials = run_trials(&orig)?;
        let matches = trials == old_trials;
        let pass = matches && trials.iter().all(|t| t.pass);
        return Ok(Outcome {
            pass,
            result: json!({
                "replayed_from": path,
                "replayed_config": orig,
                "matches": matches,
                "trials": trials,
            }),
        });
    }
    let trials = run_trials(a)?;
    let failed = trials.iter().filter(|t| !t.pass).count();
    Ok(Outcome {
        pass: failed == 0,
        result: json!({"trials": trials, "failed": failed}),
    })
}

fn classical(a: &ClassicalArgs) -> anyhow::Result<Outcome> {
    if a.r_max % 2 == 1 {
        bail!(GntError::Domain(format!("r_max = {} must be even", a.r_max)));
    }
    let sys = match &a.system {
        Some(p) => load_system(p)?,
        None => random_integer_system(&mut ChaCha8Rng::seed_from_u64(a.seed), a.p, a.q, a.bound),
    };
    let direct = classical_direct(&sys, a.r_max)?;
    let fam = NewtonFamily::with_sigma(&sys, &newton_polynomial(&sys), a.r_max);
    let reduced = reduce_from_gnt(&fam, a.r_max)?;
    let mut rows = Vec::new();
    let mut pass = true;
    for r in (0..=a.r_max).step_by(2) {
        let same = direct.s(r)? == reduced.s(r)? && direct.t(r)? == reduced.t(r)?;
        pass &= same;
        rows.push(json!({
            "r": r,
            "S": direct.s(r)?.to_json(),
            "T": mat_json(direct.t(r)?),
            "direct_equals_gnt": same,
        }));
    }
    let ids = [check_r_identities(&direct, &[])?, check_r_identities(&reduced, &[])?];
    let ids_zero = ids.iter().all(|r| r.all_zero());
    pass &= ids_zero;
    Ok(Outcome {
        pass,
        result: json!({"system": sys.to_json(), "rows": rows, "r_identities_zero": ids_zero}),
    })
}

fn parse_u(s: &str) -> anyhow::Result<Vec<u32>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<u32>()
                .map_err(|e| GntError::Parse(format!("multi-index {s:?}: {e}")).into())
        })
        .collect()
}

fn integrate(a: &IntegrateArgs, tol: &Tolerances) -> anyhow::Result<Outcome> {
    let text = std::fs::read_to_string(&a.geometry).with_context(|| format!("reading {}", a.geometry.display()))?;
    let mut geo = GeometryConfig::from_json(&text)?;
    if let Some(m) = a.m {
        geo.m = m;
    }
    if !a.u.is_empty() {
        geo.u = a.u.iter().map(|s| parse_u(s)).collect::<anyhow::Result<_>>()?;
    }
    if !a.check.is_empty() {
        geo.checks = a.check.iter().map(|s| s.parse::<CheckKind>()).collect::<Result<_, _>>()?;
    }
    if geo.checks.is_empty() {
        bail!(GntError::Domain("no checks requested".into()));
    }
    let (reports, rows) = if a.refine.is_empty() {
        (run_checks(&geo, tol)?, Vec::<RefinementRow>::new())
    } else {
        refine(&geo, tol, &a.refine)?
    };
    if let Some(path) = &a.csv {
        if rows.is_empty() {
            bail!(GntError::Domain("--csv needs --refine".into()));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &rows {
            w.serialize(r)?;
        }
        write_atomic(path, &w.into_inner()?)?;
    }
    let pass = reports.iter().all(|r| r.pass);
    let mut result = json!({"geometry": geo, "checks": reports});
    if !rows.is_empty() {
        result["refinement"] = serde_json::to_value(&rows)?;
    }
    Ok(Outcome { result, pass })
}

fn kappa(a: &KappaArgs) -> anyhow::Result<Outcome> {
    match a.r {
        Some(r) => {
            let (rep, row) = kappa_recurrence(a.p, a.q, r)?;
            Ok(Outcome {
                pass: row.ratio_ok() && row.closed_ok(),
                result: json!({
                    "p": rep.p, "q": rep.q, "branch": rep.branch,
                    "seed_forced_zero": rep.seed_forced_zero,
                    "row": row, "value": row.recurrence.to_string(),
                }),
            })
        }
        None => {
            let rep = kappa_table(a.p, a.q)?;
            let values: Vec<String> = rep.rows.iter().map(|r| r.recurrence.to_string()).collect();
            Ok(Outcome {
                pass: rep.all_ok(),
                result: json!({"table": rep, "values": values}),
            })
        }
    }
}
