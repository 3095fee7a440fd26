use super::{ActivationSpec, InputSpec, KernelForm, KernelSpec, ModelSpec, Regime, Term};
use crate::{Error, Result};

fn check_autonomous(spec: &ModelSpec) -> Result<()> {
    match spec.time_exprs().find(|(_, e)| !e.is_constant()) {
        Some((loc, _)) => Err(Error::NotAutonomous(loc)),
        None => Ok(()),
    }
}

/// `sum_l zeta_l`, exactly for analytic kernels and by summation until the
/// declared tail is below `tol` otherwise.
fn signed_total(k: &KernelSpec, tol: f64) -> Result<f64> {
    if let Some(t) = k.analytic_signed_tail(0) {
        return Ok(t);
    }
    let KernelForm::ClosedForm { expr } = &k.form else {
        unreachable!("analytic kernels handled above")
    };
    if expr.is_zero() {
        return Ok(0.0);
    }
    const MAX_TERMS: u64 = 10_000_000;
    let (mut signed, mut abs) = (0.0, 0.0);
    for l in 0..MAX_TERMS {
        let v = expr.eval(l as f64)?;
        signed += v;
        abs += v.abs();
        if k.declared_total - abs < tol {
            return Ok(signed);
        }
    }
    Err(Error::Precondition(format!(
        "kernel tail still above {tol:e} after {MAX_TERMS} terms"
    )))
}

fn eval_at(e: &crate::expr::Expr, loc: String, x: f64) -> Result<f64> {
    e.eval(x).map_err(|source| Error::EvalAt {
        location: loc,
        at: x,
        source,
    })
}

/// `max_i |x*_i - RHS_i(x*)|` for an autonomous model.
pub fn verify_equilibrium(spec: &ModelSpec, x_star: &[f64], tol_eq: f64) -> Result<f64> {
    check_autonomous(spec)?;
    if x_star.len() != spec.n {
        return Err(Error::Extent {
            field: "equilibrium".into(),
            expected: spec.n,
            found: x_star.len(),
        });
    }
    let n = spec.n;
    let mut residual = 0.0f64;
    for i in 0..n {
        let mut rhs = eval_at(&spec.a[i], format!("a[{}]", i + 1), 0.0)? * x_star[i]
            + eval_at(&spec.input[i].expr, format!("I[{}]", i + 1), 0.0)?;
        for j in 0..n {
            for p in 0..spec.p {
                let b = spec.b[i][j][p].eval(0.0)?;
                if b != 0.0 {
                    let loc = Term::Discrete { i, j, p }.label("f");
                    rhs += b * eval_at(&spec.f[i][j][p].expr, loc, x_star[j])?;
                }
            }
            let c = spec.c[i][j].eval(0.0)?;
            if c != 0.0 {
                let total = signed_total(&spec.zeta[i][j], tol_eq / 10.0)?;
                let loc = Term::Distributed { i, j }.label("g");
                rhs += c * total * eval_at(&spec.g[i][j].expr, loc, x_star[j])?;
            }
        }
        residual = residual.max((x_star[i] - rhs).abs());
    }
    Ok(residual)
}

fn shift_activation(a: &ActivationSpec, x: f64, loc: String) -> Result<ActivationSpec> {
    let offset = eval_at(&a.expr, loc, x)?;
    Ok(ActivationSpec {
        expr: a.expr.shifted(x, offset),
        bound: a.bound,
        regime: match a.regime {
            Regime::Lipschitz => Regime::Sublinear,
            r => r,
        },
        saturation: a.saturation.map(|s| 2.0 * s),
    })
}

/// Moves a verified equilibrium `x*` of an autonomous model to the origin:
/// activations become `f(u + x*_j) - f(x*_j)` and inputs vanish.
pub fn shift_to_equilibrium(spec: &ModelSpec, x_star: &[f64], tol_eq: f64) -> Result<ModelSpec> {
    let residual = verify_equilibrium(spec, x_star, tol_eq)?;
    if residual > tol_eq {
        return Err(Error::NotEquilibrium {
            residual,
            tol: tol_eq,
        });
    }
    let mut out = spec.clone();
    for (term, act) in spec.active_activations() {
        if act.regime != Regime::Lipschitz {
            return Err(Error::Precondition(format!(
                "{} must be declared lipschitz to shift the equilibrium",
                match term {
                    Term::Discrete { .. } => term.label("f"),
                    Term::Distributed { .. } => term.label("g"),
                }
            )));
        }
    }
    for i in 0..spec.n {
        for j in 0..spec.n {
            for p in 0..spec.p {
                let loc = Term::Discrete { i, j, p }.label("f");
                out.f[i][j][p] = shift_activation(&spec.f[i][j][p], x_star[j], loc)?;
            }
            let loc = Term::Distributed { i, j }.label("g");
            out.g[i][j] = shift_activation(&spec.g[i][j], x_star[j], loc)?;
        }
        out.input[i] = InputSpec::zero();
    }
    out.name = spec.name.as_ref().map(|n| format!("{n} (shifted)"));
    out.reference = None;
    Ok(out)
}
