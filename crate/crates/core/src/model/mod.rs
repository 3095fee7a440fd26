//! Model description: coefficients, delays, kernels, activations and inputs
//! of the network
//!
//! ```text
//! x_i(m+1) = a_i(m) x_i(m - nu_i(m))
//!          + sum_j sum_p b_ijp(m) f_ijp(x_j(m - tau_ijp(m)))
//!          + sum_j c_ij(m) sum_l zeta_ijl g_ij(x_j(m - l))
//!          + I_i(m)
//! ```

mod config;
mod equilibrium;
mod hypotheses;
mod summary;

use serde::{Deserialize, Serialize};

use crate::{expr::Expr, matrix::SquareMatrix, Error, Result};

pub use config::{load_model, load_model_file};
pub use equilibrium::{shift_to_equilibrium, verify_equilibrium};
pub use hypotheses::{
    check_hypotheses, ActivationCheck, Hypothesis, HypothesisCheck, HypothesisReport, Status,
};
pub use summary::{
    boundedness_bound, build_criterion_matrices, summarize_coefficients, Bounds,
    CoefficientSummary, Entry, Provenance,
};

/// Free variable of coefficient, delay and input expressions.
pub const TIME_VAR: &str = "m";
/// Free variable of activation expressions.
pub const ACTIVATION_VAR: &str = "u";
/// Free variable of closed-form kernel expressions.
pub const KERNEL_VAR: &str = "l";

/// Absolute distance within which a delay value is snapped to an integer.
pub const DELAY_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `|f(u)| <= F` for `|u| > 1` and `|f(u)| < F|u|` for `0 < |u| <= 1`.
    #[serde(alias = "H6")]
    Bounded,
    /// `|f(u)| < F|u|` for `u != 0`.
    #[serde(alias = "H6*")]
    Sublinear,
    /// `|f(u) - f(v)| < F|u - v|` for `u != v`.
    #[serde(alias = "H6dagger")]
    Lipschitz,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActivationSpec {
    pub expr: Expr,
    /// The constant `F_ijp` or `G_ij`.
    pub bound: f64,
    pub regime: Regime,
    /// Global bound on `|f|` when it differs from `bound`. Only meaningful
    /// for bounded activations whose slope constant is smaller than their
    /// range, such as a centred logistic function.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub saturation: Option<f64>,
}

impl ActivationSpec {
    pub fn zero() -> ActivationSpec {
        ActivationSpec {
            expr: Expr::zero(ACTIVATION_VAR),
            bound: 1.0,
            regime: Regime::Bounded,
            saturation: None,
        }
    }

    /// Declared bound on `sup |f|`, if the activation is declared bounded.
    pub fn range_bound(&self) -> Option<f64> {
        match self.regime {
            Regime::Bounded => Some(self.saturation.unwrap_or(self.bound)),
            _ => self.saturation,
        }
    }

    pub fn eval(&self, u: f64) -> Result<f64> {
        Ok(self.expr.eval(u)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum KernelForm {
    /// `zeta_l = scale * ratio^l`
    Geometric { ratio: f64, scale: f64 },
    /// `zeta_l = scale / ((l + 1)(l + 2))`
    Telescoping { scale: f64 },
    ClosedForm { expr: Expr },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelSpec {
    #[serde(flatten)]
    pub form: KernelForm,
    /// Claimed `sum_l |zeta_l|`.
    pub declared_total: f64,
}

impl KernelSpec {
    pub fn zero() -> KernelSpec {
        KernelSpec {
            form: KernelForm::ClosedForm {
                expr: Expr::zero(KERNEL_VAR),
            },
            declared_total: 0.0,
        }
    }

    pub fn geometric(ratio: f64, scale: f64) -> KernelSpec {
        KernelSpec {
            form: KernelForm::Geometric { ratio, scale },
            declared_total: scale.abs() / (1.0 - ratio.abs()),
        }
    }

    pub fn telescoping(scale: f64) -> KernelSpec {
        KernelSpec {
            form: KernelForm::Telescoping { scale },
            declared_total: scale.abs(),
        }
    }

    pub fn value(&self, l: u64) -> Result<f64> {
        Ok(match &self.form {
            KernelForm::Geometric { ratio, scale } => scale * pow_u64(*ratio, l),
            KernelForm::Telescoping { scale } => {
                let l = l as f64;
                scale / ((l + 1.0) * (l + 2.0))
            }
            KernelForm::ClosedForm { expr } => expr.eval(l as f64)?,
        })
    }

    pub fn is_analytic(&self) -> bool {
        !matches!(self.form, KernelForm::ClosedForm { .. })
    }

    /// `sum_l |zeta_l|` in closed form.
    pub fn analytic_total(&self) -> Option<f64> {
        match &self.form {
            KernelForm::Geometric { ratio, scale } if ratio.abs() < 1.0 => {
                Some(scale.abs() / (1.0 - ratio.abs()))
            }
            KernelForm::Telescoping { scale } => Some(scale.abs()),
            _ => None,
        }
    }

    /// `sum_{l >= from} |zeta_l|` in closed form.
    pub fn analytic_abs_tail(&self, from: u64) -> Option<f64> {
        match &self.form {
            KernelForm::Geometric { ratio, scale } if ratio.abs() < 1.0 => {
                Some(scale.abs() * pow_u64(ratio.abs(), from) / (1.0 - ratio.abs()))
            }
            KernelForm::Telescoping { scale } => Some(scale.abs() / (from as f64 + 1.0)),
            _ => None,
        }
    }

    /// `sum_{l >= from} zeta_l` in closed form.
    pub fn analytic_signed_tail(&self, from: u64) -> Option<f64> {
        match &self.form {
            KernelForm::Geometric { ratio, scale } if ratio.abs() < 1.0 => {
                Some(scale * pow_u64(*ratio, from) / (1.0 - ratio))
            }
            KernelForm::Telescoping { scale } => Some(scale / (from as f64 + 1.0)),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.form {
            KernelForm::Geometric { scale, .. } | KernelForm::Telescoping { scale } => *scale == 0.0,
            KernelForm::ClosedForm { expr } => expr.is_zero(),
        }
    }
}

fn pow_u64(base: f64, exp: u64) -> f64 {
    match i32::try_from(exp) {
        Ok(e) => base.powi(e),
        Err(_) => base.powf(exp as f64),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// `|I(m)| <= scale * ratio^m`
    Geometric { ratio: f64, scale: f64 },
    /// `|I(m)| <= scale / (m + 1)^exponent`
    PSeries { exponent: f64, scale: f64 },
    /// `I(m) = 0` for `m > last_m`.
    FiniteSupport { last_m: u64 },
    /// `sum_m |I(m)| <= total`
    Declared { total: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputSpec {
    pub expr: Expr,
    pub certificate: Certificate,
}

impl InputSpec {
    pub fn zero() -> InputSpec {
        InputSpec {
            expr: Expr::zero(TIME_VAR),
            certificate: Certificate::FiniteSupport { last_m: 0 },
        }
    }

    /// Upper bound on `sum_m |I(m)|` implied by the certificate.
    pub fn total_bound(&self) -> Result<f64> {
        if self.expr.is_zero() {
            return Ok(0.0);
        }
        Ok(match self.certificate {
            Certificate::Geometric { ratio, scale } => scale.abs() / (1.0 - ratio.abs()),
            Certificate::PSeries { exponent, scale } => scale.abs() * exponent / (exponent - 1.0),
            Certificate::FiniteSupport { last_m } => {
                let mut s = 0.0;
                for m in 0..=last_m {
                    s += self.expr.eval(m as f64)?.abs();
                }
                s
            }
            Certificate::Declared { total } => total,
        })
    }

    /// Certified pointwise majorant of `|I(m)|`, when the certificate gives one.
    pub fn majorant(&self, m: u64) -> Option<f64> {
        match self.certificate {
            Certificate::Geometric { ratio, scale } => Some(scale.abs() * pow_u64(ratio.abs(), m)),
            Certificate::PSeries { exponent, scale } => {
                Some(scale.abs() / (m as f64 + 1.0).powf(exponent))
            }
            Certificate::FiniteSupport { last_m } if m > last_m => Some(0.0),
            _ => None,
        }
    }
}

/// User-asserted coefficient summaries. `None` entries are sampled.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Declared {
    pub a_sup: Vec<Option<f64>>,
    pub a_limsup: Vec<Option<f64>>,
    pub b_sup: Vec<Vec<Vec<Option<f64>>>>,
    pub b_limsup: Vec<Vec<Vec<Option<f64>>>>,
    pub c_sup: Vec<Vec<Option<f64>>>,
    pub c_limsup: Vec<Vec<Option<f64>>>,
}

impl Declared {
    pub fn empty(n: usize, p: usize) -> Declared {
        Declared {
            a_sup: vec![None; n],
            a_limsup: vec![None; n],
            b_sup: vec![vec![vec![None; p]; n]; n],
            b_limsup: vec![vec![vec![None; p]; n]; n],
            c_sup: vec![vec![None; n]; n],
            c_limsup: vec![vec![None; n]; n],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriterionMatrix {
    #[serde(rename = "M_plus")]
    Plus,
    #[serde(rename = "M_hat")]
    Hat,
}

/// A published matrix to compare against.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reference {
    pub matrix: CriterionMatrix,
    pub rows: SquareMatrix,
    pub verdict: Option<String>,
}

/// A complete, structurally valid model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSpec {
    pub name: Option<String>,
    pub n: usize,
    #[serde(rename = "P")]
    pub p: usize,
    /// First time index from which sup-type hypotheses are sampled.
    pub check_start: u64,
    pub a: Vec<Expr>,
    pub nu: Vec<Expr>,
    pub b: Vec<Vec<Vec<Expr>>>,
    pub tau: Vec<Vec<Vec<Expr>>>,
    pub c: Vec<Vec<Expr>>,
    pub zeta: Vec<Vec<KernelSpec>>,
    pub f: Vec<Vec<Vec<ActivationSpec>>>,
    pub g: Vec<Vec<ActivationSpec>>,
    #[serde(rename = "I")]
    pub input: Vec<InputSpec>,
    pub declared: Declared,
    pub reference: Option<Reference>,
}

/// Index of a coupling term, zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Term {
    Discrete { i: usize, j: usize, p: usize },
    Distributed { i: usize, j: usize },
}

impl Term {
    pub fn label(self, name: &str) -> String {
        match self {
            Term::Discrete { i, j, p } => format!("{name}[{}][{}][{}]", i + 1, j + 1, p + 1),
            Term::Distributed { i, j } => format!("{name}[{}][{}]", i + 1, j + 1),
        }
    }
}

impl ModelSpec {
    /// Model of the given shape with every coefficient zero.
    pub fn zero(n: usize, p: usize) -> ModelSpec {
        let zm = || Expr::zero(TIME_VAR);
        ModelSpec {
            name: None,
            n,
            p,
            check_start: 0,
            a: vec![zm(); n],
            nu: vec![zm(); n],
            b: vec![vec![vec![zm(); p]; n]; n],
            tau: vec![vec![vec![zm(); p]; n]; n],
            c: vec![vec![zm(); n]; n],
            zeta: vec![vec![KernelSpec::zero(); n]; n],
            f: vec![vec![vec![ActivationSpec::zero(); p]; n]; n],
            g: vec![vec![ActivationSpec::zero(); n]; n],
            input: vec![InputSpec::zero(); n],
            declared: Declared::empty(n, p),
            reference: None,
        }
    }

    /// Discrete-delay terms whose coefficient is not identically zero.
    pub fn active_discrete(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let (n, p) = (self.n, self.p);
        (0..n)
            .flat_map(move |i| (0..n).flat_map(move |j| (0..p).map(move |k| (i, j, k))))
            .filter(|&(i, j, k)| !self.b[i][j][k].is_zero())
    }

    /// Distributed-delay terms whose coefficient and kernel are not
    /// identically zero.
    pub fn active_distributed(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        (0..n)
            .flat_map(move |i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| !self.c[i][j].is_zero() && !self.zeta[i][j].is_zero())
    }

    /// Activations that actually enter the dynamics, with their terms.
    pub fn active_activations(&self) -> Vec<(Term, &ActivationSpec)> {
        let mut out: Vec<(Term, &ActivationSpec)> = self
            .active_discrete()
            .map(|(i, j, p)| (Term::Discrete { i, j, p }, &self.f[i][j][p]))
            .collect();
        out.extend(
            self.active_distributed()
                .map(|(i, j)| (Term::Distributed { i, j }, &self.g[i][j])),
        );
        out
    }

    /// True when every time-dependent expression is constant.
    pub fn is_autonomous(&self) -> bool {
        self.time_exprs().all(|(_, e)| e.is_constant())
    }

    /// Every expression in `m` with its location label.
    pub fn time_exprs(&self) -> impl Iterator<Item = (String, &Expr)> + '_ {
        let n = self.n;
        let p = self.p;
        let a = (0..n).map(move |i| (format!("a[{}]", i + 1), &self.a[i]));
        let nu = (0..n).map(move |i| (format!("nu[{}]", i + 1), &self.nu[i]));
        let input = (0..n).map(move |i| (format!("I[{}]", i + 1), &self.input[i].expr));
        let b = (0..n).flat_map(move |i| {
            (0..n).flat_map(move |j| {
                (0..p).flat_map(move |k| {
                    let t = Term::Discrete { i, j, p: k };
                    [(t.label("b"), &self.b[i][j][k]), (t.label("tau"), &self.tau[i][j][k])]
                })
            })
        });
        let c = (0..n).flat_map(move |i| {
            (0..n).map(move |j| (Term::Distributed { i, j }.label("c"), &self.c[i][j]))
        });
        a.chain(nu).chain(b).chain(c).chain(input)
    }

    pub fn bounds(&self) -> Bounds {
        Bounds {
            f: self
                .f
                .iter()
                .map(|row| row.iter().map(|ps| ps.iter().map(|a| a.bound).collect()).collect())
                .collect(),
            g: self
                .g
                .iter()
                .map(|row| row.iter().map(|a| a.bound).collect())
                .collect(),
        }
    }

    /// Evaluates a delay and checks it is a non-negative integer, snapping
    /// values within [`DELAY_SNAP`] of one.
    pub fn delay_at(expr: &Expr, location: &str, m: i64) -> Result<u64> {
        let v = expr.eval(m as f64).map_err(|source| Error::EvalAt {
            location: location.to_string(),
            at: m as f64,
            source,
        })?;
        let r = v.round();
        if (v - r).abs() > DELAY_SNAP {
            return Err(Error::Delay {
                location: location.into(),
                m,
                value: v,
                reason: "not an integer",
            });
        }
        if r < 0.0 {
            return Err(Error::Delay {
                location: location.into(),
                m,
                value: v,
                reason: "negative",
            });
        }
        if r > 9.0e15 {
            return Err(Error::Delay {
                location: location.into(),
                m,
                value: v,
                reason: "too large",
            });
        }
        Ok(r as u64)
    }
}
