//! Monotone envelopes `f*(x) = max_{|u| <= x} |f(u)|` and the bound
//! iteration `S_q = Phi(S_{q-1})` on limsup bounds of the state.

use std::{collections::BTreeMap, io::Write};

use serde::Serialize;

use crate::{
    model::{ActivationSpec, CoefficientSummary, CriterionMatrix, ModelSpec, Regime, Term},
    Error, Result,
};

pub const DEFAULT_TOL_FIX: f64 = 1e-9;
pub const DEFAULT_Q_CAP: u64 = 10_000;
pub const GRID_INTERVALS: usize = 4096;
/// Sub-samples per grid interval when taking running maxima.
const REFINE: usize = 4;
/// Relative slack before a non-monotone step is reported.
const MONOTONE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExactForm {
    /// `f` odd and non-decreasing: `f*(x) = f(x)` for `x >= 0`.
    MonotoneOddPassthrough,
    /// The envelope reaches its maximum before `x_max` and stays there.
    Clipped,
    Generic,
}

#[derive(Debug, Clone, Serialize)]
pub struct Envelope {
    pub source: ActivationSpec,
    pub x_max: f64,
    pub h: f64,
    /// `f*(k h)` for `k = 0..=GRID_INTERVALS`.
    pub values: Vec<f64>,
    pub exact_form: ExactForm,
}

/// Result of evaluating an envelope, flagged when `x` was clamped to `x_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeValue {
    pub value: f64,
    pub clamped: bool,
}

pub fn build_envelope(act: &ActivationSpec, x_max: f64, h: f64) -> Result<Envelope> {
    if !(x_max > 0.0 && h > 0.0 && x_max.is_finite()) {
        return Err(Error::Invalid(format!(
            "envelope needs x_max > 0 and h > 0, got x_max = {x_max}, h = {h}"
        )));
    }
    let intervals = (x_max / h).ceil() as usize;
    let sub = h / REFINE as f64;
    let eval = |u: f64| {
        act.expr.eval(u).map_err(|source| Error::EvalAt {
            location: "envelope".into(),
            at: u,
            source,
        })
    };
    let f0 = eval(0.0)?;
    let mut values = Vec::with_capacity(intervals + 1);
    let mut running = f0.abs();
    values.push(running);
    let mut passthrough = f0 == 0.0;
    let mut prev_pos = f0;
    for k in 1..=intervals {
        for r in 1..=REFINE {
            let u = ((k - 1) * REFINE + r) as f64 * sub;
            let (p, m) = (eval(u)?, eval(-u)?);
            running = running.max(p.abs()).max(m.abs());
            if p != -m || p < prev_pos {
                passthrough = false;
            }
            prev_pos = p;
        }
        values.push(running);
    }
    // f*(0) = 0 is part of the contract only for activations vanishing at 0.
    if f0 == 0.0 {
        values[0] = 0.0;
    }
    let last = *values.last().unwrap();
    let exact_form = if passthrough {
        ExactForm::MonotoneOddPassthrough
    } else if values.len() > 2 && values[values.len() / 2] == last {
        ExactForm::Clipped
    } else {
        ExactForm::Generic
    };
    Ok(Envelope {
        source: act.clone(),
        x_max: intervals as f64 * h,
        h,
        values,
        exact_form,
    })
}

impl Envelope {
    /// Piecewise-linear interpolation on the grid. Beyond `x_max` the
    /// envelope is clamped for bounded activations and an error otherwise.
    pub fn eval(&self, x: f64) -> Result<EnvelopeValue> {
        if !(x >= 0.0) {
            return Err(Error::OutOfRange(format!("envelope argument {x} is negative")));
        }
        if x > self.x_max {
            return match self.source.regime {
                Regime::Bounded => Ok(EnvelopeValue {
                    value: *self.values.last().unwrap(),
                    clamped: true,
                }),
                _ => Err(Error::OutOfRange(format!(
                    "envelope argument {x} exceeds x_max = {} for an unbounded activation",
                    self.x_max
                ))),
            };
        }
        let pos = x / self.h;
        let k = (pos.floor() as usize).min(self.values.len() - 2);
        let t = pos - k as f64;
        let (lo, hi) = (self.values[k], self.values[k + 1]);
        Ok(EnvelopeValue {
            value: lo + t * (hi - lo),
            clamped: false,
        })
    }
}

pub fn eval_envelope(env: &Envelope, x: f64) -> Result<EnvelopeValue> {
    env.eval(x)
}

/// Envelopes of every active activation in a model.
#[derive(Debug, Clone, Serialize)]
pub struct Envelopes {
    pub x_max: f64,
    pub h: f64,
    pub f: BTreeMap<(usize, usize, usize), Envelope>,
    pub g: BTreeMap<(usize, usize), Envelope>,
}

pub fn build_envelopes(spec: &ModelSpec, x_max: f64) -> Result<Envelopes> {
    let h = x_max / GRID_INTERVALS as f64;
    let mut f = BTreeMap::new();
    for (i, j, p) in spec.active_discrete() {
        let env = build_envelope(&spec.f[i][j][p], x_max, h).map_err(|e| relocate(e, Term::Discrete { i, j, p }.label("f")))?;
        f.insert((i, j, p), env);
    }
    let mut g = BTreeMap::new();
    for (i, j) in spec.active_distributed() {
        let env = build_envelope(&spec.g[i][j], x_max, h).map_err(|e| relocate(e, Term::Distributed { i, j }.label("g")))?;
        g.insert((i, j), env);
    }
    Ok(Envelopes { x_max, h, f, g })
}

fn relocate(e: Error, location: String) -> Error {
    match e {
        Error::EvalAt { at, source, .. } => Error::EvalAt { location, at, source },
        e => e,
    }
}

/// `x_max = max(8, 2 max_i S_{i,0})`.
pub fn default_x_max(start: &[f64]) -> f64 {
    start.iter().fold(8.0f64, |m, &s| m.max(2.0 * s))
}

struct Coefficients<'a> {
    a: Vec<f64>,
    summary: &'a CoefficientSummary,
    regime: CriterionMatrix,
}

impl Coefficients<'_> {
    fn b(&self, i: usize, j: usize, p: usize) -> f64 {
        match self.regime {
            CriterionMatrix::Hat => self.summary.b_limsup[i][j][p].value,
            CriterionMatrix::Plus => self.summary.b_sup[i][j][p].value,
        }
    }

    fn c(&self, i: usize, j: usize) -> f64 {
        match self.regime {
            CriterionMatrix::Hat => self.summary.c_limsup[i][j].value,
            CriterionMatrix::Plus => self.summary.c_sup[i][j].value,
        }
    }
}

fn coefficients(summary: &CoefficientSummary, regime: CriterionMatrix) -> Result<Coefficients<'_>> {
    let a: Vec<f64> = match regime {
        CriterionMatrix::Hat => &summary.a_limsup,
        CriterionMatrix::Plus => &summary.a_sup,
    }
    .iter()
    .map(|e| e.value)
    .collect();
    if let Some(i) = a.iter().position(|&v| v >= 1.0) {
        return Err(Error::Precondition(format!(
            "a[{}] bound {} is not below 1",
            i + 1,
            a[i]
        )));
    }
    Ok(Coefficients { a, summary, regime })
}

/// `S_{i,0} = (1/(1 - a_i)) sum_j (sum_p b_ijp B_ijp + c_ij B_ij)` from
/// limsups, where `B` is the range bound of each activation.
pub fn hat_start(spec: &ModelSpec, summary: &CoefficientSummary) -> Result<Vec<f64>> {
    let co = coefficients(summary, CriterionMatrix::Hat)?;
    let mut s = vec![0.0; spec.n];
    for (i, j, p) in spec.active_discrete() {
        let r = spec.f[i][j][p].range_bound().ok_or_else(|| unbounded(Term::Discrete { i, j, p }.label("f")))?;
        s[i] += co.b(i, j, p) * r;
    }
    for (i, j) in spec.active_distributed() {
        let r = spec.g[i][j].range_bound().ok_or_else(|| unbounded(Term::Distributed { i, j }.label("g")))?;
        s[i] += co.c(i, j) * r;
    }
    for (v, a) in s.iter_mut().zip(&co.a) {
        *v /= 1.0 - a;
    }
    Ok(s)
}

fn unbounded(loc: String) -> Error {
    Error::Precondition(format!("{loc} has no range bound; the limsup start needs bounded activations"))
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundIteration {
    pub regime: CriterionMatrix,
    /// `S_0, S_1, ..., S_{q_max}`.
    pub trace: Vec<Vec<f64>>,
    pub converged_to: Vec<f64>,
    pub q_max: u64,
    /// `||S_q - S_{q-1}|| < tol_fix` was reached before `q_cap`.
    pub converged: bool,
    /// `||S - Phi(S)||` at the final vector.
    pub residual: f64,
    /// Some envelope was evaluated past its grid.
    pub clamped: bool,
    pub tol_fix: f64,
}

impl BoundIteration {
    pub fn final_norm(&self) -> f64 {
        self.converged_to.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// CSV with columns `q, S_1..S_n`.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        let n = self.converged_to.len();
        let mut header = vec!["q".to_string()];
        header.extend((1..=n).map(|i| format!("S_{i}")));
        writeln!(w, "{}", header.join(","))?;
        for (q, s) in self.trace.iter().enumerate() {
            write!(w, "{q}")?;
            for v in s {
                write!(w, ",{v:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

fn phi(
    spec: &ModelSpec,
    co: &Coefficients,
    env: &Envelopes,
    s: &[f64],
    clamped: &mut bool,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; spec.n];
    let mut ev = |e: &Envelope, x: f64| -> Result<f64> {
        let v = e.eval(x)?;
        *clamped |= v.clamped;
        Ok(v.value)
    };
    for (&(i, j, p), e) in &env.f {
        let b = co.b(i, j, p);
        if b != 0.0 {
            out[i] += b * ev(e, s[j])?;
        }
    }
    for (&(i, j), e) in &env.g {
        let c = co.c(i, j);
        if c != 0.0 {
            out[i] += c * ev(e, s[j])?;
        }
    }
    for (v, a) in out.iter_mut().zip(&co.a) {
        *v /= 1.0 - a;
    }
    Ok(out)
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Iterates `S_q = Phi(S_{q-1})` from `start` until successive vectors differ
/// by less than `tol_fix` or `q_cap` steps were taken.
pub fn iterate_bound(
    spec: &ModelSpec,
    summary: &CoefficientSummary,
    envelopes: &Envelopes,
    regime: CriterionMatrix,
    start: &[f64],
    q_cap: u64,
    tol_fix: f64,
) -> Result<BoundIteration> {
    if start.len() != spec.n {
        return Err(Error::Extent {
            field: "start vector".into(),
            expected: spec.n,
            found: start.len(),
        });
    }
    if start.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::Invalid("start vector must be finite and non-negative".into()));
    }
    let co = coefficients(summary, regime)?;
    let mut clamped = false;
    let mut trace = vec![start.to_vec()];
    let mut converged = false;
    let mut q = 0u64;
    while q < q_cap {
        let prev = trace.last().unwrap();
        let next = phi(spec, &co, envelopes, prev, &mut clamped)?;
        q += 1;
        for (k, (&n, &p)) in next.iter().zip(prev).enumerate() {
            if n > p + MONOTONE_SLACK * p.abs().max(1.0) {
                return Err(Error::Monotonicity {
                    q: q as usize,
                    component: k + 1,
                    previous: p,
                    next: n,
                });
            }
        }
        let step = sup_diff(&next, prev);
        trace.push(next);
        if step < tol_fix {
            converged = true;
            break;
        }
    }
    let last = trace.last().unwrap().clone();
    let residual = sup_diff(&last, &phi(spec, &co, envelopes, &last, &mut clamped)?);
    Ok(BoundIteration {
        regime,
        converged_to: last,
        q_max: q,
        trace,
        converged,
        residual,
        clamped,
        tol_fix,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{
        builtin,
        expr::Expr,
        model::{summarize_coefficients, ACTIVATION_VAR},
        Tolerances, DEFAULT_HORIZON,
    };

    fn act(src: &str, regime: Regime) -> ActivationSpec {
        ActivationSpec {
            expr: Expr::parse(src, ACTIVATION_VAR).unwrap(),
            bound: 1.0,
            regime,
            saturation: None,
        }
    }

    #[test]
    fn monotone_odd_passthrough() {
        let e = build_envelope(&act("tanh(u)", Regime::Bounded), 8.0, 8.0 / 4096.0).unwrap();
        assert_eq!(e.exact_form, ExactForm::MonotoneOddPassthrough);
        for (k, v) in e.values.iter().enumerate() {
            assert_eq!(*v, (k as f64 * e.h).tanh());
        }
        assert_eq!(e.eval(0.0).unwrap().value, 0.0);
        let err = e.h * e.h * 0.77 / 8.0;
        assert!((e.eval(1.0).unwrap().value - 1f64.tanh()).abs() <= err);
    }

    #[test]
    fn clipped_arctan() {
        let e = build_envelope(&act("min(arctan(abs(u)), 1)", Regime::Bounded), 8.0, 8.0 / 4096.0).unwrap();
        assert_eq!(e.exact_form, ExactForm::Clipped);
        let v = e.eval(10.0).unwrap();
        assert_eq!(v, EnvelopeValue { value: 1.0, clamped: true });
        let s = build_envelope(&act("tanh(u)", Regime::Sublinear), 8.0, 0.5).unwrap();
        assert!(matches!(s.eval(10.0), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn non_monotone_activation() {
        // |u e^{-u^2}| peaks at u = 1/sqrt(2)
        let e = build_envelope(&act("u*exp(-u^2)", Regime::Bounded), 4.0, 4.0 / 4096.0).unwrap();
        let peak = (0.5f64).sqrt() * (-0.5f64).exp();
        let v = e.eval(3.0).unwrap().value;
        assert!(v <= peak && peak - v < 1e-7);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn decoupled_model_is_fixed_at_zero() {
        let spec = ModelSpec::zero(2, 1);
        let s = summarize_coefficients(&spec, 100, &Tolerances::default()).unwrap();
        let start = hat_start(&spec, &s).unwrap();
        assert_eq!(start, vec![0.0, 0.0]);
        let env = build_envelopes(&spec, 8.0).unwrap();
        let it = iterate_bound(&spec, &s, &env, CriterionMatrix::Hat, &start, 10, 1e-9).unwrap();
        assert!(it.converged);
        assert_eq!(it.q_max, 1);
        assert_eq!(it.residual, 0.0);
    }

    #[test]
    fn builtin_iterations_decrease() {
        let t = Tolerances::default();
        let spec = builtin::load("4.1").unwrap();
        let s = summarize_coefficients(&spec, DEFAULT_HORIZON, &t).unwrap();
        let start = hat_start(&spec, &s).unwrap();
        assert!(start.iter().all(|&v| v > 0.0));
        let env = build_envelopes(&spec, default_x_max(&start)).unwrap();
        let it = iterate_bound(&spec, &s, &env, CriterionMatrix::Hat, &start, 200, 1e-9).unwrap();
        for w in it.trace.windows(2) {
            assert!(w[1].iter().zip(&w[0]).all(|(a, b)| a <= b));
        }
        assert!(it.final_norm() < start.iter().cloned().fold(0.0, f64::max));
        let mut buf = Vec::new();
        it.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("q,S_1,S_2,S_3\n0,"));
        assert_eq!(text.lines().count(), it.trace.len() + 1);
    }

    #[test]
    fn increasing_start_is_reported() {
        let spec = builtin::load("4.2").unwrap();
        let s = summarize_coefficients(&spec, DEFAULT_HORIZON, &Tolerances::default()).unwrap();
        let env = build_envelopes(&spec, 8.0).unwrap();
        // Neuron 2 feeds on neurons 1 and 3; starting it at 0 forces an increase.
        let r = iterate_bound(&spec, &s, &env, CriterionMatrix::Plus, &[1.0, 0.0, 1.0], 10, 1e-9);
        assert!(matches!(r, Err(Error::Monotonicity { component: 2, .. })));
    }
}
