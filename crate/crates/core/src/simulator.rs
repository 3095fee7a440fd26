//! Forward simulation with bounded pre-history and certified truncation of
//! the infinite distributed-delay sums.
//!
//! The history before `sigma - depth` is a constant vector, so for a kernel
//! with a closed-form tail the part of `sum_l zeta_l g(x(m - l))` reaching
//! into it is `g(tail) * sum_{l >= L} zeta_l` and is added exactly. The
//! remaining sum over actual history is cut at the first `l*` whose tail
//! mass times a bound on `|g|` over the history is at most `eps_trunc`.

use std::io::Write;

use serde::Serialize;

use crate::{
    expr::Expr,
    model::{
        boundedness_bound, CoefficientSummary, KernelForm, KernelSpec, ModelSpec, Term,
    },
    Error, Result,
};

pub const DEFAULT_STEPS: u64 = 2000;
pub const DEFAULT_EPS_TRUNC: f64 = 1e-12;
pub const DEFAULT_CONV_TOL: f64 = 1e-3;
pub const DEFAULT_CONV_WINDOW: u64 = 50;
/// Slack added to the a priori bound before it is reported as exceeded.
pub const BOUND_SLACK: f64 = 1e-6;
/// Cap on explicit kernel terms added against a constant pre-history tail
/// for kernels without a closed-form tail.
const MAX_TAIL_TERMS: u64 = 10_000_000;

/// Initial history: `psi(s)` for `s in [-depth, 0]` and a constant vector
/// before that, placed at start time `sigma`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitialCondition {
    /// `support[k] = psi(-k)`.
    pub support: Vec<Vec<f64>>,
    pub tail: Vec<f64>,
    pub sigma: u64,
}

impl InitialCondition {
    pub fn zero(n: usize) -> InitialCondition {
        InitialCondition::constant(vec![0.0; n], 0)
    }

    pub fn constant(value: Vec<f64>, sigma: u64) -> InitialCondition {
        InitialCondition {
            support: vec![value.clone()],
            tail: value,
            sigma,
        }
    }

    /// `psi(s) = f(s)` on `[-depth, 0]`, `tail` before.
    pub fn from_fn(
        depth: u64,
        tail: Vec<f64>,
        sigma: u64,
        f: impl Fn(i64) -> Vec<f64>,
    ) -> InitialCondition {
        InitialCondition {
            support: (0..=depth as i64).map(|k| f(-k)).collect(),
            tail,
            sigma,
        }
    }

    pub fn n(&self) -> usize {
        self.tail.len()
    }

    pub fn depth(&self) -> u64 {
        self.support.len() as u64 - 1
    }

    /// `psi(s)` for `s <= 0`.
    pub fn value(&self, s: i64) -> &[f64] {
        debug_assert!(s <= 0);
        let k = s.unsigned_abs();
        self.support.get(k as usize).unwrap_or(&self.tail)
    }

    pub fn norm(&self) -> f64 {
        self.support
            .iter()
            .chain(std::iter::once(&self.tail))
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.support.is_empty() {
            return Err(Error::Invalid("initial condition needs psi(0)".into()));
        }
        for (k, v) in self.support.iter().chain(std::iter::once(&self.tail)).enumerate() {
            if v.len() != n {
                return Err(Error::Extent {
                    field: format!("initial condition entry {k}"),
                    expected: n,
                    found: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Invalid("initial condition must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn scaled_down(&self, d: &[f64]) -> InitialCondition {
        let div = |v: &Vec<f64>| v.iter().zip(d).map(|(x, di)| x / di).collect();
        InitialCondition {
            support: self.support.iter().map(div).collect(),
            tail: div(&self.tail),
            sigma: self.sigma,
        }
    }
}

/// Trajectory storage: the initial history followed by computed states.
#[derive(Debug, Clone)]
pub struct HistoryBuffer {
    initial: InitialCondition,
    /// `states[k] = x(sigma + 1 + k)`.
    states: Vec<Vec<f64>>,
}

impl HistoryBuffer {
    pub fn new(initial: InitialCondition) -> HistoryBuffer {
        HistoryBuffer {
            initial,
            states: Vec::new(),
        }
    }

    pub fn sigma(&self) -> u64 {
        self.initial.sigma
    }

    pub fn initial(&self) -> &InitialCondition {
        &self.initial
    }

    /// Latest time with a known state.
    pub fn latest(&self) -> i64 {
        self.sigma() as i64 + self.states.len() as i64
    }

    /// `x(t)` for any `t <= latest()`.
    pub fn lookup(&self, t: i64) -> &[f64] {
        let sigma = self.sigma() as i64;
        if t <= sigma {
            self.initial.value(t - sigma)
        } else {
            let k = (t - sigma - 1) as usize;
            assert!(k < self.states.len(), "x({t}) requested before it was computed");
            &self.states[k]
        }
    }

    pub fn push(&mut self, state: Vec<f64>) {
        self.states.push(state);
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }
}

/// Kernel values and their absolute prefix sums, extended on demand.
#[derive(Debug, Clone)]
struct KernelTable {
    kernel: KernelSpec,
    values: Vec<f64>,
    abs_prefix: Vec<f64>,
}

impl KernelTable {
    fn new(kernel: KernelSpec) -> KernelTable {
        KernelTable {
            kernel,
            values: Vec::new(),
            abs_prefix: vec![0.0],
        }
    }

    fn value(&mut self, l: u64) -> Result<f64> {
        while self.values.len() as u64 <= l {
            let v = self.kernel.value(self.values.len() as u64)?;
            self.values.push(v);
            let s = self.abs_prefix.last().unwrap() + v.abs();
            self.abs_prefix.push(s);
        }
        Ok(self.values[l as usize])
    }

    /// `sum_{l >= from} |zeta_l|`, analytic when available, otherwise the
    /// declared total minus the partial sum.
    fn abs_tail(&mut self, from: u64) -> Result<f64> {
        if let Some(t) = self.kernel.analytic_abs_tail(from) {
            return Ok(t);
        }
        if from > 0 {
            self.value(from - 1)?;
        }
        Ok((self.kernel.declared_total - self.abs_prefix[from as usize]).max(0.0))
    }
}

/// Truncated `sum_l zeta_l g(x(m - l))`. `avail` terms (`l < avail`) read
/// actual history through `g_at`; beyond them the history is the constant
/// tail with activation value `g_tail`. Returns the sum and the bound on
/// what was dropped.
fn kernel_sum(
    table: &mut KernelTable,
    avail: u64,
    g_bound: f64,
    g_tail: f64,
    eps: f64,
    mut g_at: impl FnMut(u64) -> Result<f64>,
) -> Result<(f64, f64)> {
    let mut sum = 0.0;
    for l in 0..avail {
        let tail = table.abs_tail(l)?;
        if tail * g_bound <= eps {
            return Ok((sum, tail * g_bound));
        }
        let z = table.value(l)?;
        if z != 0.0 {
            sum += z * g_at(l)?;
        }
    }
    if g_tail == 0.0 {
        return Ok((sum, 0.0));
    }
    if let Some(t) = table.kernel.analytic_signed_tail(avail) {
        return Ok((sum + g_tail * t, 0.0));
    }
    let mut l = avail;
    loop {
        let tail = table.abs_tail(l)?;
        if tail * g_tail.abs() <= eps || l - avail >= MAX_TAIL_TERMS {
            return Ok((sum, tail * g_tail.abs()));
        }
        sum += table.value(l)? * g_tail;
        l += 1;
    }
}

fn eval_at(e: &Expr, loc: impl FnOnce() -> String, x: f64) -> Result<f64> {
    e.eval(x).map_err(|source| Error::EvalAt {
        location: loc(),
        at: x,
        source,
    })
}

/// Bound on `|g(u)|` for `|u| <= state_bound`.
fn activation_bound(spec_g: &crate::model::ActivationSpec, g0: f64, state_bound: f64) -> f64 {
    let lin = g0.abs() + spec_g.bound * state_bound;
    match spec_g.range_bound() {
        Some(r) => lin.min(r),
        None => lin,
    }
}

/// Result of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub state: Vec<f64>,
    /// Largest dropped kernel mass times the activation bound.
    pub tail_err: f64,
}

struct Coupling<'a> {
    i: usize,
    j: usize,
    table: KernelTable,
    g: &'a crate::model::ActivationSpec,
    g0: f64,
    g_tail: f64,
    /// `g(x_j(t))` for `t >= sigma - depth`, by `t - (sigma - depth)`.
    cache: Vec<f64>,
}

/// Stateful stepper holding the history and per-coupling caches.
pub struct Simulator<'a> {
    spec: &'a ModelSpec,
    hist: HistoryBuffer,
    eps_trunc: f64,
    couplings: Vec<Coupling<'a>>,
    running_max: f64,
}

impl<'a> Simulator<'a> {
    pub fn new(spec: &'a ModelSpec, init: InitialCondition, eps_trunc: f64) -> Result<Simulator<'a>> {
        init.validate(spec.n)?;
        if !(eps_trunc > 0.0) {
            return Err(Error::Invalid(format!("eps_trunc must be positive, got {eps_trunc}")));
        }
        let mut couplings = Vec::new();
        for (i, j) in spec.active_distributed() {
            let g = &spec.g[i][j];
            let loc = || Term::Distributed { i, j }.label("g");
            let g0 = eval_at(&g.expr, loc, 0.0)?;
            let g_tail = eval_at(&g.expr, loc, init.tail[j])?;
            let cache = (0..=init.depth() as i64)
                .rev()
                .map(|k| eval_at(&g.expr, loc, init.value(-k)[j]))
                .collect::<Result<Vec<f64>>>()?;
            couplings.push(Coupling {
                i,
                j,
                table: KernelTable::new(spec.zeta[i][j].clone()),
                g,
                g0,
                g_tail,
                cache,
            });
        }
        Ok(Simulator {
            spec,
            running_max: init.norm(),
            hist: HistoryBuffer::new(init),
            eps_trunc,
            couplings,
        })
    }

    pub fn history(&self) -> &HistoryBuffer {
        &self.hist
    }

    /// Computes `x(m + 1)` for `m = latest()` and appends it.
    pub fn step(&mut self) -> Result<StepOutput> {
        let m = self.hist.latest();
        let depth = self.hist.initial().depth() as i64;
        let first = self.hist.sigma() as i64 - depth;
        let avail = (m - first + 1) as u64;
        let mut state = local_terms(self.spec, &self.hist, m)?;
        let mut tail_err = 0.0f64;
        let t = m as f64;
        for cp in &mut self.couplings {
            let c = eval_at(&self.spec.c[cp.i][cp.j], || Term::Distributed { i: cp.i, j: cp.j }.label("c"), t)?;
            if c == 0.0 {
                continue;
            }
            let bound = activation_bound(cp.g, cp.g0, self.running_max);
            let cache = &cp.cache;
            let (s, err) = kernel_sum(&mut cp.table, avail, bound, cp.g_tail, self.eps_trunc, |l| {
                Ok(cache[(m - l as i64 - first) as usize])
            })?;
            state[cp.i] += c * s;
            tail_err = tail_err.max(err);
        }
        for (i, input) in self.spec.input.iter().enumerate() {
            if !input.expr.is_zero() {
                state[i] += eval_at(&input.expr, || format!("I[{}]", i + 1), t)?;
            }
        }
        if let Some(k) = state.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("x_{}({}) is not finite", k + 1, m + 1)));
        }
        for cp in &mut self.couplings {
            let loc = || Term::Distributed { i: cp.i, j: cp.j }.label("g");
            cp.cache.push(eval_at(&cp.g.expr, loc, state[cp.j])?);
        }
        self.running_max = state.iter().fold(self.running_max, |a, v| a.max(v.abs()));
        self.hist.push(state.clone());
        Ok(StepOutput { state, tail_err })
    }
}

/// Leakage and discrete-delay terms of `x(m + 1)`.
fn local_terms(spec: &ModelSpec, hist: &HistoryBuffer, m: i64) -> Result<Vec<f64>> {
    let t = m as f64;
    let mut state = vec![0.0; spec.n];
    for (i, x) in state.iter_mut().enumerate() {
        if spec.a[i].is_zero() {
            continue;
        }
        let loc = format!("nu[{}]", i + 1);
        let nu = ModelSpec::delay_at(&spec.nu[i], &loc, m)? as i64;
        let a = eval_at(&spec.a[i], || format!("a[{}]", i + 1), t)?;
        *x += a * hist.lookup(m - nu)[i];
    }
    for (i, j, p) in spec.active_discrete() {
        let term = Term::Discrete { i, j, p };
        let tau = ModelSpec::delay_at(&spec.tau[i][j][p], &term.label("tau"), m)? as i64;
        let b = eval_at(&spec.b[i][j][p], || term.label("b"), t)?;
        if b == 0.0 {
            continue;
        }
        let u = hist.lookup(m - tau)[j];
        state[i] += b * eval_at(&spec.f[i][j][p].expr, || term.label("f"), u)?;
    }
    Ok(state)
}

/// One step of the model from an arbitrary history, without caching:
/// `x(m + 1)` where `m` must equal `hist.latest()`.
pub fn step(spec: &ModelSpec, hist: &HistoryBuffer, m: i64, eps_trunc: f64) -> Result<StepOutput> {
    if m != hist.latest() {
        return Err(Error::Invalid(format!(
            "step at m = {m} needs history up to m, which ends at {}",
            hist.latest()
        )));
    }
    let t = m as f64;
    let init = hist.initial();
    let first = hist.sigma() as i64 - init.depth() as i64;
    let avail = (m - first + 1) as u64;
    let state_bound = hist
        .states()
        .iter()
        .flatten()
        .fold(init.norm(), |a, v| a.max(v.abs()));
    let mut state = local_terms(spec, hist, m)?;
    let mut tail_err = 0.0f64;
    for (i, j) in spec.active_distributed() {
        let c = eval_at(&spec.c[i][j], || Term::Distributed { i, j }.label("c"), t)?;
        if c == 0.0 {
            continue;
        }
        let g = &spec.g[i][j];
        let loc = || Term::Distributed { i, j }.label("g");
        let g0 = eval_at(&g.expr, loc, 0.0)?;
        let g_tail = eval_at(&g.expr, loc, init.tail[j])?;
        let mut table = KernelTable::new(spec.zeta[i][j].clone());
        let bound = activation_bound(g, g0, state_bound);
        let (s, err) = kernel_sum(&mut table, avail, bound, g_tail, eps_trunc, |l| {
            eval_at(&g.expr, loc, hist.lookup(m - l as i64)[j])
        })?;
        state[i] += c * s;
        tail_err = tail_err.max(err);
    }
    for (i, input) in spec.input.iter().enumerate() {
        state[i] += eval_at(&input.expr, || format!("I[{}]", i + 1), t)?;
    }
    Ok(StepOutput { state, tail_err })
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub steps: u64,
    pub eps_trunc: f64,
    pub conv_tol: f64,
    pub conv_window: u64,
    /// Stop as soon as the convergence window criterion is met.
    pub stop_at_convergence: bool,
    /// Enables the a priori boundedness monitor.
    pub summary: Option<CoefficientSummary>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            steps: DEFAULT_STEPS,
            eps_trunc: DEFAULT_EPS_TRUNC,
            conv_tol: DEFAULT_CONV_TOL,
            conv_window: DEFAULT_CONV_WINDOW,
            stop_at_convergence: false,
            summary: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundedCheck {
    /// `K + C / (1 - a_plus)`, when every active activation has a range bound.
    pub bound: Option<f64>,
    pub max_norm: f64,
    /// `Some(false)` if the trajectory exceeded `bound + BOUND_SLACK`.
    pub within: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub sigma: u64,
    /// `x(sigma), x(sigma + 1), ...`
    pub trajectory: Vec<Vec<f64>>,
    pub sup_norm_series: Vec<f64>,
    /// Per-row kernel truncation error (0 for the initial row).
    pub truncation_budget: Vec<f64>,
    pub converged_at: Option<u64>,
    pub bounded_check: BoundedCheck,
    pub eps_trunc: f64,
    pub conv_tol: f64,
    pub conv_window: u64,
}

impl SimulationReport {
    pub fn final_norm(&self) -> f64 {
        *self.sup_norm_series.last().unwrap_or(&0.0)
    }

    /// CSV with columns `m, x_1..x_n, sup_norm, tail_err`, 17 significant digits.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        let n = self.trajectory.first().map_or(0, Vec::len);
        let mut header = vec!["m".to_string()];
        header.extend((1..=n).map(|i| format!("x_{i}")));
        header.push("sup_norm".into());
        header.push("tail_err".into());
        writeln!(w, "{}", header.join(","))?;
        for (k, x) in self.trajectory.iter().enumerate() {
            write!(w, "{}", self.sigma + k as u64)?;
            for v in x {
                write!(w, ",{v:.16e}")?;
            }
            writeln!(
                w,
                ",{:.16e},{:.16e}",
                self.sup_norm_series[k], self.truncation_budget[k]
            )?;
        }
        Ok(())
    }
}

fn sup_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Simulates `opts.steps` steps from `init`.
pub fn run(spec: &ModelSpec, init: InitialCondition, opts: &RunOptions) -> Result<SimulationReport> {
    if opts.steps == 0 {
        return Err(Error::Invalid("steps must be at least 1".into()));
    }
    let sigma = init.sigma;
    let psi_norm = init.norm();
    let bound = match &opts.summary {
        Some(s) => boundedness_bound(spec, s, psi_norm, sigma)?,
        None => None,
    };
    // Sup norms over the window that precedes sigma come from the history.
    let window = opts.conv_window as i64;
    let pre: Vec<f64> = (0..window)
        .rev()
        .map(|k| sup_norm(init.value(-(k + 1))))
        .collect();
    let mut sim = Simulator::new(spec, init, opts.eps_trunc)?;
    let x0 = sim.history().lookup(sigma as i64).to_vec();
    let mut report = SimulationReport {
        sigma,
        sup_norm_series: vec![sup_norm(&x0)],
        trajectory: vec![x0],
        truncation_budget: vec![0.0],
        converged_at: None,
        bounded_check: BoundedCheck {
            bound,
            max_norm: psi_norm,
            within: bound.map(|_| true),
        },
        eps_trunc: opts.eps_trunc,
        conv_tol: opts.conv_tol,
        conv_window: opts.conv_window,
    };
    // Ring of the last `window + 1` norms, seeded with pre-history.
    let mut norms: std::collections::VecDeque<f64> = pre.into_iter().collect();
    norms.push_back(report.sup_norm_series[0]);
    let window_ok = |norms: &std::collections::VecDeque<f64>| {
        norms.iter().all(|&v| v < opts.conv_tol)
    };
    if window_ok(&norms) {
        report.converged_at = Some(sigma);
    }
    for k in 1..=opts.steps {
        if report.converged_at.is_some() && opts.stop_at_convergence {
            break;
        }
        let out = sim.step()?;
        let norm = sup_norm(&out.state);
        report.bounded_check.max_norm = report.bounded_check.max_norm.max(norm);
        if let Some(b) = bound {
            if norm > b + BOUND_SLACK {
                report.bounded_check.within = Some(false);
            }
        }
        report.sup_norm_series.push(norm);
        report.truncation_budget.push(out.tail_err);
        report.trajectory.push(out.state);
        norms.push_back(norm);
        if norms.len() as i64 > window + 1 {
            norms.pop_front();
        }
        if report.converged_at.is_none() && window_ok(&norms) {
            report.converged_at = Some(sigma + k);
        }
    }
    Ok(report)
}

/// Which kernels in a model lack closed-form tails (their truncation error
/// relies on the declared total).
pub fn declared_tail_kernels(spec: &ModelSpec) -> Vec<String> {
    spec.active_distributed()
        .filter(|&(i, j)| matches!(spec.zeta[i][j].form, KernelForm::ClosedForm { .. }))
        .map(|(i, j)| Term::Distributed { i, j }.label("zeta"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{load_model, ModelSpec, TIME_VAR};

    #[test]
    fn history_lookup() {
        let init = InitialCondition::from_fn(3, vec![9.0], 5, |s| vec![s as f64]);
        let mut h = HistoryBuffer::new(init);
        assert_eq!(h.lookup(5), &[0.0]);
        assert_eq!(h.lookup(2), &[-3.0]);
        assert_eq!(h.lookup(1), &[9.0]);
        assert_eq!(h.lookup(-1000), &[9.0]);
        h.push(vec![7.0]);
        assert_eq!(h.lookup(6), &[7.0]);
        assert_eq!(h.latest(), 6);
    }

    #[test]
    fn zero_model_stays_zero() {
        let spec = ModelSpec::zero(2, 1);
        let r = run(&spec, InitialCondition::zero(2), &RunOptions::default()).unwrap();
        assert!(r.trajectory.iter().flatten().all(|&v| v == 0.0));
        assert_eq!(r.converged_at, Some(0));
    }

    #[test]
    fn scalar_recurrence() {
        // x(m+1) = x(m)/2 + 2^-m, x(0) = 0  =>  x(m) = m / 2^(m-1)
        let mut spec = ModelSpec::zero(1, 1);
        spec.a[0] = Expr::parse("1/2", TIME_VAR).unwrap();
        spec.input[0].expr = Expr::parse("2^(-m)", TIME_VAR).unwrap();
        let opts = RunOptions {
            steps: 60,
            ..RunOptions::default()
        };
        let r = run(&spec, InitialCondition::zero(1), &opts).unwrap();
        let mut x = 0.0f64;
        for (m, row) in r.trajectory.iter().enumerate() {
            assert_eq!(row[0], x, "m = {m}");
            assert!((x - m as f64 / 2f64.powi(m as i32 - 1)).abs() < 1e-14);
            x = x / 2.0 + 2f64.powi(-(m as i32));
        }
    }

    #[test]
    fn free_step_matches_simulator() {
        let spec = load_model(
            r#"{"n": 2, "P": 1, "a": ["1/2", "cos(pi*m)/3"], "nu": [1, 0],
                "b": [[[0], ["1/4"]], [[0], [0]]], "tau": [[[0], ["floor(m/2)"]], [[0], [0]]],
                "c": [[0, "1/5"], ["1/7", 0]],
                "zeta": [[null, {"form": "telescoping"}], [{"form": "geometric", "params": {"ratio": -0.5, "scale": 0.5}}, null]],
                "f": [[[null], [{"expr": "tanh(u)", "bound": 1, "regime": "bounded"}]], [[null], [null]]],
                "g": [[null, {"expr": "arctan(u)", "bound": 1, "regime": "sublinear"}],
                      [{"expr": "tanh(u)", "bound": 1, "regime": "bounded"}, null]]}"#,
        )
        .unwrap();
        let init = InitialCondition::from_fn(4, vec![0.5, -0.25], 0, |s| {
            vec![(s as f64).sin(), (s as f64).cos()]
        });
        let mut sim = Simulator::new(&spec, init.clone(), 1e-13).unwrap();
        let mut hist = HistoryBuffer::new(init);
        for m in 0..40 {
            let a = step(&spec, &hist, m, 1e-13).unwrap();
            let b = sim.step().unwrap();
            assert_eq!(a.state, b.state, "m = {m}");
            hist.push(a.state);
        }
    }

    #[test]
    fn closed_form_kernel_matches_geometric() {
        let mk = |zeta: &str| {
            load_model(&format!(
                r#"{{"n": 1, "P": 1, "a": ["1/3"], "c": [["1/2"]], "zeta": [[{zeta}]],
                    "g": [[{{"expr": "tanh(u)", "bound": 1, "regime": "bounded"}}]]}}"#
            ))
            .unwrap()
        };
        let geo = mk(r#"{"form": "geometric", "params": {"ratio": 0.5, "scale": 0.5}}"#);
        let closed = mk(r#"{"form": "closed_form", "params": {"expr": "1/2^(l+1)"}, "total": 1}"#);
        let init = InitialCondition::from_fn(2, vec![1.0], 0, |s| vec![1.0 + s as f64]);
        let opts = RunOptions {
            steps: 50,
            eps_trunc: 1e-14,
            ..RunOptions::default()
        };
        let a = run(&geo, init.clone(), &opts).unwrap();
        let b = run(&closed, init, &opts).unwrap();
        for (x, y) in a.trajectory.iter().zip(&b.trajectory) {
            assert!((x[0] - y[0]).abs() < 1e-12);
        }
        assert_eq!(declared_tail_kernels(&closed), vec!["zeta[1][1]".to_string()]);
    }

    #[test]
    fn csv_layout() {
        let spec = ModelSpec::zero(2, 1);
        let opts = RunOptions {
            steps: 2,
            ..RunOptions::default()
        };
        let r = run(&spec, InitialCondition::constant(vec![1.0, -2.0], 3), &opts).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "m,x_1,x_2,sup_norm,tail_err");
        assert_eq!(
            lines[1],
            "3,1.0000000000000000e0,-2.0000000000000000e0,2.0000000000000000e0,0.0000000000000000e0"
        );
        assert_eq!(lines.len(), 4);
        assert!(lines[3].starts_with("5,"));
    }
}
