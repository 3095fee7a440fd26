use std::fmt;

use serde::Serialize;

use super::{
    summary::{sample_abs, Samples},
    ActivationSpec, Certificate, KernelForm, ModelSpec, Regime, Term,
};
use crate::{expr::Expr, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    VerifiedAnalytic,
    VerifiedSampled,
    Undecidable,
    Failed,
}

impl Status {
    pub fn is_verified(self) -> bool {
        matches!(self, Status::VerifiedAnalytic | Status::VerifiedSampled)
    }

    /// The weaker of two statuses.
    pub fn and(self, other: Status) -> Status {
        self.max(other)
    }

    pub fn label(self) -> &'static str {
        match self {
            Status::VerifiedAnalytic => "verified (analytic)",
            Status::VerifiedSampled => "verified (sampled)",
            Status::Undecidable => "undecidable",
            Status::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Hypothesis {
    H1,
    H2,
    H3,
    H4,
    H5,
    H6,
    #[serde(rename = "H6*")]
    H6Star,
    #[serde(rename = "H6dagger")]
    H6Dagger,
}

impl Hypothesis {
    pub const ALL: [Hypothesis; 8] = [
        Hypothesis::H1,
        Hypothesis::H2,
        Hypothesis::H3,
        Hypothesis::H4,
        Hypothesis::H5,
        Hypothesis::H6,
        Hypothesis::H6Star,
        Hypothesis::H6Dagger,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Hypothesis::H1 => "H1",
            Hypothesis::H2 => "H2",
            Hypothesis::H3 => "H3",
            Hypothesis::H4 => "H4",
            Hypothesis::H5 => "H5",
            Hypothesis::H6 => "H6",
            Hypothesis::H6Star => "H6*",
            Hypothesis::H6Dagger => "H6dagger",
        }
    }

    pub fn statement(self) -> &'static str {
        match self {
            Hypothesis::H1 => "sup_m |a_i(m)| < 1",
            Hypothesis::H2 => "m - nu_i(m) -> inf and m - tau_ijp(m) -> inf",
            Hypothesis::H3 => "b_ijp and c_ij bounded",
            Hypothesis::H4 => "sum_l |zeta_ijl| = 1",
            Hypothesis::H5 => "sum_m |I_i(m)| < inf",
            Hypothesis::H6 => "activations bounded and below F|u|",
            Hypothesis::H6Star => "|f(u)| < F|u| for u != 0",
            Hypothesis::H6Dagger => "|f(u) - f(v)| < F|u - v|",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub hypothesis: Hypothesis,
    pub status: Status,
    pub notes: Vec<String>,
}

/// Sampled properties of one active activation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActivationCheck {
    pub location: String,
    pub declared_regime: Regime,
    pub vanishes_at_zero: bool,
    /// `sup |f(u)| / |u|` over the grid.
    pub max_slope: f64,
    /// `sup |f(u)|` over the grid.
    pub max_abs: f64,
    /// `sup |f(u) - f(v)| / |u - v|` over sampled pairs.
    pub max_lipschitz: f64,
    /// `|f| <= F|u|` everywhere and `|f| <=` the declared range bound.
    pub bounded: bool,
    /// The literal form: `|f| <= F` for `|u| > 1` and `|f| <= F|u|` otherwise.
    pub bounded_literal: bool,
    pub sublinear: bool,
    pub lipschitz: bool,
    pub error: Option<String>,
}

impl ActivationCheck {
    fn satisfies(&self, regime: Regime) -> bool {
        match regime {
            Regime::Bounded => self.bounded,
            Regime::Sublinear => self.sublinear,
            Regime::Lipschitz => self.lipschitz,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub horizon: u64,
    pub check_start: u64,
    pub checks: Vec<HypothesisCheck>,
    pub activations: Vec<ActivationCheck>,
}

impl HypothesisReport {
    pub fn status(&self, h: Hypothesis) -> Status {
        self.checks
            .iter()
            .find(|c| c.hypothesis == h)
            .map(|c| c.status)
            .unwrap_or(Status::Undecidable)
    }

    pub fn get(&self, h: Hypothesis) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.hypothesis == h)
    }

    /// H1 to H5 all verified.
    pub fn standing_verified(&self) -> bool {
        Hypothesis::ALL[..5].iter().all(|h| self.status(*h).is_verified())
    }
}

impl fmt::Display for HypothesisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "  ({:<8}) {:<44} {}",
                c.hypothesis.label(),
                c.hypothesis.statement(),
                c.status.label()
            )?;
            for n in &c.notes {
                writeln!(f, "             - {n}")?;
            }
        }
        Ok(())
    }
}

struct Check {
    status: Status,
    notes: Vec<String>,
}

impl Check {
    fn new() -> Check {
        Check {
            status: Status::VerifiedAnalytic,
            notes: Vec::new(),
        }
    }

    fn downgrade(&mut self, s: Status) {
        self.status = self.status.and(s);
    }

    fn fail(&mut self, note: String) {
        self.downgrade(Status::Failed);
        self.notes.push(note);
    }

    fn finish(self, h: Hypothesis) -> HypothesisCheck {
        HypothesisCheck {
            hypothesis: h,
            status: self.status,
            notes: self.notes,
        }
    }
}

/// Checks the standing hypotheses. Nothing here is an error: problems
/// become `Failed` or `Undecidable` statuses with notes.
pub fn check_hypotheses(spec: &ModelSpec, horizon: u64, tol: &Tolerances) -> HypothesisReport {
    let horizon = horizon.max(1);
    let from = spec.check_start.min(horizon);
    let activations: Vec<ActivationCheck> = spec
        .active_activations()
        .into_iter()
        .map(|(t, a)| {
            let name = if matches!(t, Term::Discrete { .. }) { "f" } else { "g" };
            check_activation(a, &t.label(name), tol)
        })
        .collect();
    let checks = vec![
        check_h1(spec, from, horizon, tol).finish(Hypothesis::H1),
        check_h2(spec, horizon).finish(Hypothesis::H2),
        check_h3(spec, from, horizon, tol).finish(Hypothesis::H3),
        check_h4(spec, horizon, tol).finish(Hypothesis::H4),
        check_h5(spec, horizon, tol).finish(Hypothesis::H5),
        regime_check(&activations, Regime::Bounded).finish(Hypothesis::H6),
        regime_check(&activations, Regime::Sublinear).finish(Hypothesis::H6Star),
        regime_check(&activations, Regime::Lipschitz).finish(Hypothesis::H6Dagger),
    ];
    HypothesisReport {
        horizon,
        check_start: from,
        checks,
        activations,
    }
}

fn sampled_or_note(c: &mut Check, e: &Expr, loc: &str, from: u64, to: u64) -> Option<Samples> {
    match sample_abs(e, loc, from, to) {
        Ok(s) => Some(s),
        Err(err) => {
            c.fail(err.to_string());
            None
        }
    }
}

fn check_h1(spec: &ModelSpec, from: u64, horizon: u64, tol: &Tolerances) -> Check {
    let mut c = Check::new();
    for i in 0..spec.n {
        let loc = format!("a[{}]", i + 1);
        let e = &spec.a[i];
        let Some(s) = sampled_or_note(&mut c, e, &loc, from, horizon) else {
            continue;
        };
        if s.max >= 1.0 {
            c.fail(format!("|{loc}(m)| = {} >= 1 at m = {}", s.max, s.argmax));
            continue;
        }
        if let Some(d) = spec.declared.a_sup[i] {
            if s.max > d + tol.sup {
                c.fail(format!("{loc}: declared sup {d} < sampled {}", s.max));
            } else if d >= 1.0 {
                c.fail(format!("{loc}: declared sup {d} >= 1"));
            }
        } else if !e.is_constant() {
            c.downgrade(Status::VerifiedSampled);
        }
    }
    if from > 0 {
        for m in 0..from {
            for i in 0..spec.n {
                if let Ok(v) = spec.a[i].eval(m as f64) {
                    if v.abs() >= 1.0 {
                        c.notes.push(format!(
                            "|a[{}]({m})| = {} >= 1; sups are taken over m >= {from}",
                            i + 1,
                            v.abs()
                        ));
                    }
                }
            }
        }
    }
    c
}

fn delay_terms(spec: &ModelSpec) -> Vec<(String, &Expr)> {
    let mut out: Vec<(String, &Expr)> = (0..spec.n)
        .filter(|&i| !spec.a[i].is_zero())
        .map(|i| (format!("nu[{}]", i + 1), &spec.nu[i]))
        .collect();
    out.extend(spec.active_discrete().map(|(i, j, p)| {
        (Term::Discrete { i, j, p }.label("tau"), &spec.tau[i][j][p])
    }));
    out
}

fn check_h2(spec: &ModelSpec, horizon: u64) -> Check {
    let mut c = Check::new();
    for (loc, e) in delay_terms(spec) {
        let mut delays = Vec::with_capacity(horizon as usize + 1);
        let mut bad = false;
        for m in 0..=horizon {
            match ModelSpec::delay_at(e, &loc, m as i64) {
                Ok(d) => delays.push(d),
                Err(err) => {
                    c.fail(err.to_string());
                    bad = true;
                    break;
                }
            }
            if e.is_constant() {
                break;
            }
        }
        if bad || e.is_constant() {
            continue;
        }
        // Heuristic: the delay grows sublinearly and m - delay(m) keeps reaching new highs.
        let gap = |m: usize| m as f64 - delays[m] as f64;
        let h = horizon as usize;
        let ratio = (h / 2..=h)
            .filter(|&m| m > 0)
            .map(|m| delays[m] as f64 / m as f64)
            .fold(0.0, f64::max);
        let last = gap(h);
        let earlier = (0..h).map(gap).fold(f64::NEG_INFINITY, f64::max);
        if ratio < 1.0 && last >= earlier && last > gap(h / 2) {
            c.downgrade(Status::VerifiedSampled);
            c.notes.push(format!(
                "{loc}: m - delay grows on [0, {horizon}] (max delay/m on the second half = {ratio:.4}); sampled"
            ));
        } else {
            c.fail(format!(
                "{loc}: m - delay does not grow on [0, {horizon}] (max delay/m = {ratio:.4}, final gap {last}, earlier max {earlier})"
            ));
        }
    }
    c
}

fn check_h3(spec: &ModelSpec, from: u64, horizon: u64, tol: &Tolerances) -> Check {
    let mut c = Check::new();
    let mut items: Vec<(String, &Expr, Option<f64>)> = Vec::new();
    for (i, j, p) in spec.active_discrete() {
        items.push((
            Term::Discrete { i, j, p }.label("b"),
            &spec.b[i][j][p],
            spec.declared.b_sup[i][j][p],
        ));
    }
    for i in 0..spec.n {
        for j in 0..spec.n {
            if !spec.c[i][j].is_zero() {
                items.push((
                    Term::Distributed { i, j }.label("c"),
                    &spec.c[i][j],
                    spec.declared.c_sup[i][j],
                ));
            }
        }
    }
    for (loc, e, declared) in items {
        let Some(s) = sampled_or_note(&mut c, e, &loc, from, horizon) else {
            continue;
        };
        match declared {
            Some(d) if s.max > d + tol.sup => {
                c.fail(format!(
                    "{loc}: declared sup {d} contradicted by {} at m = {}",
                    s.max, s.argmax
                ));
            }
            Some(_) => {}
            None if e.is_constant() => {}
            None => {
                if s.second_half_max <= 1.01 * s.first_half_max + tol.sup {
                    c.downgrade(Status::VerifiedSampled);
                } else {
                    c.fail(format!(
                        "{loc}: |value| keeps growing on the horizon ({} then {})",
                        s.first_half_max, s.second_half_max
                    ));
                }
            }
        }
    }
    c
}

fn check_h4(spec: &ModelSpec, horizon: u64, tol: &Tolerances) -> Check {
    let mut c = Check::new();
    for (i, j) in spec.active_distributed() {
        let loc = Term::Distributed { i, j }.label("zeta");
        let k = &spec.zeta[i][j];
        if (k.declared_total - 1.0).abs() > tol.sum {
            c.fail(format!("{loc}: declared total {} != 1", k.declared_total));
            continue;
        }
        match (&k.form, k.analytic_total()) {
            (_, Some(t)) => {
                if (t - k.declared_total).abs() > tol.sum {
                    c.fail(format!("{loc}: analytic total {t} != declared {}", k.declared_total));
                }
            }
            (KernelForm::ClosedForm { expr }, None) => {
                let mut partial = 0.0;
                let mut ok = true;
                for l in 0..=horizon {
                    match expr.eval(l as f64) {
                        Ok(v) => partial += v.abs(),
                        Err(e) => {
                            c.fail(format!("{loc} at l = {l}: {e}"));
                            ok = false;
                            break;
                        }
                    }
                    if partial > k.declared_total + tol.sum {
                        c.fail(format!(
                            "{loc}: partial sum {partial} exceeds declared total at l = {l}"
                        ));
                        ok = false;
                        break;
                    }
                }
                if ok {
                    c.downgrade(Status::VerifiedSampled);
                    c.notes.push(format!(
                        "{loc}: partial sum to l = {horizon} is {partial}; the tail is taken from the declared total"
                    ));
                }
            }
            _ => c.fail(format!("{loc}: kernel is not summable")),
        }
    }
    c
}

fn check_h5(spec: &ModelSpec, horizon: u64, tol: &Tolerances) -> Check {
    let mut c = Check::new();
    for (i, input) in spec.input.iter().enumerate() {
        let loc = format!("I[{}]", i + 1);
        if input.expr.is_zero() {
            continue;
        }
        if input.expr.is_constant() {
            c.fail(format!("{loc}: non-zero constant input is not summable"));
            continue;
        }
        let mut partial = 0.0;
        for m in 0..=horizon {
            let v = match input.expr.eval(m as f64) {
                Ok(v) => v.abs(),
                Err(e) => {
                    c.fail(format!("{loc} at m = {m}: {e}"));
                    break;
                }
            };
            partial += v;
            let violated = match (&input.certificate, input.majorant(m)) {
                (_, Some(bound)) => v > bound * (1.0 + 1e-12) + tol.sum,
                (Certificate::Declared { total }, None) => partial > total + tol.sum,
                _ => false,
            };
            if violated {
                c.fail(format!(
                    "{loc}: certificate {:?} violated at m = {m} (|I| = {v})",
                    input.certificate
                ));
                break;
            }
        }
        if matches!(input.certificate, Certificate::Declared { .. }) {
            c.downgrade(Status::VerifiedSampled);
        }
    }
    c
}

/// Evaluation points for activation checks: a uniform grid on [-50, 50],
/// log-spaced points towards 0, and a few large arguments.
fn activation_grid() -> Vec<f64> {
    let mut pts: Vec<f64> = (-20_000..=20_000)
        .filter(|&k| k != 0)
        .map(|k| k as f64 * 0.0025)
        .collect();
    for e in -48..0 {
        let u = 10f64.powf(e as f64 / 4.0);
        pts.push(u);
        pts.push(-u);
    }
    for u in [100.0, 200.0, 500.0] {
        pts.push(u);
        pts.push(-u);
    }
    pts.sort_by(f64::total_cmp);
    pts
}

pub(crate) fn check_activation(act: &ActivationSpec, location: &str, tol: &Tolerances) -> ActivationCheck {
    let mut out = ActivationCheck {
        location: location.to_string(),
        declared_regime: act.regime,
        vanishes_at_zero: false,
        max_slope: 0.0,
        max_abs: 0.0,
        max_lipschitz: 0.0,
        bounded: false,
        bounded_literal: false,
        sublinear: false,
        lipschitz: false,
        error: None,
    };
    let grid = activation_grid();
    let vals: Result<Vec<f64>, _> = grid.iter().map(|&u| act.expr.eval(u)).collect();
    let at0 = act.expr.eval(0.0);
    let (vals, at0) = match (vals, at0) {
        (Ok(v), Ok(z)) => (v, z),
        (Err(e), _) | (_, Err(e)) => {
            out.error = Some(e.to_string());
            return out;
        }
    };
    out.vanishes_at_zero = at0 == 0.0;
    let fb = act.bound;
    let mut sublinear = true;
    let mut literal = true;
    for (&u, &v) in grid.iter().zip(&vals) {
        let slack = tol.env * u.abs() + 1e-15;
        out.max_abs = out.max_abs.max(v.abs());
        out.max_slope = out.max_slope.max(v.abs() / u.abs());
        if v.abs() > fb * u.abs() + slack {
            sublinear = false;
        }
        if u.abs() > 1.0 && v.abs() > fb + tol.env {
            literal = false;
        }
    }
    // Lipschitz quotients over neighbours and a few longer strides. Pairs
    // closer than MIN_SPACING only count against the bound with an absolute
    // roundoff allowance; they are left out of the reported quotient.
    const MIN_SPACING: f64 = 1e-4;
    const ROUNDOFF: f64 = 1e-14;
    let mut lip = 0.0f64;
    let mut lipschitz = true;
    let mut pair = |du: f64, dv: f64| {
        if du >= MIN_SPACING {
            lip = lip.max(dv / du);
        }
        if dv > fb * (1.0 + tol.env) * du + ROUNDOFF {
            lipschitz = false;
        }
    };
    for stride in [1usize, 7, 401, 4001] {
        for k in stride..grid.len() {
            pair(grid[k] - grid[k - stride], (vals[k] - vals[k - stride]).abs());
        }
    }
    for (&u, &v) in grid.iter().zip(&vals) {
        pair(u.abs(), (v - at0).abs());
    }
    out.max_lipschitz = lip;
    out.sublinear = out.vanishes_at_zero && sublinear;
    out.bounded_literal = out.sublinear && literal;
    out.bounded = out.sublinear
        && act
            .range_bound()
            .or(Some(fb))
            .is_some_and(|r| out.max_abs <= r + tol.env);
    out.lipschitz = lipschitz;
    out
}

fn regime_check(acts: &[ActivationCheck], regime: Regime) -> Check {
    let mut c = Check::new();
    for a in acts {
        if let Some(e) = &a.error {
            c.fail(format!("{}: {e}", a.location));
            continue;
        }
        if !a.satisfies(regime) {
            let why = match regime {
                _ if !a.vanishes_at_zero && regime != Regime::Lipschitz => "does not vanish at 0".to_string(),
                Regime::Bounded if a.sublinear => format!("sup |f| = {} exceeds its range bound", fmt_g(a.max_abs)),
                Regime::Bounded | Regime::Sublinear => {
                    format!("sup |f(u)|/|u| = {} exceeds F", fmt_g(a.max_slope))
                }
                Regime::Lipschitz => format!("Lipschitz quotient {} exceeds F", fmt_g(a.max_lipschitz)),
            };
            if a.declared_regime == regime {
                c.fail(format!("{} (declared {regime:?}): {why}", a.location));
            } else {
                c.fail(format!("{}: {why}", a.location));
            }
            continue;
        }
        c.downgrade(Status::VerifiedSampled);
        if regime == Regime::Bounded && !a.bounded_literal {
            c.notes.push(format!(
                "{}: |f| exceeds F for some |u| > 1; checked against the range bound {} instead",
                a.location,
                fmt_g(a.max_abs)
            ));
        }
    }
    if c.status == Status::VerifiedSampled {
        c.notes
            .push("strict inequalities checked non-strictly on a grid; strictness assumed".into());
    }
    c
}

fn fmt_g(v: f64) -> String {
    crate::matrix::fmt_sig(v, 6)
}
