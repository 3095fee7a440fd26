//! The attractivity verdict: hypotheses, criterion matrices and their
//! classification combined into one decision with a rule trace.

use std::fmt;

use serde::Serialize;

use crate::{
    envelope::{
        build_envelopes, default_x_max, hat_start, iterate_bound, BoundIteration, DEFAULT_Q_CAP,
        DEFAULT_TOL_FIX,
    },
    matrix::{classify, fmt_sig, positive_null_vector, MatrixClassification, NullVector, SquareMatrix},
    model::{
        build_criterion_matrices, check_hypotheses, shift_to_equilibrium, summarize_coefficients,
        ActivationSpec, Certificate, CoefficientSummary, CriterionMatrix, Hypothesis,
        HypothesisReport, ModelSpec, Regime, Status,
    },
    Error, Result, Tolerances, DEFAULT_HORIZON,
};

pub const INCONCLUSIVE_NOTE: &str =
    "inconclusive: the criterion gives sufficient conditions only; this does not indicate instability";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    AttractiveItemI,
    #[serde(rename = "attractive_item_ii")]
    AttractiveItemII,
    AttractiveCorollaryAutonomous,
    Inconclusive,
}

impl Verdict {
    pub fn is_attractive(self) -> bool {
        self != Verdict::Inconclusive
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::AttractiveItemI => "attractive_item_i",
            Verdict::AttractiveItemII => "attractive_item_ii",
            Verdict::AttractiveCorollaryAutonomous => "attractive_corollary_autonomous",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct DecideOptions {
    pub horizon: u64,
    pub tol: Tolerances,
    /// Equilibrium of an autonomous model to shift to the origin first.
    pub equilibrium: Option<Vec<f64>>,
    /// Run the bound iteration for attractive verdicts.
    pub bound: bool,
    /// Start of the sup-regime iteration; defaults to the null vector of `M_plus`.
    pub start_vector: Option<Vec<f64>>,
    pub q_cap: u64,
    pub tol_fix: f64,
}

impl Default for DecideOptions {
    fn default() -> Self {
        DecideOptions {
            horizon: DEFAULT_HORIZON,
            tol: Tolerances::default(),
            equilibrium: None,
            bound: true,
            start_vector: None,
            q_cap: DEFAULT_Q_CAP,
            tol_fix: DEFAULT_TOL_FIX,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifiedMatrix {
    pub matrix: SquareMatrix,
    pub classification: MatrixClassification,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub name: Option<String>,
    pub autonomous: bool,
    pub shifted: bool,
    pub hypotheses: HypothesisReport,
    pub summaries: CoefficientSummary,
    pub m_plus: ClassifiedMatrix,
    pub m_hat: ClassifiedMatrix,
    pub verdict: Verdict,
    pub label: String,
    pub justification: Vec<String>,
    pub null_vector: Option<NullVector>,
    pub bound_trace: Option<BoundIteration>,
    pub bound_error: Option<String>,
    pub provenance_flags: Vec<String>,
}

impl CriterionReport {
    /// Exit status for command-line use.
    pub fn exit_code(&self) -> i32 {
        if self.verdict.is_attractive() {
            0
        } else {
            2
        }
    }
}

fn classified(m: SquareMatrix, tol: &Tolerances) -> ClassifiedMatrix {
    ClassifiedMatrix {
        classification: classify(&m, tol.minor),
        matrix: m,
    }
}

fn hyp_phrase(r: &HypothesisReport, h: Hypothesis) -> String {
    format!("{} {}", h.label(), r.status(h).label())
}

/// Applies the criterion to `spec`.
pub fn decide(spec: &ModelSpec, opts: &DecideOptions) -> Result<CriterionReport> {
    let tol = &opts.tol;
    let shifted_spec;
    let spec = match &opts.equilibrium {
        Some(x) => {
            shifted_spec = shift_to_equilibrium(spec, x, tol.eq)?;
            &shifted_spec
        }
        None => spec,
    };
    let hypotheses = check_hypotheses(spec, opts.horizon, tol);
    let summaries = summarize_coefficients(spec, opts.horizon, tol)?;
    let (mp, mh) = build_criterion_matrices(&summaries, &spec.bounds());
    let m_plus = classified(mp, tol);
    let m_hat = classified(mh, tol);
    let autonomous = spec.is_autonomous();

    let mut just = Vec::new();
    let standing = hypotheses.standing_verified();
    if standing {
        just.push("H1-H5 verified".to_string());
    } else {
        let failed: Vec<String> = Hypothesis::ALL[..5]
            .iter()
            .filter(|&&h| !hypotheses.status(h).is_verified())
            .map(|&h| hyp_phrase(&hypotheses, h))
            .collect();
        just.push(format!("standing hypotheses not verified: {}", failed.join(", ")));
    }
    let h6 = hypotheses.status(Hypothesis::H6).is_verified();
    let h6s = hypotheses.status(Hypothesis::H6Star).is_verified();
    let hat_m = m_hat.classification.m_class.is_m();
    let plus_sim = m_plus.classification.is_singular_irreducible_m();

    let item_i = standing && h6 && hat_m;
    let item_ii = standing && h6s && plus_sim;
    let describe_i = format!(
        "item i: {}; M_hat {}",
        hyp_phrase(&hypotheses, Hypothesis::H6),
        m_hat.classification.describe()
    );
    let describe_ii = format!(
        "item ii: {}; M_plus {}",
        hyp_phrase(&hypotheses, Hypothesis::H6Star),
        m_plus.classification.describe()
    );
    let verdict = if item_i || item_ii {
        let chosen = if item_i { &describe_i } else { &describe_ii };
        just.push(format!("{chosen} -> applies"));
        if item_i && item_ii {
            just.push(format!("{describe_ii} -> also applies"));
        }
        if autonomous {
            just.push("constant coefficients: M_plus = M_hat is the single corollary matrix".into());
            Verdict::AttractiveCorollaryAutonomous
        } else if item_i {
            Verdict::AttractiveItemI
        } else {
            Verdict::AttractiveItemII
        }
    } else {
        just.push(format!("{describe_i} -> does not apply"));
        just.push(format!("{describe_ii} -> does not apply"));
        if !m_plus.classification.m_class.is_m() {
            just.push("failed condition: M_plus is not an M-matrix".into());
        } else if !plus_sim {
            just.push("failed condition: M_plus is not a singular irreducible M-matrix".into());
        }
        if !hat_m {
            just.push("failed condition: M_hat is not an M-matrix".into());
        }
        if !h6 && !h6s {
            just.push("failed condition: neither H6 nor H6* verified".into());
        }
        just.push(INCONCLUSIVE_NOTE.into());
        Verdict::Inconclusive
    };

    let use_plus = verdict.is_attractive() && !item_i;
    let mut null_vector = None;
    let mut bound_error = None;
    if use_plus || plus_sim {
        match positive_null_vector(&m_plus.matrix, tol.minor) {
            Ok(d) => null_vector = Some(d),
            Err(e) => bound_error = Some(format!("null vector of M_plus: {e}")),
        }
    }
    let mut bound_trace = None;
    if opts.bound && verdict.is_attractive() {
        let run = || -> Result<BoundIteration> {
            let (regime, start) = if item_i {
                (CriterionMatrix::Hat, hat_start(spec, &summaries)?)
            } else {
                let start = match (&opts.start_vector, &null_vector) {
                    (Some(s), _) => s.clone(),
                    (None, Some(d)) => d.d.clone(),
                    (None, None) => vec![1.0; spec.n],
                };
                (CriterionMatrix::Plus, start)
            };
            let env = build_envelopes(spec, default_x_max(&start))?;
            iterate_bound(spec, &summaries, &env, regime, &start, opts.q_cap, opts.tol_fix)
        };
        match run() {
            Ok(b) => bound_trace = Some(b),
            Err(e) => bound_error = Some(e.to_string()),
        }
    }

    let provenance_flags = provenance(spec, &hypotheses, &summaries);
    let downgrade = summaries.any_sampled()
        || hypotheses.status(Hypothesis::H2) == Status::VerifiedSampled;
    let label = match (verdict.is_attractive(), downgrade) {
        (true, true) => format!("attractive (sampled hypotheses) [{verdict}]"),
        (true, false) => format!("attractive [{verdict}]"),
        (false, _) => INCONCLUSIVE_NOTE.to_string(),
    };
    Ok(CriterionReport {
        name: spec.name.clone(),
        autonomous,
        shifted: opts.equilibrium.is_some(),
        hypotheses,
        summaries,
        m_plus,
        m_hat,
        verdict,
        label,
        justification: just,
        null_vector,
        bound_trace,
        bound_error,
        provenance_flags,
    })
}

fn provenance(spec: &ModelSpec, hyp: &HypothesisReport, summary: &CoefficientSummary) -> Vec<String> {
    let mut flags = Vec::new();
    if summary.any_sampled() {
        flags.push(format!(
            "some sups/limsups sampled on [{}, {}]",
            spec.check_start, summary.horizon
        ));
    }
    for h in Hypothesis::ALL {
        if hyp.status(h) == Status::VerifiedSampled {
            flags.push(format!("{} verified by sampling", h.label()));
        }
    }
    if spec.check_start > 0 {
        flags.push(format!("sups taken over m >= {}", spec.check_start));
    }
    for a in &hyp.activations {
        if a.bounded && !a.bounded_literal && a.declared_regime == Regime::Bounded {
            flags.push(format!(
                "{}: |f| bounded by its range bound, not by F",
                a.location
            ));
        }
    }
    flags
}

fn write_vec(f: &mut fmt::Formatter<'_>, v: &[f64]) -> fmt::Result {
    let parts: Vec<String> = v.iter().map(|x| fmt_sig(*x, 6)).collect();
    write!(f, "({})", parts.join(", "))
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(n) = &self.name {
            writeln!(f, "model: {n}")?;
        }
        writeln!(f, "hypotheses (horizon {}):", self.hypotheses.horizon)?;
        write!(f, "{}", self.hypotheses)?;
        writeln!(f, "M_plus: {}", self.m_plus.classification.describe())?;
        write!(f, "{}", self.m_plus.matrix)?;
        writeln!(f, "M_hat: {}", self.m_hat.classification.describe())?;
        write!(f, "{}", self.m_hat.matrix)?;
        if let Some(d) = &self.null_vector {
            write!(f, "null vector of M_plus: d = ")?;
            write_vec(f, &d.d)?;
            writeln!(f, " (residual {:e})", d.residual)?;
        }
        if let Some(b) = &self.bound_trace {
            write!(
                f,
                "bound iteration ({}): {} steps, {}, S = ",
                match b.regime {
                    CriterionMatrix::Hat => "limsup",
                    CriterionMatrix::Plus => "sup",
                },
                b.q_max,
                if b.converged { "converged" } else { "not converged" }
            )?;
            write_vec(f, &b.converged_to)?;
            writeln!(f)?;
        }
        if let Some(e) = &self.bound_error {
            writeln!(f, "bound iteration: {e}")?;
        }
        writeln!(f, "justification:")?;
        for j in &self.justification {
            writeln!(f, "  - {j}")?;
        }
        if !self.provenance_flags.is_empty() {
            writeln!(f, "provenance:")?;
            for p in &self.provenance_flags {
                writeln!(f, "  - {p}")?;
            }
        }
        writeln!(f, "verdict: {}", self.label)
    }
}

fn rescale_activation(a: &ActivationSpec, dj: f64) -> ActivationSpec {
    ActivationSpec {
        expr: a.expr.prescaled(dj),
        bound: a.bound * dj,
        regime: a.regime,
        saturation: a.saturation.or(match a.regime {
            Regime::Bounded => Some(a.bound),
            _ => None,
        }),
    }
}

/// The model for `y = diag(d)^-1 x`: couplings and inputs of row `i` are
/// divided by `d_i` and activations read `f(d_j u)`.
pub fn rescale_model(spec: &ModelSpec, d: &[f64]) -> Result<ModelSpec> {
    if d.len() != spec.n {
        return Err(Error::Extent {
            field: "d".into(),
            expected: spec.n,
            found: d.len(),
        });
    }
    if d.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::Positivity("rescaling vector d must be positive".into()));
    }
    if d.iter().all(|&v| v == 1.0) {
        return Ok(spec.clone());
    }
    let mut out = spec.clone();
    let div = |v: Option<f64>, di: f64| v.map(|x| x / di);
    for i in 0..spec.n {
        let di = d[i];
        for j in 0..spec.n {
            for p in 0..spec.p {
                out.b[i][j][p] = spec.b[i][j][p].divided_by(di);
                out.f[i][j][p] = rescale_activation(&spec.f[i][j][p], d[j]);
                out.declared.b_sup[i][j][p] = div(spec.declared.b_sup[i][j][p], di);
                out.declared.b_limsup[i][j][p] = div(spec.declared.b_limsup[i][j][p], di);
            }
            out.c[i][j] = spec.c[i][j].divided_by(di);
            out.g[i][j] = rescale_activation(&spec.g[i][j], d[j]);
            out.declared.c_sup[i][j] = div(spec.declared.c_sup[i][j], di);
            out.declared.c_limsup[i][j] = div(spec.declared.c_limsup[i][j], di);
        }
        let input = &mut out.input[i];
        input.expr = spec.input[i].expr.divided_by(di);
        input.certificate = match spec.input[i].certificate.clone() {
            Certificate::Geometric { ratio, scale } => Certificate::Geometric { ratio, scale: scale / di },
            Certificate::PSeries { exponent, scale } => Certificate::PSeries { exponent, scale: scale / di },
            Certificate::Declared { total } => Certificate::Declared { total: total / di },
            c @ Certificate::FiniteSupport { .. } => c,
        };
    }
    out.name = spec.name.as_ref().map(|n| format!("{n} (rescaled)"));
    out.reference = None;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{
        builtin,
        expr::Expr,
        model::TIME_VAR,
        simulator::{run, InitialCondition, RunOptions},
    };

    #[test]
    fn builtin_verdicts() {
        let a = decide(&builtin::load("4.1").unwrap(), &DecideOptions::default()).unwrap();
        assert_eq!(a.verdict, Verdict::AttractiveItemI, "{a}");
        assert!(a.label.starts_with("attractive (sampled hypotheses)"));
        assert_eq!(a.bound_trace.as_ref().unwrap().regime, CriterionMatrix::Hat);
        let b = decide(&builtin::load("4.2").unwrap(), &DecideOptions::default()).unwrap();
        assert_eq!(b.verdict, Verdict::AttractiveItemII, "{b}");
        let d = &b.null_vector.as_ref().unwrap().d;
        assert!(d.iter().all(|v| (v - 1.0).abs() < 1e-10));
        assert_eq!(b.exit_code(), 0);
    }

    #[test]
    fn scaled_coupling_is_inconclusive() {
        let mut spec = builtin::load("4.2").unwrap();
        spec.b[1][2][0] = Expr::constant(2.5, TIME_VAR);
        spec.declared.b_sup[1][2][0] = Some(2.5);
        spec.declared.b_limsup[1][2][0] = Some(2.5);
        let r = decide(&spec, &DecideOptions::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert!(r.justification.iter().any(|j| j == "failed condition: M_plus is not an M-matrix"));
        assert!(r.justification.contains(&INCONCLUSIVE_NOTE.to_string()));
        assert_eq!(r.exit_code(), 2);
    }

    #[test]
    fn autonomous_corollary() {
        let spec = crate::model::load_model(
            r#"{"n": 2, "P": 1, "a": ["1/2", "1/4"],
                "b": [[[0], ["1/4"]], [["1/2"], [0]]],
                "f": [[[null], [{"expr": "tanh(u)", "bound": 1, "regime": "bounded"}]],
                      [[{"expr": "tanh(u)", "bound": 1, "regime": "bounded"}], [null]]]}"#,
        )
        .unwrap();
        let r = decide(&spec, &DecideOptions::default()).unwrap();
        assert_eq!(r.m_plus.matrix, r.m_hat.matrix);
        assert_eq!(r.verdict, Verdict::AttractiveCorollaryAutonomous, "{r}");
        assert!(r.label.starts_with("attractive ["));
    }

    #[test]
    fn identity_rescale() {
        let spec = builtin::load("4.2").unwrap();
        assert_eq!(rescale_model(&spec, &[1.0; 3]).unwrap(), spec);
        assert!(matches!(rescale_model(&spec, &[1.0, 0.0, 1.0]), Err(Error::Positivity(_))));
    }

    #[test]
    fn scalar_rescale_trajectory() {
        let mut spec = ModelSpec::zero(1, 1);
        spec.a[0] = Expr::parse("1/2", TIME_VAR).unwrap();
        spec.b[0][0][0] = Expr::parse("cos(m)/3", TIME_VAR).unwrap();
        spec.f[0][0][0] = ActivationSpec {
            expr: Expr::parse("tanh(u)", crate::model::ACTIVATION_VAR).unwrap(),
            bound: 1.0,
            regime: Regime::Bounded,
            saturation: None,
        };
        spec.input[0].expr = Expr::parse("(1/2)^m", TIME_VAR).unwrap();
        let y = rescale_model(&spec, &[2.0]).unwrap();
        let init = InitialCondition::constant(vec![1.5], 0);
        let opts = RunOptions {
            steps: 100,
            ..RunOptions::default()
        };
        let rx = run(&spec, init.clone(), &opts).unwrap();
        let ry = run(&y, init.scaled_down(&[2.0]), &opts).unwrap();
        for (a, b) in rx.trajectory.iter().zip(&ry.trajectory) {
            assert!((a[0] / 2.0 - b[0]).abs() < 1e-12);
        }
    }
}
