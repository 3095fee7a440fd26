//! JSON model description.
//!
//! ```json
//! {
//!   "name": "optional",
//!   "n": 2, "P": 1,
//!   "check_start": 0,
//!   "a":   ["1/2", "cos(pi*m)/4"],
//!   "nu":  [0, 1],
//!   "b":   [[["1/4"], null], [null, null]],
//!   "tau": [[["floor(m/2)"], null], [null, null]],
//!   "c":   [[null, "1/8"], [null, null]],
//!   "zeta": [[null, {"form": "geometric", "params": {"ratio": "1/2", "scale": "1/2"}, "total": 1}],
//!            [null, null]],
//!   "f":   [[[{"expr": "tanh(u)", "bound": 1, "regime": "bounded"}], null], [null, null]],
//!   "g":   [[null, {"expr": "tanh(u)", "bound": 1, "regime": "sublinear"}], [null, null]],
//!   "I":   [{"expr": "1/2^m", "certificate": {"kind": "geometric", "ratio": 0.5, "scale": 1}}, null],
//!   "declared": {"a_sup": [null, "1/4"], "a_limsup": [null, "1/4"]}
//! }
//! ```
//!
//! Every array must have the declared extent; `null` entries and omitted
//! arrays mean zero coefficients, zero delays and zero inputs. Numbers may
//! be given as JSON numbers or as constant expressions such as `"1/3"`.

use std::path::Path;

use serde::Deserialize;

use super::{
    ActivationSpec, Certificate, CriterionMatrix, Declared, InputSpec, KernelForm, KernelSpec,
    ModelSpec, Reference, Regime, ACTIVATION_VAR, KERNEL_VAR, TIME_VAR,
};
use crate::{
    expr::{eval_constant, Expr},
    matrix::SquareMatrix,
    Error, Result,
};

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Scalar {
    Num(f64),
    Text(String),
}

impl Scalar {
    fn expr(&self, var: &str, location: &str) -> Result<Expr> {
        match self {
            Scalar::Num(v) => Ok(Expr::constant(*v, var)),
            Scalar::Text(s) => Expr::parse(s, var).map_err(|source| Error::ExprAt {
                location: location.into(),
                source,
            }),
        }
    }

    fn value(&self, location: &str) -> Result<f64> {
        match self {
            Scalar::Num(v) => Ok(*v),
            Scalar::Text(s) => eval_constant(s).map_err(|e| match e {
                Error::Parse(source) => Error::ExprAt {
                    location: location.into(),
                    source,
                },
                other => Error::Schema(format!("{location}: {other}")),
            }),
        }
    }
}

/// `[i][j]` rows, each entry or whole row nullable.
type Grid2<T> = Vec<Vec<Option<T>>>;
/// `[i][j][p]` with nullable `p`-rows.
type Grid3<T> = Vec<Vec<Option<Vec<Option<T>>>>>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    name: Option<String>,
    n: usize,
    #[serde(rename = "P")]
    p: usize,
    #[serde(default)]
    check_start: u64,
    a: Vec<Option<Scalar>>,
    nu: Option<Vec<Option<Scalar>>>,
    b: Option<Grid3<Scalar>>,
    tau: Option<Grid3<Scalar>>,
    c: Option<Grid2<Scalar>>,
    zeta: Option<Grid2<RawKernel>>,
    f: Option<Grid3<RawActivation>>,
    g: Option<Grid2<RawActivation>>,
    #[serde(rename = "I")]
    input: Option<Vec<Option<RawInput>>>,
    #[serde(default)]
    declared: RawDeclared,
    reference: Option<RawReference>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernel {
    form: String,
    #[serde(default)]
    params: RawKernelParams,
    total: Option<Scalar>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernelParams {
    ratio: Option<Scalar>,
    scale: Option<Scalar>,
    expr: Option<Scalar>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawActivation {
    expr: Scalar,
    bound: Scalar,
    regime: Regime,
    saturation: Option<Scalar>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInput {
    expr: Scalar,
    certificate: Certificate,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDeclared {
    a_sup: Option<Vec<Option<Scalar>>>,
    a_limsup: Option<Vec<Option<Scalar>>>,
    b_sup: Option<Grid3<Scalar>>,
    b_limsup: Option<Grid3<Scalar>>,
    c_sup: Option<Grid2<Scalar>>,
    c_limsup: Option<Grid2<Scalar>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReference {
    matrix: CriterionMatrix,
    rows: Vec<Vec<Scalar>>,
    verdict: Option<String>,
}

fn check_len<T>(field: &str, v: &[T], expected: usize) -> Result<()> {
    if v.len() != expected {
        return Err(Error::Extent {
            field: field.into(),
            expected,
            found: v.len(),
        });
    }
    Ok(())
}

fn vec1<T, U>(
    field: &str,
    raw: Option<Vec<Option<T>>>,
    n: usize,
    default: impl Fn() -> U,
    convert: impl Fn(&T, &str) -> Result<U>,
) -> Result<Vec<U>> {
    let Some(raw) = raw else {
        return Ok((0..n).map(|_| default()).collect());
    };
    check_len(field, &raw, n)?;
    raw.iter()
        .enumerate()
        .map(|(i, v)| {
            let loc = format!("{field}[{}]", i + 1);
            match v {
                Some(v) => convert(v, &loc),
                None => Ok(default()),
            }
        })
        .collect()
}

fn vec2<T, U>(
    field: &str,
    raw: Option<Grid2<T>>,
    n: usize,
    default: impl Fn() -> U,
    convert: impl Fn(&T, &str) -> Result<U>,
) -> Result<Vec<Vec<U>>> {
    let Some(raw) = raw else {
        return Ok((0..n).map(|_| (0..n).map(|_| default()).collect()).collect());
    };
    check_len(field, &raw, n)?;
    raw.into_iter()
        .enumerate()
        .map(|(i, row)| {
            let f = format!("{field}[{}]", i + 1);
            vec1(&f, Some(row), n, &default, &convert)
        })
        .collect()
}

fn vec3<T, U>(
    field: &str,
    raw: Option<Grid3<T>>,
    n: usize,
    p: usize,
    default: impl Fn() -> U,
    convert: impl Fn(&T, &str) -> Result<U>,
) -> Result<Vec<Vec<Vec<U>>>> {
    let Some(raw) = raw else {
        return Ok((0..n)
            .map(|_| (0..n).map(|_| (0..p).map(|_| default()).collect()).collect())
            .collect());
    };
    check_len(field, &raw, n)?;
    raw.into_iter()
        .enumerate()
        .map(|(i, plane)| {
            let f = format!("{field}[{}]", i + 1);
            check_len(&f, &plane, n)?;
            plane
                .into_iter()
                .enumerate()
                .map(|(j, row)| {
                    let f = format!("{field}[{}][{}]", i + 1, j + 1);
                    vec1(&f, row, p, &default, &convert)
                })
                .collect()
        })
        .collect()
}

fn positive(v: f64, location: &str) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Schema(format!("{location}: must be positive and finite, got {v}")))
    }
}

fn convert_activation(raw: &RawActivation, loc: &str) -> Result<ActivationSpec> {
    let expr = raw.expr.expr(ACTIVATION_VAR, &format!("{loc}.expr"))?;
    let bound = positive(raw.bound.value(&format!("{loc}.bound"))?, &format!("{loc}.bound"))?;
    let saturation = match &raw.saturation {
        Some(s) => {
            let l = format!("{loc}.saturation");
            Some(positive(s.value(&l)?, &l)?)
        }
        None => None,
    };
    Ok(ActivationSpec {
        expr,
        bound,
        regime: raw.regime,
        saturation,
    })
}

fn convert_kernel(raw: &RawKernel, loc: &str) -> Result<KernelSpec> {
    let param = |s: &Option<Scalar>, name: &str| -> Result<Option<f64>> {
        s.as_ref()
            .map(|s| s.value(&format!("{loc}.params.{name}")))
            .transpose()
    };
    let missing = |name: &str| Error::Schema(format!("{loc}.params: missing `{name}`"));
    let form = match raw.form.as_str() {
        "geometric" => {
            let ratio = param(&raw.params.ratio, "ratio")?.ok_or_else(|| missing("ratio"))?;
            let scale = param(&raw.params.scale, "scale")?.ok_or_else(|| missing("scale"))?;
            if ratio.abs() >= 1.0 {
                return Err(Error::Schema(format!(
                    "{loc}: geometric ratio {ratio} is not summable"
                )));
            }
            KernelForm::Geometric { ratio, scale }
        }
        "telescoping" => KernelForm::Telescoping {
            scale: param(&raw.params.scale, "scale")?.unwrap_or(1.0),
        },
        "closed_form" => {
            let e = raw.params.expr.as_ref().ok_or_else(|| missing("expr"))?;
            KernelForm::ClosedForm {
                expr: e.expr(KERNEL_VAR, &format!("{loc}.params.expr"))?,
            }
        }
        other => {
            return Err(Error::Schema(format!(
                "{loc}.form: unknown kernel form `{other}` (expected geometric, telescoping or closed_form)"
            )))
        }
    };
    let mut spec = KernelSpec {
        form,
        declared_total: 0.0,
    };
    let total = raw
        .total
        .as_ref()
        .map(|t| t.value(&format!("{loc}.total")))
        .transpose()?;
    spec.declared_total = match (total, spec.analytic_total()) {
        (Some(t), _) => t,
        (None, Some(t)) => t,
        (None, None) => {
            return Err(Error::Schema(format!(
                "{loc}: closed_form kernels need a declared `total`"
            )))
        }
    };
    Ok(spec)
}

fn convert_input(raw: &RawInput, loc: &str) -> Result<InputSpec> {
    let expr = raw.expr.expr(TIME_VAR, &format!("{loc}.expr"))?;
    match raw.certificate {
        Certificate::Geometric { ratio, .. } if ratio.abs() >= 1.0 => Err(Error::Schema(format!(
            "{loc}.certificate: geometric ratio must satisfy |ratio| < 1"
        ))),
        Certificate::PSeries { exponent, .. } if exponent <= 1.0 => Err(Error::Schema(format!(
            "{loc}.certificate: p-series exponent must exceed 1"
        ))),
        _ => Ok(InputSpec {
            expr,
            certificate: raw.certificate.clone(),
        }),
    }
}

/// Parses and structurally validates a JSON model description.
pub fn load_model(text: &str) -> Result<ModelSpec> {
    let raw: RawModel = serde_json::from_str(text)?;
    let (n, p) = (raw.n, raw.p);
    if n == 0 {
        return Err(Error::Schema("n must be at least 1".into()));
    }
    if p == 0 {
        return Err(Error::Schema("P must be at least 1".into()));
    }
    let time = |s: &Scalar, loc: &str| s.expr(TIME_VAR, loc);
    let zero_m = || Expr::zero(TIME_VAR);
    let value = |s: &Scalar, loc: &str| s.value(loc).map(Some);

    let declared = Declared {
        a_sup: vec1("declared.a_sup", raw.declared.a_sup, n, || None, value)?,
        a_limsup: vec1("declared.a_limsup", raw.declared.a_limsup, n, || None, value)?,
        b_sup: vec3("declared.b_sup", raw.declared.b_sup, n, p, || None, value)?,
        b_limsup: vec3("declared.b_limsup", raw.declared.b_limsup, n, p, || None, value)?,
        c_sup: vec2("declared.c_sup", raw.declared.c_sup, n, || None, value)?,
        c_limsup: vec2("declared.c_limsup", raw.declared.c_limsup, n, || None, value)?,
    };
    for (name, v) in declared
        .a_sup
        .iter()
        .chain(&declared.a_limsup)
        .chain(declared.b_sup.iter().flatten().flatten())
        .chain(declared.b_limsup.iter().flatten().flatten())
        .chain(declared.c_sup.iter().flatten())
        .chain(declared.c_limsup.iter().flatten())
        .flatten()
        .map(|v| ("declared", v))
    {
        if !(*v >= 0.0 && v.is_finite()) {
            return Err(Error::Schema(format!("{name}: summaries must be finite and >= 0, got {v}")));
        }
    }

    let reference = match raw.reference {
        Some(r) => {
            let rows = r
                .rows
                .iter()
                .enumerate()
                .map(|(i, row)| {
                    row.iter()
                        .enumerate()
                        .map(|(j, v)| v.value(&format!("reference.rows[{}][{}]", i + 1, j + 1)))
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            check_len("reference.rows", &rows, n)?;
            Some(Reference {
                matrix: r.matrix,
                rows: SquareMatrix::from_rows(rows)?,
                verdict: r.verdict,
            })
        }
        None => None,
    };

    Ok(ModelSpec {
        name: raw.name,
        n,
        p,
        check_start: raw.check_start,
        a: vec1("a", Some(raw.a), n, zero_m, time)?,
        nu: vec1("nu", raw.nu, n, zero_m, time)?,
        b: vec3("b", raw.b, n, p, zero_m, time)?,
        tau: vec3("tau", raw.tau, n, p, zero_m, time)?,
        c: vec2("c", raw.c, n, zero_m, time)?,
        zeta: vec2("zeta", raw.zeta, n, KernelSpec::zero, convert_kernel)?,
        f: vec3("f", raw.f, n, p, ActivationSpec::zero, convert_activation)?,
        g: vec2("g", raw.g, n, ActivationSpec::zero, convert_activation)?,
        input: vec1("I", raw.input, n, InputSpec::zero, convert_input)?,
        declared,
        reference,
    })
}

pub fn load_model_file(path: impl AsRef<Path>) -> Result<ModelSpec> {
    load_model(&std::fs::read_to_string(path)?)
}
