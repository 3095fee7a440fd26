use serde::Serialize;

use super::{ModelSpec, Term};
use crate::{expr::Expr, matrix::SquareMatrix, Error, Result, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// The expression does not depend on `m`.
    Constant,
    /// Asserted in the config and validated against samples.
    Declared,
    /// Maximum over the sampled horizon; heuristic.
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Entry {
    pub value: f64,
    pub provenance: Provenance,
}

/// Sup and limsup of `|coefficient(m)|` for every coefficient.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientSummary {
    pub horizon: u64,
    pub a_sup: Vec<Entry>,
    pub a_limsup: Vec<Entry>,
    pub b_sup: Vec<Vec<Vec<Entry>>>,
    pub b_limsup: Vec<Vec<Vec<Entry>>>,
    pub c_sup: Vec<Vec<Entry>>,
    pub c_limsup: Vec<Vec<Entry>>,
}

impl CoefficientSummary {
    pub fn entries(&self) -> impl Iterator<Item = &Entry> {
        self.a_sup
            .iter()
            .chain(&self.a_limsup)
            .chain(self.b_sup.iter().flatten().flatten())
            .chain(self.b_limsup.iter().flatten().flatten())
            .chain(self.c_sup.iter().flatten())
            .chain(self.c_limsup.iter().flatten())
    }

    pub fn any_sampled(&self) -> bool {
        self.entries().any(|e| e.provenance == Provenance::Sampled)
    }

    pub fn a_plus(&self) -> f64 {
        self.a_sup.iter().map(|e| e.value).fold(0.0, f64::max)
    }
}

/// Constants `F_ijp` and `G_ij`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bounds {
    pub f: Vec<Vec<Vec<f64>>>,
    pub g: Vec<Vec<f64>>,
}

/// Statistics of `|e(m)|` over `m in [from, to]`.
#[derive(Debug, Clone, Copy)]
pub(super) struct Samples {
    pub max: f64,
    pub argmax: u64,
    /// Max over `[to/2, to]` (clipped to `from`).
    pub window_max: f64,
    /// Max over the first half of `[from, to]`.
    pub first_half_max: f64,
    pub second_half_max: f64,
}

pub(super) fn sample_abs(e: &Expr, location: &str, from: u64, to: u64) -> Result<Samples> {
    let eval = |m: u64| {
        e.eval(m as f64).map(f64::abs).map_err(|source| Error::EvalAt {
            location: location.into(),
            at: m as f64,
            source,
        })
    };
    if e.is_constant() {
        let v = eval(from)?;
        return Ok(Samples {
            max: v,
            argmax: from,
            window_max: v,
            first_half_max: v,
            second_half_max: v,
        });
    }
    let window_start = (to / 2).max(from);
    let mid = from + (to - from) / 2;
    let mut s = Samples {
        max: f64::NEG_INFINITY,
        argmax: from,
        window_max: f64::NEG_INFINITY,
        first_half_max: f64::NEG_INFINITY,
        second_half_max: f64::NEG_INFINITY,
    };
    for m in from..=to {
        let v = eval(m)?;
        if v > s.max {
            s.max = v;
            s.argmax = m;
        }
        if m >= window_start {
            s.window_max = s.window_max.max(v);
        }
        if m <= mid {
            s.first_half_max = s.first_half_max.max(v);
        } else {
            s.second_half_max = s.second_half_max.max(v);
        }
    }
    if s.second_half_max == f64::NEG_INFINITY {
        s.second_half_max = s.first_half_max;
    }
    Ok(s)
}

fn summarize_one(
    e: &Expr,
    location: &str,
    declared_sup: Option<f64>,
    declared_limsup: Option<f64>,
    from: u64,
    horizon: u64,
    tol: &Tolerances,
) -> Result<(Entry, Entry)> {
    let s = sample_abs(e, location, from, horizon)?;
    let constant = e.is_constant();
    let sup = match declared_sup {
        Some(d) => {
            if s.max > d + tol.sup {
                return Err(Error::SupContradicted {
                    location: location.into(),
                    declared: d,
                    sampled: s.max,
                    m: s.argmax,
                });
            }
            Entry {
                value: d,
                provenance: Provenance::Declared,
            }
        }
        None => Entry {
            value: s.max,
            provenance: if constant {
                Provenance::Constant
            } else {
                Provenance::Sampled
            },
        },
    };
    let limsup = match declared_limsup {
        Some(d) => {
            if d > sup.value + tol.sup {
                return Err(Error::Schema(format!(
                    "{location}: declared limsup {d} exceeds sup {}",
                    sup.value
                )));
            }
            Entry {
                value: d,
                provenance: Provenance::Declared,
            }
        }
        None => Entry {
            value: s.window_max.min(sup.value),
            provenance: if constant {
                Provenance::Constant
            } else {
                Provenance::Sampled
            },
        },
    };
    Ok((sup, limsup))
}

/// Sups over `m >= check_start` and limsups of every `|coefficient(m)|`.
/// Declared values are used when present and checked against samples;
/// otherwise sups are sampled over `[check_start, horizon]` and limsups
/// over `[horizon/2, horizon]`.
pub fn summarize_coefficients(
    spec: &ModelSpec,
    horizon: u64,
    tol: &Tolerances,
) -> Result<CoefficientSummary> {
    let (n, p) = (spec.n, spec.p);
    let from = spec.check_start.min(horizon);
    let d = &spec.declared;
    let mut a_sup = Vec::with_capacity(n);
    let mut a_limsup = Vec::with_capacity(n);
    for i in 0..n {
        let (s, l) = summarize_one(
            &spec.a[i],
            &format!("a[{}]", i + 1),
            d.a_sup[i],
            d.a_limsup[i],
            from,
            horizon,
            tol,
        )?;
        a_sup.push(s);
        a_limsup.push(l);
    }
    let zero = Entry {
        value: 0.0,
        provenance: Provenance::Constant,
    };
    let mut b_sup = vec![vec![vec![zero; p]; n]; n];
    let mut b_limsup = b_sup.clone();
    let mut c_sup = vec![vec![zero; n]; n];
    let mut c_limsup = c_sup.clone();
    for i in 0..n {
        for j in 0..n {
            for k in 0..p {
                let loc = Term::Discrete { i, j, p: k }.label("b");
                let (s, l) = summarize_one(
                    &spec.b[i][j][k],
                    &loc,
                    d.b_sup[i][j][k],
                    d.b_limsup[i][j][k],
                    from,
                    horizon,
                    tol,
                )?;
                b_sup[i][j][k] = s;
                b_limsup[i][j][k] = l;
            }
            let loc = Term::Distributed { i, j }.label("c");
            let (s, l) = summarize_one(
                &spec.c[i][j],
                &loc,
                d.c_sup[i][j],
                d.c_limsup[i][j],
                from,
                horizon,
                tol,
            )?;
            c_sup[i][j] = s;
            c_limsup[i][j] = l;
        }
    }
    Ok(CoefficientSummary {
        horizon,
        a_sup,
        a_limsup,
        b_sup,
        b_limsup,
        c_sup,
        c_limsup,
    })
}

fn criterion_matrix(
    a: &[Entry],
    b: &[Vec<Vec<Entry>>],
    c: &[Vec<Entry>],
    bounds: &Bounds,
) -> SquareMatrix {
    let n = a.len();
    let mut m = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let coupling: f64 = c[i][j].value * bounds.g[i][j]
                + b[i][j]
                    .iter()
                    .zip(&bounds.f[i][j])
                    .map(|(e, f)| e.value * f)
                    .sum::<f64>();
            m[(i, j)] = if i == j {
                (1.0 - a[i].value) - coupling
            } else {
                -coupling
            };
        }
    }
    m
}

/// `(M_plus, M_hat)`: `diag(1 - a) - [c G + sum_p b F]` built from sups and
/// from limsups respectively.
pub fn build_criterion_matrices(
    summary: &CoefficientSummary,
    bounds: &Bounds,
) -> (SquareMatrix, SquareMatrix) {
    (
        criterion_matrix(&summary.a_sup, &summary.b_sup, &summary.c_sup, bounds),
        criterion_matrix(
            &summary.a_limsup,
            &summary.b_limsup,
            &summary.c_limsup,
            bounds,
        ),
    )
}

/// A priori bound on `sup_m ||x(m)||` for solutions starting at `sigma`
/// from a history of sup norm `psi_norm`: `K + C / (1 - a_plus)` where
/// `C = max_i [sum_j (sum_p b_ijp^+ |f|max + c_ij^+ |g|max) + sum_m |I_i(m)|]`.
/// `K` is `psi_norm` propagated exactly through the steps before
/// `check_start`, where the sups need not hold. `None` when some active
/// activation has no declared range bound or `a_plus >= 1`.
pub fn boundedness_bound(
    spec: &ModelSpec,
    summary: &CoefficientSummary,
    psi_norm: f64,
    sigma: u64,
) -> Result<Option<f64>> {
    let (n, p) = (spec.n, spec.p);
    let a_plus = summary.a_plus();
    if a_plus >= 1.0 {
        return Ok(None);
    }
    let mut f_range = vec![vec![vec![0.0; p]; n]; n];
    for (i, j, k) in spec.active_discrete() {
        match spec.f[i][j][k].range_bound() {
            Some(r) => f_range[i][j][k] = r,
            None => return Ok(None),
        }
    }
    let mut g_range = vec![vec![0.0; n]; n];
    for (i, j) in spec.active_distributed() {
        match spec.g[i][j].range_bound() {
            Some(r) => g_range[i][j] = r * spec.zeta[i][j].declared_total,
            None => return Ok(None),
        }
    }
    let mut c_const = 0.0f64;
    for i in 0..n {
        let mut s = spec.input[i].total_bound()?;
        for j in 0..n {
            s += summary.c_sup[i][j].value * g_range[i][j];
            for k in 0..p {
                s += summary.b_sup[i][j][k].value * f_range[i][j][k];
            }
        }
        c_const = c_const.max(s);
    }
    let mut k_bound = psi_norm;
    for m in sigma..spec.check_start {
        let t = m as f64;
        let ev = |e: &Expr, loc: String| -> Result<f64> {
            e.eval(t).map(f64::abs).map_err(|source| Error::EvalAt {
                location: loc,
                at: t,
                source,
            })
        };
        let mut next = k_bound;
        for i in 0..n {
            let mut s = ev(&spec.a[i], format!("a[{}]", i + 1))? * k_bound;
            s += ev(&spec.input[i].expr, format!("I[{}]", i + 1))?;
            for j in 0..n {
                s += ev(&spec.c[i][j], Term::Distributed { i, j }.label("c"))? * g_range[i][j];
                for k in 0..p {
                    s += ev(&spec.b[i][j][k], Term::Discrete { i, j, p: k }.label("b"))?
                        * f_range[i][j][k];
                }
            }
            next = next.max(s);
        }
        k_bound = next;
    }
    Ok(Some(k_bound + c_const / (1.0 - a_plus)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{load_model, TIME_VAR};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn constant_and_oscillating() {
        let mut spec = ModelSpec::zero(2, 1);
        spec.a[0] = Expr::parse("1/2", TIME_VAR).unwrap();
        spec.a[1] = Expr::parse("cos(pi*m)/6", TIME_VAR).unwrap();
        let s = summarize_coefficients(&spec, 1000, &tol()).unwrap();
        assert_eq!(s.a_sup[0].value, 0.5);
        assert_eq!(s.a_limsup[0].value, 0.5);
        assert_eq!(s.a_sup[0].provenance, Provenance::Constant);
        assert!((s.a_sup[1].value - 1.0 / 6.0).abs() < 1e-15);
        assert!((s.a_limsup[1].value - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(s.a_limsup[1].provenance, Provenance::Sampled);
    }

    #[test]
    fn decaying_limsup_is_sampled_small() {
        let mut spec = ModelSpec::zero(1, 1);
        spec.a[0] = Expr::parse("1/(m+1)", TIME_VAR).unwrap();
        spec.check_start = 1;
        let s = summarize_coefficients(&spec, 1000, &tol()).unwrap();
        assert_eq!(s.a_sup[0].value, 0.5);
        assert!(s.a_limsup[0].value < 0.01);
    }

    #[test]
    fn declared_sup_is_validated() {
        let mut spec = ModelSpec::zero(1, 1);
        spec.a[0] = Expr::parse("sin(m)/2", TIME_VAR).unwrap();
        spec.declared.a_sup[0] = Some(0.4);
        let e = summarize_coefficients(&spec, 100, &tol()).unwrap_err();
        assert!(matches!(e, Error::SupContradicted { declared, .. } if declared == 0.4));
        spec.declared.a_sup[0] = Some(0.5);
        let s = summarize_coefficients(&spec, 100, &tol()).unwrap();
        assert_eq!(s.a_sup[0].provenance, Provenance::Declared);
    }

    #[test]
    fn zero_coupling_gives_identity() {
        let spec = ModelSpec::zero(3, 2);
        let s = summarize_coefficients(&spec, 10, &tol()).unwrap();
        let (plus, hat) = build_criterion_matrices(&s, &spec.bounds());
        assert_eq!(plus, SquareMatrix::identity(3));
        assert_eq!(hat, SquareMatrix::identity(3));
    }

    #[test]
    fn sup_monotone_in_horizon() {
        let mut spec = ModelSpec::zero(1, 1);
        spec.b[0][0][0] = Expr::parse("sin(m)", TIME_VAR).unwrap();
        let mut prev = 0.0;
        for h in [1, 3, 10, 30, 100, 300] {
            let s = summarize_coefficients(&spec, h, &tol()).unwrap();
            assert!(s.b_sup[0][0][0].value >= prev);
            prev = s.b_sup[0][0][0].value;
        }
    }

    #[test]
    fn boundedness_constant_for_scalar_model() {
        let spec = load_model(
            r#"{"n": 1, "P": 1, "a": ["1/2"], "b": [[["1/4"]]],
                "f": [[[{"expr": "tanh(u)", "bound": 1, "regime": "bounded"}]]],
                "I": [{"expr": "1/2^m", "certificate": {"kind": "geometric", "ratio": 0.5, "scale": 1}}]}"#,
        )
        .unwrap();
        let s = summarize_coefficients(&spec, 100, &tol()).unwrap();
        // C = 1/4 + 2, bound = 1 + C / (1/2)
        assert_eq!(boundedness_bound(&spec, &s, 1.0, 0).unwrap(), Some(5.5));
    }
}
