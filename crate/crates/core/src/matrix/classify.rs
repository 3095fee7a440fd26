use serde::Serialize;

use super::{
    graph::is_irreducible,
    spectral::{perron_vector, spectral_radius, RadiusEstimate},
    SquareMatrix,
};
use crate::{Error, Result};

/// Largest order accepted by exhaustive principal-minor enumeration.
pub const MAX_MINOR_ORDER: usize = 12;
/// Orders up to which [`classify`] also attaches the smallest principal minor.
const WITNESS_MINOR_ORDER: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MClass {
    NotM,
    SingularM,
    NonsingularM,
}

impl MClass {
    pub fn is_m(self) -> bool {
        self != MClass::NotM
    }

    pub fn describe(self) -> &'static str {
        match self {
            MClass::NotM => "not an M-matrix",
            MClass::SingularM => "singular M-matrix",
            MClass::NonsingularM => "non-singular M-matrix",
        }
    }
}

/// `A = sI - B` with `s = max_i A[i][i]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralWitness {
    pub s: f64,
    pub rho: f64,
    pub radius: RadiusEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinorWitness {
    pub value: f64,
    /// Zero-based row/column indices of the principal submatrix.
    pub indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixClassification {
    pub is_z: bool,
    pub m_class: MClass,
    pub irreducible: bool,
    pub spectral_witness: Option<SpectralWitness>,
    pub minor_witness: Option<MinorWitness>,
    /// Set when the radius bracket straddles the decision threshold.
    pub ambiguous: bool,
}

impl MatrixClassification {
    pub fn describe(&self) -> String {
        let mut s = self.m_class.describe().to_string();
        if self.m_class.is_m() || self.is_z {
            s.push_str(if self.irreducible { ", irreducible" } else { ", reducible" });
        }
        if !self.is_z {
            s.push_str(" (off-diagonal entry > 0)");
        }
        s
    }

    pub fn is_singular_irreducible_m(&self) -> bool {
        self.m_class == MClass::SingularM && self.irreducible
    }
}

/// Spectral M-matrix test. `tol_minor` is relative to `||A||_inf`.
pub fn classify(a: &SquareMatrix, tol_minor: f64) -> MatrixClassification {
    let is_z = a.is_z();
    let irreducible = is_irreducible(a);
    let minor_witness = (a.order() <= WITNESS_MINOR_ORDER).then(|| smallest_minor(a));
    if !is_z {
        return MatrixClassification {
            is_z,
            m_class: MClass::NotM,
            irreducible,
            spectral_witness: None,
            minor_witness,
            ambiguous: false,
        };
    }
    let n = a.order();
    let s = (0..n).map(|i| a[(i, i)]).fold(f64::NEG_INFINITY, f64::max);
    let mut b = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] = if i == j { s - a[(i, i)] } else { -a[(i, j)] };
        }
    }
    let radius = spectral_radius(&b);
    let thr = tol_minor * a.norm_inf();
    let gap = s - radius.rho;
    let m_class = if gap.abs() <= thr {
        MClass::SingularM
    } else if gap > thr {
        MClass::NonsingularM
    } else {
        MClass::NotM
    };
    let ambiguous = !radius.converged
        && !(s > radius.upper + thr || s < radius.lower - thr || (radius.upper - radius.lower) <= thr);
    MatrixClassification {
        is_z,
        m_class,
        irreducible,
        spectral_witness: Some(SpectralWitness {
            s,
            rho: radius.rho,
            radius,
        }),
        minor_witness,
        ambiguous,
    }
}

/// All non-empty principal minors, indexed by zero-based index sets in
/// increasing bitmask order.
pub fn principal_minors(a: &SquareMatrix) -> Result<Vec<MinorWitness>> {
    let n = a.order();
    if n > MAX_MINOR_ORDER {
        return Err(Error::OrderTooLarge {
            n,
            max: MAX_MINOR_ORDER,
        });
    }
    Ok((1u32..(1 << n))
        .map(|mask| {
            let idx: Vec<usize> = (0..n).filter(|k| mask & (1 << k) != 0).collect();
            MinorWitness {
                value: a.submatrix(&idx).determinant(),
                indices: idx,
            }
        })
        .collect())
}

fn minor_threshold(a: &SquareMatrix, order: usize, tol_minor: f64) -> f64 {
    tol_minor * a.norm_inf().powi(order as i32)
}

fn smallest_minor(a: &SquareMatrix) -> MinorWitness {
    principal_minors(a)
        .expect("order checked by caller")
        .into_iter()
        .min_by(|x, y| x.value.total_cmp(&y.value))
        .expect("at least one minor")
}

/// Classification straight from the definition: a Z-matrix is an M-matrix
/// iff every principal minor is non-negative, non-singular iff every one is
/// positive. Exponential in `n`; used as the oracle for [`classify`].
pub fn principal_minor_classify(a: &SquareMatrix, tol_minor: f64) -> Result<MatrixClassification> {
    let minors = principal_minors(a)?;
    let is_z = a.is_z();
    let mut any_negative = false;
    let mut any_zero = false;
    for w in &minors {
        let thr = minor_threshold(a, w.indices.len(), tol_minor);
        if w.value < -thr {
            any_negative = true;
        } else if w.value <= thr {
            any_zero = true;
        }
    }
    let m_class = if !is_z || any_negative {
        MClass::NotM
    } else if any_zero {
        MClass::SingularM
    } else {
        MClass::NonsingularM
    };
    let minor_witness = minors.into_iter().min_by(|x, y| x.value.total_cmp(&y.value));
    Ok(MatrixClassification {
        is_z,
        m_class,
        irreducible: is_irreducible(a),
        spectral_witness: None,
        minor_witness,
        ambiguous: false,
    })
}

/// Sign-reversal witness: with `y = A z`, the first index `i` such that
/// `z_i != 0` and `z_i * y_i >= 0` (up to `tol` relative to
/// `||A||_inf ||z||_inf^2`). Every M-matrix admits one for every `z != 0`.
pub fn witness(a: &SquareMatrix, z: &[f64], tol: f64) -> Result<(usize, f64)> {
    if z.len() != a.order() {
        return Err(Error::Extent {
            field: "z".into(),
            expected: a.order(),
            found: z.len(),
        });
    }
    let zmax = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if zmax == 0.0 {
        return Err(Error::Precondition("z must be non-zero".into()));
    }
    let y = a.mul_vec(z);
    let thr = tol * a.norm_inf().max(f64::MIN_POSITIVE) * zmax * zmax;
    z.iter()
        .zip(&y)
        .enumerate()
        .find(|(_, (zi, yi))| **zi != 0.0 && *zi * *yi >= -thr)
        .map(|(i, (zi, yi))| (i, zi * yi))
        .ok_or(Error::NoWitness)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NullVectorMethod {
    Trivial,
    PowerIteration,
    /// Power iteration missed the residual target; solved the principal
    /// subsystem obtained by fixing the largest component instead.
    PrincipalSolve,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullVector {
    /// Positive, max-normalized.
    pub d: Vec<f64>,
    /// `||A d||_inf`.
    pub residual: f64,
    pub iterations: usize,
    pub method: NullVectorMethod,
}

/// Positive null vector of a singular irreducible M-matrix, computed as the
/// Perron vector of `B = sI - A`.
pub fn positive_null_vector(a: &SquareMatrix, tol_null: f64) -> Result<NullVector> {
    let n = a.order();
    if n == 1 {
        if a[(0, 0)] == 0.0 {
            return Ok(NullVector {
                d: vec![1.0],
                residual: 0.0,
                iterations: 0,
                method: NullVectorMethod::Trivial,
            });
        }
        return Err(Error::Precondition(format!(
            "1x1 matrix [{}] is not singular",
            a[(0, 0)]
        )));
    }
    let class = classify(a, crate::Tolerances::default().minor);
    if !class.is_singular_irreducible_m() {
        return Err(Error::Precondition(format!(
            "expected a singular irreducible M-matrix, got {}",
            class.describe()
        )));
    }
    let s = class.spectral_witness.as_ref().map(|w| w.s).unwrap_or(0.0);
    let mut b = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] = if i == j { s - a[(i, i)] } else { -a[(i, j)] };
        }
    }
    let (d, est) = perron_vector(&b);
    let target = tol_null * a.norm_inf();
    let residual = inf_norm(&a.mul_vec(&d));
    let (d, residual, method) = if residual <= target {
        (d, residual, NullVectorMethod::PowerIteration)
    } else {
        let d = principal_solve(a, &d)?;
        let r = inf_norm(&a.mul_vec(&d));
        (d, r, NullVectorMethod::PrincipalSolve)
    };
    if let Some(k) = d.iter().position(|&v| v <= 0.0) {
        return Err(Error::Positivity(format!("component {} = {}", k + 1, d[k])));
    }
    if residual > target {
        return Err(Error::Positivity(format!(
            "residual {residual:e} exceeds {target:e}"
        )));
    }
    Ok(NullVector {
        d,
        residual,
        iterations: est.iterations,
        method,
    })
}

/// Fixes `d_k = 1` at the largest component of `guess` and solves the
/// remaining rows, whose matrix is a non-singular M-matrix when `A` is
/// singular and irreducible.
fn principal_solve(a: &SquareMatrix, guess: &[f64]) -> Result<Vec<f64>> {
    let n = a.order();
    let k = guess
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let rest: Vec<usize> = (0..n).filter(|&i| i != k).collect();
    let sub = a.submatrix(&rest);
    let rhs: Vec<f64> = rest.iter().map(|&i| -a[(i, k)]).collect();
    let sol = sub
        .solve(&rhs)
        .ok_or_else(|| Error::Positivity("principal subsystem is singular".into()))?;
    let mut d = vec![0.0; n];
    d[k] = 1.0;
    for (idx, &i) in rest.iter().enumerate() {
        d[i] = sol[idx];
    }
    let max = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(d.into_iter().map(|v| v / max).collect())
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}
