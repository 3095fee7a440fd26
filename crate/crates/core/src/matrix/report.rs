use std::fmt;

use serde::Serialize;

use super::{
    classify, fmt_sig, positive_null_vector, principal_minors, MatrixClassification, MinorWitness,
    NullVector, SquareMatrix, MAX_MINOR_ORDER,
};

/// Full diagnostic for one matrix: classification, principal-minor table
/// (small orders only) and, for singular irreducible M-matrices, the
/// positive null vector.
#[derive(Debug, Clone, Serialize)]
pub struct MatrixReport {
    pub matrix: SquareMatrix,
    pub classification: MatrixClassification,
    pub minors: Option<Vec<MinorWitness>>,
    pub null_vector: Option<NullVector>,
    pub null_vector_error: Option<String>,
}

pub fn analyze(a: &SquareMatrix, tol_minor: f64, tol_null: f64) -> MatrixReport {
    let classification = classify(a, tol_minor);
    let minors = (a.order() <= MAX_MINOR_ORDER)
        .then(|| principal_minors(a).ok())
        .flatten();
    let (null_vector, null_vector_error) = if classification.is_singular_irreducible_m() {
        match positive_null_vector(a, tol_null) {
            Ok(v) => (Some(v), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, None)
    };
    MatrixReport {
        matrix: a.clone(),
        classification,
        minors,
        null_vector,
        null_vector_error,
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| fmt_sig(*x, 6)).collect();
    format!("({})", parts.join(", "))
}

impl fmt::Display for MatrixReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.classification;
        write!(f, "{}", self.matrix)?;
        writeln!(f, "classification: {}", c.describe())?;
        writeln!(f, "  Z-matrix:     {}", c.is_z)?;
        writeln!(f, "  irreducible:  {}", c.irreducible)?;
        if let Some(w) = &c.spectral_witness {
            writeln!(
                f,
                "  spectral:     s = {}, rho(sI - A) = {} in [{}, {}] ({} iterations{})",
                fmt_sig(w.s, 6),
                fmt_sig(w.rho, 6),
                fmt_sig(w.radius.lower, 6),
                fmt_sig(w.radius.upper, 6),
                w.radius.iterations,
                if w.radius.converged { "" } else { ", not converged" }
            )?;
        }
        if c.ambiguous {
            writeln!(f, "  warning:      radius bracket straddles the singularity threshold")?;
        }
        if let Some(w) = &c.minor_witness {
            writeln!(
                f,
                "  min minor:    {} at {}",
                fmt_sig(w.value, 6),
                fmt_indices(&w.indices)
            )?;
        }
        if let Some(nv) = &self.null_vector {
            writeln!(
                f,
                "null vector:    d = {} (residual {:e})",
                fmt_vec(&nv.d),
                nv.residual
            )?;
        }
        if let Some(e) = &self.null_vector_error {
            writeln!(f, "null vector:    {e}")?;
        }
        if let Some(minors) = &self.minors {
            writeln!(f, "principal minors:")?;
            for w in minors {
                writeln!(f, "  {:<24} {}", fmt_indices(&w.indices), fmt_sig(w.value, 6))?;
            }
        }
        Ok(())
    }
}

fn fmt_indices(idx: &[usize]) -> String {
    let parts: Vec<String> = idx.iter().map(|i| (i + 1).to_string()).collect();
    format!("{{{}}}", parts.join(","))
}
