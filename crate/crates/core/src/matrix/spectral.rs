//! Spectral radius of entrywise non-negative matrices.
//!
//! The matrix is split along its strongly connected components: the spectrum
//! of a reducible matrix is the union of the spectra of the diagonal blocks
//! of its Frobenius normal form, and each irreducible block `C` is handled
//! by power iteration on `C + I`, which is primitive. Collatz-Wielandt
//! quotients `min (Mx)_i / x_i <= rho(M) <= max (Mx)_i / x_i` bracket the
//! radius at every step.

use serde::Serialize;

use super::{graph::strongly_connected_components, SquareMatrix};

pub const MAX_ITER: usize = 10_000;
const RAYLEIGH_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusMethod {
    PowerIteration,
    RepeatedSquaring,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusEstimate {
    pub rho: f64,
    /// Certified lower bound from Collatz-Wielandt quotients.
    pub lower: f64,
    /// Certified upper bound.
    pub upper: f64,
    pub iterations: usize,
    pub converged: bool,
    pub method: RadiusMethod,
}

/// Spectral radius of `b`, which must be entrywise non-negative.
pub fn spectral_radius(b: &SquareMatrix) -> RadiusEstimate {
    debug_assert!(b.rows().flatten().all(|&v| v >= 0.0));
    let mut best = RadiusEstimate {
        rho: 0.0,
        lower: 0.0,
        upper: 0.0,
        iterations: 0,
        converged: true,
        method: RadiusMethod::PowerIteration,
    };
    for comp in strongly_connected_components(b) {
        let est = if comp.len() == 1 {
            let v = b[(comp[0], comp[0])];
            RadiusEstimate {
                rho: v,
                lower: v,
                upper: v,
                iterations: 0,
                converged: true,
                method: RadiusMethod::PowerIteration,
            }
        } else {
            irreducible_radius(&b.submatrix(&comp))
        };
        best.iterations = best.iterations.max(est.iterations);
        best.converged &= est.converged;
        if est.upper > best.upper {
            best.upper = est.upper;
        }
        if est.lower > best.lower {
            best.lower = est.lower;
        }
        if est.rho > best.rho {
            best.rho = est.rho;
            best.method = est.method;
        }
    }
    best
}

/// Perron vector of an irreducible non-negative matrix (max-normalized) with
/// the final Collatz-Wielandt bracket on its eigenvalue.
pub(super) fn perron_vector(b: &SquareMatrix) -> (Vec<f64>, RadiusEstimate) {
    let n = b.order();
    let shifted = shift_identity(b);
    let mut x = vec![1.0; n];
    let mut prev_rq = f64::NAN;
    let mut est = RadiusEstimate {
        rho: 0.0,
        lower: 0.0,
        upper: f64::INFINITY,
        iterations: 0,
        converged: false,
        method: RadiusMethod::PowerIteration,
    };
    for it in 1..=MAX_ITER {
        let y = shifted.mul_vec(&x);
        let (lo, hi) = collatz_wielandt(&x, &y);
        let rq = dot(&x, &y) / dot(&x, &x);
        let scale = y.iter().copied().fold(0.0, f64::max);
        x = y.iter().map(|v| v / scale).collect();
        est.iterations = it;
        est.lower = (lo - 1.0).max(0.0);
        est.upper = hi - 1.0;
        est.rho = rq - 1.0;
        let gap = hi - lo;
        if gap <= RAYLEIGH_TOL * hi || (rq - prev_rq).abs() < RAYLEIGH_TOL * rq && gap <= 1e-10 * hi {
            est.converged = true;
            est.rho = 0.5 * (lo + hi) - 1.0;
            break;
        }
        prev_rq = rq;
    }
    (x, est)
}

fn irreducible_radius(b: &SquareMatrix) -> RadiusEstimate {
    let (_, est) = perron_vector(b);
    if est.converged {
        return est;
    }
    let upper = squaring_bound(b).min(est.upper);
    RadiusEstimate {
        rho: 0.5 * (est.lower + upper),
        lower: est.lower,
        upper,
        iterations: est.iterations,
        converged: false,
        method: RadiusMethod::RepeatedSquaring,
    }
}

/// `rho(B) <= ||B^(2^k)||^(1/2^k)`, with rescaling to avoid overflow.
fn squaring_bound(b: &SquareMatrix) -> f64 {
    // Invariant: B^power = m * exp(log_scale).
    let mut m = b.clone();
    let mut log_scale = 0.0f64;
    let mut power = 1.0f64;
    let mut bound = f64::INFINITY;
    for _ in 0..40 {
        let norm = m.norm_inf();
        if norm == 0.0 {
            return 0.0;
        }
        bound = bound.min(((norm.ln() + log_scale) / power).exp());
        for i in 0..m.order() {
            for j in 0..m.order() {
                m[(i, j)] /= norm;
            }
        }
        log_scale += norm.ln();
        m = m.mul(&m);
        log_scale *= 2.0;
        power *= 2.0;
    }
    bound
}

fn shift_identity(b: &SquareMatrix) -> SquareMatrix {
    let mut m = b.clone();
    for i in 0..m.order() {
        m[(i, i)] += 1.0;
    }
    m
}

fn collatz_wielandt(x: &[f64], y: &[f64]) -> (f64, f64) {
    x.iter()
        .zip(y)
        .map(|(a, b)| b / a)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> SquareMatrix {
        SquareMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn symmetric_two_by_two() {
        let b = m(&[&[1.0, 2.0], &[2.0, 1.0]]);
        let r = spectral_radius(&b);
        assert!(r.converged);
        assert!((r.rho - 3.0).abs() < 1e-12);
        assert!(r.lower <= 3.0 + 1e-12 && r.upper >= 3.0 - 1e-12);
    }

    #[test]
    fn periodic_matrix_converges_through_shift() {
        let b = m(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0]]);
        let r = spectral_radius(&b);
        assert!(r.converged);
        assert!((r.rho - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reducible_takes_block_maximum() {
        let b = m(&[&[2.0, 5.0], &[0.0, 0.5]]);
        let r = spectral_radius(&b);
        assert_eq!(r.rho, 2.0);
        let b = m(&[&[0.0, 1.0 / 3.0, 0.0], &[0.0, 0.0, 1.0 / 3.0], &[0.0, 0.0, 2.0 / 3.0]]);
        assert_eq!(spectral_radius(&b).rho, 2.0 / 3.0);
    }

    #[test]
    fn squaring_bound_dominates_radius() {
        let b = m(&[&[0.5, 0.25], &[0.25, 0.5]]);
        let bound = squaring_bound(&b);
        assert!(bound >= 0.75 - 1e-12);
        assert!(bound < 0.75 + 1e-6);
    }
}
