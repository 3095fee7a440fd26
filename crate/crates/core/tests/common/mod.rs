#![allow(dead_code)]

use hopfield_core::{matrix::SquareMatrix, simulator::InitialCondition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(stream: u64) -> ChaCha8Rng {
    let seed = std::env::var("HOPFIELD_ATTRACT_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(20_240_611u64);
    ChaCha8Rng::seed_from_u64(seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Row-scaled graph Laplacian: singular M-matrix.
    Laplacian,
    /// Laplacian plus a non-negative diagonal: M-matrix.
    Shifted,
    /// Laplacian minus a positive diagonal: typically not an M-matrix.
    Deficient,
    /// Uniform random Z-matrix.
    Random,
}

pub const FAMILIES: [Family; 4] = [Family::Laplacian, Family::Shifted, Family::Deficient, Family::Random];

/// Random Z-matrix of order `n` with entries that are small dyadic
/// rationals, so the constructed row sums are exact.
pub fn z_matrix(rng: &mut impl Rng, n: usize, family: Family) -> SquareMatrix {
    let mut a = SquareMatrix::zeros(n);
    if family == Family::Random {
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = if i == j {
                    rng.gen_range(0..=12) as f64 / 4.0
                } else if rng.gen_bool(0.6) {
                    -(rng.gen_range(0..=4) as f64) / 4.0
                } else {
                    0.0
                };
            }
        }
        return a;
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen_bool(0.55) {
                a[(i, j)] = -(rng.gen_range(1..=4) as f64);
            }
        }
        let s: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)]).sum();
        a[(i, i)] = -s;
    }
    match family {
        Family::Shifted => {
            let k = rng.gen_range(0..n);
            for i in 0..n {
                if i == k || rng.gen_bool(0.3) {
                    a[(i, i)] += rng.gen_range(1..=2) as f64;
                }
            }
        }
        Family::Deficient => {
            let k = rng.gen_range(0..n);
            a[(k, k)] -= rng.gen_range(1..=2) as f64;
        }
        _ => {}
    }
    let scale = [0.5, 0.75, 1.0, 2.0];
    for i in 0..n {
        let d = scale[rng.gen_range(0..scale.len())];
        for j in 0..n {
            a[(i, j)] *= d;
        }
    }
    a
}

/// Bounded random history with `||psi|| <= bound`.
pub fn random_history(rng: &mut impl Rng, n: usize, bound: f64) -> InitialCondition {
    let depth = rng.gen_range(0..=20u64);
    let tail: Vec<f64> = (0..n).map(|_| rng.gen_range(-bound..=bound)).collect();
    let support: Vec<Vec<f64>> = (0..=depth)
        .map(|_| (0..n).map(|_| rng.gen_range(-bound..=bound)).collect())
        .collect();
    InitialCondition { support, tail, sigma: rng.gen_range(0..=5) }
}

/// Directions on the surface of the cube `[-1, 1]^n`, step `1/32`.
/// Witness existence is scale invariant, so the surface covers every ray.
pub fn z_grid(n: usize) -> Vec<Vec<f64>> {
    const STEPS: i32 = 32;
    let vals: Vec<f64> = (-STEPS..=STEPS).map(|k| k as f64 / STEPS as f64).collect();
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p: Vec<f64>| {
                vals.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out.retain(|z| z.iter().any(|v| v.abs() == 1.0));
    out
}
