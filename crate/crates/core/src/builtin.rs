//! Bundled example models.

use crate::{
    model::{load_model, ModelSpec},
    simulator::InitialCondition,
    Error, Result,
};

const EXAMPLES: [(&str, &str); 2] = [
    ("example-4.1", include_str!("../configs/example-4.1.json")),
    ("example-4.2", include_str!("../configs/example-4.2.json")),
];

/// Depth of the bundled initial history.
pub const HISTORY_DEPTH: u64 = 9;

pub fn names() -> Vec<&'static str> {
    EXAMPLES.iter().map(|(n, _)| *n).collect()
}

fn canonical(name: &str) -> Option<usize> {
    let key = name.trim().to_ascii_lowercase();
    let key = key.strip_suffix(".json").unwrap_or(&key);
    EXAMPLES.iter().position(|(n, _)| {
        key == *n || key == &n["example-".len()..] || key == n.replace('-', "")
    })
}

/// Raw JSON of a bundled model.
pub fn source(name: &str) -> Result<&'static str> {
    canonical(name)
        .map(|k| EXAMPLES[k].1)
        .ok_or_else(|| Error::UnknownBuiltin(name.to_string()))
}

pub fn load(name: &str) -> Result<ModelSpec> {
    load_model(source(name)?)
}

/// `psi(s) = (sin s, -cos s, e^s)` on `[-9, 0]`, zero before.
pub fn initial_history() -> InitialCondition {
    InitialCondition::from_fn(HISTORY_DEPTH, vec![0.0; 3], 0, |s| {
        let s = s as f64;
        vec![s.sin(), -s.cos(), s.exp()]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{
        matrix::SquareMatrix,
        model::{build_criterion_matrices, check_hypotheses, summarize_coefficients, CriterionMatrix, Hypothesis},
        Tolerances, DEFAULT_HORIZON,
    };

    fn matrices(name: &str) -> (ModelSpec, SquareMatrix, SquareMatrix) {
        let spec = load(name).unwrap();
        let s = summarize_coefficients(&spec, DEFAULT_HORIZON, &Tolerances::default()).unwrap();
        let (p, h) = build_criterion_matrices(&s, &spec.bounds());
        (spec, p, h)
    }

    #[test]
    fn aliases() {
        assert_eq!(names(), vec!["example-4.1", "example-4.2"]);
        for n in ["example-4.1", "4.1", "Example-4.1.json", "example4.1"] {
            assert!(source(n).is_ok(), "{n}");
        }
        assert!(matches!(load("4.3"), Err(Error::UnknownBuiltin(_))));
    }

    #[test]
    fn reference_matrices() {
        for name in names() {
            let (spec, p, h) = matrices(name);
            let r = spec.reference.clone().unwrap();
            let got = match r.matrix {
                CriterionMatrix::Plus => p,
                CriterionMatrix::Hat => h,
            };
            assert!(got.max_abs_diff(&r.rows) < 1e-12, "{name}:\n{got}");
        }
    }

    #[test]
    fn hypotheses_hold() {
        let t = Tolerances::default();
        let a = load("4.1").unwrap();
        let r = check_hypotheses(&a, DEFAULT_HORIZON, &t);
        assert!(r.standing_verified(), "{r}");
        assert!(r.status(Hypothesis::H6).is_verified(), "{r}");
        let b = load("4.2").unwrap();
        let r = check_hypotheses(&b, DEFAULT_HORIZON, &t);
        assert!(r.standing_verified(), "{r}");
        assert!(r.status(Hypothesis::H6Star).is_verified(), "{r}");
    }

    #[test]
    fn history() {
        let h = initial_history();
        assert_eq!(h.value(0), &[0.0, -1.0, 1.0]);
        assert_eq!(h.value(-10), &[0.0, 0.0, 0.0]);
        assert!((h.norm() - 1.0).abs() < 1e-15);
    }
}
