mod common;

use hopfield_core::{
    builtin,
    criterion::{decide, rescale_model, DecideOptions},
    envelope::{build_envelope, build_envelopes, iterate_bound},
    expr::Expr,
    matrix::{
        classify, is_irreducible, positive_null_vector, principal_minor_classify, MClass,
        SquareMatrix,
    },
    model::{
        build_criterion_matrices, load_model, summarize_coefficients, ActivationSpec,
        CriterionMatrix, ModelSpec, Regime, ACTIVATION_VAR, TIME_VAR,
    },
    simulator::{run, HistoryBuffer, InitialCondition, RunOptions},
    Tolerances,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn z_matrix_strategy() -> impl Strategy<Value = SquareMatrix> {
    (1usize..=6, 0usize..common::FAMILIES.len(), any::<u64>()).prop_map(|(n, f, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        common::z_matrix(&mut rng, n, common::FAMILIES[f])
    })
}

fn permutation_strategy(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

/// Reducible iff some non-empty proper index set `I` has `a_ij = 0` for
/// all `i` in `I`, `j` outside it.
fn brute_force_reducible(a: &SquareMatrix) -> bool {
    let n = a.order();
    if n == 1 {
        return false;
    }
    (1..(1u32 << n) - 1).any(|mask| {
        (0..n).filter(|i| mask & (1 << i) != 0).all(|i| {
            (0..n)
                .filter(|j| mask & (1 << j) == 0)
                .all(|j| a[(i, j)] == 0.0)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn spectral_matches_minors(a in z_matrix_strategy()) {
        let tol = Tolerances::default().minor;
        let s = classify(&a, tol);
        let m = principal_minor_classify(&a, tol).unwrap();
        prop_assert_eq!(s.m_class, m.m_class, "{}", a);
        prop_assert_eq!(s.irreducible, m.irreducible);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn classification_is_permutation_invariant(
        (a, p) in z_matrix_strategy().prop_flat_map(|a| {
            let n = a.order();
            (Just(a), permutation_strategy(n))
        })
    ) {
        let tol = Tolerances::default().minor;
        let b = a.permuted(&p);
        let (ca, cb) = (classify(&a, tol), classify(&b, tol));
        prop_assert_eq!(ca.m_class, cb.m_class);
        prop_assert_eq!(ca.irreducible, cb.irreducible);
    }

    #[test]
    fn irreducibility_matches_brute_force(a in z_matrix_strategy()) {
        prop_assert_eq!(is_irreducible(&a), !brute_force_reducible(&a), "{}", a);
    }

    #[test]
    fn null_vector_of_singular_irreducible(seed in any::<u64>(), n in 2usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = common::z_matrix(&mut rng, n, common::Family::Laplacian);
        let c = classify(&a, Tolerances::default().minor);
        prop_assume!(c.is_singular_irreducible_m());
        let d = positive_null_vector(&a, 1e-9).unwrap();
        prop_assert!(d.d.iter().all(|&v| v > 0.0));
        prop_assert!((d.d.iter().cloned().fold(0.0, f64::max) - 1.0).abs() < 1e-12);
        let r = a.mul_vec(&d.d).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(r <= 1e-9 * a.norm_inf().max(1.0), "residual {r:e}");
    }
}

fn leaf() -> impl Strategy<Value = String> {
    prop_oneof![
        (0u32..100).prop_map(|v| v.to_string()),
        (0u32..1000).prop_map(|v| format!("{}.{}", v / 100, v % 100)),
        Just("m".to_string()),
        Just("pi".to_string()),
        Just("e".to_string()),
    ]
}

fn expr_source() -> impl Strategy<Value = String> {
    leaf().prop_recursive(4, 32, 3, |inner| {
        prop_oneof![
            (inner.clone(), prop::sample::select(vec!["+", "-", "*", "/", "^"]), inner.clone())
                .prop_map(|(a, op, b)| format!("{a} {op} {b}")),
            inner.clone().prop_map(|a| format!("-{a}")),
            inner.clone().prop_map(|a| format!("({a})")),
            (prop::sample::select(vec!["sin", "cos", "tanh", "arctan", "abs", "exp", "floor"]), inner.clone())
                .prop_map(|(f, a)| format!("{f}({a})")),
            (inner.clone(), inner).prop_map(|(a, b)| format!("max({a}, {b})")),
        ]
    })
}

fn same(a: Result<f64, impl std::fmt::Debug>, b: Result<f64, impl std::fmt::Debug>) -> bool {
    match (a, b) {
        (Ok(x), Ok(y)) => x == y || (x - y).abs() <= 1e-12 * x.abs().max(y.abs()),
        (Err(_), Err(_)) => true,
        _ => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn expression_round_trip(src in expr_source(), x in -5.0f64..5.0) {
        let e = Expr::parse(&src, TIME_VAR).unwrap();
        let printed = e.to_string();
        let back = Expr::parse(&printed, TIME_VAR).unwrap();
        prop_assert!(same(e.eval(x), back.eval(x)), "{src} -> {printed}");
        prop_assert_eq!(back.to_string(), printed);
    }

    #[test]
    fn binary_precedence(a in -9i32..10, b in 1i32..10, c in 1i32..4) {
        let (fa, fb, fc) = (a as f64, b as f64, c as f64);
        let ev = |s: String| Expr::parse(&s, TIME_VAR).unwrap().eval(0.0).unwrap();
        prop_assert_eq!(ev(format!("{a} + {b} * {c}")), fa + fb * fc);
        prop_assert_eq!(ev(format!("{a} - {b} - {c}")), (fa - fb) - fc);
        prop_assert_eq!(ev(format!("{a} / {b} / {c}")), (fa / fb) / fc);
        prop_assert_eq!(ev(format!("{b} * {c} ^ 2")), fb * fc.powi(2));
        prop_assert_eq!(ev(format!("{c} ^ {c} ^ 2")), fc.powf(fc.powi(2)));
        prop_assert_eq!(ev(format!("{a} * -{b}")), fa * -fb);
    }
}

/// Random three-neuron model mixing constant and oscillating coefficients.
fn random_model(seed: u64) -> ModelSpec {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coef = |rng: &mut ChaCha8Rng, scale: f64| -> String {
        let v = rng.gen_range(0.0..scale);
        match rng.gen_range(0..4) {
            0 => "0".into(),
            1 => format!("{v}"),
            2 => format!("{v}*cos(pi*m)"),
            _ => format!("{v}/(1+m) + {}", v / 2.0),
        }
    };
    let a: Vec<String> = (0..3).map(|_| coef(&mut rng, 0.9)).collect();
    let b: Vec<Vec<Vec<String>>> = (0..3)
        .map(|_| (0..3).map(|_| vec![coef(&mut rng, 0.3)]).collect())
        .collect();
    let c: Vec<Vec<String>> = (0..3).map(|_| (0..3).map(|_| coef(&mut rng, 0.3)).collect()).collect();
    let act = r#"{"expr": "tanh(u)", "bound": 1, "regime": "bounded"}"#;
    let kern = r#"{"form": "geometric", "params": {"ratio": 0.5, "scale": 0.5}}"#;
    let f = format!("[[[{act}],[{act}],[{act}]],[[{act}],[{act}],[{act}]],[[{act}],[{act}],[{act}]]]");
    let g = format!("[[{act},{act},{act}],[{act},{act},{act}],[{act},{act},{act}]]");
    let z = format!("[[{kern},{kern},{kern}],[{kern},{kern},{kern}],[{kern},{kern},{kern}]]");
    let json = format!(
        r#"{{"n": 3, "P": 1, "a": {}, "b": {}, "c": {}, "zeta": {z}, "f": {f}, "g": {g}}}"#,
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap(),
        serde_json::to_string(&c).unwrap(),
    );
    load_model(&json).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn hat_dominates_plus(seed in any::<u64>()) {
        let spec = random_model(seed);
        let s = summarize_coefficients(&spec, 2000, &Tolerances::default()).unwrap();
        let (plus, hat) = build_criterion_matrices(&s, &spec.bounds());
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!(hat[(i, j)] >= plus[(i, j)] - 1e-12);
            }
        }
    }

    #[test]
    fn history_lookup(depth in 0u64..12, sigma in 0u64..6, pushes in 0usize..10, t_off in -30i64..0) {
        let init = InitialCondition::from_fn(depth, vec![-1.0], sigma, |s| vec![s as f64]);
        let mut h = HistoryBuffer::new(init);
        for k in 0..pushes {
            h.push(vec![100.0 + k as f64]);
        }
        let latest = h.latest();
        prop_assert_eq!(latest, (sigma as usize + pushes) as i64);
        let t = latest + t_off + 1;
        let s = t - sigma as i64;
        let expected = if s > 0 {
            100.0 + (s - 1) as f64
        } else if -s <= depth as i64 {
            s as f64
        } else {
            -1.0
        };
        prop_assert_eq!(h.lookup(t)[0], expected);
    }

    #[test]
    fn rescale_commutes_with_simulation(
        d in prop::collection::vec(0.25f64..4.0, 3),
        seed in any::<u64>(),
    ) {
        let spec = builtin::load("example-4.2").unwrap();
        let y = rescale_model(&spec, &d).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let init = common::random_history(&mut rng, 3, 10.0);
        let opts = RunOptions { steps: 200, eps_trunc: 1e-14, ..RunOptions::default() };
        let rx = run(&spec, init.clone(), &opts).unwrap();
        let ry = run(&y, init.scaled_down(&d), &opts).unwrap();
        for (x, yv) in rx.trajectory.iter().zip(&ry.trajectory) {
            for k in 0..3 {
                prop_assert!((x[k] / d[k] - yv[k]).abs() < 1e-10, "{} vs {}", x[k] / d[k], yv[k]);
            }
        }
        // The criterion matrix transforms by similarity.
        let t = Tolerances::default();
        let s0 = summarize_coefficients(&spec, 1000, &t).unwrap();
        let s1 = summarize_coefficients(&y, 1000, &t).unwrap();
        let (p0, _) = build_criterion_matrices(&s0, &spec.bounds());
        let (p1, _) = build_criterion_matrices(&s1, &y.bounds());
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((p1[(i, j)] - p0[(i, j)] * d[j] / d[i]).abs() < 1e-12);
            }
        }
    }
}

fn act(src: &str, regime: Regime, bound: f64) -> ActivationSpec {
    ActivationSpec {
        expr: Expr::parse(src, ACTIVATION_VAR).unwrap(),
        bound,
        regime,
        saturation: None,
    }
}

/// Activations with a bound on `|f''|` used for the off-grid allowance.
fn envelope_cases() -> Vec<(ActivationSpec, f64)> {
    vec![
        (act("tanh(u)", Regime::Bounded, 1.0), 0.78),
        (act("min(arctan(abs(u)), 1)", Regime::Bounded, 1.0), 0.65),
        (act("u/sqrt(1+u^2)", Regime::Bounded, 1.0), 0.86),
        (act("1/(1+exp(-u)) - 1/2", Regime::Bounded, 0.25), 0.1),
        (act("u*exp(-u^2)", Regime::Bounded, 1.0), 3.0),
        (act("max(tanh(abs(u)), u - 1/10)", Regime::Sublinear, 1.0), 0.78),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn envelope_dominates(case in 0usize..6, u in -8.0f64..8.0) {
        let (a, d2) = &envelope_cases()[case];
        let x_max = 8.0;
        let h = x_max / 4096.0;
        let env = build_envelope(a, x_max, h).unwrap();
        let allowance = Tolerances::default().env + h * h * d2 / 8.0;
        let fu = a.expr.eval(u).unwrap().abs();
        let fs = env.eval(u.abs()).unwrap().value;
        prop_assert!(fu <= fs + allowance, "|f({u})| = {fu} > f*({}) = {fs}", u.abs());
        prop_assert!(env.values.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(env.values[0], 0.0);
        // Inherited sublinear bound on the grid.
        for (k, v) in env.values.iter().enumerate() {
            prop_assert!(*v <= a.bound * k as f64 * h + 1e-15);
        }
    }

    #[test]
    fn bound_iteration_monotone(scale in 0.05f64..3.0) {
        let spec = builtin::load("example-4.2").unwrap();
        let s = summarize_coefficients(&spec, 2000, &Tolerances::default()).unwrap();
        let start = vec![scale; 3];
        let env = build_envelopes(&spec, 8.0f64.max(2.0 * scale)).unwrap();
        let it = iterate_bound(&spec, &s, &env, CriterionMatrix::Plus, &start, 200, 1e-9).unwrap();
        for w in it.trace.windows(2) {
            prop_assert!(w[1].iter().zip(&w[0]).all(|(a, b)| a <= b && *a >= 0.0));
        }
    }

    #[test]
    fn weakening_couplings_keeps_item_i(
        factors in prop::collection::vec(0.0f64..=1.0, 8),
    ) {
        // Scaling |b| and |c| towards 0 only increases M_hat off the diagonal
        // pattern, so an M-matrix stays one.
        let mut spec = builtin::load("example-4.1").unwrap();
        let mut k = 0;
        let terms: Vec<(usize, usize, usize)> = spec.active_discrete().collect();
        for (i, j, p) in terms {
            let f = factors[k % factors.len()];
            k += 1;
            spec.b[i][j][p] = spec.b[i][j][p].prescaled(1.0).divided_by(1.0 / f.max(1e-300));
            scale_declared(&mut spec.declared.b_sup[i][j][p], f);
            scale_declared(&mut spec.declared.b_limsup[i][j][p], f);
        }
        let pairs: Vec<(usize, usize)> = spec.active_distributed().collect();
        for (i, j) in pairs {
            let f = factors[k % factors.len()];
            k += 1;
            spec.c[i][j] = spec.c[i][j].divided_by(1.0 / f.max(1e-300));
            scale_declared(&mut spec.declared.c_sup[i][j], f);
            scale_declared(&mut spec.declared.c_limsup[i][j], f);
        }
        let opts = DecideOptions { horizon: 2000, bound: false, ..DecideOptions::default() };
        let r = decide(&spec, &opts).unwrap();
        prop_assert!(r.verdict.is_attractive(), "{}", r);
        prop_assert!(r.m_hat.classification.m_class != MClass::NotM);
    }
}

fn scale_declared(v: &mut Option<f64>, f: f64) {
    if let Some(x) = v {
        *x *= f;
    }
}
