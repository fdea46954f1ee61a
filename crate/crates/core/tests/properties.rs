use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tractorlab::brst::GMatrix;
use tractorlab::dsl::{catalog_metric, parse, BinOp, Expr, Func, CATALOG};
use tractorlab::jet::{JetMatrix, Point};
use tractorlab::riemann::{self, Geometry};
use tractorlab::sample::random_jet;
use tractorlab::tractor::rescaled_geometry;

fn expr_strategy(dim: usize) -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0u32..2000).prop_map(|k| Expr::Const(k as f64 / 16.0)),
        (1e-3f64..1e3).prop_map(Expr::Const),
        (0..dim).prop_map(Expr::Coord),
    ];
    leaf.prop_recursive(5, 48, 2, |inner| {
        prop_oneof![
            (
                prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div)],
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, a, b)| Expr::Binary(op, Box::new(a), Box::new(b))),
            (inner.clone(), -3i32..5).prop_map(|(a, p)| Expr::Pow(Box::new(a), p)),
            inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            (
                prop_oneof![Just(Func::Exp), Just(Func::Ln), Just(Func::Sin), Just(Func::Cos), Just(Func::Sqrt)],
                inner
            )
                .prop_map(|(f, a)| Expr::Call(f, Box::new(a))),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn printed_expressions_reparse_identically(e in expr_strategy(4)) {
        let text = e.to_string();
        let back = parse(&text).unwrap();
        prop_assert_eq!(back, e, "{}", text);
    }
}

/// Polynomial of total degree ≤ 3 as (coefficient, exponents) terms.
fn poly_strategy(dim: usize) -> impl Strategy<Value = Vec<(f64, Vec<usize>)>> {
    let term = (-1.0f64..=1.0, prop::collection::vec(0usize..=3, dim))
        .prop_filter("degree <= 3", |(_, a)| a.iter().sum::<usize>() <= 3);
    prop::collection::vec(term, 1..8)
}

fn poly_expr(terms: &[(f64, Vec<usize>)]) -> Expr {
    let mono = |c: f64, a: &[usize]| {
        a.iter().enumerate().fold(Expr::Const(c.abs()), |acc, (i, &k)| {
            Expr::Binary(BinOp::Mul, Box::new(acc), Box::new(Expr::x(i).pow(k as i32)))
        })
    };
    terms.iter().fold(Expr::Const(0.0), |acc, (c, a)| {
        let op = if *c < 0.0 { BinOp::Sub } else { BinOp::Add };
        Expr::Binary(op, Box::new(acc), Box::new(mono(*c, a)))
    })
}

/// `∂^α` of the polynomial at `x`, differentiated term by term.
fn poly_partial(terms: &[(f64, Vec<usize>)], alpha: &[usize], x: &[f64]) -> f64 {
    terms
        .iter()
        .map(|(c, a)| {
            let mut v = *c;
            for i in 0..x.len() {
                if alpha[i] > a[i] {
                    return 0.0;
                }
                let falling: usize = ((a[i] - alpha[i] + 1)..=a[i]).product();
                v *= falling as f64 * x[i].powi((a[i] - alpha[i]) as i32);
            }
            v
        })
        .sum()
}

fn multi_indices(dim: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|p| (0..=max).map(move |k| [p.clone(), vec![k]].concat()))
            .collect();
    }
    out.retain(|a| a.iter().sum::<usize>() <= max);
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn polynomial_partials_are_exact(
        terms in poly_strategy(3),
        x in prop::collection::vec(-1.5f64..1.5, 3),
    ) {
        let jet = poly_expr(&terms).eval(&Point::new(x.clone()).unwrap(), 3).unwrap();
        for alpha in multi_indices(3, 3) {
            let want = poly_partial(&terms, &alpha, &x);
            let got = jet.partial(&alpha).unwrap();
            prop_assert!((got - want).abs() <= 1e-13 * want.abs().max(1.0), "{alpha:?}: {got} vs {want}");
        }
    }

    #[test]
    fn lower_orders_are_prefixes(e in expr_strategy(3), x in prop::collection::vec(0.1f64..0.9, 3)) {
        let p = Point::new(x).unwrap();
        if let (Ok(hi), Ok(lo)) = (e.eval(&p, 3), e.eval(&p, 2)) {
            if hi.is_finite() {
                prop_assert_eq!(&hi.coeffs()[..lo.coeffs().len()], lo.coeffs());
            }
        }
    }
}

/// `exp` or `sin` of a polynomial, evaluated as plain values.
fn smooth_strategy() -> impl Strategy<Value = Expr> {
    (poly_strategy(3), prop::bool::ANY).prop_map(|(t, use_exp)| {
        Expr::call(if use_exp { Func::Exp } else { Func::Sin }, poly_expr(&t))
    })
}

fn value_at(e: &Expr, x: &[f64]) -> f64 {
    e.eval(&Point::new(x.to_vec()).unwrap(), 0).unwrap().value()
}

fn shifted(x: &[f64], steps: &[(usize, f64)]) -> Vec<f64> {
    let mut y = x.to_vec();
    for &(i, h) in steps {
        y[i] += h;
    }
    y
}

/// Central differences with one Richardson step.
fn fd_first(e: &Expr, x: &[f64], i: usize, h: f64) -> f64 {
    let d = |h: f64| (value_at(e, &shifted(x, &[(i, h)])) - value_at(e, &shifted(x, &[(i, -h)]))) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

fn fd_second(e: &Expr, x: &[f64], i: usize, j: usize, h: f64) -> f64 {
    let d = |h: f64| {
        let f = |a: f64, b: f64| value_at(e, &shifted(x, &[(i, a), (j, b)]));
        (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h)
    };
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn jets_agree_with_finite_differences(e in smooth_strategy(), x in prop::collection::vec(-0.8f64..0.8, 3)) {
        let jet = e.eval(&Point::new(x.clone()).unwrap(), 2).unwrap();
        let scale = jet.coeffs().iter().fold(1.0f64, |m, c| m.max(c.abs()));
        for i in 0..3 {
            let mut a = vec![0; 3];
            a[i] = 1;
            let fd = fd_first(&e, &x, i, 1e-3);
            prop_assert!((jet.partial(&a).unwrap() - fd).abs() <= 1e-6 * scale, "d{i}");
            for j in 0..3 {
                let mut a = vec![0; 3];
                a[i] += 1;
                a[j] += 1;
                let fd = fd_second(&e, &x, i, j, 1e-2);
                prop_assert!((jet.partial(&a).unwrap() - fd).abs() <= 1e-6 * scale * 10.0, "d{i}d{j}");
            }
        }
    }
}

fn poly_metric(seed: u64) -> tractorlab::dsl::MetricField {
    let p: BTreeMap<String, String> = [("seed".to_string(), seed.to_string())].into();
    catalog_metric("poly_perturbation", &p).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn curvature_identities_hold(seed in 0u64..1000, k in 0u64..1000) {
        let m = poly_metric(seed);
        let p = m.sample_points(1, k).remove(0);
        let geo = Geometry::new(&m, &p, 4).unwrap();
        prop_assert!(riemann::metricity_residual(&geo).unwrap() < 1e-11);
        prop_assert!(riemann::contracted_bianchi_residual(&geo).unwrap() < 1e-7);
        let mut rng = ChaCha8Rng::seed_from_u64(k);
        let z = random_jet(&mut rng, &p, 4, 0.3).exp();
        let hat = rescaled_geometry(&geo, &z, &m.eta()).unwrap();
        prop_assert!(riemann::weyl_invariance_residual(&geo, &hat) < 1e-7);
        prop_assert!(riemann::schouten_law_residual(&geo, &hat, &z).unwrap() < 1e-8);
        // Weyl tensor is totally trace free
        let n = geo.dim();
        for s in 0..n {
            for v in 0..n {
                let tr: f64 = (0..n).map(|r| geo.weyl.get(&[r, s, r, v]).value()).sum();
                prop_assert!(tr.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn grassmann_products_associate(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = Point::new(vec![0.1, 0.2]).unwrap();
        let mut odd = || {
            let comps: Vec<JetMatrix> = (0..3)
                .map(|_| JetMatrix::from_fn(3, 3, 2, |_, _| random_jet(&mut rng, &p, 1, 1.0)))
                .collect();
            GMatrix::odd(&comps)
        };
        let (a, b, c) = (odd(), odd(), odd());
        let ab_c = a.matmul(&b).matmul(&c);
        let a_bc = a.matmul(&b.matmul(&c));
        prop_assert!(ab_c.max_abs_diff(&a_bc) < 1e-13);
        // odd elements square to a degree-two element, and odd·odd·odd·odd vanishes on three generators
        prop_assert!(a.matmul(&a).degree(2).max_abs_diff(&a.matmul(&a)) == 0.0);
        prop_assert!(ab_c.matmul(&a).max_abs() == 0.0);
    }
}

#[test]
fn catalog_metrics_pass_signature_check() {
    for name in CATALOG {
        let m = catalog_metric(name, &BTreeMap::new()).unwrap();
        m.check_signature().unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn conformally_flat_is_rescaled_flat(x in prop::collection::vec(-0.9f64..0.9, 4)) {
        let m = catalog_metric("conformally_flat", &BTreeMap::new()).unwrap();
        let g = m.values(&Point::new(x.clone()).unwrap()).unwrap();
        let f = (2.0 * (0.3 * x[0] + 0.1 * x[1] * x[1])).exp();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { f } else { 0.0 };
                prop_assert!((g[(i, j)] - want).abs() <= 4.0 * f64::EPSILON * f);
            }
        }
    }
}
