//! Expression language for metric components, and the metric catalog.

mod catalog;
mod expr;
mod metric;
mod parser;

pub use catalog::{catalog_metric, CATALOG, DEFAULT_FACTOR};
pub use expr::{BinOp, Expr, Func};
pub use metric::{MetricField, MetricSpec, Signature, SIGNATURE_SAMPLES};
pub use parser::parse;

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::error::Error;
    use crate::jet::Point;

    fn params(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn conformally_flat_matches_closed_form() {
        let g = catalog_metric("conformally_flat", &params(&[("factor", "exp(x0)")])).unwrap();
        let p = Point::new(vec![0.3, -0.1, 0.2, 0.5]).unwrap();
        let v = g.values(&p).unwrap();
        let e = (2.0f64 * 0.3).exp();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { e } else { 0.0 };
                assert!((v[(i, j)] - want).abs() <= 4.0 * f64::EPSILON * e);
            }
        }
    }

    #[test]
    fn catalog_metrics_build() {
        for name in CATALOG {
            let g = catalog_metric(name, &BTreeMap::new()).unwrap();
            assert_eq!(g.dim(), 4);
        }
        let g = catalog_metric("poly_perturbation", &params(&[("seed", "7")])).unwrap();
        assert_eq!(g.signature(), Signature::euclidean(4));
        assert!(g.values(&g.center()).unwrap().try_inverse().is_some());
        assert!(matches!(
            catalog_metric("nope", &BTreeMap::new()),
            Err(Error::UnknownMetric(_))
        ));
    }

    #[test]
    fn schwarzschild_is_lorentzian() {
        let g = catalog_metric("schwarzschild", &BTreeMap::new()).unwrap();
        let p = Point::new(vec![0.0, 3.0, 0.0, 0.0]).unwrap();
        let v = g.values(&p).unwrap();
        let (a, b) = (1.0 + 1.0 / 6.0, 1.0 - 1.0 / 6.0);
        assert!((v[(0, 0)] + (b / a) * (b / a)).abs() < 1e-14);
        assert!((v[(1, 1)] - a.powi(4)).abs() < 1e-14);
    }

    #[test]
    fn signature_mismatch_is_reported() {
        let spec = MetricSpec {
            name: "bad".into(),
            signature: Signature::euclidean(3),
            components: [((0, 0), Expr::c(-1.0)), ((1, 1), Expr::c(1.0)), ((2, 2), Expr::c(1.0))]
                .into_iter()
                .collect(),
            domain: vec![(-1.0, 1.0); 3],
            params: BTreeMap::new(),
        };
        assert!(matches!(
            MetricField::new(spec),
            Err(Error::SignatureCheck { .. })
        ));
    }

    #[test]
    fn domain_error_names_subexpression() {
        let e = parse("1 + ln(x0 - 5)").unwrap();
        let p = Point::new(vec![0.0, 0.0, 0.0]).unwrap();
        match e.eval(&p, 2) {
            Err(Error::Domain { context: Some(c), .. }) => assert_eq!(c, "ln(x0 - 5.0)"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ini_file_round_trip() {
        let text = "\
# warped product
[metric]
name = warped
n = 3
signature = 0,3
[components]
g_00 = exp(2*x2)   # scale factor
g_11 = exp(2*x2)
g_22 = 1
g_01 = 0.1*x2
[domain]
x2 = -0.5, 0.5
";
        let g = MetricField::from_ini(text).unwrap();
        assert_eq!(g.name(), "warped");
        assert_eq!(g.domain()[2], (-0.5, 0.5));
        assert_eq!(g.component(1, 0), g.component(0, 1));

        let bad = text.replace("g_22 = 1", "g_22 = 1 +");
        assert!(matches!(
            MetricField::from_ini(&bad),
            Err(Error::MetricFile { line: 9, .. })
        ));
    }

    #[test]
    fn rescale_multiplies_by_square() {
        let g = catalog_metric("round_sphere", &BTreeMap::new()).unwrap();
        let z = parse("1 + 0.1*x0*x1").unwrap();
        let h = g.conformal_rescale(&z).unwrap();
        let p = Point::new(vec![0.2, 0.4, -0.3, 0.1]).unwrap();
        let zz = (1.0f64 + 0.1 * 0.2 * 0.4).powi(2);
        let d = (h.values(&p).unwrap() - g.values(&p).unwrap() * zz).amax();
        assert!(d < 1e-14);
    }
}
