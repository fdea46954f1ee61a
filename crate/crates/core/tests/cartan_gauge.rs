use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tractorlab::cartan::{gt0_table, gt1_table, normal_connection, normality_report, HField};
use tractorlab::dsl::catalog_metric;
use tractorlab::riemann::Geometry;
use tractorlab::sample::random_h_field;

fn params(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

#[test]
fn block_tables_match_matrix_transform() {
    let metric = catalog_metric("poly_perturbation", &params(&[("seed", "3"), ("signature", "1,3")])).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for p in metric.sample_points(10, 5) {
        let geo = Geometry::new(&metric, &p, 3).unwrap();
        let w = normal_connection(&geo);
        let gamma = random_h_field(&mut rng, &p, 3, &w.eta).unwrap();
        let matrix = w.gauge_transform_h(&gamma).unwrap();
        let mut g0 = gamma.clone();
        g0.r = vec![tractorlab::jet::Jet::zero(4, 3); 4];
        let table = gt1_table(&gt0_table(&w, &g0).unwrap(), &gamma.r);
        let d = matrix.max_abs_diff(&table);
        assert!(d < 1e-9, "{d}");
        assert!(matrix.algebra_residual() < 1e-10);
    }
}

#[test]
fn curvature_is_tensorial_and_bianchi_holds() {
    let metric = catalog_metric("poly_perturbation", &params(&[("seed", "9")])).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for p in metric.sample_points(3, 1) {
        let geo = Geometry::new(&metric, &p, 4).unwrap();
        let w = normal_connection(&geo);
        let om = w.curvature().unwrap();
        assert!(om.bianchi_residual(&w).unwrap() < 1e-7);
        let gamma: HField = random_h_field(&mut rng, &p, 4, &w.eta).unwrap();
        let (gm, gi) = (gamma.matrix().unwrap(), gamma.inverse().unwrap());
        let wg = w.gauge_transform(&gm, &gi).unwrap();
        let d = wg.curvature().unwrap().max_abs_diff(&om.conjugate(&gm, &gi));
        assert!(d < 1e-8, "{d}");
        let rep = normality_report(&w, &om).unwrap();
        assert!(rep.is_normal(1e-8), "{rep:?}");
        // induced metric of the transformed connection is z^2 g
        let z2 = gamma.z.value().powi(2);
        let gz = wg.induced_metric().values();
        assert!((gz - geo.g.values() * z2).amax() < 1e-10);
    }
}
