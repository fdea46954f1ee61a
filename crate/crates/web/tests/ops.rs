use serde_json::Value;
use tractorlab_web::{ae_prolongation, catalog, cocycle, weyl_heatmap};

fn parse(s: Result<String, String>) -> Value {
    serde_json::from_str(&s.unwrap()).unwrap()
}

#[test]
fn catalog_lists_metrics() {
    let v: Value = serde_json::from_str(&catalog()).unwrap();
    assert!(v.as_array().unwrap().iter().any(|x| x == "schwarzschild"));
}

#[test]
fn heatmap_separates_flat_from_curved() {
    let flat = parse(weyl_heatmap("conformally_flat", "", 6));
    assert!(flat["max"].as_f64().unwrap() < 1e-8);
    let s = parse(weyl_heatmap("schwarzschild", "", 6));
    assert_eq!(s["grid"].as_array().unwrap().len(), 6);
    assert!(s["min"].as_f64().unwrap() > 1e-3);
}

#[test]
fn heatmap_reads_ini_metrics() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../metrics/warped.ini")).unwrap();
    let v = parse(weyl_heatmap(&text, "", 4));
    assert_eq!(v["metric"], "warped");
    assert!(v["max"].as_f64().unwrap() < 1e-8);
}

#[test]
fn constant_density_on_sphere_is_parallel() {
    let v = parse(ae_prolongation("round_sphere", "", "1", ""));
    assert_eq!(v["almost_einstein"], true);
    assert!(v["parallel_residual"].as_f64().unwrap() < 1e-9);
    let v = parse(ae_prolongation("poly_perturbation", "seed=3", "1 + 0.2*x0", ""));
    assert_eq!(v["almost_einstein"], false);
    assert!(v["parallel_residual"].as_f64().unwrap() > 1e-6);
}

#[test]
fn cocycle_matches_redressing() {
    let v = parse(cocycle("poly_perturbation", "seed=2", "exp(0.2*x0 - 0.1*x2^2)", "", 5));
    assert!(v["first_residual"].as_f64().unwrap() < 1e-9);
    assert!(v["full_residual"].as_f64().unwrap() < 1e-9);
    assert_eq!(v["frame_cocycle"].as_array().unwrap().len(), 6);
}

#[test]
fn bad_input_is_an_error() {
    assert!(weyl_heatmap("nope", "", 4).is_err());
    assert!(ae_prolongation("round_sphere", "", "x9", "").is_err());
    assert!(cocycle("round_sphere", "", "-1", "", 0).is_err());
    assert!(cocycle("round_sphere", "", "1", "0.1,0.2", 0).is_err());
}
