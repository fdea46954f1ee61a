use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tractorlab::brst::*;
use tractorlab::cartan::{normal_connection, section, Connection, Section};
use tractorlab::dressing::{dress_boost, dress_frame, Composite};
use tractorlab::dsl::{catalog_metric, MetricField};
use tractorlab::jet::{Jet, JetMatrix, Point};
use tractorlab::riemann::Geometry;
use tractorlab::sample::{random_h_field, random_jet};

fn metric(name: &str, extra: &[(&str, &str)]) -> MetricField {
    let p: BTreeMap<String, String> = extra.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    catalog_metric(name, &p).unwrap()
}

fn poly() -> MetricField {
    metric("poly_perturbation", &[("seed", "4"), ("signature", "1,3")])
}

fn random_section(rng: &mut ChaCha8Rng, p: &Point, order: usize) -> Section {
    section(
        random_jet(rng, p, order, 1.0),
        (0..4).map(|_| random_jet(rng, p, order, 1.0)).collect(),
        random_jet(rng, p, order, 1.0),
    )
}

fn normal_at(m: &MetricField, p: &Point) -> (Geometry, Connection) {
    let geo = Geometry::new(m, p, 4).unwrap();
    let w = normal_connection(&geo);
    (geo, w)
}

#[test]
fn ghost_assembly_examples() {
    let p = Point::new(vec![0.3, -0.1, 0.2, 0.5]).unwrap();
    let eta = vec![-1.0, 1.0, 1.0, 1.0];
    let zero = || Jet::zero(4, 3);
    let v = ghost_assemble(zero(), &DMatrix::zeros(4, 4), vec![zero(); 4], &eta).unwrap();
    assert_eq!(v.matrix().max_abs(), 0.0);

    let x0 = Jet::coordinate(&p, 0, 3).unwrap();
    let v = ghost_assemble(x0, &DMatrix::zeros(4, 4), vec![zero(); 4], &eta).unwrap();
    let m = v.component_matrix(0, Sectors::ALL).values();
    for i in 0..6 {
        for j in 0..6 {
            let want = match (i, j) {
                (0, 0) => 0.3,
                (5, 5) => -0.3,
                _ => 0.0,
            };
            assert_eq!(m[(i, j)], want);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let g = random_ghost(&mut rng, &p, 3, &eta, 3, Sectors::ALL).unwrap();
    assert!(g.algebra_residual() < 1e-11);

    // s must be in so(1,3)
    let mut bad = DMatrix::zeros(4, 4);
    bad[(0, 1)] = 1.0;
    bad[(1, 0)] = -1.0;
    assert!(ghost_assemble(zero(), &bad, vec![zero(); 4], &eta).is_err());
}

#[test]
fn transform_examples() {
    let p = Point::new(vec![0.1, 0.2, -0.3, 0.4]).unwrap();
    let eta = vec![1.0; 4];
    let eps = Jet::constant(4, 3, 0.7);
    let zero = Jet::zero(4, 3);
    let v = ghost_assemble(eps, &DMatrix::zeros(4, 4), vec![zero.clone(); 4], &eta).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let phi = random_section(&mut rng, &p, 3);
    let s = s_section(&phi, &v.matrix());
    let c = s.component(0).values();
    let (rho, sigma) = (phi.get(0, 0).value(), phi.get(5, 0).value());
    assert!((c[(0, 0)] + 0.7 * rho).abs() < 1e-15);
    assert!((c[(5, 0)] - 0.7 * sigma).abs() < 1e-15);
    for a in 1..5 {
        assert_eq!(c[(a, 0)], 0.0);
    }

    // flat geometry: curvature vanishes, so does its variation
    let flat = metric("flat_euclidean", &[]);
    let (_, w) = normal_at(&flat, &p);
    let g = random_ghost(&mut rng, &p, 3, &eta, 2, Sectors::ALL).unwrap();
    let om = w.curvature().unwrap();
    assert!(s_curvature(&om, &g.matrix()).iter().all(|x| x.max_abs() < 1e-12));
    let nil = nilpotency_check(&w, &om, &phi, &g.matrix());
    assert!(nil.section < 1e-10);
}

#[test]
fn nilpotency_on_perturbed_metric() {
    let m = poly();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for p in m.sample_points(4, 11) {
        let (_, wn) = normal_at(&m, &p);
        let gamma = random_h_field(&mut rng, &p, 4, &wn.eta).unwrap();
        let w = wn.gauge_transform_h(&gamma).unwrap();
        let om = w.curvature().unwrap();
        let phi = random_section(&mut rng, &p, 3);
        let g = random_ghost(&mut rng, &p, 3, &wn.eta, 2, Sectors::ALL).unwrap();
        let nil = nilpotency_check(&w, &om, &phi, &g.matrix());
        assert!(nil.max() < 1e-8, "{nil:?}");
        // and a nonzero s for the record
        assert!(s_connection(&w, &g.matrix())[0].max_abs() > 1e-3);
    }
}

#[test]
fn dressed_ghosts_match_closed_forms() {
    let m = poly();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for p in m.sample_points(4, 12) {
        let (_, w) = normal_at(&m, &p);
        let g = random_ghost(&mut rng, &p, 3, &w.eta, 2, Sectors::ALL).unwrap();
        for stage in [Stage::First, Stage::Full] {
            let d = dressed_ghost(&w, &g, stage).unwrap();
            assert!(d.residual() < 1e-9, "{stage:?} {}", d.residual());
            assert!(d.oracle_residual() < 1e-9, "{stage:?} {}", d.oracle_residual());
        }

        // the boost ghost drops out
        let iota = g.restrict(Sectors::BOOST);
        let d = dressed_ghost(&w, &iota, Stage::First).unwrap();
        assert!(d.rules.max_abs() < 1e-10);
        assert!(d.oracle.max_abs() < 1e-10);
        let d = dressed_ghost(&w, &g.restrict(Sectors::WEYL), Stage::Full).unwrap();
        let c = d.closed_form.component(0);
        let eps = &g.comps[0].eps;
        assert!((c.get(1, 1).value() - eps.value()).abs() < 1e-14);
        assert!((c.get(0, 2).value() - eps.d1(1)).abs() < 1e-14);
    }
}

struct Dressed {
    w: Connection,
    phi: Section,
    chil: Composite,
    ginv: JetMatrix,
}

fn dressed(m: &MetricField, p: &Point, rng: &mut ChaCha8Rng, normal: bool) -> Dressed {
    let (geo, wn) = normal_at(m, p);
    let w = if normal {
        wn
    } else {
        let gamma = random_h_field(rng, p, 4, &wn.eta).unwrap();
        wn.gauge_transform_h(&gamma).unwrap()
    };
    let phi = random_section(rng, p, 3);
    let chi = Composite::new(w.clone(), phi.clone()).unwrap();
    let (chi1, _) = dress_boost(&chi).unwrap();
    let (chil, _) = dress_frame(&chi1).unwrap();
    let ginv = geo.g.inverse().unwrap();
    Dressed { w, phi, chil, ginv }
}

#[test]
fn fully_dressed_fields_are_k1_and_lorentz_invariant() {
    let m = poly();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for p in m.sample_points(4, 13) {
        let d = dressed(&m, &p, &mut rng, false);
        let g = random_ghost(&mut rng, &p, 3, &d.w.eta, 2, Sectors::NO_WEYL).unwrap();
        let var = composite_variation(&d.w, &d.phi, &g, Stage::Full).unwrap();
        let worst = var.w.iter().map(GMatrix::max_abs).fold(var.phi.max_abs(), f64::max);
        assert!(worst < 1e-9, "{worst}");
        // the first dressing alone is only boost invariant
        let var = composite_variation(&d.w, &d.phi, &g.restrict(Sectors::BOOST), Stage::First).unwrap();
        assert!(var.w.iter().map(GMatrix::max_abs).fold(0.0, f64::max) < 1e-9);
    }
}

#[test]
fn weyl_tables_match_transform() {
    let m = poly();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for p in m.sample_points(4, 14) {
        let d = dressed(&m, &p, &mut rng, true);
        let g = random_ghost(&mut rng, &p, 3, &d.w.eta, 2, Sectors::WEYL).unwrap();
        let vw = dressed_ghost(&d.w, &g, Stage::Full).unwrap().closed_form;
        let eps = g.eps();

        let sw = s_connection(&d.chil.w, &vw);
        let table = sw_connection_table(&d.chil.w, &eps).unwrap();
        let var = composite_variation(&d.w, &d.phi, &g, Stage::Full).unwrap();
        assert!(table[1].max_abs() > 1e-3);
        for mu in 0..4 {
            assert!(sw[mu].max_abs_diff(&table[mu]) < 1e-8);
            assert!(var.w[mu].max_abs_diff(&table[mu]) < 1e-8);
        }

        let so = s_curvature(&d.chil.omega, &vw);
        let table = sw_curvature_table_normal(&d.chil.omega, &eps, &d.ginv);
        for (a, b) in so.iter().zip(&table) {
            assert!(a.max_abs_diff(b) < 1e-9, "{}", a.max_abs_diff(b));
        }

        let sp = s_section(&d.chil.phi, &vw);
        assert!(sp.max_abs_diff(&sw_section_table(&d.chil.phi, &eps, &d.ginv)) < 1e-9);
        assert!(var.phi.max_abs_diff(&sp) < 1e-9);

        let sv = s_ghost(&vw);
        let table = sw_ghost_table(&eps, &d.ginv);
        assert!(sv.max_abs_diff(&table) < 1e-12);
        assert!(sv.max_abs() > 1e-6);

        let nil = nilpotency_check(&d.chil.w, &d.chil.omega, &d.chil.phi, &vw);
        assert!(nil.section < 1e-9 && nil.max() < 1e-8, "{nil:?}");
    }
}

#[test]
fn finite_transforms_linearize_to_brst() {
    let m = poly();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let p = m.sample_points(1, 15).remove(0);
    let (_, w) = normal_at(&m, &p);
    let phi = random_section(&mut rng, &p, 3);
    let ts = [1e-2, 1e-3, 1e-4];

    let eps = ghost_assemble(
        Jet::constant(4, 3, 0.8),
        &DMatrix::zeros(4, 4),
        vec![Jet::zero(4, 3); 4],
        &w.eta,
    )
    .unwrap();
    let r = finite_consistency(&w, &phi, &eps.component_matrix(0, Sectors::ALL), FieldKind::Section, &ts).unwrap();
    assert!(r.identity_at_zero);
    assert!(r.converged && (r.slope - 1.0).abs() < 0.1, "{r:?}");

    let g = random_ghost(&mut rng, &p, 3, &w.eta, 1, Sectors::BOOST).unwrap();
    let r = finite_consistency(&w, &phi, &g.component_matrix(0, Sectors::ALL), FieldKind::Connection, &ts).unwrap();
    assert!(r.identity_at_zero);
    assert!(r.converged && (r.slope - 1.0).abs() < 0.1, "{r:?}");

    let g = random_ghost(&mut rng, &p, 3, &w.eta, 1, Sectors::ALL).unwrap();
    let r = finite_consistency(&w, &phi, &g.component_matrix(0, Sectors::ALL), FieldKind::Curvature, &ts).unwrap();
    assert!(r.converged, "{r:?}");
}
