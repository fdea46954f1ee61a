//! Browser front end for a few tractorlab computations. Every operation has
//! a plain Rust form returning JSON (tested natively) and a `wasm_bindgen`
//! wrapper with the same name prefixed by `js_`.

use std::collections::BTreeMap;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tractorlab::cartan::{normal_connection, section};
use tractorlab::dressing::{self, Composite};
use tractorlab::dsl::{catalog_metric, parse, MetricField, CATALOG};
use tractorlab::jet::{Jet, JetMatrix, Point};
use tractorlab::riemann::Geometry;
use tractorlab::sample::random_jet;
use tractorlab::tractor;
use wasm_bindgen::prelude::*;

const ORDER: usize = 4;

/// A metric given as INI text (anything with a `[metric]` header) or as a
/// catalog name with `key=value` parameters separated by `;`.
pub fn load_metric(source: &str, params: &str) -> Result<MetricField, String> {
    if source.contains("[metric]") {
        return MetricField::from_ini(source).map_err(|e| e.to_string());
    }
    let mut p = BTreeMap::new();
    for item in params.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item.split_once('=').ok_or_else(|| format!("parameter `{item}` is not key=value"))?;
        p.insert(k.trim().to_string(), v.trim().to_string());
    }
    catalog_metric(source.trim(), &p).map_err(|e| e.to_string())
}

fn point_of(metric: &MetricField, coords: &str) -> Result<Point, String> {
    if coords.trim().is_empty() {
        return Ok(metric.center());
    }
    let xs = coords
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| format!("bad coordinate `{s}`")))
        .collect::<Result<Vec<_>, _>>()?;
    if xs.len() != metric.dim() {
        return Err(format!("expected {} coordinates, got {}", metric.dim(), xs.len()));
    }
    Point::new(xs).map_err(|e| e.to_string())
}

fn scalar(metric: &MetricField, text: &str, p: &Point) -> Result<Jet, String> {
    let e = parse(text).map_err(|e| e.to_string())?;
    if e.max_coord().is_some_and(|i| i >= metric.dim()) {
        return Err(format!("`{text}` uses a coordinate beyond x{}", metric.dim() - 1));
    }
    e.eval(p, ORDER).map_err(|e| e.to_string())
}

fn matrix_values(m: &JetMatrix) -> Vec<Vec<f64>> {
    let v = m.values();
    (0..v.nrows()).map(|i| (0..v.ncols()).map(|j| v[(i, j)]).collect()).collect()
}

pub fn catalog() -> String {
    json!(CATALOG).to_string()
}

/// Pointwise norm `|W|` of the Weyl tensor over a `res × res` grid in the
/// `(x0, x1)` plane, other coordinates held at the domain centre. Rows run
/// over x1, columns over x0. Points where the geometry fails are `null`.
pub fn weyl_heatmap(source: &str, params: &str, res: usize) -> Result<String, String> {
    let m = load_metric(source, params)?;
    if m.dim() < 2 {
        return Err("need at least two coordinates".into());
    }
    let res = res.clamp(2, 96);
    let dom = m.domain().to_vec();
    let centre = m.center().coords().to_vec();
    let at = |lo: f64, hi: f64, k: usize| lo + (hi - lo) * (k as f64 + 0.5) / res as f64;
    let mut grid = Vec::with_capacity(res);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for r in 0..res {
        let mut row = Vec::with_capacity(res);
        for c in 0..res {
            let mut x = centre.clone();
            x[0] = at(dom[0].0, dom[0].1, c);
            x[1] = at(dom[1].0, dom[1].1, r);
            let v = Point::new(x)
                .ok()
                .and_then(|p| Geometry::new(&m, &p, 3).ok())
                .map(|g| g.weyl_lowered().values().iter().map(|w| w * w).sum::<f64>().sqrt())
                .filter(|v| v.is_finite());
            if let Some(v) = v {
                lo = lo.min(v);
                hi = hi.max(v);
            }
            row.push(v);
        }
        grid.push(row);
    }
    Ok(json!({
        "metric": m.name(),
        "x0": dom[0],
        "x1": dom[1],
        "min": if lo.is_finite() { lo } else { 0.0 },
        "max": hi,
        "grid": grid,
    })
    .to_string())
}

/// Prolongs a density σ to a tractor and reports the almost Einstein
/// residual alongside the size of its tractor derivative.
pub fn ae_prolongation(source: &str, params: &str, sigma: &str, coords: &str) -> Result<String, String> {
    let m = load_metric(source, params)?;
    let p = point_of(&m, coords)?;
    let geo = Geometry::new(&m, &p, ORDER).map_err(|e| e.to_string())?;
    let s = scalar(&m, sigma, &p)?;
    let pro = tractor::ae_prolong(&geo, &s).map_err(|e| e.to_string())?;
    let d = tractor::tractor_derivative(&geo, &pro.tractor).map_err(|e| e.to_string())?;
    let t = &pro.tractor;
    let derivative: Vec<Value> = d
        .iter()
        .map(|dt| json!({ "sigma": dt.sigma.value(), "ell": dt.ell.iter().map(Jet::value).collect::<Vec<_>>(), "rho": dt.rho.value() }))
        .collect();
    let ae = pro.residual.max_abs();
    let parallel = d.iter().map(|x| x.max_abs()).fold(0.0, f64::max);
    Ok(json!({
        "point": p.coords(),
        "tractor": { "sigma": t.sigma.value(), "ell": t.ell.iter().map(Jet::value).collect::<Vec<_>>(), "rho": t.rho.value() },
        "ae_residual": ae,
        "ae_residual_matrix": matrix_values(&pro.residual),
        "parallel_residual": parallel,
        "derivative": derivative,
        "almost_einstein": ae < 1e-8,
    })
    .to_string())
}

/// Weyl rescaling by `z`: the frame and holonomic cocycles, and how far
/// each is from recomputing the dressings on the rescaled fields.
pub fn cocycle(source: &str, params: &str, z: &str, coords: &str, seed: u64) -> Result<String, String> {
    let m = load_metric(source, params)?;
    let p = point_of(&m, coords)?;
    let zj = scalar(&m, z, &p)?;
    let geo = Geometry::new(&m, &p, ORDER).map_err(|e| e.to_string())?;
    let w = normal_connection(&geo);
    let n = m.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi = section(
        random_jet(&mut rng, &p, ORDER, 1.0),
        (0..n).map(|_| random_jet(&mut rng, &p, ORDER, 1.0)).collect(),
        random_jet(&mut rng, &p, ORDER, 1.0),
    );
    let err = |e: tractorlab::Error| e.to_string();
    let chi = Composite::new(w, phi).map_err(err)?;
    let (chi1, _) = dressing::dress_boost(&chi).map_err(err)?;
    let (chil, _) = dressing::dress_frame(&chi1).map_err(err)?;
    let einv = chi1.w.soldering().inverse().map_err(err)?;
    let c = dressing::weyl_cocycle_frame(&zj, &einv, &m.eta()).map_err(err)?;
    let cb = dressing::weyl_cocycle_holonomic(&zj, &geo.ginv).map_err(err)?;
    let first = c.act(&chi1).map_err(err)?.max_abs_diff(&dressing::redress_weyl_1(&chi, &zj).map_err(err)?);
    let full = cb.act(&chil).map_err(err)?.max_abs_diff(&dressing::redress_weyl_l(&chi, &zj).map_err(err)?);
    Ok(json!({
        "point": p.coords(),
        "z": zj.value(),
        "upsilon": c.upsilon.iter().map(Jet::value).collect::<Vec<_>>(),
        "upsilon_sq": c.upsilon_sq.value(),
        "frame_cocycle": matrix_values(&c.matrix),
        "holonomic_cocycle": matrix_values(&cb.matrix),
        "first_residual": first,
        "full_residual": full,
    })
    .to_string())
}

#[wasm_bindgen(js_name = catalog)]
pub fn js_catalog() -> String {
    catalog()
}

#[wasm_bindgen(js_name = weylHeatmap)]
pub fn js_weyl_heatmap(source: &str, params: &str, res: usize) -> Result<String, JsError> {
    weyl_heatmap(source, params, res).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = aeProlongation)]
pub fn js_ae_prolongation(source: &str, params: &str, sigma: &str, coords: &str) -> Result<String, JsError> {
    ae_prolongation(source, params, sigma, coords).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = cocycle)]
pub fn js_cocycle(source: &str, params: &str, z: &str, coords: &str, seed: u32) -> Result<String, JsError> {
    cocycle(source, params, z, coords, seed as u64).map_err(|e| JsError::new(&e))
}
