//! Built-in metrics.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::expr::Expr;
use super::metric::{MetricField, MetricSpec, Signature};
use super::parser::parse;
use crate::error::{Error, Result};

pub const CATALOG: &[&str] = &[
    "flat_euclidean",
    "flat_minkowski",
    "conformally_flat",
    "round_sphere",
    "schwarzschild",
    "poly_perturbation",
];

pub const DEFAULT_FACTOR: &str = "exp(0.3*x0 + 0.1*x1^2)";

type Params = BTreeMap<String, String>;

fn get<T: std::str::FromStr>(params: &Params, key: &str, default: T) -> Result<T> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad value `{v}` for parameter `{key}`"))),
    }
}

fn check_keys(params: &Params, allowed: &[&str]) -> Result<()> {
    for k in params.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(Error::Config(format!("unknown parameter `{k}`")));
        }
    }
    Ok(())
}

fn diagonal(
    name: &str,
    signature: Signature,
    entry: impl Fn(usize) -> Expr,
    domain: Vec<(f64, f64)>,
    params: &Params,
) -> Result<MetricField> {
    let components = (0..signature.dim()).map(|i| ((i, i), entry(i))).collect();
    MetricField::new(MetricSpec {
        name: name.to_string(),
        signature,
        components,
        domain,
        params: params.clone(),
    })
}

fn signature_param(params: &Params, n: usize, default: Signature) -> Result<Signature> {
    match params.get("signature") {
        Some(s) => Signature::parse(s, n),
        None => Ok(default),
    }
}

fn sum_sq(range: std::ops::Range<usize>) -> Expr {
    range
        .map(|i| Expr::x(i).pow(2))
        .reduce(|a, b| a + b)
        .expect("nonempty range")
}

/// Looks up a catalog metric by name.
///
/// Parameters: `n` (default 4) everywhere; `signature` for the conformally
/// flat and perturbed families; `factor` for `conformally_flat`; `mass` for
/// `schwarzschild`; `amplitude` and `seed` for `poly_perturbation`.
pub fn catalog_metric(name: &str, params: &Params) -> Result<MetricField> {
    let n: usize = get(params, "n", 4)?;
    let cube = vec![(-1.0, 1.0); n];
    match name {
        "flat_euclidean" => {
            check_keys(params, &["n"])?;
            diagonal(name, Signature::euclidean(n), |_| Expr::c(1.0), cube, params)
        }
        "flat_minkowski" => {
            check_keys(params, &["n"])?;
            let sig = Signature::lorentzian(n);
            let eta = sig.eta();
            diagonal(name, sig, |i| Expr::c(eta[i]), cube, params)
        }
        "conformally_flat" => {
            check_keys(params, &["n", "factor", "signature"])?;
            let sig = signature_param(params, n, Signature::euclidean(n))?;
            let text = params.get("factor").map(String::as_str).unwrap_or(DEFAULT_FACTOR);
            let factor = parse(text)?;
            let eta = sig.eta();
            let mut p = params.clone();
            p.insert("factor".into(), factor.to_string());
            diagonal(name, sig, |i| Expr::c(eta[i]) * factor.clone().pow(2), cube, &p)
        }
        "round_sphere" => {
            check_keys(params, &["n"])?;
            let conf = Expr::c(4.0) / (Expr::c(1.0) + sum_sq(0..n)).pow(2);
            diagonal(name, Signature::euclidean(n), |_| conf.clone(), cube, params)
        }
        "schwarzschild" => {
            check_keys(params, &["n", "mass"])?;
            if n != 4 {
                return Err(Error::Config("schwarzschild requires n = 4".into()));
            }
            let m: f64 = get(params, "mass", 1.0)?;
            // isotropic coordinates, x0 = t
            let r = sum_sq(1..4).sqrt();
            let h = Expr::c(m / 2.0) / r;
            let a = Expr::c(1.0) + h.clone();
            let b = Expr::c(1.0) - h;
            let g00 = -(b / a.clone()).pow(2);
            let gii = a.pow(4);
            let domain = vec![(-1.0, 1.0), (2.0, 4.0), (-1.0, 1.0), (-1.0, 1.0)];
            diagonal(
                name,
                Signature::lorentzian(4),
                |i| if i == 0 { g00.clone() } else { gii.clone() },
                domain,
                params,
            )
        }
        "poly_perturbation" => {
            check_keys(params, &["n", "amplitude", "seed", "signature"])?;
            let sig = signature_param(params, n, Signature::euclidean(n))?;
            let amplitude: f64 = get(params, "amplitude", 0.05)?;
            let seed: u64 = get(params, "seed", 0)?;
            poly_perturbation(sig, amplitude, seed, params)
        }
        _ => Err(Error::UnknownMetric(name.to_string())),
    }
}

fn monomials(n: usize, max_degree: usize) -> Vec<Vec<i32>> {
    fn rec(n: usize, pos: usize, left: usize, cur: &mut Vec<i32>, out: &mut Vec<Vec<i32>>) {
        if pos == n {
            out.push(cur.clone());
            return;
        }
        for k in 0..=left {
            cur[pos] = k as i32;
            rec(n, pos + 1, left - k, cur, out);
        }
        cur[pos] = 0;
    }
    let mut out = Vec::new();
    rec(n, 0, max_degree, &mut vec![0; n], &mut out);
    out
}

/// `η + amplitude * h`, each `h_ij` a cubic polynomial whose coefficients are
/// uniform in [-1, 1] divided by the number of monomials.
fn poly_perturbation(
    sig: Signature,
    amplitude: f64,
    seed: u64,
    params: &Params,
) -> Result<MetricField> {
    let n = sig.dim();
    let eta = sig.eta();
    let monos = monomials(n, 3);
    let norm = monos.len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut components = BTreeMap::new();
    for i in 0..n {
        for j in i..n {
            let base = if i == j { eta[i] } else { 0.0 };
            let mut e = Expr::c(base);
            for m in &monos {
                let c = amplitude * rng.random_range(-1.0..=1.0) / norm;
                let term = m
                    .iter()
                    .enumerate()
                    .filter(|(_, &k)| k > 0)
                    .fold(Expr::c(c), |acc, (v, &k)| {
                        acc * if k == 1 { Expr::x(v) } else { Expr::x(v).pow(k) }
                    });
                e = e + term;
            }
            components.insert((i, j), e);
        }
    }
    MetricField::new(MetricSpec {
        name: "poly_perturbation".into(),
        signature: sig,
        components,
        domain: vec![(-1.0, 1.0); n],
        params: params.clone(),
    })
}
