//! Metric-level tensors: Christoffel symbols, curvature, Schouten, Cotton,
//! Weyl, vielbein and spin connection.
//!
//! Index conventions: `christoffel[α, μ, ν] = Γ^α_{μν}`,
//! `riemann[ρ, σ, μ, ν] = R^ρ_{σμν}`, `cotton[μ, λ, ν] = C_{μλ,ν}` (a 2-form in
//! the first pair), and covariant derivatives put the derivative index first.
//! Each derivative costs one jet order, so a metric jet of order k yields
//! Γ at order k-1, curvature at k-2 and Cotton at k-3.

use crate::dsl::MetricField;
use crate::error::{Error, Result};
use crate::jet::{Jet, JetMatrix, JetTensor, Point};

fn sum(mut terms: impl Iterator<Item = Jet>) -> Jet {
    let first = terms.next().expect("empty sum");
    terms.fold(first, |acc, t| acc + t)
}

fn need(order: usize, needed: usize) -> Result<()> {
    if order < needed {
        Err(Error::MissingJets { needed, have: order })
    } else {
        Ok(())
    }
}

/// Metric jets and their inverse (jet-level Gauss-Jordan).
pub fn metric_jets(metric: &MetricField, point: &Point, order: usize) -> Result<(JetMatrix, JetMatrix)> {
    let g = metric.jets(point, order)?;
    let ginv = g.inverse()?;
    Ok((g, ginv))
}

/// `Γ^α_{μν} = ½ g^{αβ}(∂_μ g_{βν} + ∂_ν g_{βμ} - ∂_β g_{μν})`.
pub fn christoffel(g: &JetMatrix, ginv: &JetMatrix) -> Result<JetTensor> {
    need(g.order(), 1)?;
    let n = g.rows();
    // dg[(b * n + m) * n + k] = ∂_k g_{bm}
    let mut dg = Vec::with_capacity(n * n * n);
    for b in 0..n {
        for m in 0..n {
            for k in 0..n {
                dg.push(g.get(b, m).derivative(k));
            }
        }
    }
    let d = |b: usize, m: usize, k: usize| &dg[(b * n + m) * n + k];
    let mut lowered = vec![None; n * n * n];
    for b in 0..n {
        for m in 0..n {
            for v in m..n {
                let x = (d(b, v, m) + d(b, m, v) - d(m, v, b)).scale(0.5);
                lowered[(b * n + m) * n + v] = Some(x.clone());
                lowered[(b * n + v) * n + m] = Some(x);
            }
        }
    }
    let low = |b: usize, m: usize, v: usize| lowered[(b * n + m) * n + v].as_ref().unwrap();
    Ok(JetTensor::from_fn(&[n, n, n], |i| {
        sum((0..n).map(|b| ginv.get(i[0], b) * low(b, i[1], i[2])))
    }))
}

/// `R^ρ_{σμν} = ∂_μΓ^ρ_{νσ} - ∂_νΓ^ρ_{μσ} + Γ^ρ_{μλ}Γ^λ_{νσ} - Γ^ρ_{νλ}Γ^λ_{μσ}`.
pub fn riemann_tensor(gamma: &JetTensor) -> Result<JetTensor> {
    need(gamma.order(), 1)?;
    let n = gamma.shape()[0];
    let gm = |a: usize, b: usize, c: usize| gamma.get(&[a, b, c]);
    let zero = Jet::zero(n, gamma.order() - 1);
    let mut data = vec![zero; n * n * n * n];
    let at = |r: usize, s: usize, m: usize, v: usize| ((r * n + s) * n + m) * n + v;
    for r in 0..n {
        for s in 0..n {
            for m in 0..n {
                for v in (m + 1)..n {
                    let mut x = gm(r, v, s).derivative(m) - gm(r, m, s).derivative(v);
                    for l in 0..n {
                        x = x + gm(r, m, l) * gm(l, v, s) - gm(r, v, l) * gm(l, m, s);
                    }
                    data[at(r, s, v, m)] = -&x;
                    data[at(r, s, m, v)] = x;
                }
            }
        }
    }
    Ok(JetTensor::from_vec(&[n, n, n, n], data))
}

/// `R_{σν} = R^μ_{σμν}`.
pub fn ricci(riemann: &JetTensor) -> JetMatrix {
    let n = riemann.shape()[0];
    JetMatrix::from_fn(n, n, n, |s, v| {
        sum((0..n).map(|m| riemann.get(&[m, s, m, v]).clone()))
    })
}

/// `g^{μν} T_{μν}`.
pub fn trace(t: &JetMatrix, ginv: &JetMatrix) -> Jet {
    let n = t.rows();
    sum((0..n).flat_map(|i| (0..n).map(move |j| ginv.get(i, j) * t.get(i, j))))
}

/// `P_{μν} = -1/(n-2) (R_{μν} - R/(2(n-1)) g_{μν})`.
pub fn schouten(ricci: &JetMatrix, scalar: &Jet, g: &JetMatrix) -> Result<JetMatrix> {
    let n = g.rows();
    if n < 3 {
        return Err(Error::Config(format!("Schouten tensor needs n >= 3, got {n}")));
    }
    let c = -1.0 / (n as f64 - 2.0);
    let s = scalar.scale(1.0 / (2.0 * (n as f64 - 1.0)));
    Ok(JetMatrix::from_fn(n, n, n, |i, j| {
        (ricci.get(i, j) - &(&s * g.get(i, j))).scale(c)
    }))
}

/// `C_{μλ,ν} = ∇_μP_{λν} - ∇_λP_{μν}` from `dp[μ, λ, ν] = ∇_μ P_{λν}`.
pub fn cotton(dp: &JetTensor) -> JetTensor {
    let n = dp.shape()[0];
    JetTensor::from_fn(&[n, n, n], |i| {
        dp.get(&[i[0], i[1], i[2]]) - dp.get(&[i[1], i[0], i[2]])
    })
}

/// `W^ρ_{σμν} = R^ρ_{σμν} + δ^ρ_μ P_{νσ} - δ^ρ_ν P_{μσ} + P^ρ_μ g_{σν} - P^ρ_ν g_{σμ}`.
pub fn weyl(riemann: &JetTensor, p: &JetMatrix, g: &JetMatrix, ginv: &JetMatrix) -> JetTensor {
    let n = g.rows();
    // p_up[ρ][μ] = g^{ρα} P_{μα}
    let p_up = ginv.matmul(&p.transpose());
    JetTensor::from_fn(&[n, n, n, n], |i| {
        let (r, s, m, v) = (i[0], i[1], i[2], i[3]);
        let mut x = riemann.get(i) + &(p_up.get(r, m) * g.get(s, v)) - p_up.get(r, v) * g.get(s, m);
        if r == m {
            x = x + p.get(v, s);
        }
        if r == v {
            x = x - p.get(m, s);
        }
        x
    })
}

/// Index type of a tensor slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Valence {
    Up,
    Down,
}

/// Levi-Civita covariant derivative; the result carries the derivative index first.
pub fn covariant_derivative(t: &JetTensor, valence: &[Valence], gamma: &JetTensor) -> Result<JetTensor> {
    if valence.len() != t.rank() {
        return Err(Error::DimensionMismatch(format!(
            "{} valences for a rank-{} tensor",
            valence.len(),
            t.rank()
        )));
    }
    let n = gamma.shape()[0];
    if t.shape().iter().any(|&s| s != n) {
        return Err(Error::DimensionMismatch(format!(
            "tensor shape {:?} in dimension {n}",
            t.shape()
        )));
    }
    need(t.order(), 1)?;
    let mut shape = vec![n];
    shape.extend_from_slice(t.shape());
    Ok(JetTensor::from_fn(&shape, |i| {
        let m = i[0];
        let idx = &i[1..];
        let mut x = t.get(idx).derivative(m);
        let mut moved = idx.to_vec();
        for (slot, v) in valence.iter().enumerate() {
            let orig = idx[slot];
            for l in 0..n {
                moved[slot] = l;
                let term = match v {
                    Valence::Up => gamma.get(&[orig, m, l]) * t.get(&moved),
                    Valence::Down => -(gamma.get(&[l, m, orig]) * t.get(&moved)),
                };
                x = x + term;
            }
            moved[slot] = orig;
        }
        x
    }))
}

/// `∇_μ∇_ν f = ∂_μ∂_ν f - Γ^λ_{μν} ∂_λ f`.
pub fn hessian(f: &Jet, gamma: &JetTensor) -> Result<JetMatrix> {
    need(f.order(), 2)?;
    let n = f.dim();
    let df: Vec<Jet> = (0..n).map(|i| f.derivative(i)).collect();
    Ok(JetMatrix::from_fn(n, n, n, |m, v| {
        let corr = sum((0..n).map(|l| gamma.get(&[l, m, v]) * &df[l]));
        df[v].derivative(m) - corr
    }))
}

/// `Δf = g^{μν} ∇_μ∇_ν f`.
pub fn laplacian(f: &Jet, ginv: &JetMatrix, gamma: &JetTensor) -> Result<Jet> {
    Ok(trace(&hessian(f, gamma)?, ginv))
}

/// Vielbein `e^a_μ` (rows a, columns μ) with `eᵀηe = g`, and its inverse `e^μ_a`.
#[derive(Clone, Debug)]
pub struct Frame {
    pub e: JetMatrix,
    pub inverse: JetMatrix,
    pub eta: Vec<f64>,
}

/// `g = L D Lᵀ` without pivoting, then `e = |D|^{1/2} Lᵀ`; each pivot sign must match `η`.
pub fn vielbein(g: &JetMatrix, eta: &[f64]) -> Result<Frame> {
    let n = g.rows();
    if eta.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "flat metric of size {} for a {n}x{n} metric",
            eta.len()
        )));
    }
    let order = g.order();
    let mut l = JetMatrix::identity(n, n, order);
    let mut d: Vec<Jet> = Vec::with_capacity(n);
    for j in 0..n {
        let mut dj = g.get(j, j).clone();
        for k in 0..j {
            dj = dj - &(l.get(j, k) * l.get(j, k) * &d[k]);
        }
        let scale = g.max_abs().max(f64::MIN_POSITIVE);
        let found = if dj.value().abs() <= 1e-14 * scale {
            0
        } else {
            dj.value().signum() as i8
        };
        let expected = eta[j].signum() as i8;
        if found != expected {
            return Err(Error::SignatureMismatch {
                pivot: j,
                found,
                expected,
            });
        }
        let rj = dj.recip()?;
        for i in (j + 1)..n {
            let mut x = g.get(i, j).clone();
            for k in 0..j {
                x = x - &(l.get(i, k) * l.get(j, k) * &d[k]);
            }
            l.set(i, j, &x * &rj);
        }
        d.push(dj);
    }
    let roots: Vec<Jet> = d
        .iter()
        .zip(eta)
        .map(|(dj, s)| dj.scale(s.signum()).sqrt())
        .collect::<Result<_>>()?;
    let e = JetMatrix::from_fn(n, n, n, |a, m| {
        if m < a {
            Jet::zero(n, order)
        } else {
            &roots[a] * l.get(m, a)
        }
    });
    let inverse = e.inverse()?;
    Ok(Frame {
        e,
        inverse,
        eta: eta.to_vec(),
    })
}

/// `A^a_{bμ} = e^a_ν(∂_μ e^ν_b + Γ^ν_{μλ} e^λ_b)`, one n×n matrix per μ.
pub fn spin_connection(frame: &Frame, gamma: &JetTensor) -> Result<Vec<JetMatrix>> {
    need(frame.inverse.order(), 1)?;
    let n = frame.e.rows();
    let einv = &frame.inverse;
    Ok((0..n)
        .map(|m| {
            let inner = JetMatrix::from_fn(n, n, n, |v, b| {
                let conn = sum((0..n).map(|l| gamma.get(&[v, m, l]) * einv.get(l, b)));
                einv.get(v, b).derivative(m) + conn
            });
            frame.e.matmul(&inner)
        })
        .collect())
}

/// Every metric-level quantity at one point.
#[derive(Clone, Debug)]
pub struct Geometry {
    pub order: usize,
    pub g: JetMatrix,
    pub ginv: JetMatrix,
    pub christoffel: JetTensor,
    pub riemann: JetTensor,
    pub ricci: JetMatrix,
    pub scalar: Jet,
    pub schouten: JetMatrix,
    pub schouten_trace: Jet,
    /// `dp[μ, λ, ν] = ∇_μ P_{λν}`.
    pub dp: JetTensor,
    pub cotton: JetTensor,
    pub weyl: JetTensor,
    pub frame: Frame,
    pub spin: Vec<JetMatrix>,
}

impl Geometry {
    /// Computes everything from metric jets of the given order (at least 3).
    pub fn new(metric: &MetricField, point: &Point, order: usize) -> Result<Geometry> {
        need(order, 3)?;
        let (g, ginv) = metric_jets(metric, point, order)?;
        Geometry::from_jets(g, ginv, &metric.eta())
    }

    pub fn from_jets(g: JetMatrix, ginv: JetMatrix, eta: &[f64]) -> Result<Geometry> {
        let order = g.order();
        need(order, 3)?;
        let christoffel = christoffel(&g, &ginv)?;
        let riemann = riemann_tensor(&christoffel)?;
        let ricci = ricci(&riemann);
        let scalar = trace(&ricci, &ginv);
        let schouten = schouten(&ricci, &scalar, &g)?;
        let schouten_trace = trace(&schouten, &ginv);
        let n = g.rows();
        let p = JetTensor::from_fn(&[n, n], |i| schouten.get(i[0], i[1]).clone());
        let dp = covariant_derivative(&p, &[Valence::Down, Valence::Down], &christoffel)?;
        let cotton = cotton(&dp);
        let weyl = weyl(&riemann, &schouten, &g, &ginv);
        let frame = vielbein(&g, eta)?;
        let spin = spin_connection(&frame, &christoffel)?;
        Ok(Geometry {
            order,
            g,
            ginv,
            christoffel,
            riemann,
            ricci,
            scalar,
            schouten,
            schouten_trace,
            dp,
            cotton,
            weyl,
            frame,
            spin,
        })
    }

    pub fn dim(&self) -> usize {
        self.g.rows()
    }

    /// Weyl tensor with all indices down, `W_{ρσμν} = g_{ρα} W^α_{σμν}`.
    pub fn weyl_lowered(&self) -> JetTensor {
        let n = self.dim();
        JetTensor::from_fn(&[n, n, n, n], |i| {
            sum((0..n).map(|a| self.g.get(i[0], a) * self.weyl.get(&[a, i[1], i[2], i[3]])))
        })
    }
}

/// Largest `|∇_λ g_{μν}|`.
pub fn metricity_residual(geo: &Geometry) -> Result<f64> {
    let n = geo.dim();
    let g = JetTensor::from_fn(&[n, n], |i| geo.g.get(i[0], i[1]).clone());
    let dg = covariant_derivative(&g.truncate(geo.christoffel.order()), &[Valence::Down, Valence::Down], &geo.christoffel)?;
    Ok(dg.max_abs())
}

/// Largest `|∇^μ(R_{μν} - ½R g_{μν})|`.
pub fn contracted_bianchi_residual(geo: &Geometry) -> Result<f64> {
    let n = geo.dim();
    let half = geo.scalar.scale(0.5);
    let ein = JetTensor::from_fn(&[n, n], |i| geo.ricci.get(i[0], i[1]) - &(&half * geo.g.get(i[0], i[1])));
    let d = covariant_derivative(&ein, &[Valence::Down, Valence::Down], &geo.christoffel)?;
    Ok((0..n)
        .map(|v| sum((0..n).flat_map(|l| (0..n).map(move |m| (l, m))).map(|(l, m)| geo.ginv.get(l, m) * d.get(&[l, m, v]))).value().abs())
        .fold(0.0, f64::max))
}

/// `P̂ - (P + ∇Υ - ΥΥ + ½Υ²g)` for `ĝ = z²g`, `Υ = d ln z`.
pub fn schouten_law_residual(geo: &Geometry, geo_hat: &Geometry, z: &Jet) -> Result<f64> {
    let n = geo.dim();
    let lnz = z.ln()?;
    let up: Vec<Jet> = (0..n).map(|i| lnz.derivative(i)).collect();
    let hess = hessian(&lnz, &geo.christoffel)?;
    let u2 = sum((0..n).flat_map(|a| (0..n).map(move |b| (a, b))).map(|(a, b)| geo.ginv.get(a, b) * &up[a] * &up[b]));
    let mut worst: f64 = 0.0;
    for m in 0..n {
        for v in 0..n {
            let want = geo.schouten.get(m, v) + hess.get(m, v) - &up[m] * &up[v] + (&u2 * geo.g.get(m, v)).scale(0.5);
            worst = worst.max((geo_hat.schouten.get(m, v).value() - want.value()).abs());
        }
    }
    Ok(worst)
}

/// `Ŵ^ρ_{σμν} - W^ρ_{σμν}`.
pub fn weyl_invariance_residual(geo: &Geometry, geo_hat: &Geometry) -> f64 {
    geo.weyl.max_abs_diff(&geo_hat.weyl)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::dsl::catalog_metric;

    #[test]
    fn flat_metric_has_no_curvature() {
        let m = catalog_metric("flat_minkowski", &BTreeMap::new()).unwrap();
        let geo = Geometry::new(&m, &m.center(), 3).unwrap();
        assert_eq!(geo.christoffel.max_abs(), 0.0);
        assert_eq!(geo.riemann.max_abs(), 0.0);
        assert_eq!(geo.frame.e.max_abs_diff(&JetMatrix::identity(4, 4, 0)), 0.0);
        assert!(geo.spin.iter().all(|a| a.max_abs() == 0.0));
    }

    #[test]
    fn sphere_schouten() {
        let m = catalog_metric("round_sphere", &BTreeMap::new()).unwrap();
        let p = Point::new(vec![0.1, -0.3, 0.2, 0.4]).unwrap();
        let geo = Geometry::new(&m, &p, 3).unwrap();
        assert!((geo.scalar.value() - 12.0).abs() < 1e-9);
        assert!((geo.schouten_trace.value() + 2.0).abs() < 1e-9);
        assert!(geo.weyl.max_abs() < 1e-9);
        assert!(geo.cotton.max_abs() < 1e-9);
    }

    #[test]
    fn laplacian_of_square() {
        let m = catalog_metric("flat_euclidean", &BTreeMap::new()).unwrap();
        let p = Point::new(vec![0.5, 0.1, 0.0, 0.0]).unwrap();
        let (g, ginv) = metric_jets(&m, &p, 3).unwrap();
        let gamma = christoffel(&g, &ginv).unwrap();
        let x = Jet::coordinate(&p, 0, 3).unwrap();
        assert!((laplacian(&(&x * &x), &ginv, &gamma).unwrap().value() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn vielbein_rejects_wrong_pivot_sign() {
        let g = JetMatrix::from_values(&nalgebra::DMatrix::from_diagonal(&nalgebra::dvector![1.0, -1.0, 1.0]), 3, 1);
        let err = vielbein(&g, &[-1.0, 1.0, 1.0]).unwrap_err();
        assert_eq!(
            err,
            Error::SignatureMismatch {
                pivot: 0,
                found: 1,
                expected: -1
            }
        );
    }
}
