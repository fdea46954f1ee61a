//! Tractor calculus built from the prolonged Almost Einstein equation, and
//! the dictionary between tractors `(σ, ℓ_ν, ρ)` and the sections
//! `(ρ_L, ℓ_L^μ, σ_L)` of the dressed Cartan side.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cartan::{normal_connection, Section};
use crate::dressing::{boost_dressing, dress_connection, frame_dressing, pairing_g, tractor_metric_g, weyl_cocycle_holonomic};
use crate::dsl::MetricField;
use crate::error::{Error, Result};
use crate::jet::{Jet, JetMatrix, Point};
use crate::riemann::{hessian, metric_jets, trace, Geometry};
use crate::sample::{random_jet, random_polynomial};

fn sum(mut it: impl Iterator<Item = Jet>) -> Jet {
    let first = it.next().expect("empty sum");
    it.fold(first, |a, b| a + b)
}

/// A tractor `(σ, ℓ_ν, ρ)` with jet components.
#[derive(Clone, Debug)]
pub struct TractorTriple {
    pub sigma: Jet,
    pub ell: Vec<Jet>,
    pub rho: Jet,
}

impl TractorTriple {
    pub fn new(sigma: Jet, ell: Vec<Jet>, rho: Jet) -> Self {
        TractorTriple { sigma, ell, rho }
    }

    pub fn from_column(c: &JetMatrix) -> Self {
        let n = c.rows() - 2;
        TractorTriple {
            sigma: c.get(0, 0).clone(),
            ell: (0..n).map(|i| c.get(i + 1, 0).clone()).collect(),
            rho: c.get(n + 1, 0).clone(),
        }
    }

    pub fn column(&self) -> JetMatrix {
        let mut v = vec![self.sigma.clone()];
        v.extend(self.ell.iter().cloned());
        v.push(self.rho.clone());
        JetMatrix::column(v)
    }

    pub fn order(&self) -> usize {
        self.ell.iter().map(Jet::order).fold(self.sigma.order().min(self.rho.order()), usize::min)
    }

    pub fn values(&self) -> Vec<f64> {
        let mut v = vec![self.sigma.value()];
        v.extend(self.ell.iter().map(Jet::value));
        v.push(self.rho.value());
        v
    }

    /// Largest value-level difference per row block `(σ, ℓ, ρ)`.
    pub fn block_diff(&self, other: &TractorTriple) -> [f64; 3] {
        let ell = self
            .ell
            .iter()
            .zip(&other.ell)
            .map(|(a, b)| (a.value() - b.value()).abs())
            .fold(0.0, f64::max);
        [
            (self.sigma.value() - other.sigma.value()).abs(),
            ell,
            (self.rho.value() - other.rho.value()).abs(),
        ]
    }

    pub fn max_abs(&self) -> f64 {
        self.values().into_iter().map(f64::abs).fold(0.0, f64::max)
    }
}

/// Random tractor with polynomial components of degree ≤ 2.
pub fn random_tractor(rng: &mut ChaCha8Rng, point: &Point, order: usize) -> TractorTriple {
    let n = point.dim();
    TractorTriple {
        sigma: random_polynomial(rng, point, order, 2),
        ell: (0..n).map(|_| random_polynomial(rng, point, order, 2)).collect(),
        rho: random_polynomial(rng, point, order, 2),
    }
}

/// `M_μ = (0, -δ^α_μ, 0; -P_{μν}, -Γ^α_{μν}, g_{μν}; 0, g^{αβ}P_{μβ}, 0)`,
/// so that `∇^𝕋_μ t = ∂_μ t + M_μ t`.
#[derive(Clone, Debug)]
pub struct TractorConnection {
    pub comps: Vec<JetMatrix>,
}

pub fn tractor_connection(geo: &Geometry) -> TractorConnection {
    let n = geo.dim();
    let order = geo.schouten.order().min(geo.christoffel.order());
    let p_up = geo.ginv.matmul(&geo.schouten.transpose());
    let comps = (0..n)
        .map(|m| {
            let mut mat = JetMatrix::zeros(n + 2, n + 2, n, order);
            mat.set(0, m + 1, Jet::constant(n, order, -1.0));
            for v in 0..n {
                mat.set(v + 1, 0, -geo.schouten.get(m, v).truncate(order));
                mat.set(v + 1, n + 1, geo.g.get(m, v).truncate(order));
                for a in 0..n {
                    mat.set(v + 1, a + 1, -geo.christoffel.get(&[a, m, v]).truncate(order));
                }
                mat.set(n + 1, v + 1, p_up.get(v, m).truncate(order));
            }
            mat
        })
        .collect();
    TractorConnection { comps }
}

/// Matrix-valued 2-form, `comps[μ·n + λ]`.
#[derive(Clone, Debug)]
pub struct TractorCurvature {
    pub n: usize,
    pub comps: Vec<JetMatrix>,
}

impl TractorCurvature {
    pub fn get(&self, m: usize, l: usize) -> &JetMatrix {
        &self.comps[m * self.n + l]
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().map(JetMatrix::max_abs).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &TractorCurvature) -> f64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    /// Largest entry of the σ row, which vanishes identically.
    pub fn top_row_max(&self) -> f64 {
        self.comps
            .iter()
            .map(|c| (0..c.cols()).map(|j| c.get(0, j).value().abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }

    /// Largest entry of the Weyl (middle) and Cotton (outer) blocks.
    pub fn block_norms(&self) -> (f64, f64) {
        let n = self.n;
        let mut w: f64 = 0.0;
        let mut c: f64 = 0.0;
        for m in &self.comps {
            for v in 0..n {
                c = c.max(m.get(v + 1, 0).value().abs()).max(m.get(n + 1, v + 1).value().abs());
                for a in 0..n {
                    w = w.max(m.get(v + 1, a + 1).value().abs());
                }
            }
        }
        (w, c)
    }
}

impl TractorConnection {
    pub fn n(&self) -> usize {
        self.comps.len()
    }

    pub fn order(&self) -> usize {
        self.comps.iter().map(JetMatrix::order).min().unwrap()
    }

    /// `∇^𝕋_μ t` for each μ.
    pub fn derivative(&self, t: &TractorTriple) -> Result<Vec<TractorTriple>> {
        if t.order() < 1 {
            return Err(Error::MissingJets { needed: 1, have: t.order() });
        }
        let col = t.column();
        Ok(self
            .comps
            .iter()
            .enumerate()
            .map(|(m, mat)| TractorTriple::from_column(&(&col.derivative(m) + &mat.matmul(&col))))
            .collect())
    }

    /// `Ω_{μλ} = ∂_μM_λ - ∂_λM_μ + [M_μ, M_λ]`.
    pub fn curvature(&self) -> Result<TractorCurvature> {
        let order = self.order();
        if order < 1 {
            return Err(Error::MissingJets { needed: 1, have: order });
        }
        let n = self.n();
        let size = n + 2;
        let mut comps = vec![JetMatrix::zeros(size, size, n, order - 1); n * n];
        for m in 0..n {
            for l in (m + 1)..n {
                let d = &self.comps[l].derivative(m) - &self.comps[m].derivative(l);
                let f = &d + &self.comps[m].commutator(&self.comps[l]);
                comps[l * n + m] = -&f;
                comps[m * n + l] = f;
            }
        }
        Ok(TractorCurvature { n, comps })
    }

    /// `max_μ |∂_μG - M_μᵀG - GM_μ|` for the tractor metric `G`.
    pub fn metric_residual(&self, gmat: &JetMatrix) -> f64 {
        self.comps
            .iter()
            .enumerate()
            .map(|(m, w)| {
                let d = &gmat.derivative(m) - &w.transpose().matmul(gmat);
                (&d - &gmat.matmul(w)).max_abs()
            })
            .fold(0.0, f64::max)
    }
}

pub fn tractor_derivative(geo: &Geometry, t: &TractorTriple) -> Result<Vec<TractorTriple>> {
    tractor_connection(geo).derivative(t)
}

/// Curvature assembled from the Cotton and Weyl tensors:
/// `(0, 0, 0; -C_{μλ,ν}, -W^α_{νμλ}, 0; 0, g^{αβ}C_{μλ,β}, 0)`.
pub fn tractor_curvature_assembled(geo: &Geometry) -> TractorCurvature {
    let n = geo.dim();
    let order = geo.cotton.order().min(geo.weyl.order());
    let mut comps = Vec::with_capacity(n * n);
    for m in 0..n {
        for l in 0..n {
            let mut mat = JetMatrix::zeros(n + 2, n + 2, n, order);
            for v in 0..n {
                mat.set(v + 1, 0, -geo.cotton.get(&[m, l, v]).truncate(order));
                for a in 0..n {
                    mat.set(v + 1, a + 1, -geo.weyl.get(&[a, v, m, l]).truncate(order));
                }
                let up = sum((0..n).map(|b| geo.ginv.get(v, b) * geo.cotton.get(&[m, l, b])));
                mat.set(n + 1, v + 1, up.truncate(order));
            }
            comps.push(mat);
        }
    }
    TractorCurvature { n, comps }
}

/// Both curvature forms and their largest discrepancy.
pub fn tractor_curvature(geo: &Geometry) -> Result<(TractorCurvature, TractorCurvature, f64)> {
    let commutator = tractor_connection(geo).curvature()?;
    let assembled = tractor_curvature_assembled(geo);
    let d = commutator.max_abs_diff(&assembled);
    Ok((commutator, assembled, d))
}

/// `X_{μν} - (g^{αβ}X_{αβ}/n) g_{μν}`.
pub fn trace_free(x: &JetMatrix, g: &JetMatrix, ginv: &JetMatrix) -> JetMatrix {
    let n = g.rows();
    let tr = trace(x, ginv).scale(1.0 / n as f64);
    JetMatrix::from_fn(n, n, n, |i, j| x.get(i, j) - &(&tr * g.get(i, j)))
}

/// Prolonged tractor and the AE residual `TF(∇_μ∇_νσ - P_{μν}σ)`.
#[derive(Clone, Debug)]
pub struct Prolongation {
    pub tractor: TractorTriple,
    pub residual: JetMatrix,
}

/// `t = (σ, ∇_νσ, -(Δσ - Pσ)/n)`.
pub fn ae_prolong(geo: &Geometry, sigma: &Jet) -> Result<Prolongation> {
    let n = geo.dim();
    let hess = hessian(sigma, &geo.christoffel)?;
    let x = JetMatrix::from_fn(n, n, n, |i, j| hess.get(i, j) - &(geo.schouten.get(i, j) * sigma));
    let residual = trace_free(&x, &geo.g, &geo.ginv);
    let rho = trace(&x, &geo.ginv).scale(-1.0 / n as f64);
    let ell = (0..n).map(|i| sigma.derivative(i)).collect();
    Ok(Prolongation {
        tractor: TractorTriple::new(sigma.clone(), ell, rho),
        residual,
    })
}

/// The matrix `(z, 0, 0; zΥ_μ, z·1, 0; -½z⁻¹Υ², -z⁻¹g^{νμ}Υ_ν, z⁻¹)` with
/// `Υ_μ = z⁻¹∂_μz`.
pub fn weyl_tractor_matrix(z: &Jet, ginv: &JetMatrix) -> Result<JetMatrix> {
    if !(z.value() > 0.0) {
        return Err(Error::InvalidGroupElement(format!("Weyl factor must be positive, got {}", z.value())));
    }
    if z.order() < 1 {
        return Err(Error::MissingJets { needed: 1, have: 0 });
    }
    let n = ginv.rows();
    let zi = z.recip()?;
    let ups: Vec<Jet> = (0..n).map(|i| &z.derivative(i) * &zi).collect();
    let up: Vec<Jet> = (0..n)
        .map(|i| sum((0..n).map(|j| ginv.get(i, j) * &ups[j])))
        .collect();
    let sq = sum((0..n).map(|i| &ups[i] * &up[i]));
    let order = ups[0].order().min(ginv.order());
    let mut m = JetMatrix::zeros(n + 2, n + 2, z.dim(), order);
    m.set(0, 0, z.truncate(order));
    m.set(n + 1, n + 1, zi.truncate(order));
    m.set(n + 1, 0, (&sq * &zi).scale(-0.5).truncate(order));
    for i in 0..n {
        m.set(i + 1, 0, (z * &ups[i]).truncate(order));
        m.set(i + 1, i + 1, z.truncate(order));
        m.set(n + 1, i + 1, -(&up[i] * &zi).truncate(order));
    }
    Ok(m)
}

pub fn weyl_transform_tractor(t: &TractorTriple, z: &Jet, ginv: &JetMatrix) -> Result<TractorTriple> {
    Ok(TractorTriple::from_column(&weyl_tractor_matrix(z, ginv)?.matmul(&t.column())))
}

/// `G = (0, 0, 1; 0, g^{μν}, 0; 1, 0, 0)`.
pub fn tractor_metric(ginv: &JetMatrix) -> JetMatrix {
    let n = ginv.rows();
    let mut m = JetMatrix::zeros(n + 2, n + 2, ginv.dim(), ginv.order());
    let one = Jet::constant(ginv.dim(), ginv.order(), 1.0);
    m.set(0, n + 1, one.clone());
    m.set(n + 1, 0, one);
    m.set_block(1, 1, ginv);
    m
}

/// `ρσ' + ℓ_μg^{μν}ℓ'_ν + σρ'`.
pub fn tractor_inner(t: &TractorTriple, u: &TractorTriple, ginv: &JetMatrix) -> Jet {
    let n = ginv.rows();
    let mid = sum((0..n).flat_map(|i| (0..n).map(move |j| &(&t.ell[i] * ginv.get(i, j)) * &u.ell[j])));
    &(&(&t.rho * &u.sigma) + &mid) + &(&t.sigma * &u.rho)
}

/// Transform-then-differentiate against differentiate-then-transform for
/// `ĝ = z²g`; returns the largest value-level residual.
pub fn weyl_covariance_residual(geo: &Geometry, geo_hat: &Geometry, z: &Jet, t: &TractorTriple) -> Result<f64> {
    let tm = weyl_tractor_matrix(z, &geo.ginv)?;
    let that = TractorTriple::from_column(&tm.matmul(&t.column()));
    let lhs = tractor_derivative(geo_hat, &that)?;
    let rhs = tractor_derivative(geo, t)?;
    Ok(lhs
        .iter()
        .zip(&rhs)
        .map(|(a, b)| {
            let tb = TractorTriple::from_column(&tm.matmul(&b.column()));
            a.block_diff(&tb).into_iter().fold(0.0, f64::max)
        })
        .fold(0.0, f64::max))
}

/// `ae_prolong(ĝ, zσ)` against the transformed `ae_prolong(g, σ)`.
pub fn prolongation_covariance_residual(geo: &Geometry, geo_hat: &Geometry, z: &Jet, sigma: &Jet) -> Result<f64> {
    let lhs = ae_prolong(geo_hat, &(z * sigma))?.tractor;
    let rhs = weyl_transform_tractor(&ae_prolong(geo, sigma)?.tractor, z, &geo.ginv)?;
    Ok(lhs.block_diff(&rhs).into_iter().fold(0.0, f64::max))
}

/// Geometry of `ĝ = z²g` from the jets of `g`.
pub fn rescaled_geometry(geo: &Geometry, z: &Jet, eta: &[f64]) -> Result<Geometry> {
    let g = geo.g.scale_jet(&(z * z));
    let ginv = g.inverse()?;
    Geometry::from_jets(g, ginv, eta)
}

/// AE residual and parallel residual of the prolongation of σ.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AeWitness {
    pub ae_residual: f64,
    pub parallel_residual: f64,
}

impl AeWitness {
    /// Both residuals below `tol`, or both above it.
    pub fn consistent(&self, tol: f64) -> bool {
        (self.ae_residual < tol) == (self.parallel_residual < tol)
    }
}

pub fn ae_witness(geo: &Geometry, sigma: &Jet) -> Result<AeWitness> {
    let pro = ae_prolong(geo, sigma)?;
    let d = tractor_derivative(geo, &pro.tractor)?;
    Ok(AeWitness {
        ae_residual: pro.residual.max_abs(),
        parallel_residual: d.iter().map(TractorTriple::max_abs).fold(0.0, f64::max),
    })
}

/// Treatment of the middle block `ℓ` under the dictionary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Lowering {
    None,
    /// `ℓ_ν = g_{νμ}ℓ^μ`.
    Lower,
    /// `ℓ^ν = g^{νμ}ℓ_μ`.
    Raise,
}

/// Map from dressed sections `(ρ_L, ℓ_L, σ_L)` to tractors: optional
/// reversal of the outer components, a treatment of the middle block, and
/// one sign per block of the output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ConventionMap {
    pub reverse: bool,
    pub lowering: Lowering,
    pub signs: [i8; 3],
}

fn apply_middle(l: Lowering, ell: &[Jet], g: &JetMatrix, ginv: &JetMatrix) -> Vec<Jet> {
    let n = ell.len();
    let by = |m: &JetMatrix| -> Vec<Jet> {
        (0..n).map(|i| sum((0..n).map(|j| m.get(i, j) * &ell[j]))).collect()
    };
    match l {
        Lowering::None => ell.to_vec(),
        Lowering::Lower => by(g),
        Lowering::Raise => by(ginv),
    }
}

impl ConventionMap {
    /// All 48 members of the search family.
    pub fn candidates() -> Vec<ConventionMap> {
        let mut out = Vec::with_capacity(48);
        for reverse in [true, false] {
            for lowering in [Lowering::Lower, Lowering::None, Lowering::Raise] {
                for k in 0..8u8 {
                    let s = |b: u8| if k & (1 << b) == 0 { 1 } else { -1 };
                    out.push(ConventionMap {
                        reverse,
                        lowering,
                        signs: [s(0), s(1), s(2)],
                    });
                }
            }
        }
        out
    }

    pub fn negated(&self) -> ConventionMap {
        ConventionMap {
            signs: self.signs.map(|s| -s),
            ..*self
        }
    }

    /// Tractor of a dressed section.
    pub fn apply(&self, phi: &Section, g: &JetMatrix, ginv: &JetMatrix) -> TractorTriple {
        let n = g.rows();
        let (first, last) = (phi.get(0, 0), phi.get(n + 1, 0));
        let (a, b) = if self.reverse { (last, first) } else { (first, last) };
        let ell: Vec<Jet> = (0..n).map(|i| phi.get(i + 1, 0).clone()).collect();
        let mid = apply_middle(self.lowering, &ell, g, ginv);
        let s = self.signs.map(f64::from);
        TractorTriple {
            sigma: a.scale(s[0]),
            ell: mid.iter().map(|x| x.scale(s[1])).collect(),
            rho: b.scale(s[2]),
        }
    }

    /// Dressed section of a tractor.
    pub fn invert(&self, t: &TractorTriple, g: &JetMatrix, ginv: &JetMatrix) -> Section {
        let s = self.signs.map(f64::from);
        let (a, b) = (t.sigma.scale(s[0]), t.rho.scale(s[2]));
        let ell: Vec<Jet> = t.ell.iter().map(|x| x.scale(s[1])).collect();
        let back = match self.lowering {
            Lowering::None => Lowering::None,
            Lowering::Lower => Lowering::Raise,
            Lowering::Raise => Lowering::Lower,
        };
        let mid = apply_middle(back, &ell, g, ginv);
        let (first, last) = if self.reverse { (b, a) } else { (a, b) };
        let mut v = vec![first];
        v.extend(mid);
        v.push(last);
        JetMatrix::column(v)
    }
}

impl fmt::Display for ConventionMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = if self.reverse { ("σ_L", "ρ_L") } else { ("ρ_L", "σ_L") };
        let mid = match self.lowering {
            Lowering::None => "ℓ_L",
            Lowering::Lower => "g·ℓ_L",
            Lowering::Raise => "g⁻¹·ℓ_L",
        };
        let sg = |s: i8| if s < 0 { "-" } else { "" };
        write!(
            f,
            "(σ, ℓ, ρ) = ({}{a}, {}{mid}, {}{b})",
            sg(self.signs[0]),
            sg(self.signs[1]),
            sg(self.signs[2])
        )
    }
}

/// One calibration witness: a point, a Weyl factor and a dressed section.
#[derive(Clone, Debug)]
pub struct CalibrationSample {
    pub point: Point,
    pub z: Jet,
    pub phi: Section,
}

#[derive(Clone, Debug, Serialize)]
pub struct Calibration {
    pub map: ConventionMap,
    pub residual: f64,
    pub candidates: usize,
    /// Survivors counted with their negatives.
    pub survivors: usize,
    /// Sign relating the Σ-type pairing to the tractor pairing through the map.
    pub pairing_sign: f64,
}

fn candidate_residual(map: &ConventionMap, metric: &MetricField, s: &CalibrationSample) -> Result<f64> {
    let (g, ginv) = metric_jets(metric, &s.point, s.z.order())?;
    let gh = g.scale_jet(&(&s.z * &s.z));
    let ghinv = gh.inverse()?;
    let cb = weyl_cocycle_holonomic(&s.z, &ginv)?;
    let phi_z = cb.inverse.matmul(&s.phi);
    let lhs = map.apply(&phi_z, &gh, &ghinv);
    let rhs = weyl_transform_tractor(&map.apply(&s.phi, &g, &ginv), &s.z, &ginv)?;
    let d = lhs.block_diff(&rhs).into_iter().fold(0.0, f64::max);
    Ok(d / (1.0 + rhs.max_abs()))
}

/// Exhaustive search over [`ConventionMap::candidates`]; the map is only
/// determined up to a global sign, so a surviving pair `±m` is reported as
/// the member whose σ sign is positive.
pub fn calibrate_with(metric: &MetricField, samples: &[CalibrationSample], tol: f64) -> Result<Calibration> {
    if samples.is_empty() {
        return Err(Error::Calibration("empty sample".into()));
    }
    let cands = ConventionMap::candidates();
    let mut survivors = Vec::new();
    for c in &cands {
        let mut worst: f64 = 0.0;
        for s in samples {
            worst = worst.max(candidate_residual(c, metric, s)?);
            if worst >= tol {
                break;
            }
        }
        if worst < tol {
            survivors.push((*c, worst));
        }
    }
    let reps: Vec<&(ConventionMap, f64)> = survivors.iter().filter(|(c, _)| c.signs[0] > 0).collect();
    let paired = survivors.iter().all(|(c, _)| survivors.iter().any(|(d, _)| *d == c.negated()));
    match (reps.len(), paired) {
        (0, _) => Err(Error::Calibration(format!(
            "no candidate among {} survives (residual tolerance {tol:e})",
            cands.len()
        ))),
        (1, true) => {
            let (map, residual) = *reps[0];
            let pairing_sign = pairing_sign(&map, metric, samples)?;
            Ok(Calibration {
                map,
                residual,
                candidates: cands.len(),
                survivors: survivors.len(),
                pairing_sign,
            })
        }
        _ => Err(Error::Calibration(format!(
            "{} candidates survive; the sample is degenerate, resample with a non-constant Weyl factor",
            survivors.len()
        ))),
    }
}

fn pairing_sign(map: &ConventionMap, metric: &MetricField, samples: &[CalibrationSample]) -> Result<f64> {
    let mut sign = 0.0;
    for w in samples.windows(2) {
        let (g, ginv) = metric_jets(metric, &w[0].point, 0)?;
        let psi = w[1].phi.truncate(0);
        let phi = w[0].phi.truncate(0);
        let a = pairing_g(&phi, &psi, &tractor_metric_g(&g)).value();
        let b = tractor_inner(&map.apply(&phi, &g, &ginv), &map.apply(&psi, &g, &ginv), &ginv).value();
        if a.abs() > 1e-6 {
            let r = b / a;
            if (r.abs() - 1.0).abs() > 1e-8 {
                return Err(Error::Calibration(format!("pairings differ by factor {r}, not a sign")));
            }
            sign = r.signum();
        }
    }
    Ok(sign)
}

/// Calibration on 20 random pairs `(φ_L, z)` with `z = exp(random jet)`,
/// cycling through `points`.
pub fn calibrate_convention_map(metric: &MetricField, points: &[Point], seed: u64) -> Result<Calibration> {
    if points.is_empty() {
        return Err(Error::Calibration("no sample points".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = metric.dim();
    let samples: Vec<CalibrationSample> = (0..20)
        .map(|i| {
            let p = points[i % points.len()].clone();
            let z = random_jet(&mut rng, &p, 2, 0.3).exp();
            let phi = JetMatrix::column((0..n + 2).map(|_| random_jet(&mut rng, &p, 2, 1.0)).collect());
            CalibrationSample { point: p, z, phi }
        })
        .collect();
    calibrate_with(metric, &samples, 1e-8)
}

/// Largest per-block residual of `𝔪(D_{N,L}(𝔪⁻¹t)) - ∇^𝕋t` at one point.
pub fn equivalence_at(metric: &MetricField, point: &Point, map: &ConventionMap, t: &TractorTriple) -> Result<[f64; 3]> {
    // four metric orders: ϖ_N keeps two, each dressing step costs one
    let geo = Geometry::new(metric, point, 4)?;
    let wn = normal_connection(&geo);
    let b = boost_dressing(&wn)?;
    let w1 = dress_connection(&wn, &b.u, &b.u_inv)?;
    let f = frame_dressing(&w1.soldering())?;
    let wl = dress_connection(&w1, &f.u, &f.u_inv)?;
    let phi = map.invert(t, &geo.g, &geo.ginv);
    let dphi = wl.covariant_derivative(&phi)?;
    let rhs = tractor_derivative(&geo, t)?;
    let mut worst = [0.0f64; 3];
    for (d, r) in dphi.iter().zip(&rhs) {
        let l = map.apply(d, &geo.g, &geo.ginv);
        let bd = l.block_diff(r);
        for k in 0..3 {
            worst[k] = worst[k].max(bd[k]);
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceReport {
    pub points: usize,
    pub max_residual: f64,
    /// Residual per block `(σ, ℓ, ρ)`.
    pub block_residuals: [f64; 3],
}

/// Equivalence over a point sample with seeded random polynomial tractors.
pub fn equivalence_check(metric: &MetricField, points: &[Point], map: &ConventionMap, seed: u64) -> Result<EquivalenceReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut blocks = [0.0f64; 3];
    for p in points {
        let t = random_tractor(&mut rng, p, 2);
        let r = equivalence_at(metric, p, map, &t)?;
        for k in 0..3 {
            blocks[k] = blocks[k].max(r[k]);
        }
    }
    Ok(EquivalenceReport {
        points: points.len(),
        max_residual: blocks.into_iter().fold(0.0, f64::max),
        block_residuals: blocks,
    })
}
