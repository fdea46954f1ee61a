//! BRST algebra of the Cartan geometry and of its two dressings.
//!
//! Component convention: ghost factors are written to the left of every
//! `dx`, so `sϖ = -dv - [ϖ, v]` reads `sϖ_μ = ∂_μv + [ϖ_μ, v]` on components,
//! while `sΩ = [Ω, v]`, `sφ = -vφ` and `sv = -v²` keep their form. Each rule
//! is then the linearization of the finite transformation with `γ ≈ 1 + v`.
//! The Lorentz ghost is a constant matrix.

mod grassmann;

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

pub use grassmann::{GMatrix, MAX_GENERATORS};

use crate::cartan::{Connection, Curvature, Section};
use crate::dressing::{boost_dressing, dress_connection, frame_dressing};
use crate::error::{Error, Result};
use crate::jet::{Jet, JetMatrix, Point};
use crate::sample::random_polynomial;

fn sum(mut it: impl Iterator<Item = Jet>) -> Jet {
    let first = it.next().expect("empty sum");
    it.fold(first, |a, b| a + b)
}

/// Commuting coefficient of one ghost generator: Weyl `ε`, Lorentz `s`
/// (constant, in 𝔰𝔬(r,s)) and boost `ι` (a row).
#[derive(Clone, Debug)]
pub struct GhostComponent {
    pub eps: Jet,
    pub lorentz: JetMatrix,
    pub iota: Vec<Jet>,
}

/// Which sectors of a ghost to keep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Sectors {
    pub weyl: bool,
    pub lorentz: bool,
    pub boost: bool,
}

impl Sectors {
    pub const ALL: Sectors = Sectors { weyl: true, lorentz: true, boost: true };
    pub const WEYL: Sectors = Sectors { weyl: true, lorentz: false, boost: false };
    pub const LORENTZ: Sectors = Sectors { weyl: false, lorentz: true, boost: false };
    pub const BOOST: Sectors = Sectors { weyl: false, lorentz: false, boost: true };
    pub const NO_WEYL: Sectors = Sectors { weyl: false, lorentz: true, boost: true };
}

impl GhostComponent {
    /// `v_ε + v_s + v_ι = (ε, ι, 0; 0, s, ι^t; 0, 0, -ε)`.
    pub fn matrix(&self, eta: &[f64], sectors: Sectors) -> JetMatrix {
        let n = eta.len();
        let dim = self.eps.dim();
        let order = self.iota.iter().map(Jet::order).fold(self.eps.order().min(self.lorentz.order()), usize::min);
        let mut m = JetMatrix::zeros(n + 2, n + 2, dim, order);
        if sectors.weyl {
            m.set(0, 0, self.eps.truncate(order));
            m.set(n + 1, n + 1, -self.eps.truncate(order));
        }
        if sectors.lorentz {
            m.set_block(1, 1, &self.lorentz.truncate(order));
        }
        if sectors.boost {
            for a in 0..n {
                m.set(0, a + 1, self.iota[a].truncate(order));
                m.set(a + 1, n + 1, self.iota[a].scale(eta[a]).truncate(order));
            }
        }
        m
    }
}

/// Ghost `v = Σ_k v_k ξ_k` over Grassmann generators `ξ_k`.
#[derive(Clone, Debug)]
pub struct GhostField {
    pub eta: Vec<f64>,
    pub comps: Vec<GhostComponent>,
}

impl GhostField {
    pub fn new(comps: Vec<GhostComponent>, eta: &[f64]) -> Result<GhostField> {
        let n = eta.len();
        if comps.is_empty() || comps.len() > MAX_GENERATORS {
            return Err(Error::Config(format!(
                "ghost needs 1..={MAX_GENERATORS} generators, got {}",
                comps.len()
            )));
        }
        for c in &comps {
            if c.iota.len() != n || c.lorentz.rows() != n || c.lorentz.cols() != n {
                return Err(Error::DimensionMismatch(format!("ghost blocks for n = {n}")));
            }
            let s = c.lorentz.values();
            let es = DMatrix::from_fn(n, n, |i, j| eta[i] * s[(i, j)]);
            let residual = (&es + es.transpose()).amax();
            if residual > 1e-10 {
                return Err(Error::NotInAlgebra { residual });
            }
            let varying = (0..c.lorentz.dim()).any(|i| c.lorentz.derivative(i).max_abs_coeffs() != 0.0);
            if varying {
                return Err(Error::Config("Lorentz ghost must be constant".into()));
            }
        }
        Ok(GhostField { eta: eta.to_vec(), comps })
    }

    pub fn gens(&self) -> usize {
        self.comps.len()
    }

    /// Commuting coefficient matrix of generator `k`.
    pub fn component_matrix(&self, k: usize, sectors: Sectors) -> JetMatrix {
        self.comps[k].matrix(&self.eta, sectors)
    }

    pub fn matrix(&self) -> GMatrix {
        self.sector_matrix(Sectors::ALL)
    }

    pub fn sector_matrix(&self, sectors: Sectors) -> GMatrix {
        let comps: Vec<JetMatrix> = (0..self.gens()).map(|k| self.component_matrix(k, sectors)).collect();
        GMatrix::odd(&comps)
    }

    /// Keep only some sectors.
    pub fn restrict(&self, sectors: Sectors) -> GhostField {
        let comps = self
            .comps
            .iter()
            .map(|c| GhostComponent {
                eps: if sectors.weyl { c.eps.clone() } else { c.eps.scale(0.0) },
                lorentz: if sectors.lorentz { c.lorentz.clone() } else { c.lorentz.scale(0.0) },
                iota: c.iota.iter().map(|x| if sectors.boost { x.clone() } else { x.scale(0.0) }).collect(),
            })
            .collect();
        GhostField { eta: self.eta.clone(), comps }
    }

    /// Largest Σ-antisymmetry residual of the generator coefficients.
    pub fn algebra_residual(&self) -> f64 {
        (0..self.gens())
            .map(|k| crate::cartan::algebra_residual(&self.component_matrix(k, Sectors::ALL).values(), &self.eta))
            .fold(0.0, f64::max)
    }

    pub fn eps(&self) -> Vec<Jet> {
        self.comps.iter().map(|c| c.eps.clone()).collect()
    }
}

/// Single-generator ghost from its three sectors.
pub fn ghost_assemble(eps: Jet, lorentz: &DMatrix<f64>, iota: Vec<Jet>, eta: &[f64]) -> Result<GhostField> {
    let s = JetMatrix::from_values(lorentz, eps.dim(), eps.order());
    GhostField::new(vec![GhostComponent { eps, lorentz: s, iota }], eta)
}

/// Random ghost with polynomial `ε` and `ι` of degree ≤ 2 and constant `s`.
pub fn random_ghost(rng: &mut impl Rng, point: &Point, order: usize, eta: &[f64], gens: usize, sectors: Sectors) -> Result<GhostField> {
    let n = eta.len();
    let dim = point.dim();
    let comps = (0..gens)
        .map(|_| {
            let eps = random_polynomial(rng, point, order, 2);
            let mut k = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in (i + 1)..n {
                    let x: f64 = rng.random_range(-0.5..=0.5);
                    k[(i, j)] = x;
                    k[(j, i)] = -x;
                }
            }
            let s = DMatrix::from_fn(n, n, |i, j| eta[i] * k[(i, j)]);
            let iota: Vec<Jet> = (0..n).map(|_| random_polynomial(rng, point, order, 2)).collect();
            GhostComponent {
                eps,
                lorentz: JetMatrix::from_values(&s, dim, order),
                iota,
            }
        })
        .collect();
    Ok(GhostField::new(comps, eta)?.restrict(sectors))
}

/// `sϖ_μ = ∂_μv + [ϖ_μ, v]`.
pub fn s_connection(w: &Connection, v: &GMatrix) -> Vec<GMatrix> {
    w.comps
        .iter()
        .enumerate()
        .map(|(m, wm)| {
            let we = GMatrix::even(wm, v.gens());
            v.derivative(m).add(&we.commutator(v))
        })
        .collect()
}

/// `sΩ = [Ω, v]`, same indexing as the curvature.
pub fn s_curvature(om: &Curvature, v: &GMatrix) -> Vec<GMatrix> {
    om.comps
        .iter()
        .map(|o| GMatrix::even(o, v.gens()).commutator(v))
        .collect()
}

/// `sφ = -vφ`.
pub fn s_section(phi: &Section, v: &GMatrix) -> GMatrix {
    v.matmul(&GMatrix::even(phi, v.gens())).scale(-1.0)
}

/// `sv = -v²`.
pub fn s_ghost(v: &GMatrix) -> GMatrix {
    v.matmul(v).scale(-1.0)
}

/// Largest residual of `s²` on each field.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Nilpotency {
    pub connection: f64,
    pub curvature: f64,
    pub section: f64,
    pub ghost: f64,
}

impl Nilpotency {
    pub fn max(&self) -> f64 {
        self.connection.max(self.curvature).max(self.section).max(self.ghost)
    }
}

/// `s²` through the graded Leibniz rule `s(AB) = (sA)B + (-1)^{|A|} A(sB)`.
pub fn nilpotency_check(w: &Connection, om: &Curvature, phi: &Section, v: &GMatrix) -> Nilpotency {
    let k = v.gens();
    let sv = s_ghost(v);
    let sw = s_connection(w, v);
    let connection = w
        .comps
        .iter()
        .zip(&sw)
        .enumerate()
        .map(|(m, (wm, swm))| {
            let we = GMatrix::even(wm, k);
            // s(∂v + ϖv - vϖ)
            let x = sv
                .derivative(m)
                .add(&swm.matmul(v))
                .add(&we.matmul(&sv))
                .sub(&sv.matmul(&we))
                .add(&v.matmul(swm));
            x.max_abs()
        })
        .fold(0.0, f64::max);
    let so = s_curvature(om, v);
    let curvature = om
        .comps
        .iter()
        .zip(&so)
        .map(|(o, s)| {
            let oe = GMatrix::even(o, k);
            // s(Ωv - vΩ)
            s.matmul(v)
                .add(&oe.matmul(&sv))
                .sub(&sv.matmul(&oe))
                .add(&v.matmul(s))
                .max_abs()
        })
        .fold(0.0, f64::max);
    let sp = s_section(phi, v);
    let pe = GMatrix::even(phi, k);
    // s(-vφ) = -(sv)φ + v(sφ)
    let section = v.matmul(&sp).sub(&sv.matmul(&pe)).max_abs();
    // s(-v²) = -(sv)v + v(sv)
    let ghost = v.matmul(&sv).sub(&sv.matmul(v)).max_abs();
    Nilpotency {
        connection,
        curvature,
        section,
        ghost,
    }
}

/// Which dressing the composite ghost belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Stage {
    /// `v₁ = u₁⁻¹vu₁ + u₁⁻¹su₁`.
    First,
    /// `v_W = ū⁻¹v₁ū + ū⁻¹sū`.
    Full,
}

/// A composite ghost computed three ways.
#[derive(Clone, Debug)]
pub struct DressedGhost {
    pub stage: Stage,
    /// From the transformation rules of the dressing fields.
    pub rules: GMatrix,
    /// The displayed closed form.
    pub closed_form: GMatrix,
    /// From the variation of the dressing fields along `sϖ`.
    pub oracle: GMatrix,
    /// Full stage only: one step with `u = u₁ū`.
    pub one_step: Option<GMatrix>,
}

impl DressedGhost {
    pub fn residual(&self) -> f64 {
        let mut r = self.rules.max_abs_diff(&self.closed_form);
        if let Some(o) = &self.one_step {
            r = r.max(o.max_abs_diff(&self.closed_form));
        }
        r
    }

    pub fn oracle_residual(&self) -> f64 {
        self.oracle.max_abs_diff(&self.closed_form)
    }
}

/// `(x, r, 0; 0, M, c; 0, 0, y)` pattern used by the closed forms.
fn upper_pattern(x: &Jet, row: &[Jet], mid: &JetMatrix, col: &[Jet], y: &Jet) -> JetMatrix {
    let n = row.len();
    let order = row
        .iter()
        .chain(col)
        .map(Jet::order)
        .fold(x.order().min(y.order()).min(mid.order()), usize::min);
    let mut m = JetMatrix::zeros(n + 2, n + 2, x.dim(), order);
    m.set(0, 0, x.truncate(order));
    m.set(n + 1, n + 1, y.truncate(order));
    m.set_block(1, 1, &mid.truncate(order));
    for a in 0..n {
        m.set(0, a + 1, row[a].truncate(order));
        m.set(a + 1, n + 1, col[a].truncate(order));
    }
    m
}

/// `δϖ_μ = ∂_μV + [ϖ_μ, V]` for a commuting coefficient `V`.
fn connection_variation(w: &Connection, v: &JetMatrix) -> Vec<JetMatrix> {
    w.comps
        .iter()
        .enumerate()
        .map(|(m, wm)| &v.derivative(m) + &wm.commutator(v))
        .collect()
}

/// Variations of `u₁` and `ū` induced by `δϖ`.
fn dressing_variation(w: &Connection, dw: &[JetMatrix]) -> Result<(JetMatrix, JetMatrix)> {
    let n = w.n();
    let e = w.soldering();
    let einv = e.inverse()?;
    let dim = e.dim();
    let de = JetMatrix::from_fn(n, n, dim, |a, m| dw[m].get(a + 1, 0).clone());
    let d_einv = -&einv.matmul(&de).matmul(&einv);
    let q: Vec<Jet> = (0..n)
        .map(|a| sum((0..n).map(|m| w.comps[m].get(0, 0) * einv.get(m, a))))
        .collect();
    let dq: Vec<Jet> = (0..n)
        .map(|a| {
            sum((0..n).map(|m| {
                dw[m].get(0, 0) * einv.get(m, a) + w.comps[m].get(0, 0) * d_einv.get(m, a)
            }))
        })
        .collect();
    let order = dq[0].order();
    let mut du1 = JetMatrix::zeros(n + 2, n + 2, dim, order);
    du1.set(0, n + 1, sum((0..n).map(|a| (&q[a] * &dq[a]).scale(w.eta[a]))).truncate(order));
    for a in 0..n {
        du1.set(0, a + 1, dq[a].clone());
        du1.set(a + 1, n + 1, dq[a].scale(w.eta[a]));
    }
    let mut dub = JetMatrix::zeros(n + 2, n + 2, dim, de.order());
    dub.set_block(1, 1, &de);
    Ok((du1, dub))
}

/// Composite ghost of the given stage, by the transformation rules of the
/// dressing fields, in closed form, and by direct variation.
pub fn dressed_ghost(w: &Connection, ghost: &GhostField, stage: Stage) -> Result<DressedGhost> {
    let n = w.n();
    let eta = &w.eta;
    let b = boost_dressing(w)?;
    let (u1, u1_inv) = (&b.u, &b.u_inv);
    let e = w.soldering();
    let einv = e.inverse()?;
    let ub = frame_dressing(&e)?;
    let g = w.induced_metric();
    let ginv = g.inverse()?;
    let dim = e.dim();
    let mut rules = Vec::new();
    let mut closed = Vec::new();
    let mut oracle = Vec::new();
    let mut one_step = Vec::new();
    for k in 0..ghost.gens() {
        let c = &ghost.comps[k];
        let vk = ghost.component_matrix(k, Sectors::ALL);
        let ve = ghost.component_matrix(k, Sectors::WEYL);
        let vs = ghost.component_matrix(k, Sectors::LORENTZ);
        let vi = ghost.component_matrix(k, Sectors::BOOST);
        let de: Vec<Jet> = (0..n).map(|m| c.eps.derivative(m)).collect();
        let x: Vec<Jet> = (0..n).map(|a| sum((0..n).map(|m| &de[m] * einv.get(m, a)))).collect();
        let xt: Vec<Jet> = (0..n).map(|a| x[a].scale(eta[a])).collect();
        let zero_mid = JetMatrix::zeros(n, n, dim, 0);
        let k1 = upper_pattern(&Jet::zero(dim, 0), &x, &zero_mid, &xt, &Jet::zero(dim, 0));
        let c_eps = &k1 + &ve;
        // s u₁ = -v_ι u₁ + [u₁, v_s] - v_ε u₁ + u₁ c(ε)
        let su1 = &(&(&(-&vi.matmul(u1)) + &u1.commutator(&vs)) - &ve.matmul(u1)) + &u1.matmul(&c_eps);
        let v1 = u1_inv.matmul(&(&vk.matmul(u1) + &su1));
        let dw = connection_variation(w, &vk);
        let (du1, dub) = dressing_variation(w, &dw)?;
        let v1_oracle = u1_inv.matmul(&(&vk.matmul(u1) + &du1));
        match stage {
            Stage::First => {
                rules.push(v1);
                closed.push(upper_pattern(&c.eps, &x, &c.lorentz, &xt, &-&c.eps));
                oracle.push(v1_oracle);
            }
            Stage::Full => {
                let mut vt = JetMatrix::zeros(n + 2, n + 2, dim, c.eps.order());
                vt.set_block(1, 1, &JetMatrix::identity(n, dim, c.eps.order()).scale_jet(&c.eps));
                // s ū = -v_s ū + ṽ_ε ū
                let sub = &(-&vs.matmul(&ub.u)) + &vt.matmul(&ub.u);
                rules.push(ub.u_inv.matmul(&(&v1.matmul(&ub.u) + &sub)));
                let col: Vec<Jet> = (0..n).map(|a| sum((0..n).map(|m| ginv.get(a, m) * &de[m]))).collect();
                let cbar = upper_pattern(
                    &c.eps,
                    &de,
                    &JetMatrix::identity(n, dim, c.eps.order()).scale_jet(&c.eps),
                    &col,
                    &-&c.eps,
                );
                let u = u1.matmul(&ub.u);
                let u_inv = ub.u_inv.matmul(u1_inv);
                // s u = -(v_ε + v_s + v_ι) u + u c̄(ε)
                let su = &(-&vk.matmul(&u)) + &u.matmul(&cbar);
                one_step.push(u_inv.matmul(&(&vk.matmul(&u) + &su)));
                let du = &du1.matmul(&ub.u) + &u1.matmul(&dub);
                oracle.push(u_inv.matmul(&(&vk.matmul(&u) + &du)));
                closed.push(cbar);
            }
        }
    }
    Ok(DressedGhost {
        stage,
        rules: GMatrix::odd(&rules),
        closed_form: GMatrix::odd(&closed),
        oracle: GMatrix::odd(&oracle),
        one_step: (stage == Stage::Full).then(|| GMatrix::odd(&one_step)),
    })
}

/// BRST variation of the dressed connection and section, obtained by varying
/// the undressed fields and the dressing fields together.
#[derive(Clone, Debug)]
pub struct CompositeVariation {
    pub w: Vec<GMatrix>,
    pub phi: GMatrix,
}

pub fn composite_variation(w: &Connection, phi: &Section, ghost: &GhostField, stage: Stage) -> Result<CompositeVariation> {
    let n = w.n();
    let b = boost_dressing(w)?;
    let ub = frame_dressing(&w.soldering())?;
    let (u, u_inv) = match stage {
        Stage::First => (b.u.clone(), b.u_inv.clone()),
        Stage::Full => (b.u.matmul(&ub.u), ub.u_inv.matmul(&b.u_inv)),
    };
    let wu = dress_connection(w, &u, &u_inv)?;
    let phiu = u_inv.matmul(phi);
    let mut dws: Vec<Vec<JetMatrix>> = vec![Vec::new(); n];
    let mut dphis = Vec::new();
    for k in 0..ghost.gens() {
        let vk = ghost.component_matrix(k, Sectors::ALL);
        let dw = connection_variation(w, &vk);
        let (du1, dub) = dressing_variation(w, &dw)?;
        let du = match stage {
            Stage::First => du1,
            Stage::Full => &du1.matmul(&ub.u) + &b.u.matmul(&dub),
        };
        for m in 0..n {
            let inner = &(&dw[m].matmul(&u) + &w.comps[m].matmul(&du)) + &du.derivative(m);
            let x = &u_inv.matmul(&inner) - &u_inv.matmul(&du).matmul(&wu.comps[m]);
            dws[m].push(x);
        }
        let dphi = -&vk.matmul(phi);
        dphis.push(u_inv.matmul(&(&dphi - &du.matmul(&phiu))));
    }
    Ok(CompositeVariation {
        w: dws.iter().map(|c| GMatrix::odd(c)).collect(),
        phi: GMatrix::odd(&dphis),
    })
}

/// The displayed `s_Wϖ_L` blocks on components, read off the blocks of `ϖ_L`:
/// `(0, ∇_μ∂_νε, 0; 0, ∂_με δ^α_ν + δ^α_μ∂_νε - g^{αβ}∂_βε g_{μν},
/// g^{αβ}∇_μ∂_βε - 2εg^{αβ}𝖯_{μβ}; 0, 2εg_{μν}, 0)`.
pub fn sw_connection_table(wl: &Connection, eps: &[Jet]) -> Result<Vec<GMatrix>> {
    let n = wl.n();
    let dim = wl.comps[0].dim();
    let g = JetMatrix::from_fn(n, n, dim, |m, v| wl.comps[m].get(n + 1, v + 1).clone());
    let ginv = g.inverse()?;
    let gamma = |a: usize, m: usize, v: usize| wl.comps[m].get(a + 1, v + 1);
    let p = |m: usize, v: usize| wl.comps[m].get(0, v + 1);
    let order = wl.order().min(eps[0].order().saturating_sub(2));
    Ok((0..n)
        .map(|m| {
            let comps: Vec<JetMatrix> = eps
                .iter()
                .map(|e| {
                    let de: Vec<Jet> = (0..n).map(|i| e.derivative(i)).collect();
                    let hess: Vec<Jet> = (0..n)
                        .map(|v| &de[v].derivative(m) - &sum((0..n).map(|a| gamma(a, m, v) * &de[a])))
                        .collect();
                    let up: Vec<Jet> = (0..n).map(|a| sum((0..n).map(|b| ginv.get(a, b) * &de[b]))).collect();
                    let mut t = JetMatrix::zeros(n + 2, n + 2, dim, order);
                    for v in 0..n {
                        t.set(0, v + 1, hess[v].truncate(order));
                        t.set(n + 1, v + 1, (e * g.get(m, v)).scale(2.0).truncate(order));
                        for a in 0..n {
                            let mut x = &up[a] * g.get(m, v);
                            x = -x;
                            if a == v {
                                x = x + &de[m];
                            }
                            if a == m {
                                x = x + &de[v];
                            }
                            t.set(a + 1, v + 1, x.truncate(order));
                        }
                    }
                    for a in 0..n {
                        let x = sum((0..n).map(|b| {
                            ginv.get(a, b) * &(&hess[b] - &(e * p(m, b)).scale(2.0))
                        }));
                        t.set(a + 1, n + 1, x.truncate(order));
                    }
                    t
                })
                .collect();
            GMatrix::odd(&comps)
        })
        .collect())
}

/// The displayed normal-case `s_WΩ̄_{N,L}`: `-∂ε·𝖶` in the top row and
/// `-2εg⁻¹𝖢 + 𝖶g⁻¹∂ε` in the right column, zero elsewhere.
pub fn sw_curvature_table_normal(oml: &Curvature, eps: &[Jet], ginv: &JetMatrix) -> Vec<GMatrix> {
    let n = oml.n();
    oml.comps
        .iter()
        .map(|o| {
            let comps: Vec<JetMatrix> = eps
                .iter()
                .map(|e| {
                    let de: Vec<Jet> = (0..n).map(|i| e.derivative(i)).collect();
                    let up: Vec<Jet> = (0..n).map(|a| sum((0..n).map(|b| ginv.get(a, b) * &de[b]))).collect();
                    let order = o.order().min(up[0].order());
                    let mut t = JetMatrix::zeros(n + 2, n + 2, e.dim(), order);
                    for v in 0..n {
                        let top = -sum((0..n).map(|a| &de[a] * o.get(a + 1, v + 1)));
                        t.set(0, v + 1, top.truncate(order));
                        let right = &sum((0..n).map(|b| o.get(v + 1, b + 1) * &up[b])) - &(e * o.get(v + 1, n + 1)).scale(2.0);
                        t.set(v + 1, n + 1, right.truncate(order));
                    }
                    t
                })
                .collect();
            GMatrix::odd(&comps)
        })
        .collect()
}

/// The displayed `s_Wφ_L = (-ερ - ∂_νε ℓ^ν; -εℓ^μ - g^{μν}∂_νε σ; εσ)`.
pub fn sw_section_table(phi: &Section, eps: &[Jet], ginv: &JetMatrix) -> GMatrix {
    let n = ginv.rows();
    let rho = phi.get(0, 0);
    let sigma = phi.get(n + 1, 0);
    let comps: Vec<JetMatrix> = eps
        .iter()
        .map(|e| {
            let de: Vec<Jet> = (0..n).map(|i| e.derivative(i)).collect();
            let mut v = vec![-(e * rho) - sum((0..n).map(|a| &de[a] * phi.get(a + 1, 0)))];
            for a in 0..n {
                let up = sum((0..n).map(|b| ginv.get(a, b) * &de[b]));
                v.push(-(e * phi.get(a + 1, 0)) - &up * sigma);
            }
            v.push(e * sigma);
            JetMatrix::column(v)
        })
        .collect();
    GMatrix::odd(&comps)
}

/// The displayed `s_Wv_W`: only `-2εg⁻¹∂ε` in the right column.
pub fn sw_ghost_table(eps: &[Jet], ginv: &JetMatrix) -> GMatrix {
    let n = ginv.rows();
    let e = GMatrix::odd(&eps.iter().map(|x| JetMatrix::column(vec![x.clone()])).collect::<Vec<_>>());
    let col = GMatrix::odd(
        &eps.iter()
            .map(|x| {
                JetMatrix::column((0..n).map(|a| sum((0..n).map(|b| ginv.get(a, b) * &x.derivative(b)))).collect())
            })
            .collect::<Vec<_>>(),
    );
    // v_W² has εc - cε = 2εc there, the other blocks cancel
    let block = e.matmul(&col.block(0, 0, 1, 1)).scale(-2.0);
    let entries: Vec<GMatrix> = (0..n).map(|a| e.matmul(&col.block(a, 0, 1, 1)).scale(-2.0)).collect();
    let mut out = GMatrix::zeros(n + 2, n + 2, eps[0].dim(), block.order(), eps.len());
    for (a, x) in entries.iter().enumerate() {
        out = out.add(&x.embed(n + 2, n + 2, a + 1, n + 1));
    }
    out
}

/// Which field a finite-transformation check acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FieldKind {
    Connection,
    Curvature,
    Section,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub field: FieldKind,
    pub ts: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Least-squares slope of log residual against log t.
    pub slope: f64,
    pub identity_at_zero: bool,
    pub converged: bool,
}

fn log_slope(ts: &[f64], rs: &[f64]) -> f64 {
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

/// `‖(χ^{γ_t} - χ)/t - δχ‖` for `γ_t = exp(tV)`, with `δχ` the BRST rule
/// applied to the commuting coefficient `V`.
pub fn finite_consistency(w: &Connection, phi: &Section, v: &JetMatrix, field: FieldKind, ts: &[f64]) -> Result<ConvergenceReport> {
    let transform = |t: f64| -> Result<Vec<JetMatrix>> {
        let g = v.scale(t).exp();
        let gi = v.scale(-t).exp();
        Ok(match field {
            FieldKind::Connection => w.gauge_transform(&g, &gi)?.comps,
            FieldKind::Curvature => w.curvature()?.conjugate(&g, &gi).comps,
            FieldKind::Section => vec![gi.matmul(phi)],
        })
    };
    let base: Vec<JetMatrix> = match field {
        FieldKind::Connection => w.comps.clone(),
        FieldKind::Curvature => w.curvature()?.comps,
        FieldKind::Section => vec![phi.clone()],
    };
    let delta: Vec<JetMatrix> = match field {
        FieldKind::Connection => connection_variation(w, v),
        FieldKind::Curvature => base.iter().map(|o| o.commutator(v)).collect(),
        FieldKind::Section => vec![-&v.matmul(phi)],
    };
    let at_zero = transform(0.0)?;
    let identity_at_zero = at_zero
        .iter()
        .zip(&base)
        .all(|(a, b)| a.max_abs_diff(b) == 0.0);
    let mut residuals = Vec::with_capacity(ts.len());
    for &t in ts {
        let moved = transform(t)?;
        let r = moved
            .iter()
            .zip(&base)
            .zip(&delta)
            .map(|((m, b), d)| (&(m - b).scale(1.0 / t) - d).max_abs())
            .fold(0.0, f64::max);
        residuals.push(r);
    }
    let exact = residuals.iter().all(|r| *r < 1e-13);
    let slope = if exact { f64::NAN } else { log_slope(ts, &residuals) };
    let decreasing = residuals.windows(2).all(|w| w[1] < w[0]);
    let converged = exact || (decreasing && (slope - 1.0).abs() <= 0.1);
    Ok(ConvergenceReport {
        field,
        ts: ts.to_vec(),
        residuals,
        slope,
        identity_at_zero,
        converged,
    })
}
