//! Boost dressing `u₁`, frame dressing `ū`, the Weyl cocycles `C(z)` and
//! `C̄(z)`, and residual transformations of the composite fields.
//!
//! Every residual transformation is available twice: by conjugating with
//! the cocycle, and by transforming the undressed fields and dressing again.
//! The block tables are separate functions so they can be checked against
//! both.

use crate::cartan::{section, Connection, Curvature, HField, Section};
use crate::error::{Error, Result};
use crate::jet::{Jet, JetMatrix};

fn sum(mut it: impl Iterator<Item = Jet>) -> Jet {
    let first = it.next().expect("empty sum");
    it.fold(first, |a, b| a + b)
}

/// `(1, r, ½ r h rᵀ; 0, 1, h rᵀ; 0, 0, 1)` for a row `r` and symmetric `h`
/// (`h = η` gives the K₁ element, `h = g⁻¹` its holonomic version).
pub fn boost_matrix(r: &[Jet], h: &JetMatrix) -> JetMatrix {
    let n = r.len();
    let dim = r[0].dim();
    let order = r.iter().map(Jet::order).min().unwrap().min(h.order());
    let hr: Vec<Jet> = (0..n)
        .map(|i| sum((0..n).map(|j| h.get(i, j) * &r[j])))
        .collect();
    let rhr = sum((0..n).map(|i| &r[i] * &hr[i]));
    let mut m = JetMatrix::identity(n + 2, dim, order);
    m.set(0, n + 1, rhr.scale(0.5).truncate(order));
    for a in 0..n {
        m.set(0, a + 1, r[a].truncate(order));
        m.set(a + 1, n + 1, hr[a].truncate(order));
    }
    m
}

fn eta_matrix(eta: &[f64], dim: usize, order: usize) -> JetMatrix {
    let n = eta.len();
    JetMatrix::from_fn(n, n, dim, |i, j| {
        Jet::constant(dim, order, if i == j { eta[i] } else { 0.0 })
    })
}

/// `diag(x, M, y)`.
fn block_diag(x: &Jet, m: &JetMatrix, y: &Jet) -> JetMatrix {
    let n = m.rows();
    let order = x.order().min(m.order()).min(y.order());
    let mut out = JetMatrix::zeros(n + 2, n + 2, m.dim(), order);
    out.set(0, 0, x.truncate(order));
    out.set(n + 1, n + 1, y.truncate(order));
    out.set_block(1, 1, &m.truncate(order));
    out
}

/// The K₁-valued dressing field built from `q = a·e⁻¹`.
#[derive(Clone, Debug)]
pub struct BoostDressing {
    pub q: Vec<Jet>,
    pub u: JetMatrix,
    pub u_inv: JetMatrix,
}

/// `q_a = a_μ e^μ_a` with `e` the soldering block; `u₁ = K₁(q)`.
pub fn boost_dressing(w: &Connection) -> Result<BoostDressing> {
    let n = w.n();
    let einv = w.soldering().inverse().map_err(|_| Error::Singular("soldering form"))?;
    let q: Vec<Jet> = (0..n)
        .map(|a| sum((0..n).map(|m| w.comps[m].get(0, 0) * einv.get(m, a))))
        .collect();
    let eta = eta_matrix(&w.eta, q[0].dim(), q[0].order());
    let u = boost_matrix(&q, &eta);
    let neg: Vec<Jet> = q.iter().map(|x| -x).collect();
    let u_inv = boost_matrix(&neg, &eta);
    Ok(BoostDressing { q, u, u_inv })
}

/// `ū = diag(1, e, 1)` for the soldering matrix `e^a_μ`.
#[derive(Clone, Debug)]
pub struct FrameDressing {
    pub u: JetMatrix,
    pub u_inv: JetMatrix,
}

pub fn frame_dressing(e: &JetMatrix) -> Result<FrameDressing> {
    let einv = e.inverse().map_err(|_| Error::Singular("vielbein"))?;
    let one = Jet::constant(e.dim(), e.order(), 1.0);
    Ok(FrameDressing {
        u: block_diag(&one, e, &one),
        u_inv: block_diag(&one, &einv, &one),
    })
}

/// `ϖ^u = u⁻¹ϖu + u⁻¹du`.
pub fn dress_connection(w: &Connection, u: &JetMatrix, u_inv: &JetMatrix) -> Result<Connection> {
    w.gauge_transform(u, u_inv)
}

/// `Ω^u = u⁻¹Ωu`.
pub fn dress_curvature(om: &Curvature, u: &JetMatrix, u_inv: &JetMatrix) -> Curvature {
    om.conjugate(u, u_inv)
}

/// `φ^u = u⁻¹φ`.
pub fn dress_section(phi: &Section, u_inv: &JetMatrix) -> Section {
    u_inv.matmul(phi)
}

/// Connection, curvature and one section transported together.
#[derive(Clone, Debug)]
pub struct Composite {
    pub w: Connection,
    pub omega: Curvature,
    pub phi: Section,
}

impl Composite {
    pub fn new(w: Connection, phi: Section) -> Result<Composite> {
        let omega = w.curvature()?;
        Ok(Composite { w, omega, phi })
    }

    pub fn dress(&self, u: &JetMatrix, u_inv: &JetMatrix) -> Result<Composite> {
        Ok(Composite {
            w: dress_connection(&self.w, u, u_inv)?,
            omega: dress_curvature(&self.omega, u, u_inv),
            phi: dress_section(&self.phi, u_inv),
        })
    }

    /// Largest value difference over all three fields.
    pub fn max_abs_diff(&self, other: &Composite) -> f64 {
        self.w
            .max_abs_diff(&other.w)
            .max(self.omega.max_abs_diff(&other.omega))
            .max(self.phi.max_abs_diff(&other.phi))
    }

    /// `u⁻¹Ωu` against the structure equation of the dressed connection.
    pub fn structure_residual(&self) -> Result<f64> {
        Ok(self.w.curvature()?.max_abs_diff(&self.omega))
    }
}

/// `χ₁ = χ^{u₁}`.
pub fn dress_boost(chi: &Composite) -> Result<(Composite, BoostDressing)> {
    let u1 = boost_dressing(&chi.w)?;
    Ok((chi.dress(&u1.u, &u1.u_inv)?, u1))
}

/// `χ_L = χ₁^{ū}`, with `e` read off the soldering block.
pub fn dress_frame(chi1: &Composite) -> Result<(Composite, FrameDressing)> {
    let ub = frame_dressing(&chi1.w.soldering())?;
    Ok((chi1.dress(&ub.u, &ub.u_inv)?, ub))
}

/// Which Weyl cocycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CocycleKind {
    /// `C(z)` acting on frame-index composites.
    Frame,
    /// `C̄(z)` acting on holonomic composites.
    Holonomic,
}

/// `C(z) = k₁(z) Z` or `C̄(z) = k̄₁(z) Z̄`, with its factors and inverse.
#[derive(Clone, Debug)]
pub struct WeylCocycle {
    pub kind: CocycleKind,
    /// `Υ_μ = z⁻¹∂_μz`.
    pub upsilon: Vec<Jet>,
    /// The row entering `k₁`: `Υ_a = Υ_μ e^μ_a`, or `Υ_μ` itself.
    pub row: Vec<Jet>,
    pub upsilon_sq: Jet,
    pub k1: JetMatrix,
    pub zmat: JetMatrix,
    pub matrix: JetMatrix,
    pub inverse: JetMatrix,
}

fn log_derivative(z: &Jet) -> Result<Vec<Jet>> {
    if z.value() <= 0.0 {
        return Err(Error::InvalidGroupElement(format!(
            "rescaling z = {} is not positive",
            z.value()
        )));
    }
    if z.order() < 1 {
        return Err(Error::MissingJets { needed: 1, have: 0 });
    }
    let zi = z.recip()?;
    Ok((0..z.dim()).map(|m| z.derivative(m) * &zi).collect())
}

/// `C(z)` from `z` and the inverse vielbein `e^μ_a` (rows μ).
pub fn weyl_cocycle_frame(z: &Jet, einv: &JetMatrix, eta: &[f64]) -> Result<WeylCocycle> {
    let n = eta.len();
    let upsilon = log_derivative(z)?;
    let row: Vec<Jet> = (0..n)
        .map(|a| sum((0..n).map(|m| &upsilon[m] * einv.get(m, a))))
        .collect();
    let h = eta_matrix(eta, z.dim(), z.order());
    let one = JetMatrix::identity(n, z.dim(), z.order());
    build_cocycle(CocycleKind::Frame, z, upsilon, row, &h, &one)
}

/// `C̄(z)` from `z` and the inverse metric.
pub fn weyl_cocycle_holonomic(z: &Jet, ginv: &JetMatrix) -> Result<WeylCocycle> {
    let n = ginv.rows();
    let upsilon = log_derivative(z)?;
    let zid = JetMatrix::identity(n, z.dim(), z.order()).scale_jet(z);
    build_cocycle(CocycleKind::Holonomic, z, upsilon.clone(), upsilon, ginv, &zid)
}

fn build_cocycle(
    kind: CocycleKind,
    z: &Jet,
    upsilon: Vec<Jet>,
    row: Vec<Jet>,
    h: &JetMatrix,
    middle: &JetMatrix,
) -> Result<WeylCocycle> {
    let n = row.len();
    let k1 = boost_matrix(&row, h);
    let neg: Vec<Jet> = row.iter().map(|x| -x).collect();
    let k1_inv = boost_matrix(&neg, h);
    let zi = z.recip()?;
    let zmat = block_diag(z, middle, &zi);
    let zmat_inv = block_diag(&zi, &middle.inverse()?, z);
    let upsilon_sq = sum((0..n).flat_map(|i| {
        let row = &row;
        (0..n).map(move |j| &row[i] * &(h.get(i, j) * &row[j]))
    }));
    Ok(WeylCocycle {
        kind,
        matrix: k1.matmul(&zmat),
        inverse: zmat_inv.matmul(&k1_inv),
        upsilon,
        row,
        upsilon_sq,
        k1,
        zmat,
    })
}

impl WeylCocycle {
    /// The displayed closed form, assembled entry by entry.
    pub fn closed_form(&self, z: &Jet, h: &JetMatrix) -> Result<JetMatrix> {
        let n = self.row.len();
        let zi = z.recip()?;
        let mut m = JetMatrix::zeros(n + 2, n + 2, z.dim(), self.matrix.order());
        m.set(0, 0, z.clone());
        m.set(n + 1, n + 1, zi.clone());
        m.set(0, n + 1, (&zi * &self.upsilon_sq).scale(0.5));
        for a in 0..n {
            let (top, diag) = match self.kind {
                CocycleKind::Frame => (self.row[a].clone(), Jet::constant(z.dim(), z.order(), 1.0)),
                CocycleKind::Holonomic => (z * &self.row[a], z.clone()),
            };
            m.set(0, a + 1, top);
            m.set(a + 1, a + 1, diag);
            let hr = sum((0..n).map(|b| h.get(a, b) * &self.row[b]));
            m.set(a + 1, n + 1, &zi * &hr);
        }
        Ok(m.truncate(self.matrix.order()))
    }

    /// `χ^C`: conjugation plus `C⁻¹dC` on the connection.
    pub fn act(&self, chi: &Composite) -> Result<Composite> {
        chi.dress(&self.matrix, &self.inverse)
    }
}

/// `Z = diag(z, 1, z⁻¹)` as a structure-group field.
pub fn weyl_element(z: &Jet, eta: &[f64]) -> HField {
    let mut g = HField::identity(eta.len(), z.dim(), z.order(), eta);
    g.z = z.clone();
    g
}

/// Residual Weyl transform of `χ₁` by re-derivation: transform the undressed
/// fields by `Z`, recompute `u₁`, dress again.
pub fn redress_weyl_1(chi: &Composite, z: &Jet) -> Result<Composite> {
    let zg = weyl_element(z, &chi.w.eta);
    let (zm, zi) = (zg.matrix()?, zg.inverse()?);
    let chi_z = chi.dress(&zm, &zi)?;
    Ok(dress_boost(&chi_z)?.0)
}

/// Same for `χ_L`: transform by `Z`, recompute both dressings.
pub fn redress_weyl_l(chi: &Composite, z: &Jet) -> Result<Composite> {
    let chi1 = redress_weyl_1(chi, z)?;
    Ok(dress_frame(&chi1)?.0)
}

/// Residual Lorentz transform of `χ₁` by re-derivation.
pub fn redress_lorentz_1(chi: &Composite, s: &HField) -> Result<Composite> {
    let chi_s = chi.dress(&s.matrix()?, &s.inverse()?)?;
    Ok(dress_boost(&chi_s)?.0)
}

fn vec_of(m: &JetMatrix, f: impl Fn(usize) -> (usize, usize), n: usize) -> Vec<Jet> {
    (0..n).map(|i| {
        let (r, c) = f(i);
        m.get(r, c).clone()
    }).collect()
}

fn row_times(x: &[Jet], m: &JetMatrix) -> Vec<Jet> {
    (0..m.cols())
        .map(|j| sum((0..m.rows()).map(|i| &x[i] * m.get(i, j))))
        .collect()
}

fn times_col(m: &JetMatrix, x: &[Jet]) -> Vec<Jet> {
    (0..m.rows())
        .map(|i| sum((0..m.cols()).map(|j| m.get(i, j) * &x[j])))
        .collect()
}

fn dot(x: &[Jet], y: &[Jet]) -> Jet {
    sum(x.iter().zip(y).map(|(a, b)| a * b))
}

fn outer(col: &[Jet], row: &[Jet]) -> JetMatrix {
    JetMatrix::from_fn(col.len(), row.len(), col[0].dim(), |i, j| &col[i] * &row[j])
}

fn lin(terms: &[(f64, &[Jet])]) -> Vec<Jet> {
    let n = terms[0].1.len();
    (0..n)
        .map(|i| sum(terms.iter().map(|(c, v)| v[i].scale(*c))))
        .collect()
}

fn scaled(x: &[Jet], c: &Jet) -> Vec<Jet> {
    x.iter().map(|v| v * c).collect()
}

/// Places `(a, top, left, mid, right, bottom, corner)` into a full matrix.
#[allow(clippy::too_many_arguments)]
fn place(
    a: Jet,
    top: Vec<Jet>,
    left: Vec<Jet>,
    mid: JetMatrix,
    right: Vec<Jet>,
    bottom: Vec<Jet>,
    corner: Jet,
) -> JetMatrix {
    let n = top.len();
    let order = top
        .iter()
        .chain(&left)
        .chain(&right)
        .chain(&bottom)
        .map(Jet::order)
        .chain([a.order(), mid.order(), corner.order()])
        .min()
        .unwrap();
    let mut m = JetMatrix::zeros(n + 2, n + 2, a.dim(), order);
    m.set(0, 0, a.truncate(order));
    m.set(n + 1, n + 1, corner.truncate(order));
    for i in 0..n {
        m.set(0, i + 1, top[i].truncate(order));
        m.set(i + 1, 0, left[i].truncate(order));
        m.set(i + 1, n + 1, right[i].truncate(order));
        m.set(n + 1, i + 1, bottom[i].truncate(order));
    }
    m.set_block(1, 1, &mid.truncate(order));
    m
}

/// Residual Weyl tables for `χ₁`.
pub mod table1 {
    use super::*;

    /// `ϖ₁^Z`: `(0, z⁻¹(P₁ + ∇X - XθX + ½Υ²θᵗ), ·; zθ, A₁ + θX - Xᵗθᵗ, ·; 0, zθᵗ, 0)`
    /// with `X = Υ·e⁻¹` and `∇X = dX - XA₁`. Entries shown as `*` in the
    /// display are filled from 𝔤-membership.
    pub fn connection(w1: &Connection, c: &WeylCocycle, z: &Jet) -> Result<Connection> {
        let n = w1.n();
        let eta = &w1.eta;
        let zi = z.recip()?;
        let x = &c.row;
        let xt: Vec<Jet> = x.iter().zip(eta).map(|(v, e)| v.scale(*e)).collect();
        let comps = (0..n)
            .map(|m| {
                let b = w1.blocks(m);
                let tht: Vec<Jet> = b.theta.iter().zip(eta).map(|(v, e)| v.scale(*e)).collect();
                let dx: Vec<Jet> = x.iter().map(|v| v.derivative(m)).collect();
                let nabla_x = lin(&[(1.0, &dx), (-1.0, &row_times(x, &b.spin))]);
                let xthx = scaled(x, &dot(x, &b.theta));
                let half_sq_tht = scaled(&tht, &c.upsilon_sq.scale(0.5));
                let p = scaled(
                    &lin(&[(1.0, &b.p), (1.0, &nabla_x), (-1.0, &xthx), (1.0, &half_sq_tht)]),
                    &zi,
                );
                let spin = &(&b.spin + &outer(&b.theta, x)) - &outer(&xt, &tht);
                let theta = scaled(&b.theta, z);
                let pt: Vec<Jet> = p.iter().zip(eta).map(|(v, e)| v.scale(*e)).collect();
                let bottom = scaled(&tht, z);
                let zero = Jet::zero(z.dim(), z.order());
                place(zero.clone(), p, theta, spin, pt, bottom, zero)
            })
            .collect();
        Ok(Connection {
            eta: eta.clone(),
            comps,
        })
    }

    /// `Ω₁^Z`: `(f - XΘ, z⁻¹(C - X(W - f) - XΘX + ½Υ²Θᵗ), 0; zΘ, W + ΘX - XᵗΘᵗ, ·; 0, zΘᵗ, ·)`.
    pub fn curvature(om1: &Curvature, c: &WeylCocycle, z: &Jet) -> Result<Curvature> {
        let n = om1.n();
        let eta = &om1.eta;
        let zi = z.recip()?;
        let x = &c.row;
        let xt: Vec<Jet> = x.iter().zip(eta).map(|(v, e)| v.scale(*e)).collect();
        let comps = om1
            .comps
            .iter()
            .map(|om| {
                let b = crate::cartan::blocks_of(om);
                let tht: Vec<Jet> = b.theta.iter().zip(eta).map(|(v, e)| v.scale(*e)).collect();
                let xth = dot(x, &b.theta);
                let f = &b.a - &xth;
                let w_minus_f = &b.spin - &JetMatrix::identity(n, z.dim(), b.a.order()).scale_jet(&b.a);
                let cblk = scaled(
                    &lin(&[
                        (1.0, &b.p),
                        (-1.0, &row_times(x, &w_minus_f)),
                        (-1.0, &scaled(x, &xth)),
                        (1.0, &scaled(&tht, &c.upsilon_sq.scale(0.5))),
                    ]),
                    &zi,
                );
                let spin = &(&b.spin + &outer(&b.theta, x)) - &outer(&xt, &tht);
                let ct: Vec<Jet> = cblk.iter().zip(eta).map(|(v, e)| v.scale(*e)).collect();
                place(f.clone(), cblk, scaled(&b.theta, z), spin, ct, scaled(&tht, z), -&f)
            })
            .collect();
        Ok(Curvature {
            eta: eta.clone(),
            comps,
        })
    }

    /// `φ₁^Z = (z⁻¹(ρ - Xℓ + ½σΥ²), ℓ - Xᵗσ, zσ)`.
    pub fn section_z(phi: &Section, c: &WeylCocycle, z: &Jet, eta: &[f64]) -> Result<Section> {
        let n = eta.len();
        let zi = z.recip()?;
        let rho = phi.get(0, 0);
        let sig = phi.get(n + 1, 0);
        let ell = vec_of(phi, |i| (i + 1, 0), n);
        let x = &c.row;
        let top = &zi * &(&(rho - &dot(x, &ell)) + &(sig * &c.upsilon_sq).scale(0.5));
        let mid = (0..n).map(|a| &ell[a] - &(&x[a] * sig).scale(eta[a])).collect();
        Ok(section(top, mid, z * sig))
    }
}

/// Residual Weyl tables for `χ_L`.
pub mod table_l {
    use super::*;

    fn lower(g: &JetMatrix, x: &[Jet]) -> Vec<Jet> {
        row_times(x, g)
    }

    /// `ϖ_L^Z`: `(0, 𝖯 + ∇Υ - Υ·dxΥ + ½Υ²g·dx, 0;
    ///  dx, Γ + z⁻¹dz δ + Υdx - g⁻¹Υ g·dx, z⁻²g⁻¹·(*); 0, z²g·dx, 0)`.
    pub fn connection(wl: &Connection, c: &WeylCocycle, z: &Jet, g: &JetMatrix, ginv: &JetMatrix) -> Result<Connection> {
        let n = wl.n();
        let zi = z.recip()?;
        let zi2 = &zi * &zi;
        let z2 = z * z;
        let u = &c.upsilon;
        let g_inv_u = times_col(ginv, u);
        let comps = (0..n)
            .map(|m| {
                let b = wl.blocks(m);
                // soldering column dx is δ^ρ_μ; g·dx is the row g_{μν}
                let gdx = vec_of(g, |v| (m, v), n);
                let du: Vec<Jet> = u.iter().map(|x| x.derivative(m)).collect();
                // ∇_μ Υ_ν = ∂_μΥ_ν - Υ_ρ Γ^ρ_{μν}
                let nabla_u = lin(&[(1.0, &du), (-1.0, &row_times(u, &b.spin))]);
                let p = lin(&[
                    (1.0, &b.p),
                    (1.0, &nabla_u),
                    (-1.0, &scaled(u, &u[m])),
                    (1.0, &scaled(&gdx, &c.upsilon_sq.scale(0.5))),
                ]);
                let mut spin = &b.spin - &outer(&g_inv_u, &gdx);
                for r in 0..n {
                    spin.set(r, r, spin.get(r, r) + &u[m]);
                    spin.set(m, r, spin.get(m, r) + &u[r]);
                }
                let right = scaled(&times_col(ginv, &p), &zi2);
                let zero = Jet::zero(z.dim(), z.order());
                place(zero.clone(), p, b.theta.clone(), spin, right, scaled(&gdx, &z2), zero)
            })
            .collect();
        Ok(Connection {
            eta: wl.eta.clone(),
            comps,
        })
    }

    /// `Ω_L^Z`: `(f - Υ·𝖳, 𝖢 - Υ·𝖶 + (f - Υ·𝖳)Υ + ½Υ²g·𝖳, 0;
    ///  𝖳, 𝖶 + 𝖳Υ - g⁻¹Υ g·𝖳, z⁻²g⁻¹·(*); 0, z²g·𝖳, *)`.
    pub fn curvature(oml: &Curvature, c: &WeylCocycle, z: &Jet, g: &JetMatrix, ginv: &JetMatrix) -> Result<Curvature> {
        let zi = z.recip()?;
        let zi2 = &zi * &zi;
        let z2 = z * z;
        let u = &c.upsilon;
        let g_inv_u = times_col(ginv, u);
        let comps = oml
            .comps
            .iter()
            .map(|om| {
                let b = crate::cartan::blocks_of(om);
                let gt = lower(g, &b.theta);
                let f = &b.a - &dot(u, &b.theta);
                let cblk = lin(&[
                    (1.0, &b.p),
                    (-1.0, &row_times(u, &b.spin)),
                    (1.0, &scaled(u, &f)),
                    (1.0, &scaled(&gt, &c.upsilon_sq.scale(0.5))),
                ]);
                let spin = &(&b.spin + &outer(&b.theta, u)) - &outer(&g_inv_u, &gt);
                let right = scaled(&times_col(ginv, &cblk), &zi2);
                place(f.clone(), cblk, b.theta.clone(), spin, right, scaled(&gt, &z2), -&f)
            })
            .collect();
        Ok(Curvature {
            eta: oml.eta.clone(),
            comps,
        })
    }

    /// `φ_L^Z = (z⁻¹(ρ - Υ·ℓ + ½σΥ²), z⁻¹(ℓ - g⁻¹Υσ), zσ)`.
    pub fn section_z(phi: &Section, c: &WeylCocycle, z: &Jet, ginv: &JetMatrix) -> Result<Section> {
        let n = ginv.rows();
        let zi = z.recip()?;
        let rho = phi.get(0, 0);
        let sig = phi.get(n + 1, 0);
        let ell = vec_of(phi, |i| (i + 1, 0), n);
        let u = &c.upsilon;
        let top = &zi * &(&(rho - &dot(u, &ell)) + &(sig * &c.upsilon_sq).scale(0.5));
        let gu = times_col(ginv, u);
        let mid = (0..n).map(|a| &zi * &(&ell[a] - &(&gu[a] * sig))).collect();
        Ok(section(top, mid, z * sig))
    }
}

/// Residual Lorentz tables for `χ₁` with constant `S`:
/// `ϖ₁^S = (0, P₁S, 0; S⁻¹θ, S⁻¹A₁S + S⁻¹dS, S⁻¹Pᵗ; 0, θᵗS, 0)`, and likewise
/// for `Ω₁` and `φ₁^S = (ρ, S⁻¹ℓ, σ)`.
pub mod table_s {
    use super::*;

    fn conj_blocks(m: &JetMatrix, s: &JetMatrix, si: &JetMatrix, eta: &[f64], ds: Option<&JetMatrix>) -> JetMatrix {
        let b = crate::cartan::blocks_of(m);
        let n = eta.len();
        let p = row_times(&b.p, s);
        let theta = times_col(si, &b.theta);
        let mut spin = si.matmul(&b.spin.matmul(s));
        if let Some(ds) = ds {
            spin = &spin + &si.matmul(ds);
        }
        let pt_in: Vec<Jet> = b.p.iter().zip(eta).map(|(v, e)| v.scale(*e)).collect();
        let right = times_col(si, &pt_in);
        let tht: Vec<Jet> = b.theta.iter().zip(eta).map(|(v, e)| v.scale(*e)).collect();
        let bottom = row_times(&tht, s);
        let corner = m.get(n + 1, n + 1).clone();
        place(b.a, p, theta, spin, right, bottom, corner)
    }

    pub fn connection(w1: &Connection, s: &HField) -> Connection {
        let si = s.s_inverse();
        Connection {
            eta: w1.eta.clone(),
            comps: w1
                .comps
                .iter()
                .enumerate()
                .map(|(m, w)| conj_blocks(w, &s.s, &si, &w1.eta, Some(&s.s.derivative(m))))
                .collect(),
        }
    }

    pub fn curvature(om1: &Curvature, s: &HField) -> Curvature {
        let si = s.s_inverse();
        Curvature {
            eta: om1.eta.clone(),
            comps: om1
                .comps
                .iter()
                .map(|w| conj_blocks(w, &s.s, &si, &om1.eta, None))
                .collect(),
        }
    }

    pub fn section_s(phi: &Section, s: &HField) -> Section {
        let n = s.eta.len();
        let ell = vec_of(phi, |i| (i + 1, 0), n);
        section(
            phi.get(0, 0).clone(),
            times_col(&s.s_inverse(), &ell),
            phi.get(n + 1, 0).clone(),
        )
    }
}

/// Tractor metric `G = ūᵀΣū = (0,0,-1; 0,g,0; -1,0,0)`.
pub fn tractor_metric_g(g: &JetMatrix) -> JetMatrix {
    let n = g.rows();
    let mut m = JetMatrix::zeros(n + 2, n + 2, g.dim(), g.order());
    let minus = Jet::constant(g.dim(), g.order(), -1.0);
    m.set(0, n + 1, minus.clone());
    m.set(n + 1, 0, minus);
    m.set_block(1, 1, g);
    m
}

/// `⟨φ, ψ⟩_G = φᵀGψ`.
pub fn pairing_g(phi: &Section, psi: &Section, gmat: &JetMatrix) -> Jet {
    phi.transpose().matmul(&gmat.matmul(psi)).get(0, 0).clone()
}

/// `max_μ |∂_μG - ϖ_μᵀG - Gϖ_μ|`.
pub fn metric_compatibility(wl: &Connection, gmat: &JetMatrix) -> f64 {
    wl.comps
        .iter()
        .enumerate()
        .map(|(m, w)| {
            let d = &gmat.derivative(m) - &w.transpose().matmul(gmat);
            (&d - &gmat.matmul(w)).max_abs()
        })
        .fold(0.0, f64::max)
}
