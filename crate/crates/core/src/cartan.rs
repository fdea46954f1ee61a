//! Conformal Cartan connections as (n+2)×(n+2) matrix-valued 1-forms.
//!
//! Matrices use the block layout (1, n, 1). A 1-form is stored as one matrix
//! per coordinate direction; a 2-form as the antisymmetric array of
//! components `F_{μν}` with `F = ½ F_{μν} dx^μ∧dx^ν`.

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::error::{Error, Result};
use crate::jet::{Jet, JetMatrix};
use crate::riemann::Geometry;

/// The group metric `Σ = (0,0,-1; 0,η,0; -1,0,0)`.
pub fn sigma(eta: &[f64]) -> DMatrix<f64> {
    let n = eta.len();
    let mut s = DMatrix::zeros(n + 2, n + 2);
    s[(0, n + 1)] = -1.0;
    s[(n + 1, 0)] = -1.0;
    for (i, &e) in eta.iter().enumerate() {
        s[(i + 1, i + 1)] = e;
    }
    s
}

/// `‖MᵀΣ + ΣM‖∞`; zero exactly for elements of 𝔤.
pub fn algebra_residual(m: &DMatrix<f64>, eta: &[f64]) -> f64 {
    let s = sigma(eta);
    (m.transpose() * &s + &s * m).amax()
}

/// An element of 𝔤 = 𝔤₋₁ ⊕ 𝔤₀ ⊕ 𝔤₁.
#[derive(Clone, Debug, PartialEq)]
pub struct GAlgebraElement {
    pub matrix: DMatrix<f64>,
    pub eta: Vec<f64>,
}

/// Graded pieces of a 𝔤 element, each as a full matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Grading {
    pub minus: DMatrix<f64>,
    pub zero: DMatrix<f64>,
    pub plus: DMatrix<f64>,
}

/// Assembles `(ε, ι, 0; τ, v, ι^t; 0, τ^t, -ε)` with `ι^t = (ιη⁻¹)ᵀ`, `τ^t = (ητ)ᵀ`.
pub fn embed_algebra(
    eps: f64,
    v: &DMatrix<f64>,
    tau: &DVector<f64>,
    iota: &RowDVector<f64>,
    eta: &[f64],
) -> Result<GAlgebraElement> {
    let n = eta.len();
    if v.shape() != (n, n) || tau.len() != n || iota.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "algebra blocks for n = {n}: v {:?}, τ {}, ι {}",
            v.shape(),
            tau.len(),
            iota.len()
        )));
    }
    let mut m = DMatrix::zeros(n + 2, n + 2);
    m[(0, 0)] = eps;
    m[(n + 1, n + 1)] = -eps;
    for a in 0..n {
        m[(0, a + 1)] = iota[a];
        m[(a + 1, n + 1)] = iota[a] / eta[a];
        m[(a + 1, 0)] = tau[a];
        m[(n + 1, a + 1)] = eta[a] * tau[a];
        for b in 0..n {
            m[(a + 1, b + 1)] = v[(a, b)];
        }
    }
    GAlgebraElement::new(m, eta)
}

impl GAlgebraElement {
    pub fn new(matrix: DMatrix<f64>, eta: &[f64]) -> Result<GAlgebraElement> {
        let residual = algebra_residual(&matrix, eta);
        let scale = matrix.amax().max(1.0);
        if residual > 1e-10 * scale {
            return Err(Error::NotInAlgebra { residual });
        }
        Ok(GAlgebraElement {
            matrix,
            eta: eta.to_vec(),
        })
    }

    pub fn dim(&self) -> usize {
        self.eta.len()
    }

    pub fn epsilon(&self) -> f64 {
        self.matrix[(0, 0)]
    }

    pub fn v(&self) -> DMatrix<f64> {
        let n = self.dim();
        self.matrix.view((1, 1), (n, n)).into_owned()
    }

    pub fn tau(&self) -> DVector<f64> {
        let n = self.dim();
        self.matrix.view((1, 0), (n, 1)).column(0).into_owned()
    }

    pub fn iota(&self) -> RowDVector<f64> {
        let n = self.dim();
        self.matrix.view((0, 1), (1, n)).row(0).into_owned()
    }

    pub fn grading(&self) -> Grading {
        let n = self.dim();
        let mut minus = DMatrix::zeros(n + 2, n + 2);
        let mut zero = DMatrix::zeros(n + 2, n + 2);
        let mut plus = DMatrix::zeros(n + 2, n + 2);
        for i in 0..n + 2 {
            for j in 0..n + 2 {
                let bi = block_of(i, n);
                let bj = block_of(j, n);
                let target = match bj as i32 - bi as i32 {
                    -1 => &mut minus,
                    0 => &mut zero,
                    1 => &mut plus,
                    _ => continue,
                };
                target[(i, j)] = self.matrix[(i, j)];
            }
        }
        Grading { minus, zero, plus }
    }

    pub fn bracket(&self, other: &GAlgebraElement) -> Result<GAlgebraElement> {
        let c = &self.matrix * &other.matrix - &other.matrix * &self.matrix;
        GAlgebraElement::new(c, &self.eta)
    }
}

fn block_of(i: usize, n: usize) -> usize {
    if i == 0 {
        0
    } else if i <= n {
        1
    } else {
        2
    }
}

/// `S⁻¹ = η⁻¹ Sᵀ η` for `S ∈ O(r,s)`.
pub fn lorentz_inverse(s: &DMatrix<f64>, eta: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(s.nrows(), s.ncols(), |i, j| s[(j, i)] * eta[i] * eta[j])
}

/// Point value of the structure group, `H = K₀K₁`.
#[derive(Clone, Debug, PartialEq)]
pub struct HElement {
    pub z: f64,
    pub s: DMatrix<f64>,
    pub r: RowDVector<f64>,
    pub eta: Vec<f64>,
}

/// `K₀(z, S) = diag(z, S, z⁻¹)`.
pub fn k0_matrix(z: f64, s: &DMatrix<f64>) -> DMatrix<f64> {
    let n = s.nrows();
    let mut m = DMatrix::zeros(n + 2, n + 2);
    m[(0, 0)] = z;
    m[(n + 1, n + 1)] = 1.0 / z;
    m.view_mut((1, 1), (n, n)).copy_from(s);
    m
}

/// `K₁(r) = (1, r, ½rr^t; 0, 1, r^t; 0, 0, 1)`.
pub fn k1_matrix(r: &RowDVector<f64>, eta: &[f64]) -> DMatrix<f64> {
    let n = r.len();
    let mut m = DMatrix::identity(n + 2, n + 2);
    let rrt: f64 = (0..n).map(|a| r[a] * r[a] / eta[a]).sum();
    m[(0, n + 1)] = 0.5 * rrt;
    for a in 0..n {
        m[(0, a + 1)] = r[a];
        m[(a + 1, n + 1)] = r[a] / eta[a];
    }
    m
}

/// Validated constructor for `K₀(z, S) K₁(r)`.
pub fn make_h_element(z: f64, s: DMatrix<f64>, r: RowDVector<f64>, eta: &[f64]) -> Result<HElement> {
    let n = eta.len();
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::InvalidGroupElement(format!("z = {z} is not positive")));
    }
    if s.shape() != (n, n) || r.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "group element blocks for n = {n}"
        )));
    }
    let e = DMatrix::from_diagonal(&DVector::from_column_slice(eta));
    let residual = (s.transpose() * &e * &s - &e).amax();
    if residual > 1e-10 {
        return Err(Error::InvalidGroupElement(format!(
            "S is not (r,s)-orthogonal (residual {residual:e})"
        )));
    }
    Ok(HElement {
        z,
        s,
        r,
        eta: eta.to_vec(),
    })
}

impl HElement {
    pub fn matrix(&self) -> DMatrix<f64> {
        k0_matrix(self.z, &self.s) * k1_matrix(&self.r, &self.eta)
    }

    /// `K₁(-r) K₀(z⁻¹, S⁻¹)`.
    pub fn inverse_matrix(&self) -> DMatrix<f64> {
        k1_matrix(&(-&self.r), &self.eta)
            * k0_matrix(1.0 / self.z, &lorentz_inverse(&self.s, &self.eta))
    }
}

/// `⟨φ, φ'⟩ = φᵀΣφ' = -σρ' + ℓᵀηℓ' - ρσ'`.
pub fn invariant_pairing(phi: &DVector<f64>, psi: &DVector<f64>, eta: &[f64]) -> f64 {
    (phi.transpose() * sigma(eta) * psi)[(0, 0)]
}

/// A structure-group field `γ = K₀(z, S) K₁(r)` given by jets.
#[derive(Clone, Debug)]
pub struct HField {
    pub z: Jet,
    pub s: JetMatrix,
    pub r: Vec<Jet>,
    pub eta: Vec<f64>,
}

impl HField {
    pub fn new(z: Jet, s: JetMatrix, r: Vec<Jet>, eta: &[f64]) -> Result<HField> {
        let n = eta.len();
        if s.rows() != n || s.cols() != n || r.len() != n {
            return Err(Error::DimensionMismatch(format!("group field blocks for n = {n}")));
        }
        make_h_element(
            z.value(),
            s.values(),
            RowDVector::from_iterator(n, r.iter().map(Jet::value)),
            eta,
        )?;
        Ok(HField {
            z,
            s,
            r,
            eta: eta.to_vec(),
        })
    }

    pub fn identity(n: usize, dim: usize, order: usize, eta: &[f64]) -> HField {
        HField {
            z: Jet::constant(dim, order, 1.0),
            s: JetMatrix::identity(n, dim, order),
            r: vec![Jet::zero(dim, order); n],
            eta: eta.to_vec(),
        }
    }

    pub fn order(&self) -> usize {
        self.r
            .iter()
            .map(Jet::order)
            .chain([self.z.order(), self.s.order()])
            .min()
            .unwrap()
    }

    fn dim(&self) -> usize {
        self.z.dim()
    }

    pub fn k0(&self) -> Result<JetMatrix> {
        jet_k0(&self.z, &self.s)
    }

    pub fn k1(&self) -> JetMatrix {
        jet_k1(&self.r, &self.eta)
    }

    pub fn matrix(&self) -> Result<JetMatrix> {
        Ok(self.k0()?.matmul(&self.k1()))
    }

    /// `S⁻¹` as `η Sᵀ η`.
    pub fn s_inverse(&self) -> JetMatrix {
        let eta = &self.eta;
        let st = self.s.transpose();
        JetMatrix::from_fn(st.rows(), st.cols(), self.dim(), |i, j| {
            st.get(i, j).scale(eta[i] * eta[j])
        })
    }

    pub fn k0_inverse(&self) -> Result<JetMatrix> {
        jet_k0(&self.z.recip()?, &self.s_inverse())
    }

    pub fn k1_inverse(&self) -> JetMatrix {
        let neg: Vec<Jet> = self.r.iter().map(|x| -x).collect();
        jet_k1(&neg, &self.eta)
    }

    /// Factored inverse `K₁(-r) K₀(z⁻¹, S⁻¹)`.
    pub fn inverse(&self) -> Result<JetMatrix> {
        Ok(self.k1_inverse().matmul(&self.k0_inverse()?))
    }
}

fn jet_k0(z: &Jet, s: &JetMatrix) -> Result<JetMatrix> {
    let n = s.rows();
    let dim = z.dim();
    let order = z.order().min(s.order());
    let mut m = JetMatrix::zeros(n + 2, n + 2, dim, order);
    m.set(0, 0, z.truncate(order));
    m.set(n + 1, n + 1, z.recip()?.truncate(order));
    m.set_block(1, 1, &s.truncate(order));
    Ok(m)
}

fn jet_k1(r: &[Jet], eta: &[f64]) -> JetMatrix {
    let n = r.len();
    let dim = r[0].dim();
    let order = r.iter().map(Jet::order).min().unwrap();
    let mut m = JetMatrix::identity(n + 2, dim, order);
    let rrt = row_dot_t(r, r, eta);
    m.set(0, n + 1, rrt.scale(0.5));
    for a in 0..n {
        m.set(0, a + 1, r[a].clone());
        m.set(a + 1, n + 1, r[a].scale(eta[a]));
    }
    m
}

/// `x y^t = Σ_a x_a η^{aa} y_a` for row vectors.
fn row_dot_t(x: &[Jet], y: &[Jet], eta: &[f64]) -> Jet {
    x.iter()
        .zip(y)
        .zip(eta)
        .map(|((a, b), e)| (a * b).scale(*e))
        .reduce(|a, b| a + b)
        .unwrap()
}

/// Blocks of one direction of a 𝔤-valued 1-form.
#[derive(Clone, Debug)]
pub struct Blocks {
    pub a: Jet,
    /// Row `P_{μb}`.
    pub p: Vec<Jet>,
    /// Column `θ^a_μ`.
    pub theta: Vec<Jet>,
    /// `A^a_{bμ}`.
    pub spin: JetMatrix,
}

/// `(a, P, 0; θ, A, P^t; 0, θ^t, -a)`.
pub fn assemble(b: &Blocks, eta: &[f64]) -> JetMatrix {
    let n = eta.len();
    let dim = b.a.dim();
    let order = b
        .p
        .iter()
        .chain(&b.theta)
        .map(Jet::order)
        .chain([b.a.order(), b.spin.order()])
        .min()
        .unwrap();
    let mut m = JetMatrix::zeros(n + 2, n + 2, dim, order);
    m.set(0, 0, b.a.truncate(order));
    m.set(n + 1, n + 1, -b.a.truncate(order));
    for i in 0..n {
        m.set(0, i + 1, b.p[i].truncate(order));
        m.set(i + 1, n + 1, b.p[i].scale(eta[i]).truncate(order));
        m.set(i + 1, 0, b.theta[i].truncate(order));
        m.set(n + 1, i + 1, b.theta[i].scale(eta[i]).truncate(order));
    }
    m.set_block(1, 1, &b.spin.truncate(order));
    m
}

/// Reads the blocks back from a matrix.
pub fn blocks_of(m: &JetMatrix) -> Blocks {
    let n = m.rows() - 2;
    Blocks {
        a: m.get(0, 0).clone(),
        p: (0..n).map(|i| m.get(0, i + 1).clone()).collect(),
        theta: (0..n).map(|i| m.get(i + 1, 0).clone()).collect(),
        spin: m.block(1, 1, n, n),
    }
}

/// A 𝔤-valued 1-form at a point, with jets.
#[derive(Clone, Debug)]
pub struct Connection {
    pub eta: Vec<f64>,
    /// `comps[μ]` is the (n+2)×(n+2) matrix `ϖ_μ`.
    pub comps: Vec<JetMatrix>,
}

/// A 𝔤-valued 2-form at a point: `comps[μ * n + ν] = Ω_{μν}`.
#[derive(Clone, Debug)]
pub struct Curvature {
    pub eta: Vec<f64>,
    pub comps: Vec<JetMatrix>,
}

/// Column section `(ρ, ℓ, σ)` of the associated vector bundle.
pub type Section = JetMatrix;

/// Builds a section column from its three blocks.
pub fn section(rho: Jet, ell: Vec<Jet>, sigma: Jet) -> Section {
    let mut v = vec![rho];
    v.extend(ell);
    v.push(sigma);
    JetMatrix::column(v)
}

impl Connection {
    pub fn from_blocks(blocks: &[Blocks], eta: &[f64]) -> Connection {
        Connection {
            eta: eta.to_vec(),
            comps: blocks.iter().map(|b| assemble(b, eta)).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.eta.len()
    }

    pub fn order(&self) -> usize {
        self.comps.iter().map(JetMatrix::order).min().unwrap()
    }

    pub fn blocks(&self, mu: usize) -> Blocks {
        blocks_of(&self.comps[mu])
    }

    /// Soldering matrix `θ^a_μ` (rows a, columns μ).
    pub fn soldering(&self) -> JetMatrix {
        let n = self.n();
        let dim = self.comps[0].dim();
        JetMatrix::from_fn(n, n, dim, |a, mu| self.comps[mu].get(a + 1, 0).clone())
    }

    /// Induced metric `θᵀηθ`.
    pub fn induced_metric(&self) -> JetMatrix {
        let e = self.soldering();
        let n = self.n();
        let eta_e = JetMatrix::from_fn(n, n, e.dim(), |a, m| e.get(a, m).scale(self.eta[a]));
        e.transpose().matmul(&eta_e)
    }

    /// `Ω_{μν} = ∂_μϖ_ν - ∂_νϖ_μ + [ϖ_μ, ϖ_ν]`.
    pub fn curvature(&self) -> Result<Curvature> {
        let order = self.order();
        if order < 1 {
            return Err(Error::MissingJets { needed: 1, have: order });
        }
        let n = self.n();
        let dim = self.comps[0].dim();
        let size = n + 2;
        let mut comps = vec![JetMatrix::zeros(size, size, dim, order - 1); n * n];
        for m in 0..n {
            for v in (m + 1)..n {
                let d = &self.comps[v].derivative(m) - &self.comps[m].derivative(v);
                let f = &d + &self.comps[m].commutator(&self.comps[v]);
                comps[v * n + m] = -&f;
                comps[m * n + v] = f;
            }
        }
        Ok(Curvature {
            eta: self.eta.clone(),
            comps,
        })
    }

    /// `ϖ^γ = γ⁻¹ϖγ + γ⁻¹dγ`.
    pub fn gauge_transform(&self, gamma: &JetMatrix, gamma_inv: &JetMatrix) -> Result<Connection> {
        if gamma.order() < 1 {
            return Err(Error::MissingJets {
                needed: 1,
                have: gamma.order(),
            });
        }
        let comps = self
            .comps
            .iter()
            .enumerate()
            .map(|(m, w)| {
                let conj = gamma_inv.matmul(&w.matmul(gamma));
                &conj + &gamma_inv.matmul(&gamma.derivative(m))
            })
            .collect();
        Ok(Connection {
            eta: self.eta.clone(),
            comps,
        })
    }

    pub fn gauge_transform_h(&self, gamma: &HField) -> Result<Connection> {
        self.gauge_transform(&gamma.matrix()?, &gamma.inverse()?)
    }

    /// `D_μφ = ∂_μφ + ϖ_μφ`, one column per direction.
    pub fn covariant_derivative(&self, phi: &Section) -> Result<Vec<Section>> {
        if phi.order() < 1 {
            return Err(Error::MissingJets {
                needed: 1,
                have: phi.order(),
            });
        }
        Ok(self
            .comps
            .iter()
            .enumerate()
            .map(|(m, w)| &phi.derivative(m) + &w.matmul(phi))
            .collect())
    }

    pub fn max_abs_diff(&self, other: &Connection) -> f64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    /// Largest Σ-antisymmetry residual over directions.
    pub fn algebra_residual(&self) -> f64 {
        self.comps
            .iter()
            .map(|m| algebra_residual(&m.values(), &self.eta))
            .fold(0.0, f64::max)
    }
}

impl Curvature {
    pub fn n(&self) -> usize {
        self.eta.len()
    }

    pub fn get(&self, m: usize, v: usize) -> &JetMatrix {
        &self.comps[m * self.n() + v]
    }

    /// `Ω^γ = γ⁻¹Ωγ`.
    pub fn conjugate(&self, gamma: &JetMatrix, gamma_inv: &JetMatrix) -> Curvature {
        Curvature {
            eta: self.eta.clone(),
            comps: self
                .comps
                .iter()
                .map(|w| gamma_inv.matmul(&w.matmul(gamma)))
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().map(JetMatrix::max_abs).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Curvature) -> f64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    /// Block accessor for `Ω_{μν}`.
    pub fn blocks(&self, m: usize, v: usize) -> Blocks {
        blocks_of(self.get(m, v))
    }

    /// Cyclic sum `∂_λΩ_{μν} + [ϖ_λ, Ω_{μν}]` over `(λ, μ, ν)`; zero by Bianchi.
    pub fn bianchi_residual(&self, w: &Connection) -> Result<f64> {
        let n = self.n();
        let order = self.comps.iter().map(JetMatrix::order).min().unwrap();
        if order < 1 {
            return Err(Error::MissingJets { needed: 2, have: w.order() });
        }
        let mut worst = 0.0f64;
        for l in 0..n {
            for m in (l + 1)..n {
                for v in (m + 1)..n {
                    let term = |l: usize, m: usize, v: usize| {
                        &self.get(m, v).derivative(l) + &w.comps[l].commutator(self.get(m, v))
                    };
                    let s = &(&term(l, m, v) + &term(m, v, l)) + &term(v, l, m);
                    worst = worst.max(s.max_abs());
                }
            }
        }
        Ok(worst)
    }
}

/// The normal conformal Cartan connection in the gauge `a = 0`:
/// θ from the vielbein, A the spin connection, `P_{μb} = P_{μν} e^ν_b`.
pub fn normal_connection(geo: &Geometry) -> Connection {
    let n = geo.dim();
    let e = &geo.frame.e;
    let einv = &geo.frame.inverse;
    let p_frame = geo.schouten.matmul(einv);
    let blocks: Vec<Blocks> = (0..n)
        .map(|m| Blocks {
            a: Jet::zero(n, geo.order),
            p: (0..n).map(|b| p_frame.get(m, b).clone()).collect(),
            theta: (0..n).map(|a| e.get(a, m).clone()).collect(),
            spin: geo.spin[m].clone(),
        })
        .collect();
    Connection::from_blocks(&blocks, &geo.frame.eta)
}

/// Max-norms certifying normality of a Cartan curvature.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct NormalityReport {
    pub torsion_norm: f64,
    pub f_norm: f64,
    pub ricci_type_trace_norm: f64,
}

impl NormalityReport {
    pub fn is_normal(&self, tol: f64) -> bool {
        self.torsion_norm < tol && self.f_norm < tol && self.ricci_type_trace_norm < tol
    }
}

/// Norms of Θ, f and the trace `W^a_{bad}` (2-form indices moved to the θ frame).
pub fn normality_report(w: &Connection, omega: &Curvature) -> Result<NormalityReport> {
    let n = w.n();
    let einv = w.soldering().values().try_inverse().ok_or(Error::Singular("soldering form"))?;
    let mut torsion = 0.0f64;
    let mut f = 0.0f64;
    // wf[a][b][μ][ν]
    let mut wf = vec![0.0; n * n * n * n];
    for m in 0..n {
        for v in 0..n {
            let om = omega.get(m, v).values();
            f = f.max(om[(0, 0)].abs());
            for a in 0..n {
                torsion = torsion.max(om[(a + 1, 0)].abs());
                for b in 0..n {
                    wf[((a * n + b) * n + m) * n + v] = om[(a + 1, b + 1)];
                }
            }
        }
    }
    let mut trace = 0.0f64;
    for b in 0..n {
        for d in 0..n {
            // Σ_a W^a_{b μν} e^μ_a e^ν_d
            let mut t = 0.0;
            for a in 0..n {
                for m in 0..n {
                    for v in 0..n {
                        t += wf[((a * n + b) * n + m) * n + v] * einv[(m, a)] * einv[(v, d)];
                    }
                }
            }
            trace = trace.max(t.abs());
        }
    }
    Ok(NormalityReport {
        torsion_norm: torsion,
        f_norm: f,
        ricci_type_trace_norm: trace,
    })
}

/// Column `η^{aa} x_a` for a row `x`: the η-transpose of a row.
fn t_row(x: &[Jet], eta: &[f64]) -> Vec<Jet> {
    x.iter().zip(eta).map(|(v, e)| v.scale(*e)).collect()
}

/// Row `η_{aa} x^a` for a column `x`: the η-transpose of a column.
fn t_col(x: &[Jet], eta: &[f64]) -> Vec<Jet> {
    t_row(x, eta)
}

fn dot(x: &[Jet], y: &[Jet]) -> Jet {
    x.iter().zip(y).map(|(a, b)| a * b).reduce(|a, b| a + b).unwrap()
}

/// `row * matrix`.
fn row_mat(x: &[Jet], m: &JetMatrix) -> Vec<Jet> {
    (0..m.cols())
        .map(|j| (0..m.rows()).map(|i| &x[i] * m.get(i, j)).reduce(|a, b| a + b).unwrap())
        .collect()
}

/// `matrix * column`.
fn mat_col(m: &JetMatrix, x: &[Jet]) -> Vec<Jet> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m.get(i, j) * &x[j]).reduce(|a, b| a + b).unwrap())
        .collect()
}

fn scale_vec(x: &[Jet], c: &Jet) -> Vec<Jet> {
    x.iter().map(|v| v * c).collect()
}

fn add_vec(x: &[Jet], y: &[Jet]) -> Vec<Jet> {
    x.iter().zip(y).map(|(a, b)| a + b).collect()
}

fn sub_vec(x: &[Jet], y: &[Jet]) -> Vec<Jet> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

fn outer(col: &[Jet], row: &[Jet]) -> JetMatrix {
    let dim = col[0].dim();
    JetMatrix::from_fn(col.len(), row.len(), dim, |i, j| &col[i] * &row[j])
}

fn full_from_entries(
    n: usize,
    dim: usize,
    a: Jet,
    p: Vec<Jet>,
    theta: Vec<Jet>,
    spin: JetMatrix,
    pt: Vec<Jet>,
    thetat: Vec<Jet>,
    corner: Jet,
) -> JetMatrix {
    let order = p
        .iter()
        .chain(&theta)
        .chain(&pt)
        .chain(&thetat)
        .map(Jet::order)
        .chain([a.order(), spin.order(), corner.order()])
        .min()
        .unwrap();
    let mut m = JetMatrix::zeros(n + 2, n + 2, dim, order);
    m.set(0, 0, a.truncate(order));
    m.set(n + 1, n + 1, corner.truncate(order));
    for i in 0..n {
        m.set(0, i + 1, p[i].truncate(order));
        m.set(i + 1, n + 1, pt[i].truncate(order));
        m.set(i + 1, 0, theta[i].truncate(order));
        m.set(n + 1, i + 1, thetat[i].truncate(order));
    }
    m.set_block(1, 1, &spin.truncate(order));
    m
}

/// K₀ transform assembled entry by entry from the block table:
/// `(a + z⁻¹dz, z⁻¹PS, 0; S⁻¹θz, S⁻¹AS + S⁻¹dS, S⁻¹P^t z⁻¹; 0, zθ^tS, -a + z dz⁻¹)`.
pub fn gt0_table(w: &Connection, gamma: &HField) -> Result<Connection> {
    let n = w.n();
    let eta = &w.eta;
    let zi = gamma.z.recip()?;
    let si = gamma.s_inverse();
    let mut comps = Vec::with_capacity(n);
    for m in 0..n {
        let b = w.blocks(m);
        let dim = b.a.dim();
        let dz = gamma.z.derivative(m);
        let dzi = zi.derivative(m);
        let a = &b.a + &(&zi * &dz);
        let p = scale_vec(&row_mat(&b.p, &gamma.s), &zi);
        let theta = scale_vec(&mat_col(&si, &b.theta), &gamma.z);
        let spin = &si.matmul(&b.spin.matmul(&gamma.s)) + &si.matmul(&gamma.s.derivative(m));
        let pt = scale_vec(&mat_col(&si, &t_row(&b.p, eta)), &zi);
        let thetat = scale_vec(&row_mat(&t_col(&b.theta, eta), &gamma.s), &gamma.z);
        let corner = &(-&b.a) + &(&gamma.z * &dzi);
        comps.push(full_from_entries(n, dim, a, p, theta, spin, pt, thetat, corner));
    }
    Ok(Connection {
        eta: eta.clone(),
        comps,
    })
}

/// K₁ transform assembled entry by entry from the block table.
pub fn gt1_table(w: &Connection, r: &[Jet]) -> Connection {
    let n = w.n();
    let eta = &w.eta;
    let rt = t_row(r, eta);
    let rrt = dot(r, &rt);
    let comps = (0..n)
        .map(|m| {
            let b = w.blocks(m);
            let dim = b.a.dim();
            let tht = t_col(&b.theta, eta);
            let pt = t_row(&b.p, eta);
            let dr: Vec<Jet> = r.iter().map(|x| x.derivative(m)).collect();
            let drt = t_row(&dr, eta);
            let r_theta = dot(r, &b.theta);
            let tht_rt = dot(&tht, &rt);

            let a = &b.a - &r_theta;
            // ar - rθr + P - rA + ½rr^tθ^t + dr
            let mut p = scale_vec(r, &b.a);
            p = sub_vec(&p, &scale_vec(r, &r_theta));
            p = add_vec(&p, &b.p);
            p = sub_vec(&p, &row_mat(r, &b.spin));
            p = add_vec(&p, &scale_vec(&tht, &rrt.scale(0.5)));
            p = add_vec(&p, &dr);
            // θr + A - r^tθ^t
            let spin = &(&outer(&b.theta, r) + &b.spin) - &outer(&rt, &tht);
            // θ½rr^t + Ar^t - r^tθ^tr^t + P^t + r^t a + dr^t
            let mut col = scale_vec(&b.theta, &rrt.scale(0.5));
            col = add_vec(&col, &mat_col(&b.spin, &rt));
            col = sub_vec(&col, &scale_vec(&rt, &tht_rt));
            col = add_vec(&col, &pt);
            col = add_vec(&col, &scale_vec(&rt, &b.a));
            col = add_vec(&col, &drt);
            let corner = &tht_rt - &b.a;
            full_from_entries(n, dim, a, p, b.theta.clone(), spin, col, tht, corner)
        })
        .collect();
    Connection {
        eta: eta.clone(),
        comps,
    }
}

/// Section transforms from the table: `γ₀⁻¹φ = (z⁻¹ρ, S⁻¹ℓ, zσ)`.
pub fn gt_vphi0(phi: &Section, gamma: &HField) -> Result<Section> {
    let n = gamma.eta.len();
    let zi = gamma.z.recip()?;
    let ell: Vec<Jet> = (0..n).map(|i| phi.get(i + 1, 0).clone()).collect();
    Ok(section(
        &zi * phi.get(0, 0),
        mat_col(&gamma.s_inverse(), &ell),
        &gamma.z * phi.get(n + 1, 0),
    ))
}

/// `γ₁⁻¹φ = (ρ - rℓ + ½σ rr^t, ℓ - r^tσ, σ)`.
pub fn gt_vphi1(phi: &Section, r: &[Jet], eta: &[f64]) -> Section {
    let n = eta.len();
    let rho = phi.get(0, 0);
    let sig = phi.get(n + 1, 0);
    let ell: Vec<Jet> = (0..n).map(|i| phi.get(i + 1, 0).clone()).collect();
    let rt = t_row(r, eta);
    let rrt = dot(r, &rt);
    section(
        &(rho - &dot(r, &ell)) + &(&rrt * sig).scale(0.5),
        sub_vec(&ell, &scale_vec(&rt, sig)),
        sig.clone(),
    )
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::dsl::catalog_metric;
    use crate::jet::Point;

    #[test]
    fn weyl_generator_and_identity() {
        let eta = [-1.0, 1.0, 1.0, 1.0];
        let m = embed_algebra(
            1.0,
            &DMatrix::zeros(4, 4),
            &DVector::zeros(4),
            &RowDVector::zeros(4),
            &eta,
        )
        .unwrap();
        let want = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0, 0.0, -1.0]));
        assert_eq!(m.matrix, want);
        let h = make_h_element(1.0, DMatrix::identity(4, 4), RowDVector::zeros(4), &eta).unwrap();
        assert_eq!(h.matrix(), DMatrix::identity(6, 6));
        assert!(make_h_element(-1.0, DMatrix::identity(4, 4), RowDVector::zeros(4), &eta).is_err());
    }

    #[test]
    fn pairing_example() {
        let eta = [1.0, 1.0, 1.0];
        let phi = DVector::from_vec(vec![0.0, 0.0, 0.0, 0.0, 1.0]);
        let psi = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(invariant_pairing(&phi, &psi, &eta), -1.0);
    }

    #[test]
    fn sphere_normal_connection_is_flat_and_normal() {
        let m = catalog_metric("round_sphere", &BTreeMap::new()).unwrap();
        let p = Point::new(vec![0.2, 0.1, -0.3, 0.25]).unwrap();
        let geo = Geometry::new(&m, &p, 3).unwrap();
        let w = normal_connection(&geo);
        let om = w.curvature().unwrap();
        assert!(om.max_abs() < 1e-9, "{}", om.max_abs());
        let rep = normality_report(&w, &om).unwrap();
        assert!(rep.is_normal(1e-9));
    }
}
