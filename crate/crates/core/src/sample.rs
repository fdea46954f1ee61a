//! Random fields used by the check suites and tests.

use nalgebra::DMatrix;
use rand::Rng;

use crate::cartan::HField;
use crate::error::Result;
use crate::jet::{coefficient_count, Jet, JetMatrix, Point};

/// A jet with coefficients uniform in `[-scale, scale]`, i.e. a random
/// polynomial in the displacement from the expansion point.
pub fn random_jet(rng: &mut impl Rng, point: &Point, order: usize, scale: f64) -> Jet {
    let dim = point.dim();
    let coeffs = (0..coefficient_count(dim, order))
        .map(|_| rng.random_range(-scale..=scale))
        .collect();
    Jet::from_coeffs(dim, order, coeffs).expect("valid jet shape")
}

/// `exp(η K)` with K antisymmetric, an element of SO(r,s).
pub fn random_lorentz(rng: &mut impl Rng, eta: &[f64], scale: f64) -> DMatrix<f64> {
    let n = eta.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let x = rng.random_range(-scale..=scale);
            k[(i, j)] = x;
            k[(j, i)] = -x;
        }
    }
    let gen = DMatrix::from_fn(n, n, |i, j| eta[i] * k[(i, j)]);
    gen.exp()
}

/// `γ = K₀(z, S) K₁(r)` with `z = exp(random)`, constant S and random r.
pub fn random_h_field(rng: &mut impl Rng, point: &Point, order: usize, eta: &[f64]) -> Result<HField> {
    let n = eta.len();
    let z = random_jet(rng, point, order, 0.3).exp();
    let s = JetMatrix::from_values(&random_lorentz(rng, eta, 0.5), point.dim(), order);
    let r = (0..n).map(|_| random_jet(rng, point, order, 0.5)).collect();
    HField::new(z, s, r, eta)
}

/// Weyl-only field `K₀(z, 1)` with `z = exp(random)`.
pub fn random_weyl_field(rng: &mut impl Rng, point: &Point, order: usize, eta: &[f64]) -> Result<HField> {
    let n = eta.len();
    let mut g = HField::identity(n, point.dim(), order, eta);
    g.z = random_jet(rng, point, order, 0.3).exp();
    Ok(g)
}

/// Polynomial of degree at most `degree` in the displacement, coefficients
/// uniform in `[-1, 1]`, stored as a jet of the given order.
pub fn random_polynomial(rng: &mut impl Rng, point: &Point, order: usize, degree: usize) -> Jet {
    let dim = point.dim();
    let live = coefficient_count(dim, degree.min(order));
    let coeffs = (0..coefficient_count(dim, order))
        .map(|i| if i < live { rng.random_range(-1.0..=1.0) } else { 0.0 })
        .collect();
    Jet::from_coeffs(dim, order, coeffs).expect("valid jet shape")
}
