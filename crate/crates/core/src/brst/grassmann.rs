//! Matrices with entries in the exterior algebra over a few ghost generators
//! `ξ_0 … ξ_{K-1}`, with jet coefficients.
//!
//! `parts[mask]` is the coefficient of the ordered monomial whose generators
//! are the set bits of `mask`. A ghost field is a degree-one element
//! `v = Σ_k V_k ξ_k`.

use crate::jet::JetMatrix;

/// Maximum number of generators.
pub const MAX_GENERATORS: usize = 4;

/// Sign of `ξ_A ξ_B` reordered into ascending monomial order; zero if the
/// monomials share a generator.
fn monomial_sign(a: usize, b: usize) -> f64 {
    if a & b != 0 {
        return 0.0;
    }
    let mut swaps = 0;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        swaps += (a >> (j + 1)).count_ones();
        rest &= rest - 1;
    }
    if swaps % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Clone, Debug)]
pub struct GMatrix {
    gens: usize,
    parts: Vec<JetMatrix>,
}

impl GMatrix {
    pub fn zeros(rows: usize, cols: usize, dim: usize, order: usize, gens: usize) -> Self {
        assert!(gens <= MAX_GENERATORS, "at most {MAX_GENERATORS} ghost generators");
        GMatrix {
            gens,
            parts: vec![JetMatrix::zeros(rows, cols, dim, order); 1 << gens],
        }
    }

    /// Ghost-number-zero element.
    pub fn even(m: &JetMatrix, gens: usize) -> Self {
        let mut g = GMatrix::zeros(m.rows(), m.cols(), m.dim(), m.order(), gens);
        g.parts[0] = m.clone();
        g
    }

    /// `Σ_k comps[k] ξ_k`.
    pub fn odd(comps: &[JetMatrix]) -> Self {
        let m = &comps[0];
        let order = comps.iter().map(JetMatrix::order).min().unwrap();
        let mut g = GMatrix::zeros(m.rows(), m.cols(), m.dim(), order, comps.len());
        for (k, c) in comps.iter().enumerate() {
            g.parts[1 << k] = c.truncate(order);
        }
        g
    }

    pub fn gens(&self) -> usize {
        self.gens
    }

    pub fn rows(&self) -> usize {
        self.parts[0].rows()
    }

    pub fn cols(&self) -> usize {
        self.parts[0].cols()
    }

    pub fn order(&self) -> usize {
        self.parts.iter().map(JetMatrix::order).min().unwrap()
    }

    pub fn part(&self, mask: usize) -> &JetMatrix {
        &self.parts[mask]
    }

    /// Coefficient of `ξ_k`.
    pub fn component(&self, k: usize) -> &JetMatrix {
        &self.parts[1 << k]
    }

    /// Only the monomials of the given degree.
    pub fn degree(&self, d: u32) -> GMatrix {
        let mut out = self.clone();
        for (mask, p) in out.parts.iter_mut().enumerate() {
            if mask.count_ones() != d {
                *p = p.scale(0.0);
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(&JetMatrix) -> JetMatrix) -> GMatrix {
        GMatrix {
            gens: self.gens,
            parts: self.parts.iter().map(f).collect(),
        }
    }

    pub fn derivative(&self, i: usize) -> GMatrix {
        self.map(|p| p.derivative(i))
    }

    pub fn scale(&self, c: f64) -> GMatrix {
        self.map(|p| p.scale(c))
    }

    pub fn truncate(&self, order: usize) -> GMatrix {
        self.map(|p| p.truncate(order))
    }

    /// Entry `(i, j)` as a 1×1 element.
    pub fn entry(&self, i: usize, j: usize) -> GMatrix {
        self.map(|p| p.block(i, j, 1, 1))
    }

    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> GMatrix {
        self.map(|p| p.block(r0, c0, nr, nc))
    }

    /// Place this matrix at `(r0, c0)` inside a zero `rows × cols` matrix.
    pub fn embed(&self, rows: usize, cols: usize, r0: usize, c0: usize) -> GMatrix {
        self.map(|p| {
            let mut m = JetMatrix::zeros(rows, cols, p.dim(), p.order());
            m.set_block(r0, c0, p);
            m
        })
    }

    fn zip(&self, other: &GMatrix, f: impl Fn(&JetMatrix, &JetMatrix) -> JetMatrix) -> GMatrix {
        assert_eq!(self.gens, other.gens, "ghost generator count mismatch");
        GMatrix {
            gens: self.gens,
            parts: self.parts.iter().zip(&other.parts).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, other: &GMatrix) -> GMatrix {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GMatrix) -> GMatrix {
        self.zip(other, |a, b| a - b)
    }

    /// Product in the matrix algebra over the exterior algebra.
    pub fn matmul(&self, other: &GMatrix) -> GMatrix {
        assert_eq!(self.gens, other.gens, "ghost generator count mismatch");
        let order = self.order().min(other.order());
        let a0 = &self.parts[0];
        let mut out = GMatrix::zeros(self.rows(), other.cols(), a0.dim(), order, self.gens);
        for (ma, pa) in self.parts.iter().enumerate() {
            if pa.max_abs_coeffs() == 0.0 {
                continue;
            }
            for (mb, pb) in other.parts.iter().enumerate() {
                let sign = monomial_sign(ma, mb);
                if sign == 0.0 || pb.max_abs_coeffs() == 0.0 {
                    continue;
                }
                let prod = pa.matmul(pb).scale(sign);
                out.parts[ma | mb] = &out.parts[ma | mb] + &prod;
            }
        }
        out
    }

    /// Plain matrix commutator `AB - BA`.
    pub fn commutator(&self, other: &GMatrix) -> GMatrix {
        self.matmul(other).sub(&other.matmul(self))
    }

    /// Product with an even matrix on the left.
    pub fn left_even(&self, m: &JetMatrix) -> GMatrix {
        self.map(|p| m.matmul(p))
    }

    /// Product with an even matrix on the right.
    pub fn right_even(&self, m: &JetMatrix) -> GMatrix {
        self.map(|p| p.matmul(m))
    }

    /// Largest value over all monomials.
    pub fn max_abs(&self) -> f64 {
        self.parts.iter().map(JetMatrix::max_abs).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &GMatrix) -> f64 {
        self.parts
            .iter()
            .zip(&other.parts)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signs_follow_reordering() {
        assert_eq!(monomial_sign(0b01, 0b10), 1.0);
        assert_eq!(monomial_sign(0b10, 0b01), -1.0);
        assert_eq!(monomial_sign(0b100, 0b011), 1.0);
        assert_eq!(monomial_sign(0b010, 0b101), -1.0);
        assert_eq!(monomial_sign(0b01, 0b01), 0.0);
    }

    #[test]
    fn odd_elements_anticommute() {
        let a = JetMatrix::identity(1, 2, 0);
        let x = GMatrix::odd(&[a.clone(), a.scale(2.0)]);
        let y = GMatrix::odd(&[a.scale(3.0), a.scale(-1.0)]);
        let xy = x.matmul(&y);
        let yx = y.matmul(&x);
        assert_eq!(xy.add(&yx).max_abs(), 0.0);
        // x·x = (1·2 - 2·1) ξ₀ξ₁ = 0
        assert_eq!(x.matmul(&x).max_abs(), 0.0);
        assert_eq!(xy.part(0b11).get(0, 0).value(), -1.0 - 6.0);
    }
}
