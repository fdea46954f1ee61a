use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;

use super::Jet;
use crate::error::{Error, Result};

/// Dense matrix whose entries are jets at a common point.
#[derive(Clone, Debug, PartialEq)]
pub struct JetMatrix {
    rows: usize,
    cols: usize,
    dim: usize,
    data: Vec<Jet>,
}

impl JetMatrix {
    pub fn zeros(rows: usize, cols: usize, dim: usize, order: usize) -> Self {
        JetMatrix {
            rows,
            cols,
            dim,
            data: vec![Jet::zero(dim, order); rows * cols],
        }
    }

    pub fn identity(size: usize, dim: usize, order: usize) -> Self {
        let mut m = JetMatrix::zeros(size, size, dim, order);
        for i in 0..size {
            m.data[i * size + i] = Jet::constant(dim, order, 1.0);
        }
        m
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        dim: usize,
        mut f: impl FnMut(usize, usize) -> Jet,
    ) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let jet = f(i, j);
                debug_assert_eq!(jet.dim(), dim);
                data.push(jet);
            }
        }
        JetMatrix {
            rows,
            cols,
            dim,
            data,
        }
    }

    /// Constant-valued jets from a numeric matrix.
    pub fn from_values(m: &DMatrix<f64>, dim: usize, order: usize) -> Self {
        JetMatrix::from_fn(m.nrows(), m.ncols(), dim, |i, j| {
            Jet::constant(dim, order, m[(i, j)])
        })
    }

    pub fn column(entries: Vec<Jet>) -> Self {
        let dim = entries[0].dim();
        JetMatrix {
            rows: entries.len(),
            cols: 1,
            dim,
            data: entries,
        }
    }

    pub fn row(entries: Vec<Jet>) -> Self {
        let dim = entries[0].dim();
        JetMatrix {
            rows: 1,
            cols: entries.len(),
            dim,
            data: entries,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Lowest order among the entries.
    pub fn order(&self) -> usize {
        self.data.iter().map(Jet::order).min().unwrap_or(0)
    }

    pub fn get(&self, i: usize, j: usize) -> &Jet {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Jet) {
        self.data[i * self.cols + j] = v;
    }

    pub fn entries(&self) -> &[Jet] {
        &self.data
    }

    pub fn map(&self, f: impl Fn(&Jet) -> Jet) -> Self {
        JetMatrix {
            rows: self.rows,
            cols: self.cols,
            dim: self.dim,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn values(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).value())
    }

    pub fn transpose(&self) -> Self {
        JetMatrix::from_fn(self.cols, self.rows, self.dim, |i, j| self.get(j, i).clone())
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|x| x.scale(c))
    }

    pub fn scale_jet(&self, c: &Jet) -> Self {
        self.map(|x| x * c)
    }

    pub fn derivative(&self, i: usize) -> Self {
        self.map(|x| x.derivative(i))
    }

    pub fn truncate(&self, order: usize) -> Self {
        self.map(|x| x.truncate(order))
    }

    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        JetMatrix::from_fn(nr, nc, self.dim, |i, j| self.get(r0 + i, c0 + j).clone())
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &JetMatrix) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self.set(r0 + i, c0 + j, b.get(i, j).clone());
            }
        }
    }

    pub fn matmul(&self, other: &JetMatrix) -> Self {
        assert_eq!(self.cols, other.rows, "matrix shape mismatch");
        JetMatrix::from_fn(self.rows, other.cols, self.dim, |i, j| {
            let mut acc = self.get(i, 0) * other.get(0, j);
            for k in 1..self.cols {
                acc = acc + self.get(i, k) * other.get(k, j);
            }
            acc
        })
    }

    /// `self * other - other * self`.
    pub fn commutator(&self, other: &JetMatrix) -> Self {
        &self.matmul(other) - &other.matmul(self)
    }

    pub fn trace(&self) -> Jet {
        let mut acc = self.get(0, 0).clone();
        for i in 1..self.rows.min(self.cols) {
            acc = acc + self.get(i, i);
        }
        acc
    }

    /// Gauss-Jordan inversion with partial pivoting on the values.
    pub fn inverse(&self) -> Result<Self> {
        assert_eq!(self.rows, self.cols, "inverse of a non-square matrix");
        let n = self.rows;
        let order = self.order();
        let mut a = self.truncate(order);
        let mut inv = JetMatrix::identity(n, self.dim, order);
        let scale = self
            .data
            .iter()
            .map(|x| x.value().abs())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| {
                    a.get(x, col)
                        .value()
                        .abs()
                        .total_cmp(&a.get(y, col).value().abs())
                })
                .unwrap();
            if a.get(pivot, col).value().abs() <= 1e-14 * scale {
                return Err(Error::Singular("jet matrix"));
            }
            if pivot != col {
                for j in 0..n {
                    a.data.swap(col * n + j, pivot * n + j);
                    inv.data.swap(col * n + j, pivot * n + j);
                }
            }
            let r = a.get(col, col).recip()?;
            for j in 0..n {
                let v = a.get(col, j) * &r;
                a.set(col, j, v);
                let w = inv.get(col, j) * &r;
                inv.set(col, j, w);
            }
            for i in 0..n {
                if i == col {
                    continue;
                }
                let f = a.get(i, col).clone();
                if f.coeffs().iter().all(|&x| x == 0.0) {
                    continue;
                }
                for j in 0..n {
                    let v = a.get(i, j) - &(&f * a.get(col, j));
                    a.set(i, j, v);
                    let w = inv.get(i, j) - &(&f * inv.get(col, j));
                    inv.set(i, j, w);
                }
            }
        }
        Ok(inv)
    }

    /// Largest entrywise difference of values.
    pub fn max_abs_diff(&self, other: &JetMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.value() - b.value()).abs())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise difference over all shared jet coefficients.
    pub fn max_abs_diff_jets(&self, other: &JetMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    /// Matrix exponential: Taylor series after scaling by a power of two,
    /// then repeated squaring.
    pub fn exp(&self) -> JetMatrix {
        assert_eq!(self.rows, self.cols, "exp of a non-square matrix");
        let norm = self.max_abs_coeffs() * self.rows as f64;
        let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
        let a = self.scale(0.5f64.powi(squarings));
        let mut term = JetMatrix::identity(self.rows, self.dim, self.order());
        let mut acc = term.clone();
        for k in 1..40 {
            term = term.matmul(&a).scale(1.0 / k as f64);
            acc = &acc + &term;
            if term.max_abs_coeffs() < 1e-18 {
                break;
            }
        }
        for _ in 0..squarings {
            acc = acc.matmul(&acc);
        }
        acc
    }

    /// Largest absolute coefficient over all entries and jet orders.
    pub fn max_abs_coeffs(&self) -> f64 {
        self.data
            .iter()
            .flat_map(|j| j.coeffs().iter())
            .fold(0.0, |m: f64, x| m.max(x.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.data
            .iter()
            .map(|a| a.value().abs())
            .fold(0.0, f64::max)
    }
}

impl Add<&JetMatrix> for &JetMatrix {
    type Output = JetMatrix;
    fn add(self, rhs: &JetMatrix) -> JetMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        JetMatrix {
            rows: self.rows,
            cols: self.cols,
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub<&JetMatrix> for &JetMatrix {
    type Output = JetMatrix;
    fn sub(self, rhs: &JetMatrix) -> JetMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        JetMatrix {
            rows: self.rows,
            cols: self.cols,
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul<&JetMatrix> for &JetMatrix {
    type Output = JetMatrix;
    fn mul(self, rhs: &JetMatrix) -> JetMatrix {
        self.matmul(rhs)
    }
}

impl Neg for &JetMatrix {
    type Output = JetMatrix;
    fn neg(self) -> JetMatrix {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Point;

    #[test]
    fn inverse_of_jet_matrix() {
        let p = Point::new(vec![0.3, -0.2]).unwrap();
        let x = Jet::coordinate(&p, 0, 3).unwrap();
        let y = Jet::coordinate(&p, 1, 3).unwrap();
        let m = JetMatrix::from_fn(2, 2, 2, |i, j| match (i, j) {
            (0, 0) => x.exp(),
            (0, 1) => &x * &y,
            (1, 0) => y.sin(),
            _ => y.add_scalar(2.0),
        });
        let inv = m.inverse().unwrap();
        let id = m.matmul(&inv);
        let expect = JetMatrix::identity(2, 2, 3);
        assert!(id.max_abs_diff_jets(&expect) < 1e-13);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let m = JetMatrix::zeros(3, 3, 2, 1);
        assert_eq!(m.inverse(), Err(Error::Singular("jet matrix")));
    }
}
