//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] of order k in n variables stores the coefficients `∂^α f / α!`
//! for every multi-index with `|α| ≤ k`. Arithmetic on jets is exact to the
//! stored order, so derivatives of composite expressions come out at
//! roundoff level rather than finite-difference level.

mod layout;
mod matrix;
mod tensor;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

pub use layout::coefficient_count;
pub use matrix::JetMatrix;
pub use tensor::JetTensor;

use crate::error::{Error, Result};
use layout::layout;

/// Highest supported jet order.
///
/// Order 3 covers every curvature quantity; order 4 is only used to take one
/// more derivative of the Cartan curvature for its Bianchi identity.
pub const MAX_ORDER: usize = 4;
/// Highest supported chart dimension.
pub const MAX_DIM: usize = 6;

/// A point of the coordinate chart.
#[derive(Clone, Debug, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(Error::DimensionMismatch(format!(
                "point dimension {} not in 1..={MAX_DIM}",
                coords.len()
            )));
        }
        if let Some(x) = coords.iter().find(|x| !x.is_finite()) {
            return Err(Error::domain("point", *x));
        }
        Ok(Point(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

/// What [`Jet::lift`] lifts: a constant function or a coordinate function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Selector {
    Constant(f64),
    Coordinate(usize),
}

#[derive(Clone, PartialEq)]
pub struct Jet {
    dim: usize,
    order: usize,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet(n={}, k={}, {:?})", self.dim, self.order, self.coeffs)
    }
}

fn check_order(order: usize) -> Result<()> {
    if order > MAX_ORDER {
        return Err(Error::OrderOutOfRange {
            order,
            max: MAX_ORDER,
        });
    }
    Ok(())
}

impl Jet {
    pub fn constant(dim: usize, order: usize, value: f64) -> Jet {
        let mut coeffs = vec![0.0; coefficient_count(dim, order)];
        coeffs[0] = value;
        Jet { dim, order, coeffs }
    }

    pub fn zero(dim: usize, order: usize) -> Jet {
        Jet::constant(dim, order, 0.0)
    }

    /// The coordinate function `x^i` expanded around `point`.
    pub fn coordinate(point: &Point, i: usize, order: usize) -> Result<Jet> {
        check_order(order)?;
        let dim = point.dim();
        if i >= dim {
            return Err(Error::CoordinateOutOfRange { index: i, dim });
        }
        let mut jet = Jet::constant(dim, order, point.coords()[i]);
        if order >= 1 {
            // degree-1 monomials are enumerated as e_0, e_1, ...
            jet.coeffs[1 + i] = 1.0;
        }
        Ok(jet)
    }

    pub fn lift(selector: Selector, point: &Point, order: usize) -> Result<Jet> {
        check_order(order)?;
        match selector {
            Selector::Constant(c) => Ok(Jet::constant(point.dim(), order, c)),
            Selector::Coordinate(i) => Jet::coordinate(point, i, order),
        }
    }

    /// Builds a jet from raw Taylor coefficients in the internal enumeration.
    pub fn from_coeffs(dim: usize, order: usize, coeffs: Vec<f64>) -> Result<Jet> {
        check_order(order)?;
        if coeffs.len() != coefficient_count(dim, order) {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for a ({dim}, {order}) jet",
                coeffs.len()
            )));
        }
        Ok(Jet { dim, order, coeffs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Multi-indices in the order of [`Jet::coeffs`].
    pub fn multi_indices(&self) -> &'static [Vec<u8>] {
        &layout(self.dim, self.order).indices
    }

    /// Taylor coefficient `∂^α f / α!`, zero if `α` is beyond the stored order.
    pub fn coeff(&self, alpha: &[u8]) -> f64 {
        layout(self.dim, self.order)
            .lookup
            .get(alpha)
            .map_or(0.0, |&i| self.coeffs[i])
    }

    /// The raw partial derivative `∂^α f`.
    pub fn partial(&self, alpha: &[usize]) -> Result<f64> {
        if alpha.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "multi-index of length {} for a {}-dimensional jet",
                alpha.len(),
                self.dim
            )));
        }
        let degree: usize = alpha.iter().sum();
        if degree > self.order {
            return Err(Error::PartialOrderExceeded {
                degree,
                order: self.order,
            });
        }
        let key: Vec<u8> = alpha.iter().map(|&a| a as u8).collect();
        let lay = layout(self.dim, self.order);
        let idx = lay.lookup[&key];
        Ok(self.coeffs[idx] * lay.factorials[idx])
    }

    /// First partial `∂_i f` at the expansion point.
    pub fn d1(&self, i: usize) -> f64 {
        if self.order == 0 {
            return 0.0;
        }
        self.coeffs[1 + i]
    }

    /// `∂_i f` as a jet one order lower.
    ///
    /// Panics on an order-0 jet; callers check orders up front and report
    /// [`Error::MissingJets`].
    pub fn derivative(&self, i: usize) -> Jet {
        assert!(self.order > 0, "cannot differentiate an order-0 jet");
        assert!(i < self.dim);
        let lay = layout(self.dim, self.order);
        let coeffs = lay.derivs[i]
            .iter()
            .map(|&(src, factor)| factor * self.coeffs[src as usize])
            .collect();
        Jet {
            dim: self.dim,
            order: self.order - 1,
            coeffs,
        }
    }

    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order {
            return self.clone();
        }
        Jet {
            dim: self.dim,
            order,
            coeffs: self.coeffs[..coefficient_count(self.dim, order)].to_vec(),
        }
    }

    pub fn scale(&self, c: f64) -> Jet {
        Jet {
            dim: self.dim,
            order: self.order,
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    pub fn add_scalar(&self, c: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|x| x.is_finite())
    }

    /// Largest coefficient difference after truncating both to the common order.
    pub fn max_abs_diff(&self, other: &Jet) -> f64 {
        let o = self.order.min(other.order);
        let len = coefficient_count(self.dim, o);
        self.coeffs[..len]
            .iter()
            .zip(&other.coeffs[..len])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn combine(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        assert_eq!(self.dim, other.dim, "jet dimension mismatch");
        let order = self.order.min(other.order);
        let len = coefficient_count(self.dim, order);
        let coeffs = self.coeffs[..len]
            .iter()
            .zip(&other.coeffs[..len])
            .map(|(a, b)| f(*a, *b))
            .collect();
        Jet {
            dim: self.dim,
            order,
            coeffs,
        }
    }

    fn product(&self, other: &Jet) -> Jet {
        assert_eq!(self.dim, other.dim, "jet dimension mismatch");
        let order = self.order.min(other.order);
        let lay = layout(self.dim, order);
        let mut coeffs = vec![0.0; lay.indices.len()];
        let (a, b) = (&self.coeffs, &other.coeffs);
        for &(i, j, k) in &lay.products {
            coeffs[k as usize] += a[i as usize] * b[j as usize];
        }
        Jet {
            dim: self.dim,
            order,
            coeffs,
        }
    }

    /// `f(self)` given `derivs[m] = f^(m)(self.value())` for `m = 0..=order`.
    fn compose(&self, derivs: &[f64]) -> Jet {
        let k = self.order;
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let mut fact = vec![1.0; k + 1];
        for m in 1..=k {
            fact[m] = fact[m - 1] * m as f64;
        }
        let mut acc = Jet::constant(self.dim, k, derivs[k] / fact[k]);
        for m in (0..k).rev() {
            acc = (&acc * &h).add_scalar(derivs[m] / fact[m]);
        }
        acc
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose(&vec![e; self.order + 1])
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        let d: Vec<f64> = (0..=self.order).map(|m| cycle[m % 4]).collect();
        self.compose(&d)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        let d: Vec<f64> = (0..=self.order).map(|m| cycle[m % 4]).collect();
        self.compose(&d)
    }

    pub fn ln(&self) -> Result<Jet> {
        let x = self.value();
        if !(x > 0.0) {
            return Err(Error::domain("ln", x));
        }
        let mut d = vec![x.ln()];
        // d^m/dx^m ln x = (-1)^(m-1) (m-1)! / x^m
        let mut c = 1.0;
        for m in 1..=self.order {
            if m > 1 {
                c *= -((m - 1) as f64);
            }
            d.push(c / x.powi(m as i32));
        }
        Ok(self.compose(&d))
    }

    /// Real power `x^p` for positive base.
    pub fn powf(&self, p: f64) -> Result<Jet> {
        let x = self.value();
        if !(x > 0.0) {
            return Err(Error::domain("pow", x));
        }
        let mut d = Vec::with_capacity(self.order + 1);
        let mut falling = 1.0;
        for m in 0..=self.order {
            d.push(falling * x.powf(p - m as f64));
            falling *= p - m as f64;
        }
        Ok(self.compose(&d))
    }

    pub fn sqrt(&self) -> Result<Jet> {
        let x = self.value();
        if !(x > 0.0) {
            return Err(Error::domain("sqrt", x));
        }
        self.powf(0.5)
    }

    pub fn recip(&self) -> Result<Jet> {
        let x = self.value();
        if x == 0.0 || !x.is_finite() {
            return Err(Error::domain("div", x));
        }
        let mut d = Vec::with_capacity(self.order + 1);
        let mut c = 1.0;
        for m in 0..=self.order {
            d.push(c / x.powi(m as i32 + 1));
            c *= -((m + 1) as f64);
        }
        Ok(self.compose(&d))
    }

    pub fn div(&self, other: &Jet) -> Result<Jet> {
        Ok(self * &other.recip()?)
    }

    /// Integer power; negative exponents require a nonzero value.
    pub fn powi(&self, p: i32) -> Result<Jet> {
        let base = if p < 0 { self.recip()? } else { self.clone() };
        let mut e = p.unsigned_abs();
        let mut acc = Jet::constant(self.dim, self.order, 1.0);
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &sq;
            }
            e >>= 1;
            if e > 0 {
                sq = &sq * &sq;
            }
        }
        Ok(acc)
    }

    /// Dispatch for the named arithmetic operations.
    pub fn apply(&self, op: JetOp, other: Option<&Operand>) -> Result<Jet> {
        let rhs = |name: &'static str| -> Result<Jet> {
            match other {
                Some(Operand::Jet(j)) => {
                    if j.dim != self.dim {
                        return Err(Error::DimensionMismatch(format!(
                            "{name}: operand dimensions {} and {}",
                            self.dim, j.dim
                        )));
                    }
                    Ok(j.clone())
                }
                Some(Operand::Real(c)) => Ok(Jet::constant(self.dim, self.order, *c)),
                None => Err(Error::DimensionMismatch(format!("{name} needs a second operand"))),
            }
        };
        let real = |name: &'static str| -> Result<f64> {
            match other {
                Some(Operand::Real(c)) => Ok(*c),
                _ => Err(Error::DimensionMismatch(format!("{name} needs a real exponent"))),
            }
        };
        match op {
            JetOp::Add => Ok(self + &rhs("add")?),
            JetOp::Sub => Ok(self - &rhs("sub")?),
            JetOp::Mul => Ok(self * &rhs("mul")?),
            JetOp::Div => self.div(&rhs("div")?),
            JetOp::Exp => Ok(self.exp()),
            JetOp::Ln => self.ln(),
            JetOp::Sin => Ok(self.sin()),
            JetOp::Cos => Ok(self.cos()),
            JetOp::Sqrt => self.sqrt(),
            JetOp::Pow => {
                let p = real("pow")?;
                if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
                    self.powi(p as i32)
                } else {
                    self.powf(p)
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JetOp {
    Add,
    Sub,
    Mul,
    Div,
    Exp,
    Ln,
    Sin,
    Cos,
    Sqrt,
    Pow,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Operand {
    Jet(Jet),
    Real(f64),
}

impl Add<&Jet> for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.combine(rhs, |a, b| a + b)
    }
}

impl Sub<&Jet> for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.combine(rhs, |a, b| a - b)
    }
}

impl Mul<&Jet> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.product(rhs)
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                (&self).$m(rhs)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    #[test]
    fn lift_coordinate_and_constant() {
        let x0 = Jet::lift(Selector::Coordinate(0), &pt(&[1.0, 2.0]), 2).unwrap();
        assert_eq!(x0.value(), 1.0);
        assert_eq!(x0.partial(&[1, 0]).unwrap(), 1.0);
        assert_eq!(x0.partial(&[0, 1]).unwrap(), 0.0);
        for a in [[2, 0], [1, 1], [0, 2]] {
            assert_eq!(x0.partial(&a).unwrap(), 0.0);
        }

        let c = Jet::lift(Selector::Constant(5.0), &pt(&[0.3, -1.0, 2.0]), 3).unwrap();
        assert_eq!(c.value(), 5.0);
        assert!(c.coeffs()[1..].iter().all(|&x| x == 0.0));

        let x1 = Jet::lift(Selector::Coordinate(1), &pt(&[0.0, -3.0]), 3).unwrap();
        assert_eq!(x1.value(), -3.0);
        assert_eq!(x1.partial(&[0, 1]).unwrap(), 1.0);
        for a in [[2, 0], [1, 1], [0, 2], [3, 0], [2, 1], [1, 2], [0, 3]] {
            assert_eq!(x1.partial(&a).unwrap(), 0.0);
        }
    }

    #[test]
    fn lift_errors() {
        let p = pt(&[1.0, 2.0]);
        assert!(matches!(
            Jet::lift(Selector::Coordinate(0), &p, MAX_ORDER + 1),
            Err(Error::OrderOutOfRange { .. })
        ));
        assert!(matches!(
            Jet::lift(Selector::Coordinate(2), &p, 1),
            Err(Error::CoordinateOutOfRange { index: 2, dim: 2 })
        ));
    }

    #[test]
    fn square_of_coordinate() {
        let x = Jet::coordinate(&pt(&[3.0]), 0, 2).unwrap();
        let sq = &x * &x;
        assert_eq!(sq.coeffs(), &[9.0, 6.0, 1.0]);
    }

    #[test]
    fn exp_series() {
        let x = Jet::coordinate(&pt(&[0.0]), 0, 3).unwrap();
        let e = x.exp();
        let expect = [1.0, 1.0, 0.5, 1.0 / 6.0];
        for (a, b) in e.coeffs().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn geometric_series() {
        let x = Jet::coordinate(&pt(&[0.0]), 0, 2).unwrap();
        let one = Jet::constant(1, 2, 1.0);
        let r = one.div(&x.add_scalar(1.0)).unwrap();
        assert_eq!(r.coeffs(), &[1.0, -1.0, 1.0]);
    }

    #[test]
    fn extract_partial_examples() {
        let p = pt(&[1.0, 2.0]);
        let x = Jet::coordinate(&p, 0, 3).unwrap();
        let y = Jet::coordinate(&p, 1, 3).unwrap();
        let f = &(&x * &x) * &y;
        assert_eq!(f.partial(&[2, 0]).unwrap(), 4.0);
        let c = Jet::constant(2, 3, 7.0);
        assert_eq!(c.partial(&[1, 1]).unwrap(), 0.0);
        let e = Jet::coordinate(&pt(&[0.0]), 0, 3).unwrap().exp();
        assert!((e.partial(&[3]).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            e.partial(&[4]),
            Err(Error::PartialOrderExceeded { degree: 4, order: 3 })
        ));
    }

    #[test]
    fn domain_errors_carry_values() {
        let x = Jet::coordinate(&pt(&[0.0]), 0, 2).unwrap();
        match x.ln() {
            Err(Error::Domain { op: "ln", value, .. }) => assert_eq!(value, 0.0),
            other => panic!("unexpected {other:?}"),
        }
        assert!(Jet::constant(1, 2, 1.0).div(&x).is_err());
        assert!(x.add_scalar(-1.0).sqrt().is_err());
    }

    #[test]
    fn derivative_of_product() {
        let p = pt(&[0.5, -0.25]);
        let x = Jet::coordinate(&p, 0, 3).unwrap();
        let y = Jet::coordinate(&p, 1, 3).unwrap();
        // f = x^2 y^2, ∂_x f = 2 x y^2
        let f = (&x * &x) * (&y * &y);
        let fx = f.derivative(0);
        assert_eq!(fx.order(), 2);
        let expect = (&x * &(&y * &y)).scale(2.0);
        assert!(fx.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn apply_dispatch() {
        let x = Jet::coordinate(&pt(&[2.0]), 0, 2).unwrap();
        let cube = x.apply(JetOp::Pow, Some(&Operand::Real(3.0))).unwrap();
        assert_eq!(cube.coeffs(), &[8.0, 12.0, 6.0]);
        let inv = x.apply(JetOp::Pow, Some(&Operand::Real(-1.0))).unwrap();
        assert!((inv.coeffs()[1] + 0.25).abs() < 1e-15);
        assert!(x.apply(JetOp::Add, None).is_err());
    }
}
