use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::jet::{Jet, Point};

/// Unary functions available in expressions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Expression tree for scalar fields on a chart.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Coord(usize),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn c(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn x(i: usize) -> Expr {
        Expr::Coord(i)
    }

    pub fn pow(self, p: i32) -> Expr {
        Expr::Pow(Box::new(self), p)
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        Expr::Call(f, Box::new(arg))
    }

    pub fn exp(self) -> Expr {
        Expr::call(Func::Exp, self)
    }

    pub fn sqrt(self) -> Expr {
        Expr::call(Func::Sqrt, self)
    }

    /// Largest coordinate index referenced, if any.
    pub fn max_coord(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Coord(i) => Some(*i),
            Expr::Binary(_, a, b) => match (a.max_coord(), b.max_coord()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
            Expr::Pow(a, _) | Expr::Neg(a) | Expr::Call(_, a) => a.max_coord(),
        }
    }

    /// Jet of the denoted function at `point`.
    pub fn eval(&self, point: &Point, order: usize) -> Result<Jet> {
        if let Some(i) = self.max_coord() {
            if i >= point.dim() {
                return Err(Error::CoordinateOutOfRange {
                    index: i,
                    dim: point.dim(),
                });
            }
        }
        // validates the order once; the recursion below cannot fail on it
        Jet::lift(crate::jet::Selector::Constant(0.0), point, order)?;
        self.eval_rec(point, order)
    }

    fn eval_rec(&self, point: &Point, order: usize) -> Result<Jet> {
        let with_context = |e: Error| match e {
            Error::Domain {
                op,
                value,
                context: None,
            } => Error::Domain {
                op,
                value,
                context: Some(self.to_string()),
            },
            other => other,
        };
        Ok(match self {
            Expr::Const(c) => Jet::constant(point.dim(), order, *c),
            Expr::Coord(i) => Jet::coordinate(point, *i, order)?,
            Expr::Binary(op, a, b) => {
                let a = a.eval_rec(point, order)?;
                let b = b.eval_rec(point, order)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a.div(&b).map_err(with_context)?,
                }
            }
            Expr::Pow(a, p) => a.eval_rec(point, order)?.powi(*p).map_err(with_context)?,
            Expr::Neg(a) => -a.eval_rec(point, order)?,
            Expr::Call(f, a) => {
                let a = a.eval_rec(point, order)?;
                match f {
                    Func::Exp => a.exp(),
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Ln => a.ln().map_err(with_context)?,
                    Func::Sqrt => a.sqrt().map_err(with_context)?,
                }
            }
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Const(c) if c.is_sign_negative() => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }
}

fn write_const(f: &mut fmt::Formatter<'_>, c: f64) -> fmt::Result {
    // `{:?}` is the shortest representation that parses back to the same bits
    if c.is_sign_negative() {
        write!(f, "-{:?}", -c)
    } else {
        write!(f, "{c:?}")
    }
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write_const(f, *c),
            Expr::Coord(i) => write!(f, "x{i}"),
            Expr::Binary(op, a, b) => {
                let p = self.precedence();
                write_wrapped(f, a, a.precedence() < p)?;
                let sym = match op {
                    BinOp::Add => " + ",
                    BinOp::Sub => " - ",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                };
                f.write_str(sym)?;
                write_wrapped(f, b, b.precedence() <= p)
            }
            Expr::Pow(a, p) => {
                write_wrapped(f, a, a.precedence() < 5)?;
                write!(f, "^{p}")
            }
            Expr::Neg(a) => {
                f.write_str("-")?;
                // a bare literal after '-' would be folded into a negative constant
                let literal = matches!(**a, Expr::Const(_));
                write_wrapped(f, a, literal || a.precedence() < 3)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

macro_rules! bin_op {
    ($tr:ident, $m:ident, $op:expr) => {
        impl $tr for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                Expr::Binary($op, Box::new(self), Box::new(rhs))
            }
        }
    };
}

bin_op!(Add, add, BinOp::Add);
bin_op!(Sub, sub, BinOp::Sub);
bin_op!(Mul, mul, BinOp::Mul);
bin_op!(Div, div, BinOp::Div);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}
