//! Expression trees over chart coordinates `x0..x{n-1}`.
//!
//! Constructors fold constants and strip additive/multiplicative units so
//! that symbolic pipelines (derivatives of derivatives, change-of-chart
//! compositions) stay at a workable size. No deeper rewriting is attempted.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Power with a literal (possibly fractional) exponent. Non-integer
    /// exponents require a positive base at evaluation time.
    Pow(Box<Expr>, f64),
    Neg(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
    Log(Box<Expr>),
    Sqrt(Box<Expr>),
    Atan(Box<Expr>),
}

pub fn cst(v: f64) -> Expr {
    Expr::Const(v)
}

pub fn var(i: usize) -> Expr {
    Expr::Var(i)
}

pub fn add(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
        (Expr::Const(x), b) if x == 0.0 => b,
        (a, Expr::Const(y)) if y == 0.0 => a,
        (a, b) => Expr::Add(Box::new(a), Box::new(b)),
    }
}

pub fn sub(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x - y),
        (a, Expr::Const(y)) if y == 0.0 => a,
        (Expr::Const(x), b) if x == 0.0 => neg(b),
        (a, b) => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

pub fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(x) => Expr::Const(-x),
        Expr::Neg(inner) => *inner,
        a => Expr::Neg(Box::new(a)),
    }
}

pub fn mul(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
        (Expr::Const(x), _) | (_, Expr::Const(x)) if x == 0.0 => Expr::Const(0.0),
        (Expr::Const(x), b) if x == 1.0 => b,
        (a, Expr::Const(y)) if y == 1.0 => a,
        (Expr::Const(x), b) if x == -1.0 => neg(b),
        (a, Expr::Const(y)) if y == -1.0 => neg(a),
        (a, b) => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

pub fn div(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) if y != 0.0 => Expr::Const(x / y),
        (Expr::Const(x), _) if x == 0.0 => Expr::Const(0.0),
        (a, Expr::Const(y)) if y == 1.0 => a,
        (a, Expr::Const(y)) if y == -1.0 => neg(a),
        (a, b) => Expr::Div(Box::new(a), Box::new(b)),
    }
}

pub fn pow(base: Expr, exponent: f64) -> Expr {
    if exponent == 0.0 {
        return Expr::Const(1.0);
    }
    if exponent == 1.0 {
        return base;
    }
    if let Expr::Const(v) = base {
        if let Ok(r) = pow_value(v, exponent) {
            return Expr::Const(r);
        }
    }
    Expr::Pow(Box::new(base), exponent)
}

pub fn sin(a: Expr) -> Expr {
    match a {
        Expr::Const(x) => Expr::Const(x.sin()),
        a => Expr::Sin(Box::new(a)),
    }
}

pub fn cos(a: Expr) -> Expr {
    match a {
        Expr::Const(x) => Expr::Const(x.cos()),
        a => Expr::Cos(Box::new(a)),
    }
}

pub fn exp(a: Expr) -> Expr {
    match a {
        Expr::Const(x) => Expr::Const(x.exp()),
        a => Expr::Exp(Box::new(a)),
    }
}

pub fn log(a: Expr) -> Expr {
    match a {
        Expr::Const(x) if x > 0.0 => Expr::Const(x.ln()),
        a => Expr::Log(Box::new(a)),
    }
}

pub fn sqrt(a: Expr) -> Expr {
    match a {
        Expr::Const(x) if x >= 0.0 => Expr::Const(x.sqrt()),
        a => Expr::Sqrt(Box::new(a)),
    }
}

pub fn atan(a: Expr) -> Expr {
    match a {
        Expr::Const(x) => Expr::Const(x.atan()),
        a => Expr::Atan(Box::new(a)),
    }
}

/// `base^exponent` with the domain rules used everywhere in this crate:
/// integer exponents admit any base (negative exponents require a nonzero
/// base), fractional exponents require a strictly positive base.
pub fn pow_value(base: f64, exponent: f64) -> Result<f64> {
    if exponent.fract() == 0.0 && exponent.abs() < 1e15 {
        if base == 0.0 && exponent < 0.0 {
            return Err(Error::DivisionByZero);
        }
        return Ok(base.powi(exponent as i32));
    }
    if base <= 0.0 {
        return Err(Error::PowNonPositiveBase { base, exponent });
    }
    Ok(base.powf(exponent))
}

impl Expr {
    /// Evaluate at a point. The slice must cover every variable that occurs.
    pub fn eval(&self, p: &[f64]) -> Result<f64> {
        Ok(match self {
            Expr::Const(v) => *v,
            Expr::Var(i) => p[*i],
            Expr::Add(a, b) => a.eval(p)? + b.eval(p)?,
            Expr::Sub(a, b) => a.eval(p)? - b.eval(p)?,
            Expr::Mul(a, b) => a.eval(p)? * b.eval(p)?,
            Expr::Div(a, b) => {
                let d = b.eval(p)?;
                if d == 0.0 {
                    return Err(Error::DivisionByZero);
                }
                a.eval(p)? / d
            }
            Expr::Pow(a, r) => pow_value(a.eval(p)?, *r)?,
            Expr::Neg(a) => -a.eval(p)?,
            Expr::Sin(a) => a.eval(p)?.sin(),
            Expr::Cos(a) => a.eval(p)?.cos(),
            Expr::Exp(a) => a.eval(p)?.exp(),
            Expr::Log(a) => {
                let v = a.eval(p)?;
                if v <= 0.0 {
                    return Err(Error::LogNonPositive { arg: v });
                }
                v.ln()
            }
            Expr::Sqrt(a) => {
                let v = a.eval(p)?;
                if v < 0.0 {
                    return Err(Error::SqrtNegative { arg: v });
                }
                v.sqrt()
            }
            Expr::Atan(a) => a.eval(p)?.atan(),
        })
    }

    /// Symbolic partial derivative with respect to `x{i}`.
    pub fn derive(&self, i: usize) -> Expr {
        match self {
            Expr::Const(_) => cst(0.0),
            Expr::Var(j) => cst(if *j == i { 1.0 } else { 0.0 }),
            Expr::Add(a, b) => add(a.derive(i), b.derive(i)),
            Expr::Sub(a, b) => sub(a.derive(i), b.derive(i)),
            Expr::Mul(a, b) => add(
                mul(a.derive(i), (**b).clone()),
                mul((**a).clone(), b.derive(i)),
            ),
            Expr::Div(a, b) => {
                // (a/b)' = a'/b - a b' / b^2
                let da = a.derive(i);
                let db = b.derive(i);
                sub(
                    div(da, (**b).clone()),
                    div(mul((**a).clone(), db), pow((**b).clone(), 2.0)),
                )
            }
            Expr::Pow(a, r) => mul(
                mul(cst(*r), pow((**a).clone(), r - 1.0)),
                a.derive(i),
            ),
            Expr::Neg(a) => neg(a.derive(i)),
            Expr::Sin(a) => mul(cos((**a).clone()), a.derive(i)),
            Expr::Cos(a) => neg(mul(sin((**a).clone()), a.derive(i))),
            Expr::Exp(a) => mul(exp((**a).clone()), a.derive(i)),
            Expr::Log(a) => div(a.derive(i), (**a).clone()),
            Expr::Sqrt(a) => div(a.derive(i), mul(cst(2.0), sqrt((**a).clone()))),
            Expr::Atan(a) => div(
                a.derive(i),
                add(cst(1.0), pow((**a).clone(), 2.0)),
            ),
        }
    }

    /// Replace each `Var(i)` with `map[i]`. Used for composition with
    /// transition maps and for fibre-coordinate specialisation.
    pub fn substitute(&self, map: &[Expr]) -> Expr {
        match self {
            Expr::Const(v) => cst(*v),
            Expr::Var(i) => map[*i].clone(),
            Expr::Add(a, b) => add(a.substitute(map), b.substitute(map)),
            Expr::Sub(a, b) => sub(a.substitute(map), b.substitute(map)),
            Expr::Mul(a, b) => mul(a.substitute(map), b.substitute(map)),
            Expr::Div(a, b) => div(a.substitute(map), b.substitute(map)),
            Expr::Pow(a, r) => pow(a.substitute(map), *r),
            Expr::Neg(a) => neg(a.substitute(map)),
            Expr::Sin(a) => sin(a.substitute(map)),
            Expr::Cos(a) => cos(a.substitute(map)),
            Expr::Exp(a) => exp(a.substitute(map)),
            Expr::Log(a) => log(a.substitute(map)),
            Expr::Sqrt(a) => sqrt(a.substitute(map)),
            Expr::Atan(a) => atan(a.substitute(map)),
        }
    }

    /// Renumber variables `x{i} -> x{i + offset}`.
    pub fn shift_vars(&self, offset: usize, dim: usize) -> Expr {
        let map: Vec<Expr> = (0..dim).map(|i| var(i + offset)).collect();
        self.substitute(&map)
    }

    /// Largest variable index occurring in the expression, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                match (a.max_var(), b.max_var()) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, y) => x.or(y),
                }
            }
            Expr::Pow(a, _)
            | Expr::Neg(a)
            | Expr::Sin(a)
            | Expr::Cos(a)
            | Expr::Exp(a)
            | Expr::Log(a)
            | Expr::Sqrt(a)
            | Expr::Atan(a) => a.max_var(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(v) if *v == 0.0)
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }
}

fn fmt_child(f: &mut fmt::Formatter<'_>, child: &Expr, parent_prec: u8) -> fmt::Result {
    if child.precedence() < parent_prec {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Expr {
    /// Prints a form that re-parses to an identically-evaluating expression.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(v) => {
                if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) {
                    // keep negative literals parenthesised so they survive
                    // inside products and powers
                    write!(f, "(0 - {:?})", -v)
                } else {
                    write!(f, "{v:?}")
                }
            }
            Expr::Var(i) => write!(f, "x{i}"),
            Expr::Add(a, b) => {
                fmt_child(f, a, 1)?;
                write!(f, " + ")?;
                fmt_child(f, b, 2)
            }
            Expr::Sub(a, b) => {
                fmt_child(f, a, 1)?;
                write!(f, " - ")?;
                fmt_child(f, b, 2)
            }
            Expr::Mul(a, b) => {
                fmt_child(f, a, 2)?;
                write!(f, "*")?;
                fmt_child(f, b, 3)
            }
            Expr::Div(a, b) => {
                fmt_child(f, a, 2)?;
                write!(f, "/")?;
                fmt_child(f, b, 5)
            }
            Expr::Pow(a, r) => {
                fmt_child(f, a, 5)?;
                write!(f, "^{r:?}")
            }
            Expr::Neg(a) => {
                write!(f, "-")?;
                fmt_child(f, a, 5)
            }
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Log(a) => write!(f, "log({a})"),
            Expr::Sqrt(a) => write!(f, "sqrt({a})"),
            Expr::Atan(a) => write!(f, "atan({a})"),
        }
    }
}
