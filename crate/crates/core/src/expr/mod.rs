//! Expression language, parser, and forward-mode jet differentiation.

mod ast;
mod parser;

pub use ast::{add, atan, cos, cst, div, exp, log, mul, neg, pow, pow_value, sin, sqrt, sub, var, Expr};

use std::fmt;

use crate::error::{Error, Result};
use crate::jet::Jet2;

/// A closed-form function of the chart coordinates `x0..x{dim-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    expr: Expr,
    dim: usize,
}

impl ScalarField {
    /// Wrap an expression, checking that its free variables fit the chart.
    pub fn new(expr: Expr, dim: usize) -> Result<Self> {
        if let Some(max) = expr.max_var() {
            if max >= dim {
                return Err(Error::DimensionViolation { offset: 0, var: max, dim });
            }
        }
        Ok(ScalarField { expr, dim })
    }

    pub fn constant(value: f64, dim: usize) -> Self {
        ScalarField { expr: ast::cst(value), dim }
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant(0.0, dim)
    }

    pub fn coordinate(index: usize, dim: usize) -> Result<Self> {
        Self::new(ast::var(index), dim)
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.expr.is_zero()
    }

    pub fn eval(&self, p: &[f64]) -> Result<f64> {
        self.check_point(p)?;
        self.expr.eval(p)
    }

    /// Exact value, gradient, and Hessian at `p` by forward-mode jets.
    pub fn eval_jet(&self, p: &[f64]) -> Result<Jet2> {
        self.check_point(p)?;
        eval_jet_expr(&self.expr, p, self.dim)
    }

    /// Symbolic partial derivative; stays in the expression language.
    pub fn derive(&self, i: usize) -> ScalarField {
        ScalarField { expr: self.expr.derive(i), dim: self.dim }
    }

    /// Compose with `map`: the result is `self(map_0(x), .., map_{n-1}(x))`
    /// as a field on the chart the `map` components live on.
    pub fn compose(&self, map: &[ScalarField]) -> Result<ScalarField> {
        if map.len() != self.dim {
            return Err(Error::ShapeMismatch(format!(
                "composition needs {} components, got {}",
                self.dim,
                map.len()
            )));
        }
        let target_dim = map.first().map(|f| f.dim).unwrap_or(0);
        let exprs: Vec<Expr> = map.iter().map(|f| f.expr.clone()).collect();
        ScalarField::new(self.expr.substitute(&exprs), target_dim)
    }

    /// Renumber variables `x{i} -> x{i + offset}` into a larger chart.
    pub fn shift_vars(&self, offset: usize, target_dim: usize) -> Result<ScalarField> {
        if self.dim + offset > target_dim {
            return Err(Error::ShapeMismatch(format!(
                "shift by {} exceeds target dimension {}",
                offset, target_dim
            )));
        }
        ScalarField::new(self.expr.shift_vars(offset, self.dim), target_dim)
    }

    fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::ShapeMismatch(format!(
                "point has {} coordinates, field expects {}",
                p.len(),
                self.dim
            )));
        }
        Ok(())
    }

    /// Pointwise algebra, for building fields programmatically.
    pub fn binary(&self, other: &ScalarField, op: fn(Expr, Expr) -> Expr) -> ScalarField {
        debug_assert_eq!(self.dim, other.dim);
        ScalarField { expr: op(self.expr.clone(), other.expr.clone()), dim: self.dim }
    }

    pub fn add_field(&self, other: &ScalarField) -> ScalarField {
        self.binary(other, ast::add)
    }

    pub fn sub_field(&self, other: &ScalarField) -> ScalarField {
        self.binary(other, ast::sub)
    }

    pub fn mul_field(&self, other: &ScalarField) -> ScalarField {
        self.binary(other, ast::mul)
    }

    pub fn div_field(&self, other: &ScalarField) -> ScalarField {
        self.binary(other, ast::div)
    }

    pub fn scale(&self, c: f64) -> ScalarField {
        ScalarField { expr: ast::mul(ast::cst(c), self.expr.clone()), dim: self.dim }
    }

    pub fn neg_field(&self) -> ScalarField {
        ScalarField { expr: ast::neg(self.expr.clone()), dim: self.dim }
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.expr)
    }
}

/// Parse `text` into a field on an `dim`-dimensional chart.
pub fn parse(text: &str, dim: usize) -> Result<ScalarField> {
    let expr = parser::parse_expr(text, dim)?;
    Ok(ScalarField { expr, dim })
}

fn eval_jet_expr(e: &Expr, p: &[f64], dim: usize) -> Result<Jet2> {
    Ok(match e {
        Expr::Const(v) => Jet2::constant(dim, *v),
        Expr::Var(i) => Jet2::variable(dim, *i, p[*i]),
        Expr::Add(a, b) => eval_jet_expr(a, p, dim)?.add(&eval_jet_expr(b, p, dim)?),
        Expr::Sub(a, b) => eval_jet_expr(a, p, dim)?.sub(&eval_jet_expr(b, p, dim)?),
        Expr::Mul(a, b) => eval_jet_expr(a, p, dim)?.mul(&eval_jet_expr(b, p, dim)?),
        Expr::Div(a, b) => eval_jet_expr(a, p, dim)?.div(&eval_jet_expr(b, p, dim)?)?,
        Expr::Pow(a, r) => eval_jet_expr(a, p, dim)?.powf(*r)?,
        Expr::Neg(a) => eval_jet_expr(a, p, dim)?.neg(),
        Expr::Sin(a) => eval_jet_expr(a, p, dim)?.sin(),
        Expr::Cos(a) => eval_jet_expr(a, p, dim)?.cos(),
        Expr::Exp(a) => eval_jet_expr(a, p, dim)?.exp(),
        Expr::Log(a) => eval_jet_expr(a, p, dim)?.log()?,
        Expr::Sqrt(a) => eval_jet_expr(a, p, dim)?.sqrt()?,
        Expr::Atan(a) => eval_jet_expr(a, p, dim)?.atan(),
    })
}

/// Max absolute discrepancy between the jet derivatives of `f` at `p` and
/// central finite differences of step `h` — an independent sanity check on
/// the forward-mode rules.
pub fn fd_crosscheck(f: &ScalarField, p: &[f64], h: f64) -> Result<f64> {
    let jet = f.eval_jet(p)?;
    let n = f.dim();
    let at = |q: &[f64]| f.eval(q);
    let mut worst: f64 = 0.0;

    let shifted = |deltas: &[(usize, f64)]| -> Result<f64> {
        let mut q = p.to_vec();
        for (i, d) in deltas {
            q[*i] += d;
        }
        at(&q)
    };

    for i in 0..n {
        let fp = shifted(&[(i, h)])?;
        let fm = shifted(&[(i, -h)])?;
        let fd_grad = (fp - fm) / (2.0 * h);
        worst = worst.max((fd_grad - jet.grad[i]).abs());

        let f0 = at(p)?;
        let fd_diag = (fp - 2.0 * f0 + fm) / (h * h);
        worst = worst.max((fd_diag - jet.hess(i, i)).abs());

        for j in 0..i {
            let fpp = shifted(&[(i, h), (j, h)])?;
            let fpm = shifted(&[(i, h), (j, -h)])?;
            let fmp = shifted(&[(i, -h), (j, h)])?;
            let fmm = shifted(&[(i, -h), (j, -h)])?;
            let fd_cross = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
            worst = worst.max((fd_cross - jet.hess(i, j)).abs());
        }
    }
    Ok(worst)
}
