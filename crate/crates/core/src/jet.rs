//! Second-order truncated jets: value, gradient, and Hessian of a scalar
//! quantity at a point, propagated exactly through arithmetic.
//!
//! The Hessian is stored as a packed lower triangle, so symmetry holds by
//! representation rather than by bookkeeping.

use crate::error::{Error, Result};
use crate::expr::pow_value;

#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    dim: usize,
    pub value: f64,
    pub grad: Vec<f64>,
    /// Packed lower triangle, row-major: entry (i, j) with i >= j sits at
    /// `i * (i + 1) / 2 + j`.
    hess_packed: Vec<f64>,
}

fn packed_index(i: usize, j: usize) -> usize {
    let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
    hi * (hi + 1) / 2 + lo
}

impl Jet2 {
    pub fn constant(dim: usize, value: f64) -> Self {
        Jet2 { dim, value, grad: vec![0.0; dim], hess_packed: vec![0.0; dim * (dim + 1) / 2] }
    }

    /// Jet of the coordinate function `x{index}` at a point.
    pub fn variable(dim: usize, index: usize, value: f64) -> Self {
        let mut jet = Jet2::constant(dim, value);
        jet.grad[index] = 1.0;
        jet
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hess(&self, i: usize, j: usize) -> f64 {
        self.hess_packed[packed_index(i, j)]
    }

    pub fn hess_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.hess(i, j)).collect())
            .collect()
    }

    pub fn add(&self, other: &Jet2) -> Jet2 {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Jet2) -> Jet2 {
        self.zip(other, |a, b| a - b)
    }

    fn zip(&self, other: &Jet2, f: impl Fn(f64, f64) -> f64) -> Jet2 {
        debug_assert_eq!(self.dim, other.dim);
        Jet2 {
            dim: self.dim,
            value: f(self.value, other.value),
            grad: self.grad.iter().zip(&other.grad).map(|(a, b)| f(*a, *b)).collect(),
            hess_packed: self
                .hess_packed
                .iter()
                .zip(&other.hess_packed)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        }
    }

    pub fn neg(&self) -> Jet2 {
        Jet2 {
            dim: self.dim,
            value: -self.value,
            grad: self.grad.iter().map(|g| -g).collect(),
            hess_packed: self.hess_packed.iter().map(|h| -h).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Jet2 {
        Jet2 {
            dim: self.dim,
            value: c * self.value,
            grad: self.grad.iter().map(|g| c * g).collect(),
            hess_packed: self.hess_packed.iter().map(|h| c * h).collect(),
        }
    }

    /// Leibniz rule at second order:
    /// (fg)_ij = f_ij g + f_i g_j + f_j g_i + f g_ij.
    pub fn mul(&self, other: &Jet2) -> Jet2 {
        debug_assert_eq!(self.dim, other.dim);
        let dim = self.dim;
        let value = self.value * other.value;
        let grad: Vec<f64> = (0..dim)
            .map(|i| self.grad[i] * other.value + self.value * other.grad[i])
            .collect();
        let mut hess_packed = vec![0.0; dim * (dim + 1) / 2];
        for i in 0..dim {
            for j in 0..=i {
                hess_packed[packed_index(i, j)] = self.hess(i, j) * other.value
                    + self.grad[i] * other.grad[j]
                    + self.grad[j] * other.grad[i]
                    + self.value * other.hess(i, j);
            }
        }
        Jet2 { dim, value, grad, hess_packed }
    }

    pub fn div(&self, other: &Jet2) -> Result<Jet2> {
        if other.value == 0.0 {
            return Err(Error::DivisionByZero);
        }
        let v = other.value;
        let recip = other.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v));
        Ok(self.mul(&recip))
    }

    /// Compose with a scalar function given its value and first two
    /// derivatives at `self.value`:
    /// (g∘f)_i = g' f_i, (g∘f)_ij = g' f_ij + g'' f_i f_j.
    pub fn chain(&self, g0: f64, g1: f64, g2: f64) -> Jet2 {
        let dim = self.dim;
        let grad: Vec<f64> = (0..dim).map(|i| g1 * self.grad[i]).collect();
        let mut hess_packed = vec![0.0; dim * (dim + 1) / 2];
        for i in 0..dim {
            for j in 0..=i {
                hess_packed[packed_index(i, j)] =
                    g1 * self.hess(i, j) + g2 * self.grad[i] * self.grad[j];
            }
        }
        Jet2 { dim, value: g0, grad, hess_packed }
    }

    pub fn sin(&self) -> Jet2 {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Jet2 {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn exp(&self) -> Jet2 {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn log(&self) -> Result<Jet2> {
        let v = self.value;
        if v <= 0.0 {
            return Err(Error::LogNonPositive { arg: v });
        }
        Ok(self.chain(v.ln(), 1.0 / v, -1.0 / (v * v)))
    }

    pub fn sqrt(&self) -> Result<Jet2> {
        let v = self.value;
        if v < 0.0 {
            return Err(Error::SqrtNegative { arg: v });
        }
        if v == 0.0 {
            return Err(Error::DivisionByZero);
        }
        let s = v.sqrt();
        Ok(self.chain(s, 0.5 / s, -0.25 / (s * v)))
    }

    pub fn atan(&self) -> Jet2 {
        let v = self.value;
        let d = 1.0 + v * v;
        self.chain(v.atan(), 1.0 / d, -2.0 * v / (d * d))
    }

    pub fn powf(&self, r: f64) -> Result<Jet2> {
        let v = self.value;
        let g0 = pow_value(v, r)?;
        let g1 = r * pow_value(v, r - 1.0)?;
        let g2 = r * (r - 1.0) * pow_value(v, r - 2.0)?;
        Ok(self.chain(g0, g1, g2))
    }
}
