//! Charts, coordinate transitions, Jacobians, and the standard tensor
//! transformation laws every invariance test goes through.
//!
//! Transitions carry an explicit declared inverse instead of being inverted
//! numerically; comparisons always happen at points of the *target* chart.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::expr::{self, ScalarField};

/// A coordinate chart: dimension plus an axis-aligned sample box used for
/// test-point generation.
#[derive(Debug, Clone)]
pub struct Chart {
    dim: usize,
    bounds: Vec<(f64, f64)>,
}

impl Chart {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        let dim = bounds.len();
        if dim < 2 {
            return Err(Error::DimensionTooSmall {
                dim,
                context: "charts need n >= 2 (1/(n-1) factors are undefined for n = 1)".into(),
            });
        }
        for (lo, hi) in &bounds {
            if !(lo < hi) {
                return Err(Error::ShapeMismatch(format!("empty box interval [{lo}, {hi}]")));
            }
        }
        Ok(Chart { dim, bounds })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    /// Deterministic uniform draws from the box.
    pub fn sample_points(&self, seed: u64, count: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| self.bounds.iter().map(|(lo, hi)| rng.gen_range(*lo..*hi)).collect())
            .collect()
    }
}

/// A coordinate transformation with a declared closed-form inverse.
#[derive(Debug, Clone)]
pub struct TransitionMap {
    dim: usize,
    forward: Vec<ScalarField>,
    inverse: Vec<ScalarField>,
}

impl TransitionMap {
    pub fn new(forward: Vec<ScalarField>, inverse: Vec<ScalarField>) -> Result<Self> {
        let dim = forward.len();
        if dim == 0 || inverse.len() != dim {
            return Err(Error::ShapeMismatch(format!(
                "transition needs matching component counts, got {} forward / {} inverse",
                dim,
                inverse.len()
            )));
        }
        for f in forward.iter().chain(&inverse) {
            if f.dim() != dim {
                return Err(Error::ShapeMismatch(format!(
                    "transition component on {}-dim chart, expected {}",
                    f.dim(),
                    dim
                )));
            }
        }
        Ok(TransitionMap { dim, forward, inverse })
    }

    pub fn identity(dim: usize) -> Self {
        let components: Vec<ScalarField> =
            (0..dim).map(|i| ScalarField::coordinate(i, dim).unwrap()).collect();
        TransitionMap { dim, forward: components.clone(), inverse: components }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn forward(&self) -> &[ScalarField] {
        &self.forward
    }

    pub fn inverse_fields(&self) -> &[ScalarField] {
        &self.inverse
    }

    /// The transition with forward and inverse swapped.
    pub fn reversed(&self) -> TransitionMap {
        TransitionMap { dim: self.dim, forward: self.inverse.clone(), inverse: self.forward.clone() }
    }

    /// `other` after `self` (source of `other` = target of `self`).
    pub fn compose(&self, other: &TransitionMap) -> Result<TransitionMap> {
        let forward: Vec<ScalarField> = other
            .forward
            .iter()
            .map(|f| f.compose(&self.forward))
            .collect::<Result<_>>()?;
        let inverse: Vec<ScalarField> = self
            .inverse
            .iter()
            .map(|f| f.compose(&other.inverse))
            .collect::<Result<_>>()?;
        TransitionMap::new(forward, inverse)
    }

    pub fn apply(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.forward.iter().map(|f| f.eval(p)).collect()
    }

    pub fn apply_inverse(&self, q: &[f64]) -> Result<Vec<f64>> {
        self.inverse.iter().map(|f| f.eval(q)).collect()
    }

    /// Forward Jacobian, its determinant, and the Jacobian modulus at `p`.
    pub fn jacobian(&self, p: &[f64]) -> Result<(Vec<Vec<f64>>, f64, f64)> {
        let mut rows = Vec::with_capacity(self.dim);
        for f in &self.forward {
            rows.push(f.eval_jet(p)?.grad);
        }
        let det = DMatrix::from_fn(self.dim, self.dim, |i, j| rows[i][j]).determinant();
        if det.abs() < 1e-12 {
            return Err(Error::SingularJacobian { det });
        }
        Ok((rows, det, det.abs()))
    }

    /// The Jacobian determinant as a closed-form field on the source chart.
    pub fn jacobian_det_field(&self) -> ScalarField {
        let entries: Vec<Vec<ScalarField>> = self
            .forward
            .iter()
            .map(|f| (0..self.dim).map(|j| f.derive(j)).collect())
            .collect();
        det_field(&entries)
    }

    /// Check the declared-inverse and orientation invariants on `points`:
    /// forward∘inverse = id within `tol`, det J > 0.
    pub fn validate_on(&self, points: &[Vec<f64>], tol: f64) -> Result<()> {
        for p in points {
            let q = self.apply(p)?;
            let back = self.apply_inverse(&q)?;
            for (a, b) in p.iter().zip(&back) {
                if (a - b).abs() > tol {
                    return Err(Error::ShapeMismatch(format!(
                        "declared inverse misses round-trip at {p:?}: got {back:?}"
                    )));
                }
            }
            let (_, det, _) = self.jacobian(p)?;
            if det <= 0.0 {
                return Err(Error::ShapeMismatch(format!(
                    "transition must be orientation-preserving, det J = {det} at {p:?}"
                )));
            }
        }
        Ok(())
    }
}

/// Symbolic determinant by Laplace expansion along the first row.
/// Fine at desk scale (n <= 4 in this crate).
pub fn det_field(m: &[Vec<ScalarField>]) -> ScalarField {
    let n = m.len();
    let dim = m[0][0].dim();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut acc = ScalarField::zero(dim);
    for col in 0..n {
        let minor: Vec<Vec<ScalarField>> = (1..n)
            .map(|r| (0..n).filter(|c| *c != col).map(|c| m[r][c].clone()).collect())
            .collect();
        let term = m[0][col].mul_field(&det_field(&minor));
        acc = if col % 2 == 0 { acc.add_field(&term) } else { acc.sub_field(&term) };
    }
    acc
}

/// Symbolic inverse of a square field matrix via the adjugate.
pub fn inverse_field(m: &[Vec<ScalarField>]) -> Vec<Vec<ScalarField>> {
    let n = m.len();
    let dim = m[0][0].dim();
    let det = det_field(m);
    let mut out = vec![vec![ScalarField::zero(dim); n]; n];
    for i in 0..n {
        for j in 0..n {
            // cofactor C_ji / det
            let minor: Vec<Vec<ScalarField>> = (0..n)
                .filter(|r| *r != j)
                .map(|r| (0..n).filter(|c| *c != i).map(|c| m[r][c].clone()).collect())
                .collect();
            let mut cof = if minor.is_empty() {
                ScalarField::constant(1.0, dim)
            } else {
                det_field(&minor)
            };
            if (i + j) % 2 == 1 {
                cof = cof.neg_field();
            }
            out[i][j] = cof.div_field(&det);
        }
    }
    out
}

/// A symmetric matrix of coefficient fields, stored as a packed lower
/// triangle so that symmetry is a property of the representation.
#[derive(Debug, Clone)]
pub struct SymmetricMatrixField {
    dim: usize,
    entries: Vec<ScalarField>,
}

fn packed(i: usize, j: usize) -> usize {
    let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
    hi * (hi + 1) / 2 + lo
}

impl SymmetricMatrixField {
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> ScalarField) -> Self {
        let mut entries = Vec::with_capacity(dim * (dim + 1) / 2);
        for i in 0..dim {
            for j in 0..=i {
                entries.push(f(i, j));
            }
        }
        SymmetricMatrixField { dim, entries }
    }

    /// Build from a full matrix, requiring the off-diagonal entries to be
    /// structurally equal expressions.
    pub fn from_full(rows: Vec<Vec<ScalarField>>) -> Result<Self> {
        let dim = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::ShapeMismatch(format!(
                    "row {i} has {} entries, expected {dim}",
                    row.len()
                )));
            }
        }
        for i in 0..dim {
            for j in 0..i {
                if rows[i][j] != rows[j][i] {
                    return Err(Error::NotSymmetric { defect: f64::NAN, point: vec![] });
                }
            }
        }
        Ok(Self::from_fn(dim, |i, j| rows[i][j].clone()))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| {
            ScalarField::constant(if i == j { 1.0 } else { 0.0 }, dim)
        })
    }

    pub fn zero(dim: usize) -> Self {
        Self::from_fn(dim, |_, _| ScalarField::zero(dim))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &ScalarField {
        &self.entries[packed(i, j)]
    }

    pub fn eval(&self, p: &[f64]) -> Result<Vec<Vec<f64>>> {
        let mut out = vec![vec![0.0; self.dim]; self.dim];
        for i in 0..self.dim {
            for j in 0..=i {
                let v = self.get(i, j).eval(p)?;
                out[i][j] = v;
                out[j][i] = v;
            }
        }
        Ok(out)
    }

    pub fn rows(&self) -> Vec<Vec<ScalarField>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j).clone()).collect())
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Pointwise transformation laws
// ---------------------------------------------------------------------------

/// Jacobian data of a transition at a source point `p`: forward Jacobian at
/// `p`, plus first and second derivatives of the declared inverse at the
/// image point `q = T(p)`.
struct TransitionJets {
    q: Vec<f64>,
    fwd: Vec<Vec<f64>>,          // fwd[k][c]      = dx'^k / dx^c   at p
    inv: Vec<Vec<f64>>,          // inv[a][i]      = dx^a  / dx'^i  at q
    inv_hess: Vec<Vec<Vec<f64>>>, // inv_hess[c][i][j] = d2 x^c / dx'^i dx'^j
}

fn transition_jets(t: &TransitionMap, p: &[f64]) -> Result<TransitionJets> {
    let n = t.dim();
    let (fwd, _, _) = t.jacobian(p)?;
    let q = t.apply(p)?;
    let mut inv = vec![vec![0.0; n]; n];
    let mut inv_hess = vec![vec![vec![0.0; n]; n]; n];
    for a in 0..n {
        let jet = t.inverse_fields()[a].eval_jet(&q)?;
        for i in 0..n {
            inv[a][i] = jet.grad[i];
            for j in 0..n {
                inv_hess[a][i][j] = jet.hess(i, j);
            }
        }
    }
    Ok(TransitionJets { q, fwd, inv, inv_hess })
}

/// Standard second-order transformation law for connection coefficients:
/// Γ'^k_ij = (dx'^k/dx^c)(dx^a/dx'^i)(dx^b/dx'^j) Γ^c_ab
///         + (dx'^k/dx^c)(d²x^c/dx'^i dx'^j).
/// Input values are taken at `p`; the result lives at `T(p)`, which is
/// returned alongside.
pub fn transform_connection_values(
    t: &TransitionMap,
    p: &[f64],
    gamma: &dyn Fn(usize, usize, usize) -> f64,
) -> Result<(Vec<f64>, Vec<Vec<Vec<f64>>>)> {
    let n = t.dim();
    let jets = transition_jets(t, p)?;
    let mut out = vec![vec![vec![0.0; n]; n]; n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..=i {
                let mut acc = 0.0;
                for c in 0..n {
                    let mut inner = jets.inv_hess[c][i][j];
                    for a in 0..n {
                        for b in 0..n {
                            inner += jets.inv[a][i] * jets.inv[b][j] * gamma(c, a, b);
                        }
                    }
                    acc += jets.fwd[k][c] * inner;
                }
                out[k][i][j] = acc;
                out[k][j][i] = acc;
            }
        }
    }
    Ok((jets.q, out))
}

/// Contravariant rank-2 law: S'^{ij}(T(p)) = (dx'^i/dx^a)(dx'^j/dx^b) S^{ab}(p).
pub fn transform_tensor2_values(
    t: &TransitionMap,
    p: &[f64],
    s: &dyn Fn(usize, usize) -> f64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = t.dim();
    let (fwd, _, _) = t.jacobian(p)?;
    let q = t.apply(p)?;
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for a in 0..n {
                for b in 0..n {
                    acc += fwd[i][a] * fwd[j][b] * s(a, b);
                }
            }
            out[i][j] = acc;
        }
    }
    Ok((q, out))
}

/// Covariant rank-1 law: ϑ'_i(T(p)) = (dx^a/dx'^i) ϑ_a(p).
pub fn transform_oneform_values(
    t: &TransitionMap,
    p: &[f64],
    theta: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = t.dim();
    t.jacobian(p)?; // singularity check
    let q = t.apply(p)?;
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        for (a, th) in theta.iter().enumerate() {
            acc += t.inverse_fields()[a].eval_jet(&q)?.grad[i] * th;
        }
        out[i] = acc;
    }
    Ok((q, out))
}

// ---------------------------------------------------------------------------
// Field-level (symbolic) transformation laws
// ---------------------------------------------------------------------------

/// `f ∘ T⁻¹`: the scalar `f` re-expressed on the target chart.
pub fn transform_scalar_field(t: &TransitionMap, f: &ScalarField) -> Result<ScalarField> {
    f.compose(t.inverse_fields())
}

/// Forward Jacobian entries re-expressed on the target chart:
/// row k, column c holds (dx'^k/dx^c) ∘ T⁻¹.
fn forward_jacobian_on_target(t: &TransitionMap) -> Result<Vec<Vec<ScalarField>>> {
    let n = t.dim();
    let mut rows = Vec::with_capacity(n);
    for k in 0..n {
        let mut row = Vec::with_capacity(n);
        for c in 0..n {
            row.push(t.forward()[k].derive(c).compose(t.inverse_fields())?);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Connection coefficients as closed-form fields on the target chart.
pub fn transform_connection_fields(
    t: &TransitionMap,
    gamma: &dyn Fn(usize, usize, usize) -> ScalarField,
) -> Result<Vec<Vec<Vec<ScalarField>>>> {
    let n = t.dim();
    let fwd = forward_jacobian_on_target(t)?;
    let inv: Vec<Vec<ScalarField>> = (0..n)
        .map(|a| (0..n).map(|i| t.inverse_fields()[a].derive(i)).collect())
        .collect();
    let gamma_on_target: Vec<Vec<Vec<ScalarField>>> = (0..n)
        .map(|c| {
            (0..n)
                .map(|a| {
                    (0..n)
                        .map(|b| gamma(c, a, b).compose(t.inverse_fields()))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = vec![vec![vec![ScalarField::zero(n); n]; n]; n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..=i {
                let mut acc = ScalarField::zero(n);
                for c in 0..n {
                    let mut inner = t.inverse_fields()[c].derive(i).derive(j);
                    for a in 0..n {
                        for b in 0..n {
                            if gamma_on_target[c][a][b].is_zero() {
                                continue;
                            }
                            inner = inner.add_field(
                                &inv[a][i].mul_field(&inv[b][j]).mul_field(&gamma_on_target[c][a][b]),
                            );
                        }
                    }
                    acc = acc.add_field(&fwd[k][c].mul_field(&inner));
                }
                out[k][i][j] = acc.clone();
                out[k][j][i] = acc;
            }
        }
    }
    Ok(out)
}

pub fn transform_tensor2_fields(
    t: &TransitionMap,
    s: &SymmetricMatrixField,
) -> Result<SymmetricMatrixField> {
    let n = t.dim();
    let fwd = forward_jacobian_on_target(t)?;
    let s_on_target: Vec<Vec<ScalarField>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| s.get(a, b).compose(t.inverse_fields()))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = vec![vec![ScalarField::zero(n); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut acc = ScalarField::zero(n);
            for a in 0..n {
                for b in 0..n {
                    if s_on_target[a][b].is_zero() {
                        continue;
                    }
                    acc = acc.add_field(&fwd[i][a].mul_field(&fwd[j][b]).mul_field(&s_on_target[a][b]));
                }
            }
            rows[i][j] = acc.clone();
            rows[j][i] = acc;
        }
    }
    SymmetricMatrixField::from_full(rows)
}

pub fn transform_oneform_fields(
    t: &TransitionMap,
    theta: &[ScalarField],
) -> Result<Vec<ScalarField>> {
    let n = t.dim();
    let theta_on_target: Vec<ScalarField> = theta
        .iter()
        .map(|th| th.compose(t.inverse_fields()))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = ScalarField::zero(n);
        for (a, th) in theta_on_target.iter().enumerate() {
            if th.is_zero() {
                continue;
            }
            acc = acc.add_field(&t.inverse_fields()[a].derive(i).mul_field(th));
        }
        out.push(acc);
    }
    Ok(out)
}

/// Parse a vector of expression strings into fields of the given dimension.
pub fn parse_components(texts: &[&str], dim: usize) -> Result<Vec<ScalarField>> {
    texts.iter().map(|t| expr::parse(t, dim)).collect()
}

/// Convenience: well-known transitions used across the test suites.
pub mod stock {
    use super::*;

    /// Polar (r, θ) to Cartesian (x, y); valid for r > 0, θ ∈ (0, π/2).
    pub fn polar_to_cartesian() -> TransitionMap {
        let forward = parse_components(&["x0*cos(x1)", "x0*sin(x1)"], 2).unwrap();
        let inverse = parse_components(&["sqrt(x0^2 + x1^2)", "atan(x1/x0)"], 2).unwrap();
        TransitionMap::new(forward, inverse).unwrap()
    }

    /// (x, y) -> (exp(x), y + x^2): orientation-preserving with a
    /// non-constant Jacobian determinant and closed-form inverse.
    pub fn exp_shear() -> TransitionMap {
        let forward = parse_components(&["exp(x0)", "x1 + x0^2"], 2).unwrap();
        let inverse = parse_components(&["log(x0)", "x1 - log(x0)^2"], 2).unwrap();
        TransitionMap::new(forward, inverse).unwrap()
    }

    /// Linear map with determinant 2.
    pub fn linear_det2() -> TransitionMap {
        let forward = parse_components(&["2*x0 + x1", "x0 + x1"], 2).unwrap();
        let inverse = parse_components(&["x0 - x1", "2*x1 - x0"], 2).unwrap();
        TransitionMap::new(forward, inverse).unwrap()
    }
}
