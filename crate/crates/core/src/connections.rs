//! Linear connections, Thomas projective symbols, projective shifts,
//! curvature data, Ricci, and Cartan normality.
//!
//! Coefficient arrays are stored with the lower index pair packed
//! symmetrically, so torsion-freeness is a property of the representation.
//! All coefficients are closed-form fields and stay re-differentiable.

use crate::error::{Error, Result};
use crate::expr::ScalarField;
use crate::geometry::{
    det_field, inverse_field, transform_connection_fields, transform_connection_values,
    SymmetricMatrixField, TransitionMap,
};

fn packed(i: usize, j: usize) -> usize {
    let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
    hi * (hi + 1) / 2 + lo
}

/// A torsion-free linear connection: coefficients Γ^k_ij symmetric in (i, j).
#[derive(Debug, Clone)]
pub struct Connection {
    dim: usize,
    // coeffs[k * pairs + packed(i, j)]
    coeffs: Vec<ScalarField>,
}

impl Connection {
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize, usize) -> ScalarField) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall {
                dim,
                context: "connections need n >= 2".into(),
            });
        }
        let pairs = dim * (dim + 1) / 2;
        let mut coeffs = Vec::with_capacity(dim * pairs);
        for k in 0..dim {
            for i in 0..dim {
                for j in 0..=i {
                    coeffs.push(f(k, i, j));
                }
            }
        }
        Ok(Connection { dim, coeffs })
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Self::from_fn(dim, |_, _, _| ScalarField::zero(dim))
    }

    /// Build from a full `[k][i][j]` array. The (i, j) / (j, i) entries must
    /// be structurally equal expressions — torsion is rejected up front.
    pub fn from_full(rows: Vec<Vec<Vec<ScalarField>>>) -> Result<Self> {
        let dim = rows.len();
        for (k, block) in rows.iter().enumerate() {
            if block.len() != dim || block.iter().any(|r| r.len() != dim) {
                return Err(Error::ShapeMismatch(format!(
                    "connection block {k} is not {dim}x{dim}"
                )));
            }
            for i in 0..dim {
                for j in 0..i {
                    if block[i][j] != block[j][i] {
                        return Err(Error::NotSymmetric {
                            defect: f64::NAN,
                            point: vec![k as f64, i as f64, j as f64],
                        });
                    }
                }
            }
        }
        Self::from_fn(dim, |k, i, j| rows[k][i][j].clone())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeff(&self, k: usize, i: usize, j: usize) -> &ScalarField {
        let pairs = self.dim * (self.dim + 1) / 2;
        &self.coeffs[k * pairs + packed(i, j)]
    }

    pub fn eval(&self, p: &[f64]) -> Result<Vec<Vec<Vec<f64>>>> {
        let n = self.dim;
        let mut out = vec![vec![vec![0.0; n]; n]; n];
        for k in 0..n {
            for i in 0..n {
                for j in 0..=i {
                    let v = self.coeff(k, i, j).eval(p)?;
                    out[k][i][j] = v;
                    out[k][j][i] = v;
                }
            }
        }
        Ok(out)
    }

    /// Pointwise coordinate change; returns the target point and the
    /// transformed coefficients there.
    pub fn transform_at(&self, t: &TransitionMap, p: &[f64]) -> Result<(Vec<f64>, Vec<Vec<Vec<f64>>>)> {
        let vals = self.eval(p)?;
        transform_connection_values(t, p, &|k, i, j| vals[k][i][j])
    }

    /// Field-level coordinate change: the same connection expressed on the
    /// target chart, still closed-form.
    pub fn transform_fields(&self, t: &TransitionMap) -> Result<Connection> {
        let out = transform_connection_fields(t, &|k, i, j| self.coeff(k, i, j).clone())?;
        Connection::from_full(out)
    }

    /// Trace Γ^l_{l j} as a field, for each j.
    pub fn trace_oneform(&self) -> Vec<ScalarField> {
        (0..self.dim)
            .map(|j| {
                let mut acc = ScalarField::zero(self.dim);
                for l in 0..self.dim {
                    acc = acc.add_field(self.coeff(l, l, j));
                }
                acc
            })
            .collect()
    }
}

/// Thomas projective symbols: trace-free, symmetric Π^k_ij representing a
/// projective equivalence class.
#[derive(Debug, Clone)]
pub struct ProjectiveClass {
    inner: Connection,
}

impl ProjectiveClass {
    /// Wrap coefficients, checking the trace-free invariant numerically at
    /// the given sample points.
    pub fn new(conn: Connection, points: &[Vec<f64>]) -> Result<Self> {
        let n = conn.dim();
        for p in points {
            for j in 0..n {
                let mut trace = 0.0;
                for l in 0..n {
                    trace += conn.coeff(l, l, j).eval(p)?;
                }
                if trace.abs() > 1e-10 {
                    return Err(Error::NotTraceFree { defect: trace.abs(), point: p.clone() });
                }
            }
        }
        Ok(ProjectiveClass { inner: conn })
    }

    pub(crate) fn from_connection_unchecked(conn: Connection) -> Self {
        ProjectiveClass { inner: conn }
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn coeff(&self, k: usize, i: usize, j: usize) -> &ScalarField {
        self.inner.coeff(k, i, j)
    }

    pub fn eval(&self, p: &[f64]) -> Result<Vec<Vec<Vec<f64>>>> {
        self.inner.eval(p)
    }

    /// The symbols viewed as coefficients of an honest connection (a section
    /// of the quotient: pi_symbols of this connection is the class again).
    pub fn as_connection(&self) -> &Connection {
        &self.inner
    }
}

/// Levi-Civita coefficients Γ^k_ij = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij),
/// built symbolically from the metric components.
pub fn levi_civita(g: &SymmetricMatrixField, sample: &[Vec<f64>]) -> Result<Connection> {
    let n = g.dim();
    let rows = g.rows();
    let det = det_field(&rows);
    for p in sample {
        if det.eval(p)?.abs() < 1e-12 {
            return Err(Error::SingularMetric { point: p.clone() });
        }
    }
    let ginv = inverse_field(&rows);
    Connection::from_fn(n, |k, i, j| {
        let mut acc = ScalarField::zero(n);
        for l in 0..n {
            let bracket = g
                .get(j, l)
                .derive(i)
                .add_field(&g.get(i, l).derive(j))
                .sub_field(&g.get(i, j).derive(l));
            acc = acc.add_field(&ginv[k][l].mul_field(&bracket));
        }
        acc.scale(0.5)
    })
}

/// Π^k_ij = Γ^k_ij − (1/(n+1))(δ^k_i Γ^l_lj + δ^k_j Γ^l_il): the trace-free
/// part representing the projective class.
pub fn pi_symbols(conn: &Connection) -> ProjectiveClass {
    let n = conn.dim();
    let trace = conn.trace_oneform();
    let factor = 1.0 / (n as f64 + 1.0);
    let inner = Connection::from_fn(n, |k, i, j| {
        let mut acc = conn.coeff(k, i, j).clone();
        if k == i {
            acc = acc.sub_field(&trace[j].scale(factor));
        }
        if k == j {
            acc = acc.sub_field(&trace[i].scale(factor));
        }
        acc
    })
    .expect("dimension already validated");
    ProjectiveClass::from_connection_unchecked(inner)
}

/// Γ̄^k_ij = Γ^k_ij + δ^k_i ϑ_j + δ^k_j ϑ_i — the 1-form shift that moves
/// inside a projective class.
pub fn projective_shift(conn: &Connection, theta: &[ScalarField]) -> Result<Connection> {
    let n = conn.dim();
    if theta.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "1-form has {} components, expected {n}",
            theta.len()
        )));
    }
    Connection::from_fn(n, |k, i, j| {
        let mut acc = conn.coeff(k, i, j).clone();
        if k == i {
            acc = acc.add_field(&theta[j]);
        }
        if k == j {
            acc = acc.add_field(&theta[i]);
        }
        acc
    })
}

/// Curvature two-form components.
///
/// A 2-form written B_kl dx^k ∧ dx^l stores the antisymmetrisation
/// (B − Bᵀ)/2 in the (k, l) slots throughout.
#[derive(Debug, Clone)]
pub struct CurvatureData {
    dim: usize,
    /// A^i_jkl, flat index ((i·n + j)·n + k)·n + l
    a: Vec<ScalarField>,
    /// A^0_ikl from Ω^0_i, flat index (i·n + k)·n + l
    a0: Vec<ScalarField>,
    /// A_jk = A^i_jki
    trace: Vec<Vec<ScalarField>>,
}

impl CurvatureData {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn a(&self, i: usize, j: usize, k: usize, l: usize) -> &ScalarField {
        let n = self.dim;
        &self.a[((i * n + j) * n + k) * n + l]
    }

    pub fn a0(&self, i: usize, k: usize, l: usize) -> &ScalarField {
        let n = self.dim;
        &self.a0[(i * n + k) * n + l]
    }

    pub fn trace(&self, j: usize, k: usize) -> &ScalarField {
        &self.trace[j][k]
    }
}

fn antisymmetrise(
    n: usize,
    raw: impl Fn(usize, usize) -> ScalarField,
) -> Vec<Vec<ScalarField>> {
    let mut out = vec![vec![ScalarField::zero(n); n]; n];
    for k in 0..n {
        for l in 0..n {
            if k == l {
                continue;
            }
            out[k][l] = raw(k, l).sub_field(&raw(l, k)).scale(0.5);
        }
    }
    out
}

/// Curvature of the projective connection (ω^i_j = Γ^i_jk dx^k, ω^0_j):
///
///   Ω^i_j = dω^i_j − ω^i_k ∧ ω^k_j − ω^0_j ∧ dx^i − δ^i_j ω^0_k ∧ dx^k,
///   Ω^0_i = ω^0_j ∧ ω^j_i,
///
/// with components A^i_jkl extracted so that A is antisymmetric in (k, l),
/// and the trace A_jk = A^i_jki.
pub fn curvature(conn: &Connection, omega0: &[Vec<ScalarField>]) -> Result<CurvatureData> {
    let n = conn.dim();
    if omega0.len() != n || omega0.iter().any(|r| r.len() != n) {
        return Err(Error::ShapeMismatch("omega0 must be an n x n coefficient array".into()));
    }
    let mut a = Vec::with_capacity(n * n * n * n);
    for i in 0..n {
        for j in 0..n {
            let raw = |k: usize, l: usize| -> ScalarField {
                // dω^i_j
                let mut acc = conn.coeff(i, j, l).derive(k);
                // − ω^i_p ∧ ω^p_j
                for p in 0..n {
                    acc = acc.sub_field(&conn.coeff(i, p, k).mul_field(conn.coeff(p, j, l)));
                }
                // − ω^0_j ∧ dx^i  →  γ^0_jk on the (k, l = i) slot
                if l == i {
                    acc = acc.sub_field(&omega0[j][k]);
                }
                // − δ^i_j ω^0_m ∧ dx^m  →  γ^0_lk on the (k, l) slot
                if i == j {
                    acc = acc.sub_field(&omega0[l][k]);
                }
                acc
            };
            let anti = antisymmetrise(n, raw);
            for row in anti {
                a.extend(row);
            }
        }
    }

    let mut a0 = Vec::with_capacity(n * n * n);
    for i in 0..n {
        let raw = |k: usize, l: usize| -> ScalarField {
            // ω^0_j ∧ ω^j_i = γ^0_jk Γ^j_il dx^k ∧ dx^l
            let mut acc = ScalarField::zero(n);
            for j in 0..n {
                acc = acc.add_field(&omega0[j][k].mul_field(conn.coeff(j, i, l)));
            }
            acc
        };
        let anti = antisymmetrise(n, raw);
        for row in anti {
            a0.extend(row);
        }
    }

    let data = CurvatureData { dim: n, a, a0, trace: vec![] };
    let mut trace = vec![vec![ScalarField::zero(n); n]; n];
    for j in 0..n {
        for k in 0..n {
            let mut acc = ScalarField::zero(n);
            for i in 0..n {
                acc = acc.add_field(data.a(i, j, k, i));
            }
            trace[j][k] = acc;
        }
    }
    Ok(CurvatureData { trace, ..data })
}

/// Ricci tensor fields: dω^i_j − ω^i_p ∧ ω^p_j = R^i_jkl dx^k ∧ dx^l with
/// R_jk = R^i_jki, in the same wedge-component convention as `curvature`.
pub fn ricci(conn: &Connection) -> Vec<Vec<ScalarField>> {
    let n = conn.dim();
    let mut out = vec![vec![ScalarField::zero(n); n]; n];
    for j in 0..n {
        for k in 0..n {
            // R_jk = Σ_i ½ (raw^i_j[k][i] − raw^i_j[i][k])
            let mut acc = ScalarField::zero(n);
            for i in 0..n {
                let mut fwd = conn.coeff(i, j, i).derive(k);
                let mut rev = conn.coeff(i, j, k).derive(i);
                for p in 0..n {
                    fwd = fwd.sub_field(&conn.coeff(i, p, k).mul_field(conn.coeff(p, j, i)));
                    rev = rev.sub_field(&conn.coeff(i, p, i).mul_field(conn.coeff(p, j, k)));
                }
                acc = acc.add_field(&fwd.sub_field(&rev).scale(0.5));
            }
            out[j][k] = acc;
        }
    }
    out
}

/// The normal ω^0 of a connection with symmetric Ricci:
/// γ^0_jk = (2/(n−1)) R_jk. Symmetry of R is checked at the sample points
/// (tolerance 1e-8) and failure is reported, since the normal form does not
/// exist otherwise.
pub fn normal_omega0(conn: &Connection, points: &[Vec<f64>]) -> Result<Vec<Vec<ScalarField>>> {
    let n = conn.dim();
    let r = ricci(conn);
    let mut worst: f64 = 0.0;
    for p in points {
        for j in 0..n {
            for k in 0..j {
                let defect = (r[j][k].eval(p)? - r[k][j].eval(p)?).abs();
                worst = worst.max(defect);
            }
        }
    }
    if worst > 1e-8 {
        return Err(Error::AsymmetricRicci { defect: worst, tolerance: 1e-8 });
    }
    let factor = 2.0 / (n as f64 - 1.0);
    Ok(r.into_iter()
        .map(|row| row.into_iter().map(|f| f.scale(factor)).collect())
        .collect())
}

/// Max |A_jk| over the sample points: zero (within tolerance) exactly when
/// the projective connection is normal there.
pub fn normality_defect(
    conn: &Connection,
    omega0: &[Vec<ScalarField>],
    points: &[Vec<f64>],
) -> Result<f64> {
    let data = curvature(conn, omega0)?;
    let n = conn.dim();
    let mut worst: f64 = 0.0;
    for p in points {
        for j in 0..n {
            for k in 0..n {
                worst = worst.max(data.trace(j, k).eval(p)?.abs());
            }
        }
    }
    Ok(worst)
}

/// Zero ω^0 coefficient array, for feeding `curvature` a plain linear
/// connection.
pub fn zero_omega0(dim: usize) -> Vec<Vec<ScalarField>> {
    vec![vec![ScalarField::zero(dim); dim]; dim]
}

/// Local data (φ^a_i, ψ^a_bi, η_bi) of a projective Ehresmann connection in
/// a rank-m bundle: the horizontal distribution is the kernel of
/// Ψ^a = dξ^a − (φ^a_i + ψ^a_bi ξ^b + η_bi ξ^a ξ^b) dx^i.
#[derive(Debug, Clone)]
pub struct ProjectiveEhresmannData {
    base_dim: usize,
    fibre_dim: usize,
    /// φ^a_i: [fibre][base]
    pub phi: Vec<Vec<ScalarField>>,
    /// ψ^a_bi: [fibre][fibre][base]
    pub psi: Vec<Vec<Vec<ScalarField>>>,
    /// η_bi: [fibre][base]
    pub eta: Vec<Vec<ScalarField>>,
}

impl ProjectiveEhresmannData {
    pub fn new(
        phi: Vec<Vec<ScalarField>>,
        psi: Vec<Vec<Vec<ScalarField>>>,
        eta: Vec<Vec<ScalarField>>,
    ) -> Result<Self> {
        let fibre_dim = phi.len();
        if fibre_dim == 0 {
            return Err(Error::ShapeMismatch("empty fibre".into()));
        }
        let base_dim = phi[0].len();
        let shapes_ok = phi.iter().all(|r| r.len() == base_dim)
            && psi.len() == fibre_dim
            && psi.iter().all(|m| m.len() == fibre_dim && m.iter().all(|r| r.len() == base_dim))
            && eta.len() == fibre_dim
            && eta.iter().all(|r| r.len() == base_dim);
        if !shapes_ok {
            return Err(Error::ShapeMismatch(
                "Ehresmann data shapes must be phi[m][n], psi[m][m][n], eta[m][n]".into(),
            ));
        }
        Ok(ProjectiveEhresmannData { base_dim, fibre_dim, phi, psi, eta })
    }

    pub fn zero(base_dim: usize, fibre_dim: usize) -> Self {
        let z = ScalarField::zero(base_dim);
        ProjectiveEhresmannData {
            base_dim,
            fibre_dim,
            phi: vec![vec![z.clone(); base_dim]; fibre_dim],
            psi: vec![vec![vec![z.clone(); base_dim]; fibre_dim]; fibre_dim],
            eta: vec![vec![z; base_dim]; fibre_dim],
        }
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn fibre_dim(&self) -> usize {
        self.fibre_dim
    }

    /// Fibre velocity dξ^a/dt for base point x, fibre point ξ, base velocity v.
    pub fn fibre_velocity(&self, x: &[f64], xi: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let m = self.fibre_dim;
        let n = self.base_dim;
        let mut out = vec![0.0; m];
        for a in 0..m {
            let mut acc = 0.0;
            for i in 0..n {
                let mut f = self.phi[a][i].eval(x)?;
                for b in 0..m {
                    f += self.psi[a][b][i].eval(x)? * xi[b];
                    f += self.eta[b][i].eval(x)? * xi[a] * xi[b];
                }
                acc += f * v[i];
            }
            out[a] = acc;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::geometry::{stock, Chart};

    fn sphere_metric() -> SymmetricMatrixField {
        SymmetricMatrixField::from_full(vec![
            vec![parse("1", 2).unwrap(), parse("0", 2).unwrap()],
            vec![parse("0", 2).unwrap(), parse("sin(x0)^2", 2).unwrap()],
        ])
        .unwrap()
    }

    fn polar_metric() -> SymmetricMatrixField {
        SymmetricMatrixField::from_full(vec![
            vec![parse("1", 2).unwrap(), parse("0", 2).unwrap()],
            vec![parse("0", 2).unwrap(), parse("x0^2", 2).unwrap()],
        ])
        .unwrap()
    }

    fn sphere_points() -> Vec<Vec<f64>> {
        Chart::new(vec![(0.4, 1.2), (0.1, 1.5)]).unwrap().sample_points(3, 10)
    }

    #[test]
    fn levi_civita_flat_is_zero() {
        let g = SymmetricMatrixField::identity(2);
        let conn = levi_civita(&g, &sphere_points()).unwrap();
        for p in sphere_points() {
            let vals = conn.eval(&p).unwrap();
            for k in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        assert_eq!(vals[k][i][j], 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn levi_civita_polar_plane() {
        let conn = levi_civita(&polar_metric(), &sphere_points()).unwrap();
        for p in [[1.3, 0.4], [2.0, 1.0]] {
            let vals = conn.eval(&p).unwrap();
            let r = p[0];
            assert!((vals[0][1][1] - (-r)).abs() < 1e-12, "Γ^0_11");
            assert!((vals[1][0][1] - 1.0 / r).abs() < 1e-12, "Γ^1_01");
            assert!(vals[0][0][0].abs() < 1e-12);
            assert!(vals[1][0][0].abs() < 1e-12);
            assert!(vals[1][1][1].abs() < 1e-12);
        }
    }

    #[test]
    fn levi_civita_round_sphere() {
        let conn = levi_civita(&sphere_metric(), &sphere_points()).unwrap();
        for p in [[0.7, 0.3], [1.1, 1.2]] {
            let vals = conn.eval(&p).unwrap();
            let th = p[0];
            assert!((vals[0][1][1] - (-th.sin() * th.cos())).abs() < 1e-12);
            assert!((vals[1][0][1] - th.cos() / th.sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn levi_civita_rejects_singular_metric() {
        let g = SymmetricMatrixField::from_full(vec![
            vec![parse("x0", 2).unwrap(), parse("0", 2).unwrap()],
            vec![parse("0", 2).unwrap(), parse("x0", 2).unwrap()],
        ])
        .unwrap();
        let points = vec![vec![0.0, 0.5]];
        assert!(matches!(levi_civita(&g, &points), Err(Error::SingularMetric { .. })));
    }

    /// Direct substitution of the trace-removal formula, coded from values.
    fn pi_oracle(vals: &[Vec<Vec<f64>>]) -> Vec<Vec<Vec<f64>>> {
        let n = vals.len();
        let factor = 1.0 / (n as f64 + 1.0);
        let trace: Vec<f64> =
            (0..n).map(|j| (0..n).map(|l| vals[l][l][j]).sum()).collect();
        let mut out = vec![vec![vec![0.0; n]; n]; n];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = vals[k][i][j];
                    if k == i {
                        v -= factor * trace[j];
                    }
                    if k == j {
                        v -= factor * trace[i];
                    }
                    out[k][i][j] = v;
                }
            }
        }
        out
    }

    #[test]
    fn pi_of_zero_is_zero() {
        let pi = pi_symbols(&Connection::zero(2).unwrap());
        assert!(pi.eval(&[0.3, 0.4]).unwrap().iter().flatten().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn pi_of_shifted_flat_is_zero() {
        let theta = vec![parse("x1", 2).unwrap(), parse("x0^2", 2).unwrap()];
        let shifted = projective_shift(&Connection::zero(2).unwrap(), &theta).unwrap();
        let pi = pi_symbols(&shifted);
        for p in sphere_points() {
            for v in pi.eval(&p).unwrap().iter().flatten().flatten() {
                assert!(v.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pi_matches_direct_substitution_oracle() {
        let conn = levi_civita(&polar_metric(), &sphere_points()).unwrap();
        let pi = pi_symbols(&conn);
        for p in [[1.2, 0.5], [1.8, 0.9]] {
            let expected = pi_oracle(&conn.eval(&p).unwrap());
            let got = pi.eval(&p).unwrap();
            for k in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        assert!((got[k][i][j] - expected[k][i][j]).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn shift_by_zero_is_identity() {
        let conn = levi_civita(&polar_metric(), &sphere_points()).unwrap();
        let zero = vec![ScalarField::zero(2); 2];
        let shifted = projective_shift(&conn, &zero).unwrap();
        for p in [[1.2, 0.5]] {
            assert_eq!(conn.eval(&p).unwrap(), shifted.eval(&p).unwrap());
        }
    }

    #[test]
    fn shift_of_flat_by_dx0() {
        let theta = vec![parse("1", 2).unwrap(), parse("0", 2).unwrap()];
        let shifted = projective_shift(&Connection::zero(2).unwrap(), &theta).unwrap();
        let vals = shifted.eval(&[0.7, -0.3]).unwrap();
        assert_eq!(vals[0][0][0], 2.0);
        assert_eq!(vals[1][0][1], 1.0);
        assert_eq!(vals[1][1][0], 1.0);
        assert_eq!(vals[0][0][1], 0.0);
        assert_eq!(vals[0][1][1], 0.0);
        assert_eq!(vals[1][0][0], 0.0);
        assert_eq!(vals[1][1][1], 0.0);
        assert_eq!(vals[0][1][0], 0.0);
    }

    #[test]
    fn pi_is_shift_invariant() {
        let conn = levi_civita(&sphere_metric(), &sphere_points()).unwrap();
        let theta = vec![parse("sin(x1)", 2).unwrap(), parse("x0*x1", 2).unwrap()];
        let pi_a = pi_symbols(&conn);
        let pi_b = pi_symbols(&projective_shift(&conn, &theta).unwrap());
        for p in sphere_points().into_iter().take(20) {
            let a = pi_a.eval(&p).unwrap();
            let b = pi_b.eval(&p).unwrap();
            for k in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        assert!((a[k][i][j] - b[k][i][j]).abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn pi_reconstruction_is_identity() {
        // Π is a section of the quotient: treating the symbols as a
        // connection and re-projecting changes nothing.
        let conn = levi_civita(&sphere_metric(), &sphere_points()).unwrap();
        let pi = pi_symbols(&conn);
        let again = pi_symbols(pi.as_connection());
        for p in sphere_points().into_iter().take(10) {
            let a = pi.eval(&p).unwrap();
            let b = again.eval(&p).unwrap();
            for k in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        assert!((a[k][i][j] - b[k][i][j]).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn projective_class_trace_check() {
        let conn = levi_civita(&polar_metric(), &sphere_points()).unwrap();
        // raw Levi-Civita is not trace-free
        assert!(matches!(
            ProjectiveClass::new(conn.clone(), &sphere_points()),
            Err(Error::NotTraceFree { .. })
        ));
        // its symbols are
        let pi = pi_symbols(&conn);
        assert!(ProjectiveClass::new(pi.as_connection().clone(), &sphere_points()).is_ok());
    }

    #[test]
    fn pi_commutes_with_coordinate_change() {
        // pi(transform(Γ)) = pi(transform(Π(Γ))) — the trace parts die.
        let conn = levi_civita(&polar_metric(), &sphere_points()).unwrap();
        let t = stock::polar_to_cartesian();
        let pi = pi_symbols(&conn);
        for p in [[1.2, 0.5], [1.7, 0.8]] {
            let (_, gamma_t) = conn.transform_at(&t, &p).unwrap();
            let (_, pi_t) = pi.as_connection().transform_at(&t, &p).unwrap();
            let a = pi_oracle(&gamma_t);
            let b = pi_oracle(&pi_t);
            for k in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        assert!((a[k][i][j] - b[k][i][j]).abs() < 1e-8);
                    }
                }
            }
        }
    }

    // -----------------------------------------------------------------
    // curvature / Ricci / normality
    // -----------------------------------------------------------------

    /// Independent direct substitution of the displayed curvature formula,
    /// evaluated from coefficient jets at a single point.
    fn curvature_trace_oracle(
        conn: &Connection,
        omega0: &[Vec<ScalarField>],
        p: &[f64],
    ) -> Vec<Vec<f64>> {
        let n = conn.dim();
        let vals = conn.eval(p).unwrap();
        let mut domega = vec![vec![vec![vec![0.0; n]; n]; n]; n]; // [i][j][k][l] = ∂_k Γ^i_jl
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let jet = conn.coeff(i, j, l).eval_jet(p).unwrap();
                    for k in 0..n {
                        domega[i][j][k][l] = jet.grad[k];
                    }
                }
            }
        }
        let om = |j: usize, k: usize| omega0[j][k].eval(p).unwrap();
        let raw = |i: usize, j: usize, k: usize, l: usize| {
            let mut acc = domega[i][j][k][l];
            for q in 0..n {
                acc -= vals[i][q][k] * vals[q][j][l];
            }
            if l == i {
                acc -= om(j, k);
            }
            if i == j {
                acc -= om(l, k);
            }
            acc
        };
        let mut trace = vec![vec![0.0; n]; n];
        for j in 0..n {
            for k in 0..n {
                let mut acc = 0.0;
                for i in 0..n {
                    acc += 0.5 * (raw(i, j, k, i) - raw(i, j, i, k));
                }
                trace[j][k] = acc;
            }
        }
        trace
    }

    #[test]
    fn flat_curvature_vanishes() {
        let conn = Connection::zero(2).unwrap();
        let data = curvature(&conn, &zero_omega0(2)).unwrap();
        let p = [0.4, 0.9];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        assert_eq!(data.a(i, j, k, l).eval(&p).unwrap(), 0.0);
                    }
                    assert_eq!(data.a0(i, j, k).eval(&p).unwrap(), 0.0);
                }
            }
        }
    }

    #[test]
    fn omega0_zero_kills_lower_curvature() {
        let conn = levi_civita(&sphere_metric(), &sphere_points()).unwrap();
        let data = curvature(&conn, &zero_omega0(2)).unwrap();
        for p in sphere_points().into_iter().take(5) {
            for i in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        assert_eq!(data.a0(i, k, l).eval(&p).unwrap(), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn sphere_curvature_matches_direct_substitution() {
        let conn = levi_civita(&sphere_metric(), &sphere_points()).unwrap();
        let omega0 = zero_omega0(2);
        let data = curvature(&conn, &omega0).unwrap();
        for p in sphere_points() {
            let expected = curvature_trace_oracle(&conn, &omega0, &p);
            for j in 0..2 {
                for k in 0..2 {
                    let got = data.trace(j, k).eval(&p).unwrap();
                    assert!((got - expected[j][k]).abs() < 1e-10);
                }
            }
        }
    }

    /// Classical textbook Riemann tensor (∂Γ + ΓΓ convention, Ricci by
    /// contracting the first upper with the first form index). On the unit
    /// round sphere this yields Ricci = g: constant curvature one.
    fn classical_ricci(conn: &Connection, p: &[f64]) -> Vec<Vec<f64>> {
        let n = conn.dim();
        let vals = conn.eval(p).unwrap();
        let d = |i: usize, j: usize, l: usize, k: usize| {
            conn.coeff(i, j, l).derive(k).eval(p).unwrap()
        };
        let riemann = |i: usize, j: usize, k: usize, l: usize| {
            let mut acc = d(i, l, j, k) - d(i, k, j, l);
            for q in 0..n {
                acc += vals[i][k][q] * vals[q][l][j] - vals[i][l][q] * vals[q][k][j];
            }
            acc
        };
        let mut out = vec![vec![0.0; n]; n];
        for j in 0..n {
            for l in 0..n {
                out[j][l] = (0..n).map(|k| riemann(k, j, k, l)).sum();
            }
        }
        out
    }

    #[test]
    fn unit_sphere_is_einstein_in_classical_convention() {
        let conn = levi_civita(&sphere_metric(), &sphere_points()).unwrap();
        let g = sphere_metric();
        for p in sphere_points() {
            let ric = classical_ricci(&conn, &p);
            let gv = g.eval(&p).unwrap();
            for j in 0..2 {
                for k in 0..2 {
                    assert!(
                        (ric[j][k] - gv[j][k]).abs() < 1e-9,
                        "classical Ricci {:?} vs metric {:?} at {p:?}",
                        ric,
                        gv
                    );
                }
            }
        }
    }

    #[test]
    fn ricci_of_flat_is_zero() {
        let r = ricci(&Connection::zero(3).unwrap());
        for row in &r {
            for f in row {
                assert_eq!(f.eval(&[0.1, 0.2, 0.3]).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn ricci_of_levi_civita_is_symmetric() {
        for metric in [sphere_metric(), polar_metric()] {
            let conn = levi_civita(&metric, &sphere_points()).unwrap();
            let r = ricci(&conn);
            for p in sphere_points() {
                for j in 0..2 {
                    for k in 0..2 {
                        let a = r[j][k].eval(&p).unwrap();
                        let b = r[k][j].eval(&p).unwrap();
                        assert!((a - b).abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn sphere_ricci_is_proportional_to_metric_by_oracle() {
        // In the convention fixed here, R_jk must match the independently
        // substituted trace of the same displayed formula; on the sphere it
        // is diagonal in the metric frame.
        let conn = levi_civita(&sphere_metric(), &sphere_points()).unwrap();
        let r = ricci(&conn);
        let omega0 = zero_omega0(2);
        for p in sphere_points() {
            let expected = curvature_trace_oracle(&conn, &omega0, &p);
            for j in 0..2 {
                for k in 0..2 {
                    let got = r[j][k].eval(&p).unwrap();
                    assert!((got - expected[j][k]).abs() < 1e-10);
                }
            }
            assert!(r[0][1].eval(&p).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn normal_omega0_of_flat_is_zero() {
        let om = normal_omega0(&Connection::zero(2).unwrap(), &sphere_points()).unwrap();
        for row in &om {
            for f in row {
                assert_eq!(f.eval(&[0.5, 0.6]).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn normal_omega0_on_sphere_is_twice_ricci() {
        let conn = levi_civita(&sphere_metric(), &sphere_points()).unwrap();
        let om = normal_omega0(&conn, &sphere_points()).unwrap();
        let r = ricci(&conn);
        for p in sphere_points().into_iter().take(5) {
            for j in 0..2 {
                for k in 0..2 {
                    let got = om[j][k].eval(&p).unwrap();
                    let expected = 2.0 * r[j][k].eval(&p).unwrap();
                    assert!((got - expected).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn asymmetric_ricci_is_reported() {
        // Γ^0_00 = x1 has a non-closed trace one-form, so Ricci picks up an
        // antisymmetric part.
        let conn = Connection::from_fn(2, |k, i, j| {
            if (k, i, j) == (0, 0, 0) {
                parse("x1", 2).unwrap()
            } else {
                ScalarField::zero(2)
            }
        })
        .unwrap();
        assert!(matches!(
            normal_omega0(&conn, &sphere_points()),
            Err(Error::AsymmetricRicci { .. })
        ));
    }

    #[test]
    fn normality_closure_on_sphere() {
        let conn = levi_civita(&sphere_metric(), &sphere_points()).unwrap();
        let om = normal_omega0(&conn, &sphere_points()).unwrap();
        let defect = normality_defect(&conn, &om, &sphere_points()).unwrap();
        assert!(defect <= 1e-9, "defect {defect}");
        // flat case
        let flat = Connection::zero(2).unwrap();
        let d0 = normality_defect(&flat, &zero_omega0(2), &sphere_points()).unwrap();
        assert_eq!(d0, 0.0);
        // dropping ω^0 leaves the Ricci trace in A_jk
        let bare = normality_defect(&conn, &zero_omega0(2), &sphere_points()).unwrap();
        assert!(bare > 0.1, "defect without omega0: {bare}");
    }
}
