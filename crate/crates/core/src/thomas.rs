//! The (n+1)-dimensional lifted manifolds, their transition laws, the
//! fibre diffeomorphism between them, and the Thomas lift turning a
//! projective class into an honest linear connection upstairs.
//!
//! Index convention: slot 0 is the fibre coordinate (t > 0 on HAT charts,
//! unconstrained on TILDE charts); base coordinates occupy slots 1..=n.

use crate::connections::{Connection, ProjectiveClass};
use crate::error::{Error, Result};
use crate::expr::{self, ScalarField};
use crate::geometry::TransitionMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftedFlavor {
    /// Fibre coordinate t > 0; densities realise as functions here.
    Hat,
    /// Fibre coordinate x̃⁰ ∈ ℝ; Thomas's construction lives here.
    Tilde,
}

#[derive(Debug, Clone, Copy)]
pub struct LiftedChart {
    base_dim: usize,
    flavor: LiftedFlavor,
}

impl LiftedChart {
    pub fn new(base_dim: usize, flavor: LiftedFlavor) -> Result<Self> {
        if base_dim < 2 {
            return Err(Error::DimensionTooSmall {
                dim: base_dim,
                context: "lifted charts need base dimension n >= 2".into(),
            });
        }
        Ok(LiftedChart { base_dim, flavor })
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn total_dim(&self) -> usize {
        self.base_dim + 1
    }

    pub fn flavor(&self) -> LiftedFlavor {
        self.flavor
    }

    pub fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.total_dim() {
            return Err(Error::ShapeMismatch(format!(
                "lifted point has {} coordinates, expected {}",
                p.len(),
                self.total_dim()
            )));
        }
        if self.flavor == LiftedFlavor::Hat && p[0] <= 0.0 {
            return Err(Error::NonPositiveFibre { t: p[0] });
        }
        Ok(())
    }
}

/// A linear connection on a lifted chart.
#[derive(Debug, Clone)]
pub struct LiftedConnection {
    chart: LiftedChart,
    conn: Connection,
}

impl LiftedConnection {
    pub fn chart(&self) -> LiftedChart {
        self.chart
    }

    pub fn connection(&self) -> &Connection {
        &self.conn
    }

    pub fn coeff(&self, k: usize, i: usize, j: usize) -> &ScalarField {
        self.conn.coeff(k, i, j)
    }

    pub fn eval(&self, p: &[f64]) -> Result<Vec<Vec<Vec<f64>>>> {
        self.chart.check_point(p)?;
        self.conn.eval(p)
    }
}

/// Lift a base transition to the TILDE and HAT charts:
/// x̃'⁰ = x̃⁰ + log J_f and t' = t · J_f, base components untouched.
/// J_f is the Jacobian determinant as a field; transitions are assumed
/// orientation-preserving (det J > 0), so the modulus is the determinant.
pub fn lift_transition(t: &TransitionMap) -> Result<(TransitionMap, TransitionMap)> {
    let n = t.dim();
    let m = n + 1;
    let jf = t.jacobian_det_field();
    let jf_lifted = jf.shift_vars(1, m)?;

    let lift_components = |fields: &[ScalarField]| -> Result<Vec<ScalarField>> {
        fields.iter().map(|f| f.shift_vars(1, m)).collect()
    };
    let fwd_base = lift_components(t.forward())?;
    let inv_base = lift_components(t.inverse_fields())?;

    // J_f ∘ f⁻¹ as a field of the target chart (base slots only)
    let mut inv_map = Vec::with_capacity(m);
    inv_map.push(ScalarField::coordinate(0, m)?);
    inv_map.extend(inv_base.iter().cloned());
    let jf_on_target = jf_lifted.compose(&inv_map)?;

    let fibre = ScalarField::coordinate(0, m)?;

    // TILDE: x̃'⁰ = x̃⁰ + log J_f;   inverse x̃⁰ = x̃'⁰ − log(J_f ∘ f⁻¹)
    let log_jf = ScalarField::new(expr::log(jf_lifted.expr().clone()), m)?;
    let log_jf_target = ScalarField::new(expr::log(jf_on_target.expr().clone()), m)?;
    let mut tilde_fwd = vec![fibre.add_field(&log_jf)];
    tilde_fwd.extend(fwd_base.iter().cloned());
    let mut tilde_inv = vec![fibre.sub_field(&log_jf_target)];
    tilde_inv.extend(inv_base.iter().cloned());
    let tilde = TransitionMap::new(tilde_fwd, tilde_inv)?;

    // HAT: t' = t J_f;   inverse t = t' / (J_f ∘ f⁻¹)
    let mut hat_fwd = vec![fibre.mul_field(&jf_lifted)];
    hat_fwd.extend(fwd_base.iter().cloned());
    let mut hat_inv = vec![fibre.div_field(&jf_on_target)];
    hat_inv.extend(inv_base);
    let hat = TransitionMap::new(hat_fwd, hat_inv)?;

    Ok((tilde, hat))
}

/// The diffeomorphism F: HAT → TILDE as a transition map:
/// fibre t ↦ log t, base coordinates fixed.
pub fn f_transition(base_dim: usize) -> Result<TransitionMap> {
    let m = base_dim + 1;
    let mut fwd = vec![ScalarField::new(expr::log(expr::var(0)), m)?];
    let mut inv = vec![ScalarField::new(expr::exp(expr::var(0)), m)?];
    for i in 1..m {
        fwd.push(ScalarField::coordinate(i, m)?);
        inv.push(ScalarField::coordinate(i, m)?);
    }
    TransitionMap::new(fwd, inv)
}

/// F on points: (t, x) ↦ (log t, x). Requires t > 0.
pub fn f_map(p_hat: &[f64]) -> Result<Vec<f64>> {
    let t = p_hat[0];
    if t <= 0.0 {
        return Err(Error::NonPositiveFibre { t });
    }
    let mut out = p_hat.to_vec();
    out[0] = t.ln();
    Ok(out)
}

/// F⁻¹ on points: (x̃⁰, x) ↦ (exp x̃⁰, x).
pub fn f_inverse(p_tilde: &[f64]) -> Vec<f64> {
    let mut out = p_tilde.to_vec();
    out[0] = out[0].exp();
    out
}

/// Pushforward of a tangent vector under a transition: (dT)·v at p.
pub fn push_forward(t: &TransitionMap, p: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let (jac, _, _) = t.jacobian(p)?;
    Ok(jac
        .iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect())
}

/// Pushforward under F of the weight vector field t ∂/∂t at a HAT point.
/// The result must be (1, 0, …, 0) in TILDE coordinates at every fibre
/// height — that is what distinguishes the weight field from plain ∂/∂t.
pub fn weight_vector_pushforward(p_hat: &[f64]) -> Result<Vec<f64>> {
    let t = p_hat[0];
    if t <= 0.0 {
        return Err(Error::NonPositiveFibre { t });
    }
    let f = f_transition(p_hat.len() - 1)?;
    let mut v = vec![0.0; p_hat.len()];
    v[0] = t;
    push_forward(&f, p_hat, &v)
}

/// The Thomas lift: linear connection coefficients on the TILDE chart built
/// from a projective class,
///
///   Γ̃^k_ij = Π^k_ij                                    (base block),
///   Γ̃^k_i0 = Γ̃^k_0i = −δ^k_i/(n+1)    for i,k = 0..n  (fibre block),
///   Γ̃^0_ij = ((n+1)/(n−1)) (∂_r Π^r_ij − Π^r_si Π^s_rj) (lower block),
///
/// with the stated full range of the fibre block pinning Γ̃^0_00 = −1/(n+1)
/// and Γ̃^k_00 = 0 for k ≠ 0.
pub fn thomas_lift(pi: &ProjectiveClass) -> Result<LiftedConnection> {
    let n = pi.dim();
    let m = n + 1;
    let chart = LiftedChart::new(n, LiftedFlavor::Tilde)?;
    let t2 = -1.0 / (n as f64 + 1.0);
    let t3_factor = (n as f64 + 1.0) / (n as f64 - 1.0);

    // ∂_r Π^r_ij − Π^r_si Π^s_rj on the base chart
    let lower_block = |i: usize, j: usize| -> ScalarField {
        let mut acc = ScalarField::zero(n);
        for r in 0..n {
            acc = acc.add_field(&pi.coeff(r, i, j).derive(r));
            for s in 0..n {
                acc = acc.sub_field(&pi.coeff(r, s, i).mul_field(pi.coeff(s, r, j)));
            }
        }
        acc.scale(t3_factor)
    };

    let conn = Connection::from_fn(m, |k, i, j| {
        // from_fn visits j <= i, so j == 0 covers the whole fibre block
        if j == 0 {
            return ScalarField::constant(if k == i { t2 } else { 0.0 }, m);
        }
        // now i, j >= 1
        if k == 0 {
            lower_block(i - 1, j - 1).shift_vars(1, m).expect("base block fits lifted chart")
        } else {
            pi.coeff(k - 1, i - 1, j - 1)
                .shift_vars(1, m)
                .expect("base block fits lifted chart")
        }
    })?;
    Ok(LiftedConnection { chart, conn })
}

/// The pulled-back connection on the HAT chart: F*∇̃, computed by the
/// generic field-level transformation along F⁻¹ (TILDE → HAT). This is the
/// source of truth; no hand-derived closed form is used.
pub fn hat_connection(pi: &ProjectiveClass) -> Result<LiftedConnection> {
    let tilde = thomas_lift(pi)?;
    let n = pi.dim();
    let to_hat = f_transition(n)?.reversed();
    let conn = tilde.conn.transform_fields(&to_hat)?;
    Ok(LiftedConnection { chart: LiftedChart::new(n, LiftedFlavor::Hat)?, conn })
}
