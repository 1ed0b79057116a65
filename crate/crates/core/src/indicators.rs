//! Capture indicators: the ICI, the ICP, the DCM and the two-sided
//! approximators of `ξ_p`, with the closed-form ICI dynamics used by the
//! controller and by residual checks.

use nalgebra::Vector1;

use crate::error::{Error, Result};
use crate::model::{rk4, ComState, ConstraintSet, ControlInput, Vec2};

/// Instantaneous capture input `ξ = [ξ_p, ξ_λ]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ici {
    pub xi_p: f64,
    pub xi_lambda: f64,
}

impl Ici {
    pub fn as_input(&self) -> ControlInput {
        ControlInput::new(self.xi_p, self.xi_lambda)
    }

    pub fn to_vector(&self) -> Vec2 {
        Vec2::new(self.xi_p, self.xi_lambda)
    }
}

/// Positive root of `c_z ω² + ċ_z ω − g = 0`.
///
/// For `ċ_z > 0` the rationalized form `2g / (√(ċ_z² + 4 c_z g) + ċ_z)`
/// is used so large upward velocities do not cancel.
pub fn omega(c_z: f64, dc_z: f64, g: f64) -> Result<f64> {
    if !(c_z > 0.0) {
        return Err(Error::Domain {
            what: "omega needs c_z > 0",
            value: c_z,
        });
    }
    let disc = (dc_z * dc_z + 4.0 * c_z * g).sqrt();
    Ok(if dc_z > 0.0 {
        2.0 * g / (disc + dc_z)
    } else {
        (disc - dc_z) / (2.0 * c_z)
    })
}

/// `ξ_p = c_x + ċ_x/ω`, `ξ_λ = ω²`.
pub fn ici(x: &ComState, g: f64) -> Result<Ici> {
    let w = omega(x.c_z, x.dc_z, g)?;
    Ok(Ici {
        xi_p: x.c_x + x.dc_x / w,
        xi_lambda: w * w,
    })
}

/// Capture point of the fixed-height pendulum.
pub fn icp(c_x: f64, dc_x: f64, lambda_lip: f64) -> f64 {
    c_x + dc_x / lambda_lip.sqrt()
}

/// `α(c_z, ξ_λ) = g / (√ξ_λ (c_z ξ_λ + g))`.
pub fn alpha(c_z: f64, xi_lambda: f64, g: f64) -> f64 {
    g / (xi_lambda.sqrt() * (c_z * xi_lambda + g))
}

/// `β(c_z, ξ_λ) = 2 c_z ξ_λ^{3/2} / (c_z ξ_λ + g)`; always positive.
pub fn beta(c_z: f64, xi_lambda: f64, g: f64) -> f64 {
    2.0 * c_z * xi_lambda * xi_lambda.sqrt() / (c_z * xi_lambda + g)
}

/// Approximators of `ξ_p` computed with the stiffness bounds in place of `ω²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoSided {
    /// `c_x + ċ_x/√λ⁺`
    pub xi_p_plus: f64,
    /// `c_x + ċ_x/√λ⁻`
    pub xi_p_minus: f64,
}

impl TwoSided {
    pub fn lower(&self) -> f64 {
        self.xi_p_plus.min(self.xi_p_minus)
    }

    pub fn upper(&self) -> f64 {
        self.xi_p_plus.max(self.xi_p_minus)
    }
}

pub fn two_sided(x: &ComState, cs: &ConstraintSet) -> TwoSided {
    TwoSided {
        xi_p_plus: x.c_x + x.dc_x / cs.lambda_max.sqrt(),
        xi_p_minus: x.c_x + x.dc_x / cs.lambda_min.sqrt(),
    }
}

/// Time derivative of the ICI along `ẋ = f(x, u)`, in closed form.
pub fn ici_rate(x: &ComState, u: &ControlInput, g: f64) -> Result<Vec2> {
    let xi = ici(x, g)?;
    let sq = xi.xi_lambda.sqrt();
    let a = alpha(x.c_z, xi.xi_lambda, g);
    let b = beta(x.c_z, xi.xi_lambda, g);
    let gap = xi.xi_lambda - u.lambda;
    Ok(Vec2::new(
        u.lambda / sq * (xi.xi_p - u.p) + a * gap * x.dc_x / sq,
        b * gap,
    ))
}

/// Divergence rate and DCM position carried by a DCM-based controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcmState {
    pub omega_dcm: f64,
    pub xi_dcm: Vec2,
}

impl DcmState {
    pub fn new(omega_dcm: f64, x: &ComState) -> Result<Self> {
        if !(omega_dcm > 0.0) || !omega_dcm.is_finite() {
            return Err(Error::DcmDiverged { omega: omega_dcm });
        }
        Ok(Self {
            omega_dcm,
            xi_dcm: x.position() + x.velocity() / omega_dcm,
        })
    }
}

/// Integrates `ω̇ = ω² − λ` over one step with `λ` held, then recomputes
/// `ξ_DCM = c + ċ/ω` from the post-step state `x`.
pub fn dcm_update(s: &DcmState, x: &ComState, u: &ControlInput, dt: f64, _g: f64) -> Result<DcmState> {
    if !(s.omega_dcm > 0.0) {
        return Err(Error::DcmDiverged { omega: s.omega_dcm });
    }
    let lambda = u.lambda;
    let next = rk4(|w| Vector1::new(w[0] * w[0] - lambda), &Vector1::new(s.omega_dcm), dt)[0];
    DcmState::new(next, x)
}
