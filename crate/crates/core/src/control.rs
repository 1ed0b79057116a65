//! Balance controllers.
//!
//! The ICI controller applies `u = ξ + K(ξ − ξ^d) + η` with
//! `K = diag(k1, k2)` chosen online by two scalar LPs solved in series:
//! first the largest `k2` that keeps `λ` in bounds and the compensation
//! term `η_p` within a `γ` share of the ZMP margin, then the largest `k1`
//! that keeps `p` in bounds. Under this law the ICI obeys
//! `ξ̇ = −KΛ(ξ − ξ^d)` with `Λ = diag(λ/√ξ_λ, β)`.
//!
//! ICP and DCM feedback laws are provided as baselines.

use crate::error::{Error, LpStage, Result};
use crate::indicators::{alpha, ici, DcmState, Ici};
use crate::model::{
    input_admissible, phi, Command, ComState, ConstraintSet, ControlInput, Controller, Vec2,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gains {
    pub k1: f64,
    pub k2: f64,
}

/// Tuning of the LP gain selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainConfig {
    /// Lower bound `ε` on both gains.
    pub epsilon: f64,
    /// Upper bound `M` on both gains.
    pub max_gain: f64,
    /// Share `γ ∈ (0, 1)` of the ZMP margin the compensation term may use.
    pub gamma: f64,
    /// Weight of `k2` in the joint (non-convex) objective. Kept for reference;
    /// the serial LPs do not use it.
    pub weight_c: f64,
}

impl Default for GainConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            max_gain: 10.0,
            gamma: 0.1,
            weight_c: 1.0,
        }
    }
}

impl GainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < self.max_gain && self.max_gain.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < epsilon ({}) < max_gain ({})",
                self.epsilon, self.max_gain
            )));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidArgument(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        Ok(())
    }
}

/// Desired CoM position and the ICI it induces, `ξ^d = φ(c^d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceTarget {
    pub c_d: Vec2,
    pub xi_d: Ici,
}

impl BalanceTarget {
    /// Requires `φ(c^d) ∈ U`.
    pub fn new(c_d: Vec2, cs: &ConstraintSet) -> Result<Self> {
        let v = phi(c_d, cs.g)?;
        let xi_d = Ici {
            xi_p: v.x,
            xi_lambda: v.y,
        };
        if !input_admissible(&xi_d.as_input(), cs) {
            return Err(Error::InvalidArgument(format!(
                "target ({}, {}) induces an ICI outside the input bounds",
                c_d.x, c_d.y
            )));
        }
        Ok(Self { c_d, xi_d })
    }
}

/// `max k` subject to `a·k <= b` for every row and `lo <= k <= hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarLp {
    pub constraints: Vec<(f64, f64)>,
    pub lo: f64,
    pub hi: f64,
}

impl ScalarLp {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self {
            constraints: Vec::new(),
            lo,
            hi,
        }
    }

    pub fn with(mut self, a: f64, b: f64) -> Self {
        self.constraints.push((a, b));
        self
    }
}

/// Largest feasible `k`, or `None` when the feasible interval is empty.
pub fn lp_max_scalar(lp: &ScalarLp) -> Option<f64> {
    let (mut lo, mut hi) = (lp.lo, lp.hi);
    for &(a, b) in &lp.constraints {
        if a > 0.0 {
            hi = hi.min(b / a);
        } else if a < 0.0 {
            lo = lo.max(b / a);
        } else if b < 0.0 {
            return None;
        }
    }
    (lo <= hi).then_some(hi)
}

/// Nonlinear compensation
/// `η_p = −k2 α (ξ_λ − ξ_λ^d) ċ_x / (ξ_λ + k2 (ξ_λ − ξ_λ^d))`.
///
/// The denominator is the commanded stiffness and must be positive.
pub fn eta_p(x: &ComState, xi: &Ici, xi_lambda_d: f64, k2: f64, g: f64) -> Result<f64> {
    let err = xi.xi_lambda - xi_lambda_d;
    let denom = xi.xi_lambda + k2 * err;
    if !(denom > 0.0) {
        return Err(Error::Domain {
            what: "compensation denominator must be positive",
            value: denom,
        });
    }
    Ok(-k2 * alpha(x.c_z, xi.xi_lambda, g) * err * x.dc_x / denom)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSolution {
    pub gains: Gains,
    pub eta_p: f64,
}

/// Serial LP gain selection with `ε = cfg.epsilon`.
pub fn solve_gains(
    x: &ComState,
    xi: &Ici,
    target: &BalanceTarget,
    cfg: &GainConfig,
    cs: &ConstraintSet,
) -> Result<GainSolution> {
    solve_gains_with_floor(x, xi, target, cfg, cs, cfg.epsilon)
}

fn solve_gains_with_floor(
    x: &ComState,
    xi: &Ici,
    target: &BalanceTarget,
    cfg: &GainConfig,
    cs: &ConstraintSet,
    floor: f64,
) -> Result<GainSolution> {
    let g = cs.g;
    let e_p = xi.xi_p - target.xi_d.xi_p;
    let e_l = xi.xi_lambda - target.xi_d.xi_lambda;
    let a = alpha(x.c_z, xi.xi_lambda, g);
    let room_hi = cs.p_max - xi.xi_p;
    let room_lo = cs.p_min - xi.xi_p;
    let gamma = cfg.gamma;

    // stiffness bounds, then the two linearized bounds on η_p
    let stiffness = ScalarLp::new(floor, cfg.max_gain)
        .with(e_l, cs.lambda_max - xi.xi_lambda)
        .with(-e_l, xi.xi_lambda - cs.lambda_min)
        .with(-e_l * (a * x.dc_x + gamma * room_hi), gamma * room_hi * xi.xi_lambda)
        .with(e_l * (a * x.dc_x + gamma * room_lo), -gamma * room_lo * xi.xi_lambda);
    let k2 = lp_max_scalar(&stiffness).ok_or(Error::GainInfeasible {
        stage: LpStage::Stiffness,
    })?;
    let eta = eta_p(x, xi, target.xi_d.xi_lambda, k2, g).map_err(|_| Error::GainInfeasible {
        stage: LpStage::Stiffness,
    })?;

    let zmp = ScalarLp::new(floor, cfg.max_gain)
        .with(e_p, room_hi - eta)
        .with(-e_p, eta - room_lo);
    let k1 = lp_max_scalar(&zmp).ok_or(Error::GainInfeasible { stage: LpStage::Zmp })?;

    Ok(GainSolution {
        gains: Gains { k1, k2 },
        eta_p: eta,
    })
}

/// `u = ξ + K(ξ − ξ^d) + [η_p, 0]` for given gains.
pub fn feedback_input(
    x: &ComState,
    xi: &Ici,
    target: &BalanceTarget,
    gains: Gains,
    g: f64,
) -> Result<(ControlInput, f64)> {
    let eta = eta_p(x, xi, target.xi_d.xi_lambda, gains.k2, g)?;
    let u = ControlInput::new(
        xi.xi_p + gains.k1 * (xi.xi_p - target.xi_d.xi_p) + eta,
        xi.xi_lambda + gains.k2 * (xi.xi_lambda - target.xi_d.xi_lambda),
    );
    Ok((u, eta))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IciCommand {
    pub input: ControlInput,
    pub gains: Gains,
    pub eta_p: f64,
    /// Gains came from the retry with `ε/10`.
    pub relaxed: bool,
}

/// One evaluation of the ICI controller.
///
/// If the LPs are infeasible with `ε`, they are retried once with `ε/10`
/// before the infeasibility is reported.
pub fn ici_policy(
    x: &ComState,
    target: &BalanceTarget,
    cfg: &GainConfig,
    cs: &ConstraintSet,
) -> Result<IciCommand> {
    let xi = ici(x, cs.g)?;
    let (sol, relaxed) = match solve_gains(x, &xi, target, cfg, cs) {
        Ok(sol) => (sol, false),
        Err(Error::GainInfeasible { stage }) => {
            log::warn!(
                "gain LP infeasible at {stage} with eps={}, retrying with eps/10 (x={x:?})",
                cfg.epsilon
            );
            let sol = solve_gains_with_floor(x, &xi, target, cfg, cs, cfg.epsilon / 10.0)?;
            (sol, true)
        }
        Err(e) => return Err(e),
    };
    let (input, eta_p) = feedback_input(x, &xi, target, sol.gains, cs.g)?;
    Ok(IciCommand {
        input,
        gains: sol.gains,
        eta_p,
        relaxed,
    })
}

/// Stateless ICI controller; counts evaluations that needed the `ε/10` retry.
#[derive(Debug, Clone)]
pub struct IciController {
    pub target: BalanceTarget,
    pub config: GainConfig,
    pub constraints: ConstraintSet,
    pub relaxed_steps: usize,
}

impl IciController {
    pub fn new(target: BalanceTarget, config: GainConfig, constraints: ConstraintSet) -> Self {
        Self {
            target,
            config,
            constraints,
            relaxed_steps: 0,
        }
    }
}

impl Controller for IciController {
    fn command(&mut self, x: &ComState) -> Result<Command> {
        let c = ici_policy(x, &self.target, &self.config, &self.constraints)?;
        self.relaxed_steps += c.relaxed as usize;
        Ok(Command {
            input: c.input,
            gains: Some(c.gains),
            eta_p: Some(c.eta_p),
        })
    }
}

/// `u = ξ(x)`: holds the ICI fixed and brings the CoM to rest at `φ(ξ(x0))`.
#[derive(Debug, Clone, Copy)]
pub struct PureIciController {
    pub g: f64,
}

impl Controller for PureIciController {
    fn command(&mut self, x: &ComState) -> Result<Command> {
        Ok(ici(x, self.g)?.as_input().into())
    }
}

/// ICP feedback with height hold: `λ = g/c_z`, `p = ξ + k(ξ − c_x^d)`,
/// both saturated to `U`.
pub fn icp_policy(x: &ComState, target: &BalanceTarget, k: f64, cs: &ConstraintSet) -> ControlInput {
    let lambda_lip = cs.g / x.c_z;
    let xi = crate::indicators::icp(x.c_x, x.dc_x, lambda_lip);
    cs.clamp(ControlInput::new(xi + k * (xi - target.c_d.x), lambda_lip))
}

#[derive(Debug, Clone)]
pub struct IcpController {
    pub target: BalanceTarget,
    pub gain: f64,
    pub constraints: ConstraintSet,
}

impl Controller for IcpController {
    fn command(&mut self, x: &ComState) -> Result<Command> {
        x.validate()?;
        Ok(icp_policy(x, &self.target, self.gain, &self.constraints).into())
    }
}

/// DCM feedback linearized about the rest reference `(ξ^d, ω^d) = (c^d, √(g/c_z^d))`.
///
/// Horizontal: `p = ξ_x + (kω/λ)(ξ_x − c_x^d)`, so that `ξ̇_x = −k(ξ_x − c_x^d)`.
/// Vertical: `λ = ω_d² + K_z(ξ_z − c_z^d) + K_ω(ω − ω_d)` places a double pole
/// at `−k` on the linearized `(ξ_z, ω)` pair. Both inputs are saturated to `U`.
pub fn dcm_policy(
    x: &ComState,
    dcm: &DcmState,
    target: &BalanceTarget,
    k: f64,
    cs: &ConstraintSet,
) -> ControlInput {
    let _ = x;
    let w = dcm.omega_dcm;
    let (k_z, k_w) = dcm_vertical_gains(target, k, cs.g);
    let w_d = (cs.g / target.c_d.y).sqrt();
    let lambda = (w_d * w_d + k_z * (dcm.xi_dcm.y - target.c_d.y) + k_w * (w - w_d))
        .clamp(cs.lambda_min, cs.lambda_max);
    let xi_x = dcm.xi_dcm.x;
    let p = xi_x + k * w / lambda * (xi_x - target.c_d.x);
    cs.clamp(ControlInput::new(p, lambda))
}

/// Gains `(K_z, K_ω)` of the vertical DCM law.
///
/// Linearized: `Δξ̇_z = ω_d Δξ_z + (c_z^d/ω_d) Δλ`, `Δω̇ = 2ω_d Δω − Δλ`.
pub fn dcm_vertical_gains(target: &BalanceTarget, k: f64, g: f64) -> (f64, f64) {
    let z_d = target.c_d.y;
    let w_d = (g / z_d).sqrt();
    let x = (k + w_d).powi(2) / w_d;
    (x * w_d / z_d, x + 2.0 * k + 3.0 * w_d)
}

/// DCM controller; `ω_DCM` is initialized to `omega0` at the first sample
/// and integrated with the applied stiffness afterwards.
#[derive(Debug, Clone)]
pub struct DcmController {
    pub target: BalanceTarget,
    pub gain: f64,
    pub omega0: f64,
    pub constraints: ConstraintSet,
    pub state: Option<DcmState>,
}

impl DcmController {
    pub fn new(target: BalanceTarget, gain: f64, omega0: f64, constraints: ConstraintSet) -> Self {
        Self {
            target,
            gain,
            omega0,
            constraints,
            state: None,
        }
    }
}

impl Controller for DcmController {
    fn command(&mut self, x: &ComState) -> Result<Command> {
        let s = match self.state {
            Some(s) => s,
            None => {
                let s = DcmState::new(self.omega0, x)?;
                self.state = Some(s);
                s
            }
        };
        Ok(dcm_policy(x, &s, &self.target, self.gain, &self.constraints).into())
    }

    fn advance(&mut self, applied: &ControlInput, next: &ComState, dt: f64) -> Result<()> {
        if let Some(s) = self.state {
            self.state = Some(crate::indicators::dcm_update(&s, next, applied, dt, self.constraints.g)?);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cs() -> ConstraintSet {
        ConstraintSet::walker()
    }

    fn target(cx: f64, cz: f64) -> BalanceTarget {
        BalanceTarget::new(Vec2::new(cx, cz), &cs()).unwrap()
    }

    #[test]
    fn scalar_lp_examples() {
        assert_eq!(lp_max_scalar(&ScalarLp::new(0.0, 100.0).with(2.0, 10.0)), Some(5.0));
        assert_eq!(lp_max_scalar(&ScalarLp::new(0.0, 10.0).with(-1.0, -20.0)), None);
        assert_eq!(lp_max_scalar(&ScalarLp::new(0.0, 10.0).with(0.0, -1.0)), None);
        assert_eq!(lp_max_scalar(&ScalarLp::new(0.0, 10.0).with(0.0, 1.0)), Some(10.0));
        // single feasible point
        assert_eq!(lp_max_scalar(&ScalarLp::new(1.0, 10.0).with(1.0, 1.0)), Some(1.0));
    }

    #[test]
    fn target_must_map_into_inputs() {
        assert!(BalanceTarget::new(Vec2::new(0.0, 0.6), &cs()).is_ok());
        assert!(BalanceTarget::new(Vec2::new(0.2, 0.6), &cs()).is_err());
        assert!(BalanceTarget::new(Vec2::new(0.0, 0.3), &cs()).is_err());
    }

    #[test]
    fn gain_config_validation() {
        assert!(GainConfig::default().validate().is_ok());
        let bad = GainConfig { gamma: 1.0, ..GainConfig::default() };
        assert!(bad.validate().is_err());
        let bad = GainConfig { epsilon: 20.0, ..GainConfig::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn eta_vanishes_without_vertical_error_or_horizontal_motion() {
        let t = target(0.0, 0.6);
        let x = ComState::new(0.0, 0.6, 0.3, 0.0).unwrap();
        let xi = ici(&x, 9.8).unwrap();
        assert_eq!(eta_p(&x, &xi, t.xi_d.xi_lambda, 5.0, 9.8).unwrap(), 0.0);

        let x = ComState::new(0.0, 0.6, 0.0, 0.2).unwrap();
        let xi = ici(&x, 9.8).unwrap();
        assert_eq!(eta_p(&x, &xi, t.xi_d.xi_lambda, 5.0, 9.8).unwrap(), 0.0);
        assert_eq!(eta_p(&x, &xi, t.xi_d.xi_lambda, 0.0, 9.8).unwrap(), 0.0);
    }

    #[test]
    fn eta_linear_in_small_gain() {
        let t = target(0.0, 0.6);
        let x = ComState::new(0.01, 0.6, 0.2, 0.1).unwrap();
        let xi = ici(&x, 9.8).unwrap();
        let e = xi.xi_lambda - t.xi_d.xi_lambda;
        let slope = -alpha(x.c_z, xi.xi_lambda, 9.8) * e * x.dc_x / xi.xi_lambda;
        let k = 1e-7;
        assert_relative_eq!(eta_p(&x, &xi, t.xi_d.xi_lambda, k, 9.8).unwrap() / k, slope, max_relative = 1e-5);
    }

    #[test]
    fn eta_rejects_nonpositive_stiffness() {
        let x = ComState::new(0.0, 0.6, 0.2, 0.0).unwrap();
        let xi = ici(&x, 9.8).unwrap();
        assert!(eta_p(&x, &xi, xi.xi_lambda + 10.0, 10.0, 9.8).is_err());
    }

    #[test]
    fn gains_saturate_at_target() {
        let t = target(0.0, 0.6);
        let x = ComState::at_rest(t.c_d).unwrap();
        let xi = ici(&x, 9.8).unwrap();
        let sol = solve_gains(&x, &xi, &t, &GainConfig::default(), &cs()).unwrap();
        assert_eq!(sol.gains, Gains { k1: 10.0, k2: 10.0 });
        assert_eq!(sol.eta_p, 0.0);
        let c = ici_policy(&x, &t, &GainConfig::default(), &cs()).unwrap();
        assert_relative_eq!(c.input.p, 0.0, epsilon = 1e-12);
        assert_relative_eq!(c.input.lambda, 9.8 / 0.6, epsilon = 1e-12);
    }

    #[test]
    fn zero_gains_reduce_to_pure_ici() {
        let t = target(0.0, 0.6);
        let x = ComState::new(0.02, 0.65, 0.1, -0.2).unwrap();
        let xi = ici(&x, 9.8).unwrap();
        let (u, eta) = feedback_input(&x, &xi, &t, Gains { k1: 0.0, k2: 0.0 }, 9.8).unwrap();
        assert_eq!(eta, 0.0);
        assert_eq!(u, xi.as_input());
        let mut pure = PureIciController { g: 9.8 };
        assert_eq!(pure.command(&x).unwrap().input, xi.as_input());
    }

    #[test]
    fn push_scenario_first_command_is_admissible() {
        let t = target(0.0, 0.75);
        let x = ComState::new(0.0, 0.6, 0.58, 0.0).unwrap();
        let c = ici_policy(&x, &t, &GainConfig::default(), &cs()).unwrap();
        assert!(input_admissible(&c.input, &cs()));
        assert!(!c.relaxed);
        let cfg = GainConfig::default();
        for k in [c.gains.k1, c.gains.k2] {
            assert!(k >= cfg.epsilon && k <= cfg.max_gain);
        }
    }

    #[test]
    fn icp_policy_examples() {
        let t = target(0.0, 0.6);
        let x = ComState::new(0.0, 0.6, 0.58, 0.0).unwrap();
        let u = icp_policy(&x, &t, 10.0, &cs());
        assert_eq!(u.p, 0.14);
        assert_relative_eq!(u.lambda, 9.8 / 0.6, epsilon = 1e-12);

        let x = ComState::new(0.0, 0.6, 0.01, 0.0).unwrap();
        let u = icp_policy(&x, &t, 1.0, &cs());
        let xi = 0.01 / (9.8f64 / 0.6).sqrt();
        assert_relative_eq!(u.p, 2.0 * xi, epsilon = 1e-15);
    }

    #[test]
    fn dcm_fixed_point_commands_target_input() {
        let t = target(0.0, 0.6);
        let x = ComState::at_rest(t.c_d).unwrap();
        let w = (9.8f64 / 0.6).sqrt();
        let s = DcmState::new(w, &x).unwrap();
        let u = dcm_policy(&x, &s, &t, 10.0, &cs());
        assert_relative_eq!(u.p, 0.0, epsilon = 1e-15);
        assert_relative_eq!(u.lambda, w * w, epsilon = 1e-12);
    }

    #[test]
    fn dcm_drives_omega_down_when_too_fast() {
        let t = target(0.0, 0.6);
        let x = ComState::at_rest(t.c_d).unwrap();
        let w_d = (9.8f64 / 0.6).sqrt();
        let w = w_d + 0.01;
        let s = DcmState::new(w, &x).unwrap();
        let u = dcm_policy(&x, &s, &t, 1.0, &cs());
        assert!(u.lambda > w * w);
    }

    #[test]
    fn dcm_vertical_linearization_is_a_double_pole() {
        let t = target(0.0, 0.6);
        let k = 3.0;
        let w = (9.8f64 / 0.6).sqrt();
        let (kz, kw) = dcm_vertical_gains(&t, k, 9.8);
        let b = 0.6 / w;
        // closed loop [[w + b kz, b kw], [-kz, 2w - kw]]
        let a11 = w + b * kz;
        let a12 = b * kw;
        let a21 = -kz;
        let a22 = 2.0 * w - kw;
        assert_relative_eq!(a11 + a22, -2.0 * k, epsilon = 1e-9);
        assert_relative_eq!(a11 * a22 - a12 * a21, k * k, epsilon = 1e-9);
    }
}
