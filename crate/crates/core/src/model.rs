//! Variable-height inverted pendulum dynamics.
//!
//! The CoM `c = [c_x, c_z]` obeys `c̈ = λ (c − [p, 0]) − [0, g]`, where the
//! input `u = [p, λ]` is the ZMP position and the virtual leg stiffness.
//! States and inputs are plain value types; [`simulate`] drives a
//! [`Controller`] in closed loop with a zero-order hold over fixed RK4 steps.

use nalgebra::{SVector, Vector2, Vector4};

use crate::control::Gains;
use crate::error::{Error, Result};
use crate::indicators::{ici, Ici};

pub type Vec2 = Vector2<f64>;

/// Gravitational acceleration used throughout unless overridden (m/s²).
pub const DEFAULT_G: f64 = 9.8;

/// Default fixed integration step (s).
pub const DEFAULT_DT: f64 = 1e-3;

/// Slack on `U` membership when flagging applied inputs.
pub const ADMISSIBILITY_TOL: f64 = 1e-9;

/// CoM position and velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComState {
    pub c_x: f64,
    pub c_z: f64,
    pub dc_x: f64,
    pub dc_z: f64,
}

impl ComState {
    /// Builds a state, rejecting `c_z <= 0` and non-finite entries.
    pub fn new(c_x: f64, c_z: f64, dc_x: f64, dc_z: f64) -> Result<Self> {
        let s = Self { c_x, c_z, dc_x, dc_z };
        s.validate()?;
        Ok(s)
    }

    /// At rest at `c`.
    pub fn at_rest(c: Vec2) -> Result<Self> {
        Self::new(c.x, c.y, 0.0, 0.0)
    }

    pub fn from_parts(c: Vec2, dc: Vec2) -> Result<Self> {
        Self::new(c.x, c.y, dc.x, dc.y)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.to_vector().iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if self.c_z <= 0.0 {
            return Err(Error::StateConstraint { c_z: self.c_z });
        }
        Ok(())
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.c_x, self.c_z)
    }

    pub fn velocity(&self) -> Vec2 {
        Vec2::new(self.dc_x, self.dc_z)
    }

    pub fn to_vector(&self) -> Vector4<f64> {
        Vector4::new(self.c_x, self.c_z, self.dc_x, self.dc_z)
    }

    /// Unchecked conversion; callers validate when it matters.
    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self {
            c_x: v[0],
            c_z: v[1],
            dc_x: v[2],
            dc_z: v[3],
        }
    }
}

/// ZMP position `p` (m) and virtual leg stiffness `lambda` (s⁻²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlInput {
    pub p: f64,
    pub lambda: f64,
}

impl ControlInput {
    pub fn new(p: f64, lambda: f64) -> Self {
        Self { p, lambda }
    }

    pub fn to_vector(&self) -> Vec2 {
        Vec2::new(self.p, self.lambda)
    }
}

/// Input bounds `U = [p_min, p_max] × [lambda_min, lambda_max]` and gravity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintSet {
    pub p_min: f64,
    pub p_max: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub g: f64,
}

impl ConstraintSet {
    pub fn new(p_min: f64, p_max: f64, lambda_min: f64, lambda_max: f64, g: f64) -> Result<Self> {
        let cs = Self {
            p_min,
            p_max,
            lambda_min,
            lambda_max,
            g,
        };
        cs.validate()?;
        Ok(cs)
    }

    /// Bounds of a desk-scale humanoid: a 0.24 m foot and a CoM height
    /// range of 0.5–0.8 m.
    pub fn walker() -> Self {
        Self {
            p_min: -0.1,
            p_max: 0.14,
            lambda_min: DEFAULT_G / 0.8,
            lambda_max: DEFAULT_G / 0.5,
            g: DEFAULT_G,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.p_min, self.p_max, self.lambda_min, self.lambda_max, self.g]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::InvalidConstraints("non-finite bound".into()));
        }
        if self.p_min >= self.p_max {
            return Err(Error::InvalidConstraints(format!(
                "p_min ({}) must be below p_max ({})",
                self.p_min, self.p_max
            )));
        }
        if !(0.0 < self.lambda_min && self.lambda_min < self.lambda_max) {
            return Err(Error::InvalidConstraints(format!(
                "need 0 < lambda_min ({}) < lambda_max ({})",
                self.lambda_min, self.lambda_max
            )));
        }
        if self.g <= 0.0 {
            return Err(Error::InvalidConstraints(format!("g must be positive, got {}", self.g)));
        }
        Ok(())
    }

    /// The CoM height band `H = [g/λ⁺, g/λ⁻]`.
    pub fn height_band(&self) -> (f64, f64) {
        (self.g / self.lambda_max, self.g / self.lambda_min)
    }

    /// Distance from `c_z` to the height band (zero inside).
    pub fn height_band_distance(&self, c_z: f64) -> f64 {
        let (lo, hi) = self.height_band();
        (lo - c_z).max(c_z - hi).max(0.0)
    }

    pub fn clamp(&self, u: ControlInput) -> ControlInput {
        ControlInput {
            p: u.p.clamp(self.p_min, self.p_max),
            lambda: u.lambda.clamp(self.lambda_min, self.lambda_max),
        }
    }
}

impl Default for ConstraintSet {
    fn default() -> Self {
        Self::walker()
    }
}

/// `φ([a, b]) = [a, g/b]`; an involution on `b > 0`.
pub fn phi(point: Vec2, g: f64) -> Result<Vec2> {
    if !(point.y > 0.0) {
        return Err(Error::Domain {
            what: "phi needs a positive second entry",
            value: point.y,
        });
    }
    Ok(Vec2::new(point.x, g / point.y))
}

/// State derivative `[ċ_x, ċ_z, λ(c_x − p), λ c_z − g]`.
pub fn vhip_derivative(x: &ComState, u: &ControlInput, g: f64) -> Vector4<f64> {
    derivative_vec(&x.to_vector(), u, g)
}

fn derivative_vec(v: &Vector4<f64>, u: &ControlInput, g: f64) -> Vector4<f64> {
    Vector4::new(v[2], v[3], u.lambda * (v[0] - u.p), u.lambda * v[1] - g)
}

/// One classical fourth-order Runge–Kutta step of an autonomous field.
pub(crate) fn rk4<const N: usize>(
    f: impl Fn(&SVector<f64, N>) -> SVector<f64, N>,
    y: &SVector<f64, N>,
    h: f64,
) -> SVector<f64, N> {
    let k1 = f(y);
    let k2 = f(&(y + k1 * (h / 2.0)));
    let k3 = f(&(y + k2 * (h / 2.0)));
    let k4 = f(&(y + k3 * h));
    y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Advances the state by `dt` with `u` held constant.
pub fn step(x: &ComState, u: &ControlInput, dt: f64, g: f64) -> Result<ComState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let next = ComState::from_vector(&rk4(|v| derivative_vec(v, u, g), &x.to_vector(), dt));
    next.validate()?;
    Ok(next)
}

/// Instantaneous push: positions unchanged, velocity incremented by `dv`.
pub fn apply_push(x: &ComState, dv: Vec2) -> ComState {
    ComState {
        dc_x: x.dc_x + dv.x,
        dc_z: x.dc_z + dv.y,
        ..*x
    }
}

/// Closed-inequality membership `u ∈ U`.
pub fn input_admissible(u: &ControlInput, cs: &ConstraintSet) -> bool {
    input_admissible_within(u, cs, 0.0)
}

pub fn input_admissible_within(u: &ControlInput, cs: &ConstraintSet, tol: f64) -> bool {
    cs.p_min - tol <= u.p
        && u.p <= cs.p_max + tol
        && cs.lambda_min - tol <= u.lambda
        && u.lambda <= cs.lambda_max + tol
}

/// What a controller returns for one sampling instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Command {
    pub input: ControlInput,
    pub gains: Option<Gains>,
    pub eta_p: Option<f64>,
}

impl From<ControlInput> for Command {
    fn from(input: ControlInput) -> Self {
        Self {
            input,
            gains: None,
            eta_p: None,
        }
    }
}

/// A state-feedback law sampled once per integration step.
pub trait Controller {
    fn command(&mut self, x: &ComState) -> Result<Command>;

    /// Called after each step with the applied input and the new state.
    fn advance(&mut self, _applied: &ControlInput, _next: &ComState, _dt: f64) -> Result<()> {
        Ok(())
    }
}

/// Adapts a closure `&ComState -> Result<ControlInput>` into a [`Controller`].
pub struct FnController<F>(pub F);

impl<F> Controller for FnController<F>
where
    F: FnMut(&ComState) -> Result<ControlInput>,
{
    fn command(&mut self, x: &ComState) -> Result<Command> {
        (self.0)(x).map(Command::from)
    }
}

impl<C: Controller + ?Sized> Controller for Box<C> {
    fn command(&mut self, x: &ComState) -> Result<Command> {
        (**self).command(x)
    }

    fn advance(&mut self, applied: &ControlInput, next: &ComState, dt: f64) -> Result<()> {
        (**self).advance(applied, next, dt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub state: ComState,
    pub input: ControlInput,
    pub ici: Ici,
    pub gains: Option<Gains>,
    pub eta_p: Option<f64>,
}

/// Why a rollout stopped before `t_f`.
#[derive(Debug)]
pub struct Halt {
    pub t: f64,
    pub state: ComState,
    pub error: Error,
}

#[derive(Debug)]
pub struct Trajectory {
    pub dt: f64,
    pub rows: Vec<TrajectoryRow>,
    /// Row indices whose applied input left `U` by more than [`ADMISSIBILITY_TOL`].
    pub input_violations: Vec<usize>,
    pub halt: Option<Halt>,
}

impl Trajectory {
    pub fn is_complete(&self) -> bool {
        self.halt.is_none()
    }

    pub fn last_row(&self) -> Option<&TrajectoryRow> {
        self.rows.last()
    }

    /// Last known state, including the offending state of a halted run.
    pub fn final_state(&self) -> Option<ComState> {
        match &self.halt {
            Some(h) => Some(h.state),
            None => self.rows.last().map(|r| r.state),
        }
    }
}

/// Number of steps for a horizon, requiring `t_f / dt` to be integral.
pub fn step_count(t_f: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    if !(t_f >= 0.0) || !t_f.is_finite() {
        return Err(Error::InvalidArgument(format!("t_f must be non-negative, got {t_f}")));
    }
    let n = (t_f / dt).round();
    if (n * dt - t_f).abs() > 1e-9 * t_f.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "t_f ({t_f}) is not an integer multiple of dt ({dt})"
        )));
    }
    Ok(n as usize)
}

/// Closed-loop rollout from `x0` over `[0, t_f]`.
///
/// The controller is sampled at every row time (including `t_f`) and its
/// command is held across the following step. Runtime failures (state
/// constraint breach, policy error) stop the rollout and are recorded in
/// [`Trajectory::halt`]; only invalid arguments return `Err`.
pub fn simulate<C: Controller + ?Sized>(
    x0: &ComState,
    controller: &mut C,
    t_f: f64,
    dt: f64,
    cs: &ConstraintSet,
) -> Result<Trajectory> {
    x0.validate()?;
    cs.validate()?;
    let n = step_count(t_f, dt)?;
    let g = cs.g;
    let mut traj = Trajectory {
        dt,
        rows: Vec::with_capacity(n + 1),
        input_violations: Vec::new(),
        halt: None,
    };
    let mut x = *x0;
    for k in 0..=n {
        let t = k as f64 * dt;
        let cmd = match controller.command(&x) {
            Ok(c) => c,
            Err(error) => {
                traj.halt = Some(Halt { t, state: x, error });
                break;
            }
        };
        if !input_admissible_within(&cmd.input, cs, ADMISSIBILITY_TOL) {
            traj.input_violations.push(k);
        }
        traj.rows.push(TrajectoryRow {
            t,
            state: x,
            input: cmd.input,
            ici: ici(&x, g)?,
            gains: cmd.gains,
            eta_p: cmd.eta_p,
        });
        if k == n {
            break;
        }
        let t_next = (k + 1) as f64 * dt;
        let next = match step(&x, &cmd.input, dt, g) {
            Ok(s) => s,
            Err(error) => {
                let state = ComState::from_vector(&rk4(
                    |v| derivative_vec(v, &cmd.input, g),
                    &x.to_vector(),
                    dt,
                ));
                traj.halt = Some(Halt { t: t_next, state, error });
                break;
            }
        };
        if let Err(error) = controller.advance(&cmd.input, &next, dt) {
            traj.halt = Some(Halt { t: t_next, state: next, error });
            break;
        }
        x = next;
    }
    Ok(traj)
}
