//! Scenarios, Monte Carlo trials and CSV output.
//!
//! Every trial is a push from a nominal rest state followed by a closed-loop
//! rollout. A trial succeeds when `max(‖c(t_f) − c^d‖, ‖ċ(t_f)‖) < 0.01`.
//! Monte Carlo trials draw their initial velocity uniformly from the velocity
//! slice of the outer approximation; trial `i` always uses the random stream
//! `i` of the experiment seed, so different controllers see identical samples.

use std::io::Write;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::capturability::{extremal_along, in_outer, Coord, Region};
use crate::control::{BalanceTarget, DcmController, GainConfig, IciController, IcpController, PureIciController};
use crate::error::{Error, Result};
use crate::model::{
    apply_push, simulate, step_count, ComState, ConstraintSet, Controller, Trajectory, Vec2, DEFAULT_DT,
};

/// Success threshold on both the final position error and the final speed.
pub const SUCCESS_TOL: f64 = 0.01;

/// Rejection attempts allowed per sample before the configuration is rejected.
pub const MAX_ATTEMPTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControllerSpec {
    Ici(GainConfig),
    Icp { gain: f64 },
    Dcm { gain: f64, omega0: f64 },
    PureIci,
}

impl ControllerSpec {
    pub fn ici() -> Self {
        Self::Ici(GainConfig::default())
    }

    pub fn icp() -> Self {
        Self::Icp { gain: 10.0 }
    }

    pub fn dcm(omega0: f64) -> Self {
        Self::Dcm { gain: 10.0, omega0 }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Ici(_) => "ici".into(),
            Self::Icp { .. } => "icp".into(),
            Self::Dcm { omega0, .. } => format!("dcm(omega0={omega0})"),
            Self::PureIci => "pure-ici".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Ici(cfg) => cfg.validate(),
            Self::Icp { gain } | Self::Dcm { gain, .. } if !(gain >= 0.0 && gain.is_finite()) => {
                Err(Error::InvalidArgument(format!("gain must be non-negative, got {gain}")))
            }
            Self::Dcm { omega0, .. } if !(omega0 > 0.0 && omega0.is_finite()) => {
                Err(Error::InvalidArgument(format!("omega0 must be positive, got {omega0}")))
            }
            _ => Ok(()),
        }
    }

    pub fn build(&self, target: BalanceTarget, cs: ConstraintSet) -> Box<dyn Controller + Send> {
        match *self {
            Self::Ici(cfg) => Box::new(IciController::new(target, cfg, cs)),
            Self::Icp { gain } => Box::new(IcpController {
                target,
                gain,
                constraints: cs,
            }),
            Self::Dcm { gain, omega0 } => Box::new(DcmController::new(target, gain, omega0, cs)),
            Self::PureIci => Box::new(PureIciController { g: cs.g }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub nominal: ComState,
    pub push: Vec2,
    pub controller: ControllerSpec,
    pub target: Vec2,
    pub t_f: f64,
    pub dt: f64,
    pub constraints: ConstraintSet,
    pub seed: u64,
}

impl Scenario {
    /// Rest at `(0, 0.6)` pushed to `ċ_x = 0.58` m/s, target `(0, 0.75)`.
    pub fn push_recovery(controller: ControllerSpec) -> Self {
        Self {
            nominal: ComState::at_rest(Vec2::new(0.0, 0.6)).expect("valid nominal"),
            push: Vec2::new(0.58, 0.0),
            controller,
            target: Vec2::new(0.0, 0.75),
            t_f: 4.0,
            dt: DEFAULT_DT,
            constraints: ConstraintSet::walker(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.nominal.validate()?;
        self.constraints.validate()?;
        self.controller.validate()?;
        if self.t_f <= 0.0 {
            return Err(Error::InvalidArgument(format!("t_f must be positive, got {}", self.t_f)));
        }
        step_count(self.t_f, self.dt)?;
        BalanceTarget::new(self.target, &self.constraints)?;
        Ok(())
    }

    pub fn initial_state(&self) -> ComState {
        apply_push(&self.nominal, self.push)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureReason {
    None,
    Diverged,
    Constraint,
    GainInfeasible,
}

impl FailureReason {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Diverged => "diverged",
            Self::Constraint => "constraint",
            Self::GainInfeasible => "gain-infeasible",
        }
    }
}

impl std::fmt::Display for FailureReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub initial_velocity: Vec2,
    pub controller: String,
    pub success: bool,
    pub pos_err: f64,
    pub vel_err: f64,
    pub failure_reason: FailureReason,
}

/// Final position error and speed.
pub fn final_errors(x_tf: &ComState, c_d: Vec2) -> (f64, f64) {
    ((x_tf.position() - c_d).norm(), x_tf.velocity().norm())
}

pub fn success(x_tf: &ComState, c_d: Vec2) -> bool {
    let (pos, vel) = final_errors(x_tf, c_d);
    pos.max(vel) < SUCCESS_TOL
}

fn failure_reason(traj: &Trajectory, ok: bool) -> FailureReason {
    match &traj.halt {
        Some(h) => match h.error {
            Error::GainInfeasible { .. } => FailureReason::GainInfeasible,
            Error::StateConstraint { .. } => FailureReason::Constraint,
            _ => FailureReason::Diverged,
        },
        None if ok => FailureReason::None,
        None if !traj.input_violations.is_empty() => FailureReason::Constraint,
        None => FailureReason::Diverged,
    }
}

fn evaluate(trial: usize, s: &Scenario, traj: &Trajectory) -> TrialRecord {
    let x0 = s.initial_state();
    let x_tf = traj.final_state().unwrap_or(x0);
    let (pos_err, vel_err) = final_errors(&x_tf, s.target);
    let ok = traj.is_complete() && success(&x_tf, s.target);
    TrialRecord {
        trial,
        initial_velocity: x0.velocity(),
        controller: s.controller.label(),
        success: ok,
        pos_err,
        vel_err,
        failure_reason: failure_reason(traj, ok),
    }
}

/// Applies the push at `t = 0`, rolls out to `t_f` and scores the result.
pub fn run_scenario(s: &Scenario) -> Result<(Trajectory, TrialRecord)> {
    run_trial(0, s)
}

fn run_trial(trial: usize, s: &Scenario) -> Result<(Trajectory, TrialRecord)> {
    s.validate()?;
    let target = BalanceTarget::new(s.target, &s.constraints)?;
    let mut controller = s.controller.build(target, s.constraints);
    let traj = simulate(&s.initial_state(), &mut controller, s.t_f, s.dt, &s.constraints)?;
    let rec = evaluate(trial, s, &traj);
    Ok((traj, rec))
}

/// Uniform rejection sampler over the outer-approximation velocity slice at
/// a fixed CoM position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterVelocitySampler {
    pub position: Vec2,
    pub constraints: ConstraintSet,
    pub dc_x: (f64, f64),
    pub dc_z: (f64, f64),
}

impl OuterVelocitySampler {
    /// Finds the bounding box by extremal search along `±ċ_x` and `±ċ_z`.
    pub fn new(position: Vec2, cs: &ConstraintSet) -> Result<Self> {
        cs.validate()?;
        let base = ComState::at_rest(position)?;
        let reach = |axis, dir| extremal_along(&base, cs, Region::Outer, axis, dir);
        Ok(Self {
            position,
            constraints: *cs,
            dc_x: (-reach(Coord::DCx, -1.0)?, reach(Coord::DCx, 1.0)?),
            dc_z: (-reach(Coord::DCz, -1.0)?, reach(Coord::DCz, 1.0)?),
        })
    }

    pub fn box_area(&self) -> f64 {
        (self.dc_x.1 - self.dc_x.0) * (self.dc_z.1 - self.dc_z.0)
    }

    pub fn contains(&self, v: Vec2) -> bool {
        ComState::from_parts(self.position, v).is_ok_and(|x| in_outer(&x, &self.constraints))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec2> {
        for _ in 0..MAX_ATTEMPTS {
            let v = Vec2::new(
                rng.random_range(self.dc_x.0..=self.dc_x.1),
                rng.random_range(self.dc_z.0..=self.dc_z.1),
            );
            if self.contains(v) {
                return Ok(v);
            }
        }
        Err(Error::LowAcceptance {
            accepted: 0,
            attempts: MAX_ATTEMPTS,
        })
    }
}

pub fn sample_velocity_in_outer<R: Rng + ?Sized>(nominal_c: Vec2, cs: &ConstraintSet, rng: &mut R) -> Result<Vec2> {
    OuterVelocitySampler::new(nominal_c, cs)?.sample(rng)
}

/// The random stream of one trial.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Settings shared by all trials of a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Experiment {
    pub nominal: Vec2,
    pub target: Vec2,
    pub t_f: f64,
    pub dt: f64,
    pub constraints: ConstraintSet,
    pub seed: u64,
}

impl Default for Experiment {
    fn default() -> Self {
        Self {
            nominal: Vec2::new(0.0, 0.6),
            target: Vec2::new(0.0, 0.6),
            t_f: 4.0,
            dt: DEFAULT_DT,
            constraints: ConstraintSet::walker(),
            seed: 0,
        }
    }
}

impl Experiment {
    /// Scenario for a nominal rest state pushed to velocity `v`.
    pub fn scenario(&self, controller: ControllerSpec, v: Vec2) -> Result<Scenario> {
        Ok(Scenario {
            nominal: ComState::at_rest(self.nominal)?,
            push: v,
            controller,
            target: self.target,
            t_f: self.t_f,
            dt: self.dt,
            constraints: self.constraints,
            seed: self.seed,
        })
    }

    /// Initial velocities of trials `0..n`.
    pub fn sample_velocities(&self, n: usize) -> Result<Vec<Vec2>> {
        if n == 0 {
            return Err(Error::InvalidArgument("trial count must be at least 1".into()));
        }
        let sampler = OuterVelocitySampler::new(self.nominal, &self.constraints)?;
        (0..n)
            .into_par_iter()
            .map(|i| sampler.sample(&mut trial_rng(self.seed, i)))
            .collect()
    }
}

/// Runs `n` paired trials and returns their records in trial order.
pub fn monte_carlo(controller: ControllerSpec, n: usize, exp: &Experiment) -> Result<Vec<TrialRecord>> {
    Ok(monte_carlo_map(controller, n, exp, |_, _| ())?
        .into_iter()
        .map(|(r, ())| r)
        .collect())
}

/// Like [`monte_carlo`], additionally mapping each trajectory through `inspect`
/// before it is dropped.
pub fn monte_carlo_map<T, F>(
    controller: ControllerSpec,
    n: usize,
    exp: &Experiment,
    inspect: F,
) -> Result<Vec<(TrialRecord, T)>>
where
    T: Send,
    F: Fn(&TrialRecord, &Trajectory) -> T + Sync,
{
    let velocities = exp.sample_velocities(n)?;
    run_trials(controller, &velocities, exp, inspect)
}

/// Runs one trial per given initial velocity.
pub fn run_trials<T, F>(
    controller: ControllerSpec,
    velocities: &[Vec2],
    exp: &Experiment,
    inspect: F,
) -> Result<Vec<(TrialRecord, T)>>
where
    T: Send,
    F: Fn(&TrialRecord, &Trajectory) -> T + Sync,
{
    exp.scenario(controller, Vec2::zeros())?.validate()?;
    velocities
        .par_iter()
        .enumerate()
        .map(|(i, &v)| {
            let s = exp.scenario(controller, v)?;
            let (traj, rec) = run_trial(i, &s)?;
            let extra = inspect(&rec, &traj);
            Ok((rec, extra))
        })
        .collect()
}

pub const TRAJECTORY_HEADER: [&str; 12] = [
    "t", "c_x", "c_z", "dc_x", "dc_z", "p", "lambda", "xi_p", "xi_lambda", "k1", "k2", "eta_p",
];

pub const MONTE_CARLO_HEADER: [&str; 8] = [
    "trial",
    "dcx0",
    "dcz0",
    "controller",
    "success",
    "pos_err",
    "vel_err",
    "failure_reason",
];

/// Shortest round-trip form, scientific for very small or large magnitudes.
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// One row per recorded sample; gain columns are blank for baseline controllers.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRAJECTORY_HEADER)?;
    for r in &traj.rows {
        out.write_record([
            num(r.t),
            num(r.state.c_x),
            num(r.state.c_z),
            num(r.state.dc_x),
            num(r.state.dc_z),
            num(r.input.p),
            num(r.input.lambda),
            num(r.ici.xi_p),
            num(r.ici.xi_lambda),
            opt(r.gains.map(|k| k.k1)),
            opt(r.gains.map(|k| k.k2)),
            opt(r.eta_p),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_monte_carlo_csv<'a, W, I>(records: I, w: W) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a TrialRecord>,
{
    let mut out = csv::Writer::from_writer(w);
    out.write_record(MONTE_CARLO_HEADER)?;
    for r in records {
        out.write_record([
            r.trial.to_string(),
            num(r.initial_velocity.x),
            num(r.initial_velocity.y),
            r.controller.clone(),
            r.success.to_string(),
            num(r.pos_err),
            num(r.vel_err),
            r.failure_reason.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
