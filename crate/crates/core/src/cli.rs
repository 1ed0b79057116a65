//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when a simulated scenario fails or output
//! cannot be written, 2 on usage errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::capturability::{slice_scan, Coord, RegionClass, SliceSpec};
use crate::control::GainConfig;
use crate::error::{Error, Result};
use crate::harness::{
    monte_carlo, run_scenario, write_monte_carlo_csv, write_trajectory_csv, ControllerSpec, Experiment, Scenario,
};
use crate::model::{ComState, ConstraintSet, Vec2, DEFAULT_DT, DEFAULT_G};

#[derive(Debug, Parser)]
#[command(name = "vhip", version, about = "Balance control of the variable-height inverted pendulum")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Push a resting CoM and roll out one controller; writes the trajectory CSV.
    Simulate(SimulateArgs),
    /// Classify a 2D slice of the state space against the inner and outer regions.
    RegionSlice(SliceArgs),
    /// Monte Carlo over initial velocities sampled from the outer region.
    MonteCarlo(MonteCarloArgs),
    /// Paired Monte Carlo of ICI, ICP and DCM controllers on the same samples.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ConstraintArgs {
    /// Lower ZMP bound (m).
    #[arg(long, default_value_t = -0.1, allow_hyphen_values = true)]
    pub p_min: f64,
    /// Upper ZMP bound (m).
    #[arg(long, default_value_t = 0.14, allow_hyphen_values = true)]
    pub p_max: f64,
    /// Lower stiffness bound (1/s²).
    #[arg(long, default_value_t = 12.25)]
    pub lambda_min: f64,
    /// Upper stiffness bound (1/s²).
    #[arg(long, default_value_t = 19.6)]
    pub lambda_max: f64,
    /// Gravity (m/s²).
    #[arg(long, default_value_t = DEFAULT_G)]
    pub g: f64,
}

impl ConstraintArgs {
    fn build(&self) -> Result<ConstraintSet> {
        ConstraintSet::new(self.p_min, self.p_max, self.lambda_min, self.lambda_max, self.g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ControllerKind {
    Ici,
    Icp,
    Dcm,
    PureIci,
}

#[derive(Debug, Clone, Args)]
pub struct ControllerArgs {
    #[arg(long, value_enum, default_value_t = ControllerKind::Ici)]
    pub controller: ControllerKind,
    /// Initial DCM divergence rate (1/s); defaults to √(g/c_z) at the nominal height.
    #[arg(long)]
    pub omega0: Option<f64>,
    /// Feedback gain of the ICP and DCM baselines.
    #[arg(long, default_value_t = 10.0)]
    pub gain: f64,
    /// Lower gain bound of the ICI controller.
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    /// Upper gain bound of the ICI controller.
    #[arg(long, default_value_t = 10.0)]
    pub max_gain: f64,
    /// Share of the ZMP margin available to the compensation term.
    #[arg(long, default_value_t = 0.1)]
    pub gamma: f64,
}

impl ControllerArgs {
    fn gain_config(&self) -> GainConfig {
        GainConfig {
            epsilon: self.epsilon,
            max_gain: self.max_gain,
            gamma: self.gamma,
            ..GainConfig::default()
        }
    }

    fn spec(&self, kind: ControllerKind, omega0: f64) -> ControllerSpec {
        match kind {
            ControllerKind::Ici => ControllerSpec::Ici(self.gain_config()),
            ControllerKind::Icp => ControllerSpec::Icp { gain: self.gain },
            ControllerKind::Dcm => ControllerSpec::Dcm {
                gain: self.gain,
                omega0,
            },
            ControllerKind::PureIci => ControllerSpec::PureIci,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Integration step (s).
    #[arg(long, default_value_t = DEFAULT_DT)]
    pub dt: f64,
    /// Horizon (s).
    #[arg(long, default_value_t = 4.0)]
    pub tf: f64,
    /// Nominal resting CoM x (m).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub nominal_cx: f64,
    /// Nominal resting CoM height (m).
    #[arg(long, default_value_t = 0.6)]
    pub nominal_cz: f64,
    /// Target CoM x (m).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub target_cx: f64,
    /// Target CoM height (m); defaults to 0.75 for `simulate` and the nominal height otherwise.
    #[arg(long)]
    pub target_cz: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub constraints: ConstraintArgs,
    #[command(flatten)]
    pub controller: ControllerArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Horizontal push (m/s).
    #[arg(long, default_value_t = 0.58, allow_hyphen_values = true)]
    pub push_dcx: f64,
    /// Vertical push (m/s).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub push_dcz: f64,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SliceArgs {
    #[command(flatten)]
    pub constraints: ConstraintArgs,
    /// Horizontal slice axis: cx, cz, dcx or dcz.
    #[arg(long, default_value = "cx")]
    pub u_axis: Coord,
    /// Vertical slice axis.
    #[arg(long, default_value = "dcx")]
    pub v_axis: Coord,
    #[arg(long, allow_hyphen_values = true)]
    pub u_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub u_max: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub v_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub v_max: Option<f64>,
    /// Base state for the two coordinates not swept.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub base_cx: f64,
    #[arg(long, default_value_t = 0.6)]
    pub base_cz: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub base_dcx: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub base_dcz: f64,
    /// Cells per axis.
    #[arg(long, default_value_t = 400)]
    pub resolution: usize,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MonteCarloArgs {
    #[command(flatten)]
    pub constraints: ConstraintArgs,
    #[command(flatten)]
    pub controller: ControllerArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Number of trials.
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub constraints: ConstraintArgs,
    #[command(flatten)]
    pub controller: ControllerArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Second DCM divergence rate compared against `--omega0`.
    #[arg(long, default_value_t = 3.6)]
    pub omega0_alt: f64,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` and runs the subcommand, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) | Error::Csv(_) => 1,
                _ => 2,
            }
        }
    }
}

fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn experiment(run: &RunArgs, cs: ConstraintSet, seed: u64) -> Experiment {
    Experiment {
        nominal: Vec2::new(run.nominal_cx, run.nominal_cz),
        target: Vec2::new(run.target_cx, run.target_cz.unwrap_or(run.nominal_cz)),
        t_f: run.tf,
        dt: run.dt,
        constraints: cs,
        seed,
    }
}

fn default_omega0(c: &ControllerArgs, run: &RunArgs, g: f64) -> f64 {
    c.omega0.unwrap_or_else(|| (g / run.nominal_cz).sqrt())
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("--n must be at least 1".into()));
    }
    Ok(())
}

fn dispatch(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Simulate(a) => {
            let cs = a.constraints.build()?;
            let omega0 = default_omega0(&a.controller, &a.run, cs.g);
            let s = Scenario {
                nominal: ComState::at_rest(Vec2::new(a.run.nominal_cx, a.run.nominal_cz))?,
                push: Vec2::new(a.push_dcx, a.push_dcz),
                controller: a.controller.spec(a.controller.controller, omega0),
                target: Vec2::new(a.run.target_cx, a.run.target_cz.unwrap_or(0.75)),
                t_f: a.run.tf,
                dt: a.run.dt,
                constraints: cs,
                seed: 0,
            };
            let (traj, rec) = run_scenario(&s)?;
            write_trajectory_csv(&traj, sink(&a.out)?)?;
            eprintln!(
                "{}: success={} pos_err={:.3e} vel_err={:.3e} reason={}",
                rec.controller, rec.success, rec.pos_err, rec.vel_err, rec.failure_reason
            );
            Ok(rec.success)
        }
        Command::RegionSlice(a) => {
            let cs = a.constraints.build()?;
            let range = |axis: Coord, lo: Option<f64>, hi: Option<f64>| {
                let (dlo, dhi) = default_range(axis);
                (lo.unwrap_or(dlo), hi.unwrap_or(dhi))
            };
            let spec = SliceSpec {
                base: ComState::new(a.base_cx, a.base_cz, a.base_dcx, a.base_dcz)?,
                u_axis: a.u_axis,
                v_axis: a.v_axis,
                u_range: range(a.u_axis, a.u_min, a.u_max),
                v_range: range(a.v_axis, a.v_min, a.v_max),
                resolution: (a.resolution, a.resolution),
            };
            let grid = slice_scan(&spec, &cs)?;
            grid.write_csv(sink(&a.out)?)?;
            eprintln!(
                "inner={} outer-only={} outside={}",
                grid.count(RegionClass::Inner),
                grid.count(RegionClass::OuterOnly),
                grid.count(RegionClass::Outside)
            );
            Ok(true)
        }
        Command::MonteCarlo(a) => {
            check_n(a.n)?;
            let cs = a.constraints.build()?;
            let exp = experiment(&a.run, cs, a.seed);
            let spec = a.controller.spec(a.controller.controller, default_omega0(&a.controller, &a.run, cs.g));
            let records = monte_carlo(spec, a.n, &exp)?;
            write_monte_carlo_csv(&records, sink(&a.out)?)?;
            let ok = records.iter().filter(|r| r.success).count();
            eprintln!("{}: {ok}/{} succeeded", spec.label(), records.len());
            Ok(true)
        }
        Command::Compare(a) => {
            check_n(a.n)?;
            let cs = a.constraints.build()?;
            let exp = experiment(&a.run, cs, a.seed);
            let omega0 = default_omega0(&a.controller, &a.run, cs.g);
            let specs = [
                a.controller.spec(ControllerKind::Ici, omega0),
                a.controller.spec(ControllerKind::Icp, omega0),
                a.controller.spec(ControllerKind::Dcm, omega0),
                a.controller.spec(ControllerKind::Dcm, a.omega0_alt),
            ];
            let mut all = Vec::new();
            for spec in specs {
                let records = monte_carlo(spec, a.n, &exp)?;
                let ok = records.iter().filter(|r| r.success).count();
                eprintln!("{:<28} {ok:>6}/{}", spec.label(), records.len());
                all.extend(records);
            }
            write_monte_carlo_csv(&all, sink(&a.out)?)?;
            Ok(true)
        }
    }
}

fn default_range(axis: Coord) -> (f64, f64) {
    match axis {
        Coord::Cx => (-0.3, 0.3),
        Coord::Cz => (0.3, 1.0),
        Coord::DCx => (-2.5, 2.5),
        Coord::DCz => (-1.5, 1.5),
    }
}
