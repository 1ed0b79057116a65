use thiserror::Error;

/// Which of the two serial gain LPs failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStage {
    /// Stiffness gain `k2`.
    Stiffness,
    /// ZMP gain `k1`, solved after `k2` is fixed.
    Zmp,
}

impl std::fmt::Display for LpStage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LpStage::Stiffness => f.write_str("k2 (stiffness)"),
            LpStage::Zmp => f.write_str("k1 (zmp)"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {what} (got {value})")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid constraint set: {0}")]
    InvalidConstraints(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("state constraint violated: c_z = {c_z} <= 0")]
    StateConstraint { c_z: f64 },

    #[error("non-finite state after integration")]
    NonFinite,

    #[error("gain LP infeasible at stage {stage}")]
    GainInfeasible { stage: LpStage },

    #[error("DCM divergence rate left (0, inf): omega = {omega}")]
    DcmDiverged { omega: f64 },

    #[error("no bracketing interval: base state is not a member of the region")]
    NoBracket,

    #[error("rejection sampler acceptance rate too low ({accepted} of {attempts})")]
    LowAcceptance { accepted: usize, attempts: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
