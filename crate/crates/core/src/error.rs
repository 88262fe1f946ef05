use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid hashrate partition: {0}")]
    InvalidPartition(String),
    #[error(
        "honest pool holds {alpha_h} which does not exceed the largest attacker ({max_attacker})"
    )]
    HonestMinority { alpha_h: f64, max_attacker: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("beta weights are undefined when gamma1 + gamma2 = 0")]
    UndefinedBeta,
    #[error("reward rates sum to zero")]
    ZeroTotal,
    #[error("inconsistent world state: {0}")]
    InconsistentState(String),
    #[error("state space exceeded {limit} states")]
    StateExplosion { limit: usize },
    #[error("stationary solve failed: {0}")]
    SingularSystem(String),
    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoSignChange {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
    #[error("pre-scan found {crossings} sign changes; threshold is not unique")]
    NonMonotone { crossings: usize },
    #[error("epoch schedule diverged at epoch {epoch} (T = {duration})")]
    DivergentSchedule { epoch: u32, duration: f64 },
    #[error("never profitable: steady-state share {share} does not exceed hashrate {hashrate}")]
    NeverProfitable { share: f64, hashrate: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidPartition(_)
            | Error::HonestMinority { .. }
            | Error::InvalidParams(_)
            | Error::UndefinedBeta => 2,
            Error::Io(_) | Error::Json(_) => 1,
            _ => 3,
        }
    }
}
