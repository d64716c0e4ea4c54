//! Spreading Bell nonlocality through networks of Werner states.
//!
//! The protocol collapses copies of a Werner state with GHZ-basis joint
//! measurements at network nodes, lets a subset of the surviving parties
//! measure locally, and evaluates CHSH, MBK and functional Bell tests on the
//! post-selected ensemble (localizable nonlocality).
//!
//! Two independent pipelines are provided:
//!
//! * [`xstate`] / [`measurement`] / [`bell`]: exact algebra on X-type states
//!   (full diagonal plus one extreme off-diagonal pair), fast enough for
//!   ~20 qubits;
//! * [`oracle`]: a brute-force dense density-matrix simulator that never uses
//!   the X structure, used to check every closed form.
//!
//! [`thresholds`] holds critical-noise formulas and root finders,
//! [`lattice`] turns chain / square / triangular routes into chain
//! parameters, [`optimizer`] searches local measurement angles and [`cli`]
//! assembles the tables the command-line tool prints.

pub mod bell;
pub mod cli;
pub mod error;
pub mod lattice;
pub mod measurement;
pub mod optimizer;
pub mod oracle;
pub mod thresholds;
pub mod xstate;

pub use error::{Error, Result};

/// Which Bell test is being evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Inequality {
    Chsh,
    Mbk,
    Fb,
}

impl Inequality {
    pub const ALL: [Inequality; 3] = [Inequality::Chsh, Inequality::Mbk, Inequality::Fb];

    pub fn name(self) -> &'static str {
        match self {
            Inequality::Chsh => "chsh",
            Inequality::Mbk => "mbk",
            Inequality::Fb => "fb",
        }
    }
}

impl std::str::FromStr for Inequality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "chsh" => Ok(Inequality::Chsh),
            "mbk" => Ok(Inequality::Mbk),
            "fb" => Ok(Inequality::Fb),
            other => Err(Error::domain(format!("unknown inequality `{other}`"))),
        }
    }
}

/// 1/√2: the Werner CHSH boundary and the superadditivity cut.
pub const CHSH_WERNER_BOUND: f64 = std::f64::consts::FRAC_1_SQRT_2;
