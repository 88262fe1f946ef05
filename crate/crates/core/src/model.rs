//! Domain types shared by every analysis: who mines, how much hashrate each
//! party holds, how ties are broken, and the protocol constants.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `alpha1 + alpha2 + alpha_h = 1`.
pub const PARTITION_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MinerId {
    Alice,
    Bob,
    Henry,
}

impl MinerId {
    pub const ALL: [MinerId; 3] = [MinerId::Alice, MinerId::Bob, MinerId::Henry];
    pub const ATTACKERS: [MinerId; 2] = [MinerId::Alice, MinerId::Bob];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_selfish(self) -> bool {
        self != MinerId::Henry
    }

    /// The other selfish pool. Henry has no counterpart.
    pub fn rival(self) -> Option<MinerId> {
        match self {
            MinerId::Alice => Some(MinerId::Bob),
            MinerId::Bob => Some(MinerId::Alice),
            MinerId::Henry => None,
        }
    }
}

impl fmt::Display for MinerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            MinerId::Alice => "alice",
            MinerId::Bob => "bob",
            MinerId::Henry => "henry",
        };
        f.write_str(name)
    }
}

/// Partition of the global hashrate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HashrateProfile {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha_h: f64,
}

impl HashrateProfile {
    pub fn new(alpha1: f64, alpha2: f64, alpha_h: f64) -> Self {
        HashrateProfile {
            alpha1,
            alpha2,
            alpha_h,
        }
    }

    /// Henry takes whatever the attackers do not hold.
    pub fn from_attackers(alpha1: f64, alpha2: f64) -> Self {
        HashrateProfile::new(alpha1, alpha2, 1.0 - alpha1 - alpha2)
    }

    pub fn of(&self, miner: MinerId) -> f64 {
        match miner {
            MinerId::Alice => self.alpha1,
            MinerId::Bob => self.alpha2,
            MinerId::Henry => self.alpha_h,
        }
    }

    pub fn swapped(&self) -> Self {
        HashrateProfile::new(self.alpha2, self.alpha1, self.alpha_h)
    }

    pub fn validate(&self, honest_majority: bool) -> Result<()> {
        let HashrateProfile {
            alpha1,
            alpha2,
            alpha_h,
        } = *self;
        if !(alpha1.is_finite() && alpha2.is_finite() && alpha_h.is_finite()) {
            return Err(Error::InvalidPartition("fractions must be finite".into()));
        }
        if alpha1 < 0.0 || alpha2 < 0.0 {
            return Err(Error::InvalidPartition(format!(
                "attacker hashrates must be non-negative (alpha1 = {alpha1}, alpha2 = {alpha2})"
            )));
        }
        if alpha_h <= 0.0 {
            return Err(Error::InvalidPartition(format!(
                "honest hashrate must be positive (alpha_h = {alpha_h})"
            )));
        }
        let sum = alpha1 + alpha2 + alpha_h;
        if (sum - 1.0).abs() > PARTITION_TOLERANCE {
            return Err(Error::InvalidPartition(format!(
                "fractions sum to {sum}, expected 1"
            )));
        }
        if honest_majority {
            let max_attacker = alpha1.max(alpha2);
            if alpha_h <= max_attacker {
                return Err(Error::HonestMinority {
                    alpha_h,
                    max_attacker,
                });
            }
        }
        Ok(())
    }
}

/// Tie-breaking behavior of miners facing equal-length public branches.
///
/// `gamma1` is the probability that a miner other than Alice extends Alice's
/// branch in a two-way tie between Alice and the incumbent chain (`gamma2`
/// likewise for Bob). `theta1`/`theta2` are Henry's probabilities of picking
/// Alice's or Bob's branch when three branches compete.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TieBreakParams {
    pub gamma1: f64,
    pub gamma2: f64,
    pub theta1: f64,
    pub theta2: f64,
}

impl Default for TieBreakParams {
    fn default() -> Self {
        TieBreakParams::symmetric(0.5, 1.0 / 3.0)
    }
}

impl TieBreakParams {
    pub fn new(gamma1: f64, gamma2: f64, theta1: f64, theta2: f64) -> Self {
        TieBreakParams {
            gamma1,
            gamma2,
            theta1,
            theta2,
        }
    }

    pub fn symmetric(gamma: f64, theta: f64) -> Self {
        TieBreakParams::new(gamma, gamma, theta, theta)
    }

    pub fn swapped(&self) -> Self {
        TieBreakParams::new(self.gamma2, self.gamma1, self.theta2, self.theta1)
    }

    pub fn gamma(&self, attacker: MinerId) -> f64 {
        match attacker {
            MinerId::Alice => self.gamma1,
            MinerId::Bob => self.gamma2,
            MinerId::Henry => 0.0,
        }
    }

    /// `(beta1, beta2) = (gamma1, gamma2) / (gamma1 + gamma2)`: Henry's split
    /// between Alice's and Bob's branches when only the two attackers tie.
    pub fn betas(&self) -> Result<(f64, f64)> {
        let total = self.gamma1 + self.gamma2;
        if total <= 0.0 {
            return Err(Error::UndefinedBeta);
        }
        Ok((self.gamma1 / total, self.gamma2 / total))
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |x: f64| x.is_finite() && (0.0..=1.0).contains(&x);
        if !in_unit(self.gamma1) || !in_unit(self.gamma2) {
            return Err(Error::InvalidParams(format!(
                "gamma values must lie in [0, 1] (got {}, {})",
                self.gamma1, self.gamma2
            )));
        }
        if !in_unit(self.theta1) || !in_unit(self.theta2) || self.theta1 + self.theta2 > 1.0 + 1e-12
        {
            return Err(Error::InvalidParams(format!(
                "theta values must be non-negative with theta1 + theta2 <= 1 (got {}, {})",
                self.theta1, self.theta2
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    /// Private-chain length at which an attacker publishes everything.
    pub n_cap: u8,
    /// Main-chain blocks between difficulty adjustments.
    pub blocks_per_epoch: u32,
    /// Target minutes per block.
    pub unit_time: f64,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        ProtocolParams {
            n_cap: 4,
            blocks_per_epoch: 2016,
            unit_time: 10.0,
        }
    }
}

impl ProtocolParams {
    pub fn with_cap(n_cap: u8) -> Self {
        ProtocolParams {
            n_cap,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cap < 2 {
            return Err(Error::InvalidParams(format!(
                "private-chain cap must be at least 2 (got {})",
                self.n_cap
            )));
        }
        if self.blocks_per_epoch < 1 {
            return Err(Error::InvalidParams("blocks per epoch must be >= 1".into()));
        }
        if !(self.unit_time > 0.0 && self.unit_time.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "unit time must be positive (got {})",
                self.unit_time
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub hashrate: HashrateProfile,
    pub tie: TieBreakParams,
    pub protocol: ProtocolParams,
}

impl Scenario {
    pub fn new(hashrate: HashrateProfile, tie: TieBreakParams, protocol: ProtocolParams) -> Self {
        Scenario {
            hashrate,
            tie,
            protocol,
        }
    }

    /// Scenario with the default tie-breaking (gamma = 1/2, theta = 1/3) and
    /// the given attacker hashrates and cap.
    pub fn attackers(alpha1: f64, alpha2: f64, n_cap: u8) -> Self {
        Scenario::new(
            HashrateProfile::from_attackers(alpha1, alpha2),
            TieBreakParams::default(),
            ProtocolParams::with_cap(n_cap),
        )
    }

    pub fn with_cap(mut self, n_cap: u8) -> Self {
        self.protocol.n_cap = n_cap;
        self
    }

    pub fn n_cap(&self) -> u8 {
        self.protocol.n_cap
    }

    /// Exchange Alice's and Bob's parameters.
    pub fn swapped(&self) -> Self {
        Scenario::new(self.hashrate.swapped(), self.tie.swapped(), self.protocol)
    }

    pub fn validate(self, honest_majority: bool) -> Result<Self> {
        self.hashrate.validate(honest_majority)?;
        self.tie.validate()?;
        self.protocol.validate()?;
        Ok(self)
    }
}
