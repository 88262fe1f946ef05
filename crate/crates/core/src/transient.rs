//! Revenue per unit of wall-clock time across difficulty adjustments.
//!
//! Selfish mining orphans blocks, so the first epoch after an attack starts
//! takes longer than planned and the attacker's blocks arrive more slowly
//! than an honest miner's would. Once the difficulty drops the main chain is
//! back on schedule and the attacker collects its relative share; the
//! question is how many epochs it takes to recoup the first one.

use std::path::Path;

use serde::Serialize;

use crate::analytic::{relative_revenue, reward_rates_n2, RelativeRevenue};
use crate::error::{Error, Result};
use crate::markov;
use crate::model::{ProtocolParams, Scenario};
use crate::sim::{self, SimConfig};
use crate::threshold::Evaluator;

/// Epoch durations outside `[bpe / LIMIT, bpe * LIMIT]` are rejected.
pub const DURATION_LIMIT: f64 = 1e12;

/// Largest delay [`profitable_delay`] looks for.
pub const MAX_DELAY_EPOCHS: u32 = 1_000_000;

const MINUTES_PER_DAY: f64 = 1440.0;

/// Steady-state yield and shares.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RoundRates {
    /// Main-chain blocks per mined block.
    pub n: f64,
    pub shares: RelativeRevenue,
}

/// `n` and the miners' shares under `evaluator` (whose cap overrides the
/// scenario's). The closed form for cap 4 gives shares only, so its yield
/// comes from the cap-4 chain.
pub fn steady_round_rates(scenario: &Scenario, evaluator: &Evaluator) -> Result<RoundRates> {
    let scenario = scenario.with_cap(evaluator.n_cap());
    match *evaluator {
        Evaluator::AnalyticN2 => {
            let rates = reward_rates_n2(&scenario.hashrate, &scenario.tie);
            let p000 = rates
                .p000
                .expect("closed form for cap 2 has a root probability");
            Ok(RoundRates {
                n: rates.total() * p000,
                shares: relative_revenue(&rates)?,
            })
        }
        Evaluator::AnalyticN4 => Ok(RoundRates {
            n: markov::analyze(&scenario)?.main_chain_yield,
            shares: evaluator.relative_revenue(scenario.hashrate, scenario.tie)?,
        }),
        Evaluator::Markov { .. } => {
            let a = markov::analyze(&scenario)?;
            Ok(RoundRates {
                n: a.main_chain_yield,
                shares: a.relative,
            })
        }
        Evaluator::MonteCarlo { blocks, seed, .. } => {
            let r = sim::run(&SimConfig::new(scenario, blocks, seed))?;
            Ok(RoundRates {
                n: r.main_chain_yield(),
                shares: r.relative_revenue()?,
            })
        }
    }
}

/// Global hashrate multiplier `S_i` at the end of epoch `i` (`S_0 = 1`).
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GrowthSchedule {
    Constant,
    /// `S_i = (1 + rate)^i`.
    Geometric {
        rate: f64,
    },
    /// Explicit `S_1, S_2, ...`; the last value holds afterwards.
    Multipliers {
        values: Vec<f64>,
    },
}

impl GrowthSchedule {
    /// One positive multiplier per line; blank lines and `#` comments are
    /// skipped.
    pub fn parse(text: &str) -> Result<GrowthSchedule> {
        let mut values = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v: f64 = line.parse().map_err(|_| {
                Error::InvalidParams(format!("growth line {}: not a number: {line:?}", i + 1))
            })?;
            values.push(v);
        }
        let schedule = GrowthSchedule::Multipliers { values };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn from_file(path: &Path) -> Result<GrowthSchedule> {
        GrowthSchedule::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GrowthSchedule::Constant => Ok(()),
            GrowthSchedule::Geometric { rate } => {
                if rate.is_finite() && *rate > -1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParams(format!(
                        "growth rate must exceed -1 (got {rate})"
                    )))
                }
            }
            GrowthSchedule::Multipliers { values } => {
                if values.is_empty() {
                    return Err(Error::InvalidParams("growth schedule is empty".into()));
                }
                match values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                    Some(v) => Err(Error::InvalidParams(format!(
                        "growth multipliers must be positive (got {v})"
                    ))),
                    None => Ok(()),
                }
            }
        }
    }

    pub fn multiplier(&self, epoch: u32) -> f64 {
        if epoch == 0 {
            return 1.0;
        }
        match self {
            GrowthSchedule::Constant => 1.0,
            GrowthSchedule::Geometric { rate } => (1.0 + rate).powi(epoch as i32),
            GrowthSchedule::Multipliers { values } => {
                values[(epoch as usize - 1).min(values.len() - 1)]
            }
        }
    }
}

/// One difficulty-adjustment period. Times are in target block intervals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: u32,
    /// Main-chain blocks per mined block.
    pub n: f64,
    /// Mined blocks per mined block; always 1.
    pub m: f64,
    /// Solve time per block implied by the difficulty.
    pub math: f64,
    /// Actual solve time per block after hashrate growth.
    pub t: f64,
    /// Wall time of the epoch.
    pub duration: f64,
    /// Global hashrate multiplier.
    pub s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochTrace {
    pub blocks_per_epoch: u32,
    pub epochs: Vec<EpochRecord>,
}

/// Iterate the difficulty recurrences for `k` epochs with a constant
/// main-chain yield `n`.
pub fn simulate_epochs(
    n: f64,
    protocol: &ProtocolParams,
    growth: &GrowthSchedule,
    k: u32,
) -> Result<EpochTrace> {
    if k < 1 {
        return Err(Error::InvalidParams("epoch count must be >= 1".into()));
    }
    if !(n > 0.0 && n <= 1.0 + 1e-12) {
        return Err(Error::InvalidParams(format!(
            "main-chain yield must lie in (0, 1] (got {n})"
        )));
    }
    growth.validate()?;
    let bpe = f64::from(protocol.blocks_per_epoch);
    let mut epochs = Vec::with_capacity(k as usize);
    let mut math = 1.0;
    for i in 1..=k {
        let s = growth.multiplier(i);
        let t = math * growth.multiplier(i - 1) / s;
        let duration = bpe * t / n;
        if !(duration.is_finite()
            && duration <= bpe * DURATION_LIMIT
            && duration >= bpe / DURATION_LIMIT)
        {
            return Err(Error::DivergentSchedule { epoch: i, duration });
        }
        epochs.push(EpochRecord {
            epoch: i,
            n,
            m: 1.0,
            math,
            t,
            duration,
            s,
        });
        math *= bpe / duration;
    }
    Ok(EpochTrace {
        blocks_per_epoch: protocol.blocks_per_epoch,
        epochs,
    })
}

/// Main-chain blocks earned per target block interval over the whole trace
/// by a miner holding `share` of the main chain.
pub fn absolute_revenue(trace: &EpochTrace, share: f64) -> f64 {
    cumulative_absolute_revenue(trace, share)
        .last()
        .copied()
        .unwrap_or(0.0)
}

/// [`absolute_revenue`] of each prefix of the trace.
pub fn cumulative_absolute_revenue(trace: &EpochTrace, share: f64) -> Vec<f64> {
    let per_epoch = f64::from(trace.blocks_per_epoch) * share;
    let mut blocks = 0.0;
    let mut elapsed = 0.0;
    trace
        .epochs
        .iter()
        .map(|e| {
            blocks += per_epoch;
            elapsed += e.duration;
            blocks / elapsed
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProfitableDelay {
    /// Epochs after which cumulative revenue first beats honest mining.
    pub epochs: u32,
    pub days: f64,
    pub absolute_revenue: f64,
}

/// Smallest epoch count after which Alice's cumulative absolute revenue
/// exceeds her hashrate.
pub fn profitable_delay(
    scenario: &Scenario,
    evaluator: &Evaluator,
    growth: &GrowthSchedule,
) -> Result<ProfitableDelay> {
    let rates = steady_round_rates(scenario, evaluator)?;
    delay_from_rates(&rates, scenario, growth)
}

pub fn delay_from_rates(
    rates: &RoundRates,
    scenario: &Scenario,
    growth: &GrowthSchedule,
) -> Result<ProfitableDelay> {
    let alpha1 = scenario.hashrate.alpha1;
    let share = rates.shares.r_a;
    let never = Error::NeverProfitable {
        share,
        hashrate: alpha1,
    };
    if share <= alpha1 {
        return Err(never);
    }
    let protocol = &scenario.protocol;
    let bpe = f64::from(protocol.blocks_per_epoch);
    growth.validate()?;
    let mut math = 1.0;
    let mut blocks = 0.0;
    let mut elapsed = 0.0;
    for k in 1..=MAX_DELAY_EPOCHS {
        let t = math * growth.multiplier(k - 1) / growth.multiplier(k);
        let duration = bpe * t / rates.n;
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::DivergentSchedule { epoch: k, duration });
        }
        blocks += bpe * share;
        elapsed += duration;
        if blocks / elapsed > alpha1 {
            return Ok(ProfitableDelay {
                epochs: k,
                days: f64::from(k) * bpe * protocol.unit_time / MINUTES_PER_DAY,
                absolute_revenue: blocks / elapsed,
            });
        }
        math *= bpe / duration;
    }
    Err(never)
}
