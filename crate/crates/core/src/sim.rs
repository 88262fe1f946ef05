//! Block-level Monte Carlo simulation of the protocol.
//!
//! Each step draws the next block's miner (and, during ties, its branch)
//! and hands it to the rule engine, which decides releases and settles
//! blocks. Tallies are split into consecutive batches so the sampling error
//! of the relative revenues can be estimated from batch means.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::RelativeRevenue;
use crate::engine::WorldState;
use crate::error::{Error, Result};
use crate::model::Scenario;

pub const DEFAULT_BATCHES: u32 = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SimConfig {
    pub scenario: Scenario,
    pub total_blocks: u64,
    pub seed: u64,
    /// Number of equal-length batches used for error estimates.
    pub batches: u32,
}

impl SimConfig {
    pub fn new(scenario: Scenario, total_blocks: u64, seed: u64) -> Self {
        SimConfig {
            scenario,
            total_blocks,
            seed,
            batches: DEFAULT_BATCHES,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate(false)?;
        if self.total_blocks < 1 {
            return Err(Error::InvalidParams("total blocks must be >= 1".into()));
        }
        if self.batches < 1 || u64::from(self.batches) > self.total_blocks {
            return Err(Error::InvalidParams(format!(
                "batch count must lie in [1, {}] (got {})",
                self.total_blocks, self.batches
            )));
        }
        Ok(())
    }
}

/// Tallies indexed by [`MinerId::index`](crate::model::MinerId::index).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SimResult {
    pub mined: [u64; 3],
    pub credited: [u64; 3],
    pub orphaned: [u64; 3],
    /// Returns to the root state.
    pub rounds: u64,
    /// Blocks credited during each batch.
    pub batches: Vec<[u64; 3]>,
}

impl SimResult {
    pub fn total_mined(&self) -> u64 {
        self.mined.iter().sum()
    }

    pub fn main_chain_length(&self) -> u64 {
        self.credited.iter().sum()
    }

    pub fn relative_revenue(&self) -> Result<RelativeRevenue> {
        shares(&self.credited).ok_or(Error::ZeroTotal)
    }

    /// Main-chain blocks per mined block.
    pub fn main_chain_yield(&self) -> f64 {
        self.main_chain_length() as f64 / self.total_mined() as f64
    }

    pub fn mean_round_main_blocks(&self) -> f64 {
        self.main_chain_length() as f64 / self.rounds as f64
    }

    pub fn mean_round_mined_blocks(&self) -> f64 {
        self.total_mined() as f64 / self.rounds as f64
    }

    /// Standard errors of (rA, rB, rH) from the spread of batch shares.
    /// Batches in which nothing was credited are skipped.
    pub fn relative_stderr(&self) -> [f64; 3] {
        let samples: Vec<RelativeRevenue> = self.batches.iter().filter_map(shares).collect();
        let b = samples.len() as f64;
        if samples.len() < 2 {
            return [f64::INFINITY; 3];
        }
        let mut out = [0.0; 3];
        for (k, o) in out.iter_mut().enumerate() {
            let pick = |r: &RelativeRevenue| [r.r_a, r.r_b, r.r_h][k];
            let mean = samples.iter().map(pick).sum::<f64>() / b;
            let var = samples
                .iter()
                .map(|r| (pick(r) - mean).powi(2))
                .sum::<f64>()
                / (b - 1.0);
            *o = (var / b).sqrt();
        }
        out
    }

    /// Every mined block is credited or orphaned.
    pub fn is_conserved(&self) -> bool {
        (0..3).all(|k| self.credited[k] + self.orphaned[k] == self.mined[k])
    }

    /// Pool another independent run into this one.
    pub fn merge(&mut self, other: &SimResult) {
        for k in 0..3 {
            self.mined[k] += other.mined[k];
            self.credited[k] += other.credited[k];
            self.orphaned[k] += other.orphaned[k];
        }
        self.rounds += other.rounds;
        self.batches.extend_from_slice(&other.batches);
    }
}

fn shares(credited: &[u64; 3]) -> Option<RelativeRevenue> {
    let total: u64 = credited.iter().sum();
    if total == 0 {
        return None;
    }
    let t = total as f64;
    Some(RelativeRevenue {
        r_a: credited[0] as f64 / t,
        r_b: credited[1] as f64 / t,
        r_h: credited[2] as f64 / t,
    })
}

/// Generator for replication `stream` of a seed.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn run(config: &SimConfig) -> Result<SimResult> {
    run_stream(config, 0)
}

/// One run using the generator stream `stream` of `config.seed`.
pub fn run_stream(config: &SimConfig, stream: u64) -> Result<SimResult> {
    config.validate()?;
    let scenario = &config.scenario;
    let n_cap = scenario.n_cap();
    let mut rng = rng_for(config.seed, stream);
    let mut state = WorldState::root();
    let mut result = SimResult::default();
    let batches = u64::from(config.batches);
    let mut batch = [0u64; 3];
    let mut batch_index = 0u64;
    let mut batch_end = config.total_blocks / batches;

    for i in 0..config.total_blocks {
        let mv = state.sample_move(scenario, rng.gen::<f64>());
        let (next, tally) = state.apply(mv, n_cap)?;
        state = next;
        result.mined[mv.miner.index()] += 1;
        add(&mut result.credited, &tally.credited);
        add(&mut result.orphaned, &tally.orphaned);
        add(&mut batch, &tally.credited);
        if state.is_root() {
            result.rounds += 1;
        }
        if i + 1 == batch_end {
            result.batches.push(batch);
            batch = [0; 3];
            batch_index += 1;
            batch_end = config.total_blocks * (batch_index + 1) / batches;
        }
    }

    // Close the last round: outstanding blocks are decided as if everything
    // were published now.
    if !state.is_root() {
        let tally = state.finalize();
        add(&mut result.credited, &tally.credited);
        add(&mut result.orphaned, &tally.orphaned);
        if let Some(last) = result.batches.last_mut() {
            add(last, &tally.credited);
        }
    }
    Ok(result)
}

fn add<T: Copy + Into<u64>>(acc: &mut [u64; 3], x: &[T; 3]) {
    for (a, &v) in acc.iter_mut().zip(x) {
        *a += v.into();
    }
}

/// `replications` independent runs (streams `0..replications`) executed on
/// the current rayon pool and merged in stream order.
pub fn run_replications(config: &SimConfig, replications: u64) -> Result<SimResult> {
    let runs: Vec<SimResult> = (0..replications)
        .into_par_iter()
        .map(|stream| run_stream(config, stream))
        .collect::<Result<_>>()?;
    let mut merged = SimResult::default();
    for r in &runs {
        merged.merge(r);
    }
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{HashrateProfile, ProtocolParams, TieBreakParams};

    #[test]
    fn honest_only_run() {
        let s = Scenario::new(
            HashrateProfile::new(0.0, 0.0, 1.0),
            TieBreakParams::default(),
            ProtocolParams::default(),
        );
        let r = run(&SimConfig::new(s, 10_000, 1)).unwrap();
        assert_eq!(r.credited, [0, 0, 10_000]);
        assert_eq!(r.orphaned, [0, 0, 0]);
        assert_eq!(r.rounds, 10_000);
        assert_eq!(r.relative_revenue().unwrap().r_h, 1.0);
    }

    #[test]
    fn conservation_and_batches() {
        let r = run(&SimConfig::new(
            Scenario::attackers(0.3, 0.2, 4),
            100_003,
            9,
        ))
        .unwrap();
        assert!(r.is_conserved());
        assert_eq!(r.total_mined(), 100_003);
        assert_eq!(r.batches.len(), DEFAULT_BATCHES as usize);
        let batched: u64 = r.batches.iter().flatten().sum();
        assert_eq!(batched, r.main_chain_length());
        assert!(r.rounds > 0 && r.rounds < 100_003);
    }

    #[test]
    fn streams_differ_and_repeat() {
        let c = SimConfig::new(Scenario::attackers(0.25, 0.25, 2), 20_000, 5);
        assert_eq!(run_stream(&c, 3).unwrap(), run_stream(&c, 3).unwrap());
        assert_ne!(run_stream(&c, 0).unwrap(), run_stream(&c, 1).unwrap());
    }

    #[test]
    fn merge_adds_tallies() {
        let c = SimConfig::new(Scenario::attackers(0.2, 0.1, 3), 5_000, 2);
        let merged = run_replications(&c, 3).unwrap();
        assert_eq!(merged.total_mined(), 15_000);
        assert_eq!(merged.batches.len(), 3 * DEFAULT_BATCHES as usize);
        assert!(merged.is_conserved());
    }

    #[test]
    fn config_validation() {
        let s = Scenario::attackers(0.2, 0.2, 4);
        assert!(SimConfig::new(s, 0, 1).validate().is_err());
        let mut c = SimConfig::new(s, 10, 1);
        c.batches = 11;
        assert!(c.validate().is_err());
        assert!(SimConfig::new(Scenario::attackers(0.6, 0.6, 4), 10, 1)
            .validate()
            .is_err());
    }
}
