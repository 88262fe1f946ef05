//! Profitability thresholds: the hashrate at which a selfish pool's share of
//! main-chain blocks starts to exceed its share of hashrate.

use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{relative_revenue, reward_rates_n2, reward_rates_n4, RelativeRevenue};
use crate::error::{Error, Result};
use crate::markov;
use crate::model::{HashrateProfile, MinerId, ProtocolParams, Scenario, TieBreakParams};
use crate::sim::{self, SimConfig};

/// Points in the pre-scan that checks for a single sign change.
pub const PRESCAN_POINTS: usize = 32;

/// Smallest accepted bisection tolerance.
pub const MIN_TOLERANCE: f64 = 1e-5;

/// Successive thresholds closer than this count as converged.
pub const CONVERGENCE_GAP: f64 = 0.002;

/// How relative revenue is computed for a scenario.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Evaluator {
    AnalyticN2,
    AnalyticN4,
    Markov { n_cap: u8 },
    MonteCarlo { n_cap: u8, blocks: u64, seed: u64 },
}

/// Relative revenue plus the standard error of the attacker shares (zero
/// for exact evaluators).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub relative: RelativeRevenue,
    pub stderr: [f64; 3],
}

impl Evaluator {
    pub fn n_cap(&self) -> u8 {
        match *self {
            Evaluator::AnalyticN2 => 2,
            Evaluator::AnalyticN4 => 4,
            Evaluator::Markov { n_cap } | Evaluator::MonteCarlo { n_cap, .. } => n_cap,
        }
    }

    pub fn estimate(&self, hashrate: HashrateProfile, tie: TieBreakParams) -> Result<Estimate> {
        let scenario = Scenario::new(hashrate, tie, ProtocolParams::with_cap(self.n_cap()));
        let exact = |relative| Estimate {
            relative,
            stderr: [0.0; 3],
        };
        match *self {
            Evaluator::AnalyticN2 => relative_revenue(&reward_rates_n2(&hashrate, &tie)).map(exact),
            Evaluator::AnalyticN4 => {
                relative_revenue(&reward_rates_n4(&hashrate, &tie)?).map(exact)
            }
            Evaluator::Markov { .. } => markov::analyze(&scenario).map(|a| exact(a.relative)),
            Evaluator::MonteCarlo { blocks, seed, .. } => {
                let r = sim::run(&SimConfig::new(scenario, blocks, seed))?;
                Ok(Estimate {
                    relative: r.relative_revenue()?,
                    stderr: r.relative_stderr(),
                })
            }
        }
    }

    pub fn relative_revenue(
        &self,
        hashrate: HashrateProfile,
        tie: TieBreakParams,
    ) -> Result<RelativeRevenue> {
        self.estimate(hashrate, tie).map(|e| e.relative)
    }
}

/// Which hashrate moves during a search. Henry always holds the remainder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Search {
    /// Both attackers hold `alpha`; Alice's revenue is tested.
    Symmetric,
    /// Alice's hashrate moves with Bob's fixed.
    Alice { alpha2: f64 },
    /// Bob's hashrate moves with Alice's fixed.
    Bob { alpha1: f64 },
}

impl Search {
    pub fn target(&self) -> MinerId {
        match self {
            Search::Symmetric | Search::Alice { .. } => MinerId::Alice,
            Search::Bob { .. } => MinerId::Bob,
        }
    }

    pub fn profile(&self, alpha: f64) -> HashrateProfile {
        match *self {
            Search::Symmetric => HashrateProfile::from_attackers(alpha, alpha),
            Search::Alice { alpha2 } => HashrateProfile::from_attackers(alpha, alpha2),
            Search::Bob { alpha1 } => HashrateProfile::from_attackers(alpha1, alpha),
        }
    }

    /// Largest searched value that still leaves Henry some hashrate.
    fn upper_limit(&self) -> f64 {
        match *self {
            Search::Symmetric => 0.5,
            Search::Alice { alpha2: fixed } | Search::Bob { alpha1: fixed } => 1.0 - fixed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThresholdQuery {
    pub tie: TieBreakParams,
    pub search: Search,
    pub evaluator: Evaluator,
    pub lo: f64,
    pub hi: f64,
    pub tolerance: f64,
    /// Reject a crossing at which Henry does not out-mine both attackers.
    pub honest_majority: bool,
}

impl ThresholdQuery {
    pub fn new(search: Search, evaluator: Evaluator) -> Self {
        ThresholdQuery {
            tie: TieBreakParams::default(),
            search,
            evaluator,
            lo: 0.01,
            hi: 0.45,
            tolerance: MIN_TOLERANCE,
            honest_majority: true,
        }
    }

    pub fn with_tie(mut self, tie: TieBreakParams) -> Self {
        self.tie = tie;
        self
    }

    fn validate(&self) -> Result<()> {
        self.tie.validate()?;
        if !(0.0 < self.lo && self.lo < self.hi && self.hi < 0.5) {
            return Err(Error::InvalidParams(format!(
                "search interval [{}, {}] must lie inside (0, 0.5)",
                self.lo, self.hi
            )));
        }
        if self.hi >= self.search.upper_limit() {
            return Err(Error::InvalidParams(format!(
                "search interval reaches {} but the fixed attacker leaves at most {}",
                self.hi,
                self.search.upper_limit()
            )));
        }
        if self.tolerance.is_nan() || self.tolerance < MIN_TOLERANCE {
            return Err(Error::InvalidParams(format!(
                "tolerance must be >= {MIN_TOLERANCE} (got {})",
                self.tolerance
            )));
        }
        Ok(())
    }

    /// Profit margin `share - alpha` of the searched miner and its 1-sigma
    /// uncertainty.
    pub fn margin(&self, alpha: f64) -> Result<(f64, f64)> {
        let e = self
            .evaluator
            .estimate(self.search.profile(alpha), self.tie)?;
        let k = self.search.target().index();
        Ok((e.relative.of(self.search.target()) - alpha, e.stderr[k]))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Threshold {
    pub alpha: f64,
    /// Final bracket around the crossing.
    pub bracket: (f64, f64),
    pub evaluations: usize,
    pub warnings: Vec<String>,
}

/// Locate the hashrate at which the searched miner's margin changes sign.
pub fn profitable_threshold(q: &ThresholdQuery) -> Result<Threshold> {
    q.validate()?;
    let step = (q.hi - q.lo) / (PRESCAN_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..PRESCAN_POINTS)
        .map(|i| q.lo + step * i as f64)
        .collect();
    let margins = grid
        .iter()
        .map(|&a| q.margin(a).map(|m| m.0))
        .collect::<Result<Vec<f64>>>()?;
    let crossings: Vec<usize> = (1..grid.len())
        .filter(|&i| (margins[i - 1] > 0.0) != (margins[i] > 0.0))
        .collect();
    let (mut lo, mut hi) = match crossings.as_slice() {
        [] => {
            return Err(Error::NoSignChange {
                lo: q.lo,
                hi: q.hi,
                f_lo: margins[0],
                f_hi: margins[margins.len() - 1],
            })
        }
        [i] => (grid[i - 1], grid[*i]),
        _ => {
            return Err(Error::NonMonotone {
                crossings: crossings.len(),
            })
        }
    };
    let lo_positive = margins[crossings[0] - 1] > 0.0;
    let mut evaluations = PRESCAN_POINTS;

    while hi - lo > q.tolerance {
        let mid = 0.5 * (lo + hi);
        let (m, sigma) = q.margin(mid)?;
        evaluations += 1;
        if sigma > 0.0 && m.abs() < 3.0 * sigma {
            // Sampling noise hides the sign; the bracket cannot shrink further.
            lo = mid;
            hi = mid;
            break;
        }
        if (m > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha = 0.5 * (lo + hi);

    let mut warnings = Vec::new();
    for end in [lo, hi] {
        if let Err(e) = q.search.profile(end).validate(true) {
            warnings.push(format!("at {end:.6}: {e}"));
        }
    }
    if q.honest_majority {
        q.search.profile(alpha).validate(true)?;
    }
    Ok(Threshold {
        alpha,
        bracket: (lo, hi),
        evaluations,
        warnings,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CurvePoint {
    pub alpha1: f64,
    /// Bob's threshold, or why it could not be found.
    pub threshold: std::result::Result<f64, String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdCurve {
    pub points: Vec<CurvePoint>,
    /// Grid point with the smallest threshold.
    pub minimum: Option<(f64, f64)>,
}

/// Bob's threshold at each of Alice's hashrates, evaluated in parallel.
pub fn threshold_curve(alpha1_grid: &[f64], template: &ThresholdQuery) -> ThresholdCurve {
    let points: Vec<CurvePoint> = alpha1_grid
        .par_iter()
        .map(|&alpha1| {
            let mut q = *template;
            q.search = Search::Bob { alpha1 };
            q.hi = q.hi.min(1.0 - alpha1 - 1e-3);
            CurvePoint {
                alpha1,
                threshold: profitable_threshold(&q)
                    .map(|t| t.alpha)
                    .map_err(|e| e.to_string()),
            }
        })
        .collect();
    let minimum = points
        .iter()
        .filter_map(|p| p.threshold.as_ref().ok().map(|&t| (p.alpha1, t)))
        .min_by(|a, b| a.1.total_cmp(&b.1));
    ThresholdCurve { points, minimum }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceStudy {
    pub rows: Vec<(u8, f64)>,
    /// First cap whose threshold is within [`CONVERGENCE_GAP`] of the
    /// previous cap's.
    pub converged_at: Option<u8>,
}

/// Markov thresholds for each cap: symmetric attackers, or Alice alone.
pub fn convergence_study(
    symmetric: bool,
    tie: TieBreakParams,
    caps: std::ops::RangeInclusive<u8>,
) -> Result<ConvergenceStudy> {
    if *caps.start() < 2 || *caps.end() > 8 {
        return Err(Error::InvalidParams("caps must lie in [2, 8]".into()));
    }
    let search = if symmetric {
        Search::Symmetric
    } else {
        Search::Alice { alpha2: 0.0 }
    };
    let caps: Vec<u8> = caps.collect();
    let rows = caps
        .par_iter()
        .map(|&n_cap| {
            let q = ThresholdQuery::new(search, Evaluator::Markov { n_cap }).with_tie(tie);
            profitable_threshold(&q).map(|t| (n_cap, t.alpha))
        })
        .collect::<Result<Vec<_>>>()?;
    let converged_at = rows
        .windows(2)
        .find(|w| (w[1].1 - w[0].1).abs() < CONVERGENCE_GAP)
        .map(|w| w[1].0);
    Ok(ConvergenceStudy { rows, converged_at })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_and_markov_thresholds_agree() {
        for (analytic, n_cap) in [(Evaluator::AnalyticN2, 2), (Evaluator::AnalyticN4, 4)] {
            let a =
                profitable_threshold(&ThresholdQuery::new(Search::Symmetric, analytic)).unwrap();
            let m = profitable_threshold(&ThresholdQuery::new(
                Search::Symmetric,
                Evaluator::Markov { n_cap },
            ))
            .unwrap();
            assert!(
                (a.alpha - m.alpha).abs() <= 2.0 * MIN_TOLERANCE,
                "{a:?} {m:?}"
            );
        }
    }

    #[test]
    fn crossing_brackets_the_sign_change() {
        let q = ThresholdQuery::new(Search::Bob { alpha1: 0.1 }, Evaluator::Markov { n_cap: 3 });
        let t = profitable_threshold(&q).unwrap();
        assert!(q.margin(t.alpha + q.tolerance).unwrap().0 > 0.0);
        assert!(q.margin(t.alpha - q.tolerance).unwrap().0 < 0.0);
    }

    #[test]
    fn no_sign_change_is_reported() {
        let mut q = ThresholdQuery::new(Search::Symmetric, Evaluator::AnalyticN2);
        q.lo = 0.01;
        q.hi = 0.2;
        assert!(matches!(
            profitable_threshold(&q),
            Err(Error::NoSignChange { .. })
        ));
    }

    #[test]
    fn query_validation() {
        let mut q = ThresholdQuery::new(Search::Symmetric, Evaluator::AnalyticN2);
        q.tolerance = 1e-7;
        assert!(profitable_threshold(&q).is_err());
        let mut q = ThresholdQuery::new(Search::Bob { alpha1: 0.6 }, Evaluator::AnalyticN2);
        q.hi = 0.45;
        assert!(profitable_threshold(&q).is_err());
    }

    #[test]
    fn monte_carlo_threshold_is_near_exact() {
        let q = ThresholdQuery::new(
            Search::Symmetric,
            Evaluator::MonteCarlo {
                n_cap: 2,
                blocks: 200_000,
                seed: 3,
            },
        );
        let t = profitable_threshold(&q).unwrap();
        assert!((t.alpha - 0.2664).abs() < 0.01, "{t:?}");
    }
}
