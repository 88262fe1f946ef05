//! Closed-form steady-state revenues for private-chain caps 2 and 4.
//!
//! Rates are expected credited blocks per attack round, i.e. the per-round
//! rewards divided by the stationary probability of the all-zero state.
//! Terms are transcribed and summed in the order they are published.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{HashrateProfile, MinerId, TieBreakParams};

/// Expected credited blocks per attack round for each miner.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardRates {
    pub r1: f64,
    pub r2: f64,
    pub rh: f64,
    /// Stationary probability of the all-zero state, when known.
    pub p000: Option<f64>,
}

impl RewardRates {
    pub fn total(&self) -> f64 {
        self.r1 + self.r2 + self.rh
    }

    pub fn of(&self, miner: MinerId) -> f64 {
        match miner {
            MinerId::Alice => self.r1,
            MinerId::Bob => self.r2,
            MinerId::Henry => self.rh,
        }
    }
}

/// Share of main-chain blocks won by each miner.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelativeRevenue {
    pub r_a: f64,
    pub r_b: f64,
    pub r_h: f64,
}

impl RelativeRevenue {
    pub fn of(&self, miner: MinerId) -> f64 {
        match miner {
            MinerId::Alice => self.r_a,
            MinerId::Bob => self.r_b,
            MinerId::Henry => self.r_h,
        }
    }

    pub fn max_abs_diff(&self, other: &RelativeRevenue) -> f64 {
        MinerId::ALL
            .iter()
            .map(|&m| (self.of(m) - other.of(m)).abs())
            .fold(0.0, f64::max)
    }
}

pub fn relative_revenue(rates: &RewardRates) -> Result<RelativeRevenue> {
    let total = rates.total();
    if total <= 0.0 {
        return Err(Error::ZeroTotal);
    }
    Ok(RelativeRevenue {
        r_a: rates.r1 / total,
        r_b: rates.r2 / total,
        r_h: rates.rh / total,
    })
}

/// Stationary probability of the all-zero state with cap 2.
pub fn p000_n2(h: &HashrateProfile) -> f64 {
    let (a1, a2, ah) = (h.alpha1, h.alpha2, h.alpha_h);
    let inv = 1.0 + a1 + a2 + a1 * ah + 2.0 * a1 * a2 + a2 * ah + 2.0 * a1 * a2 * ah;
    1.0 / inv
}

pub fn reward_rates_n2(h: &HashrateProfile, t: &TieBreakParams) -> RewardRates {
    let (a1, a2, ah) = (h.alpha1, h.alpha2, h.alpha_h);
    let TieBreakParams {
        gamma1: g1,
        gamma2: g2,
        theta1: t1,
        theta2: t2,
    } = *t;

    let r1 = 2.0 * a1 * a1 * (1.0 + ah)
        + (a2 + ah) * a1 * ah * g1
        + a1 * a2 * ah
        + 4.0 * a1 * a1 * a2 * (1.0 + ah)
        + 2.0 * a1 * a2 * ah * ah * t1;
    let r2 = 2.0 * a2 * a2 * (1.0 + ah)
        + (a1 + ah) * ah * a2 * g2
        + a1 * a2 * ah
        + 4.0 * a2 * a2 * a1 * (1.0 + ah)
        + 2.0 * a1 * a2 * ah * ah * t2;
    let rh = a1 * ah * ah * (2.0 - g1)
        + 2.0 * a1 * a2 * ah * ah * (2.0 - t1 - t2)
        + ah
        + a2 * ah * ah * (2.0 - g2)
        + a1 * a2 * ah * (2.0 - g1 - g2);

    RewardRates {
        r1,
        r2,
        rh,
        p000: Some(p000_n2(h)),
    }
}

/// Closed forms for cap 4. No normalizing constant is published for this
/// cap, so `p000` is `None`; only ratios are meaningful.
pub fn reward_rates_n4(h: &HashrateProfile, t: &TieBreakParams) -> Result<RewardRates> {
    let (b1, b2) = t.betas()?;
    let (a1, a2, ah) = (h.alpha1, h.alpha2, h.alpha_h);
    let (g1, g2, t1, t2) = (t.gamma1, t.gamma2, t.theta1, t.theta2);
    let p = f64::powi;

    let r1 = 4.0 * p(a1, 4) * (1.0 + ah)
        + 3.0 * p(a1, 3) * p(ah, 2)
        + 16.0 * p(a1, 4) * a2
        + 4.0 * p(a1, 2) * ah
        + 40.0 * p(a1, 4) * p(a2, 2) * (1.0 + 2.0 * a2)
        + a1 * a2 * ah * (1.0 + g1 + 2.0 * t1 * ah)
        + 10.0 * p(a1, 2) * a2 * ah
        + 20.0 * p(a1, 3) * a2 * ah * (3.0 * a2 + a1)
        + 15.0 * p(a1, 3) * a2 * p(ah, 2)
        + 4.0 * p(a1, 4) * p(a2, 2) * ah * (1.0 + ah)
        + 4.0 * p(a1, 4) * p(a2, 3) * p(ah, 2) * (b1 + 20.0)
        + 5.0 * p(a1, 5) * p(a2, 3) * ah
        + 4.0 * p(a1, 4) * p(a2, 3) * ah * (a2 + 21.0)
        + 3.0 * p(a1, 3) * p(a2, 4) * p(ah, 2) * b1
        + a1 * p(ah, 2) * g1
        + 12.0 * p(a1, 2) * p(a2, 2) * p(ah, 2) * b1
        + p(a1, 2) * p(a2, 2) * p(ah, 3) * b1 * (3.0 * a1 + 2.0 * a2)
        + 6.0 * p(a1, 3) * p(a2, 3) * p(ah, 2) * (10.0 * ah * b1 + 1.0);

    let r2 = 4.0 * p(a2, 4) * (1.0 + ah)
        + 3.0 * p(a2, 3) * p(ah, 2)
        + 16.0 * a1 * p(a2, 4)
        + 4.0 * p(a2, 2) * ah
        + 40.0 * p(a1, 2) * p(a2, 4) * (1.0 + 2.0 * a1)
        + a1 * a2 * ah * (1.0 + g2 + 2.0 * t2 * ah)
        + 10.0 * a1 * p(a2, 2) * ah
        + 20.0 * a1 * p(a2, 3) * ah * (3.0 * a1 + a2)
        + 15.0 * a1 * p(a2, 3) * p(ah, 2)
        + 4.0 * p(a1, 2) * p(a2, 4) * ah * (1.0 + ah)
        + 4.0 * p(a1, 3) * p(a2, 4) * p(ah, 2) * (b2 + 20.0)
        + 5.0 * p(a1, 3) * p(a2, 5) * ah
        + 4.0 * p(a1, 3) * p(a2, 4) * ah * (a1 + 21.0)
        + 3.0 * p(a1, 4) * p(a2, 3) * p(ah, 2) * b2
        + a2 * p(ah, 2) * g2
        + 12.0 * p(a1, 2) * p(a2, 2) * p(ah, 2) * b2
        + p(a1, 2) * p(a2, 2) * p(ah, 3) * b2 * (2.0 * a1 + 3.0 * a2)
        + 6.0 * p(a1, 3) * p(a2, 3) * p(ah, 2) * (10.0 * ah * b2 + 1.0);

    let rh = a1 * p(ah, 2) * (2.0 - g1)
        + a2 * p(ah, 2) * (2.0 - g2)
        + p(a1, 2) * p(a2, 3) * p(ah, 3) * (2.0 * b1 + b2)
        + 2.0 * a1 * a2 * p(ah, 2) * (2.0 - t1 - t2)
        + p(a1, 2) * p(a2, 2) * p(ah, 2) * (6.0 + 4.0 * a1 * a2)
        + p(a1, 3) * p(a2, 2) * p(ah, 3) * (b1 + 2.0 * b2)
        + a1 * a2 * ah * (2.0 - g1 - g2)
        + p(a1, 3) * p(a2, 3) * ah * (a1 + a2)
        + p(a1, 3) * p(a2, 4) * p(ah, 2) * (2.0 * b1 + b2)
        + ah
        + p(a1, 4) * p(a2, 3) * p(ah, 2) * (b1 + 2.0 * b2)
        + 20.0 * p(a1, 3) * p(a2, 3) * p(ah, 3)
        + 2.0 * p(a1, 4) * p(a2, 4) * ah;

    Ok(RewardRates {
        r1,
        r2,
        rh,
        p000: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    // Hand substitution at alpha = (1/4, 1/4, 1/2), gamma = 1/2, theta = 1/3:
    //   1/P000 = 1 + 1/2 + 1/8 + 1/8 + 1/8 + 1/16 = 31/16
    //   R1/P000 = 3/16 + 3/64 + 1/32 + 3/32 + 1/96 = 71/192
    //   Rh/P000 = 3/32 + 1/24 + 1/2 + 3/32 + 1/32 = 73/96
    const R1_QUARTER: f64 = 71.0 / 192.0;
    const RH_QUARTER: f64 = 73.0 / 96.0;

    #[test]
    fn p000_examples() {
        assert_eq!(p000_n2(&HashrateProfile::new(0.0, 0.0, 1.0)), 1.0);
        assert!(close(
            p000_n2(&HashrateProfile::new(0.25, 0.25, 0.5)),
            16.0 / 31.0,
            1e-15
        ));
        assert!(close(
            p000_n2(&HashrateProfile::new(0.1, 0.0, 0.9)),
            1.0 / 1.19,
            1e-15
        ));
    }

    #[test]
    fn n2_quarter_scenario() {
        let r = reward_rates_n2(
            &HashrateProfile::new(0.25, 0.25, 0.5),
            &TieBreakParams::default(),
        );
        assert!(close(r.r1, R1_QUARTER, 1e-15));
        assert!(close(r.r2, R1_QUARTER, 1e-15));
        assert!(close(r.rh, RH_QUARTER, 1e-15));
        assert!(close(r.r1, 0.369792, 1e-6) && close(r.rh, 0.760417, 1e-6));
        let rel = relative_revenue(&r).unwrap();
        assert!(close(rel.r_a, 0.246528, 1e-6));
        assert!(close(rel.r_h, 0.506944, 1e-6));
        assert!(rel.r_a < 0.25);
    }

    #[test]
    fn honest_only_rates() {
        let h = HashrateProfile::new(0.0, 0.0, 1.0);
        let t = TieBreakParams::default();
        let n2 = reward_rates_n2(&h, &t);
        assert_eq!((n2.r1, n2.r2, n2.rh), (0.0, 0.0, 1.0));
        let n4 = reward_rates_n4(&h, &t).unwrap();
        assert_eq!((n4.r1, n4.r2, n4.rh), (0.0, 0.0, 1.0));
        let rel = relative_revenue(&n4).unwrap();
        assert_eq!((rel.r_a, rel.r_b, rel.r_h), (0.0, 0.0, 1.0));
    }

    #[test]
    fn n4_requires_beta() {
        let t = TieBreakParams::new(0.0, 0.0, 0.3, 0.3);
        assert!(matches!(
            reward_rates_n4(&HashrateProfile::new(0.2, 0.2, 0.6), &t),
            Err(Error::UndefinedBeta)
        ));
    }

    #[test]
    fn n4_symmetric_22_percent_is_profitable() {
        let r = reward_rates_n4(
            &HashrateProfile::new(0.22, 0.22, 0.56),
            &TieBreakParams::default(),
        )
        .unwrap();
        let rel = relative_revenue(&r).unwrap();
        assert!(rel.r_a >= 0.22, "r_a = {}", rel.r_a);
    }

    #[test]
    fn zero_total_is_an_error() {
        let r = RewardRates {
            r1: 0.0,
            r2: 0.0,
            rh: 0.0,
            p000: None,
        };
        assert!(matches!(relative_revenue(&r), Err(Error::ZeroTotal)));
    }

    #[test]
    fn relative_revenue_is_scale_invariant() {
        let r = reward_rates_n2(
            &HashrateProfile::new(0.3, 0.1, 0.6),
            &TieBreakParams::default(),
        );
        let base = relative_revenue(&r).unwrap();
        for c in [1e-3, 0.5, 7.0, 1e4] {
            let scaled = RewardRates {
                r1: r.r1 * c,
                r2: r.r2 * c,
                rh: r.rh * c,
                p000: None,
            };
            assert!(relative_revenue(&scaled).unwrap().max_abs_diff(&base) < 1e-14);
        }
    }

    #[test]
    fn swapping_attackers_swaps_rates() {
        let h = HashrateProfile::new(0.27, 0.13, 0.60);
        let t = TieBreakParams::new(0.3, 0.7, 0.2, 0.5);
        for (a, b) in [
            (
                reward_rates_n2(&h, &t),
                reward_rates_n2(&h.swapped(), &t.swapped()),
            ),
            (
                reward_rates_n4(&h, &t).unwrap(),
                reward_rates_n4(&h.swapped(), &t.swapped()).unwrap(),
            ),
        ] {
            assert!(close(a.r1, b.r2, 1e-14));
            assert!(close(a.r2, b.r1, 1e-14));
            assert!(close(a.rh, b.rh, 1e-14));
        }
    }
}
