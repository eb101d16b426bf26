// SPDX-License-Identifier: Apache-2.0

//! Honest-miner win probabilities and expected one-round rewards.

use serde::{Deserialize, Serialize};

use crate::attack::{self, EconomicContext, RaceParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FeePolicy {
    /// `f(T) = lambda * T`.
    Proportional { lambda: f64 },
    /// A flat per-block fee independent of `T`.
    Constant { flat_fee: f64 },
}

impl FeePolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FeePolicy::Proportional { lambda } if !(lambda >= 0.0 && lambda.is_finite()) => {
                Err(Error::invalid("fee.lambda", "must be finite and >= 0"))
            }
            FeePolicy::Constant { flat_fee } if !(flat_fee >= 0.0 && flat_fee.is_finite()) => {
                Err(Error::invalid("fee.flat_fee", "must be finite and >= 0"))
            }
            _ => Ok(()),
        }
    }

    /// Fee without the domain check; callers guarantee `tx_value >= 0`.
    pub(crate) fn amount(&self, tx_value: f64) -> f64 {
        match *self {
            FeePolicy::Proportional { lambda } => lambda * tx_value,
            FeePolicy::Constant { flat_fee } => flat_fee,
        }
    }

    /// Solves `T + f(T) = value_plus_fee` for `T` (may be negative).
    pub(crate) fn invert_value_plus_fee(&self, value_plus_fee: f64) -> f64 {
        match *self {
            FeePolicy::Proportional { lambda } => value_plus_fee / (1.0 + lambda),
            FeePolicy::Constant { flat_fee } => value_plus_fee - flat_fee,
        }
    }
}

pub fn fee(policy: &FeePolicy, tx_value: f64) -> Result<f64> {
    if !(tx_value >= 0.0) {
        return Err(Error::domain(format!(
            "tx_value must be >= 0, got {tx_value}"
        )));
    }
    Ok(policy.amount(tx_value))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinerAction {
    pub alpha: f64,
    pub tx_value: f64,
}

/// The competitive environment of one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Market {
    pub mean_alpha: f64,
    pub num_miners: u32,
    pub block_reward: f64,
    pub cost_per_power: f64,
    pub fee: FeePolicy,
}

impl Market {
    fn context(&self, tx_value: f64) -> EconomicContext {
        EconomicContext {
            mean_alpha: self.mean_alpha,
            num_miners: self.num_miners,
            cost_per_power: self.cost_per_power,
            block_reward: self.block_reward,
            tx_value,
            fee: self.fee.amount(tx_value),
        }
    }
}

/// How the adversary's attack decision enters the honest miner's win probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Decision {
    Hard,
    Smooth { sharpness: f64 },
}

pub fn win_prob_naive(mean_alpha: f64, num_miners: u32, alpha: f64) -> Result<f64> {
    if !(alpha >= 0.0) || !(mean_alpha >= 0.0) || num_miners == 0 {
        return Err(Error::domain(
            "need alpha >= 0, mean_alpha >= 0, num_miners >= 1",
        ));
    }
    let total = alpha + num_miners as f64 * mean_alpha;
    if total == 0.0 {
        return Err(Error::domain("alpha + m * mean_alpha must be positive"));
    }
    Ok(alpha / total)
}

fn check_action(action: &MinerAction) -> Result<()> {
    if !(action.tx_value >= 0.0) {
        return Err(Error::domain("tx_value must be >= 0"));
    }
    Ok(())
}

pub fn reward_naive(market: &Market, action: &MinerAction) -> Result<f64> {
    check_action(action)?;
    let share = win_prob_naive(market.mean_alpha, market.num_miners, action.alpha)?;
    let payoff = market.block_reward + market.fee.amount(action.tx_value);
    Ok(share * payoff - action.alpha * market.cost_per_power)
}

/// Probability that the adversary attacks a block carrying `tx_value`.
pub fn attack_probability(
    market: &Market,
    race: &RaceParams,
    tx_value: f64,
    decision: Decision,
) -> Result<f64> {
    let ctx = market.context(tx_value);
    match decision {
        Decision::Hard => Ok(attack::attack_decision(race, &ctx)? as f64),
        Decision::Smooth { sharpness } => attack::attack_decision_smooth(race, &ctx, sharpness),
    }
}

/// `(1 - P(beta) A(mean_alpha, T)) * alpha / (alpha + m * mean_alpha)`.
pub fn win_prob_aware(
    market: &Market,
    action: &MinerAction,
    race: &RaceParams,
    decision: Decision,
) -> Result<f64> {
    check_action(action)?;
    let share = win_prob_naive(market.mean_alpha, market.num_miners, action.alpha)?;
    let attacked = attack_probability(market, race, action.tx_value, decision)?;
    Ok((1.0 - attack::success_probability(race) * attacked) * share)
}

pub fn reward_aware(
    market: &Market,
    action: &MinerAction,
    race: &RaceParams,
    decision: Decision,
) -> Result<f64> {
    let gamma = win_prob_aware(market, action, race, decision)?;
    let payoff = market.block_reward + market.fee.amount(action.tx_value);
    Ok(gamma * payoff - action.alpha * market.cost_per_power)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn market(mean_alpha: f64, lambda: f64) -> Market {
        Market {
            mean_alpha,
            num_miners: 1,
            block_reward: 4.0,
            cost_per_power: 1.0,
            fee: FeePolicy::Proportional { lambda },
        }
    }

    #[test]
    fn fee_examples() {
        let prop = FeePolicy::Proportional { lambda: 0.01 };
        assert!((fee(&prop, 774.84).unwrap() - 7.7484).abs() < 1e-12);
        let flat = FeePolicy::Constant { flat_fee: 0.16 };
        assert_eq!(fee(&flat, 0.0).unwrap(), 0.16);
        assert_eq!(fee(&flat, 1e6).unwrap(), 0.16);
        let zero = FeePolicy::Proportional { lambda: 0.0 };
        assert_eq!(fee(&zero, 123.0).unwrap(), 0.0);
        assert!(fee(&prop, -1.0).is_err());
    }

    #[test]
    fn naive_examples() {
        assert_eq!(win_prob_naive(1.0, 1, 1.0).unwrap(), 0.5);
        assert_eq!(win_prob_naive(1.0, 1, 0.0).unwrap(), 0.0);
        assert_eq!(win_prob_naive(1.0, 1, 3.0).unwrap(), 0.75);
        assert!(win_prob_naive(0.0, 5, 0.0).is_err());

        let m = market(1.0, 0.0);
        let idle = MinerAction {
            alpha: 0.0,
            tx_value: 10.0,
        };
        assert_eq!(reward_naive(&m, &idle).unwrap(), 0.0);
        let even = MinerAction {
            alpha: 1.0,
            tx_value: 10.0,
        };
        assert!((reward_naive(&m, &even).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn naive_argmax_is_t_max() {
        let m = market(1.0, 0.01);
        let t_max = 100.0;
        let best = (0..=100)
            .map(|i| t_max * i as f64 / 100.0)
            .map(|t| {
                (
                    t,
                    reward_naive(
                        &m,
                        &MinerAction {
                            alpha: 0.7,
                            tx_value: t,
                        },
                    )
                    .unwrap(),
                )
            })
            .fold(
                (0.0, f64::NEG_INFINITY),
                |acc, x| if x.1 > acc.1 { x } else { acc },
            );
        assert_eq!(best.0, t_max);
    }

    #[test]
    fn aware_example_uses_race_probability() {
        // Hard decision forced to 1 by a huge transaction.
        let race = RaceParams::new(0.3, 6).unwrap();
        let m = market(1.0, 0.0);
        let action = MinerAction {
            alpha: 1.0,
            tx_value: 1e9,
        };
        let g = win_prob_aware(&m, &action, &race, Decision::Hard).unwrap();
        assert!((g - 0.468_812_394_100_4).abs() < 1e-12);
        assert!((g - 0.4688).abs() < 1e-4);
    }

    #[test]
    fn aware_reduces_to_naive_without_attack() {
        let none = RaceParams::new(0.0, 6).unwrap();
        let m = market(2.0, 0.01);
        for t in [0.0, 10.0, 1e6] {
            let a = MinerAction {
                alpha: 1.3,
                tx_value: t,
            };
            assert_eq!(
                reward_aware(&m, &a, &none, Decision::Hard).unwrap(),
                reward_naive(&m, &a).unwrap()
            );
            assert_eq!(
                win_prob_aware(&m, &a, &none, Decision::Smooth { sharpness: 1.0 }).unwrap(),
                win_prob_naive(2.0, 1, 1.3).unwrap()
            );
        }
        // zero value is never worth attacking when the attack costs something
        let race = RaceParams::new(0.3, 6).unwrap();
        let a = MinerAction {
            alpha: 1.0,
            tx_value: 0.0,
        };
        assert_eq!(
            reward_aware(&m, &a, &race, Decision::Hard).unwrap(),
            reward_naive(&m, &a).unwrap()
        );
    }

    #[test]
    fn aware_reward_peaks_at_zero_profit_value() {
        let race = RaceParams::new(0.4, 6).unwrap();
        let m = Market {
            block_reward: 1.0,
            ..market(4.0, 0.01)
        };
        let rewards: Vec<f64> = (0..=400)
            .map(|i| {
                let a = MinerAction {
                    alpha: 1.0,
                    tx_value: i as f64 * 0.25,
                };
                reward_aware(&m, &a, &race, Decision::Hard).unwrap()
            })
            .collect();
        let peak = rewards
            .iter()
            .enumerate()
            .fold(0, |best, (i, r)| if *r > rewards[best] { i } else { best });
        let outcome = race.outcome();
        let t_star = attack::zero_profit_value(&race, &outcome, 4.0, 1.0, &m.fee);
        assert!(t_star > 0.0 && t_star < 100.0);
        let t_peak = peak as f64 * 0.25;
        assert!(t_peak <= t_star && t_star - t_peak < 0.25);
        // sharp drop right after the peak
        assert!(rewards[peak + 1] < rewards[peak] - 0.05);
    }

    proptest! {
        #[test]
        fn aware_never_exceeds_naive(
            beta in 0.0f64..0.49,
            k in 0u32..10,
            alpha in 0.0f64..5.0,
            mean_alpha in 0.01f64..5.0,
            tx in 0.0f64..500.0,
            lambda in 0.0f64..0.05,
        ) {
            let race = RaceParams::new(beta, k).unwrap();
            let m = market(mean_alpha, lambda);
            let a = MinerAction { alpha, tx_value: tx };
            let naive = reward_naive(&m, &a).unwrap();
            for d in [Decision::Hard, Decision::Smooth { sharpness: 1.0 }] {
                let aware = reward_aware(&m, &a, &race, d).unwrap();
                prop_assert!(aware <= naive);
            }
            let attacked = attack_probability(&m, &race, tx, Decision::Hard).unwrap();
            if attacked == 0.0 {
                prop_assert_eq!(reward_aware(&m, &a, &race, Decision::Hard).unwrap(), naive);
            }
            let g = win_prob_aware(&m, &a, &race, Decision::Hard).unwrap();
            prop_assert!((0.0..=1.0).contains(&g));
        }

        #[test]
        fn win_prob_increases_in_alpha(
            a in 0.0f64..10.0, da in 1e-6f64..10.0, mean_alpha in 0.01f64..5.0, m in 1u32..50
        ) {
            let lo = win_prob_naive(mean_alpha, m, a).unwrap();
            let hi = win_prob_naive(mean_alpha, m, a + da).unwrap();
            prop_assert!(hi > lo);
            prop_assert!((0.0..=1.0).contains(&hi));
        }
    }
}
