// SPDX-License-Identifier: Apache-2.0

//! Economics of the private double-spend race.
//!
//! The attack is a race between the adversary (per-block probability `beta`)
//! and the honest network: whoever first mines `k + 1` blocks wins. The race
//! is evaluated exactly by a forward pass over the finite chain of states
//! `(honest_blocks, adversary_blocks)`, both bounded by `k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rewards::FeePolicy;

/// How the expected length of a failed attack is charged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DurationConvention {
    /// Every failed attack is charged the full `2k + 1` steps.
    #[default]
    ChargeFullRace,
    /// Failed attacks are charged the steps actually taken, `k + 1 + adversary_blocks`.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaceParams {
    beta: f64,
    confirmations: u32,
    duration: DurationConvention,
}

impl RaceParams {
    pub fn new(beta: f64, confirmations: u32) -> Result<Self> {
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::domain(format!(
                "beta must lie in [0, 1), got {beta}"
            )));
        }
        Ok(RaceParams {
            beta,
            confirmations,
            duration: DurationConvention::default(),
        })
    }

    pub fn with_duration(mut self, duration: DurationConvention) -> Self {
        self.duration = duration;
        self
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn confirmations(&self) -> u32 {
        self.confirmations
    }

    pub fn duration(&self) -> DurationConvention {
        self.duration
    }

    /// Runs the forward pass over the race chain.
    pub fn chain(&self) -> RaceChain {
        RaceChain::new(self.beta, self.confirmations)
    }

    /// Success probability and expected attack length under this race's convention.
    pub fn outcome(&self) -> RaceOutcome {
        if self.beta == 0.0 {
            return RaceOutcome {
                success_prob: 0.0,
                expected_steps: (2 * self.confirmations + 1) as f64,
            };
        }
        let chain = self.chain();
        RaceOutcome {
            success_prob: chain.success_probability(),
            expected_steps: chain.expected_steps(self.duration),
        }
    }
}

/// Absorption probabilities of the race chain.
///
/// `success[h]` is the probability of reaching `(h, k)` and then taking the
/// adversary's winning step; `failure[a]` is the probability of reaching
/// `(k, a)` and then taking the honest winning step.
#[derive(Debug, Clone, PartialEq)]
pub struct RaceChain {
    k: u32,
    success: Vec<f64>,
    failure: Vec<f64>,
}

impl RaceChain {
    fn new(beta: f64, k: u32) -> Self {
        let side = k as usize + 1;
        let mut reach = vec![0.0f64; side * side];
        reach[0] = 1.0;
        for h in 0..side {
            for a in 0..side {
                if h == 0 && a == 0 {
                    continue;
                }
                let mut p = 0.0;
                if a > 0 {
                    p += beta * reach[h * side + a - 1];
                }
                if h > 0 {
                    p += (1.0 - beta) * reach[(h - 1) * side + a];
                }
                reach[h * side + a] = p;
            }
        }
        let success = (0..side)
            .map(|h| beta * reach[h * side + k as usize])
            .collect();
        let failure = (0..side)
            .map(|a| (1.0 - beta) * reach[k as usize * side + a])
            .collect();
        RaceChain {
            k,
            success,
            failure,
        }
    }

    pub fn success_by_honest_blocks(&self) -> &[f64] {
        &self.success
    }

    pub fn failure_by_adversary_blocks(&self) -> &[f64] {
        &self.failure
    }

    pub fn success_probability(&self) -> f64 {
        self.success.iter().sum()
    }

    pub fn expected_steps(&self, convention: DurationConvention) -> f64 {
        let k = self.k as f64;
        let won: f64 = self
            .success
            .iter()
            .enumerate()
            .map(|(h, p)| p * (k + 1.0 + h as f64))
            .sum();
        let lost = match convention {
            DurationConvention::ChargeFullRace => {
                (2.0 * k + 1.0) * (1.0 - self.success_probability())
            }
            DurationConvention::Exact => self
                .failure
                .iter()
                .enumerate()
                .map(|(a, p)| p * (k + 1.0 + a as f64))
                .sum(),
        };
        lost + won
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaceOutcome {
    pub success_prob: f64,
    pub expected_steps: f64,
}

/// Market state seen by the adversary when it decides whether to attack a block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EconomicContext {
    pub mean_alpha: f64,
    pub num_miners: u32,
    pub cost_per_power: f64,
    pub block_reward: f64,
    pub tx_value: f64,
    pub fee: f64,
}

impl EconomicContext {
    /// Total mining cost the network pays per block, `m * mean_alpha * c`.
    pub fn network_cost(&self) -> f64 {
        self.num_miners as f64 * self.mean_alpha * self.cost_per_power
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.mean_alpha >= 0.0, "mean_alpha must be >= 0"),
            (self.num_miners >= 1, "num_miners must be >= 1"),
            (self.cost_per_power > 0.0, "cost_per_power must be > 0"),
            (self.block_reward >= 0.0, "block_reward must be >= 0"),
            (self.tx_value >= 0.0, "tx_value must be >= 0"),
            (self.fee >= 0.0, "fee must be >= 0"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::domain(*msg)),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackProfile {
    pub success_prob: f64,
    pub expected_steps: f64,
    pub expected_cost: f64,
    pub expected_profit: f64,
}

pub fn success_probability(race: &RaceParams) -> f64 {
    race.outcome().success_prob
}

/// `beta^(k+1) * sum_{j=0..k} C(k+j, j) (1-beta)^j`.
pub fn success_probability_closed_form(race: &RaceParams) -> f64 {
    let (beta, k) = (race.beta, race.confirmations as u64);
    if beta == 0.0 {
        return 0.0;
    }
    let mut binom = 1.0f64;
    let mut pow = 1.0f64;
    let mut sum = 0.0f64;
    for j in 0..=k {
        if j > 0 {
            binom *= (k + j) as f64 / j as f64;
            pow *= 1.0 - beta;
        }
        sum += binom * pow;
    }
    beta.powi(k as i32 + 1) * sum
}

pub fn expected_attack_steps(race: &RaceParams) -> f64 {
    race.outcome().expected_steps
}

/// `beta * m * mean_alpha * c * expected_attack_steps`.
pub fn attack_cost(race: &RaceParams, ctx: &EconomicContext) -> Result<f64> {
    ctx.validate()?;
    Ok(cost_from(race, &race.outcome(), ctx.network_cost()))
}

fn cost_from(race: &RaceParams, outcome: &RaceOutcome, network_cost: f64) -> f64 {
    if race.beta == 0.0 {
        return 0.0;
    }
    race.beta * network_cost * outcome.expected_steps
}

fn reward_from(race: &RaceParams, outcome: &RaceOutcome, ctx: &EconomicContext) -> f64 {
    let prize = (race.confirmations as f64 + 1.0) * ctx.block_reward + ctx.tx_value + ctx.fee;
    outcome.success_prob * prize - cost_from(race, outcome, ctx.network_cost())
}

/// Expected profit of attacking a block: `P * ((k+1) b + T + f(T)) - C`.
pub fn adversary_reward(race: &RaceParams, ctx: &EconomicContext) -> Result<f64> {
    ctx.validate()?;
    Ok(reward_from(race, &race.outcome(), ctx))
}

pub fn attack_profile(race: &RaceParams, ctx: &EconomicContext) -> Result<AttackProfile> {
    ctx.validate()?;
    let outcome = race.outcome();
    Ok(AttackProfile {
        success_prob: outcome.success_prob,
        expected_steps: outcome.expected_steps,
        expected_cost: cost_from(race, &outcome, ctx.network_cost()),
        expected_profit: reward_from(race, &outcome, ctx),
    })
}

/// 1 when the attack has strictly positive expected profit.
pub fn attack_decision(race: &RaceParams, ctx: &EconomicContext) -> Result<u8> {
    Ok(u8::from(adversary_reward(race, ctx)? > 0.0))
}

/// Logistic relaxation of [`attack_decision`]; a powerless adversary never attacks.
pub fn attack_decision_smooth(
    race: &RaceParams,
    ctx: &EconomicContext,
    sharpness: f64,
) -> Result<f64> {
    if !(sharpness > 0.0) {
        return Err(Error::domain(format!(
            "sharpness must be > 0, got {sharpness}"
        )));
    }
    if race.beta == 0.0 {
        return Ok(0.0);
    }
    Ok(logistic(sharpness * adversary_reward(race, ctx)?))
}

pub(crate) fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Largest transaction value the adversary cannot profit from.
///
/// Solves `T + f(T) = C / P - (k+1) b` for `T`, clamped at zero. Returns
/// `f64::INFINITY` for a powerless adversary.
pub fn zero_profit_value(
    race: &RaceParams,
    outcome: &RaceOutcome,
    network_cost: f64,
    block_reward: f64,
    fee: &FeePolicy,
) -> f64 {
    unclamped_zero_profit_value(race, outcome, network_cost, block_reward, fee).max(0.0)
}

pub(crate) fn unclamped_zero_profit_value(
    race: &RaceParams,
    outcome: &RaceOutcome,
    network_cost: f64,
    block_reward: f64,
    fee: &FeePolicy,
) -> f64 {
    if race.beta == 0.0 || outcome.success_prob == 0.0 {
        return f64::INFINITY;
    }
    let cost = cost_from(race, outcome, network_cost);
    let value_plus_fee =
        cost / outcome.success_prob - (race.confirmations as f64 + 1.0) * block_reward;
    fee.invert_value_plus_fee(value_plus_fee)
}
