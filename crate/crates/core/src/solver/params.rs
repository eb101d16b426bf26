// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::attack::{DurationConvention, RaceParams};
use crate::error::{Error, Result};
use crate::rewards::{FeePolicy, Market};

/// Which reward the miners optimize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    /// Ignores the adversary.
    Naive,
    /// Discounts a win by the probability that the block is reversed.
    #[default]
    Aware,
}

/// Attack decision used inside the solver's win probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverDecision {
    /// Logistic relaxation with the configured sharpness.
    #[default]
    Smooth,
    Hard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxPolicy {
    /// Search `T` over `[0, t_max]` jointly with `alpha`.
    #[default]
    Optimize,
    /// Every miner carries the adversary's zero-profit value at the current mean power.
    ZeroProfit,
}

/// Wealth reached by a miner that wins the block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WealthTransition {
    /// `x + R`, where `R` is the expected one-round reward.
    #[default]
    ExpectedReward,
    /// `x + b + f(T) - alpha * c`, the payoff actually collected.
    RealizedReward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentumRule {
    /// `new_t = gamma * old_t + (1 - gamma) * mean_t`.
    #[default]
    Convex,
    /// `new_{t+1} = gamma * old_t + mean_t`; the first entry stays at the initial guess.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialWealth {
    /// Every miner starts with the same wealth.
    PointMass(f64),
    /// Mass per wealth grid point.
    Masses(Vec<f64>),
}

/// Every scalar, grid and switch the equilibrium solver needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameParams {
    pub num_miners: u32,
    pub cost_per_power: f64,
    pub block_reward: f64,
    pub beta: f64,
    pub confirmations: u32,
    /// Index of the last round; the game has `horizon + 1` rounds.
    pub horizon: usize,
    pub fee: FeePolicy,
    pub t_max: f64,
    pub momentum: f64,
    /// Defaults to the symmetric one-round equilibrium `m (b + f(t_max)) / (c (m+1)^2)`.
    pub initial_mean_alpha: Option<f64>,
    pub initial_wealth: InitialWealth,
    pub wealth_max: f64,
    pub wealth_points: usize,
    pub alpha_points: usize,
    pub tx_points: usize,
    pub sharpness: f64,
    /// Defaults to `1e-6 * initial_mean_alpha`.
    pub tolerance: Option<f64>,
    pub max_iterations: usize,
    pub reward: RewardMode,
    pub decision: SolverDecision,
    pub tx_policy: TxPolicy,
    pub transition: WealthTransition,
    pub momentum_rule: MomentumRule,
    pub duration: DurationConvention,
    /// Polish each grid argmax with a golden-section search inside its bracketing cells.
    pub refine: bool,
}

impl Default for GameParams {
    fn default() -> Self {
        GameParams {
            num_miners: 4,
            cost_per_power: 1.0,
            block_reward: 5.0,
            beta: 0.0,
            confirmations: 6,
            horizon: 20,
            fee: FeePolicy::Proportional { lambda: 0.01 },
            t_max: 100.0,
            momentum: 0.5,
            initial_mean_alpha: None,
            initial_wealth: InitialWealth::PointMass(30.0),
            wealth_max: 60.0,
            wealth_points: 201,
            alpha_points: 101,
            tx_points: 101,
            sharpness: 1.0,
            tolerance: None,
            max_iterations: 500,
            reward: RewardMode::Aware,
            decision: SolverDecision::Smooth,
            tx_policy: TxPolicy::Optimize,
            transition: WealthTransition::ExpectedReward,
            momentum_rule: MomentumRule::Convex,
            duration: DurationConvention::ChargeFullRace,
            refine: true,
        }
    }
}

fn ensure(ok: bool, field: &str, constraint: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::invalid(field, constraint))
    }
}

impl GameParams {
    pub fn validate(&self) -> Result<()> {
        ensure(self.num_miners >= 1, "num_miners", "must be >= 1")?;
        ensure(
            self.cost_per_power > 0.0 && self.cost_per_power.is_finite(),
            "cost_per_power",
            "must be finite and > 0",
        )?;
        ensure(
            self.block_reward >= 0.0 && self.block_reward.is_finite(),
            "block_reward",
            "must be finite and >= 0",
        )?;
        ensure(
            (0.0..1.0).contains(&self.beta),
            "beta",
            "must lie in [0, 1)",
        )?;
        self.fee.validate()?;
        ensure(
            self.t_max >= 0.0 && self.t_max.is_finite(),
            "t_max",
            "must be finite and >= 0",
        )?;
        ensure(
            (0.0..1.0).contains(&self.momentum),
            "momentum",
            "must lie in [0, 1)",
        )?;
        if let Some(a) = self.initial_mean_alpha {
            ensure(
                a > 0.0 && a.is_finite(),
                "initial_mean_alpha",
                "must be finite and > 0",
            )?;
        }
        ensure(
            self.wealth_max > 0.0 && self.wealth_max.is_finite(),
            "wealth_max",
            "must be finite and > 0",
        )?;
        ensure(self.wealth_points >= 2, "wealth_points", "must be >= 2")?;
        ensure(self.alpha_points >= 2, "alpha_points", "must be >= 2")?;
        ensure(self.tx_points >= 1, "tx_points", "must be >= 1")?;
        ensure(
            self.sharpness > 0.0 && self.sharpness.is_finite(),
            "sharpness",
            "must be finite and > 0",
        )?;
        if let Some(eps) = self.tolerance {
            ensure(
                eps > 0.0 && eps.is_finite(),
                "tolerance",
                "must be finite and > 0",
            )?;
        }
        ensure(self.max_iterations >= 1, "max_iterations", "must be >= 1")?;
        match &self.initial_wealth {
            InitialWealth::PointMass(x) => ensure(
                (0.0..=self.wealth_max).contains(x),
                "initial_wealth",
                "point mass must lie in [0, wealth_max]",
            ),
            InitialWealth::Masses(w) => {
                ensure(
                    w.len() == self.wealth_points,
                    "initial_wealth",
                    "needs one mass per wealth grid point",
                )?;
                ensure(
                    w.iter().all(|m| *m >= 0.0 && m.is_finite()),
                    "initial_wealth",
                    "masses must be finite and >= 0",
                )?;
                let total: f64 = w.iter().sum();
                ensure(
                    (total - 1.0).abs() <= 1e-9,
                    "initial_wealth",
                    "masses must sum to 1",
                )
            }
        }
    }

    /// Fills the derived defaults and validates.
    pub fn resolved(&self) -> Result<GameParams> {
        self.validate()?;
        let mut p = self.clone();
        let alpha0 = p.initial_mean_alpha();
        p.initial_mean_alpha = Some(alpha0);
        p.tolerance = Some(p.tolerance());
        p.validate()?;
        Ok(p)
    }

    pub fn initial_mean_alpha(&self) -> f64 {
        self.initial_mean_alpha.unwrap_or_else(|| {
            let m = self.num_miners as f64;
            let payoff = self.block_reward + self.fee.amount(self.t_max);
            let guess = m * payoff / (self.cost_per_power * (m + 1.0) * (m + 1.0));
            if guess > 0.0 {
                guess
            } else {
                1.0
            }
        })
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
            .unwrap_or_else(|| 1e-6 * self.initial_mean_alpha())
    }

    pub fn race(&self) -> Result<RaceParams> {
        Ok(RaceParams::new(self.beta, self.confirmations)?.with_duration(self.duration))
    }

    pub fn market(&self, mean_alpha: f64) -> Market {
        Market {
            mean_alpha,
            num_miners: self.num_miners,
            block_reward: self.block_reward,
            cost_per_power: self.cost_per_power,
            fee: self.fee,
        }
    }

    pub fn tx_grid(&self) -> Vec<f64> {
        if self.tx_points == 1 {
            return vec![self.t_max];
        }
        let last = (self.tx_points - 1) as f64;
        (0..self.tx_points)
            .map(|l| self.t_max * l as f64 / last)
            .collect()
    }
}
