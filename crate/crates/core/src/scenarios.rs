// SPDX-License-Identifier: Apache-2.0

//! Safe transaction values for a concrete chain and their evolution under a
//! percentage fee.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attack::{self, RaceParams};
use crate::error::{Error, Result};
use crate::rewards::FeePolicy;
use crate::solver::{self, GameParams, TxPolicy, WealthTransition};

/// Per-block economics of a chain at one point in time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainSnapshot {
    pub block_reward: f64,
    pub fee: FeePolicy,
    /// Total mining cost per block, `m * mean_alpha * c`.
    pub network_cost: f64,
    /// Value transferred per block.
    pub observed_value: f64,
    pub confirmations: u32,
}

impl ChainSnapshot {
    /// Bitcoin in late 2021: 6.25 BTC subsidy, 0.16 BTC fees, a break-even
    /// mining cost of 6.41 BTC and 774.84 BTC moved per block.
    pub fn bitcoin() -> Self {
        ChainSnapshot {
            block_reward: 6.25,
            fee: FeePolicy::Constant { flat_fee: 0.16 },
            network_cost: 6.41,
            observed_value: 774.84,
            confirmations: 6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("snapshot.block_reward", self.block_reward),
            ("snapshot.network_cost", self.network_cost),
            ("snapshot.observed_value", self.observed_value),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(field, "must be finite and >= 0"));
            }
        }
        self.fee.validate()
    }
}

impl Default for ChainSnapshot {
    fn default() -> Self {
        ChainSnapshot::bitcoin()
    }
}

/// Largest value per block an adversary with share `beta` cannot profit from.
pub fn safe_value(snapshot: &ChainSnapshot, beta: f64) -> Result<f64> {
    snapshot.validate()?;
    let race = RaceParams::new(beta, snapshot.confirmations)?;
    Ok(attack::zero_profit_value(
        &race,
        &race.outcome(),
        snapshot.network_cost,
        snapshot.block_reward,
        &snapshot.fee,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SafeValuePoint {
    pub beta: f64,
    pub t_star: f64,
}

pub fn safe_value_curve(snapshot: &ChainSnapshot, betas: &[f64]) -> Result<Vec<SafeValuePoint>> {
    betas
        .iter()
        .map(|&beta| {
            Ok(SafeValuePoint {
                beta,
                t_star: safe_value(snapshot, beta)?,
            })
        })
        .collect()
}

/// `0.01, 0.02, ..., 0.49`.
pub fn percent_beta_grid() -> Vec<f64> {
    (1..50).map(|i| i as f64 / 100.0).collect()
}

/// Smallest `beta` in the grid whose safe value falls below `observed_value`.
pub fn threshold_beta(
    snapshot: &ChainSnapshot,
    observed_value: f64,
    betas: &[f64],
) -> Result<Option<f64>> {
    if betas.iter().any(|b| !(*b > 0.0 && *b < 1.0)) {
        return Err(Error::domain("beta grid must lie in (0, 1)"));
    }
    if betas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("beta grid must be strictly ascending"));
    }
    for &beta in betas {
        if safe_value(snapshot, beta)? < observed_value {
            return Ok(Some(beta));
        }
    }
    Ok(None)
}

/// Solver settings for the fee-evolution runs: forty rounds, twenty miners
/// with enough wealth that the budget never binds, and heavy damping.
pub fn fee_evolution_template() -> GameParams {
    GameParams {
        num_miners: 20,
        cost_per_power: 1.0,
        horizon: 40,
        t_max: 1e7,
        momentum: 0.9,
        initial_wealth: solver::InitialWealth::PointMass(150.0),
        wealth_max: 300.0,
        wealth_points: 201,
        alpha_points: 41,
        tx_points: 1,
        transition: WealthTransition::RealizedReward,
        ..GameParams::default()
    }
}

/// `template` with the snapshot's chain, a proportional fee `lambda` and the
/// transaction value pinned to the zero-profit point. Unless the template
/// fixes it, the initial mean power reproduces the snapshot's network cost.
pub fn fee_evolution_params(
    snapshot: &ChainSnapshot,
    beta: f64,
    lambda: f64,
    template: &GameParams,
) -> GameParams {
    let mut p = template.clone();
    p.block_reward = snapshot.block_reward;
    p.confirmations = snapshot.confirmations;
    p.beta = beta;
    p.fee = FeePolicy::Proportional { lambda };
    p.tx_policy = TxPolicy::ZeroProfit;
    if p.initial_mean_alpha.is_none() {
        p.initial_mean_alpha =
            Some(snapshot.network_cost / (p.num_miners as f64 * p.cost_per_power));
    }
    p
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeeEvolution {
    pub lambda: f64,
    /// Zero-profit value at the equilibrium mean power, `t = 0..=horizon`.
    pub t_star: Vec<f64>,
    pub mean_alpha: Vec<f64>,
    /// First round whose safe value reaches the snapshot's observed value.
    pub reached_at: Option<usize>,
    pub converged: bool,
    pub iterations: usize,
}

/// Equilibrium safe-value trajectory for each fee rate, in input order.
pub fn fee_evolution(
    snapshot: &ChainSnapshot,
    beta: f64,
    lambdas: &[f64],
    template: &GameParams,
) -> Result<Vec<FeeEvolution>> {
    snapshot.validate()?;
    lambdas
        .par_iter()
        .map(|&lambda| {
            let params = fee_evolution_params(snapshot, beta, lambda, template);
            let eq = solver::solve_equilibrium(&params)?;
            let t_star = solver::zero_profit_trajectory(&params, &eq.mean_alpha)?;
            let reached_at = t_star.iter().position(|t| *t >= snapshot.observed_value);
            Ok(FeeEvolution {
                lambda,
                t_star,
                mean_alpha: eq.mean_alpha,
                reached_at,
                converged: eq.converged,
                iterations: eq.iterations,
            })
        })
        .collect()
}

/// Smallest fee rate whose safe value reaches the observed value in time.
pub fn smallest_reaching_lambda(runs: &[FeeEvolution]) -> Option<f64> {
    runs.iter()
        .filter(|r| r.reached_at.is_some())
        .map(|r| r.lambda)
        .min_by(f64::total_cmp)
}
