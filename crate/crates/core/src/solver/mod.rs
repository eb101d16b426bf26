// SPDX-License-Identifier: Apache-2.0

//! Fixed-point computation of the mean-field equilibrium.
//!
//! Each outer iteration runs three passes against the current mean-power
//! trajectory: backward induction for the policy and value tables, a forward
//! pass pushing the wealth distribution through the policy, and a damped
//! update of the trajectory. Iteration stops once no entry of the trajectory
//! moves by more than the tolerance.

pub(crate) mod backward;
mod grid;
mod params;
pub(crate) mod stage;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use grid::{Table, WealthGrid};
pub use params::{
    GameParams, InitialWealth, MomentumRule, RewardMode, SolverDecision, TxPolicy, WealthTransition,
};

use stage::Stage;

/// `alpha` and `T` per `(t, wealth index)`, for `t = 0..=horizon`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyTable {
    pub alpha: Table,
    pub tx: Table,
}

/// `V_t(x)` for `t = 0..=horizon + 1`; the last row is identically zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueTable {
    pub values: Table,
}

/// Wealth mass per `(t, wealth index)`, for `t = 0..=horizon + 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WealthDistribution {
    pub mass: Table,
}

impl WealthDistribution {
    pub fn mean_wealth(&self, grid: &WealthGrid) -> Vec<f64> {
        self.mass
            .iter_rows()
            .map(|row| row.iter().enumerate().map(|(i, m)| grid.point(i) * m).sum())
            .collect()
    }

    pub fn total_mass(&self) -> Vec<f64> {
        self.mass.iter_rows().map(|row| row.iter().sum()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumResult {
    pub wealth_grid: Vec<f64>,
    /// The trajectory the returned policy best-responds to.
    pub mean_alpha: Vec<f64>,
    pub policy: PolicyTable,
    pub values: ValueTable,
    pub wealth: WealthDistribution,
    /// Power-weighted smooth attack probability per round.
    pub attack_prob: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// `max_t |new - old|` after each outer iteration.
    pub residuals: Vec<f64>,
}

/// Whether an adversary actually acts on the blocks during policy evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackMode {
    #[default]
    Present,
    Absent,
}

pub fn wealth_grid(params: &GameParams) -> WealthGrid {
    WealthGrid::new(params.wealth_max, params.wealth_points)
}

fn check_trajectory(params: &GameParams, trajectory: &[f64]) -> Result<()> {
    if trajectory.len() != params.horizon + 1 {
        return Err(Error::domain(format!(
            "trajectory needs horizon + 1 = {} entries, got {}",
            params.horizon + 1,
            trajectory.len()
        )));
    }
    if let Some(a) = trajectory.iter().find(|a| !(**a >= 0.0 && a.is_finite())) {
        return Err(Error::domain(format!(
            "mean power must be finite and >= 0, got {a}"
        )));
    }
    Ok(())
}

fn solver_stages(params: &GameParams, trajectory: &[f64]) -> Result<Vec<Stage>> {
    let race = params.race()?;
    let outcome = race.outcome();
    Ok(trajectory
        .iter()
        .map(|&a| Stage::solver(params, &race, outcome, a))
        .collect())
}

/// Optimal policy and value tables against a fixed mean-power trajectory.
pub fn backward_induction(
    params: &GameParams,
    trajectory: &[f64],
) -> Result<(PolicyTable, ValueTable)> {
    params.validate()?;
    check_trajectory(params, trajectory)?;
    let grid = wealth_grid(params);
    let stages = solver_stages(params, trajectory)?;
    let (alpha, tx, values) = backward::induct(params, &grid, &stages)?;
    Ok((PolicyTable { alpha, tx }, ValueTable { values }))
}

pub fn initial_distribution(params: &GameParams) -> Vec<f64> {
    let grid = wealth_grid(params);
    match &params.initial_wealth {
        InitialWealth::PointMass(x) => {
            let mut w = vec![0.0; grid.len()];
            grid.deposit(&mut w, *x, 1.0);
            w
        }
        InitialWealth::Masses(w) => w.clone(),
    }
}

fn propagate(
    grid: &WealthGrid,
    policy: &PolicyTable,
    stages: &[Stage],
    initial: &[f64],
) -> WealthDistribution {
    let rounds = stages.len();
    let mut mass = Table::zeros(rounds + 1, grid.len());
    mass.row_mut(0).copy_from_slice(initial);
    for (t, stage) in stages.iter().enumerate() {
        let mut next = vec![0.0; grid.len()];
        for (i, &w) in mass.row(t).iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let tr = stage.transition(grid.point(i), policy.alpha.get(t, i), policy.tx.get(t, i));
            if tr.gamma > 0.0 {
                grid.deposit(&mut next, tr.x_win, tr.gamma * w);
            }
            grid.deposit(&mut next, tr.x_lose, (1.0 - tr.gamma) * w);
        }
        mass.row_mut(t + 1).copy_from_slice(&next);
    }
    WealthDistribution { mass }
}

fn check_policy(params: &GameParams, policy: &PolicyTable) -> Result<()> {
    let shape = (params.horizon + 1, params.wealth_points);
    for table in [&policy.alpha, &policy.tx] {
        if (table.rows(), table.cols()) != shape {
            return Err(Error::domain(format!(
                "policy must be {}x{}, got {}x{}",
                shape.0,
                shape.1,
                table.rows(),
                table.cols()
            )));
        }
    }
    Ok(())
}

pub(crate) fn check_inputs(
    params: &GameParams,
    policy: &PolicyTable,
    trajectory: &[f64],
) -> Result<()> {
    check_trajectory(params, trajectory)?;
    check_policy(params, policy)
}

/// Pushes `initial` through the policy under the solver's own transition.
pub fn forward_wealth(
    params: &GameParams,
    policy: &PolicyTable,
    trajectory: &[f64],
    initial: &[f64],
) -> Result<WealthDistribution> {
    params.validate()?;
    check_trajectory(params, trajectory)?;
    check_policy(params, policy)?;
    if initial.len() != params.wealth_points {
        return Err(Error::domain(
            "initial distribution must match the wealth grid",
        ));
    }
    let stages = solver_stages(params, trajectory)?;
    Ok(propagate(&wealth_grid(params), policy, &stages, initial))
}

/// Policy-weighted mean power `sum_x alpha_t(x) w_t(x)` per round.
pub fn policy_mean_power(policy: &PolicyTable, wealth: &WealthDistribution) -> Vec<f64> {
    (0..policy.alpha.rows())
        .map(|t| {
            policy
                .alpha
                .row(t)
                .iter()
                .zip(wealth.mass.row(t))
                .map(|(a, w)| a * w)
                .sum()
        })
        .collect()
}

pub fn update_mean_field(
    params: &GameParams,
    policy: &PolicyTable,
    wealth: &WealthDistribution,
    previous: &[f64],
) -> Vec<f64> {
    let gamma = params.momentum;
    let played = policy_mean_power(policy, wealth);
    match params.momentum_rule {
        MomentumRule::Convex => previous
            .iter()
            .zip(&played)
            .map(|(old, mean)| gamma * old + (1.0 - gamma) * mean)
            .collect(),
        MomentumRule::Literal => {
            let mut next = Vec::with_capacity(previous.len());
            next.push(params.initial_mean_alpha());
            next.extend(
                previous
                    .iter()
                    .zip(&played)
                    .take(previous.len().saturating_sub(1))
                    .map(|(old, mean)| gamma * old + mean),
            );
            next
        }
    }
}

fn attack_diagnostics(
    params: &GameParams,
    stages: &[Stage],
    policy: &PolicyTable,
    wealth: &WealthDistribution,
) -> Vec<f64> {
    stages
        .iter()
        .enumerate()
        .map(|(t, stage)| {
            let (mut power, mut attacked) = (0.0, 0.0);
            for i in 0..policy.alpha.cols() {
                let weight = policy.alpha.get(t, i) * wealth.mass.get(t, i);
                power += weight;
                attacked +=
                    weight * stage.smooth_attack_prob(policy.tx.get(t, i), params.sharpness);
            }
            if power > 0.0 {
                attacked / power
            } else {
                0.0
            }
        })
        .collect()
}

/// Runs the outer fixed-point loop until the trajectory settles or the
/// iteration budget runs out. Non-convergence is reported, not raised.
pub fn solve_equilibrium(params: &GameParams) -> Result<EquilibriumResult> {
    let params = params.resolved()?;
    let grid = wealth_grid(&params);
    let initial = initial_distribution(&params);
    let tolerance = params.tolerance();
    let mut trajectory = vec![params.initial_mean_alpha(); params.horizon + 1];
    let mut residuals = Vec::new();

    loop {
        let stages = solver_stages(&params, &trajectory)?;
        let (alpha, tx, values) = backward::induct(&params, &grid, &stages)?;
        let policy = PolicyTable { alpha, tx };
        let wealth = propagate(&grid, &policy, &stages, &initial);
        let next = update_mean_field(&params, &policy, &wealth, &trajectory);
        let residual = next
            .iter()
            .zip(&trajectory)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        residuals.push(residual);
        let converged = residual <= tolerance;
        if converged || residuals.len() >= params.max_iterations {
            let attack_prob = attack_diagnostics(&params, &stages, &policy, &wealth);
            return Ok(EquilibriumResult {
                wealth_grid: grid.points(),
                mean_alpha: trajectory,
                policy,
                values: ValueTable { values },
                wealth,
                attack_prob,
                converged,
                iterations: residuals.len(),
                residuals,
            });
        }
        trajectory = next;
    }
}

/// Wealth distribution when a fixed policy meets an adversary that uses the
/// exact attack rule (or no adversary at all).
///
/// With the adversary present a win survives with probability
/// `1 - P * A(mean_alpha, T)`. `reward` selects the reward booked on a win
/// under the expected-reward transition.
pub fn evaluate_policy_distribution(
    params: &GameParams,
    policy: &PolicyTable,
    trajectory: &[f64],
    reward: RewardMode,
    attack: AttackMode,
) -> Result<WealthDistribution> {
    params.validate()?;
    check_trajectory(params, trajectory)?;
    check_policy(params, policy)?;
    let race = params.race()?;
    let outcome = race.outcome();
    let stages: Vec<Stage> = trajectory
        .iter()
        .map(|&a| {
            Stage::evaluation(
                params,
                &race,
                outcome,
                a,
                reward,
                attack == AttackMode::Present,
            )
        })
        .collect();
    Ok(propagate(
        &wealth_grid(params),
        policy,
        &stages,
        &initial_distribution(params),
    ))
}

/// Mean wealth per round, `t = 0..=horizon + 1`.
pub fn evaluate_policy(
    params: &GameParams,
    policy: &PolicyTable,
    trajectory: &[f64],
    reward: RewardMode,
    attack: AttackMode,
) -> Result<Vec<f64>> {
    let dist = evaluate_policy_distribution(params, policy, trajectory, reward, attack)?;
    Ok(dist.mean_wealth(&wealth_grid(params)))
}

/// Exact attack decision at every `(t, x)` of a policy.
pub fn hard_attack_table(
    params: &GameParams,
    policy: &PolicyTable,
    trajectory: &[f64],
) -> Result<Vec<Vec<bool>>> {
    check_trajectory(params, trajectory)?;
    check_policy(params, policy)?;
    let race = params.race()?;
    let outcome = race.outcome();
    Ok(trajectory
        .iter()
        .enumerate()
        .map(|(t, &a)| {
            let stage = Stage::evaluation(params, &race, outcome, a, RewardMode::Aware, true);
            policy
                .tx
                .row(t)
                .iter()
                .map(|&tx| stage.hard_attack(tx))
                .collect()
        })
        .collect())
}

/// Zero-profit transaction value at each entry of a trajectory.
pub fn zero_profit_trajectory(params: &GameParams, trajectory: &[f64]) -> Result<Vec<f64>> {
    let race = params.race()?;
    let outcome = race.outcome();
    Ok(trajectory
        .iter()
        .map(|&a| {
            crate::attack::zero_profit_value(
                &race,
                &outcome,
                params.num_miners as f64 * a * params.cost_per_power,
                params.block_reward,
                &params.fee,
            )
        })
        .collect())
}
