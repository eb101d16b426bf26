// SPDX-License-Identifier: Apache-2.0

//! Runs one configured command and writes its results.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::attack::{self, RaceParams};
use crate::config::{Command, RunConfig};
use crate::error::Result;
use crate::montecarlo::{self, SimConfig};
use crate::output::{self, format_f64, OutputDir};
use crate::scenarios;
use crate::solver::{self, EquilibriumResult};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: Command,
    /// False when any equilibrium solve ran out of iterations.
    pub converged: bool,
    pub files: Vec<PathBuf>,
    pub diagnostics: serde_json::Value,
}

fn equilibrium_diagnostics(eq: &EquilibriumResult) -> serde_json::Value {
    json!({
        "converged": eq.converged,
        "iterations": eq.iterations,
        "final_residual": eq.residuals.last(),
    })
}

fn attack_model(config: &RunConfig, out: &mut OutputDir) -> Result<serde_json::Value> {
    let game = &config.game;
    let snap = &config.snapshot;
    let mut rows = Vec::new();
    for &beta in &config.sweep.betas {
        let race = RaceParams::new(beta, game.confirmations)?.with_duration(game.duration);
        let outcome = race.outcome();
        let cost = beta * snap.network_cost * outcome.expected_steps;
        let safe = attack::zero_profit_value(
            &race,
            &outcome,
            snap.network_cost,
            snap.block_reward,
            &snap.fee,
        );
        let mut row = vec![
            format_f64(beta),
            game.confirmations.to_string(),
            format_f64(outcome.success_prob),
            format_f64(attack::success_probability_closed_form(&race)),
            format_f64(outcome.expected_steps),
            format_f64(cost),
            format_f64(safe),
        ];
        if let Some(sim) = &config.simulation {
            let est = montecarlo::simulate_race(
                &race,
                &SimConfig {
                    trials: sim.trials,
                    seed: sim.seed.unwrap_or(0),
                },
            )?;
            row.extend([
                format_f64(est.success_rate),
                format_f64(est.std_error),
                format_f64(est.mean_steps),
            ]);
        }
        rows.push(row);
    }
    let mut header = vec![
        "beta",
        "k",
        "success_prob",
        "success_prob_closed_form",
        "expected_steps",
        "attack_cost",
        "safe_value",
    ];
    if config.simulation.is_some() {
        header.extend([
            "simulated_success_rate",
            "simulated_std_error",
            "simulated_mean_steps",
        ]);
    }
    out.write_csv("attack_model.csv", &header, rows)?;
    Ok(json!({}))
}

/// Executes `config`, writing results, `resolved_config.toml` and `run.json` into `dir`.
pub fn execute(config: &RunConfig, dir: &Path) -> Result<RunReport> {
    config.validate()?;
    let mut out = OutputDir::create(dir)?;
    let (converged, diagnostics) = match config.command {
        Command::AttackModel => (true, attack_model(config, &mut out)?),
        Command::Solve => {
            let eq = solver::solve_equilibrium(&config.game)?;
            output::emit_equilibrium(&mut out, &eq)?;
            (eq.converged, equilibrium_diagnostics(&eq))
        }
        Command::Simulate => {
            let sim = config.simulation.expect("validated");
            let eq = solver::solve_equilibrium(&config.game)?;
            output::emit_equilibrium(&mut out, &eq)?;
            let reward = sim.reward.unwrap_or(config.game.reward);
            let evaluated = solver::evaluate_policy(
                &config.game,
                &eq.policy,
                &eq.mean_alpha,
                reward,
                sim.attack,
            )?;
            let game = montecarlo::simulate_game(
                &config.game,
                &eq.policy,
                &eq.mean_alpha,
                reward,
                sim.attack,
                &SimConfig {
                    trials: sim.trials,
                    seed: sim.seed.expect("validated"),
                },
            )?;
            output::emit_game_simulation(&mut out, &game, &evaluated)?;
            (eq.converged, equilibrium_diagnostics(&eq))
        }
        Command::BitcoinSweep => {
            let snap = &config.snapshot;
            let curve = scenarios::safe_value_curve(snap, &config.sweep.betas)?;
            output::emit_safe_values(&mut out, &curve)?;
            let threshold =
                scenarios::threshold_beta(snap, snap.observed_value, &config.sweep.betas)?;
            (true, json!({ "threshold_beta": threshold }))
        }
        Command::FeeEvolution => {
            let runs = scenarios::fee_evolution(
                &config.snapshot,
                config.sweep.beta,
                &config.sweep.lambdas,
                &config.game,
            )?;
            output::emit_fee_evolution(&mut out, &runs)?;
            let per_lambda: Vec<_> = runs
                .iter()
                .map(|r| {
                    json!({
                        "lambda": r.lambda,
                        "reached_at": r.reached_at,
                        "converged": r.converged,
                        "iterations": r.iterations,
                    })
                })
                .collect();
            (
                runs.iter().all(|r| r.converged),
                json!({
                    "smallest_reaching_lambda": scenarios::smallest_reaching_lambda(&runs),
                    "runs": per_lambda,
                }),
            )
        }
    };
    out.write_text("resolved_config.toml", &config.to_toml()?)?;
    let mut files = out.written().to_vec();
    files.push(out.path().join("run.json"));
    let report = RunReport {
        command: config.command,
        converged,
        files,
        diagnostics,
    };
    out.write_json(
        "run.json",
        &json!({
            "version": env!("CARGO_PKG_VERSION"),
            "report": &report,
            "config": config,
        }),
    )?;
    Ok(report)
}
