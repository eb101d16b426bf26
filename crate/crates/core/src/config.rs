// SPDX-License-Identifier: Apache-2.0

//! TOML run configuration.
//!
//! ```toml
//! command = "solve"          # attack-model | solve | simulate | bitcoin-sweep | fee-evolution
//! output_dir = "out"
//!
//! [game]                     # any GameParams field
//! beta = 0.35
//!
//! [snapshot]                 # ChainSnapshot, defaults to Bitcoin
//! [sweep]                    # betas, beta, lambdas
//! [simulation]               # trials, seed, reward, attack
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenarios::{self, ChainSnapshot};
use crate::solver::{AttackMode, GameParams, RewardMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Race probabilities, attack costs and safe values over `sweep.betas`.
    AttackModel,
    /// Mean-field equilibrium for `[game]`.
    Solve,
    /// Equilibrium followed by a Monte Carlo run of its policy.
    Simulate,
    /// Safe-value curve and profitability threshold for `[snapshot]`.
    BitcoinSweep,
    /// Safe value over time under each fee rate in `sweep.lambdas`.
    FeeEvolution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub betas: Vec<f64>,
    /// Adversary share for the fee-evolution runs.
    pub beta: f64,
    pub lambdas: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            betas: scenarios::percent_beta_grid(),
            beta: 0.3,
            lambdas: vec![0.01, 0.0125, 0.015, 0.02],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default = "default_trials")]
    pub trials: u64,
    pub seed: Option<u64>,
    /// Reward booked by simulated miners; defaults to the solver's.
    pub reward: Option<RewardMode>,
    #[serde(default)]
    pub attack: AttackMode,
}

fn default_trials() -> u64 {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub format: OutputFormat,
    pub game: GameParams,
    pub snapshot: ChainSnapshot,
    pub sweep: SweepConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationConfig>,
}

fn parse_error(e: impl std::fmt::Display) -> Error {
    Error::Parse(e.to_string().trim_end().to_owned())
}

/// Game parameters with the `[game]` keys laid over a command-specific base.
fn layered_game(command: Command, doc: &toml::Table) -> Result<GameParams> {
    let base = match command {
        Command::FeeEvolution => scenarios::fee_evolution_template(),
        _ => return Ok(GameParams::default()),
    };
    let mut merged = toml::Table::try_from(&base).map_err(parse_error)?;
    if let Some(toml::Value::Table(game)) = doc.get("game") {
        for (k, v) in game {
            merged.insert(k.clone(), v.clone());
        }
    }
    merged.try_into().map_err(parse_error)
}

fn prefixed(prefix: &str, err: Error) -> Error {
    match err {
        Error::Validation { field, constraint } if !field.starts_with(prefix) => {
            Error::Validation {
                field: format!("{prefix}.{field}"),
                constraint,
            }
        }
        other => other,
    }
}

/// The document as written; `command` may come from the command line instead.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    command: Option<Command>,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    format: OutputFormat,
    #[serde(default)]
    game: GameParams,
    #[serde(default)]
    snapshot: ChainSnapshot,
    #[serde(default)]
    sweep: SweepConfig,
    #[serde(default)]
    simulation: Option<SimulationConfig>,
}

/// Parses, fills defaults, validates and resolves derived values.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_as(text, None)
}

/// Like [`parse_config`], with `command` supplied by the caller. A command
/// written in the document must then agree with it.
pub fn parse_config_as(text: &str, command: Option<Command>) -> Result<RunConfig> {
    let doc: Document = toml::from_str(text).map_err(parse_error)?;
    let command = match (doc.command, command) {
        (Some(a), Some(b)) if a != b => {
            return Err(Error::invalid(
                "command",
                format!("document says {a:?} but {b:?} was requested"),
            ))
        }
        (Some(c), _) | (None, Some(c)) => c,
        (None, None) => return Err(Error::invalid("command", "missing")),
    };
    let mut config = RunConfig {
        command,
        output_dir: doc.output_dir,
        format: doc.format,
        game: doc.game,
        snapshot: doc.snapshot,
        sweep: doc.sweep,
        simulation: doc.simulation,
    };
    if command == Command::FeeEvolution {
        let raw: toml::Table = toml::from_str(text).map_err(parse_error)?;
        config.game = layered_game(command, &raw)?;
    }
    config.resolve()?;
    Ok(config)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.game.validate().map_err(|e| prefixed("game", e))?;
        self.snapshot
            .validate()
            .map_err(|e| prefixed("snapshot", e))?;
        let sweep = &self.sweep;
        if sweep.betas.is_empty() {
            return Err(Error::invalid("sweep.betas", "must not be empty"));
        }
        if sweep.betas.iter().any(|b| !(*b > 0.0 && *b < 1.0)) {
            return Err(Error::invalid(
                "sweep.betas",
                "every entry must lie in (0, 1)",
            ));
        }
        if sweep.betas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("sweep.betas", "must be strictly ascending"));
        }
        if !(0.0..1.0).contains(&sweep.beta) {
            return Err(Error::invalid("sweep.beta", "must lie in [0, 1)"));
        }
        if sweep.lambdas.is_empty() || sweep.lambdas.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return Err(Error::invalid(
                "sweep.lambdas",
                "must be non-empty, finite and >= 0",
            ));
        }
        if let Some(sim) = &self.simulation {
            if sim.trials == 0 {
                return Err(Error::invalid("simulation.trials", "must be >= 1"));
            }
        }
        if self.command == Command::Simulate {
            match &self.simulation {
                None => return Err(Error::invalid("simulation", "required for simulate")),
                Some(sim) if sim.seed.is_none() => {
                    return Err(Error::invalid("simulation.seed", "required for simulate"))
                }
                Some(_) => {}
            }
        }
        Ok(())
    }

    /// Validates and writes every derived default back into the config.
    pub fn resolve(&mut self) -> Result<()> {
        self.validate()?;
        self.game = self.game.resolved().map_err(|e| prefixed("game", e))?;
        let reward = self.game.reward;
        if let Some(sim) = &mut self.simulation {
            sim.reward.get_or_insert(reward);
        }
        Ok(())
    }

    /// TOML document that parses back to this config.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(parse_error)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewards::FeePolicy;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config(
            r#"
            command = "bitcoin-sweep"
            [game]
            beta = 0.3
            confirmations = 6
            [snapshot]
            block_reward = 6.25
            fee = { kind = "constant", flat_fee = 0.16 }
            network_cost = 6.41
            observed_value = 774.84
            "#,
        )
        .unwrap();
        assert_eq!(cfg.game.wealth_points, 201);
        assert_eq!(cfg.game.momentum, 0.5);
        assert_eq!(cfg.game.sharpness, 1.0);
        let alpha0 = cfg.game.initial_mean_alpha.unwrap();
        assert_eq!(cfg.game.tolerance, Some(1e-6 * alpha0));
        assert_eq!(cfg.snapshot, ChainSnapshot::bitcoin());
        let dump = cfg.to_toml().unwrap();
        assert!(dump.contains("wealth_points = 201"));
        assert!(dump.contains("sharpness = 1.0"));
    }

    #[test]
    fn resolved_config_round_trips() {
        for text in [
            "command = \"solve\"\n[game]\nbeta = 0.35\nfee = { kind = \"proportional\", lambda = 0.02 }\n",
            "command = \"fee-evolution\"\n[game]\nhorizon = 12\n",
            "command = \"simulate\"\n[simulation]\nseed = 9\n",
            "command = \"attack-model\"\n[sweep]\nbetas = [0.1, 0.2]\n",
        ] {
            let cfg = parse_config(text).unwrap();
            let again = parse_config(&cfg.to_toml().unwrap()).unwrap();
            assert_eq!(cfg, again, "{text}");
        }
    }

    #[test]
    fn fee_evolution_layers_over_its_template() {
        let cfg = parse_config("command = \"fee-evolution\"\n[game]\nhorizon = 12\n").unwrap();
        let template = scenarios::fee_evolution_template();
        assert_eq!(cfg.game.horizon, 12);
        assert_eq!(cfg.game.num_miners, template.num_miners);
        assert_eq!(cfg.game.transition, template.transition);
    }

    fn field_of(text: &str) -> String {
        field_of_result(parse_config(text))
    }

    #[test]
    fn validation_names_the_field() {
        assert_eq!(
            field_of("command = \"solve\"\n[game]\nmomentum = 1.0\n"),
            "game.momentum"
        );
        assert_eq!(
            field_of("command = \"solve\"\n[game]\nt_max = -1.0\n"),
            "game.t_max"
        );
        assert_eq!(field_of("command = \"simulate\"\n"), "simulation");
        assert_eq!(
            field_of("command = \"simulate\"\n[simulation]\ntrials = 5\n"),
            "simulation.seed"
        );
        assert_eq!(
            field_of("command = \"bitcoin-sweep\"\n[sweep]\nbetas = [0.2, 0.1]\n"),
            "sweep.betas"
        );
        assert_eq!(
            field_of(
                "command = \"solve\"\n[game]\nfee = { kind = \"proportional\", lambda = -1.0 }\n"
            ),
            "game.fee.lambda"
        );
    }

    #[test]
    fn parse_errors_carry_a_position() {
        let err = parse_config("command = \"solve\"\n[game]\nbeta = = 0.3\n").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Parse(_)));
        assert!(msg.contains("line 3"), "{msg}");
        let err = parse_config("command = \"solve\"\n[game]\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("bogus"));
        assert!(parse_config("command = \"launch\"\n").is_err());
    }

    #[test]
    fn command_can_come_from_the_caller() {
        let cfg = parse_config_as("[game]\nbeta = 0.1\n", Some(Command::Solve)).unwrap();
        assert_eq!(cfg.command, Command::Solve);
        let same = parse_config_as("command = \"solve\"\n", Some(Command::Solve)).unwrap();
        assert_eq!(same.command, Command::Solve);
        assert_eq!(
            field_of_result(parse_config_as(
                "command = \"solve\"\n",
                Some(Command::FeeEvolution)
            )),
            "command"
        );
        assert_eq!(field_of("[game]\nbeta = 0.1\n"), "command");
    }

    fn field_of_result(r: Result<RunConfig>) -> String {
        match r {
            Err(Error::Validation { field, .. }) => field,
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    #[test]
    fn fee_tables_parse_both_kinds() {
        let cfg =
            parse_config("command = \"solve\"\n[game.fee]\nkind = \"constant\"\nflat_fee = 0.5\n")
                .unwrap();
        assert_eq!(cfg.game.fee, FeePolicy::Constant { flat_fee: 0.5 });
    }
}
