// SPDX-License-Identifier: Apache-2.0

//! Monte Carlo checks of the race chain and of policies played in the game.
//!
//! Every trial draws from its own generator derived from `(seed, trial
//! index)`. Trials are grouped into fixed-size chunks that are reduced in
//! index order, so results do not depend on the number of worker threads.

use rand::distr::{Bernoulli, Distribution};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attack::{DurationConvention, RaceParams};
use crate::error::{Error, Result};
use crate::solver::stage::Stage;
use crate::solver::{
    wealth_grid, AttackMode, GameParams, InitialWealth, PolicyTable, RewardMode, WealthGrid,
};

/// Trials per unit of parallel work.
const CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub trials: u64,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("simulation.trials", "must be >= 1"));
        }
        Ok(())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent generator for stream `index` of a run seeded with `seed`.
pub fn stream(seed: u64, index: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(splitmix64(seed) ^ splitmix64(!index))
}

fn chunks(trials: u64) -> impl IndexedParallelIterator<Item = (u64, u64)> {
    let n = usize::try_from(trials.div_ceil(CHUNK)).expect("chunk count fits in usize");
    (0..n).into_par_iter().map(move |c| {
        let c = c as u64;
        (c, CHUNK.min(trials - c * CHUNK))
    })
}

/// Outcome of one simulated race.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RaceRun {
    pub success: bool,
    pub honest_blocks: u32,
    pub adversary_blocks: u32,
}

impl RaceRun {
    pub fn steps(&self) -> u32 {
        self.honest_blocks + self.adversary_blocks
    }

    /// Steps booked against the adversary under `convention`.
    pub fn charged_steps(&self, k: u32, convention: DurationConvention) -> u32 {
        match (self.success, convention) {
            (true, _) | (false, DurationConvention::Exact) => self.steps(),
            (false, DurationConvention::ChargeFullRace) => 2 * k + 1,
        }
    }
}

/// Plays blocks until one side is `k + 1` blocks in.
pub fn run_race(adversary: &Bernoulli, k: u32, rng: &mut impl Rng) -> RaceRun {
    let (mut h, mut a) = (0, 0);
    loop {
        if adversary.sample(rng) {
            a += 1;
            if a > k {
                return RaceRun {
                    success: true,
                    honest_blocks: h,
                    adversary_blocks: a,
                };
            }
        } else {
            h += 1;
            if h > k {
                return RaceRun {
                    success: false,
                    honest_blocks: h,
                    adversary_blocks: a,
                };
            }
        }
    }
}

fn bernoulli(beta: f64) -> Result<Bernoulli> {
    Bernoulli::new(beta).map_err(|e| Error::domain(format!("beta {beta}: {e}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RaceEstimate {
    pub trials: u64,
    pub successes: u64,
    pub success_rate: f64,
    /// Sample standard error of `success_rate`.
    pub std_error: f64,
    /// Mean number of blocks until the race is decided.
    pub mean_steps: f64,
    /// Mean steps charged under the race's duration convention.
    pub mean_charged_steps: f64,
    pub charged_std_error: f64,
}

#[derive(Default)]
struct RaceTally {
    successes: u64,
    steps: u64,
    charged: u64,
    charged_sq: u64,
}

pub fn simulate_race(race: &RaceParams, config: &SimConfig) -> Result<RaceEstimate> {
    config.validate()?;
    let adversary = bernoulli(race.beta())?;
    let k = race.confirmations();
    let tallies: Vec<RaceTally> = chunks(config.trials)
        .map(|(c, n)| {
            let mut tally = RaceTally::default();
            for trial in c * CHUNK..c * CHUNK + n {
                let mut rng = stream(config.seed, trial);
                let run = run_race(&adversary, k, &mut rng);
                let charged = u64::from(run.charged_steps(k, race.duration()));
                tally.successes += u64::from(run.success);
                tally.steps += u64::from(run.steps());
                tally.charged += charged;
                tally.charged_sq += charged * charged;
            }
            tally
        })
        .collect();
    let total = tallies
        .into_iter()
        .fold(RaceTally::default(), |acc, t| RaceTally {
            successes: acc.successes + t.successes,
            steps: acc.steps + t.steps,
            charged: acc.charged + t.charged,
            charged_sq: acc.charged_sq + t.charged_sq,
        });
    let n = config.trials as f64;
    let rate = total.successes as f64 / n;
    let mean_charged = total.charged as f64 / n;
    let var_charged = (total.charged_sq as f64 / n - mean_charged * mean_charged).max(0.0);
    Ok(RaceEstimate {
        trials: config.trials,
        successes: total.successes,
        success_rate: rate,
        std_error: (rate * (1.0 - rate) / n).sqrt(),
        mean_steps: total.steps as f64 / n,
        mean_charged_steps: mean_charged,
        charged_std_error: (var_charged / n).sqrt(),
    })
}

/// Per-round statistics of simulated miners, `t = 0..=horizon + 1` for wealth
/// and `t = 0..=horizon` for the block counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameSimulation {
    pub agents: u64,
    pub mean_wealth: Vec<f64>,
    pub wealth_std_error: Vec<f64>,
    /// Fraction of agents that mined the block of round `t`.
    pub win_rate: Vec<f64>,
    /// Fraction of agents whose block of round `t` was attacked.
    pub attack_rate: Vec<f64>,
    /// Fraction of agents whose block of round `t` was reversed.
    pub reversal_rate: Vec<f64>,
}

#[derive(Clone)]
struct GameTally {
    wealth: Vec<f64>,
    wealth_sq: Vec<f64>,
    wins: Vec<u64>,
    attacks: Vec<u64>,
    reversals: Vec<u64>,
}

impl GameTally {
    fn new(rounds: usize) -> Self {
        GameTally {
            wealth: vec![0.0; rounds + 1],
            wealth_sq: vec![0.0; rounds + 1],
            wins: vec![0; rounds],
            attacks: vec![0; rounds],
            reversals: vec![0; rounds],
        }
    }

    fn absorb(mut self, other: GameTally) -> Self {
        for (a, b) in self.wealth.iter_mut().zip(&other.wealth) {
            *a += b;
        }
        for (a, b) in self.wealth_sq.iter_mut().zip(&other.wealth_sq) {
            *a += b;
        }
        for (mine, theirs) in [
            (&mut self.wins, &other.wins),
            (&mut self.attacks, &other.attacks),
            (&mut self.reversals, &other.reversals),
        ] {
            for (a, b) in mine.iter_mut().zip(theirs) {
                *a += b;
            }
        }
        self
    }
}

fn initial_sampler(
    params: &GameParams,
    grid: &WealthGrid,
) -> impl Fn(&mut Xoshiro256PlusPlus) -> f64 {
    let cdf: Option<Vec<f64>> = match &params.initial_wealth {
        InitialWealth::PointMass(_) => None,
        InitialWealth::Masses(w) => Some(
            w.iter()
                .scan(0.0, |acc, m| {
                    *acc += m;
                    Some(*acc)
                })
                .collect(),
        ),
    };
    let start = match params.initial_wealth {
        InitialWealth::PointMass(x) => x,
        InitialWealth::Masses(_) => 0.0,
    };
    let points = grid.points();
    move |rng| match &cdf {
        None => start,
        Some(cdf) => {
            let u = rng.random::<f64>() * cdf[cdf.len() - 1];
            let i = cdf.partition_point(|c| *c <= u).min(points.len() - 1);
            points[i]
        }
    }
}

/// Plays `policy` with independent agents against the trajectory.
///
/// Each round an agent mines the block with probability
/// `alpha / (alpha + m * mean_alpha_t)`. When an adversary is present and the
/// exact decision rule says the block's transaction is worth attacking, a
/// race is simulated and a successful adversary reverses the block. Off-grid
/// wealth reads the policy by linear interpolation.
pub fn simulate_game(
    params: &GameParams,
    policy: &PolicyTable,
    trajectory: &[f64],
    reward: RewardMode,
    attack: AttackMode,
    config: &SimConfig,
) -> Result<GameSimulation> {
    params.validate()?;
    config.validate()?;
    crate::solver::check_inputs(params, policy, trajectory)?;
    let race = params.race()?;
    let outcome = race.outcome();
    let adversary = bernoulli(race.beta())?;
    let k = race.confirmations();
    let present = attack == AttackMode::Present;
    let stages: Vec<Stage> = trajectory
        .iter()
        .map(|&a| Stage::evaluation(params, &race, outcome, a, reward, present))
        .collect();
    let grid = wealth_grid(params);
    let rounds = stages.len();
    let sample_start = initial_sampler(params, &grid);
    let c = params.cost_per_power;

    let tallies: Vec<GameTally> = chunks(config.trials)
        .map(|(chunk, n)| {
            let mut tally = GameTally::new(rounds);
            for agent in chunk * CHUNK..chunk * CHUNK + n {
                let mut rng = stream(config.seed, agent);
                let mut x = sample_start(&mut rng);
                for (t, stage) in stages.iter().enumerate() {
                    tally.wealth[t] += x;
                    tally.wealth_sq[t] += x * x;
                    let alpha = crate::solver::backward::affordable(
                        grid.interpolate(policy.alpha.row(t), x),
                        x,
                        c,
                    );
                    let tx = grid.interpolate(policy.tx.row(t), x);
                    let tr = stage.transition(x, alpha, tx);
                    let won = rng.random::<f64>() < stage.share(alpha);
                    let mut kept = won;
                    if won {
                        tally.wins[t] += 1;
                        if present && stage.hard_attack(tx) {
                            tally.attacks[t] += 1;
                            if run_race(&adversary, k, &mut rng).success {
                                tally.reversals[t] += 1;
                                kept = false;
                            }
                        }
                    }
                    x = if kept { tr.x_win } else { tr.x_lose };
                }
                tally.wealth[rounds] += x;
                tally.wealth_sq[rounds] += x * x;
            }
            tally
        })
        .collect();
    let total = tallies
        .into_iter()
        .reduce(GameTally::absorb)
        .unwrap_or_else(|| GameTally::new(rounds));

    let n = config.trials as f64;
    let mean_wealth: Vec<f64> = total.wealth.iter().map(|s| s / n).collect();
    let wealth_std_error = total
        .wealth_sq
        .iter()
        .zip(&mean_wealth)
        .map(|(sq, mean)| ((sq / n - mean * mean).max(0.0) / n).sqrt())
        .collect();
    let rate = |v: &[u64]| v.iter().map(|c| *c as f64 / n).collect();
    Ok(GameSimulation {
        agents: config.trials,
        mean_wealth,
        wealth_std_error,
        win_rate: rate(&total.wins),
        attack_rate: rate(&total.attacks),
        reversal_rate: rate(&total.reversals),
    })
}
