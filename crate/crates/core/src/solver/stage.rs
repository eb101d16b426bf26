// SPDX-License-Identifier: Apache-2.0

//! One round of the game at a fixed mean power.

use crate::attack::{self, RaceOutcome, RaceParams};
use crate::rewards::FeePolicy;

use super::params::{GameParams, RewardMode, SolverDecision, TxPolicy, WealthTransition};

/// How the adversary's decision enters the win probability of a round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum AttackView {
    /// No discount.
    Ignored,
    Smooth(f64),
    Hard,
    /// Miners carry the zero-profit value; attacked only when even `T = 0` pays.
    ZeroProfit {
        attacked: bool,
    },
}

/// Wealth reached after winning and losing, with the win probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Transition {
    pub gamma: f64,
    pub reward: f64,
    pub x_win: f64,
    pub x_lose: f64,
}

/// Everything about round `t` that does not depend on the acting miner.
#[derive(Debug, Clone)]
pub(crate) struct Stage {
    network_power: f64,
    cost_per_power: f64,
    block_reward: f64,
    fee: FeePolicy,
    transition: WealthTransition,
    race: RaceParams,
    outcome: RaceOutcome,
    adversary_cost: f64,
    view: AttackView,
    /// Reward booked on a win, when it differs from the win probability's view.
    booked: Option<AttackView>,
    pinned_tx: Option<f64>,
}

impl Stage {
    /// The round as the solver's miners see it.
    pub fn solver(
        params: &GameParams,
        race: &RaceParams,
        outcome: RaceOutcome,
        mean_alpha: f64,
    ) -> Self {
        let mut stage = Stage::base(params, race, outcome, mean_alpha);
        stage.view = match (params.reward, params.decision) {
            (RewardMode::Naive, _) => AttackView::Ignored,
            _ if race.beta() == 0.0 => AttackView::Ignored,
            (RewardMode::Aware, SolverDecision::Smooth) => AttackView::Smooth(params.sharpness),
            (RewardMode::Aware, SolverDecision::Hard) => AttackView::Hard,
        };
        if params.tx_policy == TxPolicy::ZeroProfit {
            let raw = attack::unclamped_zero_profit_value(
                race,
                &outcome,
                stage.network_power * params.cost_per_power,
                params.block_reward,
                &params.fee,
            );
            stage.pinned_tx = Some(raw.clamp(0.0, params.t_max));
            stage.view = AttackView::ZeroProfit {
                attacked: raw < 0.0,
            };
        }
        stage
    }

    /// The round as it actually plays out when a fixed policy meets a real
    /// (or absent) adversary using the exact decision rule.
    pub fn evaluation(
        params: &GameParams,
        race: &RaceParams,
        outcome: RaceOutcome,
        mean_alpha: f64,
        reward: RewardMode,
        adversary_present: bool,
    ) -> Self {
        let mut stage = Stage::base(params, race, outcome, mean_alpha);
        let hard = if race.beta() == 0.0 {
            AttackView::Ignored
        } else {
            AttackView::Hard
        };
        stage.view = if adversary_present {
            hard
        } else {
            AttackView::Ignored
        };
        stage.booked = Some(match reward {
            RewardMode::Naive => AttackView::Ignored,
            RewardMode::Aware => hard,
        });
        stage
    }

    fn base(params: &GameParams, race: &RaceParams, outcome: RaceOutcome, mean_alpha: f64) -> Self {
        let network_power = params.num_miners as f64 * mean_alpha;
        let adversary_cost = if race.beta() == 0.0 {
            0.0
        } else {
            race.beta() * network_power * params.cost_per_power * outcome.expected_steps
        };
        Stage {
            network_power,
            cost_per_power: params.cost_per_power,
            block_reward: params.block_reward,
            fee: params.fee,
            transition: params.transition,
            race: *race,
            outcome,
            adversary_cost,
            view: AttackView::Ignored,
            booked: None,
            pinned_tx: None,
        }
    }

    pub fn pinned_tx(&self) -> Option<f64> {
        self.pinned_tx
    }

    pub fn payoff(&self, tx: f64) -> f64 {
        self.block_reward + self.fee.amount(tx)
    }

    pub fn adversary_reward(&self, tx: f64) -> f64 {
        if self.race.beta() == 0.0 {
            return 0.0;
        }
        let prize =
            (self.race.confirmations() as f64 + 1.0) * self.block_reward + tx + self.fee.amount(tx);
        self.outcome.success_prob * prize - self.adversary_cost
    }

    fn attack_prob(&self, view: AttackView, tx: f64) -> f64 {
        match view {
            AttackView::Ignored => 0.0,
            AttackView::Smooth(s) => attack::logistic(s * self.adversary_reward(tx)),
            AttackView::Hard => f64::from(u8::from(self.adversary_reward(tx) > 0.0)),
            AttackView::ZeroProfit { attacked } => f64::from(u8::from(attacked)),
        }
    }

    /// `1 - P * A(T)`: the part of a win that survives the adversary.
    pub fn survival(&self, tx: f64) -> f64 {
        1.0 - self.outcome.success_prob * self.attack_prob(self.view, tx)
    }

    fn booked_survival(&self, tx: f64, survival: f64) -> f64 {
        match self.booked {
            None => survival,
            Some(view) => 1.0 - self.outcome.success_prob * self.attack_prob(view, tx),
        }
    }

    /// `alpha / (alpha + m * mean_alpha)`, with an idle miner never winning.
    pub fn share(&self, alpha: f64) -> f64 {
        if alpha <= 0.0 {
            0.0
        } else {
            alpha / (alpha + self.network_power)
        }
    }

    /// Attack probability under the logistic relaxation, for diagnostics.
    pub fn smooth_attack_prob(&self, tx: f64, sharpness: f64) -> f64 {
        if self.race.beta() == 0.0 {
            0.0
        } else {
            attack::logistic(sharpness * self.adversary_reward(tx))
        }
    }

    pub fn hard_attack(&self, tx: f64) -> bool {
        self.race.beta() > 0.0 && self.adversary_reward(tx) > 0.0
    }

    /// Transition with precomputed `survival` and `payoff` for `tx`.
    #[inline]
    pub fn transition_with(
        &self,
        x: f64,
        alpha: f64,
        survival: f64,
        payoff: f64,
        booked: f64,
    ) -> Transition {
        let share = self.share(alpha);
        let gamma = survival * share;
        let cost = alpha * self.cost_per_power;
        let reward = booked * share * payoff - cost;
        let x_win = match self.transition {
            WealthTransition::ExpectedReward => x + reward,
            WealthTransition::RealizedReward => x + payoff - cost,
        };
        Transition {
            gamma,
            reward,
            x_win,
            x_lose: x - cost,
        }
    }

    pub fn transition(&self, x: f64, alpha: f64, tx: f64) -> Transition {
        let survival = self.survival(tx);
        let booked = self.booked_survival(tx, survival);
        self.transition_with(x, alpha, survival, self.payoff(tx), booked)
    }

    /// Per-`T` quantities reused across every `(x, alpha)` pair.
    pub fn tx_terms(&self, tx: f64) -> TxTerms {
        let survival = self.survival(tx);
        TxTerms {
            tx,
            survival,
            booked: self.booked_survival(tx, survival),
            payoff: self.payoff(tx),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct TxTerms {
    pub tx: f64,
    pub survival: f64,
    pub booked: f64,
    pub payoff: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewards::{self, Decision, MinerAction};

    fn params(beta: f64, reward: RewardMode) -> GameParams {
        GameParams {
            beta,
            reward,
            num_miners: 3,
            block_reward: 1.0,
            ..GameParams::default()
        }
    }

    #[test]
    fn solver_stage_matches_reward_functions() {
        for reward in [RewardMode::Naive, RewardMode::Aware] {
            let p = params(0.4, reward);
            let race = p.race().unwrap();
            let stage = Stage::solver(&p, &race, race.outcome(), 0.3);
            let market = p.market(0.3);
            for (alpha, tx) in [(0.1, 0.0), (0.4, 10.0), (0.2, 40.0), (1.0, 100.0)] {
                let a = MinerAction {
                    alpha,
                    tx_value: tx,
                };
                let tr = stage.transition(5.0, alpha, tx);
                let (gamma, r) = match reward {
                    RewardMode::Naive => (
                        rewards::win_prob_naive(0.3, 3, alpha).unwrap(),
                        rewards::reward_naive(&market, &a).unwrap(),
                    ),
                    RewardMode::Aware => {
                        let d = Decision::Smooth { sharpness: 1.0 };
                        (
                            rewards::win_prob_aware(&market, &a, &race, d).unwrap(),
                            rewards::reward_aware(&market, &a, &race, d).unwrap(),
                        )
                    }
                };
                assert!((tr.gamma - gamma).abs() < 1e-14);
                assert!((tr.reward - r).abs() < 1e-12);
                assert!((tr.x_win - (5.0 + r)).abs() < 1e-12);
                assert!((tr.x_lose - (5.0 - alpha)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn evaluation_stage_uses_hard_decision() {
        let p = params(0.45, RewardMode::Naive);
        let race = p.race().unwrap();
        let present = Stage::evaluation(&p, &race, race.outcome(), 0.3, RewardMode::Naive, true);
        let absent = Stage::evaluation(&p, &race, race.outcome(), 0.3, RewardMode::Naive, false);
        let tx = 100.0;
        assert!(present.hard_attack(tx));
        let (a, b) = (
            present.transition(5.0, 0.5, tx),
            absent.transition(5.0, 0.5, tx),
        );
        let p_succ = race.outcome().success_prob;
        assert!((a.gamma - (1.0 - p_succ) * b.gamma).abs() < 1e-15);
        // naive miners still book the naive reward
        assert_eq!(a.x_win, b.x_win);
    }

    #[test]
    fn zero_profit_stage_pins_tx() {
        let p = GameParams {
            tx_policy: TxPolicy::ZeroProfit,
            t_max: 1e9,
            ..params(0.3, RewardMode::Aware)
        };
        let race = p.race().unwrap();
        let stage = Stage::solver(&p, &race, race.outcome(), 1.0);
        let tx = stage.pinned_tx().unwrap();
        assert!(stage.adversary_reward(tx).abs() < 1e-9 * stage.adversary_cost);
        assert_eq!(stage.survival(tx), 1.0);
    }
}
