// SPDX-License-Identifier: Apache-2.0

use powmfg::rewards::FeePolicy;
use powmfg::solver::{
    self, GameParams, InitialWealth, MomentumRule, PolicyTable, RewardMode, Table,
    WealthDistribution,
};
use proptest::prelude::*;

fn small(beta: f64, reward: RewardMode) -> GameParams {
    GameParams {
        beta,
        reward,
        horizon: 5,
        wealth_points: 61,
        alpha_points: 21,
        tx_points: 21,
        ..GameParams::default()
    }
}

fn flat(params: &GameParams, mean_alpha: f64) -> Vec<f64> {
    vec![mean_alpha; params.horizon + 1]
}

fn constant_policy(params: &GameParams, alpha: f64, tx: f64) -> PolicyTable {
    let grid = solver::wealth_grid(params);
    let rows = params.horizon + 1;
    PolicyTable {
        alpha: Table::from_rows(
            (0..rows)
                .map(|_| {
                    grid.points()
                        .iter()
                        .map(|x| alpha.min(x / params.cost_per_power))
                        .collect()
                })
                .collect(),
        ),
        tx: Table::from_rows(vec![vec![tx; grid.len()]; rows]),
    }
}

#[test]
fn broke_miners_do_nothing() {
    let params = small(0.3, RewardMode::Aware);
    let (policy, values) = solver::backward_induction(&params, &flat(&params, 0.9)).unwrap();
    for t in 0..=params.horizon {
        assert_eq!(policy.alpha.get(t, 0), 0.0);
        assert_eq!(values.values.get(t, 0), 0.0);
    }
}

#[test]
fn spending_stays_within_wealth() {
    let params = small(0.35, RewardMode::Aware);
    let eq = solver::solve_equilibrium(&params).unwrap();
    for t in 0..=params.horizon {
        for (i, x) in eq.wealth_grid.iter().enumerate() {
            let alpha = eq.policy.alpha.get(t, i);
            assert!(alpha >= 0.0);
            assert!(
                alpha * params.cost_per_power <= x + 1e-12,
                "t={t} x={x} alpha={alpha}"
            );
            let tx = eq.policy.tx.get(t, i);
            assert!((0.0..=params.t_max).contains(&tx));
        }
    }
}

#[test]
fn last_round_matches_the_one_shot_optimum() {
    // m * mean_alpha = 2, b = 5, no fee, so alpha* = sqrt(10) - 2
    let params = GameParams {
        fee: FeePolicy::Proportional { lambda: 0.0 },
        ..small(0.0, RewardMode::Aware)
    };
    let mean_alpha = 0.5;
    let (policy, values) = solver::backward_induction(&params, &flat(&params, mean_alpha)).unwrap();
    let network = params.num_miners as f64 * mean_alpha;
    let b = params.block_reward;
    let alpha_star = (network * b).sqrt() - network;
    let profit = alpha_star / (alpha_star + network) * b - alpha_star;
    let last = params.horizon;
    for (i, x) in solver::wealth_grid(&params)
        .points()
        .into_iter()
        .enumerate()
    {
        if x < 2.0 * alpha_star {
            continue;
        }
        assert!(
            (policy.alpha.get(last, i) - alpha_star).abs() < 1e-4,
            "x={x}"
        );
        let v = values.values.get(last, i);
        assert!((v - profit).abs() < 1e-6, "x={x}: {v} vs {profit}");
    }
}

#[test]
fn idle_policy_keeps_the_initial_distribution() {
    let params = small(0.3, RewardMode::Aware);
    let policy = constant_policy(&params, 0.0, 0.0);
    let initial = solver::initial_distribution(&params);
    let dist = solver::forward_wealth(&params, &policy, &flat(&params, 0.9), &initial).unwrap();
    for row in dist.mass.iter_rows() {
        assert_eq!(row, initial.as_slice());
    }
}

#[test]
fn point_mass_splits_between_grid_neighbours() {
    let params = GameParams {
        initial_wealth: InitialWealth::PointMass(30.25),
        wealth_max: 60.0,
        wealth_points: 121,
        ..small(0.0, RewardMode::Aware)
    };
    let w = solver::initial_distribution(&params);
    assert_eq!(w[60], 0.5);
    assert_eq!(w[61], 0.5);
    assert_eq!(w.iter().sum::<f64>(), 1.0);
}

#[test]
fn convex_update_blends_old_and_played() {
    let params = GameParams {
        horizon: 1,
        momentum: 0.25,
        ..small(0.0, RewardMode::Aware)
    };
    let policy = constant_policy(&params, 2.0, 0.0);
    let n = solver::wealth_grid(&params).len();
    let mut mass = Table::zeros(3, n);
    for t in 0..3 {
        mass.row_mut(t)[n - 1] = 1.0;
    }
    let wealth = WealthDistribution { mass };
    let next = solver::update_mean_field(&params, &policy, &wealth, &[1.0, 4.0]);
    assert_eq!(next, vec![0.25 * 1.0 + 0.75 * 2.0, 0.25 * 4.0 + 0.75 * 2.0]);

    let literal = GameParams {
        momentum_rule: MomentumRule::Literal,
        ..params.clone()
    };
    let next = solver::update_mean_field(&literal, &policy, &wealth, &[1.0, 4.0]);
    assert_eq!(next, vec![literal.initial_mean_alpha(), 0.25 * 1.0 + 2.0]);
}

#[test]
fn weak_adversary_leaves_the_aware_equilibrium_alone() {
    let honest = solver::solve_equilibrium(&small(0.0, RewardMode::Aware)).unwrap();
    for beta in [0.1, 0.2] {
        let eq = solver::solve_equilibrium(&small(beta, RewardMode::Aware)).unwrap();
        assert!(eq.converged);
        // the smooth attack penalty is not exactly zero far below T*
        let tol = 10.0 * small(beta, RewardMode::Aware).tolerance();
        for (a, b) in eq.mean_alpha.iter().zip(&honest.mean_alpha) {
            assert!((a - b).abs() <= tol, "beta={beta}: {a} vs {b}");
        }
    }
}

#[test]
fn default_start_is_the_symmetric_one_shot_equilibrium() {
    let params = GameParams::default();
    assert_eq!(params.initial_mean_alpha(), 4.0 * 6.0 / 25.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn forward_pass_conserves_mass(
        alpha in 0.0f64..3.0,
        tx in 0.0f64..100.0,
        mean_alpha in 0.05f64..2.0,
        beta in 0.0f64..0.49,
    ) {
        let params = small(beta, RewardMode::Aware);
        let policy = constant_policy(&params, alpha, tx);
        let initial = solver::initial_distribution(&params);
        let dist = solver::forward_wealth(&params, &policy, &flat(&params, mean_alpha), &initial)
            .unwrap();
        for total in dist.total_mass() {
            prop_assert!((total - 1.0).abs() < 1e-9);
        }
        prop_assert!(dist.mass.iter_rows().flatten().all(|m| *m >= 0.0));
    }

    #[test]
    fn values_rise_with_wealth(mean_alpha in 0.1f64..2.0, beta in 0.0f64..0.49) {
        let params = small(beta, RewardMode::Aware);
        let (_, values) = solver::backward_induction(&params, &flat(&params, mean_alpha)).unwrap();
        for row in values.values.iter_rows() {
            prop_assert!(row.windows(2).all(|w| w[1] >= w[0]));
        }
    }
}
