// SPDX-License-Identifier: Apache-2.0

//! Backward induction over the wealth grid.
//!
//! For each round `t = horizon, ..., 0` and each wealth `x` the miner picks
//! `(alpha, T)` maximizing
//!
//! ```text
//! R + gamma * V_{t+1}(x_win) + (1 - gamma) * V_{t+1}(x_lose)
//! ```
//!
//! over a uniform `alpha` grid on `[0, x / c]` and a uniform `T` grid on
//! `[0, t_max]`. The best grid point is then polished by a golden-section
//! search inside its neighbouring cells. A final ascending sweep offers each
//! wealth level the optimal action of the level below it, which is always
//! affordable; this keeps `V_t` non-decreasing in wealth exactly.

use rayon::prelude::*;

use crate::error::{Error, Result};

use super::grid::{Table, WealthGrid};
use super::params::{GameParams, TxPolicy};
use super::stage::{Stage, TxTerms};

/// Relative width at which a golden-section search stops.
const GOLDEN_TOL: f64 = 1e-10;
/// Objective values this close to the maximum count as ties.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Candidate {
    pub alpha: f64,
    pub tx: f64,
    pub value: f64,
}

impl Candidate {
    /// Cheaper action first: smaller `alpha`, then smaller `T`.
    fn precedes(&self, other: &Candidate) -> bool {
        (self.alpha, self.tx) < (other.alpha, other.tx)
    }
}

fn tie_tolerance(max: f64) -> f64 {
    TIE_TOL * max.abs().max(1.0)
}

/// Picks the cheapest candidate within the tie tolerance of the best value.
fn tie_break(cands: &[Candidate]) -> Candidate {
    let max = cands
        .iter()
        .map(|c| c.value)
        .fold(f64::NEG_INFINITY, f64::max);
    let tol = tie_tolerance(max);
    *cands
        .iter()
        .filter(|c| c.value >= max - tol)
        .reduce(|a, b| if b.precedes(a) { b } else { a })
        .expect("at least one candidate")
}

/// Largest `alpha <= budget` with `alpha * c <= x`.
pub(crate) fn affordable(alpha: f64, x: f64, c: f64) -> f64 {
    let mut a = alpha.max(0.0);
    while a * c > x && a > 0.0 {
        a = a.next_down();
    }
    a.max(0.0)
}

/// Maximizes `f` on `[lo, hi]` by golden-section search, returning the best
/// point seen including both ends.
pub(crate) fn golden_max(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut best = (lo, f(lo));
    if hi <= lo {
        return best;
    }
    let fh = f(hi);
    if fh > best.1 {
        best = (hi, fh);
    }
    let (mut a, mut b) = (lo, hi);
    let stop = GOLDEN_TOL * (hi - lo);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > stop {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    for (x, fx) in [(c, fc), (d, fd)] {
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

/// The selected action and the value-maximizing action at one wealth level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PointChoice {
    pub chosen: Candidate,
    pub best: Candidate,
}

struct Objective<'a> {
    stage: &'a Stage,
    grid: &'a WealthGrid,
    v_next: &'a [f64],
}

impl Objective<'_> {
    #[inline]
    fn eval(&self, x: f64, alpha: f64, terms: &TxTerms) -> f64 {
        let tr = self
            .stage
            .transition_with(x, alpha, terms.survival, terms.payoff, terms.booked);
        tr.reward
            + tr.gamma * self.grid.interpolate(self.v_next, tr.x_win)
            + (1.0 - tr.gamma) * self.grid.interpolate(self.v_next, tr.x_lose)
    }

    fn eval_action(&self, x: f64, alpha: f64, tx: f64) -> f64 {
        self.eval(x, alpha, &self.stage.tx_terms(tx))
    }
}

fn optimize_point(
    params: &GameParams,
    objective: &Objective,
    tx_terms: &[TxTerms],
    x: f64,
    t: usize,
) -> Result<PointChoice> {
    let c = params.cost_per_power;
    let budget = affordable(x / c, x, c);
    let n_alpha = if budget > 0.0 { params.alpha_points } else { 1 };
    let alphas: Vec<f64> = (0..n_alpha)
        .map(|j| {
            if j + 1 == n_alpha && n_alpha > 1 {
                budget
            } else {
                affordable(budget * j as f64 / (params.alpha_points - 1) as f64, x, c)
            }
        })
        .collect();

    let n_tx = tx_terms.len();
    let mut values = vec![0.0; n_alpha * n_tx];
    let mut arg = 0;
    for (j, &alpha) in alphas.iter().enumerate() {
        for (l, terms) in tx_terms.iter().enumerate() {
            let v = objective.eval(x, alpha, terms);
            if !v.is_finite() {
                return Err(Error::NonFinite { t, wealth: x });
            }
            values[j * n_tx + l] = v;
            if v > values[arg] {
                arg = j * n_tx + l;
            }
        }
    }
    let grid_best = Candidate {
        alpha: alphas[arg / n_tx],
        tx: tx_terms[arg % n_tx].tx,
        value: values[arg],
    };

    let mut best = grid_best;
    if params.refine && n_alpha > 1 {
        let refined = refine(
            params,
            objective,
            &alphas,
            tx_terms,
            arg / n_tx,
            arg % n_tx,
            x,
        );
        if refined.value > best.value {
            best = refined;
        }
    }

    let tol = tie_tolerance(best.value);
    let chosen = match values.iter().position(|v| *v >= best.value - tol) {
        Some(first) => {
            let grid_pick = Candidate {
                alpha: alphas[first / n_tx],
                tx: tx_terms[first % n_tx].tx,
                value: values[first],
            };
            tie_break(&[grid_pick, best])
        }
        None => best,
    };
    Ok(PointChoice { chosen, best })
}

fn refine(
    params: &GameParams,
    objective: &Objective,
    alphas: &[f64],
    tx_terms: &[TxTerms],
    j: usize,
    l: usize,
    x: f64,
) -> Candidate {
    let a_lo = alphas[j.saturating_sub(1)];
    let a_hi = alphas[(j + 1).min(alphas.len() - 1)];
    let search_tx = params.tx_policy == TxPolicy::Optimize && tx_terms.len() > 1;

    let best_alpha = |terms: &TxTerms| golden_max(|a| objective.eval(x, a, terms), a_lo, a_hi);

    if !search_tx {
        let terms = &tx_terms[l];
        let (alpha, value) = best_alpha(terms);
        return Candidate {
            alpha,
            tx: terms.tx,
            value,
        };
    }
    let t_lo = tx_terms[l.saturating_sub(1)].tx;
    let t_hi = tx_terms[(l + 1).min(tx_terms.len() - 1)].tx;
    let stage = objective.stage;
    let (tx, value) = golden_max(|tx| best_alpha(&stage.tx_terms(tx)).1, t_lo, t_hi);
    let (alpha, value_at) = best_alpha(&stage.tx_terms(tx));
    debug_assert_eq!(value, value_at);
    Candidate {
        alpha,
        tx,
        value: value_at,
    }
}

/// Solves round `t` given `V_{t+1}`; returns `(alpha, T, V_t)` rows.
pub(crate) fn solve_round(
    params: &GameParams,
    grid: &WealthGrid,
    stage: &Stage,
    v_next: &[f64],
    t: usize,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let tx_terms: Vec<TxTerms> = match stage.pinned_tx() {
        Some(tx) => vec![stage.tx_terms(tx)],
        None => params
            .tx_grid()
            .into_iter()
            .map(|tx| stage.tx_terms(tx))
            .collect(),
    };
    let objective = Objective {
        stage,
        grid,
        v_next,
    };
    let mut choices = (0..grid.len())
        .into_par_iter()
        .map(|i| optimize_point(params, &objective, &tx_terms, grid.point(i), t))
        .collect::<Result<Vec<_>>>()?;

    for i in 1..choices.len() {
        let prev = choices[i - 1].best;
        let x = grid.point(i);
        let inherited = Candidate {
            value: objective.eval_action(x, prev.alpha, prev.tx),
            ..prev
        };
        let here = &mut choices[i];
        if inherited.value > here.best.value {
            here.best = inherited;
        }
        here.chosen = tie_break(&[here.chosen, inherited, here.best]);
    }

    let alpha = choices.iter().map(|c| c.chosen.alpha).collect();
    let tx = choices.iter().map(|c| c.chosen.tx).collect();
    let value = choices.iter().map(|c| c.best.value).collect();
    Ok((alpha, tx, value))
}

/// Runs rounds `horizon` down to `0` against a mean-power trajectory.
pub(crate) fn induct(
    params: &GameParams,
    grid: &WealthGrid,
    stages: &[Stage],
) -> Result<(Table, Table, Table)> {
    let rounds = stages.len();
    let n = grid.len();
    let mut alpha = Table::zeros(rounds, n);
    let mut tx = Table::zeros(rounds, n);
    let mut values = Table::zeros(rounds + 1, n);
    for t in (0..rounds).rev() {
        let (a, x, v) = solve_round(params, grid, &stages[t], values.row(t + 1), t)?;
        alpha.row_mut(t).copy_from_slice(&a);
        tx.row_mut(t).copy_from_slice(&x);
        values.row_mut(t).copy_from_slice(&v);
    }
    Ok((alpha, tx, values))
}
