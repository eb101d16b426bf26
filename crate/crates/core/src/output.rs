// SPDX-License-Identifier: Apache-2.0

//! CSV and JSON writers with fixed schemas.
//!
//! Floats are written in scientific notation with 17 significant digits,
//! enough to read back the exact `f64`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::montecarlo::GameSimulation;
use crate::scenarios::{FeeEvolution, SafeValuePoint};
use crate::solver::EquilibriumResult;

pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_owned(),
        source,
    }
}

/// Output directory that records every file written into it.
#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(io_error(&dir))?;
        Ok(OutputDir {
            dir,
            written: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn target(&mut self, name: &str) -> PathBuf {
        let path = self.dir.join(name);
        self.written.push(path.clone());
        path
    }

    pub fn write_csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let path = self.target(name);
        let csv_error = |e: csv::Error| match e.into_kind() {
            csv::ErrorKind::Io(source) => Error::Io {
                path: path.clone(),
                source,
            },
            other => Error::Io {
                path: path.clone(),
                source: std::io::Error::other(format!("{other:?}")),
            },
        };
        let mut w = csv::Writer::from_path(&path).map_err(csv_error)?;
        w.write_record(header).map_err(csv_error)?;
        for row in rows {
            w.write_record(&row).map_err(csv_error)?;
        }
        w.flush().map_err(io_error(&path))
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.target(name);
        fs::write(&path, text).map_err(io_error(&path))
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let text = serde_json::to_string_pretty(value)
            .map_err(|e| Error::Parse(format!("cannot encode {name}: {e}")))?;
        self.write_text(name, &(text + "\n"))
    }
}

fn per_round(values: &[f64]) -> impl Iterator<Item = Vec<String>> + '_ {
    values
        .iter()
        .enumerate()
        .map(|(t, v)| vec![t.to_string(), format_f64(*v)])
}

/// `mean_alpha.csv`, `attack.csv`, `wealth.csv`, `policy.csv` and `value.csv`.
pub fn emit_equilibrium(out: &mut OutputDir, result: &EquilibriumResult) -> Result<()> {
    let xs = &result.wealth_grid;
    out.write_csv(
        "mean_alpha.csv",
        &["t", "alpha_bar"],
        per_round(&result.mean_alpha),
    )?;
    out.write_csv(
        "attack.csv",
        &["t", "attack_prob"],
        per_round(&result.attack_prob),
    )?;

    let grid_rows = |rows: usize, cell: &dyn Fn(usize, usize) -> Vec<String>| {
        (0..rows)
            .flat_map(move |t| (0..xs.len()).map(move |i| (t, i)))
            .map(move |(t, i)| {
                let mut row = vec![t.to_string(), format_f64(xs[i])];
                row.extend(cell(t, i));
                row
            })
            .collect::<Vec<_>>()
    };
    let mass = &result.wealth.mass;
    out.write_csv(
        "wealth.csv",
        &["t", "x", "mass"],
        grid_rows(mass.rows(), &|t, i| vec![format_f64(mass.get(t, i))]),
    )?;
    let policy = &result.policy;
    out.write_csv(
        "policy.csv",
        &["t", "x", "alpha", "T"],
        grid_rows(policy.alpha.rows(), &|t, i| {
            vec![
                format_f64(policy.alpha.get(t, i)),
                format_f64(policy.tx.get(t, i)),
            ]
        }),
    )?;
    let values = &result.values.values;
    out.write_csv(
        "value.csv",
        &["t", "x", "value"],
        grid_rows(values.rows(), &|t, i| vec![format_f64(values.get(t, i))]),
    )
}

pub fn emit_safe_values(out: &mut OutputDir, points: &[SafeValuePoint]) -> Result<()> {
    out.write_csv(
        "safe_value.csv",
        &["beta", "t_star"],
        points
            .iter()
            .map(|p| vec![format_f64(p.beta), format_f64(p.t_star)]),
    )
}

pub fn emit_fee_evolution(out: &mut OutputDir, runs: &[FeeEvolution]) -> Result<()> {
    out.write_csv(
        "fee_evolution.csv",
        &["lambda", "t", "t_star"],
        runs.iter().flat_map(|r| {
            r.t_star
                .iter()
                .enumerate()
                .map(|(t, v)| vec![format_f64(r.lambda), t.to_string(), format_f64(*v)])
        }),
    )
}

/// `simulation.csv`; `evaluated` is the deterministic mean wealth of the same policy.
pub fn emit_game_simulation(
    out: &mut OutputDir,
    sim: &GameSimulation,
    evaluated: &[f64],
) -> Result<()> {
    let rounds = sim.win_rate.len();
    let rate = |v: &[f64], t: usize| v.get(t).map_or_else(String::new, |r| format_f64(*r));
    out.write_csv(
        "simulation.csv",
        &[
            "t",
            "mean_wealth",
            "std_error",
            "evaluated_mean_wealth",
            "win_rate",
            "attack_rate",
            "reversal_rate",
        ],
        (0..=rounds).map(|t| {
            vec![
                t.to_string(),
                format_f64(sim.mean_wealth[t]),
                format_f64(sim.wealth_std_error[t]),
                rate(evaluated, t),
                rate(&sim.win_rate, t),
                rate(&sim.attack_rate, t),
                rate(&sim.reversal_rate, t),
            ]
        }),
    )
}
