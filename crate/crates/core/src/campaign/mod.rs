//! Seeded campaigns over the inequality checks, with JSON and CSV reports.
//!
//! Trials run in parallel; rows are assembled in `(suite, trial)` order so
//! the report is a pure function of the configuration.

mod config;
mod report;
mod suites;

use std::time::{Duration, Instant};

use rayon::prelude::*;

pub use config::{BosonicConfig, CampaignConfig, Format, Suite, DEFAULT_MAX_TOTAL_DIM, DEFAULT_SEED};
pub use report::{float17, merge, summarize, sweep_csv, Report, Row, SuiteSummary, SCHEMA_VERSION};
pub use suites::{bosonic_sweep, guard_for, markov_chain_state};

use crate::error::Result;

#[derive(Clone, Debug)]
pub struct SuiteRun {
    pub suite: Suite,
    pub rows: Vec<Row>,
    /// Not part of the report, which must not depend on timing.
    pub wall_time: Duration,
}

/// Fixed instances first, then trials in index order.
pub fn run_suite(config: &CampaignConfig, suite: Suite) -> Result<SuiteRun> {
    config.validate()?;
    let start = Instant::now();
    let mut rows = Vec::new();
    let trials: Vec<u64> = match config.only_trial {
        Some(t) => vec![t],
        None => {
            rows.extend(suites::fixed_instances(config, suite));
            (0..config.trials_for(suite)).collect()
        }
    };
    let per_trial: Vec<Vec<Row>> = trials
        .into_par_iter()
        .map(|t| suites::run_trial(config, suite, t))
        .collect();
    rows.extend(per_trial.into_iter().flatten());
    if let Some(tol) = config.tol {
        rows.iter_mut().for_each(|r| r.retolerate(tol));
    }
    Ok(SuiteRun {
        suite,
        rows,
        wall_time: start.elapsed(),
    })
}

/// Every selected suite, in the canonical suite order.
pub fn run(config: &CampaignConfig) -> Result<(Report, Vec<SuiteRun>)> {
    config.validate()?;
    let mut suites = config.suites.clone();
    suites.sort();
    suites.dedup();
    let mut runs = Vec::with_capacity(suites.len());
    for suite in suites {
        runs.push(run_suite(config, suite)?);
    }
    let rows = runs.iter().flat_map(|r| r.rows.iter().cloned()).collect();
    Ok((Report::new(vec![config.clone()], rows), runs))
}
