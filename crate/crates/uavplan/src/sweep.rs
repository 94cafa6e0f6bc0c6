//! Scheme comparisons and demand sweeps, one scheme run per rayon task.

use rayon::prelude::*;
use uav_energy_core::eval::{run_scheme, Scheme, SchemeOutcome, SweepRow};
use uav_energy_core::{Error, Result, Scenario, SolverSettings};

pub fn compare(s: &Scenario, st: &SolverSettings) -> Vec<SchemeOutcome> {
    Scheme::ALL.par_iter().map(|&k| run_scheme(k, s, st)).collect()
}

/// Same rows, in the same order, as the sequential core sweep.
pub fn sweep(s: &Scenario, demands: &[f64], st: &SolverSettings) -> Result<Vec<SweepRow>> {
    if demands.is_empty() || demands.iter().any(|&q| !(q > 0.0)) {
        return Err(Error::Invalid {
            name: "sweep demands".into(),
            requirement: "a nonempty list of positive values".into(),
        });
    }
    let jobs: Vec<(f64, Scheme)> = demands.iter().flat_map(|&q| Scheme::ALL.iter().map(move |&k| (q, k))).collect();
    Ok(jobs
        .par_iter()
        .map(|&(q, k)| SweepRow::from_outcome(q, &run_scheme(k, &s.with_uniform_demand(q), st)))
        .collect())
}
