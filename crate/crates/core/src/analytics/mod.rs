//! Analytical Markov model of GTS transmission delay with N guaranteed slots
//! per multisuperframe, and a Monte-Carlo oracle of the same queue.
//!
//! The model treats the N slots towards one receiver as a single service
//! instant that can carry up to N frames. Arrivals are Poisson.

mod delay;
mod markov;
mod oracle;
mod poisson;
mod sweep;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use delay::{delay_cdf, model_delay_cdf, queue_length_distribution, DelayCdf};
pub use markov::{
    solve_stationary, stationary_direct, stationary_distribution, stationary_power,
    transition_matrix, ModelParams, TransitionMatrix, MAX_STATES, RESIDUAL_TOLERANCE,
    TAIL_TOLERANCE,
};
pub use oracle::{mc_oracle, OracleResult};
pub use poisson::{poisson_pmf, regularized_gamma_integer, residual_arrival_pmf, PoissonTable};
pub use sweep::{find_utilization_for_target, sweep, sweep_csv, SweepRow, DEFAULT_T_MSF, SWEEP_CSV_HEADER};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("rate must be finite and non-negative (got {0})")]
    InvalidRate(f64),
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("unstable queue: rho / N = {rho} / {n_slots} >= 1")]
    Unstable { rho: f64, n_slots: u32 },
    #[error("stationary solver did not converge (residual {residual:e} after {iterations} iterations)")]
    NotConverged { residual: f64, iterations: usize },
    #[error("truncation q_max = {q_max} leaves tail mass {tail:e}")]
    TruncationTooSmall { q_max: usize, tail: f64 },
    #[error("singular linear system")]
    Singular,
}

/// Probability vector indexed from 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pmf {
    probabilities: Vec<f64>,
    /// Largest index carried; mass beyond it was lumped or dropped.
    truncation_bound: usize,
}

impl Pmf {
    pub fn new(probabilities: Vec<f64>) -> Self {
        let truncation_bound = probabilities.len().saturating_sub(1);
        Pmf {
            probabilities,
            truncation_bound,
        }
    }

    /// Empirical distribution from counts.
    pub fn from_counts(counts: &[u64]) -> Self {
        let total: u64 = counts.iter().sum();
        let total = total.max(1) as f64;
        Pmf::new(counts.iter().map(|&c| c as f64 / total).collect())
    }

    pub fn get(&self, k: usize) -> f64 {
        self.probabilities.get(k).copied().unwrap_or(0.0)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn truncation_bound(&self) -> usize {
        self.truncation_bound
    }

    pub fn sum(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(k, p)| k as f64 * p)
            .sum()
    }

    /// Largest pointwise difference, treating missing entries as zero.
    pub fn sup_distance(&self, other: &Pmf) -> f64 {
        let n = self.len().max(other.len());
        (0..n)
            .map(|k| (self.get(k) - other.get(k)).abs())
            .fold(0.0, f64::max)
    }
}
