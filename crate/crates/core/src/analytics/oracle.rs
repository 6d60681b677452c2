//! Monte-Carlo reference for the Markov model: Poisson arrivals into a FIFO
//! queue that is served up to N frames at a time at every multisuperframe
//! boundary.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::delay::DelayCdf;
use super::markov::ModelParams;
use super::{AnalyticsError, Pmf};
use crate::engine::rng::{Purpose, RngStream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// Queue length just after service at each boundary.
    pub boundary: Pmf,
    /// Queue length seen by arriving frames (time average by PASTA).
    pub queue_length: Pmf,
    /// Fraction of frames with ceil(wait / t_msf) <= n.
    pub delay: DelayCdf,
    pub arrivals: u64,
    pub multisuperframes: u64,
}

fn bump(counts: &mut Vec<u64>, k: usize, by: u64) {
    if counts.len() <= k {
        counts.resize(k + 1, 0);
    }
    counts[k] += by;
}

pub fn mc_oracle(params: &ModelParams, num_arrivals: u64, seed: u64) -> Result<OracleResult, AnalyticsError> {
    params.validate()?;
    params.ensure_stable()?;
    let t = params.t_msf;
    let n = params.n_slots as usize;
    let mut rng = RngStream::for_purpose(seed, Purpose::Oracle, 0);

    let mut queue: VecDeque<f64> = VecDeque::new();
    let mut boundary_counts: Vec<u64> = Vec::new();
    let mut seen_counts: Vec<u64> = Vec::new();
    let mut wait_counts: Vec<u64> = Vec::new();
    // Index of the next boundary to process; boundary k sits at k * t.
    let mut next_boundary: u64 = 1;
    let mut clock = 0.0f64;

    let serve = |k: u64, queue: &mut VecDeque<f64>, wait_counts: &mut Vec<u64>| {
        let at = k as f64 * t;
        for _ in 0..n.min(queue.len()) {
            let arrived = queue.pop_front().expect("non-empty");
            let msfs = ((at - arrived) / t).ceil().max(1.0) as usize;
            bump(wait_counts, msfs, 1);
        }
    };

    if params.lambda > 0.0 {
        for _ in 0..num_arrivals {
            clock += rng.exponential(params.lambda);
            let due = (clock / t).floor() as u64;
            while next_boundary <= due {
                if queue.is_empty() {
                    // Idle stretch: every remaining boundary sees an empty queue.
                    bump(&mut boundary_counts, 0, due - next_boundary + 1);
                    next_boundary = due + 1;
                    break;
                }
                serve(next_boundary, &mut queue, &mut wait_counts);
                bump(&mut boundary_counts, queue.len(), 1);
                next_boundary += 1;
            }
            bump(&mut seen_counts, queue.len(), 1);
            queue.push_back(clock);
        }
    }
    let observed_boundaries = next_boundary - 1;
    // Drain so every frame gets a wait; later boundaries are not counted.
    while !queue.is_empty() {
        serve(next_boundary, &mut queue, &mut wait_counts);
        next_boundary += 1;
    }

    let boundary = if boundary_counts.is_empty() {
        Pmf::new(vec![1.0])
    } else {
        Pmf::from_counts(&boundary_counts)
    };
    let queue_length = if seen_counts.is_empty() {
        Pmf::new(vec![1.0])
    } else {
        Pmf::from_counts(&seen_counts)
    };
    let total: u64 = wait_counts.iter().sum();
    let mut values = Vec::with_capacity(wait_counts.len().max(2));
    let mut acc = 0u64;
    for k in 0..wait_counts.len().max(2) {
        if k > 0 {
            acc += wait_counts.get(k).copied().unwrap_or(0);
        }
        let f = match total {
            0 if k == 0 => 0.0,
            0 => 1.0,
            _ => acc as f64 / total as f64,
        };
        values.push(f);
    }
    Ok(OracleResult {
        boundary,
        queue_length,
        delay: DelayCdf::from_values(values),
        arrivals: if params.lambda > 0.0 { num_arrivals } else { 0 },
        multisuperframes: observed_boundaries,
    })
}
