use serde::{Deserialize, Serialize};

use super::markov::{solve_stationary, ModelParams};
use super::poisson::PoissonTable;
use super::{AnalyticsError, Pmf};

/// F(n) = P(W <= n * T_msf) for n = 0, 1, 2, ...
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayCdf {
    values: Vec<f64>,
}

impl DelayCdf {
    pub fn from_values(values: Vec<f64>) -> Self {
        DelayCdf { values }
    }

    /// F(n); values past the tabulated range repeat the last entry.
    pub fn at(&self, n: usize) -> f64 {
        match self.values.get(n) {
            Some(v) => *v,
            None => self.values.last().copied().unwrap_or(0.0),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_distance(&self, other: &DelayCdf) -> f64 {
        let n = self.len().max(other.len());
        (0..n)
            .map(|k| (self.at(k) - other.at(k)).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_monotone(&self) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0] - 1e-15)
    }
}

/// Queue length at an arbitrary instant: pi convolved with the number of
/// arrivals since the last boundary, (1/rho) * P(j + 1, rho).
pub fn queue_length_distribution(pi: &Pmf, rho: f64) -> Result<Pmf, AnalyticsError> {
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(AnalyticsError::InvalidRate(rho));
    }
    if rho == 0.0 {
        return Ok(pi.clone());
    }
    let table = PoissonTable::new(rho)?;
    let residual: Vec<f64> = (0..=table.support())
        .map(|j| table.survival(j) / rho)
        .collect();
    let p = pi.probabilities();
    let mut out = vec![0.0; p.len() + residual.len() - 1];
    for (i, &pi_i) in p.iter().enumerate() {
        if pi_i == 0.0 {
            continue;
        }
        for (r, &res) in residual.iter().enumerate() {
            out[i + r] += pi_i * res;
        }
    }
    // Drop trailing zeros.
    while out.len() > 1 && out[out.len() - 1] == 0.0 {
        out.pop();
    }
    Ok(Pmf::new(out))
}

/// F(n) = P(L <= N n - 1). A frame that finds L queued ahead of it leaves at
/// boundary floor(L / N) + 1, hence within n multisuperframes iff L < N n.
/// The table runs until F reaches 1 within 1e-12 (at least `min_len` entries).
pub fn delay_cdf(queue_length: &Pmf, params: &ModelParams) -> DelayCdf {
    delay_cdf_with_len(queue_length, params.n_slots as usize, 0)
}

pub(crate) fn delay_cdf_with_len(queue_length: &Pmf, n_slots: usize, min_len: usize) -> DelayCdf {
    let p = queue_length.probabilities();
    let mut values = vec![0.0];
    let mut acc = 0.0;
    let mut idx = 0;
    let mut n = 1;
    loop {
        let upto = (n_slots * n).min(p.len());
        while idx < upto {
            acc += p[idx];
            idx += 1;
        }
        values.push(acc.min(1.0));
        if (idx >= p.len() && values.len() >= min_len) || (1.0 - acc < 1e-12 && values.len() >= min_len) {
            break;
        }
        n += 1;
    }
    DelayCdf { values }
}

/// Stationary solve, queue length at an arbitrary instant, and delay CDF in one call.
pub fn model_delay_cdf(params: &ModelParams) -> Result<DelayCdf, AnalyticsError> {
    let (_, pi) = solve_stationary(params)?;
    let l = queue_length_distribution(&pi, params.rho())?;
    Ok(delay_cdf(&l, params))
}
