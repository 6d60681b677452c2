//! Poisson probabilities by multiplicative recurrence.

use super::AnalyticsError;

/// Below this scale the running product is folded into a log accumulator.
const RESCALE: f64 = 1e-150;

/// e^(-rho) rho^k / k!, evaluated as a rescaled product of rho/i factors so
/// neither the factorial nor e^(-rho) can overflow or underflow prematurely.
pub fn poisson_pmf(k: u64, rho: f64) -> Result<f64, AnalyticsError> {
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(AnalyticsError::InvalidRate(rho));
    }
    Ok(pmf_unchecked(k, rho))
}

fn pmf_unchecked(k: u64, rho: f64) -> f64 {
    if rho == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let mut term = 1.0f64;
    let mut log_scale = -rho;
    for i in 1..=k {
        term *= rho / i as f64;
        if !(RESCALE..=1.0 / RESCALE).contains(&term) {
            log_scale += term.ln();
            term = 1.0;
        }
    }
    term * log_scale.exp()
}

/// Poisson pmf, cdf and survival tables up to a support bound beyond which
/// every probability is negligible (< 1e-300 relative).
#[derive(Debug, Clone)]
pub struct PoissonTable {
    rho: f64,
    pmf: Vec<f64>,
    /// tail[k] = P(A >= k), summed from the top for relative accuracy.
    tail: Vec<f64>,
    /// cdf[k] = P(A <= k), summed from the bottom.
    cdf: Vec<f64>,
}

impl PoissonTable {
    pub fn new(rho: f64) -> Result<Self, AnalyticsError> {
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(AnalyticsError::InvalidRate(rho));
        }
        let kmax = support_bound(rho);
        let mut pmf = vec![0.0; kmax + 1];
        // Anchor at the mode and recur outwards.
        let mode = (rho.floor() as usize).min(kmax);
        pmf[mode] = pmf_unchecked(mode as u64, rho);
        for k in (0..mode).rev() {
            pmf[k] = pmf[k + 1] * (k + 1) as f64 / rho;
        }
        for k in mode + 1..=kmax {
            pmf[k] = pmf[k - 1] * rho / k as f64;
        }
        let mut cdf = Vec::with_capacity(kmax + 1);
        let mut acc = 0.0;
        for p in &pmf {
            acc += p;
            cdf.push(acc);
        }
        let mut tail = vec![0.0; kmax + 2];
        for k in (0..=kmax).rev() {
            tail[k] = tail[k + 1] + pmf[k];
        }
        Ok(PoissonTable {
            rho,
            pmf,
            tail,
            cdf,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Largest k with a tabulated (possibly zero) probability.
    pub fn support(&self) -> usize {
        self.pmf.len() - 1
    }

    pub fn pmf(&self, k: usize) -> f64 {
        self.pmf.get(k).copied().unwrap_or(0.0)
    }

    pub fn cdf(&self, k: usize) -> f64 {
        if k >= self.cdf.len() {
            // Complete up to the truncation error of the table.
            self.cdf[self.cdf.len() - 1]
        } else {
            self.cdf[k]
        }
    }

    /// P(A >= k).
    pub fn tail(&self, k: usize) -> f64 {
        self.tail.get(k).copied().unwrap_or(0.0)
    }

    /// P(A > j) = 1 - P(A <= j), the regularized lower incomplete gamma
    /// function at (j + 1, rho).
    pub fn survival(&self, j: usize) -> f64 {
        self.tail(j + 1)
    }
}

fn support_bound(rho: f64) -> usize {
    (rho + 40.0 * rho.sqrt() + 60.0).ceil() as usize
}

/// Number of Poisson(rho) arrivals between the last multisuperframe boundary
/// and a uniformly random instant: (1/rho) * P(j + 1, rho), with P the
/// regularized lower incomplete gamma function, evaluated as the Poisson
/// survival function.
pub fn residual_arrival_pmf(j: u64, rho: f64) -> Result<f64, AnalyticsError> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(AnalyticsError::InvalidRate(rho));
    }
    let table = PoissonTable::new(rho)?;
    Ok(table.survival(j as usize) / rho)
}

/// Regularized lower incomplete gamma P(j + 1, rho) for integer shape.
pub fn regularized_gamma_integer(j: u64, rho: f64) -> Result<f64, AnalyticsError> {
    Ok(PoissonTable::new(rho)?.survival(j as usize))
}
