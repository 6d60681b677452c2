//! Embedded Markov chain of the MAC queue at multisuperframe boundaries.

use serde::{Deserialize, Serialize};

use super::poisson::PoissonTable;
use super::{AnalyticsError, Pmf};

/// Stationary tail mass allowed in the lumped top state.
pub const TAIL_TOLERANCE: f64 = 1e-10;
/// Fixed-point residual required of a stationary solution.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
/// Truncation is doubled at most up to this many states.
pub const MAX_STATES: usize = 1 << 18;

/// Traffic and slot configuration of one sender-receiver pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Packet scheduling rate, packets per second.
    pub lambda: f64,
    /// Multisuperframe duration, seconds.
    pub t_msf: f64,
    /// Guaranteed slots per multisuperframe towards the receiver.
    pub n_slots: u32,
}

impl ModelParams {
    pub fn new(lambda: f64, t_msf: f64, n_slots: u32) -> Result<Self, AnalyticsError> {
        let p = ModelParams {
            lambda,
            t_msf,
            n_slots,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters from a system utilization rho = lambda * t_msf.
    pub fn from_utilization(rho: f64, t_msf: f64, n_slots: u32) -> Result<Self, AnalyticsError> {
        if !(t_msf > 0.0) {
            return Err(AnalyticsError::InvalidParams(format!("t_msf {t_msf} must be > 0")));
        }
        Self::new(rho / t_msf, t_msf, n_slots)
    }

    pub fn validate(&self) -> Result<(), AnalyticsError> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(AnalyticsError::InvalidRate(self.lambda));
        }
        if !(self.t_msf > 0.0) || !self.t_msf.is_finite() {
            return Err(AnalyticsError::InvalidParams(format!(
                "t_msf {} must be > 0",
                self.t_msf
            )));
        }
        if self.n_slots == 0 {
            return Err(AnalyticsError::InvalidParams("n_slots must be >= 1".into()));
        }
        Ok(())
    }

    /// Mean packets scheduled per multisuperframe.
    pub fn rho(&self) -> f64 {
        self.lambda * self.t_msf
    }

    pub fn utilization_per_slot(&self) -> f64 {
        self.rho() / f64::from(self.n_slots)
    }

    pub fn is_stable(&self) -> bool {
        self.utilization_per_slot() < 1.0
    }

    pub fn ensure_stable(&self) -> Result<(), AnalyticsError> {
        if self.is_stable() {
            Ok(())
        } else {
            Err(AnalyticsError::Unstable {
                rho: self.rho(),
                n_slots: self.n_slots,
            })
        }
    }

    /// Initial truncation: max(64, 16 N / (1 - rho/N)).
    pub fn initial_q_max(&self) -> usize {
        let n = f64::from(self.n_slots);
        let q = 16.0 * n / (1.0 - self.utilization_per_slot());
        (q.ceil() as usize).max(64).max(self.n_slots as usize)
    }
}

/// Transition probabilities between queue lengths 0..=q_max at consecutive
/// multisuperframe starts. With A ~ Poisson(rho) arrivals per
/// multisuperframe and up to N departures:
///
/// * `P[i, 0] = P(A <= N - i)` (zero when i > N)
/// * `P[i, j] = P(A = j - i + N)` for j >= 1
///
/// Mass that would leave the truncated range is lumped into `q_max`.
/// Entries are evaluated on demand from a Poisson table, so storage is
/// linear in the arrival support rather than quadratic in `q_max`.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    q_max: usize,
    n_slots: usize,
    arrivals: PoissonTable,
}

impl TransitionMatrix {
    pub fn size(&self) -> usize {
        self.q_max + 1
    }

    pub fn q_max(&self) -> usize {
        self.q_max
    }

    pub fn n_slots(&self) -> usize {
        self.n_slots
    }

    pub fn rho(&self) -> f64 {
        self.arrivals.rho()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i <= self.q_max && j <= self.q_max, "state out of range");
        let n = self.n_slots;
        if j == 0 {
            return if i <= n { self.arrivals.cdf(n - i) } else { 0.0 };
        }
        if j + n < i {
            return 0.0;
        }
        let k = j + n - i;
        if j == self.q_max {
            self.arrivals.tail(k)
        } else {
            self.arrivals.pmf(k)
        }
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.size()).map(|j| self.get(i, j)).collect()
    }

    /// Largest |row sum - 1| over all rows.
    pub fn max_row_defect(&self) -> f64 {
        (0..self.size())
            .map(|i| {
                let s: f64 = (0..self.size()).map(|j| self.get(i, j)).sum();
                (s - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// One step of the chain: returns v P.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.size());
        let n = self.n_slots;
        let q = self.q_max;
        let support = self.arrivals.support();
        let mut out = vec![0.0; self.size()];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            if i <= n {
                out[0] += vi * self.arrivals.cdf(n - i);
            }
            // Interior columns j in 1..q with j + n - i in [0, support].
            let lo = (i.saturating_sub(n)).max(1);
            if let Some(hi) = (i + support).checked_sub(n) {
                for j in lo..=hi.min(q.saturating_sub(1)) {
                    out[j] += vi * self.arrivals.pmf(j + n - i);
                }
            }
            if q >= 1 {
                out[q] += vi * self.arrivals.tail(q + n - i);
            }
        }
        out
    }

    /// Sup-norm of pi P - pi.
    pub fn residual(&self, pi: &[f64]) -> f64 {
        self.apply(pi)
            .iter()
            .zip(pi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub fn transition_matrix(params: &ModelParams, q_max: usize) -> Result<TransitionMatrix, AnalyticsError> {
    params.validate()?;
    let n_slots = params.n_slots as usize;
    if q_max < n_slots {
        return Err(AnalyticsError::InvalidParams(format!(
            "q_max {q_max} smaller than n_slots {n_slots}"
        )));
    }
    Ok(TransitionMatrix {
        q_max,
        n_slots,
        arrivals: PoissonTable::new(params.rho())?,
    })
}

/// Direct solve of pi (I - P) = 0 with pi_0 fixed to 1, then normalized.
///
/// Dropping state 0 leaves the system M x = b with M[j][i] = delta_ij - P[i, j]
/// over states 1..=q_max. M is banded (N above the diagonal, the arrival
/// support below it) and column diagonally dominant, so Gaussian elimination
/// without pivoting is stable and keeps the band.
pub fn stationary_direct(p: &TransitionMatrix) -> Result<Pmf, AnalyticsError> {
    let q = p.q_max;
    if q == 0 {
        return Ok(Pmf::new(vec![1.0]));
    }
    let upper = p.n_slots;
    let lower = p.arrivals.support().saturating_sub(p.n_slots);
    // Unknowns x_1..x_q stored at index 0..q-1.
    let dim = q;
    let width = lower + upper + 1;
    // band[r][c - r + lower] for c in [r - lower, r + upper]
    let mut band = vec![0.0f64; dim * width];
    let idx = |r: usize, c: usize| r * width + (c + lower - r);
    let mut rhs = vec![0.0f64; dim];
    for r in 0..dim {
        let j = r + 1;
        let c_lo = r.saturating_sub(lower);
        let c_hi = (r + upper).min(dim - 1);
        for c in c_lo..=c_hi {
            let i = c + 1;
            let delta = if i == j { 1.0 } else { 0.0 };
            band[idx(r, c)] = delta - p.get(i, j);
        }
        rhs[r] = p.get(0, j);
    }
    // Forward elimination.
    for k in 0..dim {
        let pivot = band[idx(k, k)];
        if !(pivot.abs() > 0.0) {
            return Err(AnalyticsError::Singular);
        }
        let r_hi = (k + lower).min(dim - 1);
        let c_hi = (k + upper).min(dim - 1);
        for r in k + 1..=r_hi {
            let factor = band[idx(r, k)] / pivot;
            if factor == 0.0 {
                continue;
            }
            band[idx(r, k)] = 0.0;
            for c in k + 1..=c_hi {
                band[idx(r, c)] -= factor * band[idx(k, c)];
            }
            rhs[r] -= factor * rhs[k];
        }
    }
    // Back substitution.
    let mut x = vec![0.0f64; dim];
    for r in (0..dim).rev() {
        let c_hi = (r + upper).min(dim - 1);
        let mut s = rhs[r];
        for c in r + 1..=c_hi {
            s -= band[idx(r, c)] * x[c];
        }
        x[r] = (s / band[idx(r, r)]).max(0.0);
    }
    let total = 1.0 + x.iter().sum::<f64>();
    let mut pi = Vec::with_capacity(q + 1);
    pi.push(1.0 / total);
    pi.extend(x.iter().map(|v| v / total));
    Ok(Pmf::new(pi))
}

/// Power iteration from the empty-queue state until successive iterates
/// differ by less than `tolerance` in sup-norm.
pub fn stationary_power(
    p: &TransitionMatrix,
    tolerance: f64,
    max_iterations: usize,
) -> Result<Pmf, AnalyticsError> {
    let mut v = vec![0.0; p.size()];
    v[0] = 1.0;
    let mut change = f64::INFINITY;
    for _ in 0..max_iterations {
        let mut next = p.apply(&v);
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= s);
        change = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        if change < tolerance {
            return Ok(Pmf::new(v));
        }
    }
    Err(AnalyticsError::NotConverged {
        residual: change,
        iterations: max_iterations,
    })
}

/// Stationary distribution of a given truncated chain. Rejects unstable
/// chains, solutions with a residual above [`RESIDUAL_TOLERANCE`], and
/// truncations whose top state holds [`TAIL_TOLERANCE`] or more mass.
pub fn stationary_distribution(p: &TransitionMatrix) -> Result<Pmf, AnalyticsError> {
    let per_slot = p.rho() / p.n_slots as f64;
    if per_slot >= 1.0 {
        return Err(AnalyticsError::Unstable {
            rho: p.rho(),
            n_slots: p.n_slots as u32,
        });
    }
    let pi = stationary_direct(p)?;
    let residual = p.residual(pi.probabilities());
    if residual >= RESIDUAL_TOLERANCE {
        return Err(AnalyticsError::NotConverged {
            residual,
            iterations: 0,
        });
    }
    let tail = pi.get(p.q_max);
    if tail >= TAIL_TOLERANCE {
        return Err(AnalyticsError::TruncationTooSmall {
            q_max: p.q_max,
            tail,
        });
    }
    Ok(pi)
}

/// Builds the chain with the default truncation and doubles `q_max` until
/// the stationary tail is negligible.
pub fn solve_stationary(params: &ModelParams) -> Result<(TransitionMatrix, Pmf), AnalyticsError> {
    params.validate()?;
    params.ensure_stable()?;
    let mut q = params.initial_q_max();
    loop {
        let p = transition_matrix(params, q)?;
        match stationary_distribution(&p) {
            Ok(pi) => return Ok((p, pi)),
            Err(AnalyticsError::TruncationTooSmall { .. }) if q * 2 <= MAX_STATES => q *= 2,
            Err(e) => return Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(rho: f64, n: u32) -> ModelParams {
        ModelParams::from_utilization(rho, 3.84, n).unwrap()
    }

    #[test]
    fn idle_chain_drains() {
        let p = transition_matrix(&params(0.0, 1), 8).unwrap();
        assert_eq!(p.get(0, 0), 1.0);
        assert_eq!(p.get(2, 1), 1.0);
        assert_eq!(p.get(2, 2), 0.0);
        let pi = stationary_distribution(&p).unwrap();
        assert_eq!(pi.get(0), 1.0);
        assert!(pi.probabilities()[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn empty_queue_probability_closed_form() {
        let p = transition_matrix(&params(0.5, 1), 64).unwrap();
        let want = (-0.5f64).exp() * 1.5;
        assert!((p.get(0, 0) - want).abs() < 1e-15);
        assert!((p.get(1, 0) - (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(p.get(2, 0), 0.0);
        assert_eq!(p.get(5, 3), 0.0);
    }

    #[test]
    fn rows_are_stochastic() {
        for (rho, n, q) in [(0.5, 1, 64), (1.5, 2, 80), (2.7, 3, 100), (0.01, 3, 3)] {
            let p = transition_matrix(&params(rho, n), q).unwrap();
            assert!(p.max_row_defect() < 1e-12, "rho {rho} n {n}");
            assert!((0..p.size()).all(|i| p.row(i).iter().all(|&x| x >= 0.0)));
        }
    }

    #[test]
    fn apply_matches_dense_product() {
        let p = transition_matrix(&params(1.2, 2), 40).unwrap();
        let v: Vec<f64> = (0..p.size()).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let fast = p.apply(&v);
        for j in 0..p.size() {
            let dense: f64 = (0..p.size()).map(|i| v[i] * p.get(i, j)).sum();
            assert!((fast[j] - dense).abs() < 1e-14, "col {j}");
        }
    }

    #[test]
    fn q_max_must_hold_the_slots() {
        assert!(transition_matrix(&params(0.5, 3), 2).is_err());
    }

    #[test]
    fn unstable_chain_rejected() {
        let p = transition_matrix(&params(1.0, 1), 64).unwrap();
        assert!(matches!(stationary_distribution(&p), Err(AnalyticsError::Unstable { .. })));
        assert!(matches!(solve_stationary(&params(2.5, 2)), Err(AnalyticsError::Unstable { .. })));
    }

    #[test]
    fn small_truncation_detected_then_grown() {
        let p = transition_matrix(&params(0.9, 1), 8).unwrap();
        assert!(matches!(
            stationary_distribution(&p),
            Err(AnalyticsError::TruncationTooSmall { .. })
        ));
        let (p, pi) = solve_stationary(&params(0.95, 1)).unwrap();
        assert!(pi.get(p.q_max()) < TAIL_TOLERANCE);
        assert!(p.residual(pi.probabilities()) < RESIDUAL_TOLERANCE);
    }

    #[test]
    fn direct_and_power_iteration_agree() {
        for (rho, n) in [(0.5, 1), (0.9, 1), (1.5, 2), (2.7, 3)] {
            let (p, direct) = solve_stationary(&params(rho, n)).unwrap();
            let power = stationary_power(&p, 1e-15, 2_000_000).unwrap();
            let gap = direct.sup_distance(&power);
            assert!(gap < 1e-9, "rho {rho} n {n}: {gap}");
        }
    }

    #[test]
    fn single_slot_empty_probability_closed_form() {
        // With N = 1 a frame leaves unless the queue was empty and nothing
        // arrived, so throughput balance gives 1 - pi_0 e^{-rho} = rho.
        for rho in [0.3, 0.5, 0.9] {
            let (_, pi) = solve_stationary(&params(rho, 1)).unwrap();
            let want = (1.0 - rho) * rho.exp();
            assert!((pi.get(0) - want).abs() < 1e-10, "rho {rho}: {} vs {want}", pi.get(0));
        }
    }

    #[test]
    fn throughput_balances_arrivals() {
        // E[min(N, i + A)] under pi equals rho for any N.
        for (rho, n) in [(1.5, 2), (2.7, 3), (0.4, 3)] {
            let (p, pi) = solve_stationary(&params(rho, n)).unwrap();
            let table = PoissonTable::new(rho).unwrap();
            let mut served = 0.0;
            for i in 0..p.size() {
                let mut e = 0.0;
                for a in 0..=table.support() {
                    e += table.pmf(a) * ((i + a).min(n as usize)) as f64;
                }
                served += pi.get(i) * e;
            }
            assert!((served - rho).abs() < 1e-9, "rho {rho} n {n}: {served}");
        }
    }
}
