use serde::{Deserialize, Serialize};

use super::delay::model_delay_cdf;
use super::markov::ModelParams;
use super::AnalyticsError;

/// Multisuperframe duration used when none is given, seconds.
pub const DEFAULT_T_MSF: f64 = 3.84;

/// One CSV row. Unstable combinations carry no `n_msf` or `cdf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub utilization_pct: f64,
    pub n_slots: u32,
    pub n_msf: Option<usize>,
    pub cdf: Option<f64>,
}

impl SweepRow {
    pub fn is_unstable(&self) -> bool {
        self.cdf.is_none()
    }

    pub fn csv_line(&self) -> String {
        match (self.n_msf, self.cdf) {
            (Some(n), Some(f)) => format!("{},{},{},{:.12}", fmt_pct(self.utilization_pct), self.n_slots, n, f),
            _ => format!("{},{},,unstable", fmt_pct(self.utilization_pct), self.n_slots),
        }
    }
}

fn fmt_pct(p: f64) -> String {
    let s = format!("{p:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

pub const SWEEP_CSV_HEADER: &str = "utilization_pct,n_slots,n_msf,cdf";

/// Delay CDF for every (utilization, N) pair, F(n) for n = 0..=max_n.
/// `utilizations` are system utilizations rho = lambda * t_msf.
pub fn sweep(
    utilizations: &[f64],
    slot_counts: &[u32],
    t_msf: f64,
    max_n: usize,
) -> Result<Vec<SweepRow>, AnalyticsError> {
    let mut rows = Vec::new();
    for &rho in utilizations {
        for &n_slots in slot_counts {
            let params = ModelParams::from_utilization(rho, t_msf, n_slots)?;
            let pct = rho * 100.0;
            if !params.is_stable() {
                rows.push(SweepRow {
                    utilization_pct: pct,
                    n_slots,
                    n_msf: None,
                    cdf: None,
                });
                continue;
            }
            let f = model_delay_cdf(&params)?;
            for n in 0..=max_n {
                rows.push(SweepRow {
                    utilization_pct: pct,
                    n_slots,
                    n_msf: Some(n),
                    cdf: Some(f.at(n)),
                });
            }
        }
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}

/// Bisection for the utilization in [lo, hi] at which F_N(n) equals `target`.
/// F is non-increasing in rho, so `None` means the target is not bracketed.
pub fn find_utilization_for_target(
    n_slots: u32,
    n: usize,
    target: f64,
    lo: f64,
    hi: f64,
    t_msf: f64,
) -> Result<Option<f64>, AnalyticsError> {
    let f = |rho: f64| -> Result<f64, AnalyticsError> {
        Ok(model_delay_cdf(&ModelParams::from_utilization(rho, t_msf, n_slots)?)?.at(n))
    };
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (f(a)?, f(b)?);
    if (fa - target) * (fb - target) > 0.0 {
        return Ok(None);
    }
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        if (f(m)? - target) * (fa - target) > 0.0 {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-9 {
            break;
        }
    }
    Ok(Some(0.5 * (a + b)))
}
