//! Acceptance suite. Prints one line per criterion and exits non-zero if any fails.

use std::time::Instant;

use lpwan_sim::analytics::{
    mc_oracle, model_delay_cdf, regularized_gamma_integer, solve_stationary, transition_matrix, ModelParams,
    DEFAULT_T_MSF,
};
use lpwan_sim::cli::reproduce::{reproduce, reference, ReproduceOptions, Reproduction, ScenarioStats, ORACLE_PAIRS};
use lpwan_sim::engine::Stack;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn runner() -> TestRunner {
    TestRunner::new(Config {
        cases: 64,
        failure_persistence: None,
        ..Config::default()
    })
}

fn markov_properties() -> Outcome {
    let mut failures = Vec::new();

    let rows = runner().run(&(0.05f64..2.9, 1u32..=3, 0usize..40), |(rho, n, extra)| {
        let p = ModelParams::from_utilization(rho, DEFAULT_T_MSF, n).unwrap();
        let q_max = p.initial_q_max() + extra;
        let m = transition_matrix(&p, q_max).unwrap();
        prop_assert!(m.max_row_defect() <= 1e-12, "row defect {}", m.max_row_defect());
        Ok(())
    });
    if let Err(e) = rows {
        failures.push(format!("row sums: {e}"));
    }

    let fixed_point = runner().run(&(0.05f64..0.95, 1u32..=3), |(u, n)| {
        let p = ModelParams::from_utilization(u * f64::from(n), DEFAULT_T_MSF, n).unwrap();
        let (m, pi) = solve_stationary(&p).unwrap();
        let r = m.residual(pi.probabilities());
        prop_assert!(r < 1e-10, "residual {r}");
        Ok(())
    });
    if let Err(e) = fixed_point {
        failures.push(format!("fixed point: {e}"));
    }

    for rho in [0.3, 1.0, 5.0] {
        let mut sum = 0.0;
        for j in 0..200u64 {
            sum += regularized_gamma_integer(j, rho).unwrap() / rho;
        }
        if (sum - 1.0).abs() > 1e-9 {
            failures.push(format!("gamma sum at rho {rho} is {sum}"));
        }
    }

    let monotone = runner().run(&(0.05f64..0.9, 0.01f64..0.08), |(u, du)| {
        let cdf = |rho: f64, n: u32| model_delay_cdf(&ModelParams::from_utilization(rho, DEFAULT_T_MSF, n).unwrap()).unwrap();
        let base = cdf(u, 1);
        prop_assert!(base.is_monotone());
        let more_slots = cdf(u, 2);
        let busier = cdf(u + du, 1);
        for k in 1..=10 {
            prop_assert!(more_slots.at(k) + 1e-12 >= base.at(k), "N monotone at n={k}");
            prop_assert!(busier.at(k) <= base.at(k) + 1e-12, "rho anti-monotone at n={k}");
        }
        Ok(())
    });
    if let Err(e) = monotone {
        failures.push(format!("monotonicity: {e}"));
    }

    if failures.is_empty() {
        outcome(true, "row sums, fixed point, gamma sums and monotonicity hold")
    } else {
        outcome(false, failures.join("; "))
    }
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (rho, n) in ORACLE_PAIRS {
        let p = ModelParams::from_utilization(rho, DEFAULT_T_MSF, n).unwrap();
        let model = model_delay_cdf(&p).unwrap();
        let oracle = mc_oracle(&p, 1_000_000, 1).unwrap().delay;
        let d = (1..=10).map(|k| (model.at(k) - oracle.at(k)).abs()).fold(0.0, f64::max);
        worst = worst.max(d);
        parts.push(format!("({rho},{n})={d:.4}"));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 0.01 && secs <= 60.0,
        format!("sup {} (max {worst:.4} <= 0.01); {secs:.1} s <= 60 s", parts.join(" ")),
    )
}

fn model_anchor(r: &Reproduction) -> Outcome {
    let a = &r.anchor;
    let gain = a.gain_1_to_2 > a.gain_2_to_3;
    let detail = format!(
        "root in [0.90,1.00): {}; root anywhere: {}; F(1) at 0.90 = {:.4}; gain 1->2 {:.4} vs 2->3 {:.4}",
        a.rho_in_range.map(|x| format!("{x:.4}")).unwrap_or_else(|| "none".into()),
        a.rho_any.map(|x| format!("{x:.4}")).unwrap_or_else(|| "none".into()),
        a.f_n2_at_090,
        a.gain_1_to_2,
        a.gain_2_to_3
    );
    outcome(a.rho_in_range.is_some() && gain, detail)
}

fn dsme(r: &Reproduction) -> Vec<&ScenarioStats> {
    r.stats.iter().filter(|s| s.stack == Stack::DsmeLora).collect()
}

fn dsme_bounds(r: &Reproduction) -> Outcome {
    let runs = dsme(r);
    let prr = runs.iter().map(|s| s.prr).fold(1.0, f64::min);
    let max = runs.iter().filter_map(|s| s.max_s).fold(0.0, f64::max);
    let min = runs.iter().filter_map(|s| s.min_s).fold(f64::INFINITY, f64::min);
    let ks = runs.iter().filter_map(|s| s.ks_uniform).fold(0.0, f64::max);
    let pass = !runs.is_empty() && prr == 1.0 && max <= reference::DSME_MAX_COMPLETION_S && min <= reference::DSME_MIN_COMPLETION_S && ks < 0.05;
    outcome(
        pass,
        format!(
            "{} runs; min PRR {prr:.4}; max completion {max:.3} s (<= 3.90); min {min:.3} s (<= 0.140); max KS {ks:.4} (< 0.05)",
            runs.len()
        ),
    )
}

fn cross_model(r: &Reproduction) -> Outcome {
    let parts: Vec<String> = r
        .cross_model
        .iter()
        .map(|c| format!("({},{})={:.4}", c.rho, c.n_slots, c.sup_model_simulation))
        .collect();
    let pass = r.cross_model.len() == 2 && r.cross_model.iter().all(|c| c.sup_model_simulation <= 0.02);
    outcome(pass, format!("sup model-simulation {} (<= 0.02)", parts.join(" ")))
}

fn stat<'a>(r: &'a Reproduction, name: &str, seed: u64) -> Option<&'a ScenarioStats> {
    r.stats.iter().find(|s| s.name == name && s.seed == seed)
}

fn lorawan_orderings(r: &Reproduction) -> Outcome {
    let seeds = r.options.seed_list();
    let majority = seeds.len() / 2 + 1;
    let count = |f: &dyn Fn(u64) -> bool| seeds.iter().filter(|&&s| f(s)).count();
    let mut checks: Vec<(String, usize)> = Vec::new();
    for txi in ["10s", "20s"] {
        let (a, c) = (format!("schc_lorawan_a_{txi}"), format!("schc_lorawan_c_{txi}"));
        checks.push((
            format!("C>A@{txi}"),
            count(&|s| matches!((stat(r, &c, s), stat(r, &a, s)), (Some(c), Some(a)) if c.prr > a.prr)),
        ));
    }
    for class in ["a", "c"] {
        let (lo, hi) = (format!("schc_lorawan_{class}_10s"), format!("schc_lorawan_{class}_20s"));
        checks.push((
            format!("{}:20s>10s", class.to_uppercase()),
            count(&|s| matches!((stat(r, &hi, s), stat(r, &lo, s)), (Some(h), Some(l)) if h.prr > l.prr)),
        ));
    }
    checks.push((
        "p95 C<A@20s".into(),
        count(&|s| {
            matches!((stat(r, "schc_lorawan_c_20s", s), stat(r, "schc_lorawan_a_20s", s)),
                (Some(c), Some(a)) if c.p95_s.unwrap_or(f64::INFINITY) < a.p95_s.unwrap_or(f64::INFINITY))
        }),
    ));
    for name in ["schc_lorawan_a_10s", "schc_lorawan_a_20s", "schc_lorawan_c_10s", "schc_lorawan_c_20s"] {
        checks.push((
            format!("delta>0 {name}"),
            count(&|s| matches!(stat(r, name, s), Some(x) if x.delta > 0.0)),
        ));
    }
    let pass = checks.iter().all(|(_, k)| *k >= majority);
    let detail: Vec<String> = checks.iter().map(|(l, k)| format!("{l} {k}/{}", seeds.len())).collect();
    outcome(pass, detail.join(", "))
}

fn saturation(r: &Reproduction) -> Outcome {
    let seeds = r.options.seed_list();
    let rows: Vec<String> = seeds
        .iter()
        .filter_map(|&s| stat(r, "schc_lorawan_c_10s", s))
        .map(|x| format!("{}->{}", x.queue_mid.unwrap_or(0), x.queue_end.unwrap_or(0)))
        .collect();
    let growing = seeds
        .iter()
        .filter(|&&s| matches!(stat(r, "schc_lorawan_c_10s", s), Some(x) if x.queue_end > x.queue_mid))
        .count();
    outcome(
        growing == seeds.len(),
        format!("queue mid->end {} ; growing on {growing}/{}", rows.join(" "), seeds.len()),
    )
}

fn compression(r: &Reproduction) -> Outcome {
    let f = &r.frames;
    let s = &r.frames_small;
    let within = |v: f64, target: f64| (v - target).abs() <= 0.15 * target;
    let pass = f.schc.compressed_ip_udp_bytes < f.sixlowpan.compressed_ip_udp_bytes
        && f.sixlowpan.compressed_ip_udp_bytes >= 6
        && f.toa_schc_ms < f.toa_6lo_ms
        && within(f.toa_schc_ms, reference::TOA_SCHC_MS)
        && within(f.toa_6lo_ms, reference::TOA_6LO_MS);
    outcome(
        pass,
        format!(
            "IPv6+UDP {} vs {} B; ToA {:.1} ms vs {:.1} ms for {} B vs {} B frames; 12 B payload template gives {:.1} vs {:.1} ms",
            f.schc.compressed_ip_udp_bytes,
            f.sixlowpan.compressed_ip_udp_bytes,
            f.toa_schc_ms,
            f.toa_6lo_ms,
            f.schc_total_bytes,
            f.sixlowpan_total_bytes,
            s.toa_schc_ms,
            s.toa_6lo_ms
        ),
    )
}

fn energy(r: &Reproduction) -> Outcome {
    let n = r.profile_checks.len();
    let ok = r.profile_checks.iter().filter(|c| c.passes()).count();
    let ratios = r.profile_checks.iter().map(|c| c.actuator_ratio);
    let (lo, hi) = ratios.fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(x), b.max(x)));
    outcome(
        n >= 10 && ok == n,
        format!("{ok}/{n} profiles pass; actuator ratio range [{lo:.3}, {hi:.3}]"),
    )
}

fn determinism(r: &Reproduction) -> Outcome {
    let threads = if r.options.threads == 1 { 4 } else { 1 };
    let again = reproduce(&ReproduceOptions {
        threads,
        ..r.options.clone()
    })
    .expect("second reproduce run");
    let differing: Vec<String> = r
        .files
        .names()
        .filter(|p| r.files.get(p) != again.files.get(p))
        .map(|p| p.display().to_string())
        .collect();
    let same_set = r.files.len() == again.files.len();
    outcome(
        same_set && differing.is_empty(),
        format!(
            "{} files compared across runs with {} and {threads} threads; {} differ",
            r.files.len(),
            r.options.threads,
            differing.len()
        ),
    )
}

fn main() {
    let start = Instant::now();
    let mut results: Vec<(u32, &str, Outcome)> = vec![
        (1, "markov model properties", markov_properties()),
        (2, "oracle equivalence", oracle_equivalence()),
    ];
    let r = reproduce(&ReproduceOptions::default()).expect("reproduce");
    results.push((3, "model anchor", model_anchor(&r)));
    results.push((4, "dsme bounds", dsme_bounds(&r)));
    results.push((5, "cross-model check", cross_model(&r)));
    results.push((6, "lorawan orderings", lorawan_orderings(&r)));
    results.push((7, "class c saturation", saturation(&r)));
    results.push((8, "compression", compression(&r)));
    results.push((9, "energy orderings", energy(&r)));
    results.push((10, "determinism", determinism(&r)));

    let mut failed = 0;
    for (id, name, o) in &results {
        if !o.pass {
            failed += 1;
        }
        println!("[{}] {id} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1} s",
        results.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
