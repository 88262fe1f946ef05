//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use selfmine::analytic::{relative_revenue, reward_rates_n2, reward_rates_n4};
use selfmine::cli::{self, Cli};
use selfmine::markov;
use selfmine::sim::{self, SimConfig};
use selfmine::threshold::{
    convergence_study, profitable_threshold, threshold_curve, Evaluator, Search, ThresholdQuery,
};
use selfmine::transient::{
    absolute_revenue, profitable_delay, simulate_epochs, steady_round_rates, GrowthSchedule,
};
use selfmine::{HashrateProfile, ProtocolParams, Scenario, TieBreakParams};

use clap::Parser;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Valid scenario with honest majority and arbitrary tie-breaking.
fn random_scenario(rng: &mut ChaCha8Rng, n_cap: u8, max_alpha: f64) -> Scenario {
    loop {
        let a1 = rng.gen_range(0.0..max_alpha);
        let a2 = rng.gen_range(0.0..max_alpha);
        let h = HashrateProfile::from_attackers(a1, a2);
        if h.validate(true).is_err() {
            continue;
        }
        let t1 = rng.gen_range(0.0..1.0);
        let t2 = rng.gen_range(0.0..1.0 - t1);
        let tie = TieBreakParams::new(rng.gen_range(0.01..1.0), rng.gen_range(0.01..1.0), t1, t2);
        return Scenario::new(h, tie, ProtocolParams::with_cap(n_cap));
    }
}

fn closed_form_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut worst2, mut worst4) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let s = random_scenario(&mut rng, 2, 0.5);
        let closed = relative_revenue(&reward_rates_n2(&s.hashrate, &s.tie)).unwrap();
        let chain = markov::analyze(&s).unwrap().relative;
        worst2 = worst2.max(closed.max_abs_diff(&chain));
    }
    let elapsed = start.elapsed();
    for _ in 0..100 {
        let s = random_scenario(&mut rng, 4, 0.5);
        let closed = relative_revenue(&reward_rates_n4(&s.hashrate, &s.tie).unwrap()).unwrap();
        let chain = markov::analyze(&s).unwrap().relative;
        worst4 = worst4.max(closed.max_abs_diff(&chain));
    }
    check(
        worst2 <= 1e-9 && worst4 <= 1e-9 && elapsed < Duration::from_secs(5),
        format!(
            "100 scenarios: max |diff| N=2 {worst2:.2e}, N=4 {worst4:.2e} (limit 1e-9); N=2 batch {:.2?} (limit 5s)",
            elapsed
        ),
    )
}

fn oracle_agreement() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut worst_z = 0.0f64;
    let mut failures = Vec::new();
    let mut runs = 0;
    for n_cap in [2u8, 3, 4] {
        for i in 0..20 {
            let s = random_scenario(&mut rng, n_cap, 0.45);
            let exact = markov::analyze(&s).unwrap().relative;
            let r = sim::run(&SimConfig::new(s, 10_000_000, 1000 + i)).unwrap();
            let empirical = r.relative_revenue().unwrap();
            let sigma = r.relative_stderr();
            let diffs = [
                empirical.r_a - exact.r_a,
                empirical.r_b - exact.r_b,
                empirical.r_h - exact.r_h,
            ];
            for k in 0..3 {
                let z = diffs[k].abs() / sigma[k];
                worst_z = worst_z.max(z);
                if z > 3.0 {
                    failures.push(format!("N={n_cap} #{i} miner {k}: z={z:.2}"));
                }
            }
            runs += 1;
        }
    }
    let elapsed = start.elapsed();
    check(
        failures.is_empty() && elapsed < Duration::from_secs(300),
        format!(
            "{runs} runs x 1e7 blocks: max |z| {worst_z:.2} (limit 3), {:.1?} (limit 300s){}",
            elapsed,
            if failures.is_empty() {
                String::new()
            } else {
                format!("; outside 3 sigma: {}", failures.join(", "))
            }
        ),
    )
}

fn symmetric_thresholds() -> Outcome {
    let symmetric = |n_cap| {
        profitable_threshold(&ThresholdQuery::new(
            Search::Symmetric,
            Evaluator::Markov { n_cap },
        ))
        .unwrap()
        .alpha
    };
    let t = [symmetric(2), symmetric(3), symmetric(4)];
    let analytic4 = profitable_threshold(&ThresholdQuery::new(
        Search::Symmetric,
        Evaluator::AnalyticN4,
    ))
    .unwrap()
    .alpha;
    let mut parts = Vec::new();
    let mut pass = true;
    for (i, (&got, want)) in t.iter().zip([0.27, 0.23, 0.22]).enumerate() {
        let ok = (got - want).abs() <= 0.005;
        pass &= ok;
        parts.push(format!(
            "N={} {:.3}% vs {:.0}%±0.5 {}",
            i + 2,
            got * 100.0,
            want * 100.0,
            if ok { "ok" } else { "MISS" }
        ));
    }
    for (label, got) in [("markov", t[2]), ("closed form", analytic4)] {
        let ok = (got - 0.2148).abs() <= 0.003;
        pass &= ok;
        parts.push(format!(
            "N=4 {label} {:.3}% vs 21.48%±0.3 {}",
            got * 100.0,
            if ok { "ok" } else { "MISS" }
        ));
    }
    // Read as the smallest profitable whole percentage, for comparison.
    let whole: Vec<String> = t
        .iter()
        .map(|v| format!("{:.0}", (v * 100.0).ceil()))
        .collect();
    parts.push(format!(
        "smallest profitable whole percent {}",
        whole.join("/")
    ));
    check(pass, parts.join("; "))
}

fn minimum_threshold_curve() -> Outcome {
    let grid: Vec<f64> = (1..=30).map(|i| f64::from(i) / 100.0).collect();
    let q = ThresholdQuery::new(Search::Bob { alpha1: 0.0 }, Evaluator::Markov { n_cap: 4 });
    let curve = threshold_curve(&grid, &q);
    let values: Vec<f64> = curve
        .points
        .iter()
        .map(|p| *p.threshold.as_ref().unwrap())
        .collect();
    let (at, min) = curve.minimum.unwrap();
    let argmin = grid.iter().position(|&g| g == at).unwrap();
    let decreasing = values[..=argmin].windows(2).all(|w| w[1] < w[0]);
    let increasing = values[argmin..].windows(2).all(|w| w[1] > w[0]);
    check(
        (min - 0.2106).abs() <= 0.003 && (at - 0.16).abs() <= 0.01 + 1e-12 && decreasing && increasing,
        format!(
            "minimum {:.3}% at alpha1 = {:.0}% (want 21.06%±0.3 at 16%±1); decreasing before: {decreasing}, increasing after: {increasing}",
            min * 100.0,
            at * 100.0
        ),
    )
}

fn single_attacker_reduction() -> Outcome {
    let tie = TieBreakParams::default();
    let single = convergence_study(false, tie, 2..=8).unwrap();
    let two = convergence_study(true, tie, 2..=8).unwrap();
    let last = single.rows.last().unwrap().1;
    let approaches = single.rows.windows(2).all(|w| w[1].1 < w[0].1);
    let below = two.rows.iter().zip(&single.rows).all(|(t, s)| t.1 < s.1);
    let rows: Vec<String> = single
        .rows
        .iter()
        .zip(&two.rows)
        .map(|(s, t)| format!("N={} {:.2}/{:.2}", s.0, s.1 * 100.0, t.1 * 100.0))
        .collect();
    check(
        (last - 0.25).abs() <= 0.005 && approaches && below,
        format!(
            "single/two-attacker thresholds % [{}]; N=8 single {:.3}% vs 25%±0.5; decreasing: {approaches}; two below single: {below}",
            rows.join(", "),
            last * 100.0
        ),
    )
}

fn transient_delays() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for (alpha, want, slack) in [(0.22, 51u32, 2u32), (0.33, 5, 1)] {
        let start = Instant::now();
        let s = Scenario::attackers(alpha, alpha, 4);
        let d = profitable_delay(
            &s,
            &Evaluator::Markov { n_cap: 4 },
            &GrowthSchedule::Constant,
        )
        .unwrap();
        let elapsed = start.elapsed();
        let ok = d.epochs.abs_diff(want) <= slack && elapsed < Duration::from_secs(1);
        pass &= ok;
        parts.push(format!(
            "alpha={alpha}: {} epochs ({} days) vs {want}±{slack} in {:.1?}",
            d.epochs, d.days, elapsed
        ));
    }
    check(pass, parts.join("; "))
}

fn first_period_loss() -> Outcome {
    let mut count = 0;
    let mut worst = f64::NEG_INFINITY;
    let protocol = ProtocolParams::default();
    for i in 0..10 {
        for j in 0..5 {
            let a1 = 0.03 + 0.03 * f64::from(i);
            let a2 = 0.04 * f64::from(j);
            let s = Scenario::attackers(a1, a2, 4).validate(true).unwrap();
            let rates = steady_round_rates(&s, &Evaluator::Markov { n_cap: 4 }).unwrap();
            let trace = simulate_epochs(rates.n, &protocol, &GrowthSchedule::Constant, 1).unwrap();
            let first = absolute_revenue(&trace, rates.shares.r_a);
            worst = worst.max(first - a1);
            count += 1;
        }
    }
    check(
        count == 50 && worst < 0.0,
        format!("{count} scenarios: max (epoch-1 absolute revenue - alpha1) = {worst:.4e} (must be < 0)"),
    )
}

fn conservation_and_determinism() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut conserved = true;
    let mut runs = 0;
    for n_cap in 2..=8u8 {
        for seed in 0..3 {
            let s = random_scenario(&mut rng, n_cap, 0.45);
            let r = sim::run(&SimConfig::new(s, 200_000, seed)).unwrap();
            conserved &= r.is_conserved() && r.total_mined() == 200_000;
            runs += 1;
        }
    }
    let invoke = |dir: &std::path::Path| {
        let args = [
            "selfmine",
            "simulate",
            "--alpha1",
            "0.3",
            "--alpha2",
            "0.2",
            "--n",
            "5",
            "--blocks",
            "300000",
            "--seed",
            "17",
            "--replications",
            "2",
            "--out",
        ];
        let mut argv: Vec<String> = args.iter().map(|s| s.to_string()).collect();
        argv.push(dir.display().to_string());
        cli::run(&Cli::parse_from(argv), std::io::sink()).unwrap();
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (
                    e.file_name().to_string_lossy().into_owned(),
                    std::fs::read(e.path()).unwrap(),
                )
            })
            .collect();
        files.sort();
        files
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let identical = invoke(a.path()) == invoke(b.path());
    check(
        conserved && identical,
        format!("{runs} runs conserve credited + orphaned = mined: {conserved}; repeated seeded CLI output byte-identical: {identical}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        (
            "closed form matches generated chain",
            closed_form_equivalence,
        ),
        ("simulator matches chain within 3 sigma", oracle_agreement),
        ("symmetric thresholds", symmetric_thresholds),
        ("minimum of Bob's threshold curve", minimum_threshold_curve),
        ("single-attacker reduction", single_attacker_reduction),
        ("transient profitable delays", transient_delays),
        ("first-epoch loss", first_period_loss),
        ("conservation and determinism", conservation_and_determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "[{}] {} {name}: {} ({:.1?})",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            start.elapsed()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
