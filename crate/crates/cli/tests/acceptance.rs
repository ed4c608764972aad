//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fail.

use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use nodiscard::adversary::{expected_disturbance, EveFamily, EveStrategy};
use nodiscard::bell::{classical_min, optimize_state, zg_score, DEFAULT_EIGEN_TOL};
use nodiscard::capacity::{eq9_capacity, practical_capacity_mi, standard_qkd_capacity};
use nodiscard::hilbert::{closed_form_transition_weight, transition_prob, SchmidtState};
use nodiscard::protocol::{run_naive_bb84, run_practical, run_zg_entangled, ProtocolId, SimParams};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, ok: String, fail: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(fail)
    }
}

fn within(observed: f64, p: f64, n: usize, sigmas: f64) -> bool {
    (observed - p).abs() <= sigmas * (p * (1.0 - p) / n as f64).sqrt()
}

/// Born probability for Alice basis 1 outcome 0 against Bob basis 1 outcome
/// j, summed directly over the phases.
fn oracle_row(d: usize) -> Vec<f64> {
    (0..d)
        .map(|j| {
            let theta = 2.0 * PI * (j as f64 - 0.25) / d as f64;
            let (mut re, mut im) = (0.0, 0.0);
            for k in 0..d {
                re += (theta * k as f64).cos();
                im += (theta * k as f64).sin();
            }
            (re * re + im * im) / (d * d) as f64
        })
        .collect()
}

/// Mutual information from the closed form sin^2(pi x)/(d^2 sin^2(pi x / d)).
fn oracle_mi(d: usize) -> f64 {
    let df = d as f64;
    let h: f64 = (0..d)
        .map(|j| {
            let x = j as f64 - 0.25;
            let p = (PI * x).sin().powi(2) / (df * df * (PI * x / df).sin().powi(2));
            if p > 0.0 {
                -p * p.log2()
            } else {
                0.0
            }
        })
        .sum();
    df.log2() - h
}

fn c1_classical_bound() -> Outcome {
    let start = Instant::now();
    let values: Vec<u32> = (2..=6).map(|d| classical_min(d).unwrap()).collect();
    let elapsed = start.elapsed();
    check(
        values.iter().all(|&v| v == 1) && elapsed < Duration::from_secs(1),
        format!("classical_min = 1 for d=2..6 in {elapsed:.2?}"),
        format!("values {values:?}, elapsed {elapsed:.2?}"),
    )
}

fn c2_quantum_violation() -> Outcome {
    let start = Instant::now();
    let values: Vec<f64> = (2..=20)
        .map(|d| optimize_state(d, DEFAULT_EIGEN_TOL).unwrap().value)
        .collect();
    let elapsed = start.elapsed();
    let below = values.iter().all(|&v| v < 1.0);
    let monotone = values.windows(2).all(|w| w[1] <= w[0] + 1e-9);
    check(
        below && monotone && elapsed < Duration::from_secs(10),
        format!(
            "A_d* from {:.6} (d=2) to {:.6} (d=20), non-increasing, {elapsed:.2?}",
            values[0], values[18]
        ),
        format!("below={below} monotone={monotone} elapsed={elapsed:.2?} {values:?}"),
    )
}

fn c3_non_maximal() -> Outcome {
    let gaps: Vec<(usize, f64)> = (3..=10)
        .map(|d| {
            let uniform = zg_score(&SchmidtState::uniform(d).unwrap()).total;
            (
                d,
                uniform - optimize_state(d, DEFAULT_EIGEN_TOL).unwrap().value,
            )
        })
        .collect();
    let best = gaps
        .iter()
        .cloned()
        .fold((0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
    check(
        best.1 > 1e-6,
        format!(
            "largest uniform-minus-optimal gap {:.6} at d={}",
            best.1, best.0
        ),
        format!("gaps {gaps:?}"),
    )
}

fn c4_capacity_crossover() -> Outcome {
    let ratio = |d| practical_capacity_mi(d).unwrap() / standard_qkd_capacity(d);
    let crossover = (2..=256).all(|d| (ratio(d) > 1.0) == (d > 3));
    let spots: Vec<f64> = [2, 3, 4].iter().map(|&d| ratio(d)).collect();
    let oracle: Vec<f64> = [2, 3, 4]
        .iter()
        .map(|&d| oracle_mi(d) / (0.5 * (d as f64).log2()))
        .collect();
    let expected = [0.798, 0.967, 1.069];
    let spots_ok = spots
        .iter()
        .zip(&oracle)
        .zip(&expected)
        .all(|((s, o), e)| (s - o).abs() < 1e-3 && (s - e).abs() < 1e-3);
    check(
        crossover && spots_ok && spots[1] < 1.0 && spots[2] > 1.0,
        format!(
            "ratios {:.4}/{:.4}/{:.4} at d=2/3/4, crossover exactly at d>3",
            spots[0], spots[1], spots[2]
        ),
        format!("crossover={crossover} ratios={spots:?} oracle={oracle:?}"),
    )
}

fn c5_reconciliation() -> Outcome {
    let mut worst_weight = 0.0f64;
    for d in 2..=32 {
        for a in 1..=2 {
            for b in 1..=2 {
                for i in 0..d {
                    for j in 0..d {
                        let w = closed_form_transition_weight(d, a, b, i, j).unwrap();
                        let p = transition_prob(d, a, b, i, j).unwrap();
                        worst_weight = worst_weight.max((w - d as f64 * p).abs());
                    }
                }
            }
        }
    }
    let worst_eq9 = (2..=64)
        .map(|d| (eq9_capacity(d).unwrap() - (practical_capacity_mi(d).unwrap() - 2.0)).abs())
        .fold(0.0, f64::max);
    check(
        worst_weight < 1e-9 && worst_eq9 < 1e-9,
        format!("max deviations {worst_weight:.1e} (weight) and {worst_eq9:.1e} (capacity)"),
        format!("weight deviation {worst_weight:e}, capacity deviation {worst_eq9:e}"),
    )
}

fn c6_naive_rates() -> Outcome {
    let n = 100_000;
    let s = run_naive_bb84(&SimParams::new(n, 0)).unwrap().summary;
    let matched = s.outcome_match_rate.unwrap();
    let ok = within(matched, 0.75, n, 3.0)
        && within(s.sift_yield, 0.25, n, 3.0)
        && s.sift.key_disagreements == 0;
    check(
        ok,
        format!(
            "match {matched:.4}, yield {:.4}, disagreements 0",
            s.sift_yield
        ),
        format!(
            "match {matched}, yield {}, disagreements {}",
            s.sift_yield, s.sift.key_disagreements
        ),
    )
}

fn c7_practical_decode() -> Outcome {
    let d = 4;
    let exact = oracle_row(d).into_iter().fold(0.0, f64::max);
    let s = run_practical(d, 0.5, false, &SimParams::new(100_000, 0))
        .unwrap()
        .summary;
    let success = s.key_agreement_rate.unwrap();
    let ok = within(success, exact, s.sift.key_length, 3.0)
        && s.security_error_rate == Some(0.0)
        && (exact - 0.8212).abs() < 1e-3;
    check(
        ok,
        format!("key success {success:.4} vs exact {exact:.6}, security error 0"),
        format!(
            "key success {success} vs {exact} (n={}), security error {:?}",
            s.sift.key_length, s.security_error_rate
        ),
    )
}

fn c8_disturbance() -> Outcome {
    let n = 100_000;
    let eve = EveStrategy::intercept_resend(EveFamily::MixedUniform);
    let mut lines = Vec::new();
    let mut ok = true;
    for d in [2, 4, 8] {
        let state = optimize_state(d, DEFAULT_EIGEN_TOL).unwrap().state;
        let baseline = zg_score(&state).total;
        let zg_exact = expected_disturbance(d, &eve, ProtocolId::Zg, Some(&state)).unwrap();
        let pm_exact = expected_disturbance(d, &eve, ProtocolId::Practical, None).unwrap();

        let zg = run_zg_entangled(&state, 0.2, &SimParams::new(n, 0).with_eve(eve))
            .unwrap()
            .summary;
        let pm = run_practical(d, 0.5, false, &SimParams::new(n, 0).with_eve(eve))
            .unwrap()
            .summary;

        let a_d = zg_exact.a_d.unwrap();
        let a_est = zg.estimated_a_d.unwrap();
        let err = pm_exact.security_error_rate.unwrap();
        let err_est = pm.security_error_rate.unwrap();
        let this = a_d > baseline
            && err > 0.0
            && (a_est - a_d).abs() <= 4.0 * zg.a_d_std_error.unwrap()
            && within(err_est, err, pm.security_checked, 4.0);
        ok &= this;
        lines.push(format!(
            "d={d}: A_d {baseline:.4}->{a_d:.4} (sampled {a_est:.4}), error 0->{err:.4} (sampled {err_est:.4})"
        ));
    }
    let text = lines.join("; ");
    check(ok, text.clone(), text)
}

fn run_binary(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_nodiscard"))
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn c9_reproducibility() -> Outcome {
    let invocations: [&[&str]; 5] = [
        &["capacity-scan", "--d-max", "32"],
        &["bell-scan", "--d-max", "10", "--format", "json"],
        &[
            "simulate",
            "--protocol",
            "zg",
            "--d",
            "4",
            "--rounds",
            "2000",
            "--seed",
            "7",
            "--eve",
            "intercept-resend",
        ],
        &[
            "simulate",
            "--protocol",
            "practical",
            "--rounds",
            "2000",
            "--seed",
            "7",
            "--format",
            "csv",
        ],
        &["optimal-state", "--d", "6"],
    ];
    let mut differing = Vec::new();
    for args in invocations {
        let first = run_binary(args);
        let second = run_binary(args);
        if first != second || first.is_empty() {
            differing.push(args.join(" "));
        }
    }
    check(
        differing.is_empty(),
        format!(
            "{} invocations byte-identical across runs",
            invocations.len()
        ),
        format!("outputs differ for {differing:?}"),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("classical bound", c1_classical_bound),
        ("quantum violation and trend", c2_quantum_violation),
        ("non-maximal entanglement", c3_non_maximal),
        ("capacity crossover", c4_capacity_crossover),
        ("formula reconciliation", c5_reconciliation),
        ("naive protocol rates", c6_naive_rates),
        ("practical decode rate", c7_practical_decode),
        ("eavesdropping disturbance", c8_disturbance),
        ("reproducibility", c9_reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(msg) => println!("PASS {} {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {} {name}: {msg}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
