//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line with
//! its measured figures and runtime; the process exits non-zero if any fails.

use std::time::{Duration, Instant};

use cqconverse::bounds::{default_s_grid, lemma1_bound, ConverseEngine};
use cqconverse::channel::{codeword_state, Codebook, CqChannel, DensityOperator, Prior};
use cqconverse::info::{e0, trace_functional_grad, trace_functional_weights};
use cqconverse::optimizer::{
    capacity, kkt_check, maximize_trace_functional, multiletter_max_bruteforce, OptimizerConfig,
};
use cqconverse::verify::{
    helstrom_min_error, random_channel_with, random_prior_with, run_suite, EnsembleConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_601;

struct Outcome {
    passed: bool,
    detail: String,
}

fn binary_entropy(p: f64) -> f64 {
    -(p * p.ln() + (1.0 - p) * (1.0 - p).ln())
}

/// Scalar Gallager function of a classical channel `w[x][y]` at `s ∈ (−1, 0]`.
fn gallager_e0(w: &[Vec<f64>], prior: &[f64], s: f64) -> f64 {
    let beta = 1.0 + s;
    let outputs = w[0].len();
    let total: f64 = (0..outputs)
        .map(|y| {
            let inner: f64 = w.iter().zip(prior).map(|(row, p)| p * row[y].powf(1.0 / beta)).sum();
            inner.powf(beta)
        })
        .sum();
    -total.ln()
}

fn random_stochastic_row(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    raw.iter().map(|x| x / sum).collect()
}

fn classical_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let a = rng.gen_range(1..=4);
        let d = rng.gen_range(1..=4);
        let w: Vec<Vec<f64>> = (0..a).map(|_| random_stochastic_row(&mut rng, d)).collect();
        let states = w.iter().map(|row| DensityOperator::diagonal(row).unwrap()).collect();
        let ch = CqChannel::new(states).unwrap();
        let prior = Prior::from_weights(&random_stochastic_row(&mut rng, a)).unwrap();
        for k in 1..=9 {
            let s = -(k as f64) / 10.0;
            let q = e0(&ch, &prior, s).unwrap().value;
            worst = worst.max((q - gallager_e0(&w, prior.probs(), s)).abs());
        }
    }
    let bsc = CqChannel::new(vec![
        DensityOperator::diagonal(&[0.9, 0.1]).unwrap(),
        DensityOperator::diagonal(&[0.1, 0.9]).unwrap(),
    ])
    .unwrap();
    let cap = capacity(&bsc, &OptimizerConfig::default()).unwrap();
    let expect = 2f64.ln() - binary_entropy(0.1);
    let cap_err = (cap.value - expect).abs();
    Outcome {
        passed: worst <= 1e-9 && cap_err <= 1e-5 && cap.converged,
        detail: format!(
            "max |E0 - Gallager| = {worst:.2e} over 20 channels x 9 s; BSC(0.1) capacity {:.9} vs {expect:.9} (err {cap_err:.2e})",
            cap.value
        ),
    }
}

fn lemma1_soundness() -> Outcome {
    let cfg = EnsembleConfig {
        trials: Some(200),
        seed: SEED,
        ..Default::default()
    };
    let r = run_suite("lemma1", &cfg).unwrap();
    Outcome {
        passed: r.trials == 200 && r.worst_violation >= -1e-9,
        detail: format!(
            "{} trials (dim <= 3, n <= 2, M <= 4, random POVM), min(Pe - bound) = {:.3e}, failing seeds {:?}",
            r.trials, r.worst_violation, r.failing_seeds
        ),
    }
}

fn helstrom_cross_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let grid = default_s_grid();
    let mut worst_lemma: f64 = f64::INFINITY;
    let mut worst_theorem: f64 = f64::INFINITY;
    let mut worst_decoder: f64 = 0.0;
    for _ in 0..100 {
        let dim = rng.gen_range(2..=3);
        let letters = rng.gen_range(2..=3);
        let ch = random_channel_with(&mut rng, letters, dim, false);
        let n = rng.gen_range(1..=2);
        let words: Vec<Vec<usize>> = (0..2).map(|_| (0..n).map(|_| rng.gen_range(0..letters)).collect()).collect();
        let cb = Codebook::new(n, words.clone()).unwrap();
        let r1 = codeword_state(&ch, &words[0]).unwrap();
        let r2 = codeword_state(&ch, &words[1]).unwrap();
        let h = helstrom_min_error(&r1, &r2).unwrap();
        let pair = CqChannel::new(vec![r1, r2]).unwrap();
        let two = Codebook::new(1, vec![vec![0], vec![1]]).unwrap();
        let decoded = cqconverse::channel::average_error(&pair, &two, &h.decoder).unwrap();
        worst_decoder = worst_decoder.max((decoded - h.value).abs());
        for beta in [0.2, 0.5, 0.8, 1.0] {
            worst_lemma = worst_lemma.min(h.value - lemma1_bound(&ch, &cb, beta).unwrap().value);
        }
        let engine = ConverseEngine::new(ch, OptimizerConfig::default()).unwrap();
        let rate = 2f64.ln() / n as f64;
        for &s in &grid {
            let b = engine.theorem1_bound(n, rate, s).unwrap().value;
            worst_theorem = worst_theorem.min(h.value - b);
        }
    }
    Outcome {
        passed: worst_lemma >= -1e-9 && worst_theorem >= -1e-9 && worst_decoder <= 1e-10,
        detail: format!(
            "100 M=2 instances: min(Helstrom - lemma bound) = {worst_lemma:.3e}, min(Helstrom - exponent bound) = {worst_theorem:.3e}, decoder/formula gap {worst_decoder:.1e}"
        ),
    }
}

fn e0_graph() -> Outcome {
    let cfg = EnsembleConfig {
        trials: Some(50),
        seed: SEED,
        ..Default::default()
    };
    let r = run_suite("e0-properties", &cfg).unwrap();
    let figures: Vec<String> = r
        .checks
        .iter()
        .map(|c| format!("{} {:.2e} (tol {:.0e})", c.suite, c.worst_violation, c.tolerance))
        .collect();
    Outcome {
        passed: r.trials == 50 && r.checks.len() == 4 && r.checks.iter().all(|c| c.worst_violation >= -c.tolerance),
        detail: format!("50 channels, worst margins: {}", figures.join(", ")),
    }
}

fn single_letterization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    let cfg = OptimizerConfig::default();
    let mut worst_gap: f64 = 0.0;
    let mut worst_kkt: f64 = 0.0;
    let mut all_converged = true;
    for _ in 0..10 {
        let ch = random_channel_with(&mut rng, 2, 2, false);
        for beta in [0.3, 0.5, 0.8] {
            let single = maximize_trace_functional(&ch, beta, &cfg).unwrap();
            all_converged &= single.converged;
            let report = kkt_check(&ch, &single.pi_star, beta).unwrap();
            worst_kkt = worst_kkt.max(report.residual);
            let joint = multiletter_max_bruteforce(&ch, beta, 2, 40).unwrap();
            worst_gap = worst_gap.max((joint - single.value * single.value).abs());
        }
    }
    Outcome {
        passed: worst_gap <= 1e-3 && worst_kkt <= 1e-6 && all_converged,
        detail: format!(
            "10 channels x 3 beta: max |joint n=2 max - (single max)^2| = {worst_gap:.2e}, max optimality residual {worst_kkt:.2e}"
        ),
    }
}

fn operator_suites() -> Outcome {
    let cfg = EnsembleConfig {
        trials: Some(500),
        seed: SEED,
        max_dim: 6,
        ..Default::default()
    };
    let mut figures = Vec::new();
    let mut passed = true;
    for suite in ["lemma4", "transformer", "concavity", "monotone"] {
        let r = run_suite(suite, &cfg).unwrap();
        passed &= r.trials == 500 && r.worst_violation >= -1e-9;
        figures.push(format!("{suite} {:.2e}", r.worst_violation));
    }
    Outcome {
        passed,
        detail: format!("500 trials each, dim <= 6, worst min-eigenvalue margins: {}", figures.join(", ")),
    }
}

fn trace_derivative() -> Outcome {
    let cfg = EnsembleConfig {
        trials: Some(100),
        seed: SEED,
        ..Default::default()
    };
    let r = run_suite("trace-derivative", &cfg).unwrap();
    Outcome {
        passed: r.trials == 100 && r.worst_violation >= -1e-5,
        detail: format!("100 random simplex paths, max relative error {:.2e}", -r.worst_violation),
    }
}

fn strong_converse_positivity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 8);
    let zero_plus = CqChannel::new(vec![
        DensityOperator::diagonal(&[1.0, 0.0]).unwrap(),
        DensityOperator::new(
            cqconverse::hermitian::HermitianMatrix::from_fn(2, |_, _| cqconverse::hermitian::C64::new(0.5, 0.0)).unwrap(),
        )
        .unwrap(),
    ])
    .unwrap();
    let mut channels = vec![zero_plus];
    for _ in 0..4 {
        let letters = rng.gen_range(2..=3);
        let dim = rng.gen_range(2..=3);
        channels.push(random_channel_with(&mut rng, letters, dim, false));
    }
    let cfg = OptimizerConfig::default();
    let grid = default_s_grid();
    let mut passed = true;
    let mut figures = Vec::new();
    for ch in channels {
        let cap = capacity(&ch, &cfg).unwrap();
        passed &= cap.converged;
        let rate = 1.2 * cap.value;
        let engine = ConverseEngine::new(ch, cfg.clone()).unwrap();
        let e = engine.sc_exponent(rate, &grid).unwrap();
        passed &= e.exponent > 1e-4;
        let n0 = (10.0 * 100f64.ln() / e.exponent).ceil() as usize;
        for n in [n0, 2 * n0, 10 * n0] {
            passed &= engine.theorem1_bound(n, rate, e.s_star).unwrap().value > 0.99;
        }
        let along: Vec<f64> = (1..=50)
            .map(|n| engine.theorem1_bound(n, rate, e.s_star).unwrap().value)
            .collect();
        passed &= along.windows(2).all(|w| w[1] >= w[0]);
        figures.push(format!("C={:.4} E={:.3e} s*={:.3} n0={n0}", cap.value, e.exponent, e.s_star));
    }
    Outcome {
        passed,
        detail: format!("R = 1.2 C: {}", figures.join("; ")),
    }
}

fn gradient_certification() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 9);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let letters = rng.gen_range(2..=4);
        let dim = rng.gen_range(2..=4);
        let ch = random_channel_with(&mut rng, letters, dim, false);
        let prior = random_prior_with(&mut rng, letters);
        let beta = rng.gen_range(0.1..=1.0);
        let grad = trace_functional_grad(&ch, &prior, beta).unwrap();
        for i in 0..letters {
            let mut up = prior.probs().to_vec();
            let mut down = up.clone();
            up[i] += h;
            down[i] -= h;
            let fd = (trace_functional_weights(&ch, &up, beta).unwrap()
                - trace_functional_weights(&ch, &down, beta).unwrap())
                / (2.0 * h);
            worst = worst.max((grad[i] - fd).abs() / grad[i].abs());
        }
    }
    Outcome {
        passed: worst <= 1e-5,
        detail: format!("50 interior priors, max relative error {worst:.2e}"),
    }
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 9] = [
        ("classical reduction", classical_reduction, Duration::from_secs(10)),
        ("per-codebook bound soundness", lemma1_soundness, Duration::from_secs(30)),
        ("Helstrom cross-check", helstrom_cross_check, Duration::from_secs(20)),
        ("E0 graph properties", e0_graph, Duration::from_secs(60)),
        ("single-letterization", single_letterization, Duration::from_secs(120)),
        ("operator-inequality suites", operator_suites, Duration::from_secs(60)),
        ("trace derivative", trace_derivative, Duration::from_secs(10)),
        ("strong-converse positivity", strong_converse_positivity, Duration::from_secs(60)),
        ("gradient certification", gradient_certification, Duration::from_secs(10)),
    ];
    let mut failures = 0;
    for (k, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *limit;
        let passed = outcome.passed && in_time;
        if !passed {
            failures += 1;
        }
        println!(
            "[{}] {}. {name}: {} ({:.2} s, limit {} s{})",
            if passed { "PASS" } else { "FAIL" },
            k + 1,
            outcome.detail,
            elapsed.as_secs_f64(),
            limit.as_secs(),
            if in_time { "" } else { ", over time" }
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
