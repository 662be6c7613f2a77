//! Randomized checks of the operator inequalities and identities the bounds
//! depend on.
//!
//! Every suite draws its trials from ChaCha streams: trial `t` of a run with
//! seed `S` uses its own 64-bit seed derived from `(S, t)`, so a run is
//! reproducible, independent of thread scheduling, and any failing trial can
//! be replayed alone with [`run_trial`].

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{default_s_grid, lemma1_bound};
use crate::channel::{average_error, Codebook, CqChannel, DensityOperator, Povm, Prior};
use crate::error::{Error, Result};
use crate::hermitian::{
    self, mat_power, mat_power_on_support, HermitianMatrix, PowerRoot, PowerSum, SquareMatrix, C64,
};
use crate::info::{e0, mutual_info, trace_functional_weights, TraceFunctional};

/// Tolerance for eigenvalue-order checks.
pub const VIOLATION_TOL: f64 = 1e-9;
/// Relative tolerance for analytic versus finite-difference derivatives.
pub const DERIVATIVE_TOL: f64 = 1e-5;
/// Regularizer added before normalizing a random POVM.
pub const POVM_EPS: f64 = 1e-6;

const DERIVATIVE_STEP: f64 = 1e-5;
const BETA_MIN: f64 = 0.05;

pub const SUITES: [&str; 8] = [
    "lemma1",
    "lemma4",
    "transformer",
    "concavity",
    "monotone",
    "trace-derivative",
    "e0-properties",
    "helstrom",
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleConfig {
    /// Trials per suite; `None` uses each suite's default.
    pub trials: Option<usize>,
    pub seed: u64,
    /// Largest carrier dimension drawn (2 to 8).
    pub max_dim: usize,
    /// Largest number of operators (or input letters) per trial.
    pub max_count: usize,
    /// Multiplier on the Gram matrices of [`random_psd`].
    pub scale: f64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            trials: None,
            seed: 0,
            max_dim: 6,
            max_count: 4,
            scale: 1.0,
        }
    }
}

impl EnsembleConfig {
    fn validate(&self) -> Result<()> {
        if !(2..=8).contains(&self.max_dim) {
            return Err(Error::param(format!("max_dim must be in 2..=8, got {}", self.max_dim)));
        }
        if self.max_count == 0 {
            return Err(Error::param("max_count must be positive"));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::param("scale must be positive"));
        }
        if self.trials == Some(0) {
            return Err(Error::param("trials must be positive"));
        }
        Ok(())
    }
}

/// Outcome of a suite. A trial passes when its margin is at least
/// `-tolerance`; `worst_violation` is the smallest margin seen, before any
/// comparison. Trials that raise an error count as failures with margin
/// `-inf` (serialized as `null`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerdictReport {
    pub suite: String,
    pub trials: usize,
    pub worst_violation: f64,
    pub failing_seeds: Vec<u64>,
    pub tolerance: f64,
    pub passed: bool,
    /// Component checks of a composite suite; their margins are divided by
    /// their own tolerances before entering the parent's `worst_violation`.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<VerdictReport>,
}

/// Per-trial seed for trial `trial` of a run seeded with `seed`.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng.next_u64()
}

fn rng_for(trial_seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed)
}

fn complex_normal(rng: &mut impl Rng) -> C64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// `scale · G G†` for a `dim × rank` complex Gaussian `G`.
pub fn random_psd_with(rng: &mut impl Rng, dim: usize, rank: usize, scale: f64) -> HermitianMatrix {
    let g: Vec<C64> = (0..dim * rank).map(|_| complex_normal(rng)).collect();
    let mut data = vec![C64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            data[i * dim + j] = (0..rank).map(|k| g[i * rank + k] * g[j * rank + k].conj()).sum::<C64>() * scale;
        }
    }
    HermitianMatrix::new(dim, data).expect("Gram matrix is square")
}

/// Full-rank `scale · G G†` from a fixed seed.
pub fn random_psd(dim: usize, seed: u64, scale: f64) -> HermitianMatrix {
    random_psd_with(&mut rng_for(seed), dim, dim, scale)
}

/// Random state of the given rank (Gram matrix normalized to unit trace).
pub fn random_density_with(rng: &mut impl Rng, dim: usize, rank: usize) -> DensityOperator {
    let a = random_psd_with(rng, dim, rank, 1.0);
    let tr = a.trace();
    DensityOperator::new(a.scale(1.0 / tr)).expect("normalized Gram matrix is a state")
}

/// Channel with `letters` random states; ranks are drawn uniformly from
/// `1..=dim` unless `full_rank`.
pub fn random_channel_with(rng: &mut impl Rng, letters: usize, dim: usize, full_rank: bool) -> CqChannel {
    let states = (0..letters)
        .map(|_| {
            let rank = if full_rank { dim } else { rng.gen_range(1..=dim) };
            random_density_with(rng, dim, rank)
        })
        .collect();
    CqChannel::new(states).expect("states share a dimension")
}

/// Strictly interior prior (normalized exponential weights).
pub fn random_prior_with(rng: &mut impl Rng, size: usize) -> Prior {
    let w: Vec<f64> = (0..size).map(|_| -rng.gen_range(1e-3f64..1.0).ln() + 1e-3).collect();
    Prior::from_weights(&w).expect("positive weights")
}

/// `X_k = T^{-1/2} A_k T^{-1/2}` with `T = Σ A_k + εI`, and `X₀ = I − Σ X_k = εT⁻¹`.
pub fn povm_from_operators(ops: &[HermitianMatrix], eps: f64) -> Result<Povm> {
    let first = ops.first().ok_or_else(|| Error::input("no operators"))?;
    let dim = first.dim();
    let mut t = HermitianMatrix::identity(dim).scale(eps);
    for a in ops {
        t = t.add(a)?;
    }
    let c = SquareMatrix::new(dim, mat_power_on_support(&t, -0.5)?.entries().to_vec())?;
    // X_k = (A_k^{1/2} C)† (A_k^{1/2} C) stays PSD at roundoff even when T is
    // nearly singular; X₀ = εT⁻¹ is the exact complement
    let mut elements = vec![mat_power_on_support(&t, -1.0)?.scale(eps)];
    for a in ops {
        let root = SquareMatrix::new(dim, mat_power(a, 0.5)?.entries().to_vec())?;
        let y = root.matmul(&c);
        let x = y.adjoint().matmul(&y);
        elements.push(HermitianMatrix::new(dim, (0..dim * dim).map(|k| x.get(k / dim, k % dim)).collect())?);
    }
    Povm::new(elements)
}

pub fn random_povm_with(rng: &mut impl Rng, dim: usize, m: usize) -> Result<Povm> {
    if m == 0 {
        return Err(Error::param("a POVM needs at least one decision"));
    }
    let ops: Vec<HermitianMatrix> = (0..m)
        .map(|_| {
            let rank = rng.gen_range(1..=dim);
            // unit expected total trace keeps T⁻¹ roundoff well below the tolerance
            random_psd_with(rng, dim, rank, 1.0 / (2 * dim * rank * m) as f64)
        })
        .collect();
    povm_from_operators(&ops, POVM_EPS)
}

pub fn random_povm(dim: usize, m: usize, seed: u64) -> Result<Povm> {
    random_povm_with(&mut rng_for(seed), dim, m)
}

/// Random matrix rescaled to operator norm `u ∈ (0.2, 1]`.
pub fn random_contraction_with(rng: &mut impl Rng, dim: usize) -> Result<SquareMatrix> {
    let c = SquareMatrix::new(dim, (0..dim * dim).map(|_| complex_normal(rng)).collect())?;
    let norm = c.operator_norm()?;
    Ok(c.scale(rng.gen_range(0.2..=1.0) / norm))
}

#[derive(Clone, Debug)]
pub struct Helstrom {
    pub value: f64,
    /// `{0, P₊, I − P₊}` with `P₊` the projector onto the positive part of
    /// `ρ₁ − ρ₂`.
    pub decoder: Povm,
}

/// Minimum average error `½(1 − ½‖ρ₁ − ρ₂‖₁)` for two equiprobable states,
/// with an optimal decoder.
pub fn helstrom_min_error(rho1: &DensityOperator, rho2: &DensityOperator) -> Result<Helstrom> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho1.dim(),
            found: rho2.dim(),
        });
    }
    let diff = rho1.matrix().sub(rho2.matrix())?;
    let eig = diff.eig()?;
    let dist: f64 = eig.eigenvalues().iter().map(|l| l.abs()).sum();
    let positive = eig.map(|l| if l > 0.0 { 1.0 } else { 0.0 });
    let dim = rho1.dim();
    let decoder = Povm::new(vec![
        HermitianMatrix::zeros(dim),
        positive.clone(),
        HermitianMatrix::identity(dim).sub(&positive)?,
    ])?;
    Ok(Helstrom {
        value: 0.5 * (1.0 - 0.5 * dist),
        decoder,
    })
}

fn draw_beta(rng: &mut impl Rng) -> f64 {
    rng.gen_range(BETA_MIN..=1.0)
}

fn draw_dim(rng: &mut impl Rng, cfg: &EnsembleConfig, cap: usize) -> usize {
    rng.gen_range(2..=cfg.max_dim.min(cap))
}

fn min_eig_of_difference(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<f64> {
    hermitian::min_eigenvalue(&a.sub(b)?)
}

fn lemma1_trial(seed: u64, cfg: &EnsembleConfig) -> Result<f64> {
    let mut rng = rng_for(seed);
    let dim = draw_dim(&mut rng, cfg, 3);
    let letters = rng.gen_range(1..=cfg.max_count.min(4));
    let ch = random_channel_with(&mut rng, letters, dim, false);
    let n = rng.gen_range(1..=2);
    let m = rng.gen_range(1..=4);
    let words = (0..m).map(|_| (0..n).map(|_| rng.gen_range(0..letters)).collect()).collect();
    let cb = Codebook::new(n, words)?;
    let beta = [0.2, 0.5, 0.8, 1.0][rng.gen_range(0..4)];
    let povm = random_povm_with(&mut rng, dim.pow(n as u32), m)?;
    let bound = lemma1_bound(&ch, &cb, beta)?.value;
    Ok(average_error(&ch, &cb, &povm)? - bound)
}

fn lemma4_trial(seed: u64, cfg: &EnsembleConfig) -> Result<f64> {
    let mut rng = rng_for(seed);
    let dim = draw_dim(&mut rng, cfg, 8);
    let count = rng.gen_range(1..=cfg.max_count);
    let mats: Vec<HermitianMatrix> = (0..count)
        .map(|_| random_psd_with(&mut rng, dim, dim, cfg.scale / dim as f64))
        .collect();
    let prior = random_prior_with(&mut rng, count);
    let (b1, b2) = (draw_beta(&mut rng), draw_beta(&mut rng));
    let (alpha, beta) = (b1.min(b2), b1.max(b2));
    let side = |p: f64| -> Result<HermitianMatrix> {
        let roots = mats.iter().map(|a| PowerRoot::new(a, 1.0 / p)).collect::<Result<Vec<_>>>()?;
        let refs: Vec<&PowerRoot> = roots.iter().collect();
        Ok(PowerSum::new(prior.probs(), &refs)?.power(p))
    };
    min_eig_of_difference(&side(alpha)?, &side(beta)?)
}

fn transformer_trial(seed: u64, cfg: &EnsembleConfig) -> Result<f64> {
    let mut rng = rng_for(seed);
    let dim = draw_dim(&mut rng, cfg, 8);
    let a = random_psd_with(&mut rng, dim, dim, cfg.scale / dim as f64);
    let c = random_contraction_with(&mut rng, dim)?;
    let gamma = draw_beta(&mut rng);
    let lhs = mat_power(&a.congruence(&c)?, gamma)?;
    let rhs = mat_power(&a, gamma)?.congruence(&c)?;
    min_eig_of_difference(&lhs, &rhs)
}

fn concavity_trial(seed: u64, cfg: &EnsembleConfig) -> Result<f64> {
    let mut rng = rng_for(seed);
    let dim = draw_dim(&mut rng, cfg, 8);
    let a = random_psd_with(&mut rng, dim, dim, cfg.scale / dim as f64);
    let b = random_psd_with(&mut rng, dim, dim, cfg.scale / dim as f64);
    let lambda = rng.gen_range(0.0..1.0);
    let beta = draw_beta(&mut rng);
    let mix = a.scale(lambda).add(&b.scale(1.0 - lambda))?;
    let lhs = mat_power(&mix, beta)?;
    let rhs = mat_power(&a, beta)?
        .scale(lambda)
        .add(&mat_power(&b, beta)?.scale(1.0 - lambda))?;
    min_eig_of_difference(&lhs, &rhs)
}

fn monotone_trial(seed: u64, cfg: &EnsembleConfig) -> Result<f64> {
    let mut rng = rng_for(seed);
    let dim = draw_dim(&mut rng, cfg, 8);
    let a = random_psd_with(&mut rng, dim, dim, cfg.scale / dim as f64);
    let rank = rng.gen_range(1..=dim);
    let b = a.add(&random_psd_with(&mut rng, dim, rank, cfg.scale / dim as f64))?;
    let beta = draw_beta(&mut rng);
    min_eig_of_difference(&mat_power(&b, beta)?, &mat_power(&a, beta)?)
}

/// Softmax path `π(t) ∝ exp(a + b t)` and its derivative.
fn softmax_path(a: &[f64], b: &[f64], t: f64) -> (Vec<f64>, Vec<f64>) {
    let z: Vec<f64> = a.iter().zip(b).map(|(ai, bi)| (ai + bi * t).exp()).collect();
    let sum: f64 = z.iter().sum();
    let p: Vec<f64> = z.iter().map(|v| v / sum).collect();
    let mean: f64 = p.iter().zip(b).map(|(pi, bi)| pi * bi).sum();
    let dp = p.iter().zip(b).map(|(pi, bi)| pi * (bi - mean)).collect();
    (p, dp)
}

fn trace_derivative_trial(seed: u64, cfg: &EnsembleConfig) -> Result<f64> {
    let mut rng = rng_for(seed);
    let dim = draw_dim(&mut rng, cfg, 8);
    // a single letter gives a constant path
    let letters = rng.gen_range(2..=cfg.max_count.max(2));
    let ch = random_channel_with(&mut rng, letters, dim, true);
    let beta = rng.gen_range(0.1..=1.0);
    let a: Vec<f64> = (0..letters).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let b: Vec<f64> = (0..letters).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let t0 = rng.gen_range(-1.0..1.0);

    let (p, dp) = softmax_path(&a, &b, t0);
    let grad = TraceFunctional::new(&ch, beta)?.evaluate(&p)?.gradient;
    let analytic: f64 = grad.iter().zip(&dp).map(|(g, d)| g * d).sum();
    let at = |t: f64| trace_functional_weights(&ch, &softmax_path(&a, &b, t).0, beta);
    let fd = (at(t0 + DERIVATIVE_STEP)? - at(t0 - DERIVATIVE_STEP)?) / (2.0 * DERIVATIVE_STEP);
    Ok(-(analytic - fd).abs() / analytic.abs())
}

const E0_ZERO_TOL: f64 = 1e-12;
const E0_SIGN_TOL: f64 = 1e-12;
const E0_MONOTONE_TOL: f64 = 1e-10;
const E0_SLOPE_TOL: f64 = 1e-3;
const E0_SLOPE_STEP: f64 = 1e-4;
const E0_CHECKS: [(&str, f64); 4] = [
    ("e0-zero", E0_ZERO_TOL),
    ("e0-sign", E0_SIGN_TOL),
    ("e0-monotone", E0_MONOTONE_TOL),
    ("e0-slope", E0_SLOPE_TOL),
];

/// Raw margins of the four E₀ graph properties for one random channel.
fn e0_margins(seed: u64) -> Result<[f64; 4]> {
    let mut rng = rng_for(seed);
    let dim = rng.gen_range(2..=4);
    let letters = rng.gen_range(1..=4);
    let full = rng.gen_bool(0.5);
    let ch = random_channel_with(&mut rng, letters, dim, full);
    let prior = random_prior_with(&mut rng, letters);
    let grid = default_s_grid();
    let values = grid
        .iter()
        .map(|&s| Ok(e0(&ch, &prior, s)?.value))
        .collect::<Result<Vec<_>>>()?;
    let at_zero = *values.last().expect("grid ends at zero");
    let sign = -values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let monotone = values.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    // central difference centred at −h
    let slope = (at_zero - e0(&ch, &prior, -2.0 * E0_SLOPE_STEP)?.value) / (2.0 * E0_SLOPE_STEP);
    let info = mutual_info(&ch, &prior)?;
    Ok([-at_zero.abs(), sign, monotone, -(slope - info).abs()])
}

fn helstrom_trial(seed: u64, cfg: &EnsembleConfig) -> Result<f64> {
    let mut rng = rng_for(seed);
    let dim = draw_dim(&mut rng, cfg, 8);
    let ch = random_channel_with(&mut rng, 2, dim, false);
    let h = helstrom_min_error(ch.state(0)?, ch.state(1)?)?;
    let cb = Codebook::new(1, vec![vec![0], vec![1]])?;
    let consistency = -(average_error(&ch, &cb, &h.decoder)? - h.value).abs();
    let beta = [0.2, 0.5, 0.8, 1.0][rng.gen_range(0..4)];
    let soundness = h.value - lemma1_bound(&ch, &cb, beta)?.value;
    Ok(consistency.min(soundness))
}

fn default_trials(suite: &str) -> usize {
    match suite {
        "lemma1" => 200,
        "trace-derivative" | "helstrom" => 100,
        "e0-properties" => 50,
        _ => 500,
    }
}

fn tolerance(suite: &str) -> f64 {
    match suite {
        "trace-derivative" => DERIVATIVE_TOL,
        "e0-properties" => 1.0,
        _ => VIOLATION_TOL,
    }
}

fn check_suite(name: &str) -> Result<()> {
    if SUITES.contains(&name) {
        Ok(())
    } else {
        Err(Error::param(format!("unknown suite {name:?}; expected one of {}", SUITES.join(", "))))
    }
}

/// Margin of a single trial (pass iff `≥ −tolerance`). For the composite
/// `e0-properties` suite this is the smallest tolerance-normalized margin.
pub fn run_trial(suite: &str, seed: u64, cfg: &EnsembleConfig) -> Result<f64> {
    check_suite(suite)?;
    cfg.validate()?;
    match suite {
        "lemma1" => lemma1_trial(seed, cfg),
        "lemma4" => lemma4_trial(seed, cfg),
        "transformer" => transformer_trial(seed, cfg),
        "concavity" => concavity_trial(seed, cfg),
        "monotone" => monotone_trial(seed, cfg),
        "trace-derivative" => trace_derivative_trial(seed, cfg),
        "helstrom" => helstrom_trial(seed, cfg),
        _ => {
            let m = e0_margins(seed)?;
            Ok(m.iter().zip(E0_CHECKS).map(|(v, (_, tol))| v / tol).fold(f64::INFINITY, f64::min))
        }
    }
}

fn summarize(suite: &str, seeds: &[u64], margins: &[f64], tol: f64, checks: Vec<VerdictReport>) -> VerdictReport {
    let failing_seeds: Vec<u64> = seeds
        .iter()
        .zip(margins)
        .filter(|(_, m)| !(**m >= -tol))
        .map(|(s, _)| *s)
        .collect();
    VerdictReport {
        suite: suite.to_string(),
        trials: seeds.len(),
        worst_violation: margins.iter().cloned().fold(f64::INFINITY, |a, b| if b.is_nan() { f64::NEG_INFINITY } else { a.min(b) }),
        passed: failing_seeds.is_empty(),
        failing_seeds,
        tolerance: tol,
        checks,
    }
}

/// Runs one suite over its trials (in parallel; results are independent of
/// scheduling).
pub fn run_suite(suite: &str, cfg: &EnsembleConfig) -> Result<VerdictReport> {
    check_suite(suite)?;
    cfg.validate()?;
    let trials = cfg.trials.unwrap_or_else(|| default_trials(suite));
    let seeds: Vec<u64> = (0..trials).map(|t| trial_seed(cfg.seed, t)).collect();

    if suite == "e0-properties" {
        let raw: Vec<Option<[f64; 4]>> = seeds.par_iter().map(|&s| e0_margins(s).ok()).collect();
        let checks: Vec<VerdictReport> = E0_CHECKS
            .iter()
            .enumerate()
            .map(|(k, &(name, tol))| {
                let margins: Vec<f64> = raw.iter().map(|r| r.map_or(f64::NEG_INFINITY, |m| m[k])).collect();
                summarize(name, &seeds, &margins, tol, Vec::new())
            })
            .collect();
        let normalized: Vec<f64> = raw
            .iter()
            .map(|r| {
                r.map_or(f64::NEG_INFINITY, |m| {
                    m.iter().zip(E0_CHECKS).map(|(v, (_, tol))| v / tol).fold(f64::INFINITY, f64::min)
                })
            })
            .collect();
        return Ok(summarize(suite, &seeds, &normalized, 1.0, checks));
    }

    let margins: Vec<f64> = seeds
        .par_iter()
        .map(|&s| run_trial(suite, s, cfg).unwrap_or(f64::NEG_INFINITY))
        .collect();
    Ok(summarize(suite, &seeds, &margins, tolerance(suite), Vec::new()))
}

/// Every suite in [`SUITES`] order.
pub fn run_all(cfg: &EnsembleConfig) -> Result<Vec<VerdictReport>> {
    SUITES.iter().map(|s| run_suite(s, cfg)).collect()
}

pub fn check_lemma1(cfg: &EnsembleConfig) -> Result<VerdictReport> {
    run_suite("lemma1", cfg)
}

pub fn check_lemma4(cfg: &EnsembleConfig) -> Result<VerdictReport> {
    run_suite("lemma4", cfg)
}

pub fn check_transformer_inequality(cfg: &EnsembleConfig) -> Result<VerdictReport> {
    run_suite("transformer", cfg)
}

pub fn check_operator_concavity(cfg: &EnsembleConfig) -> Result<VerdictReport> {
    run_suite("concavity", cfg)
}

pub fn check_operator_monotone(cfg: &EnsembleConfig) -> Result<VerdictReport> {
    run_suite("monotone", cfg)
}

pub fn check_trace_derivative(cfg: &EnsembleConfig) -> Result<VerdictReport> {
    run_suite("trace-derivative", cfg)
}

pub fn check_e0_properties(cfg: &EnsembleConfig) -> Result<VerdictReport> {
    run_suite("e0-properties", cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ket(v: &[f64]) -> Vec<C64> {
        v.iter().map(|&x| C64::new(x, 0.0)).collect()
    }

    #[test]
    fn psd_generator() {
        let a = random_psd(4, 7, 1.0);
        assert_eq!(a, random_psd(4, 7, 1.0));
        assert_ne!(a, random_psd(4, 8, 1.0));
        assert!(hermitian::min_eigenvalue(&a).unwrap() >= -1e-12);
        assert!(a.trace() > 0.0);
        assert!((random_psd(4, 7, 3.0).trace() - 3.0 * a.trace()).abs() < 1e-10);
    }

    #[test]
    fn povm_generator() {
        let povm = povm_from_operators(&[HermitianMatrix::identity(3)], POVM_EPS).unwrap();
        let x1 = &povm.elements()[1];
        let x0 = &povm.elements()[0];
        let id = HermitianMatrix::identity(3);
        assert!(x1.sub(&id.scale(1.0 / (1.0 + POVM_EPS))).unwrap().max_abs() < 1e-14);
        assert!(x0.sub(&id.scale(POVM_EPS / (1.0 + POVM_EPS))).unwrap().max_abs() < 1e-14);

        for seed in 0..20 {
            let p = random_povm(3, 4, seed).unwrap();
            assert_eq!(p.decisions(), 4);
            assert!(hermitian::min_eigenvalue(&p.elements()[0]).unwrap() >= -1e-9);
        }
        assert!(random_povm(2, 0, 1).is_err());
    }

    #[test]
    fn helstrom_examples() {
        let zero = DensityOperator::pure(&ket(&[1.0, 0.0])).unwrap();
        let one = DensityOperator::pure(&ket(&[0.0, 1.0])).unwrap();
        let plus = DensityOperator::pure(&ket(&[1.0, 1.0])).unwrap();
        assert!((helstrom_min_error(&zero, &zero).unwrap().value - 0.5).abs() < 1e-15);
        assert!(helstrom_min_error(&zero, &one).unwrap().value.abs() < 1e-15);
        let h = helstrom_min_error(&zero, &plus).unwrap();
        assert!((h.value - 0.5 * (1.0 - 0.5f64.sqrt())).abs() < 1e-12);
        let ch = CqChannel::new(vec![zero, plus]).unwrap();
        let cb = Codebook::new(1, vec![vec![0], vec![1]]).unwrap();
        assert!((average_error(&ch, &cb, &h.decoder).unwrap() - h.value).abs() < 1e-12);
        let qutrit = DensityOperator::maximally_mixed(3);
        assert!(helstrom_min_error(ch.state(0).unwrap(), &qutrit).is_err());
    }

    #[test]
    fn trial_seeds_are_distinct_and_stable() {
        let a: Vec<u64> = (0..100).map(|t| trial_seed(5, t)).collect();
        let mut b = a.clone();
        b.sort();
        b.dedup();
        assert_eq!(b.len(), 100);
        assert_eq!(trial_seed(5, 3), a[3]);
        assert_ne!(trial_seed(6, 3), a[3]);
    }

    #[test]
    fn degenerate_inequality_cases() {
        // α = β and a single matrix both give a zero difference
        let a = random_psd(3, 1, 0.3);
        let root = PowerRoot::new(&a, 1.0 / 0.4).unwrap();
        let s = PowerSum::new(&[1.0], &[&root]).unwrap().power(0.4);
        assert!(s.sub(&a).unwrap().max_abs() < 1e-12);
        // C = I in the transformer inequality
        let id = SquareMatrix::identity(3);
        let lhs = mat_power(&a.congruence(&id).unwrap(), 0.3).unwrap();
        let rhs = mat_power(&a, 0.3).unwrap().congruence(&id).unwrap();
        assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn suites_pass_briefly() {
        let cfg = EnsembleConfig {
            trials: Some(20),
            seed: 11,
            ..Default::default()
        };
        for suite in SUITES {
            let r = run_suite(suite, &cfg).unwrap();
            assert!(r.passed, "{suite}: {r:?}");
            assert_eq!(r.trials, 20);
        }
        assert_eq!(run_suite("lemma4", &cfg).unwrap(), run_suite("lemma4", &cfg).unwrap());
        assert!(run_suite("nope", &cfg).is_err());
    }

    #[test]
    fn composite_report_lists_components() {
        let cfg = EnsembleConfig {
            trials: Some(3),
            ..Default::default()
        };
        let r = check_e0_properties(&cfg).unwrap();
        assert_eq!(r.checks.len(), 4);
        assert!(r.checks.iter().all(|c| c.passed && c.trials == 3));
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"e0-slope\""));
        let flat = serde_json::to_string(&check_lemma4(&cfg).unwrap()).unwrap();
        assert!(!flat.contains("checks"));
    }
}
