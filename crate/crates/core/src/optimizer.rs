//! Maximization over input priors.
//!
//! Both objectives handled here, the trace functional
//! `f(π) = Tr(Σᵢ πᵢ ρᵢ^{1/β})^β` and the mutual information `I(π)`, are concave
//! on the simplex, so a first-order stationary point is a global maximum. The
//! optimizer is projected gradient ascent with Armijo backtracking; its output
//! is certified by the stationarity conditions
//!
//! ```text
//! Tr S^{β−1} ρᵢ^{1/β} ≤ Tr S^β,   with equality where πᵢ > 0,
//! ```
//!
//! (and the analogous conditions on `∂I/∂πᵢ` for capacity).

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{codeword_state, CqChannel, Prior};
use crate::error::{Error, Result};
use crate::hermitian::{mat_power, HermitianMatrix};
use crate::info::{check_beta, check_s, HolevoObjective, TraceFunctional};

/// Letters with weight above this must meet the stationarity condition with
/// equality.
pub const SUPPORT_EPS: f64 = 1e-9;

const ARMIJO_SLOPE: f64 = 1e-4;
const BACKTRACK: f64 = 0.5;
const MAX_STEP: f64 = 1e6;
const MIN_STEP: f64 = 1e-20;
const POLISH_FINEST: usize = 2000;
const MAX_GRID_POINTS: u128 = 20_000_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    /// Stop once an accepted step changes the objective by at most this much
    /// (and the stationarity residual is within `kkt_tol`).
    pub tol: f64,
    pub kkt_tol: f64,
    /// Grid oracle resolution: steps of `1/grid_res` per simplex coordinate.
    pub grid_res: usize,
    /// Keep every accepted iterate in [`OptimizerResult::path`].
    pub record_path: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            tol: 1e-10,
            kkt_tol: 1e-6,
            grid_res: 200,
            record_path: false,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::param("max_iters must be positive"));
        }
        if !(self.tol.is_finite() && self.tol >= 0.0) || !(self.kkt_tol.is_finite() && self.kkt_tol >= 0.0) {
            return Err(Error::param("tolerances must be finite and nonnegative"));
        }
        if self.grid_res == 0 {
            return Err(Error::param("grid resolution must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimizerResult {
    pub pi_star: Prior,
    pub value: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub converged: bool,
    /// Objective value at the start and after every accepted step.
    #[serde(skip)]
    pub history: Vec<f64>,
    /// Accepted iterates, when requested by the config.
    #[serde(skip)]
    pub path: Vec<Vec<f64>>,
}

/// Per-letter slacks `Tr S^{β−1} ρᵢ^{1/β} − Tr S^β` and their residual.
#[derive(Clone, Debug, Serialize)]
pub struct KktReport {
    pub residual: f64,
    pub slacks: Vec<f64>,
    /// `Tr S^β`, the value of the trace functional.
    pub value: f64,
}

/// Euclidean projection onto the probability simplex.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (k as f64 + 1.0);
        if u - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// `max( maxᵢ slackᵢ, max_{πᵢ > SUPPORT_EPS} |slackᵢ| )`.
fn stationarity_residual(weights: &[f64], slacks: &[f64]) -> f64 {
    weights
        .iter()
        .zip(slacks)
        .map(|(&w, &s)| if w > SUPPORT_EPS { s.abs() } else { s.max(0.0) })
        .fold(0.0, f64::max)
}

/// Checks the optimality conditions of the trace functional at `prior`.
pub fn kkt_check(ch: &CqChannel, prior: &Prior, beta: f64) -> Result<KktReport> {
    ch.check_prior(prior)?;
    let tf = TraceFunctional::new(ch, beta)?;
    kkt_report(&tf, prior.probs())
}

fn kkt_report(tf: &TraceFunctional, weights: &[f64]) -> Result<KktReport> {
    let eval = tf.evaluate(weights)?;
    let slacks: Vec<f64> = eval.pairings.iter().map(|p| p - eval.value).collect();
    Ok(KktReport {
        residual: stationarity_residual(weights, &slacks),
        slacks,
        value: eval.value,
    })
}

struct Eval {
    value: f64,
    gradient: Vec<f64>,
    residual: f64,
}

fn ascend(size: usize, cfg: &OptimizerConfig, eval: impl Fn(&[f64]) -> Result<Eval>) -> Result<OptimizerResult> {
    cfg.validate()?;
    let mut x = vec![1.0 / size as f64; size];
    let mut cur = eval(&x)?;
    let mut history = vec![cur.value];
    let mut path = Vec::new();
    if cfg.record_path {
        path.push(x.clone());
    }
    let mut step: f64 = 1.0;
    let mut last_change = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iters {
        if cur.residual == 0.0 || (cur.residual <= cfg.kkt_tol && last_change <= cfg.tol) {
            converged = true;
            break;
        }
        iterations += 1;
        let mut t = (step * 2.0).min(MAX_STEP);
        let accepted = loop {
            let trial: Vec<f64> = x.iter().zip(&cur.gradient).map(|(xi, gi)| xi + t * gi).collect();
            let y = project_to_simplex(&trial);
            let slope: f64 = y.iter().zip(&x).zip(&cur.gradient).map(|((yi, xi), gi)| gi * (yi - xi)).sum();
            let moved = y.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if moved <= 1e-16 || slope <= 0.0 {
                break None;
            }
            let next = eval(&y)?;
            if next.value >= cur.value + ARMIJO_SLOPE * slope {
                break Some((y, next, t));
            }
            t *= BACKTRACK;
            if t < MIN_STEP {
                break None;
            }
        };
        match accepted {
            Some((y, next, t)) => {
                last_change = next.value - cur.value;
                x = y;
                cur = next;
                step = t;
                history.push(cur.value);
                if cfg.record_path {
                    path.push(x.clone());
                }
            }
            None => {
                // no ascent direction left at working precision
                converged = cur.residual <= cfg.kkt_tol;
                break;
            }
        }
    }
    if !converged && iterations >= cfg.max_iters {
        converged = cur.residual <= cfg.kkt_tol && last_change <= cfg.tol;
    }
    Ok(OptimizerResult {
        pi_star: Prior::from_weights(&x)?,
        value: cur.value,
        iterations,
        kkt_residual: cur.residual,
        converged,
        history,
        path,
    })
}

/// `max_π Tr(Σᵢ πᵢ ρᵢ^{1/β})^β` over the simplex.
pub fn maximize_trace_functional(ch: &CqChannel, beta: f64, cfg: &OptimizerConfig) -> Result<OptimizerResult> {
    let tf = TraceFunctional::new(ch, beta)?;
    let mut result = ascend(ch.alphabet_size(), cfg, |w| {
        let eval = tf.evaluate(w)?;
        let slacks: Vec<f64> = eval.pairings.iter().map(|p| p - eval.value).collect();
        Ok(Eval {
            value: eval.value,
            residual: stationarity_residual(w, &slacks),
            gradient: eval.gradient,
        })
    })?;
    // report the certificate on the returned (renormalized) prior
    let report = kkt_report(&tf, result.pi_star.probs())?;
    result.kkt_residual = report.residual;
    result.value = report.value;
    Ok(result)
}

/// `min_π E₀(s, π) = −log max_π f(π)` with `β = 1 + s`.
#[derive(Clone, Debug, Serialize)]
pub struct E0Optimum {
    pub s: f64,
    pub value: f64,
    pub inner: OptimizerResult,
}

pub fn min_e0_over_prior(ch: &CqChannel, s: f64, cfg: &OptimizerConfig) -> Result<E0Optimum> {
    check_s(s)?;
    let inner = maximize_trace_functional(ch, 1.0 + s, cfg)?;
    Ok(E0Optimum {
        s,
        value: -inner.value.ln(),
        inner,
    })
}

/// `C = max_π I(π)`.
pub fn capacity(ch: &CqChannel, cfg: &OptimizerConfig) -> Result<OptimizerResult> {
    let obj = HolevoObjective::new(ch)?;
    let eval = |w: &[f64]| -> Result<Eval> {
        let (value, gradient) = obj.value_and_gradient(w)?;
        let mean: f64 = w.iter().zip(&gradient).map(|(a, b)| a * b).sum();
        let slacks: Vec<f64> = gradient.iter().map(|g| g - mean).collect();
        Ok(Eval {
            value,
            residual: stationarity_residual(w, &slacks),
            gradient,
        })
    };
    let mut result = ascend(ch.alphabet_size(), cfg, eval)?;
    let final_eval = eval(result.pi_star.probs())?;
    result.value = final_eval.value;
    result.kkt_residual = final_eval.residual;
    Ok(result)
}

/// Capacity-mode stationarity residual at an arbitrary prior.
pub fn capacity_residual(ch: &CqChannel, prior: &Prior) -> Result<f64> {
    ch.check_prior(prior)?;
    let (_, gradient) = HolevoObjective::new(ch)?.value_and_gradient(prior.probs())?;
    let mean: f64 = prior.probs().iter().zip(&gradient).map(|(a, b)| a * b).sum();
    let slacks: Vec<f64> = gradient.iter().map(|g| g - mean).collect();
    Ok(stationarity_residual(prior.probs(), &slacks))
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Advances `c` to the next composition of `c.iter().sum()` (lexicographically
/// decreasing in the first coordinate, then recursively). Returns false when
/// exhausted.
fn next_composition(c: &mut [usize]) -> bool {
    let k = c.len();
    if k < 2 {
        return false;
    }
    // find rightmost position (excluding last) with a positive entry
    let Some(i) = (0..k - 1).rev().find(|&i| c[i] > 0) else {
        return false;
    };
    c[i] -= 1;
    let rest: usize = c[i + 1..].iter().sum::<usize>() + 1;
    for x in &mut c[i + 1..] {
        *x = 0;
    }
    c[i + 1] = rest;
    true
}

/// Brute-force `max_P Tr(Σ_u P(u) ρ_u^{1/β})^β` over joint distributions on
/// `Xⁿ` (`n ≤ 2`): exhaustive simplex grid at step `1/grid_res`, followed by
/// pairwise mass-transfer polishing down to step `1/2000`.
///
/// Every power is taken on explicitly assembled matrices, independently of
/// the factored route used by [`maximize_trace_functional`].
pub fn multiletter_max_bruteforce(ch: &CqChannel, beta: f64, n: usize, grid_res: usize) -> Result<f64> {
    check_beta(beta)?;
    if !(1..=2).contains(&n) {
        return Err(Error::param(format!("block length must be 1 or 2, got {n}")));
    }
    if grid_res == 0 {
        return Err(Error::param("grid resolution must be positive"));
    }
    let a = ch.alphabet_size();
    let parts = a.pow(n as u32);
    let points = binomial((grid_res + parts - 1) as u128, (parts - 1) as u128);
    if parts > 9 || points > MAX_GRID_POINTS {
        return Err(Error::param(format!(
            "grid over {parts} joint letters at resolution 1/{grid_res} is too large ({points} points)"
        )));
    }
    let words: Vec<Vec<usize>> = if n == 1 {
        (0..a).map(|i| vec![i]).collect()
    } else {
        (0..a).flat_map(|i| (0..a).map(move |j| vec![i, j])).collect()
    };
    let powered = words
        .iter()
        .map(|w| mat_power(codeword_state(ch, w)?.matrix(), 1.0 / beta))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&HermitianMatrix> = powered.iter().collect();
    let objective = |p: &[f64]| -> Result<f64> {
        let s = HermitianMatrix::weighted_sum(p, &refs)?;
        Ok(mat_power(&s, beta)?.trace())
    };

    let best = (0..=grid_res)
        .into_par_iter()
        .map(|first| -> Result<Option<(f64, Vec<usize>)>> {
            let mut comp = vec![0usize; parts];
            comp[0] = first;
            if parts == 1 {
                if first != grid_res {
                    return Ok(None);
                }
            } else {
                comp[1] = grid_res - first;
            }
            let mut best: Option<(f64, Vec<usize>)> = None;
            loop {
                let p: Vec<f64> = comp.iter().map(|&c| c as f64 / grid_res as f64).collect();
                let v = objective(&p)?;
                if best.as_ref().map_or(true, |(bv, _)| v > *bv) {
                    best = Some((v, comp.clone()));
                }
                if parts < 2 || !next_composition(&mut comp[1..]) {
                    break;
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .fold(None::<(f64, Vec<usize>)>, |acc, cand| match acc {
            Some(ref a) if a.0 >= cand.0 => acc,
            _ => Some(cand),
        })
        .ok_or_else(|| Error::input("empty grid"))?;

    let mut p: Vec<f64> = best.1.iter().map(|&c| c as f64 / grid_res as f64).collect();
    let mut value = best.0;
    let mut delta = 1.0 / grid_res as f64;
    let finest = 1.0 / POLISH_FINEST as f64;
    loop {
        let delta_now = delta.max(finest);
        loop {
            let mut improved = false;
            for i in 0..parts {
                for j in 0..parts {
                    if i == j || p[j] <= 0.0 {
                        continue;
                    }
                    let amount = delta_now.min(p[j]);
                    let mut q = p.clone();
                    q[i] += amount;
                    q[j] -= amount;
                    let v = objective(&q)?;
                    if v > value + 1e-15 {
                        p = q;
                        value = v;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        if delta_now <= finest {
            break;
        }
        delta /= 2.0;
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::DensityOperator;
    use crate::hermitian::C64;
    use crate::info::{mutual_info, trace_functional};

    fn ket(v: &[f64]) -> Vec<C64> {
        v.iter().map(|&x| C64::new(x, 0.0)).collect()
    }

    fn orthogonal_pair() -> CqChannel {
        CqChannel::new(vec![
            DensityOperator::diagonal(&[1.0, 0.0]).unwrap(),
            DensityOperator::diagonal(&[0.0, 1.0]).unwrap(),
        ])
        .unwrap()
    }

    fn zero_plus() -> CqChannel {
        CqChannel::new(vec![
            DensityOperator::pure(&ket(&[1.0, 0.0])).unwrap(),
            DensityOperator::pure(&ket(&[1.0, 1.0])).unwrap(),
        ])
        .unwrap()
    }

    fn skewed() -> CqChannel {
        CqChannel::new(vec![
            DensityOperator::diagonal(&[0.9, 0.1, 0.0]).unwrap(),
            DensityOperator::pure(&ket(&[0.6, 0.0, 0.8])).unwrap(),
            DensityOperator::maximally_mixed(3),
        ])
        .unwrap()
    }

    #[test]
    fn simplex_projection() {
        assert_eq!(project_to_simplex(&[0.2, 0.8]), vec![0.2, 0.8]);
        assert_eq!(project_to_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
        let p = project_to_simplex(&[0.5, 0.5, 0.5]);
        assert!(p.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
        let p = project_to_simplex(&[-1.0, 0.3, 0.9]);
        assert_eq!(p[0], 0.0);
        assert!((p[1] - 0.2).abs() < 1e-15 && (p[2] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn compositions_enumerate_all() {
        let mut c = vec![3, 0, 0];
        let mut count = 1;
        while next_composition(&mut c) {
            assert_eq!(c.iter().sum::<usize>(), 3);
            count += 1;
        }
        assert_eq!(count, 10);
        assert_eq!(binomial(5, 2), 10);
    }

    #[test]
    fn single_letter_channel() {
        let ch = CqChannel::new(vec![DensityOperator::diagonal(&[0.4, 0.6]).unwrap()]).unwrap();
        let r = maximize_trace_functional(&ch, 0.5, &OptimizerConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.pi_star.probs(), &[1.0]);
        assert!((r.value - 1.0).abs() < 1e-12);
        let c = capacity(&ch, &OptimizerConfig::default()).unwrap();
        assert!(c.value.abs() < 1e-12);
    }

    #[test]
    fn symmetric_pair_is_uniform() {
        for beta in [0.2, 0.5, 0.9] {
            let r = maximize_trace_functional(&orthogonal_pair(), beta, &OptimizerConfig::default()).unwrap();
            assert!(r.converged);
            assert!((r.pi_star.probs()[0] - 0.5).abs() < 1e-9);
            assert!((r.value - 2f64.powf(1.0 - beta)).abs() < 1e-12);
            let report = kkt_check(&orthogonal_pair(), &Prior::uniform(2), beta).unwrap();
            assert!(report.residual <= 1e-9);
            assert!((report.slacks[0] - report.slacks[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn kkt_on_single_letter_is_exact() {
        let ch = CqChannel::new(vec![DensityOperator::diagonal(&[0.4, 0.6]).unwrap()]).unwrap();
        let report = kkt_check(&ch, &Prior::uniform(1), 0.3).unwrap();
        assert!(report.residual < 1e-12);
    }

    #[test]
    fn optimizer_certifies_and_ascends() {
        let ch = skewed();
        let cfg = OptimizerConfig {
            record_path: true,
            ..Default::default()
        };
        for beta in [0.3, 0.6, 0.95] {
            let r = maximize_trace_functional(&ch, beta, &cfg).unwrap();
            assert!(r.converged, "beta {beta}: {r:?}");
            assert!(r.kkt_residual <= 1e-6);
            assert!(r.history.windows(2).all(|w| w[1] >= w[0] - 1e-12));
            let direct = trace_functional(&ch, &r.pi_star, beta).unwrap();
            assert!((direct - r.value).abs() < 1e-12);
            // residual at the uniform start exceeds the final certificate
            let start = kkt_check(&ch, &Prior::uniform(3), beta).unwrap().residual;
            assert!(start > r.kkt_residual);
            let last = kkt_check(&ch, &Prior::from_weights(r.path.last().unwrap()).unwrap(), beta).unwrap();
            assert!(last.residual <= 1e-6);
        }
    }

    #[test]
    fn grid_oracle_agrees_with_optimizer() {
        let ch = skewed();
        for beta in [0.4, 0.8] {
            let opt = maximize_trace_functional(&ch, beta, &OptimizerConfig::default()).unwrap();
            let grid = multiletter_max_bruteforce(&ch, beta, 1, 200).unwrap();
            assert!((opt.value - grid).abs() < 1e-6, "{} vs {grid}", opt.value);
            assert!(opt.value >= grid - 1e-12);
        }
    }

    #[test]
    fn bruteforce_size_guard() {
        let ch = CqChannel::new(vec![DensityOperator::maximally_mixed(2); 4]).unwrap();
        assert!(multiletter_max_bruteforce(&ch, 0.5, 2, 10).is_err());
        assert!(multiletter_max_bruteforce(&skewed(), 0.5, 3, 10).is_err());
        let single = CqChannel::new(vec![DensityOperator::diagonal(&[0.3, 0.7]).unwrap()]).unwrap();
        assert!((multiletter_max_bruteforce(&single, 0.5, 2, 10).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn min_e0_examples() {
        let cfg = OptimizerConfig::default();
        assert!(min_e0_over_prior(&skewed(), 0.0, &cfg).unwrap().value.abs() < 1e-12);
        let single = CqChannel::new(vec![DensityOperator::diagonal(&[0.3, 0.7]).unwrap()]).unwrap();
        for s in [-0.8, -0.4] {
            assert!(min_e0_over_prior(&single, s, &cfg).unwrap().value.abs() < 1e-12);
        }
        assert!(min_e0_over_prior(&single, -1.0, &cfg).is_err());
    }

    #[test]
    fn capacity_examples() {
        let cfg = OptimizerConfig::default();
        let c = capacity(&orthogonal_pair(), &cfg).unwrap();
        assert!(c.converged);
        assert!((c.value - 2f64.ln()).abs() < 1e-12);

        let c = capacity(&zero_plus(), &cfg).unwrap();
        assert!(c.converged);
        let lam = (1.0 + 0.5f64.sqrt()) / 2.0;
        let h = -(lam * lam.ln() + (1.0 - lam) * (1.0 - lam).ln());
        assert!((c.value - h).abs() < 1e-9);
        assert!((c.pi_star.probs()[0] - 0.5).abs() < 1e-6);

        // dense grid over the two-letter simplex
        let ch = zero_plus();
        let grid = (0..=2000)
            .map(|k| mutual_info(&ch, &Prior::from_weights(&[k as f64, (2000 - k) as f64]).unwrap()).unwrap())
            .fold(f64::MIN, f64::max);
        assert!((c.value - grid).abs() < 1e-6);
        assert!(c.value >= grid - 1e-12);
    }

    #[test]
    fn capacity_is_label_invariant() {
        let ch = skewed();
        let c = capacity(&ch, &OptimizerConfig::default()).unwrap();
        let mut states = ch.states().to_vec();
        states.rotate_left(1);
        let c2 = capacity(&CqChannel::new(states).unwrap(), &OptimizerConfig::default()).unwrap();
        assert!((c.value - c2.value).abs() < 1e-8);
        assert!(capacity_residual(&ch, &c.pi_star).unwrap() <= 1e-6);
    }

    #[test]
    fn config_validation() {
        let cfg = OptimizerConfig {
            max_iters: 0,
            ..Default::default()
        };
        assert!(maximize_trace_functional(&skewed(), 0.5, &cfg).is_err());
    }
}
