//! Lower bounds on the average decoding error of block codes, and the
//! exponent with which they approach one above capacity.
//!
//! For a codebook of `M` words and any `β ∈ (0, 1]`,
//!
//! ```text
//! Pe ≥ 1 − (1/M) Tr(Σₖ ρ_{uᵏ}^{1/β})^β,
//! ```
//!
//! whatever measurement is used. Maximizing over codebooks of rate `R` and
//! single-letterizing gives `Pe ≥ 1 − exp(−n(−sR + min_π E₀(s, π)))` for
//! `s ∈ (−1, 0]`, and the best exponent in that family is
//! `sup_s [−sR + min_π E₀(s, π)]`.

use std::collections::HashMap;
use std::sync::RwLock;

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{codeword_state_capped, Codebook, CqChannel};
use crate::error::{Error, Result};
use crate::hermitian::{PowerRoot, PowerSum, DEFAULT_DIM_CAP};
use crate::info::{check_beta, check_s};
use crate::optimizer::{min_e0_over_prior, OptimizerConfig};

const GOLDEN_ITERS: usize = 30;

/// A lower bound on an error probability. Values at or below zero carry no
/// information and are flagged rather than clamped.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bound {
    pub value: f64,
    pub vacuous: bool,
}

impl Bound {
    fn new(value: f64) -> Self {
        Self {
            value,
            vacuous: value <= 0.0,
        }
    }
}

/// The evenly spaced default grid `{−0.95, −0.90, …, −0.05, 0}`.
pub fn default_s_grid() -> Vec<f64> {
    (1..=19).rev().map(|j| -(j as f64) / 20.0).chain([0.0]).collect()
}

/// `1 − (1/M) Tr(Σₖ ρ_{uᵏ}^{1/β})^β`.
pub fn lemma1_bound(ch: &CqChannel, cb: &Codebook, beta: f64) -> Result<Bound> {
    lemma1_bound_capped(ch, cb, beta, DEFAULT_DIM_CAP)
}

pub fn lemma1_bound_capped(ch: &CqChannel, cb: &Codebook, beta: f64, cap: usize) -> Result<Bound> {
    check_beta(beta)?;
    cb.check_alphabet(ch.alphabet_size())?;
    // repeated codewords enter once, weighted by multiplicity
    let mut index: HashMap<&[usize], usize> = HashMap::new();
    let mut roots = Vec::new();
    let mut counts: Vec<f64> = Vec::new();
    for word in cb.words() {
        match index.get(word.as_slice()) {
            Some(&k) => counts[k] += 1.0,
            None => {
                let state = codeword_state_capped(ch, word, cap)?;
                index.insert(word, roots.len());
                roots.push(PowerRoot::new(state.matrix(), 1.0 / beta)?);
                counts.push(1.0);
            }
        }
    }
    let refs: Vec<&PowerRoot> = roots.iter().collect();
    let sum = PowerSum::new(&counts, &refs)?;
    Ok(Bound::new(1.0 - sum.trace_power(beta) / cb.size() as f64))
}

/// `1 − exp(−n·exponent)`, the bound implied by a per-symbol exponent.
pub fn bound_from_exponent(n: usize, exponent: f64) -> Bound {
    Bound::new(-(-(n as f64) * exponent).exp_m1())
}

fn check_rate(rate: f64) -> Result<()> {
    if !(rate.is_finite() && rate >= 0.0) {
        return Err(Error::param(format!("rate must be finite and nonnegative, got {rate}")));
    }
    Ok(())
}

fn check_grid(grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::param("s grid is empty"));
    }
    for &s in grid {
        check_s(s)?;
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    Ok(sorted)
}

/// The best exponent found at one rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScExponent {
    pub rate: f64,
    pub exponent: f64,
    pub s_star: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentCurve {
    pub rate_grid: Vec<f64>,
    pub exponents: Vec<f64>,
    pub s_argmax: Vec<f64>,
}

/// Evaluates `min_π E₀(s, π)` once per `s` and reuses it across block lengths
/// and rates. Safe to share between threads.
pub struct ConverseEngine {
    ch: CqChannel,
    cfg: OptimizerConfig,
    cache: RwLock<HashMap<u64, f64>>,
}

impl ConverseEngine {
    pub fn new(ch: CqChannel, cfg: OptimizerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            ch,
            cfg,
            cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn channel(&self) -> &CqChannel {
        &self.ch
    }

    /// `min_π E₀(s, π)`. Fails if the inner maximization does not certify.
    pub fn min_e0(&self, s: f64) -> Result<f64> {
        check_s(s)?;
        let key = s.to_bits();
        if let Some(&v) = self.cache.read().expect("cache lock").get(&key) {
            return Ok(v);
        }
        let opt = min_e0_over_prior(&self.ch, s, &self.cfg)?;
        if !opt.inner.converged {
            return Err(Error::OptimizerNotConverged {
                iterations: opt.inner.iterations,
                residual: opt.inner.kkt_residual,
            });
        }
        self.cache.write().expect("cache lock").insert(key, opt.value);
        Ok(opt.value)
    }

    /// Every `(s, min_π E₀)` evaluated so far, sorted by `s`.
    pub fn evaluated(&self) -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = self
            .cache
            .read()
            .expect("cache lock")
            .iter()
            .map(|(&k, &v)| (f64::from_bits(k), v))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts
    }

    /// `−sR + min_π E₀(s, π)`.
    pub fn exponent_at(&self, rate: f64, s: f64) -> Result<f64> {
        check_rate(rate)?;
        Ok(-s * rate + self.min_e0(s)?)
    }

    pub fn theorem1_bound(&self, n: usize, rate: f64, s: f64) -> Result<Bound> {
        if n == 0 {
            return Err(Error::param("block length must be positive"));
        }
        Ok(bound_from_exponent(n, self.exponent_at(rate, s)?))
    }

    /// Grid maximum of `−sR + min_π E₀(s, π)`, refined by golden-section
    /// search over the grid cells adjacent to the grid argmax.
    pub fn sc_exponent(&self, rate: f64, s_grid: &[f64]) -> Result<ScExponent> {
        check_rate(rate)?;
        let grid = check_grid(s_grid)?;
        let values = grid
            .par_iter()
            .map(|&s| self.exponent_at(rate, s))
            .collect::<Result<Vec<_>>>()?;
        let mut k = 0;
        for (i, &v) in values.iter().enumerate() {
            if v > values[k] {
                k = i;
            }
        }
        let mut best = (values[k], grid[k]);
        let lo = grid[k.saturating_sub(1)];
        let hi = grid[(k + 1).min(grid.len() - 1)];
        if hi > lo {
            let g = |s: f64| self.exponent_at(rate, s);
            let (s, v) = golden_max(g, lo, hi)?;
            if v > best.0 {
                best = (v, s);
            }
        }
        Ok(ScExponent {
            rate,
            exponent: best.0,
            s_star: best.1,
        })
    }

    /// [`Self::sc_exponent`] at every rate, finished by taking the upper
    /// envelope of all evaluated lines so the curve is nondecreasing in rate.
    pub fn exponent_curve(&self, rate_grid: &[f64], s_grid: &[f64]) -> Result<ExponentCurve> {
        for &r in rate_grid {
            check_rate(r)?;
        }
        rate_grid
            .par_iter()
            .map(|&r| self.sc_exponent(r, s_grid))
            .collect::<Result<Vec<_>>>()?;
        let lines = self.evaluated();
        let mut exponents = Vec::with_capacity(rate_grid.len());
        let mut s_argmax = Vec::with_capacity(rate_grid.len());
        for &r in rate_grid {
            let (s, v) = lines
                .iter()
                .map(|&(s, e)| (s, -s * r + e))
                .fold((f64::NAN, f64::NEG_INFINITY), |acc, cand| if cand.1 > acc.1 { cand } else { acc });
            exponents.push(v);
            s_argmax.push(s);
        }
        Ok(ExponentCurve {
            rate_grid: rate_grid.to_vec(),
            exponents,
            s_argmax,
        })
    }
}

fn golden_max(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..GOLDEN_ITERS {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

pub fn theorem1_bound(ch: &CqChannel, n: usize, rate: f64, s: f64) -> Result<Bound> {
    ConverseEngine::new(ch.clone(), OptimizerConfig::default())?.theorem1_bound(n, rate, s)
}

pub fn sc_exponent(ch: &CqChannel, rate: f64, s_grid: &[f64]) -> Result<ScExponent> {
    ConverseEngine::new(ch.clone(), OptimizerConfig::default())?.sc_exponent(rate, s_grid)
}

pub fn exponent_curve(ch: &CqChannel, rate_grid: &[f64], s_grid: &[f64]) -> Result<ExponentCurve> {
    ConverseEngine::new(ch.clone(), OptimizerConfig::default())?.exponent_curve(rate_grid, s_grid)
}
