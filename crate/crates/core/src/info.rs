//! Entropies, mutual information and the Gallager-type function `E₀`.
//!
//! All logarithms are natural, so entropies and `E₀` are in nats.
//!
//! The trace functional `f(π) = Tr(Σᵢ πᵢ ρᵢ^{1/β})^β` is evaluated through
//! [`PowerSum`], which keeps `ρᵢ^{1/β}` in factored form. For `β` near zero the
//! sum has eigenvalues tens of orders of magnitude below its norm, and a plain
//! eigendecomposition of the assembled matrix loses them.

use serde::Serialize;

use crate::channel::{average_state, CqChannel, DensityOperator, Prior};
use crate::error::{Error, Result};
use crate::hermitian::{HermitianMatrix, PowerRoot, PowerSum, EIG_FLOOR};

/// Weights below this use the support-restricted pairing for the gradient.
const ROW_PATH_MIN_WEIGHT: f64 = 1e-200;

/// One evaluation of `E₀(s, π)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct E0Point {
    pub s: f64,
    pub beta: f64,
    pub value: f64,
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta > 0.0 && beta <= 1.0) {
        return Err(Error::param(format!("beta must lie in (0, 1], got {beta}")));
    }
    Ok(())
}

pub(crate) fn check_s(s: f64) -> Result<()> {
    if !(s.is_finite() && s > -1.0 && s <= 0.0) {
        return Err(Error::param(format!("s must lie in (-1, 0], got {s}")));
    }
    Ok(())
}

/// `−Σ λ log λ` with `0 log 0 := 0`; negative roundoff is ignored.
pub fn entropy_of_spectrum(eigenvalues: &[f64]) -> f64 {
    -eigenvalues
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| l * l.ln())
        .sum::<f64>()
}

pub fn von_neumann_entropy(rho: &DensityOperator) -> Result<f64> {
    Ok(entropy_of_spectrum(rho.matrix().eig()?.eigenvalues()).max(0.0))
}

/// `I(π) = H(ρ̄_π) − Σᵢ πᵢ H(ρᵢ)`.
pub fn mutual_info(ch: &CqChannel, prior: &Prior) -> Result<f64> {
    HolevoObjective::new(ch)?.value(prior.probs())
}

/// `∂E₀/∂s` at `s = 0`, which equals the mutual information `I(π)`.
pub fn e0_slope_at_zero(ch: &CqChannel, prior: &Prior) -> Result<f64> {
    mutual_info(ch, prior)
}

/// The mutual information as a function of unnormalized input weights, with
/// its gradient. State entropies are computed once.
#[derive(Clone, Debug)]
pub struct HolevoObjective<'a> {
    channel: &'a CqChannel,
    entropies: Vec<f64>,
}

impl<'a> HolevoObjective<'a> {
    pub fn new(channel: &'a CqChannel) -> Result<Self> {
        let entropies = channel
            .states()
            .iter()
            .map(von_neumann_entropy)
            .collect::<Result<_>>()?;
        Ok(Self { channel, entropies })
    }

    fn mixture(&self, weights: &[f64]) -> Result<HermitianMatrix> {
        if weights.len() != self.entropies.len() {
            return Err(Error::DimensionMismatch {
                expected: self.entropies.len(),
                found: weights.len(),
            });
        }
        let mats: Vec<&HermitianMatrix> = self.channel.states().iter().map(|s| s.matrix()).collect();
        HermitianMatrix::weighted_sum(weights, &mats)
    }

    pub fn value(&self, weights: &[f64]) -> Result<f64> {
        let avg = self.mixture(weights)?;
        let h_avg = entropy_of_spectrum(avg.eig()?.eigenvalues());
        let h_cond: f64 = weights.iter().zip(&self.entropies).map(|(w, h)| w * h).sum();
        Ok(h_avg - h_cond)
    }

    /// Value and `∂I/∂wᵢ = −H(ρᵢ) − Tr ρᵢ log ρ̄ − 1`. The logarithm of `ρ̄` is
    /// floored at `log(1e-300)` on its kernel, so letters that would add new
    /// support get a very large (rather than infinite) derivative.
    pub fn value_and_gradient(&self, weights: &[f64]) -> Result<(f64, Vec<f64>)> {
        let avg = self.mixture(weights)?;
        let eig = avg.eig()?;
        let h_avg = entropy_of_spectrum(eig.eigenvalues());
        let h_cond: f64 = weights.iter().zip(&self.entropies).map(|(w, h)| w * h).sum();
        let log_avg = eig.map(|l| l.max(EIG_FLOOR).ln());
        let grad = self
            .channel
            .states()
            .iter()
            .zip(&self.entropies)
            .map(|(rho, h)| Ok(-h - rho.matrix().trace_product(&log_avg)? - 1.0))
            .collect::<Result<Vec<f64>>>()?;
        Ok((h_avg - h_cond, grad))
    }
}

/// `f(w) = Tr(Σᵢ wᵢ ρᵢ^{1/β})^β` for a fixed channel and `β ∈ (0, 1]`, with the
/// factors `ρᵢ^{1/β}` precomputed.
#[derive(Clone, Debug)]
pub struct TraceFunctional {
    beta: f64,
    roots: Vec<PowerRoot>,
}

/// Value of the trace functional together with the pairings needed for the
/// optimality conditions.
#[derive(Clone, Debug)]
pub struct TraceEval {
    /// `Tr S^β` with `S = Σᵢ wᵢ ρᵢ^{1/β}`.
    pub value: f64,
    /// `Tr S^{β−1} ρᵢ^{1/β}`, negative power on the support of `S`.
    pub pairings: Vec<f64>,
    /// `∂f/∂wᵢ = β · Tr S^{β−1} ρᵢ^{1/β}`.
    pub gradient: Vec<f64>,
}

impl TraceFunctional {
    pub fn new(ch: &CqChannel, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        let roots = ch
            .states()
            .iter()
            .map(|s| PowerRoot::new(s.matrix(), 1.0 / beta))
            .collect::<Result<_>>()?;
        Ok(Self { beta, roots })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn alphabet_size(&self) -> usize {
        self.roots.len()
    }

    fn power_sum(&self, weights: &[f64]) -> Result<PowerSum> {
        let refs: Vec<&PowerRoot> = self.roots.iter().collect();
        PowerSum::new(weights, &refs)
    }

    pub fn value(&self, weights: &[f64]) -> Result<f64> {
        Ok(self.power_sum(weights)?.trace_power(self.beta))
    }

    pub fn evaluate(&self, weights: &[f64]) -> Result<TraceEval> {
        let sum = self.power_sum(weights)?;
        let value = sum.trace_power(self.beta);
        let weighted = sum.weighted_pairings(self.beta);
        let pairings = weights
            .iter()
            .zip(&weighted)
            .zip(&self.roots)
            .map(|((&w, &wp), root)| {
                if w > ROW_PATH_MIN_WEIGHT {
                    Ok(wp / w)
                } else {
                    sum.pairing(root, self.beta)
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        let gradient = pairings.iter().map(|p| self.beta * p).collect();
        Ok(TraceEval {
            value,
            pairings,
            gradient,
        })
    }
}

/// `f(π) = Tr(Σᵢ πᵢ ρᵢ^{1/β})^β`.
pub fn trace_functional(ch: &CqChannel, prior: &Prior, beta: f64) -> Result<f64> {
    ch_prior(ch, prior)?;
    TraceFunctional::new(ch, beta)?.value(prior.probs())
}

/// The trace functional at arbitrary nonnegative weights (not renormalized).
pub fn trace_functional_weights(ch: &CqChannel, weights: &[f64], beta: f64) -> Result<f64> {
    if weights.len() != ch.alphabet_size() {
        return Err(Error::DimensionMismatch {
            expected: ch.alphabet_size(),
            found: weights.len(),
        });
    }
    TraceFunctional::new(ch, beta)?.value(weights)
}

/// Partial derivatives `∂f/∂πᵢ = β · Tr S^{β−1} ρᵢ^{1/β}`, `S = Σ πᵢ ρᵢ^{1/β}`.
pub fn trace_functional_grad(ch: &CqChannel, prior: &Prior, beta: f64) -> Result<Vec<f64>> {
    ch_prior(ch, prior)?;
    Ok(TraceFunctional::new(ch, beta)?.evaluate(prior.probs())?.gradient)
}

/// `E₀(s, π) = −log Tr(Σᵢ πᵢ ρᵢ^{1/(1+s)})^{1+s}` for `s ∈ (−1, 0]`.
pub fn e0(ch: &CqChannel, prior: &Prior, s: f64) -> Result<E0Point> {
    check_s(s)?;
    let beta = s + 1.0;
    let value = -trace_functional(ch, prior, beta)?.ln();
    Ok(E0Point { s, beta, value })
}

fn ch_prior(ch: &CqChannel, prior: &Prior) -> Result<()> {
    if prior.len() != ch.alphabet_size() {
        return Err(Error::DimensionMismatch {
            expected: ch.alphabet_size(),
            found: prior.len(),
        });
    }
    Ok(())
}

/// `H(ρ̄_π)`, exposed for reporting.
pub fn average_entropy(ch: &CqChannel, prior: &Prior) -> Result<f64> {
    von_neumann_entropy(&average_state(ch, prior)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::C64;

    fn ket(v: &[f64]) -> Vec<C64> {
        v.iter().map(|&x| C64::new(x, 0.0)).collect()
    }

    fn zero_plus() -> CqChannel {
        CqChannel::new(vec![
            DensityOperator::pure(&ket(&[1.0, 0.0])).unwrap(),
            DensityOperator::pure(&ket(&[1.0, 1.0])).unwrap(),
        ])
        .unwrap()
    }

    fn binary_entropy(p: f64) -> f64 {
        -(p * p.ln() + (1.0 - p) * (1.0 - p).ln())
    }

    #[test]
    fn entropy_examples() {
        assert!(von_neumann_entropy(&DensityOperator::pure(&ket(&[0.6, 0.8])).unwrap()).unwrap() < 1e-12);
        let mixed = DensityOperator::maximally_mixed(5);
        assert!((von_neumann_entropy(&mixed).unwrap() - 5f64.ln()).abs() < 1e-12);
        let rho = DensityOperator::diagonal(&[0.9, 0.1]).unwrap();
        let h = von_neumann_entropy(&rho).unwrap();
        assert!((h - binary_entropy(0.9)).abs() < 1e-15);
        assert!((h - 0.325083).abs() < 1e-6);
    }

    #[test]
    fn mutual_info_examples() {
        let same = CqChannel::new(vec![DensityOperator::diagonal(&[0.3, 0.7]).unwrap(); 3]).unwrap();
        assert!(mutual_info(&same, &Prior::new(vec![0.2, 0.5, 0.3]).unwrap()).unwrap().abs() < 1e-12);

        let orth = CqChannel::new(
            (0..3)
                .map(|k| {
                    let mut p = vec![0.0; 3];
                    p[k] = 1.0;
                    DensityOperator::diagonal(&p).unwrap()
                })
                .collect(),
        )
        .unwrap();
        assert!((mutual_info(&orth, &Prior::uniform(3)).unwrap() - 3f64.ln()).abs() < 1e-12);

        // average state of |0>,|+> has eigenvalues (1 ± 1/√2)/2
        let lam = (1.0 + 0.5f64.sqrt()) / 2.0;
        let expect = binary_entropy(lam);
        let got = mutual_info(&zero_plus(), &Prior::uniform(2)).unwrap();
        assert!((got - expect).abs() < 1e-12);
        assert!((got - 0.416496).abs() < 1e-6);
        assert_eq!(e0_slope_at_zero(&zero_plus(), &Prior::uniform(2)).unwrap(), got);
    }

    #[test]
    fn holevo_gradient_matches_finite_differences() {
        let ch = CqChannel::new(vec![
            DensityOperator::diagonal(&[0.8, 0.2]).unwrap(),
            DensityOperator::pure(&ket(&[0.6, 0.8])).unwrap(),
            DensityOperator::maximally_mixed(2),
        ])
        .unwrap();
        let obj = HolevoObjective::new(&ch).unwrap();
        let w = [0.3, 0.45, 0.25];
        let (_, grad) = obj.value_and_gradient(&w).unwrap();
        let h = 1e-6;
        for i in 0..3 {
            let mut up = w;
            let mut dn = w;
            up[i] += h;
            dn[i] -= h;
            let fd = (obj.value(&up).unwrap() - obj.value(&dn).unwrap()) / (2.0 * h);
            assert!((fd - grad[i]).abs() < 1e-7, "letter {i}: {fd} vs {}", grad[i]);
        }
    }

    #[test]
    fn trace_functional_examples() {
        let ch = zero_plus();
        let pi = Prior::new(vec![0.3, 0.7]).unwrap();
        assert!((trace_functional(&ch, &pi, 1.0).unwrap() - 1.0).abs() < 1e-14);

        let single = CqChannel::new(vec![DensityOperator::new(
            HermitianMatrix::new(
                2,
                vec![C64::new(0.6, 0.0), C64::new(0.1, 0.2), C64::new(0.1, -0.2), C64::new(0.4, 0.0)],
            )
            .unwrap(),
        )
        .unwrap()])
        .unwrap();
        for beta in [0.05, 0.3, 0.7, 1.0] {
            let f = trace_functional(&single, &Prior::uniform(1), beta).unwrap();
            assert!((f - 1.0).abs() < 1e-12, "beta {beta}: {f}");
        }
        assert!(trace_functional(&ch, &pi, 0.0).is_err());
        assert!(trace_functional(&ch, &pi, 1.2).is_err());
    }

    #[test]
    fn trace_functional_classical_reduction() {
        // P(y|x) rows
        let p = [[0.7, 0.2, 0.1], [0.1, 0.3, 0.6]];
        let ch = CqChannel::new(p.iter().map(|r| DensityOperator::diagonal(r).unwrap()).collect()).unwrap();
        let pi = [0.4, 0.6];
        for beta in [0.2, 0.5, 0.9] {
            let classical: f64 = (0..3)
                .map(|y| (0..2).map(|x| pi[x] * p[x][y].powf(1.0 / beta)).sum::<f64>().powf(beta))
                .sum();
            let f = trace_functional(&ch, &Prior::new(pi.to_vec()).unwrap(), beta).unwrap();
            assert!((f - classical).abs() < 1e-13);
        }
    }

    #[test]
    fn gradient_examples() {
        let ch = zero_plus();
        let g = trace_functional_grad(&ch, &Prior::new(vec![0.4, 0.6]).unwrap(), 1.0).unwrap();
        assert!(g.iter().all(|x| (x - 1.0).abs() < 1e-12));

        // a = 1: f(w) = w^β so ∂f/∂w at w = 1 is β
        let single = CqChannel::new(vec![DensityOperator::diagonal(&[0.3, 0.7]).unwrap()]).unwrap();
        let g = trace_functional_grad(&single, &Prior::uniform(1), 0.4).unwrap();
        assert!((g[0] - 0.4).abs() < 1e-12);
        let eval = TraceFunctional::new(&single, 0.4).unwrap().evaluate(&[1.0]).unwrap();
        assert!((eval.pairings[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let ch = CqChannel::new(vec![
            DensityOperator::diagonal(&[0.8, 0.2]).unwrap(),
            DensityOperator::pure(&ket(&[0.6, 0.8])).unwrap(),
            DensityOperator::new(
                HermitianMatrix::new(
                    2,
                    vec![C64::new(0.5, 0.0), C64::new(0.1, 0.3), C64::new(0.1, -0.3), C64::new(0.5, 0.0)],
                )
                .unwrap(),
            )
            .unwrap(),
        ])
        .unwrap();
        let w = [0.2, 0.5, 0.3];
        for beta in [0.3, 0.6, 0.9] {
            let grad = trace_functional_grad(&ch, &Prior::new(w.to_vec()).unwrap(), beta).unwrap();
            let h = 1e-5;
            for i in 0..3 {
                let mut up = w;
                let mut dn = w;
                up[i] += h;
                dn[i] -= h;
                let fd = (trace_functional_weights(&ch, &up, beta).unwrap()
                    - trace_functional_weights(&ch, &dn, beta).unwrap())
                    / (2.0 * h);
                assert!(((fd - grad[i]) / grad[i]).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn zero_weight_letters_use_support_pairing() {
        let ch = CqChannel::new(vec![
            DensityOperator::diagonal(&[0.6, 0.4]).unwrap(),
            DensityOperator::diagonal(&[0.1, 0.9]).unwrap(),
        ])
        .unwrap();
        let beta = 0.5;
        let tf = TraceFunctional::new(&ch, beta).unwrap();
        let eval = tf.evaluate(&[1.0, 0.0]).unwrap();
        // S = diag(0.36, 0.16); Tr S^{-1/2} diag(0.01, 0.81)
        let expect = 0.01 / 0.6 + 0.81 / 0.4;
        assert!((eval.pairings[1] - expect).abs() < 1e-12);
    }

    #[test]
    fn e0_examples() {
        let ch = zero_plus();
        let pi = Prior::uniform(2);
        assert_eq!(e0(&ch, &pi, 0.0).unwrap().value.abs() < 1e-12, true);
        let single = CqChannel::new(vec![DensityOperator::diagonal(&[0.25, 0.75]).unwrap()]).unwrap();
        for s in [-0.9, -0.5, -0.1] {
            assert!(e0(&single, &Prior::uniform(1), s).unwrap().value.abs() < 1e-12);
        }
        let pt = e0(&ch, &pi, -0.3).unwrap();
        assert_eq!(pt.beta, 0.7);
        assert!(pt.value < 0.0);
        assert!(e0(&ch, &pi, -1.0).is_err());
        assert!(e0(&ch, &pi, 0.1).is_err());
    }
}
