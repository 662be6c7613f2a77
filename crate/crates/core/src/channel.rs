//! Classical-quantum channels and the objects built on them: input priors,
//! codebooks, product states of codewords, and decoding measurements.
//!
//! Input letters are 0-based throughout the API. The on-disk codebook format
//! is 1-based; see [`crate::io`].

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hermitian::{self, HermitianMatrix, DEFAULT_DIM_CAP};

/// PSD and trace tolerance for states.
pub const STATE_TOL: f64 = 1e-10;
/// PSD and completeness tolerance for measurements.
pub const POVM_TOL: f64 = 1e-9;
/// Allowed deviation of a prior's sum from one before renormalization.
pub const PRIOR_SUM_TOL: f64 = 1e-12;

/// A positive semidefinite, unit-trace operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    mat: HermitianMatrix,
}

impl DensityOperator {
    pub fn new(mat: HermitianMatrix) -> Result<Self> {
        let tr = mat.trace();
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::input(format!("state has trace {tr}, expected 1")));
        }
        let min = hermitian::min_eigenvalue(&mat)?;
        if min < -STATE_TOL {
            return Err(Error::NotPsd { eigenvalue: min });
        }
        Ok(Self { mat })
    }

    /// The pure state `|ψ⟩⟨ψ|/⟨ψ|ψ⟩`.
    pub fn pure(psi: &[hermitian::C64]) -> Result<Self> {
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if psi.is_empty() || !(norm2 > 0.0) {
            return Err(Error::input("pure state vector must be nonzero"));
        }
        Self::new(HermitianMatrix::outer(psi).scale(1.0 / norm2))
    }

    /// Diagonal state from a probability vector.
    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        Self::new(HermitianMatrix::from_real_diagonal(probs))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            mat: HermitianMatrix::identity(dim).scale(1.0 / dim as f64),
        }
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    /// Rank one within tolerance.
    pub fn is_pure(&self) -> bool {
        hermitian::max_eigenvalue(&self.mat).map_or(false, |l| l >= 1.0 - POVM_TOL)
    }
}

/// Input alphabet `{0, …, a−1}` mapped to states on a common carrier.
#[derive(Clone, Debug, PartialEq)]
pub struct CqChannel {
    dim: usize,
    states: Vec<DensityOperator>,
    labels: Option<Vec<String>>,
}

impl CqChannel {
    pub fn new(states: Vec<DensityOperator>) -> Result<Self> {
        let first = states
            .first()
            .ok_or_else(|| Error::input("a channel needs at least one input letter"))?;
        let dim = first.dim();
        if let Some(bad) = states.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(Self {
            dim,
            states,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.states.len() {
            return Err(Error::DimensionMismatch {
                expected: self.states.len(),
                found: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alphabet_size(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, letter: usize) -> Result<&DensityOperator> {
        self.states.get(letter).ok_or(Error::InvalidLetter {
            letter,
            alphabet: self.states.len(),
        })
    }

    pub fn states(&self) -> &[DensityOperator] {
        &self.states
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// True when every pair of states commutes (all states jointly diagonal in
    /// the computational basis is the common case, but any commuting family
    /// qualifies).
    pub fn is_commuting(&self) -> bool {
        let n = self.dim;
        self.states.iter().enumerate().all(|(i, a)| {
            self.states[i + 1..].iter().all(|b| {
                let (a, b) = (a.matrix(), b.matrix());
                (0..n).all(|j| {
                    (0..n).all(|k| {
                        let ab: hermitian::C64 = (0..n).map(|l| a.get(j, l) * b.get(l, k)).sum();
                        let ba: hermitian::C64 = (0..n).map(|l| b.get(j, l) * a.get(l, k)).sum();
                        (ab - ba).norm() <= 1e-12
                    })
                })
            })
        })
    }

    pub(crate) fn check_prior(&self, prior: &Prior) -> Result<()> {
        if prior.len() != self.alphabet_size() {
            return Err(Error::DimensionMismatch {
                expected: self.alphabet_size(),
                found: prior.len(),
            });
        }
        Ok(())
    }
}

/// A probability distribution on the input alphabet.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Prior {
    probs: Vec<f64>,
}

impl Prior {
    /// Validates nonnegativity and renormalizes. Sums off by more than
    /// [`PRIOR_SUM_TOL`] are rejected.
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::input("prior must have at least one entry"));
        }
        if let Some(bad) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::input(format!("prior entries must be nonnegative, got {bad}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PRIOR_SUM_TOL {
            return Err(Error::input(format!("prior sums to {sum}, expected 1")));
        }
        probs.iter_mut().for_each(|p| *p /= sum);
        Ok(Self { probs })
    }

    /// Normalizes any nonnegative weight vector with positive sum.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0 && sum.is_finite()) {
            return Err(Error::input("weights must have a positive finite sum"));
        }
        let scaled = weights.iter().map(|w| w / sum).collect::<Vec<_>>();
        if scaled.iter().any(|p| *p < 0.0) {
            return Err(Error::input("weights must be nonnegative"));
        }
        Ok(Self { probs: scaled })
    }

    pub fn uniform(size: usize) -> Self {
        assert!(size > 0, "alphabet must be nonempty");
        Self {
            probs: vec![1.0 / size as f64; size],
        }
    }

    pub fn point_mass(size: usize, letter: usize) -> Result<Self> {
        if letter >= size {
            return Err(Error::InvalidLetter {
                letter,
                alphabet: size,
            });
        }
        let mut probs = vec![0.0; size];
        probs[letter] = 1.0;
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// `M` codewords of block length `n`; repeated codewords are allowed.
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    n: usize,
    words: Vec<Vec<usize>>,
}

impl Codebook {
    pub fn new(n: usize, words: Vec<Vec<usize>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("block length must be at least 1"));
        }
        if words.is_empty() {
            return Err(Error::input("codebook must contain at least one codeword"));
        }
        if let Some(w) = words.iter().find(|w| w.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: w.len(),
            });
        }
        Ok(Self { n, words })
    }

    pub fn block_length(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        self.words.len()
    }

    pub fn words(&self) -> &[Vec<usize>] {
        &self.words
    }

    /// `log M / n` in nats per channel use.
    pub fn rate(&self) -> f64 {
        (self.words.len() as f64).ln() / self.n as f64
    }

    pub fn check_alphabet(&self, alphabet: usize) -> Result<()> {
        for &letter in self.words.iter().flatten() {
            if letter >= alphabet {
                return Err(Error::InvalidLetter { letter, alphabet });
            }
        }
        Ok(())
    }
}

/// A measurement `{X₀, X₁, …, X_M}`; `X₀` is the "no decision" outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    elements: Vec<HermitianMatrix>,
}

impl Povm {
    pub fn new(elements: Vec<HermitianMatrix>) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| Error::input("a POVM needs at least one element"))?;
        let dim = first.dim();
        let mut total = HermitianMatrix::zeros(dim);
        for (k, x) in elements.iter().enumerate() {
            if x.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: x.dim(),
                });
            }
            let min = hermitian::min_eigenvalue(x)?;
            if min < -POVM_TOL {
                return Err(Error::input(format!(
                    "POVM element {k} is not PSD (eigenvalue {min:e})"
                )));
            }
            total = total.add(x)?;
        }
        let dev = total.sub(&HermitianMatrix::identity(dim))?.max_abs();
        if dev > POVM_TOL {
            return Err(Error::input(format!(
                "POVM elements do not sum to the identity (deviation {dev:e})"
            )));
        }
        Ok(Self { elements })
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    /// All elements including `X₀`.
    pub fn elements(&self) -> &[HermitianMatrix] {
        &self.elements
    }

    /// Number of decision outcomes `M` (excluding `X₀`).
    pub fn decisions(&self) -> usize {
        self.elements.len() - 1
    }

    /// Reorders the decision outcomes: new element `k` is old element
    /// `perm[k]` (both 0-based over `X₁..X_M`).
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.decisions() {
            return Err(Error::DimensionMismatch {
                expected: self.decisions(),
                found: perm.len(),
            });
        }
        let mut elements = vec![self.elements[0].clone()];
        for &p in perm {
            elements.push(
                self.elements
                    .get(p + 1)
                    .ok_or_else(|| Error::input("permutation index out of range"))?
                    .clone(),
            );
        }
        Ok(Self { elements })
    }
}

/// `ρ_{i₁} ⊗ ⋯ ⊗ ρ_{iₙ}` under the default dimension cap.
pub fn codeword_state(ch: &CqChannel, word: &[usize]) -> Result<DensityOperator> {
    codeword_state_capped(ch, word, DEFAULT_DIM_CAP)
}

pub fn codeword_state_capped(ch: &CqChannel, word: &[usize], cap: usize) -> Result<DensityOperator> {
    let (&first, rest) = word
        .split_first()
        .ok_or_else(|| Error::input("codeword must be nonempty"))?;
    let total = (ch.dim() as f64).powi(word.len() as i32);
    if total > cap as f64 {
        return Err(Error::DimensionLimit {
            dim: if total > usize::MAX as f64 { usize::MAX } else { total as usize },
            cap,
        });
    }
    let mut acc = ch.state(first)?.matrix().clone();
    for &letter in rest {
        acc = hermitian::tensor_capped(&acc, ch.state(letter)?.matrix(), cap)?;
    }
    Ok(DensityOperator { mat: acc })
}

/// `ρ̄_π = Σᵢ πᵢ ρᵢ`.
pub fn average_state(ch: &CqChannel, prior: &Prior) -> Result<DensityOperator> {
    ch.check_prior(prior)?;
    let mats: Vec<&HermitianMatrix> = ch.states.iter().map(|s| s.matrix()).collect();
    let mat = HermitianMatrix::weighted_sum(prior.probs(), &mats)?;
    Ok(DensityOperator { mat })
}

/// `Pe = 1 − (1/M) Σₖ Tr ρ_{uᵏ} Xₖ`; `X₀` never counts as a correct decision.
pub fn average_error(ch: &CqChannel, cb: &Codebook, povm: &Povm) -> Result<f64> {
    cb.check_alphabet(ch.alphabet_size())?;
    if povm.elements.len() != cb.size() + 1 {
        return Err(Error::DimensionMismatch {
            expected: cb.size() + 1,
            found: povm.elements.len(),
        });
    }
    let mut cache: HashMap<&[usize], DensityOperator> = HashMap::new();
    let mut success = 0.0;
    for (k, word) in cb.words().iter().enumerate() {
        if !cache.contains_key(word.as_slice()) {
            cache.insert(word.as_slice(), codeword_state(ch, word)?);
        }
        let rho = &cache[word.as_slice()];
        if rho.dim() != povm.dim() {
            return Err(Error::DimensionMismatch {
                expected: rho.dim(),
                found: povm.dim(),
            });
        }
        success += rho.matrix().trace_product(&povm.elements[k + 1])?;
    }
    Ok(1.0 - success / cb.size() as f64)
}
