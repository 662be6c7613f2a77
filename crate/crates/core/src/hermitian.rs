//! Dense complex Hermitian matrices.
//!
//! Everything the crate does with operators goes through this module: spectral
//! decomposition by cyclic Jacobi rotations, functions of a matrix evaluated on
//! its spectrum (fractional powers, logarithm, exponential), Kronecker products,
//! and a relatively accurate spectral factorization of weighted power sums
//! `Σ wᵢ Aᵢᵖ` (see [`PowerSum`]).
//!
//! Matrices are stored row-major. All values are immutable once built.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Hermiticity tolerance applied when validating matrix literals.
pub const TOL_HERM: f64 = 1e-12;
/// Eigenvalues in `[-TOL_PSD, 0)` are treated as roundoff and clamped to zero.
pub const TOL_PSD: f64 = 1e-10;
/// Eigenvalues at or below this are treated as zero by [`mat_log`].
pub const EIG_FLOOR: f64 = 1e-300;
/// Default cap on the dimension of Kronecker products.
pub const DEFAULT_DIM_CAP: usize = 4096;
/// Relative threshold defining the support of a matrix for negative powers.
pub const SUPPORT_REL: f64 = 1e-12;

const ROW_NOISE: f64 = 16.0;

const MAX_SWEEPS: usize = 100;
const OFF_DIAG_REL: f64 = 1e-12;

/// A dense Hermitian matrix. Construction symmetrizes `A ← (A + A†)/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl HermitianMatrix {
    /// Builds a matrix from row-major entries, symmetrizing them.
    pub fn new(dim: usize, data: Vec<C64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::input("matrix dimension must be at least 1"));
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::input("matrix entries must be finite"));
        }
        Ok(Self::symmetrized(dim, data))
    }

    /// Like [`HermitianMatrix::new`] but first rejects inputs whose entries
    /// deviate from Hermitian symmetry by more than [`TOL_HERM`] (scaled by the
    /// largest entry magnitude when that exceeds one).
    pub fn new_checked(dim: usize, data: Vec<C64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Self::new(dim, data);
        }
        let scale = data.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
        for j in 0..dim {
            for k in j..dim {
                let dev = (data[j * dim + k] - data[k * dim + j].conj()).norm();
                if dev > TOL_HERM * scale {
                    return Err(Error::input(format!(
                        "matrix is not Hermitian: entry ({j},{k}) deviates by {dev:e}"
                    )));
                }
            }
        }
        Self::new(dim, data)
    }

    fn symmetrized(dim: usize, mut data: Vec<C64>) -> Self {
        for j in 0..dim {
            data[j * dim + j] = C64::new(data[j * dim + j].re, 0.0);
            for k in (j + 1)..dim {
                let avg = (data[j * dim + k] + data[k * dim + j].conj()) * 0.5;
                data[j * dim + k] = avg;
                data[k * dim + j] = avg.conj();
            }
        }
        Self { dim, data }
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> C64) -> Result<Self> {
        let data = (0..dim * dim).map(|idx| f(idx / dim.max(1), idx % dim.max(1))).collect();
        Self::new(dim, data)
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_real_diagonal(&vec![1.0; dim])
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut m = Self::zeros(dim);
        for (j, &d) in diag.iter().enumerate() {
            m.data[j * dim + j] = C64::new(d, 0.0);
        }
        m
    }

    /// The rank-one projector `|ψ⟩⟨ψ|` (not normalized).
    pub fn outer(psi: &[C64]) -> Self {
        let dim = psi.len();
        let mut m = Self::zeros(dim);
        for j in 0..dim {
            for k in 0..dim {
                m.data[j * dim + k] = psi[j] * psi[k].conj();
            }
        }
        Self::symmetrized(dim, m.data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim + col]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|j| self.data[j * self.dim + j].re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    fn zip(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// `Σ wᵢ Aᵢ` over matrices of equal dimension.
    pub fn weighted_sum(weights: &[f64], mats: &[&HermitianMatrix]) -> Result<Self> {
        let first = mats
            .first()
            .ok_or_else(|| Error::input("weighted sum of an empty list"))?;
        if weights.len() != mats.len() {
            return Err(Error::DimensionMismatch {
                expected: mats.len(),
                found: weights.len(),
            });
        }
        let dim = first.dim;
        let mut data = vec![C64::new(0.0, 0.0); dim * dim];
        for (&w, m) in weights.iter().zip(mats) {
            if m.dim != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: m.dim,
                });
            }
            for (acc, &z) in data.iter_mut().zip(&m.data) {
                *acc += z * w;
            }
        }
        Ok(Self::symmetrized(dim, data))
    }

    /// `Re Tr(A B)`, which is exact for Hermitian `A`, `B`.
    pub fn trace_product(&self, other: &Self) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let n = self.dim;
        let mut acc = 0.0;
        for j in 0..n {
            for k in 0..n {
                acc += (self.data[j * n + k] * other.data[k * n + j]).re;
            }
        }
        Ok(acc)
    }

    /// Spectral decomposition by cyclic complex Jacobi rotations.
    pub fn eig(&self) -> Result<SpectralDecomposition> {
        eig_hermitian(self)
    }

    /// Congruence `C† A C` for a general square `C`.
    pub fn congruence(&self, c: &SquareMatrix) -> Result<Self> {
        if c.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: c.dim,
            });
        }
        let a = SquareMatrix {
            dim: self.dim,
            data: self.data.clone(),
        };
        let prod = c.adjoint().matmul(&a).matmul(c);
        Self::new(prod.dim, prod.data)
    }
}

/// A general dense square complex matrix; used for contractions and unitaries.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl SquareMatrix {
    pub fn new(dim: usize, data: Vec<C64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![C64::new(0.0, 0.0); dim * dim];
        for j in 0..dim {
            data[j * dim + j] = C64::new(1.0, 0.0);
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim + col]
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut data = vec![C64::new(0.0, 0.0); n * n];
        for j in 0..n {
            for k in 0..n {
                data[k * n + j] = self.data[j * n + k].conj();
            }
        }
        Self { dim: n, data }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.dim;
        let mut data = vec![C64::new(0.0, 0.0); n * n];
        for j in 0..n {
            for l in 0..n {
                let a = self.data[j * n + l];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for k in 0..n {
                    data[j * n + k] += a * other.data[l * n + k];
                }
            }
        }
        Self { dim: n, data }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    /// Operator (spectral) norm, `sqrt(λ_max(C†C))`.
    pub fn operator_norm(&self) -> Result<f64> {
        let gram = self.adjoint().matmul(self);
        let h = HermitianMatrix::new(self.dim, gram.data)?;
        Ok(max_eigenvalue(&h)?.max(0.0).sqrt())
    }
}

/// Eigenvalues (ascending) and orthonormal eigenvectors stored as columns.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    // row-major dim x dim; column k is the k-th eigenvector
    vectors: Vec<C64>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Component `row` of eigenvector `k`.
    pub fn vector_entry(&self, row: usize, k: usize) -> C64 {
        self.vectors[row * self.dim() + k]
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        (0..self.dim()).map(|r| self.vector_entry(r, k)).collect()
    }

    /// Eigenvector matrix `V` as a general square matrix.
    pub fn eigenvectors(&self) -> SquareMatrix {
        SquareMatrix {
            dim: self.dim(),
            data: self.vectors.clone(),
        }
    }

    /// `V · diag(f(λ)) · V†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let n = self.dim();
        let fl: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut data = vec![C64::new(0.0, 0.0); n * n];
        for (k, &w) in fl.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for j in 0..n {
                let vj = self.vectors[j * n + k] * w;
                for l in 0..n {
                    data[j * n + l] += vj * self.vectors[l * n + k].conj();
                }
            }
        }
        HermitianMatrix::symmetrized(n, data)
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.map(|l| l)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }

    fn check_psd(&self) -> Result<()> {
        let min = self.min_eigenvalue();
        if min < -TOL_PSD {
            return Err(Error::NotPsd { eigenvalue: min });
        }
        Ok(())
    }
}

fn off_diagonal_norm(a: &[C64], n: usize) -> f64 {
    let mut acc = 0.0;
    for j in 0..n {
        for k in 0..n {
            if j != k {
                acc += a[j * n + k].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Jacobi rotation zeroing the `(p, q)` entry of the 2×2 Hermitian block
/// `[[app, apq], [conj(apq), aqq]]`. Returns `(c, s, phase)` with the unitary
/// `J = [[c, s], [-s·conj(phase), c·conj(phase)]]`.
fn jacobi_rotation(app: f64, aqq: f64, apq: C64) -> (f64, f64, C64) {
    let abs = apq.norm();
    let phase = apq / abs;
    let theta = (aqq - app) / (2.0 * abs);
    let t = if theta.is_infinite() {
        0.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    (c, t * c, phase)
}

/// Spectral decomposition of a Hermitian matrix: cyclic Jacobi sweeps until the
/// off-diagonal Frobenius norm drops below `1e-12·‖A‖_F`, at most 100 sweeps.
pub fn eig_hermitian(a: &HermitianMatrix) -> Result<SpectralDecomposition> {
    let n = a.dim;
    let mut m = a.data.clone();
    let mut v = SquareMatrix::identity(n).data;
    let norm = a.frobenius_norm();
    let thresh = OFF_DIAG_REL * norm;

    let mut converged = n == 1 || norm == 0.0;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        if off_diagonal_norm(&m, n) <= thresh {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.norm() <= f64::MIN_POSITIVE {
                    continue;
                }
                let (c, s, phase) = jacobi_rotation(m[p * n + p].re, m[q * n + q].re, apq);
                let pc = phase.conj();
                // A <- A J
                for r in 0..n {
                    let arp = m[r * n + p];
                    let arq = m[r * n + q];
                    m[r * n + p] = arp * c - arq * pc * s;
                    m[r * n + q] = arp * s + arq * pc * c;
                }
                // A <- J† A
                for r in 0..n {
                    let apr = m[p * n + r];
                    let aqr = m[q * n + r];
                    m[p * n + r] = apr * c - aqr * phase * s;
                    m[q * n + r] = apr * s + aqr * phase * c;
                }
                m[p * n + q] = C64::new(0.0, 0.0);
                m[q * n + p] = C64::new(0.0, 0.0);
                m[p * n + p].im = 0.0;
                m[q * n + q].im = 0.0;
                // V <- V J
                for r in 0..n {
                    let vrp = v[r * n + p];
                    let vrq = v[r * n + q];
                    v[r * n + p] = vrp * c - vrq * pc * s;
                    v[r * n + q] = vrp * s + vrq * pc * c;
                }
            }
        }
    }
    if !converged {
        let residual = off_diagonal_norm(&m, n);
        if residual > thresh {
            return Err(Error::NotConverged { dim: n, residual });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[x * n + x].re.total_cmp(&m[y * n + y].re));
    let eigenvalues = order.iter().map(|&k| m[k * n + k].re).collect();
    let mut vectors = vec![C64::new(0.0, 0.0); n * n];
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors[r * n + dst] = v[r * n + src];
        }
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        vectors,
    })
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::param(format!("matrix power exponent must be positive, got {p}")));
    }
    Ok(())
}

/// `A^p` for PSD `A` and `p > 0`, with `0^p := 0`.
pub fn mat_power(a: &HermitianMatrix, p: f64) -> Result<HermitianMatrix> {
    check_exponent(p)?;
    let eig = a.eig()?;
    eig.check_psd()?;
    if p == 1.0 {
        return Ok(a.clone());
    }
    Ok(eig.map(|l| if l > 0.0 { l.powf(p) } else { 0.0 }))
}

/// `A^p` for any real `p`, taken on the support of `A`: eigenvalues at or
/// below `SUPPORT_REL · λ_max` are mapped to zero.
pub fn mat_power_on_support(a: &HermitianMatrix, p: f64) -> Result<HermitianMatrix> {
    if !p.is_finite() {
        return Err(Error::param("matrix power exponent must be finite"));
    }
    let eig = a.eig()?;
    eig.check_psd()?;
    let cutoff = SUPPORT_REL * eig.max_eigenvalue().max(0.0);
    Ok(eig.map(|l| if l > cutoff && l > 0.0 { l.powf(p) } else { 0.0 }))
}

/// Natural logarithm on the support of a PSD matrix; eigenvalues at or below
/// [`EIG_FLOOR`] map to zero.
pub fn mat_log(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    let eig = a.eig()?;
    eig.check_psd()?;
    Ok(eig.map(|l| if l > EIG_FLOOR { l.ln() } else { 0.0 }))
}

pub fn mat_exp(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    Ok(a.eig()?.map(f64::exp))
}

/// Kronecker product under the default dimension cap.
pub fn tensor(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<HermitianMatrix> {
    tensor_capped(a, b, DEFAULT_DIM_CAP)
}

/// Kronecker product with composite index `j = j₁·dim_B + j₂`.
pub fn tensor_capped(a: &HermitianMatrix, b: &HermitianMatrix, cap: usize) -> Result<HermitianMatrix> {
    let dim = a
        .dim
        .checked_mul(b.dim)
        .ok_or(Error::DimensionLimit { dim: usize::MAX, cap })?;
    if dim > cap {
        return Err(Error::DimensionLimit { dim, cap });
    }
    let (na, nb) = (a.dim, b.dim);
    let mut data = vec![C64::new(0.0, 0.0); dim * dim];
    for j1 in 0..na {
        for k1 in 0..na {
            let x = a.data[j1 * na + k1];
            if x == C64::new(0.0, 0.0) {
                continue;
            }
            for j2 in 0..nb {
                let row = (j1 * nb + j2) * dim;
                for k2 in 0..nb {
                    data[row + k1 * nb + k2] = x * b.data[j2 * nb + k2];
                }
            }
        }
    }
    Ok(HermitianMatrix { dim, data })
}

/// `Σ |λᵢ|`.
pub fn trace_norm(a: &HermitianMatrix) -> Result<f64> {
    Ok(a.eig()?.eigenvalues.iter().map(|l| l.abs()).sum())
}

pub fn min_eigenvalue(a: &HermitianMatrix) -> Result<f64> {
    Ok(a.eig()?.min_eigenvalue())
}

pub fn max_eigenvalue(a: &HermitianMatrix) -> Result<f64> {
    Ok(a.eig()?.max_eigenvalue())
}

/// Square-root factor of `Aᵖ`: rows `rⱼ = λⱼ^{p/2} vⱼ†` with `Aᵖ = Σⱼ rⱼ† rⱼ`.
///
/// Keeping the factor instead of the product preserves the relative accuracy
/// of small eigenvalues when `p` is large, which matters for `ρ^{1/β}` with
/// `β` close to zero.
#[derive(Clone, Debug)]
pub struct PowerRoot {
    dim: usize,
    exponent: f64,
    rows: Vec<Vec<C64>>,
}

impl PowerRoot {
    pub fn new(a: &HermitianMatrix, p: f64) -> Result<Self> {
        check_exponent(p)?;
        Self::from_spectral(&a.eig()?, p)
    }

    pub fn from_spectral(eig: &SpectralDecomposition, p: f64) -> Result<Self> {
        check_exponent(p)?;
        eig.check_psd()?;
        let dim = eig.dim();
        // eigenvalues at roundoff level of the decomposition are treated as zero
        let floor = dim as f64 * f64::EPSILON * eig.max_eigenvalue().max(0.0);
        let rows = (0..dim)
            .filter(|&k| eig.eigenvalues[k] > floor)
            .filter_map(|k| {
                let scale = eig.eigenvalues[k].powf(p / 2.0);
                (scale > 0.0).then(|| {
                    (0..dim)
                        .map(|r| eig.vector_entry(r, k).conj() * scale)
                        .collect()
                })
            })
            .collect();
        Ok(Self { dim, exponent: p, rows })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// `Aᵖ` as an explicit matrix.
    pub fn to_matrix(&self) -> HermitianMatrix {
        let n = self.dim;
        let mut data = vec![C64::new(0.0, 0.0); n * n];
        for row in &self.rows {
            for j in 0..n {
                for k in 0..n {
                    data[j * n + k] += row[j].conj() * row[k];
                }
            }
        }
        HermitianMatrix::symmetrized(n, data)
    }
}

/// Spectral factorization of `S = Σᵢ wᵢ Aᵢᵖ` computed by one-sided Jacobi
/// orthogonalization of the stacked factor `G` (rows `√wᵢ rⱼ`), so `S = G†G`.
///
/// Right-multiplied rotations keep every row accurate relative to its own
/// scale, so eigenvalues of `S` many orders of magnitude below `‖S‖` are still
/// resolved to high relative accuracy.
#[derive(Clone, Debug)]
pub struct PowerSum {
    dim: usize,
    // squared column norms of W = G J, i.e. eigenvalues of S
    eigenvalues: Vec<f64>,
    // accumulated rotations J (row-major, columns are eigenvectors of S)
    vectors: Vec<C64>,
    // W stored column-major: column k has `rows` entries
    w: Vec<C64>,
    rows: usize,
    // term index owning each row of G
    owner: Vec<usize>,
    terms: usize,
}

impl PowerSum {
    pub fn new(weights: &[f64], roots: &[&PowerRoot]) -> Result<Self> {
        let first = roots
            .first()
            .ok_or_else(|| Error::input("power sum of an empty list"))?;
        if weights.len() != roots.len() {
            return Err(Error::DimensionMismatch {
                expected: roots.len(),
                found: weights.len(),
            });
        }
        let dim = first.dim;
        let mut owner = Vec::new();
        let mut g_rows: Vec<Vec<C64>> = Vec::new();
        for (i, (&w, root)) in weights.iter().zip(roots).enumerate() {
            if root.dim != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: root.dim,
                });
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::param(format!("power-sum weight must be nonnegative, got {w}")));
            }
            if w == 0.0 {
                continue;
            }
            let sw = w.sqrt();
            for row in &root.rows {
                g_rows.push(row.iter().map(|z| z * sw).collect());
                owner.push(i);
            }
        }
        let rows = g_rows.len();
        // column-major copy of G
        let mut w = vec![C64::new(0.0, 0.0); rows * dim];
        for (r, row) in g_rows.iter().enumerate() {
            for c in 0..dim {
                w[c * rows + r] = row[c];
            }
        }
        let mut vectors = SquareMatrix::identity(dim).data;
        one_sided_jacobi(&mut w, rows, dim, &mut vectors)?;
        let mut eigenvalues: Vec<f64> = (0..dim)
            .map(|c| w[c * rows..(c + 1) * rows].iter().map(|z| z.norm_sqr()).sum())
            .collect();
        // rank(S) ≤ rows: anything beyond is rotation roundoff
        if rows < dim {
            let mut order: Vec<usize> = (0..dim).collect();
            order.sort_by(|&a, &b| eigenvalues[a].total_cmp(&eigenvalues[b]));
            for &k in &order[..dim - rows] {
                eigenvalues[k] = 0.0;
            }
        }
        Ok(Self {
            dim,
            eigenvalues,
            vectors,
            w,
            rows,
            owner,
            terms: roots.len(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Eigenvalues of `S`, unordered.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `Tr S^q`.
    pub fn trace_power(&self, q: f64) -> f64 {
        self.eigenvalues
            .iter()
            .filter(|&&l| l > 0.0)
            .map(|&l| l.powf(q))
            .sum()
    }

    /// `S^q` as an explicit matrix (`0^q := 0`).
    pub fn power(&self, q: f64) -> HermitianMatrix {
        let n = self.dim;
        let mut data = vec![C64::new(0.0, 0.0); n * n];
        for (k, &l) in self.eigenvalues.iter().enumerate() {
            if l <= 0.0 {
                continue;
            }
            let w = l.powf(q);
            for j in 0..n {
                let vj = self.vectors[j * n + k] * w;
                for m in 0..n {
                    data[j * n + m] += vj * self.vectors[m * n + k].conj();
                }
            }
        }
        HermitianMatrix::symmetrized(n, data)
    }

    /// For each term `i`, `wᵢ · Tr(S^{q-1} Aᵢᵖ)` with the negative power taken
    /// on the support of `S`. Terms with zero weight report zero; use
    /// [`PowerSum::pairing`] for those.
    pub fn weighted_pairings(&self, q: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.terms];
        for (k, &l) in self.eigenvalues.iter().enumerate() {
            if l <= 0.0 {
                continue;
            }
            let lq = l.powf(q);
            let col = &self.w[k * self.rows..(k + 1) * self.rows];
            for (r, z) in col.iter().enumerate() {
                out[self.owner[r]] += (z.norm_sqr() / l) * lq;
            }
        }
        out
    }

    /// `Tr(S^{q-1} Aᵖ)` for an arbitrary root, using eigenvalues of `S` above
    /// `SUPPORT_REL · λ_max` only.
    pub fn pairing(&self, root: &PowerRoot, q: f64) -> Result<f64> {
        if root.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: root.dim,
            });
        }
        let n = self.dim;
        let lmax = self.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let cutoff = SUPPORT_REL * lmax;
        let mut acc = 0.0;
        for (k, &l) in self.eigenvalues.iter().enumerate() {
            if l <= cutoff || l <= 0.0 {
                continue;
            }
            let lq = l.powf(q - 1.0);
            for row in &root.rows {
                let overlap: C64 = (0..n).map(|j| row[j] * self.vectors[j * n + k]).sum();
                acc += overlap.norm_sqr() * lq;
            }
        }
        Ok(acc)
    }
}

/// Orthogonalizes the columns of the `rows × cols` column-major matrix `w` by
/// right-multiplied Jacobi rotations, accumulating them into `v`.
fn one_sided_jacobi(w: &mut [C64], rows: usize, cols: usize, v: &mut [C64]) -> Result<()> {
    let tol = 1e-15 * (rows.max(1) as f64);
    // rotations preserve row norms; entries far below their row's norm are
    // cancellation residue
    let row_floor: Vec<f64> = (0..rows)
        .map(|r| {
            let norm2: f64 = (0..cols).map(|c| w[c * rows + r].norm_sqr()).sum();
            ROW_NOISE * cols as f64 * f64::EPSILON * norm2.sqrt()
        })
        .collect();
    let is_noise = |col: &[C64]| col.iter().zip(&row_floor).all(|(z, f)| z.norm() <= *f);
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols.saturating_sub(1) {
            for q in (p + 1)..cols {
                let (cp, cq) = (&w[p * rows..(p + 1) * rows], &w[q * rows..(q + 1) * rows]);
                let alpha: f64 = cp.iter().map(|z| z.norm_sqr()).sum();
                let gamma: f64 = cq.iter().map(|z| z.norm_sqr()).sum();
                let zeta: C64 = cp.iter().zip(cq).map(|(a, b)| a.conj() * b).sum();
                if zeta.norm() <= tol * (alpha * gamma).sqrt() || zeta.norm() <= f64::MIN_POSITIVE {
                    continue;
                }
                if is_noise(if alpha < gamma { cp } else { cq }) {
                    continue;
                }
                rotated = true;
                let (c, s, phase) = jacobi_rotation(alpha, gamma, zeta);
                let pc = phase.conj();
                for r in 0..rows {
                    let a = w[p * rows + r];
                    let b = w[q * rows + r];
                    w[p * rows + r] = a * c - b * pc * s;
                    w[q * rows + r] = a * s + b * pc * c;
                }
                for r in 0..cols {
                    let a = v[r * cols + p];
                    let b = v[r * cols + q];
                    v[r * cols + p] = a * c - b * pc * s;
                    v[r * cols + q] = a * s + b * pc * c;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        let mut residual: f64 = 0.0;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let z: C64 = (0..rows).map(|r| w[p * rows + r].conj() * w[q * rows + r]).sum();
                residual = residual.max(z.norm());
            }
        }
        return Err(Error::NotConverged { dim: cols, residual });
    }
    for c in 0..cols {
        let col = &mut w[c * rows..(c + 1) * rows];
        if col.iter().zip(&row_floor).all(|(z, f)| z.norm() <= *f) {
            col.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        }
    }
    Ok(())
}
