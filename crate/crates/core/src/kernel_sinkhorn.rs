//! Kernel Gaussian-Sinkhorn divergence, kernel Wasserstein distance and MMD
//! between the RKHS Gaussians `N(μ_Φ(X), C_Φ(X))` and `N(μ_Φ(Y), C_Φ(Y))`,
//! computed from Gram matrices only.
//!
//! The covariance operators never appear explicitly. Their nonzero spectra are
//! read off centered Gram matrices:
//!
//! * `λ(C_Φ(X)²) = λ((J_m K[X] J_m / m)²)`,
//! * `λ(C_Φ(X)^{1/2} C_Φ(Y) C_Φ(X)^{1/2}) = λ(B Bᵀ)` with `B = J_m K[X,Y] J_n / √(mn)`,
//!
//! and fed to the same scalar maps as the finite-dimensional closed forms.

use nalgebra::DMatrix;

use crate::error::{check_dim, Result};
use crate::gaussian::{clamp_near_zero, require_finite_eps, Epsilon, PairSpectra, SampleSet, TermBreakdown};
use crate::kernel::{cross_gram, gram, KernelSpec};
use crate::linalg::{self, PsdMatrix};

/// A kernel divergence value with its decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelDivergenceReport {
    pub value: f64,
    pub epsilon: Epsilon,
    pub kernel: KernelSpec,
    pub m: usize,
    pub n: usize,
    pub term_breakdown: TermBreakdown,
}

fn block_sum(k: &DMatrix<f64>) -> f64 {
    k.iter().sum()
}

fn mmd_from_grams(kx: &DMatrix<f64>, ky: &DMatrix<f64>, kxy: &DMatrix<f64>) -> f64 {
    let m = kx.nrows() as f64;
    let n = ky.nrows() as f64;
    block_sum(kx) / (m * m) + block_sum(ky) / (n * n) - 2.0 * block_sum(kxy) / (m * n)
}

/// Trace and squared spectrum of `C_Φ(X)` from its Gram matrix.
fn covariance_terms(kx: &DMatrix<f64>) -> Result<(f64, Vec<f64>)> {
    let m = kx.nrows() as f64;
    let centered = linalg::center_columns_of(linalg::center_rows_of(kx.clone())) / m;
    let cov = PsdMatrix::new(centered)?;
    let squares = cov.eigenvalues()?.iter().map(|v| v * v).collect();
    Ok((cov.trace(), squares))
}

/// All ε-independent spectral data for a pair of samples.
///
/// With the linear kernel this coincides (up to zero padding) with
/// [`PairSpectra::from_gaussians`] on the empirical Gaussians.
pub fn kernel_pair_spectra(k: &KernelSpec, x: &SampleSet, y: &SampleSet) -> Result<PairSpectra> {
    check_dim(x.dim(), y.dim())?;
    let kx = gram(k, x);
    let ky = gram(k, y);
    let kxy = cross_gram(k, x, y)?;
    let mean_sq = mmd_from_grams(&kx, &ky, &kxy);
    let (trace0, self0) = covariance_terms(&kx)?;
    let (trace1, self1) = covariance_terms(&ky)?;
    let scale = 1.0 / ((x.count() * y.count()) as f64).sqrt();
    let b = linalg::center_columns_of(linalg::center_rows_of(kxy)) * scale;
    let cross = linalg::product_psd_spectrum(&b)?.iter().copied().collect();
    Ok(PairSpectra {
        mean_sq,
        trace0,
        trace1,
        self0,
        self1,
        cross,
    })
}

/// Biased (V-statistic) squared MMD.
pub fn mmd_sq(k: &KernelSpec, x: &SampleSet, y: &SampleSet) -> Result<f64> {
    check_dim(x.dim(), y.dim())?;
    let kx = gram(k, x);
    let ky = gram(k, y);
    let kxy = cross_gram(k, x, y)?;
    let raw = mmd_from_grams(&kx, &ky, &kxy);
    let scale = kx.diagonal().amax() + ky.diagonal().amax();
    clamp_near_zero(raw, scale, "squared MMD")
}

/// Kernelized 2-Wasserstein distance (the ε → 0 limit).
pub fn kernel_wasserstein_sq(k: &KernelSpec, x: &SampleSet, y: &SampleSet) -> Result<f64> {
    kernel_pair_spectra(k, x, y)?.wasserstein2_sq()
}

/// Kernel Gaussian-Sinkhorn divergence at any ε, including 0 (kernel Wasserstein)
/// and ∞ (squared MMD).
pub fn kernel_sinkhorn_div(
    k: &KernelSpec,
    x: &SampleSet,
    y: &SampleSet,
    eps: Epsilon,
) -> Result<KernelDivergenceReport> {
    let spectra = kernel_pair_spectra(k, x, y)?;
    report_from_spectra(&spectra, k, x.count(), y.count(), eps)
}

pub fn report_from_spectra(
    spectra: &PairSpectra,
    k: &KernelSpec,
    m: usize,
    n: usize,
    eps: Epsilon,
) -> Result<KernelDivergenceReport> {
    let term_breakdown = spectra.sinkhorn_terms(eps)?;
    Ok(KernelDivergenceReport {
        value: spectra.sinkhorn_div(eps)?,
        epsilon: eps,
        kernel: *k,
        m,
        n,
        term_breakdown,
    })
}

/// Entropic OT between the empirical RKHS Gaussians. Only a finite ε is meaningful.
pub fn kernel_entropic_ot(k: &KernelSpec, x: &SampleSet, y: &SampleSet, eps: f64) -> Result<f64> {
    let eps = require_finite_eps(eps)?;
    kernel_pair_spectra(k, x, y)?.entropic_ot(Epsilon::Finite(eps))
}
