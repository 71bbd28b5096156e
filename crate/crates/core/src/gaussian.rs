//! Gaussian measures on ℝᵈ: exact 2-Wasserstein distance, entropic OT, Sinkhorn
//! divergence, the optimal entropic coupling, sampling and moment formulas.
//!
//! All closed forms are evaluated through [`PairSpectra`], which reduces a pair of
//! Gaussians to three ε-independent spectra:
//!
//! * `λ(C₀²)` and `λ(C₁²)` (the spectra of `Cᵢ^{1/2} Cᵢ Cᵢ^{1/2}`),
//! * `λ(C₀^{1/2} C₁ C₀^{1/2})`, obtained as squared singular values of `C₀^{1/2} C₁^{1/2}`.
//!
//! Evaluating several values of ε for one pair therefore costs a single set of
//! decompositions. The same structure is built from Gram matrices by
//! [`crate::kernel_sinkhorn`].

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, PsdMatrix, SymMatrix};

/// Results this close to zero (relative to the problem scale) are clamped to 0;
/// anything more negative is reported as a numerical failure.
pub const NEGATIVE_CLAMP_TOL: f64 = 1e-9;

/// Entropic regularization strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Epsilon {
    Zero,
    Finite(f64),
    Infinity,
}

impl Epsilon {
    /// A strictly positive, finite ε.
    pub fn finite(value: f64) -> Result<Epsilon> {
        if value > 0.0 && value.is_finite() {
            Ok(Epsilon::Finite(value))
        } else {
            Err(Error::InvalidArgument(format!(
                "finite epsilon must be positive, got {value}"
            )))
        }
    }

    pub fn as_finite(&self) -> Option<f64> {
        match *self {
            Epsilon::Finite(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Epsilon::Zero => write!(f, "0"),
            Epsilon::Finite(v) => write!(f, "{v}"),
            Epsilon::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for Epsilon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Epsilon> {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "+inf" => return Ok(Epsilon::Infinity),
            _ => {}
        }
        let v: f64 = t
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("cannot parse epsilon `{s}`")))?;
        if v == 0.0 {
            Ok(Epsilon::Zero)
        } else if v == f64::INFINITY {
            Ok(Epsilon::Infinity)
        } else {
            Epsilon::finite(v)
        }
    }
}

pub(crate) fn require_finite_eps(eps: f64) -> Result<f64> {
    Epsilon::finite(eps).map(|_| eps)
}

/// `t ↦ −1 + √(1 + t)`, written without cancellation for small `t`.
#[inline]
pub(crate) fn m_map(t: f64) -> f64 {
    let t = t.max(0.0);
    t / (1.0 + (1.0 + t).sqrt())
}

/// `t ↦ log(½ + ½√(1 + t)) = log(1 + ½ m(t))`.
#[inline]
pub(crate) fn half_logdet_map(t: f64) -> f64 {
    (0.5 * m_map(t)).ln_1p()
}

/// Non-centered value guard shared by W₂², OT^ε and S^ε.
pub(crate) fn clamp_near_zero(value: f64, scale: f64, what: &str) -> Result<f64> {
    if value >= 0.0 {
        return Ok(value);
    }
    if value.abs() <= NEGATIVE_CLAMP_TOL * scale.max(1.0) {
        Ok(0.0)
    } else {
        Err(Error::NumericalFailure(format!(
            "{what} evaluated to {value}, below the cancellation guard"
        )))
    }
}

/// Scalar ingredients of every Gaussian closed form for one pair of measures.
#[derive(Debug, Clone)]
pub struct PairSpectra {
    /// `‖m₀ − m₁‖²` (the squared MMD in the kernel setting).
    pub mean_sq: f64,
    pub trace0: f64,
    pub trace1: f64,
    /// Eigenvalues of `C₀²`.
    pub self0: Vec<f64>,
    /// Eigenvalues of `C₁²`.
    pub self1: Vec<f64>,
    /// Eigenvalues of `C₀^{1/2} C₁ C₀^{1/2}`.
    pub cross: Vec<f64>,
}

/// Decomposition of a Sinkhorn-type value into mean, trace and log-det parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermBreakdown {
    pub mean_sq: f64,
    pub trace_terms: f64,
    pub logdet_terms: f64,
}

impl TermBreakdown {
    pub fn total(&self) -> f64 {
        self.mean_sq + self.trace_terms + self.logdet_terms
    }
}

fn sum_map(values: &[f64], c: f64, f: fn(f64) -> f64) -> f64 {
    values.iter().map(|&v| f(c * v)).sum()
}

impl PairSpectra {
    pub fn from_gaussians(g0: &GaussianMeasure, g1: &GaussianMeasure) -> Result<PairSpectra> {
        check_dim(g0.dim(), g1.dim())?;
        let diff = &g0.mean - &g1.mean;
        let sq = |g: &GaussianMeasure| -> Result<Vec<f64>> {
            Ok(g.cov.eigenvalues()?.iter().map(|v| v * v).collect())
        };
        let b = g0.cov_sqrt()?.matrix() * g1.cov_sqrt()?.matrix();
        Ok(PairSpectra {
            mean_sq: diff.norm_squared(),
            trace0: g0.cov.trace(),
            trace1: g1.cov.trace(),
            self0: sq(g0)?,
            self1: sq(g1)?,
            cross: linalg::product_psd_spectrum(&b)?.iter().copied().collect(),
        })
    }

    fn scale(&self) -> f64 {
        self.mean_sq + self.trace0.abs() + self.trace1.abs()
    }

    /// `Tr[(C₀^{1/2} C₁ C₀^{1/2})^{1/2}]`.
    pub fn fidelity(&self) -> f64 {
        self.cross.iter().map(|v| v.max(0.0).sqrt()).sum()
    }

    pub fn wasserstein2_sq(&self) -> Result<f64> {
        let raw = self.mean_sq + self.trace0 + self.trace1 - 2.0 * self.fidelity();
        clamp_near_zero(raw, self.scale(), "squared 2-Wasserstein distance")
    }

    /// Entropic OT; `Zero` gives W₂², `Infinity` the independent-coupling cost.
    pub fn entropic_ot(&self, eps: Epsilon) -> Result<f64> {
        match eps {
            Epsilon::Zero => self.wasserstein2_sq(),
            Epsilon::Infinity => Ok(self.mean_sq + self.trace0 + self.trace1),
            Epsilon::Finite(e) => {
                let c = 16.0 / (e * e);
                let tr_m = sum_map(&self.cross, c, m_map);
                let logdet = sum_map(&self.cross, c, half_logdet_map);
                Ok(self.mean_sq + self.trace0 + self.trace1 - 0.5 * e * tr_m + 0.5 * e * logdet)
            }
        }
    }

    /// Sinkhorn divergence split into its mean, trace and log-det contributions.
    pub fn sinkhorn_terms(&self, eps: Epsilon) -> Result<TermBreakdown> {
        let terms = match eps {
            Epsilon::Zero => TermBreakdown {
                mean_sq: self.mean_sq,
                trace_terms: self.trace0 + self.trace1 - 2.0 * self.fidelity(),
                logdet_terms: 0.0,
            },
            Epsilon::Infinity => TermBreakdown {
                mean_sq: self.mean_sq,
                trace_terms: 0.0,
                logdet_terms: 0.0,
            },
            Epsilon::Finite(e) => {
                let c = 16.0 / (e * e);
                let q = 0.25 * e;
                let trace_terms = q
                    * (sum_map(&self.self0, c, m_map) - 2.0 * sum_map(&self.cross, c, m_map)
                        + sum_map(&self.self1, c, m_map));
                let logdet_terms = q
                    * (2.0 * sum_map(&self.cross, c, half_logdet_map)
                        - sum_map(&self.self0, c, half_logdet_map)
                        - sum_map(&self.self1, c, half_logdet_map));
                TermBreakdown {
                    mean_sq: self.mean_sq,
                    trace_terms,
                    logdet_terms,
                }
            }
        };
        Ok(terms)
    }

    pub fn sinkhorn_div(&self, eps: Epsilon) -> Result<f64> {
        let raw = self.sinkhorn_terms(eps)?.total();
        clamp_near_zero(raw, self.scale(), "Sinkhorn divergence")
    }
}

/// `N(mean, cov)` on ℝᵈ with a PSD (possibly singular) covariance.
#[derive(Debug)]
pub struct GaussianMeasure {
    pub mean: DVector<f64>,
    pub cov: PsdMatrix,
    cov_sqrt: OnceLock<PsdMatrix>,
}

impl Clone for GaussianMeasure {
    fn clone(&self) -> Self {
        let cell = OnceLock::new();
        if let Some(s) = self.cov_sqrt.get() {
            let _ = cell.set(s.clone());
        }
        GaussianMeasure {
            mean: self.mean.clone(),
            cov: self.cov.clone(),
            cov_sqrt: cell,
        }
    }
}

impl PartialEq for GaussianMeasure {
    fn eq(&self, other: &Self) -> bool {
        self.mean == other.mean && self.cov == other.cov
    }
}

impl GaussianMeasure {
    pub fn new(mean: DVector<f64>, cov: PsdMatrix) -> Result<Self> {
        check_dim(mean.len(), cov.dim())?;
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("mean has non-finite entries".into()));
        }
        Ok(GaussianMeasure {
            mean,
            cov,
            cov_sqrt: OnceLock::new(),
        })
    }

    /// Convenience constructor from raw slices; the covariance is given row-major.
    pub fn from_slices(mean: &[f64], cov_row_major: &[f64]) -> Result<Self> {
        let d = mean.len();
        let cov = PsdMatrix::from_sym(&SymMatrix::from_row_slice(d, cov_row_major)?)?;
        Self::new(DVector::from_column_slice(mean), cov)
    }

    pub fn centered(cov: PsdMatrix) -> Self {
        let d = cov.dim();
        Self::new(DVector::zeros(d), cov).expect("dimensions agree by construction")
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `C^{1/2}`, computed once.
    pub fn cov_sqrt(&self) -> Result<&PsdMatrix> {
        if let Some(s) = self.cov_sqrt.get() {
            return Ok(s);
        }
        let s = self.cov.sqrt()?;
        let _ = self.cov_sqrt.set(s);
        Ok(self.cov_sqrt.get().expect("just set"))
    }
}

/// Column-sample matrix: `dim × count`, one sample per column.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    data: DMatrix<f64>,
    pub seed: Option<u64>,
}

impl SampleSet {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.ncols() == 0 || data.nrows() == 0 {
            return Err(Error::InvalidArgument(
                "a sample set needs at least one sample of dimension >= 1".into(),
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("samples contain non-finite values".into()));
        }
        Ok(SampleSet { data, seed: None })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// One inner vector per sample.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::InvalidArgument("no samples given".into()));
        };
        let d = first.len();
        for r in rows {
            check_dim(d, r.len())?;
        }
        Self::new(DMatrix::from_fn(d, rows.len(), |i, j| rows[j][i]))
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn count(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn sample(&self, j: usize) -> nalgebra::DVectorView<'_, f64> {
        self.data.column(j)
    }
}

pub fn wasserstein2_sq(g0: &GaussianMeasure, g1: &GaussianMeasure) -> Result<f64> {
    PairSpectra::from_gaussians(g0, g1)?.wasserstein2_sq()
}

/// `M^ε_{ij} = −I + (I + (16/ε²) Cᵢ^{1/2} Cⱼ Cᵢ^{1/2})^{1/2}`.
pub fn m_eps(ci: &PsdMatrix, cj: &PsdMatrix, eps: f64) -> Result<SymMatrix> {
    check_dim(ci.dim(), cj.dim())?;
    let eps = require_finite_eps(eps)?;
    let c = 16.0 / (eps * eps);
    sandwich(ci, cj)?.apply_spectral(|t| m_map(c * t))
}

/// `Cᵢ^{1/2} Cⱼ Cᵢ^{1/2}` as a symmetric matrix.
fn sandwich(ci: &PsdMatrix, cj: &PsdMatrix) -> Result<SymMatrix> {
    let r = ci.sqrt()?;
    SymMatrix::new(r.matrix() * cj.matrix() * r.matrix())
}

/// Entropic 2-Wasserstein cost `OT^ε`.
///
/// `Epsilon::Infinity` returns `‖m₀ − m₁‖² + Tr C₀ + Tr C₁`, the cost of the
/// independent coupling. This is the analytic ε → ∞ limit of the closed form
/// (its operator terms vanish like 1/ε); it is an extension, not a cited result.
pub fn entropic_ot(g0: &GaussianMeasure, g1: &GaussianMeasure, eps: Epsilon) -> Result<f64> {
    PairSpectra::from_gaussians(g0, g1)?.entropic_ot(eps)
}

/// Sinkhorn divergence `S^ε = OT^ε(μ₀,μ₁) − ½(OT^ε(μ₀,μ₀) + OT^ε(μ₁,μ₁))`.
///
/// `Zero` gives W₂², `Infinity` gives `‖m₀ − m₁‖²`.
pub fn sinkhorn_div(g0: &GaussianMeasure, g1: &GaussianMeasure, eps: Epsilon) -> Result<f64> {
    PairSpectra::from_gaussians(g0, g1)?.sinkhorn_div(eps)
}

/// The unique optimal coupling of the entropic problem, a Gaussian on ℝ²ᵈ.
#[derive(Debug, Clone)]
pub struct EntropicPlan {
    pub mean: DVector<f64>,
    pub c0: PsdMatrix,
    pub c1: PsdMatrix,
    pub cross: DMatrix<f64>,
}

impl EntropicPlan {
    pub fn block_covariance(&self) -> DMatrix<f64> {
        let d = self.c0.dim();
        let mut out = DMatrix::zeros(2 * d, 2 * d);
        out.view_mut((0, 0), (d, d)).copy_from(self.c0.matrix());
        out.view_mut((d, d), (d, d)).copy_from(self.c1.matrix());
        out.view_mut((0, d), (d, d)).copy_from(&self.cross);
        out.view_mut((d, 0), (d, d)).copy_from(&self.cross.transpose());
        out
    }

    /// The joint law as a Gaussian measure; fails if the block matrix is not PSD.
    pub fn joint(&self) -> Result<GaussianMeasure> {
        GaussianMeasure::new(self.mean.clone(), PsdMatrix::new(self.block_covariance())?)
    }
}

/// Optimal entropic plan with cross-covariance
/// `(2/ε) C₀^{1/2} (I + ½ M^ε₀₁)^{-1} C₀^{1/2} C₁`.
pub fn entropic_plan(g0: &GaussianMeasure, g1: &GaussianMeasure, eps: f64) -> Result<EntropicPlan> {
    check_dim(g0.dim(), g1.dim())?;
    let eps = require_finite_eps(eps)?;
    let c = 16.0 / (eps * eps);
    let inv = sandwich(&g0.cov, &g1.cov)?.apply_spectral(|t| 1.0 / (1.0 + 0.5 * m_map(c * t)))?;
    let r0 = g0.cov_sqrt()?.matrix();
    let cross = (2.0 / eps) * (r0 * inv.matrix() * r0 * g1.cov.matrix());
    let d = g0.dim();
    let mean = DVector::from_fn(2 * d, |i, _| {
        if i < d {
            g0.mean[i]
        } else {
            g1.mean[i - d]
        }
    });
    Ok(EntropicPlan {
        mean,
        c0: g0.cov.clone(),
        c1: g1.cov.clone(),
        cross,
    })
}

/// Sample mean and the `1/m`-normalized (maximum-likelihood) covariance.
pub fn empirical_gaussian(samples: &SampleSet) -> Result<GaussianMeasure> {
    let x = samples.data();
    let m = samples.count() as f64;
    let mean = x.column_mean();
    let mut centered = x.clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    let cov = (&centered * centered.transpose()) / m;
    GaussianMeasure::new(mean, PsdMatrix::new(cov)?)
}

/// Draws `count` samples as `mean + C^{1/2} z` with `z` standard normal.
///
/// The generator is ChaCha20 (`rand_chacha`) seeded with `seed_from_u64(seed)`;
/// normals come from `rand_distr::StandardNormal`. Equal seeds give
/// bit-identical output on every platform.
pub fn sample(g: &GaussianMeasure, count: usize, seed: u64) -> Result<SampleSet> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    Ok(sample_with_rng(g, count, &mut rng)?.with_seed(seed))
}

pub(crate) fn standard_normal_matrix<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> DMatrix<f64> {
    // Column-major fill: samples are drawn one column at a time.
    let mut z = DMatrix::zeros(rows, cols);
    for v in z.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    z
}

pub(crate) fn sample_with_rng<R: Rng + ?Sized>(
    g: &GaussianMeasure,
    count: usize,
    rng: &mut R,
) -> Result<SampleSet> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be >= 1".into()));
    }
    let z = standard_normal_matrix(g.dim(), count, rng);
    let mut x = g.cov_sqrt()?.matrix() * z;
    for mut col in x.column_iter_mut() {
        col += &g.mean;
    }
    SampleSet::new(x)
}

/// `E‖x‖⁴ = 2‖C‖²_HS + 4⟨μ, Cμ⟩ + (Tr C + ‖μ‖²)²`.
pub fn fourth_moment(g: &GaussianMeasure) -> f64 {
    let c = g.cov.matrix();
    let hs_sq = c.norm_squared();
    let quad = g.mean.dot(&(c * &g.mean));
    let second = c.trace() + g.mean.norm_squared();
    2.0 * hs_sq + 4.0 * quad + second * second
}

/// `κ = (E‖x‖⁴)^{1/4}`, the linear-kernel moment constant of a Gaussian.
pub fn kappa_gaussian(g: &GaussianMeasure) -> f64 {
    fourth_moment(g).powf(0.25)
}
