//! Covariance sequences on `ℝᴺ` that separate Sinkhorn convergence from
//! 2-Wasserstein and operator-norm convergence.
//!
//! Both variants compare `N(0, A_N)` with the point mass `N(0, 0)` where
//! `A_N = λ_N I_N`:
//!
//! * `trace_gap`: `λ_N = 1/N`. Trace norm stays 1, HS norm → 0, `W₂² = 1`, `S^ε → 0`.
//! * `hs_gap`: `λ_N = 1/√N`. HS norm stays 1, operator norm → 0, `S^ε → 1/ε`.
//!
//! The N-dimensional truncation is exact since `A_N` has rank N, so the
//! scalar forms below hold at every N, not only in the limit.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gaussian::{half_logdet_map, m_map, require_finite_eps, sinkhorn_div, wasserstein2_sq, Epsilon, GaussianMeasure};
use crate::linalg::PsdMatrix;

/// Largest N for which the dense matrix pipeline is run next to the scalar forms.
pub const MATRIX_PATH_LIMIT: usize = 2000;

/// Allowed gap between the matrix pipeline and the scalar forms.
pub const MATRIX_AGREEMENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CounterexampleVariant {
    TraceGap,
    HsGap,
}

impl CounterexampleVariant {
    /// `p` in `λ_N² = N^{−p}`.
    fn power(self) -> f64 {
        match self {
            CounterexampleVariant::TraceGap => 2.0,
            CounterexampleVariant::HsGap => 1.0,
        }
    }

    pub fn eigenvalue(self, n: usize) -> f64 {
        (n as f64).powf(-self.power() / 2.0)
    }
}

impl fmt::Display for CounterexampleVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CounterexampleVariant::TraceGap => "trace_gap",
            CounterexampleVariant::HsGap => "hs_gap",
        })
    }
}

impl FromStr for CounterexampleVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trace_gap" => Ok(CounterexampleVariant::TraceGap),
            "hs_gap" => Ok(CounterexampleVariant::HsGap),
            other => Err(Error::InvalidArgument(format!(
                "unknown counterexample variant `{other}` (expected trace_gap or hs_gap)"
            ))),
        }
    }
}

/// Every tracked quantity at one N.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterexamplePoint {
    pub w2_sq: f64,
    pub sinkhorn: f64,
    pub trace_norm: f64,
    pub hs_norm: f64,
    pub op_norm: f64,
}

impl CounterexamplePoint {
    pub const QUANTITIES: [&'static str; 5] = ["w2_sq", "sinkhorn", "trace_norm", "hs_norm", "op_norm"];

    pub fn values(&self) -> [f64; 5] {
        [self.w2_sq, self.sinkhorn, self.trace_norm, self.hs_norm, self.op_norm]
    }

    fn max_abs_diff(&self, other: &CounterexamplePoint) -> f64 {
        self.values()
            .iter()
            .zip(other.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Closed forms in N; exact for every N ≥ 1.
pub fn scalar_point(variant: CounterexampleVariant, n: usize, eps: f64) -> Result<CounterexamplePoint> {
    let eps = require_finite_eps(eps)?;
    if n == 0 {
        return Err(Error::InvalidArgument("N must be >= 1".into()));
    }
    let nf = n as f64;
    let p = variant.power();
    // t = c²λ² with c = 4/ε.
    let t = 16.0 / (eps * eps) * nf.powf(-p);
    Ok(CounterexamplePoint {
        // N·λ written as one power so that trace_gap gives exactly 1.
        w2_sq: nf.powf(1.0 - p / 2.0),
        sinkhorn: 0.25 * eps * nf * (m_map(t) - half_logdet_map(t)),
        trace_norm: nf.powf(1.0 - p / 2.0),
        hs_norm: nf.powf((1.0 - p) / 2.0),
        op_norm: nf.powf(-p / 2.0),
    })
}

/// The same quantities through the dense Gaussian closed forms on `ℝᴺ`.
pub fn matrix_point(variant: CounterexampleVariant, n: usize, eps: f64) -> Result<CounterexamplePoint> {
    let eps = require_finite_eps(eps)?;
    if n == 0 {
        return Err(Error::InvalidArgument("N must be >= 1".into()));
    }
    let a_n = PsdMatrix::from_diagonal(&vec![variant.eigenvalue(n); n])?;
    let norms = a_n.norms()?;
    let g_n = GaussianMeasure::centered(a_n);
    let g = GaussianMeasure::centered(PsdMatrix::zeros(n));
    Ok(CounterexamplePoint {
        w2_sq: wasserstein2_sq(&g_n, &g)?,
        sinkhorn: sinkhorn_div(&g_n, &g, Epsilon::Finite(eps))?,
        trace_norm: norms.trace_norm,
        hs_norm: norms.hs_norm,
        op_norm: norms.op_norm,
    })
}

/// `N → ∞` limits of each quantity.
pub fn limit_point(variant: CounterexampleVariant, eps: f64) -> CounterexamplePoint {
    match variant {
        CounterexampleVariant::TraceGap => CounterexamplePoint {
            w2_sq: 1.0,
            sinkhorn: 0.0,
            trace_norm: 1.0,
            hs_norm: 0.0,
            op_norm: 0.0,
        },
        // Σ(m(t) − ℓ(t)) ~ N·t/4 = c²/4, so S → (ε/4)(4/ε²) = 1/ε; W₂² and the trace norm diverge.
        CounterexampleVariant::HsGap => CounterexamplePoint {
            w2_sq: f64::INFINITY,
            sinkhorn: 1.0 / eps,
            trace_norm: f64::INFINITY,
            hs_norm: 1.0,
            op_norm: 0.0,
        },
    }
}

/// One evaluated grid point: the value reported, and the matrix cross-check when run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyPoint {
    pub n: usize,
    pub scalar: CounterexamplePoint,
    pub matrix: Option<CounterexamplePoint>,
}

/// Evaluates the sequence on `n_grid`. For `N ≤ MATRIX_PATH_LIMIT` the dense
/// pipeline runs too and must agree with the scalar forms within
/// `MATRIX_AGREEMENT_TOL`, otherwise `NumericalFailure`.
pub fn counterexample_points(n_grid: &[usize], eps: f64, variant: CounterexampleVariant) -> Result<Vec<StudyPoint>> {
    use rayon::prelude::*;
    n_grid
        .par_iter()
        .map(|&n| {
            let scalar = scalar_point(variant, n, eps)?;
            let matrix = if n <= MATRIX_PATH_LIMIT {
                let m = matrix_point(variant, n, eps)?;
                let gap = m.max_abs_diff(&scalar);
                if gap > MATRIX_AGREEMENT_TOL {
                    return Err(Error::NumericalFailure(format!(
                        "{variant} at N = {n}: matrix pipeline differs from closed form by {gap:e}"
                    )));
                }
                Some(m)
            } else {
                None
            };
            Ok(StudyPoint { n, scalar, matrix })
        })
        .collect()
}
