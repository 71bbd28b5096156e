//! Sample-complexity right-hand sides as plain arithmetic on `(κ, m, n, δ, ε, d)`.
//!
//! Bounded kernels (`sup K(x,x) ≤ κ²`) get the exponential-tail rates built on
//! `b(m) = 2 log(c/δ)/m + √(2 log(c/δ)/m)`; general kernels (`E K(x,x)² ≤ κ⁴`)
//! get the Chebyshev rates in `1/(√m δ)`.

use crate::error::{Error, Result};
use crate::gaussian::require_finite_eps;

/// Which moment assumption the kernel satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelClass {
    Bounded,
    General,
}

/// Deviation bounds for the empirical mean embedding, the empirical covariance
/// operator, and the Sinkhorn divergence to the population Gaussian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateTriple {
    pub mean_rhs: f64,
    pub cov_rhs: f64,
    pub sinkhorn_rhs: f64,
}

fn validate(kappa: f64, m: usize, delta: f64) -> Result<()> {
    if !(kappa.is_finite() && kappa >= 0.0) {
        return Err(Error::InvalidArgument(format!("kappa must be finite and >= 0, got {kappa}")));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("sample size must be >= 1".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// `2L/m + √(2L/m)` with `L = log(c/δ)` already evaluated.
fn tail_bracket(log_term: f64, m: usize) -> f64 {
    let t = 2.0 * log_term / m as f64;
    t + t.sqrt()
}

fn bounded_unchecked(kappa: f64, m: usize, log_term: f64, eps: f64) -> RateTriple {
    let b = tail_bracket(log_term, m);
    let k2 = kappa * kappa;
    RateTriple {
        mean_rhs: kappa * b,
        cov_rhs: 3.0 * k2 * b,
        sinkhorn_rhs: k2 * b * b + 36.0 * k2 * k2 / eps * b,
    }
}

/// Bounded-kernel rates, holding jointly with probability at least `1 − δ`.
pub fn bounded_kernel_rates(kappa: f64, m: usize, delta: f64, eps: f64) -> Result<RateTriple> {
    validate(kappa, m, delta)?;
    let eps = require_finite_eps(eps)?;
    Ok(bounded_unchecked(kappa, m, (4.0 / delta).ln(), eps))
}

fn general_unchecked(kappa: f64, m: usize, delta: f64, eps: f64) -> RateTriple {
    let u = 1.0 / ((m as f64).sqrt() * delta);
    let k2 = kappa * kappa;
    let shape = 3.0 + 2.0 * u;
    RateTriple {
        mean_rhs: 2.0 * kappa * u,
        cov_rhs: 2.0 * k2 * u * shape,
        sinkhorn_rhs: 4.0 * k2 * u * u + 12.0 * k2 * k2 / eps * u * (2.0 + u * shape) * shape,
    }
}

/// General-kernel (finite fourth moment) rates.
pub fn general_kernel_rates(kappa: f64, m: usize, delta: f64, eps: f64) -> Result<RateTriple> {
    validate(kappa, m, delta)?;
    let eps = require_finite_eps(eps)?;
    Ok(general_unchecked(kappa, m, delta, eps))
}

fn two_sample_bounded_unchecked(kappa: f64, m: usize, n: usize, log_term: f64, eps: f64) -> f64 {
    let (bm, bn) = (tail_bracket(log_term, m), tail_bracket(log_term, n));
    let k2 = kappa * kappa;
    4.0 * k2 * (bm + bn) + 72.0 * k2 * k2 / eps * bm + 72.0 * k2 * k2 / eps * bn
}

fn two_sample_general_unchecked(kappa: f64, m: usize, n: usize, delta: f64, eps: f64) -> f64 {
    let (sm, sn) = ((m as f64).sqrt(), (n as f64).sqrt());
    let (um, un) = (1.0 / (sm * delta), 1.0 / (sn * delta));
    let k2 = kappa * kappa;
    let k4 = k2 * k2;
    let (shape_m, shape_n) = (3.0 + 4.0 * um, 3.0 + 4.0 * un);
    16.0 * k2 / delta * (1.0 + um + un) * (1.0 / sm + 1.0 / sn)
        + 48.0 * k4 / eps * um * (2.0 + um * shape_m) * shape_m
        + 48.0 * k4 / eps * un * (2.0 * um * shape_m + un * shape_n + 2.0) * shape_n
}

/// Deviation of the two-sample divergence from its population value.
pub fn two_sample_rate(kappa: f64, m: usize, n: usize, delta: f64, eps: f64, class: KernelClass) -> Result<f64> {
    validate(kappa, m, delta)?;
    validate(kappa, n, delta)?;
    let eps = require_finite_eps(eps)?;
    Ok(match class {
        KernelClass::Bounded => two_sample_bounded_unchecked(kappa, m, n, (8.0 / delta).ln(), eps),
        KernelClass::General => two_sample_general_unchecked(kappa, m, n, delta, eps),
    })
}

fn w2_unchecked(kappa: f64, m: usize, delta: f64, d: usize) -> f64 {
    let u = 1.0 / ((m as f64).sqrt() * delta);
    let k2 = kappa * kappa;
    4.0 * k2 * u * u + 2.0 * k2 * (d as f64).sqrt() * u * (3.0 + 2.0 * u)
}

/// Concentration of `W₂²` between the empirical and population Gaussian on `ℝᵈ`.
pub fn w2_sample_rate(kappa: f64, m: usize, delta: f64, d: usize) -> Result<f64> {
    validate(kappa, m, delta)?;
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    Ok(w2_unchecked(kappa, m, delta, d))
}

/// Two-sample deviation of `W₂` (not squared): `√rate(κ₁, m) + √rate(κ₂, n)`.
pub fn w2_two_sample_rate(kappa1: f64, kappa2: f64, m: usize, n: usize, delta: f64, d: usize) -> Result<f64> {
    Ok(w2_sample_rate(kappa1, m, delta, d)?.sqrt() + w2_sample_rate(kappa2, n, delta, d)?.sqrt())
}
