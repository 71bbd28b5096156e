//! Evaluable right-hand sides of the transport inequalities and a harness that
//! checks them against the closed forms.
//!
//! Every check produces a [`BoundReport`]; a violated bound is data, not an
//! error. Sample-complexity rates live in [`rates`], seeded random campaigns in
//! [`campaign`].

pub mod campaign;
pub mod rates;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{check_dim, Result};
use crate::gaussian::{entropic_ot, require_finite_eps, sinkhorn_div, wasserstein2_sq, Epsilon, GaussianMeasure};
use crate::linalg::{hs_norm, logdet_i_plus, singular_values, PsdMatrix, SymMatrix};

pub use campaign::{run_campaign, write_violations, BoundsConfig, CampaignOutcome, Violation};
pub use rates::{
    bounded_kernel_rates, general_kernel_rates, two_sample_rate, w2_sample_rate, w2_two_sample_rate, KernelClass,
    RateTriple,
};

/// Relative slack allowed before a bound counts as violated.
pub const HOLD_TOL: f64 = 1e-9;

/// One evaluated inequality `lhs ≤ rhs`. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
}

impl BoundReport {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64) -> BoundReport {
        BoundReport {
            name: name.into(),
            lhs,
            rhs,
            slack: rhs - lhs,
            holds: lhs <= rhs + HOLD_TOL * rhs.abs().max(1.0),
        }
    }
}

fn check_dims(gs: &[&GaussianMeasure]) -> Result<()> {
    let d = gs[0].dim();
    gs.iter().try_for_each(|g| check_dim(d, g.dim()))
}

fn mean_dist_sq(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm_squared()
}

fn cov_hs(g: &GaussianMeasure) -> f64 {
    hs_norm(g.cov.matrix())
}

fn cov_diff_hs(a: &GaussianMeasure, b: &GaussianMeasure) -> f64 {
    hs_norm(&(a.cov.matrix() - b.cov.matrix()))
}

fn cov_diff_trace_norm(a: &GaussianMeasure, b: &GaussianMeasure) -> Result<f64> {
    Ok(a.cov.sub(b.cov.as_sym())?.norms()?.trace_norm)
}

/// `[Σ ‖means‖][‖m_AN − m_A‖ + ‖m_BN − m_B‖]`, shared by both four-measure bounds.
fn mean_product_term(an: &GaussianMeasure, bn: &GaussianMeasure, a: &GaussianMeasure, b: &GaussianMeasure) -> f64 {
    let sum = an.mean.norm() + bn.mean.norm() + a.mean.norm() + b.mean.norm();
    sum * ((&an.mean - &a.mean).norm() + (&bn.mean - &b.mean).norm())
}

/// The three upper bounds on `W₂²`: square-root HS distance, trace norm, and
/// `√d` times the HS distance, in that order.
pub fn w2_upper_bounds(g0: &GaussianMeasure, g1: &GaussianMeasure) -> Result<[BoundReport; 3]> {
    check_dims(&[g0, g1])?;
    let w2 = wasserstein2_sq(g0, g1)?;
    let mean = mean_dist_sq(&g0.mean, &g1.mean);
    let sqrt_gap = hs_norm(&(g0.cov_sqrt()?.matrix() - g1.cov_sqrt()?.matrix()));
    let d = g0.dim() as f64;
    Ok([
        BoundReport::new("w2_sqrt_hs", w2, mean + sqrt_gap * sqrt_gap),
        BoundReport::new("w2_trace_norm", w2, mean + cov_diff_trace_norm(g0, g1)?),
        BoundReport::new("w2_sqrt_dim_hs", w2, mean + d.sqrt() * cov_diff_hs(g0, g1)),
    ])
}

/// `S^ε(g_N, g) ≤ ‖m_N − m‖² + (3/ε)(‖A_N‖_HS + ‖A‖_HS)‖A_N − A‖_HS`.
pub fn sinkhorn_continuity_bound(gn: &GaussianMeasure, g: &GaussianMeasure, eps: f64) -> Result<BoundReport> {
    check_dims(&[gn, g])?;
    let eps = require_finite_eps(eps)?;
    let lhs = sinkhorn_div(gn, g, Epsilon::Finite(eps))?;
    let rhs = mean_dist_sq(&gn.mean, &g.mean) + 3.0 / eps * (cov_hs(gn) + cov_hs(g)) * cov_diff_hs(gn, g);
    Ok(BoundReport::new("sinkhorn_continuity", lhs, rhs))
}

/// Continuity of `OT^ε` under perturbation of both marginals.
pub fn entropic_continuity_bound(
    gan: &GaussianMeasure,
    gbn: &GaussianMeasure,
    ga: &GaussianMeasure,
    gb: &GaussianMeasure,
    eps: f64,
) -> Result<BoundReport> {
    check_dims(&[gan, gbn, ga, gb])?;
    let eps = require_finite_eps(eps)?;
    let e = Epsilon::Finite(eps);
    let lhs = (entropic_ot(gan, gbn, e)? - entropic_ot(ga, gb, e)?).abs();
    let rhs = mean_product_term(gan, gbn, ga, gb)
        + cov_diff_trace_norm(gan, ga)?
        + cov_diff_trace_norm(gbn, gb)?
        + 6.0 / eps * (cov_hs(gan) * cov_diff_hs(gbn, gb) + cov_hs(gb) * cov_diff_hs(gan, ga));
    Ok(BoundReport::new("entropic_continuity", lhs, rhs))
}

/// Continuity of `S^ε` under HS perturbation of both marginals.
pub fn sinkhorn_divergence_continuity_bound(
    gan: &GaussianMeasure,
    gbn: &GaussianMeasure,
    ga: &GaussianMeasure,
    gb: &GaussianMeasure,
    eps: f64,
) -> Result<BoundReport> {
    check_dims(&[gan, gbn, ga, gb])?;
    let eps = require_finite_eps(eps)?;
    let e = Epsilon::Finite(eps);
    let lhs = (sinkhorn_div(gan, gbn, e)? - sinkhorn_div(ga, gb, e)?).abs();
    let (an, bn, a, b) = (cov_hs(gan), cov_hs(gbn), cov_hs(ga), cov_hs(gb));
    let rhs = mean_product_term(gan, gbn, ga, gb)
        + 3.0 / eps * (an + a + 2.0 * b) * cov_diff_hs(gan, ga)
        + 3.0 / eps * (2.0 * an + bn + b) * cov_diff_hs(gbn, gb);
    Ok(BoundReport::new("sinkhorn_divergence_continuity", lhs, rhs))
}

/// `‖A^{1/2} − B^{1/2}‖²_HS ≤ ‖A − B‖_tr`.
pub fn powers_stormer(a: &PsdMatrix, b: &PsdMatrix) -> Result<BoundReport> {
    check_dim(a.dim(), b.dim())?;
    let gap = hs_norm(&(a.sqrt()?.matrix() - b.sqrt()?.matrix()));
    let rhs = a.sub(b.as_sym())?.norms()?.trace_norm;
    Ok(BoundReport::new("powers_stormer", gap * gap, rhs))
}

/// `|log det(I + A) − log det(I + B)| ≤ ‖A − B‖_tr`.
pub fn logdet_lipschitz(a: &PsdMatrix, b: &PsdMatrix) -> Result<BoundReport> {
    check_dim(a.dim(), b.dim())?;
    let lhs = (logdet_i_plus(a.as_sym())? - logdet_i_plus(b.as_sym())?).abs();
    let rhs = a.sub(b.as_sym())?.norms()?.trace_norm;
    Ok(BoundReport::new("logdet_lipschitz", lhs, rhs))
}

/// `‖(I + A)^{1/2} − (I + B)^{1/2}‖_tr ≤ ½‖A − B‖_tr`.
pub fn sqrt_shift_trace_norm(a: &PsdMatrix, b: &PsdMatrix) -> Result<BoundReport> {
    check_dim(a.dim(), b.dim())?;
    let ra = a.as_sym().apply_spectral(|t| (1.0 + t).sqrt())?;
    let rb = b.as_sym().apply_spectral(|t| (1.0 + t).sqrt())?;
    let lhs = ra.sub(&rb)?.norms()?.trace_norm;
    let rhs = 0.5 * a.sub(b.as_sym())?.norms()?.trace_norm;
    Ok(BoundReport::new("sqrt_shift_trace_norm", lhs, rhs))
}

/// `Tr(A^{1/2} B^{1/2}) ≤ Tr[(A^{1/2} B A^{1/2})^{1/2}]`.
pub fn araki_lieb_thirring(a: &PsdMatrix, b: &PsdMatrix) -> Result<BoundReport> {
    check_dim(a.dim(), b.dim())?;
    let ra = a.sqrt()?;
    let lhs = (ra.matrix() * b.sqrt()?.matrix()).trace();
    let sandwich = PsdMatrix::from_sym(&SymMatrix::new(ra.matrix() * b.matrix() * ra.matrix())?)?;
    let rhs: f64 = sandwich.eigenvalues()?.iter().map(|v| v.max(0.0).sqrt()).sum();
    Ok(BoundReport::new("araki_lieb_thirring", lhs, rhs))
}

/// `|Tr X| ≤ ‖X‖_tr` for `X = A^{1/2}B^{1/2}`, with the trace norm from singular values.
fn fidelity_trace_norm(a: &PsdMatrix, b: &PsdMatrix) -> Result<BoundReport> {
    let x = a.sqrt()?.matrix() * b.sqrt()?.matrix();
    let rhs = singular_values(&x)?.sum();
    Ok(BoundReport::new("product_trace_norm", x.trace().abs(), rhs))
}

/// The matrix inequalities behind the continuity results, on a pair of PSD matrices.
pub fn matrix_inequalities(a: &PsdMatrix, b: &PsdMatrix) -> Result<Vec<BoundReport>> {
    Ok(vec![
        powers_stormer(a, b)?,
        logdet_lipschitz(a, b)?,
        sqrt_shift_trace_norm(a, b)?,
        araki_lieb_thirring(a, b)?,
        fidelity_trace_norm(a, b)?,
    ])
}

/// Four-measure continuity checks for `OT^ε` and `S^ε`.
pub fn verify_quadruple(
    gan: &GaussianMeasure,
    gbn: &GaussianMeasure,
    ga: &GaussianMeasure,
    gb: &GaussianMeasure,
    eps: f64,
) -> Result<Vec<BoundReport>> {
    Ok(vec![
        entropic_continuity_bound(gan, gbn, ga, gb, eps)?,
        sinkhorn_divergence_continuity_bound(gan, gbn, ga, gb, eps)?,
    ])
}

/// Every bound that applies to a pair of Gaussians.
///
/// The four-measure bounds are evaluated with one marginal moved at a time:
/// `(g₀, g₁) → (g₁, g₁)` and `(g₁, g₀) → (g₁, g₁)`.
pub fn verify_all(g0: &GaussianMeasure, g1: &GaussianMeasure, eps: f64) -> Result<Vec<BoundReport>> {
    check_dims(&[g0, g1])?;
    let mut out: Vec<BoundReport> = w2_upper_bounds(g0, g1)?.into();
    out.push(sinkhorn_continuity_bound(g0, g1, eps)?);
    out.extend(verify_quadruple(g0, g1, g1, g1, eps)?);
    out.extend(verify_quadruple(g1, g0, g1, g1, eps)?);
    out.extend(matrix_inequalities(&g0.cov, &g1.cov)?);
    Ok(out)
}

/// Writes reports as CSV with the header `name,lhs,rhs,slack,holds`.
pub fn write_reports<W: std::io::Write>(writer: W, reports: &[BoundReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in reports {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
