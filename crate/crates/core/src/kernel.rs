//! Positive-definite kernels and Gram matrices.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVectorView};
use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::gaussian::SampleSet;

/// Kernel family with its parameters.
///
/// Textual form (used by the CLI and config files): `linear`,
/// `gaussian:sigma=1.0`, `laplacian:a=1.0`, `poly:degree=2,offset=0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// `⟨x, y⟩`
    Linear,
    /// `exp(−‖x − y‖² / σ²)` (no factor 2 in the denominator)
    Gaussian { sigma: f64 },
    /// `exp(−a‖x − y‖)`
    Laplacian { a: f64 },
    /// `(⟨x, y⟩ + offset)^degree`
    Polynomial { degree: u32, offset: f64 },
}

impl KernelSpec {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        KernelSpec::Gaussian { sigma }.validated()
    }

    pub fn laplacian(a: f64) -> Result<Self> {
        KernelSpec::Laplacian { a }.validated()
    }

    pub fn polynomial(degree: u32, offset: f64) -> Result<Self> {
        KernelSpec::Polynomial { degree, offset }.validated()
    }

    fn validated(self) -> Result<Self> {
        let ok = match self {
            KernelSpec::Linear => true,
            KernelSpec::Gaussian { sigma } => sigma > 0.0 && sigma.is_finite(),
            KernelSpec::Laplacian { a } => a > 0.0 && a.is_finite(),
            KernelSpec::Polynomial { degree, offset } => {
                degree >= 1 && offset >= 0.0 && offset.is_finite()
            }
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::InvalidArgument(format!("invalid kernel parameters: {self}")))
        }
    }

    /// Translation-invariant kernels have `K(x, x) = 1`.
    pub fn is_translation_invariant(&self) -> bool {
        matches!(self, KernelSpec::Gaussian { .. } | KernelSpec::Laplacian { .. })
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dim(x.len(), y.len())?;
        Ok(self.eval_unchecked(x.iter().copied(), y.iter().copied()))
    }

    fn eval_unchecked(
        &self,
        x: impl Iterator<Item = f64> + Clone,
        y: impl Iterator<Item = f64> + Clone,
    ) -> f64 {
        match *self {
            KernelSpec::Linear => x.zip(y).map(|(a, b)| a * b).sum(),
            KernelSpec::Gaussian { sigma } => {
                let d2: f64 = x.zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (sigma * sigma)).exp()
            }
            KernelSpec::Laplacian { a } => {
                let d2: f64 = x.zip(y).map(|(p, q)| (p - q) * (p - q)).sum();
                (-a * d2.sqrt()).exp()
            }
            KernelSpec::Polynomial { degree, offset } => {
                let dot: f64 = x.zip(y).map(|(a, b)| a * b).sum();
                (dot + offset).powi(degree as i32)
            }
        }
    }

    fn eval_columns(&self, x: DVectorView<'_, f64>, y: DVectorView<'_, f64>) -> f64 {
        self.eval_unchecked(x.iter().copied(), y.iter().copied())
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Linear => write!(f, "linear"),
            KernelSpec::Gaussian { sigma } => write!(f, "gaussian:sigma={sigma}"),
            KernelSpec::Laplacian { a } => write!(f, "laplacian:a={a}"),
            KernelSpec::Polynomial { degree, offset } => {
                write!(f, "poly:degree={degree},offset={offset}")
            }
        }
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (family, params) = match s.split_once(':') {
            Some((f, p)) => (f.trim(), p.trim()),
            None => (s, ""),
        };
        let mut values = Vec::new();
        for part in params.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| {
                Error::InvalidArgument(format!("kernel parameter `{part}` is not key=value"))
            })?;
            let v: f64 = v.trim().parse().map_err(|_| {
                Error::InvalidArgument(format!("kernel parameter `{part}` is not a number"))
            })?;
            values.push((k.trim().to_ascii_lowercase(), v));
        }
        let get = |key: &str, default: Option<f64>| -> Result<f64> {
            values
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| *v)
                .or(default)
                .ok_or_else(|| Error::InvalidArgument(format!("kernel `{s}` needs `{key}`")))
        };
        let known: &[&str] = match family.to_ascii_lowercase().as_str() {
            "linear" => &[],
            "gaussian" | "rbf" => &["sigma"],
            "laplacian" => &["a"],
            "poly" | "polynomial" => &["degree", "offset"],
            other => {
                return Err(Error::InvalidArgument(format!("unknown kernel family `{other}`")))
            }
        };
        if let Some((k, _)) = values.iter().find(|(k, _)| !known.contains(&k.as_str())) {
            return Err(Error::InvalidArgument(format!(
                "unknown parameter `{k}` for kernel `{family}`"
            )));
        }
        match family.to_ascii_lowercase().as_str() {
            "linear" => Ok(KernelSpec::Linear),
            "gaussian" | "rbf" => KernelSpec::gaussian(get("sigma", Some(1.0))?),
            "laplacian" => KernelSpec::laplacian(get("a", Some(1.0))?),
            _ => {
                let degree = get("degree", None)?;
                if degree.fract() != 0.0 || degree < 1.0 {
                    return Err(Error::InvalidArgument(format!(
                        "polynomial degree must be a positive integer, got {degree}"
                    )));
                }
                KernelSpec::polynomial(degree as u32, get("offset", Some(0.0))?)
            }
        }
    }
}

/// `(K[X])ᵢⱼ = K(xᵢ, xⱼ)`, symmetric by construction.
pub fn gram(k: &KernelSpec, x: &SampleSet) -> DMatrix<f64> {
    let m = x.count();
    let data = x.data();
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            (0..=i)
                .map(|j| k.eval_columns(data.column(i), data.column(j)))
                .collect()
        })
        .collect();
    DMatrix::from_fn(m, m, |i, j| if j <= i { rows[i][j] } else { rows[j][i] })
}

/// `(K[X, Y])ᵢⱼ = K(xᵢ, yⱼ)`, an `m × n` matrix.
pub fn cross_gram(k: &KernelSpec, x: &SampleSet, y: &SampleSet) -> Result<DMatrix<f64>> {
    check_dim(x.dim(), y.dim())?;
    let (xd, yd) = (x.data(), y.data());
    let rows: Vec<Vec<f64>> = (0..x.count())
        .into_par_iter()
        .map(|i| {
            (0..y.count())
                .map(|j| k.eval_columns(xd.column(i), yd.column(j)))
                .collect()
        })
        .collect();
    Ok(DMatrix::from_fn(x.count(), y.count(), |i, j| rows[i][j]))
}

/// Plug-in moment constants from a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaEstimate {
    /// `max K(xᵢ, xᵢ)`: the bounded-kernel constant κ².
    pub kappa2: f64,
    /// `(1/m) Σ K(xᵢ, xᵢ)²`: the general-kernel constant κ⁴ bounding `∫K(x,x)² dρ`.
    pub kappa4: f64,
}

/// Returns `(κ², κ⁴)` estimates from the diagonal of the Gram matrix.
pub fn estimate_kappa(k: &KernelSpec, x: &SampleSet) -> KappaEstimate {
    let data = x.data();
    let diag: Vec<f64> = (0..x.count())
        .map(|j| k.eval_columns(data.column(j), data.column(j)))
        .collect();
    let kappa2 = diag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean_sq = diag.iter().map(|v| v * v).sum::<f64>() / diag.len() as f64;
    KappaEstimate {
        kappa2,
        kappa4: mean_sq,
    }
}
