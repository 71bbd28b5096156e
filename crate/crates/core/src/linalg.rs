//! Symmetric-matrix functional calculus.
//!
//! Every operator formula in the crate (square roots, `Tr`, `log det(I + ·)`,
//! the `M^ε` maps) goes through a single pathway: a symmetric eigendecomposition
//! followed by a scalar map on the eigenvalues. The decomposition is cached on
//! the matrix so that traces, log-determinants and square roots computed from
//! the same matrix share one spectrum.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{check_dim, Error, Result};

/// Default relative tolerance used when clamping eigenvalue dust to zero.
pub const DEFAULT_CLAMP_TOL: f64 = 1e-12;

/// Factor by which a negative eigenvalue may exceed the clamping tolerance
/// before the input is declared genuinely indefinite.
const INDEFINITE_GUARD_FACTOR: f64 = 100.0;

/// Eigenvalues (descending) and the matching orthonormal eigenvectors (columns).
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl Spectrum {
    /// `V · diag(values) · Vᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        reconstruct(&self.vectors, &self.values)
    }
}

fn reconstruct(vectors: &DMatrix<f64>, values: &DVector<f64>) -> DMatrix<f64> {
    let mut scaled = vectors.clone();
    for (mut col, &v) in scaled.column_iter_mut().zip(values.iter()) {
        col *= v;
    }
    let mut out = scaled * vectors.transpose();
    symmetrize_in_place(&mut out);
    out
}

fn symmetrize_in_place(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

fn is_diagonal(m: &DMatrix<f64>) -> bool {
    m.iter()
        .enumerate()
        .all(|(k, &v)| v == 0.0 || k % m.nrows() == k / m.nrows())
}

/// Dense real symmetric matrix with a lazily computed, cached spectrum.
#[derive(Debug)]
pub struct SymMatrix {
    entries: DMatrix<f64>,
    spectrum: OnceLock<Spectrum>,
}

impl Clone for SymMatrix {
    fn clone(&self) -> Self {
        let spectrum = OnceLock::new();
        if let Some(s) = self.spectrum.get() {
            let _ = spectrum.set(s.clone());
        }
        Self {
            entries: self.entries.clone(),
            spectrum,
        }
    }
}

impl PartialEq for SymMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl SymMatrix {
    /// Builds a symmetric matrix from a square input, symmetrizing it as `(A + Aᵀ)/2`.
    pub fn new(mut entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::InvalidMatrix(format!(
                "expected a square matrix, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.nrows() == 0 {
            return Err(Error::InvalidMatrix("matrix must have dimension >= 1".into()));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix("matrix has non-finite entries".into()));
        }
        symmetrize_in_place(&mut entries);
        Ok(Self {
            entries,
            spectrum: OnceLock::new(),
        })
    }

    pub fn from_row_slice(dim: usize, data: &[f64]) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::InvalidMatrix(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(dim, dim, data))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim)).expect("identity is a valid symmetric matrix")
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(DMatrix::zeros(dim, dim)).expect("zero is a valid symmetric matrix")
    }

    /// Builds a matrix whose spectrum is already known; the entries are reconstructed.
    fn from_spectrum(spectrum: Spectrum) -> Self {
        let entries = spectrum.reconstruct();
        let cell = OnceLock::new();
        let _ = cell.set(spectrum);
        Self {
            entries,
            spectrum: cell,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }

    /// Symmetric eigendecomposition, computed once and cached.
    pub fn spectrum(&self) -> Result<&Spectrum> {
        if let Some(s) = self.spectrum.get() {
            return Ok(s);
        }
        let computed = sym_eigen(&self.entries)?;
        // A concurrent caller may have won the race; either value is identical.
        let _ = self.spectrum.set(computed);
        Ok(self.spectrum.get().expect("spectrum was just set"))
    }

    pub fn eigenvalues(&self) -> Result<&DVector<f64>> {
        Ok(&self.spectrum()?.values)
    }

    pub fn scale(&self, factor: f64) -> Result<SymMatrix> {
        SymMatrix::new(&self.entries * factor)
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<SymMatrix> {
        check_dim(self.dim(), other.dim())?;
        SymMatrix::new(&self.entries - &other.entries)
    }

    pub fn add(&self, other: &SymMatrix) -> Result<SymMatrix> {
        check_dim(self.dim(), other.dim())?;
        SymMatrix::new(&self.entries + &other.entries)
    }

    /// `f(A) = V · diag(f(λ)) · Vᵀ`.
    pub fn apply_spectral(&self, f: impl Fn(f64) -> f64) -> Result<SymMatrix> {
        apply_spectral(self, f)
    }

    pub fn norms(&self) -> Result<Norms> {
        norms(self)
    }
}

fn sym_eigen(a: &DMatrix<f64>) -> Result<Spectrum> {
    let n = a.nrows();
    let (raw_values, raw_vectors) = if is_diagonal(a) {
        (a.diagonal(), DMatrix::identity(n, n))
    } else {
        let eig = SymmetricEigen::try_new(a.clone(), f64::EPSILON, 0).ok_or_else(|| {
            Error::NumericalFailure("symmetric eigensolver did not converge".into())
        })?;
        (eig.eigenvalues, eig.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps ties in solver order.
    order.sort_by(|&i, &j| raw_values[j].total_cmp(&raw_values[i]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| raw_values[i]));
    let vectors = DMatrix::from_fn(n, n, |r, c| raw_vectors[(r, order[c])]);
    Ok(Spectrum { values, vectors })
}

/// Eigenvalues (descending) and eigenvectors of a symmetric matrix.
pub fn eigen(a: &SymMatrix) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let s = a.spectrum()?;
    Ok((s.values.clone(), s.vectors.clone()))
}

/// Symmetric matrix whose eigenvalues are all nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdMatrix(SymMatrix);

impl PsdMatrix {
    /// Symmetrizes and clamps with [`DEFAULT_CLAMP_TOL`].
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        clamp_psd(&SymMatrix::new(entries)?, DEFAULT_CLAMP_TOL)
    }

    pub fn from_sym(a: &SymMatrix) -> Result<Self> {
        clamp_psd(a, DEFAULT_CLAMP_TOL)
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::from_sym(&SymMatrix::from_diagonal(diag)?)
    }

    pub fn identity(dim: usize) -> Self {
        PsdMatrix(SymMatrix::identity(dim))
    }

    pub fn zeros(dim: usize) -> Self {
        PsdMatrix(SymMatrix::zeros(dim))
    }

    pub fn as_sym(&self) -> &SymMatrix {
        &self.0
    }

    pub fn into_sym(self) -> SymMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        self.0.matrix()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn eigenvalues(&self) -> Result<&DVector<f64>> {
        self.0.eigenvalues()
    }

    /// Multiplies by a nonnegative factor.
    pub fn scale(&self, factor: f64) -> Result<PsdMatrix> {
        if !factor.is_finite() || factor < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "PSD scale factor must be finite and nonnegative, got {factor}"
            )));
        }
        PsdMatrix::from_sym(&self.0.scale(factor)?)
    }

    pub fn sqrt(&self) -> Result<PsdMatrix> {
        sqrt_psd(self)
    }

    pub fn norms(&self) -> Result<Norms> {
        norms(&self.0)
    }
}

impl std::ops::Deref for PsdMatrix {
    type Target = SymMatrix;

    fn deref(&self) -> &SymMatrix {
        &self.0
    }
}

/// Zeroes eigenvalues below `rel_tol · max(|λ|, 1)`.
///
/// Fails with [`Error::IndefiniteMatrix`] when an eigenvalue is more negative
/// than `100 · rel_tol · max(|λ|, 1)`. Inputs that need no clamping are returned
/// with their entries untouched.
pub fn clamp_psd(a: &SymMatrix, rel_tol: f64) -> Result<PsdMatrix> {
    if rel_tol.is_nan() || rel_tol < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "clamping tolerance must be nonnegative, got {rel_tol}"
        )));
    }
    let spec = a.spectrum()?;
    let scale = spec.values.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let threshold = rel_tol * scale;
    let guard = -INDEFINITE_GUARD_FACTOR * threshold;
    if let Some(&worst) = spec.values.iter().min_by(|x, y| x.total_cmp(y)) {
        if worst < guard {
            return Err(Error::IndefiniteMatrix {
                eigenvalue: worst,
                guard,
            });
        }
    }
    let needs_clamp = spec.values.iter().any(|&v| v != 0.0 && v < threshold);
    if !needs_clamp {
        return Ok(PsdMatrix(a.clone()));
    }
    let values = spec
        .values
        .map(|v| if v < threshold { 0.0 } else { v });
    Ok(PsdMatrix(SymMatrix::from_spectrum(Spectrum {
        values,
        vectors: spec.vectors.clone(),
    })))
}

/// Principal square root of a PSD matrix.
pub fn sqrt_psd(a: &PsdMatrix) -> Result<PsdMatrix> {
    let spec = a.spectrum()?;
    let values = spec.values.map(|v| v.max(0.0).sqrt());
    Ok(PsdMatrix(SymMatrix::from_spectrum(Spectrum {
        values,
        vectors: spec.vectors.clone(),
    })))
}

/// `V · diag(f(λ)) · Vᵀ`; fails with a domain error when `f` is non-finite at an eigenvalue.
pub fn apply_spectral(a: &SymMatrix, f: impl Fn(f64) -> f64) -> Result<SymMatrix> {
    let spec = a.spectrum()?;
    let mut mapped = Vec::with_capacity(spec.values.len());
    for &v in spec.values.iter() {
        let fv = f(v);
        if !fv.is_finite() {
            return Err(Error::Domain(format!(
                "spectral function is undefined at eigenvalue {v}"
            )));
        }
        mapped.push(fv);
    }
    let n = mapped.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| mapped[j].total_cmp(&mapped[i]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| mapped[i]));
    let vectors = DMatrix::from_fn(n, n, |r, c| spec.vectors[(r, order[c])]);
    Ok(SymMatrix::from_spectrum(Spectrum { values, vectors }))
}

/// Trace and the three Schatten-type norms of a symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub trace: f64,
    pub trace_norm: f64,
    pub hs_norm: f64,
    pub op_norm: f64,
}

impl Norms {
    pub fn from_eigenvalues<'a>(values: impl IntoIterator<Item = &'a f64>) -> Norms {
        let mut n = Norms {
            trace: 0.0,
            trace_norm: 0.0,
            hs_norm: 0.0,
            op_norm: 0.0,
        };
        for &v in values {
            n.trace += v;
            n.trace_norm += v.abs();
            n.hs_norm += v * v;
            n.op_norm = n.op_norm.max(v.abs());
        }
        n.hs_norm = n.hs_norm.sqrt();
        n
    }
}

pub fn norms(a: &SymMatrix) -> Result<Norms> {
    Ok(Norms::from_eigenvalues(a.eigenvalues()?.iter()))
}

/// Frobenius (Hilbert-Schmidt) norm straight from the entries; no decomposition needed.
pub fn hs_norm(a: &DMatrix<f64>) -> f64 {
    a.norm()
}

/// `Σ log(1 + λᵢ)`.
pub fn logdet_i_plus(a: &SymMatrix) -> Result<f64> {
    logdet_i_plus_values(a.eigenvalues()?.iter().copied())
}

pub(crate) fn logdet_i_plus_values(values: impl IntoIterator<Item = f64>) -> Result<f64> {
    let mut total = 0.0;
    for v in values {
        if v <= -1.0 {
            return Err(Error::Domain(format!(
                "log det(I + A) requires eigenvalues > -1, found {v}"
            )));
        }
        total += v.ln_1p();
    }
    Ok(total)
}

/// `J_m = I_m − (1/m) 1 1ᵀ`.
pub fn centering_matrix(m: usize) -> Result<SymMatrix> {
    if m == 0 {
        return Err(Error::InvalidArgument("centering matrix needs m >= 1".into()));
    }
    let inv = 1.0 / m as f64;
    SymMatrix::new(DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            1.0 - inv
        } else {
            -inv
        }
    }))
}

/// Right-multiplies by `J_n` without forming it: subtracts each row's mean.
pub(crate) fn center_columns_of(mut b: DMatrix<f64>) -> DMatrix<f64> {
    for mut row in b.row_iter_mut() {
        let mean = row.mean();
        row.add_scalar_mut(-mean);
    }
    b
}

/// Left-multiplies by `J_m` without forming it: subtracts each column's mean.
pub(crate) fn center_rows_of(mut b: DMatrix<f64>) -> DMatrix<f64> {
    for mut col in b.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    b
}

/// Singular values of a rectangular matrix, descending.
pub fn singular_values(b: &DMatrix<f64>) -> Result<DVector<f64>> {
    let k = b.nrows().min(b.ncols());
    let mut values: Vec<f64> = if is_diagonal(b) {
        (0..k).map(|i| b[(i, i)].abs()).collect()
    } else {
        let svd = SVD::try_new(b.clone(), false, false, f64::EPSILON, 0).ok_or_else(|| {
            Error::NumericalFailure("singular value decomposition did not converge".into())
        })?;
        svd.singular_values.iter().map(|v| v.abs()).collect()
    };
    values.sort_by(|x, y| y.total_cmp(x));
    Ok(DVector::from_vec(values))
}

/// Eigenvalues of `B·Bᵀ` (length `rows(B)`, descending, nonnegative).
///
/// Computed as squared singular values of `B`, so no negative dust appears and
/// `√λᵢ` is recovered to full relative accuracy.
pub fn product_psd_spectrum(b: &DMatrix<f64>) -> Result<DVector<f64>> {
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidMatrix("matrix has non-finite entries".into()));
    }
    let m = b.nrows();
    let sv = singular_values(b)?;
    Ok(DVector::from_fn(m, |i, _| {
        sv.get(i).map(|s| s * s).unwrap_or(0.0)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn eigen_identity_and_diagonal() {
        let (vals, vecs) = eigen(&SymMatrix::identity(3)).unwrap();
        assert_eq!(vals.as_slice(), &[1.0, 1.0, 1.0]);
        let vtv = vecs.transpose() * &vecs;
        assert!((vtv - DMatrix::identity(3, 3)).amax() < 1e-12);

        let (vals, _) = eigen(&SymMatrix::from_diagonal(&[4.0, 9.0]).unwrap()).unwrap();
        assert_eq!(vals.as_slice(), &[9.0, 4.0]);
    }

    #[test]
    fn eigen_two_by_two() {
        let a = SymMatrix::from_row_slice(2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        let (vals, vecs) = eigen(&a).unwrap();
        assert!(close(vals[0], 3.0, 1e-14) && close(vals[1], 1.0, 1e-14));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // Eigenvectors are defined up to sign.
        assert!(close(vecs[(0, 0)].abs(), s, 1e-12) && close(vecs[(1, 0)].abs(), s, 1e-12));
        assert!(close(vecs[(0, 0)] * vecs[(1, 0)], 0.5, 1e-12));
        assert!(close(vecs[(0, 1)] * vecs[(1, 1)], -0.5, 1e-12));
    }

    #[test]
    fn construction_symmetrizes_and_rejects_nan() {
        let a = SymMatrix::from_row_slice(2, &[1.0, 2.0, 0.0, 1.0]).unwrap();
        assert_eq!(a.matrix()[(0, 1)], 1.0);
        assert_eq!(a.matrix()[(1, 0)], 1.0);
        assert!(matches!(
            SymMatrix::from_row_slice(2, &[1.0, f64::NAN, 0.0, 1.0]),
            Err(Error::InvalidMatrix(_))
        ));
        assert!(matches!(
            SymMatrix::new(DMatrix::zeros(2, 3)),
            Err(Error::InvalidMatrix(_))
        ));
    }

    #[test]
    fn clamp_round_off_and_indefinite() {
        let a = SymMatrix::from_diagonal(&[1.0, -1e-14]).unwrap();
        let p = clamp_psd(&a, 1e-12).unwrap();
        assert_eq!(p.eigenvalues().unwrap().as_slice(), &[1.0, 0.0]);
        assert_eq!(p.matrix()[(1, 1)], 0.0);

        let bad = SymMatrix::from_diagonal(&[1.0, -0.5]).unwrap();
        assert!(matches!(
            clamp_psd(&bad, 1e-12),
            Err(Error::IndefiniteMatrix { .. })
        ));

        let psd = SymMatrix::from_row_slice(2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        let p = clamp_psd(&psd, 1e-12).unwrap();
        assert_eq!(p.matrix(), psd.matrix());
        assert!(clamp_psd(&psd, -1.0).is_err());
    }

    #[test]
    fn sqrt_cases() {
        let i = PsdMatrix::identity(3);
        assert!((sqrt_psd(&i).unwrap().matrix() - DMatrix::identity(3, 3)).amax() < 1e-15);

        let d = PsdMatrix::from_diagonal(&[4.0, 9.0]).unwrap();
        let r = sqrt_psd(&d).unwrap();
        assert_eq!(r.matrix(), &DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0])));

        // V·diag(√3, 1)·Vᵀ with V = [[1, 1], [1, −1]]/√2.
        let a = PsdMatrix::new(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        let r = sqrt_psd(&a).unwrap();
        let s3 = 3f64.sqrt();
        let expected =
            DMatrix::from_row_slice(2, 2, &[(s3 + 1.0) / 2.0, (s3 - 1.0) / 2.0, (s3 - 1.0) / 2.0, (s3 + 1.0) / 2.0]);
        assert!((r.matrix() - expected).amax() < 1e-14);
    }

    #[test]
    fn apply_spectral_cases() {
        let a = SymMatrix::from_row_slice(2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        let id = apply_spectral(&a, |t| t).unwrap();
        assert!((id.matrix() - a.matrix()).amax() < 1e-14);

        let sq = apply_spectral(&a, |t| t * t).unwrap();
        assert!((sq.matrix() - a.matrix() * a.matrix()).amax() < 1e-13);

        let three = SymMatrix::from_diagonal(&[3.0]).unwrap();
        let r = apply_spectral(&three, |t| -1.0 + (1.0 + t).sqrt()).unwrap();
        assert!(close(r.matrix()[(0, 0)], 1.0, 1e-15));

        let neg = SymMatrix::from_diagonal(&[1.0, -2.0]).unwrap();
        assert!(matches!(apply_spectral(&neg, f64::ln), Err(Error::Domain(_))));
    }

    #[test]
    fn norms_cases() {
        let n = norms(&SymMatrix::from_diagonal(&[3.0, -4.0]).unwrap()).unwrap();
        assert_eq!((n.trace, n.trace_norm, n.hs_norm, n.op_norm), (-1.0, 7.0, 5.0, 4.0));
        let z = norms(&SymMatrix::zeros(3)).unwrap();
        assert_eq!((z.trace, z.trace_norm, z.hs_norm, z.op_norm), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn logdet_cases() {
        assert_eq!(logdet_i_plus(&SymMatrix::zeros(2)).unwrap(), 0.0);
        let a = SymMatrix::from_diagonal(&[1.0, 3.0]).unwrap();
        assert!(close(logdet_i_plus(&a).unwrap(), 2f64.ln() + 4f64.ln(), 1e-15));
        let bad = SymMatrix::from_diagonal(&[1.0, -1.0]).unwrap();
        assert!(matches!(logdet_i_plus(&bad), Err(Error::Domain(_))));
    }

    #[test]
    fn centering_cases() {
        assert_eq!(centering_matrix(1).unwrap().matrix()[(0, 0)], 0.0);
        assert!(centering_matrix(0).is_err());
        let j5 = centering_matrix(5).unwrap();
        assert!((j5.matrix() * DVector::from_element(5, 1.0)).amax() < 1e-15);
        let j4 = centering_matrix(4).unwrap();
        assert!((j4.matrix() * j4.matrix() - j4.matrix()).amax() < 1e-15);

        let b = DMatrix::from_fn(3, 4, |i, j| (i * 4 + j) as f64 * 0.7 - 1.0);
        let jm = centering_matrix(3).unwrap();
        let jn = centering_matrix(4).unwrap();
        let direct = jm.matrix() * &b * jn.matrix();
        let fast = center_columns_of(center_rows_of(b));
        assert!((direct - fast).amax() < 1e-14);
    }

    #[test]
    fn product_spectrum_cases() {
        let z = product_psd_spectrum(&DMatrix::zeros(3, 2)).unwrap();
        assert_eq!(z.as_slice(), &[0.0, 0.0, 0.0]);
        let i = product_psd_spectrum(&DMatrix::identity(2, 2)).unwrap();
        assert_eq!(i.as_slice(), &[1.0, 1.0]);
        // B Bᵀ = [[5, 2], [2, 1]] with eigenvalues 3 ± 2√2.
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        let s = product_psd_spectrum(&b).unwrap();
        let r2 = 2f64.sqrt();
        assert!(close(s[0], 3.0 + 2.0 * r2, 1e-13));
        assert!(close(s[1], 3.0 - 2.0 * r2, 1e-13));
    }
}
