//! Square-root covariance algebra.
//!
//! Covariances are carried as lower-triangular factors `S` with `P = S·Sᵀ`
//! and a nonnegative diagonal. Two kernels cover everything the filters need:
//! a QR-based compound factor of a wide column block, and an O(n²) rank-1
//! update/downdate.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_shape, Error, Result};

/// Lower-triangular square-root factor of a covariance, `P = S·Sᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SqrtFactor(DMatrix<f64>);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateSign {
    Update,
    Downdate,
}

impl SqrtFactor {
    /// Wraps an existing factor. The strict upper triangle is cleared and
    /// columns with a negative diagonal are flipped, which leaves `S·Sᵀ`
    /// unchanged.
    pub fn from_lower(mut s: DMatrix<f64>) -> Result<Self> {
        check_shape(s.is_square(), || {
            format!("factor must be square, got {}x{}", s.nrows(), s.ncols())
        })?;
        s.fill_upper_triangle(0.0, 1);
        normalize_signs(&mut s);
        Ok(Self(s))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    /// `diag(√d)` for nonnegative `d`.
    pub fn from_diagonal(d: &DVector<f64>) -> Result<Self> {
        if d.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::Input(
                "diagonal variances must be nonnegative".into(),
            ));
        }
        Ok(Self(DMatrix::from_diagonal(&d.map(f64::sqrt))))
    }

    /// Cholesky factor of a symmetric positive definite matrix.
    pub fn cholesky(p: &DMatrix<f64>) -> Result<Self> {
        check_shape(p.is_square(), || {
            format!("expected square matrix, got {}x{}", p.nrows(), p.ncols())
        })?;
        let sym = (p + p.transpose()) * 0.5;
        sym.cholesky()
            .map(|c| Self(c.l()))
            .ok_or_else(|| Error::Numerical("matrix is not positive definite".into()))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// `S·Sᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.0 * self.0.transpose()
    }

    /// Solves `S·X = B`. Fails when `S` has a zero on its diagonal.
    pub fn solve_lower(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.0
            .solve_lower_triangular(b)
            .ok_or_else(|| Error::Numerical("singular square-root factor".into()))
    }

    pub fn solve_lower_vec(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        self.0
            .solve_lower_triangular(b)
            .ok_or_else(|| Error::Numerical("singular square-root factor".into()))
    }

    /// Returns `R` with `R·Rᵀ = S·Sᵀ ± w·v·vᵀ`.
    ///
    /// Updates apply a Givens sweep; downdates apply the hyperbolic sweep and
    /// fail with [`Error::DowndateFailure`] as soon as a pivot is not strictly
    /// positive, which happens exactly when the downdated matrix is not
    /// positive definite.
    pub fn rank1_update(&self, v: &DVector<f64>, w: f64, sign: UpdateSign) -> Result<Self> {
        let n = self.n();
        check_shape(v.len() == n, || {
            format!("update vector length {} vs factor size {n}", v.len())
        })?;
        if !(w >= 0.0) || !w.is_finite() {
            return Err(Error::Input(format!(
                "rank-1 weight must be finite and nonnegative, got {w}"
            )));
        }
        let mut l = self.0.clone();
        let mut x: DVector<f64> = v * w.sqrt();
        match sign {
            UpdateSign::Update => {
                for j in 0..n {
                    let (ljj, xj) = (l[(j, j)], x[j]);
                    let r = ljj.hypot(xj);
                    if r == 0.0 {
                        continue;
                    }
                    let (c, s) = (ljj / r, xj / r);
                    l[(j, j)] = r;
                    for i in (j + 1)..n {
                        let lij = l[(i, j)];
                        l[(i, j)] = c * lij + s * x[i];
                        x[i] = c * x[i] - s * lij;
                    }
                }
            }
            UpdateSign::Downdate => {
                for j in 0..n {
                    let (ljj, xj) = (l[(j, j)], x[j]);
                    let r2 = (ljj - xj) * (ljj + xj);
                    if !(r2 > 0.0) {
                        return Err(Error::DowndateFailure);
                    }
                    let r = r2.sqrt();
                    let (c, s) = (r / ljj, xj / ljj);
                    l[(j, j)] = r;
                    for i in (j + 1)..n {
                        let lij = (l[(i, j)] - s * x[i]) / c;
                        l[(i, j)] = lij;
                        x[i] = c * x[i] - s * lij;
                    }
                }
            }
        }
        Ok(Self(l))
    }
}

/// Lower-triangular `S` with `S·Sᵀ = M·Mᵀ` for an `n×m` block `M`, `m ≥ n`.
///
/// Computed from the QR factorization of `Mᵀ`: with `Mᵀ = Q·R`,
/// `M·Mᵀ = Rᵀ·R`, so `S = Rᵀ` after fixing column signs.
pub fn qr_sqrt(columns: &DMatrix<f64>) -> Result<SqrtFactor> {
    let (n, m) = columns.shape();
    check_shape(m >= n, || {
        format!("need at least as many columns as rows, got {n}x{m}")
    })?;
    let r = columns.transpose().qr().unpack_r();
    let mut s = r.transpose();
    normalize_signs(&mut s);
    Ok(SqrtFactor(s))
}

fn normalize_signs(s: &mut DMatrix<f64>) {
    for j in 0..s.ncols() {
        if s[(j, j)] < 0.0 {
            s.column_mut(j).neg_mut();
        }
    }
}

/// Lower-triangular factor of `P` that tolerates positive semidefinite input.
///
/// Falls back to the symmetric eigendecomposition (clipping tiny negative
/// eigenvalues) when a plain Cholesky factorization fails.
pub fn psd_sqrt(p: &DMatrix<f64>) -> Result<SqrtFactor> {
    if let Ok(s) = SqrtFactor::cholesky(p) {
        return Ok(s);
    }
    let sym = (p + p.transpose()) * 0.5;
    let scale = sym.amax().max(f64::MIN_POSITIVE);
    let eig = sym.symmetric_eigen();
    if eig.eigenvalues.min() < -1e-9 * scale {
        return Err(Error::Numerical(format!(
            "matrix is indefinite (min eigenvalue {:.3e})",
            eig.eigenvalues.min()
        )));
    }
    let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let half = &eig.eigenvectors * DMatrix::from_diagonal(&root);
    qr_sqrt(&half)
}
