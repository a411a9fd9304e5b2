//! Dense complex Hermitian matrices and the real embedding used by the
//! interior-point engine.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// A complex column vector.
pub type ComplexVector = DVector<Complex64>;

/// Dense Hermitian matrix. The stored entries are exactly Hermitian: every
/// constructor symmetrizes with `(A + A^H) / 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    entries: DMatrix<Complex64>,
}

/// Eigenvalues (ascending) and the matching orthonormal eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<Complex64>,
}

impl HermitianMatrix {
    /// Builds a Hermitian matrix from arbitrary square input by symmetrizing it.
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(Self::symmetrized(m))
    }

    /// Like [`HermitianMatrix::new`], but rejects input whose largest
    /// deviation `|A_ij - conj(A_ji)|` exceeds `tol`.
    pub fn new_checked(m: DMatrix<Complex64>, tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        let n = m.nrows();
        let mut deviation = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                deviation = deviation.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        if deviation.is_nan() || deviation > tol {
            return Err(Error::NotHermitian { deviation, tol });
        }
        Self::new(m)
    }

    fn symmetrized(m: DMatrix<Complex64>) -> Self {
        let n = m.nrows();
        let mut entries = DMatrix::zeros(n, n);
        for i in 0..n {
            entries[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
            for j in (i + 1)..n {
                let v = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
                entries[(i, j)] = v;
                entries[(j, i)] = v.conj();
            }
        }
        Self { entries }
    }

    /// Real symmetric matrix given row by row.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::NotSquare {
                rows: n,
                cols: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][j], 0.0)))
    }

    pub fn identity(n: usize) -> Self {
        Self {
            entries: DMatrix::identity(n, n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            entries: DMatrix::zeros(n, n),
        }
    }

    /// Rank-one matrix `v v^H`.
    pub fn outer(v: &ComplexVector) -> Self {
        Self::symmetrized(v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.entries
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            entries: self.entries.map(|z| z * factor),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.dim())?;
        Ok(Self {
            entries: &self.entries + &other.entries,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.dim())?;
        Ok(Self {
            entries: &self.entries - &other.entries,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    /// `Re(x^H A x)`, evaluated from the upper triangle so the result is real
    /// by construction.
    pub fn quad_form(&self, x: &ComplexVector) -> Result<f64> {
        self.check_dim(x.len())?;
        Ok(self.quad_form_unchecked(x))
    }

    pub(crate) fn quad_form_unchecked(&self, x: &ComplexVector) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            let xi = x[i];
            acc += self.entries[(i, i)].re * xi.norm_sqr();
            let mut off = Complex64::new(0.0, 0.0);
            for j in (i + 1)..n {
                off += self.entries[(i, j)] * x[j];
            }
            acc += 2.0 * (xi.conj() * off).re;
        }
        acc
    }

    /// `A x`.
    pub fn apply(&self, x: &ComplexVector) -> Result<ComplexVector> {
        self.check_dim(x.len())?;
        Ok(&self.entries * x)
    }

    /// `Re Tr(A X)` for another Hermitian `X` (the trace is real).
    pub fn trace_product(&self, other: &Self) -> Result<f64> {
        self.check_dim(other.dim())?;
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self.entries[(i, j)] * other.entries[(j, i)]).re;
            }
        }
        Ok(acc)
    }

    /// Full eigendecomposition, eigenvalues ascending.
    pub fn eigen(&self) -> Result<Eigen> {
        let eig = nalgebra::SymmetricEigen::try_new(self.entries.clone(), 1e-15, 0)
            .ok_or_else(|| Error::Numerical("Hermitian eigendecomposition did not converge".into()))?;
        let n = self.dim();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
        let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("eigenvalues"));
        }
        Ok(Eigen { values, vectors })
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigen()?.values[0])
    }

    /// Splits `A = A(+) + A(-)` with `A(+)` assembled from the strictly
    /// positive eigenpairs and `A(-)` from the rest (zero eigenvalues go to
    /// the negative part).
    pub fn split(&self) -> Result<(HermitianMatrix, HermitianMatrix)> {
        let n = self.dim();
        if n == 0 {
            return Ok((Self::zeros(0), Self::zeros(0)));
        }
        let eig = self.eigen()?;
        let mut plus = DMatrix::<Complex64>::zeros(n, n);
        let mut minus = DMatrix::<Complex64>::zeros(n, n);
        for k in 0..n {
            let lambda = eig.values[k];
            if lambda == 0.0 {
                continue;
            }
            let v = eig.vectors.column(k);
            let target = if lambda > 0.0 { &mut plus } else { &mut minus };
            for i in 0..n {
                let vi = v[i] * lambda;
                for j in 0..n {
                    target[(i, j)] += vi * v[j].conj();
                }
            }
        }
        Ok((Self::symmetrized(plus), Self::symmetrized(minus)))
    }

    /// Real symmetric `2n x 2n` embedding `[[Re A, -Im A], [Im A, Re A]]`.
    /// For `x~ = lift(x)`, `x~^T T(A) x~ = x^H A x`.
    pub fn real_embedding(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut t = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                let a = self.entries[(i, j)];
                t[(i, j)] = a.re;
                t[(i + n, j + n)] = a.re;
                t[(i, j + n)] = -a.im;
                t[(i + n, j)] = a.im;
            }
        }
        t
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found,
            });
        }
        Ok(())
    }
}

/// Stacks `(Re x; Im x)`.
pub fn lift(x: &ComplexVector) -> DVector<f64> {
    let n = x.len();
    DVector::from_fn(2 * n, |k, _| if k < n { x[k].re } else { x[k - n].im })
}

/// Inverse of [`lift`]; `y` must have even length.
pub fn lower(y: &DVector<f64>) -> ComplexVector {
    let n = y.len() / 2;
    ComplexVector::from_fn(n, |k, _| Complex64::new(y[k], y[k + n]))
}

/// Complex vector with zero imaginary parts.
pub fn real_vector(values: &[f64]) -> ComplexVector {
    ComplexVector::from_iterator(values.len(), values.iter().map(|&v| Complex64::new(v, 0.0)))
}

pub fn is_finite(x: &ComplexVector) -> bool {
    x.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}
