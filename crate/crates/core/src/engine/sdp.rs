//! Small dense complex SDP
//!
//! ```text
//!     minimize    Tr(A0 X)
//!     subject to  Tr(Am X) <= cm,   X PSD
//! ```
//!
//! solved by a primal barrier method over the `n^2` real coordinates of a
//! Hermitian `X` (diagonal, then real and imaginary parts of the strict upper
//! triangle). A phase I problem `min u  s.t. Tr(Am X) <= cm + u, X - eps I PSD`
//! provides the strictly feasible start.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;

use super::barrier::{self, BarrierProblem, BarrierSettings, BarrierStatus};
use crate::error::{Error, Result};
use crate::hermitian::{ComplexVector, HermitianMatrix};

/// Phase I shift `eps` in `X - eps I PSD`.
pub const PHASE1_EPS: f64 = 1e-8;
/// Phase I optimal value above which the SDP is declared infeasible.
pub const PHASE1_INFEASIBLE_TOL: f64 = 1e-7;
/// Phase I also keeps `Tr X` below this factor times a problem scale, so the
/// log-det barrier cannot drive `X` off along recession directions.
pub const PHASE1_TRACE_FACTOR: f64 = 1e4;
/// Default eigenvalue ratio `l2 / l1` below which `X` counts as rank one.
pub const RANK_ONE_RATIO: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct SdpProblem {
    pub a0: HermitianMatrix,
    pub constraints: Vec<(HermitianMatrix, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    MaxIter,
    NumericalFailure,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub x: HermitianMatrix,
    /// `Tr(A0 X)` at the returned point.
    pub lower_bound: f64,
    pub duals: Vec<f64>,
    pub status: SdpStatus,
    pub newton_iterations: usize,
    /// Optimal phase I value when phase I ran to completion.
    pub phase1_value: Option<f64>,
}

/// Coordinates of Hermitian matrices: each coordinate `k` spans the matrix
/// `E_k = sum coeff * e_a e_b^T` over its terms.
struct HermitianCoords {
    n: usize,
    terms: Vec<Vec<(usize, usize, Complex64)>>,
}

impl HermitianCoords {
    fn new(n: usize) -> Self {
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let mut terms: Vec<Vec<(usize, usize, Complex64)>> = (0..n).map(|k| vec![(k, k, one)]).collect();
        for a in 0..n {
            for b in (a + 1)..n {
                terms.push(vec![(a, b, one), (b, a, one)]);
                terms.push(vec![(a, b, i), (b, a, -i)]);
            }
        }
        Self { n, terms }
    }

    fn len(&self) -> usize {
        self.terms.len()
    }

    fn matrix(&self, theta: &[f64]) -> DMatrix<Complex64> {
        let mut x = DMatrix::zeros(self.n, self.n);
        for (k, terms) in self.terms.iter().enumerate() {
            for &(a, b, c) in terms {
                x[(a, b)] += c * theta[k];
            }
        }
        x
    }

    fn coords_of(&self, m: &DMatrix<Complex64>) -> DVector<f64> {
        let mut v = DVector::zeros(self.len());
        for (k, terms) in self.terms.iter().enumerate() {
            v[k] = terms.iter().map(|&(a, b, c)| (c * m[(a, b)].conj()).re).sum();
        }
        v
    }

    /// `Tr(A X(theta)) = a' theta` for Hermitian `A`.
    fn trace_functional(&self, a: &HermitianMatrix) -> DVector<f64> {
        let m = a.matrix();
        let mut v = DVector::zeros(self.len());
        for (k, terms) in self.terms.iter().enumerate() {
            v[k] = terms.iter().map(|&(p, q, c)| (c * m[(q, p)]).re).sum();
        }
        v
    }

    /// Value, gradient and Hessian of `-log det X` at `X = x`.
    fn logdet_barrier(&self, x: &DMatrix<Complex64>) -> Option<(f64, DVector<f64>, DMatrix<f64>)> {
        let (chol, logdet) = positive_definite_cholesky(x)?;
        let y = chol.inverse();
        let len = self.len();
        let mut grad = DVector::zeros(len);
        let mut hess = DMatrix::zeros(len, len);
        for (k, tk) in self.terms.iter().enumerate() {
            grad[k] = -tk.iter().map(|&(a, b, c)| (c * y[(b, a)]).re).sum::<f64>();
            for (l_idx, tl) in self.terms.iter().enumerate().skip(k) {
                let mut acc = Complex64::new(0.0, 0.0);
                for &(a, b, alpha) in tk {
                    for &(c, d, beta) in tl {
                        acc += alpha * beta * y[(d, a)] * y[(b, c)];
                    }
                }
                hess[(k, l_idx)] = acc.re;
                hess[(l_idx, k)] = acc.re;
            }
        }
        Some((-logdet, grad, hess))
    }

    fn logdet_value(&self, x: &DMatrix<Complex64>) -> Option<f64> {
        let (_, logdet) = positive_definite_cholesky(x)?;
        logdet.is_finite().then_some(-logdet)
    }
}

/// Cholesky factor and `log det` of a Hermitian positive definite matrix.
///
/// The complex square root never fails, so a non-positive pivot shows up as
/// a diagonal entry of the factor that is not real and positive.
fn positive_definite_cholesky(x: &DMatrix<Complex64>) -> Option<(Cholesky<Complex64, Dyn>, f64)> {
    let chol = Cholesky::<Complex64, Dyn>::new(x.clone())?;
    let l = chol.l_dirty();
    let mut logdet = 0.0;
    for i in 0..x.nrows() {
        let d = l[(i, i)];
        if !(d.re > 0.0 && d.im.abs() <= 1e-12 * d.re) {
            return None;
        }
        logdet += 2.0 * d.re.ln();
    }
    Some((chol, logdet))
}

struct LinearRows {
    rows: Vec<DVector<f64>>,
    bounds: Vec<f64>,
}

/// Phase II: `min a0' theta  s.t. a_m' theta < c_m, X(theta) > 0`.
struct PhaseTwo<'a> {
    coords: &'a HermitianCoords,
    objective: &'a DVector<f64>,
    lin: &'a LinearRows,
}

impl BarrierProblem for PhaseTwo<'_> {
    fn dim(&self) -> usize {
        self.coords.len()
    }

    fn degree(&self) -> f64 {
        (self.coords.n + self.lin.rows.len()) as f64
    }

    fn objective(&self, y: &DVector<f64>) -> f64 {
        self.objective.dot(y)
    }

    fn barrier(&self, y: &DVector<f64>) -> Option<f64> {
        let mut phi = self.coords.logdet_value(&self.coords.matrix(y.as_slice()))?;
        for (a, &c) in self.lin.rows.iter().zip(&self.lin.bounds) {
            let slack = c - a.dot(y);
            if !(slack > 0.0) {
                return None;
            }
            phi -= slack.ln();
        }
        Some(phi)
    }

    fn derivatives(&self, y: &DVector<f64>, t: f64) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let (_, mut grad, mut hess) = self.coords.logdet_barrier(&self.coords.matrix(y.as_slice()))?;
        grad.axpy(t, self.objective, 1.0);
        for (a, &c) in self.lin.rows.iter().zip(&self.lin.bounds) {
            let slack = c - a.dot(y);
            if !(slack > 0.0) {
                return None;
            }
            grad.axpy(1.0 / slack, a, 1.0);
            hess.ger(1.0 / (slack * slack), a, a, 1.0);
        }
        Some((grad, hess))
    }
}

/// Phase I over `(theta, u)`:
/// `min u  s.t. a_m' theta < c_m + u, Tr X(theta) < cap, X(theta) - eps I > 0`.
struct PhaseOne<'a> {
    coords: &'a HermitianCoords,
    lin: &'a LinearRows,
    trace_row: DVector<f64>,
    trace_cap: f64,
}

impl PhaseOne<'_> {
    fn shifted(&self, y: &DVector<f64>) -> DMatrix<Complex64> {
        let len = self.coords.len();
        let mut x = self.coords.matrix(&y.as_slice()[..len]);
        for i in 0..self.coords.n {
            x[(i, i)] -= Complex64::new(PHASE1_EPS, 0.0);
        }
        x
    }
}

impl BarrierProblem for PhaseOne<'_> {
    fn dim(&self) -> usize {
        self.coords.len() + 1
    }

    fn degree(&self) -> f64 {
        (self.coords.n + self.lin.rows.len() + 1) as f64
    }

    fn objective(&self, y: &DVector<f64>) -> f64 {
        y[self.coords.len()]
    }

    fn barrier(&self, y: &DVector<f64>) -> Option<f64> {
        let len = self.coords.len();
        let theta = y.rows(0, len);
        let u = y[len];
        let mut phi = self.coords.logdet_value(&self.shifted(y))?;
        let cap_slack = self.trace_cap - self.trace_row.dot(&theta);
        if !(cap_slack > 0.0) {
            return None;
        }
        phi -= cap_slack.ln();
        for (a, &c) in self.lin.rows.iter().zip(&self.lin.bounds) {
            let slack = c + u - a.dot(&theta);
            if !(slack > 0.0) {
                return None;
            }
            phi -= slack.ln();
        }
        Some(phi)
    }

    fn derivatives(&self, y: &DVector<f64>, t: f64) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let len = self.coords.len();
        let theta = y.rows(0, len);
        let u = y[len];
        let (_, g_ld, h_ld) = self.coords.logdet_barrier(&self.shifted(y))?;
        let mut grad = DVector::zeros(len + 1);
        let mut hess = DMatrix::zeros(len + 1, len + 1);
        grad.rows_mut(0, len).copy_from(&g_ld);
        hess.view_mut((0, 0), (len, len)).copy_from(&h_ld);
        grad[len] = t;
        let cap_slack = self.trace_cap - self.trace_row.dot(&theta);
        if !(cap_slack > 0.0) {
            return None;
        }
        grad.rows_mut(0, len).axpy(1.0 / cap_slack, &self.trace_row, 1.0);
        hess.view_mut((0, 0), (len, len))
            .ger(1.0 / (cap_slack * cap_slack), &self.trace_row, &self.trace_row, 1.0);
        for (a, &c) in self.lin.rows.iter().zip(&self.lin.bounds) {
            let slack = c + u - a.dot(&theta);
            if !(slack > 0.0) {
                return None;
            }
            let inv = 1.0 / slack;
            // gradient of the row w.r.t. (theta, u) is (a, -1)
            grad.rows_mut(0, len).axpy(inv, a, 1.0);
            grad[len] -= inv;
            let w = inv * inv;
            hess.view_mut((0, 0), (len, len)).ger(w, a, a, 1.0);
            for i in 0..len {
                hess[(i, len)] -= w * a[i];
                hess[(len, i)] -= w * a[i];
            }
            hess[(len, len)] += w;
        }
        Some((grad, hess))
    }

    fn should_stop(&self, y: &DVector<f64>) -> bool {
        y[self.coords.len()] < 0.0
    }
}

impl SdpProblem {
    pub fn new(a0: HermitianMatrix, constraints: Vec<(HermitianMatrix, f64)>) -> Result<Self> {
        let n = a0.dim();
        for (a, c) in &constraints {
            if a.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: a.dim(),
                });
            }
            if !c.is_finite() {
                return Err(Error::NonFinite("SDP bound"));
            }
        }
        Ok(Self { a0, constraints })
    }

    pub fn dim(&self) -> usize {
        self.a0.dim()
    }

    /// `n + sum |c_m| / ||A_m||`, a rough size of a feasible `Tr X`.
    fn scale(&self) -> f64 {
        self.dim() as f64
            + self
                .constraints
                .iter()
                .filter(|(a, _)| !a.is_zero())
                .map(|(a, c)| c.abs() / a.frobenius_norm())
                .sum::<f64>()
    }

    pub fn solve(&self, settings: &BarrierSettings) -> SdpSolution {
        let n = self.dim();
        let coords = HermitianCoords::new(n);
        let objective = coords.trace_functional(&self.a0);
        let mut lin = LinearRows {
            rows: self
                .constraints
                .iter()
                .map(|(a, _)| coords.trace_functional(a))
                .collect(),
            bounds: self.constraints.iter().map(|&(_, c)| c).collect(),
        };

        let identity = coords.coords_of(&DMatrix::identity(n, n));
        let worst = lin
            .rows
            .iter()
            .zip(&lin.bounds)
            .map(|(a, c)| a.dot(&identity) - c)
            .fold(f64::NEG_INFINITY, f64::max);

        let mut newton_iterations = 0;
        let mut phase1_value = None;
        let start = if worst < 0.0 {
            identity
        } else {
            let mut y0 = DVector::zeros(coords.len() + 1);
            y0.rows_mut(0, coords.len()).copy_from(&identity);
            y0[coords.len()] = worst + 1.0;
            let phase1 = PhaseOne {
                coords: &coords,
                lin: &lin,
                trace_row: coords.trace_functional(&HermitianMatrix::identity(n)),
                trace_cap: PHASE1_TRACE_FACTOR * self.scale(),
            };
            let out = barrier::solve(&phase1, y0, settings);
            newton_iterations += out.newton_iterations;
            let u = out.y[coords.len()];
            let theta = out.y.rows(0, coords.len()).into_owned();
            match out.status {
                BarrierStatus::Stopped => theta,
                BarrierStatus::Optimal => {
                    phase1_value = Some(u);
                    if u > PHASE1_INFEASIBLE_TOL {
                        return self.finish(&coords, &objective, &lin, theta, out.t, SdpStatus::Infeasible, newton_iterations, phase1_value);
                    }
                    // Feasible set without interior (up to tolerance): continue
                    // on bounds relaxed just past the phase I optimum.
                    let relax = u.max(0.0) + PHASE1_INFEASIBLE_TOL;
                    for c in lin.bounds.iter_mut() {
                        *c += relax;
                    }
                    theta
                }
                BarrierStatus::MaxIter => {
                    return self.finish(&coords, &objective, &lin, theta, out.t, SdpStatus::MaxIter, newton_iterations, phase1_value);
                }
                BarrierStatus::NumericalFailure => {
                    return self.finish(&coords, &objective, &lin, theta, out.t, SdpStatus::NumericalFailure, newton_iterations, phase1_value);
                }
            }
        };

        let phase2 = PhaseTwo {
            coords: &coords,
            objective: &objective,
            lin: &lin,
        };
        let out = barrier::solve(&phase2, start, settings);
        newton_iterations += out.newton_iterations;
        let status = match out.status {
            BarrierStatus::Optimal | BarrierStatus::Stopped => SdpStatus::Optimal,
            BarrierStatus::MaxIter => SdpStatus::MaxIter,
            BarrierStatus::NumericalFailure => SdpStatus::NumericalFailure,
        };
        self.finish(&coords, &objective, &lin, out.y, out.t, status, newton_iterations, phase1_value)
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        coords: &HermitianCoords,
        objective: &DVector<f64>,
        lin: &LinearRows,
        theta: DVector<f64>,
        t: f64,
        status: SdpStatus,
        newton_iterations: usize,
        phase1_value: Option<f64>,
    ) -> SdpSolution {
        let duals = lin
            .rows
            .iter()
            .zip(&lin.bounds)
            .map(|(a, &c)| 1.0 / (t * (c - a.dot(&theta))))
            .collect();
        let x = HermitianMatrix::new(coords.matrix(theta.as_slice()))
            .unwrap_or_else(|_| HermitianMatrix::zeros(coords.n));
        SdpSolution {
            lower_bound: objective.dot(&theta),
            x,
            duals,
            status,
            newton_iterations,
            phase1_value,
        }
    }
}

/// Principal eigenvector scaled by the square root of its eigenvalue, if the
/// second eigenvalue is negligible (`l2 / l1 <= tol_ratio`).
pub fn rank_one_extract(x: &HermitianMatrix, tol_ratio: f64) -> Result<Option<ComplexVector>> {
    let n = x.dim();
    if n == 0 {
        return Ok(None);
    }
    let eig = x.eigen()?;
    let l1 = eig.values[n - 1];
    if !(l1 > 0.0) {
        return Ok(None);
    }
    if n >= 2 {
        let l2 = eig.values[n - 2].max(0.0);
        if l2 / l1 > tol_ratio {
            return Ok(None);
        }
    }
    Ok(Some(eig.vectors.column(n - 1).into_owned() * Complex64::new(l1.sqrt(), 0.0)))
}
