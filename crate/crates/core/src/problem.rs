//! QCQP instances in complex Hermitian form:
//!
//! ```text
//!     minimize    x^H A0 x
//!     subject to  x^H Am x <= cm,   m = 1..M
//! ```
//!
//! together with the eigen-split of each constraint and the convex surrogate
//! obtained by linearizing the concave part about an expansion point.

use crate::error::{Error, Result};
use crate::hermitian::{ComplexVector, HermitianMatrix};

/// Default absolute tolerance on constraint values.
pub const DEFAULT_FEAS_TOL: f64 = 1e-6;

/// One quadratic inequality `x^H a x <= c`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadConstraint {
    pub a: HermitianMatrix,
    pub c: f64,
}

/// Where an instance came from. Every field is optional.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Metadata {
    pub generator: Option<String>,
    pub seed: Option<u64>,
    /// A point known to be feasible (recorded by the random generator).
    pub x_init: Option<ComplexVector>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QcqpInstance {
    a0: HermitianMatrix,
    constraints: Vec<QuadConstraint>,
    pub metadata: Metadata,
}

impl QcqpInstance {
    pub fn new(a0: HermitianMatrix, constraints: Vec<QuadConstraint>) -> Result<Self> {
        if constraints.is_empty() {
            return Err(Error::NoConstraints);
        }
        let n = a0.dim();
        for qc in &constraints {
            if qc.a.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: qc.a.dim(),
                });
            }
            if !qc.c.is_finite() {
                return Err(Error::NonFinite("constraint bound"));
            }
        }
        let min_eig = a0.min_eigenvalue()?;
        if min_eig < -1e-9 * a0.frobenius_norm() {
            return Err(Error::ObjectiveNotPsd { min_eig });
        }
        Ok(Self {
            a0,
            constraints,
            metadata: Metadata::default(),
        })
    }

    pub fn with_metadata(mut self, metadata: Metadata) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn dim(&self) -> usize {
        self.a0.dim()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective_matrix(&self) -> &HermitianMatrix {
        &self.a0
    }

    pub fn constraints(&self) -> &[QuadConstraint] {
        &self.constraints
    }

    pub fn objective(&self, x: &ComplexVector) -> Result<f64> {
        self.a0.quad_form(x)
    }

    /// Constraint values `x^H Am x` in order.
    pub fn constraint_values(&self, x: &ComplexVector) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(self
            .constraints
            .iter()
            .map(|qc| qc.a.quad_form_unchecked(x))
            .collect())
    }

    /// Per-constraint violations `max(0, x^H Am x - cm)` and the verdict at `tol`.
    pub fn check_feasibility(&self, x: &ComplexVector, tol: f64) -> Result<Feasibility> {
        if !(tol >= 0.0) {
            return Err(Error::InvalidParameter(format!("feasibility tolerance {tol}")));
        }
        let violations: Vec<f64> = self
            .constraint_values(x)?
            .into_iter()
            .zip(&self.constraints)
            .map(|(v, qc)| (v - qc.c).max(0.0))
            .collect();
        let max_violation = violations.iter().copied().fold(0.0, f64::max);
        Ok(Feasibility {
            feasible: max_violation <= tol && max_violation.is_finite(),
            violations,
            max_violation,
        })
    }

    /// Eigen-splits every constraint.
    pub fn split_constraints(&self) -> Result<Vec<SplitConstraint>> {
        self.constraints
            .iter()
            .map(|qc| SplitConstraint::new(&qc.a, qc.c))
            .collect()
    }

    /// True when every constraint matrix is PSD, i.e. the QCQP is convex.
    pub fn is_convex(&self) -> Result<bool> {
        for qc in &self.constraints {
            if qc.a.min_eigenvalue()? < -1e-9 * qc.a.frobenius_norm() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn check_dim(&self, x: &ComplexVector) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Feasibility {
    pub violations: Vec<f64>,
    pub max_violation: f64,
    pub feasible: bool,
}

impl Feasibility {
    pub fn total_violation(&self) -> f64 {
        self.violations.iter().sum()
    }
}

/// A constraint matrix split into its PSD and NSD parts, with its bound.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitConstraint {
    pub plus: HermitianMatrix,
    pub minus: HermitianMatrix,
    pub c: f64,
}

impl SplitConstraint {
    pub fn new(a: &HermitianMatrix, c: f64) -> Result<Self> {
        let (plus, minus) = a.split()?;
        Ok(Self { plus, minus, c })
    }

    pub fn dim(&self) -> usize {
        self.plus.dim()
    }

    /// `A(+) + A(-)`.
    pub fn reconstruct(&self) -> HermitianMatrix {
        self.plus
            .add(&self.minus)
            .expect("split parts share a dimension")
    }

    pub fn is_convex(&self) -> bool {
        self.minus.is_zero()
    }

    /// Convex upper bound of `x^H Am x` that is tight at `x = z`:
    ///
    /// `g(x; z) = x^H A(+) x + 2 Re{z^H A(-) x} - z^H A(-) z`.
    pub fn surrogate_value(&self, z: &ComplexVector, x: &ComplexVector) -> Result<f64> {
        let minus_z = self.minus.apply(z)?;
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        let cross = minus_z.dotc(x).re;
        Ok(self.plus.quad_form_unchecked(x) + 2.0 * cross - self.minus.quad_form_unchecked(z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::real_vector;

    pub(crate) fn fig1() -> QcqpInstance {
        crate::fixtures::fig1_instance()
    }

    #[test]
    fn feasibility_at_fig1_point() {
        let inst = fig1();
        let x = real_vector(&[0.0, 1.4]);
        let values = inst.constraint_values(&x).unwrap();
        for (v, want) in values.iter().zip([-1.0192, -2.0972, 0.8036]) {
            assert!((v - want).abs() < 1e-12, "{v} vs {want}");
        }
        let f = inst.check_feasibility(&x, 1e-6).unwrap();
        assert!(f.feasible);
        assert!(f.violations.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn feasibility_at_origin() {
        let inst = fig1();
        let f = inst.check_feasibility(&real_vector(&[0.0, 0.0]), 1e-6).unwrap();
        assert_eq!(f.violations, vec![1.0, 1.0, 0.0]);
        assert!(!f.feasible);
    }

    #[test]
    fn origin_feasible_with_nonnegative_bounds() {
        let a = HermitianMatrix::from_real_rows(&[vec![-3.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let inst = QcqpInstance::new(
            HermitianMatrix::identity(2),
            vec![
                QuadConstraint { a: a.clone(), c: 0.0 },
                QuadConstraint { a, c: 2.5 },
            ],
        )
        .unwrap();
        assert!(inst.check_feasibility(&ComplexVector::zeros(2), 0.0).unwrap().feasible);
    }

    #[test]
    fn rejects_bad_instances() {
        let id = HermitianMatrix::identity(2);
        assert!(matches!(QcqpInstance::new(id.clone(), vec![]), Err(Error::NoConstraints)));
        let bad = QuadConstraint {
            a: HermitianMatrix::identity(3),
            c: 1.0,
        };
        assert!(matches!(
            QcqpInstance::new(id.clone(), vec![bad]),
            Err(Error::DimensionMismatch { .. })
        ));
        let qc = QuadConstraint { a: id.clone(), c: 1.0 };
        assert!(matches!(
            QcqpInstance::new(id.scaled(-1.0), vec![qc.clone()]),
            Err(Error::ObjectiveNotPsd { .. })
        ));
        let inst = QcqpInstance::new(id, vec![qc]).unwrap();
        assert!(inst.check_feasibility(&ComplexVector::zeros(3), 1e-6).is_err());
        assert!(inst.check_feasibility(&ComplexVector::zeros(2), -1.0).is_err());
    }

    #[test]
    fn surrogate_examples() {
        let inst = fig1();
        let splits = inst.split_constraints().unwrap();
        let z = real_vector(&[1.0, 0.0]);
        let x = real_vector(&[0.0, 1.0]);
        let g = splits[0].surrogate_value(&z, &x).unwrap();
        assert!((g - 2.84).abs() < 1e-12, "{g}");
        let truth = inst.constraints()[0].a.quad_form(&x).unwrap();
        assert!((truth + 0.52).abs() < 1e-12);

        for (sc, qc) in splits.iter().zip(inst.constraints()) {
            let at_z = sc.surrogate_value(&x, &x).unwrap();
            assert!((at_z - qc.a.quad_form(&x).unwrap()).abs() < 1e-10);
        }

        let zero = SplitConstraint::new(&HermitianMatrix::zeros(2), 1.0).unwrap();
        assert_eq!(zero.surrogate_value(&z, &x).unwrap(), 0.0);
    }
}
