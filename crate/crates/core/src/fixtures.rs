//! The two-dimensional three-constraint example instance and the two
//! initializations used as regression fixtures for it.

use crate::hermitian::{real_vector, ComplexVector, HermitianMatrix};
use crate::problem::{Metadata, QcqpInstance, QuadConstraint};

/// `A0 = I`, two concave constraints (`c = -1`) and one convex (`c = 1`) in R^2.
pub fn fig1_instance() -> QcqpInstance {
    let rows = |r: [[f64; 2]; 2]| {
        HermitianMatrix::from_real_rows(&[r[0].to_vec(), r[1].to_vec()]).expect("2x2 literal")
    };
    let constraints = vec![
        QuadConstraint {
            a: rows([[-1.48, 0.68], [0.68, -0.52]]),
            c: -1.0,
        },
        QuadConstraint {
            a: rows([[-0.93, -0.07], [-0.07, -1.07]]),
            c: -1.0,
        },
        QuadConstraint {
            a: rows([[1.59, -0.17], [-0.17, 0.41]]),
            c: 1.0,
        },
    ];
    QcqpInstance::new(HermitianMatrix::identity(2), constraints)
        .expect("valid literal instance")
        .with_metadata(Metadata {
            generator: Some("fig1".into()),
            ..Metadata::default()
        })
}

/// Initialization from which the pursuit reaches a feasible point.
pub fn fig1_start_success() -> ComplexVector {
    real_vector(&FIG1_Z0_SUCCESS)
}

/// Initialization from which the pursuit stalls at an infeasible point.
pub fn fig1_start_stuck() -> ComplexVector {
    real_vector(&FIG1_Z0_STUCK)
}

// Found by a grid search over starts of norm 2 to 4 satisfying the two concave
// constraints but not the convex one.
const FIG1_Z0_SUCCESS: [f64; 2] = [0.0, 3.0];
const FIG1_Z0_STUCK: [f64; 2] = [3.0, 0.0];
