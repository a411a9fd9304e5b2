//! Test oracles shared by the property and acceptance suites.
#![allow(dead_code)]

use fppsca::engine::{BarrierSettings, ConvexQcqpSubproblem, SlackedConstraint, SubproblemStatus};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Raw data of a small slacked QCQP with a strictly convex objective.
#[derive(Clone, Debug)]
pub struct Tiny {
    pub quad: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub weight: f64,
    pub constraints: Vec<SlackedConstraint>,
}

impl Tiny {
    /// `b0` and each constraint factor are square; the constraint quadratic is
    /// `B[:, ..rank] B[:, ..rank]'`.
    pub fn from_factors(
        b0: DMatrix<f64>,
        linear: DVector<f64>,
        weight: f64,
        cons: Vec<(DMatrix<f64>, DVector<f64>, f64, usize)>,
    ) -> Self {
        let d = b0.nrows();
        let quad = &b0 * b0.transpose() + DMatrix::identity(d, d) * 0.5;
        let constraints = cons
            .into_iter()
            .map(|(b, lin, rhs, rank)| {
                let b = b.columns(0, rank).into_owned();
                SlackedConstraint {
                    quad: &b * b.transpose(),
                    linear: lin,
                    rhs,
                }
            })
            .collect();
        Self {
            quad,
            linear,
            weight,
            constraints,
        }
    }

    pub fn random<R: Rng>(rng: &mut R, max_dim: usize, max_cons: usize) -> Self {
        let d = rng.random_range(1..=max_dim);
        let m = rng.random_range(1..=max_cons);
        let mat = |rng: &mut R| DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.5..1.5));
        let b0 = mat(rng);
        let linear = DVector::from_fn(d, |_, _| rng.random_range(-2.0..2.0));
        let weight = rng.random_range(1.0..20.0);
        let cons = (0..m)
            .map(|_| {
                let b = mat(rng);
                let lin = DVector::from_fn(d, |_, _| rng.random_range(-2.0..2.0));
                (b, lin, rng.random_range(-3.0..3.0), rng.random_range(0..=d))
            })
            .collect();
        Self::from_factors(b0, linear, weight, cons)
    }

    pub fn build(&self) -> ConvexQcqpSubproblem {
        ConvexQcqpSubproblem::new(
            self.quad.clone(),
            self.linear.clone(),
            self.weight,
            self.constraints.clone(),
        )
        .unwrap()
    }

    fn lhs(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.constraints.len(),
            self.constraints
                .iter()
                .map(|c| x.dot(&(&c.quad * x)) + c.linear.dot(x) - c.rhs),
        )
    }

    /// Exact penalty form `f0(x) + w * sum(max(0, g_j(x)))`.
    pub fn penalty_value(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.quad * x))
            + self.linear.dot(x)
            + self.weight * self.lhs(x).iter().map(|g| g.max(0.0)).sum::<f64>()
    }

    /// Lagrange dual, maximized by projected gradient ascent over the box
    /// `0 <= mu <= w`. Returns `(dual value, primal value)` where the primal
    /// value is the penalty form at the dual's minimizer.
    pub fn dual_oracle(&self) -> (f64, f64) {
        let m = self.constraints.len();
        let w = self.weight;
        let inner = |mu: &DVector<f64>| {
            let mut q = self.quad.clone();
            let mut b = self.linear.clone();
            let mut r = 0.0;
            for (c, &u) in self.constraints.iter().zip(mu.iter()) {
                q += &c.quad * u;
                b += &c.linear * u;
                r += u * c.rhs;
            }
            let x = -q.clone().cholesky().unwrap().solve(&b) * 0.5;
            let value = x.dot(&(&q * &x)) + b.dot(&x) - r;
            (value, x)
        };
        let mut mu = DVector::from_element(m, 0.5 * w);
        let (mut value, mut x) = inner(&mu);
        let mut step = 1.0;
        for _ in 0..20_000 {
            let grad = self.lhs(&x);
            let mut accepted = false;
            while step > 1e-14 {
                let trial = (&mu + &grad * step).map(|u| u.clamp(0.0, w));
                let (v, xt) = inner(&trial);
                let moved = &trial - &mu;
                // Sufficient ascent for an L-smooth concave function.
                if v >= value + grad.dot(&moved) - moved.norm_squared() / (2.0 * step) {
                    accepted = moved.norm() > 0.0;
                    mu = trial;
                    value = v;
                    x = xt;
                    step *= 1.5;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        (value, self.penalty_value(&x))
    }

    /// Compares the barrier optimum with the oracle. `Err` explains a mismatch.
    pub fn check_against_oracle(&self, rel_tol: f64) -> Result<(), String> {
        let sol = self.build().solve(&BarrierSettings::default());
        if sol.status != SubproblemStatus::Optimal {
            return Err(format!("status {:?}", sol.status));
        }
        let (dual, primal) = self.dual_oracle();
        let value = sol.objective_value;
        let scale = 1.0 + value.abs();
        if primal - dual > 1e-6 * scale {
            return Err(format!("oracle did not converge: {primal} vs {dual}"));
        }
        if value < dual - 1e-9 * scale || value > primal + 1e-9 * scale {
            return Err(format!("barrier {value} outside oracle bracket [{dual}, {primal}]"));
        }
        if (value - dual).abs() > rel_tol * scale {
            return Err(format!("barrier {value} oracle {dual}"));
        }
        Ok(())
    }
}
