//! Convex QCQP with per-constraint slacks:
//!
//! ```text
//!     minimize    x' Q0 x + b0' x + w * sum(s)
//!     subject to  x' Qj x + bj' x <= rj + sj,   sj >= 0
//! ```
//!
//! with every `Qj` PSD. The point `x = 0, sj = max(0, -rj) + 1` is strictly
//! feasible, so no phase I is needed.

use nalgebra::{DMatrix, DVector};

use super::barrier::{self, BarrierProblem, BarrierSettings, BarrierStatus};
use crate::error::{Error, Result};

/// `x' quad x + linear' x <= rhs + s`.
#[derive(Clone, Debug, PartialEq)]
pub struct SlackedConstraint {
    pub quad: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub rhs: f64,
}

#[derive(Clone, Debug)]
pub struct ConvexQcqpSubproblem {
    quad: DMatrix<f64>,
    linear: DVector<f64>,
    slack_weight: f64,
    constraints: Vec<SlackedConstraint>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubproblemStatus {
    Optimal,
    MaxIter,
    NumericalFailure,
}

#[derive(Clone, Debug)]
pub struct SubproblemSolution {
    /// Decision part of the primal point.
    pub x: DVector<f64>,
    /// Slack part of the primal point.
    pub s: DVector<f64>,
    pub objective_value: f64,
    /// Multipliers of the slacked constraints.
    pub constraint_duals: DVector<f64>,
    /// Multipliers of `s >= 0`.
    pub slack_duals: DVector<f64>,
    pub status: SubproblemStatus,
    pub newton_iterations: usize,
    /// `degree / t` at termination.
    pub gap_estimate: f64,
    /// Objective after each completed centering step.
    pub objective_history: Vec<f64>,
}

fn psd_check(m: &DMatrix<f64>, what: impl Fn() -> String) -> Result<()> {
    if m.nrows() == 0 {
        return Ok(());
    }
    let sym = (m + m.transpose()) * 0.5;
    let scale = sym.norm();
    let eig = nalgebra::SymmetricEigen::new(sym);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -1e-9 * scale.max(1e-300) {
        return Err(Error::NotConvex(what()));
    }
    Ok(())
}

impl ConvexQcqpSubproblem {
    pub fn new(
        quad: DMatrix<f64>,
        linear: DVector<f64>,
        slack_weight: f64,
        constraints: Vec<SlackedConstraint>,
    ) -> Result<Self> {
        let d = quad.nrows();
        if quad.ncols() != d {
            return Err(Error::NotSquare {
                rows: d,
                cols: quad.ncols(),
            });
        }
        if linear.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: linear.len(),
            });
        }
        if !(slack_weight > 0.0 && slack_weight.is_finite()) {
            return Err(Error::InvalidParameter(format!("slack weight {slack_weight}")));
        }
        psd_check(&quad, || "the objective".into())?;
        for (j, c) in constraints.iter().enumerate() {
            if c.quad.nrows() != d || c.quad.ncols() != d || c.linear.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: c.linear.len(),
                });
            }
            if !c.rhs.is_finite() {
                return Err(Error::NonFinite("constraint right-hand side"));
            }
            psd_check(&c.quad, || format!("constraint {j}"))?;
        }
        let sym = |m: DMatrix<f64>| (&m + m.transpose()) * 0.5;
        Ok(Self {
            quad: sym(quad),
            linear,
            slack_weight,
            constraints: constraints
                .into_iter()
                .map(|c| SlackedConstraint {
                    quad: sym(c.quad),
                    ..c
                })
                .collect(),
        })
    }

    /// Skips validation; every quadratic term must already be symmetric PSD.
    pub(crate) fn new_trusted(
        quad: DMatrix<f64>,
        linear: DVector<f64>,
        slack_weight: f64,
        constraints: Vec<SlackedConstraint>,
    ) -> Self {
        Self {
            quad,
            linear,
            slack_weight,
            constraints,
        }
    }

    pub fn decision_dim(&self) -> usize {
        self.quad.nrows()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn constraints(&self) -> &[SlackedConstraint] {
        &self.constraints
    }

    pub fn slack_weight(&self) -> f64 {
        self.slack_weight
    }

    /// The constructive strictly feasible point `x = 0, s = max(0, -r) + 1`.
    pub fn start_point(&self) -> (DVector<f64>, DVector<f64>) {
        let x = DVector::zeros(self.decision_dim());
        let s = DVector::from_iterator(
            self.constraints.len(),
            self.constraints.iter().map(|c| (-c.rhs).max(0.0) + 1.0),
        );
        (x, s)
    }

    pub fn objective(&self, x: &DVector<f64>, s: &DVector<f64>) -> f64 {
        x.dot(&(&self.quad * x)) + self.linear.dot(x) + self.slack_weight * s.sum()
    }

    /// `x' Qj x + bj' x - rj` for every constraint.
    pub fn constraint_lhs(&self, x: &DVector<f64>) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|c| x.dot(&(&c.quad * x)) + c.linear.dot(x) - c.rhs)
            .collect()
    }

    /// Worst violation of `x' Qj x + bj' x <= rj + sj` and `sj >= 0`.
    pub fn primal_violation(&self, x: &DVector<f64>, s: &DVector<f64>) -> f64 {
        self.constraint_lhs(x)
            .iter()
            .zip(s.iter())
            .map(|(g, &sj)| (g - sj).max(0.0).max(-sj))
            .fold(0.0, f64::max)
    }

    /// Relative stationarity residual of the Lagrangian at `(x, s)` with the
    /// given multipliers.
    pub fn stationarity_residual(
        &self,
        x: &DVector<f64>,
        constraint_duals: &DVector<f64>,
        slack_duals: &DVector<f64>,
    ) -> f64 {
        let obj_grad = &self.quad * x * 2.0 + &self.linear;
        let mut rx = obj_grad.clone();
        let mut scale = obj_grad.norm();
        for (c, &mu) in self.constraints.iter().zip(constraint_duals.iter()) {
            let g = &c.quad * x * 2.0 + &c.linear;
            scale += mu * g.norm();
            rx += g * mu;
        }
        let mut rs_sq = 0.0;
        for (&mu, &nu) in constraint_duals.iter().zip(slack_duals.iter()) {
            rs_sq += (self.slack_weight - mu - nu).powi(2);
            scale += mu + nu;
        }
        scale += self.slack_weight * (self.constraints.len() as f64).sqrt();
        (rx.norm_squared() + rs_sq).sqrt() / (1.0 + scale)
    }

    pub fn solve(&self, settings: &BarrierSettings) -> SubproblemSolution {
        let (x0, s0) = self.start_point();
        let d = self.decision_dim();
        let mut y0 = DVector::zeros(d + s0.len());
        y0.rows_mut(d, s0.len()).copy_from(&s0);

        // The barrier runs on the objective divided by `scale`, so that `t = 1`
        // starts near the analytic center whatever the size of the offsets.
        // The gap target is tightened to match, keeping it absolute.
        let scale = (self.objective(&x0, &s0) / (2.0 * s0.len() as f64)).max(1.0);
        let model = Model { p: self, scale };
        let scaled_settings = BarrierSettings {
            gap_tol: settings.gap_tol / scale,
            ..settings.clone()
        };
        let out = barrier::solve(&model, y0, &scaled_settings);
        let t = out.t / scale;
        let x = out.y.rows(0, d).into_owned();
        let s = out.y.rows(d, s0.len()).into_owned();
        debug_assert_eq!(x0.len(), x.len());

        let lhs = self.constraint_lhs(&x);
        let constraint_duals = DVector::from_iterator(
            lhs.len(),
            lhs.iter()
                .zip(s.iter())
                .map(|(g, &sj)| 1.0 / (t * (sj - g))),
        );
        let slack_duals = s.map(|sj| 1.0 / (t * sj));
        let (constraint_duals, slack_duals) = if out.status == BarrierStatus::Optimal {
            self.refine_duals(&x, constraint_duals, slack_duals)
        } else {
            (constraint_duals, slack_duals)
        };
        let status = match out.status {
            BarrierStatus::Optimal | BarrierStatus::Stopped => SubproblemStatus::Optimal,
            BarrierStatus::MaxIter => SubproblemStatus::MaxIter,
            BarrierStatus::NumericalFailure => SubproblemStatus::NumericalFailure,
        };
        SubproblemSolution {
            objective_value: self.objective(&x, &s),
            x,
            s,
            constraint_duals,
            slack_duals,
            status,
            newton_iterations: out.newton_iterations,
            gap_estimate: model.degree() / t,
            objective_history: out.objective_history.iter().map(|v| v * scale).collect(),
        }
    }
}

impl ConvexQcqpSubproblem {
    /// Barrier multipliers `1 / (t * slack)` inherit the rounding error of
    /// slacks near `1e-11`. This takes the minimum-norm relative correction
    /// that zeroes the Lagrangian gradient in the least-squares sense, so
    /// tiny multipliers stay tiny, and keeps it only if it helps.
    fn refine_duals(
        &self,
        x: &DVector<f64>,
        mu: DVector<f64>,
        nu: DVector<f64>,
    ) -> (DVector<f64>, DVector<f64>) {
        let d = self.decision_dim();
        let m = self.constraints.len();
        let mut b = DMatrix::zeros(d + m, 2 * m);
        let mut r = DVector::zeros(d + m);
        r.rows_mut(0, d).copy_from(&-(&self.quad * x * 2.0 + &self.linear));
        r.rows_mut(d, m).fill(self.slack_weight);
        for (j, c) in self.constraints.iter().enumerate() {
            let g = &c.quad * x * 2.0 + &c.linear;
            b.view_mut((0, j), (d, 1)).copy_from(&(g * mu[j]));
            b[(d + j, j)] = mu[j];
            b[(d + j, m + j)] = nu[j];
        }
        let theta = DVector::from_iterator(2 * m, mu.iter().chain(nu.iter()).copied());
        let residual = &r - &b * DVector::from_element(2 * m, 1.0);
        let eps = 1e-13 * b.norm();
        let Ok(delta) = b.svd(true, true).solve(&residual, eps) else {
            return (mu, nu);
        };
        let refined = theta.zip_map(&delta, |v, dv| (v * (1.0 + dv)).max(0.0));
        let new_mu = refined.rows(0, m).into_owned();
        let new_nu = refined.rows(m, m).into_owned();
        if self.stationarity_residual(x, &new_mu, &new_nu) < self.stationarity_residual(x, &mu, &nu) {
            (new_mu, new_nu)
        } else {
            (mu, nu)
        }
    }
}

struct Model<'a> {
    p: &'a ConvexQcqpSubproblem,
    scale: f64,
}

impl Model<'_> {
    fn split<'y>(&self, y: &'y DVector<f64>) -> (nalgebra::DVectorView<'y, f64>, nalgebra::DVectorView<'y, f64>) {
        let d = self.p.decision_dim();
        (y.rows(0, d), y.rows(d, self.p.constraints.len()))
    }
}

impl BarrierProblem for Model<'_> {
    fn dim(&self) -> usize {
        self.p.decision_dim() + self.p.constraints.len()
    }

    fn degree(&self) -> f64 {
        2.0 * self.p.constraints.len() as f64
    }

    fn objective(&self, y: &DVector<f64>) -> f64 {
        let (x, s) = self.split(y);
        (x.dot(&(&self.p.quad * x)) + self.p.linear.dot(&x) + self.p.slack_weight * s.sum()) / self.scale
    }

    fn barrier(&self, y: &DVector<f64>) -> Option<f64> {
        let (x, s) = self.split(y);
        let mut phi = 0.0;
        for (c, &sj) in self.p.constraints.iter().zip(s.iter()) {
            let slack = c.rhs + sj - x.dot(&(&c.quad * x)) - c.linear.dot(&x);
            if !(slack > 0.0 && sj > 0.0) {
                return None;
            }
            phi -= slack.ln() + sj.ln();
        }
        phi.is_finite().then_some(phi)
    }

    fn derivatives(&self, y: &DVector<f64>, t: f64) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let d = self.p.decision_dim();
        let m = self.p.constraints.len();
        let (x, s) = self.split(y);
        let t = t / self.scale;
        let mut grad = DVector::zeros(d + m);
        let mut hess = DMatrix::zeros(d + m, d + m);

        let q0x = &self.p.quad * x;
        grad.rows_mut(0, d).copy_from(&((&q0x * 2.0 + &self.p.linear) * t));
        hess.view_mut((0, 0), (d, d)).copy_from(&(&self.p.quad * (2.0 * t)));

        for (j, c) in self.p.constraints.iter().enumerate() {
            let qx = &c.quad * x;
            let slack = c.rhs + s[j] - x.dot(&qx) - c.linear.dot(&x);
            if !(slack > 0.0 && s[j] > 0.0) {
                return None;
            }
            let inv = 1.0 / slack;
            let gx = qx * 2.0 + &c.linear;
            // grad of -log(slack) with d slack/dx = -gx, d slack/ds = 1
            {
                let mut gr = grad.rows_mut(0, d);
                gr.axpy(inv, &gx, 1.0);
            }
            grad[d + j] += t * self.p.slack_weight - inv - 1.0 / s[j];

            let w = inv * inv;
            {
                let mut hx = hess.view_mut((0, 0), (d, d));
                hx.ger(w, &gx, &gx, 1.0);
                hx += &c.quad * (2.0 * inv);
            }
            for i in 0..d {
                let v = -w * gx[i];
                hess[(i, d + j)] += v;
                hess[(d + j, i)] += v;
            }
            hess[(d + j, d + j)] += w + 1.0 / (s[j] * s[j]);
        }
        Some((grad, hess))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(q: f64, b: f64, r: f64) -> SlackedConstraint {
        SlackedConstraint {
            quad: DMatrix::from_element(1, 1, q),
            linear: DVector::from_element(1, b),
            rhs: r,
        }
    }

    fn one_dim(c: SlackedConstraint) -> ConvexQcqpSubproblem {
        ConvexQcqpSubproblem::new(
            DMatrix::from_element(1, 1, 1.0),
            DVector::zeros(1),
            10.0,
            vec![c],
        )
        .unwrap()
    }

    #[test]
    fn unconstrained_minimum_is_feasible() {
        // min x^2 + 10 s  s.t. x^2 <= 1 + s
        let sol = one_dim(scalar(1.0, 0.0, 1.0)).solve(&BarrierSettings::default());
        assert_eq!(sol.status, SubproblemStatus::Optimal);
        assert!(sol.x[0].abs() < 1e-4);
        assert!(sol.s[0].abs() < 1e-8);
        assert!(sol.objective_value.abs() < 1e-8);
    }

    #[test]
    fn linearized_reverse_constraint() {
        // min x^2 + 10 s  s.t. -2x + 1 <= -1 + s  (x^2 >= 1 linearized at z = 1)
        let p = one_dim(scalar(0.0, -2.0, -2.0));
        let sol = p.solve(&BarrierSettings::default());
        assert_eq!(sol.status, SubproblemStatus::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-7, "{}", sol.x[0]);
        assert!(sol.s[0].abs() < 1e-8);
        assert!((sol.objective_value - 1.0).abs() < 1e-7);
        // dual of the active constraint: 2x = 2 mu
        assert!((sol.constraint_duals[0] - 1.0).abs() < 1e-6);
        assert!(p.stationarity_residual(&sol.x, &sol.constraint_duals, &sol.slack_duals) < 1e-6);
        assert!(sol.gap_estimate <= 1e-9);
    }

    #[test]
    fn start_point_is_strictly_feasible() {
        let p = one_dim(scalar(2.0, 1.0, -5.0));
        let (x, s) = p.start_point();
        assert_eq!(s[0], 6.0);
        assert!(p.constraint_lhs(&x)[0] < s[0]);
    }

    #[test]
    fn rejects_indefinite_quadratic() {
        let c = SlackedConstraint {
            quad: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
            linear: DVector::zeros(2),
            rhs: 1.0,
        };
        let err = ConvexQcqpSubproblem::new(DMatrix::identity(2, 2), DVector::zeros(2), 1.0, vec![c])
            .unwrap_err();
        assert!(matches!(err, Error::NotConvex(_)));
    }

    #[test]
    fn rejects_bad_weight_and_shapes() {
        assert!(ConvexQcqpSubproblem::new(DMatrix::identity(1, 1), DVector::zeros(1), 0.0, vec![]).is_err());
        assert!(ConvexQcqpSubproblem::new(DMatrix::identity(2, 2), DVector::zeros(1), 1.0, vec![]).is_err());
        assert!(ConvexQcqpSubproblem::new(
            DMatrix::identity(1, 1),
            DVector::zeros(1),
            1.0,
            vec![SlackedConstraint {
                quad: DMatrix::identity(2, 2),
                linear: DVector::zeros(2),
                rhs: 0.0
            }]
        )
        .is_err());
    }

    #[test]
    fn slack_absorbs_infeasibility() {
        // x^2 <= -1 + s can only hold with s >= 1.
        let sol = one_dim(scalar(1.0, 0.0, -1.0)).solve(&BarrierSettings::default());
        assert_eq!(sol.status, SubproblemStatus::Optimal);
        assert!((sol.s[0] - 1.0).abs() < 1e-7);
        assert!((sol.objective_value - 10.0).abs() < 1e-7);
    }
}
