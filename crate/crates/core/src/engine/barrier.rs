//! Log-barrier path following with damped Newton centering. Shared by the
//! convex QCQP subproblem and the SDP relaxation.

use nalgebra::{Cholesky, DMatrix, DVector};

/// Tuning knobs of the barrier method.
#[derive(Clone, Debug, PartialEq)]
pub struct BarrierSettings {
    /// Initial barrier weight `t`.
    pub t0: f64,
    /// Factor by which `t` grows after each centering.
    pub mu: f64,
    /// Stop once `degree / t <= gap_tol`.
    pub gap_tol: f64,
    /// Budget of Newton steps for one barrier run.
    pub max_newton_iters: usize,
    /// Centering stops once `lambda^2 / 2 <= newton_tol`.
    pub newton_tol: f64,
    /// Armijo fraction.
    pub alpha: f64,
    /// Backtracking factor.
    pub beta: f64,
    /// Relative diagonal shift added when a Newton system fails to factor.
    pub regularization: f64,
    pub regularization_retries: usize,
}

impl Default for BarrierSettings {
    fn default() -> Self {
        Self {
            t0: 1.0,
            mu: 10.0,
            gap_tol: 1e-9,
            max_newton_iters: 200,
            newton_tol: 1e-10,
            alpha: 0.25,
            beta: 0.5,
            regularization: 1e-12,
            regularization_retries: 3,
        }
    }
}

/// A convex problem `min f0(y)` whose inequality constraints are folded into
/// a self-concordant barrier `phi`.
pub(crate) trait BarrierProblem {
    fn dim(&self) -> usize;
    /// Barrier parameter; `degree / t` bounds the duality gap on the central path.
    fn degree(&self) -> f64;
    fn objective(&self, y: &DVector<f64>) -> f64;
    /// `phi(y)`, or `None` when `y` is outside the open domain.
    fn barrier(&self, y: &DVector<f64>) -> Option<f64>;
    /// Gradient and Hessian of `t * f0 + phi` at a domain point.
    fn derivatives(&self, y: &DVector<f64>, t: f64) -> Option<(DVector<f64>, DMatrix<f64>)>;
    /// Early exit test, checked after every Newton step.
    fn should_stop(&self, _y: &DVector<f64>) -> bool {
        false
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum BarrierStatus {
    Optimal,
    Stopped,
    MaxIter,
    NumericalFailure,
}

#[derive(Clone, Debug)]
pub(crate) struct BarrierOutcome {
    pub y: DVector<f64>,
    pub t: f64,
    pub status: BarrierStatus,
    pub newton_iterations: usize,
    /// Objective after each completed centering.
    pub objective_history: Vec<f64>,
}

const QUADRATIC_REGION: f64 = 0.2;

enum Centering {
    Centered,
    Stopped,
    OutOfBudget,
    Failed,
}

pub(crate) fn solve<P: BarrierProblem>(
    problem: &P,
    y0: DVector<f64>,
    settings: &BarrierSettings,
) -> BarrierOutcome {
    debug_assert_eq!(y0.len(), problem.dim());
    let mut y = y0;
    let mut t = settings.t0;
    let mut newton_iterations = 0;
    let mut objective_history = Vec::new();

    if problem.barrier(&y).is_none() {
        return BarrierOutcome {
            y,
            t,
            status: BarrierStatus::NumericalFailure,
            newton_iterations,
            objective_history,
        };
    }
    if problem.should_stop(&y) {
        return BarrierOutcome {
            y,
            t,
            status: BarrierStatus::Stopped,
            newton_iterations,
            objective_history,
        };
    }

    let status = loop {
        match center(problem, &mut y, t, settings, &mut newton_iterations) {
            Centering::Centered => {}
            Centering::Stopped => break BarrierStatus::Stopped,
            Centering::OutOfBudget => break BarrierStatus::MaxIter,
            Centering::Failed => break BarrierStatus::NumericalFailure,
        }
        objective_history.push(problem.objective(&y));
        if problem.degree() / t <= settings.gap_tol {
            // Polish the last centering down to the round-off floor so the
            // multipliers 1 / (t * slack) satisfy stationarity tightly.
            let polish = BarrierSettings {
                newton_tol: 0.0,
                ..settings.clone()
            };
            if let Centering::Failed = center(problem, &mut y, t, &polish, &mut newton_iterations) {
                break BarrierStatus::NumericalFailure;
            }
            break BarrierStatus::Optimal;
        }
        t *= settings.mu;
    };

    BarrierOutcome {
        y,
        t,
        status,
        newton_iterations,
        objective_history,
    }
}

fn center<P: BarrierProblem>(
    problem: &P,
    y: &mut DVector<f64>,
    t: f64,
    settings: &BarrierSettings,
    newton_iterations: &mut usize,
) -> Centering {
    let mut previous_sq = f64::INFINITY;
    loop {
        let Some((grad, hess)) = problem.derivatives(y, t) else {
            return Centering::Failed;
        };
        let Some(step) = newton_direction(hess, &grad, settings) else {
            return Centering::Failed;
        };
        let decrement_sq = -grad.dot(&step);
        if !decrement_sq.is_finite() {
            return Centering::Failed;
        }
        if decrement_sq / 2.0 <= settings.newton_tol {
            return Centering::Centered;
        }
        // In the quadratic region the decrement shrinks at least tenfold per
        // exact step. Failing to halve it means the round-off floor of the
        // Newton system has been reached.
        if previous_sq < QUADRATIC_REGION.powi(2) && decrement_sq > 0.5 * previous_sq {
            return Centering::Centered;
        }
        previous_sq = decrement_sq;
        if *newton_iterations >= settings.max_newton_iters {
            return Centering::OutOfBudget;
        }
        *newton_iterations += 1;

        let merit = |p: &DVector<f64>| {
            problem
                .barrier(p)
                .map(|phi| t * problem.objective(p) + phi)
        };

        let mut s = 1.0;
        let mut candidate = &*y + &step * s;
        let mut candidate_merit = merit(&candidate);
        while candidate_merit.is_none() {
            s *= settings.beta;
            if s < 1e-20 {
                return Centering::Failed;
            }
            candidate = &*y + &step * s;
            candidate_merit = merit(&candidate);
        }

        // Inside the quadratic convergence region a full (domain-feasible)
        // step always decreases a self-concordant function, and the Armijo
        // test is unreliable there because of cancellation in t * f0.
        if decrement_sq.sqrt() >= QUADRATIC_REGION {
            let current = merit(y).expect("iterate stays in the domain");
            let slope = grad.dot(&step);
            while candidate_merit.is_none_or(|v| v > current + settings.alpha * s * slope) {
                s *= settings.beta;
                if s < 1e-16 {
                    // Line search stalled: no representable decrease remains.
                    return Centering::Centered;
                }
                candidate = &*y + &step * s;
                candidate_merit = merit(&candidate);
            }
        }
        *y = candidate;

        if problem.should_stop(y) {
            return Centering::Stopped;
        }
        // Round-off floor: the Newton system is too ill-conditioned for the
        // decrement to shrink further, and the merit no longer moves.
    }
}

/// Solves `H d = -g` by Cholesky, shifting the diagonal on failure.
fn newton_direction(
    mut hess: DMatrix<f64>,
    grad: &DVector<f64>,
    settings: &BarrierSettings,
) -> Option<DVector<f64>> {
    if hess.iter().any(|v| !v.is_finite()) || grad.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let scale = hess.diagonal().iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let mut shift = settings.regularization * scale;
    for attempt in 0..=settings.regularization_retries {
        if attempt > 0 {
            for i in 0..hess.nrows() {
                hess[(i, i)] += shift;
            }
            shift *= 100.0;
        }
        if let Some(chol) = Cholesky::new(hess.clone()) {
            return Some(-chol.solve(grad));
        }
    }
    None
}
