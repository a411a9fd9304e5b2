//! Feasible point pursuit successive convex approximation.
//!
//! Each iteration replaces the concave part of every constraint by its
//! tangent about the current point `z`, adds a nonnegative slack per
//! constraint penalized by `lambda * sum(s)`, solves the resulting convex
//! problem and moves `z` to its solution.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{BarrierSettings, ConvexQcqpSubproblem, SlackedConstraint, SubproblemStatus};
use crate::error::{Error, Result};
use crate::hermitian::{is_finite, lift, lower, ComplexVector};
use crate::problem::{QcqpInstance, SplitConstraint, DEFAULT_FEAS_TOL};

/// Allowed increase of the penalized objective between iterations.
pub const MONOTONE_SLACK: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct FppParams {
    /// Slack penalty weight.
    pub lambda: f64,
    pub max_iter: usize,
    /// Convergence when `|f(x_k) - f(x_{k-1})| <= conv_tol` for the true objective.
    pub conv_tol: f64,
    pub feas_tol: f64,
    pub slack_zero_tol: f64,
    /// Tolerance on the KKT stationarity and complementarity residuals.
    pub kkt_tol: f64,
    pub barrier: BarrierSettings,
}

impl Default for FppParams {
    fn default() -> Self {
        Self {
            lambda: 10.0,
            max_iter: 30,
            conv_tol: 1e-4,
            feas_tol: DEFAULT_FEAS_TOL,
            slack_zero_tol: 1e-7,
            kkt_tol: 1e-5,
            barrier: BarrierSettings::default(),
        }
    }
}

impl FppParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be positive");
        }
        if !(self.conv_tol > 0.0) {
            return bad("conv_tol must be positive");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1");
        }
        if !(self.feas_tol >= 0.0 && self.slack_zero_tol >= 0.0 && self.kkt_tol >= 0.0) {
            return bad("tolerances must be nonnegative");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FppStatus {
    /// Converged to a feasible point that passes the KKT check.
    FeasibleKkt,
    /// Converged to a feasible point; KKT residuals above tolerance.
    FeasibleConverged,
    /// Converged with nonzero slacks.
    InfeasibleConverged,
    MaxIter,
}

/// One pass of the loop: expansion point, solution and diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct IterateRecord {
    pub z: ComplexVector,
    pub x: ComplexVector,
    pub s: Vec<f64>,
    /// `x^H A0 x + lambda * sum(s)`.
    pub penalized_objective: f64,
    /// `x^H A0 x`.
    pub objective: f64,
    pub violations: Vec<f64>,
    pub feasible: bool,
    pub newton_iterations: usize,
    pub subproblem_status: SubproblemStatus,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IterateTrace {
    pub records: Vec<IterateRecord>,
}

impl IterateTrace {
    /// Largest increase of the penalized objective between consecutive iterates.
    pub fn max_penalized_increase(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| w[1].penalized_objective - w[0].penalized_objective)
            .fold(0.0, f64::max)
    }

    pub fn is_monotone(&self, slack: f64) -> bool {
        self.max_penalized_increase() <= slack
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KktCertificate {
    pub multipliers: Vec<f64>,
    /// `||A0 x + sum mu_m Am x|| / (1 + ||A0 x||)`.
    pub stationarity_residual: f64,
    /// `max |mu_m (x^H Am x - cm)|`.
    pub complementarity_residual: f64,
    pub primal_violation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FppResult {
    pub status: FppStatus,
    pub x: ComplexVector,
    pub s: Vec<f64>,
    pub objective: f64,
    pub penalized_objective: f64,
    /// Number of convex solves until the first feasible iterate.
    pub iterations_to_feasibility: Option<usize>,
    /// Number of convex solves performed.
    pub iterations_to_convergence: usize,
    pub kkt: KktCertificate,
    pub kkt_pass: bool,
    /// Final point feasible and all slacks below `slack_zero_tol`.
    pub feasible: bool,
    /// Some iterate after the first feasible one was infeasible again.
    pub feasibility_lost: bool,
    pub trace: IterateTrace,
}

impl FppResult {
    pub fn slack_l1(&self) -> f64 {
        self.s.iter().sum()
    }

    pub fn slack_max(&self) -> f64 {
        self.s.iter().copied().fold(0.0, f64::max)
    }

    pub fn converged(&self) -> bool {
        self.status != FppStatus::MaxIter
    }
}

/// Per-instance data reused across iterations.
struct Prepared {
    objective_quad: DMatrix<f64>,
    plus_embedded: Vec<DMatrix<f64>>,
}

impl Prepared {
    fn new(inst: &QcqpInstance, splits: &[SplitConstraint]) -> Self {
        Self {
            objective_quad: inst.objective_matrix().real_embedding(),
            plus_embedded: splits.iter().map(|sc| sc.plus.real_embedding()).collect(),
        }
    }

    fn subproblem(&self, splits: &[SplitConstraint], z: &ComplexVector, lambda: f64) -> ConvexQcqpSubproblem {
        let constraints = splits
            .iter()
            .zip(&self.plus_embedded)
            .map(|(sc, plus)| {
                let minus_z = sc.minus.apply(z).expect("dimension checked");
                SlackedConstraint {
                    quad: plus.clone(),
                    linear: lift(&minus_z) * 2.0,
                    rhs: sc.c + sc.minus.quad_form_unchecked(z),
                }
            })
            .collect();
        ConvexQcqpSubproblem::new_trusted(
            self.objective_quad.clone(),
            DVector::zeros(self.objective_quad.nrows()),
            lambda,
            constraints,
        )
    }
}

fn check_splits(inst: &QcqpInstance, splits: &[SplitConstraint], z: &ComplexVector) -> Result<()> {
    let n = inst.dim();
    if splits.len() != inst.num_constraints() {
        return Err(Error::DimensionMismatch {
            expected: inst.num_constraints(),
            found: splits.len(),
        });
    }
    if let Some(sc) = splits.iter().find(|sc| sc.dim() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: sc.dim(),
        });
    }
    if z.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: z.len(),
        });
    }
    Ok(())
}

/// The convex restriction about `z`, over `(Re x, Im x, s)`:
///
/// `x^H A(+) x + 2 Re{z^H A(-) x} <= cm + z^H A(-) z + sm`, `sm >= 0`,
/// minimizing `x^H A0 x + lambda * sum(s)`.
pub fn build_subproblem(
    inst: &QcqpInstance,
    splits: &[SplitConstraint],
    z: &ComplexVector,
    lambda: f64,
) -> Result<ConvexQcqpSubproblem> {
    check_splits(inst, splits, z)?;
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda {lambda}")));
    }
    Ok(Prepared::new(inst, splits).subproblem(splits, z, lambda))
}

/// KKT residuals of the original QCQP at `x` for the given multipliers.
/// Passes when stationarity and complementarity are within `tol` and the
/// worst violation is within `feas_tol`.
pub fn kkt_check(
    inst: &QcqpInstance,
    x: &ComplexVector,
    multipliers: &[f64],
    tol: f64,
    feas_tol: f64,
) -> Result<(KktCertificate, bool)> {
    if multipliers.len() != inst.num_constraints() {
        return Err(Error::DimensionMismatch {
            expected: inst.num_constraints(),
            found: multipliers.len(),
        });
    }
    let a0x = inst.objective_matrix().apply(x)?;
    let mut lagrangian_grad = a0x.clone();
    let values = inst.constraint_values(x)?;
    let mut complementarity = 0.0_f64;
    let mut primal = 0.0_f64;
    for ((qc, &mu), value) in inst.constraints().iter().zip(multipliers).zip(&values) {
        let mu = mu.max(0.0);
        if mu != 0.0 {
            lagrangian_grad += qc.a.apply(x)? * num_complex::Complex64::new(mu, 0.0);
        }
        complementarity = complementarity.max((mu * (value - qc.c)).abs());
        primal = primal.max(value - qc.c);
    }
    let cert = KktCertificate {
        multipliers: multipliers.iter().map(|m| m.max(0.0)).collect(),
        stationarity_residual: lagrangian_grad.norm() / (1.0 + a0x.norm()),
        complementarity_residual: complementarity,
        primal_violation: primal.max(0.0),
    };
    let pass = cert.stationarity_residual <= tol
        && cert.complementarity_residual <= tol
        && cert.primal_violation <= feas_tol;
    Ok((cert, pass))
}

/// Runs the pursuit from `z0`.
pub fn run_fpp_sca(inst: &QcqpInstance, z0: &ComplexVector, params: &FppParams) -> Result<FppResult> {
    let splits = inst.split_constraints()?;
    run_with_splits(inst, &splits, z0, params)
}

pub(crate) fn run_with_splits(
    inst: &QcqpInstance,
    splits: &[SplitConstraint],
    z0: &ComplexVector,
    params: &FppParams,
) -> Result<FppResult> {
    params.validate()?;
    check_splits(inst, splits, z0)?;
    if !is_finite(z0) {
        return Err(Error::NonFinite("initial point"));
    }
    let prepared = Prepared::new(inst, splits);

    let mut trace = IterateTrace::default();
    let mut z = z0.clone();
    let mut first_feasible = None;
    let mut feasibility_lost = false;
    let mut converged = false;
    let mut last_duals = vec![0.0; inst.num_constraints()];

    for k in 0..params.max_iter {
        let sub = prepared.subproblem(splits, &z, params.lambda);
        let sol = sub.solve(&params.barrier);
        if sol.status == SubproblemStatus::NumericalFailure {
            return Err(Error::SubproblemFailed {
                iteration: k,
                trace: Box::new(trace),
            });
        }
        let x = lower(&sol.x);
        let s: Vec<f64> = sol.s.iter().map(|v| v.max(0.0)).collect();
        let objective = inst.objective(&x)?;
        let feas = inst.check_feasibility(&x, params.feas_tol)?;
        if feas.feasible {
            first_feasible.get_or_insert(k + 1);
        } else if first_feasible.is_some() {
            feasibility_lost = true;
        }
        last_duals = sol.constraint_duals.iter().copied().collect();

        let previous = trace.records.last().map(|r| r.objective);
        trace.records.push(IterateRecord {
            z: z.clone(),
            x: x.clone(),
            penalized_objective: objective + params.lambda * s.iter().sum::<f64>(),
            s,
            objective,
            violations: feas.violations,
            feasible: feas.feasible,
            newton_iterations: sol.newton_iterations,
            subproblem_status: sol.status,
        });
        z = x;

        if previous.is_some_and(|prev| (objective - prev).abs() <= params.conv_tol) {
            converged = true;
            break;
        }
    }

    let last = trace.records.last().expect("max_iter >= 1");
    let x = last.x.clone();
    let s = last.s.clone();
    let feasible = last.feasible && s.iter().all(|&v| v <= params.slack_zero_tol);
    let (kkt, kkt_pass) = kkt_check(inst, &x, &last_duals, params.kkt_tol, params.feas_tol)?;
    let status = match (converged, feasible, kkt_pass) {
        (false, _, _) => FppStatus::MaxIter,
        (true, true, true) => FppStatus::FeasibleKkt,
        (true, true, false) => FppStatus::FeasibleConverged,
        (true, false, _) => FppStatus::InfeasibleConverged,
    };
    Ok(FppResult {
        status,
        objective: last.objective,
        penalized_objective: last.penalized_objective,
        iterations_to_feasibility: first_feasible,
        iterations_to_convergence: trace.len(),
        x,
        s,
        kkt,
        kkt_pass,
        feasible,
        feasibility_lost,
        trace,
    })
}

/// Runs the pursuit from every start (in parallel) and keeps the best result:
/// the feasible one with the lowest objective, otherwise the one with the
/// smallest total slack. Ties go to the earlier start.
pub fn multi_start(inst: &QcqpInstance, starts: &[ComplexVector], params: &FppParams) -> Result<FppResult> {
    if starts.is_empty() {
        return Err(Error::InvalidParameter("multi_start needs at least one start".into()));
    }
    let splits = inst.split_constraints()?;
    let results: Vec<FppResult> = starts
        .par_iter()
        .map(|z0| run_with_splits(inst, &splits, z0, params))
        .collect::<Result<_>>()?;
    Ok(pick_best(results))
}

fn rank_key(r: &FppResult) -> (u8, f64, f64) {
    if r.feasible {
        (0, r.objective, 0.0)
    } else {
        (1, r.slack_l1(), r.objective)
    }
}

fn pick_best(results: Vec<FppResult>) -> FppResult {
    results
        .into_iter()
        .reduce(|best, cand| {
            let (a, b) = (rank_key(&best), rank_key(&cand));
            let better = (b.0, b.1, b.2).partial_cmp(&(a.0, a.1, a.2)) == Some(std::cmp::Ordering::Less);
            if better {
                cand
            } else {
                best
            }
        })
        .expect("non-empty")
}
