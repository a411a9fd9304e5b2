//! Semidefinite relaxation baseline: lower bound, rank-one recovery and
//! Gaussian randomization with exact scaling.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::engine::{rank_one_extract, BarrierSettings, SdpProblem, SdpStatus, RANK_ONE_RATIO};
use crate::error::Result;
use crate::gen::{complex_gaussian_vector, derive_seed, rng_for, RANDOMIZATION_TAG};
use crate::hermitian::{ComplexVector, HermitianMatrix};
use crate::problem::{QcqpInstance, DEFAULT_FEAS_TOL};

/// Draws per randomization in the experiments.
pub const DEFAULT_DRAWS: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct ScaledPoint {
    pub x: ComplexVector,
    pub objective: f64,
    /// Sum of constraint violations at `x`.
    pub total_violation: f64,
    pub draw: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Randomization {
    /// Feasible scaled draw of least objective.
    pub feasible: Option<ScaledPoint>,
    /// Scaled draw of least total violation, ties broken by objective.
    pub best_effort: Option<ScaledPoint>,
    pub tried: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdrResult {
    pub x: HermitianMatrix,
    /// `Tr(A0 X)`; `+inf` when the relaxation is infeasible.
    pub lower_bound: f64,
    pub status: SdpStatus,
    /// `l2 / l1` of the relaxation solution.
    pub eigen_ratio: f64,
    pub rank1: bool,
    pub best_point: Option<ComplexVector>,
    pub best_objective: Option<f64>,
    /// The best point came from the principal eigenvector.
    pub from_rank_one: bool,
    pub randomizations_tried: usize,
    pub best_effort: Option<ScaledPoint>,
    pub duals: Vec<f64>,
    pub newton_iterations: usize,
}

impl SdrResult {
    pub fn is_feasible(&self) -> bool {
        self.best_point.is_some()
    }

    pub fn loss_db(&self) -> Option<f64> {
        self.best_objective.and_then(|obj| loss_db(obj, self.lower_bound))
    }
}

/// `10 log10(objective / lower_bound)`, absent unless `lower_bound > 0`.
pub fn loss_db(objective: f64, lower_bound: f64) -> Option<f64> {
    (lower_bound > 0.0 && lower_bound.is_finite() && objective.is_finite())
        .then(|| 10.0 * (objective / lower_bound).log10())
}

fn eigen_ratio(x: &HermitianMatrix) -> Result<f64> {
    let values = x.eigen()?.values;
    let n = values.len();
    let l1 = values[n - 1];
    if n < 2 || !(l1 > 0.0) {
        return Ok(if l1 > 0.0 { 0.0 } else { f64::NAN });
    }
    Ok(values[n - 2].max(0.0) / l1)
}

/// Solves the relaxation and tries rank-one recovery; no randomization.
pub fn sdr_lower_bound(inst: &QcqpInstance, settings: &BarrierSettings) -> Result<SdrResult> {
    let problem = SdpProblem::new(
        inst.objective_matrix().clone(),
        inst.constraints().iter().map(|qc| (qc.a.clone(), qc.c)).collect(),
    )?;
    let sol = problem.solve(settings);
    let lower_bound = match sol.status {
        SdpStatus::Infeasible => f64::INFINITY,
        _ => sol.lower_bound,
    };
    let mut result = SdrResult {
        eigen_ratio: eigen_ratio(&sol.x)?,
        rank1: false,
        x: sol.x,
        lower_bound,
        status: sol.status,
        best_point: None,
        best_objective: None,
        from_rank_one: false,
        randomizations_tried: 0,
        best_effort: None,
        duals: sol.duals,
        newton_iterations: sol.newton_iterations,
    };
    if result.status != SdpStatus::Optimal {
        return Ok(result);
    }
    if let Some(v) = rank_one_extract(&result.x, RANK_ONE_RATIO)? {
        result.rank1 = true;
        if inst.check_feasibility(&v, DEFAULT_FEAS_TOL)?.feasible {
            result.best_objective = Some(inst.objective(&v)?);
            result.best_point = Some(v);
            result.from_rank_one = true;
        }
    }
    Ok(result)
}

/// Relaxation followed, when no verified rank-one point exists, by
/// `num_draws` randomizations.
pub fn solve_sdr(inst: &QcqpInstance, num_draws: usize, seed: u64, settings: &BarrierSettings) -> Result<SdrResult> {
    let mut result = sdr_lower_bound(inst, settings)?;
    if result.status != SdpStatus::Optimal || result.best_point.is_some() {
        return Ok(result);
    }
    let rnd = randomize_and_scale(inst, &result.x, num_draws, seed)?;
    result.randomizations_tried = rnd.tried;
    if let Some(p) = &rnd.feasible {
        result.best_point = Some(p.x.clone());
        result.best_objective = Some(p.objective);
    }
    result.best_effort = rnd.best_effort;
    Ok(result)
}

/// Feasible set `{tau >= 0 : tau * q_m <= c_m for all m}` as `[lo, hi]`.
pub fn feasible_scale_interval(q: &[f64], c: &[f64]) -> Option<(f64, f64)> {
    let mut lo = 0.0_f64;
    let mut hi = f64::INFINITY;
    for (&qm, &cm) in q.iter().zip(c) {
        if qm > 0.0 {
            hi = hi.min(cm / qm);
        } else if qm < 0.0 {
            lo = lo.max(cm / qm);
        } else if cm < 0.0 {
            return None;
        }
    }
    (lo <= hi).then_some((lo, hi))
}

fn total_violation(tau: f64, q: &[f64], c: &[f64]) -> f64 {
    q.iter().zip(c).map(|(&qm, &cm)| (tau * qm - cm).max(0.0)).sum()
}

/// Scale of least total violation, ties broken by the smaller objective.
/// The violation is convex and piecewise linear in `tau`, so a breakpoint
/// or `tau = 0` attains the minimum.
fn least_violation_scale(q0: f64, q: &[f64], c: &[f64]) -> (f64, f64) {
    let candidates = std::iter::once(0.0).chain(
        q.iter()
            .zip(c)
            .filter(|(&qm, _)| qm != 0.0)
            .map(|(&qm, &cm)| cm / qm)
            .filter(|&tau| tau > 0.0 && tau.is_finite()),
    );
    let mut best = (0.0, f64::INFINITY);
    for tau in candidates {
        let v = total_violation(tau, q, c);
        if v < best.1 || (v == best.1 && tau * q0 < best.0 * q0) {
            best = (tau, v);
        }
    }
    best
}

struct DrawOutcome {
    draw: usize,
    feasible: Option<(f64, f64)>,
    best_effort: (f64, f64, f64),
    direction: ComplexVector,
}

/// Draws `xi ~ CN(0, X)` and scales each draw exactly onto the feasible set
/// when possible. Draw `i` is reproducible from `(seed, i)` alone.
pub fn randomize_and_scale(inst: &QcqpInstance, x: &HermitianMatrix, num_draws: usize, seed: u64) -> Result<Randomization> {
    if num_draws == 0 {
        return Ok(Randomization::default());
    }
    let n = inst.dim();
    let eig = x.eigen()?;
    let factor: DMatrix<Complex64> = DMatrix::from_fn(n, n, |i, j| {
        eig.vectors[(i, j)] * eig.values[j].max(0.0).sqrt()
    });
    let bounds: Vec<f64> = inst.constraints().iter().map(|qc| qc.c).collect();
    let base = derive_seed(seed, RANDOMIZATION_TAG);

    let evaluate = |draw: usize| -> DrawOutcome {
        let g = complex_gaussian_vector(&mut rng_for(base, draw as u64), n, 1.0);
        let xi = &factor * g;
        let q0 = inst.objective_matrix().quad_form_unchecked(&xi);
        let q: Vec<f64> = inst.constraints().iter().map(|qc| qc.a.quad_form_unchecked(&xi)).collect();
        let feasible = feasible_scale_interval(&q, &bounds).map(|(lo, _)| (lo, lo * q0));
        let (tau, viol) = least_violation_scale(q0, &q, &bounds);
        DrawOutcome {
            draw,
            feasible,
            best_effort: (tau, viol, tau * q0),
            direction: xi,
        }
    };

    let scaled = |out: &DrawOutcome, tau: f64| -> Result<(ComplexVector, crate::problem::Feasibility, f64)> {
        let point = &out.direction * Complex64::new(tau.sqrt(), 0.0);
        let feas = inst.check_feasibility(&point, DEFAULT_FEAS_TOL)?;
        let obj = inst.objective(&point)?;
        Ok((point, feas, obj))
    };

    // Deterministic reductions: ties go to the lower draw index.
    let outcomes: Vec<DrawOutcome> = (0..num_draws).into_par_iter().map(evaluate).collect();

    let mut feasible: Option<ScaledPoint> = None;
    let mut order: Vec<&DrawOutcome> = outcomes.iter().filter(|o| o.feasible.is_some()).collect();
    order.sort_by(|a, b| {
        let (ka, kb) = (a.feasible.unwrap().1, b.feasible.unwrap().1);
        ka.total_cmp(&kb).then(a.draw.cmp(&b.draw))
    });
    // Rounding at interval endpoints can leave a tiny violation; take the
    // best candidate that verifies.
    for out in order {
        let (point, feas, obj) = scaled(out, out.feasible.unwrap().0)?;
        if feas.feasible {
            feasible = Some(ScaledPoint {
                x: point,
                objective: obj,
                total_violation: feas.total_violation(),
                draw: out.draw,
            });
            break;
        }
    }

    let best_effort = outcomes
        .iter()
        .min_by(|a, b| {
            a.best_effort
                .1
                .total_cmp(&b.best_effort.1)
                .then(a.best_effort.2.total_cmp(&b.best_effort.2))
                .then(a.draw.cmp(&b.draw))
        })
        .map(|out| -> Result<ScaledPoint> {
            let (point, feas, obj) = scaled(out, out.best_effort.0)?;
            Ok(ScaledPoint {
                x: point,
                objective: obj,
                total_violation: feas.total_violation(),
                draw: out.draw,
            })
        })
        .transpose()?;

    Ok(Randomization {
        feasible,
        best_effort,
        tried: num_draws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::real_vector;
    use crate::problem::QuadConstraint;

    #[test]
    fn loss_examples() {
        assert_eq!(loss_db(3.0, 3.0), Some(0.0));
        assert!((loss_db(2.0, 1.0).unwrap() - 3.0103).abs() < 1e-4);
        assert!((loss_db(1.242, 1.0).unwrap() - 0.942).abs() < 1e-3);
        assert_eq!(loss_db(1.0, 0.0), None);
        assert_eq!(loss_db(1.0, -1.0), None);
    }

    #[test]
    fn scale_intervals() {
        assert_eq!(feasible_scale_interval(&[2.0], &[4.0]), Some((0.0, 2.0)));
        assert_eq!(feasible_scale_interval(&[-2.0], &[-4.0]), Some((2.0, f64::INFINITY)));
        assert_eq!(feasible_scale_interval(&[-2.0], &[1.0]), Some((0.0, f64::INFINITY)));
        assert_eq!(feasible_scale_interval(&[0.0], &[-1.0]), None);
        assert_eq!(feasible_scale_interval(&[0.0], &[0.0]), Some((0.0, f64::INFINITY)));
        assert_eq!(feasible_scale_interval(&[1.0], &[-1.0]), None);
        assert_eq!(feasible_scale_interval(&[1.0, -1.0], &[1.0, -2.0]), None);
        assert_eq!(feasible_scale_interval(&[1.0, -1.0], &[3.0, -2.0]), Some((2.0, 3.0)));
    }

    #[test]
    fn least_violation_picks_breakpoint() {
        // violations: max(0, 2 - tau) + max(0, tau - 1); flat at 1 on [1, 2]
        let (tau, v) = least_violation_scale(1.0, &[-1.0, 1.0], &[-2.0, 1.0]);
        assert_eq!(v, 1.0);
        assert_eq!(tau, 1.0);
    }

    fn nsd_instance() -> QcqpInstance {
        let a1 = HermitianMatrix::from_real_rows(&[vec![-1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let a2 = HermitianMatrix::from_real_rows(&[vec![-0.5, 0.2], vec![0.2, -2.0]]).unwrap();
        QcqpInstance::new(
            HermitianMatrix::identity(2),
            vec![QuadConstraint { a: a1, c: -1.0 }, QuadConstraint { a: a2, c: -3.0 }],
        )
        .unwrap()
    }

    #[test]
    fn nsd_constraints_always_scalable() {
        let inst = nsd_instance();
        let r = randomize_and_scale(&inst, &HermitianMatrix::identity(2), 200, 3).unwrap();
        assert_eq!(r.tried, 200);
        let p = r.feasible.unwrap();
        assert!(inst.check_feasibility(&p.x, 1e-9).unwrap().feasible);
        assert_eq!(r.best_effort.unwrap().total_violation, 0.0);
    }

    #[test]
    fn rank_one_covariance_reproduces_point() {
        let inst = nsd_instance();
        let dir = real_vector(&[1.2, 1.3]);
        let q: Vec<f64> = inst.constraint_values(&dir).unwrap();
        let c: Vec<f64> = inst.constraints().iter().map(|qc| qc.c).collect();
        let (lo, _) = feasible_scale_interval(&q, &c).unwrap();
        // x on the boundary of the feasible set along its own ray
        let x = dir * Complex64::new(lo.sqrt(), 0.0);
        let obj = inst.objective(&x).unwrap();
        let r = randomize_and_scale(&inst, &HermitianMatrix::outer(&x), 50, 9).unwrap();
        let p = r.feasible.unwrap();
        assert!((p.objective - obj).abs() < 1e-6);
        assert!((p.x.dotc(&x).norm() - p.x.norm() * x.norm()).abs() < 1e-9);
    }

    #[test]
    fn zero_draws() {
        let r = randomize_and_scale(&nsd_instance(), &HermitianMatrix::identity(2), 0, 1).unwrap();
        assert_eq!(r, Randomization::default());
    }

    #[test]
    fn randomization_is_reproducible() {
        let inst = crate::fixtures::fig1_instance();
        let a = randomize_and_scale(&inst, &HermitianMatrix::identity(2), 300, 5).unwrap();
        let b = randomize_and_scale(&inst, &HermitianMatrix::identity(2), 300, 5).unwrap();
        assert_eq!(a, b);
        let c = randomize_and_scale(&inst, &HermitianMatrix::identity(2), 300, 6).unwrap();
        assert_ne!(a.best_effort, c.best_effort);
    }

    #[test]
    fn fig1_relaxation_bounds_local_optimum() {
        let inst = crate::fixtures::fig1_instance();
        let r = solve_sdr(&inst, 1000, 1, &BarrierSettings::default()).unwrap();
        assert_eq!(r.status, SdpStatus::Optimal);
        let best = r.best_objective.unwrap();
        assert!(r.lower_bound <= best + 1e-6);
        assert!(inst.check_feasibility(r.best_point.as_ref().unwrap(), 1e-6).unwrap().feasible);
    }

    #[test]
    fn scalar_relaxation_is_rank_one() {
        let a = HermitianMatrix::identity(1);
        let inst = QcqpInstance::new(a.clone(), vec![QuadConstraint { a: a.scaled(-1.0), c: -1.0 }]).unwrap();
        let r = solve_sdr(&inst, 100, 0, &BarrierSettings::default()).unwrap();
        assert!(r.rank1 && r.from_rank_one);
        assert_eq!(r.randomizations_tried, 0);
        assert!((r.best_objective.unwrap() - 1.0).abs() < 1e-6);
        assert!(r.loss_db().unwrap().abs() < 1e-5);
    }
}
