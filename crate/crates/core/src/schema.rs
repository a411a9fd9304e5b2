//! JSON file formats for problems and results.
//!
//! Complex numbers are written as `{"re": .., "im": ..}` inside matrices and
//! as parallel `re` / `im` arrays for vectors.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::engine::SdpStatus;
use crate::error::{Error, Result};
use crate::fpp::{FppResult, FppStatus, IterateRecord, KktCertificate};
use crate::hermitian::{ComplexVector, HermitianMatrix};
use crate::problem::{Metadata, QcqpInstance, QuadConstraint};
use crate::sdr::SdrResult;

/// Largest `|A_ij - conj(A_ji)|` accepted when reading a problem file.
pub const HERMITIAN_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexEntry {
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorJson {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&ComplexVector> for VectorJson {
    fn from(x: &ComplexVector) -> Self {
        Self {
            re: x.iter().map(|z| z.re).collect(),
            im: x.iter().map(|z| z.im).collect(),
        }
    }
}

impl VectorJson {
    pub fn to_vector(&self) -> Result<ComplexVector> {
        if self.re.len() != self.im.len() {
            return Err(Error::DimensionMismatch {
                expected: self.re.len(),
                found: self.im.len(),
            });
        }
        if self.re.iter().chain(&self.im).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("vector entries"));
        }
        Ok(ComplexVector::from_iterator(
            self.re.len(),
            self.re.iter().zip(&self.im).map(|(&re, &im)| Complex64::new(re, im)),
        ))
    }
}

pub type MatrixJson = Vec<Vec<ComplexEntry>>;

fn matrix_to_json(a: &HermitianMatrix) -> MatrixJson {
    let m = a.matrix();
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| ComplexEntry {
                    re: m[(i, j)].re,
                    im: m[(i, j)].im,
                })
                .collect()
        })
        .collect()
}

fn matrix_from_json(rows: &MatrixJson, n: usize) -> Result<HermitianMatrix> {
    if rows.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rows.len(),
        });
    }
    if let Some(row) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::NotSquare {
            rows: n,
            cols: row.len(),
        });
    }
    let m = DMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][j].re, rows[i][j].im));
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("matrix entries"));
    }
    HermitianMatrix::new_checked(m, HERMITIAN_TOL)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetadataJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_init: Option<VectorJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintJson {
    #[serde(rename = "A")]
    pub a: MatrixJson,
    pub c: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemJson {
    pub n: usize,
    #[serde(rename = "A0")]
    pub a0: MatrixJson,
    pub constraints: Vec<ConstraintJson>,
    #[serde(default)]
    pub metadata: MetadataJson,
}

impl From<&QcqpInstance> for ProblemJson {
    fn from(inst: &QcqpInstance) -> Self {
        Self {
            n: inst.dim(),
            a0: matrix_to_json(inst.objective_matrix()),
            constraints: inst
                .constraints()
                .iter()
                .map(|qc| ConstraintJson {
                    a: matrix_to_json(&qc.a),
                    c: qc.c,
                })
                .collect(),
            metadata: MetadataJson {
                generator: inst.metadata.generator.clone(),
                seed: inst.metadata.seed,
                x_init: inst.metadata.x_init.as_ref().map(VectorJson::from),
            },
        }
    }
}

impl ProblemJson {
    pub fn to_instance(&self) -> Result<QcqpInstance> {
        let a0 = matrix_from_json(&self.a0, self.n)?;
        let constraints = self
            .constraints
            .iter()
            .map(|c| {
                Ok(QuadConstraint {
                    a: matrix_from_json(&c.a, self.n)?,
                    c: c.c,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let x_init = self.metadata.x_init.as_ref().map(VectorJson::to_vector).transpose()?;
        if let Some(x) = &x_init {
            if x.len() != self.n {
                return Err(Error::DimensionMismatch {
                    expected: self.n,
                    found: x.len(),
                });
            }
        }
        Ok(QcqpInstance::new(a0, constraints)?.with_metadata(Metadata {
            generator: self.metadata.generator.clone(),
            seed: self.metadata.seed,
            x_init,
        }))
    }
}

pub fn instance_to_string(inst: &QcqpInstance) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ProblemJson::from(inst))?)
}

pub fn instance_from_str(text: &str) -> Result<QcqpInstance> {
    serde_json::from_str::<ProblemJson>(text)?.to_instance()
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<QcqpInstance> {
    instance_from_str(&fs::read_to_string(path)?)
}

pub fn write_instance(path: impl AsRef<Path>, inst: &QcqpInstance) -> Result<()> {
    let text = instance_to_string(inst)?;
    // Never write a file that would not read back.
    instance_from_str(&text)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterateJson {
    pub iteration: usize,
    pub z: VectorJson,
    pub x: VectorJson,
    pub s: Vec<f64>,
    pub penalized_objective: f64,
    pub objective: f64,
    pub violations: Vec<f64>,
    pub feasible: bool,
    pub newton_iterations: usize,
}

impl IterateJson {
    pub fn new(iteration: usize, r: &IterateRecord) -> Self {
        Self {
            iteration,
            z: (&r.z).into(),
            x: (&r.x).into(),
            s: r.s.clone(),
            penalized_objective: r.penalized_objective,
            objective: r.objective,
            violations: r.violations.clone(),
            feasible: r.feasible,
            newton_iterations: r.newton_iterations,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FppResultJson {
    pub status: FppStatus,
    pub feasible: bool,
    pub objective: f64,
    pub penalized_objective: f64,
    pub x: VectorJson,
    pub s: Vec<f64>,
    pub iterations_to_feasibility: Option<usize>,
    pub iterations_to_convergence: usize,
    pub kkt: KktCertificate,
    pub kkt_pass: bool,
    pub feasibility_lost: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<IterateJson>>,
}

impl FppResultJson {
    pub fn new(r: &FppResult, with_trace: bool) -> Self {
        Self {
            status: r.status,
            feasible: r.feasible,
            objective: r.objective,
            penalized_objective: r.penalized_objective,
            x: (&r.x).into(),
            s: r.s.clone(),
            iterations_to_feasibility: r.iterations_to_feasibility,
            iterations_to_convergence: r.iterations_to_convergence,
            kkt: r.kkt.clone(),
            kkt_pass: r.kkt_pass,
            feasibility_lost: r.feasibility_lost,
            trace: with_trace.then(|| {
                r.trace
                    .records
                    .iter()
                    .enumerate()
                    .map(|(k, rec)| IterateJson::new(k + 1, rec))
                    .collect()
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdrResultJson {
    pub status: SdpStatus,
    pub feasible: bool,
    /// `null` when the relaxation is infeasible.
    pub lower_bound: Option<f64>,
    pub rank1: bool,
    pub eigen_ratio: f64,
    pub objective: Option<f64>,
    pub loss_db: Option<f64>,
    pub x: Option<VectorJson>,
    pub randomizations_tried: usize,
    pub relaxation: MatrixJson,
}

impl From<&SdrResult> for SdrResultJson {
    fn from(r: &SdrResult) -> Self {
        Self {
            status: r.status,
            feasible: r.is_feasible(),
            lower_bound: r.lower_bound.is_finite().then_some(r.lower_bound),
            rank1: r.rank1,
            eigen_ratio: r.eigen_ratio,
            objective: r.best_objective,
            loss_db: r.loss_db(),
            x: r.best_point.as_ref().map(VectorJson::from),
            randomizations_tried: r.randomizations_tried,
            relaxation: matrix_to_json(&r.x),
        }
    }
}
