//! JSON schemas for problems, uncertainty models, and run configs.
//! Complex scalars are two-element arrays `[re, im]`; matrices are
//! row-major nested arrays.

use std::path::{Path, PathBuf};

use ccp_core::ambiguity::{AmbiguitySpec, ChanceProblem, Objective};
use ccp_core::dist::CesFamily;
use ccp_core::estimation::{concentration_radii, empirical_moments, support_radius, SampleSet};
use ccp_core::moments::{CMatrix, CVector, ConstraintRow, MomentTriple};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("problem invalid: {0}")]
    Moments(#[from] ccp_core::moments::MomentError),
    #[error("{0}")]
    Estimation(#[from] ccp_core::estimation::EstimationError),
    #[error("matrix must be {n}x{n}, row {row} has {got} entries")]
    RaggedMatrix { n: usize, row: usize, got: usize },
    #[error("{what} has {got} entries, expected {expected}")]
    BadLength {
        what: &'static str,
        got: usize,
        expected: usize,
    },
}

/// Complex scalar as `[re, im]`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct ComplexF(pub f64, pub f64);

impl From<ComplexF> for Complex64 {
    fn from(v: ComplexF) -> Self {
        Complex64::new(v.0, v.1)
    }
}

impl From<Complex64> for ComplexF {
    fn from(v: Complex64) -> Self {
        ComplexF(v.re, v.im)
    }
}

fn vec_to_cvector(v: &[ComplexF]) -> CVector {
    CVector::from_fn(v.len(), |i, _| v[i].into())
}

fn cvector_to_vec(v: &CVector) -> Vec<ComplexF> {
    v.iter().map(|&x| x.into()).collect()
}

fn mat_to_cmatrix(rows: &[Vec<ComplexF>], n: usize) -> Result<CMatrix, SchemaError> {
    if rows.len() != n {
        return Err(SchemaError::BadLength {
            what: "matrix rows",
            got: rows.len(),
            expected: n,
        });
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != n {
            return Err(SchemaError::RaggedMatrix {
                n,
                row: i,
                got: r.len(),
            });
        }
    }
    Ok(CMatrix::from_fn(n, n, |r, c| rows[r][c].into()))
}

fn cmatrix_to_mat(m: &CMatrix) -> Vec<Vec<ComplexF>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)].into()).collect())
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TripleFile {
    pub mean: Vec<ComplexF>,
    pub cov: Vec<Vec<ComplexF>>,
    pub pcov: Vec<Vec<ComplexF>>,
}

impl TripleFile {
    pub fn to_triple(&self) -> Result<MomentTriple, SchemaError> {
        let n = self.mean.len();
        let t = MomentTriple {
            mean: vec_to_cvector(&self.mean),
            cov: mat_to_cmatrix(&self.cov, n)?,
            pcov: mat_to_cmatrix(&self.pcov, n)?,
        };
        ccp_core::moments::validate_moment_triple(&t)?;
        Ok(t)
    }

    pub fn from_triple(t: &MomentTriple) -> Self {
        TripleFile {
            mean: cvector_to_vec(&t.mean),
            cov: cmatrix_to_mat(&t.cov),
            pcov: cmatrix_to_mat(&t.pcov),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RowFile {
    pub a: TripleFile,
    pub b_mean: f64,
    pub b_var: f64,
    pub level: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveFile {
    Deterministic(Vec<ComplexF>),
    Random { moments: TripleFile, level: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    pub n: usize,
    pub objective: ObjectiveFile,
    pub rows: Vec<RowFile>,
    #[serde(default)]
    pub sign_constraints: bool,
}

impl ProblemFile {
    pub fn to_problem(&self) -> Result<ChanceProblem, SchemaError> {
        let objective = match &self.objective {
            ObjectiveFile::Deterministic(c) => {
                if c.len() != self.n {
                    return Err(SchemaError::BadLength {
                        what: "objective",
                        got: c.len(),
                        expected: self.n,
                    });
                }
                Objective::Deterministic(vec_to_cvector(c))
            }
            ObjectiveFile::Random { moments, level } => Objective::Random {
                moments: moments.to_triple()?,
                level: *level,
            },
        };
        let mut rows = Vec::with_capacity(self.rows.len());
        let mut levels = Vec::with_capacity(self.rows.len());
        for r in &self.rows {
            rows.push(ConstraintRow::new(r.a.to_triple()?, r.b_mean, r.b_var)?);
            levels.push(r.level);
        }
        Ok(ChanceProblem {
            n: self.n,
            objective,
            rows,
            levels,
            sign_constraints: self.sign_constraints,
        })
    }

    pub fn from_problem(p: &ChanceProblem) -> Self {
        ProblemFile {
            n: p.n,
            objective: match &p.objective {
                Objective::Deterministic(c) => ObjectiveFile::Deterministic(cvector_to_vec(c)),
                Objective::Random { moments, level } => ObjectiveFile::Random {
                    moments: TripleFile::from_triple(moments),
                    level: *level,
                },
            },
            rows: p
                .rows
                .iter()
                .zip(&p.levels)
                .map(|(r, &level)| RowFile {
                    a: TripleFile::from_triple(&r.a),
                    b_mean: r.b_mean,
                    b_var: r.b_var,
                    level,
                })
                .collect(),
            sign_constraints: p.sign_constraints,
        }
    }
}

/// Uncertainty model selector.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SpecFile {
    Gaussian,
    StudentT {
        nu: f64,
    },
    Laplace,
    Logistic,
    Cauchy,
    GeneralizedGaussian {
        s: f64,
        b: f64,
    },
    MomentExact,
    MomentSymmetric,
    CovBounded {
        bound: Vec<Vec<f64>>,
    },
    MomentsEllipsoid {
        zeta: f64,
        mean: Vec<ComplexF>,
        cov: Vec<Vec<ComplexF>>,
        pcov: Vec<Vec<ComplexF>>,
    },
    NormSupport {
        bounds: Vec<f64>,
    },
    DataDriven {
        est: TripleFile,
        r1: f64,
        r2: f64,
    },
    /// Estimate moments and radii from a sample file (one record per line,
    /// interleaved re/im floats, `#` comments).
    DataDrivenFromSamples {
        samples: PathBuf,
        delta: f64,
        /// Known support radius; estimated from the samples when absent
        /// (heuristic, flagged in the output).
        radius: Option<f64>,
    },
}

impl SpecFile {
    pub fn to_spec(&self, base_dir: &Path) -> Result<AmbiguitySpec, SchemaError> {
        Ok(match self {
            SpecFile::Gaussian => AmbiguitySpec::CesKnown(CesFamily::Gaussian),
            SpecFile::StudentT { nu } => {
                AmbiguitySpec::CesKnown(CesFamily::StudentT { nu: *nu })
            }
            SpecFile::Laplace => AmbiguitySpec::CesKnown(CesFamily::Laplace),
            SpecFile::Logistic => AmbiguitySpec::CesKnown(CesFamily::Logistic),
            SpecFile::Cauchy => AmbiguitySpec::CesKnown(CesFamily::Cauchy),
            SpecFile::GeneralizedGaussian { s, b } => {
                AmbiguitySpec::CesKnown(CesFamily::GeneralizedGaussian { s: *s, b: *b })
            }
            SpecFile::MomentExact => AmbiguitySpec::MomentExact,
            SpecFile::MomentSymmetric => AmbiguitySpec::MomentSymmetric,
            SpecFile::CovBounded { bound } => {
                let rows = bound.len();
                let mut m = DMatrix::zeros(rows, rows);
                for (i, r) in bound.iter().enumerate() {
                    if r.len() != rows {
                        return Err(SchemaError::RaggedMatrix {
                            n: rows,
                            row: i,
                            got: r.len(),
                        });
                    }
                    for (j, &v) in r.iter().enumerate() {
                        m[(i, j)] = v;
                    }
                }
                AmbiguitySpec::CovBounded { bound: m }
            }
            SpecFile::MomentsEllipsoid {
                zeta,
                mean,
                cov,
                pcov,
            } => {
                let n = mean.len();
                AmbiguitySpec::MomentsEllipsoid {
                    zeta: *zeta,
                    mean: vec_to_cvector(mean),
                    cov: mat_to_cmatrix(cov, n)?,
                    pcov: mat_to_cmatrix(pcov, n)?,
                }
            }
            SpecFile::NormSupport { bounds } => AmbiguitySpec::NormSupport {
                bounds: DVector::from_vec(bounds.clone()),
            },
            SpecFile::DataDriven { est, r1, r2 } => AmbiguitySpec::DataDriven {
                est: est.to_triple()?,
                r1: *r1,
                r2: *r2,
            },
            SpecFile::DataDrivenFromSamples {
                samples,
                delta,
                radius,
            } => {
                let path = base_dir.join(samples);
                let file = std::fs::File::open(&path).map_err(|source| SchemaError::Io {
                    path: path.clone(),
                    source,
                })?;
                let set = SampleSet::read(std::io::BufReader::new(file))?;
                let est = empirical_moments(&set);
                let r = radius.unwrap_or_else(|| support_radius(&set));
                let radii = concentration_radii(r, set.len(), *delta)?;
                AmbiguitySpec::DataDriven {
                    est,
                    r1: radii.r1,
                    r2: radii.r2,
                }
            }
        })
    }

    /// Scenario family for validation; robust models validate against
    /// Gaussian data.
    pub fn validation_family(&self) -> CesFamily {
        match self {
            SpecFile::Gaussian => CesFamily::Gaussian,
            SpecFile::StudentT { nu } => CesFamily::StudentT { nu: *nu },
            SpecFile::Laplace => CesFamily::Laplace,
            SpecFile::Logistic => CesFamily::Logistic,
            SpecFile::Cauchy => CesFamily::Cauchy,
            SpecFile::GeneralizedGaussian { s, b } => {
                CesFamily::GeneralizedGaussian { s: *s, b: *b }
            }
            _ => CesFamily::Gaussian,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum JointMode {
    Lower,
    Upper,
}

/// Joint-constraint block: present means the solve/validate commands build
/// the copula-coupled bound instead of the individual reformulation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JointFile {
    pub p: f64,
    pub theta: f64,
    pub tangent_points: usize,
    pub mode: JointMode,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidateFile {
    pub scenarios: usize,
}

/// Top-level run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunFile {
    /// Expected command; checked against the invoked subcommand when set.
    #[serde(default)]
    pub command: Option<String>,
    #[serde(default)]
    pub problem: Option<PathBuf>,
    #[serde(default)]
    pub spec: Option<SpecFile>,
    #[serde(default)]
    pub joint: Option<JointFile>,
    #[serde(default)]
    pub validate: Option<ValidateFile>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub backend: Option<String>,
    #[serde(default)]
    pub table: Option<ccp_lab::experiments::TableConfig>,
    #[serde(default)]
    pub gap: Option<ccp_lab::experiments::GapConfig>,
    #[serde(default)]
    pub estimation: Option<ccp_lab::experiments::EstimationConfig>,
    #[serde(default)]
    pub beamform: Option<ccp_lab::beamforming::SweepConfig>,
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, SchemaError> {
    let text = std::fs::read_to_string(path).map_err(|source| SchemaError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| SchemaError::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), SchemaError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    std::fs::write(path, text).map_err(|source| SchemaError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_encodes_as_pair() {
        let v = serde_json::to_string(&ComplexF(1.5, -2.0)).unwrap();
        assert_eq!(v, "[1.5,-2.0]");
        let back: ComplexF = serde_json::from_str("[0.25, 3]").unwrap();
        assert_eq!(back, ComplexF(0.25, 3.0));
    }

    #[test]
    fn problem_round_trip_preserves_bytes() {
        let pf = ProblemFile {
            n: 1,
            objective: ObjectiveFile::Deterministic(vec![ComplexF(1.0, 0.0)]),
            rows: vec![RowFile {
                a: TripleFile {
                    mean: vec![ComplexF(1.0, -0.5)],
                    cov: vec![vec![ComplexF(1.0, 0.0)]],
                    pcov: vec![vec![ComplexF(0.25, 0.0)]],
                },
                b_mean: 1.0,
                b_var: 0.04,
                level: 0.9,
            }],
            sign_constraints: false,
        };
        let text = serde_json::to_string_pretty(&pf).unwrap();
        let parsed: ProblemFile = serde_json::from_str(&text).unwrap();
        let text2 = serde_json::to_string_pretty(&parsed).unwrap();
        assert_eq!(text, text2);
        parsed.to_problem().unwrap();
    }

    #[test]
    fn non_hermitian_covariance_rejected_by_name() {
        let pf = ProblemFile {
            n: 2,
            objective: ObjectiveFile::Deterministic(vec![ComplexF(1.0, 0.0); 2]),
            rows: vec![RowFile {
                a: TripleFile {
                    mean: vec![ComplexF(0.0, 0.0); 2],
                    cov: vec![
                        vec![ComplexF(1.0, 0.0), ComplexF(0.3, 0.0)],
                        vec![ComplexF(0.1, 0.0), ComplexF(1.0, 0.0)],
                    ],
                    pcov: vec![
                        vec![ComplexF(0.0, 0.0), ComplexF(0.0, 0.0)],
                        vec![ComplexF(0.0, 0.0), ComplexF(0.0, 0.0)],
                    ],
                },
                b_mean: 1.0,
                b_var: 0.0,
                level: 0.9,
            }],
            sign_constraints: false,
        };
        let err = pf.to_problem().unwrap_err().to_string();
        assert!(err.contains("(0,1)"), "error should name the entry: {err}");
    }
}
