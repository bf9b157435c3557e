//! Out-of-sample violation measurement: draw fresh scenarios from the
//! generating distribution and count how often the solved decision breaks
//! each row, and how often it breaks any row.

use ccp_core::dist::{draw_standardized, sample_complex, CesFamily, SeededStream};
use ccp_core::moments::{CVector, ConstraintRow};
use nalgebra::DVector;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("decision has dimension {got}, rows have {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("scenario count must be at least 1")]
    BadCount,
    #[error(transparent)]
    Dist(#[from] ccp_core::dist::DistError),
}

/// Scenario generator: the family the data follows, the per-row moments,
/// and an optional componentwise truncation (support bounds) applied by
/// whole-vector rejection.
#[derive(Debug, Clone)]
pub struct ScenarioGenerator<'a> {
    pub family: CesFamily,
    pub rows: &'a [ConstraintRow],
    pub truncation: Option<&'a DVector<f64>>,
}

/// Violation rates with a normal-approximation confidence halfwidth.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub joint_violation_rate: f64,
    pub per_constraint_rates: Vec<f64>,
    pub scenario_count: usize,
    /// `1.96 sqrt(r (1-r) / S)` at the joint rate.
    pub binomial_halfwidth: f64,
    pub seed: u64,
}

impl ValidationReport {
    pub fn mean_constraint_rate(&self) -> f64 {
        if self.per_constraint_rates.is_empty() {
            0.0
        } else {
            self.per_constraint_rates.iter().sum::<f64>() / self.per_constraint_rates.len() as f64
        }
    }

    pub fn halfwidth_at(rate: f64, scenarios: usize) -> f64 {
        1.96 * (rate * (1.0 - rate) / scenarios as f64).sqrt()
    }
}

/// Measures violation frequencies of `Re(a_i z) - b_i <= 0` over `count`
/// fresh scenarios. Streams are derived from `seed` per row, so reports are
/// reproducible and rows can be regenerated independently.
pub fn oos_violation(
    z: &CVector,
    generator: &ScenarioGenerator,
    count: usize,
    seed: u64,
) -> Result<ValidationReport, ValidationError> {
    if count == 0 {
        return Err(ValidationError::BadCount);
    }
    let m = generator.rows.len();
    let mut any_violated = vec![false; count];
    let mut per_rates = Vec::with_capacity(m);
    for (i, row) in generator.rows.iter().enumerate() {
        if row.dim() != z.len() {
            return Err(ValidationError::DimensionMismatch {
                got: z.len(),
                expected: row.dim(),
            });
        }
        let values = row_values(row, z, generator, i, count, seed)?;
        let mut violations = 0usize;
        for (s, v) in values.iter().enumerate() {
            if *v > 0.0 {
                violations += 1;
                any_violated[s] = true;
            }
        }
        per_rates.push(violations as f64 / count as f64);
    }
    let joint = any_violated.iter().filter(|&&v| v).count() as f64 / count as f64;
    Ok(ValidationReport {
        joint_violation_rate: joint,
        per_constraint_rates: per_rates,
        scenario_count: count,
        binomial_halfwidth: ValidationReport::halfwidth_at(joint, count),
        seed,
    })
}

/// `Re(a z) - b` over the scenario batch for one row.
fn row_values(
    row: &ConstraintRow,
    z: &CVector,
    generator: &ScenarioGenerator,
    row_index: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<f64>, ValidationError> {
    let a_stream = SeededStream::new(seed, 2 * row_index as u64);
    let b_stream = SeededStream::new(seed, 2 * row_index as u64 + 1);
    let mut b_rng = b_stream.rng();
    let b_sigma = row.b_var.sqrt();

    let a_draws = match generator.truncation {
        None => sample_complex(generator.family, &row.a, count, a_stream)?,
        Some(bounds) => truncated_rows(row, generator.family, bounds, count, a_stream)?,
    };
    let mut out = Vec::with_capacity(count);
    for a in &a_draws {
        let mut b = row.b_mean + b_sigma * draw_standardized(generator.family, &mut b_rng);
        if let Some(bounds) = generator.truncation {
            let l = bounds[row.dim()];
            // resample the scalar within its own bound
            let mut tries = 0;
            while (b - row.b_mean).abs() > l && tries < 1000 {
                b = row.b_mean + b_sigma * draw_standardized(generator.family, &mut b_rng);
                tries += 1;
            }
        }
        let val = a
            .iter()
            .zip(z.iter())
            .map(|(ai, zi)| (ai * zi).re)
            .sum::<f64>()
            - b;
        out.push(val);
    }
    Ok(out)
}

/// Whole-vector rejection keeps the dependence structure of the row while
/// enforcing the componentwise support bounds.
fn truncated_rows(
    row: &ConstraintRow,
    family: CesFamily,
    bounds: &DVector<f64>,
    count: usize,
    stream: SeededStream,
) -> Result<Vec<CVector>, ValidationError> {
    let mut out = Vec::with_capacity(count);
    let mut batch_stream = stream;
    let mut pending = count;
    let mut guard = 0;
    while pending > 0 && guard < 64 {
        let draws = sample_complex(family, &row.a, pending.max(16), batch_stream)?;
        for a in draws {
            let ok = a
                .iter()
                .zip(row.a.mean.iter())
                .zip(bounds.iter())
                .all(|((ai, mi), &l)| (ai - mi).norm() <= l);
            if ok {
                out.push(a);
                if out.len() == count {
                    break;
                }
            }
        }
        pending = count - out.len();
        batch_stream = SeededStream::new(batch_stream.seed, batch_stream.stream + 1_000_000);
        guard += 1;
    }
    while out.len() < count {
        out.push(row.a.mean.clone());
    }
    Ok(out)
}
