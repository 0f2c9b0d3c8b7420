//! Accuracy of pseudo-moments against a reference table.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::index::MomentIndex;
use crate::model::MeasureTag;
use crate::scalar::{modulus, Real};
use crate::table::MomentTable;

pub const THRESHOLDS: [f64; 8] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8];

/// Floor on `|ŷ|` in the relative error denominator.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

/// `|y − ŷ| / max(|ŷ|, 1e-12)`.
pub fn relative_error<T: Real>(estimate: crate::Complex<T>, reference: crate::Complex<T>) -> T {
    modulus(estimate - reference) / modulus(reference).max(T::lit(DENOMINATOR_FLOOR))
}

/// Relative error of every canonical entry of `estimate`.
///
/// A conjugate pair is one entry. Entries absent from `reference` are an error.
pub fn relative_errors<T: Real>(
    estimate: &MomentTable<T>,
    reference: &MomentTable<T>,
    measure: MeasureTag,
) -> Result<Vec<(MomentIndex, T)>> {
    estimate
        .iter()
        .map(|(idx, &y)| {
            let r = reference.get(idx).ok_or_else(|| Error::MissingMoment {
                measure,
                index: idx.clone(),
            })?;
            Ok((idx.clone(), relative_error(y, r)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdCount {
    pub threshold: f64,
    pub count: usize,
    pub percentage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyHistogram {
    pub total: usize,
    pub bins: Vec<ThresholdCount>,
    pub max_relative_error: f64,
    pub worst_index: Option<String>,
}

impl AccuracyHistogram {
    pub fn from_errors<T: Real>(errors: &[(MomentIndex, T)]) -> Self {
        let total = errors.len();
        let bins = THRESHOLDS
            .iter()
            .map(|&tau| {
                let count = errors.iter().filter(|(_, e)| e.to_f64_lossy() <= tau).count();
                let percentage = if total == 0 {
                    100.0
                } else {
                    100.0 * count as f64 / total as f64
                };
                ThresholdCount {
                    threshold: tau,
                    count,
                    percentage,
                }
            })
            .collect();
        let worst = errors
            .iter()
            .max_by(|a, b| a.1.to_f64_lossy().total_cmp(&b.1.to_f64_lossy()));
        Self {
            total,
            bins,
            max_relative_error: worst.map_or(0.0, |w| w.1.to_f64_lossy()),
            worst_index: worst.map(|w| w.0.to_string()),
        }
    }

    /// Percentage within `threshold`, if it is one of [`THRESHOLDS`].
    pub fn percentage_at(&self, threshold: f64) -> Option<f64> {
        self.bins
            .iter()
            .find(|b| (b.threshold / threshold - 1.0).abs() < 1e-9)
            .map(|b| b.percentage)
    }
}

/// Histogram of occupation-moment accuracy.
pub fn compare_occupation<T: Real>(
    estimate: &MomentTable<T>,
    reference: &MomentTable<T>,
) -> Result<AccuracyHistogram> {
    let errors = relative_errors(estimate, reference, MeasureTag::Occupation)?;
    Ok(AccuracyHistogram::from_errors(&errors))
}
