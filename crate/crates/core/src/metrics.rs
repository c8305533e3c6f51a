//! Normalised reconstruction error and its time average.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{AncsError, Result};

/// `‖x − x̂‖² / ‖x‖²`.
pub fn nmse(x: &DVector<f64>, xhat: &DVector<f64>) -> Result<f64> {
    check_len(x, xhat)?;
    let energy = x.norm_squared();
    if energy == 0.0 {
        return Err(AncsError::ZeroSignal);
    }
    Ok((x - xhat).norm_squared() / energy)
}

/// Mean of the defined per-step values; `None` entries are skipped steps.
pub fn tnmse<I>(steps: I) -> Result<f64>
where
    I: IntoIterator<Item = Option<f64>>,
{
    let (sum, count) = steps
        .into_iter()
        .flatten()
        .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        return Err(AncsError::NoValidSteps);
    }
    Ok(sum / count as f64)
}

/// Error of one region, normalised by that region's signal energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionError {
    pub value: f64,
    /// The region had no signal energy; `value` is normalised by the energy
    /// of the whole signal instead.
    pub fallback: bool,
}

/// ROI and non-ROI normalised errors. A side is `None` when the region is
/// empty or when the whole signal has zero energy.
pub fn region_nmse(
    x: &DVector<f64>,
    xhat: &DVector<f64>,
    roi: &[bool],
) -> Result<(Option<RegionError>, Option<RegionError>)> {
    check_len(x, xhat)?;
    if roi.len() != x.len() {
        return Err(AncsError::DimensionMismatch {
            context: "region_nmse",
            expected: x.len(),
            actual: roi.len(),
        });
    }
    let total = x.norm_squared();
    let mut acc = [(0.0, 0.0, 0usize); 2];
    for i in 0..x.len() {
        let slot = &mut acc[usize::from(!roi[i])];
        slot.0 += (x[i] - xhat[i]).powi(2);
        slot.1 += x[i] * x[i];
        slot.2 += 1;
    }
    let finish = |(err, energy, count): (f64, f64, usize)| -> Option<RegionError> {
        if count == 0 {
            None
        } else if energy > 0.0 {
            Some(RegionError { value: err / energy, fallback: false })
        } else if total > 0.0 {
            Some(RegionError { value: err / total, fallback: true })
        } else {
            None
        }
    };
    Ok((finish(acc[0]), finish(acc[1])))
}

/// `10·log10(v)`.
pub fn to_db(v: f64) -> Result<f64> {
    if !(v > 0.0) {
        return Err(AncsError::Domain(format!("cannot express {v} in dB")));
    }
    Ok(10.0 * v.log10())
}

/// Like [`to_db`] but maps non-positive input to −∞ for table output.
pub fn to_db_lossy(v: f64) -> f64 {
    to_db(v).unwrap_or(f64::NEG_INFINITY)
}

fn check_len(x: &DVector<f64>, xhat: &DVector<f64>) -> Result<()> {
    if x.len() != xhat.len() {
        return Err(AncsError::DimensionMismatch {
            context: "nmse",
            expected: x.len(),
            actual: xhat.len(),
        });
    }
    Ok(())
}

/// Sample mean and standard error.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
