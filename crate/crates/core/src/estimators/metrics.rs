use nalgebra::DVector;

use super::krr::check_len;
use crate::error::{Error, Result};
use crate::stats::{median, std_dev};

/// `Σ(yᵢ − ŷᵢ)² / Σyᵢ²` with the uncentered denominator.
pub fn normalized_test_error(y_ts: &DVector<f64>, y_hat: &DVector<f64>) -> Result<f64> {
    check_len("normalized_test_error", y_ts.len(), y_hat.len())?;
    let denom = y_ts.norm_squared();
    if denom == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok((y_ts - y_hat).norm_squared() / denom)
}

/// `median|a − b| / std(a)`: prediction disagreement in units of the spread of `a`.
pub fn prediction_gap(reference: &DVector<f64>, other: &DVector<f64>) -> Result<f64> {
    check_len("prediction_gap", reference.len(), other.len())?;
    let diffs: Vec<f64> = reference.iter().zip(other.iter()).map(|(a, b)| (a - b).abs()).collect();
    let spread = std_dev(reference.as_slice()).ok_or(Error::ZeroDenominator)?;
    if spread == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(median(&diffs).unwrap_or(0.0) / spread)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalized_error_values() {
        let y = DVector::from_vec(vec![1.0, 1.0]);
        assert_eq!(normalized_test_error(&y, &y).unwrap(), 0.0);
        assert_eq!(normalized_test_error(&y, &DVector::zeros(2)).unwrap(), 1.0);
        assert_eq!(normalized_test_error(&y, &DVector::from_vec(vec![0.0, 2.0])).unwrap(), 1.0);
        assert_eq!(normalized_test_error(&DVector::zeros(2), &y), Err(Error::ZeroDenominator));
    }

    #[test]
    fn gap_statistic() {
        let a = DVector::from_vec(vec![1.0, -1.0, 1.0, -1.0]);
        assert_eq!(prediction_gap(&a, &a).unwrap(), 0.0);
        let b = a.add_scalar(0.5);
        assert_eq!(prediction_gap(&a, &b).unwrap(), 0.5);
        assert!(prediction_gap(&DVector::from_element(3, 2.0), &DVector::zeros(3)).is_err());
    }
}
