//! Percentage errors and their summaries.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{check_len, Error, Result};

/// `100 ‖reference − approx‖ / ‖reference‖` in the coefficient l2 norm.
pub fn percent_error(reference: &DVector<f64>, approx: &DVector<f64>) -> Result<f64> {
    check_len(approx.len(), reference.len(), "compared field")?;
    let denom = reference.norm();
    if denom == 0.0 {
        return Err(Error::invalid("reference field has zero norm"));
    }
    Ok(100.0 * (reference - approx).norm() / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        Some(Self { min, max, mean })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percent_error_examples() {
        let u = DVector::from_vec(vec![1.0, -2.0, 3.0]);
        assert_eq!(percent_error(&u, &u).unwrap(), 0.0);
        assert!((percent_error(&u, &(1.01 * &u)).unwrap() - 1.0).abs() < 1e-12);
        assert!(percent_error(&DVector::zeros(3), &u).is_err());
        assert!(percent_error(&u, &DVector::zeros(2)).is_err());
    }

    #[test]
    fn summary() {
        let s = Summary::of(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!((s.min, s.max, s.mean), (1.0, 3.0, 2.0));
        assert!(Summary::of(&[]).is_none());
    }
}
