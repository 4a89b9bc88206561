use super::DenseArray;
use crate::error::{Error, Result};

/// Mean squared error over all elements.
pub fn mse(pred: &DenseArray, target: &DenseArray) -> Result<f64> {
    mean_of(pred, target, |d| d * d)
}

/// Mean absolute error over all elements.
pub fn mae(pred: &DenseArray, target: &DenseArray) -> Result<f64> {
    mean_of(pred, target, f64::abs)
}

fn mean_of(pred: &DenseArray, target: &DenseArray, f: impl Fn(f64) -> f64) -> Result<f64> {
    target.ensure_shape("loss target", pred.shape())?;
    if pred.is_empty() {
        return Err(Error::EmptyWindows);
    }
    let total: f64 = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(p, t)| f(p - t))
        .sum();
    Ok(total / pred.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arr(v: &[f64]) -> DenseArray {
        v.into()
    }

    #[test]
    fn identical_inputs_give_zero() {
        let a = arr(&[0.5, -1.0, 3.0]);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        assert_eq!(mae(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn hand_evaluated_means() {
        assert_eq!(mse(&arr(&[0.0, 0.0]), &arr(&[1.0, 1.0])).unwrap(), 1.0);
        assert_eq!(mae(&arr(&[0.0, 0.0]), &arr(&[1.0, 1.0])).unwrap(), 1.0);
        assert_eq!(mse(&arr(&[0.0, 2.0]), &arr(&[1.0, 1.0])).unwrap(), 1.0);
        assert_eq!(mae(&arr(&[0.0, 2.0]), &arr(&[1.0, 1.0])).unwrap(), 1.0);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        assert!(mse(&arr(&[0.0, 0.0]), &arr(&[1.0])).is_err());
        let a = DenseArray::zeros(&[2, 3]);
        let b = DenseArray::zeros(&[3, 2]);
        assert!(mae(&a, &b).is_err());
    }
}
