use crate::error::{Error, Result};
use crate::numeric::OpCounter;

/// Replicate padding split for a moving-average window of width `k`.
/// The left side takes the larger half when `k - 1` is odd.
fn padding(k: usize) -> (usize, usize) {
    let total = k - 1;
    let left = total.div_ceil(2);
    (left, total - left)
}

fn check(len: usize, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidConfig("moving-average window must be >= 1".into()));
    }
    if len == 0 || k > 2 * len {
        return Err(Error::InvalidConfig(format!(
            "moving-average window {k} too wide for a series of length {len}"
        )));
    }
    Ok(())
}

/// Stride-1 moving average with replicate padding; output length equals input length.
pub fn moving_average(x: &[f64], k: usize) -> Result<Vec<f64>> {
    check(x.len(), k)?;
    let mut out = vec![0.0; x.len()];
    moving_average_into(x, k, &mut out, &mut OpCounter::default());
    Ok(out)
}

pub(crate) fn moving_average_into(x: &[f64], k: usize, out: &mut [f64], counter: &mut OpCounter) {
    let n = x.len() as isize;
    let (left, _) = padding(k);
    let inv = 1.0 / k as f64;
    for (j, o) in out.iter_mut().enumerate() {
        let start = j as isize - left as isize;
        let mut acc = 0.0;
        for p in start..start + k as isize {
            acc += x[p.clamp(0, n - 1) as usize];
        }
        *o = acc * inv;
    }
    counter.adds += (out.len() * (k - 1)) as u64;
}

/// Accumulates the moving-average cotangent into `in_grad`.
pub(crate) fn moving_average_backward_into(k: usize, out_grad: &[f64], in_grad: &mut [f64]) {
    let n = in_grad.len() as isize;
    let (left, _) = padding(k);
    let inv = 1.0 / k as f64;
    for (j, g) in out_grad.iter().enumerate() {
        let share = g * inv;
        let start = j as isize - left as isize;
        for p in start..start + k as isize {
            in_grad[p.clamp(0, n - 1) as usize] += share;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_padded_windows() {
        let out = moving_average(&[1.0, 2.0, 3.0, 4.0, 5.0], 3).unwrap();
        let want = [4.0 / 3.0, 2.0, 3.0, 4.0, 14.0 / 3.0];
        for (a, b) in out.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn width_one_is_identity() {
        let x = [0.3, -7.0, 2.0];
        assert_eq!(moving_average(&x, 1).unwrap(), x.to_vec());
    }

    #[test]
    fn constant_series_is_unchanged() {
        let out = moving_average(&[4.0; 30], 25).unwrap();
        assert!(out.iter().all(|v| (v - 4.0).abs() < 1e-12));
    }

    #[test]
    fn even_window_pads_more_on_the_left() {
        // k = 4: two copies of x[0] on the left, one of x[last] on the right.
        let out = moving_average(&[0.0, 4.0, 8.0], 4).unwrap();
        assert_eq!(out, vec![1.0, 3.0, 5.0]);
    }

    #[test]
    fn rejects_oversized_window() {
        assert!(moving_average(&[1.0, 2.0], 5).is_err());
        assert!(moving_average(&[1.0, 2.0], 0).is_err());
        assert!(moving_average(&[1.0, 2.0], 4).is_ok());
    }

    #[test]
    fn backward_matches_finite_differences() {
        let x: Vec<f64> = (0..12).map(|i| ((i * 5) % 7) as f64 - 3.0).collect();
        let c: Vec<f64> = (0..12).map(|i| 0.1 * i as f64 - 0.4).collect();
        for k in [1, 3, 4, 7, 23] {
            let probe = |v: &[f64]| -> f64 {
                moving_average(v, k).unwrap().iter().zip(&c).map(|(a, b)| a * b).sum()
            };
            let mut g = vec![0.0; 12];
            moving_average_backward_into(k, &c, &mut g);
            let h = 1e-5;
            for i in 0..12 {
                let mut xp = x.clone();
                xp[i] += h;
                let mut xm = x.clone();
                xm[i] -= h;
                let fd = (probe(&xp) - probe(&xm)) / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-8, "k={k} i={i}");
            }
        }
    }
}
