//! Windowed polynomial detrending of a profile.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::Profile;

/// Discrete orthonormal polynomial basis of degree `0..=order` on `t` equally
/// spaced points, built by modified Gram-Schmidt on centred, scaled abscissae.
pub(crate) struct PolyBasis<T> {
    len: usize,
    /// Row-major `(order + 1) x len`.
    rows: Vec<Vec<T>>,
}

impl<T: Scalar> PolyBasis<T> {
    pub(crate) fn new(len: usize, order: usize) -> Self {
        let half = T::of_usize(len - 1) / T::of(2.0);
        let scale = if half > T::zero() { half } else { T::one() };
        let x: Vec<T> = (0..len).map(|j| (T::of_usize(j) - half) / scale).collect();
        let mut rows: Vec<Vec<T>> = Vec::with_capacity(order + 1);
        for k in 0..=order {
            let mut v: Vec<T> = x.iter().map(|&xi| xi.powi(k as i32)).collect();
            // two passes keep the basis orthogonal to working precision
            for _ in 0..2 {
                for r in &rows {
                    let dot: T = v.iter().zip(r).map(|(&a, &b)| a * b).sum();
                    v.iter_mut().zip(r).for_each(|(a, &b)| *a -= dot * b);
                }
            }
            let norm = v.iter().map(|&a| a * a).sum::<T>().sqrt();
            v.iter_mut().for_each(|a| *a /= norm);
            rows.push(v);
        }
        Self { len, rows }
    }

    /// Mean squared residual of `y` after projecting out the basis.
    pub(crate) fn mean_squared_residual(&self, y: &[T]) -> T {
        debug_assert_eq!(y.len(), self.len);
        let coeffs: Vec<T> = self
            .rows
            .iter()
            .map(|r| r.iter().zip(y).map(|(&a, &b)| a * b).sum())
            .collect();
        let mut sse = T::zero();
        for j in 0..self.len {
            let fitted: T = coeffs.iter().zip(&self.rows).map(|(&c, r)| c * r[j]).sum();
            let e = y[j] - fitted;
            sse += e * e;
        }
        sse / T::of_usize(self.len)
    }
}

/// Per-window mean squared residuals `f_k(t)^2` of a degree-`detrend_order`
/// least-squares fit.
///
/// Windows are laid from the start of the profile and the trailing remainder
/// is discarded. With `bidirectional` a second pass laid from the end is
/// appended, giving `2 * floor(len / t)` windows.
pub fn window_fluctuations<T: Scalar>(
    profile: &Profile<T>,
    t: usize,
    detrend_order: usize,
    bidirectional: bool,
) -> Result<Vec<T>> {
    let b = &profile.values;
    if t > b.len() {
        return Err(Error::Window(format!(
            "window {t} longer than the series ({})",
            b.len()
        )));
    }
    if t < detrend_order + 2 {
        return Err(Error::Window(format!(
            "window {t} too small for detrend order {detrend_order}"
        )));
    }
    let basis = PolyBasis::new(t, detrend_order);
    let mut out: Vec<T> = b.par_chunks_exact(t).map(|w| basis.mean_squared_residual(w)).collect();
    if bidirectional {
        let offset = b.len() % t;
        let backward: Vec<T> = b[offset..]
            .par_chunks_exact(t)
            .rev()
            .map(|w| basis.mean_squared_residual(w))
            .collect();
        out.extend(backward);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluctuation::build_profile;

    fn profile(values: Vec<f64>) -> Profile<f64> {
        Profile {
            values,
            source_mean: 0.0,
        }
    }

    #[test]
    fn linear_window_has_zero_residual() {
        let p = profile((0..12).map(|i| 3.0 - 0.5 * i as f64).collect());
        let f2 = window_fluctuations(&p, 4, 1, false).unwrap();
        assert_eq!(f2.len(), 3);
        assert!(f2.iter().all(|&v| v.abs() < 1e-24));
    }

    #[test]
    fn three_point_hand_fit() {
        // fit of [0, 1, 0] is the constant 1/3; residuals -1/3, 2/3, -1/3
        let f2 = window_fluctuations(&profile(vec![0.0, 1.0, 0.0]), 3, 1, false).unwrap();
        assert!((f2[0] - 2.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn quadratic_removed_by_order_two() {
        let p = profile((0..20).map(|i| (i as f64).powi(2) - 4.0 * i as f64).collect());
        let f1 = window_fluctuations(&p, 10, 1, false).unwrap();
        let f2 = window_fluctuations(&p, 10, 2, false).unwrap();
        assert!(f1[0] > 1.0);
        assert!(f2.iter().all(|&v| v < 1e-20));
    }

    #[test]
    fn remainder_and_backward_pass() {
        let values: Vec<f64> = (0..23).map(|i| ((i * 7) % 5) as f64).collect();
        let p = build_profile(&values).unwrap();
        let fwd = window_fluctuations(&p, 5, 1, false).unwrap();
        assert_eq!(fwd.len(), 4);
        let both = window_fluctuations(&p, 5, 1, true).unwrap();
        assert_eq!(both.len(), 8);
        assert_eq!(&both[..4], &fwd[..]);
        // last backward window is the final 5 points
        let tail = profile(p.values[18..].to_vec());
        let direct = window_fluctuations(&tail, 5, 1, false).unwrap();
        assert_eq!(both[4], direct[0]);
    }

    #[test]
    fn window_errors() {
        let p = profile(vec![0.0; 10]);
        assert!(window_fluctuations(&p, 11, 1, false).is_err());
        assert!(window_fluctuations(&p, 2, 1, false).is_err());
    }
}
