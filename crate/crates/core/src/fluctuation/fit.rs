//! Log-log power-law fits and two-segment crossover search.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::FluctuationCurve;

/// Minimum points per fitted segment in the crossover search.
pub const MIN_SEGMENT_POINTS: usize = 4;
/// Slopes closer than this are treated as the same scaling regime.
pub const CROSSOVER_SLOPE_TOLERANCE: f64 = 0.02;
/// The two-segment RMS must undercut the single-fit RMS by this factor.
pub const CROSSOVER_RESIDUAL_RATIO: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossover<T> {
    pub t_break: T,
    pub exponent_left: T,
    pub exponent_right: T,
    pub intercept_left: T,
    pub intercept_right: T,
    /// Combined RMS of the two segment fits.
    pub residual: T,
    /// RMS of the single fit over the same points.
    pub single_residual: T,
    /// Index of the first point of the right segment.
    pub split: usize,
    /// False when slopes agree within tolerance or the residual barely improves.
    pub warranted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawFit<T> {
    pub exponent: T,
    pub intercept: T,
    pub fit_range: (usize, usize),
    /// RMS deviation of `ln F` from the fitted line.
    pub residual: T,
    pub points_used: usize,
    /// Points in range dropped for being non-positive or unreliable.
    pub excluded: usize,
    pub crossover: Option<Crossover<T>>,
}

/// Exponent interpretation for a DFA fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryClass {
    AntiCorrelated,
    WhiteNoise,
    LongRangeCorrelated,
    OneOverF,
    Unstable,
}

/// Half-width of the bands around 0.5 and 1.0 in [`MemoryClass::of`].
pub const CLASS_TOLERANCE: f64 = 0.05;

impl MemoryClass {
    pub fn of(h: f64) -> Self {
        if (h - 0.5).abs() <= CLASS_TOLERANCE {
            MemoryClass::WhiteNoise
        } else if (h - 1.0).abs() <= CLASS_TOLERANCE {
            MemoryClass::OneOverF
        } else if h < 0.5 {
            MemoryClass::AntiCorrelated
        } else if h < 1.0 {
            MemoryClass::LongRangeCorrelated
        } else {
            MemoryClass::Unstable
        }
    }
}

struct Line<T> {
    slope: T,
    intercept: T,
    sse: T,
}

fn ols<T: Scalar>(x: &[T], y: &[T]) -> Line<T> {
    let n = T::of_usize(x.len());
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let (mut sxx, mut sxy) = (T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| {
            let e = b - (intercept + slope * a);
            e * e
        })
        .sum();
    Line { slope, intercept, sse }
}

/// Points of `curve` inside `range` that can enter a log-log fit.
fn usable<T: Scalar>(
    curve: &FluctuationCurve<T>,
    range: Option<(usize, usize)>,
) -> (Vec<usize>, Vec<T>, Vec<T>, usize) {
    let (lo, hi) = range.unwrap_or((0, usize::MAX));
    let (mut ts, mut x, mut y, mut excluded) = (Vec::new(), Vec::new(), Vec::new(), 0);
    for (i, &t) in curve.sizes.iter().enumerate() {
        if t < lo || t > hi {
            continue;
        }
        let f = curve.values[i];
        if curve.reliable[i] && f > T::zero() && f.is_finite() {
            ts.push(t);
            x.push(T::of_usize(t).ln());
            y.push(f.ln());
        } else {
            excluded += 1;
        }
    }
    (ts, x, y, excluded)
}

/// Least-squares line through `(ln t, ln F_q(t))` over `range` (inclusive, in window sizes).
pub fn fit_power_law<T: Scalar>(curve: &FluctuationCurve<T>, range: Option<(usize, usize)>) -> Result<PowerLawFit<T>> {
    let (ts, x, y, excluded) = usable(curve, range);
    if excluded > 0 {
        log::warn!("q={}: {excluded} point(s) excluded from the fit", curve.q);
    }
    if ts.len() < 3 {
        return Err(Error::Fit(format!(
            "q={}: {} usable point(s) in range, need 3",
            curve.q,
            ts.len()
        )));
    }
    let line = ols(&x, &y);
    Ok(PowerLawFit {
        exponent: line.slope,
        intercept: line.intercept,
        fit_range: (ts[0], ts[ts.len() - 1]),
        residual: (line.sse / T::of_usize(ts.len())).sqrt(),
        points_used: ts.len(),
        excluded,
        crossover: None,
    })
}

/// Single fit plus an exhaustive two-segment search.
///
/// Every split leaving at least [`MIN_SEGMENT_POINTS`] points on each side is
/// tried; the one with the smallest combined RMS wins. The break scale is the
/// intersection of the two lines, clamped to the gap between the segments.
/// With fewer than `2 * MIN_SEGMENT_POINTS` usable points the single fit is
/// returned without a crossover block.
pub fn detect_crossover<T: Scalar>(
    curve: &FluctuationCurve<T>,
    range: Option<(usize, usize)>,
) -> Result<PowerLawFit<T>> {
    let mut fit = fit_power_law(curve, range)?;
    let (ts, x, y, _) = usable(curve, range);
    let n = ts.len();
    if n < 2 * MIN_SEGMENT_POINTS {
        log::warn!(
            "q={}: crossover search needs {} points, have {n}",
            curve.q,
            2 * MIN_SEGMENT_POINTS
        );
        return Ok(fit);
    }
    let mut best: Option<(T, usize, Line<T>, Line<T>)> = None;
    for split in MIN_SEGMENT_POINTS..=n - MIN_SEGMENT_POINTS {
        let left = ols(&x[..split], &y[..split]);
        let right = ols(&x[split..], &y[split..]);
        let total = left.sse + right.sse;
        if best.as_ref().is_none_or(|(b, ..)| total < *b) {
            best = Some((total, split, left, right));
        }
    }
    let (total, split, left, right) = best.expect("at least one split");
    let (lo, hi) = (x[split - 1], x[split]);
    let log_break = if left.slope != right.slope {
        ((right.intercept - left.intercept) / (left.slope - right.slope))
            .max(lo)
            .min(hi)
    } else {
        (lo + hi) / T::of(2.0)
    };
    let residual = (total / T::of_usize(n)).sqrt();
    let warranted = (left.slope - right.slope).abs() > T::of(CROSSOVER_SLOPE_TOLERANCE)
        && residual < T::of(CROSSOVER_RESIDUAL_RATIO) * fit.residual;
    fit.crossover = Some(Crossover {
        t_break: log_break.exp(),
        exponent_left: left.slope,
        exponent_right: right.slope,
        intercept_left: left.intercept,
        intercept_right: right.intercept,
        residual,
        single_residual: fit.residual,
        split,
        warranted,
    });
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn curve(sizes: &[usize], mut f: impl FnMut(f64) -> f64) -> FluctuationCurve<f64> {
        FluctuationCurve::from_points(2.0, sizes.to_vec(), sizes.iter().map(|&t| f(t as f64)).collect())
    }

    fn log_sizes() -> Vec<usize> {
        vec![16, 22, 32, 45, 64, 90, 128, 181, 256, 362, 512, 724, 1024]
    }

    #[test]
    fn exact_power_laws() {
        let c = curve(&log_sizes(), |t| t.powf(0.75));
        let fit = fit_power_law(&c, None).unwrap();
        assert!((fit.exponent - 0.75).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
        let c = curve(&log_sizes(), |t| 3.0 * t.sqrt());
        let fit = fit_power_law(&c, None).unwrap();
        assert!((fit.exponent - 0.5).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert_eq!(fit.fit_range, (16, 1024));
    }

    #[test]
    fn fit_range_and_exclusions() {
        let mut c = curve(&log_sizes(), |t| t.powf(0.6));
        c.values[1] = 0.0;
        c.reliable[2] = false;
        let fit = fit_power_law(&c, Some((16, 64))).unwrap();
        assert_eq!(fit.points_used, 3);
        assert_eq!(fit.excluded, 2);
        assert_eq!(fit.fit_range, (16, 64));
        assert!(fit_power_law(&c, Some((16, 40))).is_err());
    }

    #[test]
    fn noisy_power_law_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let sizes = log_sizes();
        for _ in 0..100 {
            let c = curve(&sizes, |t| t.powf(0.6) * f64::exp(noise.sample(&mut rng)));
            let fit = fit_power_law(&c, None).unwrap();
            assert!((fit.exponent - 0.6).abs() <= 0.02, "{}", fit.exponent);
        }
    }

    #[test]
    fn piecewise_break_is_recovered() {
        let c = curve(&log_sizes(), |t| {
            if t <= 64.0 {
                t.powf(0.7)
            } else {
                64f64.powf(0.7) * (t / 64.0)
            }
        });
        let fit = detect_crossover(&c, None).unwrap();
        let x = fit.crossover.unwrap();
        assert!((x.exponent_left - 0.7).abs() < 1e-9);
        assert!((x.exponent_right - 1.0).abs() < 1e-9);
        assert!((x.t_break - 64.0).abs() < 1e-6, "{}", x.t_break);
        assert!(x.warranted);
    }

    #[test]
    fn single_power_law_has_no_crossover() {
        let c = curve(&log_sizes(), |t| 2.0 * t.powf(0.8));
        let x = detect_crossover(&c, None).unwrap().crossover.unwrap();
        assert!((x.exponent_left - x.exponent_right).abs() < 0.02);
        assert!(!x.warranted);
    }

    #[test]
    fn too_few_points_returns_single_fit() {
        let c = curve(&log_sizes()[..6], |t| t);
        let fit = detect_crossover(&c, None).unwrap();
        assert!(fit.crossover.is_none());
    }

    #[test]
    fn classification() {
        assert_eq!(MemoryClass::of(0.3), MemoryClass::AntiCorrelated);
        assert_eq!(MemoryClass::of(0.49), MemoryClass::WhiteNoise);
        assert_eq!(MemoryClass::of(0.68), MemoryClass::LongRangeCorrelated);
        assert_eq!(MemoryClass::of(1.02), MemoryClass::OneOverF);
        assert_eq!(MemoryClass::of(1.5), MemoryClass::Unstable);
    }
}
