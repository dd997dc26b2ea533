//! Generalized Hurst exponents, mass exponents `tau(q) = q h(q) - D_f`, and
//! the singularity spectrum obtained from them by a discrete Legendre
//! transform.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fluctuation::PowerLawFit;
use crate::scalar::Scalar;

/// Fractal dimension of a one-dimensional time support.
pub const DEFAULT_FRACTAL_DIMENSION: f64 = 1.0;
/// Minimum grid size for the Legendre transform.
pub const MIN_SPECTRUM_POINTS: usize = 5;
/// Tolerance on second differences when checking concavity of `tau`.
pub const CONCAVITY_TOLERANCE: f64 = 1e-6;

/// 25 evenly spaced orders on `[-6, 6]`; contains 0 and 2.
pub fn default_q_grid<T: Scalar>() -> Vec<T> {
    (0..25).map(|i| T::of(i as f64 * 0.5 - 6.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DroppedOrder<T> {
    pub q: T,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingExponents<T> {
    pub q: Vec<T>,
    pub h: Vec<T>,
    pub tau: Vec<T>,
    pub dropped: Vec<DroppedOrder<T>>,
}

/// `tau(q) = q h(q) - D_f` for every order with a usable fit.
pub fn scaling_exponents<T: Scalar>(fits: &[(T, Option<PowerLawFit<T>>)], fractal_dimension: T) -> ScalingExponents<T> {
    let mut out = ScalingExponents {
        q: Vec::new(),
        h: Vec::new(),
        tau: Vec::new(),
        dropped: Vec::new(),
    };
    for (q, fit) in fits {
        match fit {
            Some(f) if f.exponent.is_finite() => {
                out.q.push(*q);
                out.h.push(f.exponent);
                out.tau.push(*q * f.exponent - fractal_dimension);
            }
            Some(_) => out.dropped.push(DroppedOrder {
                q: *q,
                reason: "non-finite exponent".into(),
            }),
            None => out.dropped.push(DroppedOrder {
                q: *q,
                reason: "no valid fit".into(),
            }),
        }
    }
    for d in &out.dropped {
        log::warn!("q={} dropped: {}", d.q, d.reason);
    }
    out
}

/// Derivative of `y` on a non-uniform grid: three-point central stencil in
/// the interior, one-sided second-order stencils at both ends.
fn derivative<T: Scalar>(x: &[T], y: &[T]) -> Vec<T> {
    let n = x.len();
    let two = T::of(2.0);
    let mut d = Vec::with_capacity(n);
    {
        let (h1, h2) = (x[1] - x[0], x[2] - x[1]);
        d.push(
            -(two * h1 + h2) / (h1 * (h1 + h2)) * y[0] + (h1 + h2) / (h1 * h2) * y[1] - h1 / (h2 * (h1 + h2)) * y[2],
        );
    }
    for i in 1..n - 1 {
        let (h1, h2) = (x[i] - x[i - 1], x[i + 1] - x[i]);
        d.push(-h2 / (h1 * (h1 + h2)) * y[i - 1] + (h2 - h1) / (h1 * h2) * y[i] + h1 / (h2 * (h1 + h2)) * y[i + 1]);
    }
    {
        let (h1, h2) = (x[n - 2] - x[n - 3], x[n - 1] - x[n - 2]);
        d.push(
            h2 / (h1 * (h1 + h2)) * y[n - 3] - (h1 + h2) / (h1 * h2) * y[n - 2]
                + (two * h2 + h1) / (h2 * (h1 + h2)) * y[n - 1],
        );
    }
    d
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum<T> {
    pub alpha: Vec<T>,
    pub f_alpha: Vec<T>,
}

/// `alpha = d tau / dq` by finite differences, `f(alpha) = q alpha - tau`.
pub fn legendre_spectrum<T: Scalar>(q: &[T], tau: &[T]) -> Result<Spectrum<T>> {
    if q.len() != tau.len() {
        return Err(Error::Invariant("q and tau differ in length".into()));
    }
    if q.len() < MIN_SPECTRUM_POINTS {
        return Err(Error::SpectrumUnavailable {
            needed: MIN_SPECTRUM_POINTS,
            got: q.len(),
        });
    }
    if q.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("q grid must be strictly increasing".into()));
    }
    if tau.iter().any(|t| !t.is_finite()) {
        return Err(Error::Fit("tau contains non-finite values".into()));
    }
    let alpha = derivative(q, tau);
    let f_alpha = q.iter().zip(&alpha).zip(tau).map(|((&q, &a), &t)| q * a - t).collect();
    Ok(Spectrum { alpha, f_alpha })
}

/// Estimated truncation error of the interior central stencil,
/// `h1 h2 |tau'''| / 6`, with `tau'''` from the third divided difference of
/// neighbouring points. Entries are `None` at the two ends.
pub fn central_truncation_estimate<T: Scalar>(q: &[T], tau: &[T]) -> Vec<Option<T>> {
    let n = q.len();
    let divided = |i: usize, k: usize| -> T {
        // k-th divided difference starting at i
        let mut table: Vec<T> = tau[i..=i + k].to_vec();
        for level in 1..=k {
            for j in 0..=k - level {
                table[j] = (table[j + 1] - table[j]) / (q[i + j + level] - q[i + j]);
            }
        }
        table[0]
    };
    (0..n)
        .map(|i| {
            if i == 0 || i + 1 >= n || n < 4 {
                return None;
            }
            let start = if i + 2 < n { i - 1 } else { i - 2 };
            let third = divided(start, 3) * T::of(6.0);
            let (h1, h2) = (q[i] - q[i - 1], q[i + 1] - q[i]);
            Some((h1 * h2 * third / T::of(6.0)).abs())
        })
        .collect()
}

/// `(h(q_min) - h(q_max), max alpha - min alpha)`.
pub fn multifractal_width<T: Scalar>(h: &[T], alpha: &[T]) -> (T, T) {
    let delta_h = match (h.first(), h.last()) {
        (Some(&a), Some(&b)) => a - b,
        _ => T::nan(),
    };
    let (lo, hi) = alpha.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &a| {
        (lo.min(a), hi.max(a))
    });
    (delta_h, hi - lo)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultifractalSummary<T> {
    pub q: Vec<T>,
    pub h: Vec<T>,
    pub tau: Vec<T>,
    pub alpha: Vec<T>,
    pub f_alpha: Vec<T>,
    /// `h(q_min) - h(q_max)`.
    pub delta_h: T,
    /// `max h - min h`, reported alongside the endpoint width.
    pub delta_h_range: T,
    pub delta_alpha: T,
    pub fractal_dimension: T,
    pub dropped: Vec<DroppedOrder<T>>,
    pub non_concave: bool,
    pub non_monotone_tau: bool,
    pub warnings: Vec<String>,
}

impl<T: Scalar> MultifractalSummary<T> {
    /// Assembles the summary from per-order fits (sorted by `q`).
    pub fn from_fits(fits: &[(T, Option<PowerLawFit<T>>)], fractal_dimension: T) -> Result<Self> {
        let exps = scaling_exponents(fits, fractal_dimension);
        let spectrum = legendre_spectrum(&exps.q, &exps.tau)?;
        let (delta_h, delta_alpha) = multifractal_width(&exps.h, &spectrum.alpha);
        let (hmin, hmax) = exps
            .h
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(a, b), &v| (a.min(v), b.max(v)));

        let tol = T::of(CONCAVITY_TOLERANCE);
        let non_monotone_tau = exps.tau.windows(2).any(|w| w[1] < w[0] - tol);
        let non_concave = (1..exps.q.len() - 1).any(|i| {
            let (q, t) = (&exps.q, &exps.tau);
            let left = (t[i] - t[i - 1]) / (q[i] - q[i - 1]);
            let right = (t[i + 1] - t[i]) / (q[i + 1] - q[i]);
            right - left > tol
        });

        let mut warnings = Vec::new();
        if !exps.q.iter().any(|&q| q == T::of(2.0)) {
            warnings.push("q grid lacks q = 2: no DFA cross-check point".to_string());
        }
        if non_concave {
            warnings.push("tau(q) is not concave; spectrum flagged non-concave".to_string());
        }
        if non_monotone_tau {
            warnings.push("tau(q) decreases somewhere on the grid".to_string());
        }
        if delta_h < T::of(-0.02) {
            warnings.push(format!("h(q) increases across the grid (delta_h = {delta_h})"));
        }
        let slack = T::of(1e-9);
        if spectrum.f_alpha.iter().any(|&f| f > fractal_dimension + slack) {
            warnings.push("f(alpha) exceeds the fractal dimension".to_string());
        }
        for w in &warnings {
            log::warn!("{w}");
        }

        Ok(Self {
            q: exps.q,
            h: exps.h,
            tau: exps.tau,
            alpha: spectrum.alpha,
            f_alpha: spectrum.f_alpha,
            delta_h,
            delta_h_range: hmax - hmin,
            delta_alpha,
            fractal_dimension,
            dropped: exps.dropped,
            non_concave,
            non_monotone_tau,
            warnings,
        })
    }

    /// Writes the `q,h,tau` CSV.
    pub fn write_exponents_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["q", "h", "tau"])?;
        for i in 0..self.q.len() {
            w.write_record([self.q[i].to_string(), self.h[i].to_string(), self.tau[i].to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes the `alpha,f_alpha` CSV.
    pub fn write_spectrum_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["alpha", "f_alpha"])?;
        for (a, f) in self.alpha.iter().zip(&self.f_alpha) {
            w.write_record([a.to_string(), f.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit(h: f64) -> Option<PowerLawFit<f64>> {
        Some(PowerLawFit {
            exponent: h,
            intercept: 0.0,
            fit_range: (16, 1024),
            residual: 0.0,
            points_used: 10,
            excluded: 0,
            crossover: None,
        })
    }

    #[test]
    fn default_grid_has_zero_and_two() {
        let q = default_q_grid::<f64>();
        assert_eq!(q.len(), 25);
        assert_eq!(q[0], -6.0);
        assert_eq!(q[24], 6.0);
        assert!(q.contains(&0.0) && q.contains(&2.0));
    }

    #[test]
    fn monofractal_tau_is_linear() {
        let fits: Vec<_> = default_q_grid::<f64>().into_iter().map(|q| (q, fit(0.5))).collect();
        let e = scaling_exponents(&fits, 1.0);
        for (q, t) in e.q.iter().zip(&e.tau) {
            assert_eq!(*t, 0.5 * q - 1.0);
        }
        let i2 = e.q.iter().position(|&q| q == 2.0).unwrap();
        assert_eq!(e.tau[i2], 0.0);
    }

    #[test]
    fn missing_fit_is_dropped() {
        let fits = vec![(1.0, fit(0.5)), (2.0, None), (3.0, fit(f64::NAN))];
        let e = scaling_exponents(&fits, 1.0);
        assert_eq!(e.q, vec![1.0]);
        assert_eq!(e.dropped.len(), 2);
    }

    #[test]
    fn linear_tau_collapses_spectrum() {
        let q = default_q_grid::<f64>();
        let tau: Vec<f64> = q.iter().map(|q| 0.7 * q - 1.0).collect();
        let s = legendre_spectrum(&q, &tau).unwrap();
        let (_, da) = multifractal_width(&vec![0.7; q.len()], &s.alpha);
        assert!(da < 1e-12, "{da}");
        assert!(s.alpha.iter().all(|a| (a - 0.7).abs() < 1e-12));
        assert!(s.f_alpha.iter().all(|f| (f - 1.0).abs() < 1e-12));
    }

    #[test]
    fn quadratic_toy_is_differentiated_exactly() {
        // non-uniform grid: second-order stencils are exact on quadratics
        let q = vec![-6.0, -4.5, -2.0, -1.0, 0.0, 0.5, 2.0, 3.5, 6.0];
        let tau: Vec<f64> = q.iter().map(|q| q / 2.0 - q * q / 100.0 - 1.0).collect();
        let s = legendre_spectrum(&q, &tau).unwrap();
        for (q, a) in q.iter().zip(&s.alpha) {
            assert!((a - (0.5 - q / 50.0)).abs() < 1e-12, "q={q}: {a}");
        }
        let i0 = q.iter().position(|&v| v == 0.0).unwrap();
        assert_eq!(s.f_alpha[i0], 1.0);
        let trunc = central_truncation_estimate(&q, &tau);
        assert!(trunc.iter().flatten().all(|e| *e < 1e-12));
        assert!(trunc[0].is_none() && trunc[8].is_none());
    }

    #[test]
    fn too_few_points() {
        let q = [0.0, 1.0, 2.0, 3.0];
        assert!(matches!(
            legendre_spectrum(&q, &q),
            Err(Error::SpectrumUnavailable { .. })
        ));
        let q = [0.0, 1.0, 1.0, 3.0, 4.0];
        assert!(legendre_spectrum(&q, &q).is_err());
    }

    #[test]
    fn analytic_cascade_spectrum_and_inverse_legendre() {
        // tau(q) = -log2(p^q + (1-p)^q) is concave: the tangent family
        // min_j (q alpha_j - f_j) must reproduce tau up to the stencil error.
        let p: f64 = 0.7;
        let q: Vec<f64> = (0..49).map(|i| i as f64 * 0.25 - 6.0).collect();
        let tau: Vec<f64> = q.iter().map(|&q| -(p.powf(q) + (1.0 - p).powf(q)).log2()).collect();
        let s = legendre_spectrum(&q, &tau).unwrap();
        let trunc = central_truncation_estimate(&q, &tau);
        for i in 1..q.len() - 1 {
            let tangent_min = (0..q.len())
                .map(|j| q[i] * s.alpha[j] - s.f_alpha[j])
                .fold(f64::INFINITY, f64::min);
            assert!(
                (tangent_min - tau[i]).abs() <= 2.0 * trunc[i].unwrap() + 1e-12,
                "q={}",
                q[i]
            );
        }
        let (_, da) = multifractal_width(&q, &s.alpha);
        let exact = (0.3f64).log2() - (0.7f64).log2();
        assert!(da < -(0.3f64).log2() + (0.7f64).log2() + 1e-9);
        assert!(da > 0.9 * exact.abs());
        assert!(s.f_alpha.iter().all(|&f| f <= 1.0 + 1e-9));
    }

    #[test]
    fn summary_flags_and_widths() {
        let q = default_q_grid::<f64>();
        let fits: Vec<_> = q.iter().map(|&q| (q, fit(0.8 - 0.05 * q))).collect();
        let s = MultifractalSummary::from_fits(&fits, 1.0).unwrap();
        assert!((s.delta_h - 0.6).abs() < 1e-12);
        assert!((s.delta_h_range - 0.6).abs() < 1e-12);
        assert!(!s.non_concave);
        let i0 = s.q.iter().position(|&v| v == 0.0).unwrap();
        assert_eq!(s.f_alpha[i0], 1.0);

        // convex tau is flagged, not repaired
        let fits: Vec<_> = q.iter().map(|&q| (q, fit(0.5 + 0.05 * q))).collect();
        let s = MultifractalSummary::from_fits(&fits, 1.0).unwrap();
        assert!(s.non_concave);
        assert!(!s.warnings.is_empty());

        let no_two: Vec<_> = [-2.0, -1.0, 0.0, 1.0, 3.0].iter().map(|&q| (q, fit(0.5))).collect();
        let s = MultifractalSummary::from_fits(&no_two, 1.0).unwrap();
        assert!(s.warnings.iter().any(|w| w.contains("q = 2")));
    }

    #[test]
    fn csv_headers() {
        let q = default_q_grid::<f64>();
        let fits: Vec<_> = q.iter().map(|&q| (q, fit(0.5))).collect();
        let s = MultifractalSummary::from_fits(&fits, 1.0).unwrap();
        let mut a = Vec::new();
        s.write_exponents_csv(&mut a).unwrap();
        assert!(String::from_utf8(a).unwrap().starts_with("q,h,tau\n-6,0.5,-4\n"));
        let mut b = Vec::new();
        s.write_spectrum_csv(&mut b).unwrap();
        assert!(String::from_utf8(b).unwrap().starts_with("alpha,f_alpha\n"));
    }
}
