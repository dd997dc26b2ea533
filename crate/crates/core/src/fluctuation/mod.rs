//! Detrended fluctuation analysis and its multifractal generalization.
//!
//! The signal is integrated into a de-meaned profile, cut into
//! non-overlapping windows of size `t`, and a least-squares polynomial is
//! removed from each window. The per-window mean squared residuals
//! `f_k(t)^2` are computed once per window size and then reduced for every
//! order `q`:
//!
//! * `q = 2`: `F_2(t) = sqrt(mean f_k^2)`, the ordinary DFA function,
//! * `q = 0`: `F_0(t) = exp(mean ln f_k)`,
//! * otherwise `F_q(t) = (mean (f_k^2)^(q/2))^(1/q)`.
//!
//! DFA and MF-DFA share the reduction, so `q = 2` is bit-identical in both.

mod detrend;
mod fit;
mod grid;

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{mean, variance, Scalar};

pub use detrend::window_fluctuations;
pub use fit::{
    detect_crossover, fit_power_law, Crossover, MemoryClass, PowerLawFit, CLASS_TOLERANCE, CROSSOVER_RESIDUAL_RATIO,
    CROSSOVER_SLOPE_TOLERANCE, MIN_SEGMENT_POINTS,
};
pub use grid::{Spacing, WindowGrid, DEFAULT_GRID_POINTS, DEFAULT_MIN_WINDOW};

/// Zero residuals are floored at this multiple of the signal variance when
/// `q <= 0`.
pub const FLOOR_FACTOR: f64 = 1e-15;
/// A `(q, t)` point with more than this fraction of floored windows is
/// excluded from fitting.
pub const UNRELIABLE_FRACTION: f64 = 0.01;
/// Shortest series accepted by [`build_profile`].
pub const MIN_PROFILE_LEN: usize = 8;

/// Cumulative sum of the de-meaned signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile<T> {
    pub values: Vec<T>,
    pub source_mean: T,
}

pub fn build_profile<T: Scalar>(signal: &[T]) -> Result<Profile<T>> {
    if signal.len() < MIN_PROFILE_LEN {
        return Err(Error::InsufficientData {
            needed: MIN_PROFILE_LEN,
            got: signal.len(),
        });
    }
    let m = mean(signal);
    let values = signal
        .iter()
        .scan(T::zero(), |acc, &a| {
            *acc += a - m;
            Some(*acc)
        })
        .collect();
    Ok(Profile { values, source_mean: m })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FluctuationOptions {
    pub detrend_order: usize,
    /// Add the backward window pass.
    pub bidirectional: bool,
}

impl Default for FluctuationOptions {
    fn default() -> Self {
        Self {
            detrend_order: 1,
            bidirectional: false,
        }
    }
}

/// `f_k(t)^2` for every window size of a grid, computed once and shared by all orders.
#[derive(Debug, Clone)]
pub struct FluctuationTable<T> {
    pub sizes: Vec<usize>,
    pub squared: Vec<Vec<T>>,
    /// Variance of the analysed signal, the scale of the zero-residual floor.
    pub signal_variance: T,
}

impl<T: Scalar> FluctuationTable<T> {
    pub fn compute(signal: &[T], grid: &WindowGrid, options: &FluctuationOptions) -> Result<Self> {
        let largest = *grid.sizes().last().expect("grid is never empty");
        if signal.len() < 4 * largest {
            return Err(Error::InsufficientData {
                needed: 4 * largest,
                got: signal.len(),
            });
        }
        if grid.sizes()[0] < options.detrend_order + 2 {
            return Err(Error::Window(format!(
                "grid starts below detrend order {} + 2",
                options.detrend_order
            )));
        }
        let var = variance(signal);
        if !(var > T::zero()) {
            return Err(Error::ZeroVariance);
        }
        let profile = build_profile(signal)?;
        let squared = grid
            .sizes()
            .par_iter()
            .map(|&t| window_fluctuations(&profile, t, options.detrend_order, options.bidirectional))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            sizes: grid.sizes().to_vec(),
            squared,
            signal_variance: var,
        })
    }

    /// Reduces the table to `F_q(t)` for one order.
    pub fn curve(&self, q: T) -> FluctuationCurve<T> {
        let floor = T::of(FLOOR_FACTOR) * self.signal_variance;
        let mut c = FluctuationCurve {
            q,
            sizes: self.sizes.clone(),
            values: Vec::with_capacity(self.sizes.len()),
            windows_used: Vec::with_capacity(self.sizes.len()),
            floored: Vec::with_capacity(self.sizes.len()),
            reliable: Vec::with_capacity(self.sizes.len()),
        };
        for f2 in &self.squared {
            let (value, floored) = q_moment(f2, q, floor);
            let ok =
                value.is_finite() && value > T::zero() && (floored as f64) <= UNRELIABLE_FRACTION * f2.len() as f64;
            c.values.push(value);
            c.windows_used.push(f2.len());
            c.floored.push(floored);
            c.reliable.push(ok);
        }
        c
    }
}

/// `F_q` from the per-window squared residuals; returns the floored-window count.
fn q_moment<T: Scalar>(f2: &[T], q: T, floor: T) -> (T, usize) {
    let n = T::of_usize(f2.len());
    let two = T::of(2.0);
    if q == two {
        return (mean(f2).sqrt(), 0);
    }
    if q > T::zero() {
        // (1/N) sum (f2)^(q/2) in log space; zero windows contribute nothing.
        let logs: Vec<T> = f2
            .iter()
            .filter(|&&v| v > T::zero())
            .map(|&v| v.ln() * q / two)
            .collect();
        if logs.is_empty() {
            return (T::zero(), 0);
        }
        return ((log_mean_exp(&logs, n) / q).exp(), 0);
    }
    let mut floored = 0;
    let logs: Vec<T> = f2
        .iter()
        .map(|&v| {
            if v < floor {
                floored += 1;
                floor.ln()
            } else {
                v.ln()
            }
        })
        .collect();
    if q == T::zero() {
        let m = logs.iter().copied().sum::<T>() / n;
        return ((m / two).exp(), floored);
    }
    let scaled: Vec<T> = logs.iter().map(|&l| l * q / two).collect();
    ((log_mean_exp(&scaled, n) / q).exp(), floored)
}

/// `ln((1/n) sum exp(l_i))`, stabilized by the maximum term.
fn log_mean_exp<T: Scalar>(logs: &[T], n: T) -> T {
    let top = logs.iter().copied().fold(T::neg_infinity(), T::max);
    let s: T = logs.iter().map(|&l| (l - top).exp()).sum();
    top + s.ln() - n.ln()
}

/// `F_q(t)` on a window grid for one order `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationCurve<T> {
    pub q: T,
    pub sizes: Vec<usize>,
    pub values: Vec<T>,
    /// Number of windows `N_t` reduced at each size.
    pub windows_used: Vec<usize>,
    /// Windows floored because their residual vanished.
    pub floored: Vec<usize>,
    /// False where the point must not enter a fit.
    pub reliable: Vec<bool>,
}

impl<T: Scalar> FluctuationCurve<T> {
    /// A curve from bare `(t, F)` points, all marked reliable.
    pub fn from_points(q: T, sizes: Vec<usize>, values: Vec<T>) -> Self {
        let n = sizes.len();
        assert_eq!(n, values.len(), "sizes and values must pair up");
        Self {
            q,
            sizes,
            values,
            windows_used: vec![0; n],
            floored: vec![0; n],
            reliable: vec![true; n],
        }
    }

    pub fn unreliable_points(&self) -> usize {
        self.reliable.iter().filter(|r| !**r).count()
    }
}

/// Writes curves as `q,t,F` rows.
pub fn write_curves_csv<T: Scalar, W: Write>(curves: &[FluctuationCurve<T>], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["q", "t", "F"])?;
    for c in curves {
        for (t, f) in c.sizes.iter().zip(&c.values) {
            w.write_record([c.q.to_string(), t.to_string(), f.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a `q,t,F` CSV; consecutive rows with equal `q` form one curve.
pub fn read_curves_csv<T: Scalar, R: Read>(reader: R) -> Result<Vec<FluctuationCurve<T>>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    if r.headers()?.iter().collect::<Vec<_>>() != ["q", "t", "F"] {
        return Err(Error::Format {
            line: 1,
            message: "expected header q,t,F".into(),
        });
    }
    let mut curves: Vec<FluctuationCurve<T>> = Vec::new();
    for (i, row) in r.records().enumerate() {
        let row = row?;
        let bad = |what: &str| Error::Format {
            line: i + 2,
            message: format!("bad {what}"),
        };
        let q: T = row.get(0).and_then(|s| s.parse().ok()).ok_or_else(|| bad("q"))?;
        let t: usize = row.get(1).and_then(|s| s.parse().ok()).ok_or_else(|| bad("t"))?;
        let f: T = row.get(2).and_then(|s| s.parse().ok()).ok_or_else(|| bad("F"))?;
        match curves.last_mut() {
            Some(c) if c.q == q => {
                c.sizes.push(t);
                c.values.push(f);
                c.windows_used.push(0);
                c.floored.push(0);
                c.reliable.push(true);
            }
            _ => curves.push(FluctuationCurve::from_points(q, vec![t], vec![f])),
        }
    }
    Ok(curves)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DfaResult<T> {
    pub curve: FluctuationCurve<T>,
    pub fit: PowerLawFit<T>,
    pub class: MemoryClass,
}

/// Ordinary DFA: `F_2(t)` and its power-law exponent over `fit_range`.
pub fn dfa<T: Scalar>(
    signal: &[T],
    grid: &WindowGrid,
    options: &FluctuationOptions,
    fit_range: Option<(usize, usize)>,
) -> Result<DfaResult<T>> {
    let table = FluctuationTable::compute(signal, grid, options)?;
    let curve = table.curve(T::of(2.0));
    let fit = fit_power_law(&curve, fit_range)?;
    let class = MemoryClass::of(fit.exponent.as_f64());
    Ok(DfaResult { curve, fit, class })
}

/// MF-DFA: one curve per entry of `q_grid`, in grid order.
pub fn mfdfa<T: Scalar>(
    signal: &[T],
    grid: &WindowGrid,
    q_grid: &[T],
    options: &FluctuationOptions,
) -> Result<Vec<FluctuationCurve<T>>> {
    if let Some(q) = q_grid.iter().find(|q| !q.is_finite()) {
        return Err(Error::Config(format!("q value {q} is not finite")));
    }
    let table = FluctuationTable::compute(signal, grid, options)?;
    let curves: Vec<_> = q_grid.par_iter().map(|&q| table.curve(q)).collect();
    for c in &curves {
        let floored: usize = c.floored.iter().sum();
        if floored > 0 {
            log::warn!("q={}: {floored} zero-residual window(s) floored", c.q);
        }
    }
    Ok(curves)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn profile_examples() {
        let p = build_profile(&[1.0; 8]).unwrap();
        assert!(p.values.iter().all(|&v| v == 0.0));
        let alt: Vec<f64> = (0..8).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let p = build_profile(&alt).unwrap();
        assert_eq!(p.values, vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        assert!(matches!(build_profile(&[1.0; 7]), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn q_moment_branches() {
        let f2 = [1.0, 4.0, 16.0];
        let (f, _) = q_moment(&f2, 2.0, 0.0);
        assert_eq!(f, 7.0f64.sqrt());
        let (f, _) = q_moment(&f2, 0.0, 0.0);
        assert!((f - 2.0).abs() < 1e-12); // geometric mean of 1, 2, 4
        let (f, _) = q_moment(&f2, 4.0, 0.0);
        assert!((f - ((1.0 + 16.0 + 256.0) / 3.0f64).powf(0.25)).abs() < 1e-12);
        let (f, _) = q_moment(&f2, -2.0, 0.0);
        assert!((f - ((1.0 + 0.25 + 0.0625) / 3.0f64).powf(-0.5)).abs() < 1e-12);
        let (_, floored) = q_moment(&[0.0, 1.0], -2.0, 1e-15);
        assert_eq!(floored, 1);
    }

    #[test]
    fn constant_signal_is_rejected() {
        let grid = WindowGrid::explicit(vec![4, 8], 64, 1).unwrap();
        let err = mfdfa(&[3.0; 64], &grid, &[2.0], &FluctuationOptions::default()).unwrap_err();
        assert!(matches!(err, Error::ZeroVariance));
    }

    #[test]
    fn q_two_matches_dfa_bitwise() {
        let x = noise(4096, 3);
        let grid = WindowGrid::logarithmic(x.len(), 12, 1).unwrap();
        let opts = FluctuationOptions::default();
        let d = dfa(&x, &grid, &opts, None).unwrap();
        let m = mfdfa(&x, &grid, &[-2.0, 2.0, 4.0], &opts).unwrap();
        assert_eq!(m[1].values, d.curve.values);
        assert_eq!(fit_power_law(&m[1], None).unwrap(), d.fit);
    }

    #[test]
    fn monotone_in_q_and_continuous_at_zero() {
        let x = noise(8192, 11);
        let grid = WindowGrid::logarithmic(x.len(), 10, 1).unwrap();
        let qs = [-4.0, -2.0, -0.1, 0.0, 0.1, 2.0, 4.0];
        let curves = mfdfa(&x, &grid, &qs, &FluctuationOptions::default()).unwrap();
        for j in 0..grid.sizes().len() {
            for w in curves.windows(2) {
                assert!(w[0].values[j] <= w[1].values[j] * (1.0 + 1e-12));
            }
            let (lo, zero, hi) = (curves[2].values[j], curves[3].values[j], curves[4].values[j]);
            assert!(lo <= zero && zero <= hi);
        }
    }

    #[test]
    fn bidirectional_doubles_windows() {
        let x = noise(1000, 5);
        let grid = WindowGrid::explicit(vec![16, 64], x.len(), 1).unwrap();
        let opts = FluctuationOptions {
            bidirectional: true,
            ..FluctuationOptions::default()
        };
        let t = FluctuationTable::compute(&x, &grid, &opts).unwrap();
        assert_eq!(t.squared[0].len(), 2 * (1000 / 16));
    }

    #[test]
    fn random_walk_is_unstable() {
        let walk: Vec<f64> = noise(1 << 14, 9)
            .iter()
            .scan(0.0, |s, v| {
                *s += v;
                Some(*s)
            })
            .collect();
        let grid = WindowGrid::logarithmic(walk.len(), 20, 1).unwrap();
        let d = dfa(&walk, &grid, &FluctuationOptions::default(), None).unwrap();
        assert!((d.fit.exponent - 1.5).abs() < 0.1, "{}", d.fit.exponent);
        assert_eq!(d.class, MemoryClass::Unstable);
    }

    #[test]
    fn curves_csv_round_trip() {
        let a = FluctuationCurve::from_points(-2.5, vec![16, 32], vec![0.125, 1e-7]);
        let b = FluctuationCurve::from_points(2.0, vec![16, 32], vec![3.0, 4.5]);
        let mut buf = Vec::new();
        write_curves_csv(&[a.clone(), b.clone()], &mut buf).unwrap();
        assert!(String::from_utf8(buf.clone())
            .unwrap()
            .starts_with("q,t,F\n-2.5,16,0.125\n"));
        assert_eq!(read_curves_csv::<f64, _>(buf.as_slice()).unwrap(), vec![a, b]);
    }

    #[test]
    fn f32_pipeline_runs() {
        let x: Vec<f32> = noise(1 << 12, 2).iter().map(|&v| v as f32).collect();
        let grid = WindowGrid::logarithmic(x.len(), 10, 1).unwrap();
        let d = dfa(&x, &grid, &FluctuationOptions::default(), None).unwrap();
        assert!((d.fit.exponent - 0.5).abs() < 0.1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn profile_ends_at_zero(values in prop::collection::vec(-1e3f64..1e3, 8..300)) {
            let p = build_profile(&values).unwrap();
            let sd = variance(&values).sqrt();
            prop_assert!(p.values.last().unwrap().abs() <= 1e-8 * values.len() as f64 * sd.max(1e-300) + 1e-9);
        }

        #[test]
        fn affine_trend_in_profile_is_absorbed(
            seed in 0u64..1000,
            a in -100.0f64..100.0,
            b in -10.0f64..10.0,
            t in 4usize..40,
        ) {
            let p = build_profile(&noise(400, seed)).unwrap();
            let shifted = Profile {
                values: p.values.iter().enumerate().map(|(i, &v)| v + a + b * i as f64).collect(),
                source_mean: p.source_mean,
            };
            let f = window_fluctuations(&p, t, 1, false).unwrap();
            let g = window_fluctuations(&shifted, t, 1, false).unwrap();
            for (x, y) in f.iter().zip(&g) {
                prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1e-3));
            }
        }
    }
}
