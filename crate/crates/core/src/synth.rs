//! Synthetic series with known scaling, used as estimation oracles.
//!
//! All randomness comes from a `ChaCha8Rng` (rand_chacha) seeded through
//! `SeedableRng::seed_from_u64`; Gaussian draws use
//! `rand_distr::StandardNormal`. The generator versions are pinned by the
//! lockfile, so a seed always produces the same series.
//!
//! Fractional Gaussian noise is produced by circulant embedding
//! (Davies-Harte): the autocovariance
//! `gamma(k) = (|k+1|^2H - 2|k|^2H + |k-1|^2H) / 2` is embedded in a
//! circulant matrix of size `2n` whose eigenvalues come from one FFT, and a
//! Hermitian Gaussian vector scaled by their square roots is transformed
//! back. The result has exactly the target covariance.
//!
//! The binomial cascade is the deterministic dyadic measure: each interval
//! hands a fraction `p` of its mass to its left half and `1 - p` to its right
//! half. Its partition function obeys
//! `Z(q, s/2) = (p^q + (1-p)^q) Z(q, s)`, so that
//! `tau(q) = -log2(p^q + (1-p)^q)` and, for MF-DFA on the measure itself
//! (profile = cumulative mass),
//! `h(q) = (tau(q) + 1) / q = 1/q - ln(p^q + (1-p)^q) / (q ln 2)`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{mean, Scalar};
use crate::series::SignalSeries;

pub const MIN_LENGTH: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorKind {
    WhiteNoise,
    Fgn {
        hurst: f64,
    },
    BinomialCascade {
        p: f64,
    },
    /// Gaussian noise with a broken power-law spectrum: the DFA exponent is
    /// `h_left` below window size `t_break` and `h_right` above it.
    PiecewisePowerLaw {
        h_left: f64,
        h_right: f64,
        t_break: f64,
    },
    /// Shuffled fGn: the fGn marginals with the temporal order destroyed.
    ShuffleSurrogate {
        hurst: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub kind: GeneratorKind,
    pub length: usize,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, length: usize, seed: u64) -> Self {
        Self { kind, length, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.length < MIN_LENGTH {
            return Err(Error::Spec(format!(
                "length {} below the minimum {MIN_LENGTH}",
                self.length
            )));
        }
        let hurst_ok = |h: f64| h > 0.0 && h < 1.0;
        match self.kind {
            GeneratorKind::WhiteNoise => {}
            GeneratorKind::Fgn { hurst } | GeneratorKind::ShuffleSurrogate { hurst } => {
                if !hurst_ok(hurst) {
                    return Err(Error::Spec(format!("Hurst exponent {hurst} outside (0, 1)")));
                }
            }
            GeneratorKind::BinomialCascade { p } => {
                if !(p > 0.5 && p < 1.0) {
                    return Err(Error::Spec(format!("cascade weight {p} outside (0.5, 1)")));
                }
                if !self.length.is_power_of_two() {
                    return Err(Error::Spec(format!(
                        "cascade length {} is not a power of two",
                        self.length
                    )));
                }
            }
            GeneratorKind::PiecewisePowerLaw {
                h_left,
                h_right,
                t_break,
            } => {
                if !hurst_ok(h_left) {
                    return Err(Error::Spec(format!("left exponent {h_left} outside (0, 1)")));
                }
                if !(h_right > 0.0 && h_right < 1.5) {
                    return Err(Error::Spec(format!("right exponent {h_right} outside (0, 1.5)")));
                }
                if !(t_break >= 4.0 && t_break <= (self.length / 4) as f64) {
                    return Err(Error::Spec(format!("break scale {t_break} outside [4, length/4]")));
                }
            }
        }
        Ok(())
    }
}

pub fn generate<T: Scalar>(spec: &GeneratorSpec) -> Result<SignalSeries<T>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.length;
    let values = match spec.kind {
        GeneratorKind::WhiteNoise => white_noise(n, &mut rng),
        GeneratorKind::Fgn { hurst } => fgn(n, hurst, &mut rng)?,
        GeneratorKind::BinomialCascade { p } => binomial_cascade(n.trailing_zeros(), p),
        GeneratorKind::PiecewisePowerLaw {
            h_left,
            h_right,
            t_break,
        } => piecewise_power_law(n, h_left, h_right, t_break, &mut rng),
        GeneratorKind::ShuffleSurrogate { hurst } => {
            let mut v = fgn(n, hurst, &mut rng)?;
            v.shuffle(&mut rng);
            v
        }
    };
    Ok(SignalSeries::generic(values.into_iter().map(T::of).collect()))
}

/// Uniform random permutation of the values; alignment metadata is kept.
pub fn shuffle_surrogate<T: Scalar>(signal: &SignalSeries<T>, seed: u64) -> SignalSeries<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = signal.clone();
    out.values.shuffle(&mut rng);
    out
}

fn white_noise<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Autocovariance of unit-variance fractional Gaussian noise.
pub fn fgn_autocovariance(hurst: f64, lag: usize) -> f64 {
    let k = lag as f64;
    let e = 2.0 * hurst;
    0.5 * ((k + 1.0).powf(e) - 2.0 * k.powf(e) + (k - 1.0).abs().powf(e))
}

fn fgn<R: Rng>(n: usize, hurst: f64, rng: &mut R) -> Result<Vec<f64>> {
    let m = 2 * n;
    let mut row: Vec<Complex<f64>> = (0..m)
        .map(|j| {
            let lag = if j <= n { j } else { m - j };
            Complex::new(fgn_autocovariance(hurst, lag), 0.0)
        })
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(m);
    fft.process(&mut row);

    let top = row.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
    let mut eig = Vec::with_capacity(m);
    for c in &row {
        if c.re < -1e-9 * top {
            return Err(Error::Spec(format!(
                "circulant embedding not non-negative for H = {hurst}"
            )));
        }
        eig.push(c.re.max(0.0));
    }

    let mf = m as f64;
    let mut w = vec![Complex::new(0.0, 0.0); m];
    w[0] = Complex::new((eig[0] / mf).sqrt() * rng.sample::<f64, _>(StandardNormal), 0.0);
    w[n] = Complex::new((eig[n] / mf).sqrt() * rng.sample::<f64, _>(StandardNormal), 0.0);
    for k in 1..n {
        let s = (eig[k] / (2.0 * mf)).sqrt();
        let z = Complex::new(
            s * rng.sample::<f64, _>(StandardNormal),
            s * rng.sample::<f64, _>(StandardNormal),
        );
        w[k] = z;
        w[m - k] = z.conj();
    }
    fft.process(&mut w);
    Ok(w[..n].iter().map(|c| c.re).collect())
}

/// Dyadic multiplicative measure on `2^levels` cells, total mass 1.
fn binomial_cascade(levels: u32, p: f64) -> Vec<f64> {
    let mut mass = vec![1.0];
    for _ in 0..levels {
        mass = mass.iter().flat_map(|&m| [m * p, m * (1.0 - p)]).collect();
    }
    mass
}

/// Gaussian noise with power spectrum `~ 1/f^beta`, `beta = 2h - 1`, so that
/// DFA measures `h`. Unit variance.
/// Gaussian noise with spectral amplitude `amp(nu)` at frequency `nu = k / n`,
/// normalised to zero mean and unit variance.
fn spectral_noise<R: Rng>(n: usize, amp: impl Fn(f64) -> f64, rng: &mut R) -> Vec<f64> {
    let mut w = vec![Complex::new(0.0, 0.0); n];
    for k in 1..=n / 2 {
        let a = amp(k as f64 / n as f64);
        let z = Complex::new(
            a * rng.sample::<f64, _>(StandardNormal),
            a * rng.sample::<f64, _>(StandardNormal),
        );
        if k == n - k {
            w[k] = Complex::new(z.re * std::f64::consts::SQRT_2, 0.0);
        } else {
            w[k] = z;
            w[n - k] = z.conj();
        }
    }
    FftPlanner::<f64>::new().plan_fft_inverse(n).process(&mut w);
    let x: Vec<f64> = w.iter().map(|c| c.re).collect();
    let m = mean(&x);
    let sd = (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64).sqrt();
    x.iter().map(|v| (v - m) / sd).collect()
}

/// Noise whose power spectrum is a broken power law: exponent `2 h_left - 1`
/// above the corner frequency and `2 h_right - 1` below it, joined continuously.
/// The corner sits at `1 / t_break`, so DFA slopes change near window `t_break`.
fn piecewise_power_law<R: Rng>(n: usize, h_left: f64, h_right: f64, t_break: f64, rng: &mut R) -> Vec<f64> {
    let (b_left, b_right) = (2.0 * h_left - 1.0, 2.0 * h_right - 1.0);
    let corner = 1.0 / t_break;
    spectral_noise(
        n,
        |nu| {
            if nu >= corner {
                nu.powf(-b_left / 2.0)
            } else {
                corner.powf(-b_left / 2.0) * (nu / corner).powf(-b_right / 2.0)
            }
        },
        rng,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::variance;

    fn values(kind: GeneratorKind, n: usize, seed: u64) -> Vec<f64> {
        generate::<f64>(&GeneratorSpec::new(kind, n, seed)).unwrap().values
    }

    fn sample_acov(x: &[f64], lag: usize) -> f64 {
        let m = mean(x);
        let n = x.len();
        (0..n - lag).map(|i| (x[i] - m) * (x[i + lag] - m)).sum::<f64>() / n as f64
    }

    #[test]
    fn white_noise_moments() {
        let n = 1 << 16;
        let x = values(GeneratorKind::WhiteNoise, n, 1);
        assert!(mean(&x).abs() < 4.0 / (n as f64).sqrt());
        assert!((variance(&x) - 1.0).abs() < 0.05);
    }

    #[test]
    fn cascade_mass_is_conserved() {
        let x = values(GeneratorKind::BinomialCascade { p: 0.7 }, 1 << 10, 0);
        assert!(x.iter().all(|&v| v > 0.0));
        assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((x[0] - 0.7f64.powi(10)).abs() < 1e-15);
    }

    #[test]
    fn cascade_partition_sums_match_closed_form() {
        // brute force: Z(q, s) = sum over boxes of size s of (box mass)^q
        let p = 0.7;
        let x = values(GeneratorKind::BinomialCascade { p }, 1 << 14, 0);
        let z = |q: f64, s: usize| x.chunks(s).map(|b| b.iter().sum::<f64>().powf(q)).sum::<f64>();
        for q in [-6.0, -4.0, -2.0, -0.5, 0.5, 2.0, 4.0, 6.0] {
            let expected = (p.powf(q) + (1.0 - p).powf(q)).log2();
            for s in [1024usize, 64] {
                let step = z(q, s / 2).log2() - z(q, s).log2();
                assert!((step - expected).abs() < 1e-9, "q={q}, s={s}: {step} vs {expected}");
            }
        }
    }

    #[test]
    fn fgn_half_is_white() {
        let n = 1 << 16;
        let x = values(GeneratorKind::Fgn { hurst: 0.5 }, n, 3);
        let r1 = sample_acov(&x, 1) / sample_acov(&x, 0);
        assert!(r1.abs() < 4.0 / (n as f64).sqrt(), "{r1}");
    }

    #[test]
    fn fgn_autocovariance_matches_target() {
        let n = 1 << 16;
        for (hurst, seed) in [(0.3, 5), (0.7, 6), (0.9, 7)] {
            let x = values(GeneratorKind::Fgn { hurst }, n, seed);
            for lag in 1..=10 {
                let target = fgn_autocovariance(hurst, lag);
                // standard error of a sample autocovariance of a long-memory
                // Gaussian series, from the Bartlett sum over the target covariance
                let bartlett: f64 = (0..n.min(4096))
                    .map(|k| {
                        let g = fgn_autocovariance(hurst, k);
                        let gp = fgn_autocovariance(hurst, k + lag);
                        let gm = fgn_autocovariance(hurst, k.abs_diff(lag));
                        let w = if k == 0 { 1.0 } else { 2.0 };
                        w * (g * g + gp * gm)
                    })
                    .sum();
                let se = (bartlett / n as f64).sqrt();
                let got = sample_acov(&x, lag);
                assert!(
                    (got - target).abs() < 5.0 * se,
                    "H={hurst} lag={lag}: {got} vs {target} (se {se})"
                );
            }
        }
    }

    #[test]
    fn seeds_are_reproducible() {
        let spec = GeneratorSpec::new(GeneratorKind::Fgn { hurst: 0.8 }, 4096, 42);
        let a = generate::<f64>(&spec).unwrap();
        let b = generate::<f64>(&spec).unwrap();
        assert_eq!(a, b);
        let c = generate::<f64>(&GeneratorSpec { seed: 43, ..spec }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn shuffle_preserves_multiset() {
        let s = generate::<f64>(&GeneratorSpec::new(GeneratorKind::WhiteNoise, 1000, 1)).unwrap();
        let t = shuffle_surrogate(&s, 9);
        assert_ne!(s.values, t.values);
        let sort = |v: &[f64]| {
            let mut v = v.to_vec();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v
        };
        assert_eq!(sort(&s.values), sort(&t.values));
        let one = SignalSeries::generic(vec![3.0]);
        assert_eq!(shuffle_surrogate(&one, 1), one);
    }

    #[test]
    fn invalid_specs() {
        let bad = [
            GeneratorSpec::new(GeneratorKind::WhiteNoise, 100, 0),
            GeneratorSpec::new(GeneratorKind::Fgn { hurst: 1.0 }, 1024, 0),
            GeneratorSpec::new(GeneratorKind::BinomialCascade { p: 0.4 }, 1024, 0),
            GeneratorSpec::new(GeneratorKind::BinomialCascade { p: 0.7 }, 1000, 0),
            GeneratorSpec::new(
                GeneratorKind::PiecewisePowerLaw {
                    h_left: 0.7,
                    h_right: 1.0,
                    t_break: 1e6,
                },
                1024,
                0,
            ),
        ];
        for spec in bad {
            assert!(matches!(generate::<f64>(&spec), Err(Error::Spec(_))), "{spec:?}");
        }
    }

    #[test]
    fn spec_json_shape() {
        let spec = GeneratorSpec::new(GeneratorKind::Fgn { hurst: 0.7 }, 65536, 1);
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(json, r#"{"kind":"fgn","hurst":0.7,"length":65536,"seed":1}"#);
        let back: GeneratorSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }
}
