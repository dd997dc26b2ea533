//! Parsers for the compact option grammars.

use serde::Serialize;
use serde_json::{Map, Value};
use spreadfract::fluctuation::DEFAULT_MIN_WINDOW;
use spreadfract::{GeneratorSpec, WindowGrid};

use crate::error::{CliError, Result};

/// Default length of `synth:` inputs that do not set one.
pub const DEFAULT_SYNTH_LENGTH: usize = 1 << 16;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn number<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| usage(format!("{what}: cannot parse {s:?}")))
}

/// `MIN:MAX:STEP` (inclusive) or a comma-separated list.
///
/// Range points are rounded to 12 decimals so that decimal steps land on
/// the exact values a user would type (`0.1 * 3` becomes `0.3`).
pub fn parse_q_grid(spec: &str) -> Result<Vec<f64>> {
    let mut q: Vec<f64> = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [lo, hi, step] = parts[..] else {
            return Err(usage(format!("q grid {spec:?}: expected MIN:MAX:STEP")));
        };
        let (lo, hi, step): (f64, f64, f64) = (number(lo, "q grid")?, number(hi, "q grid")?, number(step, "q grid")?);
        if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(usage(format!("q grid {spec:?}: need MIN <= MAX and STEP > 0")));
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| round12(lo + i as f64 * step)).collect()
    } else {
        spec.split(',')
            .map(|s| number::<f64>(s, "q grid"))
            .collect::<Result<_>>()?
    };
    if let Some(bad) = q.iter().find(|v| !v.is_finite()) {
        return Err(usage(format!("q grid: {bad} is not finite")));
    }
    q.sort_by(|a, b| a.total_cmp(b));
    q.dedup();
    if q.is_empty() {
        return Err(usage("q grid is empty"));
    }
    Ok(q)
}

fn round12(v: f64) -> f64 {
    let r = (v * 1e12).round() / 1e12;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Window-size grid, resolved against the series length once it is known.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "spacing")]
pub enum WindowSpec {
    /// `log:N` or `log:MIN:MAX:N`.
    Log {
        min: Option<usize>,
        max: Option<usize>,
        count: usize,
    },
    /// Comma-separated sizes.
    Explicit { sizes: Vec<usize> },
}

impl WindowSpec {
    pub fn parse(spec: &str) -> Result<Self> {
        if let Some(rest) = spec.strip_prefix("log:") {
            let parts: Vec<&str> = rest.split(':').collect();
            return match parts[..] {
                [n] => Ok(WindowSpec::Log {
                    min: None,
                    max: None,
                    count: number(n, "windows")?,
                }),
                [lo, hi, n] => Ok(WindowSpec::Log {
                    min: Some(number(lo, "windows")?),
                    max: Some(number(hi, "windows")?),
                    count: number(n, "windows")?,
                }),
                _ => Err(usage(format!("windows {spec:?}: expected log:N or log:MIN:MAX:N"))),
            };
        }
        let sizes = spec
            .split(',')
            .map(|s| number(s, "windows"))
            .collect::<Result<Vec<usize>>>()?;
        Ok(WindowSpec::Explicit { sizes })
    }

    pub fn resolve(&self, series_len: usize, detrend_order: usize) -> spreadfract::Result<WindowGrid> {
        match self {
            WindowSpec::Log {
                min: None,
                max: None,
                count,
            } => WindowGrid::logarithmic(series_len, *count, detrend_order),
            WindowSpec::Log { min, max, count } => WindowGrid::logarithmic_between(
                min.unwrap_or(DEFAULT_MIN_WINDOW.max(detrend_order + 2)),
                max.unwrap_or(series_len / 4),
                *count,
                series_len,
                detrend_order,
            ),
            WindowSpec::Explicit { sizes } => WindowGrid::explicit(sizes.clone(), series_len, detrend_order),
        }
    }
}

/// `MIN:MAX` window sizes, inclusive.
pub fn parse_fit_range(spec: &str) -> Result<(usize, usize)> {
    let (lo, hi) = spec
        .split_once(':')
        .ok_or_else(|| usage(format!("fit range {spec:?}: expected MIN:MAX")))?;
    let (lo, hi) = (number(lo, "fit range")?, number(hi, "fit range")?);
    if lo > hi {
        return Err(usage(format!("fit range {spec:?}: MIN exceeds MAX")));
    }
    Ok((lo, hi))
}

/// `synth:KIND[:key=value,...]`, e.g. `synth:fgn:hurst=0.7,length=16384`.
///
/// Keys are the generator parameters plus `length` and `seed`; `seed`
/// falls back to `default_seed` and `length` to [`DEFAULT_SYNTH_LENGTH`].
pub fn parse_synth(spec: &str, default_seed: u64) -> Result<GeneratorSpec> {
    let body = spec
        .strip_prefix("synth:")
        .ok_or_else(|| usage(format!("{spec:?} is not a synth: input")))?;
    let (kind, params) = body.split_once(':').unwrap_or((body, ""));
    let mut obj = Map::new();
    obj.insert("kind".into(), Value::String(kind.trim().to_string()));
    obj.insert("length".into(), Value::from(DEFAULT_SYNTH_LENGTH));
    obj.insert("seed".into(), Value::from(default_seed));
    for pair in params.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| usage(format!("synth parameter {pair:?}: expected key=value")))?;
        let value = match value.trim().parse::<u64>() {
            Ok(u) => Value::from(u),
            Err(_) => Value::from(number::<f64>(value, key)?),
        };
        obj.insert(key.trim().to_string(), value);
    }
    let spec: GeneratorSpec =
        serde_json::from_value(Value::Object(obj)).map_err(|e| usage(format!("synth input {spec:?}: {e}")))?;
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use spreadfract::GeneratorKind;

    #[test]
    fn q_grid_forms() {
        let q = parse_q_grid("-6:6:0.5").unwrap();
        assert_eq!(q.len(), 25);
        assert_eq!(q[0], -6.0);
        assert_eq!(q[24], 6.0);
        assert!(q.contains(&2.0) && q.contains(&0.0));
        let q = parse_q_grid("0:1:0.1").unwrap();
        assert_eq!(q.len(), 11);
        assert_eq!(q[3], 0.3);
        assert_eq!(parse_q_grid("4, -2,2,-4").unwrap(), vec![-4.0, -2.0, 2.0, 4.0]);
        assert!(parse_q_grid("1:0:0.5").is_err());
        assert!(parse_q_grid("a,b").is_err());
        assert!(parse_q_grid("1:2").is_err());
    }

    #[test]
    fn window_forms() {
        assert_eq!(
            WindowSpec::parse("log:20").unwrap(),
            WindowSpec::Log {
                min: None,
                max: None,
                count: 20
            }
        );
        assert_eq!(
            WindowSpec::parse("log:16:1024:10").unwrap(),
            WindowSpec::Log {
                min: Some(16),
                max: Some(1024),
                count: 10
            }
        );
        assert_eq!(
            WindowSpec::parse("16,32,64").unwrap(),
            WindowSpec::Explicit {
                sizes: vec![16, 32, 64]
            }
        );
        assert!(WindowSpec::parse("log:a").is_err());
        let grid = WindowSpec::parse("log:16:256:5").unwrap().resolve(4096, 1).unwrap();
        assert_eq!(grid.sizes().first(), Some(&16));
        assert_eq!(grid.sizes().last(), Some(&256));
    }

    #[test]
    fn fit_range_forms() {
        assert_eq!(parse_fit_range("16:512").unwrap(), (16, 512));
        assert!(parse_fit_range("512:16").is_err());
        assert!(parse_fit_range("16").is_err());
    }

    #[test]
    fn synth_forms() {
        let s = parse_synth("synth:white_noise", 9).unwrap();
        assert_eq!(s.kind, GeneratorKind::WhiteNoise);
        assert_eq!((s.length, s.seed), (DEFAULT_SYNTH_LENGTH, 9));
        let s = parse_synth("synth:fgn:hurst=0.7,length=4096,seed=3", 9).unwrap();
        assert_eq!(s.kind, GeneratorKind::Fgn { hurst: 0.7 });
        assert_eq!((s.length, s.seed), (4096, 3));
        let s = parse_synth("synth:piecewise_power_law:h_left=0.7,h_right=1,t_break=64", 0).unwrap();
        assert_eq!(
            s.kind,
            GeneratorKind::PiecewisePowerLaw {
                h_left: 0.7,
                h_right: 1.0,
                t_break: 64.0
            }
        );
        assert!(parse_synth("synth:fgn:hurst=1.2", 0).is_err());
        assert!(parse_synth("synth:nope", 0).is_err());
        assert!(parse_synth("synth:fgn:hurst", 0).is_err());
    }
}
