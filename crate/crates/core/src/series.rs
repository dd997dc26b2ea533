//! Spread returns and volatilities, intraday-pattern removal and
//! autocorrelation functions.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::SpreadSeries;
use crate::scalar::{mean, Scalar};

/// Pattern slots with `|M| < PATTERN_EPSILON` are not divided by.
pub const PATTERN_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    RawReturn,
    RawVolatility,
    AdjustedReturn,
    AdjustedVolatility,
    Generic,
}

impl SignalKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SignalKind::RawReturn => "raw_return",
            SignalKind::RawVolatility => "raw_volatility",
            SignalKind::AdjustedReturn => "adjusted_return",
            SignalKind::AdjustedVolatility => "adjusted_volatility",
            SignalKind::Generic => "generic",
        }
    }

    fn adjusted(self) -> Self {
        match self {
            SignalKind::RawReturn => SignalKind::AdjustedReturn,
            SignalKind::RawVolatility => SignalKind::AdjustedVolatility,
            other => other,
        }
    }
}

impl fmt::Display for SignalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SignalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "raw_return" => SignalKind::RawReturn,
            "raw_volatility" => SignalKind::RawVolatility,
            "adjusted_return" => SignalKind::AdjustedReturn,
            "adjusted_volatility" => SignalKind::AdjustedVolatility,
            "generic" => SignalKind::Generic,
            other => {
                return Err(Error::Format {
                    line: 0,
                    message: format!("unknown series kind {other:?}"),
                })
            }
        })
    }
}

/// A uniformly sampled real series, optionally aligned to a trading-day clock.
///
/// Aligned series (`slots_per_day = Some(n)`) place element `i` at clock
/// position `day_index[i] * n + minute_of_day[i]`. Generic series are
/// contiguous: `day_index` is zero and `minute_of_day` is the element index.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSeries<T> {
    pub values: Vec<T>,
    pub kind: SignalKind,
    pub day_index: Vec<u32>,
    pub minute_of_day: Vec<u32>,
    pub slots_per_day: Option<u32>,
}

impl<T: Scalar> SignalSeries<T> {
    pub fn generic(values: Vec<T>) -> Self {
        let n = values.len();
        Self {
            values,
            kind: SignalKind::Generic,
            day_index: vec![0; n],
            minute_of_day: (0..n as u32).collect(),
            slots_per_day: None,
        }
    }

    /// Aligned series; validates that clock positions strictly increase.
    pub fn aligned(
        values: Vec<T>,
        kind: SignalKind,
        day_index: Vec<u32>,
        minute_of_day: Vec<u32>,
        slots_per_day: u32,
    ) -> Result<Self> {
        let s = Self {
            values,
            kind,
            day_index,
            minute_of_day,
            slots_per_day: Some(slots_per_day),
        };
        s.check_alignment()?;
        Ok(s)
    }

    fn check_alignment(&self) -> Result<()> {
        let n = self.values.len();
        if self.day_index.len() != n || self.minute_of_day.len() != n {
            return Err(Error::Invariant("signal columns differ in length".into()));
        }
        if let Some(slots) = self.slots_per_day {
            if let Some(i) = self.minute_of_day.iter().position(|&m| m >= slots) {
                return Err(Error::Format {
                    line: i + 2,
                    message: "minute outside the trading day".into(),
                });
            }
        }
        for i in 1..n {
            if self.position(i) <= self.position(i - 1) {
                return Err(Error::Ordering {
                    line: i + 2,
                    message: "clock positions must increase".into(),
                });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Clock position of element `i`.
    pub fn position(&self, i: usize) -> u64 {
        match self.slots_per_day {
            Some(slots) => self.day_index[i] as u64 * slots as u64 + self.minute_of_day[i] as u64,
            None => i as u64,
        }
    }

    fn with_values(&self, values: Vec<T>, kind: SignalKind) -> Self {
        Self {
            values,
            kind,
            ..self.clone()
        }
    }

    /// Keeps the elements whose index satisfies `keep`.
    fn filtered(&self, kind: SignalKind, mut keep: impl FnMut(usize) -> Option<T>) -> Self {
        let mut out = Self {
            values: Vec::new(),
            kind,
            day_index: Vec::new(),
            minute_of_day: Vec::new(),
            slots_per_day: self.slots_per_day,
        };
        for i in 0..self.len() {
            if let Some(v) = keep(i) {
                out.values.push(v);
                out.day_index.push(self.day_index[i]);
                out.minute_of_day.push(self.minute_of_day[i]);
            }
        }
        out
    }

    /// Writes the `day,minute,value,kind` CSV.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["day", "minute", "value", "kind"])?;
        for i in 0..self.len() {
            w.write_record([
                self.day_index[i].to_string(),
                self.minute_of_day[i].to_string(),
                self.values[i].to_string(),
                self.kind.as_str().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the `day,minute,value,kind` CSV. Generic series ignore
    /// `slots_per_day`; other kinds require it.
    pub fn read_csv<R: Read>(reader: R, slots_per_day: Option<u32>) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = r.headers()?.clone();
        if header.iter().collect::<Vec<_>>() != ["day", "minute", "value", "kind"] {
            return Err(Error::Format {
                line: 1,
                message: "expected header day,minute,value,kind".into(),
            });
        }
        let (mut values, mut days, mut minutes) = (Vec::new(), Vec::new(), Vec::new());
        let mut kind: Option<SignalKind> = None;
        for (i, row) in r.records().enumerate() {
            let row = row?;
            let line = i + 2;
            let bad = |what: &str| Error::Format {
                line,
                message: format!("bad {what}"),
            };
            days.push(row.get(0).and_then(|s| s.parse().ok()).ok_or_else(|| bad("day"))?);
            minutes.push(row.get(1).and_then(|s| s.parse().ok()).ok_or_else(|| bad("minute"))?);
            values.push(
                row.get(2)
                    .and_then(|s| s.parse::<T>().ok())
                    .ok_or_else(|| bad("value"))?,
            );
            let k: SignalKind = row.get(3).ok_or_else(|| bad("kind"))?.parse()?;
            match kind {
                None => kind = Some(k),
                Some(prev) if prev != k => {
                    return Err(Error::Format {
                        line,
                        message: format!("mixed kinds {prev} and {k}"),
                    })
                }
                _ => {}
            }
        }
        let kind = kind.unwrap_or(SignalKind::Generic);
        let slots = match kind {
            SignalKind::Generic => None,
            _ => Some(
                slots_per_day
                    .ok_or_else(|| Error::Config(format!("a {kind} series needs the trading-day slot count")))?,
            ),
        };
        let s = Self {
            values,
            kind,
            day_index: days,
            minute_of_day: minutes,
            slots_per_day: slots,
        };
        s.check_alignment()?;
        Ok(s)
    }
}

/// Log-ratio of consecutive rescaled spreads.
///
/// Returns are never taken across a day boundary. Across excluded minutes
/// inside a day they are taken only when `bridge_gaps` is set.
pub fn spread_return<T: Scalar>(spreads: &SpreadSeries<T>, bridge_gaps: bool) -> Result<SignalSeries<T>> {
    let n = spreads.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let mut out = SignalSeries {
        values: Vec::with_capacity(n),
        kind: SignalKind::RawReturn,
        day_index: Vec::with_capacity(n),
        minute_of_day: Vec::with_capacity(n),
        slots_per_day: Some(spreads.slots_per_day),
    };
    for i in 1..n {
        let same_day = spreads.day_index[i] == spreads.day_index[i - 1];
        let adjacent = spreads.minute_of_day[i] == spreads.minute_of_day[i - 1] + 1;
        if same_day && (adjacent || bridge_gaps) {
            out.values.push((spreads.values[i] / spreads.values[i - 1]).ln());
            out.day_index.push(spreads.day_index[i]);
            out.minute_of_day.push(spreads.minute_of_day[i]);
        }
    }
    if out.is_empty() {
        return Err(Error::InsufficientData { needed: 2, got: 1 });
    }
    Ok(out)
}

/// Absolute value of a raw spread return.
pub fn spread_volatility<T: Scalar>(returns: &SignalSeries<T>) -> Result<SignalSeries<T>> {
    if returns.kind != SignalKind::RawReturn {
        return Err(Error::KindMismatch {
            expected: SignalKind::RawReturn.to_string(),
            found: returns.kind.to_string(),
        });
    }
    Ok(returns.with_values(
        returns.values.iter().map(|v| v.abs()).collect(),
        SignalKind::RawVolatility,
    ))
}

/// Per-slot mean of a signal over the trading days that define the slot.
#[derive(Debug, Clone, PartialEq)]
pub struct IntradayPattern<T> {
    pub source_kind: SignalKind,
    /// `None` when no day defines the slot, or when a volatility slot averages to zero.
    pub means: Vec<Option<T>>,
    pub days_counted: Vec<u32>,
}

impl<T: Scalar> IntradayPattern<T> {
    pub fn slots(&self) -> usize {
        self.means.len()
    }

    pub fn undefined_slots(&self) -> usize {
        self.means.iter().filter(|m| m.is_none()).count()
    }
}

pub fn intraday_pattern<T: Scalar>(signal: &SignalSeries<T>) -> Result<IntradayPattern<T>> {
    let slots = signal
        .slots_per_day
        .ok_or_else(|| Error::Config("intraday pattern needs a series aligned to the trading day".into()))?
        as usize;
    let mut sums = vec![T::zero(); slots];
    let mut counts = vec![0u32; slots];
    for (i, &v) in signal.values.iter().enumerate() {
        let m = signal.minute_of_day[i] as usize;
        sums[m] += v;
        counts[m] += 1;
    }
    let volatility = matches!(signal.kind, SignalKind::RawVolatility | SignalKind::AdjustedVolatility);
    let means = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| {
            if c == 0 {
                return None;
            }
            let m = s / T::from_u32(c).unwrap();
            if volatility && m == T::zero() {
                None
            } else {
                Some(m)
            }
        })
        .collect();
    Ok(IntradayPattern {
        source_kind: signal.kind,
        means,
        days_counted: counts,
    })
}

/// Deseasonalized series plus the positions that could not be adjusted.
#[derive(Debug, Clone)]
pub struct Adjusted<T> {
    pub series: SignalSeries<T>,
    /// `(day, minute)` of elements dropped because `|M| < PATTERN_EPSILON`.
    pub skipped: Vec<(u32, u32)>,
}

/// Divides each element by the pattern mean at its slot.
pub fn remove_intraday_pattern<T: Scalar>(
    signal: &SignalSeries<T>,
    pattern: &IntradayPattern<T>,
) -> Result<Adjusted<T>> {
    if signal.slots_per_day != Some(pattern.slots() as u32) {
        return Err(Error::Config(
            "pattern and signal use different trading-day layouts".into(),
        ));
    }
    if pattern.source_kind != signal.kind {
        return Err(Error::KindMismatch {
            expected: pattern.source_kind.to_string(),
            found: signal.kind.to_string(),
        });
    }
    let eps = T::of(PATTERN_EPSILON);
    for (i, _) in signal.values.iter().enumerate() {
        let slot = signal.minute_of_day[i] as usize;
        if pattern.days_counted[slot] == 0 {
            return Err(Error::UndefinedSlot { slot });
        }
    }
    let mut skipped = Vec::new();
    let series = signal.filtered(signal.kind.adjusted(), |i| {
        let slot = signal.minute_of_day[i] as usize;
        match pattern.means[slot] {
            Some(m) if m.abs() >= eps => Some(signal.values[i] / m),
            _ => {
                skipped.push((signal.day_index[i], signal.minute_of_day[i]));
                None
            }
        }
    });
    if !skipped.is_empty() {
        log::warn!("{} element(s) skipped for near-zero intraday pattern", skipped.len());
    }
    Ok(Adjusted { series, skipped })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutocorrelationCurve<T> {
    pub lags: Vec<usize>,
    pub values: Vec<T>,
    /// Number of `(t', t'+t)` pairs averaged at each lag.
    pub pair_counts: Vec<usize>,
    pub series_kind: SignalKind,
}

impl<T: Scalar> AutocorrelationCurve<T> {
    pub fn at(&self, lag: usize) -> Option<T> {
        self.lags.iter().position(|&l| l == lag).map(|i| self.values[i])
    }

    /// Writes the `lag,acf` CSV.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["lag", "acf"])?;
        for (lag, v) in self.lags.iter().zip(&self.values) {
            w.write_record([lag.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `min(len / 4, 10 * slots_per_day)`; aligned series only cap by length otherwise.
pub fn default_max_lag<T: Scalar>(signal: &SignalSeries<T>) -> usize {
    let by_len = signal.len() / 4;
    match signal.slots_per_day {
        Some(slots) => by_len.min(10 * slots as usize),
        None => by_len,
    }
}

/// Autocorrelation `[<x(t')x(t'+t)> - <x>^2] / sigma^2` for lags `0..=max_lag`.
///
/// Without `bridge_gaps` a lag is measured on the trading-day clock and
/// only pairs whose positions differ by exactly `t` are averaged; with it,
/// lags count elements. The product average divides by the per-lag pair
/// count; the mean and variance are taken over the whole series. Lags
/// without any pair are omitted from the curve.
pub fn autocorrelation<T: Scalar>(
    signal: &SignalSeries<T>,
    max_lag: usize,
    bridge_gaps: bool,
) -> Result<AutocorrelationCurve<T>> {
    let n = signal.len();
    if n <= max_lag {
        return Err(Error::InsufficientData {
            needed: max_lag + 1,
            got: n,
        });
    }
    let m = mean(&signal.values);
    let centred: Vec<T> = signal.values.iter().map(|&v| v - m).collect();
    let var = centred.iter().map(|&y| y * y).sum::<T>() / T::of_usize(n);
    if !(var > T::zero()) {
        return Err(Error::ZeroVariance);
    }

    // Dense clock: slot -> centred value.
    let grid: Vec<Option<T>> = if bridge_gaps || signal.slots_per_day.is_none() {
        centred.iter().map(|&y| Some(y)).collect()
    } else {
        let origin = signal.position(0);
        let span = (signal.position(n - 1) - origin + 1) as usize;
        let mut g = vec![None; span];
        for (i, &y) in centred.iter().enumerate() {
            g[(signal.position(i) - origin) as usize] = Some(y);
        }
        g
    };

    let per_lag: Vec<(usize, Option<(T, usize)>)> = (0..=max_lag)
        .into_par_iter()
        .map(|lag| {
            if lag >= grid.len() {
                return (lag, None);
            }
            let (mut prod, mut head, mut tail, mut count) = (T::zero(), T::zero(), T::zero(), 0usize);
            for (a, b) in grid.iter().zip(&grid[lag..]) {
                if let (Some(a), Some(b)) = (a, b) {
                    prod += *a * *b;
                    head += *a;
                    tail += *b;
                    count += 1;
                }
            }
            if count == 0 {
                return (lag, None);
            }
            let c = T::of_usize(count);
            // <x_i x_j> - m^2 rewritten on centred values y = x - m.
            let cov = prod / c + m * (head / c + tail / c);
            (lag, Some((cov / var, count)))
        })
        .collect();

    let mut curve = AutocorrelationCurve {
        lags: Vec::new(),
        values: Vec::new(),
        pair_counts: Vec::new(),
        series_kind: signal.kind,
    };
    for (lag, r) in per_lag {
        if let Some((a, count)) = r {
            curve.lags.push(lag);
            curve.values.push(a);
            curve.pair_counts.push(count);
        }
    }
    Ok(curve)
}
