//! Tick-quote parsing and aggregation into the per-minute rescaled spread.
//!
//! The rescaled spread of a trading minute is the arithmetic mean of the
//! instantaneous spreads `ask - bid` of every quote observed in that minute.
//! Minutes without any quote, and minutes whose mean spread is exactly zero,
//! are excluded from the series and recorded, so that downstream log-returns
//! are never taken against a fabricated value.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::{NaiveDate, NaiveDateTime, NaiveTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S";

/// One quote observation: lowest ask and highest bid at a point in time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickRecord<T> {
    pub timestamp: NaiveDateTime,
    pub ask: T,
    pub bid: T,
}

impl<T: Scalar> TickRecord<T> {
    /// Builds a record, rejecting non-positive prices and crossed quotes.
    pub fn new(timestamp: NaiveDateTime, ask: T, bid: T) -> std::result::Result<Self, String> {
        if !(ask.is_finite() && bid.is_finite()) {
            return Err("non-finite price".into());
        }
        if ask <= T::zero() || bid <= T::zero() {
            return Err(format!("non-positive price (ask={ask}, bid={bid})"));
        }
        if bid > ask {
            return Err(format!("crossed quote: bid {bid} > ask {ask}"));
        }
        Ok(Self { timestamp, ask, bid })
    }

    /// Instantaneous spread `a(t') - b(t')`.
    pub fn spread(&self) -> T {
        instantaneous_spread(self)
    }
}

pub fn instantaneous_spread<T: Scalar>(tick: &TickRecord<T>) -> T {
    tick.ask - tick.bid
}

/// What to do when timestamps go backwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisorderPolicy {
    #[default]
    Reject,
    StableSort,
}

/// Layout of a delimited tick file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TickFormat {
    pub delimiter: u8,
    pub timestamp_format: String,
    pub disorder: DisorderPolicy,
    /// Turn per-line rejections (malformed fields, crossed quotes) into hard errors.
    pub strict: bool,
}

impl Default for TickFormat {
    fn default() -> Self {
        Self {
            delimiter: b',',
            timestamp_format: DEFAULT_TIMESTAMP_FORMAT.to_string(),
            disorder: DisorderPolicy::Reject,
            strict: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RejectedLine {
    pub line: usize,
    pub reason: String,
}

/// Output of [`parse_ticks`]: the accepted records plus line-level diagnostics.
#[derive(Debug, Clone)]
pub struct ParsedTicks<T> {
    pub records: Vec<TickRecord<T>>,
    pub rejected: Vec<RejectedLine>,
    pub warnings: Vec<String>,
}

/// Parses a delimited tick stream whose header names `timestamp`, `ask` and `bid`.
pub fn parse_ticks<T: Scalar, R: Read>(input: R, format: &TickFormat) -> Result<ParsedTicks<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(format.delimiter)
        .trim(csv::Trim::All)
        .flexible(true)
        .has_headers(false)
        .from_reader(input);

    let mut out = ParsedTicks {
        records: Vec::new(),
        rejected: Vec::new(),
        warnings: Vec::new(),
    };
    let mut rows = reader.records();

    let header = match rows.next() {
        None => {
            out.warnings.push("empty tick input".to_string());
            log::warn!("empty tick input");
            return Ok(out);
        }
        Some(h) => h?,
    };
    let column = |name: &str| header.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (ts_col, ask_col, bid_col) = match (column("timestamp"), column("ask"), column("bid")) {
        (Some(t), Some(a), Some(b)) => (t, a, b),
        _ => {
            return Err(Error::Format {
                line: 1,
                message: format!(
                    "header must name timestamp, ask and bid columns, got {:?}",
                    header.iter().collect::<Vec<_>>()
                ),
            })
        }
    };

    let mut disordered = false;
    for row in rows {
        let row = row?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        if row.iter().all(str::is_empty) {
            continue;
        }
        match parse_row::<T>(&row, ts_col, ask_col, bid_col, &format.timestamp_format) {
            Ok(tick) => {
                if let Some(prev) = out.records.last() {
                    if tick.timestamp < prev.timestamp {
                        match format.disorder {
                            DisorderPolicy::Reject => {
                                return Err(Error::Ordering {
                                    line,
                                    message: format!("{} precedes {}", tick.timestamp, prev.timestamp),
                                })
                            }
                            DisorderPolicy::StableSort => disordered = true,
                        }
                    }
                }
                out.records.push(tick);
            }
            Err(reason) => {
                if format.strict {
                    return Err(Error::Format { line, message: reason });
                }
                log::warn!("line {line}: {reason}");
                out.rejected.push(RejectedLine { line, reason });
            }
        }
    }

    if disordered {
        out.records.sort_by_key(|t| t.timestamp);
        out.warnings
            .push("timestamps were out of order and have been stable-sorted".to_string());
    }
    if !out.rejected.is_empty() {
        out.warnings.push(format!("{} line(s) rejected", out.rejected.len()));
    }
    Ok(out)
}

fn parse_row<T: Scalar>(
    row: &csv::StringRecord,
    ts_col: usize,
    ask_col: usize,
    bid_col: usize,
    ts_format: &str,
) -> std::result::Result<TickRecord<T>, String> {
    let field = |i: usize, name: &str| row.get(i).ok_or_else(|| format!("missing {name} field"));
    let ts_raw = field(ts_col, "timestamp")?;
    let timestamp =
        NaiveDateTime::parse_from_str(ts_raw, ts_format).map_err(|e| format!("bad timestamp {ts_raw:?}: {e}"))?;
    let price = |i: usize, name: &str| -> std::result::Result<T, String> {
        let raw = field(i, name)?;
        raw.parse::<T>().map_err(|_| format!("bad {name} price {raw:?}"))
    };
    TickRecord::new(timestamp, price(ask_col, "ask")?, price(bid_col, "bid")?)
}

/// A half-open wall-clock trading session `[open, close)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub open: NaiveTime,
    pub close: NaiveTime,
}

impl Session {
    pub fn minutes(&self) -> u32 {
        ((self.close - self.open).num_seconds() / 60) as u32
    }
}

/// Trading-day layout: ordered, disjoint sessions whose lengths add up to
/// `minutes_per_day`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionCalendar {
    pub minutes_per_day: u32,
    pub sessions: Vec<Session>,
}

impl Default for SessionCalendar {
    /// Two 120-minute sessions, 09:30-11:30 and 13:00-15:00.
    fn default() -> Self {
        let t = |h, m| NaiveTime::from_hms_opt(h, m, 0).unwrap();
        Self {
            minutes_per_day: 240,
            sessions: vec![
                Session {
                    open: t(9, 30),
                    close: t(11, 30),
                },
                Session {
                    open: t(13, 0),
                    close: t(15, 0),
                },
            ],
        }
    }
}

impl SessionCalendar {
    pub fn new(sessions: Vec<Session>) -> Result<Self> {
        let minutes_per_day = sessions.iter().map(Session::minutes).sum();
        let cal = Self {
            minutes_per_day,
            sessions,
        };
        cal.validate()?;
        Ok(cal)
    }

    /// Parses `HH:MM-HH:MM[,HH:MM-HH:MM...]`.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut sessions = Vec::new();
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (open, close) = part
                .split_once('-')
                .ok_or_else(|| Error::Calendar(format!("session {part:?} is not OPEN-CLOSE")))?;
            let time = |s: &str| {
                NaiveTime::parse_from_str(s.trim(), "%H:%M")
                    .map_err(|e| Error::Calendar(format!("bad time {s:?}: {e}")))
            };
            sessions.push(Session {
                open: time(open)?,
                close: time(close)?,
            });
        }
        Self::new(sessions)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sessions.is_empty() {
            return Err(Error::Calendar("no sessions".into()));
        }
        for s in &self.sessions {
            if s.close <= s.open {
                return Err(Error::Calendar(format!(
                    "session {}-{} is empty or inverted",
                    s.open, s.close
                )));
            }
            if s.open.second() != 0 || s.close.second() != 0 {
                return Err(Error::Calendar("session bounds must be whole minutes".into()));
            }
        }
        for pair in self.sessions.windows(2) {
            if pair[1].open < pair[0].close {
                return Err(Error::Calendar("sessions must be ordered and disjoint".into()));
            }
        }
        let total: u32 = self.sessions.iter().map(Session::minutes).sum();
        if total != self.minutes_per_day {
            return Err(Error::Calendar(format!(
                "sessions cover {total} minutes but minutes_per_day is {}",
                self.minutes_per_day
            )));
        }
        Ok(())
    }

    /// Position of `time` in the trading day, in minutes since the first open.
    /// Intervals are half-open, so a tick at second 0 belongs to its minute.
    pub fn minute_of_day(&self, time: NaiveTime) -> Option<u32> {
        let mut offset = 0;
        for s in &self.sessions {
            if time >= s.open && time < s.close {
                return Some(offset + ((time - s.open).num_seconds() / 60) as u32);
            }
            offset += s.minutes();
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutsideSessionPolicy {
    #[default]
    Drop,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RescaleConfig {
    /// Aggregation interval in minutes; must divide `minutes_per_day`.
    pub interval_minutes: u32,
    pub outside_session: OutsideSessionPolicy,
}

impl Default for RescaleConfig {
    fn default() -> Self {
        Self {
            interval_minutes: 1,
            outside_session: OutsideSessionPolicy::Drop,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExclusionReason {
    /// No quote in the interval.
    Empty,
    /// Every quote in the interval had ask == bid.
    ZeroSpread,
    /// Absent from a re-read CSV; the original reason is unknown.
    Missing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExcludedMinute {
    pub day: u32,
    pub minute: u32,
    pub reason: ExclusionReason,
}

/// Per-interval rescaled spread `S(t')`, aligned to the trading-day clock.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadSeries<T> {
    pub values: Vec<T>,
    pub day_index: Vec<u32>,
    pub minute_of_day: Vec<u32>,
    /// Slots per trading day (`minutes_per_day / interval_minutes`).
    pub slots_per_day: u32,
    pub empty_minutes: usize,
    pub excluded: Vec<ExcludedMinute>,
    /// Days with fewer than `slots_per_day` retained values.
    pub partial_days: Vec<u32>,
    /// Ticks dropped for falling outside every session.
    pub dropped_ticks: usize,
}

impl<T: Scalar> SpreadSeries<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn day_count(&self) -> usize {
        self.day_index.last().map_or(0, |&d| d as usize + 1)
    }

    /// Builds a series from already-aggregated values, validating alignment.
    pub fn from_parts(
        values: Vec<T>,
        day_index: Vec<u32>,
        minute_of_day: Vec<u32>,
        slots_per_day: u32,
    ) -> Result<Self> {
        if values.len() != day_index.len() || values.len() != minute_of_day.len() {
            return Err(Error::Invariant("spread series columns differ in length".into()));
        }
        let mut prev: Option<u64> = None;
        for i in 0..values.len() {
            if !(values[i] > T::zero()) || !values[i].is_finite() {
                return Err(Error::Format {
                    line: i + 2,
                    message: format!("spread {} is not positive", values[i]),
                });
            }
            if minute_of_day[i] >= slots_per_day {
                return Err(Error::Format {
                    line: i + 2,
                    message: format!("minute {} out of range", minute_of_day[i]),
                });
            }
            let pos = day_index[i] as u64 * slots_per_day as u64 + minute_of_day[i] as u64;
            if prev.is_some_and(|p| pos <= p) {
                return Err(Error::Ordering {
                    line: i + 2,
                    message: "day/minute positions must increase".into(),
                });
            }
            prev = Some(pos);
        }
        let mut series = Self {
            values,
            day_index,
            minute_of_day,
            slots_per_day,
            empty_minutes: 0,
            excluded: Vec::new(),
            partial_days: Vec::new(),
            dropped_ticks: 0,
        };
        let days = series.day_count() as u32;
        let mut next = 0usize;
        for day in 0..days {
            let mut kept = 0;
            for minute in 0..slots_per_day {
                if next < series.len() && series.day_index[next] == day && series.minute_of_day[next] == minute {
                    next += 1;
                    kept += 1;
                } else {
                    series.excluded.push(ExcludedMinute {
                        day,
                        minute,
                        reason: ExclusionReason::Missing,
                    });
                }
            }
            if kept < slots_per_day {
                series.partial_days.push(day);
            }
        }
        Ok(series)
    }

    /// Writes the `day,minute,spread` CSV; excluded minutes are omitted.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["day", "minute", "spread"])?;
        for i in 0..self.len() {
            w.write_record([
                self.day_index[i].to_string(),
                self.minute_of_day[i].to_string(),
                self.values[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, slots_per_day: u32) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = r.headers()?.clone();
        if header.iter().collect::<Vec<_>>() != ["day", "minute", "spread"] {
            return Err(Error::Format {
                line: 1,
                message: "expected header day,minute,spread".into(),
            });
        }
        let (mut values, mut days, mut minutes) = (Vec::new(), Vec::new(), Vec::new());
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
                    .ok_or_else(|| bad("spread"))?,
            );
        }
        Self::from_parts(values, days, minutes, slots_per_day)
    }
}

/// Aggregates sorted ticks into the per-interval mean spread.
///
/// Days are numbered in date order among dates with at least one in-session
/// tick. Interval boundaries never straddle days.
pub fn rescale_to_minutes<T: Scalar>(
    ticks: &[TickRecord<T>],
    cal: &SessionCalendar,
    config: &RescaleConfig,
) -> Result<SpreadSeries<T>> {
    cal.validate()?;
    let interval = config.interval_minutes;
    if interval == 0 || !cal.minutes_per_day.is_multiple_of(interval) {
        return Err(Error::Config(format!(
            "interval of {interval} minutes does not divide the {}-minute trading day",
            cal.minutes_per_day
        )));
    }
    let slots = cal.minutes_per_day / interval;

    let mut buckets: BTreeMap<NaiveDate, Vec<Vec<T>>> = BTreeMap::new();
    let mut dropped = 0usize;
    for tick in ticks {
        match cal.minute_of_day(tick.timestamp.time()) {
            Some(minute) => {
                let day = buckets
                    .entry(tick.timestamp.date())
                    .or_insert_with(|| vec![Vec::new(); slots as usize]);
                day[(minute / interval) as usize].push(tick.spread());
            }
            None => match config.outside_session {
                OutsideSessionPolicy::Drop => dropped += 1,
                OutsideSessionPolicy::Error => {
                    return Err(Error::OutsideSession {
                        timestamp: tick.timestamp.to_string(),
                    })
                }
            },
        }
    }
    if dropped > 0 {
        log::warn!("{dropped} tick(s) outside trading sessions dropped");
    }

    let mut series = SpreadSeries {
        values: Vec::new(),
        day_index: Vec::new(),
        minute_of_day: Vec::new(),
        slots_per_day: slots,
        empty_minutes: 0,
        excluded: Vec::new(),
        partial_days: Vec::new(),
        dropped_ticks: dropped,
    };
    for (day, (_, mut slot_spreads)) in buckets.into_iter().enumerate() {
        let day = day as u32;
        let mut kept = 0;
        for (minute, spreads) in slot_spreads.iter_mut().enumerate() {
            let minute = minute as u32;
            if spreads.is_empty() {
                series.empty_minutes += 1;
                series.excluded.push(ExcludedMinute {
                    day,
                    minute,
                    reason: ExclusionReason::Empty,
                });
                continue;
            }
            let s = order_free_mean(spreads);
            if s <= T::zero() {
                series.excluded.push(ExcludedMinute {
                    day,
                    minute,
                    reason: ExclusionReason::ZeroSpread,
                });
                continue;
            }
            series.values.push(s);
            series.day_index.push(day);
            series.minute_of_day.push(minute);
            kept += 1;
        }
        if kept < slots {
            series.partial_days.push(day);
        }
    }
    Ok(series)
}

/// Mean that does not depend on input order: values are summed in sorted
/// order and the result is clamped into `[min, max]` to absorb rounding.
fn order_free_mean<T: Scalar>(values: &mut [T]) -> T {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite spreads"));
    let sum: T = values.iter().copied().sum();
    let mean = sum / T::of_usize(values.len());
    mean.max(values[0]).min(values[values.len() - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(s: &str) -> NaiveDateTime {
        NaiveDateTime::parse_from_str(s, DEFAULT_TIMESTAMP_FORMAT).unwrap()
    }

    fn tick(s: &str, ask: f64, bid: f64) -> TickRecord<f64> {
        TickRecord::new(ts(s), ask, bid).unwrap()
    }

    #[test]
    fn parses_a_plain_line() {
        let input = "timestamp,ask,bid\n2004-01-02 09:31:05, 10.02, 10.00\n";
        let parsed = parse_ticks::<f64, _>(input.as_bytes(), &TickFormat::default()).unwrap();
        assert_eq!(parsed.records, vec![tick("2004-01-02 09:31:05", 10.02, 10.00)]);
        assert!(parsed.rejected.is_empty());
    }

    #[test]
    fn header_columns_may_be_reordered() {
        let input = "bid,timestamp,ask\n10.00,2004-01-02 09:31:05,10.02\n";
        let parsed = parse_ticks::<f64, _>(input.as_bytes(), &TickFormat::default()).unwrap();
        assert_eq!(parsed.records[0].ask, 10.02);
    }

    #[test]
    fn crossed_quote_is_rejected_with_line() {
        let input = "timestamp,ask,bid\n2004-01-02 09:31:05,10.02,10.00\n2004-01-02 09:31:10,10.02,10.05\n";
        let parsed = parse_ticks::<f64, _>(input.as_bytes(), &TickFormat::default()).unwrap();
        assert_eq!(parsed.records.len(), 1);
        assert_eq!(parsed.rejected.len(), 1);
        assert_eq!(parsed.rejected[0].line, 3);
        assert!(parsed.rejected[0].reason.contains("crossed"));

        let strict = TickFormat {
            strict: true,
            ..TickFormat::default()
        };
        let err = parse_ticks::<f64, _>(input.as_bytes(), &strict).unwrap_err();
        assert!(matches!(err, Error::Format { line: 3, .. }), "{err}");
    }

    #[test]
    fn empty_input_warns() {
        let parsed = parse_ticks::<f64, _>("".as_bytes(), &TickFormat::default()).unwrap();
        assert!(parsed.records.is_empty());
        assert_eq!(parsed.warnings.len(), 1);
    }

    #[test]
    fn bad_header_is_a_format_error() {
        let err = parse_ticks::<f64, _>("time,a,b\n".as_bytes(), &TickFormat::default()).unwrap_err();
        assert!(matches!(err, Error::Format { line: 1, .. }));
    }

    #[test]
    fn malformed_lines_are_reported() {
        let input = "timestamp,ask,bid\n2004-01-02 09:31:05,abc,10.00\nnot a date,1,1\n";
        let parsed = parse_ticks::<f64, _>(input.as_bytes(), &TickFormat::default()).unwrap();
        let lines: Vec<_> = parsed.rejected.iter().map(|r| r.line).collect();
        assert_eq!(lines, vec![2, 3]);
    }

    #[test]
    fn disorder_rejects_or_sorts() {
        let input = "timestamp,ask,bid\n2004-01-02 09:31:05,10.02,10.00\n2004-01-02 09:30:05,10.03,10.00\n";
        let err = parse_ticks::<f64, _>(input.as_bytes(), &TickFormat::default()).unwrap_err();
        assert!(matches!(err, Error::Ordering { line: 3, .. }));

        let sorting = TickFormat {
            disorder: DisorderPolicy::StableSort,
            ..TickFormat::default()
        };
        let parsed = parse_ticks::<f64, _>(input.as_bytes(), &sorting).unwrap();
        assert_eq!(parsed.records[0].ask, 10.03);
        assert!(!parsed.warnings.is_empty());
    }

    #[test]
    fn instantaneous_spread_examples() {
        assert!((tick("2004-01-02 09:31:05", 10.02, 10.00).spread() - 0.02).abs() < 1e-12);
        assert_eq!(tick("2004-01-02 09:31:05", 10.00, 10.00).spread(), 0.0);
        assert!((tick("2004-01-02 09:31:05", 7.53, 7.50).spread() - 0.03).abs() < 1e-12);
    }

    #[test]
    fn default_calendar_layout() {
        let cal = SessionCalendar::default();
        cal.validate().unwrap();
        let t = |h, m, s| NaiveTime::from_hms_opt(h, m, s).unwrap();
        assert_eq!(cal.minute_of_day(t(9, 30, 0)), Some(0));
        assert_eq!(cal.minute_of_day(t(9, 30, 59)), Some(0));
        assert_eq!(cal.minute_of_day(t(9, 31, 0)), Some(1));
        assert_eq!(cal.minute_of_day(t(11, 29, 59)), Some(119));
        assert_eq!(cal.minute_of_day(t(11, 30, 0)), None);
        assert_eq!(cal.minute_of_day(t(13, 0, 0)), Some(120));
        assert_eq!(cal.minute_of_day(t(14, 59, 59)), Some(239));
        assert_eq!(cal.minute_of_day(t(15, 0, 0)), None);
        assert_eq!(SessionCalendar::parse("09:30-11:30,13:00-15:00").unwrap(), cal);
    }

    #[test]
    fn calendar_rejects_overlap() {
        assert!(SessionCalendar::parse("09:30-11:30,11:00-15:00").is_err());
        assert!(SessionCalendar::parse("10:00-09:00").is_err());
        let bad = SessionCalendar {
            minutes_per_day: 241,
            ..SessionCalendar::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn rescale_means_and_exclusions() {
        let ticks = vec![
            tick("2004-01-02 09:30:00", 10.02, 10.00),
            tick("2004-01-02 09:30:30", 10.04, 10.00),
            tick("2004-01-02 09:31:10", 10.05, 10.00),
            tick("2004-01-02 09:33:00", 10.00, 10.00),
        ];
        let s = rescale_to_minutes(&ticks, &SessionCalendar::default(), &RescaleConfig::default()).unwrap();
        assert_eq!(s.minute_of_day, vec![0, 1]);
        assert!((s.values[0] - 0.03).abs() < 1e-12);
        assert!((s.values[1] - 0.05).abs() < 1e-12);
        // minute 2 empty, minute 3 zero spread, 4..239 empty
        assert_eq!(s.empty_minutes, 237);
        assert!(s
            .excluded
            .iter()
            .any(|e| e.minute == 3 && e.reason == ExclusionReason::ZeroSpread));
        assert_eq!(s.partial_days, vec![0]);
    }

    #[test]
    fn days_never_merge_and_outside_ticks_drop() {
        let ticks = vec![
            tick("2004-01-02 14:59:30", 10.02, 10.00),
            tick("2004-01-02 15:00:00", 10.02, 10.00),
            tick("2004-01-05 09:30:10", 10.04, 10.00),
        ];
        let cal = SessionCalendar::default();
        let s = rescale_to_minutes(&ticks, &cal, &RescaleConfig::default()).unwrap();
        assert_eq!(s.day_index, vec![0, 1]);
        assert_eq!(s.minute_of_day, vec![239, 0]);
        assert_eq!(s.dropped_ticks, 1);
        let strict = RescaleConfig {
            outside_session: OutsideSessionPolicy::Error,
            ..RescaleConfig::default()
        };
        assert!(matches!(
            rescale_to_minutes(&ticks, &cal, &strict),
            Err(Error::OutsideSession { .. })
        ));
    }

    #[test]
    fn coarser_interval() {
        let ticks = vec![
            tick("2004-01-02 09:30:00", 10.02, 10.00),
            tick("2004-01-02 09:34:59", 10.04, 10.00),
        ];
        let cfg = RescaleConfig {
            interval_minutes: 5,
            ..RescaleConfig::default()
        };
        let s = rescale_to_minutes(&ticks, &SessionCalendar::default(), &cfg).unwrap();
        assert_eq!(s.slots_per_day, 48);
        assert_eq!(s.len(), 1);
        assert!((s.values[0] - 0.03).abs() < 1e-12);
        let bad = RescaleConfig {
            interval_minutes: 7,
            ..RescaleConfig::default()
        };
        assert!(rescale_to_minutes(&ticks, &SessionCalendar::default(), &bad).is_err());
    }

    #[test]
    fn csv_round_trip_reconstructs_gaps() {
        let ticks = vec![
            tick("2004-01-02 09:30:00", 10.02, 10.00),
            tick("2004-01-02 09:32:00", 10.07, 10.00),
        ];
        let s = rescale_to_minutes(&ticks, &SessionCalendar::default(), &RescaleConfig::default()).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf.clone())
            .unwrap()
            .starts_with("day,minute,spread\n0,0,"));
        let back = SpreadSeries::<f64>::read_csv(buf.as_slice(), 240).unwrap();
        assert_eq!(back.values, s.values);
        assert_eq!(back.minute_of_day, s.minute_of_day);
        assert_eq!(back.excluded.len(), 238);
    }
}
