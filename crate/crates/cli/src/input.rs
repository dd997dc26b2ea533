//! Input resolution: tick files, spread or signal CSVs, and `synth:` generators.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use spreadfract::ingest::{ExclusionReason, OutsideSessionPolicy, RescaleConfig};
use spreadfract::series::Adjusted;
use spreadfract::{
    generate, intraday_pattern, parse_ticks, remove_intraday_pattern, rescale_to_minutes, spread_return,
    spread_volatility, SessionCalendar, SignalKind, SignalSeries64, SpreadSeries64, TickFormat,
};

use crate::error::{CliError, Context, Result};
use crate::output::sha256_hex;
use crate::spec::parse_synth;

/// Options that turn raw input into a minute-level series.
#[derive(Debug, Clone, Serialize)]
pub struct SessionOptions {
    pub calendar: String,
    pub delta_t: u32,
    pub strict: bool,
    pub bridge_gaps: bool,
    #[serde(skip)]
    pub parsed_calendar: SessionCalendar,
}

impl SessionOptions {
    pub fn new(calendar: &str, delta_t: u32, strict: bool, bridge_gaps: bool) -> Result<Self> {
        let parsed_calendar = SessionCalendar::parse(calendar)?;
        if delta_t == 0 || !parsed_calendar.minutes_per_day.is_multiple_of(delta_t) {
            return Err(CliError::Usage(format!(
                "--delta-t {delta_t} must divide the {}-minute trading day",
                parsed_calendar.minutes_per_day
            )));
        }
        Ok(Self {
            calendar: calendar.to_string(),
            delta_t,
            strict,
            bridge_gaps,
            parsed_calendar,
        })
    }

    pub fn slots_per_day(&self) -> u32 {
        self.parsed_calendar.minutes_per_day / self.delta_t
    }
}

pub enum Content {
    Spread(SpreadSeries64),
    Signal(SignalSeries64),
}

pub struct Loaded {
    /// Provenance recorded in the manifest.
    pub description: Value,
    pub content: Content,
    pub diagnostics: Value,
}

enum FileFormat {
    Ticks,
    Spread,
    Signal,
}

fn sniff(text: &str) -> Option<FileFormat> {
    let header = text.lines().find(|l| !l.trim().is_empty())?;
    let cols: Vec<String> = header.split(',').map(|c| c.trim().to_ascii_lowercase()).collect();
    match cols.iter().map(String::as_str).collect::<Vec<_>>()[..] {
        ["day", "minute", "spread"] => Some(FileFormat::Spread),
        ["day", "minute", "value", "kind"] => Some(FileFormat::Signal),
        _ if ["timestamp", "ask", "bid"].iter().all(|c| cols.iter().any(|h| h == c)) => Some(FileFormat::Ticks),
        _ => None,
    }
}

/// Reads `input`, which is either a file path or a `synth:` specification.
pub fn load(input: &str, session: &SessionOptions, seed: u64) -> Result<Loaded> {
    if input.starts_with("synth:") {
        let spec = parse_synth(input, seed)?;
        let series = generate::<f64>(&spec)?;
        return Ok(Loaded {
            description: json!({ "synth": spec }),
            content: Content::Signal(series),
            diagnostics: json!({}),
        });
    }
    let path = Path::new(input);
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let text =
        std::str::from_utf8(&bytes).map_err(|e| CliError::Usage(format!("{}: not UTF-8 text: {e}", path.display())))?;
    let ctx = || path.display().to_string();
    let (format, content, diagnostics) = match sniff(text) {
        Some(FileFormat::Ticks) => {
            let format = TickFormat {
                strict: session.strict,
                ..TickFormat::default()
            };
            let parsed = parse_ticks::<f64, _>(text.as_bytes(), &format).context(ctx)?;
            let config = RescaleConfig {
                interval_minutes: session.delta_t,
                outside_session: OutsideSessionPolicy::Drop,
            };
            let spread = rescale_to_minutes(&parsed.records, &session.parsed_calendar, &config).context(ctx)?;
            let count = |r: ExclusionReason| spread.excluded.iter().filter(|m| m.reason == r).count();
            let diagnostics = json!({
                "ticks_accepted": parsed.records.len(),
                "rejected_lines": parsed.rejected,
                "parse_warnings": parsed.warnings,
                "ticks_outside_sessions": spread.dropped_ticks,
                "minutes_kept": spread.len(),
                "minutes_empty": count(ExclusionReason::Empty),
                "minutes_zero_spread": count(ExclusionReason::ZeroSpread),
                "partial_days": spread.partial_days,
                "trading_days": spread.day_count(),
            });
            ("ticks", Content::Spread(spread), diagnostics)
        }
        Some(FileFormat::Spread) => {
            let spread = SpreadSeries64::read_csv(text.as_bytes(), session.slots_per_day()).context(ctx)?;
            let diagnostics = json!({
                "minutes_kept": spread.len(),
                "minutes_missing": spread.excluded.len(),
                "partial_days": spread.partial_days,
                "trading_days": spread.day_count(),
            });
            ("spread", Content::Spread(spread), diagnostics)
        }
        Some(FileFormat::Signal) => {
            let series = SignalSeries64::read_csv(text.as_bytes(), Some(session.slots_per_day())).context(ctx)?;
            ("signal", Content::Signal(series), json!({}))
        }
        None => {
            return Err(CliError::Usage(format!(
            "{}: unrecognized header; expected ticks (timestamp,ask,bid), day,minute,spread or day,minute,value,kind",
            path.display()
        )))
        }
    };
    Ok(Loaded {
        description: json!({ "path": input, "format": format, "sha256": sha256_hex(&bytes) }),
        content,
        diagnostics,
    })
}

/// Returns, volatility and their deseasonalized versions for one spread series.
pub struct Derived {
    pub raw_return: SignalSeries64,
    pub raw_volatility: SignalSeries64,
    pub adjusted_return: Adjusted<f64>,
    pub adjusted_volatility: Adjusted<f64>,
    pub undefined_slots: (usize, usize),
}

impl Derived {
    pub fn compute(spread: &SpreadSeries64, bridge_gaps: bool) -> Result<Self> {
        let raw_return = spread_return(spread, bridge_gaps)?;
        let raw_volatility = spread_volatility(&raw_return)?;
        let return_pattern = intraday_pattern(&raw_return)?;
        let volatility_pattern = intraday_pattern(&raw_volatility)?;
        let adjusted_return = remove_intraday_pattern(&raw_return, &return_pattern)?;
        let adjusted_volatility = remove_intraday_pattern(&raw_volatility, &volatility_pattern)?;
        Ok(Self {
            undefined_slots: (return_pattern.undefined_slots(), volatility_pattern.undefined_slots()),
            raw_return,
            raw_volatility,
            adjusted_return,
            adjusted_volatility,
        })
    }

    pub fn select(&self, kind: SignalKind) -> Result<&SignalSeries64> {
        match kind {
            SignalKind::RawReturn => Ok(&self.raw_return),
            SignalKind::RawVolatility => Ok(&self.raw_volatility),
            SignalKind::AdjustedReturn => Ok(&self.adjusted_return.series),
            SignalKind::AdjustedVolatility => Ok(&self.adjusted_volatility.series),
            SignalKind::Generic => Err(CliError::Usage("--series generic only applies to signal inputs".into())),
        }
    }

    pub fn diagnostics(&self) -> Value {
        json!({
            "returns": self.raw_return.len(),
            "pattern_undefined_slots_return": self.undefined_slots.0,
            "pattern_undefined_slots_volatility": self.undefined_slots.1,
            "adjusted_return_skipped": self.adjusted_return.skipped.len(),
            "adjusted_volatility_skipped": self.adjusted_volatility.skipped.len(),
        })
    }
}

/// Resolves the series a scaling command analyses.
///
/// Signal inputs are used as they are; spread and tick inputs go through
/// the return/volatility pipeline and `kind` picks the result.
pub fn analysis_series(loaded: Loaded, kind: SignalKind, bridge_gaps: bool) -> Result<(SignalSeries64, Value)> {
    match loaded.content {
        Content::Signal(s) => Ok((s, loaded.diagnostics)),
        Content::Spread(spread) => {
            let derived = Derived::compute(&spread, bridge_gaps)?;
            let series = derived.select(kind)?.clone();
            let mut diagnostics = loaded.diagnostics;
            diagnostics["series"] = derived.diagnostics();
            Ok((series, diagnostics))
        }
    }
}
