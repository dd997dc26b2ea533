//! Subcommand implementations. Each one computes every artifact in memory
//! first and only then touches the output directory.

use std::path::PathBuf;

use serde_json::{json, Value};
use spreadfract::fluctuation::write_curves_csv;
use spreadfract::multifractal::DEFAULT_FRACTAL_DIMENSION;
use spreadfract::series::default_max_lag;
use spreadfract::{
    autocorrelation, detect_crossover, fit_power_law, generate, mfdfa as run_mfdfa, shuffle_surrogate,
    FluctuationCurve64, FluctuationOptions, FluctuationTable, MemoryClass, MultifractalSummary, PowerLawFit64,
    SignalSeries64,
};

use crate::error::{CliError, Result};
use crate::input::{analysis_series, load, Content, Derived, SessionOptions};
use crate::output::{Artifacts, Axis, Plot};
use crate::spec::{parse_fit_range, parse_q_grid, parse_synth, WindowSpec};
use crate::{AcfArgs, DfaArgs, IngestArgs, MfdfaArgs, ScalingArgs, SessionArgs, SurrogateArgs, SynthArgs};

fn session_options(a: &SessionArgs) -> Result<SessionOptions> {
    SessionOptions::new(&a.calendar, a.delta_t, a.strict, a.bridge_gaps)
}

/// Scaling options parsed and checked before any input is read.
struct ScalingPlan {
    windows: WindowSpec,
    fit_range: Option<(usize, usize)>,
    options: FluctuationOptions,
    crossover: bool,
}

impl ScalingPlan {
    fn new(a: &ScalingArgs) -> Result<Self> {
        Ok(Self {
            windows: WindowSpec::parse(&a.windows)?,
            fit_range: a.fit_range.as_deref().map(parse_fit_range).transpose()?,
            options: FluctuationOptions {
                detrend_order: a.detrend_order,
                bidirectional: a.bidirectional,
            },
            crossover: a.crossover,
        })
    }

    fn config(&self, a: &ScalingArgs) -> Value {
        json!({
            "series": a.series,
            "windows": self.windows,
            "fit_range": self.fit_range,
            "crossover": self.crossover,
            "detrend_order": self.options.detrend_order,
            "bidirectional": self.options.bidirectional,
        })
    }

    fn fit(&self, curve: &FluctuationCurve64) -> spreadfract::Result<PowerLawFit64> {
        if self.crossover {
            detect_crossover(curve, self.fit_range)
        } else {
            fit_power_law(curve, self.fit_range)
        }
    }
}

fn session_config(s: &SessionOptions, seed: u64) -> Value {
    json!({
        "calendar": s.calendar,
        "delta_t": s.delta_t,
        "strict": s.strict,
        "bridge_gaps": s.bridge_gaps,
        "seed": seed,
    })
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(b), Value::Object(e)) = (&mut base, extra) {
        b.extend(e);
    }
    base
}

fn curve_diagnostics(curve: &FluctuationCurve64) -> Value {
    json!({
        "q": curve.q,
        "windows_used": curve.windows_used,
        "floored_windows": curve.floored,
        "unreliable_points": curve.unreliable_points(),
    })
}

fn fit_json(fit: &PowerLawFit64) -> Value {
    json!({
        "exponent": fit.exponent,
        "intercept": fit.intercept,
        "fit_range": fit.fit_range,
        "residual": fit.residual,
        "points_used": fit.points_used,
        "excluded_points": fit.excluded,
        "crossover": fit.crossover,
    })
}

fn fluctuation_plot(title: &str, reference: Option<Value>) -> Plot {
    Plot {
        file: "fluctuation.csv".into(),
        title: title.into(),
        x: Axis::log("t", "window size t"),
        y: Axis::log("F", "F_q(t)"),
        group_by: Some("q"),
        reference_line: reference,
    }
}

pub fn ingest(a: IngestArgs) -> Result<Vec<PathBuf>> {
    let session = session_options(&a.session)?;
    let loaded = load(&a.io.input, &session, a.session.seed)?;
    let Content::Spread(spread) = loaded.content else {
        return Err(CliError::Usage("ingest needs a tick file or a spread CSV".into()));
    };
    let mut out = Artifacts::new("ingest");
    out.config = session_config(&session, a.session.seed);
    out.input = loaded.description;
    out.diagnostics = loaded.diagnostics;
    out.add_csv("spread.csv", |w| spread.write_csv(w))?;
    out.plot(Plot {
        file: "spread.csv".into(),
        title: "Rescaled spread".into(),
        x: Axis::linear("minute", "minute of trading day"),
        y: Axis::linear("spread", "mean spread"),
        group_by: Some("day"),
        reference_line: None,
    });
    out.commit(&a.io.out)
}

pub fn acf(a: AcfArgs) -> Result<Vec<PathBuf>> {
    let session = session_options(&a.session)?;
    let loaded = load(&a.io.input, &session, a.session.seed)?;
    let mut out = Artifacts::new("acf");
    out.config = merge(
        session_config(&session, a.session.seed),
        json!({ "max_lag": a.max_lag }),
    );
    out.input = loaded.description;
    out.diagnostics = loaded.diagnostics;

    let derived;
    let targets: Vec<(&str, &str, &SignalSeries64)> = match &loaded.content {
        Content::Spread(spread) => {
            derived = Derived::compute(spread, session.bridge_gaps)?;
            out.diagnostic("series", derived.diagnostics())?;
            vec![
                ("acf_raw_return.csv", "Raw spread return", &derived.raw_return),
                (
                    "acf_raw_volatility.csv",
                    "Raw spread volatility",
                    &derived.raw_volatility,
                ),
                (
                    "acf_adjusted_volatility.csv",
                    "Adjusted spread volatility",
                    &derived.adjusted_volatility.series,
                ),
            ]
        }
        Content::Signal(series) => vec![("acf.csv", "Autocorrelation", series)],
    };

    let mut lags = serde_json::Map::new();
    for (file, title, series) in targets {
        let max_lag = a.max_lag.unwrap_or_else(|| default_max_lag(series));
        let curve = autocorrelation(series, max_lag, session.bridge_gaps)?;
        let band = 4.0 / (series.len() as f64).sqrt();
        lags.insert(
            file.to_string(),
            json!({ "max_lag": max_lag, "lags_reported": curve.lags.len(), "noise_band": band }),
        );
        out.add_csv(file, |w| curve.write_csv(w))?;
        out.plot(Plot {
            file: file.into(),
            title: format!("{title} autocorrelation"),
            x: Axis::linear("lag", "lag (minutes)"),
            y: Axis::linear("acf", "A(t)"),
            group_by: None,
            reference_line: Some(json!({ "white_noise_band": [-band, band] })),
        });
    }
    out.diagnostic("acf", Value::Object(lags))?;
    out.commit(&a.io.out)
}

pub fn dfa(a: DfaArgs) -> Result<Vec<PathBuf>> {
    let session = session_options(&a.session)?;
    let plan = ScalingPlan::new(&a.scaling)?;
    let loaded = load(&a.io.input, &session, a.session.seed)?;
    let mut out = Artifacts::new("dfa");
    out.config = merge(session_config(&session, a.session.seed), plan.config(&a.scaling));
    out.input = loaded.description.clone();
    let (series, diagnostics) = analysis_series(loaded, a.scaling.series, session.bridge_gaps)?;
    out.diagnostics = diagnostics;

    let grid = plan.windows.resolve(series.len(), plan.options.detrend_order)?;
    let table = FluctuationTable::compute(&series.values, &grid, &plan.options)?;
    let curve = table.curve(2.0);
    let fit = plan.fit(&curve)?;
    let class = MemoryClass::of(fit.exponent);

    out.diagnostic("fluctuation", curve_diagnostics(&curve))?;
    out.add_csv("fluctuation.csv", |w| write_curves_csv(std::slice::from_ref(&curve), w))?;
    let report = merge(
        fit_json(&fit),
        json!({ "series_kind": series.kind, "series_length": series.len(), "class": class, "window_sizes": grid.sizes() }),
    );
    out.add_json("fit.json", &report)?;
    out.plot(fluctuation_plot(
        "DFA fluctuation function",
        Some(json!({ "slope": fit.exponent, "intercept": fit.intercept, "fit_range": fit.fit_range })),
    ));
    out.commit(&a.io.out)
}

pub fn mfdfa(a: MfdfaArgs) -> Result<Vec<PathBuf>> {
    let session = session_options(&a.session)?;
    let plan = ScalingPlan::new(&a.scaling)?;
    let q_grid = parse_q_grid(&a.q_grid)?;
    let loaded = load(&a.io.input, &session, a.session.seed)?;
    let mut out = Artifacts::new("mfdfa");
    out.config = merge(
        merge(session_config(&session, a.session.seed), plan.config(&a.scaling)),
        json!({ "q_grid": q_grid }),
    );
    out.input = loaded.description.clone();
    let (series, diagnostics) = analysis_series(loaded, a.scaling.series, session.bridge_gaps)?;
    out.diagnostics = diagnostics;

    let grid = plan.windows.resolve(series.len(), plan.options.detrend_order)?;
    let curves = run_mfdfa(&series.values, &grid, &q_grid, &plan.options)?;
    let mut fits = Vec::with_capacity(curves.len());
    let mut fit_errors = Vec::new();
    for c in &curves {
        match plan.fit(c) {
            Ok(f) => fits.push((c.q, Some(f))),
            Err(e) => {
                fit_errors.push(json!({ "q": c.q, "error": e.to_string() }));
                fits.push((c.q, None));
            }
        }
    }
    let summary = MultifractalSummary::from_fits(&fits, DEFAULT_FRACTAL_DIMENSION)?;

    out.diagnostic("fluctuation", curves.iter().map(curve_diagnostics).collect::<Vec<_>>())?;
    out.diagnostic("fit_errors", fit_errors)?;
    out.diagnostic("warnings", &summary.warnings)?;
    out.add_csv("fluctuation.csv", |w| write_curves_csv(&curves, w))?;
    out.add_csv("exponents.csv", |w| summary.write_exponents_csv(w))?;
    out.add_csv("spectrum.csv", |w| summary.write_spectrum_csv(w))?;
    let fit_reports: Vec<Value> = fits
        .iter()
        .filter_map(|(q, f)| f.as_ref().map(|f| merge(json!({ "q": q }), fit_json(f))))
        .collect();
    let report = merge(
        serde_json::to_value(&summary).map_err(|e| CliError::Usage(format!("serializing summary: {e}")))?,
        json!({ "series_kind": series.kind, "series_length": series.len(), "window_sizes": grid.sizes(), "fits": fit_reports }),
    );
    out.add_json("summary.json", &report)?;

    out.plot(fluctuation_plot("MF-DFA fluctuation functions", None));
    out.plot(Plot {
        file: "exponents.csv".into(),
        title: "Generalized Hurst exponent".into(),
        x: Axis::linear("q", "q"),
        y: Axis::linear("h", "h(q)"),
        group_by: None,
        reference_line: None,
    });
    out.plot(Plot {
        file: "exponents.csv".into(),
        title: "Mass exponent".into(),
        x: Axis::linear("q", "q"),
        y: Axis::linear("tau", "tau(q)"),
        group_by: None,
        reference_line: None,
    });
    out.plot(Plot {
        file: "spectrum.csv".into(),
        title: "Singularity spectrum".into(),
        x: Axis::linear("alpha", "alpha"),
        y: Axis::linear("f_alpha", "f(alpha)"),
        group_by: None,
        reference_line: Some(json!({ "delta_h": summary.delta_h, "delta_alpha": summary.delta_alpha })),
    });
    out.commit(&a.io.out)
}

pub fn synth(a: SynthArgs) -> Result<Vec<PathBuf>> {
    let spec = parse_synth(&a.input, a.seed)?;
    let series = generate::<f64>(&spec)?;
    let mut out = Artifacts::new("synth");
    out.config = json!({ "seed": a.seed });
    out.input = json!({ "synth": spec });
    out.add_csv("series.csv", |w| series.write_csv(w))?;
    out.add_json("spec.json", &spec)?;
    out.commit(&a.out)
}

pub fn surrogate(a: SurrogateArgs) -> Result<Vec<PathBuf>> {
    let session = session_options(&a.session)?;
    let loaded = load(&a.io.input, &session, a.session.seed)?;
    let mut out = Artifacts::new("surrogate");
    out.config = merge(session_config(&session, a.session.seed), json!({ "series": a.series }));
    out.input = loaded.description.clone();
    let (series, diagnostics) = analysis_series(loaded, a.series, session.bridge_gaps)?;
    out.diagnostics = diagnostics;
    let shuffled = shuffle_surrogate(&series, a.session.seed);
    out.add_csv("series.csv", |w| shuffled.write_csv(w))?;
    out.commit(&a.io.out)
}
