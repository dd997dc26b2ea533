use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of window sizes in a logarithmic grid.
pub const DEFAULT_GRID_POINTS: usize = 20;
/// Smallest default window, before the detrend-order constraint.
pub const DEFAULT_MIN_WINDOW: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Logarithmic,
    Explicit,
}

/// Strictly increasing window sizes, each at least `detrend_order + 2` and
/// at most a quarter of the series length.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowGrid {
    sizes: Vec<usize>,
    spacing: Spacing,
}

impl WindowGrid {
    /// `count` log-spaced sizes from `max(16, order + 2)` to `len / 4`.
    pub fn logarithmic(series_len: usize, count: usize, detrend_order: usize) -> Result<Self> {
        let min = DEFAULT_MIN_WINDOW.max(detrend_order + 2);
        Self::logarithmic_between(min, series_len / 4, count, series_len, detrend_order)
    }

    pub fn logarithmic_between(
        min: usize,
        max: usize,
        count: usize,
        series_len: usize,
        detrend_order: usize,
    ) -> Result<Self> {
        if count < 2 {
            return Err(Error::Window("a logarithmic grid needs at least 2 sizes".into()));
        }
        if max < min {
            return Err(Error::InsufficientData {
                needed: 4 * min,
                got: series_len,
            });
        }
        let ratio = (max as f64 / min as f64).ln();
        let mut sizes: Vec<usize> = (0..count)
            .map(|i| (min as f64 * (ratio * i as f64 / (count - 1) as f64).exp()).round() as usize)
            .map(|s| s.clamp(min, max))
            .collect();
        sizes.dedup();
        Self::validated(sizes, Spacing::Logarithmic, series_len, detrend_order)
    }

    pub fn explicit(sizes: Vec<usize>, series_len: usize, detrend_order: usize) -> Result<Self> {
        Self::validated(sizes, Spacing::Explicit, series_len, detrend_order)
    }

    fn validated(sizes: Vec<usize>, spacing: Spacing, series_len: usize, detrend_order: usize) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::Window("empty window grid".into()));
        }
        if sizes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Window("window sizes must be strictly increasing".into()));
        }
        if sizes[0] < detrend_order + 2 {
            return Err(Error::Window(format!(
                "window {} too small for detrend order {detrend_order} (minimum {})",
                sizes[0],
                detrend_order + 2
            )));
        }
        let largest = *sizes.last().unwrap();
        if largest > series_len / 4 {
            return Err(Error::Window(format!(
                "window {largest} exceeds a quarter of the series length {series_len}"
            )));
        }
        Ok(Self { sizes, spacing })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }
}
