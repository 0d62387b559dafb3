//! Diagnosis of financial bubbles and negative bubbles with the log-periodic
//! power law (LPPL).
//!
//! The pipeline:
//!
//! 1. [`timeseries`] loads adjusted closing prices and slices them by date.
//! 2. [`windows`] builds the multi-scale `(t1, t2)` window grid.
//! 3. [`lppl`] calibrates the power-law and LPPL models on every window.
//! 4. [`extrema`] finds rebounds, peaks and crashes in the price history.
//! 5. [`pattern`] labels fits by the proximity of their critical time to a
//!    realized rebound, qualifies discriminating traits and emits the daily
//!    rebound alarm index.
//! 6. [`evaluation`] scores the alarm index with error diagrams.
//!
//! [`synth`] produces synthetic series with known ground truth, and
//! [`pipeline`] wires the whole protocol into a reproducible run.

#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod evaluation;
pub mod extrema;
pub mod lppl;
pub mod pattern;
pub mod pipeline;
mod stats;
pub mod synth;
pub mod timeseries;
pub mod windows;

pub use error::{Error, Result};
pub use timeseries::{PriceSeries, TradingDay};
pub use windows::{GridConfig, Window};
