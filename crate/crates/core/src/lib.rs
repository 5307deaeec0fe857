//! Channel-probing toolkit for optical spectrum services.
//!
//! The crate characterizes a leased spectrum service end to end:
//!
//! - [`snr`] — the closed-form signal-quality arithmetic (GOSNR
//!   combination, symbol-rate normalization, OSNR from OSA captures);
//! - [`characterization`] — monotone Q-over-OSNR curves, inversion, and
//!   the systematic error of non-transceiver-specific curves;
//! - [`olssim`] — a deliberately simple line-system simulator that
//!   serves as ground truth for every estimator;
//! - [`probing`] — sweep execution over configurations, load conditions
//!   and repeats, against the simulator or replayed measurements;
//! - [`margins`] — neighbor-impact, end-of-life and implementation
//!   margins, verified by power depletion to the pre-FEC Q threshold;
//! - [`scenario`], [`store`], [`report`] — file formats and emission.
//!
//! Sweeps run data-parallel under the `parallel` feature (default);
//! disabling it yields a sequential build with identical results.

pub mod characterization;
pub mod error;
pub mod margins;
pub mod olssim;
pub mod probing;
pub mod report;
pub mod scenario;
pub mod snr;
pub mod store;
pub mod units;

pub use error::{Error, ErrorClass, Result};
