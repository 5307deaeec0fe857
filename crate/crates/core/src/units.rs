//! dB / linear conversion helpers and thin unit newtypes.
//!
//! All combination arithmetic in this crate happens on linear ratios;
//! dB appears only at API boundaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Convert a dB value to a linear power ratio, `10^(x/10)`.
#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Convert a linear power ratio to dB, `10*log10(x)`.
///
/// Errors on non-positive input rather than returning −inf/NaN.
#[inline]
pub fn linear_to_db(ratio: f64) -> Result<f64> {
    if ratio <= 0.0 || !ratio.is_finite() {
        return Err(Error::NonPositiveRatio(ratio));
    }
    Ok(10.0 * ratio.log10())
}

/// A ratio-referenced quantity in dB.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Decibel(f64);

impl Decibel {
    pub fn new(db: f64) -> Result<Self> {
        if !db.is_finite() {
            return Err(Error::NonPositiveRatio(db));
        }
        Ok(Self(db))
    }

    pub fn from_linear(ratio: f64) -> Result<Self> {
        Ok(Self(linear_to_db(ratio)?))
    }

    #[inline]
    pub fn db(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn linear(self) -> f64 {
        db_to_linear(self.0)
    }
}

/// An absolute optical power in dBm (dB referenced to 1 mW).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct PowerDbm(f64);

impl PowerDbm {
    pub fn new(dbm: f64) -> Self {
        Self(dbm)
    }

    pub fn from_milliwatts(mw: f64) -> Result<Self> {
        Ok(Self(linear_to_db(mw)?))
    }

    #[inline]
    pub fn dbm(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn milliwatts(self) -> f64 {
        db_to_linear(self.0)
    }
}
