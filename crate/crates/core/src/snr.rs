//! Closed-form signal-quality arithmetic: GOSNR combination, symbol-rate
//! normalization, and OSNR from spectrum-analyzer power samples.
//!
//! Conventions: OSNR and GOSNR are referenced to the fixed 0.1 nm
//! (12.5 GHz) noise bandwidth. GSNR is the GOSNR normalized to the
//! signal's symbol-rate bandwidth. Combination runs on linear ratios.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::Decibel;

/// Fixed OSNR reference bandwidth, 0.1 nm at C-band. Not configurable so
/// that every OSNR in the toolkit is directly comparable.
pub const REFERENCE_BANDWIDTH_GHZ: f64 = 12.5;

/// PSD equalization grid slice used for launch-power targets.
pub const PSD_GRID_GHZ: f64 = 50.0;

/// Coherent modulation formats understood by the toolkit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modulation {
    #[serde(rename = "DP-QPSK")]
    DpQpsk,
    #[serde(rename = "DP-8QAM")]
    Dp8Qam,
    #[serde(rename = "DP-16QAM")]
    Dp16Qam,
}

impl Modulation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Modulation::DpQpsk => "DP-QPSK",
            Modulation::Dp8Qam => "DP-8QAM",
            Modulation::Dp16Qam => "DP-16QAM",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "DP-QPSK" | "dp-qpsk" => Ok(Modulation::DpQpsk),
            "DP-8QAM" | "dp-8qam" => Ok(Modulation::Dp8Qam),
            "DP-16QAM" | "dp-16qam" => Ok(Modulation::Dp16Qam),
            other => Err(Error::InvalidSignalSpec(format!(
                "unknown modulation {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for Modulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A probing signal configuration: format, symbol rate, and the
/// integration bandwidth used when measuring its OSNR on an OSA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub modulation: Modulation,
    /// Symbol rate in GBd; also the bandwidth Eq-style GSNR normalization
    /// uses (1 GBd occupies 1 GHz for these formats).
    pub symbol_rate_gbd: f64,
    /// Integration bandwidth in GHz for total-power capture on the OSA.
    pub signal_bandwidth_ghz: f64,
}

impl SignalSpec {
    pub fn new(
        modulation: Modulation,
        symbol_rate_gbd: f64,
        signal_bandwidth_ghz: f64,
    ) -> Result<Self> {
        let spec = Self {
            modulation,
            symbol_rate_gbd,
            signal_bandwidth_ghz,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.symbol_rate_gbd > 0.0 && self.symbol_rate_gbd.is_finite()) {
            return Err(Error::InvalidSignalSpec(format!(
                "symbol rate {} GBd must be positive",
                self.symbol_rate_gbd
            )));
        }
        if self.signal_bandwidth_ghz + 1e-9 < self.symbol_rate_gbd {
            return Err(Error::InvalidSignalSpec(format!(
                "signal bandwidth {} GHz narrower than the {} GBd occupied bandwidth",
                self.signal_bandwidth_ghz, self.symbol_rate_gbd
            )));
        }
        Ok(())
    }

    /// Bandwidth used to normalize GOSNR to GSNR: the symbol rate in GHz.
    #[inline]
    pub fn normalization_bandwidth_ghz(&self) -> f64 {
        self.symbol_rate_gbd
    }

    /// dB shift between the 0.1 nm-referenced OSNR and the symbol-rate
    /// referenced GSNR: `10*log10(symbol_rate / 12.5)`.
    #[inline]
    pub fn normalization_shift_db(&self) -> f64 {
        10.0 * (self.normalization_bandwidth_ghz() / REFERENCE_BANDWIDTH_GHZ).log10()
    }

    /// Launch power meeting a PSD target (dBm per 50 GHz), adjusted to the
    /// symbol rate.
    #[inline]
    pub fn launch_power_for_psd(&self, psd_dbm_per_50ghz: f64) -> f64 {
        psd_dbm_per_50ghz + 10.0 * (self.symbol_rate_gbd / PSD_GRID_GHZ).log10()
    }
}

/// Integration-bandwidth defaults per symbol rate. The built-in table has
/// the two rows used throughout: 75 GHz for 69-GBd-class signals and
/// 37.5 GHz for 34-GBd-class signals. Scenario files may extend it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BandwidthTable {
    entries: Vec<(f64, f64)>, // (symbol_rate_gbd, signal_bandwidth_ghz)
}

impl Default for BandwidthTable {
    fn default() -> Self {
        Self {
            entries: vec![(69.44, 75.0), (69.0, 75.0), (34.0, 37.5)],
        }
    }
}

impl BandwidthTable {
    pub fn insert(&mut self, symbol_rate_gbd: f64, signal_bandwidth_ghz: f64) {
        self.entries
            .retain(|(r, _)| (r - symbol_rate_gbd).abs() > 1e-9);
        self.entries.push((symbol_rate_gbd, signal_bandwidth_ghz));
    }

    /// Look up the integration bandwidth for a symbol rate (0.01 GBd
    /// matching slack). Falls back to the next 12.5 GHz slot multiple
    /// that fits the symbol rate when no row matches.
    pub fn bandwidth_for(&self, symbol_rate_gbd: f64) -> f64 {
        self.entries
            .iter()
            .find(|(r, _)| (r - symbol_rate_gbd).abs() < 0.01)
            .map(|(_, bw)| *bw)
            .unwrap_or_else(|| {
                (symbol_rate_gbd / REFERENCE_BANDWIDTH_GHZ).ceil() * REFERENCE_BANDWIDTH_GHZ
            })
    }
}

/// Linear-domain GOSNR components. An absent component contributes
/// nothing to the reciprocal sum (treated as infinite).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GosnrComponents {
    pub osnr_ase: Option<f64>,
    pub osnr_nli: Option<f64>,
    pub osnr_gawbs: Option<f64>,
}

impl GosnrComponents {
    pub fn ase_only(osnr_ase: f64) -> Self {
        Self {
            osnr_ase: Some(osnr_ase),
            ..Default::default()
        }
    }

    fn present(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
        [
            ("osnr_ase", self.osnr_ase),
            ("osnr_nli", self.osnr_nli),
            ("osnr_gawbs", self.osnr_gawbs),
        ]
        .into_iter()
        .filter_map(|(name, v)| v.map(|v| (name, v)))
    }
}

/// Combine GOSNR components by reciprocal sum: `1 / Σ(1/component)`.
///
/// The result never exceeds the smallest present component.
pub fn combine_gosnr(components: &GosnrComponents) -> Result<f64> {
    let mut reciprocal = 0.0;
    let mut seen = false;
    for (name, value) in components.present() {
        if value <= 0.0 || value.is_nan() {
            return Err(Error::NonPositiveComponent { name, value });
        }
        // An infinite component is present but contributes zero reciprocal.
        if value.is_finite() {
            reciprocal += value.recip();
        }
        seen = true;
    }
    if !seen {
        return Err(Error::EmptyCombination);
    }
    if reciprocal == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(reciprocal.recip())
}

/// Normalize a 0.1 nm-referenced GOSNR (linear) to the signal bandwidth:
/// `(12.5 / signal_bw) * gosnr`. In dB this subtracts
/// `10*log10(signal_bw / 12.5)`.
pub fn normalize_gsnr(gosnr: f64, signal_bw_ghz: f64) -> Result<f64> {
    if signal_bw_ghz <= 0.0 || !signal_bw_ghz.is_finite() {
        return Err(Error::NonPositiveBandwidth(signal_bw_ghz));
    }
    // grouped so the identity bandwidth multiplies by exactly 1.0
    Ok(gosnr * (REFERENCE_BANDWIDTH_GHZ / signal_bw_ghz))
}

/// Same normalization on dB values.
pub fn normalize_gsnr_db(gosnr_db: f64, signal_bw_ghz: f64) -> Result<f64> {
    if signal_bw_ghz <= 0.0 || !signal_bw_ghz.is_finite() {
        return Err(Error::NonPositiveBandwidth(signal_bw_ghz));
    }
    Ok(gosnr_db - 10.0 * (signal_bw_ghz / REFERENCE_BANDWIDTH_GHZ).log10())
}

/// Raw OSA power readings for one carrier: total integrated power over
/// the signal bandwidth and the noise power in the 0.1 nm reference band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OsaSample {
    /// Total integrated power (signal + noise) over the signal bandwidth, mW.
    pub p_tot_mw: f64,
    /// Noise power in the 0.1 nm (12.5 GHz) reference bandwidth, mW.
    pub n_ref_mw: f64,
    pub center_frequency_thz: f64,
}

/// OSNR in the 0.1 nm reference from an on/off power capture:
/// `10*log10((p_tot − (signal_bw/12.5)·n_ref) / n_ref)`.
///
/// The noise collected over the signal bandwidth is subtracted from the
/// total before dividing by the reference-band noise.
pub fn osnr_from_sample(sample: &OsaSample, spec: &SignalSpec) -> Result<Decibel> {
    if sample.n_ref_mw <= 0.0 || !sample.n_ref_mw.is_finite() {
        return Err(Error::NonPositiveRatio(sample.n_ref_mw));
    }
    let noise_in_band = sample.n_ref_mw * (spec.signal_bandwidth_ghz / REFERENCE_BANDWIDTH_GHZ);
    let signal = sample.p_tot_mw - noise_in_band;
    if signal <= 0.0 {
        return Err(Error::NoiseExceedsPower {
            p_tot: sample.p_tot_mw,
            noise_in_band,
        });
    }
    Decibel::from_linear(signal / sample.n_ref_mw)
}
