//! Optical-line-system simulator used as the ground-truth oracle:
//! constant-gain EDFA chain with ASE accumulation, an incoherent
//! cubic-law nonlinear-interference stand-in, slot-level media-channel
//! loading, loopback, and a synthetic receiver that reads out Q-values
//! through a transceiver characterization curve.
//!
//! The simulator is deliberately simple — no gain tilt, ripple, Raman or
//! hole burning — so its closed forms double as independent oracles for
//! the estimation pipeline.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::characterization::TransceiverProfile;
use crate::error::{Error, Result};
use crate::snr::{
    combine_gosnr, normalize_gsnr_db, GosnrComponents, OsaSample, SignalSpec,
    REFERENCE_BANDWIDTH_GHZ,
};
use crate::units::{db_to_linear, linear_to_db};

/// Number of media-channel blocks in a load condition.
pub const LOAD_SLOTS: usize = 11;

/// Index of the channel-under-test block (the center slot).
pub const CUT_SLOT: usize = 5;

/// ASE constant: −10·log10(h·ν·12.5 GHz / 1 mW) at mid C-band, so a span
/// contributes OSNR = P_in − NF + 58.0 dB in the 0.1 nm reference.
/// Per-frequency refinement over the C-band would move this < 0.05 dB.
pub const ASE_CONSTANT_DB: f64 = 58.0;

/// Carriers this close (center-to-center, GHz) count as direct neighbors
/// for the nonlinear load factor. Covers the 100 GHz in-service spacing.
pub const ADJACENCY_WINDOW_GHZ: f64 = 150.0;

/// Enabled/disabled pattern of the eleven media-channel blocks, written
/// as a string of 'I' (enabled) and '.' (disabled).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LoadCondition {
    slots: [bool; LOAD_SLOTS],
}

impl LoadCondition {
    /// Parse an exact 11-character notation.
    pub fn parse(notation: &str) -> Result<Self> {
        let chars: Vec<char> = notation.chars().collect();
        if chars.len() != LOAD_SLOTS {
            return Err(Error::LoadNotation {
                position: chars.len().min(LOAD_SLOTS),
                reason: format!("expected {LOAD_SLOTS} characters, got {}", chars.len()),
            });
        }
        let mut slots = [false; LOAD_SLOTS];
        for (i, c) in chars.iter().enumerate() {
            match c {
                'I' => slots[i] = true,
                '.' => {}
                other => {
                    return Err(Error::LoadNotation {
                        position: i,
                        reason: format!("expected 'I' or '.', got {other:?}"),
                    })
                }
            }
        }
        Ok(Self { slots })
    }

    /// Parse a possibly shorter notation by centering it over the eleven
    /// slots (padding with '.', extra pad to the right). Shorthand labels
    /// for sparse fills are written this way.
    pub fn parse_canonical(notation: &str) -> Result<Self> {
        let len = notation.chars().count();
        if len > LOAD_SLOTS {
            return Err(Error::LoadNotation {
                position: LOAD_SLOTS,
                reason: format!("expected at most {LOAD_SLOTS} characters, got {len}"),
            });
        }
        let left = (LOAD_SLOTS - len) / 2;
        let right = LOAD_SLOTS - len - left;
        let padded = format!("{}{}{}", ".".repeat(left), notation, ".".repeat(right));
        Self::parse(&padded)
    }

    pub fn from_slots(slots: [bool; LOAD_SLOTS]) -> Self {
        Self { slots }
    }

    pub fn all_enabled() -> Self {
        Self {
            slots: [true; LOAD_SLOTS],
        }
    }

    /// Inverse of [`LoadCondition::parse`].
    pub fn notation(&self) -> String {
        self.slots
            .iter()
            .map(|&s| if s { 'I' } else { '.' })
            .collect()
    }

    pub fn slot(&self, index: usize) -> bool {
        self.slots[index]
    }

    pub fn enabled_count(&self) -> usize {
        self.slots.iter().filter(|&&s| s).count()
    }

    pub fn enabled_fraction(&self) -> f64 {
        self.enabled_count() as f64 / LOAD_SLOTS as f64
    }
}

impl std::fmt::Display for LoadCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.notation())
    }
}

/// Parse an exact 11-character load notation.
pub fn parse_load(notation: &str) -> Result<LoadCondition> {
    LoadCondition::parse(notation)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub length_km: f64,
    pub loss_coeff_db_per_km: f64,
}

impl Span {
    pub fn loss_db(&self) -> f64 {
        self.length_km * self.loss_coeff_db_per_km
    }
}

/// Constant-gain EDFA following a span.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Amplifier {
    pub gain_db: f64,
    pub noise_figure_db: f64,
}

/// Tunable coefficients of the nonlinear-interference stand-in. The model
/// is a per-span cubic law scaled by a load factor
/// `1 + alpha·(enabled direct neighbors) + beta·(enabled slot fraction)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NliParams {
    /// Per-span NLI coefficient in 1/mW²; zero disables NLI entirely.
    pub eta: f64,
    /// Weight of enabled direct-neighbor carriers inside the media channel.
    pub alpha: f64,
    /// Weight of the enabled slot fraction across the spectrum.
    pub beta: f64,
}

impl Default for NliParams {
    fn default() -> Self {
        Self {
            eta: 0.0,
            alpha: 0.0,
            beta: 0.0,
        }
    }
}

/// Simulated line system: spans with one amplifier each, an input VOA,
/// a PSD equalization target, and an optional far-end loopback that
/// doubles the traversed path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsLink {
    pub spans: Vec<Span>,
    pub amplifiers: Vec<Amplifier>,
    /// VOA attenuation ahead of the first span, dB.
    pub pre_loss_db: f64,
    /// Equalization target, dBm per 50 GHz.
    pub psd_target_dbm_per_50ghz: f64,
    pub loopback: bool,
    #[serde(default)]
    pub nli: NliParams,
}

/// Gain/loss mismatch allowed per stage before the link is rejected.
pub const GAIN_COMPENSATION_BOUND_DB: f64 = 3.0;

impl OlsLink {
    pub fn validate(&self) -> Result<()> {
        if self.spans.is_empty() {
            return Err(Error::InvalidLink("no spans".into()));
        }
        if self.spans.len() != self.amplifiers.len() {
            return Err(Error::InvalidLink(format!(
                "{} spans but {} amplifiers; expected one amplifier after each span",
                self.spans.len(),
                self.amplifiers.len()
            )));
        }
        for (i, (span, amp)) in self.spans.iter().zip(&self.amplifiers).enumerate() {
            if span.loss_db() < 0.0 {
                return Err(Error::InvalidLink(format!("span {i} has negative loss")));
            }
            let mismatch = (amp.gain_db - span.loss_db()).abs();
            if mismatch > GAIN_COMPENSATION_BOUND_DB {
                return Err(Error::InvalidLink(format!(
                    "amplifier {i} gain {} dB deviates {mismatch:.2} dB from span loss {} dB (bound {GAIN_COMPENSATION_BOUND_DB} dB)",
                    amp.gain_db,
                    span.loss_db()
                )));
            }
            if self.nli.eta < 0.0 || self.nli.alpha < 0.0 || self.nli.beta < 0.0 {
                return Err(Error::InvalidLink(
                    "nli coefficients must be non-negative".into(),
                ));
            }
        }
        Ok(())
    }

    /// Span/amplifier stages in traversal order; the loopback return path
    /// runs the stages in reverse.
    fn stages(&self) -> Vec<(Span, Amplifier)> {
        let forward = self
            .spans
            .iter()
            .cloned()
            .zip(self.amplifiers.iter().cloned());
        if self.loopback {
            forward
                .clone()
                .chain(
                    self.spans
                        .iter()
                        .cloned()
                        .zip(self.amplifiers.iter().cloned())
                        .rev(),
                )
                .collect()
        } else {
            forward.collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CarrierKind {
    /// The channel under test or another probing transceiver.
    Probe,
    /// Shaped-ASE dummy used for spectrum fill.
    AseDummy,
    /// Keeps amplifier state pinned on real hardware; inert here.
    Control,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Carrier {
    pub center_thz: f64,
    pub spec: SignalSpec,
    pub tx_power_dbm: f64,
    pub kind: CarrierKind,
    pub enabled: bool,
}

/// A contiguous spectrum slice carrying one or more carriers.
#[derive(Debug, Clone, PartialEq)]
pub struct MediaChannel {
    pub center_thz: f64,
    pub width_ghz: f64,
    pub carriers: Vec<Carrier>,
}

impl MediaChannel {
    pub fn validate(&self) -> Result<()> {
        let half_ghz = self.width_ghz / 2.0;
        for c in &self.carriers {
            let offset_ghz = (c.center_thz - self.center_thz) * 1000.0;
            let half_bw = c.spec.signal_bandwidth_ghz / 2.0;
            if offset_ghz - half_bw < -half_ghz - 1e-9 || offset_ghz + half_bw > half_ghz + 1e-9 {
                return Err(Error::InvalidMediaChannel(format!(
                    "carrier at {} THz ({} GHz wide) falls outside the {} GHz media channel",
                    c.center_thz, c.spec.signal_bandwidth_ghz, self.width_ghz
                )));
            }
        }
        let mut sorted: Vec<&Carrier> = self.carriers.iter().collect();
        sorted.sort_by(|a, b| a.center_thz.total_cmp(&b.center_thz));
        for pair in sorted.windows(2) {
            let gap_ghz = (pair[1].center_thz - pair[0].center_thz) * 1000.0;
            let occupied =
                (pair[0].spec.signal_bandwidth_ghz + pair[1].spec.signal_bandwidth_ghz) / 2.0;
            if gap_ghz + 1e-9 < occupied {
                return Err(Error::InvalidMediaChannel(format!(
                    "carriers at {} and {} THz overlap spectrally",
                    pair[0].center_thz, pair[1].center_thz
                )));
            }
        }
        Ok(())
    }

    pub fn carrier_at(&self, center_thz: f64) -> Result<&Carrier> {
        self.carriers
            .iter()
            .find(|c| (c.center_thz - center_thz).abs() < 5e-4)
            .ok_or(Error::NoSuchCarrier(center_thz))
    }

    fn carrier_at_mut(&mut self, center_thz: f64) -> Result<&mut Carrier> {
        self.carriers
            .iter_mut()
            .find(|c| (c.center_thz - center_thz).abs() < 5e-4)
            .ok_or(Error::NoSuchCarrier(center_thz))
    }

    /// Copy of the channel with every non-probe-under-test carrier's
    /// enabled state forced; the carrier at `cut_center_thz` stays on.
    pub fn with_neighbors(&self, cut_center_thz: f64, enabled: bool) -> Result<Self> {
        let mut mc = self.clone();
        mc.carrier_at(cut_center_thz)?;
        for c in &mut mc.carriers {
            if (c.center_thz - cut_center_thz).abs() >= 5e-4 && c.kind != CarrierKind::Control {
                c.enabled = enabled;
            }
        }
        mc.carrier_at_mut(cut_center_thz)?.enabled = true;
        Ok(mc)
    }

    /// Copy with the carrier under test reconfigured for a probe plan
    /// point (signal spec and launch power).
    pub fn with_cut_config(
        &self,
        cut_center_thz: f64,
        spec: SignalSpec,
        tx_power_dbm: f64,
    ) -> Result<Self> {
        let mut mc = self.clone();
        let c = mc.carrier_at_mut(cut_center_thz)?;
        c.spec = spec;
        c.tx_power_dbm = tx_power_dbm;
        c.enabled = true;
        Ok(mc)
    }

    /// Enabled direct neighbors of the carrier at `center_thz`: nearest
    /// enabled carrier on each side within [`ADJACENCY_WINDOW_GHZ`].
    fn enabled_adjacent(&self, center_thz: f64) -> usize {
        let mut left = false;
        let mut right = false;
        let mut left_gap = f64::INFINITY;
        let mut right_gap = f64::INFINITY;
        for c in &self.carriers {
            if !c.enabled || (c.center_thz - center_thz).abs() < 5e-4 {
                continue;
            }
            let gap_ghz = (c.center_thz - center_thz) * 1000.0;
            if gap_ghz < 0.0 && -gap_ghz < left_gap {
                left_gap = -gap_ghz;
                left = left_gap <= ADJACENCY_WINDOW_GHZ;
            }
            if gap_ghz > 0.0 && gap_ghz < right_gap {
                right_gap = gap_ghz;
                right = right_gap <= ADJACENCY_WINDOW_GHZ;
            }
        }
        usize::from(left) + usize::from(right)
    }
}

/// Ground truth for one channel under test on one link and load state.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkTruth {
    /// ASE-only OSNR, dB in the 0.1 nm reference.
    pub osnr_ase_db: f64,
    /// NLI-only OSNR, dB in the 0.1 nm reference; `None` when NLI is off.
    pub osnr_nli_db: Option<f64>,
    /// Combined GOSNR, dB in the 0.1 nm reference.
    pub gosnr_db: f64,
    /// GOSNR normalized to the carrier's symbol rate (the quantity a
    /// perfect estimator should recover).
    pub gsnr_db: f64,
    /// Received power per enabled carrier, (center THz, dBm).
    pub received_power_dbm: Vec<(f64, f64)>,
}

/// Received carrier power after the traversed chain.
fn received_power(link: &OlsLink, tx_power_dbm: f64) -> f64 {
    let mut p = tx_power_dbm - link.pre_loss_db;
    for (span, amp) in link.stages() {
        p -= span.loss_db();
        p += amp.gain_db;
    }
    p
}

/// ASE-chain OSNR for a carrier: per stage `P_in − NF + 58.0` dB in the
/// 0.1 nm reference, stages combined by reciprocal sum. Loopback doubles
/// the traversed span sequence.
pub fn ase_osnr(link: &OlsLink, tx_power_dbm: f64) -> Result<f64> {
    link.validate()?;
    let mut p = tx_power_dbm - link.pre_loss_db;
    let mut reciprocal = 0.0;
    for (span, amp) in link.stages() {
        p -= span.loss_db();
        let osnr_db = p - amp.noise_figure_db + ASE_CONSTANT_DB;
        reciprocal += db_to_linear(-osnr_db);
        p += amp.gain_db;
    }
    linear_to_db(reciprocal.recip())
}

/// Nonlinear-interference OSNR for a carrier in the 0.1 nm reference, or
/// `None` when the coefficient is zero. Each span contributes a local
/// NLI-to-signal ratio `eta · P_span_input² · load_factor`, accumulated
/// incoherently.
pub fn nli_osnr(
    link: &OlsLink,
    mc: &MediaChannel,
    load: &LoadCondition,
    carrier: &Carrier,
) -> Result<Option<f64>> {
    link.validate()?;
    if link.nli.eta == 0.0 {
        return Ok(None);
    }
    let lf = load_factor(&link.nli, mc, load, carrier);
    let mut p = carrier.tx_power_dbm - link.pre_loss_db;
    let mut reciprocal = 0.0;
    for (span, amp) in link.stages() {
        let span_input_mw = db_to_linear(p);
        reciprocal += link.nli.eta * span_input_mw * span_input_mw * lf;
        p -= span.loss_db();
        p += amp.gain_db;
    }
    Ok(Some(linear_to_db(reciprocal.recip())?))
}

/// `1 + alpha·(enabled direct neighbors) + beta·(enabled slot fraction)`.
/// Monotone in both arguments, so extra load never improves the channel
/// under test.
fn load_factor(nli: &NliParams, mc: &MediaChannel, load: &LoadCondition, carrier: &Carrier) -> f64 {
    1.0 + nli.alpha * mc.enabled_adjacent(carrier.center_thz) as f64
        + nli.beta * load.enabled_fraction()
}

/// Full link truth for the carrier under test at `cut_center_thz`.
pub fn simulate(
    link: &OlsLink,
    mc: &MediaChannel,
    load: &LoadCondition,
    cut_center_thz: f64,
) -> Result<LinkTruth> {
    link.validate()?;
    mc.validate()?;
    let cut = mc.carrier_at(cut_center_thz)?;
    let osnr_ase_db = ase_osnr(link, cut.tx_power_dbm)?;
    let osnr_nli_db = nli_osnr(link, mc, load, cut)?;
    let components = GosnrComponents {
        osnr_ase: Some(db_to_linear(osnr_ase_db)),
        osnr_nli: osnr_nli_db.map(db_to_linear),
        osnr_gawbs: None,
    };
    let gosnr_db = linear_to_db(combine_gosnr(&components)?)?;
    let gsnr_db = normalize_gsnr_db(gosnr_db, cut.spec.normalization_bandwidth_ghz())?;
    let received_power_dbm = mc
        .carriers
        .iter()
        .filter(|c| c.enabled)
        .map(|c| (c.center_thz, received_power(link, c.tx_power_dbm)))
        .collect();
    Ok(LinkTruth {
        osnr_ase_db,
        osnr_nli_db,
        gosnr_db,
        gsnr_db,
        received_power_dbm,
    })
}

/// Synthetic receiver readout: the characterization curve evaluated at
/// the link GOSNR plus Gaussian Q noise. A zero sigma makes the readout
/// exact; 0.05 dB models fast network fluctuations.
pub fn receiver_q(
    truth: &LinkTruth,
    profile: &TransceiverProfile,
    noise_sigma_db: f64,
    rng: &mut impl Rng,
) -> Result<f64> {
    let q = profile.curve.evaluate(truth.gosnr_db)?;
    if noise_sigma_db == 0.0 {
        return Ok(q);
    }
    Ok(q + noise_sigma_db * standard_normal(rng))
}

/// Box–Muller standard normal draw.
fn standard_normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Synthesize the on/off OSA capture for a carrier, consistent with the
/// link truth: feeding the sample back through the OSNR formula recovers
/// the ASE OSNR. A disabled carrier yields the noise-only capture.
pub fn measure_spectrum(
    link: &OlsLink,
    mc: &MediaChannel,
    load: &LoadCondition,
    carrier_center_thz: f64,
) -> Result<OsaSample> {
    let _ = load; // loading does not move the ASE floor under constant gain
    link.validate()?;
    let carrier = mc.carrier_at(carrier_center_thz)?;
    let signal_mw = db_to_linear(received_power(link, carrier.tx_power_dbm));
    let osnr_ase = ase_osnr(link, carrier.tx_power_dbm)?;
    let n_ref_mw = signal_mw / db_to_linear(osnr_ase);
    let noise_in_band = n_ref_mw * (carrier.spec.signal_bandwidth_ghz / REFERENCE_BANDWIDTH_GHZ);
    let p_tot_mw = if carrier.enabled {
        signal_mw + noise_in_band
    } else {
        noise_in_band
    };
    Ok(OsaSample {
        p_tot_mw,
        n_ref_mw,
        center_frequency_thz: carrier.center_thz,
    })
}
