//! Transceiver Q-over-OSNR characterization curves: monotone
//! shape-preserving fit, bracketed inversion, sensitivity, and the
//! systematic-error analysis for non-transceiver-specific curves.
//!
//! The fit is an interpolant, not a regression: it passes through every
//! (smoothed) sample exactly. Evaluation outside the sampled domain is a
//! hard error — at high OSNR the right answer is a more demanding
//! modulation format, not extrapolation into the flat region.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::snr::{normalize_gsnr_db, SignalSpec};

/// One characterization point: measured OSNR and the Q-value read from
/// the receiver's pre-FEC BER at that OSNR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacterizationSample {
    pub osnr_db: f64,
    pub q_db: f64,
}

/// Instrument-plausible OSNR window for characterization captures.
pub const OSNR_PLAUSIBLE_DB: (f64, f64) = (0.0, 45.0);

/// Q inversions smaller than this are treated as instrument noise and
/// smoothed by isotonic projection; anything larger rejects the capture.
pub const MONOTONE_TOLERANCE_DB: f64 = 0.05;

const MIN_SAMPLES: usize = 4;
const INVERT_TOLERANCE_DB: f64 = 1e-6;

/// Where a fitted curve came from; reports flag anything that is not
/// transceiver-specific.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    #[serde(rename = "transceiver-specific")]
    TransceiverSpecific,
    #[serde(rename = "type-average")]
    TypeAverage,
    #[serde(rename = "vendor-supplied")]
    VendorSupplied,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::TransceiverSpecific => "transceiver-specific",
            Provenance::TypeAverage => "type-average",
            Provenance::VendorSupplied => "vendor-supplied",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "transceiver-specific" => Ok(Provenance::TransceiverSpecific),
            "type-average" => Ok(Provenance::TypeAverage),
            "vendor-supplied" => Ok(Provenance::VendorSupplied),
            other => Err(Error::InvalidSignalSpec(format!(
                "unknown provenance {other:?}"
            ))),
        }
    }
}

/// Monotone piecewise-cubic map OSNR(dB) → Q(dB) through the sample set.
#[derive(Debug, Clone)]
pub struct CharacterizationCurve {
    samples: Vec<CharacterizationSample>,
    tangents: Vec<f64>,
}

impl CharacterizationCurve {
    /// Fit a monotone shape-preserving interpolant through the samples.
    ///
    /// Samples are sorted by OSNR first (input order does not matter).
    /// Q inversions within [`MONOTONE_TOLERANCE_DB`] are smoothed by
    /// isotonic projection; larger inversions reject the capture.
    pub fn fit(samples: &[CharacterizationSample]) -> Result<Self> {
        if samples.len() < MIN_SAMPLES {
            return Err(Error::TooFewSamples {
                got: samples.len(),
                need: MIN_SAMPLES,
            });
        }
        let mut sorted = samples.to_vec();
        for s in &sorted {
            if !s.osnr_db.is_finite() || !s.q_db.is_finite() {
                return Err(Error::NonFiniteSample {
                    osnr: s.osnr_db,
                    q: s.q_db,
                });
            }
            if s.osnr_db < OSNR_PLAUSIBLE_DB.0 || s.osnr_db > OSNR_PLAUSIBLE_DB.1 {
                return Err(Error::ImplausibleOsnr(s.osnr_db));
            }
        }
        sorted.sort_by(|a, b| a.osnr_db.total_cmp(&b.osnr_db));
        for pair in sorted.windows(2) {
            if pair[1].osnr_db - pair[0].osnr_db < 1e-9 {
                return Err(Error::DuplicateOsnr(pair[0].osnr_db));
            }
        }

        let q_raw: Vec<f64> = sorted.iter().map(|s| s.q_db).collect();
        let q_iso = isotonic(&q_raw);
        let mut worst = 0.0f64;
        let mut worst_at = 0usize;
        for (i, (raw, iso)) in q_raw.iter().zip(&q_iso).enumerate() {
            let dev = (raw - iso).abs();
            if dev > worst {
                worst = dev;
                worst_at = i;
            }
        }
        if worst > MONOTONE_TOLERANCE_DB {
            return Err(Error::NotMonotone(format!(
                "Q deviates {worst:.3} dB from a non-decreasing sequence at osnr {:.2} dB (tolerance {MONOTONE_TOLERANCE_DB} dB)",
                sorted[worst_at].osnr_db
            )));
        }
        for (s, q) in sorted.iter_mut().zip(&q_iso) {
            s.q_db = *q;
        }

        let tangents = monotone_tangents(&sorted);
        Ok(Self {
            samples: sorted,
            tangents,
        })
    }

    pub fn samples(&self) -> &[CharacterizationSample] {
        &self.samples
    }

    /// OSNR domain covered by the samples.
    pub fn domain(&self) -> (f64, f64) {
        (
            self.samples[0].osnr_db,
            self.samples[self.samples.len() - 1].osnr_db,
        )
    }

    /// Q range attained over the domain.
    pub fn q_range(&self) -> (f64, f64) {
        (
            self.samples[0].q_db,
            self.samples[self.samples.len() - 1].q_db,
        )
    }

    fn segment_for(&self, osnr_db: f64) -> usize {
        // rightmost i with samples[i].osnr <= osnr, clamped to a valid segment
        match self
            .samples
            .binary_search_by(|s| s.osnr_db.total_cmp(&osnr_db))
        {
            Ok(i) => i.min(self.samples.len() - 2),
            Err(ins) => ins.saturating_sub(1).min(self.samples.len() - 2),
        }
    }

    /// Evaluate Q at an OSNR inside the domain.
    pub fn evaluate(&self, osnr_db: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        if osnr_db < lo || osnr_db > hi || !osnr_db.is_finite() {
            return Err(Error::OutsideDomain {
                osnr: osnr_db,
                min: lo,
                max: hi,
            });
        }
        let i = self.segment_for(osnr_db);
        Ok(self.hermite(i, osnr_db))
    }

    /// dQ/dOSNR at an OSNR strictly inside the domain. The reciprocal is
    /// the amplification factor a Q reading error picks up on inversion.
    pub fn sensitivity(&self, osnr_db: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        if osnr_db <= lo || osnr_db >= hi {
            return Err(Error::BoundarySensitivity(osnr_db));
        }
        let i = self.segment_for(osnr_db);
        Ok(self.hermite_derivative(i, osnr_db))
    }

    /// Invert the curve: the unique OSNR with `curve(OSNR) = q`, by
    /// bracketed bisection. On flat segments this returns the LOWEST
    /// OSNR attaining `q`, which never overestimates link quality.
    pub fn invert(&self, q_db: f64) -> Result<f64> {
        let (q_min, q_max) = self.q_range();
        if q_db > q_max {
            return Err(Error::AboveCharacterizedRange {
                q: q_db,
                max: q_max,
            });
        }
        if q_db < q_min {
            return Err(Error::BelowCharacterizedRange {
                q: q_db,
                min: q_min,
            });
        }
        // leftmost x with curve(x) >= q; curve is continuous and non-decreasing
        let (mut lo, mut hi) = self.domain();
        if self.samples[0].q_db >= q_db {
            return Ok(lo);
        }
        while hi - lo > INVERT_TOLERANCE_DB {
            let mid = 0.5 * (lo + hi);
            if self.hermite(self.segment_for(mid), mid) >= q_db {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    fn hermite(&self, i: usize, x: f64) -> f64 {
        let (x0, x1) = (self.samples[i].osnr_db, self.samples[i + 1].osnr_db);
        let (y0, y1) = (self.samples[i].q_db, self.samples[i + 1].q_db);
        let (m0, m1) = (self.tangents[i], self.tangents[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        y0 * h00 + h * m0 * h10 + y1 * h01 + h * m1 * h11
    }

    fn hermite_derivative(&self, i: usize, x: f64) -> f64 {
        let (x0, x1) = (self.samples[i].osnr_db, self.samples[i + 1].osnr_db);
        let (y0, y1) = (self.samples[i].q_db, self.samples[i + 1].q_db);
        let (m0, m1) = (self.tangents[i], self.tangents[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let t2 = t * t;
        let d00 = (6.0 * t2 - 6.0 * t) / h;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = (6.0 * t - 6.0 * t2) / h;
        let d11 = 3.0 * t2 - 2.0 * t;
        y0 * d00 + m0 * d10 + y1 * d01 + m1 * d11
    }
}

/// Pool-adjacent-violators projection onto non-decreasing sequences.
fn isotonic(values: &[f64]) -> Vec<f64> {
    // blocks of (sum, count) merged whenever means would decrease
    let mut sums: Vec<f64> = Vec::with_capacity(values.len());
    let mut counts: Vec<usize> = Vec::with_capacity(values.len());
    for &v in values {
        sums.push(v);
        counts.push(1);
        while sums.len() > 1 {
            let n = sums.len();
            let mean_last = sums[n - 1] / counts[n - 1] as f64;
            let mean_prev = sums[n - 2] / counts[n - 2] as f64;
            if mean_prev <= mean_last {
                break;
            }
            let (s, c) = (sums.pop().unwrap(), counts.pop().unwrap());
            *sums.last_mut().unwrap() += s;
            *counts.last_mut().unwrap() += c;
        }
    }
    let mut out = Vec::with_capacity(values.len());
    for (s, c) in sums.iter().zip(&counts) {
        out.extend(std::iter::repeat_n(s / *c as f64, *c));
    }
    out
}

/// Shape-preserving tangents: harmonic-mean weighting of adjacent secants
/// in the interior, one-sided secants at the ends. Flat or opposing
/// secants force a zero tangent, which keeps flat segments exactly flat.
fn monotone_tangents(samples: &[CharacterizationSample]) -> Vec<f64> {
    let n = samples.len();
    let h: Vec<f64> = samples
        .windows(2)
        .map(|p| p[1].osnr_db - p[0].osnr_db)
        .collect();
    let d: Vec<f64> = samples
        .windows(2)
        .zip(&h)
        .map(|(p, h)| (p[1].q_db - p[0].q_db) / h)
        .collect();
    let mut m = vec![0.0; n];
    m[0] = d[0];
    m[n - 1] = d[n - 2];
    for i in 1..n - 1 {
        if d[i - 1] <= 0.0 || d[i] <= 0.0 {
            m[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    m
}

/// A characterized probing transceiver: identity, signal configuration,
/// fitted curve, and where that curve came from.
#[derive(Debug, Clone)]
pub struct TransceiverProfile {
    pub id: String,
    pub signal_spec: SignalSpec,
    pub curve: CharacterizationCurve,
    pub provenance: Provenance,
}

impl TransceiverProfile {
    pub fn new(
        id: impl Into<String>,
        signal_spec: SignalSpec,
        curve: CharacterizationCurve,
        provenance: Provenance,
    ) -> Self {
        Self {
            id: id.into(),
            signal_spec,
            curve,
            provenance,
        }
    }

    /// Estimated link GSNR from a probe Q reading: invert the curve to an
    /// OSNR estimate, then normalize to the symbol rate.
    pub fn estimate_gsnr(&self, q_db: f64) -> Result<f64> {
        let osnr_est = self.curve.invert(q_db)?;
        normalize_gsnr_db(osnr_est, self.signal_spec.normalization_bandwidth_ghz())
    }
}

/// Convenience wrapper mirroring [`TransceiverProfile::estimate_gsnr`].
pub fn estimate_gsnr(profile: &TransceiverProfile, q_db: f64) -> Result<f64> {
    profile.estimate_gsnr(q_db)
}

/// Spread of GSNR estimates across candidate curves at one Q reading:
/// deviation of the extremes from the mean estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSpread {
    pub mean_db: f64,
    pub max_over_db: f64,
    pub max_under_db: f64,
}

impl CurveSpread {
    /// Total spread between the extreme estimates.
    pub fn total(&self) -> f64 {
        self.max_over_db + self.max_under_db
    }
}

/// Estimate the link GSNR with every candidate profile at the same Q and
/// report how far the extremes sit from the mean — the systematic error
/// a non-transceiver-specific curve can introduce.
pub fn curve_spread(profiles: &[&TransceiverProfile], q_db: f64) -> Result<CurveSpread> {
    if profiles.len() < 2 {
        return Err(Error::TooFewProfiles {
            got: profiles.len(),
            need: 2,
        });
    }
    require_shared_spec(profiles)?;
    let estimates: Vec<f64> = profiles
        .iter()
        .map(|p| p.estimate_gsnr(q_db))
        .collect::<Result<_>>()?;
    let mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
    let max = estimates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = estimates.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(CurveSpread {
        mean_db: mean,
        max_over_db: max - mean,
        max_under_db: mean - min,
    })
}

fn require_shared_spec(profiles: &[&TransceiverProfile]) -> Result<()> {
    let first = &profiles[0].signal_spec;
    for p in &profiles[1..] {
        if p.signal_spec != *first {
            return Err(Error::MismatchedSpecs(format!(
                "{} is {} {} GBd, {} is {} {} GBd",
                profiles[0].id,
                first.modulation,
                first.symbol_rate_gbd,
                p.id,
                p.signal_spec.modulation,
                p.signal_spec.symbol_rate_gbd
            )));
        }
    }
    Ok(())
}

/// Q-grid step for the dominance scan in [`select_probing_curve`].
const SELECT_SCAN_STEP_DB: f64 = 0.01;
/// Differences below the inversion tolerance count as ties, not crossings.
const SELECT_TIE_EPS_DB: f64 = 1e-3;

/// Pick the best-performing curve: the profile that attains each Q at the
/// lowest OSNR over the shared Q range, i.e. the one whose inversion
/// yields the most modest link estimate. Ties break on profile id order.
///
/// If candidates cross inside the shared range no single curve dominates;
/// the error names the first crossing interval found by a sign-change
/// scan so the operator can select per measurement.
pub fn select_probing_curve<'a>(
    candidates: &[&'a TransceiverProfile],
) -> Result<&'a TransceiverProfile> {
    if candidates.is_empty() {
        return Err(Error::TooFewProfiles { got: 0, need: 1 });
    }
    if candidates.len() == 1 {
        return Ok(candidates[0]);
    }
    require_shared_spec(candidates)?;

    let q_lo = candidates
        .iter()
        .map(|p| p.curve.q_range().0)
        .fold(f64::NEG_INFINITY, f64::max);
    let q_hi = candidates
        .iter()
        .map(|p| p.curve.q_range().1)
        .fold(f64::INFINITY, f64::min);
    if q_hi - q_lo <= SELECT_SCAN_STEP_DB {
        return Err(Error::NoSharedDomain);
    }

    let steps = ((q_hi - q_lo) / SELECT_SCAN_STEP_DB).floor() as usize;
    let grid: Vec<f64> = (0..=steps)
        .map(|k| q_lo + k as f64 * SELECT_SCAN_STEP_DB)
        .collect();

    // sort by id so ties resolve deterministically
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| candidates[a].id.cmp(&candidates[b].id));

    let mut best = order[0];
    for &idx in &order[1..] {
        best = dominant(candidates, best, idx, &grid)?;
    }
    Ok(candidates[best])
}

/// Decide which of two candidates attains every grid Q at the lower OSNR.
fn dominant(candidates: &[&TransceiverProfile], a: usize, b: usize, grid: &[f64]) -> Result<usize> {
    let mut sign = 0i8; // -1: a lower, +1: b lower
    let mut prev_q = grid[0];
    for &q in grid {
        let oa = candidates[a].curve.invert(q)?;
        let ob = candidates[b].curve.invert(q)?;
        let diff = oa - ob;
        let s = if diff < -SELECT_TIE_EPS_DB {
            -1
        } else if diff > SELECT_TIE_EPS_DB {
            1
        } else {
            0
        };
        if s != 0 {
            if sign != 0 && s != sign {
                return Err(Error::CurvesCross {
                    q_lo: prev_q,
                    q_hi: q,
                    a: candidates[a].id.clone(),
                    b: candidates[b].id.clone(),
                });
            }
            sign = s;
            prev_q = q;
        }
    }
    Ok(if sign == 1 { b } else { a })
}
