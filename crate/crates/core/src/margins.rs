//! Service-margin derivation: implementation margin from required GSNR,
//! neighbor-impact margin from paired standalone/neighbors-enabled
//! sweeps, end-of-life margin over channel-load conditions, and margin
//! verification by depleting launch power to the pre-FEC Q threshold.
//!
//! All margins are differences of dB quantities, so they are invariant
//! under any constant offset applied to every estimate.

use std::collections::BTreeMap;

use crate::characterization::TransceiverProfile;
use crate::error::{Error, Result};
use crate::olssim::{simulate, LoadCondition, MediaChannel, OlsLink};
use crate::probing::ProbeResult;

/// Extra allocation recommended on top of the measured margins to cover
/// probing inaccuracy. An empirical constant, not computed.
pub const DEFAULT_PROBING_ALLOWANCE_DB: f64 = 0.6;

/// Pre-FEC BER threshold expressed as a Q-value.
pub const DEFAULT_Q_THRESHOLD_DB: f64 = 5.0;

/// Power adjustment granularity for margin depletion.
pub const DEFAULT_POWER_STEP_DB: f64 = 0.1;

/// Depletion gives up beyond this much power movement in either direction.
pub const MAX_POWER_SWING_DB: f64 = 15.0;

/// GSNR implementation margin: estimated link GSNR minus the required
/// GSNR for the configuration. Positive means the configuration is
/// expected to work over the probed link.
#[inline]
pub fn implementation_margin(gsnr_est_db: f64, gsnr_req_db: f64) -> f64 {
    gsnr_est_db - gsnr_req_db
}

/// Per-load margins with a non-negative worst case.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborMargins {
    /// Raw per-load delta (standalone − neighbors enabled), dB. Negative
    /// values (neighbors helping) are reported as measured.
    pub per_load: Vec<(LoadCondition, f64)>,
    /// Worst degradation over all loads, clamped at zero from below —
    /// a service margin is a non-negative allocation.
    pub worst_case_db: f64,
}

/// Lowest in-range estimate per load (the consolidation rule applied
/// within one load condition).
fn min_estimate_by_load(results: &[ProbeResult]) -> BTreeMap<String, (LoadCondition, f64)> {
    let mut map: BTreeMap<String, (LoadCondition, f64)> = BTreeMap::new();
    for r in results {
        if let Some(est) = r.outcome.gsnr_est_db() {
            map.entry(r.load.notation())
                .and_modify(|(_, v)| *v = v.min(est))
                .or_insert((r.load, est));
        }
    }
    map
}

/// Margin required to absorb enabling the direct neighbors inside the
/// spectrum service: per-load CuT performance with neighbors disabled
/// minus performance with neighbors enabled.
pub fn neighbor_margin(
    standalone: &[ProbeResult],
    with_neighbors: &[ProbeResult],
) -> Result<NeighborMargins> {
    let alone = min_estimate_by_load(standalone);
    let paired = min_estimate_by_load(with_neighbors);
    if alone.is_empty() && paired.is_empty() {
        return Err(Error::NothingToConsolidate);
    }
    let missing: Vec<String> = alone
        .keys()
        .filter(|k| !paired.contains_key(*k))
        .chain(paired.keys().filter(|k| !alone.contains_key(*k)))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingLoads(missing.join(", ")));
    }
    let mut per_load = Vec::with_capacity(alone.len());
    let mut worst = 0.0f64;
    for (key, (load, est_alone)) in &alone {
        let (_, est_paired) = paired[key];
        let delta = est_alone - est_paired;
        worst = worst.max(delta);
        per_load.push((*load, delta));
    }
    Ok(NeighborMargins {
        per_load,
        worst_case_db: worst,
    })
}

/// Per-load end-of-life margins relative to the worst-performing load.
#[derive(Debug, Clone, PartialEq)]
pub struct EolMargins {
    /// Margin per load: estimate at that load minus the worst estimate.
    pub per_load: Vec<(LoadCondition, f64)>,
    /// Margin at the probing-time reference condition.
    pub at_reference_db: f64,
    /// Maximum margin over all loads.
    pub max_db: f64,
    /// The load condition with the worst performance. Often an
    /// intermediate fill rather than the full load, which is why the
    /// minimum runs over every probed condition.
    pub worst_load: LoadCondition,
}

/// End-of-life margin: for each load condition, the CuT estimate minus
/// the minimum estimate over ALL probed conditions.
pub fn eol_margin(per_load: &[ProbeResult], reference: &LoadCondition) -> Result<EolMargins> {
    let by_load = min_estimate_by_load(per_load);
    if by_load.len() < 2 {
        return Err(Error::SingleLoadCondition);
    }
    if !by_load.contains_key(&reference.notation()) {
        return Err(Error::MissingReferenceLoad(reference.notation()));
    }
    let (worst_load, worst_est) = by_load.values().fold(
        (by_load.values().next().unwrap().0, f64::INFINITY),
        |acc, (load, est)| {
            if *est < acc.1 {
                (*load, *est)
            } else {
                acc
            }
        },
    );
    let per_load_margins: Vec<(LoadCondition, f64)> = by_load
        .values()
        .map(|(load, est)| (*load, est - worst_est))
        .collect();
    let at_reference = by_load[&reference.notation()].1 - worst_est;
    let max = per_load_margins.iter().map(|(_, m)| *m).fold(0.0, f64::max);
    Ok(EolMargins {
        per_load: per_load_margins,
        at_reference_db: at_reference,
        max_db: max,
        worst_load,
    })
}

/// Which way the launch power moved to reach the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdjustDirection {
    /// Originally not working; power was increased (arrow up).
    Increase,
    /// Originally working; power was decreased to deplete the margin.
    Decrease,
}

impl AdjustDirection {
    pub fn as_str(&self) -> &'static str {
        match self {
            AdjustDirection::Increase => "increase",
            AdjustDirection::Decrease => "decrease",
        }
    }
}

/// Outcome of a margin-depletion run.
#[derive(Debug, Clone, PartialEq)]
pub struct DepletionResult {
    pub start_power_dbm: f64,
    pub threshold_power_dbm: f64,
    /// Signed power adjustment applied to sit at the threshold, dB
    /// (negative when margin was depleted downward).
    pub power_delta_db: f64,
    pub predicted_margin_db: f64,
    /// `|power_delta| − |predicted_margin|`: positive when reaching the
    /// threshold took more power movement than the margin predicted.
    pub margin_error_db: f64,
    pub direction: AdjustDirection,
}

/// Verify a predicted margin by stepping the launch power until the
/// receiver Q crosses `q_threshold_db`. `probe` maps a power offset in dB
/// (relative to the commissioned power) to a Q reading; it must be run in
/// a regime where noise conditions stay constant, so a power change moves
/// OSNR one-for-one.
///
/// The threshold power is the lowest probed power with Q at or above the
/// threshold, searched in `step_db` increments.
pub fn deplete_margin<F>(
    start_power_dbm: f64,
    probe: F,
    predicted_margin_db: f64,
    q_threshold_db: f64,
    step_db: f64,
) -> Result<DepletionResult>
where
    F: Fn(f64) -> Result<f64>,
{
    if step_db <= 0.0 {
        return Err(Error::InvalidPlan(format!(
            "depletion step {step_db} dB must be positive"
        )));
    }
    let max_steps = (MAX_POWER_SWING_DB / step_db).floor() as usize;
    let working = probe(0.0)? >= q_threshold_db;

    let (delta, direction) = if working {
        // deplete: largest downward move that still meets the threshold
        let mut k = 0usize;
        while k < max_steps && probe(-((k + 1) as f64) * step_db)? >= q_threshold_db {
            k += 1;
        }
        if k == max_steps {
            return Err(Error::ThresholdUnreachable {
                span: MAX_POWER_SWING_DB,
            });
        }
        (-(k as f64) * step_db + 0.0, AdjustDirection::Decrease)
    } else {
        // grow: smallest upward move that reaches the threshold
        let mut k = 1usize;
        while k <= max_steps && probe(k as f64 * step_db)? < q_threshold_db {
            k += 1;
        }
        if k > max_steps {
            return Err(Error::ThresholdUnreachable {
                span: MAX_POWER_SWING_DB,
            });
        }
        (k as f64 * step_db, AdjustDirection::Increase)
    };

    Ok(DepletionResult {
        start_power_dbm,
        threshold_power_dbm: start_power_dbm + delta,
        power_delta_db: delta,
        predicted_margin_db,
        margin_error_db: delta.abs() - predicted_margin_db.abs(),
        direction,
    })
}

/// Depletion probe backed by the simulator: offsets the carrier-under-test
/// launch power and reads Q through the profile curve (noiseless).
///
/// Readings above the characterized OSNR range saturate at the curve top;
/// readings below it count as a lost signal.
pub fn simulator_probe<'a>(
    link: &'a OlsLink,
    mc: &'a MediaChannel,
    load: &'a LoadCondition,
    cut_center_thz: f64,
    profile: &'a TransceiverProfile,
    commissioned_power_dbm: f64,
) -> impl Fn(f64) -> Result<f64> + 'a {
    move |offset_db: f64| {
        let mc = mc.with_cut_config(
            cut_center_thz,
            profile.signal_spec,
            commissioned_power_dbm + offset_db,
        )?;
        let truth = simulate(link, &mc, load, cut_center_thz)?;
        match profile.curve.evaluate(truth.gosnr_db) {
            Ok(q) => Ok(q),
            Err(Error::OutsideDomain { osnr, max, .. }) if osnr > max => {
                Ok(profile.curve.q_range().1)
            }
            Err(Error::OutsideDomain { osnr, min, .. }) if osnr < min => Ok(f64::NEG_INFINITY),
            Err(e) => Err(e),
        }
    }
}

/// Assembled margin summary for one probed configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginReport {
    pub gsnr_est_link_db: f64,
    pub gsnr_req_db: f64,
    /// Exactly `gsnr_est_link − gsnr_req`.
    pub implementation_margin_db: f64,
    pub neighbor_margin_db: f64,
    pub eol_margin_db: f64,
    pub probing_allowance_db: f64,
}

impl MarginReport {
    /// Recommended total service-margin allocation on top of the
    /// implementation margin: neighbor + end-of-life + probing allowance.
    pub fn total_recommended_db(&self) -> f64 {
        self.neighbor_margin_db + self.eol_margin_db + self.probing_allowance_db
    }
}

/// Assemble the report; `probing_allowance_db` defaults to
/// [`DEFAULT_PROBING_ALLOWANCE_DB`].
pub fn build_report(
    gsnr_est_link_db: f64,
    gsnr_req_db: f64,
    neighbor_margin_db: f64,
    eol_margin_db: f64,
    probing_allowance_db: Option<f64>,
) -> MarginReport {
    MarginReport {
        gsnr_est_link_db,
        gsnr_req_db,
        implementation_margin_db: implementation_margin(gsnr_est_link_db, gsnr_req_db),
        neighbor_margin_db,
        eol_margin_db,
        probing_allowance_db: probing_allowance_db.unwrap_or(DEFAULT_PROBING_ALLOWANCE_DB),
    }
}
