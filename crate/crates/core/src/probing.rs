//! Probe sweeps: run a plan of (configuration × load × repeat) points
//! against a link source — the built-in simulator or an imported
//! measurement table — and turn Q readings into per-point GSNR estimates.
//!
//! Plan points are independent; with the `parallel` feature the sweep
//! fans out over a rayon pool. Per-point RNG streams are derived from
//! the master seed and the point's sweep index, so parallel and
//! sequential execution produce identical results.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::characterization::{Provenance, TransceiverProfile};
use crate::error::{Error, Result};
use crate::olssim::{receiver_q, simulate, LoadCondition, MediaChannel, OlsLink};

/// Launch power may deviate this much from the PSD-derived target before
/// a plan is rejected as inconsistent with the equalization policy.
pub const PSD_CONSISTENCY_TOLERANCE_DB: f64 = 0.5;

/// In-memory profile store keyed by id. Iteration order is the id order,
/// which keeps every downstream report deterministic.
#[derive(Debug, Clone, Default)]
pub struct ProfileSet {
    profiles: BTreeMap<String, TransceiverProfile>,
}

impl ProfileSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, profile: TransceiverProfile) {
        self.profiles.insert(profile.id.clone(), profile);
    }

    pub fn get(&self, id: &str) -> Result<&TransceiverProfile> {
        self.profiles
            .get(id)
            .ok_or_else(|| Error::UnknownProfile(id.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &TransceiverProfile> {
        self.profiles.values()
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }
}

/// One probing configuration: which curve interprets the Q readings,
/// where the carrier sits, and its launch power.
///
/// `unit_profile_id` names the physical transceiver's own curve when it
/// differs from the estimation curve — that separation is what makes a
/// non-transceiver-specific estimate carry a systematic error.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanConfig {
    pub profile_id: String,
    pub unit_profile_id: Option<String>,
    pub center_thz: f64,
    pub tx_power_dbm: f64,
}

impl PlanConfig {
    pub fn new(profile_id: impl Into<String>, center_thz: f64, tx_power_dbm: f64) -> Self {
        Self {
            profile_id: profile_id.into(),
            unit_profile_id: None,
            center_thz,
            tx_power_dbm,
        }
    }

    /// Id of the curve that models the physical unit's behavior.
    pub fn unit_id(&self) -> &str {
        self.unit_profile_id.as_deref().unwrap_or(&self.profile_id)
    }
}

/// A probe sweep plan.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbePlan {
    pub configurations: Vec<PlanConfig>,
    pub load_conditions: Vec<LoadCondition>,
    pub repeats: usize,
}

impl ProbePlan {
    pub fn validate(&self) -> Result<()> {
        if self.configurations.is_empty() {
            return Err(Error::InvalidPlan("no configurations".into()));
        }
        if self.load_conditions.is_empty() {
            return Err(Error::InvalidPlan("no load conditions".into()));
        }
        if self.repeats == 0 {
            return Err(Error::InvalidPlan("repeats must be at least 1".into()));
        }
        Ok(())
    }

    pub fn point_count(&self) -> usize {
        self.configurations.len() * self.load_conditions.len() * self.repeats
    }
}

/// What a plan point produced: an estimate, or the reason there is none.
#[derive(Debug, Clone, PartialEq)]
pub enum EstimateOutcome {
    Estimated(f64),
    /// Q above the characterized range — flat-region reading, the
    /// operator should switch to a more demanding format.
    AboveRange,
    /// Q below the characterized range.
    BelowRange,
    /// No measurement available for this point.
    Missing(String),
}

impl EstimateOutcome {
    pub fn gsnr_est_db(&self) -> Option<f64> {
        match self {
            EstimateOutcome::Estimated(v) => Some(*v),
            _ => None,
        }
    }

    pub fn flag(&self) -> &'static str {
        match self {
            EstimateOutcome::Estimated(_) => "ok",
            EstimateOutcome::AboveRange => "above-range",
            EstimateOutcome::BelowRange => "below-range",
            EstimateOutcome::Missing(_) => "missing",
        }
    }
}

/// One sweep point result, ordered by `seq` (plan order).
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    pub seq: usize,
    pub config_index: usize,
    pub profile_id: String,
    pub load: LoadCondition,
    pub q_db: Option<f64>,
    pub outcome: EstimateOutcome,
    pub provenance: Provenance,
}

/// Where Q readings come from: the simulator or a replayed table.
pub trait LinkSource: Sync {
    /// Q reading for a plan point. `seq` is the deterministic sweep index
    /// used to derive the point's RNG stream.
    fn q_reading(
        &self,
        config: &PlanConfig,
        load: &LoadCondition,
        repeat: usize,
        seq: usize,
    ) -> Result<f64>;

    /// Pre-sweep validation of a configuration (e.g. launch power vs the
    /// PSD equalization target). Sources without that context accept all.
    fn validate_config(&self, _config: &PlanConfig, _profile: &TransceiverProfile) -> Result<()> {
        Ok(())
    }
}

/// Simulator-backed source: each reading reconfigures the carrier under
/// test, simulates the link, and reads the receiver out through the
/// profile curve with seeded Gaussian Q noise.
pub struct SimSource<'a> {
    pub link: &'a OlsLink,
    pub mc: &'a MediaChannel,
    pub profiles: &'a ProfileSet,
    pub noise_sigma_db: f64,
    pub seed: u64,
}

impl LinkSource for SimSource<'_> {
    fn q_reading(
        &self,
        config: &PlanConfig,
        load: &LoadCondition,
        _repeat: usize,
        seq: usize,
    ) -> Result<f64> {
        // the Q reading comes from the physical unit's own curve; the
        // estimation curve only enters on inversion
        let unit = self.profiles.get(config.unit_id())?;
        let mc =
            self.mc
                .with_cut_config(config.center_thz, unit.signal_spec, config.tx_power_dbm)?;
        let truth = simulate(self.link, &mc, load, config.center_thz)?;
        let mut rng = point_rng(self.seed, seq as u64);
        receiver_q(&truth, unit, self.noise_sigma_db, &mut rng)
    }

    fn validate_config(&self, config: &PlanConfig, profile: &TransceiverProfile) -> Result<()> {
        let unit = self.profiles.get(config.unit_id())?;
        if unit.signal_spec != profile.signal_spec {
            return Err(Error::MismatchedSpecs(format!(
                "estimation curve {} and unit {} disagree on the signal configuration",
                config.profile_id,
                config.unit_id()
            )));
        }
        let expected = profile
            .signal_spec
            .launch_power_for_psd(self.link.psd_target_dbm_per_50ghz);
        let deviation = (config.tx_power_dbm - expected).abs();
        if deviation > PSD_CONSISTENCY_TOLERANCE_DB {
            return Err(Error::InvalidPlan(format!(
                "config {} launch power {} dBm deviates {deviation:.2} dB from the {expected:.2} dBm PSD target",
                config.profile_id, config.tx_power_dbm
            )));
        }
        Ok(())
    }
}

/// Replayed measurements keyed by (profile id, load notation); repeats
/// index successive rows for the same key.
#[derive(Debug, Clone, Default)]
pub struct MeasurementTable {
    rows: BTreeMap<(String, String), Vec<f64>>,
}

impl MeasurementTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, profile_id: &str, load: &LoadCondition, q_db: f64) {
        self.rows
            .entry((profile_id.to_string(), load.notation()))
            .or_default()
            .push(q_db);
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

impl LinkSource for MeasurementTable {
    fn q_reading(
        &self,
        config: &PlanConfig,
        load: &LoadCondition,
        repeat: usize,
        _seq: usize,
    ) -> Result<f64> {
        self.rows
            .get(&(config.profile_id.clone(), load.notation()))
            .and_then(|qs| qs.get(repeat))
            .copied()
            .ok_or_else(|| {
                Error::MissingMeasurement(format!(
                    "profile {} load {} repeat {repeat}",
                    config.profile_id,
                    load.notation()
                ))
            })
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent RNG stream for one sweep point.
pub(crate) fn point_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(index)))
}

fn eval_point(
    plan: &ProbePlan,
    source: &dyn LinkSource,
    profiles: &ProfileSet,
    seq: usize,
) -> Result<ProbeResult> {
    let n_loads = plan.load_conditions.len();
    let config_index = seq / (n_loads * plan.repeats);
    let load_index = (seq / plan.repeats) % n_loads;
    let repeat = seq % plan.repeats;
    let config = &plan.configurations[config_index];
    let load = &plan.load_conditions[load_index];
    let profile = profiles.get(&config.profile_id)?;

    let (q_db, outcome) = match source.q_reading(config, load, repeat, seq) {
        Ok(q) => {
            let outcome = match profile.estimate_gsnr(q) {
                Ok(est) => EstimateOutcome::Estimated(est),
                Err(Error::AboveCharacterizedRange { .. }) => EstimateOutcome::AboveRange,
                Err(Error::BelowCharacterizedRange { .. }) => EstimateOutcome::BelowRange,
                Err(e) => return Err(e),
            };
            (Some(q), outcome)
        }
        Err(Error::MissingMeasurement(what)) => (None, EstimateOutcome::Missing(what)),
        Err(Error::OutsideDomain { osnr, max, .. }) if osnr > max => {
            (None, EstimateOutcome::AboveRange)
        }
        Err(Error::OutsideDomain { osnr, min, .. }) if osnr < min => {
            (None, EstimateOutcome::BelowRange)
        }
        Err(e) => return Err(e),
    };

    Ok(ProbeResult {
        seq,
        config_index,
        profile_id: config.profile_id.clone(),
        load: *load,
        q_db,
        outcome,
        provenance: profile.provenance,
    })
}

fn validate_sweep(plan: &ProbePlan, source: &dyn LinkSource, profiles: &ProfileSet) -> Result<()> {
    plan.validate()?;
    for config in &plan.configurations {
        let profile = profiles.get(&config.profile_id)?;
        source.validate_config(config, profile)?;
    }
    Ok(())
}

/// Sequential sweep; the reference path the parallel sweep must match.
pub fn run_sweep_seq(
    plan: &ProbePlan,
    source: &dyn LinkSource,
    profiles: &ProfileSet,
) -> Result<Vec<ProbeResult>> {
    validate_sweep(plan, source, profiles)?;
    (0..plan.point_count())
        .map(|seq| eval_point(plan, source, profiles, seq))
        .collect()
}

/// Run every plan point and collect results in plan order. Missing
/// measurements and out-of-range readings become flagged records; the
/// sweep continues past them.
#[cfg(feature = "parallel")]
pub fn run_sweep(
    plan: &ProbePlan,
    source: &(dyn LinkSource + Sync),
    profiles: &ProfileSet,
) -> Result<Vec<ProbeResult>> {
    validate_sweep(plan, source, profiles)?;
    // points are cheap; batch them so scheduling does not dominate
    (0..plan.point_count())
        .into_par_iter()
        .with_min_len(16)
        .map(|seq| eval_point(plan, source, profiles, seq))
        .collect()
}

#[cfg(not(feature = "parallel"))]
pub fn run_sweep(
    plan: &ProbePlan,
    source: &(dyn LinkSource + Sync),
    profiles: &ProfileSet,
) -> Result<Vec<ProbeResult>> {
    run_sweep_seq(plan, source, profiles)
}

/// Collapse repeats to one result per (configuration, load) by taking the
/// median Q before estimation — robust against burst errors in single
/// readings. Points whose repeats are all missing stay missing.
pub fn aggregate_repeats(
    results: &[ProbeResult],
    profiles: &ProfileSet,
) -> Result<Vec<ProbeResult>> {
    let mut grouped: BTreeMap<(usize, String), Vec<&ProbeResult>> = BTreeMap::new();
    for r in results {
        grouped
            .entry((r.config_index, r.load.notation()))
            .or_default()
            .push(r);
    }
    let mut out = Vec::with_capacity(grouped.len());
    for (_, group) in grouped {
        let first = group[0];
        let mut qs: Vec<f64> = group.iter().filter_map(|r| r.q_db).collect();
        if qs.is_empty() {
            out.push(first.clone());
            continue;
        }
        qs.sort_by(f64::total_cmp);
        let median = if qs.len() % 2 == 1 {
            qs[qs.len() / 2]
        } else {
            0.5 * (qs[qs.len() / 2 - 1] + qs[qs.len() / 2])
        };
        let profile = profiles.get(&first.profile_id)?;
        let outcome = match profile.estimate_gsnr(median) {
            Ok(est) => EstimateOutcome::Estimated(est),
            Err(Error::AboveCharacterizedRange { .. }) => EstimateOutcome::AboveRange,
            Err(Error::BelowCharacterizedRange { .. }) => EstimateOutcome::BelowRange,
            Err(e) => return Err(e),
        };
        out.push(ProbeResult {
            q_db: Some(median),
            outcome,
            ..first.clone()
        });
    }
    out.sort_by_key(|r| r.seq);
    Ok(out)
}

/// The link estimate from a set of candidate results over the same load:
/// the minimum in-range estimate, which avoids overestimating the link.
pub fn consolidate_estimate(results: &[ProbeResult]) -> Result<f64> {
    if results.is_empty() {
        return Err(Error::NothingToConsolidate);
    }
    let first_load = results[0].load;
    for r in results {
        if r.load != first_load {
            return Err(Error::MismatchedConditions(format!(
                "expected load {first_load}, found {}",
                r.load
            )));
        }
    }
    results
        .iter()
        .filter_map(|r| r.outcome.gsnr_est_db())
        .min_by(f64::total_cmp)
        .ok_or(Error::NothingToConsolidate)
}

/// Candidate-curve estimation statistics over identical link conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorStats {
    /// Mean estimate over all curves and conditions, dB.
    pub mu_db: f64,
    /// Pooled within-condition sample standard deviation, dB.
    pub sigma_db: f64,
    /// Worst overestimation of any curve relative to the per-condition mean, dB.
    pub max_over_db: f64,
    /// Worst underestimation relative to the per-condition mean, dB.
    pub max_under_db: f64,
}

impl ErrorStats {
    /// Full spread between the extreme curves.
    pub fn spread_db(&self) -> f64 {
        self.max_over_db + self.max_under_db
    }
}

/// Results from one candidate curve, ordered by sweep sequence.
#[derive(Debug, Clone)]
pub struct ProbeGroup {
    pub curve_id: String,
    pub results: Vec<ProbeResult>,
}

/// Compare GSNR estimates across candidate curves probing the same link
/// conditions: the over/under-estimation extremes against the mean, plus
/// the pooled standard deviation.
pub fn error_analysis(groups: &[ProbeGroup]) -> Result<ErrorStats> {
    if groups.len() < 2 {
        return Err(Error::TooFewProfiles {
            got: groups.len(),
            need: 2,
        });
    }
    let reference: Vec<String> = groups[0]
        .results
        .iter()
        .map(|r| r.load.notation())
        .collect();
    for g in &groups[1..] {
        let conditions: Vec<String> = g.results.iter().map(|r| r.load.notation()).collect();
        if conditions != reference {
            return Err(Error::MismatchedConditions(format!(
                "curve {} covers [{}], curve {} covers [{}]",
                groups[0].curve_id,
                reference.join(" "),
                g.curve_id,
                conditions.join(" ")
            )));
        }
    }
    if reference.is_empty() {
        return Err(Error::MismatchedConditions("no results".into()));
    }

    let mut all = Vec::new();
    let mut max_over = 0.0f64;
    let mut max_under = 0.0f64;
    let mut pooled_ss = 0.0;
    for (pos, condition) in reference.iter().enumerate() {
        let estimates: Vec<f64> = groups
            .iter()
            .map(|g| {
                g.results[pos].outcome.gsnr_est_db().ok_or_else(|| {
                    Error::MismatchedConditions(format!(
                        "curve {} has no estimate at load {condition}",
                        g.curve_id
                    ))
                })
            })
            .collect::<Result<_>>()?;
        let mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
        let hi = estimates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = estimates.iter().cloned().fold(f64::INFINITY, f64::min);
        max_over = max_over.max(hi - mean);
        max_under = max_under.max(mean - lo);
        pooled_ss += estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>();
        all.extend(estimates);
    }
    let df = reference.len() * (groups.len() - 1);
    let sigma = if df > 0 {
        (pooled_ss / df as f64).sqrt()
    } else {
        0.0
    };
    let mu = all.iter().sum::<f64>() / all.len() as f64;
    Ok(ErrorStats {
        mu_db: mu,
        sigma_db: sigma,
        max_over_db: max_over,
        max_under_db: max_under,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characterization::{CharacterizationCurve, CharacterizationSample};
    use crate::olssim::{parse_load, Amplifier, Carrier, CarrierKind, NliParams, Span};
    use crate::snr::{Modulation, SignalSpec};

    fn spec_69g() -> SignalSpec {
        SignalSpec::new(Modulation::DpQpsk, 69.44, 75.0).unwrap()
    }

    fn affine_profile(id: &str, offset: f64) -> TransceiverProfile {
        let samples: Vec<CharacterizationSample> = (0..36)
            .map(|i| CharacterizationSample {
                osnr_db: 5.0 + i as f64 + offset,
                q_db: 0.8 * (5.0 + i as f64) - 3.0,
            })
            .collect();
        TransceiverProfile::new(
            id,
            spec_69g(),
            CharacterizationCurve::fit(&samples).unwrap(),
            Provenance::TransceiverSpecific,
        )
    }

    fn lab_link(pre_loss_db: f64) -> OlsLink {
        OlsLink {
            spans: vec![Span {
                length_km: 25.0,
                loss_coeff_db_per_km: 0.2,
            }],
            amplifiers: vec![Amplifier {
                gain_db: 5.0,
                noise_figure_db: 5.0,
            }],
            pre_loss_db,
            psd_target_dbm_per_50ghz: 0.0,
            loopback: true,
            nli: NliParams::default(),
        }
    }

    fn lab_mc(tx: f64) -> MediaChannel {
        MediaChannel {
            center_thz: 193.9,
            width_ghz: 400.0,
            carriers: vec![Carrier {
                center_thz: 193.95,
                spec: spec_69g(),
                tx_power_dbm: tx,
                kind: CarrierKind::Probe,
                enabled: true,
            }],
        }
    }

    fn one_profile_set(profile: TransceiverProfile) -> ProfileSet {
        let mut set = ProfileSet::new();
        set.insert(profile);
        set
    }

    fn single_point_plan(profile_id: &str, tx: f64) -> ProbePlan {
        ProbePlan {
            configurations: vec![PlanConfig::new(profile_id, 193.95, tx)],
            load_conditions: vec![parse_load("...........").unwrap()],
            repeats: 1,
        }
    }

    #[test]
    fn single_point_round_trip() {
        let link = lab_link(16.4);
        let mc = lab_mc(1.43);
        let profiles = one_profile_set(affine_profile("sl2p1", 0.0));
        let source = SimSource {
            link: &link,
            mc: &mc,
            profiles: &profiles,
            noise_sigma_db: 0.0,
            seed: 1,
        };
        let plan = single_point_plan("sl2p1", 1.43);
        let results = run_sweep(&plan, &source, &profiles).unwrap();
        assert_eq!(results.len(), 1);
        let truth = simulate(&link, &mc, &plan.load_conditions[0], 193.95).unwrap();
        let est = results[0].outcome.gsnr_est_db().unwrap();
        assert!((est - truth.gsnr_db).abs() < 2e-3);
    }

    #[test]
    fn sweep_shape_ten_configs_four_loads() {
        let link = lab_link(16.4);
        let mc = lab_mc(1.43);
        let profiles = one_profile_set(affine_profile("sl2p1", 0.0));
        let plan = ProbePlan {
            configurations: (0..10)
                .map(|_| PlanConfig::new("sl2p1", 193.95, 1.43))
                .collect(),
            load_conditions: ["...........", ".I...I...I.", "...IIIII...", "IIIIIIIIIII"]
                .iter()
                .map(|s| parse_load(s).unwrap())
                .collect(),
            repeats: 1,
        };
        let source = SimSource {
            link: &link,
            mc: &mc,
            profiles: &profiles,
            noise_sigma_db: 0.0,
            seed: 1,
        };
        let results = run_sweep(&plan, &source, &profiles).unwrap();
        assert_eq!(results.len(), 40);
        // plan order: configuration-major, then load, then repeat
        assert!(results.windows(2).all(|w| w[0].seq + 1 == w[1].seq));
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let link = lab_link(16.4);
        let mc = lab_mc(1.43);
        let profiles = one_profile_set(affine_profile("sl2p1", 0.0));
        let mut plan = single_point_plan("sl2p1", 1.43);
        plan.repeats = 64;
        let source = SimSource {
            link: &link,
            mc: &mc,
            profiles: &profiles,
            noise_sigma_db: 0.05,
            seed: 42,
        };
        let par = run_sweep(&plan, &source, &profiles).unwrap();
        let seq = run_sweep_seq(&plan, &source, &profiles).unwrap();
        assert_eq!(par, seq);
    }

    #[test]
    fn repeat_spread_tracks_amplification() {
        // estimate noise ≈ Q noise divided by the curve slope
        let link = lab_link(16.4);
        let mc = lab_mc(1.43);
        let profiles = one_profile_set(affine_profile("sl2p1", 0.0));
        let mut plan = single_point_plan("sl2p1", 1.43);
        plan.repeats = 400;
        let source = SimSource {
            link: &link,
            mc: &mc,
            profiles: &profiles,
            noise_sigma_db: 0.05,
            seed: 5,
        };
        let results = run_sweep(&plan, &source, &profiles).unwrap();
        let ests: Vec<f64> = results
            .iter()
            .filter_map(|r| r.outcome.gsnr_est_db())
            .collect();
        assert_eq!(ests.len(), 400);
        let mean = ests.iter().sum::<f64>() / ests.len() as f64;
        let std =
            (ests.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (ests.len() - 1) as f64).sqrt();
        let expected = 0.05 / 0.8;
        assert!(
            (std - expected).abs() / expected < 0.2,
            "std {std} expected {expected}"
        );
    }

    #[test]
    fn non_unit_specific_curve_biases_the_estimate() {
        // Q comes from the physical unit's curve; inverting it with a
        // curve shifted 1 dB right overestimates the link by exactly 1 dB
        let link = lab_link(16.4);
        let mc = lab_mc(1.43);
        let mut profiles = ProfileSet::new();
        profiles.insert(affine_profile("unit", 0.0));
        profiles.insert(affine_profile("readily-available", 1.0));
        let mut config = PlanConfig::new("readily-available", 193.95, 1.43);
        config.unit_profile_id = Some("unit".into());
        let plan = ProbePlan {
            configurations: vec![config],
            load_conditions: vec![parse_load("...........").unwrap()],
            repeats: 1,
        };
        let source = SimSource {
            link: &link,
            mc: &mc,
            profiles: &profiles,
            noise_sigma_db: 0.0,
            seed: 1,
        };
        let results = run_sweep(&plan, &source, &profiles).unwrap();
        let est = results[0].outcome.gsnr_est_db().unwrap();
        let truth = simulate(&link, &mc, &plan.load_conditions[0], 193.95).unwrap();
        assert!(
            (est - (truth.gsnr_db + 1.0)).abs() < 2e-3,
            "est {est}, truth {}",
            truth.gsnr_db
        );
    }

    #[test]
    fn plan_power_consistency_enforced() {
        let link = lab_link(16.4);
        let mc = lab_mc(1.43);
        let profiles = one_profile_set(affine_profile("sl2p1", 0.0));
        let source = SimSource {
            link: &link,
            mc: &mc,
            profiles: &profiles,
            noise_sigma_db: 0.0,
            seed: 1,
        };
        let plan = single_point_plan("sl2p1", 4.0); // 2.6 dB off the PSD target
        assert!(matches!(
            run_sweep(&plan, &source, &profiles),
            Err(Error::InvalidPlan(_))
        ));
    }

    #[test]
    fn missing_measurement_becomes_flagged_record() {
        let profiles = one_profile_set(affine_profile("sl2p1", 0.0));
        let mut table = MeasurementTable::new();
        let load_a = parse_load(".I...I...I.").unwrap();
        table.insert("sl2p1", &load_a, 11.2);
        let plan = ProbePlan {
            configurations: vec![PlanConfig::new("sl2p1", 193.95, 1.43)],
            load_conditions: vec![load_a, parse_load("...I...I...").unwrap()],
            repeats: 1,
        };
        let results = run_sweep(&plan, &table, &profiles).unwrap();
        assert_eq!(results.len(), 2);
        assert!(results[0].outcome.gsnr_est_db().is_some());
        assert!(matches!(results[1].outcome, EstimateOutcome::Missing(_)));
    }

    #[test]
    fn out_of_range_q_is_flagged_not_dropped() {
        let profiles = one_profile_set(affine_profile("sl2p1", 0.0));
        let mut table = MeasurementTable::new();
        let load = parse_load("...........").unwrap();
        table.insert("sl2p1", &load, 99.0); // far above the curve top
        let plan = ProbePlan {
            configurations: vec![PlanConfig::new("sl2p1", 193.95, 1.43)],
            load_conditions: vec![load],
            repeats: 1,
        };
        let results = run_sweep(&plan, &table, &profiles).unwrap();
        assert!(matches!(results[0].outcome, EstimateOutcome::AboveRange));
        assert_eq!(results[0].q_db, Some(99.0));
    }

    #[test]
    fn unknown_profile_is_a_hard_error() {
        let profiles = ProfileSet::new();
        let table = MeasurementTable::new();
        let plan = single_point_plan("ghost", 1.43);
        assert!(matches!(
            run_sweep(&plan, &table, &profiles),
            Err(Error::UnknownProfile(_))
        ));
    }

    #[test]
    fn median_aggregation_resists_bursts() {
        let profiles = one_profile_set(affine_profile("sl2p1", 0.0));
        let mut table = MeasurementTable::new();
        let load = parse_load("...........").unwrap();
        for q in [11.0, 11.02, 10.98, 11.01, 2.0] {
            table.insert("sl2p1", &load, q); // one burst-error reading
        }
        let plan = ProbePlan {
            configurations: vec![PlanConfig::new("sl2p1", 193.95, 1.43)],
            load_conditions: vec![load],
            repeats: 5,
        };
        let results = run_sweep(&plan, &table, &profiles).unwrap();
        let agg = aggregate_repeats(&results, &profiles).unwrap();
        assert_eq!(agg.len(), 1);
        assert!((agg[0].q_db.unwrap() - 11.0).abs() < 1e-12);
    }

    #[test]
    fn consolidate_takes_minimum() {
        let profiles = one_profile_set(affine_profile("sl2p1", 0.0));
        let mut table = MeasurementTable::new();
        let load = parse_load("...........").unwrap();
        // estimates (q+3)/0.8 − 7.447: 19.2, 19.8, 20.5 dB
        for q in [18.3176, 18.7976, 19.3576] {
            table.insert("sl2p1", &load, q);
        }
        let plan = ProbePlan {
            configurations: vec![PlanConfig::new("sl2p1", 193.95, 1.43)],
            load_conditions: vec![load],
            repeats: 3,
        };
        let results = run_sweep(&plan, &table, &profiles).unwrap();
        let min = consolidate_estimate(&results).unwrap();
        assert!((min - 19.2).abs() < 1e-3, "{min}");
        // never exceeds any individual in-range estimate
        for r in &results {
            assert!(min <= r.outcome.gsnr_est_db().unwrap() + 1e-12);
        }
    }

    #[test]
    fn consolidate_single_result_is_itself() {
        let profiles = one_profile_set(affine_profile("sl2p1", 0.0));
        let mut table = MeasurementTable::new();
        let load = parse_load("...........").unwrap();
        table.insert("sl2p1", &load, 11.0);
        let plan = single_point_plan("sl2p1", 1.43);
        let results = run_sweep(&plan, &table, &profiles).unwrap();
        let est = results[0].outcome.gsnr_est_db().unwrap();
        assert_eq!(consolidate_estimate(&results).unwrap(), est);
    }

    #[test]
    fn consolidate_rejects_all_out_of_range() {
        let profiles = one_profile_set(affine_profile("sl2p1", 0.0));
        let mut table = MeasurementTable::new();
        let load = parse_load("...........").unwrap();
        table.insert("sl2p1", &load, 99.0);
        let plan = single_point_plan("sl2p1", 1.43);
        let results = run_sweep(&plan, &table, &profiles).unwrap();
        assert!(matches!(
            consolidate_estimate(&results),
            Err(Error::NothingToConsolidate)
        ));
    }

    #[test]
    fn consolidate_rejects_mixed_loads() {
        let profiles = one_profile_set(affine_profile("sl2p1", 0.0));
        let mut table = MeasurementTable::new();
        let la = parse_load("...........").unwrap();
        let lb = parse_load(".I...I...I.").unwrap();
        table.insert("sl2p1", &la, 11.0);
        table.insert("sl2p1", &lb, 11.0);
        let plan = ProbePlan {
            configurations: vec![PlanConfig::new("sl2p1", 193.95, 1.43)],
            load_conditions: vec![la, lb],
            repeats: 1,
        };
        let results = run_sweep(&plan, &table, &profiles).unwrap();
        assert!(matches!(
            consolidate_estimate(&results),
            Err(Error::MismatchedConditions(_))
        ));
    }

    fn group_with_estimates(curve_id: &str, estimates: &[f64]) -> ProbeGroup {
        let load = parse_load("...........").unwrap();
        ProbeGroup {
            curve_id: curve_id.into(),
            results: estimates
                .iter()
                .enumerate()
                .map(|(i, &e)| ProbeResult {
                    seq: i,
                    config_index: 0,
                    profile_id: curve_id.into(),
                    load,
                    q_db: Some(0.0),
                    outcome: EstimateOutcome::Estimated(e),
                    provenance: Provenance::TransceiverSpecific,
                })
                .collect(),
        }
    }

    #[test]
    fn error_analysis_arithmetic() {
        let groups = [
            group_with_estimates("a", &[19.10]),
            group_with_estimates("b", &[19.50]),
            group_with_estimates("c", &[20.00]),
            group_with_estimates("d", &[20.48]),
        ];
        let stats = error_analysis(&groups).unwrap();
        assert!((stats.mu_db - 19.77).abs() < 1e-9);
        assert!((stats.max_over_db - 0.71).abs() < 1e-9);
        assert!((stats.max_under_db - 0.67).abs() < 1e-9);
        assert!(stats.sigma_db > 0.0);
    }

    #[test]
    fn error_analysis_identical_estimates() {
        let groups = [
            group_with_estimates("a", &[19.5]),
            group_with_estimates("b", &[19.5]),
        ];
        let stats = error_analysis(&groups).unwrap();
        assert_eq!(stats.max_over_db, 0.0);
        assert_eq!(stats.max_under_db, 0.0);
        assert_eq!(stats.sigma_db, 0.0);
    }

    #[test]
    fn error_analysis_rejects_mismatched_conditions() {
        let mut b = group_with_estimates("b", &[19.5]);
        b.results[0].load = parse_load(".I...I...I.").unwrap();
        let groups = [group_with_estimates("a", &[19.5]), b];
        assert!(matches!(
            error_analysis(&groups),
            Err(Error::MismatchedConditions(_))
        ));
    }
}
