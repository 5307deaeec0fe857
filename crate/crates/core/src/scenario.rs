//! Scenario manifests: a TOML file referencing the link, media-channel
//! layout, probe plan, and optional import tables, plus the seed and
//! run parameters. Referenced paths resolve relative to the manifest.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::margins::{DEFAULT_POWER_STEP_DB, DEFAULT_Q_THRESHOLD_DB};
use crate::olssim::{
    Amplifier, Carrier, CarrierKind, LoadCondition, MediaChannel, NliParams, OlsLink, Span,
};
use crate::probing::{MeasurementTable, PlanConfig, ProbePlan, ProfileSet};
use crate::snr::{Modulation, SignalSpec};
use crate::store::{
    parse_depletion_replay_csv, parse_gsnr_req_csv, parse_measurements_csv, read_to_string,
    DepletionReplay, GsnrReqTable,
};

/// Margin window treated as "close to zero" when selecting depletion
/// verification candidates.
pub const DEFAULT_NEAR_ZERO_MARGIN_DB: f64 = 1.5;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    seed: u64,
    #[serde(default)]
    noise_sigma_db: f64,
    link: String,
    media_channel: String,
    plan: String,
    gsnr_req: Option<String>,
    measurements: Option<String>,
    measurements_neighbors: Option<String>,
    depletion_replay: Option<String>,
    reference_load: Option<String>,
    out_dir: Option<String>,
    profiles_dir: Option<String>,
    q_threshold_db: Option<f64>,
    power_step_db: Option<f64>,
    near_zero_margin_db: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkDoc {
    pre_loss_db: f64,
    psd_target_dbm_per_50ghz: f64,
    loopback: bool,
    spans: Vec<Span>,
    amplifiers: Vec<Amplifier>,
    #[serde(default)]
    nli: NliDoc,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NliDoc {
    #[serde(default)]
    eta: f64,
    #[serde(default)]
    alpha: f64,
    #[serde(default)]
    beta: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct McDoc {
    center_thz: f64,
    width_ghz: f64,
    carriers: Vec<CarrierDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CarrierDoc {
    center_thz: f64,
    kind: String,
    profile: Option<String>,
    /// Shaped bandwidth for dummy/control carriers without a profile.
    bandwidth_ghz: Option<f64>,
    tx_power_dbm: Option<f64>,
    #[serde(default = "default_true")]
    enabled: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanDoc {
    #[serde(default = "default_repeats")]
    repeats: usize,
    load_conditions: Vec<String>,
    configurations: Vec<ConfigDoc>,
}

fn default_repeats() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDoc {
    profile: String,
    /// Curve of the physical unit when probing with a readily available
    /// (non-unit-specific) estimation curve.
    unit_profile: Option<String>,
    center_thz: f64,
    /// Omitted: derived from the PSD target and the profile's symbol rate.
    tx_power_dbm: Option<f64>,
}

/// Plan entry before launch powers are resolved against loaded profiles.
#[derive(Debug, Clone)]
pub struct PlanTemplateConfig {
    pub profile_id: String,
    pub unit_profile_id: Option<String>,
    pub center_thz: f64,
    pub tx_power_dbm: Option<f64>,
}

/// A fully loaded scenario.
#[derive(Debug)]
pub struct Scenario {
    pub seed: u64,
    pub noise_sigma_db: f64,
    pub link: OlsLink,
    pub media_channel_template: McTemplate,
    pub plan_configs: Vec<PlanTemplateConfig>,
    pub load_conditions: Vec<LoadCondition>,
    pub repeats: usize,
    pub reference_load: LoadCondition,
    pub gsnr_req: Option<GsnrReqTable>,
    pub measurements: Option<MeasurementTable>,
    /// Replayed readings with direct neighbors enabled, for the
    /// neighbor-margin workflow on imported data.
    pub measurements_neighbors: Option<MeasurementTable>,
    /// Replayed Q-vs-power-offset readings for depletion verification.
    pub depletion_replay: Option<DepletionReplay>,
    pub q_threshold_db: f64,
    pub power_step_db: f64,
    pub near_zero_margin_db: f64,
    pub out_dir: Option<PathBuf>,
    pub profiles_dir: Option<PathBuf>,
    /// (file name, FNV-1a digest) of every input read, for output headers.
    pub input_digests: Vec<(String, u64)>,
}

/// Media-channel layout before probe carriers pick up profile specs.
#[derive(Debug, Clone)]
pub struct McTemplate {
    pub center_thz: f64,
    pub width_ghz: f64,
    carriers: Vec<CarrierTemplate>,
}

#[derive(Debug, Clone)]
struct CarrierTemplate {
    center_thz: f64,
    kind: CarrierKind,
    profile_id: Option<String>,
    bandwidth_ghz: Option<f64>,
    tx_power_dbm: Option<f64>,
    enabled: bool,
}

impl McTemplate {
    /// Materialize the media channel, resolving probe carriers against
    /// their profiles and defaulting launch powers to the PSD target.
    pub fn resolve(
        &self,
        profiles: &ProfileSet,
        psd_target_dbm_per_50ghz: f64,
    ) -> Result<MediaChannel> {
        let mut carriers = Vec::with_capacity(self.carriers.len());
        for c in &self.carriers {
            let spec = match (&c.profile_id, c.bandwidth_ghz) {
                (Some(id), _) => profiles.get(id)?.signal_spec,
                (None, Some(bw)) => SignalSpec::new(Modulation::DpQpsk, bw, bw)?,
                (None, None) => {
                    return Err(Error::InvalidMediaChannel(format!(
                        "carrier at {} THz needs a profile or a bandwidth_ghz",
                        c.center_thz
                    )))
                }
            };
            let tx_power_dbm = c
                .tx_power_dbm
                .unwrap_or_else(|| spec.launch_power_for_psd(psd_target_dbm_per_50ghz));
            carriers.push(Carrier {
                center_thz: c.center_thz,
                spec,
                tx_power_dbm,
                kind: c.kind,
                enabled: c.enabled,
            });
        }
        let mc = MediaChannel {
            center_thz: self.center_thz,
            width_ghz: self.width_ghz,
            carriers,
        };
        mc.validate()?;
        Ok(mc)
    }
}

fn parse_kind(s: &str) -> Result<CarrierKind> {
    match s {
        "probe" => Ok(CarrierKind::Probe),
        "ase-dummy" => Ok(CarrierKind::AseDummy),
        "control" => Ok(CarrierKind::Control),
        other => Err(Error::InvalidMediaChannel(format!(
            "unknown carrier kind {other:?}"
        ))),
    }
}

/// FNV-1a 64-bit digest, used to stamp outputs with input fingerprints.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

impl Scenario {
    /// Resolve plan launch powers against loaded profiles; omitted powers
    /// default to the PSD-derived target for the profile's symbol rate.
    pub fn probe_plan(&self, profiles: &ProfileSet) -> Result<ProbePlan> {
        let psd = self.link.psd_target_dbm_per_50ghz;
        let configurations = self
            .plan_configs
            .iter()
            .map(|c| {
                let profile = profiles.get(&c.profile_id)?;
                Ok(PlanConfig {
                    profile_id: c.profile_id.clone(),
                    unit_profile_id: c.unit_profile_id.clone(),
                    center_thz: c.center_thz,
                    tx_power_dbm: c
                        .tx_power_dbm
                        .unwrap_or_else(|| profile.signal_spec.launch_power_for_psd(psd)),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let plan = ProbePlan {
            configurations,
            load_conditions: self.load_conditions.clone(),
            repeats: self.repeats,
        };
        plan.validate()?;
        Ok(plan)
    }
}

fn toml_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Parse {
        file: path.display().to_string(),
        line: 0,
        reason: e.to_string(),
    }
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Load a scenario manifest and everything it references.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut digests = Vec::new();
    let mut read = |p: &Path| -> Result<String> {
        let text = read_to_string(p)?;
        digests.push((file_name(p), fnv1a64(text.as_bytes())));
        Ok(text)
    };

    let doc: ScenarioDoc = toml::from_str(&read(path)?).map_err(|e| toml_error(path, e))?;

    let link_path = base.join(&doc.link);
    let link_doc: LinkDoc =
        toml::from_str(&read(&link_path)?).map_err(|e| toml_error(&link_path, e))?;
    let link = OlsLink {
        spans: link_doc.spans,
        amplifiers: link_doc.amplifiers,
        pre_loss_db: link_doc.pre_loss_db,
        psd_target_dbm_per_50ghz: link_doc.psd_target_dbm_per_50ghz,
        loopback: link_doc.loopback,
        nli: NliParams {
            eta: link_doc.nli.eta,
            alpha: link_doc.nli.alpha,
            beta: link_doc.nli.beta,
        },
    };
    link.validate()?;

    let mc_path = base.join(&doc.media_channel);
    let mc_doc: McDoc = toml::from_str(&read(&mc_path)?).map_err(|e| toml_error(&mc_path, e))?;
    let media_channel_template = McTemplate {
        center_thz: mc_doc.center_thz,
        width_ghz: mc_doc.width_ghz,
        carriers: mc_doc
            .carriers
            .into_iter()
            .map(|c| {
                Ok(CarrierTemplate {
                    center_thz: c.center_thz,
                    kind: parse_kind(&c.kind)?,
                    profile_id: c.profile,
                    bandwidth_ghz: c.bandwidth_ghz,
                    tx_power_dbm: c.tx_power_dbm,
                    enabled: c.enabled,
                })
            })
            .collect::<Result<Vec<_>>>()?,
    };

    let plan_path = base.join(&doc.plan);
    let plan_doc: PlanDoc =
        toml::from_str(&read(&plan_path)?).map_err(|e| toml_error(&plan_path, e))?;
    let load_conditions = plan_doc
        .load_conditions
        .iter()
        .map(|s| LoadCondition::parse_canonical(s))
        .collect::<Result<Vec<_>>>()?;
    let plan_configs = plan_doc
        .configurations
        .into_iter()
        .map(|c| PlanTemplateConfig {
            profile_id: c.profile,
            unit_profile_id: c.unit_profile,
            center_thz: c.center_thz,
            tx_power_dbm: c.tx_power_dbm,
        })
        .collect();

    let reference_load = match &doc.reference_load {
        Some(s) => LoadCondition::parse_canonical(s)?,
        None => *load_conditions
            .first()
            .ok_or_else(|| Error::Scenario("plan has no load conditions".into()))?,
    };

    let gsnr_req = doc
        .gsnr_req
        .as_ref()
        .map(|rel| {
            let p = base.join(rel);
            parse_gsnr_req_csv(&read(&p)?, &file_name(&p))
        })
        .transpose()?;
    let measurements = doc
        .measurements
        .as_ref()
        .map(|rel| {
            let p = base.join(rel);
            parse_measurements_csv(&read(&p)?, &file_name(&p))
        })
        .transpose()?;
    let measurements_neighbors = doc
        .measurements_neighbors
        .as_ref()
        .map(|rel| {
            let p = base.join(rel);
            parse_measurements_csv(&read(&p)?, &file_name(&p))
        })
        .transpose()?;
    let depletion_replay = doc
        .depletion_replay
        .as_ref()
        .map(|rel| {
            let p = base.join(rel);
            parse_depletion_replay_csv(&read(&p)?, &file_name(&p))
        })
        .transpose()?;

    Ok(Scenario {
        seed: doc.seed,
        noise_sigma_db: doc.noise_sigma_db,
        link,
        media_channel_template,
        plan_configs,
        load_conditions,
        repeats: plan_doc.repeats,
        reference_load,
        gsnr_req,
        measurements,
        measurements_neighbors,
        depletion_replay,
        q_threshold_db: doc.q_threshold_db.unwrap_or(DEFAULT_Q_THRESHOLD_DB),
        power_step_db: doc.power_step_db.unwrap_or(DEFAULT_POWER_STEP_DB),
        near_zero_margin_db: doc
            .near_zero_margin_db
            .unwrap_or(DEFAULT_NEAR_ZERO_MARGIN_DB),
        out_dir: doc.out_dir.map(|d| base.join(d)),
        profiles_dir: doc.profiles_dir.map(|d| base.join(d)),
        input_digests: digests,
    })
}
