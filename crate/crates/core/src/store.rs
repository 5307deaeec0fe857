//! On-disk formats: profile documents, characterization sample imports,
//! required-GSNR tables, and measurement replays.
//!
//! Profile documents keep the raw (osnr, q) sample list as the canonical
//! data; the curve is re-fitted on every load. Delimited imports are
//! comma-separated with a header row and tolerate blank and `#` comment
//! lines.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::characterization::{
    CharacterizationCurve, CharacterizationSample, Provenance, TransceiverProfile,
};
use crate::error::{Error, Result};
use crate::olssim::LoadCondition;
use crate::probing::{MeasurementTable, ProfileSet};
use crate::snr::{Modulation, SignalSpec};

#[derive(Debug, Serialize, Deserialize)]
struct ProfileDoc {
    id: String,
    modulation: String,
    symbol_rate_gbd: f64,
    signal_bandwidth_ghz: f64,
    provenance: String,
    /// Raw characterization points as (osnr_db, q_db) pairs.
    samples: Vec<[f64; 2]>,
}

/// Render a profile document from its canonical parts.
pub fn profile_document(
    id: &str,
    spec: &SignalSpec,
    provenance: Provenance,
    samples: &[CharacterizationSample],
) -> String {
    let doc = ProfileDoc {
        id: id.to_string(),
        modulation: spec.modulation.as_str().to_string(),
        symbol_rate_gbd: spec.symbol_rate_gbd,
        signal_bandwidth_ghz: spec.signal_bandwidth_ghz,
        provenance: provenance.as_str().to_string(),
        samples: samples.iter().map(|s| [s.osnr_db, s.q_db]).collect(),
    };
    toml::to_string(&doc).expect("profile document always serializes")
}

/// Parse a profile document and re-fit its curve.
pub fn parse_profile_document(text: &str, label: &str) -> Result<TransceiverProfile> {
    let doc: ProfileDoc = toml::from_str(text).map_err(|e| Error::Parse {
        file: label.to_string(),
        line: 0,
        reason: e.to_string(),
    })?;
    let spec = SignalSpec::new(
        Modulation::parse(&doc.modulation)?,
        doc.symbol_rate_gbd,
        doc.signal_bandwidth_ghz,
    )?;
    let samples: Vec<CharacterizationSample> = doc
        .samples
        .iter()
        .map(|[osnr_db, q_db]| CharacterizationSample {
            osnr_db: *osnr_db,
            q_db: *q_db,
        })
        .collect();
    let curve = CharacterizationCurve::fit(&samples)?;
    Ok(TransceiverProfile::new(
        doc.id,
        spec,
        curve,
        Provenance::parse(&doc.provenance)?,
    ))
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn load_profile(path: &Path) -> Result<TransceiverProfile> {
    let text = read_to_string(path)?;
    parse_profile_document(&text, &path.display().to_string())
}

pub fn save_profile(
    path: &Path,
    id: &str,
    spec: &SignalSpec,
    provenance: Provenance,
    samples: &[CharacterizationSample],
) -> Result<()> {
    fs::write(path, profile_document(id, spec, provenance, samples)).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Load every `*.toml` profile document in a directory.
pub fn load_profiles_dir(dir: &Path) -> Result<ProfileSet> {
    let mut set = ProfileSet::new();
    let entries = fs::read_dir(dir).map_err(|e| Error::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    let mut paths: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "toml"))
        .collect();
    paths.sort();
    for path in paths {
        set.insert(load_profile(&path)?);
    }
    Ok(set)
}

/// Non-comment, non-blank lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn split_row(line: &str) -> Vec<&str> {
    line.split(',').map(str::trim).collect()
}

fn parse_f64(field: &str, file: &str, line: usize) -> Result<f64> {
    field.parse::<f64>().map_err(|_| Error::Parse {
        file: file.to_string(),
        line,
        reason: format!("expected a number, got {field:?}"),
    })
}

fn expect_header(fields: &[&str], expected: &[&str], file: &str, line: usize) -> Result<()> {
    let ok = fields.len() == expected.len()
        && fields
            .iter()
            .zip(expected)
            .all(|(f, e)| f.eq_ignore_ascii_case(e));
    if !ok {
        return Err(Error::Parse {
            file: file.to_string(),
            line,
            reason: format!(
                "expected header {:?}, got {:?}",
                expected.join(","),
                fields.join(",")
            ),
        });
    }
    Ok(())
}

/// Parse `osnr_db,q_db` characterization rows with their line numbers
/// (header required, row order free — the fit sorts by OSNR).
pub fn parse_characterization_rows(
    text: &str,
    file: &str,
) -> Result<Vec<(usize, CharacterizationSample)>> {
    let mut rows = data_lines(text);
    let (line, header) = rows.next().ok_or_else(|| Error::Parse {
        file: file.to_string(),
        line: 0,
        reason: "empty file".to_string(),
    })?;
    expect_header(&split_row(header), &["osnr_db", "q_db"], file, line)?;
    let mut samples = Vec::new();
    for (line, row) in rows {
        let fields = split_row(row);
        if fields.len() != 2 {
            return Err(Error::Parse {
                file: file.to_string(),
                line,
                reason: format!("expected 2 fields, got {}", fields.len()),
            });
        }
        samples.push((
            line,
            CharacterizationSample {
                osnr_db: parse_f64(fields[0], file, line)?,
                q_db: parse_f64(fields[1], file, line)?,
            },
        ));
    }
    Ok(samples)
}

/// Like [`parse_characterization_rows`] without the line numbers.
pub fn parse_characterization_csv(text: &str, file: &str) -> Result<Vec<CharacterizationSample>> {
    Ok(parse_characterization_rows(text, file)?
        .into_iter()
        .map(|(_, s)| s)
        .collect())
}

/// Required-GSNR entries per transceiver configuration, from the system
/// specification documentation.
#[derive(Debug, Clone, Default)]
pub struct GsnrReqTable {
    entries: Vec<(Modulation, f64, f64)>, // (modulation, symbol_rate_gbd, gsnr_req_db)
}

impl GsnrReqTable {
    pub fn insert(&mut self, modulation: Modulation, symbol_rate_gbd: f64, gsnr_req_db: f64) {
        self.entries
            .push((modulation, symbol_rate_gbd, gsnr_req_db));
    }

    pub fn lookup(&self, modulation: Modulation, symbol_rate_gbd: f64) -> Result<f64> {
        self.entries
            .iter()
            .find(|(m, r, _)| *m == modulation && (r - symbol_rate_gbd).abs() < 0.01)
            .map(|(_, _, req)| *req)
            .ok_or_else(|| Error::MissingRequirement {
                modulation: modulation.as_str().to_string(),
                symbol_rate_gbd,
            })
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Parse `modulation,symbol_rate_gbd,gsnr_req_db` rows.
pub fn parse_gsnr_req_csv(text: &str, file: &str) -> Result<GsnrReqTable> {
    let mut rows = data_lines(text);
    let (line, header) = rows.next().ok_or_else(|| Error::Parse {
        file: file.to_string(),
        line: 0,
        reason: "empty file".to_string(),
    })?;
    expect_header(
        &split_row(header),
        &["modulation", "symbol_rate_gbd", "gsnr_req_db"],
        file,
        line,
    )?;
    let mut table = GsnrReqTable::default();
    for (line, row) in rows {
        let fields = split_row(row);
        if fields.len() != 3 {
            return Err(Error::Parse {
                file: file.to_string(),
                line,
                reason: format!("expected 3 fields, got {}", fields.len()),
            });
        }
        table.insert(
            Modulation::parse(fields[0])?,
            parse_f64(fields[1], file, line)?,
            parse_f64(fields[2], file, line)?,
        );
    }
    Ok(table)
}

/// Replayed Q readings as a function of power offset, per profile —
/// the import path for depletion verification on live-network captures.
#[derive(Debug, Clone, Default)]
pub struct DepletionReplay {
    // offsets keyed at 1e-4 dB resolution to survive float step math
    rows: std::collections::BTreeMap<(String, i64), f64>,
}

impl DepletionReplay {
    fn key(offset_db: f64) -> i64 {
        (offset_db * 1e4).round() as i64
    }

    pub fn insert(&mut self, profile_id: &str, power_offset_db: f64, q_db: f64) {
        self.rows
            .insert((profile_id.to_string(), Self::key(power_offset_db)), q_db);
    }

    pub fn q_at(&self, profile_id: &str, power_offset_db: f64) -> Result<f64> {
        self.rows
            .get(&(profile_id.to_string(), Self::key(power_offset_db)))
            .copied()
            .ok_or_else(|| {
                Error::MissingMeasurement(format!(
                    "profile {profile_id} power offset {power_offset_db:+.1} dB"
                ))
            })
    }

    pub fn covers(&self, profile_id: &str) -> bool {
        self.rows.keys().any(|(id, _)| id == profile_id)
    }
}

/// Parse `profile_id,power_offset_db,q_db` depletion-replay rows.
pub fn parse_depletion_replay_csv(text: &str, file: &str) -> Result<DepletionReplay> {
    let mut rows = data_lines(text);
    let (line, header) = rows.next().ok_or_else(|| Error::Parse {
        file: file.to_string(),
        line: 0,
        reason: "empty file".to_string(),
    })?;
    expect_header(
        &split_row(header),
        &["profile_id", "power_offset_db", "q_db"],
        file,
        line,
    )?;
    let mut replay = DepletionReplay::default();
    for (line, row) in rows {
        let fields = split_row(row);
        if fields.len() != 3 {
            return Err(Error::Parse {
                file: file.to_string(),
                line,
                reason: format!("expected 3 fields, got {}", fields.len()),
            });
        }
        replay.insert(
            fields[0],
            parse_f64(fields[1], file, line)?,
            parse_f64(fields[2], file, line)?,
        );
    }
    Ok(replay)
}

/// Parse `profile_id,load_notation,q_db` measurement rows — the
/// live-network replay path. Repeated (profile, load) rows become
/// successive repeats.
pub fn parse_measurements_csv(text: &str, file: &str) -> Result<MeasurementTable> {
    let mut rows = data_lines(text);
    let (line, header) = rows.next().ok_or_else(|| Error::Parse {
        file: file.to_string(),
        line: 0,
        reason: "empty file".to_string(),
    })?;
    expect_header(
        &split_row(header),
        &["profile_id", "load_notation", "q_db"],
        file,
        line,
    )?;
    let mut table = MeasurementTable::new();
    for (line, row) in rows {
        let fields = split_row(row);
        if fields.len() != 3 {
            return Err(Error::Parse {
                file: file.to_string(),
                line,
                reason: format!("expected 3 fields, got {}", fields.len()),
            });
        }
        let load = LoadCondition::parse_canonical(fields[1]).map_err(|e| Error::Parse {
            file: file.to_string(),
            line,
            reason: e.to_string(),
        })?;
        table.insert(fields[0], &load, parse_f64(fields[2], file, line)?);
    }
    Ok(table)
}
