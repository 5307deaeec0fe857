use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use specprobe::characterization::{
    CharacterizationCurve, CharacterizationSample, Provenance, MONOTONE_TOLERANCE_DB,
};
use specprobe::snr::{BandwidthTable, Modulation, SignalSpec};
use specprobe::store::{parse_characterization_rows, read_to_string, save_profile};
use specprobe::Error;

use crate::Cli;

#[allow(clippy::too_many_arguments)]
pub fn run(
    cli: &Cli,
    samples_path: &Path,
    id: &str,
    modulation: &str,
    symbol_rate: f64,
    bandwidth: Option<f64>,
    provenance: &str,
) -> Result<()> {
    let label = samples_path.display().to_string();
    let text = read_to_string(samples_path)?;
    let rows = parse_characterization_rows(&text, &label)?;
    let samples: Vec<CharacterizationSample> = rows.iter().map(|(_, s)| *s).collect();

    let modulation = Modulation::parse(modulation)?;
    let bandwidth =
        bandwidth.unwrap_or_else(|| BandwidthTable::default().bandwidth_for(symbol_rate));
    let spec = SignalSpec::new(modulation, symbol_rate, bandwidth)?;
    let provenance = Provenance::parse(provenance)?;

    let curve = CharacterizationCurve::fit(&samples).map_err(|e| {
        if matches!(e, Error::NotMonotone(_)) {
            report_offending_rows(&rows);
        }
        e
    })?;

    let dir = cli.profiles.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(format!("{id}.toml"));
    save_profile(&path, id, &spec, provenance, &samples)?;

    let (lo, hi) = curve.domain();
    let (q_lo, q_hi) = curve.q_range();
    let mid = 0.5 * (lo + hi);
    let probe_points = [lo + 0.02 * (hi - lo), mid, hi - 0.02 * (hi - lo)];
    let sens: Vec<String> = probe_points
        .iter()
        .map(|&o| {
            curve
                .sensitivity(o)
                .map(|s| format!("{s:.3}"))
                .unwrap_or_else(|_| "-".into())
        })
        .collect();
    println!("profile {id} written to {}", path.display());
    println!("domain [{lo:.2}, {hi:.2}] dB OSNR, Q range [{q_lo:.2}, {q_hi:.2}] dB");
    println!(
        "sensitivity dQ/dOSNR: {} (low) {} (mid) {} (high)",
        sens[0], sens[1], sens[2]
    );
    Ok(())
}

/// Name the sample rows whose Q ordering breaks the capture.
fn report_offending_rows(rows: &[(usize, CharacterizationSample)]) {
    let mut sorted: Vec<&(usize, CharacterizationSample)> = rows.iter().collect();
    sorted.sort_by(|a, b| a.1.osnr_db.total_cmp(&b.1.osnr_db));
    for pair in sorted.windows(2) {
        let (line_a, a) = pair[0];
        let (line_b, b) = pair[1];
        let drop = a.q_db - b.q_db;
        if drop > MONOTONE_TOLERANCE_DB {
            eprintln!(
                "offending rows: line {line_a} (osnr {:.2}, q {:.2}) -> line {line_b} (osnr {:.2}, q {:.2}): Q drops {drop:.2} dB",
                a.osnr_db, a.q_db, b.osnr_db, b.q_db
            );
        }
    }
}
