//! Report emission: every table is delimited text with a header row and
//! `#` metadata lines carrying the toolkit version, seed, and input
//! digests. Output is a pure function of its inputs, so re-running a
//! command with the same inputs and seed reproduces files byte for byte.

use serde::Serialize;

use crate::margins::{DepletionResult, EolMargins, MarginReport, NeighborMargins};
use crate::olssim::LinkTruth;
use crate::probing::{ErrorStats, ProbeResult};
use crate::snr::OsaSample;

/// Output rendering for stdout summaries; emitted files are always
/// delimited.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Text,
    Delimited,
}

/// Metadata stamped into every output file.
#[derive(Debug, Clone)]
pub struct ReportMeta {
    pub seed: u64,
    pub digests: Vec<(String, u64)>,
}

impl ReportMeta {
    pub fn header(&self) -> String {
        let inputs = self
            .digests
            .iter()
            .map(|(name, digest)| format!("{name}:{digest:016x}"))
            .collect::<Vec<_>>()
            .join(" ");
        format!(
            "# specprobe {}\n# seed={}\n# inputs={}\n",
            env!("CARGO_PKG_VERSION"),
            self.seed,
            inputs
        )
    }
}

fn db(v: f64) -> String {
    format!("{v:.6}")
}

fn opt_db(v: Option<f64>) -> String {
    v.map(db).unwrap_or_else(|| "inf".to_string())
}

/// Full sweep table, one row per plan point.
pub fn sweep_report(results: &[ProbeResult], meta: &ReportMeta) -> String {
    let mut out = meta.header();
    out.push_str("seq,config_index,profile_id,provenance,load_notation,q_db,gsnr_est_db,flag\n");
    for r in results {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.seq,
            r.config_index,
            r.profile_id,
            r.provenance.as_str(),
            r.load.notation(),
            opt_db(r.q_db),
            opt_db(r.outcome.gsnr_est_db()),
            r.outcome.flag()
        ));
    }
    out
}

/// Raw Q readings in the measurement-import format, so a sweep can be
/// replayed through the import path.
pub fn q_readings_report(results: &[ProbeResult], meta: &ReportMeta) -> String {
    let mut out = meta.header();
    out.push_str("profile_id,load_notation,q_db\n");
    for r in results {
        if let Some(q) = r.q_db {
            out.push_str(&format!(
                "{},{},{}\n",
                r.profile_id,
                r.load.notation(),
                db(q)
            ));
        }
    }
    out
}

/// Candidate-curve estimation-error statistics, one row per group of
/// same-format curves.
pub fn error_stats_report(rows: &[(String, ErrorStats)], meta: &ReportMeta) -> String {
    let mut out = meta.header();
    out.push_str("group,mu_db,sigma_db,max_over_db,max_under_db,spread_db\n");
    for (group, stats) in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            group,
            db(stats.mu_db),
            db(stats.sigma_db),
            db(stats.max_over_db),
            db(stats.max_under_db),
            db(stats.spread_db())
        ));
    }
    out
}

/// Per-load neighbor-impact table. Estimates are the consolidated
/// (lowest) per-load values from each sweep.
pub fn neighbor_report(
    margins: &NeighborMargins,
    standalone: &[(String, f64)],
    with_neighbors: &[(String, f64)],
    meta: &ReportMeta,
) -> String {
    let mut out = meta.header();
    out.push_str("load_notation,gsnr_standalone_db,gsnr_neighbors_db,delta_db\n");
    for ((load, delta), (alone, paired)) in margins
        .per_load
        .iter()
        .zip(standalone.iter().zip(with_neighbors))
    {
        debug_assert_eq!(&load.notation(), &alone.0);
        out.push_str(&format!(
            "{},{},{},{}\n",
            load.notation(),
            db(alone.1),
            db(paired.1),
            db(*delta)
        ));
    }
    out.push_str(&format!("# worst_case_db={}\n", db(margins.worst_case_db)));
    out
}

/// Per-load end-of-life margin table.
pub fn eol_report(
    margins: &EolMargins,
    per_load_gsnr: &[(String, f64)],
    meta: &ReportMeta,
) -> String {
    let mut out = meta.header();
    out.push_str("load_notation,gsnr_db,eol_margin_db\n");
    for ((load, margin), (_, gsnr)) in margins.per_load.iter().zip(per_load_gsnr) {
        out.push_str(&format!(
            "{},{},{}\n",
            load.notation(),
            db(*gsnr),
            db(*margin)
        ));
    }
    out.push_str(&format!(
        "# at_reference_db={} max_db={} worst_load={}\n",
        db(margins.at_reference_db),
        db(margins.max_db),
        margins.worst_load.notation()
    ));
    out
}

/// One margin-report row per probed configuration.
#[derive(Debug, Clone)]
pub struct MarginRow {
    pub config_index: usize,
    pub profile_id: String,
    pub modulation: String,
    pub symbol_rate_gbd: f64,
    pub report: MarginReport,
}

pub fn margin_table(rows: &[MarginRow], meta: &ReportMeta) -> String {
    let mut out = meta.header();
    out.push_str(
        "config_index,profile_id,modulation,symbol_rate_gbd,gsnr_est_link_db,gsnr_req_db,\
         implementation_margin_db,neighbor_margin_db,eol_margin_db,probing_allowance_db,total_recommended_db\n",
    );
    for row in rows {
        let r = &row.report;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            row.config_index,
            row.profile_id,
            row.modulation,
            row.symbol_rate_gbd,
            db(r.gsnr_est_link_db),
            db(r.gsnr_req_db),
            db(r.implementation_margin_db),
            db(r.neighbor_margin_db),
            db(r.eol_margin_db),
            db(r.probing_allowance_db),
            db(r.total_recommended_db())
        ));
    }
    out
}

#[derive(Serialize)]
struct MarginReportDoc {
    gsnr_est_link_db: f64,
    gsnr_req_db: f64,
    implementation_margin_db: f64,
    neighbor_margin_db: f64,
    eol_margin_db: f64,
    probing_allowance_db: f64,
    total_recommended_db: f64,
}

/// Structured-text rendering of one margin report.
pub fn margin_report_document(report: &MarginReport, meta: &ReportMeta) -> String {
    let doc = MarginReportDoc {
        gsnr_est_link_db: report.gsnr_est_link_db,
        gsnr_req_db: report.gsnr_req_db,
        implementation_margin_db: report.implementation_margin_db,
        neighbor_margin_db: report.neighbor_margin_db,
        eol_margin_db: report.eol_margin_db,
        probing_allowance_db: report.probing_allowance_db,
        total_recommended_db: report.total_recommended_db(),
    };
    format!(
        "{}{}",
        meta.header(),
        toml::to_string(&doc).expect("margin report serializes")
    )
}

/// Depletion verification rows, one per tested configuration.
pub fn depletion_report(rows: &[(usize, String, DepletionResult)], meta: &ReportMeta) -> String {
    let mut out = meta.header();
    out.push_str(
        "config_index,profile_id,predicted_margin_db,direction,power_delta_db,margin_error_db,\
         start_power_dbm,threshold_power_dbm\n",
    );
    for (config_index, profile_id, r) in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            config_index,
            profile_id,
            db(r.predicted_margin_db),
            r.direction.as_str(),
            db(r.power_delta_db),
            db(r.margin_error_db),
            db(r.start_power_dbm),
            db(r.threshold_power_dbm)
        ));
    }
    out
}

/// Ground-truth dump rows.
pub fn link_truth_report(rows: &[(usize, String, String, LinkTruth)], meta: &ReportMeta) -> String {
    let mut out = meta.header();
    out.push_str("config_index,profile_id,load_notation,osnr_ase_db,osnr_nli_db,gosnr_db,gsnr_db,rx_power_dbm\n");
    for (config_index, profile_id, load, t) in rows {
        let rx = t
            .received_power_dbm
            .iter()
            .map(|(f, p)| format!("{f:.3}:{p:.3}"))
            .collect::<Vec<_>>()
            .join(";");
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            config_index,
            profile_id,
            load,
            db(t.osnr_ase_db),
            opt_db(t.osnr_nli_db),
            db(t.gosnr_db),
            db(t.gsnr_db),
            rx
        ));
    }
    out
}

/// Synthetic OSA capture rows.
pub fn osa_report(rows: &[(usize, String, String, OsaSample)], meta: &ReportMeta) -> String {
    let mut out = meta.header();
    out.push_str("config_index,profile_id,load_notation,center_thz,p_tot_mw,n_ref_mw\n");
    for (config_index, profile_id, load, s) in rows {
        out.push_str(&format!(
            "{},{},{},{:.4},{:.9e},{:.9e}\n",
            config_index, profile_id, load, s.center_frequency_thz, s.p_tot_mw, s.n_ref_mw
        ));
    }
    out
}
