use anyhow::{anyhow, Result};
use specprobe::margins::{build_report, eol_margin, neighbor_margin, EolMargins, NeighborMargins};
use specprobe::probing::{aggregate_repeats, consolidate_estimate, ProbeResult};
use specprobe::report::{
    eol_report, margin_report_document, margin_table, neighbor_report, MarginRow, OutputFormat,
};

use crate::commands::{sweep_config_sim, sweep_config_table};
use crate::context::RunContext;

struct ConfigMargins {
    index: usize,
    profile_id: String,
    modulation: String,
    symbol_rate_gbd: f64,
    gsnr_req_db: f64,
    neighbor: NeighborMargins,
    eol: EolMargins,
    standalone: Vec<ProbeResult>,
    with_neighbors: Vec<ProbeResult>,
}

pub fn run(ctx: &RunContext) -> Result<()> {
    let plan = ctx.scenario.probe_plan(&ctx.profiles)?;
    let req_table = ctx
        .scenario
        .gsnr_req
        .as_ref()
        .ok_or_else(|| anyhow!("margins needs a gsnr_req table in the scenario"))?;
    let reference = ctx.scenario.reference_load;
    let loads = &ctx.scenario.load_conditions;

    let table_backed = ctx.scenario.measurements.is_some();
    let resolved_mc = if table_backed {
        None
    } else {
        Some(
            ctx.scenario
                .media_channel_template
                .resolve(&ctx.profiles, ctx.scenario.link.psd_target_dbm_per_50ghz)?,
        )
    };

    let mut per_config = Vec::new();
    let mut reference_results: Vec<ProbeResult> = Vec::new();
    for (index, config) in plan.configurations.iter().enumerate() {
        let profile = ctx.profiles.get(&config.profile_id)?;
        let gsnr_req_db = req_table.lookup(
            profile.signal_spec.modulation,
            profile.signal_spec.symbol_rate_gbd,
        )?;

        let (standalone_raw, with_raw) = if table_backed {
            let standalone = ctx.scenario.measurements.as_ref().unwrap();
            let with = ctx
                .scenario
                .measurements_neighbors
                .as_ref()
                .ok_or_else(|| {
                    anyhow!("margins over imported measurements needs measurements_neighbors")
                })?;
            (
                sweep_config_table(ctx, config, loads, standalone)?,
                sweep_config_table(ctx, config, loads, with)?,
            )
        } else {
            let mc = resolved_mc.as_ref().unwrap();
            let mc_alone = mc.with_neighbors(config.center_thz, false)?;
            let mc_with = mc.with_neighbors(config.center_thz, true)?;
            (
                sweep_config_sim(ctx, config, loads, &mc_alone)?,
                sweep_config_sim(ctx, config, loads, &mc_with)?,
            )
        };
        let standalone = aggregate_repeats(&standalone_raw, &ctx.profiles)?;
        let with_neighbors = aggregate_repeats(&with_raw, &ctx.profiles)?;

        let neighbor = neighbor_margin(&standalone, &with_neighbors)?;
        let eol = eol_margin(&standalone, &reference)?;

        if let Some(at_ref) = standalone.iter().find(|r| r.load == reference) {
            reference_results.push(at_ref.clone());
        }
        per_config.push(ConfigMargins {
            index,
            profile_id: config.profile_id.clone(),
            modulation: profile.signal_spec.modulation.as_str().to_string(),
            symbol_rate_gbd: profile.signal_spec.symbol_rate_gbd,
            gsnr_req_db,
            neighbor,
            eol,
            standalone,
            with_neighbors,
        });
    }

    // overestimation-avoidance: the link estimate is the lowest in-range
    // estimate over all configurations at the reference load
    let gsnr_est_link = consolidate_estimate(&reference_results)?;

    let rows: Vec<MarginRow> = per_config
        .iter()
        .map(|c| MarginRow {
            config_index: c.index,
            profile_id: c.profile_id.clone(),
            modulation: c.modulation.clone(),
            symbol_rate_gbd: c.symbol_rate_gbd,
            report: build_report(
                gsnr_est_link,
                c.gsnr_req_db,
                c.neighbor.worst_case_db,
                c.eol.max_db,
                None,
            ),
        })
        .collect();

    // committed allocation covers the worst configuration
    let neighbor_committed = per_config
        .iter()
        .map(|c| c.neighbor.worst_case_db)
        .fold(0.0, f64::max);
    let eol_committed = per_config.iter().map(|c| c.eol.max_db).fold(0.0, f64::max);
    let headline = build_report(
        gsnr_est_link,
        per_config[0].gsnr_req_db,
        neighbor_committed,
        eol_committed,
        None,
    );

    // per-load tables for the primary configuration
    let first = &per_config[0];
    let alone_by_load = estimates_sorted_by_load(&first.standalone);
    let with_by_load = estimates_sorted_by_load(&first.with_neighbors);
    ctx.write_output(
        "neighbor_margins.csv",
        &neighbor_report(&first.neighbor, &alone_by_load, &with_by_load, &ctx.meta),
    )?;
    ctx.write_output(
        "eol_margins.csv",
        &eol_report(&first.eol, &alone_by_load, &ctx.meta),
    )?;
    let table_text = margin_table(&rows, &ctx.meta);
    ctx.write_output("margin_table.csv", &table_text)?;
    let report_path = ctx.write_output(
        "margin_report.toml",
        &margin_report_document(&headline, &ctx.meta),
    )?;

    match ctx.format {
        OutputFormat::Delimited => print!("{table_text}"),
        OutputFormat::Text => {
            println!("gsnr_est_link        {gsnr_est_link:.2} dB");
            println!(
                "neighbor margin      {:.2} dB (worst over configurations)",
                neighbor_committed
            );
            println!(
                "eol margin           {:.2} dB (worst over configurations)",
                eol_committed
            );
            println!(
                "probing allowance    {:.2} dB",
                headline.probing_allowance_db
            );
            println!(
                "total recommended    {:.2} dB",
                headline.total_recommended_db()
            );
            for c in &per_config {
                println!(
                    "config {} {:>18}: margin {:+.2} dB (req {:.2}), neighbor {:.2}, eol {:.2}",
                    c.index,
                    c.profile_id,
                    gsnr_est_link - c.gsnr_req_db,
                    c.gsnr_req_db,
                    c.neighbor.worst_case_db,
                    c.eol.max_db
                );
            }
        }
    }
    eprintln!("margin report written to {}", report_path.display());
    Ok(())
}

/// (notation, estimate) pairs in notation order, matching the margin
/// structs' per-load ordering.
fn estimates_sorted_by_load(results: &[ProbeResult]) -> Vec<(String, f64)> {
    let mut rows: Vec<(String, f64)> = results
        .iter()
        .filter_map(|r| r.outcome.gsnr_est_db().map(|e| (r.load.notation(), e)))
        .collect();
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    rows.dedup_by(|a, b| {
        if a.0 == b.0 {
            b.1 = b.1.min(a.1);
            true
        } else {
            false
        }
    });
    rows
}
