use anyhow::{anyhow, Result};
use specprobe::margins::{deplete_margin, implementation_margin, simulator_probe, DepletionResult};
use specprobe::probing::aggregate_repeats;
use specprobe::report::{depletion_report, OutputFormat};
use specprobe::Error;

use crate::commands::{sweep_config_sim, sweep_config_table};
use crate::context::RunContext;

pub fn run(ctx: &RunContext) -> Result<()> {
    let plan = ctx.scenario.probe_plan(&ctx.profiles)?;
    let req_table = ctx
        .scenario
        .gsnr_req
        .as_ref()
        .ok_or_else(|| anyhow!("deplete needs a gsnr_req table in the scenario"))?;
    let reference = ctx.scenario.reference_load;
    let near_zero = ctx.scenario.near_zero_margin_db;
    let threshold = ctx.scenario.q_threshold_db;
    let step = ctx.scenario.power_step_db;

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

    let mut rows: Vec<(usize, String, DepletionResult)> = Vec::new();
    let mut notes: Vec<String> = Vec::new();
    for (index, config) in plan.configurations.iter().enumerate() {
        let profile = ctx.profiles.get(&config.profile_id)?;
        let gsnr_req = req_table.lookup(
            profile.signal_spec.modulation,
            profile.signal_spec.symbol_rate_gbd,
        )?;

        // estimate the link with this configuration at the reference load
        let raw = if table_backed {
            sweep_config_table(
                ctx,
                config,
                &[reference],
                ctx.scenario.measurements.as_ref().unwrap(),
            )?
        } else {
            sweep_config_sim(ctx, config, &[reference], resolved_mc.as_ref().unwrap())?
        };
        let agg = aggregate_repeats(&raw, &ctx.profiles)?;
        let est = match agg.iter().filter_map(|r| r.outcome.gsnr_est_db()).next() {
            Some(est) => est,
            None => {
                notes.push(format!(
                    "config {index} {}: estimate out of range, skipped",
                    config.profile_id
                ));
                continue;
            }
        };
        let margin = implementation_margin(est, gsnr_req);
        if margin.abs() > near_zero {
            notes.push(format!(
                "config {index} {}: margin {margin:+.2} dB outside the ±{near_zero:.1} dB verification window, skipped",
                config.profile_id
            ));
            continue;
        }

        let outcome = if let Some(replay) = ctx
            .scenario
            .depletion_replay
            .as_ref()
            .filter(|r| r.covers(&config.profile_id))
        {
            let probe = |offset: f64| replay.q_at(&config.profile_id, offset);
            deplete_margin(config.tx_power_dbm, probe, margin, threshold, step)
        } else if let Some(mc) = resolved_mc.as_ref() {
            let probe = simulator_probe(
                &ctx.scenario.link,
                mc,
                &reference,
                config.center_thz,
                profile,
                config.tx_power_dbm,
            );
            deplete_margin(config.tx_power_dbm, probe, margin, threshold, step)
        } else {
            Err(Error::MissingMeasurement(format!(
                "no depletion replay rows for profile {}",
                config.profile_id
            )))
        };

        match outcome {
            Ok(result) => rows.push((index, config.profile_id.clone(), result)),
            Err(e @ (Error::ThresholdUnreachable { .. } | Error::MissingMeasurement(_))) => {
                notes.push(format!("config {index} {}: {e}", config.profile_id));
            }
            Err(e) => return Err(e.into()),
        }
    }

    if rows.is_empty() {
        return Err(anyhow!(
            "no configuration produced a depletion result ({} skipped)",
            notes.len()
        ));
    }

    let mut text = depletion_report(&rows, &ctx.meta);
    for note in &notes {
        text.push_str(&format!("# {note}\n"));
    }
    let path = ctx.write_output("depletion.csv", &text)?;

    match ctx.format {
        OutputFormat::Delimited => print!("{text}"),
        OutputFormat::Text => {
            for (index, profile_id, r) in &rows {
                let arrow = match r.direction {
                    specprobe::margins::AdjustDirection::Increase => "up",
                    specprobe::margins::AdjustDirection::Decrease => "down",
                };
                println!(
                    "config {index} {profile_id}: predicted {:+.2} dB, adjusted {:+.2} dB ({arrow}), margin error {:+.2} dB",
                    r.predicted_margin_db, r.power_delta_db, r.margin_error_db
                );
            }
            for note in &notes {
                println!("skipped: {note}");
            }
        }
    }
    eprintln!("depletion results written to {}", path.display());
    Ok(())
}
