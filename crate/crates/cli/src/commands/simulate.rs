use anyhow::Result;
use specprobe::olssim::{measure_spectrum, simulate, LinkTruth};
use specprobe::report::{link_truth_report, osa_report, OutputFormat};
use specprobe::snr::OsaSample;

use crate::context::RunContext;

/// Dump ground truth and synthetic OSA captures for every plan point.
pub fn run(ctx: &RunContext) -> Result<()> {
    let plan = ctx.scenario.probe_plan(&ctx.profiles)?;
    let mc = ctx
        .scenario
        .media_channel_template
        .resolve(&ctx.profiles, ctx.scenario.link.psd_target_dbm_per_50ghz)?;

    let mut truth_rows: Vec<(usize, String, String, LinkTruth)> = Vec::new();
    let mut osa_rows: Vec<(usize, String, String, OsaSample)> = Vec::new();
    for (index, config) in plan.configurations.iter().enumerate() {
        let profile = ctx.profiles.get(&config.profile_id)?;
        let mc_cfg =
            mc.with_cut_config(config.center_thz, profile.signal_spec, config.tx_power_dbm)?;
        for load in &plan.load_conditions {
            let truth = simulate(&ctx.scenario.link, &mc_cfg, load, config.center_thz)?;
            let sample = measure_spectrum(&ctx.scenario.link, &mc_cfg, load, config.center_thz)?;
            truth_rows.push((index, config.profile_id.clone(), load.notation(), truth));
            osa_rows.push((index, config.profile_id.clone(), load.notation(), sample));
        }
    }

    let truth_text = link_truth_report(&truth_rows, &ctx.meta);
    let truth_path = ctx.write_output("link_truth.csv", &truth_text)?;
    ctx.write_output("osa_samples.csv", &osa_report(&osa_rows, &ctx.meta))?;

    match ctx.format {
        OutputFormat::Delimited => print!("{truth_text}"),
        OutputFormat::Text => {
            for (index, profile_id, load, t) in &truth_rows {
                let nli = t
                    .osnr_nli_db
                    .map(|v| format!("{v:.2}"))
                    .unwrap_or_else(|| "inf".into());
                println!(
                    "config {index} {profile_id} load {load}: ase {:.2} dB, nli {nli} dB, gosnr {:.2} dB, gsnr {:.2} dB",
                    t.osnr_ase_db, t.gosnr_db, t.gsnr_db
                );
            }
        }
    }
    eprintln!("ground truth written to {}", truth_path.display());
    Ok(())
}
