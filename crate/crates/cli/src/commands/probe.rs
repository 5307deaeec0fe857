use anyhow::Result;
use specprobe::probing::{
    aggregate_repeats, error_analysis, run_sweep, ProbeGroup, ProbeResult, SimSource,
};
use specprobe::report::{error_stats_report, q_readings_report, sweep_report, OutputFormat};

use crate::context::RunContext;

pub fn run(ctx: &RunContext) -> Result<()> {
    let plan = ctx.scenario.probe_plan(&ctx.profiles)?;

    let results = match &ctx.scenario.measurements {
        Some(table) => run_sweep(&plan, table, &ctx.profiles)?,
        None => {
            let mc = ctx
                .scenario
                .media_channel_template
                .resolve(&ctx.profiles, ctx.scenario.link.psd_target_dbm_per_50ghz)?;
            let source = SimSource {
                link: &ctx.scenario.link,
                mc: &mc,
                profiles: &ctx.profiles,
                noise_sigma_db: ctx.scenario.noise_sigma_db,
                seed: ctx.seed,
            };
            run_sweep(&plan, &source, &ctx.profiles)?
        }
    };

    let sweep_text = sweep_report(&results, &ctx.meta);
    let sweep_path = ctx.write_output("sweep.csv", &sweep_text)?;
    ctx.write_output("q_readings.csv", &q_readings_report(&results, &ctx.meta))?;

    let aggregated = aggregate_repeats(&results, &ctx.profiles)?;

    // estimation-error statistics per group of same-format candidate
    // curves probing the identical conditions
    let mut stats_rows = Vec::new();
    for (label, config_indexes) in format_groups(&plan, &ctx.profiles)? {
        if config_indexes.len() < 2 {
            continue;
        }
        let groups: Vec<ProbeGroup> = config_indexes
            .iter()
            .map(|&i| ProbeGroup {
                curve_id: format!("{}#{i}", plan.configurations[i].profile_id),
                results: aggregated
                    .iter()
                    .filter(|r| r.config_index == i)
                    .cloned()
                    .collect(),
            })
            .collect();
        match error_analysis(&groups) {
            Ok(stats) => stats_rows.push((label, stats)),
            Err(e) => eprintln!("note: estimation-error analysis skipped for {label}: {e}"),
        }
    }
    if !stats_rows.is_empty() {
        ctx.write_output(
            "error_stats.csv",
            &error_stats_report(&stats_rows, &ctx.meta),
        )?;
    }

    match ctx.format {
        OutputFormat::Delimited => print!("{sweep_text}"),
        OutputFormat::Text => print_pivot(&plan_labels(&plan), &aggregated),
    }
    eprintln!("sweep written to {}", sweep_path.display());
    Ok(())
}

fn plan_labels(plan: &specprobe::probing::ProbePlan) -> Vec<String> {
    plan.configurations
        .iter()
        .enumerate()
        .map(|(i, c)| format!("{}#{i}", c.profile_id))
        .collect()
}

/// Configuration indexes grouped by signal configuration, in plan order.
fn format_groups(
    plan: &specprobe::probing::ProbePlan,
    profiles: &specprobe::probing::ProfileSet,
) -> anyhow::Result<Vec<(String, Vec<usize>)>> {
    let mut groups: Vec<(String, Vec<usize>)> = Vec::new();
    for (i, config) in plan.configurations.iter().enumerate() {
        let spec = profiles.get(&config.profile_id)?.signal_spec;
        let label = format!("{}-{}", spec.modulation, spec.symbol_rate_gbd);
        match groups.iter_mut().find(|(l, _)| l == &label) {
            Some((_, idxs)) => idxs.push(i),
            None => groups.push((label, vec![i])),
        }
    }
    Ok(groups)
}

/// Load-by-configuration table of the aggregated estimates.
fn print_pivot(config_labels: &[String], aggregated: &[ProbeResult]) {
    let mut loads: Vec<String> = Vec::new();
    for r in aggregated {
        if !loads.contains(&r.load.notation()) {
            loads.push(r.load.notation());
        }
    }
    print!("{:<13}", "load");
    for label in config_labels {
        print!(" {label:>14}");
    }
    println!();
    for load in &loads {
        print!("{load:<13}");
        for i in 0..config_labels.len() {
            let cell = aggregated
                .iter()
                .find(|r| &r.load.notation() == load && r.config_index == i)
                .map(|r| match r.outcome.gsnr_est_db() {
                    Some(est) => format!("{est:.2}"),
                    None => r.outcome.flag().to_string(),
                })
                .unwrap_or_default();
            print!(" {cell:>14}");
        }
        println!();
    }
}
