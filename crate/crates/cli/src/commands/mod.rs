mod characterize;
mod deplete;
mod margins;
mod probe;
mod simulate;

use anyhow::Result;
use specprobe::olssim::LoadCondition;
use specprobe::probing::{run_sweep, PlanConfig, ProbeResult, SimSource};

use crate::context::RunContext;
use crate::{Cli, Command};

pub fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Characterize {
            samples,
            id,
            modulation,
            symbol_rate,
            bandwidth,
            provenance,
        } => characterize::run(
            cli,
            samples,
            id,
            modulation,
            *symbol_rate,
            *bandwidth,
            provenance,
        ),
        Command::Probe => probe::run(&RunContext::load(cli)?),
        Command::Margins => margins::run(&RunContext::load(cli)?),
        Command::Deplete => deplete::run(&RunContext::load(cli)?),
        Command::Simulate => simulate::run(&RunContext::load(cli)?),
    }
}

/// One configuration swept over a load list, against the simulator with
/// the given media-channel state.
pub(crate) fn sweep_config_sim(
    ctx: &RunContext,
    config: &PlanConfig,
    loads: &[LoadCondition],
    mc: &specprobe::olssim::MediaChannel,
) -> specprobe::Result<Vec<ProbeResult>> {
    let plan = specprobe::probing::ProbePlan {
        configurations: vec![config.clone()],
        load_conditions: loads.to_vec(),
        repeats: ctx.scenario.repeats,
    };
    let source = SimSource {
        link: &ctx.scenario.link,
        mc,
        profiles: &ctx.profiles,
        noise_sigma_db: ctx.scenario.noise_sigma_db,
        seed: ctx.seed,
    };
    run_sweep(&plan, &source, &ctx.profiles)
}

/// Same, replaying an imported measurement table.
pub(crate) fn sweep_config_table(
    ctx: &RunContext,
    config: &PlanConfig,
    loads: &[LoadCondition],
    table: &specprobe::probing::MeasurementTable,
) -> specprobe::Result<Vec<ProbeResult>> {
    let plan = specprobe::probing::ProbePlan {
        configurations: vec![config.clone()],
        load_conditions: loads.to_vec(),
        repeats: ctx.scenario.repeats,
    };
    run_sweep(&plan, table, &ctx.profiles)
}
