//! Shared command wiring: scenario + profile loading, seed and output
//! resolution, and the metadata header stamped into every output file.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context as _};
use specprobe::probing::ProfileSet;
use specprobe::report::{OutputFormat, ReportMeta};
use specprobe::scenario::{fnv1a64, load_scenario, Scenario};
use specprobe::store::load_profiles_dir;

use crate::{Cli, Format};

pub struct RunContext {
    pub scenario: Scenario,
    pub profiles: ProfileSet,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub format: OutputFormat,
    pub meta: ReportMeta,
}

impl RunContext {
    pub fn load(cli: &Cli) -> anyhow::Result<Self> {
        let scenario_path = cli
            .scenario
            .as_ref()
            .ok_or_else(|| anyhow!("--scenario <file> is required for this command"))?;
        let scenario = load_scenario(scenario_path)
            .with_context(|| format!("loading scenario {}", scenario_path.display()))?;

        let profiles_dir = cli
            .profiles
            .clone()
            .or_else(|| scenario.profiles_dir.clone())
            .ok_or_else(|| {
                anyhow!(
                    "no profiles directory: pass --profiles or set profiles_dir in the scenario"
                )
            })?;
        let profiles = load_profiles_dir(&profiles_dir)
            .with_context(|| format!("loading profiles from {}", profiles_dir.display()))?;
        if profiles.is_empty() {
            return Err(anyhow!(
                "no profile documents in {}",
                profiles_dir.display()
            ));
        }

        let seed = cli.seed.unwrap_or(scenario.seed);
        let out_dir = cli
            .out
            .clone()
            .or_else(|| scenario.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        fs::create_dir_all(&out_dir)
            .with_context(|| format!("creating output directory {}", out_dir.display()))?;

        let mut digests = scenario.input_digests.clone();
        digests.extend(digest_dir(&profiles_dir)?);

        Ok(Self {
            scenario,
            profiles,
            seed,
            out_dir,
            format: match cli.format {
                Format::Text => OutputFormat::Text,
                Format::Delimited => OutputFormat::Delimited,
            },
            meta: ReportMeta { seed, digests },
        })
    }

    pub fn write_output(&self, name: &str, content: &str) -> anyhow::Result<PathBuf> {
        let path = self.out_dir.join(name);
        fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

/// Digest every profile document so outputs are traceable to the exact
/// curves used.
fn digest_dir(dir: &Path) -> anyhow::Result<Vec<(String, u64)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "toml"))
        .collect();
    paths.sort();
    let mut digests = Vec::with_capacity(paths.len());
    for path in paths {
        let bytes = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        digests.push((name, fnv1a64(&bytes)));
    }
    Ok(digests)
}
