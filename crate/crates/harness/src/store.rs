//! On-disk artifacts: run logs (CSV) with JSON sidecars, corpus manifests,
//! model files and experiment tables.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use skilldrive_core::agents::AgentParams;
use skilldrive_core::runlog::RunLog;
use skilldrive_core::skillnet::{valid_window_range, Channel, SkillNet};

use crate::config::SessionConfig;
use crate::experiments::{CollectSpec, CorpusRun};
use crate::session::{Ending, SkillModel};
use crate::HarnessError;

pub const CORPUS_FORMAT: &str = "skilldrive-corpus";
pub const CORPUS_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

/// File names of the two networks inside a model directory.
pub const STEER_MODEL_FILE: &str = "steer.json";
pub const ACCEL_MODEL_FILE: &str = "accel.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Sidecar written next to every log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogSidecar {
    pub name: String,
    pub config: SessionConfig,
    /// Effective agent parameters, if an agent drove.
    pub agent: Option<AgentParams>,
    pub ending: Option<Ending>,
    pub rows: usize,
    /// Checksum of the CSV file.
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub csv: String,
    pub sha256: String,
    pub rows: usize,
    /// Valid feature windows in the log.
    pub windows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub format: String,
    pub version: u32,
    pub spec: CollectSpec,
    pub entries: Vec<ManifestEntry>,
    pub total_windows: usize,
}

/// Writes `<name>.csv` and `<name>.json` into `dir`.
pub fn write_log(
    dir: &Path,
    name: &str,
    config: &SessionConfig,
    log: &RunLog,
    ending: Option<Ending>,
) -> Result<LogSidecar, HarnessError> {
    log.validate()?;
    fs::create_dir_all(dir)?;
    let csv = log.to_csv();
    fs::write(dir.join(format!("{name}.csv")), &csv)?;
    let sidecar = LogSidecar {
        name: name.to_string(),
        config: config.clone(),
        agent: config.driver.agent_params(),
        ending,
        rows: log.len(),
        sha256: sha256_hex(csv.as_bytes()),
    };
    fs::write(dir.join(format!("{name}.json")), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(sidecar)
}

/// Reads and validates a CSV log.
pub fn read_log(path: &Path) -> Result<RunLog, HarnessError> {
    let log = RunLog::from_csv(&fs::read_to_string(path)?)?;
    log.validate()?;
    Ok(log)
}

pub fn write_corpus(dir: &Path, spec: &CollectSpec, runs: &[CorpusRun]) -> Result<CorpusManifest, HarnessError> {
    let mut entries = Vec::with_capacity(runs.len());
    for run in runs {
        let side = write_log(dir, &run.name, &run.config, &run.output.log, run.output.ending)?;
        entries.push(ManifestEntry {
            csv: format!("{}.csv", run.name),
            name: side.name,
            sha256: side.sha256,
            rows: side.rows,
            windows: valid_window_range(side.rows).len(),
        });
    }
    let manifest = CorpusManifest {
        format: CORPUS_FORMAT.into(),
        version: CORPUS_VERSION,
        spec: spec.clone(),
        total_windows: entries.iter().map(|e| e.windows).sum(),
        entries,
    };
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<CorpusManifest, HarnessError> {
    let m: CorpusManifest = serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_FILE))?)?;
    if m.format != CORPUS_FORMAT || m.version != CORPUS_VERSION {
        return Err(HarnessError::ConfigInvalid(format!("unsupported corpus {} v{}", m.format, m.version)));
    }
    Ok(m)
}

/// Loads every log of a corpus, checking each against its manifest checksum.
pub fn read_corpus(dir: &Path) -> Result<(CorpusManifest, Vec<RunLog>), HarnessError> {
    let manifest = read_manifest(dir)?;
    let mut logs = Vec::with_capacity(manifest.entries.len());
    for e in &manifest.entries {
        let text = fs::read_to_string(dir.join(&e.csv))?;
        if sha256_hex(text.as_bytes()) != e.sha256 {
            return Err(HarnessError::ConfigInvalid(format!("checksum mismatch for {}", e.csv)));
        }
        let log = RunLog::from_csv(&text)?;
        log.validate()?;
        logs.push(log);
    }
    Ok((manifest, logs))
}

pub fn model_file(dir: &Path, channel: Channel) -> PathBuf {
    dir.join(match channel {
        Channel::Steer => STEER_MODEL_FILE,
        Channel::Accel => ACCEL_MODEL_FILE,
    })
}

pub fn write_net(path: &Path, net: &SkillNet) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, net.to_json()?)?;
    Ok(())
}

pub fn read_net(path: &Path) -> Result<SkillNet, HarnessError> {
    Ok(SkillNet::from_json(&fs::read_to_string(path)?)?)
}

/// Loads `steer.json` and `accel.json` from a model directory.
pub fn read_model(dir: &Path) -> Result<SkillModel, HarnessError> {
    let steer = read_net(&model_file(dir, Channel::Steer))?;
    let accel = read_net(&model_file(dir, Channel::Accel))?;
    if steer.channel != Channel::Steer || accel.channel != Channel::Accel {
        return Err(HarnessError::ConfigInvalid(format!("{} holds networks for the wrong channels", dir.display())));
    }
    Ok(SkillModel { steer, accel })
}

pub fn write_model(dir: &Path, model: &SkillModel) -> Result<(), HarnessError> {
    write_net(&model_file(dir, Channel::Steer), &model.steer)?;
    write_net(&model_file(dir, Channel::Accel), &model.accel)
}
