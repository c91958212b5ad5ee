//! Session loop, experiment scripts, persistence and the live-drive
//! service around the simulation core.

pub mod config;
pub mod experiments;
pub mod serve;
pub mod session;
pub mod store;

use thiserror::Error;

use skilldrive_core::plant::PlantError;
use skilldrive_core::runlog::LogError;
use skilldrive_core::skillnet::SkillNetError;
use skilldrive_core::track::TrackError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("simulation diverged: {0}")]
    SimulationDiverged(#[from] PlantError),
    #[error(transparent)]
    Track(#[from] TrackError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    SkillNet(#[from] SkillNetError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
