//! Simulation core for haptic driving assistance with a learned skill model.
//!
//! A kinematic vehicle and three torque-driven devices run in a dual-rate
//! loop. Synthetic drivers generate expert corpora, two small networks learn
//! to predict the expert's wheel and accelerator angles, and the guidance
//! laws turn those predictions (or a look-ahead baseline) into device torque.

pub mod agents;
pub mod guidance;
pub mod haptics;
pub mod metrics;
pub mod plant;
pub mod runlog;
pub mod skillnet;
pub mod track;
pub mod units;
