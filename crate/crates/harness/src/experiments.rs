//! Experiment scripts: expert corpus collection, network training, the
//! expert/novice comparison and the guidance-method comparison.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use skilldrive_core::agents::SkillPreset;
use skilldrive_core::guidance::GuidanceMethod;
use skilldrive_core::metrics::{evaluate, mean_report, MetricsReport};
use skilldrive_core::runlog::RunLog;
use skilldrive_core::skillnet::{
    feature_rows, train, windows_from_log, Channel, FeatureRow, FeatureWindow, Normalizer, SkillNet, TrainConfig,
};
use skilldrive_core::track::{select_representative_path, training_sweeps_deg, TrackPath};

use crate::config::{DriverSpec, PathSpec, Perturbation, Perturbations, SessionConfig, DEFAULT_DURATION_CAP};
use crate::session::{run_session, SessionOutput, SkillModel};
use crate::HarnessError;

/// Mixes run coordinates into a per-session seed.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    // splitmix64 over the coordinates
    let mut z = base;
    for &p in parts {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(p);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CollectSpec {
    pub sweeps_deg: Vec<f64>,
    /// Expert roster size.
    pub agents: usize,
    pub trials: usize,
    pub seed: u64,
    pub duration_cap: f64,
    pub perturbations: Perturbations,
}

/// Wheel-torque perturbation applied while collecting the expert corpus.
pub const COLLECT_WHEEL_TORQUE: Perturbation = Perturbation { sigma: 0.5, time: 0.5 };

impl Default for CollectSpec {
    fn default() -> Self {
        Self {
            sweeps_deg: training_sweeps_deg(),
            agents: 5,
            trials: 2,
            seed: 1,
            duration_cap: DEFAULT_DURATION_CAP,
            perturbations: Perturbations { crosswind: None, wheel_torque: Some(COLLECT_WHEEL_TORQUE) },
        }
    }
}

impl CollectSpec {
    /// Six trials per path and driver.
    pub fn full_scale() -> Self {
        Self { trials: 6, ..Self::default() }
    }

    pub fn session_configs(&self) -> Vec<(String, SessionConfig)> {
        let mut out = Vec::new();
        for (pi, phi) in self.sweeps_deg.iter().enumerate() {
            for agent in 0..self.agents {
                for trial in 0..self.trials {
                    let seed = derive_seed(self.seed, &[pi as u64, agent as u64, trial as u64]);
                    let driver = DriverSpec::Agent {
                        preset: SkillPreset::Expert,
                        index: Some(agent),
                        params: None,
                        hands_off: false,
                        noiseless: false,
                    };
                    let mut cfg = SessionConfig::new(PathSpec::Training { phi_deg: *phi }, GuidanceMethod::N, driver, seed);
                    cfg.duration_cap = self.duration_cap;
                    cfg.perturbations = self.perturbations;
                    out.push((format!("phi{:+04}_e{agent}_t{trial}", *phi as i64), cfg));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct CorpusRun {
    pub name: String,
    pub config: SessionConfig,
    pub output: SessionOutput,
}

/// Drives every listed path with every expert and trial.
pub fn run_collect(spec: &CollectSpec) -> Result<Vec<CorpusRun>, HarnessError> {
    spec.session_configs()
        .into_iter()
        .map(|(name, config)| {
            let output = run_session(config.clone(), None)?;
            Ok(CorpusRun { name, config, output })
        })
        .collect()
}

/// Training windows of one channel with trial labels and corpus extrema.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub channel: Channel,
    pub windows: Vec<FeatureWindow>,
    pub groups: Vec<usize>,
    pub normalizer: Normalizer,
}

/// Every `stride`-th window of every log; extrema span all logged rows.
pub fn build_dataset<'a>(logs: impl IntoIterator<Item = &'a RunLog>, channel: Channel, stride: usize) -> Dataset {
    let mut rows: Vec<FeatureRow> = Vec::new();
    let mut windows = Vec::new();
    let mut groups = Vec::new();
    for (g, log) in logs.into_iter().enumerate() {
        rows.extend(feature_rows(log));
        let w = windows_from_log(log, channel, stride);
        groups.extend(std::iter::repeat_n(g, w.len()));
        windows.extend(w);
    }
    Dataset { channel, windows, groups, normalizer: Normalizer::fit(&rows, channel) }
}

/// Window stride used when building training sets from a desk-scale corpus.
pub const DEFAULT_WINDOW_STRIDE: usize = 20;

/// Training configuration of the harness: the channel threshold with
/// shuffled minibatches of 128 windows per step.
pub fn default_train_config(channel: Channel) -> TrainConfig {
    TrainConfig { batch_size: Some(128), max_epochs: 2000, ..TrainConfig::for_channel(channel) }
}

pub fn train_dataset(data: &Dataset, config: &TrainConfig) -> Result<SkillNet, HarnessError> {
    Ok(train(&data.windows, Some(&data.groups), data.normalizer, data.channel, config)?)
}

/// Trains both networks on one corpus with the harness defaults.
pub fn train_model(logs: &[RunLog], stride: usize) -> Result<SkillModel, HarnessError> {
    let net = |channel| {
        let data = build_dataset(logs, channel, stride);
        train_dataset(&data, &default_train_config(channel))
    };
    Ok(SkillModel { steer: net(Channel::Steer)?, accel: net(Channel::Accel)? })
}

/// Fixed evaluation paths: the first seed at or after `base_seed` with the
/// requested segment count whose distant parts stay apart.
pub fn experiment_path(base_seed: u64, segments: usize) -> Result<TrackPath, HarnessError> {
    Ok(select_representative_path(base_seed, 4000.0, segments, MIN_PATH_CLEARANCE)?)
}

/// Minimum distance between road parts more than 150 m apart along the path, m.
pub const MIN_PATH_CLEARANCE: f64 = 20.0;

pub const EXP1_PATH_SEED: u64 = 100;
pub const EXP1_SEGMENTS: usize = 23;
pub const EXP2_PATH_SEED: u64 = 200;
pub const EXP2_SEGMENTS: usize = 22;

/// One row of an experiment table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub group: String,
    pub agent: usize,
    pub trial: usize,
    pub method: GuidanceMethod,
    pub seed: u64,
    pub completed: bool,
    pub report: MetricsReport,
}

pub const TABLE_HEADER: &str = "group,agent,trial,method,seed,completed";

pub fn table_csv(rows: &[ExperimentRow]) -> String {
    let mut out = format!("{TABLE_HEADER},{}\n", MetricsReport::csv_header());
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.group,
            r.agent,
            r.trial,
            r.method,
            r.seed,
            u8::from(r.completed),
            r.report.csv_row()
        ));
    }
    out
}

pub fn parse_table(text: &str) -> Result<Vec<ExperimentRow>, HarnessError> {
    let bad = |line: usize, msg: String| HarnessError::ConfigInvalid(format!("table line {line}: {msg}"));
    let mut lines = text.lines().enumerate();
    let expected = format!("{TABLE_HEADER},{}", MetricsReport::csv_header());
    match lines.next() {
        Some((_, h)) if h.trim_end() == expected => {}
        _ => return Err(bad(1, format!("header must be `{expected}`"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.filter(|(_, l)| !l.trim().is_empty()) {
        let f: Vec<&str> = line.splitn(7, ',').collect();
        if f.len() != 7 {
            return Err(bad(i + 1, "too few fields".into()));
        }
        let int = |s: &str| s.parse::<u64>().map_err(|e| bad(i + 1, format!("`{s}`: {e}")));
        rows.push(ExperimentRow {
            group: f[0].to_string(),
            agent: int(f[1])? as usize,
            trial: int(f[2])? as usize,
            method: f[3].parse().map_err(|e| bad(i + 1, e))?,
            seed: int(f[4])?,
            completed: int(f[5])? != 0,
            report: MetricsReport::from_csv_row(f[6]).map_err(|e| bad(i + 1, e))?,
        });
    }
    Ok(rows)
}

/// Mean metrics of one (group, method) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub group: String,
    pub method: GuidanceMethod,
    pub runs: usize,
    pub completed: usize,
    pub mean: MetricsReport,
}

/// Cells in order of first appearance.
pub fn summarize(rows: &[ExperimentRow]) -> Vec<CellSummary> {
    let mut keys: Vec<(String, GuidanceMethod)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|(g, m)| *g == r.group && *m == r.method) {
            keys.push((r.group.clone(), r.method));
        }
    }
    keys.into_iter()
        .map(|(group, method)| {
            let cell: Vec<&ExperimentRow> = rows.iter().filter(|r| r.group == group && r.method == method).collect();
            CellSummary {
                runs: cell.len(),
                completed: cell.iter().filter(|r| r.completed).count(),
                mean: group_mean(rows, |r| r.group == group && r.method == method),
                group,
                method,
            }
        })
        .collect()
}

pub fn summary_csv(cells: &[CellSummary]) -> String {
    let mut out = format!("group,method,runs,completed,{}\n", MetricsReport::csv_header());
    for c in cells {
        out.push_str(&format!("{},{},{},{},{}\n", c.group, c.method, c.runs, c.completed, c.mean.csv_row()));
    }
    out
}

/// Mean report of the rows matching `filter`.
pub fn group_mean(rows: &[ExperimentRow], filter: impl Fn(&ExperimentRow) -> bool) -> MetricsReport {
    let reports: Vec<MetricsReport> = rows.iter().filter(|r| filter(r)).map(|r| r.report).collect();
    mean_report(&reports)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Exp1Spec {
    pub path_seed: u64,
    pub segments: usize,
    /// Runs per group; run `i` uses roster member `i % roster`.
    pub runs_per_group: usize,
    pub expert_roster: usize,
    pub novice_roster: usize,
    pub seed: u64,
    pub duration_cap: f64,
}

impl Default for Exp1Spec {
    fn default() -> Self {
        Self {
            path_seed: EXP1_PATH_SEED,
            segments: EXP1_SEGMENTS,
            runs_per_group: 10,
            expert_roster: 5,
            novice_roster: 6,
            seed: 11,
            duration_cap: DEFAULT_DURATION_CAP,
        }
    }
}

fn run_on_path(
    path: &TrackPath,
    preset: SkillPreset,
    agent: usize,
    method: GuidanceMethod,
    seed: u64,
    cap: f64,
    model: &Arc<SkillModel>,
) -> Result<(SessionConfig, SessionOutput), HarnessError> {
    let driver = DriverSpec::Agent { preset, index: Some(agent), params: None, hands_off: false, noiseless: false };
    let mut cfg = SessionConfig::new(path_spec(path), method, driver, seed);
    cfg.duration_cap = cap;
    let out = run_session(cfg.clone(), Some(model.clone()))?;
    Ok((cfg, out))
}

/// Path spec that rebuilds `path` (random paths only carry their seed).
fn path_spec(path: &TrackPath) -> PathSpec {
    PathSpec::Random { seed: path.seed().expect("experiment paths are generated"), length: path.total_length() }
}

fn report_for(out: &SessionOutput, model: &SkillModel) -> Result<MetricsReport, HarnessError> {
    evaluate(&out.log, &out.path, Some((&model.steer, &model.accel)))
        .map_err(|e| HarnessError::ConfigInvalid(format!("metrics: {e}")))
}

/// Receives every finished experiment run.
pub type RunSink<'a> = dyn FnMut(&ExperimentRow, &SessionConfig, &SessionOutput) -> Result<(), HarnessError> + 'a;

/// Expert and novice groups on the exp1 path under method N.
pub fn run_exp1(spec: &Exp1Spec, model: &Arc<SkillModel>) -> Result<Vec<ExperimentRow>, HarnessError> {
    run_exp1_with(spec, model, &mut |_, _, _| Ok(()))
}

pub fn run_exp1_with(spec: &Exp1Spec, model: &Arc<SkillModel>, sink: &mut RunSink) -> Result<Vec<ExperimentRow>, HarnessError> {
    let path = experiment_path(spec.path_seed, spec.segments)?;
    let mut rows = Vec::new();
    for preset in [SkillPreset::Expert, SkillPreset::Novice] {
        let roster = match preset {
            SkillPreset::Expert => spec.expert_roster,
            SkillPreset::Novice => spec.novice_roster,
        }
        .max(1);
        for run in 0..spec.runs_per_group {
            let agent = run % roster;
            let seed = derive_seed(spec.seed, &[preset as u64, run as u64]);
            let (cfg, out) = run_on_path(&path, preset, agent, GuidanceMethod::N, seed, spec.duration_cap, model)?;
            let row = ExperimentRow {
                group: preset.to_string(),
                agent,
                trial: run / roster,
                method: GuidanceMethod::N,
                seed,
                completed: out.completed(),
                report: report_for(&out, model)?,
            };
            sink(&row, &cfg, &out)?;
            rows.push(row);
        }
    }
    Ok(rows)
}

/// The six orderings of N, G, C.
pub fn method_permutations() -> [[GuidanceMethod; 3]; 6] {
    use GuidanceMethod::{C, G, N};
    [[N, G, C], [N, C, G], [G, N, C], [G, C, N], [C, N, G], [C, G, N]]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Exp2Spec {
    pub path_seed: u64,
    pub segments: usize,
    /// Novice roster size; member `i` drives the methods in permutation `i % 6`.
    pub roster: usize,
    pub seed: u64,
    pub duration_cap: f64,
}

impl Default for Exp2Spec {
    fn default() -> Self {
        Self { path_seed: EXP2_PATH_SEED, segments: EXP2_SEGMENTS, roster: 6, seed: 22, duration_cap: DEFAULT_DURATION_CAP }
    }
}

impl Exp2Spec {
    /// `(agent, order position, method)` in driving order.
    pub fn schedule(&self) -> Vec<(usize, usize, GuidanceMethod)> {
        let perms = method_permutations();
        (0..self.roster)
            .flat_map(|a| perms[a % perms.len()].iter().enumerate().map(move |(i, m)| (a, i, *m)))
            .collect()
    }
}

/// Novice roster driving the exp2 path once with each method.
pub fn run_exp2(spec: &Exp2Spec, model: &Arc<SkillModel>) -> Result<Vec<ExperimentRow>, HarnessError> {
    run_exp2_with(spec, model, &mut |_, _, _| Ok(()))
}

pub fn run_exp2_with(spec: &Exp2Spec, model: &Arc<SkillModel>, sink: &mut RunSink) -> Result<Vec<ExperimentRow>, HarnessError> {
    let path = experiment_path(spec.path_seed, spec.segments)?;
    let mut rows = Vec::new();
    for (agent, order, method) in spec.schedule() {
        let seed = derive_seed(spec.seed, &[agent as u64, order as u64]);
        let (cfg, out) = run_on_path(&path, SkillPreset::Novice, agent, method, seed, spec.duration_cap, model)?;
        let row = ExperimentRow {
            group: SkillPreset::Novice.to_string(),
            agent,
            trial: order,
            method,
            seed,
            completed: out.completed(),
            report: report_for(&out, model)?,
        };
        sink(&row, &cfg, &out)?;
        rows.push(row);
    }
    Ok(rows)
}
