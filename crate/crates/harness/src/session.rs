//! Dual-rate session loop: one 50-Hz vehicle tick drives sixteen 800-Hz
//! device sub-ticks.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use skilldrive_core::agents::{agent_torque, Agent, AgentParams, SkillPreset};
use skilldrive_core::guidance::{
    ambient_feedback, conventional_desired_pedal, conventional_desired_steer, is_overspeed, lookahead_errors,
    DesiredAngles, Feedback, GuidanceMethod, LookaheadErrors, SharedControlLaw,
};
use skilldrive_core::haptics::{brake_fraction, throttle_fraction};
use skilldrive_core::metrics::{MetricsAccumulator, MetricsReport};
use skilldrive_core::plant::{
    road_wheel_angle, step_device, step_vehicle, AxisTorques, DeviceState, VehicleControls, VehicleState, DEVICE_DT,
    SUBSTEPS_PER_TICK, VEHICLE_DT,
};
use skilldrive_core::runlog::{LogRow, RunLog};
use skilldrive_core::skillnet::{compute_env_features, FeatureRow, PredictionStream, SkillNet};
use skilldrive_core::track::TrackPath;
use skilldrive_core::units::ms_to_kmh;

use crate::config::{DriverSpec, Perturbation, SessionConfig};
use crate::HarnessError;

/// The trained steering and accelerator networks.
#[derive(Debug, Clone, PartialEq)]
pub struct SkillModel {
    pub steer: SkillNet,
    pub accel: SkillNet,
}

impl SkillModel {
    pub fn ranges(&self) -> (f64, f64) {
        (self.steer.normalizer.output_range(), self.accel.normalizer.output_range())
    }
}

/// Input from an external driver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ExternalInput {
    /// Intended angles (deg), rendered through the expert arm/leg impedance.
    Intent { steer: f64, accel: f64, brake: f64 },
    /// Raw driver torques, N*m, device-angle positive.
    Torque { steer: f64, accel: f64, brake: f64 },
}

impl Default for ExternalInput {
    fn default() -> Self {
        ExternalInput::Intent { steer: 0.0, accel: 0.0, brake: 0.0 }
    }
}

/// Why a session stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ending {
    Completed,
    DurationCap,
    /// The car left the region in which the road can be located.
    LostPath,
    /// Stopped by the live-drive client.
    Stopped,
}

/// Distance before the end of the path at which a run counts as complete, m.
const FINISH_MARGIN: f64 = 0.5;

pub struct Session {
    cfg: SessionConfig,
    path: TrackPath,
    model: Option<Arc<SkillModel>>,
    method: GuidanceMethod,
    vehicle: VehicleState,
    device: DeviceState,
    agent: Option<Agent>,
    hands_off: bool,
    external: ExternalInput,
    impedance: AgentParams,
    stream: PredictionStream,
    law: SharedControlLaw,
    metrics: MetricsAccumulator,
    wind: Option<Ou>,
    wheel_push: Option<Ou>,
    log: RunLog,
    tick: u64,
    ending: Option<Ending>,
}

impl Session {
    pub fn new(cfg: SessionConfig, model: Option<Arc<SkillModel>>) -> Result<Self, HarnessError> {
        cfg.validate()?;
        let path = cfg.path.build()?;
        let start = path.start_pose();
        let vehicle = VehicleState::at_rest(start.x, start.y, start.heading, &cfg.vehicle);
        let (agent, hands_off) = match (&cfg.driver, cfg.driver.agent_params()) {
            (DriverSpec::Agent { hands_off, .. }, Some(p)) => {
                (Some(Agent::new(p, cfg.vehicle.clone(), cfg.seed)), *hands_off)
            }
            _ => (None, false),
        };
        let metrics = match &model {
            Some(m) => MetricsAccumulator::new(Some(m.ranges())),
            None => MetricsAccumulator::new(None),
        };
        Ok(Self {
            law: Self::make_law(&cfg, cfg.method),
            method: cfg.method,
            path,
            model,
            vehicle,
            device: DeviceState::default(),
            agent,
            hands_off,
            external: ExternalInput::default(),
            impedance: SkillPreset::Expert.params(),
            stream: PredictionStream::new(),
            metrics,
            wind: cfg.perturbations.crosswind.map(|c| Ou::new(c, cfg.seed ^ 0x0057_1d00)),
            wheel_push: cfg.perturbations.wheel_torque.map(|c| Ou::new(c, cfg.seed ^ 0x0bad_d00d)),
            log: RunLog::new(cfg.method),
            tick: 0,
            ending: None,
            cfg,
        })
    }

    fn make_law(cfg: &SessionConfig, method: GuidanceMethod) -> SharedControlLaw {
        SharedControlLaw::new(cfg.gains, cfg.haptic, method == GuidanceMethod::G)
    }

    pub fn config(&self) -> &SessionConfig {
        &self.cfg
    }

    pub fn path(&self) -> &TrackPath {
        &self.path
    }

    pub fn method(&self) -> GuidanceMethod {
        self.method
    }

    pub fn vehicle(&self) -> &VehicleState {
        &self.vehicle
    }

    pub fn device(&self) -> &DeviceState {
        &self.device
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn ending(&self) -> Option<Ending> {
        self.ending
    }

    pub fn log(&self) -> &RunLog {
        &self.log
    }

    pub fn metrics(&self) -> MetricsReport {
        self.metrics.report()
    }

    /// Switches the guidance method; guidance state restarts. The log keeps
    /// the method it was opened with.
    pub fn set_method(&mut self, method: GuidanceMethod) {
        if method != self.method {
            self.method = method;
            self.law = Self::make_law(&self.cfg, method);
        }
    }

    pub fn set_external_input(&mut self, input: ExternalInput) {
        self.external = input;
    }

    /// Guidance renders anything beyond the ambient feel.
    fn guidance_active(&self, warm: bool) -> bool {
        match self.method {
            GuidanceMethod::N => false,
            GuidanceMethod::G => warm && self.model.is_some() && !self.cfg.gains.is_null(),
            GuidanceMethod::C => !self.cfg.gains.is_null(),
        }
    }

    fn driver_torques(&self) -> AxisTorques {
        match &self.agent {
            Some(agent) => agent.torques(&self.device, self.hands_off),
            None => match self.external {
                ExternalInput::Intent { steer, accel, brake } => {
                    let p = &self.impedance;
                    AxisTorques {
                        steer: agent_torque(steer, self.device.steer, p.k_arm, p.d_arm),
                        accel: agent_torque(accel, self.device.accel, p.k_leg, p.d_leg),
                        brake: agent_torque(brake, self.device.brake, p.k_leg, p.d_leg),
                    }
                }
                ExternalInput::Torque { steer, accel, brake } => AxisTorques { steer, accel, brake },
            },
        }
    }

    /// One vehicle tick. Returns the logged row, or `None` once the session
    /// has ended.
    pub fn step(&mut self) -> Result<Option<LogRow>, HarnessError> {
        if self.ending.is_some() {
            return Ok(None);
        }
        let t = self.tick as f64 * VEHICLE_DT;
        let veh = self.vehicle;
        let geo = match lookahead_errors(&self.path, &veh, self.cfg.gains.lookahead_time) {
            Ok(g) => g,
            Err(_) => {
                self.ending = Some(Ending::LostPath);
                return Ok(None);
            }
        };
        // off the road every ray distance reads zero
        let d = self.path.ray_distances(veh.pose()).unwrap_or([0.0; 5]);
        let feature = FeatureRow {
            theta_s: self.device.steer.angle,
            theta_a: self.device.accel.angle,
            v: veh.v,
            yaw_rate: veh.yaw_rate,
            rpm: veh.rpm,
            z: compute_env_features(d),
        };
        let pred = {
            let (s, a) = match &self.model {
                Some(m) => (Some(&m.steer), Some(&m.accel)),
                None => (None, None),
            };
            self.stream.step(feature, s, a)
        };

        let intent = match &mut self.agent {
            Some(agent) => {
                let i = agent.update(&self.path, &veh);
                (i.steer, i.accel)
            }
            None => match self.external {
                ExternalInput::Intent { steer, accel, .. } => (steer, accel),
                ExternalInput::Torque { .. } => (0.0, 0.0),
            },
        };

        let active = self.guidance_active(pred.warm);
        let overspeed = self.method == GuidanceMethod::C && is_overspeed(veh.v, &self.cfg.gains);
        let desired = match self.method {
            GuidanceMethod::G if active => DesiredAngles { steer: pred.steer, accel: pred.accel },
            GuidanceMethod::C if active => DesiredAngles {
                steer: conventional_desired_steer(geo.e_p, geo.e_d, &self.cfg.gains),
                accel: conventional_desired_pedal(ms_to_kmh(veh.v), &self.cfg.gains, &self.cfg.haptic),
            },
            _ => DesiredAngles { steer: self.device.steer.angle, accel: self.device.accel.angle },
        };
        if active {
            self.law.set_desired(desired);
        }

        let mut row = self.base_row(t, &geo, d, intent, (pred.steer, pred.accel), desired, overspeed);
        let push = self.wheel_push.as_mut().map_or(0.0, Ou::sample);
        let n = SUBSTEPS_PER_TICK as f64;
        for _ in 0..SUBSTEPS_PER_TICK {
            let fb: Feedback = if active {
                self.law.tick(&self.device, &veh, DEVICE_DT)
            } else {
                ambient_feedback(&self.device, &veh, &self.cfg.haptic)
            };
            let applied = AxisTorques { steer: fb.steer, accel: -fb.accel, brake: -fb.brake };
            let mut driver = self.driver_torques();
            driver.steer += push;
            self.device = step_device(&self.device, applied, driver, DEVICE_DT, &self.cfg.device)?;
            row.fb_s += applied.steer / n;
            row.fb_a += applied.accel / n;
            row.assist_s += fb.assist_steer / n;
            row.assist_a += fb.assist_accel / n;
            row.driver_s += driver.steer / n;
            row.driver_a += driver.accel / n;
        }

        let controls = VehicleControls {
            throttle: throttle_fraction(self.device.accel.angle, &self.cfg.haptic),
            brake: brake_fraction(self.device.brake.angle, &self.cfg.haptic),
            road_wheel_angle: road_wheel_angle(self.device.steer.angle, &self.cfg.vehicle),
        };
        self.vehicle = step_vehicle(&veh, controls, VEHICLE_DT, &self.cfg.vehicle)?;
        if let Some(w) = &mut self.wind {
            let drift = w.sample() * VEHICLE_DT;
            self.vehicle.x -= drift * self.vehicle.heading.sin();
            self.vehicle.y += drift * self.vehicle.heading.cos();
        }

        self.metrics.push(&row);
        self.log.rows.push(row);
        self.tick += 1;
        if geo.s >= self.path.total_length() - FINISH_MARGIN {
            self.ending = Some(Ending::Completed);
        } else if self.tick as f64 * VEHICLE_DT >= self.cfg.duration_cap - 1e-9 {
            self.ending = Some(Ending::DurationCap);
        }
        Ok(Some(row))
    }

    #[allow(clippy::too_many_arguments)]
    fn base_row(
        &self,
        t: f64,
        geo: &LookaheadErrors,
        d: [f64; 5],
        intent: (f64, f64),
        pred: (f64, f64),
        desired: DesiredAngles,
        overspeed: bool,
    ) -> LogRow {
        let v = &self.vehicle;
        let dev = &self.device;
        LogRow {
            t,
            x: v.x,
            y: v.y,
            heading: v.heading,
            v: v.v,
            yaw_rate: v.yaw_rate,
            rpm: v.rpm,
            f_fl: v.f_fl,
            f_fr: v.f_fr,
            s: geo.s,
            e_d: geo.e_d,
            e_delta: geo.e_delta,
            e_p: geo.e_p,
            theta_s: dev.steer.angle,
            theta_s_rate: dev.steer.rate,
            theta_a: dev.accel.angle,
            theta_a_rate: dev.accel.rate,
            theta_b: dev.brake.angle,
            theta_b_rate: dev.brake.rate,
            d,
            intent_s: intent.0,
            intent_a: intent.1,
            pred_s: pred.0,
            pred_a: pred.1,
            desired_s: desired.steer,
            desired_a: desired.accel,
            overspeed,
            ..LogRow::default()
        }
    }

    /// Runs until the path is completed, lost, or the duration cap is hit.
    pub fn run_to_end(&mut self) -> Result<Ending, HarnessError> {
        while self.step()?.is_some() {}
        Ok(self.ending.expect("loop ends only when the session has ended"))
    }

    pub fn into_output(self) -> SessionOutput {
        SessionOutput {
            report: self.metrics.report(),
            ending: self.ending,
            log: self.log,
            path: self.path,
        }
    }
}

/// Perturbation process sampled once per vehicle tick.
struct Ou {
    rng: ChaCha8Rng,
    normal: Normal<f64>,
    decay: f64,
    value: f64,
}

impl Ou {
    fn new(p: Perturbation, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, p.sigma).expect("validated sigma");
        let value = normal.sample(&mut rng);
        Self { rng, normal, decay: (-VEHICLE_DT / p.time).exp(), value }
    }

    fn sample(&mut self) -> f64 {
        let v = self.value;
        self.value = self.decay * v + (1.0 - self.decay * self.decay).sqrt() * self.normal.sample(&mut self.rng);
        v
    }
}

#[derive(Debug, Clone)]
pub struct SessionOutput {
    pub log: RunLog,
    pub path: TrackPath,
    /// Streaming metrics accumulated during the run.
    pub report: MetricsReport,
    pub ending: Option<Ending>,
}

impl SessionOutput {
    pub fn completed(&self) -> bool {
        self.ending == Some(Ending::Completed)
    }
}

/// Runs one session to its end.
pub fn run_session(cfg: SessionConfig, model: Option<Arc<SkillModel>>) -> Result<SessionOutput, HarnessError> {
    let mut s = Session::new(cfg, model)?;
    s.run_to_end()?;
    s.log.validate()?;
    Ok(s.into_output())
}
