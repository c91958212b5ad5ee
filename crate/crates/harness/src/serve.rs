//! Live-drive WebSocket service. One session per connection; message
//! schemas are documented in `docs/protocol.md`.

use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::serve::ListenerExt;
use axum::Router;
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tokio::time::MissedTickBehavior;

use skilldrive_core::guidance::GuidanceMethod;
use skilldrive_core::metrics::MetricsReport;
use skilldrive_core::plant::VEHICLE_DT;
use skilldrive_core::runlog::LogRow;
use skilldrive_core::track::TrackPath;
use skilldrive_core::units::ms_to_kmh;

use crate::config::{DriverSpec, PathSpec, SessionConfig};
use crate::session::{Ending, ExternalInput, Session, SkillModel};

pub const PROTOCOL_VERSION: u32 = 1;
/// Spacing of the midline polyline sent in `ready`, m.
pub const POLYLINE_STEP: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pacing {
    /// The server ticks at 50 Hz of wall-clock time.
    #[default]
    Realtime,
    /// The server ticks only when asked with `step`.
    Lockstep,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Start {
        #[serde(default)]
        config: Option<Box<SessionConfig>>,
        #[serde(default)]
        pacing: Pacing,
    },
    Input { input: ExternalInput },
    Step {
        #[serde(default = "one")]
        ticks: u32,
    },
    SetMethod { method: GuidanceMethod },
    Reset,
    Stop,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    BadMessage,
    BadConfig,
    NoSession,
    SessionEnded,
    WrongPacing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub tick: u64,
    pub t: f64,
    pub method: GuidanceMethod,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub v: f64,
    pub v_kmh: f64,
    pub s: f64,
    pub theta_s: f64,
    pub theta_a: f64,
    pub theta_b: f64,
    pub e_d: f64,
    pub e_delta: f64,
    pub e_p: f64,
    pub pred_s: f64,
    pub pred_a: f64,
    pub desired_s: f64,
    pub desired_a: f64,
    pub torque_s: f64,
    pub torque_a: f64,
    pub assist_s: f64,
    pub assist_a: f64,
    pub overspeed: bool,
    pub metrics: MetricsReport,
}

impl Frame {
    pub fn new(tick: u64, method: GuidanceMethod, row: &LogRow, metrics: MetricsReport) -> Self {
        Self {
            tick,
            t: row.t,
            method,
            x: row.x,
            y: row.y,
            heading: row.heading,
            v: row.v,
            v_kmh: ms_to_kmh(row.v),
            s: row.s,
            theta_s: row.theta_s,
            theta_a: row.theta_a,
            theta_b: row.theta_b,
            e_d: row.e_d,
            e_delta: row.e_delta,
            e_p: row.e_p,
            pred_s: row.pred_s,
            pred_a: row.pred_a,
            desired_s: row.desired_s,
            desired_a: row.desired_a,
            torque_s: row.fb_s,
            torque_a: row.fb_a,
            assist_s: row.assist_s,
            assist_a: row.assist_a,
            overspeed: row.overspeed,
            metrics,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Ready {
        protocol: u32,
        tick_hz: f64,
        pacing: Pacing,
        method: GuidanceMethod,
        has_model: bool,
        lane_width: f64,
        num_lanes: usize,
        total_length: f64,
        /// Midline points `[x, y]`, m.
        polyline: Vec<[f64; 2]>,
    },
    Frame(Box<Frame>),
    Ended { tick: u64, ending: Ending, metrics: MetricsReport },
    Error { code: ErrorCode, message: String },
}

impl ServerMessage {
    fn error(code: ErrorCode, message: impl Into<String>) -> Self {
        ServerMessage::Error { code, message: message.into() }
    }
}

/// Shared, read-only service state.
#[derive(Clone, Default)]
pub struct ServeState {
    pub model: Option<Arc<SkillModel>>,
}

/// Configuration used when `start` carries none: the 90-degree training
/// path driven from outside under guidance G.
pub fn default_live_config() -> SessionConfig {
    SessionConfig::new(PathSpec::Training { phi_deg: 90.0 }, GuidanceMethod::G, DriverSpec::External, 0)
}

pub fn midline_polyline(path: &TrackPath, step: f64) -> Vec<[f64; 2]> {
    let n = (path.total_length() / step).ceil() as usize;
    (0..=n)
        .map(|i| {
            let p = path.pose_at((i as f64 * step).min(path.total_length()));
            [p.x, p.y]
        })
        .collect()
}

struct Live {
    config: SessionConfig,
    pacing: Pacing,
    session: Session,
    ended_sent: bool,
}

/// Per-connection protocol state machine, independent of the transport.
pub struct Connection {
    state: ServeState,
    live: Option<Live>,
}

impl Connection {
    pub fn new(state: ServeState) -> Self {
        Self { state, live: None }
    }

    /// Whether the server should tick this connection on its own clock.
    pub fn is_realtime(&self) -> bool {
        self.live.as_ref().is_some_and(|l| l.pacing == Pacing::Realtime && !l.ended_sent)
    }

    fn start(&mut self, config: SessionConfig, pacing: Pacing) -> Vec<ServerMessage> {
        match Session::new(config.clone(), self.state.model.clone()) {
            Ok(session) => {
                let path = session.path();
                let ready = ServerMessage::Ready {
                    protocol: PROTOCOL_VERSION,
                    tick_hz: 1.0 / VEHICLE_DT,
                    pacing,
                    method: session.method(),
                    has_model: self.state.model.is_some(),
                    lane_width: path.lane_width(),
                    num_lanes: path.num_lanes(),
                    total_length: path.total_length(),
                    polyline: midline_polyline(path, POLYLINE_STEP),
                };
                self.live = Some(Live { config, pacing, session, ended_sent: false });
                vec![ready]
            }
            Err(e) => vec![ServerMessage::error(ErrorCode::BadConfig, e.to_string())],
        }
    }

    /// Advances the session by one tick and returns the resulting messages.
    pub fn tick(&mut self) -> Vec<ServerMessage> {
        let Some(live) = self.live.as_mut() else {
            return vec![ServerMessage::error(ErrorCode::NoSession, "no session; send `start` first")];
        };
        if live.ended_sent {
            return vec![ServerMessage::error(ErrorCode::SessionEnded, "session has ended; send `reset` or `start`")];
        }
        let s = &mut live.session;
        let tick = s.tick();
        let mut out = Vec::with_capacity(2);
        match s.step() {
            Ok(Some(row)) => out.push(ServerMessage::Frame(Box::new(Frame::new(tick, s.method(), &row, s.metrics())))),
            Ok(None) => {}
            Err(e) => {
                live.ended_sent = true;
                out.push(ServerMessage::error(ErrorCode::SessionEnded, e.to_string()));
                return out;
            }
        }
        if let Some(ending) = s.ending() {
            live.ended_sent = true;
            out.push(ServerMessage::Ended { tick: s.tick(), ending, metrics: s.metrics() });
        }
        out
    }

    /// Handles one text frame from the client.
    pub fn handle_text(&mut self, text: &str) -> Vec<ServerMessage> {
        let msg: ClientMessage = match serde_json::from_str(text) {
            Ok(m) => m,
            Err(e) => return vec![ServerMessage::error(ErrorCode::BadMessage, e.to_string())],
        };
        match msg {
            ClientMessage::Start { config, pacing } => self.start(config.map_or_else(default_live_config, |c| *c), pacing),
            ClientMessage::Input { input } => match self.live.as_mut() {
                Some(live) => {
                    live.session.set_external_input(input);
                    Vec::new()
                }
                None => vec![ServerMessage::error(ErrorCode::NoSession, "no session; send `start` first")],
            },
            ClientMessage::Step { ticks } => match self.live.as_ref().map(|l| l.pacing) {
                None => vec![ServerMessage::error(ErrorCode::NoSession, "no session; send `start` first")],
                Some(Pacing::Realtime) => {
                    vec![ServerMessage::error(ErrorCode::WrongPacing, "`step` is only accepted in lockstep pacing")]
                }
                Some(Pacing::Lockstep) => {
                    let mut out = Vec::new();
                    for _ in 0..ticks {
                        let msgs = self.tick();
                        let stop = msgs.iter().any(|m| !matches!(m, ServerMessage::Frame(_)));
                        out.extend(msgs);
                        if stop {
                            break;
                        }
                    }
                    out
                }
            },
            ClientMessage::SetMethod { method } => match self.live.as_mut() {
                Some(live) => {
                    live.session.set_method(method);
                    Vec::new()
                }
                None => vec![ServerMessage::error(ErrorCode::NoSession, "no session; send `start` first")],
            },
            ClientMessage::Reset => match self.live.take() {
                Some(live) => self.start(live.config, live.pacing),
                None => vec![ServerMessage::error(ErrorCode::NoSession, "no session; send `start` first")],
            },
            ClientMessage::Stop => match self.live.take() {
                Some(live) => vec![ServerMessage::Ended {
                    tick: live.session.tick(),
                    ending: live.session.ending().unwrap_or(Ending::Stopped),
                    metrics: live.session.metrics(),
                }],
                None => vec![ServerMessage::error(ErrorCode::NoSession, "no session; send `start` first")],
            },
        }
    }
}

pub fn router(state: ServeState) -> Router {
    Router::new().route("/ws", get(upgrade)).with_state(state)
}

async fn upgrade(ws: WebSocketUpgrade, State(state): State<ServeState>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| drive(socket, state))
}

async fn send_all(socket: &mut WebSocket, msgs: Vec<ServerMessage>) -> bool {
    for m in msgs {
        let text = serde_json::to_string(&m).expect("server messages serialize");
        if socket.send(Message::Text(text.into())).await.is_err() {
            return false;
        }
    }
    true
}

async fn drive(mut socket: WebSocket, state: ServeState) {
    let mut conn = Connection::new(state);
    let mut clock = tokio::time::interval(Duration::from_secs_f64(VEHICLE_DT));
    clock.set_missed_tick_behavior(MissedTickBehavior::Delay);
    loop {
        let realtime = conn.is_realtime();
        let out = tokio::select! {
            msg = socket.recv() => match msg {
                Some(Ok(Message::Text(text))) => conn.handle_text(text.as_str()),
                Some(Ok(Message::Binary(_))) => {
                    vec![ServerMessage::error(ErrorCode::BadMessage, "binary frames are not part of the protocol")]
                }
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                Some(Ok(_)) => Vec::new(),
            },
            _ = clock.tick(), if realtime => conn.tick(),
        };
        if !send_all(&mut socket, out).await {
            break;
        }
    }
}

/// Serves the protocol at `/ws` until the listener fails.
pub async fn serve(listener: TcpListener, state: ServeState) -> std::io::Result<()> {
    // frames are small and latency-bound
    let listener = listener.tap_io(|tcp| {
        let _ = tcp.set_nodelay(true);
    });
    axum::serve(listener, router(state)).await
}
