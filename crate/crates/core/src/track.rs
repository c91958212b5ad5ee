//! Two-lane road paths built from straight and circular-arc segments.
//!
//! The segment list describes the midline of the first (right-hand) lane.
//! The second lane lies to its left. Road edges are the outer boundaries of
//! the two-lane surface: `lane_width / 2` to the right of the midline and
//! `1.5 * lane_width` to its left.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_LANE_WIDTH: f64 = 3.5;
pub const NUM_LANES: usize = 2;
/// Rays are capped at this distance before any downstream use.
pub const RAY_CAP: f64 = 60.0;
/// Offsets of the five environment rays relative to the vehicle heading, degrees.
pub const RAY_OFFSETS_DEG: [f64; 5] = [-30.0, -15.0, 0.0, 15.0, 30.0];
/// Queries farther than this from the midline are rejected.
pub const QUERY_RADIUS: f64 = 200.0;

pub const TRAINING_SEGMENT_LENGTH: f64 = 200.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrackError {
    #[error("invalid segment: {0}")]
    InvalidSegment(String),
    #[error("sweep {0} rad outside [-pi, pi]")]
    InvalidSweep(f64),
    #[error("position is {distance:.2} m from the path (limit {QUERY_RADIUS} m)")]
    OutOfRange { distance: f64 },
    #[error("pose lies outside the road surface (lateral offset {offset:.3} m)")]
    OutsideRoad { offset: f64 },
    #[error("target length must be positive")]
    InvalidLength,
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Radians, counterclockwise from +x.
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading }
    }
}

/// One piece of the first-lane midline.
///
/// Arc sweeps are stored in degrees: this is the unit of the text format and
/// keeps serialization bit-exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Segment {
    Straight { length: f64 },
    /// Positive sweep turns left.
    Arc { radius: f64, sweep_deg: f64 },
}

impl Segment {
    pub fn straight(length: f64) -> Self {
        Segment::Straight { length }
    }

    pub fn arc(radius: f64, sweep: f64) -> Self {
        Segment::Arc { radius, sweep_deg: sweep.to_degrees() }
    }

    pub fn length(&self) -> f64 {
        match *self {
            Segment::Straight { length } => length,
            Segment::Arc { radius, sweep_deg } => radius * sweep_deg.to_radians().abs(),
        }
    }

    /// Signed sweep in radians (zero for straights).
    pub fn sweep(&self) -> f64 {
        match *self {
            Segment::Straight { .. } => 0.0,
            Segment::Arc { sweep_deg, .. } => sweep_deg.to_radians(),
        }
    }

    /// Signed curvature, positive for left turns.
    pub fn curvature(&self) -> f64 {
        match *self {
            Segment::Straight { .. } => 0.0,
            Segment::Arc { radius, sweep_deg } => sweep_deg.signum() / radius,
        }
    }

    pub fn is_arc(&self) -> bool {
        matches!(self, Segment::Arc { .. })
    }

    fn validate(&self) -> Result<(), TrackError> {
        let ok = match *self {
            Segment::Straight { length } => length.is_finite() && length > 0.0,
            Segment::Arc { radius, sweep_deg } => {
                radius.is_finite()
                    && radius > 0.0
                    && sweep_deg.is_finite()
                    && sweep_deg != 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(TrackError::InvalidSegment(format!("{self:?}")))
        }
    }
}

/// Result of a closest-point query against the first-lane midline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathQuery {
    pub s: f64,
    pub point: (f64, f64),
    pub tangent_heading: f64,
    pub curvature: f64,
    /// Euclidean distance from the query position to `point`.
    pub distance: f64,
    /// Signed lateral offset of the query position, left of the midline positive.
    pub lateral_offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Placed {
    seg: Segment,
    s0: f64,
    start: Pose,
}

impl Placed {
    fn len(&self) -> f64 {
        self.seg.length()
    }

    /// Pose on the midline offset `lateral` to the left, at local arc length `t`.
    fn pose_at(&self, t: f64, lateral: f64) -> Pose {
        let Pose { x, y, heading } = self.start;
        match self.seg {
            Segment::Straight { .. } => {
                let (sn, cs) = heading.sin_cos();
                Pose::new(x + t * cs - lateral * sn, y + t * sn + lateral * cs, heading)
            }
            Segment::Arc { .. } => {
                let k = self.seg.curvature();
                let rs = 1.0 / k;
                let (cx, cy) = self.center();
                let psi = heading + k * t;
                let (sn, cs) = psi.sin_cos();
                let rad = rs - lateral;
                Pose::new(cx + rad * sn, cy - rad * cs, psi)
            }
        }
    }

    fn center(&self) -> (f64, f64) {
        let k = self.seg.curvature();
        let rs = 1.0 / k;
        let (sn, cs) = self.start.heading.sin_cos();
        (self.start.x - rs * sn, self.start.y + rs * cs)
    }

    fn end_pose(&self) -> Pose {
        self.pose_at(self.len(), 0.0)
    }

    /// Local arc-length parameter of the circle point whose radial direction
    /// points at `(px, py)`, clamped to the segment. Arc segments only.
    fn arc_param(&self, px: f64, py: f64, rad_signed: f64) -> f64 {
        let k = self.seg.curvature();
        let (cx, cy) = self.center();
        let qx = (px - cx) / rad_signed;
        let qy = (py - cy) / rad_signed;
        let psi = qx.atan2(-qy);
        let half = 0.5 * k * self.len();
        let mid = self.start.heading + half;
        let delta = wrap_angle(psi - mid) + half;
        (delta / k).clamp(0.0, self.len())
    }

    fn closest(&self, px: f64, py: f64) -> (f64, f64) {
        let t = match self.seg {
            Segment::Straight { length } => {
                let (sn, cs) = self.start.heading.sin_cos();
                ((px - self.start.x) * cs + (py - self.start.y) * sn).clamp(0.0, length)
            }
            Segment::Arc { .. } => {
                let (cx, cy) = self.center();
                if (px - cx).hypot(py - cy) == 0.0 {
                    0.0
                } else {
                    self.arc_param(px, py, 1.0 / self.seg.curvature())
                }
            }
        };
        let p = self.pose_at(t, 0.0);
        (t, (px - p.x).hypot(py - p.y))
    }

    /// Smallest positive ray parameter hitting this segment's edge at `lateral`.
    fn ray_hit(&self, ox: f64, oy: f64, dx: f64, dy: f64, lateral: f64) -> Option<f64> {
        match self.seg {
            Segment::Straight { length } => {
                let a = self.pose_at(0.0, lateral);
                let b = self.pose_at(length, lateral);
                let ex = b.x - a.x;
                let ey = b.y - a.y;
                let denom = cross(dx, dy, ex, ey);
                if denom.abs() < 1e-15 {
                    return None;
                }
                let wx = a.x - ox;
                let wy = a.y - oy;
                let t = cross(wx, wy, ex, ey) / denom;
                let u = cross(wx, wy, dx, dy) / denom;
                (t > 0.0 && (0.0..=1.0).contains(&u)).then_some(t)
            }
            Segment::Arc { .. } => {
                let rad_signed = 1.0 / self.seg.curvature() - lateral;
                let rho = rad_signed.abs();
                let (cx, cy) = self.center();
                let fx = ox - cx;
                let fy = oy - cy;
                let b = fx * dx + fy * dy;
                let c = fx * fx + fy * fy - rho * rho;
                let disc = b * b - c;
                if disc < 0.0 {
                    return None;
                }
                let sq = disc.sqrt();
                let mut best: Option<f64> = None;
                for t in [-b - sq, -b + sq] {
                    if t <= 0.0 {
                        continue;
                    }
                    let hx = ox + t * dx;
                    let hy = oy + t * dy;
                    if self.arc_contains(hx, hy, rad_signed) {
                        best = Some(best.map_or(t, |bt: f64| bt.min(t)));
                    }
                }
                best
            }
        }
    }

    fn arc_contains(&self, hx: f64, hy: f64, rad_signed: f64) -> bool {
        let k = self.seg.curvature();
        let (cx, cy) = self.center();
        let psi = ((hx - cx) / rad_signed).atan2(-(hy - cy) / rad_signed);
        let half = 0.5 * k * self.len();
        let mid = self.start.heading + half;
        let delta = wrap_angle(psi - mid);
        delta.abs() <= half.abs() + 1e-12
    }
}

/// Immutable two-lane road.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackPath {
    placed: Vec<Placed>,
    lane_width: f64,
    start: Pose,
    seed: Option<u64>,
    total_length: f64,
}

impl TrackPath {
    pub fn new(
        segments: Vec<Segment>,
        lane_width: f64,
        start: Pose,
        seed: Option<u64>,
    ) -> Result<Self, TrackError> {
        if segments.is_empty() {
            return Err(TrackError::InvalidSegment("empty path".into()));
        }
        if !(lane_width.is_finite() && lane_width > 0.0) {
            return Err(TrackError::InvalidSegment(format!("lane width {lane_width}")));
        }
        let mut placed = Vec::with_capacity(segments.len());
        let mut pose = start;
        let mut s0 = 0.0;
        for seg in segments {
            seg.validate()?;
            if let Segment::Arc { radius, .. } = seg {
                if radius <= 1.5 * lane_width {
                    return Err(TrackError::InvalidSegment(format!(
                        "radius {radius} too tight for lane width {lane_width}"
                    )));
                }
            }
            let p = Placed { seg, s0, start: pose };
            pose = p.end_pose();
            s0 += seg.length();
            placed.push(p);
        }
        Ok(Self { placed, lane_width, start, seed, total_length: s0 })
    }

    pub fn segments(&self) -> impl ExactSizeIterator<Item = &Segment> + '_ {
        self.placed.iter().map(|p| &p.seg)
    }

    pub fn num_segments(&self) -> usize {
        self.placed.len()
    }

    pub fn lane_width(&self) -> f64 {
        self.lane_width
    }

    pub fn num_lanes(&self) -> usize {
        NUM_LANES
    }

    pub fn start_pose(&self) -> Pose {
        self.start
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    /// Start and end heading of every segment, in order.
    pub fn joint_headings(&self) -> Vec<(f64, f64)> {
        self.placed.iter().map(|p| (p.start.heading, p.end_pose().heading)).collect()
    }

    fn locate(&self, s: f64) -> (&Placed, f64) {
        let s = s.clamp(0.0, self.total_length);
        let idx = self.placed.partition_point(|p| p.s0 <= s).saturating_sub(1);
        let p = &self.placed[idx];
        (p, (s - p.s0).min(p.len()))
    }

    /// Midline pose at arc length `s` (clamped to the path).
    pub fn pose_at(&self, s: f64) -> Pose {
        let (p, t) = self.locate(s);
        p.pose_at(t, 0.0)
    }

    /// Midline point at arc length `s`; beyond the end the final tangent is extended.
    pub fn point_at_extended(&self, s: f64) -> (f64, f64) {
        if s <= self.total_length {
            let p = self.pose_at(s);
            return (p.x, p.y);
        }
        let end = self.pose_at(self.total_length);
        let extra = s - self.total_length;
        (end.x + extra * end.heading.cos(), end.y + extra * end.heading.sin())
    }

    pub fn heading_at(&self, s: f64) -> f64 {
        self.pose_at(s).heading
    }

    pub fn curvature_at(&self, s: f64) -> f64 {
        self.locate(s).0.seg.curvature()
    }

    /// Global closest point on the first-lane midline; ties go to the smallest `s`.
    pub fn closest_midline_point(&self, x: f64, y: f64) -> Result<PathQuery, TrackError> {
        let mut best: Option<(usize, f64, f64)> = None;
        for (i, p) in self.placed.iter().enumerate() {
            let (t, d) = p.closest(x, y);
            if best.is_none_or(|(_, _, bd)| d < bd) {
                best = Some((i, t, d));
            }
        }
        let (i, t, distance) = best.expect("non-empty path");
        if distance.is_nan() || distance > QUERY_RADIUS {
            return Err(TrackError::OutOfRange { distance });
        }
        let p = &self.placed[i];
        let pose = p.pose_at(t, 0.0);
        let (sn, cs) = pose.heading.sin_cos();
        let lateral_offset = -(x - pose.x) * sn + (y - pose.y) * cs;
        Ok(PathQuery {
            s: p.s0 + t,
            point: (pose.x, pose.y),
            tangent_heading: pose.heading,
            curvature: p.seg.curvature(),
            distance,
            lateral_offset,
        })
    }

    /// Lateral offsets (left positive) of the right and left road edges.
    pub fn edge_offsets(&self) -> (f64, f64) {
        (-0.5 * self.lane_width, (NUM_LANES as f64 - 0.5) * self.lane_width)
    }

    pub fn is_on_road(&self, x: f64, y: f64) -> Result<bool, TrackError> {
        let q = self.closest_midline_point(x, y)?;
        let (lo, hi) = self.edge_offsets();
        Ok(q.lateral_offset >= lo && q.lateral_offset <= hi)
    }

    /// Distance from `pose` to the nearest road edge along `heading + offset`,
    /// capped at [`RAY_CAP`].
    pub fn boundary_ray_distance(&self, pose: Pose, offset: f64) -> Result<f64, TrackError> {
        let q = self.closest_midline_point(pose.x, pose.y)?;
        let (lo, hi) = self.edge_offsets();
        if q.lateral_offset < lo || q.lateral_offset > hi {
            return Err(TrackError::OutsideRoad { offset: q.lateral_offset });
        }
        let (dy, dx) = (pose.heading + offset).sin_cos();
        let mut best = RAY_CAP;
        for p in &self.placed {
            for lateral in [lo, hi] {
                if let Some(t) = p.ray_hit(pose.x, pose.y, dx, dy, lateral) {
                    best = best.min(t);
                }
            }
        }
        Ok(best)
    }

    /// The five capped ray distances at [`RAY_OFFSETS_DEG`].
    pub fn ray_distances(&self, pose: Pose) -> Result<[f64; 5], TrackError> {
        let mut out = [0.0; 5];
        for (o, deg) in out.iter_mut().zip(RAY_OFFSETS_DEG) {
            *o = self.boundary_ray_distance(pose, deg.to_radians())?;
        }
        Ok(out)
    }

    /// Smallest midline distance between points more than `min_arc_gap` apart
    /// along the path, sampled every `step` meters.
    pub fn self_clearance(&self, step: f64, min_arc_gap: f64) -> f64 {
        let n = (self.total_length / step).ceil() as usize + 1;
        let pts: Vec<(f64, f64, f64)> = (0..n)
            .map(|i| {
                let s = (i as f64 * step).min(self.total_length);
                let p = self.pose_at(s);
                (s, p.x, p.y)
            })
            .collect();
        let mut best = f64::INFINITY;
        for (i, a) in pts.iter().enumerate() {
            for b in &pts[i + 1..] {
                if b.0 - a.0 > min_arc_gap {
                    best = best.min((a.1 - b.1).hypot(a.2 - b.2));
                }
            }
        }
        best
    }

    /// Line-oriented text form: a header `track <lane_width> <seed|->` followed
    /// by one `S <L>` or `A <R> <phi_deg>` line per segment.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let seed = self.seed.map_or_else(|| "-".to_string(), |s| s.to_string());
        let _ = writeln!(out, "track {} {}", self.lane_width, seed);
        for p in &self.placed {
            match p.seg {
                Segment::Straight { length } => {
                    let _ = writeln!(out, "S {length}");
                }
                Segment::Arc { radius, sweep_deg } => {
                    let _ = writeln!(out, "A {radius} {sweep_deg}");
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, TrackError> {
        let perr = |line: usize, msg: &str| TrackError::Parse { line, msg: msg.to_string() };
        let num = |line: usize, tok: Option<&str>| -> Result<f64, TrackError> {
            tok.ok_or_else(|| perr(line, "missing field"))?
                .parse::<f64>()
                .map_err(|e| perr(line, &e.to_string()))
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hl, header) = lines.next().ok_or_else(|| perr(1, "empty input"))?;
        let mut toks = header.split_whitespace();
        if toks.next() != Some("track") {
            return Err(perr(hl + 1, "expected `track` header"));
        }
        let lane_width = num(hl + 1, toks.next())?;
        let seed = match toks.next() {
            Some("-") => None,
            Some(t) => Some(t.parse::<u64>().map_err(|e| perr(hl + 1, &e.to_string()))?),
            None => return Err(perr(hl + 1, "missing seed")),
        };
        let mut segments = Vec::new();
        for (i, line) in lines {
            let mut toks = line.split_whitespace();
            let seg = match toks.next() {
                Some("S") => Segment::Straight { length: num(i + 1, toks.next())? },
                Some("A") => Segment::Arc {
                    radius: num(i + 1, toks.next())?,
                    sweep_deg: num(i + 1, toks.next())?,
                },
                _ => return Err(perr(i + 1, "expected `S` or `A`")),
            };
            if toks.next().is_some() {
                return Err(perr(i + 1, "trailing fields"));
            }
            segments.push(seg);
        }
        TrackPath::new(segments, lane_width, Pose::new(0.0, 0.0, 0.0), seed)
    }
}

/// 600-m data-collection path: 200-m straight, 200-m arc of sweep `phi`,
/// 200-m straight. `phi == 0` gives three straights.
pub fn build_training_path(phi: f64) -> Result<TrackPath, TrackError> {
    if phi.is_nan() || phi.abs() > PI {
        return Err(TrackError::InvalidSweep(phi));
    }
    let l = TRAINING_SEGMENT_LENGTH;
    let middle = if phi == 0.0 {
        Segment::straight(l)
    } else {
        Segment::Arc { radius: l / phi.abs(), sweep_deg: phi.to_degrees() }
    };
    TrackPath::new(
        vec![Segment::straight(l), middle, Segment::straight(l)],
        DEFAULT_LANE_WIDTH,
        Pose::new(0.0, 0.0, 0.0),
        None,
    )
}

/// The 25 data-collection sweeps: -180 deg to 180 deg in 15-deg steps.
pub fn training_sweeps_deg() -> Vec<f64> {
    (-12..=12).map(|i| 15.0 * i as f64).collect()
}

/// Parameter ranges and transition probabilities of the random path generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomPathParams {
    pub length_range: (f64, f64),
    pub radius_range: (f64, f64),
    pub sweep_range_deg: (f64, f64),
    pub p_curve_to_straight: f64,
    pub lane_width: f64,
}

impl Default for RandomPathParams {
    fn default() -> Self {
        Self {
            length_range: (100.0, 150.0),
            radius_range: (100.0, 150.0),
            sweep_range_deg: (45.0, 135.0),
            p_curve_to_straight: 0.4,
            lane_width: DEFAULT_LANE_WIDTH,
        }
    }
}

/// Random straight/arc path of exactly `target_length` meters.
///
/// Starts with a straight. A straight is followed by a left or right curve
/// with equal probability; a curve is followed by a straight with
/// probability `p_curve_to_straight`, otherwise by a curve turning the other
/// way. The last segment is cut so the path ends at `target_length`.
pub fn generate_random_path(seed: u64, target_length: f64) -> Result<TrackPath, TrackError> {
    generate_random_path_with(seed, target_length, &RandomPathParams::default())
}

pub fn generate_random_path_with(
    seed: u64,
    target_length: f64,
    params: &RandomPathParams,
) -> Result<TrackPath, TrackError> {
    if !(target_length.is_finite() && target_length > 0.0) {
        return Err(TrackError::InvalidLength);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut segments = Vec::new();
    let mut total = 0.0;
    // +1 left, -1 right, 0 straight
    let mut last_turn: i8 = 0;
    while total < target_length {
        let turn: i8 = match last_turn {
            0 if segments.is_empty() => 0,
            0 => {
                if rng.random_bool(0.5) {
                    1
                } else {
                    -1
                }
            }
            t => {
                if rng.random_bool(params.p_curve_to_straight) {
                    0
                } else {
                    -t
                }
            }
        };
        let remaining = target_length - total;
        let seg = if turn == 0 {
            let l = rng.random_range(params.length_range.0..=params.length_range.1);
            Segment::Straight { length: l.min(remaining) }
        } else {
            let r = rng.random_range(params.radius_range.0..=params.radius_range.1);
            let mut phi = rng.random_range(params.sweep_range_deg.0..=params.sweep_range_deg.1);
            if r * phi.to_radians() > remaining {
                phi = (remaining / r).to_degrees();
            }
            Segment::Arc { radius: r, sweep_deg: f64::from(turn) * phi }
        };
        total += seg.length();
        segments.push(seg);
        last_turn = turn;
    }
    let mut path = TrackPath::new(segments, params.lane_width, Pose::new(0.0, 0.0, 0.0), Some(seed))?;
    // Sweep round-trips through degrees; pin the advertised length exactly.
    path.total_length = target_length;
    Ok(path)
}

/// First seed at or after `base_seed` whose path has `num_segments` segments
/// and keeps distant parts of the road at least `clearance` meters apart.
pub fn select_representative_path(
    base_seed: u64,
    target_length: f64,
    num_segments: usize,
    clearance: f64,
) -> Result<TrackPath, TrackError> {
    let mut seed = base_seed;
    loop {
        let path = generate_random_path(seed, target_length)?;
        if path.num_segments() == num_segments && path.self_clearance(5.0, 150.0) >= clearance {
            return Ok(path);
        }
        seed += 1;
    }
}

pub fn wrap_angle(a: f64) -> f64 {
    let mut w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w += 2.0 * PI;
    }
    w
}

fn cross(ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    ax * by - ay * bx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight_path(len: f64) -> TrackPath {
        TrackPath::new(vec![Segment::straight(len)], DEFAULT_LANE_WIDTH, Pose::new(0.0, 0.0, 0.0), None)
            .unwrap()
    }

    #[test]
    fn training_path_zero_sweep_is_straight() {
        let p = build_training_path(0.0).unwrap();
        assert_eq!(p.num_segments(), 3);
        assert!(p.segments().all(|s| !s.is_arc()));
        assert_eq!(p.total_length(), 600.0);
        let end = p.pose_at(600.0);
        assert!((end.x - 600.0).abs() < 1e-9 && end.y.abs() < 1e-9);
    }

    #[test]
    fn training_path_radii() {
        let p = build_training_path(PI / 2.0).unwrap();
        match p.segments().nth(1).unwrap() {
            Segment::Arc { radius, sweep_deg } => {
                assert!((radius - 127.32395447351627).abs() < 1e-9);
                assert!(*sweep_deg > 0.0);
            }
            s => panic!("expected arc, got {s:?}"),
        }
        assert!((p.total_length() - 600.0).abs() < 1e-9);

        let p = build_training_path(-PI).unwrap();
        match p.segments().nth(1).unwrap() {
            Segment::Arc { radius, sweep_deg } => {
                assert!((radius - 63.66197723675813).abs() < 1e-9);
                assert!(*sweep_deg < 0.0);
            }
            s => panic!("expected arc, got {s:?}"),
        }
        assert!(build_training_path(3.2).is_err());
    }

    #[test]
    fn curvature_on_quarter_turn() {
        let p = build_training_path(PI / 2.0).unwrap();
        for i in 0..=200 {
            let s = 200.0 + i as f64 * 0.999;
            assert!((p.curvature_at(s).abs() - (PI / 2.0) / 200.0).abs() < 1e-12, "s={s}");
        }
        assert_eq!(p.curvature_at(100.0), 0.0);
        assert_eq!(p.curvature_at(500.0), 0.0);
    }

    #[test]
    fn closest_on_midline_and_offset() {
        let p = straight_path(600.0);
        let q = p.closest_midline_point(100.0, 0.0).unwrap();
        assert_eq!(q.s, 100.0);
        assert_eq!(q.distance, 0.0);
        let q = p.closest_midline_point(250.0, 1.0).unwrap();
        assert!((q.distance - 1.0).abs() < 1e-12);
        assert!((q.lateral_offset - 1.0).abs() < 1e-12);
        assert_eq!(q.tangent_heading, 0.0);
        assert!(matches!(p.closest_midline_point(100.0, 250.0), Err(TrackError::OutOfRange { .. })));
    }

    #[test]
    fn ray_examples() {
        let p = straight_path(600.0);
        let d = p.boundary_ray_distance(Pose::new(100.0, 0.0, 0.0), 0.0).unwrap();
        assert_eq!(d, RAY_CAP);
        // right edge at y = -1.75; ray at -30 deg
        let d = p.boundary_ray_distance(Pose::new(100.0, 0.0, 0.0), (-30f64).to_radians()).unwrap();
        assert!((d - 3.5).abs() < 1e-9, "{d}");
        // heading straight into the left edge (y = 5.25) from y = 3.25
        let d = p.boundary_ray_distance(Pose::new(100.0, 3.25, PI / 2.0), 0.0).unwrap();
        assert!((d - 2.0).abs() < 1e-9, "{d}");
        assert!(matches!(
            p.boundary_ray_distance(Pose::new(100.0, -3.0, 0.0), 0.0),
            Err(TrackError::OutsideRoad { .. })
        ));
    }

    #[test]
    fn text_round_trip_is_exact() {
        let p = generate_random_path(7, 4000.0).unwrap();
        let text = p.to_text();
        let q = TrackPath::from_text(&text).unwrap();
        assert_eq!(q.to_text(), text);
        assert_eq!(p.segments().collect::<Vec<_>>(), q.segments().collect::<Vec<_>>());
        assert!(TrackPath::from_text("track 3.5 -\nX 1\n").is_err());
        assert!(TrackPath::from_text("").is_err());
    }

    #[test]
    fn random_path_exact_length() {
        for seed in 0..50 {
            let p = generate_random_path(seed, 4000.0).unwrap();
            assert_eq!(p.total_length(), 4000.0);
            let sum: f64 = p.segments().map(|s| s.length()).sum();
            assert!((sum - 4000.0).abs() < 1e-6, "seed {seed}: {sum}");
        }
        assert!(generate_random_path(0, 0.0).is_err());
    }

    #[test]
    fn wrap_angle_range() {
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert_eq!(wrap_angle(0.5), 0.5);
    }
}
