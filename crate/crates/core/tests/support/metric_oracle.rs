//! Brute-force metric oracle shared by the metric tests and the acceptance run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skilldrive_core::guidance::GuidanceMethod;
use skilldrive_core::metrics::{pose_errors, MetricsAccumulator, MetricsReport};
use skilldrive_core::plant::VEHICLE_DT;
use skilldrive_core::runlog::{LogRow, RunLog};
use skilldrive_core::skillnet::{compute_env_features, Channel, FeatureRow, Normalizer, PredictionStream, SkillNet, NUM_INPUTS};
use skilldrive_core::track::{wrap_angle, TrackPath};
use skilldrive_core::units::target_speed;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_nets(rng: &mut ChaCha8Rng) -> (SkillNet, SkillNet) {
    let rows: Vec<FeatureRow> = (0..50)
        .map(|_| FeatureRow {
            theta_s: rng.random_range(-60.0..60.0),
            theta_a: rng.random_range(0.0..10.0),
            v: rng.random_range(0.0..20.0),
            yaw_rate: rng.random_range(-20.0..20.0),
            rpm: rng.random_range(800.0..2400.0),
            z: compute_env_features([rng.random_range(0.0..60.0); 5]),
        })
        .collect();
    let s = SkillNet::new_random(Channel::Steer, Normalizer::fit(&rows, Channel::Steer), rng.random());
    let a = SkillNet::new_random(Channel::Accel, Normalizer::fit(&rows, Channel::Accel), rng.random());
    (s, a)
}

/// Random drive along `path`: lateral wander, heading noise, a speed ramp
/// through the target speed and a pedal whose angle integrates its logged rate.
pub fn random_log(rng: &mut ChaCha8Rng, path: &TrackPath, nets: &(SkillNet, SkillNet)) -> RunLog {
    let n = rng.random_range(60..600);
    let mut log = RunLog::new(GuidanceMethod::N);
    let mut stream = PredictionStream::new();
    let (mut s, mut lat, mut v, mut theta_s, mut theta_a) = (5.0f64, 0.0f64, 12.0f64, 0.0f64, 3.0f64);
    let v_peak = target_speed() + rng.random_range(-1.0..2.0);
    for k in 0..n {
        let rate_a = if k == 0 { 0.0 } else { rng.random_range(-20.0..20.0) };
        theta_a += rate_a * VEHICLE_DT;
        theta_s += rng.random_range(-3.0..3.0);
        lat = (lat + rng.random_range(-0.1..0.1)).clamp(-1.6, 1.6);
        v = (v + rng.random_range(-0.2..0.5)).min(v_peak);
        s += v * VEHICLE_DT;
        let mid = path.pose_at(s);
        let heading = mid.heading + rng.random_range(-0.1..0.1);
        let (x, y) = (mid.x - lat * mid.heading.sin(), mid.y + lat * mid.heading.cos());
        let (e_d, e_delta) = pose_errors(path, x, y, heading).unwrap();
        let mut row = LogRow {
            t: k as f64 * VEHICLE_DT,
            x,
            y,
            heading,
            v,
            yaw_rate: rng.random_range(-15.0..15.0),
            rpm: rng.random_range(800.0..2400.0),
            s,
            e_d,
            e_delta,
            theta_s,
            theta_a,
            theta_a_rate: rate_a,
            d: [(); 5].map(|_| rng.random_range(0.0..60.0)),
            ..LogRow::default()
        };
        let p = stream.step(FeatureRow::from_log_row(&row), Some(&nets.0), Some(&nets.1));
        row.pred_s = p.steer;
        row.pred_a = p.accel;
        log.rows.push(row);
    }
    log
}

/// Closest midline point by a coarse scan, then bisection on the sign of the
/// offset's component along the tangent (negative behind the foot point).
pub fn oracle_closest(path: &TrackPath, x: f64, y: f64) -> (f64, f64) {
    let dist = |s: f64| {
        let p = path.pose_at(s);
        (p.x - x).hypot(p.y - y)
    };
    let along = |s: f64| {
        let p = path.pose_at(s);
        (p.x - x) * p.heading.cos() + (p.y - y) * p.heading.sin()
    };
    let step = 0.25;
    let n = (path.total_length() / step) as usize;
    let best = (0..=n).map(|i| (i as f64 * step).min(path.total_length())).min_by(|a, b| dist(*a).total_cmp(&dist(*b))).unwrap();
    let (mut lo, mut hi) = ((best - step).max(0.0), (best + step).min(path.total_length()));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if along(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    let p = path.pose_at(s);
    let left = -(x - p.x) * p.heading.sin() + (y - p.y) * p.heading.cos();
    (left, p.heading)
}

pub fn rms(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
    }
}

pub struct Oracle {
    pub es: f64,
    pub ea: f64,
    pub e_d: f64,
    pub e_delta: f64,
    pub e_v: Option<f64>,
    pub omega_a: f64,
    pub omega_a_fd: f64,
}

/// Brute-force recomputation from the raw rows, with its own window indexing.
pub fn oracle(log: &RunLog, path: &TrackPath, nets: &(SkillNet, SkillNet)) -> Oracle {
    let rows = &log.rows;
    let (mut err_s, mut err_a) = (Vec::new(), Vec::new());
    for k in 40..rows.len().saturating_sub(10) {
        for (net, errs, control) in [
            (&nets.0, &mut err_s, (|r: &LogRow| r.theta_s) as fn(&LogRow) -> f64),
            (&nets.1, &mut err_a, |r: &LogRow| r.theta_a),
        ] {
            let mut inputs = [0.0; NUM_INPUTS];
            for tap in 0..5 {
                let r = &rows[k - 10 * tap];
                let z = compute_env_features(r.d);
                let ch = [control(r), r.v, r.yaw_rate, r.rpm, z[0], z[1], z[2], z[3], z[4]];
                inputs[tap * 9..tap * 9 + 9].copy_from_slice(&ch);
            }
            errs.push(net.predict(&inputs) - control(&rows[k + 10]));
        }
    }
    let mut ed = Vec::new();
    let mut edelta = Vec::new();
    for r in rows {
        let (left, tangent) = oracle_closest(path, r.x, r.y);
        ed.push(left);
        edelta.push(wrap_angle(r.heading - tangent).to_degrees());
    }
    let vd = target_speed();
    let e_v = rows.iter().position(|r| r.v >= vd).map(|k| rms(&rows[k + 1..].iter().map(|r| r.v - vd).collect::<Vec<_>>()));
    let rates: Vec<f64> = rows.iter().map(|r| r.theta_a_rate.abs()).collect();
    let fd: Vec<f64> = std::iter::once(0.0)
        .chain(rows.windows(2).map(|w| ((w[1].theta_a - w[0].theta_a) / VEHICLE_DT).abs()))
        .collect();
    Oracle {
        es: rms(&err_s) / nets.0.normalizer.output_range() * 100.0,
        ea: rms(&err_a) / nets.1.normalizer.output_range() * 100.0,
        e_d: rms(&ed),
        e_delta: rms(&edelta),
        e_v,
        omega_a: rms(&rates),
        omega_a_fd: rms(&fd),
    }
}

pub fn streamed(log: &RunLog, nets: &(SkillNet, SkillNet)) -> MetricsReport {
    let mut acc = MetricsAccumulator::for_nets(&nets.0, &nets.1);
    for r in &log.rows {
        acc.push(r);
    }
    acc.report()
}

