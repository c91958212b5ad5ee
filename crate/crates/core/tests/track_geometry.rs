use std::f64::consts::PI;

use proptest::prelude::*;
use skilldrive_core::track::{
    build_training_path, generate_random_path, wrap_angle, Pose, Segment, TrackPath, RAY_CAP,
};

/// Bound compliance, turn alternation and curve-to-straight frequency over
/// 1000 seeded 4-km paths.
#[test]
fn random_path_statistics() {
    let mut curve_to_straight = 0usize;
    let mut curve_to_any = 0usize;
    for seed in 0..1000u64 {
        let path = generate_random_path(seed, 4000.0).unwrap();
        assert_eq!(path.total_length(), 4000.0);
        let segs: Vec<Segment> = path.segments().copied().collect();
        assert!(!segs[0].is_arc(), "seed {seed} starts with a curve");
        let last = segs.len() - 1;
        for (i, s) in segs.iter().enumerate() {
            match *s {
                Segment::Straight { length } => {
                    // the final segment is cut to hit the target length
                    assert!(length <= 150.0 && (length >= 100.0 || i == last), "seed {seed} straight {length}");
                }
                Segment::Arc { radius, sweep_deg } => {
                    assert!((100.0..=150.0).contains(&radius), "seed {seed} radius {radius}");
                    let phi = sweep_deg.abs();
                    assert!(phi <= 135.0 && (phi >= 45.0 || i == last), "seed {seed} sweep {sweep_deg}");
                }
            }
        }
        for w in segs.windows(2) {
            if w[0].is_arc() {
                curve_to_any += 1;
                if w[1].is_arc() {
                    assert!(w[0].sweep().signum() != w[1].sweep().signum(), "seed {seed}: same-direction arcs");
                } else {
                    curve_to_straight += 1;
                }
            }
        }
    }
    let freq = curve_to_straight as f64 / curve_to_any as f64;
    println!("curve->straight frequency {freq:.4} over {curve_to_any} transitions");
    assert!((freq - 0.40).abs() <= 0.05);
}

#[test]
fn training_path_shapes() {
    let p = build_training_path(0.0).unwrap();
    assert_eq!(p.total_length(), 600.0);
    assert!(p.segments().all(|s| !s.is_arc()));
    let end = p.pose_at(600.0);
    assert!((end.x - 600.0).abs() < 1e-9 && end.y.abs() < 1e-9);

    let q = build_training_path(PI / 2.0).unwrap();
    assert!((q.total_length() - 600.0).abs() < 1e-9);
    match q.segments().nth(1).unwrap() {
        Segment::Arc { radius, sweep_deg } => {
            assert!((radius - 127.324).abs() < 1e-3);
            assert!(*sweep_deg > 0.0);
        }
        other => panic!("middle segment {other:?}"),
    }
    for i in 0..=100 {
        let s = 200.0 + 2.0 * i as f64 * 0.999;
        assert!((q.curvature_at(s).abs() - (PI / 2.0) / 200.0).abs() < 1e-12);
    }
    match build_training_path(-PI).unwrap().segments().nth(1).unwrap() {
        Segment::Arc { radius, sweep_deg } => {
            assert!((radius - 63.662).abs() < 1e-3);
            assert!(*sweep_deg < 0.0);
        }
        other => panic!("middle segment {other:?}"),
    }
    assert!(build_training_path(3.2).is_err());
}

#[test]
fn joints_are_tangent_continuous() {
    for seed in 0..200u64 {
        let path = generate_random_path(seed, 4000.0).unwrap();
        let h = path.joint_headings();
        for w in h.windows(2) {
            assert!(wrap_angle(w[0].1 - w[1].0).abs() <= 1e-9);
        }
    }
}

/// Brute-force scan of the midline at 1-cm steps.
fn dense_closest(path: &TrackPath, x: f64, y: f64, lo: f64, hi: f64) -> (f64, f64) {
    let n = ((hi - lo) / 0.01).ceil() as usize;
    let mut best = (lo, f64::INFINITY);
    for i in 0..=n {
        let s = (lo + i as f64 * 0.01).min(hi);
        let p = path.pose_at(s);
        let d = (p.x - x).hypot(p.y - y);
        if d < best.1 {
            best = (s, d);
        }
    }
    best
}

#[test]
fn closest_point_matches_dense_scan_near_joints() {
    let path = generate_random_path(42, 1500.0).unwrap();
    let mut s0 = 0.0;
    let lens: Vec<f64> = path.segments().map(|s| s.length()).collect();
    for len in &lens[..lens.len() - 1] {
        s0 += len;
        for (ds, lat) in [(-3.0, 0.7), (-0.5, -1.2), (0.0, 1.5), (0.8, -0.4), (2.5, 2.0)] {
            let p = path.pose_at(s0 + ds);
            let (x, y) = (p.x - lat * p.heading.sin(), p.y + lat * p.heading.cos());
            let q = path.closest_midline_point(x, y).unwrap();
            let (s_ref, d_ref) = dense_closest(&path, x, y, (s0 - 20.0).max(0.0), (s0 + 20.0).min(path.total_length()));
            assert!((q.s - s_ref).abs() <= 0.01, "joint {s0} ds {ds}: s {} vs {s_ref}", q.s);
            assert!((q.distance - d_ref).abs() <= 1e-3);
        }
    }
}

#[test]
fn ray_examples() {
    let straight = TrackPath::new(vec![Segment::straight(1000.0)], 3.5, Pose::new(0.0, 0.0, 0.0), None).unwrap();
    let on_mid = Pose::new(100.0, 0.0, 0.0);
    assert_eq!(straight.boundary_ray_distance(on_mid, 0.0).unwrap(), RAY_CAP);
    // right edge 1.75 m away; 30 deg to the right
    let d = straight.boundary_ray_distance(on_mid, -30f64.to_radians()).unwrap();
    assert!((d - 3.5).abs() < 1e-9);
    // ray-march oracle at 1 cm
    let mut t = 0.0;
    while straight.is_on_road(100.0 + t * (-30f64).to_radians().cos(), t * (-30f64).to_radians().sin()).unwrap() {
        t += 0.01;
    }
    assert!((t - d).abs() <= 0.011);
    let facing = Pose::new(100.0, 3.25, PI / 2.0);
    assert!((straight.boundary_ray_distance(facing, 0.0).unwrap() - 2.0).abs() < 1e-9);
    assert!(straight.boundary_ray_distance(Pose::new(100.0, 9.0, 0.0), 0.0).is_err());
}

#[test]
fn text_format_round_trips_random_paths() {
    for seed in [0u64, 7, 99, 1234] {
        let path = generate_random_path(seed, 4000.0).unwrap();
        let text = path.to_text();
        let back = TrackPath::from_text(&text).unwrap();
        assert_eq!(back.to_text(), text);
        assert_eq!(back.segments().collect::<Vec<_>>(), path.segments().collect::<Vec<_>>());
    }
}

proptest! {
    #[test]
    fn closest_point_round_trip(seed in 0u64..500, frac in 0.0f64..1.0) {
        let path = generate_random_path(seed, 4000.0).unwrap();
        let s = frac * path.total_length();
        let p = path.pose_at(s);
        let q = path.closest_midline_point(p.x, p.y).unwrap();
        prop_assert!(q.distance <= 1e-6);
        // a path that crosses itself ties at the crossing; the earlier s wins
        prop_assert!((q.s - s).abs() <= 0.01 || q.s < s);
    }

    #[test]
    fn ray_distance_shrinks_toward_boundary(y0 in -1.7f64..5.0, ang in -80.0f64..80.0, step in 0.0f64..1.0) {
        let path = TrackPath::new(vec![Segment::straight(2000.0)], 3.5, Pose::new(0.0, 0.0, 0.0), None).unwrap();
        let heading = ang.to_radians();
        let a = Pose::new(500.0, y0, heading);
        let d0 = path.boundary_ray_distance(a, 0.0).unwrap();
        let move_by = step * d0.min(RAY_CAP) * 0.9;
        let b = Pose::new(500.0 + move_by * heading.cos(), y0 + move_by * heading.sin(), heading);
        if path.is_on_road(b.x, b.y).unwrap() {
            let d1 = path.boundary_ray_distance(b, 0.0).unwrap();
            prop_assert!(d1 <= d0 + 1e-9);
        }
    }

    #[test]
    fn wrap_angle_stays_in_half_open_range(a in -100.0f64..100.0) {
        let w = wrap_angle(a);
        prop_assert!(w > -PI && w <= PI);
        prop_assert!(((a - w) / (2.0 * PI) - ((a - w) / (2.0 * PI)).round()).abs() < 1e-9);
    }
}
