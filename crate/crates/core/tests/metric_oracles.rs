#[allow(dead_code)]
#[path = "support/metric_oracle.rs"]
mod metric_oracle;

use metric_oracle::{oracle, random_log, random_nets, seeded, streamed};
use skilldrive_core::metrics::{evaluate, predictive_errors};
use skilldrive_core::track::generate_random_path;

#[test]
fn streaming_metrics_equal_batch_recomputation() {
    let mut rng = seeded(2024);
    let path = generate_random_path(77, 1500.0).unwrap();
    for i in 0..20 {
        let nets = random_nets(&mut rng);
        let log = random_log(&mut rng, &path, &nets);
        let live = streamed(&log, &nets);
        let batch = evaluate(&log, &path, Some((&nets.0, &nets.1))).unwrap();
        let o = oracle(&log, &path, &nets);
        let tight = |a: f64, b: f64, what: &str| assert!((a - b).abs() <= 1e-9, "log {i} {what}: {a} vs {b}");

        tight(live.es_p.unwrap(), o.es, "es_p");
        tight(live.ea_p.unwrap(), o.ea, "ea_p");
        tight(batch.es_p.unwrap(), o.es, "batch es_p");
        tight(batch.ea_p.unwrap(), o.ea, "batch ea_p");
        assert!((live.e_d - o.e_d).abs() <= 1e-3, "log {i} e_d");
        assert!((batch.e_d - o.e_d).abs() <= 1e-3, "log {i} batch e_d");
        tight(live.e_d, batch.e_d, "e_d live/batch");
        tight(live.e_delta, o.e_delta, "e_delta");
        tight(live.e_delta, batch.e_delta, "e_delta live/batch");
        match (live.e_v, o.e_v) {
            (Some(a), Some(b)) => tight(a, b, "e_v"),
            (None, None) => {}
            other => panic!("log {i} e_v presence differs: {other:?}"),
        }
        assert_eq!(live.e_v, batch.e_v);
        tight(live.omega_a, o.omega_a, "omega_a");
        assert!((live.omega_a - o.omega_a_fd).abs() <= 1e-6, "log {i} omega_a vs differenced pedal");
        assert_eq!(live.windows, batch.windows);
        assert_eq!(live.ticks_after_target, batch.ticks_after_target);
    }
}

#[test]
fn online_predictions_reproduce_offline_errors() {
    let mut rng = seeded(5);
    let path = generate_random_path(3, 1500.0).unwrap();
    let nets = random_nets(&mut rng);
    let log = random_log(&mut rng, &path, &nets);
    let (es, ea) = predictive_errors(&log, &nets.0, &nets.1).unwrap();
    let live = streamed(&log, &nets);
    assert!((live.es_p.unwrap() - es).abs() <= 1e-12);
    assert!((live.ea_p.unwrap() - ea).abs() <= 1e-12);
}

#[test]
fn constant_prediction_offset_gives_offset_over_range() {
    let mut rng = seeded(8);
    let path = generate_random_path(4, 1500.0).unwrap();
    let nets = random_nets(&mut rng);
    let mut log = random_log(&mut rng, &path, &nets);
    for k in 0..log.rows.len() {
        let later = log.rows.get(k + 10).map(|r| r.theta_s).unwrap_or(0.0);
        log.rows[k].pred_s = later + 1.5;
    }
    let r = streamed(&log, &nets);
    assert!((r.es_p.unwrap() - 1.5 / nets.0.normalizer.output_range() * 100.0).abs() <= 1e-9);
}

#[test]
fn rms_metrics_scale_and_permute() {
    let mut rng = seeded(9);
    let path = generate_random_path(5, 1500.0).unwrap();
    let nets = random_nets(&mut rng);
    let log = random_log(&mut rng, &path, &nets);
    let base = streamed(&log, &nets);
    let mut scaled = log.clone();
    let mut reversed = log.clone();
    for r in &mut scaled.rows {
        r.e_d *= 3.0;
        r.theta_a_rate *= 3.0;
    }
    reversed.rows.reverse();
    let s = streamed(&scaled, &nets);
    let p = streamed(&reversed, &nets);
    assert!((s.e_d - 3.0 * base.e_d).abs() <= 1e-12 * base.e_d.max(1.0));
    assert!((s.omega_a - 3.0 * base.omega_a).abs() <= 1e-9);
    assert!((p.e_d - base.e_d).abs() <= 1e-12);
    assert!((p.e_delta - base.e_delta).abs() <= 1e-12);
    assert!((p.omega_a - base.omega_a).abs() <= 1e-12);
}
