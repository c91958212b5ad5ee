use std::sync::Arc;

use skilldrive::experiments::{
    build_dataset, method_permutations, run_collect, run_exp1, CollectSpec, Exp1Spec, Exp2Spec,
};
use skilldrive::session::SkillModel;
use skilldrive::store::{read_corpus, write_corpus};
use skilldrive_core::guidance::GuidanceMethod;
use skilldrive_core::skillnet::{Channel, FeatureRow, Normalizer, SkillNet};

fn small_spec() -> CollectSpec {
    CollectSpec { sweeps_deg: vec![0.0, -45.0, 90.0], agents: 2, trials: 1, seed: 3, ..CollectSpec::default() }
}

#[test]
fn manifest_checksums_are_stable_across_reruns() {
    let spec = small_spec();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ma = write_corpus(a.path(), &spec, &run_collect(&spec).unwrap()).unwrap();
    let mb = write_corpus(b.path(), &spec, &run_collect(&spec).unwrap()).unwrap();
    assert_eq!(ma, mb);
    assert_eq!(ma.entries.len(), 3 * 2);
    let bytes = |d: &tempfile::TempDir| std::fs::read(d.path().join("manifest.json")).unwrap();
    assert_eq!(bytes(&a), bytes(&b));
}

#[test]
fn manifest_window_count_matches_recount() {
    let spec = small_spec();
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_corpus(dir.path(), &spec, &run_collect(&spec).unwrap()).unwrap();
    let (read_back, logs) = read_corpus(dir.path()).unwrap();
    assert_eq!(read_back, manifest);
    // windows at k in [40, n - 11]: n - 50 per log of n rows
    let recount: usize = logs.iter().map(|l| l.len().saturating_sub(50)).sum();
    assert_eq!(manifest.total_windows, recount);
    for (entry, log) in manifest.entries.iter().zip(&logs) {
        assert_eq!(entry.rows, log.len());
        assert_eq!(entry.windows, log.len() - 50);
    }
    for channel in [Channel::Steer, Channel::Accel] {
        assert_eq!(build_dataset(&logs, channel, 1).windows.len(), recount);
        let strided = build_dataset(&logs, channel, 20);
        let expected: usize = logs.iter().map(|l| (l.len() - 50).div_ceil(20)).sum();
        assert_eq!(strided.windows.len(), expected);
        assert_eq!(strided.groups.len(), expected);
    }
}

#[test]
fn full_default_spec_covers_every_training_path() {
    let spec = CollectSpec::default();
    assert_eq!(spec.sweeps_deg.len(), 25);
    assert_eq!(spec.session_configs().len(), 25 * spec.agents * spec.trials);
    assert_eq!(CollectSpec::full_scale().session_configs().len(), 25 * spec.agents * 6);
}

#[test]
fn exp2_schedule_is_balanced() {
    let perms = method_permutations();
    let mut sorted: Vec<_> = perms.iter().map(|p| format!("{p:?}")).collect();
    sorted.sort();
    sorted.dedup();
    assert_eq!(sorted.len(), 6);
    for roster in [6, 12] {
        let schedule = Exp2Spec { roster, ..Exp2Spec::default() }.schedule();
        assert_eq!(schedule.len(), roster * 3);
        for perm in &perms {
            let uses = (0..roster)
                .filter(|a| {
                    let order: Vec<GuidanceMethod> = schedule.iter().filter(|s| s.0 == *a).map(|s| s.2).collect();
                    order == perm.to_vec()
                })
                .count();
            assert_eq!(uses, roster / 6);
        }
    }
}

#[test]
fn exp1_rows_cover_both_groups() {
    let rows = [
        FeatureRow { theta_s: -90.0, theta_a: 0.0, v: 0.0, yaw_rate: -30.0, rpm: 800.0, z: [0.0; 5] },
        FeatureRow { theta_s: 90.0, theta_a: 10.0, v: 20.0, yaw_rate: 30.0, rpm: 2500.0, z: [1.0; 5] },
    ];
    let model = Arc::new(SkillModel {
        steer: SkillNet::new_random(Channel::Steer, Normalizer::fit(&rows, Channel::Steer), 1),
        accel: SkillNet::new_random(Channel::Accel, Normalizer::fit(&rows, Channel::Accel), 2),
    });
    let spec = Exp1Spec { runs_per_group: 3, duration_cap: 5.0, ..Exp1Spec::default() };
    let out = run_exp1(&spec, &model).unwrap();
    assert_eq!(out.len(), 2 * 3);
    assert_eq!(out.iter().filter(|r| r.group == "expert").count(), 3);
    assert!(out.iter().all(|r| r.method == GuidanceMethod::N && !r.completed));
}
