use proptest::prelude::*;

use thermovisc::config;
use thermovisc::harness::{self, Classification, LawFamily, SweepSpec};
use thermovisc::materials::TemperatureLaw;
use thermovisc::solver1d::{run, SimConfig};

fn short(mut cfg: SimConfig, steps: usize) -> SimConfig {
    cfg.steps = steps;
    cfg
}

fn spec(family: LawFamily, axis1: Vec<f64>, axis2: Vec<f64>, steps: usize) -> SweepSpec {
    SweepSpec {
        base: SimConfig::reference(),
        law_family: family,
        axis1,
        axis2,
        reduced_steps: Some(steps),
        parallelism: 2,
    }
}

#[test]
fn runs_are_deterministic() {
    let cfg = short(harness::preset("fig2-power-k1e7-p1").unwrap(), 5_000);
    let a = run(&cfg, &mut ()).unwrap();
    let b = run(&cfg, &mut ()).unwrap();
    assert_eq!(a.final_state, b.final_state);
    assert_eq!(a.series, b.series);
}

#[test]
fn single_point_sweep_equals_single_run() {
    let tmp = tempfile::tempdir().unwrap();
    let s = spec(LawFamily::PowerLaw, vec![1e7], vec![1.0], 3_000);
    let recs = harness::sweep(&s, Some(tmp.path())).unwrap();
    assert_eq!(recs.len(), 1);

    let mut cfg = short(SimConfig::reference(), 3_000);
    cfg.law = TemperatureLaw::PowerLaw { k: 1e7, p: 1.0 };
    let solo = tempfile::tempdir().unwrap();
    let (_, rec) = harness::run_config(&recs[0].id, &cfg, Some(solo.path())).unwrap();
    assert_eq!(rec.config, recs[0].config);
    assert_eq!(rec.final_mean_theta, recs[0].final_mean_theta);
    let series = |root: &std::path::Path| {
        std::fs::read_to_string(root.join(&rec.id).join("series.csv")).unwrap()
    };
    assert_eq!(series(tmp.path()), series(solo.path()));
}

#[test]
fn parallelism_does_not_change_results() {
    let mut s = spec(
        LawFamily::Exponential,
        vec![0.5, 2.0],
        vec![1e2, 1e6, 1e7],
        2_000,
    );
    s.parallelism = 1;
    let serial = harness::sweep(&s, None).unwrap();
    s.parallelism = 4;
    let parallel = harness::sweep(&s, None).unwrap();
    assert_eq!(serial, parallel);
}

#[test]
fn index_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let s = spec(
        LawFamily::Exponential,
        vec![2.0, 5.0],
        vec![1e2, 1e8],
        2_000,
    );
    let recs = harness::sweep(&s, Some(tmp.path())).unwrap();
    let rows = harness::read_index(&tmp.path().join("index.csv")).unwrap();
    let expected: Vec<harness::IndexRow> = recs.iter().map(Into::into).collect();
    assert_eq!(rows, expected);
    assert_eq!(rows[3].law, "exponential");
    assert_eq!((rows[3].axis1, rows[3].axis2), (Some(5.0), Some(1e8)));

    for r in &recs {
        let back = harness::read_record(&tmp.path().join(&r.id)).unwrap();
        assert_eq!(&back, r);
    }
}

#[test]
fn invalid_points_become_failed_records() {
    // alpha must lie in (0, 1] ∪ (1, ∞); zero is rejected by the law itself
    let s = spec(LawFamily::Exponential, vec![0.0, 2.0], vec![1e2], 1_000);
    let recs = harness::sweep(&s, None).unwrap();
    assert_eq!(recs[0].classification, Classification::Failed);
    assert!(recs[0].error.is_some());
    assert_eq!(recs[1].classification, Classification::NoHotSpots);
}

#[test]
fn large_b_destabilises_where_small_b_does_not() {
    let s = spec(LawFamily::Exponential, vec![5.0], vec![1e2, 1e8], 50_000);
    let recs = harness::sweep(&s, None).unwrap();
    assert_eq!(recs[0].status, "Completed");
    assert_eq!(recs[1].classification, Classification::Overflow);
    // the run stops at the overflow step and keeps the last finite state
    assert!(recs[1].steps_completed < 50_000);
    assert!(recs[1].final_mean_theta.is_finite());
}

#[test]
fn overflowed_run_can_be_diagnosed() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = short(SimConfig::reference(), 50_000);
    cfg.law = TemperatureLaw::Exponential { alpha: 5.0, b: 1e8 };
    let (_, rec) = harness::run_config("blowup", &cfg, Some(tmp.path())).unwrap();
    assert_eq!(rec.status, "Overflow");
    let rep = harness::diagnose_run_dir(&tmp.path().join("blowup")).unwrap();
    assert!(rep.window_end < rec.status_step.unwrap());
    assert!(tmp.path().join("blowup/diagnostics.json").exists());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn sweep_cardinality(n1 in 1usize..4, n2 in 1usize..4) {
        let axis1: Vec<f64> = (0..n1).map(|i| 1e5 * 10f64.powi(i as i32)).collect();
        let axis2: Vec<f64> = (0..n2).map(|i| 1.0 + i as f64).collect();
        let s = spec(LawFamily::PowerLaw, axis1, axis2, 200);
        let recs = harness::sweep(&s, None).unwrap();
        prop_assert_eq!(recs.len(), n1 * n2);
        let mut ids: Vec<&str> = recs.iter().map(|r| r.id.as_str()).collect();
        ids.dedup();
        prop_assert_eq!(ids.len(), n1 * n2);
        prop_assert!(recs.iter().all(|r| r.steps_completed == 200));
    }

    #[test]
    fn echoed_config_rebuilds_itself(
        k in 1e3f64..1e9,
        p in 0.5f64..3.0,
        nodes in 11usize..300,
        steps in 1usize..100_000,
        freq in 1e5f64..1e7,
    ) {
        let mut cfg = SimConfig::reference();
        cfg.law = TemperatureLaw::PowerLaw { k, p };
        cfg.nodes = nodes;
        cfg.steps = steps;
        cfg.excitation.frequency = freq;
        let table = config::echo_table(&cfg);
        let back = config::from_table(&table).unwrap();
        prop_assert_eq!(back.sim, cfg);
    }
}
