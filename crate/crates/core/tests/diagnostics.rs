use thermovisc::harness;
use thermovisc::solver1d::SimConfig;

/// Same physical time window on a grid refined by two in space (and, through
/// the fixed stability factor, in time).
fn refined(level: usize) -> (SimConfig, usize) {
    let mut cfg = SimConfig::reference();
    let s = 1usize << level;
    cfg.nodes = 100 * s + 1;
    cfg.steps *= s;
    cfg.output.series_stride *= s;
    cfg.output.snapshot_stride *= s;
    cfg.output.probes = Some(vec![25 * s]);
    (cfg, harness::DIAGNOSE_WINDOW * s)
}

#[test]
fn weak_form_slack_shrinks_under_refinement() {
    let reports: Vec<_> = (0..2)
        .map(|l| {
            let (cfg, window) = refined(l);
            harness::diagnose_config("refine", &cfg, None, window).unwrap()
        })
        .collect();
    for r in &reports {
        println!(
            "{}..{}: wF {:.3e} dynamic {:.3e} wt {:.3e}",
            r.window_start,
            r.window_end,
            r.wf_relative_slack,
            r.wf_relative_slack_dynamic,
            r.wt_relative_residual
        );
        assert!(r.constraints_hold.iter().all(|&c| c));
        assert!(r.heat_balance.max_relative_defect <= 1e-12);
    }
    let (a, b) = (&reports[0], &reports[1]);
    assert!(b.wf_relative_slack_dynamic < a.wf_relative_slack_dynamic);
    // both discretization defects are first order
    assert!(a.wf_relative_slack / b.wf_relative_slack > 1.8);
    assert!(a.wt_relative_residual / b.wt_relative_residual > 1.8);
}
