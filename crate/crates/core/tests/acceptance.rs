//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.
//!
//! Run with `cargo test --test acceptance` (add `--release` for speed).

use std::f64::consts::PI;
use std::time::Instant;

use rand::{rngs::StdRng, Rng, SeedableRng};

use thermovisc::diagnostics::{self, EnvelopeTrend, HeatBalanceMonitor};
use thermovisc::harness::{self, Classification};
use thermovisc::materials::{phase_velocity, MaterialParams};
use thermovisc::solver1d::{build_grid, run, RunStatus, SimConfig, SimState, StepReport};
use thermovisc::tensor::{
    compose, contract, inner, sym, symmetrizer, tensor_sqrt, weighted_identity, Mat, Tensor4,
    VectorField2D,
};

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn phase_velocity_and_resonance() -> Outcome {
    let m = MaterialParams::PIEZOCERAMIC;
    let c = phase_velocity(&m, m.c0);
    let f = c / (2.0 * SimConfig::reference().length);
    let rel_c = (c - 4000.0).abs() / 4000.0;
    let rel_f = (f - 2e6).abs() / 2e6;
    outcome(
        rel_c <= 1e-12 && rel_f <= 1e-12,
        format!("c_ph={c} m/s (rel {rel_c:.1e}), f_res={f} Hz (rel {rel_f:.1e})"),
    )
}

fn stability_smoke() -> Outcome {
    let cfg = SimConfig::reference();
    let r = run(&cfg, &mut ()).expect("reference config is valid");
    let s = &r.final_state;
    let finite = s.is_finite();
    let nonneg = s.theta.iter().all(|&t| t >= 0.0);
    let ok = r.status == RunStatus::Completed && s.step == 10_000 && finite && nonneg;
    outcome(
        ok,
        format!(
            "status={:?} steps={} finite={finite} theta>=0={nonneg}",
            r.status, s.step
        ),
    )
}

fn resonant_growth() -> Outcome {
    let mut cfg = SimConfig::reference();
    cfg.steps = 100_000; // 200 periods at 500 steps each
    let r = run(&cfg, &mut ()).expect("valid");
    let env = harness::probe_envelope(&r, &cfg);
    let mut peak = 0.0_f64;
    let mut worst = 0.0_f64;
    for &e in &env {
        peak = peak.max(e);
        worst = worst.max((peak - e) / peak.max(f64::MIN_POSITIVE));
    }
    let grows = env.last().copied().unwrap_or(0.0) > 2.0 * env.first().copied().unwrap_or(0.0);
    outcome(
        env.len() >= 200 && worst <= 0.01 && grows,
        format!(
            "{} periods, worst drop below running max {:.2e}, envelope {:.3e} -> {:.3e} m/s",
            env.len(),
            worst,
            env.first().copied().unwrap_or(0.0),
            env.last().copied().unwrap_or(0.0)
        ),
    )
}

fn energy_dissipation() -> Outcome {
    let mut cfg = harness::ring_down(SimConfig::reference(), 1e-9, 1);
    cfg.steps = 50_000;
    let grid = build_grid(&cfg).expect("valid");
    let mut energies = Vec::with_capacity(cfg.steps + 1);
    let mut obs = |s: &SimState, _: &StepReport| {
        energies.push(diagnostics::energy(s, &grid, &cfg.material, &cfg.law));
    };
    let r = run(&cfg, &mut obs).expect("valid");
    let e0 = energies[0];
    let worst_rise = energies
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let ratio = energies.last().copied().unwrap_or(f64::NAN) / e0;
    outcome(
        r.status == RunStatus::Completed && worst_rise <= 1e-3 * e0 && ratio <= 0.5,
        format!(
            "E0={e0:.3e} J/m², worst per-step rise {:.2e}·E0, E/E0 after {} steps = {ratio:.2e}",
            worst_rise / e0,
            energies.len() - 1
        ),
    )
}

fn heat_balance() -> Outcome {
    let cfg = SimConfig::reference();
    let grid = build_grid(&cfg).expect("valid");
    let mut mon = HeatBalanceMonitor::new(grid, cfg.material, cfg.law);
    run(&cfg, &mut mon).expect("valid");
    let s = mon.summary;
    outcome(
        s.steps == cfg.steps && s.max_relative_defect <= 1e-12,
        format!(
            "{} steps, max relative defect {:.2e}, clamp fired on {} steps",
            s.steps, s.max_relative_defect, s.clamp_steps
        ),
    )
}

fn random_spd(rng: &mut StdRng, n: usize) -> Tensor4 {
    let m = n * n;
    let a: Vec<f64> = (0..m * m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut b = vec![0.0; m * m];
    for r in 0..m {
        for c in 0..m {
            b[r * m + c] = (0..m).map(|s| a[s * m + r] * a[s * m + c]).sum::<f64>();
        }
        b[r * m + r] += 0.1;
    }
    Tensor4::from_matrix_view(n, &b).expect("square")
}

fn tensor_suite() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2024);
    let n = 2;

    let beta = random_spd(&mut rng, n);
    let root = tensor_sqrt(&beta).expect("spd");
    let back = compose(&root, &root).expect("same dim");
    let round_trip = back.sub(&beta).expect("same dim").max_abs() / beta.max_abs();

    let norm = beta.spectral_norm();
    let mut quad = 0.0_f64;
    for _ in 0..100 {
        let w = Mat::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)).expect("dim");
        let lhs = inner(&contract(&beta, &w).unwrap(), &w).unwrap();
        let rw = contract(&root, &w).unwrap();
        let rhs = inner(&rw, &rw).unwrap();
        quad = quad.max((lhs - rhs).abs() / (norm * w.norm().powi(2)));
    }

    let s = symmetrizer(3).expect("dim");
    let sym_exact = (0..100).all(|_| {
        let x = Mat::from_fn(3, |_, _| rng.gen_range(-1.0..1.0)).unwrap();
        contract(&s, &x).unwrap() == sym(&x)
    });

    let field = |x: f64, y: f64| {
        let s = (PI * x).sin() * (PI * y).sin();
        (s * (2.0 * PI * y).cos().powi(2), s * (x + 0.5) * y)
    };
    let psi = |x: f64, y: f64| {
        let p = 1.0 + 0.5 * (PI * x).cos() * (2.0 * PI * y).sin();
        let px = -0.5 * PI * (PI * x).sin() * (2.0 * PI * y).sin();
        let py = PI * (PI * x).cos() * (2.0 * PI * y).cos();
        (p, px, py)
    };
    let errs: Vec<f64> = [17, 33, 65]
        .iter()
        .map(|&m| {
            let f = VectorField2D::sample(m, m, 1.0 / (m - 1) as f64, field);
            weighted_identity(&f, psi).expect("grid").relative_error()
        })
        .collect();
    let shrinking = errs.windows(2).all(|w| w[1] < w[0]);

    outcome(
        round_trip <= 1e-10 && quad <= 1e-9 && sym_exact && shrinking,
        format!(
            "sqrt round trip {round_trip:.1e}, quadratic form {quad:.1e}, symmetrizer exact={sym_exact}, \
             weighted identity errors {:.2e}/{:.2e}/{:.2e}",
            errs[0], errs[1], errs[2]
        ),
    )
}

fn generalized_inequalities() -> Outcome {
    let cfg = SimConfig::reference();
    let r = harness::diagnose_config("reference", &cfg, None, harness::DIAGNOSE_WINDOW)
        .expect("diagnostics run");
    let ok = r.wf_relative_slack <= 0.05
        && r.wt_relative_residual <= 0.05
        && r.constraints_hold.iter().all(|&c| c);
    outcome(
        ok,
        format!(
            "steps {}..{}: wF slack {:.2e} (dynamic part {:.2e}), wt residual {:.2e}, constraints {:?}",
            r.window_start,
            r.window_end,
            r.wf_relative_slack,
            r.wf_relative_slack_dynamic,
            r.wt_relative_residual,
            r.constraints_hold
        ),
    )
}

/// Mean temperature once per excitation period.
fn per_period_mean(r: &thermovisc::solver1d::RunResult, cfg: &SimConfig) -> Vec<f64> {
    let ps = harness::period_samples(cfg, r.grid.dt).max(1);
    r.series.iter().step_by(ps).map(|p| p.mean_theta).collect()
}

fn strictly_increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] > w[0])
}

fn figure2_dynamics() -> Outcome {
    let full = harness::preset("fig2-power-k1e7-p1").expect("preset");
    let mut reduced = full.clone();
    reduced.steps = 50_000;

    let r = run(&reduced, &mut ()).expect("valid");
    let mean = per_period_mean(&r, &reduced);
    let trend = diagnostics::envelope_trend(&harness::probe_envelope(&r, &reduced));
    let reduced_ok = r.status == RunStatus::Completed
        && strictly_increasing(&mean[1..])
        && trend == EnvelopeTrend::BeatingThenFalling;

    let started = Instant::now();
    let (rf, rec) = harness::run_config("fig2", &full, None).expect("valid");
    let secs = started.elapsed().as_secs_f64();
    let mean_full = per_period_mean(&rf, &full);
    let shape = rec
        .growth
        .is_some_and(|g| g.early_superlinear && g.late_sublinear);
    let full_ok = rf.status == RunStatus::Completed
        && strictly_increasing(&mean_full[1..])
        && rec.envelope_trend == EnvelopeTrend::BeatingThenFalling
        && shape
        && secs < 60.0;

    outcome(
        reduced_ok && full_ok,
        format!(
            "5e4 steps: {:?}, per-period mean theta increasing={}, trend={}; \
             5e5 steps: {:?}, increasing={}, trend={}, growth={:?}, {secs:.1} s",
            r.status,
            strictly_increasing(&mean[1..]),
            trend.as_str(),
            rf.status,
            strictly_increasing(&mean_full[1..]),
            rec.envelope_trend.as_str(),
            rec.growth
        ),
    )
}

fn hot_spot_phenomenology() -> Outcome {
    let power = harness::sweep_preset("sweep-power").expect("preset");
    let expo = harness::sweep_preset("sweep-exponential").expect("preset");
    let pr = harness::sweep(&power, None).expect("sweep");
    let er = harness::sweep(&expo, None).expect("sweep");

    let multi_spot = pr
        .iter()
        .filter(|r| matches!(r.classification, Classification::HotSpots { .. }))
        .count();
    let large_b_hits: Vec<&str> = er
        .iter()
        .filter(|r| matches!(r.config.get("law.b").and_then(|v| v.as_float()), Some(b) if b >= 1e8))
        .filter(|r| {
            matches!(
                r.classification,
                Classification::HotSpots { .. } | Classification::Overflow
            )
        })
        .map(|r| r.id.as_str())
        .collect();
    let labels = |rs: &[harness::RunRecord]| {
        rs.iter()
            .map(|r| format!("{}={}", r.id, r.classification.label()))
            .collect::<Vec<_>>()
            .join(" ")
    };
    outcome(
        pr.len() == 4 && multi_spot == 0 && !large_b_hits.is_empty(),
        format!("power: {} | exponential: {}", labels(&pr), labels(&er)),
    )
}

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("phase velocity and resonance", phase_velocity_and_resonance),
        ("stability smoke", stability_smoke),
        ("resonant growth", resonant_growth),
        ("energy dissipation", energy_dissipation),
        ("heat balance", heat_balance),
        ("tensor suite", tensor_suite),
        (
            "generalized-solution inequalities",
            generalized_inequalities,
        ),
        ("figure-2 dynamics", figure2_dynamics),
        ("hot-spot phenomenology", hot_spot_phenomenology),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let o = check();
        failed += usize::from(!o.pass);
        println!(
            "{} {} {name} [{:.1} s]: {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            started.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
