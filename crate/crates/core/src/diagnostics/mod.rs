//! Post-processing of solver output: energies, observables, hot spots, and
//! scheme-level balance checks. Weak-form inequality residuals live in [`weak`].

pub mod weak;

use serde::Serialize;
use thiserror::Error;

use crate::materials::{MaterialParams, TemperatureLaw};
use crate::solver1d::{Grid1D, SimState, StepObserver, StepReport};

pub use weak::{
    choose_wf_constants, wf_residual, wt_residual, TestFunctions, WFConstants, WFReport, WFTerms,
    WTReport,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("empty series")]
    EmptySeries,
    #[error("period_samples must be at least 2, got {0}")]
    PeriodTooShort(usize),
    #[error("min_prominence must be positive, got {0}")]
    BadProminence(f64),
    #[error("trajectory frames must be consecutive steps (stride 1); gap after step {0}")]
    NonUnitStride(usize),
    #[error("trajectory needs at least {need} frames, has {have}")]
    TooFewFrames { need: usize, have: usize },
    #[error("test function support ({support:.3e} s) exceeds recorded window ({window:.3e} s)")]
    SupportExceedsWindow { support: f64, window: f64 },
    #[error("invalid test function: {0}")]
    BadTestFunction(String),
}

pub type Result<T> = std::result::Result<T, DiagnosticsError>;

/// One recorded time level plus the clamp mass removed when it was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub step: usize,
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub theta: Vec<f64>,
    pub clamped_mass: f64,
}

/// Consecutive frames of a run together with the grid they live on.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: Grid1D,
    pub frames: Vec<Frame>,
}

impl Trajectory {
    pub fn new(grid: Grid1D) -> Self {
        Self {
            grid,
            frames: Vec::new(),
        }
    }

    pub fn check_unit_stride(&self) -> Result<()> {
        for w in self.frames.windows(2) {
            if w[1].step != w[0].step + 1 {
                return Err(DiagnosticsError::NonUnitStride(w[0].step));
            }
        }
        Ok(())
    }

    /// Elapsed time covered by the frames.
    pub fn span(&self) -> f64 {
        match (self.frames.first(), self.frames.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }
}

/// Records every state with `from <= step <= to` during [`crate::solver1d::run`].
#[derive(Debug, Clone)]
pub struct TrajectoryRecorder {
    pub from: usize,
    pub to: usize,
    pub trajectory: Trajectory,
}

impl TrajectoryRecorder {
    pub fn new(grid: Grid1D, from: usize, to: usize) -> Self {
        Self {
            from,
            to,
            trajectory: Trajectory::new(grid),
        }
    }
}

impl StepObserver for TrajectoryRecorder {
    fn observe(&mut self, s: &SimState, report: &StepReport) {
        if (self.from..=self.to).contains(&s.step) {
            self.trajectory.frames.push(Frame {
                step: s.step,
                t: s.t,
                u: s.u.clone(),
                v: s.v.clone(),
                theta: s.theta.clone(),
                clamped_mass: report.clamped_mass,
            });
        }
    }
}

/// Discrete mechanical energy per unit cross-section (J/m²):
/// `½ρΣv²Δx + ½Σ C_e (Δu/Δx)² Δx`, with `C_e` the mean of the stiffnesses at
/// the two ends of each edge.
pub fn energy(
    state: &SimState,
    grid: &Grid1D,
    params: &MaterialParams,
    law: &TemperatureLaw,
) -> f64 {
    let dx = grid.dx;
    let kinetic: f64 = state.v.iter().map(|v| v * v).sum::<f64>() * 0.5 * params.rho * dx;
    let c: Vec<f64> = state
        .theta
        .iter()
        .map(|&t| params.c0 * law.factor(t))
        .collect();
    let elastic: f64 = state
        .u
        .windows(2)
        .zip(c.windows(2))
        .map(|(u, c)| {
            let s = (u[1] - u[0]) / dx;
            0.5 * (c[0] + c[1]) * s * s
        })
        .sum::<f64>()
        * 0.5
        * dx;
    kinetic + elastic
}

/// Arithmetic mean over all nodes, boundaries included.
pub fn mean_temperature(state: &SimState) -> f64 {
    state.theta.iter().sum::<f64>() / state.theta.len() as f64
}

/// Per-period maximum of `|v|`; one value per complete window.
pub fn envelope(series: &[f64], period_samples: usize) -> Result<Vec<f64>> {
    if period_samples < 2 {
        return Err(DiagnosticsError::PeriodTooShort(period_samples));
    }
    if series.is_empty() {
        return Err(DiagnosticsError::EmptySeries);
    }
    Ok(series
        .chunks_exact(period_samples)
        .map(|w| w.iter().fold(0.0_f64, |m, x| m.max(x.abs())))
        .collect())
}

/// Trailing one-period maximum of `|v|` for every sample; `None` until a full
/// period is available.
pub fn trailing_envelope(series: &[f64], period_samples: usize) -> Vec<Option<f64>> {
    let p = period_samples.max(1);
    (0..series.len())
        .map(|i| {
            (i + 1 >= p).then(|| {
                series[i + 1 - p..=i]
                    .iter()
                    .fold(0.0_f64, |m, x| m.max(x.abs()))
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HotSpots {
    pub count: usize,
    pub nodes: Vec<usize>,
}

/// Interior local maxima whose prominence reaches `min_prominence·max(θ)`.
///
/// Prominence is the height above the higher of the two flanking minima, each
/// taken between the peak and the nearest strictly higher sample (or the domain
/// edge). Plateaus count once, located at their middle node.
pub fn hot_spots(theta: &[f64], min_prominence: f64) -> Result<HotSpots> {
    if !(min_prominence > 0.0) {
        return Err(DiagnosticsError::BadProminence(min_prominence));
    }
    let top = theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = theta.len();
    if n < 3 || !(top > 0.0) {
        return Ok(HotSpots {
            count: 0,
            nodes: vec![],
        });
    }
    let threshold = min_prominence * top;
    let mut nodes = Vec::new();
    let mut i = 1;
    while i < n - 1 {
        if theta[i] > theta[i - 1] {
            let mut j = i;
            while j + 1 < n && theta[j + 1] == theta[i] {
                j += 1;
            }
            if j + 1 < n && theta[j + 1] < theta[i] {
                let h = theta[i];
                let mut left_min = h;
                for k in (0..i).rev() {
                    if theta[k] > h {
                        break;
                    }
                    left_min = left_min.min(theta[k]);
                }
                let mut right_min = h;
                for &x in &theta[j + 1..] {
                    if x > h {
                        break;
                    }
                    right_min = right_min.min(x);
                }
                if h - left_min.max(right_min) >= threshold {
                    nodes.push((i + j) / 2);
                }
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    Ok(HotSpots {
        count: nodes.len(),
        nodes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvelopeTrend {
    Rising,
    BeatingThenFalling,
    Other,
}

impl EnvelopeTrend {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Rising => "rising",
            Self::BeatingThenFalling => "beating-then-falling",
            Self::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::Rising, Self::BeatingThenFalling, Self::Other]
            .into_iter()
            .find(|t| t.as_str() == s)
    }
}

/// Shape of a per-period envelope: `Rising` if it ends within 10% of its
/// maximum; `BeatingThenFalling` if it ends below that and rebounds by at least
/// 1% of the maximum somewhere after the peak; `Other` otherwise.
pub fn envelope_trend(env: &[f64]) -> EnvelopeTrend {
    let Some((peak, &max)) = env.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)) else {
        return EnvelopeTrend::Other;
    };
    if !(max > 0.0) {
        return EnvelopeTrend::Other;
    }
    let last = *env.last().unwrap();
    if last >= 0.9 * max {
        return EnvelopeTrend::Rising;
    }
    let mut low = max;
    let mut rebound = 0.0_f64;
    for &e in &env[peak..] {
        low = low.min(e);
        rebound = rebound.max(e - low);
    }
    if rebound >= 0.01 * max {
        EnvelopeTrend::BeatingThenFalling
    } else {
        EnvelopeTrend::Other
    }
}

/// Curvature summary of a growth curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthShape {
    /// Mean second difference over the first quarter is positive.
    pub early_superlinear: bool,
    /// Mean second difference over the last quarter is negative.
    pub late_sublinear: bool,
}

/// Smooths `series` with block means of `window` samples and inspects the
/// sign of the second differences of the block means.
pub fn growth_shape(series: &[f64], window: usize) -> Option<GrowthShape> {
    let w = window.max(1);
    let blocks: Vec<f64> = series
        .chunks_exact(w)
        .map(|c| c.iter().sum::<f64>() / w as f64)
        .collect();
    if blocks.len() < 12 {
        return None;
    }
    let d2: Vec<f64> = blocks
        .windows(3)
        .map(|b| b[2] - 2.0 * b[1] + b[0])
        .collect();
    let q = d2.len() / 4;
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    Some(GrowthShape {
        early_superlinear: mean(&d2[..q]) > 0.0,
        late_sublinear: mean(&d2[d2.len() - q..]) < 0.0,
    })
}

/// One step of the discrete global heat balance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatBalanceStep {
    /// Step index of the later level.
    pub step: usize,
    /// `ΔΣθ·Δx − Δt·(boundary flux + source)` (K·m).
    pub residual: f64,
    /// Clamp mass reported by the solver for this step (K·m).
    pub clamped_mass: f64,
    /// Sum of magnitudes of the contributing terms (K·m).
    pub scale: f64,
}

impl HeatBalanceStep {
    /// Residual left after removing the clamp correction, relative to `scale`.
    pub fn relative_defect(&self) -> f64 {
        if self.scale == 0.0 {
            (self.residual - self.clamped_mass).abs()
        } else {
            (self.residual - self.clamped_mass).abs() / self.scale
        }
    }
}

fn balance_step(
    theta_a: &[f64],
    v_a: &[f64],
    theta_b: &[f64],
    step: usize,
    clamped_mass: f64,
    grid: &Grid1D,
    params: &MaterialParams,
    law: &TemperatureLaw,
) -> HeatBalanceStep {
    let (dx, dt) = (grid.dx, grid.dt);
    let n = theta_a.len();
    let sum_a = theta_a.iter().sum::<f64>() * dx;
    let sum_b = theta_b.iter().sum::<f64>() * dx;
    let flux =
        params.diffusivity() * ((theta_a[0] - theta_a[1]) + (theta_a[n - 1] - theta_a[n - 2])) / dx;
    let source: f64 = (1..n - 1)
        .map(|i| {
            let vx = (v_a[i + 1] - v_a[i - 1]) * (0.5 / dx);
            params.tau * params.c0 * law.factor(theta_a[i]) * vx * vx
        })
        .sum::<f64>()
        * dx
        / params.heat_capacity();
    HeatBalanceStep {
        step,
        residual: (sum_b - sum_a) - dt * (flux + source),
        clamped_mass,
        scale: sum_a.abs() + sum_b.abs() + dt * (flux.abs() + source),
    }
}

/// Global heat balance of the explicit heat update, step by step. Without the
/// clamp the scheme conserves it exactly, so residuals are rounding noise; when
/// the clamp fires the residual equals the clamped mass.
pub fn heat_balance_residual(
    traj: &Trajectory,
    params: &MaterialParams,
    law: &TemperatureLaw,
) -> Result<Vec<HeatBalanceStep>> {
    traj.check_unit_stride()?;
    Ok(traj
        .frames
        .windows(2)
        .map(|w| {
            let (a, b) = (&w[0], &w[1]);
            balance_step(
                &a.theta,
                &a.v,
                &b.theta,
                b.step,
                b.clamped_mass,
                &traj.grid,
                params,
                law,
            )
        })
        .collect())
}

/// Running summary of [`heat_balance_residual`] without storing the trajectory.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct HeatBalanceSummary {
    pub steps: usize,
    /// Largest `relative_defect` over steps where the clamp did not fire.
    pub max_relative_defect: f64,
    pub clamp_steps: usize,
    /// Largest `|residual − clamped mass| / scale` over steps where it fired.
    pub max_clamp_mismatch: f64,
    pub clamped_total: f64,
}

/// Streams the heat balance during a run.
#[derive(Debug, Clone)]
pub struct HeatBalanceMonitor {
    grid: Grid1D,
    params: MaterialParams,
    law: TemperatureLaw,
    prev: Option<(Vec<f64>, Vec<f64>)>,
    pub summary: HeatBalanceSummary,
}

impl HeatBalanceMonitor {
    pub fn new(grid: Grid1D, params: MaterialParams, law: TemperatureLaw) -> Self {
        Self {
            grid,
            params,
            law,
            prev: None,
            summary: HeatBalanceSummary::default(),
        }
    }
}

impl StepObserver for HeatBalanceMonitor {
    fn observe(&mut self, s: &SimState, report: &StepReport) {
        if let Some((theta, v)) = &mut self.prev {
            let b = balance_step(
                theta,
                v,
                &s.theta,
                s.step,
                report.clamped_mass,
                &self.grid,
                &self.params,
                &self.law,
            );
            let sum = &mut self.summary;
            sum.steps += 1;
            if b.clamped_mass > 0.0 {
                sum.clamp_steps += 1;
                sum.clamped_total += b.clamped_mass;
                sum.max_clamp_mismatch = sum.max_clamp_mismatch.max(b.relative_defect());
            } else {
                sum.max_relative_defect = sum.max_relative_defect.max(b.relative_defect());
            }
            theta.copy_from_slice(&s.theta);
            v.copy_from_slice(&s.v);
        } else {
            self.prev = Some((s.theta.clone(), s.v.clone()));
        }
    }
}
