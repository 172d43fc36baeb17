//! Explicit FDTD integration of the scalar coupled system
//!
//! ```text
//! ρ u_tt  = τ C(θ) u_xxt + C(θ) u_xx
//! cρ θ_t  = λ θ_xx + τ C(θ) u_xt²
//! ```
//!
//! on `[0, L]` with `u = u_t = θ = 0` at both ends, driven from rest by a
//! harmonic source at an interior node. The velocity is advanced first, the
//! displacement with the new velocity, and the temperature with the old
//! velocity; every update reads only the previous level.

use std::f64::consts::PI;

use thiserror::Error;

use crate::materials::{phase_velocity, MaterialError, MaterialParams, TemperatureLaw};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// How the harmonic excitation enters the excitation node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriveMode {
    /// Point force `F(t) = 2ρc₀·A·sin(ωt)`, the force that radiates velocity
    /// amplitude `A` into a matched line. Momentum input is grid independent
    /// and the node stays free, so the resonator can ring up.
    Force,
    /// Hard velocity boundary condition `v = A·sin(ωt)` at the node.
    Dirichlet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Excitation {
    /// Drive frequency (Hz).
    pub frequency: f64,
    /// Velocity amplitude (m/s).
    pub amplitude: f64,
    /// Excitation node; `None` means `⌊N/2⌋`.
    pub node: Option<usize>,
    pub mode: DriveMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    /// Steps between series rows.
    pub series_stride: usize,
    /// Steps between full-field snapshots; the final state is always kept.
    pub snapshot_stride: usize,
    /// Probe nodes for velocity signals; `None` means `[⌊(N-1)/4⌋]`.
    pub probes: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    /// `u = v = θ = 0`.
    Rest,
    /// `u = amplitude·sin(mode·πx/L)`, `v = θ = 0`.
    SineDisplacement { amplitude: f64, mode: u32 },
}

/// Full description of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub material: MaterialParams,
    pub law: TemperatureLaw,
    /// Resonator thickness (m).
    pub length: f64,
    /// Node count including both boundary nodes.
    pub nodes: usize,
    /// `Δx/Δt = stability_factor · c_ph(C0)`.
    pub stability_factor: f64,
    pub steps: usize,
    pub excitation: Excitation,
    pub output: OutputConfig,
    /// Temperature magnitude treated as overflow (K).
    pub overflow_limit: f64,
    pub initial: InitialCondition,
}

impl SimConfig {
    /// Piezoceramic resonator of 1 mm, 101 nodes, driven at 2 MHz from rest.
    pub fn reference() -> Self {
        Self {
            material: MaterialParams::PIEZOCERAMIC,
            law: TemperatureLaw::Constant,
            length: 1e-3,
            nodes: 101,
            stability_factor: 2.5,
            steps: 10_000,
            excitation: Excitation {
                frequency: 2e6,
                amplitude: 6e-5,
                node: None,
                mode: DriveMode::Force,
            },
            output: OutputConfig {
                series_stride: 25,
                snapshot_stride: 5_000,
                probes: None,
            },
            overflow_limit: 1e12,
            initial: InitialCondition::Rest,
        }
    }

    pub fn excitation_node(&self) -> usize {
        self.excitation.node.unwrap_or(self.nodes / 2)
    }

    pub fn probe_nodes(&self) -> Vec<usize> {
        self.output
            .probes
            .clone()
            .unwrap_or_else(|| vec![(self.nodes - 1) / 4])
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.material.validate()?;
        self.law.validate()?;
        let bad = |msg: String| Err(SimError::Config(msg));
        if !(self.length > 0.0 && self.length.is_finite()) {
            return bad(format!("length must be positive, got {}", self.length));
        }
        if self.nodes < 5 {
            return bad(format!("need at least 5 nodes, got {}", self.nodes));
        }
        if !(self.stability_factor >= 1.0 && self.stability_factor.is_finite()) {
            return bad(format!(
                "stability_factor must be >= 1, got {}",
                self.stability_factor
            ));
        }
        if self.steps < 1 {
            return bad("steps must be at least 1".into());
        }
        let ex = &self.excitation;
        if !(ex.frequency > 0.0 && ex.frequency.is_finite()) {
            return bad(format!("frequency must be positive, got {}", ex.frequency));
        }
        if !ex.amplitude.is_finite() {
            return bad("amplitude must be finite".into());
        }
        let node = self.excitation_node();
        if node == 0 || node >= self.nodes - 1 {
            return bad(format!("excitation node {node} is not interior"));
        }
        if self.output.series_stride == 0 || self.output.snapshot_stride == 0 {
            return bad("output strides must be positive".into());
        }
        for p in self.probe_nodes() {
            if p >= self.nodes {
                return bad(format!(
                    "probe node {p} outside grid of {} nodes",
                    self.nodes
                ));
            }
        }
        if !(self.overflow_limit > 0.0) {
            return bad("overflow_limit must be positive".into());
        }
        if let InitialCondition::SineDisplacement { amplitude, mode } = self.initial {
            if !amplitude.is_finite() || mode == 0 {
                return bad("sine initial condition needs finite amplitude and mode >= 1".into());
            }
        }
        Ok(())
    }
}

/// Uniform grid and time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub length: f64,
    pub nodes: usize,
    pub dx: f64,
    pub dt: f64,
}

impl Grid1D {
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    /// Von Neumann bound of the scheme at stiffness `c`: stable iff `ν² + 2ν·τc_ph/Δx ≤ 1`
    /// where `ν = c_ph Δt/Δx` is the Courant number.
    pub fn stability_number(&self, params: &MaterialParams, c: f64) -> f64 {
        let cph = phase_velocity(params, c);
        let courant = cph * self.dt / self.dx;
        courant * courant + 2.0 * courant * params.tau * cph / self.dx
    }

    /// Courant number at stiffness `c`.
    pub fn courant(&self, params: &MaterialParams, c: f64) -> f64 {
        phase_velocity(params, c) * self.dt / self.dx
    }
}

pub fn build_grid(config: &SimConfig) -> Result<Grid1D, SimError> {
    config.validate()?;
    let dx = config.length / (config.nodes - 1) as f64;
    let cph = phase_velocity(&config.material, config.material.c0);
    Ok(Grid1D {
        length: config.length,
        nodes: config.nodes,
        dx,
        dt: dx / (config.stability_factor * cph),
    })
}

/// Prescribed source velocity `A·sin(2πft)`.
pub fn excitation_velocity(t: f64, config: &SimConfig) -> f64 {
    config.excitation.amplitude * (2.0 * PI * config.excitation.frequency * t).sin()
}

/// Fields at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub step: usize,
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub theta: Vec<f64>,
}

impl SimState {
    pub fn rest(nodes: usize) -> Self {
        Self {
            step: 0,
            t: 0.0,
            u: vec![0.0; nodes],
            v: vec![0.0; nodes],
            theta: vec![0.0; nodes],
        }
    }

    pub fn initial(config: &SimConfig, grid: &Grid1D) -> Self {
        let mut s = Self::rest(grid.nodes);
        if let InitialCondition::SineDisplacement { amplitude, mode } = config.initial {
            let n = grid.nodes;
            for i in 1..n - 1 {
                s.u[i] = amplitude * (mode as f64 * PI * i as f64 / (n - 1) as f64).sin();
            }
        }
        s
    }

    pub fn is_finite(&self) -> bool {
        self.u
            .iter()
            .chain(&self.v)
            .chain(&self.theta)
            .all(|x| x.is_finite())
    }
}

/// Side information produced by one step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepReport {
    /// Heat mass `Σ max(0, -θ)·Δx` removed by the nonnegativity clamp (K·m).
    pub clamped_mass: f64,
    /// Largest stiffness used in this step (Pa).
    pub max_stiffness: f64,
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
#[error("field overflow at step {step}")]
pub struct Overflow {
    pub step: usize,
}

/// Stepper with double buffers; `advance` never allocates.
#[derive(Debug, Clone)]
pub struct Solver {
    config: SimConfig,
    grid: Grid1D,
    state: SimState,
    next: SimState,
    stiffness: Vec<f64>,
    force_gain: f64,
}

impl Solver {
    pub fn new(config: &SimConfig) -> Result<Self, SimError> {
        let grid = build_grid(config)?;
        let state = SimState::initial(config, &grid);
        Self::with_state(config, grid, state)
    }

    pub fn with_state(config: &SimConfig, grid: Grid1D, state: SimState) -> Result<Self, SimError> {
        config.validate()?;
        if state.u.len() != grid.nodes
            || state.v.len() != grid.nodes
            || state.theta.len() != grid.nodes
        {
            return Err(SimError::Config("state length does not match grid".into()));
        }
        let cph0 = phase_velocity(&config.material, config.material.c0);
        Ok(Self {
            config: config.clone(),
            grid,
            next: state.clone(),
            state,
            stiffness: vec![0.0; grid.nodes],
            force_gain: 2.0 * cph0 * grid.dt / grid.dx,
        })
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn into_state(self) -> SimState {
        self.state
    }

    /// Advances one step. On overflow the offending level is kept as current state.
    pub fn advance(&mut self) -> Result<StepReport, Overflow> {
        let n = self.grid.nodes;
        let (dx, dt) = (self.grid.dx, self.grid.dt);
        let p = &self.config.material;
        let law = self.config.law;
        let rho = p.rho;
        let tau = p.tau;
        let cap = p.heat_capacity();
        let inv_dx2 = 1.0 / (dx * dx);
        let inv_2dx = 0.5 / dx;

        let cur = &self.state;
        let nxt = &mut self.next;
        let mut max_c = 0.0_f64;
        for i in 0..n {
            let c = p.c0 * law.factor(cur.theta[i]);
            self.stiffness[i] = c;
            max_c = max_c.max(c);
        }

        for i in 1..n - 1 {
            let c = self.stiffness[i];
            let lap_u = (cur.u[i + 1] - 2.0 * cur.u[i] + cur.u[i - 1]) * inv_dx2;
            let lap_v = (cur.v[i + 1] - 2.0 * cur.v[i] + cur.v[i - 1]) * inv_dx2;
            nxt.v[i] = cur.v[i] + dt / rho * (c * lap_u + tau * c * lap_v);
        }
        nxt.v[0] = 0.0;
        nxt.v[n - 1] = 0.0;

        let t_new = (cur.step + 1) as f64 * dt;
        let ex = self.config.excitation_node();
        match self.config.excitation.mode {
            DriveMode::Dirichlet => nxt.v[ex] = excitation_velocity(t_new, &self.config),
            DriveMode::Force => {
                nxt.v[ex] += self.force_gain * excitation_velocity(cur.t, &self.config)
            }
        }

        for i in 1..n - 1 {
            nxt.u[i] = cur.u[i] + dt * nxt.v[i];
        }
        nxt.u[0] = 0.0;
        nxt.u[n - 1] = 0.0;

        let mut clamped = 0.0;
        for i in 1..n - 1 {
            let lap_t = (cur.theta[i + 1] - 2.0 * cur.theta[i] + cur.theta[i - 1]) * inv_dx2;
            let vx = (cur.v[i + 1] - cur.v[i - 1]) * inv_2dx;
            let th =
                cur.theta[i] + dt / cap * (p.lambda_th * lap_t + tau * self.stiffness[i] * vx * vx);
            if th < 0.0 {
                clamped -= th;
                nxt.theta[i] = 0.0;
            } else {
                nxt.theta[i] = th;
            }
        }
        nxt.theta[0] = 0.0;
        nxt.theta[n - 1] = 0.0;

        nxt.step = cur.step + 1;
        nxt.t = t_new;
        std::mem::swap(&mut self.state, &mut self.next);

        let limit = self.config.overflow_limit;
        let s = &self.state;
        let bad = s.theta.iter().any(|x| !(x.abs() <= limit))
            || s.u.iter().chain(&s.v).any(|x| !x.is_finite());
        if bad {
            return Err(Overflow { step: s.step });
        }
        Ok(StepReport {
            clamped_mass: clamped * dx,
            max_stiffness: max_c,
        })
    }
}

/// One explicit step from `state`; a convenience wrapper over [`Solver`].
pub fn step(
    state: &SimState,
    grid: &Grid1D,
    config: &SimConfig,
) -> Result<Result<(SimState, StepReport), Overflow>, SimError> {
    let mut solver = Solver::with_state(config, *grid, state.clone())?;
    Ok(solver.advance().map(|r| (solver.into_state(), r)))
}

/// Receives every state of a run, including the initial one (with a default report).
pub trait StepObserver {
    fn observe(&mut self, state: &SimState, report: &StepReport);
}

impl StepObserver for () {
    fn observe(&mut self, _: &SimState, _: &StepReport) {}
}

impl<F: FnMut(&SimState, &StepReport)> StepObserver for F {
    fn observe(&mut self, state: &SimState, report: &StepReport) {
        self(state, report)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    /// Non-finite or over-limit values produced at `step`; the run halted there.
    Overflow {
        step: usize,
    },
    /// The run completed, but the stiffness reached at `step` breaks the scheme's
    /// stability bound.
    StabilityViolation {
        step: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPoint {
    pub step: usize,
    pub t: f64,
    pub mean_theta: f64,
    pub max_theta: f64,
    pub probe_v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub theta: Vec<f64>,
}

impl From<&SimState> for Snapshot {
    fn from(s: &SimState) -> Self {
        Self {
            step: s.step,
            t: s.t,
            u: s.u.clone(),
            v: s.v.clone(),
            theta: s.theta.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub status: RunStatus,
    pub grid: Grid1D,
    pub probes: Vec<usize>,
    pub series: Vec<SeriesPoint>,
    pub snapshots: Vec<Snapshot>,
    /// Last finite state (the state before the overflowing step on overflow).
    pub final_state: SimState,
    /// First step whose stiffness exceeded the stability bound, if any.
    pub stability_violation: Option<usize>,
    /// Total heat mass removed by the clamp over the run (K·m).
    pub clamped_total: f64,
}

impl RunResult {
    pub fn final_snapshot(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }
}

fn series_point(state: &SimState, probes: &[usize]) -> SeriesPoint {
    let n = state.theta.len() as f64;
    SeriesPoint {
        step: state.step,
        t: state.t,
        mean_theta: state.theta.iter().sum::<f64>() / n,
        max_theta: state.theta.iter().copied().fold(0.0, f64::max),
        probe_v: probes.iter().map(|&i| state.v[i]).collect(),
    }
}

/// Runs `config.steps` steps or until overflow.
pub fn run(config: &SimConfig, sink: &mut dyn StepObserver) -> Result<RunResult, SimError> {
    let mut solver = Solver::new(config)?;
    let grid = *solver.grid();
    let probes = config.probe_nodes();
    let out = &config.output;

    let mut series = vec![series_point(solver.state(), &probes)];
    let mut snapshots = vec![Snapshot::from(solver.state())];
    sink.observe(solver.state(), &StepReport::default());

    let mut status = RunStatus::Completed;
    let mut violation = None;
    let mut clamped_total = 0.0;
    let mut overflowed = false;
    for _ in 0..config.steps {
        let before_step = solver.state().step;
        match solver.advance() {
            Ok(report) => {
                clamped_total += report.clamped_mass;
                if violation.is_none()
                    && grid.stability_number(&config.material, report.max_stiffness) > 1.0
                {
                    violation = Some(before_step);
                }
                let s = solver.state();
                sink.observe(s, &report);
                if s.step % out.series_stride == 0 {
                    series.push(series_point(s, &probes));
                }
                if s.step % out.snapshot_stride == 0 {
                    snapshots.push(Snapshot::from(s));
                }
            }
            Err(Overflow { step }) => {
                status = RunStatus::Overflow { step };
                overflowed = true;
                break;
            }
        }
    }

    // after an overflow the previous, finite level sits in the back buffer
    let final_state = if overflowed {
        solver.next.clone()
    } else {
        solver.state().clone()
    };
    if snapshots.last().map(|s| s.step) != Some(final_state.step) {
        snapshots.push(Snapshot::from(&final_state));
    }
    if series.last().map(|s| s.step) != Some(final_state.step) {
        series.push(series_point(&final_state, &probes));
    }
    if status == RunStatus::Completed {
        if let Some(step) = violation {
            status = RunStatus::StabilityViolation { step };
        }
    }
    Ok(RunResult {
        status,
        grid,
        probes,
        series,
        snapshots,
        final_state,
        stability_violation: violation,
        clamped_total,
    })
}
