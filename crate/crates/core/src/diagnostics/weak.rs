//! Discrete residuals of the generalized-solution inequalities.
//!
//! In one dimension the tensor contractions collapse to scalars: the strain
//! rate is `v_x`, `γ(θ) = τC(θ)/ρ`, `Γ(θ) = τC(θ)/(cρ)` and `a = 1/τ`. With the
//! localized functional `F = (½v² + ½κu_x² + λθ)ψ`, smooth solutions satisfy
//!
//! ```text
//! d/dt ∫F = −∫(γv_x² + aγu_x v_x − κu_x v_x − λΓv_x²)ψ
//!           −∫(γv_x + aγu_x) v ψ_x + λD∫θψ_xx
//! ```
//!
//! and the localized energy inequality is this identity tested against the
//! nonincreasing weight `ζ(t)e^{−μt}`. Spatial sums are nodal (ψ vanishes near
//! the boundary, so they coincide with the trapezoidal rule).
//!
//! `μ` is forced to be large (tens of `a`), so `e^{−μΔt}` is far from 1 at
//! practical time steps and a rectangle rule in time would be meaningless. The
//! `ζe^{−μt}` weight is therefore integrated exactly over each step with `ζ`
//! linear between frames, and `F` is reconstructed linearly in time.

use serde::Serialize;

use super::{DiagnosticsError, Result, Trajectory};
use crate::materials::{LawBounds, MaterialParams, TemperatureLaw};
use std::f64::consts::PI;

/// Constants `κ, λ, μ` of the localized energy inequality and the thresholds
/// they were derived from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WFConstants {
    pub kappa: f64,
    pub lam: f64,
    pub mu: f64,
    pub eta1_gamma: f64,
    pub eta1_big_gamma: f64,
    pub eta2_gamma: f64,
    pub a: f64,
}

impl WFConstants {
    /// `[κ/a < η₂,  (κ/a)η₁_Γ > λ,  κ(a+2μ)η₁_γ/4 > a²/4]`.
    pub fn constraints(&self) -> [bool; 3] {
        let a = self.a;
        [
            self.kappa / a < self.eta2_gamma,
            (self.kappa / a) * self.eta1_big_gamma > self.lam,
            self.kappa * (a + 2.0 * self.mu) / 4.0 * self.eta1_gamma > a * a / 4.0,
        ]
    }

    pub fn admissible(&self) -> bool {
        self.constraints().iter().all(|&c| c)
            && [self.kappa, self.lam, self.mu]
                .iter()
                .all(|&x| x > 0.0 && x.is_finite())
    }
}

/// Picks `κ, λ, μ` from lower/upper bounds of the quadratic forms of `γ` and `Γ`.
///
/// `η₂ = K_γ/4`, `η₁ = 1/(2M)`, `κ = aη₂/2`, `λ = (κ/a)η₁_Γ/2`, and `μ` is the
/// smallest value meeting the third constraint with a factor-2 margin.
///
/// # Panics
/// If a bound is not positive and ordered, or if the resulting constants fail
/// a constraint (which would be a bug).
pub fn choose_wf_constants(gamma: (f64, f64), big_gamma: (f64, f64), a: f64) -> WFConstants {
    let (kg, mg) = gamma;
    let (kbg, mbg) = big_gamma;
    assert!(
        0.0 < kg && kg <= mg && mg.is_finite(),
        "bad γ bounds {gamma:?}"
    );
    assert!(
        0.0 < kbg && kbg <= mbg && mbg.is_finite(),
        "bad Γ bounds {big_gamma:?}"
    );
    assert!(a > 0.0 && a.is_finite(), "bad a = {a}");
    let eta2_gamma = kg / 4.0;
    let eta1_gamma = 1.0 / (2.0 * mg);
    let eta1_big_gamma = 1.0 / (2.0 * mbg);
    let kappa = a * eta2_gamma / 2.0;
    let lam = (kappa / a) * eta1_big_gamma / 2.0;
    let mu = (2.0 * a * a / (kappa * eta1_gamma) - a) / 2.0;
    let c = WFConstants {
        kappa,
        lam,
        mu,
        eta1_gamma,
        eta1_big_gamma,
        eta2_gamma,
        a,
    };
    assert!(c.admissible(), "constants violate constraints: {c:?}");
    c
}

/// Constants for a material whose stiffness stays within `bounds`.
pub fn wf_constants_for(params: &MaterialParams, bounds: &LawBounds) -> WFConstants {
    let g = |c: f64| params.tau * c / params.rho;
    let bg = |c: f64| params.tau * c / (params.rho * params.c_heat);
    choose_wf_constants(
        (g(bounds.c_min), g(bounds.c_max)),
        (bg(bounds.c_min), bg(bounds.c_max)),
        1.0 / params.tau,
    )
}

/// Sampled weights: `ψ` and its derivatives per node, `ζ` and `ζ_t` per frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestFunctions {
    pub description: String,
    pub psi: Vec<f64>,
    pub psi_x: Vec<f64>,
    pub psi_xx: Vec<f64>,
    pub zeta: Vec<f64>,
    pub zeta_t: Vec<f64>,
}

impl TestFunctions {
    /// `ψ(x) = cos²(π(x−x_c)/w)` on `|x−x_c| < w/2` and
    /// `ζ(t) = cos²(πt/(2T₀))` on `[0, T₀]`, with analytic derivatives.
    /// `t` is measured from the first frame.
    pub fn bump_and_cutoff(
        traj: &Trajectory,
        center: f64,
        width: f64,
        support: f64,
    ) -> Result<Self> {
        if !(width > 0.0 && support > 0.0) {
            return Err(DiagnosticsError::BadTestFunction(
                "width and support must be positive".into(),
            ));
        }
        let span = traj.span();
        if support > span * (1.0 + 1e-12) {
            return Err(DiagnosticsError::SupportExceedsWindow {
                support,
                window: span,
            });
        }
        let g = &traj.grid;
        let k = PI / width;
        let (mut psi, mut psi_x, mut psi_xx) = (vec![], vec![], vec![]);
        for i in 0..g.nodes {
            let s = g.x(i) - center;
            if s.abs() < width / 2.0 {
                psi.push((k * s).cos().powi(2));
                psi_x.push(-k * (2.0 * k * s).sin());
                psi_xx.push(-2.0 * k * k * (2.0 * k * s).cos());
            } else {
                psi.push(0.0);
                psi_x.push(0.0);
                psi_xx.push(0.0);
            }
        }
        let t0 = traj.frames.first().map_or(0.0, |f| f.t);
        let w = PI / (2.0 * support);
        let (mut zeta, mut zeta_t) = (vec![], vec![]);
        for f in &traj.frames {
            let t = f.t - t0;
            if t < support {
                zeta.push((w * t).cos().powi(2));
                zeta_t.push(-w * (2.0 * w * t).sin());
            } else {
                zeta.push(0.0);
                zeta_t.push(0.0);
            }
        }
        let tf = Self {
            description: format!(
                "psi=cos^2 bump center={center:e} m width={width:e} m; zeta=cos^2 cutoff support={support:e} s"
            ),
            psi,
            psi_x,
            psi_xx,
            zeta,
            zeta_t,
        };
        tf.validate(traj)?;
        Ok(tf)
    }

    /// Bump centred at `L/4` with width `0.4L`, cutoff spanning the whole window.
    pub fn default_for(traj: &Trajectory) -> Result<Self> {
        let l = traj.grid.length;
        Self::bump_and_cutoff(traj, 0.25 * l, 0.4 * l, traj.span())
    }

    /// Arbitrary samples; derivatives by central differences.
    pub fn from_samples(traj: &Trajectory, psi: Vec<f64>, zeta: Vec<f64>) -> Result<Self> {
        let (dx, dt) = (traj.grid.dx, traj.grid.dt);
        let n = psi.len();
        let m = zeta.len();
        if n < 3 || m < 2 {
            return Err(DiagnosticsError::BadTestFunction("too few samples".into()));
        }
        let mut psi_x = vec![0.0; n];
        let mut psi_xx = vec![0.0; n];
        for i in 1..n - 1 {
            psi_x[i] = (psi[i + 1] - psi[i - 1]) / (2.0 * dx);
            psi_xx[i] = (psi[i + 1] - 2.0 * psi[i] + psi[i - 1]) / (dx * dx);
        }
        let zeta_t = (0..m)
            .map(|k| {
                if k + 1 < m {
                    (zeta[k + 1] - zeta[k]) / dt
                } else {
                    0.0
                }
            })
            .collect();
        let tf = Self {
            description: "user samples".into(),
            psi,
            psi_x,
            psi_xx,
            zeta,
            zeta_t,
        };
        tf.validate(traj)?;
        Ok(tf)
    }

    pub fn validate(&self, traj: &Trajectory) -> Result<()> {
        let bad = |m: &str| Err(DiagnosticsError::BadTestFunction(m.into()));
        let n = traj.grid.nodes;
        if self.psi.len() != n || self.psi_x.len() != n || self.psi_xx.len() != n {
            return bad("psi length differs from node count");
        }
        if self.zeta.len() != traj.frames.len() || self.zeta_t.len() != traj.frames.len() {
            return bad("zeta length differs from frame count");
        }
        if self.psi.iter().any(|&p| !(p >= 0.0)) {
            return bad("psi must be nonnegative");
        }
        if [0, 1, n - 2, n - 1].iter().any(|&i| self.psi[i] != 0.0) {
            return bad("psi must vanish on the boundary collar");
        }
        if self.zeta.iter().any(|&z| !(z >= 0.0)) || self.zeta.windows(2).any(|w| w[1] > w[0]) {
            return bad("zeta must be nonnegative and nonincreasing");
        }
        let top = self.zeta[0].max(f64::MIN_POSITIVE);
        if *self.zeta.last().unwrap() > 1e-12 * top {
            return Err(DiagnosticsError::SupportExceedsWindow {
                support: f64::INFINITY,
                window: traj.span(),
            });
        }
        Ok(())
    }
}

/// `∫₀ʰ s^k e^{−μs} ds` for k = 0, 1.
fn exp_moments(mu: f64, h: f64) -> (f64, f64) {
    let x = mu * h;
    if x < 0.1 {
        // h^{k+1} Σ_j (−x)^j / (j!(j+k+1))
        let (mut i0, mut i1, mut term) = (0.0, 0.0, 1.0);
        for j in 0..20 {
            i0 += term / (j + 1) as f64;
            i1 += term / (j + 2) as f64;
            term *= -x / (j + 1) as f64;
        }
        (h * i0, h * h * i1)
    } else {
        let i0 = -(-x).exp_m1() / mu;
        (i0, (i0 - h * (-x).exp()) / mu)
    }
}

/// Exact integrals of `ζ(t)e^{−μt}` over each step, with `ζ` linear between frames.
fn step_weights(times: &[f64], zeta: &[f64], mu: f64) -> Vec<f64> {
    (0..times.len().saturating_sub(1))
        .map(|m| {
            let h = times[m + 1] - times[m];
            let (i0, i1) = exp_moments(mu, h);
            (-mu * times[m]).exp() * (zeta[m] * i0 + (zeta[m + 1] - zeta[m]) / h * i1)
        })
        .collect()
}

/// Contributions to both sides of the localized energy inequality.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct WFTerms {
    /// `∫∫γv_x²ψ·ζe^{−μt}`.
    pub dissipation: f64,
    /// `∫∫aγu_x v_x ψ·ζe^{−μt}`.
    pub coupling: f64,
    /// `−κ∫∫u_x v_x ψ·ζe^{−μt}`.
    pub stiffness: f64,
    /// `−λ∫∫Γv_x²ψ·ζe^{−μt}`.
    pub heating: f64,
    /// `∫∫F(μζ−ζ_t)e^{−μt}`.
    pub functional: f64,
    /// `ζ(0)∫F₀`.
    pub initial: f64,
    /// `−∫∫(γv_x + aγu_x)vψ_x·ζe^{−μt}`.
    pub transport: f64,
    /// `λD∫∫θψ_xx·ζe^{−μt}`.
    pub conduction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WFReport {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub terms: WFTerms,
    pub constants: WFConstants,
    pub tests: TestFunctions,
}

impl WFReport {
    /// `|slack| / (|lhs| + |rhs|)`.
    pub fn relative_slack(&self) -> f64 {
        let s = self.lhs.abs() + self.rhs.abs();
        if s == 0.0 {
            self.slack.abs()
        } else {
            self.slack.abs() / s
        }
    }

    /// `|slack|` relative to the dynamic terms only, leaving out `ζ(0)∫F₀`,
    /// which appears on both sides.
    pub fn relative_slack_dynamic(&self) -> f64 {
        let t = &self.terms;
        let s = t.dissipation.abs()
            + t.coupling.abs()
            + t.stiffness.abs()
            + t.heating.abs()
            + (t.functional - t.initial).abs()
            + t.transport.abs()
            + t.conduction.abs();
        if s == 0.0 {
            self.slack.abs()
        } else {
            self.slack.abs() / s
        }
    }
}

struct FrameSums {
    rate: [f64; 4],
    remainder: [f64; 2],
    functional: f64,
}

fn frame_sums(
    u: &[f64],
    v: &[f64],
    theta: &[f64],
    c: &WFConstants,
    tf: &TestFunctions,
    params: &MaterialParams,
    law: &TemperatureLaw,
    dx: f64,
) -> FrameSums {
    let n = u.len();
    let d = params.diffusivity();
    let mut s = FrameSums {
        rate: [0.0; 4],
        remainder: [0.0; 2],
        functional: 0.0,
    };
    for i in 1..n - 1 {
        let (psi, psi_x, psi_xx) = (tf.psi[i], tf.psi_x[i], tf.psi_xx[i]);
        if psi == 0.0 && psi_x == 0.0 && psi_xx == 0.0 {
            continue;
        }
        let stiff = params.c0 * law.factor(theta[i]);
        let gamma = params.tau * stiff / params.rho;
        let big_gamma = gamma / params.c_heat;
        let ux = (u[i + 1] - u[i - 1]) / (2.0 * dx);
        let vx = (v[i + 1] - v[i - 1]) / (2.0 * dx);
        s.rate[0] += gamma * vx * vx * psi;
        s.rate[1] += c.a * gamma * ux * vx * psi;
        s.rate[2] -= c.kappa * ux * vx * psi;
        s.rate[3] -= c.lam * big_gamma * vx * vx * psi;
        s.remainder[0] -= (gamma * vx + c.a * gamma * ux) * v[i] * psi_x;
        s.remainder[1] += c.lam * d * theta[i] * psi_xx;
        s.functional += (0.5 * v[i] * v[i] + 0.5 * c.kappa * ux * ux + c.lam * theta[i]) * psi;
    }
    s.rate.iter_mut().for_each(|x| *x *= dx);
    s.remainder.iter_mut().for_each(|x| *x *= dx);
    s.functional *= dx;
    s
}

/// Evaluates both sides of the localized energy inequality on `traj`, with time
/// measured from its first frame. `slack = rhs − lhs` vanishes for smooth
/// solutions up to discretization error.
pub fn wf_residual(
    traj: &Trajectory,
    constants: &WFConstants,
    tests: &TestFunctions,
    params: &MaterialParams,
    law: &TemperatureLaw,
) -> Result<WFReport> {
    traj.check_unit_stride()?;
    if traj.frames.len() < 2 {
        return Err(DiagnosticsError::TooFewFrames {
            need: 2,
            have: traj.frames.len(),
        });
    }
    tests.validate(traj)?;
    let dx = traj.grid.dx;
    let t0 = traj.frames[0].t;
    let times: Vec<f64> = traj.frames.iter().map(|f| f.t - t0).collect();
    let w = step_weights(&times, &tests.zeta, constants.mu);
    let sums: Vec<FrameSums> = traj
        .frames
        .iter()
        .map(|f| frame_sums(&f.u, &f.v, &f.theta, constants, tests, params, law, dx))
        .collect();
    let g: Vec<f64> = times
        .iter()
        .zip(&tests.zeta)
        .map(|(&t, &z)| z * (-constants.mu * t).exp())
        .collect();

    let mut terms = WFTerms {
        initial: tests.zeta[0] * sums[0].functional,
        ..Default::default()
    };
    let last = sums.len() - 1;
    terms.functional = sums[0].functional * g[0] - sums[last].functional * g[last];
    for (m, wm) in w.iter().enumerate() {
        let h = times[m + 1] - times[m];
        let s = &sums[m];
        terms.dissipation += s.rate[0] * wm;
        terms.coupling += s.rate[1] * wm;
        terms.stiffness += s.rate[2] * wm;
        terms.heating += s.rate[3] * wm;
        terms.transport += s.remainder[0] * wm;
        terms.conduction += s.remainder[1] * wm;
        terms.functional += (sums[m + 1].functional - s.functional) / h * wm;
    }
    let lhs =
        terms.dissipation + terms.coupling + terms.stiffness + terms.heating + terms.functional;
    let rhs = terms.initial + terms.transport + terms.conduction;
    Ok(WFReport {
        lhs,
        rhs,
        slack: rhs - lhs,
        terms,
        constants: *constants,
        tests: tests.clone(),
    })
}

/// Terms of the weak heat inequality tested with `φ̂ = ψζ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WTReport {
    /// `−∫∫θφ̂_t`.
    pub time: f64,
    /// `−∫θ₀φ̂(·,0)`.
    pub initial: f64,
    /// `−D∫∫θΔφ̂`.
    pub diffusion: f64,
    /// `−∫∫Γv_x²φ̂`.
    pub source: f64,
    /// Sum of the four terms, `≥ 0` for supersolutions and `≈ 0` here.
    pub residual: f64,
    /// Sum of their magnitudes.
    pub scale: f64,
}

impl WTReport {
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.residual.abs()
        } else {
            self.residual.abs() / self.scale
        }
    }
}

/// Weak heat inequality residual with nodal sums in space and left-endpoint
/// rectangles in time.
pub fn wt_residual(
    traj: &Trajectory,
    tests: &TestFunctions,
    params: &MaterialParams,
    law: &TemperatureLaw,
) -> Result<WTReport> {
    traj.check_unit_stride()?;
    if traj.frames.len() < 2 {
        return Err(DiagnosticsError::TooFewFrames {
            need: 2,
            have: traj.frames.len(),
        });
    }
    tests.validate(traj)?;
    let (dx, dt) = (traj.grid.dx, traj.grid.dt);
    let n = traj.grid.nodes;
    let d = params.diffusivity();
    let (mut time, mut diffusion, mut source) = (0.0, 0.0, 0.0);
    for (m, f) in traj.frames[..traj.frames.len() - 1].iter().enumerate() {
        let (z, zt) = (tests.zeta[m], tests.zeta_t[m]);
        for i in 1..n - 1 {
            let psi = tests.psi[i];
            time -= f.theta[i] * psi * zt;
            diffusion -= d * f.theta[i] * tests.psi_xx[i] * z;
            if psi != 0.0 {
                let vx = (f.v[i + 1] - f.v[i - 1]) / (2.0 * dx);
                let big_gamma =
                    params.tau * params.c0 * law.factor(f.theta[i]) / (params.rho * params.c_heat);
                source -= big_gamma * vx * vx * psi * z;
            }
        }
    }
    let f0 = &traj.frames[0];
    let initial = -(0..n).map(|i| f0.theta[i] * tests.psi[i]).sum::<f64>() * tests.zeta[0] * dx;
    let (time, diffusion, source) = (time * dx * dt, diffusion * dx * dt, source * dx * dt);
    Ok(WTReport {
        time,
        initial,
        diffusion,
        source,
        residual: time + initial + diffusion + source,
        scale: time.abs() + initial.abs() + diffusion.abs() + source.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::Frame;
    use super::*;
    use crate::solver1d::Grid1D;

    #[test]
    fn scalar_constants() {
        let (g, a) = (0.016, 1e9);
        let c = choose_wf_constants((g, g), (g, g), a);
        assert!((c.kappa - a * g / 8.0).abs() <= 1e-15 * c.kappa);
        assert!((c.mu - 15.5 * a).abs() <= 1e-9 * c.mu);
        assert_eq!(c.constraints(), [true; 3]);
    }

    #[test]
    fn unit_constants() {
        let c = choose_wf_constants((1.0, 1.0), (1.0, 1.0), 1.0);
        assert_eq!(
            (c.eta2_gamma, c.eta1_gamma, c.eta1_big_gamma),
            (0.25, 0.5, 0.5)
        );
        assert_eq!((c.kappa, c.lam), (0.125, 0.03125));
        // margins: κ/a is half of η₂, λ half of (κ/a)η₁_Γ, third form twice a²/4
        assert!((c.kappa * (1.0 + 2.0 * c.mu) / 4.0 * c.eta1_gamma - 0.5).abs() < 1e-12);
    }

    #[test]
    fn exp_moments_branches_agree() {
        for &h in &[1e-3, 0.5, 1.0] {
            let mu = 0.1 / h;
            let (a0, a1) = exp_moments(mu * (1.0 - 1e-12), h);
            let (b0, b1) = exp_moments(mu * (1.0 + 1e-12), h);
            assert!((a0 - b0).abs() < 1e-12 * a0);
            assert!((a1 - b1).abs() < 1e-12 * a1);
        }
        let (i0, i1) = exp_moments(0.0, 2.0);
        assert_eq!((i0, i1), (2.0, 2.0));
    }

    fn toy() -> Trajectory {
        let grid = Grid1D {
            length: 4.0,
            nodes: 7,
            dx: 4.0 / 6.0,
            dt: 0.1,
        };
        let mut t = Trajectory::new(grid);
        for m in 0..4 {
            let f = |i: usize, s: f64| {
                if i == 0 || i == 6 {
                    0.0
                } else {
                    s * (1.0 + 0.3 * m as f64) * ((i * (7 - i)) as f64).sqrt()
                }
            };
            t.frames.push(Frame {
                step: m,
                t: m as f64 * 0.1,
                u: (0..7).map(|i| f(i, 0.01)).collect(),
                v: (0..7).map(|i| f(i, -0.2)).collect(),
                theta: (0..7).map(|i| f(i, 0.5)).collect(),
                clamped_mass: 0.0,
            });
        }
        t
    }

    fn toy_params() -> MaterialParams {
        MaterialParams {
            c0: 2.0,
            rho: 1.0,
            tau: 0.5,
            c_heat: 4.0,
            lambda_th: 3.0,
        }
    }

    #[test]
    fn zero_trajectory_balances() {
        let mut t = toy();
        for f in &mut t.frames {
            f.u.iter_mut()
                .chain(&mut f.v)
                .chain(&mut f.theta)
                .for_each(|x| *x = 0.0);
        }
        let tf = TestFunctions::bump_and_cutoff(&t, 2.0, 2.0, t.span()).unwrap();
        let c = choose_wf_constants((1.0, 1.0), (1.0, 1.0), 2.0);
        let r = wf_residual(&t, &c, &tf, &toy_params(), &TemperatureLaw::Constant).unwrap();
        assert_eq!((r.lhs, r.rhs, r.slack), (0.0, 0.0, 0.0));
        let w = wt_residual(&t, &tf, &toy_params(), &TemperatureLaw::Constant).unwrap();
        assert_eq!(w.residual, 0.0);
    }

    #[test]
    fn toy_trajectory_matches_hand_assembly() {
        let t = toy();
        let p = toy_params();
        let psi = vec![0.0, 0.0, 0.5, 1.0, 0.25, 0.0, 0.0];
        let zeta = vec![1.0, 0.5, 0.25, 0.0];
        let tf = TestFunctions::from_samples(&t, psi.clone(), zeta.clone()).unwrap();
        let c = WFConstants {
            kappa: 0.3,
            lam: 0.2,
            mu: 0.0,
            eta1_gamma: 1.0,
            eta1_big_gamma: 1.0,
            eta2_gamma: 1.0,
            a: 2.0,
        };
        let r = wf_residual(&t, &c, &tf, &p, &TemperatureLaw::Constant).unwrap();

        // μ = 0: step weights are trapezoids of ζ, and the F term telescopes to
        // Σ (F_{m+1} − F_m)/Δt · (w_m) + F₀ζ₀ − F₃ζ₃
        let (dx, dt) = (4.0 / 6.0, 0.1);
        let gamma = p.tau * p.c0 / p.rho;
        let big_gamma = gamma / p.c_heat;
        let d = p.lambda_th / (p.rho * p.c_heat);
        let psi_x = |i: usize| (psi[i + 1] - psi[i - 1]) / (2.0 * dx);
        let psi_xx = |i: usize| (psi[i + 1] - 2.0 * psi[i] + psi[i - 1]) / (dx * dx);
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        let mut fs = vec![];
        for f in &t.frames {
            let mut fv = 0.0;
            for i in 1..6 {
                let ux = (f.u[i + 1] - f.u[i - 1]) / (2.0 * dx);
                fv += (0.5 * f.v[i].powi(2) + 0.5 * 0.3 * ux * ux + 0.2 * f.theta[i]) * psi[i] * dx;
            }
            fs.push(fv);
        }
        for m in 0..3 {
            let f = &t.frames[m];
            let wm = 0.5 * (zeta[m] + zeta[m + 1]) * dt;
            for i in 1..6 {
                let ux = (f.u[i + 1] - f.u[i - 1]) / (2.0 * dx);
                let vx = (f.v[i + 1] - f.v[i - 1]) / (2.0 * dx);
                let rate = gamma * vx * vx + 2.0 * gamma * ux * vx
                    - 0.3 * ux * vx
                    - 0.2 * big_gamma * vx * vx;
                lhs += rate * psi[i] * dx * wm;
                rhs += (-(gamma * vx + 2.0 * gamma * ux) * f.v[i] * psi_x(i)
                    + 0.2 * d * f.theta[i] * psi_xx(i))
                    * dx
                    * wm;
            }
            lhs += (fs[m + 1] - fs[m]) / dt * wm;
        }
        lhs += fs[0] * zeta[0] - fs[3] * zeta[3];
        rhs += zeta[0] * fs[0];
        assert!(
            (r.lhs - lhs).abs() < 1e-12 * lhs.abs(),
            "{} vs {lhs}",
            r.lhs
        );
        assert!(
            (r.rhs - rhs).abs() < 1e-12 * rhs.abs(),
            "{} vs {rhs}",
            r.rhs
        );
    }

    #[test]
    fn support_beyond_window_is_rejected() {
        let t = toy();
        let span = t.span();
        assert!(matches!(
            TestFunctions::bump_and_cutoff(&t, 2.0, 2.0, 2.0 * span),
            Err(DiagnosticsError::SupportExceedsWindow { .. })
        ));
        assert!(TestFunctions::from_samples(&t, vec![0.0; 7], vec![1.0, 1.0, 1.0, 1.0]).is_err());
        let mut psi = vec![0.0; 7];
        psi[1] = 1.0;
        assert!(TestFunctions::from_samples(&t, psi, vec![1.0, 0.5, 0.0, 0.0]).is_err());
    }

    #[test]
    fn gauge_shift_of_u_leaves_slack() {
        let t = toy();
        let tf = TestFunctions::bump_and_cutoff(&t, 2.0, 2.0, t.span()).unwrap();
        let c = choose_wf_constants((1.0, 1.0), (0.25, 0.25), 2.0);
        let p = toy_params();
        let r0 = wf_residual(&t, &c, &tf, &p, &TemperatureLaw::Constant).unwrap();
        let mut shifted = t.clone();
        for f in &mut shifted.frames {
            f.u.iter_mut().for_each(|x| *x += 3.7);
        }
        let r1 = wf_residual(&shifted, &c, &tf, &p, &TemperatureLaw::Constant).unwrap();
        let scale = r0.lhs.abs() + r0.rhs.abs();
        assert!((r0.slack - r1.slack).abs() <= 1e-12 * scale);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn constants_always_admissible(
                kg in 1e-6..1e3f64, rg in 1.0..1e3f64,
                kb in 1e-6..1e3f64, rb in 1.0..1e3f64,
                a in 1e-3..1e10f64,
            ) {
                let c = choose_wf_constants((kg, kg * rg), (kb, kb * rb), a);
                prop_assert!(c.admissible());
            }

            #[test]
            fn constants_scale_homogeneously(
                kg in 1e-3..1e2f64, kb in 1e-3..1e2f64, a in 1e-2..1e4f64, s in 1e-3..1e3f64,
            ) {
                let c = choose_wf_constants((kg, 2.0 * kg), (kb, 3.0 * kb), a);
                let cg = choose_wf_constants((s * kg, 2.0 * s * kg), (kb, 3.0 * kb), a);
                let cb = choose_wf_constants((kg, 2.0 * kg), (s * kb, 3.0 * s * kb), a);
                let rel = |x: f64, y: f64| ((x - y) / y).abs();
                prop_assert!(rel(cg.kappa, s * c.kappa) < 1e-12);
                prop_assert!(rel(cg.mu, c.mu) < 1e-9);
                prop_assert!(rel(cb.lam, c.lam / s) < 1e-12);
                prop_assert!(cg.admissible() && cb.admissible());
            }
        }
    }
}
