//! Material constants and temperature-dependent stiffness laws.
//!
//! Temperatures are excess temperatures above the cooled boundary, so every
//! law is evaluated on `theta >= 0` only.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaterialError {
    #[error("material parameter `{name}` must be positive and finite, got {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("invalid temperature law: {0}")]
    InvalidLaw(String),
    #[error("temperature must be nonnegative, got {0}")]
    NegativeTemperature(f64),
}

/// Bulk constants of the resonator material, SI units throughout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    /// Stiffness at zero excess temperature (Pa).
    pub c0: f64,
    /// Density (kg/m³).
    pub rho: f64,
    /// Kelvin–Voigt retardation time (s).
    pub tau: f64,
    /// Specific heat capacity (J/(K·kg)).
    pub c_heat: f64,
    /// Thermal conductivity (W/(m·K)).
    pub lambda_th: f64,
}

impl MaterialParams {
    /// Approximate piezoceramic values used throughout the reference experiments.
    pub const PIEZOCERAMIC: MaterialParams = MaterialParams {
        c0: 124.8e9,
        rho: 7800.0,
        tau: 1e-9,
        c_heat: 350.0,
        lambda_th: 1.1,
    };

    pub fn validate(&self) -> Result<(), MaterialError> {
        for (name, value) in [
            ("c0", self.c0),
            ("rho", self.rho),
            ("tau", self.tau),
            ("c_heat", self.c_heat),
            ("lambda_th", self.lambda_th),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(MaterialError::InvalidParameter { name, value });
            }
        }
        Ok(())
    }

    /// Thermal diffusivity `λ/(cρ)` (m²/s).
    pub fn diffusivity(&self) -> f64 {
        self.lambda_th / (self.c_heat * self.rho)
    }

    /// Volumetric heat capacity `cρ` (J/(K·m³)).
    pub fn heat_capacity(&self) -> f64 {
        self.c_heat * self.rho
    }
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self::PIEZOCERAMIC
    }
}

/// Stiffness as a function of excess temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TemperatureLaw {
    Constant,
    /// `C = C0·(1 + k·θ^p)`; unbounded in θ whenever `k > 0`.
    PowerLaw {
        k: f64,
        p: f64,
    },
    /// `C = C0·(α + (1-α)·e^{-bθ})`, tending to `α·C0` for large θ.
    Exponential {
        alpha: f64,
        b: f64,
    },
}

impl TemperatureLaw {
    pub fn validate(&self) -> Result<(), MaterialError> {
        match *self {
            TemperatureLaw::Constant => Ok(()),
            TemperatureLaw::PowerLaw { k, p } => {
                if !(k >= 0.0 && k.is_finite()) {
                    Err(MaterialError::InvalidLaw(format!(
                        "power law needs k >= 0, got {k}"
                    )))
                } else if !(p > 0.0 && p.is_finite()) {
                    Err(MaterialError::InvalidLaw(format!(
                        "power law needs p > 0, got {p}"
                    )))
                } else {
                    Ok(())
                }
            }
            TemperatureLaw::Exponential { alpha, b } => {
                if !(alpha > 0.0 && alpha.is_finite()) {
                    Err(MaterialError::InvalidLaw(format!(
                        "exponential law needs alpha > 0, got {alpha}"
                    )))
                } else if !(b >= 0.0 && b.is_finite()) {
                    Err(MaterialError::InvalidLaw(format!(
                        "exponential law needs b >= 0, got {b}"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Dimensionless multiplier `C(θ)/C0`. No sign check; callers guarantee `theta >= 0`.
    #[inline]
    pub fn factor(&self, theta: f64) -> f64 {
        match *self {
            TemperatureLaw::Constant => 1.0,
            TemperatureLaw::PowerLaw { k, p } => {
                // 0^p = 0 for every p > 0
                if theta == 0.0 {
                    1.0
                } else if p == 1.0 {
                    1.0 + k * theta
                } else {
                    1.0 + k * theta.powf(p)
                }
            }
            TemperatureLaw::Exponential { alpha, b } => alpha + (1.0 - alpha) * (-b * theta).exp(),
        }
    }

    /// Whether `C(θ)` stays bounded for all θ ≥ 0.
    pub fn is_bounded(&self) -> bool {
        match *self {
            TemperatureLaw::PowerLaw { k, .. } => k == 0.0,
            _ => true,
        }
    }
}

/// `C(θ)` in Pa.
pub fn stiffness(
    law: &TemperatureLaw,
    params: &MaterialParams,
    theta: f64,
) -> Result<f64, MaterialError> {
    if theta < 0.0 || theta.is_nan() {
        return Err(MaterialError::NegativeTemperature(theta));
    }
    Ok(params.c0 * law.factor(theta))
}

/// Phase velocity `√(C/ρ)` of the lossless wave equation.
pub fn phase_velocity(params: &MaterialParams, c: f64) -> f64 {
    (c / params.rho).sqrt()
}

/// Coefficients of the normalized system `u_tt = div(γ:∇ˢu_t) + a·div(γ:∇ˢu)`,
/// `Θ_t = DΔΘ + ⟨Γ:∇ˢu_t, ∇ˢu_t⟩` with `γ = gamma_scale·C`, `Γ = big_gamma_scale·C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisCoefficients {
    /// `1/τ` (1/s).
    pub a: f64,
    /// `λ/(cρ)` (m²/s).
    pub d: f64,
    /// `τ/ρ`.
    pub gamma_scale: f64,
    /// `τ/(cρ)`.
    pub big_gamma_scale: f64,
}

impl AnalysisCoefficients {
    /// `γ = τC/ρ`.
    pub fn gamma(&self, c: f64) -> f64 {
        self.gamma_scale * c
    }

    /// `Γ = τC/(cρ)`.
    pub fn big_gamma(&self, c: f64) -> f64 {
        self.big_gamma_scale * c
    }
}

pub fn analysis_coefficients(params: &MaterialParams) -> AnalysisCoefficients {
    AnalysisCoefficients {
        a: 1.0 / params.tau,
        d: params.diffusivity(),
        gamma_scale: params.tau / params.rho,
        big_gamma_scale: params.tau / params.heat_capacity(),
    }
}

/// Stiffness range over `[0, theta_max]` (`theta_max` may be `f64::INFINITY`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LawBounds {
    pub c_min: f64,
    pub c_max: f64,
    /// False when the law leaves the bounded-coefficient class for large θ.
    pub bounded_on_all_theta: bool,
}

pub fn law_bounds(law: &TemperatureLaw, params: &MaterialParams, theta_max: f64) -> LawBounds {
    let theta_max = theta_max.max(0.0);
    // every supported law is monotone, so the endpoints are the extremes
    let at_zero = params.c0 * law.factor(0.0);
    let at_max = if theta_max.is_infinite() {
        match *law {
            TemperatureLaw::Constant => params.c0,
            TemperatureLaw::PowerLaw { k: 0.0, .. } => params.c0,
            TemperatureLaw::PowerLaw { .. } => f64::INFINITY,
            TemperatureLaw::Exponential { alpha, b } if b > 0.0 => alpha * params.c0,
            TemperatureLaw::Exponential { .. } => params.c0,
        }
    } else {
        params.c0 * law.factor(theta_max)
    };
    LawBounds {
        c_min: at_zero.min(at_max),
        c_max: at_zero.max(at_max),
        bounded_on_all_theta: law.is_bounded(),
    }
}
