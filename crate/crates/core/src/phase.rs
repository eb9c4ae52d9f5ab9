//! Scaling exponents and variance constant of the random phase picked up
//! by the wave on the intermediate time scale.

use crate::error::{Error, Result};
use crate::quadrature::adaptive;
use crate::spectrum::{sphere_area, ModelParams};

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseScaling {
    /// `(α + 2β - 1) / (2β)`.
    pub kappa0: f64,
    /// `κ₀ / (1 - γ(α+β-1)/β)`.
    pub kappa_gamma: f64,
    /// Variance constant `D(κ_γ)`.
    pub d_const: f64,
    pub omega_d: f64,
    /// `∫_0^∞ e^{-ν ρ^{2β}} ρ^{1-2α} dρ`.
    pub rho_integral: f64,
}

impl PhaseScaling {
    /// Exponent `1/(2κ_γ)` of the phase scale `ε^{-1/(2κ_γ)}`.
    pub fn phase_exponent(&self) -> f64 {
        0.5 / self.kappa_gamma
    }
}

pub fn compute_scaling(params: &ModelParams, gamma: f64) -> Result<PhaseScaling> {
    if let Some(err) = params.violations().into_iter().next() {
        return Err(err);
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::param(
            "run.gamma",
            format!("{gamma} is outside the open interval (0, 1)"),
        ));
    }
    let ModelParams { alpha, beta, nu, a0, dimension, .. } = *params;
    let kappa0 = (alpha + 2.0 * beta - 1.0) / (2.0 * beta);
    // α < 1 gives α+β-1 < β, so this stays above 1-γ for admissible
    // parameters; kept as a guard.
    let denom = 1.0 - gamma * (alpha + beta - 1.0) / beta;
    if denom <= 0.0 {
        return Err(Error::Domain(format!(
            "gamma = {gamma} too large: 1 - γ(α+β-1)/β = {denom} is not positive"
        )));
    }
    let kappa_gamma = kappa0 / denom;
    let rho_integral = rho_integral(alpha, beta, nu)?;
    let omega_d = sphere_area(dimension);
    let two_pi_d = (2.0 * std::f64::consts::PI).powi(dimension as i32);
    let d_const = a0 * omega_d / (two_pi_d * kappa_gamma * (2.0 * kappa_gamma - 1.0)) * rho_integral;
    Ok(PhaseScaling {
        kappa0,
        kappa_gamma,
        d_const,
        omega_d,
        rho_integral,
    })
}

/// `∫_0^∞ e^{-ν ρ^{2β}} ρ^{1-2α} dρ` on a logarithmic axis `ρ = e^s`.
fn rho_integral(alpha: f64, beta: f64, nu: f64) -> Result<f64> {
    let lower_power = 2.0 - 2.0 * alpha;
    let f = |s: f64| {
        let rho = s.exp();
        (-nu * rho.powf(2.0 * beta)).exp() * rho.powf(lower_power)
    };
    // Below s_lo the exponential factor is 1 to double precision.
    let s_lo = ((1e-18 / nu).ln()) / (2.0 * beta);
    // Above s_hi the integrand underflows.
    let s_hi = ((745.0 / nu).ln()) / (2.0 * beta);
    let head = (lower_power * s_lo).exp() / lower_power;
    let body = adaptive(f, s_lo, s_hi, 1e-11, 0.0)?;
    Ok(head + body)
}
