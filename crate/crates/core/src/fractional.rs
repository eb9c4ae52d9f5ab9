//! The small-`η` limit of the rescaled jump law: a pure power-law Lévy
//! measure whose transfer operator is a fractional Laplacian in `k`.

use std::f64::consts::PI;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::grid::WignerField;
use crate::kinetic::{evolve, solve_fourier, Damping};
use crate::quadrature::{power_law_tail, GradedRule};
use crate::spectrum::{linear_fit, sphere_area, JumpMeasure};

/// Arguments at which `-Ψ^∞(q)/|q|^θ` must agree.
pub const CONSTANCY_PROBES: [f64; 4] = [1.0, 3.0, 10.0, 30.0];
/// Allowed relative spread of `-Ψ^∞(q)/|q|^θ` over [`CONSTANCY_PROBES`].
pub const CONSTANCY_TOLERANCE: f64 = 5e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FractionalModel {
    pub theta: f64,
    /// `Ψ^∞(q) = -c_theta |q|^θ`.
    pub c_theta: f64,
    pub dimension: usize,
}

impl FractionalModel {
    pub fn new(theta: f64, c_theta: f64, dimension: usize) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::param("fractional.theta", format!("{theta} is outside (0, 1)")));
        }
        if !(c_theta >= 0.0 && c_theta.is_finite()) {
            return Err(Error::param("fractional.c_theta", format!("{c_theta} must be nonnegative")));
        }
        if dimension != 1 {
            return Err(Error::UnsupportedDimension {
                dimension,
                what: "the fractional solver",
            });
        }
        Ok(Self { theta, c_theta, dimension })
    }

    pub fn psi(&self, q: f64) -> f64 {
        -self.c_theta * q.abs().powf(self.theta)
    }

    /// `∫_0^t |q + u y|^θ du`.
    pub fn path_integral(&self, q: f64, y: f64, t: f64) -> f64 {
        abs_power_integral(q, y, t, self.theta)
    }
}

impl Damping for FractionalModel {
    fn log_damping(&self, q: f64, y: f64, t: f64) -> f64 {
        if self.c_theta == 0.0 {
            return 0.0;
        }
        -self.c_theta * self.path_integral(q, y, t)
    }
}

/// `∫_0^t |q + u y|^θ du` through the antiderivative `sgn(s)|s|^{1+θ}/(1+θ)`,
/// switching to the binomial series when the segment is short against `|q|`.
fn abs_power_integral(q: f64, y: f64, t: f64, theta: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    if y == 0.0 {
        return t * q.abs().powf(theta);
    }
    let z = if q == 0.0 { f64::INFINITY } else { t * y / q };
    if z.abs() < 1e-3 {
        // (1+z)^θ integrated over the unit interval.
        let mut coeff = 1.0;
        let mut sum = 0.0;
        let mut zn = 1.0;
        for n in 0..6 {
            sum += coeff * zn / (n as f64 + 1.0);
            coeff *= (theta - n as f64) / (n as f64 + 1.0);
            zn *= z;
        }
        return t * q.abs().powf(theta) * sum;
    }
    let anti = |s: f64| s.signum() * s.abs().powf(1.0 + theta) / (1.0 + theta);
    (anti(q + t * y) - anti(q)) / y
}

/// Amplitude `A` of the limit law `σ^∞(p) = A / ((2π)^d |p|^{d+θ})`.
/// Since `σ = 2R̂₀/((2π)^d 𝔤)`, `A = 2 a0/ν`.
pub fn limit_amplitude(jump: &JumpMeasure) -> f64 {
    2.0 * jump.sigma_amp()
}

/// `σ^∞(p)`.
pub fn limit_sigma(jump: &JumpMeasure, p: f64) -> f64 {
    let m = jump.model();
    limit_amplitude(jump) / (m.fourier_volume() * p.abs().powf(m.dimension() as f64 + m.theta()))
}

/// `η^{d+θ} σ(ηp)`, applied on top of any scaling `jump` already carries.
pub fn scaled_sigma(jump: &JumpMeasure, eta: f64, p: &[f64]) -> Result<f64> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::param("run.etas", format!("{eta} must be positive")));
    }
    let d = jump.model().dimension() as f64;
    let scaled: Vec<f64> = p.iter().map(|c| eta * c).collect();
    Ok(eta.powf(d + jump.theta()) * jump.density(&scaled)?)
}

/// `Ψ^∞(q) = ∫ σ^∞(p) (cos(pq) - 1) dp` by quadrature.
///
/// The integral over `(0, R)` uses a graded mesh; beyond `R` the `-1` part is
/// integrated exactly and the cosine part by two integrations by parts, the
/// remainder being `O((|q| R)^{-3-θ})` relative.
pub fn psi_limit(jump: &JumpMeasure, q: f64) -> Result<f64> {
    let m = jump.model();
    if m.dimension() != 1 {
        return Err(Error::UnsupportedDimension {
            dimension: m.dimension(),
            what: "the limit characteristic exponent",
        });
    }
    if !q.is_finite() {
        return Err(Error::Domain(format!("argument {q} is not finite")));
    }
    if q == 0.0 {
        return Ok(0.0);
    }
    let theta = m.theta();
    let q = q.abs();
    let outer = 1e3 * (1.0 / q).max(1.0);
    let rule = GradedRule::refined();
    let f = |p: f64| {
        let s = (0.5 * p * q).sin();
        2.0 * s * s * p.powf(-1.0 - theta)
    };
    let body = rule.integrate_to_origin(outer, q, f);
    let inner = rule.inner_radius(outer);
    let head = power_law_tail(f(inner), inner, 1.0 - theta);
    let (sin_r, cos_r) = (q * outer).sin_cos();
    let cos_tail = -sin_r / (q * outer.powf(1.0 + theta))
        + (1.0 + theta) * cos_r / (q * q * outer.powf(2.0 + theta));
    let tail = outer.powf(-theta) / theta - cos_tail;
    // Both half-lines.
    let one_minus_cos = 2.0 * (body + head + tail);
    Ok(-limit_amplitude(jump) / m.fourier_volume() * one_minus_cos)
}

#[derive(Clone, Debug)]
pub struct ConstantReport {
    pub model: FractionalModel,
    /// `-Ψ^∞(q)/|q|^θ` at each of [`CONSTANCY_PROBES`].
    pub ratios: Vec<f64>,
    pub spread: f64,
    /// Log-log slope of `-Ψ^∞` against `|q|`.
    pub fitted_exponent: f64,
    /// `A θ Γ(1-θ) ∫_{S^{d-1}} |e₁·u|^θ dS / (2π)^d`.
    pub sphere_formula: f64,
    /// `c_theta / sphere_formula`.
    pub ratio_to_sphere_formula: f64,
    /// Ratio outside `[0.95, 1.05]`.
    pub sphere_formula_flagged: bool,
}

/// Damping constant of the limit law, obtained from the quadrature of
/// `Ψ^∞`, with the comparison against the sphere-integral formula.
pub fn sigma_theta_report(jump: &JumpMeasure) -> Result<ConstantReport> {
    let theta = jump.theta();
    let d = jump.model().dimension();
    let mut psis = Vec::with_capacity(CONSTANCY_PROBES.len());
    for &q in &CONSTANCY_PROBES {
        psis.push(-psi_limit(jump, q)?);
    }
    let ratios: Vec<f64> = CONSTANCY_PROBES.iter().zip(&psis).map(|(q, v)| v / q.powf(theta)).collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let spread = ratios.iter().map(|r| (r - mean).abs()).fold(0.0, f64::max) / mean;
    if !(spread <= CONSTANCY_TOLERANCE) {
        return Err(Error::Internal(format!(
            "-Ψ^∞(q)/|q|^θ varies by {spread:.3e} over q = {CONSTANCY_PROBES:?}: {ratios:?}"
        )));
    }
    let xs: Vec<f64> = CONSTANCY_PROBES.iter().map(|q| q.ln()).collect();
    let ys: Vec<f64> = psis.iter().map(|v| v.ln()).collect();
    let (fitted_exponent, _) = linear_fit(&xs, &ys);

    // In d = 1 the sphere is {±1} and the integral equals 2.
    let sphere = if d == 1 { 2.0 } else { sphere_area(d) };
    let sphere_formula = limit_amplitude(jump) * theta * libm::tgamma(1.0 - theta) * sphere
        / (2.0 * PI).powi(d as i32);
    let ratio = mean / sphere_formula;
    Ok(ConstantReport {
        model: FractionalModel::new(theta, mean, d)?,
        ratios,
        spread,
        fitted_exponent,
        sphere_formula,
        ratio_to_sphere_formula: ratio,
        sphere_formula_flagged: !(0.95..=1.05).contains(&ratio),
    })
}

pub fn sigma_theta_constant(jump: &JumpMeasure) -> Result<FractionalModel> {
    sigma_theta_report(jump).map(|r| r.model)
}

/// Solution of the fractional transfer equation at time `t >= 0`.
pub fn solve_fractional(w0: &WignerField, frac: &FractionalModel, t: f64) -> Result<WignerField> {
    if t < 0.0 {
        return Err(Error::Domain(format!("time {t} must be nonnegative")));
    }
    evolve(w0, frac, t).map(|(w, _)| w)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EtaRow {
    pub eta: f64,
    /// `‖W^η(t) - W^∞(t)‖ / ‖w0‖`.
    pub l2_error: f64,
    pub runtime_seconds: f64,
}

#[derive(Clone, Debug)]
pub struct EtaReport {
    pub rows: Vec<EtaRow>,
    pub limit: FractionalModel,
    /// Errors strictly decrease along the `η` sequence.
    pub monotone: bool,
}

impl EtaReport {
    pub fn write_csv(&self, out: &mut impl std::io::Write) -> Result<()> {
        writeln!(out, "eta,l2_error,runtime_seconds")?;
        for r in &self.rows {
            writeln!(out, "{:.16e},{:.16e},{:.6}", r.eta, r.l2_error, r.runtime_seconds)?;
        }
        Ok(())
    }
}

/// Distance between the rescaled solutions `W^η(t)` and the fractional limit.
pub fn eta_convergence_report(w0: &WignerField, jump: &JumpMeasure, t: f64, etas: &[f64]) -> Result<EtaReport> {
    if etas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::param("run.etas", "values must be strictly decreasing"));
    }
    let limit = sigma_theta_constant(jump)?;
    let w_inf = solve_fractional(w0, &limit, t)?;
    let norm0 = w0.l2_norm();
    let mut rows = Vec::with_capacity(etas.len());
    for &eta in etas {
        let start = Instant::now();
        let scaled = jump.clone().scaled(jump.eta() * eta)?;
        let w_eta = solve_fourier(w0, &scaled, t)?;
        let diff = w_eta.difference(&w_inf)?.l2_norm();
        rows.push(EtaRow {
            eta,
            l2_error: if norm0 > 0.0 { diff / norm0 } else { 0.0 },
            runtime_seconds: start.elapsed().as_secs_f64(),
        });
    }
    let monotone = rows.windows(2).all(|w| w[1].l2_error < w[0].l2_error);
    Ok(EtaReport { rows, limit, monotone })
}
