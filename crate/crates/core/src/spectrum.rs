//! Statistics of the random medium and the transfer coefficient they induce.
//!
//! The potential has spatial power spectrum `R̂₀(p) = a(p) / |p|^(d+2α-2)` and
//! per-mode decorrelation rate (spectral gap) `𝔤(p) = ν |p|^(2β)`. Everything
//! downstream (the transfer coefficient `σ`, the characteristic exponent `Ψ`,
//! the jump law of the Lévy representation) is derived from a
//! [`SpectrumModel`], so this is the single place where the statistics live.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{adaptive, power_law_tail, GradedRule};

/// Raw parameters of the medium, as they appear in configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    pub dimension: usize,
    pub alpha: f64,
    pub beta: f64,
    pub nu: f64,
    pub a0: f64,
    pub p_max: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            dimension: 1,
            alpha: 0.75,
            beta: 0.5,
            nu: 1.0,
            a0: 1.0,
            p_max: 1.0,
        }
    }
}

impl ModelParams {
    /// Every violated constraint, keyed by its configuration field.
    pub fn violations(&self) -> Vec<Error> {
        let mut out = Vec::new();
        if self.dimension == 0 {
            out.push(Error::param("model.dimension", "must be a positive integer"));
        }
        if !(self.alpha > 0.5 && self.alpha < 1.0) {
            out.push(Error::param(
                "model.alpha",
                format!("{} is outside the open interval (1/2, 1)", self.alpha),
            ));
        }
        if !(self.beta > 0.0 && self.beta <= 0.5) {
            out.push(Error::param(
                "model.beta",
                format!("{} is outside the interval (0, 1/2]", self.beta),
            ));
        }
        let sum = self.alpha + self.beta;
        if sum.is_finite() && !(sum > 1.0 && sum < 1.5) {
            out.push(Error::param(
                "model.beta",
                format!("alpha + beta = {sum} must lie in (1, 3/2) so that theta is in (0, 1)"),
            ));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            out.push(Error::param("model.nu", format!("{} must be positive", self.nu)));
        }
        if !(self.a0 >= 0.0 && self.a0.is_finite()) {
            out.push(Error::param("model.a0", format!("{} must be nonnegative", self.a0)));
        }
        if !(self.p_max > 0.0 && self.p_max.is_finite()) {
            out.push(Error::param("model.p_max", format!("{} must be positive", self.p_max)));
        }
        out
    }
}

/// Radial profile `a(r)`: equal to `a0` on `[0, plateau·p_max]`, then a C^∞
/// step down to zero at `p_max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BumpProfile {
    plateau: f64,
}

impl Default for BumpProfile {
    fn default() -> Self {
        Self { plateau: 0.5 }
    }
}

impl BumpProfile {
    pub fn with_plateau(plateau: f64) -> Result<Self> {
        if !(plateau > 0.0 && plateau < 1.0) {
            return Err(Error::param(
                "model.plateau",
                format!("{plateau} must lie in (0, 1)"),
            ));
        }
        Ok(Self { plateau })
    }

    pub fn plateau(&self) -> f64 {
        self.plateau
    }

    /// `a(r) / a(0)`.
    pub fn shape(&self, r: f64, p_max: f64) -> f64 {
        let edge = self.plateau * p_max;
        if r <= edge {
            1.0
        } else if r >= p_max {
            0.0
        } else {
            smooth_step((r - edge) / (p_max - edge))
        }
    }
}

/// C^∞ transition from 1 at `u <= 0` to 0 at `u >= 1`.
fn smooth_step(u: f64) -> f64 {
    fn bump(s: f64) -> f64 {
        if s <= 0.0 {
            0.0
        } else {
            (-1.0 / s).exp()
        }
    }
    let up = bump(1.0 - u);
    up / (up + bump(u))
}

/// Surface area of the unit sphere in `R^d`.
pub fn sphere_area(dimension: usize) -> f64 {
    let half = dimension as f64 / 2.0;
    2.0 * PI.powf(half) / libm::tgamma(half)
}

/// Validated statistics of the random medium.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumModel {
    params: ModelParams,
    profile: BumpProfile,
    gap_floor: f64,
    theta: f64,
}

impl Default for SpectrumModel {
    fn default() -> Self {
        Self::new(ModelParams::default()).expect("default parameters are valid")
    }
}

/// Outcome of [`SpectrumModel::classify_decorrelation`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decorrelation {
    LongRange,
    ShortRange,
    Inconclusive,
}

#[derive(Clone, Debug)]
pub struct DecorrelationReport {
    pub class: Decorrelation,
    /// Growth exponent `e` of the shell sums, `S(r) ~ r^-e` as `r -> 0`.
    pub fitted_exponent: f64,
    /// Standard error of the fitted exponent.
    pub exponent_stderr: f64,
    pub predicted_theta: f64,
    /// Whether the fitted exponent is within 10% of `2(α+β-1)`.
    pub matches_prediction: bool,
    /// `(r_n, ∫_{r_n <= |p| <= p_max} R̂₀/𝔤 dp)` for geometrically shrinking `r_n`.
    pub shell_sums: Vec<(f64, f64)>,
}

impl SpectrumModel {
    pub fn new(params: ModelParams) -> Result<Self> {
        if let Some(err) = params.violations().into_iter().next() {
            return Err(err);
        }
        let theta = 2.0 * (params.alpha + params.beta - 1.0);
        Ok(Self {
            params,
            profile: BumpProfile::default(),
            gap_floor: 0.0,
            theta,
        })
    }

    pub fn with_profile(mut self, profile: BumpProfile) -> Self {
        self.profile = profile;
        self
    }

    /// Adds a constant `g0` to the spectral gap. Any `g0 > 0` makes the
    /// temporal correlations integrable (rapid decorrelation).
    pub fn with_gap_floor(mut self, g0: f64) -> Result<Self> {
        if !(g0 >= 0.0 && g0.is_finite()) {
            return Err(Error::param("model.gap_floor", format!("{g0} must be nonnegative")));
        }
        self.gap_floor = g0;
        Ok(self)
    }

    /// Same statistics with the amplitude `a(0)` replaced.
    pub fn with_amplitude(&self, a0: f64) -> Result<Self> {
        let params = ModelParams { a0, ..self.params.clone() };
        Ok(Self {
            profile: self.profile,
            gap_floor: self.gap_floor,
            ..Self::new(params)?
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }
    pub fn dimension(&self) -> usize {
        self.params.dimension
    }
    pub fn alpha(&self) -> f64 {
        self.params.alpha
    }
    pub fn beta(&self) -> f64 {
        self.params.beta
    }
    pub fn nu(&self) -> f64 {
        self.params.nu
    }
    pub fn a0(&self) -> f64 {
        self.params.a0
    }
    pub fn p_max(&self) -> f64 {
        self.params.p_max
    }
    pub fn profile(&self) -> BumpProfile {
        self.profile
    }
    pub fn gap_floor(&self) -> f64 {
        self.gap_floor
    }

    /// Long-range exponent `θ = 2(α+β-1)`.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Amplitude `a0/ν` of the small-|p| law `R̂₀/𝔤 ~ (a0/ν) |p|^-(d+θ)`.
    pub fn sigma_amp(&self) -> f64 {
        self.params.a0 / self.params.nu
    }

    /// `(2π)^d`.
    pub fn fourier_volume(&self) -> f64 {
        (2.0 * PI).powi(self.params.dimension as i32)
    }

    /// Radius where the plateau of `a` ends; integrands are exact power laws inside.
    pub(crate) fn plateau_edge(&self) -> f64 {
        self.profile.plateau() * self.params.p_max
    }

    /// `a(r)`.
    pub fn profile_at(&self, r: f64) -> f64 {
        self.params.a0 * self.profile.shape(r, self.params.p_max)
    }

    /// `R̂₀` at radius `r > 0`.
    pub fn r0_hat_radial(&self, r: f64) -> f64 {
        let a = self.profile_at(r);
        if a == 0.0 {
            return 0.0;
        }
        let d = self.params.dimension as f64;
        a / r.powf(d + 2.0 * self.params.alpha - 2.0)
    }

    /// Spectral gap `𝔤` at radius `r >= 0`.
    pub fn gap_radial(&self, r: f64) -> f64 {
        self.params.nu * r.powf(2.0 * self.params.beta) + self.gap_floor
    }

    /// `2 R̂₀ / 𝔤`: the zero-frequency power spectrum, shared by
    /// [`Self::eval_power_spectrum`] and the transfer coefficient.
    fn zero_frequency_power(&self, r: f64) -> f64 {
        let r0 = self.r0_hat_radial(r);
        if r0 == 0.0 {
            0.0
        } else {
            2.0 * r0 / self.gap_radial(r)
        }
    }

    /// Transfer coefficient `σ = 2 R̂₀ / ((2π)^d 𝔤)` at radius `r > 0`.
    pub fn sigma_radial(&self, r: f64) -> f64 {
        self.zero_frequency_power(r) / self.fourier_volume()
    }

    fn radius_of(&self, p: &[f64]) -> Result<f64> {
        if p.len() != self.params.dimension {
            return Err(Error::Domain(format!(
                "wavevector has {} components, model dimension is {}",
                p.len(),
                self.params.dimension
            )));
        }
        let r = p.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !r.is_finite() {
            return Err(Error::Domain("non-finite wavevector".into()));
        }
        if r == 0.0 {
            return Err(Error::Domain(
                "the spectrum is singular at p = 0 and is not evaluated there".into(),
            ));
        }
        Ok(r)
    }

    pub fn eval_sigma(&self, p: &[f64]) -> Result<f64> {
        Ok(self.sigma_radial(self.radius_of(p)?))
    }

    /// Space–time power spectrum `2𝔤R̂₀ / (ω² + 𝔤²)`.
    pub fn eval_power_spectrum(&self, omega: f64, p: &[f64]) -> Result<f64> {
        let r = self.radius_of(p)?;
        if omega == 0.0 {
            return Ok(self.zero_frequency_power(r));
        }
        let g = self.gap_radial(r);
        Ok(2.0 * g * self.r0_hat_radial(r) / (omega * omega + g * g))
    }

    /// Temporal correlation of a spectral mode, `e^{-𝔤|t|} R̂₀`.
    pub fn eval_time_corr(&self, t: f64, p: &[f64]) -> Result<f64> {
        let r = self.radius_of(p)?;
        Ok((-self.gap_radial(r) * t.abs()).exp() * self.r0_hat_radial(r))
    }

    /// `Ω_d ∫_lo^{p_max} r^{d-1} h(r) dr` for a radial integrand that is
    /// smooth on `(0, p_max]`. With `lo == 0` the part below the innermost
    /// shell is added assuming power-law behaviour there.
    pub(crate) fn radial_integral(
        &self,
        rule: &GradedRule,
        lo: f64,
        freq: f64,
        h: impl Fn(f64) -> f64,
    ) -> f64 {
        let d = self.params.dimension;
        let weight = |r: f64| if d == 1 { h(r) } else { r.powi(d as i32 - 1) * h(r) };
        let edge = self.plateau_edge();
        let p_max = self.params.p_max;
        let mut total = 0.0;
        if lo < edge {
            if lo == 0.0 {
                total += rule.integrate_to_origin(edge, freq, &weight);
                let r0 = rule.inner_radius(edge);
                total += origin_tail(&weight, r0);
            } else {
                total += rule.integrate_from(lo, edge, freq, &weight);
            }
        }
        let start = lo.max(edge);
        if start < p_max {
            total += rule.integrate_smooth(start, p_max, 8, freq, &weight);
        }
        sphere_area(d) * total
    }

    /// Growth of `∫ R̂₀/𝔤` over shrinking shells. Divergence with exponent
    /// `θ` is the slow temporal decorrelation of the potential.
    pub fn classify_decorrelation(&self) -> DecorrelationReport {
        const LEVELS: usize = 32;
        let rule = GradedRule::standard();
        let d = self.params.dimension;
        let ratio = |r: f64| {
            let g = self.gap_radial(r);
            let w = if d == 1 { 1.0 } else { r.powi(d as i32 - 1) };
            w * self.r0_hat_radial(r) / g
        };
        let mut radii = Vec::with_capacity(LEVELS);
        let mut increments = Vec::with_capacity(LEVELS);
        let mut outer = self.params.p_max;
        for _ in 0..LEVELS {
            let inner = 0.5 * outer;
            let inc = sphere_area(d) * rule.integrate_smooth(inner, outer, 8, 0.0, ratio);
            radii.push(inner);
            increments.push(inc);
            outer = inner;
        }
        let mut cumulative = 0.0;
        let shell_sums = radii
            .iter()
            .zip(&increments)
            .map(|(&r, &inc)| {
                cumulative += inc;
                (r, cumulative)
            })
            .collect();

        // An increment over [r/2, r] scales like r^-e; fit e on the deepest
        // half of the shells, where the profile is constant.
        let (xs, ys): (Vec<f64>, Vec<f64>) = radii[LEVELS / 2..]
            .iter()
            .zip(&increments[LEVELS / 2..])
            .filter(|(_, inc)| **inc > 0.0)
            .map(|(r, inc)| (-r.ln(), inc.ln()))
            .unzip();
        let (slope, stderr) = if xs.len() >= 3 {
            linear_fit(&xs, &ys)
        } else {
            (0.0, f64::INFINITY)
        };
        let noise = 1e-3 + 3.0 * stderr;
        let class = if slope > noise {
            Decorrelation::LongRange
        } else if slope < -noise {
            Decorrelation::ShortRange
        } else {
            Decorrelation::Inconclusive
        };
        DecorrelationReport {
            class,
            fitted_exponent: slope,
            exponent_stderr: stderr,
            predicted_theta: self.theta,
            matches_prediction: (slope - self.theta).abs() <= 0.1 * self.theta,
            shell_sums,
        }
    }

    /// `∫ R̂₀ |p|^k / 𝔤^k dp` for `k = 1, 2, 3`. Each value is computed on two
    /// mesh refinements; disagreement beyond `1e-6` relative means the
    /// integral does not converge and the model is rejected.
    pub fn regularity_integrals(&self) -> Result<[f64; 3]> {
        let mut out = [0.0; 3];
        for (slot, k) in out.iter_mut().zip(1..=3) {
            *slot = self
                .converged_radial_integral(|r| {
                    let r0 = self.r0_hat_radial(r);
                    if r0 == 0.0 {
                        0.0
                    } else {
                        r0 * (r / self.gap_radial(r)).powi(k)
                    }
                })
                .map_err(|e| Error::Quadrature(format!("regularity integral k = {k}: {e}")))?;
        }
        Ok(out)
    }

    /// Radial integral over the whole support, accepted only if it converges
    /// at the origin and two mesh refinements agree to `1e-6`.
    fn converged_radial_integral(&self, h: impl Fn(f64) -> f64) -> Result<f64> {
        let coarse = GradedRule::standard();
        let fine = GradedRule::refined();
        let d = self.params.dimension;
        let radial = |r: f64| r.powi(d as i32 - 1) * h(r);
        let r_in = fine.inner_radius(self.plateau_edge());
        if local_exponent(&radial, r_in) <= -1.0 {
            return Err(Error::Quadrature("integrand is not integrable at the origin".into()));
        }
        let a = self.radial_integral(&coarse, 0.0, 0.0, &h);
        let b = self.radial_integral(&fine, 0.0, 0.0, &h);
        if !(a.is_finite() && b.is_finite()) || (a - b).abs() > 1e-6 * b.abs().max(1e-300) {
            return Err(Error::Quadrature(format!(
                "not converged under mesh refinement ({a} vs {b})"
            )));
        }
        Ok(b)
    }
}

/// Power-law exponent of `f` at `r`, from `f(r)` and `f(2r)`.
fn local_exponent(f: &impl Fn(f64) -> f64, r: f64) -> f64 {
    let (a, b) = (f(r), f(2.0 * r));
    if a == 0.0 || b == 0.0 || a.signum() != b.signum() {
        return f64::INFINITY;
    }
    (b / a).ln() / std::f64::consts::LN_2
}

/// `∫_0^r f` assuming `f` is a pure power law on `(0, r]`.
fn origin_tail(f: &impl Fn(f64) -> f64, r: f64) -> f64 {
    let e = local_exponent(f, r);
    if e.is_finite() && e > -1.0 {
        power_law_tail(f(r), r, e)
    } else {
        0.0
    }
}

/// Least-squares slope and its standard error.
pub(crate) fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let stderr = if xs.len() > 2 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::INFINITY
    };
    (slope, stderr)
}

/// `sinc(b) - 1` without cancellation for small `b`.
fn sinc_minus_one(b: f64) -> f64 {
    if b.abs() < 1e-2 {
        let b2 = b * b;
        -b2 / 6.0 * (1.0 - b2 / 20.0 * (1.0 - b2 / 42.0))
    } else {
        b.sin() / b - 1.0
    }
}

/// Jump law `σ(p) dp` of the Lévy process behind the transfer operator,
/// optionally truncated to `|p| > delta` and rescaled to
/// `σ^η(p) = η^(d+θ) σ(ηp)`.
#[derive(Clone, Debug)]
pub struct JumpMeasure {
    model: SpectrumModel,
    delta: f64,
    eta: f64,
    rule: GradedRule,
}

impl JumpMeasure {
    pub fn new(model: SpectrumModel) -> Self {
        Self {
            model,
            delta: 0.0,
            eta: 1.0,
            rule: GradedRule::standard(),
        }
    }

    /// Keep only jumps with `|p| > delta` (`0` keeps the full measure).
    pub fn truncated(mut self, delta: f64) -> Result<Self> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::param("run.delta", format!("{delta} must be nonnegative")));
        }
        self.delta = delta;
        Ok(self)
    }

    /// Rescaled measure `σ^η(p) = η^(d+θ) σ(ηp)`.
    pub fn scaled(mut self, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::param("run.etas", format!("{eta} must be positive")));
        }
        self.eta = eta;
        Ok(self)
    }

    pub fn with_rule(mut self, rule: GradedRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn model(&self) -> &SpectrumModel {
        &self.model
    }
    pub fn theta(&self) -> f64 {
        self.model.theta()
    }
    pub fn sigma_amp(&self) -> f64 {
        self.model.sigma_amp()
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Radius beyond which the (scaled) measure vanishes.
    pub fn support_radius(&self) -> f64 {
        self.model.p_max() / self.eta
    }

    fn require_1d(&self, what: &'static str) -> Result<()> {
        match self.model.dimension() {
            1 => Ok(()),
            dimension => Err(Error::UnsupportedDimension { dimension, what }),
        }
    }

    /// Density at radius `r > 0`, including truncation and scaling.
    pub fn density_radial(&self, r: f64) -> f64 {
        if r <= self.delta {
            return 0.0;
        }
        let d = self.model.dimension() as f64;
        self.eta.powf(d + self.theta()) * self.model.sigma_radial(self.eta * r)
    }

    pub fn density(&self, p: &[f64]) -> Result<f64> {
        let r = self.model.radius_of(p)?;
        Ok(self.density_radial(r))
    }

    /// Lower cutoff in the unscaled variable `ηp`.
    fn base_cutoff(&self) -> f64 {
        self.eta * self.delta
    }

    /// `Σ_δ = ∫_{|p| > delta} σ^η(p) dp`; zero once `delta` exceeds the support.
    pub fn total_rate_above(&self, delta: f64) -> Result<f64> {
        if !(delta >= 0.0) {
            return Err(Error::Domain(format!("cutoff {delta} must be nonnegative")));
        }
        let lo = self.eta * delta.max(self.delta);
        if lo >= self.model.p_max() {
            return Ok(0.0);
        }
        if lo == 0.0 && self.model.gap_floor() == 0.0 && self.model.a0() > 0.0 {
            return Err(Error::Domain(
                "the untruncated long-range jump measure has infinite total rate".into(),
            ));
        }
        let rate = self.model.radial_integral(&self.rule, lo, 0.0, |r| self.model.sigma_radial(r));
        Ok(self.eta.powf(self.theta()) * rate)
    }

    /// Total rate of the measure's own truncation.
    pub fn total_rate(&self) -> Result<f64> {
        self.total_rate_above(self.delta)
    }

    /// `∫ |p|² σ^η(p) dp` over the retained jumps.
    pub fn second_moment(&self) -> f64 {
        let base = self
            .model
            .radial_integral(&self.rule, self.base_cutoff(), 0.0, |r| r * r * self.model.sigma_radial(r));
        base * self.eta.powf(self.theta() - 2.0)
    }

    /// `Ψ(q) = ∫ σ^η(p) (cos(p·q) - 1) dp`. Only the real part is formed;
    /// the imaginary part vanishes because `σ` is even.
    pub fn psi(&self, q: &[f64]) -> Result<f64> {
        self.require_1d("the characteristic exponent")?;
        if q.len() != 1 || !q[0].is_finite() {
            return Err(Error::Domain(format!("invalid argument {q:?}")));
        }
        Ok(self.psi_1d(q[0]))
    }

    pub(crate) fn psi_1d(&self, q: f64) -> f64 {
        if q == 0.0 {
            return 0.0;
        }
        let qs = q / self.eta;
        let base = self.model.radial_integral(&self.rule, self.base_cutoff(), qs.abs(), |r| {
            let s = (0.5 * r * qs).sin();
            -2.0 * s * s * self.model.sigma_radial(r)
        });
        self.eta.powf(self.theta()) * base
    }

    /// `∫_0^t Ψ(q + u y) du`, the logarithm of the damping factor of the
    /// kinetic solution at dual point `(y, q)`.
    pub fn psi_path_integral(&self, q: &[f64], y: &[f64], t: f64) -> Result<f64> {
        self.require_1d("the characteristic exponent")?;
        if q.len() != 1 || y.len() != 1 {
            return Err(Error::Domain("arguments must be one-dimensional".into()));
        }
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("time {t} must be nonnegative")));
        }
        Ok(self.path_integral_1d(q[0], y[0], t))
    }

    /// The `u`-integral is done in closed form under the `p`-integral:
    /// `∫_0^t (cos(p(q+uy)) - 1) du = t (cos(p(q + ty/2)) sinc(pty/2) - 1)`.
    pub(crate) fn path_integral_1d(&self, q: f64, y: f64, t: f64) -> f64 {
        if t == 0.0 || (q == 0.0 && y == 0.0) {
            return 0.0;
        }
        let qs = q / self.eta;
        let ys = y / self.eta;
        let centre = qs + 0.5 * t * ys;
        let half_shear = 0.5 * t * ys;
        let freq = qs.abs() + (t * ys).abs();
        let base = self.model.radial_integral(&self.rule, self.base_cutoff(), freq, |r| {
            let s = (0.5 * r * centre).sin();
            let b = r * half_shear;
            let sinc = if b == 0.0 { 1.0 } else { b.sin() / b };
            t * (-2.0 * s * s * sinc + sinc_minus_one(b)) * self.model.sigma_radial(r)
        });
        self.eta.powf(self.theta()) * base
    }

    /// Reference value of [`Self::psi_path_integral`] by adaptive quadrature
    /// of `Ψ` along the segment.
    pub fn psi_path_integral_adaptive(&self, q: f64, y: f64, t: f64, rel_tol: f64) -> Result<f64> {
        self.require_1d("the characteristic exponent")?;
        adaptive(|u| self.psi_1d(q + u * y), 0.0, t, rel_tol, 1e-300)
    }
}
