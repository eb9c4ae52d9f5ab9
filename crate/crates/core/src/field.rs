//! Spectral synthesis of the time-dependent Gaussian potential.
//!
//! On a periodic grid of length `L` the potential is
//! `V(x) = (1/2π) Σ_j m_j e^{i p_j x}` with `p_j = 2πj/L`. Each amplitude is an
//! independent complex Ornstein–Uhlenbeck process with stationary variance
//! `v_j = 2π ∫_cell R̂₀` and relaxation rate `𝔤(p_j)`, so that
//! `E[V(t+s, x) V(t, x')] = (1/2π) Σ_j e^{-𝔤(p_j)s} e^{i p_j (x-x')} ∫_cell R̂₀`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::quadrature::{power_law_tail, GradedRule};
use crate::rng::{complex_normal, normal, stream, Domain};
use crate::spectrum::SpectrumModel;

/// Periodic sample points `x_i = origin + i·spacing`, `i < n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldGrid {
    pub n: usize,
    pub spacing: f64,
    pub origin: f64,
}

impl FieldGrid {
    pub fn new(n: usize, spacing: f64, origin: f64) -> Result<Self> {
        if !(n >= 2 && n.is_power_of_two()) {
            return Err(Error::param("grid.n_x", format!("{n} is not a power of two >= 2")));
        }
        if !(spacing > 0.0 && spacing.is_finite() && origin.is_finite()) {
            return Err(Error::param("grid.L_x", "spacing must be positive and finite"));
        }
        Ok(Self { n, spacing, origin })
    }

    /// Grid centred on zero: `[-n·h/2, n·h/2)`.
    pub fn centred(n: usize, spacing: f64) -> Result<Self> {
        Self::new(n, spacing, -0.5 * n as f64 * spacing)
    }

    pub fn period(&self) -> f64 {
        self.n as f64 * self.spacing
    }

    pub fn x(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.spacing
    }

    pub fn nyquist(&self) -> f64 {
        PI / self.spacing
    }

    pub fn dp(&self) -> f64 {
        2.0 * PI / self.period()
    }
}

/// A source of potential samples that can be moved forward in (fast) time.
pub trait Potential {
    fn advance(&mut self, dt: f64) -> Result<()>;
    fn realize_into(&self, out: &mut [f64]) -> Result<()>;
    /// Largest relaxation rate present; bounds the admissible time step.
    fn max_rate(&self) -> f64;
}

/// Amplitudes of the Fourier modes `p_j`, `j = 0..=J`; negative modes are
/// the complex conjugates and are never stored.
#[derive(Clone)]
pub struct FieldState {
    grid: FieldGrid,
    modes: Vec<Complex64>,
    variance: Vec<f64>,
    rate: Vec<f64>,
    rngs: Vec<ChaCha8Rng>,
    time: f64,
    plan: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FieldState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FieldState")
            .field("grid", &self.grid)
            .field("modes", &self.modes.len())
            .field("time", &self.time)
            .finish()
    }
}

/// `∫_lo^hi R̂₀(r) dr` for `0 <= lo < hi`.
fn radial_segment(model: &SpectrumModel, lo: f64, hi: f64) -> f64 {
    let rule = GradedRule::standard();
    let f = |r: f64| model.r0_hat_radial(r);
    if lo == 0.0 {
        let inner = rule.inner_radius(hi);
        let body = rule.integrate_to_origin(hi, 0.0, f);
        let exponent = -(model.dimension() as f64 + 2.0 * model.alpha() - 2.0);
        body + power_law_tail(f(inner), inner, exponent)
    } else {
        rule.integrate_from(lo, hi, 0.0, f)
    }
}

/// Cell integrals `c_j = ∫_{|p - p_j| < Δp/2} R̂₀(p) dp` for `j = 0, 1, ...`
/// up to the last cell touching the support.
pub fn cell_integrals(model: &SpectrumModel, grid: &FieldGrid) -> Result<Vec<f64>> {
    if model.dimension() != 1 {
        return Err(Error::UnsupportedDimension {
            dimension: model.dimension(),
            what: "field synthesis",
        });
    }
    let dp = grid.dp();
    if grid.nyquist() - 0.5 * dp < model.p_max() {
        return Err(Error::Grid(format!(
            "grid too coarse: Nyquist wavenumber {} does not resolve p_max = {}",
            grid.nyquist(),
            model.p_max()
        )));
    }
    let last = (model.p_max() / dp + 0.5).ceil() as usize;
    let mut cells = Vec::with_capacity(last + 1);
    cells.push(2.0 * radial_segment(model, 0.0, (0.5 * dp).min(model.p_max())));
    for j in 1..=last {
        let lo = (j as f64 - 0.5) * dp;
        let hi = ((j as f64 + 0.5) * dp).min(model.p_max());
        cells.push(if lo < hi { radial_segment(model, lo, hi) } else { 0.0 });
    }
    while cells.len() > 1 && *cells.last().expect("nonempty") == 0.0 {
        cells.pop();
    }
    Ok(cells)
}

impl FieldState {
    /// Draws the modes from their stationary law.
    pub fn init(model: &SpectrumModel, grid: FieldGrid, seed: u64) -> Result<Self> {
        let cells = cell_integrals(model, &grid)?;
        let dp = grid.dp();
        let variance: Vec<f64> = cells.iter().map(|c| 2.0 * PI * c).collect();
        let rate: Vec<f64> = (0..cells.len()).map(|j| model.gap_radial(j as f64 * dp)).collect();
        let mut rngs: Vec<ChaCha8Rng> = (0..cells.len())
            .map(|j| stream(seed, Domain::FieldModes, j as u64))
            .collect();
        let modes = rngs
            .iter_mut()
            .zip(&variance)
            .enumerate()
            .map(|(j, (rng, v))| {
                if j == 0 {
                    Complex64::new(v.sqrt() * normal(rng), 0.0)
                } else {
                    v.sqrt() * complex_normal(rng)
                }
            })
            .collect();
        let plan = FftPlanner::new().plan_fft_inverse(grid.n);
        Ok(Self {
            grid,
            modes,
            variance,
            rate,
            rngs,
            time: 0.0,
            plan,
        })
    }

    pub fn grid(&self) -> &FieldGrid {
        &self.grid
    }
    pub fn modes(&self) -> &[Complex64] {
        &self.modes
    }
    pub fn variances(&self) -> &[f64] {
        &self.variance
    }
    pub fn rates(&self) -> &[f64] {
        &self.rate
    }
    pub fn time(&self) -> f64 {
        self.time
    }

    /// Wavenumber of stored mode `j`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        j as f64 * self.grid.dp()
    }

    /// Overwrites mode `j`. Mode 0 must be real.
    pub fn set_mode(&mut self, j: usize, value: Complex64) -> Result<()> {
        if j >= self.modes.len() {
            return Err(Error::Domain(format!("mode {j} is not stored")));
        }
        if j == 0 && value.im != 0.0 {
            return Err(Error::Domain("the p = 0 amplitude must be real".into()));
        }
        self.modes[j] = value;
        Ok(())
    }

    /// Exact OU transition over `dt`.
    pub fn advance(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Domain(format!("time step {dt} must be positive")));
        }
        self.modes
            .par_iter_mut()
            .zip(self.rngs.par_iter_mut())
            .zip(self.variance.par_iter().zip(self.rate.par_iter()))
            .enumerate()
            .for_each(|(j, ((m, rng), (v, g)))| {
                let decay = (-g * dt).exp();
                let kick = (v * (1.0 - decay * decay)).sqrt();
                let xi = if j == 0 {
                    Complex64::new(normal(rng), 0.0)
                } else {
                    complex_normal(rng)
                };
                *m = decay * *m + kick * xi;
            });
        self.time += dt;
        Ok(())
    }

    /// `V` on the grid.
    pub fn realize(&self) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.grid.n];
        self.realize_into(&mut out)?;
        Ok(out)
    }

    pub fn realize_into(&self, out: &mut [f64]) -> Result<()> {
        let n = self.grid.n;
        if out.len() != n {
            return Err(Error::Grid(format!("output has {} points, grid has {n}", out.len())));
        }
        let mut buf = vec![Complex64::default(); n];
        let dp = self.grid.dp();
        for (j, m) in self.modes.iter().enumerate() {
            // Fold the grid origin into the amplitude: e^{i p_j x_i} = e^{i p_j x_0} e^{2πi ij/n}.
            let z = m * Complex64::from_polar(1.0, j as f64 * dp * self.grid.origin);
            buf[j] += z;
            if j > 0 {
                buf[n - j] += z.conj();
            }
        }
        self.plan.process(&mut buf);
        let scale = 1.0 / (2.0 * PI);
        let mut sum_sq = 0.0;
        let mut max_im = 0.0f64;
        for (o, z) in out.iter_mut().zip(&buf) {
            *o = z.re * scale;
            sum_sq += o.powi(2);
            max_im = max_im.max((z.im * scale).abs());
        }
        let rms = (sum_sq / n as f64).sqrt();
        if max_im > 1e-12 * rms.max(f64::MIN_POSITIVE) && max_im > 1e-300 {
            return Err(Error::Internal(format!(
                "realized potential has imaginary residue {max_im:e} against RMS {rms:e}"
            )));
        }
        Ok(())
    }

    /// Stationary covariance of the discretized field at time lag `s`:
    /// `(1/2π)² Σ_j v_j e^{-𝔤(p_j) s}` over positive and negative modes.
    pub fn discrete_covariance(&self, s: f64) -> f64 {
        let total: f64 = self
            .variance
            .iter()
            .zip(&self.rate)
            .enumerate()
            .map(|(j, (v, g))| {
                let mult = if j == 0 { 1.0 } else { 2.0 };
                mult * v * (-g * s.abs()).exp()
            })
            .sum();
        total / (4.0 * PI * PI)
    }
}

impl Potential for FieldState {
    fn advance(&mut self, dt: f64) -> Result<()> {
        FieldState::advance(self, dt)
    }
    fn realize_into(&self, out: &mut [f64]) -> Result<()> {
        FieldState::realize_into(self, out)
    }
    fn max_rate(&self) -> f64 {
        self.rate.iter().fold(0.0, |m: f64, g| m.max(*g))
    }
}

/// A realization whose time dynamics are switched off.
#[derive(Clone, Debug)]
pub struct FrozenPotential(pub FieldState);

impl Potential for FrozenPotential {
    fn advance(&mut self, _dt: f64) -> Result<()> {
        Ok(())
    }
    fn realize_into(&self, out: &mut [f64]) -> Result<()> {
        self.0.realize_into(out)
    }
    fn max_rate(&self) -> f64 {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::ModelParams;

    fn grid() -> FieldGrid {
        FieldGrid::centred(128, 0.5).unwrap()
    }

    #[test]
    fn zero_amplitude_gives_zero_field() {
        let model = SpectrumModel::new(ModelParams { a0: 0.0, ..Default::default() }).unwrap();
        let mut f = FieldState::init(&model, grid(), 3).unwrap();
        assert!(f.realize().unwrap().iter().all(|v| *v == 0.0));
        f.advance(0.3).unwrap();
        assert!(f.realize().unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let g = FieldGrid::centred(64, 4.0).unwrap();
        assert!(FieldState::init(&SpectrumModel::default(), g, 0).is_err());
    }

    #[test]
    fn cell_integrals_sum_to_total_mass() {
        let model = SpectrumModel::default();
        let cells = cell_integrals(&model, &grid()).unwrap();
        let total: f64 = cells[0] + 2.0 * cells[1..].iter().sum::<f64>();
        // ∫ R̂₀ over the line: 2 ∫_0^1 a(r) r^{-1/2} dr.
        let exact = 2.0 * crate::quadrature::adaptive(|r| model.profile_at(r) / r.sqrt(), 0.0, 1.0, 1e-12, 0.0).unwrap();
        assert!((total - exact).abs() < 1e-8 * exact, "{total} {exact}");
    }

    #[test]
    fn single_pair_is_a_cosine() {
        let mut f = FieldState::init(&SpectrumModel::default(), grid(), 1).unwrap();
        for j in 0..f.modes().len() {
            f.set_mode(j, Complex64::default()).unwrap();
        }
        let c = Complex64::new(0.3, -0.4);
        f.set_mode(2, c).unwrap();
        let v = f.realize().unwrap();
        let p = f.wavenumber(2);
        for (i, vi) in v.iter().enumerate() {
            let x = f.grid().x(i);
            let exact = 2.0 * (c * Complex64::from_polar(1.0, p * x)).re / (2.0 * PI);
            assert!((vi - exact).abs() < 1e-14);
        }
    }

    #[test]
    fn parseval() {
        let f = FieldState::init(&SpectrumModel::default(), grid(), 9).unwrap();
        let v = f.realize().unwrap();
        let mean_sq = v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64;
        let modes = f.modes();
        let spectral = (modes[0].norm_sqr() + 2.0 * modes[1..].iter().map(|m| m.norm_sqr()).sum::<f64>())
            / (4.0 * PI * PI);
        assert!((mean_sq - spectral).abs() < 1e-10 * spectral);
    }

    #[test]
    fn zero_mode_is_frozen_without_gap_floor() {
        let mut f = FieldState::init(&SpectrumModel::default(), grid(), 5).unwrap();
        let before = f.modes()[0];
        f.advance(10.0).unwrap();
        assert_eq!(f.modes()[0], before);
        assert!(f.advance(0.0).is_err());
    }

    #[test]
    fn determinism_across_thread_counts() {
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                let mut f = FieldState::init(&SpectrumModel::default(), grid(), 11).unwrap();
                for _ in 0..20 {
                    f.advance(0.05).unwrap();
                }
                f.realize().unwrap()
            })
        };
        let a = run(1);
        let b = run(4);
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}
