//! Direct simulation of the scaled random Schrödinger equation
//!
//! ```text
//! iε ∂_t φ + (ε²/2) ∂_x² φ - ε^{(1-γ)/2} V(t/ε^{1+γ}, x/ε) φ = 0
//! ```
//!
//! and of its averaged Wigner transform
//! `W_ε(x, k) = (1/2π) ∫ e^{iky} ⟨φ(x - εy/2) φ̄(x + εy/2)⟩ dy`.
//!
//! The Wigner offsets are sampled at `y_m = 2mΔx/ε`, so `x ∓ εy_m/2` are grid
//! points and no interpolation enters the quadratic kernel. The resulting
//! `k`-window is `[-πε/(2Δx), πε/(2Δx))`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::{FieldGrid, FieldState, FrozenPotential, Potential};
use crate::grid::{PhaseSpaceGrid, WignerField};
use crate::kinetic::solve_fourier;
use crate::par::deterministic_reduce;
use crate::rng::{stream, Domain};
use crate::spectrum::{JumpMeasure, SpectrumModel};

/// Half-length of the wave domain `[-8, 8)`.
pub const WAVE_HALF_WIDTH: f64 = 8.0;
/// Wave samples per unit `ε` on admissible grids: `n = 128/ε`.
const SAMPLES_PER_EPSILON: f64 = 128.0;
/// Bound on `k_max² dt / (2ε)`, the kinetic phase per step at the edge of
/// the Wigner window.
pub const KINETIC_PHASE_LIMIT: f64 = 0.5;
/// Bound on `𝔤_max` times the fast-time sub-step.
pub const DECORRELATION_STEP_LIMIT: f64 = 0.1;
pub const N_TEST_FUNCTIONS: usize = 16;

/// Admissible `ε = 2^{-m}`, `1 <= m <= 10`, with its wave grid on `[-8, 8)`
/// of `128/ε` points. The Wigner window is then `|k| < 4π` for every `ε`.
pub fn admissible_grid(epsilon: f64) -> Result<FieldGrid> {
    let m = -epsilon.log2();
    if !(epsilon > 0.0 && m.fract() == 0.0 && (1.0..=10.0).contains(&m)) {
        return Err(Error::param(
            "run.epsilons",
            format!("{epsilon} is not of the form 2^-m with 1 <= m <= 10"),
        ));
    }
    let n = (SAMPLES_PER_EPSILON / epsilon) as usize;
    FieldGrid::centred(n, 2.0 * WAVE_HALF_WIDTH / n as f64)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::param("run.gamma", format!("{gamma} is outside the open interval (0, 1)")))
    }
}

#[derive(Clone, Debug)]
pub struct WaveField {
    grid: FieldGrid,
    psi: Vec<Complex64>,
    epsilon: f64,
    gamma: f64,
    time: f64,
}

impl WaveField {
    pub fn new(grid: FieldGrid, psi: Vec<Complex64>, epsilon: f64, gamma: f64) -> Result<Self> {
        if psi.len() != grid.n {
            return Err(Error::Grid(format!("{} samples for a grid of {}", psi.len(), grid.n)));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::param("run.epsilons", format!("{epsilon} must be positive")));
        }
        check_gamma(gamma)?;
        Ok(Self {
            grid,
            psi,
            epsilon,
            gamma,
            time: 0.0,
        })
    }

    pub fn from_fn(grid: FieldGrid, epsilon: f64, gamma: f64, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let psi = (0..grid.n).map(|i| f(grid.x(i))).collect();
        Self::new(grid, psi, epsilon, gamma)
    }

    pub fn grid(&self) -> &FieldGrid {
        &self.grid
    }
    pub fn psi(&self) -> &[Complex64] {
        &self.psi
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    /// Slow time.
    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn norm(&self) -> f64 {
        (self.psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.spacing).sqrt()
    }

    /// Half-width `πε/(2Δx)` of the Wigner `k`-window.
    pub fn wigner_half_width(&self) -> f64 {
        0.5 * PI * self.epsilon / self.grid.spacing
    }

    /// Grid the potential `V(·/ε)` must be realized on.
    pub fn potential_grid(&self) -> Result<FieldGrid> {
        FieldGrid::new(self.grid.n, self.grid.spacing / self.epsilon, self.grid.origin / self.epsilon)
    }

    fn compatible(&self, other: &Self) -> bool {
        self.grid == other.grid
            && self.epsilon.to_bits() == other.epsilon.to_bits()
            && self.gamma.to_bits() == other.gamma.to_bits()
            && self.time.to_bits() == other.time.to_bits()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    /// Strang steps taken per requested step.
    pub substeps: usize,
    /// `k_max² dt/(2ε)` of the requested step.
    pub kinetic_phase: f64,
}

struct Plans {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }
}

/// Strang splitting, kinetic half-steps around a potential step sampled at
/// the midpoint of each sub-interval. See [`split_step_evolve_batch`].
pub fn split_step_evolve(
    wave: &mut WaveField,
    potential: &mut dyn Potential,
    dt_slow: f64,
    n_steps: usize,
) -> Result<StepReport> {
    split_step_evolve_batch(std::slice::from_mut(wave), potential, dt_slow, n_steps)
}

/// Evolves several waves through one shared potential realization.
///
/// The potential must be sampled on [`WaveField::potential_grid`]; its clock
/// runs in fast time `t/ε^{1+γ}`. Each requested step is divided so that
/// `𝔤_max` times the fast sub-step stays below [`DECORRELATION_STEP_LIMIT`].
pub fn split_step_evolve_batch(
    waves: &mut [WaveField],
    potential: &mut dyn Potential,
    dt_slow: f64,
    n_steps: usize,
) -> Result<StepReport> {
    let Some(first) = waves.first() else {
        return Err(Error::Domain("no waves to evolve".into()));
    };
    if waves.iter().any(|w| !w.compatible(first)) {
        return Err(Error::Grid("waves in a batch must share grid, ε, γ and time".into()));
    }
    if !(dt_slow > 0.0 && dt_slow.is_finite()) {
        return Err(Error::Domain(format!("time step {dt_slow} must be positive")));
    }
    let grid = first.grid;
    let eps = first.epsilon;
    let gamma = first.gamma;
    let k_max = first.wigner_half_width();
    let kinetic_phase = k_max * k_max * dt_slow / (2.0 * eps);
    if !(kinetic_phase < KINETIC_PHASE_LIMIT) {
        return Err(Error::Precondition(format!(
            "kinetic phase k_max²·dt/(2ε) = {kinetic_phase:.4} is not below {KINETIC_PHASE_LIMIT}; \
             dt_slow must be below {:.4e}",
            KINETIC_PHASE_LIMIT * 2.0 * eps / (k_max * k_max)
        )));
    }
    let fast_step = dt_slow / eps.powf(1.0 + gamma);
    let rate = potential.max_rate();
    let substeps = ((rate * fast_step / DECORRELATION_STEP_LIMIT).ceil() as usize).max(1);
    let report = StepReport { substeps, kinetic_phase };
    let total = n_steps * substeps;
    if total == 0 {
        return Ok(report);
    }
    let h = dt_slow / substeps as f64;
    let h_fast = fast_step / substeps as f64;
    let coupling = eps.powf(-0.5 * (1.0 + gamma));

    let n = grid.n;
    let plans = Plans::new(n);
    let dxi = 2.0 * PI / grid.period();
    let kinetic = |fraction: f64| -> Vec<Complex64> {
        (0..n)
            .map(|j| {
                let s = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
                let xi = s * dxi;
                // The 1/n of the inverse transform is folded in here.
                Complex64::from_polar(1.0 / n as f64, -0.5 * eps * xi * xi * h * fraction)
            })
            .collect()
    };
    let half = kinetic(0.5);
    let full = kinetic(1.0);
    let mut v = vec![0.0; n];
    let mut phase = vec![Complex64::default(); n];

    for w in waves.iter_mut() {
        plans.fwd.process(&mut w.psi);
        mul(&mut w.psi, &half);
    }
    for s in 0..total {
        potential.advance(0.5 * h_fast)?;
        potential.realize_into(&mut v)?;
        potential.advance(0.5 * h_fast)?;
        for (p, vi) in phase.iter_mut().zip(&v) {
            *p = Complex64::from_polar(1.0, -coupling * vi * h);
        }
        let next = if s + 1 < total { &full } else { &half };
        for w in waves.iter_mut() {
            plans.inv.process(&mut w.psi);
            mul(&mut w.psi, &phase);
            plans.fwd.process(&mut w.psi);
            mul(&mut w.psi, next);
        }
    }
    for w in waves.iter_mut() {
        plans.inv.process(&mut w.psi);
        w.time += n_steps as f64 * dt_slow;
    }
    Ok(report)
}

fn mul(a: &mut [Complex64], b: &[Complex64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x *= y;
    }
}

/// Weighted sum of the lag products `φ(x_i - mΔx) φ̄(x_i + mΔx)`,
/// `0 <= m <= n_y/2`.
#[derive(Clone, Debug)]
pub struct WignerAccumulator {
    grid: FieldGrid,
    epsilon: f64,
    n_y: usize,
    lags: Vec<Complex64>,
}

impl WignerAccumulator {
    pub fn new(grid: FieldGrid, epsilon: f64, n_y: usize) -> Result<Self> {
        if !(n_y >= 4 && n_y.is_power_of_two()) {
            return Err(Error::param("run.n_y", format!("{n_y} is not a power of two >= 4")));
        }
        if n_y / 2 >= grid.n {
            return Err(Error::param("run.n_y", "offsets wrap around the whole wave grid"));
        }
        if (grid.origin + 0.5 * grid.period()).abs() > 1e-12 * grid.period() {
            return Err(Error::Grid("the wave grid must be centred on zero".into()));
        }
        let width = n_y / 2 + 1;
        Ok(Self {
            grid,
            epsilon,
            n_y,
            lags: vec![Complex64::default(); grid.n * width],
        })
    }

    pub fn add(&mut self, wave: &WaveField, weight: f64) -> Result<()> {
        if wave.grid != self.grid || wave.epsilon.to_bits() != self.epsilon.to_bits() {
            return Err(Error::Grid("wave does not match the accumulator grid".into()));
        }
        let n = self.grid.n;
        let width = self.n_y / 2 + 1;
        let psi = &wave.psi;
        for i in 0..n {
            let row = &mut self.lags[i * width..(i + 1) * width];
            for (m, slot) in row.iter_mut().enumerate() {
                let lo = psi[(i + n - m) % n];
                let hi = psi[(i + m) % n];
                *slot += weight * lo * hi.conj();
            }
        }
        Ok(())
    }

    pub fn merge(mut self, other: &Self) -> Self {
        for (a, b) in self.lags.iter_mut().zip(&other.lags) {
            *a += b;
        }
        self
    }

    /// Output grid: the wave grid in `x`, `n_y` points on the Wigner window in `k`.
    pub fn phase_grid(&self) -> Result<PhaseSpaceGrid> {
        let k_half = 0.5 * PI * self.epsilon / self.grid.spacing;
        PhaseSpaceGrid::new(self.grid.n, self.n_y, 0.5 * self.grid.period(), k_half)
    }

    /// Discrete Fourier transform over the offsets. The outermost offset is
    /// shared by `±n_y/2` and enters with its real part only, which keeps
    /// the sum Hermitian.
    pub fn finish(&self, time: f64) -> Result<WignerField> {
        let pg = self.phase_grid()?;
        let n_y = self.n_y;
        let half = n_y / 2;
        let width = half + 1;
        let dy = 2.0 * self.grid.spacing / self.epsilon;
        let scale = dy / (2.0 * PI);
        let plan = FftPlanner::new().plan_fft_inverse(n_y);
        let mut buf = vec![Complex64::default(); n_y];
        let mut values = Vec::with_capacity(pg.len());
        let mut max_re = 0.0f64;
        let mut max_im = 0.0f64;
        for i in 0..self.grid.n {
            let row = &self.lags[i * width..(i + 1) * width];
            // k_l y_m = -πm + 2πlm/n_y.
            buf[0] = row[0];
            for m in 1..half {
                let c = if m % 2 == 0 { row[m] } else { -row[m] };
                buf[m] = c;
                buf[n_y - m] = c.conj();
            }
            let sign = if half % 2 == 0 { 1.0 } else { -1.0 };
            buf[half] = Complex64::new(sign * row[half].re, 0.0);
            plan.process(&mut buf);
            for z in &buf {
                max_re = max_re.max(z.re.abs());
                max_im = max_im.max(z.im.abs());
                values.push(z.re * scale);
            }
        }
        if max_im > 1e-10 * max_re.max(f64::MIN_POSITIVE) {
            return Err(Error::Internal(format!(
                "Wigner transform has imaginary residue {:.3e}",
                max_im / max_re
            )));
        }
        WignerField::new(pg, values, time)
    }
}

/// Averaged Wigner transform of weighted waves.
pub fn wigner_transform(waves: &[WaveField], weights: &[f64], n_y: usize) -> Result<WignerField> {
    let Some(first) = waves.first() else {
        return Err(Error::Domain("empty ensemble".into()));
    };
    if weights.len() != waves.len() || weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::Domain("one nonnegative weight per wave is required".into()));
    }
    let mut acc = WignerAccumulator::new(first.grid, first.epsilon, n_y)?;
    for (w, &c) in waves.iter().zip(weights) {
        acc.add(w, c)?;
    }
    acc.finish(first.time)
}

/// Separable Gaussian test function `exp(-(x-x₀)²/(2s_x²) - (k-k₀)²/(2s_k²))`,
/// normalized in `L²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestFunction {
    pub x0: f64,
    pub k0: f64,
    pub sx: f64,
    pub sk: f64,
}

impl TestFunction {
    pub fn eval(&self, x: f64, k: f64) -> f64 {
        let norm = 1.0 / (PI * self.sx * self.sk).sqrt();
        norm * (-0.5 * ((x - self.x0) / self.sx).powi(2) - 0.5 * ((k - self.k0) / self.sk).powi(2)).exp()
    }
}

/// Fixed library: broad functions near the origin first, narrower and
/// off-centre ones later.
pub fn test_function(id: usize) -> Result<TestFunction> {
    const CENTRES: [(f64, f64); N_TEST_FUNCTIONS] = [
        (0.0, 0.0),
        (0.5, 0.5),
        (-0.5, 0.5),
        (0.5, -0.5),
        (-0.5, -0.5),
        (1.0, 1.0),
        (-1.0, 1.0),
        (1.0, -1.0),
        (-1.0, -1.0),
        (0.0, 1.5),
        (0.0, -1.5),
        (1.5, 0.0),
        (-1.5, 0.0),
        (2.0, 1.0),
        (-2.0, -1.0),
        (0.0, 2.5),
    ];
    let Some(&(x0, k0)) = CENTRES.get(id) else {
        return Err(Error::Domain(format!("test function {id} is not in the library of {N_TEST_FUNCTIONS}")));
    };
    let sx = 1.2 - 0.05 * (id % 8) as f64;
    let sk = 1.0 - 0.04 * (id % 6) as f64;
    Ok(TestFunction { x0, k0, sx, sk })
}

/// Grid inner product `⟨w, g_id⟩`.
pub fn weak_observable(w: &WignerField, test_id: usize) -> Result<f64> {
    let g = test_function(test_id)?;
    let grid = w.grid();
    let mut total = 0.0;
    for i in 0..grid.n_x {
        let x = grid.x(i);
        let row = &w.values()[i * grid.n_k..(i + 1) * grid.n_k];
        for (j, v) in row.iter().enumerate() {
            total += v * g.eval(x, grid.k(j));
        }
    }
    Ok(total * grid.cell())
}

fn observables(w: &WignerField) -> [f64; N_TEST_FUNCTIONS] {
    let mut out = [0.0; N_TEST_FUNCTIONS];
    for (id, o) in out.iter_mut().enumerate() {
        *o = weak_observable(w, id).expect("id is in range");
    }
    out
}

/// `Σ_j 2^{-(j+1)} |a_j - b_j|`.
pub fn weak_distance(a: &[f64; N_TEST_FUNCTIONS], b: &[f64; N_TEST_FUNCTIONS]) -> f64 {
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(j, (x, y))| 0.5f64.powi(j as i32 + 1) * (x - y).abs())
        .sum()
}

/// Finite mixture `φ₀(x) e^{-iqx/ε}` over phase samples `q` with weights.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureConfig {
    pub q_samples: Vec<f64>,
    pub weights: Vec<f64>,
    /// Standard deviation of `|φ₀|²`, a centred Gaussian of unit mass.
    pub base_width: f64,
    pub mu_mean: f64,
    pub mu_std: f64,
}

impl MixtureConfig {
    /// Gaussian law `μ = N(mean, std²)` on `n` equispaced midpoints of
    /// `mean ± 4 std`, weighted by the density.
    pub fn gaussian(mean: f64, std: f64, n: usize, base_width: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("run.mixture_size", "must be at least 1"));
        }
        if !(std > 0.0 && base_width > 0.0) {
            return Err(Error::param("run.mu_std", "widths must be positive"));
        }
        let h = 8.0 * std / n as f64;
        let q_samples: Vec<f64> = (0..n).map(|i| mean - 4.0 * std + (i as f64 + 0.5) * h).collect();
        let raw: Vec<f64> = q_samples.iter().map(|q| (-0.5 * ((q - mean) / std).powi(2)).exp()).collect();
        let sum: f64 = raw.iter().sum();
        Ok(Self {
            q_samples,
            weights: raw.iter().map(|w| w / sum).collect(),
            base_width,
            mu_mean: mean,
            mu_std: std,
        })
    }

    pub fn base_profile(&self, x: f64) -> f64 {
        let s = self.base_width;
        (2.0 * PI * s * s).powf(-0.25) * (-x * x / (4.0 * s * s)).exp()
    }

    pub fn initial_waves(&self, grid: FieldGrid, epsilon: f64, gamma: f64) -> Result<Vec<WaveField>> {
        self.q_samples
            .iter()
            .map(|&q| {
                WaveField::from_fn(grid, epsilon, gamma, |x| {
                    Complex64::from_polar(self.base_profile(x), -q * x / epsilon)
                })
            })
            .collect()
    }

    /// `ε → 0` limit of the initial Wigner transform, `μ(-k) |φ₀(x)|²`.
    pub fn limit_wigner(&self, grid: PhaseSpaceGrid) -> WignerField {
        let mu = |k: f64| {
            (-0.5 * ((-k - self.mu_mean) / self.mu_std).powi(2)).exp() / ((2.0 * PI).sqrt() * self.mu_std)
        };
        WignerField::from_fn(grid, |x, k| mu(k) * self.base_profile(x).powi(2))
    }
}

#[derive(Clone, Debug)]
pub struct KineticExperiment {
    pub model: SpectrumModel,
    pub epsilons: Vec<f64>,
    pub gamma: f64,
    pub t: f64,
    pub n_realizations: usize,
    pub mixture_size: usize,
    pub base_width: f64,
    pub mu_mean: f64,
    pub mu_std: f64,
    pub n_y: usize,
    pub seed: u64,
    /// Switch off the potential's time dynamics.
    pub frozen: bool,
    /// Grid of the kinetic reference solution.
    pub reference_grid: PhaseSpaceGrid,
}

impl Default for KineticExperiment {
    fn default() -> Self {
        Self {
            model: SpectrumModel::default(),
            epsilons: vec![0.5, 0.25, 0.125],
            gamma: 0.5,
            t: 0.5,
            n_realizations: 64,
            mixture_size: 32,
            // Keeps the k-blur (ε/2s)² of the initial Wigner transform well
            // below the scattering signal at ε = 1/2.
            base_width: 2.0,
            mu_mean: -0.5,
            mu_std: 1.0,
            n_y: 128,
            seed: 0,
            frozen: false,
            reference_grid: PhaseSpaceGrid::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRow {
    pub epsilon: f64,
    pub observable_id: usize,
    pub value_schrodinger: f64,
    pub value_kinetic: f64,
    pub ensemble_std: f64,
    pub d_epsilon: f64,
}

#[derive(Clone, Debug)]
pub struct EpsilonResult {
    pub epsilon: f64,
    pub mean: [f64; N_TEST_FUNCTIONS],
    /// Sample standard deviation over potential realizations.
    pub std: [f64; N_TEST_FUNCTIONS],
    pub d_epsilon: f64,
    pub n_steps: usize,
    pub substeps: usize,
    /// Ensemble- and mixture-averaged Wigner transform.
    pub wigner: WignerField,
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub kinetic: [f64; N_TEST_FUNCTIONS],
    pub results: Vec<EpsilonResult>,
}

impl ExperimentReport {
    pub fn rows(&self) -> Vec<ExperimentRow> {
        let mut rows = Vec::new();
        for r in &self.results {
            for id in 0..N_TEST_FUNCTIONS {
                rows.push(ExperimentRow {
                    epsilon: r.epsilon,
                    observable_id: id,
                    value_schrodinger: r.mean[id],
                    value_kinetic: self.kinetic[id],
                    ensemble_std: r.std[id],
                    d_epsilon: r.d_epsilon,
                });
            }
        }
        rows
    }

    pub fn write_csv(&self, out: &mut impl std::io::Write) -> Result<()> {
        writeln!(out, "epsilon,observable_id,value_schrodinger,value_kinetic,ensemble_std,D_epsilon")?;
        for r in self.rows() {
            writeln!(
                out,
                "{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.epsilon, r.observable_id, r.value_schrodinger, r.value_kinetic, r.ensemble_std, r.d_epsilon
            )?;
        }
        Ok(())
    }

    /// `D(ε)` strictly decreasing along the schedule.
    pub fn distance_decreasing(&self) -> bool {
        self.results.windows(2).all(|w| w[1].d_epsilon < w[0].d_epsilon)
    }

    /// Observables whose ensemble spread strictly decreases along the schedule.
    pub fn spread_decreasing(&self) -> Vec<bool> {
        (0..N_TEST_FUNCTIONS)
            .map(|id| self.results.windows(2).all(|w| w[1].std[id] < w[0].std[id]))
            .collect()
    }
}

/// Time step for an admissible grid: the largest `t/n` below the kinetic
/// phase limit, with a 10% margin.
fn step_count(t: f64, epsilon: f64, k_max: f64) -> usize {
    if t == 0.0 {
        return 0;
    }
    let dt_max = 0.9 * KINETIC_PHASE_LIMIT * 2.0 * epsilon / (k_max * k_max);
    (t / dt_max).ceil() as usize
}

struct Partial {
    acc: WignerAccumulator,
    observables: Vec<[f64; N_TEST_FUNCTIONS]>,
    substeps: usize,
}

/// Compares the simulated `W_ε(t)` with the kinetic solution over the `ε`
/// schedule.
pub fn kinetic_limit_experiment(cfg: &KineticExperiment) -> Result<ExperimentReport> {
    check_gamma(cfg.gamma)?;
    if !(cfg.t >= 0.0 && cfg.t.is_finite()) {
        return Err(Error::param("run.t", format!("{} must be nonnegative", cfg.t)));
    }
    if cfg.n_realizations < 2 {
        return Err(Error::param("run.n_realizations", "at least two are needed for a spread"));
    }
    let mixture = MixtureConfig::gaussian(cfg.mu_mean, cfg.mu_std, cfg.mixture_size, cfg.base_width)?;
    let w0 = mixture.limit_wigner(cfg.reference_grid);
    let reference = solve_fourier(&w0, &JumpMeasure::new(cfg.model.clone()), cfg.t)?;
    let kinetic = observables(&reference);

    let mut results = Vec::with_capacity(cfg.epsilons.len());
    for &eps in &cfg.epsilons {
        let grid = admissible_grid(eps)?;
        let initial = mixture.initial_waves(grid, eps, cfg.gamma)?;
        let k_max = initial[0].wigner_half_width();
        let n_steps = step_count(cfg.t, eps, k_max);
        let dt = if n_steps > 0 { cfg.t / n_steps as f64 } else { 0.0 };
        let field_grid = initial[0].potential_grid()?;
        let share = 1.0 / cfg.n_realizations as f64;

        let run = |r: usize| -> Result<Partial> {
            let field_seed: u64 = stream(cfg.seed, Domain::Ensemble, r as u64).random();
            let state = FieldState::init(&cfg.model, field_grid, field_seed)?;
            let mut waves = initial.clone();
            let mut substeps = 0;
            if n_steps > 0 {
                let report = if cfg.frozen {
                    split_step_evolve_batch(&mut waves, &mut FrozenPotential(state), dt, n_steps)?
                } else {
                    let mut state = state;
                    split_step_evolve_batch(&mut waves, &mut state, dt, n_steps)?
                };
                substeps = report.substeps;
            }
            let mut acc = WignerAccumulator::new(grid, eps, cfg.n_y)?;
            for (w, &c) in waves.iter().zip(&mixture.weights) {
                acc.add(w, c)?;
            }
            let own = acc.finish(cfg.t)?;
            let mut scaled = acc;
            for z in scaled.lags.iter_mut() {
                *z *= share;
            }
            Ok(Partial {
                acc: scaled,
                observables: vec![observables(&own)],
                substeps,
            })
        };
        let merged = deterministic_reduce(
            cfg.n_realizations,
            1,
            |range| {
                let mut out: Option<Result<Partial>> = None;
                for r in range {
                    let next = run(r);
                    out = Some(match out {
                        None => next,
                        Some(prev) => combine(prev, next),
                    });
                }
                out.expect("blocks are never empty")
            },
            combine,
        )
        .expect("at least two realizations")?;

        let n = merged.observables.len() as f64;
        let mut mean = [0.0; N_TEST_FUNCTIONS];
        let mut std = [0.0; N_TEST_FUNCTIONS];
        for id in 0..N_TEST_FUNCTIONS {
            let m = merged.observables.iter().map(|o| o[id]).sum::<f64>() / n;
            let var = merged.observables.iter().map(|o| (o[id] - m).powi(2)).sum::<f64>() / (n - 1.0);
            mean[id] = m;
            std[id] = var.sqrt();
        }
        results.push(EpsilonResult {
            epsilon: eps,
            mean,
            std,
            d_epsilon: weak_distance(&mean, &kinetic),
            n_steps,
            substeps: merged.substeps,
            wigner: merged.acc.finish(cfg.t)?,
        });
    }
    Ok(ExperimentReport { kinetic, results })
}

fn combine(a: Result<Partial>, b: Result<Partial>) -> Result<Partial> {
    let (a, b) = (a?, b?);
    let mut observables = a.observables;
    observables.extend(b.observables);
    Ok(Partial {
        acc: a.acc.merge(&b.acc),
        observables,
        substeps: a.substeps.max(b.substeps),
    })
}
