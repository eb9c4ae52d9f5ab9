//! Acceptance suite. Prints one line per criterion and exits nonzero if any
//! criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use lrk_core::field::{FieldGrid, FieldState, FrozenPotential};
use lrk_core::fractional::{sigma_theta_report, solve_fractional, eta_convergence_report, FractionalModel};
use lrk_core::grid::{PhaseSpaceGrid, WignerField};
use lrk_core::kinetic::{dual_spectrum, free_transport, solve_fourier, spectral_tail_mass};
use lrk_core::levy::{estimate_field, estimate_point, JumpSampler};
use lrk_core::phase::compute_scaling;
use lrk_core::quadrature::adaptive;
use lrk_core::schrodinger::{
    admissible_grid, kinetic_limit_experiment, split_step_evolve, wigner_transform, KineticExperiment,
    WaveField, N_TEST_FUNCTIONS,
};
use lrk_core::series::{poisson_tail_bound, solve_series_points, Orientation, SeriesConfig};
use lrk_core::spectrum::{JumpMeasure, ModelParams, SpectrumModel};

// Budgets, one per criterion.
const C1_RMSE: f64 = 0.015;
const C1_POINT_FLOOR: f64 = 0.01;
const C1_PATHS: usize = 100_000;
const C1_DELTA: f64 = 0.01;
const C2_PATHS: usize = 100_000;
const C2_DELTA: f64 = 0.1;
const SIGMAS: f64 = 3.0;
const C3_SLACK: f64 = 1e-8;
const C4_RATIO: f64 = 0.01;
const C4_EDGE: f64 = 0.1;
const C5_SPREAD: f64 = 0.005;
const C5_SLOPE: f64 = 0.005;
const C7_SLOPE: f64 = 0.01;
/// Relative sampling error of a standard deviation from `n` samples is about
/// `1/√(2(n-1))`; an increase within two of those is not counted as a reversal.
const C8_STD_SIGMAS: f64 = 2.0;
const C9_SAMPLES: usize = 10_000;
const C10_NORM_DRIFT: f64 = 1e-10;
const C10_FREE: f64 = 1e-6;
const C12_REL: f64 = 1e-8;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn default_jump() -> JumpMeasure {
    JumpMeasure::new(SpectrumModel::default())
}

fn gaussian_w0(grid: PhaseSpaceGrid) -> WignerField {
    WignerField::from_fn(grid, |x, k| gaussian(x, k))
}

fn gaussian(x: f64, k: f64) -> f64 {
    (-(x * x) / 8.0 - (k - 0.5).powi(2) / 4.5).exp()
}

/// 20 grid nodes around the bulk of the solution.
fn probe_nodes(grid: &PhaseSpaceGrid) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for &x in &[-4.0, -2.0, 0.0, 1.5, 3.5] {
        for &k in &[-1.5, 0.0, 1.0, 2.5] {
            let i = ((x + grid.l_x) / grid.dx()).round() as usize;
            let j = ((k + grid.l_k) / grid.dk()).round() as usize;
            out.push((i, j));
        }
    }
    out
}

fn c1() -> lrk_core::Result<Outcome> {
    let grid = PhaseSpaceGrid::default();
    let w0 = gaussian_w0(grid);
    let jump = default_jump();
    let fourier = solve_fourier(&w0, &jump, 1.0)?;
    let sampler = JumpSampler::new(&jump, C1_DELTA)?;
    let mc = estimate_field(&w0, 1.0, &sampler, C1_PATHS, 11)?;
    let diff = mc.mean.difference(&fourier)?;
    let scale = w0.max_abs();
    let rmse = (diff.values().iter().map(|v| v * v).sum::<f64>() / diff.values().len() as f64).sqrt();
    let mut worst = 0.0f64;
    let mut failures = 0;
    for (i, j) in probe_nodes(&grid) {
        let idx = grid.index(i, j);
        let budget = (SIGMAS * mc.stderr[idx]).max(C1_POINT_FLOOR * scale);
        let err = diff.values()[idx].abs();
        worst = worst.max(err / budget);
        if err >= budget {
            failures += 1;
        }
    }
    Ok(outcome(
        rmse < C1_RMSE * scale && failures == 0,
        format!(
            "RMSE/‖W₀‖∞ = {:.3e} (< {C1_RMSE}); 20 probes, worst error/budget = {worst:.3}, wrap warnings {}",
            rmse / scale,
            mc.wrap_warnings
        ),
    ))
}

fn c2() -> lrk_core::Result<Outcome> {
    // Finer grid so that bilinear interpolation in the Monte Carlo estimator
    // stays well below its statistical error.
    let grid = PhaseSpaceGrid::new(256, 256, 16.0, 8.0)?;
    let w0 = gaussian_w0(grid);
    let jump = default_jump();
    let t = 0.5;
    let cfg = SeriesConfig {
        orientation: Orientation::Forward,
        ..SeriesConfig::default()
    };
    assert_eq!(1.0 / cfg.cutoff_n as f64, C2_DELTA);
    let points: Vec<(f64, f64)> = probe_nodes(&grid).iter().map(|&(i, j)| (grid.x(i), grid.k(j))).collect();
    let series = solve_series_points(&gaussian, 1.0, &points, &jump, &cfg, t, None)?;
    let sampler = JumpSampler::new(&jump, C2_DELTA)?;
    let mut worst = 0.0f64;
    let mut failures = 0;
    for (n, &(x, k)) in points.iter().enumerate() {
        let est = estimate_point(&w0, x, k, t, &sampler, C2_PATHS, 100 + n as u64)?;
        let budget = SIGMAS * est.stderr + series.tail_bound;
        let err = (est.mean - series.values[n]).abs();
        worst = worst.max(err / budget);
        if err >= budget {
            failures += 1;
        }
    }
    let tail = poisson_tail_bound(series.sigma_n, t, cfg.n_max);
    Ok(outcome(
        failures == 0,
        format!(
            "Σ_N = {:.4}, Poisson tail {tail:.3e}; 20 probes, worst error/budget = {worst:.3}",
            series.sigma_n
        ),
    ))
}

fn c3() -> lrk_core::Result<Outcome> {
    let w0 = gaussian_w0(PhaseSpaceGrid::default());
    let jump = default_jump();
    let mut norms = vec![w0.l2_norm()];
    for t in [0.5, 1.0, 2.0] {
        norms.push(solve_fourier(&w0, &jump, t)?.l2_norm());
    }
    let bounded = norms.iter().all(|n| *n <= norms[0] * (1.0 + C3_SLACK));
    let strict = norms.windows(2).all(|w| w[1] < w[0]);
    let rel: Vec<String> = norms.iter().map(|n| format!("{:.6}", n / norms[0])).collect();
    Ok(outcome(bounded && strict, format!("‖W(t)‖/‖W₀‖ at t = 0, 0.5, 1, 2: {}", rel.join(", "))))
}

fn smooth_box(z: f64, half: f64, edge: f64) -> f64 {
    0.5 * (1.0 + ((half - z.abs()) / edge).tanh())
}

fn c4() -> lrk_core::Result<Outcome> {
    // Sharp x-edges keep |y| content up to the x-Nyquist, so the shear at
    // t = 2 needs a finer k-grid than the default.
    let base = PhaseSpaceGrid::default();
    let grid = PhaseSpaceGrid::new(base.n_x, 4 * base.n_k, base.l_x, base.l_k)?;
    // Edges half a cell wide. With wider edges the y-spectrum decays
    // exponentially and streaming carries mid-|y| rows past the cutoff
    // faster than the damping removes them.
    let w0 = WignerField::from_fn(grid, |x, k| {
        smooth_box(x, 3.0, C4_EDGE) * smooth_box(k - 0.5, 2.0, C4_EDGE)
    });
    let jump = default_jump();
    let cutoff = 0.5 * grid.q_nyquist().min(grid.y_nyquist());
    let times = [0.0, 0.5, 1.0, 2.0];
    let mut tails = Vec::new();
    let mut worst = 0.0f64;
    let s0 = dual_spectrum(&w0);
    for &t in &times {
        let w = solve_fourier(&w0, &jump, t)?;
        tails.push(spectral_tail_mass(&w, cutoff)?);
        if t == 0.0 {
            continue;
        }
        // y = 0 row: Ŵ(t, 0, q) = e^{tΨ(q)} Ŵ₀(0, q).
        let s = dual_spectrum(&w);
        for b in 0..grid.n_k {
            let Some(q) = grid.q_of(b) else { continue };
            if !(4.0..=8.0).contains(&q.abs()) {
                continue;
            }
            let expect = (t * jump.psi(&[q])?).exp();
            let got = s[b].norm() / s0[b].norm();
            worst = worst.max((got / expect - 1.0).abs());
        }
    }
    let strict = tails.windows(2).all(|w| w[1] < w[0]);
    let shown: Vec<String> = tails.iter().map(|v| format!("{v:.4e}")).collect();
    Ok(outcome(
        strict && worst < C4_RATIO,
        format!(
            "tail mass beyond {cutoff:.2} at t = 0, 0.5, 1, 2: {}; max |ratio/e^(tΨ) - 1| for 4 ≤ |q| ≤ 8: {worst:.2e}",
            shown.join(", ")
        ),
    ))
}

fn c5() -> lrk_core::Result<Outcome> {
    let r = sigma_theta_report(&default_jump())?;
    let slope_err = (r.fitted_exponent - 0.5).abs() / 0.5;
    Ok(outcome(
        r.spread < C5_SPREAD && slope_err < C5_SLOPE,
        format!(
            "c_theta = {:.6}, spread {:.2e}, slope {:.6}; ratio to the sphere-integral formula {:.4} ({})",
            r.model.c_theta,
            r.spread,
            r.fitted_exponent,
            r.ratio_to_sphere_formula,
            if r.sphere_formula_flagged { "flagged, reported only" } else { "within 5%" }
        ),
    ))
}

fn c6() -> lrk_core::Result<Outcome> {
    let w0 = gaussian_w0(PhaseSpaceGrid::default());
    let r = eta_convergence_report(&w0, &default_jump(), 1.0, &[1.0, 0.5, 0.25, 0.125])?;
    let errs: Vec<String> = r.rows.iter().map(|row| format!("{}: {:.4e}", row.eta, row.l2_error)).collect();
    Ok(outcome(r.monotone, format!("relative L² error by η: {}", errs.join(", "))))
}

fn c7() -> lrk_core::Result<Outcome> {
    let grid = PhaseSpaceGrid::default();
    let w0 = WignerField::from_fn(grid, |_, k| (-0.5 * k * k).exp());
    let frac = sigma_theta_report(&default_jump())?.model;
    let times: Vec<f64> = (1..=8).map(|i| 0.25 * i as f64).collect();
    let mut details = Vec::new();
    let mut pass = true;
    for q0 in [1.0, 3.0] {
        let b = (q0 * grid.l_k / PI).round() as usize;
        let q = grid.q_of(b).expect("bin below Nyquist");
        let mut logs = Vec::new();
        for &t in &times {
            let w = solve_fractional(&w0, &frac, t)?;
            logs.push(dual_spectrum(&w)[b].norm().ln());
        }
        let slope = fit_slope(&times, &logs);
        let expect = -frac.c_theta * q.powf(frac.theta);
        let rel = (slope / expect - 1.0).abs();
        pass &= rel < C7_SLOPE;
        details.push(format!("q₀ = {q}: slope {slope:.6} vs {expect:.6}"));
    }
    Ok(outcome(pass, details.join("; ")))
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn c8() -> lrk_core::Result<Outcome> {
    let cfg = KineticExperiment::default();
    let r = kinetic_limit_experiment(&cfg)?;
    let d_ok = r.distance_decreasing();
    let n = cfg.n_realizations as f64;
    let tol = C8_STD_SIGMAS / (2.0 * (n - 1.0)).sqrt();
    let strict = r.spread_decreasing().iter().filter(|b| **b).count();
    let mut reversals = 0;
    let mut endpoint = true;
    for id in 0..N_TEST_FUNCTIONS {
        for w in r.results.windows(2) {
            if w[1].std[id] > w[0].std[id] * (1.0 + tol) {
                reversals += 1;
            }
        }
        let (first, last) = (&r.results[0], r.results.last().expect("nonempty schedule"));
        endpoint &= last.std[id] < first.std[id];
    }
    let ds: Vec<String> = r.results.iter().map(|e| format!("{}: {:.4e}", e.epsilon, e.d_epsilon)).collect();
    Ok(outcome(
        d_ok && reversals == 0 && endpoint,
        format!(
            "D(ε) {}; ensemble std strictly decreasing for {strict}/{N_TEST_FUNCTIONS} observables, \
             {reversals} increases beyond sampling error, endpoint decrease for all: {endpoint}",
            ds.join(", ")
        ),
    ))
}

struct Running {
    n: f64,
    sum: f64,
    sq: f64,
}

impl Running {
    fn new() -> Self {
        Self { n: 0.0, sum: 0.0, sq: 0.0 }
    }
    fn push(&mut self, v: f64) {
        self.n += 1.0;
        self.sum += v;
        self.sq += v * v;
    }
    fn mean(&self) -> f64 {
        self.sum / self.n
    }
    fn stderr(&self) -> f64 {
        let m = self.mean();
        ((self.sq / self.n - m * m).max(0.0) / (self.n - 1.0)).sqrt()
    }
}

fn c9() -> lrk_core::Result<Outcome> {
    let model = SpectrumModel::default();
    let grid = FieldGrid::centred(1024, 0.25)?;
    let modes = [1usize, 5, 20];
    let lags = [0.0, 0.5, 2.0];
    let dt = 1.0;
    let mut variance: Vec<Running> = modes.iter().map(|_| Running::new()).collect();
    let mut cond_re: Vec<Running> = modes.iter().map(|_| Running::new()).collect();
    let mut cond_im: Vec<Running> = modes.iter().map(|_| Running::new()).collect();
    let mut cov: Vec<Running> = lags.iter().map(|_| Running::new()).collect();
    let start = Complex64::new(0.8, -0.3);
    let centre = grid.n / 2;
    let mut reference = None;
    for s in 0..C9_SAMPLES {
        let mut state = FieldState::init(&model, grid, 5000 + s as u64)?;
        if reference.is_none() {
            reference = Some(state.clone());
        }
        for (acc, &j) in variance.iter_mut().zip(&modes) {
            acc.push(state.modes()[j].norm_sqr());
        }
        let v0 = state.realize()?[centre];
        let mut now = 0.0;
        for (acc, &lag) in cov.iter_mut().zip(&lags) {
            if lag > now {
                state.advance(lag - now)?;
                now = lag;
            }
            acc.push(v0 * state.realize()?[centre]);
        }
        for (n, &j) in modes.iter().enumerate() {
            let scale = state.variances()[j].sqrt();
            state.set_mode(j, start * scale)?;
            let _ = n;
        }
        state.advance(dt)?;
        for (n, &j) in modes.iter().enumerate() {
            let m = state.modes()[j] / state.variances()[j].sqrt();
            cond_re[n].push(m.re);
            cond_im[n].push(m.im);
        }
    }
    let reference = reference.expect("samples drawn");
    let mut pass = true;
    let mut worst = 0.0f64;
    let mut check = |got: f64, expect: f64, se: f64| {
        let z = (got - expect).abs() / se;
        worst = worst.max(z);
        pass &= z < SIGMAS;
    };
    for (n, &j) in modes.iter().enumerate() {
        check(variance[n].mean(), reference.variances()[j], variance[n].stderr());
        let decay = (-reference.rates()[j] * dt).exp();
        check(cond_re[n].mean(), decay * start.re, cond_re[n].stderr());
        check(cond_im[n].mean(), decay * start.im, cond_im[n].stderr());
    }
    // Continuous kernel (1/2π) ∫ R̂₀(p) e^{-𝔤(p)s} dp over both half-lines.
    for (acc, &lag) in cov.iter().zip(&lags) {
        let f = |u: f64| {
            // p = u², removing the p^{-1/2} singularity.
            let p = u * u;
            if p == 0.0 {
                return 0.0;
            }
            2.0 * u * model.r0_hat_radial(p) * (-model.gap_radial(p) * lag).exp()
        };
        let kernel = 2.0 * adaptive(f, 0.0, model.p_max().sqrt(), 1e-10, 0.0)? / (2.0 * PI);
        check(acc.mean(), kernel, acc.stderr());
    }
    Ok(outcome(
        pass,
        format!("{C9_SAMPLES} samples, 3 modes and 3 lags; largest deviation {worst:.2} standard errors"),
    ))
}

fn c10() -> lrk_core::Result<Outcome> {
    // Unitarity.
    let eps = 0.25;
    let wgrid = admissible_grid(eps)?;
    let mut wave = WaveField::from_fn(wgrid, eps, 0.5, |x| Complex64::from_polar((-x * x / 2.0).exp(), 0.7 * x / eps))?;
    let before = wave.norm();
    let mut field = FieldState::init(&SpectrumModel::default(), wave.potential_grid()?, 3)?;
    split_step_evolve(&mut wave, &mut field, 1e-3, 1000)?;
    let drift = (wave.norm() - before).abs() / before;

    // Free limits against W₀(x - tk, k). On the default grid Δx = Δk, so at
    // t = 1 the characteristics land on grid nodes.
    let grid = PhaseSpaceGrid::default();
    let w0 = gaussian_w0(grid);
    let t = 1.0;
    let exact = WignerField::from_fn(grid, |x, k| gaussian(x - t * k, k));
    let free_model = SpectrumModel::default().with_amplitude(0.0)?;
    let free_jump = JumpMeasure::new(free_model.clone());
    let rel = |w: &WignerField| -> lrk_core::Result<f64> { Ok(w.difference(&exact)?.max_abs() / exact.max_abs()) };
    let fourier = rel(&solve_fourier(&w0, &free_jump, t)?)?;
    let transport = rel(&free_transport(&w0, t)?)?;
    let mc = rel(&estimate_field(&w0, t, &JumpSampler::new(&free_jump, 0.01)?, 16, 1)?.mean)?;
    let fractional = rel(&solve_fractional(&w0, &FractionalModel::new(0.5, 0.0, 1)?, t)?)?;
    let cfg = SeriesConfig {
        orientation: Orientation::Forward,
        ..SeriesConfig::default()
    };
    let pts: Vec<(f64, f64)> = probe_nodes(&grid).iter().map(|&(i, j)| (grid.x(i), grid.k(j))).collect();
    let series = solve_series_points(&gaussian, 1.0, &pts, &free_jump, &cfg, t, None)?;
    let series_err = pts
        .iter()
        .zip(&series.values)
        .map(|(&(x, k), v)| (v - gaussian(x - t * k, k)).abs())
        .fold(0.0, f64::max);

    // Free Schrödinger: the Wigner transform of a Gaussian packet
    // (2πs²)^{-1/4} e^{-x²/4s² + ik₀x/ε} is e^{-x²/2s² - 2s²(k-k₀)²/ε²}/(πε);
    // it must be transported exactly.
    let (eps, s, k0, ts) = (0.5, 0.5, 1.0, 0.5);
    let wgrid = admissible_grid(eps)?;
    let mut packet = WaveField::from_fn(wgrid, eps, 0.5, |x| {
        Complex64::from_polar((2.0 * PI * s * s).powf(-0.25) * (-x * x / (4.0 * s * s)).exp(), k0 * x / eps)
    })?;
    let n_steps = 200;
    let mut silent = FrozenPotential(FieldState::init(&free_model, packet.potential_grid()?, 1)?);
    split_step_evolve(&mut packet, &mut silent, ts / n_steps as f64, n_steps)?;
    let wig = wigner_transform(&[packet], &[1.0], 128)?;
    let transported = WignerField::from_fn(*wig.grid(), |x, k| {
        let x0 = x - ts * k;
        (-(x0 * x0) / (2.0 * s * s) - 2.0 * s * s * (k - k0).powi(2) / (eps * eps)).exp() / (PI * eps)
    });
    let schrodinger = wig.difference(&transported)?.max_abs() / transported.max_abs();

    let worst = fourier.max(transport).max(mc).max(fractional).max(series_err).max(schrodinger);
    Ok(outcome(
        drift < C10_NORM_DRIFT && worst < C10_FREE,
        format!(
            "norm drift {drift:.2e} over 10³ steps; free-limit errors: Fourier {fourier:.1e}, MC {mc:.1e}, \
             series {series_err:.1e}, fractional {fractional:.1e}, Schrödinger {schrodinger:.1e}"
        ),
    ))
}

fn c11() -> lrk_core::Result<Outcome> {
    let run = || -> lrk_core::Result<Vec<u64>> {
        let mut bits = Vec::new();
        let grid = PhaseSpaceGrid::new(64, 64, 8.0, 8.0)?;
        let w0 = gaussian_w0(grid);
        let jump = default_jump();
        let sampler = JumpSampler::new(&jump, 0.05)?;
        let mc = estimate_field(&w0, 0.7, &sampler, 3000, 21)?;
        bits.extend(mc.mean.values().iter().map(|v| v.to_bits()));
        bits.extend(mc.stderr.iter().map(|v| v.to_bits()));
        let p = estimate_point(&w0, 0.3, -0.2, 0.7, &sampler, 5000, 22)?;
        bits.extend([p.mean.to_bits(), p.stderr.to_bits()]);
        let mut field = FieldState::init(&SpectrumModel::default(), FieldGrid::centred(256, 0.5)?, 23)?;
        field.advance(0.3)?;
        bits.extend(field.realize()?.iter().map(|v| v.to_bits()));
        let cfg = KineticExperiment {
            epsilons: vec![0.5],
            t: 0.1,
            n_realizations: 6,
            mixture_size: 4,
            seed: 24,
            ..KineticExperiment::default()
        };
        let r = kinetic_limit_experiment(&cfg)?;
        for e in &r.results {
            bits.extend(e.wigner.values().iter().map(|v| v.to_bits()));
            bits.extend(e.std.iter().map(|v| v.to_bits()));
        }
        Ok(bits)
    };
    let mut outputs = Vec::new();
    for threads in [1, 2, 4] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| lrk_core::Error::Internal(e.to_string()))?;
        outputs.push(pool.install(run)?);
    }
    let same = outputs.windows(2).all(|w| w[0] == w[1]);
    Ok(outcome(
        same,
        format!(
            "MC field, MC point, field synthesis and Schrödinger ensemble with 1, 2, 4 workers: {} values {}",
            outputs[0].len(),
            if same { "bit-identical" } else { "differ" }
        ),
    ))
}

fn c12() -> lrk_core::Result<Outcome> {
    let params = ModelParams::default();
    let s = compute_scaling(&params, 0.5)?;
    let sqrt_pi = PI.sqrt();
    // Γ(1/2) = √π; D = a0 Ω₁ √π / (2π κ_γ (2κ_γ - 1)) with Ω₁ = 2, κ_γ = 1.
    let expected_d = 2.0 * sqrt_pi / (2.0 * PI);
    let checks = [
        (s.kappa0, 0.75),
        (s.kappa_gamma, 1.0),
        (s.rho_integral, sqrt_pi),
        (s.d_const, expected_d),
    ];
    let worst = checks.iter().map(|(got, want)| (got - want).abs() / want).fold(0.0, f64::max);
    Ok(outcome(
        worst < C12_REL,
        format!(
            "κ₀ = {}, κ_γ = {}, ρ-integral = {:.12}, D = {:.12}; worst relative error {worst:.1e}",
            s.kappa0, s.kappa_gamma, s.rho_integral, s.d_const
        ),
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> lrk_core::Result<Outcome>); 12] = [
        ("solver cross-validation (Monte Carlo vs Fourier)", c1),
        ("truncated collision series vs Monte Carlo", c2),
        ("L² non-expansion", c3),
        ("spectral regularization", c4),
        ("fractional exponent and constant", c5),
        ("η-convergence to the fractional limit", c6),
        ("power-law damping of spectral lines", c7),
        ("kinetic-limit trend of the Schrödinger ensemble", c8),
        ("field statistics", c9),
        ("unitarity and free limits", c10),
        ("determinism across worker counts", c11),
        ("phase constants", c12),
    ];
    let mut failed = 0;
    for (n, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match f() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {detail} [{:.1}s]",
            n + 1,
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        println!("acceptance: all {} criteria passed", criteria.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of {} criteria failed", criteria.len());
        ExitCode::FAILURE
    }
}
