//! Exact solution of the radiative transfer equation through its double
//! Fourier representation.
//!
//! With `Ŵ(y, q) = ∫∫ e^{-i(xy + kq)} W(x, k) dx dk` the solution reads
//!
//! ```text
//! Ŵ(t, y, q) = exp(∫_0^t Ψ(q + u y) du) · Ŵ₀(y, q + t y)
//! ```
//!
//! On the periodic grid this is evaluated without any interpolation: after a
//! DFT in `x`, each `y`-row is damped in `q` (a convolution in `k`), brought
//! back to `k`, and the free streaming `x -> x - tk` becomes the exact phase
//! `e^{-i k t y}`.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{PhaseSpaceGrid, WignerField};
use crate::spectrum::JumpMeasure;

/// Logarithm of the damping factor applied at dual point `(y, q)`.
pub trait Damping: Sync {
    /// `∫_0^t Ψ(q + u y) du`; never positive.
    fn log_damping(&self, q: f64, y: f64, t: f64) -> f64;
}

impl Damping for JumpMeasure {
    fn log_damping(&self, q: f64, y: f64, t: f64) -> f64 {
        self.path_integral_1d(q, y, t)
    }
}

/// No scattering: pure free streaming.
#[derive(Clone, Copy, Debug, Default)]
pub struct FreeStreaming;

impl Damping for FreeStreaming {
    fn log_damping(&self, _q: f64, _y: f64, _t: f64) -> f64 {
        0.0
    }
}

/// Dual-space energy below this fraction does not count towards the
/// aliasing check.
const NEGLIGIBLE_ROW_ENERGY: f64 = 1e-14;
/// Spectral coefficients below this fraction of the largest one are not damped
/// (their damping factor is not evaluated; they are dropped).
const NEGLIGIBLE_COEFFICIENT: f64 = 1e-16;

#[derive(Clone, Debug)]
pub struct FourierReport {
    /// Largest `|Im|` of the reconstruction relative to the largest `|Re|`.
    pub imag_residue: f64,
    /// Largest `|y|` carrying non-negligible energy.
    pub y_effective: f64,
    /// Number of damping factors evaluated.
    pub damping_evaluations: usize,
}

struct Plans {
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_k: Arc<dyn Fft<f64>>,
    inv_k: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn new(grid: &PhaseSpaceGrid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            fwd_x: planner.plan_fft_forward(grid.n_x),
            inv_x: planner.plan_fft_inverse(grid.n_x),
            fwd_k: planner.plan_fft_forward(grid.n_k),
            inv_k: planner.plan_fft_inverse(grid.n_k),
        }
    }
}

fn transpose(src: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); src.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = src[r * cols + c];
        }
    }
    out
}

/// Raw 2-D DFT of the samples, laid out `[a * n_k + b]` with `a` the
/// x-frequency bin and `b` the k-frequency bin. The continuous transform is
/// `Δx Δk (-1)^(a+b)` times these values at `(y_a, q_b)`.
pub fn dual_spectrum(w: &WignerField) -> Vec<Complex64> {
    let plans = Plans::new(w.grid());
    forward(w, &plans)
}

fn forward(w: &WignerField, plans: &Plans) -> Vec<Complex64> {
    let g = w.grid();
    let mut buf: Vec<Complex64> = w.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plans.fwd_k.process(&mut buf);
    let mut t = transpose(&buf, g.n_x, g.n_k);
    plans.fwd_x.process(&mut t);
    transpose(&t, g.n_k, g.n_x)
}

/// Evolves `w0` over time `t` under the given damping.
pub fn evolve(w0: &WignerField, damping: &dyn Damping, t: f64) -> Result<(WignerField, FourierReport)> {
    if !t.is_finite() {
        return Err(Error::Domain(format!("time {t} is not finite")));
    }
    let g = *w0.grid();
    if t == 0.0 {
        let report = FourierReport {
            imag_residue: 0.0,
            y_effective: 0.0,
            damping_evaluations: 0,
        };
        return Ok((w0.clone(), report));
    }
    let plans = Plans::new(&g);
    let mut spec = forward(w0, &plans);

    let y_effective = effective_y(&g, &spec);
    if t.abs() * y_effective > g.q_nyquist() {
        return Err(Error::Aliasing(format!(
            "t·|y| = {:.4} exceeds the k-resolution limit π/Δk = {:.4}; enlarge n_k or shrink t",
            t.abs() * y_effective,
            g.q_nyquist()
        )));
    }

    let peak = spec.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let floor = NEGLIGIBLE_COEFFICIENT * peak;
    let n_k = g.n_k;
    let half_x = g.n_x / 2;

    // Log-damping for the non-negative y rows; rows with negative y follow
    // from D(-y, -q) = D(y, q).
    let rows: Vec<(Vec<f64>, usize)> = (0..half_x)
        .into_par_iter()
        .map(|a| {
            let y = g.y_of(a).expect("a < n_x/2 is never Nyquist");
            let mirror = (g.n_x - a) % g.n_x;
            let mut row = vec![f64::NEG_INFINITY; n_k];
            let mut evaluations = 0;
            for (b, slot) in row.iter_mut().enumerate() {
                let Some(q) = g.q_of(b) else { continue };
                let mb = (n_k - b) % n_k;
                let needed = spec[a * n_k + b].norm() >= floor
                    || (mirror != a && spec[mirror * n_k + mb].norm() >= floor);
                if needed && peak > 0.0 {
                    *slot = damping.log_damping(q - t * y, y, t);
                    evaluations += 1;
                }
            }
            (row, evaluations)
        })
        .collect();
    let damping_evaluations = rows.iter().map(|r| r.1).sum();

    spec.par_chunks_mut(n_k).enumerate().for_each(|(a, row)| {
        let Some(y) = g.y_of(a) else {
            row.fill(Complex64::default());
            return;
        };
        for (b, z) in row.iter_mut().enumerate() {
            let log_d = if a < half_x {
                rows[a].0[b]
            } else {
                rows[g.n_x - a].0[(n_k - b) % n_k]
            };
            *z = if log_d == f64::NEG_INFINITY {
                Complex64::default()
            } else {
                *z * log_d.exp()
            };
        }
        plans.inv_k.process(row);
        let scale = 1.0 / n_k as f64;
        for (j, z) in row.iter_mut().enumerate() {
            let phase = -g.k(j) * t * y;
            *z *= Complex64::from_polar(scale, phase);
        }
    });

    let mut cols = transpose(&spec, g.n_x, n_k);
    plans.inv_x.process(&mut cols);
    let out = transpose(&cols, n_k, g.n_x);
    let scale = 1.0 / g.n_x as f64;
    let max_re = out.iter().fold(0.0f64, |m, z| m.max(z.re.abs()));
    let max_im = out.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
    let values = out.iter().map(|z| z.re * scale).collect();
    let imag_residue = if max_re > 0.0 { max_im / max_re } else { 0.0 };
    let field = WignerField::new(g, values, w0.time_stamp() + t)?;
    Ok((
        field,
        FourierReport {
            imag_residue,
            y_effective,
            damping_evaluations,
        },
    ))
}

fn effective_y(g: &PhaseSpaceGrid, spec: &[Complex64]) -> f64 {
    let energies: Vec<f64> = spec.chunks(g.n_k).map(|row| row.iter().map(|z| z.norm_sqr()).sum()).collect();
    let total: f64 = energies.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    energies
        .iter()
        .enumerate()
        .filter(|(_, e)| **e > NEGLIGIBLE_ROW_ENERGY * total)
        .map(|(a, _)| g.y_of(a).map_or(g.y_nyquist(), f64::abs))
        .fold(0.0, f64::max)
}

/// Solution of the transfer equation with scattering kernel `jump` at time `t >= 0`.
pub fn solve_fourier(w0: &WignerField, jump: &JumpMeasure, t: f64) -> Result<WignerField> {
    if t < 0.0 {
        return Err(Error::Domain(format!("time {t} must be nonnegative")));
    }
    evolve(w0, jump, t).map(|(w, _)| w)
}

/// `w0(x - tk, k)` by the same spectral shear with unit damping.
pub fn free_transport(w0: &WignerField, t: f64) -> Result<WignerField> {
    evolve(w0, &FreeStreaming, t).map(|(w, _)| w)
}

/// Fraction of squared spectral mass at dual radii `max(|y|, |q|) > cutoff`.
pub fn spectral_tail_mass(w: &WignerField, cutoff: f64) -> Result<f64> {
    let g = w.grid();
    if !(cutoff > 0.0 && cutoff < g.y_nyquist().min(g.q_nyquist())) {
        return Err(Error::Domain(format!(
            "cutoff {cutoff} must lie in (0, {})",
            g.y_nyquist().min(g.q_nyquist())
        )));
    }
    let spec = dual_spectrum(w);
    let mut total = 0.0;
    let mut tail = 0.0;
    for a in 0..g.n_x {
        let y = g.y_of(a).map_or(g.y_nyquist(), f64::abs);
        for b in 0..g.n_k {
            let q = g.q_of(b).map_or(g.q_nyquist(), f64::abs);
            let e = spec[a * g.n_k + b].norm_sqr();
            total += e;
            if y.max(q) > cutoff {
                tail += e;
            }
        }
    }
    Ok(if total > 0.0 { tail / total } else { 0.0 })
}
