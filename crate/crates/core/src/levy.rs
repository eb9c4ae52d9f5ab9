//! Monte Carlo solution of the transfer equation through its Lévy
//! representation
//!
//! ```text
//! W(t, x, k) = E[ W₀(x - tk - ∫_0^t L_s ds, k + L_t) ]
//! ```
//!
//! with `L` the compound Poisson process of jumps `|p| > δ` drawn from `σ`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::grid::{locate, WignerField};
use crate::par::deterministic_reduce;
use crate::quadrature::GaussRule;
use crate::rng::{stream, Domain};
use crate::spectrum::JumpMeasure;

/// Knots of the radial inverse-CDF table.
pub const TABLE_KNOTS: usize = 4096;
/// Paths per parallel work item.
const PATH_BLOCK: usize = 64;

/// Exact sampler of the jump law restricted to `|p| > δ` (d = 1).
#[derive(Clone, Debug)]
pub struct JumpSampler {
    log_r: Vec<f64>,
    cdf: Vec<f64>,
    rate: f64,
    delta: f64,
    support: f64,
}

impl JumpSampler {
    pub fn new(jump: &JumpMeasure, delta: f64) -> Result<Self> {
        let dimension = jump.model().dimension();
        if dimension != 1 {
            return Err(Error::UnsupportedDimension { dimension, what: "the Lévy sampler" });
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::param(
                "run.delta",
                format!("{delta}: Monte Carlo needs a positive small-jump cutoff"),
            ));
        }
        let support = jump.support_radius();
        if delta >= support || jump.model().a0() == 0.0 {
            return Ok(Self {
                log_r: Vec::new(),
                cdf: Vec::new(),
                rate: 0.0,
                delta,
                support,
            });
        }
        let (lo, hi) = (delta.ln(), support.ln());
        let log_r: Vec<f64> = (0..TABLE_KNOTS)
            .map(|i| lo + (hi - lo) * i as f64 / (TABLE_KNOTS - 1) as f64)
            .collect();
        let rule = GaussRule::new(8);
        let mut cdf = Vec::with_capacity(TABLE_KNOTS);
        cdf.push(0.0);
        let mut acc = 0.0;
        for w in log_r.windows(2) {
            let (a, b) = (w[0].exp(), w[1].exp());
            acc += rule.integrate(a, b, |r| jump.density_radial(r));
            cdf.push(acc);
        }
        let half = acc;
        for c in &mut cdf {
            *c /= half;
        }
        Ok(Self {
            log_r,
            cdf,
            rate: 2.0 * half,
            delta,
            support,
        })
    }

    /// `Σ_δ`, the total jump rate.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn support(&self) -> f64 {
        self.support
    }

    /// Tabulated `P(|p| <= r)`.
    pub fn radial_cdf(&self, r: f64) -> f64 {
        if self.rate == 0.0 || r <= self.delta {
            return 0.0;
        }
        if r >= self.support {
            return 1.0;
        }
        let lr = r.ln();
        let i = self.log_r.partition_point(|v| *v <= lr).clamp(1, TABLE_KNOTS - 1);
        let f = (lr - self.log_r[i - 1]) / (self.log_r[i] - self.log_r[i - 1]);
        self.cdf[i - 1] + f * (self.cdf[i] - self.cdf[i - 1])
    }

    /// One jump; must not be called when the rate is zero.
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        debug_assert!(self.rate > 0.0, "sampling an empty jump measure");
        let u: f64 = rng.random();
        let i = self.cdf.partition_point(|c| *c <= u).clamp(1, TABLE_KNOTS - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let f = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        let r = (self.log_r[i - 1] + f * (self.log_r[i] - self.log_r[i - 1])).exp();
        let r = r.clamp(self.delta, self.support);
        if rng.random::<bool>() {
            r
        } else {
            -r
        }
    }
}

/// One realization of the jump process on `[0, horizon]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LevyPath {
    pub jump_times: Vec<f64>,
    pub jumps: Vec<f64>,
    pub horizon: f64,
}

impl LevyPath {
    pub fn position(&self) -> f64 {
        self.jumps.iter().sum()
    }
}

pub fn sample_path(sampler: &JumpSampler, t: f64, rng: &mut impl Rng) -> Result<LevyPath> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("horizon {t} must be nonnegative")));
    }
    let mut times = Vec::new();
    let n = jump_count(sampler, t, rng);
    times.extend((0..n).map(|_| t * (1.0 - rng.random::<f64>())));
    times.sort_by(f64::total_cmp);
    let jumps = (0..n).map(|_| sampler.sample(rng)).collect();
    Ok(LevyPath { jump_times: times, jumps, horizon: t })
}

fn jump_count(sampler: &JumpSampler, t: f64, rng: &mut impl Rng) -> usize {
    let lambda = sampler.rate() * t;
    if lambda > 0.0 {
        Poisson::new(lambda).expect("positive finite mean").sample(rng) as usize
    } else {
        0
    }
}

/// `∫_0^T L_s ds` for the piecewise-constant path.
pub fn occupation_integral(path: &LevyPath) -> f64 {
    let mut level = 0.0;
    let mut total = 0.0;
    for (i, (&s, &p)) in path.jump_times.iter().zip(&path.jumps).enumerate() {
        level += p;
        let next = path.jump_times.get(i + 1).copied().unwrap_or(path.horizon);
        total += level * (next - s);
    }
    total
}

/// `(∫_0^t L_s ds, L_t)` without materializing the path.
fn path_summary(sampler: &JumpSampler, t: f64, rng: &mut ChaCha8Rng, times: &mut Vec<f64>) -> (f64, f64) {
    let n = jump_count(sampler, t, rng);
    if n == 0 {
        return (0.0, 0.0);
    }
    times.clear();
    times.extend((0..n).map(|_| t * (1.0 - rng.random::<f64>())));
    times.sort_by(f64::total_cmp);
    let mut level = 0.0;
    let mut occ = 0.0;
    for i in 0..n {
        level += sampler.sample(rng);
        let next = times.get(i + 1).copied().unwrap_or(t);
        occ += level * (next - times[i]);
    }
    (occ, level)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_paths: usize,
    pub delta: f64,
    /// Path evaluations that left the periodic box with non-negligible weight.
    pub wrap_warnings: u64,
}

#[derive(Clone, Debug)]
pub struct McField {
    pub mean: WignerField,
    pub stderr: Vec<f64>,
    pub n_paths: usize,
    pub delta: f64,
    pub wrap_warnings: u64,
}

fn check_inputs(t: f64, n_paths: usize) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("time {t} must be nonnegative")));
    }
    if n_paths < 2 {
        return Err(Error::param("run.n_paths", format!("{n_paths} must be at least 2")));
    }
    Ok(())
}

/// Sums of deviations from a reference value; exact zero spread when every
/// path reproduces the reference.
struct Moments {
    n: usize,
    s1: Vec<f64>,
    s2: Vec<f64>,
    wraps: u64,
}

impl Moments {
    fn zeros(len: usize) -> Self {
        Self { n: 0, s1: vec![0.0; len], s2: vec![0.0; len], wraps: 0 }
    }

    fn merge(mut self, other: Self) -> Self {
        self.n += other.n;
        self.wraps += other.wraps;
        for (a, b) in self.s1.iter_mut().zip(&other.s1) {
            *a += b;
        }
        for (a, b) in self.s2.iter_mut().zip(&other.s2) {
            *a += b;
        }
        self
    }

    fn finish(&self, reference: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n as f64;
        let mean = reference.iter().zip(&self.s1).map(|(r, s)| r + s / n).collect();
        let stderr = self
            .s1
            .iter()
            .zip(&self.s2)
            .map(|(s1, s2)| ((s2 - s1 * s1 / n).max(0.0) / (n - 1.0) / n).sqrt())
            .collect();
        (mean, stderr)
    }
}

/// Estimate of `W(t, x, k)` at one phase-space point.
pub fn estimate_point(
    w0: &WignerField,
    x: f64,
    k: f64,
    t: f64,
    sampler: &JumpSampler,
    n_paths: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_inputs(t, n_paths)?;
    let threshold = 1e-6 * w0.max_abs();
    let (reference, _) = w0.interpolate(x - t * k, k);
    let moments = deterministic_reduce(
        n_paths,
        PATH_BLOCK,
        |paths| {
            let mut m = Moments::zeros(1);
            let mut times = Vec::new();
            for path in paths {
                let mut rng = stream(seed, Domain::LevyPaths, path as u64);
                let (occ, level) = path_summary(sampler, t, &mut rng, &mut times);
                let (v, wrapped) = w0.interpolate(x - t * k - occ, k + level);
                if wrapped && v.abs() > threshold {
                    m.wraps += 1;
                }
                let d = v - reference;
                m.s1[0] += d;
                m.s2[0] += d * d;
                m.n += 1;
            }
            m
        },
        Moments::merge,
    )
    .expect("at least two paths");
    let (mean, stderr) = moments.finish(&[reference]);
    Ok(McEstimate {
        mean: mean[0],
        stderr: stderr[0],
        n_paths,
        delta: sampler.delta(),
        wrap_warnings: moments.wraps,
    })
}

/// Estimate on every grid point, reusing each path for all points.
pub fn estimate_field(
    w0: &WignerField,
    t: f64,
    sampler: &JumpSampler,
    n_paths: usize,
    seed: u64,
) -> Result<McField> {
    check_inputs(t, n_paths)?;
    let g = *w0.grid();
    let (n_x, n_k) = (g.n_x, g.n_k);
    let (dx, dk) = (g.dx(), g.dk());
    let threshold = 1e-6 * w0.max_abs();

    // Columns of W₀ at fixed k, contiguous in x.
    let mut cols = vec![0.0; g.len()];
    for i in 0..n_x {
        for j in 0..n_k {
            cols[j * n_x + i] = w0.at(i, j);
        }
    }

    // Adds W₀(x_i - tk_j - occ, k_j + level) for every (i, j) into `sink`.
    let evaluate = |occ: f64, level: f64, sink: &mut dyn FnMut(usize, &[f64], u64)| {
        let mut row = vec![0.0; n_x + 1];
        let mut vals = vec![0.0; n_x];
        for j in 0..n_k {
            let kj = g.k(j);
            let (j0, fk, k_wrapped) = locate(kj + level, g.l_k, dk, n_k);
            let j1 = (j0 + 1) % n_k;
            let (c0, c1) = (&cols[j0 * n_x..(j0 + 1) * n_x], &cols[j1 * n_x..(j1 + 1) * n_x]);
            for i in 0..n_x {
                row[i] = (1.0 - fk) * c0[i] + fk * c1[i];
            }
            row[n_x] = row[0];
            let u = -(t * kj + occ) / dx;
            let base = u.floor();
            let fx = u - base;
            let shift = (base as i64).rem_euclid(n_x as i64) as usize;
            let head = n_x - shift;
            // x index i maps to i + shift (mod n_x); split at the wrap point.
            for i in 0..head {
                let a = i + shift;
                vals[i] = (1.0 - fx) * row[a] + fx * row[a + 1];
            }
            for i in head..n_x {
                let a = i + shift - n_x;
                vals[i] = (1.0 - fx) * row[a] + fx * row[a + 1];
            }
            let mut wraps = 0u64;
            let lowest = base as i64;
            let x_wrap = lowest != 0;
            if k_wrapped || x_wrap {
                for (i, v) in vals.iter().enumerate() {
                    let cell = lowest + i as i64;
                    let outside = k_wrapped || cell < 0 || cell >= n_x as i64;
                    if outside && v.abs() > threshold {
                        wraps += 1;
                    }
                }
            }
            sink(j, &vals, wraps);
        }
    };

    // Moments are kept column-major (`j * n_x + i`) and transposed at the end.
    let mut reference = vec![0.0; g.len()];
    evaluate(0.0, 0.0, &mut |j, vals, _| {
        reference[j * n_x..(j + 1) * n_x].copy_from_slice(vals);
    });

    let moments = deterministic_reduce(
        n_paths,
        PATH_BLOCK,
        |paths| {
            let mut m = Moments::zeros(g.len());
            let mut times = Vec::new();
            for path in paths {
                let mut rng = stream(seed, Domain::LevyPaths, path as u64);
                let (occ, level) = path_summary(sampler, t, &mut rng, &mut times);
                m.n += 1;
                if occ == 0.0 && level == 0.0 {
                    continue;
                }
                let (s1, s2) = (&mut m.s1, &mut m.s2);
                let mut wraps = 0;
                evaluate(occ, level, &mut |j, vals, w| {
                    wraps += w;
                    let cols = j * n_x..(j + 1) * n_x;
                    let (r, a, b) = (&reference[cols.clone()], &mut s1[cols.clone()], &mut s2[cols]);
                    for i in 0..n_x {
                        let d = vals[i] - r[i];
                        a[i] += d;
                        b[i] += d * d;
                    }
                });
                m.wraps += wraps;
            }
            m
        },
        Moments::merge,
    )
    .expect("at least two paths");
    let (mean_cols, stderr_cols) = moments.finish(&reference);
    let mut mean = vec![0.0; g.len()];
    let mut stderr = vec![0.0; g.len()];
    for j in 0..n_k {
        for i in 0..n_x {
            mean[i * n_k + j] = mean_cols[j * n_x + i];
            stderr[i * n_k + j] = stderr_cols[j * n_x + i];
        }
    }
    Ok(McField {
        mean: WignerField::new(g, mean, w0.time_stamp() + t)?,
        stderr,
        n_paths,
        delta: sampler.delta(),
        wrap_warnings: moments.wraps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PhaseSpaceGrid;
    use crate::spectrum::{ModelParams, SpectrumModel};

    fn sampler(delta: f64) -> JumpSampler {
        JumpSampler::new(&JumpMeasure::new(SpectrumModel::default()), delta).unwrap()
    }

    #[test]
    fn rate_matches_quadrature() {
        let jump = JumpMeasure::new(SpectrumModel::default());
        for delta in [0.1, 0.01, 0.003] {
            let s = JumpSampler::new(&jump, delta).unwrap();
            let q = jump.total_rate_above(delta).unwrap();
            assert!((s.rate() - q).abs() < 1e-8 * q, "{} {}", s.rate(), q);
        }
        assert_eq!(JumpSampler::new(&jump, 1.5).unwrap().rate(), 0.0);
        assert!(JumpSampler::new(&jump, 0.0).is_err());
    }

    #[test]
    fn samples_stay_in_support() {
        let s = sampler(0.05);
        let mut rng = stream(1, Domain::LevyPaths, 0);
        for _ in 0..10_000 {
            let p = s.sample(&mut rng).abs();
            assert!(p >= 0.05 && p <= 1.0);
        }
    }

    #[test]
    fn occupation_integral_cases() {
        let empty = LevyPath { jump_times: vec![], jumps: vec![], horizon: 2.0 };
        assert_eq!(occupation_integral(&empty), 0.0);
        let one = LevyPath { jump_times: vec![0.5], jumps: vec![0.3], horizon: 2.0 };
        assert!((occupation_integral(&one) - 0.3 * 1.5).abs() < 1e-15);
        let two = LevyPath { jump_times: vec![0.5, 1.2], jumps: vec![0.3, -0.7], horizon: 2.0 };
        let exact = 0.3 * 0.7 + (0.3 - 0.7) * 0.8;
        assert!((occupation_integral(&two) - exact).abs() < 1e-15);
    }

    #[test]
    fn zero_horizon_path_is_empty() {
        let mut rng = stream(2, Domain::LevyPaths, 0);
        let p = sample_path(&sampler(0.01), 0.0, &mut rng).unwrap();
        assert!(p.jumps.is_empty());
    }

    #[test]
    fn path_summary_agrees_with_materialized_path() {
        let s = sampler(0.02);
        for i in 0..50 {
            let mut a = stream(4, Domain::LevyPaths, i);
            let mut b = stream(4, Domain::LevyPaths, i);
            let path = sample_path(&s, 1.5, &mut a).unwrap();
            let (occ, level) = path_summary(&s, 1.5, &mut b, &mut Vec::new());
            assert!((occ - occupation_integral(&path)).abs() < 1e-12);
            assert!((level - path.position()).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_without_scattering() {
        let model = SpectrumModel::new(ModelParams { a0: 0.0, ..Default::default() }).unwrap();
        let s = JumpSampler::new(&JumpMeasure::new(model), 0.01).unwrap();
        let g = PhaseSpaceGrid::new(64, 64, 8.0, 8.0).unwrap();
        let w0 = WignerField::from_fn(g, |x, k| (-x * x / 4.0 - k * k).exp());
        let e = estimate_point(&w0, 0.3, -0.2, 1.0, &s, 16, 3).unwrap();
        assert_eq!(e.stderr, 0.0);
        assert_eq!(e.mean, w0.interpolate(0.3 + 0.2, -0.2).0);
        let f = estimate_field(&w0, 1.0, &s, 8, 3).unwrap();
        assert!(f.stderr.iter().all(|s| *s == 0.0));
    }

    #[test]
    fn field_and_point_estimates_agree() {
        let s = sampler(0.05);
        let g = PhaseSpaceGrid::new(64, 64, 8.0, 8.0).unwrap();
        let w0 = WignerField::from_fn(g, |x, k| (-x * x / 4.0 - k * k).exp());
        let f = estimate_field(&w0, 0.8, &s, 200, 9).unwrap();
        let (i, j) = (30, 35);
        let e = estimate_point(&w0, g.x(i), g.k(j), 0.8, &s, 200, 9).unwrap();
        let idx = g.index(i, j);
        assert!((f.mean.values()[idx] - e.mean).abs() < 1e-12);
        assert!((f.stderr[idx] - e.stderr).abs() < 1e-12);
    }
}
