//! Truncated collision series for the transfer equation with jumps
//! restricted to `|p| > 1/N`.
//!
//! Conditioning on the number of jumps in `[0, t]` gives
//!
//! ```text
//! W = e^{-Σ_N t} Σ_n ∫_{D_n(t)} ds ∫ ∏ σ(p_j) dp_j λ(x ∓ tk ∓ Σ_j s_j p_j, k + Σ_j p_j)
//! ```
//!
//! with `D_n(t) = {0 < s_n < ... < s_1 < t}`. The upper signs give the
//! solution of the forward equation `∂_t W + k·∇_x W = 𝓛_N W`; the lower
//! signs transport along `x + tk`, i.e. solve `∂_t W = k·∇_x W + 𝓛_N W`. The
//! two are mirror images: the lower-sign series of `λ` at `(x, k)` equals the
//! upper-sign series of `λ(-x, k)` at `(-x, k)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{PhaseSpaceGrid, WignerField};
use crate::quadrature::GaussRule;
use crate::spectrum::JumpMeasure;

/// Highest collision order evaluated.
pub const MAX_ORDER: usize = 3;

/// Direction of free streaming in the series.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Orientation {
    /// Transport along `x + tk`.
    #[default]
    Backward,
    /// Transport along `x - tk`, the orientation of the Fourier and Monte
    /// Carlo solvers.
    Forward,
}

#[derive(Clone, Debug)]
pub struct SeriesConfig {
    /// Jumps are restricted to `|p| > 1/cutoff_n`.
    pub cutoff_n: u32,
    pub n_max: usize,
    /// Gauss points per simplex coordinate.
    pub time_order: usize,
    /// Gauss points per radial panel of the jump quadrature.
    pub p_order: usize,
    /// Geometric radial panels between `1/N` and the support radius.
    pub p_panels: usize,
    pub orientation: Orientation,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self {
            cutoff_n: 10,
            n_max: 3,
            time_order: 4,
            p_order: 6,
            p_panels: 2,
            orientation: Orientation::Backward,
        }
    }
}

impl SeriesConfig {
    pub fn violations(&self) -> Vec<Error> {
        let mut out = Vec::new();
        if self.cutoff_n == 0 {
            out.push(Error::param("solver.cutoff_n", "must be a positive integer"));
        }
        if self.n_max > MAX_ORDER {
            out.push(Error::param(
                "solver.n_max",
                format!("{} exceeds the supported maximum {MAX_ORDER}", self.n_max),
            ));
        }
        if self.time_order == 0 || self.p_order == 0 || self.p_panels == 0 {
            out.push(Error::param("solver.time_order", "quadrature orders must be positive"));
        }
        out
    }
}

/// `Σ_{n > n_max} e^{-x} x^n / n!` with `x = Σ_N t`, summed directly.
pub fn poisson_tail_bound(sigma_n: f64, t: f64, n_max: usize) -> f64 {
    let x = sigma_n * t;
    if !(x > 0.0) {
        return 0.0;
    }
    let mut total = 0.0;
    let mut n = n_max + 1;
    loop {
        let term = (-x + n as f64 * x.ln() - libm::lgamma(n as f64 + 1.0)).exp();
        total += term;
        if (n as f64 > x && term <= 1e-18 * total) || term == 0.0 || n > n_max + 100_000 {
            break;
        }
        n += 1;
    }
    total
}

#[derive(Clone, Debug)]
pub struct SeriesResult {
    pub values: Vec<f64>,
    /// Contribution of each collision order, `terms[n][point]`.
    pub terms: Vec<Vec<f64>>,
    /// A-priori bound on the omitted orders, times `‖λ‖_∞`.
    pub tail_bound: f64,
    pub sigma_n: f64,
    /// Set when the bound exceeds the caller's budget.
    pub over_budget: bool,
}

/// Tensor Gauss rule for the jump variable on `1/N < |p| < p_max`.
fn jump_nodes(jump: &JumpMeasure, cfg: &SeriesConfig) -> Vec<(f64, f64)> {
    let lo = 1.0 / cfg.cutoff_n as f64;
    let hi = jump.support_radius();
    if lo >= hi {
        return Vec::new();
    }
    let rule = GaussRule::new(cfg.p_order);
    let mut nodes = Vec::new();
    let mut push_panel = |a: f64, b: f64| {
        for (r, w) in rule.mapped(a, b) {
            let weight = w * jump.density_radial(r);
            nodes.push((r, weight));
            nodes.push((-r, weight));
        }
    };
    // Geometric panels where σ is a pure power law, uniform ones across the
    // smooth cut-off of the profile.
    let edge = (jump.model().plateau_edge() / jump.eta()).clamp(lo, hi);
    if edge > lo {
        let ratio = (edge / lo).powf(1.0 / cfg.p_panels as f64);
        let mut a = lo;
        for panel in 0..cfg.p_panels {
            let b = if panel + 1 == cfg.p_panels { edge } else { a * ratio };
            push_panel(a, b);
            a = b;
        }
    }
    let cutoff_panels = cfg.p_panels;
    let width = (hi - edge) / cutoff_panels as f64;
    for panel in 0..cutoff_panels {
        let a = edge + panel as f64 * width;
        push_panel(a, a + width);
    }
    nodes
}

/// Collapsed-coordinate rule on `D_n(t)`: `s_1 = t u_1`, `s_{j+1} = s_j u_{j+1}`.
fn simplex_nodes(n: usize, t: f64, order: usize) -> Vec<(Vec<f64>, f64)> {
    let rule = GaussRule::new(order);
    let base: Vec<(f64, f64)> = rule.mapped(0.0, 1.0).collect();
    let mut out = vec![(Vec::new(), 1.0)];
    for level in 0..n {
        let mut next = Vec::with_capacity(out.len() * base.len());
        for (s, w) in &out {
            let prev = if level == 0 { t } else { s[level - 1] };
            for &(u, wu) in &base {
                let mut s2 = s.clone();
                s2.push(prev * u);
                next.push((s2, w * wu * prev));
            }
        }
        out = next;
    }
    out
}

/// Series solution at arbitrary phase-space points.
pub fn solve_series_points(
    lambda: &(dyn Fn(f64, f64) -> f64 + Sync),
    lambda_sup: f64,
    points: &[(f64, f64)],
    jump: &JumpMeasure,
    cfg: &SeriesConfig,
    t: f64,
    tail_budget: Option<f64>,
) -> Result<SeriesResult> {
    if let Some(err) = cfg.violations().into_iter().next() {
        return Err(err);
    }
    if jump.model().dimension() != 1 {
        return Err(Error::UnsupportedDimension {
            dimension: jump.model().dimension(),
            what: "the collision series",
        });
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("time {t} must be nonnegative")));
    }
    let delta = 1.0 / cfg.cutoff_n as f64;
    let sigma_n = jump.total_rate_above(delta)?;
    let damping = (-sigma_n * t).exp();
    let sign = match cfg.orientation {
        Orientation::Forward => -1.0,
        Orientation::Backward => 1.0,
    };
    let p_nodes = jump_nodes(jump, cfg);
    let simplices: Vec<Vec<(Vec<f64>, f64)>> =
        (1..=cfg.n_max).map(|n| simplex_nodes(n, t, cfg.time_order)).collect();

    let per_point: Vec<Vec<f64>> = points
        .par_iter()
        .map(|&(x, k)| {
            let x0 = x + sign * t * k;
            let mut terms = vec![damping * lambda(x0, k)];
            for (n, simplex) in (1..=cfg.n_max).zip(&simplices) {
                let mut total = 0.0;
                if t > 0.0 && !p_nodes.is_empty() {
                    for (s, ws) in simplex {
                        total += ws * jump_sum(lambda, &p_nodes, s, x0, k, sign, n);
                    }
                }
                terms.push(damping * total);
            }
            terms
        })
        .collect();

    let tail_bound = poisson_tail_bound(sigma_n, t, cfg.n_max) * lambda_sup;
    let mut terms = vec![vec![0.0; points.len()]; cfg.n_max + 1];
    let mut values = vec![0.0; points.len()];
    for (i, per) in per_point.iter().enumerate() {
        for (n, v) in per.iter().enumerate() {
            terms[n][i] = *v;
            values[i] += v;
        }
    }
    Ok(SeriesResult {
        values,
        terms,
        tail_bound,
        sigma_n,
        over_budget: tail_budget.is_some_and(|b| tail_bound > b),
    })
}

/// `∫ ∏ σ(p_j) dp_j λ(x0 + sign Σ s_j p_j, k + Σ p_j)` for `n` jumps.
fn jump_sum(
    lambda: &(dyn Fn(f64, f64) -> f64 + Sync),
    nodes: &[(f64, f64)],
    s: &[f64],
    x0: f64,
    k: f64,
    sign: f64,
    n: usize,
) -> f64 {
    let mut total = 0.0;
    match n {
        1 => {
            for &(p1, w1) in nodes {
                total += w1 * lambda(x0 + sign * s[0] * p1, k + p1);
            }
        }
        2 => {
            for &(p1, w1) in nodes {
                let (xa, ka) = (x0 + sign * s[0] * p1, k + p1);
                let mut inner = 0.0;
                for &(p2, w2) in nodes {
                    inner += w2 * lambda(xa + sign * s[1] * p2, ka + p2);
                }
                total += w1 * inner;
            }
        }
        3 => {
            for &(p1, w1) in nodes {
                let (xa, ka) = (x0 + sign * s[0] * p1, k + p1);
                let mut mid = 0.0;
                for &(p2, w2) in nodes {
                    let (xb, kb) = (xa + sign * s[1] * p2, ka + p2);
                    let mut inner = 0.0;
                    for &(p3, w3) in nodes {
                        inner += w3 * lambda(xb + sign * s[2] * p3, kb + p3);
                    }
                    mid += w2 * inner;
                }
                total += w1 * mid;
            }
        }
        _ => unreachable!("orders above {MAX_ORDER} are rejected by validation"),
    }
    total
}

/// Series solution on every point of `grid`.
pub fn solve_series(
    lambda: &(dyn Fn(f64, f64) -> f64 + Sync),
    lambda_sup: f64,
    grid: PhaseSpaceGrid,
    jump: &JumpMeasure,
    cfg: &SeriesConfig,
    t: f64,
) -> Result<(WignerField, SeriesResult)> {
    let points: Vec<(f64, f64)> = (0..grid.n_x)
        .flat_map(|i| (0..grid.n_k).map(move |j| (grid.x(i), grid.k(j))))
        .collect();
    let result = solve_series_points(lambda, lambda_sup, &points, jump, cfg, t, None)?;
    let field = WignerField::new(grid, result.values.clone(), t)?;
    Ok((field, result))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::SpectrumModel;

    fn gauss(x: f64, k: f64) -> f64 {
        (-x * x / 8.0 - k * k / 4.5).exp()
    }

    #[test]
    fn poisson_tail_values() {
        assert_eq!(poisson_tail_bound(0.0, 1.0, 3), 0.0);
        assert!(poisson_tail_bound(1.0, 1.0, 50) < 1e-40);
        let partial: f64 = (0..=3).map(|n| (-1.0f64).exp() / libm::tgamma(n as f64 + 1.0)).sum();
        let got = poisson_tail_bound(1.0, 1.0, 3);
        assert!((got - (1.0 - partial)).abs() < 1e-15);
        assert!((got - 0.018_988_156_876_153_8).abs() < 1e-12);
    }

    #[test]
    fn simplex_rule_integrates_volume_and_moments() {
        let t = 0.7;
        let nodes = simplex_nodes(3, t, 5);
        let vol: f64 = nodes.iter().map(|(_, w)| w).sum();
        assert!((vol - t.powi(3) / 6.0).abs() < 1e-14);
        // ∫_{0<s3<s2<s1<t} s1 s3 ds = t^5 / 30.
        let m: f64 = nodes.iter().map(|(s, w)| w * s[0] * s[2]).sum();
        assert!((m - t.powi(5) / 30.0).abs() < 1e-13, "{m}");
    }

    #[test]
    fn zeroth_order_only() {
        let jump = JumpMeasure::new(SpectrumModel::default());
        let cfg = SeriesConfig { n_max: 0, ..Default::default() };
        let t = 0.5;
        let r = solve_series_points(&gauss, 1.0, &[(0.3, -0.4)], &jump, &cfg, t, None).unwrap();
        let sigma = jump.total_rate_above(0.1).unwrap();
        let exact = (-sigma * t).exp() * gauss(0.3 + t * -0.4, -0.4);
        assert!((r.values[0] - exact).abs() < 1e-15);
    }

    #[test]
    fn zero_time_is_identity() {
        let jump = JumpMeasure::new(SpectrumModel::default());
        let r = solve_series_points(&gauss, 1.0, &[(1.0, 2.0)], &jump, &SeriesConfig::default(), 0.0, None).unwrap();
        assert_eq!(r.values[0], gauss(1.0, 2.0));
        assert_eq!(r.tail_bound, 0.0);
    }

    #[test]
    fn constant_data_is_preserved() {
        // λ ≡ 1: every order gives e^{-Σt}(Σt)^n/n!, up to quadrature error.
        let jump = JumpMeasure::new(SpectrumModel::default());
        let cfg = SeriesConfig::default();
        let t = 0.5;
        let r = solve_series_points(&|_, _| 1.0, 1.0, &[(0.0, 0.0)], &jump, &cfg, t, None).unwrap();
        let x = r.sigma_n * t;
        for n in 0..=3 {
            let exact = (-x).exp() * x.powi(n as i32) / libm::tgamma(n as f64 + 1.0);
            let err = (r.terms[n][0] - exact).abs() / exact;
            assert!(err < 1e-5, "order {n}: {err:e}");
        }
        assert!((r.values[0] + r.tail_bound - 1.0).abs() < 1e-6);
    }

    #[test]
    fn orientations_are_mirror_images() {
        let jump = JumpMeasure::new(SpectrumModel::default());
        let lam = |x: f64, k: f64| (-(x - 0.7).powi(2) / 3.0 - (k + 0.2).powi(2)).exp();
        let mirrored = |x: f64, k: f64| lam(-x, k);
        let back = SeriesConfig { n_max: 2, ..Default::default() };
        let fwd = SeriesConfig { orientation: Orientation::Forward, ..back.clone() };
        let a = solve_series_points(&lam, 1.0, &[(0.4, 0.9)], &jump, &back, 0.6, None).unwrap();
        let b = solve_series_points(&mirrored, 1.0, &[(-0.4, 0.9)], &jump, &fwd, 0.6, None).unwrap();
        assert!((a.values[0] - b.values[0]).abs() < 1e-14);
    }

    #[test]
    fn terms_are_nonnegative_and_budget_is_flagged() {
        let jump = JumpMeasure::new(SpectrumModel::default());
        let r = solve_series_points(&gauss, 1.0, &[(0.0, 0.0), (3.0, -1.0)], &jump, &SeriesConfig::default(), 0.5, Some(1e-6))
            .unwrap();
        assert!(r.terms.iter().flatten().all(|v| *v >= 0.0));
        assert!(r.over_budget);
    }
}
