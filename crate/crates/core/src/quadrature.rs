//! Quadrature building blocks shared by every solver.
//!
//! The integrands met here are smooth away from the origin and carry an
//! integrable power singularity at `|p| = 0`. [`GradedRule`] handles them by
//! splitting the radial axis into geometric shells, each integrated with a
//! fixed Gauss–Legendre rule; oscillating kernels get extra panels per shell.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(order: usize) -> Self {
        let order = NonZeroUsize::new(order.max(1)).expect("order clamped to >= 1");
        let (nodes, weights) = GaussLegendre::new(order)
            .as_node_weight_pairs()
            .iter()
            .copied()
            .unzip();
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Composite rule over `panels` equal sub-intervals of `[a, b]`.
    pub fn integrate_panels(
        &self,
        a: f64,
        b: f64,
        panels: usize,
        mut f: impl FnMut(f64) -> f64,
    ) -> f64 {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|i| {
                let lo = a + h * i as f64;
                self.integrate(lo, lo + h, &mut f)
            })
            .sum()
    }
}

/// Number of panels needed to keep at most half an oscillation of
/// `cos(freq * r)` inside each panel.
pub(crate) fn oscillation_panels(width: f64, freq: f64) -> usize {
    let n = (width.abs() * freq.abs() / PI).ceil();
    if n.is_finite() && n >= 1.0 {
        n as usize
    } else {
        1
    }
}

/// Geometrically graded composite Gauss rule.
#[derive(Clone, Debug)]
pub struct GradedRule {
    pub levels: usize,
    pub ratio: f64,
    rule: GaussRule,
}

impl GradedRule {
    pub fn new(levels: usize, ratio: f64, order: usize) -> Self {
        assert!(ratio > 0.0 && ratio < 1.0, "shell ratio must lie in (0, 1)");
        Self {
            levels,
            ratio,
            rule: GaussRule::new(order),
        }
    }

    /// 40 shells of ratio 1/2 with a 16-point rule per panel.
    pub fn standard() -> Self {
        Self::new(40, 0.5, 16)
    }

    /// Finer mesh used to confirm convergence of [`GradedRule::standard`].
    pub fn refined() -> Self {
        Self::new(56, 0.5, 24)
    }

    pub fn order(&self) -> usize {
        self.rule.order()
    }

    /// Innermost radius reached when grading from `hi` towards the origin.
    pub fn inner_radius(&self, hi: f64) -> f64 {
        hi * self.ratio.powi(self.levels as i32)
    }

    /// `∫ f` over `[inner_radius(hi), hi]`, shells shrinking towards zero.
    /// The caller accounts for `[0, inner_radius(hi)]`.
    pub fn integrate_to_origin(&self, hi: f64, freq: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let mut total = 0.0;
        let mut outer = hi;
        for _ in 0..self.levels {
            let inner = outer * self.ratio;
            let panels = oscillation_panels(outer - inner, freq);
            total += self.rule.integrate_panels(inner, outer, panels, &mut f);
            outer = inner;
        }
        total
    }

    /// `∫ f` over `[lo, hi]` with `lo > 0`, shells growing geometrically
    /// away from `lo`.
    pub fn integrate_from(&self, lo: f64, hi: f64, freq: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let grow = 1.0 / self.ratio;
        let mut total = 0.0;
        let mut inner = lo;
        while inner < hi {
            let outer = (inner * grow).min(hi);
            let panels = oscillation_panels(outer - inner, freq);
            total += self.rule.integrate_panels(inner, outer, panels, &mut f);
            inner = outer;
        }
        total
    }

    /// Plain composite rule over `[a, b]` with `panels` sub-intervals
    /// (raised as needed to follow oscillations at `freq`).
    pub fn integrate_smooth(
        &self,
        a: f64,
        b: f64,
        panels: usize,
        freq: f64,
        f: impl FnMut(f64) -> f64,
    ) -> f64 {
        let panels = panels.max(oscillation_panels(b - a, freq));
        self.rule.integrate_panels(a, b, panels, f)
    }
}

/// `∫_0^r f` for an integrand behaving like `f(r) (x / r)^exponent` on
/// `(0, r]`, `exponent > -1`.
pub fn power_law_tail(value_at_r: f64, r: f64, exponent: f64) -> f64 {
    debug_assert!(exponent > -1.0);
    value_at_r * r / (exponent + 1.0)
}

/// Adaptive bisection with a 10-point Gauss rule, accepting a panel when the
/// one-panel and two-panel estimates agree to the local share of the
/// tolerance.
pub fn adaptive(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let rule = GaussRule::new(10);
    let rough = rule.integrate_panels(a, b, 8, &mut f);
    let tol = abs_tol.max(rel_tol * rough.abs());
    let span = (b - a).abs();

    let mut total = 0.0;
    let mut stack = vec![(a, b, rule.integrate(a, b, &mut f), 0usize)];
    let mut evaluated = 0usize;
    while let Some((lo, hi, whole, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = rule.integrate(lo, mid, &mut f);
        let right = rule.integrate(mid, hi, &mut f);
        evaluated += 1;
        let local_tol = tol * (hi - lo).abs() / span;
        if (left + right - whole).abs() <= local_tol || (depth >= 60 && (hi - lo).abs() < 1e-15 * span)
        {
            total += left + right;
        } else if depth >= 60 || evaluated > 200_000 {
            return Err(Error::Quadrature(format!(
                "adaptive rule did not converge on [{a}, {b}] near [{lo}, {hi}]"
            )));
        } else {
            stack.push((lo, mid, left, depth + 1));
            stack.push((mid, hi, right, depth + 1));
        }
    }
    Ok(total)
}
