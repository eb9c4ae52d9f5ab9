//! Periodic phase-space grid and the sampled Wigner fields exchanged by all
//! solvers.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic grid on `[-L_x, L_x) × [-L_k, L_k)`.
///
/// Samples sit at `x_i = -L_x + i Δx`, `k_j = -L_k + j Δk`. Values are stored
/// x-major: index `i * n_k + j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceGrid {
    pub n_x: usize,
    pub n_k: usize,
    pub l_x: f64,
    pub l_k: f64,
}

impl Default for PhaseSpaceGrid {
    fn default() -> Self {
        Self {
            n_x: 256,
            n_k: 256,
            l_x: 8.0 * PI,
            l_k: 8.0 * PI,
        }
    }
}

impl PhaseSpaceGrid {
    pub fn new(n_x: usize, n_k: usize, l_x: f64, l_k: f64) -> Result<Self> {
        let grid = Self { n_x, n_k, l_x, l_k };
        if let Some(err) = grid.violations().into_iter().next() {
            return Err(err);
        }
        Ok(grid)
    }

    pub fn violations(&self) -> Vec<Error> {
        let mut out = Vec::new();
        if !(self.n_x >= 2 && self.n_x.is_power_of_two()) {
            out.push(Error::param("grid.n_x", format!("{} is not a power of two >= 2", self.n_x)));
        }
        if !(self.n_k >= 2 && self.n_k.is_power_of_two()) {
            out.push(Error::param("grid.n_k", format!("{} is not a power of two >= 2", self.n_k)));
        }
        if !(self.l_x > 0.0 && self.l_x.is_finite()) {
            out.push(Error::param("grid.L_x", format!("{} must be positive", self.l_x)));
        }
        if !(self.l_k > 0.0 && self.l_k.is_finite()) {
            out.push(Error::param("grid.L_k", format!("{} must be positive", self.l_k)));
        }
        out
    }

    pub fn len(&self) -> usize {
        self.n_x * self.n_k
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.l_x / self.n_x as f64
    }

    pub fn dk(&self) -> f64 {
        2.0 * self.l_k / self.n_k as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.l_x + i as f64 * self.dx()
    }

    pub fn k(&self, j: usize) -> f64 {
        -self.l_k + j as f64 * self.dk()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_k + j
    }

    /// Cell measure `Δx Δk`.
    pub fn cell(&self) -> f64 {
        self.dx() * self.dk()
    }

    /// Largest resolved `|y|` (dual to x).
    pub fn y_nyquist(&self) -> f64 {
        PI / self.dx()
    }

    /// Largest resolved `|q|` (dual to k).
    pub fn q_nyquist(&self) -> f64 {
        PI / self.dk()
    }

    /// Dual variable of DFT bin `a` along x; `None` for the Nyquist bin,
    /// whose sign is ambiguous.
    pub fn y_of(&self, a: usize) -> Option<f64> {
        signed_bin(a, self.n_x).map(|s| PI * s as f64 / self.l_x)
    }

    /// Dual variable of DFT bin `b` along k; `None` for the Nyquist bin.
    pub fn q_of(&self, b: usize) -> Option<f64> {
        signed_bin(b, self.n_k).map(|s| PI * s as f64 / self.l_k)
    }

    pub fn same_as(&self, other: &Self) -> bool {
        self.n_x == other.n_x
            && self.n_k == other.n_k
            && self.l_x.to_bits() == other.l_x.to_bits()
            && self.l_k.to_bits() == other.l_k.to_bits()
    }
}

/// Signed frequency index of DFT bin `a`, or `None` at Nyquist.
pub(crate) fn signed_bin(a: usize, n: usize) -> Option<i64> {
    let half = n / 2;
    if a < half {
        Some(a as i64)
    } else if a == half {
        None
    } else {
        Some(a as i64 - n as i64)
    }
}

/// Real samples of a phase-space density at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerField {
    grid: PhaseSpaceGrid,
    values: Vec<f64>,
    time_stamp: f64,
}

impl WignerField {
    pub fn new(grid: PhaseSpaceGrid, values: Vec<f64>, time_stamp: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Grid(format!(
                "{} values for a {}x{} grid",
                values.len(),
                grid.n_x,
                grid.n_k
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite value at flat index {pos}")));
        }
        Ok(Self { grid, values, time_stamp })
    }

    pub fn zeros(grid: PhaseSpaceGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
            time_stamp: 0.0,
        }
    }

    pub fn from_fn(grid: PhaseSpaceGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.n_x {
            let x = grid.x(i);
            for j in 0..grid.n_k {
                values.push(f(x, grid.k(j)));
            }
        }
        Self { grid, values, time_stamp: 0.0 }
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn time_stamp(&self) -> f64 {
        self.time_stamp
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time_stamp = t;
        self
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    /// `sqrt(Δx Δk Σ w²)`.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.cell() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Grid inner product `Δx Δk Σ w v`.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_grid(other)?;
        Ok(self.grid.cell() * self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>())
    }

    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(Self { grid: self.grid, values, time_stamp: self.time_stamp })
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.check_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| a * u + b * v)
            .collect();
        Ok(Self { grid: self.grid, values, time_stamp: self.time_stamp })
    }

    fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::Grid("fields live on different grids".into()))
        }
    }

    /// Periodic bilinear interpolation. The flag is set when `(x, k)` lay
    /// outside the base cell and was wrapped.
    pub fn interpolate(&self, x: f64, k: f64) -> (f64, bool) {
        let g = &self.grid;
        let (i0, fx, wx) = locate(x, g.l_x, g.dx(), g.n_x);
        let (j0, fk, wk) = locate(k, g.l_k, g.dk(), g.n_k);
        let i1 = (i0 + 1) % g.n_x;
        let j1 = (j0 + 1) % g.n_k;
        let v = (1.0 - fx) * ((1.0 - fk) * self.at(i0, j0) + fk * self.at(i0, j1))
            + fx * ((1.0 - fk) * self.at(i1, j0) + fk * self.at(i1, j1));
        (v, wx || wk)
    }

    /// Writes the field as CSV: a metadata comment line, a header and one
    /// row per grid point (x-major). `extra` adds a named column.
    pub fn write_csv(&self, out: &mut impl Write, extra: Option<(&str, &[f64])>) -> Result<()> {
        if let Some((_, col)) = extra {
            if col.len() != self.values.len() {
                return Err(Error::Grid("extra column length does not match the grid".into()));
            }
        }
        let g = &self.grid;
        writeln!(
            out,
            "# n_x={},n_k={},L_x={:.16e},L_k={:.16e},time_stamp={:.16e}",
            g.n_x, g.n_k, g.l_x, g.l_k, self.time_stamp
        )?;
        match extra {
            Some((name, _)) => writeln!(out, "x,k,value,{name}")?,
            None => writeln!(out, "x,k,value")?,
        }
        for i in 0..g.n_x {
            let x = g.x(i);
            for j in 0..g.n_k {
                let idx = g.index(i, j);
                write!(out, "{:.16e},{:.16e},{:.16e}", x, g.k(j), self.values[idx])?;
                if let Some((_, col)) = extra {
                    write!(out, ",{:.16e}", col[idx])?;
                }
                writeln!(out)?;
            }
        }
        Ok(())
    }

    /// Reads a field written by [`Self::write_csv`]; an extra column, if
    /// present, is returned alongside.
    pub fn read_csv(input: impl BufRead) -> Result<(Self, Option<Vec<f64>>)> {
        let mut lines = input.lines();
        let meta = lines
            .next()
            .ok_or_else(|| Error::Parse("empty file".into()))??;
        let meta = meta
            .strip_prefix('#')
            .ok_or_else(|| Error::Parse("missing metadata line".into()))?;
        let mut n_x = None;
        let mut n_k = None;
        let mut l_x = None;
        let mut l_k = None;
        let mut time_stamp = 0.0;
        for item in meta.trim().split(',') {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad metadata entry {item:?}")))?;
            let bad = |_| Error::Parse(format!("bad metadata value {item:?}"));
            match key.trim() {
                "n_x" => n_x = Some(value.trim().parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "n_k" => n_k = Some(value.trim().parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "L_x" => l_x = Some(parse_f64(value)?),
                "L_k" => l_k = Some(parse_f64(value)?),
                "time_stamp" => time_stamp = parse_f64(value)?,
                _ => {}
            }
        }
        let missing = |name: &str| Error::Parse(format!("metadata lacks {name}"));
        let grid = PhaseSpaceGrid::new(
            n_x.ok_or_else(|| missing("n_x"))?,
            n_k.ok_or_else(|| missing("n_k"))?,
            l_x.ok_or_else(|| missing("L_x"))?,
            l_k.ok_or_else(|| missing("L_k"))?,
        )?;
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing header".into()))??;
        let has_extra = match header.trim().split(',').count() {
            3 => false,
            4 => true,
            _ => return Err(Error::Parse(format!("unexpected header {header:?}"))),
        };
        let mut values = Vec::with_capacity(grid.len());
        let mut extra = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut cols = line.split(',').skip(2);
            let v = cols.next().ok_or_else(|| Error::Parse(format!("short row {line:?}")))?;
            values.push(parse_f64(v)?);
            if has_extra {
                let e = cols.next().ok_or_else(|| Error::Parse(format!("short row {line:?}")))?;
                extra.push(parse_f64(e)?);
            }
        }
        let field = Self::new(grid, values, time_stamp)?;
        Ok((field, has_extra.then_some(extra)))
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("{s:?}: {e}")))
}

/// Cell index, fractional offset and wrap flag of coordinate `z` on a
/// periodic axis starting at `-half_width`.
#[inline]
pub(crate) fn locate(z: f64, half_width: f64, step: f64, n: usize) -> (usize, f64, bool) {
    let u = (z + half_width) / step;
    let base = u.floor();
    let frac = u - base;
    let wrapped = !(0.0..n as f64).contains(&u);
    let idx = (base as i64).rem_euclid(n as i64) as usize;
    (idx, frac, wrapped)
}
