//! Experiment configuration: a sectioned TOML file, environment overrides
//! and validation that reports every violation at once.

use std::fmt;
use std::path::Path;

use lrk_core::grid::PhaseSpaceGrid;
use lrk_core::schrodinger::admissible_grid;
use lrk_core::series::{Orientation, SeriesConfig};
use lrk_core::spectrum::ModelParams;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

pub const ENV_PREFIX: &str = "LRK_";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub model: ModelParams,
    pub grid: GridSection,
    pub solver: SolverSection,
    pub run: RunSection,
    pub output: OutputSection,
    pub tolerances: Tolerances,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub n_x: usize,
    pub n_k: usize,
    #[serde(rename = "L_x")]
    pub l_x: f64,
    #[serde(rename = "L_k")]
    pub l_k: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        let g = PhaseSpaceGrid::default();
        Self { n_x: g.n_x, n_k: g.n_k, l_x: g.l_x, l_k: g.l_k }
    }
}

impl GridSection {
    pub fn phase_space(&self) -> PhaseSpaceGrid {
        PhaseSpaceGrid { n_x: self.n_x, n_k: self.n_k, l_x: self.l_x, l_k: self.l_k }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    #[default]
    Fourier,
    Mc,
    Series,
    Fractional,
    Schrodinger,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SeriesOrientation {
    /// Same transport direction as the Fourier and Monte Carlo solvers.
    #[default]
    Forward,
    Backward,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub kind: SolverKind,
    /// Series: jumps restricted to `|p| > 1/cutoff_n`.
    pub cutoff_n: u32,
    pub n_max: usize,
    pub time_order: usize,
    pub p_order: usize,
    pub p_panels: usize,
    pub orientation: SeriesOrientation,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SeriesConfig::default();
        Self {
            kind: SolverKind::default(),
            cutoff_n: s.cutoff_n,
            n_max: s.n_max,
            time_order: s.time_order,
            p_order: s.p_order,
            p_panels: s.p_panels,
            orientation: SeriesOrientation::default(),
        }
    }
}

impl SolverSection {
    pub fn series(&self) -> SeriesConfig {
        SeriesConfig {
            cutoff_n: self.cutoff_n,
            n_max: self.n_max,
            time_order: self.time_order,
            p_order: self.p_order,
            p_panels: self.p_panels,
            orientation: match self.orientation {
                SeriesOrientation::Forward => Orientation::Forward,
                SeriesOrientation::Backward => Orientation::Backward,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub t: f64,
    pub seed: u64,
    pub n_paths: usize,
    /// Small-jump cutoff of the Monte Carlo sampler.
    pub delta: f64,
    pub etas: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub gamma: f64,
    pub n_realizations: usize,
    pub mixture_size: usize,
    pub base_width: f64,
    pub mu_mean: f64,
    pub mu_std: f64,
    pub n_y: usize,
    pub frozen: bool,
    /// Initial Wigner field as CSV; empty selects the Gaussian below.
    pub w0_file: String,
    pub w0_x0: f64,
    pub w0_k0: f64,
    pub w0_sx: f64,
    pub w0_sk: f64,
    pub field_points: usize,
    pub field_spacing: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            t: 1.0,
            seed: 0,
            n_paths: 10_000,
            delta: 0.01,
            etas: vec![1.0, 0.5, 0.25, 0.125],
            epsilons: vec![0.5, 0.25, 0.125],
            gamma: 0.5,
            n_realizations: 64,
            mixture_size: 32,
            base_width: 2.0,
            mu_mean: -0.5,
            mu_std: 1.0,
            n_y: 128,
            frozen: false,
            w0_file: String::new(),
            w0_x0: 0.0,
            w0_k0: 0.5,
            w0_sx: 2.0,
            w0_sk: 1.5,
            field_points: 1024,
            field_spacing: 0.25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

/// Budgets of the cross-validation matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Monte Carlo vs Fourier RMSE, relative to `‖W₀‖∞`.
    pub mc_rmse: f64,
    /// Pointwise floor relative to `‖W₀‖∞`.
    pub mc_point_floor: f64,
    /// Standard errors allowed in pointwise comparisons.
    pub sigmas: f64,
    /// Series vs Fourier on the truncated equation, absolute, on top of the
    /// Poisson tail bound.
    pub series_quadrature: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            mc_rmse: 0.015,
            mc_point_floor: 0.01,
            sigmas: 3.0,
            series_quadrature: 1e-3,
        }
    }
}

/// Every problem found in a configuration.
#[derive(Debug)]
pub struct ConfigError(pub Vec<String>);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration ({} problem(s)):", self.0.len())?;
        for v in &self.0 {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

/// Reads `path` (or starts from the defaults when `None`), applies `LRK_`
/// overrides from `env` and validates the result.
pub fn parse_config(
    path: Option<&Path>,
    env: impl IntoIterator<Item = (String, String)>,
) -> Result<ExperimentConfig, ConfigError> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| ConfigError(vec![format!("{}: {e}", p.display())]))?,
        None => String::new(),
    };
    parse_str(&text, env)
}

pub fn parse_str(
    text: &str,
    env: impl IntoIterator<Item = (String, String)>,
) -> Result<ExperimentConfig, ConfigError> {
    let mut table: Table = text.parse().map_err(|e: toml::de::Error| ConfigError(vec![e.to_string()]))?;
    let canonical = canonical_table();
    let mut problems = unknown_keys(&table, &canonical);
    problems.extend(apply_env(&mut table, &canonical, env));
    if !problems.is_empty() {
        return Err(ConfigError(problems));
    }
    let cfg: ExperimentConfig = ExperimentConfig::deserialize(table).map_err(|e| ConfigError(vec![e.to_string()]))?;
    let problems = cfg.violations();
    if problems.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError(problems))
    }
}

fn canonical_table() -> Table {
    Table::try_from(ExperimentConfig::default()).expect("defaults serialize")
}

/// Dotted names of every recognised key, in file order.
#[cfg(test)]
fn canonical_keys() -> Vec<String> {
    let mut out = Vec::new();
    for (section, body) in canonical_table() {
        if let Value::Table(body) = body {
            out.extend(body.keys().map(|k| format!("{section}.{k}")));
        }
    }
    out
}

fn unknown_keys(table: &Table, canonical: &Table) -> Vec<String> {
    let mut out = Vec::new();
    for (section, body) in table {
        let Some(Value::Table(known)) = canonical.get(section) else {
            out.push(format!("{section}: unknown section"));
            continue;
        };
        match body {
            Value::Table(body) => {
                for key in body.keys().filter(|k| !known.contains_key(*k)) {
                    out.push(format!("{section}.{key}: unknown key"));
                }
            }
            _ => out.push(format!("{section}: expected a section")),
        }
    }
    out
}

/// `LRK_MODEL_ALPHA=0.7` (or `LRK_MODEL.ALPHA`) overrides `model.alpha`.
/// Values are read as TOML, falling back to a bare string.
fn apply_env(
    table: &mut Table,
    canonical: &Table,
    env: impl IntoIterator<Item = (String, String)>,
) -> Vec<String> {
    let mut problems = Vec::new();
    for (name, raw) in env {
        let Some(rest) = name.strip_prefix(ENV_PREFIX) else { continue };
        let target = canonical.iter().find_map(|(section, body)| {
            let Value::Table(body) = body else { return None };
            body.keys()
                .find(|key| {
                    let dotted = format!("{section}.{key}").to_uppercase();
                    rest == dotted || rest == dotted.replace('.', "_")
                })
                .map(|key| (section.clone(), key.clone()))
        });
        let Some((section, key)) = target else {
            problems.push(format!("{name}: does not name a configuration key"));
            continue;
        };
        let value = format!("v = {raw}")
            .parse::<Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or(Value::String(raw));
        let entry = table
            .entry(section)
            .or_insert_with(|| Value::Table(Table::new()));
        if let Value::Table(body) = entry {
            body.insert(key, value);
        }
    }
    problems
}

impl ExperimentConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut out: Vec<String> = self.model.violations().iter().map(ToString::to_string).collect();
        out.extend(self.grid.phase_space().violations().iter().map(ToString::to_string));
        out.extend(self.solver.series().violations().iter().map(ToString::to_string));

        let r = &self.run;
        let mut bad = |key: &str, ok: bool, msg: String| {
            if !ok {
                out.push(format!("run.{key}: {msg}"));
            }
        };
        bad("t", r.t >= 0.0 && r.t.is_finite(), format!("{} must be nonnegative", r.t));
        bad("n_paths", r.n_paths >= 2, format!("{} must be at least 2", r.n_paths));
        bad("delta", r.delta > 0.0 && r.delta.is_finite(), format!("{} must be positive", r.delta));
        bad(
            "etas",
            !r.etas.is_empty() && r.etas.iter().all(|e| *e > 0.0) && r.etas.windows(2).all(|w| w[1] < w[0]),
            "must be positive and strictly decreasing".into(),
        );
        bad(
            "gamma",
            r.gamma > 0.0 && r.gamma < 1.0,
            format!("{} is outside the open interval (0, 1)", r.gamma),
        );
        bad(
            "n_realizations",
            r.n_realizations >= 2,
            format!("{} must be at least 2", r.n_realizations),
        );
        bad("mixture_size", r.mixture_size >= 1, "must be positive".into());
        bad("base_width", r.base_width > 0.0, format!("{} must be positive", r.base_width));
        bad("mu_std", r.mu_std > 0.0, format!("{} must be positive", r.mu_std));
        bad(
            "n_y",
            r.n_y >= 4 && r.n_y.is_power_of_two(),
            format!("{} is not a power of two >= 4", r.n_y),
        );
        bad("w0_sx", r.w0_sx > 0.0, format!("{} must be positive", r.w0_sx));
        bad("w0_sk", r.w0_sk > 0.0, format!("{} must be positive", r.w0_sk));
        bad(
            "field_points",
            r.field_points >= 2 && r.field_points.is_power_of_two(),
            format!("{} is not a power of two >= 2", r.field_points),
        );
        bad(
            "field_spacing",
            r.field_spacing > 0.0,
            format!("{} must be positive", r.field_spacing),
        );
        if r.epsilons.is_empty() {
            out.push("run.epsilons: must not be empty".into());
        }
        for &eps in &r.epsilons {
            if let Err(e) = admissible_grid(eps) {
                out.push(e.to_string());
            }
        }

        let t = &self.tolerances;
        for (key, v) in [
            ("mc_rmse", t.mc_rmse),
            ("mc_point_floor", t.mc_point_floor),
            ("sigmas", t.sigmas),
            ("series_quadrature", t.series_quadrature),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                out.push(format!("tolerances.{key}: {v} must be positive"));
            }
        }
        out
    }

    #[cfg(test)]
    fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn none() -> Vec<(String, String)> {
        Vec::new()
    }

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(parse_str("", none()).unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn defaults_roundtrip() {
        let cfg = ExperimentConfig::default();
        assert_eq!(parse_str(&cfg.to_toml(), none()).unwrap(), cfg);
    }

    #[test]
    fn every_violation_is_reported() {
        let err = parse_str("[model]\nalpha = 0.4\n[run]\ngamma = 1.0\nn_y = 6\n", none()).unwrap_err();
        let all = err.0.join("\n");
        assert!(all.contains("model.alpha"), "{all}");
        assert!(all.contains("run.gamma") && all.contains("open interval (0, 1)"), "{all}");
        assert!(all.contains("run.n_y"), "{all}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_str("[model]\nalpah = 0.7\n[extra]\n", none()).unwrap_err();
        assert_eq!(err.0.len(), 2, "{:?}", err.0);
        assert!(err.0[0].contains("model.alpah") || err.0[1].contains("model.alpah"));
    }

    #[test]
    fn environment_overrides_the_file() {
        let env = vec![
            ("LRK_MODEL_ALPHA".to_string(), "0.7".to_string()),
            ("LRK_RUN.EPSILONS".to_string(), "[0.5]".to_string()),
            ("LRK_SOLVER_KIND".to_string(), "mc".to_string()),
            ("HOME".to_string(), "/root".to_string()),
        ];
        let cfg = parse_str("[model]\nalpha = 0.8\n", env).unwrap();
        assert_eq!(cfg.model.alpha, 0.7);
        assert_eq!(cfg.run.epsilons, vec![0.5]);
        assert_eq!(cfg.solver.kind, SolverKind::Mc);
        let err = parse_str("", vec![("LRK_MODEL_ALHPA".to_string(), "1".to_string())]).unwrap_err();
        assert!(err.0[0].contains("LRK_MODEL_ALHPA"));
    }

    #[test]
    fn canonical_keys_cover_all_sections() {
        let keys = canonical_keys();
        for k in ["model.alpha", "grid.L_x", "solver.kind", "run.epsilons", "output.dir", "tolerances.sigmas"] {
            assert!(keys.iter().any(|x| x == k), "{k} missing");
        }
    }
}
