use std::error::Error;
use std::fs::File;
use std::io::{BufReader, Write};

use lrk_core::field::{FieldGrid, FieldState};
use lrk_core::fractional::{eta_convergence_report, sigma_theta_report, solve_fractional};
use lrk_core::grid::{PhaseSpaceGrid, WignerField};
use lrk_core::kinetic::solve_fourier;
use lrk_core::levy::{estimate_field, estimate_point, JumpSampler};
use lrk_core::phase::compute_scaling;
use lrk_core::schrodinger::{kinetic_limit_experiment, KineticExperiment};
use lrk_core::series::{solve_series, solve_series_points};
use lrk_core::spectrum::{JumpMeasure, SpectrumModel};

use crate::config::{ExperimentConfig, SolverKind};
use crate::output::{num, Artifacts};

pub type CmdResult<T = ()> = Result<T, Box<dyn Error + Send + Sync>>;

/// Outcome of a command that checks budgets.
#[derive(Debug, PartialEq, Eq)]
pub enum Verdict {
    Done,
    BudgetFailed,
}

pub struct Inputs {
    pub jump: JumpMeasure,
    pub w0: WignerField,
    /// Pointwise initial data for the series solver.
    pub lambda: Box<dyn Fn(f64, f64) -> f64 + Sync>,
}

pub fn inputs(cfg: &ExperimentConfig) -> CmdResult<Inputs> {
    let jump = JumpMeasure::new(SpectrumModel::new(cfg.model.clone())?);
    let r = &cfg.run;
    if r.w0_file.is_empty() {
        let (x0, k0, sx, sk) = (r.w0_x0, r.w0_k0, r.w0_sx, r.w0_sk);
        let f = move |x: f64, k: f64| (-(x - x0).powi(2) / (2.0 * sx * sx) - (k - k0).powi(2) / (2.0 * sk * sk)).exp();
        let w0 = WignerField::from_fn(cfg.grid.phase_space(), f);
        Ok(Inputs { jump, w0, lambda: Box::new(f) })
    } else {
        let file = File::open(&r.w0_file).map_err(|e| format!("run.w0_file: {}: {e}", r.w0_file))?;
        let (w0, _) = WignerField::read_csv(BufReader::new(file))?;
        if !w0.grid().same_as(&cfg.grid.phase_space()) {
            return Err(format!("run.w0_file: grid of {} differs from the [grid] section", r.w0_file).into());
        }
        let w = w0.clone();
        Ok(Inputs { jump, w0, lambda: Box::new(move |x, k| w.interpolate(x, k).0) })
    }
}

pub fn constants(cfg: &ExperimentConfig, out: &mut Artifacts) -> CmdResult<Verdict> {
    let model = SpectrumModel::new(cfg.model.clone())?;
    let jump = JumpMeasure::new(model.clone());
    let scaling = compute_scaling(&cfg.model, cfg.run.gamma)?;
    let report = sigma_theta_report(&jump)?;
    let decor = model.classify_decorrelation();
    let rows: Vec<(&str, f64)> = vec![
        ("theta", model.theta()),
        ("sigma_amp", model.sigma_amp()),
        ("kappa0", scaling.kappa0),
        ("kappa_gamma", scaling.kappa_gamma),
        ("phase_exponent", scaling.phase_exponent()),
        ("d_const", scaling.d_const),
        ("omega_d", scaling.omega_d),
        ("rho_integral", scaling.rho_integral),
        ("c_theta", report.model.c_theta),
        ("c_theta_spread", report.spread),
        ("fitted_exponent", report.fitted_exponent),
        ("sphere_formula", report.sphere_formula),
        ("ratio_to_sphere_formula", report.ratio_to_sphere_formula),
        ("decorrelation_exponent", decor.fitted_exponent),
    ];
    for (name, v) in &rows {
        println!("{name:>24} = {v:.12}");
    }
    println!("{:>24} = {:?}", "decorrelation", decor.class);
    if report.sphere_formula_flagged {
        println!("note: c_theta differs from the sphere-integral formula by more than 5%");
    }
    out.write("constants.csv", |buf| {
        writeln!(buf, "name,value")?;
        for (name, v) in &rows {
            writeln!(buf, "{name},{}", num(*v))?;
        }
        Ok(())
    })?;
    Ok(Verdict::Done)
}

pub fn synth_field(cfg: &ExperimentConfig, out: &mut Artifacts) -> CmdResult<Verdict> {
    let model = SpectrumModel::new(cfg.model.clone())?;
    let grid = FieldGrid::centred(cfg.run.field_points, cfg.run.field_spacing)?;
    let mut state = FieldState::init(&model, grid, cfg.run.seed)?;
    let v0 = state.realize()?;
    state.advance(cfg.run.t)?;
    let vt = state.realize()?;
    out.write("field.csv", |buf| {
        writeln!(buf, "x,v_0,v_t")?;
        for (i, (a, b)) in v0.iter().zip(&vt).enumerate() {
            writeln!(buf, "{},{},{}", num(grid.x(i)), num(*a), num(*b))?;
        }
        Ok(())
    })?;
    out.write("field_covariance.csv", |buf| {
        writeln!(buf, "lag,covariance")?;
        for i in 0..=16 {
            let s = cfg.run.t * i as f64 / 16.0;
            writeln!(buf, "{},{}", num(s), num(state.discrete_covariance(s)))?;
        }
        Ok(())
    })?;
    Ok(Verdict::Done)
}

pub fn solve(cfg: &ExperimentConfig, kind: SolverKind, out: &mut Artifacts) -> CmdResult<Verdict> {
    let inp = inputs(cfg)?;
    let t = cfg.run.t;
    match kind {
        SolverKind::Fourier => {
            let w = solve_fourier(&inp.w0, &inp.jump, t)?;
            out.write("wigner_fourier.csv", |buf| w.write_csv(buf, None))?;
        }
        SolverKind::Mc => {
            let sampler = JumpSampler::new(&inp.jump, cfg.run.delta)?;
            let mc = estimate_field(&inp.w0, t, &sampler, cfg.run.n_paths, cfg.run.seed)?;
            if mc.wrap_warnings > 0 {
                eprintln!("warning: {} path contributions wrapped around the periodic box", mc.wrap_warnings);
            }
            out.write("wigner_mc.csv", |buf| mc.mean.write_csv(buf, Some(("stderr", &mc.stderr))))?;
        }
        SolverKind::Series => {
            let (w, res) = solve_series(
                inp.lambda.as_ref(),
                inp.w0.max_abs(),
                *inp.w0.grid(),
                &inp.jump,
                &cfg.solver.series(),
                t,
            )?;
            println!("Sigma_N = {:.6}, Poisson tail bound = {:.3e}", res.sigma_n, res.tail_bound);
            out.write("wigner_series.csv", |buf| w.write_csv(buf, None))?;
        }
        SolverKind::Fractional => {
            let report = sigma_theta_report(&inp.jump)?;
            let w = solve_fractional(&inp.w0, &report.model, t)?;
            println!("theta = {}, c_theta = {:.12}", report.model.theta, report.model.c_theta);
            out.write("wigner_fractional.csv", |buf| w.write_csv(buf, None))?;
        }
        SolverKind::Schrodinger => return schrodinger(cfg, out),
    }
    Ok(Verdict::Done)
}

pub fn eta_sweep(cfg: &ExperimentConfig, out: &mut Artifacts) -> CmdResult<Verdict> {
    let inp = inputs(cfg)?;
    let report = eta_convergence_report(&inp.w0, &inp.jump, cfg.run.t, &cfg.run.etas)?;
    for r in &report.rows {
        println!("eta = {:<8} relative L2 error = {:.6e}", r.eta, r.l2_error);
    }
    println!("strictly decreasing: {}", report.monotone);
    out.write("eta_sweep.csv", |buf| report.write_csv(buf))?;
    Ok(Verdict::Done)
}

pub fn schrodinger(cfg: &ExperimentConfig, out: &mut Artifacts) -> CmdResult<Verdict> {
    let r = &cfg.run;
    let exp = KineticExperiment {
        model: SpectrumModel::new(cfg.model.clone())?,
        epsilons: r.epsilons.clone(),
        gamma: r.gamma,
        t: r.t,
        n_realizations: r.n_realizations,
        mixture_size: r.mixture_size,
        base_width: r.base_width,
        mu_mean: r.mu_mean,
        mu_std: r.mu_std,
        n_y: r.n_y,
        seed: r.seed,
        frozen: r.frozen,
        reference_grid: cfg.grid.phase_space(),
    };
    let report = kinetic_limit_experiment(&exp)?;
    for e in &report.results {
        println!(
            "epsilon = {:<8} D = {:.6e}  steps = {}  substeps = {}",
            e.epsilon, e.d_epsilon, e.n_steps, e.substeps
        );
    }
    println!("D strictly decreasing: {}", report.distance_decreasing());
    out.write("schrodinger_observables.csv", |buf| report.write_csv(buf))?;
    for e in &report.results {
        out.write(&format!("wigner_schrodinger_eps{}.csv", e.epsilon), |buf| e.wigner.write_csv(buf, None))?;
    }
    Ok(Verdict::Done)
}

/// 20 grid nodes spread over the bulk of the box.
pub fn probe_nodes(grid: &PhaseSpaceGrid) -> Vec<(usize, usize)> {
    let snap = |frac: f64, l: f64, d: f64, n: usize| (((frac * l + l) / d).round() as usize).min(n - 1);
    let mut out = Vec::new();
    for fx in [-0.16, -0.08, 0.0, 0.06, 0.14] {
        for fk in [-0.06, 0.0, 0.04, 0.1] {
            out.push((
                snap(fx, grid.l_x, grid.dx(), grid.n_x),
                snap(fk, grid.l_k, grid.dk(), grid.n_k),
            ));
        }
    }
    out
}

struct Row {
    pair: &'static str,
    metric: &'static str,
    value: f64,
    budget: f64,
}

impl Row {
    fn pass(&self) -> bool {
        self.value < self.budget
    }
}

/// Agreement matrix between the solvers, with budgets from `[tolerances]`.
pub fn cross_validate(cfg: &ExperimentConfig, out: &mut Artifacts) -> CmdResult<Verdict> {
    let inp = inputs(cfg)?;
    let tol = &cfg.tolerances;
    let t = cfg.run.t;
    let grid = *inp.w0.grid();
    let scale = inp.w0.max_abs();
    let probes = probe_nodes(&grid);
    let mut rows = Vec::new();

    // Monte Carlo vs Fourier on the full equation.
    let fourier = solve_fourier(&inp.w0, &inp.jump, t)?;
    let sampler = JumpSampler::new(&inp.jump, cfg.run.delta)?;
    let mc = estimate_field(&inp.w0, t, &sampler, cfg.run.n_paths, cfg.run.seed)?;
    let diff = mc.mean.difference(&fourier)?;
    let rmse = (diff.values().iter().map(|v| v * v).sum::<f64>() / diff.values().len() as f64).sqrt();
    rows.push(Row { pair: "mc-fourier", metric: "rmse_over_sup_w0", value: rmse / scale, budget: tol.mc_rmse });
    let worst = probes
        .iter()
        .map(|&(i, j)| {
            let idx = grid.index(i, j);
            diff.values()[idx].abs() / (tol.sigmas * mc.stderr[idx]).max(tol.mc_point_floor * scale)
        })
        .fold(0.0, f64::max);
    rows.push(Row { pair: "mc-fourier", metric: "probe_error_over_budget", value: worst, budget: 1.0 });

    // Series vs Monte Carlo and Fourier on the truncated equation.
    let series_cfg = cfg.solver.series();
    let delta = 1.0 / series_cfg.cutoff_n as f64;
    let points: Vec<(f64, f64)> = probes.iter().map(|&(i, j)| (grid.x(i), grid.k(j))).collect();
    let series = solve_series_points(inp.lambda.as_ref(), scale, &points, &inp.jump, &series_cfg, t, None)?;
    let truncated = JumpSampler::new(&inp.jump, delta)?;
    let mut worst_mc = 0.0f64;
    for (n, &(x, k)) in points.iter().enumerate() {
        let seed = cfg.run.seed.wrapping_add(1 + n as u64);
        let est = estimate_point(&inp.w0, x, k, t, &truncated, cfg.run.n_paths, seed)?;
        let budget = tol.sigmas * est.stderr + series.tail_bound;
        worst_mc = worst_mc.max((est.mean - series.values[n]).abs() / budget);
    }
    rows.push(Row { pair: "series-mc", metric: "probe_error_over_budget", value: worst_mc, budget: 1.0 });
    let fourier_trunc = solve_fourier(&inp.w0, &inp.jump.clone().truncated(delta)?, t)?;
    let worst_fourier = probes
        .iter()
        .zip(&series.values)
        .map(|(&(i, j), v)| (fourier_trunc.at(i, j) - v).abs() / (series.tail_bound + tol.series_quadrature * scale))
        .fold(0.0, f64::max);
    rows.push(Row { pair: "series-fourier", metric: "probe_error_over_budget", value: worst_fourier, budget: 1.0 });

    // Fourier at shrinking η against the fractional limit.
    let eta = eta_convergence_report(&inp.w0, &inp.jump, t, &cfg.run.etas)?;
    let increases = eta.rows.windows(2).filter(|w| w[1].l2_error >= w[0].l2_error).count();
    rows.push(Row { pair: "fourier-fractional", metric: "eta_error_increases", value: increases as f64, budget: 0.5 });
    if let Some(last) = eta.rows.last() {
        rows.push(Row {
            pair: "fourier-fractional",
            metric: "l2_error_at_smallest_eta",
            value: last.l2_error,
            budget: eta.rows[0].l2_error,
        });
    }

    let mut failed = 0;
    for r in &rows {
        if !r.pass() {
            failed += 1;
        }
        println!(
            "{:<20} {:<26} {:>12.4e} budget {:>10.4e}  {}",
            r.pair,
            r.metric,
            r.value,
            r.budget,
            if r.pass() { "PASS" } else { "FAIL" }
        );
    }
    out.write("cross_validation.csv", |buf| {
        writeln!(buf, "pair,metric,value,budget,pass")?;
        for r in &rows {
            writeln!(buf, "{},{},{},{},{}", r.pair, r.metric, num(r.value), num(r.budget), r.pass())?;
        }
        Ok(())
    })?;
    Ok(if failed == 0 { Verdict::Done } else { Verdict::BudgetFailed })
}
