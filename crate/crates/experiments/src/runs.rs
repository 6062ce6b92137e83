//! Experiment runners: single trajectories, step-size sweeps, steady-state
//! tables and misalignment sweeps.

use odefilter_core::diagnostics::{credible_width, fit_log_log, global_error, misalignment};
use odefilter_core::filter::solve;
use odefilter_core::steady_state::{closed_form, orbit_limit, verify_order_bounds, BoundQuantity};
use odefilter_core::{problems, IVProblem, Trajectory};
use rayon::prelude::*;

use crate::config::{NoiseSpec, RunConfig};
use crate::HarnessError;

/// Iteration cap when iterating the covariance recursion to its limit.
pub const ORBIT_MAX_ITER: usize = 1_000_000;

/// Time horizon of the steady-state orbits when none is configured.
pub const DEFAULT_STEADY_HORIZON: f64 = 10.0;

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

/// Registry problem with the configured horizon applied.
pub fn build_problem(cfg: &RunConfig) -> Result<IVProblem<f64>, HarnessError> {
    let mut problem = problems::by_name(&cfg.problem)?;
    if let Some(t) = cfg.horizon {
        problem.horizon = t;
    }
    Ok(problem)
}

/// Solves the configured problem with the first `q`, noise spec and step.
pub fn run_solve(cfg: &RunConfig) -> Result<(IVProblem<f64>, Trajectory<f64>), HarnessError> {
    cfg.validate()?;
    let problem = build_problem(cfg)?;
    let h = match cfg.step_sizes().as_slice() {
        [h] => *h,
        [] => return Err(HarnessError::config("solve needs a step size (--h)")),
        _ => {
            return Err(HarnessError::config(
                "solve takes a single step size, not a grid",
            ))
        }
    };
    if cfg.q.len() != 1 || cfg.noise.len() != 1 {
        return Err(HarnessError::config(
            "solve takes a single q and a single noise spec",
        ));
    }
    let q = cfg.q[0];
    let prior = cfg.prior_spec(q)?;
    let traj = solve(&problem, &prior, h, cfg.noise[0].model(q), cfg.init_mode())?;
    Ok((problem, traj))
}

/// Header and rows of the per-step trajectory table.
pub fn trajectory_table(traj: &Trajectory<f64>) -> (Vec<String>, Vec<Vec<String>>) {
    let q = traj.initial.order();
    let d = traj.initial.dim();
    let mut header = vec!["t".to_string()];
    for i in 0..=q {
        for j in 0..d {
            header.push(format!("m{i}_{j}"));
        }
    }
    for j in 0..d {
        header.push(format!("std_{j}"));
    }
    header.push("residual_norm".into());
    let rows = traj
        .records
        .iter()
        .map(|rec| {
            let mut row = vec![fmt_f64(rec.t)];
            for i in 0..=q {
                for j in 0..d {
                    row.push(fmt_f64(rec.mean[(i, j)]));
                }
            }
            for c in &rec.cov {
                row.push(fmt_f64(c[(0, 0)].max(0.0).sqrt()));
            }
            let res = rec.residual.iter().map(|r| r * r).sum::<f64>().sqrt();
            row.push(fmt_f64(res));
            row
        })
        .collect();
    (header, rows)
}

/// One point of a work-precision sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct WpdRow {
    pub problem: String,
    /// `name=value` pairs of the problem constants, `;`-separated.
    pub params: String,
    pub sigma: f64,
    pub horizon: f64,
    pub x0: Vec<f64>,
    pub q: usize,
    pub p: f64,
    pub k_r: f64,
    pub h: f64,
    pub n_evals: usize,
    /// `‖m⁽⁰⁾(T) − x(T)‖`.
    pub final_error: f64,
    /// `max_n ‖m⁽⁰⁾(nh) − x(nh)‖`.
    pub max_error: f64,
    /// `‖√P₀₀(T)‖`.
    pub final_std: f64,
    /// `max_n ‖√P₀₀(nh)‖`.
    pub max_std: f64,
    /// `δ⁽¹⁾(T)`.
    pub delta1_final: f64,
    /// `max_n δ⁽¹⁾(nh)`.
    pub delta1_max: f64,
    pub diverged: bool,
}

pub const WPD_HEADER: [&str; 17] = [
    "problem",
    "params",
    "sigma",
    "horizon",
    "x0",
    "q",
    "p",
    "K_R",
    "h",
    "n_evals",
    "final_error",
    "max_error",
    "final_std",
    "max_std",
    "delta1_final",
    "delta1_max",
    "diverged",
];

impl WpdRow {
    pub fn record(&self) -> Vec<String> {
        vec![
            self.problem.clone(),
            self.params.clone(),
            fmt_f64(self.sigma),
            fmt_f64(self.horizon),
            self.x0
                .iter()
                .map(|x| fmt_f64(*x))
                .collect::<Vec<_>>()
                .join(";"),
            self.q.to_string(),
            fmt_f64(self.p),
            fmt_f64(self.k_r),
            fmt_f64(self.h),
            self.n_evals.to_string(),
            fmt_f64(self.final_error),
            fmt_f64(self.max_error),
            fmt_f64(self.final_std),
            fmt_f64(self.max_std),
            fmt_f64(self.delta1_final),
            fmt_f64(self.delta1_max),
            self.diverged.to_string(),
        ]
    }
}

#[derive(Debug, Clone)]
struct Job {
    config: usize,
    q: usize,
    noise: NoiseSpec,
    h: f64,
}

fn run_job(cfg: &RunConfig, problem: &IVProblem<f64>, job: &Job) -> Result<WpdRow, HarnessError> {
    let prior = cfg.prior_spec(job.q)?;
    let traj = solve(
        problem,
        &prior,
        job.h,
        job.noise.model(job.q),
        cfg.init_mode(),
    )?;
    let (p, k_r) = job.noise.columns(job.q);
    let mut row = WpdRow {
        problem: problem.name.clone(),
        params: problem
            .params
            .iter()
            .map(|(k, v)| format!("{k}={v:?}"))
            .collect::<Vec<_>>()
            .join(";"),
        sigma: cfg.sigma,
        horizon: problem.horizon,
        x0: problem.x0.clone(),
        q: job.q,
        p,
        k_r,
        h: job.h,
        n_evals: (problem.horizon / job.h).round() as usize,
        final_error: f64::NAN,
        max_error: f64::NAN,
        final_std: f64::NAN,
        max_std: f64::NAN,
        delta1_final: f64::NAN,
        delta1_max: f64::NAN,
        diverged: traj.diverged,
    };
    if traj.diverged {
        return Ok(row);
    }
    if problem.has_exact() {
        let err = global_error(&traj, problem)?;
        row.final_error = err.final_eps0();
        row.max_error = err.max_eps0;
    }
    let width = credible_width(&traj, None)?;
    row.final_std = *width.std_norm.last().expect("initial belief is included");
    row.max_std = width.max_std();
    let delta = misalignment(&traj, problem, 1)?;
    row.delta1_final = *delta.last().expect("initial belief is included");
    row.delta1_max = delta.iter().copied().fold(0.0, f64::max);
    Ok(row)
}

/// Runs every `(config, q, noise, h)` combination in parallel. Rows come
/// back in that nesting order regardless of scheduling.
pub fn run_sweep(configs: &[RunConfig], min_grid: usize) -> Result<Vec<WpdRow>, HarnessError> {
    let mut problems = Vec::with_capacity(configs.len());
    let mut jobs = Vec::new();
    for (c, cfg) in configs.iter().enumerate() {
        cfg.validate()?;
        let hs = cfg.step_sizes();
        if hs.len() < min_grid {
            return Err(HarnessError::config(format!(
                "a sweep needs an h-grid with at least {min_grid} values, got {}",
                hs.len()
            )));
        }
        problems.push(build_problem(cfg)?);
        for &q in &cfg.q {
            for &noise in &cfg.noise {
                for &h in &hs {
                    jobs.push(Job {
                        config: c,
                        q,
                        noise,
                        h,
                    });
                }
            }
        }
    }
    jobs.par_iter()
        .map(|job| run_job(&configs[job.config], &problems[job.config], job))
        .collect()
}

/// Empirical orders of one `(problem, σ, q, noise)` series.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesFit {
    pub problem: String,
    pub sigma: f64,
    pub q: usize,
    pub p: f64,
    pub k_r: f64,
    pub points: usize,
    pub error_slope: Option<f64>,
    pub std_slope: Option<f64>,
    pub delta_slope: Option<f64>,
}

impl SeriesFit {
    pub fn label(&self) -> String {
        let noise = if self.p.is_infinite() || self.k_r == 0.0 {
            "R=0".to_string()
        } else {
            format!("R={}h^{}", self.k_r, self.p)
        };
        format!(
            "{} sigma={} q={} {}",
            self.problem, self.sigma, self.q, noise
        )
    }
}

fn slope(rows: &[&WpdRow], value: impl Fn(&WpdRow) -> f64) -> Option<f64> {
    let (hs, vs): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| !r.diverged && value(r) > 0.0 && value(r).is_finite())
        .map(|r| (r.h, value(r)))
        .unzip();
    if hs.len() < 3 {
        return None;
    }
    fit_log_log(&hs, &vs).ok().map(|f| f.slope)
}

/// Least-squares log-log slopes against `h` of the final error, the
/// maximal standard deviation and the final misalignment, per series.
/// Series are consecutive runs sharing problem, σ, q and noise.
pub fn fit_series(rows: &[WpdRow]) -> Vec<SeriesFit> {
    let mut fits = Vec::new();
    let mut start = 0;
    while start < rows.len() {
        let r0 = &rows[start];
        let same = |r: &WpdRow| {
            r.problem == r0.problem
                && r.sigma == r0.sigma
                && r.q == r0.q
                && r.p.to_bits() == r0.p.to_bits()
                && r.k_r == r0.k_r
        };
        let end = start + rows[start..].iter().take_while(|r| same(r)).count();
        let group: Vec<&WpdRow> = rows[start..end].iter().collect();
        fits.push(SeriesFit {
            problem: r0.problem.clone(),
            sigma: r0.sigma,
            q: r0.q,
            p: r0.p,
            k_r: r0.k_r,
            points: group.len(),
            error_slope: slope(&group, |r| r.final_error),
            std_slope: slope(&group, |r| r.max_std),
            delta_slope: slope(&group, |r| r.delta1_final),
        });
        start = end;
    }
    fits
}

/// One `(h, quantity)` entry of the steady-state table.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyRow {
    pub h: f64,
    pub r: f64,
    pub quantity: BoundQuantity,
    pub closed_form: f64,
    pub orbit_limit: f64,
    pub discrepancy: f64,
    pub max_value: f64,
    pub predicted_exponent: f64,
    pub fitted_exponent: Option<f64>,
}

pub const STEADY_HEADER: [&str; 9] = [
    "h",
    "R",
    "quantity",
    "closed_form",
    "orbit_limit",
    "discrepancy",
    "max_value",
    "predicted_exponent",
    "fitted_exponent",
];

impl SteadyRow {
    pub fn record(&self) -> Vec<String> {
        vec![
            fmt_f64(self.h),
            fmt_f64(self.r),
            self.quantity.name().to_string(),
            fmt_f64(self.closed_form),
            fmt_f64(self.orbit_limit),
            fmt_f64(self.discrepancy),
            fmt_f64(self.max_value),
            fmt_f64(self.predicted_exponent),
            self.fitted_exponent
                .map_or_else(|| "exact_zero".into(), fmt_f64),
        ]
    }
}

/// Closed-form steady states against iterated limits and order-bound fits
/// for `q = 1`, using the configured grid, σ and first noise spec.
pub fn run_steady(cfg: &RunConfig) -> Result<Vec<SteadyRow>, HarnessError> {
    cfg.validate()?;
    let hs = cfg.step_sizes();
    let noise = cfg.noise[0];
    let (p, k_r) = noise.columns(1);
    let horizon = cfg.horizon.unwrap_or(DEFAULT_STEADY_HORIZON);
    let report = verify_order_bounds(&hs, cfg.sigma, p, k_r, horizon)?;
    let model = noise.model(1);
    let per_h: Vec<_> = hs
        .par_iter()
        .map(|&h| {
            let r = model.evaluate(h);
            let (limit, _) = orbit_limit(h, cfg.sigma, r, ORBIT_MAX_ITER)?;
            Ok((h, r, closed_form(h, cfg.sigma, r), limit))
        })
        .collect::<Result<_, HarnessError>>()?;
    let mut rows = Vec::new();
    for (k, (h, r, cf, limit)) in per_h.into_iter().enumerate() {
        for q in BoundQuantity::ALL {
            let fit = report.fit(q);
            let (a, b) = (q.steady_value(&cf), q.steady_value(&limit));
            rows.push(SteadyRow {
                h,
                r,
                quantity: q,
                closed_form: a,
                orbit_limit: b,
                discrepancy: (a - b).abs(),
                max_value: fit.max_values[k],
                predicted_exponent: fit.predicted,
                fitted_exponent: fit.fitted,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::HGrid;

    fn sweep_config(problem: &str, grid: &str) -> RunConfig {
        RunConfig {
            problem: problem.into(),
            h_grid: Some(grid.parse::<HGrid>().unwrap()),
            ..RunConfig::default()
        }
    }

    #[test]
    fn formatting_keeps_seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        assert_eq!(fmt_f64(f64::NAN), "nan");
        assert_eq!(
            fmt_f64(fmt_f64(1.0 / 3.0).parse().unwrap()),
            fmt_f64(1.0 / 3.0)
        );
    }

    #[test]
    fn riccati_single_step_table() {
        let cfg = RunConfig {
            problem: "riccati".into(),
            sigma: 10f64.sqrt(),
            h: Some(0.1),
            horizon: Some(0.1),
            ..RunConfig::default()
        };
        let (_, traj) = run_solve(&cfg).unwrap();
        let (header, rows) = trajectory_table(&traj);
        assert_eq!(header, ["t", "m0_0", "m1_0", "std_0", "residual_norm"]);
        assert_eq!(rows.len(), 1);
        let m0: f64 = rows[0][1].parse().unwrap();
        let m1: f64 = rows[0][2].parse().unwrap();
        assert!((m0 - 305141.0 / 320000.0).abs() < 1e-14);
        assert!((m1 + 6859.0 / 16000.0).abs() < 1e-14);
        let res: f64 = rows[0][4].parse().unwrap();
        assert!((res - 1141.0 / 16000.0).abs() < 1e-14);
    }

    #[test]
    fn solve_rejects_grids_and_lists() {
        let mut cfg = sweep_config("logistic", "0.1:2:4");
        assert!(run_solve(&cfg).is_err());
        cfg.h_grid = None;
        cfg.h = Some(0.1);
        cfg.q = vec![1, 2];
        assert!(run_solve(&cfg).is_err());
    }

    #[test]
    fn sweep_order_and_counts() {
        let mut cfg = sweep_config("logistic", "0.1:2:4");
        cfg.q = vec![1, 2];
        let rows = run_sweep(&[cfg], 4).unwrap();
        assert_eq!(rows.len(), 8);
        assert_eq!(
            rows.iter().map(|r| r.q).collect::<Vec<_>>(),
            [1, 1, 1, 1, 2, 2, 2, 2]
        );
        assert_eq!(
            rows.iter().map(|r| r.n_evals).take(4).collect::<Vec<_>>(),
            [15, 30, 60, 120]
        );
        assert!(rows.iter().all(|r| r.final_error > 0.0 && !r.diverged));
        let fits = fit_series(&rows);
        assert_eq!(fits.len(), 2);
        assert!(fits[0].error_slope.unwrap() > 1.5);
    }

    #[test]
    fn sweep_needs_enough_steps() {
        let cfg = sweep_config("logistic", "0.1:2:3");
        assert!(matches!(run_sweep(&[cfg], 4), Err(HarnessError::Config(_))));
    }

    #[test]
    fn constant_field_has_no_misalignment() {
        let rows = run_sweep(&[sweep_config("constant", "0.25:2:4")], 4).unwrap();
        assert!(rows
            .iter()
            .all(|r| r.delta1_final == 0.0 && r.final_error < 1e-14));
        assert_eq!(fit_series(&rows)[0].delta_slope, None);
    }

    #[test]
    fn steady_rows_at_zero_noise() {
        let cfg = RunConfig {
            h_grid: Some("0.5:2:8".parse().unwrap()),
            ..RunConfig::default()
        };
        let rows = run_steady(&cfg).unwrap();
        assert_eq!(rows.len(), 8 * 5);
        for row in &rows {
            assert!(row.discrepancy < 1e-10);
            match row.quantity {
                BoundQuantity::Beta0 => assert!((row.closed_form - row.h / 2.0).abs() < 1e-15),
                BoundQuantity::OneMinusBeta1 => assert_eq!(row.closed_form, 0.0),
                _ => {}
            }
        }
    }

    #[test]
    fn steady_predicted_exponents_at_p1() {
        let cfg = RunConfig {
            h_grid: Some("0.5:2:8".parse().unwrap()),
            noise: vec!["power:1:1".parse().unwrap()],
            ..RunConfig::default()
        };
        let rows = run_steady(&cfg).unwrap();
        let predicted: Vec<f64> = rows[..5].iter().map(|r| r.predicted_exponent).collect();
        assert_eq!(predicted, [1.0, 1.0, 2.0, 1.0, 0.0]);
        assert!(rows.iter().all(|r| r.discrepancy < 1e-10));
    }
}
