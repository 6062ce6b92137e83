//! Error, misalignment and calibration metrics over trajectories, and
//! empirical convergence orders from log-log least squares.

use crate::error::{FilterError, Result};
use crate::filter::Trajectory;
use crate::linalg::Mat;
use crate::problems::IVProblem;
use crate::scalar::Real;

fn norm<S: Real>(v: &[S]) -> S {
    v.iter().fold(S::zero(), |acc, x| acc + *x * *x).sqrt()
}

/// Errors `ε⁽ⁱ⁾(nh) = m⁽ⁱ⁾(nh) − x⁽ⁱ⁾(nh)` along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSeries<S> {
    pub times: Vec<S>,
    /// One `(q+1)×d` error matrix per time.
    pub eps: Vec<Mat<S>>,
    /// `max_n ‖ε⁽⁰⁾(nh)‖`.
    pub max_eps0: S,
    /// `|||ε(nh)|||_h` per time.
    pub h_norm_series: Vec<S>,
}

impl<S: Real> ErrorSeries<S> {
    pub fn final_eps0(&self) -> S {
        self.eps.last().map_or(S::zero(), |e| norm(&e.row(0)))
    }

    pub fn eps0_series(&self) -> Vec<S> {
        self.eps.iter().map(|e| norm(&e.row(0))).collect()
    }
}

/// `Σᵢ hⁱ ‖row i‖`.
pub fn h_norm<S: Real>(eps: &Mat<S>, h: S) -> S {
    let mut weight = S::one();
    let mut total = S::zero();
    for i in 0..eps.rows() {
        total += weight * norm(&eps.row(i));
        weight *= h;
    }
    total
}

/// Compares every belief of `traj` (initial one included) against the
/// closed-form solution and its total derivatives.
pub fn global_error<S: Real>(
    traj: &Trajectory<S>,
    problem: &IVProblem<S>,
) -> Result<ErrorSeries<S>> {
    if !problem.has_exact() {
        return Err(FilterError::MissingExact);
    }
    let h = traj.config.h;
    let mut times = Vec::with_capacity(traj.records.len() + 1);
    let mut eps = Vec::with_capacity(traj.records.len() + 1);
    let mut h_norms = Vec::with_capacity(traj.records.len() + 1);
    let mut max_eps0 = S::zero();
    for belief in traj.beliefs() {
        let q = belief.order();
        let mut e = belief.mean.clone();
        for i in 0..=q {
            let exact = problem.exact_derivative(i, belief.t)?;
            for (j, x) in exact.into_iter().enumerate() {
                e[(i, j)] -= x;
            }
        }
        max_eps0 = max_eps0.max(norm(&e.row(0)));
        h_norms.push(h_norm(&e, h));
        times.push(belief.t);
        eps.push(e);
    }
    Ok(ErrorSeries {
        times,
        eps,
        max_eps0,
        h_norm_series: h_norms,
    })
}

/// State misalignment `δ⁽ⁱ⁾(nh) = ‖m⁽ⁱ⁾(nh) − g⁽ⁱ⁾(m⁽⁰⁾(nh))‖`, initial
/// belief included.
pub fn misalignment<S: Real>(
    traj: &Trajectory<S>,
    problem: &IVProblem<S>,
    i: usize,
) -> Result<Vec<S>> {
    traj.beliefs()
        .map(|b| {
            if i > b.order() {
                return Err(FilterError::InvalidArgument(format!(
                    "derivative {i} exceeds the prior order {}",
                    b.order()
                )));
            }
            let implied = problem.total_derivative(i, &b.derivative(0))?;
            let diff: Vec<S> = b
                .derivative(i)
                .iter()
                .zip(&implied)
                .map(|(m, g)| *m - *g)
                .collect();
            Ok(norm(&diff))
        })
        .collect()
}

/// Posterior standard deviations of the solution estimate and, when a
/// closed form is available, the ratio of the true error to them.
#[derive(Debug, Clone, PartialEq)]
pub struct CredibleSeries<S> {
    pub times: Vec<S>,
    /// `√P₀₀` per time, one entry per dimension.
    pub std: Vec<Vec<S>>,
    /// Euclidean norm of the per-dimension standard deviations.
    pub std_norm: Vec<S>,
    /// `‖ε⁽⁰⁾‖ / ‖√P₀₀‖`, with `0/0` reported as 1.
    pub ratios: Option<Vec<S>>,
}

impl<S: Real> CredibleSeries<S> {
    pub fn max_std(&self) -> S {
        self.std_norm.iter().copied().fold(S::zero(), S::max)
    }

    /// Half-width of the two-sigma credible interval at each time.
    pub fn two_sigma_width(&self) -> Vec<S> {
        let two = S::one() + S::one();
        self.std_norm.iter().map(|s| two * *s).collect()
    }
}

pub fn credible_width<S: Real>(
    traj: &Trajectory<S>,
    problem: Option<&IVProblem<S>>,
) -> Result<CredibleSeries<S>> {
    let mut times = Vec::new();
    let mut std = Vec::new();
    let mut std_norm = Vec::new();
    for b in traj.beliefs() {
        let s: Vec<S> = b
            .solution_variance()
            .into_iter()
            .map(|v| v.max(S::zero()).sqrt())
            .collect();
        std_norm.push(norm(&s));
        std.push(s);
        times.push(b.t);
    }
    let ratios = match problem {
        None => None,
        Some(p) => {
            let errors = global_error(traj, p)?.eps0_series();
            Some(
                errors
                    .into_iter()
                    .zip(&std_norm)
                    .map(|(e, s)| {
                        if e.is_zero() && s.is_zero() {
                            S::one()
                        } else {
                            e / *s
                        }
                    })
                    .collect(),
            )
        }
    };
    Ok(CredibleSeries {
        times,
        std,
        std_norm,
        ratios,
    })
}

/// Least-squares line through `(log h, log error)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderFit<S> {
    pub h_values: Vec<S>,
    pub errors: Vec<S>,
    pub slope: S,
    pub intercept: S,
    pub r_squared: S,
}

/// Log-log least squares without any range checks beyond positivity.
pub fn fit_log_log<S: Real>(h_values: &[S], values: &[S]) -> Result<OrderFit<S>> {
    if h_values.len() != values.len() {
        return Err(FilterError::DimensionMismatch {
            expected: h_values.len(),
            found: values.len(),
        });
    }
    if h_values.len() < 2 {
        return Err(FilterError::DegenerateFit(
            "need at least two points".into(),
        ));
    }
    if values
        .iter()
        .chain(h_values)
        .any(|v| !(*v > S::zero()) || !v.is_finite())
    {
        return Err(FilterError::DegenerateFit(
            "values must be positive and finite".into(),
        ));
    }
    let xs: Vec<S> = h_values.iter().map(|h| h.ln()).collect();
    let ys: Vec<S> = values.iter().map(|e| e.ln()).collect();
    let n = S::from_count(xs.len());
    let mx = xs.iter().copied().fold(S::zero(), |a, b| a + b) / n;
    let my = ys.iter().copied().fold(S::zero(), |a, b| a + b) / n;
    let (mut sxx, mut sxy, mut syy) = (S::zero(), S::zero(), S::zero());
    for (x, y) in xs.iter().zip(&ys) {
        let (dx, dy) = (*x - mx, *y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx.is_zero() {
        return Err(FilterError::DegenerateFit(
            "all step sizes are equal".into(),
        ));
    }
    let slope = sxy / sxx;
    let r_squared = if syy.is_zero() {
        S::one()
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok(OrderFit {
        h_values: h_values.to_vec(),
        errors: values.to_vec(),
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// Empirical convergence order: drops the `drop_largest` largest step
/// sizes, then fits `log error = slope · log h + intercept`.
pub fn fit_order<S: Real>(
    h_values: &[S],
    errors: &[S],
    drop_largest: usize,
) -> Result<OrderFit<S>> {
    if h_values.len() != errors.len() {
        return Err(FilterError::DimensionMismatch {
            expected: h_values.len(),
            found: errors.len(),
        });
    }
    let mut pairs: Vec<(S, S)> = h_values
        .iter()
        .copied()
        .zip(errors.iter().copied())
        .collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    let kept = &pairs[drop_largest.min(pairs.len())..];
    if kept.len() < 3 {
        return Err(FilterError::DegenerateFit(format!(
            "need at least 3 points after dropping {drop_largest}, have {}",
            kept.len()
        )));
    }
    if kept.iter().all(|(_, e)| e.is_zero()) {
        return Err(FilterError::ExactZero);
    }
    let (hs, es): (Vec<S>, Vec<S>) = kept.iter().copied().unzip();
    let max = es.iter().copied().fold(S::zero(), S::max);
    let min = es.iter().copied().fold(S::infinity(), S::min);
    if min > S::zero() && max / min < S::from_f64_lossy(10.0) {
        return Err(FilterError::DegenerateFit(
            "errors span less than one decade".into(),
        ));
    }
    fit_log_log(&hs, &es)
}
