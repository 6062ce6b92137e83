//! Steady states of the `q = 1` covariance and gain recursion under an IBM
//! prior.
//!
//! The covariance recursion does not depend on the data, so for fixed
//! `(h, σ, R)` it is a discrete algebraic Riccati iteration on 2×2
//! matrices. Its `P₁₁`, `P₀₁` and gain components converge to closed-form
//! fixed points; `P₀₀` keeps growing and has none.

use crate::diagnostics::fit_log_log;
use crate::error::{FilterError, Result};
use crate::filter::downdate;
use crate::linalg::Mat;
use crate::prior::ibm_transition;
use crate::scalar::Real;

/// Successive orbit changes below this are treated as converged.
pub const FIXED_POINT_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState<S> {
    pub h: S,
    pub sigma: S,
    pub r: S,
    pub p11_pred: S,
    pub p11: S,
    pub p01_pred: S,
    pub p01: S,
    pub beta0: S,
    pub beta1: S,
}

impl<S: Real> SteadyState<S> {
    pub fn values(&self) -> [S; 6] {
        [
            self.p11_pred,
            self.p11,
            self.p01_pred,
            self.p01,
            self.beta0,
            self.beta1,
        ]
    }

    /// Largest absolute difference over the six steady quantities.
    pub fn distance(&self, other: &SteadyState<S>) -> S {
        self.values()
            .iter()
            .zip(other.values().iter())
            .fold(S::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }

    /// A posterior covariance whose `P₁₁`, `P₀₁` equal the steady state.
    pub fn posterior_covariance(&self) -> Mat<S> {
        let p00 = if self.p11 > S::zero() {
            self.p01 * self.p01 / self.p11
        } else {
            S::zero()
        };
        Mat::from_rows(vec![vec![p00, self.p01], vec![self.p01, self.p11]])
    }
}

/// Closed-form steady state for step `h`, scale `sigma` and variance `r`.
pub fn closed_form<S: Real>(h: S, sigma: S, r: S) -> SteadyState<S> {
    let two = S::one() + S::one();
    let four = two + two;
    let s2h = sigma * sigma * h;
    let root = (four * sigma * sigma * r * h + s2h * s2h).sqrt();
    let sum = s2h + root;
    SteadyState {
        h,
        sigma,
        r,
        p11_pred: sum / two,
        p11: sum * r / (sum + two * r),
        p01_pred: (s2h * s2h + (two * r + s2h) * root + four * r * s2h) / (two * sum) * h,
        p01: r * root / sum * h,
        beta0: root / sum * h,
        beta1: sum / (sum + two * r),
    }
}

/// One point of the covariance orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitPoint<S> {
    pub cov_pred: Mat<S>,
    pub cov: Mat<S>,
    pub beta: [S; 2],
}

impl<S: Real> OrbitPoint<S> {
    pub fn as_steady_state(&self, h: S, sigma: S, r: S) -> SteadyState<S> {
        SteadyState {
            h,
            sigma,
            r,
            p11_pred: self.cov_pred[(1, 1)],
            p11: self.cov[(1, 1)],
            p01_pred: self.cov_pred[(0, 1)],
            p01: self.cov[(0, 1)],
            beta0: self.beta[0],
            beta1: self.beta[1],
        }
    }
}

/// Iterates the data-free covariance recursion of the `q = 1` filter
/// from the posterior covariance `p0`; this is exactly the covariance
/// sequence the solver produces.
pub fn dare_orbit<S: Real>(
    h: S,
    sigma: S,
    r: S,
    p0: &Mat<S>,
    n_steps: usize,
) -> Result<Vec<OrbitPoint<S>>> {
    if p0.rows() != 2 || p0.cols() != 2 {
        return Err(FilterError::DimensionMismatch {
            expected: 2,
            found: p0.rows(),
        });
    }
    let tm = ibm_transition(1, sigma, h)?;
    let mut cov = p0.clone();
    let mut orbit = Vec::with_capacity(n_steps);
    for _ in 0..n_steps {
        let cov_pred = (&cov.congruence(&tm.a) + &tm.q).symmetrized();
        let (beta, post) = downdate(&cov_pred, &r)?;
        orbit.push(OrbitPoint {
            cov_pred,
            cov: post.clone(),
            beta: [beta[0], beta[1]],
        });
        cov = post;
    }
    Ok(orbit)
}

/// Runs the orbit from `P = 0` until successive steady quantities change
/// by less than [`FIXED_POINT_TOL`]. Returns the limit and the number of
/// iterations used.
pub fn orbit_limit<S: Real>(
    h: S,
    sigma: S,
    r: S,
    max_iter: usize,
) -> Result<(SteadyState<S>, usize)> {
    let tm = ibm_transition(1, sigma, h)?;
    let tol = S::from_f64_lossy(FIXED_POINT_TOL);
    let mut cov = Mat::zeros(2, 2);
    let mut prev: Option<SteadyState<S>> = None;
    for it in 1..=max_iter {
        let cov_pred = (&cov.congruence(&tm.a) + &tm.q).symmetrized();
        let (beta, post) = downdate(&cov_pred, &r)?;
        let point = OrbitPoint {
            cov_pred,
            cov: post.clone(),
            beta: [beta[0], beta[1]],
        };
        let current = point.as_steady_state(h, sigma, r);
        if let Some(p) = prev {
            if current.distance(&p) < tol {
                return Ok((current, it));
            }
        }
        prev = Some(current);
        cov = post;
    }
    Err(FilterError::NonConvergence { terms: max_iter })
}

/// Pushes the closed-form steady state once through the recursion and
/// returns the largest change of the steady quantities.
pub fn fixed_point_residual<S: Real>(h: S, sigma: S, r: S) -> Result<S> {
    let ss = closed_form(h, sigma, r);
    let orbit = dare_orbit(h, sigma, r, &ss.posterior_covariance(), 1)?;
    Ok(orbit[0].as_steady_state(h, sigma, r).distance(&ss))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundQuantity {
    P11Pred,
    P11,
    P01,
    Beta0,
    OneMinusBeta1,
}

impl BoundQuantity {
    pub const ALL: [BoundQuantity; 5] = [
        BoundQuantity::P11Pred,
        BoundQuantity::P11,
        BoundQuantity::P01,
        BoundQuantity::Beta0,
        BoundQuantity::OneMinusBeta1,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            BoundQuantity::P11Pred => "P11_pred",
            BoundQuantity::P11 => "P11",
            BoundQuantity::P01 => "P01",
            BoundQuantity::Beta0 => "beta0",
            BoundQuantity::OneMinusBeta1 => "one_minus_beta1",
        }
    }

    /// Exponent of `h` in the sharp bound on the maximum over the run, for
    /// `R = K·h^p`.
    pub fn predicted_exponent<S: Real>(&self, p: S) -> S {
        let one = S::one();
        let two = one + one;
        match self {
            BoundQuantity::P11Pred => one.min((p + one) / two),
            BoundQuantity::P11 => p.max((p + one) / two),
            BoundQuantity::P01 => p + one,
            BoundQuantity::Beta0 => one,
            BoundQuantity::OneMinusBeta1 => (p - one).max(S::zero()),
        }
    }

    /// The quantity evaluated at a steady state.
    pub fn steady_value<S: Real>(&self, ss: &SteadyState<S>) -> S {
        match self {
            BoundQuantity::P11Pred => ss.p11_pred.abs(),
            BoundQuantity::P11 => ss.p11.abs(),
            BoundQuantity::P01 => ss.p01.abs(),
            BoundQuantity::Beta0 => ss.beta0.abs(),
            BoundQuantity::OneMinusBeta1 => (S::one() - ss.beta1).abs(),
        }
    }

    fn extract<S: Real>(&self, point: &OrbitPoint<S>) -> S {
        match self {
            BoundQuantity::P11Pred => point.cov_pred[(1, 1)].abs(),
            BoundQuantity::P11 => point.cov[(1, 1)].abs(),
            BoundQuantity::P01 => point.cov[(0, 1)].abs(),
            BoundQuantity::Beta0 => point.beta[0].abs(),
            BoundQuantity::OneMinusBeta1 => (S::one() - point.beta[1]).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundFit<S> {
    pub quantity: BoundQuantity,
    /// Maximum over the run, one per grid value.
    pub max_values: Vec<S>,
    pub predicted: S,
    /// `None` when every maximum is exactly zero.
    pub fitted: Option<S>,
}

impl<S: Real> BoundFit<S> {
    pub fn exact_zero(&self) -> bool {
        self.fitted.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderBoundReport<S> {
    pub h_grid: Vec<S>,
    pub p: S,
    pub k_r: S,
    pub sigma: S,
    pub fits: Vec<BoundFit<S>>,
}

impl<S: Real> OrderBoundReport<S> {
    pub fn fit(&self, q: BoundQuantity) -> &BoundFit<S> {
        self.fits
            .iter()
            .find(|f| f.quantity == q)
            .expect("all quantities fitted")
    }
}

/// Runs the covariance orbit from `P = 0` for `⌈T/h⌉` steps at every grid
/// value, takes the maximum of each bounded quantity over the run and fits
/// its log-log slope against `h`, leaving out the largest step.
pub fn verify_order_bounds<S: Real>(
    h_grid: &[S],
    sigma: S,
    p: S,
    k_r: S,
    horizon: S,
) -> Result<OrderBoundReport<S>> {
    if h_grid.len() < 4 {
        return Err(FilterError::InsufficientGrid(format!(
            "need at least 4 step sizes, got {}",
            h_grid.len()
        )));
    }
    if h_grid.windows(2).any(|w| !(w[1] < w[0])) || h_grid.iter().any(|h| !(*h > S::zero())) {
        return Err(FilterError::InsufficientGrid(
            "step sizes must be positive and decreasing".into(),
        ));
    }
    let span = h_grid[0] / h_grid[h_grid.len() - 1];
    if span < S::from_f64_lossy(100.0 * (1.0 - 1e-12)) {
        return Err(FilterError::InsufficientGrid(
            "grid must span at least two decades".into(),
        ));
    }

    let mut maxima = vec![Vec::with_capacity(h_grid.len()); BoundQuantity::ALL.len()];
    for &h in h_grid {
        let r = if p.is_infinite() {
            S::zero()
        } else {
            k_r * h.powf(p)
        };
        let steps = (horizon / h).ceil().to_usize().unwrap_or(1).max(1);
        let orbit = dare_orbit(h, sigma, r, &Mat::zeros(2, 2), steps)?;
        for (k, q) in BoundQuantity::ALL.iter().enumerate() {
            let m = orbit.iter().map(|pt| q.extract(pt)).fold(S::zero(), S::max);
            maxima[k].push(m);
        }
    }

    let fits = BoundQuantity::ALL
        .iter()
        .zip(maxima)
        .map(|(q, max_values)| {
            let fitted = if max_values.iter().all(|v| v.is_zero()) {
                None
            } else {
                Some(fit_log_log(&h_grid[1..], &max_values[1..])?.slope)
            };
            Ok(BoundFit {
                quantity: *q,
                max_values,
                predicted: q.predicted_exponent(p),
                fitted,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(OrderBoundReport {
        h_grid: h_grid.to_vec(),
        p,
        k_r,
        sigma,
        fits,
    })
}
