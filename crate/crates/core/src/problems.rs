//! Test initial value problems with closed-form solutions and analytic
//! total derivatives, plus a classical RK4 reference integrator.
//!
//! Total derivatives follow `g⁽⁰⁾ = id`, `g⁽¹⁾ = f`,
//! `g⁽ⁱ⁾ = ∇g⁽ⁱ⁻¹⁾ · f`, so that `x⁽ⁱ⁾(t) = g⁽ⁱ⁾(x(t))` along the flow.

use std::fmt;
use std::sync::Arc;

use crate::error::{FilterError, Result};
use crate::linalg::Mat;
use crate::scalar::{Real, Scalar};

/// Highest total derivative supplied by the packaged problems.
pub const MAX_DERIVATIVE_ORDER: usize = 8;

pub type VectorField<S> = Arc<dyn Fn(&[S]) -> Vec<S> + Send + Sync>;
pub type Solution<S> = Arc<dyn Fn(S) -> Vec<S> + Send + Sync>;

/// Autonomous IVP `ẋ = f(x)`, `x(0) = x0` on `[0, horizon]`.
#[derive(Clone)]
pub struct IVProblem<S> {
    pub name: String,
    pub x0: Vec<S>,
    pub horizon: S,
    /// Named constants of the problem, for reporting.
    pub params: Vec<(String, f64)>,
    field: VectorField<S>,
    /// `derivatives[k]` is `g⁽ᵏ⁺²⁾`; `g⁽¹⁾` is the field itself.
    derivatives: Vec<VectorField<S>>,
    exact: Option<Solution<S>>,
}

impl<S: Scalar> fmt::Debug for IVProblem<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IVProblem")
            .field("name", &self.name)
            .field("x0", &self.x0)
            .field("horizon", &self.horizon)
            .field("max_derivative_order", &self.max_derivative_order())
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl<S: Scalar> IVProblem<S> {
    pub fn new(
        name: impl Into<String>,
        x0: Vec<S>,
        horizon: S,
        field: impl Fn(&[S]) -> Vec<S> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            x0,
            horizon,
            params: Vec::new(),
            field: Arc::new(field),
            derivatives: Vec::new(),
            exact: None,
        }
    }

    /// Appends the next total derivative `g⁽ⁱ⁾`, starting at `i = 2`.
    pub fn with_derivative(mut self, g: impl Fn(&[S]) -> Vec<S> + Send + Sync + 'static) -> Self {
        self.derivatives.push(Arc::new(g));
        self
    }

    pub fn with_exact(mut self, exact: impl Fn(S) -> Vec<S> + Send + Sync + 'static) -> Self {
        self.exact = Some(Arc::new(exact));
        self
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.push((name.to_string(), value));
        self
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    pub fn field(&self, x: &[S]) -> Vec<S> {
        (self.field)(x)
    }

    pub fn max_derivative_order(&self) -> usize {
        1 + self.derivatives.len()
    }

    /// `g⁽ⁱ⁾(x)`.
    pub fn total_derivative(&self, order: usize, x: &[S]) -> Result<Vec<S>> {
        match order {
            0 => Ok(x.to_vec()),
            1 => Ok(self.field(x)),
            i => self
                .derivatives
                .get(i - 2)
                .map(|g| g(x))
                .ok_or(FilterError::MissingDerivative { order: i }),
        }
    }

    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn exact(&self, t: S) -> Result<Vec<S>> {
        self.exact
            .as_ref()
            .map(|e| e(t))
            .ok_or(FilterError::MissingExact)
    }

    /// `x⁽ⁱ⁾(t) = g⁽ⁱ⁾(x(t))` along the exact solution.
    pub fn exact_derivative(&self, order: usize, t: S) -> Result<Vec<S>> {
        let x = self.exact(t)?;
        self.total_derivative(order, &x)
    }
}

impl<S: Real> IVProblem<S> {
    /// Checks the closed-form solution against the field by central
    /// differences on a uniform probe grid, and `g⁽¹⁾ ≡ f` on the same
    /// probes. Returns the largest derivative residual.
    pub fn validate_exact(&self, probes: usize) -> Result<S> {
        let exact = self.exact.as_ref().ok_or(FilterError::MissingExact)?;
        let step = S::from_f64_lossy(1e-5);
        let two = S::one() + S::one();
        let tol = S::from_f64_lossy(1e-8);
        let mut worst = S::zero();
        for k in 0..probes {
            let t = self.horizon * S::from_count(k + 1) / S::from_count(probes + 2);
            let (xp, xm, x) = (exact(t + step), exact(t - step), exact(t));
            let f = self.field(&x);
            let g1 = self.total_derivative(1, &x)?;
            for j in 0..x.len() {
                let fd = (xp[j] - xm[j]) / (two * step);
                let scale = S::one().max(f[j].abs());
                worst = worst.max((fd - f[j]).abs() / scale);
                if g1[j] != f[j] {
                    return Err(FilterError::InvalidArgument(format!(
                        "{}: g1 differs from f at t = {}",
                        self.name,
                        t.to_f64_lossy()
                    )));
                }
            }
        }
        if worst > tol {
            return Err(FilterError::InvalidArgument(format!(
                "{}: closed form violates the ODE (residual {:e})",
                self.name,
                worst.to_f64_lossy()
            )));
        }
        Ok(worst)
    }
}

/// Dense univariate polynomial, coefficients in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial<S> {
    coeffs: Vec<S>,
}

impl<S: Scalar> Polynomial<S> {
    pub fn new(coeffs: Vec<S>) -> Self {
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn eval(&self, x: &S) -> S {
        self.coeffs
            .iter()
            .rev()
            .fold(S::zero(), |acc, c| acc * x.clone() + c.clone())
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c.clone() * S::from_count(k))
            .collect();
        Self { coeffs }
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Self { coeffs: Vec::new() };
        }
        let mut coeffs = vec![S::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a.clone() * b.clone();
            }
        }
        Self { coeffs }
    }

    /// `[g⁽¹⁾, …, g⁽ⁿ⁾]` for the scalar field `self` via `g⁽ⁱ⁾ = g⁽ⁱ⁻¹⁾′ · f`.
    pub fn total_derivatives(&self, n: usize) -> Vec<Self> {
        let mut out: Vec<Self> = Vec::with_capacity(n);
        if n == 0 {
            return out;
        }
        out.push(self.clone());
        for _ in 1..n {
            let next = out.last().expect("nonempty").derivative().mul(self);
            out.push(next);
        }
        out
    }
}

fn scalar_polynomial_problem<S: Scalar>(
    name: &str,
    x0: S,
    horizon: S,
    field: Polynomial<S>,
) -> IVProblem<S> {
    let mut derivs = field.total_derivatives(MAX_DERIVATIVE_ORDER).into_iter();
    let f = derivs.next().expect("first derivative");
    let mut problem = IVProblem::new(name, vec![x0], horizon, move |x: &[S]| vec![f.eval(&x[0])]);
    for g in derivs {
        problem = problem.with_derivative(move |x: &[S]| vec![g.eval(&x[0])]);
    }
    problem
}

/// Logistic growth `ẋ = λ₀x(1 − x/λ₁)` with `(λ₀, λ₁) = (3, 1)`,
/// `x(0) = 0.1` on `[0, 1.5]`.
pub fn logistic<S: Real>() -> IVProblem<S> {
    let (l0, l1, x0) = (3.0, 1.0, 0.1);
    let field = Polynomial::new(vec![
        S::zero(),
        S::from_f64_lossy(l0),
        S::from_f64_lossy(-l0 / l1),
    ]);
    let (sl0, sl1, sx0) = (
        S::from_f64_lossy(l0),
        S::from_f64_lossy(l1),
        S::from_f64_lossy(x0),
    );
    scalar_polynomial_problem("logistic", sx0, S::from_f64_lossy(1.5), field)
        .with_exact(move |t: S| {
            let e = (sl0 * t).exp();
            vec![sl1 * sx0 * e / (sl1 + sx0 * (e - S::one()))]
        })
        .with_param("lambda0", l0)
        .with_param("lambda1", l1)
}

/// Rotation `ẋ = Λx` with `Λ = [[0, −π], [π, 0]]`, `x(0) = (0, 1)` on
/// `[0, 10]`; one revolution every two time units.
pub fn linear_rotation<S: Real>() -> IVProblem<S> {
    let pi = S::from_f64_lossy(std::f64::consts::PI);
    let lambda = Mat::from_rows(vec![vec![S::zero(), -pi], vec![pi, S::zero()]]);
    let mut powers = vec![lambda.clone()];
    for _ in 1..MAX_DERIVATIVE_ORDER {
        let next = &lambda * powers.last().expect("nonempty");
        powers.push(next);
    }
    let mut powers = powers.into_iter();
    let first = powers.next().expect("Λ");
    let mut problem = IVProblem::new(
        "linear",
        vec![S::zero(), S::one()],
        S::from_f64_lossy(10.0),
        move |x: &[S]| first.matvec(x),
    );
    for p in powers {
        problem = problem.with_derivative(move |x: &[S]| p.matvec(x));
    }
    problem
        .with_exact(move |t: S| vec![-(pi * t).sin(), (pi * t).cos()])
        .with_param("omega", std::f64::consts::PI)
}

/// `ẋ = −x³/2`, `x(0) = 1` on `[0, 1]`, without the closed-form solution
/// so that it can be run in exact arithmetic.
pub fn riccati_polynomial<S: Scalar>() -> IVProblem<S> {
    let half = S::one() / (S::one() + S::one());
    let field = Polynomial::new(vec![S::zero(), S::zero(), S::zero(), -half]);
    scalar_polynomial_problem("riccati", S::one(), S::one(), field)
}

/// `ẋ = −x³/2`, `x(0) = 1` on `[0, 1]`; solution `(t + 1)^{−1/2}`.
pub fn riccati<S: Real>() -> IVProblem<S> {
    riccati_polynomial().with_exact(|t: S| vec![S::one() / (t + S::one()).sqrt()])
}

/// Constant field `ẋ = c`; solved exactly by the filter.
pub fn constant<S: Scalar>(c: Vec<S>, x0: Vec<S>, horizon: S) -> IVProblem<S> {
    assert_eq!(c.len(), x0.len());
    let d = c.len();
    let (fc, ec, ex0) = (c.clone(), c, x0.clone());
    let mut problem = IVProblem::new("constant", x0, horizon, move |_x: &[S]| fc.clone());
    for _ in 2..=MAX_DERIVATIVE_ORDER {
        problem = problem.with_derivative(move |_x: &[S]| vec![S::zero(); d]);
    }
    problem.with_exact(move |t: S| {
        ex0.iter()
            .zip(&ec)
            .map(|(x, c)| x.clone() + c.clone() * t.clone())
            .collect()
    })
}

/// Names accepted by [`by_name`].
pub const PROBLEM_NAMES: [&str; 4] = ["logistic", "linear", "riccati", "constant"];

/// Problem registry. Closed forms are validated on lookup.
pub fn by_name(name: &str) -> Result<IVProblem<f64>> {
    let problem = match name {
        "logistic" => logistic(),
        "linear" => linear_rotation(),
        "riccati" => riccati(),
        "constant" => constant(vec![1.0], vec![0.0], 1.0),
        other => {
            return Err(FilterError::InvalidArgument(format!(
                "unknown problem '{other}' (known: {})",
                PROBLEM_NAMES.join(", ")
            )))
        }
    };
    problem.validate_exact(100)?;
    Ok(problem)
}

/// Fixed-step RK4 solution with cubic Hermite interpolation.
#[derive(Debug, Clone)]
pub struct ReferenceSolution<S> {
    pub h: S,
    pub states: Vec<Vec<S>>,
    pub slopes: Vec<Vec<S>>,
    /// Richardson estimate of the nodal error, from a rerun at `h/2`.
    pub error_estimate: S,
}

impl<S: Real> ReferenceSolution<S> {
    pub fn final_state(&self) -> &[S] {
        self.states.last().expect("at least the initial node")
    }

    pub fn interpolate(&self, t: S) -> Vec<S> {
        let n = self.states.len() - 1;
        let pos = (t / self.h).max(S::zero());
        let k = pos.floor().to_usize().unwrap_or(0).min(n.saturating_sub(1));
        if n == 0 {
            return self.states[0].clone();
        }
        let s = pos - S::from_count(k);
        let (s2, s3) = (s * s, s * s * s);
        let two = S::one() + S::one();
        let three = two + S::one();
        let h00 = two * s3 - three * s2 + S::one();
        let h10 = s3 - two * s2 + s;
        let h01 = -two * s3 + three * s2;
        let h11 = s3 - s2;
        (0..self.states[k].len())
            .map(|j| {
                h00 * self.states[k][j]
                    + h10 * self.h * self.slopes[k][j]
                    + h01 * self.states[k + 1][j]
                    + h11 * self.h * self.slopes[k + 1][j]
            })
            .collect()
    }
}

fn rk4_step<S: Real>(problem: &IVProblem<S>, x: &[S], h: S) -> Vec<S> {
    let two = S::one() + S::one();
    let six = S::from_count(6);
    let axpy =
        |a: &[S], b: &[S], s: S| -> Vec<S> { a.iter().zip(b).map(|(a, b)| *a + s * *b).collect() };
    let k1 = problem.field(x);
    let k2 = problem.field(&axpy(x, &k1, h / two));
    let k3 = problem.field(&axpy(x, &k2, h / two));
    let k4 = problem.field(&axpy(x, &k3, h));
    (0..x.len())
        .map(|j| x[j] + h / six * (k1[j] + two * k2[j] + two * k3[j] + k4[j]))
        .collect()
}

pub(crate) fn mesh_steps<S: Real>(horizon: S, h: S) -> Result<usize> {
    let ratio = horizon / h;
    let n = ratio.round();
    if (ratio - n).abs() > S::from_f64_lossy(1e-9) || n < S::one() {
        return Err(FilterError::NonIntegerMesh {
            horizon: horizon.to_f64_lossy(),
            step: h.to_f64_lossy(),
        });
    }
    Ok(n.to_usize().expect("positive step count"))
}

/// Classical RK4 at `h_ref`, self-checked against a run at `h_ref / 2`.
/// Fails unless the Richardson estimate of the nodal error is below `1e-8`.
pub fn reference_solve<S: Real>(problem: &IVProblem<S>, h_ref: S) -> Result<ReferenceSolution<S>> {
    if h_ref <= S::zero() || h_ref > S::from_f64_lossy(1e-4) * problem.horizon {
        return Err(FilterError::InvalidArgument(
            "h_ref must lie in (0, 1e-4·T]".into(),
        ));
    }
    let steps = mesh_steps(problem.horizon, h_ref)?;
    let mut states = Vec::with_capacity(steps + 1);
    let mut slopes = Vec::with_capacity(steps + 1);
    let mut x = problem.x0.clone();
    slopes.push(problem.field(&x));
    states.push(x.clone());
    for _ in 0..steps {
        x = rk4_step(problem, &x, h_ref);
        slopes.push(problem.field(&x));
        states.push(x.clone());
    }

    let half = h_ref / (S::one() + S::one());
    let mut fine = problem.x0.clone();
    let mut max_diff = S::zero();
    for node in states.iter().skip(1) {
        fine = rk4_step(problem, &fine, half);
        fine = rk4_step(problem, &fine, half);
        for (a, b) in node.iter().zip(&fine) {
            max_diff = max_diff.max((*a - *b).abs());
        }
    }
    let estimate = max_diff * S::from_count(16) / S::from_count(15);
    if !(estimate < S::from_f64_lossy(1e-8)) {
        return Err(FilterError::OracleNotConverged {
            estimate: estimate.to_f64_lossy(),
        });
    }
    Ok(ReferenceSolution {
        h: h_ref,
        states,
        slopes,
        error_estimate: estimate,
    })
}
