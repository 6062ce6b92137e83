//! Gaussian ODE filter.
//!
//! Each step predicts with the prior transition `(A, Q)`, evaluates the
//! vector field once at the predicted solution mean, and conditions the
//! first derivative on that value with variance `R`. Dimensions are
//! independent under the prior, so every dimension carries its own
//! `(q+1)×(q+1)` covariance while the means are stored column-wise in a
//! `(q+1)×d` matrix.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{FilterError, Result};
use crate::linalg::Mat;
use crate::noise::NoiseModel;
use crate::prior::{PriorSpec, TransitionModel};
use crate::problems::{mesh_steps, IVProblem};
use crate::scalar::{powi, Real, Scalar};

/// Filtering distribution at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief<S> {
    pub t: S,
    /// Row `i` holds the estimate of `x⁽ⁱ⁾(t)`, one column per dimension.
    pub mean: Mat<S>,
    pub cov: Vec<Mat<S>>,
}

impl<S: Scalar> Belief<S> {
    pub fn order(&self) -> usize {
        self.mean.rows() - 1
    }

    pub fn dim(&self) -> usize {
        self.mean.cols()
    }

    /// Estimate of `x⁽ⁱ⁾` across dimensions.
    pub fn derivative(&self, i: usize) -> Vec<S> {
        self.mean.row(i)
    }

    /// Marginal variances of the solution estimate, one per dimension.
    pub fn solution_variance(&self) -> Vec<S> {
        self.cov.iter().map(|p| p[(0, 0)].clone()).collect()
    }
}

/// Audit record of one filter step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord<S> {
    pub t: S,
    pub mean_pred: Mat<S>,
    pub cov_pred: Vec<Mat<S>>,
    /// `y = f(m⁻⁽⁰⁾)`.
    pub data: Vec<S>,
    /// `r = y − m⁻⁽¹⁾`.
    pub residual: Vec<S>,
    /// Kalman gains, one column per dimension.
    pub gain: Mat<S>,
    pub mean: Mat<S>,
    pub cov: Vec<Mat<S>>,
}

impl<S: Scalar> StepRecord<S> {
    pub fn posterior(&self) -> Belief<S> {
        Belief {
            t: self.t.clone(),
            mean: self.mean.clone(),
            cov: self.cov.clone(),
        }
    }

    pub fn prediction(&self) -> Belief<S> {
        Belief {
            t: self.t.clone(),
            mean: self.mean_pred.clone(),
            cov: self.cov_pred.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitMode {
    /// Dirac at `(x₀, g⁽¹⁾(x₀), …, g⁽q⁾(x₀))`.
    Exact,
    /// Mean offsets drawn uniformly with `|ε⁽ⁱ⁾(0)| ≤ k0·h^{q+1−i}` and
    /// `P(0)_{kl} = k0·h^{2q+1−k−l}`.
    Perturbed { k0: f64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    /// Propagate a single covariance for all dimensions when the prior
    /// scale is uniform. Ignored when per-dimension scales differ.
    pub share_covariance: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            share_covariance: true,
        }
    }
}

/// Parameters a trajectory was produced with.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig<S> {
    pub prior: PriorSpec<S>,
    pub h: S,
    pub noise: Option<NoiseModel<S>>,
    /// Measurement variance actually used.
    pub variance: S,
    pub mode: InitMode,
}

#[derive(Debug, Clone)]
pub struct Trajectory<S> {
    pub problem: String,
    pub config: SolveConfig<S>,
    pub initial: Belief<S>,
    pub records: Vec<StepRecord<S>>,
    /// Set when the vector field produced a non-finite value; `records`
    /// then stops at the last completed step.
    pub diverged: bool,
}

impl<S: Scalar> Trajectory<S> {
    /// Initial belief followed by every posterior.
    pub fn beliefs(&self) -> impl Iterator<Item = Belief<S>> + '_ {
        std::iter::once(self.initial.clone()).chain(self.records.iter().map(StepRecord::posterior))
    }

    pub fn times(&self) -> Vec<S> {
        std::iter::once(self.initial.t.clone())
            .chain(self.records.iter().map(|r| r.t.clone()))
            .collect()
    }

    pub fn final_belief(&self) -> Belief<S> {
        self.records
            .last()
            .map(StepRecord::posterior)
            .unwrap_or_else(|| self.initial.clone())
    }
}

/// Initial belief for `problem` under `prior`.
pub fn initialize<S: Scalar>(
    problem: &IVProblem<S>,
    prior: &PriorSpec<S>,
    h: S,
    mode: InitMode,
) -> Result<Belief<S>> {
    let q = prior.q;
    let d = problem.dim();
    if let Some(s) = &prior.sigma_per_dim {
        if s.len() != d {
            return Err(FilterError::DimensionMismatch {
                expected: d,
                found: s.len(),
            });
        }
    }
    let mut mean = Mat::zeros(q + 1, d);
    for i in 0..=q {
        let g = problem.total_derivative(i, &problem.x0)?;
        for (j, v) in g.into_iter().enumerate() {
            mean[(i, j)] = v;
        }
    }
    let mut cov = Mat::zeros(q + 1, q + 1);
    if let InitMode::Perturbed { k0, seed } = mode {
        if k0 < 0.0 {
            return Err(FilterError::InvalidArgument(
                "K0 must be non-negative".into(),
            ));
        }
        let k0 = S::from_f64_lossy(k0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..=q {
            let envelope = k0.clone() * powi(&h, q + 1 - i);
            for j in 0..d {
                let u = S::from_f64_lossy(rng.random_range(-1.0..=1.0));
                mean[(i, j)] += u * envelope.clone();
            }
        }
        cov = Mat::from_fn(q + 1, q + 1, |k, l| {
            k0.clone() * powi(&h, 2 * q + 1 - k - l)
        });
        let reference = cov.clone();
        S::condition_covariance(&mut cov, &reference);
    }
    Ok(Belief {
        t: S::zero(),
        mean,
        cov: vec![cov; d],
    })
}

fn predict_impl<S: Scalar>(b: &Belief<S>, tms: &[TransitionModel<S>], share: bool) -> Belief<S> {
    let d = b.dim();
    let tm_for = |j: usize| if tms.len() == 1 { &tms[0] } else { &tms[j] };
    let mean = &tm_for(0).a * &b.mean;
    let cov = if share {
        let tm = tm_for(0);
        let p = (&b.cov[0].congruence(&tm.a) + &tm.q).symmetrized();
        vec![p; d]
    } else {
        (0..d)
            .map(|j| {
                let tm = tm_for(j);
                (&b.cov[j].congruence(&tm.a) + &tm.q).symmetrized()
            })
            .collect()
    };
    Belief {
        t: b.t.clone() + tm_for(0).h.clone(),
        mean,
        cov,
    }
}

/// `m⁻ = A m`, `P⁻ = A P Aᵀ + Q` for every dimension.
pub fn predict<S: Scalar>(b: &Belief<S>, tm: &TransitionModel<S>) -> Belief<S> {
    predict_impl(b, std::slice::from_ref(tm), false)
}

/// As [`predict`], with one transition per dimension (per-dimension `σ_j`).
pub fn predict_per_dim<S: Scalar>(b: &Belief<S>, tms: &[TransitionModel<S>]) -> Belief<S> {
    assert_eq!(tms.len(), b.dim(), "one transition per dimension");
    predict_impl(b, tms, false)
}

/// `y = f(m⁻⁽⁰⁾)`; a non-finite component is reported as divergence.
pub fn evaluate_data<S: Scalar>(
    f: impl Fn(&[S]) -> Vec<S>,
    mean_pred: &Mat<S>,
    t: &S,
) -> Result<Vec<S>> {
    let x = mean_pred.row(0);
    let y = f(&x);
    if x.iter().chain(&y).all(Scalar::is_finite_value) {
        Ok(y)
    } else {
        Err(FilterError::DivergedEvaluation {
            t: t.to_f64_lossy(),
        })
    }
}

/// `β⁽ⁱ⁾ = P⁻_{i1} / (P⁻₁₁ + R)`.
pub fn gain<S: Scalar>(cov_pred: &Mat<S>, r: &S) -> Result<Vec<S>> {
    let innovation = cov_pred[(1, 1)].clone() + r.clone();
    if innovation.is_zero() {
        return Err(FilterError::SingularInnovation);
    }
    Ok(cov_pred
        .col(1)
        .into_iter()
        .map(|p| p / innovation.clone())
        .collect())
}

pub(crate) fn downdate<S: Scalar>(cov_pred: &Mat<S>, r: &S) -> Result<(Vec<S>, Mat<S>)> {
    let beta = gain(cov_pred, r)?;
    let column = cov_pred.col(1);
    let n = cov_pred.rows();
    // P − β P⁻_{:,1}ᵀ equals P − P⁻_{:,1} P⁻_{:,1}ᵀ / (P⁻₁₁ + R)
    let mut post = Mat::from_fn(n, n, |i, j| {
        cov_pred[(i, j)].clone() - beta[i].clone() * column[j].clone()
    })
    .symmetrized();
    S::condition_covariance(&mut post, cov_pred);
    Ok((beta, post))
}

fn update_impl<S: Scalar>(
    pred: &Belief<S>,
    y: &[S],
    r: &S,
    share: bool,
) -> Result<(Belief<S>, StepRecord<S>)> {
    let d = pred.dim();
    if y.len() != d {
        return Err(FilterError::DimensionMismatch {
            expected: d,
            found: y.len(),
        });
    }
    let n = pred.order() + 1;
    let mut gains = Mat::zeros(n, d);
    let mut mean = pred.mean.clone();
    let mut cov = Vec::with_capacity(d);
    let mut residual = Vec::with_capacity(d);
    let shared = if share {
        Some(downdate(&pred.cov[0], r)?)
    } else {
        None
    };
    for j in 0..d {
        let (beta, post) = match &shared {
            Some((b, p)) => (b.clone(), p.clone()),
            None => downdate(&pred.cov[j], r)?,
        };
        let res = y[j].clone() - pred.mean[(1, j)].clone();
        for i in 0..n {
            mean[(i, j)] += beta[i].clone() * res.clone();
        }
        // With R = 0 the derivative is conditioned exactly on the data.
        if r.is_zero() {
            mean[(1, j)] = y[j].clone();
        }
        gains.set_col(j, &beta);
        residual.push(res);
        cov.push(post);
    }
    let posterior = Belief {
        t: pred.t.clone(),
        mean,
        cov,
    };
    let record = StepRecord {
        t: pred.t.clone(),
        mean_pred: pred.mean.clone(),
        cov_pred: pred.cov.clone(),
        data: y.to_vec(),
        residual,
        gain: gains,
        mean: posterior.mean.clone(),
        cov: posterior.cov.clone(),
    };
    Ok((posterior, record))
}

/// Conditions the predictive belief on `y` with variance `r`.
pub fn update<S: Scalar>(pred: &Belief<S>, y: &[S], r: &S) -> Result<(Belief<S>, StepRecord<S>)> {
    update_impl(pred, y, r, false)
}

/// Runs `steps` filter steps from `initial` on a uniform mesh.
///
/// `tms` holds either one transition shared by all dimensions or one per
/// dimension. Returns the step records and whether the run diverged.
pub fn run_filter<S: Scalar>(
    problem: &IVProblem<S>,
    tms: &[TransitionModel<S>],
    r: &S,
    initial: &Belief<S>,
    steps: usize,
    share_covariance: bool,
) -> Result<(Vec<StepRecord<S>>, bool)> {
    if tms.len() != 1 && tms.len() != initial.dim() {
        return Err(FilterError::DimensionMismatch {
            expected: initial.dim(),
            found: tms.len(),
        });
    }
    let share = share_covariance && tms.len() == 1 && initial.cov.windows(2).all(|w| w[0] == w[1]);
    let h = tms[0].h.clone();
    let mut records = Vec::with_capacity(steps);
    let mut belief = initial.clone();
    for n in 1..=steps {
        let mut pred = predict_impl(&belief, tms, share);
        pred.t = S::from_count(n) * h.clone();
        let y = match evaluate_data(|x: &[S]| problem.field(x), &pred.mean, &pred.t) {
            Ok(y) => y,
            Err(FilterError::DivergedEvaluation { .. }) => return Ok((records, true)),
            Err(e) => return Err(e),
        };
        let (post, record) = update_impl(&pred, &y, r, share)?;
        records.push(record);
        belief = post;
    }
    Ok((records, false))
}

/// Solves `problem` on the uniform mesh `h, 2h, …, T`.
pub fn solve<S: Real>(
    problem: &IVProblem<S>,
    prior: &PriorSpec<S>,
    h: S,
    noise: NoiseModel<S>,
    mode: InitMode,
) -> Result<Trajectory<S>> {
    solve_with_options(problem, prior, h, noise, mode, SolveOptions::default())
}

pub fn solve_with_options<S: Real>(
    problem: &IVProblem<S>,
    prior: &PriorSpec<S>,
    h: S,
    noise: NoiseModel<S>,
    mode: InitMode,
    options: SolveOptions,
) -> Result<Trajectory<S>> {
    prior.validate()?;
    if prior.q < 1 {
        return Err(FilterError::InvalidPrior("the solver needs q >= 1".into()));
    }
    if !(h > S::zero()) {
        return Err(FilterError::InvalidArgument(
            "step size must be positive".into(),
        ));
    }
    let steps = mesh_steps(problem.horizon, h)?;
    let variance = noise.evaluate(h);
    let initial = initialize(problem, prior, h, mode)?;
    let tms = if prior.has_uniform_sigma() {
        vec![prior.transition_with_sigma(h, prior.sigma_for(0))?]
    } else {
        let unit = prior.transition_with_sigma(h, S::one())?;
        (0..problem.dim())
            .map(|j| {
                let s = prior.sigma_for(j);
                unit.with_noise_scale(&(s * s))
            })
            .collect()
    };
    let (records, diverged) = run_filter(
        problem,
        &tms,
        &variance,
        &initial,
        steps,
        options.share_covariance,
    )?;
    Ok(Trajectory {
        problem: problem.name.clone(),
        config: SolveConfig {
            prior: prior.clone(),
            h,
            noise: Some(noise),
            variance,
            mode,
        },
        initial,
        records,
        diverged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::min_eigenvalue;
    use crate::prior::ibm_transition;
    use crate::problems;
    use approx::assert_relative_eq;

    fn riccati_step(r: f64) -> (Belief<f64>, StepRecord<f64>) {
        let p = problems::riccati::<f64>();
        let prior = PriorSpec::ibm(1, 10f64.sqrt()).unwrap();
        let b0 = initialize(&p, &prior, 0.1, InitMode::Exact).unwrap();
        let tm = ibm_transition(1, 10f64.sqrt(), 0.1).unwrap();
        let pred = predict(&b0, &tm);
        let y = evaluate_data(|x: &[f64]| p.field(x), &pred.mean, &pred.t).unwrap();
        update(&pred, &y, &r).unwrap()
    }

    #[test]
    fn riccati_initialization() {
        let p = problems::riccati::<f64>();
        let prior = PriorSpec::ibm(1, 1.0).unwrap();
        let b = initialize(&p, &prior, 0.1, InitMode::Exact).unwrap();
        assert_eq!(b.mean.col(0), vec![1.0, -0.5]);
        assert_eq!(b.cov[0], Mat::zeros(2, 2));
    }

    #[test]
    fn logistic_initialization() {
        let p = problems::logistic::<f64>();
        let prior = PriorSpec::ibm(1, 1.0).unwrap();
        let b = initialize(&p, &prior, 0.1, InitMode::Exact).unwrap();
        assert_relative_eq!(b.mean[(1, 0)], 0.27, epsilon = 1e-15);
    }

    #[test]
    fn perturbed_with_zero_k0_is_exact() {
        let p = problems::logistic::<f64>();
        let prior = PriorSpec::ibm(2, 1.0).unwrap();
        let exact = initialize(&p, &prior, 0.1, InitMode::Exact).unwrap();
        let pert = initialize(&p, &prior, 0.1, InitMode::Perturbed { k0: 0.0, seed: 7 }).unwrap();
        assert_eq!(exact, pert);
    }

    #[test]
    fn perturbed_respects_envelope() {
        let p = problems::linear_rotation::<f64>();
        let prior = PriorSpec::ibm(2, 1.0).unwrap();
        let h = 0.05;
        let k0 = 0.3;
        let exact = initialize(&p, &prior, h, InitMode::Exact).unwrap();
        let pert = initialize(&p, &prior, h, InitMode::Perturbed { k0, seed: 11 }).unwrap();
        for i in 0..=2 {
            for j in 0..2 {
                let off = (pert.mean[(i, j)] - exact.mean[(i, j)]).abs();
                assert!(off <= k0 * h.powi(3 - i as i32) * (1.0 + 1e-12));
            }
        }
        for k in 0..=2 {
            for l in 0..=2 {
                assert_relative_eq!(
                    pert.cov[0][(k, l)],
                    k0 * h.powi(5 - (k + l) as i32),
                    max_relative = 1e-12
                );
            }
        }
        assert!(min_eigenvalue(&pert.cov[0]) >= -1e-15);
    }

    #[test]
    fn missing_derivative_fails_init() {
        let p = IVProblem::new("bare", vec![1.0], 1.0, |x: &[f64]| vec![-x[0]]);
        let prior = PriorSpec::ibm(2, 1.0).unwrap();
        assert_eq!(
            initialize(&p, &prior, 0.1, InitMode::Exact).unwrap_err(),
            FilterError::MissingDerivative { order: 2 }
        );
    }

    #[test]
    fn riccati_first_step_values() {
        let (_, rec) = riccati_step(0.0);
        assert_relative_eq!(rec.mean_pred[(0, 0)], 19.0 / 20.0, epsilon = 1e-15);
        assert_eq!(rec.mean_pred[(1, 0)], -0.5);
        assert_relative_eq!(rec.cov_pred[0][(0, 0)], 1.0 / 300.0, epsilon = 1e-15);
        assert_relative_eq!(rec.cov_pred[0][(0, 1)], 1.0 / 20.0, epsilon = 1e-15);
        assert_relative_eq!(rec.cov_pred[0][(1, 1)], 1.0, epsilon = 1e-15);
        assert_relative_eq!(rec.data[0], -6859.0 / 16000.0, epsilon = 1e-15);
        assert_relative_eq!(rec.gain[(0, 0)], 1.0 / 20.0, epsilon = 1e-15);
        assert_relative_eq!(rec.gain[(1, 0)], 1.0, epsilon = 1e-15);
        assert_relative_eq!(rec.residual[0], 1141.0 / 16000.0, epsilon = 1e-15);
        assert_relative_eq!(rec.mean[(0, 0)], 305141.0 / 320000.0, epsilon = 1e-15);
        assert_relative_eq!(rec.mean[(1, 0)], -6859.0 / 16000.0, epsilon = 1e-15);
    }

    #[test]
    fn identity_transition_leaves_belief() {
        let b = Belief {
            t: 0.0,
            mean: Mat::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0]]),
            cov: vec![Mat::from_rows(vec![vec![2.0, 0.5], vec![0.5, 1.0]]); 2],
        };
        let tm = TransitionModel {
            h: 0.1,
            a: Mat::identity(2),
            q: Mat::zeros(2, 2),
        };
        let p = predict(&b, &tm);
        assert_eq!(p.mean, b.mean);
        assert_eq!(p.cov, b.cov);
    }

    #[test]
    fn gain_limits() {
        let p = Mat::from_rows(vec![vec![1.0 / 300.0, 0.05], vec![0.05, 1.0]]);
        assert_eq!(gain(&p, &0.0).unwrap(), vec![0.05, 1.0]);
        assert_relative_eq!(gain(&p, &1.0).unwrap()[1], 0.5);
        let big = gain(&p, &1e12).unwrap();
        assert!(big.iter().all(|b: &f64| b.abs() < 1e-11));
        assert_eq!(
            gain(&Mat::zeros(2, 2), &0.0).unwrap_err(),
            FilterError::SingularInnovation
        );
    }

    #[test]
    fn zero_residual_keeps_mean() {
        let pred = Belief {
            t: 0.1,
            mean: Mat::from_rows(vec![vec![0.3], vec![0.7]]),
            cov: vec![Mat::from_rows(vec![vec![0.2, 0.1], vec![0.1, 0.5]])],
        };
        let (post, rec) = update(&pred, &[0.7], &0.25).unwrap();
        assert_eq!(post.mean, pred.mean);
        assert_eq!(rec.residual, vec![0.0]);
    }

    #[test]
    fn posterior_covariance_identities() {
        let pred = Belief {
            t: 0.1,
            mean: Mat::from_rows(vec![vec![0.3], vec![0.7]]),
            cov: vec![Mat::from_rows(vec![vec![0.2, 0.1], vec![0.1, 0.5]])],
        };
        let r = 0.25;
        let (post, rec) = update(&pred, &[1.0], &r).unwrap();
        assert_relative_eq!(post.cov[0][(0, 1)], r * rec.gain[(0, 0)], epsilon = 1e-15);
        assert_relative_eq!(post.cov[0][(1, 1)], r * rec.gain[(1, 0)], epsilon = 1e-15);
    }

    #[test]
    fn solve_rejects_bad_mesh_and_order() {
        let p = problems::logistic::<f64>();
        let prior = PriorSpec::ibm(1, 1.0).unwrap();
        assert!(matches!(
            solve(&p, &prior, 0.07, NoiseModel::Zero, InitMode::Exact),
            Err(FilterError::NonIntegerMesh { .. })
        ));
        let prior0 = PriorSpec::ibm(0, 1.0).unwrap();
        assert!(solve(&p, &prior0, 0.1, NoiseModel::Zero, InitMode::Exact).is_err());
    }

    #[test]
    fn solve_mesh_and_times() {
        let p = problems::logistic::<f64>();
        let prior = PriorSpec::ibm(1, 1.0).unwrap();
        let traj = solve(&p, &prior, 0.01, NoiseModel::Zero, InitMode::Exact).unwrap();
        assert_eq!(traj.records.len(), 150);
        let times = traj.times();
        for w in times.windows(2) {
            assert_relative_eq!(w[1] - w[0], 0.01, epsilon = 1e-12);
        }
        assert!(!traj.diverged);
    }

    #[test]
    fn constant_field_is_reproduced() {
        let p = problems::constant(vec![2.0, -0.5], vec![1.0, 3.0], 1.0);
        for q in 1..=3 {
            let prior = PriorSpec::ibm(q, 1.0).unwrap();
            let h = 0.125;
            let traj = solve(&p, &prior, h, NoiseModel::Zero, InitMode::Exact).unwrap();
            for (n, rec) in traj.records.iter().enumerate() {
                assert_eq!(rec.residual, vec![0.0, 0.0]);
                let t = (n + 1) as f64 * h;
                assert_relative_eq!(rec.mean[(0, 0)], 1.0 + 2.0 * t, epsilon = 1e-14);
                assert_relative_eq!(rec.mean[(0, 1)], 3.0 - 0.5 * t, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn divergence_is_flagged() {
        let p = IVProblem::new("blowup", vec![1.0], 1.0, |x: &[f64]| {
            vec![x[0].powi(2) * 1e200]
        });
        let prior = PriorSpec::ibm(1, 1.0).unwrap();
        let traj = solve(&p, &prior, 0.1, NoiseModel::Zero, InitMode::Exact);
        // g⁽¹⁾(x₀) is finite, so initialization succeeds and the run stops
        // at the first non-finite evaluation.
        let traj = traj.unwrap();
        assert!(traj.diverged);
        assert!(traj.records.len() < 10);
    }

    #[test]
    fn shared_and_per_dimension_covariances_agree() {
        let p = problems::linear_rotation::<f64>();
        let prior = PriorSpec::ibm(2, 1.0).unwrap();
        let a = solve_with_options(
            &p,
            &prior,
            0.1,
            NoiseModel::power_law(1.0, 2.0),
            InitMode::Exact,
            SolveOptions {
                share_covariance: true,
            },
        )
        .unwrap();
        let b = solve_with_options(
            &p,
            &prior,
            0.1,
            NoiseModel::power_law(1.0, 2.0),
            InitMode::Exact,
            SolveOptions {
                share_covariance: false,
            },
        )
        .unwrap();
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(ra.mean, rb.mean);
            assert_eq!(ra.cov, rb.cov);
        }
    }

    #[test]
    fn per_dimension_sigma_scales_covariance() {
        let p = problems::linear_rotation::<f64>();
        let prior = PriorSpec::ibm(1, 1.0)
            .unwrap()
            .with_dimension_scales(vec![1.0, 2.0])
            .unwrap();
        let traj = solve(&p, &prior, 0.1, NoiseModel::Zero, InitMode::Exact).unwrap();
        let rec = &traj.records[3];
        assert_relative_eq!(
            rec.cov_pred[1][(1, 1)],
            4.0 * rec.cov_pred[0][(1, 1)],
            max_relative = 1e-12
        );
    }
}
