//! Gauss–Markov priors over the solution and its first `q` derivatives.
//!
//! The prior SDE has companion drift `F` (ones on the superdiagonal, drift
//! coefficients in the last row) and diffusion `σ·e_q`. Its exact
//! discretization over a step `h` is the pair `A(h) = exp(hF)`,
//! `Q(h) = ∫₀ʰ exp(Fτ) σ² e_q e_qᵀ exp(Fτ)ᵀ dτ`.
//!
//! Production paths: [`ibm_transition`] (exact, generic over any
//! [`Scalar`], including rationals) and [`ioup_transition`] (series).
//! [`transition_oracle`] and [`quadrature_process_noise`] recompute the
//! same pair from the definition and exist to cross-check the former.

use crate::error::{FilterError, Result};
use crate::linalg::{self, Mat};
use crate::scalar::{factorial, powi, Real, Scalar};

/// Default relative truncation tolerance for the IOUP process-noise series.
pub const DEFAULT_SERIES_TOL: f64 = 1e-14;

/// Hard cap on the number of series terms before giving up.
pub const MAX_SERIES_TERMS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PriorKind {
    /// `q`-times integrated Brownian motion (`θ = 0`).
    Ibm,
    /// `q`-times integrated Ornstein–Uhlenbeck process (`θ > 0`).
    Ioup,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec<S> {
    pub q: usize,
    pub kind: PriorKind,
    pub theta: S,
    /// Diffusion scale shared by all dimensions.
    pub sigma: S,
    /// Optional per-dimension scales; overrides `sigma` when present.
    pub sigma_per_dim: Option<Vec<S>>,
}

impl<S: Scalar> PriorSpec<S> {
    pub fn ibm(q: usize, sigma: S) -> Result<Self> {
        let spec = Self {
            q,
            kind: PriorKind::Ibm,
            theta: S::zero(),
            sigma,
            sigma_per_dim: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn ioup(q: usize, theta: S, sigma: S) -> Result<Self> {
        let spec = Self {
            q,
            kind: PriorKind::Ioup,
            theta,
            sigma,
            sigma_per_dim: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_dimension_scales(mut self, sigmas: Vec<S>) -> Result<Self> {
        self.sigma_per_dim = Some(sigmas);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            PriorKind::Ibm if !self.theta.is_zero() => {
                return Err(FilterError::InvalidPrior(
                    "IBM prior requires theta = 0".into(),
                ))
            }
            PriorKind::Ioup if self.theta <= S::zero() => {
                return Err(FilterError::InvalidPrior(
                    "IOUP prior requires theta > 0".into(),
                ))
            }
            _ => {}
        }
        if self.sigma <= S::zero() {
            return Err(FilterError::InvalidPrior("sigma must be positive".into()));
        }
        if let Some(sigmas) = &self.sigma_per_dim {
            if sigmas.iter().any(|s| *s <= S::zero()) {
                return Err(FilterError::InvalidPrior(
                    "per-dimension sigmas must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn sigma_for(&self, dim: usize) -> S {
        match &self.sigma_per_dim {
            Some(s) => s[dim].clone(),
            None => self.sigma.clone(),
        }
    }

    /// True when every dimension shares one diffusion scale.
    pub fn has_uniform_sigma(&self) -> bool {
        match &self.sigma_per_dim {
            None => true,
            Some(s) => s.iter().all(|x| *x == s[0]),
        }
    }

    /// `(a₀, …, a_q) = (0, …, 0, −θ)`.
    pub fn drift_coefficients(&self) -> Vec<S> {
        let mut a = vec![S::zero(); self.q + 1];
        a[self.q] = -self.theta.clone();
        a
    }

    pub fn drift_matrix(&self) -> Mat<S> {
        companion_matrix(self.q, &self.drift_coefficients())
    }

    /// Unit diffusion column `e_q`; the scale `σ` is applied separately.
    pub fn diffusion_column(&self) -> Mat<S> {
        Mat::from_fn(self.q + 1, 1, |i, _| {
            if i == self.q {
                S::one()
            } else {
                S::zero()
            }
        })
    }
}

impl<S: Real> PriorSpec<S> {
    /// Transition pair with the shared scale `sigma`.
    pub fn transition(&self, h: S) -> Result<TransitionModel<S>> {
        self.transition_with_sigma(h, self.sigma)
    }

    pub fn transition_with_sigma(&self, h: S, sigma: S) -> Result<TransitionModel<S>> {
        match self.kind {
            PriorKind::Ibm => ibm_transition(self.q, sigma, h),
            PriorKind::Ioup => ioup_transition(
                self.q,
                self.theta,
                sigma,
                h,
                S::from_f64_lossy(DEFAULT_SERIES_TOL),
            ),
        }
    }
}

/// Discrete-time transition pair of the prior over one step `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionModel<S> {
    pub h: S,
    pub a: Mat<S>,
    pub q: Mat<S>,
}

impl<S: Scalar> TransitionModel<S> {
    /// Transition over `h₁ + h₂` obtained by applying `self` (step `h₁`)
    /// followed by `next` (step `h₂`).
    pub fn compose(&self, next: &TransitionModel<S>) -> TransitionModel<S> {
        TransitionModel {
            h: self.h.clone() + next.h.clone(),
            a: &next.a * &self.a,
            q: &self.q.congruence(&next.a) + &next.q,
        }
    }

    /// Same mean map, process noise scaled by `factor`.
    pub fn with_noise_scale(&self, factor: &S) -> TransitionModel<S> {
        TransitionModel {
            h: self.h.clone(),
            a: self.a.clone(),
            q: self.q.scale(factor),
        }
    }
}

/// Drift and diffusion of a `d`-dimensional prior with coupled dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiDimDrift<S> {
    pub kx: Mat<S>,
    pub keps: Mat<S>,
    pub f_big: Mat<S>,
    pub l_big: Mat<S>,
}

/// Companion matrix: ones on the superdiagonal, `a` as the last row.
pub fn companion_matrix<S: Scalar>(q: usize, a: &[S]) -> Mat<S> {
    assert_eq!(a.len(), q + 1, "need q + 1 drift coefficients");
    Mat::from_fn(q + 1, q + 1, |i, j| {
        if i == q {
            a[j].clone()
        } else if j == i + 1 {
            S::one()
        } else {
            S::zero()
        }
    })
}

fn ibm_mean_map<S: Scalar>(q: usize, h: &S) -> Mat<S> {
    Mat::from_fn(q + 1, q + 1, |i, j| {
        if i <= j {
            powi(h, j - i) / factorial::<S>(j - i)
        } else {
            S::zero()
        }
    })
}

/// Exact transition pair of the `q`-times integrated Brownian motion.
pub fn ibm_transition<S: Scalar>(q: usize, sigma: S, h: S) -> Result<TransitionModel<S>> {
    if h <= S::zero() {
        return Err(FilterError::InvalidArgument(
            "step size must be positive".into(),
        ));
    }
    if sigma <= S::zero() {
        return Err(FilterError::InvalidArgument(
            "sigma must be positive".into(),
        ));
    }
    let a = ibm_mean_map(q, &h);
    let s2 = sigma.clone() * sigma;
    let q_mat = Mat::from_fn(q + 1, q + 1, |i, j| {
        let e = 2 * q + 1 - i - j;
        s2.clone() * powi(&h, e)
            / (S::from_count(e) * factorial::<S>(q - i) * factorial::<S>(q - j))
    });
    Ok(TransitionModel { h, a, q: q_mat })
}

/// `Σ_{k≥m} (−x)^k / k!`, the remainder of `e^{−x}` after its first `m`
/// Taylor terms. Summed directly while the terms decrease from the start,
/// otherwise taken as `e^{−x}` minus the partial sum.
fn exp_remainder<S: Real>(x: S, m: usize) -> S {
    if m == 0 {
        return (-x).exp();
    }
    if x <= S::from_count(m) {
        let mut term = powi(&(-x), m) / factorial::<S>(m);
        let mut sum = S::zero();
        for k in m..m + 400 {
            sum += term;
            if term.abs() <= S::epsilon() * sum.abs() * S::from_f64_lossy(1e-2) {
                break;
            }
            term = term * (-x) / S::from_count(k + 1);
        }
        sum
    } else {
        let mut partial = S::zero();
        let mut term = S::one();
        for k in 0..m {
            partial += term;
            term = term * (-x) / S::from_count(k + 1);
        }
        (-x).exp() - partial
    }
}

/// Transition pair of the `q`-times integrated Ornstein–Uhlenbeck process
/// with drift `theta` on the top derivative.
///
/// The last column of `A` is `(−θ)^{i−q}·(e^{−θh} − Σ_{k<q−i} (−θh)^k/k!)`.
/// `Q` is the double power series in `θh`, grouped by total order `n` and
/// truncated once an a-priori bound on the remaining tail is below
/// `tol` times every entry of the partial sum.
pub fn ioup_transition<S: Real>(
    q: usize,
    theta: S,
    sigma: S,
    h: S,
    tol: S,
) -> Result<TransitionModel<S>> {
    if theta <= S::zero() {
        return Err(FilterError::InvalidArgument(
            "IOUP requires theta > 0".into(),
        ));
    }
    if h <= S::zero() || sigma <= S::zero() {
        return Err(FilterError::InvalidArgument(
            "h and sigma must be positive".into(),
        ));
    }
    if !(tol > S::zero() && tol <= S::from_f64_lossy(1e-8)) {
        return Err(FilterError::InvalidArgument(
            "tol must lie in (0, 1e-8]".into(),
        ));
    }
    let n = q + 1;
    let x = theta * h;

    let mut a = ibm_mean_map(q, &h);
    for i in 0..n {
        let m = q - i;
        a[(i, q)] = exp_remainder(x, m) / powi(&(-theta), m);
    }

    // u[c][k] = x^k / (c + k)!
    let width = MAX_SERIES_TERMS + 1;
    let coeffs: Vec<Vec<S>> = (0..n)
        .map(|c| {
            let mut row = Vec::with_capacity(width);
            let mut u = S::one() / factorial::<S>(c);
            row.push(u);
            for k in 1..width {
                u = u * x / S::from_count(c + k);
                row.push(u);
            }
            row
        })
        .collect();

    let s2 = sigma * sigma;
    let mut q_mat = Mat::<S>::zeros(n, n);
    let two = S::one() + S::one();
    for order in 0..MAX_SERIES_TERMS {
        let sign = if order % 2 == 0 { S::one() } else { -S::one() };
        let mut done = true;
        for i in 0..n {
            for j in i..n {
                let (c1, c2) = (q - i, q - j);
                let big_n = c1 + c2;
                let conv = (0..=order).fold(S::zero(), |acc, a_| {
                    acc + coeffs[c1][a_] * coeffs[c2][order - a_]
                });
                let lead = s2 * powi(&h, big_n + 1);
                let term = lead * sign * conv / S::from_count(big_n + order + 1);
                let entry = q_mat[(i, j)] + term;
                if !entry.is_finite() {
                    return Err(FilterError::NonConvergence { terms: order });
                }
                q_mat[(i, j)] = entry;
                q_mat[(j, i)] = entry;

                // |term_{k}| <= lead (2x)^k / (k! (N+k+1) c1! c2!); bound the
                // tail after `order` geometrically once the ratio drops below 1.
                let k = order + 1;
                let ratio = two * x / S::from_count(k + 1);
                if ratio >= S::one() {
                    done = false;
                    continue;
                }
                let next_bound = lead * powi(&(two * x), k)
                    / (factorial::<S>(k.min(170))
                        * S::from_count(big_n + k + 1)
                        * factorial::<S>(c1)
                        * factorial::<S>(c2));
                let tail = next_bound / (S::one() - ratio);
                if !(tail <= tol * entry.abs()) {
                    done = false;
                }
            }
        }
        if done {
            return Ok(TransitionModel { h, a, q: q_mat });
        }
    }
    Err(FilterError::NonConvergence {
        terms: MAX_SERIES_TERMS,
    })
}

/// Reference transition pair from the definition: `A = exp(hF)` and `Q`
/// from the block exponential of `[[−F, σ²LLᵀ], [0, Fᵀ]]·h`.
pub fn transition_oracle<S: Real>(f: &Mat<S>, l: &Mat<S>, sigma: S, h: S) -> TransitionModel<S> {
    assert!(
        f.is_square() && l.rows() == f.rows(),
        "F square, L conforming"
    );
    let n = f.rows();
    let diffusion = (l * &l.transpose()).scale(&(sigma * sigma));
    let mut block = Mat::zeros(2 * n, 2 * n);
    block.set_block(0, 0, &(-f));
    block.set_block(0, n, &diffusion);
    block.set_block(n, n, &f.transpose());
    let e = linalg::expm(&block.scale(&h));
    let phi = e.block(n, n, n, n).transpose();
    let q = (&phi * &e.block(0, n, n, n)).symmetrized();
    TransitionModel {
        h,
        a: linalg::expm(&f.scale(&h)),
        q,
    }
}

/// `Q(h)` by Gauss–Legendre quadrature of `exp(Fs) σ²LLᵀ exp(Fs)ᵀ` over
/// `[0, h]`.
pub fn quadrature_process_noise<S: Real>(
    f: &Mat<S>,
    l: &Mat<S>,
    sigma: S,
    h: S,
    nodes: usize,
) -> Mat<S> {
    let n = f.rows();
    let diffusion = (l * &l.transpose()).scale(&(sigma * sigma));
    let (xs, ws) = linalg::gauss_legendre(nodes);
    let half = h / (S::one() + S::one());
    let mut acc = Mat::zeros(n, n);
    for (x, w) in xs.into_iter().zip(ws) {
        let s = half * (S::one() + S::from_f64_lossy(x));
        let e = linalg::expm(&f.scale(&s));
        acc = &acc
            + &diffusion
                .congruence(&e)
                .scale(&(S::from_f64_lossy(w) * half));
    }
    acc.symmetrized()
}

/// Kronecker-coupled drift `Kx ⊗ F` and diffusion `Keps ⊗ L` for a prior
/// with dependent dimensions.
pub fn kron_extend<S: Scalar>(
    kx: &Mat<S>,
    keps: &Mat<S>,
    prior: &PriorSpec<S>,
) -> Result<MultiDimDrift<S>> {
    if !kx.is_square() {
        return Err(FilterError::DimensionMismatch {
            expected: kx.rows(),
            found: kx.cols(),
        });
    }
    if !keps.is_square() || keps.rows() != kx.rows() {
        return Err(FilterError::DimensionMismatch {
            expected: kx.rows(),
            found: keps.rows(),
        });
    }
    Ok(MultiDimDrift {
        kx: kx.clone(),
        keps: keps.clone(),
        f_big: kx.kron(&prior.drift_matrix()),
        l_big: keps.kron(&prior.diffusion_column()),
    })
}
