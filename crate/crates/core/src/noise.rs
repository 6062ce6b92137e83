//! Measurement-variance models for the derivative data.

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel<S> {
    Zero,
    Constant {
        r: S,
    },
    /// `R = k_r · h^p`; `p = ∞` means `R = 0` for every `h`.
    PowerLaw {
        k_r: S,
        p: S,
    },
}

impl<S: Real> NoiseModel<S> {
    pub fn power_law(k_r: S, p: S) -> Self {
        NoiseModel::PowerLaw { k_r, p }
    }

    /// Variance for step size `h`.
    pub fn evaluate(&self, h: S) -> S {
        match *self {
            NoiseModel::Zero => S::zero(),
            NoiseModel::Constant { r } => r,
            NoiseModel::PowerLaw { k_r, p } => {
                if p.is_infinite() || k_r.is_zero() {
                    S::zero()
                } else {
                    k_r * h.powf(p)
                }
            }
        }
    }

    /// Whether the model satisfies `R ≡ K·h^p` with `p ≥ q` (or `R ≡ 0`).
    /// Informational only; experiments deliberately run impermissible
    /// models.
    pub fn is_permissible(&self, q: usize) -> bool {
        match *self {
            NoiseModel::Zero => true,
            NoiseModel::Constant { r } => r.is_zero(),
            NoiseModel::PowerLaw { k_r, p } => k_r.is_zero() || p >= S::from_count(q),
        }
    }

    /// Exponent `p` of the model, `∞` for models that vanish identically.
    pub fn exponent(&self) -> S {
        match *self {
            NoiseModel::Zero => S::infinity(),
            NoiseModel::Constant { r } if r.is_zero() => S::infinity(),
            NoiseModel::Constant { .. } => S::zero(),
            NoiseModel::PowerLaw { p, .. } => p,
        }
    }

    /// Prefactor `K_R` of the model.
    pub fn prefactor(&self) -> S {
        match *self {
            NoiseModel::Zero => S::zero(),
            NoiseModel::Constant { r } => r,
            NoiseModel::PowerLaw { k_r, .. } => k_r,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn evaluate_examples() {
        assert_relative_eq!(NoiseModel::power_law(1.0, 1.0).evaluate(0.1), 0.1);
        assert_relative_eq!(
            NoiseModel::power_law(5.0e3, 1.0).evaluate(0.01),
            50.0,
            max_relative = 1e-14
        );
        assert_eq!(
            NoiseModel::power_law(123.0, f64::INFINITY).evaluate(0.3),
            0.0
        );
        assert_eq!(NoiseModel::<f64>::Zero.evaluate(0.3), 0.0);
        assert_eq!(NoiseModel::Constant { r: 2.5 }.evaluate(0.3), 2.5);
    }

    #[test]
    fn permissibility() {
        assert!(!NoiseModel::power_law(1.0, 0.5).is_permissible(1));
        assert!(NoiseModel::power_law(1.0, 1.0).is_permissible(1));
        assert!(NoiseModel::<f64>::Zero.is_permissible(3));
        assert!(!NoiseModel::Constant { r: 1.0 }.is_permissible(1));
        assert!(NoiseModel::Constant { r: 0.0 }.is_permissible(1));
        assert!(NoiseModel::power_law(1.0, f64::INFINITY).is_permissible(4));
    }

    proptest! {
        #[test]
        fn monotone_in_h(k in 0.0f64..1e4, p in 0.0f64..6.0, h1 in 1e-6f64..1.0, h2 in 1e-6f64..1.0) {
            let m = NoiseModel::power_law(k, p);
            let (lo, hi) = if h1 <= h2 { (h1, h2) } else { (h2, h1) };
            prop_assert!(m.evaluate(lo) <= m.evaluate(hi));
            prop_assert!(m.evaluate(lo) >= 0.0);
        }

        #[test]
        fn linear_in_prefactor(k in 0.0f64..1e4, c in 0.0f64..10.0, p in 0.0f64..4.0, h in 1e-4f64..1.0) {
            let base = NoiseModel::power_law(k, p).evaluate(h);
            let scaled = NoiseModel::power_law(c * k, p).evaluate(h);
            prop_assert!((scaled - c * base).abs() <= 1e-12 * (1.0 + scaled.abs()));
        }
    }
}
