use odefilter_core::filter::{initialize, run_filter, solve};
use odefilter_core::linalg::min_eigenvalue;
use odefilter_core::prior::{kron_extend, transition_oracle, PriorSpec};
use odefilter_core::{problems, InitMode, Mat, NoiseModel};
use proptest::prelude::*;

fn prior_strategy() -> impl Strategy<Value = PriorSpec<f64>> {
    (
        1usize..=4,
        prop_oneof![Just(0.0), 0.1f64..3.0],
        0.1f64..10.0,
    )
        .prop_map(|(q, theta, sigma)| {
            if theta == 0.0 {
                PriorSpec::ibm(q, sigma).unwrap()
            } else {
                PriorSpec::ioup(q, theta, sigma).unwrap()
            }
        })
}

fn scale(m: &Mat<f64>) -> f64 {
    m.max_abs().max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn filter_covariances_stay_psd_and_gain_is_bounded(
        q in 1usize..=3,
        sigma in 0.1f64..10.0,
        k in 2u32..6,
        r in prop_oneof![Just(0.0), 1e-8f64..10.0],
    ) {
        let h = 2f64.powi(-(k as i32));
        let mut problem = problems::logistic::<f64>();
        problem.horizon = 0.5;
        let prior = PriorSpec::ibm(q, sigma).unwrap();
        let traj = solve(&problem, &prior, h, NoiseModel::Constant { r }, InitMode::Exact).unwrap();
        for rec in &traj.records {
            let (pred, post) = (&rec.cov_pred[0], &rec.cov[0]);
            prop_assert!(min_eigenvalue(pred) >= -1e-12 * scale(pred));
            prop_assert!(min_eigenvalue(post) >= -1e-12 * scale(pred));
            if q == 1 {
                prop_assert!(pred[(1, 1)] >= sigma * sigma * h * (1.0 - 1e-12));
            }
            let b1 = rec.gain[(1, 0)];
            prop_assert!((-1e-14..=1.0 + 1e-14).contains(&b1));
            let tol = 1e-10 * scale(pred);
            prop_assert!((post[(0, 1)] - r * rec.gain[(0, 0)]).abs() <= tol);
            prop_assert!((post[(1, 1)] - r * rec.gain[(1, 0)]).abs() <= tol);
        }
    }

    #[test]
    fn transitions_compose(prior in prior_strategy(), h1 in 1e-3f64..0.5, h2 in 1e-3f64..0.5) {
        let a = prior.transition(h1).unwrap();
        let b = prior.transition(h2).unwrap();
        let ab = prior.transition(h1 + h2).unwrap();
        let composed = a.compose(&b);
        prop_assert!(composed.a.relative_distance(&ab.a) < 1e-10);
        prop_assert!(composed.q.relative_distance(&ab.q) < 1e-9);
    }

    #[test]
    fn constant_fields_are_solved_exactly(
        q in 1usize..=4,
        sigma in 0.1f64..10.0,
        c in -5.0f64..5.0,
        x0 in -5.0f64..5.0,
        k in 1u32..5,
        r in prop_oneof![Just(0.0), 1e-6f64..1.0],
    ) {
        let h = 2f64.powi(-(k as i32));
        let problem = problems::constant(vec![c], vec![x0], 1.0);
        let prior = PriorSpec::ibm(q, sigma).unwrap();
        let traj = solve(&problem, &prior, h, NoiseModel::Constant { r }, InitMode::Exact).unwrap();
        for rec in &traj.records {
            prop_assert!((rec.mean[(0, 0)] - (x0 + c * rec.t)).abs() <= 1e-12 * (1.0 + x0.abs() + c.abs()));
            prop_assert!((rec.mean[(1, 0)] - c).abs() <= 1e-12 * (1.0 + c.abs()));
            prop_assert!(rec.residual[0].abs() <= 1e-12 * (1.0 + c.abs()));
        }
    }

    #[test]
    fn kronecker_prior_reduces_to_blocks(
        prior in prior_strategy(),
        scales in proptest::collection::vec(0.2f64..5.0, 1..=3),
        h in 1e-2f64..0.5,
    ) {
        let d = scales.len();
        let n = prior.q + 1;
        let keps = Mat::from_fn(d, d, |i, j| if i == j { scales[i] } else { 0.0 });
        let drift = kron_extend(&Mat::identity(d), &keps, &prior).unwrap();
        let big = transition_oracle(&drift.f_big, &drift.l_big, prior.sigma, h);
        for (j, s) in scales.iter().enumerate() {
            let block = prior.transition_with_sigma(h, prior.sigma * s).unwrap();
            prop_assert!(big.a.block(j * n, j * n, n, n).relative_distance(&block.a) < 1e-10);
            prop_assert!(big.q.block(j * n, j * n, n, n).relative_distance(&block.q) < 1e-8);
            for i in 0..d {
                if i != j {
                    prop_assert!(big.a.block(i * n, j * n, n, n).max_abs() == 0.0);
                    prop_assert!(big.q.block(i * n, j * n, n, n).max_abs() <= 1e-14 * big.q.max_abs());
                }
            }
        }
    }

    #[test]
    fn perturbed_initial_covariance_is_psd(q in 1usize..=4, k0 in 0.0f64..10.0, seed in any::<u64>(), h in 1e-3f64..0.5) {
        let problem = problems::logistic::<f64>();
        let prior = PriorSpec::ibm(q, 1.0).unwrap();
        let b = initialize(&problem, &prior, h, InitMode::Perturbed { k0, seed }).unwrap();
        prop_assert!(min_eigenvalue(&b.cov[0]) >= -1e-12 * scale(&b.cov[0]));
        for i in 0..=q {
            let exact = problem.total_derivative(i, &problem.x0).unwrap()[0];
            prop_assert!((b.mean[(i, 0)] - exact).abs() <= k0 * h.powi((q + 1 - i) as i32) * (1.0 + 1e-12));
        }
    }
}

#[test]
fn shared_transition_run_matches_solve() {
    let problem = problems::linear_rotation::<f64>();
    let prior = PriorSpec::ibm(2, 1.0).unwrap();
    let h = 0.05;
    let tm = prior.transition(h).unwrap();
    let init = initialize(&problem, &prior, h, InitMode::Exact).unwrap();
    let (records, _) = run_filter(&problem, &[tm], &0.0, &init, 200, true).unwrap();
    let traj = solve(&problem, &prior, h, NoiseModel::Zero, InitMode::Exact).unwrap();
    assert_eq!(records.len(), traj.records.len());
    assert_eq!(
        records.last().unwrap().mean,
        traj.records.last().unwrap().mean
    );
}
