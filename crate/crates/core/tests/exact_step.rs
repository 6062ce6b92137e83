use num_rational::BigRational;
use odefilter_core::filter::{initialize, run_filter};
use odefilter_core::prior::{ibm_transition, PriorSpec};
use odefilter_core::{problems, InitMode, Mat, Rational};

fn rat(n: i64, d: i64) -> Rational {
    BigRational::new(n.into(), d.into())
}

fn riccati_step(r: Rational) -> odefilter_core::StepRecord<Rational> {
    let problem = problems::riccati_polynomial::<Rational>();
    let h = rat(1, 10);
    let tm = ibm_transition(1, rat(1, 1), h.clone())
        .unwrap()
        .with_noise_scale(&rat(10, 1));
    let prior = PriorSpec::ibm(1, rat(1, 1)).unwrap();
    let initial = initialize(&problem, &prior, h, InitMode::Exact).unwrap();
    let (mut records, diverged) = run_filter(&problem, &[tm], &r, &initial, 1, true).unwrap();
    assert!(!diverged);
    records.remove(0)
}

#[test]
fn one_riccati_step_in_exact_arithmetic() {
    let rec = riccati_step(rat(0, 1));
    assert_eq!(rec.mean_pred.col(0), vec![rat(19, 20), rat(-1, 2)]);
    assert_eq!(
        rec.cov_pred[0],
        Mat::from_rows(vec![
            vec![rat(1, 300), rat(1, 20)],
            vec![rat(1, 20), rat(1, 1)]
        ])
    );
    assert_eq!(rec.data, vec![rat(-6859, 16000)]);
    assert_eq!(rec.gain.col(0), vec![rat(1, 20), rat(1, 1)]);
    assert_eq!(rec.residual, vec![rat(1141, 16000)]);
    assert_eq!(
        rec.mean.col(0),
        vec![rat(305141, 320000), rat(-6859, 16000)]
    );
    assert_eq!(rec.t, rat(1, 10));
}

#[test]
fn exact_step_with_unit_noise() {
    let rec = riccati_step(rat(1, 1));
    assert_eq!(rec.gain.col(0), vec![rat(1, 40), rat(1, 2)]);
    let m0 = rat(19, 20) + rat(1, 40) * rat(1141, 16000);
    assert_eq!(rec.mean[(0, 0)], m0);
    // P₀₁ = R β⁽⁰⁾ and P₁₁ = R β⁽¹⁾ hold exactly.
    assert_eq!(rec.cov[0][(0, 1)], rat(1, 40));
    assert_eq!(rec.cov[0][(1, 1)], rat(1, 2));
}
