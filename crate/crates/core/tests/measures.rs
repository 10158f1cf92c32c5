use bnp_core::measures::{ApproxIndicator, RateMeasureSpec};
use bnp_core::quadrature::Quadrature;
use proptest::prelude::*;

fn families() -> Vec<RateMeasureSpec> {
    vec![
        RateMeasureSpec::beta_process(1.5, 2.0, 0.0).unwrap(),
        RateMeasureSpec::beta_process(2.0, 1.0, 0.6).unwrap(),
        RateMeasureSpec::gamma_process(1.0, 2.0, 0.3).unwrap(),
        RateMeasureSpec::beta_prime_process(0.7, 3.0, 0.2).unwrap(),
        RateMeasureSpec::generalized_gamma_process(1.0, 1.5, 2.0, 0.4).unwrap(),
    ]
}

fn spec_strategy() -> impl Strategy<Value = RateMeasureSpec> {
    (0.1f64..5.0, 0.0f64..0.9, 0.2f64..4.0, 0.3f64..3.0, 0usize..4).prop_map(|(g, d, e1, e2, f)| match f {
        0 => RateMeasureSpec::beta_process(g, e1, d).unwrap(),
        1 => RateMeasureSpec::gamma_process(g, e1, d).unwrap(),
        2 => RateMeasureSpec::beta_prime_process(g, e1, d).unwrap(),
        _ => RateMeasureSpec::generalized_gamma_process(g, e1, e2, d).unwrap(),
    })
}

#[test]
fn small_jumps_have_finite_first_moment() {
    let q = Quadrature::default();
    for spec in families() {
        let upper = spec.support_upper();
        let near = q
            .integrate_log_scale(|t| (t.ln() + spec.ln_rate_density(t).unwrap()).exp(), 1e-300, 1.0f64.min(upper))
            .unwrap();
        assert!(near.value.is_finite() && near.value > 0.0, "{spec:?}");
        if upper > 1.0 {
            let far = q.integrate_to_infinity(|t| spec.rate_density(t).unwrap(), 1.0).unwrap();
            assert!(far.value.is_finite(), "{spec:?}");
        }
    }
}

#[test]
fn total_rate_diverges_at_zero() {
    let q = Quadrature::default();
    for spec in families() {
        let top = 0.5f64.min(spec.support_upper());
        let partial: Vec<f64> = [1e-2, 1e-4, 1e-6, 1e-8]
            .iter()
            .map(|&lo| q.integrate_log_scale(|t| spec.rate_density(t).unwrap(), lo, top).unwrap().value)
            .collect();
        for w in partial.windows(2) {
            assert!(w[1] > w[0] + 1.0, "{spec:?}: {partial:?}");
        }
    }
}

proptest! {
    #[test]
    fn log_and_linear_density_agree(spec in spec_strategy(), u in 0.001f64..0.999) {
        let theta = if spec.support_upper() == 1.0 { u } else { u / (1.0 - u) };
        let ln = spec.ln_rate_density(theta).unwrap();
        let lin = spec.rate_density(theta).unwrap();
        prop_assume!(lin.is_normal());
        prop_assert!((ln.exp() - lin).abs() <= 1e-12 * lin);
    }

    #[test]
    fn smoothed_indicator_is_monotone_step(b in 0.01f64..2.0, u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let s = ApproxIndicator::smoothed(b).unwrap();
        let (lo, hi) = if u < v { (u, v) } else { (v, u) };
        prop_assert!(s.value(lo * b) <= s.value(hi * b));
        prop_assert_eq!(s.value(-u), 0.0);
        prop_assert_eq!(s.value(b * (1.0 + u)), 1.0);
        let value = s.value(u * b);
        prop_assert!((0.0..=1.0).contains(&value));
    }

    #[test]
    fn indicator_derivative_matches_differences(b in 0.05f64..2.0, i in 0usize..5) {
        let s = ApproxIndicator::smoothed(b).unwrap();
        let t = b * i as f64 / 4.0;
        let h = 1e-6 * b;
        let fd = (s.value(t + h) - s.value(t - h)) / (2.0 * h);
        let an = s.derivative(t);
        prop_assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0 / b), "{fd} vs {an}");
    }
}
