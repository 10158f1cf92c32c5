use bnp_core::inference::{
    aifa_tau_conditional, generate_synthetic, gibbs_sweep, run_chain, ChainConfig, GammaPrior, GibbsState,
    LinearGaussianModel, Matrix, PriorKind, SyntheticConfig,
};
use bnp_core::rng::split;
use proptest::prelude::*;

fn proper(d: usize, k: usize) -> LinearGaussianModel {
    let p = GammaPrior { shape: 2.0, rate: 1.0 };
    LinearGaussianModel::new(d, 1.0, 1.0, k)
        .unwrap()
        .with_precision_priors(p, p)
        .unwrap()
}

#[test]
fn conjugate_parameters_on_integer_grid() {
    // γα/K = 0.25 so every parameter is a dyadic rational
    let model = LinearGaussianModel::new(2, 1.0, 2.0, 8).unwrap();
    for n in 0..=10usize {
        for pattern in 0u32..(1 << n) {
            let xs: Vec<bool> = (0..n).map(|i| pattern >> i & 1 == 1).collect();
            // prior τ^{0.25 - 1}(1-τ)^{2 - 1}, one factor τ^x (1-τ)^{1-x} per row
            let (mut a, mut b) = (0.25, 2.0);
            for &x in &xs {
                if x {
                    a += 1.0;
                } else {
                    b += 1.0;
                }
            }
            let sum = xs.iter().filter(|&&x| x).count();
            let got = aifa_tau_conditional(&model, sum, n).unwrap();
            assert_eq!((got.a, got.b), (a, b), "N={n} Σx={sum}");
        }
    }
}

#[test]
fn synthetic_features_are_recovered() {
    let cfg = SyntheticConfig {
        n: 200,
        d: 5,
        features: 3,
        feature_probability: 0.5,
        feature_sd: 1.0,
        weight_sd: 1.0,
        noise_sd: 0.1,
    };
    let data = generate_synthetic(&cfg, &mut split(51, 0)).unwrap();
    let truth = data.active_per_row();
    let model = LinearGaussianModel::new(5, 1.0, 1.0, 10).unwrap();
    let chain = ChainConfig {
        sweeps: 2000,
        burnin: 1000,
        thin: 1,
        impute_sweeps: 10,
    };
    for (i, kind) in [PriorKind::Aifa, PriorKind::BondessonTfa].into_iter().enumerate() {
        let out = run_chain(&model, kind, &data.y, None, chain, &mut split(52, i as u64)).unwrap();
        let rel = (out.mean_active_per_row - truth).abs() / truth;
        assert!(rel < 0.25, "{kind:?}: {} vs {truth}", out.mean_active_per_row);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tfa_ordering_is_kept(seed in any::<u64>(), k in 1usize..8, sweeps in 1usize..40) {
        let model = proper(3, k);
        let mut rng = split(seed, 0);
        let truth = GibbsState::sample_prior(&model, PriorKind::BondessonTfa, 12, &mut rng).unwrap();
        let data = truth.generate_data(&mut rng);
        let mut state = GibbsState::initialize(&model, PriorKind::BondessonTfa, &data, &mut rng).unwrap();
        for _ in 0..sweeps {
            gibbs_sweep(&model, &mut state, &data, &mut rng).unwrap();
            prop_assert!(state.tau().windows(2).all(|w| w[1] <= w[0]), "{:?}", state.tau());
            prop_assert!(state.tau().iter().all(|&t| t > 0.0 && t < 1.0));
        }
    }

    #[test]
    fn aifa_joint_density_ignores_atom_labels(seed in any::<u64>(), k in 1usize..8, shuffle in any::<u64>()) {
        use rand::seq::SliceRandom;
        let model = proper(2, k);
        let mut rng = split(seed, 0);
        let state = GibbsState::sample_prior(&model, PriorKind::Aifa, 9, &mut rng).unwrap();
        let data = state.generate_data(&mut rng);
        let mut order: Vec<usize> = (0..k).collect();
        order.shuffle(&mut split(shuffle, 1));
        let moved = state.permute_atoms(&model, &order).unwrap();
        let (a, b) = (state.joint_log_density(&model, &data), moved.joint_log_density(&model, &data));
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn sweeps_are_seed_deterministic(seed in any::<u64>()) {
        let model = proper(2, 4);
        let data = Matrix::from_fn(10, 2, |i, j| ((3 * i + j) as f64).sin());
        let run = |s: u64| {
            let mut rng = split(s, 0);
            let mut st = GibbsState::initialize(&model, PriorKind::Aifa, &data, &mut rng).unwrap();
            for _ in 0..5 {
                gibbs_sweep(&model, &mut st, &data, &mut rng).unwrap();
            }
            st
        };
        prop_assert_eq!(run(seed), run(seed));
    }
}
