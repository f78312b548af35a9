use piot_core::crossratio::{cr_equivalent, max_log_ratio_gap};
use piot_core::matrix::{cost_from_kernel, kernel_from_cost, normalize_columns};
use piot_core::priors::Alpha;
use piot_core::rng::chain_rng;
use piot_core::samplers::{initial_kernel, run_chain, MetroMc, Mhmc};
use piot_core::sinkhorn::{sinkhorn, SinkhornOptions};
use piot_core::{ChainConfig, Coupling, Kernel, Marginals, Matrix, PriorSpec, SamplerKind};
use proptest::prelude::*;

fn t3() -> Coupling {
    Coupling::from_rows(&[[0.12, 0.05, 0.09], [0.07, 0.15, 0.1], [0.11, 0.08, 0.23]]).unwrap()
}

fn steps_cfg() -> ChainConfig {
    ChainConfig {
        sigma: 0.02,
        constrained_p1: true,
        reject_kernel_ge_one: true,
        burn_in: 0,
        n_samples: 1,
        lag: 1,
        seed: 17,
        ..ChainConfig::default()
    }
}

#[test]
fn metromc_long_run_keeps_cross_ratios_and_cost_sum() {
    // close to uniform so positive costs summing to one exist
    let t = Coupling::from_rows(&[[0.11, 0.1, 0.12], [0.105, 0.115, 0.1], [0.11, 0.12, 0.12]]).unwrap();
    let prior = PriorSpec::p1(Alpha::Scalar(2.0), 1.0);
    let cfg = steps_cfg();
    let k0 = initial_kernel(&t, &prior, &cfg).unwrap();
    let mut chain = MetroMc::new(&k0, &prior, &cfg).unwrap();
    let mut rng = chain_rng(cfg.seed, 0);
    let mut accepted = 0;
    for step in 0..100_000 {
        accepted += usize::from(chain.step(&mut rng));
        if step % 1000 == 999 {
            let gap = max_log_ratio_gap(chain.log_kernel().map(f64::exp).as_ref(), t.matrix().unwrap()).unwrap();
            assert!(gap < 1e-9, "step {step}: gap {gap}");
            let cost_sum = -chain.log_kernel().sum();
            assert!((cost_sum - 1.0).abs() < 1e-9, "step {step}: cost sum {cost_sum}");
        }
    }
    assert!(accepted > 1000, "only {accepted} accepted");
}

#[test]
fn mhmc_long_run_keeps_cross_ratios() {
    let t = t3();
    let prior = PriorSpec::p2(Alpha::Scalar(1.0));
    let cfg = steps_cfg();
    let k0 = Kernel::new(t.matrix().unwrap().clone()).unwrap();
    let mut chain = Mhmc::new(&k0, &prior, &cfg).unwrap();
    let mut rng = chain_rng(cfg.seed, 0);
    for step in 0..100_000 {
        chain.step(&mut rng);
        if step % 1000 == 999 {
            let k = chain.kernel();
            let gap = max_log_ratio_gap(k.matrix(), t.matrix().unwrap()).unwrap();
            assert!(gap < 1e-9, "step {step}: gap {gap}");
            for s in k.matrix().col_sums() {
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn recorded_samples_stay_on_the_observation_subspace() {
    let t = t3();
    for (prior, kind) in [
        (PriorSpec::p1(Alpha::Scalar(1.5), 1.0), SamplerKind::MetroMc),
        (PriorSpec::p2(Alpha::Scalar(1.0)), SamplerKind::Mhmc),
        (PriorSpec::gibbs(1.0, 1.0), SamplerKind::MetroMc),
    ] {
        let cfg = ChainConfig {
            burn_in: 200,
            n_samples: 100,
            lag: 5,
            ..steps_cfg()
        };
        let out = run_chain(&t, &prior, &cfg, kind).unwrap();
        assert_eq!(out.samples.len(), 100);
        for k in &out.samples {
            assert!(cr_equivalent(k.matrix(), t.matrix().unwrap(), 1e-9).unwrap());
            let plan = sinkhorn(k, &t.marginals().unwrap(), &SinkhornOptions::default()).unwrap();
            let diff = plan
                .coupling
                .matrix()
                .unwrap()
                .max_abs_diff(&t.normalized().unwrap().matrix().unwrap().clone());
            assert!(diff < 1e-9, "{kind:?}: forward plan differs by {diff}");
        }
    }
}

fn positive(m: usize, n: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(0.05f64..2.0, m * n).prop_map(move |v| Matrix::new(m, n, v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sinkhorn_ignores_diagonal_prescaling(
        k in positive(3, 4),
        r in prop::collection::vec(0.2f64..5.0, 3),
        c in prop::collection::vec(0.2f64..5.0, 4),
    ) {
        let marg = Marginals::normalized(vec![1.0, 2.0, 3.0], vec![4.0, 1.0, 1.0, 2.0]).unwrap();
        let a = sinkhorn(&k, &marg, &SinkhornOptions::default()).unwrap();
        let b = sinkhorn(k.scale(&r, &c), &marg, &SinkhornOptions::default()).unwrap();
        prop_assert!(a.coupling.matrix().unwrap().max_abs_diff(b.coupling.matrix().unwrap()) < 1e-10);
    }

    #[test]
    fn scaled_matrices_are_equivalent(
        k in positive(3, 3),
        r in prop::collection::vec(0.2f64..5.0, 3),
        c in prop::collection::vec(0.2f64..5.0, 3),
    ) {
        prop_assert!(cr_equivalent(&k, &k.scale(&r, &c), 1e-10).unwrap());
    }

    #[test]
    fn kernel_cost_round_trip(k in prop::collection::vec(0.01f64..1.0, 9), lambda in 0.1f64..10.0) {
        let k = Kernel::new(Matrix::new(3, 3, k).unwrap()).unwrap();
        let back = kernel_from_cost(&cost_from_kernel(&k, lambda).unwrap(), lambda).unwrap();
        prop_assert!(back.matrix().max_abs_diff(k.matrix()) < 1e-12);
    }

    #[test]
    fn column_normalization_is_stochastic(k in positive(4, 3)) {
        let col = normalize_columns(&k, None).unwrap();
        for s in col.col_sums() {
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
    }
}
