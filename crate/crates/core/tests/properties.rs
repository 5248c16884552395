use csdp::cmc::{
    aged_joint_law, build_block_matrix, evolve_distribution, joint_kernel, AoiVector, CmcModel,
    CouplingWeights, DistributionVector, StateSpace, TransitionMatrix,
};
use csdp::leakage::{adp_leakage, aged_tv_distance, bounded_aged_correlation, loose_bound, tight_bound};
use csdp::query::{brute_force_profile, builtin_queries, CorrelationDegree, QuerySpec, BuiltinQuery};
use csdp::seeds::derive_seed;
use csdp::stats::ks_two_sample;
use csdp::utility::mse_exact;
use proptest::prelude::*;

fn normalize(v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

/// Column-stochastic `m x m` matrix with strictly positive entries.
fn transition(m: usize) -> impl Strategy<Value = TransitionMatrix<f64>> {
    prop::collection::vec(prop::collection::vec(0.05f64..1.0, m), m).prop_map(move |cols| {
        let cols: Vec<Vec<f64>> = cols.into_iter().map(normalize).collect();
        let rows: Vec<Vec<f64>> = (0..m).map(|b| (0..m).map(|a| cols[a][b]).collect()).collect();
        TransitionMatrix::from_rows(&rows).unwrap()
    })
}

fn model() -> impl Strategy<Value = CmcModel<f64>> {
    (1usize..=3, 2usize..=3).prop_flat_map(|(s, m)| {
        (
            prop::collection::vec(prop::collection::vec(transition(m), s), s),
            prop::collection::vec(prop::collection::vec(0.0f64..1.0, s), s),
        )
            .prop_map(move |(trans, w)| {
                let rows: Vec<Vec<f64>> = w
                    .into_iter()
                    .map(|r| normalize(r.into_iter().map(|x| x + 0.01).collect()))
                    .collect();
                CmcModel::new(trans, CouplingWeights::from_rows(&rows).unwrap()).unwrap()
            })
    })
}

fn distribution(s: usize, m: usize) -> impl Strategy<Value = DistributionVector<f64>> {
    prop::collection::vec(prop::collection::vec(0.01f64..1.0, m), s)
        .prop_map(|b| DistributionVector::new(b.into_iter().map(normalize).collect()).unwrap())
}

fn model_and_distribution() -> impl Strategy<Value = (CmcModel<f64>, DistributionVector<f64>)> {
    model().prop_flat_map(|m| {
        let (s, k) = (m.num_sequences(), m.num_states());
        (Just(m), distribution(s, k))
    })
}

fn setup_family() -> impl Strategy<Value = (f64, f64)> {
    (0.05f64..0.45, 0.0f64..=1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn evolution_preserves_stochasticity((model, pi) in model_and_distribution()) {
        let next = evolve_distribution(&model, &pi).unwrap();
        for block in next.blocks() {
            prop_assert!((block.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(block.iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn block_matrix_agrees_with_evolution((model, pi) in model_and_distribution()) {
        let q = build_block_matrix(&model);
        let direct = q.mul_vec(&pi.stacked());
        let evolved = evolve_distribution(&model, &pi).unwrap().stacked();
        for (a, b) in direct.iter().zip(&evolved) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_step_marginals_follow_evolution((model, pi) in model_and_distribution()) {
        let kernel = joint_kernel(&model).unwrap();
        let joint = kernel.product_distribution(&pi).unwrap();
        let stepped = kernel.marginals(&kernel.apply(&joint));
        let evolved = evolve_distribution(&model, &pi).unwrap();
        for (a, b) in stepped.stacked().iter().zip(evolved.stacked()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        for a in 0..kernel.size() {
            prop_assert!((kernel.column(a).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn conditionals_are_distributions(model in model(), age in 0usize..4, skew in 0usize..3) {
        let kernel = joint_kernel(&model).unwrap();
        let s = model.num_sequences();
        let ages = AoiVector::new((0..s).map(|j| age + (j * skew) % 3).collect());
        let cond = aged_joint_law(&kernel, &ages).unwrap().conditional().unwrap();
        for x in 0..kernel.size() {
            prop_assert!((cond.column(x).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        let fresh = aged_joint_law(&kernel, &AoiVector::zeros(s)).unwrap().conditional().unwrap();
        for x in 0..kernel.size() {
            for z in 0..kernel.size() {
                prop_assert_eq!(fresh.prob(z, x), if z == x { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn distances_are_probabilities(model in model(), age in 0usize..5) {
        let kernel = joint_kernel(&model).unwrap();
        let s = model.num_sequences();
        for k in 1..=s {
            let d = aged_tv_distance(&kernel, &AoiVector::uniform(s, age), CorrelationDegree::new(k, s).unwrap()).unwrap();
            prop_assert!((0.0..=1.0 + 1e-12).contains(&d));
        }
    }

    #[test]
    fn delta_symmetric_in_self_coupling((flip, lambda) in setup_family(), t in 1usize..6) {
        let k2 = CorrelationDegree::new(2, 2).unwrap();
        let a = aged_tv_distance(&joint_kernel(&CmcModel::coupled_pair(flip, lambda).unwrap()).unwrap(), &AoiVector::uniform(2, t), k2).unwrap();
        let b = aged_tv_distance(&joint_kernel(&CmcModel::coupled_pair(flip, 1.0 - lambda).unwrap()).unwrap(), &AoiVector::uniform(2, t), k2).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn delta_two_decays_with_uniform_age((flip, lambda) in setup_family()) {
        let kernel = joint_kernel(&CmcModel::coupled_pair(flip, lambda).unwrap()).unwrap();
        let k2 = CorrelationDegree::new(2, 2).unwrap();
        let mut prev = f64::INFINITY;
        for t in 0..=8 {
            let d = aged_tv_distance(&kernel, &AoiVector::uniform(2, t), k2).unwrap();
            prop_assert!(d <= prev + 1e-12, "delta_2 rose at t={}", t);
            prev = d;
        }
    }

    #[test]
    fn delta_bar_decays_on_the_setup_chain(lambda in 0.0f64..=1.0) {
        let kernel = joint_kernel(&CmcModel::coupled_pair(0.3, lambda).unwrap()).unwrap();
        let mut prev = f64::INFINITY;
        for t in 0..=8 {
            let bar = bounded_aged_correlation(&kernel, &AoiVector::uniform(2, t)).unwrap();
            prop_assert!(bar <= prev + 1e-12, "delta_bar rose at t={}", t);
            prev = bar;
        }
    }

    #[test]
    fn bounds_scale_linearly_in_budget(delta in 0.0f64..=1.0, d in 1.0f64..3.0, eps in 0.01f64..5.0, c in 0.1f64..4.0) {
        let a = loose_bound(delta, d, eps).unwrap();
        let b = loose_bound(delta, d, c * eps).unwrap();
        prop_assert!((b.linear - c * a.linear).abs() <= 1e-12 * b.linear.max(1.0));
        let ta = tight_bound(delta, eps).unwrap();
        prop_assert!((tight_bound(delta, c * eps).unwrap() - c * ta).abs() <= 1e-12 * ta.max(1.0) * c);
        // ln(1 + Δ(e^x - 1)) >= Δx by concavity
        prop_assert!(a.log_form >= a.linear - 1e-12);
        prop_assert!(a.certified() <= a.linear);
    }

    #[test]
    fn adp_increasing_and_concave(eps in 0.05f64..5.0, lo in 0.0f64..0.9, gap in 0.01f64..0.05) {
        let (a, b, c) = (lo, lo + gap, lo + 2.0 * gap);
        let (fa, fb, fc) = (adp_leakage(a, eps).unwrap(), adp_leakage(b, eps).unwrap(), adp_leakage(c.min(1.0), eps).unwrap());
        prop_assert!(fb > fa);
        if c <= 1.0 {
            prop_assert!(fb - fa >= fc - fb - 1e-12);
        }
    }

    #[test]
    fn mse_decomposes_additively(model in model(), t1 in 0usize..5, t2 in 0usize..5, e1 in 0.1f64..5.0, e2 in 0.1f64..5.0) {
        let kernel = joint_kernel(&model).unwrap();
        let s = model.num_sequences();
        let q = QuerySpec::builtin(BuiltinQuery::Mean, model.space());
        let (a1, a2) = (AoiVector::uniform(s, t1), AoiVector::uniform(s, t2));
        let d1 = mse_exact(&kernel, &a1, &q, e1).unwrap() - mse_exact(&kernel, &a1, &q, e2).unwrap();
        let d2 = mse_exact(&kernel, &a2, &q, e1).unwrap() - mse_exact(&kernel, &a2, &q, e2).unwrap();
        prop_assert!((d1 - d2).abs() < 1e-12);
        if e1 <= e2 {
            prop_assert!(d1 >= -1e-15);
        }
    }

    #[test]
    fn aging_error_grows_with_uniform_age((flip, lambda) in setup_family()) {
        let kernel = joint_kernel(&CmcModel::coupled_pair(flip, lambda).unwrap()).unwrap();
        let q = QuerySpec::builtin(BuiltinQuery::Mean, StateSpace::new(2, 2).unwrap());
        let mut prev = 0.0;
        for t in 0..=10 {
            let m = mse_exact(&kernel, &AoiVector::uniform(2, t), &q, 1e6).unwrap();
            prop_assert!(m >= prev - 1e-12);
            prev = m;
        }
    }

    #[test]
    fn encode_decode_round_trip(s in 1usize..5, m in 2usize..5, seed in any::<u64>()) {
        let space = StateSpace::new(s, m).unwrap();
        let n = space.size().unwrap();
        let x = (seed % n as u64) as usize;
        prop_assert_eq!(space.encode(&space.decode(x)), x);
        prop_assert_eq!(space.decode(x)[0], x / m.pow(s as u32 - 1));
    }

    #[test]
    fn seed_split_is_a_function_of_its_inputs(root in any::<u64>(), a in any::<u64>(), b in -1e6f64..1e6) {
        let one = derive_seed(root, &[a.into(), b.into()]);
        prop_assert_eq!(one, derive_seed(root, &[a.into(), b.into()]));
        prop_assert_ne!(one, derive_seed(root, &[b.into(), a.into()]));
        prop_assert_ne!(one, derive_seed(root ^ 1, &[a.into(), b.into()]));
    }

    #[test]
    fn ks_statistic_is_symmetric(a in prop::collection::vec(-10.0f64..10.0, 1..60), b in prop::collection::vec(-10.0f64..10.0, 1..60)) {
        let x = ks_two_sample(&a, &b).unwrap();
        let y = ks_two_sample(&b, &a).unwrap();
        prop_assert!((x.statistic - y.statistic).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&x.statistic));
        prop_assert!((0.0..=1.0).contains(&x.p_value));
    }
}

#[test]
fn builtin_profiles_match_brute_force() {
    for s in 1..=3 {
        for m in 2..=4 {
            let space = StateSpace::new(s, m).unwrap();
            for q in builtin_queries::<f64>(space) {
                let brute = brute_force_profile(&q, 1_000_000).unwrap();
                for (i, (a, b)) in q.profile().iter().zip(&brute).enumerate() {
                    assert!((a - b).abs() < 1e-12, "{} s={s} m={m} i={}: {a} vs {b}", q.name(), i + 1);
                }
            }
        }
    }
}

#[test]
fn delta_bar_is_not_monotone_on_persistent_chains() {
    // Ratio weighting lets the bounded correlation exceed one and oscillate
    // when the chains are sticky and fully cross-coupled.
    let kernel = joint_kernel(&CmcModel::coupled_pair(0.2, 0.0).unwrap()).unwrap();
    let at = |t| bounded_aged_correlation(&kernel, &AoiVector::uniform(2, t)).unwrap();
    assert!(at(1) > at(0));
    assert!(at(3) > at(2));
}
