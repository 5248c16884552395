mod common;

use common::{close, delta_full};
use csdp::cmc::{joint_kernel, AoiVector, CmcModel, CouplingWeights, StateSpace, TransitionMatrix};
use csdp::leakage::{
    adp_leakage, aged_tv_distance, baseline_bounds, bounded_aged_correlation, cmc_leakage,
    evaluate_leakage, k_sensitivity, loose_bound, oracle_leakage, temporal_delta, tight_bound,
    write_rows_csv, LeakageParams, OraclePath, ReportOptions,
};
use csdp::mechanism::FranConfig;
use csdp::query::{BuiltinQuery, CorrelationDegree, QuerySpec};

const CAP: usize = 1_000_000;

fn mean(s: usize) -> QuerySpec<f64> {
    QuerySpec::builtin(BuiltinQuery::Mean, StateSpace::new(s, 2).unwrap())
}

fn k2() -> CorrelationDegree {
    CorrelationDegree::new(2, 2).unwrap()
}

fn single_chain(flip: f64) -> CmcModel<f64> {
    CmcModel::shared_transition(
        TransitionMatrix::symmetric_flip(flip).unwrap(),
        CouplingWeights::self_coupling(1, 1.0).unwrap(),
    )
    .unwrap()
}

#[test]
fn delta_two_matches_brute_force() {
    for lambda in [0.0, 0.2, 0.5, 0.75, 1.0] {
        let model = CmcModel::coupled_pair(0.3, lambda).unwrap();
        let kernel = joint_kernel(&model).unwrap();
        for t in 0..=5 {
            let got = aged_tv_distance(&kernel, &AoiVector::uniform(2, t), k2()).unwrap();
            let want = delta_full(&model, t);
            assert!(close(got, want, 1e-9), "lambda={lambda} t={t}: {got} vs {want}");
        }
    }
}

#[test]
fn independent_pair_decays_geometrically() {
    // Independent symmetric chains: the conditional of the changed chain is
    // the only part that moves, and it moves by |1 - 2p|^t.
    let model = CmcModel::coupled_pair(0.3, 1.0).unwrap();
    let kernel = joint_kernel(&model).unwrap();
    for t in 0..=6 {
        let d = aged_tv_distance(&kernel, &AoiVector::uniform(2, t), k2()).unwrap();
        assert!(close(d, 0.4f64.powi(t as i32), 1e-9));
        assert!(close(temporal_delta(&model, t).unwrap(), 0.4f64.powi(t as i32), 1e-9));
    }
}

#[test]
fn closed_form_bounds() {
    let lb = loose_bound(0.4, 1.0, 2.0).unwrap();
    assert!(close(lb.linear, 0.8, 1e-12));
    assert!(close(lb.log_form, (1.0 + 0.4 * (2f64.exp() - 1.0)).ln(), 1e-12));
    assert!(close(lb.log_form, 1.26853, 1e-5));
    assert!(close(lb.certified(), 0.8, 1e-12));
    assert!(close(tight_bound(0.3, 2.0).unwrap(), 0.6, 1e-12));
    assert!(close(adp_leakage(0.16, 1.0).unwrap(), 0.24289, 1e-5));
    assert!(loose_bound(1.5, 1.0, 1.0).is_err());
    assert!(tight_bound(0.5, 0.0).is_err());
}

#[test]
fn baselines_and_sensitivity() {
    let q = mean(2);
    assert!(close(k_sensitivity(&q, k2()).unwrap(), 2.0, 1e-12));
    let b = baseline_bounds(1.0, k2(), &q).unwrap();
    assert_eq!((b.dp, b.ddp), (1.0, 2.0));
    let one = CorrelationDegree::new(1, 2).unwrap();
    let b = baseline_bounds(1.5, one, &q).unwrap();
    assert_eq!(b.dp, b.ddp);
}

#[test]
fn fresh_release_leaks_full_scaled_budget() {
    let model = CmcModel::coupled_pair(0.3, 0.75).unwrap();
    let l = cmc_leakage(&model, &AoiVector::zeros(2), 1.0, &mean(2), k2(), CAP).unwrap();
    assert!(close(l, 2.0, 1e-12));
}

#[test]
fn lambda_symmetry_of_delta_two() {
    for t in 1..=4 {
        for lambda in [0.1, 0.2, 0.3, 0.4] {
            let a = cmc_leakage(&CmcModel::coupled_pair(0.3, lambda).unwrap(), &AoiVector::uniform(2, t), 1.0, &mean(2), k2(), CAP).unwrap();
            let b = cmc_leakage(&CmcModel::coupled_pair(0.3, 1.0 - lambda).unwrap(), &AoiVector::uniform(2, t), 1.0, &mean(2), k2(), CAP).unwrap();
            assert!(close(a, b, 1e-9), "t={t} lambda={lambda}");
        }
    }
}

#[test]
fn delta_bar_at_age_zero_is_one() {
    let kernel = joint_kernel(&CmcModel::coupled_pair(0.3, 0.75).unwrap()).unwrap();
    let d = bounded_aged_correlation(&kernel, &AoiVector::zeros(2)).unwrap();
    assert!(close(d, 1.0, 1e-12));
}

#[test]
fn exact_oracle_at_age_zero_equals_budget() {
    let kernel = joint_kernel(&CmcModel::coupled_pair(0.3, 0.75).unwrap()).unwrap();
    for eps in [0.5, 1.0, 3.0] {
        let cfg = FranConfig::new(AoiVector::zeros(2), eps, mean(2)).unwrap();
        let est = oracle_leakage(&kernel, &cfg, OraclePath::Exact, 0).unwrap();
        assert!(close(est.estimate, eps, 1e-9 * eps), "{eps}: {}", est.estimate);
        assert_eq!(est.half_width, 0.0);
    }
}

#[test]
fn single_chain_oracle_within_adp() {
    let model = single_chain(0.3);
    let kernel = joint_kernel(&model).unwrap();
    let cfg = FranConfig::new(AoiVector::uniform(1, 1), 1.0, mean(1)).unwrap();
    let exact = oracle_leakage(&kernel, &cfg, OraclePath::Exact, 0).unwrap();
    let adp = adp_leakage(temporal_delta(&model, 1).unwrap(), 1.0).unwrap();
    assert!(exact.estimate <= adp, "{} vs {adp}", exact.estimate);
    assert!(close(adp, (1.0 + 0.4 * (1f64.exp() - 1.0)).ln(), 1e-12));
    let sampled = oracle_leakage(&kernel, &cfg, OraclePath::Sampling { samples: 20_000 }, 5).unwrap();
    assert!(sampled.estimate <= adp + sampled.half_width);
}

#[test]
fn oracle_exceeds_tight_bound_on_coupled_setup() {
    // The exact oracle sits above Δ̄·ε_C on the coupled two-sequence setup
    // at short ages; the loose bound still dominates the oracle here.
    let kernel = joint_kernel(&CmcModel::coupled_pair(0.3, 0.75).unwrap()).unwrap();
    let params = LeakageParams {
        age: AoiVector::uniform(2, 2),
        eps_c: 1.0,
        degree: k2(),
        query: "mean".into(),
    };
    let options = ReportOptions {
        oracle: Some(OraclePath::Exact),
        ..Default::default()
    };
    let r = evaluate_leakage(&kernel, &params, &mean(2), &options).unwrap();
    let oracle = r.oracle.unwrap();
    assert!(oracle > r.tight);
    assert!(oracle <= r.certified_loose());
    assert_eq!(r.violations().len(), 1);
}

#[test]
fn sampling_oracle_is_seeded() {
    let kernel = joint_kernel(&CmcModel::coupled_pair(0.3, 0.5).unwrap()).unwrap();
    let cfg = FranConfig::new(AoiVector::uniform(2, 1), 1.0, mean(2)).unwrap();
    let path = OraclePath::Sampling { samples: 5000 };
    let a = oracle_leakage(&kernel, &cfg, path, 9).unwrap();
    let b = oracle_leakage(&kernel, &cfg, path, 9).unwrap();
    assert_eq!(a, b);
    assert!(a.half_width.is_finite() && a.half_width > 0.0);
}

#[test]
fn report_rows_serialize_with_fixed_columns() {
    let kernel = joint_kernel(&CmcModel::coupled_pair(0.3, 0.75).unwrap()).unwrap();
    let params = LeakageParams {
        age: AoiVector::new(vec![1, 2]),
        eps_c: 1.0,
        degree: k2(),
        query: "mean".into(),
    };
    let options = ReportOptions {
        lambda: Some(0.75),
        baselines: true,
        ..Default::default()
    };
    let r = evaluate_leakage(&kernel, &params, &mean(2), &options).unwrap();
    let mut buf = Vec::new();
    write_rows_csv(&mut buf, &[r.row()]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(
        header,
        "lambda,t,eps_c,k,d_k,delta_k,delta_bar,loose_linear,loose_log,tight,adp,dp,ddp,oracle,oracle_hw,seed"
    );
    assert!(text.lines().nth(1).unwrap().starts_with("0.75,1;2,1.0,2,"));
}
