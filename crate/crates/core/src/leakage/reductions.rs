//! Checks that the bounds collapse to the classical budgets on the two
//! degenerate model families.

use serde::Serialize;

use super::bounds::{adp_leakage, loose_bound, tight_bound};
use super::distance::{aged_tv_distance, bounded_aged_correlation, temporal_delta};
use crate::cmc::{joint_kernel_with_cap, AoiVector, CmcModel};
use crate::error::Result;
use crate::query::CorrelationDegree;
use crate::scalar::{to_f64, Scalar};

pub const REDUCTION_TOL: f64 = 1e-9;
pub const REDUCTION_MAX_AGE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReductionCase {
    /// Every transition column identical: snapshots are i.i.d. over time.
    IidOverTime,
    /// Diagonal coupling weights: sequences evolve independently.
    SpatiallyIndependent,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionCheck {
    pub label: String,
    pub observed: f64,
    pub expected: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionOutcome {
    pub case: ReductionCase,
    pub checks: Vec<ReductionCheck>,
}

impl ReductionOutcome {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn check(label: String, observed: f64, expected: f64) -> ReductionCheck {
    ReductionCheck {
        pass: (observed - expected).abs() <= REDUCTION_TOL * expected.abs().max(1.0),
        label,
        observed,
        expected,
    }
}

/// Runs every reduction whose hypotheses the model satisfies; a coupled,
/// temporally correlated model yields a single `NotApplicable` outcome.
pub fn verify_reductions<T: Scalar>(model: &CmcModel<T>, eps_c: T, cap: usize) -> Result<Vec<ReductionOutcome>> {
    let kernel = joint_kernel_with_cap(model, cap)?;
    let s = model.num_sequences();
    let one = CorrelationDegree::new(1, s)?;
    let eps = to_f64(eps_c);
    let mut out = Vec::new();
    if model.is_memoryless() {
        let zero = AoiVector::zeros(s);
        let delta = aged_tv_distance(&kernel, &zero, one)?;
        let loose = loose_bound(delta.min(T::one()), T::one(), eps_c)?;
        let tight = tight_bound(bounded_aged_correlation(&kernel, &zero)?, eps_c)?;
        out.push(ReductionOutcome {
            case: ReductionCase::IidOverTime,
            checks: vec![
                check("loose_linear at age 0, k = 1".into(), to_f64(loose.linear), eps),
                check("loose_log at age 0, k = 1".into(), to_f64(loose.log_form), eps),
                check("tight at age 0".into(), to_f64(tight), eps),
            ],
        });
    }
    if model.weights().is_diagonal() {
        let mut checks = Vec::new();
        for t in 0..=REDUCTION_MAX_AGE {
            let delta = aged_tv_distance(&kernel, &AoiVector::uniform(s, t), one)?;
            let loose = loose_bound(delta.min(T::one()), T::one(), eps_c)?;
            let adp = adp_leakage(temporal_delta(model, t)?.min(T::one()), eps_c)?;
            checks.push(check(format!("loose_log vs ADP at t = {t}"), to_f64(loose.log_form), to_f64(adp)));
        }
        out.push(ReductionOutcome {
            case: ReductionCase::SpatiallyIndependent,
            checks,
        });
    }
    if out.is_empty() {
        out.push(ReductionOutcome {
            case: ReductionCase::NotApplicable,
            checks: Vec::new(),
        });
    }
    Ok(out)
}
