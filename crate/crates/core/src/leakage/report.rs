//! Leakage reports and their flat serialized form.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::bounds::{adp_leakage, baseline_bounds, k_sensitivity, loose_bound, tight_bound};
use super::distance::{aged_tv_distance_from_law, bounded_aged_correlation_detailed, temporal_delta};
use super::oracle::{oracle_leakage, OraclePath};
use crate::cmc::{aged_joint_law, AoiVector, JointKernel};
use crate::error::{CsdpError, Result};
use crate::mechanism::FranConfig;
use crate::query::{CorrelationDegree, QuerySpec};
use crate::scalar::{lit, to_f64, Scalar};

/// Inputs of the bounds at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct LeakageParams<T> {
    pub age: AoiVector,
    pub eps_c: T,
    pub degree: CorrelationDegree,
    pub query: String,
}

/// Optional parts of a report.
#[derive(Debug, Clone, Default)]
pub struct ReportOptions {
    /// Self-coupling strength, recorded as a label only.
    pub lambda: Option<f64>,
    pub baselines: bool,
    pub oracle: Option<OraclePath>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeakageReport<T> {
    pub params: LeakageParams<T>,
    pub lambda: Option<f64>,
    pub d_k: T,
    pub delta_k: T,
    pub delta_bar: T,
    pub loose_linear: T,
    pub loose_log: T,
    pub tight: T,
    pub adp: Option<T>,
    pub dp: Option<T>,
    pub ddp: Option<T>,
    pub oracle: Option<T>,
    pub oracle_hw: Option<T>,
    pub seed: Option<u64>,
    pub diagnostics: Vec<String>,
}

impl<T: Scalar> LeakageReport<T> {
    /// `min(loose_linear, loose_log)`.
    pub fn certified_loose(&self) -> T {
        self.loose_linear.min(self.loose_log)
    }

    /// Ordering violations among the reported values.
    ///
    /// Checks `tight <= loose_linear` and `oracle - half-width <= tight`;
    /// comparisons allow a relative slack of `1e-9`.
    pub fn violations(&self) -> Vec<String> {
        let slack = |v: T| lit::<T>(1e-9) * v.abs().max(T::one());
        let mut out = Vec::new();
        if self.tight > self.loose_linear + slack(self.loose_linear) {
            out.push(format!(
                "tight {} exceeds loose_linear {}",
                to_f64(self.tight),
                to_f64(self.loose_linear)
            ));
        }
        if let (Some(o), Some(hw)) = (self.oracle, self.oracle_hw) {
            if o - hw > self.tight + slack(self.tight) {
                out.push(format!(
                    "oracle {} (half-width {}) exceeds tight {}",
                    to_f64(o),
                    to_f64(hw),
                    to_f64(self.tight)
                ));
            }
        }
        out
    }

    pub fn row(&self) -> LeakageRow {
        LeakageRow {
            lambda: self.lambda,
            t: self.params.age.to_string(),
            eps_c: to_f64(self.params.eps_c),
            k: self.params.degree.get(),
            d_k: to_f64(self.d_k),
            delta_k: to_f64(self.delta_k),
            delta_bar: to_f64(self.delta_bar),
            loose_linear: to_f64(self.loose_linear),
            loose_log: to_f64(self.loose_log),
            tight: to_f64(self.tight),
            adp: self.adp.map(to_f64),
            dp: self.dp.map(to_f64),
            ddp: self.ddp.map(to_f64),
            oracle: self.oracle.map(to_f64),
            oracle_hw: self.oracle_hw.map(to_f64),
            seed: self.seed,
        }
    }
}

/// Flat record with the fixed report field names. `t` holds the AoI vector
/// joined by `;`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageRow {
    pub lambda: Option<f64>,
    pub t: String,
    pub eps_c: f64,
    pub k: usize,
    pub d_k: f64,
    pub delta_k: f64,
    pub delta_bar: f64,
    pub loose_linear: f64,
    pub loose_log: f64,
    pub tight: f64,
    pub adp: Option<f64>,
    pub dp: Option<f64>,
    pub ddp: Option<f64>,
    pub oracle: Option<f64>,
    pub oracle_hw: Option<f64>,
    pub seed: Option<u64>,
}

pub fn write_rows_csv(writer: impl Write, rows: &[LeakageRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r).map_err(|e| CsdpError::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rows_json(writer: impl Write, rows: &[LeakageRow]) -> Result<()> {
    serde_json::to_writer_pretty(writer, rows).map_err(|e| CsdpError::Io(e.to_string()))
}

/// Evaluates every bound at one parameter point.
///
/// The single-sequence ADP value uses the lag of the freshest sequence.
pub fn evaluate_leakage<T: Scalar>(
    kernel: &JointKernel<T>,
    params: &LeakageParams<T>,
    query: &QuerySpec<T>,
    options: &ReportOptions,
) -> Result<LeakageReport<T>> {
    let law = aged_joint_law(kernel, &params.age)?;
    let delta_k = aged_tv_distance_from_law(&law, params.degree)?;
    let bar = bounded_aged_correlation_detailed(&law)?;
    let d_k = k_sensitivity(query, params.degree)?;
    let loose = loose_bound(delta_k.min(T::one()), d_k, params.eps_c)?;
    let tight = tight_bound(bar.value, params.eps_c)?;
    let (adp, dp, ddp) = if options.baselines {
        let lag = params.age.ages().iter().copied().min().unwrap_or(0);
        let delta_t = temporal_delta(kernel.model(), lag)?;
        let base = baseline_bounds(params.eps_c, params.degree, query)?;
        (
            Some(adp_leakage(delta_t.min(T::one()), params.eps_c)?),
            Some(base.dp),
            Some(base.ddp),
        )
    } else {
        (None, None, None)
    };
    let mut diagnostics = bar.diagnostics;
    let (oracle, oracle_hw) = match options.oracle {
        Some(path) => {
            let config = FranConfig::new(params.age.clone(), params.eps_c, query.clone())?;
            let est = oracle_leakage(kernel, &config, path, options.seed.unwrap_or(0))?;
            diagnostics.extend(est.diagnostics);
            (Some(est.estimate), Some(est.half_width))
        }
        None => (None, None),
    };
    Ok(LeakageReport {
        params: params.clone(),
        lambda: options.lambda,
        d_k,
        delta_k,
        delta_bar: bar.value,
        loose_linear: loose.linear,
        loose_log: loose.log_form,
        tight,
        adp,
        dp,
        ddp,
        oracle,
        oracle_hw,
        seed: options.seed,
        diagnostics,
    })
}
