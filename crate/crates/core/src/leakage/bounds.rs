//! Closed-form leakage bounds.

use crate::cmc::{joint_kernel_with_cap, AoiVector, CmcModel};
use crate::error::{CsdpError, Result};
use crate::query::{CorrelationDegree, QuerySpec};
use crate::scalar::Scalar;

use super::distance::aged_tv_distance;

fn check_eps<T: Scalar>(eps_c: T) -> Result<()> {
    if !(eps_c > T::zero()) || !eps_c.is_finite() {
        return Err(CsdpError::param("eps_c", "must be positive and finite"));
    }
    Ok(())
}

fn check_unit<T: Scalar>(name: &str, v: T) -> Result<()> {
    if !(v >= T::zero() && v <= T::one()) {
        return Err(CsdpError::param(name, format!("{v} outside [0, 1]")));
    }
    Ok(())
}

/// `d(k) = s_k(f) / s_1(f)`.
pub fn k_sensitivity<T: Scalar>(query: &QuerySpec<T>, k: CorrelationDegree) -> Result<T> {
    let s1 = query.sensitivity(1)?;
    if !(s1 > T::zero()) {
        return Err(CsdpError::DegenerateQuery {
            query: query.name().to_string(),
        });
    }
    Ok(query.sensitivity(k.get())? / s1)
}

/// Both forms of the loose bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LooseBound<T> {
    /// `d(k) · Δ_k · ε_C`.
    pub linear: T,
    /// `ln(1 + Δ_k (e^{d(k) ε_C} - 1))`.
    pub log_form: T,
}

impl<T: Scalar> LooseBound<T> {
    /// The smaller of the two forms, reported as the certified budget.
    pub fn certified(&self) -> T {
        self.linear.min(self.log_form)
    }
}

pub fn loose_bound<T: Scalar>(delta_k: T, dk: T, eps_c: T) -> Result<LooseBound<T>> {
    check_unit("delta_k", delta_k)?;
    check_eps(eps_c)?;
    if !(dk >= T::one()) || !dk.is_finite() {
        return Err(CsdpError::param("dk", "must be at least 1"));
    }
    Ok(LooseBound {
        linear: dk * delta_k * eps_c,
        log_form: (delta_k * (dk * eps_c).exp_m1()).ln_1p(),
    })
}

/// `Δ̄ · ε_C`.
pub fn tight_bound<T: Scalar>(delta_bar: T, eps_c: T) -> Result<T> {
    if !(delta_bar >= T::zero()) || !delta_bar.is_finite() {
        return Err(CsdpError::param("delta_bar", "must be nonnegative and finite"));
    }
    check_eps(eps_c)?;
    Ok(delta_bar * eps_c)
}

/// Single-sequence leakage `ln(1 + Δ(t)(e^{ε_C} - 1))`.
pub fn adp_leakage<T: Scalar>(delta_t: T, eps_c: T) -> Result<T> {
    check_unit("delta_t", delta_t)?;
    check_eps(eps_c)?;
    Ok((delta_t * eps_c.exp_m1()).ln_1p())
}

/// Correlation-blind budgets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Baselines<T> {
    /// `ε_C`.
    pub dp: T,
    /// `d(k) · ε_C`.
    pub ddp: T,
}

pub fn baseline_bounds<T: Scalar>(
    eps_c: T,
    k: CorrelationDegree,
    query: &QuerySpec<T>,
) -> Result<Baselines<T>> {
    check_eps(eps_c)?;
    Ok(Baselines {
        dp: eps_c,
        ddp: k_sensitivity(query, k)? * eps_c,
    })
}

/// `d(k) · Φ(λ, A_t) · ε_C`, with `Φ` the aged TV distance on the model's joint kernel.
pub fn cmc_leakage<T: Scalar>(
    model: &CmcModel<T>,
    age: &AoiVector,
    eps_c: T,
    query: &QuerySpec<T>,
    k: CorrelationDegree,
    cap: usize,
) -> Result<T> {
    check_eps(eps_c)?;
    let kernel = joint_kernel_with_cap(model, cap)?;
    let delta = aged_tv_distance(&kernel, age, k)?;
    Ok(k_sensitivity(query, k)? * delta * eps_c)
}
