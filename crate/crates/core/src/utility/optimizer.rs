//! Grid search for the least-leakage release under an MSE cap.

use std::cmp::Ordering;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mse::{aging_error, noise_variance};
use crate::cmc::{aged_joint_law, joint_kernel_with_cap, AoiVector, CmcModel};
use crate::error::{CsdpError, Result};
use crate::leakage::{
    adp_leakage, aged_tv_distance_from_law, bounded_aged_correlation_detailed, k_sensitivity,
    loose_bound, temporal_delta, tight_bound,
};
use crate::query::{CorrelationDegree, QuerySpec};
use crate::scalar::{from_usize, lit, to_f64, Scalar};

/// Which CSDP bound the optimizer minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeakageKind {
    LooseLinear,
    LooseLog,
    Tight,
}

impl FromStr for LeakageKind {
    type Err = CsdpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "loose-linear" | "loose_linear" => Ok(Self::LooseLinear),
            "loose-log" | "loose_log" => Ok(Self::LooseLog),
            "tight" => Ok(Self::Tight),
            other => Err(CsdpError::param("leakage_kind", format!("unknown kind `{other}`"))),
        }
    }
}

/// Release mechanisms compared on the frontier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    /// Aging plus noise, certified by the chosen CSDP bound.
    Csdp,
    /// Aging plus noise, certified by the single-sequence temporal bound.
    Adp,
    /// Fresh data, budget `d(k) ε_C`.
    Ddp,
    /// Fresh data, budget `ε_C`.
    Dp,
}

impl Mechanism {
    pub const ALL: [Mechanism; 4] = [Self::Csdp, Self::Adp, Self::Ddp, Self::Dp];

    pub fn name(self) -> &'static str {
        match self {
            Self::Csdp => "csdp",
            Self::Adp => "adp",
            Self::Ddp => "ddp",
            Self::Dp => "dp",
        }
    }

    fn fresh_only(self) -> bool {
        matches!(self, Self::Ddp | Self::Dp)
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct UtilitySpec<T> {
    pub query: QuerySpec<T>,
    pub degree: CorrelationDegree,
    pub mse_cap: T,
    pub age_grid: Vec<AoiVector>,
    pub eps_grid: Vec<T>,
    pub leakage_kind: LeakageKind,
    pub cap: usize,
}

impl<T: Scalar> UtilitySpec<T> {
    fn validate(&self, model: &CmcModel<T>) -> Result<()> {
        if self.age_grid.is_empty() {
            return Err(CsdpError::param("age_grid", "must not be empty"));
        }
        if self.eps_grid.is_empty() {
            return Err(CsdpError::param("eps_grid", "must not be empty"));
        }
        if !(self.mse_cap > T::zero()) {
            return Err(CsdpError::param("mse_cap", "must be positive"));
        }
        if let Some(e) = self.eps_grid.iter().find(|e| !(**e > T::zero()) || !e.is_finite()) {
            return Err(CsdpError::param("eps_grid", format!("{e} is not a positive budget")));
        }
        for a in &self.age_grid {
            a.check_len(&model.space())?;
        }
        Ok(())
    }
}

/// Uniform ages `0..=max_age` for `s` sequences.
pub fn uniform_age_grid(num_sequences: usize, max_age: usize) -> Vec<AoiVector> {
    (0..=max_age).map(|t| AoiVector::uniform(num_sequences, t)).collect()
}

/// `count` log-spaced budgets from `lo` to `hi` inclusive.
pub fn log_spaced<T: Scalar>(lo: T, hi: T, count: usize) -> Vec<T> {
    if count == 1 {
        return vec![lo];
    }
    let ratio = (hi / lo).ln();
    (0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                lo * (ratio * from_usize::<T>(i) / from_usize::<T>(count - 1)).exp()
            }
        })
        .collect()
}

/// Ages 0..=20 and 25 log-spaced budgets in [0.05, 10].
pub fn default_grids<T: Scalar>(num_sequences: usize) -> (Vec<AoiVector>, Vec<T>) {
    (uniform_age_grid(num_sequences, 20), log_spaced(lit(0.05), lit(10.0), 25))
}

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint<T> {
    pub age: AoiVector,
    pub eps_c: T,
    pub leakage: T,
    pub mse: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffSolution<T> {
    pub mechanism: Mechanism,
    pub age: AoiVector,
    pub eps_c: T,
    pub leakage: T,
    pub mse: T,
    pub feasible: bool,
    /// `(l̄, optimal leakage)` pairs when the solution belongs to a sweep.
    pub frontier: Vec<(T, T)>,
}

/// Leakage of `mechanism` at every grid point, in age-major order.
pub fn evaluate_grid<T: Scalar>(
    model: &CmcModel<T>,
    spec: &UtilitySpec<T>,
    mechanism: Mechanism,
) -> Result<Vec<GridPoint<T>>> {
    spec.validate(model)?;
    let kernel = joint_kernel_with_cap(model, spec.cap)?;
    let s = model.num_sequences();
    let zero = AoiVector::zeros(s);
    let ages: Vec<AoiVector> = if mechanism.fresh_only() {
        vec![zero]
    } else {
        spec.age_grid.clone()
    };
    let d_k = k_sensitivity(&spec.query, spec.degree)?;
    let per_age = ages
        .par_iter()
        .map(|age| -> Result<Vec<GridPoint<T>>> {
            let law = aged_joint_law(&kernel, age)?;
            let aging = aging_error(&law, &spec.query);
            let coefficient = match mechanism {
                Mechanism::Csdp => match spec.leakage_kind {
                    LeakageKind::Tight => bounded_aged_correlation_detailed(&law)?.value,
                    _ => aged_tv_distance_from_law(&law, spec.degree)?,
                },
                Mechanism::Adp => {
                    let lag = age.ages().iter().copied().min().unwrap_or(0);
                    temporal_delta(model, lag)?
                }
                Mechanism::Ddp | Mechanism::Dp => T::one(),
            };
            spec.eps_grid
                .iter()
                .map(|&eps| {
                    let leakage = match mechanism {
                        Mechanism::Csdp => match spec.leakage_kind {
                            LeakageKind::LooseLinear => loose_bound(coefficient.min(T::one()), d_k, eps)?.linear,
                            LeakageKind::LooseLog => loose_bound(coefficient.min(T::one()), d_k, eps)?.log_form,
                            LeakageKind::Tight => tight_bound(coefficient, eps)?,
                        },
                        Mechanism::Adp => adp_leakage(coefficient.min(T::one()), eps)?,
                        Mechanism::Ddp => d_k * eps,
                        Mechanism::Dp => eps,
                    };
                    Ok(GridPoint {
                        age: age.clone(),
                        eps_c: eps,
                        leakage,
                        mse: aging + noise_variance(&spec.query, eps)?,
                    })
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_age.into_iter().flatten().collect())
}

// Order of preference at equal leakage: larger budget, then younger age.
fn tie_break<T: Scalar>(a: &GridPoint<T>, b: &GridPoint<T>) -> Ordering {
    b.eps_c
        .partial_cmp(&a.eps_c)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.age.cmp(&b.age))
}

/// Feasible point of least leakage, or the least-MSE point flagged infeasible.
pub fn select_optimum<T: Scalar>(
    points: &[GridPoint<T>],
    mse_cap: T,
    mechanism: Mechanism,
) -> Result<TradeoffSolution<T>> {
    let best_feasible = points
        .iter()
        .filter(|p| p.mse <= mse_cap)
        .min_by(|a, b| {
            a.leakage
                .partial_cmp(&b.leakage)
                .unwrap_or(Ordering::Equal)
                .then_with(|| tie_break(a, b))
        });
    let (point, feasible) = match best_feasible {
        Some(p) => (p, true),
        None => (
            points
                .iter()
                .min_by(|a, b| {
                    a.mse
                        .partial_cmp(&b.mse)
                        .unwrap_or(Ordering::Equal)
                        .then_with(|| a.leakage.partial_cmp(&b.leakage).unwrap_or(Ordering::Equal))
                        .then_with(|| tie_break(a, b))
                })
                .ok_or_else(|| CsdpError::param("grid", "no points to choose from"))?,
            false,
        ),
    };
    Ok(TradeoffSolution {
        mechanism,
        age: point.age.clone(),
        eps_c: point.eps_c,
        leakage: point.leakage,
        mse: point.mse,
        feasible,
        frontier: Vec::new(),
    })
}

/// Least CSDP leakage subject to `MSE <= l̄`.
pub fn solve_p1<T: Scalar>(model: &CmcModel<T>, spec: &UtilitySpec<T>) -> Result<TradeoffSolution<T>> {
    solve_mechanism(model, spec, Mechanism::Csdp)
}

pub fn solve_mechanism<T: Scalar>(
    model: &CmcModel<T>,
    spec: &UtilitySpec<T>,
    mechanism: Mechanism,
) -> Result<TradeoffSolution<T>> {
    let points = evaluate_grid(model, spec, mechanism)?;
    select_optimum(&points, spec.mse_cap, mechanism)
}

/// One row per (mechanism, cap).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierRow {
    pub mechanism: Mechanism,
    pub l_cap: f64,
    pub age: String,
    pub eps_c: f64,
    pub leakage: f64,
    pub mse: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontierTable<T> {
    pub solutions: Vec<(T, TradeoffSolution<T>)>,
}

impl<T: Scalar> FrontierTable<T> {
    pub fn rows(&self) -> Vec<FrontierRow> {
        self.solutions
            .iter()
            .map(|(cap, s)| FrontierRow {
                mechanism: s.mechanism,
                l_cap: to_f64(*cap),
                age: s.age.to_string(),
                eps_c: to_f64(s.eps_c),
                leakage: to_f64(s.leakage),
                mse: to_f64(s.mse),
                feasible: s.feasible,
            })
            .collect()
    }

    /// The solution of `mechanism` at the cap closest to `cap`.
    pub fn at(&self, mechanism: Mechanism, cap: T) -> Option<&TradeoffSolution<T>> {
        self.solutions
            .iter()
            .filter(|(_, s)| s.mechanism == mechanism)
            .min_by(|a, b| {
                (a.0 - cap)
                    .abs()
                    .partial_cmp(&(b.0 - cap).abs())
                    .unwrap_or(Ordering::Equal)
            })
            .map(|(_, s)| s)
    }

    pub fn curve(&self, mechanism: Mechanism) -> Vec<(T, T)> {
        self.solutions
            .iter()
            .filter(|(_, s)| s.mechanism == mechanism)
            .map(|(c, s)| (*c, s.leakage))
            .collect()
    }
}

pub fn write_frontier_csv(writer: impl Write, rows: &[FrontierRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r).map_err(|e| CsdpError::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Optimal leakage of every mechanism at every cap, mechanisms in
/// CSDP, ADP, DDP, DP order and caps in the given order.
pub fn tradeoff_frontier<T: Scalar>(
    model: &CmcModel<T>,
    spec: &UtilitySpec<T>,
    caps: &[T],
) -> Result<FrontierTable<T>> {
    if caps.is_empty() {
        return Err(CsdpError::param("caps", "must not be empty"));
    }
    let mut solutions = Vec::with_capacity(caps.len() * Mechanism::ALL.len());
    for mechanism in Mechanism::ALL {
        let points = evaluate_grid(model, spec, mechanism)?;
        let mut curve = Vec::with_capacity(caps.len());
        let mut row = Vec::with_capacity(caps.len());
        for &cap in caps {
            let sol = select_optimum(&points, cap, mechanism)?;
            curve.push((cap, sol.leakage));
            row.push((cap, sol));
        }
        for (_, sol) in &mut row {
            sol.frontier = curve.clone();
        }
        solutions.extend(row);
    }
    Ok(FrontierTable { solutions })
}
