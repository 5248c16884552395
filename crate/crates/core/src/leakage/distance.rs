//! Aged total-variation distances computed by exact enumeration.

use crate::cmc::{
    aged_joint_law, joint_kernel, AgedJointLaw, AoiVector, CmcModel, CouplingWeights, JointKernel,
    StateSpace,
};
use crate::error::{CsdpError, Result};
use crate::query::CorrelationDegree;
use crate::scalar::{lit, Scalar};

/// `Δ_k`: the largest total variation between aged-snapshot conditionals
/// given two current snapshots that differ in one user.
///
/// For user `i` and every set `P` of exactly `k - 1` other users, the
/// conditionals are taken on the coordinates `{i} ∪ P`; the pair agrees on
/// `P` and differs at `i`. With `k = s` this conditions on whole snapshots.
pub fn aged_tv_distance<T: Scalar>(
    kernel: &JointKernel<T>,
    age: &AoiVector,
    degree: CorrelationDegree,
) -> Result<T> {
    let law = aged_joint_law(kernel, age)?;
    aged_tv_distance_from_law(&law, degree)
}

pub fn aged_tv_distance_from_law<T: Scalar>(law: &AgedJointLaw<T>, degree: CorrelationDegree) -> Result<T> {
    // fails on zero-probability current snapshots
    law.conditional()?;
    let space = law.space();
    let s = space.num_sequences();
    let m = space.num_states();
    if degree.get() > s {
        return Err(CsdpError::param("k", format!("degree {} exceeds {s} sequences", degree.get())));
    }
    let mut best = T::zero();
    for i in 0..s {
        let others: Vec<usize> = (0..s).filter(|&j| j != i).collect();
        for partners in subsets_of_size(&others, degree.get() - 1) {
            let mut coords = partners.clone();
            coords.push(i);
            coords.sort_unstable();
            let pos_i = coords.iter().position(|&c| c == i).expect("i is in coords");
            let marg = MarginalLaw::new(law, &coords);
            let size = marg.size;
            let stride = m.pow((coords.len() - 1 - pos_i) as u32);
            for xk in 0..size {
                let digit = (xk / stride) % m;
                for v in digit + 1..m {
                    let other = xk + (v - digit) * stride;
                    let tv = marg.conditional_tv(xk, other);
                    if tv > best {
                        best = tv;
                    }
                }
            }
        }
    }
    Ok(best)
}

fn subsets_of_size(items: &[usize], size: usize) -> Vec<Vec<usize>> {
    if size == 0 {
        return vec![Vec::new()];
    }
    if items.len() < size {
        return Vec::new();
    }
    let (first, rest) = (items[0], &items[1..]);
    let mut out: Vec<Vec<usize>> = subsets_of_size(rest, size - 1)
        .into_iter()
        .map(|mut s| {
            s.insert(0, first);
            s
        })
        .collect();
    out.extend(subsets_of_size(rest, size));
    out
}

/// Joint law of `(aged, current)` restricted to a set of coordinates.
struct MarginalLaw<T> {
    size: usize,
    table: Vec<T>,
    current: Vec<T>,
}

impl<T: Scalar> MarginalLaw<T> {
    fn new(law: &AgedJointLaw<T>, coords: &[usize]) -> Self {
        let space = law.space();
        let m = space.num_states();
        let size = m.pow(coords.len() as u32);
        let n = law.size();
        let proj: Vec<usize> = (0..n).map(|x| project(&space, x, coords)).collect();
        let mut table = vec![T::zero(); size * size];
        let mut current = vec![T::zero(); size];
        for x in 0..n {
            for z in 0..n {
                let v = law.joint(z, x);
                if v != T::zero() {
                    let cell = &mut table[proj[z] * size + proj[x]];
                    *cell = *cell + v;
                }
            }
            current[proj[x]] = current[proj[x]] + law.current(x);
        }
        Self { size, table, current }
    }

    fn conditional_tv(&self, a: usize, b: usize) -> T {
        let (pa, pb) = (self.current[a], self.current[b]);
        let sum: T = (0..self.size)
            .map(|z| (self.table[z * self.size + a] / pa - self.table[z * self.size + b] / pb).abs())
            .sum();
        sum * lit(0.5)
    }
}

fn project(space: &StateSpace, x: usize, coords: &[usize]) -> usize {
    let m = space.num_states();
    coords.iter().fold(0, |acc, &j| acc * m + space.digit(x, j))
}

/// Value of `Δ̄` with the bookkeeping of excluded events.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedCorrelation<T> {
    pub value: T,
    /// Aged events `(z_i, z_{-i})` left out of a max/min for a zero denominator.
    pub excluded_events: usize,
    pub diagnostics: Vec<String>,
}

impl<T> BoundedCorrelation<T> {
    /// Whether any event was excluded from the extremes.
    pub fn exclusions_flagged(&self) -> bool {
        self.excluded_events > 0
    }
}

/// `Δ̄`: conditional-ratio-weighted total variation between `Pr[z_i | x_i]`
/// and `Pr[z_i | x_i']`.
///
/// `ḡ` is the maximum over aged events `(z_i, z_{-i})` of
/// `Pr[x_i | x_{-i}, z_{-i}] / Pr[x_i | x_{-i}] · Pr[x_{-i} | x_i, z_i] / Pr[x_{-i} | x_i]`
/// at the first snapshot; `g̲` is the minimum of the same product at the
/// second snapshot's changed coordinate `x_i'`.
pub fn bounded_aged_correlation<T: Scalar>(kernel: &JointKernel<T>, age: &AoiVector) -> Result<T> {
    Ok(bounded_aged_correlation_detailed(&aged_joint_law(kernel, age)?)?.value)
}

pub fn bounded_aged_correlation_detailed<T: Scalar>(law: &AgedJointLaw<T>) -> Result<BoundedCorrelation<T>> {
    law.conditional()?;
    let space = law.space();
    let s = space.num_sequences();
    let m = space.num_states();
    let n = law.size();
    let rest = m.pow((s - 1) as u32);
    let mut best: Option<T> = None;
    let mut excluded = 0usize;
    let mut undefined = 0usize;
    for i in 0..s {
        let others: Vec<usize> = (0..s).filter(|&j| j != i).collect();
        let split: Vec<(usize, usize)> = (0..n)
            .map(|x| (space.digit(x, i), project(&space, x, &others)))
            .collect();
        let mut px = vec![T::zero(); m * rest];
        let mut pxz_o = vec![T::zero(); m * rest * rest];
        let mut px_zi = vec![T::zero(); m * rest * m];
        for x in 0..n {
            let (xi, xo) = split[x];
            px[xi * rest + xo] = px[xi * rest + xo] + law.current(x);
            for z in 0..n {
                let v = law.joint(z, x);
                if v == T::zero() {
                    continue;
                }
                let (zi, zo) = split[z];
                let a = &mut pxz_o[(xi * rest + xo) * rest + zo];
                *a = *a + v;
                let b = &mut px_zi[(xi * rest + xo) * m + zi];
                *b = *b + v;
            }
        }
        let pxi: Vec<T> = (0..m).map(|xi| (0..rest).map(|xo| px[xi * rest + xo]).sum()).collect();
        let pxo: Vec<T> = (0..rest).map(|xo| (0..m).map(|xi| px[xi * rest + xo]).sum()).collect();
        let pxo_zo: Vec<T> = (0..rest * rest)
            .map(|c| {
                let (xo, zo) = (c / rest, c % rest);
                (0..m).map(|xi| pxz_o[(xi * rest + xo) * rest + zo]).sum()
            })
            .collect();
        let pxi_zi: Vec<T> = (0..m * m)
            .map(|c| {
                let (xi, zi) = (c / m, c % m);
                (0..rest).map(|xo| px_zi[(xi * rest + xo) * m + zi]).sum()
            })
            .collect();
        // (max, min) of the ratio product over aged events
        let extremes = |xo: usize, xi: usize, excluded: &mut usize| -> Option<(T, T)> {
            let joint = px[xi * rest + xo];
            let given_rest = joint / pxo[xo];
            let given_i = joint / pxi[xi];
            let mut out: Option<(T, T)> = None;
            for zi in 0..m {
                for zo in 0..rest {
                    let (d1, d2) = (pxo_zo[xo * rest + zo], pxi_zi[xi * m + zi]);
                    if d1 == T::zero() || d2 == T::zero() {
                        *excluded += 1;
                        continue;
                    }
                    let r1 = pxz_o[(xi * rest + xo) * rest + zo] / d1 / given_rest;
                    let r2 = px_zi[(xi * rest + xo) * m + zi] / d2 / given_i;
                    let g = r1 * r2;
                    out = Some(match out {
                        None => (g, g),
                        Some((hi, lo)) => (hi.max(g), lo.min(g)),
                    });
                }
            }
            out
        };
        for xo in 0..rest {
            let ext: Vec<Option<(T, T)>> = (0..m).map(|xi| extremes(xo, xi, &mut excluded)).collect();
            for xi in 0..m {
                for xp in 0..m {
                    if xp == xi {
                        continue;
                    }
                    let (Some((g_hi, _)), Some((_, g_lo))) = (ext[xi], ext[xp]) else {
                        undefined += 1;
                        continue;
                    };
                    let sum: T = (0..m)
                        .map(|zi| {
                            let a = pxi_zi[xi * m + zi] / pxi[xi];
                            let b = pxi_zi[xp * m + zi] / pxi[xp];
                            (g_hi * a - g_lo * b).abs()
                        })
                        .sum();
                    let tv = sum * lit(0.5);
                    best = Some(best.map_or(tv, |b: T| b.max(tv)));
                }
            }
        }
    }
    let value = best.ok_or(CsdpError::AllEventsDegenerate)?;
    let mut diagnostics = Vec::new();
    if excluded > 0 {
        diagnostics.push(format!(
            "{excluded} aged events with zero-probability conditioning excluded from the ratio extremes"
        ));
    }
    if undefined > 0 {
        diagnostics.push(format!("{undefined} neighbouring pairs skipped: every aged event degenerate"));
    }
    Ok(BoundedCorrelation {
        value,
        excluded_events: excluded,
        diagnostics,
    })
}

/// Single-sequence `Δ(t)`: the aged TV distance of each self-transition chain
/// `P^(ii)` on its own, maximized over `i`.
pub fn temporal_delta<T: Scalar>(model: &CmcModel<T>, t: usize) -> Result<T> {
    let one = CorrelationDegree::new(1, 1)?;
    let mut best = T::zero();
    for i in 0..model.num_sequences() {
        let single = CmcModel::shared_transition(
            model.transition(i, i).clone(),
            CouplingWeights::self_coupling(1, T::one())?,
        )?;
        let d = aged_tv_distance(&joint_kernel(&single)?, &AoiVector::uniform(1, t), one)?;
        best = best.max(d);
    }
    Ok(best)
}
