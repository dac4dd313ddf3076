//! Construction of the lower sets `Lambda(eps, rho) = {nu : rho^nu <= 1/eps}`
//! and of the budgeted optimal sets `Lambda_n`, together with the decreasing
//! rearrangement `delta_1 >= delta_2 >= ...` of `(rho^{-nu})`.
//!
//! `Lambda(eps, rho)` is built level by level: level `i` holds the members of
//! total degree `i`, and level `i+1` is obtained by trying `nu + e_j` for
//! every `nu` of level `i` and `j <= D(eps)`. Because `rho` is non-decreasing
//! the scan over `j` stops at the first rejected child.

use std::cmp::Ordering;
use std::collections::hash_map::Entry;
use std::collections::HashMap;

use log::warn;

use crate::error::{Error, Result};
use crate::multiindex::{is_lower, LowerSet, MultiIndex};
use crate::weights::{SequenceKind, WeightSequence, WeightValue, TIE_TOL};

/// Default cap on the number of indices a construction may produce.
pub const DEFAULT_MEM_CAP: usize = 100_000_000;

#[derive(Clone, Copy, Debug)]
pub struct BuildOptions {
    pub mem_cap: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            mem_cap: DEFAULT_MEM_CAP,
        }
    }
}

/// A member of an index set together with its weight `rho^nu`.
pub type Weighted = (MultiIndex, WeightValue);

/// `Lambda(eps, rho)` in canonical order.
pub fn build_lambda(seq: &WeightSequence, eps: f64) -> Result<LowerSet> {
    build_lambda_with(seq, eps, &BuildOptions::default())
}

pub fn build_lambda_with(seq: &WeightSequence, eps: f64, opts: &BuildOptions) -> Result<LowerSet> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    if eps > 1.0 {
        warn!("eps = {eps} > 1: no multiindex satisfies rho^nu <= 1/eps");
        return Ok(LowerSet::empty());
    }
    let members = build_weighted(seq, -eps.log2(), opts)?
        .into_iter()
        .map(|(nu, _)| nu)
        .collect();
    Ok(LowerSet::from_sorted_unchecked(members))
}

/// `Lambda` for the threshold `rho^nu <= 2^t`, members paired with weights,
/// in canonical order.
pub fn build_weighted(seq: &WeightSequence, t: f64, opts: &BuildOptions) -> Result<Vec<Weighted>> {
    if t < -TIE_TOL {
        return Ok(Vec::new());
    }
    if let SequenceKind::DyadicBlocks { s } = seq.kind() {
        let m = ((t + TIE_TOL) / s).floor();
        // #Lambda(2^{-m}, rho*(1)) <= 2^{m + 4 sqrt(m)}
        let estimate = if m < 1.0 { 1.0 } else { (m + 4.0 * m.sqrt()).exp2() };
        if estimate > opts.mem_cap as f64 {
            return Err(Error::MemoryCap {
                cap: opts.mem_cap,
                estimate,
            });
        }
    }
    let d = seq.truncation_dimension_log2(t)?;
    let is_float = matches!(seq.kind(), SequenceKind::Custom { .. });

    let mut level: Vec<Weighted> = vec![(MultiIndex::zero(), WeightValue::one(seq))];
    let mut all: Vec<Weighted> = level.clone();
    loop {
        let mut next: HashMap<MultiIndex, WeightValue> = HashMap::new();
        for (nu, w) in &level {
            for j in 1..=d {
                let child = seq.child_weight(w, j)?;
                if !child.within(t) {
                    break;
                }
                let mu = nu.plus_unit(j as u32);
                if let Entry::Vacant(slot) = next.entry(mu) {
                    let child = if is_float { seq.weight(slot.key())? } else { child };
                    slot.insert(child);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        if all.len() + next.len() > opts.mem_cap {
            return Err(Error::MemoryCap {
                cap: opts.mem_cap,
                estimate: (all.len() + next.len()) as f64,
            });
        }
        let mut next: Vec<Weighted> = next.into_iter().collect();
        next.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        all.extend(next.iter().cloned());
        level = next;
    }
    Ok(all)
}

/// One group of equal consecutive values in a [`DeltaSequence`].
#[derive(Clone, Debug, PartialEq)]
pub struct TieClass {
    /// `rho^{-nu}` shared by the class.
    pub value: f64,
    /// `log2 rho^nu` shared by the class.
    pub log2_weight: f64,
    /// 0-based position of the first member in the sequence.
    pub start: usize,
    /// Members present up to the horizon.
    pub len: usize,
    /// Number of `nu` in `F` carrying this value.
    pub multiplicity: usize,
}

/// `delta_1, ..., delta_horizon`, the largest values of `(rho^{-nu})` with
/// multiplicity.
#[derive(Clone, Debug)]
pub struct DeltaSequence {
    values: Vec<f64>,
    weights: Vec<WeightValue>,
    tie_classes: Vec<TieClass>,
    generator: WeightSequence,
}

impl DeltaSequence {
    /// Values `delta_1..delta_horizon` (index 0 is `delta_1`).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `delta_n` for `1 <= n <= horizon`.
    pub fn get(&self, n: usize) -> Option<f64> {
        n.checked_sub(1).and_then(|i| self.values.get(i)).copied()
    }

    /// `rho^nu` behind each value.
    pub fn weights(&self) -> &[WeightValue] {
        &self.weights
    }

    pub fn tie_classes(&self) -> &[TieClass] {
        &self.tie_classes
    }

    pub fn generator(&self) -> &WeightSequence {
        &self.generator
    }

    /// The `n` up to which values are complete.
    pub fn horizon(&self) -> usize {
        self.values.len()
    }
}

/// The first `count` multiindices of `F` ordered by decreasing `rho^{-nu}`,
/// ties broken by [`MultiIndex::lex_cmp`], together with the full set they were
/// selected from (which contains the whole tie class of the last entry).
pub fn optimal_enumeration(
    seq: &WeightSequence,
    count: usize,
    opts: &BuildOptions,
) -> Result<(Vec<Weighted>, Vec<Weighted>)> {
    let mut all = threshold_covering(seq, count, opts)?;
    all.sort_by(|a, b| a.1.compare(&b.1).then_with(|| a.0.lex_cmp(&b.0)));
    let head = all[..count.min(all.len())].to_vec();
    Ok((head, all))
}

/// Smallest `Lambda` on the threshold ladder with at least `count` members.
fn threshold_covering(seq: &WeightSequence, count: usize, opts: &BuildOptions) -> Result<Vec<Weighted>> {
    // dyadic thresholds 2^{-m s}; otherwise successive halving of eps
    let step = match seq.kind() {
        SequenceKind::DyadicBlocks { s } => *s,
        _ => 1.0,
    };
    let mut k = 0u32;
    loop {
        let set = build_weighted(seq, step * f64::from(k), opts)?;
        if set.len() >= count {
            return Ok(set);
        }
        k += 1;
    }
}

/// `delta_1, ..., delta_{n_max}`.
pub fn delta_sequence(seq: &WeightSequence, n_max: usize) -> Result<DeltaSequence> {
    delta_sequence_with(seq, n_max, &BuildOptions::default())
}

pub fn delta_sequence_with(seq: &WeightSequence, n_max: usize, opts: &BuildOptions) -> Result<DeltaSequence> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be >= 1".into()));
    }
    let (head, all) = optimal_enumeration(seq, n_max, opts)?;
    Ok(make_delta(seq, &head, &all))
}

fn make_delta(seq: &WeightSequence, head: &[Weighted], all: &[Weighted]) -> DeltaSequence {
    let weights: Vec<WeightValue> = head.iter().map(|(_, w)| w.clone()).collect();
    let mut values: Vec<f64> = weights.iter().map(WeightValue::inverse).collect();
    let mut tie_classes: Vec<TieClass> = Vec::new();
    let mut start = 0;
    while start < weights.len() {
        let w = &weights[start];
        let len = weights[start..]
            .iter()
            .take_while(|x| x.compare(w) == Ordering::Equal)
            .count();
        let multiplicity = if start + len == weights.len() {
            all.iter().filter(|(_, x)| x.compare(w) == Ordering::Equal).count()
        } else {
            len
        };
        // members tied within tolerance can differ in the last bits; they share one value
        let shared = values[start];
        values[start..start + len].fill(shared);
        tie_classes.push(TieClass {
            value: values[start],
            log2_weight: w.log2_value,
            start,
            len,
            multiplicity,
        });
        start += len;
    }
    DeltaSequence {
        values,
        weights,
        tie_classes,
        generator: seq.clone(),
    }
}

/// The optimal lower set `Lambda_n` of cardinality `n`: every `nu` with
/// `rho^{-nu} > delta_n`, completed from the tie class of `delta_n` in
/// canonical order.
pub fn build_lambda_n(seq: &WeightSequence, n: usize) -> Result<(LowerSet, DeltaSequence)> {
    build_lambda_n_with(seq, n, &BuildOptions::default())
}

pub fn build_lambda_n_with(seq: &WeightSequence, n: usize, opts: &BuildOptions) -> Result<(LowerSet, DeltaSequence)> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    let (head, all) = optimal_enumeration(seq, n, opts)?;
    let delta = make_delta(seq, &head, &all);
    let mut members: Vec<MultiIndex> = head.into_iter().map(|(nu, _)| nu).collect();
    members.sort();
    debug_assert!(is_lower(&members));
    Ok((LowerSet::from_sorted_unchecked(members), delta))
}
