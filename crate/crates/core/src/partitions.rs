//! Exact counting for the dyadic-block sequence `rho*(1)` and for `rho(1)`.
//!
//! For `rho*(1)` every weight is a power of two, `rho*(1)^nu = 2^m` with
//! `m = sum_k k N_k(nu)` where `N_k(nu)` is the total exponent of `nu` on
//! block `I_k`. The multiindices of weight `2^m` (the set `S_m`) are thus
//! grouped by additive partitions of `m`: a partition with `N_k` parts equal
//! to `k` contributes `prod_k C(N_k - 1 + #I_k, N_k)` multiindices (balls in
//! boxes on each block).
//!
//! For `rho(1)`, `rho(1)^nu = prod (j+1)^{nu_j}` and `nu` corresponds to a
//! multiset of factors `>= 2`, so `#Lambda(1/N, rho(1))` is a sum of
//! multiplicative partition counts.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};

/// Multiplicities `(N_1, ..., N_m)` of an additive partition of `m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionVector {
    counts: Vec<u32>,
}

impl PartitionVector {
    /// `counts[k-1]` is `N_k`.
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// `sum_k k N_k`.
    pub fn weight(&self) -> u64 {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, &n)| (i as u64 + 1) * u64::from(n))
            .sum()
    }

    /// Parts in non-increasing order.
    pub fn parts(&self) -> Vec<u32> {
        let mut out = Vec::new();
        for (i, &n) in self.counts.iter().enumerate().rev() {
            out.extend(std::iter::repeat_n(i as u32 + 1, n as usize));
        }
        out
    }
}

/// Streams `Q_m`, starting from the single part `m` and moving to partitions
/// with smaller largest parts (reverse lexicographic order).
pub fn enumerate_qm(m: u32) -> QmIter {
    QmIter {
        m,
        parts: if m == 0 { Vec::new() } else { vec![m] },
        done: false,
    }
}

#[derive(Clone, Debug)]
pub struct QmIter {
    m: u32,
    parts: Vec<u32>,
    done: bool,
}

impl QmIter {
    fn advance(&mut self) {
        // rightmost part > 1
        let Some(i) = self.parts.iter().rposition(|&p| p > 1) else {
            self.done = true;
            return;
        };
        let ones = (self.parts.len() - i - 1) as u32;
        let x = self.parts[i] - 1;
        self.parts.truncate(i);
        let mut rest = ones + x + 1;
        while rest > 0 {
            let p = x.min(rest);
            self.parts.push(p);
            rest -= p;
        }
    }
}

impl Iterator for QmIter {
    type Item = PartitionVector;

    fn next(&mut self) -> Option<PartitionVector> {
        if self.done {
            return None;
        }
        let mut counts = vec![0u32; self.m as usize];
        for &p in &self.parts {
            counts[p as usize - 1] += 1;
        }
        self.advance();
        Some(PartitionVector { counts })
    }
}

/// `q(m)`, the number of additive partitions of `m`.
pub fn partition_count(m: u32) -> BigUint {
    partition_counts(m).pop().expect("nonempty")
}

/// `q(0), ..., q(m_max)`.
pub fn partition_counts(m_max: u32) -> Vec<BigUint> {
    let n = m_max as usize;
    let mut p = vec![BigUint::zero(); n + 1];
    p[0] = BigUint::one();
    for part in 1..=n {
        for t in part..=n {
            let add = p[t - part].clone();
            p[t] += add;
        }
    }
    p
}

/// `C(n, k)` exactly.
pub fn binomial(n: &BigUint, k: u64) -> BigUint {
    if *n < BigUint::from(k) {
        return BigUint::zero();
    }
    let mut acc = BigUint::one();
    // acc = C(n - k + i, i) after step i
    let base = n - BigUint::from(k);
    for i in 1..=k {
        acc = acc * (&base + BigUint::from(i)) / BigUint::from(i);
    }
    acc
}

/// Ways to place `balls` indistinguishable balls into `boxes` boxes:
/// `C(balls - 1 + boxes, balls)`.
pub fn balls_in_boxes(balls: u64, boxes: u64) -> BigUint {
    balls_in_big_boxes(balls, &BigUint::from(boxes))
}

fn balls_in_big_boxes(balls: u64, boxes: &BigUint) -> BigUint {
    assert!(!boxes.is_zero(), "balls_in_boxes: need at least one box");
    binomial(&(BigUint::from(balls) + boxes - 1u32), balls)
}

/// `#I_k`, exact for every `k`.
fn block_count(k: u32) -> BigUint {
    if k == 1 {
        BigUint::from(2u32)
    } else {
        BigUint::one() << (k - 1)
    }
}

/// `#S_m = #{nu : rho*(1)^nu = 2^m}`, summed over `Q_m`.
pub fn count_sm(m: u32) -> BigUint {
    if m == 0 {
        return BigUint::one();
    }
    let mut total = BigUint::zero();
    for pv in enumerate_qm(m) {
        let mut term = BigUint::one();
        for (i, &n) in pv.counts().iter().enumerate() {
            if n > 0 {
                term *= balls_in_big_boxes(u64::from(n), &block_count(i as u32 + 1));
            }
        }
        total += term;
    }
    total
}

/// `#Lambda(2^{-m}, rho*(1)) = sum_{k<=m} #S_k`.
pub fn exact_lambda_count(m: u32) -> BigUint {
    (0..=m).map(count_sm).sum()
}

/// `#S_0, ..., #S_{m_max}` as coefficients of `prod_k (1 - x^k)^{-#I_k}`.
///
/// Equal to [`count_sm`] term by term but computed by series
/// multiplication, so it reaches much larger `m`.
pub fn sm_series(m_max: u32) -> Vec<BigUint> {
    let n = m_max as usize;
    let mut coef = vec![BigUint::zero(); n + 1];
    coef[0] = BigUint::one();
    for k in 1..=n {
        let boxes = block_count(k as u32);
        let max_i = n / k;
        let factors: Vec<BigUint> = (0..=max_i as u64).map(|i| balls_in_big_boxes(i, &boxes)).collect();
        let mut next = vec![BigUint::zero(); n + 1];
        for (t, slot) in next.iter_mut().enumerate() {
            for (i, f) in factors.iter().enumerate().take(t / k + 1) {
                let c = &coef[t - i * k];
                if !c.is_zero() {
                    *slot += f * c;
                }
            }
        }
        coef = next;
    }
    coef
}

/// One row of the exact cardinality table for `rho*(s)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountRow {
    pub m: u32,
    /// `q(m)`.
    pub partitions: BigUint,
    /// `#S_m`.
    pub level_count: BigUint,
    /// `#Lambda(2^{-m s}, rho*(s))`, the same for every `s`.
    pub cumulative: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountTable {
    pub rows: Vec<CountRow>,
}

impl CountTable {
    /// Rows `m = 0..=m_max`.
    pub fn compute(m_max: u32) -> Self {
        let q = partition_counts(m_max);
        let mut cumulative = BigUint::zero();
        let rows = (0..=m_max)
            .map(|m| {
                let level_count = count_sm(m);
                cumulative += &level_count;
                CountRow {
                    m,
                    partitions: q[m as usize].clone(),
                    level_count,
                    cumulative: cumulative.clone(),
                }
            })
            .collect();
        Self { rows }
    }
}

/// Exact `#Lambda(2^{-m}, rho*(1))` for every `m`, grown on demand.
#[derive(Clone, Debug, Default)]
pub struct DyadicCounts {
    levels: Vec<BigUint>,
    cumulative: Vec<BigUint>,
}

impl DyadicCounts {
    pub fn new() -> Self {
        Self::default()
    }

    fn ensure(&mut self, m: u32) {
        if (m as usize) < self.levels.len() {
            return;
        }
        let target = (m + 1).max(2 * self.levels.len() as u32);
        self.levels = sm_series(target);
        let mut acc = BigUint::zero();
        self.cumulative = self
            .levels
            .iter()
            .map(|s| {
                acc += s;
                acc.clone()
            })
            .collect();
    }

    /// `#S_m`.
    pub fn level(&mut self, m: u32) -> &BigUint {
        self.ensure(m);
        &self.levels[m as usize]
    }

    /// `#Lambda(2^{-m}, rho*(1))`.
    pub fn cumulative(&mut self, m: u32) -> &BigUint {
        self.ensure(m);
        &self.cumulative[m as usize]
    }

    /// The `m` with `delta_n(rho*(s)) = 2^{-m s}`: the smallest `m` with
    /// `#Lambda(2^{-m}, rho*(1)) >= n`.
    pub fn delta_exponent(&mut self, n: &BigUint) -> u32 {
        let mut m = 0;
        while self.cumulative(m) < n {
            m += 1;
        }
        m
    }
}

/// Counts multisets of integers `>= 2` by product, memoized on
/// `(product, largest allowed factor)`.
#[derive(Debug, Default)]
pub struct FactorizationCounter {
    memo: HashMap<(u64, u64), BigUint>,
}

impl FactorizationCounter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Multisets of factors in `[2, bound]` with product `n`.
    pub fn count_bounded(&mut self, n: u64, bound: u64) -> BigUint {
        if n == 1 {
            return BigUint::one();
        }
        let bound = bound.min(n);
        if bound < 2 {
            return BigUint::zero();
        }
        if let Some(v) = self.memo.get(&(n, bound)) {
            return v.clone();
        }
        let mut divisors = Vec::new();
        let mut d = 1u64;
        while d * d <= n {
            if n.is_multiple_of(d) {
                divisors.push(d);
                if d != n / d {
                    divisors.push(n / d);
                }
            }
            d += 1;
        }
        let mut total = BigUint::zero();
        for d in divisors {
            if (2..=bound).contains(&d) {
                total += self.count_bounded(n / d, d);
            }
        }
        self.memo.insert((n, bound), total.clone());
        total
    }

    /// `mp(k)`: unordered factorizations of `k` into factors `>= 2`
    /// (`mp(1) = 1`, the empty product).
    pub fn multiplicative_partitions(&mut self, k: u64) -> BigUint {
        self.count_bounded(k, k)
    }
}

/// `#Lambda(1/N, rho(1)) = sum_{k=1}^{N} mp(k)`.
pub fn multiplicative_lambda_count(n: u64) -> BigUint {
    assert!(n >= 1, "multiplicative_lambda_count: N must be >= 1");
    let mut counter = FactorizationCounter::new();
    (1..=n).map(|k| counter.multiplicative_partitions(k)).sum()
}
