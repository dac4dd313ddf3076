//! Sparse multiindices over the coordinates `1, 2, ...` and lower (downward
//! closed) sets of them.
//!
//! A [`MultiIndex`] stores only its nonzero exponents, in increasing
//! coordinate order, so that indices living in infinitely many variables
//! have a finite representation. The canonical total order used everywhere
//! for deterministic output is *graded, then lexicographic*: first by total
//! degree `|nu|`, then by the dense vectors `(nu_1, nu_2, ...)` compared
//! lexicographically with the larger leading entry first, so that within a
//! degree `2e_1 < e_1+e_2 < 2e_2 < e_3`.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A finitely supported multiindex `nu = (nu_1, nu_2, ...)`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct MultiIndex {
    // (coordinate, exponent), coordinates strictly increasing, exponents >= 1
    entries: Vec<(u32, u32)>,
}

impl MultiIndex {
    /// The zero multiindex.
    pub fn zero() -> Self {
        Self::default()
    }

    /// The unit index `e_j`.
    pub fn unit(j: u32) -> Result<Self> {
        if j == 0 {
            return Err(Error::ZeroCoordinate(0));
        }
        Ok(Self { entries: vec![(j, 1)] })
    }

    /// Builds a multiindex from `(coordinate, exponent)` pairs in any order.
    ///
    /// Zero exponents are dropped and repeated coordinates are summed.
    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, u32)>,
    {
        let mut entries: Vec<(u32, u32)> = Vec::new();
        for (j, e) in pairs {
            if j == 0 {
                return Err(Error::ZeroCoordinate(j));
            }
            if e > 0 {
                entries.push((j, e));
            }
        }
        entries.sort_unstable_by_key(|&(j, _)| j);
        let mut merged: Vec<(u32, u32)> = Vec::with_capacity(entries.len());
        for (j, e) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == j => last.1 += e,
                _ => merged.push((j, e)),
            }
        }
        Ok(Self { entries: merged })
    }

    /// Builds a multiindex from a dense exponent vector, `dense[0]` being `nu_1`.
    pub fn from_dense(dense: &[u32]) -> Self {
        let entries = dense
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, &e)| (i as u32 + 1, e))
            .collect();
        Self { entries }
    }

    /// Stored `(coordinate, exponent)` pairs.
    pub fn entries(&self) -> &[(u32, u32)] {
        &self.entries
    }

    /// Exponent at coordinate `j` (zero when absent).
    pub fn get(&self, j: u32) -> u32 {
        self.entries
            .binary_search_by_key(&j, |&(c, _)| c)
            .map(|i| self.entries[i].1)
            .unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total degree `|nu|`.
    pub fn total_degree(&self) -> u64 {
        self.entries.iter().map(|&(_, e)| u64::from(e)).sum()
    }

    /// Coordinates with a nonzero exponent.
    pub fn support(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.iter().map(|&(j, _)| j)
    }

    /// Largest coordinate in the support, 0 for the zero index.
    pub fn max_coord(&self) -> u32 {
        self.entries.last().map(|&(j, _)| j).unwrap_or(0)
    }

    /// `nu + e_j`.
    pub fn plus_unit(&self, j: u32) -> Self {
        debug_assert!(j >= 1);
        let mut entries = self.entries.clone();
        match entries.binary_search_by_key(&j, |&(c, _)| c) {
            Ok(i) => entries[i].1 += 1,
            Err(i) => entries.insert(i, (j, 1)),
        }
        Self { entries }
    }

    /// `nu - e_j`, or `None` when `nu_j = 0`.
    pub fn minus_unit(&self, j: u32) -> Option<Self> {
        let i = self.entries.binary_search_by_key(&j, |&(c, _)| c).ok()?;
        let mut entries = self.entries.clone();
        if entries[i].1 == 1 {
            entries.remove(i);
        } else {
            entries[i].1 -= 1;
        }
        Some(Self { entries })
    }

    /// Dense exponent vector of length `len` (entries beyond `len` are dropped).
    pub fn to_dense(&self, len: usize) -> Vec<u32> {
        let mut out = vec![0; len];
        for &(j, e) in &self.entries {
            if (j as usize) <= len {
                out[j as usize - 1] = e;
            }
        }
        out
    }
}

impl MultiIndex {
    /// Lexicographic order on the dense vectors, larger entries first:
    /// `2e_1 < e_1+e_2 < 2e_2 < e_3 < 0`. Used to break ties between
    /// multiindices of equal weight.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.entries.iter().zip(&other.entries) {
            // a smaller first nonzero coordinate means a larger dense entry there
            let ord = a.0.cmp(&b.0).then_with(|| b.1.cmp(&a.1));
            if ord != Ordering::Equal {
                return ord;
            }
        }
        other.entries.len().cmp(&self.entries.len())
    }
}

/// Graded order: total degree first, then [`MultiIndex::lex_cmp`].
impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| self.lex_cmp(other))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    /// Text form: space separated `coord:exponent` pairs, `0` for the zero index.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return f.write_str("0");
        }
        for (i, (j, e)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{j}:{e}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MultiIndex({self})")
    }
}

impl FromStr for MultiIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "0" {
            return Ok(Self::zero());
        }
        if s.is_empty() {
            return Err(Error::Parse("empty multiindex line".into()));
        }
        let mut pairs = Vec::new();
        let mut prev = 0u32;
        for tok in s.split_whitespace() {
            let (j, e) = tok
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("expected coord:exponent, got {tok:?}")))?;
            let j: u32 = j
                .parse()
                .map_err(|_| Error::Parse(format!("bad coordinate in {tok:?}")))?;
            let e: u32 = e
                .parse()
                .map_err(|_| Error::Parse(format!("bad exponent in {tok:?}")))?;
            if j == 0 || e == 0 || j <= prev {
                return Err(Error::Parse(format!("non-canonical pair {tok:?}")));
            }
            prev = j;
            pairs.push((j, e));
        }
        Ok(Self { entries: pairs })
    }
}

/// `mu <= nu` componentwise.
pub fn leq(mu: &MultiIndex, nu: &MultiIndex) -> bool {
    mu.entries.iter().all(|&(j, e)| nu.get(j) >= e)
}

/// True iff every `nu - e_j`, `j in supp(nu)`, of every member is a member.
pub fn is_lower(candidate: &[MultiIndex]) -> bool {
    let set: HashSet<&MultiIndex> = candidate.iter().collect();
    candidate
        .iter()
        .all(|nu| nu.support().all(|j| nu.minus_unit(j).is_some_and(|p| set.contains(&p))))
}

/// A finite lower set, stored in canonical order.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LowerSet {
    members: Vec<MultiIndex>,
    lookup: HashSet<MultiIndex>,
    dimension_hint: u32,
}

impl LowerSet {
    /// Validates and canonicalizes a collection; duplicates are removed.
    pub fn new(members: Vec<MultiIndex>) -> Result<Self> {
        let members: Vec<MultiIndex> = members.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let lookup: HashSet<MultiIndex> = members.iter().cloned().collect();
        for nu in &members {
            for j in nu.support() {
                let parent = nu.minus_unit(j).expect("j in support");
                if !lookup.contains(&parent) {
                    return Err(Error::NotLower {
                        member: nu.to_string(),
                        missing: parent.to_string(),
                    });
                }
            }
        }
        Ok(Self::from_parts(members, lookup))
    }

    /// Caller guarantees the members are canonical-sorted, duplicate free and lower.
    pub(crate) fn from_sorted_unchecked(members: Vec<MultiIndex>) -> Self {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        let lookup = members.iter().cloned().collect();
        Self::from_parts(members, lookup)
    }

    fn from_parts(members: Vec<MultiIndex>, lookup: HashSet<MultiIndex>) -> Self {
        let dimension_hint = members.iter().map(MultiIndex::max_coord).max().unwrap_or(0);
        Self {
            members,
            lookup,
            dimension_hint,
        }
    }

    /// The empty set.
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn members(&self) -> &[MultiIndex] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, nu: &MultiIndex) -> bool {
        self.lookup.contains(nu)
    }

    /// Largest coordinate appearing in any member.
    pub fn dimension_hint(&self) -> u32 {
        self.dimension_hint
    }

    pub fn is_subset(&self, other: &LowerSet) -> bool {
        self.members.iter().all(|nu| other.contains(nu))
    }

    /// Serializes in the one-index-per-line text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for nu in &self.members {
            out.push_str(&nu.to_string());
            out.push('\n');
        }
        out
    }

    /// Parses the one-index-per-line text format; blank lines are skipped.
    pub fn from_text(text: &str) -> Result<Self> {
        let members = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<MultiIndex>>>()?;
        Self::new(members)
    }
}

/// Multiindices `mu` outside `lambda`, reachable as `nu + e_j` with
/// `j <= max_coord`, all of whose backward neighbours lie in `lambda`.
/// Returned in canonical order.
pub fn reduced_margin(lambda: &LowerSet, max_coord: u32) -> Vec<MultiIndex> {
    let mut out = BTreeSet::new();
    for nu in lambda.members() {
        for j in 1..=max_coord {
            let mu = nu.plus_unit(j);
            if lambda.contains(&mu) || out.contains(&mu) {
                continue;
            }
            let admissible = mu
                .support()
                .all(|i| mu.minus_unit(i).is_some_and(|p| lambda.contains(&p)));
            if admissible {
                out.insert(mu);
            }
        }
    }
    out.into_iter().collect()
}

/// Members whose removal leaves a lower set: no forward neighbour `nu + e_j`
/// (for `j <= dimension_hint + 1`) is a member.
pub fn maximal_elements(lambda: &LowerSet) -> Vec<MultiIndex> {
    let probe = lambda.dimension_hint() + 1;
    lambda
        .members()
        .iter()
        .filter(|nu| (1..=probe).all(|j| !lambda.contains(&nu.plus_unit(j))))
        .cloned()
        .collect()
}
