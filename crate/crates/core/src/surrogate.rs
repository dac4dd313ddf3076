//! Functions represented by the norms of their Taylor coefficients.
//!
//! A [`SurrogateFunction`] stores `nu -> ||t_nu||` for finitely many `nu`.
//! Class norms, surrogate errors and the extremal members of the unit
//! balls `U_{rho,p}` only depend on these norms. For scalar evaluation the
//! norms are read as the (positive) coefficients themselves.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bounds::{conjugate, in_lq, tail_norm_with, EvalOptions, TailNorm};
use crate::construct::optimal_enumeration;
use crate::error::{Error, Result};
use crate::multiindex::{LowerSet, MultiIndex};
use crate::weights::WeightSequence;

pub const DEFAULT_SEED: u64 = 0x5eed_1234;
pub const DEFAULT_SAMPLES: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct SurrogateFunction {
    coeffs: BTreeMap<MultiIndex, f64>,
    generator: Option<WeightSequence>,
}

impl SurrogateFunction {
    /// Zero coefficients are dropped; negative, non-finite or repeated
    /// entries are rejected.
    pub fn new<I>(coeffs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, f64)>,
    {
        let mut map = BTreeMap::new();
        for (nu, c) in coeffs {
            if !(c >= 0.0) || !c.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "coefficient norm at {nu} must be finite and >= 0, got {c}"
                )));
            }
            if c == 0.0 {
                continue;
            }
            if map.insert(nu.clone(), c).is_some() {
                return Err(Error::InvalidArgument(format!("repeated multiindex {nu}")));
            }
        }
        Ok(Self {
            coeffs: map,
            generator: None,
        })
    }

    pub fn with_generator(mut self, seq: WeightSequence) -> Self {
        self.generator = Some(seq);
        self
    }

    pub fn generator(&self) -> Option<&WeightSequence> {
        self.generator.as_ref()
    }

    /// `(nu, ||t_nu||)` in canonical order.
    pub fn coeffs(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.coeffs.iter().map(|(k, v)| (k, *v))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `||u||* = sum ||t_nu||`.
    pub fn surrogate_norm(&self) -> f64 {
        self.coeffs.values().sum()
    }

    /// Largest coordinate touched by the support.
    pub fn dimension(&self) -> u32 {
        self.coeffs.keys().map(MultiIndex::max_coord).max().unwrap_or(0)
    }

    /// The part of `u` supported in `lambda`.
    pub fn truncate(&self, lambda: &LowerSet) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .filter(|(nu, _)| lambda.contains(nu))
                .map(|(k, v)| (k.clone(), *v))
                .collect(),
            generator: self.generator.clone(),
        }
    }

    /// `||t_nu|| <= rho^{-nu}` for every stored `nu`.
    pub fn cauchy_admissible(&self, seq: &WeightSequence) -> Result<bool> {
        for (nu, c) in &self.coeffs {
            let w = seq.weight(nu)?.inverse();
            if *c > w * (1.0 + 1e-12) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// `(sum_nu (rho^nu ||t_nu||)^p)^{1/p}`, the maximum for `p = inf`.
pub fn class_norm(u: &SurrogateFunction, seq: &WeightSequence, p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::InvalidArgument(format!("p must be positive, got {p}")));
    }
    let mut scaled = Vec::with_capacity(u.len());
    for (nu, c) in u.coeffs() {
        scaled.push(seq.weight(nu)?.log2_value.exp2() * c);
    }
    Ok(if p.is_infinite() {
        scaled.into_iter().fold(0.0, f64::max)
    } else {
        scaled.iter().map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p)
    })
}

/// `E*_Lambda(u) = sum_{nu not in Lambda} ||t_nu||`.
pub fn surrogate_error(u: &SurrogateFunction, lambda: &LowerSet) -> f64 {
    u.coeffs().filter(|(nu, _)| !lambda.contains(nu)).map(|(_, c)| c).sum()
}

/// A worst-case member of `U_{rho,p}` for the optimal set `Lambda_n`,
/// materialized on the `budget` heaviest indices outside `Lambda_n`.
#[derive(Clone, Debug)]
pub struct ExtremalInstance {
    pub function: SurrogateFunction,
    pub lambda: LowerSet,
    pub p: f64,
    pub q: f64,
    /// `E*_{Lambda_n}` of `function`.
    pub surrogate_error: f64,
    /// `delta_{n,q}`.
    pub class_error: TailNorm,
    /// `delta_{n+budget,q}`, the `l_q` norm of the weights left out.
    pub truncation_remainder: TailNorm,
}

impl ExtremalInstance {
    /// `delta_{n,q} - E*`.
    pub fn truncation_gap(&self) -> f64 {
        self.class_error.value.value - self.surrogate_error
    }

    /// Certified upper bound on `delta_{n,q} - E*`.
    ///
    /// The kept coefficients realize `E*^q = delta_{n,q}^q - delta_{n+budget,q}^q`
    /// (for `q = inf`, `E* = delta_{n+1}` exactly).
    pub fn truncation_bound(&self) -> f64 {
        let d = &self.class_error.value;
        if self.q.is_infinite() {
            return d.error;
        }
        let r = &self.truncation_remainder.value;
        let kept = (d.lower().max(0.0).powf(self.q) - r.upper().powf(self.q)).max(0.0);
        d.upper() - kept.powf(1.0 / self.q)
    }

    /// `0 <= delta_{n,q} - E* <= truncation_bound()`, up to rounding.
    pub fn within_remainder(&self) -> bool {
        let slack = 1e-12 * self.class_error.value.value.abs();
        let c = &self.class_error.value;
        self.surrogate_error <= c.upper() + slack && c.value - self.surrogate_error <= self.truncation_bound() + slack
    }
}

pub fn extremal_instance(seq: &WeightSequence, p: f64, n: usize, budget: usize) -> Result<ExtremalInstance> {
    extremal_instance_with(seq, p, n, budget, &EvalOptions::default())
}

pub fn extremal_instance_with(
    seq: &WeightSequence,
    p: f64,
    n: usize,
    budget: usize,
    opts: &EvalOptions,
) -> Result<ExtremalInstance> {
    let q = conjugate(p)?;
    if budget == 0 {
        return Err(Error::InvalidArgument("support budget must be >= 1".into()));
    }
    if !in_lq(seq, q) {
        return Err(Error::TailDiverges(format!("delta_(n,{q}) is infinite for {seq}")));
    }
    let (head, _) = optimal_enumeration(seq, n + budget, &opts.build)?;
    let mut inside: Vec<MultiIndex> = head[..n].iter().map(|(nu, _)| nu.clone()).collect();
    inside.sort();
    let lambda = LowerSet::new(inside)?;
    let tail = &head[n..];

    let coeffs: Vec<(MultiIndex, f64)> = if q.is_infinite() {
        let (nu, w) = &tail[0];
        vec![(nu.clone(), w.inverse())]
    } else if p.is_infinite() {
        tail.iter().map(|(nu, w)| (nu.clone(), w.inverse())).collect()
    } else {
        // ||t_nu|| = w^q / (sum w^q)^{1/p}
        let wq: Vec<f64> = tail.iter().map(|(_, w)| (-q * w.log2_value).exp2()).collect();
        let total: f64 = wq.iter().sum();
        let scale = total.powf(-1.0 / p);
        tail.iter()
            .zip(&wq)
            .map(|((nu, _), v)| (nu.clone(), v * scale))
            .collect()
    };
    let function = SurrogateFunction::new(coeffs)?.with_generator(seq.clone());
    let err = surrogate_error(&function, &lambda);
    let class_error = tail_norm_with(seq, n, q, opts)?;
    let truncation_remainder = tail_norm_with(seq, n + budget, q, opts)?;
    Ok(ExtremalInstance {
        function,
        lambda,
        p,
        q,
        surrogate_error: err,
        class_error,
        truncation_remainder,
    })
}

/// `sum_nu t_nu y^nu` with scalar coefficients `t_nu = ||t_nu||`;
/// coordinates beyond `y.len()` read as 0.
pub fn evaluate_taylor(u: &SurrogateFunction, y: &[f64]) -> Result<f64> {
    if let Some((i, v)) = y.iter().enumerate().find(|(_, v)| !(v.abs() <= 1.0)) {
        return Err(Error::OutsideY {
            coord: i + 1,
            value: *v,
        });
    }
    let mut total = 0.0;
    'terms: for (nu, c) in u.coeffs() {
        let mut m = c;
        for &(j, e) in nu.entries() {
            match y.get(j as usize - 1) {
                Some(v) => m *= v.powi(e as i32),
                None => continue 'terms,
            }
        }
        total += m;
    }
    Ok(total)
}

/// Largest observed `|u(y) - u_Lambda(y)|` over uniform samples of `Y`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MonteCarloReport {
    pub seed: u64,
    pub samples: usize,
    pub sup_error: f64,
    pub surrogate_error: f64,
}

impl MonteCarloReport {
    pub fn dominated(&self) -> bool {
        self.sup_error <= self.surrogate_error * (1.0 + 1e-12) + 1e-15
    }
}

pub fn monte_carlo_error(
    u: &SurrogateFunction,
    lambda: &LowerSet,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloReport> {
    let dim = u.dimension() as usize;
    let truncated = u.truncate(lambda);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = vec![0.0; dim];
    let mut sup: f64 = 0.0;
    for _ in 0..samples {
        for v in y.iter_mut() {
            *v = rng.gen_range(-1.0..=1.0);
        }
        let diff = evaluate_taylor(u, &y)? - evaluate_taylor(&truncated, &y)?;
        sup = sup.max(diff.abs());
    }
    Ok(MonteCarloReport {
        seed,
        samples,
        sup_error: sup,
        surrogate_error: surrogate_error(u, lambda),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::{build_lambda_n, delta_sequence};

    fn mi(d: &[u32]) -> MultiIndex {
        MultiIndex::from_dense(d)
    }

    #[test]
    fn class_norm_examples() {
        let dy = WeightSequence::dyadic(1.0).unwrap();
        let u = SurrogateFunction::new([(MultiIndex::zero(), 1.0)]).unwrap();
        for p in [0.5, 1.0, 2.0, f64::INFINITY] {
            assert_eq!(class_norm(&u, &dy, p).unwrap(), 1.0);
        }
        let nus = [mi(&[1]), mi(&[0, 1]), mi(&[0, 0, 1]), mi(&[2, 1])];
        let u = SurrogateFunction::new(nus.iter().map(|nu| (nu.clone(), dy.weight(nu).unwrap().inverse()))).unwrap();
        assert_eq!(class_norm(&u, &dy, f64::INFINITY).unwrap(), 1.0);
        assert!((class_norm(&u, &dy, 1.0).unwrap() - 4.0).abs() < 1e-14);
        assert!(u.cauchy_admissible(&dy).unwrap());
    }

    #[test]
    fn surrogate_error_examples() {
        let u = SurrogateFunction::new([(MultiIndex::zero(), 1.0), (mi(&[1]), 0.5), (mi(&[0, 1]), 0.25)]).unwrap();
        let full = LowerSet::new(vec![MultiIndex::zero(), mi(&[1]), mi(&[0, 1])]).unwrap();
        assert_eq!(surrogate_error(&u, &full), 0.0);
        assert_eq!(surrogate_error(&u, &LowerSet::empty()), 1.75);
        assert_eq!(u.surrogate_norm(), 1.75);
    }

    #[test]
    fn rejects_bad_coefficients() {
        assert!(SurrogateFunction::new([(MultiIndex::zero(), -1.0)]).is_err());
        assert!(SurrogateFunction::new([(MultiIndex::zero(), f64::NAN)]).is_err());
        assert!(SurrogateFunction::new([(MultiIndex::zero(), 1.0), (MultiIndex::zero(), 2.0)]).is_err());
    }

    #[test]
    fn extremal_p1_is_exact() {
        let dy = WeightSequence::dyadic(1.0).unwrap();
        let inst = extremal_instance(&dy, 1.0, 3, 1).unwrap();
        assert_eq!(inst.function.len(), 1);
        let (nu, c) = inst.function.coeffs().next().unwrap();
        assert_eq!(c, 0.25);
        assert_eq!(dy.weight(nu).unwrap().inverse(), 0.25);
        assert_eq!(inst.surrogate_error, 0.25);
        assert_eq!(inst.class_error.value.value, 0.25);
        assert_eq!(class_norm(&inst.function, &dy, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn extremal_p_inf_partial_sums() {
        let poly = WeightSequence::poly(2.0).unwrap();
        let d = delta_sequence(&poly, 40).unwrap();
        let mut prev = 0.0;
        for k in [1, 5, 10, 40] {
            let inst = extremal_instance(&poly, f64::INFINITY, 0, k).unwrap();
            let partial: f64 = d.values()[..k].iter().sum();
            assert!((inst.surrogate_error - partial).abs() < 1e-14);
            assert!(inst.surrogate_error > prev);
            assert!(inst.surrogate_error <= inst.class_error.value.upper());
            assert!(class_norm(&inst.function, &poly, f64::INFINITY).unwrap() <= 1.0 + 1e-12);
            prev = inst.surrogate_error;
        }
    }

    #[test]
    fn extremal_p2_close_to_tail() {
        let dy2 = WeightSequence::dyadic(2.0).unwrap();
        let inst = extremal_instance(&dy2, 2.0, 8, 200).unwrap();
        assert!(inst.within_remainder());
        // the 200 indices after Lambda_8 stop inside the level 2^{-12}
        // for q = 2 the omitted weights satisfy E*^2 + r^2 = delta^2
        let d = inst.class_error.value.value;
        let r = inst.truncation_remainder.value.value;
        let oracle = d - (d * d - r * r).sqrt();
        assert!(
            (inst.truncation_gap() - oracle).abs() < 1e-10,
            "{} vs {oracle}",
            inst.truncation_gap()
        );
        assert!(inst.truncation_gap() > 1e-6);
        assert!(inst.truncation_bound() >= inst.truncation_gap());
        assert!(inst.truncation_bound() < inst.truncation_gap() + 1e-10);
        assert!((class_norm(&inst.function, &dy2, 2.0).unwrap() - 1.0).abs() < 1e-12);
        let (l8, _) = build_lambda_n(&dy2, 8).unwrap();
        assert_eq!(inst.lambda, l8);
    }

    #[test]
    fn extremal_rejects_divergent_tail() {
        let dy = WeightSequence::dyadic(1.0).unwrap();
        assert!(matches!(
            extremal_instance(&dy, f64::INFINITY, 3, 10),
            Err(Error::TailDiverges(_))
        ));
    }

    #[test]
    fn evaluate_examples() {
        let c = SurrogateFunction::new([(MultiIndex::zero(), 1.0)]).unwrap();
        assert_eq!(evaluate_taylor(&c, &[0.3, -0.7]).unwrap(), 1.0);
        assert_eq!(evaluate_taylor(&c, &[]).unwrap(), 1.0);
        let lin = SurrogateFunction::new([(mi(&[1]), 0.5)]).unwrap();
        assert_eq!(evaluate_taylor(&lin, &[1.0]).unwrap(), 0.5);
        assert_eq!(evaluate_taylor(&lin, &[-1.0]).unwrap(), -0.5);
        assert_eq!(evaluate_taylor(&lin, &[]).unwrap(), 0.0);
        assert!(matches!(
            evaluate_taylor(&lin, &[0.0, 1.5]),
            Err(Error::OutsideY { coord: 2, .. })
        ));
    }

    #[test]
    fn monte_carlo_is_dominated_and_reproducible() {
        let dy = WeightSequence::dyadic(1.0).unwrap();
        let inst = extremal_instance(&dy, f64::INFINITY, 0, 1).unwrap_err();
        assert!(matches!(inst, Error::TailDiverges(_)));
        let poly = WeightSequence::poly(2.0).unwrap();
        let inst = extremal_instance(&poly, f64::INFINITY, 3, 30).unwrap();
        let all = SurrogateFunction::new(
            inst.function
                .coeffs()
                .map(|(nu, c)| (nu.clone(), c))
                .chain([(MultiIndex::zero(), 1.0)]),
        )
        .unwrap();
        let a = monte_carlo_error(&all, &inst.lambda, 2000, 7).unwrap();
        let b = monte_carlo_error(&all, &inst.lambda, 2000, 7).unwrap();
        assert_eq!(a.sup_error, b.sup_error);
        assert!(a.dominated());
        assert!(a.sup_error > 0.0);
    }
}
