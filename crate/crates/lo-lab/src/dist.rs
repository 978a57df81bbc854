//! Distribution and concentration probability of `S = Σ η_i v_i`.
//!
//! Two backends share the same iterated two-point convolution over a
//! dense array of width `2Σ|v_i| + 1`:
//!
//! * exact — arbitrary-precision sign-vector counts; the weight at `s`
//!   is `count(s) / 2^n` with no rounding anywhere;
//! * float — probabilities directly, `O(n · Σ|v_i|)` time, for the
//!   asymptotic experiments where `n` runs into the hundreds.

use num::bigint::BigInt;
use num::rational::Ratio;
use num::{BigUint, One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::rational_string;
use crate::steps::StepSet;

pub type BigRational = Ratio<BigInt>;

/// Refuse supports wider than this (indexing/memory guardrail).
pub const MAX_SUPPORT_WIDTH: u128 = (1 << 26) + 1;

fn support_width(v: &StepSet) -> Result<usize> {
    let width = 2 * v.abs_sum() + 1;
    if width > MAX_SUPPORT_WIDTH {
        return Err(Error::Capacity(format!(
            "support width {width} exceeds {MAX_SUPPORT_WIDTH}; instance is beyond the dense backends"
        )));
    }
    Ok(width as usize)
}

/// Exact distribution of `S`: `counts[t]` sign vectors hit `offset + t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactDistribution {
    offset: i64,
    counts: Vec<BigUint>,
    n: usize,
}

impl ExactDistribution {
    /// Iterated two-point convolution with arbitrary-precision counts.
    pub fn compute(v: &StepSet) -> Result<Self> {
        let width = support_width(v)?;
        let center = width / 2;
        let mut counts = vec![BigUint::zero(); width];
        counts[center] = BigUint::one();
        for &step in v.steps() {
            let a = step.unsigned_abs() as usize;
            if a == 0 {
                // zero step: both signs land on the same sum
                for c in counts.iter_mut() {
                    *c *= 2u32;
                }
                continue;
            }
            let mut next = vec![BigUint::zero(); width];
            for i in 0..width {
                if counts[i].is_zero() {
                    continue;
                }
                if i >= a {
                    next[i - a] += &counts[i];
                }
                if i + a < width {
                    next[i + a] += &counts[i];
                }
            }
            counts = next;
        }
        Ok(ExactDistribution {
            offset: -(v.abs_sum() as i64),
            counts,
            n: v.n(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Smallest representable support value (`−Σ|v_i|`).
    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn counts(&self) -> &[BigUint] {
        &self.counts
    }

    /// Number of sign vectors with `S = s`; zero outside the support.
    pub fn count_at(&self, s: i64) -> BigUint {
        let idx = s - self.offset;
        if idx < 0 || idx as usize >= self.counts.len() {
            BigUint::zero()
        } else {
            self.counts[idx as usize].clone()
        }
    }

    /// Exact `P(S = s)`.
    pub fn weight_at(&self, s: i64) -> BigRational {
        ratio(self.count_at(s), self.n)
    }

    /// `Σ_s P(S = s)`, exactly.
    pub fn total_mass(&self) -> BigRational {
        let total: BigUint = self.counts.iter().sum();
        ratio(total, self.n)
    }

    /// Maximal point mass and every point attaining it, in increasing order.
    pub fn rho(&self) -> RhoResult {
        let max = self.counts.iter().max().cloned().unwrap_or_default();
        let argmax = self
            .counts
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == max)
            .map(|(i, _)| self.offset + i as i64)
            .collect();
        RhoResult {
            rho: ratio(max, self.n),
            argmax,
        }
    }

    /// Support points with nonzero mass, increasing.
    pub fn support_points(&self) -> Vec<i64> {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, _)| self.offset + i as i64)
            .collect()
    }
}

fn ratio(count: BigUint, n: usize) -> BigRational {
    let denom = BigUint::one() << n;
    Ratio::new(BigInt::from(count), BigInt::from(denom))
}

/// Float-backed distribution for large `n`. Never renormalizes; mass
/// conservation is checked at construction.
#[derive(Debug, Clone)]
pub struct FloatDistribution {
    offset: i64,
    probs: Vec<f64>,
    n: usize,
}

/// Construction asserts `|Σ weights − 1| ≤` this.
pub const MASS_TOLERANCE: f64 = 1e-12;

impl FloatDistribution {
    pub fn compute(v: &StepSet) -> Result<Self> {
        let width = support_width(v)?;
        let center = width / 2;
        let mut probs = vec![0.0f64; width];
        probs[center] = 1.0;
        let mut scratch = vec![0.0f64; width];
        for &step in v.steps() {
            let a = step.unsigned_abs() as usize;
            if a == 0 {
                continue; // identity convolution
            }
            scratch.iter_mut().for_each(|x| *x = 0.0);
            for i in 0..width {
                let w = probs[i];
                if w == 0.0 {
                    continue;
                }
                if i >= a {
                    scratch[i - a] += 0.5 * w;
                }
                if i + a < width {
                    scratch[i + a] += 0.5 * w;
                }
            }
            std::mem::swap(&mut probs, &mut scratch);
        }
        let dist = FloatDistribution {
            offset: -(v.abs_sum() as i64),
            probs,
            n: v.n(),
        };
        let drift = (dist.total_mass() - 1.0).abs();
        if drift > MASS_TOLERANCE {
            return Err(Error::InvariantViolation(format!(
                "float backend lost mass: |Σw − 1| = {drift:.3e}"
            )));
        }
        Ok(dist)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn weight_at(&self, s: i64) -> f64 {
        let idx = s - self.offset;
        if idx < 0 || idx as usize >= self.probs.len() {
            0.0
        } else {
            self.probs[idx as usize]
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Maximal point mass and all points attaining it exactly (bitwise
    /// equal f64), in increasing order.
    pub fn rho(&self) -> (f64, Vec<i64>) {
        let max = self.probs.iter().cloned().fold(0.0f64, f64::max);
        let argmax = self
            .probs
            .iter()
            .enumerate()
            .filter(|(_, p)| **p == max)
            .map(|(i, _)| self.offset + i as i64)
            .collect();
        (max, argmax)
    }
}

/// The concentration probability `ρ(V)` with its attaining points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RhoResult {
    #[serde(with = "rational_string")]
    pub rho: BigRational,
    pub argmax: Vec<i64>,
}

/// `ρ(V)` on the exact backend.
pub fn rho(v: &StepSet) -> Result<RhoResult> {
    Ok(ExactDistribution::compute(v)?.rho())
}

/// Exact `P(S = target)`; zero outside the support.
pub fn rho_at(v: &StepSet, target: i64) -> Result<BigRational> {
    Ok(ExactDistribution::compute(v)?.weight_at(target))
}

/// The Erdős bound `C(n, ⌊n/2⌋) / 2^n`, exactly.
pub fn erdos_bound(n: usize) -> BigRational {
    let binom = num::integer::binomial(BigUint::from(n), BigUint::from(n / 2));
    ratio(binom, n)
}

/// Result of a Monte Carlo estimate of ρ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub rho_hat: f64,
    pub stderr: f64,
    pub samples: u64,
}

/// Empirical maximal point mass from `samples` iid sign vectors, with
/// its binomial standard error. Deterministic for a fixed seed.
pub fn monte_carlo_rho(v: &StepSet, samples: u64, seed: u64) -> Result<MonteCarloEstimate> {
    if samples == 0 {
        return Err(Error::InvalidInput("samples must be >= 1".into()));
    }
    let width = support_width(v)?;
    let center = (width / 2) as i64;
    let mut hits = vec![0u64; width];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let mut sum = 0i64;
        for &step in v.steps() {
            if rng.gen::<bool>() {
                sum += step;
            } else {
                sum -= step;
            }
        }
        hits[(sum + center) as usize] += 1;
    }
    let max_hits = hits.iter().copied().max().unwrap_or(0);
    let rho_hat = max_hits as f64 / samples as f64;
    let stderr = (rho_hat * (1.0 - rho_hat) / samples as f64).sqrt();
    Ok(MonteCarloEstimate {
        rho_hat,
        stderr,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::ToPrimitive;
    use proptest::prelude::*;
    use std::collections::HashMap;

    /// Independent oracle: walk all 2^n sign vectors.
    pub(crate) fn enumerate_counts(steps: &[i64]) -> HashMap<i64, u64> {
        let n = steps.len();
        assert!(n <= 20, "enumeration oracle is for small n");
        let mut counts = HashMap::new();
        for mask in 0u32..(1 << n) {
            let sum: i64 = steps
                .iter()
                .enumerate()
                .map(|(i, &v)| if mask >> i & 1 == 1 { v } else { -v })
                .sum();
            *counts.entry(sum).or_insert(0) += 1;
        }
        counts
    }

    fn assert_matches_oracle(v: &StepSet) {
        let dist = ExactDistribution::compute(v).unwrap();
        let oracle = enumerate_counts(v.steps());
        for (i, c) in dist.counts().iter().enumerate() {
            let s = dist.offset() + i as i64;
            let expected = oracle.get(&s).copied().unwrap_or(0);
            assert_eq!(c.to_u64().unwrap(), expected, "count mismatch at s={s}");
        }
    }

    #[test]
    fn single_step() {
        let v = StepSet::new(vec![5]).unwrap();
        let d = ExactDistribution::compute(&v).unwrap();
        assert_eq!(d.weight_at(5), BigRational::new(1.into(), 2.into()));
        assert_eq!(d.weight_at(-5), BigRational::new(1.into(), 2.into()));
        assert_eq!(d.weight_at(0), BigRational::zero());
        assert_eq!(d.total_mass(), BigRational::one());
    }

    #[test]
    fn two_steps_enumerated() {
        // V={1,2}: all 4 sign vectors give ±3, ±1
        let v = StepSet::new(vec![1, 2]).unwrap();
        assert_matches_oracle(&v);
        let d = ExactDistribution::compute(&v).unwrap();
        let q = BigRational::new(1.into(), 4.into());
        for s in [-3, -1, 1, 3] {
            assert_eq!(d.weight_at(s), q);
        }
        assert_eq!(d.weight_at(0), BigRational::zero());
    }

    #[test]
    fn zero_step_identity() {
        // V={−1,0,1}: P(0)=1/2, P(±2)=1/4 (8 sign vectors)
        let v = StepSet::new(vec![-1, 0, 1]).unwrap();
        assert_matches_oracle(&v);
        let d = ExactDistribution::compute(&v).unwrap();
        assert_eq!(d.weight_at(0), BigRational::new(1.into(), 2.into()));
        assert_eq!(d.weight_at(2), BigRational::new(1.into(), 4.into()));
        assert_eq!(d.weight_at(-2), BigRational::new(1.into(), 4.into()));
    }

    #[test]
    fn rho_all_ones() {
        // Erdős sharpness instance: C(4,2)/2^4 = 6/16 = 3/8
        let v = StepSet::new(vec![1, 1, 1, 1]).unwrap();
        let r = rho(&v).unwrap();
        assert_eq!(r.rho, BigRational::new(3.into(), 8.into()));
        assert_eq!(r.argmax, vec![0]);
        assert_eq!(r.rho, erdos_bound(4));
    }

    #[test]
    fn rho_v0_small() {
        // frozen from the 2^n enumeration oracle
        let r5 = rho(&StepSet::v0(5).unwrap()).unwrap();
        assert_eq!(r5.rho, BigRational::new(1.into(), 4.into()));
        assert_eq!(r5.argmax, vec![0]);
        let r7 = rho(&StepSet::v0(7).unwrap()).unwrap();
        assert_eq!(r7.rho, BigRational::new(5.into(), 32.into()));
        assert_eq!(r7.argmax, vec![0]);
        assert_matches_oracle(&StepSet::v0(5).unwrap());
        assert_matches_oracle(&StepSet::v0(7).unwrap());
    }

    #[test]
    fn rho_at_examples() {
        let v7 = StepSet::v0(7).unwrap();
        // Σ v_i = 0 is even, so odd targets are impossible
        assert_eq!(rho_at(&v7, 1).unwrap(), BigRational::zero());
        let v = StepSet::new(vec![1, 2]).unwrap();
        assert_eq!(rho_at(&v, 3).unwrap(), BigRational::new(1.into(), 4.into()));
        assert_eq!(rho_at(&v, 100).unwrap(), BigRational::zero());
    }

    #[test]
    fn erdos_bound_values() {
        assert_eq!(erdos_bound(1), BigRational::new(1.into(), 2.into()));
        assert_eq!(erdos_bound(4), BigRational::new(3.into(), 8.into()));
        assert_eq!(erdos_bound(5), BigRational::new(5.into(), 16.into()));
    }

    #[test]
    fn capacity_refusal() {
        let v = StepSet::new(vec![i64::MAX / 2, i64::MAX / 2]).unwrap();
        match ExactDistribution::compute(&v) {
            Err(Error::Capacity(_)) => {}
            other => panic!("expected capacity error, got {other:?}"),
        }
    }

    #[test]
    fn float_agrees_with_exact() {
        for steps in [vec![1, 2, 3], vec![-4, 0, 4, 9], vec![2; 10], vec![1, 1, 2, 3, 5, 8]] {
            let v = StepSet::new(steps).unwrap();
            let e = ExactDistribution::compute(&v).unwrap();
            let f = FloatDistribution::compute(&v).unwrap();
            assert_eq!(e.offset(), f.offset());
            for (i, c) in e.counts().iter().enumerate() {
                let exact = c.to_f64().unwrap() / 2f64.powi(v.n() as i32);
                assert!((exact - f.probs()[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn monte_carlo_deterministic_and_close() {
        let v = StepSet::new(vec![1]).unwrap();
        let a = monte_carlo_rho(&v, 100_000, 7).unwrap();
        let b = monte_carlo_rho(&v, 100_000, 7).unwrap();
        assert_eq!(a, b);
        assert!((a.rho_hat - 0.5).abs() <= 4.0 * a.stderr);
        let v = StepSet::new(vec![1, 2]).unwrap();
        let e = monte_carlo_rho(&v, 100_000, 11).unwrap();
        assert!((e.rho_hat - 0.25).abs() <= 4.0 * e.stderr);
    }

    #[test]
    fn monte_carlo_rejects_zero_samples() {
        let v = StepSet::new(vec![1]).unwrap();
        assert!(monte_carlo_rho(&v, 0, 1).is_err());
    }

    fn small_multiset() -> impl Strategy<Value = Vec<i64>> {
        proptest::collection::vec(-20i64..=20, 1..=10)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn symmetry(steps in small_multiset()) {
            let v = StepSet::new(steps).unwrap();
            let d = ExactDistribution::compute(&v).unwrap();
            let (lo, hi) = (d.offset(), d.offset() + d.counts().len() as i64 - 1);
            for s in lo..=hi {
                prop_assert_eq!(d.count_at(s), d.count_at(-s));
            }
        }

        #[test]
        fn sign_flip_invariance(steps in small_multiset(), idx in 0usize..10) {
            let v = StepSet::new(steps.clone()).unwrap();
            let mut flipped = steps.clone();
            let i = idx % flipped.len();
            flipped[i] = -flipped[i];
            let w = StepSet::new(flipped).unwrap();
            let dv = ExactDistribution::compute(&v).unwrap();
            let dw = ExactDistribution::compute(&w).unwrap();
            prop_assert_eq!(dv, dw);
        }

        #[test]
        fn dilation_equivariance(steps in proptest::collection::vec(-12i64..=12, 1..=8), l in 1i64..=5) {
            let v = StepSet::new(steps).unwrap();
            let w = v.dilate(l).unwrap();
            let dv = ExactDistribution::compute(&v).unwrap();
            let dw = ExactDistribution::compute(&w).unwrap();
            for s in dv.offset()..=(-dv.offset()) {
                prop_assert_eq!(dv.count_at(s), dw.count_at(l * s));
            }
            prop_assert_eq!(dv.rho().rho, dw.rho().rho);
        }

        #[test]
        fn erdos_bound_on_nonzero_sets(steps in proptest::collection::vec(
            prop_oneof![-50i64..=-1, 1i64..=50], 1..=12)) {
            let v = StepSet::new(steps).unwrap();
            let r = rho(&v).unwrap();
            prop_assert!(r.rho <= erdos_bound(v.n()));
        }

        #[test]
        fn parity(steps in small_multiset()) {
            let v = StepSet::new(steps).unwrap();
            let total: i64 = v.steps().iter().sum();
            let d = ExactDistribution::compute(&v).unwrap();
            for s in d.support_points() {
                prop_assert_eq!(s.rem_euclid(2), total.rem_euclid(2));
            }
        }

        #[test]
        fn oracle_agreement(steps in proptest::collection::vec(-15i64..=15, 1..=9)) {
            let v = StepSet::new(steps).unwrap();
            let d = ExactDistribution::compute(&v).unwrap();
            let oracle = enumerate_counts(v.steps());
            for (s, &c) in &oracle {
                prop_assert_eq!(d.count_at(*s).to_u64().unwrap(), c);
            }
            let total: BigUint = d.counts().iter().sum();
            prop_assert_eq!(total, BigUint::from(1u32) << v.n());
        }
    }
}
