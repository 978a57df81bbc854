//! Structural toolkit: dilation normalization, the variance functional,
//! c-irreducibility reduction, the arrangement inequality, greedy block
//! lower bounds, and a constructive dilation search in F_p.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::FieldEmbedding;
use crate::modmath::{dist_numerator, is_prime, mod_inverse};
use crate::steps::StepSet;

/// Extracts the common dilation: `l = gcd` of the nonzero `|v_i|` and
/// `W = V / l`. ρ is dilation-invariant, so `ρ(W) = ρ(V)`.
pub fn normalize_dilation(v: &StepSet) -> Result<(u64, StepSet)> {
    let mut l: u64 = 0;
    for &x in v.steps() {
        l = num::integer::gcd(l, x.unsigned_abs());
    }
    if l == 0 {
        return Err(Error::InvalidInput(
            "normalize_dilation needs at least one nonzero step".into(),
        ));
    }
    let w = StepSet::new(v.steps().iter().map(|&x| x / l as i64).collect())?;
    Ok((l, w))
}

/// The normalized variance `12 Σ v_i² / (n³ − n)`, which equals 1
/// exactly on `V₀` and exceeds 1 on every other dilation-normalized set
/// of n distinct integers.
pub fn variance_ratio(v: &StepSet) -> Result<f64> {
    let n = v.n() as u128;
    if n < 2 {
        return Err(Error::NotApplicable(
            "variance ratio needs n >= 2 (n³−n vanishes at n=1)".into(),
        ));
    }
    let sum_sq: u128 = v
        .steps()
        .iter()
        .map(|&x| (x.unsigned_abs() as u128).pow(2))
        .sum();
    Ok(12.0 * sum_sq as f64 / ((n * n * n - n) as f64))
}

/// Replayable log of one irreducibility reduction.
///
/// Each round removes the elements a divisor `d ≥ 2` misses (at most a
/// c-fraction) and divides the rest by `d`; rounds stop when no divisor
/// qualifies. The smallest qualifying `d` is taken every round, so
/// composite reductions appear as successive small-d rounds and the
/// trace is deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionTrace {
    pub initial: Vec<i64>,
    /// removed elements as (value, 1-based round index)
    pub removed: Vec<(i64, u32)>,
    pub divisors_applied: Vec<u64>,
    pub final_set: Vec<i64>,
    pub c: f64,
    pub steps_taken: u32,
}

impl ReductionTrace {
    /// Re-applies the recorded removals and divisors to `initial`;
    /// returns the reconstructed final multiset.
    pub fn replay(&self) -> Result<Vec<i64>> {
        let mut cur = self.initial.clone();
        for (round, &d) in self.divisors_applied.iter().enumerate() {
            let round = round as u32 + 1;
            for &(value, r) in self.removed.iter().filter(|&&(_, r)| r == round) {
                let pos = cur.iter().position(|&x| x == value).ok_or_else(|| {
                    Error::InvariantViolation(format!(
                        "replay: removal {value} (round {round}) not present"
                    ))
                })?;
                cur.swap_remove(pos);
                let _ = r;
            }
            if cur.iter().any(|&x| x % d as i64 != 0) {
                return Err(Error::InvariantViolation(format!(
                    "replay: divisor {d} does not divide the round-{round} remainder"
                )));
            }
            for x in cur.iter_mut() {
                *x /= d as i64;
            }
        }
        Ok(cur)
    }

    pub fn final_step_set(&self) -> Result<StepSet> {
        StepSet::new(self.final_set.clone())
    }
}

/// Step cap `3 + ⌈log₂ C⌉ + 1`; exceeding it falsifies the
/// window-shrinking termination argument.
fn reduction_step_cap(window_c: f64) -> u32 {
    let log = window_c.log2().ceil().max(0.0) as u32;
    3 + log + 1
}

/// True iff no integer `d ≥ 2` (scanned up to `max|w|`) divides all but
/// at most a c-fraction of the elements.
pub fn is_c_irreducible(steps: &[i64], c: f64) -> bool {
    find_divisor(steps, c).is_none()
}

fn find_divisor(steps: &[i64], c: f64) -> Option<u64> {
    let max_abs = steps.iter().map(|&x| x.unsigned_abs()).max().unwrap_or(0);
    let budget = c * steps.len() as f64;
    (2..=max_abs).find(|&d| {
        steps.iter().filter(|&&x| x % d as i64 != 0).count() as f64 <= budget
    })
}

/// Iterated divisor reduction: find the smallest `d ≥ 2` dividing all
/// but at most `c·|current|` elements, move those exceptions out,
/// divide the rest by `d`, repeat until no divisor qualifies.
pub fn irreducible_reduce(w: &StepSet, c: f64, window_c: f64) -> Result<ReductionTrace> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidInput(format!("c = {c} must lie in (0, 1)")));
    }
    if !(window_c > 0.0) {
        return Err(Error::InvalidInput("window_C must be positive".into()));
    }
    let window = window_c * w.n() as f64;
    if w.steps().iter().any(|&x| (x.unsigned_abs() as f64) > window) {
        return Err(Error::InvalidInput(format!(
            "elements must lie within [−{window}, {window}] = [−C·n, C·n]"
        )));
    }
    if w.steps().iter().all(|&x| x == 0) {
        return Err(Error::InvalidInput("all-zero set cannot be reduced".into()));
    }

    let cap = reduction_step_cap(window_c);
    let initial = w.steps().to_vec();
    let mut cur = initial.clone();
    let mut removed = Vec::new();
    let mut divisors = Vec::new();
    while let Some(d) = find_divisor(&cur, c) {
        if divisors.len() as u32 >= cap {
            return Err(Error::InvariantViolation(format!(
                "reduction exceeded the {cap}-round cap (window_C = {window_c}); \
                 the termination bound fails on this input"
            )));
        }
        let round = divisors.len() as u32 + 1;
        let (kept, out): (Vec<i64>, Vec<i64>) =
            cur.into_iter().partition(|&x| x % d as i64 == 0);
        removed.extend(out.into_iter().map(|x| (x, round)));
        cur = kept.into_iter().map(|x| x / d as i64).collect();
        divisors.push(d);
    }
    let steps_taken = divisors.len() as u32;
    Ok(ReductionTrace {
        initial,
        removed,
        divisors_applied: divisors,
        final_set: cur,
        c,
        steps_taken,
    })
}

/// Outcome of one arrangement-inequality evaluation:
/// `Σ_j ‖(a + i_j ξ)/p‖² ≥ (m³/48) ‖ξ/p‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrangementCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Evaluates the arrangement inequality for `m = |indices| ≥ 4` strictly
/// increasing indices in `[0, l]` under `l·‖ξ/p‖ ≤ 1/2`.
pub fn arrangement_lower_bound_check(
    p: u64,
    xi: u64,
    a: u64,
    indices: &[u64],
    l: f64,
) -> Result<ArrangementCheck> {
    if !is_prime(p) {
        return Err(Error::InvalidInput(format!("p = {p} is not prime")));
    }
    if xi == 0 || xi >= p || a >= p {
        return Err(Error::InvalidInput(
            "need 1 <= xi < p and 0 <= a < p".into(),
        ));
    }
    let m = indices.len();
    if m < 4 {
        return Err(Error::InvalidInput(format!("need m >= 4 indices, got {m}")));
    }
    if !indices.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidInput("indices must be strictly increasing".into()));
    }
    if !(l > 0.0) || indices[m - 1] as f64 > l {
        return Err(Error::InvalidInput(format!(
            "indices must lie in [0, l], got max {} with l = {l}",
            indices[m - 1]
        )));
    }
    let t = dist_numerator(xi, p) as f64 / p as f64;
    if l * t > 0.5 + 1e-12 {
        return Err(Error::InvalidInput(format!(
            "lemma precondition l·‖ξ/p‖ <= 1/2 violated: {l} · {t} = {}",
            l * t
        )));
    }
    let mut num = 0u128;
    for &i in indices {
        let point = (a as u128 + i as u128 * xi as u128 % p as u128) % p as u128;
        let d = dist_numerator(point as u64, p) as u128;
        num += d * d;
    }
    let lhs = num as f64 / (p as f64 * p as f64);
    let rhs = (m as f64).powi(3) / 48.0 * t * t;
    Ok(ArrangementCheck {
        lhs,
        rhs,
        holds: lhs >= rhs - 1e-12,
    })
}

/// A certified lower bound for `ℓ(ξ)` from greedy block formation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockBound {
    pub bound: f64,
    /// number of uniform sub-blocks the bound sums over
    pub blocks: u64,
}

/// Medium-regime lower bound for `ℓ(ξ) = Σ_w ‖wξ/p‖²`: sort `W`, form
/// maximal blocks of diameter `≤ l = 1/(2‖ξ/p‖)`, split long blocks
/// into uniform sub-blocks of `⌊l/(8C)⌋` elements, and apply the
/// arrangement inequality to each. Degenerate inputs (everything in one
/// short block) give bound 0, which is still sound.
pub fn block_lower_bound(
    w: &StepSet,
    p: u64,
    xi: u64,
    window_c: f64,
) -> Result<BlockBound> {
    if !is_prime(p) {
        return Err(Error::InvalidInput(format!("p = {p} is not prime")));
    }
    if xi == 0 || xi >= p {
        return Err(Error::InvalidInput("need 1 <= xi < p".into()));
    }
    if !(window_c > 0.0) {
        return Err(Error::InvalidInput("window_C must be positive".into()));
    }
    let n = w.n() as f64;
    let window = window_c * n;
    if w.steps().iter().any(|&x| (x.unsigned_abs() as f64) > window) {
        return Err(Error::InvalidInput(format!(
            "W must lie within [−C·n, C·n] = [−{window}, {window}]"
        )));
    }
    let t = dist_numerator(xi, p) as f64 / p as f64;
    let (lo, hi) = (1.0 / (2.0 * window_c * n), 1.0 / (64.0 * window_c));
    if !(t >= lo && t <= hi) {
        return Err(Error::InvalidInput(format!(
            "‖ξ/p‖ = {t} outside the medium regime [{lo}, {hi}]"
        )));
    }

    let mut sorted = w.sorted_steps();
    sorted.dedup();
    let l = 1.0 / (2.0 * t);
    let m_sub = (l / (8.0 * window_c)).floor() as usize; // >= 4 in-regime
    debug_assert!(m_sub >= 4);

    let mut sub_blocks = 0u64;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && (sorted[j + 1] - sorted[i]) as f64 <= l {
            j += 1;
        }
        let len = j - i + 1;
        if len as f64 > l / (8.0 * window_c) {
            sub_blocks += (len / m_sub) as u64;
        }
        i = j + 1;
    }
    let bound = sub_blocks as f64 * (m_sub as f64).powi(3) / 48.0 * t * t;
    Ok(BlockBound {
        bound,
        blocks: sub_blocks,
    })
}

/// Best dilation found by the exhaustive F_p search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DilationFit {
    /// minimizing k, smallest on ties, searched over 1..=(p−1)/2
    pub k: u64,
    pub inlier_count: usize,
    pub outlier_budget: usize,
    /// Σ of squared centered representatives of the inliers of k⁻¹·V,
    /// normalized by p²
    pub cost: f64,
}

const DILATION_CHUNK: u64 = 1 << 12;

/// Exhaustive search for the dilation `k` that concentrates `k⁻¹·V`
/// near 0: for each `k ≤ (p−1)/2`, drop the `outlier_budget` largest
/// `|centered(k⁻¹ v_i)|` and sum the squares of the rest. Costs are
/// compared as exact integers, so ties resolve to the smallest k
/// independently of thread count.
pub fn find_dilation_fp(e: &FieldEmbedding, outlier_budget: usize) -> Result<DilationFit> {
    let n = e.n();
    if outlier_budget >= n {
        return Err(Error::InvalidInput(format!(
            "outlier budget {outlier_budget} must be < n = {n}"
        )));
    }
    let p = e.p();
    let half = (p - 1) / 2;
    let residues: Vec<u64> = e
        .residues()
        .iter()
        .map(|&r| r.rem_euclid(p as i64) as u64)
        .collect();

    let cost_of = |k: u64| -> u128 {
        let kinv = mod_inverse(k, p);
        let mut mags: Vec<u64> = residues
            .iter()
            .map(|&r| dist_numerator((kinv as u128 * r as u128 % p as u128) as u64, p))
            .collect();
        mags.sort_unstable_by(|a, b| b.cmp(a));
        mags[outlier_budget..]
            .iter()
            .map(|&d| d as u128 * d as u128)
            .sum()
    };

    let starts: Vec<u64> = (1..=half).step_by(DILATION_CHUNK as usize).collect();
    let best = starts
        .into_par_iter()
        .map(|start| {
            let end = (start + DILATION_CHUNK - 1).min(half);
            let mut best = (u128::MAX, 0u64);
            for k in start..=end {
                let cost = cost_of(k);
                if cost < best.0 {
                    best = (cost, k);
                }
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((u128::MAX, 0u64), |acc, item| {
            if item.0 < acc.0 {
                item
            } else {
                acc
            }
        });

    Ok(DilationFit {
        k: best.1,
        inlier_count: n - outlier_budget,
        outlier_budget,
        cost: best.0 as f64 / (p as f64 * p as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::embed_prime;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn normalize_examples() {
        let (l, w) = normalize_dilation(&StepSet::new(vec![2, 4, 6]).unwrap()).unwrap();
        assert_eq!((l, w.steps()), (2, &[1i64, 2, 3][..]));
        let (l, w) = normalize_dilation(&StepSet::new(vec![-3, 0, 3]).unwrap()).unwrap();
        assert_eq!((l, w.steps()), (3, &[-1i64, 0, 1][..]));
        let (l, w) = normalize_dilation(&StepSet::new(vec![5, 7]).unwrap()).unwrap();
        assert_eq!((l, w.steps()), (1, &[5i64, 7][..]));
        assert!(normalize_dilation(&StepSet::new(vec![0, 0]).unwrap()).is_err());
    }

    #[test]
    fn variance_ratio_examples() {
        assert_eq!(variance_ratio(&StepSet::v0(5).unwrap()).unwrap(), 1.0);
        assert_eq!(variance_ratio(&StepSet::v0(21).unwrap()).unwrap(), 1.0);
        let scaled = StepSet::v0(5).unwrap().dilate(3).unwrap();
        assert_eq!(variance_ratio(&scaled).unwrap(), 9.0);
        let v = StepSet::new(vec![1, 2, 3, 4, 5]).unwrap();
        assert_eq!(variance_ratio(&v).unwrap(), 5.5);
        assert!(variance_ratio(&StepSet::new(vec![3]).unwrap()).is_err());
    }

    #[test]
    fn reduce_removes_exception_then_halves_twice() {
        // {4,8,12,16,3} with c=0.25: drop 3, then d=2 twice → {1,2,3,4}
        let w = StepSet::new(vec![4, 8, 12, 16, 3]).unwrap();
        let trace = irreducible_reduce(&w, 0.25, 4.0).unwrap();
        assert_eq!(trace.removed, vec![(3, 1)]);
        assert_eq!(trace.divisors_applied, vec![2, 2]);
        let mut final_sorted = trace.final_set.clone();
        final_sorted.sort_unstable();
        assert_eq!(final_sorted, vec![1, 2, 3, 4]);
        assert_eq!(trace.steps_taken, 2);
        assert_eq!(trace.replay().unwrap(), trace.final_set);
        assert!(is_c_irreducible(&trace.final_set, trace.c));
    }

    #[test]
    fn reduce_already_irreducible() {
        let w = StepSet::new(vec![1, 2, 3]).unwrap();
        let trace = irreducible_reduce(&w, 0.3, 1.0).unwrap();
        assert_eq!(trace.steps_taken, 0);
        assert_eq!(trace.final_set, vec![1, 2, 3]);
        assert!(trace.removed.is_empty());
    }

    #[test]
    fn reduce_composite_divisor_as_small_rounds() {
        // {6,12,18}: d=2 then d=3, final {1,2,3}
        let w = StepSet::new(vec![6, 12, 18]).unwrap();
        let trace = irreducible_reduce(&w, 0.1, 6.0).unwrap();
        assert_eq!(trace.divisors_applied, vec![2, 3]);
        assert_eq!(trace.final_set, vec![1, 2, 3]);
        assert!(trace.removed.is_empty());
        assert_eq!(trace.replay().unwrap(), trace.final_set);
    }

    #[test]
    fn reduce_validates_inputs() {
        let w = StepSet::new(vec![1, 2]).unwrap();
        assert!(irreducible_reduce(&w, 0.0, 1.0).is_err());
        assert!(irreducible_reduce(&w, 1.0, 1.0).is_err());
        // window too small for the elements
        let big = StepSet::new(vec![100, 200]).unwrap();
        assert!(irreducible_reduce(&big, 0.1, 1.0).is_err());
        let zeros = StepSet::new(vec![0, 0, 0]).unwrap();
        assert!(irreducible_reduce(&zeros, 0.1, 1.0).is_err());
    }

    #[test]
    fn trace_json_roundtrip() {
        let w = StepSet::new(vec![4, 8, 12, 16, 3]).unwrap();
        let trace = irreducible_reduce(&w, 0.25, 4.0).unwrap();
        let text = serde_json::to_string(&trace).unwrap();
        let back: ReductionTrace = serde_json::from_str(&text).unwrap();
        assert_eq!(back, trace);
        assert_eq!(back.replay().unwrap(), trace.final_set);
    }

    #[test]
    fn arrangement_clustered_example() {
        // indices {0,1,2,3}, ‖ξ/p‖ = 1/(2l): lhs = 14‖ξ/p‖² ≥ (64/48)‖ξ/p‖²
        let p = 101;
        let xi = 1; // ‖1/101‖ = 1/101, l = 50.5 → l·t = 0.5
        let t = 1.0 / 101.0;
        let l = 1.0 / (2.0 * t);
        let chk = arrangement_lower_bound_check(p, xi, 0, &[0, 1, 2, 3], l).unwrap();
        assert!((chk.lhs - 14.0 * t * t).abs() < 1e-12);
        assert!((chk.rhs - 64.0 / 48.0 * t * t).abs() < 1e-15);
        assert!(chk.holds);
    }

    #[test]
    fn arrangement_exhaustive_a_sweep() {
        // every a ∈ F_p at small primes, worst-case clustered indices
        for p in [5u64, 7, 11, 13, 53, 101] {
            for xi in 1..p {
                let t = dist_numerator(xi, p) as f64 / p as f64;
                let l = (1.0 / (2.0 * t)).floor();
                if l < 3.0 {
                    continue;
                }
                for a in 0..p {
                    let chk =
                        arrangement_lower_bound_check(p, xi, a, &[0, 1, 2, 3], l).unwrap();
                    assert!(chk.holds, "violated at p={p} xi={xi} a={a}");
                }
            }
        }
    }

    #[test]
    fn arrangement_rejects_bad_inputs() {
        assert!(arrangement_lower_bound_check(101, 1, 0, &[0, 1, 2], 10.0).is_err());
        assert!(arrangement_lower_bound_check(101, 1, 0, &[0, 1, 1, 3], 10.0).is_err());
        assert!(arrangement_lower_bound_check(101, 1, 0, &[0, 1, 2, 30], 10.0).is_err());
        assert!(arrangement_lower_bound_check(100, 1, 0, &[0, 1, 2, 3], 10.0).is_err());
        // l·‖ξ/p‖ too large
        assert!(arrangement_lower_bound_check(101, 50, 0, &[0, 1, 2, 3], 90.0).is_err());
    }

    #[test]
    fn block_bound_sound_on_v0() {
        let n = 101u64;
        let v = StepSet::v0(n).unwrap();
        let e = embed_prime(&v).unwrap();
        let p = e.p();
        let c = 1.0;
        let lo = (p as f64 / (2.0 * c * n as f64)).ceil() as u64;
        let hi = (p as f64 / (64.0 * c)).floor() as u64;
        let mut min_ratio = f64::INFINITY;
        for xi in lo..=hi {
            let b = block_lower_bound(&v, p, xi, c).unwrap();
            let ell = e.cost(xi);
            assert!(b.bound <= ell + 1e-12, "bound {} > ell {}", b.bound, ell);
            min_ratio = min_ratio.min(b.bound / n as f64);
        }
        assert!(min_ratio > 0.0);
    }

    #[test]
    fn block_bound_degenerate_short_block() {
        // n copies of one value collapse to a single short block:
        // bound 0, blocks 0, still a sound lower bound
        let w = StepSet::new(vec![5; 64]).unwrap();
        let p = 12289;
        let xi = 100; // ‖100/12289‖ ≈ 0.00814 ∈ [1/128, 1/64]
        let b = block_lower_bound(&w, p, xi, 1.0).unwrap();
        assert_eq!(b.bound, 0.0);
        assert_eq!(b.blocks, 0);
        // regime-violating xi is rejected
        assert!(block_lower_bound(&w, p, 1, 1.0).is_err());
    }

    #[test]
    fn dilation_recovers_planted_factor() {
        // V = 7·V₀(5) in F_89: k = 7 undoes the dilation
        let v = StepSet::v0(5).unwrap().dilate(7).unwrap();
        let e = embed_prime(&v).unwrap();
        assert_eq!(e.p(), 89);
        let fit = find_dilation_fp(&e, 0).unwrap();
        assert_eq!(fit.k, 7);
        // cost = Σ{4,1,0,1,4}/p² = 10/89²
        assert!((fit.cost - 10.0 / (89.0 * 89.0)).abs() < 1e-15);
    }

    #[test]
    fn dilation_identity_on_v0() {
        let e = embed_prime(&StepSet::v0(5).unwrap()).unwrap();
        let fit = find_dilation_fp(&e, 0).unwrap();
        assert_eq!(fit.k, 1);
        assert!(find_dilation_fp(&e, 5).is_err());
    }

    #[test]
    fn dilation_with_planted_outlier() {
        // 3·{−2..2} plus one wild element; budget 1 recovers the clean cost
        let mut steps: Vec<i64> = StepSet::v0(5).unwrap().dilate(3).unwrap().steps().to_vec();
        steps.push(40);
        let v = StepSet::new(steps).unwrap();
        let e = embed_prime(&v).unwrap();
        let fit = find_dilation_fp(&e, 1).unwrap();
        assert_eq!(fit.k, 3);
        let p = e.p() as f64;
        assert!((fit.cost - 10.0 / (p * p)).abs() < 1e-15);
        assert_eq!(fit.inlier_count, 5);
    }

    #[test]
    fn dilation_thread_count_invariant() {
        let v = StepSet::v0(5).unwrap().dilate(7).unwrap();
        let e = embed_prime(&v).unwrap();
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| find_dilation_fp(&e, 1).unwrap());
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| find_dilation_fp(&e, 1).unwrap());
        assert_eq!(one, four);
    }

    #[test]
    fn reduction_fuzz_terminates_within_cap() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let window_c = *[4.0f64, 8.0, 16.0, 32.0].choose(&mut rng).unwrap();
            let n = rng.gen_range(8..=24usize);
            // planted divisor chain, kept <= window_C so the scaled window
            // still holds n distinct values
            let mut chain = 1u64;
            for _ in 0..rng.gen_range(0..=3u32) {
                let f = rng.gen_range(2..=3u64);
                if (chain * f) as f64 <= window_c {
                    chain *= f;
                }
            }
            let lim = ((window_c * n as f64) as i64) / chain as i64;
            assert!(2 * lim + 1 >= n as i64);
            let mut base = std::collections::BTreeSet::new();
            while base.len() < n {
                let x = rng.gen_range(-lim..=lim);
                base.insert(x * chain as i64);
            }
            let w = StepSet::new(base.into_iter().collect()).unwrap();
            let cap_rounds = 3 + (window_c.log2().ceil() as u32);
            let trace = irreducible_reduce(&w, 0.1, window_c).unwrap();
            assert!(trace.steps_taken <= cap_rounds);
            assert!(is_c_irreducible(&trace.final_set, 0.1));
            assert_eq!(trace.replay().unwrap(), trace.final_set);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn variance_ratio_dilation_invariant(steps in proptest::collection::vec(-40i64..=40, 2..=10),
                                             l in 1i64..=6) {
            let v = match StepSet::new(steps).map(|v| v.dilate(1)) {
                Ok(Ok(v)) => v,
                _ => return Ok(()),
            };
            if v.steps().iter().all(|&x| x == 0) {
                return Ok(());
            }
            let scaled = v.dilate(l).unwrap();
            let (_, w1) = normalize_dilation(&v).unwrap();
            let (_, w2) = normalize_dilation(&scaled).unwrap();
            prop_assert_eq!(w1.sorted_steps(), w2.sorted_steps());
            prop_assert!((variance_ratio(&w1).unwrap() - variance_ratio(&w2).unwrap()).abs() < 1e-15);
        }

        #[test]
        fn arrangement_random_tuples(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = *[101u64, 211, 499, 1009].choose(&mut rng).unwrap();
            let xi = rng.gen_range(1..p);
            let t = dist_numerator(xi, p) as f64 / p as f64;
            let lmax = (1.0 / (2.0 * t)).floor() as u64;
            if lmax < 3 {
                return Ok(());
            }
            let m = rng.gen_range(4..=(lmax + 1).min(10)) as usize;
            let mut idx = rand::seq::index::sample(&mut rng, (lmax + 1) as usize, m)
                .into_iter()
                .map(|x| x as u64)
                .collect::<Vec<_>>();
            idx.sort_unstable();
            let a = rng.gen_range(0..p);
            let chk = arrangement_lower_bound_check(p, xi, a, &idx, lmax as f64).unwrap();
            prop_assert!(chk.holds);
        }

        #[test]
        fn dilation_cost_invariant_under_scaling(c in 2u64..=100) {
            // V and c·V (mod p) have identical minimal cost; the argmin shifts
            let p = 101u64;
            let residues = vec![-9i64, -5, 0, 5, 9];
            let e = FieldEmbedding::from_residues(p, residues.clone()).unwrap();
            let scaled: Vec<i64> = residues.iter()
                .map(|&r| (r as i128 * c as i128).rem_euclid(p as i128) as i64)
                .collect();
            let e2 = FieldEmbedding::from_residues(p, scaled).unwrap();
            let f1 = find_dilation_fp(&e, 1).unwrap();
            let f2 = find_dilation_fp(&e2, 1).unwrap();
            prop_assert_eq!(f1.cost, f2.cost);
        }
    }
}
