//! Exhaustive extremal scans over a window: all n-subsets of distinct
//! integers in [−B, B], ranked by ρ.
//!
//! The distribution of `S` is invariant under `V ↦ −V`, so subsets are
//! enumerated once per sign-flip class. The canonical representative is
//! the lexicographically larger of `sorted(V)` and `sorted(−V)` (which
//! prefers, e.g., `{0,1}` over `{−1,0}`). Translation is *not*
//! quotiented: the signs flip the steps, they do not shift them, so ρ
//! is not translation-invariant.

use num::bigint::BigInt;
use num::rational::Ratio;
use num::{BigUint, One};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::SCHEMA_VERSION;
use crate::steps::StepSet;
use crate::structure::{normalize_dilation, variance_ratio};

/// Windows with more raw subsets than this are refused.
pub const ENUMERATION_CAP: u128 = 10_000_000;

/// `C(2B+1, n)`: how many raw n-subsets the window holds.
pub fn raw_subset_count(n: usize, b: i64) -> Result<BigUint> {
    if n == 0 {
        return Err(Error::InvalidInput("subset size must be >= 1".into()));
    }
    if b < 0 || 2 * b + 1 < n as i64 {
        return Err(Error::InvalidInput(format!(
            "window [−{b}, {b}] holds no {n}-subset"
        )));
    }
    Ok(num::integer::binomial(
        BigUint::from(2 * b as u64 + 1),
        BigUint::from(n),
    ))
}

fn check_cap(n: usize, b: i64) -> Result<u64> {
    let count = raw_subset_count(n, b)?;
    if count > BigUint::from(ENUMERATION_CAP) {
        return Err(Error::Capacity(format!(
            "window has C({}, {n}) = {count} subsets, over the cap {ENUMERATION_CAP}",
            2 * b + 1
        )));
    }
    Ok(num::ToPrimitive::to_u64(&count).expect("under cap"))
}

/// `sorted(−V)` for a sorted slice: negate and reverse.
fn negated_sorted(sorted: &[i64]) -> Vec<i64> {
    sorted.iter().rev().map(|&x| -x).collect()
}

/// Canonical representative of the sign-flip class of `set`.
pub fn canonical_form(set: &[i64]) -> Vec<i64> {
    let mut a = set.to_vec();
    a.sort_unstable();
    let b = negated_sorted(&a);
    if b > a {
        b
    } else {
        a
    }
}

fn is_canonical_sorted(sorted: &[i64]) -> bool {
    let first = *sorted.first().expect("nonempty");
    let last = *sorted.last().expect("nonempty");
    if -last != first {
        return first > -last;
    }
    negated_sorted(sorted) <= sorted.to_vec()
}

/// 1 for symmetric sets (V = −V), 2 otherwise.
pub fn sign_class_size(set: &[i64]) -> u32 {
    let mut a = set.to_vec();
    a.sort_unstable();
    if negated_sorted(&a) == a {
        1
    } else {
        2
    }
}

/// Streaming enumeration of canonical class representatives: each
/// n-subset of [−B, B] appears exactly once per sign-flip class, in
/// lexicographic order of the representative's sorted form.
#[derive(Debug)]
pub struct CanonicalSubsets {
    b: i64,
    n: usize,
    indices: Option<Vec<i64>>,
}

/// Builds the stream after validating the window and the subset cap.
pub fn enumerate_canonical(n: usize, b: i64) -> Result<CanonicalSubsets> {
    check_cap(n, b)?;
    let indices = Some(((-b)..(-b + n as i64)).collect());
    Ok(CanonicalSubsets { b, n, indices })
}

impl CanonicalSubsets {
    fn advance(&mut self) {
        let cur = self.indices.as_mut().expect("advance past end");
        let n = self.n;
        let mut i = n;
        loop {
            if i == 0 {
                self.indices = None;
                return;
            }
            i -= 1;
            if cur[i] < self.b - (n - 1 - i) as i64 {
                cur[i] += 1;
                for j in i + 1..n {
                    cur[j] = cur[j - 1] + 1;
                }
                return;
            }
        }
    }
}

impl Iterator for CanonicalSubsets {
    type Item = StepSet;

    fn next(&mut self) -> Option<StepSet> {
        loop {
            let cur = self.indices.as_ref()?.clone();
            self.advance();
            if is_canonical_sorted(&cur) {
                return Some(StepSet::new(cur).expect("nonempty subset"));
            }
        }
    }
}

/// Dense convolution with u128 sign-vector counts (enough for n ≤ 127,
/// far past the enumeration cap) returning the maximal count.
fn max_count(sorted: &[i64]) -> u128 {
    let abs_sum: usize = sorted.iter().map(|&v| v.unsigned_abs() as usize).sum();
    let width = 2 * abs_sum + 1;
    let mut counts = vec![0u128; width];
    counts[abs_sum] = 1;
    let mut next = vec![0u128; width];
    for &v in sorted {
        let a = v.unsigned_abs() as usize;
        if a == 0 {
            counts.iter_mut().for_each(|c| *c *= 2);
            continue;
        }
        next.iter_mut().for_each(|c| *c = 0);
        for i in 0..width {
            let c = counts[i];
            if c == 0 {
                continue;
            }
            if i >= a {
                next[i - a] += c;
            }
            if i + a < width {
                next[i + a] += c;
            }
        }
        std::mem::swap(&mut counts, &mut next);
    }
    counts.into_iter().max().unwrap_or(0)
}

fn rho_string(count: u128, n: usize) -> String {
    Ratio::new(BigInt::from(count), BigInt::one() << n).to_string()
}

/// Runs `step` over every canonical representative, partitioned by
/// leading element; per-partition accumulators come back in leading
/// order, so any merge is thread-count independent.
fn par_scan<A, I, F>(n: usize, b: i64, init: I, step: F) -> Vec<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, &[i64]) + Sync,
{
    let leads: Vec<i64> = ((-b)..=(b - n as i64 + 1)).collect();
    leads
        .into_par_iter()
        .map(|lead| {
            let mut acc = init();
            let mut buf = Vec::with_capacity(n);
            buf.push(lead);
            fn rec<F: Fn(&mut A, &[i64]), A>(
                buf: &mut Vec<i64>,
                hi: i64,
                k: usize,
                acc: &mut A,
                step: &F,
            ) {
                if k == 0 {
                    if is_canonical_sorted(buf) {
                        step(acc, buf);
                    }
                    return;
                }
                let lo = buf.last().unwrap() + 1;
                for v in lo..=(hi - k as i64 + 1) {
                    buf.push(v);
                    rec(buf, hi, k - 1, acc, step);
                    buf.pop();
                }
            }
            rec(&mut buf, b, n - 1, &mut acc, &step);
            acc
        })
        .collect()
}

fn validate_odd_window(n: usize, b: i64) -> Result<()> {
    if n == 0 || n % 2 == 0 {
        return Err(Error::InvalidInput(format!("window scans need odd n, got {n}")));
    }
    if b < (n / 2) as i64 {
        return Err(Error::InvalidInput(format!(
            "need B >= ⌊n/2⌋ = {} so the window contains V₀, got B = {b}",
            n / 2
        )));
    }
    if n > 127 {
        return Err(Error::Capacity(format!("u128 counts need n <= 127, got {n}")));
    }
    Ok(())
}

/// Exhaustive check of the extremal inequality over the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StanleyReport {
    pub n: usize,
    pub window_b: i64,
    /// max ρ over the window, as a reduced rational
    pub rho_max: String,
    /// ρ(V₀) at this n
    pub rho_v0: String,
    /// rho_max == rho(V₀)
    pub matches_v0: bool,
    /// canonical classes attaining rho_max, lexicographic
    pub argmax_classes: Vec<Vec<i64>>,
    pub total_subsets: u64,
    pub classes: u64,
    /// classes with ρ strictly above ρ(V₀) — any nonzero value here
    /// contradicts the extremal theorem
    pub violations: u64,
}

/// Maximizes ρ over all distinct n-subsets of [−B, B] and compares with
/// ρ(V₀).
pub fn stanley_verify(n: usize, b: i64) -> Result<StanleyReport> {
    validate_odd_window(n, b)?;
    let total_subsets = check_cap(n, b)?;
    let v0_count = max_count(StepSet::v0(n as u64)?.steps());

    struct Acc {
        max: u128,
        argmax: Vec<Vec<i64>>,
        classes: u64,
        violations: u64,
    }
    let parts = par_scan(
        n,
        b,
        || Acc {
            max: 0,
            argmax: Vec::new(),
            classes: 0,
            violations: 0,
        },
        |acc, set| {
            let count = max_count(set);
            acc.classes += 1;
            if count > v0_count {
                acc.violations += 1;
            }
            if count > acc.max {
                acc.max = count;
                acc.argmax.clear();
                acc.argmax.push(set.to_vec());
            } else if count == acc.max {
                acc.argmax.push(set.to_vec());
            }
        },
    );

    let mut max = 0u128;
    let mut argmax: Vec<Vec<i64>> = Vec::new();
    let mut classes = 0;
    let mut violations = 0;
    for part in parts {
        classes += part.classes;
        violations += part.violations;
        if part.max > max {
            max = part.max;
            argmax = part.argmax;
        } else if part.max == max {
            argmax.extend(part.argmax);
        }
    }

    Ok(StanleyReport {
        n,
        window_b: b,
        rho_max: rho_string(max, n),
        rho_v0: rho_string(v0_count, n),
        matches_v0: max == v0_count,
        argmax_classes: argmax,
        total_subsets,
        classes,
        violations,
    })
}

/// One near-maximizer in a stability report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    /// canonical representative, sorted
    pub set: Vec<i64>,
    #[serde(with = "crate::report::rational_string")]
    pub rho: Ratio<BigInt>,
    /// `12 Σ (v/l)² / (n³−n)` after dilation normalization
    pub variance_ratio: f64,
    pub is_dilate_of_v0: bool,
}

/// Near-maximizers of ρ in a window, with their normalized variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub schema_version: u32,
    pub n: usize,
    pub window_b: i64,
    pub epsilon: f64,
    #[serde(with = "crate::report::rational_string")]
    pub rho_max: Ratio<BigInt>,
    pub total_sets: u64,
    pub classes: u64,
    pub rows: Vec<ScanRow>,
}

/// Lists every class with `ρ ≥ (1−ε)·ρ_max`, sorted by ρ descending
/// and then by the canonical key (the |v|-pattern, then the set), so
/// the lowest-variance representatives of a tie come first.
pub fn stability_scan(n: usize, b: i64, epsilon: f64) -> Result<ScanReport> {
    validate_odd_window(n, b)?;
    if n < 3 {
        return Err(Error::InvalidInput("stability scans need n >= 3".into()));
    }
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidInput(format!(
            "epsilon = {epsilon} must lie in [0, 1)"
        )));
    }
    let total_sets = check_cap(n, b)?;

    // pass 1: the maximum
    let parts = par_scan(
        n,
        b,
        || (0u128, 0u64),
        |acc, set| {
            acc.0 = acc.0.max(max_count(set));
            acc.1 += 1;
        },
    );
    let mut max = 0u128;
    let mut classes = 0u64;
    for (m, c) in parts {
        max = max.max(m);
        classes += c;
    }

    // pass 2: collect classes above the exact rational threshold
    let threshold = Ratio::from_float(1.0 - epsilon)
        .expect("finite epsilon")
        * Ratio::from_integer(BigInt::from(max));
    let survivors = par_scan(
        n,
        b,
        Vec::new,
        |acc: &mut Vec<(u128, Vec<i64>)>, set| {
            let count = max_count(set);
            if Ratio::from_integer(BigInt::from(count)) >= threshold {
                acc.push((count, set.to_vec()));
            }
        },
    );

    let v0_sorted = StepSet::v0(n as u64)?.sorted_steps();
    let mut rows: Vec<ScanRow> = survivors
        .into_iter()
        .flatten()
        .map(|(count, set)| {
            let step_set = StepSet::new(set.clone()).expect("nonempty");
            let (_, w) = normalize_dilation(&step_set).expect("distinct set has a nonzero");
            ScanRow {
                rho: Ratio::new(BigInt::from(count), BigInt::one() << n),
                variance_ratio: variance_ratio(&w).expect("n >= 3"),
                is_dilate_of_v0: w.sorted_steps() == v0_sorted,
                set,
            }
        })
        .collect();

    rows.sort_by(|a, b| {
        b.rho
            .cmp(&a.rho)
            .then_with(|| abs_pattern(&a.set).cmp(&abs_pattern(&b.set)))
            .then_with(|| a.set.cmp(&b.set))
    });

    Ok(ScanReport {
        schema_version: SCHEMA_VERSION,
        n,
        window_b: b,
        epsilon,
        rho_max: Ratio::new(BigInt::from(max), BigInt::one() << n),
        total_sets,
        classes,
        rows,
    })
}

/// Sorted multiset of absolute values; the tie-break key that ranks
/// `{−2,…,2}` ahead of wider sets of equal ρ.
fn abs_pattern(set: &[i64]) -> Vec<i64> {
    let mut a: Vec<i64> = set.iter().map(|&x| x.abs()).collect();
    a.sort_unstable();
    a
}
