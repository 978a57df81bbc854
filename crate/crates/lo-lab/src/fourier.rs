//! Prime-field embedding and the discrete Fourier toolkit.
//!
//! For a prime `p > 2Σ|v_i|` the support of `S` is injective mod p, so
//! `P(S = a)` is recovered exactly by the inversion sum
//! `(1/p) Σ_ξ e_p(−ξa) Π_i cos(2πv_iξ/p)`.
//! The quadratic phase cost `ℓ(ξ) = Σ_i ‖v_iξ/p‖²` (‖·‖ = distance to
//! the nearest integer) controls everything else: the cosine majorant
//! `|Π cos(πv_iξ/p)| ≤ exp(−2ℓ(ξ))`, its level sets
//! `S_m = {ξ : ℓ(ξ) ≤ m}`, the dual cardinality bound
//! `|S_{n/100}| ≤ 8p/n`, and the dyadic doubling diagnostics used by
//! the structural arguments.
//!
//! `‖·‖` is always evaluated in exact integer arithmetic (`min(t, p−t)`
//! with `t = vξ mod p`) before a single float division, so level-set
//! membership at the threshold is decided without rounding drift.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modmath::{dist_numerator, is_prime, next_odd_prime_above};
use crate::steps::StepSet;

/// Scans are O(p·n); refuse primes past this.
pub const MAX_PRIME: u64 = 1 << 26;

/// Fixed chunk width for parallel scans. Partial results are merged in
/// chunk order, so output is identical for every thread count.
const SCAN_CHUNK: u64 = 1 << 14;

/// A step set reduced modulo a prime large enough for exact inversion.
#[derive(Debug, Clone)]
pub struct FieldEmbedding {
    p: u64,
    residues: Vec<i64>,
    source: StepSet,
}

/// Embeds `V` into F_p with `p` the smallest odd prime exceeding
/// `2Σ|v_i| + 1`. Residues are centered in `(−p/2, p/2]`.
pub fn embed_prime(v: &StepSet) -> Result<FieldEmbedding> {
    let threshold = 2 * v.abs_sum() + 1;
    if threshold > MAX_PRIME as u128 {
        return Err(Error::Capacity(format!(
            "2Σ|v|+1 = {threshold} already exceeds the prime guardrail {MAX_PRIME}"
        )));
    }
    let p = next_odd_prime_above(threshold as u64);
    if p > MAX_PRIME {
        return Err(Error::Capacity(format!(
            "required prime {p} exceeds the scan guardrail {MAX_PRIME}"
        )));
    }
    FieldEmbedding::with_prime(p, v.clone())
}

impl FieldEmbedding {
    /// Embedding with an explicit prime; `p` must keep the support of S
    /// injective and stay under the scan guardrail.
    pub fn with_prime(p: u64, source: StepSet) -> Result<Self> {
        if !is_prime(p) || p < 3 {
            return Err(Error::InvalidInput(format!("{p} is not an odd prime")));
        }
        if p > MAX_PRIME {
            return Err(Error::Capacity(format!(
                "prime {p} exceeds the scan guardrail {MAX_PRIME}"
            )));
        }
        if (p as u128) <= 2 * source.abs_sum() {
            return Err(Error::InvalidInput(format!(
                "prime {p} too small: need p > 2Σ|v| = {}",
                2 * source.abs_sum()
            )));
        }
        let residues = source
            .steps()
            .iter()
            .map(|&v| crate::modmath::centered(v, p))
            .collect();
        Ok(FieldEmbedding { p, residues, source })
    }

    /// Embedding from a set already living in F_p (residues taken mod p,
    /// stored centered). No injectivity is claimed, so `point_mass` has
    /// inversion semantics only for embeddings built by [`embed_prime`]
    /// or [`FieldEmbedding::with_prime`].
    pub fn from_residues(p: u64, residues: Vec<i64>) -> Result<Self> {
        if !is_prime(p) || p < 3 {
            return Err(Error::InvalidInput(format!("{p} is not an odd prime")));
        }
        if p > MAX_PRIME {
            return Err(Error::Capacity(format!(
                "prime {p} exceeds the scan guardrail {MAX_PRIME}"
            )));
        }
        let centered: Vec<i64> = residues
            .iter()
            .map(|&v| crate::modmath::centered(v, p))
            .collect();
        let source = StepSet::new(residues)?;
        Ok(FieldEmbedding {
            p,
            residues: centered,
            source,
        })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Centered representatives of the steps in `(−p/2, p/2]`.
    pub fn residues(&self) -> &[i64] {
        &self.residues
    }

    pub fn n(&self) -> usize {
        self.residues.len()
    }

    pub fn source(&self) -> &StepSet {
        &self.source
    }

    /// Integer numerator of `ℓ(ξ) · p²`, i.e. `Σ_i min(t_i, p−t_i)²`
    /// with `t_i = v_iξ mod p`.
    pub fn cost_numerator(&self, xi: u64) -> u128 {
        let p = self.p;
        let mut acc = 0u128;
        for &r in &self.residues {
            let t = ((r as i128 * xi as i128).rem_euclid(p as i128)) as u64;
            let d = dist_numerator(t, p) as u128;
            acc += d * d;
        }
        acc
    }

    /// The quadratic phase cost `ℓ(ξ) = Σ_i ‖v_iξ/p‖²`.
    pub fn cost(&self, xi: u64) -> f64 {
        self.cost_numerator(xi) as f64 / (self.p as f64 * self.p as f64)
    }

    /// `Π_i cos(2πv_iξ/p)` (`halved = false`) or `Π_i cos(πv_iξ/p)`
    /// (`halved = true`, the phase `v_iξ` taken as a plain integer
    /// product, reduced mod 2p where the halved cosine is periodic).
    pub fn cosine_product(&self, xi: u64, halved: bool) -> f64 {
        let p = self.p as f64;
        let mut prod = 1.0;
        for &r in &self.residues {
            let phase = r as i128 * xi as i128;
            if halved {
                let t = phase.rem_euclid(2 * self.p as i128) as u64;
                prod *= (std::f64::consts::PI * t as f64 / p).cos();
            } else {
                let t = phase.rem_euclid(self.p as i128) as u64;
                prod *= (2.0 * std::f64::consts::PI * t as f64 / p).cos();
            }
        }
        prod
    }

    /// `exp(−2ℓ(ξ))`, a guaranteed majorant of `|Π cos(πv_iξ/p)|`.
    pub fn majorant(&self, xi: u64) -> f64 {
        (-2.0 * self.cost(xi)).exp()
    }

    /// The inversion sum `(1/p) Σ_ξ Re[e_p(−ξa) Π_i cos(2πv_iξ/p)]`;
    /// equals `P(S = a)` because the support is injective mod p.
    pub fn point_mass(&self, a: i64) -> f64 {
        let p = self.p;
        let a_mod = a.rem_euclid(p as i64) as u64;
        let total: f64 = chunk_starts(p)
            .into_par_iter()
            .map(|start| {
                let end = (start + SCAN_CHUNK).min(p);
                let mut acc = 0.0;
                for xi in start..end {
                    let t = (a_mod as u128 * xi as u128 % p as u128) as u64;
                    let phase = (2.0 * std::f64::consts::PI * t as f64 / p as f64).cos();
                    acc += phase * self.cosine_product(xi, false);
                }
                acc
            })
            .collect::<Vec<f64>>()
            .into_iter()
            .sum();
        total / p as f64
    }
}

fn chunk_starts(p: u64) -> Vec<u64> {
    (0..p).step_by(SCAN_CHUNK as usize).collect()
}

/// The level set `S_m = {ξ : ℓ(ξ) ≤ m}`. Membership at the exact
/// threshold is inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSet {
    pub m: f64,
    pub p: u64,
    pub members: Vec<u64>,
}

impl LevelSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Full scan over `ξ ∈ {0, …, p−1}`; members come out sorted.
pub fn level_set(e: &FieldEmbedding, m: f64) -> Result<LevelSet> {
    if !(m >= 0.0) {
        return Err(Error::InvalidInput(format!("level threshold m = {m} must be >= 0")));
    }
    let p = e.p();
    let bound = m * p as f64 * p as f64;
    let members: Vec<u64> = chunk_starts(p)
        .into_par_iter()
        .map(|start| {
            let end = (start + SCAN_CHUNK).min(p);
            (start..end)
                .filter(|&xi| e.cost_numerator(xi) as f64 <= bound)
                .collect::<Vec<u64>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    Ok(LevelSet { m, p, members })
}

/// Smallest integer `m ≥ 1` whose level set satisfies
/// `|S_m| · exp(−m+2) ≥ rho_value · p`. The decomposition of the
/// inversion sum guarantees one exists whenever `rho_value ≤ ρ(V)`;
/// scanning past `m = n` without a witness is flagged as a violation.
pub fn level_witness(e: &FieldEmbedding, rho_value: f64) -> Result<(u32, LevelSet)> {
    if !(rho_value > 0.0 && rho_value <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "rho_value = {rho_value} must lie in (0, 1]"
        )));
    }
    let target = rho_value * e.p() as f64;
    for m in 1..=(e.n() as u32) {
        let set = level_set(e, m as f64)?;
        if set.len() as f64 * (-(m as f64) + 2.0).exp() >= target {
            return Ok((m, set));
        }
    }
    Err(Error::InvariantViolation(format!(
        "no level witness m <= n = {} for rho = {rho_value}; this contradicts the level decomposition",
        e.n()
    )))
}

/// Results of the dual cardinality check on `S_{n/100}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualBoundReport {
    pub p: u64,
    pub n: usize,
    pub m: f64,
    /// `|S_{n/100}|`
    pub lhs: u64,
    /// `8p/n`
    pub rhs: f64,
    pub holds: bool,
    /// min/max of `T_a = Σ_{v∈V} cos(2πav/p)` over `a ∈ S_{n/100}`
    pub t_min: f64,
    pub t_max: f64,
    /// every `T_a ≥ n/2` on the level set
    pub t_floor_holds: bool,
    /// `Σ_{a∈F_p} T_a²`
    pub t_sq_sum: f64,
    /// `2pn`
    pub t_sq_bound: f64,
    pub t_sq_holds: bool,
}

fn t_sum(e: &FieldEmbedding, a: u64) -> f64 {
    let p = e.p();
    e.residues()
        .iter()
        .map(|&r| {
            let t = ((r as i128 * a as i128).rem_euclid(p as i128)) as u64;
            (2.0 * std::f64::consts::PI * t as f64 / p as f64).cos()
        })
        .sum()
}

/// Checks `|S_{n/100}| ≤ 8p/n` together with the `T_a` statistics that
/// drive it. Vacuous below `n = 100`.
pub fn dual_bound_check(e: &FieldEmbedding) -> Result<DualBoundReport> {
    let n = e.n();
    if n < 100 {
        return Err(Error::NotApplicable(format!(
            "dual bound needs n >= 100 so that m = n/100 >= 1; got n = {n}"
        )));
    }
    let p = e.p();
    let m = n as f64 / 100.0;
    let set = level_set(e, m)?;
    let (mut t_min, mut t_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &a in &set.members {
        let t = t_sum(e, a);
        t_min = t_min.min(t);
        t_max = t_max.max(t);
    }
    let t_sq_sum: f64 = chunk_starts(p)
        .into_par_iter()
        .map(|start| {
            let end = (start + SCAN_CHUNK).min(p);
            (start..end)
                .map(|a| {
                    let t = t_sum(e, a);
                    t * t
                })
                .sum::<f64>()
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .sum();
    let rhs = 8.0 * p as f64 / n as f64;
    let t_sq_bound = 2.0 * p as f64 * n as f64;
    Ok(DualBoundReport {
        p,
        n,
        m,
        lhs: set.len() as u64,
        rhs,
        holds: (set.len() as f64) <= rhs,
        t_min,
        t_max,
        t_floor_holds: t_min >= n as f64 / 2.0,
        t_sq_sum,
        t_sq_bound,
        t_sq_holds: t_sq_sum <= t_sq_bound,
    })
}

/// `A + B` in F_p via a p-bit occupancy table; output sorted.
pub fn sumset(a: &[u64], b: &[u64], p: u64) -> Result<Vec<u64>> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("sumset arguments must be nonempty".into()));
    }
    if p > MAX_PRIME {
        return Err(Error::Capacity(format!("p = {p} exceeds {MAX_PRIME}")));
    }
    if a.iter().chain(b).any(|&x| x >= p) {
        return Err(Error::InvalidInput("sumset elements must lie in [0, p)".into()));
    }
    let words = (p as usize + 63) / 64;
    let mut bits = vec![0u64; words];
    for &x in a {
        for &y in b {
            let s = x + y;
            let s = if s >= p { s - p } else { s };
            bits[(s / 64) as usize] |= 1 << (s % 64);
        }
    }
    let mut out = Vec::new();
    for s in 0..p {
        if bits[(s / 64) as usize] >> (s % 64) & 1 == 1 {
            out.push(s);
        }
    }
    Ok(out)
}

/// One step of the doubling sequence `S_m, 2S_m, …`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicStep {
    pub i: u32,
    /// `|2^i S_m|`
    pub size: u64,
    /// `2^i S_m ⊆ S_{4^i m}`
    pub contained_in_level: bool,
    /// `|2^i S_m| ≥ min(p, 2|2^{i−1} S_m| − 1)`
    pub cauchy_davenport_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicProfile {
    pub p: u64,
    pub m: f64,
    pub growth: f64,
    pub steps: Vec<DyadicStep>,
    /// First `i ≥ 1` with `|2^i S_m| < growth · |2^{i−1} S_m|`.
    pub slow_index: Option<u32>,
}

/// Iterated sumset doubling of `S_m` with per-step containment and
/// Cauchy–Davenport verification. The number of doublings is the
/// largest `l` with `4^l m ≤ n/100` (an `l = 0` profile when
/// `n < 100m`), capped at `⌈log₂ p⌉` so degenerate `m = 0` terminates.
pub fn dyadic_profile(e: &FieldEmbedding, m: f64, growth: f64) -> Result<DyadicProfile> {
    if !(m >= 0.0) {
        return Err(Error::InvalidInput(format!("m = {m} must be >= 0")));
    }
    if !(growth > 1.0) {
        return Err(Error::InvalidInput(format!("growth = {growth} must be > 1")));
    }
    let p = e.p();
    let n = e.n() as f64;
    let log2p = (64 - (p - 1).leading_zeros()) as u32;
    let mut l = 0u32;
    if n >= 100.0 * m {
        while 4f64.powi(l as i32 + 1) * m <= n / 100.0 && l < log2p {
            l += 1;
        }
    }
    let base = level_set(e, m)?;
    let mut steps = vec![DyadicStep {
        i: 0,
        size: base.len() as u64,
        contained_in_level: true,
        cauchy_davenport_ok: true,
    }];
    let mut slow_index = None;
    let mut cur = base.members;
    for i in 1..=l {
        let prev_size = cur.len() as u64;
        cur = sumset(&cur, &cur, p)?;
        let size = cur.len() as u64;
        let level_bound = 4f64.powi(i as i32) * m * p as f64 * p as f64;
        let contained = cur
            .iter()
            .all(|&xi| e.cost_numerator(xi) as f64 <= level_bound);
        let cd = size >= p.min(2 * prev_size - 1);
        if slow_index.is_none() && (size as f64) < growth * prev_size as f64 {
            slow_index = Some(i);
        }
        steps.push(DyadicStep {
            i,
            size,
            contained_in_level: contained,
            cauchy_davenport_ok: cd,
        });
    }
    Ok(DyadicProfile {
        p,
        m,
        growth,
        steps,
        slow_index,
    })
}
