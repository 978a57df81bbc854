//! The asymptotic behaviour of `ρ(V₀)`: the Gaussian main term, the
//! three-regime tail majorant, and the constant √(24/π).
//!
//! With `V₀ = {−⌊n/2⌋, …, ⌊n/2⌋}` and `Σ_{i∈V₀} i² = (n³−n)/12`, the
//! inversion sum splits at `‖ξ/p‖ = log²n / n^{3/2}`: the central part
//! is a Riemann sum of a Gaussian and converges to `√(24/π) n^{-3/2}`,
//! and the tail is dominated by the `exp(−2ℓ(ξ))` majorant, summed here
//! over the three regimes `[cutoff, 1/n)`, `[1/n, 1/4)`, `[1/4, 1/2]`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{ExactDistribution, FloatDistribution};
use crate::error::{Error, Result};
use crate::fourier::embed_prime;
use crate::modmath::dist_numerator;
use crate::steps::StepSet;

/// `√(24/π) ≈ 2.7639532`, the constant in `ρ(V₀) ~ √(24/π) n^{-3/2}`.
pub fn c0_constant() -> f64 {
    (24.0 / std::f64::consts::PI).sqrt()
}

/// The Gaussian main term in closed form: `4√3 / √(2π(n³−n))`, using
/// the exact `Σ_{i∈V₀} i² = (n³−n)/12`. Satisfies
/// `sigma1_gaussian(n) · n^{3/2} → √(24/π)`.
pub fn sigma1_gaussian(n: u64) -> Result<f64> {
    if n < 3 || n % 2 == 0 {
        return Err(Error::InvalidInput(format!(
            "gaussian main term needs odd n >= 3, got {n}"
        )));
    }
    let nf = n as f64;
    Ok(4.0 * 3f64.sqrt() / (2.0 * std::f64::consts::PI * (nf * nf * nf - nf)).sqrt())
}

/// Majorant sums of the inversion identity for V₀, split by `‖ξ/p‖`.
///
/// The four parts partition `(1/p) Σ_ξ exp(−2ℓ(ξ))`, so their sum
/// dominates `ρ(V₀)`. `large_min_cost` is the observed minimum of
/// `ℓ(ξ)` on the large regime; rational frequencies `ξ/p ≈ 1/3` pin it
/// near `2n/27`, safely above the `n/32` floor the averaged cosine
/// bound guarantees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub n: u64,
    pub p: u64,
    /// regime boundary `log²n / n^{3/2}` (natural log)
    pub cutoff: f64,
    /// majorant sum over `‖ξ/p‖ < cutoff` (includes ξ = 0)
    pub sigma1: f64,
    /// majorant sum over `[cutoff, 1/n)`
    pub sigma2_small: f64,
    /// majorant sum over `[1/n, 1/4)`
    pub sigma2_medium: f64,
    /// majorant sum over `[1/4, 1/2]`
    pub sigma2_large: f64,
    /// min of `ℓ(ξ)` over the large regime, if nonempty
    pub large_min_cost: Option<f64>,
}

impl RegimeReport {
    /// Total tail majorant `Σ₂ = small + medium + large`.
    pub fn sigma2_total(&self) -> f64 {
        self.sigma2_small + self.sigma2_medium + self.sigma2_large
    }
}

const SCAN_CHUNK: u64 = 1 << 14;

/// Scans `ξ ∈ F_p` for `V₀` at odd `n` and accumulates the majorant
/// `exp(−2ℓ(ξ))` per regime.
pub fn sigma2_split(n: u64) -> Result<RegimeReport> {
    if n < 3 || n % 2 == 0 {
        return Err(Error::InvalidInput(format!("regime split needs odd n >= 3, got {n}")));
    }
    let v = StepSet::v0(n)?;
    let e = embed_prime(&v)?;
    let p = e.p();
    let cutoff = (n as f64).ln().powi(2) / (n as f64).powf(1.5);

    #[derive(Clone, Copy)]
    struct Partial {
        sigma1: f64,
        small: f64,
        medium: f64,
        large: f64,
        large_min: f64,
    }

    let starts: Vec<u64> = (0..p).step_by(SCAN_CHUNK as usize).collect();
    let partials: Vec<Partial> = starts
        .into_par_iter()
        .map(|start| {
            let end = (start + SCAN_CHUNK).min(p);
            let mut acc = Partial {
                sigma1: 0.0,
                small: 0.0,
                medium: 0.0,
                large: 0.0,
                large_min: f64::INFINITY,
            };
            for xi in start..end {
                let t = dist_numerator(xi, p) as f64 / p as f64;
                let cost = e.cost(xi);
                let w = (-2.0 * cost).exp();
                if t < cutoff {
                    acc.sigma1 += w;
                } else if t < 1.0 / n as f64 {
                    acc.small += w;
                } else if t < 0.25 {
                    acc.medium += w;
                } else {
                    acc.large += w;
                    acc.large_min = acc.large_min.min(cost);
                }
            }
            acc
        })
        .collect();

    let mut sigma1 = 0.0;
    let mut small = 0.0;
    let mut medium = 0.0;
    let mut large = 0.0;
    let mut large_min = f64::INFINITY;
    for part in partials {
        sigma1 += part.sigma1;
        small += part.small;
        medium += part.medium;
        large += part.large;
        large_min = large_min.min(part.large_min);
    }
    let pf = p as f64;
    Ok(RegimeReport {
        n,
        p,
        cutoff,
        sigma1: sigma1 / pf,
        sigma2_small: small / pf,
        sigma2_medium: medium / pf,
        sigma2_large: large / pf,
        large_min_cost: if large_min.is_finite() { Some(large_min) } else { None },
    })
}

/// Which distribution backend computes ρ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Exact,
    Float,
}

impl std::str::FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Backend::Exact),
            "float" => Ok(Backend::Float),
            other => Err(Error::InvalidInput(format!(
                "backend must be 'exact' or 'float', got {other:?}"
            ))),
        }
    }
}

/// One row of the `ρ(V₀) · n^{3/2}` convergence table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct V0Row {
    pub n: u64,
    /// exact backend: reduced rational; float backend: decimal
    pub rho: String,
    /// `ρ(V₀) · n^{3/2}`
    pub scaled: f64,
    /// `sigma1_gaussian(n) · n^{3/2}`
    pub prediction: f64,
    /// `|scaled − √(24/π)|`
    pub abs_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct V0Table {
    pub backend: Backend,
    pub rows: Vec<V0Row>,
    /// `abs_gap` strictly decreasing across the rows as listed
    pub gaps_strictly_decreasing: bool,
}

/// ρ(V₀) and its scaling for each listed odd `n`.
pub fn v0_table(ns: &[u64], backend: Backend) -> Result<V0Table> {
    if ns.is_empty() {
        return Err(Error::InvalidInput("need at least one n".into()));
    }
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let v = StepSet::v0(n)?;
        let (rho_value, rho_text) = match backend {
            Backend::Exact => {
                let r = ExactDistribution::compute(&v)?.rho();
                let value = num::ToPrimitive::to_f64(&r.rho).ok_or_else(|| {
                    Error::Capacity(format!("rho at n={n} does not fit f64"))
                })?;
                (value, r.rho.to_string())
            }
            Backend::Float => {
                let (value, _) = FloatDistribution::compute(&v)?.rho();
                (value, format!("{value}"))
            }
        };
        let scaled = rho_value * (n as f64).powf(1.5);
        let prediction = sigma1_gaussian(n)? * (n as f64).powf(1.5);
        rows.push(V0Row {
            n,
            rho: rho_text,
            scaled,
            prediction,
            abs_gap: (scaled - c0_constant()).abs(),
        });
    }
    let gaps_strictly_decreasing = rows.windows(2).all(|w| w[1].abs_gap < w[0].abs_gap);
    Ok(V0Table {
        backend,
        rows,
        gaps_strictly_decreasing,
    })
}
