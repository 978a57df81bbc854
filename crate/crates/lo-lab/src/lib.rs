//! A laboratory for the concentration of signed Bernoulli sums.
//!
//! Given a multiset `V = {v_1, …, v_n}` of integers and iid signs
//! `η_i ∈ {±1}`, the random walk `S = Σ η_i v_i` has concentration
//! probability `ρ(V) = max_s P(S = s)`. This crate computes ρ exactly
//! (arbitrary precision) or in floating point at scale, reproduces the
//! classical Fourier-analytic bounds over a prime field, and verifies
//! extremal statements (the Erdős bound, Stanley's theorem for the
//! interval set `V₀ = {−⌊n/2⌋, …, ⌊n/2⌋}`, and the stability of its
//! near-maximizers) by exhaustive search at desk scale.
//!
//! The main entry points:
//!
//! * [`dist`] — exact/float distributions, ρ, the Erdős binomial bound,
//!   Monte Carlo cross-validation.
//! * [`fourier`] — prime-field embedding, the inversion identity, cosine
//!   majorants, level sets, the dual cardinality bound, sumsets and
//!   dyadic doubling diagnostics.
//! * [`asymp`] — the Gaussian main term, tail-regime majorant sums and
//!   the constant √(24/π) for ρ(V₀).
//! * [`structure`] — dilation normalization, irreducibility reduction,
//!   the arrangement inequality, greedy block bounds and a constructive
//!   dilation search in F_p.
//! * [`extremal`] — exhaustive window scans: Stanley verification and
//!   stability reports.
//! * [`cli`] — the `lo-lab` command line built on all of the above.
//!
//! Every operation is a pure function of its inputs; fixed seeds give
//! byte-identical reports regardless of thread count.

pub mod asymp;
pub mod cli;
pub mod dist;
pub mod error;
pub mod extremal;
pub mod fourier;
pub mod modmath;
pub mod report;
pub mod steps;
pub mod structure;

pub use error::{Error, Result};
pub use steps::StepSet;
