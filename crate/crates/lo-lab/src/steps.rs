//! The step multiset `V` of the signed sum `S = Σ η_i v_i`.

use crate::error::{Error, Result};

/// An ordered multiset of integer steps.
///
/// Zero steps are allowed (the interval set `V₀` contains 0); they
/// contribute an identity convolution to the distribution of `S`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StepSet {
    steps: Vec<i64>,
    distinct: bool,
}

impl StepSet {
    /// Builds a step set from a nonempty list of integers.
    pub fn new(steps: Vec<i64>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidInput("step set must be nonempty".into()));
        }
        let mut sorted = steps.clone();
        sorted.sort_unstable();
        let distinct = sorted.windows(2).all(|w| w[0] != w[1]);
        Ok(StepSet { steps, distinct })
    }

    /// The interval set `V₀ = {−⌊n/2⌋, …, ⌊n/2⌋}` for odd `n`.
    pub fn v0(n: u64) -> Result<Self> {
        if n == 0 || n % 2 == 0 {
            return Err(Error::InvalidInput(format!(
                "V0 is defined for odd n >= 1, got {n}"
            )));
        }
        let k = (n / 2) as i64;
        StepSet::new((-k..=k).collect())
    }

    /// Parses a comma-separated list of integers, e.g. `"-2,-1,0,1,2"`.
    pub fn parse(text: &str) -> Result<Self> {
        let steps = text
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<i64>()
                    .map_err(|e| Error::InvalidInput(format!("bad step {tok:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        StepSet::new(steps)
    }

    pub fn n(&self) -> usize {
        self.steps.len()
    }

    pub fn steps(&self) -> &[i64] {
        &self.steps
    }

    /// True iff no step value repeats.
    pub fn is_distinct(&self) -> bool {
        self.distinct
    }

    /// `Σ |v_i|`, computed without overflow.
    pub fn abs_sum(&self) -> u128 {
        self.steps.iter().map(|&v| v.unsigned_abs() as u128).sum()
    }

    /// Largest `|v_i|`.
    pub fn max_abs(&self) -> u64 {
        self.steps.iter().map(|&v| v.unsigned_abs()).max().unwrap_or(0)
    }

    /// The dilated set `l · V`.
    pub fn dilate(&self, l: i64) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidInput("dilation factor must be nonzero".into()));
        }
        let steps = self
            .steps
            .iter()
            .map(|&v| {
                v.checked_mul(l)
                    .ok_or_else(|| Error::Capacity(format!("dilation {l}*{v} overflows i64")))
            })
            .collect::<Result<Vec<_>>>()?;
        StepSet::new(steps)
    }

    /// Steps in sorted order (the canonical presentation for reports).
    pub fn sorted_steps(&self) -> Vec<i64> {
        let mut s = self.steps.clone();
        s.sort_unstable();
        s
    }
}

impl std::fmt::Display for StepSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.steps.iter().map(|v| v.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}
