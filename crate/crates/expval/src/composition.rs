//! Occupation-number compositions: `d` non-negative counts summing to the
//! number of copies `N`.

use std::fmt;

use crate::error::{Error, Result};

/// Largest copy count for which multinomial weights are computed exactly.
pub const MAX_EXACT_COPIES: u32 = 20;

/// An occupation-number vector `(s_1, ..., s_d)` with `sum s_n = N`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Composition {
    counts: Vec<u32>,
}

impl Composition {
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidComposition("empty count vector".into()));
        }
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Number of copies `N = sum s_n`.
    pub fn num_copies(&self) -> u32 {
        self.counts.iter().sum()
    }

    /// Number of parts `d`.
    pub fn num_parts(&self) -> usize {
        self.counts.len()
    }

    /// `N! / (s_1! ... s_d!)`: the number of length-`N` basis strings with
    /// this occupation. Exact integer arithmetic; copy counts above
    /// [`MAX_EXACT_COPIES`] are rejected rather than silently degraded.
    pub fn multinomial_weight(&self) -> Result<u64> {
        let n = self.num_copies();
        if n > MAX_EXACT_COPIES {
            return Err(Error::CopiesOverflow {
                n,
                max: MAX_EXACT_COPIES,
            });
        }
        let num = factorial_u128(n);
        let den: u128 = self.counts.iter().map(|&s| factorial_u128(s)).product();
        Ok(u64::try_from(num / den).expect("multinomial fits in u64 for N <= 20"))
    }
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.counts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

fn factorial_u128(n: u32) -> u128 {
    (1..=n as u128).product()
}

/// All compositions of `n` copies into `d` parts, in lexicographically
/// descending order. The count is `C(n + d - 1, d - 1)`.
pub fn enumerate_compositions(n: u32, d: usize) -> Result<Vec<Composition>> {
    if d == 0 {
        return Err(Error::InvalidComposition(
            "need at least one part (d >= 1)".into(),
        ));
    }
    let mut out = Vec::with_capacity(composition_count(n, d) as usize);
    let mut prefix = Vec::with_capacity(d);
    descend(n, d, &mut prefix, &mut out);
    Ok(out)
}

fn descend(rem: u32, parts: usize, prefix: &mut Vec<u32>, out: &mut Vec<Composition>) {
    if parts == 1 {
        prefix.push(rem);
        out.push(Composition {
            counts: prefix.clone(),
        });
        prefix.pop();
        return;
    }
    for v in (0..=rem).rev() {
        prefix.push(v);
        descend(rem - v, parts - 1, prefix, out);
        prefix.pop();
    }
}

/// `C(n + d - 1, d - 1)`, the number of compositions of `n` into `d` parts.
pub fn composition_count(n: u32, d: usize) -> u64 {
    let d = d as u64;
    let n = n as u64;
    // product form keeps intermediates small
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for k in 1..d {
        num *= (n + k) as u128;
        den *= k as u128;
    }
    u64::try_from(num / den).expect("composition count fits in u64")
}
