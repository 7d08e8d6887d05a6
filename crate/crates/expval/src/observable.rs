//! Observables, represented by their eigenvalues in a fixed eigenbasis.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A physical observable on a `d`-dimensional Hilbert space, stored as its
/// real eigenvalues. All computations happen in the eigenbasis, identified
/// with the standard basis, so the eigenvectors are never materialized.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable<T> {
    eigenvalues: Vec<T>,
    constant: bool,
}

impl<T: Real> Observable<T> {
    /// Requires `d >= 2` and finite eigenvalues. Duplicate eigenvalues are
    /// allowed and handled correctly downstream.
    pub fn new(eigenvalues: Vec<T>) -> Result<Self> {
        if eigenvalues.len() < 2 {
            return Err(Error::InvalidObservable(format!(
                "need at least 2 eigenvalues, got {}",
                eigenvalues.len()
            )));
        }
        if let Some(bad) = eigenvalues.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidObservable(format!(
                "non-finite eigenvalue {bad}"
            )));
        }
        let constant = eigenvalues.iter().all(|&l| l == eigenvalues[0]);
        Ok(Self {
            eigenvalues,
            constant,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    pub fn lambda_min(&self) -> T {
        self.eigenvalues
            .iter()
            .copied()
            .fold(T::infinity(), T::min)
    }

    pub fn lambda_max(&self) -> T {
        self.eigenvalues
            .iter()
            .copied()
            .fold(T::neg_infinity(), T::max)
    }

    pub fn is_constant(&self) -> bool {
        self.constant
    }

    /// Expectation value for outcome probabilities `probs` (length `d`,
    /// summing to 1). Exact for constant observables, where the dot product
    /// would otherwise pick up normalization round-off.
    pub fn expectation(&self, probs: &[T]) -> T {
        debug_assert_eq!(probs.len(), self.dim());
        if self.constant {
            return self.eigenvalues[0];
        }
        self.eigenvalues
            .iter()
            .zip(probs)
            .map(|(&l, &p)| l * p)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_single_eigenvalue() {
        assert!(Observable::new(vec![1.0]).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        assert!(Observable::new(vec![1.0, f64::NAN]).is_err());
        assert!(Observable::new(vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn extrema_and_expectation() {
        let obs = Observable::new(vec![1.0, 0.0, -1.0]).unwrap();
        assert_eq!(obs.lambda_min(), -1.0);
        assert_eq!(obs.lambda_max(), 1.0);
        assert!(!obs.is_constant());
        assert_eq!(obs.expectation(&[0.5, 0.25, 0.25]), 0.25);
    }

    #[test]
    fn constant_observable() {
        let obs = Observable::new(vec![2.0, 2.0]).unwrap();
        assert!(obs.is_constant());
    }
}
