//! Exact distribution of `u = lambda . p` for `p ~ Dirichlet(alpha)` with
//! integer `alpha`.
//!
//! The density of a convex combination of simplex coordinates under an
//! integer-parameter Dirichlet law is a single normalized B-spline whose knot
//! multiset repeats each eigenvalue `alpha_n` times (Curry-Schoenberg). That
//! turns every weight-function evaluation into a one-dimensional integral
//! with known breakpoints, so kinked deviation measures integrate to full
//! accuracy: the integrand is analytic between consecutive knots once the
//! potential kink at `u = omega` is split out.

use crate::scalar::{cast, Real};

#[derive(Clone, Debug)]
pub(crate) struct PushforwardDensity<T> {
    /// Ascending knots with multiplicities expanded; length `sum(alpha)`.
    knots: Vec<T>,
    /// Distinct knot values: the density's polynomial breakpoints.
    distinct: Vec<T>,
    degree: usize,
    norm: T,
}

impl<T: Real> PushforwardDensity<T> {
    /// `multiplicities[n]` is the (integer) Dirichlet parameter attached to
    /// `eigenvalues[n]`. Exactly equal eigenvalues merge into one knot of
    /// higher multiplicity.
    pub fn new(eigenvalues: &[T], multiplicities: &[u32]) -> Self {
        assert_eq!(eigenvalues.len(), multiplicities.len());
        let mut pairs: Vec<(T, u32)> = eigenvalues
            .iter()
            .copied()
            .zip(multiplicities.iter().copied())
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite eigenvalues"));
        let mut knots = Vec::new();
        let mut distinct: Vec<T> = Vec::new();
        for (lam, m) in pairs {
            if distinct.last() != Some(&lam) {
                distinct.push(lam);
            }
            knots.extend(std::iter::repeat(lam).take(m as usize));
        }
        debug_assert!(knots.len() >= 2, "need sum(alpha) >= 2");
        let degree = knots.len() - 2;
        let span = knots[knots.len() - 1] - knots[0];
        let norm = if span > T::zero() {
            cast::<T>(degree as f64 + 1.0) / span
        } else {
            T::zero()
        };
        Self {
            knots,
            distinct,
            degree,
            norm,
        }
    }

    /// All mass sits at a single point (constant observable).
    pub fn is_point_mass(&self) -> bool {
        self.distinct.len() == 1
    }

    pub fn point(&self) -> T {
        self.knots[0]
    }

    pub fn support(&self) -> (T, T) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.distinct
    }

    /// Cox-de Boor evaluation of the normalized density at `u`.
    pub fn eval(&self, u: T) -> T {
        let m = self.knots.len();
        let mut vals = vec![T::zero(); m - 1];
        for i in 0..m - 1 {
            if self.knots[i] <= u && u < self.knots[i + 1] {
                vals[i] = T::one();
            }
        }
        for j in 1..=self.degree {
            for i in 0..m - 1 - j {
                let mut acc = T::zero();
                let den_left = self.knots[i + j] - self.knots[i];
                if den_left > T::zero() {
                    acc = acc + (u - self.knots[i]) / den_left * vals[i];
                }
                let den_right = self.knots[i + j + 1] - self.knots[i + 1];
                if den_right > T::zero() {
                    acc = acc + (self.knots[i + j + 1] - u) / den_right * vals[i + 1];
                }
                vals[i] = acc;
            }
        }
        vals[0] * self.norm
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplex::gauss::beta_rule;

    fn dirichlet_mean_var(lams: &[f64], alpha: &[f64]) -> (f64, f64) {
        let a: f64 = alpha.iter().sum();
        let mean: f64 = lams.iter().zip(alpha).map(|(&l, &al)| l * al).sum::<f64>() / a;
        let second: f64 = lams.iter().zip(alpha).map(|(&l, &al)| l * l * al).sum::<f64>() / a;
        let var = (second - mean * mean) / (a + 1.0);
        (mean, var)
    }

    fn density_moments(dens: &PushforwardDensity<f64>, order: usize) -> (f64, f64, f64) {
        let rule = beta_rule(order, 1.0, 1.0);
        let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for seg in dens.breakpoints().windows(2) {
            let (a, b) = (seg[0], seg[1]);
            for &(t, w) in rule.iter() {
                let u = a + (b - a) * t;
                let f = dens.eval(u) * (b - a) * w;
                m0 += f;
                m1 += f * u;
                m2 += f * u * u;
            }
        }
        (m0, m1, m2)
    }

    #[test]
    fn matches_dirichlet_moments() {
        let cases: Vec<(Vec<f64>, Vec<u32>)> = vec![
            (vec![1.0, -1.0], vec![2, 1]),
            (vec![1.0, 0.0, -1.0], vec![1, 1, 1]),
            (vec![0.3, 0.3, -0.7], vec![2, 3, 1]),
            (vec![2.0, -1.0, 0.5, 0.25], vec![1, 2, 1, 3]),
        ];
        for (lams, mult) in cases {
            let dens = PushforwardDensity::new(&lams, &mult);
            let (m0, m1, m2) = density_moments(&dens, 48);
            let alpha: Vec<f64> = mult.iter().map(|&m| m as f64).collect();
            let (mean, var) = dirichlet_mean_var(&lams, &alpha);
            assert!((m0 - 1.0).abs() < 1e-12, "norm {m0} for {lams:?}");
            assert!((m1 - mean).abs() < 1e-12, "mean {m1} vs {mean}");
            assert!((m2 - (var + mean * mean)).abs() < 1e-12, "second moment");
        }
    }

    #[test]
    fn merges_duplicate_eigenvalues() {
        let dens = PushforwardDensity::new(&[1.0, 1.0, -1.0], &[2, 1, 1]);
        assert_eq!(dens.breakpoints(), &[-1.0, 1.0]);
        let (m0, m1, _) = density_moments(&dens, 48);
        let (mean, _) = dirichlet_mean_var(&[1.0, 1.0, -1.0], &[2.0, 1.0, 1.0]);
        assert!((m0 - 1.0).abs() < 1e-12);
        assert!((m1 - mean).abs() < 1e-12);
    }

    #[test]
    fn point_mass_for_constant_eigenvalues() {
        let dens = PushforwardDensity::new(&[0.5, 0.5], &[3, 2]);
        assert!(dens.is_point_mass());
        assert_eq!(dens.point(), 0.5);
    }

    #[test]
    fn uniform_case_is_flat() {
        // d = 2, alpha = (1,1): u uniform on [-1, 1]
        let dens = PushforwardDensity::new(&[1.0, -1.0], &[1, 1]);
        for u in [-0.9, -0.3, 0.2, 0.8] {
            assert!((dens.eval(u) - 0.5f64).abs() < 1e-15);
        }
    }

    #[test]
    fn beta_3_1_pushforward() {
        // alpha = (3,1), lambda = (1,-1): p ~ Beta(3,1), u = 2p-1,
        // density 3 p^2 dp/du = (3/8)(1+u)^2
        let dens = PushforwardDensity::new(&[1.0, -1.0], &[3, 1]);
        for u in [-0.7, 0.0, 0.5, 0.9] {
            let exact = 3.0 / 8.0 * (1.0f64 + u).powi(2);
            assert!((dens.eval(u) - exact).abs() < 1e-14, "u={u}");
        }
    }
}
