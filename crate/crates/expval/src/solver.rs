//! Optimal estimators: minimize the weight functions over the eigenvalue
//! bracket and assemble estimator tables.
//!
//! The weight of a composition decreases left of the smallest eigenvalue and
//! increases right of the largest one, so `[lambda_min, lambda_max]` always
//! brackets a global minimum, for both regularity classes. Golden-section
//! search needs no derivatives and tolerates the kinked unimodal measures; a
//! short finite-difference Newton polish afterwards pushes smooth-convex
//! minimizers well below the float noise floor of pure section search.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::composition::{enumerate_compositions, Composition};
use crate::error::{Error, Result};
use crate::measure::{DeviationMeasure, Regularity};
use crate::observable::Observable;
use crate::scalar::{cast, upcast, Real};
use crate::simplex::{
    nonuniform_objective, prior_mass, uniform_objective, SimplexPrior, SimplexQuadratureConfig,
    WObjective,
};

/// Scalar-minimizer configuration.
#[derive(Clone, Debug)]
pub struct SolverConfig<T> {
    /// Absolute tolerance on the minimizer location.
    pub omega_tol: T,
    pub max_iters: u32,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            omega_tol: cast(1e-10),
            max_iters: 200,
        }
    }
}

/// One estimator-table record.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorEntry<T> {
    /// Minimizing estimate for this occupation.
    pub estimator: T,
    /// Weight value at the minimizer.
    pub min_weight: T,
    /// False when the measure is merely unimodal and the minimum may be a
    /// flat set, of which one point is reported.
    pub unique: bool,
}

/// Estimators for every composition of `N` copies.
#[derive(Clone, Debug)]
pub struct EstimatorTable<T> {
    observable: Observable<T>,
    measure: DeviationMeasure<T>,
    num_copies: u32,
    entries: BTreeMap<Composition, EstimatorEntry<T>>,
}

impl<T: Real> EstimatorTable<T> {
    /// Assembles a table from explicit entries. There must be exactly one
    /// entry per composition and every estimator must lie in the eigenvalue
    /// bracket.
    pub fn from_entries(
        observable: Observable<T>,
        measure: DeviationMeasure<T>,
        num_copies: u32,
        entries: BTreeMap<Composition, EstimatorEntry<T>>,
    ) -> Result<Self> {
        let expected = enumerate_compositions(num_copies, observable.dim())?;
        if entries.len() != expected.len() {
            return Err(Error::InvalidConfig(format!(
                "{} entries for {} compositions",
                entries.len(),
                expected.len()
            )));
        }
        for s in &expected {
            let entry = entries
                .get(s)
                .ok_or_else(|| Error::MissingTableEntry(s.to_string()))?;
            if entry.estimator < observable.lambda_min()
                || entry.estimator > observable.lambda_max()
            {
                return Err(Error::InvalidConfig(format!(
                    "estimator {} for {s} escapes the eigenvalue bracket",
                    entry.estimator
                )));
            }
        }
        Ok(Self {
            observable,
            measure,
            num_copies,
            entries,
        })
    }

    pub fn observable(&self) -> &Observable<T> {
        &self.observable
    }

    pub fn measure(&self) -> &DeviationMeasure<T> {
        &self.measure
    }

    pub fn num_copies(&self) -> u32 {
        self.num_copies
    }

    pub fn get(&self, s: &Composition) -> Option<&EstimatorEntry<T>> {
        self.entries.get(s)
    }

    pub fn entries(&self) -> &BTreeMap<Composition, EstimatorEntry<T>> {
        &self.entries
    }

    /// Records in the canonical enumeration order (descending occupations).
    pub fn records(&self) -> Vec<(Composition, EstimatorEntry<T>)> {
        enumerate_compositions(self.num_copies, self.observable.dim())
            .expect("table dimensions are valid")
            .into_iter()
            .map(|s| {
                let e = self.entries[&s];
                (s, e)
            })
            .collect()
    }

    /// Minimum mean error: `sum_s multinomial(s) * w_s(estimator_s)`.
    pub fn min_mean_error(&self) -> Result<T> {
        let mut total = T::zero();
        for (s, entry) in &self.entries {
            total = total + cast::<T>(s.multinomial_weight()? as f64) * entry.min_weight;
        }
        Ok(total)
    }
}

/// Golden-section search on `[lo, hi]` followed by an optional Newton polish
/// for smooth objectives. Returns the minimizer and its objective value.
pub(crate) fn minimize_scalar<T, F>(
    f: F,
    lo: T,
    hi: T,
    cfg: &SolverConfig<T>,
    smooth: bool,
) -> Result<(T, T)>
where
    T: Real,
    F: Fn(T) -> Result<T>,
{
    if !(cfg.omega_tol > T::zero()) || cfg.max_iters == 0 {
        return Err(Error::InvalidConfig(
            "omega_tol must be positive and max_iters >= 1".into(),
        ));
    }
    if !(hi > lo) {
        let v = f(lo)?;
        return Ok((lo, v));
    }
    let span = hi - lo;
    let inv_phi = cast::<T>((5.0f64.sqrt() - 1.0) / 2.0);
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..cfg.max_iters {
        if b - a <= cfg.omega_tol {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2)?;
        }
    }
    let mut x = (a + b) * cast(0.5);
    let mut fx = f(x)?;
    if smooth {
        // section search stalls near sqrt(eps * f / f''); two Newton steps on
        // central differences recover the remaining digits
        let h = cast::<T>(1e-5) * span;
        for _ in 0..2 {
            let fp = f(x + h)?;
            let fm = f(x - h)?;
            let d1 = (fp - fm) / (h + h);
            let d2 = (fp - (fx + fx) + fm) / (h * h);
            if !(d2 > T::zero()) || !d1.is_finite() {
                break;
            }
            let step = d1 / d2;
            if !(step.abs() <= span * cast(0.1)) {
                break;
            }
            let candidate = (x - step).max(lo).min(hi);
            let fc = f(candidate)?;
            // near the minimum the objective is flat to machine precision;
            // strict descent would reject exact steps on rounding noise
            if fc <= fx + fx.abs() * T::epsilon() * cast(16.0) {
                x = candidate;
                fx = fc;
            } else {
                break;
            }
        }
    }
    if !fx.is_finite() {
        return Err(Error::NonFiniteObjective {
            omega: upcast(x),
            context: "scalar minimization".into(),
        });
    }
    Ok((x, fx))
}

fn minimize_objective<T: Real>(
    objective: &WObjective<T>,
    obs: &Observable<T>,
    measure: &DeviationMeasure<T>,
    cfg: &SolverConfig<T>,
) -> Result<(T, T)> {
    if obs.is_constant() {
        return Ok((obs.lambda_min(), T::zero()));
    }
    minimize_scalar(
        |omega| objective.eval(omega, measure),
        obs.lambda_min(),
        obs.lambda_max(),
        cfg,
        measure.regularity() == Regularity::SmoothConvex,
    )
}

/// Minimizes `omega -> w_s(omega)` over `[lambda_min, lambda_max]`.
/// Returns `(omega_min, w_min)`.
pub fn minimize_w<T: Real>(
    s: &Composition,
    obs: &Observable<T>,
    measure: &DeviationMeasure<T>,
    cfg: &SolverConfig<T>,
    quad: &SimplexQuadratureConfig<T>,
) -> Result<(T, T)> {
    let objective = uniform_objective(s, obs, quad)?;
    minimize_objective(&objective, obs, measure, cfg)
}

/// Closed-form minimizer for the quadratic measure: the Dirichlet(s+1) mean
/// `sum_n lambda_n (s_n + 1) / (N + d)`.
pub fn quadratic_estimator_closed_form<T: Real>(
    s: &Composition,
    obs: &Observable<T>,
) -> Result<T> {
    if s.num_parts() != obs.dim() {
        return Err(Error::InvalidComposition(format!(
            "composition {s} vs observable dimension {}",
            obs.dim()
        )));
    }
    let total = cast::<T>((s.num_copies() as usize + obs.dim()) as f64);
    Ok(obs
        .eigenvalues()
        .iter()
        .zip(s.counts())
        .map(|(&l, &c)| l * cast::<T>(c as f64 + 1.0) / total)
        .sum())
}

/// Closed-form estimators for `d = 2`, `N = 2`, eigenvalues `(+1, -1)` under
/// the `sigma^2 sinh^2(x / sigma)` measure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SinhEstimators<T> {
    pub omega_20: T,
    pub omega_11: T,
    pub omega_02: T,
}

pub fn sinh_estimator_closed_form<T: Real>(sigma: T) -> Result<SinhEstimators<T>> {
    if !(sigma > T::zero()) || !sigma.is_finite() {
        return Err(Error::InvalidMeasure(format!(
            "sinh estimator needs sigma > 0, got {sigma}"
        )));
    }
    let four = cast::<T>(4.0);
    let omega_20 = if sigma < cast(0.2) {
        // exponential rewrite avoids sinh overflow at small sigma
        let e = (-four / sigma).exp();
        let s2 = sigma * sigma;
        let num = s2 - four * sigma + cast::<T>(8.0) - s2 * e;
        let den = s2 - (s2 + four * sigma + cast::<T>(8.0)) * e;
        sigma / four * (num / den).ln()
    } else {
        let c = cast::<T>(2.0) / sigma;
        let (sh, ch) = (c.sinh(), c.cosh());
        let s2 = sigma * sigma;
        let two = cast::<T>(2.0);
        let num = (s2 - two * sigma + four) * sh - two * (sigma - two) * ch;
        let den = (s2 + two * sigma + four) * sh - two * (sigma + two) * ch;
        sigma / four * (num / den).ln()
    };
    Ok(SinhEstimators {
        omega_20,
        omega_11: T::zero(),
        omega_02: -omega_20,
    })
}

/// Builds the estimator table for `num_copies >= 1` copies.
pub fn build_estimator_table<T: Real>(
    num_copies: u32,
    obs: &Observable<T>,
    measure: &DeviationMeasure<T>,
    cfg: &SolverConfig<T>,
    quad: &SimplexQuadratureConfig<T>,
) -> Result<EstimatorTable<T>> {
    build_table_impl(num_copies, obs, measure, &SimplexPrior::Uniform, cfg, quad)
}

/// Estimator table under a non-uniform prior over the state moduli.
pub fn build_estimator_table_nonuniform<T: Real>(
    num_copies: u32,
    obs: &Observable<T>,
    measure: &DeviationMeasure<T>,
    prior: &SimplexPrior<T>,
    cfg: &SolverConfig<T>,
    quad: &SimplexQuadratureConfig<T>,
) -> Result<EstimatorTable<T>> {
    build_table_impl(num_copies, obs, measure, prior, cfg, quad)
}

fn build_table_impl<T: Real>(
    num_copies: u32,
    obs: &Observable<T>,
    measure: &DeviationMeasure<T>,
    prior: &SimplexPrior<T>,
    cfg: &SolverConfig<T>,
    quad: &SimplexQuadratureConfig<T>,
) -> Result<EstimatorTable<T>> {
    if num_copies == 0 {
        return Err(Error::InvalidConfig(
            "estimator tables need at least one copy".into(),
        ));
    }
    let unique = measure.regularity() == Regularity::SmoothConvex;
    let compositions = enumerate_compositions(num_copies, obs.dim())?;
    let entries: BTreeMap<Composition, EstimatorEntry<T>> = compositions
        .into_par_iter()
        .map(|s| {
            let objective = nonuniform_objective(&s, obs, prior, quad)
                .and_then(|o| minimize_objective(&o, obs, measure, cfg));
            match objective {
                Ok((estimator, min_weight)) => Ok((
                    s,
                    EstimatorEntry {
                        estimator,
                        min_weight,
                        unique,
                    },
                )),
                Err(e) => Err(Error::SolverFailure {
                    composition: s.to_string(),
                    source: Box::new(e),
                }),
            }
        })
        .collect::<Result<_>>()?;
    Ok(EstimatorTable {
        observable: obs.clone(),
        measure: measure.clone(),
        num_copies,
        entries,
    })
}

/// Minimum achievable mean error for `num_copies` copies (the value the
/// projective occupation measurement attains).
pub fn min_mean_error<T: Real>(
    num_copies: u32,
    obs: &Observable<T>,
    measure: &DeviationMeasure<T>,
    cfg: &SolverConfig<T>,
    quad: &SimplexQuadratureConfig<T>,
) -> Result<T> {
    build_estimator_table(num_copies, obs, measure, cfg, quad)?.min_mean_error()
}

/// Minimum mean error under a non-uniform prior, normalized by the prior's
/// mass so it is directly comparable to simulated mean errors.
pub fn min_mean_error_nonuniform<T: Real>(
    num_copies: u32,
    obs: &Observable<T>,
    measure: &DeviationMeasure<T>,
    prior: &SimplexPrior<T>,
    cfg: &SolverConfig<T>,
    quad: &SimplexQuadratureConfig<T>,
) -> Result<T> {
    let table = build_estimator_table_nonuniform(num_copies, obs, measure, prior, cfg, quad)?;
    let raw = table.min_mean_error()?;
    Ok(raw / prior_mass(prior, obs.dim()))
}
