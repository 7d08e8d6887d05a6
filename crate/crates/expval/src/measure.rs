//! Deviation measures `W(x)` and their numerical validation.
//!
//! Two regularity classes are supported: smooth strictly convex measures
//! (positive away from zero, signed first derivative, non-negative second
//! derivative) and merely unimodal ones (continuous, monotone on each side
//! of zero). The class drives minimizer behavior downstream: smooth convex
//! measures have a unique estimator, unimodal ones may not.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::{cast, Real};

/// Declared regularity class of a deviation measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regularity {
    /// Positive away from 0, derivative has the sign of x, convex.
    SmoothConvex,
    /// Continuous, non-increasing for x < 0 and non-decreasing for x > 0.
    Unimodal,
}

/// A measure of deviation `W(x)` with `W(0) = 0`.
#[derive(Clone)]
pub enum DeviationMeasure<T> {
    /// `x^2`
    Quadratic,
    /// `sigma^2 sinh^2(x / sigma)`; tends to `x^2` as sigma grows.
    SinhSquared { sigma: T },
    /// `|x|`
    AbsoluteValue,
    /// `|x|^p` with `p >= 1`.
    Power { p: T },
    /// User-supplied measure with a declared regularity class.
    Custom {
        name: String,
        f: Arc<dyn Fn(T) -> T + Send + Sync>,
        regularity: Regularity,
    },
}

impl<T: Real> DeviationMeasure<T> {
    pub fn quadratic() -> Self {
        Self::Quadratic
    }

    pub fn sinh_squared(sigma: T) -> Result<Self> {
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(Error::InvalidMeasure(format!(
                "sinh2 needs sigma > 0, got {sigma}"
            )));
        }
        Ok(Self::SinhSquared { sigma })
    }

    pub fn absolute_value() -> Self {
        Self::AbsoluteValue
    }

    pub fn power(p: T) -> Result<Self> {
        if !(p >= T::one()) || !p.is_finite() {
            return Err(Error::InvalidMeasure(format!("power needs p >= 1, got {p}")));
        }
        Ok(Self::Power { p })
    }

    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(T) -> T + Send + Sync + 'static,
        regularity: Regularity,
    ) -> Self {
        Self::Custom {
            name: name.into(),
            f: Arc::new(f),
            regularity,
        }
    }

    pub fn eval(&self, x: T) -> T {
        match self {
            Self::Quadratic => x * x,
            Self::SinhSquared { sigma } => {
                let s = (x / *sigma).sinh();
                *sigma * *sigma * s * s
            }
            Self::AbsoluteValue => x.abs(),
            Self::Power { p } => x.abs().powf(*p),
            Self::Custom { f, .. } => f(x),
        }
    }

    pub fn regularity(&self) -> Regularity {
        match self {
            Self::Quadratic | Self::SinhSquared { .. } => Regularity::SmoothConvex,
            Self::AbsoluteValue => Regularity::Unimodal,
            // |x|^p has unbounded curvature at 0 for p < 2
            Self::Power { p } => {
                if *p >= cast(2.0) {
                    Regularity::SmoothConvex
                } else {
                    Regularity::Unimodal
                }
            }
            Self::Custom { regularity, .. } => *regularity,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Quadratic => "quadratic".into(),
            Self::SinhSquared { sigma } => format!("sinh2(sigma={sigma})"),
            Self::AbsoluteValue => "abs".into(),
            Self::Power { p } => format!("power(p={p})"),
            Self::Custom { name, .. } => name.clone(),
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for DeviationMeasure<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Quadratic => write!(f, "DeviationMeasure(quadratic)"),
            Self::SinhSquared { sigma } => write!(f, "DeviationMeasure(sinh2, sigma={sigma:?})"),
            Self::AbsoluteValue => write!(f, "DeviationMeasure(abs)"),
            Self::Power { p } => write!(f, "DeviationMeasure(power, p={p:?})"),
            Self::Custom { name, .. } => write!(f, "DeviationMeasure({name})"),
        }
    }
}

/// Outcome of checking one condition over the grid.
#[derive(Clone, Debug)]
pub struct ConditionCheck<T> {
    pub passed: bool,
    /// First grid point where the condition failed, with a short explanation.
    pub failure: Option<(T, String)>,
}

impl<T> ConditionCheck<T> {
    fn pass() -> Self {
        Self {
            passed: true,
            failure: None,
        }
    }

    fn fail(x: T, why: String) -> Self {
        Self {
            passed: false,
            failure: Some((x, why)),
        }
    }
}

/// Grid-based validation report for a deviation measure.
#[derive(Clone, Debug)]
pub struct MeasureValidation<T> {
    /// `W(0) = 0` and `W(x) > 0` for sampled `x != 0`.
    pub condition_a: ConditionCheck<T>,
    /// finite-difference `W'` has the sign of `x`.
    pub condition_b: ConditionCheck<T>,
    /// finite-difference `W''` non-negative and stable under step refinement.
    pub condition_c: ConditionCheck<T>,
    /// monotone on each side of zero.
    pub condition_b_prime: ConditionCheck<T>,
    pub declared: Regularity,
}

impl<T> MeasureValidation<T> {
    /// Whether the observed behavior supports the declared regularity class.
    pub fn declared_consistent(&self) -> bool {
        match self.declared {
            Regularity::SmoothConvex => {
                self.condition_a.passed && self.condition_b.passed && self.condition_c.passed
            }
            Regularity::Unimodal => self.condition_a.passed && self.condition_b_prime.passed,
        }
    }
}

/// Validates a measure on a grid. The grid must contain 0 and span both
/// signs. Failures are reported, not thrown; only a malformed grid is an
/// error.
pub fn validate_measure<T: Real>(
    measure: &DeviationMeasure<T>,
    grid: &[T],
) -> Result<MeasureValidation<T>> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("validation grid is empty".into()));
    }
    if !grid.iter().any(|&x| x == T::zero()) {
        return Err(Error::InvalidConfig("validation grid must contain 0".into()));
    }
    if !grid.iter().any(|&x| x < T::zero()) || !grid.iter().any(|&x| x > T::zero()) {
        return Err(Error::InvalidConfig(
            "validation grid must span negative and positive values".into(),
        ));
    }
    let mut grid: Vec<T> = grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    grid.dedup();

    let w = |x: T| measure.eval(x);

    // (a) W(0) = 0, W(x) > 0 elsewhere
    let mut condition_a = ConditionCheck::pass();
    for &x in &grid {
        if x == T::zero() {
            if w(x).abs() > cast(1e-12) {
                condition_a = ConditionCheck::fail(x, format!("W(0) = {} != 0", w(x)));
                break;
            }
        } else if !(w(x) > T::zero()) {
            condition_a = ConditionCheck::fail(x, format!("W({x}) = {} is not > 0", w(x)));
            break;
        }
    }

    // relative step, h = 1e-5 (widened for scalar types with coarser epsilon)
    let base_h = T::max(cast(1e-5), T::epsilon().powf(cast(1.0 / 3.0)));
    let step = move |x: T| base_h * T::max(T::one(), x.abs());

    // (b) sign of the first central difference
    let mut condition_b = ConditionCheck::pass();
    for &x in &grid {
        if x == T::zero() {
            continue;
        }
        let h = step(x);
        let d1 = (w(x + h) - w(x - h)) / (h + h);
        let ok = if x > T::zero() { d1 > T::zero() } else { d1 < T::zero() };
        if !ok {
            condition_b = ConditionCheck::fail(x, format!("W'({x}) ~ {d1} has the wrong sign"));
            break;
        }
    }

    // (c) second central difference >= 0 at steps h and h/2, and the two
    // estimates must agree. A bare difference quotient would call |x| convex
    // at its kink (the quotient is 2/h > 0 there), so stability under step
    // refinement is what actually detects the missing curvature.
    let mut condition_c = ConditionCheck::pass();
    for &x in &grid {
        let h = step(x);
        let d2 = |h: T| (w(x + h) - cast::<T>(2.0) * w(x) + w(x - h)) / (h * h);
        let full = d2(h);
        let half = d2(h * cast(0.5));
        // rounding noise of the difference quotient: ~eps * |W| / h^2
        let scale = T::one() + w(x).abs() + w(x + h).abs() + w(x - h).abs();
        let floor = cast::<T>(1e3) * T::epsilon() * scale / (h * h) + cast::<T>(1e-7);
        if full < -floor || half < -floor {
            condition_c = ConditionCheck::fail(x, format!("W''({x}) ~ {} is negative", full.min(half)));
            break;
        }
        if (full - half).abs() > cast::<T>(0.45) * full.abs().max(half.abs()) + floor {
            condition_c = ConditionCheck::fail(
                x,
                format!("W''({x}) unstable under refinement: {full} vs {half}"),
            );
            break;
        }
    }

    // (b') monotone on each side of zero
    let mut condition_b_prime = ConditionCheck::pass();
    let slack = cast::<T>(1e-12);
    for pair in grid.windows(2) {
        let (x0, x1) = (pair[0], pair[1]);
        if x1 <= T::zero() && w(x1) > w(x0) + slack {
            condition_b_prime =
                ConditionCheck::fail(x1, format!("W increases on x < 0: W({x0}) < W({x1})"));
            break;
        }
        if x0 >= T::zero() && w(x1) + slack < w(x0) {
            condition_b_prime =
                ConditionCheck::fail(x1, format!("W decreases on x > 0: W({x0}) > W({x1})"));
            break;
        }
    }

    Ok(MeasureValidation {
        condition_a,
        condition_b,
        condition_c,
        condition_b_prime,
        declared: measure.regularity(),
    })
}
