//! Optimal estimation of an observable's expectation value from finitely
//! many copies of a random pure state.
//!
//! Given `N` copies of an unknown pure state on a `d`-dimensional Hilbert
//! space, measuring every copy projectively in the observable's eigenbasis
//! and reporting a per-occupation estimator minimizes the average penalty
//! `W(estimate - true value)` for any deviation measure `W` that vanishes
//! only at zero and grows away from it. This crate computes those optimal
//! estimators, evaluates the minimum achievable mean error, checks the
//! optimality bound against arbitrary POVMs, and simulates the measurement
//! protocol.
//!
//! The pieces:
//!
//! - [`observable`], [`composition`], [`measure`]: domain types — the
//!   observable's eigenvalues, occupation-number compositions, and the
//!   deviation-measure catalog with grid validation.
//! - [`simplex`]: the weight functions `w_s(omega)` as Dirichlet-weighted
//!   expectations over outcome probabilities, with deterministic quadrature
//!   and seeded Monte Carlo backends, plus non-uniform priors.
//! - [`solver`]: estimator tables from scalar minimization of the weights,
//!   closed-form reference estimators, and minimum mean errors.
//! - [`operators`]: occupation operators and projectors on the `d^N` space,
//!   POVM validation, mean errors of arbitrary POVMs, and seeded random
//!   POVMs for stress-testing the bound.
//! - [`simulate`]: reproducible Monte-Carlo simulation of the per-copy
//!   measurement protocol.
//!
//! Everything numeric is generic over the scalar type through
//! [`scalar::Real`]; the `*64`/`*32` aliases at the crate root pin the
//! common instantiations.
//!
//! ```
//! use expval::{
//!     build_estimator_table, min_mean_error, DeviationMeasure64, Observable64,
//!     SimplexQuadratureConfig64, SolverConfig64,
//! };
//!
//! let obs = Observable64::new(vec![1.0, -1.0]).unwrap();
//! let measure = DeviationMeasure64::quadratic();
//! let solver = SolverConfig64::default();
//! let quad = SimplexQuadratureConfig64::default();
//! let table = build_estimator_table(2, &obs, &measure, &solver, &quad).unwrap();
//! let best = min_mean_error(2, &obs, &measure, &solver, &quad).unwrap();
//! assert!((best - 1.0 / 6.0).abs() < 1e-9);
//! assert_eq!(table.records().len(), 3);
//! ```

pub mod composition;
pub mod error;
pub mod measure;
pub mod observable;
pub mod operators;
pub mod scalar;
pub mod simplex;
pub mod simulate;
pub mod solver;

pub use composition::{composition_count, enumerate_compositions, Composition, MAX_EXACT_COPIES};
pub use error::{Error, Result};
pub use measure::{
    validate_measure, ConditionCheck, DeviationMeasure, MeasureValidation, Regularity,
};
pub use observable::Observable;
pub use operators::{
    build_m_operator, build_p_projector, mean_error_of_povm, optimal_estimators_for_povm,
    projective_povm, random_povm, separable_povm, separable_projectors,
    verify_projector_relations, Povm, RelationReport, TensorOperator, DIMENSION_GUARD,
};
pub use scalar::Real;
pub use simplex::{
    dirichlet_expectation, w_function, w_function_generalized, w_function_nonuniform,
    QuadratureMethod, SimplexPrior, SimplexQuadratureConfig, GAUSS_JACOBI_MAX_DIM,
};
pub use simulate::{
    measure_copies, run_single_trial, run_trials, sample_bloch_symmetric_state,
    sample_dirichlet_amplitude_state, sample_haar_state, PureState, StateSampler, TrialRecord,
    TrialSummary,
};
pub use solver::{
    build_estimator_table, build_estimator_table_nonuniform, min_mean_error,
    min_mean_error_nonuniform, minimize_w, quadratic_estimator_closed_form,
    sinh_estimator_closed_form, EstimatorEntry, EstimatorTable, SinhEstimators, SolverConfig,
};

pub type Observable64 = Observable<f64>;
pub type Observable32 = Observable<f32>;
pub type DeviationMeasure64 = DeviationMeasure<f64>;
pub type DeviationMeasure32 = DeviationMeasure<f32>;
pub type SimplexPrior64 = SimplexPrior<f64>;
pub type SimplexQuadratureConfig64 = SimplexQuadratureConfig<f64>;
pub type SimplexQuadratureConfig32 = SimplexQuadratureConfig<f32>;
pub type SolverConfig64 = SolverConfig<f64>;
pub type SolverConfig32 = SolverConfig<f32>;
pub type EstimatorTable64 = EstimatorTable<f64>;
pub type EstimatorTable32 = EstimatorTable<f32>;
pub type Povm64 = Povm<f64>;
pub type TensorOperator64 = TensorOperator<f64>;
pub type PureState64 = PureState<f64>;
pub type StateSampler64 = StateSampler<f64>;
