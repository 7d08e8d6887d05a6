//! Monte-Carlo simulation of the physical protocol: draw a random pure
//! state, measure each copy projectively in the observable eigenbasis, apply
//! the occupation-number estimator, and accumulate the empirical mean error.
//!
//! Every trial derives its own RNG stream from `(seed, trial index)`, so
//! results are bit-identical whether trials run serially or in parallel.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;

use crate::composition::Composition;
use crate::error::{Error, Result};
use crate::measure::DeviationMeasure;
use crate::observable::Observable;
use crate::scalar::{cast, upcast, Real};
use crate::solver::EstimatorTable;

/// A normalized pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState<T> {
    amplitudes: Vec<Complex<T>>,
}

impl<T: Real> PureState<T> {
    pub fn new(amplitudes: Vec<Complex<T>>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::InvalidObservable(format!(
                "state needs d >= 2 amplitudes, got {}",
                amplitudes.len()
            )));
        }
        let norm: T = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        let tol = T::max(cast(1e-12), T::epsilon() * cast(64.0));
        if (norm - T::one()).abs() > tol {
            return Err(Error::InvalidConfig(format!(
                "state norm^2 = {norm} is not 1"
            )));
        }
        Ok(Self { amplitudes })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    /// Outcome probabilities `|c_n|^2` in the eigenbasis.
    pub fn probabilities(&self) -> Vec<T> {
        self.amplitudes.iter().map(|c| c.norm_sqr()).collect()
    }

    /// True expectation value `sum_n lambda_n |c_n|^2`.
    pub fn expectation(&self, obs: &Observable<T>) -> T {
        obs.expectation(&self.probabilities())
    }
}

/// How trial states are drawn.
#[derive(Clone)]
pub enum StateSampler<T> {
    /// Uniform (unitarily invariant) pure states.
    Haar,
    /// Moduli squared from Dirichlet(alpha), phases uniform.
    DirichletAmplitudes(Vec<T>),
    /// Qubit states with the polar angle drawn from `density` (weighted by
    /// the sphere measure `sin(theta)`) and the azimuth uniform. `bound`
    /// must dominate the density on `[0, pi]`.
    BlochTheta {
        density: Arc<dyn Fn(T) -> T + Send + Sync>,
        bound: T,
    },
}

impl<T> StateSampler<T> {
    pub fn bloch_theta(density: impl Fn(T) -> T + Send + Sync + 'static, bound: T) -> Self {
        Self::BlochTheta {
            density: Arc::new(density),
            bound,
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for StateSampler<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Haar => write!(f, "Haar"),
            Self::DirichletAmplitudes(a) => write!(f, "DirichletAmplitudes({a:?})"),
            Self::BlochTheta { bound, .. } => write!(f, "BlochTheta(bound={bound:?})"),
        }
    }
}

/// Uniformly distributed pure state: normalized independent complex
/// Gaussians, inducing Dirichlet(1,...,1) outcome probabilities.
pub fn sample_haar_state<T: Real, R: Rng>(d: usize, rng: &mut R) -> Result<PureState<T>> {
    if d < 2 {
        return Err(Error::InvalidObservable(format!("need d >= 2, got {d}")));
    }
    let mut amps = Vec::with_capacity(d);
    let mut norm = 0.0f64;
    let mut raw = Vec::with_capacity(d);
    for _ in 0..d {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        norm += re * re + im * im;
        raw.push((re, im));
    }
    let scale = norm.sqrt().recip();
    for (re, im) in raw {
        amps.push(Complex::new(cast::<T>(re * scale), cast::<T>(im * scale)));
    }
    PureState::new(amps)
}

const MAX_REJECTION_PROPOSALS: u64 = 10_000_000;

/// Qubit state `cos(theta/2)|0> + e^(i phi) sin(theta/2)|1>` with `theta`
/// drawn from `density` against the sphere measure by rejection sampling.
pub fn sample_bloch_symmetric_state<T: Real, R: Rng>(
    density: &(dyn Fn(T) -> T + Send + Sync),
    bound: T,
    rng: &mut R,
) -> Result<PureState<T>> {
    if !(bound > T::zero()) || !bound.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "rejection bound must be positive and finite, got {bound}"
        )));
    }
    for _ in 0..MAX_REJECTION_PROPOSALS {
        // cos(theta) uniform on [-1,1] is the sphere measure for theta
        let c: f64 = rng.random_range(-1.0..=1.0);
        let theta = c.acos();
        let f = density(cast::<T>(theta));
        if f < T::zero() || f > bound {
            return Err(Error::RejectionBound {
                theta,
                density: upcast(f),
                bound: upcast(bound),
            });
        }
        let u: f64 = rng.random::<f64>();
        if cast::<T>(u) * bound < f {
            let phi: f64 = rng.random::<f64>() * 2.0 * std::f64::consts::PI;
            let half = theta / 2.0;
            return PureState::new(vec![
                Complex::new(cast::<T>(half.cos()), T::zero()),
                Complex::new(
                    cast::<T>(half.sin() * phi.cos()),
                    cast::<T>(half.sin() * phi.sin()),
                ),
            ]);
        }
    }
    Err(Error::RejectionExhausted(MAX_REJECTION_PROPOSALS))
}

/// State with moduli `sqrt(p)` for `p ~ Dirichlet(alpha)` and independent
/// uniform phases.
pub fn sample_dirichlet_amplitude_state<T: Real, R: Rng>(
    alpha: &[T],
    rng: &mut R,
) -> Result<PureState<T>> {
    if alpha.len() < 2 {
        return Err(Error::InvalidConfig(
            "Dirichlet amplitude sampler needs d >= 2 parameters".into(),
        ));
    }
    let mut draws = Vec::with_capacity(alpha.len());
    let mut total = 0.0f64;
    for &a in alpha {
        let gamma = Gamma::new(upcast(a), 1.0)
            .map_err(|e| Error::InvalidConfig(format!("gamma shape {a}: {e}")))?;
        let v: f64 = gamma.sample(rng);
        total += v;
        draws.push(v);
    }
    let mut amps = Vec::with_capacity(alpha.len());
    for v in draws {
        let modulus = (v / total).sqrt();
        let phi: f64 = rng.random::<f64>() * 2.0 * std::f64::consts::PI;
        amps.push(Complex::new(
            cast::<T>(modulus * phi.cos()),
            cast::<T>(modulus * phi.sin()),
        ));
    }
    PureState::new(amps)
}

fn sample_state<T: Real, R: Rng>(
    sampler: &StateSampler<T>,
    d: usize,
    rng: &mut R,
) -> Result<PureState<T>> {
    match sampler {
        StateSampler::Haar => sample_haar_state(d, rng),
        StateSampler::DirichletAmplitudes(alpha) => {
            if alpha.len() != d {
                return Err(Error::InvalidConfig(format!(
                    "sampler has {} parameters, observable dimension is {d}",
                    alpha.len()
                )));
            }
            sample_dirichlet_amplitude_state(alpha, rng)
        }
        StateSampler::BlochTheta { density, bound } => {
            if d != 2 {
                return Err(Error::InvalidConfig(
                    "the Bloch sampler is defined for d = 2".into(),
                ));
            }
            sample_bloch_symmetric_state(density.as_ref(), *bound, rng)
        }
    }
}

/// Projectively measures `copies` independent copies in the eigenbasis and
/// returns the occupation counts (multinomial in `|c_n|^2`).
pub fn measure_copies<T: Real, R: Rng>(
    state: &PureState<T>,
    copies: u32,
    rng: &mut R,
) -> Composition {
    let probs: Vec<f64> = state.probabilities().iter().map(|&p| upcast(p)).collect();
    let mut counts = vec![0u32; probs.len()];
    for _ in 0..copies {
        let mut u: f64 = rng.random::<f64>();
        let mut outcome = probs.len() - 1;
        for (n, &p) in probs.iter().enumerate() {
            if u < p {
                outcome = n;
                break;
            }
            u -= p;
        }
        counts[outcome] += 1;
    }
    Composition::new(counts).expect("non-empty counts")
}

/// One simulated estimation round.
#[derive(Clone, Debug)]
pub struct TrialRecord<T> {
    pub occupation: Composition,
    pub estimate: T,
    pub true_value: T,
    /// `W(estimate - true_value)`, exactly as evaluated.
    pub deviation_value: T,
}

/// Aggregate over all trials.
#[derive(Clone, Debug)]
pub struct TrialSummary<T> {
    pub empirical_mean_error: T,
    /// Sample standard deviation divided by sqrt(trials).
    pub standard_error: T,
    pub trials: u64,
    pub composition_counts: BTreeMap<Composition, u64>,
}

/// Runs one trial on its own RNG stream.
pub fn run_single_trial<T: Real>(
    trial_index: u64,
    copies: u32,
    obs: &Observable<T>,
    measure: &DeviationMeasure<T>,
    table: &EstimatorTable<T>,
    sampler: &StateSampler<T>,
    seed: u64,
) -> Result<TrialRecord<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial_index);
    let state = sample_state(sampler, obs.dim(), &mut rng)?;
    let occupation = measure_copies(&state, copies, &mut rng);
    let entry = table
        .get(&occupation)
        .ok_or_else(|| Error::MissingTableEntry(occupation.to_string()))?;
    let true_value = state.expectation(obs);
    let deviation_value = measure.eval(entry.estimator - true_value);
    Ok(TrialRecord {
        occupation,
        estimate: entry.estimator,
        true_value,
        deviation_value,
    })
}

const TRIAL_BATCH: u64 = 4096;

/// Empirical mean error over `trials` independent rounds. Deterministic for
/// a fixed seed; trial batches are reduced in index order so the parallel
/// and serial results are bit-identical.
pub fn run_trials<T: Real>(
    trials: u64,
    copies: u32,
    obs: &Observable<T>,
    measure: &DeviationMeasure<T>,
    table: &EstimatorTable<T>,
    sampler: &StateSampler<T>,
    seed: u64,
) -> Result<TrialSummary<T>> {
    if trials == 0 {
        return Err(Error::InvalidConfig("need at least one trial".into()));
    }
    if table.num_copies() != copies || table.observable().dim() != obs.dim() {
        return Err(Error::InvalidConfig(format!(
            "table built for N = {}, d = {} but simulating N = {copies}, d = {}",
            table.num_copies(),
            table.observable().dim(),
            obs.dim()
        )));
    }
    struct Batch {
        sum: f64,
        sum_sq: f64,
        counts: BTreeMap<Composition, u64>,
    }
    let batches = trials.div_ceil(TRIAL_BATCH);
    let partials: Vec<Batch> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let lo = b * TRIAL_BATCH;
            let hi = (lo + TRIAL_BATCH).min(trials);
            let mut batch = Batch {
                sum: 0.0,
                sum_sq: 0.0,
                counts: BTreeMap::new(),
            };
            for t in lo..hi {
                let record = run_single_trial(t, copies, obs, measure, table, sampler, seed)?;
                let v = upcast(record.deviation_value);
                batch.sum += v;
                batch.sum_sq += v * v;
                *batch.counts.entry(record.occupation).or_insert(0) += 1;
            }
            Ok(batch)
        })
        .collect::<Result<_>>()?;
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    let mut counts: BTreeMap<Composition, u64> = BTreeMap::new();
    for batch in partials {
        sum += batch.sum;
        sum_sq += batch.sum_sq;
        for (occ, c) in batch.counts {
            *counts.entry(occ).or_insert(0) += c;
        }
    }
    let n = trials as f64;
    let mean = sum / n;
    let standard_error = if trials > 1 {
        let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(TrialSummary {
        empirical_mean_error: cast(mean),
        standard_error: cast(standard_error),
        trials,
        composition_counts: counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composition::enumerate_compositions;
    use crate::simplex::SimplexQuadratureConfig;
    use crate::solver::{build_estimator_table, min_mean_error, EstimatorEntry, SolverConfig};

    fn qubit() -> Observable<f64> {
        Observable::new(vec![1.0, -1.0]).unwrap()
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn haar_state_is_normalized_and_deterministic() {
        let mut r = rng(1);
        let s: PureState<f64> = sample_haar_state(3, &mut r).unwrap();
        let norm: f64 = s.probabilities().iter().sum();
        assert!((norm - 1.0).abs() < 1e-14);
        let again: PureState<f64> = sample_haar_state(3, &mut rng(1)).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn haar_moments() {
        let mut r = rng(2);
        let n = 200_000;
        let (mut mean, mut second) = (0.0f64, 0.0f64);
        for _ in 0..n {
            let s: PureState<f64> = sample_haar_state(2, &mut r).unwrap();
            let p = s.probabilities()[0];
            mean += p;
            second += p * p;
        }
        mean /= n as f64;
        second /= n as f64;
        // p_1 ~ Uniform(0,1) for d = 2: mean 1/2, variance 1/12
        let se_mean = (1.0f64 / 12.0 / n as f64).sqrt();
        assert!((mean - 0.5).abs() < 4.0 * se_mean, "{mean}");
        let var = second - mean * mean;
        assert!((var - 1.0 / 12.0).abs() < 4.0 * 0.001, "{var}");
    }

    #[test]
    fn bloch_uniform_matches_haar_marginal() {
        // Kolmogorov-Smirnov on p_1 = cos^2(theta/2) against Uniform(0,1)
        let n = 100_000usize;
        let mut r = rng(3);
        let mut samples: Vec<f64> = (0..n)
            .map(|_| {
                let s: PureState<f64> =
                    sample_bloch_symmetric_state(&|_| 1.0, 1.0, &mut r).unwrap();
                s.probabilities()[0]
            })
            .collect();
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut ks: f64 = 0.0;
        for (i, &x) in samples.iter().enumerate() {
            let lo = i as f64 / n as f64;
            let hi = (i + 1) as f64 / n as f64;
            ks = ks.max((x - lo).abs()).max((x - hi).abs());
        }
        // alpha = 0.01 critical value 1.628 / sqrt(n)
        assert!(ks < 1.628 / (n as f64).sqrt(), "KS = {ks}");
    }

    #[test]
    fn bloch_hemisphere_indicator() {
        let mut r = rng(4);
        for _ in 0..200 {
            let s: PureState<f64> = sample_bloch_symmetric_state(
                &|theta: f64| if theta <= std::f64::consts::FRAC_PI_2 { 1.0 } else { 0.0 },
                1.0,
                &mut r,
            )
            .unwrap();
            assert!(s.probabilities()[0] >= 0.5 - 1e-12);
        }
    }

    #[test]
    fn bloch_bound_violation_detected() {
        let mut r = rng(5);
        let result: Result<PureState<f64>> =
            sample_bloch_symmetric_state(&|_| 2.0, 1.0, &mut r);
        assert!(matches!(result, Err(Error::RejectionBound { .. })));
    }

    #[test]
    fn measure_copies_basis_state() {
        let state = PureState::new(vec![
            Complex::new(1.0f64, 0.0),
            Complex::new(0.0, 0.0),
        ])
        .unwrap();
        let mut r = rng(6);
        for _ in 0..20 {
            let occ = measure_copies(&state, 5, &mut r);
            assert_eq!(occ.counts(), &[5, 0]);
        }
    }

    #[test]
    fn measure_copies_balanced_superposition() {
        let amp = Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let state = PureState::new(vec![amp, amp]).unwrap();
        let mut r = rng(7);
        let n = 100_000;
        let mut counts = [0u64; 3]; // (2,0), (1,1), (0,2)
        for _ in 0..n {
            let occ = measure_copies(&state, 2, &mut r);
            match occ.counts() {
                [2, 0] => counts[0] += 1,
                [1, 1] => counts[1] += 1,
                [0, 2] => counts[2] += 1,
                _ => unreachable!(),
            }
        }
        // multinomial with p = (1/4, 1/2, 1/4); chi-squared at alpha = 0.001
        let expected = [0.25, 0.5, 0.25].map(|p| p * n as f64);
        let chi2: f64 = counts
            .iter()
            .zip(expected)
            .map(|(&c, e)| (c as f64 - e).powi(2) / e)
            .sum();
        assert!(chi2 < 13.815_510_557_964_274, "chi2 = {chi2}");
    }

    #[test]
    fn haar_average_occupation_law() {
        // averaged over Haar states, every composition of (d=2, N=2) occurs
        // with probability Gamma(d) N! / Gamma(N+d) = 1/3
        let (solver, quad) = (SolverConfig::default(), SimplexQuadratureConfig::default());
        let table =
            build_estimator_table(2, &qubit(), &DeviationMeasure::quadratic(), &solver, &quad)
                .unwrap();
        let summary = run_trials(
            120_000,
            2,
            &qubit(),
            &DeviationMeasure::quadratic(),
            &table,
            &StateSampler::Haar,
            11,
        )
        .unwrap();
        let n = summary.trials as f64;
        let chi2: f64 = summary
            .composition_counts
            .values()
            .map(|&c| (c as f64 - n / 3.0).powi(2) / (n / 3.0))
            .sum();
        assert_eq!(summary.composition_counts.len(), 3);
        assert!(chi2 < 13.815_510_557_964_274, "chi2 = {chi2}");
    }

    #[test]
    fn trials_match_theory() {
        let (solver, quad) = (SolverConfig::default(), SimplexQuadratureConfig::default());
        let measure = DeviationMeasure::quadratic();
        let table = build_estimator_table(2, &qubit(), &measure, &solver, &quad).unwrap();
        let summary = run_trials(
            200_000,
            2,
            &qubit(),
            &measure,
            &table,
            &StateSampler::Haar,
            12,
        )
        .unwrap();
        let theory = min_mean_error(2, &qubit(), &measure, &solver, &quad).unwrap();
        let z = (summary.empirical_mean_error - theory) / summary.standard_error;
        assert!(z.abs() < 4.0, "z = {z}");
    }

    #[test]
    fn constant_observable_zero_error() {
        let (solver, quad) = (SolverConfig::default(), SimplexQuadratureConfig::default());
        let obs = Observable::new(vec![1.5, 1.5]).unwrap();
        let measure = DeviationMeasure::quadratic();
        let table = build_estimator_table(2, &obs, &measure, &solver, &quad).unwrap();
        let summary = run_trials(500, 2, &obs, &measure, &table, &StateSampler::Haar, 13).unwrap();
        assert_eq!(summary.empirical_mean_error, 0.0);
        assert_eq!(summary.standard_error, 0.0);
    }

    #[test]
    fn determinism_per_seed() {
        let (solver, quad) = (SolverConfig::default(), SimplexQuadratureConfig::default());
        let measure = DeviationMeasure::quadratic();
        let table = build_estimator_table(1, &qubit(), &measure, &solver, &quad).unwrap();
        let run = |seed| {
            run_trials(10_000, 1, &qubit(), &measure, &table, &StateSampler::Haar, seed).unwrap()
        };
        let (a, b, c) = (run(21), run(21), run(22));
        assert_eq!(a.empirical_mean_error, b.empirical_mean_error);
        assert_eq!(a.composition_counts, b.composition_counts);
        assert_ne!(a.empirical_mean_error, c.empirical_mean_error);
    }

    #[test]
    fn missing_table_entry_detected() {
        let (solver, quad) = (SolverConfig::default(), SimplexQuadratureConfig::default());
        let measure = DeviationMeasure::quadratic();
        let table = build_estimator_table(1, &qubit(), &measure, &solver, &quad).unwrap();
        // table for N = 1 cannot serve N = 2 trials
        assert!(run_trials(10, 2, &qubit(), &measure, &table, &StateSampler::Haar, 1).is_err());
    }

    #[test]
    fn suboptimal_estimators_pay_a_penalty() {
        let (solver, quad) = (SolverConfig::default(), SimplexQuadratureConfig::default());
        let measure = DeviationMeasure::quadratic();
        let obs = qubit();
        let mut entries = std::collections::BTreeMap::new();
        for s in enumerate_compositions(2, 2).unwrap() {
            entries.insert(
                s,
                EstimatorEntry {
                    estimator: 0.0,
                    min_weight: 0.0,
                    unique: true,
                },
            );
        }
        let zero_table =
            EstimatorTable::from_entries(obs.clone(), measure.clone(), 2, entries).unwrap();
        let summary = run_trials(
            200_000,
            2,
            &obs,
            &measure,
            &zero_table,
            &StateSampler::Haar,
            14,
        )
        .unwrap();
        // always guessing zero costs 1/3 on average, above the optimum 1/6
        let z = (summary.empirical_mean_error - 1.0 / 3.0) / summary.standard_error;
        assert!(z.abs() < 4.0, "z = {z}");
        let optimum = min_mean_error(2, &obs, &measure, &solver, &quad).unwrap();
        assert!(summary.empirical_mean_error > optimum + 10.0 * summary.standard_error);
    }

    #[test]
    fn dirichlet_amplitude_sampler_moments() {
        let mut r = rng(15);
        let alpha = [2.0f64, 1.0];
        let n = 100_000;
        let mut mean = 0.0;
        for _ in 0..n {
            let s = sample_dirichlet_amplitude_state(&alpha, &mut r).unwrap();
            mean += s.probabilities()[0];
        }
        mean /= n as f64;
        // E[p_1] = 2/3 under Dir(2,1)
        assert!((mean - 2.0 / 3.0).abs() < 4.0 * (0.05f64 / n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn rejects_zero_trials() {
        let (solver, quad) = (SolverConfig::default(), SimplexQuadratureConfig::default());
        let measure = DeviationMeasure::quadratic();
        let table = build_estimator_table(1, &qubit(), &measure, &solver, &quad).unwrap();
        assert!(run_trials(0, 1, &qubit(), &measure, &table, &StateSampler::Haar, 1).is_err());
    }
}
