//! Operators on the `d^N`-dimensional tensor-product space: the rank-one
//! occupation operators `M_s`, the occupation projectors `P_s`, POVMs, and
//! the mean-error evaluation that ties them to the weight functions.
//!
//! Basis ordering is row-major with copy 1 most significant: the basis
//! string `(n_1, ..., n_N)` maps to index `sum_i n_i d^(N-i)`.

use nalgebra::{DMatrix, DVector, RealField};
use num_complex::Complex;
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::composition::{enumerate_compositions, Composition};
use crate::error::{Error, Result};
use crate::measure::{DeviationMeasure, Regularity};
use crate::observable::Observable;
use crate::scalar::{cast, upcast, Real};
use crate::simplex::{uniform_objective, SimplexQuadratureConfig, WObjective};
use crate::solver::{minimize_scalar, EstimatorTable, SolverConfig};

/// Hard cap on the tensor-space dimension `d^N`.
pub const DIMENSION_GUARD: usize = 1 << 14;

pub(crate) fn tensor_dim(d: usize, copies: u32) -> Result<usize> {
    if d < 2 {
        return Err(Error::InvalidObservable(format!(
            "tensor operators need d >= 2, got {d}"
        )));
    }
    let mut dim = 1usize;
    for _ in 0..copies {
        dim = dim
            .checked_mul(d)
            .filter(|&v| v <= DIMENSION_GUARD)
            .ok_or(Error::DimensionGuard {
                dim: usize::MAX,
                max: DIMENSION_GUARD,
            })?;
    }
    Ok(dim)
}

fn occupation_of_index(mut index: usize, d: usize, copies: u32) -> Vec<u32> {
    let mut occ = vec![0u32; d];
    for _ in 0..copies {
        occ[index % d] += 1;
        index /= d;
    }
    occ
}

fn class_indices(s: &Composition, d: usize, copies: u32, dim: usize) -> Vec<usize> {
    (0..dim)
        .filter(|&i| occupation_of_index(i, d, copies) == s.counts())
        .collect()
}

/// Dense operator on the `N`-copy space, tagged with its `(d, N)` labels.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorOperator<T: Real + RealField> {
    matrix: DMatrix<Complex<T>>,
    d: usize,
    copies: u32,
}

impl<T: Real + RealField> TensorOperator<T> {
    pub fn from_matrix(matrix: DMatrix<Complex<T>>, d: usize, copies: u32) -> Result<Self> {
        let dim = tensor_dim(d, copies)?;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::PovmInvariant(format!(
                "matrix is {}x{}, expected {dim}x{dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { matrix, d, copies })
    }

    pub fn identity(d: usize, copies: u32) -> Result<Self> {
        let dim = tensor_dim(d, copies)?;
        Ok(Self {
            matrix: DMatrix::identity(dim, dim),
            d,
            copies,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `(d, N)`.
    pub fn labels(&self) -> (usize, u32) {
        (self.d, self.copies)
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.matrix
    }

    pub fn trace(&self) -> Complex<T> {
        self.matrix.trace()
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        let adj = self.matrix.adjoint();
        self.matrix
            .iter()
            .zip(adj.iter())
            .all(|(a, b)| Float::abs((*a - *b).norm_sqr()) <= tol * tol)
    }

    /// Eigenvalues of the hermitized operator, ascending.
    pub fn hermitian_eigenvalues(&self) -> DVector<T> {
        let half = Complex::new(cast::<T>(0.5), T::zero());
        let sym = (&self.matrix + self.matrix.adjoint()).scale_mut_workaround(half);
        let mut eigs: Vec<T> = sym.symmetric_eigen().eigenvalues.iter().copied().collect();
        eigs.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        DVector::from_vec(eigs)
    }
}

// nalgebra's `scale` wants a real scalar; complex halving is spelled out
trait ScaleWorkaround<T: Real + RealField> {
    fn scale_mut_workaround(self, factor: Complex<T>) -> DMatrix<Complex<T>>;
}

impl<T: Real + RealField> ScaleWorkaround<T> for DMatrix<Complex<T>> {
    fn scale_mut_workaround(mut self, factor: Complex<T>) -> DMatrix<Complex<T>> {
        for entry in self.iter_mut() {
            *entry *= factor;
        }
        self
    }
}

/// The rank-one occupation operator: `|Psi_s><Psi_s|` with `|Psi_s>` the
/// unnormalized sum of all basis strings with occupation `s`. Its trace is
/// the multinomial weight of `s`.
pub fn build_m_operator<T: Real + RealField>(
    s: &Composition,
    d: usize,
    copies: u32,
) -> Result<TensorOperator<T>> {
    check_composition(s, d, copies)?;
    let dim = tensor_dim(d, copies)?;
    let class = class_indices(s, d, copies, dim);
    let mut matrix = DMatrix::<Complex<T>>::zeros(dim, dim);
    let one = Complex::new(T::one(), T::zero());
    for &i in &class {
        for &j in &class {
            matrix[(i, j)] = one;
        }
    }
    TensorOperator::from_matrix(matrix, d, copies)
}

/// Projector onto the span of basis strings with occupation `s`; a diagonal
/// 0/1 matrix with trace equal to the multinomial weight.
pub fn build_p_projector<T: Real + RealField>(
    s: &Composition,
    d: usize,
    copies: u32,
) -> Result<TensorOperator<T>> {
    check_composition(s, d, copies)?;
    let dim = tensor_dim(d, copies)?;
    let class = class_indices(s, d, copies, dim);
    let mut matrix = DMatrix::<Complex<T>>::zeros(dim, dim);
    let one = Complex::new(T::one(), T::zero());
    for &i in &class {
        matrix[(i, i)] = one;
    }
    TensorOperator::from_matrix(matrix, d, copies)
}

fn check_composition(s: &Composition, d: usize, copies: u32) -> Result<()> {
    if s.num_parts() != d || s.num_copies() != copies {
        return Err(Error::InvalidComposition(format!(
            "composition {s} does not match d = {d}, N = {copies}"
        )));
    }
    Ok(())
}

/// One rank-one projector per basis string, each tagged with the string's
/// occupation. Summing the projectors of one occupation class gives `P_s`,
/// which is why this fully separable measurement is as good as the joint one.
pub fn separable_projectors<T: Real + RealField>(
    d: usize,
    copies: u32,
) -> Result<Vec<(Composition, TensorOperator<T>)>> {
    let dim = tensor_dim(d, copies)?;
    (0..dim)
        .map(|i| {
            let occ = Composition::new(occupation_of_index(i, d, copies))?;
            let mut matrix = DMatrix::<Complex<T>>::zeros(dim, dim);
            matrix[(i, i)] = Complex::new(T::one(), T::zero());
            Ok((occ, TensorOperator::from_matrix(matrix, d, copies)?))
        })
        .collect()
}

/// Maximum deviations from the occupation-operator identities.
#[derive(Clone, Copy, Debug)]
pub struct RelationReport<T> {
    /// `|sum_s P_s - 1|` (entrywise max).
    pub completeness: T,
    /// `|P_s P_s' - delta_ss' P_s|`.
    pub orthogonality: T,
    /// `|M_s P_s' - delta_ss' M_s|` and the transposed product.
    pub m_projector: T,
    /// `|tr M_s - multinomial(s)|`.
    pub m_trace: T,
    /// rank-one check: largest secondary eigenvalue magnitude of `M_s`, plus
    /// the leading eigenvalue's deviation from the multinomial weight.
    pub m_rank: T,
}

impl<T: Real> RelationReport<T> {
    pub fn max_violation(&self) -> T {
        [
            self.completeness,
            self.orthogonality,
            self.m_projector,
            self.m_trace,
            self.m_rank,
        ]
        .into_iter()
        .fold(T::zero(), <T as Float>::max)
    }

    pub fn all_within(&self, tol: T) -> bool {
        self.max_violation() <= tol
    }
}

impl<T: Real> std::fmt::Display for RelationReport<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "completeness   max dev {:.3e}", upcast(self.completeness))?;
        writeln!(f, "orthogonality  max dev {:.3e}", upcast(self.orthogonality))?;
        writeln!(f, "M x P relation max dev {:.3e}", upcast(self.m_projector))?;
        writeln!(f, "M trace        max dev {:.3e}", upcast(self.m_trace))?;
        write!(f, "M rank-one     max dev {:.3e}", upcast(self.m_rank))
    }
}

fn max_abs_entry<T: Real + RealField>(m: &DMatrix<Complex<T>>) -> T {
    m.iter()
        .map(|c| Float::sqrt(c.norm_sqr()))
        .fold(T::zero(), <T as Float>::max)
}

/// Checks completeness, orthogonality, the `M P` relation, traces and ranks
/// for all compositions of `(d, N)`.
pub fn verify_projector_relations<T: Real + RealField>(
    d: usize,
    copies: u32,
) -> Result<RelationReport<T>> {
    let dim = tensor_dim(d, copies)?;
    let compositions = enumerate_compositions(copies, d)?;
    let ms: Vec<TensorOperator<T>> = compositions
        .iter()
        .map(|s| build_m_operator(s, d, copies))
        .collect::<Result<_>>()?;
    let ps: Vec<TensorOperator<T>> = compositions
        .iter()
        .map(|s| build_p_projector(s, d, copies))
        .collect::<Result<_>>()?;

    let mut sum = DMatrix::<Complex<T>>::zeros(dim, dim);
    for p in &ps {
        sum += p.matrix();
    }
    let completeness = max_abs_entry(&(sum - DMatrix::<Complex<T>>::identity(dim, dim)));

    let mut orthogonality = T::zero();
    let mut m_projector = T::zero();
    for (i, si) in compositions.iter().enumerate() {
        for (j, _) in compositions.iter().enumerate() {
            let pp = ps[i].matrix() * ps[j].matrix();
            let expected_p = if i == j {
                ps[i].matrix().clone()
            } else {
                DMatrix::zeros(dim, dim)
            };
            orthogonality = Float::max(orthogonality, max_abs_entry(&(pp - expected_p)));

            let expected_m = if i == j {
                ms[i].matrix().clone()
            } else {
                DMatrix::zeros(dim, dim)
            };
            let mp = ms[i].matrix() * ps[j].matrix();
            let pm = ps[j].matrix() * ms[i].matrix();
            m_projector = Float::max(m_projector, max_abs_entry(&(mp - &expected_m)));
            m_projector = Float::max(m_projector, max_abs_entry(&(pm - expected_m)));
        }
        let _ = si;
    }

    let mut m_trace = T::zero();
    let mut m_rank = T::zero();
    for (s, m) in compositions.iter().zip(&ms) {
        let weight = cast::<T>(s.multinomial_weight()? as f64);
        m_trace = Float::max(m_trace, Float::abs(m.trace().re - weight));
        let eigs = m.hermitian_eigenvalues();
        let n = eigs.len();
        m_rank = Float::max(m_rank, Float::abs(eigs[n - 1] - weight));
        for k in 0..n - 1 {
            m_rank = Float::max(m_rank, Float::abs(eigs[k]));
        }
    }

    Ok(RelationReport {
        completeness,
        orthogonality,
        m_projector,
        m_trace,
        m_rank,
    })
}

/// A positive operator-valued measure with optional per-element estimators.
#[derive(Clone, Debug)]
pub struct Povm<T: Real + RealField> {
    elements: Vec<TensorOperator<T>>,
    estimators: Option<Vec<T>>,
}

impl<T: Real + RealField> Povm<T> {
    pub fn new(elements: Vec<TensorOperator<T>>, estimators: Option<Vec<T>>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::PovmInvariant("POVM has no elements".into()));
        }
        let labels = elements[0].labels();
        if elements.iter().any(|e| e.labels() != labels) {
            return Err(Error::PovmInvariant(
                "POVM elements act on different spaces".into(),
            ));
        }
        if let Some(est) = &estimators {
            if est.len() != elements.len() {
                return Err(Error::PovmInvariant(format!(
                    "{} estimators for {} elements",
                    est.len(),
                    elements.len()
                )));
            }
        }
        Ok(Self {
            elements,
            estimators,
        })
    }

    pub fn with_estimators(self, estimators: Vec<T>) -> Result<Self> {
        Self::new(self.elements, Some(estimators))
    }

    pub fn elements(&self) -> &[TensorOperator<T>] {
        &self.elements
    }

    pub fn estimators(&self) -> Option<&[T]> {
        self.estimators.as_deref()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn labels(&self) -> (usize, u32) {
        self.elements[0].labels()
    }

    /// Positive semidefiniteness of every element and completeness of the
    /// sum, within the given tolerances.
    pub fn validate(&self, psd_tol: T, completeness_tol: T) -> Result<()> {
        let dim = self.elements[0].dim();
        let mut sum = DMatrix::<Complex<T>>::zeros(dim, dim);
        for (a, e) in self.elements.iter().enumerate() {
            if !e.is_hermitian(psd_tol) {
                return Err(Error::PovmInvariant(format!("element {a} is not Hermitian")));
            }
            let min_eig = e.hermitian_eigenvalues()[0];
            if min_eig < -psd_tol {
                return Err(Error::PovmInvariant(format!(
                    "element {a} has eigenvalue {min_eig}"
                )));
            }
            sum += e.matrix();
        }
        let dev = max_abs_entry(&(sum - DMatrix::<Complex<T>>::identity(dim, dim)));
        if dev > completeness_tol {
            return Err(Error::PovmInvariant(format!(
                "elements sum to identity only within {dev}"
            )));
        }
        Ok(())
    }

    pub fn validate_default(&self) -> Result<()> {
        let tol = Float::max(cast(1e-10), T::epsilon() * cast(1e2));
        self.validate(tol, tol)
    }
}

/// The occupation-projector POVM `{P_s}` with the table's estimators.
pub fn projective_povm<T: Real + RealField>(table: &EstimatorTable<T>) -> Result<Povm<T>> {
    let d = table.observable().dim();
    let copies = table.num_copies();
    let mut elements = Vec::new();
    let mut estimators = Vec::new();
    for (s, entry) in table.records() {
        elements.push(build_p_projector(&s, d, copies)?);
        estimators.push(entry.estimator);
    }
    Povm::new(elements, Some(estimators))
}

/// The fully separable per-copy measurement: one rank-one projector per
/// basis string, estimated by looking the string's occupation up in the
/// table.
pub fn separable_povm<T: Real + RealField>(table: &EstimatorTable<T>) -> Result<Povm<T>> {
    let d = table.observable().dim();
    let copies = table.num_copies();
    let mut elements = Vec::new();
    let mut estimators = Vec::new();
    for (occ, proj) in separable_projectors(d, copies)? {
        let entry = table
            .get(&occ)
            .ok_or_else(|| Error::MissingTableEntry(occ.to_string()))?;
        elements.push(proj);
        estimators.push(entry.estimator);
    }
    Povm::new(elements, Some(estimators))
}

/// `tr[M_s E]` without forming `M_s`: the sum of `E`'s entries over the
/// occupation class (real for Hermitian `E`).
fn occupation_overlap<T: Real + RealField>(class: &[usize], e: &DMatrix<Complex<T>>) -> T {
    let mut acc = Complex::new(T::zero(), T::zero());
    for &i in class {
        for &j in class {
            acc += e[(j, i)];
        }
    }
    acc.re
}

fn povm_coefficients<T: Real + RealField>(
    povm: &Povm<T>,
    compositions: &[Composition],
    d: usize,
    copies: u32,
) -> Result<Vec<Vec<T>>> {
    let dim = povm.elements()[0].dim();
    let classes: Vec<Vec<usize>> = compositions
        .iter()
        .map(|s| class_indices(s, d, copies, dim))
        .collect();
    let pairing_tol = Float::max(cast(1e-10), T::epsilon() * cast(1e2));
    povm.elements()
        .iter()
        .enumerate()
        .map(|(a, e)| {
            classes
                .iter()
                .zip(compositions)
                .map(|(class, s)| {
                    let c = occupation_overlap(class, e.matrix());
                    if c < -pairing_tol {
                        return Err(Error::PovmInvariant(format!(
                            "tr[M_{s} E_{a}] = {c} < 0 for a PSD pairing"
                        )));
                    }
                    Ok(Float::max(c, T::zero()))
                })
                .collect()
        })
        .collect()
}

/// Mean error of a POVM with estimators:
/// `sum_a sum_s w_s(omega_a) tr[M_s E_a]`.
pub fn mean_error_of_povm<T: Real + RealField>(
    povm: &Povm<T>,
    copies: u32,
    obs: &Observable<T>,
    measure: &DeviationMeasure<T>,
    quad: &SimplexQuadratureConfig<T>,
) -> Result<T> {
    let estimators = povm.estimators().ok_or(Error::MissingEstimators)?.to_vec();
    check_povm_labels(povm, obs, copies)?;
    povm.validate_default()?;
    let d = obs.dim();
    let compositions = enumerate_compositions(copies, d)?;
    let coefficients = povm_coefficients(povm, &compositions, d, copies)?;
    let objectives: Vec<WObjective<T>> = compositions
        .iter()
        .map(|s| uniform_objective(s, obs, quad))
        .collect::<Result<_>>()?;
    let mut total = T::zero();
    for (coeffs, &omega) in coefficients.iter().zip(&estimators) {
        for (objective, &c) in objectives.iter().zip(coeffs) {
            if c > T::zero() {
                total = total + c * objective.eval(omega, measure)?;
            }
        }
    }
    Ok(total)
}

fn check_povm_labels<T: Real + RealField>(
    povm: &Povm<T>,
    obs: &Observable<T>,
    copies: u32,
) -> Result<()> {
    let (pd, pn) = povm.labels();
    if pd != obs.dim() || pn != copies {
        return Err(Error::PovmInvariant(format!(
            "POVM labels (d={pd}, N={pn}) do not match observable d={} and N={copies}",
            obs.dim()
        )));
    }
    Ok(())
}

/// Equips each element with the estimator minimizing its own objective
/// `sum_s tr[M_s E_a] w_s(omega)` over the eigenvalue bracket.
pub fn optimal_estimators_for_povm<T: Real + RealField>(
    povm: &Povm<T>,
    copies: u32,
    obs: &Observable<T>,
    measure: &DeviationMeasure<T>,
    solver: &SolverConfig<T>,
    quad: &SimplexQuadratureConfig<T>,
) -> Result<Povm<T>> {
    check_povm_labels(povm, obs, copies)?;
    povm.validate_default()?;
    let d = obs.dim();
    if obs.is_constant() {
        let estimators = vec![obs.lambda_min(); povm.len()];
        return povm.clone().with_estimators(estimators);
    }
    let compositions = enumerate_compositions(copies, d)?;
    let coefficients = povm_coefficients(povm, &compositions, d, copies)?;
    let objectives: Vec<WObjective<T>> = compositions
        .iter()
        .map(|s| uniform_objective(s, obs, quad))
        .collect::<Result<_>>()?;
    let smooth = measure.regularity() == Regularity::SmoothConvex;
    let mut estimators = Vec::with_capacity(povm.len());
    for coeffs in &coefficients {
        let objective = |omega: T| -> Result<T> {
            let mut acc = T::zero();
            for (obj, &c) in objectives.iter().zip(coeffs) {
                if c > T::zero() {
                    acc = acc + c * obj.eval(omega, measure)?;
                }
            }
            Ok(acc)
        };
        let (omega, _) = minimize_scalar(
            objective,
            obs.lambda_min(),
            obs.lambda_max(),
            solver,
            smooth,
        )?;
        estimators.push(omega);
    }
    povm.clone().with_estimators(estimators)
}

/// Seeded random POVM: `E_a = S^(-1/2) A_a S^(-1/2)` with `A_a = G_a G_a^H`
/// from complex Gaussian matrices and `S = sum_a A_a`. `k = 1` returns the
/// identity.
pub fn random_povm<T: Real + RealField>(
    d: usize,
    copies: u32,
    k: usize,
    seed: u64,
) -> Result<Povm<T>> {
    if k == 0 {
        return Err(Error::InvalidConfig("POVM needs k >= 1 elements".into()));
    }
    let dim = tensor_dim(d, copies)?;
    if k == 1 {
        return Povm::new(vec![TensorOperator::identity(d, copies)?], None);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    const MAX_ATTEMPTS: u32 = 5;
    for _ in 0..MAX_ATTEMPTS {
        let parts: Vec<DMatrix<Complex<T>>> = (0..k)
            .map(|_| {
                let g = random_complex_gaussian::<T>(dim, &mut rng);
                &g * g.adjoint()
            })
            .collect();
        let mut sum = DMatrix::<Complex<T>>::zeros(dim, dim);
        for p in &parts {
            sum += p;
        }
        let eig = sum.clone().symmetric_eigen();
        let max_eig = eig
            .eigenvalues
            .iter()
            .copied()
            .fold(T::zero(), |m, v| Float::max(m, Float::abs(v)));
        let min_eig = eig
            .eigenvalues
            .iter()
            .copied()
            .fold(T::infinity(), <T as Float>::min);
        if !(min_eig > max_eig * T::epsilon() * cast(1e3)) {
            continue;
        }
        // S^(-1/2) through the eigendecomposition
        let inv_sqrt_diag = DVector::from_iterator(
            dim,
            eig.eigenvalues
                .iter()
                .map(|&v| Complex::new(T::one() / Float::sqrt(v), T::zero())),
        );
        let u = eig.eigenvectors;
        let inv_sqrt = &u * DMatrix::from_diagonal(&inv_sqrt_diag) * u.adjoint();
        let elements: Vec<TensorOperator<T>> = parts
            .into_iter()
            .map(|a| {
                let e = &inv_sqrt * a * &inv_sqrt;
                // hermitize away conjugation round-off
                let e = (&e + e.adjoint()).scale_mut_workaround(Complex::new(
                    cast::<T>(0.5),
                    T::zero(),
                ));
                TensorOperator::from_matrix(e, d, copies)
            })
            .collect::<Result<_>>()?;
        return Povm::new(elements, None);
    }
    Err(Error::SingularPovmSum(MAX_ATTEMPTS))
}

fn random_complex_gaussian<T: Real + RealField>(
    dim: usize,
    rng: &mut ChaCha8Rng,
) -> DMatrix<Complex<T>> {
    let mut m = DMatrix::<Complex<T>>::zeros(dim, dim);
    let root_half = cast::<T>(std::f64::consts::FRAC_1_SQRT_2);
    for i in 0..dim {
        for j in 0..dim {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            m[(i, j)] = Complex::new(cast::<T>(re) * root_half, cast::<T>(im) * root_half);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplex::w_prefactor;
    use crate::solver::{build_estimator_table, min_mean_error, quadratic_estimator_closed_form};

    fn qubit() -> Observable<f64> {
        Observable::new(vec![1.0, -1.0]).unwrap()
    }

    fn comp(counts: &[u32]) -> Composition {
        Composition::new(counts.to_vec()).unwrap()
    }

    fn defaults() -> (SolverConfig<f64>, SimplexQuadratureConfig<f64>) {
        (SolverConfig::default(), SimplexQuadratureConfig::default())
    }

    #[test]
    fn m_operator_block_structure() {
        // basis order |00>, |01>, |10>, |11>; occupation (1,1) is {1, 2}
        let m = build_m_operator::<f64>(&comp(&[1, 1]), 2, 2).unwrap();
        let mat = m.matrix();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if (i == 1 || i == 2) && (j == 1 || j == 2) {
                    1.0
                } else {
                    0.0
                };
                assert_eq!(mat[(i, j)].re, expected, "({i},{j})");
                assert_eq!(mat[(i, j)].im, 0.0);
            }
        }
        assert_eq!(m.trace().re, 2.0);
        let eigs = m.hermitian_eigenvalues();
        assert!((eigs[3] - 2.0).abs() < 1e-14);
        assert!(eigs.iter().take(3).all(|e| e.abs() < 1e-14));
    }

    #[test]
    fn m_operator_single_string() {
        let m = build_m_operator::<f64>(&comp(&[2, 0]), 2, 2).unwrap();
        assert_eq!(m.matrix()[(0, 0)].re, 1.0);
        assert_eq!(m.trace().re, 1.0);
    }

    #[test]
    fn p_projector_diagonal() {
        let p = build_p_projector::<f64>(&comp(&[1, 1]), 2, 2).unwrap();
        let diag: Vec<f64> = (0..4).map(|i| p.matrix()[(i, i)].re).collect();
        assert_eq!(diag, vec![0.0, 1.0, 1.0, 0.0]);
        let p3 = build_p_projector::<f64>(&comp(&[1, 1, 0]), 3, 2).unwrap();
        assert_eq!(p3.trace().re, 2.0);
    }

    #[test]
    fn projector_relations_exact() {
        for (d, n) in [(2, 2), (2, 3), (3, 2)] {
            let report = verify_projector_relations::<f64>(d, n).unwrap();
            assert!(
                report.all_within(1e-12),
                "d={d} N={n}: {}",
                report.max_violation()
            );
        }
    }

    #[test]
    fn dimension_guard_enforced() {
        assert!(matches!(
            tensor_dim(2, 15),
            Err(Error::DimensionGuard { .. })
        ));
        assert!(tensor_dim(2, 14).is_ok()); // 16384 exactly
        assert!(build_m_operator::<f64>(&comp(&[15, 0]), 2, 15).is_err());
    }

    #[test]
    fn identity_povm_no_measurement_strategy() {
        let (_, quad) = defaults();
        let povm = Povm::new(
            vec![TensorOperator::<f64>::identity(2, 2).unwrap()],
            Some(vec![0.0]),
        )
        .unwrap();
        let err =
            mean_error_of_povm(&povm, 2, &qubit(), &DeviationMeasure::quadratic(), &quad).unwrap();
        assert!((err - 1.0 / 3.0).abs() < 1e-12, "{err}");
    }

    #[test]
    fn projective_povm_achieves_minimum() {
        let (solver, quad) = defaults();
        let measure = DeviationMeasure::quadratic();
        let table = build_estimator_table(2, &qubit(), &measure, &solver, &quad).unwrap();
        let povm = projective_povm(&table).unwrap();
        povm.validate_default().unwrap();
        let err = mean_error_of_povm(&povm, 2, &qubit(), &measure, &quad).unwrap();
        let bound = min_mean_error(2, &qubit(), &measure, &solver, &quad).unwrap();
        assert!((err - bound).abs() < 1e-12, "{err} vs {bound}");
        assert!((err - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn wrong_estimators_cost_more() {
        let (solver, quad) = defaults();
        let measure = DeviationMeasure::quadratic();
        let table = build_estimator_table(2, &qubit(), &measure, &solver, &quad).unwrap();
        let povm = projective_povm(&table)
            .unwrap()
            .with_estimators(vec![0.0, 0.0, 0.0])
            .unwrap();
        let err = mean_error_of_povm(&povm, 2, &qubit(), &measure, &quad).unwrap();
        assert!((err - 1.0 / 3.0).abs() < 1e-12, "{err}");
    }

    #[test]
    fn separable_matches_projective() {
        let (solver, quad) = defaults();
        for measure in [
            DeviationMeasure::quadratic(),
            DeviationMeasure::sinh_squared(1.0).unwrap(),
        ] {
            let table = build_estimator_table(2, &qubit(), &measure, &solver, &quad).unwrap();
            let joint = projective_povm(&table).unwrap();
            let separable = separable_povm(&table).unwrap();
            separable.validate_default().unwrap();
            let e1 = mean_error_of_povm(&joint, 2, &qubit(), &measure, &quad).unwrap();
            let e2 = mean_error_of_povm(&separable, 2, &qubit(), &measure, &quad).unwrap();
            assert!((e1 - e2).abs() < 1e-12, "{measure:?}: {e1} vs {e2}");
        }
    }

    #[test]
    fn optimal_estimators_recover_table() {
        let (solver, quad) = defaults();
        let measure = DeviationMeasure::sinh_squared(1.0).unwrap();
        let table = build_estimator_table(2, &qubit(), &measure, &solver, &quad).unwrap();
        let povm = projective_povm(&table).unwrap();
        let optimized =
            optimal_estimators_for_povm(&povm, 2, &qubit(), &measure, &solver, &quad).unwrap();
        for ((_, entry), &found) in table.records().iter().zip(optimized.estimators().unwrap()) {
            assert!(
                (entry.estimator - found).abs() < 2.0 * solver.omega_tol + 1e-9,
                "{} vs {found}",
                entry.estimator
            );
        }
    }

    #[test]
    fn optimal_estimator_identity_povm_is_zero() {
        let (solver, quad) = defaults();
        let povm = Povm::new(vec![TensorOperator::<f64>::identity(2, 2).unwrap()], None).unwrap();
        let optimized = optimal_estimators_for_povm(
            &povm,
            2,
            &qubit(),
            &DeviationMeasure::quadratic(),
            &solver,
            &quad,
        )
        .unwrap();
        assert!(optimized.estimators().unwrap()[0].abs() < 1e-9);
    }

    #[test]
    fn quadratic_optimal_estimators_match_weighted_mean() {
        // for W = x^2 the per-element optimum has the closed form
        // sum_s c_s pref_s mean_s / sum_s c_s pref_s
        let (solver, quad) = defaults();
        let obs = qubit();
        let measure = DeviationMeasure::quadratic();
        let povm = random_povm::<f64>(2, 2, 3, 99).unwrap();
        let optimized =
            optimal_estimators_for_povm(&povm, 2, &obs, &measure, &solver, &quad).unwrap();
        let compositions = enumerate_compositions(2, 2).unwrap();
        let coefficients = povm_coefficients(&povm, &compositions, 2, 2).unwrap();
        for (coeffs, &found) in coefficients.iter().zip(optimized.estimators().unwrap()) {
            let mut num = 0.0;
            let mut den = 0.0;
            for (s, &c) in compositions.iter().zip(coeffs) {
                let e: Vec<f64> = s.counts().iter().map(|&v| v as f64).collect();
                let pref = w_prefactor(&e, 2);
                let mean = quadratic_estimator_closed_form(s, &obs).unwrap();
                num += c * pref * mean;
                den += c * pref;
            }
            assert!((found - num / den).abs() < 1e-8, "{found} vs {}", num / den);
        }
    }

    #[test]
    fn random_povm_invariants() {
        for seed in [0u64, 1, 2] {
            let povm = random_povm::<f64>(2, 2, 4, seed).unwrap();
            povm.validate(1e-10, 1e-10).unwrap();
            for e in povm.elements() {
                assert!(e.hermitian_eigenvalues()[0] >= -1e-10);
            }
        }
        // determinism
        let a = random_povm::<f64>(3, 1, 2, 7).unwrap();
        let b = random_povm::<f64>(3, 1, 2, 7).unwrap();
        assert_eq!(a.elements()[0].matrix(), b.elements()[0].matrix());
    }

    #[test]
    fn random_povm_single_element_is_identity() {
        let povm = random_povm::<f64>(2, 2, 1, 5).unwrap();
        assert_eq!(
            povm.elements()[0].matrix(),
            TensorOperator::<f64>::identity(2, 2).unwrap().matrix()
        );
    }

    #[test]
    fn povm_validation_failures() {
        let id = TensorOperator::<f64>::identity(2, 1).unwrap();
        assert!(Povm::new(vec![id.clone()], Some(vec![0.0, 1.0])).is_err());
        assert!(Povm::new(Vec::<TensorOperator<f64>>::new(), None).is_err());
        // sums to identity but one element is not PSD
        let mut over = DMatrix::<Complex<f64>>::zeros(2, 2);
        over[(0, 0)] = Complex::new(1.2, 0.0);
        over[(1, 1)] = Complex::new(1.0, 0.0);
        let mut neg = DMatrix::<Complex<f64>>::zeros(2, 2);
        neg[(0, 0)] = Complex::new(-0.2, 0.0);
        let povm = Povm::new(
            vec![
                TensorOperator::from_matrix(over, 2, 1).unwrap(),
                TensorOperator::from_matrix(neg, 2, 1).unwrap(),
            ],
            None,
        )
        .unwrap();
        assert!(matches!(
            povm.validate_default(),
            Err(Error::PovmInvariant(_))
        ));
    }

    #[test]
    fn missing_estimators_rejected() {
        let (_, quad) = defaults();
        let povm = Povm::new(vec![TensorOperator::<f64>::identity(2, 2).unwrap()], None).unwrap();
        assert!(matches!(
            mean_error_of_povm(&povm, 2, &qubit(), &DeviationMeasure::quadratic(), &quad),
            Err(Error::MissingEstimators)
        ));
    }

    #[test]
    fn bound_holds_for_random_povms_spot_check() {
        let (solver, quad) = defaults();
        let obs = qubit();
        let measure = DeviationMeasure::quadratic();
        let bound = min_mean_error(2, &obs, &measure, &solver, &quad).unwrap();
        for seed in 0..10u64 {
            let povm = random_povm::<f64>(2, 2, 3, seed).unwrap();
            let optimized =
                optimal_estimators_for_povm(&povm, 2, &obs, &measure, &solver, &quad).unwrap();
            let err = mean_error_of_povm(&optimized, 2, &obs, &measure, &quad).unwrap();
            assert!(err >= bound - 1e-9, "seed {seed}: {err} < {bound}");
        }
    }
}
