//! Core domain types shared by tensor construction, the solver, and the
//! experiment drivers.
//!
//! Conventions used throughout the crate:
//! * the IN space has dimension `n`, the OUT space dimension `d`, `d <= n`;
//! * an operator is a `d x n` real matrix with orthonormal rows when feasible;
//! * `d x n` matrices are flattened row by row, `(j, k) -> j*n + k`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// Row-major flat index of entry `(j, k)` of a matrix with `n` columns.
pub fn flatten_index(j: usize, k: usize, n: usize) -> usize {
    assert!(k < n, "column index {k} out of range for width {n}");
    j * n + k
}

/// One weighted observation pair: coefficients of the IN-space state and the
/// OUT-space state, both known only up to a sign.
#[derive(Debug, Clone)]
pub struct ObservationRecord {
    pub weight: f64,
    pub alpha: DVector<f64>,
    pub beta: DVector<f64>,
}

/// Weighted pairs of coefficient vectors, the raw learning data.
#[derive(Debug, Clone)]
pub struct ObservationSample {
    n: usize,
    d: usize,
    records: Vec<ObservationRecord>,
    orthogonalized: bool,
}

impl ObservationSample {
    pub fn new(n: usize, d: usize, records: Vec<ObservationRecord>) -> Result<Self> {
        if d > n {
            return Err(Error::dims("ObservationSample (requires d <= n)", n, d));
        }
        for (index, r) in records.iter().enumerate() {
            if !(r.weight > 0.0) {
                return Err(Error::InvalidWeight {
                    index,
                    value: r.weight,
            });
            }
            if r.alpha.len() != n {
                return Err(Error::dims("observation alpha", n, r.alpha.len()));
            }
            if r.beta.len() != d {
                return Err(Error::dims("observation beta", d, r.beta.len()));
            }
            if !r.weight.is_finite()
                || r.alpha.iter().any(|x| !x.is_finite())
                || r.beta.iter().any(|x| !x.is_finite())
            {
                return Err(Error::non_finite(format!("observation record {index}")));
            }
        }
        Ok(ObservationSample {
            n,
            d,
            records,
            orthogonalized: false,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[ObservationRecord] {
        &self.records
    }

    /// Set once both sample-average Gram matrices equal the identity.
    pub fn is_orthogonalized(&self) -> bool {
        self.orthogonalized
    }

    pub(crate) fn mark_orthogonalized(&mut self) {
        self.orthogonalized = true;
    }

    /// Keep only the first `n` IN-space and `d` OUT-space components.
    pub fn truncate(&self, n: usize, d: usize) -> Result<ObservationSample> {
        if n > self.n {
            return Err(Error::dims("truncate n", self.n, n));
        }
        if d > self.d {
            return Err(Error::dims("truncate d", self.d, d));
        }
        let records = self
            .records
            .iter()
            .map(|r| ObservationRecord {
                weight: r.weight,
                alpha: r.alpha.rows(0, n).clone_owned(),
                beta: r.beta.rows(0, d).clone_owned(),
            })
            .collect();
        ObservationSample::new(n, d, records)
    }

    /// Concatenate two samples over the same spaces.
    pub fn concat(&self, other: &ObservationSample) -> Result<ObservationSample> {
        if other.n != self.n {
            return Err(Error::dims("concat n", self.n, other.n));
        }
        if other.d != self.d {
            return Err(Error::dims("concat d", self.d, other.d));
        }
        let mut records = self.records.clone();
        records.extend(other.records.iter().cloned());
        ObservationSample::new(self.n, self.d, records)
    }
}

/// The symmetric PSD four-index tensor `S_{jk;j'k'}` flattened to a
/// `(d n) x (d n)` matrix; the quadratic-form kernel of the fidelity.
#[derive(Debug, Clone)]
pub struct FidelityTensor {
    d: usize,
    n: usize,
    s: SymMatrix,
}

impl FidelityTensor {
    pub fn new(d: usize, n: usize, s: SymMatrix) -> Self {
        assert_eq!(s.order(), d * n, "tensor must be (d n) x (d n)");
        FidelityTensor { d, n, s }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Flattened dimension `d * n`.
    pub fn dim(&self) -> usize {
        self.d * self.n
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.s
    }

    pub fn entry(&self, j: usize, k: usize, j2: usize, k2: usize) -> f64 {
        self.s[(flatten_index(j, k, self.n), flatten_index(j2, k2, self.n))]
    }

    /// Sum of two tensors over the same spaces (fidelity is extensive).
    pub fn sum(&self, other: &FidelityTensor) -> Result<FidelityTensor> {
        if other.d != self.d || other.n != self.n {
            return Err(Error::dims("tensor sum", self.dim(), other.dim()));
        }
        let a = self.s.as_matrix();
        let b = other.s.as_matrix();
        Ok(FidelityTensor::new(
            self.d,
            self.n,
            SymMatrix::from_fn(self.dim(), |i, j| a[(i, j)] + b[(i, j)]),
        ))
    }
}

/// The `d x n` solution matrix. Feasible means orthonormal rows; feasibility
/// is always reported through `feasibility_residual`, never assumed.
#[derive(Debug, Clone)]
pub struct PartialIsometry {
    matrix: DMatrix<f64>,
}

impl PartialIsometry {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        PartialIsometry { matrix }
    }

    pub fn d(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// `max |u u^T - I|`.
    pub fn feasibility_residual(&self) -> f64 {
        let g = &self.matrix * self.matrix.transpose();
        let d = self.d();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }

    pub fn is_feasible(&self, tol: f64) -> bool {
        self.feasibility_residual() <= tol
    }

    /// Row-major flattening of the matrix.
    pub fn to_flat(&self) -> DVector<f64> {
        let (d, n) = (self.d(), self.n());
        DVector::from_fn(d * n, |i, _| self.matrix[(i / n, i % n)])
    }

    pub fn from_flat(v: &DVector<f64>, d: usize, n: usize) -> Self {
        assert_eq!(v.len(), d * n);
        PartialIsometry::new(DMatrix::from_fn(d, n, |j, k| v[j * n + k]))
    }

    /// Max element difference against a reference, minimized over the global
    /// sign ambiguity.
    pub fn max_diff_up_to_sign(&self, reference: &DMatrix<f64>) -> f64 {
        let plus = (&self.matrix - reference)
            .iter()
            .fold(0.0f64, |m, x| m.max(x.abs()));
        let minus = (&self.matrix + reference)
            .iter()
            .fold(0.0f64, |m, x| m.max(x.abs()));
        plus.min(minus)
    }
}

/// Symmetric `d x d` matrix of Lagrange multipliers; its trace equals the
/// fidelity at an extremum.
#[derive(Debug, Clone)]
pub struct LagrangeMultipliers {
    matrix: SymMatrix,
}

impl LagrangeMultipliers {
    pub fn new(matrix: SymMatrix) -> Self {
        LagrangeMultipliers { matrix }
    }

    pub fn zeros(d: usize) -> Self {
        LagrangeMultipliers {
            matrix: SymMatrix::zeros(d),
        }
    }

    pub fn d(&self) -> usize {
        self.matrix.order()
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.max_abs() == 0.0
    }

    pub fn max_abs_diff(&self, other: &LagrangeMultipliers) -> f64 {
        (self.matrix.as_matrix() - other.matrix.as_matrix())
            .iter()
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

/// Homogeneous linear constraints `C vec(u) = 0` restricting the next
/// iteration's variation subspace. `(d-1)(d+2)/2` rows when built from a
/// feasible state, zero rows otherwise.
#[derive(Debug, Clone)]
pub struct ConstraintSet {
    rows: DMatrix<f64>,
}

impl ConstraintSet {
    pub fn new(rows: DMatrix<f64>) -> Self {
        ConstraintSet { rows }
    }

    pub fn empty(flat_dim: usize) -> Self {
        ConstraintSet {
            rows: DMatrix::zeros(0, flat_dim),
        }
    }

    /// Constraint count for a feasible `d`-row state: `(d-1)(d+2)/2`.
    pub fn expected_rows(d: usize) -> usize {
        if d == 0 {
            0
        } else {
            (d - 1) * (d + 2) / 2
        }
    }

    pub fn row_count(&self) -> usize {
        self.rows.nrows()
    }

    pub fn flat_dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.rows
    }
}

/// Which operator is postulated to be known in both Hilbert spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    /// The sample Gram matrix transports through the channel; input data is
    /// regularized to unit Gram before solving.
    Gram,
    /// The unit matrix transports through the channel; data is used as is.
    Unit,
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Channel::Gram => write!(f, "gram"),
            Channel::Unit => write!(f, "unit"),
        }
    }
}

/// Metric matrix used in the denominator of the per-iteration eigenproblem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QChoice {
    Identity,
    /// Use the current Lagrange multipliers, guarded by a positivity check.
    Lambda,
}

/// Solver knobs. Defaults reproduce the reference protocol.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Relative tolerance on the selected eigenvalue: `|mu| <= tol * max(1, |F|)`.
    pub mu_tolerance: f64,
    /// Absolute tolerance on the unitarity indicator `|sum 1/lambda_G - d|`.
    pub unitarity_tolerance: f64,
    /// Rank of the eigenstate selected at every iteration (0 = largest).
    pub eigenstate_rank: usize,
    /// Number of restarts; run `r` selects the eigenstate of rank
    /// `eigenstate_rank + r` throughout.
    pub num_runs: usize,
    pub channel: Channel,
    pub q_choice: QChoice,
    /// Rank the candidate eigenstates by adjusted fidelity instead of by
    /// eigenvalue index (all positive eigenvalues plus the ten highest
    /// negative ones are tried).
    pub scan_candidates: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: 100,
            mu_tolerance: 1e-12,
            unitarity_tolerance: 1e-12,
            eigenstate_rank: 0,
            num_runs: 4,
            channel: Channel::Gram,
            q_choice: QChoice::Identity,
            scan_candidates: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu_tolerance > 0.0) || !(self.unitarity_tolerance > 0.0) {
            return Err(Error::NonFinite {
                context: "solver tolerances must be positive".into(),
            });
        }
        if self.max_iterations == 0 {
            return Err(Error::EmptyInput {
                context: "max_iterations".into(),
            });
        }
        if self.num_runs == 0 {
            return Err(Error::EmptyInput {
                context: "num_runs".into(),
            });
        }
        Ok(())
    }
}

/// One row of the convergence trace: eigenvalue of the selected state, the
/// fidelity of the adjusted state, and the unitarity indicator of the
/// selected state before adjustment.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IterationRecord {
    pub index: usize,
    pub mu: f64,
    pub fidelity: f64,
    pub penalty: f64,
}

/// How a single restart ended.
#[derive(Debug, Clone, PartialEq)]
pub enum RunOutcome {
    Converged,
    MaxIterations,
    /// The (fidelity, penalty) pair repeated without meeting tolerance.
    Cycling,
    /// The requested eigenstate rank does not exist for this problem size.
    RankUnavailable,
    Failed(String),
}

/// Full trace of one restart.
#[derive(Debug, Clone)]
pub struct RunHistory {
    pub rank: usize,
    pub outcome: RunOutcome,
    pub iterations: Vec<IterationRecord>,
    pub fidelity: f64,
}

impl RunHistory {
    pub fn converged(&self) -> bool {
        self.outcome == RunOutcome::Converged
    }
}

/// Result of a solve: best run's solution plus the full diagnostics of every
/// restart.
#[derive(Debug, Clone)]
pub struct SolverReport {
    pub solution: PartialIsometry,
    pub fidelity: f64,
    pub converged: bool,
    /// Per-iteration history of the reported run.
    pub iterations: Vec<IterationRecord>,
    pub lambda_final: LagrangeMultipliers,
    /// Provenance seed recorded by the caller (the solver itself draws no
    /// random numbers).
    pub seed: u64,
    pub runs: Vec<RunHistory>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_trivial() {
        assert_eq!(flatten_index(0, 0, 5), 0);
        assert_eq!(flatten_index(1, 0, 5), 5);
    }

    #[test]
    fn flatten_bijection() {
        let (d, n) = (4, 19);
        let mut seen = vec![false; d * n];
        for j in 0..d {
            for k in 0..n {
                let idx = flatten_index(j, k, n);
                assert!(!seen[idx], "collision at ({j},{k})");
                seen[idx] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    #[should_panic]
    fn flatten_out_of_range() {
        flatten_index(0, 5, 5);
    }

    #[test]
    fn sample_rejects_bad_weight() {
        let rec = ObservationRecord {
            weight: 0.0,
            alpha: DVector::from_row_slice(&[1.0]),
            beta: DVector::from_row_slice(&[1.0]),
        };
        assert!(matches!(
            ObservationSample::new(1, 1, vec![rec]),
            Err(Error::InvalidWeight { .. })
        ));
    }

    #[test]
    fn sample_rejects_d_above_n() {
        assert!(ObservationSample::new(2, 3, vec![]).is_err());
    }

    #[test]
    fn feasibility_residual_reports() {
        let u = PartialIsometry::new(DMatrix::from_row_slice(1, 2, &[2.0, 0.0]));
        assert!((u.feasibility_residual() - 3.0).abs() < 1e-15);
        let v = PartialIsometry::new(DMatrix::from_row_slice(1, 2, &[1.0, 0.0]));
        assert!(v.is_feasible(1e-12));
    }

    #[test]
    fn constraint_row_counts() {
        assert_eq!(ConstraintSet::expected_rows(1), 0);
        assert_eq!(ConstraintSet::expected_rows(2), 2);
        assert_eq!(ConstraintSet::expected_rows(3), 5);
        assert_eq!(ConstraintSet::expected_rows(4), 9);
    }

    #[test]
    fn diff_up_to_sign() {
        let m = DMatrix::from_row_slice(1, 2, &[0.6, 0.8]);
        let u = PartialIsometry::new(m.clone());
        assert_eq!(u.max_diff_up_to_sign(&m), 0.0);
        assert_eq!(u.max_diff_up_to_sign(&(-&m)), 0.0);
    }
}
