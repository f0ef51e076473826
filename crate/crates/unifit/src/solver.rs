//! Iterative constrained optimizer: given a fidelity tensor, find the
//! partially unitary matrix maximizing the quadratic form.
//!
//! Each iteration carries a triple (state, multipliers, linear constraints).
//! One step solves a generalized eigenproblem on the constraint-free
//! subspace, selects an eigenstate, rescales it to the partial (Frobenius)
//! constraint, adjusts it to a full isometry with the inverse square root of
//! its row Gram, and recomputes multipliers and constraints from the adjusted
//! state. The linear constraints pin the variation subspace so that partial
//! unitarity is preserved to first order, which is what makes the iteration
//! contract; dropping them (`solve_vanilla`) demonstrably cycles.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{
    eliminate_constraints, gen_eig, inv_sqrt_psd, sym_eig, EigenDecomposition, EliminationBasis,
    SymMatrix, RANK_TOLERANCE,
};
use crate::model::{
    ConstraintSet, FidelityTensor, IterationRecord, LagrangeMultipliers, PartialIsometry, QChoice,
    RunHistory, RunOutcome, SolverConfig, SolverReport,
};
use crate::tensor;

/// Multipliers count as converged when they change by less than this
/// (relative to their own magnitude) between iterations.
const LAMBDA_CHANGE_TOLERANCE: f64 = 1e-10;

/// Relative window for the repeated-(F, penalty) cycle test.
const CYCLE_TOLERANCE: f64 = 1e-9;

/// A repeat only counts as a cycle while the eigenvalue is still far from
/// zero; near the fixed point consecutive iterations legitimately coincide.
const CYCLE_MU_FLOOR: f64 = 1e-6;

/// Number of trailing iterations inspected by the cycle test.
const CYCLE_WINDOW: usize = 4;

/// Extra negative-eigenvalue states tried when scanning candidates.
const SCAN_NEGATIVE_STATES: usize = 10;

/// The iteration triple plus diagnostics of the step that produced it.
#[derive(Debug, Clone)]
pub struct IterationState {
    pub u: PartialIsometry,
    pub lambda: LagrangeMultipliers,
    pub constraints: ConstraintSet,
    /// Eigenvalue of the selected state.
    pub mu_selected: f64,
    /// Fidelity of the adjusted state.
    pub fidelity: f64,
    /// Unitarity indicator `Tr G^{-1}` of the selected state before
    /// adjustment; equals `d` exactly at a fixed point.
    pub penalty: f64,
    /// Dimension of the eigenproblem that produced this state.
    pub subspace_dim: usize,
}

impl IterationState {
    /// State before the first iteration: zero multipliers, no constraints.
    pub fn initial(d: usize, n: usize) -> Self {
        IterationState {
            u: PartialIsometry::new(DMatrix::zeros(d, n)),
            lambda: LagrangeMultipliers::zeros(d),
            constraints: ConstraintSet::empty(d * n),
            mu_selected: f64::NAN,
            fidelity: f64::NAN,
            penalty: f64::NAN,
            subspace_dim: d * n,
        }
    }
}

/// Row Gram `G_{jj'} = sum_k u_{jk} u_{j'k}`.
pub fn gram_of_rows(u: &DMatrix<f64>) -> SymMatrix {
    let d = u.nrows();
    SymMatrix::from_fn(d, |i, j| u.row(i).dot(&u.row(j)))
}

/// Unitarity indicator `Tr G^{-1} = sum 1/lambda_G`; equals the row count
/// exactly iff the rows are orthonormal, and is larger otherwise.
pub fn unitarity_penalty(u: &DMatrix<f64>) -> Result<f64> {
    let g = gram_of_rows(u);
    let eig = sym_eig(&g)?;
    let d = g.order();
    if d == 0 {
        return Ok(0.0);
    }
    let max = eig.eigenvalues[0];
    if max <= 0.0 || eig.eigenvalues[d - 1] <= RANK_TOLERANCE * max {
        return Err(Error::DegenerateGram {
            near_null: vec![(d - 1, eig.eigenvalues[d - 1])],
        });
    }
    Ok(eig.eigenvalues.iter().map(|l| 1.0 / l).sum())
}

/// Minimal-change projection onto the isometry manifold:
/// `u~ = G^{-1/2} u`. Fails when the row Gram is rank deficient.
pub fn adjust_to_isometry(u: &DMatrix<f64>) -> Result<PartialIsometry> {
    let g = gram_of_rows(u);
    let x = inv_sqrt_psd(&g).map_err(|_| Error::RankCollapse { iteration: None })?;
    Ok(PartialIsometry::new(x.as_matrix() * u))
}

/// `b = S vec(u)` reshaped back to `d x n`.
fn gradient_matrix(s: &FidelityTensor, u: &DMatrix<f64>) -> DMatrix<f64> {
    let (d, n) = (s.d(), s.n());
    let flat = DVector::from_fn(d * n, |i, _| u[(i / n, i % n)]);
    let b = s.matrix().as_matrix() * flat;
    DMatrix::from_fn(d, n, |j, k| b[j * n + k])
}

/// Multipliers of the stationarity condition in a feasible state:
/// `lambda = Herm(u b^T)` with `b = S vec(u)`. This is the least-squares
/// solution of the variation equations when `u u^T = I`.
pub fn lagrange_multipliers(u: &PartialIsometry, s: &FidelityTensor) -> LagrangeMultipliers {
    let b = gradient_matrix(s, u.matrix());
    let raw = u.matrix() * b.transpose();
    LagrangeMultipliers::new(SymMatrix::symmetrized(&raw))
}

/// Multipliers minimizing the variation residual projected onto the given
/// probe states only. With a complete orthonormal probe basis this equals
/// `lagrange_multipliers`.
pub fn lagrange_multipliers_subspace(
    u: &PartialIsometry,
    s: &FidelityTensor,
    probes: &[DMatrix<f64>],
) -> Result<LagrangeMultipliers> {
    let d = u.d();
    let params = d * (d + 1) / 2;
    if probes.len() < params {
        return Err(Error::InsufficientProbes {
            got: probes.len(),
            required: params,
        });
    }
    let b = gradient_matrix(s, u.matrix());

    // lambda is parametrized by its upper triangle; the residual of probe v
    // is <v, b> - sum_t A[v][t] l[t] with A[v][(i,j)] built from v u^T.
    let mut design = DMatrix::zeros(probes.len(), params);
    let mut rhs = DVector::zeros(probes.len());
    for (row, v) in probes.iter().enumerate() {
        if v.shape() != u.matrix().shape() {
            return Err(Error::dims(
                "lagrange probe state",
                u.d() * u.n(),
                v.nrows() * v.ncols(),
            ));
        }
        let vut = v * u.matrix().transpose();
        rhs[row] = v.dot(&b);
        let mut t = 0;
        for i in 0..d {
            for j in i..d {
                design[(row, t)] = if i == j {
                    vut[(i, i)]
                } else {
                    vut[(i, j)] + vut[(j, i)]
                };
                t += 1;
            }
        }
    }
    let normal = design.transpose() * &design;
    let rhs_n = design.transpose() * rhs;
    let solution = normal
        .cholesky()
        .ok_or(Error::SingularNormalEquations)?
        .solve(&rhs_n);
    let mut lambda = DMatrix::zeros(d, d);
    let mut t = 0;
    for i in 0..d {
        for j in i..d {
            lambda[(i, j)] = solution[t];
            lambda[(j, i)] = solution[t];
            t += 1;
        }
    }
    Ok(LagrangeMultipliers::new(SymMatrix::from_upper_of(&lambda)))
}

/// Homogeneous constraints pinning first-order feasibility of the next
/// variation around a feasible state: zero Herm off-diagonal row overlaps and
/// equal diagonal row overlaps (the Frobenius constraint fixes their sum).
pub fn build_linear_constraints(u: &PartialIsometry) -> ConstraintSet {
    let (d, n) = (u.d(), u.n());
    let rows = ConstraintSet::expected_rows(d);
    let mut c = DMatrix::zeros(rows, d * n);
    let um = u.matrix();
    let mut row = 0;
    // Off-diagonal pairs (i, j), j < i: coefficient of du_{j0 k} is
    // u_{i k} for j0 = j plus u_{j k} for j0 = i.
    for i in 0..d {
        for j in 0..i {
            for k in 0..n {
                c[(row, j * n + k)] += um[(i, k)];
                c[(row, i * n + k)] += um[(j, k)];
            }
            row += 1;
        }
    }
    // Diagonal differences G_ii - G_{i-1,i-1}.
    for i in 1..d {
        for k in 0..n {
            c[(row, i * n + k)] += um[(i, k)];
            c[(row, (i - 1) * n + k)] -= um[(i - 1, k)];
        }
        row += 1;
    }
    debug_assert_eq!(row, rows);
    ConstraintSet::new(c)
}

/// Apply `q (x) I_n` to a stack of flattened `d x n` matrices.
fn kron_apply(q: &SymMatrix, m: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let d = q.order();
    let cols = m.ncols();
    debug_assert_eq!(m.nrows(), d * n);
    let mut out = DMatrix::zeros(d * n, cols);
    for p in 0..cols {
        for j in 0..d {
            for j2 in 0..d {
                let q_jj2 = q[(j, j2)];
                if q_jj2 == 0.0 {
                    continue;
                }
                for k in 0..n {
                    out[(j * n + k, p)] += q_jj2 * m[(j2 * n + k, p)];
                }
            }
        }
    }
    out
}

/// Reduce the constrained eigenproblem to the elimination basis:
/// returns `(M^T (S - lambda (x) I) M, M^T (Q (x) I) M)`.
pub fn reduce_problem(
    s: &FidelityTensor,
    lambda: &LagrangeMultipliers,
    q: &SymMatrix,
    m: &EliminationBasis,
) -> Result<(SymMatrix, SymMatrix)> {
    let (d, n) = (s.d(), s.n());
    if lambda.d() != d || q.order() != d || m.rows() != d * n {
        return Err(Error::dims("reduce_problem", d * n, m.rows()));
    }
    // q positive definite guarantees the reduced metric is too (the basis
    // columns are independent).
    let eq = sym_eig(q)?;
    let qmax = eq.eigenvalues[0];
    if qmax <= 0.0 || eq.eigenvalues[d - 1] <= RANK_TOLERANCE * qmax {
        return Err(Error::DegenerateMetric {
            index: d - 1,
            eigenvalue: eq.eigenvalues[d - 1],
            max_eigenvalue: qmax,
        });
    }

    if m.is_identity() {
        let s_mat = s.matrix();
        let numerator = SymMatrix::from_fn(d * n, |a, b| {
            let base = s_mat[(a, b)];
            if a % n == b % n {
                base - lambda.matrix()[(a / n, b / n)]
            } else {
                base
            }
        });
        let metric = SymMatrix::from_fn(d * n, |a, b| {
            if a % n == b % n {
                q[(a / n, b / n)]
            } else {
                0.0
            }
        });
        return Ok((numerator, metric));
    }

    let basis = m.as_matrix();
    let mut sm = s.matrix().as_matrix() * basis;
    if !lambda.is_zero() {
        sm -= kron_apply(lambda.matrix(), basis, n);
    }
    let numerator = SymMatrix::symmetrized(&(basis.transpose() * sm));
    let metric = if q.is_identity() {
        SymMatrix::symmetrized(&(basis.transpose() * basis))
    } else {
        SymMatrix::symmetrized(&(basis.transpose() * kron_apply(q, basis, n)))
    };
    Ok((numerator, metric))
}

/// Stationarity residual `max |b - (lambda + mu Q) u|` over all entries.
pub fn residual(
    u: &PartialIsometry,
    lambda: &LagrangeMultipliers,
    mu: f64,
    q: &SymMatrix,
    s: &FidelityTensor,
) -> f64 {
    let b = gradient_matrix(s, u.matrix());
    let lam_eff = lambda.matrix().as_matrix() + q.as_matrix() * mu;
    let r = b - lam_eff * u.matrix();
    r.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

struct Candidate {
    mu: f64,
    penalty: f64,
    fidelity: f64,
    adjusted: PartialIsometry,
}

/// Eigenvalues within this relative distance form one degenerate group.
const DEGENERACY_TOLERANCE: f64 = 1e-9;

/// Indices whose eigenvalue coincides with the one at `rank` within noise.
fn degenerate_group(eig: &EigenDecomposition, rank: usize) -> Vec<usize> {
    let mu_r = eig.eigenvalues[rank];
    let scale = eig.eigenvalues.amax().max(1.0);
    (0..eig.len())
        .filter(|&i| (eig.eigenvalues[i] - mu_r).abs() <= DEGENERACY_TOLERANCE * scale)
        .collect()
}

/// Eigenvector of the requested rank; inside a (numerically) degenerate
/// eigenvalue group any basis vector is equally valid, so the previous state
/// is projected onto the group's span instead. Without this the selected
/// state wanders through the degenerate subspace and the iteration cannot
/// settle (flat objectives hit this immediately).
fn select_eigenvector(
    eig: &EigenDecomposition,
    rank: usize,
    group: &[usize],
    elim: &EliminationBasis,
    q: &SymMatrix,
    n: usize,
    previous: &PartialIsometry,
) -> DVector<f64> {
    let nv = eig.len();
    if group.len() > 1 {
        let prev_flat = previous.to_flat();
        if prev_flat.norm_squared() > 0.0 {
            // The eigenvectors are B-orthonormal with B = M^T (Q (x) I) M, so
            // the coefficient of the previous state along v_i is
            // (M v_i)^T (Q (x) I) vec(u_prev); the previous state lies in the
            // constraint subspace exactly.
            let weighted = if q.is_identity() {
                prev_flat.clone()
            } else {
                kron_apply(
                    q,
                    &DMatrix::from_column_slice(prev_flat.len(), 1, prev_flat.as_slice()),
                    n,
                )
                .column(0)
                .clone_owned()
            };
            let mut coeffs = Vec::with_capacity(group.len());
            for &i in group {
                let full = elim.as_matrix() * eig.eigenvectors.column(i);
                coeffs.push(full.dot(&weighted));
            }
            let norm: f64 = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
            if norm > 1e-8 * prev_flat.norm() {
                let mut projected = DVector::zeros(nv);
                for (&i, c) in group.iter().zip(&coeffs) {
                    projected += eig.eigenvectors.column(i) * (*c / norm);
                }
                return projected;
            }
        }
    }
    eig.eigenvectors.column(rank).clone_owned()
}

/// Deterministic mix over a window of eigenstates; the retry path when the
/// selected eigenstate reshapes to a rank-deficient matrix. Inside a
/// degenerate group the mix is still an eigenstate; for exactly
/// product-structured tensors (where every eigenstate reshapes to rank one)
/// it pulls in neighboring states with full weight so the adjusted start can
/// cover all output rows.
fn mixed_recovery_vector(
    eig: &EigenDecomposition,
    indices: &[usize],
    attempt: u64,
) -> DVector<f64> {
    let mut rng = crate::rng::Xorshift64::new(0x5EED_0000 + attempt);
    let coeffs: Vec<f64> = indices.iter().map(|_| rng.gaussian()).collect();
    let norm: f64 = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
    let mut mixed = DVector::zeros(eig.len());
    for (&i, c) in indices.iter().zip(&coeffs) {
        mixed += eig.eigenvectors.column(i) * (*c / norm);
    }
    mixed
}

fn evaluate_candidate(
    s: &FidelityTensor,
    elim: &EliminationBasis,
    eigenvalue: f64,
    vector: DVector<f64>,
    d: usize,
    n: usize,
) -> Result<Candidate> {
    // Sign convention: largest-magnitude component positive.
    let mut imax = 0;
    let mut vmax = 0.0f64;
    for (i, x) in vector.iter().enumerate() {
        if x.abs() > vmax {
            vmax = x.abs();
            imax = i;
        }
    }
    let v = if vector[imax] < 0.0 { -vector } else { vector };
    let flat = elim.as_matrix() * v;
    let norm2 = flat.norm_squared();
    if !(norm2 > 0.0) {
        return Err(Error::ZeroNorm {
            context: "selected eigenstate".into(),
        });
    }
    // The partial (Frobenius) constraint fixes the scale: sum u^2 = d.
    let scale = (d as f64 / norm2).sqrt();
    let u_sel = DMatrix::from_fn(d, n, |j, k| flat[j * n + k] * scale);
    let penalty = unitarity_penalty(&u_sel)
        .map_err(|_| Error::RankCollapse { iteration: None })?;
    let adjusted = adjust_to_isometry(&u_sel)?;
    let fidelity = tensor::fidelity(&adjusted, s);
    Ok(Candidate {
        mu: eigenvalue,
        penalty,
        fidelity,
        adjusted,
    })
}

/// One step of the iteration: solve the reduced eigenproblem built from the
/// state's multipliers and constraints, select an eigenstate, adjust it, and
/// recompute multipliers and constraints from the adjusted state.
pub fn iterate(
    state: &IterationState,
    s: &FidelityTensor,
    config: &SolverConfig,
) -> Result<IterationState> {
    let (d, n) = (s.d(), s.n());
    let q = match config.q_choice {
        QChoice::Identity => SymMatrix::identity(d),
        QChoice::Lambda => {
            if state.lambda.is_zero() {
                // First iteration starts from zero multipliers.
                SymMatrix::identity(d)
            } else {
                state.lambda.matrix().clone()
            }
        }
    };
    let elim = eliminate_constraints(state.constraints.matrix())?;
    let nv = elim.width();
    let (s_red, q_red) = reduce_problem(s, &state.lambda, &q, &elim)?;
    let eig = gen_eig(&s_red, &q_red)?;

    let chosen = if config.scan_candidates {
        let positive = eig.eigenvalues.iter().filter(|&&m| m > 0.0).count();
        let tried = (positive + SCAN_NEGATIVE_STATES).min(nv);
        let mut best: Option<Candidate> = None;
        for idx in 0..tried {
            if let Ok(c) = evaluate_candidate(
                s,
                &elim,
                eig.eigenvalues[idx],
                eig.eigenvectors.column(idx).clone_owned(),
                d,
                n,
            ) {
                if best.as_ref().map_or(true, |b| c.fidelity > b.fidelity) {
                    best = Some(c);
                }
            }
        }
        best.ok_or(Error::RankCollapse { iteration: None })?
    } else {
        let rank = config.eigenstate_rank;
        if rank >= nv {
            return Err(Error::RankUnavailable {
                rank,
                available: nv,
            });
        }
        let group = degenerate_group(&eig, rank);
        let vector = select_eigenvector(&eig, rank, &group, &elim, &q, n, &state.u);
        match evaluate_candidate(s, &elim, eig.eigenvalues[rank], vector, d, n) {
            Ok(c) => c,
            Err(Error::RankCollapse { .. }) => {
                // Retry with mixes over a growing window of states, starting
                // from the degenerate group (where a mix is still an exact
                // eigenstate) and widening for product-structured spectra.
                let mut found = None;
                'retry: for widen in 0..4 {
                    let window = (group.len().max(2) << widen).min(nv - rank.min(nv));
                    let mut indices: Vec<usize> = group.clone();
                    for i in rank..(rank + window).min(nv) {
                        if !indices.contains(&i) {
                            indices.push(i);
                        }
                    }
                    for attempt in 0..3 {
                        let mixed =
                            mixed_recovery_vector(&eig, &indices, (widen * 3 + attempt) as u64);
                        if let Ok(c) =
                            evaluate_candidate(s, &elim, eig.eigenvalues[rank], mixed, d, n)
                        {
                            found = Some(c);
                            break 'retry;
                        }
                    }
                }
                found.ok_or(Error::RankCollapse { iteration: None })?
            }
            Err(e) => return Err(e),
        }
    };

    let lambda = lagrange_multipliers(&chosen.adjusted, s);
    let constraints = build_linear_constraints(&chosen.adjusted);
    Ok(IterationState {
        u: chosen.adjusted,
        lambda,
        constraints,
        mu_selected: chosen.mu,
        fidelity: chosen.fidelity,
        penalty: chosen.penalty,
        subspace_dim: nv,
    })
}

struct RunResult {
    outcome: RunOutcome,
    history: Vec<IterationRecord>,
    final_state: Option<IterationState>,
}

fn run_rank(
    s: &FidelityTensor,
    config: &SolverConfig,
    rank: usize,
    with_constraints: bool,
) -> RunResult {
    let (d, n) = (s.d(), s.n());
    let mut cfg = config.clone();
    cfg.eigenstate_rank = rank;

    let mut state = IterationState::initial(d, n);
    let mut prev_lambda: Option<LagrangeMultipliers> = None;
    let mut window: Vec<(f64, f64)> = Vec::new();
    let mut history = Vec::new();

    for index in 0..config.max_iterations {
        let mut next = match iterate(&state, s, &cfg) {
            Ok(st) => st,
            Err(Error::RankUnavailable { .. }) => {
                return RunResult {
                    outcome: RunOutcome::RankUnavailable,
                    history,
                    final_state: None,
                }
            }
            Err(Error::RankCollapse { .. }) => {
                return RunResult {
                    outcome: RunOutcome::Failed(format!("rank collapse at iteration {index}")),
                    history,
                    final_state: Some(state),
                }
            }
            Err(e) => {
                return RunResult {
                    outcome: RunOutcome::Failed(format!("iteration {index}: {e}")),
                    history,
                    final_state: Some(state),
                }
            }
        };
        history.push(IterationRecord {
            index,
            mu: next.mu_selected,
            fidelity: next.fidelity,
            penalty: next.penalty,
        });

        let f_scale = next.fidelity.abs().max(1.0);
        let mu_ok = next.mu_selected.abs() <= config.mu_tolerance * f_scale;
        let penalty_ok = (next.penalty - d as f64).abs() <= config.unitarity_tolerance;
        let lambda_ok = prev_lambda.as_ref().is_some_and(|prev| {
            next.lambda.max_abs_diff(prev)
                <= LAMBDA_CHANGE_TOLERANCE * next.lambda.matrix().max_abs().max(1.0)
        });
        if mu_ok && penalty_ok && lambda_ok {
            return RunResult {
                outcome: RunOutcome::Converged,
                history,
                final_state: Some(next),
            };
        }

        let repeated = window.iter().any(|&(f, p)| {
            (next.fidelity - f).abs() <= CYCLE_TOLERANCE * f_scale
                && (next.penalty - p).abs() <= CYCLE_TOLERANCE * p.abs().max(1.0)
        });
        if repeated && next.mu_selected.abs() > CYCLE_MU_FLOOR * f_scale {
            return RunResult {
                outcome: RunOutcome::Cycling,
                history,
                final_state: Some(next),
            };
        }
        window.push((next.fidelity, next.penalty));
        if window.len() > CYCLE_WINDOW {
            window.remove(0);
        }

        prev_lambda = Some(next.lambda.clone());
        if !with_constraints {
            next.constraints = ConstraintSet::empty(d * n);
        }
        state = next;
    }

    RunResult {
        outcome: RunOutcome::MaxIterations,
        history,
        final_state: Some(state),
    }
}

fn collect_report(s: &FidelityTensor, config: &SolverConfig, with_constraints: bool) -> Result<SolverReport> {
    config.validate()?;
    let d = s.d();
    let mut results = Vec::with_capacity(config.num_runs);
    let mut runs = Vec::with_capacity(config.num_runs);
    for offset in 0..config.num_runs {
        let rank = config.eigenstate_rank + offset;
        let result = run_rank(s, config, rank, with_constraints);
        runs.push(RunHistory {
            rank,
            outcome: result.outcome.clone(),
            iterations: result.history.clone(),
            fidelity: result
                .final_state
                .as_ref()
                .map_or(f64::NAN, |st| st.fidelity),
        });
        results.push(result);
    }

    // Best converged run by fidelity; otherwise the run closest to
    // feasibility, reported as not converged.
    let best_converged = results
        .iter()
        .enumerate()
        .filter(|(_, r)| r.outcome == RunOutcome::Converged)
        .max_by(|(_, a), (_, b)| {
            let fa = a.final_state.as_ref().unwrap().fidelity;
            let fb = b.final_state.as_ref().unwrap().fidelity;
            fa.partial_cmp(&fb).unwrap()
        })
        .map(|(i, _)| i);

    let infeasibility = |st: &IterationState| {
        let f_scale = st.fidelity.abs().max(1.0);
        let score = st.mu_selected.abs() / f_scale + (st.penalty - d as f64).abs();
        if score.is_finite() {
            score
        } else {
            f64::INFINITY
        }
    };
    let chosen = best_converged.or_else(|| {
        results
            .iter()
            .enumerate()
            .filter(|(_, r)| r.final_state.is_some())
            .min_by(|(_, a), (_, b)| {
                let ia = infeasibility(a.final_state.as_ref().unwrap());
                let ib = infeasibility(b.final_state.as_ref().unwrap());
                ia.total_cmp(&ib)
            })
            .map(|(i, _)| i)
    });

    let Some(idx) = chosen else {
        let detail = runs
            .iter()
            .map(|r| format!("rank {}: {:?}", r.rank, r.outcome))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::NoRunCompleted { detail });
    };
    let best = &results[idx];
    let state = best.final_state.as_ref().unwrap();
    Ok(SolverReport {
        solution: state.u.clone(),
        fidelity: state.fidelity,
        converged: best.outcome == RunOutcome::Converged,
        iterations: best.history.clone(),
        lambda_final: state.lambda.clone(),
        seed: 0,
        runs,
    })
}

/// Run the full multi-restart solve: restart `r` always selects the
/// eigenstate of rank `eigenstate_rank + r`, and the best converged restart
/// by fidelity wins. A report with `converged == false` is returned when no
/// restart meets tolerance; an infeasible state is never reported as
/// converged.
pub fn solve(s: &FidelityTensor, config: &SolverConfig) -> Result<SolverReport> {
    collect_report(s, config, true)
}

/// The comparison baseline: the identical loop with the linear constraints
/// switched off (a full-dimension eigenproblem every iteration). Kept to
/// demonstrate that plain multiplier iteration fails to converge.
pub fn solve_vanilla(s: &FidelityTensor, config: &SolverConfig) -> Result<SolverReport> {
    collect_report(s, config, false)
}
