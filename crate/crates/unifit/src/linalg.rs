//! Dense real symmetric linear algebra the solver is built from:
//! eigendecomposition, generalized eigendecomposition, PSD inverse square
//! root, and null-space elimination of homogeneous linear constraints.
//!
//! Eigendecompositions are delegated to `nalgebra`'s symmetric solver and then
//! post-processed into a deterministic form: eigenvalues sorted descending
//! (stable sort) and each eigenvector's sign fixed so that its first
//! component above noise level is positive. Determinism matters because the
//! iterative solver selects eigenstates by rank.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative threshold below which an eigenvalue or pivot counts as zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Dense real symmetric matrix; `m[(i, j)] == m[(j, i)]` holds exactly, by
/// construction (the lower triangle is always a bitwise mirror of the upper).
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    m: DMatrix<f64>,
}

impl SymMatrix {
    /// Build from a generator called on the upper triangle (`i <= j`).
    pub fn from_fn(order: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DMatrix::zeros(order, order);
        for i in 0..order {
            for j in i..order {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        SymMatrix { m }
    }

    /// Take the upper triangle of `m` and mirror it.
    pub fn from_upper_of(m: &DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "symmetric matrix must be square");
        SymMatrix::from_fn(m.nrows(), |i, j| m[(i, j)])
    }

    /// Symmetrize `m` as `(m + m^T)/2`, mirrored exactly.
    pub fn symmetrized(m: &DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "symmetric matrix must be square");
        SymMatrix::from_fn(m.nrows(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
    }

    pub fn identity(order: usize) -> Self {
        SymMatrix {
            m: DMatrix::identity(order, order),
        }
    }

    pub fn zeros(order: usize) -> Self {
        SymMatrix {
            m: DMatrix::zeros(order, order),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        SymMatrix {
            m: DMatrix::from_diagonal(&DVector::from_row_slice(diag)),
        }
    }

    pub fn order(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().fold(0.0f64, |a, x| a.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().all(|x| x.is_finite())
    }

    /// Exact comparison against the identity (used for fast paths).
    pub fn is_identity(&self) -> bool {
        let n = self.order();
        (0..n).all(|i| (0..n).all(|j| self.m[(i, j)] == if i == j { 1.0 } else { 0.0 }))
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }
}

impl std::ops::Index<(usize, usize)> for SymMatrix {
    type Output = f64;
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.m[idx]
    }
}

/// Eigenpairs of a symmetric (or generalized symmetric) problem, eigenvalues
/// sorted descending, eigenvectors stored as matching columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl EigenDecomposition {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.len() == 0
    }
}

/// Flip each eigenvector so its first component above noise is positive.
fn fix_column_signs(vectors: &mut DMatrix<f64>) {
    let (rows, cols) = vectors.shape();
    for c in 0..cols {
        let mut max_abs = 0.0f64;
        for r in 0..rows {
            max_abs = max_abs.max(vectors[(r, c)].abs());
        }
        let threshold = RANK_TOLERANCE * max_abs;
        for r in 0..rows {
            let v = vectors[(r, c)];
            if v.abs() > threshold {
                if v < 0.0 {
                    for k in 0..rows {
                        vectors[(k, c)] = -vectors[(k, c)];
                    }
                }
                break;
            }
        }
    }
}

/// Full eigendecomposition of a symmetric matrix.
///
/// Eigenvalues come back sorted descending; ties keep the backend order
/// (stable sort) and every eigenvector sign is fixed deterministically.
pub fn sym_eig(a: &SymMatrix) -> Result<EigenDecomposition> {
    if !a.is_finite() {
        return Err(Error::non_finite("sym_eig input"));
    }
    let n = a.order();
    if n == 0 {
        return Ok(EigenDecomposition {
            eigenvalues: DVector::zeros(0),
            eigenvectors: DMatrix::zeros(0, 0),
        });
    }
    let se = a.as_matrix().clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[j].partial_cmp(&se.eigenvalues[i]).unwrap());
    let eigenvalues = DVector::from_fn(n, |i, _| se.eigenvalues[order[i]]);
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &se.eigenvectors.column(src));
    }
    fix_column_signs(&mut eigenvectors);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Check positive definiteness of an eigenvalue spectrum sorted descending.
fn check_positive_definite(eig: &EigenDecomposition) -> std::result::Result<(), (usize, f64, f64)> {
    let n = eig.len();
    if n == 0 {
        return Ok(());
    }
    let max = eig.eigenvalues[0];
    let min = eig.eigenvalues[n - 1];
    if max <= 0.0 || min <= RANK_TOLERANCE * max {
        return Err((n - 1, min, max));
    }
    Ok(())
}

fn apply_spectral(eig: &EigenDecomposition, f: impl Fn(f64) -> f64) -> SymMatrix {
    let v = &eig.eigenvectors;
    let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * f(eig.eigenvalues[j]));
    SymMatrix::from_upper_of(&(&scaled * v.transpose()))
}

/// `G^{-1/2}` of a symmetric positive definite matrix, all square-root branch
/// signs taken positive. Near-null directions are an error: they signal
/// rank-deficient data (or a rank-collapsed state) in the caller.
pub fn inv_sqrt_psd(g: &SymMatrix) -> Result<SymMatrix> {
    Ok(sqrt_and_inv_sqrt_psd(g)?.1)
}

/// `(G^{1/2}, G^{-1/2})` from a single eigendecomposition.
pub fn sqrt_and_inv_sqrt_psd(g: &SymMatrix) -> Result<(SymMatrix, SymMatrix)> {
    let eig = sym_eig(g)?;
    if check_positive_definite(&eig).is_err() {
        let max = if eig.len() == 0 { 0.0 } else { eig.eigenvalues[0] };
        let near_null = (0..eig.len())
            .filter(|&i| eig.eigenvalues[i] <= RANK_TOLERANCE * max.max(0.0))
            .map(|i| (i, eig.eigenvalues[i]))
            .collect();
        return Err(Error::DegenerateGram { near_null });
    }
    let sqrt = apply_spectral(&eig, f64::sqrt);
    let inv_sqrt = apply_spectral(&eig, |x| 1.0 / x.sqrt());
    Ok((sqrt, inv_sqrt))
}

/// Generalized symmetric eigenproblem `A V = mu B V` with `B` positive
/// definite, solved by reducing with `B^{-1/2}`. Eigenvectors come back
/// B-orthonormal (`V^T B V = I`), eigenvalues descending.
pub fn gen_eig(a: &SymMatrix, b: &SymMatrix) -> Result<EigenDecomposition> {
    if a.order() != b.order() {
        return Err(Error::dims("gen_eig", a.order(), b.order()));
    }
    if b.is_identity() {
        return sym_eig(a);
    }
    if !b.is_finite() {
        return Err(Error::non_finite("gen_eig metric"));
    }
    let eig_b = sym_eig(b)?;
    if let Err((index, eigenvalue, max_eigenvalue)) = check_positive_definite(&eig_b) {
        return Err(Error::DegenerateMetric {
            index,
            eigenvalue,
            max_eigenvalue,
        });
    }
    let l = apply_spectral(&eig_b, |x| 1.0 / x.sqrt());
    let reduced = SymMatrix::symmetrized(&(l.as_matrix() * a.as_matrix() * l.as_matrix()));
    let eig_c = sym_eig(&reduced)?;
    let mut eigenvectors = l.as_matrix() * &eig_c.eigenvectors;
    fix_column_signs(&mut eigenvectors);
    Ok(EigenDecomposition {
        eigenvalues: eig_c.eigenvalues,
        eigenvectors,
    })
}

/// Null-space basis `M` of a homogeneous constraint matrix `C`, so that any
/// admissible vector is `M v`. Width is `ncols(C) - rank(C)`.
#[derive(Debug, Clone)]
pub struct EliminationBasis {
    basis: DMatrix<f64>,
    rank_removed: usize,
}

impl EliminationBasis {
    /// Full-space rows (the ambient dimension).
    pub fn rows(&self) -> usize {
        self.basis.nrows()
    }

    /// Reduced-space width `N_V`.
    pub fn width(&self) -> usize {
        self.basis.ncols()
    }

    pub fn rank_removed(&self) -> usize {
        self.rank_removed
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// True when no constraint was active and the basis is the identity.
    pub fn is_identity(&self) -> bool {
        self.rank_removed == 0 && self.basis.nrows() == self.basis.ncols()
    }
}

/// Eliminate homogeneous linear constraints `C x = 0` by Gaussian elimination
/// with full (row and column) pivoting. A pivot is declared zero when
/// `|pivot| < 1e-12 * max|C|`. The returned basis expresses the pivot
/// variables through the free ones; with no active constraints it is the
/// identity.
pub fn eliminate_constraints(c: &DMatrix<f64>) -> Result<EliminationBasis> {
    if c.iter().any(|x| !x.is_finite()) {
        return Err(Error::non_finite("eliminate_constraints input"));
    }
    let (nr, nc) = c.shape();
    let max_abs = c.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let tol = RANK_TOLERANCE * max_abs;

    let mut w = c.clone();
    let mut colperm: Vec<usize> = (0..nc).collect();
    let mut rank = 0;

    for step in 0..nr.min(nc) {
        // Full pivot search over the remaining block.
        let (mut best, mut bi, mut bj) = (0.0f64, step, step);
        for i in step..nr {
            for j in step..nc {
                let v = w[(i, j)].abs();
                if v > best {
                    (best, bi, bj) = (v, i, j);
                }
            }
        }
        if best <= tol {
            break;
        }
        w.swap_rows(step, bi);
        w.swap_columns(step, bj);
        colperm.swap(step, bj);
        for i in step + 1..nr {
            let f = w[(i, step)] / w[(step, step)];
            if f != 0.0 {
                for j in step..nc {
                    let delta = f * w[(step, j)];
                    w[(i, j)] -= delta;
                }
            }
            w[(i, step)] = 0.0;
        }
        rank += 1;
    }

    let nv = nc - rank;
    let mut basis = DMatrix::zeros(nc, nv);
    let mut z = vec![0.0f64; nc];
    for (col, free) in (rank..nc).enumerate() {
        z.iter_mut().for_each(|v| *v = 0.0);
        z[free] = 1.0;
        for i in (0..rank).rev() {
            let mut s = 0.0;
            for k in i + 1..nc {
                s += w[(i, k)] * z[k];
            }
            z[i] = -s / w[(i, i)];
        }
        for k in 0..nc {
            basis[(colperm[k], col)] = z[k];
        }
    }

    Ok(EliminationBasis {
        basis,
        rank_removed: rank,
    })
}
