//! Gram matrices, sample regularization, fidelity tensor construction from
//! each data source, and probability evaluation.
//!
//! Per-record sums are accumulated sequentially left to right so that every
//! built tensor is bit-reproducible and exactly symmetric; flipping the sign
//! of any record's vectors leaves the result bit-identical.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, SymMatrix};
use crate::model::{FidelityTensor, ObservationRecord, ObservationSample, PartialIsometry};

/// Sample Gram matrices of both spaces together with the regularizing
/// transforms that map them to the identity, `r G r^T = I`.
#[derive(Debug, Clone)]
pub struct GramPair {
    pub gx: SymMatrix,
    pub gf: SymMatrix,
    pub rx: DMatrix<f64>,
    pub rf: DMatrix<f64>,
    rx_inv: DMatrix<f64>,
    rf_inv: DMatrix<f64>,
    gx_inv: SymMatrix,
    gf_inv: SymMatrix,
}

impl GramPair {
    fn build(gx: SymMatrix, gf: SymMatrix, rx: DMatrix<f64>, rf: DMatrix<f64>) -> Result<Self> {
        let rx_inv = rx.clone().try_inverse().ok_or(Error::DegenerateGram {
            near_null: vec![],
        })?;
        let rf_inv = rf.clone().try_inverse().ok_or(Error::DegenerateGram {
            near_null: vec![],
        })?;
        // G^{-1} = R^T R for any regularizer with R G R^T = I.
        let gx_inv = SymMatrix::symmetrized(&(rx.transpose() * &rx));
        let gf_inv = SymMatrix::symmetrized(&(rf.transpose() * &rf));
        Ok(GramPair {
            gx,
            gf,
            rx,
            rf,
            rx_inv,
            rf_inv,
            gx_inv,
            gf_inv,
        })
    }

    /// Unit Gram matrices in both spaces (the raw/unit-channel geometry).
    pub fn identity(n: usize, d: usize) -> Self {
        GramPair {
            gx: SymMatrix::identity(n),
            gf: SymMatrix::identity(d),
            rx: DMatrix::identity(n, n),
            rf: DMatrix::identity(d, d),
            rx_inv: DMatrix::identity(n, n),
            rf_inv: DMatrix::identity(d, d),
            gx_inv: SymMatrix::identity(n),
            gf_inv: SymMatrix::identity(d),
        }
    }

    pub fn gx_inv(&self) -> &SymMatrix {
        &self.gx_inv
    }

    pub fn gf_inv(&self) -> &SymMatrix {
        &self.gf_inv
    }

    /// Map a solution of the regularized problem back to the original basis,
    /// `u = R_f^{-1} u~ R_x`.
    pub fn unregularize(&self, u: &PartialIsometry) -> PartialIsometry {
        PartialIsometry::new(&self.rf_inv * u.matrix() * &self.rx)
    }

    /// Map an original-basis operator into the regularized one,
    /// `u~ = R_f u R_x^{-1}`.
    pub fn regularize_operator(&self, u: &PartialIsometry) -> PartialIsometry {
        PartialIsometry::new(&self.rf * u.matrix() * &self.rx_inv)
    }
}

/// A normalized reproducing kernel peaked at one point; coefficients are in
/// whatever basis the supplied Gram inverse lives in.
#[derive(Debug, Clone)]
pub struct LocalizedState {
    pub coefficients: DVector<f64>,
}

/// How to turn a Gram matrix into a regularizing transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularizer {
    /// Symmetric inverse square root `R = G^{-1/2}` (the default; basis
    /// transforms are then reproducible and symmetric).
    SymmetricInvSqrt,
    /// Triangular Gram-Schmidt factor from the Cholesky decomposition.
    GramSchmidt,
}

/// Weighted sample Gram matrix `G_{kk'} = sum_l w_l x_k x_k'`.
pub fn gram_from_sample(weighted: &[(f64, DVector<f64>)]) -> Result<SymMatrix> {
    let first = weighted.first().ok_or_else(|| Error::EmptyInput {
        context: "gram_from_sample".into(),
    })?;
    let dim = first.1.len();
    for (i, (_, v)) in weighted.iter().enumerate() {
        if v.len() != dim {
            return Err(Error::dims(format!("gram_from_sample record {i}"), dim, v.len()));
        }
    }
    let mut upper = DMatrix::zeros(dim, dim);
    for (w, v) in weighted {
        for i in 0..dim {
            let wvi = *w * v[i];
            for j in i..dim {
                upper[(i, j)] += wvi * v[j];
            }
        }
    }
    Ok(SymMatrix::from_fn(dim, |i, j| upper[(i, j)]))
}

fn sample_grams(sample: &ObservationSample) -> Result<(SymMatrix, SymMatrix)> {
    let alphas: Vec<(f64, DVector<f64>)> = sample
        .records()
        .iter()
        .map(|r| (r.weight, r.alpha.clone()))
        .collect();
    let betas: Vec<(f64, DVector<f64>)> = sample
        .records()
        .iter()
        .map(|r| (r.weight, r.beta.clone()))
        .collect();
    Ok((gram_from_sample(&alphas)?, gram_from_sample(&betas)?))
}

fn regularizing_transform(g: &SymMatrix, method: Regularizer) -> Result<DMatrix<f64>> {
    match method {
        Regularizer::SymmetricInvSqrt => Ok(linalg::inv_sqrt_psd(g)?.into_matrix()),
        Regularizer::GramSchmidt => {
            let chol = g
                .as_matrix()
                .clone()
                .cholesky()
                .ok_or(Error::DegenerateGram { near_null: vec![] })?;
            // G = L L^T, so R = L^{-1} satisfies R G R^T = I.
            let l = chol.l();
            let r = l
                .try_inverse()
                .ok_or(Error::DegenerateGram { near_null: vec![] })?;
            Ok(r)
        }
    }
}

/// Regularize a sample with the default symmetric inverse square root.
pub fn regularize(sample: &ObservationSample) -> Result<(ObservationSample, GramPair)> {
    regularize_with(sample, Regularizer::SymmetricInvSqrt)
}

/// Transform a sample so both sample-average Gram matrices become the
/// identity; returns the transformed sample and the transforms used.
pub fn regularize_with(
    sample: &ObservationSample,
    method: Regularizer,
) -> Result<(ObservationSample, GramPair)> {
    let (gx, gf) = sample_grams(sample)?;
    let rx = regularizing_transform(&gx, method)?;
    let rf = regularizing_transform(&gf, method)?;
    let grams = GramPair::build(gx, gf, rx, rf)?;
    let records = sample
        .records()
        .iter()
        .map(|r| ObservationRecord {
            weight: r.weight,
            alpha: &grams.rx * &r.alpha,
            beta: &grams.rf * &r.beta,
        })
        .collect();
    let mut out = ObservationSample::new(sample.n(), sample.d(), records)?;
    out.mark_orthogonalized();
    Ok((out, grams))
}

/// Accumulate `S += w v v^T` over flattened record vectors; only the upper
/// triangle is computed and then mirrored, so the result is exactly
/// symmetric and invariant under per-record sign flips.
fn accumulate_rank_one(dim: usize, terms: impl Iterator<Item = (f64, DVector<f64>)>) -> SymMatrix {
    let mut upper = DMatrix::zeros(dim, dim);
    for (w, v) in terms {
        debug_assert_eq!(v.len(), dim);
        for i in 0..dim {
            let wvi = w * v[i];
            if wvi == 0.0 {
                continue;
            }
            for j in i..dim {
                upper[(i, j)] += wvi * v[j];
            }
        }
    }
    SymMatrix::from_fn(dim, |i, j| upper[(i, j)])
}

fn flat_record(r: &ObservationRecord) -> DVector<f64> {
    let (d, n) = (r.beta.len(), r.alpha.len());
    DVector::from_fn(d * n, |i, _| r.beta[i / n] * r.alpha[i % n])
}

/// Fidelity tensor from coefficient pairs:
/// `S_{jk;j'k'} = sum_l w_l b_j a_k b_j' a_k'`.
pub fn build_tensor_pairs(sample: &ObservationSample) -> FidelityTensor {
    let (d, n) = (sample.d(), sample.n());
    let s = accumulate_rank_one(
        d * n,
        sample.records().iter().map(|r| (r.weight, flat_record(r))),
    );
    FidelityTensor::new(d, n, s)
}

/// Fidelity tensor of a time series: consecutive states become observation
/// pairs with `d = n`.
pub fn build_tensor_timeseries(
    states: &[DVector<f64>],
    weights: &[f64],
) -> Result<FidelityTensor> {
    if states.len() < 2 {
        return Err(Error::TooFewStates { got: states.len() });
    }
    let pairs = states.len() - 1;
    if weights.len() != pairs {
        return Err(Error::dims("timeseries weights", pairs, weights.len()));
    }
    let n = states[0].len();
    let records: Vec<ObservationRecord> = (0..pairs)
        .map(|l| ObservationRecord {
            weight: weights[l],
            alpha: states[l].clone(),
            beta: states[l + 1].clone(),
        })
        .collect();
    let sample = ObservationSample::new(n, n, records)?;
    Ok(build_tensor_pairs(&sample))
}

/// Christoffel function `K(y) = 1 / (y^T G^{-1} y)`.
pub fn christoffel(point: &DVector<f64>, gram_inverse: &SymMatrix) -> Result<f64> {
    if point.len() != gram_inverse.order() {
        return Err(Error::dims("christoffel", gram_inverse.order(), point.len()));
    }
    let q = (point.transpose() * gram_inverse.as_matrix() * point)[(0, 0)];
    if !(q > 0.0) {
        return Err(Error::NonPositiveQuadraticForm { value: q });
    }
    Ok(1.0 / q)
}

/// Normalized reproducing kernel at `point`: coefficients
/// `sqrt(K(y)) G^{-1} y`, unit self-overlap under the Gram metric.
pub fn localized_state(point: &DVector<f64>, gram_inverse: &SymMatrix) -> Result<LocalizedState> {
    let k = christoffel(point, gram_inverse)?;
    Ok(LocalizedState {
        coefficients: gram_inverse.as_matrix() * point * k.sqrt(),
    })
}

/// Localized-state tensor together with the Gram pair it was built in.
///
/// Raw observations are regularized, every record is then normalized by its
/// Christoffel denominators (which are basis invariant), and the pair
/// construction is applied. This is the localized-state mapping evaluated in
/// the orthogonalized bases.
pub(crate) fn localized_tensor_with_grams(
    sample: &ObservationSample,
) -> Result<(FidelityTensor, GramPair)> {
    let (orth, grams) = regularize(sample)?;
    let mut records = Vec::with_capacity(orth.len());
    for (index, r) in orth.records().iter().enumerate() {
        let an = r.alpha.norm();
        let bn = r.beta.norm();
        if an <= 0.0 || bn <= 0.0 {
            return Err(Error::ZeroNorm {
                context: format!("localized tensor record {index}"),
            });
        }
        records.push(ObservationRecord {
            weight: r.weight,
            alpha: &r.alpha / an,
            beta: &r.beta / bn,
        });
    }
    let mut normalized = ObservationSample::new(orth.n(), orth.d(), records)?;
    normalized.mark_orthogonalized();
    Ok((build_tensor_pairs(&normalized), grams))
}

/// Fidelity tensor of a classical point mapping: each raw observation is
/// lifted to a pair of localized states before the pair construction.
pub fn build_tensor_localized(sample: &ObservationSample) -> Result<FidelityTensor> {
    Ok(localized_tensor_with_grams(sample)?.0)
}

/// Cost-function tensor `S_{jk;j'k'} = O_{jj'} rho_{kk'}` of a quadratic
/// operator cost `Tr O u rho u^T`.
pub fn build_tensor_vqa(o: &SymMatrix, rho0: &SymMatrix) -> FidelityTensor {
    let (d, n) = (o.order(), rho0.order());
    let s = SymMatrix::from_fn(d * n, |a, b| {
        let (j, k) = (a / n, a % n);
        let (j2, k2) = (b / n, b % n);
        o[(j, j2)] * rho0[(k, k2)]
    });
    FidelityTensor::new(d, n, s)
}

/// Quadratic form of the tensor over a flattened operator.
pub(crate) fn quadratic_form(s: &FidelityTensor, flat: &DVector<f64>) -> f64 {
    (flat.transpose() * s.matrix().as_matrix() * flat)[(0, 0)]
}

/// Fidelity `F = sum u S u`; nonnegative for PSD tensors.
pub fn fidelity(u: &PartialIsometry, s: &FidelityTensor) -> f64 {
    assert_eq!(u.d(), s.d(), "fidelity d mismatch");
    assert_eq!(u.n(), s.n(), "fidelity n mismatch");
    quadratic_form(s, &u.to_flat())
}

/// Probability of observing outcome `f` after transporting the state
/// localized at `x` through the channel `u` (all quantities in the original,
/// unregularized basis).
pub fn evaluate_probability(
    u: &PartialIsometry,
    grams: &GramPair,
    x: &DVector<f64>,
    f: &DVector<f64>,
) -> Result<f64> {
    if x.len() != u.n() {
        return Err(Error::dims("evaluate_probability x", u.n(), x.len()));
    }
    if f.len() != u.d() {
        return Err(Error::dims("evaluate_probability f", u.d(), f.len()));
    }
    let den_f = (f.transpose() * grams.gf_inv().as_matrix() * f)[(0, 0)];
    let den_x = (x.transpose() * grams.gx_inv().as_matrix() * x)[(0, 0)];
    if !(den_f > 0.0) {
        return Err(Error::ZeroNorm {
            context: "evaluate_probability outcome".into(),
        });
    }
    if !(den_x > 0.0) {
        return Err(Error::ZeroNorm {
            context: "evaluate_probability input".into(),
        });
    }
    let amp = (f.transpose() * grams.gf_inv().as_matrix() * u.matrix() * x)[(0, 0)];
    Ok(amp * amp / (den_f * den_x))
}

/// The outcome maximizing the channel probability for input `x`, together
/// with that maximal probability (`<= 1` for feasible channels).
pub fn max_probability_outcome(
    u: &PartialIsometry,
    grams: &GramPair,
    x: &DVector<f64>,
) -> Result<(DVector<f64>, f64)> {
    if x.len() != u.n() {
        return Err(Error::dims("max_probability_outcome x", u.n(), x.len()));
    }
    let den_x = (x.transpose() * grams.gx_inv().as_matrix() * x)[(0, 0)];
    if !(den_x > 0.0) {
        return Err(Error::ZeroNorm {
            context: "max_probability_outcome input".into(),
        });
    }
    let sqrt_k = (1.0 / den_x).sqrt();
    let a = grams.gf_inv().as_matrix() * u.matrix() * x * sqrt_k;
    let f = grams.gf.as_matrix() * &a;
    let p = (a.transpose() * grams.gf.as_matrix() * &a)[(0, 0)];
    Ok((f, p))
}
