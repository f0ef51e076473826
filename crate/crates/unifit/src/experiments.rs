//! Data generators and end-to-end drivers: dynamics recovery from
//! phase-stripped trajectories, polynomial-basis mapping, the trace-decreasing
//! fidelity sweep, and scalar function interpolation through the channel.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{
    Channel, ObservationRecord, ObservationSample, PartialIsometry, SolverConfig, SolverReport,
};
use crate::rng::Xorshift64;
use crate::solver::solve;
use crate::tensor::{
    build_tensor_pairs, fidelity, localized_state, localized_tensor_with_grams, regularize,
    GramPair,
};

/// Entries smaller than this are reported as exact zeros in recovered
/// polynomial mappings.
const CLEAN_THRESHOLD: f64 = 1e-12;

/// Chebyshev values `T_0(x) ... T_{count-1}(x)`.
pub fn chebyshev_values(x: f64, count: usize) -> DVector<f64> {
    let mut v = DVector::zeros(count);
    if count > 0 {
        v[0] = 1.0;
    }
    if count > 1 {
        v[1] = x;
    }
    for k in 2..count {
        v[k] = 2.0 * x * v[k - 1] - v[k - 2];
    }
    v
}

/// Legendre values `P_0(x) ... P_{count-1}(x)`.
pub fn legendre_values(x: f64, count: usize) -> DVector<f64> {
    let mut v = DVector::zeros(count);
    if count > 0 {
        v[0] = 1.0;
    }
    if count > 1 {
        v[1] = x;
    }
    for j in 1..count.saturating_sub(1) {
        v[j + 1] = ((2 * j + 1) as f64 * x * v[j] - j as f64 * v[j - 1]) / (j + 1) as f64;
    }
    v
}

/// Proper rotation from the three Euler angles, as the product
/// `Rz(phi) Rx(theta) Rz(psi)`.
pub fn euler_rotation(phi: f64, theta: f64, psi: f64) -> DMatrix<f64> {
    let rz = |a: f64| {
        DMatrix::from_row_slice(
            3,
            3,
            &[a.cos(), -a.sin(), 0.0, a.sin(), a.cos(), 0.0, 0.0, 0.0, 1.0],
        )
    };
    let rx = |a: f64| {
        DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.0, 0.0, 0.0, a.cos(), -a.sin(), 0.0, a.sin(), a.cos()],
        )
    };
    rz(phi) * rx(theta) * rz(psi)
}

fn random_orthogonal_from(rng: &mut Xorshift64, dim: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(dim, dim, |_, _| rng.gaussian());
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    // Fix the sign convention: diagonal of the triangular factor positive.
    for i in 0..dim {
        if r[(i, i)] < 0.0 {
            for k in 0..dim {
                q[(k, i)] = -q[(k, i)];
            }
        }
    }
    q
}

/// Seeded random orthogonal matrix (Householder QR of a Gaussian matrix with
/// the triangular diagonal fixed positive, so the result is deterministic).
pub fn random_orthogonal(dim: usize, seed: u64) -> DMatrix<f64> {
    random_orthogonal_from(&mut Xorshift64::new(seed), dim)
}

fn trajectory_from(
    rng: &mut Xorshift64,
    u0: &DMatrix<f64>,
    x0: &DVector<f64>,
    steps: usize,
    phase_flips: bool,
) -> Result<ObservationSample> {
    let dim = u0.nrows();
    if u0.ncols() != dim {
        return Err(Error::dims("trajectory generator matrix", dim, u0.ncols()));
    }
    if x0.len() != dim {
        return Err(Error::dims("trajectory initial vector", dim, x0.len()));
    }
    let norm = x0.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotUnitNorm { norm });
    }
    // Renormalizing every step keeps the whole trajectory on the unit sphere
    // to machine precision even for long high-dimensional runs.
    let mut x = x0 / norm;
    let mut records = Vec::with_capacity(steps);
    for _ in 0..steps {
        let mut next = u0 * &x;
        next /= next.norm();
        let xi = if phase_flips { rng.sign() } else { 1.0 };
        let zeta = if phase_flips { rng.sign() } else { 1.0 };
        records.push(ObservationRecord {
            weight: 1.0,
            alpha: &x * xi,
            beta: &next * zeta,
        });
        x = next;
    }
    ObservationSample::new(dim, dim, records)
}

/// Observation pairs of consecutive states of the dynamics `x -> u0 x`,
/// each side independently multiplied by a random sign when `phase_flips`
/// is set. The initial vector must have unit norm.
pub fn generate_trajectory(
    u0: &DMatrix<f64>,
    x0: &DVector<f64>,
    steps: usize,
    seed: u64,
    phase_flips: bool,
) -> Result<ObservationSample> {
    trajectory_from(&mut Xorshift64::new(seed), u0, x0, steps, phase_flips)
}

/// Recover the dynamics generator from a trajectory sample.
///
/// The Gram channel regularizes the data, solves, and maps the solution back
/// through the regularizing transforms; the unit channel solves on the raw
/// data, where the result is feasible as is. Either way the returned matrix
/// is determined only up to a global sign.
pub fn recover_dynamics(
    sample: &ObservationSample,
    channel: Channel,
    config: &SolverConfig,
) -> Result<(PartialIsometry, SolverReport)> {
    match channel {
        Channel::Gram => {
            let (orth, grams) = regularize(sample)?;
            let s = build_tensor_pairs(&orth);
            let report = solve(&s, config)?;
            let recovered = grams.unregularize(&report.solution);
            Ok((recovered, report))
        }
        Channel::Unit => {
            let s = build_tensor_pairs(sample);
            let report = solve(&s, config)?;
            let recovered = report.solution.clone();
            Ok((recovered, report))
        }
    }
}

/// Sample of Chebyshev values against Legendre values on an equidistant grid
/// in `[-1, 1]`, each side multiplied by an independent random sign.
pub fn generate_poly_sample(
    n: usize,
    d: usize,
    points: usize,
    seed: u64,
) -> Result<ObservationSample> {
    if points < 2 {
        return Err(Error::TooFewStates { got: points });
    }
    let mut rng = Xorshift64::new(seed);
    let mut records = Vec::with_capacity(points);
    for l in 0..points {
        let y = -1.0 + 2.0 * l as f64 / (points - 1) as f64;
        let xi = rng.sign();
        let zeta = rng.sign();
        records.push(ObservationRecord {
            weight: 1.0,
            alpha: chebyshev_values(y, n) * xi,
            beta: legendre_values(y, d) * zeta,
        });
    }
    ObservationSample::new(n, d, records)
}

/// Recover the polynomial-basis expansion from a sign-stripped sample,
/// restricted to the first `n` input and `d` output components. Entries
/// below 1e-12 in the recovered matrix are reported as exact zeros.
pub fn recover_poly_mapping(
    sample: &ObservationSample,
    d: usize,
    n: usize,
    config: &SolverConfig,
) -> Result<(PartialIsometry, SolverReport)> {
    let sub = sample.truncate(n, d)?;
    let (recovered, report) = recover_dynamics(&sub, Channel::Gram, config)?;
    let cleaned = DMatrix::from_fn(d, n, |j, k| {
        let v = recovered.matrix()[(j, k)];
        if v.abs() < CLEAN_THRESHOLD {
            0.0
        } else {
            v
        }
    });
    Ok((PartialIsometry::new(cleaned), report))
}

/// One row of the trace-decreasing fidelity sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub d: usize,
    pub f_orig: f64,
    pub f_max: f64,
    pub f_orig_over_m: f64,
    pub relative_gain: f64,
    pub converged: bool,
}

/// For each `d = 1..=n`, truncate a seeded random orthogonal matrix to its
/// first `d` rows, push `m` random unit states through it (without
/// renormalizing the output, so the map is trace decreasing for `d < n`),
/// and compare the generating fidelity with the maximized one.
pub fn fidelity_sweep(
    n: usize,
    m: usize,
    seed: u64,
    config: &SolverConfig,
) -> Result<Vec<SweepRow>> {
    let mut rng = Xorshift64::new(seed);
    let u_full = random_orthogonal_from(&mut rng, n);
    let states: Vec<DVector<f64>> = (0..m).map(|_| rng.unit_vector(n)).collect();
    let mut rows = Vec::with_capacity(n);
    for d in 1..=n {
        let u_gen = u_full.rows(0, d).clone_owned();
        let records = states
            .iter()
            .map(|psi| ObservationRecord {
                weight: 1.0,
                alpha: psi.clone(),
                beta: &u_gen * psi,
            })
            .collect();
        let sample = ObservationSample::new(n, d, records)?;
        let s = build_tensor_pairs(&sample);
        let f_orig = fidelity(&PartialIsometry::new(u_gen), &s);
        let report = solve(&s, config)?;
        rows.push(SweepRow {
            d,
            f_orig,
            f_max: report.fidelity,
            f_orig_over_m: f_orig / m as f64,
            relative_gain: (report.fidelity - f_orig) / f_orig,
            converged: report.converged,
        });
    }
    Ok(rows)
}

/// Random unweighted observation pairs of independent unit vectors; the
/// stress-test input for convergence profiling.
pub fn generate_random_pair_sample(
    n: usize,
    d: usize,
    m: usize,
    seed: u64,
) -> Result<ObservationSample> {
    let mut rng = Xorshift64::new(seed);
    let records = (0..m)
        .map(|_| ObservationRecord {
            weight: 1.0,
            alpha: rng.unit_vector(n),
            beta: rng.unit_vector(d),
        })
        .collect();
    ObservationSample::new(n, d, records)
}

fn affine_to_unit(lo: f64, hi: f64, x: f64) -> f64 {
    (2.0 * x - hi - lo) / (hi - lo)
}

fn range_with_margin(values: impl Iterator<Item = f64>) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::non_finite("interpolation sample range"));
    }
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    Ok((lo - 0.01 * span, hi + 0.01 * span))
}

/// Scalar interpolation model built through the channel: a scalar sample is
/// lifted to Chebyshev coefficient vectors, localized states drive the
/// tensor, and three evaluators answer queries.
#[derive(Debug)]
pub struct InterpolationModel {
    n: usize,
    d: usize,
    /// Channel operator in the original (unregularized) basis.
    u: PartialIsometry,
    grams: GramPair,
    x_range: (f64, f64),
    f_range: (f64, f64),
    /// (weight, x, f) with the unflipped coefficient vector of each x.
    data: Vec<(f64, f64, f64, DVector<f64>)>,
    pub report: SolverReport,
    /// Resolution of the outcome grid scanned by `max_probability`.
    pub f_grid: usize,
}

/// Fit the channel interpolation model on weighted `(weight, x, f)` points.
///
/// Random signs are applied to the lifted vectors before the tensor is built
/// (the construction must not depend on them); the classical evaluators use
/// the unflipped vectors.
///
/// The solve always scans candidates by adjusted fidelity: the top
/// eigenstates of a localized tensor are near-product states whose reshape
/// is rank deficient, so plain rank selection collapses on adjustment.
pub fn interpolate_scalar(
    points: &[(f64, f64, f64)],
    n: usize,
    d: usize,
    seed: u64,
    config: &SolverConfig,
) -> Result<InterpolationModel> {
    if points.len() < 2 {
        return Err(Error::TooFewStates { got: points.len() });
    }
    let x_range = range_with_margin(points.iter().map(|p| p.1))?;
    let f_range = range_with_margin(points.iter().map(|p| p.2))?;
    let mut rng = Xorshift64::new(seed);
    let mut records = Vec::with_capacity(points.len());
    let mut data = Vec::with_capacity(points.len());
    for &(w, x, f) in points {
        let xv = chebyshev_values(affine_to_unit(x_range.0, x_range.1, x), n);
        let fv = chebyshev_values(affine_to_unit(f_range.0, f_range.1, f), d);
        let xi = rng.sign();
        let zeta = rng.sign();
        records.push(ObservationRecord {
            weight: w,
            alpha: &xv * xi,
            beta: &fv * zeta,
        });
        data.push((w, x, f, xv));
    }
    let sample = ObservationSample::new(n, d, records)?;
    let (s, grams) = localized_tensor_with_grams(&sample)?;
    let scan_config = SolverConfig {
        scan_candidates: true,
        // Scanning ignores the per-run rank, so restarts would all coincide.
        num_runs: 1,
        ..config.clone()
    };
    let mut report = solve(&s, &scan_config)?;
    report.seed = seed;
    let u = grams.unregularize(&report.solution);
    Ok(InterpolationModel {
        n,
        d,
        u,
        grams,
        x_range,
        f_range,
        data,
        report,
        f_grid: 2001,
    })
}

impl InterpolationModel {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn operator(&self) -> &PartialIsometry {
        &self.u
    }

    fn x_vector(&self, x: f64) -> DVector<f64> {
        chebyshev_values(affine_to_unit(self.x_range.0, self.x_range.1, x), self.n)
    }

    fn f_vector(&self, f: f64) -> DVector<f64> {
        chebyshev_values(affine_to_unit(self.f_range.0, self.f_range.1, f), self.d)
    }

    /// Coefficients of the localized state at `y` in the original basis.
    fn localized_at(&self, y: f64) -> Result<DVector<f64>> {
        let t = self.x_vector(y);
        Ok(localized_state(&t, self.grams.gx_inv())?.coefficients)
    }

    /// Weighted average of the observed values under the localized density
    /// `psi_y^2`; always inside `[min f, max f]`.
    pub fn radon_nikodym(&self, y: f64) -> Result<f64> {
        let c = self.localized_at(y)?;
        let mut acc = 0.0;
        for (w, _, f, xv) in &self.data {
            let psi = c.dot(xv);
            acc += w * f * psi * psi;
        }
        Ok(acc)
    }

    /// Least-squares evaluator `psi_y(y) <f psi_y>`; exact for targets inside
    /// the coefficient span (and sensitive to the sign flips, which is why it
    /// is computed on the unflipped data).
    pub fn least_squares(&self, y: f64) -> Result<f64> {
        let c = self.localized_at(y)?;
        let psi_yy = c.dot(&self.x_vector(y));
        let mut acc = 0.0;
        for (w, _, f, xv) in &self.data {
            acc += w * f * c.dot(xv);
        }
        Ok(psi_yy * acc)
    }

    /// Channel probability of the outcome value `f` for the input `y`.
    pub fn probability_of(&self, y: f64, f: f64) -> Result<f64> {
        let a = self.outcome_coefficients(y)?;
        let fv = self.f_vector(f);
        let den = (fv.transpose() * self.grams.gf_inv().as_matrix() * &fv)[(0, 0)];
        if !(den > 0.0) {
            return Err(Error::ZeroNorm {
                context: "interpolation outcome vector".into(),
            });
        }
        let amp = fv.dot(&a);
        Ok(amp * amp / den)
    }

    fn outcome_coefficients(&self, y: f64) -> Result<DVector<f64>> {
        let t = self.x_vector(y);
        let den_x = (t.transpose() * self.grams.gx_inv().as_matrix() * &t)[(0, 0)];
        if !(den_x > 0.0) {
            return Err(Error::NonPositiveQuadraticForm { value: den_x });
        }
        Ok(self.grams.gf_inv().as_matrix() * self.u.matrix() * t / den_x.sqrt())
    }

    /// Scan the outcome grid and return `(f*, P(f*))`, the scalar outcome of
    /// maximal channel probability. The grid keeps the evaluator simple and
    /// faithful; the exact vector-valued maximum is `max_probability_vector`.
    pub fn max_probability(&self, y: f64) -> Result<(f64, f64)> {
        let a = self.outcome_coefficients(y)?;
        let (lo, hi) = self.f_range;
        let mut best = (lo, f64::NEG_INFINITY);
        for i in 0..self.f_grid {
            let f = lo + (hi - lo) * i as f64 / (self.f_grid - 1) as f64;
            let fv = self.f_vector(f);
            let den = (fv.transpose() * self.grams.gf_inv().as_matrix() * &fv)[(0, 0)];
            if !(den > 0.0) {
                continue;
            }
            let amp = fv.dot(&a);
            let p = amp * amp / den;
            if p > best.1 {
                best = (f, p);
            }
        }
        Ok(best)
    }

    /// The unconstrained vector-valued outcome of maximal probability and
    /// that probability (`<= 1` for a feasible channel).
    pub fn max_probability_vector(&self, y: f64) -> Result<(DVector<f64>, f64)> {
        crate::tensor::max_probability_outcome(&self.u, &self.grams, &self.x_vector(y))
    }

    pub fn data_f_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (_, _, f, _) in &self.data {
            lo = lo.min(*f);
            hi = hi.max(*f);
        }
        (lo, hi)
    }
}

/// What to generate and how much of it.
#[derive(Debug, Clone)]
pub enum GeneratorKind {
    /// Trajectory of the three-angle rotation applied to `x0`.
    Euler3 {
        phi: f64,
        theta: f64,
        psi: f64,
        x0: DVector<f64>,
    },
    /// Trajectory of a seeded random orthogonal matrix from a seeded random
    /// unit start.
    RandomOrthogonal { dim: usize },
    /// Chebyshev-to-Legendre values on an equidistant grid, random signs.
    ChebyshevLegendre { n: usize, d: usize },
    /// Scalar pairs `(x, x^power)` on an equidistant grid in `[-1, 1]`.
    ScalarFunction { power: u32 },
}

/// Reproducible data-generation request; the seed must be recorded next to
/// every emitted artifact.
#[derive(Debug, Clone)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub points: usize,
    pub seed: u64,
    pub phase_flips: bool,
}

impl GeneratorSpec {
    /// Produce the sample and, for dynamics kinds, the generating matrix.
    pub fn generate(&self) -> Result<(ObservationSample, Option<DMatrix<f64>>)> {
        if self.points < 2 {
            return Err(Error::TooFewStates { got: self.points });
        }
        match &self.kind {
            GeneratorKind::Euler3 {
                phi,
                theta,
                psi,
                x0,
            } => {
                let u = euler_rotation(*phi, *theta, *psi);
                let sample = generate_trajectory(&u, x0, self.points, self.seed, self.phase_flips)?;
                Ok((sample, Some(u)))
            }
            GeneratorKind::RandomOrthogonal { dim } => {
                let mut rng = Xorshift64::new(self.seed);
                let u = random_orthogonal_from(&mut rng, *dim);
                let x0 = rng.unit_vector(*dim);
                let sample = trajectory_from(&mut rng, &u, &x0, self.points, self.phase_flips)?;
                Ok((sample, Some(u)))
            }
            GeneratorKind::ChebyshevLegendre { n, d } => {
                let sample = generate_poly_sample(*n, *d, self.points, self.seed)?;
                Ok((sample, None))
            }
            GeneratorKind::ScalarFunction { power } => {
                let records = (0..self.points)
                    .map(|l| {
                        let x = -1.0 + 2.0 * l as f64 / (self.points - 1) as f64;
                        ObservationRecord {
                            weight: 1.0,
                            alpha: DVector::from_row_slice(&[x]),
                            beta: DVector::from_row_slice(&[x.powi(*power as i32)]),
                        }
                    })
                    .collect();
                Ok((ObservationSample::new(1, 1, records)?, None))
            }
        }
    }
}
