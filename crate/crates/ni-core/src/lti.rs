//! Linear time-invariant analysis: frequency-domain property tests, storage
//! certificates, and the interconnection conditions built from DC gains.
//!
//! # Conventions
//!
//! A system is `x' = Ax + Bu`, `y = Cx + Du` with transfer `G(s) = C(sI-A)^-1 B + D`.
//! The *imaginary-part test matrix* at a frequency is `M(w) = j (G(jw) - G(jw)^H)`,
//! Hermitian by construction. A square system is negative imaginary (NI) when
//! `M(w) >= 0` for all `w > 0`, strictly so (SNI) when the inequality is strict and
//! `A` is Hurwitz; it is positive real (PR) when `G(jw) + G(jw)^H >= 0`.
//!
//! Certificates use the matrix `P` of the algebraic characterization
//!
//! ```text
//!     P = P^T > 0,    A P + P A^T <= 0,    B + A P C^T = 0,
//! ```
//!
//! under which `V(x) = x^T P^-1 x / 2` is a storage function for the dissipation
//! inequality `V' <= y'^T u`. Functions that consume a *storage matrix* (the inverse
//! convention, `P^-1` above) say so explicitly; everything returned by
//! [`search_certificate`] and [`verify_certificate`] is the `P` shown here.

use crate::cmat::{self, ComplexMatrix};
use crate::eig::{self, lstsq};
use crate::error::{Error, Result};
use crate::mat::Matrix;
use crate::nonlinear::{self, DissipativityReport, NonlinearSystem, StorageFunction};
use crate::signal::Signal;
use num_complex::Complex64;

/// Default absolute tolerance for certificate checks and frequency tests.
pub const DEFAULT_TOL: f64 = 1e-7;

/// A grid frequency closer than this to a pole aborts the sweep.
pub const POLE_DISTANCE_TOL: f64 = 1e-8;

/// Eigenvalue floor used when projecting candidate certificates onto the
/// positive-definite cone during the search.
const PSD_FLOOR: f64 = 1e-6;

/// State-space system `x' = Ax + Bu`, `y = Cx + Du`.
///
/// Inputs and outputs need not match in general (auxiliary systems built from
/// certificate factors are wide or tall); the property tests themselves insist on
/// square systems.
#[derive(Debug, Clone)]
pub struct StateSpace {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub d: Matrix,
}

impl StateSpace {
    pub fn new(a: Matrix, b: Matrix, c: Matrix, d: Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::NonSquare { rows: a.rows(), cols: a.cols() });
        }
        let n = a.rows();
        if b.rows() != n || c.cols() != n || d.rows() != c.rows() || d.cols() != b.cols() {
            return Err(Error::DimensionMismatch(format!(
                "state-space shapes disagree: A {}x{}, B {}x{}, C {}x{}, D {}x{}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols(),
                c.rows(),
                c.cols(),
                d.rows(),
                d.cols()
            )));
        }
        Ok(StateSpace { a, b, c, d })
    }

    /// One-state system from scalars.
    pub fn scalar(a: f64, b: f64, c: f64, d: f64) -> Self {
        StateSpace {
            a: Matrix::from_rows(&[vec![a]]),
            b: Matrix::from_rows(&[vec![b]]),
            c: Matrix::from_rows(&[vec![c]]),
            d: Matrix::from_rows(&[vec![d]]),
        }
    }

    pub fn order(&self) -> usize {
        self.a.rows()
    }

    pub fn inputs(&self) -> usize {
        self.b.cols()
    }

    pub fn outputs(&self) -> usize {
        self.c.rows()
    }

    pub fn is_io_square(&self) -> bool {
        self.inputs() == self.outputs()
    }

    pub fn poles(&self) -> Result<Vec<Complex64>> {
        eig::eigenvalues(&self.a)
    }

    /// `G(0) = D - C A^-1 B`; [`Error::SingularA`] when there is a pole at the origin.
    pub fn dc_gain(&self) -> Result<Matrix> {
        let ainv_b = self.a.solve(&self.b).map_err(|_| Error::SingularA)?;
        Ok(&self.d - &self.c.matmul(&ainv_b))
    }

    /// Reinterpret as a nonlinear system for trajectory work. Requires `D = 0`
    /// because the nonlinear class has outputs that depend on the state alone.
    pub fn to_nonlinear(&self) -> Result<NonlinearSystem> {
        if self.d.max_abs() > 1e-12 {
            return Err(Error::DimensionMismatch(
                "trajectory checks need a strictly proper system (D = 0)".into(),
            ));
        }
        if !self.is_io_square() {
            return Err(Error::DimensionMismatch(
                "trajectory checks need as many outputs as inputs".into(),
            ));
        }
        let (a, b, c) = (self.a.clone(), self.b.clone(), self.c.clone());
        let cj = self.c.clone();
        let sys = NonlinearSystem::new(
            "lti",
            self.order(),
            self.inputs(),
            move |x, u| {
                let mut dx = a.matvec(x);
                for (d, v) in dx.iter_mut().zip(b.matvec(u)) {
                    *d += v;
                }
                dx
            },
            move |x| c.matvec(x),
        )?;
        Ok(sys.with_output_jacobian(move |_| cj.clone()))
    }
}

/// Strictly positive, strictly increasing list of test frequencies.
#[derive(Debug, Clone)]
pub struct FrequencyGrid {
    omegas: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(omegas: Vec<f64>) -> Result<Self> {
        if omegas.is_empty() {
            return Err(Error::InvalidGrid("grid is empty".into()));
        }
        for w in &omegas {
            if !w.is_finite() || *w <= 0.0 {
                return Err(Error::InvalidGrid(format!("frequency {w} is not positive")));
            }
        }
        if omegas.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::InvalidGrid("frequencies must strictly increase".into()));
        }
        Ok(FrequencyGrid { omegas })
    }

    /// Logarithmically spaced grid over `[lo, hi]`.
    pub fn log_space(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if count < 2 || lo <= 0.0 || hi <= lo {
            return Err(Error::InvalidGrid(format!(
                "log grid needs 0 < lo < hi and count >= 2 (got {lo}, {hi}, {count})"
            )));
        }
        let (llo, lhi) = (lo.ln(), hi.ln());
        let omegas = (0..count)
            .map(|k| (llo + (lhi - llo) * k as f64 / (count - 1) as f64).exp())
            .collect();
        FrequencyGrid::new(omegas)
    }

    /// 2000 points, logarithmic, over `[1e-3, 1e3]`.
    pub fn standard() -> Self {
        FrequencyGrid::log_space(1e-3, 1e3, 2000).expect("static bounds are valid")
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }
}

fn response_unchecked(sys: &StateSpace, omega: f64) -> Result<ComplexMatrix> {
    let n = sys.order();
    let jw = Complex64::new(0.0, omega);
    let resolvent = ComplexMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j { jw } else { Complex64::new(0.0, 0.0) };
        diag - Complex64::new(sys.a[(i, j)], 0.0)
    });
    let x = resolvent.solve(&ComplexMatrix::from_real(&sys.b))?;
    Ok(&ComplexMatrix::from_real(&sys.c).matmul(&x) + &ComplexMatrix::from_real(&sys.d))
}

fn check_pole_distances(poles: &[Complex64], omegas: &[f64]) -> Result<()> {
    for &w in omegas {
        let jw = Complex64::new(0.0, w);
        for &p in poles {
            let distance = (jw - p).norm();
            if distance <= POLE_DISTANCE_TOL {
                return Err(Error::PoleOnGrid { omega: w, distance });
            }
        }
    }
    Ok(())
}

/// Frequency response `G(jw)` at one frequency, with a pole-proximity check.
pub fn freq_response(sys: &StateSpace, omega: f64) -> Result<ComplexMatrix> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidGrid(format!("frequency {omega} is not positive")));
    }
    let poles = sys.poles()?;
    check_pole_distances(&poles, &[omega])?;
    response_unchecked(sys, omega)
}

/// Responses over a whole grid; pole locations are computed once up front.
pub fn freq_sweep(sys: &StateSpace, grid: &FrequencyGrid) -> Result<Vec<ComplexMatrix>> {
    let poles = sys.poles()?;
    check_pole_distances(&poles, grid.omegas())?;
    crate::exec::map(grid.omegas(), |&w| response_unchecked(sys, w))
        .into_iter()
        .collect()
}

fn ni_test_matrix(g: &ComplexMatrix) -> ComplexMatrix {
    (g - &g.adjoint()).scale(Complex64::new(0.0, 1.0))
}

/// Pole pattern relevant to the frequency tests.
#[derive(Debug, Clone, Copy, Default)]
struct PoleSummary {
    has_origin: bool,
    has_rhp: bool,
    max_real: f64,
}

/// Classify poles; nonzero poles *on* the imaginary axis abort with
/// [`Error::ImaginaryAxisPole`] because the sweep cannot see what happens there.
fn classify_poles(poles: &[Complex64]) -> Result<PoleSummary> {
    let scale = poles.iter().map(|p| p.norm()).fold(0.0, f64::max);
    let tol = 1e-9 * (1.0 + scale);
    let mut summary =
        PoleSummary { has_origin: false, has_rhp: false, max_real: f64::NEG_INFINITY };
    for p in poles {
        summary.max_real = summary.max_real.max(p.re);
        if p.norm() <= tol {
            summary.has_origin = true;
        } else if p.re.abs() <= tol {
            return Err(Error::ImaginaryAxisPole { omega: p.im });
        } else if p.re > tol {
            summary.has_rhp = true;
        }
    }
    Ok(summary)
}

fn require_io_square(sys: &StateSpace) -> Result<()> {
    if sys.is_io_square() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "property tests need a square system (got {} inputs, {} outputs)",
            sys.inputs(),
            sys.outputs()
        )))
    }
}

/// `(w, lambda_min(M(w)))` for every grid frequency, `M = j (G - G^H)`.
pub fn ni_sweep_points(sys: &StateSpace, grid: &FrequencyGrid) -> Result<Vec<(f64, f64)>> {
    require_io_square(sys)?;
    let responses = freq_sweep(sys, grid)?;
    let lambdas: Result<Vec<f64>> = crate::exec::map(&responses, |g| {
        cmat::hermitian_lambda_min(&ni_test_matrix(g))
    })
    .into_iter()
    .collect();
    Ok(grid.omegas().iter().copied().zip(lambdas?).collect())
}

/// `(w, lambda_min(G + G^H))` for every grid frequency.
pub fn pr_sweep_points(sys: &StateSpace, grid: &FrequencyGrid) -> Result<Vec<(f64, f64)>> {
    require_io_square(sys)?;
    let responses = freq_sweep(sys, grid)?;
    let lambdas: Result<Vec<f64>> = crate::exec::map(&responses, |g| {
        cmat::hermitian_lambda_min(&(g + &g.adjoint()))
    })
    .into_iter()
    .collect();
    Ok(grid.omegas().iter().copied().zip(lambdas?).collect())
}

#[derive(Debug, Clone)]
pub struct NiFrequencyReport {
    pub is_ni: bool,
    /// Smallest eigenvalue of the test matrix seen anywhere on the grid.
    pub worst_lambda_min: f64,
    pub worst_omega: f64,
    /// A pole at the origin does not refute the property (the sweep covers
    /// `w > 0` only) but is worth surfacing.
    pub has_origin_pole: bool,
    /// Any open right-half-plane pole refutes the property outright.
    pub has_rhp_pole: bool,
    pub points_tested: usize,
}

/// Grid test for the negative-imaginary property.
pub fn ni_frequency_test(
    sys: &StateSpace,
    grid: &FrequencyGrid,
    tol: f64,
) -> Result<NiFrequencyReport> {
    require_io_square(sys)?;
    let summary = classify_poles(&sys.poles()?)?;
    let points = ni_sweep_points(sys, grid)?;
    let (worst_omega, worst_lambda_min) = points
        .iter()
        .copied()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .expect("grid is non-empty");
    Ok(NiFrequencyReport {
        is_ni: !summary.has_rhp && worst_lambda_min >= -tol,
        worst_lambda_min,
        worst_omega,
        has_origin_pole: summary.has_origin,
        has_rhp_pole: summary.has_rhp,
        points_tested: points.len(),
    })
}

#[derive(Debug, Clone)]
pub struct PrFrequencyReport {
    pub is_pr: bool,
    pub worst_lambda_min: f64,
    pub worst_omega: f64,
    pub has_origin_pole: bool,
    pub has_rhp_pole: bool,
    pub points_tested: usize,
}

/// Grid test for positive realness.
pub fn pr_frequency_test(
    sys: &StateSpace,
    grid: &FrequencyGrid,
    tol: f64,
) -> Result<PrFrequencyReport> {
    require_io_square(sys)?;
    let summary = classify_poles(&sys.poles()?)?;
    let points = pr_sweep_points(sys, grid)?;
    let (worst_omega, worst_lambda_min) = points
        .iter()
        .copied()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .expect("grid is non-empty");
    Ok(PrFrequencyReport {
        is_pr: !summary.has_rhp && worst_lambda_min >= -tol,
        worst_lambda_min,
        worst_omega,
        has_origin_pole: summary.has_origin,
        has_rhp_pole: summary.has_rhp,
        points_tested: points.len(),
    })
}

#[derive(Debug, Clone)]
pub struct SniFrequencyReport {
    pub is_sni: bool,
    /// Minimum over the grid of `lambda_min(M(w)) - margin * w / (1 + w^2)`.
    pub worst_slack: f64,
    pub worst_omega: f64,
    pub margin: f64,
}

/// Grid test for the *strict* property.
///
/// Strictness is graded against the floor `margin * w / (1 + w^2)`, the decay shape
/// of a first-order lag. Systems of higher relative degree roll off faster at high
/// frequency and can fail the floor while still being strictly negative imaginary
/// pointwise; pass `margin = 0` to test the raw strict inequality instead. `A` must
/// be Hurwitz.
pub fn sni_frequency_test(
    sys: &StateSpace,
    grid: &FrequencyGrid,
    margin: f64,
) -> Result<SniFrequencyReport> {
    require_io_square(sys)?;
    let poles = sys.poles()?;
    let max_real = poles.iter().map(|p| p.re).fold(f64::NEG_INFINITY, f64::max);
    if max_real >= -1e-12 {
        return Err(Error::NotHurwitz { real_part: max_real });
    }
    let points = ni_sweep_points(sys, grid)?;
    let (worst_omega, worst_slack) = points
        .iter()
        .map(|&(w, lam)| (w, lam - margin * w / (1.0 + w * w)))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .expect("grid is non-empty");
    Ok(SniFrequencyReport { is_sni: worst_slack >= -1e-12, worst_slack, worst_omega, margin })
}

/// Divide a positive-real system by `s`: returns a realization of `G(s) / s` built
/// by feeding every output through an integrator. The result has a pole at the
/// origin by construction, so certificate search (which inverts `A`) does not apply
/// to it; the frequency tests do.
pub fn ni_from_pr(sys: &StateSpace) -> Result<StateSpace> {
    require_io_square(sys)?;
    let (n, m) = (sys.order(), sys.inputs());
    let a = Matrix::block2x2(
        &sys.a,
        &Matrix::zeros(n, m),
        &sys.c,
        &Matrix::zeros(m, m),
    );
    let b = Matrix::from_fn(n + m, m, |i, j| {
        if i < n {
            sys.b[(i, j)]
        } else {
            sys.d[(i - n, j)]
        }
    });
    let c = Matrix::from_fn(m, n + m, |i, j| {
        if j >= n && j - n == i {
            1.0
        } else {
            0.0
        }
    });
    StateSpace::new(a, b, c, Matrix::zeros(m, m))
}

/// Multiply a strictly proper system by `s`: realization `(A, B, CA, CB)` of
/// `s G(s)`. Requires `D = 0`.
pub fn pr_from_ni(sys: &StateSpace) -> Result<StateSpace> {
    require_io_square(sys)?;
    if sys.d.max_abs() > 1e-12 {
        return Err(Error::DimensionMismatch(
            "the differentiation transform needs a strictly proper system (D = 0)".into(),
        ));
    }
    StateSpace::new(
        sys.a.clone(),
        sys.b.clone(),
        sys.c.matmul(&sys.a),
        sys.c.matmul(&sys.b),
    )
}

/// Storage certificate for the negative-imaginary property; see the module docs for
/// the convention. All thresholds in `valid` are absolute.
#[derive(Debug, Clone)]
pub struct NiCertificate {
    pub p: Matrix,
    /// `||B + A P C^T||_F`.
    pub residual_affine: f64,
    pub lambda_min_p: f64,
    /// `lambda_max(A P + P A^T)`; nonpositive for a true certificate.
    pub lambda_max_lyap: f64,
    /// Largest eigenvalue of the full dissipation LMI assembled from the storage
    /// matrix `S = P^-1`; implied nonpositive by the other conditions, reported as
    /// an independent diagnostic. `NaN` when `P` is singular.
    pub storage_lmi_lambda_max: f64,
    pub valid: bool,
}

impl NiCertificate {
    /// The matrix of the quadratic storage function `V(x) = x^T S x / 2`, i.e.
    /// `S = P^-1`.
    pub fn storage_matrix(&self) -> Result<Matrix> {
        self.p.inverse()
    }
}

/// Evaluate a candidate certificate. Errors only on malformed input (shape or
/// symmetry); a candidate that merely fails the inequalities comes back with
/// `valid = false` and the numbers that show why.
pub fn verify_certificate(sys: &StateSpace, p: &Matrix, tol: f64) -> Result<NiCertificate> {
    require_io_square(sys)?;
    let n = sys.order();
    if !p.is_square() || p.rows() != n {
        return Err(Error::DimensionMismatch(format!(
            "certificate is {}x{}, system order is {n}",
            p.rows(),
            p.cols()
        )));
    }
    let p_defect = p.symmetry_defect();
    if p_defect > 1e-9 * (1.0 + p.max_abs()) {
        return Err(Error::NotSymmetric { defect: p_defect });
    }
    let d_defect = sys.d.symmetry_defect();
    if d_defect > 1e-9 * (1.0 + sys.d.max_abs()) {
        return Err(Error::NotSymmetric { defect: d_defect });
    }

    let ap = sys.a.matmul(p);
    let residual_affine = (&sys.b + &ap.matmul(&sys.c.transpose())).frobenius_norm();
    let lyap = (&ap + &ap.transpose()).symmetrize();
    let lyap_eigs = eig::sym_eig(&lyap)?.eigenvalues;
    let lambda_max_lyap = *lyap_eigs.last().expect("n >= 1");
    let p_eigs = eig::sym_eig(p)?.eigenvalues;
    let lambda_min_p = p_eigs[0];

    let storage_lmi_lambda_max = match p.inverse() {
        Ok(s) => {
            let sa = s.matmul(&sys.a);
            let tl = (&sa + &sa.transpose()).symmetrize();
            let tr = &s.matmul(&sys.b) - &sys.a.transpose().matmul(&sys.c.transpose());
            let cb = sys.c.matmul(&sys.b);
            let br = -&(&cb + &cb.transpose());
            let lmi = Matrix::block2x2(&tl, &tr, &tr.transpose(), &br).symmetrize();
            *eig::sym_eig(&lmi)?.eigenvalues.last().expect("nonempty")
        }
        Err(_) => f64::NAN,
    };

    let valid = residual_affine <= tol && lambda_min_p > tol && lambda_max_lyap <= tol;
    Ok(NiCertificate {
        p: p.symmetrize(),
        residual_affine,
        lambda_min_p,
        lambda_max_lyap,
        storage_lmi_lambda_max,
        valid,
    })
}

/// Index pairs `(i, j)`, `i <= j`, giving coordinates for symmetric `n x n`
/// matrices.
fn sym_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            pairs.push((i, j));
        }
    }
    pairs
}

fn unvec_sym(coords: &[f64], pairs: &[(usize, usize)], n: usize) -> Matrix {
    let mut p = Matrix::zeros(n, n);
    for (&(i, j), &v) in pairs.iter().zip(coords) {
        p[(i, j)] = v;
        p[(j, i)] = v;
    }
    p
}

fn basis_matrix(pair: (usize, usize), n: usize) -> Matrix {
    let mut e = Matrix::zeros(n, n);
    e[pair] = 1.0;
    e[(pair.1, pair.0)] = 1.0;
    e
}

fn vec_rows(m: &Matrix) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.rows() * m.cols());
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Derivative-free simplex minimization; plenty for the few-parameter convex
/// scores that arise in the certificate search.
fn nelder_mead(
    f: &dyn Fn(&[f64]) -> f64,
    t0: &[f64],
    scale: f64,
    max_iter: usize,
) -> Vec<f64> {
    let d = t0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((t0.to_vec(), f(t0)));
    for i in 0..d {
        let mut v = t0.to_vec();
        v[i] += scale;
        let fv = f(&v);
        simplex.push((v, fv));
    }
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let best = simplex[0].1;
        let worst = simplex[d].1;
        if (worst - best).abs() <= 1e-15 * (1.0 + best.abs()) {
            break;
        }
        // centroid of all but the worst vertex
        let mut centroid = vec![0.0; d];
        for (v, _) in &simplex[..d] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / d as f64;
            }
        }
        let blend = |alpha: f64, v: &[f64]| -> Vec<f64> {
            centroid
                .iter()
                .zip(v)
                .map(|(c, x)| c + alpha * (x - c))
                .collect()
        };
        let worst_pt = simplex[d].0.clone();
        let reflected = blend(-1.0, &worst_pt);
        let fr = f(&reflected);
        if fr < simplex[0].1 {
            let expanded = blend(-2.0, &worst_pt);
            let fe = f(&expanded);
            simplex[d] =
                if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (reflected, fr);
        } else {
            let contracted =
                if fr < simplex[d].1 { blend(-0.5, &worst_pt) } else { blend(0.5, &worst_pt) };
            let fc = f(&contracted);
            if fc < simplex[d].1.min(fr) {
                simplex[d] = (contracted, fc);
            } else {
                // shrink toward the best vertex
                let anchor = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let v: Vec<f64> = anchor
                        .iter()
                        .zip(&entry.0)
                        .map(|(a, x)| a + 0.5 * (x - a))
                        .collect();
                    let fv = f(&v);
                    *entry = (v, fv);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    simplex[0].0.clone()
}

/// Search for a storage certificate.
///
/// The affine constraint `B + A P C^T = 0` is solved first by minimum-norm least
/// squares over the vectorized symmetric unknowns, retaining an orthonormal basis of
/// its solution-space directions. Alternating projections (positive-definite
/// eigenvalue floor, negative-semidefinite Lyapunov pull-back, affine re-projection)
/// run from the minimum-norm point; if they stall before producing a certificate
/// that passes [`verify_certificate`], a derivative-free polish minimizes the
/// infeasibility score inside the affine solution set, which settles the common case
/// of certificates that sit exactly on the semidefinite boundary.
///
/// Errors: [`Error::CertificateNotFound`] when the search space is exhausted — in
/// particular when the affine constraint itself is infeasible (the integrator
/// `1/s` lands here: its constraint reads `1 = 0`). A singular `A` is not
/// rejected up front; non-minimal realizations with a cancelled eigenvalue at
/// the origin can still carry perfectly good certificates.
pub fn search_certificate(
    sys: &StateSpace,
    max_iter: usize,
    tol: f64,
) -> Result<NiCertificate> {
    require_io_square(sys)?;
    let n = sys.order();

    let pairs = sym_pairs(n);
    let k = pairs.len();
    let ct = sys.c.transpose();

    // rows of the affine system, one per entry of B + A P C^T
    let mut affine = Matrix::zeros(n * sys.inputs(), k);
    for (col, &pair) in pairs.iter().enumerate() {
        let t = sys.a.matmul(&basis_matrix(pair, n)).matmul(&ct);
        for (row, v) in vec_rows(&t).into_iter().enumerate() {
            affine[(row, col)] = v;
        }
    }
    let rhs: Vec<f64> = vec_rows(&sys.b).into_iter().map(|v| -v).collect();
    let ls = lstsq(&affine, &rhs);
    if ls.residual > 1e-8 * (1.0 + sys.b.frobenius_norm()) {
        return Err(Error::CertificateNotFound);
    }
    let p0 = ls.x.clone();

    let evaluate = |coords: &[f64]| -> Result<NiCertificate> {
        verify_certificate(sys, &unvec_sym(coords, &pairs, n), tol)
    };
    let direct = evaluate(&p0)?;
    if direct.valid {
        return Ok(direct);
    }
    let nullspace = match ls.nullspace {
        Some(nsp) => nsp,
        None => return Err(Error::CertificateNotFound),
    };
    let dim = nullspace.cols();

    // infeasibility score; zero exactly on the certificate set (with the floor)
    let score_of = |coords: &[f64]| -> f64 {
        let p = unvec_sym(coords, &pairs, n);
        let ap = sys.a.matmul(&p);
        let lyap = (&ap + &ap.transpose()).symmetrize();
        let lam_lyap = *eig::sym_eig(&lyap)
            .expect("symmetric by construction")
            .eigenvalues
            .last()
            .unwrap();
        let lam_p = eig::sym_eig(&p)
            .expect("symmetric by construction")
            .eigenvalues[0];
        lam_lyap.max(PSD_FLOOR - lam_p)
    };
    let project_affine = |coords: &[f64]| -> Vec<f64> {
        // p0 + N N^T (coords - p0), N orthonormal
        let diff: Vec<f64> = coords.iter().zip(&p0).map(|(c, p)| c - p).collect();
        let t = nullspace.transpose().matvec(&diff);
        let back = nullspace.matvec(&t);
        p0.iter().zip(back).map(|(p, b)| p + b).collect()
    };

    // Lyapunov pull-back operates in the same coordinates.
    let mut lyap_coef = Matrix::zeros(n * n, k);
    for (col, &pair) in pairs.iter().enumerate() {
        let e = basis_matrix(pair, n);
        let ae = sys.a.matmul(&e);
        let s = &ae + &ae.transpose();
        for (row, v) in vec_rows(&s).into_iter().enumerate() {
            lyap_coef[(row, col)] = v;
        }
    }

    let mut coords = p0.clone();
    let mut best_coords = coords.clone();
    let mut best_score = score_of(&coords);
    let mut last_improvement = 0usize;
    for iter in 0..max_iter {
        // positive-definite floor
        let p = unvec_sym(&coords, &pairs, n);
        let se = eig::sym_eig(&p)?;
        let mut clipped = Matrix::zeros(n, n);
        for (idx, &lam) in se.eigenvalues.iter().enumerate() {
            let l = lam.max(PSD_FLOOR);
            let v = se.eigenvectors.column(idx);
            for i in 0..n {
                for j in 0..n {
                    clipped[(i, j)] += l * v[i] * v[j];
                }
            }
        }
        // negative-semidefinite Lyapunov pull-back
        let ap = sys.a.matmul(&clipped);
        let lyap = (&ap + &ap.transpose()).symmetrize();
        let le = eig::sym_eig(&lyap)?;
        let mut s_minus = Matrix::zeros(n, n);
        for (idx, &lam) in le.eigenvalues.iter().enumerate() {
            let l = lam.min(0.0);
            let v = le.eigenvectors.column(idx);
            for i in 0..n {
                for j in 0..n {
                    s_minus[(i, j)] += l * v[i] * v[j];
                }
            }
        }
        let pullback = lstsq(&lyap_coef, &vec_rows(&s_minus));
        // back onto the affine constraint set
        coords = project_affine(&pullback.x);

        let score = score_of(&coords);
        if score < best_score - 1e-13 {
            best_score = score;
            best_coords = coords.clone();
            last_improvement = iter;
        }
        let cert = evaluate(&coords)?;
        if cert.valid {
            return Ok(cert);
        }
        if iter - last_improvement > 100 {
            break;
        }
    }

    // polish inside the affine set, in nullspace coordinates
    let diff: Vec<f64> = best_coords.iter().zip(&p0).map(|(c, p)| c - p).collect();
    let t0 = nullspace.transpose().matvec(&diff);
    let score_t = |t: &[f64]| -> f64 {
        let shift = nullspace.matvec(t);
        let coords: Vec<f64> = p0.iter().zip(shift).map(|(p, s)| p + s).collect();
        score_of(&coords)
    };
    let spread = 0.5 * (1.0 + crate::mat::norm_inf(&t0));
    let t_best = nelder_mead(&score_t, &t0, spread, 400.max(200 * dim));
    let shift = nullspace.matvec(&t_best);
    let polished: Vec<f64> = p0.iter().zip(shift).map(|(p, s)| p + s).collect();
    let cert = evaluate(&polished)?;
    if cert.valid {
        Ok(cert)
    } else {
        Err(Error::CertificateNotFound)
    }
}

/// DC-gain interconnection condition for a candidate closed loop.
#[derive(Debug, Clone)]
pub struct DcGainReport {
    pub eigenvalues: Vec<Complex64>,
    /// Largest real eigenvalue of `G(0) H(0)` (`-inf` if the spectrum is entirely
    /// non-real, which the theory does not expect; see `complex_spectrum`).
    pub lambda_max_real: f64,
    pub complex_spectrum: bool,
    /// `lambda_max_real < 1`.
    pub satisfied: bool,
}

/// Evaluate `lambda_max(G(0) H(0)) < 1` for a plant/controller pair.
pub fn dc_gain_condition(plant: &StateSpace, controller: &StateSpace) -> Result<DcGainReport> {
    let g0 = plant.dc_gain()?;
    let h0 = controller.dc_gain()?;
    if g0.cols() != h0.rows() || g0.rows() != h0.cols() {
        return Err(Error::DimensionMismatch(format!(
            "loop gains do not compose: {}x{} against {}x{}",
            g0.rows(),
            g0.cols(),
            h0.rows(),
            h0.cols()
        )));
    }
    let eigenvalues = eig::eigenvalues(&g0.matmul(&h0))?;
    let mut lambda_max_real = f64::NEG_INFINITY;
    let mut complex_spectrum = false;
    for lam in &eigenvalues {
        if lam.im.abs() <= 1e-9 * (1.0 + lam.re.abs()) {
            lambda_max_real = lambda_max_real.max(lam.re);
        } else {
            complex_spectrum = true;
        }
    }
    Ok(DcGainReport {
        eigenvalues,
        lambda_max_real,
        complex_spectrum,
        satisfied: lambda_max_real < 1.0,
    })
}

/// Composite closed-loop matrix whose positive definiteness certifies the
/// interconnection; `p1`, `p2` are the *storage* matrices of the two systems
/// (inverse convention relative to [`NiCertificate::p`]).
pub fn block_lyapunov_matrix(
    sys1: &StateSpace,
    p1: &Matrix,
    sys2: &StateSpace,
    p2: &Matrix,
) -> Result<Matrix> {
    let (n1, n2) = (sys1.order(), sys2.order());
    if p1.rows() != n1 || !p1.is_square() || p2.rows() != n2 || !p2.is_square() {
        return Err(Error::DimensionMismatch(
            "storage matrices must match the state dimensions".into(),
        ));
    }
    if sys1.outputs() != sys2.inputs() || sys2.outputs() != sys1.inputs() {
        return Err(Error::DimensionMismatch(
            "systems do not close a loop: port dimensions disagree".into(),
        ));
    }
    let c1 = &sys1.c;
    let c2 = &sys2.c;
    let tl = p1 - &c1.transpose().matmul(&sys2.d).matmul(c1);
    let br = p2 - &c2.transpose().matmul(&sys1.d).matmul(c2);
    let tr = -&c1.transpose().matmul(c2);
    Ok(Matrix::block2x2(&tl, &tr, &tr.transpose(), &br).symmetrize())
}

/// Trajectory-level storage check for a strictly proper LTI system.
///
/// `storage` is the matrix of `V(x) = x^T S x / 2` — the *inverse* of a certificate
/// `P` (see [`NiCertificate::storage_matrix`]). Simulation starts from rest.
pub fn time_domain_ni_check(
    sys: &StateSpace,
    storage: &Matrix,
    input: &Signal,
    t_final: f64,
    dt: f64,
) -> Result<DissipativityReport> {
    if storage.rows() != sys.order() || !storage.is_square() {
        return Err(Error::DimensionMismatch(
            "storage matrix must match the state dimension".into(),
        ));
    }
    let nsys = sys.to_nonlinear()?;
    let v = StorageFunction::quadratic(storage);
    let x0 = vec![0.0; sys.order()];
    let traj = nonlinear::simulate(&nsys, &x0, input, t_final, dt)?;
    Ok(nonlinear::dissipativity_check(&nsys, &v, &traj))
}

/// Rank audit of the auxiliary system attached to a certificate.
#[derive(Debug, Clone)]
pub struct AuxiliaryRankReport {
    /// `W(s) = L P (sI - A)^-1 B + L C^T` where `L^T L = -(A P + P A^T)`;
    /// absent when the Lyapunov residual is zero (lossless case, rank 0).
    pub aux: Option<StateSpace>,
    /// Number of rows of `L` (rank of the Lyapunov residual).
    pub rank: usize,
    pub min_singular_value: f64,
    pub worst_omega: f64,
    /// `W(jw)` retains full column rank across the whole grid.
    pub full_column_rank: bool,
    /// `||L^T L + (A P + P A^T)||_F`; should sit near machine precision.
    pub factor_residual: f64,
}

/// Factor the Lyapunov residual of a certificate and test whether the associated
/// auxiliary transfer matrix keeps full column rank over the grid — the
/// frequency-domain signature separating weak from strict behavior.
pub fn wsnni_auxiliary_system(
    sys: &StateSpace,
    cert_p: &Matrix,
    grid: &FrequencyGrid,
) -> Result<AuxiliaryRankReport> {
    require_io_square(sys)?;
    let n = sys.order();
    if cert_p.rows() != n || !cert_p.is_square() {
        return Err(Error::DimensionMismatch(
            "certificate must match the state dimension".into(),
        ));
    }
    let ap = sys.a.matmul(cert_p);
    let q = (-&(&ap + &ap.transpose())).symmetrize();
    let se = eig::sym_eig(&q)?;
    let lam_max = se.eigenvalues.last().copied().unwrap_or(0.0);
    if se.eigenvalues[0] < -1e-8 * (1.0 + lam_max.abs()) {
        return Err(Error::CertificateInvalid(format!(
            "Lyapunov residual has a negative eigenvalue ({:.3e}); \
             the candidate is not a certificate",
            se.eigenvalues[0]
        )));
    }
    let rank_tol = eig::scaled_tolerance(&se.eigenvalues);
    let kept: Vec<usize> =
        (0..n).filter(|&i| se.eigenvalues[i] > rank_tol).collect();
    let rank = kept.len();
    let l = Matrix::from_fn(rank.max(1), n, |r, j| {
        if r < rank {
            let idx = kept[r];
            se.eigenvalues[idx].sqrt() * se.eigenvectors[(j, idx)]
        } else {
            0.0
        }
    });
    let factor_residual = if rank == 0 {
        q.frobenius_norm()
    } else {
        (&l.transpose().matmul(&l) - &q).frobenius_norm()
    };
    if rank == 0 {
        return Ok(AuxiliaryRankReport {
            aux: None,
            rank: 0,
            min_singular_value: 0.0,
            worst_omega: 0.0,
            full_column_rank: false,
            factor_residual,
        });
    }

    let aux = StateSpace::new(
        sys.a.clone(),
        sys.b.clone(),
        l.matmul(cert_p),
        l.matmul(&sys.c.transpose()),
    )?;
    let responses = freq_sweep(&aux, grid)?;
    let sigmas: Result<Vec<f64>> = crate::exec::map(&responses, |w| {
        Ok(*w.singular_values()?.last().expect("nonempty"))
    })
    .into_iter()
    .collect();
    let (worst_omega, min_singular_value) = grid
        .omegas()
        .iter()
        .copied()
        .zip(sigmas?)
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .expect("grid is non-empty");
    Ok(AuxiliaryRankReport {
        aux: Some(aux),
        rank,
        min_singular_value,
        worst_omega,
        full_column_rank: rank >= sys.inputs() && min_singular_value > 1e-8,
        factor_residual,
    })
}

/// The stock of linear systems used throughout the test and demo suites. All six
/// are negative imaginary with findable certificates.
pub fn builtin_examples() -> Vec<(&'static str, StateSpace)> {
    vec![
        ("first_order_lag", StateSpace::scalar(-1.0, 1.0, 1.0, 0.0)),
        // integral resonant controller gamma / (s + gamma * phi), gamma = 1, phi = 2
        ("integral_resonant", StateSpace::scalar(-2.0, 1.0, 1.0, 0.0)),
        (
            "msd_linearized",
            StateSpace::new(
                Matrix::from_rows(&[vec![0.0, 1.0], vec![-2.0, -1.0]]),
                Matrix::col_vec(&[0.0, 1.0]),
                Matrix::from_rows(&[vec![1.0, 0.0]]),
                Matrix::zeros(1, 1),
            )
            .expect("static dimensions"),
        ),
        (
            "resonant_lag",
            StateSpace::new(
                Matrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, -1.0]]),
                Matrix::col_vec(&[0.0, 1.0]),
                Matrix::from_rows(&[vec![1.0, 0.0]]),
                Matrix::zeros(1, 1),
            )
            .expect("static dimensions"),
        ),
        (
            // (s+1)/(s^2+s+1); this particular coordinate choice gives the
            // state an interpretation as (input filter, lag memory) and is the
            // one the cascade demos expect, so keep it verbatim.
            "lead_lag",
            StateSpace::new(
                Matrix::from_rows(&[vec![-1.0, -1.0], vec![1.0, 0.0]]),
                Matrix::col_vec(&[1.0, 0.0]),
                Matrix::from_rows(&[vec![1.0, 1.0]]),
                Matrix::zeros(1, 1),
            )
            .expect("static dimensions"),
        ),
        ("double_lag", StateSpace::scalar(-3.0, 1.0, 2.0, 0.0)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn first_order_lag() -> StateSpace {
        StateSpace::scalar(-1.0, 1.0, 1.0, 0.0)
    }

    fn lead_lag() -> StateSpace {
        builtin_examples().into_iter().find(|(n, _)| *n == "lead_lag").unwrap().1
    }

    fn lossless_oscillator() -> StateSpace {
        StateSpace::new(
            Matrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]),
            Matrix::col_vec(&[0.0, 1.0]),
            Matrix::from_rows(&[vec![1.0, 0.0]]),
            Matrix::zeros(1, 1),
        )
        .unwrap()
    }

    #[test]
    fn lag_response_at_unit_frequency() {
        // 1/(jw+1) at w=1 is (1-j)/2
        let g = freq_response(&first_order_lag(), 1.0).unwrap();
        assert_abs_diff_eq!(g[(0, 0)].re, 0.5, epsilon = 1e-13);
        assert_abs_diff_eq!(g[(0, 0)].im, -0.5, epsilon = 1e-13);
    }

    #[test]
    fn lead_lag_response_at_unit_frequency() {
        // (s+1)/(s^2+s+1) at s=j collapses to 1-j
        let g = freq_response(&lead_lag(), 1.0).unwrap();
        assert_abs_diff_eq!(g[(0, 0)].re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g[(0, 0)].im, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn standard_grid_shape() {
        let grid = FrequencyGrid::standard();
        assert_eq!(grid.len(), 2000);
        assert_abs_diff_eq!(grid.omegas()[0], 1e-3, epsilon = 1e-15);
        assert_abs_diff_eq!(grid.omegas()[1999], 1e3, epsilon = 1e-9);
        // 2000 log points over six decades never land exactly on w = 1
        assert!(grid.omegas().iter().all(|&w| (w - 1.0).abs() > 1e-3));
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(FrequencyGrid::new(vec![]).is_err());
        assert!(FrequencyGrid::new(vec![1.0, 1.0]).is_err());
        assert!(FrequencyGrid::new(vec![-1.0, 1.0]).is_err());
        assert!(FrequencyGrid::log_space(0.0, 1.0, 10).is_err());
    }

    #[test]
    fn pole_on_grid_is_detected() {
        let grid = FrequencyGrid::new(vec![0.5, 1.0, 2.0]).unwrap();
        match ni_sweep_points(&lossless_oscillator(), &grid) {
            Err(Error::PoleOnGrid { omega, .. }) => assert_abs_diff_eq!(omega, 1.0),
            other => panic!("expected PoleOnGrid, got {other:?}"),
        }
    }

    #[test]
    fn lag_is_ni_with_known_worst_case() {
        // lambda_min(M) = 2w/(1+w^2): smallest at the grid edges
        let report =
            ni_frequency_test(&first_order_lag(), &FrequencyGrid::standard(), DEFAULT_TOL)
                .unwrap();
        assert!(report.is_ni);
        assert!(!report.has_origin_pole && !report.has_rhp_pole);
        let expected = 2e-3 / (1.0 + 1e-6);
        assert_abs_diff_eq!(report.worst_lambda_min, expected, epsilon = 1e-8);
    }

    #[test]
    fn differentiating_lag_is_pr_but_not_ni() {
        // s/(s+1): positive real, yet its imaginary part has the wrong sign
        let sys = StateSpace::scalar(-1.0, 1.0, -1.0, 1.0);
        let grid = FrequencyGrid::standard();
        assert!(pr_frequency_test(&sys, &grid, DEFAULT_TOL).unwrap().is_pr);
        let ni = ni_frequency_test(&sys, &grid, DEFAULT_TOL).unwrap();
        assert!(!ni.is_ni);
        assert!(ni.worst_lambda_min < -0.5);
    }

    #[test]
    fn rhp_pole_refutes_without_error() {
        let sys = StateSpace::scalar(1.0, 1.0, 1.0, 0.0);
        let report =
            ni_frequency_test(&sys, &FrequencyGrid::standard(), DEFAULT_TOL).unwrap();
        assert!(report.has_rhp_pole);
        assert!(!report.is_ni);
    }

    #[test]
    fn axis_pole_aborts_the_sweep() {
        match ni_frequency_test(&lossless_oscillator(), &FrequencyGrid::standard(), 1e-7) {
            Err(Error::ImaginaryAxisPole { omega }) => assert_abs_diff_eq!(omega.abs(), 1.0),
            other => panic!("expected ImaginaryAxisPole, got {other:?}"),
        }
    }

    #[test]
    fn lag_is_sni_and_boundary_cases_are_not() {
        let grid = FrequencyGrid::standard();
        let report = sni_frequency_test(&first_order_lag(), &grid, 0.01).unwrap();
        assert!(report.is_sni, "slack {}", report.worst_slack);

        // not Hurwitz: the lossless oscillator
        assert!(matches!(
            sni_frequency_test(&lossless_oscillator(), &grid, 0.01),
            Err(Error::NotHurwitz { .. })
        ));
    }

    #[test]
    fn high_relative_degree_fails_the_margin_floor_but_not_strictness() {
        // 1/(s^2+s+1) rolls off as w^-3 while the floor decays as w^-1: the margined
        // test is conservative here, the raw strict test is not.
        let resonant = builtin_examples()
            .into_iter()
            .find(|(n, _)| *n == "resonant_lag")
            .unwrap()
            .1;
        let grid = FrequencyGrid::standard();
        assert!(!sni_frequency_test(&resonant, &grid, 0.01).unwrap().is_sni);
        assert!(sni_frequency_test(&resonant, &grid, 0.0).unwrap().is_sni);
    }

    #[test]
    fn integrated_lead_lag_matches_hand_value() {
        // dividing the lead-lag by s gives -1-j at w=1
        let r = ni_from_pr(&lead_lag()).unwrap();
        let g = freq_response(&r, 1.0).unwrap();
        assert_abs_diff_eq!(g[(0, 0)].re, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g[(0, 0)].im, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn integrating_a_pr_system_yields_ni_with_origin_flag() {
        // the lead-lag is PR; G/s then passes the NI sweep with an origin pole
        let grid = FrequencyGrid::standard();
        assert!(pr_frequency_test(&lead_lag(), &grid, DEFAULT_TOL).unwrap().is_pr);
        let r = ni_from_pr(&lead_lag()).unwrap();
        let report = ni_frequency_test(&r, &grid, DEFAULT_TOL).unwrap();
        assert!(report.is_ni);
        assert!(report.has_origin_pole);
    }

    #[test]
    fn differentiation_transform_round_trips() {
        // s * (1/(s+1)) integrated back down restores 1/(s+1)
        let lag = first_order_lag();
        let up = pr_from_ni(&lag).unwrap();
        assert_abs_diff_eq!(up.d[(0, 0)], 1.0); // CB
        assert_abs_diff_eq!(up.c[(0, 0)], -1.0); // CA
        let back = ni_from_pr(&up).unwrap();
        for &w in &[0.1, 1.0, 7.3] {
            let g1 = freq_response(&lag, w).unwrap()[(0, 0)];
            let g2 = freq_response(&back, w).unwrap()[(0, 0)];
            assert_abs_diff_eq!(g1.re, g2.re, epsilon = 1e-12);
            assert_abs_diff_eq!(g1.im, g2.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn scalar_certificate_is_found_directly() {
        let cert = search_certificate(&first_order_lag(), 5000, DEFAULT_TOL).unwrap();
        assert!(cert.valid);
        assert_abs_diff_eq!(cert.p[(0, 0)], 1.0, epsilon = 1e-9);
        assert!(cert.residual_affine <= 1e-12);
        assert_abs_diff_eq!(cert.lambda_max_lyap, -2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(cert.lambda_min_p, 1.0, epsilon = 1e-9);
        // full dissipation LMI: eigenvalues {0, -4}, max 0
        assert_abs_diff_eq!(cert.storage_lmi_lambda_max, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn boundary_certificates_are_recovered() {
        // each of these has a *unique* valid P sitting on the semidefinite boundary
        let cases: Vec<(StateSpace, Matrix)> = vec![
            (lossless_oscillator(), Matrix::identity(2)),
            (
                builtin_examples()
                    .into_iter()
                    .find(|(n, _)| *n == "msd_linearized")
                    .unwrap()
                    .1,
                Matrix::diag(&[0.5, 1.0]),
            ),
            (
                builtin_examples()
                    .into_iter()
                    .find(|(n, _)| *n == "resonant_lag")
                    .unwrap()
                    .1,
                Matrix::identity(2),
            ),
            (
                lead_lag(),
                Matrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 2.0]]),
            ),
        ];
        for (sys, expected) in cases {
            let cert = search_certificate(&sys, 5000, DEFAULT_TOL).unwrap();
            assert!(cert.valid);
            // the boundary coordinate is pinned only up to sqrt(2 tol) ~ 6e-4, since
            // lambda_max of the Lyapunov residual grows quadratically off the optimum
            assert!(
                (&cert.p - &expected).max_abs() < 1e-3,
                "found {:?}, expected {:?}",
                cert.p,
                expected
            );
        }
    }

    #[test]
    fn negated_lag_has_no_certificate() {
        let sys = StateSpace::scalar(-1.0, 1.0, -1.0, 0.0);
        assert!(matches!(
            search_certificate(&sys, 5000, DEFAULT_TOL),
            Err(Error::CertificateNotFound)
        ));
    }

    #[test]
    fn integrator_affine_constraint_is_infeasible() {
        // A = 0 makes the affine constraint read B = 0, which is false; the
        // search must report that rather than reject singular A out of hand.
        let integrator = StateSpace::scalar(0.0, 1.0, 1.0, 0.0);
        assert!(matches!(
            search_certificate(&integrator, 5000, DEFAULT_TOL),
            Err(Error::CertificateNotFound)
        ));
    }

    #[test]
    fn cancelled_origin_mode_still_certifies() {
        // Append an output integrator to s (s+1)/(s^2+s+1); the extra state is
        // a zero eigenvalue of A that cancels in the transfer function, and a
        // hand-checkable certificate survives: P = [[1,-1,0],[-1,2,1],[0,1,w]]
        // for any w > 1 satisfies the affine identity with Lyapunov residual
        // eigenvalues {0, 0, -4}.
        let f = pr_from_ni(&lead_lag()).unwrap();
        let g = ni_from_pr(&f).unwrap();
        let cert = search_certificate(&g, 5000, DEFAULT_TOL).unwrap();
        assert!(cert.valid);
        assert_abs_diff_eq!(cert.p[(0, 1)], -1.0, epsilon = 1e-3);
        assert_abs_diff_eq!(cert.p[(1, 2)], 1.0, epsilon = 1e-3);
    }

    #[test]
    fn all_builtin_examples_certify() {
        for (name, sys) in builtin_examples() {
            let cert = search_certificate(&sys, 5000, DEFAULT_TOL)
                .unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(cert.valid, "{name}");
            assert!(cert.lambda_max_lyap <= DEFAULT_TOL, "{name}");
            assert!(
                cert.storage_lmi_lambda_max <= 1e-6,
                "{name}: LMI diagnostic {}",
                cert.storage_lmi_lambda_max
            );
        }
    }

    #[test]
    fn oversized_certificate_is_rejected_with_numbers() {
        let cert =
            verify_certificate(&first_order_lag(), &Matrix::diag(&[100.0]), DEFAULT_TOL)
                .unwrap();
        assert!(!cert.valid);
        assert_abs_diff_eq!(cert.residual_affine, 99.0, epsilon = 1e-12);
    }

    #[test]
    fn time_domain_check_accepts_true_storage_and_refutes_wrong_one() {
        let sys = first_order_lag();
        let input = Signal::Sine { amplitude: vec![1.0], omega: 1.0, phase: 0.0 };
        // valid certificate P = 1 -> storage matrix P^-1 = 1
        let ok = time_domain_ni_check(&sys, &Matrix::diag(&[1.0]), &input, 30.0, 1e-3)
            .unwrap();
        assert!(ok.max_violation <= 1e-10, "violation {}", ok.max_violation);
        assert!(ok.integral_slack >= -1e-8);
        // storage inflated a hundredfold must show a violation
        let bad = time_domain_ni_check(&sys, &Matrix::diag(&[100.0]), &input, 30.0, 1e-3)
            .unwrap();
        assert!(bad.max_violation > 1.0, "violation {}", bad.max_violation);
    }

    #[test]
    fn dc_gain_values_are_exact() {
        let lag = first_order_lag();
        let irc = StateSpace::scalar(-2.0, 1.0, 1.0, 0.0);
        assert_abs_diff_eq!(lag.dc_gain().unwrap()[(0, 0)], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(irc.dc_gain().unwrap()[(0, 0)], 0.5, epsilon = 1e-14);
        let report = dc_gain_condition(&lag, &irc).unwrap();
        assert!(report.satisfied && !report.complex_spectrum);
        assert_abs_diff_eq!(report.lambda_max_real, 0.5, epsilon = 1e-14);

        let msd = builtin_examples()
            .into_iter()
            .find(|(n, _)| *n == "msd_linearized")
            .unwrap()
            .1;
        let report = dc_gain_condition(&msd, &irc).unwrap();
        assert_abs_diff_eq!(report.lambda_max_real, 0.25, epsilon = 1e-14);
    }

    #[test]
    fn dc_gain_condition_boundary_matches_block_matrix_rank() {
        // identical lags close the loop exactly at gain one: the composite matrix
        // goes singular precisely when the DC condition hits its boundary
        let lag = first_order_lag();
        let report = dc_gain_condition(&lag, &lag).unwrap();
        assert_abs_diff_eq!(report.lambda_max_real, 1.0, epsilon = 1e-14);
        assert!(!report.satisfied);
        let s = Matrix::diag(&[1.0]); // storage matrix of the lag certificate
        let block = block_lyapunov_matrix(&lag, &s, &lag, &s).unwrap();
        let eigs = eig::sym_eig(&block).unwrap().eigenvalues;
        assert_abs_diff_eq!(eigs[0], 0.0, epsilon = 1e-12);

        // against the integral resonant stage the condition holds strictly and the
        // block matrix is positive definite
        let irc = StateSpace::scalar(-2.0, 1.0, 1.0, 0.0);
        let s2 = Matrix::diag(&[2.0]);
        let block = block_lyapunov_matrix(&lag, &s, &irc, &s2).unwrap();
        let eigs = eig::sym_eig(&block).unwrap().eigenvalues;
        assert!(eigs[0] > 0.3, "lambda_min {}", eigs[0]);
    }

    #[test]
    fn auxiliary_system_of_the_lag_keeps_full_rank() {
        let sys = first_order_lag();
        let cert = search_certificate(&sys, 5000, DEFAULT_TOL).unwrap();
        let report =
            wsnni_auxiliary_system(&sys, &cert.p, &FrequencyGrid::standard()).unwrap();
        assert_eq!(report.rank, 1);
        assert!(report.factor_residual < 1e-12);
        assert!(report.full_column_rank);
        // |W(jw)| = sqrt(2) sqrt((w^2+4)/(w^2+1)) > sqrt(2), worst at the top edge
        assert!(report.min_singular_value > 1.41);
        assert!(report.worst_omega > 900.0);
    }

    #[test]
    fn lossless_certificate_has_rank_zero_residual() {
        let sys = lossless_oscillator();
        let cert = search_certificate(&sys, 5000, DEFAULT_TOL).unwrap();
        let report =
            wsnni_auxiliary_system(&sys, &cert.p, &FrequencyGrid::standard()).unwrap();
        assert_eq!(report.rank, 0);
        assert!(report.aux.is_none());
        assert!(!report.full_column_rank);
        assert!(report.factor_residual < 1e-9);
    }

    #[test]
    fn certificate_search_rejects_non_square_systems() {
        let wide = StateSpace::new(
            Matrix::diag(&[-1.0]),
            Matrix::from_rows(&[vec![1.0, 0.0]]),
            Matrix::from_rows(&[vec![1.0]]),
            Matrix::zeros(1, 2),
        )
        .unwrap();
        assert!(matches!(
            search_certificate(&wide, 100, DEFAULT_TOL),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
