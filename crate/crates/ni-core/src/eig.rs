//! Eigenvalue and least-squares machinery.
//!
//! * [`sym_eig`] — cyclic Jacobi rotations for symmetric matrices. Convergence is
//!   declared when the off-diagonal Frobenius norm drops below `1e-12` times the
//!   Frobenius norm of the input, capped at 100 sweeps. At the state dimensions
//!   handled here this is both fast and accurate to machine precision, and keeps the
//!   definiteness tests free of external dependencies.
//! * [`definiteness`] — eigenvalue-based classification with an explicit tolerance;
//!   use [`scaled_tolerance`] for the crate-wide default `1e-9 * (1 + max |lambda|)`.
//! * [`Svd`] / [`lstsq`] — one-sided Jacobi (Hestenes) SVD giving minimum-norm
//!   least-squares solutions plus an orthonormal nullspace basis; the certificate
//!   search builds on this.
//! * [`eigenvalues`] — general (non-symmetric) spectra via the characteristic
//!   polynomial (Faddeev–LeVerrier) and Durand–Kerner root iteration. Only used for
//!   pole location at small dimension.

use crate::error::{Error, Result};
use crate::mat::Matrix;
use num_complex::Complex64;

/// Result of [`sym_eig`]: eigenvalues ascending, eigenvectors as the corresponding
/// columns of an orthogonal matrix.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

/// Relative symmetry defect above which [`sym_eig`] refuses its input.
const SYMMETRY_REJECT: f64 = 1e-9;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Inputs with relative asymmetry above `1e-9` are rejected with
/// [`Error::NotSymmetric`]; smaller defects are symmetrized away before iterating.
pub fn sym_eig(s: &Matrix) -> Result<SymEig> {
    if !s.is_square() {
        return Err(Error::NonSquare { rows: s.rows(), cols: s.cols() });
    }
    let defect = s.symmetry_defect();
    if defect > SYMMETRY_REJECT * (1.0 + s.max_abs()) {
        return Err(Error::NotSymmetric { defect });
    }
    let n = s.rows();
    let mut a = s.symmetrize();
    let mut v = Matrix::identity(n);
    let target = 1e-12 * s.frobenius_norm();

    for _sweep in 0..100 {
        if off_diagonal_norm(&a) <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                // Classic two-sided rotation choosing the smaller angle root.
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let eigenvectors = Matrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(SymEig { eigenvalues, eigenvectors })
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Sign classification of a symmetric matrix at a given tolerance.
///
/// A matrix whose spectrum lies inside `[-tol, tol]` (numerically zero) is reported
/// as positive semidefinite; it is of course also negative semidefinite, and the
/// [`is_nsd`] / [`is_psd`] predicates treat it accordingly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Definiteness {
    PositiveDefinite,
    PositiveSemidefinite,
    Indefinite,
    NegativeSemidefinite,
    NegativeDefinite,
}

pub fn definiteness(s: &Matrix, tol: f64) -> Result<Definiteness> {
    let eig = sym_eig(s)?;
    let lo = eig.eigenvalues[0];
    let hi = *eig.eigenvalues.last().unwrap();
    Ok(if lo > tol {
        Definiteness::PositiveDefinite
    } else if hi < -tol {
        Definiteness::NegativeDefinite
    } else if lo >= -tol {
        Definiteness::PositiveSemidefinite
    } else if hi <= tol {
        Definiteness::NegativeSemidefinite
    } else {
        Definiteness::Indefinite
    })
}

/// Crate-wide default definiteness tolerance: `1e-9 * (1 + max |lambda|)`.
pub fn scaled_tolerance(eigenvalues: &[f64]) -> f64 {
    let m = eigenvalues.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    1e-9 * (1.0 + m)
}

pub fn is_psd(s: &Matrix, tol: f64) -> Result<bool> {
    Ok(sym_eig(s)?.eigenvalues[0] >= -tol)
}

pub fn is_nsd(s: &Matrix, tol: f64) -> Result<bool> {
    Ok(*sym_eig(s)?.eigenvalues.last().unwrap() <= tol)
}

/// Thin SVD `A = U diag(sigma) V^T` via one-sided Jacobi orthogonalization of the
/// columns of `A`. Singular values are returned descending. `u` has the shape of
/// `A`; columns whose singular value is (numerically) zero carry no meaning.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

pub fn svd(a: &Matrix) -> Svd {
    let m = a.rows();
    let n = a.cols();
    let mut w = a.clone(); // columns get rotated in place
    let mut v = Matrix::identity(n);
    let eps = 1e-15;
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for i in 0..m {
                    alpha += w[(i, p)] * w[(i, p)];
                    beta += w[(i, q)] * w[(i, q)];
                    gamma += w[(i, p)] * w[(i, q)];
                }
                if gamma.abs() <= eps * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..m {
                    let wip = w[(i, p)];
                    let wiq = w[(i, q)];
                    w[(i, p)] = c * wip - s * wiq;
                    w[(i, q)] = s * wip + c * wiq;
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = c * vip - s * viq;
                    v[(i, q)] = s * vip + c * viq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    // Column norms are the singular values; sort descending.
    let mut sigma: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| w[(i, j)] * w[(i, j)]).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap());
    let mut u = Matrix::zeros(m, n);
    let mut vs = Matrix::zeros(n, n);
    for (jj, &j) in order.iter().enumerate() {
        let s = sigma[j];
        for i in 0..m {
            u[(i, jj)] = if s > 0.0 { w[(i, j)] / s } else { 0.0 };
        }
        for i in 0..n {
            vs[(i, jj)] = v[(i, j)];
        }
    }
    sigma.sort_by(|x, y| y.partial_cmp(x).unwrap());
    Svd { u, sigma, v: vs }
}

/// Minimum-norm least-squares solution of `A x = b`.
#[derive(Debug, Clone)]
pub struct Lstsq {
    pub x: Vec<f64>,
    /// `||A x - b||_2` at the returned solution.
    pub residual: f64,
    pub rank: usize,
    /// Orthonormal basis of the (numerical) nullspace of `A`, one column per vector.
    /// Empty (0 columns encoded as `None`) when `A` has full column rank.
    pub nullspace: Option<Matrix>,
}

pub fn lstsq(a: &Matrix, b: &[f64]) -> Lstsq {
    lstsq_with_tol(a, b, 1e-10)
}

/// As [`lstsq`] with an explicit relative rank cutoff: singular values at or below
/// `rel_tol * sigma_max` count as zero.
pub fn lstsq_with_tol(a: &Matrix, b: &[f64], rel_tol: f64) -> Lstsq {
    assert_eq!(a.rows(), b.len(), "lstsq shape mismatch");
    let n = a.cols();
    let dec = svd(a);
    let smax = dec.sigma.first().copied().unwrap_or(0.0);
    let cutoff = rel_tol * smax;
    let mut x = vec![0.0; n];
    let mut rank = 0;
    for (k, &s) in dec.sigma.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        rank += 1;
        let proj = crate::mat::dot(&dec.u.column(k), b) / s;
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += proj * dec.v[(i, k)];
        }
    }
    let r: Vec<f64> =
        a.matvec(&x).iter().zip(b).map(|(ax, bi)| ax - bi).collect();
    let nullspace = if rank < n {
        Some(Matrix::from_fn(n, n - rank, |i, j| dec.v[(i, rank + j)]))
    } else {
        None
    };
    Lstsq { x, residual: crate::mat::norm2(&r), rank, nullspace }
}

/// Eigenvalues of a general real square matrix.
///
/// Coefficients of the characteristic polynomial come from the Faddeev–LeVerrier
/// recurrence; roots from Durand–Kerner iteration with a Cauchy-bound start. Fine at
/// the dimensions used here (n <= 10); not a general-purpose QR replacement.
pub fn eigenvalues(a: &Matrix) -> Result<Vec<Complex64>> {
    if !a.is_square() {
        return Err(Error::NonSquare { rows: a.rows(), cols: a.cols() });
    }
    let n = a.rows();
    // c[k] multiplies lambda^k in p(lambda) = lambda^n + c[n-1] lambda^(n-1) + ... + c[0]
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut m = Matrix::identity(n);
    for k in 1..=n {
        let am = a.matmul(&m);
        let tr: f64 = (0..n).map(|i| am[(i, i)]).sum();
        c[n - k] = -tr / k as f64;
        m = &am + &Matrix::identity(n).scale(c[n - k]);
    }
    Ok(poly_roots(&c))
}

/// Durand–Kerner roots of a monic polynomial given coefficients `c[0] + c[1] x + ...
/// + c[n] x^n` with `c[n] = 1`.
fn poly_roots(c: &[f64]) -> Vec<Complex64> {
    let n = c.len() - 1;
    if n == 0 {
        return vec![];
    }
    let radius = 1.0 + c[..n].iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let seed = Complex64::new(0.4, 0.9); // standard non-real starting ratio
    let mut z: Vec<Complex64> = (0..n).map(|k| radius * seed.powu(k as u32 + 1)).collect();
    let eval = |x: Complex64| -> Complex64 {
        let mut p = Complex64::new(c[n], 0.0);
        for k in (0..n).rev() {
            p = p * x + c[k];
        }
        p
    };
    for _ in 0..500 {
        let mut max_step = 0.0_f64;
        for i in 0..n {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    denom *= z[i] - z[j];
                }
            }
            if denom.norm() == 0.0 {
                // coincident iterates: nudge and continue
                z[i] += Complex64::new(1e-8, 1e-8);
                continue;
            }
            let step = eval(z[i]) / denom;
            z[i] -= step;
            max_step = max_step.max(step.norm() / (1.0 + z[i].norm()));
        }
        if max_step < 1e-15 {
            break;
        }
    }
    // Conjugate-pair cleanup: real coefficients mean the spectrum is closed under
    // conjugation, so tiny imaginary parts are rounding noise.
    for zi in z.iter_mut() {
        if zi.im.abs() < 1e-10 * (1.0 + zi.re.abs()) {
            zi.im = 0.0;
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_unit_eigenvalues() {
        let e = sym_eig(&Matrix::identity(3)).unwrap();
        for v in e.eigenvalues {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn diagonal_eigenvalues_sort_ascending() {
        let e = sym_eig(&Matrix::diag(&[2.0, -1.0])).unwrap();
        assert_eq!(e.eigenvalues, vec![-1.0, 2.0]);
    }

    #[test]
    fn two_by_two_hand_computed_spectrum() {
        // [[2,1],[1,2]]: char poly (2-l)^2 - 1, roots 1 and 3.
        let s = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let e = sym_eig(&s).unwrap();
        assert!((e.eigenvalues[0] - 1.0).abs() < 1e-12);
        assert!((e.eigenvalues[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn eigenvectors_reconstruct_the_matrix() {
        let s = Matrix::from_rows(&[
            vec![4.0, 1.0, -2.0],
            vec![1.0, 2.0, 0.0],
            vec![-2.0, 0.0, 3.0],
        ]);
        let e = sym_eig(&s).unwrap();
        let lam = Matrix::diag(&e.eigenvalues);
        let rec = &(&e.eigenvectors * &lam) * &e.eigenvectors.transpose();
        assert!((&rec - &s).max_abs() < 1e-12);
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let s = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]);
        assert!(matches!(sym_eig(&s), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn definiteness_classification() {
        let tol = 1e-9;
        assert_eq!(definiteness(&Matrix::identity(2), tol).unwrap(), Definiteness::PositiveDefinite);
        assert_eq!(
            definiteness(&Matrix::identity(2).scale(-1.0), tol).unwrap(),
            Definiteness::NegativeDefinite
        );
        assert_eq!(
            definiteness(&Matrix::diag(&[1.0, -1.0]), tol).unwrap(),
            Definiteness::Indefinite
        );
        assert_eq!(
            definiteness(&Matrix::diag(&[1.0, 0.0]), tol).unwrap(),
            Definiteness::PositiveSemidefinite
        );
        assert_eq!(
            definiteness(&Matrix::diag(&[-1.0, 0.0]), tol).unwrap(),
            Definiteness::NegativeSemidefinite
        );
        // numerically zero matrix: PSD by convention, NSD by predicate
        let z = Matrix::zeros(2, 2);
        assert_eq!(definiteness(&z, tol).unwrap(), Definiteness::PositiveSemidefinite);
        assert!(is_nsd(&z, tol).unwrap());
        assert!(is_psd(&z, tol).unwrap());
    }

    #[test]
    fn lstsq_overdetermined_hand_value() {
        // A = [1; 1], b = (0, 2): normal equations give x = 1.
        let a = Matrix::from_rows(&[vec![1.0], vec![1.0]]);
        let sol = lstsq(&a, &[0.0, 2.0]);
        assert!((sol.x[0] - 1.0).abs() < 1e-12);
        assert_eq!(sol.rank, 1);
        assert!(sol.nullspace.is_none());
        assert!((sol.residual - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn lstsq_zero_matrix_gives_min_norm_zero() {
        let a = Matrix::zeros(2, 1);
        let sol = lstsq(&a, &[1.0, 1.0]);
        assert_eq!(sol.x, vec![0.0]);
        assert_eq!(sol.rank, 0);
        assert_eq!(sol.nullspace.as_ref().unwrap().cols(), 1);
    }

    #[test]
    fn lstsq_underdetermined_returns_min_norm() {
        // x1 + x2 = 2: min-norm solution (1, 1).
        let a = Matrix::from_rows(&[vec![1.0, 1.0]]);
        let sol = lstsq(&a, &[2.0]);
        assert!((sol.x[0] - 1.0).abs() < 1e-12);
        assert!((sol.x[1] - 1.0).abs() < 1e-12);
        let ns = sol.nullspace.unwrap();
        assert_eq!(ns.cols(), 1);
        // nullspace vector is +-(1,-1)/sqrt(2)
        assert!((ns[(0, 0)] + ns[(1, 0)]).abs() < 1e-12);
    }

    #[test]
    fn general_eigenvalues_of_companion_like_matrix() {
        // [[0,1],[-2,-3]] has char poly s^2 + 3 s + 2 = (s+1)(s+2).
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![-2.0, -3.0]]);
        let mut eig = eigenvalues(&a).unwrap();
        eig.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap());
        assert!((eig[0].re + 2.0).abs() < 1e-10 && eig[0].im.abs() < 1e-10);
        assert!((eig[1].re + 1.0).abs() < 1e-10 && eig[1].im.abs() < 1e-10);
    }

    #[test]
    fn general_eigenvalues_complex_pair() {
        // [[0,1],[-1,-1]]: s^2 + s + 1, roots -1/2 +- j sqrt(3)/2.
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, -1.0]]);
        let eig = eigenvalues(&a).unwrap();
        for z in eig {
            assert!((z.re + 0.5).abs() < 1e-10);
            assert!((z.im.abs() - 3.0_f64.sqrt() / 2.0).abs() < 1e-10);
        }
    }
}
