//! Small dense complex linear algebra: just enough for subspace methods.
//!
//! The eigensolver is a cyclic Jacobi iteration on Hermitian matrices. Each
//! 2x2 pivot block is phased into a real symmetric block and annihilated with
//! a Givens rotation; convergence is quadratic once the off-diagonal mass is
//! small.

use num_complex::Complex64;

/// Eigendecomposition of a Hermitian matrix.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvalues sorted ascending
/// and `eigenvectors[k]` the unit-norm eigenvector of `eigenvalues[k]`.
///
/// Panics if the matrix is empty or not square. Entries are assumed
/// Hermitian; only their Hermitian part is meaningful.
pub fn eigh(matrix: &[Vec<Complex64>]) -> (Vec<f64>, Vec<Vec<Complex64>>) {
    let n = matrix.len();
    assert!(n > 0, "empty matrix");
    assert!(matrix.iter().all(|row| row.len() == n), "matrix not square");

    let mut a: Vec<Vec<Complex64>> = matrix.to_vec();
    let mut v: Vec<Vec<Complex64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        Complex64::new(1.0, 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .collect()
        })
        .collect();

    let frob: f64 = a
        .iter()
        .flat_map(|row| row.iter())
        .map(|z| z.norm_sqr())
        .sum::<f64>()
        .sqrt();
    let stop = (frob * 1e-15).max(f64::MIN_POSITIVE);
    let skip = frob * 1e-18 / n as f64;

    for _sweep in 0..60 {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p][q].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off < stop {
            break;
        }

        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[p][q];
                let abs_apq = apq.norm();
                if abs_apq <= skip {
                    continue;
                }

                let app = a[p][p].re;
                let aqq = a[q][q].re;
                let phi = apq.arg();

                // tan(theta) for the real rotation that kills |apq|.
                let tau = (aqq - app) / (2.0 * abs_apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                let e_mjphi = Complex64::from_polar(1.0, -phi);
                let e_pjphi = Complex64::from_polar(1.0, phi);

                // A <- U^H A U with U = diag(1, e^{-j phi}) * G(c, s).
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * e_mjphi * akq;
                    a[k][q] = s * akp + c * e_mjphi * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * e_pjphi * aqk;
                    a[q][k] = s * apk + c * e_pjphi * aqk;
                }
                a[p][q] = Complex64::new(0.0, 0.0);
                a[q][p] = Complex64::new(0.0, 0.0);
                a[p][p] = Complex64::new(a[p][p].re, 0.0);
                a[q][q] = Complex64::new(a[q][q].re, 0.0);

                for k in 0..n {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * e_mjphi * vkq;
                    v[k][q] = s * vkp + c * e_mjphi * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i][i].re.partial_cmp(&a[j][j].re).unwrap());

    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[i][i].re).collect();
    let eigenvectors: Vec<Vec<Complex64>> = order
        .iter()
        .map(|&col| (0..n).map(|row| v[row][col]).collect())
        .collect();
    (eigenvalues, eigenvectors)
}

/// Inner product `x^H y`.
pub fn hdot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}
