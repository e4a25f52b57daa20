//! Companion-matrix eigenvalues, used as the fallback and cross-check root method.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

/// Eigenvalues of the balanced companion matrix of `coeffs` (constant term
/// first). `None` if the Schur iteration does not converge.
pub(crate) fn companion_roots(coeffs: &[f64], max_iters: usize) -> Option<Vec<Complex64>> {
    let degree = coeffs.len() - 1;
    let lead = coeffs[degree];
    if degree == 1 {
        return Some(vec![Complex64::new(-coeffs[0] / lead, 0.0)]);
    }
    let mut c = DMatrix::<f64>::zeros(degree, degree);
    for i in 1..degree {
        c[(i, i - 1)] = 1.0;
    }
    for i in 0..degree {
        c[(i, degree - 1)] = -coeffs[i] / lead;
    }
    balance(&mut c);
    let schur = Schur::try_new(c, f64::EPSILON, max_iters.max(1) * degree)?;
    let eig = schur.complex_eigenvalues();
    Some(eig.iter().copied().collect())
}

/// Parlett–Reinsch diagonal similarity scaling by powers of two.
fn balance(a: &mut DMatrix<f64>) {
    const RADIX: f64 = 2.0;
    let n = a.nrows();
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let mut col = 0.0;
            let mut row = 0.0;
            for j in 0..n {
                if j != i {
                    col += a[(j, i)].abs();
                    row += a[(i, j)].abs();
                }
            }
            if col == 0.0 || row == 0.0 {
                continue;
            }
            let total = col + row;
            let mut f = 1.0;
            let mut g = row / RADIX;
            while col < g {
                f *= RADIX;
                col *= RADIX * RADIX;
            }
            g = row * RADIX;
            while col > g {
                f /= RADIX;
                col /= RADIX * RADIX;
            }
            if (col + row) / f < 0.95 * total {
                converged = false;
                let inv = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= inv;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}
