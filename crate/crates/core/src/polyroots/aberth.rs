//! Aberth–Ehrlich simultaneous iteration.

use std::f64::consts::PI;

use num_complex::Complex64;

/// Angle offset applied to the initial circle so that no guess sits on the
/// real axis or on a symmetry line of the polynomial.
const ANGLE_OFFSET: f64 = 0.4;

pub(crate) struct AberthOutcome {
    pub roots: Vec<Complex64>,
    pub converged: bool,
}

/// Evenly spaced guesses on the circle of radius `|c_0 / c_n|^{1/n}`.
pub(crate) fn initial_guesses(coeffs: &[f64]) -> Vec<Complex64> {
    let degree = coeffs.len() - 1;
    let c0 = coeffs[0].abs();
    let radius = if c0 > 0.0 {
        (c0 / coeffs[degree].abs()).powf(1.0 / degree as f64)
    } else {
        1.0
    };
    (0..degree)
        .map(|j| Complex64::from_polar(radius, 2.0 * PI * j as f64 / degree as f64 + ANGLE_OFFSET))
        .collect()
}

fn eval_with_derivative(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64, f64) {
    let mut value = Complex64::new(0.0, 0.0);
    let mut deriv = Complex64::new(0.0, 0.0);
    let mut bound = 0.0;
    let az = z.norm();
    for &c in coeffs.iter().rev() {
        deriv = deriv * z + value;
        value = value * z + c;
        bound = bound * az + c.abs();
    }
    (value, deriv, bound)
}

pub(crate) fn aberth_ehrlich(
    coeffs: &[f64],
    mut roots: Vec<Complex64>,
    max_iters: usize,
) -> AberthOutcome {
    let degree = roots.len();
    let eps = f64::EPSILON;
    let mut done = vec![false; degree];
    let mut iterations = 0;

    while iterations < max_iters && done.iter().any(|d| !d) {
        iterations += 1;
        for j in 0..degree {
            if done[j] {
                continue;
            }
            let z = roots[j];
            let (value, deriv, bound) = eval_with_derivative(coeffs, z);
            // value is zero to working precision
            if value.norm() <= 4.0 * eps * bound {
                done[j] = true;
                continue;
            }
            let ratio = value / deriv;
            let repulsion: Complex64 = roots
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != j)
                .map(|(_, &zi)| (z - zi).inv())
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if !step.re.is_finite() || !step.im.is_finite() {
                continue;
            }
            roots[j] = z - step;
            if step.norm() <= 4.0 * eps * roots[j].norm() {
                done[j] = true;
            }
        }
    }

    AberthOutcome {
        converged: done.iter().all(|&d| d),
        roots,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_with_known_roots() {
        // (x - 1)(x + 2)(x - 3) = x^3 - 2x^2 - 5x + 6
        let coeffs = [6.0, -5.0, -2.0, 1.0];
        let out = aberth_ehrlich(&coeffs, initial_guesses(&coeffs), 200);
        assert!(out.converged);
        let mut re: Vec<f64> = out.roots.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        for (got, want) in re.iter().zip([-2.0, 1.0, 3.0]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        assert!(out.roots.iter().all(|z| z.im.abs() < 1e-12));
    }

    #[test]
    fn guesses_avoid_real_axis() {
        let coeffs = [-1.0, 0.0, 0.0, 1.0, 1.0];
        let g = initial_guesses(&coeffs);
        assert_eq!(g.len(), 4);
        assert!(g.iter().all(|z| z.im.abs() > 0.1 && (z.norm() - 1.0).abs() < 1e-15));
    }
}
