//! The blowup family: parameters, fan, mirror Laurent polynomial and the
//! closed-form objects derived from it.
//!
//! A family member is the blowup of `P^n` along a linear `P^r`. Throughout,
//! `m = n - r - 1` and `k = r + 1`, so `m + k = n` and both are at least one.
//! The critical points of the mirror polynomial are parameterised by the roots
//! of the univariate [`reduced_polynomial`] `u(x) = x^{m+1}(x^{m+1}+x)^k - 1`,
//! and [`critical_value_g`] maps a root to its critical value.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynomial::DensePolynomial;

/// Integers identifying one member of the blowup family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FamilyParams {
    pub n: u32,
    pub r: u32,
    pub m: u32,
    pub k: u32,
    /// Fano index, `gcd(m, k + 1)`.
    pub rho: u32,
}

impl FamilyParams {
    /// Parameters from the ambient dimension `n` and the blown-up `P^r`.
    pub fn from_nr(n: i64, r: i64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("n = {n} violates n >= 2")));
        }
        if r < 0 {
            return Err(Error::Domain(format!("r = {r} violates r >= 0")));
        }
        if r > n - 2 {
            return Err(Error::Domain(format!(
                "r = {r} violates r <= n - 2 = {} (m = n - r - 1 = {} must be >= 1)",
                n - 2,
                n - r - 1
            )));
        }
        let m = n - r - 1;
        let k = r + 1;
        Self::from_mk(m, k)
    }

    /// Parameters from `(m, k)` directly.
    pub fn from_mk(m: i64, k: i64) -> Result<Self> {
        if m < 1 {
            return Err(Error::Domain(format!("m = {m} violates m >= 1")));
        }
        if k < 1 {
            return Err(Error::Domain(format!("k = {k} violates k >= 1")));
        }
        let (m, k) = match (u32::try_from(m), u32::try_from(k)) {
            (Ok(m), Ok(k)) if m.checked_add(k).is_some() => (m, k),
            _ => return Err(Error::Domain(format!("(m, k) = ({m}, {k}) out of range"))),
        };
        let p = FamilyParams {
            n: m + k,
            r: k - 1,
            m,
            k,
            rho: m.gcd(&(k + 1)),
        };
        p.check_fano_divisibility()?;
        Ok(p)
    }

    /// Degree of the reduced polynomial, `(m+1)(k+1)`.
    pub fn degree(&self) -> usize {
        (self.m as usize + 1) * (self.k as usize + 1)
    }

    /// Checks `m | (k+1)d  =>  m | rho*d` for every `d` in `[0, m)`.
    ///
    /// This is the divisibility the Fano index has to carry for the
    /// roots-of-unity statement; a failure means `rho` is wrong, and the
    /// caller must stop rather than adjust it.
    pub fn check_fano_divisibility(&self) -> Result<()> {
        let m = u64::from(self.m);
        let k1 = u64::from(self.k) + 1;
        let rho = u64::from(self.rho);
        if m % rho != 0 || k1 % rho != 0 {
            return Err(Error::InternalConsistency(format!(
                "rho = {rho} does not divide both m = {m} and k + 1 = {k1}"
            )));
        }
        for d in 0..m {
            if (k1 * d) % m == 0 && (rho * d) % m != 0 {
                return Err(Error::InternalConsistency(format!(
                    "m | (k+1)d holds but m | rho*d fails for m = {m}, k = {}, d = {d}, rho = {rho}",
                    self.k
                )));
            }
        }
        Ok(())
    }
}

/// `FamilyParams` for `(n, r)`; see [`FamilyParams::from_nr`].
pub fn derive_params(n: i64, r: i64) -> Result<FamilyParams> {
    FamilyParams::from_nr(n, r)
}

/// A monomial `x^b` of the mirror, stored as its exponent vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LaurentMonomial {
    pub exponents: Vec<i64>,
}

impl LaurentMonomial {
    pub fn eval(&self, x: &[Complex64]) -> Complex64 {
        self.exponents
            .iter()
            .zip(x)
            .fold(Complex64::new(1.0, 0.0), |acc, (&e, &xi)| {
                acc * xi.powi(e as i32)
            })
    }
}

/// Sum of monomials with unit coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MirrorPolynomial {
    pub terms: Vec<LaurentMonomial>,
    pub dimension: usize,
}

impl MirrorPolynomial {
    pub fn eval(&self, x: &[Complex64]) -> Complex64 {
        debug_assert_eq!(x.len(), self.dimension);
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    pub fn eval_real(&self, x: &[f64]) -> f64 {
        let z: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.eval(&z).re
    }

    /// Exponent vectors, sorted, for multiset comparison.
    pub fn exponent_multiset(&self) -> Vec<Vec<i64>> {
        let mut out: Vec<Vec<i64>> = self.terms.iter().map(|t| t.exponents.clone()).collect();
        out.sort();
        out
    }
}

impl std::fmt::Display for MirrorPolynomial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let rendered: Vec<String> = self
            .terms
            .iter()
            .map(|t| {
                let pos: Vec<String> = t
                    .exponents
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .map(|(i, _)| format!("x{}", i + 1))
                    .collect();
                let neg: Vec<String> = t
                    .exponents
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e < 0)
                    .map(|(i, _)| format!("x{}", i + 1))
                    .collect();
                match (pos.is_empty(), neg.is_empty()) {
                    (false, true) => pos.join("*"),
                    (true, false) => format!("1/({})", neg.join("*")),
                    (true, true) => "1".to_string(),
                    (false, false) => format!("{}/({})", pos.join("*"), neg.join("*")),
                }
            })
            .collect();
        f.write_str(&rendered.join(" + "))
    }
}

/// Ray generators of the fan: `e_1..e_n`, `-(e_1+..+e_n)`, `-(e_1+..+e_{r+1})`.
pub fn fan_generators(p: &FamilyParams) -> Vec<Vec<i64>> {
    let n = p.n as usize;
    let k = p.k as usize;
    let mut out = Vec::with_capacity(n + 2);
    for i in 0..n {
        let mut e = vec![0; n];
        e[i] = 1;
        out.push(e);
    }
    out.push(vec![-1; n]);
    out.push((0..n).map(|i| if i < k { -1 } else { 0 }).collect());
    out
}

pub fn build_mirror(p: &FamilyParams) -> MirrorPolynomial {
    MirrorPolynomial {
        terms: fan_generators(p)
            .into_iter()
            .map(|exponents| LaurentMonomial { exponents })
            .collect(),
        dimension: p.n as usize,
    }
}

/// Exact integer coefficients of `u(x) = x^{m+k+1} (x^m + 1)^k - 1`,
/// constant term first.
pub fn reduced_polynomial_exact(p: &FamilyParams) -> Vec<BigInt> {
    let m = p.m as usize;
    let k = p.k as usize;
    let mut coeffs = vec![BigInt::zero(); p.degree() + 1];
    coeffs[0] = -BigInt::one();
    for j in 0..=k {
        coeffs[m + k + 1 + m * j] += num_integer::binomial(BigInt::from(k), BigInt::from(j));
    }
    coeffs
}

/// `u(x) = x^{m+1}(x^{m+1}+x)^k - 1` in dense form; degree `(m+1)(k+1)`.
pub fn reduced_polynomial(p: &FamilyParams) -> DensePolynomial {
    let coefficients = reduced_polynomial_exact(p)
        .iter()
        .map(|c| c.to_f64().expect("binomial coefficient representable as f64"))
        .collect();
    DensePolynomial::new(coefficients).expect("u has leading coefficient 1")
}

/// `g(x) = (k+1) x^{m+1} + (k+m+1) x`, the critical value attached to a root.
pub fn critical_value_g(p: &FamilyParams, x: Complex64) -> Complex64 {
    let k = f64::from(p.k);
    let m = f64::from(p.m);
    x.powu(p.m + 1) * (k + 1.0) + x * (k + m + 1.0)
}

/// `h(x) = (k+1) x^{-(m+1)/k} + m x` on `x > 0`.
pub fn envelope_h(p: &FamilyParams, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("envelope h needs x > 0, got {x}")));
    }
    let k = f64::from(p.k);
    let m = f64::from(p.m);
    Ok((k + 1.0) * x.powf(-(m + 1.0) / k) + m * x)
}

/// `r0 = ((m+1)(k+1)/(mk))^{k/(m+k+1)}`, the minimiser of `h` and the
/// upper bound on root moduli.
pub fn radius_bound_r0(p: &FamilyParams) -> f64 {
    let m = f64::from(p.m);
    let k = f64::from(p.k);
    (((m + 1.0) * (k + 1.0)) / (m * k)).powf(k / (m + k + 1.0))
}

/// Conifold point: `k` copies of `r^{m+1} + r` followed by `m` copies of `r`.
pub fn conifold_vector(p: &FamilyParams, r_plus: f64) -> Result<Vec<f64>> {
    if !(r_plus > 0.0) || !r_plus.is_finite() {
        return Err(Error::Domain(format!(
            "conifold vector needs r_plus > 0, got {r_plus}"
        )));
    }
    let head = r_plus.powi(p.m as i32 + 1) + r_plus;
    let mut out = vec![head; p.k as usize];
    out.extend(std::iter::repeat_n(r_plus, p.m as usize));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn derive_params_examples() {
        let p = derive_params(4, 1).unwrap();
        assert_eq!((p.m, p.k, p.rho), (2, 2, 1));
        let p = derive_params(2, 0).unwrap();
        assert_eq!((p.m, p.k, p.rho), (1, 1, 1));
        let p = derive_params(5, 2).unwrap();
        assert_eq!((p.m, p.k, p.rho), (2, 3, 2));
        let err = derive_params(2, 1).unwrap_err();
        assert!(matches!(err, Error::Domain(ref s) if s.contains("m = n - r - 1 = 0")));
        assert!(derive_params(1, 0).is_err());
        assert!(derive_params(4, -1).is_err());
    }

    #[test]
    fn from_mk_round_trips_nr() {
        let p = FamilyParams::from_mk(2, 3).unwrap();
        assert_eq!((p.n, p.r), (5, 2));
        assert_eq!(p, derive_params(5, 2).unwrap());
        assert!(FamilyParams::from_mk(0, 3).is_err());
        assert!(FamilyParams::from_mk(3, 0).is_err());
    }

    #[test]
    fn fan_examples() {
        let p = derive_params(2, 0).unwrap();
        assert_eq!(
            fan_generators(&p),
            vec![vec![1, 0], vec![0, 1], vec![-1, -1], vec![-1, 0]]
        );
        let p = derive_params(3, 1).unwrap();
        assert_eq!(
            fan_generators(&p),
            vec![
                vec![1, 0, 0],
                vec![0, 1, 0],
                vec![0, 0, 1],
                vec![-1, -1, -1],
                vec![-1, -1, 0]
            ]
        );
    }

    #[test]
    fn mirror_examples() {
        let p = derive_params(2, 0).unwrap();
        let f = build_mirror(&p);
        assert_eq!(f.to_string(), "x1 + x2 + 1/(x1*x2) + 1/(x1)");
        let x = [c(2.0), c(4.0)];
        assert!((f.eval(&x).re - (2.0 + 4.0 + 1.0 / 8.0 + 0.5)).abs() < 1e-15);

        let p = derive_params(3, 1).unwrap();
        let f = build_mirror(&p);
        assert_eq!(f.terms.len(), 5);
        assert_eq!(f.to_string(), "x1 + x2 + x3 + 1/(x1*x2*x3) + 1/(x1*x2)");
        let mut gens = fan_generators(&p);
        gens.sort();
        assert_eq!(f.exponent_multiset(), gens);
    }

    #[test]
    fn reduced_polynomial_examples() {
        let u = reduced_polynomial(&FamilyParams::from_mk(1, 1).unwrap());
        assert_eq!(u.coefficients(), &[-1.0, 0.0, 0.0, 1.0, 1.0]);
        let u = reduced_polynomial(&FamilyParams::from_mk(1, 2).unwrap());
        assert_eq!(u.coefficients(), &[-1.0, 0.0, 0.0, 0.0, 1.0, 2.0, 1.0]);
        let u = reduced_polynomial(&FamilyParams::from_mk(2, 2).unwrap());
        assert_eq!(u.degree(), 9);
        assert_eq!(u.eval(0.0), -1.0);
        assert_eq!(u.eval(1.0), 3.0);
    }

    #[test]
    fn g_examples() {
        let p = FamilyParams::from_mk(1, 1).unwrap();
        assert_eq!(critical_value_g(&p, c(0.0)), c(0.0));
        assert_eq!(critical_value_g(&p, c(1.0)), c(5.0));
        let p = FamilyParams::from_mk(2, 3).unwrap();
        for x in [0.3, 0.786, 1.7, 2.5] {
            assert_eq!(critical_value_g(&p, c(-x)), -critical_value_g(&p, c(x)));
        }
    }

    #[test]
    fn h_and_r0_examples() {
        let p = FamilyParams::from_mk(1, 1).unwrap();
        assert_eq!(envelope_h(&p, 1.0).unwrap(), 3.0);
        assert!(envelope_h(&p, 0.0).is_err());
        assert!(envelope_h(&p, -1.0).is_err());
        assert!((radius_bound_r0(&p) - 4f64.cbrt()).abs() < 1e-15);
        let p = FamilyParams::from_mk(2, 2).unwrap();
        assert!((radius_bound_r0(&p) - 2.25f64.powf(0.4)).abs() < 1e-15);
    }

    #[test]
    fn conifold_vector_shape() {
        let p = FamilyParams::from_mk(1, 1).unwrap();
        let r = 0.819_172_513_396_164_4;
        let v = conifold_vector(&p, r).unwrap();
        assert_eq!(v.len(), 2);
        assert!((v[0] - 1.490_216_120_099_953_7).abs() < 1e-12);
        assert_eq!(v[1], r);
        assert!(conifold_vector(&p, 0.0).is_err());
        // f(x_con) = g(r+)
        let f = build_mirror(&p);
        let fx = f.eval_real(&v);
        assert!((fx - critical_value_g(&p, c(r)).re).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn params_invariants(m in 1i64..40, k in 1i64..40) {
            let p = FamilyParams::from_mk(m, k).unwrap();
            prop_assert_eq!(p.m + p.k, p.n);
            prop_assert_eq!(p.k, p.r + 1);
            prop_assert_eq!(p.m % p.rho, 0);
            prop_assert_eq!((p.k + 1) % p.rho, 0);
        }

        #[test]
        fn fan_telescopes(m in 1i64..12, k in 1i64..12) {
            let p = FamilyParams::from_mk(m, k).unwrap();
            let gens = fan_generators(&p);
            prop_assert_eq!(gens.len(), p.n as usize + 2);
            let n = p.n as usize;
            let sum: Vec<i64> = (0..n).map(|i| gens[..=n].iter().map(|g| g[i]).sum()).collect();
            prop_assert!(sum.iter().all(|&s| s == 0));
            let last: Vec<i64> = (0..n).map(|i| if i < p.k as usize { -1 } else { 0 }).collect();
            prop_assert_eq!(&gens[n + 1], &last);
        }

        #[test]
        fn reduced_polynomial_shape(m in 1i64..15, k in 1i64..15) {
            let p = FamilyParams::from_mk(m, k).unwrap();
            let u = reduced_polynomial(&p);
            prop_assert_eq!(u.degree(), p.degree());
            prop_assert_eq!(u.eval(0.0), -1.0);
            prop_assert_eq!(u.eval(1.0), 2f64.powi(k as i32) - 1.0);
            // dense form agrees with the factored form
            for &x in &[0.5f64, 0.9, 1.1] {
                let factored = x.powi(m as i32 + 1) * (x.powi(m as i32 + 1) + x).powi(k as i32) - 1.0;
                prop_assert!((u.eval(x) - factored).abs() <= 1e-12 * (1.0 + factored.abs()));
            }
        }

        #[test]
        fn u_increasing_on_log_grid(m in 1i64..8, k in 1i64..8) {
            let p = FamilyParams::from_mk(m, k).unwrap();
            let du = reduced_polynomial(&p).derivative();
            for i in 0..=60 {
                let x = 10f64.powf(-3.0 + 6.0 * i as f64 / 60.0);
                prop_assert!(du.eval(x) > 0.0);
            }
        }

        #[test]
        fn g_odd_for_even_m(half in 1u32..6, k in 1i64..8, x in -3.0f64..3.0) {
            let p = FamilyParams::from_mk(2 * half as i64, k).unwrap();
            prop_assert_eq!(critical_value_g(&p, c(-x)), -critical_value_g(&p, c(x)));
        }

        #[test]
        fn r0_exceeds_one(m in 1i64..50, k in 1i64..50) {
            let p = FamilyParams::from_mk(m, k).unwrap();
            prop_assert!(radius_bound_r0(&p) > 1.0);
        }
    }
}
