//! Exact square-freeness test: degree of `gcd(u, u')` over the rationals.
//!
//! The fast path reduces modulo a word-sized prime not dividing the leading
//! coefficient. A repeated factor of `u` over `Q` survives reduction and
//! divides both `u` and `u'` mod `p`, so a constant gcd mod `p` proves `u` is
//! square-free. If every prime gives a nonconstant gcd, the degree is computed
//! exactly over `Q`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

const PRIMES: [u64; 3] = [2_305_843_009_213_693_951, 1_000_000_007, 998_244_353];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GcdMethod {
    Modular { prime: u64 },
    Rational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SquareFreeCheck {
    pub gcd_degree: usize,
    pub method: GcdMethod,
}

impl SquareFreeCheck {
    pub fn is_square_free(&self) -> bool {
        self.gcd_degree == 0
    }
}

fn derivative(coeffs: &[BigInt]) -> Vec<BigInt> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * BigInt::from(i))
        .collect()
}

/// `gcd(u, u')` degree for integer coefficients, constant term first.
pub fn square_free_check(coeffs: &[BigInt]) -> SquareFreeCheck {
    let lead = coeffs.last().expect("nonempty polynomial");
    let deriv = derivative(coeffs);
    for &p in &PRIMES {
        if (lead % BigInt::from(p)).is_zero() {
            continue;
        }
        let a = reduce_mod(coeffs, p);
        let b = reduce_mod(&deriv, p);
        if gcd_degree_mod(a, b, p) == 0 {
            return SquareFreeCheck {
                gcd_degree: 0,
                method: GcdMethod::Modular { prime: p },
            };
        }
    }
    SquareFreeCheck {
        gcd_degree: gcd_degree_rational(coeffs, &deriv),
        method: GcdMethod::Rational,
    }
}

fn reduce_mod(coeffs: &[BigInt], p: u64) -> Vec<u64> {
    let pb = BigInt::from(p);
    coeffs
        .iter()
        .map(|c| c.mod_floor(&pb).to_u64().expect("reduced below p"))
        .collect()
}

fn trim<T: PartialEq>(v: &mut Vec<T>, zero: &T) {
    while v.last() == Some(zero) {
        v.pop();
    }
}

fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn inv_mod(a: u64, p: u64) -> u64 {
    // Fermat
    let mut result = 1u64;
    let mut base = a % p;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            result = mul_mod(result, base, p);
        }
        base = mul_mod(base, base, p);
        e >>= 1;
    }
    result
}

/// Degree of the gcd over `F_p`; zero polynomial counts as infinite degree
/// only when both inputs vanish, which cannot happen for `u, u'`.
fn gcd_degree_mod(mut a: Vec<u64>, mut b: Vec<u64>, p: u64) -> usize {
    trim(&mut a, &0);
    trim(&mut b, &0);
    while !b.is_empty() {
        // a <- a mod b
        let inv_lead = inv_mod(*b.last().unwrap(), p);
        while a.len() >= b.len() {
            let shift = a.len() - b.len();
            let factor = mul_mod(*a.last().unwrap(), inv_lead, p);
            for (i, &bc) in b.iter().enumerate() {
                let sub = mul_mod(factor, bc, p);
                a[i + shift] = (a[i + shift] + p - sub) % p;
            }
            trim(&mut a, &0);
            if a.is_empty() {
                break;
            }
        }
        std::mem::swap(&mut a, &mut b);
    }
    a.len().saturating_sub(1)
}

/// Exact gcd degree over `Q` by the monic Euclidean algorithm.
pub fn gcd_degree_rational(a: &[BigInt], b: &[BigInt]) -> usize {
    let to_q = |v: &[BigInt]| -> Vec<BigRational> {
        let mut out: Vec<BigRational> = v.iter().cloned().map(BigRational::from_integer).collect();
        trim(&mut out, &BigRational::zero());
        out
    };
    let mut a = to_q(a);
    let mut b = to_q(b);
    while !b.is_empty() {
        let inv_lead = BigRational::one() / b.last().unwrap().clone();
        for c in b.iter_mut() {
            *c = &*c * &inv_lead;
        }
        while a.len() >= b.len() {
            let shift = a.len() - b.len();
            let factor = a.last().unwrap().clone();
            for (i, bc) in b.iter().enumerate() {
                a[i + shift] = &a[i + shift] - &factor * bc;
            }
            trim(&mut a, &BigRational::zero());
            if a.is_empty() {
                break;
            }
        }
        std::mem::swap(&mut a, &mut b);
    }
    a.len().saturating_sub(1)
}
