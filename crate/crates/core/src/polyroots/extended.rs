//! Newton polishing and residual evaluation at a configurable mantissa width.

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use num_complex::Complex64;

type Big = FBig<HalfEven, 2>;

#[derive(Clone)]
struct BigComplex {
    re: Big,
    im: Big,
}

impl BigComplex {
    fn from_c64(z: Complex64, bits: usize) -> Self {
        Self {
            re: to_big(z.re, bits),
            im: to_big(z.im, bits),
        }
    }

    fn zero(bits: usize) -> Self {
        Self::from_c64(Complex64::new(0.0, 0.0), bits)
    }

    fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64().value(), self.im.to_f64().value())
    }

    fn add_real(&self, c: &Big) -> Self {
        Self {
            re: &self.re + c,
            im: self.im.clone(),
        }
    }

    fn add(&self, o: &Self) -> Self {
        Self {
            re: &self.re + &o.re,
            im: &self.im + &o.im,
        }
    }

    fn sub(&self, o: &Self) -> Self {
        Self {
            re: &self.re - &o.re,
            im: &self.im - &o.im,
        }
    }

    fn mul(&self, o: &Self) -> Self {
        Self {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }

    fn div(&self, o: &Self) -> Self {
        let denom = &o.re * &o.re + &o.im * &o.im;
        Self {
            re: (&self.re * &o.re + &self.im * &o.im) / &denom,
            im: (&self.im * &o.re - &self.re * &o.im) / &denom,
        }
    }

    fn is_zero(&self) -> bool {
        self.re == Big::ZERO && self.im == Big::ZERO
    }
}

fn to_big(x: f64, bits: usize) -> Big {
    Big::try_from(x)
        .expect("finite f64")
        .with_precision(bits)
        .value()
}

fn horner(coeffs: &[Big], z: &BigComplex, bits: usize) -> (BigComplex, BigComplex) {
    let mut value = BigComplex::zero(bits);
    let mut deriv = BigComplex::zero(bits);
    for c in coeffs.iter().rev() {
        deriv = deriv.mul(z).add(&value);
        value = value.mul(z).add_real(c);
    }
    (value, deriv)
}

pub(crate) struct ExtendedPolish {
    pub value: Complex64,
    pub residual: f64,
    pub derivative: f64,
    pub steps: usize,
}

/// `(|u(z)|, |u'(z)|)` evaluated at `bits` of mantissa.
pub(crate) fn residual_at(coeffs: &[f64], z: Complex64, bits: usize) -> (f64, f64) {
    let big: Vec<Big> = coeffs.iter().map(|&c| to_big(c, bits)).collect();
    let (v, d) = horner(&big, &BigComplex::from_c64(z, bits), bits);
    (v.to_c64().norm(), d.to_c64().norm())
}

/// Newton iteration carried out at `bits` of mantissa; the polished value is
/// rounded back to double and its residual re-evaluated at `bits`.
pub(crate) fn polish(coeffs: &[f64], z0: Complex64, bits: usize, max_steps: usize) -> ExtendedPolish {
    let big: Vec<Big> = coeffs.iter().map(|&c| to_big(c, bits)).collect();
    let mut z = BigComplex::from_c64(z0, bits);
    let tiny = 2f64.powi(-(bits as i32) + 8);
    let mut steps = 0;
    while steps < max_steps {
        let (v, d) = horner(&big, &z, bits);
        if v.is_zero() || d.is_zero() {
            break;
        }
        let step = v.div(&d);
        z = z.sub(&step);
        steps += 1;
        let zn = z.to_c64().norm();
        if step.to_c64().norm() <= tiny * zn.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    let value = z.to_c64();
    let (residual, derivative) = residual_at(coeffs, value, bits);
    ExtendedPolish {
        value,
        residual,
        derivative,
        steps,
    }
}
