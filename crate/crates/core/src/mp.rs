//! Extended-precision scalars used by the series and boundary-operator
//! derivations.
//!
//! All derivation arithmetic runs at [`PREC`] bits (~58 significant decimal
//! digits); results are rounded to `f64` only on export. Complex values are
//! a plain re/im pair over `rug::Float` because only the float layer of
//! GMP/MPFR is linked.

use rug::Float;
use std::ops::{Add, Mul, Sub};

/// Working precision in bits for all series and linear-system arithmetic.
pub const PREC: u32 = 192;

/// Extended-precision real scalar.
pub type Real = Float;

/// New real at working precision.
pub fn real(v: f64) -> Real {
    Float::with_val(PREC, v)
}

/// Extended-precision complex scalar (rectangular form).
#[derive(Clone, Debug)]
pub struct Cx {
    pub re: Real,
    pub im: Real,
}

impl Cx {
    pub fn new(re: Real, im: Real) -> Self {
        Cx { re, im }
    }

    pub fn from_f64(re: f64, im: f64) -> Self {
        Cx { re: real(re), im: real(im) }
    }

    pub fn from_real(re: Real) -> Self {
        Cx { im: real(0.0), re }
    }

    pub fn zero() -> Self {
        Cx::from_f64(0.0, 0.0)
    }

    pub fn one() -> Self {
        Cx::from_f64(1.0, 0.0)
    }

    pub fn conj(&self) -> Self {
        Cx { re: self.re.clone(), im: -self.im.clone() }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    /// |z|, computed without overflow concerns at this precision.
    pub fn abs(&self) -> Real {
        let rr = Float::with_val(PREC, &self.re * &self.re);
        let ii = Float::with_val(PREC, &self.im * &self.im);
        Float::with_val(PREC, rr + ii).sqrt()
    }

    pub fn scale(&self, s: &Real) -> Self {
        Cx {
            re: Float::with_val(PREC, &self.re * s),
            im: Float::with_val(PREC, &self.im * s),
        }
    }

    pub fn div(&self, d: &Cx) -> Self {
        let den = {
            let rr = Float::with_val(PREC, &d.re * &d.re);
            let ii = Float::with_val(PREC, &d.im * &d.im);
            Float::with_val(PREC, rr + ii)
        };
        let num = self * &d.conj();
        Cx {
            re: Float::with_val(PREC, &num.re / &den),
            im: Float::with_val(PREC, &num.im / &den),
        }
    }

    pub fn recip(&self) -> Self {
        Cx::one().div(self)
    }

    /// Principal square root: for z = r·e^{iφ} with φ ∈ (−π, π], the root
    /// with non-negative real part (and +i·√|z| on the negative real axis).
    pub fn sqrt(&self) -> Self {
        if self.im.is_zero() {
            if self.re.is_sign_negative() && !self.re.is_zero() {
                let m = Float::with_val(PREC, -self.re.clone()).sqrt();
                return Cx { re: real(0.0), im: m };
            }
            return Cx { re: self.re.clone().sqrt(), im: real(0.0) };
        }
        let m = self.abs();
        let re2 = Float::with_val(PREC, Float::with_val(PREC, &m + &self.re) / 2u32).sqrt();
        let im2 = Float::with_val(PREC, Float::with_val(PREC, &m - &self.re) / 2u32).sqrt();
        let im2 = if self.im.is_sign_negative() { -im2 } else { im2 };
        Cx { re: re2, im: im2 }
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }
}

impl Add for &Cx {
    type Output = Cx;
    fn add(self, rhs: &Cx) -> Cx {
        Cx {
            re: Float::with_val(PREC, &self.re + &rhs.re),
            im: Float::with_val(PREC, &self.im + &rhs.im),
        }
    }
}

impl Sub for &Cx {
    type Output = Cx;
    fn sub(self, rhs: &Cx) -> Cx {
        Cx {
            re: Float::with_val(PREC, &self.re - &rhs.re),
            im: Float::with_val(PREC, &self.im - &rhs.im),
        }
    }
}

impl Mul for &Cx {
    type Output = Cx;
    fn mul(self, rhs: &Cx) -> Cx {
        let ac = Float::with_val(PREC, &self.re * &rhs.re);
        let bd = Float::with_val(PREC, &self.im * &rhs.im);
        let ad = Float::with_val(PREC, &self.re * &rhs.im);
        let bc = Float::with_val(PREC, &self.im * &rhs.re);
        Cx {
            re: Float::with_val(PREC, ac - bd),
            im: Float::with_val(PREC, ad + bc),
        }
    }
}
