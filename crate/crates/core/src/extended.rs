//! Double-double arithmetic (about 32 significant digits).
//!
//! Used where unit-sized terms cancel to far below `f64` resolution, such as
//! filter functions of high-order decoupling sequences at low frequency.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Df64 {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

const PIO2: [f64; 3] = [
    std::f64::consts::FRAC_PI_2,
    6.123233995736766e-17,
    -1.4973849048591698e-33,
];

impl Df64 {
    pub const ZERO: Df64 = Df64 { hi: 0.0, lo: 0.0 };
    pub const ONE: Df64 = Df64 { hi: 1.0, lo: 0.0 };

    pub fn new(x: f64) -> Self {
        Df64 { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn sqr(self) -> Self {
        self * self
    }

    /// Exact product of two `f64`.
    pub fn prod(a: f64, b: f64) -> Self {
        let (hi, lo) = two_prod(a, b);
        Df64 { hi, lo }
    }

    /// `(sin x, cos x)`.
    pub fn sin_cos(self) -> (Df64, Df64) {
        let k = (self.hi / PIO2[0]).round();
        let mut r = self;
        for p in PIO2 {
            r = r - Df64::prod(k, p);
        }
        let (s, c) = sin_cos_reduced(r);
        match (k as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Df64::ZERO;
        }
        let x = self.hi.sqrt();
        let (p, e) = two_prod(x, x);
        let corr = ((self.hi - p) - e + self.lo) / (2.0 * x);
        let (hi, lo) = quick_two_sum(x, corr);
        Df64 { hi, lo }
    }
}

/// Taylor series on `|r| <= pi/4`.
fn sin_cos_reduced(r: Df64) -> (Df64, Df64) {
    let r2 = r * r;
    let mut sin = Df64::ZERO;
    let mut cos = Df64::ZERO;
    let mut term_s = r;
    let mut term_c = Df64::ONE;
    for k in 0..20 {
        sin = sin + term_s;
        cos = cos + term_c;
        let a = (2 * k + 2) as f64;
        let b = (2 * k + 3) as f64;
        term_s = -(term_s * r2) / (a * b);
        term_c = -(term_c * r2) / ((a - 1.0) * a);
        if term_s.hi.abs() < 1e-34 && term_c.hi.abs() < 1e-34 {
            break;
        }
    }
    (sin, cos)
}

impl From<f64> for Df64 {
    fn from(x: f64) -> Self {
        Df64::new(x)
    }
}

impl Neg for Df64 {
    type Output = Df64;
    fn neg(self) -> Df64 {
        Df64 {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for Df64 {
    type Output = Df64;
    fn add(self, o: Df64) -> Df64 {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Df64 { hi, lo }
    }
}

impl Sub for Df64 {
    type Output = Df64;
    fn sub(self, o: Df64) -> Df64 {
        self + (-o)
    }
}

impl Mul for Df64 {
    type Output = Df64;
    fn mul(self, o: Df64) -> Df64 {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Df64 { hi, lo }
    }
}

impl Mul<f64> for Df64 {
    type Output = Df64;
    fn mul(self, o: f64) -> Df64 {
        let (p, e) = two_prod(self.hi, o);
        let (hi, lo) = quick_two_sum(p, e + self.lo * o);
        Df64 { hi, lo }
    }
}

impl Div for Df64 {
    type Output = Df64;
    fn div(self, o: Df64) -> Df64 {
        let q1 = self.hi / o.hi;
        let r = self - o * q1;
        let q2 = r.hi / o.hi;
        let r = r - o * q2;
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Df64 { hi, lo } + Df64::new(q3)
    }
}

impl Div<f64> for Df64 {
    type Output = Df64;
    fn div(self, o: f64) -> Df64 {
        self / Df64::new(o)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_keeps_low_order_bits() {
        let a = Df64::new(1.0) + Df64::new(1e-20);
        assert_eq!(a.hi, 1.0);
        assert_eq!(a.lo, 1e-20);
        assert_eq!((a - Df64::ONE).to_f64(), 1e-20);
        let third = Df64::ONE / 3.0;
        let back = third * 3.0 - Df64::ONE;
        assert!(back.to_f64().abs() < 1e-31);
        let r2 = Df64::new(2.0).sqrt();
        assert!((r2 * r2 - Df64::new(2.0)).to_f64().abs() < 1e-31);
    }

    #[test]
    fn sin_cos_identities() {
        for &x in &[0.0, 1e-9, 0.3, 1.0, 2.5, -4.0, 123.456, 6.0e3] {
            let (s, c) = Df64::new(x).sin_cos();
            assert!((s.to_f64() - x.sin()).abs() < 2e-15 * x.abs().max(1.0));
            assert!((c.to_f64() - x.cos()).abs() < 2e-15 * x.abs().max(1.0));
            let one = s * s + c * c - Df64::ONE;
            assert!(one.to_f64().abs() < 1e-30);
        }
        // sin(pi/6) = 1/2 with pi/6 built from the reduction constants.
        let pi6 = (Df64::new(PIO2[0]) + Df64::new(PIO2[1]) + Df64::new(PIO2[2])) / 3.0;
        let (s, _) = pi6.sin_cos();
        assert!((s - Df64::new(0.5)).to_f64().abs() < 1e-31);
    }
}
