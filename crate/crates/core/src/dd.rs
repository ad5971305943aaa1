//! Double-double (compensated) arithmetic.
//!
//! Unevaluated sums of two f64 give ~32 significant digits, enough to
//! evaluate high-degree polynomials near their roots and to re-expand root
//! products without catastrophic cancellation. Products use the hardware FMA
//! through `f64::mul_add`.

use num_complex::Complex64;

/// A number stored as an unevaluated sum `hi + lo` with |lo| <= ulp(hi)/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    // requires |a| >= |b|
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    #[inline]
    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn add(self, other: Dd) -> Dd {
        let (s1, mut e1) = two_sum(self.hi, other.hi);
        let (s2, e2) = two_sum(self.lo, other.lo);
        e1 += s2;
        let (s1, mut e1) = quick_two_sum(s1, e1);
        e1 += e2;
        let (hi, lo) = quick_two_sum(s1, e1);
        Dd { hi, lo }
    }

    #[inline]
    pub fn add_f64(self, other: f64) -> Dd {
        let (s, e) = two_sum(self.hi, other);
        let (hi, lo) = quick_two_sum(s, e + self.lo);
        Dd { hi, lo }
    }

    #[inline]
    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    #[inline]
    pub fn sub(self, other: Dd) -> Dd {
        self.add(other.neg())
    }

    #[inline]
    pub fn mul(self, other: Dd) -> Dd {
        let (p, mut e) = two_prod(self.hi, other.hi);
        e += self.hi * other.lo + self.lo * other.hi;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn mul_f64(self, other: f64) -> Dd {
        let (p, mut e) = two_prod(self.hi, other);
        e += self.lo * other;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn abs(self) -> f64 {
        self.to_f64().abs()
    }
}

/// Complex number with double-double real and imaginary parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DdComplex {
    pub re: Dd,
    pub im: Dd,
}

impl DdComplex {
    pub const ZERO: DdComplex = DdComplex {
        re: Dd::ZERO,
        im: Dd::ZERO,
    };

    #[inline]
    pub fn from_c64(z: Complex64) -> Self {
        DdComplex {
            re: Dd::from_f64(z.re),
            im: Dd::from_f64(z.im),
        }
    }

    #[inline]
    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    #[inline]
    pub fn add(self, other: DdComplex) -> DdComplex {
        DdComplex {
            re: self.re.add(other.re),
            im: self.im.add(other.im),
        }
    }

    #[inline]
    pub fn add_f64(self, other: f64) -> DdComplex {
        DdComplex {
            re: self.re.add_f64(other),
            im: self.im,
        }
    }

    #[inline]
    pub fn sub(self, other: DdComplex) -> DdComplex {
        DdComplex {
            re: self.re.sub(other.re),
            im: self.im.sub(other.im),
        }
    }

    #[inline]
    pub fn mul(self, other: DdComplex) -> DdComplex {
        let re = self.re.mul(other.re).sub(self.im.mul(other.im));
        let im = self.re.mul(other.im).add(self.im.mul(other.re));
        DdComplex { re, im }
    }

    #[inline]
    pub fn mul_f64(self, other: f64) -> DdComplex {
        DdComplex {
            re: self.re.mul_f64(other),
            im: self.im.mul_f64(other),
        }
    }
}

/// Evaluates `P(z) = c[0] z^n + ... + c[n]` by Horner's rule in double-double
/// arithmetic, rounding the result to complex f64.
pub fn horner_dd(coefficients: &[f64], z: Complex64) -> Complex64 {
    let zz = DdComplex::from_c64(z);
    let mut acc = DdComplex::ZERO;
    for &c in coefficients {
        acc = acc.mul(zz).add_f64(c);
    }
    acc.to_c64()
}

/// Expands `gain · Π (z - r_m)` into descending-power coefficients, carrying
/// the convolution in double-double arithmetic. Used as the independent
/// oracle for the root finder's round-trip property.
pub fn expand_roots(roots: &[Complex64], gain: f64) -> Vec<Complex64> {
    let mut coeffs: Vec<DdComplex> = vec![DdComplex::from_c64(Complex64::new(gain, 0.0))];
    for &r in roots {
        let rr = DdComplex::from_c64(r);
        let mut next = vec![DdComplex::ZERO; coeffs.len() + 1];
        // multiply by (z - r)
        for (i, &c) in coeffs.iter().enumerate() {
            next[i] = next[i].add(c);
            next[i + 1] = next[i + 1].sub(c.mul(rr));
        }
        coeffs = next;
    }
    coeffs.into_iter().map(|c| c.to_c64()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dd_addition_keeps_lost_bits() {
        let a = Dd::from_f64(1.0);
        let b = Dd::from_f64(1e-20);
        let s = a.add(b);
        assert_eq!(s.hi, 1.0);
        assert_eq!(s.lo, 1e-20);
    }

    #[test]
    fn dd_product_exact_error_term() {
        let a = Dd::from_f64(1.0 + 2f64.powi(-30));
        let b = Dd::from_f64(1.0 - 2f64.powi(-30));
        // (1+e)(1-e) = 1 - e^2; e^2 = 2^-60 is below f64 resolution of 1.0
        let p = a.mul(b);
        assert_eq!(p.hi, 1.0);
        assert_eq!(p.lo, -(2f64.powi(-60)));
    }

    #[test]
    fn horner_matches_plain_on_benign_input() {
        let coeffs = [1.0, -1.5, 0.5];
        let z = Complex64::new(0.3, 0.4);
        let plain = coeffs
            .iter()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c);
        let dd = horner_dd(&coeffs, z);
        assert!((plain - dd).norm() < 1e-15);
    }

    #[test]
    fn expand_two_known_roots() {
        let roots = [Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0)];
        let c = expand_roots(&roots, 2.0);
        // 2(z-1)(z-0.5) = 2z^2 - 3z + 1
        assert_eq!(c.len(), 3);
        assert!((c[0].re - 2.0).abs() < 1e-15);
        assert!((c[1].re + 3.0).abs() < 1e-15);
        assert!((c[2].re - 1.0).abs() < 1e-15);
        assert!(c.iter().all(|z| z.im.abs() < 1e-15));
    }

    #[test]
    fn expand_conjugate_pair_is_real() {
        let roots = [Complex64::new(0.8, 0.6), Complex64::new(0.8, -0.6)];
        let c = expand_roots(&roots, 1.0);
        // (z - 0.8 - 0.6i)(z - 0.8 + 0.6i) = z^2 - 1.6 z + 1.0
        assert!((c[1].re + 1.6).abs() < 1e-15);
        assert!((c[2].re - 1.0).abs() < 1e-15);
        assert!(c.iter().all(|z| z.im.abs() < 1e-15));
    }
}
