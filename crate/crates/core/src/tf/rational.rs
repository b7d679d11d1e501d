use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::Polynomial;
use crate::error::{Error, Result};

/// Real-coefficient rational function of the Laplace variable.
///
/// Numerator and denominator are rescaled by a common power of two on
/// construction so that the largest denominator coefficient lies in
/// `[0.5, 1)`. That scaling is exact in binary floating point and leaves every
/// evaluation unchanged. Arithmetic never cancels common factors on its own;
/// use [`RationalTf::reduce`] for that.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalTf {
    num: Polynomial,
    den: Polynomial,
}

/// Low- or high-frequency asymptote `c * s^order`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Asymptote {
    pub order: i64,
    pub coeff: f64,
}

impl Asymptote {
    /// Phase of `c * (j*omega)^order` in radians, wrapped to `(-pi, pi]`.
    pub fn phase(&self) -> f64 {
        let base = if self.coeff < 0.0 { std::f64::consts::PI } else { 0.0 };
        let raw = base + self.order as f64 * std::f64::consts::FRAC_PI_2;
        wrap_phase(raw)
    }
}

fn wrap_phase(mut x: f64) -> f64 {
    use std::f64::consts::PI;
    while x > PI {
        x -= 2.0 * PI;
    }
    while x <= -PI {
        x += 2.0 * PI;
    }
    x
}

fn pow2_scale(max: f64) -> f64 {
    if max == 0.0 || !max.is_finite() {
        return 1.0;
    }
    let e = max.log2().floor() as i32 + 1;
    2f64.powi(-e)
}

impl RationalTf {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        if den.coeffs().iter().chain(num.coeffs()).any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "non-finite transfer-function coefficient".into(),
            ));
        }
        Ok(Self::normalized(num, den))
    }

    pub fn from_coeffs(num: &[f64], den: &[f64]) -> Result<Self> {
        Self::new(Polynomial::new(num.to_vec()), Polynomial::new(den.to_vec()))
    }

    fn normalized(num: Polynomial, den: Polynomial) -> Self {
        if num.is_zero() {
            return Self {
                num,
                den: Polynomial::one(),
            };
        }
        let k = pow2_scale(den.max_abs());
        if k == 1.0 {
            Self { num, den }
        } else {
            Self {
                num: num.scale(k),
                den: den.scale(k),
            }
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn constant(k: f64) -> Self {
        Self::normalized(Polynomial::constant(k), Polynomial::one())
    }

    /// The Laplace variable `s` as a transfer function.
    pub fn s() -> Self {
        Self::normalized(Polynomial::s(), Polynomial::one())
    }

    /// `k (1 + s T) / (s T)`, the PI form used throughout the controllers.
    pub fn pi(k: f64, t_i: f64) -> Result<Self> {
        if !(t_i > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "PI integral time must be positive, got {t_i}"
            )));
        }
        Self::from_coeffs(&[k, k * t_i], &[0.0, t_i])
    }

    /// `1 / (1 + s / omega)`.
    pub fn low_pass(omega: f64) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cutoff must be positive, got {omega}"
            )));
        }
        Self::from_coeffs(&[1.0], &[1.0, 1.0 / omega])
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_proper(&self) -> bool {
        self.num.is_zero() || self.num.degree() <= self.den.degree()
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.num.is_zero() || self.num.degree() < self.den.degree()
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::normalized(self.num.scale(k), self.den.clone())
    }

    pub fn inv(&self) -> Result<Self> {
        if self.num.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::normalized(self.den.clone(), self.num.clone()))
    }

    pub fn checked_div(&self, rhs: &RationalTf) -> Result<Self> {
        if rhs.num.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::normalized(&self.num * &rhs.den, &self.den * &rhs.num))
    }

    /// `a b / (a + b)`.
    pub fn parallel(&self, other: &RationalTf) -> Result<Self> {
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero());
        }
        let num = &self.num * &other.num;
        let den = if self.den == other.den {
            &self.den * &(&self.num + &other.num)
        } else {
            &(&self.num * &other.den) + &(&other.num * &self.den)
        };
        if den.is_zero() {
            return Err(Error::Degenerate("parallel branches sum to zero".into()));
        }
        Ok(Self::normalized(num, den))
    }

    /// Negative-feedback closed loop `G / (1 + G H)`.
    pub fn feedback(&self, h: &RationalTf) -> Result<Self> {
        let num = &self.num * &h.den;
        let den = &(&self.den * &h.den) + &(&self.num * &h.num);
        if den.is_zero() {
            return Err(Error::Degenerate("1 + G H is identically zero".into()));
        }
        Ok(Self::normalized(num, den))
    }

    /// Value at an arbitrary complex `s`.
    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        let d = self.den.eval(s);
        let bound = self.den.abs_bound(s.norm());
        if d.norm() <= 4.0 * f64::EPSILON * bound {
            return Err(Error::PoleOnAxis { omega: s.im });
        }
        Ok(self.num.eval(s) / d)
    }

    /// Value at `s = j omega`.
    pub fn eval_jw(&self, omega: f64) -> Result<Complex64> {
        self.eval(Complex64::new(0.0, omega))
    }

    pub fn poles(&self) -> Vec<Complex64> {
        self.den.roots()
    }

    pub fn zeros(&self) -> Vec<Complex64> {
        self.num.roots()
    }

    /// Leading behaviour `c s^k` as `s -> 0`.
    pub fn low_frequency_asymptote(&self) -> Option<Asymptote> {
        if self.num.is_zero() {
            return None;
        }
        let zn = self.num.origin_multiplicity();
        let zd = self.den.origin_multiplicity();
        Some(Asymptote {
            order: zn as i64 - zd as i64,
            coeff: self.num.coeffs()[zn] / self.den.coeffs()[zd],
        })
    }

    /// Leading behaviour `c s^k` as `s -> infinity`.
    pub fn high_frequency_asymptote(&self) -> Option<Asymptote> {
        if self.num.is_zero() {
            return None;
        }
        Some(Asymptote {
            order: self.num.degree() as i64 - self.den.degree() as i64,
            coeff: self.num.leading() / self.den.leading(),
        })
    }

    /// DC value after removing common roots at the origin; `None` when the
    /// function has a pole at `s = 0`.
    pub fn dc_gain(&self) -> Option<f64> {
        let a = self.low_frequency_asymptote()?;
        match a.order {
            0 => Some(a.coeff),
            k if k > 0 => Some(0.0),
            _ => None,
        }
    }

    /// Cancel numerator/denominator root pairs closer than
    /// `tol * max(1, |root|)`.
    ///
    /// Roots at the origin are matched exactly from the coefficient pattern.
    /// Remaining pairs are divided out by polynomial deflation; the gain is
    /// carried by the surviving coefficients, so the frequency response is
    /// unchanged up to the root-location error of the cancelled pair.
    pub fn reduce(&self, tol: f64) -> Self {
        if self.num.is_zero() {
            return Self::zero();
        }
        let common_origin = self
            .num
            .origin_multiplicity()
            .min(self.den.origin_multiplicity());
        let mut num = self.num.shift_down(common_origin);
        let mut den = self.den.shift_down(common_origin);
        if num.degree() == 0 || den.degree() == 0 {
            return Self::normalized(num, den);
        }

        let zeros = num.roots();
        let mut poles = den.roots();
        let mut pairs = Vec::new();
        for z in zeros.iter().filter(|z| z.im >= 0.0) {
            let best = poles
                .iter()
                .enumerate()
                .filter(|(_, p)| (p.im >= 0.0) == (z.im >= 0.0))
                .map(|(i, p)| (i, (p - z).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            if let Some((i, dist)) = best {
                if dist <= tol * z.norm().max(1.0) {
                    let p = poles.remove(i);
                    let mid = (z + p) * 0.5;
                    let root = if z.im == 0.0 || mid.im.abs() <= tol * mid.norm().max(1.0) {
                        Complex64::new(mid.re, 0.0)
                    } else {
                        // A conjugate pair is deflated as one quadratic factor.
                        if let Some(j) = poles.iter().position(|q| (q - p.conj()).norm() <= 1e-12 * p.norm().max(1.0)) {
                            poles.remove(j);
                        }
                        mid
                    };
                    pairs.push(root);
                }
            }
        }
        for root in pairs {
            num = num.deflate(root);
            den = den.deflate(root);
        }
        Self::normalized(num, den)
    }
}

impl fmt::Display for RationalTf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) / ({})", self.num, self.den)
    }
}

impl Add for &RationalTf {
    type Output = RationalTf;
    fn add(self, rhs: &RationalTf) -> RationalTf {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        if self.den == rhs.den {
            return RationalTf::normalized(&self.num + &rhs.num, self.den.clone());
        }
        RationalTf::normalized(
            &(&self.num * &rhs.den) + &(&rhs.num * &self.den),
            &self.den * &rhs.den,
        )
    }
}

impl Sub for &RationalTf {
    type Output = RationalTf;
    fn sub(self, rhs: &RationalTf) -> RationalTf {
        self + &(-rhs)
    }
}

impl Mul for &RationalTf {
    type Output = RationalTf;
    fn mul(self, rhs: &RationalTf) -> RationalTf {
        if self.is_zero() || rhs.is_zero() {
            return RationalTf::zero();
        }
        RationalTf::normalized(&self.num * &rhs.num, &self.den * &rhs.den)
    }
}

impl Neg for &RationalTf {
    type Output = RationalTf;
    fn neg(self) -> RationalTf {
        RationalTf {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

impl Neg for RationalTf {
    type Output = RationalTf;
    fn neg(self) -> RationalTf {
        -&self
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for RationalTf {
            type Output = RationalTf;
            fn $m(self, rhs: RationalTf) -> RationalTf {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&RationalTf> for RationalTf {
            type Output = RationalTf;
            fn $m(self, rhs: &RationalTf) -> RationalTf {
                (&self).$m(rhs)
            }
        }
        impl $tr<RationalTf> for &RationalTf {
            type Output = RationalTf;
            fn $m(self, rhs: RationalTf) -> RationalTf {
                self.$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn tf(num: &[f64], den: &[f64]) -> RationalTf {
        RationalTf::from_coeffs(num, den).unwrap()
    }

    fn assert_close(a: Complex64, b: Complex64, tol: f64) {
        assert!((a - b).norm() <= tol * b.norm().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn like_denominator_sum() {
        let a = tf(&[1.0], &[1.0, 1.0]);
        let sum = &a + &a;
        assert_eq!(sum.den().degree(), 1);
        assert_close(sum.eval_jw(0.7).unwrap(), 2.0 * a.eval_jw(0.7).unwrap(), 1e-15);
        assert_eq!(sum, tf(&[2.0], &[1.0, 1.0]));
    }

    #[test]
    fn identity_and_self_division() {
        let k = RationalTf::constant(3.5);
        assert_eq!(&k * &RationalTf::one(), k);
        let s = RationalTf::s();
        let q = s.checked_div(&s).unwrap();
        for w in [0.1, 1.0, 10.0, 1e4] {
            assert_close(q.eval_jw(w).unwrap(), Complex64::new(1.0, 0.0), 1e-15);
        }
        assert_eq!(s.checked_div(&RationalTf::zero()), Err(Error::DivisionByZero));
    }

    #[test]
    fn zero_denominator_rejected() {
        assert_eq!(RationalTf::from_coeffs(&[1.0], &[0.0]), Err(Error::ZeroDenominator));
    }

    #[test]
    fn parallel_examples() {
        let two = RationalTf::constant(2.0);
        assert_close(two.parallel(&two).unwrap().eval_jw(1.0).unwrap(), 1.0.into(), 1e-15);

        let k = RationalTf::constant(4.0);
        let open = RationalTf::constant(1e15);
        assert_close(k.parallel(&open).unwrap().eval_jw(3.0).unwrap(), 4.0.into(), 1e-12);

        let (kd, c) = (1.5, 2e-3);
        let cap = tf(&[1.0], &[0.0, c]);
        let z = RationalTf::constant(kd).parallel(&cap).unwrap();
        let w = 1.0 / (c * kd);
        assert!((z.eval_jw(w).unwrap().norm() - kd * FRAC_1_SQRT_2).abs() < 1e-12);

        let neg = RationalTf::constant(-2.0);
        assert!(matches!(two.parallel(&neg), Err(Error::Degenerate(_))));
    }

    #[test]
    fn feedback_examples() {
        let one = RationalTf::one();
        assert_close(one.feedback(&one).unwrap().eval_jw(1.0).unwrap(), 0.5.into(), 1e-15);
        let g = tf(&[2.0, 1.0], &[1.0, 3.0, 1.0]);
        let open = g.feedback(&RationalTf::zero()).unwrap();
        assert_close(open.eval_jw(2.0).unwrap(), g.eval_jw(2.0).unwrap(), 1e-15);
        let hi = RationalTf::constant(1e6).feedback(&one).unwrap();
        assert!((hi.eval_jw(0.0).unwrap().re - 1.0).abs() < 1e-5);
        let minus = RationalTf::constant(-1.0);
        assert!(matches!(one.feedback(&minus), Err(Error::Degenerate(_))));
    }

    #[test]
    fn eval_examples() {
        let lp = tf(&[1.0], &[1.0, 1.0]);
        let v = lp.eval_jw(1.0).unwrap();
        assert_close(v, Complex64::new(0.5, -0.5), 1e-15);
        assert!((v.norm() - FRAC_1_SQRT_2).abs() < 1e-15);
        assert_close(RationalTf::constant(7.0).eval_jw(123.0).unwrap(), 7.0.into(), 0.0);
        let osc = tf(&[1.0], &[1.0, 0.0, 1.0]);
        assert!(matches!(osc.eval_jw(1.0), Err(Error::PoleOnAxis { .. })));
        let integ = tf(&[1.0], &[0.0, 1.0]);
        assert!(integ.eval_jw(0.0).is_err());
    }

    #[test]
    fn poles_examples() {
        let double = tf(&[1.0], &[1.0, 2.0, 1.0]);
        for p in double.poles() {
            assert!((p - Complex64::new(-1.0, 0.0)).norm() < 1e-7);
        }
        let osc = tf(&[1.0], &[1.0, 0.0, 1.0]).poles();
        assert!((osc[0] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
        assert!((osc[1] - Complex64::new(0.0, 1.0)).norm() < 1e-12);
        let q = tf(&[1.0], &[2.0, 3.0, 1.0]).poles();
        assert!((q[0].re + 2.0).abs() < 1e-12 && (q[1].re + 1.0).abs() < 1e-12);
        assert!(RationalTf::constant(3.0).poles().is_empty());
    }

    #[test]
    fn reduce_examples() {
        // (s+1)/((s+1)(s+2))
        let t = tf(&[1.0, 1.0], &[2.0, 3.0, 1.0]);
        let r = t.reduce(1e-9);
        assert_eq!(r.den().degree(), 1);
        assert_eq!(r.num().degree(), 0);
        assert_close(r.eval_jw(0.3).unwrap(), Complex64::new(2.0, 0.3).inv(), 1e-14);

        let plain = tf(&[1.0], &[2.0, 1.0]);
        assert_eq!(plain.reduce(1e-3), plain);

        // Common factor s^2 cancels exactly.
        let origin = tf(&[0.0, 0.0, 1.0], &[0.0, 0.0, 3.0, 1.0]);
        let r = origin.reduce(0.0);
        assert_eq!(r, tf(&[1.0], &[3.0, 1.0]));
    }

    #[test]
    fn asymptotes() {
        // s (1 + s) / (s^2 (2 + s)) ~ 1/(2 s) at DC, 1/s at infinity
        let t = tf(&[0.0, 1.0, 1.0], &[0.0, 0.0, 2.0, 1.0]);
        let lo = t.low_frequency_asymptote().unwrap();
        assert_eq!(lo.order, -1);
        assert!((lo.coeff - 0.5).abs() < 1e-15);
        assert!((lo.phase() + std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        let hi = t.high_frequency_asymptote().unwrap();
        assert_eq!(hi.order, -1);
        assert!((hi.coeff - 1.0).abs() < 1e-15);
        assert_eq!(t.dc_gain(), None);
        assert_eq!(tf(&[3.0], &[2.0, 1.0]).dc_gain(), Some(1.5));
    }

    #[test]
    fn normalization_keeps_values() {
        let t = tf(&[3e6, 5e6], &[1e7, 2e3, 4e-2]);
        assert!(t.den().max_abs() >= 0.5 && t.den().max_abs() < 1.0);
        let w = 17.0;
        let direct = Complex64::new(3e6, 5e6 * w) / Complex64::new(1e7 - 4e-2 * w * w, 2e3 * w);
        assert_close(t.eval_jw(w).unwrap(), direct, 1e-14);
    }
}
