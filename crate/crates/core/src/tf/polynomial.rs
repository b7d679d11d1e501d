use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::roots;

/// Real polynomial in the Laplace variable, coefficients in ascending powers.
///
/// The zero polynomial is stored as `[0.0]`; every other polynomial keeps a
/// nonzero highest-order coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs[coeffs.len() - 1] == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: vec![0.0] }
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// The Laplace variable `s`.
    pub fn s() -> Self {
        Self::new(vec![0.0, 1.0])
    }

    /// Monic polynomial with the given roots. Complex roots are expected in
    /// conjugate pairs; any residual imaginary part of the product is dropped.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut acc = vec![Complex64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
            for (k, &a) in acc.iter().enumerate() {
                next[k + 1] += a;
                next[k] -= a * r;
            }
            acc = next;
        }
        Self::new(acc.into_iter().map(|c| c.re).collect())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0.0
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() == 1
    }

    pub fn leading(&self) -> f64 {
        self.coeffs[self.coeffs.len() - 1]
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Number of exactly-zero coefficients at the low-order end, i.e. the
    /// multiplicity of the root at the origin.
    pub fn origin_multiplicity(&self) -> usize {
        if self.is_zero() {
            return 0;
        }
        self.coeffs.iter().take_while(|&&c| c == 0.0).count()
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// `sum |c_k| r^k`, the magnitude bound used to judge rounding error of
    /// Horner evaluation at `|s| = r`.
    pub fn abs_bound(&self, r: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * r + c.abs())
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::zero();
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    /// Euclidean division: `self = q * divisor + r` with `deg r < deg divisor`.
    ///
    /// Panics when `divisor` is the zero polynomial.
    pub fn div_rem(&self, divisor: &Polynomial) -> (Polynomial, Polynomial) {
        assert!(!divisor.is_zero(), "polynomial division by zero");
        let n = self.degree();
        let m = divisor.degree();
        if self.is_zero() || n < m {
            return (Polynomial::zero(), self.clone());
        }
        let mut rem = self.coeffs.clone();
        let mut quot = vec![0.0; n - m + 1];
        let lead = divisor.leading();
        for k in (0..=n - m).rev() {
            let q = rem[k + m] / lead;
            quot[k] = q;
            for (j, &d) in divisor.coeffs.iter().enumerate() {
                rem[k + j] -= q * d;
            }
            rem[k + m] = 0.0;
        }
        rem.truncate(m.max(1));
        (Polynomial::new(quot), Polynomial::new(rem))
    }

    /// Divide out a factor known to divide `self`. Returns `None` when the
    /// remainder is larger than `rel_tol` relative to the coefficient scale.
    pub fn exact_quotient(&self, factor: &Polynomial, rel_tol: f64) -> Option<Polynomial> {
        if factor.is_constant() {
            return Some(self.scale(1.0 / factor.coeffs[0]));
        }
        let (q, r) = self.div_rem(factor);
        let scale = self.max_abs().max(q.max_abs() * factor.max_abs());
        if r.max_abs() <= rel_tol * scale {
            Some(q)
        } else {
            None
        }
    }

    /// Remove `k` roots at the origin (drops `k` low-order coefficients).
    pub(crate) fn shift_down(&self, k: usize) -> Polynomial {
        if k == 0 {
            return self.clone();
        }
        if k >= self.coeffs.len() {
            return Polynomial::zero();
        }
        Polynomial::new(self.coeffs[k..].to_vec())
    }

    /// Divide out a single real root or a conjugate pair (when `r` has a
    /// nonzero imaginary part).
    ///
    /// Forward deflation is stable for roots smaller than the rest and
    /// backward deflation for larger ones; the geometric mean of the root
    /// magnitudes, `|c_0 / c_n|^(1/n)`, decides which side `r` is on.
    pub(crate) fn deflate(&self, r: Complex64) -> Polynomial {
        if r.im == 0.0 && r.re == 0.0 {
            return self.shift_down(1);
        }
        let n = self.degree();
        let c0 = self.coeffs[0].abs();
        let forward = n == 0 || c0 == 0.0 || r.norm() <= (c0 / self.leading().abs()).powf(1.0 / n as f64);
        if r.im == 0.0 {
            self.deflate_by(&[-r.re, 1.0], forward)
        } else {
            let quad = [r.norm_sqr(), -2.0 * r.re, 1.0];
            self.deflate_by(&quad, forward)
        }
    }

    fn deflate_by(&self, factor: &[f64], forward: bool) -> Polynomial {
        let m = factor.len() - 1;
        let n = self.degree();
        if n < m {
            return self.clone();
        }
        let c = &self.coeffs;
        let qlen = n - m + 1;
        let mut q = vec![0.0; qlen];
        if forward {
            // From the highest power.
            let mut rem = c.clone();
            for k in (0..qlen).rev() {
                let qk = rem[k + m] / factor[m];
                q[k] = qk;
                for j in 0..=m {
                    rem[k + j] -= qk * factor[j];
                }
            }
        } else {
            // From the constant term.
            for k in 0..qlen {
                let mut acc = c[k];
                for j in 1..=m.min(k) {
                    acc -= factor[j] * q[k - j];
                }
                q[k] = acc / factor[0];
            }
        }
        Polynomial::new(q)
    }

    /// All complex roots (with multiplicity).
    pub fn roots(&self) -> Vec<Complex64> {
        roots::polynomial_roots(self)
    }
}

impl Default for Polynomial {
    fn default() -> Self {
        Self::zero()
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 && !(self.is_zero() && k == 0) {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{c}*s")?,
                _ => write!(f, "{c}*s^{k}")?,
            }
        }
        Ok(())
    }
}

fn add_coeffs(a: &[f64], b: &[f64], sign: f64) -> Vec<f64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|k| a.get(k).copied().unwrap_or(0.0) + sign * b.get(k).copied().unwrap_or(0.0))
        .collect()
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::new(add_coeffs(&self.coeffs, &rhs.coeffs, 1.0))
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::new(add_coeffs(&self.coeffs, &rhs.coeffs, -1.0))
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: Polynomial) -> Polynomial {
                (&self).$m(&rhs)
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

    #[test]
    fn normalizes_trailing_zeros() {
        let p = Polynomial::new(vec![1.0, 2.0, 0.0, 0.0]);
        assert_eq!(p.coeffs(), &[1.0, 2.0]);
        assert_eq!(p.degree(), 1);
        assert!(Polynomial::new(vec![]).is_zero());
        assert!(Polynomial::new(vec![0.0, 0.0]).is_zero());
    }

    #[test]
    fn div_rem_recovers_factors() {
        let a = Polynomial::new(vec![1.0, 1.0]);
        let b = Polynomial::new(vec![2.0, 3.0, 1.0]);
        let p = &a * &b;
        let (q, r) = p.div_rem(&a);
        assert_eq!(q, b);
        assert!(r.is_zero());
        assert!(p.exact_quotient(&b, 1e-12).is_some());
        assert!(p.exact_quotient(&Polynomial::new(vec![5.0, 1.0]), 1e-12).is_none());
    }

    #[test]
    fn deflation_both_directions() {
        // (s + 0.01)(s + 100)(s^2 + 2s + 5)
        let p = Polynomial::from_roots(&[
            Complex64::new(-0.01, 0.0),
            Complex64::new(-100.0, 0.0),
            Complex64::new(-1.0, 2.0),
            Complex64::new(-1.0, -2.0),
        ]);
        let q = p.deflate(Complex64::new(-0.01, 0.0));
        let q = q.deflate(Complex64::new(-1.0, 2.0));
        assert_eq!(q.degree(), 1);
        assert!((q.coeffs()[0] - 100.0).abs() < 1e-10, "{q}");
        let q2 = p.deflate(Complex64::new(-100.0, 0.0));
        assert!((q2.eval_real(-0.01)).abs() < 1e-12);
    }

    #[test]
    fn origin_multiplicity_counts_zero_roots() {
        let p = Polynomial::new(vec![0.0, 0.0, 3.0, 1.0]);
        assert_eq!(p.origin_multiplicity(), 2);
        assert_eq!(p.shift_down(2).coeffs(), &[3.0, 1.0]);
    }
}
