use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::tf::RationalTf;

/// Affine function `c + k v` of the bus voltage. Controller signals are
/// affine in `v_dc` at a fixed state, which lets the capacitor ESR loop be
/// solved in closed form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Aff {
    pub c: f64,
    pub k: f64,
}

impl Aff {
    pub fn constant(c: f64) -> Self {
        Self { c, k: 0.0 }
    }

    pub fn at(self, v: f64) -> f64 {
        self.c + self.k * v
    }
}

impl Add for Aff {
    type Output = Aff;
    fn add(self, o: Aff) -> Aff {
        Aff {
            c: self.c + o.c,
            k: self.k + o.k,
        }
    }
}

impl Sub for Aff {
    type Output = Aff;
    fn sub(self, o: Aff) -> Aff {
        Aff {
            c: self.c - o.c,
            k: self.k - o.k,
        }
    }
}

impl Neg for Aff {
    type Output = Aff;
    fn neg(self) -> Aff {
        Aff {
            c: -self.c,
            k: -self.k,
        }
    }
}

impl Mul<f64> for Aff {
    type Output = Aff;
    fn mul(self, s: f64) -> Aff {
        Aff {
            c: self.c * s,
            k: self.k * s,
        }
    }
}

/// SISO realization in controllable canonical form.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Block {
    /// Monic denominator coefficients `a_0 .. a_{n-1}`.
    a: Vec<f64>,
    c: Vec<f64>,
    d: f64,
}

impl Block {
    pub fn new(name: &str, tf: &RationalTf) -> Result<Self> {
        if !tf.is_proper() {
            return Err(Error::Improper {
                what: name.to_string(),
                num: tf.num().degree(),
                den: tf.den().degree(),
            });
        }
        let den = tf.den().coeffs();
        let n = den.len() - 1;
        let lead = den[n];
        let a: Vec<f64> = den[..n].iter().map(|x| x / lead).collect();
        let mut b = vec![0.0; n + 1];
        if !tf.is_zero() {
            for (k, &x) in tf.num().coeffs().iter().enumerate() {
                b[k] = x / lead;
            }
        }
        let d = b[n];
        let c = (0..n).map(|k| b[k] - d * a[k]).collect();
        Ok(Self { a, c, d })
    }

    pub fn order(&self) -> usize {
        self.a.len()
    }

    pub fn output(&self, x: &[f64], u: Aff) -> Aff {
        let cx: f64 = self.c.iter().zip(x).map(|(c, x)| c * x).sum();
        Aff::constant(cx) + u * self.d
    }

    pub fn derivative(&self, x: &[f64], u: f64, dx: &mut [f64]) {
        let n = self.order();
        if n == 0 {
            return;
        }
        for k in 0..n - 1 {
            dx[k] = x[k + 1];
        }
        let ax: f64 = self.a.iter().zip(x).map(|(a, x)| a * x).sum();
        dx[n - 1] = u - ax;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Forward-Euler step response of a block, compared with the analytic one.
    #[test]
    fn first_order_step() {
        let tf = RationalTf::low_pass(10.0).unwrap();
        let b = Block::new("lpf", &tf).unwrap();
        assert_eq!(b.order(), 1);
        let mut x = vec![0.0];
        let mut dx = vec![0.0];
        let dt = 1e-5;
        for _ in 0..10_000 {
            b.derivative(&x, 1.0, &mut dx);
            x[0] += dt * dx[0];
        }
        let y = b.output(&x, Aff::constant(1.0)).c;
        assert!((y - (1.0 - (-1.0f64).exp())).abs() < 1e-4);
    }

    #[test]
    fn pi_feedthrough() {
        let tf = RationalTf::pi(2.0, 0.5).unwrap();
        let b = Block::new("pi", &tf).unwrap();
        let y = b.output(&[0.0], Aff { c: 1.0, k: 3.0 });
        assert!((y.c - 2.0).abs() < 1e-15 && (y.k - 6.0).abs() < 1e-15);
        let mut dx = [0.0];
        b.derivative(&[0.0], 1.0, &mut dx);
        assert_eq!(dx[0], 1.0);
        // Integrator state weight k / T_i.
        assert!((b.output(&[1.0], Aff::constant(0.0)).c - 4.0).abs() < 1e-15);
    }

    #[test]
    fn static_gain_has_no_state() {
        let b = Block::new("k", &RationalTf::constant(3.0)).unwrap();
        assert_eq!(b.order(), 0);
        assert_eq!(b.output(&[], Aff::constant(2.0)).c, 6.0);
        assert!(Block::new("s", &RationalTf::s()).is_err());
    }
}
