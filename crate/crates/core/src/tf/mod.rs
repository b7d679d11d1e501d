//! Rational transfer-function algebra over real coefficients.

mod polynomial;
mod rational;
mod roots;

pub use num_complex::Complex64;
pub use polynomial::Polynomial;
pub use rational::{Asymptote, RationalTf};

/// A complex frequency-response sample at angular frequency `omega` (rad/s).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexSample {
    pub omega: f64,
    pub value: Complex64,
}

/// `n` logarithmically spaced points on `[min, max]`, endpoints included.
pub fn log_space(min: f64, max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![min],
        _ => {
            let (a, b) = (min.log10(), max.log10());
            (0..n)
                .map(|k| {
                    if k == n - 1 {
                        max
                    } else {
                        10f64.powf(a + (b - a) * k as f64 / (n - 1) as f64)
                    }
                })
                .collect()
        }
    }
}

/// Log-spaced grid with at least `per_decade` points per decade.
pub fn log_space_per_decade(min: f64, max: f64, per_decade: usize) -> Vec<f64> {
    let decades = (max / min).log10();
    let n = (decades * per_decade as f64).ceil() as usize + 1;
    log_space(min, max, n.max(2))
}
