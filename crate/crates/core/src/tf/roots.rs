//! Polynomial roots via eigenvalues of the balanced companion matrix.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use super::Polynomial;

const RADIX: f64 = 2.0;

pub(crate) fn polynomial_roots(p: &Polynomial) -> Vec<Complex64> {
    if p.is_zero() {
        return Vec::new();
    }
    let zeros = p.origin_multiplicity();
    let q = p.shift_down(zeros);
    let mut out = vec![Complex64::new(0.0, 0.0); zeros];
    let n = q.degree();
    match n {
        0 => {}
        1 => out.push(Complex64::new(-q.coeffs()[0] / q.coeffs()[1], 0.0)),
        _ => out.extend(companion_eigenvalues(&q)),
    }
    sort_roots(&mut out);
    out
}

fn companion_eigenvalues(p: &Polynomial) -> Vec<Complex64> {
    let c = p.coeffs();
    let n = p.degree();
    let lead = p.leading();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        m[(i, n - 1)] = -c[i] / lead;
    }
    balance(&mut m);
    match Schur::try_new(m.clone(), f64::EPSILON, 10_000) {
        Some(schur) => schur.complex_eigenvalues().iter().copied().collect(),
        None => m.complex_eigenvalues().iter().copied().collect(),
    }
}

/// Parlett–Reinsch diagonal similarity balancing with power-of-two factors,
/// so the scaling itself introduces no rounding.
fn balance(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut g = r / RADIX;
            let mut f = 1.0;
            let s = c + r;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    m[(i, j)] *= g;
                }
                for j in 0..n {
                    m[(j, i)] *= f;
                }
            }
        }
    }
}

fn sort_roots(r: &mut [Complex64]) {
    r.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn quadratic_roots() {
        let p = Polynomial::new(vec![2.0, 3.0, 1.0]);
        let r = p.roots();
        assert_eq!(r.len(), 2);
        assert!(close(r[0], Complex64::new(-2.0, 0.0), 1e-12));
        assert!(close(r[1], Complex64::new(-1.0, 0.0), 1e-12));
    }

    #[test]
    fn imaginary_pair() {
        let r = Polynomial::new(vec![1.0, 0.0, 1.0]).roots();
        assert!(close(r[0], Complex64::new(0.0, -1.0), 1e-12));
        assert!(close(r[1], Complex64::new(0.0, 1.0), 1e-12));
    }

    #[test]
    fn badly_scaled_polynomial() {
        // Roots spread over eight decades.
        let roots = [-1e-3, -1.0, -1e2, -1e5].map(|x| Complex64::new(x, 0.0));
        let p = Polynomial::from_roots(&roots);
        let r = p.roots();
        for (got, want) in r.iter().zip([-1e5, -1e2, -1.0, -1e-3]) {
            assert!((got.re - want).abs() <= 1e-8 * want.abs(), "{got} vs {want}");
        }
    }

    #[test]
    fn origin_roots_are_exact() {
        let r = Polynomial::new(vec![0.0, 0.0, 1.0, 1.0]).roots();
        assert_eq!(r.iter().filter(|z| z.norm() == 0.0).count(), 2);
    }
}
