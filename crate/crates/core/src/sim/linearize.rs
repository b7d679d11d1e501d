use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::tf::Complex64;

use super::model::SimModel;
use super::source::Source;

/// Equilibrium tolerance on the physically weighted residual.
pub const EQUILIBRIUM_TOL: f64 = 1e-9;

/// `x' = A x + B u`, `y = C x + D u` around an equilibrium. The input is a
/// current drawn from the source bus; the outputs are `[v_dc, i_o]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DMatrix<f64>,
    pub d: DVector<f64>,
}

fn step_size(x: f64) -> f64 {
    (1e-6 * x.abs()).max(1e-6)
}

/// Central-difference Jacobians of `f(x, u) -> (dx, y)`.
fn jacobians<F>(x0: &[f64], u0: f64, weights: &[f64], mut f: F) -> Result<LinearModel>
where
    F: FnMut(&[f64], f64, &mut [f64]) -> [f64; 2],
{
    let n = x0.len();
    let mut f0 = vec![0.0; n];
    f(x0, u0, &mut f0);
    let residual = f0
        .iter()
        .zip(weights)
        .fold(0.0f64, |m, (d, w)| m.max((d * w).abs()));
    if residual > EQUILIBRIUM_TOL {
        return Err(Error::NonEquilibrium { residual });
    }
    let mut a = DMatrix::zeros(n, n);
    let mut c = DMatrix::zeros(2, n);
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    let mut xp = x0.to_vec();
    for j in 0..n {
        let h = step_size(x0[j]);
        xp[j] = x0[j] + h;
        let yp = f(&xp, u0, &mut fp);
        xp[j] = x0[j] - h;
        let ym = f(&xp, u0, &mut fm);
        xp[j] = x0[j];
        for i in 0..n {
            a[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
        for i in 0..2 {
            c[(i, j)] = (yp[i] - ym[i]) / (2.0 * h);
        }
    }
    let h = step_size(u0);
    let yp = f(x0, u0 + h, &mut fp);
    let ym = f(x0, u0 - h, &mut fm);
    let b = DVector::from_iterator(n, (0..n).map(|i| (fp[i] - fm[i]) / (2.0 * h)));
    let d = DVector::from_iterator(2, (0..2).map(|i| (yp[i] - ym[i]) / (2.0 * h)));
    Ok(LinearModel { a, b, c, d })
}

/// Linearize the full microgrid with an injection current at the source bus.
pub fn linearize_numeric(model: &SimModel) -> Result<LinearModel> {
    let powers: Vec<f64> = model.loads.iter().map(|l| l.p).collect();
    jacobians(model.initial_state(), 0.0, &model.weights(), |x, u, dx| {
        let out = model.rhs(x, &powers, u, dx);
        [out.source.v_dc, out.i_o]
    })
}

/// Linearize a source alone, with its output current as the input.
pub fn linearize_source(source: &Source) -> Result<LinearModel> {
    let x0 = source.initial_state();
    jacobians(&x0, source.nominal_current(), &source.residual_weights(), |x, u, dx| {
        let out = source.derivs(x, u, dx);
        [out.v_dc, u]
    })
}

/// Rows of `C (jw I - A)^-1 B + D`.
pub fn frequency_response(lm: &LinearModel, omega: f64) -> Result<[Complex64; 2]> {
    let n = lm.a.nrows();
    let m = DMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j { Complex64::new(0.0, omega) } else { Complex64::new(0.0, 0.0) };
        diag - Complex64::new(lm.a[(i, j)], 0.0)
    });
    let rhs = DVector::from_iterator(n, lm.b.iter().map(|&v| Complex64::new(v, 0.0)));
    let sol = m
        .lu()
        .solve(&rhs)
        .ok_or(Error::PoleOnAxis { omega })?;
    let mut out = [Complex64::new(0.0, 0.0); 2];
    for (r, o) in out.iter_mut().enumerate() {
        *o = (0..n).fold(Complex64::new(lm.d[r], 0.0), |acc, j| acc + lm.c[(r, j)] * sol[j]);
    }
    Ok(out)
}

/// Source output impedance `-dv_dc / di_o` from the linearized model.
pub fn zout_from_statespace(lm: &LinearModel, omega: f64) -> Result<Complex64> {
    let [hv, hi] = frequency_response(lm, omega)?;
    if hi.norm() == 0.0 {
        return Err(Error::Degenerate(format!("no output current response at omega = {omega}")));
    }
    Ok(-hv / hi)
}
