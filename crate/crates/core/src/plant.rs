//! Averaged small-signal model of the bidirectional boost source converter.
//!
//! Averaged equations (upper-switch duty `d`, switch-node voltage `d v_dc`):
//!
//! ```text
//! L_f di_f/dt = v_in - d v_dc
//! v_dc        = (1/Y_dc) (d i_f - i_o)      with Y_dc = s C_dc / (1 + s C_dc r_dc)
//! ```
//!
//! Linearized at the operating point with constant input voltage this gives
//! `di_f = G_di dd + G_oi di_o` and `dv_dc = G_dv dd - Z_o di_o`.

use crate::error::{invalid, Result};
use crate::tf::{Polynomial, RationalTf};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoostParams {
    /// Filter inductance (H).
    pub l_f: f64,
    /// Output capacitance (F).
    pub c_dc: f64,
    /// Capacitor series resistance (ohm).
    pub r_dc: f64,
    /// Switching frequency (Hz).
    pub f_s: f64,
    /// Equivalent control delay (s).
    pub t_d: f64,
}

impl BoostParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("l_f", self.l_f),
            ("c_dc", self.c_dc),
            ("f_s", self.f_s),
            ("t_d", self.t_d),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.r_dc >= 0.0 && self.r_dc.is_finite()) {
            return Err(invalid(format!("r_dc must be non-negative, got {}", self.r_dc)));
        }
        Ok(())
    }
}

/// Linearization point of the converter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatingPoint {
    pub v_in: f64,
    pub v_o: f64,
    pub i_o: f64,
    pub d: f64,
    pub i_f: f64,
}

/// Lossless averaged boost steady state: `D = V_in / V_o`, `I_f = I_o / D`.
pub fn operating_point(v_in: f64, v_o: f64, i_o: f64) -> Result<OperatingPoint> {
    if !(v_in > 0.0 && v_in.is_finite()) {
        return Err(invalid(format!("input voltage must be positive, got {v_in}")));
    }
    if !(v_o >= v_in && v_o.is_finite()) {
        return Err(invalid(format!(
            "boost cannot step down: V_in = {v_in} V exceeds V_o = {v_o} V"
        )));
    }
    if !i_o.is_finite() {
        return Err(invalid("output current must be finite"));
    }
    let d = v_in / v_o;
    Ok(OperatingPoint {
        v_in,
        v_o,
        i_o,
        d,
        i_f: i_o / d,
    })
}

/// Equivalent admittance of the output capacitor with its series resistance.
pub fn y_dc(params: &BoostParams) -> RationalTf {
    RationalTf::from_coeffs(&[0.0, params.c_dc], &[1.0, params.c_dc * params.r_dc])
        .expect("capacitor admittance denominator is nonzero")
}

/// The four plant transfer functions over their shared denominator.
#[derive(Clone, Debug, PartialEq)]
pub struct PlantTfs {
    pub g_di: RationalTf,
    pub g_oi: RationalTf,
    pub g_dv: RationalTf,
    pub z_o: RationalTf,
    /// `(1 + s C r)(1 + L_f Y_dc s / D^2)`, common to all four.
    pub char_poly: Polynomial,
    /// Numerators matching `char_poly`, in the order `g_di, g_oi, g_dv, z_o`.
    pub numerators: [Polynomial; 4],
}

pub fn boost_tfs(params: &BoostParams, op: &OperatingPoint) -> Result<PlantTfs> {
    params.validate()?;
    if !(op.d > 0.0 && op.d <= 1.0) {
        return Err(invalid(format!("duty cycle must lie in (0, 1], got {}", op.d)));
    }
    let BoostParams { l_f, c_dc, r_dc, .. } = *params;
    let OperatingPoint {
        v_in, v_o, i_o, d, i_f,
    } = *op;
    let d2 = d * d;
    let esr = Polynomial::new(vec![1.0, c_dc * r_dc]);
    let char_poly = Polynomial::new(vec![1.0, c_dc * r_dc, l_f * c_dc / d2]);

    let n_di = Polynomial::new(vec![-i_o / d2, -(i_o * c_dc * r_dc + v_o * c_dc) / d2]);
    let n_oi = esr.scale(1.0 / d);
    let n_dv = &Polynomial::new(vec![-v_in / d2, l_f * i_f / d2]) * &esr;
    let n_zo = &Polynomial::new(vec![0.0, l_f / d2]) * &esr;

    let mk = |n: &Polynomial| RationalTf::new(n.clone(), char_poly.clone());
    Ok(PlantTfs {
        g_di: mk(&n_di)?,
        g_oi: mk(&n_oi)?,
        g_dv: mk(&n_dv)?,
        z_o: mk(&n_zo)?,
        numerators: [n_di, n_oi, n_dv, n_zo],
        char_poly,
    })
}
