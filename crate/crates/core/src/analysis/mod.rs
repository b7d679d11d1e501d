//! Closed-loop output impedance, its decomposition, and the forming indices.

mod indices;
mod passivity;

pub use indices::{
    cfi, classify, label_bands, oii, oii_cfi_residual, sweep_index, vfi, Band, ClassLabel, IndexCurve,
    IndexKind, IndexSample, Tolerances,
};
pub use passivity::{passivity_check, ConditionReport, LimitStatus, PassivityReport};

use crate::control::{
    duty_tfs, tune_current_controller, ControlOptions, ControllerConfig, CurrentLoop, DutyTfs, Modulator,
};
use crate::error::{invalid, Error, Result};
use crate::plant::{boost_tfs, y_dc, BoostParams, OperatingPoint, PlantTfs};
use crate::tf::{Polynomial, RationalTf};

/// Relative remainder tolerated when dividing out a factor that is known to
/// be exact in real arithmetic.
const EXACT_DIV_TOL: f64 = 1e-9;

/// Output impedance `-dv_dc / di_o` of the plant closed through the duty map.
///
/// With plant numerators `n_x` over the shared polynomial `P` and duty
/// numerators `q_x` over a common `Q`,
///
/// ```text
/// Z_out = (Q n_zo - q_id K - q_od n_dv) / (P Q - q_id n_di - q_vd n_dv)
/// K     = (n_zo n_di + n_dv n_oi) / P
/// ```
///
/// `K` is divided out exactly. For the averaged boost it reduces to
/// `-(1 + s C r) V_in / D^3`, which keeps the numerator free of the large
/// cancellation the expanded form carries.
pub fn closed_loop_zout(plant: &PlantTfs, duty: &DutyTfs) -> Result<RationalTf> {
    let [n_di, n_oi, n_dv, n_zo] = &plant.numerators;
    let p = &plant.char_poly;
    let (q, [q_id, q_od, q_vd]) = common_denominator([&duty.g_id, &duty.g_od, &duty.g_vd]);

    let cross = &(n_zo * n_di) + &(n_dv * n_oi);
    let den = &(&(p * &q) - &(&q_id * n_di)) - &(&q_vd * n_dv);
    if den.is_zero() {
        return Err(Error::Degenerate(
            "1 - G_id G_di - G_vd G_dv is identically zero".into(),
        ));
    }
    match cross.exact_quotient(p, EXACT_DIV_TOL) {
        Some(k) => {
            let num = &(&(&q * n_zo) - &(&q_id * &k)) - &(&q_od * n_dv);
            RationalTf::new(num, den)
        }
        None => {
            // General plants: keep the shared factor.
            let num = &(&(&(p * &q) * n_zo) - &(&q_id * &cross)) - &(&(&q_od * p) * n_dv);
            RationalTf::new(num, p * &den)
        }
    }
}

/// Least common denominator of a few rational functions together with the
/// numerators rescaled onto it. Denominators that already divide the running
/// product are not multiplied in again.
fn common_denominator(tfs: [&RationalTf; 3]) -> (Polynomial, [Polynomial; 3]) {
    let mut q = Polynomial::one();
    for tf in tfs {
        if tf.is_zero() || tf.den().is_constant() {
            continue;
        }
        let d = tf.den();
        if q.exact_quotient(d, EXACT_DIV_TOL).is_some() {
            continue;
        }
        if d.exact_quotient(&q, EXACT_DIV_TOL).is_some() {
            q = d.clone();
        } else {
            q = &q * d;
        }
    }
    let nums = tfs.map(|tf| {
        if tf.is_zero() {
            return Polynomial::zero();
        }
        let factor = q
            .exact_quotient(tf.den(), EXACT_DIV_TOL)
            .expect("denominator divides the common product");
        tf.num() * &factor
    });
    (q, nums)
}

/// `Z'_out = Z_out / (1 - Y_dc Z_out)`, the impedance seen in series with the
/// output capacitor branch.
pub fn series_impedance(z_out: &RationalTf, y_dc: &RationalTf) -> Result<RationalTf> {
    let num = z_out.num() * y_dc.den();
    let den = &(z_out.den() * y_dc.den()) - &(y_dc.num() * z_out.num());
    if den.is_zero() {
        return Err(Error::Degenerate(
            "output impedance equals the capacitor branch; no series part".into(),
        ));
    }
    RationalTf::new(num, den)
}

/// `Z_out,d = K_d / (1 + Y_dc K_d)`.
pub fn desired_zout(k_d: f64, y_dc: &RationalTf) -> Result<RationalTf> {
    if !(k_d > 0.0 && k_d.is_finite()) {
        return Err(invalid(format!("droop gain must be positive, got {k_d}")));
    }
    let num = y_dc.den().scale(k_d);
    let den = y_dc.den() + &y_dc.num().scale(k_d);
    RationalTf::new(num, den)
}

/// `omega_c = 1 / (C_dc K_d)`.
pub fn crossover_freq(c_dc: f64, k_d: f64) -> Result<f64> {
    if !(c_dc > 0.0 && k_d > 0.0) {
        return Err(invalid("crossover needs positive capacitance and droop gain"));
    }
    Ok(1.0 / (c_dc * k_d))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridModel {
    pub r_g: f64,
    pub l_g: f64,
}

impl GridModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_g >= 0.0 && self.l_g >= 0.0 && self.r_g.is_finite() && self.l_g.is_finite()) {
            return Err(invalid(format!(
                "line impedance must be non-negative, got r_g = {}, L_g = {}",
                self.r_g, self.l_g
            )));
        }
        Ok(())
    }

    pub fn z_g(&self) -> RationalTf {
        RationalTf::from_coeffs(&[self.r_g, self.l_g], &[1.0]).expect("constant denominator")
    }
}

/// Output impedance together with its series part and the capacitor admittance.
#[derive(Clone, Debug, PartialEq)]
pub struct ImpedanceModel {
    pub z_out: RationalTf,
    pub z_out_prime: RationalTf,
    pub y_dc: RationalTf,
    pub k_d: f64,
}

impl ImpedanceModel {
    pub fn new(z_out: RationalTf, y_dc: RationalTf, k_d: f64) -> Result<Self> {
        if !(k_d > 0.0 && k_d.is_finite()) {
            return Err(invalid(format!("droop gain must be positive, got {k_d}")));
        }
        let z_out_prime = series_impedance(&z_out, &y_dc)?;
        Ok(Self {
            z_out,
            z_out_prime,
            y_dc,
            k_d,
        })
    }

    /// The desired profile `K_d || 1/Y_dc`.
    pub fn desired(k_d: f64, y_dc: RationalTf) -> Result<Self> {
        let z = desired_zout(k_d, &y_dc)?;
        Ok(Self {
            z_out: z,
            z_out_prime: RationalTf::constant(k_d),
            y_dc,
            k_d,
        })
    }
}

/// A boost source converter with its control law, ready for impedance assembly.
#[derive(Clone, Debug, PartialEq)]
pub struct ConverterModel {
    pub params: BoostParams,
    pub op: OperatingPoint,
    pub controller: ControllerConfig,
    pub current: CurrentLoop,
    pub options: ControlOptions,
}

impl ConverterModel {
    pub fn new(
        params: BoostParams,
        op: OperatingPoint,
        controller: ControllerConfig,
        options: ControlOptions,
    ) -> Result<Self> {
        params.validate()?;
        controller.validate()?;
        let current = tune_current_controller(&params, options.bandwidth_fraction)?;
        Ok(Self {
            params,
            op,
            controller,
            current,
            options,
        })
    }

    pub fn modulator(&self) -> Result<Modulator> {
        Modulator::new(&self.op, self.options.voltage_feedforward)
    }

    pub fn plant(&self) -> Result<PlantTfs> {
        boost_tfs(&self.params, &self.op)
    }

    pub fn duty(&self) -> Result<DutyTfs> {
        duty_tfs(
            &self.controller,
            &self.current,
            &self.modulator()?,
            &self.op,
            &self.options,
            self.params.t_d,
        )
    }

    pub fn z_out(&self) -> Result<RationalTf> {
        closed_loop_zout(&self.plant()?, &self.duty()?)
    }

    pub fn impedance(&self) -> Result<ImpedanceModel> {
        ImpedanceModel::new(self.z_out()?, y_dc(&self.params), self.controller.k_d())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::ControllerKind;
    use crate::plant::operating_point;
    use crate::tf::{log_space, Complex64};

    fn params(r_dc: f64) -> BoostParams {
        BoostParams {
            l_f: 1e-3,
            c_dc: 1e-3,
            r_dc,
            f_s: 20e3,
            t_d: 75e-6,
        }
    }

    #[test]
    fn open_loop_is_plant_impedance() {
        let op = operating_point(350.0, 700.0, 10.0).unwrap();
        let p = boost_tfs(&params(0.01), &op).unwrap();
        let z = closed_loop_zout(&p, &DutyTfs::zero()).unwrap();
        for w in log_space(1.0, 1e5, 20) {
            let a = z.eval_jw(w).unwrap();
            let b = p.z_o.eval_jw(w).unwrap();
            assert!((a - b).norm() <= 1e-13 * b.norm());
        }
    }

    #[test]
    fn structured_form_matches_expanded() {
        let op = operating_point(350.0, 700.0, 10.0).unwrap();
        let p = boost_tfs(&params(0.01), &op).unwrap();
        let cl = tune_current_controller(&params(0.01), 0.07).unwrap();
        let cfg = ControllerConfig::build(
            ControllerKind::ViDroopZd,
            &params(0.01),
            &cl,
            1.0,
            &Default::default(),
            &Default::default(),
        )
        .unwrap();
        let m = Modulator::new(&op, true).unwrap();
        let d = duty_tfs(&cfg, &cl, &m, &op, &ControlOptions::default(), 75e-6).unwrap();
        let z = closed_loop_zout(&p, &d).unwrap();
        for w in log_space(1.0, 6e4, 25) {
            let gid = d.g_id.eval_jw(w).unwrap();
            let god = d.g_od.eval_jw(w).unwrap();
            let gvd = d.g_vd.eval_jw(w).unwrap();
            let gdi = p.g_di.eval_jw(w).unwrap();
            let goi = p.g_oi.eval_jw(w).unwrap();
            let gdv = p.g_dv.eval_jw(w).unwrap();
            let zo = p.z_o.eval_jw(w).unwrap();
            let one = Complex64::new(1.0, 0.0);
            let want = (zo * (one - gid * gdi) - gdv * (gid * goi + god)) / (one - gid * gdi - gvd * gdv);
            let got = z.eval_jw(w).unwrap();
            assert!((got - want).norm() <= 1e-6 * want.norm(), "w = {w}: {got} vs {want}");
        }
    }

    #[test]
    fn series_inverts_parallel() {
        let y = y_dc(&params(0.01));
        let z = RationalTf::constant(2.0).parallel(&y.inv().unwrap()).unwrap();
        let zp = series_impedance(&z, &y).unwrap();
        for w in [0.1, 10.0, 1e3, 1e5] {
            assert!((zp.eval_jw(w).unwrap() - Complex64::new(2.0, 0.0)).norm() < 1e-12);
        }
        let zp = series_impedance(&z, &RationalTf::zero()).unwrap();
        assert!((zp.eval_jw(7.0).unwrap() - z.eval_jw(7.0).unwrap()).norm() < 1e-15);
        assert!(series_impedance(&y.inv().unwrap(), &y).is_err());
    }

    #[test]
    fn desired_profile_corner() {
        let y = y_dc(&params(0.0));
        let z = desired_zout(1.0, &y).unwrap();
        let wc = crossover_freq(1e-3, 1.0).unwrap();
        assert_eq!(wc, 1000.0);
        assert!((z.eval_jw(wc).unwrap().norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(z.dc_gain(), Some(1.0));
        assert_eq!(crossover_freq(100e-6, 2.0).unwrap(), 5000.0);
        assert_eq!(crossover_freq(2e-3, 1.0).unwrap(), 500.0);
    }
}
