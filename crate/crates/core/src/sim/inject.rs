use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::tf::{Complex64, ComplexSample};

use super::integrate::{check_state, Rk4};
use super::model::SimModel;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InjectionConfig {
    /// Peak injected current (A); `None` uses 1% of the source current.
    pub amplitude: Option<f64>,
    /// Minimum number of injection periods.
    pub cycles: usize,
    /// Upper bound on the step; the actual step divides the period evenly.
    pub dt_max: f64,
    /// Minimum record length (s), so fast frequencies still let slow modes settle.
    pub min_record: f64,
}

impl Default for InjectionConfig {
    fn default() -> Self {
        Self {
            amplitude: None,
            cycles: 20,
            dt_max: 5e-6,
            min_record: 0.4,
        }
    }
}

/// Output impedance measured by drawing `a sin(omega t)` from the source bus.
///
/// The first half of the record is discarded; the fundamental of `v_dc` and
/// of the total output current are extracted by single-bin correlation over
/// a whole number of periods, and `-V/I` is returned.
pub fn measure_impedance_injection(
    model: &SimModel,
    omegas: &[f64],
    cfg: &InjectionConfig,
) -> Result<Vec<ComplexSample>> {
    if cfg.cycles < 20 {
        return Err(Error::RecordTooShort(format!(
            "{} cycles requested, at least 20 needed",
            cfg.cycles
        )));
    }
    if !(cfg.dt_max > 0.0) {
        return Err(invalid("injection step bound must be positive"));
    }
    let amp = cfg
        .amplitude
        .unwrap_or(0.01 * model.source.nominal_current().abs().max(1e-3));
    if !(amp > 0.0 && amp.is_finite()) {
        return Err(invalid(format!("injection amplitude must be positive, got {amp}")));
    }
    omegas
        .par_iter()
        .map(|&w| measure_one(model, w, amp, cfg))
        .collect()
}

fn measure_one(model: &SimModel, omega: f64, amp: f64, cfg: &InjectionConfig) -> Result<ComplexSample> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(invalid(format!("injection frequency must be positive, got {omega}")));
    }
    let period = 2.0 * PI / omega;
    let per_period = (period / cfg.dt_max).ceil().max(8.0) as usize;
    let dt = period / per_period as f64;
    let mut periods = cfg.cycles.max((cfg.min_record / period).ceil() as usize);
    periods += periods % 2;
    let total = periods * per_period;
    let keep_from = total / 2;

    let powers: Vec<f64> = model.loads.iter().map(|l| l.p).collect();
    let mut x = model.x0.clone();
    let mut rk = Rk4::new(model.n_states());
    let n = total - keep_from;
    let mut v = Vec::with_capacity(n);
    let mut i = Vec::with_capacity(n);
    let inj = |k: usize, half: f64| amp * (omega * (k as f64 + half) * dt).sin();
    for k in 0..total {
        let out = rk.step(model, &mut x, &powers, [inj(k, 0.0), inj(k, 0.5), inj(k, 1.0)], dt);
        if k >= keep_from {
            v.push(out.source.v_dc);
            i.push(out.i_o);
        }
        check_state(&x, (k + 1) as f64 * dt)?;
    }
    let phasor = |xs: &[f64]| {
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        xs.iter().enumerate().fold(Complex64::new(0.0, 0.0), |acc, (j, &x)| {
            let t = (keep_from + j) as f64 * dt;
            acc + (x - mean) * Complex64::from_polar(1.0, -omega * t)
        })
    };
    let pv = phasor(&v);
    let pi = phasor(&i);
    if pi.norm() == 0.0 {
        return Err(Error::Degenerate("no injected current reached the bus".into()));
    }
    Ok(ComplexSample {
        omega,
        value: -pv / pi,
    })
}
