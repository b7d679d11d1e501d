use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::tf::RationalTf;

/// Outcome of the phase condition in the `omega -> 0` or `omega -> infinity` limit,
/// read off the leading term of the rational function.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LimitStatus {
    Pass,
    /// Leading phase sits exactly on +-90 degrees; higher-order terms decide.
    Boundary,
    Fail,
    /// Identically zero function; no phase exists.
    Unchecked,
}

impl LimitStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            LimitStatus::Pass => "pass",
            LimitStatus::Boundary => "boundary",
            LimitStatus::Fail => "fail",
            LimitStatus::Unchecked => "unchecked",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    /// True when the phase lies strictly inside (-90, 90) degrees at every grid point.
    pub pass: bool,
    pub violations: Vec<f64>,
    /// Contiguous runs of violating grid points, as `(first, last)` frequency.
    pub bands: Vec<(f64, f64)>,
    pub dc_limit: LimitStatus,
    pub hf_limit: LimitStatus,
}

/// Grid screen of the two phase conditions: the source impedance (through its
/// OII) and the line impedance must both stay inside (-90, 90) degrees.
///
/// Sampling is a necessary-condition check only; the DC and high-frequency
/// limits are reported separately and do not enter `pass`.
#[derive(Clone, Debug, PartialEq)]
pub struct PassivityReport {
    pub source: ConditionReport,
    pub line: ConditionReport,
}

impl PassivityReport {
    pub fn pass(&self) -> bool {
        self.source.pass && self.line.pass
    }
}

pub fn passivity_check(
    z_out: &RationalTf,
    k_d: f64,
    z_g: &RationalTf,
    omegas: &[f64],
) -> Result<PassivityReport> {
    if !(k_d > 0.0) {
        return Err(invalid("passivity screen needs a positive droop gain"));
    }
    Ok(PassivityReport {
        source: condition(&z_out.scale(1.0 / k_d), omegas)?,
        line: condition(z_g, omegas)?,
    })
}

fn condition(tf: &RationalTf, omegas: &[f64]) -> Result<ConditionReport> {
    let flags = omegas
        .par_iter()
        .map(|&w| Ok(!(tf.eval_jw(w)?.arg().abs() < FRAC_PI_2)))
        .collect::<Result<Vec<bool>>>()?;
    let violations: Vec<f64> = omegas
        .iter()
        .zip(&flags)
        .filter(|(_, &bad)| bad)
        .map(|(&w, _)| w)
        .collect();
    let mut bands = Vec::new();
    let mut start: Option<usize> = None;
    for i in 0..=flags.len() {
        let bad = flags.get(i).copied().unwrap_or(false);
        match (bad, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                bands.push((omegas[s], omegas[i - 1]));
                start = None;
            }
            _ => {}
        }
    }
    Ok(ConditionReport {
        pass: violations.is_empty(),
        violations,
        bands,
        dc_limit: limit_status(tf.low_frequency_asymptote().map(|a| a.phase())),
        hf_limit: limit_status(tf.high_frequency_asymptote().map(|a| a.phase())),
    })
}

fn limit_status(phase: Option<f64>) -> LimitStatus {
    match phase {
        None => LimitStatus::Unchecked,
        Some(p) if (p.abs() - FRAC_PI_2).abs() < 1e-12 => LimitStatus::Boundary,
        Some(p) if p.abs() < FRAC_PI_2 => LimitStatus::Pass,
        Some(_) => LimitStatus::Fail,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tf::log_space_per_decade;

    #[test]
    fn resistor_and_rl_line_pass() {
        let w = log_space_per_decade(1.0, 1e5, 100);
        let zg = RationalTf::from_coeffs(&[0.05, 10e-6], &[1.0]).unwrap();
        let r = passivity_check(&RationalTf::constant(1.0), 1.0, &zg, &w).unwrap();
        assert!(r.pass());
        assert_eq!(r.source.dc_limit, LimitStatus::Pass);
        assert_eq!(r.line.dc_limit, LimitStatus::Pass);
        assert_eq!(r.line.hf_limit, LimitStatus::Boundary);
    }

    #[test]
    fn pure_inductor_line_fails() {
        let w = [1.0, 10.0];
        let zg = RationalTf::from_coeffs(&[0.0, 1e-5], &[1.0]).unwrap();
        let r = passivity_check(&RationalTf::constant(1.0), 1.0, &zg, &w).unwrap();
        assert!(r.source.pass && !r.line.pass);
    }

    #[test]
    fn differentiator_cascade_violates() {
        // s^2 / (s + 1)^2 tends to +180 degrees at low frequency.
        let z = RationalTf::from_coeffs(&[0.0, 0.0, 1.0], &[1.0, 2.0, 1.0]).unwrap();
        let w = log_space_per_decade(0.01, 100.0, 50);
        let r = passivity_check(&z, 1.0, &RationalTf::constant(1.0), &w).unwrap();
        assert!(!r.source.pass);
        assert_eq!(r.source.bands.len(), 1);
        assert_eq!(r.source.bands[0].0, 0.01);
        assert!((r.source.bands[0].1 - 1.0).abs() < 0.1);
        assert_eq!(r.source.dc_limit, LimitStatus::Fail);
        assert_eq!(r.source.hf_limit, LimitStatus::Pass);
    }
}
