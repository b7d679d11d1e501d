use std::fmt;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::tf::{Complex64, RationalTf};

use super::ImpedanceModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IndexKind {
    Oii,
    Cfi,
    Vfi,
}

impl IndexKind {
    pub const ALL: [IndexKind; 3] = [IndexKind::Oii, IndexKind::Cfi, IndexKind::Vfi];

    pub fn name(self) -> &'static str {
        match self {
            IndexKind::Oii => "oii",
            IndexKind::Cfi => "cfi",
            IndexKind::Vfi => "vfi",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        IndexKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| invalid(format!("unknown index '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ClassLabel {
    GridForming,
    CurrentFollowing,
    CurrentForming,
    VoltageForming,
    DisturbanceAmplifying,
}

impl ClassLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::GridForming => "grid_forming",
            ClassLabel::CurrentFollowing => "current_following",
            ClassLabel::CurrentForming => "current_forming",
            ClassLabel::VoltageForming => "voltage_forming",
            ClassLabel::DisturbanceAmplifying => "disturbance_amplifying",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Boundary tolerances for labelling. Magnitude is relative to the unit
/// circle, phase in radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub mag: f64,
    pub phase: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            mag: 1e-6,
            phase: 1e-6,
        }
    }
}

/// `OII = Z_out / K_d`.
pub fn oii(z_out: &RationalTf, k_d: f64, omega: f64) -> Result<Complex64> {
    if !(k_d > 0.0) {
        return Err(invalid("OII needs a positive droop gain"));
    }
    Ok(z_out.eval_jw(omega)? / k_d)
}

/// `CFI = 1 - Y_dc Z_out`.
pub fn cfi(z_out: &RationalTf, y_dc: &RationalTf, omega: f64) -> Result<Complex64> {
    Ok(1.0 - y_dc.eval_jw(omega)? * z_out.eval_jw(omega)?)
}

/// `VFI = 1 / (1 + Z_g / Z_out)`, evaluated as `Z_out / (Z_out + Z_g)` so that
/// a vanishing output impedance gives the stiff-source limit 0.
pub fn vfi(z_out: &RationalTf, z_g: &RationalTf, omega: f64) -> Result<Complex64> {
    let z = z_out.eval_jw(omega)?;
    let g = z_g.eval_jw(omega)?;
    let s = z + g;
    if s.norm() == 0.0 {
        return Err(Error::Degenerate(format!(
            "output and line impedance both vanish at omega = {omega}"
        )));
    }
    Ok(z / s)
}

/// `OII - (Z'_out / K_d) CFI`; zero for a consistent decomposition.
pub fn oii_cfi_residual(model: &ImpedanceModel, omega: f64) -> Result<Complex64> {
    let o = oii(&model.z_out, model.k_d, omega)?;
    let c = cfi(&model.z_out, &model.y_dc, omega)?;
    let zp = model.z_out_prime.eval_jw(omega)?;
    Ok(o - zp / model.k_d * c)
}

/// Label a sample of an index.
///
/// CFI: following on the unit point (magnitude and phase within tolerance),
/// forming strictly inside the unit circle, and also on the unit-magnitude
/// band when the phase is clearly nonzero but the magnitude is still below 1.
/// Everything else amplifies.
pub fn classify(kind: IndexKind, value: Complex64, tol: Tolerances) -> ClassLabel {
    let m = value.norm();
    match kind {
        IndexKind::Oii => {
            if m <= 1.0 + tol.mag {
                ClassLabel::GridForming
            } else {
                ClassLabel::DisturbanceAmplifying
            }
        }
        IndexKind::Vfi => {
            if m <= 1.0 + tol.mag {
                ClassLabel::VoltageForming
            } else {
                ClassLabel::DisturbanceAmplifying
            }
        }
        IndexKind::Cfi => {
            let ph = value.arg().abs();
            if (m - 1.0).abs() <= tol.mag && ph <= tol.phase {
                ClassLabel::CurrentFollowing
            } else if m < 1.0 - tol.mag || (m < 1.0 && ph > tol.phase) {
                ClassLabel::CurrentForming
            } else {
                ClassLabel::DisturbanceAmplifying
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IndexSample {
    pub omega: f64,
    pub value: Complex64,
    pub label: ClassLabel,
}

impl IndexSample {
    pub fn mag_db(&self) -> f64 {
        20.0 * self.value.norm().log10()
    }

    pub fn phase_deg(&self) -> f64 {
        self.value.arg().to_degrees()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndexCurve {
    pub kind: IndexKind,
    pub samples: Vec<IndexSample>,
}

impl IndexCurve {
    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.value.norm()))
    }
}

/// Evaluate and label an index over a strictly increasing frequency grid.
/// Frequencies are evaluated in parallel; output order follows `omegas`.
pub fn sweep_index(
    kind: IndexKind,
    model: &ImpedanceModel,
    z_g: Option<&RationalTf>,
    omegas: &[f64],
    tol: Tolerances,
) -> Result<IndexCurve> {
    if omegas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("sweep frequencies must be strictly increasing"));
    }
    if kind == IndexKind::Vfi && z_g.is_none() {
        return Err(invalid("VFI needs a line impedance"));
    }
    let samples = omegas
        .par_iter()
        .map(|&w| {
            let value = match kind {
                IndexKind::Oii => oii(&model.z_out, model.k_d, w)?,
                IndexKind::Cfi => cfi(&model.z_out, &model.y_dc, w)?,
                IndexKind::Vfi => vfi(&model.z_out, z_g.expect("checked above"), w)?,
            };
            Ok(IndexSample {
                omega: w,
                value,
                label: classify(kind, value, tol),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IndexCurve { kind, samples })
}

/// A maximal run of consecutive samples sharing a label.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Band {
    pub label: ClassLabel,
    pub omega_lo: f64,
    pub omega_hi: f64,
}

pub fn label_bands(curve: &IndexCurve) -> Vec<Band> {
    let mut out: Vec<Band> = Vec::new();
    for s in &curve.samples {
        match out.last_mut() {
            Some(b) if b.label == s.label => b.omega_hi = s.omega,
            _ => out.push(Band {
                label: s.label,
                omega_lo: s.omega,
                omega_hi: s.omega,
            }),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn polar(m: f64, deg: f64) -> Complex64 {
        Complex64::from_polar(m, deg.to_radians())
    }

    #[test]
    fn labels_follow_definitions() {
        let t = Tolerances::default();
        assert_eq!(classify(IndexKind::Oii, polar(0.5, -30.0), t), ClassLabel::GridForming);
        assert_eq!(classify(IndexKind::Oii, polar(1.0, 80.0), t), ClassLabel::GridForming);
        assert_eq!(classify(IndexKind::Oii, polar(1.01, 0.0), t), ClassLabel::DisturbanceAmplifying);
        assert_eq!(classify(IndexKind::Cfi, polar(1.0, 30.0), t), ClassLabel::DisturbanceAmplifying);
        assert_eq!(classify(IndexKind::Cfi, polar(1.0, 0.0), t), ClassLabel::CurrentFollowing);
        assert_eq!(classify(IndexKind::Cfi, polar(0.3, 60.0), t), ClassLabel::CurrentForming);
        assert_eq!(classify(IndexKind::Cfi, polar(1.2, 0.0), t), ClassLabel::DisturbanceAmplifying);
        assert_eq!(classify(IndexKind::Vfi, polar(1.2, 0.0), t), ClassLabel::DisturbanceAmplifying);
        assert_eq!(classify(IndexKind::Vfi, polar(0.9, 10.0), t), ClassLabel::VoltageForming);
    }

    #[test]
    fn cfi_just_inside_unit_circle_with_phase_is_forming() {
        let t = Tolerances::default();
        let v = polar(1.0 - 1e-7, 1e-4_f64.to_degrees());
        assert_eq!(classify(IndexKind::Cfi, v, t), ClassLabel::CurrentForming);
    }

    #[test]
    fn index_limits() {
        let k = RationalTf::constant(2.0);
        assert_eq!(oii(&k, 2.0, 5.0).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(cfi(&k, &RationalTf::zero(), 5.0).unwrap(), Complex64::new(1.0, 0.0));
        let y = RationalTf::from_coeffs(&[0.0, 1e-3], &[1.0]).unwrap();
        let zc = y.inv().unwrap();
        assert!(cfi(&zc, &y, 10.0).unwrap().norm() < 1e-15);
        assert_eq!(vfi(&k, &RationalTf::zero(), 1.0).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(vfi(&RationalTf::zero(), &RationalTf::constant(0.1), 1.0).unwrap(), Complex64::new(0.0, 0.0));
        let tiny = RationalTf::constant(1e-12);
        assert!(vfi(&tiny, &RationalTf::constant(1.0), 1.0).unwrap().norm() < 1e-11);
        assert!(vfi(&RationalTf::zero(), &RationalTf::zero(), 1.0).is_err());
        assert!(oii(&k, 0.0, 1.0).is_err());
    }

    #[test]
    fn bands_merge_runs() {
        let mk = |w: f64, l| IndexSample {
            omega: w,
            value: Complex64::new(0.0, 0.0),
            label: l,
        };
        let c = IndexCurve {
            kind: IndexKind::Oii,
            samples: vec![
                mk(1.0, ClassLabel::GridForming),
                mk(2.0, ClassLabel::GridForming),
                mk(3.0, ClassLabel::DisturbanceAmplifying),
                mk(4.0, ClassLabel::GridForming),
            ],
        };
        let b = label_bands(&c);
        assert_eq!(b.len(), 3);
        assert_eq!((b[0].omega_lo, b[0].omega_hi), (1.0, 2.0));
        assert_eq!(b[1].label, ClassLabel::DisturbanceAmplifying);
    }

    #[test]
    fn sweep_rejects_unsorted_grid() {
        let m = ImpedanceModel::desired(1.0, RationalTf::from_coeffs(&[0.0, 1e-3], &[1.0]).unwrap()).unwrap();
        assert!(sweep_index(IndexKind::Oii, &m, None, &[2.0, 1.0], Tolerances::default()).is_err());
        assert!(sweep_index(IndexKind::Vfi, &m, None, &[1.0, 2.0], Tolerances::default()).is_err());
        let c = sweep_index(IndexKind::Oii, &m, None, &[1.0, 1000.0, 2.0 * PI * 1e4], Tolerances::default()).unwrap();
        assert!(c.samples.iter().all(|s| s.label == ClassLabel::GridForming));
    }
}
