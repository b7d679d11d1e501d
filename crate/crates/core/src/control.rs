//! Inner current loop, modulator linearization and the five decentralized
//! voltage-control laws, reduced to the duty-cycle transfer functions
//! `dd = G_id di_f + G_od di_o + G_vd dv_dc`.
//!
//! Every law is written as a current reference
//! `di_f* = h_f di_f + h_o di_o + h_v dv_dc`. The inner PI produces the
//! switch-node voltage reference `v_sw* = v_in - R_i (i_f* - i_f)`, and the
//! modulator divides by the measured (feedforward) or nominal bus voltage.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::plant::{BoostParams, OperatingPoint};
use crate::tf::RationalTf;

pub const DEFAULT_BANDWIDTH_FRACTION: f64 = 0.07;

#[derive(Clone, Debug, PartialEq)]
pub struct CurrentLoop {
    pub k_pi: f64,
    pub t_ii: f64,
    pub omega_bi: f64,
    pub r_i: RationalTf,
}

/// Internal-model tuning of the inductor-current PI.
pub fn tune_current_controller(params: &BoostParams, bandwidth_fraction: f64) -> Result<CurrentLoop> {
    params.validate()?;
    if !(bandwidth_fraction > 0.0 && bandwidth_fraction < 0.5) {
        return Err(invalid(format!(
            "bandwidth fraction must lie in (0, 0.5), got {bandwidth_fraction}"
        )));
    }
    let omega_bi = bandwidth_fraction * 2.0 * PI * params.f_s;
    let k_pi = omega_bi * params.l_f;
    let t_ii = params.c_dc * params.l_f / params.t_d;
    Ok(CurrentLoop {
        k_pi,
        t_ii,
        omega_bi,
        r_i: RationalTf::pi(k_pi, t_ii)?,
    })
}

/// Small-signal PWM map `dd = m_sw dv_sw* + m_v dv_dc`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Modulator {
    pub v_o: f64,
    pub d: f64,
    pub feedforward: bool,
}

impl Modulator {
    pub fn new(op: &OperatingPoint, feedforward: bool) -> Result<Self> {
        if !(op.v_o > 0.0) {
            return Err(invalid("modulator needs a positive bus voltage"));
        }
        Ok(Self {
            v_o: op.v_o,
            d: op.d,
            feedforward,
        })
    }

    pub fn m_sw(&self) -> f64 {
        1.0 / self.v_o
    }

    pub fn m_v(&self) -> f64 {
        if self.feedforward {
            -self.d / self.v_o
        } else {
            0.0
        }
    }

    pub fn apply(&self, dv_sw: f64, dv_dc: f64) -> f64 {
        self.m_sw() * dv_sw + self.m_v() * dv_dc
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ControllerKind {
    IvDroop,
    ViDroopIf,
    ViDroopIo,
    ViDroopZd,
    Vdcm,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 5] = [
        ControllerKind::IvDroop,
        ControllerKind::ViDroopIf,
        ControllerKind::ViDroopIo,
        ControllerKind::ViDroopZd,
        ControllerKind::Vdcm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::IvDroop => "iv_droop",
            ControllerKind::ViDroopIf => "vi_droop_if",
            ControllerKind::ViDroopIo => "vi_droop_io",
            ControllerKind::ViDroopZd => "vi_droop_zd",
            ControllerKind::Vdcm => "vdcm",
        }
    }

    /// True for the laws whose droop term acts on the inductor current.
    pub fn droops_inductor_current(self) -> bool {
        matches!(self, ControllerKind::IvDroop | ControllerKind::ViDroopIf)
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ControllerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ControllerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| invalid(format!("unknown controller '{s}'")))
    }
}

/// Decentralized voltage-control law with its embedded transfer functions.
#[derive(Clone, Debug, PartialEq)]
pub enum ControllerConfig {
    IvDroop { k_d: f64, g_lpf: RationalTf },
    ViDroopIf { k_d: f64, r_v: RationalTf },
    ViDroopIo { k_d: f64, r_v: RationalTf },
    ViDroopZd { z_d: RationalTf, r_v: RationalTf },
    Vdcm { k_d: f64, r_dcm: RationalTf, r_v: RationalTf },
}

/// How the configured droop gain of the inductor-current laws is read.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DroopReference {
    /// `K_d` is the bus-side droop `dv_dc/di_o` at DC; the controller gain is
    /// mapped through the converter's DC current ratio.
    #[default]
    Output,
    /// `K_d` is used directly as `dv_dc/di_f`.
    Controller,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlOptions {
    pub voltage_feedforward: bool,
    /// Multiply the duty path by a second-order Padé approximation of `e^(-s T_d)`.
    pub pade_delay: bool,
    pub droop_reference: DroopReference,
    pub bandwidth_fraction: f64,
}

impl Default for ControlOptions {
    fn default() -> Self {
        Self {
            voltage_feedforward: true,
            pade_delay: false,
            droop_reference: DroopReference::Output,
            bandwidth_fraction: DEFAULT_BANDWIDTH_FRACTION,
        }
    }
}

/// Optional overrides for the embedded transfer functions; `None` selects the default shape.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InnerOverrides {
    pub g_lpf: Option<RationalTf>,
    pub r_v: Option<RationalTf>,
    pub z_d: Option<RationalTf>,
    pub r_dcm: Option<RationalTf>,
}

/// Parameters of the default embedded transfer functions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DefaultTuning {
    /// Low-pass cutoff of the I-V droop filter as a fraction of `1/(C_dc K_d)`.
    pub lpf_ratio: f64,
    pub j_v: f64,
    pub d_v: f64,
}

impl Default for DefaultTuning {
    fn default() -> Self {
        Self {
            lpf_ratio: 0.5,
            j_v: 0.05,
            d_v: 1.0,
        }
    }
}

/// The default `(G_lpf, R_v, Z_d, R_dcm)` shapes for a converter and droop gain.
pub fn default_inner_tfs(
    params: &BoostParams,
    current: &CurrentLoop,
    k_d: f64,
    tuning: &DefaultTuning,
) -> Result<[RationalTf; 4]> {
    if !(k_d > 0.0 && k_d.is_finite()) {
        return Err(invalid(format!("droop gain must be positive, got {k_d}")));
    }
    let omega_c = 1.0 / (params.c_dc * k_d);
    let g_lpf = RationalTf::low_pass(tuning.lpf_ratio * omega_c)?;
    let k_pv = 0.1 * current.omega_bi * params.c_dc;
    let t_iv = 10.0 / current.omega_bi;
    let r_v = RationalTf::pi(k_pv, t_iv)?;
    let z_d = RationalTf::from_coeffs(&[k_d, k_d / omega_c], &[1.0, 1.0 / (10.0 * omega_c)])?;
    if !(tuning.j_v >= 0.0 && tuning.d_v >= 0.0 && tuning.j_v + tuning.d_v > 0.0) {
        return Err(invalid("virtual inertia and damping must be non-negative, not both zero"));
    }
    let r_dcm = RationalTf::from_coeffs(&[1.0], &[tuning.d_v, tuning.j_v])?;
    Ok([g_lpf, r_v, z_d, r_dcm])
}

impl ControllerConfig {
    /// Build a law from defaults plus overrides. Overrides must be proper.
    pub fn build(
        kind: ControllerKind,
        params: &BoostParams,
        current: &CurrentLoop,
        k_d: f64,
        tuning: &DefaultTuning,
        overrides: &InnerOverrides,
    ) -> Result<Self> {
        let [g_lpf, r_v, z_d, r_dcm] = default_inner_tfs(params, current, k_d, tuning)?;
        let pick = |name: &str, o: &Option<RationalTf>, d: RationalTf| -> Result<RationalTf> {
            match o {
                Some(tf) => {
                    check_proper(name, tf)?;
                    Ok(tf.clone())
                }
                None => Ok(d),
            }
        };
        let cfg = match kind {
            ControllerKind::IvDroop => ControllerConfig::IvDroop {
                k_d,
                g_lpf: pick("G_lpf", &overrides.g_lpf, g_lpf)?,
            },
            ControllerKind::ViDroopIf => ControllerConfig::ViDroopIf {
                k_d,
                r_v: pick("R_v", &overrides.r_v, r_v)?,
            },
            ControllerKind::ViDroopIo => ControllerConfig::ViDroopIo {
                k_d,
                r_v: pick("R_v", &overrides.r_v, r_v)?,
            },
            ControllerKind::ViDroopZd => ControllerConfig::ViDroopZd {
                z_d: pick("Z_d", &overrides.z_d, z_d)?,
                r_v: pick("R_v", &overrides.r_v, r_v)?,
            },
            ControllerKind::Vdcm => ControllerConfig::Vdcm {
                k_d,
                r_dcm: pick("R_dcm", &overrides.r_dcm, r_dcm)?,
                r_v: pick("R_v", &overrides.r_v, r_v)?,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn kind(&self) -> ControllerKind {
        match self {
            ControllerConfig::IvDroop { .. } => ControllerKind::IvDroop,
            ControllerConfig::ViDroopIf { .. } => ControllerKind::ViDroopIf,
            ControllerConfig::ViDroopIo { .. } => ControllerKind::ViDroopIo,
            ControllerConfig::ViDroopZd { .. } => ControllerKind::ViDroopZd,
            ControllerConfig::Vdcm { .. } => ControllerKind::Vdcm,
        }
    }

    /// Droop gain used to normalize the impedance indices. For the `Z_d`
    /// variant this is `Z_d(0)`.
    pub fn k_d(&self) -> f64 {
        match self {
            ControllerConfig::IvDroop { k_d, .. }
            | ControllerConfig::ViDroopIf { k_d, .. }
            | ControllerConfig::ViDroopIo { k_d, .. }
            | ControllerConfig::Vdcm { k_d, .. } => *k_d,
            ControllerConfig::ViDroopZd { z_d, .. } => z_d.dc_gain().unwrap_or(f64::NAN),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k_d();
        if !(k > 0.0 && k.is_finite()) {
            return Err(invalid(format!(
                "{}: droop gain must be positive and finite, got {k}",
                self.kind()
            )));
        }
        match self {
            ControllerConfig::IvDroop { g_lpf, .. } => check_proper("G_lpf", g_lpf),
            ControllerConfig::ViDroopIf { r_v, .. } | ControllerConfig::ViDroopIo { r_v, .. } => {
                check_proper("R_v", r_v)
            }
            ControllerConfig::ViDroopZd { z_d, r_v } => {
                check_proper("Z_d", z_d)?;
                check_proper("R_v", r_v)
            }
            ControllerConfig::Vdcm { r_dcm, r_v, .. } => {
                check_proper("R_dcm", r_dcm)?;
                check_proper("R_v", r_v)
            }
        }
    }

    /// Gain applied to the inductor-current deviation by the I-V and V-I(i_f)
    /// laws. Under [`DroopReference::Output`] it is chosen so that
    /// `dv_dc/di_o = -K_d` at DC given the lossless relation
    /// `V_in di_f = V_o di_o + I_o dv_dc`.
    pub fn inductor_droop_gain(&self, op: &OperatingPoint, reference: DroopReference) -> Result<f64> {
        let k_d = self.k_d();
        match reference {
            DroopReference::Controller => Ok(k_d),
            DroopReference::Output => {
                let den = 1.0 - k_d * op.i_o / op.v_o;
                if !(den > 0.0) {
                    return Err(invalid(format!(
                        "droop gain {k_d} ohm cannot be met at I_o = {} A, V_o = {} V",
                        op.i_o, op.v_o
                    )));
                }
                Ok(op.d * k_d / den)
            }
        }
    }

    /// `(h_f, h_o, h_v)` of the current reference `di_f* = h_f di_f + h_o di_o + h_v dv_dc`.
    pub fn reference_tfs(
        &self,
        op: &OperatingPoint,
        reference: DroopReference,
    ) -> Result<[RationalTf; 3]> {
        let zero = RationalTf::zero();
        Ok(match self {
            ControllerConfig::IvDroop { g_lpf, .. } => {
                let k_c = self.inductor_droop_gain(op, reference)?;
                [zero.clone(), zero, g_lpf.scale(-1.0 / k_c)]
            }
            ControllerConfig::ViDroopIf { r_v, .. } => {
                let k_c = self.inductor_droop_gain(op, reference)?;
                [r_v.scale(-k_c), zero, -r_v]
            }
            ControllerConfig::ViDroopIo { k_d, r_v } => [zero, r_v.scale(-*k_d), -r_v],
            ControllerConfig::ViDroopZd { z_d, r_v } => [zero, -(r_v * z_d), -r_v],
            ControllerConfig::Vdcm { k_d, r_dcm, r_v } => {
                let inner = &RationalTf::one() + &(r_dcm * r_v);
                [zero.clone(), zero, inner.scale(-1.0 / *k_d)]
            }
        })
    }
}

fn check_proper(name: &str, tf: &RationalTf) -> Result<()> {
    if tf.is_proper() {
        Ok(())
    } else {
        Err(Error::Improper {
            what: name.to_string(),
            num: tf.num().degree(),
            den: tf.den().degree(),
        })
    }
}

/// Second-order Padé approximation of `e^(-s t)`.
pub fn pade2(t: f64) -> Result<RationalTf> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid(format!("delay must be positive, got {t}")));
    }
    let a = t * t / 12.0;
    RationalTf::from_coeffs(&[1.0, -t / 2.0, a], &[1.0, t / 2.0, a])
}

#[derive(Clone, Debug, PartialEq)]
pub struct DutyTfs {
    pub g_id: RationalTf,
    pub g_od: RationalTf,
    pub g_vd: RationalTf,
}

impl DutyTfs {
    pub fn zero() -> Self {
        Self {
            g_id: RationalTf::zero(),
            g_od: RationalTf::zero(),
            g_vd: RationalTf::zero(),
        }
    }
}

pub fn duty_tfs(
    cfg: &ControllerConfig,
    current: &CurrentLoop,
    modulator: &Modulator,
    op: &OperatingPoint,
    options: &ControlOptions,
    t_d: f64,
) -> Result<DutyTfs> {
    cfg.validate()?;
    let [h_f, h_o, h_v] = cfg.reference_tfs(op, options.droop_reference)?;
    let ri = current.r_i.scale(modulator.m_sw());
    let mut g_id = &ri * &(&RationalTf::one() - &h_f);
    let mut g_od = -(&ri * &h_o);
    let mut g_vd = &(-(&ri * &h_v)) + &RationalTf::constant(modulator.m_v());
    if options.pade_delay {
        let p = pade2(t_d)?;
        g_id = &g_id * &p;
        g_od = &g_od * &p;
        g_vd = &g_vd * &p;
    }
    for (name, tf) in [("G_id", &g_id), ("G_od", &g_od), ("G_vd", &g_vd)] {
        check_proper(name, tf)?;
    }
    Ok(DutyTfs { g_id, g_od, g_vd })
}
