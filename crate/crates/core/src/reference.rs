//! Reference study case: a 7 kW boost source (350 V to 700 V) feeding two
//! 3.5 kW constant-power loads over short RL lines, with a load doubling at
//! 0.1 s.
//!
//! Besides the physical values, the case fixes three controller shapes that
//! differ from the library defaults so that all five laws are stable with
//! this grid and load dynamics: the I-V droop filter sits at a quarter of the
//! crossover frequency, `Z_d` is a lag element, and the virtual inertia is
//! `J_v = 5e-4`.

use std::f64::consts::PI;

use crate::analysis::{ConverterModel, GridModel};
use crate::control::{
    tune_current_controller, ControlOptions, ControllerConfig, ControllerKind, DefaultTuning, InnerOverrides,
};
use crate::error::Result;
use crate::plant::{operating_point, BoostParams, OperatingPoint};
use crate::sim::{LoadEvent, LoadModel, SimConfig};
use crate::tf::{log_space, RationalTf};

pub const V_IN: f64 = 350.0;
pub const V_O: f64 = 700.0;
pub const I_O: f64 = 10.0;
pub const K_D: f64 = 1.0;

pub fn params() -> BoostParams {
    BoostParams {
        l_f: 1e-3,
        c_dc: 1e-3,
        r_dc: 0.01,
        f_s: 20e3,
        t_d: 1.5 / 20e3,
    }
}

pub fn op() -> OperatingPoint {
    operating_point(V_IN, V_O, I_O).expect("reference operating point is valid")
}

pub fn tuning() -> DefaultTuning {
    DefaultTuning {
        lpf_ratio: 0.25,
        j_v: 5e-4,
        d_v: 1.0,
    }
}

/// `Z_d = K_d (1 + s/(10 w_c)) / (1 + s/w_c)`.
pub fn lag_zd(c_dc: f64, k_d: f64) -> RationalTf {
    let wc = 1.0 / (c_dc * k_d);
    RationalTf::from_coeffs(&[k_d, k_d / (10.0 * wc)], &[1.0, 1.0 / wc]).expect("nonzero denominator")
}

pub fn overrides() -> InnerOverrides {
    InnerOverrides {
        z_d: Some(lag_zd(params().c_dc, K_D)),
        ..Default::default()
    }
}

pub fn controller(kind: ControllerKind) -> Result<ControllerConfig> {
    let p = params();
    let cl = tune_current_controller(&p, ControlOptions::default().bandwidth_fraction)?;
    ControllerConfig::build(kind, &p, &cl, K_D, &tuning(), &overrides())
}

pub fn converter(kind: ControllerKind) -> Result<ConverterModel> {
    ConverterModel::new(params(), op(), controller(kind)?, ControlOptions::default())
}

pub fn line() -> GridModel {
    GridModel { r_g: 0.05, l_g: 10e-6 }
}

pub fn lines() -> Vec<GridModel> {
    vec![line(); 2]
}

pub fn loads() -> Vec<LoadModel> {
    vec![
        LoadModel {
            p: 3500.0,
            c_in: 0.5e-3,
            tau_p: 1e-3,
        };
        2
    ]
}

/// Load 1 doubles at 0.1 s; 0.3 s horizon at 1 us.
pub fn sim_config() -> SimConfig {
    SimConfig {
        t_end: 0.3,
        dt: 1e-6,
        events: vec![LoadEvent {
            time: 0.1,
            load: 0,
            power: 7000.0,
        }],
        decimate: 1,
    }
}

pub const SWEEP_POINTS: usize = 400;

/// `[1, pi f_s]` rad/s.
pub fn sweep_bounds() -> (f64, f64) {
    (1.0, 2.0 * PI * params().f_s / 2.0)
}

pub fn sweep() -> Vec<f64> {
    let (a, b) = sweep_bounds();
    log_space(a, b, SWEEP_POINTS)
}
