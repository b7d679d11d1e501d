//! Radial microgrid: one source bus, one RL line per constant-power load.

use crate::analysis::{ConverterModel, GridModel};
use crate::error::{invalid, Error, Result};
use crate::plant::operating_point;

use super::source::{ConverterSource, DesiredSource, Source, SourceOutputs};

/// Constant-power load behind an input capacitor, with first-order power
/// tracking (`tau_p = 0` draws the setpoint instantaneously).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoadModel {
    pub p: f64,
    pub c_in: f64,
    pub tau_p: f64,
}

impl LoadModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 0.0 && self.p.is_finite()) {
            return Err(invalid(format!("load power must be non-negative, got {}", self.p)));
        }
        if !(self.c_in > 0.0 && self.c_in.is_finite()) {
            return Err(Error::Topology(format!(
                "load node needs a positive input capacitance, got {}",
                self.c_in
            )));
        }
        if !(self.tau_p >= 0.0 && self.tau_p.is_finite()) {
            return Err(invalid(format!("power lag must be non-negative, got {}", self.tau_p)));
        }
        Ok(())
    }
}

/// What drives the bus.
#[derive(Clone, Debug, PartialEq)]
pub enum SourceSpec {
    Converter(ConverterModel),
    /// Ideal `K_d || 1/Y_dc` source regulating to `v_o`.
    Desired { k_d: f64, c_dc: f64, r_dc: f64, v_o: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct LoadSlots {
    pub i_line: usize,
    pub v_g: usize,
    pub p: Option<usize>,
}

/// Outputs reported alongside the state.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Outputs {
    pub source: SourceOutputs,
    pub i_o: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimModel {
    pub source: Source,
    pub lines: Vec<GridModel>,
    pub loads: Vec<LoadModel>,
    pub(crate) slots: Vec<LoadSlots>,
    pub(crate) x0: Vec<f64>,
    n: usize,
}

/// Steady state of one load fed at bus voltage `v`: solves
/// `v - v_g - r_g P / v_g = 0` by damped Newton from `v_g = v`.
fn load_flow(v: f64, r_g: f64, p: f64) -> Result<f64> {
    if r_g == 0.0 || p == 0.0 {
        return Ok(v);
    }
    if 4.0 * r_g * p > v * v {
        return Err(Error::SteadyState(format!(
            "load of {p} W exceeds the transfer limit of the line at {v} V"
        )));
    }
    let f = |x: f64| v - x - r_g * p / x;
    let mut x = v;
    for _ in 0..100 {
        let fx = f(x);
        if fx.abs() <= 1e-13 * v {
            return Ok(x);
        }
        let step = -fx / (-1.0 + r_g * p / (x * x));
        let mut lambda = 1.0;
        let mut next = x + step;
        while (next <= 0.0 || f(next).abs() >= fx.abs()) && lambda > 1e-6 {
            lambda *= 0.5;
            next = x + lambda * step;
        }
        x = next;
    }
    if f(x).abs() <= 1e-9 * v {
        Ok(x)
    } else {
        Err(Error::SteadyState("power flow did not converge".into()))
    }
}

/// Assemble the averaged microgrid.
///
/// The bus is initialized at the source's nominal voltage. Load voltages and
/// line currents come from the power flow, and the converter operating point
/// is re-derived from the resulting output current so the model starts at an
/// exact equilibrium.
pub fn build_model(source: SourceSpec, lines: Vec<GridModel>, loads: Vec<LoadModel>) -> Result<SimModel> {
    if loads.is_empty() {
        return Err(Error::Topology("at least one load is required".into()));
    }
    if lines.len() != loads.len() {
        return Err(Error::Topology(format!(
            "radial grid needs one line per load ({} lines, {} loads)",
            lines.len(),
            loads.len()
        )));
    }
    for l in &lines {
        l.validate()?;
        if !(l.l_g > 0.0) {
            return Err(Error::Topology("line inductance must be positive".into()));
        }
    }
    for l in &loads {
        l.validate()?;
    }
    let v_bus = match &source {
        SourceSpec::Converter(m) => m.op.v_o,
        SourceSpec::Desired { v_o, .. } => *v_o,
    };
    let mut v_g = Vec::with_capacity(loads.len());
    let mut i_line = Vec::with_capacity(loads.len());
    for (line, load) in lines.iter().zip(&loads) {
        let vg = load_flow(v_bus, line.r_g, load.p)?;
        v_g.push(vg);
        i_line.push(load.p / vg);
    }
    let i_o: f64 = i_line.iter().sum();

    let source = match source {
        SourceSpec::Converter(mut m) => {
            m.op = operating_point(m.op.v_in, m.op.v_o, i_o)?;
            Source::Converter(Box::new(ConverterSource::new(m)?))
        }
        SourceSpec::Desired { k_d, c_dc, r_dc, v_o } => {
            Source::Desired(DesiredSource::new(k_d, c_dc, r_dc, v_o, i_o)?)
        }
    };

    let mut x0 = source.initial_state();
    let mut slots = Vec::with_capacity(loads.len());
    for (k, load) in loads.iter().enumerate() {
        let base = x0.len();
        x0.push(i_line[k]);
        x0.push(v_g[k]);
        let p = if load.tau_p > 0.0 {
            x0.push(load.p);
            Some(base + 2)
        } else {
            None
        };
        slots.push(LoadSlots {
            i_line: base,
            v_g: base + 1,
            p,
        });
    }
    let n = x0.len();
    let model = SimModel {
        source,
        lines,
        loads,
        slots,
        x0,
        n,
    };
    let powers: Vec<f64> = model.loads.iter().map(|l| l.p).collect();
    let r = model.residual(&model.x0, &powers);
    if r > 1e-9 {
        return Err(Error::NonEquilibrium { residual: r });
    }
    Ok(model)
}

impl SimModel {
    pub fn n_states(&self) -> usize {
        self.n
    }

    pub fn initial_state(&self) -> &[f64] {
        &self.x0
    }

    pub fn nominal_voltage(&self) -> f64 {
        self.source.nominal_voltage()
    }

    pub fn state_names(&self) -> Vec<String> {
        let mut names = self.source.state_names();
        for (k, s) in self.slots.iter().enumerate() {
            names.push(format!("i_line{}", k + 1));
            names.push(format!("v_g{}", k + 1));
            if s.p.is_some() {
                names.push(format!("p{}", k + 1));
            }
        }
        names
    }

    pub(crate) fn weights(&self) -> Vec<f64> {
        let mut w = self.source.residual_weights();
        for (k, s) in self.slots.iter().enumerate() {
            w.push(self.lines[k].l_g);
            w.push(self.loads[k].c_in);
            if s.p.is_some() {
                w.push(self.loads[k].tau_p);
            }
        }
        w
    }

    /// Time derivative for load power setpoints `powers` and an extra current
    /// `i_inj` drawn from the source bus.
    pub fn rhs(&self, x: &[f64], powers: &[f64], i_inj: f64, dx: &mut [f64]) -> Outputs {
        let ns = self.source.n_states();
        let i_o = self.slots.iter().map(|s| x[s.i_line]).sum::<f64>() + i_inj;
        let src = self.source.derivs(&x[..ns], i_o, &mut dx[..ns]);
        for (k, s) in self.slots.iter().enumerate() {
            let line = &self.lines[k];
            let load = &self.loads[k];
            let (i, vg) = (x[s.i_line], x[s.v_g]);
            dx[s.i_line] = (src.v_dc - vg - line.r_g * i) / line.l_g;
            let p = match s.p {
                Some(j) => {
                    dx[j] = (powers[k] - x[j]) / load.tau_p;
                    x[j]
                }
                None => powers[k],
            };
            dx[s.v_g] = (i - p / vg) / load.c_in;
        }
        Outputs { source: src, i_o }
    }

    /// Largest physically weighted derivative at `x`.
    pub fn residual(&self, x: &[f64], powers: &[f64]) -> f64 {
        let mut dx = vec![0.0; self.n];
        self.rhs(x, powers, 0.0, &mut dx);
        dx.iter()
            .zip(self.weights())
            .fold(0.0, |m, (d, w)| m.max((d * w).abs()))
    }
}
