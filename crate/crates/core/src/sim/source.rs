//! Large-signal averaged sources: the controlled boost converter and the
//! ideal desired-impedance reference.

use crate::analysis::ConverterModel;
use crate::control::{pade2, ControllerConfig};
use crate::error::{invalid, Result};
use crate::plant::OperatingPoint;

use super::block::{Aff, Block};

/// Source output at one instant.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SourceOutputs {
    pub v_dc: f64,
    /// Inductor current, or the branch current through `K_d` for the ideal source.
    pub i_f: f64,
    pub i_c: f64,
}

#[derive(Clone, Debug, PartialEq)]
enum Law {
    Iv { g: Block, k_c: f64 },
    ViIf { r_v: Block, k_c: f64 },
    ViIo { r_v: Block, k_d: f64 },
    ViZd { r_v: Block, z_d: Block },
    Vdcm { r_v: Block, r_dcm: Block, k_d: f64 },
}

impl Law {
    fn blocks(&self) -> Vec<&Block> {
        match self {
            Law::Iv { g, .. } => vec![g],
            Law::ViIf { r_v, .. } | Law::ViIo { r_v, .. } => vec![r_v],
            Law::ViZd { r_v, z_d } => vec![z_d, r_v],
            Law::Vdcm { r_v, r_dcm, .. } => vec![r_v, r_dcm],
        }
    }
}

/// Boost converter with its cascaded controller, all controller blocks in
/// deviation form around the operating point so the zero state is the
/// equilibrium.
///
/// State layout: `[i_f, v_cap, R_i states, law block states, delay states]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConverterSource {
    pub model: ConverterModel,
    r_i: Block,
    law: Law,
    delay: Option<Block>,
    n: usize,
}

impl ConverterSource {
    pub fn new(model: ConverterModel) -> Result<Self> {
        let op = model.op;
        let reference = model.options.droop_reference;
        let law = match &model.controller {
            ControllerConfig::IvDroop { g_lpf, .. } => Law::Iv {
                g: Block::new("G_lpf", g_lpf)?,
                k_c: model.controller.inductor_droop_gain(&op, reference)?,
            },
            ControllerConfig::ViDroopIf { r_v, .. } => Law::ViIf {
                r_v: Block::new("R_v", r_v)?,
                k_c: model.controller.inductor_droop_gain(&op, reference)?,
            },
            ControllerConfig::ViDroopIo { k_d, r_v } => Law::ViIo {
                r_v: Block::new("R_v", r_v)?,
                k_d: *k_d,
            },
            ControllerConfig::ViDroopZd { z_d, r_v } => Law::ViZd {
                r_v: Block::new("R_v", r_v)?,
                z_d: Block::new("Z_d", z_d)?,
            },
            ControllerConfig::Vdcm { k_d, r_dcm, r_v } => Law::Vdcm {
                r_v: Block::new("R_v", r_v)?,
                r_dcm: Block::new("R_dcm", r_dcm)?,
                k_d: *k_d,
            },
        };
        let r_i = Block::new("R_i", &model.current.r_i)?;
        let delay = if model.options.pade_delay {
            Some(Block::new("delay", &pade2(model.params.t_d)?)?)
        } else {
            None
        };
        let n = 2
            + r_i.order()
            + law.blocks().iter().map(|b| b.order()).sum::<usize>()
            + delay.as_ref().map_or(0, |b| b.order());
        Ok(Self {
            model,
            r_i,
            law,
            delay,
            n,
        })
    }

    pub fn op(&self) -> &OperatingPoint {
        &self.model.op
    }

    fn derivs(&self, x: &[f64], i_o: f64, dx: &mut [f64]) -> SourceOutputs {
        let p = &self.model.params;
        let op = &self.model.op;
        let (i_f, v_cap) = (x[0], x[1]);
        let dif = i_f - op.i_f;
        let dio = i_o - op.i_o;
        let dv = Aff { c: -op.v_o, k: 1.0 };

        let mut off = 2;
        let ri_x = &x[off..off + self.r_i.order()];
        let ri_off = off;
        off += self.r_i.order();

        // Block inputs as affine functions of v_dc, in `law.blocks()` order.
        let mut inputs: [Aff; 2] = [Aff::constant(0.0); 2];
        let mut offs = [0usize; 2];
        let di_ref = match &self.law {
            Law::Iv { g, k_c } => {
                offs[0] = off;
                inputs[0] = -dv;
                g.output(&x[off..off + g.order()], inputs[0]) * (1.0 / k_c)
            }
            Law::ViIf { r_v, k_c } => {
                offs[0] = off;
                inputs[0] = Aff::constant(-k_c * dif) - dv;
                r_v.output(&x[off..off + r_v.order()], inputs[0])
            }
            Law::ViIo { r_v, k_d } => {
                offs[0] = off;
                inputs[0] = Aff::constant(-k_d * dio) - dv;
                r_v.output(&x[off..off + r_v.order()], inputs[0])
            }
            Law::ViZd { r_v, z_d } => {
                offs[0] = off;
                inputs[0] = Aff::constant(dio);
                let zo = z_d.output(&x[off..off + z_d.order()], inputs[0]);
                offs[1] = off + z_d.order();
                inputs[1] = -zo - dv;
                r_v.output(&x[offs[1]..offs[1] + r_v.order()], inputs[1])
            }
            Law::Vdcm { r_v, r_dcm, k_d } => {
                offs[0] = off;
                inputs[0] = -dv;
                let u = r_v.output(&x[off..off + r_v.order()], inputs[0]);
                offs[1] = off + r_v.order();
                inputs[1] = u;
                let w = r_dcm.output(&x[offs[1]..offs[1] + r_dcm.order()], inputs[1]);
                (w - dv) * (1.0 / k_d)
            }
        };
        let blocks = self.law.blocks();
        let law_states: usize = blocks.iter().map(|b| b.order()).sum();
        let delay_off = off + law_states;

        let e_i = di_ref - Aff::constant(dif);
        let v_sw = Aff::constant(op.v_in) - self.r_i.output(ri_x, e_i);

        // Duty as alpha + beta * (commanded duty); the delay block is affine in its input.
        let (alpha, beta) = match &self.delay {
            None => (0.0, 1.0),
            Some(b) => {
                // Output as an affine function of the commanded duty.
                let y = b.output(&x[delay_off..delay_off + b.order()], Aff { c: -op.d, k: 1.0 });
                (op.d + y.c, y.k)
            }
        };
        let ff = self.model.options.voltage_feedforward;
        let r = p.r_dc;
        let v = if r == 0.0 {
            v_cap
        } else if ff {
            // v^2 - B v - C = 0 from v = v_cap + r (d i_f - i_o), d = alpha + beta v_sw / v.
            let bq = v_cap + r * i_f * (alpha + beta * v_sw.k) - r * i_o;
            let cq = r * i_f * beta * v_sw.c;
            let disc = (bq * bq + 4.0 * cq).max(0.0).sqrt();
            if bq >= 0.0 {
                0.5 * (bq + disc)
            } else {
                -2.0 * cq / (bq - disc)
            }
        } else {
            let s = r * i_f * beta / op.v_o;
            (v_cap + r * i_f * alpha + s * v_sw.c - r * i_o) / (1.0 - s * v_sw.k)
        };
        let d_cmd = if ff { v_sw.at(v) / v } else { v_sw.at(v) / op.v_o };
        let d = alpha + beta * d_cmd;

        let i_c = d * i_f - i_o;
        dx[0] = (op.v_in - d * v) / p.l_f;
        dx[1] = i_c / p.c_dc;
        self.r_i
            .derivative(ri_x, e_i.at(v), &mut dx[ri_off..ri_off + self.r_i.order()]);
        for (k, b) in blocks.iter().enumerate() {
            let o = offs[k];
            b.derivative(&x[o..o + b.order()], inputs[k].at(v), &mut dx[o..o + b.order()]);
        }
        if let Some(b) = &self.delay {
            let o = delay_off;
            b.derivative(&x[o..o + b.order()], d_cmd - op.d, &mut dx[o..o + b.order()]);
        }
        SourceOutputs { v_dc: v, i_f, i_c }
    }
}

/// Ideal voltage source `E` behind `K_d`, in parallel with the output
/// capacitor and its ESR. Its output impedance is exactly `K_d || 1/Y_dc`.
#[derive(Clone, Debug, PartialEq)]
pub struct DesiredSource {
    pub k_d: f64,
    pub c_dc: f64,
    pub r_dc: f64,
    pub v_o: f64,
    pub i_o: f64,
}

impl DesiredSource {
    pub fn new(k_d: f64, c_dc: f64, r_dc: f64, v_o: f64, i_o: f64) -> Result<Self> {
        if !(k_d > 0.0 && c_dc > 0.0 && r_dc >= 0.0 && v_o > 0.0 && i_o.is_finite()) {
            return Err(invalid("desired source needs K_d, C_dc, V_o > 0 and r_dc >= 0"));
        }
        Ok(Self {
            k_d,
            c_dc,
            r_dc,
            v_o,
            i_o,
        })
    }

    pub fn emf(&self) -> f64 {
        self.v_o + self.k_d * self.i_o
    }

    fn derivs(&self, x: &[f64], i_o: f64, dx: &mut [f64]) -> SourceOutputs {
        let v_cap = x[0];
        let e = self.emf();
        let (v, i_c) = if self.r_dc == 0.0 {
            (v_cap, (e - v_cap) / self.k_d - i_o)
        } else {
            let g = 1.0 / self.k_d + 1.0 / self.r_dc;
            let v = (e / self.k_d + v_cap / self.r_dc - i_o) / g;
            (v, (v - v_cap) / self.r_dc)
        };
        dx[0] = i_c / self.c_dc;
        SourceOutputs {
            v_dc: v,
            i_f: (e - v) / self.k_d,
            i_c,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Source {
    Converter(Box<ConverterSource>),
    Desired(DesiredSource),
}

impl Source {
    pub fn converter(model: ConverterModel) -> Result<Self> {
        Ok(Source::Converter(Box::new(ConverterSource::new(model)?)))
    }

    pub fn n_states(&self) -> usize {
        match self {
            Source::Converter(c) => c.n,
            Source::Desired(_) => 1,
        }
    }

    pub fn nominal_voltage(&self) -> f64 {
        match self {
            Source::Converter(c) => c.model.op.v_o,
            Source::Desired(d) => d.v_o,
        }
    }

    pub fn nominal_current(&self) -> f64 {
        match self {
            Source::Converter(c) => c.model.op.i_o,
            Source::Desired(d) => d.i_o,
        }
    }

    /// Equilibrium state at the nominal operating point.
    pub fn initial_state(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n_states()];
        match self {
            Source::Converter(c) => {
                x[0] = c.model.op.i_f;
                x[1] = c.model.op.v_o;
            }
            Source::Desired(d) => x[0] = d.v_o,
        }
        x
    }

    /// Weights that turn state derivatives into physical residuals
    /// (`L di/dt` in volts, `C dv/dt` in amperes); controller states keep weight 1.
    pub fn residual_weights(&self) -> Vec<f64> {
        let mut w = vec![1.0; self.n_states()];
        match self {
            Source::Converter(c) => {
                w[0] = c.model.params.l_f;
                w[1] = c.model.params.c_dc;
            }
            Source::Desired(d) => w[0] = d.c_dc,
        }
        w
    }

    pub fn state_names(&self) -> Vec<String> {
        match self {
            Source::Converter(c) => {
                let mut v = vec!["i_f".to_string(), "v_cap".to_string()];
                v.extend((0..c.n - 2).map(|k| format!("ctrl{k}")));
                v
            }
            Source::Desired(_) => vec!["v_cap".to_string()],
        }
    }

    pub fn derivs(&self, x: &[f64], i_o: f64, dx: &mut [f64]) -> SourceOutputs {
        match self {
            Source::Converter(c) => c.derivs(x, i_o, dx),
            Source::Desired(d) => d.derivs(x, i_o, dx),
        }
    }
}
