use crate::error::{invalid, Error, Result};

use super::model::{Outputs, SimModel};

const DIVERGENCE_LIMIT: f64 = 1e9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoadEvent {
    pub time: f64,
    pub load: usize,
    pub power: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub t_end: f64,
    pub dt: f64,
    pub events: Vec<LoadEvent>,
    /// Keep every `decimate`-th sample in the trace (the last step is always kept).
    pub decimate: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            t_end: 0.3,
            dt: 1e-6,
            events: Vec::new(),
            decimate: 1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, n_loads: usize) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(invalid(format!("horizon must be positive, got {}", self.t_end)));
        }
        if self.decimate == 0 {
            return Err(invalid("decimation factor must be at least 1"));
        }
        for e in &self.events {
            if !(e.time >= 0.0 && e.time <= self.t_end) {
                return Err(invalid(format!("event time {} outside [0, {}]", e.time, self.t_end)));
            }
            if e.load >= n_loads {
                return Err(invalid(format!("event refers to load {} of {n_loads}", e.load)));
            }
            if !(e.power >= 0.0 && e.power.is_finite()) {
                return Err(invalid(format!("event power must be non-negative, got {}", e.power)));
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Uniformly sampled simulation output.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub time: Vec<f64>,
    pub v_dc: Vec<f64>,
    pub i_f: Vec<f64>,
    pub i_o: Vec<f64>,
    pub i_c: Vec<f64>,
    /// Load node voltages, one column per load.
    pub v_g: Vec<Vec<f64>>,
    /// Times at which load events were applied.
    pub events: Vec<f64>,
}

impl Trace {
    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["time_s", "v_dc_V", "i_f_A", "i_o_A", "i_c_A"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        h.extend((1..=self.v_g.len()).map(|k| format!("v_g{k}_V")));
        h
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn row(&self, k: usize) -> Vec<f64> {
        let mut r = vec![self.time[k], self.v_dc[k], self.i_f[k], self.i_o[k], self.i_c[k]];
        r.extend(self.v_g.iter().map(|c| c[k]));
        r
    }

    fn push_nodes(&mut self, x: &[f64], model: &SimModel) {
        for (k, s) in model.slots.iter().enumerate() {
            self.v_g[k].push(x[s.v_g]);
        }
    }

    fn push_outputs(&mut self, t: f64, out: &Outputs) {
        self.time.push(t);
        self.v_dc.push(out.source.v_dc);
        self.i_f.push(out.source.i_f);
        self.i_o.push(out.i_o);
        self.i_c.push(out.source.i_c);
    }
}

/// Classical RK4 step of the autonomous model with fixed load powers and an
/// injection current given at the start, midpoint and end of the step.
pub(crate) struct Rk4 {
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(n: usize) -> Self {
        Self {
            k: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            tmp: vec![0.0; n],
        }
    }

    /// Advances `x` and returns the outputs at the start of the step.
    pub fn step(&mut self, model: &SimModel, x: &mut [f64], powers: &[f64], inj: [f64; 3], dt: f64) -> Outputs {
        let n = x.len();
        let [k1, k2, k3, k4] = &mut self.k;
        let out = model.rhs(x, powers, inj[0], k1);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * dt * k1[i];
        }
        model.rhs(&self.tmp, powers, inj[1], k2);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * dt * k2[i];
        }
        model.rhs(&self.tmp, powers, inj[1], k3);
        for i in 0..n {
            self.tmp[i] = x[i] + dt * k3[i];
        }
        model.rhs(&self.tmp, powers, inj[2], k4);
        for i in 0..n {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out
    }
}

pub(crate) fn check_state(x: &[f64], t: f64) -> Result<()> {
    if x.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT) {
        Err(Error::Divergence { time: t })
    } else {
        Ok(())
    }
}

/// Fixed-step RK4 run from the model's equilibrium. Events take effect at the
/// first step boundary at or after their time stamp.
pub fn simulate(model: &SimModel, cfg: &SimConfig) -> Result<Trace> {
    cfg.validate(model.loads.len())?;
    let n_steps = cfg.steps();
    let mut events = cfg.events.clone();
    events.sort_by(|a, b| a.time.total_cmp(&b.time));
    // Event step index, computed in integer steps to avoid drift.
    let event_steps: Vec<usize> = events
        .iter()
        .map(|e| {
            let k = e.time / cfg.dt;
            let r = k.round();
            if (k - r).abs() <= 1e-9 * r.max(1.0) {
                r as usize
            } else {
                k.ceil() as usize
            }
        })
        .collect();

    let mut x = model.x0.clone();
    let mut powers: Vec<f64> = model.loads.iter().map(|l| l.p).collect();
    let cap = n_steps / cfg.decimate + 2;
    let mut trace = Trace {
        time: Vec::with_capacity(cap),
        v_dc: Vec::with_capacity(cap),
        i_f: Vec::with_capacity(cap),
        i_o: Vec::with_capacity(cap),
        i_c: Vec::with_capacity(cap),
        v_g: vec![Vec::with_capacity(cap); model.loads.len()],
        events: Vec::new(),
    };
    let mut rk = Rk4::new(model.n_states());
    let mut next = 0;
    for step in 0..=n_steps {
        let t = step as f64 * cfg.dt;
        while next < events.len() && event_steps[next] <= step {
            powers[events[next].load] = events[next].power;
            trace.events.push(t);
            next += 1;
        }
        if step == n_steps {
            let mut dx = vec![0.0; model.n_states()];
            let out = model.rhs(&x, &powers, 0.0, &mut dx);
            trace.push_nodes(&x, model);
            trace.push_outputs(t, &out);
            break;
        }
        let keep = step % cfg.decimate == 0;
        if keep {
            trace.push_nodes(&x, model);
        }
        let out = rk.step(model, &mut x, &powers, [0.0; 3], cfg.dt);
        if keep {
            trace.push_outputs(t, &out);
        }
        check_state(&x, t + cfg.dt)?;
    }
    Ok(trace)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoadStepMetrics {
    pub undershoot: f64,
    pub overshoot: f64,
    /// Time after the event until `v_dc` stays within 2% of its peak excursion
    /// around the final value.
    pub settling_time_2pct: f64,
    pub steady_state_deviation: f64,
}

/// Step-response figures of `v_dc` after the first recorded event, up to the
/// next event or the end of the trace.
pub fn load_step_metrics(trace: &Trace, v_nom: f64) -> Result<LoadStepMetrics> {
    let t0 = *trace.events.first().ok_or(Error::NoEvent)?;
    let t1 = trace.events.get(1).copied().unwrap_or(f64::INFINITY);
    let idx: Vec<usize> = (0..trace.len())
        .filter(|&k| trace.time[k] >= t0 && trace.time[k] < t1)
        .collect();
    if idx.is_empty() {
        return Err(Error::NoEvent);
    }
    let v: Vec<f64> = idx.iter().map(|&k| trace.v_dc[k]).collect();
    let vmin = v.iter().copied().fold(f64::INFINITY, f64::min);
    let vmax = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let v_final = *v.last().expect("non-empty");
    let peak = v.iter().fold(0.0f64, |m, x| m.max((x - v_final).abs()));
    let band = 0.02 * peak;
    let settle_idx = v.iter().rposition(|x| (x - v_final).abs() > band);
    let settling = match settle_idx {
        Some(k) if peak > 0.0 => trace.time[idx[(k + 1).min(idx.len() - 1)]] - t0,
        _ => 0.0,
    };
    Ok(LoadStepMetrics {
        undershoot: (v_nom - vmin).max(0.0),
        overshoot: (vmax - v_nom).max(0.0),
        settling_time_2pct: settling,
        steady_state_deviation: v_final - v_nom,
    })
}
