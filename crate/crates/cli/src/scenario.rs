//! JSON scenario files.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use dcform_core::analysis::{ConverterModel, GridModel, ImpedanceModel};
use dcform_core::control::{
    tune_current_controller, ControlOptions, ControllerConfig, ControllerKind, DefaultTuning, DroopReference,
    InnerOverrides,
};
use dcform_core::plant::{operating_point, y_dc, BoostParams};
use dcform_core::sim::{LoadEvent, LoadModel, SimConfig, SourceSpec};
use dcform_core::tf::{log_space, RationalTf};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub converter: ConverterSection,
    pub controller: ControllerSection,
    #[serde(default)]
    pub grid: Vec<LineSection>,
    #[serde(default)]
    pub loads: Vec<LoadSection>,
    pub sweep: SweepSection,
    pub sim: SimSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConverterSection {
    pub l_f: f64,
    pub c_dc: f64,
    pub r_dc: f64,
    pub f_s: f64,
    pub t_d: f64,
    pub v_in: f64,
    pub v_o: f64,
    pub i_o: f64,
    #[serde(default)]
    pub options: OptionsSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptionsSection {
    pub voltage_feedforward: bool,
    pub pade_delay: bool,
    /// `"output"` or `"controller"`.
    pub droop_reference: String,
    pub bandwidth_fraction: f64,
}

impl Default for OptionsSection {
    fn default() -> Self {
        let d = ControlOptions::default();
        Self {
            voltage_feedforward: d.voltage_feedforward,
            pade_delay: d.pade_delay,
            droop_reference: "output".into(),
            bandwidth_fraction: d.bandwidth_fraction,
        }
    }
}

/// Transfer function as ascending coefficient arrays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TfSpec {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

impl TfSpec {
    pub fn to_tf(&self, what: &str) -> Result<RationalTf, CliError> {
        RationalTf::from_coeffs(&self.num, &self.den).map_err(|e| CliError::Model(format!("{what}: {e}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    /// One of the five law names, `"desired"` or `"custom"`.
    pub kind: String,
    pub k_d: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuning: Option<TuningSection>,
    #[serde(default, skip_serializing_if = "OverridesSection::is_empty")]
    pub overrides: OverridesSection,
    /// Output impedance of a `"custom"` source.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_out: Option<TfSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningSection {
    pub lpf_ratio: f64,
    pub j_v: f64,
    pub d_v: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverridesSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_lpf: Option<TfSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_v: Option<TfSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_d: Option<TfSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_dcm: Option<TfSpec>,
}

impl OverridesSection {
    fn is_empty(&self) -> bool {
        self == &Self::default()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineSection {
    pub r_g: f64,
    pub l_g: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadSection {
    pub p: f64,
    pub c_in: f64,
    pub tau_p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub t_end: f64,
    pub dt: f64,
    #[serde(default)]
    pub events: Vec<EventSection>,
    #[serde(default = "one")]
    pub decimate: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSection {
    pub time: f64,
    pub load: usize,
    pub power: f64,
}

/// Source selected for one run of a scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SourceChoice {
    Law(ControllerKind),
    Desired,
    Custom,
}

impl SourceChoice {
    pub fn name(self) -> &'static str {
        match self {
            SourceChoice::Law(k) => k.name(),
            SourceChoice::Desired => "desired",
            SourceChoice::Custom => "custom",
        }
    }
}

impl FromStr for SourceChoice {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "desired" => Ok(SourceChoice::Desired),
            "custom" => Ok(SourceChoice::Custom),
            _ => ControllerKind::from_str(s)
                .map(SourceChoice::Law)
                .map_err(|_| CliError::Input(format!("unknown controller '{s}'"))),
        }
    }
}

/// Everything the commands need for one source.
#[derive(Clone, Debug)]
pub struct Case {
    pub choice: SourceChoice,
    pub impedance: ImpedanceModel,
    pub converter: Option<ConverterModel>,
}

impl Case {
    pub fn name(&self) -> &'static str {
        self.choice.name()
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        let sc: Scenario =
            serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        sc.validate()?;
        Ok(sc)
    }

    #[cfg(test)]
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Checks every referenced model invariant without building anything expensive.
    pub fn validate(&self) -> Result<(), CliError> {
        let choice: SourceChoice = self.controller.kind.parse()?;
        self.case(choice)?;
        self.omegas()?;
        if !self.loads.is_empty() || !self.grid.is_empty() {
            self.lines()?;
            self.load_models()?;
        }
        self.sim_config()?;
        Ok(())
    }

    pub fn default_choice(&self) -> Result<SourceChoice, CliError> {
        self.controller.kind.parse()
    }

    pub fn params(&self) -> BoostParams {
        let c = &self.converter;
        BoostParams {
            l_f: c.l_f,
            c_dc: c.c_dc,
            r_dc: c.r_dc,
            f_s: c.f_s,
            t_d: c.t_d,
        }
    }

    pub fn options(&self) -> Result<ControlOptions, CliError> {
        let o = &self.converter.options;
        let droop_reference = match o.droop_reference.as_str() {
            "output" => DroopReference::Output,
            "controller" => DroopReference::Controller,
            other => {
                return Err(CliError::Input(format!(
                    "droop_reference must be \"output\" or \"controller\", got \"{other}\""
                )))
            }
        };
        Ok(ControlOptions {
            voltage_feedforward: o.voltage_feedforward,
            pade_delay: o.pade_delay,
            droop_reference,
            bandwidth_fraction: o.bandwidth_fraction,
        })
    }

    fn tuning(&self) -> DefaultTuning {
        self.controller.tuning.as_ref().map_or_else(DefaultTuning::default, |t| DefaultTuning {
            lpf_ratio: t.lpf_ratio,
            j_v: t.j_v,
            d_v: t.d_v,
        })
    }

    fn overrides(&self) -> Result<InnerOverrides, CliError> {
        let o = &self.controller.overrides;
        let conv = |name: &str, t: &Option<TfSpec>| t.as_ref().map(|t| t.to_tf(name)).transpose();
        Ok(InnerOverrides {
            g_lpf: conv("G_lpf", &o.g_lpf)?,
            r_v: conv("R_v", &o.r_v)?,
            z_d: conv("Z_d", &o.z_d)?,
            r_dcm: conv("R_dcm", &o.r_dcm)?,
        })
    }

    pub fn case(&self, choice: SourceChoice) -> Result<Case, CliError> {
        let p = self.params();
        let k_d = self.controller.k_d;
        if !(k_d > 0.0 && k_d.is_finite()) {
            return Err(CliError::Model(format!("k_d must be positive, got {k_d}")));
        }
        match choice {
            SourceChoice::Law(kind) => {
                let options = self.options()?;
                let c = &self.converter;
                let op = operating_point(c.v_in, c.v_o, c.i_o)?;
                p.validate()?;
                let cl = tune_current_controller(&p, options.bandwidth_fraction)?;
                let cfg = ControllerConfig::build(kind, &p, &cl, k_d, &self.tuning(), &self.overrides()?)?;
                let model = ConverterModel::new(p, op, cfg, options)?;
                Ok(Case {
                    choice,
                    impedance: model.impedance()?,
                    converter: Some(model),
                })
            }
            SourceChoice::Desired | SourceChoice::Custom => {
                if !(p.c_dc >= 0.0 && p.r_dc >= 0.0) {
                    return Err(CliError::Model("c_dc and r_dc must be non-negative".into()));
                }
                let y = y_dc(&p);
                let impedance = if choice == SourceChoice::Desired {
                    ImpedanceModel::desired(k_d, y)?
                } else {
                    let z = self
                        .controller
                        .z_out
                        .as_ref()
                        .ok_or_else(|| CliError::Input("a \"custom\" controller needs z_out".into()))?
                        .to_tf("z_out")?;
                    ImpedanceModel::new(z, y, k_d)?
                };
                Ok(Case {
                    choice,
                    impedance,
                    converter: None,
                })
            }
        }
    }

    /// Source definition for the time-domain model.
    pub fn sim_source(&self, case: &Case) -> Result<SourceSpec, CliError> {
        match (&case.converter, case.choice) {
            (Some(m), _) => Ok(SourceSpec::Converter(m.clone())),
            (None, SourceChoice::Desired) => Ok(SourceSpec::Desired {
                k_d: self.controller.k_d,
                c_dc: self.converter.c_dc,
                r_dc: self.converter.r_dc,
                v_o: self.converter.v_o,
            }),
            _ => Err(CliError::Input(format!(
                "source \"{}\" has no time-domain model",
                case.name()
            ))),
        }
    }

    pub fn omegas(&self) -> Result<Vec<f64>, CliError> {
        let s = &self.sweep;
        if !(s.omega_min > 0.0 && s.omega_max > s.omega_min && s.omega_max.is_finite() && s.points >= 2) {
            return Err(CliError::Model(format!(
                "sweep needs 0 < omega_min < omega_max and at least 2 points, got [{}, {}] with {}",
                s.omega_min, s.omega_max, s.points
            )));
        }
        Ok(log_space(s.omega_min, s.omega_max, s.points))
    }

    pub fn lines(&self) -> Result<Vec<GridModel>, CliError> {
        self.grid
            .iter()
            .map(|l| {
                let g = GridModel { r_g: l.r_g, l_g: l.l_g };
                g.validate()?;
                Ok(g)
            })
            .collect()
    }

    /// Line used for VFI and the passivity screen: the first one listed.
    pub fn line(&self) -> Result<Option<GridModel>, CliError> {
        Ok(self.lines()?.into_iter().next())
    }

    pub fn load_models(&self) -> Result<Vec<LoadModel>, CliError> {
        self.loads
            .iter()
            .map(|l| {
                let m = LoadModel {
                    p: l.p,
                    c_in: l.c_in,
                    tau_p: l.tau_p,
                };
                m.validate()?;
                Ok(m)
            })
            .collect()
    }

    pub fn sim_config(&self) -> Result<SimConfig, CliError> {
        let s = &self.sim;
        let cfg = SimConfig {
            t_end: s.t_end,
            dt: s.dt,
            events: s
                .events
                .iter()
                .map(|e| LoadEvent {
                    time: e.time,
                    load: e.load,
                    power: e.power,
                })
                .collect(),
            decimate: s.decimate,
        };
        cfg.validate(self.loads.len())?;
        Ok(cfg)
    }
}
