//! Averaged nonlinear time-domain model of a source converter feeding
//! constant-power loads over RL lines, with impedance measurement by sine
//! injection and by finite-difference linearization.

mod block;
mod inject;
mod integrate;
mod linearize;
mod model;
mod source;

pub use inject::{measure_impedance_injection, InjectionConfig};
pub use integrate::{load_step_metrics, simulate, LoadEvent, LoadStepMetrics, SimConfig, Trace};
pub use linearize::{
    frequency_response, linearize_numeric, linearize_source, zout_from_statespace, LinearModel, EQUILIBRIUM_TOL,
};
pub use model::{build_model, LoadModel, Outputs, SimModel, SourceSpec};
pub use source::{ConverterSource, DesiredSource, Source, SourceOutputs};
