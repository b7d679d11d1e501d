//! Small-signal characterization of DC microgrid source converters.
//!
//! The crate covers the averaged bidirectional boost plant, five decentralized
//! voltage control laws wrapped around a PI current loop, the closed-loop
//! output impedance and its series/parallel decomposition, the three forming
//! indices (OII, CFI, VFI) with labels and a passivity screen, and an averaged
//! nonlinear time-domain model of a source feeding constant-power loads that
//! serves as an independent check on the frequency-domain results.

pub mod analysis;
pub mod control;
pub mod error;
pub mod numfmt;
pub mod plant;
pub mod reference;
pub mod sim;
pub mod tf;

pub use error::{Error, Result};
