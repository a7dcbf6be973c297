//! Bell-type inequality tests for two-mode Werner-like states measured by
//! unbalanced homodyne detection with on-off detectors.
//!
//! * [`analytic`]: closed-form vacuum-detection probabilities.
//! * [`fock`]: truncated Fock-space oracle for those probabilities.
//! * [`inequality`]: CH, Bell-Wigner and Janssens inequalities with exact
//!   vertex verification of their classical bounds.
//! * [`optimizer`]: multi-start Nelder-Mead search over local-oscillator
//!   settings, `p` sweeps and the violation threshold.

pub mod analytic;
pub mod error;
pub mod fock;
pub mod inequality;
pub mod optimizer;

pub use analytic::{click_probability, joint_probability, single_probability, LocalOscillatorSetting, WernerParameter};
pub use error::{BellError, Result};
pub use inequality::{BellInequality, Facet, SettingsVector};
