//! Exceptional-surface optomechanics: eigenvalue structure, mean-field steady
//! states, probe transmission (OMIT) spectra and group delays of a
//! whispering-gallery resonator whose CW and CCW modes are coupled by a
//! backscatterer and by a one-way fiber loop.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod appendix;
pub mod config;
pub mod eigen;
pub mod error;
pub mod export;
pub mod feasibility;
pub mod model;
pub mod presets;
pub mod response;
pub mod steady;
pub mod units;
pub mod window;

pub use appendix::{appendix_response, crosscheck_appendix, CrosscheckReport, Verdict};
pub use config::{build_drive, build_system, ModelConfig, RawParams};
pub use eigen::{classify_point, distance_to_es, eigen_split, es_coupling, EigenSplit, PhaseClass, PhaseKind};
pub use error::{Error, Result};
pub use model::{derived_rates, drive_amplitudes, Cavity, DerivedRates, Drive, SystemParams, HBAR};
pub use presets::{preset, sweep_1d, sweep_phase, Grid, Preset, SweepAxis};
pub use response::{
    fluctuation_system, group_delay, solve_response, transmission, transmission_spectrum, DelayOptions, ProbeResponse, ResponseSolution,
    SpectrumTable,
};
pub use steady::{solve_steady, SteadyState};
pub use units::{FrequencyConvention, Phase};
pub use window::{window_metrics, Polarity, WindowMetrics};
