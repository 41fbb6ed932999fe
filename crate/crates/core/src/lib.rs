//! Simulation of pseudothermal ghost imaging under optical background noise.
//!
//! The crate generates speckle frames, composes them with an object and a
//! background light source into bucket/reference measurement series, and
//! reconstructs images with conventional GI and with the difference-based
//! IGI estimator, either in batch or as a constant-memory stream.

pub mod error;
pub mod measurement;
pub mod metrics;
pub mod noise;
pub mod pgm;
pub mod reconstruct;
mod rng;
pub mod scene;
pub mod speckle;

pub use error::{Error, Result};
pub use measurement::{
    bucket_curve, column_curve, simulate, MeasurementRecord, MeasurementSeries, NoiseSpec,
    Position, RecordSource, Scenario, ScenarioStream,
};
pub use metrics::{cnr, oracle_covariance_image, pearson, QualityReport};
pub use noise::{
    noise_field, noise_value, per_step_noise_delta_bound, NoiseKind, NoiseWaveform,
    SpatialNoiseMask,
};
pub use reconstruct::{
    arm_delta_rms, gi_reconstruct, igi_reconstruct, reconstruct_both, validity_diagnostic,
    IgiAccumulator, IgiNormalization, ReconImage, ValidityRegime, ValidityReport,
};
pub use scene::{bucket_signal, builtin_mask, load_mask, save_mask, ObjectMask};
pub use speckle::{generate_frame, generate_sequence, Frame, SpeckleGenerator, SpeckleParams};
