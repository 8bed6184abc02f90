//! Chewing-sequence segmentation and eating-episode detection for 20 Hz
//! necklace sensor logs.
//!
//! The pipeline runs `data` (ingest) → `signals` (derived traces) → `peaks`
//! → `periodic` (candidate subsequences) → `features` → `boost`
//! (classification) → `episodes` (per-second scores and clustering), with
//! `eval` for scoring and cross-validation and `synth` for traces with known
//! ground truth.
//!
//! Numeric kernels are generic over [`Scalar`]; the aliases below fix the
//! common instantiations.

pub mod boost;
pub mod config;
pub mod data;
pub mod episodes;
pub mod error;
pub mod eval;
pub mod features;
pub mod peaks;
pub mod periodic;
pub mod pipeline;
pub mod scalar;
pub mod signals;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Quat = signals::Quaternion<f64>;
pub type Quat32 = signals::Quaternion<f32>;
pub type PeakF64 = peaks::Peak<f64>;
pub type Peak32 = peaks::Peak<f32>;
pub type Periodic = periodic::PeriodicSubsequence<f64>;
pub type Periodic32 = periodic::PeriodicSubsequence<f32>;
pub type Candidate = periodic::CandidateSubsequence<f64>;
pub type Candidate32 = periodic::CandidateSubsequence<f32>;
pub type Sweep = periodic::SweepConfig<f64>;
pub type Sweep32 = periodic::SweepConfig<f32>;
