//! Attitude estimation and control for a cabbage harvester's cutting device:
//! Euler kinematics, a three-state Kalman filter fusing gyro, accelerometer
//! and potentiometer, PID-driven hydraulic cylinders, terrain and scoring.
//!
//! Everything is generic over [`Real`]; `*F64` and `*F32` aliases are below.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod actuation;
pub mod covariance;
pub mod evaluation;
pub mod filter;
pub mod kinematics;
pub mod scalar;
pub mod sensors;
pub mod terrain;

pub use actuation::{
    AttitudeController, CalibrationError, ControlError, ControlOutput, ControlTargets, ControllerConfig,
    CylinderState, PidController, PidGains, PitchStrokeMap, PotHeightMap, Saturation,
};
pub use evaluation::{
    ComparisonReport, CutRecord, EvalError, Grade, QualityRubric, Reference, RunMetrics, TimeSeries,
};
pub use filter::{FilterError, FilterParams, FilterState, FusionFilter, Measurement, StepOutput};
pub use kinematics::{AccelVector, BodyRates, EulerAngles, EulerRates, KinematicsError};
pub use scalar::Real;
pub use sensors::{SensorFrame, SensorNoiseConfig, SensorSuite};
pub use terrain::{
    Course, CourseKind, CourseParams, CutterGeometry, PlatformPose, TerrainError, TerrainProfile,
};

pub type FilterParamsF64 = FilterParams<f64>;
pub type FilterStateF64 = FilterState<f64>;
pub type FusionFilterF64 = FusionFilter<f64>;
pub type ControllerConfigF64 = ControllerConfig<f64>;
pub type SensorNoiseConfigF64 = SensorNoiseConfig<f64>;
pub type TerrainProfileF64 = TerrainProfile<f64>;
pub type CourseF64 = Course<f64>;

pub type FilterParamsF32 = FilterParams<f32>;
pub type FilterStateF32 = FilterState<f32>;
pub type FusionFilterF32 = FusionFilter<f32>;
pub type ControllerConfigF32 = ControllerConfig<f32>;
pub type SensorNoiseConfigF32 = SensorNoiseConfig<f32>;
pub type TerrainProfileF32 = TerrainProfile<f32>;
pub type CourseF32 = Course<f32>;
