//! Pitch-hold and height-hold control: calibration maps, PID, cylinder model
//! and the combined control step.

pub mod calibration;
pub mod control;
pub mod cylinder;
pub mod pid;

pub use calibration::{
    pitch_to_stroke, pot_to_height, stroke_to_pitch, CalibrationError, PitchStrokeMap, PotHeightMap,
};
pub use control::{AttitudeController, ControlError, ControlOutput, ControlTargets, ControllerConfig};
pub use cylinder::{cylinder_step, CylinderState, Saturation};
pub use pid::{pid_step, PidController, PidGains};
