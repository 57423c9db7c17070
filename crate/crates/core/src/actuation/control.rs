use thiserror::Error;

use super::calibration::{PitchStrokeMap, PotHeightMap};
use super::cylinder::{cylinder_step, CylinderState, Saturation};
use super::pid::{PidController, PidGains};
use crate::filter::FilterState;
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("target pitch {0}° maps outside the pitch cylinder stroke")]
    PitchTargetOutOfEnvelope(f64),
    #[error("target height {h} mm outside measurable range [{min}, {max}] mm")]
    HeightTargetOutOfEnvelope { h: f64, min: f64, max: f64 },
    #[error("estimate is not finite")]
    NonFiniteEstimate,
}

/// Setpoints: cutting pitch (deg) and blade height above ground (mm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlTargets<T> {
    pub theta_c: T,
    pub h_c: T,
}

impl<T: Real> Default for ControlTargets<T> {
    fn default() -> Self {
        ControlTargets {
            theta_c: T::lit(35.0),
            h_c: T::lit(250.0),
        }
    }
}

/// Gains, limits and geometry of the two control loops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig<T> {
    pub pitch_gains: PidGains<T>,
    pub height_gains: PidGains<T>,
    /// Symmetric limit on both rate commands, mm/s.
    pub command_limit: T,
    pub pitch_map: PitchStrokeMap<T>,
    pub pot_map: PotHeightMap<T>,
    /// Blade height minus guide height: the guide mechanism reports `H_p`
    /// relative to its own datum, which sits this far above the blade edge
    /// reference.
    pub guide_offset: T,
}

impl<T: Real> Default for ControllerConfig<T> {
    fn default() -> Self {
        ControllerConfig {
            pitch_gains: PidGains::new(T::one(), T::zero(), T::zero()),
            height_gains: PidGains::new(T::lit(15.0), T::lit(2.0), T::zero()),
            command_limit: T::lit(100.0),
            pitch_map: PitchStrokeMap::default(),
            pot_map: PotHeightMap::default(),
            guide_offset: T::lit(180.0),
        }
    }
}

impl<T: Real> ControllerConfig<T> {
    /// Blade height implied by a potentiometer length.
    pub fn blade_height(&self, l_p: T) -> T {
        self.pot_map.height_unchecked(l_p) + self.guide_offset
    }

    /// Blade heights the guide mechanism can observe.
    pub fn measurable_heights(&self) -> (T, T) {
        let (lo, hi) = self.pot_map.height_range();
        (lo + self.guide_offset, hi + self.guide_offset)
    }

    pub fn check_targets(&self, targets: &ControlTargets<T>) -> Result<(), ControlError> {
        if self.pitch_map.pitch_to_stroke(targets.theta_c).saturated {
            return Err(ControlError::PitchTargetOutOfEnvelope(
                targets.theta_c.to_f64_lossy(),
            ));
        }
        let (lo, hi) = self.measurable_heights();
        if !(targets.h_c >= lo && targets.h_c <= hi) {
            return Err(ControlError::HeightTargetOutOfEnvelope {
                h: targets.h_c.to_f64_lossy(),
                min: lo.to_f64_lossy(),
                max: hi.to_f64_lossy(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput<T> {
    pub cyl1: CylinderState<T>,
    pub cyl2: CylinderState<T>,
    /// Stroke-rate commands, mm/s.
    pub cmd1: T,
    pub cmd2: T,
    pub sat1: Saturation,
    pub sat2: Saturation,
    /// Height loop is holding its last command because the guide wheel has
    /// lost the ground.
    pub degraded: bool,
}

/// Pitch-hold and height-hold loops driving cylinders ① and ②.
#[derive(Debug, Clone)]
pub struct AttitudeController<T> {
    cfg: ControllerConfig<T>,
    pitch_pid: PidController<T>,
    height_pid: PidController<T>,
    last_height_cmd: T,
}

impl<T: Real> AttitudeController<T> {
    pub fn new(cfg: ControllerConfig<T>) -> Self {
        let lim = (-cfg.command_limit, cfg.command_limit);
        AttitudeController {
            pitch_pid: PidController::new(cfg.pitch_gains, lim),
            height_pid: PidController::new(cfg.height_gains, lim),
            last_height_cmd: T::zero(),
            cfg,
        }
    }

    pub fn config(&self) -> &ControllerConfig<T> {
        &self.cfg
    }

    /// Pitch error expressed as the stroke the pitch cylinder still has to
    /// travel: `stroke(θ_c) − stroke(θ̂)`. Negative means retract.
    pub fn pitch_stroke_error(&self, theta_c: T, theta_est: T) -> T {
        self.cfg.pitch_map.stroke(theta_c) - self.cfg.pitch_map.stroke(theta_est)
    }

    pub fn height_error(&self, h_c: T, l_p_est: T) -> T {
        h_c - self.cfg.blade_height(l_p_est)
    }

    /// Computes both rate commands without moving the cylinders.
    pub fn commands(
        &mut self,
        targets: &ControlTargets<T>,
        estimate: &FilterState<T>,
        pot_dropout: bool,
        dt: T,
    ) -> Result<(T, T, bool), ControlError> {
        if !(estimate.theta.is_finite() && estimate.l_p.is_finite()) {
            return Err(ControlError::NonFiniteEstimate);
        }
        let e_pitch = self.pitch_stroke_error(targets.theta_c, estimate.theta);
        let cmd1 = self.pitch_pid.step(e_pitch, dt);
        let (cmd2, degraded) = if pot_dropout {
            (self.last_height_cmd, true)
        } else {
            let e_h = self.height_error(targets.h_c, estimate.l_p);
            let c = self.height_pid.step(e_h, dt);
            self.last_height_cmd = c;
            (c, false)
        };
        Ok((cmd1, cmd2, degraded))
    }

    /// One control period: commands from the estimate, then both cylinders
    /// integrate their rate command.
    pub fn control_step(
        &mut self,
        targets: &ControlTargets<T>,
        estimate: &FilterState<T>,
        cyl1: &CylinderState<T>,
        cyl2: &CylinderState<T>,
        pot_dropout: bool,
        dt: T,
    ) -> Result<ControlOutput<T>, ControlError> {
        let (cmd1, cmd2, degraded) = self.commands(targets, estimate, pot_dropout, dt)?;
        let (c1, sat1) = cylinder_step(cyl1, cmd1, dt);
        let (c2, sat2) = cylinder_step(cyl2, cmd2, dt);
        Ok(ControlOutput {
            cyl1: c1,
            cyl2: c2,
            cmd1,
            cmd2,
            sat1,
            sat2,
            degraded,
        })
    }
}
