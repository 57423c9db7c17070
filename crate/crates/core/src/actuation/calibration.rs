//! Linear calibration maps between cutter quantities and sensor/actuator
//! readings.

use thiserror::Error;

use crate::scalar::{Clamped, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibrationError {
    #[error("potentiometer length {l_p} mm outside span [{min}, {max}]")]
    OutOfRange { l_p: f64, min: f64, max: f64 },
}

/// Cutter pitch ↔ stroke of the pitch cylinder (①): `L = slope·θ + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchStrokeMap<T> {
    pub slope: T,
    pub intercept: T,
    pub stroke_min: T,
    pub stroke_max: T,
}

impl<T: Real> Default for PitchStrokeMap<T> {
    fn default() -> Self {
        PitchStrokeMap {
            slope: T::lit(-34.304),
            intercept: T::lit(1949.9),
            stroke_min: T::zero(),
            stroke_max: T::lit(2000.0),
        }
    }
}

impl<T: Real> PitchStrokeMap<T> {
    /// Unclamped stroke for pitch `theta` (deg).
    #[inline]
    pub fn stroke(&self, theta: T) -> T {
        self.slope * theta + self.intercept
    }

    /// Stroke for `theta`, clamped to the cylinder envelope.
    pub fn pitch_to_stroke(&self, theta: T) -> Clamped<T> {
        Clamped::within(self.stroke(theta), self.stroke_min, self.stroke_max)
    }

    /// Exact algebraic inverse of [`stroke`](Self::stroke).
    #[inline]
    pub fn stroke_to_pitch(&self, stroke: T) -> T {
        (stroke - self.intercept) / self.slope
    }
}

/// Potentiometer extension ↔ guide height: `H_p = gain·L_p + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotHeightMap<T> {
    pub gain: T,
    pub offset: T,
    pub span_min: T,
    pub span_max: T,
}

impl<T: Real> Default for PotHeightMap<T> {
    fn default() -> Self {
        PotHeightMap {
            gain: T::lit(1.0323),
            offset: T::lit(16.177),
            span_min: T::zero(),
            span_max: T::lit(100.0),
        }
    }
}

impl<T: Real> PotHeightMap<T> {
    pub fn pot_to_height(&self, l_p: T) -> Result<T, CalibrationError> {
        if !(l_p >= self.span_min && l_p <= self.span_max) {
            return Err(CalibrationError::OutOfRange {
                l_p: l_p.to_f64_lossy(),
                min: self.span_min.to_f64_lossy(),
                max: self.span_max.to_f64_lossy(),
            });
        }
        Ok(self.height_unchecked(l_p))
    }

    /// Affine map without the span check; used on filtered estimates that may
    /// sit marginally outside the physical span.
    #[inline]
    pub fn height_unchecked(&self, l_p: T) -> T {
        self.gain * l_p + self.offset
    }

    #[inline]
    pub fn height_to_pot(&self, h_p: T) -> T {
        (h_p - self.offset) / self.gain
    }

    /// Heights the guide mechanism can report.
    pub fn height_range(&self) -> (T, T) {
        (
            self.height_unchecked(self.span_min),
            self.height_unchecked(self.span_max),
        )
    }
}

/// Pitch-to-stroke with the default map.
pub fn pitch_to_stroke<T: Real>(theta: T) -> Clamped<T> {
    PitchStrokeMap::default().pitch_to_stroke(theta)
}

pub fn stroke_to_pitch<T: Real>(stroke: T) -> T {
    PitchStrokeMap::default().stroke_to_pitch(stroke)
}

pub fn pot_to_height<T: Real>(l_p: T) -> Result<T, CalibrationError> {
    PotHeightMap::default().pot_to_height(l_p)
}
