use crate::scalar::{clamp, Real};

/// Hydraulic cylinder reduced to a rate-limited integrator between end stops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderState<T> {
    pub stroke: T,
    pub stroke_min: T,
    pub stroke_max: T,
    pub max_rate: T,
}

/// Which limits were active during a cylinder step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Saturation {
    pub rate: bool,
    pub stroke: bool,
}

impl Saturation {
    pub fn any(&self) -> bool {
        self.rate || self.stroke
    }
}

impl<T: Real> CylinderState<T> {
    pub fn new(stroke: T, stroke_min: T, stroke_max: T, max_rate: T) -> Self {
        CylinderState {
            stroke: clamp(stroke, stroke_min, stroke_max),
            stroke_min,
            stroke_max,
            max_rate,
        }
    }

    /// Pitch cylinder ①: 0–2000 mm, 100 mm/s.
    pub fn pitch_default(stroke: T) -> Self {
        Self::new(stroke, T::zero(), T::lit(2000.0), T::lit(100.0))
    }

    /// Slide cylinder ②: 0–300 mm, 100 mm/s.
    pub fn slide_default(stroke: T) -> Self {
        Self::new(stroke, T::zero(), T::lit(300.0), T::lit(100.0))
    }

    pub fn at_limit(&self) -> bool {
        self.stroke <= self.stroke_min || self.stroke >= self.stroke_max
    }
}

/// Integrates a stroke-rate command (mm/s) over `dt`.
pub fn cylinder_step<T: Real>(
    cyl: &CylinderState<T>,
    commanded_rate: T,
    dt: T,
) -> (CylinderState<T>, Saturation) {
    let rate = if commanded_rate.is_nan() {
        T::zero()
    } else {
        commanded_rate
    };
    let applied = clamp(rate, -cyl.max_rate, cyl.max_rate);
    let target = cyl.stroke + applied * dt;
    let stroke = clamp(target, cyl.stroke_min, cyl.stroke_max);
    let sat = Saturation {
        rate: applied != rate,
        stroke: stroke != target,
    };
    (CylinderState { stroke, ..*cyl }, sat)
}
