use crate::scalar::{clamp, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidGains<T> {
    pub kp: T,
    pub ki: T,
    pub kd: T,
}

impl<T: Real> PidGains<T> {
    pub fn new(kp: T, ki: T, kd: T) -> Self {
        PidGains { kp, ki, kd }
    }

    /// Field gains of the pitch-cylinder loop.
    pub fn field_pitch() -> Self {
        Self::new(T::lit(0.1), T::zero(), T::lit(3.0))
    }

    /// Field gains of the height (slide-cylinder) loop.
    pub fn field_height() -> Self {
        Self::new(T::lit(0.1), T::lit(0.02), T::lit(1.0))
    }
}

/// Positional PID with output clamping and integral clamping.
///
/// The derivative acts on the error and is zero on the first call after a
/// reset.
#[derive(Debug, Clone, PartialEq)]
pub struct PidController<T> {
    pub gains: PidGains<T>,
    pub output_limits: (T, T),
    pub integral_limits: (T, T),
    integral: T,
    prev_error: Option<T>,
}

impl<T: Real> PidController<T> {
    /// Integral limits are set to `output_limits / ki` (unbounded when
    /// `ki` is zero).
    pub fn new(gains: PidGains<T>, output_limits: (T, T)) -> Self {
        let integral_limits = if gains.ki > T::zero() {
            (output_limits.0 / gains.ki, output_limits.1 / gains.ki)
        } else {
            (T::neg_infinity(), T::infinity())
        };
        PidController {
            gains,
            output_limits,
            integral_limits,
            integral: T::zero(),
            prev_error: None,
        }
    }

    pub fn with_integral_limits(mut self, lo: T, hi: T) -> Self {
        self.integral_limits = (lo, hi);
        self.integral = clamp(self.integral, lo, hi);
        self
    }

    pub fn integral(&self) -> T {
        self.integral
    }

    pub fn prev_error(&self) -> Option<T> {
        self.prev_error
    }

    pub fn reset(&mut self) {
        self.integral = T::zero();
        self.prev_error = None;
    }

    /// Advances by `dt` (> 0) with the current `error` and returns the
    /// clamped command.
    pub fn step(&mut self, error: T, dt: T) -> T {
        debug_assert!(dt > T::zero());
        let (ilo, ihi) = self.integral_limits;
        self.integral = clamp(self.integral + error * dt, ilo, ihi);
        let derivative = match self.prev_error {
            Some(prev) => (error - prev) / dt,
            None => T::zero(),
        };
        self.prev_error = Some(error);
        let PidGains { kp, ki, kd } = self.gains;
        let raw = kp * error + ki * self.integral + kd * derivative;
        let (lo, hi) = self.output_limits;
        // NaN errors would otherwise escape the clamp.
        if raw.is_nan() {
            return T::zero();
        }
        clamp(raw, lo, hi)
    }
}

/// Free-function form of [`PidController::step`].
pub fn pid_step<T: Real>(ctrl: &mut PidController<T>, error: T, dt: T) -> T {
    ctrl.step(error, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn ctrl(kp: f64, ki: f64, kd: f64) -> PidController<f64> {
        PidController::new(PidGains::new(kp, ki, kd), (-100.0, 100.0))
    }

    #[test]
    fn zero_error_zero_command() {
        assert_eq!(ctrl(0.1, 0.02, 1.0).step(0.0, 0.01), 0.0);
    }

    #[test]
    fn proportional_only() {
        assert_abs_diff_eq!(ctrl(0.1, 0.0, 0.0).step(10.0, 0.01), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn derivative_kick_is_clamped() {
        let mut c = ctrl(0.1, 0.0, 3.0);
        assert_eq!(c.step(0.0, 0.01), 0.0);
        // 0.1 + 3·100 = 300.1 → upper limit.
        assert_eq!(c.step(1.0, 0.01), 100.0);
        let mut wide = PidController::new(PidGains::new(0.1, 0.0, 3.0), (-1e6, 1e6));
        wide.step(0.0, 0.01);
        assert_abs_diff_eq!(wide.step(1.0, 0.01), 300.1, epsilon = 1e-9);
    }

    #[test]
    fn first_step_has_no_derivative() {
        let mut c = ctrl(0.0, 0.0, 5.0);
        assert_eq!(c.step(7.0, 0.01), 0.0);
    }

    #[test]
    fn integral_anti_windup() {
        let mut c = ctrl(0.0, 0.5, 0.0);
        for _ in 0..10_000 {
            c.step(1000.0, 0.01);
        }
        assert_eq!(c.integral(), 200.0);
        // Unwinds as soon as the error flips sign.
        let out = c.step(-1000.0, 0.01);
        assert!(out < 100.0);
    }

    #[test]
    fn field_gains() {
        assert_eq!(PidGains::<f64>::field_pitch(), PidGains::new(0.1, 0.0, 3.0));
        assert_eq!(PidGains::<f64>::field_height(), PidGains::new(0.1, 0.02, 1.0));
    }

    proptest! {
        #[test]
        fn output_always_within_limits(errs in proptest::collection::vec(-1e9..1e9f64, 1..64),
                                       kp in 0.0..50.0f64, ki in 0.0..50.0f64, kd in 0.0..50.0f64,
                                       dt in 1e-4..1.0f64) {
            let mut c = PidController::new(PidGains::new(kp, ki, kd), (-100.0, 100.0));
            for e in errs {
                let out = c.step(e, dt);
                prop_assert!((-100.0..=100.0).contains(&out));
                prop_assert!(c.integral() >= c.integral_limits.0 && c.integral() <= c.integral_limits.1);
            }
        }

        #[test]
        fn no_integral_means_no_memory(errs in proptest::collection::vec(-50.0..50.0f64, 2..32)) {
            let mut a = ctrl(0.1, 0.0, 3.0);
            let first: Vec<f64> = errs.iter().map(|e| a.step(*e, 0.01)).collect();
            // Replaying after the same leading error reproduces the commands.
            let mut b = ctrl(0.1, 0.0, 3.0);
            b.step(123.0, 0.01);
            b.step(errs[0], 0.01);
            let second: Vec<f64> = errs[1..].iter().map(|e| b.step(*e, 0.01)).collect();
            prop_assert_eq!(&first[1..], &second[..]);
        }
    }
}
