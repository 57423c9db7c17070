//! Euler-angle kinematics for the cutting-device IMU.
//!
//! Angles are degrees at every public boundary; radians appear only inside
//! trigonometric evaluation.

use thiserror::Error;

use crate::scalar::Real;

/// Default half-width of the excluded band around ±90° pitch.
pub const GIMBAL_GUARD_DEG: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("pitch {theta_deg}° is within {guard_deg}° of ±90°; Euler rate mapping is singular")]
    GimbalLock { theta_deg: f64, guard_deg: f64 },
    #[error("accelerometer y and z components are both zero; pitch is undefined")]
    DegenerateAccel,
}

/// Roll, pitch and yaw in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerAngles<T> {
    pub phi: T,
    pub theta: T,
    pub psi: T,
}

impl<T: Real> EulerAngles<T> {
    pub fn new(phi: T, theta: T, psi: T) -> Self {
        EulerAngles { phi, theta, psi }
    }

    /// Wraps every angle into (−180, 180].
    pub fn normalized(self) -> Self {
        EulerAngles {
            phi: normalize_deg(self.phi),
            theta: normalize_deg(self.theta),
            psi: normalize_deg(self.psi),
        }
    }
}

/// Gyro body rates in deg/s.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyRates<T> {
    pub p: T,
    pub q: T,
    pub r: T,
}

impl<T: Real> BodyRates<T> {
    pub fn new(p: T, q: T, r: T) -> Self {
        BodyRates { p, q, r }
    }

    pub fn is_finite(&self) -> bool {
        self.p.is_finite() && self.q.is_finite() && self.r.is_finite()
    }
}

/// Euler angle rates in deg/s.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerRates<T> {
    pub phi_dot: T,
    pub theta_dot: T,
    pub psi_dot: T,
}

/// Specific force measured by the accelerometer, m/s².
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AccelVector<T> {
    pub x_acc: T,
    pub y_acc: T,
    pub z_acc: T,
}

impl<T: Real> AccelVector<T> {
    pub fn new(x_acc: T, y_acc: T, z_acc: T) -> Self {
        AccelVector { x_acc, y_acc, z_acc }
    }

    pub fn scaled(self, k: T) -> Self {
        AccelVector {
            x_acc: self.x_acc * k,
            y_acc: self.y_acc * k,
            z_acc: self.z_acc * k,
        }
    }
}

/// Wraps an angle in degrees into (−180, 180].
pub fn normalize_deg<T: Real>(a: T) -> T {
    let full = T::lit(360.0);
    let half = T::lit(180.0);
    let mut w = a % full;
    if w <= -half {
        w += full;
    } else if w > half {
        w -= full;
    }
    w
}

/// Maps gyro body rates to Euler angle rates.
///
/// Uses the default guard band of [`GIMBAL_GUARD_DEG`].
pub fn body_rates_to_euler_rates<T: Real>(
    angles: EulerAngles<T>,
    rates: BodyRates<T>,
) -> Result<EulerRates<T>, KinematicsError> {
    body_rates_to_euler_rates_guarded(angles, rates, T::lit(GIMBAL_GUARD_DEG))
}

pub fn body_rates_to_euler_rates_guarded<T: Real>(
    angles: EulerAngles<T>,
    rates: BodyRates<T>,
    guard_deg: T,
) -> Result<EulerRates<T>, KinematicsError> {
    if !(angles.theta.abs() < T::lit(90.0) - guard_deg) {
        return Err(KinematicsError::GimbalLock {
            theta_deg: angles.theta.to_f64_lossy(),
            guard_deg: guard_deg.to_f64_lossy(),
        });
    }
    let (s_phi, c_phi) = angles.phi.to_radians().sin_cos();
    let theta = angles.theta.to_radians();
    let (t_theta, c_theta) = (theta.tan(), theta.cos());
    let BodyRates { p, q, r } = rates;
    Ok(EulerRates {
        phi_dot: p + s_phi * t_theta * q + c_phi * t_theta * r,
        theta_dot: c_phi * q - s_phi * r,
        psi_dot: (s_phi * q + c_phi * r) / c_theta,
    })
}

/// One explicit Euler step of pitch from gyro rates projected through roll.
pub fn integrate_pitch<T: Real>(theta_pre: T, phi: T, q: T, r: T, dt: T) -> T {
    theta_pre + dt * pitch_rate(phi, q, r)
}

/// Pitch rate contributed by body rates `q` and `r` at roll `phi` (deg).
#[inline]
pub fn pitch_rate<T: Real>(phi: T, q: T, r: T) -> T {
    let (s, c) = phi.to_radians().sin_cos();
    q * c - r * s
}

/// Pitch seen by the accelerometer, degrees.
///
/// The cutter IMU is mounted so pitch rotates gravity in its y–z plane; the
/// two-argument arctangent keeps the result defined when `z_acc` is zero.
pub fn accel_to_pitch<T: Real>(accel: AccelVector<T>) -> Result<T, KinematicsError> {
    if accel.y_acc == T::zero() && accel.z_acc == T::zero() {
        return Err(KinematicsError::DegenerateAccel);
    }
    Ok(accel.y_acc.atan2(accel.z_acc).to_degrees())
}

/// Roll seen by the accelerometer, degrees. Companion of [`accel_to_pitch`]
/// for the same mounting: roll tips gravity onto the sensor x axis.
pub fn accel_to_roll<T: Real>(accel: AccelVector<T>) -> Result<T, KinematicsError> {
    let yz = accel.y_acc.hypot(accel.z_acc);
    if yz == T::zero() && accel.x_acc == T::zero() {
        return Err(KinematicsError::DegenerateAccel);
    }
    Ok((-accel.x_acc).atan2(yz).to_degrees())
}
