//! Synthetic gyro, accelerometer and guide-wheel potentiometer readings.
//!
//! Every sampler draws its normal variates unconditionally, so two runs with
//! the same seed consume the random stream identically whatever the sigmas.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::actuation::PotHeightMap;
use crate::kinematics::{AccelVector, BodyRates, EulerAngles};
use crate::scalar::{clamp, Real};

pub const GRAVITY: f64 = 9.81;

/// One time step of raw sensor data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorFrame<T> {
    pub t: T,
    pub gyro: BodyRates<T>,
    pub accel: AccelVector<T>,
    /// Potentiometer extension, mm.
    pub pot: T,
    /// Guide wheel out of its measurable travel; `pot` is clamped.
    pub dropout: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorNoiseConfig<T> {
    /// deg/s
    pub gyro_white_sigma: T,
    /// deg/s per √s
    pub gyro_bias_walk_sigma: T,
    /// Initial pitch-rate bias, deg/s.
    pub gyro_bias_init: T,
    /// m/s² per axis
    pub accel_white_sigma: T,
    /// mm
    pub pot_white_sigma: T,
    /// Reading resolution in mm; 0 disables quantization.
    pub pot_quantum: T,
    pub seed: u64,
}

impl<T: Real> Default for SensorNoiseConfig<T> {
    fn default() -> Self {
        SensorNoiseConfig {
            gyro_white_sigma: T::lit(0.05),
            gyro_bias_walk_sigma: T::lit(0.01),
            gyro_bias_init: T::lit(0.3),
            accel_white_sigma: T::lit(0.15),
            pot_white_sigma: T::lit(0.3),
            pot_quantum: T::lit(0.1),
            seed: 0,
        }
    }
}

impl<T: Real> SensorNoiseConfig<T> {
    /// Exact readings: no noise, no bias, no quantization.
    pub fn noiseless() -> Self {
        SensorNoiseConfig {
            gyro_white_sigma: T::zero(),
            gyro_bias_walk_sigma: T::zero(),
            gyro_bias_init: T::zero(),
            accel_white_sigma: T::zero(),
            pot_white_sigma: T::zero(),
            pot_quantum: T::zero(),
            seed: 0,
        }
    }

    pub fn is_valid(&self) -> bool {
        let z = T::zero();
        [
            self.gyro_white_sigma,
            self.gyro_bias_walk_sigma,
            self.accel_white_sigma,
            self.pot_white_sigma,
            self.pot_quantum,
        ]
        .iter()
        .all(|v| *v >= z)
            && self.gyro_bias_init.is_finite()
    }
}

fn normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::lit(rng.sample::<f64, _>(StandardNormal))
}

/// Gyro reading: truth, plus `bias` on the pitch axis, plus white noise.
pub fn sample_gyro<T: Real, R: Rng + ?Sized>(
    true_rates: BodyRates<T>,
    bias: T,
    cfg: &SensorNoiseConfig<T>,
    rng: &mut R,
) -> BodyRates<T> {
    let s = cfg.gyro_white_sigma;
    let np: T = normal(rng);
    let nq: T = normal(rng);
    let nr: T = normal(rng);
    BodyRates {
        p: true_rates.p + s * np,
        q: true_rates.q + bias + s * nq,
        r: true_rates.r + s * nr,
    }
}

/// Random-walk gyro bias.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GyroBias<T> {
    pub value: T,
}

impl<T: Real> GyroBias<T> {
    pub fn new(cfg: &SensorNoiseConfig<T>) -> Self {
        GyroBias {
            value: cfg.gyro_bias_init,
        }
    }

    /// Advances the walk by `dt` seconds.
    pub fn advance<R: Rng + ?Sized>(&mut self, dt: T, cfg: &SensorNoiseConfig<T>, rng: &mut R) {
        let n: T = normal(rng);
        self.value += cfg.gyro_bias_walk_sigma * dt.sqrt() * n;
    }
}

/// Gravity seen by the cutter IMU at the given attitude, plus white noise.
///
/// Pitch tips gravity within the sensor y–z plane and roll onto the x axis,
/// matching [`accel_to_pitch`](crate::kinematics::accel_to_pitch) and
/// [`accel_to_roll`](crate::kinematics::accel_to_roll). No linear
/// acceleration term: the platform is treated as quasi-static.
pub fn sample_accel<T: Real, R: Rng + ?Sized>(
    true_attitude: EulerAngles<T>,
    cfg: &SensorNoiseConfig<T>,
    rng: &mut R,
) -> AccelVector<T> {
    let g = T::lit(GRAVITY);
    let (s_th, c_th) = true_attitude.theta.to_radians().sin_cos();
    let (s_ph, c_ph) = true_attitude.phi.to_radians().sin_cos();
    let s = cfg.accel_white_sigma;
    let nx: T = normal(rng);
    let ny: T = normal(rng);
    let nz: T = normal(rng);
    AccelVector {
        x_acc: -g * s_ph + s * nx,
        y_acc: g * s_th * c_ph + s * ny,
        z_acc: g * c_th * c_ph + s * nz,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotReading<T> {
    pub l_p: T,
    pub dropout: bool,
}

/// Potentiometer extension for a true guide height `h_p` (mm).
///
/// Outside the mechanism's travel the reading is clamped to the span and
/// flagged as a dropout.
pub fn sample_potentiometer<T: Real, R: Rng + ?Sized>(
    true_height_hp: T,
    map: &PotHeightMap<T>,
    cfg: &SensorNoiseConfig<T>,
    rng: &mut R,
) -> PotReading<T> {
    let n: T = normal(rng);
    let (h_lo, h_hi) = map.height_range();
    let dropout = !(true_height_hp >= h_lo && true_height_hp <= h_hi);
    let mut l = map.height_to_pot(true_height_hp) + cfg.pot_white_sigma * n;
    if cfg.pot_quantum > T::zero() {
        l = (l / cfg.pot_quantum).round() * cfg.pot_quantum;
    }
    PotReading {
        l_p: clamp(l, map.span_min, map.span_max),
        dropout,
    }
}

/// The three sensors with their shared random stream and bias state.
#[derive(Debug, Clone)]
pub struct SensorSuite<T, R> {
    pub cfg: SensorNoiseConfig<T>,
    pub pot_map: PotHeightMap<T>,
    pub bias: GyroBias<T>,
    rng: R,
}

impl<T: Real, R: Rng> SensorSuite<T, R> {
    pub fn new(cfg: SensorNoiseConfig<T>, pot_map: PotHeightMap<T>, rng: R) -> Self {
        SensorSuite {
            bias: GyroBias::new(&cfg),
            cfg,
            pot_map,
            rng,
        }
    }

    /// Samples every sensor at time `t`, then advances the gyro bias by `dt`.
    pub fn sample(
        &mut self,
        t: T,
        true_rates: BodyRates<T>,
        true_attitude: EulerAngles<T>,
        true_guide_height: T,
        dt: T,
    ) -> SensorFrame<T> {
        let gyro = sample_gyro(true_rates, self.bias.value, &self.cfg, &mut self.rng);
        let accel = sample_accel(true_attitude, &self.cfg, &mut self.rng);
        let pot = sample_potentiometer(true_guide_height, &self.pot_map, &self.cfg, &mut self.rng);
        self.bias.advance(dt, &self.cfg, &mut self.rng);
        SensorFrame {
            t,
            gyro,
            accel,
            pot: pot.l_p,
            dropout: pot.dropout,
        }
    }
}
