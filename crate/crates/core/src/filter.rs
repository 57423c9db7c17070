//! Three-state Kalman filter fusing gyro pitch rate, accelerometer pitch and
//! the guide-wheel potentiometer.
//!
//! State vector is `[θ, θ̇_b, L_p]`: cutter pitch (deg), gyro pitch-rate bias
//! (deg/s) and potentiometer extension (mm). The gyro enters as the control
//! input; the accelerometer pitch and the potentiometer reading are the two
//! measurements. Every matrix product is written out for the fixed sparsity
//! of the transition and observation matrices.

use thiserror::Error;

use crate::covariance::{self, CovarianceHealth, Mat3};
use crate::kinematics::{self, EulerAngles, KinematicsError};
use crate::scalar::Real;
use crate::sensors::SensorFrame;

/// Condition number of the innovation covariance above which it is treated
/// as singular.
pub const MAX_INNOVATION_CONDITION: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterError {
    #[error("filter state became non-finite during {stage}")]
    NonFiniteState { stage: &'static str },
    #[error("innovation covariance is singular (condition estimate {condition:e})")]
    SingularInnovationCov { condition: f64 },
    #[error("invalid filter parameters: {0}")]
    InvalidParams(&'static str),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}

/// Noise intensities and step size.
///
/// Process noise intensities are per second; the discrete process covariance
/// for a step is `diag(q_i, q_bias, q_p)·dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams<T> {
    pub dt: T,
    /// Pitch process-noise intensity.
    pub q_i: T,
    /// Bias process-noise intensity.
    pub q_bias: T,
    pub q_p: T,
    /// Accelerometer pitch variance, deg².
    pub r_i: T,
    /// Potentiometer variance, mm².
    pub r_p: T,
    /// Weight of the newest accelerometer roll sample in the roll used to
    /// project gyro rates onto pitch. 1 uses the previous sample as is.
    pub roll_smoothing: T,
}

impl<T: Real> Default for FilterParams<T> {
    /// Tuned field values, `Q = diag(0.001, 0.0001, 0.01)`, `R = diag(2.0, 0.001)`,
    /// at 100 Hz.
    fn default() -> Self {
        FilterParams {
            dt: T::lit(0.01),
            q_i: T::lit(0.001),
            q_bias: T::lit(0.0001),
            q_p: T::lit(0.01),
            r_i: T::lit(2.0),
            r_p: T::lit(0.001),
            roll_smoothing: T::lit(0.5),
        }
    }
}

impl<T: Real> FilterParams<T> {
    /// Same intensity on the pitch and bias rows.
    pub fn with_shared_q(mut self, q_i: T) -> Self {
        self.q_i = q_i;
        self.q_bias = q_i;
        self
    }

    pub fn validate(&self) -> Result<(), FilterError> {
        let z = T::zero();
        if !(self.dt > z) {
            return Err(FilterError::InvalidParams("dt must be positive"));
        }
        if !(self.q_i >= z && self.q_bias >= z && self.q_p >= z) {
            return Err(FilterError::InvalidParams("process noise must be non-negative"));
        }
        if !(self.r_i > z && self.r_p > z) {
            return Err(FilterError::InvalidParams("measurement noise must be positive"));
        }
        if !(self.roll_smoothing >= z && self.roll_smoothing <= T::one()) {
            return Err(FilterError::InvalidParams("roll_smoothing must be in [0, 1]"));
        }
        Ok(())
    }

    /// Discrete process covariance for one step (diagonal).
    pub fn process_cov(&self) -> [T; 3] {
        [self.q_i * self.dt, self.q_bias * self.dt, self.q_p * self.dt]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterState<T> {
    pub theta: T,
    pub theta_dot_b: T,
    pub l_p: T,
    pub p_cov: Mat3<T>,
    /// Accelerometer roll (deg) carried between steps for projecting the
    /// gyro rates; not part of the estimated state vector.
    pub roll: T,
}

impl<T: Real> FilterState<T> {
    pub fn new(theta: T, theta_dot_b: T, l_p: T, p_cov: Mat3<T>) -> Self {
        FilterState {
            theta,
            theta_dot_b,
            l_p,
            p_cov,
            roll: T::zero(),
        }
    }

    /// Default initial covariance: diag(1 deg², 0.1 (deg/s)², 1 mm²).
    pub fn default_p0() -> Mat3<T> {
        covariance::diag([T::one(), T::lit(0.1), T::one()])
    }

    /// Seeds the estimate from the first sample: pitch and roll from the
    /// accelerometer, length from the potentiometer, zero bias.
    pub fn from_first_frame(frame: &SensorFrame<T>, p0: Mat3<T>) -> Result<Self, FilterError> {
        let theta = kinematics::accel_to_pitch(frame.accel)?;
        let roll = kinematics::accel_to_roll(frame.accel)?;
        Ok(FilterState {
            theta,
            theta_dot_b: T::zero(),
            l_p: frame.pot,
            p_cov: p0,
            roll,
        })
    }

    pub fn mean(&self) -> [T; 3] {
        [self.theta, self.theta_dot_b, self.l_p]
    }

    pub fn is_finite(&self) -> bool {
        self.mean().iter().all(|v| v.is_finite()) && covariance::all_finite(&self.p_cov)
    }

    pub fn covariance_health(&self) -> CovarianceHealth<T> {
        CovarianceHealth::of(&self.p_cov)
    }

    fn checked(self, stage: &'static str) -> Result<Self, FilterError> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(FilterError::NonFiniteState { stage })
        }
    }
}

/// Accelerometer pitch (deg) and potentiometer length (mm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement<T> {
    pub theta_acc: T,
    pub l_p_meas: T,
}

/// 3×2 gain; column 0 weights the pitch innovation, column 1 the length.
pub type Gain<T> = [[T; 2]; 3];

/// Time update: `x̄ = A·x + B·u`, `P̄ = A·P·Aᵀ + Q`.
pub fn predict<T: Real>(
    state: &FilterState<T>,
    u: T,
    params: &FilterParams<T>,
) -> Result<FilterState<T>, FilterError> {
    let dt = params.dt;
    let [qt, qb, qp] = params.process_cov();
    let p = &state.p_cov;
    let p_bar = [
        [
            p[0][0] + dt * (dt * p[1][1] - p[0][1] - p[1][0]) + qt,
            p[0][1] - dt * p[1][1],
            p[0][2] - dt * p[1][2],
        ],
        [p[1][0] - dt * p[1][1], p[1][1] + qb, p[1][2]],
        [p[2][0] - dt * p[2][1], p[2][1], p[2][2] + qp],
    ];
    FilterState {
        theta: state.theta + dt * (u - state.theta_dot_b),
        theta_dot_b: state.theta_dot_b,
        l_p: state.l_p,
        p_cov: p_bar,
        roll: state.roll,
    }
    .checked("predict")
}

/// `v = z − H·x̄`; the bias never appears.
pub fn innovate<T: Real>(apriori: &FilterState<T>, z: &Measurement<T>) -> [T; 2] {
    [z.theta_acc - apriori.theta, z.l_p_meas - apriori.l_p]
}

/// `K = P̄·Hᵀ·S⁻¹` with `S = H·P̄·Hᵀ + R`.
pub fn gain<T: Real>(apriori_cov: &Mat3<T>, params: &FilterParams<T>) -> Result<Gain<T>, FilterError> {
    let p = apriori_cov;
    let s = [[p[0][0] + params.r_i, p[0][2]], [p[2][0], p[2][2] + params.r_p]];
    let s_inv = invert_2x2(&s)?;
    let mut k = [[T::zero(); 2]; 3];
    for (i, row) in k.iter_mut().enumerate() {
        let (a, b) = (p[i][0], p[i][2]);
        row[0] = a * s_inv[0][0] + b * s_inv[1][0];
        row[1] = a * s_inv[0][1] + b * s_inv[1][1];
    }
    Ok(k)
}

fn invert_2x2<T: Real>(s: &[[T; 2]; 2]) -> Result<[[T; 2]; 2], FilterError> {
    let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    let inv = [[s[1][1] / det, -s[0][1] / det], [-s[1][0] / det, s[0][0] / det]];
    // Frobenius-norm condition estimate.
    let fro = |m: &[[T; 2]; 2]| m.iter().flatten().fold(T::zero(), |a, v| a + *v * *v).sqrt();
    let cond = fro(s) * fro(&inv);
    if !(det > T::zero()) || !cond.is_finite() || cond > T::lit(MAX_INNOVATION_CONDITION) {
        return Err(FilterError::SingularInnovationCov {
            condition: if cond.is_finite() {
                cond.to_f64_lossy()
            } else {
                f64::INFINITY
            },
        });
    }
    Ok(inv)
}

/// Measurement update: `x = x̄ + K·v`, `P = (I − K·H)·P̄`, then `P ← (P + Pᵀ)/2`.
pub fn update<T: Real>(
    apriori: &FilterState<T>,
    k: &Gain<T>,
    v: [T; 2],
) -> Result<FilterState<T>, FilterError> {
    let p = &apriori.p_cov;
    let mut post = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            post[i][j] = p[i][j] - k[i][0] * p[0][j] - k[i][1] * p[2][j];
        }
    }
    let dx = |i: usize| k[i][0] * v[0] + k[i][1] * v[1];
    FilterState {
        theta: apriori.theta + dx(0),
        theta_dot_b: apriori.theta_dot_b + dx(1),
        l_p: apriori.l_p + dx(2),
        p_cov: covariance::symmetrize(&post),
        roll: apriori.roll,
    }
    .checked("update")
}

/// Update with the pitch measurement only, used while the potentiometer has
/// no ground contact. Returns the posterior and the gain column applied.
pub fn update_pitch_only<T: Real>(
    apriori: &FilterState<T>,
    theta_acc: T,
    params: &FilterParams<T>,
) -> Result<(FilterState<T>, [T; 3]), FilterError> {
    let p = &apriori.p_cov;
    let s = p[0][0] + params.r_i;
    if !(s > T::zero()) || !s.is_finite() {
        return Err(FilterError::SingularInnovationCov {
            condition: f64::INFINITY,
        });
    }
    let k = [p[0][0] / s, p[1][0] / s, p[2][0] / s];
    let v = theta_acc - apriori.theta;
    let mut post = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            post[i][j] = p[i][j] - k[i] * p[0][j];
        }
    }
    let state = FilterState {
        theta: apriori.theta + k[0] * v,
        theta_dot_b: apriori.theta_dot_b + k[1] * v,
        l_p: apriori.l_p + k[2] * v,
        p_cov: covariance::symmetrize(&post),
        roll: apriori.roll,
    }
    .checked("update")?;
    Ok((state, k))
}

/// Everything produced by one filter cycle, kept for debug traces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutput<T> {
    pub state: FilterState<T>,
    pub apriori: FilterState<T>,
    /// Gyro-derived pitch rate fed to the prediction, deg/s.
    pub u: T,
    pub measurement: Measurement<T>,
    pub innovation: [T; 2],
    pub gain: Gain<T>,
    /// True when the potentiometer row was skipped.
    pub pot_dropout: bool,
}

/// One full cycle: gyro → pitch-rate input, accelerometer → pitch, then
/// predict, innovate, gain and update.
///
/// The roll used to project the gyro is the smoothed accelerometer roll from
/// the previous cycle; it is refreshed from this frame afterwards.
pub fn step<T: Real>(
    state: &FilterState<T>,
    frame: &SensorFrame<T>,
    params: &FilterParams<T>,
) -> Result<StepOutput<T>, FilterError> {
    let attitude = EulerAngles::new(state.roll, state.theta, T::zero());
    let u = kinematics::body_rates_to_euler_rates(attitude, frame.gyro)?.theta_dot;
    let theta_acc = kinematics::accel_to_pitch(frame.accel)?;
    let roll_acc = kinematics::accel_to_roll(frame.accel)?;
    let measurement = Measurement {
        theta_acc,
        l_p_meas: frame.pot,
    };

    let apriori = predict(state, u, params)?;
    let (mut posterior, innovation, k) = if frame.dropout {
        let (post, col) = update_pitch_only(&apriori, theta_acc, params)?;
        let v = [theta_acc - apriori.theta, T::zero()];
        let k = [[col[0], T::zero()], [col[1], T::zero()], [col[2], T::zero()]];
        (post, v, k)
    } else {
        let v = innovate(&apriori, &measurement);
        let k = gain(&apriori.p_cov, params)?;
        (update(&apriori, &k, v)?, v, k)
    };
    posterior.roll = state.roll + params.roll_smoothing * (roll_acc - state.roll);

    debug_assert!(
        posterior
            .covariance_health()
            .is_healthy(T::lit(1e-9), T::lit(1e-9)),
        "covariance lost symmetry or semidefiniteness: {:?}",
        posterior.p_cov
    );

    Ok(StepOutput {
        state: posterior,
        apriori,
        u,
        measurement,
        innovation,
        gain: k,
        pot_dropout: frame.dropout,
    })
}

/// Stateful wrapper that seeds itself from the first frame.
#[derive(Debug, Clone)]
pub struct FusionFilter<T> {
    params: FilterParams<T>,
    p0: Mat3<T>,
    state: Option<FilterState<T>>,
}

impl<T: Real> FusionFilter<T> {
    pub fn new(params: FilterParams<T>) -> Result<Self, FilterError> {
        params.validate()?;
        Ok(FusionFilter {
            params,
            p0: FilterState::default_p0(),
            state: None,
        })
    }

    pub fn with_initial_covariance(mut self, p0: Mat3<T>) -> Self {
        self.p0 = p0;
        self
    }

    pub fn params(&self) -> &FilterParams<T> {
        &self.params
    }

    pub fn state(&self) -> Option<&FilterState<T>> {
        self.state.as_ref()
    }

    /// Feeds one frame. The first frame only initializes the estimate; the
    /// returned output then has zero innovation and gain.
    pub fn push(&mut self, frame: &SensorFrame<T>) -> Result<StepOutput<T>, FilterError> {
        match &self.state {
            Some(s) => {
                let out = step(s, frame, &self.params)?;
                self.state = Some(out.state);
                Ok(out)
            }
            None => {
                let s = FilterState::from_first_frame(frame, self.p0)?;
                self.state = Some(s);
                Ok(StepOutput {
                    state: s,
                    apriori: s,
                    u: T::zero(),
                    measurement: Measurement {
                        theta_acc: s.theta,
                        l_p_meas: s.l_p,
                    },
                    innovation: [T::zero(); 2],
                    gain: [[T::zero(); 2]; 3],
                    pot_dropout: frame.dropout,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::{diag, identity, trace};
    use approx::assert_abs_diff_eq;

    fn params() -> FilterParams<f64> {
        FilterParams::default()
    }

    #[test]
    fn predict_bias_cancels_input() {
        let s = FilterState::new(0.0, 1.0, 50.0, identity());
        let p = FilterParams { dt: 0.1, ..params() };
        let out = predict(&s, 1.0, &p).unwrap();
        assert_eq!(out.theta, 0.0);
        assert_eq!(out.l_p, 50.0);
    }

    #[test]
    fn predict_zero_input_keeps_mean() {
        let p0 = diag([0.7, 0.2, 1.5]);
        let s = FilterState::new(10.0, 0.0, 50.0, p0);
        let p = FilterParams { dt: 0.05, ..params() };
        let out = predict(&s, 0.0, &p).unwrap();
        assert_eq!(out.mean(), s.mean());
        // Diagonal P₀ → growth of diag(dt·(dt·P₁₁ + q_i), dt·q_bias, dt·q_p).
        assert_abs_diff_eq!(
            out.p_cov[0][0] - 0.7,
            0.05 * (0.05 * 0.2 + p.q_i),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(out.p_cov[1][1] - 0.2, 0.05 * p.q_bias, epsilon = 1e-15);
        assert_abs_diff_eq!(out.p_cov[2][2] - 1.5, 0.05 * p.q_p, epsilon = 1e-15);
        assert_abs_diff_eq!(out.p_cov[0][1], -0.05 * 0.2, epsilon = 1e-15);
    }

    #[test]
    fn predict_top_left_entry_identity_prior() {
        // 1 + dt·(dt·1 − 0 − 0 + q_i) with dt = 0.01, q_i = 0.001.
        let s = FilterState::new(0.0, 0.0, 0.0, identity());
        let p = FilterParams {
            dt: 0.01,
            q_i: 0.001,
            ..params()
        };
        let out = predict(&s, 0.0, &p).unwrap();
        assert_abs_diff_eq!(out.p_cov[0][0], 1.00011, epsilon = 1e-15);
    }

    #[test]
    fn predict_rejects_non_finite() {
        let s = FilterState::new(f64::INFINITY, 0.0, 0.0, identity());
        assert_eq!(
            predict(&s, 0.0, &params()),
            Err(FilterError::NonFiniteState { stage: "predict" })
        );
    }

    #[test]
    fn innovation_cases() {
        let a = FilterState::new(35.0, 0.2, 100.0, identity());
        assert_eq!(
            innovate(
                &a,
                &Measurement {
                    theta_acc: 35.0,
                    l_p_meas: 100.0
                }
            ),
            [0.0, 0.0]
        );
        let b = FilterState::new(30.0, 0.0, 100.0, identity());
        assert_eq!(
            innovate(
                &b,
                &Measurement {
                    theta_acc: 35.0,
                    l_p_meas: 110.0
                }
            ),
            [5.0, 10.0]
        );
        let c = FilterState::new(30.0, 123.0, 100.0, identity());
        assert_eq!(
            innovate(
                &c,
                &Measurement {
                    theta_acc: 35.0,
                    l_p_meas: 110.0
                }
            ),
            [5.0, 10.0]
        );
    }

    #[test]
    fn gain_limits() {
        let huge = FilterParams {
            r_i: 1e12,
            r_p: 1e12,
            ..params()
        };
        let k = gain(&identity(), &huge).unwrap();
        assert!(k.iter().flatten().all(|v| v.abs() < 2e-12));

        let tiny = FilterParams {
            r_i: 1e-12,
            r_p: 1e-12,
            ..params()
        };
        let k = gain(&identity(), &tiny).unwrap();
        let expect = [[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]];
        for i in 0..3 {
            for j in 0..2 {
                assert_abs_diff_eq!(k[i][j], expect[i][j], epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn gain_hand_evaluated() {
        let p = FilterParams {
            r_i: 2.0,
            r_p: 1.0,
            ..params()
        };
        let k = gain(&diag([2.0, 1.0, 3.0]), &p).unwrap();
        assert_eq!(k, [[0.5, 0.0], [0.0, 0.0], [0.0, 0.75]]);
    }

    #[test]
    fn gain_rejects_singular_s() {
        // Perfectly correlated pitch and length with negligible noise.
        let p_bar = [[1.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 1.0]];
        let p = FilterParams {
            r_i: 1e-14,
            r_p: 1e-14,
            ..params()
        };
        assert!(matches!(
            gain(&p_bar, &p),
            Err(FilterError::SingularInnovationCov { .. })
        ));
    }

    #[test]
    fn bias_row_needs_cross_terms() {
        let p_bar = [[2.0, 0.0, 0.4], [0.0, 5.0, 0.0], [0.4, 0.0, 3.0]];
        let k = gain(&p_bar, &params()).unwrap();
        assert_eq!(k[1], [0.0, 0.0]);
    }

    #[test]
    fn update_zero_gain_is_noop() {
        let a = FilterState::new(1.0, 2.0, 3.0, diag([2.0, 1.0, 3.0]));
        let out = update(&a, &[[0.0; 2]; 3], [4.0, 5.0]).unwrap();
        assert_eq!(out, a);
    }

    #[test]
    fn update_zero_innovation_shrinks_covariance_only() {
        let a = FilterState::new(1.0, 2.0, 3.0, diag([2.0, 1.0, 3.0]));
        let k = [[0.5, 0.0], [0.0, 0.0], [0.0, 0.75]];
        let out = update(&a, &k, [0.0, 0.0]).unwrap();
        assert_eq!(out.mean(), a.mean());
        assert!(trace(&out.p_cov) < trace(&a.p_cov));
    }

    #[test]
    fn update_hand_evaluated() {
        // (I − K·H)·P̄ with P̄ = diag(2, 1, 3), K = [[.5, 0], [0, 0], [0, .75]]:
        // diag(2 − 0.5·2, 1, 3 − 0.75·3) = diag(1, 1, 0.75).
        let a = FilterState::new(0.0, 0.0, 0.0, diag([2.0, 1.0, 3.0]));
        let k = [[0.5, 0.0], [0.0, 0.0], [0.0, 0.75]];
        let out = update(&a, &k, [1.0, 2.0]).unwrap();
        assert_eq!(out.mean(), [0.5, 0.0, 1.5]);
        assert_eq!(out.p_cov, diag([1.0, 1.0, 0.75]));
    }

    #[test]
    fn pitch_only_update_leaves_length_when_uncorrelated() {
        let a = FilterState::new(10.0, 0.0, 40.0, diag([1.0, 0.1, 1.0]));
        let (post, k) = update_pitch_only(&a, 12.0, &params()).unwrap();
        assert_eq!(k[2], 0.0);
        assert_eq!(post.l_p, 40.0);
        assert_abs_diff_eq!(post.theta, 10.0 + 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn params_validation() {
        assert!(params().validate().is_ok());
        assert!(FilterParams { dt: 0.0, ..params() }.validate().is_err());
        assert!(FilterParams { r_p: 0.0, ..params() }.validate().is_err());
        assert!(FilterParams {
            q_p: -1.0,
            ..params()
        }
        .validate()
        .is_err());
        let shared = params().with_shared_q(0.002);
        assert_eq!((shared.q_i, shared.q_bias), (0.002, 0.002));
    }
}
