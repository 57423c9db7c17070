//! Ground profiles, the two-contact platform pose and the cutter's true
//! pitch and blade height.
//!
//! Profiles are in metres; cutter quantities in millimetres and degrees.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::actuation::PitchStrokeMap;
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TerrainError {
    #[error("terrain profile has no knots")]
    EmptyProfile,
    #[error("terrain knots must have strictly increasing, finite arc positions (knot {0})")]
    BadKnot(usize),
    #[error("unknown course kind `{0}`")]
    UnknownKind(String),
    #[error("wheelbase must be positive")]
    BadWheelbase,
    #[error("{which} stroke {stroke} mm outside [{min}, {max}]")]
    OutOfEnvelope {
        which: &'static str,
        stroke: f64,
        min: f64,
        max: f64,
    },
}

/// Piecewise-linear elevation over arc distance, clamped beyond the ends.
#[derive(Debug, Clone, PartialEq)]
pub struct TerrainProfile<T> {
    knots: Vec<(T, T)>,
    /// Lateral slope under the vehicle, deg; enters only as roll.
    pub cross_slope_deg: T,
}

impl<T: Real> TerrainProfile<T> {
    pub fn new(knots: Vec<(T, T)>) -> Result<Self, TerrainError> {
        if knots.is_empty() {
            return Err(TerrainError::EmptyProfile);
        }
        for (i, (s, h)) in knots.iter().enumerate() {
            if !s.is_finite() || !h.is_finite() || (i > 0 && !(*s > knots[i - 1].0)) {
                return Err(TerrainError::BadKnot(i));
            }
        }
        Ok(TerrainProfile {
            knots,
            cross_slope_deg: T::zero(),
        })
    }

    pub fn knots(&self) -> &[(T, T)] {
        &self.knots
    }

    pub fn extent(&self) -> (T, T) {
        (self.knots[0].0, self.knots[self.knots.len() - 1].0)
    }

    /// Elevation at arc position `s` (m).
    pub fn height(&self, s: T) -> T {
        let k = &self.knots;
        if s <= k[0].0 {
            return k[0].1;
        }
        let last = k[k.len() - 1];
        if s >= last.0 {
            return last.1;
        }
        // First knot strictly right of s; s lies inside (k[i-1].0, k[i].0].
        let i = k.partition_point(|(ks, _)| *ks < s);
        let (s0, h0) = k[i - 1];
        let (s1, h1) = k[i];
        if s == s1 {
            return h1;
        }
        h0 + (h1 - h0) * (s - s0) / (s1 - s0)
    }

    /// Adds independent normal noise (std `sigma_m`) to every interior knot.
    pub fn jittered<R: Rng + ?Sized>(mut self, sigma_m: T, rng: &mut R) -> Self {
        let n = self.knots.len();
        for (i, knot) in self.knots.iter_mut().enumerate() {
            let z = T::lit(rng.sample::<f64, _>(StandardNormal));
            if i > 0 && i + 1 < n {
                knot.1 += sigma_m * z;
            }
        }
        self
    }
}

pub fn terrain_height<T: Real>(profile: &TerrainProfile<T>, s: T) -> T {
    profile.height(s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlatformPose<T> {
    /// Front-contact arc position, m.
    pub s: T,
    pub body_pitch: T,
    pub body_roll: T,
    /// Mean of the two contact elevations, m.
    pub body_height: T,
    /// Height of the body line above the ground directly under the cutter,
    /// m. Zero on any plane.
    pub cutter_clearance: T,
}

/// Pose from a front contact at `s` and a rear contact one wheelbase behind.
pub fn platform_pose<T: Real>(
    profile: &TerrainProfile<T>,
    s: T,
    wheelbase: T,
) -> Result<PlatformPose<T>, TerrainError> {
    platform_pose_with_lead(profile, s, wheelbase, T::zero())
}

/// As [`platform_pose`], also resolving the ground under a cutter mounted
/// `cutter_lead` metres ahead of the front contact.
pub fn platform_pose_with_lead<T: Real>(
    profile: &TerrainProfile<T>,
    s: T,
    wheelbase: T,
    cutter_lead: T,
) -> Result<PlatformPose<T>, TerrainError> {
    if !(wheelbase > T::zero()) {
        return Err(TerrainError::BadWheelbase);
    }
    let front = profile.height(s);
    let rear = profile.height(s - wheelbase);
    let grade = (front - rear) / wheelbase;
    let line_at_cutter = front + grade * cutter_lead;
    Ok(PlatformPose {
        s,
        body_pitch: grade.atan().to_degrees(),
        body_roll: profile.cross_slope_deg,
        body_height: (front + rear) * T::lit(0.5),
        cutter_clearance: line_at_cutter - profile.height(s + cutter_lead),
    })
}

/// Mechanical layout linking cylinder strokes to the cutter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutterGeometry<T> {
    pub pitch_map: PitchStrokeMap<T>,
    /// Slide cylinder stroke limits, mm.
    pub slide_min: T,
    pub slide_max: T,
    /// Slide stroke at which the blade sits at `reference_height` on level
    /// ground.
    pub slide_nominal: T,
    /// Blade height change per mm of slide stroke.
    pub slide_gain: T,
    pub reference_height: T,
}

impl<T: Real> CutterGeometry<T> {
    /// Geometry whose nominal slide stroke puts the blade at `h_c` on level
    /// ground.
    pub fn anchored_at(h_c: T) -> Self {
        CutterGeometry {
            pitch_map: PitchStrokeMap::default(),
            slide_min: T::zero(),
            slide_max: T::lit(300.0),
            slide_nominal: T::lit(150.0),
            slide_gain: T::one(),
            reference_height: h_c,
        }
    }
}

/// True cutter pitch (deg, relative to the ground plane of the body) and
/// blade height above the ground (mm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutterTruth<T> {
    pub theta_true: T,
    pub hp_true: T,
}

/// The pitch cylinder articulates the cutter against the body, so body pitch
/// subtracts from the stroke-implied angle; blade height follows the slide
/// stroke plus whatever clearance the terrain adds under the cutter.
pub fn cutter_truth<T: Real>(
    pose: &PlatformPose<T>,
    stroke1: T,
    stroke2: T,
    geom: &CutterGeometry<T>,
) -> Result<CutterTruth<T>, TerrainError> {
    let pm = &geom.pitch_map;
    check_stroke("pitch", stroke1, pm.stroke_min, pm.stroke_max)?;
    check_stroke("slide", stroke2, geom.slide_min, geom.slide_max)?;
    Ok(CutterTruth {
        theta_true: pm.stroke_to_pitch(stroke1) - pose.body_pitch,
        hp_true: geom.reference_height
            + geom.slide_gain * (stroke2 - geom.slide_nominal)
            + pose.cutter_clearance * T::lit(1000.0),
    })
}

fn check_stroke<T: Real>(which: &'static str, v: T, lo: T, hi: T) -> Result<(), TerrainError> {
    if v >= lo && v <= hi {
        Ok(())
    } else {
        Err(TerrainError::OutOfEnvelope {
            which,
            stroke: v.to_f64_lossy(),
            min: lo.to_f64_lossy(),
            max: hi.to_f64_lossy(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CourseKind {
    Flat,
    SlopeCourse25m,
    BumpCourse,
    CabbageCourse,
}

impl CourseKind {
    pub const ALL: [CourseKind; 4] = [
        CourseKind::Flat,
        CourseKind::SlopeCourse25m,
        CourseKind::BumpCourse,
        CourseKind::CabbageCourse,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CourseKind::Flat => "flat",
            CourseKind::SlopeCourse25m => "slope_course_25m",
            CourseKind::BumpCourse => "bump_course",
            CourseKind::CabbageCourse => "cabbage_course",
        }
    }
}

impl fmt::Display for CourseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CourseKind {
    type Err = TerrainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CourseKind::ALL
            .iter()
            .find(|k| k.name() == s)
            .copied()
            .ok_or_else(|| TerrainError::UnknownKind(s.to_string()))
    }
}

/// Shape parameters for the canonical courses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CourseParams<T> {
    /// Rise over run of the slope course.
    pub grade: T,
    pub slope_length_m: T,
    pub bump_height_m: T,
    /// Horizontal length of each bump flank, m.
    pub bump_flank_m: T,
    pub ridge_height_m: T,
    /// Amplitude and wavelength of the undulation along the ridge top, m.
    pub ridge_wave_m: T,
    pub ridge_wavelength_m: T,
    /// Rise over run of the ridge top under the cabbages.
    pub ridge_grade: T,
    pub cabbage_spacing_m: T,
    pub cabbage_count: usize,
}

impl<T: Real> Default for CourseParams<T> {
    fn default() -> Self {
        CourseParams {
            grade: T::lit(0.10),
            slope_length_m: T::lit(25.0),
            bump_height_m: T::lit(0.1),
            bump_flank_m: T::lit(0.5),
            ridge_height_m: T::lit(0.1),
            ridge_wave_m: T::lit(0.03),
            ridge_wavelength_m: T::lit(3.0),
            ridge_grade: T::lit(0.05),
            cabbage_spacing_m: T::lit(0.5),
            cabbage_count: 15,
        }
    }
}

/// A profile plus the stretch the vehicle drives back and forth over and
/// the cabbage positions along it.
#[derive(Debug, Clone, PartialEq)]
pub struct Course<T> {
    pub kind: CourseKind,
    pub profile: TerrainProfile<T>,
    /// Front-contact arc positions of the two turnaround points.
    pub path: (T, T),
    /// Arc positions of cabbage stems, m.
    pub cabbages: Vec<T>,
}

impl<T: Real> Course<T> {
    /// Front-contact position at time `t` while shuttling over `path` at
    /// `speed` (m/s), reversing at each end.
    pub fn position(&self, t: T, speed: T) -> T {
        let (a, b) = self.path;
        let len = b - a;
        if !(speed > T::zero()) || !(len > T::zero()) {
            return a;
        }
        let period = T::lit(2.0) * len;
        let d = (speed * t) % period;
        if d <= len {
            a + d
        } else {
            b - (d - len)
        }
    }

    /// Time to drive from one end of the path to the other and back.
    pub fn round_trip_time(&self, speed: T) -> T {
        T::lit(2.0) * (self.path.1 - self.path.0) / speed
    }
}

pub fn scenario_course<T: Real>(kind: CourseKind, p: &CourseParams<T>) -> Result<Course<T>, TerrainError> {
    let z = T::zero();
    let l = |v: f64| T::lit(v);
    let course = match kind {
        CourseKind::Flat => Course {
            kind,
            profile: TerrainProfile::new(vec![(z, z), (l(30.0), z)])?,
            path: (l(2.0), l(12.0)),
            cabbages: Vec::new(),
        },
        CourseKind::SlopeCourse25m => Course {
            kind,
            profile: TerrainProfile::new(vec![(z, z), (p.slope_length_m, p.grade * p.slope_length_m)])?,
            path: (z, p.slope_length_m),
            cabbages: Vec::new(),
        },
        CourseKind::BumpCourse => {
            let start = l(5.0);
            let f = p.bump_flank_m;
            Course {
                kind,
                profile: TerrainProfile::new(vec![
                    (z, z),
                    (start, z),
                    (start + f, p.bump_height_m),
                    (start + f + f, z),
                    (l(12.0), z),
                ])?,
                path: (l(2.0), l(9.0)),
                cabbages: Vec::new(),
            }
        }
        CourseKind::CabbageCourse => cabbage_course(p)?,
    };
    Ok(course)
}

/// The vehicle climbs onto a ridge bed, then follows an undulating, gently
/// inclined ridge top past the cabbages. Profile knots are every 0.1 m.
fn cabbage_course<T: Real>(p: &CourseParams<T>) -> Result<Course<T>, TerrainError> {
    let l = |v: f64| T::lit(v);
    let z = T::zero();
    let n = p.cabbage_count.max(1);
    let first = l(4.0);
    let last = first + p.cabbage_spacing_m * T::from_usize(n - 1).unwrap_or(z);
    let bed_start = l(2.5);
    let end = last + l(4.0);
    let mut knots = vec![(z, z), (l(2.0), z)];
    let step = l(0.1);
    let mut s = bed_start;
    while s <= end {
        let x = s - bed_start;
        let wave = p.ridge_wave_m * (T::TAU() * x / p.ridge_wavelength_m).sin();
        knots.push((s, p.ridge_height_m + wave + p.ridge_grade * x));
        s += step;
    }
    let cabbages = (0..n)
        .map(|i| first + p.cabbage_spacing_m * T::from_usize(i).unwrap_or(z))
        .collect();
    Ok(Course {
        kind: CourseKind::CabbageCourse,
        profile: TerrainProfile::new(knots)?,
        path: (l(1.0), last + l(1.5)),
        cabbages,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn ramp() -> TerrainProfile<f64> {
        TerrainProfile::new(vec![(0.0, 0.0), (10.0, 1.0)]).unwrap()
    }

    #[test]
    fn profile_validation() {
        assert_eq!(
            TerrainProfile::<f64>::new(vec![]),
            Err(TerrainError::EmptyProfile)
        );
        assert_eq!(
            TerrainProfile::new(vec![(0.0, 0.0), (0.0, 1.0)]),
            Err(TerrainError::BadKnot(1))
        );
        assert!(TerrainProfile::new(vec![(0.0, f64::NAN)]).is_err());
    }

    #[test]
    fn heights() {
        let flat = scenario_course::<f64>(CourseKind::Flat, &CourseParams::default()).unwrap();
        for s in [-3.0, 0.0, 4.2, 100.0] {
            assert_eq!(terrain_height(&flat.profile, s), 0.0);
        }
        assert_eq!(flat.profile.knots().len(), 2);
        assert_abs_diff_eq!(terrain_height(&ramp(), 5.0), 0.5, epsilon = 1e-15);
        assert_eq!(terrain_height(&ramp(), -1.0), 0.0);
        assert_eq!(terrain_height(&ramp(), 11.0), 1.0);
        let bump = scenario_course::<f64>(CourseKind::BumpCourse, &CourseParams::default()).unwrap();
        assert_abs_diff_eq!(terrain_height(&bump.profile, 5.5), 0.1, epsilon = 1e-15);
    }

    #[test]
    fn single_knot_profile_is_constant() {
        let p = TerrainProfile::new(vec![(3.0, 0.7)]).unwrap();
        assert_eq!(p.height(-10.0), 0.7);
        assert_eq!(p.height(10.0), 0.7);
    }

    #[test]
    fn flat_pose() {
        let flat = scenario_course::<f64>(CourseKind::Flat, &CourseParams::default()).unwrap();
        let pose = platform_pose(&flat.profile, 5.0, 1.5).unwrap();
        assert_eq!(pose.body_pitch, 0.0);
        assert_eq!(pose.cutter_clearance, 0.0);
        assert_eq!(
            platform_pose(&flat.profile, 5.0, 0.0),
            Err(TerrainError::BadWheelbase)
        );
    }

    #[test]
    fn constant_grade_pose() {
        let p = TerrainProfile::new(vec![(0.0, 0.0), (100.0, 10.0)]).unwrap();
        for wb in [0.5, 1.5, 3.0] {
            for s in [10.0, 37.0, 80.0] {
                let pose = platform_pose_with_lead(&p, s, wb, 0.5).unwrap();
                assert_abs_diff_eq!(pose.body_pitch, 0.1f64.atan().to_degrees(), epsilon = 1e-12);
                assert_abs_diff_eq!(pose.body_pitch, 5.710593, epsilon = 1e-6);
                assert_abs_diff_eq!(pose.cutter_clearance, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn bump_pitch_peak() {
        let bump = scenario_course::<f64>(CourseKind::BumpCourse, &CourseParams::default()).unwrap();
        let peak = (0..4000)
            .map(|i| {
                platform_pose(&bump.profile, 3.0 + i as f64 * 0.001, 1.5)
                    .unwrap()
                    .body_pitch
            })
            .fold(0.0f64, f64::max);
        assert_abs_diff_eq!(peak, (0.1f64 / 1.5).atan().to_degrees(), epsilon = 1e-9);
        assert_abs_diff_eq!(peak, 3.81, epsilon = 0.005);
    }

    #[test]
    fn cutter_truth_cases() {
        let geom = CutterGeometry::anchored_at(250.0);
        let level = PlatformPose {
            s: 0.0,
            body_pitch: 0.0,
            body_roll: 0.0,
            body_height: 0.0,
            cutter_clearance: 0.0,
        };
        let s35 = geom.pitch_map.pitch_to_stroke(35.0).value;
        let t = cutter_truth(&level, s35, 150.0, &geom).unwrap();
        assert_abs_diff_eq!(t.theta_true, 35.0, epsilon = 1e-12);
        assert_eq!(t.hp_true, 250.0);
        let tilted = PlatformPose {
            body_pitch: 5.0,
            ..level
        };
        assert_abs_diff_eq!(
            cutter_truth(&tilted, s35, 150.0, &geom).unwrap().theta_true,
            30.0,
            epsilon = 1e-12
        );
        let raised = PlatformPose {
            cutter_clearance: 0.04,
            ..level
        };
        assert_abs_diff_eq!(
            cutter_truth(&raised, s35, 140.0, &geom).unwrap().hp_true,
            280.0,
            epsilon = 1e-9
        );
        assert!(matches!(
            cutter_truth(&level, 2500.0, 150.0, &geom),
            Err(TerrainError::OutOfEnvelope { which: "pitch", .. })
        ));
        assert!(cutter_truth(&level, s35, -1.0, &geom).is_err());
    }

    #[test]
    fn perfect_compensation_possible() {
        let geom = CutterGeometry::anchored_at(250.0);
        for bp in [-8.0, -2.5, 0.0, 3.81, 5.71] {
            let pose = PlatformPose {
                s: 0.0,
                body_pitch: bp,
                body_roll: 0.0,
                body_height: 0.0,
                cutter_clearance: 0.0,
            };
            let stroke = geom.pitch_map.pitch_to_stroke(35.0 + bp).value;
            assert_abs_diff_eq!(
                cutter_truth(&pose, stroke, 150.0, &geom).unwrap().theta_true,
                35.0,
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn course_kinds() {
        for k in CourseKind::ALL {
            assert_eq!(k.name().parse::<CourseKind>().unwrap(), k);
        }
        assert_eq!(
            "mountain".parse::<CourseKind>(),
            Err(TerrainError::UnknownKind("mountain".into()))
        );

        let p = CourseParams::default();
        let slope = scenario_course::<f64>(CourseKind::SlopeCourse25m, &p).unwrap();
        let max = slope.profile.knots().iter().map(|k| k.1).fold(f64::MIN, f64::max);
        assert_abs_diff_eq!(max, 2.5, epsilon = 1e-12);
        assert_eq!(slope.path, (0.0, 25.0));

        let bump = scenario_course::<f64>(CourseKind::BumpCourse, &p).unwrap();
        let k = bump.profile.knots();
        let peaks = (1..k.len() - 1)
            .filter(|&i| k[i].1 > k[i - 1].1 && k[i].1 > k[i + 1].1)
            .count();
        assert_eq!(peaks, 1);
        assert_eq!(k.iter().map(|k| k.1).fold(f64::MIN, f64::max), 0.1);

        let cab = scenario_course::<f64>(CourseKind::CabbageCourse, &p).unwrap();
        assert_eq!(cab.cabbages.len(), 15);
        for w in cab.cabbages.windows(2) {
            assert_abs_diff_eq!(w[1] - w[0], 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn shuttle_position() {
        let slope = scenario_course::<f64>(CourseKind::SlopeCourse25m, &CourseParams::default()).unwrap();
        assert_eq!(slope.position(0.0, 0.5), 0.0);
        assert_abs_diff_eq!(slope.position(50.0, 0.5), 25.0, epsilon = 1e-12);
        assert_abs_diff_eq!(slope.position(60.0, 0.5), 20.0, epsilon = 1e-12);
        assert_abs_diff_eq!(slope.position(100.0, 0.5), 0.0, epsilon = 1e-12);
        assert_eq!(slope.position(40.0, 0.0), 0.0);
        assert_eq!(slope.round_trip_time(0.5), 100.0);
    }

    proptest! {
        #[test]
        fn continuous_at_knots(hs in proptest::collection::vec(-2.0..2.0f64, 2..10), gaps in proptest::collection::vec(0.1..3.0f64, 10)) {
            let mut s = 0.0;
            let knots: Vec<(f64, f64)> = hs.iter().enumerate().map(|(i, h)| { if i > 0 { s += gaps[i]; } (s, *h) }).collect();
            let p = TerrainProfile::new(knots.clone()).unwrap();
            for (ks, kh) in knots {
                for eps in [1e-9, 1e-8] {
                    prop_assert!((p.height(ks - eps) - kh).abs() < 1e-6);
                    prop_assert!((p.height(ks + eps) - kh).abs() < 1e-6);
                }
                prop_assert_eq!(p.height(ks), kh);
            }
        }
    }
}
