//! Scenario configuration as flat `section.key = value` text.
//!
//! Keys left out of a file keep the defaults for the chosen course, so
//! `scenario.course` is applied first wherever it appears.

use std::fmt;
use std::path::Path;

use harvester_core::evaluation::QualityRubric;
use harvester_core::{
    ControlTargets, ControllerConfig, CourseKind, CourseParams, FilterParams, PidGains, SensorNoiseConfig,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn field(key: &str, message: impl Into<String>) -> Self {
        ConfigError {
            line: None,
            key: Some(key.to_string()),
            message: message.into(),
        }
    }

    fn at_line(mut self, line: usize) -> Self {
        self.line = Some(line);
        self
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(l) = self.line {
            write!(f, "line {l}: ")?;
        }
        if let Some(k) = &self.key {
            write!(f, "`{k}`: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Stroke limits and maximum rate of one cylinder, mm and mm/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderLimits {
    pub min: f64,
    pub max: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub course: CourseKind,
    pub course_params: CourseParams<f64>,
    pub cross_slope_deg: f64,
    /// Std of random elevation offsets applied to interior terrain knots, m.
    pub terrain_jitter_m: f64,
    pub duration_s: f64,
    pub speed_mps: f64,
    pub seed: u64,
    pub control_enabled: bool,
    pub initial_pitch_offset_deg: f64,
    pub initial_height_offset_mm: f64,
    pub wheelbase_m: f64,
    pub cutter_lead_m: f64,
    pub targets: ControlTargets<f64>,
    pub filter: FilterParams<f64>,
    pub sensors: SensorNoiseConfig<f64>,
    pub controller: ControllerConfig<f64>,
    pub pitch_cylinder: CylinderLimits,
    pub slide_cylinder: CylinderLimits,
    pub slide_nominal_mm: f64,
    pub rubric: QualityRubric<f64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::for_course(CourseKind::SlopeCourse25m)
    }
}

impl ScenarioConfig {
    /// Defaults with a duration that covers the course: one round trip of
    /// the slope, repeated passes over the bump, one pass over the cabbages.
    /// The bump is driven at work speed, slow enough for the slide cylinder
    /// to follow it.
    pub fn for_course(course: CourseKind) -> Self {
        let (duration_s, speed_mps) = match course {
            CourseKind::Flat => (20.0, 0.5),
            CourseKind::SlopeCourse25m => (100.0, 0.5),
            CourseKind::BumpCourse => (500.0, 0.25),
            CourseKind::CabbageCourse => (25.0, 0.5),
        };
        ScenarioConfig {
            course,
            course_params: CourseParams::default(),
            cross_slope_deg: 0.0,
            terrain_jitter_m: 0.0,
            duration_s,
            speed_mps,
            seed: 1,
            control_enabled: true,
            initial_pitch_offset_deg: 0.0,
            initial_height_offset_mm: 0.0,
            wheelbase_m: 1.5,
            cutter_lead_m: 0.5,
            targets: ControlTargets::default(),
            filter: FilterParams::default(),
            sensors: SensorNoiseConfig::default(),
            controller: ControllerConfig::default(),
            pitch_cylinder: CylinderLimits {
                min: 0.0,
                max: 2000.0,
                rate: 100.0,
            },
            slide_cylinder: CylinderLimits {
                min: 0.0,
                max: 300.0,
                rate: 100.0,
            },
            slide_nominal_mm: 150.0,
            rubric: QualityRubric::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: Vec<(usize, &str, &str)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((k, v)) = content.split_once('=') else {
                return Err(ConfigError {
                    line: Some(line),
                    key: None,
                    message: format!("expected `key = value`, got `{content}`"),
                });
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(ConfigError {
                    line: Some(line),
                    key: None,
                    message: "empty key".into(),
                });
            }
            if let Some((first, ..)) = entries.iter().find(|e| e.1 == k) {
                return Err(
                    ConfigError::field(k, format!("duplicate key (first set on line {first})")).at_line(line),
                );
            }
            entries.push((line, k, v));
        }

        let mut cfg = match entries.iter().find(|e| e.1 == "scenario.course") {
            Some((line, k, v)) => {
                let kind = v
                    .parse::<CourseKind>()
                    .map_err(|e| ConfigError::field(k, e.to_string()).at_line(*line))?;
                Self::for_course(kind)
            }
            None => Self::default(),
        };
        for (line, k, v) in &entries {
            cfg.set(k, v).map_err(|e| e.at_line(*line))?;
        }
        cfg.validate().map_err(|mut e| {
            e.line = e
                .key
                .as_deref()
                .and_then(|k| entries.iter().find(|x| x.1 == k))
                .map(|x| x.0);
            e
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, LoadError> {
        let text = std::fs::read_to_string(path).map_err(LoadError::Io)?;
        Self::parse(&text).map_err(LoadError::Config)
    }

    /// Every key in canonical order, one blank line between sections.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let mut section = "";
        for key in KEYS {
            let sec = key.split('.').next().unwrap_or("");
            if !section.is_empty() && sec != section {
                out.push('\n');
            }
            section = sec;
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(&self.get(key).expect("listed key"));
            out.push('\n');
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let pos = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::field(key, format!("must be positive, got {v}")))
            }
        };
        let nonneg = |key: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::field(key, format!("must be non-negative, got {v}")))
            }
        };
        pos("scenario.duration_s", self.duration_s)?;
        nonneg("scenario.speed_mps", self.speed_mps)?;
        nonneg("scenario.terrain_jitter_m", self.terrain_jitter_m)?;
        pos("vehicle.wheelbase_m", self.wheelbase_m)?;
        nonneg("vehicle.cutter_lead_m", self.cutter_lead_m)?;
        pos("course.slope_length_m", self.course_params.slope_length_m)?;
        pos("course.bump_flank_m", self.course_params.bump_flank_m)?;
        pos("course.ridge_wavelength_m", self.course_params.ridge_wavelength_m)?;
        pos("course.cabbage_spacing_m", self.course_params.cabbage_spacing_m)?;
        if self.course_params.cabbage_count == 0 {
            return Err(ConfigError::field("course.cabbage_count", "must be at least 1"));
        }
        if !(self.cross_slope_deg.abs() < 45.0) {
            return Err(ConfigError::field(
                "course.cross_slope_deg",
                "must be within ±45°",
            ));
        }
        self.filter
            .validate()
            .map_err(|e| ConfigError::field("filter", e.to_string()))?;
        if !self.sensors.is_valid() {
            return Err(ConfigError::field(
                "sensors",
                "sigmas and quantum must be finite and non-negative",
            ));
        }
        for (name, g) in [
            ("pid_theta", self.controller.pitch_gains),
            ("pid_h", self.controller.height_gains),
        ] {
            nonneg(&format!("{name}.kp"), g.kp)?;
            nonneg(&format!("{name}.ki"), g.ki)?;
            nonneg(&format!("{name}.kd"), g.kd)?;
        }
        pos("actuator.command_limit", self.controller.command_limit)?;
        for (name, c) in [
            ("actuator.pitch", self.pitch_cylinder),
            ("actuator.slide", self.slide_cylinder),
        ] {
            if !(c.min.is_finite() && c.max.is_finite() && c.min < c.max) {
                return Err(ConfigError::field(
                    &format!("{name}_max"),
                    "stroke limits must satisfy min < max",
                ));
            }
            pos(&format!("{name}_rate"), c.rate)?;
        }
        let s = self.slide_cylinder;
        if !(self.slide_nominal_mm >= s.min && self.slide_nominal_mm <= s.max) {
            return Err(ConfigError::field(
                "actuator.slide_nominal",
                "must lie within the slide stroke limits",
            ));
        }
        pos("geometry.guide_offset_mm", self.controller.guide_offset)?;
        self.controller_with_limits()
            .check_targets(&self.targets)
            .map_err(|e| {
                ConfigError::field(
                    if e.to_string().contains("pitch") {
                        "targets.theta_c"
                    } else {
                        "targets.h_c"
                    },
                    e.to_string(),
                )
            })?;
        self.rubric
            .validate()
            .map_err(|e| ConfigError::field("rubric.height_mm", e.to_string()))?;
        Ok(())
    }

    /// Controller configuration with the pitch map's stroke range taken from
    /// the pitch cylinder limits.
    pub fn controller_with_limits(&self) -> ControllerConfig<f64> {
        let mut c = self.controller;
        c.pitch_map.stroke_min = self.pitch_cylinder.min;
        c.pitch_map.stroke_max = self.pitch_cylinder.max;
        c
    }

    /// True when the two configs describe the same scenario apart from the
    /// control flag.
    pub fn same_scenario(&self, other: &ScenarioConfig) -> bool {
        let mut a = self.clone();
        a.control_enabled = other.control_enabled;
        a == *other
    }
}

#[derive(Debug)]
pub enum LoadError {
    Io(std::io::Error),
    Config(ConfigError),
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadError::Io(e) => write!(f, "{e}"),
            LoadError::Config(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for LoadError {}

trait ConfigValue: Sized {
    fn parse_value(raw: &str) -> Result<Self, String>;
    fn format_value(&self) -> String;
}

impl ConfigValue for f64 {
    fn parse_value(raw: &str) -> Result<Self, String> {
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(format!("expected a finite number, got `{raw}`")),
        }
    }

    fn format_value(&self) -> String {
        // Display prints the shortest string that parses back to the same bits.
        format!("{self}")
    }
}

impl ConfigValue for u64 {
    fn parse_value(raw: &str) -> Result<Self, String> {
        raw.parse()
            .map_err(|_| format!("expected an unsigned integer, got `{raw}`"))
    }

    fn format_value(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for usize {
    fn parse_value(raw: &str) -> Result<Self, String> {
        raw.parse()
            .map_err(|_| format!("expected an unsigned integer, got `{raw}`"))
    }

    fn format_value(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for bool {
    fn parse_value(raw: &str) -> Result<Self, String> {
        match raw {
            "true" | "yes" | "on" | "1" => Ok(true),
            "false" | "no" | "off" | "0" => Ok(false),
            _ => Err(format!("expected true or false, got `{raw}`")),
        }
    }

    fn format_value(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for CourseKind {
    fn parse_value(raw: &str) -> Result<Self, String> {
        raw.parse()
            .map_err(|e: harvester_core::TerrainError| e.to_string())
    }

    fn format_value(&self) -> String {
        self.name().to_string()
    }
}

impl ConfigValue for [f64; 3] {
    fn parse_value(raw: &str) -> Result<Self, String> {
        let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(format!("expected three comma-separated numbers, got `{raw}`"));
        }
        let mut out = [0.0; 3];
        for (o, p) in out.iter_mut().zip(parts) {
            *o = f64::parse_value(p)?;
        }
        Ok(out)
    }

    fn format_value(&self) -> String {
        format!("{},{},{}", self[0], self[1], self[2])
    }
}

macro_rules! config_keys {
    ($( $key:literal => $($field:ident).+ ),* $(,)?) => {
        /// All recognised keys in serialization order.
        pub const KEYS: &[&str] = &[$($key),*];

        impl ScenarioConfig {
            pub fn get(&self, key: &str) -> Option<String> {
                match key {
                    $( $key => Some(self.$($field).+.format_value()), )*
                    _ => None,
                }
            }

            /// Sets one field from its text form.
            pub fn set(&mut self, key: &str, raw: &str) -> Result<(), ConfigError> {
                match key {
                    $( $key => {
                        self.$($field).+ = ConfigValue::parse_value(raw)
                            .map_err(|m| ConfigError::field(key, m))?;
                    } )*
                    _ => return Err(ConfigError::field(key, "unknown key")),
                }
                Ok(())
            }
        }
    };
}

config_keys! {
    "scenario.course" => course,
    "scenario.duration_s" => duration_s,
    "scenario.speed_mps" => speed_mps,
    "scenario.seed" => seed,
    "scenario.control_enabled" => control_enabled,
    "scenario.initial_pitch_offset_deg" => initial_pitch_offset_deg,
    "scenario.initial_height_offset_mm" => initial_height_offset_mm,
    "course.grade" => course_params.grade,
    "course.slope_length_m" => course_params.slope_length_m,
    "course.bump_height_m" => course_params.bump_height_m,
    "course.bump_flank_m" => course_params.bump_flank_m,
    "course.ridge_height_m" => course_params.ridge_height_m,
    "course.ridge_wave_m" => course_params.ridge_wave_m,
    "course.ridge_wavelength_m" => course_params.ridge_wavelength_m,
    "course.ridge_grade" => course_params.ridge_grade,
    "course.cabbage_spacing_m" => course_params.cabbage_spacing_m,
    "course.cabbage_count" => course_params.cabbage_count,
    "course.cross_slope_deg" => cross_slope_deg,
    "course.terrain_jitter_m" => terrain_jitter_m,
    "vehicle.wheelbase_m" => wheelbase_m,
    "vehicle.cutter_lead_m" => cutter_lead_m,
    "targets.theta_c" => targets.theta_c,
    "targets.h_c" => targets.h_c,
    "filter.dt" => filter.dt,
    "filter.q_i" => filter.q_i,
    "filter.q_bias" => filter.q_bias,
    "filter.q_p" => filter.q_p,
    "filter.r_i" => filter.r_i,
    "filter.r_p" => filter.r_p,
    "filter.roll_smoothing" => filter.roll_smoothing,
    "sensors.gyro_white_sigma" => sensors.gyro_white_sigma,
    "sensors.gyro_bias_walk_sigma" => sensors.gyro_bias_walk_sigma,
    "sensors.gyro_bias_init" => sensors.gyro_bias_init,
    "sensors.accel_white_sigma" => sensors.accel_white_sigma,
    "sensors.pot_white_sigma" => sensors.pot_white_sigma,
    "sensors.pot_quantum" => sensors.pot_quantum,
    "pid_theta.kp" => controller.pitch_gains.kp,
    "pid_theta.ki" => controller.pitch_gains.ki,
    "pid_theta.kd" => controller.pitch_gains.kd,
    "pid_h.kp" => controller.height_gains.kp,
    "pid_h.ki" => controller.height_gains.ki,
    "pid_h.kd" => controller.height_gains.kd,
    "actuator.command_limit" => controller.command_limit,
    "actuator.pitch_min" => pitch_cylinder.min,
    "actuator.pitch_max" => pitch_cylinder.max,
    "actuator.pitch_rate" => pitch_cylinder.rate,
    "actuator.slide_min" => slide_cylinder.min,
    "actuator.slide_max" => slide_cylinder.max,
    "actuator.slide_rate" => slide_cylinder.rate,
    "actuator.slide_nominal" => slide_nominal_mm,
    "geometry.pitch_slope" => controller.pitch_map.slope,
    "geometry.pitch_intercept" => controller.pitch_map.intercept,
    "geometry.pot_gain" => controller.pot_map.gain,
    "geometry.pot_offset" => controller.pot_map.offset,
    "geometry.pot_span_min" => controller.pot_map.span_min,
    "geometry.pot_span_max" => controller.pot_map.span_max,
    "geometry.guide_offset_mm" => controller.guide_offset,
    "rubric.height_mm" => rubric.height_mm,
    "rubric.angle_deg" => rubric.angle_deg,
}

/// Gains of the field controller, kept for comparison runs.
pub fn field_gains(cfg: &mut ScenarioConfig) {
    cfg.controller.pitch_gains = PidGains::field_pitch();
    cfg.controller.height_gains = PidGains::field_height();
}
