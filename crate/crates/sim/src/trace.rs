//! CSV traces written row by row while a run progresses, plus readers for
//! replaying logged sensor data.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use harvester_core::{
    AccelVector, BodyRates, FilterError, FilterParams, FusionFilter, SensorFrame, StepOutput, TerrainProfile,
};

use crate::runner::{StepRecord, TraceSink};

pub const SENSOR_HEADER: [&str; 9] = ["t", "p", "q", "r", "ax", "ay", "az", "lp", "dropout"];
pub const ACTUATOR_HEADER: [&str; 7] = ["t", "stroke1", "stroke2", "cmd1", "cmd2", "sat1", "sat2"];
pub const FILTER_HEADER: [&str; 16] = [
    "k",
    "theta_bar",
    "theta",
    "theta_dot_b",
    "l_p",
    "v0",
    "v1",
    "k00",
    "k01",
    "k10",
    "k11",
    "k20",
    "k21",
    "p00",
    "p11",
    "p22",
];
pub const TRUTH_HEADER: [&str; 9] = [
    "t",
    "s",
    "body_pitch",
    "theta_true",
    "hp_true",
    "theta_est",
    "h_est",
    "degraded",
    "dropout",
];
pub const TERRAIN_HEADER: [&str; 2] = ["s_m", "elev_m"];

pub const SENSOR_FILE: &str = "sensor.csv";
pub const ACTUATOR_FILE: &str = "actuator.csv";
pub const FILTER_FILE: &str = "filter.csv";
pub const TRUTH_FILE: &str = "truth.csv";
pub const SUMMARY_FILE: &str = "summary.txt";

fn num(v: f64) -> String {
    format!("{v}")
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

type CsvOut = csv::Writer<BufWriter<File>>;

fn open(dir: &Path, name: &str, header: &[&str]) -> io::Result<CsvOut> {
    let file = File::create(dir.join(name))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(header).map_err(io::Error::from)?;
    Ok(w)
}

/// Writes sensor, actuator, filter and truth traces into one directory.
pub struct TraceWriter {
    dir: PathBuf,
    sensor: CsvOut,
    actuator: CsvOut,
    filter: CsvOut,
    truth: CsvOut,
}

impl TraceWriter {
    pub fn create(dir: &Path) -> io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(TraceWriter {
            dir: dir.to_path_buf(),
            sensor: open(dir, SENSOR_FILE, &SENSOR_HEADER)?,
            actuator: open(dir, ACTUATOR_FILE, &ACTUATOR_HEADER)?,
            filter: open(dir, FILTER_FILE, &FILTER_HEADER)?,
            truth: open(dir, TRUTH_FILE, &TRUTH_HEADER)?,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

pub fn sensor_row(f: &SensorFrame<f64>) -> [String; 9] {
    [
        num(f.t),
        num(f.gyro.p),
        num(f.gyro.q),
        num(f.gyro.r),
        num(f.accel.x_acc),
        num(f.accel.y_acc),
        num(f.accel.z_acc),
        num(f.pot),
        flag(f.dropout).to_string(),
    ]
}

pub fn filter_row(k: usize, o: &StepOutput<f64>) -> Vec<String> {
    let s = &o.state;
    let mut row = vec![
        k.to_string(),
        num(o.apriori.theta),
        num(s.theta),
        num(s.theta_dot_b),
        num(s.l_p),
        num(o.innovation[0]),
        num(o.innovation[1]),
    ];
    row.extend(o.gain.iter().flatten().map(|v| num(*v)));
    row.extend((0..3).map(|i| num(s.p_cov[i][i])));
    row
}

impl TraceSink for TraceWriter {
    fn record(&mut self, r: &StepRecord) -> io::Result<()> {
        self.sensor.write_record(sensor_row(&r.frame))?;
        self.actuator.write_record([
            num(r.t),
            num(r.stroke1),
            num(r.stroke2),
            num(r.cmd1),
            num(r.cmd2),
            flag(r.sat1.any()).to_string(),
            flag(r.sat2.any()).to_string(),
        ])?;
        self.filter.write_record(filter_row(r.k, &r.filter))?;
        self.truth.write_record([
            num(r.t),
            num(r.pose.s),
            num(r.pose.body_pitch),
            num(r.truth.theta_true),
            num(r.truth.hp_true),
            num(r.filter.state.theta),
            num(r.h_est),
            flag(r.degraded).to_string(),
            flag(r.frame.dropout).to_string(),
        ])?;
        Ok(())
    }

    fn finish(&mut self) -> io::Result<()> {
        self.sensor.flush()?;
        self.actuator.flush()?;
        self.filter.flush()?;
        self.truth.flush()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
}

/// Reads a sensor trace back into frames.
pub fn read_sensor_csv<R: io::Read>(input: R) -> Result<Vec<SensorFrame<f64>>, ReadError> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(SENSOR_HEADER.iter().copied()) {
        return Err(ReadError::Row {
            row: 0,
            message: format!("expected header {}", SENSOR_HEADER.join(",")),
        });
    }
    let mut frames = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let mut v = [0.0; 8];
        for (j, slot) in v.iter_mut().enumerate() {
            *slot = rec[j].parse().map_err(|_| ReadError::Row {
                row,
                message: format!("column `{}` is not a number", SENSOR_HEADER[j]),
            })?;
        }
        let dropout = match &rec[8] {
            "0" => false,
            "1" => true,
            other => {
                return Err(ReadError::Row {
                    row,
                    message: format!("dropout must be 0 or 1, got `{other}`"),
                })
            }
        };
        frames.push(SensorFrame {
            t: v[0],
            gyro: BodyRates::new(v[1], v[2], v[3]),
            accel: AccelVector::new(v[4], v[5], v[6]),
            pot: v[7],
            dropout,
        });
    }
    Ok(frames)
}

/// Runs the filter over logged frames.
pub fn replay_filter(
    frames: &[SensorFrame<f64>],
    params: FilterParams<f64>,
) -> Result<Vec<StepOutput<f64>>, FilterError> {
    let mut f = FusionFilter::new(params)?;
    frames.iter().map(|fr| f.push(fr)).collect()
}

pub fn write_terrain_csv<W: Write>(out: W, profile: &TerrainProfile<f64>) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TERRAIN_HEADER)?;
    for (s, h) in profile.knots() {
        w.write_record([num(*s), num(*h)])?;
    }
    w.flush()
}

pub fn write_summary(path: &Path, pairs: &[(&str, String)]) -> io::Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    for (k, v) in pairs {
        writeln!(f, "{k}={v}")?;
    }
    f.flush()
}

/// Parses `key=value` lines; blank lines are skipped.
pub fn parse_summary(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}
