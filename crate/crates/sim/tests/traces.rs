use std::fs;

use harvester_core::{CourseKind, FilterParams};
use harvester_sim::runner::run_scenario_with_sink;
use harvester_sim::trace::{
    read_sensor_csv, replay_filter, write_terrain_csv, TraceWriter, ACTUATOR_FILE, FILTER_FILE, SENSOR_FILE,
    TRUTH_FILE,
};
use harvester_sim::ScenarioConfig;

const GOLDEN: &str = include_str!("golden/headers.txt");

fn short(kind: CourseKind, secs: f64) -> ScenarioConfig {
    let mut c = ScenarioConfig::for_course(kind);
    c.duration_s = secs;
    c
}

#[test]
fn headers_match_golden_and_rows_are_rectangular() {
    let tmp = tempfile::tempdir().unwrap();
    let mut w = TraceWriter::create(tmp.path()).unwrap();
    let out = run_scenario_with_sink(&short(CourseKind::BumpCourse, 3.0), &mut w).unwrap();
    drop(w);
    let mut seen = String::new();
    for name in [SENSOR_FILE, ACTUATOR_FILE, FILTER_FILE, TRUTH_FILE] {
        let text = fs::read_to_string(tmp.path().join(name)).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        seen.push_str(&format!("{name}: {header}\n"));
        let cols = header.split(',').count();
        let mut rows = 0;
        for l in lines {
            assert_eq!(l.split(',').count(), cols, "{name}: {l}");
            rows += 1;
        }
        assert_eq!(rows, out.steps, "{name}");
    }
    assert_eq!(seen, GOLDEN);
}

#[test]
fn sensor_trace_replays_to_the_logged_estimates() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = short(CourseKind::SlopeCourse25m, 5.0);
    let mut w = TraceWriter::create(tmp.path()).unwrap();
    let out = run_scenario_with_sink(&cfg, &mut w).unwrap();
    drop(w);
    let frames = read_sensor_csv(fs::File::open(tmp.path().join(SENSOR_FILE)).unwrap()).unwrap();
    assert_eq!(frames.len(), out.steps);
    let replay = replay_filter(&frames, cfg.filter).unwrap();
    for (r, est) in replay.iter().zip(&out.theta_est) {
        assert_eq!(r.state.theta, *est);
    }
}

#[test]
fn sensor_reader_rejects_bad_input() {
    let bad_header = "t,p,q\n0,0,0\n";
    assert!(read_sensor_csv(bad_header.as_bytes()).is_err());
    let bad_flag = "t,p,q,r,ax,ay,az,lp,dropout\n0,0,0,0,0,5,8,50,2\n";
    assert!(read_sensor_csv(bad_flag.as_bytes()).is_err());
    let bad_num = "t,p,q,r,ax,ay,az,lp,dropout\n0,0,x,0,0,5,8,50,0\n";
    assert!(read_sensor_csv(bad_num.as_bytes()).is_err());
    let ok = "t,p,q,r,ax,ay,az,lp,dropout\n0,0,0,0,0,5.6,8.0,50,0\n0.01,0,0.1,0,0,5.6,8.0,50,1\n";
    let frames = read_sensor_csv(ok.as_bytes()).unwrap();
    assert_eq!(frames.len(), 2);
    assert!(frames[1].dropout);
    assert_eq!(replay_filter(&frames, FilterParams::default()).unwrap().len(), 2);
}

#[test]
fn terrain_csv_lists_knots() {
    let course =
        harvester_core::terrain::scenario_course(CourseKind::BumpCourse, &Default::default()).unwrap();
    let mut buf = Vec::new();
    write_terrain_csv(&mut buf, &course.profile).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("s_m,elev_m\n0,0\n5,0\n5.5,0.1\n6,0\n"));
}
