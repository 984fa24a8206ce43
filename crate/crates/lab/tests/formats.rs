use std::fs;

use tsc_core::network::boundary_demand;
use tsc_core::{generate_grid, run_episode, FixedTime, SimConfig};
use tsc_lab::formats::*;
use tsc_lab::DemandSettings;

#[test]
fn files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let net = generate_grid(2, 2, 300.0, 10.0);
    let flow = boundary_demand(&net, &DemandSettings::default().to_spec()).unwrap();
    write_roadnet(dir.path().join("roadnet.json"), &net).unwrap();
    write_flow(dir.path().join("flow.json"), &net, &flow).unwrap();
    let net2 = load_roadnet(dir.path().join("roadnet.json")).unwrap();
    let flow2 = load_flow(dir.path().join("flow.json"), &net2).unwrap();
    assert_eq!(net2, net);
    assert_eq!(flow2, flow);
}

#[test]
fn load_errors_are_classified() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");

    assert!(matches!(
        load_roadnet(dir.path().join("missing.json")),
        Err(FormatError::Io { .. })
    ));

    fs::write(&p, "{\"intersections\": [").unwrap();
    assert!(matches!(load_roadnet(&p), Err(FormatError::Parse { .. })));

    // a road pointing at an undeclared intersection
    fs::write(
        &p,
        r#"{"intersections":[{"id":"a","point":{"x":0,"y":0},"roads":["r"]}],
            "roads":[{"id":"r","startIntersection":"a","endIntersection":"b","length":10,"maxSpeed":10,"lanes":3}]}"#,
    )
    .unwrap();
    assert!(matches!(load_roadnet(&p), Err(FormatError::Validation { .. })));

    let net = generate_grid(1, 1, 300.0, 10.0);
    fs::write(
        &p,
        r#"[{"route":["road_1_1_0","road_0_1_0"],"startTime":0,"endTime":10,"interval":5}]"#,
    )
    .unwrap();
    let err = load_flow(&p, &net).unwrap_err();
    assert!(matches!(err, FormatError::Route { .. }), "{err}");
    assert!(err.to_string().contains("bad.json"));
}

#[test]
fn episode_logs() {
    let dir = tempfile::tempdir().unwrap();
    let net = generate_grid(1, 1, 300.0, 10.0);
    let flow = boundary_demand(&net, &DemandSettings::default().to_spec()).unwrap();
    let result = run_episode(
        &net,
        &flow,
        &FixedTime::default_plan(10).unwrap(),
        SimConfig::with_duration(300),
    )
    .unwrap();

    let log = EpisodeLog::new(&result);
    assert_eq!(log.vehicles.len(), result.spawned);
    let mean = log.vehicles.iter().map(|v| f64::from(v.travel_time)).sum::<f64>() / log.vehicles.len() as f64;
    assert_eq!(mean, log.average_travel_time);

    let path = dir.path().join("phase_log.csv");
    write_phase_log(&path, &net, &result).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,intersection,phase,transitioned"));
    assert_eq!(lines.next(), Some("0,intersection_1_1,1,true"));
    assert_eq!(lines.next(), Some("10,intersection_1_1,1,false"));
    assert_eq!(text.lines().count(), 1 + 30);
}
