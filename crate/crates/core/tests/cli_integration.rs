use std::fs;
use std::process::Command;

use dyncover::cli::{
    gen_instance, parse_trace, run_trace, GenParams, Header, Kind, Mode, OracleValue, RadiusDist,
    Record, RunParams, CSV_HEADER,
};
use dyncover::geometry::Shape;

fn header(mode: Mode, kind: Kind, dim: usize, bipartite: bool) -> Header {
    Header::new(mode, kind, dim, bipartite).unwrap()
}

fn quiet() -> RunParams {
    RunParams {
        timing: false,
        ..RunParams::default()
    }
}

#[test]
fn generated_trace_round_trips() {
    for (h, seed) in [
        (header(Mode::Vc, Kind::Disk, 2, false), 1),
        (header(Mode::Vc, Kind::Box, 3, true), 2),
        (header(Mode::Mcm, Kind::Rect, 2, true), 3),
    ] {
        let params = GenParams {
            churn: 0.3,
            ..GenParams::default()
        };
        let t = gen_instance(h, 200, seed, &params).unwrap();
        let text = t.to_string();
        assert_eq!(parse_trace(&text).unwrap(), t);
    }
}

#[test]
fn generation_is_seeded() {
    let h = header(Mode::Vc, Kind::Rect, 2, false);
    let p = GenParams::default();
    let a = gen_instance(h, 300, 7, &p).unwrap().to_string();
    let b = gen_instance(h, 300, 7, &p).unwrap().to_string();
    let c = gen_instance(h, 300, 8, &p).unwrap().to_string();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn zero_churn_only_inserts() {
    let t = gen_instance(
        header(Mode::Vc, Kind::Disk, 2, false),
        150,
        4,
        &GenParams::default(),
    )
    .unwrap();
    assert_eq!(t.records.len(), 150);
    assert!(t.records.iter().all(|r| matches!(r, Record::Insert(_))));
}

#[test]
fn power_law_radii_respect_spread() {
    let params = GenParams {
        radius: "power:0.25:40:2.5".parse().unwrap(),
        ..GenParams::default()
    };
    let t = gen_instance(header(Mode::Vc, Kind::Disk, 2, false), 2000, 5, &params).unwrap();
    let radii: Vec<f64> = t
        .records
        .iter()
        .map(|r| match r {
            Record::Insert(o) => match o.shape {
                Shape::Disk { radius, .. } => radius,
                _ => unreachable!(),
            },
            _ => unreachable!(),
        })
        .collect();
    let lo = radii.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = radii.iter().copied().fold(0.0, f64::max);
    assert!(lo >= 0.25 && hi / lo <= 40.0, "{lo} {hi}");
    assert!(matches!(params.radius, RadiusDist::PowerLaw { .. }));
}

#[test]
fn empty_trace_gives_header_only_csv() {
    let t = parse_trace("#mode=vc kind=disk dim=2 bipartite=0\n").unwrap();
    let report = run_trace(&t, &quiet()).unwrap();
    assert_eq!(report.to_csv(), format!("{CSV_HEADER}\n"));
    assert!(report.summary.all_valid);
}

#[test]
fn single_edge_is_covered_after_rebuild() {
    let t =
        parse_trace("#mode=vc kind=disk dim=2 bipartite=0\nI 0 - 0 0 1\nI 1 - 1 0 1\nQ\n").unwrap();
    let report = run_trace(&t, &quiet()).unwrap();
    let last = report.rows.last().unwrap();
    assert_eq!(last.size, 1);
    assert_eq!(last.oracle, OracleValue::Exact(1));
    assert!(report.rows[1].rebuild);
}

#[test]
fn dynamic_cover_stays_within_bound() {
    let params = GenParams {
        range: 20.0,
        churn: 0.5,
        max_live: Some(100),
        ..GenParams::default()
    };
    let t = gen_instance(header(Mode::Vc, Kind::Disk, 2, false), 1200, 6, &params).unwrap();
    let run = RunParams {
        eps: 0.3,
        oracle_every: 100,
        ..quiet()
    };
    let report = run_trace(&t, &run).unwrap();
    let s = &report.summary;
    assert!(s.all_valid);
    assert!(s.samples > 0 && s.exhausted == 0);
    assert!(s.max_ratio <= 1.0 + 3.0 * 0.3, "{}", s.max_ratio);
}

#[test]
fn matching_modes_replay() {
    let params = GenParams {
        range: 12.0,
        churn: 0.4,
        max_live: Some(40),
        ..GenParams::default()
    };
    for mode in [Mode::Mcm, Mode::Mcmg] {
        let h = header(mode, Kind::Disk, 2, mode == Mode::Mcm);
        let t = gen_instance(h, 200, 9, &params).unwrap();
        let report = run_trace(&t, &quiet()).unwrap();
        assert!(report.summary.all_valid);
        assert!(report.summary.max_ratio <= 1.0 / (1.0 - 3.0 * 0.25));
    }
}

#[test]
fn replay_is_deterministic_without_timing() {
    let params = GenParams {
        churn: 0.4,
        max_live: Some(80),
        range: 15.0,
        ..GenParams::default()
    };
    let t = gen_instance(header(Mode::Vc, Kind::Box, 3, false), 600, 10, &params).unwrap();
    let a = run_trace(&t, &quiet()).unwrap().to_csv();
    let b = run_trace(&t, &quiet()).unwrap().to_csv();
    assert_eq!(a, b);
}

#[test]
fn golden_csv() {
    let trace = parse_trace(include_str!("data/golden_small.trace")).unwrap();
    let run = RunParams {
        oracle_every: 1,
        ..quiet()
    };
    let report = run_trace(&trace, &run).unwrap();
    assert_eq!(report.to_csv(), include_str!("data/golden_small.csv"));
}

#[test]
fn binary_round_trip_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.trace");
    let csv = dir.path().join("t.csv");
    let bin = env!("CARGO_BIN_EXE_dyncover");
    let gen = Command::new(bin)
        .args(["gen", "--kind", "rect", "--n", "120", "--churn", "0.3"])
        .args(["--seed", "3", "--out"])
        .arg(&trace)
        .status()
        .unwrap();
    assert!(gen.success());
    let run = Command::new(bin)
        .arg("run")
        .arg(&trace)
        .args(["--no-timing", "--out"])
        .arg(&csv)
        .output()
        .unwrap();
    assert_eq!(run.status.code(), Some(0));
    let text = fs::read_to_string(&csv).unwrap();
    let t = parse_trace(&fs::read_to_string(&trace).unwrap()).unwrap();
    assert_eq!(text.lines().count(), t.records.len() + 1);
    assert_eq!(text, run_trace(&t, &quiet()).unwrap().to_csv());

    let bad = dir.path().join("bad.trace");
    fs::write(&bad, "#mode=vc kind=disk dim=2 bipartite=0\nD 3\n").unwrap();
    let out = Command::new(bin).arg("run").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let clash = Command::new(bin)
        .arg("run")
        .arg(&trace)
        .args(["--kind", "disk"])
        .output()
        .unwrap();
    assert_eq!(clash.status.code(), Some(2));
}
