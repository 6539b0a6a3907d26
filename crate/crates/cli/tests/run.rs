use std::fs;
use std::path::{Path, PathBuf};

use resmarg::privacy::calibrate_rho;
use resmarg_cli::run::{read_metrics, read_report, METRICS_FILE, REPORT_FILE};
use resmarg_cli::{run, MechanismKind, Privacy, RunConfig, WorkloadSpec};

fn toy_csv(dir: &Path) -> PathBuf {
    let mut text = String::from("color,size,shape,mood\n");
    let colors = ["red", "green", "blue"];
    let sizes = ["s", "m", "l", "xl"];
    let shapes = ["round", "square"];
    let moods = ["calm", "busy", "odd"];
    for i in 0..300usize {
        let c = i % 3;
        let s = (i / 3 + c) % 4;
        let h = (i * 7 / 5) % 2;
        let m = (c + h + i / 11) % 3;
        text.push_str(&format!("{},{},{},{}\n", colors[c], sizes[s], shapes[h], moods[m]));
    }
    let p = dir.join("toy.csv");
    fs::write(&p, text).unwrap();
    p
}

fn config(dir: &Path, mech: MechanismKind, privacy: Privacy, out: &str) -> RunConfig {
    let mut c = RunConfig::new(mech, privacy, WorkloadSpec::AllKWay(2), toy_csv(dir), dir.join(out));
    c.seed = 1;
    c
}

#[test]
fn batch_planner_report_stays_within_budget() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path(), MechanismKind::BatchPlanner, Privacy::Rho(0.5), "out");
    run(&c).unwrap();
    let report = read_report(&c.output.join(REPORT_FILE)).unwrap();
    let t = &report.trials[0];
    let spent: f64 = t.report.ledger.iter().map(|e| e.cost).sum();
    assert!(spent <= 0.5 + 1e-12);
    assert_eq!(t.estimates.len(), 6);
    assert!(c.output.join("domain.json").exists() && c.output.join("values.json").exists());
}

#[test]
fn epsilon_delta_records_derived_rho() {
    let dir = tempfile::tempdir().unwrap();
    let privacy = Privacy::Approx {
        epsilon: 1.0,
        delta: 1e-9,
    };
    let c = config(dir.path(), MechanismKind::AimGrem, privacy, "out");
    let report = run(&c).unwrap();
    let expected = calibrate_rho(1.0, 1e-9).unwrap();
    assert_eq!(report.rho, expected);
    assert_eq!(report.trials[0].report.rho, expected);
    let rows = read_metrics(&c.output.join(METRICS_FILE)).unwrap();
    assert!(rows.iter().all(|r| r.epsilon_or_rho == 1.0));
}

#[test]
fn trials_give_one_row_per_metric_each() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(dir.path(), MechanismKind::IidFixed, Privacy::Rho(1.0), "out");
    c.trials = 5;
    run(&c).unwrap();
    let rows = read_metrics(&c.output.join(METRICS_FILE)).unwrap();
    for metric in ["meanL1", "meanL1_normalized", "meanL2", "maxL1"] {
        let seeds: Vec<u64> = rows.iter().filter(|r| r.metric == metric).map(|r| r.seed).collect();
        assert_eq!(seeds, vec![1, 2, 3, 4, 5], "{metric}");
    }
}

#[test]
fn report_round_trips_metric_values() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(dir.path(), MechanismKind::AimGrem, Privacy::Rho(0.3), "out");
    c.trials = 2;
    let report = run(&c).unwrap();
    let back = read_report(&c.output.join(REPORT_FILE)).unwrap();
    for (a, b) in report.trials.iter().zip(&back.trials) {
        assert_eq!(a.report.metrics, b.report.metrics);
        assert_eq!(a.estimates, b.estimates);
    }
    assert_eq!(report, back);
}

#[test]
fn identical_config_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for out in ["a", "b"] {
        let mut c = config(dir.path(), MechanismKind::AimGrem, Privacy::Rho(0.2), out);
        c.omit_timings = true;
        c.audit_full_rebuild = true;
        run(&c).unwrap();
        outputs.push(c.output);
    }
    for f in [REPORT_FILE, METRICS_FILE, "domain.json", "values.json"] {
        assert_eq!(
            fs::read(outputs[0].join(f)).unwrap(),
            fs::read(outputs[1].join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn explicit_workload_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let spec = WorkloadSpec::from_json(r#"[["size", "color"], ["mood"]]"#).unwrap();
    let mut c = config(dir.path(), MechanismKind::IidFixed, Privacy::Rho(1.0), "out");
    c.workload = spec;
    let report = run(&c).unwrap();
    assert_eq!(
        report.workload,
        vec![vec!["color".to_string(), "size".to_string()], vec!["mood".to_string()]]
    );
    let names: Vec<_> = report.trials[0]
        .estimates
        .iter()
        .map(|e| e.attributes.clone())
        .collect();
    assert!(names.contains(&vec!["mood".to_string()]));
}

#[test]
fn bad_configs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(dir.path(), MechanismKind::AimGrem, Privacy::Rho(1.0), "out");
    c.trials = 0;
    assert!(run(&c).is_err());
    let mut c = config(dir.path(), MechanismKind::AimGrem, Privacy::Rho(-1.0), "out");
    c.trials = 1;
    assert!(run(&c).is_err());
    assert!(Privacy::from_flags(Some(1.0), Some(1.0), Some(1e-6)).is_err());
    assert!(Privacy::from_flags(None, Some(1.0), None).is_err());
    assert!(WorkloadSpec::parse("all-xway").is_err());
    assert_eq!(WorkloadSpec::parse("all-3way").unwrap(), WorkloadSpec::AllKWay(3));
    let mut c = config(dir.path(), MechanismKind::AimGrem, Privacy::Rho(1.0), "out");
    c.workload = WorkloadSpec::AllKWay(9);
    assert!(run(&c).is_err());
}
