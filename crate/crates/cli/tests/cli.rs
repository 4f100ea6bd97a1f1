use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use clap::Parser;
use mensura_cli::plot::dataset_grid;
use mensura_cli::table::{flatten, to_json};
use mensura_cli::{analyze, run, AnalysisOptions, Cli};
use mensura_core::data::{cherry_dataset, write_csv, SourceUnits, CHERRY_TABLE};
use mensura_core::propagate::{da_volume, CrossTerm, ErrorModel};
use mensura_core::regress::{design_matrix, ellipsoid_test, ols};
use proptest::prelude::*;

fn mensura(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mensura")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn run_lib(args: &[&str]) -> Result<String, mensura_cli::CliError> {
    let cli = Cli::try_parse_from(std::iter::once("mensura").chain(args.iter().copied())).unwrap();
    let mut buf = Vec::new();
    run(&cli, &mut buf)?;
    Ok(String::from_utf8(buf).unwrap())
}

fn read_series(path: &Path) -> Vec<(String, f64, f64)> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(mensura(&["--help"]).status.code(), Some(0));
    assert_eq!(mensura(&["analyze", "--help"]).status.code(), Some(0));
    assert_eq!(mensura(&["--version"]).status.code(), Some(0));
}

#[test]
fn flag_errors_exit_two_with_one_line() {
    for args in [
        vec!["analyze", "--bogus"],
        vec!["analyze"],
        vec!["analyze", "--builtin", "cherry", "--csv", "x.csv"],
        vec!["analyze", "--builtin", "cherry", "--rho", "1.5"],
        vec!["analyze", "--builtin", "cherry", "--dbh-unit", "furlong"],
        vec!["volume", "--solid", "frustum", "--d", "10", "--h", "50"],
        vec!["plot", "species-compare", "--builtin", "cherry"],
        vec!["pi", "V:Q^3"],
        vec![],
    ] {
        let o = mensura(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        if !args.is_empty() {
            assert_eq!(stderr(&o).trim_end().lines().count(), 1, "{args:?}: {}", stderr(&o));
        }
    }
}

#[test]
fn data_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "dbh,height,volume\n8.3,70,10.3\n8.6,abc,10.3\n").unwrap();
    let o = mensura(&["analyze", "--csv", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("row 3"), "{}", stderr(&o));

    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "dbh,height,volume\n").unwrap();
    assert_eq!(mensura(&["analyze", "--csv", empty.to_str().unwrap()]).status.code(), Some(3));
    assert_eq!(mensura(&["analyze", "--csv", "/no/such/file.csv"]).status.code(), Some(3));
}

#[test]
fn numerical_failure_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let flat = dir.path().join("flat.csv");
    std::fs::write(&flat, "dbh,height,volume\n10,70,20\n10,70,21\n10,70,22\n10,70,23\n10,70,24\n").unwrap();
    let o = mensura(&["analyze", "--csv", flat.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert_eq!(stderr(&o).trim_end().lines().count(), 1);
}

#[test]
fn report_is_deterministic() {
    let a = mensura(&["analyze", "--builtin", "cherry"]);
    let b = mensura(&["analyze", "--builtin", "cherry"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let json: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let g = json["formulations"][0]["through_origin"]["gamma0"]["value"].as_f64().unwrap();
    assert!((g - 0.302355).abs() < 5e-6);
}

#[test]
fn csv_report_carries_the_json_numbers() {
    let opts = AnalysisOptions { error_model: ErrorModel::default(), cross: CrossTerm::AsPrinted, references: true };
    let report = analyze(&cherry_dataset(), &opts).unwrap();
    let json = stdout(&mensura(&["analyze", "--builtin", "cherry"]));
    assert_eq!(json, to_json(&report).unwrap());
    let expected: BTreeMap<String, String> = flatten(&report).unwrap().into_iter().collect();
    let csv = stdout(&mensura(&["analyze", "--builtin", "cherry", "--format", "csv"]));
    let mut rdr = csv::Reader::from_reader(csv.as_bytes());
    let got: BTreeMap<String, String> = rdr
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].to_string(), r[1].to_string())
        })
        .collect();
    assert_eq!(got, expected);
    assert!(got.len() > 500);
}

#[test]
fn every_reported_number_has_a_unit() {
    let json: serde_json::Value = serde_json::from_slice(&mensura(&["analyze", "--builtin", "cherry"]).stdout).unwrap();
    fn walk(v: &serde_json::Value, path: &str, bad: &mut Vec<String>) {
        if let Some(obj) = v.as_object() {
            if obj.contains_key("value") {
                if !obj.get("unit").is_some_and(|u| u.is_string()) {
                    bad.push(path.to_string());
                }
                if obj.contains_key("reference") && !obj.contains_key("deviation") {
                    bad.push(path.to_string());
                }
            }
            for (k, c) in obj {
                walk(c, &format!("{path}.{k}"), bad);
            }
        } else if let Some(a) = v.as_array() {
            for (i, c) in a.iter().enumerate() {
                walk(c, &format!("{path}.{i}"), bad);
            }
        }
    }
    let mut bad = Vec::new();
    walk(&json, "", &mut bad);
    assert!(bad.is_empty(), "{bad:?}");
    assert!(json["variance"]["units"]["total"] == "ft6");
}

#[test]
fn out_dir_receives_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = mensura(&["analyze", "--builtin", "cherry", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let written = std::fs::read(dir.path().join("report.json")).unwrap();
    assert_eq!(written, mensura(&["analyze", "--builtin", "cherry"]).stdout);
}

#[test]
fn pi_command_counts() {
    for (args, n) in [
        (vec!["pi", "V:L^3", "d:L", "h:L"], 2),
        (vec!["pi", "L:L", "D:L", "d:L", "t:L"], 3),
        (vec!["pi", "x:L"], 0),
    ] {
        let o = mensura(&args);
        assert_eq!(o.status.code(), Some(0));
        assert!(stdout(&o).contains(&format!("{n} dimensionless group")), "{}", stdout(&o));
        let json: serde_json::Value =
            serde_json::from_slice(&mensura(&[&args[..], &["--format", "json"]].concat()).stdout).unwrap();
        assert_eq!(json["size"], n);
    }
}

#[test]
fn pi_scatter_points_match_direct_arithmetic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = mensura(&["plot", "pi-scatter", "--builtin", "cherry", "--formulation", "a", "--out", d]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = read_series(&dir.path().join("pi-scatter-a.csv"));
    let trees: Vec<_> = rows.iter().filter(|r| r.0 == "tree").collect();
    assert_eq!(trees.len(), 31);
    for (row, &(din, h, v)) in trees.iter().zip(CHERRY_TABLE.iter()) {
        let dft = din / 12.0;
        assert!((row.1 - dft * dft / (h * h)).abs() < 1e-14);
        assert!((row.2 - v / (h * h * h)).abs() < 1e-14);
    }
    for (name, slope) in [("cone", PI / 12.0), ("cylinder", PI / 4.0)] {
        let line: Vec<_> = rows.iter().filter(|r| r.0 == name).collect();
        assert_eq!(line.len(), 2);
        assert!((line[1].2 - slope * line[1].1).abs() < 1e-15);
    }
    let svg = std::fs::read_to_string(dir.path().join("pi-scatter-a.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<circle").count(), 31);

    let b = mensura(&["plot", "pi-scatter", "--builtin", "cherry", "--formulation", "b", "--out", d]);
    assert_eq!(b.status.code(), Some(0));
    assert!(read_series(&dir.path().join("pi-scatter-b.csv")).iter().all(|r| r.0 == "tree"));
    assert_eq!(mensura(&["plot", "pi-scatter", "--builtin", "cherry", "--formulation", "z", "--out", d]).status.code(), Some(2));
}

#[test]
fn ellipse_boundary_lies_on_the_critical_surface() {
    let dir = tempfile::tempdir().unwrap();
    let o = mensura(&["plot", "ellipse", "--builtin", "cherry", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = read_series(&dir.path().join("ellipse.csv"));
    let ds = cherry_dataset();
    let ln = |v: Vec<f64>| v.into_iter().map(f64::ln).collect::<Vec<_>>();
    let (ld, lh, lv) = (ln(ds.dbh()), ln(ds.heights()), ln(ds.volumes()));
    let fit = ols(&design_matrix(&[&ld, &lh], true).unwrap(), &lv).unwrap();
    let boundary: Vec<_> = rows.iter().filter(|r| r.0 == "boundary").collect();
    assert!(boundary.len() > 100);
    for r in boundary {
        let v = ellipsoid_test(&fit, &[r.1, 2.0, r.2], 0.999).unwrap();
        assert!(((v.statistic - v.critical) / v.critical).abs() < 1e-6);
    }
    for name in ["cylinder", "cone", "da"] {
        assert_eq!(rows.iter().filter(|r| r.0 == name).count(), 1);
    }
}

#[test]
fn contour_csv_is_the_variance_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = mensura(&[
        "plot", "contours", "--builtin", "cherry", "--gamma", "0.302", "--steps", "11", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let got = std::fs::read_to_string(dir.path().join("contours.csv")).unwrap();
    let grid = dataset_grid(&cherry_dataset(), 0.302, &ErrorModel::default(), CrossTerm::AsPrinted, 11).unwrap();
    let mut want = Vec::new();
    grid.write_csv(&mut want).unwrap();
    assert_eq!(got.as_bytes(), want.as_slice());
    assert_eq!(got.lines().count(), 1 + 121);
    assert!(got.starts_with("d_ft,h_ft,V_ft3,varV_ft6\n"));
    for c in &grid.cells {
        assert_eq!(c.volume, da_volume(0.302, c.d, c.h));
    }
}

#[test]
fn plots_are_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for kind in ["pairs", "ellipse", "contours"] {
        for dir in [&a, &b] {
            let o = mensura(&["plot", kind, "--builtin", "cherry", "--out", dir.path().to_str().unwrap()]);
            assert_eq!(o.status.code(), Some(0), "{kind}: {}", stderr(&o));
        }
        for ext in ["svg", "csv"] {
            let name = format!("{kind}.{ext}");
            assert_eq!(
                std::fs::read(a.path().join(&name)).unwrap(),
                std::fs::read(b.path().join(&name)).unwrap(),
                "{name}"
            );
        }
    }
}

#[test]
fn species_compare_with_second_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let other = dir.path().join("copy.csv");
    let mut buf = Vec::new();
    write_csv(&cherry_dataset(), &mut buf, &SourceUnits::cherry()).unwrap();
    std::fs::write(&other, buf).unwrap();
    let o = mensura(&[
        "plot", "species-compare", "--builtin", "cherry", "--compare", other.to_str().unwrap(), "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = read_series(&dir.path().join("species-compare.csv"));
    assert_eq!(rows.iter().filter(|r| r.0 == "cherry").count(), 31);
    assert_eq!(rows.iter().filter(|r| r.0 == "copy").count(), 31);
}

#[test]
fn standard_delta_doubles_the_cross_term() {
    let get = |extra: &[&str]| {
        let args = [&["propagate", "--d", "20.6", "--h", "87", "--format", "json"], extra].concat();
        let o = mensura(&args);
        assert_eq!(o.status.code(), Some(0));
        serde_json::from_slice::<serde_json::Value>(&o.stdout).unwrap()["term_cross"]["value"].as_f64().unwrap()
    };
    let printed = get(&[]);
    let delta = get(&["--standard-delta"]);
    assert!((delta - 2.0 * printed).abs() < 1e-12 * delta);
    assert!((printed - 2.08595).abs() < 1e-4);
}

#[test]
fn volume_units_round_trip() {
    let cyl = run_lib(&["volume", "--solid", "cylinder", "--d", "12", "--h", "1", "--format", "json"]).unwrap();
    let v: serde_json::Value = serde_json::from_str(&cyl).unwrap();
    assert!((v["volume"]["value"].as_f64().unwrap() - PI / 4.0).abs() < 1e-12);
    assert_eq!(v["volume"]["unit"], "ft3");

    let si = run_lib(&[
        "volume", "--solid", "cylinder", "--d", "1", "--h", "1", "--dbh-unit", "m", "--height-unit", "m",
        "--volume-unit", "m^3", "--format", "json",
    ])
    .unwrap();
    let v: serde_json::Value = serde_json::from_str(&si).unwrap();
    assert!((v["volume"]["value"].as_f64().unwrap() - PI / 4.0).abs() < 1e-12);

    let logs = run_lib(&["volume", "--solid", "smalian", "--log", "10,12,16", "--log", "8,10,16"]).unwrap();
    assert!(logs.starts_with("smalian volume = "));
    assert!(run_lib(&["volume", "--solid", "smalian"]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn da_volume_command_matches_library(d in 1.0f64..40.0, h in 5.0f64..150.0, g in 0.2f64..0.8) {
        let out = run_lib(&[
            "volume", "--solid", "da", "--d", &d.to_string(), "--h", &h.to_string(),
            "--gamma", &g.to_string(), "--format", "json",
        ]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        let want = da_volume(g, d / 12.0, h);
        prop_assert!((v["volume"]["value"].as_f64().unwrap() - want).abs() <= 1e-12 * want);
    }
}
