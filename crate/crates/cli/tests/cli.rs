use std::io::Write;
use std::process::{Command, Output, Stdio};

use tempfile::TempDir;

const REFERENCE: &str = r#""source": "W(0.1,0.2)", "channel": "W(0.1,0.2)""#;

fn jscc(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_jscc"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn jscc");
    {
        let mut pipe = child.stdin.take().expect("stdin");
        if let Some(text) = stdin {
            pipe.write_all(text.as_bytes()).expect("write stdin");
        }
    }
    child.wait_with_output().expect("wait jscc")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8")
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).expect("utf-8")
}

fn lookup(csv: &str, key: &str) -> f64 {
    csv.lines()
        .find_map(|l| l.strip_prefix(&format!("{key},")))
        .unwrap_or_else(|| panic!("no row {key} in\n{csv}"))
        .parse()
        .expect("number")
}

#[test]
fn measures_for_the_reference_pair() {
    let o = jscc(&["measures"], Some(&format!("{{{REFERENCE}}}")));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("quantity,value\n"));
    assert!((lookup(&out, "optimal_rate") - 0.807317).abs() < 1e-5);
    // closed-form 2x2 eigenvalue derivatives give 6.1256569673
    assert!((lookup(&out, "dispersion") - 6.1256569673).abs() < 1e-6);
    assert_eq!(
        out.lines().find(|l| l.starts_with("channel_assumption2")),
        Some("channel_assumption2,true")
    );
}

#[test]
fn uniform_chain_has_zero_dispersion() {
    let o = jscc(
        &["measures"],
        Some(r#"{"source": "W(0.5,0.5)", "channel": "W(0.5,0.5)"}"#),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!((lookup(&out, "source_entropy_rate") - 2f64.ln()).abs() < 1e-9);
    assert_eq!(lookup(&out, "source_dispersion"), 0.0);
    assert_eq!(lookup(&out, "channel_dispersion"), 0.0);
}

#[test]
fn malformed_matrix_names_the_column() {
    let cfg = r#"{"source": {"matrix": [[0.5, 0.2], [0.4, 0.8]]}, "channel": "W(0.1,0.2)"}"#;
    let o = jscc(&["measures"], Some(cfg));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("column 0"), "{}", stderr(&o));
}

#[test]
fn unknown_fields_and_bad_json_are_config_errors() {
    let o = jscc(
        &["measures"],
        Some(&format!("{{{REFERENCE}, \"bogus\": 1}}")),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bogus"));
    let o = jscc(&["measures"], Some("{\n\"source\": \n"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line"));
}

#[test]
fn inverted_k_range_is_rejected() {
    let cfg = format!("{{{REFERENCE}, \"n\": 100, \"k_range\": {{\"min\": 80, \"max\": 60}}}}");
    let o = jscc(&["bounds"], Some(&cfg));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("k_range"));
}

#[test]
fn vacuous_only_output_is_written_and_flagged() {
    let cfg = format!("{{{REFERENCE}, \"k\": 2, \"n\": 3, \"bounds\": [\"direct_a2\"]}}");
    let o = jscc(&["bounds"], Some(&cfg));
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(
        stdout(&o),
        "k,n,bound,log_bound,s,rho,status\n2,3,direct_a2,,0,,vacuous\n"
    );
}

#[test]
fn bounds_are_ordered_and_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, format!("{{{REFERENCE}, \"k\": 7500, \"n\": 10000}}")).unwrap();
    let outs: Vec<_> = (0..2)
        .map(|i| {
            let path = dir.path().join(format!("out{i}.csv"));
            let o = jscc(
                &[
                    "bounds",
                    "--config",
                    cfg.to_str().unwrap(),
                    "--out",
                    path.to_str().unwrap(),
                ],
                None,
            );
            assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
            std::fs::read(path).unwrap()
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
    let text = String::from_utf8(outs[0].clone()).unwrap();
    assert!(!text.contains('\r'));
    let value = |kind: &str| -> f64 {
        let line = text.lines().find(|l| l.contains(kind)).unwrap();
        line.split(',').nth(3).unwrap().parse().unwrap()
    };
    // converse lower bound below direct upper bound on ln P
    assert!(value("converse_a2") < value("direct_a2"));
    assert!(value("direct_a2") < 0.0);
}

#[test]
fn asymptotics_leave_out_of_range_cells_empty() {
    let cfg = format!("{{{REFERENCE}, \"r_values\": [0.75, 0.9]}}");
    let o = jscc(&["asymptotics"], Some(&cfg));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let rows: Vec<Vec<&str>> = out
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    let e: f64 = rows[0][5].parse().unwrap();
    assert!((e - 0.0002826).abs() < 1e-6);
    // beyond the optimal rate: zero direct exponent, no converse, no md
    assert_eq!(rows[1][5], "0");
    assert_eq!(&rows[1][6..], ["", "", ""]);
}

#[test]
fn reproduce_second_figure_converges() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("ns.json");
    std::fs::write(&cfg, r#"{"n_values": [10000, 1000000]}"#).unwrap();
    let o = jscc(&["reproduce", "2", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("n,k,direct_a2,converse_a2,exponent\n"));
    let last: Vec<f64> = out
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!((last[0], last[1]), (1e6, 750_000.0));
    assert!((last[2] - 0.0002826).abs() / 0.0002826 < 0.05);
    assert!(last[2] <= last[4] && last[4] <= last[3]);
}

#[test]
fn reproduce_first_figure_on_a_coarse_sweep() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("ks.json");
    std::fs::write(
        &cfg,
        r#"{"k_range": {"min": 6000, "max": 8000, "step": 1000}}"#,
    )
    .unwrap();
    let o = jscc(
        &[
            "reproduce",
            "1",
            "--config",
            cfg.to_str().unwrap(),
            "--grid-density",
            "30",
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(
        out.lines().next(),
        Some("k,direct_a2,converse_a2,n_exponent,e_md")
    );
    for line in out.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(v[1] <= v[3] && v[3] <= v[2], "{line}");
    }
}

#[test]
fn oracle_default_passes() {
    let o = jscc(&["oracle"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let rows = out.lines().skip(1).count();
    assert_eq!(rows, 5 * 4 * (1 + 1 + 4));
    for line in out.lines().skip(1) {
        let margin: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(margin >= -1e-9, "{line}");
    }
}

#[test]
fn bad_arguments_are_config_errors() {
    assert_eq!(jscc(&["reproduce", "3"], None).status.code(), Some(1));
    assert_eq!(jscc(&["frobnicate"], None).status.code(), Some(1));
    let help = jscc(&["bounds", "--help"], None);
    assert_eq!(help.status.code(), Some(0));
    assert!(stdout(&help).contains("log_bound"));
}
