use std::path::Path;
use std::process::{Command, Output};

use qaoa_lab::analytic::p1_root;
use qaoa_lab_cli::records::{parse_records, parse_rows};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qaoa-lab"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

#[test]
fn solve_reports_the_depth_one_root() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["solve", "--n", "8", "--p", "1", "--seed", "7"],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["config"]["seed"], 7);
    let recs = parse_records(&text).unwrap();
    assert_eq!(recs.len(), 1);
    let beta = recs[0].result.params.betas()[0];
    assert!((beta - p1_root(8).unwrap().beta).abs() < 1e-9);
    assert!(recs[0].result.grad_norm < 1e-10);
}

#[test]
fn invalid_sizes_and_flags_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["solve", "--n", "0", "--p", "1"][..],
        &["solve", "--n", "8", "--p", "1", "--frobnicate"],
        &["sweep", "--n-min", "9", "--n-max", "5", "--p", "1"],
        &["transfer", "--w", "12", "--n", "10", "--p", "1"],
        &["solve", "--n", "8", "--p", "1", "--tol", "-1"],
        &["analyze", "--in", "missing.csv"],
    ] {
        let out = run(dir.path(), args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn verify_with_defaults_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["verify"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["passed"], true);
    assert_eq!(doc["oracle"]["cases"], 12 * 4 * 200);
    assert!(doc["oracle"]["max_abs_deviation"].as_f64().unwrap() < 1e-10);
}

#[test]
fn depth_five_sweep_has_one_row_per_layer() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "sweep",
            "--n-min",
            "4",
            "--n-max",
            "17",
            "--p",
            "5",
            "--restarts",
            "8",
            "--out",
            "s.csv",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let rows = parse_rows(&text).unwrap();
    assert_eq!(rows.len(), 70);
    assert!(rows
        .chunks(5)
        .all(|c| c.iter().all(|r| r.n == c[0].n && r.seed == 0)));
}

#[test]
fn json_and_csv_records_agree() {
    let dir = tempfile::tempdir().unwrap();
    for (file, format) in [("a.out", "csv"), ("b.out", "json")] {
        let out = run(
            dir.path(),
            &[
                "sweep",
                "--n-min",
                "5",
                "--n-max",
                "9",
                "--p",
                "2",
                "--restarts",
                "4",
                "--out",
                file,
                "--format",
                format,
            ],
        );
        assert!(out.status.success());
    }
    let a = parse_rows(&std::fs::read_to_string(dir.path().join("a.out")).unwrap()).unwrap();
    let b = parse_rows(&std::fs::read_to_string(dir.path().join("b.out")).unwrap()).unwrap();
    assert_eq!(a, b);
}

const TWO_BRANCHES: &str = "\
n,p,layer,beta,gamma,overlap_scaled,grad_norm,branch,seed
10,1,1,2.3275520662816870e-1,2.6760822403334559e0,5.6670728692053043e0,0.0e0,canonical,0
11,1,1,2.1632268354732245e-1,2.7089472864951483e0,5.8475304093651728e0,0.0e0,mirrored,0
12,1,1,2.0203910418815405e-1,2.7375144252133800e0,6.0086547380858040e0,0.0e0,mirrored,0
";

#[test]
fn branch_plot_separates_the_two_branches() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("r.csv"), TWO_BRANCHES).unwrap();
    let out = run(
        dir.path(),
        &[
            "plot", "--in", "r.csv", "--kind", "branches", "--out", "b.svg",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let svg = std::fs::read_to_string(dir.path().join("b.svg")).unwrap();
    let canonical = svg.matches(r##"r="3" fill="#1f77b4""##).count();
    let mirrored = svg.matches(r##"r="3" fill="#d62728""##).count();
    // one legend swatch per series on top of the data points
    assert_eq!((canonical, mirrored), (2, 3));
}

#[test]
fn single_record_plots_are_valid() {
    let dir = tempfile::tempdir().unwrap();
    let one = TWO_BRANCHES.lines().take(2).collect::<Vec<_>>().join("\n");
    std::fs::write(dir.path().join("one.csv"), one).unwrap();
    for kind in ["angles", "branches"] {
        let out = run(
            dir.path(),
            &["plot", "--in", "one.csv", "--kind", kind, "--out", "o.svg"],
        );
        assert!(out.status.success(), "{kind}");
        let svg = std::fs::read_to_string(dir.path().join("o.svg")).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }
    let out = run(
        dir.path(),
        &[
            "plot", "--in", "one.csv", "--kind", "scaling", "--out", "s.svg",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn angle_plot_overlays_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "sweep",
            "--n-min",
            "4",
            "--n-max",
            "30",
            "--p",
            "1",
            "--restarts",
            "8",
            "--out",
            "s.csv",
        ],
    );
    assert!(out.status.success());
    let out = run(
        dir.path(),
        &[
            "plot", "--in", "s.csv", "--kind", "angles", "--out", "a.svg",
        ],
    );
    assert!(out.status.success());
    let svg = std::fs::read_to_string(dir.path().join("a.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    assert!(svg.contains("pi/(n+4)"));
    assert!(svg.contains(r#"<desc>{"command":"plot""#));
}
