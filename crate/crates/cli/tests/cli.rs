use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn groundsel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_groundsel"))
        .args(args)
        .env("GROUNDSEL_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&groundsel(&["--help"])), 0);
    assert_eq!(code(&groundsel(&["select", "--help"])), 0);
    assert_eq!(code(&groundsel(&["select", "--bogus"])), 1);
    assert_eq!(code(&groundsel(&[])), 1);
    // Both inputs at once is a usage error too.
    assert_eq!(
        code(&groundsel(&[
            "select",
            "--matrix-file",
            "a",
            "--graph-file",
            "b"
        ])),
        1
    );
}

#[test]
fn unreadable_input_is_exit_one() {
    let out = groundsel(&["select", "--matrix-file", "/nonexistent/m.txt"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn identity_needs_no_removal() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "eye.txt", "1 0 0\n0 1 0\n0 0 1\n");
    for method in [
        "greedy_q",
        "inv_trace",
        "logdet",
        "degree",
        "random",
        "brute_force",
    ] {
        let out = groundsel(&[
            "select",
            "--matrix-file",
            &m,
            "--method",
            method,
            "--omit-timing",
        ]);
        assert_eq!(code(&out), 0, "{method}");
        let text = stdout(&out);
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("method,n,beta"));
        let row = lines.next().unwrap();
        assert!(row.starts_with(&format!("{method},3,0,0,0,1,")), "{row}");
        assert!(row.ends_with(",0,certified,"), "{row}");
    }
}

#[test]
fn negative_entry_is_grounded() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(
        dir.path(),
        "d.txt",
        "# diag(5, 1, -1)\n5 0 0\n0 1 0\n0 0 -1\n",
    );
    let out = groundsel(&["select", "--matrix-file", &m]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out)
        .lines()
        .nth(1)
        .unwrap()
        .ends_with("certified,2"));

    // Degree removes the two largest diagonals and still fails.
    let out = groundsel(&["select", "--matrix-file", &m, "--method", "degree"]);
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).contains("grounded_to_singleton"));
}

#[test]
fn graph_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    let g = g.to_str().unwrap();
    let args = [
        "gen-graph",
        "--n",
        "12",
        "--p-neg",
        "0.3",
        "--seed",
        "7",
        "--out",
        g,
    ];
    assert_eq!(code(&groundsel(&args)), 0);
    let first = fs::read(g).unwrap();
    assert_eq!(code(&groundsel(&args)), 0);
    assert_eq!(fs::read(g).unwrap(), first);
    assert!(String::from_utf8_lossy(&first).starts_with("n=12"));

    let out = groundsel(&[
        "select",
        "--graph-file",
        g,
        "--beta",
        "0.1",
        "--omit-timing",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let removed = text
        .lines()
        .nth(1)
        .unwrap()
        .rsplit(',')
        .next()
        .unwrap()
        .replace(';', ",");

    let out = groundsel(&[
        "simulate",
        "--graph-file",
        g,
        "--removed",
        &removed,
        "--horizon",
        "2",
        "--dt",
        "0.5",
    ]);
    assert_eq!(code(&out), 0);
    let csv = stdout(&out);
    assert!(csv.starts_with("t,x_0,"));
    assert_eq!(csv.lines().count(), 6);
    assert!(String::from_utf8_lossy(&out.stderr).contains("envelope=holds"));
}

#[test]
fn simulate_with_explicit_state() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "eye.txt", "2 0\n0 2\n");
    let out = groundsel(&[
        "simulate",
        "--matrix-file",
        &m,
        "--x0",
        "1,0",
        "--horizon",
        "1",
        "--dt",
        "1",
    ]);
    assert_eq!(code(&out), 0);
    let csv = stdout(&out);
    let last: Vec<f64> = csv
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(last[0], 1.0);
    assert!((last[1] - (-2f64).exp()).abs() < 1e-15);
    // Wrong state length.
    assert_eq!(
        code(&groundsel(&["simulate", "--matrix-file", &m, "--x0", "1"])),
        1
    );
}

#[test]
fn campaign_is_reproducible_and_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let graphs = dir.path().join("graphs");
    let run = |out: &Path, extra: &[&str]| {
        let mut args = vec![
            "experiment",
            "--campaign",
            "size_sweep",
            "--grid",
            "10,14",
            "--trials",
            "3",
            "--methods",
            "greedy_q,degree,random,inv_trace",
            "--omit-timing",
            "--out",
            out.to_str().unwrap(),
        ];
        args.extend_from_slice(extra);
        groundsel(&args)
    };
    assert_eq!(
        code(&run(&a, &["--save-graphs", graphs.to_str().unwrap()])),
        0
    );
    assert_eq!(code(&run(&b, &[])), 0);
    let bytes = fs::read(&a).unwrap();
    assert_eq!(bytes, fs::read(&b).unwrap());
    let text = String::from_utf8(bytes).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 3 * 4);
    assert!(text.starts_with(
        "campaign,method,n,p_neg,beta,seed,removed_count,final_lambda_min,q_evals,wall_ms,status,removed"
    ));
    assert_eq!(fs::read_dir(&graphs).unwrap().count(), 6);

    let out = groundsel(&["verify", "--csv", a.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let out = groundsel(&[
        "verify",
        "--csv",
        a.to_str().unwrap(),
        "--graphs-dir",
        graphs.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));

    // Claiming success with nothing removed on a graph that needs removals
    // must be caught.
    let mut rows: Vec<String> = text.lines().map(String::from).collect();
    let victim = rows
        .iter()
        .position(|r| {
            r.starts_with("size_sweep,greedy_q") && r.ends_with(|c: char| c.is_ascii_digit())
        })
        .expect("a greedy row with removals");
    let fields: Vec<&str> = rows[victim].split(',').collect();
    let mut forged: Vec<String> = fields.iter().map(|s| s.to_string()).collect();
    forged[6] = "0".into();
    forged[11] = String::new();
    rows[victim] = forged.join(",");
    fs::write(&b, rows.join("\n") + "\n").unwrap();
    let out = groundsel(&["verify", "--csv", b.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).contains("FAIL"));
}

#[test]
fn experiment_rejects_bad_requests() {
    assert_eq!(code(&groundsel(&["experiment", "--campaign", "nope"])), 1);
    assert_eq!(
        code(&groundsel(&[
            "experiment",
            "--campaign",
            "size_sweep",
            "--methods",
            "brute_force",
            "--trials",
            "1"
        ])),
        1
    );
    assert_eq!(
        code(&groundsel(&[
            "experiment",
            "--campaign",
            "size_sweep",
            "--trials",
            "0"
        ])),
        1
    );
}
