use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/dispatch10.json");

fn drra(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drra"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Trace {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Trace {
    fn read(path: &Path) -> Self {
        let mut r = csv::Reader::from_path(path).unwrap();
        let header = r.headers().unwrap().iter().map(str::to_owned).collect();
        let rows = r
            .records()
            .map(|rec| rec.unwrap().iter().map(str::to_owned).collect())
            .collect();
        Self { header, rows }
    }

    fn col(&self, name: &str) -> usize {
        self.header.iter().position(|h| h == name).unwrap()
    }

    fn floats(&self, name: &str) -> Vec<f64> {
        let c = self.col(name);
        self.rows.iter().map(|r| r[c].parse().unwrap()).collect()
    }

    fn without_wallclock(&self) -> Vec<Vec<String>> {
        let c = self.col("wallclock_ms");
        self.rows
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(i, _)| *i != c)
                    .map(|(_, v)| v.clone())
                    .collect()
            })
            .collect()
    }
}

fn with_run_block(run: serde_json::Value) -> String {
    let mut v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(FIXTURE).unwrap()).unwrap();
    v["run"] = run;
    v.to_string()
}

#[test]
fn bundled_fixture_validates() {
    let out = drra(&["validate", "--config", FIXTURE]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn fixture_traces_improve_with_smaller_weight() {
    let dir = tempfile::tempdir().unwrap();
    let out = drra(&[
        "run",
        "--config",
        FIXTURE,
        "--c",
        "1e-3,1e-7",
        "--iters",
        "2000",
        "--seed",
        "0",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let coarse = Trace::read(&dir.path().join("trace_c1e-3.csv"));
    let fine = Trace::read(&dir.path().join("trace_c1e-7.csv"));
    assert_eq!(
        coarse.header,
        [
            "k",
            "sum_f",
            "sum_F",
            "sum_phi",
            "rel_obj_err",
            "feas_in_err",
            "feas_eq_err",
            "num_leaders",
            "residual_sum",
            "wallclock_ms"
        ]
    );
    assert_eq!(coarse.rows.len(), 2001);
    let last = |t: &Trace| t.floats("rel_obj_err").last().copied().unwrap().abs();
    assert!(
        last(&fine) < last(&coarse),
        "{} vs {}",
        last(&fine),
        last(&coarse)
    );

    for t in [&coarse, &fine] {
        assert!(t.floats("feas_eq_err").iter().all(|e| *e <= 1e-8));
        let phi = t.floats("sum_phi");
        let big_f = t.floats("sum_F");
        for (k, (p, f)) in phi.iter().zip(&big_f).enumerate() {
            assert!(*f >= p - 1e-8, "row {k}: sum_F {f} < sum_phi {p}");
        }
        assert!(phi.windows(2).all(|w| w[1] <= w[0] + 1e-8));
    }
    let summary = String::from_utf8_lossy(&out.stdout);
    assert_eq!(
        summary
            .lines()
            .filter(|l| l.contains("rel_obj_err="))
            .count(),
        2
    );
}

#[test]
fn identical_seeds_give_identical_csvs() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let out = drra(&[
            "run",
            "--config",
            FIXTURE,
            "--c",
            "1e-4",
            "--iters",
            "150",
            "--seed",
            "5",
            "--residual-every",
            "25",
            "--out",
            s(d.path()),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    let a = Trace::read(&dirs[0].path().join("trace_c1e-4.csv"));
    let b = Trace::read(&dirs[1].path().join("trace_c1e-4.csv"));
    assert_eq!(a.without_wallclock(), b.without_wallclock());

    let c = a.col("residual_sum");
    for (k, row) in a.rows.iter().enumerate() {
        assert_eq!(row[c].is_empty(), k % 25 != 0, "row {k}");
    }
}

#[test]
fn residual_stop_ends_early() {
    let dir = tempfile::tempdir().unwrap();
    let out = drra(&[
        "run",
        "--config",
        FIXTURE,
        "--c",
        "1e-2",
        "--iters",
        "5000",
        "--stop",
        "residual:1e-8",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let t = Trace::read(&dir.path().join("trace_c1e-2.csv"));
    assert!(t.rows.len() < 5001);
    let last = t.rows.last().unwrap();
    let r: f64 = last[t.col("residual_sum")].parse().unwrap();
    // every one of the 10 residuals is at most the tolerance
    assert!(r <= 10.0 * 1e-8);
    assert!(String::from_utf8_lossy(&out.stdout).contains("Residual"));
}

#[test]
fn run_block_in_config_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("traces");
    let cfg = dir.path().join("cfg.json");
    let run = serde_json::json!({"c": [1e-3], "iters": 7, "seed": 2, "out": out_dir});
    fs::write(&cfg, with_run_block(run)).unwrap();
    let out = drra(&["run", "--config", s(&cfg)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(Trace::read(&out_dir.join("trace_c1e-3.csv")).rows.len(), 8);
}

#[test]
fn gen_writes_loadable_instances() {
    let dir = tempfile::tempdir().unwrap();
    for (family, n) in [("dispatch", "6"), ("multi_resource", "6")] {
        let path: PathBuf = dir.path().join(format!("{family}.json"));
        let out = drra(&["gen", family, "--n", n, "--seed", "3", "--out", s(&path)]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        let out = drra(&["validate", "--config", s(&path)]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        let out = drra(&["oracle", "--config", s(&path), "--c", "1e-2,1e-4"]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        assert!(!out.stdout.is_empty());
    }
}

#[test]
fn truncated_file_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(FIXTURE).unwrap();
    let cut = dir.path().join("cut.json");
    fs::write(&cut, &text[..text.len() / 2]).unwrap();
    for cmd in ["run", "validate", "oracle"] {
        let out = drra(&[cmd, "--config", s(&cut)]);
        assert_eq!(code(&out), 2, "{cmd}: {}", stderr(&out));
    }
    let out = drra(&["run", "--config", s(&dir.path().join("missing.json"))]);
    assert_eq!(code(&out), 2);
}

#[test]
fn negative_weight_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("neg.json");
    fs::write(&cfg, with_run_block(serde_json::json!({"c": [-1.0]}))).unwrap();
    let out = drra(&["run", "--config", s(&cfg)]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    let out = drra(&[
        "run",
        "--config",
        FIXTURE,
        "--c",
        "-1",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn bad_generation_request_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = drra(&[
        "gen",
        "dispatch",
        "--n",
        "0",
        "--out",
        s(&dir.path().join("x.json")),
    ]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    let out = drra(&[
        "gen",
        "dispatch",
        "--n",
        "4",
        "--c",
        "-1",
        "--out",
        s(&dir.path().join("z.json")),
    ]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    let out = drra(&[
        "gen",
        "nonsense",
        "--n",
        "4",
        "--out",
        s(&dir.path().join("y.json")),
    ]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn unknown_field_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("extra.json");
    let mut v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(FIXTURE).unwrap()).unwrap();
    v["surprise"] = serde_json::json!(1);
    fs::write(&cfg, v.to_string()).unwrap();
    assert_eq!(code(&drra(&["validate", "--config", s(&cfg)])), 3);
}
