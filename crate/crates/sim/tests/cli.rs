use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL: &str = r#"
[frame]
m = 16
n = 8
delta_f = 15e3
cp_len = 3

[channel]
profile = "ETU"
doppler_max = 300.0

[link]
mcs = ["QPSK/conv-r12", "16QAM/conv-r12"]
snr_db = [6.0, 12.0]
trials = 6
master_seed = 5
"#;

fn otfs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_otfs")).args(args).output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn sim_writes_the_documented_header() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", SMALL);
    let out = dir.path().join("r.csv");
    let svg = dir.path().join("r.svg");
    let o = otfs(&["sim", "--config", s(&cfg), "--out", s(&out), "--plot", s(&svg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scheme,snr_db,mcs,trials,bit_errors,ber,block_errors,bler,throughput,seed"
    );
    // two schemes, two SNRs, two MCS
    assert_eq!(lines.count(), 8);
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

#[test]
fn output_is_identical_across_runs_and_worker_counts() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", SMALL);
    let mut outputs = Vec::new();
    for (i, w) in ["1", "1", "3"].iter().enumerate() {
        let out = dir.path().join(format!("r{i}.csv"));
        let o = otfs(&["sim", "--config", s(&cfg), "--out", s(&out), "--workers", w]);
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);

    let out = dir.path().join("seeded.csv");
    let o = otfs(&["sim", "--config", s(&cfg), "--out", s(&out), "--master-seed", "6"]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().skip(1).all(|l| l.ends_with(",6")));
}

#[test]
fn codeblock_study_adds_a_size_column() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", &SMALL.replace("\"QPSK/conv-r12\", ", ""));
    let out = dir.path().join("r.csv");
    let o = otfs(&["codeblock-study", "--config", s(&cfg), "--sizes", "100,200", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("scheme,snr_db,mcs,trials,bit_errors,ber,block_errors,bler,throughput,seed,codeblock_bits\n"));
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 2);

    let o = otfs(&["codeblock-study", "--config", s(&cfg), "--sizes", "100,5000", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("link.codeblock_bits"), "{}", stderr(&o));
}

#[test]
fn plan_pilots_prints_the_overhead() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "p.toml",
        "[frame]\nm = 400\nn = 22\ndelta_f = 15e3\ncp_len = 28\n\n[pilots]\ndelay_spread = 1e-6\ndoppler_spread = 0.0\nregion_fraction = 0.07\n",
    );
    let o = otfs(&["plan-pilots", "--config", s(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("overhead_per_port: 0.08%"), "{text}");
    let lines: Vec<&str> = text.lines().collect();
    let header = lines.iter().position(|l| l.starts_with("port_count,")).unwrap();
    let row: Vec<&str> = lines[header + 1].split(',').collect();
    assert_eq!(row[0], "88");
    assert_eq!(row[4], "0.000795455");
}

#[test]
fn estimate_demo_lists_true_and_estimated_taps() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "e.toml",
        "[frame]\nm = 32\nn = 16\ndelta_f = 15e3\ncp_len = 4\n\n[channel]\nprofile = \"two-tap\"\n\n\
         [pilots]\ndelay_spread = 5e-6\ndoppler_spread = 0.0\nregion_fraction = 0.1\n",
    );
    let o = otfs(&["estimate-demo", "--config", s(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows = |tag: &str| -> Vec<Vec<String>> {
        text.lines()
            .filter(|l| l.starts_with(tag))
            .map(|l| l.split(',').map(str::to_string).collect())
            .collect()
    };
    let (truth, est) = (rows("true,"), rows("estimate,"));
    assert_eq!(truth.len(), 2);
    assert_eq!(est.len(), 2);
    for (t, e) in truth.iter().zip(&est) {
        assert_eq!(t[1..3], e[1..3]);
        let (a, b): (f64, f64) = (t[5].parse().unwrap(), e[5].parse().unwrap());
        assert!((a - b).abs() < 1e-5 * a);
    }
}

#[test]
fn malformed_configs_exit_2_naming_the_key() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("r.csv");
    let cases = [
        (SMALL.replace("trials = 6", "trials = 6\ntrails = 2"), "link.trails"),
        (SMALL.replace("trials = 6", "trials = 0"), "link.trials"),
        (SMALL.replace("m = 16", "m = \"sixteen\""), "frame.m"),
        (SMALL.replace("cp_len = 3\n", ""), "frame.cp_len"),
        (SMALL.replace("delta_f = 15e3", "delta_f = -1.0"), "frame.delta_f"),
        (SMALL.replace("\"ETU\"", "\"ETX\""), "channel.profile"),
        (SMALL.replace("snr_db = [6.0, 12.0]", "snr_db = []"), "link.snr_db"),
        (SMALL.replace("[link]", "[link]\nmimo = [2, 2]\nofdm_equalizer = \"tf-single-tap\""), "link.equalizer"),
        (SMALL.replace("[link]", "[link]\notfs_equalizer = \"tf-genie-sic\""), "link.otfs_equalizer"),
        (SMALL.replace("[frame]", "[frame\n"), "config"),
        ("not toml at all = = =".to_string(), "config"),
        (String::new(), "frame"),
    ];
    for (text, key) in cases {
        let cfg = write(&dir, "bad.toml", &text);
        let o = otfs(&["sim", "--config", s(&cfg), "--out", s(&out)]);
        assert_eq!(o.status.code(), Some(2), "{key}: {}", stderr(&o));
        let err = stderr(&o);
        assert!(err.contains(key), "expected `{key}` in: {err}");
        assert_eq!(err.trim_end().lines().count(), 1, "{err}");
        assert!(!err.contains("panicked"));
    }
}

#[test]
fn other_failures_are_reported_without_panicking() {
    let dir = TempDir::new().unwrap();
    let o = otfs(&["sim", "--config", s(&dir.path().join("missing.toml")), "--out", "x.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("config"));

    let cfg = write(&dir, "c.toml", SMALL);
    let o = otfs(&["sim", "--config", s(&cfg), "--out", s(&dir.path().join("no/such/dir.csv"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error:"));

    let o = otfs(&["sim", "--config", s(&cfg), "--out", "x.csv", "--workers", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("workers"));

    let o = otfs(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    let o = otfs(&["plan-pilots", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("pilots"));
}
