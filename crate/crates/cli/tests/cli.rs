//! End-to-end runs of the binary: the six-step workflow, determinism of
//! outputs, exit codes, and error messages.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_polemap"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "command {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

/// The full six-step procedure against the built-in single-stage
/// circuit: simulate, de-embed, compose, identify; the reported critical
/// pole must agree with the pencil report.
#[test]
fn six_step_workflow_matches_exact_poles() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(
        dir,
        &[
            "simulate",
            "--preset",
            "hartley_single_stage",
            "--out-dir",
            "run",
        ],
    );
    for name in [
        "block.s2p",
        "gamma_in.s1p",
        "ratio_n.csv",
        "ratio_ref.csv",
        "hvn_n.csv",
        "netlist.json",
    ] {
        assert!(dir.join("run").join(name).exists(), "missing {name}");
    }
    ok(
        dir,
        &[
            "hinput",
            "--block",
            "run/block.s2p",
            "--gamma",
            "run/gamma_in.s1p",
            "--out",
            "hinput.csv",
        ],
    );
    ok(
        dir,
        &[
            "compose",
            "--hinput",
            "hinput.csv",
            "--ratio-n",
            "run/ratio_n.csv",
            "--ratio-ref",
            "run/ratio_ref.csv",
            "--out",
            "hvn.csv",
        ],
    );
    ok(
        dir,
        &[
            "identify",
            "--in",
            "hvn.csv",
            "--band",
            "5e7:5e8",
            "--order",
            "auto",
            "--out",
            "poles.json",
        ],
    );
    ok(
        dir,
        &[
            "exactpoles",
            "--preset",
            "hartley_single_stage",
            "--out",
            "exact.json",
        ],
    );

    let fitted: serde_json::Value = serde_json::from_str(&read(&dir.join("poles.json"))).unwrap();
    let exact: serde_json::Value = serde_json::from_str(&read(&dir.join("exact.json"))).unwrap();
    let critical = |doc: &serde_json::Value| -> (f64, f64) {
        doc[0]["poles"]
            .as_array()
            .unwrap()
            .iter()
            .find(|p| p["critical"].as_bool().unwrap())
            .map(|p| {
                (
                    p["re_per_s"].as_f64().unwrap(),
                    p["im_per_s"].as_f64().unwrap(),
                )
            })
            .expect("critical pole present")
    };
    let (fre, fim) = critical(&fitted);
    let (ere, eim) = critical(&exact);
    let rel = ((fre - ere).powi(2) + (fim - eim).powi(2)).sqrt()
        / (ere.powi(2) + eim.powi(2)).sqrt();
    assert!(rel < 1e-4, "CLI critical pole off by {rel:.3e}");
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    for run_dir in ["a", "b"] {
        ok(
            dir,
            &[
                "simulate",
                "--preset",
                "hartley_single_stage",
                "--grid",
                "1e6:5e8:101",
                "--noise-db",
                "-60",
                "--seed",
                "11",
                "--out-dir",
                run_dir,
            ],
        );
    }
    for name in ["block.s2p", "gamma_in.s1p", "ratio_n.csv", "hvn_n.csv", "netlist.json"] {
        assert_eq!(
            read(&dir.join("a").join(name)),
            read(&dir.join("b").join(name)),
            "{name} differs between identical runs"
        );
    }
}

#[test]
fn track_finds_the_crossing_and_emits_views() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    for gm in ["0.10", "0.12", "0.14", "0.16"] {
        let run_dir = format!("sweep_{gm}");
        ok(
            dir,
            &[
                "simulate",
                "--preset",
                "hartley_single_stage",
                "--set",
                &format!("gm={gm}"),
                "--grid",
                "1e6:5e8:301",
                "--out-dir",
                &run_dir,
            ],
        );
    }
    let out = ok(
        dir,
        &[
            "track",
            "--glob",
            "sweep_*/hvn_n.csv",
            "--param",
            "gm",
            "--band",
            "5e7:5e8",
            "--out",
            "track.json",
            "--svg",
            "map.svg",
            "--report",
            "report.csv",
        ],
    );
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("crosses the axis"), "{stderr}");

    let doc: serde_json::Value = serde_json::from_str(&read(&dir.join("track.json"))).unwrap();
    let brackets = doc["brackets"].as_array().unwrap();
    assert_eq!(brackets.len(), 1);
    let lo = brackets[0]["param_low"].as_f64().unwrap();
    let hi = brackets[0]["param_high"].as_f64().unwrap();
    assert!(lo >= 0.12 - 1e-12 && hi <= 0.14 + 1e-12, "bracket [{lo}, {hi}]");

    let svg = read(&dir.join("map.svg"));
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("circle"));
    let report = read(&dir.join("report.csv"));
    assert!(report.starts_with("gm,re_per_s"));

    // report subcommand regenerates identical views from the document
    ok(
        dir,
        &[
            "report",
            "--track",
            "track.json",
            "--out",
            "report2.csv",
            "--svg",
            "map2.svg",
        ],
    );
    assert_eq!(read(&dir.join("report.csv")), read(&dir.join("report2.csv")));
    assert_eq!(read(&dir.join("map.svg")), read(&dir.join("map2.svg")));
}

#[test]
fn mimo_and_residues_localize_stage_two() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    // the quantitative localization works on admittance-type responses,
    // one per stage, driven in the gate bias lines
    ok(
        dir,
        &[
            "simulate",
            "--preset",
            "three_stage",
            "--grid",
            "1e6:5e8:301",
            "--admittance",
            "l_gb1,l_gb2,l_gb3",
            "--out-dir",
            "run",
        ],
    );
    ok(
        dir,
        &[
            "mimo",
            "--in",
            "run/y_l_gb1.csv",
            "--in",
            "run/y_l_gb2.csv",
            "--in",
            "run/y_l_gb3.csv",
            "--band",
            "5e7:5e8",
            "--order",
            "10",
            "--out",
            "model.json",
            "--report",
            "mimo_poles.json",
        ],
    );
    let out = ok(
        dir,
        &[
            "residues",
            "--model",
            "model.json",
            "--band",
            "5e7:5e8",
            "--out",
            "residues.json",
        ],
    );
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("origin l_gb2"), "{stderr}");
    let doc: serde_json::Value = serde_json::from_str(&read(&dir.join("residues.json"))).unwrap();
    let residues = doc["normalized_residues"].as_array().unwrap();
    assert_eq!(residues.len(), 3);
    assert_eq!(residues[1].as_f64().unwrap(), 1.0);
    assert!(residues[0].as_f64().unwrap() < 0.2);
    assert!(residues[2].as_f64().unwrap() < 0.2);
}

#[test]
fn split2x_of_an_ideal_thru_is_a_thru() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let mut body = String::from("# Hz S RI R 50\n");
    for i in 0..21 {
        let f = 1e6 * (i + 1) as f64;
        body.push_str(&format!("{f} 0 0 1 0 1 0 0 0\n"));
    }
    std::fs::write(dir.join("thru.s2p"), body).unwrap();
    ok(
        dir,
        &["split2x", "--in", "thru.s2p", "--out", "half.s2p"],
    );
    let half = read(&dir.join("half.s2p"));
    let data_row = half.lines().nth(2).unwrap();
    let fields: Vec<f64> = data_row
        .split_whitespace()
        .map(|t| t.parse().unwrap())
        .collect();
    assert!((fields[3] - 1.0).abs() < 1e-12, "s21 of the half: {data_row}");
    assert!(fields[1].abs() < 1e-12, "s11 of the half: {data_row}");
}

#[test]
fn exit_codes_distinguish_validation_from_numerics() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();

    // unknown preset: validation error, exit 1
    let out = run(
        dir,
        &["exactpoles", "--preset", "nope", "--out", "x.json"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown preset"));

    // unknown flag: clap's own exit code 2 is acceptable usage error
    let out = run(dir, &["identify", "--bogus"]);
    assert!(!out.status.success());

    // malformed input file: parse error names the line, exit 1
    std::fs::write(dir.join("bad.csv"), "freq_hz,real\n1,2\n").unwrap();
    let out = run(
        dir,
        &[
            "identify",
            "--in",
            "bad.csv",
            "--band",
            "1e6:1e8",
            "--out",
            "p.json",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));

    // numerically singular request: exit 2
    std::fs::write(
        dir.join("gamma_bad.s1p"),
        "# Hz S RI R 50\n1e6 -1 0\n2e6 -1 0\n",
    )
    .unwrap();
    std::fs::write(
        dir.join("block.s2p"),
        "# Hz S RI R 50\n1e6 0 0 1 0 1 0 0 0\n2e6 0 0 1 0 1 0 0 0\n",
    )
    .unwrap();
    let out = run(
        dir,
        &[
            "hinput",
            "--block",
            "block.s2p",
            "--gamma",
            "gamma_bad.s1p",
            "--out",
            "h.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("singular"));
}

#[test]
fn track_fails_loudly_when_the_parameter_is_missing() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(
        dir.join("resp.csv"),
        "# role=h_vn\nfreq_hz,real,imag\n1e6,1,0\n2e6,0.5,0\n3e6,0.4,0\n4e6,0.2,0\n\
         5e6,0.1,0\n6e6,0.05,0\n7e6,0.04,0\n8e6,0.03,0\n",
    )
    .unwrap();
    let out = run(
        dir,
        &[
            "track",
            "--glob",
            "resp.csv",
            "--param",
            "gm",
            "--band",
            "1e6:8e6",
            "--out",
            "t.json",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("missing the sweep parameter 'gm'"), "{stderr}");
}

#[test]
fn combiner_extends_the_block() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let thru = {
        let mut s = String::from("# Hz S RI R 50\n");
        for i in 0..5 {
            s.push_str(&format!("{} 0 0 1 0 1 0 0 0\n", 1e6 * (i + 1) as f64));
        }
        s
    };
    // matched 6 dB pad as the combiner path
    let pad = {
        let mut s = String::from("# Hz S RI R 50\n");
        for i in 0..5 {
            s.push_str(&format!("{} 0 0 0.5 0 0.5 0 0 0\n", 1e6 * (i + 1) as f64));
        }
        s
    };
    std::fs::write(dir.join("block.s2p"), thru).unwrap();
    std::fs::write(dir.join("combiner.s2p"), pad).unwrap();
    std::fs::write(
        dir.join("gamma.s1p"),
        "# Hz S RI R 50\n1e6 0 0\n2e6 0 0\n3e6 0 0\n4e6 0 0\n5e6 0 0\n",
    )
    .unwrap();
    ok(
        dir,
        &[
            "hinput",
            "--block",
            "block.s2p",
            "--gamma",
            "gamma.s1p",
            "--combiner",
            "combiner.s2p",
            "--out",
            "h.csv",
        ],
    );
    // thru block behind a matched 6 dB pad, matched load: H_input = 0.25
    let text = read(&dir.join("h.csv"));
    let row = text.lines().find(|l| l.starts_with("1000000,")).unwrap();
    let re: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!((re - 0.25).abs() < 1e-12, "{row}");
}
